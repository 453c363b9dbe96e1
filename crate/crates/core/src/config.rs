//! Scenario configuration: a flat `key = value` file format.
//!
//! ```text
//! # desk-scale practical scenario
//! M = 8
//! N = 2
//! L = 2
//! K = 4
//! seed = 11
//! loss_sample_range = 0.05, 0.5
//! periodicity_set = 1, 2, 3, 4, 5
//! traffic_model = periodic
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficKind {
    GenerateAtWill,
    Periodic,
}

impl FromStr for TrafficKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "generate_at_will" | "gaw" | "at_will" => Ok(Self::GenerateAtWill),
            "periodic" => Ok(Self::Periodic),
            other => Err(Error::Config(format!("unknown traffic model `{other}`"))),
        }
    }
}

/// Ideal: lossless links and generate-at-will traffic. Practical: lossy links
/// and periodic traffic whose periods the schedulers never see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvMode {
    Ideal,
    Practical,
}

impl std::fmt::Display for EnvMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ideal => "ideal",
            Self::Practical => "practical",
        })
    }
}

impl FromStr for EnvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ideal" => Ok(Self::Ideal),
            "practical" => Ok(Self::Practical),
            other => Err(Error::Config(format!("unknown environment mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of IoT devices (M).
    pub devices: usize,
    /// Number of relays (N).
    pub relays: usize,
    /// Access-link channels per relay (L).
    pub relay_channels: usize,
    /// Backhaul channels at the base station (K).
    pub tbs_channels: usize,
    /// Explicit per-relay group sizes; uniform split when absent.
    pub groups: Option<Vec<usize>>,
    pub seed: u64,
    pub loss_sample_range: (f64, f64),
    pub loss_update_range: (f64, f64),
    pub periodicity_set: Vec<u32>,
    pub traffic_model: TrafficKind,
    /// Episode horizon in slots (T).
    pub horizon: u32,
    pub area: Option<(f64, f64)>,
    pub loss_sample: Option<Vec<f64>>,
    pub loss_update: Option<Vec<f64>>,
    pub periodicity: Option<Vec<u32>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            devices: 8,
            relays: 2,
            relay_channels: 2,
            tbs_channels: 4,
            groups: None,
            seed: 0,
            loss_sample_range: (0.05, 0.5),
            loss_update_range: (0.05, 0.5),
            periodicity_set: vec![1, 2, 3, 4, 5],
            traffic_model: TrafficKind::Periodic,
            horizon: 20,
            area: Some((1000.0, 1000.0)),
            loss_sample: None,
            loss_update: None,
            periodicity: None,
        }
    }
}

impl ScenarioConfig {
    /// Default network of the long-run experiments: 30 devices split evenly
    /// over 3 relays, 4 relay channels, 10 base-station channels.
    pub fn full_scale() -> Self {
        Self {
            devices: 30,
            relays: 3,
            relay_channels: 4,
            tbs_channels: 10,
            ..Self::default()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    /// Force the link and traffic assumptions of `mode`.
    pub fn with_mode(mut self, mode: EnvMode) -> Result<Self> {
        match mode {
            EnvMode::Ideal => {
                self.traffic_model = TrafficKind::GenerateAtWill;
                self.loss_sample_range = (0.0, 0.0);
                self.loss_update_range = (0.0, 0.0);
                self.loss_sample = None;
                self.loss_update = None;
            }
            EnvMode::Practical => {
                self.traffic_model = TrafficKind::Periodic;
                let positive = |r: (f64, f64)| r.0 > 0.0;
                let explicit_ok =
                    |v: &Option<Vec<f64>>| v.as_ref().is_none_or(|v| v.iter().all(|&p| p > 0.0));
                if !(positive(self.loss_sample_range) || self.loss_sample.is_some())
                    || !(positive(self.loss_update_range) || self.loss_update.is_some())
                    || !explicit_ok(&self.loss_sample)
                    || !explicit_ok(&self.loss_update)
                {
                    return Err(Error::Config(
                        "practical mode requires strictly positive loss probabilities".into(),
                    ));
                }
            }
        }
        Ok(self)
    }

    pub fn to_config_string(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
        }
        let mut s = String::new();
        let _ = writeln!(s, "M = {}", self.devices);
        let _ = writeln!(s, "N = {}", self.relays);
        let _ = writeln!(s, "L = {}", self.relay_channels);
        let _ = writeln!(s, "K = {}", self.tbs_channels);
        if let Some(g) = &self.groups {
            let _ = writeln!(s, "groups = {}", join(g));
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(
            s,
            "loss_sample_range = {}, {}",
            self.loss_sample_range.0, self.loss_sample_range.1
        );
        let _ = writeln!(
            s,
            "loss_update_range = {}, {}",
            self.loss_update_range.0, self.loss_update_range.1
        );
        let _ = writeln!(s, "periodicity_set = {}", join(&self.periodicity_set));
        let traffic = match self.traffic_model {
            TrafficKind::GenerateAtWill => "generate_at_will",
            TrafficKind::Periodic => "periodic",
        };
        let _ = writeln!(s, "traffic_model = {traffic}");
        let _ = writeln!(s, "T = {}", self.horizon);
        if let Some((l, b)) = self.area {
            let _ = writeln!(s, "area_l = {l}");
            let _ = writeln!(s, "area_b = {b}");
        }
        if let Some(v) = &self.loss_sample {
            let _ = writeln!(s, "loss_sample = {}", join(v));
        }
        if let Some(v) = &self.loss_update {
            let _ = writeln!(s, "loss_update = {}", join(v));
        }
        if let Some(v) = &self.periodicity {
            let _ = writeln!(s, "periodicity = {}", join(v));
        }
        s
    }
}

fn parse_list<T: FromStr>(value: &str, line: usize) -> Result<Vec<T>> {
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse list element `{s}`"),
            })
        })
        .collect()
}

fn parse_scalar<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value `{}` for `{key}`", value.trim()),
    })
}

fn parse_range(value: &str, line: usize) -> Result<(f64, f64)> {
    match parse_list::<f64>(value, line)?.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        [p] => Ok((*p, *p)),
        _ => Err(Error::Parse {
            line,
            msg: "a range needs two comma-separated values".into(),
        }),
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let (mut area_l, mut area_b) = (None, None);
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            match key {
                "M" => cfg.devices = parse_scalar(value, line, key)?,
                "N" => cfg.relays = parse_scalar(value, line, key)?,
                "L" => cfg.relay_channels = parse_scalar(value, line, key)?,
                "K" => cfg.tbs_channels = parse_scalar(value, line, key)?,
                "groups" => cfg.groups = Some(parse_list(value, line)?),
                "seed" => cfg.seed = parse_scalar(value, line, key)?,
                "loss_sample_range" => cfg.loss_sample_range = parse_range(value, line)?,
                "loss_update_range" => cfg.loss_update_range = parse_range(value, line)?,
                "periodicity_set" => cfg.periodicity_set = parse_list(value, line)?,
                "traffic_model" => {
                    cfg.traffic_model = value.parse().map_err(|e: Error| Error::Parse {
                        line,
                        msg: e.to_string(),
                    })?
                }
                "T" => cfg.horizon = parse_scalar(value, line, key)?,
                "area_l" => area_l = Some(parse_scalar(value, line, key)?),
                "area_b" => area_b = Some(parse_scalar(value, line, key)?),
                "loss_sample" => cfg.loss_sample = Some(parse_list(value, line)?),
                "loss_update" => cfg.loss_update = Some(parse_list(value, line)?),
                "periodicity" => cfg.periodicity = Some(parse_list(value, line)?),
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        match (area_l, area_b) {
            (Some(l), Some(b)) => cfg.area = Some((l, b)),
            (Some(l), None) => cfg.area = Some((l, l)),
            (None, Some(b)) => cfg.area = Some((b, b)),
            (None, None) => {}
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "\
# comment line
M = 6
N = 2   # trailing comment
L = 1
K = 3
groups = 4, 2
seed = 9
loss_sample_range = 0.1, 0.2
loss_update_range = [0.0, 0.3]
periodicity_set = 2, 4
traffic_model = generate_at_will
T = 10
area_l = 500
area_b = 300
loss_sample = 0.1, 0.1, 0.1, 0.1, 0.1, 0.1
periodicity = 2,2,2,4,4,4
";
        let cfg: ScenarioConfig = text.parse().unwrap();
        assert_eq!(cfg.devices, 6);
        assert_eq!(cfg.groups, Some(vec![4, 2]));
        assert_eq!(cfg.loss_update_range, (0.0, 0.3));
        assert_eq!(cfg.periodicity_set, vec![2, 4]);
        assert_eq!(cfg.traffic_model, TrafficKind::GenerateAtWill);
        assert_eq!(cfg.horizon, 10);
        assert_eq!(cfg.area, Some((500.0, 300.0)));
        assert_eq!(cfg.loss_sample.as_ref().map(Vec::len), Some(6));
        assert!(cfg.loss_update.is_none());

        let back: ScenarioConfig = cfg.to_config_string().parse().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_key_and_garbage() {
        let err = "M = 3\nfoo = 1\n".parse::<ScenarioConfig>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!("M 3".parse::<ScenarioConfig>().is_err());
        assert!("M = three".parse::<ScenarioConfig>().is_err());
    }

    #[test]
    fn modes_force_link_assumptions() {
        let ideal = ScenarioConfig::default().with_mode(EnvMode::Ideal).unwrap();
        assert_eq!(ideal.traffic_model, TrafficKind::GenerateAtWill);
        assert_eq!(ideal.loss_sample_range, (0.0, 0.0));

        let practical = ScenarioConfig::default()
            .with_mode(EnvMode::Practical)
            .unwrap();
        assert_eq!(practical.traffic_model, TrafficKind::Periodic);

        let lossless = ScenarioConfig {
            loss_sample_range: (0.0, 0.3),
            ..ScenarioConfig::default()
        };
        assert!(lossless.with_mode(EnvMode::Practical).is_err());
    }
}
