//! Plain-text parameter dump with an architecture header.
//!
//! Values are written as the hexadecimal bit pattern of each `f64`, so a
//! save/load cycle reproduces every parameter bit for bit.
//!
//! ```text
//! relay-aoi checkpoint v1
//! mlp actor 4 68 256 256 16
//! 3fb2... bf01... ...
//! vec log_std 16
//! 0000000000000000 ...
//! end
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::mlp::Mlp;
use crate::error::{Error, Result};

const MAGIC: &str = "relay-aoi checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Mlp(Mlp),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    entries: Vec<(String, Tensor)>,
}

fn write_values<W: Write>(out: &mut W, values: &[f64]) -> Result<()> {
    let mut line = String::with_capacity(values.len() * 17);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        line.push_str(&format!("{:016x}", v.to_bits()));
    }
    writeln!(out, "{line}")?;
    Ok(())
}

fn parse_values(line: &str, expected: usize) -> Result<Vec<f64>> {
    let values = line
        .split_ascii_whitespace()
        .map(|tok| {
            u64::from_str_radix(tok, 16)
                .map(f64::from_bits)
                .map_err(|_| Error::Checkpoint(format!("bad value `{tok}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, tensor: Tensor) {
        assert!(
            !name.is_empty() && !name.contains(char::is_whitespace),
            "entry names must be single tokens"
        );
        self.entries.push((name.to_owned(), tensor));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn mlp(&self, name: &str) -> Result<&Mlp> {
        match self.get(name) {
            Some(Tensor::Mlp(m)) => Ok(m),
            _ => Err(Error::Checkpoint(format!("missing network `{name}`"))),
        }
    }

    pub fn vector(&self, name: &str) -> Result<&[f64]> {
        match self.get(name) {
            Some(Tensor::Vector(v)) => Ok(v),
            _ => Err(Error::Checkpoint(format!("missing vector `{name}`"))),
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MAGIC}")?;
        for (name, tensor) in &self.entries {
            match tensor {
                Tensor::Mlp(net) => {
                    let sizes: Vec<String> = net.sizes().iter().map(usize::to_string).collect();
                    writeln!(out, "mlp {name} {} {}", sizes.len(), sizes.join(" "))?;
                    write_values(&mut out, net.params())?;
                }
                Tensor::Vector(v) => {
                    writeln!(out, "vec {name} {}", v.len())?;
                    write_values(&mut out, v)?;
                }
            }
        }
        writeln!(out, "end")?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Checkpoint("unexpected end of file".into()))
        };
        if next()?.trim() != MAGIC {
            return Err(Error::Checkpoint("not a relay-aoi checkpoint".into()));
        }
        let mut ckpt = Checkpoint::new();
        loop {
            let header = next()?;
            let fields: Vec<&str> = header.split_ascii_whitespace().collect();
            match fields.as_slice() {
                ["end"] => return Ok(ckpt),
                ["mlp", name, count, sizes @ ..] => {
                    let count: usize = count
                        .parse()
                        .map_err(|_| Error::Checkpoint(format!("bad layer count in `{header}`")))?;
                    let sizes = sizes
                        .iter()
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::Checkpoint(format!("bad sizes in `{header}`")))?;
                    if sizes.len() != count || count < 2 || sizes.contains(&0) {
                        return Err(Error::Checkpoint(format!("bad architecture `{header}`")));
                    }
                    let mut net = Mlp::zeros(&sizes);
                    let values = parse_values(&next()?, net.params().len())?;
                    net.params_mut().copy_from_slice(&values);
                    ckpt.push(name, Tensor::Mlp(net));
                }
                ["vec", name, len] => {
                    let len: usize = len
                        .parse()
                        .map_err(|_| Error::Checkpoint(format!("bad length in `{header}`")))?;
                    let values = parse_values(&next()?, len)?;
                    ckpt.push(name, Tensor::Vector(values));
                }
                _ => return Err(Error::Checkpoint(format!("unexpected line `{header}`"))),
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bit_exact_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::new(&[5, 7, 3], 0.01, &mut rng);
        let mut ckpt = Checkpoint::new();
        ckpt.push("actor", Tensor::Mlp(net.clone()));
        ckpt.push(
            "log_std",
            Tensor::Vector(vec![-0.0, 1e-300, f64::MIN_POSITIVE, -3.25]),
        );
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.mlp("actor").unwrap(), &net);
        let v = back.vector("log_std").unwrap();
        assert_eq!(v[0].to_bits(), (-0.0f64).to_bits());
        assert_eq!(v[1], 1e-300);
        assert!(back.mlp("critic").is_err());
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(Checkpoint::read_from("hello\n".as_bytes()).is_err());
        let truncated = format!("{MAGIC}\nmlp a 2 2 1\n0000000000000000\nend\n");
        assert!(Checkpoint::read_from(truncated.as_bytes()).is_err());
        let no_end = format!("{MAGIC}\nvec a 1\n0000000000000000\n");
        assert!(Checkpoint::read_from(no_end.as_bytes()).is_err());
    }
}
