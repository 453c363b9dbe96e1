//! Per-slot, per-device trace export.

use std::io::Write;

use super::state::{AoiSnapshot, StepOutcome};
use crate::error::Result;

pub const TRACE_HEADER: &str =
    "slot,device,aoi_relay,aoi_tbs,sampled,updated,sample_lost,update_lost";

/// Write one row per device for every `(snapshot, outcome)` pair, where the
/// snapshot is the state the decision was taken in.
pub fn write_trace<W: Write>(mut out: W, steps: &[(AoiSnapshot, StepOutcome)]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    let b = |v: bool| u8::from(v);
    for (snap, outcome) in steps {
        for d in 0..snap.devices() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                snap.slot,
                d,
                snap.aoi_relay[d],
                snap.aoi_tbs[d],
                b(outcome.sampled[d]),
                b(outcome.updated[d]),
                b(outcome.sample_lost[d]),
                b(outcome.update_lost[d]),
            )?;
        }
    }
    Ok(())
}
