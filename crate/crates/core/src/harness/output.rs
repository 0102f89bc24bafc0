//! CSV writers for sweep results and iteration traces.

use std::io::Write;
use std::path::Path;

use crate::alternating::IterationTrace;
use crate::error::Result;
use crate::units::watts_to_dbm;

use super::sweep::ResultRow;

pub const RESULT_HEADER: [&str; 8] = [
    "sweep_variable",
    "sweep_value",
    "method",
    "mean_power_dbm",
    "std_power_dbm",
    "trials",
    "mean_iterations",
    "seed",
];

pub const TRACE_HEADER: [&str; 4] = ["iteration", "power_dbm", "f_ow", "f_ophi"];

pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.sweep_variable.as_str().to_string(),
            r.sweep_value.to_string(),
            r.method.as_str().to_string(),
            r.mean_power_dbm.to_string(),
            r.std_power_dbm.to_string(),
            r.trials.to_string(),
            r.mean_iterations.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_rows(rows, std::fs::File::create(path)?)
}

/// One line per beamformer step. `f_ophi` is empty for the last step when no
/// phase update followed it.
pub fn write_trace<W: Write>(trace: &IterationTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for (j, p) in trace.powers.iter().enumerate() {
        w.write_record([
            (j + 1).to_string(),
            watts_to_dbm(*p).to_string(),
            trace.f_ow_values[j].to_string(),
            trace
                .f_ophi_values
                .get(j)
                .map(|f| f.to_string())
                .unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
