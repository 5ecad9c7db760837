//! Sweeps the spreading rate on the SIS baseline and writes the table as CSV
//! to standard output.

use campaignctl::experiments::{run_sweep, write_sweep_csv, SweepParam, SweepSpec};
use campaignctl::{Error, SisParams, SolverOptions, Strategy};

pub fn main() -> campaignctl::Result<()> {
    let spec = SweepSpec {
        model_template: SisParams::default().into(),
        parameter: SweepParam::Beta,
        values: vec![0.25, 0.5, 1.0, 1.5, 2.0],
        strategies: vec![Strategy::NoControl, Strategy::Optimal(SolverOptions::shooting())],
    };
    let rows = run_sweep(&spec)?;
    write_sweep_csv(&rows, &mut std::io::stdout()).map_err(|source| Error::Io {
        path: "<stdout>".into(),
        source,
    })?;
    Ok(())
}
