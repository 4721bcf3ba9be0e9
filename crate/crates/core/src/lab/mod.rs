//! Experiment driver: configuration, resumable `h`-sweeps, power-law and
//! exponent fits, and spectral-gap counting.

mod config;
mod fit;
mod gaps;
mod landau;
mod sweep;

use std::io::Write;

pub use config::{
    resolve_workers, EnvelopeConfig, ExperimentConfig, FitTarget, GridConfig, SolverConfig, SweepConfig, WORKERS_ENV,
};
pub use fit::{exponent_fit, fit_powers, ExponentFit, FitReport};
pub use landau::{landau_check, numeric_landau, LandauCheck, LandauRow, NumericLandau};
pub use gaps::{count_gaps, default_min_gap, interval_for_band, GapReport};
pub use sweep::{
    fit_data, fit_records, load_sweep_csv, read_sweep_csv, run_sweep, run_sweep_with, sweep_report, write_sweep_csv,
    Check, Prepared, SweepOutcome, SweepRecord, SweepReport, WellPoint,
};

use crate::error::Result;
use crate::oscillator::QuasimodeBundle;

/// `s,t,abs` rows of a sampled quasimode, `t` running fastest.
pub fn write_quasimode_csv<W: Write>(w: W, bundle: &QuasimodeBundle<f64>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["s", "t", "abs"])?;
    let g = &bundle.grid;
    for i in 0..g.ns {
        for j in 0..g.nt {
            let v = bundle.samples[g.index(i, j)].norm();
            wr.write_record([g.s(i).to_string(), g.t(j).to_string(), v.to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}
