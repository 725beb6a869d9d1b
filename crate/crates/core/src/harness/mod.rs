//! Experiment orchestration: config, Monte-Carlo ensembles, audits and the
//! files each run leaves behind.
//!
//! Every experiment returns a typed report holding a list of [`Check`]s and
//! the tables it measured. [`run`] wraps that into an [`Outcome`] which can be
//! written to a directory as `report.json` plus CSV (and binary) artifacts.

mod audits;
mod config;
mod converge;
mod io;
mod simulate;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub use audits::{
    run_bound_check, run_energy_audit, run_ou_check, run_split_check, split_initial_state, BoundReport, EnergyReport,
    OuReport, SplitReport,
};
pub use config::{Experiment, ExperimentConfig, NoiseConfig};
pub use converge::{initial_state, min_slope, run_convergence, space_time_error, ConvergenceReport, EpsError, COUPLING_LABEL};
pub use io::{
    decode_snapshot, encode_snapshot, full_trajectory_table, probe, trajectory_row, Table, SNAPSHOT_MAGIC,
    TRAJECTORY_COLUMNS,
};
pub use simulate::{run_simulate, SimulateReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Not evaluable for this configuration, e.g. a slope from one point.
    Skipped,
}

/// One pass/fail verdict with what was measured against what.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: Option<f64>,
    pub threshold: f64,
    pub standard_error: Option<f64>,
    pub status: Status,
}

impl Check {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::verdict(name, measured, threshold, measured <= threshold)
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::verdict(name, measured, threshold, measured >= threshold)
    }

    /// Passes when `measured < threshold`.
    pub fn below(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::verdict(name, measured, threshold, measured < threshold)
    }

    pub fn skipped(name: impl Into<String>, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured: None,
            threshold,
            standard_error: None,
            status: Status::Skipped,
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.standard_error = Some(se);
        self
    }

    fn verdict(name: impl Into<String>, measured: f64, threshold: f64, ok: bool) -> Self {
        Self {
            name: name.into(),
            measured: Some(measured),
            threshold,
            standard_error: None,
            status: if ok && measured.is_finite() { Status::Pass } else { Status::Fail },
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(Check::passed)
}

/// A file produced by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, table: &Table) -> Self {
        Self {
            name: name.into(),
            bytes: table.to_csv().into_bytes(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: Experiment,
    pub passed: bool,
    pub report: serde_json::Value,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    fn new<R: Serialize>(experiment: Experiment, passed: bool, report: &R, artifacts: Vec<Artifact>) -> Result<Self> {
        Ok(Self {
            experiment,
            passed,
            report: serde_json::to_value(report)?,
            artifacts,
        })
    }

    /// Writes `report.json` and every artifact into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(&self.report)?;
        json.push('\n');
        std::fs::write(dir.join("report.json"), json)?;
        for a in &self.artifacts {
            std::fs::write(dir.join(&a.name), &a.bytes)?;
        }
        Ok(())
    }
}

/// Runs the experiment named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let exp = cfg.experiment()?;
    match exp {
        Experiment::Converge => {
            let r = run_convergence(cfg)?;
            let files = vec![Artifact::csv("converge.csv", &r.table())];
            Outcome::new(exp, r.passed(), &r, files)
        }
        Experiment::EnergyAudit => {
            let r = run_energy_audit(cfg)?;
            let files = vec![Artifact::csv("energy_audit.csv", &r.table())];
            Outcome::new(exp, r.passed(), &r, files)
        }
        Experiment::OuCheck => {
            let r = run_ou_check(cfg)?;
            let files = vec![Artifact::csv("ou_check.csv", &r.table())];
            Outcome::new(exp, r.passed(), &r, files)
        }
        Experiment::SplitCheck => {
            let r = run_split_check(cfg)?;
            let files = vec![Artifact::csv("split_check.csv", &r.table())];
            Outcome::new(exp, r.passed(), &r, files)
        }
        Experiment::BoundCheck => {
            let r = run_bound_check(cfg)?;
            let files = vec![
                Artifact::csv("bound_check.csv", &r.kinetic_table()),
                Artifact::csv("uniform_bound.csv", &r.uniform_table()),
            ];
            Outcome::new(exp, r.passed(), &r, files)
        }
        Experiment::Simulate => {
            let (r, files) = run_simulate(cfg)?;
            Outcome::new(exp, r.passed(), &r, files)
        }
    }
}

/// Runs `f` for replicas `0..count` on the worker pool and returns results in
/// replica order. A failing replica reports the lowest failing id, with
/// blow-ups tagged by `(eps, seed, replica)`.
pub fn ensemble<T, F>(count: usize, eps: f64, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..count as u64).into_par_iter().map(&f).collect();
    let mut out = Vec::with_capacity(count);
    for (replica, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => out.push(x),
            Err(Error::BlowUp { t }) => {
                return Err(Error::ReplicaBlowUp {
                    eps,
                    seed,
                    replica: replica as u64,
                    t,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_keeps_replica_order() {
        let xs = ensemble(1000, 0.1, 0, |k| Ok(k * 2)).unwrap();
        assert!(xs.iter().enumerate().all(|(k, x)| *x == 2 * k as u64));
    }

    #[test]
    fn ensemble_reports_the_first_blow_up() {
        let err = ensemble(100, 0.125, 9, |k| if k % 7 == 3 { Err(Error::BlowUp { t: 0.5 }) } else { Ok(k) })
            .unwrap_err();
        match err {
            Error::ReplicaBlowUp { eps, seed, replica, t } => {
                assert_eq!((eps, seed, replica, t), (0.125, 9, 3, 0.5));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn skipped_checks_do_not_fail_a_report() {
        let checks = [Check::at_most("a", 1.0, 2.0), Check::skipped("b", 0.0)];
        assert!(all_passed(&checks));
        assert!(!all_passed(&[Check::at_least("c", f64::NAN, 0.0)]));
    }
}
