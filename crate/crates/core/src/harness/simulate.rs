//! Single coupled runs exported as trajectory CSVs and field snapshots.

use serde::Serialize;

use super::converge::{initial_displacement, initial_state};
use super::io::{encode_snapshot, full_trajectory_table, trajectory_row, Table, TRAJECTORY_COLUMNS};
use super::{ensemble, Artifact, Check, ExperimentConfig};
use crate::error::{Error, Result};
use crate::full_system::{pseudo_energy, FullParams, FullState, FullSystem};
use crate::geometry::{BoundaryField, InteriorField};
use crate::limits::{parabolic_energy, step_wave, ParabolicState, ParabolicSystem};
use crate::noise::{whole_multiple, NoiseTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateRun {
    pub eps: f64,
    pub replica: u64,
    pub steps_full: usize,
    pub steps_limit: usize,
    pub final_norm_u: f64,
    pub final_norm_u_limit: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub experiment: &'static str,
    pub alpha: f64,
    /// `parabolic` below `α = 1`, `wave` above.
    pub limit: &'static str,
    pub seed: u64,
    pub runs: Vec<SimulateRun>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl SimulateReport {
    pub fn passed(&self) -> bool {
        self.passed
    }
}

/// Limit trajectory: velocities are backward differences and the energy
/// column holds the parabolic Lyapunov functional.
fn parabolic_table(cfg: &ExperimentConfig, states: &[ParabolicState]) -> Result<Table> {
    let geo = cfg.geometry()?;
    let dt = cfg.dt_limit;
    let mut table = Table::new(&TRAJECTORY_COLUMNS);
    for (n, s) in states.iter().enumerate() {
        let (v, theta) = if n == 0 {
            (geo.grid().zeros(), BoundaryField::ZERO)
        } else {
            let p = &states[n - 1];
            (
                s.u_bar.add_scaled(-1.0, &p.u_bar).scaled(1.0 / dt),
                (s.delta_bar - p.delta_bar).scaled(1.0 / dt),
            )
        };
        table.push(trajectory_row(&geo, s.t, &s.u_bar, &v, s.delta_bar, theta, parabolic_energy(s, &geo)));
    }
    Ok(table)
}

fn simulate_one(cfg: &ExperimentConfig, eps: f64, replica: u64) -> Result<(SimulateRun, Vec<Artifact>)> {
    let geo = cfg.geometry()?;
    let dt_full = cfg.dt_full(eps);
    let dt_lim = cfg.dt_limit;
    let model = cfg.noise_model(&[dt_full, dt_lim])?;
    let master = (cfg.t_end / model.master_dt()).round() as usize;
    let table = NoiseTable::generate(cfg.seed, replica, model.modes(), master);
    let u0 = initial_displacement(geo.grid());
    let tag = format!("eps{eps}_r{replica}");

    let params = FullParams::new(eps, cfg.alpha, dt_full, cfg.t_end)?.with_r(cfg.r)?;
    let full = FullSystem::new(&geo, &model, params)?;
    let traj = full.simulate(&initial_state(&geo), &mut table.cursor(&model))?;
    let energy = |s: &FullState| pseudo_energy(s, cfg.r, eps, &geo);
    let full_csv = full_trajectory_table(&geo, &traj.states, energy);
    let fields: Vec<&InteriorField> = traj.states.iter().map(|s| &s.u).collect();
    let snapshot = encode_snapshot(&fields)?;

    let steps = whole_multiple(cfg.t_end, dt_lim)
        .ok_or_else(|| Error::Config(format!("t_end = {} is not a whole number of dt_limit = {dt_lim}", cfg.t_end)))?;
    let (limit_csv, final_limit) = if cfg.alpha < 1.0 {
        let sys = ParabolicSystem::new(&geo, eps, cfg.alpha, dt_lim)?;
        let states = sys.simulate(&ParabolicState::new(u0, BoundaryField::ZERO), steps, &mut table.cursor(&model))?;
        let last = geo.norms(&states[states.len() - 1].u_bar)?.l2;
        (parabolic_table(cfg, &states)?, last)
    } else {
        let params = FullParams::new(eps, cfg.alpha, dt_lim, cfg.t_end)?.with_r(cfg.r)?;
        let wave = FullSystem::new(&geo, &model, params)?;
        let mut states = vec![initial_state(&geo)];
        for _ in 0..steps {
            states.push(step_wave(&states[states.len() - 1], &wave)?);
        }
        let last = geo.norms(&states[states.len() - 1].u)?.l2;
        (full_trajectory_table(&geo, &states, energy), last)
    };

    let files = vec![
        Artifact::csv(format!("trajectory_full_{tag}.csv"), &full_csv),
        Artifact::csv(format!("trajectory_limit_{tag}.csv"), &limit_csv),
        Artifact {
            name: format!("snapshot_full_{tag}.bin"),
            bytes: snapshot,
        },
    ];
    let run = SimulateRun {
        eps,
        replica,
        steps_full: traj.states.len() - 1,
        steps_limit: steps,
        final_norm_u: geo.norms(&traj.states[traj.states.len() - 1].u)?.l2,
        final_norm_u_limit: final_limit,
        files: files.iter().map(|f| f.name.clone()).collect(),
    };
    Ok((run, files))
}

/// One full run and one limit run per ε and replica, sharing the noise path.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<(SimulateReport, Vec<Artifact>)> {
    cfg.validate()?;
    let replicas = cfg.replicas()?;
    let mut runs = Vec::new();
    let mut files = Vec::new();
    for &eps in &cfg.eps_ladder {
        for (run, mut f) in ensemble(replicas, eps, cfg.seed, |k| simulate_one(cfg, eps, k))? {
            runs.push(run);
            files.append(&mut f);
        }
    }
    let finite = runs.iter().all(|r| r.final_norm_u.is_finite() && r.final_norm_u_limit.is_finite());
    let checks = vec![Check::at_most("finite_runs", if finite { 0.0 } else { 1.0 }, 0.0)];
    let report = SimulateReport {
        experiment: "simulate",
        alpha: cfg.alpha,
        limit: if cfg.alpha < 1.0 { "parabolic" } else { "wave" },
        seed: cfg.seed,
        runs,
        passed: finite,
        checks,
    };
    Ok((report, files))
}
