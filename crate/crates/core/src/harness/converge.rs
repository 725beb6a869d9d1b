//! Pathwise distance between the ε-system and its limit along an ε-ladder.

use serde::Serialize;

use super::{all_passed, ensemble, Check, ExperimentConfig, Table};
use crate::error::{Error, Result};
use crate::full_system::{FullParams, FullState, FullSystem};
use crate::geometry::{BoundaryField, Geometry, Grid1D, InteriorField};
use crate::limits::{step_wave, ParabolicState, ParabolicSystem};
use crate::noise::{NoiseModel, NoiseTable};
use crate::stats::{loglog_fit, mean_se, MeanSe};

pub const COUPLING_LABEL: &str =
    "pathwise-coupled surrogate: full and limit systems share one realized Brownian path; \
     convergence in distribution is not measured directly";

/// Smallest accepted log-log slope: `0.8 α − 0.05` below `α = 1` and `0.8`
/// above, where the limit rate is `O(ε)`.
pub fn min_slope(alpha: f64) -> f64 {
    if alpha < 1.0 {
        0.8 * alpha - 0.05
    } else {
        0.8
    }
}

/// Initial displacement shared by the coupled runs.
pub fn initial_displacement(grid: &Grid1D) -> InteriorField {
    grid.sample(|x| (std::f64::consts::PI * x).sin())
}

/// `sin(πx)` at rest with `θ = ∂u/∂n = −π` at both ends, so the flux
/// constraint holds at `t = 0`.
pub fn initial_state(geo: &Geometry) -> FullState {
    FullState::at_rest(initial_displacement(geo.grid()), BoundaryField::splat(-std::f64::consts::PI))
}

/// `sqrt(Σₙ dt · weight · Σᵢ |aᵢⁿ − bᵢⁿ|²)` over `n = 1..` on the coarser of the
/// two time grids; the finer series is read at the nearest recorded time.
pub fn space_time_error(dt_a: f64, a: &[Vec<f64>], dt_b: f64, b: &[Vec<f64>], weight: f64) -> f64 {
    let (dt_c, coarse, dt_f, fine) = if dt_a >= dt_b { (dt_a, a, dt_b, b) } else { (dt_b, b, dt_a, a) };
    let mut sum = 0.0;
    for (n, row) in coarse.iter().enumerate().skip(1) {
        let m = ((n as f64 * dt_c / dt_f).round() as usize).min(fine.len() - 1);
        let d: f64 = row.iter().zip(&fine[m]).map(|(x, y)| (x - y).powi(2)).sum();
        sum += dt_c * weight * d;
    }
    sum.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsError {
    pub eps: f64,
    pub err_u: MeanSe,
    pub err_delta: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub experiment: &'static str,
    pub label: &'static str,
    pub alpha: f64,
    /// `parabolic` below `α = 1`, `wave` above.
    pub limit: &'static str,
    pub replicas: usize,
    pub seed: u64,
    pub dt_full_factor: f64,
    pub dt_limit: f64,
    pub t_end: f64,
    pub per_eps: Vec<EpsError>,
    /// `None` when the ladder has a single rung.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub slope_defined: bool,
    pub slope_delta: Option<f64>,
    pub min_slope: f64,
    pub errors_decreasing: bool,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.passed
    }

    /// Columns `eps, err_u_mean, err_u_se, err_delta_mean, err_delta_se`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["eps", "err_u_mean", "err_u_se", "err_delta_mean", "err_delta_se"]);
        for e in &self.per_eps {
            t.push(vec![e.eps, e.err_u.mean, e.err_u.se, e.err_delta.mean, e.err_delta.se]);
        }
        t
    }
}

struct Paths {
    u: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Paths {
    fn with_capacity(n: usize) -> Self {
        Self {
            u: Vec::with_capacity(n),
            delta: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, u: &InteriorField, delta: BoundaryField) {
        self.u.push(u.values().to_vec());
        self.delta.push(vec![delta.left, delta.right]);
    }
}

/// Both errors of one replica at one ε.
fn coupled_replica(cfg: &ExperimentConfig, eps: f64, model: &NoiseModel, replica: u64) -> Result<(f64, f64)> {
    let geo = cfg.geometry()?;
    let dt_full = cfg.dt_full(eps);
    let dt_lim = cfg.dt_limit;
    let master = (cfg.t_end / model.master_dt()).round() as usize;
    let table = NoiseTable::generate(cfg.seed, replica, model.modes(), master);
    let u0 = initial_displacement(geo.grid());

    let params = FullParams::new(eps, cfg.alpha, dt_full, cfg.t_end)?.with_r(cfg.r)?;
    let full = FullSystem::new(&geo, model, params)?;
    let mut full_paths = Paths::with_capacity(params.steps()? + 1);
    let mut full_cursor = table.cursor(model);
    full.run_with(&initial_state(&geo), &mut full_cursor, |s, _| {
        full_paths.push(&s.u, s.delta)
    })?;

    let steps = crate::noise::whole_multiple(cfg.t_end, dt_lim)
        .ok_or_else(|| Error::Config(format!("t_end = {} is not a whole number of dt_limit = {dt_lim}", cfg.t_end)))?;
    let mut lim_paths = Paths::with_capacity(steps + 1);
    if cfg.alpha < 1.0 {
        let sys = ParabolicSystem::new(&geo, eps, cfg.alpha, dt_lim)?;
        let mut cursor = table.cursor(model);
        let mut s = ParabolicState::new(u0, BoundaryField::ZERO);
        lim_paths.push(&s.u_bar, s.delta_bar);
        for _ in 0..steps {
            let inc = cursor.next_increment(dt_lim)?;
            s = sys.step(&s, &inc)?;
            lim_paths.push(&s.u_bar, s.delta_bar);
        }
        if cursor.totals() != full_cursor.totals() {
            return Err(Error::Contract("coupled runs consumed different noise".into()));
        }
    } else {
        let params = FullParams::new(eps, cfg.alpha, dt_lim, cfg.t_end)?.with_r(cfg.r)?;
        let wave = FullSystem::new(&geo, model, params)?;
        let mut s = initial_state(&geo);
        lim_paths.push(&s.u, s.delta);
        for _ in 0..steps {
            s = step_wave(&s, &wave)?;
            lim_paths.push(&s.u, s.delta);
        }
    }

    let h = geo.grid().h();
    Ok((
        space_time_error(dt_full, &full_paths.u, dt_lim, &lim_paths.u, h),
        space_time_error(dt_full, &full_paths.delta, dt_lim, &lim_paths.delta, 1.0),
    ))
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let replicas = cfg.replicas()?;
    let mut per_eps = Vec::with_capacity(cfg.eps_ladder.len());
    for &eps in &cfg.eps_ladder {
        let model = cfg.noise_model(&[cfg.dt_full(eps), cfg.dt_limit])?;
        let errs = ensemble(replicas, eps, cfg.seed, |k| coupled_replica(cfg, eps, &model, k))?;
        let eu: Vec<f64> = errs.iter().map(|e| e.0).collect();
        let ed: Vec<f64> = errs.iter().map(|e| e.1).collect();
        per_eps.push(EpsError {
            eps,
            err_u: mean_se(&eu),
            err_delta: mean_se(&ed),
        });
    }

    let eps: Vec<f64> = per_eps.iter().map(|e| e.eps).collect();
    let mu: Vec<f64> = per_eps.iter().map(|e| e.err_u.mean).collect();
    let md: Vec<f64> = per_eps.iter().map(|e| e.err_delta.mean).collect();
    let fit = loglog_fit(&eps, &mu);
    let fit_delta = loglog_fit(&eps, &md);
    let threshold = min_slope(cfg.alpha);
    let decreasing = mu.windows(2).all(|w| w[1] < w[0]);

    let mut checks = Vec::new();
    match fit {
        Some(f) => checks.push(Check::at_least("slope_u", f.slope, threshold)),
        None => checks.push(Check::skipped("slope_u", threshold)),
    }
    if mu.len() > 1 {
        let worst = mu.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        checks.push(Check::below("errors_decreasing", worst, 1.0));
    } else {
        checks.push(Check::skipped("errors_decreasing", 1.0));
    }
    let passed = all_passed(&checks);

    Ok(ConvergenceReport {
        experiment: "converge",
        label: COUPLING_LABEL,
        alpha: cfg.alpha,
        limit: if cfg.alpha < 1.0 { "parabolic" } else { "wave" },
        replicas,
        seed: cfg.seed,
        dt_full_factor: cfg.dt_full_factor,
        dt_limit: cfg.dt_limit,
        t_end: cfg.t_end,
        per_eps,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r2: fit.map(|f| f.r2),
        slope_defined: fit.is_some(),
        slope_delta: fit_delta.map(|f| f.slope),
        min_slope: threshold,
        errors_decreasing: decreasing,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Experiment, Status};

    #[test]
    fn min_slope_matches_the_acceptance_thresholds() {
        assert!((min_slope(0.5) - 0.35).abs() < 1e-12);
        assert!((min_slope(0.75) - 0.55).abs() < 1e-12);
        assert_eq!(min_slope(2.0), 0.8);
    }

    #[test]
    fn space_time_error_of_a_constant_offset() {
        // offset 1 on 3 nodes over [0, 1]: sqrt(1 · h · 3)
        let a: Vec<Vec<f64>> = (0..=10).map(|_| vec![1.0; 3]).collect();
        let b: Vec<Vec<f64>> = (0..=40).map(|_| vec![0.0; 3]).collect();
        let e = space_time_error(0.1, &a, 0.025, &b, 0.25);
        assert!((e - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((space_time_error(0.025, &b, 0.1, &a, 0.25) - e).abs() < 1e-15);
    }

    #[test]
    fn space_time_error_samples_the_nearest_time() {
        // a(t) = t on a grid of 0.3, b(t) = t on a grid of 0.1: identical at shared times
        let a: Vec<Vec<f64>> = (0..=3).map(|k| vec![0.3 * k as f64]).collect();
        let b: Vec<Vec<f64>> = (0..=9).map(|k| vec![0.1 * k as f64]).collect();
        assert!(space_time_error(0.3, &a, 0.1, &b, 1.0) < 1e-12);
    }

    #[test]
    fn single_rung_ladder_has_no_slope() {
        let mut cfg = ExperimentConfig::new(Experiment::Converge);
        cfg.eps_ladder = vec![0.25];
        cfg.n_interior = 16;
        cfg.noise.modes = 8;
        cfg.replicas = Some(2);
        let r = run_convergence(&cfg).unwrap();
        assert_eq!(r.slope, None);
        assert!(!r.slope_defined);
        assert!(r.checks.iter().all(|c| c.status == Status::Skipped));
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["slope"].is_null());
        assert_eq!(r.table().rows.len(), 1);
    }

    #[test]
    fn zero_noise_parabolic_errors_shrink_with_eps() {
        let mut cfg = ExperimentConfig::new(Experiment::Converge);
        cfg.eps_ladder = vec![0.25, 0.125, 0.0625];
        cfg.n_interior = 16;
        cfg.noise = cfg.noise.silenced();
        cfg.noise.modes = 8;
        cfg.replicas = Some(2);
        let r = run_convergence(&cfg).unwrap();
        assert!(r.errors_decreasing, "{:?}", r.per_eps);
        assert!(r.slope.unwrap() >= 0.35, "{:?}", r.slope);
        assert!(r.per_eps.iter().all(|e| e.err_u.se == 0.0));
    }
}
