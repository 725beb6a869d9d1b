//! Energy, OU, splitting and moment-bound audits along the ε-ladder.

use serde::Serialize;

use super::converge::{initial_displacement, initial_state};
use super::{all_passed, ensemble, Check, ExperimentConfig, Table};
use crate::error::{Error, Result};
use crate::full_system::{kinetic_bound, moment_stats, moments, FullParams, FullState, FullSystem, Moments};
use crate::geometry::{BoundaryField, Geometry};
use crate::noise::{ou_update, ou_update_boundary, whole_multiple, NoiseModel, NoiseTable, OuKernel};
use crate::splitting::{h_minus1_audit, ou_moment_theory, split_trajectory};
use crate::stats::{mean_se, MeanSe};

/// Index of the recorded step nearest to `t` on a grid of `dt`.
fn step_index(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

fn master_steps(cfg: &ExperimentConfig, model: &NoiseModel) -> usize {
    (cfg.t_end / model.master_dt()).round() as usize
}

fn full_params(cfg: &ExperimentConfig, eps: f64, dt: f64) -> Result<FullParams> {
    FullParams::new(eps, cfg.alpha, dt, cfg.t_end)?.with_r(cfg.r)
}


// Energy balance

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualAt {
    pub t: f64,
    pub residual: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyEps {
    pub eps: f64,
    pub dt: f64,
    /// `max |residual|` of the noise-free run from zero data.
    pub zero_residual_max: f64,
    /// `max |residual|` of noise-free smooth data at `ε/10`, `ε/20`, `ε/40`.
    pub refinement: [f64; 3],
    pub refinement_ratios: [f64; 2],
    pub noisy: Vec<ResidualAt>,
    #[serde(skip)]
    series: Vec<(f64, MeanSe, MeanSe)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub experiment: &'static str,
    pub alpha: f64,
    pub r: f64,
    pub replicas: usize,
    pub seed: u64,
    pub per_eps: Vec<EnergyEps>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl EnergyReport {
    pub fn passed(&self) -> bool {
        self.passed
    }

    /// Columns `eps, t, residual_mean, residual_se, energy_mean, energy_se`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["eps", "t", "residual_mean", "residual_se", "energy_mean", "energy_se"]);
        for e in &self.per_eps {
            for (time, res, en) in &e.series {
                t.push(vec![e.eps, *time, res.mean, res.se, en.mean, en.se]);
            }
        }
        t
    }
}

pub const ENERGY_PROBE_TIMES: [f64; 3] = [0.25, 0.5, 1.0];
pub const ZERO_RESIDUAL_TOLERANCE: f64 = 1e-10;
/// The halving test runs at `ε/10`, `ε/20`, `ε/40` whatever step the noisy
/// ensemble uses.
pub const REFINEMENT_BASE_FACTOR: f64 = 10.0;
/// Accepted band for the residual ratio under dt halving (one half ± 30%).
pub const HALVING_BAND: (f64, f64) = (0.35, 0.65);

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn deterministic_residual(cfg: &ExperimentConfig, geo: &Geometry, eps: f64, dt: f64, initial: &FullState) -> Result<f64> {
    let model = cfg.noise_model_with(cfg.noise.silenced(), &[dt])?;
    let table = NoiseTable::silent(model.modes(), master_steps(cfg, &model));
    let sys = FullSystem::new(geo, &model, full_params(cfg, eps, dt)?)?;
    let traj = sys.simulate(initial, &mut table.cursor(&model))?;
    Ok(max_abs(&traj.ledger.residuals()))
}

pub fn run_energy_audit(cfg: &ExperimentConfig) -> Result<EnergyReport> {
    cfg.validate()?;
    let geo = cfg.geometry()?;
    let replicas = cfg.replicas()?;
    let mut per_eps = Vec::new();
    let mut checks = Vec::new();
    for &eps in &cfg.eps_ladder {
        let dt = cfg.dt_full(eps);
        let zero = deterministic_residual(cfg, &geo, eps, dt, &FullState::zero(cfg.n_interior))?;
        checks.push(Check::at_most(format!("zero_noise_residual[eps={eps}]"), zero, ZERO_RESIDUAL_TOLERANCE));

        let smooth = initial_state(&geo);
        let mut refinement = [0.0; 3];
        for (k, m) in refinement.iter_mut().enumerate() {
            let h = eps / (REFINEMENT_BASE_FACTOR * (1 << k) as f64);
            *m = deterministic_residual(cfg, &geo, eps, h, &smooth)?;
        }
        let ratios = [refinement[1] / refinement[0], refinement[2] / refinement[1]];
        for (k, q) in ratios.iter().enumerate() {
            let name = format!("halving_ratio_{}[eps={eps}]", k + 1);
            let c = if *q < HALVING_BAND.0 {
                Check::at_least(name, *q, HALVING_BAND.0)
            } else {
                Check::at_most(name, *q, HALVING_BAND.1)
            };
            checks.push(c);
        }

        // zero data: the deterministic quadrature error is exactly zero, so the
        // mean residual isolates the noise terms of the balance
        let model = cfg.noise_model(&[dt])?;
        let sys = FullSystem::new(&geo, &model, full_params(cfg, eps, dt)?)?;
        let zero_data = FullState::zero(cfg.n_interior);
        let runs = ensemble(replicas, eps, cfg.seed, |k| {
            let table = NoiseTable::generate(cfg.seed, k, model.modes(), master_steps(cfg, &model));
            let traj = sys.simulate(&zero_data, &mut table.cursor(&model))?;
            let energy: Vec<f64> = traj.ledger.records.iter().map(|r| r.energy).collect();
            Ok((traj.ledger.residuals(), energy))
        })?;
        let len = runs[0].0.len();
        let series: Vec<(f64, MeanSe, MeanSe)> = (0..len)
            .map(|n| {
                let res: Vec<f64> = runs.iter().map(|r| r.0[n]).collect();
                let en: Vec<f64> = runs.iter().map(|r| r.1[n]).collect();
                (n as f64 * dt, mean_se(&res), mean_se(&en))
            })
            .collect();
        let mut noisy = Vec::new();
        for &t in ENERGY_PROBE_TIMES.iter().filter(|t| **t <= cfg.t_end * (1.0 + 1e-12)) {
            let (_, res, _) = series[step_index(t, dt).min(len - 1)];
            checks.push(
                Check::at_most(format!("noisy_residual_in_3se[eps={eps},t={t}]"), res.mean.abs(), 3.0 * res.se)
                    .with_se(res.se),
            );
            noisy.push(ResidualAt { t, residual: res });
        }
        per_eps.push(EnergyEps {
            eps,
            dt,
            zero_residual_max: zero,
            refinement,
            refinement_ratios: ratios,
            noisy,
            series,
        });
    }
    let passed = all_passed(&checks);
    Ok(EnergyReport {
        experiment: "energy-audit",
        alpha: cfg.alpha,
        r: cfg.r,
        replicas,
        seed: cfg.seed,
        per_eps,
        checks,
        passed,
    })
}

// Ornstein-Uhlenbeck moments

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuMoment {
    pub eps: f64,
    pub t: f64,
    /// `E‖v̄₃(t)‖²` across replicas.
    pub interior: MeanSe,
    pub interior_theory: f64,
    pub interior_rel_err: f64,
    /// `E|θ̄₃(t)|²`, reported but not checked.
    pub boundary: MeanSe,
    pub boundary_theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuReport {
    pub experiment: &'static str,
    pub alpha: f64,
    pub replicas: usize,
    pub seed: u64,
    pub rel_tolerance: f64,
    pub moments: Vec<OuMoment>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub const OU_REL_TOLERANCE: f64 = 0.05;

impl OuReport {
    pub fn passed(&self) -> bool {
        self.passed
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "eps",
            "t",
            "var_interior_mean",
            "var_interior_se",
            "theory_interior",
            "rel_err",
            "var_boundary_mean",
            "var_boundary_se",
            "theory_boundary",
        ]);
        for m in &self.moments {
            t.push(vec![
                m.eps,
                m.t,
                m.interior.mean,
                m.interior.se,
                m.interior_theory,
                m.interior_rel_err,
                m.boundary.mean,
                m.boundary.se,
                m.boundary_theory,
            ]);
        }
        t
    }
}

/// Probe times `ε`, `5ε` and `t_end`, deduplicated and capped at `t_end`.
pub fn ou_probe_times(eps: f64, t_end: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = [eps, 5.0 * eps, t_end].into_iter().filter(|t| *t <= t_end * (1.0 + 1e-12)).collect();
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t_end);
    ts
}

pub fn run_ou_check(cfg: &ExperimentConfig) -> Result<OuReport> {
    cfg.validate()?;
    let replicas = cfg.replicas()?;
    let mut out = Vec::new();
    let mut checks = Vec::new();
    for &eps in &cfg.eps_ladder {
        let dt = cfg.dt_full(eps);
        let times = ou_probe_times(eps, cfg.t_end);
        let probes: Vec<usize> = times
            .iter()
            .map(|&t| whole_multiple(t, dt).ok_or_else(|| Error::Config(format!("probe time {t} is not on the dt = {dt} grid"))))
            .collect::<Result<_>>()?;
        let model = cfg.noise_model(&[dt])?;
        let kernel = OuKernel::new(&model, eps, cfg.alpha, dt);
        let geo = cfg.geometry()?;
        let last = *probes.last().unwrap();
        let samples = ensemble(replicas, eps, cfg.seed, |k| {
            let table = NoiseTable::generate(cfg.seed, k, model.modes(), last * model.steps_per(dt)?);
            let mut cursor = table.cursor(&model);
            let mut x = geo.grid().zeros();
            let mut b = BoundaryField::ZERO;
            let mut rec = Vec::with_capacity(probes.len());
            for n in 1..=last {
                let inc = cursor.next_increment(dt)?;
                x = ou_update(&x, &kernel, &model, &inc);
                b = ou_update_boundary(b, &kernel, &inc);
                if probes.contains(&n) {
                    let l2 = geo.norms(&x)?.l2;
                    rec.push((l2 * l2, b.norm_sq()));
                }
            }
            Ok(rec)
        })?;
        for (j, &t) in times.iter().enumerate() {
            let xi: Vec<f64> = samples.iter().map(|s| s[j].0).collect();
            let xb: Vec<f64> = samples.iter().map(|s| s[j].1).collect();
            let interior = mean_se(&xi);
            let theory = ou_moment_theory(eps, cfg.alpha, model.trace_q1(), t);
            let rel = (interior.mean - theory).abs() / theory;
            checks.push(
                Check::at_most(format!("ou_variance[eps={eps},t={t}]"), rel, OU_REL_TOLERANCE)
                    .with_se(interior.se / theory),
            );
            out.push(OuMoment {
                eps,
                t,
                interior,
                interior_theory: theory,
                interior_rel_err: rel,
                boundary: mean_se(&xb),
                boundary_theory: ou_moment_theory(eps, cfg.alpha, model.trace_q2(), t),
            });
        }
    }
    let passed = all_passed(&checks);
    Ok(OuReport {
        experiment: "ou-check",
        alpha: cfg.alpha,
        replicas,
        seed: cfg.seed,
        rel_tolerance: OU_REL_TOLERANCE,
        moments: out,
        checks,
        passed,
    })
}

// Splitting recombination

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitEps {
    pub eps: f64,
    pub steps: usize,
    pub max_gap_v: f64,
    pub max_gap_theta: f64,
    /// Largest `‖v̄₂‖_{H⁻¹}` and `‖v̄₂‖_{L²}` along replica 0.
    pub max_v2_hminus1: f64,
    pub max_v2_l2: f64,
    #[serde(skip)]
    series: Vec<[f64; 5]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub experiment: &'static str,
    pub alpha: f64,
    pub replicas: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub per_eps: Vec<SplitEps>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub const SPLIT_TOLERANCE: f64 = 1e-10;

impl SplitReport {
    pub fn passed(&self) -> bool {
        self.passed
    }

    /// Replica 0: `eps, t, gap_v, gap_theta, v2_hminus1, v2_l2`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["eps", "t", "gap_v", "gap_theta", "v2_hminus1", "v2_l2"]);
        for e in &self.per_eps {
            for row in &e.series {
                let mut r = vec![e.eps];
                r.extend_from_slice(row);
                t.push(r);
            }
        }
        t
    }
}

/// Data that exercises all three parts of the split: displacement, velocity
/// and boundary velocity are all nonzero.
pub fn split_initial_state(geo: &Geometry) -> FullState {
    let pi = std::f64::consts::PI;
    FullState {
        u: initial_displacement(geo.grid()),
        v: geo.grid().sample(|x| 0.5 * (2.0 * pi * x).sin()),
        delta: BoundaryField::new(0.1, -0.05),
        theta: BoundaryField::new(0.2, -0.3),
        t: 0.0,
    }
}

pub fn run_split_check(cfg: &ExperimentConfig) -> Result<SplitReport> {
    cfg.validate()?;
    let geo = cfg.geometry()?;
    let replicas = cfg.replicas()?;
    let mut per_eps = Vec::new();
    let mut checks = Vec::new();
    for &eps in &cfg.eps_ladder {
        let dt = cfg.dt_full(eps);
        let params = full_params(cfg, eps, dt)?;
        let model = cfg.noise_model(&[dt])?;
        let sys = FullSystem::new(&geo, &model, params)?;
        let init = split_initial_state(&geo);
        let runs = ensemble(replicas, eps, cfg.seed, |k| {
            let table = NoiseTable::generate(cfg.seed, k, model.modes(), master_steps(cfg, &model));
            let traj = sys.simulate(&init, &mut table.cursor(&model))?;
            let split = split_trajectory(&sys, &traj, &mut table.cursor(&model))?;
            let series = if k == 0 {
                let dual = h_minus1_audit(&split.states, &geo)?;
                split
                    .states
                    .iter()
                    .zip(&dual)
                    .enumerate()
                    .map(|(n, (s, d))| Ok([s.t, split.gap_v[n], split.gap_theta[n], *d, geo.norms(&s.v2)?.l2]))
                    .collect::<Result<Vec<_>>>()?
            } else {
                Vec::new()
            };
            Ok((split.max_gap_v(), split.max_gap_theta(), series))
        })?;
        let gv = runs.iter().fold(0.0, |m, r| f64::max(m, r.0));
        let gt = runs.iter().fold(0.0, |m, r| f64::max(m, r.1));
        checks.push(Check::at_most(format!("recombination_v[eps={eps}]"), gv, SPLIT_TOLERANCE));
        checks.push(Check::at_most(format!("recombination_theta[eps={eps}]"), gt, SPLIT_TOLERANCE));
        let series = runs.into_iter().next().map(|r| r.2).unwrap_or_default();
        per_eps.push(SplitEps {
            eps,
            steps: params.steps()?,
            max_gap_v: gv,
            max_gap_theta: gt,
            max_v2_hminus1: series.iter().fold(0.0, |m, r| m.max(r[3])),
            max_v2_l2: series.iter().fold(0.0, |m, r| m.max(r[4])),
            series,
        });
    }
    let passed = all_passed(&checks);
    Ok(SplitReport {
        experiment: "split-check",
        alpha: cfg.alpha,
        replicas,
        seed: cfg.seed,
        tolerance: SPLIT_TOLERANCE,
        per_eps,
        checks,
        passed,
    })
}

// Moment bounds

pub const BOUND_PROBES: usize = 20;
pub const UNIFORM_RATIO_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KineticProbe {
    pub eps: f64,
    pub t: f64,
    /// `E‖v‖²_W + E|θ|²`, checked against the bound.
    pub kinetic: MeanSe,
    /// `E‖v‖² + E|θ|²` with the uniform quadrature, reported only.
    pub kinetic_uniform: MeanSe,
    pub bound: f64,
    /// `mean − (bound + 3 SE)`; the check wants this `≤ 0`.
    pub excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformAt {
    pub eps: f64,
    /// `E‖∇u(T)‖² + E‖u(T)‖² + E|δ(T)|²`
    pub total: MeanSe,
    pub grad_u: MeanSe,
    pub u: MeanSe,
    pub delta: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub experiment: &'static str,
    pub alpha: f64,
    pub replicas: usize,
    pub seed: u64,
    /// The kinetic bound is checked from zero data, the uniform bound from
    /// smooth data at rest.
    pub kinetic: Vec<KineticProbe>,
    pub uniform: Vec<UniformAt>,
    pub uniform_ratio: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.passed
    }

    pub fn kinetic_table(&self) -> Table {
        let mut t = Table::new(&["eps", "t", "kinetic_mean", "kinetic_se", "kinetic_uniform_mean", "bound", "excess"]);
        for p in &self.kinetic {
            t.push(vec![p.eps, p.t, p.kinetic.mean, p.kinetic.se, p.kinetic_uniform.mean, p.bound, p.excess]);
        }
        t
    }

    pub fn uniform_table(&self) -> Table {
        let mut t = Table::new(&["eps", "total_mean", "total_se", "grad_u_mean", "u_mean", "delta_mean"]);
        for p in &self.uniform {
            t.push(vec![p.eps, p.total.mean, p.total.se, p.grad_u.mean, p.u.mean, p.delta.mean]);
        }
        t
    }
}

/// Moments of every replica at the given step indices.
fn moment_ensemble(
    cfg: &ExperimentConfig,
    sys: &FullSystem<'_>,
    model: &NoiseModel,
    eps: f64,
    initial: &FullState,
    probes: &[usize],
) -> Result<Vec<Vec<Moments>>> {
    let replicas = cfg.replicas()?;
    let geo = sys.geometry();
    ensemble(replicas, eps, cfg.seed, |k| {
        let table = NoiseTable::generate(cfg.seed, k, model.modes(), master_steps(cfg, model));
        let mut rec = Vec::with_capacity(probes.len());
        let mut n = 0usize;
        sys.run_with(initial, &mut table.cursor(model), |s, _| {
            if probes.contains(&n) {
                rec.push(moments(s, geo));
            }
            n += 1;
        })?;
        Ok(rec)
    })
}

pub fn run_bound_check(cfg: &ExperimentConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let geo = cfg.geometry()?;
    let replicas = cfg.replicas()?;
    if replicas < 2 {
        return Err(Error::param("replicas", "bound-check needs at least 2 replicas"));
    }
    let mut kinetic = Vec::new();
    let mut uniform = Vec::new();
    let mut checks = Vec::new();
    for &eps in &cfg.eps_ladder {
        let dt = cfg.dt_full(eps);
        let params = full_params(cfg, eps, dt)?;
        let steps = params.steps()?;
        let model = cfg.noise_model(&[dt])?;
        let sys = FullSystem::new(&geo, &model, params)?;
        let trace = model.trace_q1() + model.trace_q2();

        let probes: Vec<usize> = (1..=BOUND_PROBES)
            .map(|k| step_index(k as f64 * cfg.t_end / BOUND_PROBES as f64, dt).min(steps))
            .collect();
        let zero = FullState::zero(cfg.n_interior);
        let runs = moment_ensemble(cfg, &sys, &model, eps, &zero, &probes)?;
        let times: Vec<f64> = probes.iter().map(|&n| n as f64 * dt).collect();
        let m0 = moments(&zero, &geo);
        let mut worst = f64::NEG_INFINITY;
        for s in moment_stats(&times, &runs)? {
            let bound = kinetic_bound(m0.v_energy + m0.theta, s.t, eps, cfg.alpha, trace);
            let excess = s.kinetic.mean - (bound + 3.0 * s.kinetic.se);
            worst = worst.max(excess);
            kinetic.push(KineticProbe {
                eps,
                t: s.t,
                kinetic: s.kinetic,
                kinetic_uniform: s.kinetic_uniform,
                bound,
                excess,
            });
        }
        checks.push(Check::at_most(format!("kinetic_bound[eps={eps}]"), worst, 0.0));

        let smooth = initial_state(&geo);
        let runs = moment_ensemble(cfg, &sys, &model, eps, &smooth, &[steps])?;
        let s = moment_stats(&[steps as f64 * dt], &runs)?[0];
        let totals: Vec<f64> = runs.iter().map(|r| r[0].grad_u + r[0].u + r[0].delta).collect();
        uniform.push(UniformAt {
            eps,
            total: mean_se(&totals),
            grad_u: s.grad_u,
            u: s.u,
            delta: s.delta,
        });
    }
    let ratio = if uniform.len() > 1 {
        let hi = uniform.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.total.mean));
        let lo = uniform.iter().fold(f64::INFINITY, |m, p| m.min(p.total.mean));
        Some(hi / lo)
    } else {
        None
    };
    checks.push(match ratio {
        Some(q) => Check::at_most("uniform_ratio", q, UNIFORM_RATIO_LIMIT),
        None => Check::skipped("uniform_ratio", UNIFORM_RATIO_LIMIT),
    });
    let passed = all_passed(&checks);
    Ok(BoundReport {
        experiment: "bound-check",
        alpha: cfg.alpha,
        replicas,
        seed: cfg.seed,
        kinetic,
        uniform,
        uniform_ratio: ratio,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Experiment;

    fn small(exp: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(exp);
        cfg.n_interior = 16;
        cfg.noise.modes = 8;
        cfg
    }

    #[test]
    fn ou_probe_times_dedupe_and_cap() {
        assert_eq!(ou_probe_times(0.25, 1.0), vec![0.25, 1.0]);
        assert_eq!(ou_probe_times(0.1, 1.0), vec![0.1, 0.5, 1.0]);
        assert_eq!(ou_probe_times(0.2, 1.0), vec![0.2, 1.0]);
    }

    #[test]
    fn split_check_recombines_on_a_short_run() {
        let mut cfg = small(Experiment::SplitCheck);
        cfg.eps_ladder = vec![0.25, 0.0625];
        cfg.replicas = Some(2);
        let r = run_split_check(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert_eq!(r.table().rows.len(), 41 + 161);
    }

    #[test]
    fn zero_noise_bound_check_decays_below_the_bound() {
        let mut cfg = small(Experiment::BoundCheck);
        cfg.noise = cfg.noise.silenced();
        cfg.eps_ladder = vec![0.25];
        cfg.replicas = Some(2);
        let r = run_bound_check(&cfg).unwrap();
        assert!(r.kinetic.iter().all(|p| p.kinetic.mean == 0.0 && p.bound == 0.0));
        assert!(r.passed());
        assert_eq!(r.uniform_ratio, None);
    }

    #[test]
    fn energy_audit_zero_noise_residual_vanishes() {
        let mut cfg = small(Experiment::EnergyAudit);
        cfg.noise = cfg.noise.silenced();
        cfg.eps_ladder = vec![0.25];
        cfg.replicas = Some(2);
        let r = run_energy_audit(&cfg).unwrap();
        assert!(r.per_eps[0].zero_residual_max <= ZERO_RESIDUAL_TOLERANCE);
        let q = r.per_eps[0].refinement_ratios;
        assert!(q.iter().all(|q| (0.35..=0.65).contains(q)), "{q:?}");
    }
}
