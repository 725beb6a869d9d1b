//! Acceptance suite: one pass/fail line per criterion at its stated tolerance.
//! Exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use sll::full_system::{FullParams, FullState, FullSystem};
use sll::geometry::{BoundaryField, Geometry, Grid1D, InteriorField};
use sll::harness::{self, Check, Experiment, ExperimentConfig, NoiseConfig};
use sll::noise::{wiener_norms, NoiseModel, NoiseTable};
use sll::splitting::{split_trajectory, theta1_exact, v1_exact};
use sll::stats::mean_se;
use sll::{Error, Result};

struct Verdict {
    pass: bool,
    detail: String,
}

fn from_checks(checks: &[&Check]) -> Verdict {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| format!("{}={:?} vs {}", c.name, c.measured, c.threshold))
        .collect();
    let pass = !checks.is_empty() && failed.is_empty();
    let detail = if failed.is_empty() {
        format!("{} checks", checks.len())
    } else {
        format!("failed: {}", failed.join("; "))
    };
    Verdict { pass, detail }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Random data, ε and horizon; the first velocity component of the split is
/// compared with `v₀ e^{−t/ε}` evaluated here, and with `v₀ aⁿ` stepped by
/// the per-step decay.
fn exact_subsolution() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let grid = Grid1D::new(16)?;
    let geo = Geometry::new(grid.clone());
    let noise = NoiseConfig {
        modes: 8,
        ..NoiseConfig::default()
    };
    let mut worst: f64 = 0.0;
    for case in 0..10 {
        let eps = uniform(&mut rng, 0.02, 0.45);
        let t = uniform(&mut rng, 0.05, 1.0);
        let steps = (10.0 * t / eps).ceil() as usize + 1;
        let dt = t / steps as f64;
        let model = NoiseModel::new(grid.clone(), noise.interior(), noise.boundary(), dt)?;
        let sys = FullSystem::new(&geo, &model, FullParams::new(eps, 0.5, dt, t)?)?;
        let v0 = InteriorField((0..16).map(|_| uniform(&mut rng, -1.0, 1.0)).collect());
        let th0 = BoundaryField::new(uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0));
        let init = FullState {
            v: v0.clone(),
            theta: th0,
            ..FullState::zero(16)
        };
        let table = NoiseTable::generate(7, case, model.modes(), steps);
        let traj = sys.simulate(&init, &mut table.cursor(&model))?;
        let split = split_trajectory(&sys, &traj, &mut table.cursor(&model))?;
        let last = split.states.last().unwrap();
        let decay = (-t / eps).exp();
        let stepped = sys.decay().powi(steps as i32);
        for (j, x) in last.v1.values().iter().enumerate() {
            worst = worst.max((x - v0.values()[j] * decay).abs());
            worst = worst.max((x - v0.values()[j] * stepped).abs());
        }
        worst = worst.max(last.th1.max_abs_diff(&th0.scaled(decay)));
        worst = worst.max(v1_exact(&v0, eps, t).max_abs_diff(&v0.scaled(decay)));
        worst = worst.max(theta1_exact(th0, eps, t).max_abs_diff(&th0.scaled(decay)));
    }
    Ok(Verdict {
        pass: worst <= 1e-12,
        detail: format!("max abs error {worst:.3e} (tol 1e-12)"),
    })
}

fn ou_moments() -> Result<Verdict> {
    let mut checks = Vec::new();
    for (eps, alpha) in [(0.25, 0.5), (0.1, 2.0)] {
        let mut cfg = ExperimentConfig::new(Experiment::OuCheck);
        cfg.eps_ladder = vec![eps];
        cfg.alpha = alpha;
        cfg.replicas = Some(2000);
        checks.extend(harness::run_ou_check(&cfg)?.checks);
    }
    Ok(from_checks(&checks.iter().collect::<Vec<_>>()))
}

fn ito_isometry() -> Result<Verdict> {
    let grid = Grid1D::new(64)?;
    let noise = NoiseConfig::default();
    let model = NoiseModel::new(grid, noise.interior(), noise.boundary(), 0.01)?;
    let mut checks = Vec::new();
    for t in [0.1, 0.5, 1.0] {
        let norms = wiener_norms(&model, 3, 5000, t)?;
        for (channel, trace, xs) in [
            ("interior", model.trace_q1(), norms.iter().map(|n| n.0).collect::<Vec<_>>()),
            ("boundary", model.trace_q2(), norms.iter().map(|n| n.1).collect::<Vec<_>>()),
        ] {
            let m = mean_se(&xs);
            let dev = (m.mean - trace * t).abs();
            checks.push(Check::at_most(format!("isometry_{channel}[t={t}]"), dev, 3.0 * m.se).with_se(m.se));
        }
    }
    Ok(from_checks(&checks.iter().collect::<Vec<_>>()))
}

fn split_recombination() -> Result<Verdict> {
    let mut cfg = ExperimentConfig::new(Experiment::SplitCheck);
    cfg.eps_ladder = vec![0.05];
    cfg.t_end = 10.0;
    let report = harness::run_split_check(&cfg)?;
    let steps = report.per_eps[0].steps;
    let mut v = from_checks(&report.checks.iter().collect::<Vec<_>>());
    v.pass &= steps == 2000;
    v.detail = format!(
        "{steps} steps, gap_v {:.2e}, gap_theta {:.2e}; {}",
        report.per_eps[0].max_gap_v, report.per_eps[0].max_gap_theta, v.detail
    );
    Ok(v)
}

fn bound_report() -> Result<harness::BoundReport> {
    let mut cfg = ExperimentConfig::new(Experiment::BoundCheck);
    cfg.alpha = 0.5;
    cfg.replicas = Some(500);
    harness::run_bound_check(&cfg)
}

fn moment_bound(report: &harness::BoundReport) -> Verdict {
    let checks: Vec<&Check> = report
        .checks
        .iter()
        .filter(|c| {
            ["0.25", "0.0625", "0.015625"]
                .iter()
                .any(|e| c.name == format!("kinetic_bound[eps={e}]"))
        })
        .collect();
    let mut v = from_checks(&checks);
    v.pass &= checks.len() == 3;
    v
}

fn uniform_bound(report: &harness::BoundReport) -> Verdict {
    let checks: Vec<&Check> = report.checks.iter().filter(|c| c.name == "uniform_ratio").collect();
    let mut v = from_checks(&checks);
    v.detail = format!("ratio {:?}; {}", report.uniform_ratio, v.detail);
    v
}

fn energy_identity() -> Result<Verdict> {
    let mut cfg = ExperimentConfig::new(Experiment::EnergyAudit);
    cfg.dt_full_factor = 80.0;
    cfg.replicas = Some(500);
    let report = harness::run_energy_audit(&cfg)?;
    Ok(from_checks(&report.checks.iter().collect::<Vec<_>>()))
}

fn convergence() -> Result<Verdict> {
    let mut slopes = Vec::new();
    let mut checks = Vec::new();
    for alpha in [0.5, 0.75, 2.0] {
        let mut cfg = ExperimentConfig::new(Experiment::Converge);
        cfg.alpha = alpha;
        cfg.replicas = Some(100);
        let report = harness::run_convergence(&cfg)?;
        slopes.push(format!("α={alpha}: {:.3}", report.slope.unwrap_or(f64::NAN)));
        checks.extend(report.checks);
    }
    let mut v = from_checks(&checks.iter().collect::<Vec<_>>());
    v.detail = format!("slopes {}; {}", slopes.join(", "), v.detail);
    Ok(v)
}

fn read_tree(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() {
            out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path)?);
        }
    }
    Ok(out)
}

fn determinism() -> Result<Verdict> {
    let mut configs = Vec::new();
    let mut sim = ExperimentConfig::new(Experiment::Simulate);
    sim.eps_ladder = vec![0.25, 0.125];
    sim.replicas = Some(2);
    sim.seed = 11;
    configs.push(sim);
    let mut conv = ExperimentConfig::new(Experiment::Converge);
    conv.eps_ladder = vec![0.25, 0.125];
    conv.replicas = Some(4);
    conv.seed = 11;
    configs.push(conv);
    let mut files = 0;
    let mut mismatched = Vec::new();
    for cfg in &configs {
        let a = tempfile::tempdir()?;
        let b = tempfile::tempdir()?;
        harness::run(cfg)?.write(a.path())?;
        harness::run(cfg)?.write(b.path())?;
        let (ta, tb) = (read_tree(a.path())?, read_tree(b.path())?);
        files += ta.len();
        if ta.keys().ne(tb.keys()) {
            mismatched.push("file list".to_string());
        }
        for (name, bytes) in &ta {
            if tb.get(name) != Some(bytes) {
                mismatched.push(name.clone());
            }
        }
    }
    Ok(Verdict {
        pass: files > 0 && mismatched.is_empty(),
        detail: if mismatched.is_empty() {
            format!("{files} files byte-identical")
        } else {
            format!("differs: {}", mismatched.join(", "))
        },
    })
}

fn report(id: &str, name: &str, started: Instant, verdict: Result<Verdict>) -> bool {
    let (pass, detail) = match verdict {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "{id} {name}: {} [{:.1}s] {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    pass
}

fn main() {
    let mut ok = true;
    let t = Instant::now();
    ok &= report("C1", "exact_subsolution", t, exact_subsolution());
    let t = Instant::now();
    ok &= report("C2", "ou_moments", t, ou_moments());
    let t = Instant::now();
    ok &= report("C3", "ito_isometry", t, ito_isometry());
    let t = Instant::now();
    ok &= report("C4", "split_recombination", t, split_recombination());
    let t = Instant::now();
    let (c5, c6) = match bound_report() {
        Ok(r) => (Ok(moment_bound(&r)), Ok(uniform_bound(&r))),
        Err(e) => (Err(Error::Contract(e.to_string())), Err(e)),
    };
    ok &= report("C5", "moment_bound", t, c5);
    ok &= report("C6", "uniform_boundedness", t, c6);
    let t = Instant::now();
    ok &= report("C7", "pseudo_energy_identity", t, energy_identity());
    let t = Instant::now();
    ok &= report("C8", "convergence_rates", t, convergence());
    let t = Instant::now();
    ok &= report("C9", "determinism", t, determinism());
    if !ok {
        std::process::exit(1);
    }
}
