//! Coupled distance to the limit system along a short ε-ladder and the
//! fitted log-log slope.

use sll::harness::{min_slope, run_convergence, Experiment, ExperimentConfig};

fn main() -> sll::Result<()> {
    for alpha in [0.5, 2.0] {
        let mut cfg = ExperimentConfig::new(Experiment::Converge);
        cfg.alpha = alpha;
        cfg.eps_ladder = vec![0.25, 0.125, 0.0625];
        cfg.replicas = Some(20);
        let report = run_convergence(&cfg)?;
        println!("alpha = {alpha} ({} limit)", report.limit);
        for e in &report.per_eps {
            println!("  eps {:>7}: err_u {:.5} ± {:.5}", e.eps, e.err_u.mean, e.err_u.se);
        }
        println!(
            "  slope {:.3} (needs >= {:.3}), passed: {}",
            report.slope.unwrap_or(f64::NAN),
            min_slope(alpha),
            report.passed()
        );
    }
    Ok(())
}
