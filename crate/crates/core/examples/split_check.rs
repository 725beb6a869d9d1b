//! Splits a recorded run into its decaying, forced and noise-driven parts and
//! reports how closely they add back up to the full velocity.

use sll::harness::{run_split_check, Experiment, ExperimentConfig};

fn main() -> sll::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::SplitCheck);
    cfg.eps_ladder = vec![0.25, 0.0625, 0.015625];
    let report = run_split_check(&cfg)?;
    for e in &report.per_eps {
        println!(
            "eps {:>9}: {:>5} steps, gap v {:.2e}, gap theta {:.2e}, max ‖v̄₂‖_H⁻¹ {:.4}",
            e.eps, e.steps, e.max_gap_v, e.max_gap_theta, e.max_v2_hminus1
        );
    }
    println!("passed: {}", report.passed());
    Ok(())
}
