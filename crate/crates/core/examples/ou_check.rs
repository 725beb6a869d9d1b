//! Monte-Carlo second moment of the fast Ornstein–Uhlenbeck part against
//! its closed form, on a reduced ensemble.

use sll::harness::{run_ou_check, Experiment, ExperimentConfig};

fn main() -> sll::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::OuCheck);
    cfg.eps_ladder = vec![0.25, 0.1];
    cfg.replicas = Some(500);
    let report = run_ou_check(&cfg)?;
    println!("{:>6} {:>6} {:>10} {:>10} {:>8}", "eps", "t", "mc", "theory", "rel_err");
    for m in &report.moments {
        println!(
            "{:>6} {:>6.3} {:>10.5} {:>10.5} {:>8.4}",
            m.eps, m.t, m.interior.mean, m.interior_theory, m.interior_rel_err
        );
    }
    println!("passed: {}", report.passed());
    Ok(())
}
