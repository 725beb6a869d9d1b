//! Kinetic moment bound per ε and the spread of the displacement energy
//! across the ε-ladder, on a reduced ensemble.

use sll::harness::{run_bound_check, Experiment, ExperimentConfig};

fn main() -> sll::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::BoundCheck);
    cfg.eps_ladder = vec![0.25, 0.0625];
    cfg.replicas = Some(100);
    let report = run_bound_check(&cfg)?;
    for c in &report.checks {
        println!("{:<28} {:>12.5} <= {:<8} {:?}", c.name, c.measured.unwrap_or(f64::NAN), c.threshold, c.status);
    }
    for u in &report.uniform {
        println!("eps {:>7}: E‖∇u‖²+E‖u‖²+E|δ|² = {:.4} ± {:.4}", u.eps, u.total.mean, u.total.se);
    }
    Ok(())
}
