//! One full trajectory and its coupled limit, printed at a few probe times.
//!
//! `cargo run --release --example simulate_trajectory`

use sll::full_system::{FullParams, FullSystem};
use sll::harness::{probe, Experiment, ExperimentConfig};
use sll::noise::NoiseTable;

fn main() -> sll::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::Simulate);
    cfg.alpha = 0.75;
    let eps = 0.0625;
    let dt = cfg.dt_full(eps);
    let geo = cfg.geometry()?;
    let model = cfg.noise_model(&[dt])?;
    let sys = FullSystem::new(&geo, &model, FullParams::new(eps, cfg.alpha, dt, cfg.t_end)?)?;
    let init = sll::harness::initial_state(&geo);
    let steps = sys.params().steps()?;
    let table = NoiseTable::generate(cfg.seed, 0, model.modes(), steps * model.steps_per(dt)?);
    let traj = sys.simulate(&init, &mut table.cursor(&model))?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "t", "u(0.5)", "delta_l", "theta_l", "energy");
    for s in traj.states.iter().step_by(steps / 8) {
        println!(
            "{:>6.3} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            s.t,
            probe(&geo, &s.u, 0.5),
            s.delta.left,
            s.theta.left,
            sys.energy(s)
        );
    }
    Ok(())
}
