//! Pseudo-energy balance: the residual is the recorded energy minus the
//! energy predicted by the dissipation, cross, stochastic and trace terms
//! accumulated so far. Noise-free, it is first order in dt and halves with
//! the step; one noisy path is shown for scale.

use sll::full_system::{energy_residual, FullParams, FullSystem};
use sll::harness::{initial_state, Experiment, ExperimentConfig, NoiseConfig};
use sll::noise::NoiseTable;

fn max_residual(cfg: &ExperimentConfig, noise: NoiseConfig, eps: f64, dt: f64) -> sll::Result<f64> {
    let geo = cfg.geometry()?;
    let model = cfg.noise_model_with(noise, &[dt])?;
    let sys = FullSystem::new(&geo, &model, FullParams::new(eps, cfg.alpha, dt, cfg.t_end)?)?;
    let table = NoiseTable::generate(cfg.seed, 0, model.modes(), sys.params().steps()?);
    let traj = sys.simulate(&initial_state(&geo), &mut table.cursor(&model))?;
    let res = energy_residual(&traj, sys.params().r)?;
    Ok(res.iter().fold(0.0f64, |m, r| m.max(r.abs())))
}

fn main() -> sll::Result<()> {
    let cfg = ExperimentConfig::new(Experiment::EnergyAudit);
    let eps = 0.125;
    let mut prev: Option<f64> = None;
    for factor in [10.0, 20.0, 40.0, 80.0] {
        let r = max_residual(&cfg, cfg.noise.silenced(), eps, eps / factor)?;
        let ratio = prev.map(|p| format!("{:.3}", r / p)).unwrap_or_default();
        println!("noise-free dt = eps/{factor:<3}: max |residual| {r:.4e} {ratio}");
        prev = Some(r);
    }
    let r = max_residual(&cfg, cfg.noise, eps, eps / 80.0)?;
    println!("noisy path dt = eps/80 : max |residual| {r:.4e}");
    Ok(())
}
