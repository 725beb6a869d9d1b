//! The two ε → 0 limit systems.
//!
//! For `α ∈ [1/2, 1)` the inertia drops out and the limit is parabolic:
//!
//! ```text
//! ū_t − Δū + ū − sin ū = ε^α Ẇ1        in D
//! δ̄_t + δ̄ = −ū_t + ε^α Ẇ2             on ∂D,    δ̄_t = ∂ū/∂n
//! ```
//!
//! For `α > 1` the noise vanishes faster than the inertia and the limit is
//! the deterministic damped wave system, i.e. the full stepper fed zero
//! increments.

use crate::error::{Error, Result};
use crate::full_system::{validate_alpha, validate_eps, FullState, FullSystem};
use crate::geometry::{BoundaryField, Geometry, InteriorField};
use crate::linalg::{BandedCholesky, SymBanded};
use crate::noise::{NoiseCursor, NoiseModel, WienerIncrement};

pub const SOLVER_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicState {
    pub u_bar: InteriorField,
    pub delta_bar: BoundaryField,
    pub t: f64,
}

impl ParabolicState {
    pub fn new(u_bar: InteriorField, delta_bar: BoundaryField) -> Self {
        Self { u_bar, delta_bar, t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.u_bar.is_finite() && self.delta_bar.is_finite()
    }
}

/// Backward Euler for `Δ − I` with the boundary velocity `(ūⁿ⁺¹ − ūⁿ)/dt`
/// eliminated into the same banded system:
///
/// ```text
/// [W(1+dt) + dt S + ΓᵀΓ] ū' = (W + ΓᵀΓ) ū + Γᵀ(−dt δ̄ + ε^α ΔW2) + dt W sin ū + ε^α W ΔW1
/// δ̄' = (1 − dt) δ̄ − Γ(ū' − ū) + ε^α ΔW2
/// ```
#[derive(Debug, Clone)]
pub struct ParabolicSystem<'a> {
    geo: &'a Geometry,
    dt: f64,
    eps_alpha: f64,
    gram: SymBanded,
    solver: BandedCholesky,
}

fn add_trace_gram(a: &mut SymBanded, n: usize, scale: f64) {
    // Γ rows: 2e₀ − e₁ and 2e_{n−1} − e_{n−2}
    a.add(0, 0, 4.0 * scale);
    a.add(1, 0, -2.0 * scale);
    a.add(1, 1, scale);
    a.add(n - 1, n - 1, 4.0 * scale);
    a.add(n - 1, n - 2, -2.0 * scale);
    a.add(n - 2, n - 2, scale);
}

impl<'a> ParabolicSystem<'a> {
    pub fn new(geo: &'a Geometry, eps: f64, alpha: f64, dt: f64) -> Result<Self> {
        validate_eps(eps)?;
        validate_alpha(alpha)?;
        if alpha > 1.0 {
            return Err(Error::param(
                "alpha",
                format!("the parabolic limit needs alpha < 1, got {alpha}"),
            ));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let n = geo.grid().n_interior();
        let mut a = SymBanded::zeros(n, geo.stiffness().half_bandwidth());
        a.add_scaled(geo.stiffness(), dt);
        a.add_diagonal(geo.weights(), 1.0 + dt);
        add_trace_gram(&mut a, n, 1.0);
        let mut gram = SymBanded::zeros(n, 1);
        add_trace_gram(&mut gram, n, 1.0);
        Ok(Self {
            geo,
            dt,
            eps_alpha: eps.powf(alpha),
            gram,
            solver: a.cholesky()?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, s: &ParabolicState, inc: &WienerIncrement) -> Result<ParabolicState> {
        if (inc.dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Contract(format!(
                "increment dt = {} does not match step dt = {}",
                inc.dt, self.dt
            )));
        }
        let geo = self.geo;
        let w = geo.weights();
        let u = s.u_bar.values();
        let n = u.len();
        let dt = self.dt;
        let noise2 = inc.dw2.scaled(self.eps_alpha);

        // (W + ΓᵀΓ) ū
        let mut rhs = self.gram.mul_vec(u);
        for j in 0..n {
            rhs[j] += w[j] * (u[j] + dt * u[j].sin() + self.eps_alpha * inc.dw1.values()[j]);
        }
        geo.add_trace_adjoint(&mut rhs, s.delta_bar.scaled(-dt) + noise2);

        let u_new = self.solver.solve_checked(&rhs, SOLVER_TOLERANCE)?;
        let u_new = InteriorField(u_new);
        let jump = geo.trace(&u_new)? - geo.trace(&s.u_bar)?;
        let delta_new = s.delta_bar.scaled(1.0 - dt) - jump + noise2;
        let next = ParabolicState {
            u_bar: u_new,
            delta_bar: delta_new,
            t: s.t + dt,
        };
        if !next.is_finite() {
            return Err(Error::BlowUp { t: next.t });
        }
        Ok(next)
    }

    /// Runs `steps` steps, returning every state including the initial one.
    pub fn simulate(&self, initial: &ParabolicState, steps: usize, noise: &mut NoiseCursor<'_>) -> Result<Vec<ParabolicState>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(initial.clone());
        let mut s = initial.clone();
        for _ in 0..steps {
            let inc = noise.next_increment(self.dt)?;
            s = self.step(&s, &inc)?;
            out.push(s.clone());
        }
        Ok(out)
    }
}

/// `½ ūᵀSū + ½‖ū‖² + ∫cos ū + ½|δ̄|²`, non-increasing without noise.
pub fn parabolic_energy(state: &ParabolicState, geo: &Geometry) -> f64 {
    let u = state.u_bar.values();
    let cos: f64 = u.iter().zip(geo.weights()).map(|(x, w)| w * x.cos()).sum();
    0.5 * geo.dirichlet(u) + 0.5 * geo.mass_norm_sq(u) + cos + 0.5 * state.delta_bar.norm_sq()
}

pub fn step_parabolic(
    state: &ParabolicState,
    eps: f64,
    alpha: f64,
    dt: f64,
    inc: &WienerIncrement,
    geo: &Geometry,
) -> Result<ParabolicState> {
    ParabolicSystem::new(geo, eps, alpha, dt)?.step(state, inc)
}

/// Deterministic damped wave step: the full stepper with zero noise.
pub fn step_wave(state: &FullState, system: &FullSystem<'_>) -> Result<FullState> {
    let model: &NoiseModel = system.model();
    let zero = WienerIncrement::zero(model.grid().n_interior(), model.modes(), system.params().dt);
    system.step(state, &zero)
}

/// State of the wave limit; same layout as the full system.
pub type WaveState = FullState;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::full_system::FullParams;
    use crate::geometry::Grid1D;
    use crate::noise::{CovarianceSpec, NoiseTable};
    use std::f64::consts::PI;

    fn setup(n: usize, master_dt: f64, c: f64) -> (Geometry, NoiseModel) {
        let grid = Grid1D::new(n).unwrap();
        let model = NoiseModel::new(
            grid,
            CovarianceSpec::Interior {
                c,
                gamma: 2.0,
                modes: 10,
            },
            CovarianceSpec::Boundary { left: c / 2.0, right: c / 2.0 },
            master_dt,
        )
        .unwrap();
        (Geometry::new(grid), model)
    }

    #[test]
    fn rejects_wave_regime_alpha() {
        let geo = Geometry::new(Grid1D::new(16).unwrap());
        assert!(ParabolicSystem::new(&geo, 0.25, 2.0, 1e-3).is_err());
        assert!(ParabolicSystem::new(&geo, 0.25, 1.0, 1e-3).is_err());
    }

    #[test]
    fn zero_stays_zero() {
        let (geo, model) = setup(16, 1e-3, 1.0);
        let sys = ParabolicSystem::new(&geo, 0.25, 0.5, 1e-3).unwrap();
        let table = NoiseTable::silent(model.modes(), 100);
        let out = sys
            .simulate(&ParabolicState::new(geo.grid().zeros(), BoundaryField::ZERO), 100, &mut table.cursor(&model))
            .unwrap();
        assert!(out.iter().all(|s| s.u_bar.max_abs() == 0.0 && s.delta_bar == BoundaryField::ZERO));
    }

    #[test]
    fn lyapunov_functional_is_non_increasing_without_noise() {
        let (geo, model) = setup(32, 1e-3, 0.0);
        let dt = 1e-3;
        let sys = ParabolicSystem::new(&geo, 0.25, 0.5, dt).unwrap();
        let table = NoiseTable::silent(model.modes(), 1000);
        let u0 = geo.grid().sample(|x| 0.1 * (PI * x).sin() + 0.05 * x);
        let out = sys
            .simulate(&ParabolicState::new(u0, BoundaryField { left: 0.02, right: -0.01 }), 1000, &mut table.cursor(&model))
            .unwrap();
        // the sine term is explicit, so allow O(dt²) per step
        let gs: Vec<f64> = out.iter().map(|s| parabolic_energy(s, &geo)).collect();
        let worst = gs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= dt * dt);
        assert!(gs[gs.len() - 1] < gs[0]);
    }

    #[test]
    fn first_order_self_convergence() {
        let run = |dt: f64| {
            let (geo, model) = setup(32, dt, 0.0);
            let sys = ParabolicSystem::new(&geo, 0.25, 0.5, dt).unwrap();
            let steps = (1.0 / dt).round() as usize;
            let table = NoiseTable::silent(model.modes(), steps);
            let u0 = geo.grid().sample(|x| (PI * x).sin());
            sys.simulate(&ParabolicState::new(u0, BoundaryField::ZERO), steps, &mut table.cursor(&model))
                .unwrap()
        };
        let coarse = [run(0.02), run(0.01), run(0.005), run(0.0025)];
        let h = Grid1D::new(32).unwrap().h();
        // L²(0,T; L²) distance between dt and dt/2 on the coarse grid
        let dist = |a: &Vec<ParabolicState>, b: &Vec<ParabolicState>| {
            let dt = 1.0 / (a.len() - 1) as f64;
            let s: f64 = a
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, s)| {
                    let other = &b[2 * k];
                    s.u_bar.values().iter().zip(other.u_bar.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
                })
                .sum();
            (dt * h * s).sqrt()
        };
        let d: Vec<f64> = (0..3).map(|k| dist(&coarse[k], &coarse[k + 1])).collect();
        for w in d.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..=2.4).contains(&ratio), "{d:?}");
        }
    }

    #[test]
    fn wave_step_is_the_noiseless_full_step() {
        let (geo, model) = setup(16, 0.025, 1.0);
        let sys = FullSystem::new(&geo, &model, FullParams::new(0.25, 2.0, 0.025, 1.0).unwrap()).unwrap();
        let s0 = FullState::at_rest(geo.grid().sample(|x| (PI * x).sin()), BoundaryField::splat(-PI));
        let zero = WienerIncrement::zero(16, model.modes(), 0.025);
        let a = step_wave(&s0, &sys).unwrap();
        let b = crate::full_system::step_full(&s0, sys.params(), &zero, &geo, &model).unwrap();
        assert_eq!(a, b);
        assert_eq!(step_wave(&FullState::zero(16), &sys).unwrap().u.max_abs(), 0.0);
    }

    #[test]
    fn wave_energy_is_non_increasing() {
        let (geo, model) = setup(32, 0.01, 0.0);
        let sys = FullSystem::new(&geo, &model, FullParams::new(0.1, 2.0, 0.01, 1.0).unwrap()).unwrap();
        let mut s = FullState::at_rest(geo.grid().sample(|x| (PI * x).sin()), BoundaryField::splat(-PI));
        let mut e = sys.energy(&s);
        for _ in 0..100 {
            s = step_wave(&s, &sys).unwrap();
            let e_new = sys.energy(&s);
            assert!(e_new <= e + 1e-3 * sys.params().dt, "{e} -> {e_new}");
            e = e_new;
        }
    }

    #[test]
    fn coupled_runs_consume_identical_noise() {
        let master = 1.0 / 16000.0;
        let (geo, model) = setup(16, master, 1.0);
        let table = NoiseTable::generate(3, 9, model.modes(), 16000);
        let full = FullSystem::new(&geo, &model, FullParams::new(1.0 / 64.0, 0.5, 1.0 / 640.0, 1.0).unwrap()).unwrap();
        let s0 = FullState::at_rest(geo.grid().sample(|x| (PI * x).sin()), BoundaryField::splat(-PI));
        let mut c1 = table.cursor(&model);
        full.run_with(&s0, &mut c1, |_, _| {}).unwrap();
        let para = ParabolicSystem::new(&geo, 1.0 / 64.0, 0.5, 1e-3).unwrap();
        let mut c2 = table.cursor(&model);
        para.simulate(&ParabolicState::new(s0.u.clone(), BoundaryField::ZERO), 1000, &mut c2).unwrap();
        let (a1, a2) = c1.totals();
        let (b1, b2) = c2.totals();
        assert!(a1.iter().zip(b1).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a2, b2);
    }
}
