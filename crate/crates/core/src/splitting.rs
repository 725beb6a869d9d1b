//! Velocity splitting of a recorded full-system run.
//!
//! ```text
//! v = v̄₁ + v̄₂ + v̄₃,   θ = θ̄₁ + θ̄₂ + θ̄₃
//! ε dv̄₁ = −v̄₁ dt                                  (free decay of v₀)
//! ε dv̄₂ = (−v̄₂ + Δu − u + sin u) dt                (forced by the recorded u, θ)
//! ε dv̄₃ = −v̄₃ dt + ε^α dW1                         (Ornstein–Uhlenbeck)
//! ε dθ̄₂ = (−θ̄₂ − δ − γv) dt
//! ```
//!
//! The forced parts use the same frozen midpoint forcing as the full stepper,
//! so the three pieces add up to the full velocity to round-off.

use crate::error::{Error, Result};
use crate::full_system::{FullState, FullSystem, Trajectory};
use crate::geometry::{BoundaryField, Geometry, InteriorField};
use crate::noise::{ou_update, ou_update_boundary, NoiseCursor};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub v1: InteriorField,
    pub v2: InteriorField,
    pub v3: InteriorField,
    pub th1: BoundaryField,
    pub th2: BoundaryField,
    pub th3: BoundaryField,
    pub t: f64,
}

impl SplitState {
    pub fn initial(v0: &InteriorField, theta0: BoundaryField, t: f64) -> Self {
        let n = v0.len();
        Self {
            v1: v0.clone(),
            v2: InteriorField(vec![0.0; n]),
            v3: InteriorField(vec![0.0; n]),
            th1: theta0,
            th2: BoundaryField::ZERO,
            th3: BoundaryField::ZERO,
            t,
        }
    }

    pub fn v(&self) -> InteriorField {
        InteriorField(
            self.v1
                .values()
                .iter()
                .zip(self.v2.values())
                .zip(self.v3.values())
                .map(|((a, b), c)| a + b + c)
                .collect(),
        )
    }

    pub fn theta(&self) -> BoundaryField {
        self.th1 + self.th2 + self.th3
    }
}

/// `v₀ e^{−t/ε}`; the same closed form gives θ̄₁ from θ₀.
pub fn v1_exact(v0: &InteriorField, eps: f64, t: f64) -> InteriorField {
    v0.scaled((-t / eps).exp())
}

pub fn theta1_exact(theta0: BoundaryField, eps: f64, t: f64) -> BoundaryField {
    theta0.scaled((-t / eps).exp())
}

/// Frozen interior forcing over step `n`: `L(ū, θ̄) − ū + sin uⁿ`, bars
/// being midpoints of the recorded pair.
pub fn interior_forcing(traj: &Trajectory, n: usize, geo: &Geometry) -> Result<InteriorField> {
    let (now, next) = recorded_pair(traj, n)?;
    let u_mid = now.u.add_scaled(1.0, &next.u).scaled(0.5);
    let lap = geo.laplacian_with_flux(&u_mid, (now.theta + next.theta).scaled(0.5))?;
    Ok(InteriorField(
        lap.values()
            .iter()
            .zip(u_mid.values())
            .zip(now.u.values())
            .map(|((l, m), u)| l - m + u.sin())
            .collect(),
    ))
}

/// Frozen boundary forcing over step `n`: `−δ̄ − γv̄`.
pub fn boundary_forcing(traj: &Trajectory, n: usize, geo: &Geometry) -> Result<BoundaryField> {
    let (now, next) = recorded_pair(traj, n)?;
    let v_mid = now.v.add_scaled(1.0, &next.v).scaled(0.5);
    Ok(((now.delta + next.delta).scaled(0.5) + geo.trace(&v_mid)?).scaled(-1.0))
}

fn recorded_pair(traj: &Trajectory, n: usize) -> Result<(&FullState, &FullState)> {
    match (traj.states.get(n), traj.states.get(n + 1)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::MissingStep(n + 1)),
    }
}

/// `v̄₂' = F + (v̄₂ − F) e^{−dt/ε}` with the recorded forcing of step `n`.
pub fn step_v2(v2: &InteriorField, traj: &Trajectory, n: usize, eps: f64, geo: &Geometry) -> Result<InteriorField> {
    let f = interior_forcing(traj, n, geo)?;
    let a = (-traj.dt / eps).exp();
    Ok(relax(v2, &f, a))
}

pub fn step_theta2(th2: BoundaryField, traj: &Trajectory, n: usize, eps: f64, geo: &Geometry) -> Result<BoundaryField> {
    let g = boundary_forcing(traj, n, geo)?;
    let a = (-traj.dt / eps).exp();
    Ok(g + (th2 - g).scaled(a))
}

fn relax(x: &InteriorField, f: &InteriorField, a: f64) -> InteriorField {
    InteriorField(
        x.values()
            .iter()
            .zip(f.values())
            .map(|(x, f)| f + (x - f) * a)
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct SplitRun {
    pub states: Vec<SplitState>,
    /// `‖v − (v̄₁+v̄₂+v̄₃)‖_∞` per recorded time.
    pub gap_v: Vec<f64>,
    /// `max |θ − (θ̄₁+θ̄₂+θ̄₃)|` per recorded time.
    pub gap_theta: Vec<f64>,
}

impl SplitRun {
    pub fn max_gap_v(&self) -> f64 {
        self.gap_v.iter().fold(0.0, |m, g| m.max(*g))
    }

    pub fn max_gap_theta(&self) -> f64 {
        self.gap_theta.iter().fold(0.0, |m, g| m.max(*g))
    }
}

/// Splits a recorded run. `noise` must replay the increments the run used
/// (a fresh cursor over the same table).
pub fn split_trajectory(system: &FullSystem<'_>, traj: &Trajectory, noise: &mut NoiseCursor<'_>) -> Result<SplitRun> {
    let first = traj.states.first().ok_or(Error::MissingStep(0))?;
    let geo = system.geometry();
    let model = system.model();
    let eps = system.params().eps;
    let kernel = system.kernel();
    let t0 = first.t;
    let mut cur = SplitState::initial(&first.v, first.theta, t0);
    let mut states = vec![cur.clone()];
    let mut gap_v = vec![0.0];
    let mut gap_theta = vec![0.0];
    for n in 0..traj.states.len() - 1 {
        let inc = noise.next_increment(traj.dt)?;
        let t = traj.states[n + 1].t;
        let next = SplitState {
            v1: v1_exact(&first.v, eps, t - t0),
            v2: step_v2(&cur.v2, traj, n, eps, geo)?,
            v3: ou_update(&cur.v3, kernel, model, &inc),
            th1: theta1_exact(first.theta, eps, t - t0),
            th2: step_theta2(cur.th2, traj, n, eps, geo)?,
            th3: ou_update_boundary(cur.th3, kernel, &inc),
            t,
        };
        gap_v.push(next.v().max_abs_diff(&traj.states[n + 1].v));
        gap_theta.push(next.theta().max_abs_diff(&traj.states[n + 1].theta));
        states.push(next.clone());
        cur = next;
    }
    Ok(SplitRun {
        states,
        gap_v,
        gap_theta,
    })
}

/// Dual norm of `v̄₂` at every recorded time.
pub fn h_minus1_audit(states: &[SplitState], geo: &Geometry) -> Result<Vec<f64>> {
    states.iter().map(|s| geo.dual_norm_hminus1(&s.v2)).collect()
}

/// `E‖v̄₃(t)‖² = ½ ε^{2α−1} Tr Q (1 − e^{−2t/ε})` for zero initial value.
pub fn ou_moment_theory(eps: f64, alpha: f64, trace_q: f64, t: f64) -> f64 {
    0.5 * eps.powf(2.0 * alpha - 1.0) * trace_q * (1.0 - (-2.0 * t / eps).exp())
}
