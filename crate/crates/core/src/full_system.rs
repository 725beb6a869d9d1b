//! The ε-system in Itô form, its pseudo-energy ledger and moment diagnostics.
//!
//! ```text
//! du = v dt
//! dv = (Δu − u − v + sin u)/ε dt + ε^(α−1) dW1
//! dδ = θ dt
//! dθ = (−θ − δ − γv)/ε dt + ε^(α−1) dW2,      ∂u/∂n = θ
//! ```
//!
//! One step freezes the forcing over `[tₙ, tₙ₊₁]` and integrates the linear
//! damping and the noise exactly. The conservative terms (stiffness, the
//! zeroth-order term and the flux exchange between `v` and `θ`) are taken at
//! step midpoints, so they cancel in the discrete energy balance:
//!
//! ```text
//! F = W⁻¹(−(S + W) ū + Γᵀ θ̄) + sin uⁿ,   v' = F + (v − F) a + η₁,   a = e^{−dt/ε}
//! G = −δ̄ − γ v̄,                           θ' = G + (θ − G) a + η₂
//! u' = u + dt (v + v' − η₁)/2,             δ' = δ + dt (θ + θ' − η₂)/2
//! ```
//!
//! with `x̄ = (xⁿ + xⁿ⁺¹)/2`. Leaving the fresh increment out of the position
//! update means it feeds the energy only through the kinetic term, as in the
//! Itô identity. `v'` and `θ'` come from one banded solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryField, Geometry, InteriorField};
use crate::linalg::{BandedCholesky, SymBanded};
use crate::noise::{whole_multiple, NoiseCursor, NoiseModel, OuKernel, WienerIncrement};
use crate::stats::{mean_se, MeanSe};

/// Squared sharp constant of `u(0)² + u(1)² ≤ C² ‖u‖²_{H¹(0,1)}`.
pub fn trace_constant_sq() -> f64 {
    1.0 / 0.5f64.tanh()
}

pub const DEFAULT_R: f64 = 0.05;

/// The four quantities that must stay positive for the pseudo-energy to be
/// coercive and its dissipation to dominate the cross terms.
pub fn r_constraints(r: f64, eps: f64) -> [f64; 4] {
    let c2 = trace_constant_sq();
    [
        1.0 - 3.0 * r * c2,
        1.0 - r - r * c2 + eps * r * r,
        1.0 - 2.0 * r - 6.0 * r * c2 + 2.0 * eps * r * r,
        1.0 - 2.0 * r + eps * r * r,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullParams {
    pub eps: f64,
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    pub r: f64,
}

pub fn validate_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param("eps", format!("must lie in (0, 1/2), got {eps}")));
    }
    Ok(())
}

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.5 || alpha == 1.0 {
        return Err(Error::param(
            "alpha",
            format!("must lie in [1/2, 1) or (1, ∞), got {alpha}"),
        ));
    }
    Ok(())
}

impl FullParams {
    pub fn new(eps: f64, alpha: f64, dt: f64, t_end: f64) -> Result<Self> {
        let p = Self {
            eps,
            alpha,
            dt,
            t_end,
            r: DEFAULT_R,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_r(mut self, r: f64) -> Result<Self> {
        self.r = r;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        validate_eps(self.eps)?;
        validate_alpha(self.alpha)?;
        if !(self.dt > 0.0) || self.dt > self.eps / 10.0 * (1.0 + 1e-12) {
            return Err(Error::param(
                "dt",
                format!("must be positive and at most eps/10 = {}, got {}", self.eps / 10.0, self.dt),
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::param("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.r > 0.0 && self.r < 0.5) {
            return Err(Error::param("r", format!("must lie in (0, 1/2), got {}", self.r)));
        }
        if let Some(k) = r_constraints(self.r, self.eps).iter().position(|c| *c <= 0.0) {
            return Err(Error::param(
                "r",
                format!("r = {} violates pseudo-energy constraint #{}", self.r, k + 1),
            ));
        }
        Ok(())
    }

    /// Number of steps, or a contract error when `t_end` is not a whole
    /// number of steps.
    pub fn steps(&self) -> Result<usize> {
        whole_multiple(self.t_end, self.dt).ok_or_else(|| {
            Error::Contract(format!(
                "t_end = {} is not a whole number of steps dt = {}",
                self.t_end, self.dt
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub u: InteriorField,
    pub v: InteriorField,
    pub delta: BoundaryField,
    pub theta: BoundaryField,
    pub t: f64,
}

impl FullState {
    pub fn zero(n_interior: usize) -> Self {
        Self {
            u: InteriorField(vec![0.0; n_interior]),
            v: InteriorField(vec![0.0; n_interior]),
            delta: BoundaryField::ZERO,
            theta: BoundaryField::ZERO,
            t: 0.0,
        }
    }

    /// At rest with displacement `u` and boundary velocity `theta`, which
    /// should equal the outward derivative of `u` for compatible data.
    pub fn at_rest(u: InteriorField, theta: BoundaryField) -> Self {
        let n = u.len();
        Self {
            u,
            v: InteriorField(vec![0.0; n]),
            delta: BoundaryField::ZERO,
            theta,
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.delta.is_finite() && self.theta.is_finite()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            u: self.u.scaled(s),
            v: self.v.scaled(s),
            delta: self.delta.scaled(s),
            theta: self.theta.scaled(s),
            t: self.t,
        }
    }
}

fn coercive_weight(r: f64, eps: f64) -> f64 {
    1.0 - r + eps * r * r
}

/// `E_r` evaluated with the weighted quadrature and the stiffness form.
pub fn pseudo_energy(state: &FullState, r: f64, eps: f64, geo: &Geometry) -> f64 {
    let u = state.u.values();
    let vr: Vec<f64> = state.v.values().iter().zip(u).map(|(v, u)| v + r * u).collect();
    let thr = state.theta.add_scaled(r, &state.delta);
    let k = coercive_weight(r, eps);
    let cos_half: Vec<f64> = u.iter().map(|x| (x / 2.0).cos()).collect();
    let gu = geo.trace(&state.u).expect("state matches its geometry");
    eps * geo.mass_norm_sq(&vr)
        + geo.dirichlet(u)
        + k * geo.mass_norm_sq(u)
        + eps * thr.norm_sq()
        + k * state.delta.norm_sq()
        + 4.0 * geo.mass_norm_sq(&cos_half)
        + 2.0 * r * gu.dot(&state.delta)
}

/// Instantaneous integrands of the energy balance at one state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyRates {
    /// `2(1−εr)‖v_r‖²`, `2r‖∇u‖²`, `2r(1−r+εr²)‖u‖²`, `2(1−εr)|θ_r|²`, `2r(1−r+εr²)|δ|²`
    pub dissipation: [f64; 5],
    /// `2r⟨u, sin u⟩`, `4r⟨γu, θ_r⟩`, `−4r²⟨γu, δ⟩`
    pub cross: [f64; 3],
}

pub fn energy_rates(state: &FullState, r: f64, eps: f64, geo: &Geometry) -> EnergyRates {
    let u = state.u.values();
    let vr: Vec<f64> = state.v.values().iter().zip(u).map(|(v, u)| v + r * u).collect();
    let thr = state.theta.add_scaled(r, &state.delta);
    let k = coercive_weight(r, eps);
    let gu = geo.trace(&state.u).expect("state matches its geometry");
    let sin_u: Vec<f64> = u.iter().map(|x| x.sin()).collect();
    EnergyRates {
        dissipation: [
            2.0 * (1.0 - eps * r) * geo.mass_norm_sq(&vr),
            2.0 * r * geo.dirichlet(u),
            2.0 * r * k * geo.mass_norm_sq(u),
            2.0 * (1.0 - eps * r) * thr.norm_sq(),
            2.0 * r * k * state.delta.norm_sq(),
        ],
        cross: [
            2.0 * r * geo.inner(u, &sin_u),
            4.0 * r * gu.dot(&thr),
            -4.0 * r * r * gu.dot(&state.delta),
        ],
    }
}

/// Cumulative terms of the energy balance at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LedgerRecord {
    pub t: f64,
    pub energy: f64,
    /// Left-endpoint time integrals of [`EnergyRates::dissipation`].
    pub dissipation: [f64; 5],
    /// Left-endpoint time integrals of [`EnergyRates::cross`].
    pub cross: [f64; 3],
    /// `Σ⟨2v_r, ε^α ΔW1⟩`, `Σ⟨2θ_r, ε^α ΔW2⟩`
    pub stochastic: [f64; 2],
    /// `ε^{2α−1} Tr Q1 t`, `ε^{2α−1} Tr Q2 t`
    pub trace: [f64; 2],
}

impl LedgerRecord {
    /// Right-hand side of the balance: what the energy should be.
    pub fn predicted(&self, initial_energy: f64) -> f64 {
        initial_energy - self.dissipation.iter().sum::<f64>()
            + self.cross.iter().sum::<f64>()
            + self.stochastic.iter().sum::<f64>()
            + self.trace.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub r: f64,
    pub eps: f64,
    pub records: Vec<LedgerRecord>,
}

impl EnergyLedger {
    /// Energy minus its predicted value, per record.
    pub fn residuals(&self) -> Vec<f64> {
        let e0 = self.records.first().map_or(0.0, |r| r.energy);
        self.records.iter().map(|rec| rec.energy - rec.predicted(e0)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<FullState>,
    pub ledger: EnergyLedger,
}

/// Per-time residual of the pseudo-energy balance of a recorded run.
pub fn energy_residual(trajectory: &Trajectory, r: f64) -> Result<Vec<f64>> {
    if trajectory.ledger.r != r {
        return Err(Error::Contract(format!(
            "ledger was recorded with r = {}, requested r = {r}",
            trajectory.ledger.r
        )));
    }
    if trajectory.ledger.records.len() != trajectory.states.len() {
        return Err(Error::Contract("ledger and trajectory are misaligned".into()));
    }
    Ok(trajectory.ledger.residuals())
}

/// Stepper with the per-`(ε, α, dt)` factorization cached.
#[derive(Debug, Clone)]
pub struct FullSystem<'a> {
    geo: &'a Geometry,
    model: &'a NoiseModel,
    params: FullParams,
    kernel: OuKernel,
    solver: BandedCholesky,
    eps_alpha: f64,
    trace_rates: [f64; 2],
}

impl<'a> FullSystem<'a> {
    pub fn new(geo: &'a Geometry, model: &'a NoiseModel, params: FullParams) -> Result<Self> {
        params.validate()?;
        if geo.grid() != model.grid() {
            return Err(Error::Contract("geometry and noise model use different grids".into()));
        }
        let kernel = OuKernel::new(model, params.eps, params.alpha, params.dt);
        let c = 1.0 - kernel.decay;
        let q = c * params.dt / 4.0;
        let beta = c / (2.0 * (1.0 + q));
        let stiffness = geo.stiffness();
        let mut m = SymBanded::zeros(stiffness.dim(), stiffness.half_bandwidth());
        m.add_scaled(stiffness, q);
        m.add_diagonal(geo.weights(), 1.0 + q);
        geo.add_trace_gram(&mut m, c * beta / 2.0);
        let solver = m.cholesky()?;
        // discrete Itô correction: Σ λ_i ‖e_i‖² in the weighted quadrature
        let tr_h: f64 = model
            .lambda1()
            .iter()
            .enumerate()
            .map(|(i, l)| l * geo.mass_norm_sq(model.basis_vector(i)))
            .sum();
        let amp = params.eps.powf(2.0 * params.alpha - 1.0);
        Ok(Self {
            geo,
            model,
            params,
            kernel,
            solver,
            eps_alpha: params.eps.powf(params.alpha),
            trace_rates: [amp * tr_h, amp * model.trace_q2()],
        })
    }

    pub fn params(&self) -> &FullParams {
        &self.params
    }

    pub fn geometry(&self) -> &Geometry {
        self.geo
    }

    pub fn model(&self) -> &NoiseModel {
        self.model
    }

    pub fn kernel(&self) -> &OuKernel {
        &self.kernel
    }

    /// `e^{−dt/ε}`
    pub fn decay(&self) -> f64 {
        self.kernel.decay
    }


    pub fn step(&self, s: &FullState, inc: &WienerIncrement) -> Result<FullState> {
        let p = &self.params;
        if (inc.dt - p.dt).abs() > 1e-12 * p.dt {
            return Err(Error::Contract(format!(
                "increment dt = {} does not match step dt = {}",
                inc.dt, p.dt
            )));
        }
        let dt = p.dt;
        let a = self.kernel.decay;
        let c = 1.0 - a;
        let q = c * dt / 4.0;
        let beta = c / (2.0 * (1.0 + q));
        let w = self.geo.weights();
        let u = s.u.values();
        let v = s.v.values();
        let eta1 = self.kernel.eta1(self.model, inc);
        let eta2 = self.kernel.eta2(inc);

        // θ' = A − β γv'
        let gv = self.geo.trace(&s.v)?;
        let lead = s.theta.scaled(a) + s.delta.scaled(-c) + (s.theta - eta2).scaled(-q) + gv.scaled(-c / 2.0) + eta2;
        let lead = lead.scaled(1.0 / (1.0 + q));

        // (W + q(S + W) + (cβ/2) ΓᵀΓ) v' = W(av + c sin u + η₁) − c(S + W)(u + dt(v − η₁)/4) + (c/2) Γᵀ(θ + A)
        let base: Vec<f64> = (0..u.len()).map(|j| u[j] + dt * (v[j] - eta1[j]) / 4.0).collect();
        let mut rhs = self.geo.stiffness().mul_vec(&base);
        for j in 0..rhs.len() {
            rhs[j] = w[j] * (a * v[j] + c * u[j].sin() + eta1[j]) - c * (rhs[j] + w[j] * base[j]);
        }
        self.geo.add_trace_adjoint(&mut rhs, (s.theta + lead).scaled(c / 2.0));
        self.solver.solve_in_place(&mut rhs);
        let v_new = InteriorField(rhs);
        let theta_new = lead + self.geo.trace(&v_new)?.scaled(-beta);

        let u_new = InteriorField((0..u.len()).map(|j| u[j] + dt * (v[j] + v_new.0[j] - eta1[j]) / 2.0).collect());
        let delta_new = s.delta + (s.theta + theta_new - eta2).scaled(dt / 2.0);

        let next = FullState {
            u: u_new,
            v: v_new,
            delta: delta_new,
            theta: theta_new,
            t: s.t + p.dt,
        };
        if !next.is_finite() {
            return Err(Error::BlowUp { t: next.t });
        }
        Ok(next)
    }

    pub fn energy(&self, s: &FullState) -> f64 {
        pseudo_energy(s, self.params.r, self.params.eps, self.geo)
    }

    /// Stochastic-integral increments `⟨2v_r, ε^α ΔW1⟩`, `⟨2θ_r, ε^α ΔW2⟩`
    /// with the integrands at the left endpoint.
    fn stochastic_terms(&self, s: &FullState, inc: &WienerIncrement) -> [f64; 2] {
        let r = self.params.r;
        let vr: Vec<f64> = s.v.values().iter().zip(s.u.values()).map(|(v, u)| v + r * u).collect();
        let thr = s.theta.add_scaled(r, &s.delta);
        [
            2.0 * self.eps_alpha * self.geo.inner(&vr, inc.dw1.values()),
            2.0 * self.eps_alpha * thr.dot(&inc.dw2),
        ]
    }

    /// Runs from `initial` to `t_end`, calling `observe` on every state
    /// (including the initial one) together with its ledger record.
    pub fn run_with(
        &self,
        initial: &FullState,
        noise: &mut NoiseCursor<'_>,
        mut observe: impl FnMut(&FullState, &LedgerRecord),
    ) -> Result<FullState> {
        let steps = self.params.steps()?;
        let dt = self.params.dt;
        let mut rec = LedgerRecord {
            t: initial.t,
            energy: self.energy(initial),
            ..Default::default()
        };
        observe(initial, &rec);
        let mut state = initial.clone();
        for _ in 0..steps {
            let inc = noise.next_increment(dt)?;
            let rates = energy_rates(&state, self.params.r, self.params.eps, self.geo);
            let stoch = self.stochastic_terms(&state, &inc);
            state = self.step(&state, &inc)?;
            for k in 0..5 {
                rec.dissipation[k] += rates.dissipation[k] * dt;
            }
            for k in 0..3 {
                rec.cross[k] += rates.cross[k] * dt;
            }
            for k in 0..2 {
                rec.stochastic[k] += stoch[k];
                rec.trace[k] += self.trace_rates[k] * dt;
            }
            rec.t = state.t;
            rec.energy = self.energy(&state);
            observe(&state, &rec);
        }
        Ok(state)
    }

    pub fn simulate(&self, initial: &FullState, noise: &mut NoiseCursor<'_>) -> Result<Trajectory> {
        let mut states = Vec::new();
        let mut records = Vec::new();
        self.run_with(initial, noise, |s, rec| {
            states.push(s.clone());
            records.push(*rec);
        })?;
        Ok(Trajectory {
            dt: self.params.dt,
            states,
            ledger: EnergyLedger {
                r: self.params.r,
                eps: self.params.eps,
                records,
            },
        })
    }
}

/// One step of the full system; builds the stepper on every call.
pub fn step_full(
    state: &FullState,
    params: &FullParams,
    inc: &WienerIncrement,
    geo: &Geometry,
    model: &NoiseModel,
) -> Result<FullState> {
    FullSystem::new(geo, model, *params)?.step(state, inc)
}

/// Full run with its energy ledger.
pub fn simulate_full(
    params: &FullParams,
    initial: &FullState,
    geo: &Geometry,
    model: &NoiseModel,
    noise: &mut NoiseCursor<'_>,
) -> Result<Trajectory> {
    FullSystem::new(geo, model, *params)?.simulate(initial, noise)
}

/// Squared uniform-quadrature norms of one state, plus `‖v‖²` in the
/// weighted quadrature of the energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub v: f64,
    pub v_energy: f64,
    pub theta: f64,
    pub u: f64,
    pub grad_u: f64,
    pub delta: f64,
}

pub fn moments(state: &FullState, geo: &Geometry) -> Moments {
    let nu = geo.norms(&state.u).expect("state matches its geometry");
    let nv = geo.norms(&state.v).expect("state matches its geometry");
    Moments {
        v: nv.l2 * nv.l2,
        v_energy: geo.mass_norm_sq(state.v.values()),
        theta: state.theta.norm_sq(),
        u: nu.l2 * nu.l2,
        grad_u: nu.h1 * nu.h1 - nu.l2 * nu.l2,
        delta: state.delta.norm_sq(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    pub t: f64,
    pub v: MeanSe,
    pub theta: MeanSe,
    pub u: MeanSe,
    pub grad_u: MeanSe,
    pub delta: MeanSe,
    /// `‖v‖²_W + |θ|²` per replica, then averaged; the norm of the energy
    /// balance, in which the stationary level is `½ ε^{2α−1}(Tr Q1 + Tr Q2)`.
    pub kinetic: MeanSe,
    /// The same with the uniform quadrature.
    pub kinetic_uniform: MeanSe,
}

/// Sample means and standard errors across replicas at each common time.
/// `ensemble[replica][k]` is the moment record at time `times[k]`.
pub fn moment_stats(times: &[f64], ensemble: &[Vec<Moments>]) -> Result<Vec<MomentSummary>> {
    if ensemble.len() < 2 {
        return Err(Error::Contract(format!(
            "moment statistics need at least 2 replicas, got {}",
            ensemble.len()
        )));
    }
    if ensemble.iter().any(|s| s.len() != times.len()) {
        return Err(Error::Contract("replica series have different lengths".into()));
    }
    let col = |k: usize, f: &dyn Fn(&Moments) -> f64| -> MeanSe {
        let xs: Vec<f64> = ensemble.iter().map(|s| f(&s[k])).collect();
        mean_se(&xs)
    };
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| MomentSummary {
            t,
            v: col(k, &|m| m.v),
            theta: col(k, &|m| m.theta),
            u: col(k, &|m| m.u),
            grad_u: col(k, &|m| m.grad_u),
            delta: col(k, &|m| m.delta),
            kinetic: col(k, &|m| m.v_energy + m.theta),
            kinetic_uniform: col(k, &|m| m.v + m.theta),
        })
        .collect())
}

/// Kinetic bound `(E‖v₀‖²+E|θ₀|²) e^{−2t/ε} + ½ ε^{2α−1}(Tr Q1 + Tr Q2)`.
pub fn kinetic_bound(initial: f64, t: f64, eps: f64, alpha: f64, trace_q: f64) -> f64 {
    initial * (-2.0 * t / eps).exp() + 0.5 * eps.powf(2.0 * alpha - 1.0) * trace_q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid1D;
    use crate::noise::{CovarianceSpec, NoiseTable};
    use std::f64::consts::PI;

    fn setup(n: usize, master_dt: f64, c: f64, b: f64) -> (Geometry, NoiseModel) {
        let grid = Grid1D::new(n).unwrap();
        let model = NoiseModel::new(
            grid,
            CovarianceSpec::Interior {
                c,
                gamma: 2.0,
                modes: 50.min(n),
            },
            CovarianceSpec::Boundary { left: b, right: b },
            master_dt,
        )
        .unwrap();
        (Geometry::new(grid), model)
    }

    fn sine_state(geo: &Geometry) -> FullState {
        FullState::at_rest(
            geo.grid().sample(|x| (PI * x).sin()),
            BoundaryField::splat(-PI),
        )
    }

    #[test]
    fn parameter_validation() {
        assert!(FullParams::new(0.25, 0.5, 0.025, 1.0).is_ok());
        assert!(FullParams::new(0.5, 0.5, 0.025, 1.0).is_err());
        assert!(FullParams::new(0.25, 1.0, 0.025, 1.0).is_err());
        assert!(FullParams::new(0.25, 0.3, 0.025, 1.0).is_err());
        assert!(FullParams::new(0.25, 0.5, 0.03, 1.0).is_err());
        assert!(FullParams::new(0.25, 0.5, 0.025, 1.0).unwrap().with_r(0.1).is_err());
        assert!(FullParams::new(0.25, 2.0, 0.025, 1.0).unwrap().with_r(0.05).is_ok());
    }

    #[test]
    fn default_r_satisfies_constraints_across_ladder() {
        for k in 2..=8 {
            let eps = 2f64.powi(-k);
            assert!(r_constraints(DEFAULT_R, eps).iter().all(|c| *c > 0.0));
        }
    }

    #[test]
    fn time_grid_mismatch_is_a_contract_error() {
        let p = FullParams {
            eps: 0.25,
            alpha: 0.5,
            dt: 0.3,
            t_end: 1.0,
            r: DEFAULT_R,
        };
        assert!(matches!(p.steps(), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_state_zero_noise_stays_zero() {
        let (geo, model) = setup(16, 0.025, 0.0, 0.0);
        let sys = FullSystem::new(&geo, &model, FullParams::new(0.25, 0.5, 0.025, 1.0).unwrap()).unwrap();
        let table = NoiseTable::silent(model.modes(), 40);
        let traj = sys.simulate(&FullState::zero(16), &mut table.cursor(&model)).unwrap();
        assert_eq!(traj.states.len(), 41);
        for s in &traj.states {
            assert_eq!(s.u.max_abs() + s.v.max_abs(), 0.0);
            assert_eq!(s.delta.l2() + s.theta.l2(), 0.0);
        }
        assert!(energy_residual(&traj, DEFAULT_R).unwrap().iter().all(|r| r.abs() <= 1e-10));
    }

    #[test]
    fn constant_data_one_step_satisfies_the_midpoint_relations() {
        let (geo, model) = setup(16, 0.025, 0.0, 0.0);
        let (eps, dt, c) = (0.25, 0.025, 0.8);
        let sys = FullSystem::new(&geo, &model, FullParams::new(eps, 0.5, dt, 1.0).unwrap()).unwrap();
        let s0 = FullState::at_rest(geo.grid().sample(|_| c), BoundaryField::ZERO);
        let inc = WienerIncrement::zero(16, model.modes(), dt);
        let s1 = sys.step(&s0, &inc).unwrap();
        let a = (-dt / eps).exp();
        let u_mid = s0.u.add_scaled(1.0, &s1.u).scaled(0.5);
        let lap = geo.laplacian_with_flux(&u_mid, s1.theta.scaled(0.5)).unwrap();
        for j in 0..16 {
            let f = lap.0[j] - u_mid.0[j] + c.sin();
            assert!((s1.v.0[j] - (1.0 - a) * f).abs() < 1e-13);
            assert!((s1.u.0[j] - (c + dt * s1.v.0[j] / 2.0)).abs() < 1e-13);
        }
        let g = (s1.delta.scaled(0.5) + geo.trace(&s1.v).unwrap().scaled(0.5)).scaled(-1.0);
        assert!(s1.theta.max_abs_diff(&g.scaled(1.0 - a)) < 1e-13);
        // far from the boundary the step is the scalar relaxation of −u + sin u
        let v = (1.0 - a) * (-c + c.sin());
        assert!((s1.v.0[8] - v).abs() < 1e-3 * v.abs());
    }

    #[test]
    fn flux_enters_the_step() {
        let (geo, model) = setup(16, 0.025, 0.0, 0.0);
        let sys = FullSystem::new(&geo, &model, FullParams::new(0.25, 0.5, 0.025, 1.0).unwrap()).unwrap();
        let inc = WienerIncrement::zero(16, model.modes(), 0.025);
        let s0 = sine_state(&geo);
        let mut perturbed = s0.clone();
        perturbed.theta.left += 0.1;
        let a = sys.step(&s0, &inc).unwrap();
        let b = sys.step(&perturbed, &inc).unwrap();
        assert!(a.v.max_abs_diff(&b.v) > 1e-6);
    }

    #[test]
    fn pseudo_energy_examples() {
        let geo = Geometry::new(Grid1D::new(63).unwrap());
        let h = geo.grid().h();
        let zero = FullState::zero(63);
        assert!((pseudo_energy(&zero, 0.1, 0.25, &geo) - 4.0).abs() <= h);
        let pi_state = FullState::at_rest(geo.grid().sample(|_| PI), BoundaryField::ZERO);
        let e = pseudo_energy(&pi_state, 0.1, 0.25, &geo);
        assert!((e - 8.931_991_982_985_87).abs() <= h, "{e}");
        let generic = FullState {
            u: geo.grid().sample(|x| 0.3 + x),
            v: geo.grid().sample(|x| x * x),
            delta: BoundaryField::new(0.2, -0.1),
            theta: BoundaryField::new(0.5, 0.4),
            t: 0.0,
        };
        let e1 = pseudo_energy(&generic, 0.05, 0.25, &geo);
        let e2 = pseudo_energy(&generic.scaled(2.0), 0.05, 0.25, &geo);
        assert!((e2 - 2.0 * e1).abs() > 1e-3);
    }

    #[test]
    fn sine_data_stays_bounded_under_noise() {
        let (geo, model) = setup(64, 0.0125, 1.0, 0.5);
        let p = FullParams::new(0.25, 0.5, 0.0125, 1.0).unwrap();
        let sys = FullSystem::new(&geo, &model, p).unwrap();
        let s0 = sine_state(&geo);
        let n0 = geo.norms(&s0.u).unwrap().l2.powi(2);
        for rep in 0..20 {
            let table = NoiseTable::generate(2024, rep, model.modes(), 80);
            let end = sys.run_with(&s0, &mut table.cursor(&model), |_, _| {}).unwrap();
            assert!(end.is_finite());
            assert!(geo.norms(&end.u).unwrap().l2.powi(2) <= 10.0 * n0);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (geo, model) = setup(32, 0.025, 1.0, 0.5);
        let sys = FullSystem::new(&geo, &model, FullParams::new(0.25, 0.5, 0.025, 0.5).unwrap()).unwrap();
        let run = || {
            let table = NoiseTable::generate(5, 1, model.modes(), 20);
            sys.simulate(&sine_state(&geo), &mut table.cursor(&model)).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.states, b.states);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn deterministic_residual_is_first_order() {
        let eps = 0.25;
        let max_residual = |dt: f64| {
            let (geo, model) = setup(32, dt, 0.0, 0.0);
            let sys = FullSystem::new(&geo, &model, FullParams::new(eps, 0.5, dt, 1.0).unwrap()).unwrap();
            let table = NoiseTable::silent(model.modes(), (1.0 / dt).round() as usize);
            let traj = sys.simulate(&sine_state(&geo), &mut table.cursor(&model)).unwrap();
            energy_residual(&traj, DEFAULT_R)
                .unwrap()
                .iter()
                .fold(0.0_f64, |m, r| m.max(r.abs()))
        };
        let r10 = max_residual(eps / 10.0);
        let r20 = max_residual(eps / 20.0);
        let r40 = max_residual(eps / 40.0);
        for q in [r20 / r10, r40 / r20] {
            assert!((0.35..=0.65).contains(&q), "{r10} {r20} {r40}");
        }
    }

    #[test]
    fn moment_stats_needs_two_replicas() {
        let m = Moments {
            v: 1.0,
            v_energy: 1.0,
            theta: 0.0,
            u: 0.0,
            grad_u: 0.0,
            delta: 0.0,
        };
        assert!(moment_stats(&[0.0], &[vec![m]]).is_err());
        let s = moment_stats(&[0.0], &[vec![m], vec![m]]).unwrap();
        assert_eq!(s[0].kinetic.mean, 1.0);
        assert_eq!(s[0].kinetic.se, 0.0);
    }
}
