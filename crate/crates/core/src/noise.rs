//! Trace-class Wiener processes on the interior (W1) and on the boundary (W2).
//!
//! Every standard normal is a pure function of
//! `(seed, replica, channel, mode, master_step)`: the first four select a
//! ChaCha8 key and the master step selects the position in that keystream.
//! Steppers running at a coarser `dt` sum consecutive master normals, so
//! systems integrated with different step sizes see the same Brownian path.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryField, Grid1D, InteriorField};

/// Relative tolerance when deciding whether `dt` is a whole number of master steps.
pub const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovarianceSpec {
    /// `λ_i = c · i^(-gamma)`, `i = 1..=modes`, on the basis `√2 sin(iπx)`.
    Interior { c: f64, gamma: f64, modes: usize },
    /// Independent scalar Brownian motions at x = 0 and x = 1.
    Boundary { left: f64, right: f64 },
}

impl CovarianceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CovarianceSpec::Interior { c, gamma, modes } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(Error::param("noise.c", format!("must be finite and >= 0, got {c}")));
                }
                if !(gamma > 1.0 && gamma.is_finite()) {
                    return Err(Error::param("noise.gamma", format!("must exceed 1, got {gamma}")));
                }
                if modes == 0 {
                    return Err(Error::param("noise.modes", "must be positive"));
                }
            }
            CovarianceSpec::Boundary { left, right } => {
                for (name, v) in [("noise.boundary_left", left), ("noise.boundary_right", right)] {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn channel(&self) -> Channel {
        match self {
            CovarianceSpec::Interior { .. } => Channel::W1,
            CovarianceSpec::Boundary { .. } => Channel::W2,
        }
    }

    pub fn num_modes(&self) -> usize {
        match *self {
            CovarianceSpec::Interior { modes, .. } => modes,
            CovarianceSpec::Boundary { .. } => 2,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        match *self {
            CovarianceSpec::Interior { c, gamma, modes } => {
                (1..=modes).map(|i| c * (i as f64).powf(-gamma)).collect()
            }
            CovarianceSpec::Boundary { left, right } => vec![left, right],
        }
    }
}

/// Partial trace `Σ λ_i` over the truncation.
pub fn trace_of(spec: &CovarianceSpec) -> f64 {
    spec.eigenvalues().iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    W1,
    W2,
}

impl Channel {
    fn tag(self) -> u64 {
        match self {
            Channel::W1 => 0x5731,
            Channel::W2 => 0x5732,
        }
    }
}

/// Keyed source of standard normals for one `(seed, replica, channel)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
    pub replica: u64,
    pub channel: Channel,
}

impl NoiseStream {
    pub fn new(seed: u64, replica: u64, channel: Channel) -> Self {
        Self {
            seed,
            replica,
            channel,
        }
    }

    fn rng(&self, mode: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.replica.to_le_bytes());
        key[16..24].copy_from_slice(&self.channel.tag().to_le_bytes());
        key[24..].copy_from_slice(&(mode as u64).to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    /// Standard normal for `(mode, step)`; random access.
    pub fn normal(&self, mode: usize, step: u64) -> f64 {
        let mut rng = self.rng(mode);
        rng.set_word_pos(u128::from(step) * WORDS_PER_NORMAL);
        box_muller(&mut rng)
    }

    /// Sequential reader over the steps of one mode, starting at `start`.
    /// Yields exactly the values of [`NoiseStream::normal`].
    pub fn mode_reader(&self, mode: usize, start: u64) -> ModeReader {
        let mut rng = self.rng(mode);
        rng.set_word_pos(u128::from(start) * WORDS_PER_NORMAL);
        ModeReader { rng }
    }
}

const WORDS_PER_NORMAL: u128 = 4;

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let x = rng.next_u64();
    let y = rng.next_u64();
    let u1 = ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (y >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub struct ModeReader {
    rng: ChaCha8Rng,
}

impl Iterator for ModeReader {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        Some(box_muller(&mut self.rng))
    }
}

/// Brownian increment over one step of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrement {
    pub dw1: InteriorField,
    pub dw2: BoundaryField,
    pub dt: f64,
    /// Standardized per-mode normals (unit variance) behind `dw1`.
    pub z1: Vec<f64>,
    /// Standardized normals behind `dw2`.
    pub z2: [f64; 2],
}

impl WienerIncrement {
    pub fn zero(n_interior: usize, modes: usize, dt: f64) -> Self {
        Self {
            dw1: InteriorField(vec![0.0; n_interior]),
            dw2: BoundaryField::ZERO,
            dt,
            z1: vec![0.0; modes],
            z2: [0.0; 2],
        }
    }
}

/// Covariances, sine basis and master time step shared by every replica.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    grid: Grid1D,
    interior: CovarianceSpec,
    boundary: CovarianceSpec,
    lambda1: Vec<f64>,
    lambda2: [f64; 2],
    // mode-major: basis[i * n + j] = √2 sin((i+1) π x_j)
    basis: Vec<f64>,
    master_dt: f64,
}

impl NoiseModel {
    pub fn new(grid: Grid1D, interior: CovarianceSpec, boundary: CovarianceSpec, master_dt: f64) -> Result<Self> {
        interior.validate()?;
        boundary.validate()?;
        if interior.channel() != Channel::W1 || boundary.channel() != Channel::W2 {
            return Err(Error::Contract(
                "interior spec must drive W1 and boundary spec W2".into(),
            ));
        }
        if !(master_dt > 0.0 && master_dt.is_finite()) {
            return Err(Error::param("master_dt", format!("must be positive, got {master_dt}")));
        }
        let n = grid.n_interior();
        let modes = interior.num_modes();
        if modes > n {
            return Err(Error::param(
                "noise.modes",
                format!("{modes} modes cannot be resolved on {n} interior nodes"),
            ));
        }
        let mut basis = Vec::with_capacity(modes * n);
        for i in 1..=modes {
            for x in grid.nodes() {
                basis.push(std::f64::consts::SQRT_2 * (i as f64 * std::f64::consts::PI * x).sin());
            }
        }
        let l2 = boundary.eigenvalues();
        Ok(Self {
            grid,
            interior,
            boundary,
            lambda1: interior.eigenvalues(),
            lambda2: [l2[0], l2[1]],
            basis,
            master_dt,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn interior(&self) -> &CovarianceSpec {
        &self.interior
    }

    pub fn boundary(&self) -> &CovarianceSpec {
        &self.boundary
    }

    pub fn modes(&self) -> usize {
        self.lambda1.len()
    }

    pub fn lambda1(&self) -> &[f64] {
        &self.lambda1
    }

    pub fn lambda2(&self) -> [f64; 2] {
        self.lambda2
    }

    pub fn master_dt(&self) -> f64 {
        self.master_dt
    }

    pub fn trace_q1(&self) -> f64 {
        self.lambda1.iter().sum()
    }

    pub fn trace_q2(&self) -> f64 {
        self.lambda2[0] + self.lambda2[1]
    }

    /// `e_i` at the grid nodes.
    pub fn basis_vector(&self, mode: usize) -> &[f64] {
        let n = self.grid.n_interior();
        &self.basis[mode * n..(mode + 1) * n]
    }

    /// `Σ_i coeff_i e_i` at the grid nodes.
    pub fn synthesize(&self, coeff: &[f64]) -> Vec<f64> {
        let n = self.grid.n_interior();
        let mut out = vec![0.0; n];
        for (i, &c) in coeff.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(&self.basis[i * n..(i + 1) * n]) {
                *o += c * e;
            }
        }
        out
    }

    /// Number of master steps in `dt`, or a contract error if `dt` is not a
    /// whole multiple of the master step.
    pub fn steps_per(&self, dt: f64) -> Result<usize> {
        whole_multiple(dt, self.master_dt).ok_or_else(|| {
            Error::Contract(format!(
                "dt = {dt} is not a whole multiple of the master step {}",
                self.master_dt
            ))
        })
    }

    /// Builds the increment from per-mode sums of `count` master normals.
    pub fn assemble(&self, s1: &[f64], s2: [f64; 2], count: usize) -> WienerIncrement {
        let dt = count as f64 * self.master_dt;
        let root = (count as f64).sqrt();
        let sm = self.master_dt.sqrt();
        let coeff: Vec<f64> = s1
            .iter()
            .zip(&self.lambda1)
            .map(|(s, l)| l.sqrt() * sm * s)
            .collect();
        WienerIncrement {
            dw1: InteriorField(self.synthesize(&coeff)),
            dw2: BoundaryField::new(
                self.lambda2[0].sqrt() * sm * s2[0],
                self.lambda2[1].sqrt() * sm * s2[1],
            ),
            dt,
            z1: s1.iter().map(|s| s / root).collect(),
            z2: [s2[0] / root, s2[1] / root],
        }
    }
}

/// `Some(k)` when `dt ≈ k · base` for a positive integer `k`.
pub fn whole_multiple(dt: f64, base: f64) -> Option<usize> {
    if !(dt > 0.0 && base > 0.0) {
        return None;
    }
    let k = (dt / base).round();
    if k >= 1.0 && ((k * base - dt) / dt).abs() <= GRID_TOLERANCE {
        Some(k as usize)
    } else {
        None
    }
}

/// Coarsest step that every entry of `dts` is a whole multiple of.
pub fn master_step(dts: &[f64]) -> Result<f64> {
    let d = dts.iter().copied().fold(f64::INFINITY, f64::min);
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::param("dt", "time steps must be positive"));
    }
    for k in 1..=4096usize {
        let cand = d / k as f64;
        if dts.iter().all(|&dt| whole_multiple(dt, cand).is_some()) {
            return Ok(cand);
        }
    }
    Err(Error::Config(format!(
        "time steps {dts:?} have no common refinement within 4096 subdivisions"
    )))
}

/// Random-access increment over master steps `[master_step, master_step + dt/master_dt)`.
pub fn sample_increment(
    w1: &NoiseStream,
    w2: &NoiseStream,
    model: &NoiseModel,
    master_step: u64,
    dt: f64,
) -> Result<WienerIncrement> {
    if w1.channel != Channel::W1 || w2.channel != Channel::W2 {
        return Err(Error::Contract("stream tags must be (W1, W2)".into()));
    }
    let count = model.steps_per(dt)?;
    let mut s1 = vec![0.0; model.modes()];
    let mut s2 = [0.0; 2];
    for k in 0..count as u64 {
        let step = master_step + k;
        for (i, s) in s1.iter_mut().enumerate() {
            *s += w1.normal(i, step);
        }
        for (m, s) in s2.iter_mut().enumerate() {
            *s += w2.normal(m, step);
        }
    }
    Ok(model.assemble(&s1, s2, count))
}

/// All master normals of one replica over a fixed horizon, step-major.
#[derive(Debug, Clone)]
pub struct NoiseTable {
    modes: usize,
    steps: usize,
    z1: Vec<f64>,
    z2: Vec<[f64; 2]>,
}

impl NoiseTable {
    pub fn generate(seed: u64, replica: u64, modes: usize, steps: usize) -> Self {
        let w1 = NoiseStream::new(seed, replica, Channel::W1);
        let w2 = NoiseStream::new(seed, replica, Channel::W2);
        let mut z1 = vec![0.0; modes * steps];
        for i in 0..modes {
            for (k, z) in w1.mode_reader(i, 0).take(steps).enumerate() {
                z1[k * modes + i] = z;
            }
        }
        let mut z2 = vec![[0.0; 2]; steps];
        for m in 0..2 {
            for (k, z) in w2.mode_reader(m, 0).take(steps).enumerate() {
                z2[k][m] = z;
            }
        }
        Self { modes, steps, z1, z2 }
    }

    /// Table with every normal zero (noise switched off, same bookkeeping).
    pub fn silent(modes: usize, steps: usize) -> Self {
        Self {
            modes,
            steps,
            z1: vec![0.0; modes * steps],
            z2: vec![[0.0; 2]; steps],
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn z1(&self, step: usize) -> &[f64] {
        &self.z1[step * self.modes..(step + 1) * self.modes]
    }

    pub fn z2(&self, step: usize) -> [f64; 2] {
        self.z2[step]
    }

    pub fn cursor<'a>(&'a self, model: &'a NoiseModel) -> NoiseCursor<'a> {
        NoiseCursor {
            table: self,
            model,
            position: 0,
            total1: vec![0.0; self.modes],
            total2: [0.0; 2],
        }
    }
}

/// Reads consecutive increments from a [`NoiseTable`] and keeps per-mode
/// running totals, accumulated one master normal at a time.
pub struct NoiseCursor<'a> {
    table: &'a NoiseTable,
    model: &'a NoiseModel,
    position: usize,
    total1: Vec<f64>,
    total2: [f64; 2],
}

impl NoiseCursor<'_> {
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn next_increment(&mut self, dt: f64) -> Result<WienerIncrement> {
        let count = self.model.steps_per(dt)?;
        if self.position + count > self.table.steps {
            return Err(Error::Contract(format!(
                "noise table holds {} master steps, requested up to {}",
                self.table.steps,
                self.position + count
            )));
        }
        let modes = self.table.modes;
        let mut s1 = vec![0.0; modes];
        let mut s2 = [0.0; 2];
        for k in self.position..self.position + count {
            let z = self.table.z1(k);
            for i in 0..modes {
                s1[i] += z[i];
                self.total1[i] += z[i];
            }
            let b = self.table.z2(k);
            for m in 0..2 {
                s2[m] += b[m];
                self.total2[m] += b[m];
            }
        }
        self.position += count;
        Ok(self.model.assemble(&s1, s2, count))
    }

    /// Per-mode sums of all master normals consumed so far.
    pub fn totals(&self) -> (&[f64], [f64; 2]) {
        (&self.total1, self.total2)
    }
}

/// `(‖W1(t)‖², |W2(t)|²)` for replicas `0..samples`, the interior norm in
/// the uniform quadrature where the sine basis is orthonormal.
pub fn wiener_norms(model: &NoiseModel, seed: u64, samples: u64, t: f64) -> Result<Vec<(f64, f64)>> {
    let steps = model.steps_per(t)?;
    let h = model.grid().h();
    (0..samples)
        .map(|k| {
            let table = NoiseTable::generate(seed, k, model.modes(), steps);
            let w = table.cursor(model).next_increment(t)?;
            let w1 = h * w.dw1.values().iter().map(|x| x * x).sum::<f64>();
            Ok((w1, w.dw2.norm_sq()))
        })
        .collect()
}

/// Per-step Ornstein–Uhlenbeck transition for `dx = −x/ε dt + ε^(α−1) dW`.
#[derive(Debug, Clone)]
pub struct OuKernel {
    /// `e^{−dt/ε}`
    pub decay: f64,
    sigma1: Vec<f64>,
    sigma2: [f64; 2],
}

impl OuKernel {
    pub fn new(model: &NoiseModel, eps: f64, alpha: f64, dt: f64) -> Self {
        let decay = (-dt / eps).exp();
        let scale = eps.powf(2.0 * alpha - 1.0) * (1.0 - decay * decay) / 2.0;
        Self {
            decay,
            sigma1: model.lambda1().iter().map(|l| (scale * l).sqrt()).collect(),
            sigma2: model.lambda2().map(|l| (scale * l).sqrt()),
        }
    }

    /// Per-mode standard deviations of the interior transition noise.
    pub fn sigma1(&self) -> &[f64] {
        &self.sigma1
    }

    pub fn sigma2(&self) -> [f64; 2] {
        self.sigma2
    }

    /// Interior transition noise as mode coefficients.
    pub fn eta1_coeff(&self, inc: &WienerIncrement) -> Vec<f64> {
        self.sigma1.iter().zip(&inc.z1).map(|(s, z)| s * z).collect()
    }

    pub fn eta1(&self, model: &NoiseModel, inc: &WienerIncrement) -> Vec<f64> {
        model.synthesize(&self.eta1_coeff(inc))
    }

    pub fn eta2(&self, inc: &WienerIncrement) -> BoundaryField {
        BoundaryField::new(self.sigma2[0] * inc.z2[0], self.sigma2[1] * inc.z2[1])
    }
}

/// Exact OU step of an interior field: `x' = e^{−dt/ε} x + η`.
pub fn ou_update(x: &InteriorField, kernel: &OuKernel, model: &NoiseModel, inc: &WienerIncrement) -> InteriorField {
    let eta = kernel.eta1(model, inc);
    InteriorField(x.values().iter().zip(&eta).map(|(v, e)| kernel.decay * v + e).collect())
}

/// Exact OU step of a boundary field.
pub fn ou_update_boundary(x: BoundaryField, kernel: &OuKernel, inc: &WienerIncrement) -> BoundaryField {
    x.scaled(kernel.decay) + kernel.eta2(inc)
}

/// Mean and variance of one OU mode after `dt`, starting from the given moments.
pub fn ou_transition_moments(mean: f64, var: f64, eps: f64, alpha: f64, lambda: f64, dt: f64) -> (f64, f64) {
    let a = (-dt / eps).exp();
    let noise = eps.powf(2.0 * alpha - 1.0) * lambda * (1.0 - a * a) / 2.0;
    (a * mean, a * a * var + noise)
}
