//! Banded symmetric positive-definite solver.
//!
//! The flux-coupled stiffness matrix has half-bandwidth 2 (the corner
//! closure reaches two nodes), so a banded Cholesky factorization replaces
//! the plain tridiagonal sweep.

use crate::error::{Error, Result};

/// Symmetric banded matrix stored by lower diagonals: `band[k][i]` holds
/// entry `(i, i - k)`.
#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    band: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        Self {
            n,
            band: vec![vec![0.0; n]; half_bandwidth + 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.band.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = i - j;
        if k > self.half_bandwidth() {
            0.0
        } else {
            self.band[k][i]
        }
    }

    /// Adds `value` to entry `(i, j)` (and its mirror).
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = i - j;
        assert!(k <= self.half_bandwidth(), "entry ({i},{j}) outside band");
        self.band[k][i] += value;
    }

    pub fn add_diagonal(&mut self, diag: &[f64], scale: f64) {
        for (d, x) in self.band[0].iter_mut().zip(diag) {
            *d += scale * x;
        }
    }

    /// `self += scale * other`, other's band must fit.
    pub fn add_scaled(&mut self, other: &SymBanded, scale: f64) {
        assert_eq!(self.n, other.n);
        assert!(other.half_bandwidth() <= self.half_bandwidth());
        for (k, row) in other.band.iter().enumerate() {
            for (a, b) in self.band[k].iter_mut().zip(row) {
                *a += scale * b;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = self.band[0][i] * x[i];
        }
        for k in 1..self.band.len() {
            for i in k..n {
                let a = self.band[k][i];
                if a != 0.0 {
                    y[i] += a * x[i - k];
                    y[i - k] += a * x[i];
                }
            }
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        BandedCholesky::factor(self)
    }
}

/// `A = L Lᵀ` with `L` lower banded.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    p: usize,
    // l[k][i] = L(i, i-k)
    l: Vec<Vec<f64>>,
    matrix: SymBanded,
}

impl BandedCholesky {
    fn factor(a: &SymBanded) -> Result<Self> {
        let n = a.n;
        let p = a.half_bandwidth();
        let mut l = vec![vec![0.0; n]; p + 1];
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                let mut s = a.get(i, j);
                let k0 = i.saturating_sub(p).max(j.saturating_sub(p));
                for k in k0..j {
                    s -= l[i - k][i] * l[j - k][j];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Contract(format!(
                            "matrix not positive definite at pivot {i}"
                        )));
                    }
                    l[0][i] = s.sqrt();
                } else {
                    l[i - j][i] = s / l[0][j];
                }
            }
        }
        Ok(Self {
            n,
            p,
            l,
            matrix: a.clone(),
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, p) = (self.n, self.p);
        for i in 0..n {
            let mut s = b[i];
            for k in 1..=p.min(i) {
                s -= self.l[k][i] * b[i - k];
            }
            b[i] = s / self.l[0][i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in 1..=p.min(n - 1 - i) {
                s -= self.l[k][i + k] * b[i + k];
            }
            b[i] = s / self.l[0][i];
        }
    }

    /// Solves and checks the relative residual against `tolerance`.
    pub fn solve_checked(&self, rhs: &[f64], tolerance: f64) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        let ax = self.matrix.mul_vec(&x);
        let scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        let residual = ax
            .iter()
            .zip(rhs)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        if residual > tolerance || !residual.is_finite() {
            return Err(Error::Solver {
                residual,
                tolerance,
            });
        }
        Ok(x)
    }

    pub fn matrix(&self) -> &SymBanded {
        &self.matrix
    }
}
