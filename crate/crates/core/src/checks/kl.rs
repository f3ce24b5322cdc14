//! Grid discretisation of single-user (a, h) densities and the transition
//! kernel, for Kullback-Leibler contraction checks.
//!
//! h is represented on an n × n grid over [−w, w]²; a density is a pair of
//! n × n mass matrices (idle, active) summing to one. The AR-1 step is a
//! separable kernel (real and imaginary axes independent) whose rows are
//! normalised, so it is an exact Markov kernel on the grid and the
//! data-processing inequality holds for the discretised densities.

use nalgebra::{DMatrix, DVector};

use crate::sequential::MixtureComponent;
use crate::C64;

/// Mass added uniformly before comparisons so that far tails that underflow
/// never produce log 0.
const UNIFORM_FLOOR: f64 = 1e-290;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub coords: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Self {
        let step = 2.0 * half_width / (n - 1) as f64;
        Grid {
            coords: (0..n).map(|i| -half_width + i as f64 * step).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Unnormalised per-axis factor of CN(h; m, v): exp(−(x − m)²/v).
    fn axis(&self, m: f64, v: f64) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.coords.iter().map(|&x| (-(x - m).powi(2) / v).exp()))
    }

    /// CN(h; m, v) sampled on the grid (up to the common cell area).
    fn gaussian(&self, m: C64, v: f64) -> DMatrix<f64> {
        let gx = self.axis(m.re, v);
        let gy = self.axis(m.im, v);
        (gx * gy.transpose()) / (std::f64::consts::PI * v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub idle: DMatrix<f64>,
    pub active: DMatrix<f64>,
}

impl GridDensity {
    fn normalised(mut self) -> Self {
        let total = self.idle.sum() + self.active.sum();
        self.idle /= total;
        self.active /= total;
        self
    }

    /// Gaussian mixture with per-component activity labels.
    pub fn from_mixture(grid: &Grid, comps: &[MixtureComponent]) -> Self {
        let n = grid.len();
        let mut d = GridDensity {
            idle: DMatrix::zeros(n, n),
            active: DMatrix::zeros(n, n),
        };
        for comp in comps {
            let g = grid.gaussian(comp.mean, comp.var) * comp.weight;
            if comp.active {
                d.active += g;
            } else {
                d.idle += g;
            }
        }
        d.normalised()
    }

    /// Bern(a; π) · CN(h; ξ, ψ).
    pub fn product(grid: &Grid, pi: f64, xi: C64, psi: f64) -> Self {
        let g = grid.gaussian(xi, psi);
        GridDensity {
            idle: &g * (1.0 - pi),
            active: g * pi,
        }
        .normalised()
    }

    /// Multiplies by the likelihood CN(φ; a·h, c) and renormalises.
    pub fn observe(&self, grid: &Grid, phi: C64, c: f64) -> Self {
        let idle_lik = (-phi.norm_sqr() / c).exp();
        let active_lik = grid.gaussian(phi, c) * (std::f64::consts::PI * c);
        GridDensity {
            idle: &self.idle * idle_lik,
            active: self.active.component_mul(&active_lik),
        }
        .normalised()
    }

    /// Mixes in a negligible uniform density so every cell is positive.
    pub fn floored(&self) -> Self {
        let n = self.idle.nrows();
        let u = UNIFORM_FLOOR / (2 * n * n) as f64;
        GridDensity {
            idle: self.idle.map(|v| (1.0 - UNIFORM_FLOOR) * v + u),
            active: self.active.map(|v| (1.0 - UNIFORM_FLOOR) * v + u),
        }
    }
}

/// KL(p ‖ q) in nats; cells with p = 0 contribute nothing.
pub fn kl_divergence(p: &GridDensity, q: &GridDensity) -> f64 {
    let term = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(&pi, &qi)| if pi > 0.0 { pi * (pi / qi).ln() } else { 0.0 })
            .sum()
    };
    term(&p.idle, &q.idle) + term(&p.active, &q.active)
}

/// One step of the activity chain and the AR-1 channel on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    /// Row-normalised per-axis kernel: axis[(i, j)] = P(x' = x_j | x = x_i).
    axis: DMatrix<f64>,
    p01: f64,
    p10: f64,
}

impl TransitionKernel {
    pub fn new(grid: &Grid, eta: f64, rho: f64, p01: f64, p10: f64) -> Self {
        let n = grid.len();
        // Each real axis carries half the innovation variance.
        let var = (1.0 - eta * eta) * rho / 2.0;
        let mut axis = DMatrix::from_fn(n, n, |i, j| {
            let d = grid.coords[j] - eta * grid.coords[i];
            (-d * d / (2.0 * var)).exp()
        });
        for i in 0..n {
            let s: f64 = axis.row(i).sum();
            axis.row_mut(i).unscale_mut(s);
        }
        TransitionKernel { axis, p01, p10 }
    }

    pub fn apply(&self, d: &GridDensity) -> GridDensity {
        let k = &self.axis;
        let move_h = |m: &DMatrix<f64>| k.tr_mul(m) * k;
        let idle = move_h(&d.idle);
        let active = move_h(&d.active);
        GridDensity {
            idle: &idle * (1.0 - self.p10) + &active * self.p01,
            active: idle * self.p10 + active * (1.0 - self.p01),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_preserves_mass_and_kl_contracts() {
        let grid = Grid::new(61, 6.0);
        let k = TransitionKernel::new(&grid, 0.8, 1.0, 0.3, 0.1);
        let p = GridDensity::product(&grid, 0.4, C64::new(1.0, -0.5), 0.3);
        let q = GridDensity::product(&grid, 0.2, C64::new(0.0, 0.0), 1.0);
        let kp = k.apply(&p);
        assert!((kp.idle.sum() + kp.active.sum() - 1.0).abs() < 1e-12);
        assert!(kl_divergence(&kp, &k.apply(&q)) <= kl_divergence(&p, &q));
        assert!(kl_divergence(&p, &p).abs() < 1e-15);
    }
}
