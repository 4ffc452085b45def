//! Single-particle Hamiltonian on the grid: five-point stencil with
//! Dirichlet walls.
//!
//! The operator is `−(ħ²/2m*)∇² + V` discretized on the interior
//! points, i.e. a symmetric matrix with five nonzero diagonals: the
//! main diagonal `2ax + 2ay + V`, the x-hopping `−ax` (absent across
//! row boundaries) and the y-hopping `−ay`, where `ax = (ħ²/2m*)/hx²`.
//! It is kept matrix-free for the iterative eigensolver; `dense` is
//! for small grids and tests.

use nalgebra::DMatrix;

use super::eigen::SymOp;
use super::grid::PotentialGrid;

/// Matrix-free five-point-stencil Hamiltonian (energies in meV).
#[derive(Debug, Clone)]
pub struct Stencil {
    nx: usize,
    ny: usize,
    ax: f64,
    ay: f64,
    diag: Vec<f64>,
}

impl Stencil {
    pub fn new(grid: &PotentialGrid) -> Self {
        let kin = grid.material.kinetic_mev_nm2();
        let ax = kin / (grid.hx_nm * grid.hx_nm);
        let ay = kin / (grid.hy_nm * grid.hy_nm);
        let diag = grid.values().iter().map(|v| 2.0 * ax + 2.0 * ay + v).collect();
        Stencil { nx: grid.nx, ny: grid.ny, ax, ay, diag }
    }

    /// Hopping amplitudes (ax, ay) in meV.
    pub fn hoppings(&self) -> (f64, f64) {
        (self.ax, self.ay)
    }

    /// Upper bound on the operator norm (Gershgorin).
    pub fn norm_bound(&self) -> f64 {
        let dmax = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        dmax + 2.0 * self.ax.abs() + 2.0 * self.ay.abs()
    }

    /// y = H·x for one grid function.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(x.len(), nx * ny);
        for iy in 0..ny {
            let row = iy * nx;
            for ix in 0..nx {
                let i = row + ix;
                let mut acc = self.diag[i] * x[i];
                if ix > 0 {
                    acc -= self.ax * x[i - 1];
                }
                if ix + 1 < nx {
                    acc -= self.ax * x[i + 1];
                }
                if iy > 0 {
                    acc -= self.ay * x[i - nx];
                }
                if iy + 1 < ny {
                    acc -= self.ay * x[i + nx];
                }
                y[i] = acc;
            }
        }
    }

    /// Dense form, built by explicit neighbor enumeration.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut m = DMatrix::zeros(n, n);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let i = ix + self.nx * iy;
                m[(i, i)] = self.diag[i];
                if ix + 1 < self.nx {
                    m[(i, i + 1)] = -self.ax;
                    m[(i + 1, i)] = -self.ax;
                }
                if iy + 1 < self.ny {
                    m[(i, i + self.nx)] = -self.ay;
                    m[(i + self.nx, i)] = -self.ay;
                }
            }
        }
        m
    }
}

impl SymOp for Stencil {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_block(&self, x: &[f64], y: &mut [f64], cols: usize) {
        let n = self.dim();
        for c in 0..cols {
            self.apply(&x[c * n..(c + 1) * n], &mut y[c * n..(c + 1) * n]);
        }
    }
}
