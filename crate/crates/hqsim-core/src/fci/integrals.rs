//! One- and two-electron integrals over the single-particle basis.
//!
//! The two-electron tensor ⟨ij|V|kl⟩ is evaluated through pair
//! densities: ρ_ik(r) = ψ_i(r)ψ_k(r) for the n_s(n_s+1)/2 unordered
//! orbital pairs, the regularized Coulomb kernel applied once as a
//! dense G×G operator, and a single contraction M = Pᵀ(KP). That costs
//! O(G²·n_pair) instead of O(G²·n_s⁴) and makes n_s ≈ 20–60 on 64×64
//! grids practical. The full tensor is then unpacked through its
//! 8-fold symmetry group, so the stored identities hold exactly.
//!
//! Energies are returned in h·GHz; the kernel is e²/(4πε₀κ)/√(r²+a²)
//! with the softening length `a` defaulting to half the finer grid
//! spacing.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::units::MEV_TO_HGHZ;

use super::basis::SingleParticleBasis;
use super::grid::PotentialGrid;
use super::h1::Stencil;

/// Default cap on integral working memory.
pub const DEFAULT_MEMORY_CAP_BYTES: usize = 2 << 30;

/// Flat index of ⟨ij|V|kl⟩ in the two-electron tensor.
#[inline]
pub fn two_electron_index(n_s: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n_s + j) * n_s + k) * n_s + l
}

/// Regularized Coulomb kernel e²/(4πε₀κ)/√(|r−r'|² + a²) between all
/// grid-point pairs, in meV.
pub fn coulomb_kernel(
    nx: usize,
    ny: usize,
    hx_nm: f64,
    hy_nm: f64,
    a_nm: f64,
    ec_mev_nm: f64,
) -> DMatrix<f64> {
    let g = nx * ny;
    let px: Vec<f64> = (0..g).map(|i| (i % nx) as f64 * hx_nm).collect();
    let py: Vec<f64> = (0..g).map(|i| (i / nx) as f64 * hy_nm).collect();
    let a2 = a_nm * a_nm;
    let mut k = DMatrix::<f64>::zeros(g, g);
    let data = k.as_mut_slice();
    data.par_chunks_mut(g).enumerate().for_each(|(c, col)| {
        let (xc, yc) = (px[c], py[c]);
        for (r, out) in col.iter_mut().enumerate() {
            let (dx, dy) = (px[r] - xc, py[r] - yc);
            *out = ec_mev_nm / (dx * dx + dy * dy + a2).sqrt();
        }
    });
    k
}

/// Spatial two-electron tensor ⟨ij|V|kl⟩ in h·GHz, flat-indexed by
/// [`two_electron_index`]. Spin deltas are applied by the consumer.
pub fn two_electron_integrals(
    basis: &SingleParticleBasis,
    a_nm: f64,
    cap_bytes: usize,
) -> Result<Vec<f64>> {
    if !(a_nm > 0.0 && a_nm.is_finite()) {
        return Err(Error::Invalid(format!("softening length must be positive, got {a_nm} nm")));
    }
    let n_s = basis.n_spatial();
    let g = basis.psi.nrows();
    let n_pair = n_s * (n_s + 1) / 2;
    let need = 8 * (g * g + 2 * n_pair * g + n_pair * n_pair + n_s * n_s * n_s * n_s);
    if need > cap_bytes {
        return Err(Error::Capacity(format!(
            "two-electron assembly needs ≈{} MiB for n_spatial = {n_s} on a {g}-point grid, \
             above the {} MiB cap; reduce n_spatial or coarsen the grid",
            need >> 20,
            cap_bytes >> 20
        )));
    }

    let pairs: Vec<(usize, usize)> =
        (0..n_s).flat_map(|i| (i..n_s).map(move |k| (i, k))).collect();

    // pair densities as columns, in parallel blocks
    let mut p = DMatrix::<f64>::zeros(g, n_pair);
    p.as_mut_slice().par_chunks_mut(g).zip(pairs.par_iter()).for_each(|(col, &(i, k))| {
        let (pi, pk) = (basis.orbital(i), basis.orbital(k));
        for (o, (a, b)) in col.iter_mut().zip(pi.iter().zip(pk)) {
            *o = a * b;
        }
    });

    let kern = coulomb_kernel(
        basis.nx,
        basis.ny,
        basis.hx_nm,
        basis.hy_nm,
        a_nm,
        basis.material.coulomb_mev_nm(),
    );
    let mut kp = DMatrix::<f64>::zeros(g, n_pair);
    kp.gemm(1.0, &kern, &p, 0.0);
    drop(kern);
    let mut m = DMatrix::<f64>::zeros(n_pair, n_pair);
    m.gemm_tr(1.0, &p, &kp, 0.0);
    let w2 = basis.hx_nm * basis.hy_nm;
    m.scale_mut(w2 * w2 * MEV_TO_HGHZ);

    // unpack ⟨ij|V|kl⟩ = (ik|jl): every member of the 8-fold symmetry
    // group receives the same contracted value
    let mut t = vec![0.0; n_s * n_s * n_s * n_s];
    for (a_idx, &(i, k)) in pairs.iter().enumerate() {
        for (b_idx, &(j, l)) in pairs.iter().enumerate() {
            let val = m[(a_idx, b_idx)];
            for (a, c) in [(i, k), (k, i)] {
                for (b, d) in [(j, l), (l, j)] {
                    t[two_electron_index(n_s, a, b, c, d)] = val;
                }
            }
        }
    }
    Ok(t)
}

/// One-electron integrals ⟨i|H₁|j⟩ in h·GHz by quadrature against the
/// grid operator. In the eigenbasis this must be diag(ε) up to solver
/// accuracy — a consistency check, not new information.
pub fn one_electron_integrals(grid: &PotentialGrid, basis: &SingleParticleBasis) -> DMatrix<f64> {
    let s = Stencil::new(grid);
    let g = basis.psi.nrows();
    let n_s = basis.n_spatial();
    let mut hpsi = DMatrix::<f64>::zeros(g, n_s);
    for j in 0..n_s {
        let (xs, ys) = (basis.orbital(j), &mut hpsi.as_mut_slice()[j * g..(j + 1) * g]);
        s.apply(xs, ys);
    }
    let mut out = DMatrix::<f64>::zeros(n_s, n_s);
    out.gemm_tr(1.0, &basis.psi, &hpsi, 0.0);
    out.scale_mut(basis.hx_nm * basis.hy_nm * MEV_TO_HGHZ);
    out
}

/// Immutable integral tables for the determinant Hamiltonian.
#[derive(Debug, Clone)]
pub struct IntegralTables {
    pub n_spatial: usize,
    /// Single-particle energies, h·GHz (used for the one-body part).
    pub energies_hghz: Vec<f64>,
    /// Quadrature one-electron matrix, h·GHz (diagnostic).
    pub one_electron_hghz: DMatrix<f64>,
    two_electron_hghz: Vec<f64>,
}

impl IntegralTables {
    /// Build and cross-check all tables. `a_nm` defaults to half the
    /// finer grid spacing when `None`.
    pub fn build(
        grid: &PotentialGrid,
        basis: &SingleParticleBasis,
        a_nm: Option<f64>,
        cap_bytes: usize,
    ) -> Result<Self> {
        if basis.nx != grid.nx || basis.ny != grid.ny {
            return Err(Error::Invalid(format!(
                "basis grid {}×{} does not match potential grid {}×{}",
                basis.nx, basis.ny, grid.nx, grid.ny
            )));
        }
        let a = a_nm.unwrap_or_else(|| grid.hx_nm.min(grid.hy_nm) / 2.0);
        let n_s = basis.n_spatial();
        let one = one_electron_integrals(grid, basis);
        let e_scale =
            basis.energies_hghz.iter().fold(f64::MIN_POSITIVE, |s, v| s.max(v.abs()));
        for i in 0..n_s {
            for j in 0..n_s {
                let want = if i == j { basis.energies_hghz[i] } else { 0.0 };
                if (one[(i, j)] - want).abs() > 1e-6 * e_scale {
                    return Err(Error::Numerical(format!(
                        "one-electron quadrature disagrees with the eigenbasis at ({i}, {j}): \
                         {} vs {want} h·GHz",
                        one[(i, j)]
                    )));
                }
            }
        }
        let two = two_electron_integrals(basis, a, cap_bytes)?;
        let tables = IntegralTables {
            n_spatial: n_s,
            energies_hghz: basis.energies_hghz.clone(),
            one_electron_hghz: one,
            two_electron_hghz: two,
        };
        tables.verify_symmetries()?;
        Ok(tables)
    }

    /// ⟨ij|V|kl⟩ in h·GHz.
    #[inline]
    pub fn two(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.two_electron_hghz[two_electron_index(self.n_spatial, i, j, k, l)]
    }

    /// Exchange-symmetry identities and Coulomb-term positivity.
    fn verify_symmetries(&self) -> Result<()> {
        let n = self.n_spatial;
        let tmax =
            self.two_electron_hghz.iter().fold(f64::MIN_POSITIVE, |s, v| s.max(v.abs()));
        // full sweep on small tensors, strided on large ones
        let stride = if n <= 16 { 1 } else { 3 };
        let idx: Vec<usize> = (0..n).step_by(stride).collect();
        for &i in &idx {
            for &j in &idx {
                if self.two(i, i, j, j) < -1e-12 * tmax {
                    return Err(Error::Numerical(format!(
                        "Coulomb self-term ⟨{i}{j}|{i}{j}⟩ is negative: {}",
                        self.two(i, i, j, j)
                    )));
                }
                for &k in &idx {
                    for &l in &idx {
                        let v = self.two(i, j, k, l);
                        for w in [self.two(j, i, l, k), self.two(k, j, i, l), self.two(i, l, k, j)]
                        {
                            if (v - w).abs() > 1e-10 * tmax {
                                return Err(Error::Numerical(format!(
                                    "two-electron symmetry violated at ({i},{j},{k},{l}): \
                                     {v} vs {w}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
