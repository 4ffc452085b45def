//! Determinant-space Hamiltonian assembly.
//!
//! For two electrons every matrix element reduces to the closed form
//! ⟨pq|H|rs⟩ = δ_qs h_pr + δ_pr h_qs − δ_ps h_qr − δ_qr h_ps
//!           + λ(⟨pq|V|rs⟩ − ⟨pq|V|sr⟩)
//! over ordered pairs p < q, r < s (maximum-coincidence signs are then
//! automatic). In the eigenbasis the one-body matrix is diag(ε), so
//! the one-body part only survives on the diagonal and on pairs that
//! share a spin orbital.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::basis::{orbital_of, spin, DeterminantBasis};
use super::integrals::IntegralTables;

/// Symmetric FCI matrix in the determinant basis, energies in h·GHz.
/// `lambda` ∈ [0, 1] scales every two-electron integral.
pub fn assemble_fci(
    tables: &IntegralTables,
    dets: &DeterminantBasis,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
        return Err(Error::Invalid(format!("interaction scale must be in [0, 1], got {lambda}")));
    }
    if dets.n_spatial != tables.n_spatial {
        return Err(Error::Invalid(format!(
            "determinant basis over {} orbitals but integrals over {}",
            dets.n_spatial, tables.n_spatial
        )));
    }
    let dim = dets.len();
    if dim > 25_000 {
        return Err(Error::Capacity(format!(
            "dense determinant Hamiltonian of dimension {dim} (> 25000) would exceed memory; \
             reduce n_spatial"
        )));
    }

    let eps = &tables.energies_hghz;
    // ⟨p|h|r⟩ in the eigenbasis
    let hso = |p: usize, r: usize| if p == r { eps[orbital_of(p)] } else { 0.0 };
    let vso = |p: usize, q: usize, r: usize, s: usize| {
        if spin(p) == spin(r) && spin(q) == spin(s) {
            tables.two(orbital_of(p), orbital_of(q), orbital_of(r), orbital_of(s))
        } else {
            0.0
        }
    };

    let mut h = DMatrix::<f64>::zeros(dim, dim);
    h.as_mut_slice()
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(col, out)| {
            let (r, s) = (dets.dets[col].p, dets.dets[col].q);
            for (row, o) in out.iter_mut().enumerate() {
                let (p, q) = (dets.dets[row].p, dets.dets[row].q);
                let mut one = 0.0;
                if q == s {
                    one += hso(p, r);
                }
                if p == r {
                    one += hso(q, s);
                }
                if p == s {
                    one -= hso(q, r);
                }
                if q == r {
                    one -= hso(p, s);
                }
                *o = one + lambda * (vso(p, q, r, s) - vso(p, q, s, r));
            }
        });
    Ok(h)
}
