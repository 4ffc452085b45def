//! Single-particle eigenbasis and the two-electron determinant basis.
//!
//! Spin orbitals are indexed `p = 2·orbital + spin`, so the two lowest
//! spin orbitals (0, 1) are the ground spatial orbital with both spins.
//! A two-electron determinant is an ordered pair p < q; its excitation
//! rank counts how many of the two electrons sit outside {0, 1}.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::grid::{Material, PotentialGrid};
use super::h1::Stencil;

/// Lowest eigenstates of the single-particle Hamiltonian on the grid.
///
/// Wavefunctions are the columns of `psi` (length nx·ny each) and are
/// L²-normalized with quadrature weight hx·hy. Energies are in h·GHz.
#[derive(Debug, Clone)]
pub struct SingleParticleBasis {
    pub nx: usize,
    pub ny: usize,
    pub hx_nm: f64,
    pub hy_nm: f64,
    pub material: Material,
    pub energies_hghz: Vec<f64>,
    pub psi: DMatrix<f64>,
}

impl SingleParticleBasis {
    /// Assemble from raw parts (shape-checked only); the solver entry
    /// points in the parent module also verify the eigen-residuals.
    pub fn from_parts(
        nx: usize,
        ny: usize,
        hx_nm: f64,
        hy_nm: f64,
        material: Material,
        energies_hghz: Vec<f64>,
        psi: DMatrix<f64>,
    ) -> Result<Self> {
        if psi.nrows() != nx * ny || psi.ncols() != energies_hghz.len() {
            return Err(Error::Invalid(format!(
                "basis shape mismatch: ψ is {}×{}, expected {}×{}",
                psi.nrows(),
                psi.ncols(),
                nx * ny,
                energies_hghz.len()
            )));
        }
        if energies_hghz.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invalid("basis energies must be ascending".into()));
        }
        Ok(SingleParticleBasis { nx, ny, hx_nm, hy_nm, material, energies_hghz, psi })
    }

    pub fn n_spatial(&self) -> usize {
        self.psi.ncols()
    }

    /// Grid function of spatial orbital `i`.
    pub fn orbital(&self, i: usize) -> &[f64] {
        let n = self.psi.nrows();
        &self.psi.as_slice()[i * n..(i + 1) * n]
    }

    /// Worst deviation of the weighted Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.psi.transpose() * &self.psi * (self.hx_nm * self.hy_nm);
        let mut worst = 0.0f64;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - want).abs());
            }
        }
        worst
    }

    /// Worst eigen-residual ‖H₁ψ − Eψ‖/‖H₁‖ against the grid operator.
    pub fn residual_defect(&self, grid: &PotentialGrid) -> f64 {
        use crate::units::MEV_TO_HGHZ;
        let s = Stencil::new(grid);
        let n = self.psi.nrows();
        let mut hpsi = vec![0.0; n];
        let mut worst = 0.0f64;
        for i in 0..self.n_spatial() {
            s.apply(self.orbital(i), &mut hpsi);
            let e_mev = self.energies_hghz[i] / MEV_TO_HGHZ;
            let ss: f64 = hpsi
                .iter()
                .zip(self.orbital(i))
                .map(|(h, p)| (h - e_mev * p) * (h - e_mev * p))
                .sum();
            // ψ columns have plain 2-norm 1/√(hx·hy)
            worst = worst.max(ss.sqrt() * (self.hx_nm * self.hy_nm).sqrt());
        }
        worst / s.norm_bound()
    }

    /// Orthonormality and residual contracts.
    pub fn validate(&self, grid: &PotentialGrid) -> Result<()> {
        let ortho = self.orthonormality_defect();
        if ortho > 1e-8 {
            return Err(Error::Numerical(format!(
                "single-particle basis lost orthonormality: defect {ortho:.3e}"
            )));
        }
        let res = self.residual_defect(grid);
        if res > 1e-6 {
            return Err(Error::Numerical(format!(
                "single-particle eigen-residual too large: {res:.3e} relative"
            )));
        }
        Ok(())
    }
}

/// Excitation rank of a determinant relative to the ground pair (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExcitationClass {
    Ground,
    Single,
    Double,
}

/// Occupied spin-orbital pair p < q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Determinant {
    pub p: usize,
    pub q: usize,
    pub class: ExcitationClass,
}

/// All two-electron determinants over 2·n_spatial spin orbitals,
/// sorted by (rank, p, q) so the ground determinant comes first.
#[derive(Debug, Clone)]
pub struct DeterminantBasis {
    pub n_spatial: usize,
    pub dets: Vec<Determinant>,
}

/// Spin of spin-orbital `p` (0 or 1).
pub(crate) fn spin(p: usize) -> usize {
    p % 2
}

/// Spatial orbital of spin-orbital `p`.
pub(crate) fn orbital_of(p: usize) -> usize {
    p / 2
}

pub fn build_determinant_basis(n_spatial: usize) -> Result<DeterminantBasis> {
    if n_spatial < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 spatial orbitals for two electrons, got {n_spatial}"
        )));
    }
    let n_so = 2 * n_spatial;
    let mut dets = Vec::with_capacity(n_so * (n_so - 1) / 2);
    for p in 0..n_so {
        for q in p + 1..n_so {
            let rank = (p > 1) as usize + (q > 1) as usize;
            let class = match rank {
                0 => ExcitationClass::Ground,
                1 => ExcitationClass::Single,
                _ => ExcitationClass::Double,
            };
            dets.push(Determinant { p, q, class });
        }
    }
    dets.sort_by_key(|d| (d.class, d.p, d.q));
    Ok(DeterminantBasis { n_spatial, dets })
}

impl DeterminantBasis {
    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    /// (ground, single, double) determinant counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for d in &self.dets {
            match d.class {
                ExcitationClass::Ground => c.0 += 1,
                ExcitationClass::Single => c.1 += 1,
                ExcitationClass::Double => c.2 += 1,
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn published_counts_at_one_hundred_orbitals() {
        let b = build_determinant_basis(100).unwrap();
        assert_eq!(b.counts(), (1, 396, 19503));
        assert_eq!(b.len(), 19900);
    }

    #[test]
    fn hand_enumerated_counts_at_two_orbitals() {
        let b = build_determinant_basis(2).unwrap();
        assert_eq!(b.counts(), (1, 4, 1));
        assert_eq!(b.len(), 6);
    }

    #[test]
    fn counts_follow_the_closed_forms() {
        for n in 2..40 {
            let (g, s, d) = build_determinant_basis(n).unwrap().counts();
            let m = 2 * n - 2;
            assert_eq!(g, 1);
            assert_eq!(s, 2 * m);
            assert_eq!(d, m * (m - 1) / 2);
        }
        assert!(build_determinant_basis(1).is_err());
    }

    #[test]
    fn determinants_are_ordered_pairs_without_duplicates() {
        let b = build_determinant_basis(9).unwrap();
        let mut seen = HashSet::new();
        for d in &b.dets {
            assert!(d.p < d.q);
            assert!(d.q < 18);
            assert!(seen.insert((d.p, d.q)));
        }
        assert_eq!(seen.len(), b.len());
        // sorted by (rank, p, q), ground determinant first
        assert_eq!((b.dets[0].p, b.dets[0].q), (0, 1));
        for w in b.dets.windows(2) {
            let a = (w[0].class, w[0].p, w[0].q);
            let c = (w[1].class, w[1].p, w[1].q);
            assert!(a < c);
        }
    }

    #[test]
    fn spin_and_orbital_decoding() {
        assert_eq!((orbital_of(0), spin(0)), (0, 0));
        assert_eq!((orbital_of(1), spin(1)), (0, 1));
        assert_eq!((orbital_of(7), spin(7)), (3, 1));
    }

    #[test]
    fn from_parts_checks_shapes() {
        let m = Material::default();
        let psi = DMatrix::<f64>::zeros(64, 3);
        assert!(SingleParticleBasis::from_parts(8, 8, 1.0, 1.0, m, vec![0.0; 3], psi.clone()).is_ok());
        assert!(SingleParticleBasis::from_parts(8, 8, 1.0, 1.0, m, vec![0.0; 2], psi.clone()).is_err());
        assert!(
            SingleParticleBasis::from_parts(8, 8, 1.0, 1.0, m, vec![1.0, 0.5, 2.0], psi).is_err()
        );
    }
}
