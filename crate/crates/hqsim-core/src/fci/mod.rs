//! Two-electron full-configuration-interaction solver on gridded 2D
//! confinement potentials.
//!
//! Pipeline: discretize the single-particle Hamiltonian (five-point
//! stencil, Dirichlet box), solve for the lowest `n_spatial` orbitals,
//! build one-/two-electron integral tables, enumerate the two-electron
//! determinant basis over `2·n_spatial` spin orbitals, assemble the
//! determinant Hamiltonian, and diagonalize. Scaling the two-electron
//! integrals by λ ∈ [0, 1] interpolates between the non-interacting
//! spectrum and the fully interacting one, which is how the quenching
//! of the lowest orbital splitting by electron–electron interaction is
//! quantified. All energies cross the public API in h·GHz.

mod basis;
mod eigen;
mod grid;
mod h1;
mod hamiltonian;
mod integrals;

pub use basis::{
    build_determinant_basis, Determinant, DeterminantBasis, ExcitationClass, SingleParticleBasis,
};
pub use eigen::{dense_lowest, lowest_eigenpairs, LanczosOpts, SymOp};
pub use grid::{wigner_parameter, wigner_parameter_from_omega, Material, PotentialGrid};
pub use h1::Stencil;
pub use hamiltonian::assemble_fci;
pub use integrals::{
    coulomb_kernel, one_electron_integrals, two_electron_integrals, IntegralTables,
    DEFAULT_MEMORY_CAP_BYTES,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::MEV_TO_HGHZ;

/// Largest matrix handed to the dense eigensolver; bigger ones go to
/// the iterative solver.
const DENSE_EIGEN_LIMIT: usize = 1500;

/// Lowest `n_spatial` orbitals via the iterative sparse solver.
///
/// Requires `n_spatial < nx·ny/4` so the discrete eigenproblem is
/// meaningfully overdetermined; use [`solve_basis_dense`] on small
/// grids when a complete or near-complete basis is wanted.
pub fn solve_basis(grid: &PotentialGrid, n_spatial: usize) -> Result<SingleParticleBasis> {
    grid.validate()?;
    let gdim = grid.len();
    if n_spatial == 0 || 4 * n_spatial >= gdim {
        return Err(Error::Invalid(format!(
            "n_spatial must satisfy 0 < n < nx·ny/4 = {}, got {n_spatial}",
            gdim / 4
        )));
    }
    let s = Stencil::new(grid);
    // residual tolerance sits 10× under the basis contract
    // (1e-6·‖H1‖); eigenvalue error is quadratic in it
    let opts = LanczosOpts {
        tol: 1e-7,
        max_basis: (40 * n_spatial + 800).min(gdim),
        ..Default::default()
    };
    let (w_mev, x) = lowest_eigenpairs(&s, n_spatial, &opts)?;
    finish_basis(grid, w_mev, x)
}

/// Lowest `n_spatial` orbitals via dense diagonalization of the
/// stencil — exact up to machine precision, any `n_spatial ≤ nx·ny`.
pub fn solve_basis_dense(grid: &PotentialGrid, n_spatial: usize) -> Result<SingleParticleBasis> {
    grid.validate()?;
    if n_spatial == 0 || n_spatial > grid.len() {
        return Err(Error::Invalid(format!(
            "n_spatial must be in 1..={}, got {n_spatial}",
            grid.len()
        )));
    }
    let s = Stencil::new(grid);
    let (w_mev, x) = dense_lowest(&s.dense(), n_spatial)?;
    finish_basis(grid, w_mev, x)
}

fn finish_basis(
    grid: &PotentialGrid,
    w_mev: Vec<f64>,
    mut x: DMatrix<f64>,
) -> Result<SingleParticleBasis> {
    // eigenvectors have unit 2-norm; rescale to unit L² norm with
    // quadrature weight hx·hy
    x.scale_mut(1.0 / (grid.hx_nm * grid.hy_nm).sqrt());
    let energies = w_mev.iter().map(|w| w * MEV_TO_HGHZ).collect();
    let b = SingleParticleBasis::from_parts(
        grid.nx,
        grid.ny,
        grid.hx_nm,
        grid.hy_nm,
        grid.material,
        energies,
        x,
    )?;
    b.validate(grid)?;
    Ok(b)
}

/// Spectrum of a determinant-space Hamiltonian.
#[derive(Debug, Clone, Serialize)]
pub struct FciResult {
    /// Interaction scale the matrix was assembled with.
    pub lambda: f64,
    /// Lowest eigenvalues, ascending, h·GHz.
    pub eigenvalues_hghz: Vec<f64>,
    /// Multiplicities of the eigenvalues grouped at 1e-6 relative.
    pub degeneracies: Vec<usize>,
    /// E1 − E0.
    pub splitting_01_hghz: f64,
}

/// Lowest `k_lowest` eigenvalues of the assembled matrix, with an
/// explicit residual check at 1e-8 relative.
pub fn diagonalize_fci(matrix: &DMatrix<f64>, k_lowest: usize, lambda: f64) -> Result<FciResult> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Invalid(format!("matrix is {}×{}, not square", n, matrix.ncols())));
    }
    if k_lowest < 2 || k_lowest > n {
        return Err(Error::Invalid(format!(
            "need 2 ≤ k_lowest ≤ {n} to resolve a splitting, got {k_lowest}"
        )));
    }
    let (vals, vecs) = if n <= DENSE_EIGEN_LIMIT {
        dense_lowest(matrix, k_lowest)?
    } else {
        let opts = LanczosOpts {
            tol: 1e-9,
            max_basis: (32 * k_lowest + 640).min(n),
            ..Default::default()
        };
        lowest_eigenpairs(matrix, k_lowest, &opts)?
    };
    let scale = vals.iter().fold(f64::MIN_POSITIVE, |s, v| s.max(v.abs()));
    let mut av = DMatrix::<f64>::zeros(n, k_lowest);
    av.gemm(1.0, matrix, &vecs, 0.0);
    for j in 0..k_lowest {
        let mut ss = 0.0;
        for i in 0..n {
            let d = av[(i, j)] - vals[j] * vecs[(i, j)];
            ss += d * d;
        }
        let res = ss.sqrt();
        if res > 1e-8 * scale {
            return Err(Error::Numerical(format!(
                "eigenpair {j} failed the residual contract: {res:.3e} vs 1e-8 × {scale:.3e}"
            )));
        }
    }

    let mut degeneracies = Vec::new();
    let mut run = 1usize;
    for w in vals.windows(2) {
        if (w[1] - w[0]).abs() <= 1e-6 * scale {
            run += 1;
        } else {
            degeneracies.push(run);
            run = 1;
        }
    }
    degeneracies.push(run);

    Ok(FciResult {
        lambda,
        splitting_01_hghz: vals[1] - vals[0],
        eigenvalues_hghz: vals,
        degeneracies,
    })
}

/// A complete two-electron problem: potential, basis size, softening
/// length, and how much of the spectrum to resolve.
#[derive(Debug, Clone)]
pub struct FciProblem {
    pub grid: PotentialGrid,
    pub n_spatial: usize,
    /// Coulomb softening length; `None` = min(hx, hy)/2.
    pub regularization_nm: Option<f64>,
    /// Eigenvalues per λ (≥ 2).
    pub k_lowest: usize,
    pub memory_cap_bytes: usize,
}

impl FciProblem {
    pub fn new(grid: PotentialGrid, n_spatial: usize) -> Self {
        FciProblem {
            grid,
            n_spatial,
            regularization_nm: None,
            k_lowest: 6,
            memory_cap_bytes: DEFAULT_MEMORY_CAP_BYTES,
        }
    }

    /// Solve the problem once per interaction scale.
    pub fn run(&self, lambdas: &[f64]) -> Result<FciRun> {
        if lambdas.is_empty() {
            return Err(Error::Invalid("need at least one interaction scale".into()));
        }
        let basis = solve_basis(&self.grid, self.n_spatial)?;
        let tables =
            IntegralTables::build(&self.grid, &basis, self.regularization_nm, self.memory_cap_bytes)?;
        let dets = build_determinant_basis(self.n_spatial)?;
        let mut rows = Vec::with_capacity(lambdas.len());
        let mut spectra = Vec::with_capacity(lambdas.len());
        for &lam in lambdas {
            let h = assemble_fci(&tables, &dets, lam)?;
            let res = diagonalize_fci(&h, self.k_lowest.min(dets.len()), lam)?;
            rows.push(SplittingRow {
                lambda: lam,
                e0_hghz: res.eigenvalues_hghz[0],
                e1_hghz: res.eigenvalues_hghz[1],
                splitting_hghz: res.splitting_01_hghz,
            });
            spectra.push(res);
        }
        Ok(FciRun {
            det_counts: dets.counts(),
            wigner: wigner_parameter(&self.grid).ok(),
            orthonormality_defect: basis.orthonormality_defect(),
            residual_defect: basis.residual_defect(&self.grid),
            single_particle_energies_hghz: basis.energies_hghz.clone(),
            rows,
            spectra,
        })
    }
}

/// One line of the quenching study.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplittingRow {
    pub lambda: f64,
    pub e0_hghz: f64,
    pub e1_hghz: f64,
    pub splitting_hghz: f64,
}

/// Everything a quenching run produces, including the diagnostics that
/// go into the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct FciRun {
    /// (ground, single, double) determinant counts.
    pub det_counts: (usize, usize, usize),
    /// Interaction-to-confinement ratio of the potential, when its
    /// minimum admits a parabolic fit.
    pub wigner: Option<f64>,
    pub orthonormality_defect: f64,
    pub residual_defect: f64,
    pub single_particle_energies_hghz: Vec<f64>,
    pub rows: Vec<SplittingRow>,
    pub spectra: Vec<FciResult>,
}

/// E1 − E0 as a function of the interaction scale.
pub fn splitting_vs_lambda(problem: &FciProblem, lambdas: &[f64]) -> Result<Vec<SplittingRow>> {
    Ok(problem.run(lambdas)?.rows)
}

/// Serializable description of a two-electron quenching study.
///
/// `potential` selects the well family: "harmonic" (level spacings
/// `hw_x_mev`, `hw_y_mev`), "gaussian" (`depth_mev`, `sigma_x_nm`,
/// `sigma_y_nm`), or "csv" (`csv_path`, header `# nx,ny,hx_nm,hy_nm`).
/// Analytic wells are sampled on an `nx`×`ny` grid filling a Dirichlet
/// box of `lx_nm`×`ly_nm` (spacing L/(n+1)).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FciConfig {
    pub potential: String,
    pub nx: usize,
    pub ny: usize,
    pub lx_nm: f64,
    pub ly_nm: f64,
    pub hw_x_mev: f64,
    pub hw_y_mev: f64,
    pub depth_mev: f64,
    pub sigma_x_nm: f64,
    pub sigma_y_nm: f64,
    pub csv_path: Option<String>,
    pub m_star: f64,
    pub kappa: f64,
    pub n_spatial: usize,
    pub k_lowest: usize,
    pub lambda_grid: Vec<f64>,
    pub regularization_nm: Option<f64>,
    pub memory_cap_mb: usize,
}

impl Default for FciConfig {
    /// Elongated shallow well in the strongly correlated regime — the
    /// geometry whose orbital splitting collapses by two orders of
    /// magnitude when the interaction is turned on.
    fn default() -> Self {
        FciConfig {
            potential: "harmonic".into(),
            nx: 64,
            ny: 64,
            lx_nm: 400.0,
            ly_nm: 160.0,
            hw_x_mev: 0.4384,
            hw_y_mev: 2.0,
            depth_mev: 3.0,
            sigma_x_nm: 60.0,
            sigma_y_nm: 25.0,
            csv_path: None,
            m_star: 0.067,
            kappa: 12.9,
            n_spatial: 20,
            k_lowest: 6,
            lambda_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            regularization_nm: None,
            memory_cap_mb: 2048,
        }
    }
}

impl FciConfig {
    pub fn validate(&self) -> Result<()> {
        match self.potential.as_str() {
            "harmonic" | "gaussian" => {
                if !(self.lx_nm > 0.0 && self.ly_nm > 0.0) {
                    return Err(Error::Invalid(format!(
                        "box must have positive extent, got {}×{} nm",
                        self.lx_nm, self.ly_nm
                    )));
                }
            }
            "csv" => {
                if self.csv_path.is_none() {
                    return Err(Error::Invalid("potential \"csv\" requires csv_path".into()));
                }
            }
            other => {
                return Err(Error::Invalid(format!(
                    "unknown potential family \"{other}\" (harmonic, gaussian, csv)"
                )));
            }
        }
        if self.n_spatial < 2 {
            return Err(Error::Invalid(format!(
                "n_spatial must be ≥ 2, got {}",
                self.n_spatial
            )));
        }
        if self.k_lowest < 2 {
            return Err(Error::Invalid(format!("k_lowest must be ≥ 2, got {}", self.k_lowest)));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::Invalid("lambda_grid must not be empty".into()));
        }
        for &l in &self.lambda_grid {
            if !(0.0..=1.0).contains(&l) || !l.is_finite() {
                return Err(Error::Invalid(format!(
                    "interaction scales must lie in [0, 1], got {l}"
                )));
            }
        }
        if let Some(a) = self.regularization_nm {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Invalid(format!(
                    "regularization_nm must be positive, got {a}"
                )));
            }
        }
        if self.memory_cap_mb == 0 {
            return Err(Error::Invalid("memory_cap_mb must be positive".into()));
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<FciProblem> {
        self.validate()?;
        let material = Material { m_star: self.m_star, kappa: self.kappa };
        material.validate()?;
        let grid = match self.potential.as_str() {
            "harmonic" => {
                let hx = self.lx_nm / (self.nx as f64 + 1.0);
                let hy = self.ly_nm / (self.ny as f64 + 1.0);
                PotentialGrid::harmonic(
                    self.nx, self.ny, hx, hy, self.hw_x_mev, self.hw_y_mev, material,
                )?
            }
            "gaussian" => {
                let hx = self.lx_nm / (self.nx as f64 + 1.0);
                let hy = self.ly_nm / (self.ny as f64 + 1.0);
                PotentialGrid::gaussian_well(
                    self.nx,
                    self.ny,
                    hx,
                    hy,
                    self.depth_mev,
                    self.sigma_x_nm,
                    self.sigma_y_nm,
                    material,
                )?
            }
            _ => {
                let path = self.csv_path.as_ref().unwrap();
                let (nx, ny, hx, hy, values) = crate::io::read_potential_csv(path)?;
                PotentialGrid::new(nx, ny, hx, hy, values, material)?
            }
        };
        Ok(FciProblem {
            grid,
            n_spatial: self.n_spatial,
            regularization_nm: self.regularization_nm,
            k_lowest: self.k_lowest,
            memory_cap_bytes: self.memory_cap_mb << 20,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaas() -> Material {
        Material::default()
    }

    #[test]
    fn isotropic_oscillator_levels_and_degeneracy_pattern() {
        let hw = 3.0;
        let l0 = (2.0 * gaas().kinetic_mev_nm2() / hw).sqrt();
        let n = 48;
        let h = 8.0 * l0 / (n as f64 + 1.0);
        let g = PotentialGrid::harmonic(n, n, h, h, hw, hw, gaas()).unwrap();
        let b = solve_basis(&g, 6).unwrap();
        let want = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0];
        for (e, m) in b.energies_hghz.iter().zip(&want) {
            assert_relative_eq!(e / MEV_TO_HGHZ, m * hw, max_relative = 0.01);
        }
    }

    #[test]
    fn anisotropic_oscillator_matches_the_separable_oracle() {
        let (hwx, hwy) = (2.0, 3.4);
        let kin = gaas().kinetic_mev_nm2();
        let (l0x, l0y) = ((2.0 * kin / hwx).sqrt(), (2.0 * kin / hwy).sqrt());
        let n = 48;
        let g = PotentialGrid::harmonic(
            n,
            n,
            8.0 * l0x / (n as f64 + 1.0),
            8.0 * l0y / (n as f64 + 1.0),
            hwx,
            hwy,
            gaas(),
        )
        .unwrap();
        let b = solve_basis(&g, 6).unwrap();
        // ħωx(n+½) + ħωy(m+½), sorted
        let mut want: Vec<f64> = (0..4)
            .flat_map(|nq| (0..4).map(move |mq| hwx * (nq as f64 + 0.5) + hwy * (mq as f64 + 0.5)))
            .collect();
        want.sort_by(|a, b| a.total_cmp(b));
        for (e, m) in b.energies_hghz.iter().zip(&want) {
            assert_relative_eq!(e / MEV_TO_HGHZ, m, max_relative = 0.01);
        }
    }

    #[test]
    fn basis_size_is_bounded_by_the_grid() {
        let g = PotentialGrid::harmonic(12, 12, 5.0, 5.0, 2.0, 2.0, gaas()).unwrap();
        assert!(solve_basis(&g, 36).is_err());
        assert!(solve_basis(&g, 0).is_err());
        assert!(solve_basis_dense(&g, 145).is_err());
    }

    fn small_problem(n_spatial: usize) -> FciProblem {
        let g = PotentialGrid::harmonic(12, 12, 5.0, 5.0, 2.0, 3.1, gaas()).unwrap();
        FciProblem { k_lowest: 6, ..FciProblem::new(g, n_spatial) }
    }

    #[test]
    fn non_interacting_spectrum_is_occupation_arithmetic() {
        let p = small_problem(6);
        let run = p.run(&[0.0]).unwrap();
        let basis = solve_basis(&p.grid, 6).unwrap();
        let spec = &run.spectra[0];
        assert_relative_eq!(
            spec.eigenvalues_hghz[0],
            2.0 * basis.energies_hghz[0],
            max_relative = 1e-9
        );
        // E1 = ε0 + ε1, four-fold (two spins × two orderings)
        assert_eq!(spec.degeneracies[0], 1);
        assert_eq!(spec.degeneracies[1], 4);
        for i in 1..5 {
            assert_relative_eq!(
                spec.eigenvalues_hghz[i],
                basis.energies_hghz[0] + basis.energies_hghz[1],
                max_relative = 1e-9
            );
        }
        assert_relative_eq!(
            run.rows[0].splitting_hghz,
            basis.energies_hghz[1] - basis.energies_hghz[0],
            max_relative = 1e-9
        );
    }

    #[test]
    fn interacting_ground_state_is_a_singlet_below_a_triplet() {
        let run = small_problem(6).run(&[1.0]).unwrap();
        let spec = &run.spectra[0];
        assert_eq!(spec.degeneracies[0], 1, "spectrum {:?}", spec.eigenvalues_hghz);
        assert_eq!(spec.degeneracies[1], 3, "spectrum {:?}", spec.eigenvalues_hghz);
    }

    #[test]
    fn enlarging_the_basis_is_variational() {
        let (mut e0s, mut e1s) = (Vec::new(), Vec::new());
        for ns in [4, 6, 8] {
            let run = small_problem(ns).run(&[1.0]).unwrap();
            e0s.push(run.rows[0].e0_hghz);
            e1s.push(run.rows[0].e1_hghz);
        }
        for w in e0s.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "E0 rose: {e0s:?}");
        }
        for w in e1s.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "E1 rose: {e1s:?}");
        }
    }

    #[test]
    fn interaction_quenches_an_elongated_well_monotonically() {
        let g = PotentialGrid::harmonic(
            32,
            32,
            300.0 / 33.0,
            150.0 / 33.0,
            0.6,
            2.4,
            gaas(),
        )
        .unwrap();
        let p = FciProblem::new(g, 8);
        let rows = splitting_vs_lambda(&p, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        for w in rows.windows(2) {
            assert!(
                w[1].splitting_hghz <= w[0].splitting_hghz + 1e-9 * w[0].splitting_hghz,
                "splitting not monotone: {rows:?}"
            );
        }
        assert!(
            rows[4].splitting_hghz < 0.5 * rows[0].splitting_hghz,
            "weak quench: {} → {}",
            rows[0].splitting_hghz,
            rows[4].splitting_hghz
        );
    }

    #[test]
    fn config_defaults_validate_and_unknown_keys_are_rejected() {
        let c = FciConfig::default();
        c.validate().unwrap();
        let js = serde_json::to_string(&c).unwrap();
        let back: FciConfig = serde_json::from_str(&js).unwrap();
        back.validate().unwrap();
        assert!(serde_json::from_str::<FciConfig>("{\"potentail\":\"harmonic\"}").is_err());
        let p = c.build_problem().unwrap();
        assert_eq!(p.grid.nx, 64);
        assert_relative_eq!(p.grid.hx_nm, 400.0 / 65.0, max_relative = 1e-12);
    }

    #[test]
    fn config_rejects_inconsistent_requests() {
        let mut c = FciConfig { potential: "csv".into(), ..Default::default() };
        assert!(c.validate().is_err());
        c = FciConfig { potential: "square".into(), ..Default::default() };
        assert!(c.validate().is_err());
        c = FciConfig { lambda_grid: vec![0.5, 1.2], ..Default::default() };
        assert!(c.validate().is_err());
        c = FciConfig { n_spatial: 1, ..Default::default() };
        assert!(c.validate().is_err());
        c = FciConfig { k_lowest: 1, ..Default::default() };
        assert!(c.validate().is_err());
        c = FciConfig { regularization_nm: Some(-1.0), ..Default::default() };
        assert!(c.validate().is_err());
    }
}
