//! Confinement potentials sampled on a rectangular grid.
//!
//! A [`PotentialGrid`] holds potential energies (meV) at the interior
//! points of a Dirichlet box: walls sit at x = 0 and x = (nx+1)·hx, so
//! the point `(ix, iy)` lives at `((ix+1)·hx, (iy+1)·hy)`. Values are
//! stored row-major with index `ix + nx·iy`. Analytic well families
//! (harmonic, elliptic Gaussian) are provided; arbitrary grids can be
//! imported through the CSV reader in the `io` module.

use crate::error::{Error, Result};
use crate::units;

/// Host material constants for the effective-mass Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Effective mass in units of the bare electron mass.
    pub m_star: f64,
    /// Relative dielectric constant.
    pub kappa: f64,
}

impl Default for Material {
    /// GaAs: m* = 0.067 mₑ, κ = 12.9.
    fn default() -> Self {
        Material { m_star: 0.067, kappa: 12.9 }
    }
}

impl Material {
    /// ħ²/2m* in meV·nm².
    pub fn kinetic_mev_nm2(&self) -> f64 {
        units::kinetic_prefactor_mev_nm2(self.m_star)
    }

    /// e²/(4πε₀κ) in meV·nm.
    pub fn coulomb_mev_nm(&self) -> f64 {
        units::coulomb_prefactor_mev_nm(self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m_star > 0.0 && self.m_star.is_finite()) {
            return Err(Error::Invalid(format!("m_star must be positive, got {}", self.m_star)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Invalid(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Potential energy landscape on the interior of a Dirichlet box.
#[derive(Debug, Clone)]
pub struct PotentialGrid {
    pub nx: usize,
    pub ny: usize,
    /// Grid spacing along x, nm.
    pub hx_nm: f64,
    /// Grid spacing along y, nm.
    pub hy_nm: f64,
    /// Potential energies in meV, index `ix + nx·iy`.
    values: Vec<f64>,
    pub material: Material,
}

impl PotentialGrid {
    /// Wrap raw values; `values.len()` must equal `nx·ny`.
    pub fn new(
        nx: usize,
        ny: usize,
        hx_nm: f64,
        hy_nm: f64,
        values: Vec<f64>,
        material: Material,
    ) -> Result<Self> {
        let g = PotentialGrid { nx, ny, hx_nm, hy_nm, values, material };
        g.validate()?;
        Ok(g)
    }

    /// Anisotropic harmonic well ½k(x−x₀)² + ½k(y−y₀)² centered in the
    /// box, parameterized by the level spacings ħωx, ħωy in meV.
    pub fn harmonic(
        nx: usize,
        ny: usize,
        hx_nm: f64,
        hy_nm: f64,
        hw_x_mev: f64,
        hw_y_mev: f64,
        material: Material,
    ) -> Result<Self> {
        if !(hw_x_mev > 0.0 && hw_y_mev > 0.0) {
            return Err(Error::Invalid(format!(
                "harmonic well needs positive level spacings, got ({hw_x_mev}, {hw_y_mev}) meV"
            )));
        }
        material.validate()?;
        let kin = material.kinetic_mev_nm2();
        // V = ½k x² reproduces spacing ħω when k = (ħω)²/(2·ħ²/2m*)
        let kx = hw_x_mev * hw_x_mev / (2.0 * kin);
        let ky = hw_y_mev * hw_y_mev / (2.0 * kin);
        Self::from_fn(nx, ny, hx_nm, hy_nm, material, |dx, dy| {
            0.5 * (kx * dx * dx + ky * dy * dy)
        })
    }

    /// Elliptic Gaussian well −V₀·exp(−x²/2σx² − y²/2σy²) centered in
    /// the box. `depth_mev` is the (positive) well depth V₀.
    pub fn gaussian_well(
        nx: usize,
        ny: usize,
        hx_nm: f64,
        hy_nm: f64,
        depth_mev: f64,
        sigma_x_nm: f64,
        sigma_y_nm: f64,
        material: Material,
    ) -> Result<Self> {
        if !(depth_mev > 0.0 && sigma_x_nm > 0.0 && sigma_y_nm > 0.0) {
            return Err(Error::Invalid(format!(
                "gaussian well needs positive depth and widths, got \
                 ({depth_mev} meV, {sigma_x_nm} nm, {sigma_y_nm} nm)"
            )));
        }
        material.validate()?;
        let (sx2, sy2) = (sigma_x_nm * sigma_x_nm, sigma_y_nm * sigma_y_nm);
        Self::from_fn(nx, ny, hx_nm, hy_nm, material, |dx, dy| {
            -depth_mev * (-dx * dx / (2.0 * sx2) - dy * dy / (2.0 * sy2)).exp()
        })
    }

    fn from_fn(
        nx: usize,
        ny: usize,
        hx_nm: f64,
        hy_nm: f64,
        material: Material,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let x0 = (nx as f64 + 1.0) * hx_nm / 2.0;
        let y0 = (ny as f64 + 1.0) * hy_nm / 2.0;
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            let dy = (iy as f64 + 1.0) * hy_nm - y0;
            for ix in 0..nx {
                let dx = (ix as f64 + 1.0) * hx_nm - x0;
                values.push(f(dx, dy));
            }
        }
        Self::new(nx, ny, hx_nm, hy_nm, values, material)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::Invalid(format!(
                "grid must be at least 8×8, got {}×{}",
                self.nx, self.ny
            )));
        }
        if !(self.hx_nm > 0.0 && self.hx_nm.is_finite() && self.hy_nm > 0.0 && self.hy_nm.is_finite())
        {
            return Err(Error::Invalid(format!(
                "grid spacings must be positive, got ({}, {}) nm",
                self.hx_nm, self.hy_nm
            )));
        }
        if self.values.len() != self.nx * self.ny {
            return Err(Error::Invalid(format!(
                "expected {} potential values, got {}",
                self.nx * self.ny,
                self.values.len()
            )));
        }
        if let Some(bad) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("potential contains non-finite value {bad}")));
        }
        self.material.validate()
    }

    /// Number of interior grid points.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Flattened potential, index `ix + nx·iy`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + self.nx * iy
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.index(ix, iy)]
    }

    /// x coordinate of column `ix` (nm), measured from the left wall.
    pub fn x_nm(&self, ix: usize) -> f64 {
        (ix as f64 + 1.0) * self.hx_nm
    }

    /// y coordinate of row `iy` (nm).
    pub fn y_nm(&self, iy: usize) -> f64 {
        (iy as f64 + 1.0) * self.hy_nm
    }

    /// Level spacings (ħωx, ħωy) in meV of the parabolic approximation
    /// at the potential minimum, from central second differences.
    ///
    /// Fails if the minimum sits on the grid edge (well not contained)
    /// or if either curvature is non-positive (non-parabolic minimum).
    pub fn parabolic_spacings_mev(&self) -> Result<(f64, f64)> {
        let (mut best, mut at) = (f64::INFINITY, 0usize);
        for (i, &v) in self.values.iter().enumerate() {
            if v < best {
                best = v;
                at = i;
            }
        }
        let (ix, iy) = (at % self.nx, at / self.nx);
        if ix == 0 || iy == 0 || ix == self.nx - 1 || iy == self.ny - 1 {
            return Err(Error::Numerical(format!(
                "potential minimum sits on the grid edge at ({ix}, {iy}); \
                 cannot fit a parabolic approximation"
            )));
        }
        let kx = (self.value(ix + 1, iy) - 2.0 * best + self.value(ix - 1, iy))
            / (self.hx_nm * self.hx_nm);
        let ky = (self.value(ix, iy + 1) - 2.0 * best + self.value(ix, iy - 1))
            / (self.hy_nm * self.hy_nm);
        if kx <= 0.0 || ky <= 0.0 {
            return Err(Error::Numerical(format!(
                "non-parabolic minimum: curvatures ({kx:.3e}, {ky:.3e}) meV/nm²"
            )));
        }
        let kin = self.material.kinetic_mev_nm2();
        Ok(((2.0 * kin * kx).sqrt(), (2.0 * kin * ky).sqrt()))
    }
}

/// Interaction-to-confinement ratio (e²/4πε₀κl₀)/ħω₀ for an oscillator
/// with level spacing `hw0_mev`, using l₀ = √(ħ/m*ω₀). Values well
/// above 1 signal the strongly correlated (Wigner-molecule) regime.
pub fn wigner_parameter_from_omega(hw0_mev: f64, material: Material) -> Result<f64> {
    material.validate()?;
    if !(hw0_mev > 0.0 && hw0_mev.is_finite()) {
        return Err(Error::Invalid(format!(
            "oscillator spacing must be positive, got {hw0_mev} meV"
        )));
    }
    // l0² = ħ/m*ω0 = (ħ²/2m*)·2/ħω0
    let l0_nm = (2.0 * material.kinetic_mev_nm2() / hw0_mev).sqrt();
    Ok(material.coulomb_mev_nm() / (l0_nm * hw0_mev))
}

/// Interaction-to-confinement ratio of a gridded potential, using the
/// soft-axis spacing min(ħωx, ħωy) of the parabolic fit at the minimum
/// — the soft direction sets the correlation scale in an elongated
/// well.
pub fn wigner_parameter(grid: &PotentialGrid) -> Result<f64> {
    let (hwx, hwy) = grid.parabolic_spacings_mev()?;
    wigner_parameter_from_omega(hwx.min(hwy), grid.material)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_small_grids_and_bad_spacings() {
        let m = Material::default();
        assert!(PotentialGrid::new(7, 8, 1.0, 1.0, vec![0.0; 56], m).is_err());
        assert!(PotentialGrid::new(8, 7, 1.0, 1.0, vec![0.0; 56], m).is_err());
        assert!(PotentialGrid::new(8, 8, 0.0, 1.0, vec![0.0; 64], m).is_err());
        assert!(PotentialGrid::new(8, 8, 1.0, -2.0, vec![0.0; 64], m).is_err());
        assert!(PotentialGrid::new(8, 8, 1.0, 1.0, vec![0.0; 63], m).is_err());
        let mut v = vec![0.0; 64];
        v[10] = f64::NAN;
        assert!(PotentialGrid::new(8, 8, 1.0, 1.0, v, m).is_err());
        assert!(PotentialGrid::new(8, 8, 1.0, 1.0, vec![0.0; 64], m).is_ok());
    }

    #[test]
    fn harmonic_well_is_centered_and_recovers_spacings() {
        let g = PotentialGrid::harmonic(33, 41, 3.0, 2.0, 1.7, 2.9, Material::default()).unwrap();
        // odd point counts put a grid point exactly at the center
        let (icx, icy) = (16, 20);
        assert_eq!(g.value(icx, icy), 0.0);
        assert!(g.value(0, 0) > g.value(icx, icy));
        // central second differences are exact for a quadratic
        let (hwx, hwy) = g.parabolic_spacings_mev().unwrap();
        assert_relative_eq!(hwx, 1.7, max_relative = 1e-9);
        assert_relative_eq!(hwy, 2.9, max_relative = 1e-9);
    }

    #[test]
    fn gaussian_well_curvature_matches_analytic_expansion() {
        let (v0, sx, sy) = (5.0, 40.0, 25.0);
        let g =
            PotentialGrid::gaussian_well(81, 81, 2.0, 2.0, v0, sx, sy, Material::default()).unwrap();
        assert_relative_eq!(g.value(40, 40), -v0, max_relative = 1e-12);
        // V ≈ −V0 + V0·x²/2σx² + … near the bottom
        let kin = g.material.kinetic_mev_nm2();
        let (hwx, hwy) = g.parabolic_spacings_mev().unwrap();
        assert_relative_eq!(hwx, (2.0 * kin * v0 / (sx * sx)).sqrt(), max_relative = 1e-2);
        assert_relative_eq!(hwy, (2.0 * kin * v0 / (sy * sy)).sqrt(), max_relative = 1e-2);
    }

    #[test]
    fn flat_potential_has_no_parabolic_minimum() {
        let g = PotentialGrid::new(8, 8, 1.0, 1.0, vec![1.0; 64], Material::default()).unwrap();
        assert!(g.parabolic_spacings_mev().is_err());
        // inverted well: negative curvature
        let inv = PotentialGrid::from_fn(21, 21, 2.0, 2.0, Material::default(), |dx, dy| {
            -1e-3 * (dx * dx + dy * dy)
        })
        .unwrap();
        assert!(inv.parabolic_spacings_mev().is_err());
    }

    #[test]
    fn interaction_ratio_at_one_mev_matches_hand_value() {
        // l0 = √(2·568.65/1) ≈ 33.72 nm; 111.63/(33.72·1) ≈ 3.310
        let rw = wigner_parameter_from_omega(1.0, Material::default()).unwrap();
        assert_relative_eq!(rw, 3.310, max_relative = 2e-3);
        assert!(wigner_parameter_from_omega(0.0, Material::default()).is_err());
    }

    #[test]
    fn doubling_kappa_halves_the_ratio() {
        let base = Material::default();
        let double = Material { kappa: 2.0 * base.kappa, ..base };
        let a = wigner_parameter_from_omega(1.3, base).unwrap();
        let b = wigner_parameter_from_omega(1.3, double).unwrap();
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn elongated_shallow_well_sits_in_the_correlated_regime() {
        let g = PotentialGrid::harmonic(
            64,
            64,
            400.0 / 65.0,
            160.0 / 65.0,
            0.4384,
            2.0,
            Material::default(),
        )
        .unwrap();
        let rw = wigner_parameter(&g).unwrap();
        assert!((rw - 5.0).abs() < 0.01, "soft-axis ratio {rw}");
        // strongly confined circular dot: weak correlation
        let c = PotentialGrid::harmonic(
            64,
            64,
            70.0 / 65.0,
            70.0 / 65.0,
            12.0,
            12.0,
            Material::default(),
        )
        .unwrap();
        let rc = wigner_parameter(&c).unwrap();
        assert!(rc < 1.0, "circular-dot ratio {rc}");
    }
}
