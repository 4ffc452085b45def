//! Four-level hybrid-qubit model.
//!
//! The qubit lives in the two-electron-configuration basis
//! `{(2,1)g, (2,1)e, (1,2)g, (1,2)e}`: each charge configuration
//! contributes its singlet-like ground state and a triplet-like excited
//! state offset by the intradot splitting (δL on the (2,1) side, δR on
//! the (1,2) side). Detuning ε tilts the two configurations against
//! each other and four tunnel couplings t1..t4 hybridize them:
//!
//! ```text
//!         ⎡ ε/2        0        t1    −t2      ⎤
//!     H = ⎢ 0          ε/2+δL  −t3     t4      ⎥
//!         ⎢ t1        −t3      −ε/2    0       ⎥
//!         ⎣ −t2        t4       0     −ε/2+δR  ⎦
//! ```
//!
//! All energies are in h·GHz, so eigenvalue differences are directly
//! frequencies in GHz.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::UEV_TO_HGHZ;

/// Model parameters (energies in h·GHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Excited-state offset of the (2,1) configuration, h·GHz.
    #[serde(rename = "delta_L_ghz")]
    pub delta_l_ghz: f64,
    /// Excited-state offset of the (1,2) configuration, h·GHz.
    #[serde(rename = "delta_R_ghz")]
    pub delta_r_ghz: f64,
    /// Tunnel couplings [t1, t2, t3, t4], h·GHz.
    pub t_ghz: [f64; 4],
    /// Gate-voltage lever arm (eV per V).
    pub lever_arm: f64,
}

impl Default for ModelParams {
    /// Fitted parameter set of the device this library models.
    fn default() -> Self {
        ModelParams {
            delta_l_ghz: 3.0,
            delta_r_ghz: 95.8,
            t_ghz: [1.8, 7.1, 11.5, 6.3],
            lever_arm: 0.028,
        }
    }
}

impl ModelParams {
    /// Validate hard invariants; returns soft warnings on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.delta_l_ghz > 0.0) || !(self.delta_r_ghz > 0.0) {
            return Err(Error::Invalid(
                "delta_L_ghz and delta_R_ghz must be positive".into(),
            ));
        }
        if self.t_ghz.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Invalid("tunnel couplings t_ghz must be >= 0".into()));
        }
        if !self.lever_arm.is_finite() {
            return Err(Error::Invalid("lever_arm must be finite".into()));
        }
        let mut warnings = Vec::new();
        if self.delta_r_ghz <= self.delta_l_ghz {
            warnings.push(format!(
                "delta_R_ghz ({}) <= delta_L_ghz ({}): outside the asymmetric-splitting regime",
                self.delta_r_ghz, self.delta_l_ghz
            ));
        }
        Ok(warnings)
    }

    /// Gate-voltage swing (volts) → detuning (h·GHz) through the lever arm.
    pub fn gate_to_detuning(&self, delta_v: f64) -> f64 {
        // lever arm gives eV per V; 1 eV = 1e6 μeV
        self.lever_arm * delta_v * 1e6 * UEV_TO_HGHZ
    }

    /// Detuning (h·GHz) → energy in μeV.
    pub fn detuning_to_uev(&self, eps: f64) -> f64 {
        eps / UEV_TO_HGHZ
    }
}

/// Sorted eigendecomposition of the model at one detuning.
#[derive(Debug, Clone)]
pub struct LevelSet {
    /// Detuning, h·GHz.
    pub detuning: f64,
    /// Eigenvalues ascending, h·GHz.
    pub eigenvalues: [f64; 4],
    /// Orthonormal eigenvectors; column i pairs with `eigenvalues[i]`.
    pub eigenvectors: Matrix4<f64>,
}

/// Build the 4×4 Hamiltonian at detuning `eps` (h·GHz).
pub fn build_hamiltonian(eps: f64, p: &ModelParams) -> Matrix4<f64> {
    let [t1, t2, t3, t4] = p.t_ghz;
    let e = eps / 2.0;
    Matrix4::new(
        e, 0.0, t1, -t2, //
        0.0, e + p.delta_l_ghz, -t3, t4, //
        t1, -t3, -e, 0.0, //
        -t2, t4, 0.0, -e + p.delta_r_ghz,
    )
}

/// ∂H/∂ε — diagonal (½, ½, −½, −½); the drive and noise both couple
/// through this operator.
pub fn dh_deps() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(0.5, 0.5, -0.5, -0.5))
}

/// Sorted eigenlevels and eigenvectors at detuning `eps`.
pub fn levels(eps: f64, p: &ModelParams) -> LevelSet {
    let h = build_hamiltonian(eps, p);
    let se = h.symmetric_eigen();
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let mut eigenvalues = [0.0; 4];
    let mut eigenvectors = Matrix4::zeros();
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = se.eigenvalues[src];
        eigenvectors.set_column(dst, &se.eigenvectors.column(src).into_owned());
    }
    LevelSet { detuning: eps, eigenvalues, eigenvectors }
}

/// Qubit frequency E1 − E0 in GHz.
pub fn qubit_splitting(eps: f64, p: &ModelParams) -> f64 {
    let l = levels(eps, p);
    l.eigenvalues[1] - l.eigenvalues[0]
}

/// One dispersion-scan row.
#[derive(Debug, Clone, Serialize)]
pub struct DispersionRow {
    pub eps_hghz: f64,
    pub levels: [f64; 4],
    pub f_qubit_ghz: f64,
}

/// Levels and qubit frequency over a detuning grid.
pub fn dispersion_scan(eps_grid: &[f64], p: &ModelParams) -> Result<Vec<DispersionRow>> {
    if eps_grid.is_empty() {
        return Err(Error::Invalid("dispersion grid is empty".into()));
    }
    if eps_grid.iter().any(|e| !e.is_finite()) {
        return Err(Error::Invalid("dispersion grid must be finite".into()));
    }
    Ok(eps_grid
        .iter()
        .map(|&eps| {
            let l = levels(eps, p);
            DispersionRow {
                eps_hghz: eps,
                levels: l.eigenvalues,
                f_qubit_ghz: l.eigenvalues[1] - l.eigenvalues[0],
            }
        })
        .collect())
}

/// Find a detuning where the qubit splitting equals `target_ghz` by
/// bisection on `[bracket.0, bracket.1]`.
///
/// The splitting is not globally monotone in ε, so the caller supplies
/// a bracket; it is an error if the bracket endpoints do not straddle
/// the target.
pub fn find_detuning_for_splitting(
    target_ghz: f64,
    bracket: (f64, f64),
    p: &ModelParams,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Invalid("bracket must satisfy lo < hi".into()));
    }
    let f = |e: f64| qubit_splitting(e, p) - target_ghz;
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo * fhi > 0.0 {
        return Err(Error::Numerical(format!(
            "bracket [{lo}, {hi}] does not straddle splitting {target_ghz} GHz \
             (f(lo)={:.6}, f(hi)={:.6})",
            flo + target_ghz,
            fhi + target_ghz
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || 0.5 * (hi - lo) < 1e-12 * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn device() -> ModelParams {
        ModelParams::default()
    }

    /// Jacobi eigenvalue iteration — an eigensolver coded independently
    /// of nalgebra, used as the oracle for `levels`.
    fn jacobi_eigenvalues(mut a: [[f64; 4]; 4]) -> [f64; 4] {
        for _ in 0..200 {
            let (mut p, mut q, mut max) = (0, 1, 0.0f64);
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if a[i][j].abs() > max {
                        max = a[i][j].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if max < 1e-14 {
                break;
            }
            let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
            let (s, c) = theta.sin_cos();
            for k in 0..4 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..4 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
        let mut ev = [a[0][0], a[1][1], a[2][2], a[3][3]];
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn jacobi_of(eps: f64, p: &ModelParams) -> [f64; 4] {
        let h = build_hamiltonian(eps, p);
        let mut a = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] = h[(i, j)];
            }
        }
        jacobi_eigenvalues(a)
    }

    #[test]
    fn diagonal_limit() {
        let p = ModelParams { t_ghz: [0.0; 4], ..device() };
        let l = levels(0.0, &p);
        let expect = [0.0, 0.0, 3.0, 95.8];
        for (a, b) in l.eigenvalues.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        // eps = 10: diagonal entries {5, 8, -5, 90.8} sorted
        let l10 = levels(10.0, &p).eigenvalues;
        for (a, b) in l10.iter().zip([-5.0, 5.0, 8.0, 90.8]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenvalues_match_independent_solver() {
        let p = device();
        for eps in [-1e5, -300.0, -50.69, -40.0, 0.0, 60.0, 1e5] {
            let l = levels(eps, &p);
            let oracle = jacobi_of(eps, &p);
            for (a, b) in l.eigenvalues.iter().zip(oracle) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-9 * (1.0 + eps.abs()));
            }
        }
    }

    #[test]
    fn frozen_spectra() {
        // frozen from an independent double-precision diagonalization
        let p = device();
        let cases: [(f64, [f64; 4]); 3] = [
            (
                -40.0,
                [-21.296869603456, -19.683543173147, 23.309418636024, 116.470994140579],
            ),
            (0.0, [-10.524416833211, -0.305987337501, 12.877449029468, 96.752955141244]),
            (60.0, [-32.101634742232, 28.573152856711, 34.027717371663, 68.300764513859]),
        ];
        for (eps, want) in cases {
            let got = levels(eps, &p).eigenvalues;
            for (a, b) in got.iter().zip(want) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
            }
        }
        let splits: [(f64, f64); 8] = [
            (-1e5, 2.998817231019),
            (1e5, 95.800453023410),
            (0.0, 10.218429495710),
            (-15.0, 4.466705191920),
            (-40.0, 1.613326430308),
            (-50.0, 1.480716678287),
            (-80.0, 1.749683407345),
            (-300.0, 2.618283601715),
        ];
        for (eps, want) in splits {
            assert_abs_diff_eq!(qubit_splitting(eps, &p), want, epsilon = 1e-9);
        }
    }

    #[test]
    fn level_set_invariants() {
        let p = device();
        for eps in [-200.0, -40.0, 0.0, 25.0, 300.0] {
            let h = build_hamiltonian(eps, &p);
            let l = levels(eps, &p);
            assert!(l.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let vtv = l.eigenvectors.transpose() * l.eigenvectors;
            assert!((vtv - Matrix4::identity()).abs().max() < 1e-12);
            let hnorm = h.norm();
            for i in 0..4 {
                let v = l.eigenvectors.column(i);
                let r = h * v - l.eigenvalues[i] * v;
                assert!(r.norm() <= 1e-10 * hnorm, "residual {} at eps {eps}", r.norm());
            }
        }
    }

    #[test]
    fn perturbative_asymptotics() {
        let p = device();
        // second-order perturbation theory for the two lowest levels at
        // large negative eps, coded directly from the matrix layout
        let pt2 = |eps: f64| {
            let [t1, t2, t3, t4] = p.t_ghz;
            let e0 = eps / 2.0 + t1 * t1 / eps + t2 * t2 / (eps - p.delta_r_ghz);
            let e1 = eps / 2.0 + p.delta_l_ghz
                + t3 * t3 / (eps + p.delta_l_ghz)
                + t4 * t4 / (eps + p.delta_l_ghz - p.delta_r_ghz);
            e1 - e0
        };
        let eps = -1e5;
        assert_abs_diff_eq!(pt2(eps), 2.998816945840, epsilon = 1e-9);
        assert_abs_diff_eq!(qubit_splitting(eps, &p), pt2(eps), epsilon = 1e-6);
        // documented bound
        let tmax: f64 = 11.5;
        assert!((qubit_splitting(-5000.0, &p) - 3.0).abs() <= tmax * tmax / 5000.0 + 1e-9);
        assert!((qubit_splitting(5000.0, &p) - 95.8).abs() <= tmax * tmax / 5000.0 + 1e-9);
    }

    #[test]
    fn dispersion_minimum_and_bisection() {
        let p = device();
        // single local minimum on the negative branch, frozen location
        assert_abs_diff_eq!(qubit_splitting(-50.69127657, &p), 1.480323923656, epsilon = 1e-8);
        // 1.55 GHz is attainable on both branches around the minimum
        let e_outer = find_detuning_for_splitting(1.55, (-300.0, -50.69), &p).unwrap();
        let e_inner = find_detuning_for_splitting(1.55, (-50.69, -15.0), &p).unwrap();
        assert!(e_outer < -50.69 && e_inner > -50.69);
        assert_abs_diff_eq!(qubit_splitting(e_outer, &p), 1.55, epsilon = 1e-9);
        assert_abs_diff_eq!(qubit_splitting(e_inner, &p), 1.55, epsilon = 1e-9);
        // non-straddling bracket is rejected
        assert!(find_detuning_for_splitting(1.4, (-300.0, 0.0), &p).is_err());
    }

    #[test]
    fn gate_conversion() {
        let p = device();
        assert_eq!(p.gate_to_detuning(0.0), 0.0);
        // 1 mV at lever arm 0.028 → 28 μeV → 6.770 h·GHz
        assert_relative_eq!(p.gate_to_detuning(1e-3), 6.770, max_relative = 1e-4);
        // 0.39 meV ↔ ≈ 13.9 mV of gate swing
        let dv = 0.39e-3 / 0.028;
        assert_relative_eq!(p.detuning_to_uev(p.gate_to_detuning(dv)), 390.0, max_relative = 1e-12);
        assert_relative_eq!(dv, 13.9e-3, max_relative = 0.01);
    }

    #[test]
    fn validation() {
        assert!(device().validate().unwrap().is_empty());
        let swapped = ModelParams { delta_l_ghz: 95.8, delta_r_ghz: 3.0, ..device() };
        assert_eq!(swapped.validate().unwrap().len(), 1);
        let bad = ModelParams { delta_l_ghz: -1.0, ..device() };
        assert!(bad.validate().is_err());
        let badt = ModelParams { t_ghz: [1.0, -0.1, 1.0, 1.0], ..device() };
        assert!(badt.validate().is_err());
    }

    #[test]
    fn scan_consistency() {
        let p = device();
        let grid = [-100.0, 0.0, 100.0];
        let pt = ModelParams { t_ghz: [0.0; 4], ..p.clone() };
        let rows = dispersion_scan(&grid, &pt).unwrap();
        for (row, want) in rows.iter().zip([3.0, 0.0, 95.8]) {
            assert_abs_diff_eq!(row.f_qubit_ghz, want, epsilon = 1e-12);
        }
        let rows = dispersion_scan(&[-40.0], &p).unwrap();
        assert_eq!(rows.len(), 1);
        assert_abs_diff_eq!(rows[0].f_qubit_ghz, qubit_splitting(-40.0, &p), epsilon = 0.0);
        assert!(dispersion_scan(&[], &p).is_err());
        assert!(dispersion_scan(&[f64::NAN], &p).is_err());
    }

    proptest! {
        #[test]
        fn hamiltonian_symmetric_and_trace_fixed(eps in -500.0f64..500.0) {
            let p = device();
            let h = build_hamiltonian(eps, &p);
            prop_assert!((h - h.transpose()).abs().max() == 0.0);
            let l = levels(eps, &p);
            let tr: f64 = l.eigenvalues.iter().sum();
            prop_assert!((tr - (p.delta_l_ghz + p.delta_r_ghz)).abs() < 1e-9);
        }

        #[test]
        fn sign_flip_invariance(eps in -300.0f64..300.0, k in 0usize..4) {
            // conjugating by diag(±1) must leave the spectrum unchanged
            let p = device();
            let mut d = Matrix4::identity();
            d[(k, k)] = -1.0;
            let h = build_hamiltonian(eps, &p);
            let hf = d * h * d;
            let mut a = levels(eps, &p).eigenvalues;
            let se = hf.symmetric_eigen();
            let mut b = [se.eigenvalues[0], se.eigenvalues[1], se.eigenvalues[2], se.eigenvalues[3]];
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-12 * (1.0 + eps.abs()));
            }
        }

        #[test]
        fn dispersion_continuity(start in -250.0f64..200.0) {
            let p = device();
            let grid: Vec<f64> = (0..40).map(|i| start + i as f64 * 0.5).collect();
            let rows = dispersion_scan(&grid, &p).unwrap();
            for w in rows.windows(2) {
                let jump = (w[1].f_qubit_ghz - w[0].f_qubit_ghz).abs();
                prop_assert!(jump < 0.5 * 10.0, "jump {jump} at eps {}", w[0].eps_hghz);
            }
        }
    }
}
