//! Error budget of the detuning ramps that move the qubit between its
//! idle/measurement point and the operating point.
//!
//! Three numbers matter: how much population leaks out of the
//! computational doublet on the way in, how much an excited state
//! relaxes on the way out (the ramp crosses a strong T1 hot spot, so
//! the exit is split into a slow leg through the dangerous region and
//! a fast leg across it), and how much a fast exit leg repopulates the
//! excited state by diabatic passage.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{levels, ModelParams};
use crate::pulse::integrator::{propagate_psi, propagate_rho, Ham};
use crate::pulse::{PulseSegment, QubitState};

/// Geometry of the in/out ramps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RampSpec {
    /// Idle/measurement detuning, h·GHz.
    pub eps_idle_hghz: f64,
    /// Operating detuning, h·GHz.
    pub eps_op_hghz: f64,
    /// Split point of the two-stage exit ramp, h·GHz.
    pub eps_mid_hghz: f64,
    /// Entry ramp duration, ns.
    pub ramp_in_ns: f64,
    /// Slow exit leg (operating point to split point), ns.
    pub stage1_ns: f64,
    /// Fast exit leg (split point to idle), ns.
    pub stage2_ns: f64,
}

impl Default for RampSpec {
    fn default() -> Self {
        RampSpec {
            eps_idle_hghz: 60.0,
            eps_op_hghz: -40.0,
            eps_mid_hghz: -15.0,
            ramp_in_ns: 60.0,
            stage1_ns: 20.0,
            stage2_ns: 2.0,
        }
    }
}

impl RampSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ramp_in_ns > 0.0 && self.stage1_ns > 0.0 && self.stage2_ns > 0.0) {
            return Err(Error::Invalid("ramp durations must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RampBudget {
    /// Population outside the two lowest eigenstates after the entry
    /// ramp, starting from the ground state at idle.
    pub leakage_in: f64,
    /// Integrated relaxation probability of the excited state over the
    /// full exit ramp.
    pub relaxation_out: f64,
    pub relaxation_stage1: f64,
    pub relaxation_stage2: f64,
    /// Diabatic (Landau–Zener) excitation of the fast exit leg,
    /// starting from the ground state at the split point.
    pub lz_stage2: f64,
}

pub fn ramp_error_budget(
    params: &ModelParams,
    t1_table: &[(f64, f64)],
    spec: &RampSpec,
) -> Result<RampBudget> {
    params.validate()?;
    spec.validate()?;
    if t1_table.is_empty() {
        return Err(Error::Invalid("t1_table must not be empty".into()));
    }
    let ham = Ham::new(params);

    // entry: coherent, ground state at idle
    let ramp_in = PulseSegment::Ramp {
        duration_ns: spec.ramp_in_ns,
        eps_start_hghz: spec.eps_idle_hghz,
        eps_end_hghz: spec.eps_op_hghz,
    };
    let l_idle = levels(spec.eps_idle_hghz, params);
    let mut psi = [Complex64::ZERO; 4];
    for i in 0..4 {
        psi[i] = Complex64::new(l_idle.eigenvectors[(i, 0)], 0.0);
    }
    propagate_psi(&ham, params, &ramp_in, 0.0, 1.0, &mut psi);
    let l_op = levels(spec.eps_op_hghz, params);
    let mut pops = [0.0f64; 4];
    for (k, pk) in pops.iter_mut().enumerate() {
        let mut amp = Complex64::ZERO;
        for i in 0..4 {
            amp += psi[i] * l_op.eigenvectors[(i, k)];
        }
        *pk = amp.norm_sqr();
    }
    let norm: f64 = pops.iter().sum();
    let leakage_in = (pops[2] + pops[3]) / norm;

    // exit: excited state at the operating point, with relaxation
    let stage1 = PulseSegment::Ramp {
        duration_ns: spec.stage1_ns,
        eps_start_hghz: spec.eps_op_hghz,
        eps_end_hghz: spec.eps_mid_hghz,
    };
    let stage2 = PulseSegment::Ramp {
        duration_ns: spec.stage2_ns,
        eps_start_hghz: spec.eps_mid_hghz,
        eps_end_hghz: spec.eps_idle_hghz,
    };
    let mut rho = QubitState::eigenstate(spec.eps_op_hghz, 1, params).rho;
    let mut acc1 = 0.0;
    propagate_rho(&ham, params, t1_table, &stage1, 0.0, 1.0, &mut rho, &mut acc1);
    let mut acc2 = 0.0;
    propagate_rho(&ham, params, t1_table, &stage2, 0.0, 1.0, &mut rho, &mut acc2);

    // diabatic error of the fast leg alone: coherent, ground start
    let l_mid = levels(spec.eps_mid_hghz, params);
    let mut psi2 = [Complex64::ZERO; 4];
    for i in 0..4 {
        psi2[i] = Complex64::new(l_mid.eigenvectors[(i, 0)], 0.0);
    }
    propagate_psi(&ham, params, &stage2, 0.0, 1.0, &mut psi2);
    let mut amp0 = Complex64::ZERO;
    let mut norm2 = 0.0;
    for i in 0..4 {
        amp0 += psi2[i] * l_idle.eigenvectors[(i, 0)];
        norm2 += psi2[i].norm_sqr();
    }
    let lz_stage2 = 1.0 - amp0.norm_sqr() / norm2;

    Ok(RampBudget {
        leakage_in,
        relaxation_out: acc1 + acc2,
        relaxation_stage1: acc1,
        relaxation_stage2: acc2,
        lz_stage2,
    })
}
