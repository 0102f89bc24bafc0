//! Minimum-power broadcast beamforming for a fixed IRS configuration.
//!
//! The non-convex QCQP `min ‖w‖² s.t. |h_iᴴ w|² ≥ γσ²` is lifted to the SDP
//! `min tr X s.t. tr(X h_i h_iᴴ) ≥ γσ², X ⪰ 0`. A rank-one optimum is used
//! directly; otherwise candidate directions are drawn by Gaussian
//! randomization and each is scaled to the least power that meets every
//! SINR target.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{
    solve_sdp, HermitianMatrix, SdpConstraint, SdpObjective, SdpProblem, SdpStatus,
};
use crate::phase::PhaseVector;

/// Relative eigenvalue ratio under which the SDR solution counts as rank one.
pub const RANK_ONE_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub w: DVector<Complex64>,
    pub power: f64,
    /// Optimal value of the relaxation that produced `w`, when there was one.
    pub relaxation_bound: Option<f64>,
}

impl Beamformer {
    pub fn new(w: DVector<Complex64>) -> Self {
        let power = w.norm_squared();
        Self {
            w,
            power,
            relaxation_bound: None,
        }
    }

    /// Unit-norm direction `w / ‖w‖`.
    pub fn direction(&self) -> DVector<Complex64> {
        self.w.unscale(self.power.sqrt())
    }
}

/// Row channels `h_i(Φ)ᴴ = h_{r,i}ᴴ Φ H_{b,r} + h_{b,i}ᴴ`, one per user.
/// User `i` receives `h_eff[i] · w` (plain product, no further conjugation).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    pub h_eff: Vec<DVector<Complex64>>,
}

impl EffectiveChannels {
    pub fn k(&self) -> usize {
        self.h_eff.len()
    }

    pub fn gain(&self, i: usize, w: &DVector<Complex64>) -> f64 {
        self.h_eff[i].dot(w).norm_sqr()
    }

    /// `min_i |h_iᴴ w|²`; with a unit-norm `w` this is the metric `f`.
    pub fn min_gain(&self, w: &DVector<Complex64>) -> f64 {
        (0..self.k())
            .map(|i| self.gain(i, w))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn effective_channels(ch: &ChannelRealization, phases: &PhaseVector) -> EffectiveChannels {
    assert_eq!(phases.len(), ch.n(), "phase vector length must equal N");
    let h_eff = ch
        .h_irs_mu
        .iter()
        .zip(&ch.h_bs_mu)
        .map(|(hr, hb)| {
            // h_rᴴ Φ as a row vector: conj(h_r[n]) · e^{jθ_n}
            let weighted = DVector::from_iterator(
                hr.len(),
                hr.iter().zip(phases.diagonal()).map(|(h, p)| h.conj() * p),
            );
            let reflected = ch.h_bs_irs.tr_mul(&weighted);
            reflected + hb.map(|z| z.conj())
        })
        .collect();
    EffectiveChannels { h_eff }
}

/// Least power meeting every SINR target along the unit direction `dir`:
/// `γσ² / min_i |h_iᴴ dir|²`.
pub fn power_for_direction(
    heff: &EffectiveChannels,
    dir: &DVector<Complex64>,
    gamma_lin: f64,
    sigma_sq: f64,
) -> f64 {
    gamma_lin * sigma_sq / heff.min_gain(dir)
}

fn complex_gaussian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    let sd = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sd * re, sd * im)
    })
}

/// Solves the fixed-Φ power minimization by SDR plus `candidates` rounds of
/// Gaussian randomization.
///
/// The principal eigenvector of the relaxed solution is always evaluated
/// alongside the random candidates; when the relaxation is numerically
/// rank one it is the only candidate.
pub fn optimize_beamformer<R: Rng + ?Sized>(
    heff: &EffectiveChannels,
    gamma_lin: f64,
    sigma_sq: f64,
    candidates: usize,
    rng: &mut R,
) -> Result<Beamformer> {
    assert!(gamma_lin > 0.0 && sigma_sq > 0.0 && candidates >= 1);
    let k = heff.k();
    if k == 0 {
        return Err(Error::InfeasibleBeamforming("no users".into()));
    }
    let m = heff.h_eff[0].len();
    let norms: Vec<f64> = heff.h_eff.iter().map(|h| h.norm()).collect();
    if let Some(i) = norms.iter().position(|&n| !(n > 0.0)) {
        return Err(Error::InfeasibleBeamforming(format!(
            "user {i} has a zero channel"
        )));
    }
    let scale = norms.iter().copied().fold(0.0, f64::max);

    // Normalized relaxation: min tr X̃ s.t. tr(X̃ ĥĥᴴ) ≥ 1 with ĥ = h / scale;
    // the physical optimum is X = X̃ · γσ² / scale².
    let constraints = heff
        .h_eff
        .iter()
        .map(|h| SdpConstraint::at_least(HermitianMatrix::outer(&h.map(|z| z.conj() / scale)), 1.0))
        .collect();
    let problem = SdpProblem {
        objective: SdpObjective::MinimizeTrace,
        psd_dim: m,
        constraints,
        residual_count: 0,
    };
    let sol = solve_sdp(&problem)?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => {
            return Err(Error::InfeasibleBeamforming(
                "relaxation reported infeasible".into(),
            ))
        }
        SdpStatus::NumericalFailure => {
            return Err(Error::NumericalFailure(format!(
                "beamforming relaxation: gap {:.2e}, violation {:.2e}",
                sol.duality_gap, sol.max_constraint_violation
            )))
        }
    }
    let bound = sol.objective_value * gamma_lin * sigma_sq / (scale * scale);

    let eig = sol.psd_value.eigen();
    let principal = eig.vectors.column(0).into_owned();
    let mut best_dir = principal.clone();
    let mut best_power = power_for_direction(heff, &principal, gamma_lin, sigma_sq);

    let rank_one = eig.values.len() < 2 || eig.values[1] <= RANK_ONE_RATIO * eig.values[0];
    if !rank_one {
        let factor = sol.psd_value.psd_sqrt_factor();
        for _ in 0..candidates {
            let v = &factor * complex_gaussian(m, rng);
            let norm = v.norm();
            if !(norm > 0.0) {
                continue;
            }
            let dir = v.unscale(norm);
            let p = power_for_direction(heff, &dir, gamma_lin, sigma_sq);
            if p < best_power {
                best_power = p;
                best_dir = dir;
            }
        }
    }
    if !best_power.is_finite() {
        return Err(Error::NumericalFailure(
            "no candidate reaches every user".into(),
        ));
    }
    let w = best_dir * Complex64::new(best_power.sqrt(), 0.0);
    let mut bf = Beamformer::new(w);
    bf.relaxation_bound = Some(bound);
    Ok(bf)
}
