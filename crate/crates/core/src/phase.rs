//! IRS phase design for a fixed beamformer.
//!
//! With `w` fixed, user `i` sees `φᴴ a_i + b_i` where `φ_n = e^{-jθ_n}`,
//! `a_i = diag(h_{r,i}ᴴ) H w` and `b_i = h_{b,i}ᴴ w`. Appending a unit
//! auxiliary coordinate turns the SINR constraints into homogeneous
//! quadratic forms in `v = t[φ; 1]`, whose SDP relaxation maximizes the
//! total SINR residual over `V = v vᴴ` with a unit diagonal. Phases are
//! recovered by Gaussian randomization and the candidate with the largest
//! min-gain `f` that does not fall below the current `f` is kept.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::beamforming::{effective_channels, Beamformer};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{
    solve_sdp, HermitianMatrix, SdpConstraint, SdpObjective, SdpProblem, SdpSolution, SdpStatus,
};

/// Diagonal of the reflection matrix, `Φ = diag(e^{jθ_1}, …, e^{jθ_N})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    theta: Vec<f64>,
    phi: Vec<Complex64>,
}

impl PhaseVector {
    /// Angles are wrapped into `[0, 2π)`.
    pub fn from_angles(theta: Vec<f64>) -> Self {
        let theta: Vec<f64> = theta
            .into_iter()
            .map(|t| {
                let w = t.rem_euclid(TAU);
                if w >= TAU {
                    0.0
                } else {
                    w
                }
            })
            .collect();
        let phi = theta
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        Self { theta, phi }
    }

    /// Uses only the argument of each entry.
    pub fn from_unit(values: &[Complex64]) -> Self {
        Self::from_angles(
            values
                .iter()
                .map(|z| if z.norm() > 0.0 { z.arg() } else { 0.0 })
                .collect(),
        )
    }

    /// Independent angles uniform on `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::from_angles((0..n).map(|_| rng.gen_range(0.0..TAU)).collect())
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn diagonal(&self) -> &[Complex64] {
        &self.phi
    }

    /// The lifted vector `[φ; 1]` with `φ_n = conj(Φ_nn)`.
    pub fn lifted(&self) -> DVector<Complex64> {
        DVector::from_iterator(
            self.len() + 1,
            self.phi
                .iter()
                .map(|p| p.conj())
                .chain(std::iter::once(Complex64::new(1.0, 0.0))),
        )
    }
}

/// `min_i |h_i(Φ)ᴴ w_dir|²` for a unit-norm direction.
pub fn min_channel_gain_f(
    ch: &ChannelRealization,
    phases: &PhaseVector,
    w_dir: &DVector<Complex64>,
) -> f64 {
    debug_assert!(
        (w_dir.norm() - 1.0).abs() <= 1e-9,
        "direction must have unit norm"
    );
    effective_channels(ch, phases).min_gain(w_dir)
}

#[derive(Debug, Clone)]
pub struct QuadraticForms {
    pub a: Vec<DVector<Complex64>>,
    pub b: Vec<Complex64>,
    /// `[[a aᴴ, a b*], [b aᴴ, 0]]`, dimension `N + 1`.
    pub lifted: Vec<HermitianMatrix>,
    /// `‖w‖²` of the beamformer the forms were built from.
    pub w_norm_sq: f64,
}

pub fn build_quadratic_forms(ch: &ChannelRealization, w: &Beamformer) -> QuadraticForms {
    let hw = &ch.h_bs_irs * &w.w;
    let n = ch.n();
    let mut a = Vec::with_capacity(ch.k());
    let mut b = Vec::with_capacity(ch.k());
    let mut lifted = Vec::with_capacity(ch.k());
    for (hr, hb) in ch.h_irs_mu.iter().zip(&ch.h_bs_mu) {
        let ai = DVector::from_iterator(n, hr.iter().zip(hw.iter()).map(|(r, x)| r.conj() * x));
        let bi = hb.dotc(&w.w);
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&(&ai * ai.adjoint()));
        let col = &ai * bi.conj();
        m.view_mut((0, n), (n, 1)).copy_from(&col);
        m.view_mut((n, 0), (1, n)).copy_from(&col.adjoint());
        lifted.push(HermitianMatrix::new(m));
        a.push(ai);
        b.push(bi);
    }
    QuadraticForms {
        a,
        b,
        lifted,
        w_norm_sq: w.power,
    }
}

impl QuadraticForms {
    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn n(&self) -> usize {
        self.a.first().map_or(0, |a| a.len())
    }

    /// `|φᴴ a_i + b_i|²`, the received signal power of user `i`.
    pub fn gain(&self, i: usize, phases: &PhaseVector) -> f64 {
        self.gain_lifted(i, &phases.lifted())
    }

    fn gain_lifted(&self, i: usize, u: &DVector<Complex64>) -> f64 {
        let n = self.n();
        (u.rows(0, n).dotc(&self.a[i]) + self.b[i]).norm_sqr()
    }

    /// Min-gain metric `f` of the normalized beamformer under `phases`.
    pub fn f_value(&self, phases: &PhaseVector) -> f64 {
        let u = phases.lifted();
        self.f_lifted(&u)
    }

    fn f_lifted(&self, u: &DVector<Complex64>) -> f64 {
        (0..self.k())
            .map(|i| self.gain_lifted(i, u))
            .fold(f64::INFINITY, f64::min)
            / self.w_norm_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseOptStatus {
    Improved,
    NoImprovement,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct PhaseOptResult {
    pub status: PhaseOptStatus,
    pub phases: PhaseVector,
    pub f_before: f64,
    pub f_after: f64,
    /// `Σ α_i` at the relaxation optimum, in received-power units.
    pub residual_sum: f64,
    pub relaxation: Option<SdpSolution>,
}

/// Relaxed phase problem for the given forms, normalized by `γσ²`.
pub fn relaxation_problem(forms: &QuadraticForms, gamma_lin: f64, sigma_sq: f64) -> SdpProblem {
    let target = gamma_lin * sigma_sq;
    let n = forms.n();
    let mut constraints: Vec<SdpConstraint> = forms
        .lifted
        .iter()
        .zip(&forms.b)
        .map(|(a, b)| SdpConstraint::at_least(a.scale(1.0 / target), 1.0 - b.norm_sqr() / target))
        .collect();
    for d in 0..=n {
        let mut diag = vec![0.0; n + 1];
        diag[d] = 1.0;
        constraints.push(SdpConstraint::equal(
            HermitianMatrix::from_real_diagonal(&diag),
            1.0,
        ));
    }
    SdpProblem {
        objective: SdpObjective::MaximizeResidualSum,
        psd_dim: n + 1,
        constraints,
        residual_count: forms.k(),
    }
}

/// Unit-modulus phases from a lifted vector `v ≈ t[φ; 1]`.
fn recover_phases(v: &DVector<Complex64>) -> PhaseVector {
    let n = v.len() - 1;
    let t = v[n];
    // φ_n = e^{j arg(v_n / t)} and Φ_nn = conj(φ_n)
    let diag: Vec<Complex64> = (0..n).map(|k| (v[k] * t.conj()).conj()).collect();
    PhaseVector::from_unit(&diag)
}

/// One phase step: solve the relaxation, draw `candidates` random phase
/// vectors (plus the principal eigenvector) and keep the one with the
/// largest `f` among those with `f ≥ f_ow`.
pub fn optimize_phases<R: Rng + ?Sized>(
    forms: &QuadraticForms,
    current: &PhaseVector,
    gamma_lin: f64,
    sigma_sq: f64,
    f_ow: f64,
    candidates: usize,
    rng: &mut R,
) -> Result<PhaseOptResult> {
    assert!(f_ow >= 0.0);
    assert_eq!(current.len(), forms.n());
    let f_before = forms.f_value(current);
    let keep = |status, relaxation, residual_sum| PhaseOptResult {
        status,
        phases: current.clone(),
        f_before,
        f_after: f_before,
        residual_sum,
        relaxation,
    };
    if forms.n() == 0 {
        return Ok(keep(PhaseOptStatus::NoImprovement, None, 0.0));
    }

    let problem = relaxation_problem(forms, gamma_lin, sigma_sq);
    let sol = solve_sdp(&problem)?;
    let residual_sum = sol.residuals.iter().sum::<f64>() * gamma_lin * sigma_sq;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => return Ok(keep(PhaseOptStatus::Infeasible, Some(sol), 0.0)),
        SdpStatus::NumericalFailure => {
            return Err(Error::NumericalFailure(format!(
                "phase relaxation: gap {:.2e}, violation {:.2e}",
                sol.duality_gap, sol.max_constraint_violation
            )))
        }
    }

    let dim = forms.n() + 1;
    let eig = sol.psd_value.eigen();
    let factor = sol.psd_value.psd_sqrt_factor();
    let mut best: Option<(f64, PhaseVector)> = None;
    let mut consider = |v: &DVector<Complex64>| {
        let p = recover_phases(v);
        let f = forms.f_value(&p);
        if f >= f_ow && best.as_ref().map_or(true, |(bf, _)| f > *bf) {
            best = Some((f, p));
        }
    };
    consider(&eig.vectors.column(0).into_owned());
    let sd = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..candidates {
        let r = DVector::from_fn(dim, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        });
        consider(&(&factor * r));
    }

    Ok(match best {
        Some((f_after, phases)) => PhaseOptResult {
            status: PhaseOptStatus::Improved,
            phases,
            f_before,
            f_after,
            residual_sum,
            relaxation: Some(sol),
        },
        None => keep(PhaseOptStatus::NoImprovement, Some(sol), residual_sum),
    })
}
