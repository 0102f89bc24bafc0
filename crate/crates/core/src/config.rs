//! Scenario parameters shared by the channel model, the optimizer and the
//! experiment harness.

use crate::error::{Error, Result};
use crate::units::{db_to_linear, dbm_to_watts};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuPlacement {
    /// Evenly spaced angles `π(i − ½)/K` on the BS-facing half circle.
    Even,
    /// Independent uniform angles on the same half circle, redrawn per trial.
    Random,
}

impl MuPlacement {
    pub fn as_str(self) -> &'static str {
        match self {
            MuPlacement::Even => "even",
            MuPlacement::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "even" => Some(MuPlacement::Even),
            "random" => Some(MuPlacement::Random),
            _ => None,
        }
    }
}

/// Which path gain multiplies the `N²` term of the Q-factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// `β_h² β_r²`, consistent with the E(A) derivation (default).
    BetaH,
    /// `β_b² β_r²`, the coefficient as typeset in the closed form.
    BetaB,
}

impl BoundVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundVariant::BetaH => "beta_h",
            BoundVariant::BetaB => "beta_b",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "beta_h" => Some(BoundVariant::BetaH),
            "beta_b" => Some(BoundVariant::BetaB),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m_antennas: usize,
    pub n_irs_units: usize,
    pub k_users: usize,
    pub gamma_db: f64,
    pub sigma_sq_dbm: f64,
    pub epsilon: f64,
    pub candidates_c: usize,
    pub max_iterations: usize,
    pub bs_position: Point3,
    pub irs_position: Point3,
    pub mu_radius: f64,
    pub mu_placement: MuPlacement,
    /// Inter-element spacing as a fraction of the wavelength.
    pub antenna_spacing_bs: f64,
    pub antenna_spacing_irs: f64,
    pub alpha_bs_irs: f64,
    pub alpha_irs_mu: f64,
    pub alpha_bs_mu: f64,
    pub ref_distance_m: f64,
    pub ref_gain_db: f64,
    pub bound_variant: BoundVariant,
    pub seed: u64,
    pub trials: usize,
}

impl ScenarioConfig {
    /// Simulation layout: BS at the origin, IRS 50 m away, users on a 2 m
    /// half circle around the IRS, σ² = −30 dBm, γ = 1 dB, ε = 1e-4.
    pub fn new(m_antennas: usize, n_irs_units: usize, k_users: usize) -> Self {
        Self {
            m_antennas,
            n_irs_units,
            k_users,
            gamma_db: 1.0,
            sigma_sq_dbm: -30.0,
            epsilon: 1e-4,
            candidates_c: 1000,
            max_iterations: 30,
            bs_position: [0.0, 0.0, 0.0],
            irs_position: [0.0, 50.0, 0.0],
            mu_radius: 2.0,
            mu_placement: MuPlacement::Even,
            antenna_spacing_bs: 0.5,
            antenna_spacing_irs: 0.5,
            alpha_bs_irs: 2.0,
            alpha_irs_mu: 2.8,
            alpha_bs_mu: 3.5,
            ref_distance_m: 1.0,
            ref_gain_db: -30.0,
            bound_variant: BoundVariant::BetaH,
            seed: 0,
            trials: 100,
        }
    }

    pub fn gamma_lin(&self) -> f64 {
        db_to_linear(self.gamma_db)
    }

    pub fn sigma_sq_watts(&self) -> f64 {
        dbm_to_watts(self.sigma_sq_dbm)
    }

    pub fn ref_gain(&self) -> f64 {
        db_to_linear(self.ref_gain_db)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m_antennas < 1 {
            return bad("m_antennas must be at least 1".into());
        }
        if self.k_users < 1 {
            return bad("k_users must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon {} must lie in (0, 1)", self.epsilon));
        }
        if self.candidates_c < 1 {
            return bad("candidates_c must be at least 1".into());
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if !(self.mu_radius > 0.0) {
            return bad("mu_radius must be positive".into());
        }
        if !(self.ref_distance_m > 0.0) {
            return bad("ref_distance_m must be positive".into());
        }
        if !(self.antenna_spacing_bs > 0.0 && self.antenna_spacing_irs > 0.0) {
            return bad("antenna spacings must be positive".into());
        }
        for (name, v) in [
            ("gamma_db", self.gamma_db),
            ("sigma_sq_dbm", self.sigma_sq_dbm),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.bs_position == self.irs_position {
            return bad("bs_position and irs_position coincide".into());
        }
        Ok(())
    }
}
