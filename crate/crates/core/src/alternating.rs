//! Alternating optimization of the beamformer and the IRS phases, plus the
//! two reference schemes (no IRS, random IRS phases).

use rand::Rng;

use crate::beamforming::{effective_channels, optimize_beamformer, Beamformer};
use crate::channel::ChannelRealization;
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::phase::{build_quadratic_forms, optimize_phases, PhaseOptStatus, PhaseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative power improvement fell to `ε` or below.
    Converged,
    /// The phase relaxation was certified infeasible.
    PhaseInfeasible,
    /// A beamformer step raised the power; the previous direction was kept.
    MonotonicityGuard,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    /// `P_t^{(j)}` for every beamformer step, non-increasing.
    pub powers: Vec<f64>,
    /// `f` after each beamformer step.
    pub f_ow_values: Vec<f64>,
    /// `f` after each phase step.
    pub f_ophi_values: Vec<f64>,
    pub final_beamformer: Beamformer,
    pub final_phases: PhaseVector,
    pub termination: Termination,
}

impl IterationTrace {
    pub fn final_power(&self) -> f64 {
        self.final_beamformer.power
    }

    pub fn iterations(&self) -> usize {
        self.powers.len()
    }
}

fn check_dims(config: &ScenarioConfig, ch: &ChannelRealization) {
    assert_eq!(ch.m(), config.m_antennas, "channel M differs from config");
    assert_eq!(ch.n(), config.n_irs_units, "channel N differs from config");
    assert_eq!(ch.k(), config.k_users, "channel K differs from config");
}

/// Beamformer along `dir` scaled to the least power meeting every target.
fn rescaled(
    dir: &nalgebra::DVector<num_complex::Complex64>,
    f: f64,
    gamma_lin: f64,
    sigma_sq: f64,
) -> Beamformer {
    let power = gamma_lin * sigma_sq / f;
    Beamformer::new(dir * num_complex::Complex64::new(power.sqrt(), 0.0))
}

/// Runs the alternating optimization from uniformly random initial phases
/// drawn from `rng`.
///
/// Each round solves the beamformer for the current phases, stops once
/// `1 − P^{(j)}/P^{(j−1)} ≤ ε` (skipped in the first round), and then
/// updates the phases. The returned beamformer is always the one matched
/// to the returned phases.
pub fn run_alternating<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    ch: &ChannelRealization,
    rng: &mut R,
) -> Result<IterationTrace> {
    check_dims(config, ch);
    let (gamma, sigma_sq) = (config.gamma_lin(), config.sigma_sq_watts());
    let c = config.candidates_c;

    let mut phases = PhaseVector::random(config.n_irs_units, rng);
    let mut powers = Vec::new();
    let mut f_ow_values = Vec::new();
    let mut f_ophi_values: Vec<f64> = Vec::new();
    // Beamformer of the previous round; its direction reaches the last entry
    // of `f_ophi_values` under the current phases.
    let mut previous: Option<Beamformer> = None;

    loop {
        let heff = effective_channels(ch, &phases);
        let w = optimize_beamformer(&heff, gamma, sigma_sq, c, rng)?;

        if let Some(prev) = &previous {
            let p_prev = *powers.last().expect("previous round recorded a power");
            if w.power > p_prev {
                // Reuse the previous direction under the new phases; the
                // phase selection rule guarantees this does not exceed p_prev.
                let f = *f_ophi_values
                    .last()
                    .expect("phase step preceded this round");
                let kept = rescaled(&prev.direction(), f, gamma, sigma_sq);
                powers.push(kept.power);
                f_ow_values.push(f);
                return Ok(IterationTrace {
                    powers,
                    f_ow_values,
                    f_ophi_values,
                    final_beamformer: kept,
                    final_phases: phases,
                    termination: Termination::MonotonicityGuard,
                });
            }
            powers.push(w.power);
            f_ow_values.push(heff.min_gain(&w.direction()));
            if 1.0 - w.power / p_prev <= config.epsilon {
                return Ok(finish(
                    powers,
                    f_ow_values,
                    f_ophi_values,
                    w,
                    phases,
                    Termination::Converged,
                ));
            }
        } else {
            powers.push(w.power);
            f_ow_values.push(heff.min_gain(&w.direction()));
        }

        if config.n_irs_units == 0 {
            return Ok(finish(
                powers,
                f_ow_values,
                f_ophi_values,
                w,
                phases,
                Termination::Converged,
            ));
        }
        if powers.len() >= config.max_iterations {
            return Ok(finish(
                powers,
                f_ow_values,
                f_ophi_values,
                w,
                phases,
                Termination::MaxIterations,
            ));
        }

        let forms = build_quadratic_forms(ch, &w);
        let f_ow = *f_ow_values.last().expect("recorded above");
        let step = optimize_phases(&forms, &phases, gamma, sigma_sq, f_ow, c, rng)?;
        if step.status == PhaseOptStatus::Infeasible {
            return Ok(finish(
                powers,
                f_ow_values,
                f_ophi_values,
                w,
                phases,
                Termination::PhaseInfeasible,
            ));
        }
        f_ophi_values.push(step.f_after);
        phases = step.phases;
        previous = Some(w);
    }
}

fn finish(
    powers: Vec<f64>,
    f_ow_values: Vec<f64>,
    f_ophi_values: Vec<f64>,
    w: Beamformer,
    phases: PhaseVector,
    termination: Termination,
) -> IterationTrace {
    IterationTrace {
        powers,
        f_ow_values,
        f_ophi_values,
        final_beamformer: w,
        final_phases: phases,
        termination,
    }
}

/// Conventional power control using the direct BS–user links only.
pub fn baseline_without_irs<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    ch: &ChannelRealization,
    rng: &mut R,
) -> Result<Beamformer> {
    check_dims(config, ch);
    let direct = ChannelRealization {
        h_bs_irs: nalgebra::DMatrix::zeros(0, ch.m()),
        h_irs_mu: vec![nalgebra::DVector::zeros(0); ch.k()],
        h_bs_mu: ch.h_bs_mu.clone(),
        budget: ch.budget.clone(),
    };
    let heff = effective_channels(&direct, &PhaseVector::from_angles(vec![]));
    optimize_beamformer(
        &heff,
        config.gamma_lin(),
        config.sigma_sq_watts(),
        config.candidates_c,
        rng,
    )
}

/// Power control with one draw of uniformly random IRS phases.
pub fn baseline_random_irs<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    ch: &ChannelRealization,
    rng: &mut R,
) -> Result<Beamformer> {
    check_dims(config, ch);
    let phases = PhaseVector::random(config.n_irs_units, rng);
    let heff = effective_channels(ch, &phases);
    optimize_beamformer(
        &heff,
        config.gamma_lin(),
        config.sigma_sq_watts(),
        config.candidates_c,
        rng,
    )
}
