//! Closed-form lower bound on the average minimum transmit power.
//!
//! For one user, write `A = |h_rᴴ Φ H w̄|` (reflected path) and
//! `B = |h_bᴴ w̄|` (direct path) for a unit-norm direction `w̄`. Assuming
//! both paths add coherently, every `|C_n| = |Σ_m H_{n,m} w̄_m|` is at its
//! maximum `√(M/2)·β_h` and `w̄` has equal-magnitude entries, the largest
//! possible average channel gain is
//! `Q = E[(A + B)²] = E(A²) + 2·E(A)E(B) + E(B²)` and the transmit power
//! obeys `P ≥ γσ² / min_i Q_i`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;

use crate::channel::{rayleigh_vector, LinkBudget};
use crate::config::{BoundVariant, ScenarioConfig};
use crate::error::{Error, Result};

/// Individual contributions to one `Q_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermBreakdown {
    /// Bound on `E(A²) = E²(A) + Var(A)`.
    pub e_a_sq_bound: f64,
    /// Bound on `E(B²) = E²(B) + Var(B)`.
    pub e_b_sq_bound: f64,
    /// `E(AB)`, taken as `√(E²(A)·E²(B))`.
    pub e_ab: f64,
    /// The `N²` part of `E(A²)`, i.e. the bound on `E²(A)`.
    pub n_sq_term: f64,
    /// `2·E(AB)`.
    pub cross_terms: f64,
}

impl TermBreakdown {
    pub fn q(&self) -> f64 {
        self.e_a_sq_bound + self.cross_terms + self.e_b_sq_bound
    }
}

/// Term-by-term evaluation of `Q` from link amplitudes.
///
/// With [`BoundVariant::BetaB`] the `N²` term uses `β_b²` in place of
/// `β_h²`; every other term is unaffected.
pub fn q_terms(
    m: usize,
    n: usize,
    beta_r: f64,
    beta_h: f64,
    beta_b: f64,
    variant: BoundVariant,
) -> TermBreakdown {
    let (m, n) = (m as f64, n as f64);
    let rayleigh_var = 2.0 - PI / 2.0;
    let beta_sq_lead = match variant {
        BoundVariant::BetaH => beta_h * beta_h,
        BoundVariant::BetaB => beta_b * beta_b,
    };
    let n_sq_term = PI * n * n * beta_sq_lead * beta_r * beta_r * m / 8.0;
    let var_a = n * beta_r * beta_r * beta_h * beta_h * m * rayleigh_var / 4.0;
    let e_b_sq = PI * beta_b * beta_b * m / 4.0;
    let var_b = beta_b * beta_b * rayleigh_var / 2.0;
    let e_ab = n * PI * beta_r * beta_h * beta_b * m / (4.0 * SQRT_2);
    TermBreakdown {
        e_a_sq_bound: n_sq_term + var_a,
        e_b_sq_bound: e_b_sq + var_b,
        e_ab,
        n_sq_term,
        cross_terms: 2.0 * e_ab,
    }
}

/// `Q` with the `N²` term built on `β_h²`.
pub fn q_factor(m: usize, n: usize, beta_r: f64, beta_h: f64, beta_b: f64) -> f64 {
    q_terms(m, n, beta_r, beta_h, beta_b, BoundVariant::BetaH).q()
}

/// `P^L = γσ² / min_i Q_i`.
pub fn lower_bound_power(gamma_lin: f64, sigma_sq: f64, q_factors: &[f64]) -> Result<f64> {
    let q_min = q_factors.iter().copied().fold(None, |acc: Option<f64>, q| {
        Some(acc.map_or(q, |a| a.min(q)))
    });
    let q_min = q_min.ok_or(Error::EmptyQList)?;
    if !(q_min > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "Q factors must be positive, got {q_min}"
        )));
    }
    Ok(gamma_lin * sigma_sq / q_min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub q_factors: Vec<f64>,
    pub bound_power_watts: f64,
    pub term_breakdown: Vec<TermBreakdown>,
}

/// Per-user bound for the scenario's link budget.
pub fn bound_report(config: &ScenarioConfig, budget: &LinkBudget) -> Result<BoundReport> {
    let beta_h = budget.beta_h_sq.sqrt();
    let term_breakdown: Vec<TermBreakdown> = budget
        .beta_r_sq
        .iter()
        .zip(&budget.beta_b_sq)
        .map(|(r, b)| {
            q_terms(
                config.m_antennas,
                config.n_irs_units,
                r.sqrt(),
                beta_h,
                b.sqrt(),
                config.bound_variant,
            )
        })
        .collect();
    let q_factors: Vec<f64> = term_breakdown.iter().map(TermBreakdown::q).collect();
    let bound_power_watts =
        lower_bound_power(config.gamma_lin(), config.sigma_sq_watts(), &q_factors)?;
    Ok(BoundReport {
        q_factors,
        bound_power_watts,
        term_breakdown,
    })
}

/// Link amplitudes `β_r`, `β_h`, `β_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Betas {
    pub beta_r: f64,
    pub beta_h: f64,
    pub beta_b: f64,
}

impl Betas {
    pub fn unit() -> Self {
        Betas {
            beta_r: 1.0,
            beta_h: 1.0,
            beta_b: 1.0,
        }
    }
}

/// A Monte-Carlo estimate next to its closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub name: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
}

impl MomentCheck {
    /// Estimate does not exceed the bound by more than three standard errors.
    pub fn holds(&self) -> bool {
        self.estimate <= self.bound + 3.0 * self.std_error + 1e-12 * self.bound.abs()
    }

    /// Estimate and bound agree within three standard errors.
    pub fn tight(&self) -> bool {
        (self.estimate - self.bound).abs() <= 3.0 * self.std_error + 1e-12 * self.bound.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivationReport {
    pub trials: usize,
    pub checks: Vec<MomentCheck>,
}

impl DerivationReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(MomentCheck::holds)
    }

    pub fn get(&self, name: &str) -> Option<&MomentCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    m4: f64,
}

impl Moments {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m4) = (0.0, 0.0);
        for x in xs {
            let d = (x - mean) * (x - mean);
            m2 += d;
            m4 += d * d;
        }
        Moments {
            n,
            mean,
            m2: m2 / n,
            m4: m4 / n,
        }
    }

    fn sample_var(&self) -> f64 {
        self.m2 * self.n / (self.n - 1.0)
    }

    /// Standard error of the mean.
    fn se_mean(&self) -> f64 {
        (self.sample_var() / self.n).sqrt()
    }

    /// Standard error of the squared mean (delta method).
    fn se_mean_sq(&self) -> f64 {
        2.0 * self.mean.abs() * self.se_mean()
    }

    /// Large-sample standard error of the sample variance.
    fn se_var(&self) -> f64 {
        ((self.m4 - self.m2 * self.m2).max(0.0) / self.n).sqrt()
    }
}

/// Samples `A` and `B` under the alignment assumptions and compares their
/// moments with the closed-form bounds.
///
/// `H` is line-of-sight with entry magnitude `β_h/√2`, `w̄` has entries of
/// magnitude `1/√M` co-phased with `H`, so every `|C_n| = √(M/2)·β_h`. The
/// user links are drawn as `CN(0, β_r² I)` and `CN(0, β_b² I)`.
pub fn verify_bound_derivation<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    betas: Betas,
    trials: usize,
    rng: &mut R,
) -> DerivationReport {
    assert!(m >= 1, "need at least one antenna");
    assert!(trials >= 2, "need at least two trials");
    let c_mag = (m as f64 / 2.0).sqrt() * betas.beta_h;
    let w_mag = 1.0 / (m as f64).sqrt();
    let mut a = Vec::with_capacity(trials);
    let mut b = Vec::with_capacity(trials);
    for _ in 0..trials {
        let hr = rayleigh_vector(n, betas.beta_r * betas.beta_r, rng);
        let hb = rayleigh_vector(m, betas.beta_b * betas.beta_b, rng);
        a.push(c_mag * hr.iter().map(|z| z.norm()).sum::<f64>());
        b.push(w_mag * hb.iter().map(|z| z.norm()).sum::<f64>());
    }
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let q: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) * (x + y)).collect();
    let (ma, mb, mab, mq) = (
        Moments::of(&a),
        Moments::of(&b),
        Moments::of(&ab),
        Moments::of(&q),
    );

    let t = q_terms(
        m,
        n,
        betas.beta_r,
        betas.beta_h,
        betas.beta_b,
        BoundVariant::BetaH,
    );
    let checks = vec![
        MomentCheck {
            name: "E2(A)",
            estimate: ma.mean * ma.mean,
            std_error: ma.se_mean_sq(),
            bound: t.n_sq_term,
        },
        MomentCheck {
            name: "Var(A)",
            estimate: ma.sample_var(),
            std_error: ma.se_var(),
            bound: t.e_a_sq_bound - t.n_sq_term,
        },
        MomentCheck {
            name: "E2(B)",
            estimate: mb.mean * mb.mean,
            std_error: mb.se_mean_sq(),
            bound: PI * betas.beta_b * betas.beta_b * m as f64 / 4.0,
        },
        MomentCheck {
            name: "Var(B)",
            estimate: mb.sample_var(),
            std_error: mb.se_var(),
            bound: betas.beta_b * betas.beta_b * (2.0 - PI / 2.0) / 2.0,
        },
        MomentCheck {
            name: "E(AB)",
            estimate: mab.mean,
            std_error: mab.se_mean(),
            bound: t.e_ab,
        },
        MomentCheck {
            name: "Q",
            estimate: mq.mean,
            std_error: mq.se_mean(),
            bound: t.q(),
        },
    ];
    DerivationReport { trials, checks }
}
