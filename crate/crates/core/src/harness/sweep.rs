//! Monte-Carlo sweeps over one scenario parameter.

use rayon::prelude::*;

use crate::alternating::{baseline_random_irs, baseline_without_irs, run_alternating};
use crate::bound::bound_report;
use crate::channel::{draw_realization, geometry_for, link_budget};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::rng::{stream, tag};
use crate::units::watts_to_dbm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    NIrsUnits,
    KUsers,
    MAntennas,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::NIrsUnits => "n_irs_units",
            SweepVariable::KUsers => "k_users",
            SweepVariable::MAntennas => "m_antennas",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "n_irs_units" => Some(SweepVariable::NIrsUnits),
            "k_users" => Some(SweepVariable::KUsers),
            "m_antennas" => Some(SweepVariable::MAntennas),
            _ => None,
        }
    }

    /// Copy of `config` with this parameter set to `value`.
    pub fn apply(self, config: &ScenarioConfig, value: usize) -> ScenarioConfig {
        let mut c = config.clone();
        match self {
            SweepVariable::NIrsUnits => c.n_irs_units = value,
            SweepVariable::KUsers => c.k_users = value,
            SweepVariable::MAntennas => c.m_antennas = value,
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Optimized,
    RandomIrs,
    WithoutIrs,
    LowerBound,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Optimized,
        Method::RandomIrs,
        Method::WithoutIrs,
        Method::LowerBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Optimized => "optimized",
            Method::RandomIrs => "random_irs",
            Method::WithoutIrs => "without_irs",
            Method::LowerBound => "lower_bound",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s)
    }

    fn stream_id(self) -> u64 {
        match self {
            Method::Optimized => 0,
            Method::RandomIrs => 1,
            Method::WithoutIrs => 2,
            Method::LowerBound => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub sweep_variable: SweepVariable,
    pub values: Vec<usize>,
    pub methods: Vec<Method>,
    pub trials: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep values are empty".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sweep values must be strictly increasing".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_variable: SweepVariable,
    pub sweep_value: usize,
    pub method: Method,
    /// `10·log₁₀(1000·mean watts)`; NaN when every trial failed.
    pub mean_power_dbm: f64,
    /// Sample standard deviation of the per-trial dBm values.
    pub std_power_dbm: f64,
    /// Trials that produced a power. Zero flags a cell where all failed.
    pub trials: usize,
    pub mean_iterations: f64,
    pub seed: u64,
    /// Trials dropped because the solver reported an error.
    pub failures: usize,
}

/// One row plus the per-trial data behind it, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub row: ResultRow,
    pub powers_watts: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Index and message of every failed trial.
    pub errors: Vec<(usize, String)>,
}

impl CellResult {
    pub fn mean_watts(&self) -> f64 {
        self.powers_watts.iter().sum::<f64>() / self.powers_watts.len() as f64
    }

    /// Standard error of the mean power in watts.
    pub fn std_error_watts(&self) -> f64 {
        let n = self.powers_watts.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let mean = self.mean_watts();
        let var = self
            .powers_watts
            .iter()
            .map(|p| (p - mean) * (p - mean))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Power and iteration count of one trial.
pub fn run_trial(
    config: &ScenarioConfig,
    value: usize,
    method: Method,
    trial: usize,
) -> Result<(f64, usize)> {
    let t = trial as u64;
    let v = value as u64;
    // Channels depend on (value, trial) only, so every method sees the
    // same draws; algorithm randomness also depends on the method.
    let mut ch_rng = stream(config.seed, &[tag::CHANNEL, v, t]);
    let mut alg_rng = stream(config.seed, &[tag::ALGORITHM, v, method.stream_id(), t]);
    if method == Method::LowerBound {
        let geom = geometry_for(config, &mut ch_rng);
        let rep = bound_report(config, &link_budget(config, &geom))?;
        return Ok((rep.bound_power_watts, 0));
    }
    let ch = draw_realization(config, &mut ch_rng);
    match method {
        Method::Optimized => {
            run_alternating(config, &ch, &mut alg_rng).map(|t| (t.final_power(), t.iterations()))
        }
        Method::RandomIrs => baseline_random_irs(config, &ch, &mut alg_rng).map(|b| (b.power, 1)),
        Method::WithoutIrs => baseline_without_irs(config, &ch, &mut alg_rng).map(|b| (b.power, 1)),
        Method::LowerBound => unreachable!(),
    }
}

fn summarize(
    spec: &SweepSpec,
    config: &ScenarioConfig,
    value: usize,
    method: Method,
    outcomes: Vec<Result<(f64, usize)>>,
) -> CellResult {
    let mut powers_watts = Vec::new();
    let mut iterations = Vec::new();
    let mut errors = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((p, it)) => {
                powers_watts.push(p);
                iterations.push(it);
            }
            Err(e) => errors.push((i, e.to_string())),
        }
    }
    let n = powers_watts.len();
    let (mean_dbm, std_dbm, mean_it) = if n == 0 {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mean_w = powers_watts.iter().sum::<f64>() / n as f64;
        let dbm: Vec<f64> = powers_watts.iter().map(|&p| watts_to_dbm(p)).collect();
        let mean_of_dbm = dbm.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (dbm.iter()
                .map(|d| (d - mean_of_dbm) * (d - mean_of_dbm))
                .sum::<f64>()
                / (n - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        (
            watts_to_dbm(mean_w),
            std,
            iterations.iter().sum::<usize>() as f64 / n as f64,
        )
    };
    CellResult {
        row: ResultRow {
            sweep_variable: spec.sweep_variable,
            sweep_value: value,
            method,
            mean_power_dbm: mean_dbm,
            std_power_dbm: std_dbm,
            trials: n,
            mean_iterations: mean_it,
            seed: config.seed,
            failures: errors.len(),
        },
        powers_watts,
        iterations,
        errors,
    }
}

/// Runs every (value, method) cell of the sweep.
///
/// Trials run on the current rayon pool; results are gathered in trial
/// order, so the output does not depend on the number of threads. Cells
/// come back ordered by sweep value, then by the order of `spec.methods`.
pub fn run_sweep(config: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<CellResult>> {
    spec.validate()?;
    let mut cells = Vec::with_capacity(spec.values.len() * spec.methods.len());
    for &value in &spec.values {
        let cfg = spec.sweep_variable.apply(config, value);
        cfg.validate()?;
        for &method in &spec.methods {
            // The bound is deterministic, one evaluation suffices.
            let trials = if method == Method::LowerBound {
                1
            } else {
                spec.trials
            };
            let outcomes: Vec<_> = (0..trials)
                .into_par_iter()
                .map(|t| run_trial(&cfg, value, method, t))
                .collect();
            cells.push(summarize(spec, &cfg, value, method, outcomes));
        }
    }
    Ok(cells)
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(
    config: &ScenarioConfig,
    spec: &SweepSpec,
    threads: usize,
) -> Result<Vec<CellResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| run_sweep(config, spec))
}
