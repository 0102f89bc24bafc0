use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use irs_broadcast::alternating::run_alternating;
use irs_broadcast::bound::bound_report;
use irs_broadcast::channel::{draw_realization, geometry_for, link_budget};
use irs_broadcast::harness::{
    read_config, run_sweep_with_threads, write_csv, write_trace, ScenarioFile,
};
use irs_broadcast::rng::{stream, tag};
use irs_broadcast::units::watts_to_dbm;

/// Minimum-power broadcast beamforming with an intelligent reflecting surface.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo sweep described by the config and write a CSV.
    Sweep(Common),
    /// Run the optimizer on one channel draw and dump its iteration trace.
    Single {
        #[command(flatten)]
        common: Common,
        /// Trial index whose channel draw is used.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Print the closed-form lower bound for the configured scenario.
    Bound(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output path; stdout when omitted (required for `sweep`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the `trials` key.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

enum Failure {
    Config(anyhow::Error),
    Numerical(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

fn load(common: &Common) -> anyhow::Result<ScenarioFile> {
    let mut file = read_config(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        file.config.seed = seed;
    }
    if let Some(trials) = common.trials {
        anyhow::ensure!(trials >= 1, "--trials must be at least 1");
        file.config.trials = trials;
        if let Some(sw) = file.sweep.as_mut() {
            sw.trials = trials;
        }
    }
    Ok(file)
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn sweep(common: &Common) -> Result<(), Failure> {
    let file = load(common)?;
    let spec = file.sweep.context("config has no `sweep_variable`")?;
    let out = common.out.as_deref().context("`sweep` needs --out")?;
    let threads = common
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cells =
        run_sweep_with_threads(&file.config, &spec, threads).map_err(anyhow::Error::from)?;
    let rows: Vec<_> = cells.iter().map(|c| c.row.clone()).collect();
    write_csv(&rows, out).with_context(|| format!("writing {}", out.display()))?;

    let mut dead = Vec::new();
    for c in &cells {
        let r = &c.row;
        eprintln!(
            "{}={:<4} {:<12} {:>9.3} dBm  ({} trials, {} failed)",
            r.sweep_variable.as_str(),
            r.sweep_value,
            r.method.as_str(),
            r.mean_power_dbm,
            r.trials,
            r.failures
        );
        for (t, msg) in &c.errors {
            eprintln!("    trial {t}: {msg}");
        }
        if r.trials == 0 {
            dead.push(format!(
                "{}={} {}",
                r.sweep_variable.as_str(),
                r.sweep_value,
                r.method.as_str()
            ));
        }
    }
    if dead.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "every trial failed in: {}",
            dead.join(", ")
        )))
    }
}

fn single(common: &Common, trial: usize) -> Result<(), Failure> {
    let cfg = load(common)?.config;
    let mut ch_rng = stream(
        cfg.seed,
        &[tag::CHANNEL, cfg.n_irs_units as u64, trial as u64],
    );
    let mut alg_rng = stream(
        cfg.seed,
        &[tag::ALGORITHM, cfg.n_irs_units as u64, 0, trial as u64],
    );
    let ch = draw_realization(&cfg, &mut ch_rng);
    let trace =
        run_alternating(&cfg, &ch, &mut alg_rng).map_err(|e| Failure::Numerical(e.to_string()))?;
    write_trace(&trace, output(common.out.as_deref())?).map_err(anyhow::Error::from)?;
    eprintln!(
        "final power {:.4} dBm after {} iterations ({:?})",
        watts_to_dbm(trace.final_power()),
        trace.iterations(),
        trace.termination
    );
    Ok(())
}

fn bound(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?.config;
    let mut rng = stream(cfg.seed, &[tag::CHANNEL, cfg.n_irs_units as u64, 0]);
    let geom = geometry_for(&cfg, &mut rng);
    let rep = bound_report(&cfg, &link_budget(&cfg, &geom)).map_err(anyhow::Error::from)?;
    let mut out = output(common.out.as_deref())?;
    let mut text = format!(
        "M = {}, N = {}, K = {}, variant = {}\n",
        cfg.m_antennas,
        cfg.n_irs_units,
        cfg.k_users,
        cfg.bound_variant.as_str()
    );
    text += "user  q_factor  e_a_sq_bound  e_b_sq_bound  e_ab  n_sq_term  cross_terms\n";
    for (i, (q, t)) in rep.q_factors.iter().zip(&rep.term_breakdown).enumerate() {
        text += &format!(
            "{}  {:e}  {:e}  {:e}  {:e}  {:e}  {:e}\n",
            i + 1,
            q,
            t.e_a_sq_bound,
            t.e_b_sq_bound,
            t.e_ab,
            t.n_sq_term,
            t.cross_terms
        );
    }
    text += &format!(
        "bound_power_watts = {:e}\nbound_power_dbm = {:.4}\n",
        rep.bound_power_watts,
        watts_to_dbm(rep.bound_power_watts)
    );
    out.write_all(text.as_bytes())
        .context("writing bound report")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Single { common, trial } => single(common, *trial),
        Command::Bound(c) => bound(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
