//! Flat `key = value` scenario files.
//!
//! Keys are the field names of [`ScenarioConfig`] plus the sweep keys
//! `sweep_variable`, `values` and `methods`. Lists and points are comma
//! separated. Blank lines and `#` comments are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::config::{BoundVariant, MuPlacement, Point3, ScenarioConfig};
use crate::error::{Error, Result};

use super::sweep::{Method, SweepSpec, SweepVariable};

const REQUIRED: [&str; 5] = [
    "m_antennas",
    "n_irs_units",
    "k_users",
    "gamma_db",
    "sigma_sq_dbm",
];

const OPTIONAL: [&str; 20] = [
    "epsilon",
    "candidates_c",
    "max_iterations",
    "bs_position",
    "irs_position",
    "mu_radius",
    "mu_placement",
    "antenna_spacing_bs",
    "antenna_spacing_irs",
    "alpha_bs_irs",
    "alpha_irs_mu",
    "alpha_bs_mu",
    "ref_distance_m",
    "ref_gain_db",
    "bound_variant",
    "seed",
    "trials",
    "sweep_variable",
    "values",
    "methods",
];

/// Parsed contents of a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub config: ScenarioConfig,
    /// Present when the file names a `sweep_variable`.
    pub sweep: Option<SweepSpec>,
}

struct Entry {
    line: usize,
    value: String,
}

fn err(line: usize, key: &str, msg: impl std::fmt::Display) -> Error {
    Error::ConfigParse {
        line,
        message: format!("`{key}`: {msg}"),
    }
}

fn num<T: std::str::FromStr>(key: &str, e: &Entry) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    e.value
        .parse::<T>()
        .map_err(|x| err(e.line, key, format!("cannot parse {:?} ({x})", e.value)))
}

fn list<T: std::str::FromStr>(key: &str, e: &Entry) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|x| err(e.line, key, format!("cannot parse {s:?} ({x})")))
        })
        .collect()
}

fn point(key: &str, e: &Entry) -> Result<Point3> {
    let v: Vec<f64> = list(key, e)?;
    <[f64; 3]>::try_from(v.as_slice())
        .map_err(|_| err(e.line, key, "expected three comma-separated numbers"))
}

/// Parses scenario text. Unknown, duplicate or malformed keys are reported
/// with their line number.
pub fn parse_config(text: &str) -> Result<ScenarioFile> {
    let mut entries: HashMap<String, Entry> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
            line,
            message: format!("expected `key = value`, got {content:?}"),
        })?;
        let key = key.trim();
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            return Err(err(line, key, "unknown key"));
        }
        if let Some(prev) = entries.get(key) {
            return Err(err(
                line,
                key,
                format!("duplicate key, first set on line {}", prev.line),
            ));
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }
    for key in REQUIRED {
        if !entries.contains_key(key) {
            return Err(Error::MissingKey(key.to_string()));
        }
    }

    let get = |k: &str| entries.get(k);
    let mut c = ScenarioConfig::new(
        num("m_antennas", &entries["m_antennas"])?,
        num("n_irs_units", &entries["n_irs_units"])?,
        num("k_users", &entries["k_users"])?,
    );
    c.gamma_db = num("gamma_db", &entries["gamma_db"])?;
    c.sigma_sq_dbm = num("sigma_sq_dbm", &entries["sigma_sq_dbm"])?;

    macro_rules! opt_num {
        ($($field:ident),*) => {$(
            if let Some(e) = get(stringify!($field)) {
                c.$field = num(stringify!($field), e)?;
            }
        )*};
    }
    opt_num!(
        epsilon,
        candidates_c,
        max_iterations,
        mu_radius,
        antenna_spacing_bs,
        antenna_spacing_irs,
        alpha_bs_irs,
        alpha_irs_mu,
        alpha_bs_mu,
        ref_distance_m,
        ref_gain_db,
        seed,
        trials
    );
    if let Some(e) = get("bs_position") {
        c.bs_position = point("bs_position", e)?;
    }
    if let Some(e) = get("irs_position") {
        c.irs_position = point("irs_position", e)?;
    }
    if let Some(e) = get("mu_placement") {
        c.mu_placement = MuPlacement::parse(&e.value)
            .ok_or_else(|| err(e.line, "mu_placement", "expected `even` or `random`"))?;
    }
    if let Some(e) = get("bound_variant") {
        c.bound_variant = BoundVariant::parse(&e.value)
            .ok_or_else(|| err(e.line, "bound_variant", "expected `beta_h` or `beta_b`"))?;
    }
    c.validate()?;

    let sweep = match get("sweep_variable") {
        None => {
            for k in ["values", "methods"] {
                if let Some(e) = get(k) {
                    return Err(err(e.line, k, "requires `sweep_variable`"));
                }
            }
            None
        }
        Some(e) => {
            let variable = SweepVariable::parse(&e.value).ok_or_else(|| {
                err(
                    e.line,
                    "sweep_variable",
                    "expected n_irs_units, k_users or m_antennas",
                )
            })?;
            let values_entry = get("values").ok_or_else(|| Error::MissingKey("values".into()))?;
            let values: Vec<usize> = list("values", values_entry)?;
            let methods = match get("methods") {
                None => Method::ALL.to_vec(),
                Some(m) => m
                    .value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        Method::parse(s)
                            .ok_or_else(|| err(m.line, "methods", format!("unknown method {s:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let spec = SweepSpec {
                sweep_variable: variable,
                values,
                methods,
                trials: c.trials,
            };
            spec.validate().map_err(|e| match e {
                Error::InvalidConfig(msg) => err(values_entry.line, "values", msg),
                other => other,
            })?;
            Some(spec)
        }
    };

    Ok(ScenarioFile { config: c, sweep })
}

pub fn read_config(path: &Path) -> Result<ScenarioFile> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Writes a file that [`parse_config`] reads back to the same values.
pub fn format_config(config: &ScenarioConfig, sweep: Option<&SweepSpec>) -> String {
    let c = config;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        writeln!(s, "{k} = {v}").expect("writing to a String");
    };
    kv("m_antennas", c.m_antennas.to_string());
    kv("n_irs_units", c.n_irs_units.to_string());
    kv("k_users", c.k_users.to_string());
    kv("gamma_db", c.gamma_db.to_string());
    kv("sigma_sq_dbm", c.sigma_sq_dbm.to_string());
    kv("epsilon", c.epsilon.to_string());
    kv("candidates_c", c.candidates_c.to_string());
    kv("max_iterations", c.max_iterations.to_string());
    kv("bs_position", join(&c.bs_position));
    kv("irs_position", join(&c.irs_position));
    kv("mu_radius", c.mu_radius.to_string());
    kv("mu_placement", c.mu_placement.as_str().into());
    kv("antenna_spacing_bs", c.antenna_spacing_bs.to_string());
    kv("antenna_spacing_irs", c.antenna_spacing_irs.to_string());
    kv("alpha_bs_irs", c.alpha_bs_irs.to_string());
    kv("alpha_irs_mu", c.alpha_irs_mu.to_string());
    kv("alpha_bs_mu", c.alpha_bs_mu.to_string());
    kv("ref_distance_m", c.ref_distance_m.to_string());
    kv("ref_gain_db", c.ref_gain_db.to_string());
    kv("bound_variant", c.bound_variant.as_str().into());
    kv("seed", c.seed.to_string());
    kv("trials", sweep.map_or(c.trials, |s| s.trials).to_string());
    if let Some(sw) = sweep {
        kv("sweep_variable", sw.sweep_variable.as_str().into());
        kv("values", join(&sw.values));
        kv(
            "methods",
            sw.methods
                .iter()
                .map(|m| m.as_str())
                .collect::<Vec<_>>()
                .join(", "),
        );
    }
    s
}
