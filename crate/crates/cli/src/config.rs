//! `key = value` configuration documents.
//!
//! One assignment per line, `#` starts a comment. Unspecified keys keep the
//! reference parameter set. Every error carries the 1-based line number of
//! the offending assignment.

use std::collections::HashMap;

use ambc_core::cascade::CascadeChannel;
use ambc_core::{EveEnsemble, SystemParams};
use thiserror::Error;

use crate::sweep::{Axis, Mode, Output, Series, Spacing, SweepSpec};

pub const DEFAULT_PHI_ORDER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            message: message.into(),
        }
    }
}

/// Quadrature orders used by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Numerics {
    pub phi_order: usize,
    pub laguerre_order: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            phi_order: DEFAULT_PHI_ORDER,
            laguerre_order: ambc_core::secrecy::DEFAULT_LAGUERRE_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: SystemParams,
    pub sweep: SweepSpec,
    pub numerics: Numerics,
}

impl Default for Config {
    fn default() -> Self {
        let params = SystemParams::default();
        Config {
            sweep: SweepSpec::single_point(&params),
            params,
            numerics: Numerics::default(),
        }
    }
}

fn number(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigError::new(
            line,
            format!("{key}: malformed number '{value}'"),
        )),
    }
}

fn integer<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| ConfigError::new(line, format!("{key}: malformed integer '{value}'")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn numbers(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    list(value).map(|v| number(line, key, v)).collect()
}

/// Sweep keys are collected first and resolved once the whole document is read.
#[derive(Default)]
struct SweepKeys {
    values: HashMap<&'static str, (usize, String)>,
}

const SWEEP_KEYS: [&str; 12] = [
    "axis",
    "points",
    "start",
    "stop",
    "step",
    "count",
    "spacing",
    "series_axis",
    "series",
    "modes",
    "outputs",
    "trials",
];

impl SweepKeys {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.values.get(key).map(|(l, v)| (*l, v.as_str()))
    }
}

fn set_param(p: &mut SystemParams, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
    let v = || number(line, key, value);
    let cascade = |l1t: f64, l2t: f64, ltb: f64| {
        CascadeChannel::new(l1t, l2t, ltb).map_err(|e| ConfigError::new(line, e.to_string()))
    };
    match key {
        "lambda_1" => p.lambda_1 = v()?,
        "lambda_2" => p.lambda_2 = v()?,
        "lambda_1t" => p.cascade = cascade(v()?, p.cascade.lambda_2t(), p.cascade.lambda_tb())?,
        "lambda_2t" => p.cascade = cascade(p.cascade.lambda_1t(), v()?, p.cascade.lambda_tb())?,
        "lambda_tb" => p.cascade = cascade(p.cascade.lambda_1t(), p.cascade.lambda_2t(), v()?)?,
        "rho_db" => *p = p.clone().with_rho_db(v()?),
        "eta" => p.eta = v()?,
        "a1" => p.a1 = v()?,
        "k" => *p = p.clone().with_k(v()?),
        "k1" => p.k1 = v()?,
        "k2" => p.k2 = v()?,
        "r1" => p.r1 = v()?,
        "r2" => p.r2 = v()?,
        "rt" => p.rt = v()?,
        "u1_int" => p.u1_int = v()?,
        "u2_int" => p.u2_int = v()?,
        "ut_int" => p.ut_int = v()?,
        "m" => {
            let m: usize = integer(line, key, value)?;
            let e = &p.eves;
            let pick = |l: &[f64], d: f64| l.first().copied().unwrap_or(d);
            p.eves = EveEnsemble::homogeneous(
                m,
                pick(&e.lambda_1j, 0.15),
                pick(&e.lambda_2j, 0.15),
                pick(&e.lambda_tj, 0.1),
            );
        }
        "lambda_ij" => {
            let x = v()?;
            p.eves.lambda_1j.fill(x);
            p.eves.lambda_2j.fill(x);
        }
        "lambda_1j" => p.eves.lambda_1j.fill(v()?),
        "lambda_2j" => p.eves.lambda_2j.fill(v()?),
        "lambda_tj" => p.eves.lambda_tj.fill(v()?),
        "rho" => {
            return Err(ConfigError::new(
                line,
                "rho is given in dB only, use rho_db",
            ))
        }
        _ => return Err(ConfigError::new(line, format!("unknown key '{key}'"))),
    }
    p.validate()
        .map_err(|e| ConfigError::new(line, e.to_string()))
}

/// Parses a configuration document into parameters, a sweep and quadrature orders.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut params = SystemParams::default();
    let mut numerics = Numerics::default();
    let mut seed = 0u64;
    let mut sweep = SweepKeys::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::new(
                line,
                format!("expected key = value, got '{body}'"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if let Some(&k) = SWEEP_KEYS.iter().find(|&&k| k == key) {
            sweep.values.insert(k, (line, value.to_string()));
            continue;
        }
        match key {
            "seed" => seed = integer(line, key, value)?,
            "phi_order" => numerics.phi_order = positive_order(line, key, value)?,
            "laguerre_order" => numerics.laguerre_order = positive_order(line, key, value)?,
            _ => set_param(&mut params, line, key, value)?,
        }
    }
    let mut spec = resolve_sweep(&sweep, &params)?;
    spec.seed = seed;
    Ok(Config {
        params,
        sweep: spec,
        numerics,
    })
}

fn positive_order(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    let n: usize = integer(line, key, value)?;
    if n == 0 {
        return Err(ConfigError::new(line, format!("{key} must be at least 1")));
    }
    Ok(n)
}

fn resolve_sweep(keys: &SweepKeys, params: &SystemParams) -> Result<SweepSpec, ConfigError> {
    let mut spec = SweepSpec::single_point(params);
    if let Some((line, v)) = keys.get("axis") {
        spec.axis = v.parse::<Axis>().map_err(|e| ConfigError::new(line, e))?;
        spec.points = vec![crate::sweep::tidy(spec.axis.get(params))];
    }
    let spacing = match keys.get("spacing") {
        Some((line, v)) => v
            .parse::<Spacing>()
            .map_err(|e| ConfigError::new(line, e))?,
        None => Spacing::Linear,
    };
    if let Some((line, v)) = keys.get("points") {
        spec.points = numbers(line, "points", v)?;
        if spec.points.is_empty() {
            return Err(ConfigError::new(line, "points: empty list"));
        }
    } else if let Some((line, start)) = keys.get("start") {
        let start = number(line, "start", start)?;
        let Some((stop_line, stop)) = keys.get("stop") else {
            return Err(ConfigError::new(line, "start given without stop"));
        };
        let stop = number(stop_line, "stop", stop)?;
        spec.points = match (keys.get("step"), keys.get("count")) {
            (Some((l, step)), None) => {
                let step = number(l, "step", step)?;
                crate::sweep::stepped(start, stop, step).map_err(|e| ConfigError::new(l, e))?
            }
            (None, Some((l, count))) => {
                let count: usize = integer(l, "count", count)?;
                crate::sweep::spaced(start, stop, count, spacing)
                    .map_err(|e| ConfigError::new(l, e))?
            }
            _ => return Err(ConfigError::new(line, "give exactly one of step or count")),
        };
    }
    if let Some((line, v)) = keys.get("series_axis") {
        let axis = v.parse::<Axis>().map_err(|e| ConfigError::new(line, e))?;
        let Some((vline, values)) = keys.get("series") else {
            return Err(ConfigError::new(line, "series_axis given without series"));
        };
        let values = numbers(vline, "series", values)?;
        if values.is_empty() {
            return Err(ConfigError::new(vline, "series: empty list"));
        }
        spec.series = Some(Series { axis, values });
    }
    if let Some((line, v)) = keys.get("modes") {
        spec.modes = list(v)
            .map(|m| m.parse::<Mode>())
            .collect::<Result<_, _>>()
            .map_err(|e| ConfigError::new(line, e))?;
    }
    if let Some((line, v)) = keys.get("outputs") {
        spec.outputs = list(v)
            .map(|m| m.parse::<Output>())
            .collect::<Result<_, _>>()
            .map_err(|e| ConfigError::new(line, e))?;
    }
    if let Some((line, v)) = keys.get("trials") {
        spec.mc_trials = integer(line, "trials", v)?;
    }
    let line = ["points", "start", "axis", "series", "modes", "outputs"]
        .iter()
        .find_map(|k| keys.get(k).map(|(l, _)| l))
        .unwrap_or(0);
    spec.validate(params)
        .map_err(|e| ConfigError::new(line, e))?;
    Ok(spec)
}
