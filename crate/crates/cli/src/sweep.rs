//! Parameter sweeps: analytic and simulated columns over one swept axis.

use std::fmt::Write as _;
use std::str::FromStr;

use ambc_core::cascade::PhiConfig;
use ambc_core::mcsim::{
    estimate_ip, estimate_oma_baseline, estimate_op, McConfig, NodeEstimates, GENERATOR,
};
use ambc_core::specfun::{laguerre_rule, LaguerreRule};
use ambc_core::{outage, secrecy, Node, SicMode, SystemParams};
use rayon::prelude::*;

use crate::config::Numerics;

/// The swept (or series) parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    RhoDb,
    Eta,
    A1,
    K,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::RhoDb => "rho_db",
            Axis::Eta => "eta",
            Axis::A1 => "a1",
            Axis::K => "k",
        }
    }

    pub fn get(self, p: &SystemParams) -> f64 {
        match self {
            Axis::RhoDb => p.rho_db(),
            Axis::Eta => p.eta,
            Axis::A1 => p.a1,
            Axis::K => p.k1,
        }
    }

    pub fn apply(self, p: &SystemParams, v: f64) -> SystemParams {
        let p = p.clone();
        match self {
            Axis::RhoDb => p.with_rho_db(v),
            Axis::Eta => SystemParams { eta: v, ..p },
            Axis::A1 => SystemParams { a1: v, ..p },
            Axis::K => p.with_k(v),
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rho_db" => Ok(Axis::RhoDb),
            "eta" => Ok(Axis::Eta),
            "a1" => Ok(Axis::A1),
            "k" => Ok(Axis::K),
            _ => Err(format!(
                "unknown axis '{s}' (expected rho_db, eta, a1 or k)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl FromStr for Spacing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            _ => Err(format!("unknown spacing '{s}' (expected linear or log)")),
        }
    }
}

/// Rounds to 12 significant digits so that stepped grids print cleanly.
pub(crate) fn tidy(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// `start, start + step, ...` up to `stop` inclusive.
pub fn stepped(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(format!(
            "need step > 0 and stop >= start, got {start}..{stop} step {step}"
        ));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| tidy(start + i as f64 * step)).collect())
}

/// `count` points from `start` to `stop`, linearly or geometrically spaced.
pub fn spaced(start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>, String> {
    if count == 0 {
        return Err("count must be at least 1".into());
    }
    if spacing == Spacing::Log && !(start > 0.0 && stop > 0.0) {
        return Err("log spacing needs positive bounds".into());
    }
    let frac = |i: usize| {
        if count == 1 {
            0.0
        } else {
            i as f64 / (count - 1) as f64
        }
    };
    Ok((0..count)
        .map(|i| match spacing {
            Spacing::Linear => tidy(start + (stop - start) * frac(i)),
            Spacing::Log => tidy((start.ln() + (stop.ln() - start.ln()) * frac(i)).exp()),
        })
        .collect())
}

/// SIC mode of an outage column. `Imperfect(None)` keeps the configured
/// (or swept) residual factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Perfect,
    Imperfect(Option<f64>),
}

impl Mode {
    pub fn tag(self) -> String {
        match self {
            Mode::Perfect => "psic".into(),
            Mode::Imperfect(None) => "ipsic".into(),
            Mode::Imperfect(Some(k)) => format!("ipsic_k{k}"),
        }
    }

    pub fn sic(self) -> SicMode {
        match self {
            Mode::Perfect => SicMode::Perfect,
            Mode::Imperfect(_) => SicMode::Imperfect,
        }
    }

    pub fn apply(self, p: &SystemParams) -> SystemParams {
        match self {
            Mode::Imperfect(Some(k)) => p.clone().with_k(k),
            _ => p.clone(),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "psic" => Ok(Mode::Perfect),
            None if s == "ipsic" => Ok(Mode::Imperfect(None)),
            Some(("ipsic", k)) => match k.trim().parse::<f64>() {
                Ok(k) if (0.0..=1.0).contains(&k) => Ok(Mode::Imperfect(Some(k))),
                _ => Err(format!("ipsic residual '{k}' must be a number in [0, 1]")),
            },
            _ => Err(format!(
                "unknown mode '{s}' (expected psic, ipsic or ipsic:<k>)"
            )),
        }
    }
}

/// A requested output family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    OpU2,
    OpU1,
    OpBd,
    IpU2,
    IpU1,
    IpBd,
    Floors,
    Asymptotes,
    Mc,
    Oma,
}

impl Output {
    pub const ALL: [Output; 10] = [
        Output::OpU2,
        Output::OpU1,
        Output::OpBd,
        Output::IpU2,
        Output::IpU1,
        Output::IpBd,
        Output::Floors,
        Output::Asymptotes,
        Output::Mc,
        Output::Oma,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Output::OpU2 => "op_u2",
            Output::OpU1 => "op_u1",
            Output::OpBd => "op_bd",
            Output::IpU2 => "ip_u2",
            Output::IpU1 => "ip_u1",
            Output::IpBd => "ip_bd",
            Output::Floors => "floors",
            Output::Asymptotes => "asymptotes",
            Output::Mc => "mc",
            Output::Oma => "oma",
        }
    }
}

impl FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Output::ALL
            .into_iter()
            .find(|o| o.tag() == s)
            .ok_or_else(|| format!("unknown output '{s}'"))
    }
}

/// A second parameter held at several values, one column group each.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub points: Vec<f64>,
    pub series: Option<Series>,
    pub modes: Vec<Mode>,
    pub outputs: Vec<Output>,
    pub mc_trials: u64,
    pub seed: u64,
}

pub const DEFAULT_TRIALS: u64 = 1_000_000;

impl SweepSpec {
    /// All closed forms at the configured SNR, both SIC modes.
    pub fn single_point(p: &SystemParams) -> Self {
        SweepSpec {
            axis: Axis::RhoDb,
            points: vec![tidy(p.rho_db())],
            series: None,
            modes: vec![Mode::Perfect, Mode::Imperfect(None)],
            outputs: vec![
                Output::OpU2,
                Output::OpU1,
                Output::OpBd,
                Output::IpU2,
                Output::IpU1,
                Output::IpBd,
            ],
            mc_trials: DEFAULT_TRIALS,
            seed: 0,
        }
    }

    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }

    pub fn op_nodes(&self) -> Vec<Node> {
        let req = [
            (Node::U2, Output::OpU2),
            (Node::U1, Output::OpU1),
            (Node::Bd, Output::OpBd),
        ];
        req.into_iter()
            .filter(|(_, o)| self.wants(*o))
            .map(|(n, _)| n)
            .collect()
    }

    pub fn ip_nodes(&self) -> Vec<Node> {
        let req = [
            (Node::U2, Output::IpU2),
            (Node::U1, Output::IpU1),
            (Node::Bd, Output::IpBd),
        ];
        req.into_iter()
            .filter(|(_, o)| self.wants(*o))
            .map(|(n, _)| n)
            .collect()
    }

    fn series_values(&self) -> Vec<Option<f64>> {
        match &self.series {
            Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }

    /// Parameters at one (series value, axis point) cell.
    pub fn params_at(&self, base: &SystemParams, series: Option<f64>, x: f64) -> SystemParams {
        let p = match (&self.series, series) {
            (Some(s), Some(v)) => s.axis.apply(base, v),
            _ => base.clone(),
        };
        self.axis.apply(&p, x)
    }

    pub fn validate(&self, base: &SystemParams) -> Result<(), String> {
        if self.points.is_empty() {
            return Err("the sweep has no points".into());
        }
        if self.outputs.is_empty() {
            return Err("no outputs requested".into());
        }
        if !self.op_nodes().is_empty() && self.modes.is_empty() {
            return Err("outage outputs need at least one mode".into());
        }
        let k_swept =
            self.axis == Axis::K || self.series.as_ref().is_some_and(|s| s.axis == Axis::K);
        if k_swept
            && self
                .modes
                .iter()
                .any(|m| matches!(m, Mode::Imperfect(Some(_))))
        {
            return Err("k is swept, so ipSIC modes must not fix their own k".into());
        }
        if let Some(s) = &self.series {
            if s.axis == self.axis {
                return Err("series and sweep axis must differ".into());
            }
        }
        if (self.wants(Output::Mc) || self.wants(Output::Oma)) && self.mc_trials == 0 {
            return Err("Monte Carlo outputs need trials >= 1".into());
        }
        for s in self.series_values() {
            for &x in &self.points {
                let p = self.params_at(base, s, x);
                p.validate()
                    .map_err(|e| format!("{} = {x}: {e}", self.axis.name()))?;
                for m in &self.modes {
                    m.apply(&p).validate().map_err(|e| e.to_string())?;
                }
            }
        }
        Ok(())
    }
}

/// Closed-form backend, swappable for verification fixtures.
pub trait Evaluator: Sync {
    fn op(&self, p: &SystemParams, who: Node, mode: SicMode) -> ambc_core::Result<f64>;
    fn op_floor(&self, p: &SystemParams, who: Node, mode: SicMode) -> ambc_core::Result<f64>;
    fn ip(&self, p: &SystemParams, who: Node) -> ambc_core::Result<f64>;
    fn ip_asymptote(&self, p: &SystemParams, who: Node) -> ambc_core::Result<f64>;
}

pub struct ClosedForm {
    phi: PhiConfig,
    rule: LaguerreRule,
}

impl ClosedForm {
    pub fn new(n: Numerics) -> ambc_core::Result<Self> {
        Ok(ClosedForm {
            phi: PhiConfig::with_order(n.phi_order)?,
            rule: laguerre_rule(n.laguerre_order)?,
        })
    }
}

impl Evaluator for ClosedForm {
    fn op(&self, p: &SystemParams, who: Node, mode: SicMode) -> ambc_core::Result<f64> {
        outage::op(p, who, mode, &self.phi)
    }

    fn op_floor(&self, p: &SystemParams, who: Node, mode: SicMode) -> ambc_core::Result<f64> {
        outage::op_floor(p, who, mode, &self.phi)
    }

    fn ip(&self, p: &SystemParams, who: Node) -> ambc_core::Result<f64> {
        secrecy::ip(p, who, &self.rule)
    }

    fn ip_asymptote(&self, p: &SystemParams, who: Node) -> ambc_core::Result<f64> {
        secrecy::ip_asymptote(p, who, &self.rule)
    }
}

/// Seed for one Monte Carlo run, mixed from the master seed and its cell
/// coordinates (SplitMix64 finalizer).
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(master, |acc, &c| {
        let mut z = acc
            ^ c.wrapping_add(0x9e37_79b9_7f4a_7c15)
                .wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

const KIND_OP: u64 = 0;
const KIND_IP: u64 = 1;
const KIND_OMA: u64 = 2;

/// Simulated estimates for one cell, as requested by the spec.
pub(crate) struct CellSims {
    pub op: Vec<Option<ambc_core::Result<NodeEstimates>>>,
    pub ip: Option<ambc_core::Result<NodeEstimates>>,
    pub oma: Option<ambc_core::Result<NodeEstimates>>,
}

pub(crate) fn simulate_cell(
    spec: &SweepSpec,
    p: &SystemParams,
    coords: [u64; 2],
    op: bool,
    ip: bool,
    oma: bool,
) -> CellSims {
    let cfg = |kind: u64, extra: u64| {
        McConfig::new(
            spec.mc_trials,
            derive_seed(spec.seed, &[coords[0], coords[1], kind, extra]),
        )
    };
    CellSims {
        op: spec
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| op.then(|| estimate_op(&m.apply(p), m.sic(), &cfg(KIND_OP, i as u64))))
            .collect(),
        ip: ip.then(|| estimate_ip(p, &cfg(KIND_IP, 0))),
        oma: oma.then(|| estimate_oma_baseline(p, &cfg(KIND_OMA, 0))),
    }
}

/// One evaluated sweep: a fixed column set and one row per axis point.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub axis: Axis,
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<Option<f64>>)>,
    pub diagnostics: Vec<String>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, r)| r[i]).collect())
    }

    pub fn axis_values(&self) -> Vec<f64> {
        self.rows.iter().map(|(x, _)| *x).collect()
    }
}

struct RowBuilder<'a> {
    names: std::slice::Iter<'a, String>,
    cells: Vec<Option<f64>>,
    diags: Vec<String>,
    axis: &'static str,
    x: f64,
}

impl RowBuilder<'_> {
    /// `Ok(None)` is an unresolved estimate: NA without a diagnostic.
    fn push(&mut self, v: ambc_core::Result<Option<f64>>) {
        let name = self
            .names
            .next()
            .expect("column plan matches evaluation order");
        match v {
            Ok(v) => self.cells.push(v),
            Err(e) => {
                self.diags
                    .push(format!("{name} at {}={}: {e}", self.axis, self.x));
                self.cells.push(None);
            }
        }
    }

    /// Estimate and standard error columns.
    fn push_mc(&mut self, est: &ambc_core::Result<NodeEstimates>, who: Node) {
        match est {
            Ok(e) => {
                let pe = e.get(who);
                let resolved = !pe.is_unresolved();
                self.push(Ok(resolved.then_some(pe.p_hat)));
                self.push(Ok(resolved.then_some(pe.stderr)));
            }
            Err(e) => {
                self.push(Err(e.clone()));
                self.push(Err(e.clone()));
            }
        }
    }
}

fn suffix(spec: &SweepSpec, s: Option<f64>) -> String {
    match (&spec.series, s) {
        (Some(ser), Some(v)) => format!("_{}_{v}", ser.axis.name()),
        _ => String::new(),
    }
}

/// Evaluates every requested column at every point, in parallel over points.
pub fn evaluate(base: &SystemParams, spec: &SweepSpec, eval: &dyn Evaluator) -> Table {
    let series = spec.series_values();
    let mc = spec.wants(Output::Mc);
    let oma = spec.wants(Output::Oma);
    let op_nodes = spec.op_nodes();
    let ip_nodes = spec.ip_nodes();
    let oma_nodes = if op_nodes.is_empty() {
        Node::ALL.to_vec()
    } else {
        op_nodes.clone()
    };

    let mut columns = Vec::new();
    for &s in &series {
        let sfx = suffix(spec, s);
        for &who in &op_nodes {
            for m in &spec.modes {
                let base = format!("{}_{}{sfx}", who.tag(), m.tag());
                columns.push(format!("op_{base}"));
                if spec.wants(Output::Floors) {
                    columns.push(format!("floor_{base}"));
                }
                if mc {
                    columns.push(format!("mc_op_{base}"));
                    columns.push(format!("mc_op_{base}_se"));
                }
            }
        }
        if oma {
            for &who in &oma_nodes {
                columns.push(format!("oma_{}{sfx}", who.tag()));
                columns.push(format!("oma_{}{sfx}_se", who.tag()));
            }
        }
        for &who in &ip_nodes {
            columns.push(format!("ip_{}{sfx}", who.tag()));
            if spec.wants(Output::Asymptotes) {
                columns.push(format!("asym_{}{sfx}", who.tag()));
            }
            if mc {
                columns.push(format!("mc_ip_{}{sfx}", who.tag()));
                columns.push(format!("mc_ip_{}{sfx}_se", who.tag()));
            }
        }
    }

    let results: Vec<(Vec<Option<f64>>, Vec<String>)> = spec
        .points
        .par_iter()
        .enumerate()
        .map(|(pi, &x)| {
            let mut row = RowBuilder {
                names: columns.iter(),
                cells: Vec::with_capacity(columns.len()),
                diags: Vec::new(),
                axis: spec.axis.name(),
                x,
            };
            for (si, &s) in series.iter().enumerate() {
                let p = spec.params_at(base, s, x);
                let sims = simulate_cell(
                    spec,
                    &p,
                    [si as u64, pi as u64],
                    mc && !op_nodes.is_empty(),
                    mc && !ip_nodes.is_empty(),
                    oma,
                );
                for &who in &op_nodes {
                    for (mi, m) in spec.modes.iter().enumerate() {
                        let pm = m.apply(&p);
                        row.push(eval.op(&pm, who, m.sic()).map(Some));
                        if spec.wants(Output::Floors) {
                            row.push(eval.op_floor(&pm, who, m.sic()).map(Some));
                        }
                        if let Some(Some(est)) = sims.op.get(mi) {
                            row.push_mc(est, who);
                        }
                    }
                }
                if let Some(est) = &sims.oma {
                    for &who in &oma_nodes {
                        row.push_mc(est, who);
                    }
                }
                for &who in &ip_nodes {
                    row.push(eval.ip(&p, who).map(Some));
                    if spec.wants(Output::Asymptotes) {
                        row.push(eval.ip_asymptote(&p, who).map(Some));
                    }
                    if let Some(est) = &sims.ip {
                        row.push_mc(est, who);
                    }
                }
            }
            (row.cells, row.diags)
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    let mut diagnostics = Vec::new();
    for (&x, (cells, diags)) in spec.points.iter().zip(results) {
        rows.push((x, cells));
        diagnostics.extend(diags);
    }
    Table {
        axis: spec.axis,
        columns,
        rows,
        diagnostics,
    }
}

/// `# key = value` lines for every fixed parameter.
pub fn params_metadata(p: &SystemParams) -> Vec<String> {
    let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    vec![
        format!("lambda_1 = {}", p.lambda_1),
        format!("lambda_2 = {}", p.lambda_2),
        format!("lambda_1t = {}", p.cascade.lambda_1t()),
        format!("lambda_2t = {}", p.cascade.lambda_2t()),
        format!("lambda_tb = {}", p.cascade.lambda_tb()),
        format!("rho_db = {}", tidy(p.rho_db())),
        format!("eta = {}", p.eta),
        format!("a1 = {}", p.a1),
        format!("k1 = {}", p.k1),
        format!("k2 = {}", p.k2),
        format!("r1 = {}", p.r1),
        format!("r2 = {}", p.r2),
        format!("rt = {}", p.rt),
        format!("m = {}", p.eves.m()),
        format!("lambda_1j = {}", list(&p.eves.lambda_1j)),
        format!("lambda_2j = {}", list(&p.eves.lambda_2j)),
        format!("lambda_tj = {}", list(&p.eves.lambda_tj)),
        format!("u1_int = {}", p.u1_int),
        format!("u2_int = {}", p.u2_int),
        format!("ut_int = {}", p.ut_int),
    ]
}

pub fn format_prob(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.12e}"),
        None => "NA".into(),
    }
}

/// Renders the table with its metadata preamble. Worker counts are not
/// recorded, so output is identical for any pool size.
pub fn render_csv(
    base: &SystemParams,
    spec: &SweepSpec,
    numerics: &Numerics,
    table: &Table,
) -> String {
    let mut out = String::new();
    let mut meta = |line: String| {
        let _ = writeln!(out, "# {line}");
    };
    meta(format!("ambc {}", env!("CARGO_PKG_VERSION")));
    meta(format!("axis = {}", spec.axis.name()));
    if let Some(s) = &spec.series {
        let vals: Vec<String> = s.values.iter().map(f64::to_string).collect();
        meta(format!("series = {} {}", s.axis.name(), vals.join(" ")));
    }
    let modes: Vec<String> = spec.modes.iter().map(|m| m.tag()).collect();
    meta(format!("modes = {}", modes.join(" ")));
    meta(format!("phi_order = {}", numerics.phi_order));
    meta(format!("laguerre_order = {}", numerics.laguerre_order));
    if spec.wants(Output::Mc) || spec.wants(Output::Oma) {
        meta(format!("seed = {}", spec.seed));
        meta(format!("mc_trials = {}", spec.mc_trials));
        meta(format!("generator = {GENERATOR}"));
    }
    for line in params_metadata(base) {
        meta(line);
    }
    meta(format!(
        "units: {} in {}; every other column is a dimensionless probability",
        spec.axis.name(),
        if spec.axis == Axis::RhoDb {
            "dB"
        } else {
            "linear units"
        }
    ));
    meta("NA marks a failed evaluation or an unresolved Monte Carlo estimate".into());
    for d in &table.diagnostics {
        meta(format!("diagnostic: {d}"));
    }
    out.push_str(table.axis.name());
    for c in &table.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (x, cells) in &table.rows {
        let _ = write!(out, "{x}");
        for c in cells {
            out.push(',');
            out.push_str(&format_prob(*c));
        }
        out.push('\n');
    }
    out
}

/// Evaluates and renders in one step.
pub fn run_sweep(
    base: &SystemParams,
    spec: &SweepSpec,
    numerics: &Numerics,
    eval: &dyn Evaluator,
) -> String {
    render_csv(base, spec, numerics, &evaluate(base, spec, eval))
}
