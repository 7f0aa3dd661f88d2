//! Analytic-vs-simulation comparison over a sweep.

use std::fmt::Write as _;

use ambc_core::mcsim::{NodeEstimates, ProbEstimate};
use ambc_core::{Node, SystemParams};
use rayon::prelude::*;
use thiserror::Error;

use crate::sweep::{format_prob, simulate_cell, Evaluator, SweepSpec};

pub const MIN_TRIALS: u64 = 100_000;
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("verification needs at least {MIN_TRIALS} trials, got {0}")]
    TooFewTrials(u64),
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Unresolved,
}

impl Status {
    pub fn tag(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub series: Option<f64>,
    pub x: f64,
    pub metric: String,
    pub analytic: Option<f64>,
    pub mc: Option<ProbEstimate>,
    pub z: Option<f64>,
    pub status: Status,
    pub note: Option<String>,
}

impl Check {
    fn new(
        series: Option<f64>,
        x: f64,
        metric: String,
        analytic: ambc_core::Result<f64>,
        mc: ambc_core::Result<ProbEstimate>,
    ) -> Self {
        let mut c = Check {
            series,
            x,
            metric,
            analytic: None,
            mc: None,
            z: None,
            status: Status::Fail,
            note: None,
        };
        match (analytic, mc) {
            (Err(e), _) | (_, Err(e)) => c.note = Some(e.to_string()),
            (Ok(a), Ok(est)) => {
                c.analytic = Some(a);
                c.mc = Some(est);
                if est.is_unresolved() {
                    c.status = Status::Unresolved;
                } else {
                    let z = est.z_score(a);
                    c.z = Some(z);
                    c.status = if z.abs() <= Z_LIMIT {
                        Status::Pass
                    } else {
                        Status::Fail
                    };
                }
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub axis: &'static str,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    /// Resolved checks within `limit` standard errors.
    pub fn fraction_within(&self, limit: f64) -> f64 {
        let z: Vec<f64> = self.checks.iter().filter_map(|c| c.z).collect();
        if z.is_empty() {
            return 1.0;
        }
        z.iter().filter(|z| z.abs() <= limit).count() as f64 / z.len() as f64
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let unresolved = self
            .checks
            .iter()
            .filter(|c| c.status == Status::Unresolved)
            .count();
        let _ = writeln!(
            out,
            "# verify: {} checks, {} failed, {} unresolved, pass iff |z| <= {Z_LIMIT}",
            self.checks.len(),
            self.failures(),
            unresolved
        );
        for c in &self.checks {
            if let Some(n) = &c.note {
                let _ = writeln!(
                    out,
                    "# diagnostic: {} at {}={}: {n}",
                    c.metric, self.axis, c.x
                );
            }
        }
        let _ = writeln!(
            out,
            "{},series,metric,analytic,mc,mc_se,z,status",
            self.axis
        );
        for c in &self.checks {
            let series = c.series.map_or("NA".to_string(), |s| s.to_string());
            let z = c.z.map_or("NA".to_string(), |z| format!("{z:.3}"));
            let _ = writeln!(
                out,
                "{},{series},{},{},{},{},{z},{}",
                c.x,
                c.metric,
                format_prob(c.analytic),
                format_prob(c.mc.map(|m| m.p_hat)),
                format_prob(c.mc.map(|m| m.stderr)),
                c.status.tag()
            );
        }
        out
    }
}

fn pick(
    est: &Option<ambc_core::Result<NodeEstimates>>,
    who: Node,
) -> ambc_core::Result<ProbEstimate> {
    match est {
        Some(Ok(e)) => Ok(e.get(who)),
        Some(Err(e)) => Err(e.clone()),
        None => unreachable!("simulation requested for every checked metric"),
    }
}

/// Compares every requested OP and IP against its Monte Carlo estimate.
/// Simulation seeds match those of a sweep with the same spec.
pub fn verify(
    base: &SystemParams,
    spec: &SweepSpec,
    eval: &dyn Evaluator,
) -> Result<Report, VerifyError> {
    if spec.mc_trials < MIN_TRIALS {
        return Err(VerifyError::TooFewTrials(spec.mc_trials));
    }
    spec.validate(base).map_err(VerifyError::Sweep)?;
    let series: Vec<Option<f64>> = match &spec.series {
        Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let (op_nodes, ip_nodes) = (spec.op_nodes(), spec.ip_nodes());
    let cells: Vec<(usize, usize)> = (0..spec.points.len())
        .flat_map(|pi| (0..series.len()).map(move |si| (pi, si)))
        .collect();
    let checks = cells
        .par_iter()
        .flat_map_iter(|&(pi, si)| {
            let (x, s) = (spec.points[pi], series[si]);
            let p = spec.params_at(base, s, x);
            let sims = simulate_cell(
                spec,
                &p,
                [si as u64, pi as u64],
                !op_nodes.is_empty(),
                !ip_nodes.is_empty(),
                false,
            );
            let mut out = Vec::new();
            for &who in &op_nodes {
                for (mi, m) in spec.modes.iter().enumerate() {
                    let pm = m.apply(&p);
                    let metric = format!("op_{}_{}", who.tag(), m.tag());
                    out.push(Check::new(
                        s,
                        x,
                        metric,
                        eval.op(&pm, who, m.sic()),
                        pick(&sims.op[mi], who),
                    ));
                }
            }
            for &who in &ip_nodes {
                out.push(Check::new(
                    s,
                    x,
                    format!("ip_{}", who.tag()),
                    eval.ip(&p, who),
                    pick(&sims.ip, who),
                ));
            }
            out
        })
        .collect();
    Ok(Report {
        axis: spec.axis.name(),
        checks,
    })
}
