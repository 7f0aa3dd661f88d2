//! Monte Carlo ground truth on channel powers.
//!
//! Trials are grouped in fixed blocks of [`BLOCK_TRIALS`]; block `b` draws
//! from a ChaCha8 stream seeded with the master seed and stream id `b`.
//! Counts are integers summed over blocks, so an estimate depends only on
//! `(seed, trials)` and never on how blocks are scheduled across workers.

use crate::error::{Error, Result};
use crate::params::{EpsilonBranch, SicMode, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

pub const BLOCK_TRIALS: u64 = 65_536;

/// Recorded in every output that carries Monte Carlo numbers.
pub const GENERATOR: &str = "ChaCha8Rng(rand_chacha 0.9), stream=block index, 65536 trials/block";

/// One draw of every squared channel magnitude plus the jammer coin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelRealization {
    pub g1: f64,
    pub g2: f64,
    pub g1t: f64,
    pub g2t: f64,
    pub gtb: f64,
    pub g1j: Vec<f64>,
    pub g2j: Vec<f64>,
    pub gtj: Vec<f64>,
    pub epsilon: u8,
}

fn exp_draw<R: Rng>(rng: &mut R, mean: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e * mean
}

impl ChannelRealization {
    pub fn sample<R: Rng>(rng: &mut R, p: &SystemParams) -> Self {
        let mut r = ChannelRealization::default();
        r.redraw(rng, p, true);
        r
    }

    /// Refreshes the realization in place; eve lists are left untouched
    /// unless `eves` is set.
    pub fn redraw<R: Rng>(&mut self, rng: &mut R, p: &SystemParams, eves: bool) {
        self.g1 = exp_draw(rng, p.lambda_1);
        self.g2 = exp_draw(rng, p.lambda_2);
        self.g1t = exp_draw(rng, p.cascade.lambda_1t());
        self.g2t = exp_draw(rng, p.cascade.lambda_2t());
        self.gtb = exp_draw(rng, p.cascade.lambda_tb());
        self.epsilon = u8::from(rng.random::<bool>());
        if eves {
            let e = &p.eves;
            let fill = |rng: &mut R, out: &mut Vec<f64>, means: &[f64]| {
                out.clear();
                out.extend(means.iter().map(|&m| exp_draw(rng, m)));
            };
            fill(rng, &mut self.g1j, &e.lambda_1j);
            fill(rng, &mut self.g2j, &e.lambda_2j);
            fill(rng, &mut self.gtj, &e.lambda_tj);
        }
    }

    fn branch(&self, a1: f64) -> EpsilonBranch {
        EpsilonBranch::new(self.epsilon, a1).expect("coin is 0 or 1")
    }
}

/// `(gamma_x2, gamma_x1, gamma_xt)` at the base station.
pub fn sinr_bs(r: &ChannelRealization, p: &SystemParams) -> (f64, f64, f64) {
    let br = r.branch(p.a1);
    let (a, b, rho) = (br.a(), br.b(), p.rho);
    let backscatter = p.eta * rho * r.gtb * (r.g2t + r.g1t);
    let x2 = a * rho * r.g2;
    let x1 = b * rho * r.g1;
    (
        x2 / (x1 + backscatter + 1.0),
        x1 / (backscatter + p.k2 * x2 + 1.0),
        backscatter / (p.k1 * x1 + p.k2 * x2 + 1.0),
    )
}

/// Per-eve `(gamma_2j, gamma_1j, gamma_tj)`; the jammer's eve link sets the
/// noise floor.
pub fn sinr_eves(r: &ChannelRealization, p: &SystemParams) -> Vec<(f64, f64, f64)> {
    let br = r.branch(p.a1);
    let (a, b, rho) = (br.a(), br.b(), p.rho);
    let w = r.g1t + r.g2t;
    let jammer = if r.epsilon == 0 { &r.g1j } else { &r.g2j };
    (0..r.gtj.len())
        .map(|j| {
            let noise = p.a2() * rho * jammer[j] + 1.0;
            (
                a * rho * r.g2j[j] / noise,
                b * rho * r.g1j[j] / noise,
                p.eta * rho * r.gtj[j] * w / noise,
            )
        })
        .collect()
}

/// Sampling budget and seed. `workers = 0` uses the ambient rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        McConfig {
            trials,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Empirical probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
    pub ci95: (f64, f64),
}

impl ProbEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p_hat = hits as f64 / n;
        let stderr = (p_hat * (1.0 - p_hat) / n).sqrt();
        ProbEstimate {
            p_hat,
            stderr,
            trials,
            ci95: (p_hat - 1.96 * stderr, p_hat + 1.96 * stderr),
        }
    }

    /// Fewer than ten events (or non-events) observed.
    pub fn is_unresolved(&self) -> bool {
        let n = self.trials as f64;
        self.p_hat.min(1.0 - self.p_hat) < 10.0 / n
    }

    /// `(analytic - p_hat) / stderr`.
    pub fn z_score(&self, analytic: f64) -> f64 {
        (analytic - self.p_hat) / self.stderr
    }
}

/// One estimate per legitimate node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeEstimates {
    pub u2: ProbEstimate,
    pub u1: ProbEstimate,
    pub bd: ProbEstimate,
}

impl NodeEstimates {
    fn from_counts(c: [u64; 3], trials: u64) -> Self {
        NodeEstimates {
            u2: ProbEstimate::from_counts(c[0], trials),
            u1: ProbEstimate::from_counts(c[1], trials),
            bd: ProbEstimate::from_counts(c[2], trials),
        }
    }

    pub fn get(&self, who: crate::params::Node) -> ProbEstimate {
        match who {
            crate::params::Node::U2 => self.u2,
            crate::params::Node::U1 => self.u1,
            crate::params::Node::Bd => self.bd,
        }
    }
}

fn run_blocks<F>(cfg: &McConfig, kernel: F) -> Result<[u64; 3]>
where
    F: Fn(&mut ChaCha8Rng, u64, &mut [u64; 3]) + Sync,
{
    if cfg.trials == 0 {
        return Err(Error::Contract(
            "Monte Carlo needs at least one trial".into(),
        ));
    }
    let blocks = cfg.trials.div_ceil(BLOCK_TRIALS);
    let body = || {
        (0..blocks)
            .into_par_iter()
            .map(|blk| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(blk);
                let n = BLOCK_TRIALS.min(cfg.trials - blk * BLOCK_TRIALS);
                let mut counts = [0u64; 3];
                kernel(&mut rng, n, &mut counts);
                counts
            })
            .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    };
    if cfg.workers == 0 {
        Ok(body())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        Ok(pool.install(body))
    }
}

/// Outage frequencies of U2, U1 and the BD. `Perfect` zeroes both residual factors.
pub fn estimate_op(p: &SystemParams, mode: SicMode, cfg: &McConfig) -> Result<NodeEstimates> {
    p.validate()?;
    let mut q = p.clone();
    if mode == SicMode::Perfect {
        q.k1 = 0.0;
        q.k2 = 0.0;
    }
    let (u1, u2, ut) = (q.u1(), q.u2(), q.ut());
    let counts = run_blocks(cfg, |rng, n, c| {
        let mut r = ChannelRealization::default();
        for _ in 0..n {
            r.redraw(rng, &q, false);
            let (g2, g1, gt) = sinr_bs(&r, &q);
            let ok2 = g2 >= u2;
            let ok1 = ok2 && g1 >= u1;
            let okt = ok1 && gt >= ut;
            c[0] += u64::from(!ok2);
            c[1] += u64::from(!ok1);
            c[2] += u64::from(!okt);
        }
    })?;
    Ok(NodeEstimates::from_counts(counts, cfg.trials))
}

/// Frequencies of `max_j gamma_ij > u_i_int` for `x2`, `x1` and `xt`.
pub fn estimate_ip(p: &SystemParams, cfg: &McConfig) -> Result<NodeEstimates> {
    p.validate()?;
    let counts = run_blocks(cfg, |rng, n, c| {
        let mut r = ChannelRealization::default();
        for _ in 0..n {
            r.redraw(rng, p, true);
            let (mut m2, mut m1, mut mt) = (0.0f64, 0.0f64, 0.0f64);
            for (g2, g1, gt) in sinr_eves(&r, p) {
                m2 = m2.max(g2);
                m1 = m1.max(g1);
                mt = mt.max(gt);
            }
            c[0] += u64::from(m2 > p.u2_int);
            c[1] += u64::from(m1 > p.u1_int);
            c[2] += u64::from(mt > p.ut_int);
        }
    })?;
    Ok(NodeEstimates::from_counts(counts, cfg.trials))
}

/// Outage under a three-slot OMA benchmark without jamming: U1 and U2
/// each own a slot at full power, the BD rides on U2's slot and is decoded
/// after `x2`. Rates are tripled to keep the same spectral efficiency.
pub fn estimate_oma_baseline(p: &SystemParams, cfg: &McConfig) -> Result<NodeEstimates> {
    p.validate()?;
    let slot = |r: f64| (3.0 * r).exp2() - 1.0;
    let (u1, u2, ut) = (slot(p.r1), slot(p.r2), slot(p.rt));
    let rho = p.rho;
    let counts = run_blocks(cfg, |rng, n, c| {
        let mut r = ChannelRealization::default();
        for _ in 0..n {
            r.redraw(rng, p, false);
            let backscatter = p.eta * rho * r.g2t * r.gtb;
            let ok1 = rho * r.g1 >= u1;
            let ok2 = rho * r.g2 / (backscatter + 1.0) >= u2;
            let okt = ok2 && backscatter >= ut;
            c[0] += u64::from(!ok2);
            c[1] += u64::from(!ok1);
            c[2] += u64::from(!okt);
        }
    })?;
    Ok(NodeEstimates::from_counts(counts, cfg.trials))
}
