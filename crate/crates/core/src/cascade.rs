//! Statistics of the cascade backscatter channel `Z = (|h_1t|^2 + |h_2t|^2) |h_tb|^2`.
//!
//! `W = |h_1t|^2 + |h_2t|^2` is a sum of two exponentials (hypoexponential, or
//! Erlang-2 when the variances coincide). Conditioning on `W` turns every
//! Laplace-type average of `Z` into a Bessel-K or exponential-integral
//! closed form.
//!
//! `phi(alpha, beta)` is the truncated Laplace transform
//! `int_alpha^inf e^{-beta z} f_Z(z) dz`. It is evaluated as the full-range
//! transform minus a head integral on `[0, alpha]` sampled at Chebyshev
//! nodes. When the head carries most of the mass the subtraction would
//! cancel, so the tail is integrated directly on the same nodes instead.

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::specfun::{
    bessel_k, chebyshev_rule, exp_integral_e1_scaled, one_minus_z_e1_scaled, ChebyshevRule,
};

const EQUAL_REL_THRESHOLD: f64 = 1e-9;

/// Variances of the user-to-BD links and of the BD-to-BS link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeChannel {
    lambda_1t: f64,
    lambda_2t: f64,
    lambda_tb: f64,
}

#[derive(Debug, Clone, Copy)]
enum Branch {
    Unequal { l1: f64, l2: f64 },
    Equal { l: f64 },
}

impl CascadeChannel {
    pub fn new(lambda_1t: f64, lambda_2t: f64, lambda_tb: f64) -> Result<Self> {
        for (name, v) in [
            ("lambda_1t", lambda_1t),
            ("lambda_2t", lambda_2t),
            ("lambda_tb", lambda_tb),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(name, v, "(0, inf)"));
            }
        }
        Ok(CascadeChannel {
            lambda_1t,
            lambda_2t,
            lambda_tb,
        })
    }

    pub fn lambda_1t(&self) -> f64 {
        self.lambda_1t
    }

    pub fn lambda_2t(&self) -> f64 {
        self.lambda_2t
    }

    pub fn lambda_tb(&self) -> f64 {
        self.lambda_tb
    }

    /// Swaps the two user-to-BD variances.
    pub fn swapped(&self) -> Self {
        CascadeChannel {
            lambda_1t: self.lambda_2t,
            lambda_2t: self.lambda_1t,
            lambda_tb: self.lambda_tb,
        }
    }

    pub fn is_equal_variance(&self) -> bool {
        let max = self.lambda_1t.max(self.lambda_2t);
        (self.lambda_1t - self.lambda_2t).abs() <= EQUAL_REL_THRESHOLD * max
    }

    fn branch(&self) -> Branch {
        if self.is_equal_variance() {
            Branch::Equal {
                l: 0.5 * (self.lambda_1t + self.lambda_2t),
            }
        } else {
            Branch::Unequal {
                l1: self.lambda_1t,
                l2: self.lambda_2t,
            }
        }
    }

    fn lambda_max(&self) -> f64 {
        self.lambda_1t.max(self.lambda_2t)
    }
}

/// Chebyshev orders for the head integral and the oracle tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiConfig {
    orders: [usize; 3],
    oracle_rel_tol: f64,
    weights: HeadWeights,
    unequal_rule: ChebyshevRule,
    equal_rule: ChebyshevRule,
}

/// Weight set applied at the Chebyshev nodes of the head integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadWeights {
    /// Fejer weights with the direct-tail fallback (production path).
    Fejer,
    /// `(pi/order) sqrt(1 - psi^2)` Gauss-Chebyshev weights, always
    /// subtracting the head. Converges only as `order^-2`; kept for comparison.
    Chebyshev,
}

impl PhiConfig {
    /// `d1`, `d2` drive the unequal-variance head (the larger is used for the
    /// joint density), `d3` the equal-variance head.
    pub fn new(d1: usize, d2: usize, d3: usize, oracle_rel_tol: f64) -> Result<Self> {
        if d1 == 0 || d2 == 0 || d3 == 0 {
            return Err(Error::Contract(
                "Chebyshev orders must be at least 1".into(),
            ));
        }
        if !(oracle_rel_tol > 0.0 && oracle_rel_tol <= 1e-3) {
            return Err(domain("oracle_rel_tol", oracle_rel_tol, "(0, 1e-3]"));
        }
        Ok(PhiConfig {
            orders: [d1, d2, d3],
            oracle_rel_tol,
            weights: HeadWeights::Fejer,
            unequal_rule: chebyshev_rule(d1.max(d2))?,
            equal_rule: chebyshev_rule(d3)?,
        })
    }

    /// Same order for all three heads.
    pub fn with_order(order: usize) -> Result<Self> {
        Self::new(order, order, order, 1e-10)
    }

    pub fn with_weights(mut self, weights: HeadWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn orders(&self) -> [usize; 3] {
        self.orders
    }

    pub fn oracle_rel_tol(&self) -> f64 {
        self.oracle_rel_tol
    }

    pub fn weights(&self) -> HeadWeights {
        self.weights
    }

    fn rule(&self, ch: &CascadeChannel) -> &ChebyshevRule {
        if ch.is_equal_variance() {
            &self.equal_rule
        } else {
            &self.unequal_rule
        }
    }
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig::with_order(200).expect("200 is a valid order")
    }
}

/// Density of `W = |h_1t|^2 + |h_2t|^2`.
pub fn pdf_w(w: f64, ch: &CascadeChannel) -> Result<f64> {
    if w.is_nan() || w < 0.0 {
        return Err(domain("w", w, "[0, inf)"));
    }
    Ok(match ch.branch() {
        Branch::Unequal { l1, l2 } => ((-w / l1).exp() - (-w / l2).exp()) / (l1 - l2),
        Branch::Equal { l } => w / (l * l) * (-w / l).exp(),
    })
}

/// `2 sqrt(c) K1(2 sqrt(c))`, the mean of `e^{-c/X}` for unit-mean exponential X.
fn xk1(c: f64) -> f64 {
    if c == 0.0 {
        return 1.0;
    }
    let x = 2.0 * c.sqrt();
    x * bessel_k(1, x).expect("positive argument")
}

/// `1 - F_Z(z)`, computed directly to keep precision in the upper tail.
pub(crate) fn ccdf_z(z: f64, ch: &CascadeChannel) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    let ltb = ch.lambda_tb;
    match ch.branch() {
        Branch::Unequal { l1, l2 } => {
            (l1 * xk1(z / (l1 * ltb)) - l2 * xk1(z / (l2 * ltb))) / (l1 - l2)
        }
        Branch::Equal { l } => {
            let c = z / (l * ltb);
            let x = 2.0 * c.sqrt();
            2.0 * c * bessel_k(2, x).expect("positive argument")
        }
    }
}

/// CDF of the cascade variable `Z`.
pub fn cdf_z(z: f64, ch: &CascadeChannel) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(domain("z", z, "[0, inf)"));
    }
    Ok((1.0 - ccdf_z(z, ch)).clamp(0.0, 1.0))
}

fn density_z(z: f64, ch: &CascadeChannel) -> f64 {
    let ltb = ch.lambda_tb;
    match ch.branch() {
        Branch::Unequal { l1, l2 } => {
            let x1 = 2.0 * (z / (l1 * ltb)).sqrt();
            let x2 = 2.0 * (z / (l2 * ltb)).sqrt();
            let k = |x: f64| bessel_k(0, x).expect("positive argument");
            2.0 / ((l1 - l2) * ltb) * (k(x1) - k(x2))
        }
        Branch::Equal { l } => {
            let s = l * ltb;
            let x = 2.0 * (z / s).sqrt();
            x * bessel_k(1, x).expect("positive argument") / s
        }
    }
}

/// Density of the cascade variable `Z`; the domain excludes the origin.
pub fn pdf_z(z: f64, ch: &CascadeChannel) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(domain("z", z, "(0, inf)"));
    }
    Ok(density_z(z, ch))
}

/// Full-range Laplace transform `E[e^{-beta Z}]`.
///
/// With `c = 1/(beta lambda lambda_tb)` the exponential-branch transform is
/// `c e^c E1(c) = sqrt(c) e^{c/2} W_{-1/2,0}(c)` and the Erlang-2 transform is
/// `c (1 - c e^c E1(c)) = c e^{c/2} W_{-1,-1/2}(c)`.
pub fn phi_inf(beta: f64, ch: &CascadeChannel) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(domain("beta", beta, "(0, inf)"));
    }
    Ok(laplace(beta, ch))
}

fn laplace(beta: f64, ch: &CascadeChannel) -> f64 {
    let ltb = ch.lambda_tb;
    match ch.branch() {
        Branch::Unequal { l1, l2 } => {
            let term = |l: f64| {
                let c = 1.0 / (beta * l * ltb);
                exp_integral_e1_scaled(c).expect("positive argument")
            };
            (term(l1) - term(l2)) / ((l1 - l2) * beta * ltb)
        }
        Branch::Equal { l } => {
            let c = 1.0 / (beta * l * ltb);
            c * one_minus_z_e1_scaled(c)
        }
    }
}

fn head(alpha: f64, beta: f64, ch: &CascadeChannel, nodes: &[f64], weights: &[f64]) -> f64 {
    let sum: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&psi, &w)| {
            let z = 0.5 * alpha * (psi + 1.0);
            w * density_z(z, ch) * (-beta * z).exp()
        })
        .sum();
    0.5 * alpha * sum
}

/// `e^{alpha beta} int_alpha^inf e^{-beta z} f_Z dz` on a rational map of the tail.
fn tail_shifted(alpha: f64, beta: f64, ch: &CascadeChannel, rule: &ChebyshevRule) -> f64 {
    let scale = 1.0 / (beta + 1.0 / (alpha * ch.lambda_max() * ch.lambda_tb).sqrt());
    rule.nodes()
        .iter()
        .zip(rule.fejer_weights())
        .map(|(&psi, &w)| {
            let s = 1.0 - psi;
            let t = scale * (1.0 + psi) / s;
            let jac = 2.0 * scale / (s * s);
            w * jac * density_z(alpha + t, ch) * (-beta * t).exp()
        })
        .sum()
}

fn check_phi_args(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(domain("alpha", alpha, "[0, inf)"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(domain("beta", beta, "(0, inf)"));
    }
    Ok(())
}

/// `e^{alpha beta} phi(alpha, beta)`.
///
/// Bounded by `f_Z(alpha)/beta`-sized quantities, so callers can fold large
/// `e^{+c}` prefactors into the exponent without overflow.
pub fn phi_shifted(alpha: f64, beta: f64, ch: &CascadeChannel, cfg: &PhiConfig) -> Result<f64> {
    check_phi_args(alpha, beta)?;
    let full = laplace(beta, ch);
    if alpha == 0.0 {
        return Ok(full);
    }
    let rule = cfg.rule(ch);
    let value = match cfg.weights {
        HeadWeights::Fejer => {
            let h = head(alpha, beta, ch, rule.nodes(), rule.fejer_weights());
            if h <= 0.5 * full {
                (full - h) * (alpha * beta).exp()
            } else {
                tail_shifted(alpha, beta, ch, rule)
            }
        }
        HeadWeights::Chebyshev => {
            let h = head(alpha, beta, ch, rule.nodes(), &rule.chebyshev_weights());
            (full - h) * (alpha * beta).exp()
        }
    };
    Ok(value)
}

/// Truncated Laplace transform `int_alpha^inf e^{-beta z} f_Z(z) dz`.
pub fn phi(alpha: f64, beta: f64, ch: &CascadeChannel, cfg: &PhiConfig) -> Result<f64> {
    let raw = phi_shifted(alpha, beta, ch, cfg)? * (-alpha * beta).exp();
    clamp_unit(raw)
}

fn clamp_unit(v: f64) -> Result<f64> {
    const SLACK: f64 = 1e-9;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else if v > -SLACK && v < 1.0 + SLACK {
        log::warn!("phi = {v:e} clamped into [0, 1]");
        Ok(v.clamp(0.0, 1.0))
    } else {
        Err(Error::NumericalFailure {
            achieved: v,
            requested: SLACK,
        })
    }
}

/// Brute-force adaptive quadrature of `e^{-beta z} f_Z(z)` over `[alpha, inf)`.
///
/// Integrates on doubling segments and stops once
/// `e^{-beta b} (1 - F_Z(b))` falls below `rel_tol/10` of the running total.
pub fn phi_oracle(alpha: f64, beta: f64, ch: &CascadeChannel, rel_tol: f64) -> Result<f64> {
    check_phi_args(alpha, beta)?;
    let integrand = |z: f64| density_z(z, ch) * (-beta * z).exp();
    let piece_tol = Tolerance::relative(rel_tol / 10.0);
    let scale = ch.lambda_max() * ch.lambda_tb;

    let mut total = 0.0;
    let mut lo = alpha;
    if alpha == 0.0 {
        // resolve the logarithmic singularity at the origin geometrically
        for hi in [1e-12 * scale, 1e-8 * scale, 1e-4 * scale] {
            total += integrate(integrand, lo, hi, piece_tol)?.value;
            lo = hi;
        }
    }
    let mut width = scale.max(lo);
    for _ in 0..200 {
        let hi = lo + width;
        total += integrate(integrand, lo, hi, piece_tol)?.value;
        let bound = (-beta * hi).exp() * ccdf_z(hi, ch);
        if bound <= rel_tol / 10.0 * total || bound == 0.0 {
            return Ok(total);
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::NumericalFailure {
        achieved: ((-beta * lo).exp() * ccdf_z(lo, ch)) / total,
        requested: rel_tol,
    })
}
