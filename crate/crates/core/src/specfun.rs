//! Special functions and fixed quadrature rules.
//!
//! Every routine here is a pure function of its arguments. Values that can
//! underflow or overflow for large arguments have an exponentially scaled
//! companion (`*_scaled`) so that callers can combine exponents themselves.

use crate::error::{domain, Error, Result};
use std::f64::consts::PI;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(name, x, "(0, inf)"))
    }
}

/// Modified Lentz evaluation of `a1/(b1 + a2/(b2 + ...))`.
fn lentz(a: impl Fn(usize) -> f64, b: impl Fn(usize) -> f64) -> f64 {
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for i in 1..MAX_ITER {
        d = b(i) + a(i) * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b(i) + a(i) / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    f
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / kf;
        let add = term / kf;
        sum += add;
        if add.abs() < EPS * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// `e^x E1(x)` by continued fraction; valid for x > 1.
fn e1_scaled_cf(x: f64) -> f64 {
    lentz(
        |i| {
            if i == 1 {
                1.0
            } else {
                -(((i - 1) * (i - 1)) as f64)
            }
        },
        |i| x + (2 * i - 1) as f64,
    )
}

/// Exponential integral `E1(x) = int_x^inf e^{-t}/t dt`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_positive("x", x)?;
    Ok(if x <= 1.0 {
        e1_series(x)
    } else {
        e1_scaled_cf(x) * (-x).exp()
    })
}

/// `e^x E1(x)`, finite for every positive x.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    check_positive("x", x)?;
    Ok(if x <= 1.0 {
        e1_series(x) * x.exp()
    } else {
        e1_scaled_cf(x)
    })
}

/// `1 - z e^z E1(z)` without the cancellation of the naive form at large z.
pub(crate) fn one_minus_z_e1_scaled(z: f64) -> f64 {
    if z <= 1.0 {
        1.0 - z * z.exp() * e1_series(z)
    } else {
        // e^z E1(z) = 1/(z + 1 - T), T = 1/(z+3 - 4/(z+5 - 9/...)),
        // hence 1 - z e^z E1(z) = (1 - T)/(z + 1 - T).
        let t = lentz(
            |i| if i == 1 { 1.0 } else { -((i * i) as f64) },
            |i| z + (2 * i + 1) as f64,
        );
        (1.0 - t) / (z + 1.0 - t)
    }
}

/// Whittaker `W_{-1/2,0}(z) = sqrt(z) e^{z/2} E1(z)`.
pub fn whittaker_w_mhalf_zero(z: f64) -> Result<f64> {
    check_positive("z", z)?;
    let scaled = exp_integral_e1_scaled(z)?;
    Ok(z.sqrt() * (-0.5 * z).exp() * scaled)
}

/// Whittaker `W_{-1,-1/2}(z) = e^{-z/2} (1 - z e^z E1(z))`.
pub fn whittaker_w_mone_mhalf(z: f64) -> Result<f64> {
    check_positive("z", z)?;
    Ok((-0.5 * z).exp() * one_minus_z_e1_scaled(z))
}

fn k01_series(x: f64) -> (f64, f64) {
    let t = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();
    // K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} H_k t^k / (k!)^2
    // K1 = 1/x + ln(x/2) I1 - (x/4) sum_{k>=0} (psi(k+1) + psi(k+2)) t^k / (k!(k+1)!)
    let mut i0 = 1.0;
    let mut s0 = 0.0;
    let mut i1 = 1.0;
    let mut psi_k1 = -EULER_GAMMA;
    let mut s1 = psi_k1 + (psi_k1 + 1.0);
    let mut harmonic = 0.0;
    let mut a0 = 1.0;
    let mut a1 = 1.0;
    for k in 1..100 {
        let kf = k as f64;
        a0 *= t / (kf * kf);
        a1 *= t / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        psi_k1 += 1.0 / kf;
        i0 += a0;
        s0 += harmonic * a0;
        i1 += a1;
        s1 += (2.0 * psi_k1 + 1.0 / (kf + 1.0)) * a1;
        if a0 < EPS * i0 && a1 < EPS * i1 {
            break;
        }
    }
    let k0 = -(ln_half + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + ln_half * 0.5 * x * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// Steed's continued fraction for order zero, returning `e^x K0` and `e^x K1`.
fn k01_scaled_cf(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

fn k01_scaled(x: f64) -> (f64, f64) {
    if x <= 2.0 {
        let (k0, k1) = k01_series(x);
        let e = x.exp();
        (k0 * e, k1 * e)
    } else {
        k01_scaled_cf(x)
    }
}

/// `e^x K_order(x)` for order 0, 1 or 2.
pub fn bessel_k_scaled(order: u32, x: f64) -> Result<f64> {
    if order > 2 {
        return Err(Error::Contract(format!(
            "bessel_k order {order} not in {{0,1,2}}"
        )));
    }
    check_positive("x", x)?;
    let (k0, k1) = k01_scaled(x);
    Ok(match order {
        0 => k0,
        1 => k1,
        _ => k0 + 2.0 * k1 / x,
    })
}

/// Modified Bessel function of the second kind `K_order(x)`, order 0, 1 or 2.
pub fn bessel_k(order: u32, x: f64) -> Result<f64> {
    if order > 2 {
        return Err(Error::Contract(format!(
            "bessel_k order {order} not in {{0,1,2}}"
        )));
    }
    check_positive("x", x)?;
    if x <= 2.0 {
        let (k0, k1) = k01_series(x);
        return Ok(match order {
            0 => k0,
            1 => k1,
            _ => k0 + 2.0 * k1 / x,
        });
    }
    Ok(bessel_k_scaled(order, x)? * (-x).exp())
}

/// Chebyshev nodes of the first kind on (-1, 1), with matching weight sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevRule {
    order: usize,
    nodes: Vec<f64>,
    fejer: Vec<f64>,
}

impl ChebyshevRule {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `psi_j = cos(pi (2j-1) / (2 order))`, strictly decreasing in j.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Fejer first-rule weights: integrate any smooth f on [-1, 1] as
    /// `sum_j w_j f(psi_j)`, exact for polynomials of degree < order.
    pub fn fejer_weights(&self) -> &[f64] {
        &self.fejer
    }

    /// Gauss-Chebyshev weights after removing the `1/sqrt(1-psi^2)` kernel:
    /// `(pi/order) sqrt(1 - psi_j^2)`.
    pub fn chebyshev_weights(&self) -> Vec<f64> {
        let scale = PI / self.order as f64;
        self.nodes
            .iter()
            .map(|p| scale * (1.0 - p * p).sqrt())
            .collect()
    }
}

/// Builds the order-`order` Chebyshev rule.
pub fn chebyshev_rule(order: usize) -> Result<ChebyshevRule> {
    if order == 0 {
        return Err(Error::Contract("Chebyshev order must be at least 1".into()));
    }
    let n = order as f64;
    let thetas: Vec<f64> = (1..=order)
        .map(|j| PI * (2 * j - 1) as f64 / (2.0 * n))
        .collect();
    let mut nodes: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    if order % 2 == 1 {
        // cos(pi/2) is 6e-17 in floating point
        nodes[order / 2] = 0.0;
    }
    let fejer = thetas
        .iter()
        .map(|&t| {
            let tail: f64 = (1..=order / 2)
                .map(|k| {
                    let kf = k as f64;
                    (2.0 * kf * t).cos() / (4.0 * kf * kf - 1.0)
                })
                .sum();
            2.0 / n * (1.0 - 2.0 * tail)
        })
        .collect();
    Ok(ChebyshevRule {
        order,
        nodes,
        fejer,
    })
}

/// Gauss-Laguerre rule for `int_0^inf e^{-x} f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LaguerreRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_n w_n f(x_n)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Returns `(L_n(x), L_{n-1}(x))`.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for j in 1..=n {
        let jf = j as f64;
        let next = ((2.0 * jf - 1.0 - x) * p - (jf - 1.0) * p_prev) / jf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Builds the order-`order` Gauss-Laguerre rule by Newton iteration.
pub fn laguerre_rule(order: usize) -> Result<LaguerreRule> {
    if order == 0 {
        return Err(Error::Contract("Laguerre order must be at least 1".into()));
    }
    let n = order as f64;
    let mut nodes: Vec<f64> = Vec::with_capacity(order);
    let mut z = 0.0;
    for i in 0..order {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * n),
            1 => z + 15.0 / (1.0 + 2.5 * n),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut converged = false;
        for _ in 0..100 {
            let (p, p_prev) = laguerre_pair(order, z);
            let dp = n * (p - p_prev) / z;
            let step = p / dp;
            z -= step;
            if step.abs() <= 1e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !z.is_finite() {
            return Err(Error::NumericalFailure {
                achieved: f64::NAN,
                requested: 1e-13,
            });
        }
        nodes.push(z);
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (next, _) = laguerre_pair(order + 1, x);
            x / ((n + 1.0) * (n + 1.0) * next * next)
        })
        .collect();
    Ok(LaguerreRule {
        order,
        nodes,
        weights,
    })
}
