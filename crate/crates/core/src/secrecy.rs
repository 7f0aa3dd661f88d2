//! Intercept probabilities at `M` non-colluding eavesdroppers.
//!
//! Eves cancel nothing but the legitimate messages (parallel interference
//! cancellation), so each sees its message against the artificial noise
//! only. Interception happens when the best eve exceeds the secrecy
//! threshold; per-eve channels are independent, so the CDF of the maximum
//! is a product over eves.

use crate::cascade::CascadeChannel;
use crate::error::Result;
use crate::params::{Node, SystemParams};
use crate::specfun::LaguerreRule;

const LOG_PRODUCT_THRESHOLD: usize = 50;

/// Default Gauss-Laguerre order for the BD intercept average. The conditional
/// intercept-free probability behaves like `e^{-c/w}` near `w = 0`, which
/// limits Gauss-Laguerre to algebraic convergence; 150 nodes keep the error
/// near 1e-6 up to 20 dB.
pub const DEFAULT_LAGUERRE_ORDER: usize = 150;

/// `prod_j f(j)`, switched to a log-sum for large ensembles.
fn product(m: usize, f: impl Fn(usize) -> f64) -> f64 {
    if m > LOG_PRODUCT_THRESHOLD {
        let mut log = 0.0;
        for j in 0..m {
            let v = f(j);
            if v <= 0.0 {
                return 0.0;
            }
            log += v.ln();
        }
        log.exp()
    } else {
        (0..m).map(f).product()
    }
}

/// Shared form of the two user IPs: `own` are the intercepted user's eve
/// variances, `other` the co-user's (who jams in the first branch).
fn ip_user(p: &SystemParams, own: &[f64], other: &[f64], u: f64, inv_rho: f64) -> f64 {
    let m = own.len();
    if m == 0 {
        return 0.0;
    }
    let (a1, a2) = (p.a1, p.a2());
    // co-user jams: SINR = rho g_own / (a2 rho g_other + 1)
    let cross = product(m, |j| {
        1.0 - own[j] / (own[j] + a2 * other[j] * u) * (-u * inv_rho / own[j]).exp()
    });
    // self-jamming: SINR = a1 rho g / (a2 rho g + 1) saturates at a1/a2
    let saturating = a2 == 0.0 || a1 / a2 > u;
    if saturating {
        let gap = a1 - a2 * u;
        let selfj = product(m, |j| 1.0 - (-u * inv_rho / (own[j] * gap)).exp());
        1.0 - 0.5 * cross - 0.5 * selfj
    } else {
        0.5 - 0.5 * cross
    }
}

fn ip_u2_at(p: &SystemParams, inv_rho: f64) -> f64 {
    ip_user(p, &p.eves.lambda_2j, &p.eves.lambda_1j, p.u2_int, inv_rho)
}

fn ip_u1_at(p: &SystemParams, inv_rho: f64) -> f64 {
    ip_user(p, &p.eves.lambda_1j, &p.eves.lambda_2j, p.u1_int, inv_rho)
}

/// Intercept probability of `x2`.
pub fn ip_u2(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    Ok(ip_u2_at(p, 1.0 / p.rho))
}

/// Intercept probability of `x1`.
pub fn ip_u1(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    Ok(ip_u1_at(p, 1.0 / p.rho))
}

/// `int_0^inf g(w) f_W(w) dw` by Gauss-Laguerre on each exponential component.
fn average_over_w(ch: &CascadeChannel, rule: &LaguerreRule, g: impl Fn(f64) -> f64) -> f64 {
    let (l1, l2) = (ch.lambda_1t(), ch.lambda_2t());
    if ch.is_equal_variance() {
        let l = 0.5 * (l1 + l2);
        rule.integrate(|x| x * g(l * x))
    } else {
        let part = |l: f64| l * rule.integrate(|x| g(l * x));
        (part(l1) - part(l2)) / (l1 - l2)
    }
}

fn ip_bd_at(p: &SystemParams, rule: &LaguerreRule, inv_rho: f64) -> f64 {
    let m = p.eves.m();
    let ut = p.ut_int;
    if m == 0 || p.eta == 0.0 {
        return 0.0;
    }
    if ut == 0.0 {
        return 1.0;
    }
    let (eta, a2) = (p.eta, p.a2());
    let ltj = &p.eves.lambda_tj;
    // jammer k has eve-link variances lambda_kj
    let intercept_free = |jammer: &[f64]| {
        average_over_w(&p.cascade, rule, |w| {
            let v = ut / w;
            product(m, |j| {
                let s = eta * ltj[j];
                1.0 - s * (-v * inv_rho / s).exp() / (s + a2 * jammer[j] * v)
            })
        })
    };
    let i1 = intercept_free(&p.eves.lambda_1j);
    let i2 = intercept_free(&p.eves.lambda_2j);
    (1.0 - 0.5 * (i1 + i2)).clamp(0.0, 1.0)
}

/// Intercept probability of the backscattered `xt`.
pub fn ip_bd(p: &SystemParams, rule: &LaguerreRule) -> Result<f64> {
    p.validate()?;
    Ok(ip_bd_at(p, rule, 1.0 / p.rho))
}

/// Intercept probability of any node at the configured SNR.
pub fn ip(p: &SystemParams, who: Node, rule: &LaguerreRule) -> Result<f64> {
    p.validate()?;
    Ok(ip_at(p, who, rule, 1.0 / p.rho))
}

fn ip_at(p: &SystemParams, who: Node, rule: &LaguerreRule, inv_rho: f64) -> f64 {
    match who {
        Node::U1 => ip_u1_at(p, inv_rho),
        Node::U2 => ip_u2_at(p, inv_rho),
        Node::Bd => ip_bd_at(p, rule, inv_rho),
    }
}

/// High-SNR intercept constant: the same expressions at `1/rho = 0`.
pub fn ip_asymptote(p: &SystemParams, who: Node, rule: &LaguerreRule) -> Result<f64> {
    p.validate()?;
    Ok(ip_at(p, who, rule, 0.0))
}
