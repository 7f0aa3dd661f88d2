//! Closed-form outage probabilities at the base station.
//!
//! Decoding order is fixed: `x2`, then `x1`, then the backscattered `xt`.
//! Every formula is written in terms of `1/rho`, so the high-SNR floor is
//! the same expression evaluated at `1/rho = 0`.
//!
//! Conditioning on the jammer coin splits each probability into two
//! branches with coefficients `A` (U2 information fraction) and `B` (U1
//! information fraction); results average the branches with weight 1/2.

use crate::cascade::{phi_inf, phi_shifted, PhiConfig};
use crate::error::{Error, Result};
use crate::params::{EpsilonBranch, Node, SicMode, SystemParams};

/// Constants of one jammer branch.
///
/// `c`, `q1`, `q2` serve U1 under ipSIC, `q1p` serves pSIC, and the rest
/// describe the BD success region under ipSIC: in the `(x = |h_1|^2, z = Z)`
/// plane it is bounded by `x = d1 z + d0`, `x = n z` and
/// `x = dz_slope z + y0`, where `d0` and `y0` scale with `1/rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub branch: EpsilonBranch,
    pub u1: f64,
    pub u2: f64,
    pub ut: f64,
    pub c: f64,
    pub q1: f64,
    pub q2: f64,
    pub q1p: f64,
    pub n: f64,
    pub d1: f64,
    pub d_tilde: f64,
    pub k: f64,
    pub dz_slope: f64,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    pub q6: f64,
    pub q7: f64,
    pub q8: f64,
    pub q9: f64,
}

fn q1p(p: &SystemParams, br: &EpsilonBranch) -> f64 {
    let (a, b) = (br.a(), br.b());
    let (u1, u2) = (p.u1(), p.u2());
    p.eta * u2 / (a * p.lambda_2) + (1.0 / p.lambda_1 + b * u2 / (a * p.lambda_2)) * p.eta * u1 / b
}

/// All ipSIC constants of one branch. Fails on `k2 = 0`, `u1 = 0` or
/// `ut = 0`, which have their own reduced formulas.
pub fn derive_constants(p: &SystemParams, br: &EpsilonBranch) -> Result<DerivedConstants> {
    p.validate()?;
    let (u1, u2, ut) = (p.u1(), p.u2(), p.ut());
    if p.k2 == 0.0 {
        return Err(Error::NeedsDedicatedPath("k2 = 0, use the pSIC formulas"));
    }
    if u1 == 0.0 {
        return Err(Error::NeedsDedicatedPath("u1 = 0, the U1 event is certain"));
    }
    if ut == 0.0 {
        return Err(Error::NeedsDedicatedPath(
            "ut = 0, the BD event reduces to U1",
        ));
    }
    let (a, b) = (br.a(), br.b());
    let (l1, l2, eta, k1, k2) = (p.lambda_1, p.lambda_2, p.eta, p.k1, p.k2);
    let U1Constants {
        c,
        s11,
        s12,
        q1,
        q2,
    } = derive_constants_u1(p, br);
    let g = eta / (a * c * k2) + eta * u2 / (a * c);
    let s22 = 1.0 / l1 - b * k1 / (a * k2 * l2);

    let n = eta * (1.0 + 1.0 / ut) / (b * (1.0 / u1 + k1));
    let d1 = g;
    let d_tilde = c * (n - d1);
    let dz_slope = eta * (1.0 / ut - k2 * u2) / (b * (k1 + k2 * u2));
    let k = n - dz_slope;

    let x2_rate = eta * u2 / (a * l2);
    let xt_rate = eta / (a * k2 * l2 * ut);
    Ok(DerivedConstants {
        branch: *br,
        u1,
        u2,
        ut,
        c,
        q1,
        q2,
        q1p: q1p(p, br),
        n,
        d1,
        d_tilde,
        k,
        dz_slope,
        s11,
        s12,
        s22,
        q3: s11 * n - eta / (a * k2 * l2),
        q4: s11 * d1 - eta / (a * k2 * l2),
        q5: s12 * n + x2_rate,
        q6: s12 * d1 + x2_rate,
        q7: s12 * dz_slope + x2_rate,
        q8: s22 * dz_slope + xt_rate,
        q9: s22 * n + xt_rate,
    })
}

/// `k2 u1 u2 (1 + ut + k1 ut) + ut (k1 u1 + k2 u2) < 1`: the BD success
/// region under ipSIC is non-empty. Equivalent to `C > 0 && D_tilde > 0`
/// and to `K < 0`.
pub fn bd_region_nonempty(u1: f64, u2: f64, ut: f64, k1: f64, k2: f64) -> bool {
    k2 * u1 * u2 * (1.0 + ut + k1 * ut) + ut * (k1 * u1 + k2 * u2) < 1.0
}

/// Laplace transform of Z at `beta >= 0`; `beta = 0` happens only for `eta = 0`.
fn laplace(beta: f64, p: &SystemParams) -> Result<f64> {
    if beta == 0.0 {
        Ok(1.0)
    } else {
        phi_inf(beta, &p.cascade)
    }
}

fn average(f: impl Fn(&EpsilonBranch) -> Result<f64>, a1: f64) -> Result<f64> {
    let [b0, b1] = EpsilonBranch::both(a1);
    Ok(0.5 * (f(&b0)? + f(&b1)?))
}

fn probability(v: f64) -> Result<f64> {
    if v.is_finite() && (-1e-9..=1.0 + 1e-9).contains(&v) {
        Ok(v.clamp(0.0, 1.0))
    } else {
        Err(Error::NumericalFailure {
            achieved: v,
            requested: 1e-9,
        })
    }
}

fn op_u2_at(p: &SystemParams, inv_rho: f64) -> Result<f64> {
    let u2 = p.u2();
    if u2 == 0.0 {
        return Ok(0.0);
    }
    let (l1, l2) = (p.lambda_1, p.lambda_2);
    let success = average(
        |br| {
            let (a, b) = (br.a(), br.b());
            let pre = a * l2 * (-u2 * inv_rho / (a * l2)).exp() / (b * u2 * l1 + a * l2);
            Ok(pre * laplace(u2 * p.eta / (a * l2), p)?)
        },
        p.a1,
    )?;
    probability(1.0 - success)
}

/// Outage probability of U2 (decoded first, unaffected by SIC quality).
pub fn op_u2(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    op_u2_at(p, 1.0 / p.rho)
}

fn op_u1_ipsic_at(p: &SystemParams, inv_rho: f64) -> Result<f64> {
    let (u1, u2) = (p.u1(), p.u2());
    if u1 == 0.0 {
        return op_u2_at(p, inv_rho);
    }
    if p.k2 == 0.0 {
        return Err(Error::NeedsDedicatedPath("k2 = 0, use op_u1_psic"));
    }
    if p.k2 * u2 * u1 >= 1.0 {
        return Ok(1.0);
    }
    let (l1, l2, k2) = (p.lambda_1, p.lambda_2, p.k2);
    let success = average(
        |br| {
            let (a, b) = (br.a(), br.b());
            let k = derive_constants_u1(p, br);
            let i2 = a * k2 * l2 * u1 / (a * k2 * l2 * u1 + b * l1)
                * (inv_rho / (a * k2 * l2) - inv_rho / (a * k.c) * k.s11 * (u2 + 1.0 / k2)).exp()
                * laplace(k.q1, p)?;
            let i3 = a * l2 / (b * u2 * l1 + a * l2)
                * (-u2 * inv_rho / (a * l2) - k.s12 * inv_rho * (u2 + 1.0 / k2) / (a * k.c)).exp()
                * laplace(k.q2, p)?;
            Ok(i3 - i2)
        },
        p.a1,
    )?;
    probability(1.0 - success)
}

struct U1Constants {
    c: f64,
    s11: f64,
    s12: f64,
    q1: f64,
    q2: f64,
}

fn derive_constants_u1(p: &SystemParams, br: &EpsilonBranch) -> U1Constants {
    let (a, b) = (br.a(), br.b());
    let (u1, u2, k2, eta) = (p.u1(), p.u2(), p.k2, p.eta);
    let c = b / (a * k2 * u1) - b * u2 / a;
    let g = eta / (a * c * k2) + eta * u2 / (a * c);
    let s11 = 1.0 / p.lambda_1 + b / (a * k2 * p.lambda_2 * u1);
    let s12 = 1.0 / p.lambda_1 + b * u2 / (a * p.lambda_2);
    U1Constants {
        c,
        s11,
        s12,
        q1: s11 * g - eta / (a * k2 * p.lambda_2),
        q2: eta * u2 / (a * p.lambda_2) + s12 * g,
    }
}

/// Outage probability of U1 with residual interference `k2` from `x2`.
/// Equals 1 once `k2 u1 u2 >= 1`.
pub fn op_u1_ipsic(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    op_u1_ipsic_at(p, 1.0 / p.rho)
}

/// Success-probability prefactor shared by U1 and BD under pSIC.
fn psic_prefactor(p: &SystemParams, br: &EpsilonBranch, inv_rho: f64) -> f64 {
    let (a, b) = (br.a(), br.b());
    let (u1, u2, l1, l2) = (p.u1(), p.u2(), p.lambda_1, p.lambda_2);
    a * l2 / (a * l2 + b * u2 * l1)
        * (-u2 * inv_rho / (a * l2) - (1.0 / l1 + b * u2 / (a * l2)) * u1 * inv_rho / b).exp()
}

fn op_u1_psic_at(p: &SystemParams, inv_rho: f64) -> Result<f64> {
    if p.u1() == 0.0 {
        return op_u2_at(p, inv_rho);
    }
    let success = average(
        |br| Ok(psic_prefactor(p, br, inv_rho) * laplace(q1p(p, br), p)?),
        p.a1,
    )?;
    probability(1.0 - success)
}

/// Outage probability of U1 with perfect cancellation of `x2`.
pub fn op_u1_psic(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    op_u1_psic_at(p, 1.0 / p.rho)
}

/// `e^{e} phi(alpha, beta)` with the exponents combined before exponentiation.
fn weighted_phi(e: f64, alpha: f64, beta: f64, p: &SystemParams, cfg: &PhiConfig) -> Result<f64> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Laplace argument {beta} is not positive"
        )));
    }
    let shifted = phi_shifted(alpha, beta, &p.cascade, cfg)?;
    if shifted == 0.0 {
        return Ok(0.0);
    }
    Ok((e - alpha * beta + shifted.ln()).exp())
}

fn op_bd_psic_at(p: &SystemParams, inv_rho: f64, cfg: &PhiConfig) -> Result<f64> {
    let ut = p.ut();
    if ut == 0.0 {
        return op_u1_psic_at(p, inv_rho);
    }
    if p.eta == 0.0 {
        return Ok(1.0);
    }
    let alpha = ut * inv_rho / p.eta;
    let success = average(
        |br| {
            let pre = psic_prefactor(p, br, inv_rho);
            Ok(pre * weighted_phi(0.0, alpha, q1p(p, br), p, cfg)?)
        },
        p.a1,
    )?;
    probability(1.0 - success)
}

/// Outage probability of the BD with perfect cancellation of `x2` and `x1`.
pub fn op_bd_psic(p: &SystemParams, cfg: &PhiConfig) -> Result<f64> {
    p.validate()?;
    op_bd_psic_at(p, 1.0 / p.rho, cfg)
}

/// The four region integrals of one branch of the BD ipSIC success probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdTerms {
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
    pub p22: f64,
}

impl BdTerms {
    const ZERO: BdTerms = BdTerms {
        p11: 0.0,
        p12: 0.0,
        p21: 0.0,
        p22: 0.0,
    };

    pub fn success(&self) -> f64 {
        self.p12 - self.p11 + self.p21 - self.p22
    }
}

fn bd_terms_at(
    p: &SystemParams,
    k: &DerivedConstants,
    inv_rho: f64,
    cfg: &PhiConfig,
) -> Result<BdTerms> {
    let (a, b) = (k.branch.a(), k.branch.b());
    let (l1, l2, k1, k2) = (p.lambda_1, p.lambda_2, p.k1, p.k2);
    let first_pair = k.c > 0.0 && k.d_tilde > 0.0;
    let second_pair = k.k < 0.0;
    if !first_pair && !second_pair {
        return Ok(BdTerms::ZERO);
    }
    let d0 = inv_rho * (k.u2 + 1.0 / k2) / (a * k.c);
    let y0 = -inv_rho * (1.0 + k2 * k.u2) / (b * (k1 + k2 * k.u2));
    let z0 = d0 / (k.n - k.d1);
    let e_xt = inv_rho / (a * k2 * l2);
    let e_x2 = -k.u2 * inv_rho / (a * l2);
    let w = |e: f64, q: f64| weighted_phi(e, z0, q, p, cfg);

    let mut t = BdTerms::ZERO;
    if first_pair {
        t.p11 = (w(e_xt - k.s11 * d0, k.q4)? - w(e_xt, k.q3)?) / (l1 * k.s11);
        t.p12 = (w(e_x2 - k.s12 * d0, k.q6)? - w(e_x2, k.q5)?) / (l1 * k.s12);
    }
    if second_pair {
        if k.s22 == 0.0 {
            return Err(Error::NeedsDedicatedPath(
                "s22 = 0, the x-integral degenerates",
            ));
        }
        t.p21 = (w(e_x2, k.q5)? - w(e_x2 - k.s12 * y0, k.q7)?) / (l1 * k.s12);
        t.p22 = (w(e_xt, k.q9)? - w(e_xt - k.s22 * y0, k.q8)?) / (l1 * k.s22);
    }
    Ok(t)
}

/// Per-branch region integrals at the configured SNR, for inspection.
pub fn bd_ipsic_terms(p: &SystemParams, cfg: &PhiConfig) -> Result<[BdTerms; 2]> {
    let [b0, b1] = EpsilonBranch::both(p.a1);
    let consts = [derive_constants(p, &b0)?, derive_constants(p, &b1)?];
    let inv_rho = 1.0 / p.rho;
    Ok([
        bd_terms_at(p, &consts[0], inv_rho, cfg)?,
        bd_terms_at(p, &consts[1], inv_rho, cfg)?,
    ])
}

/// BD ipSIC outage evaluated from caller-supplied constants, one per branch.
pub fn op_bd_ipsic_from(
    p: &SystemParams,
    consts: &[DerivedConstants; 2],
    inv_rho: f64,
    cfg: &PhiConfig,
) -> Result<f64> {
    let s0 = bd_terms_at(p, &consts[0], inv_rho, cfg)?.success();
    let s1 = bd_terms_at(p, &consts[1], inv_rho, cfg)?.success();
    probability(1.0 - 0.5 * (s0 + s1))
}

fn op_bd_ipsic_at(p: &SystemParams, inv_rho: f64, cfg: &PhiConfig) -> Result<f64> {
    if p.ut() == 0.0 {
        return op_u1_ipsic_at(p, inv_rho);
    }
    if p.k1 == 0.0 || p.k2 == 0.0 {
        return Err(Error::NeedsDedicatedPath("k1 or k2 = 0, use op_bd_psic"));
    }
    if p.u1() == 0.0 {
        return Err(Error::NeedsDedicatedPath(
            "u1 = 0 under ipSIC has no closed form here",
        ));
    }
    if p.eta == 0.0 {
        return Ok(1.0);
    }
    let [b0, b1] = EpsilonBranch::both(p.a1);
    let consts = [derive_constants(p, &b0)?, derive_constants(p, &b1)?];
    op_bd_ipsic_from(p, &consts, inv_rho, cfg)
}

/// Outage probability of the BD with residual interference `k1`, `k2`.
pub fn op_bd_ipsic(p: &SystemParams, cfg: &PhiConfig) -> Result<f64> {
    p.validate()?;
    op_bd_ipsic_at(p, 1.0 / p.rho, cfg)
}

/// Dispatches on node and SIC mode at the configured SNR.
pub fn op(p: &SystemParams, who: Node, mode: SicMode, cfg: &PhiConfig) -> Result<f64> {
    p.validate()?;
    op_at(p, who, mode, 1.0 / p.rho, cfg)
}

fn op_at(p: &SystemParams, who: Node, mode: SicMode, inv_rho: f64, cfg: &PhiConfig) -> Result<f64> {
    match (who, mode) {
        (Node::U2, _) => op_u2_at(p, inv_rho),
        (Node::U1, SicMode::Perfect) => op_u1_psic_at(p, inv_rho),
        (Node::U1, SicMode::Imperfect) => op_u1_ipsic_at(p, inv_rho),
        (Node::Bd, SicMode::Perfect) => op_bd_psic_at(p, inv_rho, cfg),
        (Node::Bd, SicMode::Imperfect) => op_bd_ipsic_at(p, inv_rho, cfg),
    }
}

/// High-SNR outage floor: the same expressions at `1/rho = 0`.
pub fn op_floor(p: &SystemParams, who: Node, mode: SicMode, cfg: &PhiConfig) -> Result<f64> {
    p.validate()?;
    op_at(p, who, mode, 0.0, cfg)
}
