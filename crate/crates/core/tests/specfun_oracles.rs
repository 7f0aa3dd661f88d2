//! Special functions against direct integral representations.

use ambc_core::quad::{integrate, Tolerance};
use ambc_core::specfun::{
    bessel_k_scaled, exp_integral_e1, laguerre_rule, whittaker_w_mhalf_zero, whittaker_w_mone_mhalf,
};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn tight() -> Tolerance {
    Tolerance {
        abs: 0.0,
        rel: 1e-13,
        max_intervals: 5000,
    }
}

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate(f, a, b, tight()).unwrap().value
}

/// 30 log-spaced points on [1e-3, 50].
fn grid() -> impl Iterator<Item = f64> {
    let (lo, hi) = (1e-3f64.ln(), 50f64.ln());
    (0..30).map(move |i| (lo + (hi - lo) * i as f64 / 29.0).exp())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn e1_against_log_substituted_integral() {
    // E1(x) = int_{ln x}^inf exp(-e^u) du below 1, e^{-x} int_0^inf e^{-s}/(x+s) ds above
    for x in grid() {
        let oracle = if x < 1.0 {
            quad(|u: f64| (-u.exp()).exp(), x.ln(), 4.0)
        } else {
            (-x).exp() * laplace_split(|s| 1.0 / (x + s), x)
        };
        let v = exp_integral_e1(x).unwrap();
        assert!(rel(v, oracle) < TOL, "E1({x}) = {v}, oracle {oracle}");
    }
}

#[test]
fn bessel_k_against_cosh_integral() {
    // e^x K_nu(x) = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt
    for x in grid() {
        let upper = (1.0 + 800.0 / x).acosh();
        for nu in [0u32, 1] {
            let oracle = quad(
                |t: f64| (-x * (t.cosh() - 1.0)).exp() * (f64::from(nu) * t).cosh(),
                0.0,
                upper,
            );
            let v = bessel_k_scaled(nu, x).unwrap();
            assert!(rel(v, oracle) < TOL, "K{nu}({x}) = {v}, oracle {oracle}");
        }
    }
}

/// `int_0^inf e^{-s} g(s) ds`, split where `g` varies on the scale `z`.
fn laplace_split(g: impl Fn(f64) -> f64, z: f64) -> f64 {
    let knee = z.min(1.0);
    quad(|s| (-s).exp() * g(s), 0.0, knee) + quad(|s| (-s).exp() * g(s), knee, 60.0)
}

#[test]
fn whittaker_against_integral_representation() {
    for z in [0.01f64, 0.1, 1.0, 10.0, 50.0] {
        // W_{-1/2,0}(z) = sqrt(z) e^{-z/2} int_0^inf e^{-s}/(z+s) ds
        let w0 = z.sqrt() * (-z / 2.0).exp() * laplace_split(|s| 1.0 / (z + s), z);
        let v0 = whittaker_w_mhalf_zero(z).unwrap();
        assert!(rel(v0, w0) < TOL, "W(-1/2,0)({z}) = {v0}, oracle {w0}");
        // W_{-1,-1/2}(z) = e^{-z/2} z int_0^inf e^{-s}/(z+s)^2 ds
        let w1 = (-z / 2.0).exp() * z * laplace_split(|s| 1.0 / ((z + s) * (z + s)), z);
        let v1 = whittaker_w_mone_mhalf(z).unwrap();
        assert!(rel(v1, w1) < TOL, "W(-1,-1/2)({z}) = {v1}, oracle {w1}");
    }
}

#[test]
fn laguerre_exact_on_low_degree_polynomials() {
    for n in [2usize, 5, 10] {
        let rule = laguerre_rule(n).unwrap();
        let mut factorial = 1.0;
        for k in 0..2 * n {
            if k > 0 {
                factorial *= k as f64;
            }
            let v = rule.integrate(|x| x.powi(k as i32));
            assert!(rel(v, factorial) < 1e-9, "n={n} k={k}: {v} vs {factorial}");
        }
    }
}

proptest! {
    #[test]
    fn e1_is_decreasing_and_bounded(x in 1e-3f64..50.0, dx in 1e-3f64..1.0) {
        let a = exp_integral_e1(x).unwrap();
        let b = exp_integral_e1(x + dx).unwrap();
        prop_assert!(b < a);
        // e^{-x}/2 ln(1 + 2/x) < E1(x) < e^{-x} ln(1 + 1/x)
        prop_assert!(a < (-x).exp() * (1.0 + 1.0 / x).ln());
        prop_assert!(a > 0.5 * (-x).exp() * (1.0 + 2.0 / x).ln());
    }

    #[test]
    fn bessel_k_order_ordering(x in 1e-3f64..50.0) {
        let k0 = bessel_k_scaled(0, x).unwrap();
        let k1 = bessel_k_scaled(1, x).unwrap();
        let k2 = bessel_k_scaled(2, x).unwrap();
        prop_assert!(k0 < k1 && k1 < k2);
        prop_assert!(((k2 - k0) - 2.0 * k1 / x).abs() <= 1e-12 * k2);
    }

    #[test]
    fn laguerre_integrates_random_polynomials(
        n in 2usize..12,
        coeffs in proptest::collection::vec(-1.0f64..1.0, 1..6),
    ) {
        let rule = laguerre_rule(n).unwrap();
        let deg = coeffs.len().min(2 * n);
        let poly = |x: f64| coeffs[..deg].iter().rev().fold(0.0, |acc, c| acc * x + c);
        let mut exact = 0.0;
        let mut factorial = 1.0;
        for (k, c) in coeffs[..deg].iter().enumerate() {
            if k > 0 {
                factorial *= k as f64;
            }
            exact += c * factorial;
        }
        let scale: f64 = coeffs[..deg].iter().enumerate().map(|(k, c)| c.abs() * (1..=k).product::<usize>() as f64).sum();
        prop_assert!((rule.integrate(poly) - exact).abs() <= 1e-10 * scale.max(1.0));
    }
}
