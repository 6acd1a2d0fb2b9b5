//! Characteristic-function prices of calls, puts and digital calls.
//!
//! `Q_k = 1/2 + 1/pi int_0^inf Re[exp(-i w ln K) f_k(w) / (i w)] dw`, with
//! `f_k` written through `b_k, d_k, h_k, C_k, D_k`. The logarithm in `C_k`
//! is continued along increasing `w` so that it never jumps by `2 pi i`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::HestonParams;
use crate::quadrature::gauss_legendre;
use crate::scalar::Real;

/// Contracts with a semi-analytic price.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnalyticKind {
    Call,
    Put,
    Digital,
}

/// Quadrature controls.
#[derive(Clone, Copy, Debug)]
pub struct FourierSettings {
    /// Upper limit is the first `w` with `|f_k(w)| / w` below this.
    pub tail_tol: f64,
    /// Panel doubling stops once both `Q_k` change by less than this.
    pub abs_tol: f64,
    pub nodes_per_panel: usize,
    pub max_panels: usize,
}

impl Default for FourierSettings {
    fn default() -> Self {
        Self {
            tail_tol: 1e-12,
            abs_tol: 1e-10,
            nodes_per_panel: 16,
            max_panels: 1 << 14,
        }
    }
}

/// Model data in double precision at a fixed time to maturity.
#[derive(Clone, Copy, Debug)]
struct Model {
    kappa: f64,
    theta: f64,
    sigma: f64,
    rho: f64,
    r_d: f64,
    r_f: f64,
    tau: f64,
    v: f64,
    /// `ln S - ln K`.
    moneyness: f64,
}

impl Model {
    fn new<T: Real>(p: &HestonParams<T>, tau: f64) -> Self {
        Self {
            kappa: p.kappa.as_f64(),
            theta: p.theta.as_f64(),
            sigma: p.sigma.as_f64(),
            rho: p.rho.as_f64(),
            r_d: p.r_d.as_f64(),
            r_f: p.r_f.as_f64(),
            tau,
            v: p.v0.as_f64(),
            moneyness: (p.spot / p.strike).ln().as_f64(),
        }
    }
}

/// Pieces of `f_k` at one frequency.
#[derive(Clone, Copy, Debug)]
pub struct CharFnParts {
    pub b: f64,
    pub d: Complex64,
    pub h: Complex64,
    pub c: Complex64,
    pub d_coef: Complex64,
    /// `f_k` with `ln S` replaced by `ln(S/K)`, i.e. `exp(-i w ln K) f_k`.
    pub f: Complex64,
}

/// Continuous continuation of `ln((1 - h e^{d tau}) / (1 - h))` in `w`.
///
/// The ratio equals `e^{d tau} (1 + z)` with
/// `z = (1 - e^{-d tau}) (b - i rho sigma w - d) / (2 d)`, which avoids
/// overflow of `e^{d tau}` and the cancellation `b - d` when `sigma` is tiny.
/// `d` has positive real part along the whole real axis, so only `ln(1 + z)`
/// needs branch tracking.
#[derive(Clone, Debug)]
struct BranchTracker {
    k: usize,
    omega: f64,
    im: f64,
}

impl BranchTracker {
    /// Largest frequency step between consecutive tracked evaluations.
    const MAX_STEP: f64 = 0.05;

    fn new(k: usize) -> Self {
        Self { k, omega: 0.0, im: 0.0 }
    }

    /// Parts at `omega >= previous omega`.
    fn parts(&mut self, m: &Model, omega: f64) -> CharFnParts {
        debug_assert!(omega >= self.omega);
        let gap = omega - self.omega;
        let sub = (gap / Self::MAX_STEP).ceil() as usize;
        for s in 1..sub {
            let w = self.omega + gap * s as f64 / sub as f64;
            let raw = log_one_plus(m, self.k, w);
            self.im = unwrap(raw.im, self.im);
        }
        let (b, d, h, minus, z) = core_terms(m, self.k, omega);
        let raw = z.ln_1p_safe();
        self.im = unwrap(raw.im, self.im);
        self.omega = omega;
        // plus tau - 2 ln(ratio) = minus tau - 2 ln(1 + z); both terms are O(sigma^2).
        let ln1p = Complex64::new(raw.re, self.im);
        let i_w = Complex64::new(0.0, omega);
        let sig2 = m.sigma * m.sigma;
        let c = (m.r_d - m.r_f) * i_w * m.tau + m.kappa * m.theta / sig2 * (minus * m.tau - 2.0 * ln1p);
        // (b - d)/sigma^2 (1 - e^{-d tau}) / (1 - e^{-d tau} / h).
        let e = (-d * m.tau).exp();
        let inv_h = if h.is_finite() { 1.0 / h } else { Complex64::new(0.0, 0.0) };
        let d_coef = minus / sig2 * (1.0 - e) / (1.0 - e * inv_h);
        let f = (c + d_coef * m.v + i_w * m.moneyness).exp();
        CharFnParts { b, d, h, c, d_coef, f }
    }
}

fn unwrap(raw: f64, previous: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    raw + two_pi * ((previous - raw) / two_pi).round()
}

/// `(b_k, d_k, h_k, b_k - i rho sigma w - d_k, z)`.
fn core_terms(m: &Model, k: usize, omega: f64) -> (f64, Complex64, Complex64, Complex64, Complex64) {
    let (sigma, rho) = (m.sigma, m.rho);
    let b = (k as f64 - 2.0) * rho * sigma + m.kappa;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let i_w = Complex64::new(0.0, omega);
    let beta = Complex64::new(b, -rho * sigma * omega);
    // (rho sigma i w - b)^2 = beta^2; the rest is -(beta^2 - d^2).
    let extra = sign * sigma * sigma * i_w + sigma * sigma * omega * omega;
    let d = (beta * beta + extra).sqrt();
    let plus = beta + d;
    let minus = -extra / plus;
    let h = plus / minus;
    let e = (-d * m.tau).exp();
    let z = (1.0 - e) * minus / (2.0 * d);
    (b, d, h, minus, z)
}

fn log_one_plus(m: &Model, k: usize, omega: f64) -> Complex64 {
    core_terms(m, k, omega).4.ln_1p_safe()
}

trait Ln1p {
    fn ln_1p_safe(self) -> Complex64;
}

impl Ln1p for Complex64 {
    /// `ln(1 + z)` accurate for small `|z|`.
    fn ln_1p_safe(self) -> Complex64 {
        if self.norm() < 1e-4 {
            // Series to fourth order; the truncation error is below 1e-20.
            let z = self;
            z - z * z / 2.0 + z * z * z / 3.0 - z * z * z * z / 4.0
        } else {
            (1.0 + self).ln()
        }
    }
}

/// Parts of `f_k` at the frequencies `omegas` (ascending), tracking the
/// logarithm branch from `w = 0`.
pub fn char_fn_parts<T: Real>(k: usize, omegas: &[f64], p: &HestonParams<T>, tau: T) -> Vec<CharFnParts> {
    assert!(k == 1 || k == 2, "k must be 1 or 2");
    let m = Model::new(p, tau.as_f64());
    let mut tracker = BranchTracker::new(k);
    omegas.iter().map(|&w| tracker.parts(&m, w)).collect()
}

/// `|f_k(w)|`; independent of the logarithm branch.
fn modulus(m: &Model, k: usize, omega: f64) -> f64 {
    let mut t = BranchTracker::new(k);
    t.omega = omega;
    t.parts(m, omega).f.norm()
}

fn upper_limit(m: &Model, s: &FourierSettings) -> Result<f64> {
    let small = |w: f64| (1..=2).all(|k| modulus(m, k, w) / w < s.tail_tol);
    let mut w = 1.0;
    while w < 1e7 {
        if small(w) && small(1.5 * w) && small(2.0 * w) {
            return Ok(w);
        }
        w *= 1.25;
    }
    Err(Error::QuadratureNonConvergence(format!(
        "characteristic function tail above {:e} up to w = 1e7",
        s.tail_tol
    )))
}

/// Integrals `int_0^wmax Re[f_k / (i w)] dw` for k = 1, 2 on `panels` panels.
fn integrals(m: &Model, wmax: f64, panels: usize, nodes: &(Vec<f64>, Vec<f64>)) -> [f64; 2] {
    let width = wmax / panels as f64;
    let mut out = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let mut tracker = BranchTracker::new(k + 1);
        let mut acc = 0.0;
        for panel in 0..panels {
            let a = panel as f64 * width;
            for (x, w) in nodes.0.iter().zip(&nodes.1) {
                let omega = a + 0.5 * width * (x + 1.0);
                let f = tracker.parts(m, omega).f;
                acc += 0.5 * width * w * (f / Complex64::new(0.0, omega)).re;
            }
        }
        *o = acc;
    }
    out
}

/// Probabilities `(Q_1, Q_2)` at time to maturity `tau`.
pub fn probabilities<T: Real>(p: &HestonParams<T>, tau: T, s: &FourierSettings) -> Result<(f64, f64)> {
    check(p, tau)?;
    let m = Model::new(p, tau.as_f64());
    let wmax = upper_limit(&m, s)?;
    let nodes = gauss_legendre(s.nodes_per_panel);
    let mut panels = 4;
    let mut prev = integrals(&m, wmax, panels, &nodes);
    loop {
        panels *= 2;
        let next = integrals(&m, wmax, panels, &nodes);
        let change = (next[0] - prev[0]).abs().max((next[1] - prev[1]).abs()) / std::f64::consts::PI;
        prev = next;
        if change < s.abs_tol {
            break;
        }
        if panels >= s.max_panels {
            return Err(Error::QuadratureNonConvergence(format!(
                "Fourier integral still changing by {change:e} with {panels} panels"
            )));
        }
    }
    let q = |i: usize| 0.5 + prev[i] / std::f64::consts::PI;
    Ok((q(0), q(1)))
}

fn check<T: Real>(p: &HestonParams<T>, tau: T) -> Result<()> {
    p.validate()?;
    if !(tau > T::zero()) {
        return Err(invalid("tau", format!("time to maturity must be > 0, got {tau}")));
    }
    if !(p.v0 > T::zero()) {
        return Err(invalid("v0", format!("must be > 0, got {}", p.v0)));
    }
    Ok(())
}

/// Price at calendar time `t` (time to maturity `T - t`) for spot `p.spot`
/// and variance `p.v0`.
pub fn heston_price<T: Real>(kind: AnalyticKind, p: &HestonParams<T>, t: T) -> Result<T> {
    heston_price_with(kind, p, t, &FourierSettings::default())
}

pub fn heston_price_with<T: Real>(kind: AnalyticKind, p: &HestonParams<T>, t: T, s: &FourierSettings) -> Result<T> {
    let tau = p.maturity - t;
    let (q1, q2) = probabilities(p, tau, s)?;
    let tau = tau.as_f64();
    let spot = p.spot.as_f64() * (-p.r_f.as_f64() * tau).exp();
    let bond = p.strike.as_f64() * (-p.r_d.as_f64() * tau).exp();
    let price = match kind {
        AnalyticKind::Call => spot * q1 - bond * q2,
        AnalyticKind::Put => spot * (q1 - 1.0) + bond * (1.0 - q2),
        AnalyticKind::Digital => (-p.r_d.as_f64() * tau).exp() * q2,
    };
    Ok(T::lit(price))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;

    fn norm_cdf(x: f64) -> f64 {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
    }

    /// Garman-Kohlhagen call.
    fn black_scholes_call(s: f64, k: f64, vol: f64, r_d: f64, r_f: f64, tau: f64) -> f64 {
        let sd = vol * tau.sqrt();
        let d1 = ((s / k).ln() + (r_d - r_f + 0.5 * vol * vol) * tau) / sd;
        s * (-r_f * tau).exp() * norm_cdf(d1) - k * (-r_d * tau).exp() * norm_cdf(d1 - sd)
    }

    /// Call price from the "little trap" form of the characteristic function
    /// of `ln S_T`, integrated with a plain trapezoid rule on a long grid.
    fn little_trap_call(p: &HestonParams<f64>) -> f64 {
        let (kappa, theta, sigma, rho, v0) = (p.kappa, p.theta, p.sigma, p.rho, p.v0);
        let (r, q, tau, s, k) = (p.r_d, p.r_f, p.maturity, p.spot, p.strike);
        let phi = |u: Complex64| -> Complex64 {
            let i = Complex64::i();
            let beta = kappa - rho * sigma * i * u;
            let d = (beta * beta + sigma * sigma * (u * u + i * u)).sqrt();
            let g = (beta - d) / (beta + d);
            let e = (-d * tau).exp();
            let c = (r - q) * i * u * tau
                + kappa * theta / (sigma * sigma) * ((beta - d) * tau - 2.0 * ((1.0 - g * e) / (1.0 - g)).ln());
            let dd = (beta - d) / (sigma * sigma) * (1.0 - e) / (1.0 - g * e);
            (c + dd * v0 + i * u * s.ln()).exp()
        };
        let lk = k.ln();
        let n = 200_000;
        let h = 200.0 / n as f64;
        // Midpoint rule.
        let (mut p1, mut p2) = (0.0, 0.0);
        let fwd = phi(Complex64::new(0.0, -1.0));
        for j in 1..=n {
            let u = (j as f64 - 0.5) * h;
            let w = h;
            let iu = Complex64::new(0.0, u);
            let e = (-iu * lk).exp();
            p1 += w * (e * phi(Complex64::new(u, -1.0)) / (iu * fwd)).re;
            p2 += w * (e * phi(Complex64::new(u, 0.0)) / iu).re;
        }
        let pi = std::f64::consts::PI;
        let (q1, q2) = (0.5 + p1 / pi, 0.5 + p2 / pi);
        s * (-q * tau).exp() * q1 - k * (-r * tau).exp() * q2
    }

    #[test]
    fn table_closed_form_values() {
        for (k, expected) in presets::TABLE2_STRIKES.iter().zip(presets::TABLE2_CLOSED_FORM) {
            let p = presets::table1_params::<f64>(*k);
            let c = heston_price(AnalyticKind::Call, &p, 0.0).unwrap();
            assert!((c - expected).abs() < 1e-3, "K = {k}: {c} vs {expected}");
        }
    }

    #[test]
    fn digital_reference_value() {
        let p = presets::table4_params::<f64>();
        let d = heston_price(AnalyticKind::Digital, &p, 0.0).unwrap();
        assert!(((d - presets::DIGITAL_REFERENCE) / presets::DIGITAL_REFERENCE).abs() < 1e-4, "{d}");
    }

    #[test]
    fn agrees_with_little_trap_oracle() {
        for k in [80.0, 100.0, 130.0] {
            let mut p = presets::table1_params::<f64>(k);
            p.rho = -0.7;
            p.sigma = 0.6;
            let ours = heston_price(AnalyticKind::Call, &p, 0.0).unwrap();
            let oracle = little_trap_call(&p);
            assert!((ours - oracle).abs() < 1e-6, "K = {k}: {ours} vs {oracle}");
        }
    }

    #[test]
    fn black_scholes_limit() {
        let mut p = presets::table1_params::<f64>(100.0);
        p.sigma = 1e-6;
        p.rho = 0.0;
        p.v0 = p.theta;
        for k in [80.0, 100.0, 120.0] {
            p.strike = k;
            let c = heston_price(AnalyticKind::Call, &p, 0.0).unwrap();
            let bs = black_scholes_call(p.spot, k, p.theta.sqrt(), p.r_d, p.r_f, p.maturity);
            assert!((c - bs).abs() < 1e-4, "K = {k}: {c} vs {bs}");
        }
    }

    #[test]
    fn digital_is_minus_call_strike_derivative() {
        let p = presets::table1_params::<f64>(100.0);
        let delta = 1e-4 * p.strike;
        let call = |k: f64| heston_price(AnalyticKind::Call, &HestonParams { strike: k, ..p }, 0.0).unwrap();
        let fd = -(call(p.strike + delta) - call(p.strike - delta)) / (2.0 * delta);
        let d = heston_price(AnalyticKind::Digital, &p, 0.0).unwrap();
        assert!((d - fd).abs() < 1e-5, "{d} vs {fd}");
    }

    #[test]
    fn rejects_expired_contracts() {
        let p = presets::table1_params::<f64>(100.0);
        assert!(heston_price(AnalyticKind::Call, &p, p.maturity).is_err());
    }

    #[test]
    fn char_fn_is_one_at_zero_frequency() {
        let p = presets::table1_params::<f64>(100.0);
        for k in 1..=2 {
            let parts = char_fn_parts(k, &[0.0], &p, 1.0);
            assert!((parts[0].f - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn put_call_parity(
            k in 60.0..160.0f64,
            rho in -0.9..0.9f64,
            sigma in 0.1..1.0f64,
            v0 in 0.02..0.5f64,
            t in 0.2..2.0f64,
        ) {
            let mut p = presets::table1_params::<f64>(k);
            p.rho = rho;
            p.sigma = sigma;
            p.v0 = v0;
            p.maturity = t;
            let c = heston_price(AnalyticKind::Call, &p, 0.0).unwrap();
            let put = heston_price(AnalyticKind::Put, &p, 0.0).unwrap();
            let parity = p.spot * (-p.r_f * t).exp() - k * (-p.r_d * t).exp();
            prop_assert!((c - put - parity).abs() < 1e-8);
        }

        #[test]
        fn call_decreases_in_strike(k in 60.0..150.0f64, gap in 0.5..10.0f64) {
            let p = presets::table1_params::<f64>(k);
            let lo = heston_price(AnalyticKind::Call, &p, 0.0).unwrap();
            let hi = heston_price(AnalyticKind::Call, &HestonParams { strike: k + gap, ..p }, 0.0).unwrap();
            prop_assert!(hi < lo);
        }
    }
}
