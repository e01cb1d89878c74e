//! Bound functions `f_p` and `f`, the accept/reject coefficients, the gap
//! between them, and the verdict classifier.
//!
//! With `r = a/b`, `N = a^p + (d-1) b^p`,
//!
//! ```text
//! f_p(x) = p/(1-p) [ (a^{x(p-1)} - b^{x(p-1)}) / (a^x - b^x) (λ²/N)^x
//!                    + ((a^{p-1} b + a b^{p-1} + (d-2) b^p) / N)^x - 1 ]
//! ```
//!
//! is the `t^2` coefficient of the output entropy for a perturbation of
//! Hamming weight `x`. Everything below is computed in the equivalent
//! `r`-form, in log space, so large `x` and large `p` neither overflow nor
//! lose the small terms.

use serde::{Deserialize, Serialize};

use crate::channel::DepolarizingParams;
use crate::entropy::RenyiOrder;
use crate::error::{Error, Result};
use crate::state::WeightDecomposition;

/// Which printed form of `f_p` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FpVariant {
    /// Agrees with the accept coefficient at `x = 2` and with the entropy expansion.
    Canonical,
    /// Carries an extra `(d + r - 1)^{-2x}` in the first term.
    AsPrinted,
}

/// `ln((R^{p-1} - 1) / (R - 1))` for `R = e^u`, `u >= 0`, `p > 1`; the `u -> 0`
/// limit is `ln(p - 1)`.
fn ln_power_quotient(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        return (p - 1.0).ln();
    }
    let q = p - 1.0;
    // (e^{qu} - 1)/(e^u - 1) = e^{(q-1)u} (1 - e^{-qu}) / (1 - e^{-u})
    (q - 1.0) * u + (-(-q * u).exp_m1()).ln() - (-(-u).exp_m1()).ln()
}

fn require_x(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x = {x} must be finite and >= 0")));
    }
    Ok(())
}

fn require_order_above_one(p: RenyiOrder) -> Result<f64> {
    let p = p.value();
    if !(p > 1.0) {
        return Err(Error::Domain(format!("f_p needs p > 1, got {p}; use f_vn at p = 1")));
    }
    Ok(p)
}

/// `f_p(x)` for `p > 1`. The bound is stated for `p >= 2`; orders in `(1, 2)`
/// are accepted for scans.
pub fn f_p(x: f64, params: &DepolarizingParams, p: RenyiOrder, variant: FpVariant) -> Result<f64> {
    require_x(x)?;
    let r = params.require_open()?;
    let p = require_order_above_one(p)?;
    let d = params.d() as f64;
    let ln_r = r.ln();
    let ln_norm = (r.powf(p) + d - 1.0).ln();
    let mut ln_ratio = 2.0 * (r - 1.0).ln() - ln_norm;
    if variant == FpVariant::AsPrinted {
        ln_ratio -= 2.0 * (d + r - 1.0).ln();
    }
    let first = (ln_power_quotient(x * ln_r, p) + x * ln_ratio).exp();
    // (r^{p-1} + r + d - 2) / (r^p + d - 1), via logs for large r^p
    let ln_second = ((r.powf(p - 1.0) + r + d - 2.0).ln() - ln_norm) * x;
    let bracket = first + ln_second.exp_m1();
    Ok(p / (1.0 - p) * bracket)
}

/// `f(x) = x (a - b) ln(a/b) - (a - b)^{2x} (ln a^x - ln b^x) / (a^x - b^x)`,
/// the `p -> 1` limit of `f_p`.
pub fn f_vn(x: f64, params: &DepolarizingParams) -> Result<f64> {
    require_x(x)?;
    let r = params.require_open()?;
    let (lambda, b) = (params.lambda(), params.b());
    let u = x * r.ln();
    // (ln a^x - ln b^x)/(a^x - b^x) = b^{-x} u / (e^u - 1)
    let quotient = if u == 0.0 { 1.0 } else { u / u.exp_m1() };
    let weight = (x * (lambda * lambda / b).ln()).exp();
    Ok(u * lambda - weight * quotient)
}

/// `f_p` at `p > 1` and `f` at `p = 1`, canonical form.
pub fn bound_function(x: f64, params: &DepolarizingParams, p: RenyiOrder) -> Result<f64> {
    if p.is_von_neumann() {
        f_vn(x, params)
    } else {
        f_p(x, params, p, FpVariant::Canonical)
    }
}

/// `(r^{p-1} - 1)(2 r^p + d r + d - 2) / (r^p + d - 1)^2`, scaled by `r^{-2p}`
/// top and bottom so it stays finite for large `p`.
fn threshold_ratio(r: f64, d: f64, p: f64) -> f64 {
    let s = r.powf(-p);
    (1.0 / r - s) * (2.0 + (d * r + d - 2.0) * s) / (1.0 + (d - 1.0) * s).powi(2)
}

/// Coefficient of `ε` in the accept threshold,
/// `2 p/(p-1) (r-1)/(r+1) (r^{p-1}-1)(2r^p+dr+d-2)/(r^p+d-1)^2`.
/// At `p = 1` this is the limit `f(2)`.
pub fn accept_coeff(params: &DepolarizingParams, p: RenyiOrder) -> Result<f64> {
    let r = params.require_open()?;
    if p.is_von_neumann() {
        return f_vn(2.0, params);
    }
    let p = require_order_above_one(p)?;
    let d = params.d() as f64;
    Ok(2.0 * p / (p - 1.0) * (r - 1.0) / (r + 1.0) * threshold_ratio(r, d, p))
}

/// Coefficient of `ε` in the reject threshold, `p/(p-1)`. Undefined at `p = 1`.
pub fn reject_coeff(p: RenyiOrder) -> Result<f64> {
    let p = require_order_above_one(p).map_err(|_| {
        Error::Domain(format!("the reject coefficient p/(p-1) is undefined at p = {p}"))
    })?;
    Ok(p / (p - 1.0))
}

/// `gap(p) = p/(p-1) (1 - 2(r-1)(r^{p-1}-1)(2r^p+dr+d-2)/((r+1)(r^p+d-1)^2))`.
pub fn gap(params: &DepolarizingParams, p: RenyiOrder) -> Result<f64> {
    let r = params.require_open()?;
    let p = require_order_above_one(p)?;
    let d = params.d() as f64;
    Ok(p / (p - 1.0) * (1.0 - 2.0 * (r - 1.0) / (r + 1.0) * threshold_ratio(r, d, p)))
}

/// `lim_{p -> ∞} gap(p) = (r^2 - 3r + 4) / (r (r + 1))`.
pub fn gap_limit(params: &DepolarizingParams) -> Result<f64> {
    let r = params.require_open()?;
    Ok(gap_limit_r(r))
}

pub fn gap_limit_r(r: f64) -> f64 {
    (r * r - 3.0 * r + 4.0) / (r * (r + 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityThresholds {
    pub params: DepolarizingParams,
    pub p: RenyiOrder,
    pub accept_coeff: f64,
    /// `None` at `p = 1`.
    pub reject_coeff: Option<f64>,
    pub gap: Option<f64>,
}

impl StabilityThresholds {
    pub fn new(params: &DepolarizingParams, p: RenyiOrder) -> Result<Self> {
        let accept = accept_coeff(params, p)?;
        let (reject, gap) = if p.is_von_neumann() {
            (None, None)
        } else {
            (Some(reject_coeff(p)?), Some(gap(params, p)?))
        };
        Ok(Self {
            params: *params,
            p,
            accept_coeff: accept,
            reject_coeff: reject,
            gap,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Accept,
    Reject,
    Undecided,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
            Verdict::Undecided => "undecided",
        }
    }
}

/// Leading-order verdict: accept below `S_min + ε accept`, reject at or above
/// `S_min + ε reject`, undecided in between. Without a reject coefficient
/// (`p = 1`) the verdict is never `Reject`.
pub fn classify(s_value: f64, eps: f64, thresholds: &StabilityThresholds, s_min: f64) -> Verdict {
    if let Some(rej) = thresholds.reject_coeff {
        if s_value >= s_min + eps * rej {
            return Verdict::Reject;
        }
    }
    if s_value < s_min + eps * thresholds.accept_coeff {
        Verdict::Accept
    } else {
        Verdict::Undecided
    }
}

/// `ε0 Σ_{k >= 1} w_k f_p(k)`, the leading entropy excess of
/// `sqrt(1-ε0)|0...0> + sqrt(ε0)|phi>` over the minimum.
pub fn predicted_excess(
    weights: &WeightDecomposition,
    eps0: f64,
    params: &DepolarizingParams,
    p: RenyiOrder,
) -> Result<f64> {
    let w0 = weights.get(0);
    if w0 > 1e-12 {
        return Err(Error::Domain(format!(
            "direction has weight {w0:.3e} on |0...0>, expected an orthogonal one"
        )));
    }
    if !(0.0..=1.0).contains(&eps0) {
        return Err(Error::Domain(format!("eps0 = {eps0} must lie in [0, 1]")));
    }
    let mut acc = 0.0;
    for (k, w) in weights.nonzero() {
        if k == 0 {
            continue;
        }
        acc += w * bound_function(k as f64, params, p)?;
    }
    Ok(eps0 * acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityScan {
    /// `min_x f(x+1) - f(x)` over integer `x` in `[2, x_max - 1]`.
    pub worst_step: f64,
    pub worst_at: u32,
}

/// Scans consecutive differences of the canonical bound function on
/// `x = 2, ..., x_max`.
pub fn monotonicity_scan(params: &DepolarizingParams, p: RenyiOrder, x_max: u32) -> Result<MonotonicityScan> {
    if x_max < 3 {
        return Err(Error::Domain(format!("x_max = {x_max} must be at least 3")));
    }
    let mut prev = bound_function(2.0, params, p)?;
    let mut worst = MonotonicityScan {
        worst_step: f64::INFINITY,
        worst_at: 2,
    };
    for x in 2..x_max {
        let next = bound_function(f64::from(x + 1), params, p)?;
        let step = next - prev;
        if step < worst.worst_step {
            worst = MonotonicityScan { worst_step: step, worst_at: x };
        }
        prev = next;
    }
    Ok(worst)
}

/// Factors of the derivative of the first term of `f_p`,
/// `A [B ln((r^p+d-1)/(r^{p-1}(r-1)^2)) + C ln r]`, with
/// `A = p/(1-p) ((r-1)^2/(r^p+d-1))^x / (r^x-1)^2`,
/// `B = (r^x-1)(1-r^{x(p-1)})`, `C = -r^{xp} + p(r^x-1) + 1`.
/// Stored as `A r^{xp}`, `B r^{-xp}` and `C r^{-xp}` so that large `x p`
/// does not overflow; signs and the product are unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeFactors {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DerivativeFactors {
    pub fn new(r: f64, d: u32, p: f64, x: f64) -> Self {
        let u = x * r.ln();
        let d = f64::from(d);
        let ln_ratio = (2.0 * (r - 1.0).ln()) - (r.powf(p) + d - 1.0).ln();
        // 1 - r^{-x}
        let lead = -(-u).exp_m1();
        Self {
            a: p / (1.0 - p) * (x * ln_ratio + (p - 2.0) * u - 2.0 * lead.ln()).exp(),
            b: lead * (-(p - 1.0) * u).exp_m1(),
            c: -1.0 + p * ((-(p - 1.0) * u).exp() - (-p * u).exp()) + (-p * u).exp(),
        }
    }

    /// `A <= 0` and `C <= B <= 0`, up to rounding (`C = B` at `p = 2`).
    pub fn signs_hold(&self) -> bool {
        self.a <= 0.0 && self.c <= self.b + 1e-12 * self.b.abs() && self.b <= 0.0
    }

    /// Derivative of the first term, assembled from the factors.
    pub fn first_term_derivative(&self, r: f64, d: u32, p: f64) -> f64 {
        let d = f64::from(d);
        let log_term = ((r.powf(p) + d - 1.0) / (r.powf(p - 1.0) * (r - 1.0).powi(2))).ln();
        self.a * (self.b * log_term + self.c * r.ln())
    }
}

/// Derivative of the second term `p/(1-p) s^x` with
/// `s = (r^{p-1}+r+d-2)/(r^p+d-1)`; nonnegative for `p > 1`.
pub fn second_term_derivative(r: f64, d: u32, p: f64, x: f64) -> f64 {
    let d = f64::from(d);
    let s = (r.powf(p - 1.0) + r + d - 2.0) / (r.powf(p) + d - 1.0);
    p / (1.0 - p) * s.powf(x) * s.ln()
}

/// `h(r) = r^3 - 3r^2 + (10 - 2d) r + 14d - 10`.
pub fn h_poly(r: f64, d: u32) -> f64 {
    let d = f64::from(d);
    ((r - 3.0) * r + (10.0 - 2.0 * d)) * r + 14.0 * d - 10.0
}

/// Stationary point of `h` in `r > 1`, which exists for `d >= 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HCritical {
    /// `1 + sqrt(6d - 21)/3`.
    pub r: f64,
    /// `h` evaluated there.
    pub value: f64,
    /// The closed form `2 sqrt(6d-21)/3 - 2 + 12d`.
    pub printed_value: f64,
    /// `12d - 2 - (2/27)(6d - 21)^{3/2}`, the value obtained by expanding `h` around `r = 1`.
    pub corrected_value: f64,
}

impl HCritical {
    pub fn new(d: u32) -> Option<Self> {
        if d < 4 {
            return None;
        }
        let df = f64::from(d);
        let s = (6.0 * df - 21.0).sqrt();
        let r = 1.0 + s / 3.0;
        Some(Self {
            r,
            value: h_poly(r, d),
            printed_value: 2.0 * s / 3.0 - 2.0 + 12.0 * df,
            corrected_value: 12.0 * df - 2.0 - 2.0 / 27.0 * s.powi(3),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HMinCheck {
    pub d: u32,
    /// Minimum of `h` over the grid on `(1, 100]`.
    pub grid_min: f64,
    pub grid_argmin: f64,
    pub critical: Option<HCritical>,
}

/// Grid points used by [`h_min_check`].
pub const H_GRID_POINTS: usize = 100_000;

/// Minimum of `h` over a uniform grid of `(1, 100]`, plus the stationary point for `d >= 4`.
pub fn h_min_check(d: u32) -> HMinCheck {
    let mut best = (f64::INFINITY, 1.0);
    for i in 1..=H_GRID_POINTS {
        let r = 1.0 + 99.0 * i as f64 / H_GRID_POINTS as f64;
        let h = h_poly(r, d);
        if h < best.0 {
            best = (h, r);
        }
    }
    HMinCheck {
        d,
        grid_min: best.0,
        grid_argmin: best.1,
        critical: HCritical::new(d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, d: u32) -> DepolarizingParams {
        DepolarizingParams::new(lambda, d as usize, 1).unwrap()
    }

    fn order(p: f64) -> RenyiOrder {
        RenyiOrder::new(p).unwrap()
    }

    /// Direct evaluation of the λ/a/b form, no logs.
    fn f_p_direct(x: f64, lambda: f64, d: f64, p: f64) -> f64 {
        let a = (1.0 + (d - 1.0) * lambda) / d;
        let b = (1.0 - lambda) / d;
        let n = a.powf(p) + (d - 1.0) * b.powf(p);
        let q = (a.powf(x * (p - 1.0)) - b.powf(x * (p - 1.0))) / (a.powf(x) - b.powf(x));
        let m = a.powf(p - 1.0) * b + a * b.powf(p - 1.0) + (d - 2.0) * b.powf(p);
        p / (1.0 - p) * (q * (lambda * lambda / n).powf(x) + (m / n).powf(x) - 1.0)
    }

    #[test]
    fn canonical_matches_direct_form() {
        for d in [2, 3, 5] {
            for lambda in [0.1, 0.5, 0.9] {
                for p in [1.5, 2.0, 3.0, 10.0] {
                    for x in [0.5, 1.0, 2.0, 3.0, 7.0] {
                        let v = f_p(x, &params(lambda, d), order(p), FpVariant::Canonical).unwrap();
                        let w = f_p_direct(x, lambda, d as f64, p);
                        assert!((v - w).abs() <= 1e-12 * w.abs().max(1.0), "{d} {lambda} {p} {x}: {v} vs {w}");
                    }
                }
            }
        }
    }

    #[test]
    fn fp_spot_values() {
        let pr = params(0.5, 2);
        assert!((f_p(2.0, &pr, order(2.0), FpVariant::Canonical).unwrap() - 0.96).abs() < 1e-12);
        assert!(f_p(1.0, &pr, order(3.0), FpVariant::Canonical).unwrap().abs() < 1e-14);
        let far = f_p(1e3, &pr, order(2.0), FpVariant::Canonical).unwrap();
        assert!((far - 2.0).abs() < 1e-3);
        // x -> 0: quotient -> p - 1, both powers -> 1
        for p in [2.0, 3.0, 7.5] {
            let v = f_p(0.0, &pr, order(p), FpVariant::Canonical).unwrap();
            assert!((v + p).abs() < 1e-12, "{v}");
            let near = f_p(1e-9, &pr, order(p), FpVariant::Canonical).unwrap();
            assert!((near - v).abs() < 1e-6);
        }
    }

    #[test]
    fn as_printed_variant_differs() {
        let pr = params(0.5, 2);
        let c = f_p(2.0, &pr, order(2.0), FpVariant::Canonical).unwrap();
        let printed = f_p(2.0, &pr, order(2.0), FpVariant::AsPrinted).unwrap();
        assert!((c - printed).abs() > 0.1);
        // only the first term differs, by (d + r - 1)^{-2x}
        let second = |x: f64| ((3.0f64 + 3.0 + 0.0) / (9.0 + 1.0)).powf(x) - 1.0;
        let first_c = -c / 2.0 - second(2.0);
        let first_p = -printed / 2.0 - second(2.0);
        assert!((first_p - first_c * 4f64.powf(-4.0)).abs() < 1e-14);
    }

    #[test]
    fn von_neumann_limit() {
        let pr = params(0.5, 2);
        let v = f_vn(2.0, &pr).unwrap();
        let oracle = 2.0 * 0.5 * 3f64.ln() - 0.5f64.powi(4) * 9f64.ln() / 0.5;
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 0.824).abs() < 1e-3);
        assert!(f_vn(3.0, &pr).unwrap() >= v);
        assert!(f_vn(1.0, &pr).unwrap().abs() < 1e-14);
        assert!((f_vn(0.0, &pr).unwrap() + 1.0).abs() < 1e-15);
        for d in [2, 3, 5] {
            for lambda in [0.2, 0.6] {
                let pr = params(lambda, d);
                for x in 2..=10 {
                    let x = f64::from(x);
                    let near = f_p(x, &pr, order(1.0 + 1e-5), FpVariant::Canonical).unwrap();
                    assert!((f_vn(x, &pr).unwrap() - near).abs() <= 1e-3);
                }
            }
        }
    }

    #[test]
    fn accept_reject_gap() {
        let pr = params(0.5, 2);
        assert!((accept_coeff(&pr, order(2.0)).unwrap() - 0.96).abs() < 1e-14);
        assert_eq!(reject_coeff(order(2.0)).unwrap(), 2.0);
        assert_eq!(reject_coeff(order(3.0)).unwrap(), 1.5);
        assert!((reject_coeff(order(1e9)).unwrap() - 1.0).abs() < 1e-8);
        assert!(reject_coeff(RenyiOrder::VON_NEUMANN).is_err());
        assert!((gap(&pr, order(2.0)).unwrap() - 1.04).abs() < 1e-14);
        assert!((gap_limit(&pr).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((gap(&pr, order(200.0)).unwrap() - 0.335_008).abs() < 1e-6);
        for lambda in [0.0, 1.0] {
            let edge = params(lambda, 2);
            assert!(accept_coeff(&edge, order(2.0)).is_err());
            assert!(f_p(2.0, &edge, order(2.0), FpVariant::Canonical).is_err());
            assert!(f_vn(2.0, &edge).is_err());
            assert!(gap(&edge, order(2.0)).is_err());
        }
    }

    #[test]
    fn large_order_and_strong_signal_stay_finite() {
        let pr = params(0.95, 2);
        for p in [200.0, 1e4] {
            let g = gap(&pr, order(p)).unwrap();
            let acc = accept_coeff(&pr, order(p)).unwrap();
            assert!(g.is_finite() && acc.is_finite());
            assert!((g - (reject_coeff(order(p)).unwrap() - acc)).abs() < 1e-12);
        }
    }

    #[test]
    fn thresholds_at_von_neumann() {
        let pr = params(0.5, 2);
        let t = StabilityThresholds::new(&pr, RenyiOrder::VON_NEUMANN).unwrap();
        assert_eq!(t.reject_coeff, None);
        assert_eq!(t.accept_coeff, f_vn(2.0, &pr).unwrap());
        assert_eq!(classify(0.0 + 1e3, 1e-3, &t, 0.0), Verdict::Undecided);
        assert_eq!(classify(0.0, 1e-3, &t, 0.0), Verdict::Accept);
    }

    #[test]
    fn classifier_edges() {
        let pr = params(0.5, 2);
        let t = StabilityThresholds::new(&pr, order(2.0)).unwrap();
        let (eps, smin) = (1e-3, 0.94);
        assert_eq!(classify(smin, eps, &t, smin), Verdict::Accept);
        assert_eq!(classify(smin + eps * 3.0, eps, &t, smin), Verdict::Reject);
        assert_eq!(classify(smin + eps * (0.96 + 2.0) / 2.0, eps, &t, smin), Verdict::Undecided);
        assert_eq!(classify(smin + eps * t.accept_coeff, eps, &t, smin), Verdict::Undecided);
        assert_eq!(classify(smin + eps * 2.0, eps, &t, smin), Verdict::Reject);
    }

    #[test]
    fn excess_prediction() {
        let pr = DepolarizingParams::new(0.5, 2, 2).unwrap();
        let w = WeightDecomposition::from_weights(vec![0.0, 0.0, 1.0]).unwrap();
        let v = predicted_excess(&w, 1e-4, &pr, order(2.0)).unwrap();
        assert!((v - 9.6e-5).abs() < 1e-16);
        assert_eq!(predicted_excess(&w, 0.0, &pr, order(2.0)).unwrap(), 0.0);
        let bad = WeightDecomposition::from_weights(vec![0.5, 0.0, 0.5]).unwrap();
        assert!(predicted_excess(&bad, 1e-4, &pr, order(2.0)).is_err());
    }

    #[test]
    fn monotone_scan() {
        let pr = params(0.5, 2);
        assert!(monotonicity_scan(&pr, order(2.0), 50).unwrap().worst_step >= -1e-12);
        assert!(monotonicity_scan(&pr, RenyiOrder::VON_NEUMANN, 50).unwrap().worst_step >= -1e-12);
        assert!(monotonicity_scan(&pr, order(2.0), 2).is_err());
    }

    #[test]
    fn derivative_factor_signs_and_value() {
        for d in [2, 3, 5] {
            for lambda in [0.1, 0.5, 0.9] {
                let pr = params(lambda, d);
                let r = pr.r().unwrap();
                for p in [2.0, 3.0, 6.0] {
                    for x in [2.0, 3.5, 8.0] {
                        let f = DerivativeFactors::new(r, d, p, x);
                        assert!(f.signs_hold(), "{d} {lambda} {p} {x}: {f:?}");
                        let h = 1e-5;
                        let fd = (f_p(x + h, &pr, order(p), FpVariant::Canonical).unwrap()
                            - f_p(x - h, &pr, order(p), FpVariant::Canonical).unwrap())
                            / (2.0 * h);
                        let an = f.first_term_derivative(r, d, p) + second_term_derivative(r, d, p, x);
                        assert!(second_term_derivative(r, d, p, x) >= 0.0);
                        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{fd} vs {an}");
                    }
                }
            }
        }
    }

    #[test]
    fn h_polynomial() {
        assert_eq!(h_poly(2.0, 2), 26.0);
        for d in 2..=10 {
            assert!(h_min_check(d).grid_min > 0.0);
        }
        assert!(HCritical::new(3).is_none());
        for d in 4..=10 {
            let c = HCritical::new(d).unwrap();
            assert!((c.value - c.corrected_value).abs() < 1e-9);
            assert!(c.value > 0.0);
        }
        let c = HCritical::new(5).unwrap();
        assert!((c.corrected_value - 56.0).abs() < 1e-12);
        assert!((c.printed_value - 60.0).abs() < 1e-12);
    }
}
