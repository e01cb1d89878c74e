//! Quantum Rényi entropies (natural log) and minimal output entropies of
//! `D^{\otimes n}`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_depolarizing, DepolarizingParams, SpectralLine};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::optimize::{minimize_on_sphere, SphereSearch};
use crate::sampling::{rng_for, sample_state_with, SampleKind};
use crate::state::{clip_spectrum, DensityMatrix, PureState};
use crate::tol;

/// Rényi order `p > 0`; `p = 1` selects the von Neumann entropy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub const VON_NEUMANN: RenyiOrder = RenyiOrder(1.0);

    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!("Rényi order p = {p} must be finite and > 0")));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_von_neumann(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for RenyiOrder {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<RenyiOrder> for f64 {
    fn from(p: RenyiOrder) -> f64 {
        p.0
    }
}

impl fmt::Display for RenyiOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Entropy of a weighted spectrum `(value, multiplicity)`.
fn entropy_of_lines<I>(lines: I, p: RenyiOrder) -> f64
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let kept = lines.filter(|&(l, _)| l > tol::ENTROPY_ZERO);
    if p.is_von_neumann() {
        return -kept.map(|(l, m)| m * l * l.ln()).sum::<f64>();
    }
    let q = p.value() - 1.0;
    if q.abs() > 0.5 {
        // log-sum-exp of p ln l
        let logs: Vec<(f64, f64)> = kept.map(|(l, m)| (p.value() * l.ln(), m)).collect();
        let top = logs.iter().map(|&(x, _)| x).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|&(x, m)| m * (x - top).exp()).sum();
        return (top + sum.ln()) / -q;
    }
    // ln Tr rho^p = ln(1 + (sum l - 1) + sum l (l^(p-1) - 1)), kept accurate near p = 1
    let mass: f64 = kept.clone().map(|(l, m)| m * l).sum();
    let excess: f64 = kept.map(|(l, m)| m * l * (q * l.ln()).exp_m1()).sum();
    ((mass - 1.0) + excess).ln_1p() / -q
}

/// `S_p` of a list of eigenvalues. Values in `[-1e-10, 0)` are clipped.
pub fn renyi_entropy_spectrum(eigenvalues: &[f64], p: RenyiOrder) -> Result<f64> {
    let vals = clip_spectrum(eigenvalues.to_vec())?;
    Ok(entropy_of_lines(vals.iter().map(|&l| (l, 1.0)), p))
}

/// `S_p` of a spectrum given as distinct values with multiplicities.
pub fn renyi_entropy_lines(lines: &[SpectralLine], p: RenyiOrder) -> f64 {
    entropy_of_lines(lines.iter().map(|l| (l.value, l.multiplicity as f64)), p)
}

/// `S_p(rho)` in nats.
pub fn renyi_entropy(rho: &DensityMatrix, p: RenyiOrder) -> Result<f64> {
    Ok(entropy_of_lines(rho.spectrum()?.into_iter().map(|l| (l, 1.0)), p))
}

/// Minimal output entropy of `D^{\otimes n}`, attained on product inputs:
/// `n/(1-p) ln(a^p + (d-1) b^p)`, or `n(-a ln a - (d-1) b ln b)` at `p = 1`.
pub fn min_output_renyi_closed(params: &DepolarizingParams, p: RenyiOrder) -> f64 {
    let (a, b) = (params.a(), params.b());
    let mult = params.d() as f64 - 1.0;
    let n = params.n() as f64;
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    if p.is_von_neumann() {
        return -n * (xlnx(a) + mult * xlnx(b));
    }
    let p = p.value();
    n * (a.powf(p) + mult * b.powf(p)).ln() / (1.0 - p)
}

#[derive(Debug, Clone)]
pub struct NumericMin {
    pub value: f64,
    pub argmin: PureState,
}

/// Output entropy `S_p(D^{\otimes n}|psi><psi|)`.
pub fn output_entropy(params: &DepolarizingParams, psi: &PureState, p: RenyiOrder) -> Result<f64> {
    renyi_entropy(&apply_depolarizing(params, &psi.projector())?, p)
}

/// Minimum of the output entropy over all pure inputs (entangled included),
/// by derivative-free coordinate search on the unit sphere with random
/// restarts. The value is an upper bound on the true minimum.
pub fn min_output_renyi_numeric(
    params: &DepolarizingParams,
    p: RenyiOrder,
    restarts: usize,
    seed: u64,
) -> Result<NumericMin> {
    min_output_renyi_numeric_with(params, p, restarts, &mut rng_for(seed, 0), &SphereSearch::default())
}

pub fn min_output_renyi_numeric_with<R: Rng + ?Sized>(
    params: &DepolarizingParams,
    p: RenyiOrder,
    restarts: usize,
    rng: &mut R,
    search: &SphereSearch,
) -> Result<NumericMin> {
    let (d, n) = (params.d(), params.n());
    let objective = |amps: &[C64]| -> f64 {
        let psi = PureState::from_parts_unchecked(d, n, amps.to_vec());
        output_entropy(params, &psi, p).unwrap_or(f64::INFINITY)
    };
    let mut best: Option<(f64, Vec<C64>)> = None;
    for _ in 0..restarts.max(1) {
        let start = sample_state_with(SampleKind::Haar, d, n, rng)?;
        let (value, amps) = minimize_on_sphere(&objective, start.amplitudes().to_vec(), search);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, amps));
        }
    }
    let (_, amps) = best.expect("at least one restart");
    let argmin = PureState::normalized(d, n, amps)?;
    let value = output_entropy(params, &argmin, p)?;
    Ok(NumericMin { value, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::product_output_spectrum;
    use crate::sampling::{sample_mixed, sample_state};

    fn order(p: f64) -> RenyiOrder {
        RenyiOrder::new(p).unwrap()
    }

    #[test]
    fn order_validation() {
        assert!(RenyiOrder::new(0.0).is_err());
        assert!(RenyiOrder::new(-2.0).is_err());
        assert!(RenyiOrder::new(f64::INFINITY).is_err());
        assert!(order(1.0).is_von_neumann());
        assert!(!order(1.0 + 1e-9).is_von_neumann());
    }

    #[test]
    fn maximally_mixed_and_pure() {
        for (d, n) in [(2, 1), (3, 2), (2, 3)] {
            let mixed = DensityMatrix::maximally_mixed(d, n).unwrap();
            let pure = sample_state(SampleKind::Haar, d, n, 3).unwrap().projector();
            for p in [0.5, 1.0, 2.0, 7.0] {
                let s = renyi_entropy(&mixed, order(p)).unwrap();
                assert!((s - n as f64 * (d as f64).ln()).abs() < 1e-12, "{d} {n} {p}: {s}");
                assert!(renyi_entropy(&pure, order(p)).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qubit_collision_entropy() {
        let rho = DensityMatrix::from_diagonal(2, 1, &[0.75, 0.25]).unwrap();
        let s = renyi_entropy(&rho, order(2.0)).unwrap();
        assert!((s + 0.625f64.ln()).abs() < 1e-15);
        assert!((s - 0.470004).abs() < 1e-6);
    }

    #[test]
    fn spectrum_validation() {
        assert!(renyi_entropy_spectrum(&[1.0 + 1e-3, -1e-3], order(2.0)).is_err());
        let s = renyi_entropy_spectrum(&[1.0, -1e-12], order(2.0)).unwrap();
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        for (d, n) in [(2, 1), (3, 4)] {
            for p in [0.5, 1.0, 2.0, 5.0] {
                let zero = DepolarizingParams::new(0.0, d, n).unwrap();
                let one = DepolarizingParams::new(1.0, d, n).unwrap();
                let s0 = min_output_renyi_closed(&zero, order(p));
                assert!((s0 - n as f64 * (d as f64).ln()).abs() < 1e-12);
                assert!(min_output_renyi_closed(&one, order(p)).abs() < 1e-15);
            }
        }
        let params = DepolarizingParams::new(0.5, 2, 3).unwrap();
        let s = min_output_renyi_closed(&params, order(2.0));
        assert!((s - 1.410011).abs() < 1e-6);
        let via_spectrum = renyi_entropy_lines(&product_output_spectrum(&params), order(2.0));
        assert!((s - via_spectrum).abs() < 1e-12);
    }

    #[test]
    fn closed_form_is_additive() {
        let one = DepolarizingParams::new(0.3, 3, 1).unwrap();
        for n in 1..5 {
            let many = one.with_sites(n).unwrap();
            for p in [1.0, 2.0, 3.5] {
                let lhs = min_output_renyi_closed(&many, order(p));
                let rhs = n as f64 * min_output_renyi_closed(&one, order(p));
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn monotone_in_order() {
        let mut rng = rng_for(12, 0);
        for _ in 0..20 {
            let rho = sample_mixed(2, 2, 3, &mut rng).unwrap();
            let ps = [0.3, 0.7, 1.0, 1.5, 2.0, 4.0, 10.0];
            let vals: Vec<f64> = ps.iter().map(|&p| renyi_entropy(&rho, order(p)).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{vals:?}");
        }
    }

    #[test]
    fn continuity_at_one() {
        let mut rng = rng_for(13, 0);
        for _ in 0..10 {
            let rho = sample_mixed(3, 1, 2, &mut rng).unwrap();
            let s1 = renyi_entropy(&rho, RenyiOrder::VON_NEUMANN).unwrap();
            for p in [1.0 - 1e-6, 1.0 + 1e-6] {
                assert!((renyi_entropy(&rho, order(p)).unwrap() - s1).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn numeric_single_qubit_any_input_is_optimal() {
        let params = DepolarizingParams::new(0.5, 2, 1).unwrap();
        let r = min_output_renyi_numeric(&params, order(2.0), 2, 1).unwrap();
        assert!((r.value - 0.470004).abs() < 1e-6);
        let other = output_entropy(&params, &sample_state(SampleKind::Haar, 2, 1, 77).unwrap(), order(2.0)).unwrap();
        assert!((other - r.value).abs() < 1e-12);
    }

    #[test]
    fn numeric_two_qubits_matches_closed_form() {
        let params = DepolarizingParams::new(0.5, 2, 2).unwrap();
        let r = min_output_renyi_numeric(&params, order(2.0), 3, 2).unwrap();
        assert!((r.value - 0.940008).abs() < 1e-6, "{}", r.value);
        let closed = min_output_renyi_closed(&params, order(2.0));
        assert!(r.value >= closed - 1e-6);
    }

    #[test]
    fn numeric_identity_channel() {
        let params = DepolarizingParams::new(1.0, 2, 2).unwrap();
        let r = min_output_renyi_numeric(&params, order(3.0), 1, 3).unwrap();
        assert!(r.value.abs() < 1e-12);
    }
}
