//! Best product-state approximation of a pure state.
//!
//! Alternating maximization: with all factors but site `k` fixed, the overlap
//! `<phi_1 ... phi_n|psi>` is linear in `conj(phi_k)`, so the best local
//! vector is the normalized partial contraction. Each sweep cannot decrease
//! the fidelity; random restarts handle the local maxima.

use rand::Rng;

use crate::error::Result;
use crate::linalg::C64;
use crate::sampling::{rng_for, sample_state_with, SampleKind};
use crate::state::{fidelity_pure, tensor, PureState};

pub const DEFAULT_RESTARTS: usize = 32;
const MAX_SWEEPS: usize = 1000;
const SWEEP_TOL: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct ProductFidelity {
    /// `|<psi|phi_1, ..., phi_n>|^2` at `factors`, recomputed from the tensor.
    pub value: f64,
    pub factors: Vec<PureState>,
}

impl ProductFidelity {
    pub fn state(&self) -> PureState {
        tensor(&self.factors).expect("factors share a local dimension")
    }
}

/// Contracts `psi` with `conj(factors[j])` on every site except `site`.
fn contract_except(psi: &PureState, factors: &[Vec<C64>], site: usize) -> Vec<C64> {
    let d = psi.local_dim();
    let n = psi.sites();
    let mut out = vec![C64::new(0.0, 0.0); d];
    for (idx, amp) in psi.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut rest = idx;
        let mut weight = *amp;
        let mut local = 0;
        for s in (0..n).rev() {
            let digit = rest % d;
            rest /= d;
            if s == site {
                local = digit;
            } else {
                weight *= factors[s][digit].conj();
            }
        }
        out[local] += weight;
    }
    out
}

fn local_search(psi: &PureState, mut factors: Vec<Vec<C64>>) -> (f64, Vec<Vec<C64>>) {
    let n = psi.sites();
    let mut best = 0.0;
    for _ in 0..MAX_SWEEPS {
        let mut value = 0.0;
        for site in 0..n {
            let v = contract_except(psi, &factors, site);
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                factors[site] = v.iter().map(|z| z / norm).collect();
            }
            value = norm * norm;
        }
        if value - best <= SWEEP_TOL {
            best = best.max(value);
            break;
        }
        best = value;
    }
    (best, factors)
}

/// Best fidelity with a product state found over `restarts` random starts.
///
/// The value is a lower bound on the true maximum. Restarts draw from a single
/// seeded stream, so more restarts never give a smaller value.
pub fn max_product_fidelity(psi: &PureState, restarts: usize, seed: u64) -> Result<ProductFidelity> {
    let mut rng = rng_for(seed, 0);
    max_product_fidelity_with(psi, restarts, &mut rng)
}

pub fn max_product_fidelity_with<R: Rng + ?Sized>(
    psi: &PureState,
    restarts: usize,
    rng: &mut R,
) -> Result<ProductFidelity> {
    let d = psi.local_dim();
    let n = psi.sites();
    let mut best: Option<(f64, Vec<Vec<C64>>)> = None;
    for _ in 0..restarts.max(1) {
        let start = (0..n)
            .map(|_| sample_state_with(SampleKind::Haar, d, 1, rng).map(|s| s.amplitudes().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let (value, factors) = local_search(psi, start);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, factors));
        }
    }
    let (_, factors) = best.expect("at least one restart");
    let factors = factors
        .into_iter()
        .map(|f| PureState::normalized(d, 1, f))
        .collect::<Result<Vec<_>>>()?;
    let value = fidelity_pure(psi, &tensor(&factors)?)?;
    Ok(ProductFidelity { value, factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_state;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn product_input_is_exact() {
        let psi = PureState::zero(2, 3).unwrap();
        let r = max_product_fidelity(&psi, 4, 0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!((fidelity_pure(&r.state(), &psi).unwrap() - 1.0).abs() < 1e-12);

        let prod = sample_state(SampleKind::Product, 3, 3, 9).unwrap();
        let r = max_product_fidelity(&prod, 4, 1).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_state_gives_one_half() {
        let bell = PureState::normalized(2, 2, vec![c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        let r = max_product_fidelity(&bell, 8, 3).unwrap();
        assert!((r.value - 0.5).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn bell_state_grid_oracle() {
        // brute-force over real Bloch-plane angles and a relative phase
        let bell = PureState::normalized(2, 2, vec![c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        let steps = 60;
        let mut best = 0.0f64;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..8 {
                    let (a, b) = (
                        std::f64::consts::PI * i as f64 / steps as f64,
                        std::f64::consts::PI * j as f64 / steps as f64,
                    );
                    let phase = C64::from_polar(1.0, std::f64::consts::PI * k as f64 / 4.0);
                    let u = PureState::new(2, 1, vec![c((a / 2.0).cos()), phase * (a / 2.0).sin()]).unwrap();
                    let v = PureState::new(2, 1, vec![c((b / 2.0).cos()), phase.conj() * (b / 2.0).sin()]).unwrap();
                    best = best.max(fidelity_pure(&bell, &tensor(&[u, v]).unwrap()).unwrap());
                }
            }
        }
        assert!((best - 0.5).abs() < 1e-9);
    }

    #[test]
    fn near_product_not_below_anchor() {
        let psi = PureState::new(2, 2, vec![c(0.99f64.sqrt()), c(0.0), c(0.0), c(0.01f64.sqrt())]).unwrap();
        let r = max_product_fidelity(&psi, DEFAULT_RESTARTS, 5).unwrap();
        assert!(r.value >= 0.99 - 1e-12);
    }

    #[test]
    fn argmax_is_certified() {
        let psi = sample_state(SampleKind::Haar, 3, 2, 17).unwrap();
        let r = max_product_fidelity(&psi, 8, 2).unwrap();
        assert!(r.value > 0.0 && r.value <= 1.0);
        assert_eq!(r.factors.len(), 2);
        let again = fidelity_pure(&psi, &r.state()).unwrap();
        assert_eq!(again, r.value);
        // for two sites the optimum is the largest squared Schmidt coefficient
        let m = nalgebra::DMatrix::from_row_slice(3, 3, psi.amplitudes());
        let s = m.singular_values();
        let top = s.iter().cloned().fold(0.0, f64::max);
        assert!((r.value - top * top).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_restarts() {
        let psi = sample_state(SampleKind::Haar, 2, 4, 99).unwrap();
        let mut last = 0.0;
        for restarts in [1, 2, 4, 8, 16] {
            let v = max_product_fidelity(&psi, restarts, 7).unwrap().value;
            assert!(v >= last - 1e-15, "{restarts}: {v} < {last}");
            last = v;
        }
    }
}
