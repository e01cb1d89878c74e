//! Seeded random states.
//!
//! All samplers draw from `ChaCha8Rng`, so a `(seed, stream)` pair pins the
//! output bit-for-bit across platforms and `rand` releases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::state::{checked_dim, hamming_weight, tensor, DensityMatrix, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    /// Uniform on the unit sphere of `(C^d)^n`.
    Haar,
    /// Tensor product of `n` independent Haar single-site states.
    Product,
}

/// RNG for `seed` on an independent `stream`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn sample_state_with<R: Rng + ?Sized>(kind: SampleKind, d: usize, n: usize, rng: &mut R) -> Result<PureState> {
    let dim = checked_dim(d, n)?;
    match kind {
        SampleKind::Haar => PureState::normalized(d, n, gaussian_vector(dim, rng)),
        SampleKind::Product => {
            let factors = (0..n)
                .map(|_| PureState::normalized(d, 1, gaussian_vector(d, rng)))
                .collect::<Result<Vec<_>>>()?;
            tensor(&factors)
        }
    }
}

pub fn sample_state(kind: SampleKind, d: usize, n: usize, seed: u64) -> Result<PureState> {
    sample_state_with(kind, d, n, &mut rng_for(seed, 0))
}

/// Random unit vector supported on basis states of Hamming weight
/// `>= min_weight`. With `min_weight >= 1` the result is orthogonal to
/// `|0...0>`.
pub fn sample_perpendicular<R: Rng + ?Sized>(d: usize, n: usize, min_weight: usize, rng: &mut R) -> Result<PureState> {
    let dim = checked_dim(d, n)?;
    if min_weight > n {
        return Err(Error::Domain(format!(
            "no basis states of weight >= {min_weight} on {n} sites"
        )));
    }
    let mut amps = gaussian_vector(dim, rng);
    for (idx, a) in amps.iter_mut().enumerate() {
        if hamming_weight(idx, d) < min_weight {
            *a = C64::new(0.0, 0.0);
        }
    }
    PureState::normalized(d, n, amps)
}

/// Random mixed state `G G^† / Tr(G G^†)` with `G` a `d^n x rank` Ginibre matrix.
pub fn sample_mixed<R: Rng + ?Sized>(d: usize, n: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    let dim = checked_dim(d, n)?;
    if rank == 0 {
        return Err(Error::Domain("rank must be positive".into()));
    }
    let g = ComplexMatrix::from_row_major(dim, rank, &gaussian_vector(dim * rank, rng))?;
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    DensityMatrix::new(d, n, gg.scale(1.0 / tr).hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::fidelity_pure;

    #[test]
    fn deterministic_for_fixed_seed() {
        for kind in [SampleKind::Haar, SampleKind::Product] {
            let a = sample_state(kind, 3, 2, 42).unwrap();
            let b = sample_state(kind, 3, 2, 42).unwrap();
            assert_eq!(a, b);
            let c = sample_state(kind, 3, 2, 43).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn product_samples_factorize() {
        let psi = sample_state(SampleKind::Product, 2, 3, 7).unwrap();
        // a product state has every single-site reduced state pure
        let rho = psi.projector();
        for site in 0..3 {
            let mut red = rho.clone();
            for other in (0..3).rev().filter(|&s| s != site) {
                red = crate::state::partial_trace(&red, other).unwrap();
            }
            let spec = red.spectrum().unwrap();
            assert!((spec[1] - 1.0).abs() < 1e-12, "site {site}: {spec:?}");
        }
    }

    #[test]
    fn haar_first_moment() {
        // E|<0|psi>|^2 = 1/2 on the qubit sphere, variance 1/12
        let mut rng = rng_for(2024, 0);
        let zero = PureState::zero(2, 1).unwrap();
        let samples = 10_000;
        let mean: f64 = (0..samples)
            .map(|_| {
                let psi = sample_state_with(SampleKind::Haar, 2, 1, &mut rng).unwrap();
                fidelity_pure(&zero, &psi).unwrap()
            })
            .sum::<f64>()
            / samples as f64;
        let sigma = (1.0f64 / 12.0 / samples as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean = {mean}");
    }

    #[test]
    fn perpendicular_respects_weight() {
        let mut rng = rng_for(1, 0);
        let phi = sample_perpendicular(3, 3, 2, &mut rng).unwrap();
        for (idx, a) in phi.amplitudes().iter().enumerate() {
            if hamming_weight(idx, 3) < 2 {
                assert_eq!(*a, C64::new(0.0, 0.0));
            }
        }
        assert!(sample_perpendicular(2, 2, 3, &mut rng).is_err());
    }

    #[test]
    fn mixed_samples_are_valid() {
        let mut rng = rng_for(5, 0);
        let rho = sample_mixed(3, 2, 4, &mut rng).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.spectrum().unwrap()[0] >= 0.0);
    }
}
