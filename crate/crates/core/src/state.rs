//! Pure and mixed states on `n` qudits of local dimension `d`.
//!
//! Basis index convention: `|x_0 x_1 ... x_{n-1}>` has index
//! `sum_i x_i d^(n-1-i)`, so site 0 is the leftmost tensor factor.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianSpectrum, C64};
use crate::tol;

pub(crate) fn checked_dim(d: usize, n: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::Domain(format!("local dimension d = {d} must be >= 2")));
    }
    if n < 1 {
        return Err(Error::Domain("site count n must be >= 1".into()));
    }
    u32::try_from(n)
        .ok()
        .and_then(|n| d.checked_pow(n))
        .ok_or_else(|| Error::Domain(format!("d^n overflows for d = {d}, n = {n}")))
}

/// Digits of `index` in base `d`, site 0 first.
pub fn digits(index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = rest % d;
        rest /= d;
    }
    out
}

/// Number of nonzero base-`d` symbols of `index`.
pub fn hamming_weight(index: usize, d: usize) -> usize {
    let mut rest = index;
    let mut w = 0;
    while rest > 0 {
        if rest % d != 0 {
            w += 1;
        }
        rest /= d;
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    d: usize,
    n: usize,
    amps: Vec<C64>,
}

impl PureState {
    /// Wraps a unit vector. The norm must be 1 within `1e-12`.
    pub fn new(d: usize, n: usize, amps: Vec<C64>) -> Result<Self> {
        let dim = checked_dim(d, n)?;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: amps.len(),
            });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > tol::NORM {
            return Err(Error::InvalidState(format!(
                "squared norm {norm2} differs from 1 by more than {:e}",
                tol::NORM
            )));
        }
        Ok(Self { d, n, amps })
    }

    /// Normalizes `amps` first. Fails on the zero vector.
    pub fn normalized(d: usize, n: usize, mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        for z in &mut amps {
            *z /= norm;
        }
        Self::new(d, n, amps)
    }

    pub fn basis(d: usize, n: usize, index: usize) -> Result<Self> {
        let dim = checked_dim(d, n)?;
        if index >= dim {
            return Err(Error::OutOfRange { index, bound: dim });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { d, n, amps })
    }

    /// The anchor product state `|0...0>`.
    pub fn zero(d: usize, n: usize) -> Result<Self> {
        Self::basis(d, n, 0)
    }

    pub(crate) fn from_parts_unchecked(d: usize, n: usize, amps: Vec<C64>) -> Self {
        Self { d, n, amps }
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.check_same_shape(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            d: self.d,
            n: self.n,
            m: ComplexMatrix::outer(&self.amps, &self.amps),
        }
    }

    fn check_same_shape(&self, other: &PureState) -> Result<()> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    d: usize,
    n: usize,
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(d: usize, n: usize, m: ComplexMatrix) -> Result<Self> {
        let dim = checked_dim(d, n)?;
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: m.rows().max(m.cols()),
            });
        }
        m.check_hermitian()?;
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let rho = Self { d, n, m };
        rho.spectrum()?;
        Ok(rho)
    }

    pub(crate) fn from_parts_unchecked(d: usize, n: usize, m: ComplexMatrix) -> Self {
        Self { d, n, m }
    }

    pub fn maximally_mixed(d: usize, n: usize) -> Result<Self> {
        let dim = checked_dim(d, n)?;
        Ok(Self {
            d,
            n,
            m: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        })
    }

    pub fn from_diagonal(d: usize, n: usize, diag: &[f64]) -> Result<Self> {
        Self::new(d, n, ComplexMatrix::from_diagonal(diag))
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Ascending eigenvalues with values in `[-1e-10, 0)` clipped to zero.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let raw = linalg::eigvals_hermitian(&self.m)?;
        clip_spectrum(raw)
    }

    pub fn eig(&self) -> Result<HermitianSpectrum> {
        let mut s = linalg::eig_hermitian(&self.m)?;
        s.eigenvalues = clip_spectrum(s.eigenvalues)?;
        Ok(s)
    }

    /// `rho^p` through the eigendecomposition.
    pub fn matrix_power(&self, p: f64) -> Result<ComplexMatrix> {
        matrix_power(self, p)
    }

    fn check_same_shape(&self, other: &DensityMatrix) -> Result<()> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }
}

pub(crate) fn clip_spectrum(mut vals: Vec<f64>) -> Result<Vec<f64>> {
    for v in &mut vals {
        if *v < -tol::NEGATIVE_EIGENVALUE {
            return Err(Error::InvalidState(format!(
                "eigenvalue {v:.3e} below -{:e}",
                tol::NEGATIVE_EIGENVALUE
            )));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(vals)
}

pub fn matrix_power(rho: &DensityMatrix, p: f64) -> Result<ComplexMatrix> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("matrix power exponent p = {p} must be > 0")));
    }
    let s = rho.eig()?;
    // eigenvalues at rounding level are zeros; small powers would amplify them
    Ok(s.map(|l| if l > tol::ENTROPY_ZERO { l.powf(p) } else { 0.0 }))
}

/// Trace norm of `A - B`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.check_same_shape(b)?;
    let diff = &a.m - &b.m;
    let vals = linalg::eigvals_hermitian(&diff)?;
    Ok(vals.iter().map(|l| l.abs()).sum())
}

/// `|<psi|phi>|^2`.
pub fn fidelity_pure(psi: &PureState, phi: &PureState) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr().min(1.0))
}

/// Kronecker product of single-site states.
pub fn tensor(factors: &[PureState]) -> Result<PureState> {
    let first = factors
        .first()
        .ok_or_else(|| Error::Domain("tensor of an empty factor list".into()))?;
    let d = first.d;
    let mut amps = vec![C64::new(1.0, 0.0)];
    let mut n = 0;
    for f in factors {
        if f.d != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: f.d,
            });
        }
        let mut next = Vec::with_capacity(amps.len() * f.amps.len());
        for a in &amps {
            for b in &f.amps {
                next.push(a * b);
            }
        }
        amps = next;
        n += f.n;
    }
    PureState::new(d, n, amps)
}

/// Traces out `site` from an `n`-site operator; returns the reduced
/// `d^(n-1)`-side matrix (a 1x1 matrix when `n = 1`).
pub(crate) fn partial_trace_raw(m: &DMatrix<Complex64>, d: usize, n: usize, site: usize) -> DMatrix<Complex64> {
    let stride = d.pow((n - 1 - site) as u32);
    let side_out = m.nrows() / d;
    let expand = |idx: usize, k: usize| (idx / stride * d + k) * stride + idx % stride;
    DMatrix::from_fn(side_out, side_out, |i, j| {
        (0..d).map(|k| m[(expand(i, k), expand(j, k))]).sum()
    })
}

/// Reduced state after tracing out `site`.
pub fn partial_trace(rho: &DensityMatrix, site: usize) -> Result<DensityMatrix> {
    if site >= rho.n {
        return Err(Error::OutOfRange {
            index: site,
            bound: rho.n,
        });
    }
    if rho.n == 1 {
        return Err(Error::Domain("cannot trace out the only site".into()));
    }
    let reduced = partial_trace_raw(rho.m.as_inner(), rho.d, rho.n, site);
    Ok(DensityMatrix {
        d: rho.d,
        n: rho.n - 1,
        m: ComplexMatrix::from_inner_unchecked(reduced),
    })
}

/// `sqrt(1 - eps0)|0...0> + sqrt(eps0)|phi_perp>`.
pub fn perturbed_product(eps0: f64, phi_perp: &PureState) -> Result<PureState> {
    if !(0.0..=1.0).contains(&eps0) {
        return Err(Error::Domain(format!("eps0 = {eps0} must lie in [0, 1]")));
    }
    let overlap = phi_perp.amps[0].norm();
    if overlap > tol::ORTHOGONAL {
        return Err(Error::NotOrthogonal { overlap });
    }
    let s = eps0.sqrt();
    let mut amps: Vec<C64> = phi_perp.amps.iter().map(|z| z * s).collect();
    amps[0] = C64::new((1.0 - eps0).sqrt(), 0.0);
    PureState::new(phi_perp.d, phi_perp.n, amps)
}

/// Squared amplitude mass grouped by Hamming weight, `w[k]` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDecomposition {
    weights: Vec<f64>,
}

impl WeightDecomposition {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol::NORM {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn get(&self, k: usize) -> f64 {
        self.weights.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_weight(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(k, w_k)` pairs with `w_k > 0`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, &w)| (k, w))
    }
}

pub fn weight_decomposition(phi: &PureState) -> WeightDecomposition {
    let mut weights = vec![0.0; phi.n + 1];
    for (idx, a) in phi.amps.iter().enumerate() {
        weights[hamming_weight(idx, phi.d)] += a.norm_sqr();
    }
    WeightDecomposition { weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn hamming_weight_counts_nonzero_symbols() {
        assert_eq!(hamming_weight(0, 2), 0);
        assert_eq!(hamming_weight(0b11, 2), 2);
        assert_eq!(hamming_weight(8, 3), 2); // "22"
        assert_eq!(hamming_weight(3, 3), 1); // "10"
        assert_eq!(digits(5, 3, 3), vec![0, 1, 2]);
    }

    #[test]
    fn pure_state_validation() {
        assert!(PureState::new(2, 1, vec![c(1.0), c(1.0)]).is_err());
        assert!(PureState::new(1, 1, vec![c(1.0)]).is_err());
        assert!(PureState::new(2, 0, vec![c(1.0)]).is_err());
        assert!(PureState::new(2, 2, vec![c(1.0), c(0.0)]).is_err());
        assert!(PureState::normalized(2, 1, vec![c(0.0), c(0.0)]).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = ComplexMatrix::from_diagonal(&[0.5, 0.4]);
        assert!(DensityMatrix::new(2, 1, bad_trace).is_err());
        let negative = ComplexMatrix::from_diagonal(&[1.1, -0.1]);
        assert!(DensityMatrix::new(2, 1, negative).is_err());
        let tiny_negative = ComplexMatrix::from_diagonal(&[1.0 + 5e-11, -5e-11]);
        let rho = DensityMatrix::new(2, 1, tiny_negative).unwrap();
        assert_eq!(rho.spectrum().unwrap()[0], 0.0);
        let non_herm = ComplexMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]).unwrap();
        assert!(matches!(
            DensityMatrix::new(2, 1, non_herm),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn matrix_power_examples() {
        let half = DensityMatrix::maximally_mixed(2, 1).unwrap();
        let sq = matrix_power(&half, 2.0).unwrap();
        assert!(sq.max_abs_diff(&ComplexMatrix::identity(2).scale(0.25)) < 1e-15);

        let psi = PureState::normalized(2, 2, vec![c(0.3), c(-0.2), C64::new(0.1, 0.5), c(0.7)]).unwrap();
        let proj = psi.projector();
        for p in [0.5, 1.0, 2.0, 3.7] {
            let powered = matrix_power(&proj, p).unwrap();
            assert!(powered.max_abs_diff(proj.matrix()) < 1e-12, "p = {p}");
        }

        let rho = DensityMatrix::from_diagonal(2, 1, &[0.75, 0.25]).unwrap();
        let cube = matrix_power(&rho, 3.0).unwrap();
        assert!((cube.get(0, 0).re - 0.421875).abs() < 1e-15);
        assert!((cube.get(1, 1).re - 0.015625).abs() < 1e-15);

        assert!(matrix_power(&rho, 0.0).is_err());
        assert!(matrix_power(&rho, -1.0).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let zero = PureState::zero(2, 1).unwrap().projector();
        let one = PureState::basis(2, 1, 1).unwrap().projector();
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 2.0).abs() < 1e-12);

        // overlap F = 0.9 gives 2 sqrt(0.1); the difference of two rank-one
        // projectors has eigenvalues +-sqrt(1 - F)
        let psi = PureState::new(2, 1, vec![c(0.9f64.sqrt()), c(0.1f64.sqrt())]).unwrap();
        let dist = trace_distance(&zero, &psi.projector()).unwrap();
        assert!((dist - 2.0 * 0.1f64.sqrt()).abs() < 1e-12);

        let two_site = PureState::zero(2, 2).unwrap().projector();
        assert!(trace_distance(&zero, &two_site).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let s00 = PureState::zero(2, 2).unwrap();
        let s11 = PureState::basis(2, 2, 3).unwrap();
        assert!((fidelity_pure(&s00, &s00).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity_pure(&s00, &s11).unwrap(), 0.0);
        let psi = PureState::new(2, 2, vec![c(0.9f64.sqrt()), c(0.0), c(0.0), c(0.1f64.sqrt())]).unwrap();
        assert!((fidelity_pure(&psi, &s00).unwrap() - 0.9).abs() < 1e-15);
        assert!(fidelity_pure(&s00, &PureState::zero(2, 1).unwrap()).is_err());
    }

    #[test]
    fn tensor_examples() {
        let zero = PureState::zero(2, 1).unwrap();
        let t = tensor(&[zero.clone(), zero.clone()]).unwrap();
        assert_eq!(t, PureState::zero(2, 2).unwrap());

        let plus = PureState::normalized(2, 1, vec![c(1.0), c(1.0)]).unwrap();
        let t = tensor(&[plus.clone(), plus.clone(), plus]).unwrap();
        for a in t.amplitudes() {
            assert!((a.re - 2f64.powf(-1.5)).abs() < 1e-15);
        }

        let (alpha, beta) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let q = PureState::new(2, 1, vec![alpha, beta]).unwrap();
        let t = tensor(&[q, zero]).unwrap();
        assert_eq!(t.amplitudes(), &[alpha, c(0.0), beta, c(0.0)]);

        let qutrit = PureState::zero(3, 1).unwrap();
        assert!(tensor(&[PureState::zero(2, 1).unwrap(), qutrit]).is_err());
        assert!(tensor(&[]).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let r1 = DensityMatrix::from_diagonal(2, 1, &[0.7, 0.3]).unwrap();
        let q = PureState::normalized(2, 1, vec![c(1.0), C64::new(0.0, 2.0)]).unwrap();
        let r2 = q.projector();
        let prod = DensityMatrix::new(2, 2, r1.matrix().kron(r2.matrix())).unwrap();
        let kept_first = partial_trace(&prod, 1).unwrap();
        assert!(kept_first.matrix().max_abs_diff(r1.matrix()) < 1e-15);
        let kept_second = partial_trace(&prod, 0).unwrap();
        assert!(kept_second.matrix().max_abs_diff(r2.matrix()) < 1e-15);

        let bell = PureState::normalized(2, 2, vec![c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        for site in 0..2 {
            let red = partial_trace(&bell.projector(), site).unwrap();
            assert!(red.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
        }

        assert!(matches!(
            partial_trace(&prod, 2),
            Err(Error::OutOfRange { index: 2, bound: 2 })
        ));
        assert!(partial_trace(&r1, 0).is_err());
    }

    #[test]
    fn perturbed_product_examples() {
        let phi = PureState::basis(2, 2, 3).unwrap();
        assert_eq!(perturbed_product(0.0, &phi).unwrap(), PureState::zero(2, 2).unwrap());
        let all = perturbed_product(1.0, &phi).unwrap();
        assert!((fidelity_pure(&all, &phi).unwrap() - 1.0).abs() < 1e-15);
        let psi = perturbed_product(0.01, &phi).unwrap();
        let f = fidelity_pure(&psi, &PureState::zero(2, 2).unwrap()).unwrap();
        assert!((f - 0.99).abs() < 1e-15);

        let not_perp = PureState::normalized(2, 2, vec![c(0.1), c(0.0), c(0.0), c(1.0)]).unwrap();
        assert!(matches!(
            perturbed_product(0.01, &not_perp),
            Err(Error::NotOrthogonal { .. })
        ));
        assert!(perturbed_product(1.5, &phi).is_err());
    }

    #[test]
    fn weight_examples() {
        let w = weight_decomposition(&PureState::basis(2, 2, 3).unwrap());
        assert_eq!(w.get(2), 1.0);
        assert_eq!(w.get(1), 0.0);

        let mix = PureState::normalized(2, 2, vec![c(0.0), c(0.0), c(1.0), c(1.0)]).unwrap();
        let w = weight_decomposition(&mix);
        assert!((w.get(1) - 0.5).abs() < 1e-15);
        assert!((w.get(2) - 0.5).abs() < 1e-15);

        let w = weight_decomposition(&PureState::basis(3, 2, 8).unwrap());
        assert_eq!(w.get(2), 1.0);
        assert!((w.total() - 1.0).abs() < 1e-15);
    }
}
