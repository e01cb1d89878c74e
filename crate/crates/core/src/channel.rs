//! The qudit depolarizing channel `D(rho) = lambda rho + (1 - lambda) Tr(rho) I/d`
//! and its `n`-fold tensor power.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::state::{checked_dim, partial_trace_raw, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct DepolarizingParams {
    lambda: f64,
    d: usize,
    n: usize,
}

#[derive(Deserialize)]
struct RawParams {
    lambda: f64,
    d: usize,
    n: usize,
}

impl TryFrom<RawParams> for DepolarizingParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.lambda, raw.d, raw.n)
    }
}

impl DepolarizingParams {
    pub fn new(lambda: f64, d: usize, n: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda = {lambda} must lie in [0, 1]")));
        }
        checked_dim(d, n)?;
        Ok(Self { lambda, d, n })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// Output weight on the input direction, `(1 + (d-1) lambda) / d`.
    pub fn a(&self) -> f64 {
        (1.0 + (self.d as f64 - 1.0) * self.lambda) / self.d as f64
    }

    /// Output weight on each orthogonal direction, `(1 - lambda) / d`.
    pub fn b(&self) -> f64 {
        (1.0 - self.lambda) / self.d as f64
    }

    /// `a / b`; `None` at `lambda = 1`.
    pub fn r(&self) -> Option<f64> {
        (self.lambda < 1.0).then(|| self.a() / self.b())
    }

    /// Same parameters with a different site count.
    pub fn with_sites(&self, n: usize) -> Result<Self> {
        Self::new(self.lambda, self.d, n)
    }

    /// `r` for the open interval `lambda in (0, 1)`, where the stability
    /// bounds are defined.
    pub fn require_open(&self) -> Result<f64> {
        if self.lambda <= 0.0 || self.lambda >= 1.0 {
            return Err(Error::Domain(format!(
                "lambda = {} must lie strictly inside (0, 1)",
                self.lambda
            )));
        }
        Ok(self.a() / self.b())
    }
}

/// Applies the single-site channel to `site` of an `n`-site operator.
pub fn apply_depolarizing_site(params: &DepolarizingParams, rho: &DensityMatrix, site: usize) -> Result<DensityMatrix> {
    check_shape(params, rho)?;
    if site >= params.n {
        return Err(Error::OutOfRange {
            index: site,
            bound: params.n,
        });
    }
    let out = depolarize_site_raw(rho.matrix().as_inner(), params, site);
    Ok(DensityMatrix::from_parts_unchecked(
        params.d,
        params.n,
        ComplexMatrix::from_inner_unchecked(out),
    ))
}

fn check_shape(params: &DepolarizingParams, rho: &DensityMatrix) -> Result<()> {
    if rho.local_dim() != params.d || rho.sites() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: rho.dim(),
        });
    }
    Ok(())
}

fn depolarize_site_raw(m: &DMatrix<C64>, params: &DepolarizingParams, site: usize) -> DMatrix<C64> {
    let (d, n, lambda) = (params.d, params.n, params.lambda);
    let reduced = partial_trace_raw(m, d, n, site);
    let stride = d.pow((n - 1 - site) as u32);
    let noise = (1.0 - lambda) / d as f64;
    let squeeze = |idx: usize| (idx / (stride * d)) * stride + idx % stride;
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let mut v = m[(i, j)] * lambda;
        if (i / stride) % d == (j / stride) % d {
            v += reduced[(squeeze(i), squeeze(j))] * noise;
        }
        v
    })
}

/// `D^{\otimes n}(rho)`, applied one site at a time.
pub fn apply_depolarizing(params: &DepolarizingParams, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_shape(params, rho)?;
    let mut m = rho.matrix().as_inner().clone();
    for site in 0..params.n {
        m = depolarize_site_raw(&m, params, site);
    }
    Ok(DensityMatrix::from_parts_unchecked(
        params.d,
        params.n,
        ComplexMatrix::from_inner_unchecked(m),
    ))
}

/// Channel applied to an arbitrary operator on the register (not necessarily
/// a state). Used to build perturbation directions such as `D(|0><phi|)`.
pub fn apply_depolarizing_operator(params: &DepolarizingParams, op: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = params.dim();
    if op.rows() != dim || op.cols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: op.rows(),
        });
    }
    let mut m = op.as_inner().clone();
    for site in 0..params.n {
        m = depolarize_site_raw(&m, params, site);
    }
    Ok(ComplexMatrix::from_inner_unchecked(m))
}

/// One distinct eigenvalue of a channel output with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub value: f64,
    pub multiplicity: u64,
}

/// Spectrum of `D^{\otimes n}` applied to any pure product input:
/// `a^(n-k) b^k` with multiplicity `C(n, k) (d-1)^k`.
pub fn product_output_spectrum(params: &DepolarizingParams) -> Vec<SpectralLine> {
    let (a, b) = (params.a(), params.b());
    let n = params.n as u64;
    let mut binom: u64 = 1;
    (0..=n)
        .map(|k| {
            if k > 0 {
                binom = binom * (n - k + 1) / k;
            }
            SpectralLine {
                value: a.powi((n - k) as i32) * b.powi(k as i32),
                multiplicity: binom * (params.d as u64 - 1).pow(k as u32),
            }
        })
        .collect()
}

/// The same spectrum expanded into `d^n` ascending eigenvalues.
pub fn product_output_eigenvalues(params: &DepolarizingParams) -> Vec<f64> {
    let mut vals: Vec<f64> = product_output_spectrum(params)
        .iter()
        .flat_map(|line| std::iter::repeat_n(line.value, line.multiplicity as usize))
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}
