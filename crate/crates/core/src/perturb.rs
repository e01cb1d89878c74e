//! Second-order perturbation of matrix functions through divided differences,
//! and the `t^2` coefficient of the Rényi entropy along a perturbation path
//! `rho(t) = rho + t gamma0 + t^2 gamma1`.
//!
//! For a diagonal `A = diag(p_1, ..., p_m)`,
//!
//! ```text
//! f(A + tB) = f(A) + t L_A(B) + t^2 Q_A(B) + O(t^3)
//! [L_A(B)]_ij = Δf(p_i, p_j) b_ij
//! [Q_A(B)]_ij = Σ_k Δ²f(p_i, p_k, p_j) b_ik b_kj
//! ```
//!
//! Divided differences switch between three evaluation routes depending on
//! how close their arguments are: plain quotients for well separated points,
//! the Hermite–Genocchi integral (Gauss–Legendre) in a near-confluent band,
//! and analytic derivatives once the points coincide to `tol::CONFLUENCE`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::channel::{apply_depolarizing, apply_depolarizing_operator, DepolarizingParams};
use crate::entropy::{renyi_entropy_spectrum, RenyiOrder};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, C64};
use crate::state::{DensityMatrix, PureState};
use crate::tol;

/// Relative spread below which the integral representation replaces quotients.
const NEAR_CONFLUENT: f64 = 1e-3;

/// Gauss–Legendre nodes and weights on `[0, 1]` (8 points).
const GL_NODES: [f64; 8] = [
    0.019_855_071_751_231_856,
    0.101_666_761_293_186_63,
    0.237_233_795_041_835_5,
    0.408_282_678_752_175_1,
    0.591_717_321_247_824_9,
    0.762_766_204_958_164_5,
    0.898_333_238_706_813_4,
    0.980_144_928_248_768_1,
];
const GL_WEIGHTS: [f64; 8] = [
    0.050_614_268_145_188_13,
    0.111_190_517_226_687_24,
    0.156_853_322_938_943_63,
    0.181_341_891_689_181_0,
    0.181_341_891_689_181_0,
    0.156_853_322_938_943_63,
    0.111_190_517_226_687_24,
    0.050_614_268_145_188_13,
];

/// A `C^2` function on `(0, ∞)` with analytic first and second derivatives.
pub trait ScalarFunction: Sync {
    fn eval(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn name(&self) -> String;

    fn in_domain(&self, x: f64) -> bool {
        x > 0.0 && x.is_finite()
    }
}

/// `x^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power(pub f64);

impl ScalarFunction for Power {
    fn eval(&self, x: f64) -> f64 {
        x.powf(self.0)
    }
    fn d1(&self, x: f64) -> f64 {
        self.0 * x.powf(self.0 - 1.0)
    }
    fn d2(&self, x: f64) -> f64 {
        self.0 * (self.0 - 1.0) * x.powf(self.0 - 2.0)
    }
    fn name(&self) -> String {
        format!("x^{}", self.0)
    }
}

/// `x ln x`, the von Neumann integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XLogX;

impl ScalarFunction for XLogX {
    fn eval(&self, x: f64) -> f64 {
        x * x.ln()
    }
    fn d1(&self, x: f64) -> f64 {
        x.ln() + 1.0
    }
    fn d2(&self, x: f64) -> f64 {
        1.0 / x
    }
    fn name(&self) -> String {
        "x ln x".into()
    }
}

fn check_domain<F: ScalarFunction + ?Sized>(f: &F, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|&&x| !f.in_domain(x)) {
        Some(x) => Err(Error::Domain(format!("{x} is outside the domain of {}", f.name()))),
        None => Ok(()),
    }
}

/// First divided difference of `g` given its derivative `dg`.
fn first_dd(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, x: f64, y: f64) -> f64 {
    let spread = (x - y).abs();
    let scale = x.abs().max(y.abs());
    if spread <= tol::CONFLUENCE * scale {
        dg(0.5 * (x + y))
    } else if spread <= NEAR_CONFLUENT * scale {
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&s, w)| w * dg(y + s * (x - y)))
            .sum()
    } else {
        (g(x) - g(y)) / (x - y)
    }
}

/// `Δf(x, y) = (f(x) - f(y)) / (x - y)`, with `Δf(x, x) = f'(x)`.
pub fn divided_diff<F: ScalarFunction + ?Sized>(f: &F, x: f64, y: f64) -> Result<f64> {
    check_domain(f, &[x, y])?;
    Ok(first_dd(|t| f.eval(t), |t| f.d1(t), x, y))
}

fn second_dd_unchecked<F: ScalarFunction + ?Sized>(f: &F, x: f64, y: f64, z: f64) -> f64 {
    let mut v = [x, y, z];
    v.sort_by(f64::total_cmp);
    let [lo, mid, hi] = v;
    let spread = hi - lo;
    let scale = lo.abs().max(hi.abs());
    if spread <= tol::CONFLUENCE * scale {
        return 0.5 * f.d2((lo + mid + hi) / 3.0);
    }
    if spread <= NEAR_CONFLUENT * scale {
        // Hermite–Genocchi: integral of f'' over the simplex, collapsed to the unit square
        let mut acc = 0.0;
        for (&s, ws) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for (&u, wu) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let t = (1.0 - s) * u;
                acc += ws * wu * (1.0 - s) * f.d2(lo + s * (mid - lo) + t * (hi - lo));
            }
        }
        return acc;
    }
    let g = |t: f64| f.eval(t);
    let dg = |t: f64| f.d1(t);
    (first_dd(g, dg, mid, hi) - first_dd(g, dg, lo, mid)) / (hi - lo)
}

/// Fully symmetric second divided difference `Δ²f(x, y, z)`; `Δ²f(x, x, x) = f''(x)/2`.
pub fn second_divided_diff<F: ScalarFunction + ?Sized>(f: &F, x: f64, y: f64, z: f64) -> Result<f64> {
    check_domain(f, &[x, y, z])?;
    Ok(second_dd_unchecked(f, x, y, z))
}

/// Real diagonal of `a`, which must be diagonal with real entries.
fn real_diagonal(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let scale = a.max_abs().max(1.0);
    if !a.is_diagonal(1e-12 * scale) {
        return Err(Error::Domain("A must be diagonal".into()));
    }
    let diag = a.diagonal();
    if diag.iter().any(|z| z.im.abs() > 1e-12 * scale) {
        return Err(Error::Domain("A must have a real diagonal".into()));
    }
    Ok(diag.iter().map(|z| z.re).collect())
}

fn check_side(spectrum: &[f64], b: &ComplexMatrix) -> Result<()> {
    if b.rows() != spectrum.len() || b.cols() != spectrum.len() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.len(),
            actual: b.rows().max(b.cols()),
        });
    }
    Ok(())
}

/// First-order term `L_A(B)` for `A = diag(spectrum)`.
pub fn apply_l_spectrum<F: ScalarFunction + ?Sized>(spectrum: &[f64], b: &ComplexMatrix, f: &F) -> Result<ComplexMatrix> {
    check_side(spectrum, b)?;
    check_domain(f, spectrum)?;
    let m = spectrum.len();
    let mut dd = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = first_dd(|t| f.eval(t), |t| f.d1(t), spectrum[i], spectrum[j]);
            dd[i * m + j] = v;
            dd[j * m + i] = v;
        }
    }
    let out = DMatrix::from_fn(m, m, |i, j| b.get(i, j) * dd[i * m + j]);
    Ok(ComplexMatrix::from_inner_unchecked(out))
}

/// Second-order term `Q_A(B)` for `A = diag(spectrum)`.
pub fn apply_q_spectrum<F: ScalarFunction + ?Sized>(spectrum: &[f64], b: &ComplexMatrix, f: &F) -> Result<ComplexMatrix> {
    check_side(spectrum, b)?;
    check_domain(f, spectrum)?;
    let m = spectrum.len();
    let bi = b.as_inner();
    let mut out = DMatrix::<C64>::zeros(m, m);
    for i in 0..m {
        for k in 0..m {
            let bik = bi[(i, k)];
            if bik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                let bkj = bi[(k, j)];
                if bkj == C64::new(0.0, 0.0) {
                    continue;
                }
                let w = second_dd_unchecked(f, spectrum[i], spectrum[k], spectrum[j]);
                out[(i, j)] += bik * bkj * w;
            }
        }
    }
    Ok(ComplexMatrix::from_inner_unchecked(out))
}

/// `L_A(B)` for a diagonal matrix `A`.
pub fn apply_l<F: ScalarFunction + ?Sized>(a: &ComplexMatrix, b: &ComplexMatrix, f: &F) -> Result<ComplexMatrix> {
    apply_l_spectrum(&real_diagonal(a)?, b, f)
}

/// `Q_A(B)` for a diagonal matrix `A`.
pub fn apply_q<F: ScalarFunction + ?Sized>(a: &ComplexMatrix, b: &ComplexMatrix, f: &F) -> Result<ComplexMatrix> {
    apply_q_spectrum(&real_diagonal(a)?, b, f)
}

/// `Tr L_A(B) = Σ_j f'(p_j) b_jj` for Hermitian `B`.
pub fn trace_l_spectrum<F: ScalarFunction + ?Sized>(spectrum: &[f64], b: &ComplexMatrix, f: &F) -> Result<f64> {
    check_side(spectrum, b)?;
    check_domain(f, spectrum)?;
    b.check_hermitian()?;
    Ok(spectrum
        .iter()
        .enumerate()
        .map(|(j, &p)| f.d1(p) * b.get(j, j).re)
        .sum())
}

/// `Tr Q_A(B) = Σ_ij (f'(p_i) - f'(p_j)) / (2 (p_i - p_j)) b_ij b_ji` for Hermitian `B`,
/// with `f''(p)/2` on confluent pairs.
pub fn trace_q_spectrum<F: ScalarFunction + ?Sized>(spectrum: &[f64], b: &ComplexMatrix, f: &F) -> Result<f64> {
    check_side(spectrum, b)?;
    check_domain(f, spectrum)?;
    b.check_hermitian()?;
    let m = spectrum.len();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let bb = (b.get(i, j) * b.get(j, i)).re;
            if bb == 0.0 {
                continue;
            }
            acc += 0.5 * first_dd(|t| f.d1(t), |t| f.d2(t), spectrum[i], spectrum[j]) * bb;
        }
    }
    Ok(acc)
}

pub fn trace_l<F: ScalarFunction + ?Sized>(a: &ComplexMatrix, b: &ComplexMatrix, f: &F) -> Result<f64> {
    trace_l_spectrum(&real_diagonal(a)?, b, f)
}

pub fn trace_q<F: ScalarFunction + ?Sized>(a: &ComplexMatrix, b: &ComplexMatrix, f: &F) -> Result<f64> {
    trace_q_spectrum(&real_diagonal(a)?, b, f)
}

/// `f(M)` for Hermitian `M` through its eigendecomposition.
pub fn hermitian_function<F: ScalarFunction + ?Sized>(m: &ComplexMatrix, f: &F) -> Result<ComplexMatrix> {
    let s = linalg::eig_hermitian(m)?;
    check_domain(f, &s.eigenvalues)?;
    Ok(s.map(|l| f.eval(l)))
}

/// Frobenius norm of `f(A + tB) - f(A) - t L_A(B) - t^2 Q_A(B)`.
pub fn expansion_remainder<F: ScalarFunction + ?Sized>(spectrum: &[f64], b: &ComplexMatrix, f: &F, t: f64) -> Result<f64> {
    let a = ComplexMatrix::from_diagonal(spectrum);
    let exact = hermitian_function(&(&a + &b.scale(t)), f)?;
    let fa = ComplexMatrix::from_diagonal(&spectrum.iter().map(|&p| f.eval(p)).collect::<Vec<_>>());
    let l = apply_l_spectrum(spectrum, b, f)?;
    let q = apply_q_spectrum(spectrum, b, f)?;
    let approx = &(&fa + &l.scale(t)) + &q.scale(t * t);
    Ok((&exact - &approx).frobenius_norm())
}

/// Least-squares slope of `ln r` against `ln t`.
pub fn loglog_slope(ts: &[f64], rs: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `rho(t) = rho + t gamma0 + t^2 gamma1` with `rho` diagonal and nonsingular,
/// `gamma0` Hermitian with zero diagonal and `gamma1` Hermitian and traceless.
#[derive(Debug, Clone)]
pub struct PerturbationFamily {
    spectrum: Vec<f64>,
    rho: ComplexMatrix,
    gamma0: ComplexMatrix,
    gamma1: ComplexMatrix,
}

impl PerturbationFamily {
    pub fn new(rho: &DensityMatrix, gamma0: ComplexMatrix, gamma1: ComplexMatrix) -> Result<Self> {
        let spectrum = real_diagonal(rho.matrix())?;
        let min = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::Singular { min_eigenvalue: min });
        }
        for g in [&gamma0, &gamma1] {
            check_side(&spectrum, g)?;
            g.check_hermitian()?;
        }
        let diag0 = gamma0.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
        if diag0 > 1e-12 {
            return Err(Error::Domain(format!("gamma0 must have zero diagonal, found {diag0:.3e}")));
        }
        let tr1 = gamma1.trace().norm();
        if tr1 > 1e-12 {
            return Err(Error::Domain(format!("gamma1 must be traceless, found {tr1:.3e}")));
        }
        Ok(Self {
            spectrum,
            rho: rho.matrix().clone(),
            gamma0: gamma0.hermitian_part(),
            gamma1: gamma1.hermitian_part(),
        })
    }

    /// The family arising from `sqrt(1 - t^2)|0...0> + t|phi>` sent through
    /// `D^{\otimes n}`: `rho = D(|0><0|)`, `gamma0 = D(|0><phi| + |phi><0|)`,
    /// `gamma1 = D(|phi><phi| - |0><0|)`.
    pub fn stability(params: &DepolarizingParams, phi_perp: &PureState) -> Result<Self> {
        let (d, n) = (params.d(), params.n());
        if phi_perp.local_dim() != d || phi_perp.sites() != n {
            return Err(Error::DimensionMismatch {
                expected: params.dim(),
                actual: phi_perp.dim(),
            });
        }
        let overlap = phi_perp.amplitudes()[0].norm();
        if overlap > tol::ORTHOGONAL {
            return Err(Error::NotOrthogonal { overlap });
        }
        let zero = PureState::zero(d, n)?;
        let rho = apply_depolarizing(params, &zero.projector())?;
        let cross = ComplexMatrix::outer(zero.amplitudes(), phi_perp.amplitudes());
        let gamma0 = apply_depolarizing_operator(params, &(&cross + &cross.adjoint()))?;
        let diff = phi_perp.projector().matrix() - zero.projector().matrix();
        let gamma1 = apply_depolarizing_operator(params, &diff)?;
        Self::new(&rho, gamma0, gamma1)
    }

    /// Random family on a `side`-dimensional space: `rho` with spectrum drawn
    /// uniformly from `[0.2, 1]` and normalized, `gamma0` and `gamma1` random
    /// Hermitian with operator norm `scale * min(rho)`.
    pub fn random<R: Rng + ?Sized>(side: usize, scale: f64, rng: &mut R) -> Result<Self> {
        if side < 2 {
            return Err(Error::Domain(format!("side = {side} must be at least 2")));
        }
        let raw: Vec<f64> = (0..side).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let spectrum: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let unit = scale * spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut gamma0 = ComplexMatrix::zeros(side, side);
        let mut gamma1 = ComplexMatrix::zeros(side, side);
        for i in 0..side {
            gamma1.set(i, i, C64::new(rng.random_range(-1.0..1.0), 0.0));
            for j in (i + 1)..side {
                for g in [&mut gamma0, &mut gamma1] {
                    let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    g.set(i, j, z);
                    g.set(j, i, z.conj());
                }
            }
        }
        let shift = gamma1.trace().re / side as f64;
        for i in 0..side {
            let v = gamma1.get(i, i) - shift;
            gamma1.set(i, i, v);
        }
        let op_norm = |m: &ComplexMatrix| -> Result<f64> {
            let vals = linalg::eigvals_hermitian(m)?;
            Ok(vals[0].abs().max(vals[side - 1].abs()))
        };
        let gamma0 = gamma0.scale(unit / op_norm(&gamma0)?);
        let gamma1 = gamma1.scale(unit / op_norm(&gamma1)?);
        let rho = DensityMatrix::from_diagonal(side, 1, &spectrum)?;
        Self::new(&rho, gamma0, gamma1)
    }

    pub fn side(&self) -> usize {
        self.spectrum.len()
    }

    pub fn rho_spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn gamma0(&self) -> &ComplexMatrix {
        &self.gamma0
    }

    pub fn gamma1(&self) -> &ComplexMatrix {
        &self.gamma1
    }

    pub fn at(&self, t: f64) -> ComplexMatrix {
        &(&self.rho + &self.gamma0.scale(t)) + &self.gamma1.scale(t * t)
    }

    /// `S_p(rho(t))`, from the eigenvalues of `rho(t)`.
    pub fn entropy_at(&self, t: f64, p: RenyiOrder) -> Result<f64> {
        let vals = linalg::eigvals_hermitian(&self.at(t))?;
        renyi_entropy_spectrum(&vals, p)
    }

    /// `(S(t) - S(0)) / t^2`, a finite-difference estimate of the `t^2`
    /// coefficient with an `O(t)` error.
    pub fn finite_difference_coeff(&self, t: f64, p: RenyiOrder) -> Result<f64> {
        let s0 = renyi_entropy_spectrum(&self.spectrum, p)?;
        Ok((self.entropy_at(t, p)? - s0) / (t * t))
    }
}

/// Exact `t^2` coefficient of `S_p(rho(t))`:
/// `(Tr L_rho(gamma1) + Tr Q_rho(gamma0)) / ((1 - p) Tr rho^p)` with `f = x^p`,
/// and `-(Tr L_rho(gamma1) + Tr Q_rho(gamma0))` with `f = x ln x` at `p = 1`.
pub fn renyi_second_order_coeff(fam: &PerturbationFamily, p: RenyiOrder) -> Result<f64> {
    let spec = &fam.spectrum;
    if p.is_von_neumann() {
        let lin = trace_l_spectrum(spec, &fam.gamma1, &XLogX)?;
        let quad = trace_q_spectrum(spec, &fam.gamma0, &XLogX)?;
        return Ok(-(lin + quad));
    }
    let f = Power(p.value());
    let lin = trace_l_spectrum(spec, &fam.gamma1, &f)?;
    let quad = trace_q_spectrum(spec, &fam.gamma0, &f)?;
    let tr_pow: f64 = spec.iter().map(|&x| f.eval(x)).sum();
    Ok((lin + quad) / ((1.0 - p.value()) * tr_pow))
}

/// Outcome of the `O(t^3)` remainder check.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidualFit {
    /// Log-log slope of the residual against `t`, with the residuals used.
    Slope { slope: f64, residuals: Vec<f64> },
    /// Every residual fell below the noise floor.
    ExactWithinNoise,
}

/// Residuals below this count as numerical noise.
pub const RESIDUAL_FLOOR: f64 = 1e-13;

/// Fits the scaling of `|S_p(rho(t)) - S_p(rho) - t^2 coeff|` over `t_grid`.
pub fn taylor_residual_check(fam: &PerturbationFamily, p: RenyiOrder, t_grid: &[f64]) -> Result<ResidualFit> {
    if t_grid.len() < 4 {
        return Err(Error::Domain("t grid needs at least 4 points".into()));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t <= 0.1)) {
        return Err(Error::Domain("t grid must lie in (0, 0.1]".into()));
    }
    let increasing = t_grid.windows(2).all(|w| w[0] < w[1]);
    let decreasing = t_grid.windows(2).all(|w| w[0] > w[1]);
    if !increasing && !decreasing {
        return Err(Error::Domain("t grid must be strictly monotone".into()));
    }
    let coeff = renyi_second_order_coeff(fam, p)?;
    let s0 = renyi_entropy_spectrum(&fam.spectrum, p)?;
    let mut ts = Vec::new();
    let mut rs = Vec::new();
    for &t in t_grid {
        let r = (fam.entropy_at(t, p)? - s0 - t * t * coeff).abs();
        if r >= RESIDUAL_FLOOR {
            ts.push(t);
            rs.push(r);
        }
    }
    if ts.len() < 2 {
        return Ok(ResidualFit::ExactWithinNoise);
    }
    Ok(ResidualFit::Slope {
        slope: loglog_slope(&ts, &rs),
        residuals: rs,
    })
}
