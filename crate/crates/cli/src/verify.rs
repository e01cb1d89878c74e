//! The property suite behind `depol verify`: every library invariant plus the
//! acceptance criteria, one row per check.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use depol_core::channel::apply_depolarizing_site;
use depol_core::linalg::HermitianSpectrum;
use depol_core::perturb::{expansion_remainder, loglog_slope, trace_l_spectrum, trace_q_spectrum, apply_l_spectrum, apply_q_spectrum};
use depol_core::stability::{bound_function, DerivativeFactors, HCritical};
use depol_core::{
    accept_coeff, apply_depolarizing, classify, eig_hermitian, f_p, fidelity_pure, gap, gap_limit,
    h_min_check, max_product_fidelity, min_output_renyi_closed, min_output_renyi_numeric, monotonicity_scan,
    partial_trace, perturbed_product, predicted_excess, product_output_eigenvalues, product_output_spectrum,
    reject_coeff, renyi_entropy, renyi_entropy_lines, renyi_second_order_coeff, rng_for, run_protocol,
    sample_perpendicular, sample_state, second_divided_diff, trace_distance, weight_decomposition,
    ComplexMatrix, DepolarizingParams, PerturbationFamily, Power, PureState, RenyiOrder,
    ResidualFit, SampleKind, ScalarFunction, TrialConfig, Verdict, XLogX, C64,
};

use crate::args::VerifyArgs;
use crate::output::{Report, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Recorded, not asserted.
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub detail: String,
}

fn judge(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn info(detail: String) -> Outcome {
    Outcome {
        status: Status::Info,
        detail,
    }
}

type CheckFn = fn(u64) -> depol_core::Result<Outcome>;

pub struct Check {
    pub id: &'static str,
    /// Acceptance criterion number, if the check is one.
    pub criterion: Option<u32>,
    pub run: CheckFn,
}

const LAMBDAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const DIMS: [usize; 3] = [2, 3, 5];
const ORDERS: [f64; 4] = [2.0, 3.0, 5.0, 10.0];

fn order(p: f64) -> RenyiOrder {
    RenyiOrder::new(p).expect("positive order")
}

fn grid() -> impl Iterator<Item = (DepolarizingParams, RenyiOrder)> {
    DIMS.into_iter().flat_map(|d| {
        LAMBDAS.into_iter().flat_map(move |l| {
            ORDERS
                .into_iter()
                .map(move |p| (DepolarizingParams::new(l, d, 1).expect("valid grid"), order(p)))
        })
    })
}

fn random_hermitian<R: Rng>(side: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(side, side);
    for i in 0..side {
        m.set(i, i, C64::new(rng.random_range(-1.0..1.0), 0.0));
        for j in (i + 1)..side {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m.set(i, j, z);
            m.set(j, i, z.conj());
        }
    }
    m
}

fn metric_identity(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 9);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (d, n) = if i % 2 == 0 { (2, 2) } else { (3, 2) };
        let psi = depol_core::sampling::sample_state_with(SampleKind::Haar, d, n, &mut rng)?;
        let phi = depol_core::sampling::sample_state_with(SampleKind::Haar, d, n, &mut rng)?;
        let td = trace_distance(&psi.projector(), &phi.projector())?;
        let f = fidelity_pure(&psi, &phi)?;
        worst = worst.max((td * td - 4.0 * (1.0 - f)).abs());
    }
    Ok(judge(worst <= 1e-10, format!("max |T^2 - 4(1-F)| = {worst:.2e} over 100 pairs")))
}

fn eig_reconstruction(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 10);
    let mut worst = (0.0f64, 0.0f64);
    for side in [8, 27, 81] {
        let m = random_hermitian(side, &mut rng);
        let s: HermitianSpectrum = eig_hermitian(&m)?;
        let rel = s.reconstruct().max_abs_diff(&m) / m.frobenius_norm();
        worst = (worst.0.max(rel), worst.1.max(s.orthonormality_error()));
        if !s.eigenvalues.windows(2).all(|w| w[0] <= w[1]) {
            return Ok(judge(false, format!("side {side}: eigenvalues not ascending")));
        }
    }
    Ok(judge(
        worst.0 <= 1e-10 && worst.1 <= 1e-10,
        format!("reconstruction {:.2e}, orthonormality {:.2e}", worst.0, worst.1),
    ))
}

fn partial_trace_property(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 11);
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let rho = depol_core::sampling::sample_mixed(3, 2, 4, &mut rng)?;
        for site in 0..2 {
            let red = partial_trace(&rho, site)?;
            let min = depol_core::eigvals_hermitian(red.matrix())?[0];
            worst = (worst.0.max((red.trace() - 1.0).abs()), worst.1.min(min));
        }
    }
    Ok(judge(
        worst.0 <= 1e-12 && worst.1 >= -1e-10,
        format!("trace error {:.2e}, min eigenvalue {:.2e}", worst.0, worst.1),
    ))
}

fn weights_and_fidelity(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 12);
    let mut worst = (0.0f64, 0.0f64);
    for (d, n) in [(2, 2), (2, 3), (3, 2)] {
        for eps0 in [0.0, 1e-4, 0.01, 0.5, 1.0] {
            let phi = sample_perpendicular(d, n, 1, &mut rng)?;
            let w = weight_decomposition(&phi);
            let psi = perturbed_product(eps0, &phi)?;
            let f = fidelity_pure(&psi, &PureState::zero(d, n)?)?;
            worst = (worst.0.max((w.total() - 1.0).abs()), worst.1.max((f - (1.0 - eps0)).abs()));
        }
    }
    Ok(judge(
        worst.0 <= 1e-12 && worst.1 <= 1e-14,
        format!("weight sum error {:.2e}, fidelity error {:.2e}", worst.0, worst.1),
    ))
}

fn product_fidelity_monotone(seed: u64) -> depol_core::Result<Outcome> {
    let psi = sample_state(SampleKind::Haar, 2, 4, seed)?;
    let values = [1, 2, 4, 8, 16]
        .iter()
        .map(|&r| max_product_fidelity(&psi, r, seed).map(|f| f.value))
        .collect::<depol_core::Result<Vec<_>>>()?;
    let ok = values.windows(2).all(|w| w[1] >= w[0]);
    Ok(judge(ok, format!("values over 1..16 restarts: {values:.6?}")))
}

fn channel_product_spectrum(seed: u64) -> depol_core::Result<Outcome> {
    let mut worst = 0.0f64;
    for (d, n) in [(2, 1), (2, 3), (3, 2), (2, 4), (3, 3)] {
        for lambda in [0.0, 0.3, 0.7, 1.0] {
            let params = DepolarizingParams::new(lambda, d, n)?;
            let phi = sample_state(SampleKind::Product, d, n, seed)?;
            let out = apply_depolarizing(&params, &phi.projector())?;
            let mut got = out.spectrum()?;
            got.sort_by(f64::total_cmp);
            let want = product_output_eigenvalues(&params);
            let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    Ok(judge(worst <= 1e-10, format!("max spectral deviation {worst:.2e}")))
}

fn channel_trace_positivity(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 13);
    let mut worst = (0.0f64, 0.0f64);
    for (d, n) in [(2, 2), (3, 2), (2, 3)] {
        for lambda in [0.0, 0.4, 1.0] {
            let params = DepolarizingParams::new(lambda, d, n)?;
            let rho = depol_core::sampling::sample_mixed(d, n, 2, &mut rng)?;
            let out = apply_depolarizing(&params, &rho)?;
            let min = depol_core::eigvals_hermitian(out.matrix())?[0];
            worst = (worst.0.max((out.trace() - 1.0).abs()), worst.1.min(min));
        }
    }
    Ok(judge(
        worst.0 <= 1e-12 && worst.1 >= -1e-10,
        format!("trace error {:.2e}, min eigenvalue {:.2e}", worst.0, worst.1),
    ))
}

fn channel_site_order(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 14);
    let params = DepolarizingParams::new(0.35, 2, 3)?;
    let rho = depol_core::sampling::sample_mixed(2, 3, 3, &mut rng)?;
    let mut fwd = rho.clone();
    for s in 0..3 {
        fwd = apply_depolarizing_site(&params, &fwd, s)?;
    }
    let mut rev = rho;
    for s in (0..3).rev() {
        rev = apply_depolarizing_site(&params, &rev, s)?;
    }
    let diff = fwd.matrix().max_abs_diff(rev.matrix());
    Ok(judge(diff <= 1e-12, format!("forward vs reverse site order {diff:.2e}")))
}

fn entropy_monotone(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 15);
    let ps = [0.3, 0.7, 1.0, 1.5, 2.0, 4.0, 10.0];
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let rho = depol_core::sampling::sample_mixed(2, 2, 3, &mut rng)?;
        let v = ps.iter().map(|&p| renyi_entropy(&rho, order(p))).collect::<depol_core::Result<Vec<_>>>()?;
        for w in v.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    Ok(judge(worst <= 1e-12, format!("largest increase in p: {worst:.2e}")))
}

fn numeric_minimum(seed: u64) -> depol_core::Result<Outcome> {
    let mut worst = 0.0f64;
    let mut beats = 0.0f64;
    for (n, d) in [(1, 2), (2, 2), (3, 2), (2, 3)] {
        for lambda in [0.3, 0.7] {
            for p in [1.0, 2.0, 3.0, 5.0] {
                let params = DepolarizingParams::new(lambda, d, n)?;
                let closed = min_output_renyi_closed(&params, order(p));
                let numeric = min_output_renyi_numeric(&params, order(p), 4, seed)?.value;
                worst = worst.max((numeric - closed).abs());
                beats = beats.max(closed - numeric);
            }
        }
    }
    Ok(judge(
        worst <= 1e-6 && beats <= 1e-6,
        format!("max |numeric - closed| = {worst:.2e}; closed - numeric <= {beats:.2e}"),
    ))
}

fn closed_vs_spectrum(_seed: u64) -> depol_core::Result<Outcome> {
    let mut worst = 0.0f64;
    for d in [2, 3] {
        for n in 1..=4 {
            for lambda in [0.0, 0.3, 0.7, 1.0] {
                let params = DepolarizingParams::new(lambda, d, n)?;
                for p in [0.5, 1.0, 2.0, 3.0, 5.0] {
                    let a = renyi_entropy_lines(&product_output_spectrum(&params), order(p));
                    worst = worst.max((a - min_output_renyi_closed(&params, order(p))).abs());
                }
            }
        }
    }
    Ok(judge(worst <= 1e-10, format!("max deviation {worst:.2e}")))
}

fn continuity_at_one(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 16);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let rho = depol_core::sampling::sample_mixed(3, 1, 2, &mut rng)?;
        let s1 = renyi_entropy(&rho, RenyiOrder::VON_NEUMANN)?;
        for p in [1.0 - 1e-6, 1.0 + 1e-6] {
            worst = worst.max((renyi_entropy(&rho, order(p))? - s1).abs());
        }
    }
    Ok(judge(worst <= 1e-4, format!("max |S(1 +- 1e-6) - S(1)| = {worst:.2e}")))
}

const T_GRID: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

fn expansion_and_traces(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 17);
    let mut min_slope = f64::INFINITY;
    let mut trace_err = 0.0f64;
    let funcs: [&dyn ScalarFunction; 3] = [&Power(2.5), &Power(3.0), &XLogX];
    for side in [2, 4, 6, 9] {
        let spec: Vec<f64> = (0..side).map(|_| rng.random_range(0.2..1.0)).collect();
        let b = random_hermitian(side, &mut rng).scale(0.1);
        for f in funcs {
            let rs = T_GRID
                .iter()
                .map(|&t| expansion_remainder(&spec, &b, f, t))
                .collect::<depol_core::Result<Vec<_>>>()?;
            min_slope = min_slope.min(loglog_slope(&T_GRID, &rs));
            let tl = trace_l_spectrum(&spec, &b, f)?;
            let tq = trace_q_spectrum(&spec, &b, f)?;
            let fl = apply_l_spectrum(&spec, &b, f)?.trace().re;
            let fq = apply_q_spectrum(&spec, &b, f)?.trace().re;
            trace_err = trace_err.max((tl - fl).abs()).max((tq - fq).abs());
        }
    }
    Ok(judge(
        min_slope >= 2.7 && trace_err <= 1e-12,
        format!("min remainder slope {min_slope:.3}; trace formula error {trace_err:.2e}"),
    ))
}

fn divided_difference_symmetry(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 18);
    let mut worst = 0.0f64;
    let funcs: [&dyn ScalarFunction; 3] = [&Power(2.5), &Power(0.7), &XLogX];
    for _ in 0..100 {
        let x: [f64; 3] = [rng.random_range(0.01..1.0), rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)];
        for f in funcs {
            let base = second_divided_diff(f, x[0], x[1], x[2])?;
            for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let v = second_divided_diff(f, x[perm[0]], x[perm[1]], x[perm[2]])?;
                worst = worst.max((v - base).abs() / base.abs().max(1.0));
            }
        }
    }
    Ok(judge(worst <= 1e-12, format!("max permutation deviation {worst:.2e}")))
}

fn degenerate_continuity(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 19);
    let b = random_hermitian(4, &mut rng);
    let f = Power(2.5);
    let exact = [0.1, 0.1, 0.3, 0.5];
    let nudged = [0.1, 0.1 + 1e-9, 0.3, 0.5 - 1e-9];
    let dl = apply_l_spectrum(&exact, &b, &f)?.max_abs_diff(&apply_l_spectrum(&nudged, &b, &f)?);
    let q0 = apply_q_spectrum(&exact, &b, &f)?;
    let dq = q0.max_abs_diff(&apply_q_spectrum(&nudged, &b, &f)?);
    let l0 = apply_l_spectrum(&exact, &b, &f)?;
    let (rl, rq) = (dl / l0.max_abs(), dq / q0.max_abs());
    Ok(judge(rl <= 1e-6 && rq <= 1e-6, format!("relative change L {rl:.2e}, Q {rq:.2e}")))
}

fn second_order_coefficient(seed: u64) -> depol_core::Result<Outcome> {
    let params = DepolarizingParams::new(0.5, 2, 2)?;
    let mut fams = vec![PerturbationFamily::stability(&params, &PureState::basis(2, 2, 3)?)?];
    let mut rng = rng_for(seed, 20);
    for j in 0..20 {
        fams.push(PerturbationFamily::random(2 + j % 15, 1.0, &mut rng)?);
    }
    let (mut min_slope, mut growth, mut max_rel) = (f64::INFINITY, 0.0f64, 0.0f64);
    for fam in &fams {
        for p in [1.0, 2.0, 3.0] {
            let p = order(p);
            match depol_core::taylor_residual_check(fam, p, &T_GRID)? {
                ResidualFit::Slope { slope, .. } => min_slope = min_slope.min(slope),
                ResidualFit::ExactWithinNoise => {}
            }
            let c = renyi_second_order_coeff(fam, p)?;
            let s0 = depol_core::renyi_entropy_spectrum(fam.rho_spectrum(), p)?;
            let mut ratios = Vec::new();
            for &t in &T_GRID {
                ratios.push((fam.entropy_at(t, p)? - s0 - t * t * c).abs() / t.powi(3));
            }
            growth = growth.max(ratios[4] / ratios[0].max(ratios[1]).max(ratios[2]));
            let fd = fam.finite_difference_coeff(1e-4, p)?;
            max_rel = max_rel.max((fd - c).abs() / c.abs());
        }
    }
    Ok(judge(
        min_slope >= 2.7 && max_rel <= 1e-3,
        format!(
            "{} families: min slope {min_slope:.3}, residual/t^3 growth to t = 1e-3 {growth:.3}, \
             max relative coefficient error {max_rel:.2e}",
            fams.len()
        ),
    ))
}

fn stability_family_generic(seed: u64) -> depol_core::Result<Outcome> {
    let params = DepolarizingParams::new(0.5, 2, 2)?;
    let mut rng = rng_for(seed, 23);
    let mut slopes = Vec::new();
    for _ in 0..5 {
        let fam = PerturbationFamily::stability(&params, &sample_perpendicular(2, 2, 1, &mut rng)?)?;
        if let ResidualFit::Slope { slope, .. } = depol_core::taylor_residual_check(&fam, order(2.0), &T_GRID)? {
            slopes.push(slope);
        }
    }
    Ok(info(format!("generic directions at p = 2, slopes {slopes:.3?}")))
}

fn accept_identity(_seed: u64) -> depol_core::Result<Outcome> {
    let mut worst = 0.0f64;
    for (params, p) in grid() {
        let a = accept_coeff(&params, p)?;
        let f = f_p(2.0, &params, p, depol_core::FpVariant::Canonical)?;
        worst = worst.max((a - f).abs());
    }
    let spot = accept_coeff(&DepolarizingParams::new(0.5, 2, 1)?, order(2.0))?;
    Ok(judge(
        worst <= 1e-10 && (spot - 0.96).abs() <= 1e-10,
        format!("max |accept - f_p(2)| = {worst:.2e}; spot value {spot:.12}"),
    ))
}

fn sup_bound(_seed: u64) -> depol_core::Result<Outcome> {
    // f_p approaches p/(p-1) from below and reaches it in floating point
    // for large x, so strictness is checked where the deficit is resolvable.
    let (mut strict, mut bounded) = (true, true);
    let mut worst_far = 0.0f64;
    for (params, p) in grid() {
        let rej = reject_coeff(p)?;
        for x in 0..=200 {
            let v = bound_function(f64::from(x), &params, p)?;
            bounded &= v <= rej;
            if x <= 20 {
                strict &= v < rej;
            }
        }
        if params.r().is_some_and(|r| r >= 2.0) {
            let far = bound_function(1e3, &params, p)?;
            worst_far = worst_far.max((far - rej).abs());
        }
    }
    Ok(judge(
        strict && bounded && worst_far <= 1e-3,
        format!("f_p < p/(p-1) on 0..20: {strict}; f_p <= p/(p-1) on 0..200: {bounded}; max |f_p(1000) - p/(p-1)| for r >= 2: {worst_far:.2e}"),
    ))
}

fn gap_identity(_seed: u64) -> depol_core::Result<Outcome> {
    let mut worst = 0.0f64;
    for (params, p) in grid() {
        let g = gap(&params, p)?;
        worst = worst.max((g - (reject_coeff(p)? - accept_coeff(&params, p)?)).abs());
    }
    Ok(judge(worst <= 1e-12, format!("max |gap - (reject - accept)| = {worst:.2e}")))
}

fn monotonicity(_seed: u64) -> depol_core::Result<Outcome> {
    let mut worst = f64::INFINITY;
    for (params, p) in grid() {
        worst = worst.min(monotonicity_scan(&params, p, 50)?.worst_step);
    }
    for d in DIMS {
        for l in LAMBDAS {
            let params = DepolarizingParams::new(l, d, 1)?;
            worst = worst.min(monotonicity_scan(&params, RenyiOrder::VON_NEUMANN, 50)?.worst_step);
        }
    }
    Ok(judge(worst >= -1e-12, format!("worst step f(x+1) - f(x) on [2, 50]: {worst:.3e}")))
}

fn monotonicity_low_orders(_seed: u64) -> depol_core::Result<Outcome> {
    let mut worst = f64::INFINITY;
    for d in DIMS {
        for l in LAMBDAS {
            let params = DepolarizingParams::new(l, d, 1)?;
            for p in [1.2, 1.5, 1.8] {
                worst = worst.min(monotonicity_scan(&params, order(p), 50)?.worst_step);
            }
        }
    }
    Ok(info(format!("p in {{1.2, 1.5, 1.8}}: worst step {worst:.3e}")))
}

fn derivative_signs(_seed: u64) -> depol_core::Result<Outcome> {
    let mut bad = 0;
    let mut total = 0;
    for (params, p) in grid() {
        let r = params.r().expect("open grid");
        for x in [2.0, 2.5, 4.0, 10.0, 30.0] {
            total += 1;
            if !DerivativeFactors::new(r, params.d() as u32, p.value(), x).signs_hold() {
                bad += 1;
            }
        }
    }
    Ok(judge(bad == 0, format!("A <= 0, C <= B <= 0 at {}/{total} points", total - bad)))
}

fn gap_claims(_seed: u64) -> depol_core::Result<Outcome> {
    let mut worst_id = 0.0f64;
    let mut min_margin = f64::INFINITY;
    for (params, p) in grid() {
        let g = gap(&params, p)?;
        worst_id = worst_id.max((g - (reject_coeff(p)? - accept_coeff(&params, p)?)).abs());
    }
    for d in DIMS {
        for l in LAMBDAS {
            let params = DepolarizingParams::new(l, d, 1)?;
            min_margin = min_margin.min(gap(&params, order(2.0))? - gap_limit(&params)?);
        }
    }
    let limit3 = depol_core::stability::gap_limit_r(3.0);
    let h_min = (2..=10).map(|d| h_min_check(d).grid_min).fold(f64::INFINITY, f64::min);
    let ok = worst_id <= 1e-12 && min_margin > 0.0 && (limit3 - 1.0 / 3.0).abs() <= 1e-9 && h_min > 0.0;
    Ok(judge(
        ok,
        format!(
            "identity {worst_id:.2e}; min gap(2) - limit {min_margin:.4}; limit(r=3) = {limit3:.12}; min h on (1,100], d = 2..10: {h_min:.4}"
        ),
    ))
}

fn critical_value_formula(_seed: u64) -> depol_core::Result<Outcome> {
    let mut worst = 0.0f64;
    let mut corrected = 0.0f64;
    for d in 4..=10 {
        let c = HCritical::new(d).expect("d >= 4");
        worst = worst.max((c.printed_value - c.value).abs());
        corrected = corrected.max((c.corrected_value - c.value).abs());
    }
    Ok(judge(
        worst <= 1e-9,
        format!(
            "closed-form critical value 2 sqrt(6d-21)/3 - 2 + 12d vs h at the critical point, d = 4..10: max deviation {worst:.4}; 12d - 2 - (2/27)(6d-21)^(3/2) deviates by {corrected:.2e}"
        ),
    ))
}

fn excess_scaling(d: usize, n: usize, phi: &PureState, p: RenyiOrder) -> depol_core::Result<(f64, f64)> {
    let params = DepolarizingParams::new(0.5, d, n)?;
    let w = weight_decomposition(phi);
    let smin = min_output_renyi_closed(&params, p);
    let eps = [1e-2, 1e-3, 1e-4, 1e-5];
    let mut kept = (Vec::new(), Vec::new());
    let mut c_fit = 0.0f64;
    for &e in &eps {
        let out = apply_depolarizing(&params, &perturbed_product(e, phi)?.projector())?;
        let actual = renyi_entropy(&out, p)? - smin;
        let diff = (actual - predicted_excess(&w, e, &params, p)?).abs();
        c_fit = c_fit.max(diff / e.powf(1.4));
        if diff > 1e-13 {
            kept.0.push(e);
            kept.1.push(diff);
        }
    }
    let slope = if kept.0.len() >= 2 { loglog_slope(&kept.0, &kept.1) } else { f64::INFINITY };
    Ok((c_fit, slope))
}

fn excess_prediction(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 21);
    let mut cases = vec![(2, 2, PureState::basis(2, 2, 3)?)];
    cases.push((2, 3, sample_perpendicular(2, 3, 1, &mut rng)?));
    cases.push((3, 2, sample_perpendicular(3, 2, 2, &mut rng)?));
    let (mut c_max, mut slope_min) = (0.0f64, f64::INFINITY);
    for (d, n, phi) in &cases {
        for p in [1.0, 2.0, 5.0] {
            let (c, s) = excess_scaling(*d, *n, phi, order(p))?;
            c_max = c_max.max(c);
            slope_min = slope_min.min(s);
        }
    }
    Ok(judge(
        c_max.is_finite() && slope_min >= 1.4,
        format!("fitted C = {c_max:.3}; min slope of |actual - predicted| vs eps0: {slope_min:.3}"),
    ))
}

fn stability_directions(seed: u64) -> depol_core::Result<Outcome> {
    let mut rng = rng_for(seed, 22);
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (d, n) in [(2, 2), (2, 3), (3, 2)] {
        let params = DepolarizingParams::new(0.5, d, n)?;
        for p in [2.0, 3.0, 5.0] {
            let p = order(p);
            let acc = accept_coeff(&params, p)?;
            let rej = reject_coeff(p)?;
            let smin = min_output_renyi_closed(&params, p);
            for eps0 in [1e-3, 1e-4, 1e-5] {
                // weight >= 2 deviation: the best product fidelity is at most 1 - eps0'
                let phi = sample_perpendicular(d, n, 2, &mut rng)?;
                let psi = perturbed_product(eps0, &phi)?;
                let eps_prod = 1.0 - max_product_fidelity(&psi, 8, seed)?.value;
                let excess = renyi_entropy(&apply_depolarizing(&params, &psi.projector())?, p)? - smin;
                lower = lower.max((eps_prod * acc - excess) / eps_prod.powf(1.4));
                // any deviation at infidelity eps0
                let phi = sample_perpendicular(d, n, 1, &mut rng)?;
                let psi = perturbed_product(eps0, &phi)?;
                let excess = renyi_entropy(&apply_depolarizing(&params, &psi.projector())?, p)? - smin;
                upper = upper.max((excess - eps0 * rej) / eps0.powf(1.4));
            }
        }
    }
    Ok(judge(
        lower <= 1.0 && upper <= 1.0,
        format!("max (eps acc - excess)/eps^1.4 = {lower:.3e}; max (excess - eps rej)/eps^1.4 = {upper:.3e}"),
    ))
}

fn polygraph_soundness(seed: u64) -> depol_core::Result<Outcome> {
    let params = DepolarizingParams::new(0.5, 2, 2)?;
    let mut detail = Vec::new();
    let mut ok = true;
    for p in [2.0, 5.0] {
        let honest = TrialConfig::new(params, order(p), 1e-3, true, 200, seed);
        let mut cheat = TrialConfig::new(params, order(p), 1e-3, false, 200, seed);
        cheat.delta_min = Some(1e-2);
        cheat.delta_max = 0.1;
        let h = run_protocol(&honest)?;
        let c = run_protocol(&cheat)?;
        let again = run_protocol(&honest)?;
        let same = serde_json::to_vec(&h).ok() == serde_json::to_vec(&again).ok();
        let consistent = h
            .records
            .iter()
            .chain(&c.records)
            .all(|r| r.verdict == classify(r.s_value, 1e-3, &h.thresholds, r.s_min));
        ok &= h.summary.false_reject == 0 && h.summary.reject == 0 && c.summary.accept == 0 && same && consistent;
        detail.push(format!(
            "p={p}: honest rejects {}, cheating accepts {}, identical rerun {same}",
            h.summary.reject, c.summary.accept
        ));
    }
    Ok(judge(ok, detail.join("; ")))
}

fn polygraph_gap_band(seed: u64) -> depol_core::Result<Outcome> {
    let params = DepolarizingParams::new(0.5, 2, 2)?;
    let mut cfg = TrialConfig::new(params, order(2.0), 1e-3, false, 200, seed);
    cfg.delta_max = 2e-3;
    let run = run_protocol(&cfg)?;
    let undecided = run.records.iter().filter(|r| r.verdict == Verdict::Undecided).count();
    Ok(info(format!("delta in (eps, 2 eps]: {undecided}/200 undecided")))
}

pub fn checks() -> Vec<Check> {
    vec![
        Check { id: "core.metric_identity", criterion: Some(9), run: metric_identity },
        Check { id: "core.eig_reconstruction", criterion: None, run: eig_reconstruction },
        Check { id: "core.partial_trace", criterion: None, run: partial_trace_property },
        Check { id: "core.weights_and_fidelity", criterion: None, run: weights_and_fidelity },
        Check { id: "core.product_fidelity_restarts", criterion: None, run: product_fidelity_monotone },
        Check { id: "channel.product_spectrum", criterion: None, run: channel_product_spectrum },
        Check { id: "channel.trace_and_positivity", criterion: None, run: channel_trace_positivity },
        Check { id: "channel.site_order", criterion: None, run: channel_site_order },
        Check { id: "entropy.monotone_in_order", criterion: None, run: entropy_monotone },
        Check { id: "entropy.numeric_minimum", criterion: Some(5), run: numeric_minimum },
        Check { id: "entropy.closed_form_spectrum", criterion: None, run: closed_vs_spectrum },
        Check { id: "entropy.continuity_at_one", criterion: None, run: continuity_at_one },
        Check { id: "perturb.expansion_and_traces", criterion: Some(4), run: expansion_and_traces },
        Check { id: "perturb.divided_difference_symmetry", criterion: None, run: divided_difference_symmetry },
        Check { id: "perturb.degenerate_continuity", criterion: None, run: degenerate_continuity },
        Check { id: "perturb.second_order_coefficient", criterion: Some(3), run: second_order_coefficient },
        Check { id: "perturb.stability_family_generic", criterion: None, run: stability_family_generic },
        Check { id: "stability.accept_identity", criterion: Some(1), run: accept_identity },
        Check { id: "stability.sup_bound", criterion: None, run: sup_bound },
        Check { id: "stability.gap_identity", criterion: None, run: gap_identity },
        Check { id: "stability.monotonicity", criterion: Some(2), run: monotonicity },
        Check { id: "stability.monotonicity_low_orders", criterion: Some(2), run: monotonicity_low_orders },
        Check { id: "stability.derivative_signs", criterion: None, run: derivative_signs },
        Check { id: "stability.gap_claims", criterion: Some(7), run: gap_claims },
        Check { id: "stability.critical_value_formula", criterion: Some(7), run: critical_value_formula },
        Check { id: "stability.excess_prediction", criterion: Some(6), run: excess_prediction },
        Check { id: "stability.bound_directions", criterion: None, run: stability_directions },
        Check { id: "polygraph.soundness", criterion: Some(8), run: polygraph_soundness },
        Check { id: "polygraph.gap_band", criterion: None, run: polygraph_gap_band },
    ]
}

#[derive(Debug, Serialize)]
struct VerifyConfig {
    seed: u64,
}

pub fn run(args: &VerifyArgs, verbose: u8) -> Result<Report, CliError> {
    let cfg = VerifyConfig {
        seed: args.seed.unwrap_or(0),
    };
    let mut table = Table::new("checks", &["check", "criterion", "status", "detail"]);
    for check in checks() {
        let start = Instant::now();
        let outcome = (check.run)(cfg.seed).unwrap_or_else(|e| Outcome {
            status: Status::Fail,
            detail: format!("error: {e}"),
        });
        if verbose > 0 {
            let secs = start.elapsed().as_secs_f64();
            eprintln!("{:<40} {:<5} {secs:>6.2}s {}", check.id, outcome.status.as_str(), outcome.detail);
        }
        table.push(vec![
            check.id.into(),
            check.criterion.into(),
            outcome.status.as_str().into(),
            outcome.detail.into(),
        ]);
    }
    Ok(Report {
        command: "verify".into(),
        config: serde_json::to_value(&cfg).expect("serializable"),
        tables: vec![table],
    })
}

/// Number of failed checks in a `verify` report.
pub fn failures(report: &Report) -> usize {
    report.tables[0]
        .rows
        .iter()
        .filter(|row| row[2] == crate::output::Cell::Text("fail".into()))
        .count()
}
