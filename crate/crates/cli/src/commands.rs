//! Subcommands other than `verify`: resolve defaults, validate, compute tables.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use depol_core::entropy::min_output_renyi_numeric_with;
use depol_core::optimize::SphereSearch;
use depol_core::perturb::{PerturbationFamily, ResidualFit};
use depol_core::stability::{h_min_check, FpVariant, StabilityThresholds};
use depol_core::{
    apply_depolarizing, gap_limit, max_product_fidelity, min_output_renyi_closed, renyi_entropy,
    renyi_entropy_spectrum, renyi_second_order_coeff, rng_for, run_protocol, PureState, sample_state,
    DensityMatrix, DepolarizingParams, RenyiOrder, SampleKind, TrialConfig,
};

use crate::args::{
    EntropyArgs, FpScanArgs, GapArgs, MinEntropyArgs, Mode, PolygraphArgs, StateKind, TaylorArgs, VariantChoice,
};
use crate::output::{Cell, Report, Table};
use crate::CliError;

/// Largest register dimension for entropy evaluation.
pub const MAX_DIM: usize = 256;
/// Largest register dimension for the numeric minimizer.
pub const MAX_NUMERIC_DIM: usize = 81;

fn precondition(msg: impl Into<String>) -> CliError {
    CliError::Precondition(msg.into())
}

fn nonempty<T: Clone>(v: &Option<Vec<T>>, default: &[T], name: &str) -> Result<Vec<T>, CliError> {
    let v = v.clone().unwrap_or_else(|| default.to_vec());
    if v.is_empty() {
        return Err(precondition(format!("{name} must not be empty")));
    }
    Ok(v)
}

fn order(p: f64) -> Result<RenyiOrder, CliError> {
    Ok(RenyiOrder::new(p)?)
}

fn register_dim(d: usize, n: usize, cap: usize) -> Result<usize, CliError> {
    let dim = (d as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if d < 2 || n < 1 || dim > cap as u64 {
        return Err(precondition(format!("d = {d}, n = {n}: need d >= 2, n >= 1 and d^n <= {cap}")));
    }
    Ok(dim as usize)
}

fn to_config<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("serializable config")
}

fn report(command: &str, config: Value, tables: Vec<Table>) -> Report {
    Report {
        command: command.to_string(),
        config,
        tables,
    }
}

#[derive(Debug, Serialize)]
struct EntropyConfig {
    states: Vec<StateKind>,
    d: Vec<usize>,
    n: Vec<usize>,
    lambda: Vec<f64>,
    p: Vec<f64>,
    samples: usize,
    seed: u64,
}

pub fn entropy(args: &EntropyArgs) -> Result<Report, CliError> {
    let cfg = EntropyConfig {
        states: nonempty(
            &args.states,
            &[StateKind::Zero, StateKind::Product, StateKind::Haar, StateKind::MaximallyMixed],
            "states",
        )?,
        d: nonempty(&args.d, &[2], "d")?,
        n: nonempty(&args.n, &[1, 2], "n")?,
        lambda: nonempty(&args.lambda, &[1.0], "lambda")?,
        p: nonempty(&args.p, &[1.0, 2.0], "p")?,
        samples: args.samples.unwrap_or(1),
        seed: args.seed.unwrap_or(0),
    };
    if cfg.samples == 0 {
        return Err(precondition("samples must be positive"));
    }
    let orders = cfg.p.iter().map(|&p| order(p)).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(
        "entropy",
        &["state", "d", "n", "lambda", "p", "sample", "entropy", "min_output_entropy", "excess"],
    );
    for &d in &cfg.d {
        for &n in &cfg.n {
            register_dim(d, n, MAX_DIM)?;
            for &lambda in &cfg.lambda {
                let params = DepolarizingParams::new(lambda, d, n)?;
                for &kind in &cfg.states {
                    let count = match kind {
                        StateKind::Product | StateKind::Haar => cfg.samples,
                        StateKind::Zero | StateKind::MaximallyMixed => 1,
                    };
                    for j in 0..count {
                        let seed = cfg.seed.wrapping_add(j as u64);
                        let input = match kind {
                            StateKind::Zero => depol_core::PureState::zero(d, n)?.projector(),
                            StateKind::Product => sample_state(SampleKind::Product, d, n, seed)?.projector(),
                            StateKind::Haar => sample_state(SampleKind::Haar, d, n, seed)?.projector(),
                            StateKind::MaximallyMixed => DensityMatrix::maximally_mixed(d, n)?,
                        };
                        let output = apply_depolarizing(&params, &input)?;
                        for &p in &orders {
                            let s = renyi_entropy(&output, p)?;
                            let smin = min_output_renyi_closed(&params, p);
                            table.push(vec![
                                kind.as_str().into(),
                                d.into(),
                                n.into(),
                                lambda.into(),
                                p.value().into(),
                                j.into(),
                                s.into(),
                                smin.into(),
                                (s - smin).into(),
                            ]);
                        }
                    }
                }
            }
        }
    }
    Ok(report("entropy", to_config(&cfg), vec![table]))
}

#[derive(Debug, Serialize)]
struct MinEntropyConfig {
    d: Vec<usize>,
    n: Vec<usize>,
    lambda: Vec<f64>,
    p: Vec<f64>,
    restarts: usize,
    seed: u64,
}

pub fn min_entropy(args: &MinEntropyArgs) -> Result<Report, CliError> {
    let cfg = MinEntropyConfig {
        d: nonempty(&args.d, &[2], "d")?,
        n: nonempty(&args.n, &[1, 2], "n")?,
        lambda: nonempty(&args.lambda, &[0.3, 0.7], "lambda")?,
        p: nonempty(&args.p, &[1.0, 2.0, 3.0, 5.0], "p")?,
        restarts: args.restarts.unwrap_or(4),
        seed: args.seed.unwrap_or(0),
    };
    if cfg.restarts == 0 {
        return Err(precondition("restarts must be positive"));
    }
    let mut grid = Vec::new();
    for &d in &cfg.d {
        for &n in &cfg.n {
            register_dim(d, n, MAX_NUMERIC_DIM)?;
            for &lambda in &cfg.lambda {
                let params = DepolarizingParams::new(lambda, d, n)?;
                for &p in &cfg.p {
                    grid.push((params, order(p)?));
                }
            }
        }
    }
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, (params, p))| {
            let mut rng = rng_for(cfg.seed, i as u64);
            let closed = min_output_renyi_closed(params, *p);
            let numeric = min_output_renyi_numeric_with(params, *p, cfg.restarts, &mut rng, &SphereSearch::default())?;
            let fid = max_product_fidelity(&numeric.argmin, 8, cfg.seed)?.value;
            Ok(vec![
                params.d().into(),
                params.n().into(),
                params.lambda().into(),
                p.value().into(),
                closed.into(),
                numeric.value.into(),
                (numeric.value - closed).into(),
                fid.into(),
            ])
        })
        .collect::<Result<Vec<Vec<Cell>>, CliError>>()?;
    let mut table = Table::new(
        "min_entropy",
        &["d", "n", "lambda", "p", "closed", "numeric", "numeric_minus_closed", "argmin_product_fidelity"],
    );
    rows.into_iter().for_each(|r| table.push(r));
    Ok(report("min-entropy", to_config(&cfg), vec![table]))
}

#[derive(Debug, Serialize)]
struct TaylorConfig {
    d: usize,
    n: usize,
    lambda: f64,
    p: Vec<f64>,
    families: usize,
    max_side: usize,
    t_grid: Vec<f64>,
    seed: u64,
}

/// Step used for the finite-difference coefficient.
pub const FD_STEP: f64 = 1e-4;

pub fn taylor_check(args: &TaylorArgs) -> Result<Report, CliError> {
    let cfg = TaylorConfig {
        d: args.d.unwrap_or(2),
        n: args.n.unwrap_or(2),
        lambda: args.lambda.unwrap_or(0.5),
        p: nonempty(&args.p, &[1.0, 2.0, 3.0], "p")?,
        families: args.families.unwrap_or(20),
        max_side: args.max_side.unwrap_or(16),
        t_grid: nonempty(&args.t_grid, &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3], "t_grid")?,
        seed: args.seed.unwrap_or(0),
    };
    register_dim(cfg.d, cfg.n, MAX_DIM)?;
    if !(2..=64).contains(&cfg.max_side) {
        return Err(precondition(format!("max_side = {} must lie in [2, 64]", cfg.max_side)));
    }
    let params = DepolarizingParams::new(cfg.lambda, cfg.d, cfg.n)?;
    params.require_open()?;
    let orders = cfg.p.iter().map(|&p| order(p)).collect::<Result<Vec<_>, _>>()?;

    let mut families = Vec::new();
    // |1...1>
    let ones = (0..cfg.n).fold(0, |acc, _| acc * cfg.d + 1);
    families.push(("stability", PerturbationFamily::stability(&params, &PureState::basis(cfg.d, cfg.n, ones)?)?));
    for j in 0..cfg.families {
        let mut rng = rng_for(cfg.seed, j as u64 + 1);
        let side = 2 + j % (cfg.max_side - 1);
        families.push(("random", PerturbationFamily::random(side, 1.0, &mut rng)?));
    }

    let mut summary = Table::new(
        "taylor",
        &["family", "kind", "side", "p", "coeff", "fd_coeff", "relative_error", "slope", "exact_within_noise"],
    );
    let mut residuals = Table::new("residuals", &["family", "p", "t", "residual"]);
    for (idx, (kind, fam)) in families.iter().enumerate() {
        for &p in &orders {
            let coeff = renyi_second_order_coeff(fam, p)?;
            let s0 = renyi_entropy_spectrum(fam.rho_spectrum(), p)?;
            let fd = fam.finite_difference_coeff(FD_STEP, p)?;
            let rel = (fd - coeff).abs() / coeff.abs().max(f64::MIN_POSITIVE);
            let fit = depol_core::taylor_residual_check(fam, p, &cfg.t_grid)?;
            let (slope, exact) = match &fit {
                ResidualFit::Slope { slope, .. } => (Some(*slope), false),
                ResidualFit::ExactWithinNoise => (None, true),
            };
            summary.push(vec![
                idx.into(),
                (*kind).into(),
                fam.side().into(),
                p.value().into(),
                coeff.into(),
                fd.into(),
                rel.into(),
                slope.into(),
                exact.into(),
            ]);
            for &t in &cfg.t_grid {
                let r = (fam.entropy_at(t, p)? - s0 - t * t * coeff).abs();
                residuals.push(vec![idx.into(), p.value().into(), t.into(), r.into()]);
            }
        }
    }
    Ok(report("taylor-check", to_config(&cfg), vec![summary, residuals]))
}

/// Parses `a..b` (inclusive integer range) or a comma list of reals.
pub fn parse_points(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse points {spec:?}; use a..b or a comma list"));
    let pts = if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).map(f64::from).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if pts.is_empty() {
        return Err(bad());
    }
    if let Some(x) = pts.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(precondition(format!("point x = {x} must be finite and >= 0")));
    }
    Ok(pts)
}

#[derive(Debug, Serialize)]
struct FpScanConfig {
    d: Vec<usize>,
    lambda: Vec<f64>,
    p: Vec<f64>,
    x: String,
    variant: VariantChoice,
    x_max: u32,
}

pub fn fp_scan(args: &FpScanArgs) -> Result<Report, CliError> {
    let cfg = FpScanConfig {
        d: nonempty(&args.d, &[2], "d")?,
        lambda: nonempty(&args.lambda, &[0.5], "lambda")?,
        p: nonempty(&args.p, &[2.0], "p")?,
        x: args.x.clone().unwrap_or_else(|| "2..10".into()),
        variant: args.variant.unwrap_or(VariantChoice::Both),
        x_max: args.x_max.unwrap_or(50),
    };
    let xs = parse_points(&cfg.x)?;
    if cfg.x_max < 3 {
        return Err(precondition(format!("x_max = {} must be at least 3", cfg.x_max)));
    }
    let (want_c, want_p) = match cfg.variant {
        VariantChoice::Canonical => (true, false),
        VariantChoice::AsPrinted => (false, true),
        VariantChoice::Both => (true, true),
    };
    let mut values = Table::new(
        "fp",
        &["d", "lambda", "r", "p", "x", "f_canonical", "f_as_printed", "first_term_factor"],
    );
    let mut mono = Table::new("monotonicity", &["d", "lambda", "p", "x_max", "worst_step", "worst_at", "monotone"]);
    for &d in &cfg.d {
        for &lambda in &cfg.lambda {
            let params = DepolarizingParams::new(lambda, d, 1)?;
            let r = params.require_open()?;
            for &pv in &cfg.p {
                let p = order(pv)?;
                if !p.is_von_neumann() && pv < 1.0 {
                    return Err(precondition(format!("p = {pv} must be >= 1")));
                }
                for &x in &xs {
                    let canonical = if want_c {
                        Some(depol_core::stability::bound_function(x, &params, p)?)
                    } else {
                        None
                    };
                    let printed = if want_p && !p.is_von_neumann() {
                        Some(depol_core::f_p(x, &params, p, FpVariant::AsPrinted)?)
                    } else {
                        None
                    };
                    let factor = (d as f64 + r - 1.0).powf(-2.0 * x);
                    values.push(vec![
                        d.into(),
                        lambda.into(),
                        r.into(),
                        pv.into(),
                        x.into(),
                        canonical.into(),
                        printed.into(),
                        factor.into(),
                    ]);
                }
                let scan = depol_core::monotonicity_scan(&params, p, cfg.x_max)?;
                mono.push(vec![
                    d.into(),
                    lambda.into(),
                    pv.into(),
                    cfg.x_max.into(),
                    scan.worst_step.into(),
                    scan.worst_at.into(),
                    (scan.worst_step >= -1e-12).into(),
                ]);
            }
        }
    }
    Ok(report("fp-scan", to_config(&cfg), vec![values, mono]))
}

#[derive(Debug, Serialize)]
struct GapConfig {
    d: Vec<usize>,
    lambda: Vec<f64>,
    p: Vec<f64>,
    h_d: Vec<u32>,
}

pub fn gap(args: &GapArgs) -> Result<Report, CliError> {
    let cfg = GapConfig {
        d: nonempty(&args.d, &[2], "d")?,
        lambda: nonempty(&args.lambda, &[0.5], "lambda")?,
        p: nonempty(&args.p, &[2.0, 200.0], "p")?,
        h_d: nonempty(&args.h_d, &(2..=10).collect::<Vec<u32>>(), "h_d")?,
    };
    let mut table = Table::new(
        "gap",
        &["d", "lambda", "r", "p", "accept_coeff", "reject_coeff", "gap", "gap_limit", "gap_minus_limit"],
    );
    for &d in &cfg.d {
        for &lambda in &cfg.lambda {
            let params = DepolarizingParams::new(lambda, d, 1)?;
            let r = params.require_open()?;
            let limit = gap_limit(&params)?;
            for &pv in &cfg.p {
                if !(pv > 1.0) {
                    return Err(precondition(format!("p = {pv} must be > 1 for the gap")));
                }
                let t = StabilityThresholds::new(&params, order(pv)?)?;
                let g = t.gap.expect("p > 1");
                table.push(vec![
                    d.into(),
                    lambda.into(),
                    r.into(),
                    pv.into(),
                    t.accept_coeff.into(),
                    t.reject_coeff.into(),
                    g.into(),
                    limit.into(),
                    (g - limit).into(),
                ]);
            }
        }
    }
    let mut h = Table::new(
        "h_poly",
        &[
            "d",
            "grid_min",
            "grid_argmin",
            "critical_r",
            "h_at_critical",
            "printed_critical_value",
            "corrected_critical_value",
        ],
    );
    for &d in &cfg.h_d {
        if d < 2 {
            return Err(precondition(format!("h_d = {d} must be at least 2")));
        }
        let c = h_min_check(d);
        h.push(vec![
            d.into(),
            c.grid_min.into(),
            c.grid_argmin.into(),
            c.critical.map(|c| c.r).into(),
            c.critical.map(|c| c.value).into(),
            c.critical.map(|c| c.printed_value).into(),
            c.critical.map(|c| c.corrected_value).into(),
        ]);
    }
    Ok(report("gap", to_config(&cfg), vec![table, h]))
}

#[derive(Debug, Serialize)]
struct PolygraphConfig {
    #[serde(flatten)]
    trial: TrialConfig,
    gap_report: Option<Vec<f64>>,
}

pub fn polygraph(args: &PolygraphArgs) -> Result<Report, CliError> {
    let params = DepolarizingParams::new(args.lambda.unwrap_or(0.5), args.d.unwrap_or(2), args.n.unwrap_or(2))?;
    let mut trial = TrialConfig::new(
        params,
        order(args.p.unwrap_or(2.0))?,
        args.eps.unwrap_or(1e-3),
        args.mode.unwrap_or(Mode::Honest) == Mode::Honest,
        args.trials.unwrap_or(200),
        args.seed.unwrap_or(0),
    );
    trial.delta_min = args.delta_min;
    if let Some(v) = args.delta_max {
        trial.delta_max = v;
    }
    if let Some(v) = args.min_weight {
        trial.min_weight = v;
    }
    if let Some(v) = args.sigma {
        trial.sigma = v;
    }
    if let Some(v) = args.restarts {
        trial.restarts = v;
    }
    trial.validate()?;
    let run = run_protocol(&trial)?;

    let mut records = Table::new(
        "trials",
        &[
            "index",
            "delta",
            "product_fidelity",
            "s_value",
            "s_min",
            "verdict",
            "accept_margin",
            "reject_margin",
        ],
    );
    for r in &run.records {
        records.push(vec![
            r.index.into(),
            r.delta.into(),
            r.product_fidelity.into(),
            r.s_value.into(),
            r.s_min.into(),
            r.verdict.as_str().into(),
            r.accept_margin.into(),
            r.reject_margin.into(),
        ]);
    }
    let s = &run.summary;
    let mut summary = Table::new(
        "summary",
        &[
            "trials",
            "accept",
            "undecided",
            "reject",
            "false_accept",
            "false_reject",
            "accept_coeff",
            "reject_coeff",
            "guaranteed",
        ],
    );
    summary.push(vec![
        s.trials.into(),
        s.accept.into(),
        s.undecided.into(),
        s.reject.into(),
        s.false_accept.into(),
        s.false_reject.into(),
        run.thresholds.accept_coeff.into(),
        run.thresholds.reject_coeff.into(),
        trial.guaranteed().into(),
    ]);
    let mut tables = vec![records, summary];
    if let Some(ps) = &args.gap_report {
        let rows = depol_core::gap_width_report(&trial, ps)?;
        let mut t = Table::new("gap_report", &["p", "accept_coeff", "reject_coeff", "gap", "undecided_rate"]);
        for r in rows {
            t.push(vec![r.p.into(), r.accept_coeff.into(), r.reject_coeff.into(), r.gap.into(), r.undecided_rate.into()]);
        }
        tables.push(t);
    }
    let cfg = PolygraphConfig {
        trial,
        gap_report: args.gap_report.clone(),
    };
    Ok(report("polygraph", to_config(&cfg), tables))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_specs() {
        assert_eq!(parse_points("2..5").unwrap(), vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(parse_points("0.5, 2").unwrap(), vec![0.5, 2.0]);
        assert!(matches!(parse_points("5..2"), Err(CliError::Usage(_))));
        assert!(matches!(parse_points("a"), Err(CliError::Usage(_))));
        assert!(matches!(parse_points("-1"), Err(CliError::Precondition(_))));
    }

    #[test]
    fn gap_defaults() {
        let r = gap(&GapArgs::default()).unwrap();
        let t = r.table("gap").unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0][6], Cell::Float(depol_core::gap(&DepolarizingParams::new(0.5, 2, 1).unwrap(), order(2.0).unwrap()).unwrap()));
        assert_eq!(r.table("h_poly").unwrap().rows.len(), 9);
    }

    #[test]
    fn register_limits() {
        assert!(register_dim(2, 8, MAX_DIM).is_ok());
        assert!(register_dim(2, 9, MAX_DIM).is_err());
        assert!(register_dim(1, 2, MAX_DIM).is_err());
        assert!(register_dim(3, 100, MAX_DIM).is_err());
    }
}
