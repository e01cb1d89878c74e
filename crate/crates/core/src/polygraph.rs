//! Batch simulation of the entanglement polygraph.
//!
//! Alice should send `|0...0>` through `D^{\otimes n}`. She prepares
//! `sqrt(1-δ)|0...0> + sqrt(δ)|phi>` instead, with `δ <= ε` when honest and
//! `δ > ε` when cheating. Bob evaluates the output entropy (exactly, plus
//! optional Gaussian noise) and classifies it against the thresholds.
//!
//! Each trial draws from its own stream `(seed, trial index)`, so runs are
//! reproducible whatever the thread count.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_depolarizing, DepolarizingParams};
use crate::entropy::{min_output_renyi_closed, renyi_entropy, RenyiOrder};
use crate::error::{Error, Result};
use crate::product::max_product_fidelity_with;
use crate::sampling::{rng_for, sample_perpendicular};
use crate::stability::{classify, StabilityThresholds, Verdict};
use crate::state::perturbed_product;

fn default_min_weight() -> usize {
    2
}

fn default_delta_max() -> f64 {
    0.1
}

fn default_restarts() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub params: DepolarizingParams,
    pub p: RenyiOrder,
    pub eps: f64,
    pub honest: bool,
    /// Lower end of the cheating infidelity range; defaults to `eps`.
    #[serde(default)]
    pub delta_min: Option<f64>,
    /// Upper end of the cheating infidelity range.
    #[serde(default = "default_delta_max")]
    pub delta_max: f64,
    /// Smallest Hamming weight in the perpendicular direction. Below 2 the
    /// directions are unrestricted and outside the stability guarantee.
    #[serde(default = "default_min_weight")]
    pub min_weight: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub sigma: f64,
    /// Restarts for the product-fidelity search.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

impl TrialConfig {
    pub fn new(params: DepolarizingParams, p: RenyiOrder, eps: f64, honest: bool, trials: usize, seed: u64) -> Self {
        Self {
            params,
            p,
            eps,
            honest,
            delta_min: None,
            delta_max: default_delta_max(),
            min_weight: default_min_weight(),
            trials,
            seed,
            sigma: 0.0,
            restarts: default_restarts(),
        }
    }

    /// Infidelity range `(lo, hi)`: `[0, ε]` when honest, `(δ_min, δ_max]` otherwise.
    pub fn delta_range(&self) -> (f64, f64) {
        if self.honest {
            (0.0, self.eps)
        } else {
            (self.delta_min.unwrap_or(self.eps), self.delta_max)
        }
    }

    /// Whether the direction sampler stays inside the stability guarantee.
    pub fn guaranteed(&self) -> bool {
        self.min_weight >= 2
    }

    pub fn validate(&self) -> Result<()> {
        let (d, n) = (self.params.d(), self.params.n());
        if d > 3 || n > 4 {
            return Err(Error::Config(format!("d = {d}, n = {n} exceeds the supported d <= 3, n <= 4")));
        }
        self.params.require_open().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        let (lo, hi) = self.delta_range();
        if !self.honest && !(0.0 <= lo && lo < hi && hi < 1.0) {
            return Err(Error::Config(format!("cheating range ({lo}, {hi}] must satisfy 0 <= lo < hi < 1")));
        }
        if self.min_weight == 0 || self.min_weight > n {
            return Err(Error::Config(format!("min_weight = {} must lie in [1, {n}]", self.min_weight)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma = {} must be finite and >= 0", self.sigma)));
        }
        if !self.p.is_von_neumann() && self.p.value() < 1.0 {
            return Err(Error::Config(format!("p = {} must be >= 1", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    /// Infidelity with `|0...0>` of the prepared state.
    pub delta: f64,
    /// Best product-state fidelity found for the prepared state.
    pub product_fidelity: f64,
    pub s_value: f64,
    pub s_min: f64,
    pub verdict: Verdict,
    /// `S_value - (S_min + ε accept)`; negative means accepted.
    pub accept_margin: f64,
    /// `S_value - (S_min + ε reject)`; nonnegative means rejected.
    pub reject_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub accept: usize,
    pub undecided: usize,
    pub reject: usize,
    /// Accepted with `δ > ε`.
    pub false_accept: usize,
    /// Rejected with `δ <= ε`.
    pub false_reject: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolRun {
    pub thresholds: StabilityThresholds,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

fn run_trial(config: &TrialConfig, thresholds: &StabilityThresholds, s_min: f64, index: usize) -> Result<TrialRecord> {
    let mut rng = rng_for(config.seed, index as u64);
    let (lo, hi) = config.delta_range();
    let delta = if config.honest {
        rng.random_range(lo..=hi)
    } else {
        // (lo, hi]: reflect the half-open draw
        hi - rng.random_range(0.0..(hi - lo))
    };
    let (d, n) = (config.params.d(), config.params.n());
    let phi = sample_perpendicular(d, n, config.min_weight, &mut rng)?;
    let psi = perturbed_product(delta, &phi)?;
    let product_fidelity = max_product_fidelity_with(&psi, config.restarts, &mut rng)?.value;
    let rho = apply_depolarizing(&config.params, &psi.projector())?;
    let mut s_value = renyi_entropy(&rho, config.p)?;
    if config.sigma > 0.0 {
        let noise = Normal::new(0.0, config.sigma).map_err(|e| Error::Config(e.to_string()))?;
        s_value += noise.sample(&mut rng);
    }
    let eps = config.eps;
    Ok(TrialRecord {
        index,
        delta,
        product_fidelity,
        s_value,
        s_min,
        verdict: classify(s_value, eps, thresholds, s_min),
        accept_margin: s_value - (s_min + eps * thresholds.accept_coeff),
        reject_margin: thresholds.reject_coeff.map(|rej| s_value - (s_min + eps * rej)),
    })
}

pub fn summarize(records: &[TrialRecord], eps: f64) -> Summary {
    let mut s = Summary {
        trials: records.len(),
        ..Summary::default()
    };
    for r in records {
        match r.verdict {
            Verdict::Accept => {
                s.accept += 1;
                if r.delta > eps {
                    s.false_accept += 1;
                }
            }
            Verdict::Reject => {
                s.reject += 1;
                if r.delta <= eps {
                    s.false_reject += 1;
                }
            }
            Verdict::Undecided => s.undecided += 1,
        }
    }
    s
}

/// Runs `config.trials` independent trials in parallel.
pub fn run_protocol(config: &TrialConfig) -> Result<ProtocolRun> {
    config.validate()?;
    let thresholds = StabilityThresholds::new(&config.params, config.p)?;
    let s_min = min_output_renyi_closed(&config.params, config.p);
    let records = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, &thresholds, s_min, i))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records, config.eps);
    Ok(ProtocolRun {
        thresholds,
        records,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub p: f64,
    pub accept_coeff: f64,
    pub reject_coeff: f64,
    pub gap: f64,
    pub undecided_rate: f64,
}

/// Thresholds and the observed undecided rate of `config`'s sampler for each
/// order in `p_list`, sorted by `p`.
pub fn gap_width_report(config: &TrialConfig, p_list: &[f64]) -> Result<Vec<GapRow>> {
    let mut ps = p_list.to_vec();
    if let Some(bad) = ps.iter().find(|&&p| !(p >= 2.0) || !p.is_finite()) {
        return Err(Error::Config(format!("gap report orders must be finite and >= 2, got {bad}")));
    }
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    ps.into_iter()
        .map(|p| {
            let cfg = TrialConfig {
                p: RenyiOrder::new(p)?,
                ..config.clone()
            };
            let run = run_protocol(&cfg)?;
            Ok(GapRow {
                p,
                accept_coeff: run.thresholds.accept_coeff,
                reject_coeff: run.thresholds.reject_coeff.expect("p >= 2"),
                gap: run.thresholds.gap.expect("p >= 2"),
                undecided_rate: run.summary.undecided as f64 / run.summary.trials as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(honest: bool, p: f64) -> TrialConfig {
        let params = DepolarizingParams::new(0.5, 2, 2).unwrap();
        TrialConfig::new(params, RenyiOrder::new(p).unwrap(), 1e-3, honest, 40, 11)
    }

    #[test]
    fn honest_trials_are_never_rejected() {
        let run = run_protocol(&config(true, 2.0)).unwrap();
        assert_eq!(run.summary.reject, 0);
        assert!(run.records.iter().all(|r| r.delta <= 1e-3));
        assert!(run.records.iter().all(|r| r.product_fidelity >= 1.0 - r.delta - 1e-12));
    }

    #[test]
    fn far_cheaters_are_never_accepted() {
        let mut cfg = config(false, 2.0);
        cfg.delta_min = Some(1e-2);
        cfg.delta_max = 5e-2;
        let run = run_protocol(&cfg).unwrap();
        assert_eq!(run.summary.accept, 0);
        assert!(run.records.iter().all(|r| r.delta > 1e-2 && r.delta <= 5e-2));
    }

    #[test]
    fn records_agree_with_classifier() {
        let mut cfg = config(false, 3.0);
        cfg.delta_max = 3e-3;
        cfg.sigma = 1e-4;
        let run = run_protocol(&cfg).unwrap();
        for r in &run.records {
            assert_eq!(r.verdict, classify(r.s_value, cfg.eps, &run.thresholds, r.s_min));
        }
        let s = &run.summary;
        assert_eq!(s.accept + s.reject + s.undecided, s.trials);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let cfg = config(true, 5.0);
        let a = run_protocol(&cfg).unwrap();
        let b = run_protocol(&cfg).unwrap();
        assert_eq!(a, b);
        let serial: Vec<_> = (0..cfg.trials)
            .map(|i| run_trial(&cfg, &a.thresholds, a.records[0].s_min, i).unwrap())
            .collect();
        assert_eq!(serial, a.records);
    }

    #[test]
    fn validation() {
        let mut cfg = config(true, 2.0);
        cfg.eps = 0.0;
        assert!(run_protocol(&cfg).is_err());
        let mut cfg = config(false, 2.0);
        cfg.delta_max = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = config(true, 2.0);
        cfg.params = DepolarizingParams::new(0.5, 2, 5).unwrap();
        assert!(cfg.validate().is_err());
        let mut cfg = config(true, 2.0);
        cfg.min_weight = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = config(true, 2.0);
        cfg.sigma = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn gap_report_rows() {
        let mut cfg = config(false, 2.0);
        cfg.trials = 10;
        let rows = gap_width_report(&cfg, &[200.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].p, 2.0);
        assert!((rows[0].gap - 1.04).abs() < 1e-12);
        assert!((rows[1].gap - 1.0 / 3.0).abs() < 0.01);
        for r in &rows {
            assert!((r.gap - (r.reject_coeff - r.accept_coeff)).abs() < 1e-12);
        }
        assert!(gap_width_report(&cfg, &[1.5]).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = config(false, 2.0);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: TrialConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let bad = text.replace("\"lambda\":0.5", "\"lambda\":1.5");
        assert!(serde_json::from_str::<TrialConfig>(&bad).is_err());
    }
}
