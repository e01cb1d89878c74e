//! Numerical toolkit for the stability of qudit depolarizing channels with
//! respect to minimal output Rényi entropies.
//!
//! - [`linalg`], [`state`], [`sampling`], [`product`]: Hermitian linear algebra,
//!   qudit registers, random states and best product approximations.
//! - [`channel`], [`entropy`]: the channel `D^{\otimes n}` and Rényi entropies.
//! - [`perturb`]: divided differences and the second-order entropy coefficient.
//! - [`stability`]: bound functions, thresholds, the gap and the classifier.
//! - [`polygraph`]: the protocol simulator.

pub mod channel;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod perturb;
pub mod polygraph;
pub mod product;
pub mod sampling;
pub mod stability;
pub mod state;
pub mod tol;

pub use channel::{
    apply_depolarizing, apply_depolarizing_operator, apply_depolarizing_site, product_output_eigenvalues,
    product_output_spectrum, DepolarizingParams, SpectralLine,
};
pub use entropy::{
    min_output_renyi_closed, min_output_renyi_numeric, output_entropy, renyi_entropy, renyi_entropy_lines,
    renyi_entropy_spectrum, NumericMin, RenyiOrder,
};
pub use error::{Error, Result};
pub use linalg::{eig_hermitian, eigvals_hermitian, ComplexMatrix, HermitianSpectrum, C64};
pub use perturb::{
    apply_l, apply_q, divided_diff, renyi_second_order_coeff, second_divided_diff, taylor_residual_check, trace_l,
    trace_q, PerturbationFamily, Power, ResidualFit, ScalarFunction, XLogX,
};
pub use polygraph::{gap_width_report, run_protocol, GapRow, ProtocolRun, Summary, TrialConfig, TrialRecord};
pub use product::{max_product_fidelity, ProductFidelity};
pub use sampling::{rng_for, sample_perpendicular, sample_state, SampleKind};
pub use stability::{
    accept_coeff, classify, f_p, f_vn, gap, gap_limit, h_min_check, h_poly, monotonicity_scan, predicted_excess,
    reject_coeff, FpVariant, StabilityThresholds, Verdict,
};
pub use state::{
    fidelity_pure, matrix_power, partial_trace, perturbed_product, tensor, trace_distance, weight_decomposition,
    DensityMatrix, PureState, WeightDecomposition,
};
