//! Executable checks of the model's analytic properties: state and gradient
//! bound suites, the gradient-contribution scaling study, the gate-value
//! histogram, and the oracle suites behind `lem verify`.

mod bounds;
mod histogram;
mod report;
mod scaling;
mod suites;

pub use bounds::{prop1_bound, prop1_statement_bound, prop1_suite, prop2_suite, random_inputs, random_model};
pub use histogram::{delta_t_histogram, write_gate_csv, GateHistogram, GateStats};
pub use report::{CaseResult, VerificationReport};
pub use scaling::{
    prop3_scaling, prop3_scaling_with, ScalingResult, ScalingRow, WeightFamily, K_RATIO_LIMIT, SLOPE_RANGE,
};
pub use suites::{
    equivalence_suite, gradcheck_suite, hmm_suite, GradcheckSettings, EQUIVALENCE_TOLERANCE, GRADCHECK_FLOOR,
    GRADCHECK_TOLERANCE, HMM_SETTINGS, HMM_TARGET, HMM_TAUS,
};
