//! Simulated mechanisms to audit, plus closed-form privacy accounting.

mod accounting;
mod normal;
mod samplers;

pub use accounting::{
    dpsgd_rdp_eps, expected_correct_gaussian, gaussian_dp_delta, gaussian_dp_eps, rdp_membership_accuracy,
    GaussianExpectation, RdpParams, ZcdpParams,
};
pub use normal::{normal_cdf, normal_sf};
pub use samplers::{
    gaussian_report, pathological, pathological_branch, randomized_response, GaussianReportConfig,
    PathologicalConfig, RRConfig,
};
