//! The one-run audit pipeline.

mod guesses;
mod replacement;
mod run;
mod sweep;
mod vectors;

pub use guesses::{count_correct, make_guesses, partition, sample_selection, Partition};
pub use replacement::{replacement_dataset, replacement_selection, CanaryPairSet};
pub use run::{
    audit_run, audit_run_stream, trial_rng, AuditConfig, AuditReport, ConfidenceBound, ConstantScores, Mechanism,
    MechanismOutput, PValueAt,
};
pub use sweep::{k_sweep, symmetric_grid, KSweep, KSweepRow};
pub use vectors::{GuessVector, ScoreVector, SelectionVector};
