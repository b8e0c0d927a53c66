//! Small-scale DP-SGD with Dirac canaries and one-run scoring.

mod config;
mod mechanism;
mod model;
mod score;
mod trace_io;
mod train;

pub use config::{Init, TrainerConfig};
pub use mechanism::{DpsgdMechanism, ScoreKind};
pub use model::{dirac_canaries, synthetic_dataset, DiracCanary, Example, Gradient, LossKind, LossModel, SyntheticData};
pub use score::{blackbox_score, theoretical_eps_upper, whitebox_score};
pub use trace_io::{read_trace, write_trace, TRACE_MAGIC};
pub use train::{dpsgd_train, ModelTrace};
