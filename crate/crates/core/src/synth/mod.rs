//! Forward simulation from the generative model and parameter-recovery
//! studies.

mod design;
mod generate;
mod recovery;

pub use design::{CovariateGenerator, CovariateScheme, SynthDesign, TrueParameters, BENCHMARK_DD_STEP};
pub use generate::{generate, SynthDataset};
pub use recovery::{recovery_study, RecoveryReport, RecoveryRow};
