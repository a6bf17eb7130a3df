//! End-to-end checks, rendering, dataset generation, and the `wsaug`
//! command line.

mod cli;
mod dataset;
mod render;
mod verify;

pub use cli::run_cli;
pub use dataset::{
    gen_dataset, thread_pool, DatasetConfig, DatasetManifest, ManifestEntry, ManifestFailure, THREADS_ENV,
};
pub use render::{fraction_within, pullback_quarter_turn, render_inr};
pub use verify::{default_tolerance, verify_preservation, VerificationReport, VerifyKind};
