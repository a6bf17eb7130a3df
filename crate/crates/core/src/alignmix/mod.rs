//! Alignment of weight-space elements by weight matching, the three mixup
//! variants, and loss barriers along linear interpolation paths.

mod barrier;
mod lap;
mod matching;
mod mixup;

pub use barrier::{loss_barrier, AlignMode, BarrierProfile};
pub use lap::solve_lap;
pub use matching::{alignment_objective, weight_matching, AlignmentResult, MatchingConfig};
pub use mixup::{
    mix_labels, mixup, mixup_aligned, mixup_naive, mixup_randperm, one_hot, sample_lambda, sample_pairs, MixupMode,
    MixupSample, PairingPolicy,
};
