//! Weight-space data augmentation for MLP and SIREN implicit neural
//! representations.
//!
//! * [`wscore`]: weight-space elements, forward evaluation, `wse-json` I/O
//! * [`fit`]: fitting INRs to images and SDFs, synthetic signals, PSNR
//! * [`symmetry`]: function-preserving permutations and activation symmetries
//! * [`augment`]: input-space and generic augmentations, stochastic pipelines
//! * [`alignmix`]: linear assignment, weight matching, weight-space mixup,
//!   loss barriers
//! * [`harness`]: verification, rendering, dataset generation, CLI

pub mod alignmix;
pub mod augment;
pub mod error;
pub mod fit;
pub mod harness;
pub mod pgm;
pub mod rng;
pub mod symmetry;
pub mod wscore;

pub use error::{Error, Result};
pub use wscore::{ActivationKind, Matrix, NetworkSpec, WeightSpaceElement};
