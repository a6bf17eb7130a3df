//! Input-space and generic weight-space augmentations, and the stochastic
//! pipeline that composes them with the symmetry transforms.

mod generic;
mod input_space;
mod pipeline;

pub use generic::{dropout, gaussian_noise, quantile_dropout};
pub use input_space::{
    random_rotation, rotate_input, rotation_2d, scale_input, translate_input, InputMap, ORTHOGONALITY_TOL,
};
pub use pipeline::{
    apply_pipeline, AppliedStep, AugmentationDescriptor, AugmentationKind, AugmentationPipeline, Effect,
};
