//! Exact, function-preserving weight-space symmetries: hidden-neuron
//! permutations and the activation-induced transforms of ReLU and sine
//! layers.

mod activation;
mod perm;
mod random;

pub use activation::{relu_scaling, siren_bias, siren_negation, NeuronSigns, PhaseShifts, PositiveScales};
pub use perm::{apply_permutation, Permutation, PermutationSequence};
pub use random::{random_symmetry, SymmetryConfig};
pub(crate) use random::{hidden_layers_with, sample_negation, sample_phase, sample_scales};
