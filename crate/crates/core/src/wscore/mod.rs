//! Weight-space data model: network specs, elements, evaluation,
//! initialization, and the `wse-json` file format.

mod element;
mod forward;
mod init;
pub mod io;
mod matrix;
mod spec;

pub use element::WeightSpaceElement;
pub use forward::Evaluator;
pub(crate) use forward::CompiledLayer;
pub use init::{init_for_spec, init_relu, init_siren, DEFAULT_OMEGA0};
pub use io::{deserialize, read_wse, serialize, write_wse};
pub use matrix::Matrix;
pub use spec::{ActivationKind, NetworkSpec};
