use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-wise activation applied after a layer's affine map.
///
/// `Sine` is the plain `sin(z)`; any SIREN frequency factor lives in the
/// weights, so the odd/periodic identities of `sin` hold exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Sine,
    Identity,
}

impl ActivationKind {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::Sine => z.sin(),
            ActivationKind::Identity => z,
        }
    }

    /// Derivative; the ReLU subgradient at 0 is taken as 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sine => z.cos(),
            ActivationKind::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Sine => "sine",
            ActivationKind::Identity => "identity",
        }
    }
}

/// Layer widths `[d0, d1, ..., dM]` plus one activation per layer.
///
/// Layers are indexed from 0: layer `l` maps `dims[l]` to `dims[l + 1]`.
/// Hidden layer `h` (for `h < M - 1`) is the output of layer `h`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct NetworkSpec {
    dims: Vec<usize>,
    activations: Vec<ActivationKind>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    dims: Vec<usize>,
    activations: Vec<ActivationKind>,
}

impl TryFrom<RawSpec> for NetworkSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        NetworkSpec::new(raw.dims, raw.activations)
    }
}

impl From<NetworkSpec> for RawSpec {
    fn from(spec: NetworkSpec) -> Self {
        RawSpec {
            dims: spec.dims,
            activations: spec.activations,
        }
    }
}

impl NetworkSpec {
    pub fn new(dims: Vec<usize>, activations: Vec<ActivationKind>) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::InvalidSpec(format!(
                "need at least one hidden layer, got dims {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidSpec(format!("zero width in dims {dims:?}")));
        }
        if activations.len() != dims.len() - 1 {
            return Err(Error::InvalidSpec(format!(
                "{} layers need {} activations, got {}",
                dims.len() - 1,
                dims.len() - 1,
                activations.len()
            )));
        }
        let last = activations.len() - 1;
        if let Some(l) = activations[..last]
            .iter()
            .position(|&a| a == ActivationKind::Identity)
        {
            return Err(Error::InvalidSpec(format!(
                "identity activation is only allowed on the final layer, found on layer {l}"
            )));
        }
        Ok(Self { dims, activations })
    }

    /// All hidden layers use `hidden`, the output layer is linear.
    pub fn uniform(dims: Vec<usize>, hidden: ActivationKind) -> Result<Self> {
        let m = dims.len().saturating_sub(1);
        let mut acts = vec![hidden; m];
        if let Some(last) = acts.last_mut() {
            *last = ActivationKind::Identity;
        }
        Self::new(dims, acts)
    }

    pub fn siren(dims: Vec<usize>) -> Result<Self> {
        Self::uniform(dims, ActivationKind::Sine)
    }

    pub fn relu(dims: Vec<usize>) -> Result<Self> {
        Self::uniform(dims, ActivationKind::Relu)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activations(&self) -> &[ActivationKind] {
        &self.activations
    }

    /// Number of affine layers `M`.
    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    pub fn num_hidden(&self) -> usize {
        self.num_layers() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    /// `(rows, cols)` of layer `l`'s weight matrix.
    pub fn weight_shape(&self, l: usize) -> (usize, usize) {
        (self.dims[l + 1], self.dims[l])
    }

    pub fn hidden_width(&self, h: usize) -> usize {
        self.dims[h + 1]
    }

    pub fn hidden_activation(&self, h: usize) -> ActivationKind {
        self.activations[h]
    }

    pub fn num_params(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub(crate) fn check_hidden(&self, h: usize) -> Result<()> {
        if h >= self.num_hidden() {
            return Err(Error::arg(format!(
                "hidden layer {h} out of range (network has {})",
                self.num_hidden()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivationKind::*;

    #[test]
    fn rejects_degenerate_specs() {
        assert!(NetworkSpec::new(vec![2, 1], vec![Identity]).is_err());
        assert!(NetworkSpec::new(vec![2, 0, 1], vec![Relu, Identity]).is_err());
        assert!(NetworkSpec::new(vec![2, 3, 1], vec![Relu]).is_err());
        assert!(NetworkSpec::new(vec![2, 3, 1], vec![Identity, Identity]).is_err());
        assert!(NetworkSpec::new(vec![2, 3, 1], vec![Sine, Identity]).is_ok());
    }

    #[test]
    fn counts_parameters() {
        let spec = NetworkSpec::relu(vec![2, 2, 1]).unwrap();
        assert_eq!(spec.num_params(), 2 * 2 + 2 + 2 + 1);
        assert_eq!(spec.num_hidden(), 1);
        assert_eq!(spec.weight_shape(1), (1, 2));
    }

    #[test]
    fn spec_json_is_validated() {
        let ok: NetworkSpec =
            serde_json::from_str(r#"{"dims":[2,4,1],"activations":["sine","identity"]}"#).unwrap();
        assert_eq!(ok.activations()[0], Sine);
        let bad = serde_json::from_str::<NetworkSpec>(
            r#"{"dims":[2,4,1],"activations":["identity","identity"]}"#,
        );
        assert!(bad.is_err());
    }
}
