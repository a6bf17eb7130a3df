use crate::error::{Error, Result};

use super::matrix::Matrix;
use super::spec::NetworkSpec;

/// The weights and biases of one MLP: the object every augmentation acts on.
///
/// Elements are immutable values; transforms build new elements. All entries
/// are finite `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpaceElement {
    spec: NetworkSpec,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f32>>,
    omega0: Option<f32>,
}

impl WeightSpaceElement {
    pub fn new(spec: NetworkSpec, weights: Vec<Matrix>, biases: Vec<Vec<f32>>) -> Result<Self> {
        let m = spec.num_layers();
        if weights.len() != m {
            return Err(Error::dim(format!(
                "spec has {m} layers but {} weight matrices were given",
                weights.len()
            )));
        }
        if biases.len() != m {
            return Err(Error::dim(format!(
                "spec has {m} layers but {} bias vectors were given",
                biases.len()
            )));
        }
        for l in 0..m {
            let shape = spec.weight_shape(l);
            if weights[l].shape() != shape {
                return Err(Error::dim(format!(
                    "layer {l} weight is {:?}, expected {shape:?}",
                    weights[l].shape()
                )));
            }
            if biases[l].len() != shape.0 {
                return Err(Error::dim(format!(
                    "layer {l} bias has length {}, expected {}",
                    biases[l].len(),
                    shape.0
                )));
            }
            if weights[l].data().iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: l,
                    message: "non-finite weight".into(),
                });
            }
            if biases[l].iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: l,
                    message: "non-finite bias".into(),
                });
            }
        }
        Ok(Self {
            spec,
            weights,
            biases,
            omega0: None,
        })
    }

    /// All-zero element for `spec`.
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let m = spec.num_layers();
        let weights = (0..m)
            .map(|l| {
                let (r, c) = spec.weight_shape(l);
                Matrix::zeros(r, c)
            })
            .collect();
        let biases = (0..m).map(|l| vec![0.0; spec.dims()[l + 1]]).collect();
        Self {
            spec: spec.clone(),
            weights,
            biases,
            omega0: None,
        }
    }

    /// Records the SIREN frequency factor the element was initialized with.
    /// Purely informational: it is already folded into the weights.
    pub fn with_omega0(mut self, omega0: Option<f32>) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn omega0(&self) -> Option<f32> {
        self.omega0
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f32>] {
        &self.biases
    }

    pub fn weight(&self, l: usize) -> &Matrix {
        &self.weights[l]
    }

    pub fn bias(&self, l: usize) -> &[f32] {
        &self.biases[l]
    }

    pub fn num_layers(&self) -> usize {
        self.spec.num_layers()
    }

    /// Splits into owned parts for rebuilding via [`WeightSpaceElement::new`].
    pub fn into_parts(self) -> (NetworkSpec, Vec<Matrix>, Vec<Vec<f32>>, Option<f32>) {
        (self.spec, self.weights, self.biases, self.omega0)
    }

    pub(crate) fn from_parts(
        spec: NetworkSpec,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f32>>,
        omega0: Option<f32>,
    ) -> Result<Self> {
        Ok(Self::new(spec, weights, biases)?.with_omega0(omega0))
    }

    /// Tensors in canonical order: layer-major, weight (row-major) then bias.
    pub fn tensors(&self) -> impl Iterator<Item = &[f32]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data(), b.as_slice()])
    }

    /// Applies `f(tensor_index, values)` to each tensor in canonical order,
    /// rebuilding and revalidating the element.
    pub fn map_tensors(&self, mut f: impl FnMut(usize, &mut [f32])) -> Result<Self> {
        let mut weights = self.weights.clone();
        let mut biases = self.biases.clone();
        for (l, (w, b)) in weights.iter_mut().zip(biases.iter_mut()).enumerate() {
            f(2 * l, w.data_mut());
            f(2 * l + 1, b);
        }
        Self::from_parts(self.spec.clone(), weights, biases, self.omega0)
    }

    pub fn num_params(&self) -> usize {
        self.spec.num_params()
    }

    /// Canonical flat vector (see [`WeightSpaceElement::tensors`]).
    pub fn flatten(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.num_params());
        for t in self.tensors() {
            out.extend_from_slice(t);
        }
        out
    }

    pub fn unflatten(spec: &NetworkSpec, flat: &[f32]) -> Result<Self> {
        if flat.len() != spec.num_params() {
            return Err(Error::dim(format!(
                "spec needs {} parameters, flat vector has {}",
                spec.num_params(),
                flat.len()
            )));
        }
        let mut offset = 0;
        let mut weights = Vec::with_capacity(spec.num_layers());
        let mut biases = Vec::with_capacity(spec.num_layers());
        for l in 0..spec.num_layers() {
            let (r, c) = spec.weight_shape(l);
            weights.push(Matrix::from_vec(r, c, flat[offset..offset + r * c].to_vec())?);
            offset += r * c;
            biases.push(flat[offset..offset + r].to_vec());
            offset += r;
        }
        Self::new(spec.clone(), weights, biases)
    }

    /// Euclidean distance between canonical flat vectors, in `f64`.
    pub fn flat_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_spec(other)?;
        let sq: f64 = self
            .tensors()
            .zip(other.tensors())
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum();
        Ok(sq.sqrt())
    }

    pub fn check_same_spec(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::dim(format!(
                "spec mismatch: {:?} vs {:?}",
                self.spec.dims(),
                other.spec.dims()
            )));
        }
        Ok(())
    }
}
