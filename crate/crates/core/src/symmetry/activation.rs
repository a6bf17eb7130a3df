//! Symmetries induced by the activation function of one hidden layer.
//!
//! Each transform rescales row `j` of the layer's weight and bias and
//! compensates in column `j` of the next layer's weight:
//!
//! * ReLU, `c_j > 0`: `(1/c) W_{i+1} ReLU(c W_i x + c b_i) = W_{i+1} ReLU(W_i x + b_i)`
//! * sine, `s_j = ±1`: `W_{i+1} sin(W_i x + b) = −W_{i+1} sin(−W_i x − b)`
//! * sine, `k_j ∈ ℤ`: `W_{i+1} sin(W_i x + b) = (−1)^k W_{i+1} sin(W_i x + b + kπ)`
//!
//! All three are per neuron; the layer-wise forms are the constant-vector case.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wscore::{ActivationKind, Matrix, WeightSpaceElement};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositiveScales {
    pub layer: usize,
    pub c: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuronSigns {
    pub layer: usize,
    pub signs: Vec<i8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseShifts {
    pub layer: usize,
    pub k: Vec<i32>,
}

impl PositiveScales {
    pub fn uniform(layer: usize, width: usize, c: f32) -> Self {
        Self { layer, c: vec![c; width] }
    }
}

impl NeuronSigns {
    pub fn uniform(layer: usize, width: usize, sign: i8) -> Self {
        Self {
            layer,
            signs: vec![sign; width],
        }
    }
}

impl PhaseShifts {
    pub fn uniform(layer: usize, width: usize, k: i32) -> Self {
        Self { layer, k: vec![k; width] }
    }
}

fn check_layer(elem: &WeightSpaceElement, h: usize, len: usize, want: ActivationKind) -> Result<()> {
    let spec = elem.spec();
    spec.check_hidden(h)?;
    let act = spec.hidden_activation(h);
    if act != want {
        return Err(Error::arg(format!(
            "hidden layer {h} uses {} activation, transform needs {}",
            act.name(),
            want.name()
        )));
    }
    if len != spec.hidden_width(h) {
        return Err(Error::dim(format!(
            "hidden layer {h} has {} neurons, got {len} parameters",
            spec.hidden_width(h)
        )));
    }
    Ok(())
}

/// Scales neuron `j` of hidden layer `h`: row `j` of `W_h` and `b_h[j]` by
/// `row[j]`, column `j` of `W_{h+1}` by `col[j]`; bias shifted by `shift[j]`.
fn rescale_neurons(
    elem: &WeightSpaceElement,
    h: usize,
    row: impl Fn(usize) -> f64,
    shift: impl Fn(usize) -> f64,
    col: impl Fn(usize) -> f64,
) -> Result<WeightSpaceElement> {
    let (spec, mut weights, mut biases, omega0) = elem.clone().into_parts();
    let w_in: &mut Matrix = &mut weights[h];
    for j in 0..w_in.rows() {
        let s = row(j);
        for v in w_in.row_mut(j) {
            *v = (*v as f64 * s) as f32;
        }
        biases[h][j] = (biases[h][j] as f64 * s + shift(j)) as f32;
    }
    let w_out = &mut weights[h + 1];
    for i in 0..w_out.rows() {
        for (j, v) in w_out.row_mut(i).iter_mut().enumerate() {
            *v = (*v as f64 * col(j)) as f32;
        }
    }
    WeightSpaceElement::new(spec, weights, biases).map(|e| e.with_omega0(omega0))
}

pub fn relu_scaling(elem: &WeightSpaceElement, s: &PositiveScales) -> Result<WeightSpaceElement> {
    check_layer(elem, s.layer, s.c.len(), ActivationKind::Relu)?;
    if let Some(c) = s.c.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::arg(format!("scales must be positive and finite, got {c}")));
    }
    rescale_neurons(
        elem,
        s.layer,
        |j| s.c[j] as f64,
        |_| 0.0,
        |j| 1.0 / s.c[j] as f64,
    )
}

pub fn siren_negation(elem: &WeightSpaceElement, g: &NeuronSigns) -> Result<WeightSpaceElement> {
    check_layer(elem, g.layer, g.signs.len(), ActivationKind::Sine)?;
    if let Some(s) = g.signs.iter().find(|s| s.abs() != 1) {
        return Err(Error::arg(format!("signs must be ±1, got {s}")));
    }
    let sign = |j: usize| g.signs[j] as f64;
    rescale_neurons(elem, g.layer, sign, |_| 0.0, sign)
}

pub fn siren_bias(elem: &WeightSpaceElement, ph: &PhaseShifts) -> Result<WeightSpaceElement> {
    check_layer(elem, ph.layer, ph.k.len(), ActivationKind::Sine)?;
    rescale_neurons(
        elem,
        ph.layer,
        |_| 1.0,
        |j| ph.k[j] as f64 * PI,
        |j| if ph.k[j].rem_euclid(2) == 0 { 1.0 } else { -1.0 },
    )
}
