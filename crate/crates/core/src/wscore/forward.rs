//! Forward evaluation of the function a weight-space element represents.
//!
//! Storage is `f32`; evaluation promotes to `f64` and accumulates every
//! pre-activation in a fixed order (`b_i`, then `W[i,0] a_0`, `W[i,1] a_1`, ...),
//! so batched and row-wise evaluation agree bit for bit.

use crate::error::{Error, Result};

use super::element::WeightSpaceElement;
use super::matrix::Matrix;
use super::spec::ActivationKind;

#[derive(Clone, Debug)]
pub(crate) struct CompiledLayer {
    pub d_in: usize,
    pub d_out: usize,
    /// Row-major `d_out x d_in`.
    pub w: Vec<f64>,
    /// Transposed, row-major `d_in x d_out`.
    pub wt: Vec<f64>,
    pub b: Vec<f64>,
    pub act: ActivationKind,
}

/// An element promoted to `f64` with cached transposes, ready for repeated
/// evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub(crate) layers: Vec<CompiledLayer>,
}

impl Evaluator {
    pub fn new(elem: &WeightSpaceElement) -> Self {
        let spec = elem.spec();
        let layers = (0..spec.num_layers())
            .map(|l| {
                let wm = elem.weight(l);
                let (d_out, d_in) = wm.shape();
                let w: Vec<f64> = wm.data().iter().map(|&v| v as f64).collect();
                let mut wt = vec![0.0; d_in * d_out];
                for i in 0..d_out {
                    for k in 0..d_in {
                        wt[k * d_out + i] = w[i * d_in + k];
                    }
                }
                CompiledLayer {
                    d_in,
                    d_out,
                    w,
                    wt,
                    b: elem.bias(l).iter().map(|&v| v as f64).collect(),
                    act: spec.activations()[l],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].d_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].d_out
    }

    /// Pre-activation of one layer: `z = W a + b`.
    #[inline]
    pub(crate) fn affine(layer: &CompiledLayer, a: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&layer.b);
        for (k, &ak) in a.iter().enumerate() {
            let col = &layer.wt[k * layer.d_out..(k + 1) * layer.d_out];
            for (zi, &w) in z.iter_mut().zip(col) {
                *zi += w * ak;
            }
        }
    }

    /// Evaluates one input row. `x.len()` must equal the input dimension.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.d_out];
            Self::affine(layer, &a, &mut z);
            for v in z.iter_mut() {
                *v = layer.act.apply(*v);
            }
            a = z;
        }
        a
    }

    pub fn try_eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(x.len(), self.input_dim(), x.iter().all(|v| v.is_finite()))?;
        Ok(self.eval(x))
    }
}

fn check_input(len: usize, expected: usize, finite: bool) -> Result<()> {
    if len != expected {
        return Err(Error::dim(format!(
            "input has {len} coordinates, network expects {expected}"
        )));
    }
    if !finite {
        return Err(Error::arg("input contains non-finite coordinates"));
    }
    Ok(())
}

impl WeightSpaceElement {
    pub fn evaluator(&self) -> Evaluator {
        Evaluator::new(self)
    }

    /// Evaluates the network at a single point.
    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        Ok(self
            .evaluator()
            .try_eval(&x)?
            .into_iter()
            .map(|v| v as f32)
            .collect())
    }

    /// Evaluates every row of `x` (N x d0), returning N x dM.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        let out = self.forward_batch_f64(x)?;
        let d_out = self.spec().output_dim();
        Matrix::from_vec(
            x.rows(),
            d_out,
            out.into_iter().map(|v| v as f32).collect(),
        )
    }

    /// As [`WeightSpaceElement::forward_batch`] but keeps the `f64` outputs,
    /// flattened row-major.
    pub fn forward_batch_f64(&self, x: &Matrix) -> Result<Vec<f64>> {
        let ev = self.evaluator();
        check_input(
            x.cols(),
            ev.input_dim(),
            x.data().iter().all(|v| v.is_finite()),
        )?;
        let mut out = Vec::with_capacity(x.rows() * ev.output_dim());
        let mut row = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for (dst, &src) in row.iter_mut().zip(r) {
                *dst = src as f64;
            }
            out.extend(ev.eval(&row));
        }
        Ok(out)
    }
}
