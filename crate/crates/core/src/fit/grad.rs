//! Reverse-mode gradient of the mean-squared error.
//!
//! For `L = 1/(N dM) Σ_n ‖f(x_n) − t_n‖²` the backward recursion is
//! `δ_M = 2 (a_M − t) / (N dM) ⊙ σ'_M(z_M)`,
//! `δ_{l−1} = (W_lᵀ δ_l) ⊙ σ'_{l−1}(z_{l−1})`, with
//! `∂L/∂W_l = Σ_n δ_l a_{l−1}ᵀ` and `∂L/∂b_l = Σ_n δ_l`.

use crate::error::{Error, Result};
use crate::wscore::{CompiledLayer, Evaluator, NetworkSpec, WeightSpaceElement};

use super::signal::SignalTask;

/// Gradient in the canonical flat layout of the element it was taken at.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    spec: NetworkSpec,
    flat: Vec<f64>,
}

impl Gradient {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    /// Rounds to an `f32` element of the same shape.
    pub fn to_element(&self) -> Result<WeightSpaceElement> {
        let flat: Vec<f32> = self.flat.iter().map(|&v| v as f32).collect();
        WeightSpaceElement::unflatten(&self.spec, &flat)
    }

    pub fn max_abs(&self) -> f64 {
        self.flat.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Reusable buffers for repeated gradient evaluation.
pub(crate) struct Workspace {
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    deriv: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
    offsets: Vec<(usize, usize)>,
}

impl Workspace {
    pub(crate) fn new(spec: &NetworkSpec) -> Self {
        let dims = spec.dims();
        let m = spec.num_layers();
        let mut offsets = Vec::with_capacity(m);
        let mut off = 0;
        for l in 0..m {
            let (r, c) = spec.weight_shape(l);
            offsets.push((off, off + r * c));
            off += r * c + r;
        }
        Self {
            z: (0..m).map(|l| vec![0.0; dims[l + 1]]).collect(),
            a: dims.iter().map(|&d| vec![0.0; d]).collect(),
            deriv: (0..m).map(|l| vec![0.0; dims[l + 1]]).collect(),
            delta: (0..m).map(|l| vec![0.0; dims[l + 1]]).collect(),
            offsets,
        }
    }
}

#[inline]
fn activate(layer: &CompiledLayer, z: &[f64], a: &mut [f64], d: &mut [f64]) {
    use crate::wscore::ActivationKind::*;
    match layer.act {
        Sine => {
            for ((&zi, ai), di) in z.iter().zip(a.iter_mut()).zip(d.iter_mut()) {
                let (s, c) = zi.sin_cos();
                *ai = s;
                *di = c;
            }
        }
        act => {
            for ((&zi, ai), di) in z.iter().zip(a.iter_mut()).zip(d.iter_mut()) {
                *ai = act.apply(zi);
                *di = act.derivative(zi);
            }
        }
    }
}

/// Loss and gradient at `ev`, accumulated into `grad` (zeroed first).
pub(crate) fn loss_and_gradient(
    ev: &Evaluator,
    task: &SignalTask,
    grad: &mut [f64],
    ws: &mut Workspace,
) -> Result<f64> {
    let layers = &ev.layers;
    let m = layers.len();
    let n = task.len();
    let d_out = layers[m - 1].d_out;
    let scale = 2.0 / (n * d_out) as f64;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;

    for (x, t) in task.inputs().iter_rows().zip(task.targets().iter_rows()) {
        for (dst, &src) in ws.a[0].iter_mut().zip(x) {
            *dst = src as f64;
        }
        for (l, layer) in layers.iter().enumerate() {
            let (a_in, a_rest) = ws.a.split_at_mut(l + 1);
            Evaluator::affine(layer, &a_in[l], &mut ws.z[l]);
            if ws.z[l].iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    layer: l,
                    message: "non-finite pre-activation".into(),
                });
            }
            activate(layer, &ws.z[l], &mut a_rest[0], &mut ws.deriv[l]);
        }
        let y = &ws.a[m];
        for ((di, &yi), (&ti, &dv)) in ws.delta[m - 1]
            .iter_mut()
            .zip(y)
            .zip(t.iter().zip(&ws.deriv[m - 1]))
        {
            let r = yi - ti as f64;
            loss += r * r;
            *di = scale * r * dv;
        }
        for l in (0..m).rev() {
            let layer = &layers[l];
            let (w_off, b_off) = ws.offsets[l];
            let a_prev = &ws.a[l];
            let (lower, upper) = ws.delta.split_at_mut(l);
            let delta = &upper[0];
            for (i, &di) in delta.iter().enumerate() {
                if di == 0.0 {
                    continue;
                }
                let row = &mut grad[w_off + i * layer.d_in..w_off + (i + 1) * layer.d_in];
                for (g, &a) in row.iter_mut().zip(a_prev) {
                    *g += di * a;
                }
                grad[b_off + i] += di;
            }
            if l > 0 {
                let prev = &mut lower[l - 1];
                prev.iter_mut().for_each(|v| *v = 0.0);
                for (i, &di) in delta.iter().enumerate() {
                    if di == 0.0 {
                        continue;
                    }
                    let wrow = &layer.w[i * layer.d_in..(i + 1) * layer.d_in];
                    for (p, &w) in prev.iter_mut().zip(wrow) {
                        *p += w * di;
                    }
                }
                for (p, &d) in prev.iter_mut().zip(&ws.deriv[l - 1]) {
                    *p *= d;
                }
            }
        }
    }
    let loss = loss / (n * d_out) as f64;
    if !loss.is_finite() {
        return Err(Error::Numeric {
            layer: m - 1,
            message: "non-finite loss".into(),
        });
    }
    Ok(loss)
}

fn check_task(elem: &WeightSpaceElement, task: &SignalTask) -> Result<()> {
    let spec = elem.spec();
    if task.inputs().cols() != spec.input_dim() || task.targets().cols() != spec.output_dim() {
        return Err(Error::dim(format!(
            "task is {}->{}, network is {}->{}",
            task.inputs().cols(),
            task.targets().cols(),
            spec.input_dim(),
            spec.output_dim()
        )));
    }
    Ok(())
}

/// Exact gradient of the task's mean-squared error w.r.t. every parameter.
pub fn gradient(elem: &WeightSpaceElement, task: &SignalTask) -> Result<Gradient> {
    Ok(loss_with_gradient(elem, task)?.1)
}

pub fn loss_with_gradient(elem: &WeightSpaceElement, task: &SignalTask) -> Result<(f64, Gradient)> {
    check_task(elem, task)?;
    let spec = elem.spec().clone();
    let mut ws = Workspace::new(&spec);
    let mut flat = vec![0.0; spec.num_params()];
    let loss = loss_and_gradient(&elem.evaluator(), task, &mut flat, &mut ws)?;
    Ok((loss, Gradient { spec, flat }))
}
