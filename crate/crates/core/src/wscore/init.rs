use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

use super::element::WeightSpaceElement;
use super::matrix::Matrix;
use super::spec::{ActivationKind, NetworkSpec};

/// Default SIREN frequency factor.
pub const DEFAULT_OMEGA0: f32 = 30.0;

fn uniform(rng: &mut impl Rng, bound: f32) -> f32 {
    if bound == 0.0 {
        0.0
    } else {
        rng.random_range(-bound..=bound)
    }
}

fn layer(rng: &mut impl Rng, rows: usize, cols: usize, w_bound: f32, b_bound: f32) -> (Matrix, Vec<f32>) {
    let w = Matrix::from_fn(rows, cols, |_, _| uniform(rng, w_bound));
    let b = (0..rows).map(|_| uniform(rng, b_bound)).collect();
    (w, b)
}

/// SIREN initialization with `omega0` folded into the parameters of every
/// sine layer, so that layer computes plain `sin(W x + b)`.
///
/// * first layer: `W ~ U(±omega0/d0)`, `b ~ U(±omega0/sqrt(d0))`
/// * hidden sine layers: `W ~ U(±sqrt(6/fan_in))`, `b ~ U(±omega0/sqrt(fan_in))`
/// * linear output layer: `W ~ U(±sqrt(6/fan_in)/omega0)`, `b ~ U(±1/sqrt(fan_in))`
pub fn init_siren(spec: &NetworkSpec, omega0: f32, seed: u64) -> Result<WeightSpaceElement> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::arg(format!("omega0 must be positive, got {omega0}")));
    }
    if (0..spec.num_hidden()).any(|h| spec.hidden_activation(h) != ActivationKind::Sine) {
        return Err(Error::UnsupportedSpec(
            "SIREN initialization needs sine activations on every hidden layer".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let m = spec.num_layers();
    let mut weights = Vec::with_capacity(m);
    let mut biases = Vec::with_capacity(m);
    for l in 0..m {
        let (rows, fan_in) = spec.weight_shape(l);
        let n = fan_in as f32;
        let sine = spec.activations()[l] == ActivationKind::Sine;
        let (wb, bb) = if l == 0 {
            (omega0 / n, omega0 / n.sqrt())
        } else if sine {
            ((6.0 / n).sqrt(), omega0 / n.sqrt())
        } else {
            ((6.0 / n).sqrt() / omega0, 1.0 / n.sqrt())
        };
        let (w, b) = layer(&mut rng, rows, fan_in, wb, bb);
        weights.push(w);
        biases.push(b);
    }
    Ok(WeightSpaceElement::new(spec.clone(), weights, biases)?.with_omega0(Some(omega0)))
}

/// Kaiming-uniform initialization: `W ~ U(±sqrt(6/fan_in))`, `b ~ U(±1/sqrt(fan_in))`.
pub fn init_relu(spec: &NetworkSpec, seed: u64) -> Result<WeightSpaceElement> {
    let mut rng = rng_from_seed(seed);
    let (weights, biases) = (0..spec.num_layers())
        .map(|l| {
            let (rows, fan_in) = spec.weight_shape(l);
            let n = fan_in as f32;
            layer(&mut rng, rows, fan_in, (6.0 / n).sqrt(), 1.0 / n.sqrt())
        })
        .unzip();
    WeightSpaceElement::new(spec.clone(), weights, biases)
}

/// Picks the initializer matching the spec's hidden activations.
pub fn init_for_spec(spec: &NetworkSpec, omega0: f32, seed: u64) -> Result<WeightSpaceElement> {
    let hidden: Vec<_> = (0..spec.num_hidden())
        .map(|h| spec.hidden_activation(h))
        .collect();
    if hidden.iter().all(|&a| a == ActivationKind::Sine) {
        init_siren(spec, omega0, seed)
    } else if hidden.iter().all(|&a| a == ActivationKind::Relu) {
        init_relu(spec, seed)
    } else {
        Err(Error::UnsupportedSpec(
            "mixed hidden activations have no initializer".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let spec = NetworkSpec::siren(vec![2, 32, 32, 1]).unwrap();
        let a = init_siren(&spec, 30.0, 42).unwrap();
        let b = init_siren(&spec, 30.0, 42).unwrap();
        assert_eq!(a.flatten(), b.flatten());
        assert_ne!(a.flatten(), init_siren(&spec, 30.0, 43).unwrap().flatten());
    }

    #[test]
    fn first_layer_within_folded_bound() {
        let spec = NetworkSpec::siren(vec![2, 50, 1]).unwrap();
        let omega0 = 30.0f32;
        let bound = omega0 / 2.0;
        let mut seen_max = 0.0f32;
        // 200 inits x 100 first-layer weights = 2e4 samples
        for seed in 0..200 {
            let e = init_siren(&spec, omega0, seed).unwrap();
            for &w in e.weight(0).data() {
                assert!(w.abs() <= bound, "{w} outside ±{bound}");
                seen_max = seen_max.max(w.abs());
            }
        }
        // the range is actually used, not a narrower one
        assert!(seen_max > 0.99 * bound);
    }

    #[test]
    fn rejects_non_sine_specs() {
        let spec = NetworkSpec::relu(vec![2, 4, 1]).unwrap();
        assert!(matches!(
            init_siren(&spec, 30.0, 0),
            Err(Error::UnsupportedSpec(_))
        ));
        assert!(init_siren(&NetworkSpec::siren(vec![2, 4, 1]).unwrap(), 0.0, 0).is_err());
    }

    #[test]
    fn relu_init_bounds() {
        let spec = NetworkSpec::relu(vec![6, 24, 1]).unwrap();
        let e = init_relu(&spec, 1).unwrap();
        assert!(e.weight(0).data().iter().all(|w| w.abs() <= 1.0));
        assert!(e.weight(1).data().iter().all(|w| w.abs() <= 0.5));
    }
}
