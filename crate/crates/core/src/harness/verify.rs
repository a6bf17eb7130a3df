use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentationKind, Effect};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::wscore::{ActivationKind, WeightSpaceElement};

/// A transform whose functional effect can be checked.
#[derive(Clone, Debug, PartialEq)]
pub enum VerifyKind {
    Identity,
    Augmentation(AugmentationKind),
}

impl VerifyKind {
    pub fn parse(name: &str) -> Result<Self> {
        if name == "identity" {
            return Ok(Self::Identity);
        }
        let kind = AugmentationKind::from_name(name)?;
        if !(kind.is_function_preserving() || kind.is_input_space()) {
            return Err(Error::arg(format!(
                "{name} does not preserve the function and has no pullback law"
            )));
        }
        Ok(Self::Augmentation(kind))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Augmentation(k) => k.name(),
        }
    }

    /// Every checkable kind that applies to `elem`'s activations.
    pub fn all_for(elem: &WeightSpaceElement) -> Vec<Self> {
        let spec = elem.spec();
        std::iter::once(Self::Identity)
            .chain(
                AugmentationKind::NAMES
                    .iter()
                    .map(|n| AugmentationKind::from_name(n).expect("known kind"))
                    .filter(|k| (k.is_function_preserving() || k.is_input_space()) && k.validate(spec).is_ok())
                    .map(Self::Augmentation),
            )
            .collect()
    }
}

/// Absolute output tolerance: `1e-4` when any hidden layer is sine, else `1e-5`.
pub fn default_tolerance(elem: &WeightSpaceElement) -> f64 {
    let spec = elem.spec();
    if (0..spec.num_hidden()).any(|h| spec.hidden_activation(h) == ActivationKind::Sine) {
        1e-4
    } else {
        1e-5
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: String,
    pub max_abs_error: f64,
    pub points: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Samples a random instance of `kind`, applies it, and compares outputs on
/// `n_points` uniform points of `[-1, 1]^d`: `f'(x)` against `f(x)` for
/// symmetries, against `f(A x + t)` for input-space transforms.
pub fn verify_preservation(
    elem: &WeightSpaceElement,
    kind: &VerifyKind,
    n_points: usize,
    tolerance: f64,
    seed: u64,
) -> Result<VerificationReport> {
    if n_points == 0 {
        return Err(Error::arg("need at least one point"));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::arg(format!("tolerance must be nonnegative, got {tolerance}")));
    }
    let (transformed, effect) = match kind {
        VerifyKind::Identity => (elem.clone(), Effect::Preserving),
        VerifyKind::Augmentation(k) => {
            k.validate(elem.spec())?;
            let mut rng = rng_from_seed(derive_seed(&[seed, 1]));
            k.sample(elem, &mut rng)?
        }
    };
    if effect == Effect::Perturbing {
        return Err(Error::arg(format!("{} is not function preserving", kind.name())));
    }

    let d = elem.spec().input_dim();
    let (f, g) = (elem.evaluator(), transformed.evaluator());
    let mut rng = rng_from_seed(derive_seed(&[seed, 0]));
    let mut max_err = 0.0f64;
    for _ in 0..n_points {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let want = match &effect {
            Effect::InputPullback(map) => f.eval(&map.apply(&x)),
            _ => f.eval(&x),
        };
        let got = g.eval(&x);
        for (a, b) in got.iter().zip(&want) {
            let e = (a - b).abs();
            max_err = if e.is_nan() { f64::INFINITY } else { max_err.max(e) };
        }
    }
    Ok(VerificationReport {
        kind: kind.name().to_string(),
        max_abs_error: max_err,
        points: n_points,
        tolerance,
        pass: max_err <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wscore::{init_relu, init_siren, NetworkSpec};

    #[test]
    fn identity_has_zero_error() {
        let e = init_siren(&NetworkSpec::siren(vec![2, 8, 1]).unwrap(), 30.0, 0).unwrap();
        let r = verify_preservation(&e, &VerifyKind::Identity, 64, 0.0, 1).unwrap();
        assert_eq!(r.max_abs_error, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn non_preserving_kinds_rejected() {
        assert!(VerifyKind::parse("gaussian_noise").is_err());
        assert!(VerifyKind::parse("dropout").is_err());
        assert!(VerifyKind::parse("bogus").is_err());
        assert!(VerifyKind::parse("siren_negation").is_ok());
    }

    #[test]
    fn suites_follow_activation() {
        let s = init_siren(&NetworkSpec::siren(vec![2, 8, 1]).unwrap(), 30.0, 0).unwrap();
        let names: Vec<_> = VerifyKind::all_for(&s).iter().map(VerifyKind::name).collect();
        assert!(names.contains(&"siren_bias") && !names.contains(&"relu_scaling"));
        let r = init_relu(&NetworkSpec::relu(vec![2, 8, 1]).unwrap(), 0).unwrap();
        let names: Vec<_> = VerifyKind::all_for(&r).iter().map(VerifyKind::name).collect();
        assert!(names.contains(&"relu_scaling") && !names.contains(&"siren_negation"));
        assert_eq!(default_tolerance(&s), 1e-4);
        assert_eq!(default_tolerance(&r), 1e-5);
    }

    #[test]
    fn every_kind_passes_on_random_nets() {
        for e in [
            init_siren(&NetworkSpec::siren(vec![2, 16, 16, 1]).unwrap(), 30.0, 5).unwrap(),
            init_relu(&NetworkSpec::relu(vec![3, 16, 16, 2]).unwrap(), 5).unwrap(),
        ] {
            for k in VerifyKind::all_for(&e) {
                let r = verify_preservation(&e, &k, 256, default_tolerance(&e), 3).unwrap();
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn mismatched_kind_is_config_error() {
        let s = init_siren(&NetworkSpec::siren(vec![2, 8, 1]).unwrap(), 30.0, 0).unwrap();
        let k = VerifyKind::parse("relu_scaling").unwrap();
        assert!(matches!(verify_preservation(&s, &k, 8, 1e-4, 0), Err(Error::Config(_))));
    }
}
