use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng as ChaRng};
use crate::symmetry::{apply_permutation, hidden_layers_with, sample_negation, sample_phase, sample_scales, PermutationSequence};
use crate::wscore::{ActivationKind, NetworkSpec, WeightSpaceElement};

use super::generic::{dropout, gaussian_noise, quantile_dropout};
use super::input_space::{random_rotation, rotate_input, rotation_2d, scale_input, translate_input, InputMap};

fn default_min_angle() -> f64 {
    -180.0
}
fn default_max_angle() -> f64 {
    180.0
}
fn default_min_scale() -> f64 {
    0.5
}
fn default_max_scale_input() -> f64 {
    2.0
}
fn default_translate() -> f64 {
    0.5
}
fn default_sigma() -> f64 {
    0.1
}
fn default_p_drop() -> f64 {
    0.1
}
fn default_q() -> f64 {
    0.1
}
fn default_relu_max_scale() -> f64 {
    4.0
}
fn default_max_phase() -> i32 {
    2
}

/// One augmentation family with the ranges its parameters are drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum AugmentationKind {
    /// In-plane angle uniform in degrees for 2-D inputs; Haar-random
    /// rotation otherwise (the angle range is then unused).
    RotateInput {
        #[serde(default = "default_min_angle")]
        min_angle_deg: f64,
        #[serde(default = "default_max_angle")]
        max_angle_deg: f64,
    },
    /// `s ~ U(min, max)`.
    ScaleInput {
        #[serde(default = "default_min_scale")]
        min: f64,
        #[serde(default = "default_max_scale_input")]
        max: f64,
    },
    /// Each coordinate of `t` uniform on `[-max_abs, max_abs]`.
    TranslateInput {
        #[serde(default = "default_translate")]
        max_abs: f64,
    },
    GaussianNoise {
        #[serde(default = "default_sigma")]
        sigma_rel: f64,
    },
    Dropout {
        #[serde(default = "default_p_drop")]
        p_drop: f64,
    },
    QuantileDropout {
        #[serde(default = "default_q")]
        q: f64,
    },
    /// Per-neuron `c` log-uniform on `[1/max_scale, max_scale]`.
    ReluScaling {
        #[serde(default = "default_relu_max_scale")]
        max_scale: f64,
    },
    /// Per-neuron sign uniform on `{-1, +1}`.
    SirenNegation {},
    /// Per-neuron `k` uniform on `{-max_phase, ..., max_phase}`.
    SirenBias {
        #[serde(default = "default_max_phase")]
        max_phase: i32,
    },
    /// Uniform random permutation of every hidden layer.
    Permute {},
}

/// What a sampled augmentation did to the represented function.
#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    /// `f' = f`.
    Preserving,
    /// `f'(x) = f(A x + t)`.
    InputPullback(InputMap),
    /// No functional guarantee.
    Perturbing,
}

impl AugmentationKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RotateInput { .. } => "rotate_input",
            Self::ScaleInput { .. } => "scale_input",
            Self::TranslateInput { .. } => "translate_input",
            Self::GaussianNoise { .. } => "gaussian_noise",
            Self::Dropout { .. } => "dropout",
            Self::QuantileDropout { .. } => "quantile_dropout",
            Self::ReluScaling { .. } => "relu_scaling",
            Self::SirenNegation {} => "siren_negation",
            Self::SirenBias { .. } => "siren_bias",
            Self::Permute {} => "permute",
        }
    }

    /// The kind with default parameter ranges, by name.
    pub fn from_name(name: &str) -> Result<Self> {
        let v = serde_json::json!({ "kind": name, "params": {} });
        serde_json::from_value(v).map_err(|_| Error::arg(format!("unknown augmentation kind {name:?}")))
    }

    pub const NAMES: [&'static str; 10] = [
        "rotate_input",
        "scale_input",
        "translate_input",
        "gaussian_noise",
        "dropout",
        "quantile_dropout",
        "relu_scaling",
        "siren_negation",
        "siren_bias",
        "permute",
    ];

    pub fn is_function_preserving(&self) -> bool {
        matches!(
            self,
            Self::ReluScaling { .. } | Self::SirenNegation {} | Self::SirenBias { .. } | Self::Permute {}
        )
    }

    pub fn is_input_space(&self) -> bool {
        matches!(
            self,
            Self::RotateInput { .. } | Self::ScaleInput { .. } | Self::TranslateInput { .. }
        )
    }

    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{}: {msg}", self.name())));
        let needs = |act: ActivationKind| {
            if hidden_layers_with(spec, act).next().is_none() {
                bad(format!("network has no {} hidden layer", act.name()))
            } else {
                Ok(())
            }
        };
        match *self {
            Self::RotateInput {
                min_angle_deg,
                max_angle_deg,
            } => {
                if !(min_angle_deg.is_finite() && max_angle_deg.is_finite() && min_angle_deg <= max_angle_deg) {
                    return bad(format!("invalid angle range [{min_angle_deg}, {max_angle_deg}]"));
                }
            }
            Self::ScaleInput { min, max } => {
                if !(min > 0.0 && max.is_finite() && min <= max) {
                    return bad(format!("invalid scale range [{min}, {max}]"));
                }
            }
            Self::TranslateInput { max_abs } => {
                if !(max_abs >= 0.0 && max_abs.is_finite()) {
                    return bad(format!("max_abs must be nonnegative, got {max_abs}"));
                }
            }
            Self::GaussianNoise { sigma_rel } => {
                if !(sigma_rel >= 0.0 && sigma_rel.is_finite()) {
                    return bad(format!("sigma_rel must be nonnegative, got {sigma_rel}"));
                }
            }
            Self::Dropout { p_drop } => {
                if !(0.0..=1.0).contains(&p_drop) {
                    return bad(format!("p_drop must be in [0, 1], got {p_drop}"));
                }
            }
            Self::QuantileDropout { q } => {
                if !(0.0..1.0).contains(&q) {
                    return bad(format!("q must be in [0, 1), got {q}"));
                }
            }
            Self::ReluScaling { max_scale } => {
                if !(max_scale >= 1.0 && max_scale.is_finite()) {
                    return bad(format!("max_scale must be >= 1, got {max_scale}"));
                }
                needs(ActivationKind::Relu)?;
            }
            Self::SirenNegation {} => needs(ActivationKind::Sine)?,
            Self::SirenBias { max_phase } => {
                if max_phase < 0 {
                    return bad(format!("max_phase must be >= 0, got {max_phase}"));
                }
                needs(ActivationKind::Sine)?;
            }
            Self::Permute {} => {}
        }
        Ok(())
    }

    /// Draws parameters from `rng` and applies the augmentation.
    pub fn sample(&self, elem: &WeightSpaceElement, rng: &mut ChaRng) -> Result<(WeightSpaceElement, Effect)> {
        let d = elem.spec().input_dim();
        Ok(match *self {
            Self::RotateInput {
                min_angle_deg,
                max_angle_deg,
            } => {
                let r = if d == 2 {
                    rotation_2d(rng.random_range(min_angle_deg..=max_angle_deg))
                } else {
                    random_rotation(d, rng)
                };
                (rotate_input(elem, &r)?, Effect::InputPullback(InputMap::linear(&r)))
            }
            Self::ScaleInput { min, max } => {
                let s = rng.random_range(min..=max);
                (scale_input(elem, s)?, Effect::InputPullback(InputMap::scale(d, s)))
            }
            Self::TranslateInput { max_abs } => {
                let t: Vec<f32> = (0..d).map(|_| rng.random_range(-max_abs..=max_abs) as f32).collect();
                (translate_input(elem, &t)?, Effect::InputPullback(InputMap::translation(&t)))
            }
            Self::GaussianNoise { sigma_rel } => (gaussian_noise(elem, sigma_rel, rng.next_u64())?, Effect::Perturbing),
            Self::Dropout { p_drop } => (dropout(elem, p_drop, rng.next_u64())?, Effect::Perturbing),
            Self::QuantileDropout { q } => (quantile_dropout(elem, q)?, Effect::Perturbing),
            Self::ReluScaling { max_scale } => (sample_scales(elem, max_scale, rng)?, Effect::Preserving),
            Self::SirenNegation {} => (sample_negation(elem, rng)?, Effect::Preserving),
            Self::SirenBias { max_phase } => (sample_phase(elem, max_phase, rng)?, Effect::Preserving),
            Self::Permute {} => {
                let p = PermutationSequence::random(elem.spec(), rng);
                (apply_permutation(elem, &p)?, Effect::Preserving)
            }
        })
    }
}

/// An augmentation kind that fires with probability `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AugmentationDescriptor {
    #[serde(flatten)]
    pub kind: AugmentationKind,
    pub p: f64,
}

impl AugmentationDescriptor {
    pub fn new(kind: AugmentationKind, p: f64) -> Self {
        Self { kind, p }
    }

    pub fn always(kind: AugmentationKind) -> Self {
        Self::new(kind, 1.0)
    }
}

// `params` may be omitted, meaning every parameter takes its default.
impl<'de> Deserialize<'de> for AugmentationDescriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            kind: String,
            #[serde(default = "default_p")]
            p: f64,
            #[serde(default)]
            params: Option<serde_json::Value>,
        }
        fn default_p() -> f64 {
            1.0
        }
        let raw = Raw::deserialize(d)?;
        let params = raw.params.unwrap_or_else(|| serde_json::json!({}));
        let kind = serde_json::from_value(serde_json::json!({ "kind": raw.kind, "params": params }))
            .map_err(serde::de::Error::custom)?;
        Ok(Self { kind, p: raw.p })
    }
}

/// Ordered augmentation steps. Step `i` of sample `s` in epoch `e` draws
/// all its randomness from `derive_seed([base_seed, s, e, i])`, so results
/// do not depend on iteration order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AugmentationPipeline {
    pub steps: Vec<AugmentationDescriptor>,
}

/// A step that fired while applying a pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct AppliedStep {
    pub index: usize,
    pub kind: &'static str,
    pub effect: Effect,
}

impl AugmentationPipeline {
    pub fn new(steps: Vec<AugmentationDescriptor>) -> Self {
        Self { steps }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Config(format!("pipeline: {e}")))
    }

    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        for (i, s) in self.steps.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.p) {
                return Err(Error::Config(format!("step {i}: probability {} outside [0, 1]", s.p)));
            }
            s.kind
                .validate(spec)
                .map_err(|e| Error::Config(format!("step {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn apply(&self, elem: &WeightSpaceElement, sample_id: u64, epoch: u64, base_seed: u64) -> Result<WeightSpaceElement> {
        self.apply_traced(elem, sample_id, epoch, base_seed).map(|(e, _)| e)
    }

    /// Like [`apply`](Self::apply), also listing the steps that fired.
    pub fn apply_traced(
        &self,
        elem: &WeightSpaceElement,
        sample_id: u64,
        epoch: u64,
        base_seed: u64,
    ) -> Result<(WeightSpaceElement, Vec<AppliedStep>)> {
        self.validate(elem.spec())?;
        let mut out = elem.clone();
        let mut trace = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            let mut rng = rng_from_seed(derive_seed(&[base_seed, sample_id, epoch, i as u64]));
            if !rng.random_bool(step.p) {
                continue;
            }
            let (next, effect) = step.kind.sample(&out, &mut rng)?;
            out = next;
            trace.push(AppliedStep {
                index: i,
                kind: step.kind.name(),
                effect,
            });
        }
        Ok((out, trace))
    }
}

/// Applies `pipeline` to `elem` for one (sample, epoch) draw.
pub fn apply_pipeline(
    elem: &WeightSpaceElement,
    pipeline: &AugmentationPipeline,
    sample_id: u64,
    epoch: u64,
    base_seed: u64,
) -> Result<WeightSpaceElement> {
    pipeline.apply(elem, sample_id, epoch, base_seed)
}
