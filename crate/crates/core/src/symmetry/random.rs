use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::wscore::{ActivationKind, NetworkSpec, WeightSpaceElement};

use super::activation::{relu_scaling, siren_bias, siren_negation, NeuronSigns, PhaseShifts, PositiveScales};
use super::perm::{apply_permutation, PermutationSequence};

/// Which symmetry families [`random_symmetry`] samples, and their ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SymmetryConfig {
    pub permute: bool,
    pub relu_scaling: bool,
    /// Scales are log-uniform on `[1/max_scale, max_scale]`.
    pub max_scale: f64,
    pub siren_negation: bool,
    pub siren_bias: bool,
    /// Phase multiples are uniform on `{-max_phase, ..., max_phase}`.
    pub max_phase: i32,
}

impl Default for SymmetryConfig {
    fn default() -> Self {
        Self {
            permute: false,
            relu_scaling: false,
            max_scale: 4.0,
            siren_negation: false,
            siren_bias: false,
            max_phase: 2,
        }
    }
}

impl SymmetryConfig {
    /// Every family that applies to `spec`'s hidden activations.
    pub fn all_for(spec: &NetworkSpec) -> Self {
        let has = |a| hidden_layers_with(spec, a).next().is_some();
        Self {
            permute: true,
            relu_scaling: has(ActivationKind::Relu),
            siren_negation: has(ActivationKind::Sine),
            siren_bias: has(ActivationKind::Sine),
            ..Self::default()
        }
    }

    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        let need = |enabled: bool, act: ActivationKind, family: &str| {
            if enabled && hidden_layers_with(spec, act).next().is_none() {
                Err(Error::Config(format!(
                    "{family} needs a {} hidden layer",
                    act.name()
                )))
            } else {
                Ok(())
            }
        };
        need(self.relu_scaling, ActivationKind::Relu, "relu_scaling")?;
        need(self.siren_negation, ActivationKind::Sine, "siren_negation")?;
        need(self.siren_bias, ActivationKind::Sine, "siren_bias")?;
        if !(self.max_scale >= 1.0 && self.max_scale.is_finite()) {
            return Err(Error::Config(format!("max_scale must be >= 1, got {}", self.max_scale)));
        }
        if self.max_phase < 0 {
            return Err(Error::Config(format!("max_phase must be >= 0, got {}", self.max_phase)));
        }
        Ok(())
    }
}

pub(crate) fn hidden_layers_with(
    spec: &NetworkSpec,
    act: ActivationKind,
) -> impl Iterator<Item = usize> + '_ {
    (0..spec.num_hidden()).filter(move |&h| spec.hidden_activation(h) == act)
}

pub(crate) fn sample_scales(elem: &WeightSpaceElement, max_scale: f64, rng: &mut impl Rng) -> Result<WeightSpaceElement> {
    let spec = elem.spec().clone();
    let ln = max_scale.ln();
    let mut out = elem.clone();
    for h in hidden_layers_with(&spec, ActivationKind::Relu) {
        let c = (0..spec.hidden_width(h))
            .map(|_| {
                let u: f64 = if ln > 0.0 { rng.random_range(-ln..=ln) } else { 0.0 };
                u.exp() as f32
            })
            .collect();
        out = relu_scaling(&out, &PositiveScales { layer: h, c })?;
    }
    Ok(out)
}

pub(crate) fn sample_negation(elem: &WeightSpaceElement, rng: &mut impl Rng) -> Result<WeightSpaceElement> {
    let spec = elem.spec().clone();
    let mut out = elem.clone();
    for h in hidden_layers_with(&spec, ActivationKind::Sine) {
        let signs = (0..spec.hidden_width(h))
            .map(|_| if rng.random_bool(0.5) { -1 } else { 1 })
            .collect();
        out = siren_negation(&out, &NeuronSigns { layer: h, signs })?;
    }
    Ok(out)
}

pub(crate) fn sample_phase(elem: &WeightSpaceElement, max_phase: i32, rng: &mut impl Rng) -> Result<WeightSpaceElement> {
    let spec = elem.spec().clone();
    let mut out = elem.clone();
    for h in hidden_layers_with(&spec, ActivationKind::Sine) {
        let k = (0..spec.hidden_width(h))
            .map(|_| rng.random_range(-max_phase..=max_phase))
            .collect();
        out = siren_bias(&out, &PhaseShifts { layer: h, k })?;
    }
    Ok(out)
}

/// Samples and applies the enabled symmetries in the fixed order
/// permute, scale, negate, phase. Deterministic in `seed`.
pub fn random_symmetry(
    elem: &WeightSpaceElement,
    config: &SymmetryConfig,
    seed: u64,
) -> Result<WeightSpaceElement> {
    config.validate(elem.spec())?;
    let mut rng = rng_from_seed(seed);
    let mut out = elem.clone();
    if config.permute {
        let p = PermutationSequence::random(out.spec(), &mut rng);
        out = apply_permutation(&out, &p)?;
    }
    if config.relu_scaling {
        out = sample_scales(&out, config.max_scale, &mut rng)?;
    }
    if config.siren_negation {
        out = sample_negation(&out, &mut rng)?;
    }
    if config.siren_bias {
        out = sample_phase(&out, config.max_phase, &mut rng)?;
    }
    Ok(out)
}
