use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::symmetry::{apply_permutation, PermutationSequence};
use crate::wscore::WeightSpaceElement;

use super::matching::{weight_matching, MatchingConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixupMode {
    /// Interpolate the raw tensors.
    Naive,
    /// Randomly permute `x2`'s hidden neurons first.
    Randperm,
    /// Align `x2` to `x1` by weight matching first.
    Aligned,
}

impl MixupMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Self::Naive),
            "randperm" => Ok(Self::Randperm),
            "aligned" => Ok(Self::Aligned),
            _ => Err(Error::arg(format!("unknown mixup mode {s:?} (naive, randperm, aligned)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixupSample {
    pub element: WeightSpaceElement,
    /// Present when labels were supplied.
    pub label: Option<Vec<f64>>,
    pub lambda: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::arg(format!("lambda must be in [0, 1], got {lambda}")))
    }
}

/// `λ ~ U(0, 1)`.
pub fn sample_lambda(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.0..1.0)
}

/// Entrywise `λ x1 + (1 − λ) x2` over every tensor, computed in f64.
pub fn mixup_naive(x1: &WeightSpaceElement, x2: &WeightSpaceElement, lambda: f64) -> Result<WeightSpaceElement> {
    x1.check_same_spec(x2)?;
    check_lambda(lambda)?;
    let a = x1.flatten();
    let b = x2.flatten();
    let mixed: Vec<f32> = a
        .iter()
        .zip(&b)
        .map(|(&p, &q)| (lambda * p as f64 + (1.0 - lambda) * q as f64) as f32)
        .collect();
    let omega0 = if x1.omega0() == x2.omega0() { x1.omega0() } else { None };
    Ok(WeightSpaceElement::unflatten(x1.spec(), &mixed)?.with_omega0(omega0))
}

/// Mixes `x1` with a uniformly randomly permuted copy of `x2`.
pub fn mixup_randperm(x1: &WeightSpaceElement, x2: &WeightSpaceElement, lambda: f64, seed: u64) -> Result<WeightSpaceElement> {
    x1.check_same_spec(x2)?;
    let p = PermutationSequence::random(x2.spec(), &mut rng_from_seed(seed));
    mixup_naive(x1, &apply_permutation(x2, &p)?, lambda)
}

/// Mixes `x1` with `x2` after aligning `x2` to `x1` by weight matching.
pub fn mixup_aligned(
    x1: &WeightSpaceElement,
    x2: &WeightSpaceElement,
    lambda: f64,
    cfg: &MatchingConfig,
) -> Result<WeightSpaceElement> {
    check_lambda(lambda)?;
    let r = weight_matching(x1, x2, cfg)?;
    mixup_naive(x1, &apply_permutation(x2, &r.perms)?, lambda)
}

/// `λ y1 + (1 − λ) y2`, renormalized to sum to one.
pub fn mix_labels(y1: &[f64], y2: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if y1.len() != y2.len() || y1.is_empty() {
        return Err(Error::dim(format!("labels have {} and {} classes", y1.len(), y2.len())));
    }
    check_lambda(lambda)?;
    for y in [y1, y2] {
        let s: f64 = y.iter().sum();
        if y.iter().any(|v| !(*v >= 0.0)) || (s - 1.0).abs() > 1e-6 {
            return Err(Error::arg(format!("label {y:?} is not a probability vector")));
        }
    }
    let mixed: Vec<f64> = y1.iter().zip(y2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
    let s: f64 = mixed.iter().sum();
    Ok(mixed.into_iter().map(|v| v / s).collect())
}

pub fn one_hot(class: usize, num_classes: usize) -> Result<Vec<f64>> {
    if class >= num_classes {
        return Err(Error::arg(format!("class {class} out of range for {num_classes} classes")));
    }
    let mut y = vec![0.0; num_classes];
    y[class] = 1.0;
    Ok(y)
}

/// Mixes elements and, when both are given, their labels.
pub fn mixup(
    x1: &WeightSpaceElement,
    x2: &WeightSpaceElement,
    labels: Option<(&[f64], &[f64])>,
    lambda: f64,
    mode: MixupMode,
    seed: u64,
) -> Result<MixupSample> {
    let element = match mode {
        MixupMode::Naive => mixup_naive(x1, x2, lambda)?,
        MixupMode::Randperm => mixup_randperm(x1, x2, lambda, seed)?,
        MixupMode::Aligned => mixup_aligned(x1, x2, lambda, &MatchingConfig { seed, ..Default::default() })?,
    };
    let label = labels.map(|(a, b)| mix_labels(a, b, lambda)).transpose()?;
    Ok(MixupSample { element, label, lambda })
}

/// Which pairs of dataset items may be mixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingPolicy {
    Any,
    WithinClass,
    AcrossClasses,
}

/// Draws `n` index pairs `(i, j)` with `i != j` from items with the given
/// class labels, honouring `policy`. Deterministic in `seed`.
pub fn sample_pairs(labels: &[usize], policy: PairingPolicy, n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let possible = match policy {
        PairingPolicy::Any => labels.len() >= 2,
        PairingPolicy::WithinClass => by_class.values().any(|v| v.len() >= 2),
        PairingPolicy::AcrossClasses => by_class.len() >= 2,
    };
    if !possible {
        return Err(Error::arg(format!("no admissible pair under {policy:?}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let i = rng.random_range(0..labels.len());
        let pool: Vec<usize> = match policy {
            PairingPolicy::Any => (0..labels.len()).filter(|&j| j != i).collect(),
            PairingPolicy::WithinClass => by_class[&labels[i]].iter().copied().filter(|&j| j != i).collect(),
            PairingPolicy::AcrossClasses => (0..labels.len()).filter(|&j| labels[j] != labels[i]).collect(),
        };
        if let Some(&j) = pool.choose(&mut rng) {
            out.push((i, j));
        }
    }
    Ok(out)
}
