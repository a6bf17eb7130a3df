use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::symmetry::{apply_permutation, Permutation, PermutationSequence};
use crate::wscore::WeightSpaceElement;

use super::lap::{assignment_score, solve_lap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchingConfig {
    pub max_passes: usize,
    /// Seeds the per-pass layer visiting order.
    pub seed: u64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            max_passes: 100,
            seed: 0,
        }
    }
}

/// Permutations aligning `x2` to `x1`: `apply_permutation(x2, &perms)` is
/// the aligned element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub perms: PermutationSequence,
    /// `‖flatten(x1) − flatten(perms · x2)‖²`.
    pub objective: f64,
    pub passes: usize,
    /// A full pass left every permutation unchanged.
    pub converged: bool,
}

/// Squared flat distance `‖x1 − p·x2‖²`.
pub fn alignment_objective(x1: &WeightSpaceElement, x2: &WeightSpaceElement, p: &PermutationSequence) -> Result<f64> {
    let d = x1.flat_distance(&apply_permutation(x2, p)?)?;
    Ok(d * d)
}

/// Similarity of neuron `i` of `x1` with neuron `j` of `x2` in hidden
/// layer `h`, holding the neighbouring permutations fixed.
fn layer_scores(x1: &WeightSpaceElement, x2: &WeightSpaceElement, perms: &PermutationSequence, h: usize) -> Vec<Vec<f64>> {
    let mut a = incoming_scores(x1, x2, perms, h);
    let m = x1.spec().num_layers();
    let (v1, v2) = (x1.weight(h + 1), x2.weight(h + 1));
    let next = (h + 1 < m - 1).then(|| perms.get(h + 1));
    for k in 0..v1.rows() {
        let k2 = next.map_or(k, |p| p.source(k));
        let (r1, r2) = (v1.row(k), v2.row(k2));
        for (i, row) in a.iter_mut().enumerate() {
            let c = r1[i] as f64;
            for (j, s) in row.iter_mut().enumerate() {
                *s += c * r2[j] as f64;
            }
        }
    }
    a
}

/// The part of [`layer_scores`] from layer `h`'s own weight rows and biases.
fn incoming_scores(x1: &WeightSpaceElement, x2: &WeightSpaceElement, perms: &PermutationSequence, h: usize) -> Vec<Vec<f64>> {
    let n = x1.spec().hidden_width(h);
    let mut a = vec![vec![0.0f64; n]; n];
    let (w1, w2) = (x1.weight(h), x2.weight(h));
    let prev = (h > 0).then(|| perms.get(h - 1));
    for (i, row) in a.iter_mut().enumerate() {
        let r1 = w1.row(i);
        for (j, s) in row.iter_mut().enumerate() {
            let r2 = w2.row(j);
            let dot: f64 = match prev {
                Some(p) => r1.iter().enumerate().map(|(k, &v)| v as f64 * r2[p.source(k)] as f64).sum(),
                None => r1.iter().zip(r2).map(|(&a, &b)| a as f64 * b as f64).sum(),
            };
            *s += dot + x1.bias(h)[i] as f64 * x2.bias(h)[j] as f64;
        }
    }
    a
}

/// Matches each hidden layer in input-to-output order on its incoming
/// weights alone, given the layer before it.
fn forward_sweep(x1: &WeightSpaceElement, x2: &WeightSpaceElement) -> Result<PermutationSequence> {
    let mut perms = PermutationSequence::identity(x1.spec());
    for h in 0..x1.spec().num_hidden() {
        let best = solve_lap(&incoming_scores(x1, x2, &perms, h))?;
        perms.set(h, Permutation::new(best)?);
    }
    Ok(perms)
}

/// Weight matching by coordinate descent over hidden layers.
///
/// Starts from whichever of the identity and a forward sweep (see
/// [`forward_sweep`]) is closer; each pass visits the hidden layers in
/// a seed-shuffled order and replaces that layer's permutation with the
/// optimal linear assignment given its neighbours. A new assignment is only
/// accepted when it strictly improves the layer score, so the objective
/// never increases and the loop stops at the first pass with no change.
pub fn weight_matching(x1: &WeightSpaceElement, x2: &WeightSpaceElement, cfg: &MatchingConfig) -> Result<AlignmentResult> {
    x1.check_same_spec(x2)?;
    if cfg.max_passes == 0 {
        return Err(Error::Config("max_passes must be at least 1".into()));
    }
    let spec = x1.spec();
    let identity = PermutationSequence::identity(spec);
    let sweep = forward_sweep(x1, x2)?;
    let mut perms = if alignment_objective(x1, x2, &sweep)? < alignment_objective(x1, x2, &identity)? {
        sweep
    } else {
        identity
    };
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..spec.num_hidden()).collect();
    let mut passes = 0;
    let mut converged = false;

    while passes < cfg.max_passes {
        passes += 1;
        order.shuffle(&mut rng);
        let mut changed = false;
        for &h in &order {
            let a = layer_scores(x1, x2, &perms, h);
            let current = assignment_score(&a, perms.get(h).as_slice());
            let best = solve_lap(&a)?;
            let gain = assignment_score(&a, &best) - current;
            let scale = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
            if gain > 1e-12 * scale * a.len() as f64 {
                perms.set(h, Permutation::new(best)?);
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Ok(AlignmentResult {
        objective: alignment_objective(x1, x2, &perms)?,
        perms,
        passes,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wscore::{init_relu, init_siren, NetworkSpec};

    #[test]
    fn self_alignment_is_identity() {
        let spec = NetworkSpec::siren(vec![2, 10, 10, 1]).unwrap();
        let x = init_siren(&spec, 30.0, 1).unwrap();
        let r = weight_matching(&x, &x, &MatchingConfig::default()).unwrap();
        assert!(r.perms.is_identity());
        assert_eq!(r.objective, 0.0);
        assert!(r.converged);
        assert_eq!(r.passes, 1);
    }

    #[test]
    fn recovers_a_planted_permutation() {
        let spec = NetworkSpec::relu(vec![3, 12, 9, 7, 2]).unwrap();
        for seed in 0..10 {
            let x = init_relu(&spec, seed).unwrap();
            let p = PermutationSequence::random(&spec, &mut rng_from_seed(seed + 100));
            let y = apply_permutation(&x, &p).unwrap();
            let r = weight_matching(&x, &y, &MatchingConfig::default()).unwrap();
            assert_eq!(r.objective, 0.0, "seed {seed}");
            assert_eq!(r.perms, p.inverse());
        }
    }

    #[test]
    fn never_worse_than_identity() {
        let spec = NetworkSpec::siren(vec![2, 16, 16, 1]).unwrap();
        for seed in 0..5 {
            let a = init_siren(&spec, 30.0, seed).unwrap();
            let b = init_siren(&spec, 30.0, seed + 50).unwrap();
            let r = weight_matching(&a, &b, &MatchingConfig::default()).unwrap();
            let id = alignment_objective(&a, &b, &PermutationSequence::identity(&spec)).unwrap();
            assert!(r.objective <= id);
            assert!(r.passes <= 100);
        }
    }

    #[test]
    fn spec_mismatch_and_zero_passes() {
        let a = init_relu(&NetworkSpec::relu(vec![2, 4, 1]).unwrap(), 0).unwrap();
        let b = init_relu(&NetworkSpec::relu(vec![2, 5, 1]).unwrap(), 0).unwrap();
        assert!(weight_matching(&a, &b, &MatchingConfig::default()).is_err());
        let cfg = MatchingConfig {
            max_passes: 0,
            seed: 0,
        };
        assert!(weight_matching(&a, &a, &cfg).is_err());
    }
}
