use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::SignalTask;
use crate::rng::rng_from_seed;
use crate::symmetry::{apply_permutation, PermutationSequence};
use crate::wscore::WeightSpaceElement;

use super::matching::{weight_matching, MatchingConfig};

/// How `x2` is permuted before interpolating.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AlignMode {
    None,
    Random { seed: u64 },
    Matched(MatchingConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierProfile {
    pub lambdas: Vec<f64>,
    pub losses: Vec<f64>,
    /// `max_λ [L(λ) − ((1 − λ) L(0) + λ L(1))]`.
    pub barrier: f64,
    /// Permutations applied to `x2`.
    pub perms: PermutationSequence,
}

impl BarrierProfile {
    /// `lambda,loss` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,loss\n");
        for (l, v) in self.lambdas.iter().zip(&self.losses) {
            s.push_str(&format!("{l},{v}\n"));
        }
        s
    }
}

/// Task loss along `θ(λ) = (1 − λ) x1 + λ x2'` on a uniform grid of
/// `grid_size` points in `[0, 1]`, and the largest excess over the chord.
pub fn loss_barrier(
    x1: &WeightSpaceElement,
    x2: &WeightSpaceElement,
    task: &SignalTask,
    grid_size: usize,
    align: &AlignMode,
) -> Result<BarrierProfile> {
    x1.check_same_spec(x2)?;
    if grid_size < 3 {
        return Err(Error::arg(format!("grid_size must be at least 3, got {grid_size}")));
    }
    let spec = x1.spec();
    let perms = match align {
        AlignMode::None => PermutationSequence::identity(spec),
        AlignMode::Random { seed } => PermutationSequence::random(spec, &mut rng_from_seed(*seed)),
        AlignMode::Matched(cfg) => weight_matching(x1, x2, cfg)?.perms,
    };
    let a = x1.flatten();
    let b = apply_permutation(x2, &perms)?.flatten();

    let lambdas: Vec<f64> = (0..grid_size).map(|i| i as f64 / (grid_size - 1) as f64).collect();
    let losses = lambdas
        .iter()
        .map(|&t| {
            let theta: Vec<f32> = a
                .iter()
                .zip(&b)
                .map(|(&p, &q)| ((1.0 - t) * p as f64 + t * q as f64) as f32)
                .collect();
            task.loss(&WeightSpaceElement::unflatten(spec, &theta)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
        return Err(Error::Numeric {
            layer: spec.num_layers() - 1,
            message: format!("non-finite loss at lambda {}", lambdas[i]),
        });
    }
    let (l0, l1) = (losses[0], losses[grid_size - 1]);
    let barrier = lambdas
        .iter()
        .zip(&losses)
        .map(|(&t, &l)| l - (l0 + t * (l1 - l0)))
        .fold(0.0, f64::max);
    Ok(BarrierProfile {
        lambdas,
        losses,
        barrier,
        perms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{synth_signal, SignalKind};
    use crate::wscore::{init_siren, NetworkSpec};

    fn task() -> SignalTask {
        synth_signal(&SignalKind::Disk {
            size: 12,
            center: [0.1, 0.0],
            radius: 0.5,
        })
        .unwrap()
    }

    #[test]
    fn identical_endpoints_have_no_barrier() {
        let spec = NetworkSpec::siren(vec![2, 8, 8, 1]).unwrap();
        let x = init_siren(&spec, 30.0, 3).unwrap();
        let p = loss_barrier(&x, &x, &task(), 7, &AlignMode::None).unwrap();
        assert_eq!(p.barrier, 0.0);
        assert!(p.losses.iter().all(|&l| l == p.losses[0]));
        assert_eq!(p.lambdas.first(), Some(&0.0));
        assert_eq!(p.lambdas.last(), Some(&1.0));
    }

    #[test]
    fn matched_permuted_copy_has_no_barrier() {
        let spec = NetworkSpec::siren(vec![2, 8, 8, 1]).unwrap();
        let x = init_siren(&spec, 30.0, 3).unwrap();
        let y = apply_permutation(&x, &PermutationSequence::random(&spec, &mut rng_from_seed(1))).unwrap();
        let p = loss_barrier(&x, &y, &task(), 5, &AlignMode::Matched(MatchingConfig::default())).unwrap();
        assert!(p.barrier <= 1e-6);
    }

    #[test]
    fn csv_and_arguments() {
        let spec = NetworkSpec::siren(vec![2, 4, 1]).unwrap();
        let x = init_siren(&spec, 30.0, 3).unwrap();
        let y = init_siren(&spec, 30.0, 4).unwrap();
        let p = loss_barrier(&x, &y, &task(), 3, &AlignMode::Random { seed: 2 }).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("lambda,loss\n0,"));
        assert_eq!(csv.lines().count(), 4);
        assert!(p.barrier >= 0.0);
        assert!(loss_barrier(&x, &y, &task(), 2, &AlignMode::None).is_err());
    }
}
