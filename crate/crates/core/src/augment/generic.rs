//! Augmentations that apply to any parameter vector: Gaussian noise,
//! dropout, and quantile dropout. Statistics are taken per tensor (each
//! weight matrix and each bias vector separately).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::wscore::WeightSpaceElement;

fn population_std(t: &[f32]) -> f64 {
    let n = t.len() as f64;
    let mean = t.iter().map(|&v| v as f64).sum::<f64>() / n;
    (t.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Adds `N(0, (sigma_rel · std(T))²)` to every entry of each tensor `T`.
pub fn gaussian_noise(elem: &WeightSpaceElement, sigma_rel: f64, seed: u64) -> Result<WeightSpaceElement> {
    if !(sigma_rel >= 0.0 && sigma_rel.is_finite()) {
        return Err(Error::arg(format!("sigma_rel must be nonnegative, got {sigma_rel}")));
    }
    let mut rng = rng_from_seed(seed);
    elem.map_tensors(|_, t| {
        let sd = sigma_rel * population_std(t);
        if sd == 0.0 {
            return;
        }
        let normal = Normal::new(0.0, sd).expect("positive finite std");
        for v in t.iter_mut() {
            *v = (*v as f64 + normal.sample(&mut rng)) as f32;
        }
    })
}

/// Zeroes each parameter independently with probability `p_drop`; survivors
/// are left unscaled.
pub fn dropout(elem: &WeightSpaceElement, p_drop: f64, seed: u64) -> Result<WeightSpaceElement> {
    if !(0.0..=1.0).contains(&p_drop) {
        return Err(Error::arg(format!("p_drop must be in [0, 1], got {p_drop}")));
    }
    let mut rng = rng_from_seed(seed);
    elem.map_tensors(|_, t| {
        for v in t.iter_mut() {
            if rng.random_bool(p_drop) {
                *v = 0.0;
            }
        }
    })
}

/// Zeroes, per tensor, the `⌊q·n⌋` entries of smallest magnitude (ties go
/// to the lower index).
pub fn quantile_dropout(elem: &WeightSpaceElement, q: f64) -> Result<WeightSpaceElement> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::arg(format!("q must be in [0, 1), got {q}")));
    }
    elem.map_tensors(|_, t| zero_smallest(t, q))
}

fn zero_smallest(t: &mut [f32], q: f64) {
    let k = (q * t.len() as f64).floor() as usize;
    if k == 0 {
        return;
    }
    let mut idx: Vec<usize> = (0..t.len()).collect();
    idx.sort_by(|&a, &b| t[a].abs().total_cmp(&t[b].abs()).then(a.cmp(&b)));
    for &i in &idx[..k] {
        t[i] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wscore::{init_siren, Matrix, NetworkSpec};

    fn elem() -> WeightSpaceElement {
        init_siren(&NetworkSpec::siren(vec![2, 16, 16, 1]).unwrap(), 30.0, 3).unwrap()
    }

    /// 1 -> 100 -> 100 -> 1 network whose middle weight has 10⁴ entries.
    fn wide() -> WeightSpaceElement {
        init_siren(&NetworkSpec::siren(vec![1, 100, 100, 1]).unwrap(), 30.0, 8).unwrap()
    }

    #[test]
    fn zero_strength_is_identity() {
        let e = elem();
        assert_eq!(gaussian_noise(&e, 0.0, 1).unwrap(), e);
        assert_eq!(dropout(&e, 0.0, 1).unwrap(), e);
        assert_eq!(quantile_dropout(&e, 0.0).unwrap(), e);
    }

    #[test]
    fn noise_std_tracks_tensor_std() {
        let e = wide();
        let sigma_rel = 0.1;
        let out = gaussian_noise(&e, sigma_rel, 17).unwrap();
        let before = e.weight(1).data();
        let diff: Vec<f32> = out
            .weight(1)
            .data()
            .iter()
            .zip(before)
            .map(|(a, b)| ((*a as f64) - (*b as f64)) as f32)
            .collect();
        assert_eq!(diff.len(), 10_000);
        let want = sigma_rel * population_std(before);
        let got = population_std(&diff);
        assert!(got >= 0.95 * want && got <= 1.05 * want, "{got} vs {want}");
    }

    #[test]
    fn constant_tensor_unchanged_by_noise() {
        let spec = NetworkSpec::siren(vec![2, 3, 1]).unwrap();
        let e = crate::WeightSpaceElement::new(
            spec,
            vec![Matrix::from_fn(3, 2, |_, _| 0.5), Matrix::from_fn(1, 3, |_, j| j as f32)],
            vec![vec![1.0; 3], vec![0.0]],
        )
        .unwrap();
        let out = gaussian_noise(&e, 0.5, 3).unwrap();
        assert_eq!(out.weight(0), e.weight(0));
        assert_eq!(out.bias(0), e.bias(0));
        assert_ne!(out.weight(1), e.weight(1));
    }

    #[test]
    fn dropout_extremes_and_rate() {
        let e = elem();
        let all = dropout(&e, 1.0, 2).unwrap();
        assert!(all.flatten().iter().all(|&v| v == 0.0));
        let w = wide();
        let out = dropout(&w, 0.3, 5).unwrap();
        let zeroed = out
            .weight(1)
            .data()
            .iter()
            .zip(w.weight(1).data())
            .filter(|(a, b)| **a == 0.0 && **b != 0.0)
            .count();
        let frac = zeroed as f64 / 10_000.0;
        assert!((0.27..=0.33).contains(&frac), "{frac}");
        assert!(dropout(&e, 1.5, 0).is_err());
    }

    #[test]
    fn quantile_zeroes_smallest_magnitudes() {
        let mut t = [0.1f32, -0.5, 2.0, -0.05];
        zero_smallest(&mut t, 0.5);
        assert_eq!(t, [0.0, -0.5, 2.0, 0.0]);

        let mut t = [3.0f32, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, -6.0];
        zero_smallest(&mut t, 0.25);
        assert_eq!(t.iter().filter(|v| **v == 0.0).count(), 2);
        assert_eq!(t, [3.0, 0.0, 4.0, 0.0, -5.0, 9.0, 2.0, -6.0]);

        // ties broken by index
        let mut t = [1.0f32, -1.0, 1.0];
        zero_smallest(&mut t, 0.5);
        assert_eq!(t, [0.0, -1.0, 1.0]);
        assert!(quantile_dropout(&elem(), 1.0).is_err());
    }

    #[test]
    fn quantile_survivors_are_a_subset() {
        let e = elem();
        let out = quantile_dropout(&e, 0.4).unwrap();
        let zeros_in = e.flatten().iter().filter(|v| **v == 0.0).count();
        let zeros_out = out.flatten().iter().filter(|v| **v == 0.0).count();
        assert!(zeros_out >= zeros_in);
        for (a, b) in out.flatten().iter().zip(e.flatten()) {
            assert!(*a == 0.0 || *a == b);
        }
    }
}
