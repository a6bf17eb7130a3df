use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wscore::{Matrix, NetworkSpec, WeightSpaceElement};

/// A bijection on `0..n`, stored as a gather map: applying it to a vector
/// `v` gives `v'[i] = v[source[i]]`. As a matrix this is `P` with
/// `P[i, source[i]] = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl Permutation {
    pub fn new(source: Vec<usize>) -> Result<Self> {
        let n = source.len();
        let mut seen = vec![false; n];
        for &s in &source {
            if s >= n || std::mem::replace(&mut seen[s], true) {
                return Err(Error::arg(format!("{source:?} is not a permutation of 0..{n}")));
            }
        }
        Ok(Self(source))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Uniformly random (Fisher–Yates).
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &s)| i == s)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn source(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &s) in self.0.iter().enumerate() {
            inv[s] = i;
        }
        Self(inv)
    }

    /// The permutation equal to applying `self` and then `next`.
    pub fn then(&self, next: &Permutation) -> Self {
        Self(next.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn gather<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.0.iter().map(|&s| v[s]).collect()
    }
}

/// One permutation per hidden layer, `perms[h]` acting on the `dims[h + 1]`
/// neurons of hidden layer `h`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PermutationSequence {
    perms: Vec<Permutation>,
}

impl PermutationSequence {
    pub fn new(perms: Vec<Permutation>) -> Self {
        Self { perms }
    }

    pub fn identity(spec: &NetworkSpec) -> Self {
        Self::new(
            (0..spec.num_hidden())
                .map(|h| Permutation::identity(spec.hidden_width(h)))
                .collect(),
        )
    }

    pub fn random(spec: &NetworkSpec, rng: &mut impl Rng) -> Self {
        Self::new(
            (0..spec.num_hidden())
                .map(|h| Permutation::random(spec.hidden_width(h), rng))
                .collect(),
        )
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn get(&self, h: usize) -> &Permutation {
        &self.perms[h]
    }

    pub(crate) fn set(&mut self, h: usize, p: Permutation) {
        self.perms[h] = p;
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.perms.iter().all(Permutation::is_identity)
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.perms.iter().map(Permutation::inverse).collect())
    }

    /// Applying the result equals applying `self` and then `next`.
    pub fn then(&self, next: &PermutationSequence) -> Self {
        Self::new(
            self.perms
                .iter()
                .zip(&next.perms)
                .map(|(a, b)| a.then(b))
                .collect(),
        )
    }

    pub fn check_conforms(&self, spec: &NetworkSpec) -> Result<()> {
        if self.perms.len() != spec.num_hidden() {
            return Err(Error::dim(format!(
                "{} permutations for {} hidden layers",
                self.perms.len(),
                spec.num_hidden()
            )));
        }
        for (h, p) in self.perms.iter().enumerate() {
            if p.len() != spec.hidden_width(h) {
                return Err(Error::dim(format!(
                    "hidden layer {h} has {} neurons, permutation has {}",
                    spec.hidden_width(h),
                    p.len()
                )));
            }
        }
        Ok(())
    }
}

/// Relabels hidden neurons: `W'_l = P_l W_l P_{l−1}ᵀ`, `b'_l = P_l b_l`, with
/// `P_0` and `P_M` the identity. The represented function is unchanged.
pub fn apply_permutation(
    elem: &WeightSpaceElement,
    p: &PermutationSequence,
) -> Result<WeightSpaceElement> {
    let spec = elem.spec();
    p.check_conforms(spec)?;
    let m = spec.num_layers();
    let weights = (0..m)
        .map(|l| {
            let w = elem.weight(l);
            let rows = (l < m - 1).then(|| p.get(l));
            let cols = (l > 0).then(|| p.get(l - 1));
            Matrix::from_fn(w.rows(), w.cols(), |i, j| {
                let si = rows.map_or(i, |r| r.source(i));
                let sj = cols.map_or(j, |c| c.source(j));
                w.get(si, sj)
            })
        })
        .collect();
    let biases = (0..m)
        .map(|l| {
            if l < m - 1 {
                p.get(l).gather(elem.bias(l))
            } else {
                elem.bias(l).to_vec()
            }
        })
        .collect();
    let (spec, _, _, omega0) = elem.clone().into_parts();
    WeightSpaceElement::new(spec, weights, biases).map(|e| e.with_omega0(omega0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::wscore::init_relu;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![1, 0]).is_ok());
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    #[test]
    fn identity_leaves_element_bit_exact() {
        let spec = NetworkSpec::relu(vec![3, 5, 4, 2]).unwrap();
        let e = init_relu(&spec, 1).unwrap();
        let out = apply_permutation(&e, &PermutationSequence::identity(&spec)).unwrap();
        assert_eq!(out, e);
    }

    #[test]
    fn swap_changes_weights_but_not_function() {
        let spec = NetworkSpec::relu(vec![2, 2, 1]).unwrap();
        let e = init_relu(&spec, 3).unwrap();
        let swap = PermutationSequence::new(vec![Permutation::new(vec![1, 0]).unwrap()]);
        let out = apply_permutation(&e, &swap).unwrap();
        assert!(e.flat_distance(&out).unwrap() > 0.0);
        assert_eq!(out.weight(0).row(0), e.weight(0).row(1));
        assert_eq!(out.weight(1).get(0, 0), e.weight(1).get(0, 1));
    }

    #[test]
    fn size_mismatch() {
        let spec = NetworkSpec::relu(vec![2, 3, 1]).unwrap();
        let e = init_relu(&spec, 0).unwrap();
        let wrong = PermutationSequence::new(vec![Permutation::identity(2)]);
        assert!(matches!(apply_permutation(&e, &wrong), Err(Error::Dimension(_))));
        let too_many = PermutationSequence::new(vec![Permutation::identity(3); 2]);
        assert!(apply_permutation(&e, &too_many).is_err());
    }

    proptest! {
        #[test]
        fn group_laws(seed in any::<u64>()) {
            let spec = NetworkSpec::relu(vec![3, 6, 5, 2]).unwrap();
            let e = init_relu(&spec, seed).unwrap();
            let mut rng = rng_from_seed(seed ^ 0xabc);
            let p = PermutationSequence::random(&spec, &mut rng);
            let q = PermutationSequence::random(&spec, &mut rng);
            let pq = apply_permutation(&apply_permutation(&e, &p).unwrap(), &q).unwrap();
            prop_assert_eq!(&pq, &apply_permutation(&e, &p.then(&q)).unwrap());
            let back = apply_permutation(&apply_permutation(&e, &p).unwrap(), &p.inverse()).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
