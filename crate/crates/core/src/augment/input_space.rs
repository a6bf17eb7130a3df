//! Geometric input transforms absorbed into the first layer.
//!
//! Each returns an element `e'` with `f_{e'}(x) = f_e(A x + t)` and leaves
//! every tensor except `W_1`/`b_1` bit-identical.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::wscore::{Matrix, WeightSpaceElement};

/// Largest `|RᵀR − I|` entry accepted as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-5;

/// The affine input map `x ↦ A x + t` an input-space augmentation pulls back.
#[derive(Clone, Debug, PartialEq)]
pub struct InputMap {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl InputMap {
    pub fn linear(m: &Matrix) -> Self {
        Self {
            matrix: m
                .iter_rows()
                .map(|r| r.iter().map(|&v| v as f64).collect())
                .collect(),
            offset: vec![0.0; m.rows()],
        }
    }

    pub fn scale(d: usize, s: f64) -> Self {
        Self {
            matrix: (0..d)
                .map(|i| (0..d).map(|j| if i == j { s } else { 0.0 }).collect())
                .collect(),
            offset: vec![0.0; d],
        }
    }

    pub fn translation(t: &[f32]) -> Self {
        let d = t.len();
        let mut m = Self::scale(d, 1.0);
        m.offset = t.iter().map(|&v| v as f64).collect();
        m
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, t)| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + t)
            .collect()
    }
}

fn replace_first_layer(
    elem: &WeightSpaceElement,
    w: Option<Matrix>,
    b: Option<Vec<f32>>,
) -> Result<WeightSpaceElement> {
    let (spec, mut weights, mut biases, omega0) = elem.clone().into_parts();
    if let Some(w) = w {
        weights[0] = w;
    }
    if let Some(b) = b {
        biases[0] = b;
    }
    WeightSpaceElement::new(spec, weights, biases).map(|e| e.with_omega0(omega0))
}

/// `W_1 ← W_1 R` for orthogonal `R`; then `f'(x) = f(R x)`.
pub fn rotate_input(elem: &WeightSpaceElement, r: &Matrix) -> Result<WeightSpaceElement> {
    let d = elem.spec().input_dim();
    if r.shape() != (d, d) {
        return Err(Error::dim(format!("rotation must be {d}x{d}, got {:?}", r.shape())));
    }
    let defect = r.orthogonality_defect();
    if !(defect <= ORTHOGONALITY_TOL) {
        return Err(Error::arg(format!(
            "matrix is not orthogonal (max |RᵀR − I| = {defect:.3e})"
        )));
    }
    let w = elem.weight(0).matmul(r)?;
    replace_first_layer(elem, Some(w), None)
}

/// `W_1 ← s W_1`; then `f'(x) = f(s x)`.
pub fn scale_input(elem: &WeightSpaceElement, s: f64) -> Result<WeightSpaceElement> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::arg(format!("scale must be positive, got {s}")));
    }
    let w0 = elem.weight(0);
    let w = Matrix::from_fn(w0.rows(), w0.cols(), |i, j| (w0.get(i, j) as f64 * s) as f32);
    replace_first_layer(elem, Some(w), None)
}

/// `b_1 ← W_1 t + b_1`; then `f'(x) = f(x + t)`.
pub fn translate_input(elem: &WeightSpaceElement, t: &[f32]) -> Result<WeightSpaceElement> {
    let w0 = elem.weight(0);
    if t.len() != w0.cols() {
        return Err(Error::dim(format!(
            "translation has {} coordinates, input is {}-D",
            t.len(),
            w0.cols()
        )));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("translation must be finite"));
    }
    let b: Vec<f32> = elem
        .bias(0)
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let shift: f64 = w0.row(i).iter().zip(t).map(|(&w, &x)| w as f64 * x as f64).sum();
            (shift + b as f64) as f32
        })
        .collect();
    replace_first_layer(elem, None, Some(b))
}

/// Counter-clockwise in-plane rotation. Multiples of 90° are exact.
pub fn rotation_2d(degrees: f64) -> Matrix {
    let quarter = degrees / 90.0;
    let (s, c) = if quarter == quarter.round() {
        match (quarter as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        degrees.to_radians().sin_cos()
    };
    Matrix::from_vec(2, 2, vec![c as f32, -s as f32, s as f32, c as f32]).expect("2x2")
}

/// Haar-uniform rotation in `SO(d)` (Gram–Schmidt on a Gaussian matrix).
pub fn random_rotation(d: usize, rng: &mut impl Rng) -> Matrix {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let mut degenerate = false;
        for i in 0..d {
            for j in 0..i {
                let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                let prev = cols[j].clone();
                for (v, p) in cols[i].iter_mut().zip(&prev) {
                    *v -= dot * p;
                }
            }
            let norm = cols[i].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-9 {
                degenerate = true;
                break;
            }
            cols[i].iter_mut().for_each(|v| *v /= norm);
        }
        if degenerate {
            continue;
        }
        if determinant(&cols) < 0.0 {
            cols[0].iter_mut().for_each(|v| *v = -*v);
        }
        return Matrix::from_fn(d, d, |i, j| cols[j][i] as f32);
    }
}

fn determinant(cols: &[Vec<f64>]) -> f64 {
    let n = cols.len();
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        if a[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::wscore::{init_siren, NetworkSpec};

    fn elem() -> WeightSpaceElement {
        init_siren(&NetworkSpec::siren(vec![2, 8, 8, 1]).unwrap(), 30.0, 1).unwrap()
    }

    #[test]
    fn trivial_parameters_are_identities() {
        let e = elem();
        assert_eq!(rotate_input(&e, &Matrix::identity(2)).unwrap(), e);
        assert_eq!(scale_input(&e, 1.0).unwrap(), e);
        assert_eq!(translate_input(&e, &[0.0, 0.0]).unwrap(), e);
    }

    #[test]
    fn only_first_layer_changes() {
        let e = elem();
        let outs = [
            rotate_input(&e, &rotation_2d(33.0)).unwrap(),
            scale_input(&e, 1.7).unwrap(),
            translate_input(&e, &[0.3, -0.2]).unwrap(),
        ];
        for o in &outs {
            for l in 1..e.num_layers() {
                assert_eq!(o.weight(l), e.weight(l));
                assert_eq!(o.bias(l), e.bias(l));
            }
        }
    }

    #[test]
    fn scale_then_inverse_scale() {
        let e = elem();
        let back = scale_input(&scale_input(&e, 4.0).unwrap(), 0.25).unwrap();
        assert_eq!(back, e);
        let odd = scale_input(&scale_input(&e, 3.0).unwrap(), 1.0 / 3.0).unwrap();
        for (a, b) in odd.weight(0).data().iter().zip(e.weight(0).data()) {
            assert!((a - b).abs() <= f32::EPSILON * b.abs());
        }
    }

    #[test]
    fn translate_there_and_back() {
        let e = elem();
        let back = translate_input(&translate_input(&e, &[0.4, -0.7]).unwrap(), &[-0.4, 0.7]).unwrap();
        for (a, b) in back.bias(0).iter().zip(e.bias(0)) {
            assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let e = elem();
        let shear = Matrix::from_vec(2, 2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(rotate_input(&e, &shear).is_err());
        assert!(rotate_input(&e, &Matrix::identity(3)).is_err());
        assert!(scale_input(&e, 0.0).is_err());
        assert!(scale_input(&e, -2.0).is_err());
        assert!(translate_input(&e, &[1.0]).is_err());
    }

    #[test]
    fn quarter_turns_are_exact() {
        let r = rotation_2d(90.0);
        assert_eq!(r.data(), &[0.0, -1.0, 1.0, 0.0]);
        assert_eq!(rotation_2d(-90.0).data(), &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(rotation_2d(360.0), Matrix::identity(2));
    }

    #[test]
    fn random_rotations_are_proper() {
        let mut rng = rng_from_seed(4);
        for d in 1..=4 {
            for _ in 0..20 {
                let r = random_rotation(d, &mut rng);
                assert!(r.orthogonality_defect() < 1e-6);
                let cols: Vec<Vec<f64>> = (0..d)
                    .map(|j| (0..d).map(|i| r.get(i, j) as f64).collect())
                    .collect();
                assert!((determinant(&cols) - 1.0).abs() < 1e-5);
            }
        }
    }
}
