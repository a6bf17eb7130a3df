use crate::error::{Error, Result};
use crate::fit::image_grid;
use crate::pgm::GrayImage;
use crate::wscore::WeightSpaceElement;

/// Evaluates a 2-D → 1-D element on the `height × width` grid over
/// `[-1, 1]²` and quantizes the clamped output to 8 bits.
pub fn render_inr(elem: &WeightSpaceElement, height: usize, width: usize) -> Result<GrayImage> {
    let spec = elem.spec();
    if spec.input_dim() != 2 || spec.output_dim() != 1 {
        return Err(Error::dim(format!(
            "rendering needs a 2 -> 1 network, got {} -> {}",
            spec.input_dim(),
            spec.output_dim()
        )));
    }
    if height < 2 || width < 2 {
        return Err(Error::arg(format!("grid must be at least 2x2, got {height}x{width}")));
    }
    let values = elem.forward_batch_f64(&image_grid(height, width))?;
    GrayImage::from_unit_values(width, height, &values)
}

/// The render of `x ↦ f(R x)` for `R` a quarter turn counter-clockwise,
/// given the render of `f` on a square grid.
pub fn pullback_quarter_turn(img: &GrayImage) -> Result<GrayImage> {
    let n = img.width();
    if img.height() != n {
        return Err(Error::dim("quarter-turn comparison needs a square image"));
    }
    // pixel (r, c) sits at (x, y) = (c, r) in grid units; R (x, y) = (−y, x)
    let pixels = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| img.get(c, n - 1 - r))
        .collect();
    GrayImage::new(n, n, pixels)
}

/// Fraction of pixels whose values differ by at most `tol` levels.
pub fn fraction_within(a: &GrayImage, b: &GrayImage, tol: u8) -> Result<f64> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::dim("images differ in size"));
    }
    let close = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .filter(|(p, q)| p.abs_diff(**q) <= tol)
        .count();
    Ok(close as f64 / a.pixels().len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{rotate_input, rotation_2d};
    use crate::wscore::{init_siren, NetworkSpec};

    #[test]
    fn zero_network_renders_output_bias() {
        let spec = NetworkSpec::siren(vec![2, 4, 1]).unwrap();
        let (spec, weights, mut biases, _) = WeightSpaceElement::zeros(&spec).into_parts();
        biases[1][0] = 0.3;
        let e = WeightSpaceElement::new(spec, weights, biases).unwrap();
        let img = render_inr(&e, 5, 7).unwrap();
        assert_eq!((img.width(), img.height()), (7, 5));
        assert!(img.pixels().iter().all(|&p| p == (0.3f64 * 255.0).round() as u8));
    }

    #[test]
    fn rejects_wrong_dims() {
        let e = init_siren(&NetworkSpec::siren(vec![3, 4, 1]).unwrap(), 30.0, 0).unwrap();
        assert!(render_inr(&e, 8, 8).is_err());
    }

    #[test]
    fn rotated_network_renders_rotated_image() {
        let e = init_siren(&NetworkSpec::siren(vec![2, 16, 1]).unwrap(), 10.0, 2).unwrap();
        let rot = rotate_input(&e, &rotation_2d(90.0)).unwrap();
        let want = pullback_quarter_turn(&render_inr(&e, 24, 24).unwrap()).unwrap();
        let got = render_inr(&rot, 24, 24).unwrap();
        assert!(fraction_within(&got, &want, 2).unwrap() >= 0.99);
    }

    #[test]
    fn quarter_turn_moves_pixels() {
        let img = GrayImage::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        // four quarter turns are the identity
        let mut x = img.clone();
        for _ in 0..4 {
            x = pullback_quarter_turn(&x).unwrap();
        }
        assert_eq!(x, img);
        assert_ne!(pullback_quarter_turn(&img).unwrap(), img);
    }
}
