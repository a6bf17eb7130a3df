//! Regression targets for INR fitting, plus procedural desk-scale signals.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgm::GrayImage;
use crate::rng::rng_from_seed;
use crate::wscore::{Matrix, WeightSpaceElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    Image2d { height: usize, width: usize },
    Sdf3d,
    /// Any other point-wise regression.
    Regression,
}

/// Sample coordinates, target values, and the loss that compares them.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalTask {
    inputs: Matrix,
    targets: Matrix,
    loss: LossKind,
    kind: TaskKind,
}

/// Pixel-center coordinates of an `height x width` image on `[-1, 1]^2`,
/// row-major, each row `(x, y)` with `x` along columns.
pub fn image_grid(height: usize, width: usize) -> Matrix {
    let coord = |i: usize, n: usize| {
        if n == 1 {
            0.0
        } else {
            -1.0 + 2.0 * i as f64 / (n - 1) as f64
        }
    };
    let mut m = Matrix::zeros(height * width, 2);
    for i in 0..height {
        for j in 0..width {
            let r = m.row_mut(i * width + j);
            r[0] = coord(j, width) as f32;
            r[1] = coord(i, height) as f32;
        }
    }
    m
}

impl SignalTask {
    pub fn new(inputs: Matrix, targets: Matrix, kind: TaskKind) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::arg("a task needs at least one sample"));
        }
        if inputs.rows() != targets.rows() {
            return Err(Error::dim(format!(
                "{} inputs but {} targets",
                inputs.rows(),
                targets.rows()
            )));
        }
        if inputs.data().iter().chain(targets.data()).any(|v| !v.is_finite()) {
            return Err(Error::arg("task contains non-finite values"));
        }
        if let TaskKind::Image2d { height, width } = kind {
            if height * width != inputs.rows() || inputs.cols() != 2 {
                return Err(Error::dim(format!(
                    "image task {height}x{width} needs {} rows of 2 coordinates",
                    height * width
                )));
            }
            if inputs.data().iter().any(|v| v.abs() > 1.0) {
                return Err(Error::arg("image coordinates must lie in [-1, 1]"));
            }
        }
        Ok(Self {
            inputs,
            targets,
            loss: LossKind::Mse,
            kind,
        })
    }

    /// Image task over the normalized grid; `values` row-major in `[0, 1]`.
    pub fn image(height: usize, width: usize, values: &[f32]) -> Result<Self> {
        let targets = Matrix::from_vec(height * width, 1, values.to_vec())?;
        Self::new(image_grid(height, width), targets, TaskKind::Image2d { height, width })
    }

    pub fn from_gray_image(img: &GrayImage) -> Result<Self> {
        let values: Vec<f32> = img.unit_values().iter().map(|&v| v as f32).collect();
        Self::image(img.height(), img.width(), &values)
    }

    pub fn regression(inputs: Matrix, targets: Matrix) -> Result<Self> {
        Self::new(inputs, targets, TaskKind::Regression)
    }

    pub fn sdf(points: Matrix, sdf: Vec<f32>) -> Result<Self> {
        if points.cols() != 3 {
            return Err(Error::dim("SDF points must be 3-D"));
        }
        let n = sdf.len();
        Self::new(points, Matrix::from_vec(n, 1, sdf)?, TaskKind::Sdf3d)
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> &Matrix {
        &self.targets
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn is_image(&self) -> bool {
        matches!(self.kind, TaskKind::Image2d { .. })
    }

    pub fn target_values(&self) -> Vec<f64> {
        self.targets.data().iter().map(|&v| v as f64).collect()
    }

    /// Mean squared error of `elem` over all samples and output channels.
    pub fn loss(&self, elem: &WeightSpaceElement) -> Result<f64> {
        if elem.spec().output_dim() != self.targets.cols() {
            return Err(Error::dim(format!(
                "network outputs {} values, task targets have {}",
                elem.spec().output_dim(),
                self.targets.cols()
            )));
        }
        let out = elem.forward_batch_f64(&self.inputs)?;
        let sum: f64 = out
            .iter()
            .zip(self.targets.data())
            .map(|(&y, &t)| {
                let d = y - t as f64;
                d * d
            })
            .sum();
        Ok(sum / out.len() as f64)
    }

    pub fn to_gray_image(&self) -> Result<GrayImage> {
        match self.kind {
            TaskKind::Image2d { height, width } => {
                GrayImage::from_unit_values(width, height, &self.target_values())
            }
            _ => Err(Error::arg("not an image task")),
        }
    }

    /// Writes an SDF task as CSV with header `x,y,z,sdf`.
    pub fn write_sdf_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.kind != TaskKind::Sdf3d {
            return Err(Error::arg("not an SDF task"));
        }
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["x", "y", "z", "sdf"]).map_err(|e| csv_err(path, e))?;
        for (p, t) in self.inputs.iter_rows().zip(self.targets.data()) {
            w.write_record(&[p[0].to_string(), p[1].to_string(), p[2].to_string(), t.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a CSV with columns `x,y,z,sdf` (header required).
    pub fn read_sdf_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
        let want = ["x", "y", "z", "sdf"];
        let idx: Vec<usize> = want
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h.trim() == *name)
                    .ok_or_else(|| Error::arg(format!("{}: missing column {name}", path.display())))
            })
            .collect::<Result<_>>()?;
        let mut pts = Vec::new();
        let mut sdf = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let mut vals = [0f32; 4];
            for (v, &i) in vals.iter_mut().zip(&idx) {
                *v = rec
                    .get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::arg(format!("{}: bad number on record {}", path.display(), line + 1)))?;
            }
            pts.extend_from_slice(&vals[..3]);
            sdf.push(vals[3]);
        }
        let n = sdf.len();
        Self::sdf(Matrix::from_vec(n, 3, pts)?, sdf)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::arg(format!("{}: {e}", path.display()))
}

/// How SDF sample points are drawn.
///
/// `near_fraction` of the points are surface samples displaced by isotropic
/// Gaussian noise of standard deviation `band`; the rest are uniform in
/// `[-1, 1]^3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdfSampling {
    pub n_points: usize,
    pub near_fraction: f64,
    pub band: f64,
    pub seed: u64,
}

impl Default for SdfSampling {
    fn default() -> Self {
        Self {
            n_points: 4096,
            near_fraction: 0.5,
            band: 0.05,
            seed: 0,
        }
    }
}

const LOW: f64 = 0.1;
const HIGH: f64 = 0.9;
const SUPERSAMPLE: usize = 4;

/// Procedural signals. Image kinds render a `size x size` grayscale image in
/// `[0, 1]` with 4x4 supersampling; SDF kinds sample analytic signed
/// distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    /// `cells x cells` squares over the domain, shifted by `offset` cells.
    Checkerboard {
        size: usize,
        cells: usize,
        #[serde(default)]
        offset: [f64; 2],
    },
    /// Raised-cosine falloff from `center`, reaching the floor at `radius`.
    RadialGradient {
        size: usize,
        center: [f64; 2],
        radius: f64,
    },
    /// Sinusoidal stripes: `frequency` periods per unit length along `angle`.
    Stripes {
        size: usize,
        frequency: f64,
        angle: f64,
        phase: f64,
    },
    Disk {
        size: usize,
        center: [f64; 2],
        radius: f64,
    },
    SphereSdf {
        radius: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        sampling: SdfSampling,
    },
    BoxSdf {
        half_extents: [f64; 3],
        #[serde(default)]
        sampling: SdfSampling,
    },
}

/// The four procedural image classes of the desk-scale corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageClass {
    Checkerboard,
    RadialGradient,
    Stripes,
    Disk,
}

impl ImageClass {
    pub const ALL: [ImageClass; 4] = [
        ImageClass::Checkerboard,
        ImageClass::RadialGradient,
        ImageClass::Stripes,
        ImageClass::Disk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImageClass::Checkerboard => "checkerboard",
            ImageClass::RadialGradient => "radial_gradient",
            ImageClass::Stripes => "stripes",
            ImageClass::Disk => "disk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown image class {s:?}")))
    }

    /// A random member of the class, deterministic in `seed`.
    pub fn sample(self, size: usize, seed: u64) -> SignalKind {
        let mut rng = rng_from_seed(seed);
        match self {
            ImageClass::Checkerboard => SignalKind::Checkerboard {
                size,
                cells: rng.random_range(2..=4),
                offset: [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
            },
            ImageClass::RadialGradient => SignalKind::RadialGradient {
                size,
                center: [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)],
                radius: rng.random_range(0.8..1.6),
            },
            ImageClass::Stripes => SignalKind::Stripes {
                size,
                frequency: rng.random_range(0.5..1.25),
                angle: rng.random_range(0.0..PI),
                phase: rng.random_range(0.0..2.0 * PI),
            },
            ImageClass::Disk => SignalKind::Disk {
                size,
                center: [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)],
                radius: rng.random_range(0.3..0.7),
            },
        }
    }
}

fn render_image(size: usize, f: impl Fn(f64, f64) -> f64) -> Result<SignalTask> {
    if size < 2 {
        return Err(Error::arg(format!("image size must be at least 2, got {size}")));
    }
    let half = 1.0 / (size - 1) as f64;
    let step = 2.0 * half / SUPERSAMPLE as f64;
    let grid = image_grid(size, size);
    let values: Vec<f32> = grid
        .iter_rows()
        .map(|p| {
            let (cx, cy) = (p[0] as f64, p[1] as f64);
            let mut acc = 0.0;
            for a in 0..SUPERSAMPLE {
                for b in 0..SUPERSAMPLE {
                    let x = cx - half + (a as f64 + 0.5) * step;
                    let y = cy - half + (b as f64 + 0.5) * step;
                    acc += f(x, y);
                }
            }
            (acc / (SUPERSAMPLE * SUPERSAMPLE) as f64) as f32
        })
        .collect();
    SignalTask::image(size, size, &values)
}

pub fn sphere_sdf(p: [f64; 3], center: [f64; 3], radius: f64) -> f64 {
    let d: f64 = (0..3).map(|i| (p[i] - center[i]).powi(2)).sum::<f64>().sqrt();
    d - radius
}

pub fn box_sdf(p: [f64; 3], half: [f64; 3]) -> f64 {
    let q: Vec<f64> = (0..3).map(|i| p[i].abs() - half[i]).collect();
    let outside = q.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
    let inside = q[0].max(q[1]).max(q[2]).min(0.0);
    outside + inside
}

fn gaussian3(rng: &mut impl Rng) -> [f64; 3] {
    [
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    ]
}

fn sample_sdf(
    sampling: &SdfSampling,
    mut surface: impl FnMut(&mut crate::rng::Rng) -> [f64; 3],
    sdf: impl Fn([f64; 3]) -> f64,
) -> Result<SignalTask> {
    if sampling.n_points == 0 {
        return Err(Error::arg("n_points must be positive"));
    }
    if !(0.0..=1.0).contains(&sampling.near_fraction) || !(sampling.band >= 0.0) {
        return Err(Error::arg("near_fraction must be in [0, 1] and band nonnegative"));
    }
    let mut rng = rng_from_seed(sampling.seed);
    let n_near = (sampling.n_points as f64 * sampling.near_fraction).round() as usize;
    let mut pts = Vec::with_capacity(sampling.n_points * 3);
    let mut vals = Vec::with_capacity(sampling.n_points);
    for i in 0..sampling.n_points {
        let p = if i < n_near {
            let s = surface(&mut rng);
            let g = gaussian3(&mut rng);
            [0, 1, 2].map(|k| s[k] + sampling.band * g[k])
        } else {
            [0, 1, 2].map(|_| rng.random_range(-1.0..=1.0))
        };
        pts.extend(p.iter().map(|&v| v as f32));
        // target computed from the stored f32 coordinates
        let stored = [0, 1, 2].map(|k| pts[3 * i + k] as f64);
        vals.push(sdf(stored) as f32);
    }
    SignalTask::sdf(Matrix::from_vec(sampling.n_points, 3, pts)?, vals)
}

/// Builds the task for a procedural signal. Deterministic in its parameters.
pub fn synth_signal(kind: &SignalKind) -> Result<SignalTask> {
    match *kind {
        SignalKind::Checkerboard { size, cells, offset } => {
            if cells == 0 {
                return Err(Error::arg("checkerboard needs at least one cell"));
            }
            let c = cells as f64;
            // cells tile the pixels' footprint, which extends half a pixel past ±1
            let half = 1.0 / (size.max(2) - 1) as f64;
            let cell = |t: f64, off: f64| ((t + 1.0 + half) / (2.0 + 2.0 * half) * c + off).floor() as i64;
            render_image(size, |x, y| {
                let (u, v) = (cell(x, offset[0]), cell(y, offset[1]));
                if (u + v).rem_euclid(2) == 0 {
                    HIGH
                } else {
                    LOW
                }
            })
        }
        SignalKind::RadialGradient { size, center, radius } => {
            if !(radius > 0.0) {
                return Err(Error::arg("radius must be positive"));
            }
            render_image(size, |x, y| {
                let r = ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt() / radius;
                LOW + (HIGH - LOW) * 0.5 * (1.0 + (PI * r.min(1.0)).cos())
            })
        }
        SignalKind::Stripes { size, frequency, angle, phase } => {
            if !(frequency > 0.0) {
                return Err(Error::arg("frequency must be positive"));
            }
            let (s, c) = angle.sin_cos();
            render_image(size, |x, y| {
                let t = 2.0 * PI * frequency * (x * c + y * s) + phase;
                0.5 * (LOW + HIGH) + 0.5 * (HIGH - LOW) * t.sin()
            })
        }
        SignalKind::Disk { size, center, radius } => {
            if !(radius > 0.0) {
                return Err(Error::arg("radius must be positive"));
            }
            render_image(size, |x, y| {
                if (x - center[0]).powi(2) + (y - center[1]).powi(2) <= radius * radius {
                    HIGH
                } else {
                    LOW
                }
            })
        }
        SignalKind::SphereSdf { radius, center, sampling } => {
            if !(radius > 0.0) {
                return Err(Error::arg("radius must be positive"));
            }
            sample_sdf(
                &sampling,
                |rng| {
                    let g = gaussian3(rng);
                    let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt().max(1e-12);
                    [0, 1, 2].map(|k| center[k] + radius * g[k] / n)
                },
                |p| sphere_sdf(p, center, radius),
            )
        }
        SignalKind::BoxSdf { half_extents: h, sampling } => {
            if h.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::arg("box half extents must be positive"));
            }
            // face pairs weighted by area
            let areas = [h[1] * h[2], h[0] * h[2], h[0] * h[1]];
            let total: f64 = areas.iter().sum();
            sample_sdf(
                &sampling,
                |rng| {
                    let pick = rng.random_range(0.0..total);
                    let axis = if pick < areas[0] {
                        0
                    } else if pick < areas[0] + areas[1] {
                        1
                    } else {
                        2
                    };
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    [0, 1, 2].map(|k| {
                        if k == axis {
                            sign * h[k]
                        } else {
                            rng.random_range(-h[k]..=h[k])
                        }
                    })
                },
                |p| box_sdf(p, h),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampling() -> SdfSampling {
        SdfSampling {
            n_points: 512,
            ..SdfSampling::default()
        }
    }

    #[test]
    fn analytic_sdfs() {
        assert_eq!(sphere_sdf([0.5, 0.0, 0.0], [0.0; 3], 0.5), 0.0);
        assert_eq!(sphere_sdf([0.0; 3], [0.0; 3], 0.5), -0.5);
        assert_eq!(box_sdf([0.0; 3], [0.5, 0.25, 1.0]), -0.25);
        assert!((box_sdf([1.0, 1.0, 0.0], [0.5, 0.5, 0.5]) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sdf_tasks_carry_analytic_targets() {
        let task = synth_signal(&SignalKind::SphereSdf {
            radius: 0.5,
            center: [0.0; 3],
            sampling: sampling(),
        })
        .unwrap();
        assert_eq!(task.len(), 512);
        for (p, &t) in task.inputs().iter_rows().zip(task.targets().data()) {
            let want = sphere_sdf([p[0] as f64, p[1] as f64, p[2] as f64], [0.0; 3], 0.5);
            assert!((t as f64 - want).abs() < 1e-6);
        }
        // near-surface half lies in the band
        let near = task.targets().data()[..256].iter().filter(|t| t.abs() < 0.2).count();
        assert!(near > 250);
        let boxed = synth_signal(&SignalKind::BoxSdf {
            half_extents: [0.5, 0.3, 0.4],
            sampling: sampling(),
        })
        .unwrap();
        assert_eq!(boxed.len(), 512);
    }

    #[test]
    fn checkerboard_grid() {
        let task = synth_signal(&SignalKind::Checkerboard {
            size: 32,
            cells: 4,
            offset: [0.0, 0.0],
        })
        .unwrap();
        assert_eq!(task.len(), 1024);
        assert_eq!(task.inputs().row(0), &[-1.0, -1.0]);
        assert_eq!(task.inputs().row(1023), &[1.0, 1.0]);
        assert_eq!(task.kind(), TaskKind::Image2d { height: 32, width: 32 });
        let t = task.targets().data();
        assert!(t.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(t[0], HIGH as f32);
        assert_eq!(t[7], HIGH as f32);
        assert_eq!(t[8], LOW as f32);
        assert_eq!(t[31], LOW as f32);
        assert_eq!(t[8 * 32], LOW as f32);
    }

    #[test]
    fn synthesis_is_deterministic() {
        for class in ImageClass::ALL {
            let a = synth_signal(&class.sample(16, 3)).unwrap();
            let b = synth_signal(&class.sample(16, 3)).unwrap();
            assert_eq!(a, b);
        }
        assert!(synth_signal(&SignalKind::Disk { size: 1, center: [0.0; 2], radius: 0.5 }).is_err());
    }

    #[test]
    fn sdf_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        let task = synth_signal(&SignalKind::SphereSdf {
            radius: 1.0,
            center: [0.0; 3],
            sampling: sampling(),
        })
        .unwrap();
        task.write_sdf_csv(&path).unwrap();
        assert_eq!(SignalTask::read_sdf_csv(&path).unwrap(), task);
    }

    #[test]
    fn loss_is_mean_squared_error() {
        let task = SignalTask::image(2, 2, &[0.0, 0.5, 1.0, 0.25]).unwrap();
        let spec = crate::NetworkSpec::siren(vec![2, 3, 1]).unwrap();
        let zero = WeightSpaceElement::zeros(&spec);
        let want = (0.0 + 0.25 + 1.0 + 0.0625) / 4.0;
        assert!((task.loss(&zero).unwrap() - want).abs() < 1e-12);
    }
}
