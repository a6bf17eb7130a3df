//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;

use rand::Rng;
use wsaug::fit::SignalTask;
use wsaug::rng::rng_from_seed;
use wsaug::{ActivationKind, NetworkSpec, WeightSpaceElement};

/// A network held entirely in f64, evaluated with plain nested loops.
#[derive(Clone, Debug)]
pub struct ShadowNet {
    pub dims: Vec<usize>,
    pub acts: Vec<ActivationKind>,
    /// Flat parameters in canonical order: per layer, weight row-major then bias.
    pub params: Vec<f64>,
}

impl ShadowNet {
    pub fn from_element(e: &WeightSpaceElement) -> Self {
        Self {
            dims: e.spec().dims().to_vec(),
            acts: e.spec().activations().to_vec(),
            params: e.flatten().iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let mut off = 0;
        for l in 0..self.acts.len() {
            let (d_in, d_out) = (self.dims[l], self.dims[l + 1]);
            let w = &self.params[off..off + d_in * d_out];
            let b = &self.params[off + d_in * d_out..off + d_in * d_out + d_out];
            off += d_in * d_out + d_out;
            let mut next = vec![0.0; d_out];
            for i in 0..d_out {
                let mut z = b[i];
                for k in 0..d_in {
                    z += w[i * d_in + k] * a[k];
                }
                next[i] = match self.acts[l] {
                    ActivationKind::Sine => z.sin(),
                    ActivationKind::Relu => z.max(0.0),
                    ActivationKind::Identity => z,
                };
            }
            a = next;
        }
        a
    }

    /// Mean over samples and outputs of the squared error.
    pub fn mse(&self, task: &SignalTask) -> f64 {
        let (x, t) = (task.inputs(), task.targets());
        let mut sum = 0.0;
        for n in 0..task.len() {
            let xin: Vec<f64> = x.row(n).iter().map(|&v| v as f64).collect();
            let out = self.eval(&xin);
            for (o, &y) in out.iter().zip(t.row(n)) {
                sum += (o - y as f64).powi(2);
            }
        }
        sum / (task.len() * t.cols()) as f64
    }

    /// Central differences of [`mse`](Self::mse) with step `h`.
    pub fn numeric_gradient(&self, task: &SignalTask, h: f64) -> Vec<f64> {
        let mut probe = self.clone();
        (0..self.params.len())
            .map(|i| {
                let base = self.params[i];
                probe.params[i] = base + h;
                let up = probe.mse(task);
                probe.params[i] = base - h;
                let down = probe.mse(task);
                probe.params[i] = base;
                (up - down) / (2.0 * h)
            })
            .collect()
    }
}

/// Best total score over all permutations, by enumeration.
pub fn brute_force_lap(score: &[Vec<f64>]) -> f64 {
    fn go(score: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == score.len() {
            *best = best.max(acc);
            return;
        }
        for j in 0..score.len() {
            if !used[j] {
                used[j] = true;
                go(score, row + 1, used, acc + score[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    go(score, 0, &mut vec![false; score.len()], 0.0, &mut best);
    best
}

pub fn random_matrix(n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// `n` points uniform in `[-1, 1]^d`.
pub fn domain_points(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// Largest output difference between two elements over `points`.
pub fn max_output_gap(a: &WeightSpaceElement, b: &WeightSpaceElement, points: &[Vec<f64>]) -> f64 {
    let (fa, fb) = (a.evaluator(), b.evaluator());
    points
        .iter()
        .flat_map(|x| {
            fa.eval(x)
                .into_iter()
                .zip(fb.eval(x))
                .map(|(p, q)| (p - q).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

pub fn small_spec(rng: &mut impl Rng, act: ActivationKind) -> NetworkSpec {
    let depth = rng.random_range(1..=3);
    let mut dims = vec![rng.random_range(1..=3)];
    for _ in 0..depth {
        dims.push(rng.random_range(2..=6));
    }
    dims.push(rng.random_range(1..=2));
    NetworkSpec::uniform(dims, act).unwrap()
}

/// Writes a line straight to the process stdout, bypassing test capture.
pub fn report_line(pass: bool, name: &str, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "\n[{tag}] {name}: {detail}");
    let _ = out.flush();
}
