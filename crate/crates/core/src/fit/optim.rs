use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    /// Adam with decoupled weight decay.
    Adamw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    /// Only used by AdamW.
    pub weight_decay: f64,
    pub steps: usize,
    /// Stop as soon as the reconstruction PSNR reaches this value (image tasks).
    pub early_stop_psnr: Option<f64>,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64, steps: usize) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate,
            betas: (0.9, 0.999),
            eps: 1e-8,
            weight_decay: 0.0,
            steps,
            early_stop_psnr: None,
        }
    }

    pub fn adamw(learning_rate: f64, steps: usize) -> Self {
        Self {
            kind: OptimizerKind::Adamw,
            weight_decay: 0.01,
            ..Self::adam(learning_rate, steps)
        }
    }

    pub fn with_early_stop(mut self, psnr: f64) -> Self {
        self.early_stop_psnr = Some(psnr);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        let (b1, b2) = self.betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad(format!("betas must lie in [0, 1), got ({b1}, {b2})"));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!("weight decay must be nonnegative, got {}", self.weight_decay));
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if self.early_stop_psnr.is_some_and(|p| !p.is_finite()) {
            return bad("early-stop PSNR must be finite".into());
        }
        Ok(())
    }
}

/// Adam / AdamW state over a flat `f32` parameter vector. Moments are `f64`.
///
/// With per-parameter scales `s`, the iterates equal those of plain Adam run
/// on `u = θ / s`.
pub struct Adam {
    cfg: OptimizerConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    scales: Option<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: &OptimizerConfig, n_params: usize) -> Self {
        Self {
            cfg: cfg.clone(),
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            scales: None,
            t: 0,
        }
    }

    pub fn with_scales(cfg: &OptimizerConfig, scales: Vec<f64>) -> Self {
        Self {
            scales: Some(scales),
            ..Self::new(cfg, 0)
        }
        .resized()
    }

    fn resized(mut self) -> Self {
        let n = self.scales.as_ref().map_or(0, Vec::len);
        self.m = vec![0.0; n];
        self.v = vec![0.0; n];
        self
    }

    pub fn step(&mut self, params: &mut [f32], grad: &[f64]) {
        self.t += 1;
        let (b1, b2) = self.cfg.betas;
        let lr = self.cfg.learning_rate;
        let bc1 = 1.0 - b1.powi(self.t);
        let bc2 = 1.0 - b2.powi(self.t);
        let decay = match self.cfg.kind {
            OptimizerKind::Adam => 0.0,
            OptimizerKind::Adamw => lr * self.cfg.weight_decay,
        };
        let eps = self.cfg.eps;
        for (i, (((p, &g), m), v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
            .enumerate()
        {
            let s = self.scales.as_ref().map_or(1.0, |s| s[i]);
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            let mut x = *p as f64;
            x -= decay * x;
            x -= s * lr * m_hat / (v_hat.sqrt() + eps / s);
            *p = x as f32;
        }
    }
}
