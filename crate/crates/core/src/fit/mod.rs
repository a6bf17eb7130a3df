//! Fitting INRs to signals: gradients, Adam/AdamW, views, PSNR, and the
//! procedural signals used as a desk-scale corpus.

mod grad;
mod optim;
mod signal;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wscore::{init_for_spec, ActivationKind, NetworkSpec, WeightSpaceElement, DEFAULT_OMEGA0};

pub use grad::{gradient, loss_with_gradient, Gradient};
pub use optim::{Adam, OptimizerConfig, OptimizerKind};
pub use signal::{
    box_sdf, image_grid, sphere_sdf, synth_signal, ImageClass, LossKind, SdfSampling, SignalKind,
    SignalTask, TaskKind,
};

/// Frequency factor for 32×32 image fits. At 30 a few checkerboards stall
/// just under 40 dB within 1000 steps.
pub const IMAGE_OMEGA0: f32 = 45.0;

/// Frequency factor for SDF fits. Smooth distance fields generalize poorly
/// between sample points at image-scale frequencies.
pub const SDF_OMEGA0: f32 = 8.0;

/// Optimizer settings plus the SIREN frequency factor used at initialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub optimizer: OptimizerConfig,
    pub omega0: f32,
}

impl FitConfig {
    pub fn new(optimizer: OptimizerConfig) -> Self {
        Self {
            optimizer,
            omega0: DEFAULT_OMEGA0,
        }
    }

    /// Image INR setting: Adam, lr 5e-4, at most 1000 steps, stop at 40 dB.
    pub fn image_default() -> Self {
        Self {
            omega0: IMAGE_OMEGA0,
            ..Self::new(OptimizerConfig::adam(5e-4, 1000).with_early_stop(40.0))
        }
    }

    /// SDF INR setting: AdamW, lr 1e-4, 1000 steps.
    pub fn sdf_default() -> Self {
        Self {
            omega0: SDF_OMEGA0,
            ..Self::new(OptimizerConfig::adamw(1e-4, 1000))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Only for image tasks.
    pub final_psnr: Option<f64>,
    pub steps_used: usize,
    pub stopped_early: bool,
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// Peak signal-to-noise ratio in dB for values in `[0, 1]`; identical
/// inputs give `+inf`.
pub fn psnr(reconstruction: &[f64], target: &[f64]) -> Result<f64> {
    if reconstruction.len() != target.len() || target.is_empty() {
        return Err(Error::dim(format!(
            "psnr over {} and {} values",
            reconstruction.len(),
            target.len()
        )));
    }
    let mse = reconstruction
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / target.len() as f64;
    Ok(psnr_from_mse(mse))
}

/// Initializes from `seed` and runs `steps` optimizer updates, stopping
/// early once an image reconstruction reaches `early_stop_psnr`.
pub fn fit_inr(
    spec: &NetworkSpec,
    task: &SignalTask,
    cfg: &FitConfig,
    seed: u64,
) -> Result<(WeightSpaceElement, FitReport)> {
    let init = init_for_spec(spec, cfg.omega0, seed)?;
    fit_from(init, task, &cfg.optimizer)
}

/// Per-parameter factors mapping the optimizer's coordinates to stored
/// weights. Sine layers store `ω0·W` and `ω0·b`, so their factor is `ω0`;
/// optimizing in the unfolded coordinates keeps learning rates comparable
/// with the usual `sin(ω0 (W x + b))` parametrization.
pub fn parameter_scales(elem: &WeightSpaceElement) -> Vec<f64> {
    let spec = elem.spec();
    let w0 = elem.omega0().map_or(1.0, f64::from);
    let mut out = Vec::with_capacity(elem.num_params());
    for (l, act) in spec.activations().iter().enumerate() {
        let s = if *act == ActivationKind::Sine { w0 } else { 1.0 };
        let (r, c) = spec.weight_shape(l);
        out.extend(std::iter::repeat_n(s, r * c + r));
    }
    out
}

/// Optimizes an existing element.
pub fn fit_from(
    init: WeightSpaceElement,
    task: &SignalTask,
    opt: &OptimizerConfig,
) -> Result<(WeightSpaceElement, FitReport)> {
    opt.validate()?;
    if opt.early_stop_psnr.is_some() && !task.is_image() {
        return Err(Error::Config("early stopping on PSNR needs an image task".into()));
    }
    let spec = init.spec().clone();
    let omega0 = init.omega0();
    if task.inputs().cols() != spec.input_dim() || task.targets().cols() != spec.output_dim() {
        return Err(Error::dim("task and network dimensions differ"));
    }
    let mut params = init.flatten();
    let mut grad = vec![0.0; params.len()];
    let mut ws = grad::Workspace::new(&spec);
    let mut adam = Adam::with_scales(opt, parameter_scales(&init));
    let mut initial_loss = f64::NAN;
    let diverged = |step: usize, e: Error| Error::Fit {
        step,
        message: e.to_string(),
    };

    for step in 0..opt.steps {
        let elem = WeightSpaceElement::unflatten(&spec, &params).map_err(|e| diverged(step, e))?;
        let loss = grad::loss_and_gradient(&elem.evaluator(), task, &mut grad, &mut ws)
            .map_err(|e| diverged(step, e))?;
        if step == 0 {
            initial_loss = loss;
        }
        if let Some(target) = opt.early_stop_psnr {
            let p = psnr_from_mse(loss);
            if p >= target {
                let report = FitReport {
                    initial_loss,
                    final_loss: loss,
                    final_psnr: Some(p),
                    steps_used: step,
                    stopped_early: true,
                };
                return Ok((elem.with_omega0(omega0), report));
            }
        }
        adam.step(&mut params, &grad);
    }

    let elem = WeightSpaceElement::unflatten(&spec, &params)
        .map_err(|e| diverged(opt.steps, e))?
        .with_omega0(omega0);
    let final_loss = task.loss(&elem)?;
    if !final_loss.is_finite() {
        return Err(diverged(opt.steps, Error::arg("non-finite loss")));
    }
    let report = FitReport {
        initial_loss,
        final_loss,
        final_psnr: task.is_image().then(|| psnr_from_mse(final_loss)),
        steps_used: opt.steps,
        stopped_early: false,
    };
    Ok((elem, report))
}

/// `k` independent fits of the same signal with seeds
/// `base_seed, ..., base_seed + k - 1`, run in parallel.
pub fn make_views(
    spec: &NetworkSpec,
    task: &SignalTask,
    cfg: &FitConfig,
    k: usize,
    base_seed: u64,
) -> Result<Vec<(WeightSpaceElement, FitReport)>> {
    if k == 0 {
        return Err(Error::arg("need at least one view"));
    }
    (0..k)
        .into_par_iter()
        .map(|i| {
            fit_inr(spec, task, cfg, base_seed.wrapping_add(i as u64)).map_err(|e| Error::View {
                index: i,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_formula() {
        assert!((psnr_from_mse(0.01) - 20.0).abs() < 1e-12);
        assert!((psnr_from_mse(1e-4) - 40.0).abs() < 1e-12);
        assert_eq!(psnr(&[0.2, 0.4], &[0.2, 0.4]).unwrap(), f64::INFINITY);
        for (eps, want) in [(1e-2, 40.0), (1e-3, 60.0), (1e-4, 80.0)] {
            let g = [0.1, 0.5, 0.7];
            let r: Vec<f64> = g.iter().map(|v| v + eps).collect();
            assert!((psnr(&r, &g).unwrap() - want).abs() < 1e-6);
        }
        assert!(psnr(&[0.0], &[0.0, 1.0]).is_err());
    }

    fn tiny_task() -> SignalTask {
        synth_signal(&SignalKind::Disk {
            size: 8,
            center: [0.0, 0.0],
            radius: 0.5,
        })
        .unwrap()
    }

    #[test]
    fn one_step_is_one_adam_update() {
        let spec = NetworkSpec::siren(vec![2, 8, 1]).unwrap();
        let task = tiny_task();
        let cfg = FitConfig::new(OptimizerConfig::adam(1e-3, 1));
        let (fitted, report) = fit_inr(&spec, &task, &cfg, 4).unwrap();
        assert_eq!(report.steps_used, 1);
        assert!(!report.stopped_early);

        let init = init_for_spec(&spec, cfg.omega0, 4).unwrap();
        let g = gradient(&init, &task).unwrap();
        let mut params = init.flatten();
        Adam::with_scales(&cfg.optimizer, parameter_scales(&init)).step(&mut params, g.flat());
        assert_eq!(fitted.flatten(), params);
    }

    #[test]
    fn zero_steps_rejected() {
        let spec = NetworkSpec::siren(vec![2, 8, 1]).unwrap();
        let cfg = FitConfig::new(OptimizerConfig::adam(1e-3, 0));
        assert!(matches!(
            fit_inr(&spec, &tiny_task(), &cfg, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn early_stop_at_trivial_threshold() {
        let spec = NetworkSpec::siren(vec![2, 8, 1]).unwrap();
        let cfg = FitConfig::new(OptimizerConfig::adam(1e-3, 50).with_early_stop(-100.0));
        let (_, report) = fit_inr(&spec, &tiny_task(), &cfg, 0).unwrap();
        assert!(report.stopped_early);
        assert_eq!(report.steps_used, 0);
        assert_eq!(report.final_loss, report.initial_loss);
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let spec = NetworkSpec::relu(vec![2, 8, 1]).unwrap();
        let task = tiny_task();
        let cfg = FitConfig::new(OptimizerConfig::adam(1e38, 5));
        let err = fit_inr(&spec, &task, &cfg, 0).unwrap_err();
        assert!(matches!(err, Error::Fit { .. }), "{err:?}");
        assert!(err.is_numeric());
    }

    #[test]
    fn views_match_individual_fits() {
        let spec = NetworkSpec::siren(vec![2, 8, 1]).unwrap();
        let task = tiny_task();
        let cfg = FitConfig::new(OptimizerConfig::adam(1e-3, 20));
        let views = make_views(&spec, &task, &cfg, 3, 10).unwrap();
        assert_eq!(views.len(), 3);
        let single = fit_inr(&spec, &task, &cfg, 10).unwrap();
        assert_eq!(views[0], single);
        assert_ne!(views[1].0, views[2].0);
        assert!(make_views(&spec, &task, &cfg, 0, 0).is_err());
    }
}
