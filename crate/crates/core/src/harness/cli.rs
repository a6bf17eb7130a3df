use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::alignmix::{loss_barrier, mixup, weight_matching, AlignMode, MatchingConfig, MixupMode};
use crate::augment::AugmentationPipeline;
use crate::error::{Error, Result};
use crate::fit::{fit_inr, synth_signal, FitConfig, ImageClass, OptimizerConfig, SdfSampling, SignalKind, SignalTask};
use crate::pgm::GrayImage;
use crate::rng::rng_from_seed;
use crate::symmetry::apply_permutation;
use crate::wscore::io::write_atomic;
use crate::wscore::{read_wse, write_wse, ActivationKind, NetworkSpec, WeightSpaceElement};

use super::dataset::{gen_dataset, thread_pool, DatasetConfig, DatasetManifest};
use super::render::render_inr;
use super::verify::{default_tolerance, verify_preservation, VerificationReport, VerifyKind};

#[derive(Parser, Debug)]
#[command(name = "wsaug", version, about = "Weight-space augmentation toolkit for INRs", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit an INR to a signal and write it as a .wse file.
    Fit(FitArgs),
    /// Fit several views of procedural image signals and write a manifest.
    GenDataset(GenArgs),
    /// Apply an augmentation pipeline to a .wse file.
    Augment(AugmentArgs),
    /// Align the second element to the first by weight matching.
    Align(AlignArgs),
    /// Mix two elements (and optionally their labels).
    Mixup(MixupArgs),
    /// Task loss along the linear path between two elements.
    Barrier(BarrierArgs),
    /// Check function preservation of symmetry and input-space transforms.
    Verify(VerifyArgs),
    /// Render a 2-D INR as a binary PGM.
    Render(RenderArgs),
}

/// Where the target signal comes from. Exactly one source is required.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct SignalSource {
    /// Procedural image class (checkerboard, radial_gradient, stripes, disk).
    #[arg(long)]
    class: Option<String>,
    /// Signal description as JSON, e.g. {"kind":"disk","size":32,"center":[0,0],"radius":0.5}.
    #[arg(long)]
    signal_json: Option<String>,
    /// Grayscale PGM image.
    #[arg(long)]
    image: Option<PathBuf>,
    /// SDF samples as CSV with header x,y,z,sdf.
    #[arg(long)]
    sdf_csv: Option<PathBuf>,
    /// Unit-sphere SDF sampled in [-1, 1]^3.
    #[arg(long)]
    sphere: bool,
}

#[derive(Args, Debug)]
struct SignalArgs {
    #[command(flatten)]
    source: SignalSource,
    /// Image side length for procedural classes.
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// Seed of the procedural signal parameters (class and sphere sources).
    #[arg(long, default_value_t = 0)]
    signal_seed: u64,
}

impl SignalArgs {
    fn task(&self) -> Result<SignalTask> {
        let s = &self.source;
        if let Some(class) = &s.class {
            synth_signal(&ImageClass::parse(class)?.sample(self.size, self.signal_seed))
        } else if let Some(json) = &s.signal_json {
            let kind: SignalKind = serde_json::from_str(json).map_err(|e| Error::arg(format!("--signal-json: {e}")))?;
            synth_signal(&kind)
        } else if let Some(path) = &s.image {
            SignalTask::from_gray_image(&GrayImage::read(path)?)
        } else if let Some(path) = &s.sdf_csv {
            SignalTask::read_sdf_csv(path)
        } else {
            synth_signal(&SignalKind::SphereSdf {
                radius: 1.0,
                center: [0.0; 3],
                sampling: SdfSampling {
                    seed: self.signal_seed,
                    ..SdfSampling::default()
                },
            })
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Activation {
    Sine,
    Relu,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Optimizer {
    Adam,
    Adamw,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    signal: SignalArgs,
    /// Layer widths, comma separated (default 2,32,32,1 for images, 3,32,32,32,32,1 for SDFs).
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = Activation::Sine)]
    activation: Activation,
    #[arg(long, value_enum)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Stop once the reconstruction reaches this PSNR in dB (images only).
    #[arg(long)]
    early_stop_psnr: Option<f64>,
    /// Disable early stopping.
    #[arg(long, conflicts_with = "early_stop_psnr")]
    no_early_stop: bool,
    #[arg(long)]
    omega0: Option<f32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated image classes (default: all four).
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    #[arg(long, default_value_t = 25)]
    signals_per_class: usize,
    #[arg(long, default_value_t = 2)]
    views: usize,
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// JSON list of {"kind", "p", "params"} steps.
    #[arg(long)]
    pipeline: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    sample_id: u64,
    #[arg(long, default_value_t = 0)]
    epoch: u64,
}

#[derive(Args, Debug)]
struct AlignArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 100)]
    max_passes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the aligned copy of the second element.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Naive,
    Randperm,
    Aligned,
}

#[derive(Args, Debug)]
struct MixupArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Mixing weight of the first element; drawn from U(0, 1) when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Probability vector of the first element, comma separated.
    #[arg(long, value_delimiter = ',', requires = "label_b")]
    label_a: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires = "label_a")]
    label_b: Option<Vec<f64>>,
    /// Write {"lambda", "label"} here (requires labels).
    #[arg(long, requires = "label_a")]
    labels_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Align {
    None,
    Random,
    Matched,
}

#[derive(Args, Debug)]
struct BarrierArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long, default_value_t = 11)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = Align::None)]
    align: Align,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV of (lambda, loss).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["input", "manifest"]))]
struct VerifyArgs {
    /// A transform name, "identity", or "all".
    #[arg(long)]
    kind: String,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Verify every entry of a dataset manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    points: usize,
    /// Absolute tolerance (default 1e-4 for sine networks, 1e-5 otherwise).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on usage or validation errors, 2 on numeric failures.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() || e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                1
            } else {
                0
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                2
            } else {
                1
            }
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Fit(a) => cmd_fit(a),
        Command::GenDataset(a) => cmd_gen(a),
        Command::Augment(a) => {
            let elem = read_wse(&a.input)?;
            let bytes = std::fs::read(&a.pipeline).map_err(|e| Error::io(&a.pipeline, e))?;
            let pipeline = AugmentationPipeline::from_json(&bytes)?;
            let (out, trace) = pipeline.apply_traced(&elem, a.sample_id, a.epoch, a.seed)?;
            write_wse(&a.out, &out)?;
            let fired: Vec<_> = trace.iter().map(|s| s.kind).collect();
            print_json(&serde_json::json!({ "applied": fired }))?;
            Ok(0)
        }
        Command::Align(a) => {
            let (x1, x2) = (read_wse(&a.a)?, read_wse(&a.b)?);
            let cfg = MatchingConfig {
                max_passes: a.max_passes,
                seed: a.seed,
            };
            let r = weight_matching(&x1, &x2, &cfg)?;
            if let Some(out) = &a.out {
                write_wse(out, &apply_permutation(&x2, &r.perms)?)?;
            }
            print_json(&r)?;
            Ok(0)
        }
        Command::Mixup(a) => {
            let (x1, x2) = (read_wse(&a.a)?, read_wse(&a.b)?);
            let lambda = a
                .lambda
                .unwrap_or_else(|| crate::alignmix::sample_lambda(&mut rng_from_seed(a.seed)));
            let mode = match a.mode {
                Mode::Naive => MixupMode::Naive,
                Mode::Randperm => MixupMode::Randperm,
                Mode::Aligned => MixupMode::Aligned,
            };
            let labels = a.label_a.as_deref().zip(a.label_b.as_deref());
            let s = mixup(&x1, &x2, labels, lambda, mode, a.seed)?;
            write_wse(&a.out, &s.element)?;
            let summary = serde_json::json!({ "lambda": s.lambda, "label": s.label });
            if let Some(path) = &a.labels_out {
                write_atomic(path, &serde_json::to_vec(&summary)?)?;
            }
            print_json(&summary)?;
            Ok(0)
        }
        Command::Barrier(a) => {
            let (x1, x2) = (read_wse(&a.a)?, read_wse(&a.b)?);
            let task = a.signal.task()?;
            let align = match a.align {
                Align::None => AlignMode::None,
                Align::Random => AlignMode::Random { seed: a.seed },
                Align::Matched => AlignMode::Matched(MatchingConfig {
                    seed: a.seed,
                    ..MatchingConfig::default()
                }),
            };
            let p = loss_barrier(&x1, &x2, &task, a.grid, &align)?;
            write_atomic(&a.out, p.to_csv().as_bytes())?;
            print_json(&serde_json::json!({ "barrier": p.barrier }))?;
            Ok(0)
        }
        Command::Verify(a) => cmd_verify(a),
        Command::Render(a) => {
            let elem = read_wse(&a.input)?;
            render_inr(&elem, a.height, a.width)?.write(&a.out)?;
            Ok(0)
        }
    }
}

fn cmd_fit(a: FitArgs) -> Result<i32> {
    let task = a.signal.task()?;
    let mut cfg = if task.is_image() {
        FitConfig::image_default()
    } else {
        FitConfig::sdf_default()
    };
    let dims = a.dims.clone().unwrap_or_else(|| {
        if task.is_image() {
            vec![2, 32, 32, 1]
        } else {
            vec![3, 32, 32, 32, 32, 1]
        }
    });
    let hidden = match a.activation {
        Activation::Sine => ActivationKind::Sine,
        Activation::Relu => ActivationKind::Relu,
    };
    let spec = NetworkSpec::uniform(dims, hidden)?;
    if let Some(o) = a.optimizer {
        let (lr, steps, stop) = (cfg.optimizer.learning_rate, cfg.optimizer.steps, cfg.optimizer.early_stop_psnr);
        cfg.optimizer = match o {
            Optimizer::Adam => OptimizerConfig::adam(lr, steps),
            Optimizer::Adamw => OptimizerConfig::adamw(lr, steps),
        };
        cfg.optimizer.early_stop_psnr = stop;
    }
    if let Some(lr) = a.lr {
        cfg.optimizer.learning_rate = lr;
    }
    if let Some(steps) = a.steps {
        cfg.optimizer.steps = steps;
    }
    if let Some(p) = a.early_stop_psnr {
        cfg.optimizer.early_stop_psnr = Some(p);
    }
    if a.no_early_stop {
        cfg.optimizer.early_stop_psnr = None;
    }
    if let Some(w) = a.omega0 {
        cfg.omega0 = w;
    }
    let (elem, report) = fit_inr(&spec, &task, &cfg, a.seed)?;
    write_wse(&a.out, &elem)?;
    print_json(&report)?;
    Ok(0)
}

fn cmd_gen(a: GenArgs) -> Result<i32> {
    let mut cfg = DatasetConfig::images(a.signals_per_class, a.views, a.seed);
    cfg.image_size = a.size;
    if let Some(classes) = &a.classes {
        cfg.classes = classes.iter().map(|c| ImageClass::parse(c)).collect::<Result<_>>()?;
    }
    if let Some(steps) = a.steps {
        cfg.fit.optimizer.steps = steps;
    }
    let m = gen_dataset(&cfg, &a.out)?;
    print_json(&serde_json::json!({
        "entries": m.entries.len(),
        "failures": m.failures.len(),
        "manifest": a.out.join("manifest.json"),
    }))?;
    Ok(if m.failures.is_empty() { 0 } else { 2 })
}

fn verify_one(elem: &WeightSpaceElement, kind: &str, a: &VerifyArgs) -> Result<Vec<VerificationReport>> {
    let kinds = if kind == "all" {
        VerifyKind::all_for(elem)
    } else {
        vec![VerifyKind::parse(kind)?]
    };
    let tol = a.tol.unwrap_or_else(|| default_tolerance(elem));
    kinds
        .iter()
        .map(|k| verify_preservation(elem, k, a.points, tol, a.seed))
        .collect()
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    if a.kind != "all" {
        VerifyKind::parse(&a.kind)?;
    }
    let reports: Vec<(Option<String>, VerificationReport)> = if let Some(path) = &a.input {
        verify_one(&read_wse(path)?, &a.kind, &a)?
            .into_iter()
            .map(|r| (None, r))
            .collect()
    } else {
        let path = a.manifest.as_ref().expect("clap enforces a target");
        let m = DatasetManifest::read(path)?;
        let root = path.parent().unwrap_or(Path::new("."));
        let per_entry: Vec<Result<Vec<_>>> = thread_pool()?.install(|| {
            m.entries
                .par_iter()
                .map(|e| {
                    let elem = read_wse(root.join(&e.wse_path))?;
                    Ok(verify_one(&elem, &a.kind, &a)?
                        .into_iter()
                        .map(|r| (Some(e.wse_path.clone()), r))
                        .collect())
                })
                .collect()
        });
        per_entry.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect()
    };
    let mut all_pass = true;
    for (file, r) in &reports {
        all_pass &= r.pass;
        match file {
            Some(f) => print_json(&serde_json::json!({ "file": f, "report": r }))?,
            None => print_json(r)?,
        }
    }
    Ok(if all_pass { 0 } else { 2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_cli(["wsaug"]), 1);
        assert_eq!(run_cli(["wsaug", "frobnicate"]), 1);
        assert_eq!(run_cli(["wsaug", "render", "--bogus"]), 1);
        assert_eq!(run_cli(["wsaug", "--help"]), 0);
        assert_eq!(run_cli(["wsaug", "verify", "--help"]), 0);
    }

    #[test]
    fn missing_input_is_validation_error() {
        let code = run_cli(["wsaug", "render", "--in", "/nonexistent/a.wse", "--out", "/tmp/x.pgm"]);
        assert_eq!(code, 1);
    }
}
