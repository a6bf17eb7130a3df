use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_inr, synth_signal, FitConfig, FitReport, ImageClass};
use crate::rng::derive_seed;
use crate::wscore::io::write_atomic;
use crate::wscore::{read_wse, serialize, NetworkSpec};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "WSAUG_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub classes: Vec<ImageClass>,
    pub signals_per_class: usize,
    pub views: usize,
    pub image_size: usize,
    pub spec: NetworkSpec,
    pub fit: FitConfig,
    pub base_seed: u64,
}

impl DatasetConfig {
    /// All four image classes, 32×32, a 2→32→32→1 SIREN and the image fit
    /// defaults.
    pub fn images(signals_per_class: usize, views: usize, base_seed: u64) -> Self {
        Self {
            classes: ImageClass::ALL.to_vec(),
            signals_per_class,
            views,
            image_size: 32,
            spec: NetworkSpec::siren(vec![2, 32, 32, 1]).expect("valid spec"),
            fit: FitConfig::image_default(),
            base_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.views == 0 || self.signals_per_class == 0 || self.classes.is_empty() {
            return Err(Error::Config("need at least one class, signal and view".into()));
        }
        if self.spec.input_dim() != 2 || self.spec.output_dim() != 1 {
            return Err(Error::Config("image datasets need a 2 -> 1 network".into()));
        }
        self.fit.optimizer.validate()
    }

    /// Seed of the procedural parameters of signal `signal_id` in `class`.
    pub fn signal_seed(&self, class: usize, signal_id: usize) -> u64 {
        derive_seed(&[self.base_seed, class as u64, signal_id as u64])
    }

    /// Views of one signal use consecutive seeds from this base.
    pub fn view_base_seed(&self, class: usize, signal_id: usize) -> u64 {
        derive_seed(&[self.base_seed, class as u64, signal_id as u64, 1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub wse_path: String,
    pub label: usize,
    pub class_name: String,
    pub signal_id: usize,
    pub view_index: usize,
    pub seed: u64,
    pub fit_report: FitReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFailure {
    pub class_name: String,
    pub signal_id: usize,
    pub view_index: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub class_names: Vec<String>,
    pub config: DatasetConfig,
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<ManifestFailure>,
}

impl DatasetManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// A worker pool honouring `WSAUG_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("worker pool: {e}")))
}

struct Job {
    class: usize,
    signal_id: usize,
    view: usize,
}

fn entry_paths(out_dir: &Path, class: ImageClass, signal_id: usize, view: usize) -> (String, PathBuf, PathBuf) {
    let rel = format!("{}/s{signal_id:03}_v{view:02}.wse", class.name());
    let wse = out_dir.join(&rel);
    let report = wse.with_extension("report.json");
    (rel, wse, report)
}

/// Reuses a previous result when both its element and report are readable
/// and the element has the configured spec.
fn load_existing(wse: &Path, report: &Path, spec: &NetworkSpec) -> Option<FitReport> {
    let elem = read_wse(wse).ok()?;
    if elem.spec() != spec {
        return None;
    }
    serde_json::from_slice(&std::fs::read(report).ok()?).ok()
}

/// Fits `views` INRs for every procedural signal and writes them with a
/// `manifest.json` under `out_dir`.
///
/// Each element is written next to a `.report.json` with its fit report;
/// reruns skip every entry whose files are already present and valid.
/// Failed fits are recorded in the manifest and do not stop generation.
pub fn gen_dataset(cfg: &DatasetConfig, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    for class in &cfg.classes {
        let dir = out_dir.join(class.name());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let jobs: Vec<Job> = (0..cfg.classes.len())
        .flat_map(|class| {
            (0..cfg.signals_per_class)
                .flat_map(move |signal_id| (0..cfg.views).map(move |view| Job { class, signal_id, view }))
        })
        .collect();

    let run = |job: &Job| -> std::result::Result<ManifestEntry, ManifestFailure> {
        let class = cfg.classes[job.class];
        let (rel, wse, report_path) = entry_paths(out_dir, class, job.signal_id, job.view);
        let seed = cfg.view_base_seed(job.class, job.signal_id).wrapping_add(job.view as u64);
        let entry = |fit_report| ManifestEntry {
            wse_path: rel.clone(),
            label: job.class,
            class_name: class.name().to_string(),
            signal_id: job.signal_id,
            view_index: job.view,
            seed,
            fit_report,
        };
        if let Some(report) = load_existing(&wse, &report_path, &cfg.spec) {
            return Ok(entry(report));
        }
        let attempt = || -> Result<FitReport> {
            let signal = class.sample(cfg.image_size, cfg.signal_seed(job.class, job.signal_id));
            let task = synth_signal(&signal)?;
            let (elem, report) = fit_inr(&cfg.spec, &task, &cfg.fit, seed)?;
            write_atomic(&wse, &serialize(&elem))?;
            write_atomic(&report_path, &serde_json::to_vec(&report)?)?;
            Ok(report)
        };
        attempt().map(entry).map_err(|e| ManifestFailure {
            class_name: class.name().to_string(),
            signal_id: job.signal_id,
            view_index: job.view,
            error: e.to_string(),
        })
    };
    let results: Vec<_> = thread_pool()?.install(|| jobs.par_iter().map(run).collect());

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(f) => failures.push(f),
        }
    }
    let manifest = DatasetManifest {
        class_names: cfg.classes.iter().map(|c| c.name().to_string()).collect(),
        config: cfg.clone(),
        entries,
        failures,
    };
    write_atomic(&out_dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::OptimizerConfig;

    fn tiny(seed: u64) -> DatasetConfig {
        DatasetConfig {
            classes: vec![ImageClass::Disk, ImageClass::Stripes],
            signals_per_class: 2,
            views: 2,
            image_size: 8,
            spec: NetworkSpec::siren(vec![2, 6, 1]).unwrap(),
            fit: FitConfig::new(OptimizerConfig::adam(1e-3, 5)),
            base_seed: seed,
        }
    }

    #[test]
    fn writes_every_entry_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let m = gen_dataset(&tiny(1), dir.path()).unwrap();
        assert_eq!(m.entries.len(), 8);
        assert!(m.failures.is_empty());
        assert_eq!(m.class_names, vec!["disk", "stripes"]);
        for e in &m.entries {
            assert!(dir.path().join(&e.wse_path).exists());
            assert!(e.view_index < 2);
        }
        let first = dir.path().join(&m.entries[0].wse_path);
        let stamp = std::fs::metadata(&first).unwrap().modified().unwrap();
        let again = gen_dataset(&tiny(1), dir.path()).unwrap();
        assert_eq!(again, m);
        assert_eq!(std::fs::metadata(&first).unwrap().modified().unwrap(), stamp);
        assert_eq!(DatasetManifest::read(dir.path().join("manifest.json")).unwrap(), m);
    }

    #[test]
    fn corrupt_entry_is_refit() {
        let dir = tempfile::tempdir().unwrap();
        let m = gen_dataset(&tiny(2), dir.path()).unwrap();
        let p = dir.path().join(&m.entries[3].wse_path);
        std::fs::write(&p, b"{").unwrap();
        let again = gen_dataset(&tiny(2), dir.path()).unwrap();
        assert_eq!(again, m);
        assert!(read_wse(&p).is_ok());
    }

    #[test]
    fn views_use_distinct_seeds() {
        let cfg = tiny(3);
        assert_ne!(cfg.view_base_seed(0, 0), cfg.view_base_seed(0, 1));
        assert_ne!(cfg.signal_seed(0, 1), cfg.signal_seed(1, 1));
    }
}
