// SPDX-License-Identifier: MIT OR Apache-2.0

//! Strict JSON configuration for erasure jobs and α sweeps.
//!
//! Unknown keys are rejected. Relative paths are resolved against the
//! directory holding the configuration file, and every input path must exist
//! when the file is loaded.
//!
//! ```json
//! {
//!   "forget": ["cat.npy", {"path": "feline.npy", "label": "feline"}],
//!   "retain": ["dog.npy"],
//!   "alpha": 2,
//!   "mode": "stacked",
//!   "weights_in": "unet-kv",
//!   "manifest": "unet-kv/manifest.txt",
//!   "weights_out": "unet-kv-edited",
//!   "report_out": "report.json",
//!   "out_dtype": "<f4"
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::editor::Mode;
use crate::error::{Error, Result};
use crate::io::bundle::{Manifest, ManifestEntry};
use crate::io::npy::Dtype;
use crate::oracle::ConceptSpec;
use crate::spectra::Alpha;

/// A concept's embedding file, optionally with a display label.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ConceptSource {
    Path(PathBuf),
    Labelled(LabelledPath),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelledPath {
    pub path: PathBuf,
    #[serde(default)]
    pub label: Option<String>,
}

impl ConceptSource {
    pub fn path(&self) -> &Path {
        match self {
            ConceptSource::Path(p) => p,
            ConceptSource::Labelled(l) => &l.path,
        }
    }

    /// Explicit label, or the file stem.
    pub fn label(&self) -> String {
        match self {
            ConceptSource::Labelled(LabelledPath { label: Some(l), .. }) => l.clone(),
            _ => self
                .path()
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let p = match self {
            ConceptSource::Path(p) => p,
            ConceptSource::Labelled(l) => &mut l.path,
        };
        *p = base.join(&*p);
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ManifestSource {
    File(PathBuf),
    Inline(Vec<String>),
}

impl ManifestSource {
    pub fn load(&self) -> Result<Manifest> {
        match self {
            ManifestSource::File(p) => Manifest::load(p),
            ManifestSource::Inline(names) => Ok(Manifest {
                entries: names
                    .iter()
                    .map(|n| ManifestEntry {
                        name: n.clone(),
                        shape: None,
                    })
                    .collect(),
                total_params: None,
            }),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJobConfig {
    forget: Vec<ConceptSource>,
    #[serde(default)]
    retain: Option<Vec<ConceptSource>>,
    alpha: Alpha,
    #[serde(default)]
    mode: Option<String>,
    weights_in: PathBuf,
    #[serde(default)]
    manifest: Option<ManifestSource>,
    weights_out: PathBuf,
    #[serde(default)]
    report_out: Option<PathBuf>,
    #[serde(default)]
    out_dtype: Option<Dtype>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobConfig {
    pub forget: Vec<ConceptSource>,
    pub retain: Option<Vec<ConceptSource>>,
    pub alpha: Alpha,
    pub mode: Mode,
    /// Bundle directory to edit.
    pub weights_in: PathBuf,
    /// Editable entries; the bundle's own `manifest.txt` when absent.
    pub manifest: Option<ManifestSource>,
    pub weights_out: PathBuf,
    /// Defaults to `report.json` inside `weights_out`.
    pub report_out: PathBuf,
    pub out_dtype: Dtype,
}

fn parse_strict<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let message = err.into_inner().to_string();
        Error::SchemaError { path, message }
    })
}

fn must_exist(path: &Path, field: String) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::SchemaError {
            path: field,
            message: format!("file not found: {}", path.display()),
        })
    }
}

fn read_text(path: &Path) -> Result<(String, PathBuf)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((text, base))
}

impl JobConfig {
    /// Parses and validates a configuration. Relative paths resolve against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let raw: RawJobConfig = parse_strict(text)?;
        if raw.forget.is_empty() {
            return Err(Error::SchemaError {
                path: "forget".into(),
                message: "at least one forget concept is required".into(),
            });
        }
        let mode = match raw.mode.as_deref() {
            None => Mode::default(),
            Some(m) => m.parse()?,
        };

        let mut forget = raw.forget;
        for (i, src) in forget.iter_mut().enumerate() {
            src.resolve(base);
            must_exist(src.path(), format!("forget[{i}]"))?;
        }
        let mut retain = raw.retain;
        for (i, src) in retain.iter_mut().flatten().enumerate() {
            src.resolve(base);
            must_exist(src.path(), format!("retain[{i}]"))?;
        }
        let weights_in = base.join(raw.weights_in);
        must_exist(&weights_in, "weights_in".into())?;
        let manifest = match raw.manifest {
            Some(ManifestSource::File(p)) => {
                let p = base.join(p);
                must_exist(&p, "manifest".into())?;
                Some(ManifestSource::File(p))
            }
            other => other,
        };
        let weights_out = base.join(raw.weights_out);
        let report_out = raw
            .report_out
            .map(|p| base.join(p))
            .unwrap_or_else(|| weights_out.join("report.json"));
        Ok(Self {
            forget,
            retain,
            alpha: raw.alpha,
            mode,
            weights_in,
            manifest,
            weights_out,
            report_out,
            out_dtype: raw.out_dtype.unwrap_or_default(),
        })
    }
}

pub fn load_job(path: impl AsRef<Path>) -> Result<JobConfig> {
    let (text, base) = read_text(path.as_ref())?;
    JobConfig::from_json(&text, &base)
}

/// Configuration of an α sweep over a synthetic concept pair.
///
/// ```json
/// { "pair": { "d": 16, "k_f": 4, "k_r": 4, "overlap": 2, "seed": 7 },
///   "alphas": [1, 2, 5, "inf"] }
/// ```
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub pair: ConceptSpec,
    #[serde(default)]
    pub alphas: Option<Vec<Alpha>>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        parse_strict(text)
    }
}

pub fn load_sweep(path: impl AsRef<Path>) -> Result<SweepConfig> {
    let (text, _) = read_text(path.as_ref())?;
    SweepConfig::from_json(&text)
}
