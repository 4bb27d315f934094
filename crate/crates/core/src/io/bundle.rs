// SPDX-License-Identifier: MIT OR Apache-2.0

//! Weight bundle directories and manifest files.
//!
//! A bundle directory holds one `<name>.npy` per tensor. Next to them:
//!
//! - `manifest.txt` lists the editable tensors, one `name rows cols` (or a
//!   bare `name`) per line, and may carry a `total_params N` line. `#`
//!   starts a comment.
//! - `counts.txt` (optional) has `editable_params N` and `total_params N`
//!   lines, as written by the checkpoint exporter.
//!
//! The total parameter count is taken from the manifest, then from
//! `counts.txt`, and otherwise defaults to the size of the bundle itself.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::editor::{WeightBundle, WeightEntry};
use crate::error::{Error, Result};
use crate::io::npy::{self, Dtype};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const COUNTS_FILE: &str = "counts.txt";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    /// `(rows, cols)`; absent for manifests given as a bare list of names.
    pub shape: Option<(usize, usize)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub total_params: Option<u64>,
}

impl Manifest {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let schema = |line: usize, message: String| Error::SchemaError {
            path: format!("{origin}:{line}"),
            message,
        };
        let mut manifest = Manifest::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["total_params", n] => {
                    let n = n
                        .parse()
                        .map_err(|_| schema(idx + 1, format!("bad parameter count `{n}`")))?;
                    manifest.total_params = Some(n);
                }
                [name] => manifest.entries.push(ManifestEntry {
                    name: name.to_string(),
                    shape: None,
                }),
                [name, rows, cols] => {
                    let dim = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|_| schema(idx + 1, format!("bad dimension `{s}`")))
                    };
                    manifest.entries.push(ManifestEntry {
                        name: name.to_string(),
                        shape: Some((dim(rows)?, dim(cols)?)),
                    });
                }
                _ => return Err(schema(idx + 1, format!("unrecognized line `{line}`"))),
            }
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn editable_params(&self) -> u64 {
        self.entries
            .iter()
            .filter_map(|e| e.shape)
            .map(|(r, c)| (r * c) as u64)
            .sum()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(total) = self.total_params {
            let _ = writeln!(out, "total_params {total}");
        }
        for e in &self.entries {
            match e.shape {
                Some((r, c)) => {
                    let _ = writeln!(out, "{} {r} {c}", e.name);
                }
                None => {
                    let _ = writeln!(out, "{}", e.name);
                }
            }
        }
        out
    }

    /// Manifest describing the editable entries of an in-memory bundle.
    pub fn of_bundle(bundle: &WeightBundle) -> Self {
        let entries = bundle
            .editable_names()
            .iter()
            .map(|name| {
                let m = bundle.get(name).expect("manifest names are validated");
                ManifestEntry {
                    name: name.clone(),
                    shape: Some(m.shape()),
                }
            })
            .collect();
        Manifest {
            entries,
            total_params: Some(bundle.total_param_count()),
        }
    }
}

fn read_counts(path: &Path) -> Result<BTreeMap<String, u64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(key), Some(value), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::SchemaError {
                path: format!("{}:{}", path.display(), idx + 1),
                message: format!("unrecognized line `{line}`"),
            });
        };
        let value = value.parse().map_err(|_| Error::SchemaError {
            path: format!("{}:{}", path.display(), idx + 1),
            message: format!("bad count `{value}`"),
        })?;
        out.insert(key.to_string(), value);
    }
    Ok(out)
}

/// Loads every `.npy` tensor in `dir` (sorted by name).
///
/// `editable` overrides the directory's own `manifest.txt`. Manifest shapes
/// are checked against the tensors on disk.
pub fn read_bundle(dir: &Path, editable: Option<&Manifest>) -> Result<WeightBundle> {
    let listing = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for item in listing {
        let item = item.map_err(|e| Error::io(dir, e))?;
        let file_name = item.file_name().to_string_lossy().into_owned();
        if let Some(stem) = file_name.strip_suffix(".npy") {
            names.push(stem.to_string());
        }
    }
    names.sort();

    let mut entries = Vec::with_capacity(names.len());
    for name in names {
        let matrix = npy::read_matrix(npy::tensor_path(dir, &name))?;
        entries.push(WeightEntry { name, matrix });
    }

    let own_manifest_path = dir.join(MANIFEST_FILE);
    let own;
    let manifest = match editable {
        Some(m) => m,
        None => {
            own = Manifest::load(&own_manifest_path)?;
            &own
        }
    };
    for m in &manifest.entries {
        let Some((rows, cols)) = m.shape else { continue };
        if let Some(entry) = entries.iter().find(|e| e.name == m.name) {
            if entry.matrix.shape() != (rows, cols) {
                return Err(Error::InvalidBundle(format!(
                    "`{}` is {}x{} on disk but {rows}x{cols} in the manifest",
                    m.name,
                    entry.matrix.nrows(),
                    entry.matrix.ncols(),
                )));
            }
        }
    }

    let counts_path = dir.join(COUNTS_FILE);
    let total = match manifest.total_params {
        Some(t) => Some(t),
        None if counts_path.exists() => read_counts(&counts_path)?.get("total_params").copied(),
        None => None,
    };
    WeightBundle::new(entries, manifest.names(), total)
}

/// Writes every entry plus `manifest.txt` and `counts.txt` into `dir`.
pub fn write_bundle(dir: &Path, bundle: &WeightBundle, dtype: Dtype) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for entry in bundle.entries() {
        npy::write_matrix(npy::tensor_path(dir, &entry.name), &entry.matrix, dtype)?;
    }
    let manifest = Manifest::of_bundle(bundle);
    let manifest_path = dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest.render()).map_err(|e| Error::io(&manifest_path, e))?;
    let counts = format!(
        "editable_params {}\ntotal_params {}\n",
        bundle.editable_param_count(),
        bundle.total_param_count()
    );
    let counts_path = dir.join(COUNTS_FILE);
    fs::write(&counts_path, counts).map_err(|e| Error::io(&counts_path, e))
}
