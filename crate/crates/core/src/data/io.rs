//! On-disk dataset layout.
//!
//! A dataset directory holds:
//!
//! - `manifest`: `key=value` lines with `samples`, `classes`, `dim_L`,
//!   `dim_V`, `dim_A` and `labels` (`class` or `score`),
//! - `{i}.L.csv`, `{i}.V.csv`, `{i}.A.csv` for every sample `i`: one time
//!   step per line, comma-separated, no header,
//! - `labels.csv`: one `index,label` line per sample.
//!
//! Numbers are written in Rust's shortest round-trip form, so a save/load
//! cycle is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::sample::{Label, LabelKind, ModalitySequence, MultimodalSample};
use crate::arch::ModalityKind;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MANIFEST: &str = "manifest";
pub const LABELS: &str = "labels.csv";

/// Parsed `manifest` contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub samples: usize,
    pub classes: usize,
    pub dims: [usize; 3],
    pub labels: LabelKind,
}

impl Manifest {
    fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples={}", self.samples);
        let _ = writeln!(s, "classes={}", self.classes);
        for m in ModalityKind::ALL {
            let _ = writeln!(s, "dim_{}={}", m.letter(), self.dims[m.index()]);
        }
        let _ = writeln!(s, "labels={}", self.labels.name());
        s
    }

    fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::load(path, format!("line {} is not key=value", n + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let num = |key: &str| -> Result<usize> {
            let v = kv
                .get(key)
                .ok_or_else(|| Error::load(path, format!("missing key `{key}`")))?;
            v.parse()
                .map_err(|_| Error::load(path, format!("`{key}` is not a count: {v}")))
        };
        let labels = match kv.get("labels").map(String::as_str) {
            Some("class") => LabelKind::Class,
            Some("score") => LabelKind::Score,
            Some(other) => return Err(Error::load(path, format!("unknown label kind `{other}`"))),
            None => return Err(Error::load(path, "missing key `labels`")),
        };
        let manifest = Manifest {
            samples: num("samples")?,
            classes: num("classes")?,
            dims: [num("dim_L")?, num("dim_V")?, num("dim_A")?],
            labels,
        };
        if manifest.dims.contains(&0) {
            return Err(Error::load(path, "feature widths must be positive"));
        }
        Ok(manifest)
    }
}

fn sequence_file(dir: &Path, i: usize, m: ModalityKind) -> PathBuf {
    dir.join(format!("{i}.{}.csv", m.letter()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::load(path, "file not found"),
        _ => Error::io(path, e),
    })
}

fn render_sequence(t: &Tensor) -> String {
    let mut s = String::new();
    for r in 0..t.rows() {
        for (c, v) in t.row(r).iter().enumerate() {
            if c > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

fn parse_value(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::load(path, format!("line {line}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::load(path, format!("line {line}: non-finite value `{field}`")));
    }
    Ok(v)
}

fn parse_sequence(path: &Path, text: &str, dim: usize) -> Result<Tensor> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim {
            return Err(Error::load(
                path,
                format!("line {}: expected {dim} values, found {}", n + 1, fields.len()),
            ));
        }
        for f in fields {
            data.push(parse_value(path, n + 1, f)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::load(path, "sequence has no time steps"));
    }
    Tensor::new([rows, dim], data)
}

/// Writes `samples` into `dir`, creating it if needed.
pub fn save_dataset(dir: impl AsRef<Path>, samples: &[MultimodalSample], classes: usize) -> Result<()> {
    let dir = dir.as_ref();
    let first = samples
        .first()
        .ok_or_else(|| Error::Contract("cannot save an empty dataset".into()))?;
    let dims = first.sequences.each_ref().map(|s| s.dim());
    let kind = first.label.kind();
    for (i, s) in samples.iter().enumerate() {
        if s.sequences.each_ref().map(|q| q.dim()) != dims || s.label.kind() != kind {
            return Err(Error::Contract(format!(
                "sample {i} does not match the widths or label kind of sample 0"
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        samples: samples.len(),
        classes,
        dims,
        labels: kind,
    };
    write(&dir.join(MANIFEST), &manifest.render())?;
    let mut labels = String::new();
    for (i, s) in samples.iter().enumerate() {
        for seq in &s.sequences {
            write(&sequence_file(dir, i, seq.kind), &render_sequence(&seq.data))?;
        }
        let _ = match s.label {
            Label::Class(c) => writeln!(labels, "{i},{c}"),
            Label::Score(v) => writeln!(labels, "{i},{v}"),
        };
    }
    write(&dir.join(LABELS), &labels)
}

/// Reads the manifest of a dataset directory.
pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let path = dir.as_ref().join(MANIFEST);
    Manifest::parse(&path, &read(&path)?)
}

/// Loads a dataset directory written by [`save_dataset`].
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(Manifest, Vec<MultimodalSample>)> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;

    let labels_path = dir.join(LABELS);
    let mut labels: Vec<Option<Label>> = vec![None; manifest.samples];
    for (n, line) in read(&labels_path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (idx, value) = line
            .split_once(',')
            .ok_or_else(|| Error::load(&labels_path, format!("line {}: expected `index,label`", n + 1)))?;
        let i: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::load(&labels_path, format!("line {}: bad index `{idx}`", n + 1)))?;
        if i >= manifest.samples {
            return Err(Error::load(
                &labels_path,
                format!("line {}: index {i} exceeds sample count {}", n + 1, manifest.samples),
            ));
        }
        let label = match manifest.labels {
            LabelKind::Class => {
                let c: usize = value.trim().parse().map_err(|_| {
                    Error::load(&labels_path, format!("line {}: bad class `{value}`", n + 1))
                })?;
                if c >= manifest.classes {
                    return Err(Error::load(
                        &labels_path,
                        format!("line {}: class {c} out of range", n + 1),
                    ));
                }
                Label::Class(c)
            }
            LabelKind::Score => Label::Score(parse_value(&labels_path, n + 1, value)?),
        };
        if labels[i].replace(label).is_some() {
            return Err(Error::load(&labels_path, format!("duplicate label for sample {i}")));
        }
    }
    if let Some(i) = labels.iter().position(Option::is_none) {
        return Err(Error::load(&labels_path, format!("missing label for sample {i}")));
    }

    let extra = sequence_file(dir, manifest.samples, ModalityKind::Text);
    if extra.exists() {
        return Err(Error::load(
            dir.join(MANIFEST),
            format!(
                "manifest declares {} samples but {} exists",
                manifest.samples,
                extra.display()
            ),
        ));
    }

    let mut samples = Vec::with_capacity(manifest.samples);
    for (i, label) in labels.into_iter().enumerate() {
        let mut seqs = Vec::with_capacity(3);
        for m in ModalityKind::ALL {
            let path = sequence_file(dir, i, m);
            let data = parse_sequence(&path, &read(&path)?, manifest.dims[m.index()])?;
            seqs.push(ModalitySequence { kind: m, data });
        }
        let sequences: [ModalitySequence; 3] = seqs.try_into().expect("three modalities");
        let label = label.expect("checked above");
        samples.push(
            MultimodalSample::new(sequences, label)
                .map_err(|e| Error::load(&labels_path, e.to_string()))?,
        );
    }
    Ok((manifest, samples))
}
