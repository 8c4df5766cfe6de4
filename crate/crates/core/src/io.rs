//! Plain-text file formats: signal CSVs, dataset manifests and the sectioned
//! `key = value` documents both the manifest and run configurations use.
//!
//! All writers emit `.` decimals, `,` separators and LF line endings, and
//! format floats with Rust's shortest round-trip representation so that
//! output is byte-for-byte reproducible.

use crate::error::{Error, Result};
use crate::pipeline::{DatasetManifest, ManifestEntry, PacketWindow};
use crate::spectral::Signal;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Signal CSV: two header lines (`sample_rate,<Hz>` and `label,<text>`)
/// followed by one sample per line.
pub fn signal_to_csv(signal: &Signal) -> String {
    let mut out = String::with_capacity(signal.samples.len() * 12 + 64);
    let _ = writeln!(out, "sample_rate,{}", signal.sample_rate);
    let _ = writeln!(out, "label,{}", signal.label);
    for v in &signal.samples {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn signal_from_csv(text: &str) -> Result<Signal> {
    let err = |line: usize, message: String| Error::Parse {
        what: "signal file",
        line,
        message,
    };
    let mut sample_rate = None;
    let mut label = None;
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if samples.is_empty() && (sample_rate.is_none() || label.is_none()) {
            if let Some(rest) = line.strip_prefix("sample_rate,") {
                sample_rate = Some(
                    rest.trim()
                        .parse::<f64>()
                        .map_err(|e| err(i + 1, format!("sample rate: {e}")))?,
                );
                continue;
            }
            if let Some(rest) = line.strip_prefix("label,") {
                label = Some(rest.to_string());
                continue;
            }
        }
        let v = line
            .parse::<f64>()
            .map_err(|e| err(i + 1, format!("sample `{line}`: {e}")))?;
        samples.push(v);
    }
    let sample_rate = sample_rate.ok_or_else(|| err(1, "missing `sample_rate,` header".into()))?;
    let label = label.ok_or_else(|| err(2, "missing `label,` header".into()))?;
    Signal::new(samples, sample_rate, label)
}

pub fn read_signal(path: &Path) -> Result<Signal> {
    signal_from_csv(&read_file(path)?).map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::entry(path.display().to_string(), other),
    })
}

pub fn write_signal(path: &Path, signal: &Signal) -> Result<()> {
    write_file(path, &signal_to_csv(signal))
}

/// One `[name]` section of a sectioned text document.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    /// `(line number, trimmed content)` of every non-blank, non-comment line.
    pub lines: Vec<(usize, String)>,
}

impl Section {
    /// Interprets every line as `key = value`.
    pub fn pairs(&self, what: &'static str) -> Result<Vec<(usize, String, String)>> {
        self.lines
            .iter()
            .map(|(n, line)| {
                let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                    what,
                    line: *n,
                    message: format!("expected `key = value`, got `{line}`"),
                })?;
                Ok((*n, k.trim().to_string(), v.trim().to_string()))
            })
            .collect()
    }
}

/// Splits a document into sections. Lines before the first header land in
/// a section with an empty name; `#` starts a comment line.
pub fn parse_sections(text: &str, what: &'static str) -> Result<Vec<Section>> {
    let mut sections = vec![Section {
        name: String::new(),
        lines: Vec::new(),
    }];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner.strip_suffix(']').ok_or_else(|| Error::Parse {
                what,
                line: i + 1,
                message: format!("unterminated section header `{line}`"),
            })?;
            sections.push(Section {
                name: name.trim().to_string(),
                lines: Vec::new(),
            });
            continue;
        }
        sections
            .last_mut()
            .expect("at least one section")
            .lines
            .push((i + 1, line.to_string()));
    }
    Ok(sections)
}

const MANIFEST: &str = "manifest";

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|e| Error::Parse {
        what: MANIFEST,
        line,
        message: format!("`{key}`: {e}"),
    })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|e| Error::Parse {
        what: MANIFEST,
        line,
        message: format!("`{key}`: {e}"),
    })
}

fn parse_window(line: usize, name: &str, value: &str) -> Result<PacketWindow> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    match parts.as_slice() {
        ["auto", len, threshold] => Ok(PacketWindow::Auto {
            len: parse_usize(line, name, len)?,
            threshold: parse_f64(line, name, threshold)?,
        }),
        [start, len] => Ok(PacketWindow::Explicit {
            start: parse_usize(line, name, start)?,
            len: parse_usize(line, name, len)?,
        }),
        _ => Err(Error::Parse {
            what: MANIFEST,
            line,
            message: format!("window `{name}` must be `start, len` or `auto, len, threshold`"),
        }),
    }
}

/// Parses manifest text. Relative signal paths resolve against `root`.
pub fn manifest_from_str(text: &str, root: &Path) -> Result<DatasetManifest> {
    let mut sample_rate = None;
    let mut baseline_label = None;
    let mut center_freq = None;
    let mut n_cycles = None;
    let mut windows = Vec::new();
    let mut entries = Vec::new();
    for section in parse_sections(text, MANIFEST)? {
        match section.name.as_str() {
            "dataset" => {
                for (n, key, value) in section.pairs(MANIFEST)? {
                    match key.as_str() {
                        "sample_rate" => sample_rate = Some(parse_f64(n, &key, &value)?),
                        "baseline_label" => baseline_label = Some(value),
                        "center_freq" => center_freq = Some(parse_f64(n, &key, &value)?),
                        "n_cycles" => n_cycles = Some(parse_f64(n, &key, &value)?),
                        _ => {
                            return Err(Error::Parse {
                                what: MANIFEST,
                                line: n,
                                message: format!("unknown key `{key}`"),
                            })
                        }
                    }
                }
            }
            "windows" => {
                for (n, key, value) in section.pairs(MANIFEST)? {
                    windows.push((key.clone(), parse_window(n, &key, &value)?));
                }
            }
            "entries" => {
                let mut lines = section.lines.iter();
                match lines.next() {
                    Some((_, header)) if header.replace(' ', "") == "file,label,path_id,set_id" => {}
                    Some((n, header)) => {
                        return Err(Error::Parse {
                            what: MANIFEST,
                            line: *n,
                            message: format!("expected header `file,label,path_id,set_id`, got `{header}`"),
                        })
                    }
                    None => {}
                }
                for (n, line) in lines {
                    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
                    let [file, label, path_id, set_id] = fields.as_slice() else {
                        return Err(Error::Parse {
                            what: MANIFEST,
                            line: *n,
                            message: format!("expected 4 fields, got {}", fields.len()),
                        });
                    };
                    entries.push(ManifestEntry {
                        file: file.to_string(),
                        label: label.to_string(),
                        path_id: path_id.to_string(),
                        set_id: set_id.to_string(),
                    });
                }
            }
            "" if section.lines.is_empty() => {}
            other => {
                let line = section.lines.first().map_or(0, |l| l.0);
                return Err(Error::Parse {
                    what: MANIFEST,
                    line,
                    message: format!("unknown section `{other}`"),
                });
            }
        }
    }
    let missing = |key: &str| Error::Parse {
        what: MANIFEST,
        line: 0,
        message: format!("missing `{key}` in [dataset]"),
    };
    Ok(DatasetManifest {
        entries,
        sample_rate: sample_rate.ok_or_else(|| missing("sample_rate"))?,
        baseline_label: baseline_label.ok_or_else(|| missing("baseline_label"))?,
        windows,
        center_freq,
        n_cycles,
        root: root.to_path_buf(),
    })
}

pub fn manifest_to_string(manifest: &DatasetManifest) -> String {
    let mut out = String::new();
    out.push_str("[dataset]\n");
    let _ = writeln!(out, "sample_rate = {}", manifest.sample_rate);
    let _ = writeln!(out, "baseline_label = {}", manifest.baseline_label);
    if let Some(fc) = manifest.center_freq {
        let _ = writeln!(out, "center_freq = {fc}");
    }
    if let Some(n) = manifest.n_cycles {
        let _ = writeln!(out, "n_cycles = {n}");
    }
    out.push_str("\n[windows]\n");
    for (name, window) in &manifest.windows {
        match window {
            PacketWindow::Explicit { start, len } => {
                let _ = writeln!(out, "{name} = {start}, {len}");
            }
            PacketWindow::Auto { len, threshold } => {
                let _ = writeln!(out, "{name} = auto, {len}, {threshold}");
            }
        }
    }
    out.push_str("\n[entries]\nfile,label,path_id,set_id\n");
    for e in &manifest.entries {
        let _ = writeln!(out, "{},{},{},{}", e.file, e.label, e.path_id, e.set_id);
    }
    out
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = read_file(path)?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    manifest_from_str(&text, &root)
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    write_file(path, &manifest_to_string(manifest))
}

/// Comma-joined row terminated by LF.
pub fn csv_row<I, T>(fields: I) -> String
where
    I: IntoIterator<Item = T>,
    T: std::fmt::Display,
{
    let mut out = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{f}");
    }
    out.push('\n');
    out
}
