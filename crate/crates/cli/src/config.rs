//! `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! [run]
//! manifest = data/manifest.txt
//! metrics = F, Fm, Z
//! alpha = 0.05, 0.01
//!
//! [welch]
//! segment_len = 100
//! ```
//!
//! Relative paths resolve against the config file's directory. Command-line
//! flags win over file values.

use psdshm::io::{parse_sections, read_file};
use psdshm::{Error, Result};
use std::path::{Path, PathBuf};
use std::str::FromStr;

const KNOWN: &[(&str, &[&str])] = &[
    (
        "run",
        &[
            "manifest",
            "path",
            "window",
            "metrics",
            "alpha",
            "alpha_grid",
            "holdout",
            "band_lo_hz",
            "band_hi_hz",
            "band_method",
            "janapati",
            "seed",
            "out_dir",
        ],
    ),
    ("welch", &["segment_len", "overlap", "nfft", "window", "detrend"]),
    (
        "simulate",
        &[
            "seed",
            "n_baseline",
            "steps",
            "floor",
            "snr_db",
            "center_freq",
            "n_cycles",
            "amplitude",
            "envelope",
        ],
    ),
];

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    /// `(section, key, value, line)`
    values: Vec<(String, String, String, usize)>,
    base: PathBuf,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&read_file(path)?, base)
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self> {
        let mut values = Vec::new();
        for section in parse_sections(text, "config")? {
            if section.name.is_empty() {
                if let Some((line, _)) = section.lines.first() {
                    return Err(Error::Parse {
                        what: "config",
                        line: *line,
                        message: "key outside any section (start with `[run]`, `[welch]` or `[simulate]`)".into(),
                    });
                }
                continue;
            }
            let Some((_, keys)) = KNOWN.iter().find(|(name, _)| *name == section.name) else {
                let line = section.lines.first().map_or(0, |l| l.0);
                return Err(Error::Parse {
                    what: "config",
                    line,
                    message: format!(
                        "unknown section `[{}]` (expected one of: run, welch, simulate)",
                        section.name
                    ),
                });
            };
            for (line, key, value) in section.pairs("config")? {
                if !keys.contains(&key.as_str()) {
                    return Err(Error::Parse {
                        what: "config",
                        line,
                        message: format!("unknown key `{key}` in [{}] (known: {})", section.name, keys.join(", ")),
                    });
                }
                values.push((section.name.clone(), key, value, line));
            }
        }
        Ok(FileConfig { values, base })
    }

    fn raw(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.values
            .iter()
            .rev()
            .find(|(s, k, _, _)| s == section && k == key)
            .map(|(_, _, v, line)| (v.as_str(), *line))
    }

    /// Parsed value of `section.key`, if present.
    pub fn get<T>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e: T::Err| Error::Parse {
                what: "config",
                line,
                message: format!("{section}.{key} = `{v}`: {e}"),
            }),
        }
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<String> {
        self.raw(section, key).map(|(v, _)| v.to_string())
    }

    pub fn get_path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.raw(section, key).map(|(v, _)| self.base.join(v))
    }
}

/// Flag value, else file value, else default.
pub fn pick<T>(flag: Option<T>, file: &FileConfig, section: &str, key: &str, default: T) -> Result<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get(section, key)?.unwrap_or(default)),
    }
}

/// Comma-separated list; blank items are dropped.
pub fn parse_list<T>(text: &str, what: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|e: T::Err| Error::InvalidParameter(format!("{what}: `{s}`: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_values_win_and_paths_resolve() {
        let c = FileConfig::parse(
            "[run]\nholdout = 3\nholdout = 4\nmanifest = data/m.txt\n[welch]\noverlap = 0\n",
            PathBuf::from("/cfg"),
        )
        .unwrap();
        assert_eq!(c.get::<usize>("run", "holdout").unwrap(), Some(4));
        assert_eq!(c.get_path("run", "manifest"), Some(PathBuf::from("/cfg/data/m.txt")));
        assert_eq!(c.get::<f64>("welch", "overlap").unwrap(), Some(0.0));
        assert_eq!(c.get::<f64>("welch", "nfft").unwrap(), None);
        assert_eq!(pick(Some(7usize), &c, "run", "holdout", 5).unwrap(), 7);
        assert_eq!(pick(None, &c, "run", "holdout", 5usize).unwrap(), 4);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_reported_with_lines() {
        let err = FileConfig::parse("[run]\nholdot = 3\n", PathBuf::new()).unwrap_err();
        assert!(err.to_string().contains("holdot"), "{err}");
        assert!(FileConfig::parse("[plots]\nx = 1\n", PathBuf::new()).is_err());
        let c = FileConfig::parse("\n[run]\nholdout = many\n", PathBuf::new()).unwrap();
        match c.get::<usize>("run", "holdout") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<f64>("0.05, 0.01,", "alpha").unwrap(), vec![0.05, 0.01]);
        assert!(parse_list::<f64>("", "alpha").unwrap().is_empty());
        assert!(parse_list::<f64>("x", "alpha").is_err());
    }
}
