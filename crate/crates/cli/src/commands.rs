use crate::config::{parse_list, pick, FileConfig};
use crate::{ReportArgs, RunArgs, SimArgs};
use psdshm::detectors::{
    experimental_band, theoretical_band, BandMethod, FrequencyBand, JanapatiVariant, Metric,
};
use psdshm::io::{csv_row, read_file, write_file};
use psdshm::pipeline::{
    default_alpha_grid, extract_window, reports_from_csv, reports_to_csv, roc_sweep, run_baseline,
    run_inspection, score_entries, summary_table, verdicts_to_csv, Dataset, InspectionSettings,
};
use psdshm::simulate::{noise_for_snr, synth_dataset, tone_burst, Envelope, Scenario};
use psdshm::{welch_psd_full, Alpha, Error, Result, WelchConfig, WindowKind};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Fully resolved settings shared by `psd`, `detect` and `roc`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub path: Option<String>,
    pub window: Option<String>,
    pub metrics: Vec<Metric>,
    pub alphas: Vec<Alpha>,
    pub alpha_grid: Vec<f64>,
    pub welch: WelchConfig,
    pub band: Option<FrequencyBand>,
    pub holdout: usize,
    pub band_method: BandMethod,
    pub janapati: JanapatiVariant,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: RunArgs, file: &FileConfig, out_dir: PathBuf) -> Result<Self> {
        let manifest = args
            .manifest
            .or_else(|| file.get_path("run", "manifest"))
            .ok_or_else(|| Error::InvalidParameter("no manifest given: pass --manifest or set `manifest` in [run]".into()))?;

        let metrics_text = args.metrics.or_else(|| file.get_str("run", "metrics"));
        let metrics: Vec<Metric> = match metrics_text {
            Some(text) => parse_list(&text, "metrics")?,
            None => Metric::ALL.to_vec(),
        };
        if metrics.is_empty() {
            return Err(Error::InvalidParameter(
                "metrics list is empty; choose from F, Fm, Z, DI-Janapati, DI-Qiu".into(),
            ));
        }

        let alphas: Vec<f64> = match args.alpha.or_else(|| file.get_str("run", "alpha")) {
            Some(text) => parse_list(&text, "alpha")?,
            None => vec![0.05],
        };
        if alphas.is_empty() {
            return Err(Error::InvalidParameter("alpha list is empty".into()));
        }
        let alphas = alphas.into_iter().map(Alpha::new).collect::<Result<Vec<_>>>()?;

        let alpha_grid = match args.alpha_grid.or_else(|| file.get_str("run", "alpha_grid")) {
            Some(text) => parse_list(&text, "alpha_grid")?,
            None => default_alpha_grid(),
        };
        for &a in &alpha_grid {
            Alpha::new(a)?;
        }

        let defaults = WelchConfig::default();
        let window_kind = match args.welch_window.or_else(|| file.get_str("welch", "window")) {
            Some(s) => s.parse::<WindowKind>()?,
            None => defaults.window,
        };
        let welch = WelchConfig {
            segment_len: pick(args.segment_len, file, "welch", "segment_len", defaults.segment_len)?,
            overlap: pick(args.overlap, file, "welch", "overlap", defaults.overlap)?,
            nfft: pick(args.nfft, file, "welch", "nfft", defaults.nfft)?,
            window: window_kind,
            detrend: pick(args.detrend, file, "welch", "detrend", defaults.detrend)?,
        };
        welch.validate()?;

        let lo = match args.band_lo_hz {
            Some(v) => Some(v),
            None => file.get("run", "band_lo_hz")?,
        };
        let hi = match args.band_hi_hz {
            Some(v) => Some(v),
            None => file.get("run", "band_hi_hz")?,
        };
        let band = match (lo, hi) {
            (Some(lo), Some(hi)) => Some(FrequencyBand::new(lo, hi)?),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidParameter(
                    "give both band_lo_hz and band_hi_hz, or neither for the default band".into(),
                ))
            }
        };

        let band_method = match args.band_method.or_else(|| file.get_str("run", "band_method")) {
            Some(s) => s.parse()?,
            None => BandMethod::default(),
        };
        let janapati = match args.janapati.or_else(|| file.get_str("run", "janapati")) {
            Some(s) => s.parse()?,
            None => JanapatiVariant::default(),
        };
        let seed = match args.seed {
            Some(s) => Some(s),
            None => file.get("run", "seed")?,
        };

        Ok(RunConfig {
            manifest,
            path: args.path.or_else(|| file.get_str("run", "path")),
            window: args.window.or_else(|| file.get_str("run", "window")),
            metrics,
            alphas,
            alpha_grid,
            welch,
            band,
            holdout: pick(args.holdout, file, "run", "holdout", 5)?,
            band_method,
            janapati,
            seed,
            out_dir,
        })
    }
}

/// Dataset plus everything derived from it before any computation.
struct Prepared {
    dataset: Dataset,
    window: String,
    paths: Vec<String>,
    settings: InspectionSettings,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let dataset = Dataset::load(&cfg.manifest)?;
    let manifest = &dataset.manifest;
    let window = match &cfg.window {
        Some(name) => name.clone(),
        None => manifest
            .windows
            .first()
            .map(|(n, _)| n.clone())
            .ok_or_else(|| Error::Window("manifest defines no windows; add a [windows] section".into()))?,
    };
    let w = manifest.window(&window)?;
    if w.len() < cfg.welch.segment_len {
        return Err(Error::InvalidParameter(format!(
            "window `{window}` has {} samples, fewer than the segment length {}",
            w.len(),
            cfg.welch.segment_len
        )));
    }
    let paths = match &cfg.path {
        Some(p) if manifest.path_ids().contains(p) => vec![p.clone()],
        Some(p) => {
            return Err(Error::InvalidParameter(format!(
                "path `{p}` not in manifest (paths: {})",
                manifest.path_ids().join(", ")
            )))
        }
        None => manifest.path_ids(),
    };
    let mut settings = InspectionSettings::for_manifest(manifest);
    settings.welch = cfg.welch;
    settings.holdout = cfg.holdout;
    settings.shuffle_seed = cfg.seed;
    settings.janapati = cfg.janapati;
    if let Some(band) = cfg.band {
        settings.band = band;
    }
    Ok(Prepared {
        dataset,
        window,
        paths,
        settings,
    })
}

/// Files are collected first and written only once every computation has
/// succeeded.
#[derive(Default)]
struct Outputs(Vec<(PathBuf, String)>);

impl Outputs {
    fn add(&mut self, path: PathBuf, contents: String) {
        self.0.push((path, contents));
    }

    fn write(self) -> Result<usize> {
        let n = self.0.len();
        for (path, contents) in self.0 {
            write_file(&path, &contents)?;
        }
        Ok(n)
    }
}

fn safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn stem(file: &str) -> String {
    Path::new(file)
        .file_stem()
        .map(|s| safe(&s.to_string_lossy()))
        .unwrap_or_else(|| safe(file))
}

fn columns(header: &str, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        out.push_str(&csv_row(row));
    }
    out
}

pub fn psd(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let p = prepare(cfg)?;
    let m = &p.dataset.manifest;
    let window = m.window(&p.window)?;
    let alpha = cfg.alphas[0];
    let dir = cfg.out_dir.join("psd");
    let mut out = Outputs::default();
    for path in &p.paths {
        for (entry, signal) in m.entries.iter().zip(&p.dataset.signals).filter(|(e, _)| &e.path_id == path) {
            let est = extract_window(signal, &window)
                .and_then(|packet| welch_psd_full(&packet, &cfg.welch))
                .map_err(|e| Error::Entry {
                    file: entry.file.clone(),
                    source: Box::new(e),
                })?;
            let rows = est.freqs.iter().zip(&est.values).map(|(f, v)| vec![f.to_string(), v.to_string()]);
            out.add(dir.join(format!("{}.csv", stem(&entry.file))), columns("freq_hz,psd", rows));
        }
        for set in m.set_ids(path) {
            let split = run_baseline(&p.dataset, path, &set, &p.window, &p.settings)?;
            let mean = split.ensemble.mean_estimate();
            let theo = theoretical_band(&mean, alpha)?;
            let curves: Vec<Vec<f64>> = split.ensemble.psds().iter().map(|e| e.values.clone()).collect();
            let exp = experimental_band(&curves, alpha, cfg.band_method)?;
            let base = format!("{}_{}", safe(path), safe(&set));
            for (kind, band) in [("theoretical", &theo), ("experimental", &exp)] {
                let rows = (0..mean.len()).map(|k| {
                    vec![
                        mean.freqs[k].to_string(),
                        mean.values[k].to_string(),
                        band.lower[k].to_string(),
                        band.upper[k].to_string(),
                    ]
                });
                out.add(
                    dir.join("bands").join(format!("{base}_{kind}.csv")),
                    columns("freq_hz,baseline_mean,lower,upper", rows),
                );
            }
        }
    }
    let n = out.write()?;
    let _ = writeln!(stdout, "wrote {n} files under {}", dir.display());
    Ok(())
}

pub fn detect(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let p = prepare(cfg)?;
    let m = &p.dataset.manifest;
    let dir = cfg.out_dir.join("detect");
    let mut out = Outputs::default();
    let mut reports = Vec::new();
    for path in &p.paths {
        // curves of pairwise metrics are written against the first healthy
        // record of each set only
        let first_healthy: Vec<usize> = m
            .set_ids(path)
            .iter()
            .filter_map(|set| {
                m.entries
                    .iter()
                    .position(|e| &e.path_id == path && &e.set_id == set && m.is_baseline(e))
            })
            .collect();
        for &alpha in &cfg.alphas {
            let batch = run_inspection(&p.dataset, path, &p.window, &cfg.metrics, alpha, &p.settings)?;
            for r in &batch {
                out.add(
                    dir.join("verdicts")
                        .join(format!("{}_{}_alpha_{}.csv", safe(path), safe(r.metric.name()), alpha)),
                    verdicts_to_csv(r),
                );
            }
            reports.extend(batch);

            let curve_dir = dir.join("curves").join(safe(path)).join(format!("alpha_{alpha}"));
            for &metric in &cfg.metrics {
                let scored = score_entries(&p.dataset, path, &p.window, metric, alpha, &p.settings)?;
                if metric.is_damage_index() {
                    let rows = scored.iter().map(|s| {
                        vec![
                            m.entries[s.index].file.clone(),
                            s.reference.map(|r| m.entries[r].file.clone()).unwrap_or_default(),
                            s.series.values[0].to_string(),
                            s.series.lower.to_string(),
                            s.series.upper.to_string(),
                            s.series.verdict.to_string(),
                        ]
                    });
                    out.add(
                        curve_dir.join(format!("{}.csv", safe(metric.name()))),
                        columns("file,reference,value,lower,upper,verdict", rows),
                    );
                    continue;
                }
                for s in &scored {
                    if let Some(r) = s.reference {
                        if !first_healthy.contains(&r) {
                            continue;
                        }
                    }
                    let in_band = &s.series.in_band;
                    let rows = s.series.freqs.iter().zip(&s.series.values).enumerate().map(|(k, (f, v))| {
                        vec![
                            f.to_string(),
                            v.to_string(),
                            s.series.lower.to_string(),
                            s.series.upper.to_string(),
                            (in_band.binary_search(&k).is_ok() as u8).to_string(),
                        ]
                    });
                    out.add(
                        curve_dir
                            .join(safe(metric.name()))
                            .join(format!("{}.csv", stem(&m.entries[s.index].file))),
                        columns("freq_hz,value,lower,upper,in_band", rows),
                    );
                }
            }
        }
    }
    let table = summary_table(&reports)?;
    let text = table.render_text();
    out.add(dir.join("reports.csv"), reports_to_csv(&reports));
    out.add(dir.join("summary.txt"), text.clone());
    out.add(dir.join("summary.csv"), table.render_csv());
    out.write()?;
    let _ = write!(stdout, "{text}");
    Ok(())
}

pub fn roc(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let p = prepare(cfg)?;
    let dir = cfg.out_dir.join("roc");
    let mut out = Outputs::default();
    let mut aucs = String::from("path,metric,auc\n");
    for path in &p.paths {
        for &metric in &cfg.metrics {
            let curve = roc_sweep(&p.dataset, path, &p.window, metric, &cfg.alpha_grid, &p.settings)?;
            let mut text = String::from("alpha,fpr,tpr\n");
            for pt in &curve.points {
                text.push_str(&csv_row([pt.alpha.to_string(), pt.fpr.to_string(), pt.tpr.to_string()]));
            }
            let _ = writeln!(text, "auc,{:.6}", curve.auc);
            out.add(dir.join(format!("{}_{}.csv", safe(path), safe(metric.name()))), text);
            let _ = writeln!(aucs, "{path},{metric},{:.6}", curve.auc);
        }
    }
    out.add(dir.join("auc.csv"), aucs.clone());
    out.write()?;
    let _ = write!(stdout, "{aucs}");
    Ok(())
}

pub fn simulate(args: &SimArgs, file: &FileConfig, out_dir: &Path, stdout: &mut dyn Write) -> Result<()> {
    let s = "simulate";
    let seed = pick(args.seed, file, s, "seed", 0u64)?;
    let snr_db = pick(args.snr_db, file, s, "snr_db", 40.0)?;
    let mut scenario = Scenario::ladder(
        seed,
        pick(args.n_baseline, file, s, "n_baseline", 20)?,
        pick(args.steps, file, s, "steps", 6)?,
        pick(args.floor, file, s, "floor", 0.5)?,
        snr_db,
    )?;
    let burst = &mut scenario.burst;
    burst.center_freq = pick(args.center_freq, file, s, "center_freq", burst.center_freq)?;
    burst.n_cycles = pick(args.n_cycles, file, s, "n_cycles", burst.n_cycles)?;
    burst.amplitude = pick(args.amplitude, file, s, "amplitude", burst.amplitude)?;
    burst.envelope = match args.envelope.clone().or_else(|| file.get_str(s, "envelope")) {
        Some(e) => e.parse::<Envelope>()?,
        None => burst.envelope,
    };
    let signal = tone_burst(&scenario.burst)?;
    scenario.noise_std = noise_for_snr(&signal, scenario.path.path_gain, snr_db);
    let (manifest, path) = synth_dataset(&scenario, out_dir)?;
    let _ = writeln!(
        stdout,
        "wrote {} signals; manifest: {}",
        manifest.entries.len(),
        path.display()
    );
    Ok(())
}

pub fn report(args: &ReportArgs, out_dir: &Path, stdout: &mut dyn Write) -> Result<()> {
    let csv = matches!(args.format.as_str(), "csv");
    if !csv && args.format != "text" {
        return Err(Error::InvalidParameter(format!(
            "unknown format `{}` (expected text or csv)",
            args.format
        )));
    }
    let source = args
        .reports
        .clone()
        .unwrap_or_else(|| out_dir.join("detect").join("reports.csv"));
    let reports = reports_from_csv(&read_file(&source)?)?;
    let table = summary_table(&reports)?;
    let (text, table_csv) = (table.render_text(), table.render_csv());
    let dir = out_dir.join("report");
    let mut out = Outputs::default();
    out.add(dir.join("summary.txt"), text.clone());
    out.add(dir.join("summary.csv"), table_csv.clone());
    out.write()?;
    let _ = write!(stdout, "{}", if csv { table_csv } else { text });
    Ok(())
}
