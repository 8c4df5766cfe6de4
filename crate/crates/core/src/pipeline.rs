//! Baseline and inspection phases over a dataset manifest.
//!
//! Signals are grouped by path and set: every damage record is compared only
//! against the healthy records of its own `(path_id, set_id)` group. Within
//! a group the healthy records are split into a training part, which forms
//! the [`BaselineEnsemble`] for `Fm` and `Z`, and a held-out part used to
//! count false alarms.
//!
//! The single-reference metrics (`F` and both damage indices) follow a
//! pairwise protocol instead: every healthy record serves in turn as the
//! reference, false alarms are counted over all ordered healthy pairs with
//! distinct members, and each damage record is tested against every healthy
//! reference.

use crate::detectors::{
    f_statistic, fm_statistic, janapati_di, qiu_di, z_statistic, BaselineEnsemble, DecisionRule,
    FrequencyBand, JanapatiVariant, Metric, StatSeries, Verdict,
};
use crate::error::{Error, Result};
use crate::io::{self, csv_row};
use crate::spectral::{welch_psd_full, PsdEstimate, Signal, WelchConfig};
use crate::statdist::Alpha;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub label: String,
    pub path_id: String,
    pub set_id: String,
}

/// Named analysis range of a record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PacketWindow {
    Explicit { start: usize, len: usize },
    /// Starts where the short-time RMS envelope first reaches `threshold`
    /// times its maximum.
    Auto { len: usize, threshold: f64 },
}

impl PacketWindow {
    pub fn len(&self) -> usize {
        match *self {
            PacketWindow::Explicit { len, .. } | PacketWindow::Auto { len, .. } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub sample_rate: f64,
    pub baseline_label: String,
    pub windows: Vec<(String, PacketWindow)>,
    /// Actuation center frequency, used for the default verdict band.
    pub center_freq: Option<f64>,
    pub n_cycles: Option<f64>,
    /// Directory relative entry paths resolve against.
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        io::read_manifest(path)
    }

    pub fn window(&self, name: &str) -> Result<PacketWindow> {
        self.windows
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| *w)
            .ok_or_else(|| {
                let known: Vec<&str> = self.windows.iter().map(|(n, _)| n.as_str()).collect();
                Error::Window(format!("unknown window `{name}` (known: {})", known.join(", ")))
            })
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.file)
    }

    pub fn is_baseline(&self, entry: &ManifestEntry) -> bool {
        entry.label == self.baseline_label
    }

    /// Path ids in order of first appearance.
    pub fn path_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for e in &self.entries {
            if !ids.contains(&e.path_id) {
                ids.push(e.path_id.clone());
            }
        }
        ids
    }

    /// Set ids present on `path_id`, in order of first appearance.
    pub fn set_ids(&self, path_id: &str) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for e in self.entries.iter().filter(|e| e.path_id == path_id) {
            if !ids.contains(&e.set_id) {
                ids.push(e.set_id.clone());
            }
        }
        ids
    }

    /// Non-baseline labels in order of first appearance.
    pub fn damage_labels(&self, path_id: &str) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        for e in self.entries.iter().filter(|e| e.path_id == path_id) {
            if !self.is_baseline(e) && !labels.contains(&e.label) {
                labels.push(e.label.clone());
            }
        }
        labels
    }

    /// Center frequency plus or minus twice the burst bandwidth when the
    /// actuation is known, otherwise every bin.
    pub fn default_band(&self) -> FrequencyBand {
        match (self.center_freq, self.n_cycles) {
            (Some(fc), Some(n)) if fc > 0.0 && n > 0.0 => FrequencyBand::around_burst(fc, n),
            _ => FrequencyBand::full(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "manifest sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if self.entries.is_empty() {
            return Err(Error::Insufficient("manifest lists no entries".into()));
        }
        for path in self.path_ids() {
            for set in self.set_ids(&path) {
                let healthy = self
                    .entries
                    .iter()
                    .filter(|e| e.path_id == path && e.set_id == set && self.is_baseline(e))
                    .count();
                if healthy == 0 {
                    return Err(Error::Insufficient(format!(
                        "path {path} set {set} has no `{}` entry",
                        self.baseline_label
                    )));
                }
            }
        }
        for (name, w) in &self.windows {
            if w.is_empty() {
                return Err(Error::Window(format!("window `{name}` has zero length")));
            }
            if let PacketWindow::Auto { threshold, .. } = w {
                if !(*threshold > 0.0 && *threshold <= 1.0) {
                    return Err(Error::Window(format!(
                        "window `{name}` threshold must lie in (0, 1], got {threshold}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A manifest with its signals loaded, aligned with `manifest.entries`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub signals: Vec<Signal>,
}

impl Dataset {
    pub fn new(manifest: DatasetManifest, signals: Vec<Signal>) -> Result<Self> {
        manifest.validate()?;
        if signals.len() != manifest.entries.len() {
            return Err(Error::Mismatch(format!(
                "{} signals for {} manifest entries",
                signals.len(),
                manifest.entries.len()
            )));
        }
        for (entry, signal) in manifest.entries.iter().zip(&signals) {
            if signal.sample_rate != manifest.sample_rate {
                return Err(Error::entry(
                    &entry.file,
                    Error::Mismatch(format!(
                        "sample rate {} differs from the manifest's {}",
                        signal.sample_rate, manifest.sample_rate
                    )),
                ));
            }
            for (name, w) in &manifest.windows {
                if w.len() > signal.len() {
                    return Err(Error::entry(
                        &entry.file,
                        Error::Window(format!(
                            "window `{name}` ({} samples) exceeds the {}-sample signal",
                            w.len(),
                            signal.len()
                        )),
                    ));
                }
                if let PacketWindow::Explicit { start, len } = w {
                    if start + len > signal.len() {
                        return Err(Error::entry(
                            &entry.file,
                            Error::Window(format!(
                                "window `{name}` ends at {} past the {}-sample signal",
                                start + len,
                                signal.len()
                            )),
                        ));
                    }
                }
            }
        }
        Ok(Dataset { manifest, signals })
    }

    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = DatasetManifest::load(manifest_path)?;
        manifest.validate()?;
        let signals = manifest
            .entries
            .iter()
            .map(|e| io::read_signal(&manifest.resolve(e)))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(manifest, signals)
    }
}

/// Smoothing length, in samples, of the envelope used by auto windows.
pub const AUTO_SMOOTHING: usize = 64;

/// First sample where the centered moving-RMS envelope reaches `threshold`
/// times its maximum.
pub fn locate_arrival(samples: &[f64], threshold: f64, smoothing: usize) -> Result<usize> {
    let n = samples.len();
    let half = smoothing / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in samples {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    let envelope: Vec<f64> = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(n);
            ((prefix[hi] - prefix[lo]) / (hi - lo) as f64).max(0.0).sqrt()
        })
        .collect();
    let max = envelope.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::Window("auto-locate failed: signal has no energy".into()));
    }
    envelope
        .iter()
        .position(|&e| e >= threshold * max)
        .ok_or_else(|| Error::Window("auto-locate failed: envelope never crosses the threshold".into()))
}

pub fn extract_window(signal: &Signal, window: &PacketWindow) -> Result<Signal> {
    match *window {
        PacketWindow::Explicit { start, len } => signal.slice(start..start + len),
        PacketWindow::Auto { len, threshold } => {
            let start = locate_arrival(&signal.samples, threshold, AUTO_SMOOTHING)?;
            if start + len > signal.len() {
                return Err(Error::Window(format!(
                    "auto window at {start} with length {len} runs past the {}-sample signal",
                    signal.len()
                )));
            }
            signal.slice(start..start + len)
        }
    }
}

/// Analysis slice of `signal` for the manifest window `window_name`.
pub fn extract_packet(signal: &Signal, window_name: &str, manifest: &DatasetManifest) -> Result<Signal> {
    extract_window(signal, &manifest.window(window_name)?)
}

/// Everything besides the dataset that an inspection run depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InspectionSettings {
    pub welch: WelchConfig,
    pub band: FrequencyBand,
    /// Healthy records per group withheld from the baseline ensemble.
    pub holdout: usize,
    /// Shuffle healthy records before splitting; manifest order otherwise.
    pub shuffle_seed: Option<u64>,
    pub janapati: JanapatiVariant,
}

impl InspectionSettings {
    /// Default Welch parameters, the manifest's default band, 5 held out.
    pub fn for_manifest(manifest: &DatasetManifest) -> Self {
        InspectionSettings {
            welch: WelchConfig::default(),
            band: manifest.default_band(),
            holdout: 5,
            shuffle_seed: None,
            janapati: JanapatiVariant::default(),
        }
    }
}

/// Train/held-out split of one group's healthy records.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSplit {
    pub ensemble: BaselineEnsemble,
    /// Manifest indices of the training records.
    pub train: Vec<usize>,
    /// Manifest indices of the held-out records.
    pub heldout: Vec<usize>,
    pub heldout_psds: Vec<PsdEstimate>,
}

/// Splits the healthy entries of `indices` (manifest order) into train and
/// held-out parts.
fn split_healthy(healthy: &[usize], holdout: usize, shuffle_seed: Option<u64>) -> Result<(Vec<usize>, Vec<usize>)> {
    if healthy.len() < holdout + 2 {
        return Err(Error::Insufficient(format!(
            "{} healthy records cannot hold out {holdout} and keep 2 for the baseline",
            healthy.len()
        )));
    }
    let mut order = healthy.to_vec();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let heldout = order.split_off(order.len() - holdout);
    Ok((order, heldout))
}

fn group_indices(dataset: &Dataset, path_id: &str, set_id: &str) -> (Vec<usize>, Vec<usize>) {
    let m = &dataset.manifest;
    let mut healthy = Vec::new();
    let mut damaged = Vec::new();
    for (i, e) in m.entries.iter().enumerate() {
        if e.path_id == path_id && e.set_id == set_id {
            if m.is_baseline(e) {
                healthy.push(i);
            } else {
                damaged.push(i);
            }
        }
    }
    (healthy, damaged)
}

fn packet_psd(dataset: &Dataset, index: usize, window: &PacketWindow, welch: &WelchConfig) -> Result<(Signal, PsdEstimate)> {
    let file = &dataset.manifest.entries[index].file;
    let packet = extract_window(&dataset.signals[index], window).map_err(|e| Error::entry(file, e))?;
    let psd = welch_psd_full(&packet, welch).map_err(|e| Error::entry(file, e))?;
    Ok((packet, psd))
}

/// Baseline phase for one `(path_id, set_id)` group.
pub fn run_baseline(
    dataset: &Dataset,
    path_id: &str,
    set_id: &str,
    window_name: &str,
    settings: &InspectionSettings,
) -> Result<BaselineSplit> {
    let window = dataset.manifest.window(window_name)?;
    let (healthy, _) = group_indices(dataset, path_id, set_id);
    let (train, heldout) = split_healthy(&healthy, settings.holdout, settings.shuffle_seed)?;
    let psds = train
        .iter()
        .map(|&i| packet_psd(dataset, i, &window, &settings.welch).map(|p| p.1))
        .collect::<Result<Vec<_>>>()?;
    let heldout_psds = heldout
        .iter()
        .map(|&i| packet_psd(dataset, i, &window, &settings.welch).map(|p| p.1))
        .collect::<Result<Vec<_>>>()?;
    Ok(BaselineSplit {
        ensemble: BaselineEnsemble::new(psds)?,
        train,
        heldout,
        heldout_psds,
    })
}

/// One statistic evaluation of one record (against one reference for the
/// pairwise metrics).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntry {
    pub index: usize,
    pub reference: Option<usize>,
    /// Ground truth from the manifest label.
    pub damaged: bool,
    pub series: StatSeries,
}

struct Group {
    healthy: Vec<usize>,
    damaged: Vec<usize>,
    train: Vec<usize>,
    heldout: Vec<usize>,
    packets: Vec<Option<Signal>>,
    psds: Vec<Option<PsdEstimate>>,
    ensemble: BaselineEnsemble,
}

impl Group {
    fn build(dataset: &Dataset, path_id: &str, set_id: &str, window: &PacketWindow, settings: &InspectionSettings) -> Result<Self> {
        let (healthy, damaged) = group_indices(dataset, path_id, set_id);
        let (train, heldout) = split_healthy(&healthy, settings.holdout, settings.shuffle_seed)?;
        let n = dataset.signals.len();
        let mut packets = vec![None; n];
        let mut psds = vec![None; n];
        for &i in healthy.iter().chain(&damaged) {
            let (packet, psd) = packet_psd(dataset, i, window, &settings.welch)?;
            packets[i] = Some(packet);
            psds[i] = Some(psd);
        }
        let ensemble = BaselineEnsemble::new(train.iter().map(|&i| psds[i].clone().unwrap()).collect())?;
        Ok(Group {
            healthy,
            damaged,
            train,
            heldout,
            packets,
            psds,
            ensemble,
        })
    }

    fn psd(&self, i: usize) -> &PsdEstimate {
        self.psds[i].as_ref().expect("group member")
    }

    fn packet(&self, i: usize) -> &[f64] {
        &self.packets[i].as_ref().expect("group member").samples
    }

    fn damage_index(&self, metric: Metric, reference: usize, test: usize, settings: &InspectionSettings) -> Result<f64> {
        match metric {
            Metric::JanapatiDi => janapati_di(self.packet(reference), self.packet(test), settings.janapati),
            Metric::QiuDi => qiu_di(self.packet(reference), self.packet(test)),
            _ => unreachable!("not a damage index"),
        }
    }

    fn score(&self, dataset: &Dataset, metric: Metric, alpha: Alpha, settings: &InspectionSettings) -> Result<Vec<ScoredEntry>> {
        let file = |i: usize| dataset.manifest.entries[i].file.as_str();
        let band = &settings.band;
        let mut out = Vec::new();
        if metric.is_pairwise() {
            let scatter = if metric.is_damage_index() {
                let mut values = Vec::new();
                for &r in &self.train {
                    for &t in self.train.iter().filter(|&&t| t != r) {
                        values.push(self.damage_index(metric, r, t, settings).map_err(|e| Error::entry(file(t), e))?);
                    }
                }
                values
            } else {
                Vec::new()
            };
            for &r in &self.healthy {
                let tests = self
                    .healthy
                    .iter()
                    .filter(|&&t| t != r)
                    .map(|&t| (t, false))
                    .chain(self.damaged.iter().map(|&t| (t, true)));
                for (t, damaged) in tests {
                    let series = if metric == Metric::F {
                        f_statistic(self.psd(r), self.psd(t), alpha, band)
                    } else {
                        self.damage_index(metric, r, t, settings)
                            .and_then(|v| StatSeries::damage_index(metric, v, &scatter, alpha))
                    }
                    .map_err(|e| Error::entry(file(t), e))?;
                    out.push(ScoredEntry {
                        index: t,
                        reference: Some(r),
                        damaged,
                        series,
                    });
                }
            }
        } else {
            let tests = self
                .heldout
                .iter()
                .map(|&t| (t, false))
                .chain(self.damaged.iter().map(|&t| (t, true)));
            for (t, damaged) in tests {
                let series = match metric {
                    Metric::Fm => fm_statistic(&self.ensemble, self.psd(t), alpha, band),
                    _ => z_statistic(&self.ensemble, self.psd(t), alpha, band),
                }
                .map_err(|e| Error::entry(file(t), e))?;
                out.push(ScoredEntry {
                    index: t,
                    reference: None,
                    damaged,
                    series,
                });
            }
        }
        Ok(out)
    }
}

/// Evaluates `metric` on every test record of every set on `path_id`.
pub fn score_entries(
    dataset: &Dataset,
    path_id: &str,
    window_name: &str,
    metric: Metric,
    alpha: Alpha,
    settings: &InspectionSettings,
) -> Result<Vec<ScoredEntry>> {
    let window = dataset.manifest.window(window_name)?;
    let sets = dataset.manifest.set_ids(path_id);
    if sets.is_empty() {
        return Err(Error::InvalidParameter(format!("no entries on path `{path_id}`")));
    }
    let mut out = Vec::new();
    for set in sets {
        let group = Group::build(dataset, path_id, &set, &window, settings)?;
        out.extend(group.score(dataset, metric, alpha, settings)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub flagged: usize,
    pub total: usize,
}

impl Tally {
    pub fn pct(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.flagged as f64 / self.total as f64
        }
    }

    fn add(&mut self, flagged: bool) {
        self.total += 1;
        if flagged {
            self.flagged += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRecord {
    pub file: String,
    pub reference: Option<String>,
    pub label: String,
    pub set_id: String,
    pub damaged: bool,
    pub score: f64,
    pub verdict: Verdict,
}

/// Detection outcome for one `(path, metric, window, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub path_id: String,
    pub window: String,
    pub metric: Metric,
    pub alpha: Alpha,
    /// Baseline ensemble size `M` (per set).
    pub train_count: usize,
    pub holdout: usize,
    pub band: FrequencyBand,
    /// Healthy tests judged damaged.
    pub false_alarms: Tally,
    /// Per damage label, damage tests judged healthy.
    pub missed: Vec<(String, Tally)>,
    pub records: Vec<VerdictRecord>,
}

impl DetectionReport {
    pub fn false_alarm_pct(&self) -> f64 {
        self.false_alarms.pct()
    }

    pub fn missed_pct(&self, label: &str) -> Option<f64> {
        self.missed.iter().find(|(l, _)| l == label).map(|(_, t)| t.pct())
    }

    pub fn labels(&self) -> Vec<&str> {
        self.missed.iter().map(|(l, _)| l.as_str()).collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    dataset: &Dataset,
    path_id: &str,
    window_name: &str,
    metric: Metric,
    alpha: Alpha,
    settings: &InspectionSettings,
    scored: &[ScoredEntry],
    train_count: usize,
) -> DetectionReport {
    let m = &dataset.manifest;
    let mut missed: Vec<(String, Tally)> = m.damage_labels(path_id).into_iter().map(|l| (l, Tally::default())).collect();
    let mut false_alarms = Tally::default();
    let mut records = Vec::with_capacity(scored.len());
    for s in scored {
        let entry = &m.entries[s.index];
        if s.damaged {
            let slot = missed.iter_mut().find(|(l, _)| *l == entry.label).expect("label listed");
            slot.1.add(!s.series.verdict.is_damaged());
        } else {
            false_alarms.add(s.series.verdict.is_damaged());
        }
        records.push(VerdictRecord {
            file: entry.file.clone(),
            reference: s.reference.map(|r| m.entries[r].file.clone()),
            label: entry.label.clone(),
            set_id: entry.set_id.clone(),
            damaged: s.damaged,
            score: s.series.score(),
            verdict: s.series.verdict,
        });
    }
    DetectionReport {
        path_id: path_id.to_string(),
        window: window_name.to_string(),
        metric,
        alpha,
        train_count,
        holdout: settings.holdout,
        band: settings.band,
        false_alarms,
        missed,
        records,
    }
}

/// Inspection phase: scores every test record of `path_id` with each
/// requested metric at `alpha`; one report per metric.
pub fn run_inspection(
    dataset: &Dataset,
    path_id: &str,
    window_name: &str,
    metrics: &[Metric],
    alpha: Alpha,
    settings: &InspectionSettings,
) -> Result<Vec<DetectionReport>> {
    if metrics.is_empty() {
        return Err(Error::InvalidParameter("no metrics requested".into()));
    }
    let window = dataset.manifest.window(window_name)?;
    let sets = dataset.manifest.set_ids(path_id);
    if sets.is_empty() {
        return Err(Error::InvalidParameter(format!("no entries on path `{path_id}`")));
    }
    let groups = sets
        .iter()
        .map(|set| Group::build(dataset, path_id, set, &window, settings))
        .collect::<Result<Vec<_>>>()?;
    let train_count = groups[0].train.len();
    metrics
        .iter()
        .map(|&metric| {
            let mut scored = Vec::new();
            for g in &groups {
                scored.extend(g.score(dataset, metric, alpha, settings)?);
            }
            Ok(build_report(dataset, path_id, window_name, metric, alpha, settings, &scored, train_count))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// `0` marks the added origin anchor.
    pub alpha: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub metric: Metric,
    /// Ordered by increasing alpha; starts at `(0, 0)` and ends at `(1, 1)`.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub train_count: usize,
    pub holdout: usize,
}

/// 61 log-spaced values from `1e-6` to `1`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=60)
        .map(|i| match i {
            0 => 1e-6,
            60 => 1.0,
            _ => 10f64.powf(-6.0 + 0.1 * i as f64),
        })
        .collect()
}

/// Trapezoidal area under `(fpr, tpr)` points, sorted by fpr then tpr.
pub fn trapezoid_auc(points: &[(f64, f64)]) -> f64 {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    sorted
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}

/// Decision-based ROC: at each alpha every test is judged by the metric's own
/// rule, giving one `(fpr, tpr)` point.
pub fn roc_from_scored(metric: Metric, scored: &[ScoredEntry], alpha_grid: &[f64], train_count: usize, holdout: usize) -> Result<RocCurve> {
    let healthy = scored.iter().filter(|s| !s.damaged).count();
    let damaged = scored.len() - healthy;
    if healthy == 0 || damaged == 0 {
        return Err(Error::Insufficient(format!(
            "ROC needs healthy and damaged tests, got {healthy} and {damaged}"
        )));
    }
    let mut grid = alpha_grid
        .iter()
        .map(|&a| Alpha::new(a))
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty alpha grid".into()));
    }
    grid.sort_by(|a, b| a.value().total_cmp(&b.value()));
    grid.dedup();

    let mut points = vec![RocPoint {
        alpha: 0.0,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut cache: Vec<(DecisionRule, (f64, f64))> = Vec::new();
    for alpha in grid {
        cache.clear();
        let (mut fp, mut tp) = (0usize, 0usize);
        for s in scored {
            let bounds = match cache.iter().find(|(r, _)| *r == s.series.rule) {
                Some(&(_, b)) => b,
                None => {
                    let b = s.series.rule.thresholds(alpha)?;
                    cache.push((s.series.rule, b));
                    b
                }
            };
            let flagged = s.series.in_band_values().any(|v| v < bounds.0 || v > bounds.1);
            match (flagged, s.damaged) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                _ => {}
            }
        }
        points.push(RocPoint {
            alpha: alpha.value(),
            fpr: fp as f64 / healthy as f64,
            tpr: tp as f64 / damaged as f64,
        });
    }
    let last = points.last().unwrap();
    if last.fpr < 1.0 || last.tpr < 1.0 {
        points.push(RocPoint {
            alpha: 1.0,
            fpr: 1.0,
            tpr: 1.0,
        });
    }
    let auc = trapezoid_auc(&points.iter().map(|p| (p.fpr, p.tpr)).collect::<Vec<_>>());
    Ok(RocCurve {
        metric,
        points,
        auc,
        train_count,
        holdout,
    })
}

/// ROC of `metric` on `path_id` over `alpha_grid`.
pub fn roc_sweep(
    dataset: &Dataset,
    path_id: &str,
    window_name: &str,
    metric: Metric,
    alpha_grid: &[f64],
    settings: &InspectionSettings,
) -> Result<RocCurve> {
    let alpha = Alpha::new(0.05)?;
    let scored = score_entries(dataset, path_id, window_name, metric, alpha, settings)?;
    let (healthy, _) = group_indices(dataset, path_id, &dataset.manifest.set_ids(path_id)[0]);
    let train_count = healthy.len() - settings.holdout.min(healthy.len());
    roc_from_scored(metric, &scored, alpha_grid, train_count, settings.holdout)
}

/// Percentage with at most two decimals and no trailing zeros.
pub fn format_pct(tally: &Tally) -> String {
    let s = format!("{:.2}", tally.pct());
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// One table block: rows are metrics, columns false alarms then missed
/// damage per label.
#[derive(Debug, Clone, PartialEq)]
pub struct TableBlock {
    pub path_id: String,
    pub window: String,
    pub alpha: Alpha,
    pub labels: Vec<String>,
    /// `(metric, false alarm %, missed % per label)`.
    pub rows: Vec<(Metric, String, Vec<String>)>,
    pub footnotes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub blocks: Vec<TableBlock>,
}

/// Groups reports into blocks by `(path, window, alpha)`.
pub fn summary_table(reports: &[DetectionReport]) -> Result<SummaryTable> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Insufficient("no reports to tabulate".into()))?;
    let labels: Vec<String> = first.labels().iter().map(|s| s.to_string()).collect();
    let mut blocks: Vec<TableBlock> = Vec::new();
    for r in reports {
        if r.labels() != labels {
            return Err(Error::Mismatch(format!(
                "damage labels of {} at alpha {} ({}) differ from the first report's ({})",
                r.metric,
                r.alpha,
                r.labels().join(", "),
                labels.join(", ")
            )));
        }
        let row = (
            r.metric,
            format_pct(&r.false_alarms),
            r.missed.iter().map(|(_, t)| format_pct(t)).collect(),
        );
        let key = |b: &TableBlock| b.path_id == r.path_id && b.window == r.window && b.alpha == r.alpha;
        match blocks.iter_mut().find(|b| key(b)) {
            Some(b) => {
                b.rows.push(row);
                add_footnotes(&mut b.footnotes, r);
            }
            None => {
                let mut footnotes = vec![format!("alpha = {}", r.alpha), format!("band = {}", r.band)];
                add_footnotes(&mut footnotes, r);
                blocks.push(TableBlock {
                    path_id: r.path_id.clone(),
                    window: r.window.clone(),
                    alpha: r.alpha,
                    labels: labels.clone(),
                    rows: vec![row],
                    footnotes,
                })
            }
        }
    }
    Ok(SummaryTable { blocks })
}

fn add_footnotes(notes: &mut Vec<String>, r: &DetectionReport) {
    let note = if r.metric.is_pairwise() {
        format!(
            "{}: every healthy record used as reference in turn; false alarms over {} pairs",
            r.metric, r.false_alarms.total
        )
    } else {
        format!(
            "{}: M = {} baseline records, {} held out; false alarms over {} records",
            r.metric, r.train_count, r.holdout, r.false_alarms.total
        )
    };
    notes.push(note);
}

impl SummaryTable {
    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "path {} / window {} / alpha {}", b.path_id, b.window, b.alpha);
            let mut header = vec!["Method".to_string(), "False alarms (%)".to_string()];
            header.extend(b.labels.iter().map(|l| format!("Missed {l} (%)")));
            let mut rows = vec![header];
            for (m, fa, missed) in &b.rows {
                let mut row = vec![m.to_string(), fa.clone()];
                row.extend(missed.iter().cloned());
                rows.push(row);
            }
            let widths: Vec<usize> = (0..rows[0].len())
                .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
                .collect();
            for (ri, row) in rows.iter().enumerate() {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(c, (cell, &w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                    .collect();
                let _ = writeln!(out, "{}", cells.join("  ").trim_end());
                if ri == 0 {
                    let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                    let _ = writeln!(out, "{}", "-".repeat(total));
                }
            }
            for note in &b.footnotes {
                let _ = writeln!(out, "  * {note}");
            }
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            let mut header = vec![
                "path".to_string(),
                "window".into(),
                "alpha".into(),
                "method".into(),
                "false_alarm_pct".into(),
            ];
            header.extend(b.labels.iter().map(|l| format!("missed_pct:{l}")));
            out.push_str(&csv_row(&header));
            for (m, fa, missed) in &b.rows {
                let mut row = vec![b.path_id.clone(), b.window.clone(), b.alpha.to_string(), m.to_string(), fa.clone()];
                row.extend(missed.iter().cloned());
                out.push_str(&csv_row(&row));
            }
        }
        out
    }
}

const TALLY_HEADER: &str = "path,window,metric,alpha,train,holdout,band_lo_hz,band_hi_hz,category,label,flagged,total";

/// Tally rows of several reports; readable back with [`reports_from_csv`].
pub fn reports_to_csv(reports: &[DetectionReport]) -> String {
    let mut out = String::from(TALLY_HEADER);
    out.push('\n');
    for r in reports {
        let prefix = [
            r.path_id.clone(),
            r.window.clone(),
            r.metric.to_string(),
            r.alpha.to_string(),
            r.train_count.to_string(),
            r.holdout.to_string(),
            r.band.lo_hz.to_string(),
            r.band.hi_hz.to_string(),
        ];
        let line = |category: &str, label: &str, t: &Tally| {
            let mut f = prefix.to_vec();
            f.extend([category.to_string(), label.to_string(), t.flagged.to_string(), t.total.to_string()]);
            csv_row(&f)
        };
        out.push_str(&line("false_alarm", "", &r.false_alarms));
        for (label, t) in &r.missed {
            out.push_str(&line("missed", label, t));
        }
    }
    out
}

/// Parses tally CSV back into reports (without per-record verdicts).
pub fn reports_from_csv(text: &str) -> Result<Vec<DetectionReport>> {
    let err = |line: usize, message: String| Error::Parse {
        what: "report",
        line,
        message,
    };
    let mut reports: Vec<DetectionReport> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line == TALLY_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(err(i + 1, format!("expected 12 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(i + 1, format!("`{s}`: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| err(i + 1, format!("`{s}`: {e}")));
        let metric: Metric = f[2].parse().map_err(|e: Error| err(i + 1, e.to_string()))?;
        let alpha = Alpha::new(num(f[3])?).map_err(|e| err(i + 1, e.to_string()))?;
        let tally = Tally {
            flagged: int(f[10])?,
            total: int(f[11])?,
        };
        let start_new = f[8] == "false_alarm";
        if start_new {
            reports.push(DetectionReport {
                path_id: f[0].to_string(),
                window: f[1].to_string(),
                metric,
                alpha,
                train_count: int(f[4])?,
                holdout: int(f[5])?,
                band: FrequencyBand {
                    lo_hz: num(f[6])?,
                    hi_hz: num(f[7])?,
                },
                false_alarms: tally,
                missed: Vec::new(),
                records: Vec::new(),
            });
        } else if f[8] == "missed" {
            let r = reports
                .last_mut()
                .filter(|r| r.metric == metric && r.alpha == alpha && r.path_id == f[0])
                .ok_or_else(|| err(i + 1, "missed row without a preceding false_alarm row".into()))?;
            r.missed.push((f[9].to_string(), tally));
        } else {
            return Err(err(i + 1, format!("unknown category `{}`", f[8])));
        }
    }
    Ok(reports)
}

/// Per-record verdicts of one report.
pub fn verdicts_to_csv(report: &DetectionReport) -> String {
    let mut out = String::from("file,reference,set_id,label,truth,score,verdict\n");
    for r in &report.records {
        out.push_str(&csv_row([
            r.file.clone(),
            r.reference.clone().unwrap_or_default(),
            r.set_id.clone(),
            r.label.clone(),
            if r.damaged { "damaged".into() } else { "healthy".to_string() },
            r.score.to_string(),
            r.verdict.to_string(),
        ]));
    }
    out
}
