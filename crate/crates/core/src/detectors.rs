//! PSD-based hypothesis tests, reference damage indices and confidence bands.
//!
//! | statistic | value                               | null distribution | healthy iff (every in-band bin)     |
//! |-----------|-------------------------------------|-------------------|-------------------------------------|
//! | `F`       | `S_o / S_u`                         | `F(2K, 2K)`       | `f(a/2) <= F <= f(1-a/2)`           |
//! | `Fm`      | `mean(S_o) / S_u`                   | `F(2KM, 2K)`      | `f(a/2) <= Fm <= f(1-a/2)`          |
//! | `Z`       | `|mean(S_o) - S_u| / sqrt(2 var_o)` | `|N(0, 1)|`       | `Z <= z(1-a/2)`                     |
//!
//! `K` is the number of averaged Welch segments and `M` the number of
//! baseline records.

use crate::error::{Error, Result};
use crate::spectral::PsdEstimate;
use crate::statdist::{chi2_quantile, f_quantile, normal_quantile, Alpha};
use std::fmt;
use std::str::FromStr;

/// Detection metric identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    F,
    Fm,
    Z,
    JanapatiDi,
    QiuDi,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::F,
        Metric::Fm,
        Metric::Z,
        Metric::JanapatiDi,
        Metric::QiuDi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::F => "F",
            Metric::Fm => "Fm",
            Metric::Z => "Z",
            Metric::JanapatiDi => "DI-Janapati",
            Metric::QiuDi => "DI-Qiu",
        }
    }

    pub fn is_damage_index(self) -> bool {
        matches!(self, Metric::JanapatiDi | Metric::QiuDi)
    }

    /// Metrics that compare one unknown record against one reference record
    /// rather than against the baseline ensemble.
    pub fn is_pairwise(self) -> bool {
        matches!(self, Metric::F | Metric::JanapatiDi | Metric::QiuDi)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" => Ok(Metric::F),
            "fm" | "f_m" | "f-m" => Ok(Metric::Fm),
            "z" => Ok(Metric::Z),
            "di-janapati" | "janapati" | "di" => Ok(Metric::JanapatiDi),
            "di-qiu" | "qiu" => Ok(Metric::QiuDi),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Healthy,
    Damaged,
}

impl Verdict {
    pub fn is_damaged(self) -> bool {
        self == Verdict::Damaged
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Healthy => "healthy",
            Verdict::Damaged => "damaged",
        })
    }
}

/// Closed frequency interval over which the "for every frequency" decision
/// rule is enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl FrequencyBand {
    pub fn new(lo_hz: f64, hi_hz: f64) -> Result<Self> {
        if lo_hz.is_nan() || hi_hz.is_nan() || lo_hz > hi_hz || lo_hz < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "invalid frequency band [{lo_hz}, {hi_hz}]"
            )));
        }
        Ok(FrequencyBand { lo_hz, hi_hz })
    }

    /// Every bin up to Nyquist.
    pub fn full() -> Self {
        FrequencyBand {
            lo_hz: 0.0,
            hi_hz: f64::INFINITY,
        }
    }

    /// Center frequency plus or minus twice the burst bandwidth, where the
    /// bandwidth of an `n`-cycle burst is taken as its main-lobe width
    /// `2 f_c / n`.
    pub fn around_burst(center_hz: f64, n_cycles: f64) -> Self {
        let half = 2.0 * (2.0 * center_hz / n_cycles);
        FrequencyBand {
            lo_hz: (center_hz - half).max(0.0),
            hi_hz: center_hz + half,
        }
    }

    /// The single grid bin of `psd` nearest `freq_hz`.
    pub fn single_bin(psd: &PsdEstimate, freq_hz: f64) -> Self {
        let k = (freq_hz / psd.resolution()).round().clamp(0.0, (psd.len() - 1) as f64) as usize;
        FrequencyBand {
            lo_hz: psd.freqs[k],
            hi_hz: psd.freqs[k],
        }
    }

    pub fn contains(&self, freq_hz: f64) -> bool {
        freq_hz >= self.lo_hz && freq_hz <= self.hi_hz
    }

    pub fn bins(&self, freqs: &[f64]) -> Vec<usize> {
        freqs
            .iter()
            .enumerate()
            .filter(|(_, &f)| self.contains(f))
            .map(|(k, _)| k)
            .collect()
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi_hz.is_infinite() {
            write!(f, "{}-nyquist Hz", self.lo_hz)
        } else {
            write!(f, "{}-{} Hz", self.lo_hz, self.hi_hz)
        }
    }
}

/// `M` healthy PSDs with their per-frequency mean and unbiased variance.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineEnsemble {
    psds: Vec<PsdEstimate>,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl BaselineEnsemble {
    pub fn new(psds: Vec<PsdEstimate>) -> Result<Self> {
        let first = psds
            .first()
            .ok_or_else(|| Error::Insufficient("baseline ensemble needs at least one PSD".into()))?;
        for other in &psds[1..] {
            first.check_comparable(other)?;
        }
        let m = psds.len() as f64;
        let bins = first.len();
        // offsets from the first member keep the mean exact when every
        // member is identical
        let mut offset = vec![0.0; bins];
        for psd in &psds[1..] {
            for ((acc, v), v0) in offset.iter_mut().zip(&psd.values).zip(&first.values) {
                *acc += v - v0;
            }
        }
        let mean: Vec<f64> = first.values.iter().zip(&offset).map(|(v0, d)| v0 + d / m).collect();
        let mut variance = vec![0.0; bins];
        if psds.len() > 1 {
            for psd in &psds {
                for ((acc, v), mu) in variance.iter_mut().zip(&psd.values).zip(&mean) {
                    *acc += (v - mu) * (v - mu);
                }
            }
            variance.iter_mut().for_each(|v| *v /= m - 1.0);
        }
        Ok(BaselineEnsemble {
            psds,
            mean,
            variance,
        })
    }

    pub fn len(&self) -> usize {
        self.psds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psds.is_empty()
    }

    pub fn psds(&self) -> &[PsdEstimate] {
        &self.psds
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased per-frequency variance of a single baseline draw (all zero
    /// when `M = 1`).
    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    pub fn freqs(&self) -> &[f64] {
        &self.psds[0].freqs
    }

    pub fn segments(&self) -> usize {
        self.psds[0].segments
    }

    /// The ensemble mean packaged as an estimate on the shared grid.
    pub fn mean_estimate(&self) -> PsdEstimate {
        PsdEstimate {
            values: self.mean.clone(),
            ..self.psds[0].clone()
        }
    }
}

/// How a statistic maps to a verdict at a given `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionRule {
    /// Two-sided `F(dof_num, dof_den)` critical points.
    TwoSidedF { dof_num: f64, dof_den: f64 },
    /// Upper standard-normal critical point `z(1 - alpha/2)`.
    NormalUpper,
    /// `mean +/- z(1 - alpha/2) * std` of a healthy scatter.
    NormalScatter { mean: f64, std: f64 },
}

impl DecisionRule {
    /// `(lower, upper)` acceptance bounds at `alpha`.
    pub fn thresholds(&self, alpha: Alpha) -> Result<(f64, f64)> {
        let (lo_p, hi_p) = alpha.two_sided();
        match *self {
            DecisionRule::TwoSidedF { dof_num, dof_den } => Ok((
                f_quantile(lo_p, dof_num, dof_den)?,
                f_quantile(hi_p, dof_num, dof_den)?,
            )),
            DecisionRule::NormalUpper => Ok((f64::NEG_INFINITY, normal_quantile(hi_p)?)),
            DecisionRule::NormalScatter { mean, std } => {
                let z = normal_quantile(hi_p)?;
                Ok((mean - z * std, mean + z * std))
            }
        }
    }
}

/// A test statistic evaluated on a frequency grid (or a single scalar for
/// damage indices) together with its verdict at one `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatSeries {
    pub metric: Metric,
    pub rule: DecisionRule,
    /// Empty for damage indices.
    pub freqs: Vec<f64>,
    /// `NaN` where the statistic is undefined.
    pub values: Vec<f64>,
    /// Indices of the bins the verdict is taken over.
    pub in_band: Vec<usize>,
    /// In-band frequencies dropped because the statistic is undefined there.
    pub excluded: Vec<f64>,
    pub band: FrequencyBand,
    pub alpha: Alpha,
    pub lower: f64,
    pub upper: f64,
    pub verdict: Verdict,
}

impl StatSeries {
    #[allow(clippy::too_many_arguments)]
    fn seal(
        metric: Metric,
        rule: DecisionRule,
        freqs: Vec<f64>,
        values: Vec<f64>,
        in_band: Vec<usize>,
        excluded: Vec<f64>,
        band: FrequencyBand,
        alpha: Alpha,
    ) -> Result<Self> {
        let (lower, upper) = rule.thresholds(alpha)?;
        let mut series = StatSeries {
            metric,
            rule,
            freqs,
            values,
            in_band,
            excluded,
            band,
            alpha,
            lower,
            upper,
            verdict: Verdict::Healthy,
        };
        series.verdict = series.judge(lower, upper);
        Ok(series)
    }

    /// Scalar damage index judged against a healthy scatter of the same index.
    pub fn damage_index(metric: Metric, value: f64, healthy: &[f64], alpha: Alpha) -> Result<Self> {
        if !metric.is_damage_index() {
            return Err(Error::InvalidParameter(format!("{metric} is not a damage index")));
        }
        let (mean, std) = mean_std(healthy)?;
        Self::seal(
            metric,
            DecisionRule::NormalScatter { mean, std },
            Vec::new(),
            vec![value],
            vec![0],
            Vec::new(),
            FrequencyBand::full(),
            alpha,
        )
    }

    fn judge(&self, lower: f64, upper: f64) -> Verdict {
        let violated = self.in_band.iter().any(|&k| {
            let v = self.values[k];
            v < lower || v > upper
        });
        if violated {
            Verdict::Damaged
        } else {
            Verdict::Healthy
        }
    }

    /// Verdict the same values would receive at a different `alpha`.
    pub fn verdict_at(&self, alpha: Alpha) -> Result<Verdict> {
        let (lower, upper) = self.rule.thresholds(alpha)?;
        Ok(self.judge(lower, upper))
    }

    pub fn in_band_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.in_band.iter().map(move |&k| self.values[k])
    }

    /// Scalar summary: the maximum in-band statistic, or for damage indices
    /// the distance from the healthy mean in healthy standard deviations.
    pub fn score(&self) -> f64 {
        match self.rule {
            DecisionRule::NormalScatter { mean, std } => (self.values[0] - mean).abs() / std,
            _ => self.in_band_values().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn in_band_bins(band: &FrequencyBand, freqs: &[f64]) -> Result<Vec<usize>> {
    let bins = band.bins(freqs);
    if bins.is_empty() {
        return Err(Error::InvalidParameter(format!("band {band} contains no grid bins")));
    }
    Ok(bins)
}

fn ratio_series(
    metric: Metric,
    numerator: &[f64],
    unknown: &PsdEstimate,
    dof_num: f64,
    alpha: Alpha,
    band: &FrequencyBand,
) -> Result<StatSeries> {
    let in_band = in_band_bins(band, &unknown.freqs)?;
    if let Some(&k) = in_band.iter().find(|&&k| unknown.values[k] <= 0.0) {
        return Err(Error::ZeroDenominator {
            freq_hz: unknown.freqs[k],
        });
    }
    let values = numerator
        .iter()
        .zip(&unknown.values)
        .map(|(&n, &d)| if d > 0.0 { n / d } else { f64::NAN })
        .collect();
    StatSeries::seal(
        metric,
        DecisionRule::TwoSidedF {
            dof_num,
            dof_den: 2.0 * unknown.segments as f64,
        },
        unknown.freqs.clone(),
        values,
        in_band,
        Vec::new(),
        *band,
        alpha,
    )
}

/// Single-set `F = S_o / S_u` with two-sided `F(2K, 2K)` thresholds.
pub fn f_statistic(
    baseline: &PsdEstimate,
    unknown: &PsdEstimate,
    alpha: Alpha,
    band: &FrequencyBand,
) -> Result<StatSeries> {
    baseline.check_comparable(unknown)?;
    ratio_series(
        Metric::F,
        &baseline.values,
        unknown,
        2.0 * baseline.segments as f64,
        alpha,
        band,
    )
}

/// Multiple-set `Fm = mean(S_o) / S_u` with two-sided `F(2KM, 2K)` thresholds.
pub fn fm_statistic(
    baseline: &BaselineEnsemble,
    unknown: &PsdEstimate,
    alpha: Alpha,
    band: &FrequencyBand,
) -> Result<StatSeries> {
    baseline.psds[0].check_comparable(unknown)?;
    ratio_series(
        Metric::Fm,
        &baseline.mean,
        unknown,
        2.0 * (baseline.segments() * baseline.len()) as f64,
        alpha,
        band,
    )
}

/// Variance used in the denominator of the `Z` statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZScale {
    /// `2 var_o`, with `var_o` the single-draw baseline variance.
    #[default]
    SingleDraw,
    /// `(1 + 1/M) var_o`, the exact variance of `mean(S_o) - S_u` when both
    /// sides are independent healthy draws. Offered for sensitivity analysis.
    MeanDifference,
}

/// Multiple-set `Z = |mean(S_o) - S_u| / sqrt(2 var_o)`.
///
/// Bins whose baseline variance is zero are left out of the verdict and
/// listed in [`StatSeries::excluded`]; the call fails only when no in-band
/// bin survives.
pub fn z_statistic(
    baseline: &BaselineEnsemble,
    unknown: &PsdEstimate,
    alpha: Alpha,
    band: &FrequencyBand,
) -> Result<StatSeries> {
    z_statistic_scaled(baseline, unknown, alpha, band, ZScale::SingleDraw)
}

pub fn z_statistic_scaled(
    baseline: &BaselineEnsemble,
    unknown: &PsdEstimate,
    alpha: Alpha,
    band: &FrequencyBand,
    scale: ZScale,
) -> Result<StatSeries> {
    if baseline.len() < 2 {
        return Err(Error::Insufficient(format!(
            "the Z statistic needs at least 2 baseline PSDs, got {}",
            baseline.len()
        )));
    }
    baseline.psds[0].check_comparable(unknown)?;
    let factor = match scale {
        ZScale::SingleDraw => 2.0,
        ZScale::MeanDifference => 1.0 + 1.0 / baseline.len() as f64,
    };
    let values: Vec<f64> = baseline
        .mean
        .iter()
        .zip(&baseline.variance)
        .zip(&unknown.values)
        .map(|((&m, &var), &u)| {
            if var > 0.0 {
                (m - u).abs() / (factor * var).sqrt()
            } else {
                f64::NAN
            }
        })
        .collect();
    let candidates = in_band_bins(band, &unknown.freqs)?;
    let (in_band, dropped): (Vec<usize>, Vec<usize>) =
        candidates.iter().partition(|&&k| !values[k].is_nan());
    if in_band.is_empty() {
        return Err(Error::ZeroVariance {
            freq_hz: unknown.freqs[dropped[0]],
        });
    }
    let excluded = dropped.iter().map(|&k| unknown.freqs[k]).collect();
    StatSeries::seal(
        Metric::Z,
        DecisionRule::NormalUpper,
        unknown.freqs.clone(),
        values,
        in_band,
        excluded,
        *band,
        alpha,
    )
}

/// Which form of the Janapati index to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JanapatiVariant {
    /// The formula exactly as usually printed, dividing the projection
    /// coefficient by each baseline sample. Not zero for identical signals.
    AsPrinted,
    /// Projection form `Y0[t] = y0[t] * sum(y0 Yu) / sum(y0^2)`, which is
    /// zero for identical or positively scaled signals.
    #[default]
    Normalized,
}

impl FromStr for JanapatiVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "as-printed" | "asprinted" | "printed" => Ok(JanapatiVariant::AsPrinted),
            "normalized" => Ok(JanapatiVariant::Normalized),
            other => Err(Error::InvalidParameter(format!(
                "unknown Janapati variant `{other}` (expected as-printed or normalized)"
            ))),
        }
    }
}

fn check_pair(baseline: &[f64], unknown: &[f64]) -> Result<()> {
    if baseline.len() != unknown.len() {
        return Err(Error::Mismatch(format!(
            "signal lengths differ ({} vs {})",
            baseline.len(),
            unknown.len()
        )));
    }
    if baseline.len() < 2 {
        return Err(Error::Insufficient("damage indices need at least 2 samples".into()));
    }
    Ok(())
}

/// Janapati damage index of `unknown` relative to `baseline`.
pub fn janapati_di(baseline: &[f64], unknown: &[f64], variant: JanapatiVariant) -> Result<f64> {
    check_pair(baseline, unknown)?;
    let e0: f64 = baseline.iter().map(|v| v * v).sum();
    let eu: f64 = unknown.iter().map(|v| v * v).sum();
    if e0 == 0.0 || eu == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let norm_u = eu.sqrt();
    let projection: f64 = baseline.iter().zip(unknown).map(|(a, b)| a * b / norm_u).sum();
    match variant {
        JanapatiVariant::AsPrinted => {
            if let Some(index) = baseline.iter().position(|&v| v == 0.0) {
                return Err(Error::ZeroBaselineSample { index });
            }
            Ok(baseline
                .iter()
                .zip(unknown)
                .map(|(&y0, &yu)| yu / norm_u - projection / (y0 * e0))
                .sum())
        }
        JanapatiVariant::Normalized => Ok(baseline
            .iter()
            .zip(unknown)
            .map(|(&y0, &yu)| yu / norm_u - y0 * projection / e0)
            .sum()),
    }
}

/// Qiu damage index: one minus the absolute zero-lag normalized
/// cross-correlation. Always in `[0, 1]`.
pub fn qiu_di(baseline: &[f64], unknown: &[f64]) -> Result<f64> {
    check_pair(baseline, unknown)?;
    let e0: f64 = baseline.iter().map(|v| v * v).sum();
    let eu: f64 = unknown.iter().map(|v| v * v).sum();
    if e0 == 0.0 || eu == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let cross: f64 = baseline.iter().zip(unknown).map(|(a, b)| a * b).sum();
    // sqrt(e0 * eu) rather than sqrt(e0) * sqrt(eu): bit-exact 0 for identical inputs
    let rho = (cross.abs() / (e0 * eu).sqrt()).min(1.0);
    Ok(1.0 - rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    /// Sampling uncertainty of a single Welch estimate.
    TheoreticalEstimation,
    /// Scatter of repeated healthy acquisitions.
    Experimental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandMethod {
    #[default]
    NormalMeanStd,
    Percentile,
}

impl FromStr for BandMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "normal-mean-std" | "mean-std" => Ok(BandMethod::NormalMeanStd),
            "percentile" => Ok(BandMethod::Percentile),
            other => Err(Error::InvalidParameter(format!("unknown band method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kind: BandKind,
    pub alpha: Alpha,
}

impl ConfidenceBand {
    pub fn contains(&self, index: usize, value: f64) -> bool {
        value >= self.lower[index] && value <= self.upper[index]
    }
}

fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Insufficient(format!(
            "mean/std band needs at least 2 samples, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Linear-interpolation sample quantile of sorted data.
fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Per-point band from repeated curves (all of equal length).
pub fn experimental_band(curves: &[Vec<f64>], alpha: Alpha, method: BandMethod) -> Result<ConfidenceBand> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Insufficient("experimental band needs samples".into()))?;
    if curves.iter().any(|c| c.len() != first.len()) {
        return Err(Error::Mismatch("curves differ in length".into()));
    }
    let (lo_p, hi_p) = alpha.two_sided();
    let mut lower = Vec::with_capacity(first.len());
    let mut upper = Vec::with_capacity(first.len());
    let mut column = Vec::with_capacity(curves.len());
    for k in 0..first.len() {
        column.clear();
        column.extend(curves.iter().map(|c| c[k]));
        match method {
            BandMethod::NormalMeanStd => {
                let (mean, std) = mean_std(&column)?;
                let z = normal_quantile(hi_p)?;
                lower.push(mean - z * std);
                upper.push(mean + z * std);
            }
            BandMethod::Percentile => {
                column.sort_by(f64::total_cmp);
                lower.push(sorted_quantile(&column, lo_p));
                upper.push(sorted_quantile(&column, hi_p));
            }
        }
    }
    Ok(ConfidenceBand {
        lower,
        upper,
        kind: BandKind::Experimental,
        alpha,
    })
}

/// [`experimental_band`] for scalar samples; the band has one point.
pub fn experimental_band_scalar(samples: &[f64], alpha: Alpha, method: BandMethod) -> Result<ConfidenceBand> {
    let curves: Vec<Vec<f64>> = samples.iter().map(|&v| vec![v]).collect();
    experimental_band(&curves, alpha, method)
}

/// Interval that covers the true PSD with probability `1 - alpha` when
/// `2K S_hat / S` is chi-square with `2K` degrees of freedom.
pub fn theoretical_band(psd: &PsdEstimate, alpha: Alpha) -> Result<ConfidenceBand> {
    if psd.segments == 0 {
        return Err(Error::InvalidParameter("estimate has no segments".into()));
    }
    let dof = 2.0 * psd.segments as f64;
    let (lo_p, hi_p) = alpha.two_sided();
    let chi_hi = chi2_quantile(hi_p, dof)?;
    let chi_lo = chi2_quantile(lo_p, dof)?;
    Ok(ConfidenceBand {
        lower: psd.values.iter().map(|s| s * dof / chi_hi).collect(),
        upper: psd.values.iter().map(|s| s * dof / chi_lo).collect(),
        kind: BandKind::TheoreticalEstimation,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{WelchConfig, WindowKind};

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    fn psd(values: Vec<f64>, segments: usize) -> PsdEstimate {
        let n = values.len();
        let config = WelchConfig {
            segment_len: 2 * (n - 1),
            overlap: 0.0,
            nfft: 2 * (n - 1),
            window: WindowKind::Rectangular,
            detrend: false,
        };
        PsdEstimate {
            freqs: (0..n).map(|k| k as f64).collect(),
            values,
            config,
            segments,
            sample_rate: (2 * (n - 1)) as f64,
        }
    }

    fn ensemble(rows: &[Vec<f64>], segments: usize) -> BaselineEnsemble {
        BaselineEnsemble::new(rows.iter().map(|r| psd(r.clone(), segments)).collect()).unwrap()
    }

    #[test]
    fn f_identity_and_scaling() {
        let a = psd(vec![1.0, 2.0, 3.0, 0.5, 4.0], 9);
        let band = FrequencyBand::full();
        for a_val in [0.001, 0.05, 0.5, 0.99] {
            let s = f_statistic(&a, &a, alpha(a_val), &band).unwrap();
            assert!(s.values.iter().all(|&v| v == 1.0));
            assert_eq!(s.verdict, Verdict::Healthy);
        }
        let scaled = psd(a.values.iter().map(|v| v * 4.0).collect(), 9);
        let s = f_statistic(&a, &scaled, alpha(0.05), &band).unwrap();
        assert!(s.values.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert_eq!(s.verdict, Verdict::Damaged);
    }

    #[test]
    fn f_rejects_mismatch_and_zero_denominator() {
        let a = psd(vec![1.0, 2.0, 3.0], 9);
        let b = psd(vec![1.0, 2.0, 3.0], 8);
        assert!(matches!(
            f_statistic(&a, &b, alpha(0.05), &FrequencyBand::full()),
            Err(Error::Mismatch(_))
        ));
        let z = psd(vec![1.0, 0.0, 3.0], 9);
        assert!(matches!(
            f_statistic(&a, &z, alpha(0.05), &FrequencyBand::full()),
            Err(Error::ZeroDenominator { freq_hz }) if freq_hz == 1.0
        ));
        // Outside the band a zero is tolerated and left undefined.
        let s = f_statistic(&a, &z, alpha(0.05), &FrequencyBand::new(2.0, 2.0).unwrap()).unwrap();
        assert!(s.values[1].is_nan());
    }

    #[test]
    fn fm_with_one_baseline_is_f() {
        let a = psd(vec![1.0, 2.0, 3.0, 0.5], 9);
        let u = psd(vec![2.0, 1.0, 3.5, 0.25], 9);
        let band = FrequencyBand::full();
        let f = f_statistic(&a, &u, alpha(0.05), &band).unwrap();
        let fm = fm_statistic(&BaselineEnsemble::new(vec![a]).unwrap(), &u, alpha(0.05), &band).unwrap();
        assert_eq!(f.values, fm.values);
        assert_eq!((f.lower, f.upper), (fm.lower, fm.upper));
        assert_eq!(f.verdict, fm.verdict);
    }

    #[test]
    fn fm_of_mean_is_one() {
        let e = ensemble(&[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]], 9);
        let s = fm_statistic(&e, &e.mean_estimate(), alpha(0.05), &FrequencyBand::full()).unwrap();
        assert!(s.values.iter().all(|&v| v == 1.0));
        assert_eq!(s.verdict, Verdict::Healthy);
        assert_eq!(s.rule, DecisionRule::TwoSidedF { dof_num: 36.0, dof_den: 18.0 });
    }

    #[test]
    fn ensemble_moments() {
        let e = ensemble(&[vec![1.0, 4.0], vec![3.0, 4.0], vec![5.0, 4.0]], 3);
        assert_eq!(e.mean(), &[3.0, 4.0]);
        assert_eq!(e.variance(), &[4.0, 0.0]);
        let mismatched = vec![psd(vec![1.0, 2.0], 3), psd(vec![1.0, 2.0], 4)];
        assert!(BaselineEnsemble::new(mismatched).is_err());
        assert!(BaselineEnsemble::new(Vec::new()).is_err());
    }

    #[test]
    fn z_identities() {
        let e = ensemble(&[vec![1.0, 2.0, 3.0], vec![2.0, 5.0, 4.0], vec![3.0, 2.0, 8.0]], 9);
        let band = FrequencyBand::full();
        let s = z_statistic(&e, &e.mean_estimate(), alpha(0.05), &band).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert_eq!(s.verdict, Verdict::Healthy);

        let z = 1.7;
        let shifted: Vec<f64> = e
            .mean()
            .iter()
            .zip(e.variance())
            .map(|(m, v)| m + z * (2.0 * v).sqrt())
            .collect();
        let s = z_statistic(&e, &psd(shifted, 9), alpha(0.05), &band).unwrap();
        assert!(s.values.iter().all(|&v| (v - z).abs() < 1e-12));
        assert_eq!(s.verdict, Verdict::Healthy);
        assert_eq!(s.verdict_at(alpha(0.2)).unwrap(), Verdict::Damaged);
    }

    #[test]
    fn z_needs_two_baselines_and_skips_dead_bins() {
        let one = ensemble(&[vec![1.0, 2.0]], 9);
        assert!(matches!(
            z_statistic(&one, &psd(vec![1.0, 2.0], 9), alpha(0.05), &FrequencyBand::full()),
            Err(Error::Insufficient(_))
        ));
        let e = ensemble(&[vec![1.0, 2.0, 3.0], vec![1.0, 4.0, 3.0]], 9);
        let u = psd(vec![100.0, 3.0, 3.0], 9);
        let s = z_statistic(&e, &u, alpha(0.05), &FrequencyBand::full()).unwrap();
        assert_eq!(s.excluded, vec![0.0, 2.0]);
        assert_eq!(s.in_band, vec![1]);
        assert_eq!(s.verdict, Verdict::Healthy);
        assert!(matches!(
            z_statistic(&e, &u, alpha(0.05), &FrequencyBand::new(0.0, 0.0).unwrap()),
            Err(Error::ZeroVariance { freq_hz }) if freq_hz == 0.0
        ));
    }

    #[test]
    fn janapati_normalized_identities() {
        let y = [0.3, -1.2, 2.0, 0.7, -0.1, 0.05, 1.1, -0.9];
        let v = JanapatiVariant::Normalized;
        assert!(janapati_di(&y, &y, v).unwrap().abs() < 1e-14);
        let scaled: Vec<f64> = y.iter().map(|a| 3.5 * a).collect();
        assert!(janapati_di(&y, &scaled, v).unwrap().abs() < 1e-14);
        assert!(matches!(janapati_di(&[0.0; 4], &[1.0; 4], v), Err(Error::ZeroEnergy)));
        assert!(janapati_di(&y, &y[..4], v).is_err());
    }

    #[test]
    fn janapati_as_printed_refuses_zero_samples() {
        let y0 = [1.0, 0.0, 2.0];
        let yu = [1.0, 1.0, 1.0];
        assert!(matches!(
            janapati_di(&y0, &yu, JanapatiVariant::AsPrinted),
            Err(Error::ZeroBaselineSample { index: 1 })
        ));
        // Not zero for identical signals, unlike the normalized form.
        let y = [1.0, 2.0, -1.0];
        assert!(janapati_di(&y, &y, JanapatiVariant::AsPrinted).unwrap().abs() > 0.1);
    }

    #[test]
    fn qiu_identities() {
        let y = [0.3, -1.2, 2.0, 0.7];
        assert!(qiu_di(&y, &y).unwrap().abs() < 1e-15);
        assert!(qiu_di(&y, &y.map(|v| -2.0 * v)).unwrap().abs() < 1e-15);
        assert_eq!(qiu_di(&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(qiu_di(&y, &[0.0; 4]), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn experimental_bands() {
        let curves = vec![vec![1.0, 2.0, 3.0]; 5];
        let b = experimental_band(&curves, alpha(0.05), BandMethod::NormalMeanStd).unwrap();
        assert_eq!(b.lower, vec![1.0, 2.0, 3.0]);
        assert_eq!(b.upper, vec![1.0, 2.0, 3.0]);

        let samples = [5.0, 1.0, 3.0, 2.0, 4.0];
        let b = experimental_band_scalar(&samples, alpha(1.0), BandMethod::Percentile).unwrap();
        assert_eq!((b.lower[0], b.upper[0]), (3.0, 3.0));

        assert!(experimental_band_scalar(&[1.0], alpha(0.05), BandMethod::NormalMeanStd).is_err());
        assert!(experimental_band(&[], alpha(0.05), BandMethod::Percentile).is_err());
    }

    #[test]
    fn theoretical_band_edges() {
        let p = psd(vec![0.0, 1.0, 2.0], 10_000);
        let b = theoretical_band(&p, alpha(0.05)).unwrap();
        assert_eq!((b.lower[0], b.upper[0]), (0.0, 0.0));
        for k in 1..3 {
            let half = 0.5 * (b.upper[k] - b.lower[k]);
            assert!(half < 0.05 * p.values[k]);
            assert!(b.lower[k] <= p.values[k] && p.values[k] <= b.upper[k]);
        }
    }

    #[test]
    fn band_helpers() {
        let b = FrequencyBand::around_burst(250e3, 5.0);
        assert_eq!((b.lo_hz, b.hi_hz), (50e3, 450e3));
        assert!(FrequencyBand::new(3.0, 1.0).is_err());
        let p = psd(vec![1.0; 5], 1);
        let s = FrequencyBand::single_bin(&p, 2.4);
        assert_eq!(s.bins(&p.freqs), vec![2]);
        assert!(f_statistic(&p, &p, alpha(0.05), &FrequencyBand::new(10.0, 20.0).unwrap()).is_err());
    }

    #[test]
    fn damage_index_series() {
        let healthy = [0.0, 0.1, -0.1, 0.05, -0.05];
        let s = StatSeries::damage_index(Metric::QiuDi, 0.02, &healthy, alpha(0.05)).unwrap();
        assert_eq!(s.verdict, Verdict::Healthy);
        let s = StatSeries::damage_index(Metric::QiuDi, 1.0, &healthy, alpha(0.05)).unwrap();
        assert_eq!(s.verdict, Verdict::Damaged);
        assert!(s.score() > 10.0);
        assert!(StatSeries::damage_index(Metric::Z, 1.0, &healthy, alpha(0.05)).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("bogus".parse::<Metric>().is_err());
    }
}
