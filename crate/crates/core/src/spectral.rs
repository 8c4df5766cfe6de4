//! Windowing and Welch power spectral density estimation.
//!
//! The estimator averages `K` windowed periodograms of length `L` taken at a
//! hop of `D` samples, so that `N = L + D (K - 1)` samples are consumed:
//!
//! ```text
//! S(f_k) = T / (K L U) * sum_i | sum_t w[t] x̂[t + iD] exp(-j 2 pi k t / nfft) |^2
//! U      = (1/L) sum_t w[t]^2
//! ```
//!
//! where `T = 1 / f_s` and `x̂` is the signal with its sample mean removed.
//! The returned spectrum is one-sided: interior bins are doubled, DC and
//! Nyquist are not.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

/// A uniformly sampled record from one actuator-sensor path.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub label: String,
    /// Index in the original record where `samples[0]` sits.
    pub t0_offset: usize,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64, label: impl Into<String>) -> Result<Self> {
        let signal = Signal {
            samples,
            sample_rate,
            label: label.into(),
            t0_offset: 0,
        };
        signal.validate()?;
        Ok(signal)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::InvalidParameter("signal has no samples".into()));
        }
        if let Some(index) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Copy of `range` with metadata preserved and the offset advanced.
    pub fn slice(&self, range: Range<usize>) -> Result<Signal> {
        if range.start >= range.end || range.end > self.samples.len() {
            return Err(Error::Window(format!(
                "range {}..{} does not fit a {}-sample signal",
                range.start,
                range.end,
                self.samples.len()
            )));
        }
        Ok(Signal {
            samples: self.samples[range.clone()].to_vec(),
            sample_rate: self.sample_rate,
            label: self.label.clone(),
            t0_offset: self.t0_offset + range.start,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Hamming,
    Bartlett,
    Rectangular,
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Hamming => "hamming",
            WindowKind::Bartlett => "bartlett",
            WindowKind::Rectangular => "rectangular",
        })
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hamming" => Ok(WindowKind::Hamming),
            "bartlett" | "triangular" => Ok(WindowKind::Bartlett),
            "rectangular" | "rect" | "boxcar" => Ok(WindowKind::Rectangular),
            _ => Err(Error::UnsupportedWindow(s.to_string())),
        }
    }
}

/// Window coefficients with their mean-square normalization `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub kind: WindowKind,
    pub coefficients: Vec<f64>,
    pub power: f64,
}

/// Symmetric window of length `len` and its normalization `U = mean(w^2)`.
pub fn make_window(kind: WindowKind, len: usize) -> Result<Window> {
    if len < 2 {
        return Err(Error::InvalidParameter(format!(
            "window length must be at least 2, got {len}"
        )));
    }
    let m = (len - 1) as f64;
    let coefficients: Vec<f64> = (0..len)
        .map(|t| {
            let t = t as f64;
            match kind {
                WindowKind::Hamming => 0.54 - 0.46 * (2.0 * PI * t / m).cos(),
                WindowKind::Bartlett => 1.0 - (2.0 * t / m - 1.0).abs(),
                WindowKind::Rectangular => 1.0,
            }
        })
        .collect();
    let power = coefficients.iter().map(|w| w * w).sum::<f64>() / len as f64;
    Ok(Window {
        kind,
        coefficients,
        power,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    pub segment_len: usize,
    pub overlap: f64,
    pub nfft: usize,
    pub window: WindowKind,
    pub detrend: bool,
}

impl Default for WelchConfig {
    /// Hamming, `L = 100`, 50 % overlap, `nfft = 2000`, mean removed.
    fn default() -> Self {
        WelchConfig {
            segment_len: 100,
            overlap: 0.5,
            nfft: 2000,
            window: WindowKind::Hamming,
            detrend: true,
        }
    }
}

impl WelchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_len < 2 {
            return Err(Error::InvalidParameter(format!(
                "segment length must be at least 2, got {}",
                self.segment_len
            )));
        }
        if self.nfft < self.segment_len {
            return Err(Error::InvalidParameter(format!(
                "nfft ({}) must be at least the segment length ({})",
                self.nfft, self.segment_len
            )));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidParameter(format!(
                "overlap fraction must lie in [0, 1), got {}",
                self.overlap
            )));
        }
        if self.step() < 1 {
            return Err(Error::InvalidParameter(format!(
                "overlap {} leaves a zero hop for segment length {}",
                self.overlap, self.segment_len
            )));
        }
        Ok(())
    }

    /// Hop between successive segments, `D = round(L (1 - overlap))`.
    pub fn step(&self) -> usize {
        (self.segment_len as f64 * (1.0 - self.overlap)).round() as usize
    }

    /// Number of averaged segments for a record of `n` samples.
    pub fn segment_count(&self, n: usize) -> Result<usize> {
        self.validate()?;
        if n < self.segment_len {
            return Err(Error::SignalTooShort {
                needed: self.segment_len,
                available: n,
            });
        }
        Ok((n - self.segment_len) / self.step() + 1)
    }

    /// Length of the one-sided spectrum.
    pub fn bins(&self) -> usize {
        self.nfft / 2 + 1
    }

    pub fn resolution(&self, sample_rate: f64) -> f64 {
        sample_rate / self.nfft as f64
    }
}

/// One-sided Welch PSD on the grid `k f_s / nfft`, `k = 0..=nfft/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub values: Vec<f64>,
    pub freqs: Vec<f64>,
    pub config: WelchConfig,
    pub segments: usize,
    pub sample_rate: f64,
}

impl PsdEstimate {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.config.resolution(self.sample_rate)
    }

    /// Checks that two estimates share grid, configuration and segment count.
    pub fn check_comparable(&self, other: &PsdEstimate) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Mismatch(format!(
                "Welch configurations differ ({:?} vs {:?})",
                self.config, other.config
            )));
        }
        if self.sample_rate != other.sample_rate || self.values.len() != other.values.len() {
            return Err(Error::Mismatch("frequency grids differ".into()));
        }
        if self.segments != other.segments {
            return Err(Error::Mismatch(format!(
                "segment counts differ ({} vs {})",
                self.segments, other.segments
            )));
        }
        Ok(())
    }
}

/// Welch PSD of `signal.samples[range]`.
pub fn welch_psd(signal: &Signal, config: &WelchConfig, range: Range<usize>) -> Result<PsdEstimate> {
    config.validate()?;
    if !(signal.sample_rate.is_finite() && signal.sample_rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample rate must be positive, got {}",
            signal.sample_rate
        )));
    }
    if range.start > range.end || range.end > signal.samples.len() {
        return Err(Error::Window(format!(
            "analysis range {}..{} exceeds the {}-sample signal",
            range.start,
            range.end,
            signal.samples.len()
        )));
    }
    let data = &signal.samples[range.clone()];
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample {
            index: range.start + i,
        });
    }
    let segments = config.segment_count(data.len())?;
    let window = make_window(config.window, config.segment_len)?;

    let mean = if config.detrend {
        data.iter().sum::<f64>() / data.len() as f64
    } else {
        0.0
    };

    let nfft = config.nfft;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let mut buffer = vec![Complex::new(0.0, 0.0); nfft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let bins = config.bins();
    let mut acc = vec![0.0; bins];
    let step = config.step();

    for seg in 0..segments {
        let start = seg * step;
        for (slot, (&x, &w)) in buffer
            .iter_mut()
            .zip(data[start..start + config.segment_len].iter().zip(&window.coefficients))
        {
            *slot = Complex::new((x - mean) * w, 0.0);
        }
        for slot in buffer[config.segment_len..].iter_mut() {
            *slot = Complex::new(0.0, 0.0);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        for (a, c) in acc.iter_mut().zip(&buffer[..bins]) {
            *a += c.norm_sqr();
        }
    }

    let scale = 1.0 / (signal.sample_rate * segments as f64 * config.segment_len as f64 * window.power);
    let nyquist = if nfft.is_multiple_of(2) { Some(bins - 1) } else { None };
    let values = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let one_sided = if k == 0 || Some(k) == nyquist { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let df = config.resolution(signal.sample_rate);
    Ok(PsdEstimate {
        values,
        freqs: (0..bins).map(|k| k as f64 * df).collect(),
        config: *config,
        segments,
        sample_rate: signal.sample_rate,
    })
}

/// Welch PSD over the whole signal.
pub fn welch_psd_full(signal: &Signal, config: &WelchConfig) -> Result<PsdEstimate> {
    welch_psd(signal, config, 0..signal.samples.len())
}

/// Theoretical sampling moments of a Bartlett-window Welch estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchMoments {
    /// `S |W(0)|^2 / (2 pi L U)`: the mean formula evaluated at the window's
    /// peak response with the angular-frequency constant taken literally.
    pub mean_raw: f64,
    /// Mean after the window kernel is normalized to unit area; equals the
    /// true value for a locally flat spectrum.
    pub mean_normalized: f64,
    /// `(9/16) (L/N) S^2`.
    pub variance: f64,
}

/// Mean and variance of the estimator for a locally flat true spectrum
/// `true_psd`, given the record length `n`.
///
/// The variance approximation only holds for the Bartlett window, so other
/// windows are rejected.
pub fn welch_theoretical_moments(true_psd: f64, config: &WelchConfig, n: usize) -> Result<WelchMoments> {
    config.validate()?;
    if config.window != WindowKind::Bartlett {
        return Err(Error::InvalidParameter(format!(
            "the variance approximation requires a Bartlett window, got {}",
            config.window
        )));
    }
    if n < config.segment_len {
        return Err(Error::SignalTooShort {
            needed: config.segment_len,
            available: n,
        });
    }
    if !(true_psd.is_finite() && true_psd >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "true PSD must be finite and non-negative, got {true_psd}"
        )));
    }
    let window = make_window(config.window, config.segment_len)?;
    let l = config.segment_len as f64;
    let gain: f64 = window.coefficients.iter().sum();
    Ok(WelchMoments {
        mean_raw: true_psd * gain * gain / (2.0 * PI * l * window.power),
        mean_normalized: true_psd,
        variance: 9.0 / 16.0 * l / n as f64 * true_psd * true_psd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(samples: Vec<f64>, fs: f64) -> Signal {
        Signal::new(samples, fs, "test").unwrap()
    }

    #[test]
    fn rectangular_window_is_flat() {
        let w = make_window(WindowKind::Rectangular, 4).unwrap();
        assert_eq!(w.coefficients, vec![1.0; 4]);
        assert_eq!(w.power, 1.0);
    }

    #[test]
    fn bartlett_is_symmetric_with_zero_ends() {
        for len in [2, 3, 10, 101] {
            let w = make_window(WindowKind::Bartlett, len).unwrap();
            assert_eq!(w.coefficients[0], 0.0);
            assert_eq!(w.coefficients[len - 1], 0.0);
            for t in 0..len {
                assert!((w.coefficients[t] - w.coefficients[len - 1 - t]).abs() < 1e-15);
            }
            let u = w.coefficients.iter().map(|v| v * v).sum::<f64>() / len as f64;
            assert_eq!(u, w.power);
        }
        let w = make_window(WindowKind::Bartlett, 5).unwrap();
        assert_eq!(w.coefficients, vec![0.0, 0.5, 1.0, 0.5, 0.0]);
    }

    #[test]
    fn short_windows_and_unknown_kinds_are_rejected() {
        assert!(make_window(WindowKind::Hamming, 1).is_err());
        assert!(matches!(
            "kaiser".parse::<WindowKind>(),
            Err(Error::UnsupportedWindow(_))
        ));
        assert_eq!("Hamming".parse::<WindowKind>().unwrap(), WindowKind::Hamming);
    }

    #[test]
    fn segment_counts() {
        let cfg = WelchConfig::default();
        assert_eq!(cfg.step(), 50);
        assert_eq!(cfg.segment_count(500).unwrap(), 9);
        assert_eq!(cfg.segment_count(8000).unwrap(), 159);
        assert_eq!(cfg.segment_count(100).unwrap(), 1);
        assert!(cfg.segment_count(99).is_err());
        let zero = WelchConfig {
            overlap: 0.0,
            ..cfg
        };
        assert_eq!(zero.segment_count(500).unwrap(), 5);
    }

    #[test]
    fn config_validation() {
        let base = WelchConfig::default();
        assert!(WelchConfig { nfft: 50, ..base }.validate().is_err());
        assert!(WelchConfig { overlap: 1.0, ..base }.validate().is_err());
        assert!(WelchConfig {
            segment_len: 2,
            overlap: 0.9,
            nfft: 2,
            ..base
        }
        .validate()
        .is_err());
    }

    #[test]
    fn zero_signal_gives_zero_psd() {
        let s = signal(vec![0.0; 500], 24e6);
        let psd = welch_psd_full(&s, &WelchConfig::default()).unwrap();
        assert_eq!(psd.len(), 1001);
        assert!(psd.values.iter().all(|&v| v == 0.0));
        assert_eq!(psd.segments, 9);
        assert!((psd.resolution() - 12e3).abs() < 1e-9);
    }

    #[test]
    fn rejects_short_and_non_finite_input() {
        let s = signal(vec![1.0; 50], 1.0);
        assert!(matches!(
            welch_psd_full(&s, &WelchConfig::default()),
            Err(Error::SignalTooShort { .. })
        ));
        let bad = Signal {
            samples: vec![0.0, f64::NAN, 1.0, 2.0],
            sample_rate: 1.0,
            label: String::new(),
            t0_offset: 0,
        };
        let cfg = WelchConfig {
            segment_len: 2,
            nfft: 2,
            ..WelchConfig::default()
        };
        assert!(matches!(
            welch_psd_full(&bad, &cfg),
            Err(Error::NonFiniteSample { index: 1 })
        ));
    }

    #[test]
    fn single_rectangular_window_obeys_parseval() {
        let x: Vec<f64> = (0..64).map(|t| ((t * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let mean = x.iter().sum::<f64>() / 64.0;
        let x: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let fs = 1000.0;
        let cfg = WelchConfig {
            segment_len: 64,
            overlap: 0.0,
            nfft: 128,
            window: WindowKind::Rectangular,
            detrend: false,
        };
        let psd = welch_psd_full(&signal(x.clone(), fs), &cfg).unwrap();
        let power = psd.values.iter().sum::<f64>() * psd.resolution();
        let mean_square = x.iter().map(|v| v * v).sum::<f64>() / 64.0;
        assert!(((power - mean_square) / mean_square).abs() < 1e-8);
    }

    #[test]
    fn scale_equivariance() {
        let x: Vec<f64> = (0..300).map(|t| (t as f64 * 0.7).sin() + 0.1).collect();
        let cfg = WelchConfig {
            segment_len: 60,
            nfft: 64,
            ..WelchConfig::default()
        };
        let a = welch_psd_full(&signal(x.clone(), 10.0), &cfg).unwrap();
        let b = welch_psd_full(&signal(x.iter().map(|v| -3.0 * v).collect(), 10.0), &cfg).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((9.0 * u - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn odd_nfft_doubles_every_non_dc_bin() {
        let cfg = WelchConfig {
            segment_len: 5,
            overlap: 0.0,
            nfft: 5,
            window: WindowKind::Rectangular,
            detrend: false,
        };
        let x = vec![1.0, -2.0, 0.5, 3.0, -1.0];
        let psd = welch_psd_full(&signal(x.clone(), 1.0), &cfg).unwrap();
        assert_eq!(psd.len(), 3);
        let power: f64 = psd.values.iter().sum::<f64>() * psd.resolution();
        let mean_square = x.iter().map(|v| v * v).sum::<f64>() / 5.0;
        assert!((power - mean_square).abs() < 1e-12);
    }

    #[test]
    fn theoretical_moments() {
        let cfg = WelchConfig {
            window: WindowKind::Bartlett,
            ..WelchConfig::default()
        };
        let m = welch_theoretical_moments(0.0, &cfg, 8000).unwrap();
        assert_eq!((m.mean_raw, m.mean_normalized, m.variance), (0.0, 0.0, 0.0));
        let m1 = welch_theoretical_moments(1.0, &cfg, 8000).unwrap();
        assert!((m1.variance - 0.007_031_25).abs() < 1e-15);
        let m2 = welch_theoretical_moments(2.0, &cfg, 8000).unwrap();
        assert!((m2.variance - 4.0 * m1.variance).abs() < 1e-15);
        assert!(welch_theoretical_moments(1.0, &WelchConfig::default(), 8000).is_err());
    }
}
