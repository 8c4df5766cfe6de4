mod common;

use common::{brute_welch, Gauss};
use proptest::prelude::*;
use psdshm::{welch_psd, welch_psd_full, Signal, WelchConfig, WindowKind};

fn kind_name(kind: WindowKind) -> &'static str {
    match kind {
        WindowKind::Hamming => "hamming",
        WindowKind::Bartlett => "bartlett",
        WindowKind::Rectangular => "rectangular",
    }
}

/// Relative per-bin agreement, floored at 1e-12 of the peak for bins that
/// cancel to rounding noise.
fn assert_close(got: &[f64], want: &[f64], rel: f64) {
    assert_eq!(got.len(), want.len());
    let peak = want.iter().cloned().fold(0.0, f64::max);
    for (k, (g, w)) in got.iter().zip(want).enumerate() {
        let tol = rel * w.abs() + 1e-12 * peak;
        assert!((g - w).abs() <= tol, "bin {k}: {g} vs {w}");
    }
}

#[test]
fn matches_direct_dft_on_randomized_configs() {
    let mut g = Gauss::new(2024);
    let kinds = [WindowKind::Hamming, WindowKind::Bartlett, WindowKind::Rectangular];
    for trial in 0..50 {
        let seg = 8 + (g.uniform() * 120.0) as usize;
        let n = seg + (g.uniform() * 1500.0) as usize;
        let nfft = seg + (g.uniform() * 300.0) as usize;
        let overlap = [0.0, 0.25, 0.5, 0.75, 0.9][trial % 5];
        let kind = kinds[trial % 3];
        let detrend = trial % 4 != 0;
        let fs = 1.0 + g.uniform() * 1e7;
        let offset = 3.0 * g.next();
        let std = 1.0 + g.uniform();
        let x: Vec<f64> = g.vec(n, std).into_iter().map(|v| v + offset).collect();
        let config = WelchConfig {
            segment_len: seg,
            overlap,
            nfft,
            window: kind,
            detrend,
        };
        let est = welch_psd_full(&Signal::new(x.clone(), fs, "t").unwrap(), &config).unwrap();
        let (want, k) = brute_welch(&x, fs, seg, overlap, nfft, kind_name(kind), detrend);
        assert_eq!(est.segments, k, "trial {trial}");
        assert_close(&est.values, &want, 1e-10);
    }
}

#[test]
fn analysis_range_equals_slicing() {
    let mut g = Gauss::new(5);
    let x = g.vec(3000, 1.0);
    let config = WelchConfig::default();
    let s = Signal::new(x.clone(), 24e6, "t").unwrap();
    let ranged = welch_psd(&s, &config, 1200..1700).unwrap();
    let (want, k) = brute_welch(&x[1200..1700], 24e6, 100, 0.5, 2000, "hamming", true);
    assert_eq!(ranged.segments, k);
    assert_eq!(k, 9);
    assert_close(&ranged.values, &want, 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nonnegative_and_scale_equivariant(
        seed in any::<u64>(),
        n in 64usize..600,
        seg in 8usize..64,
        c in 0.01f64..100.0,
    ) {
        let x = Gauss::new(seed).vec(n, 1.0);
        let config = WelchConfig { segment_len: seg, nfft: 2 * seg, ..WelchConfig::default() };
        let a = welch_psd_full(&Signal::new(x.clone(), 1e3, "a").unwrap(), &config).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let b = welch_psd_full(&Signal::new(scaled, 1e3, "b").unwrap(), &config).unwrap();
        let peak = a.values.iter().cloned().fold(0.0, f64::max);
        for (p, q) in a.values.iter().zip(&b.values) {
            prop_assert!(*p >= 0.0);
            prop_assert!((q - c * c * p).abs() <= 1e-9 * c * c * (p + 1e-12 * peak));
        }
        prop_assert_eq!(a.segments, (n - seg) / config.step() + 1);
    }

    #[test]
    fn grid_spans_zero_to_nyquist(nfft in 16usize..4096, fs in 1.0f64..1e8) {
        let seg = 16.min(nfft);
        let config = WelchConfig { segment_len: seg, nfft, ..WelchConfig::default() };
        let est = welch_psd_full(&Signal::new(vec![0.0; 64], fs, "z").unwrap(), &config).unwrap();
        prop_assert_eq!(est.freqs.len(), nfft / 2 + 1);
        prop_assert_eq!(est.freqs[0], 0.0);
        let last = *est.freqs.last().unwrap();
        prop_assert!(last <= fs / 2.0 * (1.0 + 1e-12));
        prop_assert!(est.values.iter().all(|&v| v == 0.0));
    }
}
