//! Independent reference implementations used only by tests.
//!
//! Nothing here calls into the library's numerics: the Welch oracle is a
//! direct DFT, distribution functions come from numerical quadrature over
//! densities built on a Stirling-series log-gamma, and quantiles from
//! bisection on those CDFs.
#![allow(dead_code)]

use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Welch

pub fn window_coefficients(kind: &str, len: usize) -> Vec<f64> {
    let m = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let t = n as f64 / m;
            match kind {
                "hamming" => 0.54 - 0.46 * (2.0 * PI * t).cos(),
                "bartlett" => 1.0 - (2.0 * t - 1.0).abs(),
                "rectangular" => 1.0,
                _ => panic!("unknown window {kind}"),
            }
        })
        .collect()
}

/// Average of windowed one-sided periodograms by direct DFT.
pub fn brute_welch(
    x: &[f64],
    fs: f64,
    seg_len: usize,
    overlap: f64,
    nfft: usize,
    window: &str,
    detrend: bool,
) -> (Vec<f64>, usize) {
    let w = window_coefficients(window, seg_len);
    let hop = ((seg_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let k_segs = (x.len() - seg_len) / hop + 1;
    let mean = if detrend { x.iter().sum::<f64>() / x.len() as f64 } else { 0.0 };
    let bins = nfft / 2 + 1;
    let cos: Vec<f64> = (0..nfft).map(|j| (2.0 * PI * j as f64 / nfft as f64).cos()).collect();
    let sin: Vec<f64> = (0..nfft).map(|j| (2.0 * PI * j as f64 / nfft as f64).sin()).collect();
    let mut acc = vec![0.0; bins];
    for s in 0..k_segs {
        let seg: Vec<f64> = (0..seg_len).map(|n| (x[s * hop + n] - mean) * w[n]).collect();
        for (k, a) in acc.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in seg.iter().enumerate() {
                let j = (k * n) % nfft;
                re += v * cos[j];
                im -= v * sin[j];
            }
            *a += re * re + im * im;
        }
    }
    let energy: f64 = w.iter().map(|v| v * v).sum();
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let edge = k == 0 || (nfft.is_multiple_of(2) && k == nfft / 2);
            let factor = if edge { 1.0 } else { 2.0 };
            factor * a / (fs * k_segs as f64 * energy)
        })
        .collect();
    (psd, k_segs)
}

// ---------------------------------------------------------------------------
// Special functions and distributions

/// `ln Γ(x)` for `x > 0` by upward recurrence and the Stirling series.
pub fn stirling_lgamma(x: f64) -> f64 {
    let mut x = x;
    let mut shift = 0.0;
    while x < 20.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // the floor stops refinement once the estimate is at rounding level
    if depth == 0 || delta.abs() <= 15.0 * tol.max(1e-13 * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature over `[a, b]`, started on 64 panels.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = h / 6.0 * (flo + 4.0 * fmid + fhi);
            simpson_rec(f, lo, hi, flo, fmid, fhi, whole, tol / pieces as f64, 30)
        })
        .sum()
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `(cdf, sf)` of the standard normal.
pub fn normal_tails(z: f64) -> (f64, f64) {
    let a = z.abs();
    let outer = integrate(&normal_pdf, a, a + 40.0, 1e-17);
    let (lo, hi) = if z < 0.0 { (outer, 1.0 - outer) } else { (1.0 - outer, outer) };
    (lo, hi)
}

fn gamma_pdf(shape: f64) -> impl Fn(f64) -> f64 {
    let norm = stirling_lgamma(shape);
    move |y: f64| {
        if y <= 0.0 {
            if shape == 1.0 {
                1.0
            } else {
                0.0
            }
        } else {
            ((shape - 1.0) * y.ln() - y - norm).exp()
        }
    }
}

/// `(cdf, sf)` of chi-square with `dof` degrees of freedom, for `dof >= 2`.
pub fn chi2_tails(x: f64, dof: f64) -> (f64, f64) {
    let a = dof / 2.0;
    let y = x / 2.0;
    let pdf = gamma_pdf(a);
    if y <= a {
        let lower = integrate(&pdf, 0.0, y, 1e-16);
        (lower, 1.0 - lower)
    } else {
        let end = y + 60.0 * a.sqrt() + 80.0;
        let upper = integrate(&pdf, y, end, 1e-16);
        (1.0 - upper, upper)
    }
}

/// Closed form for even degrees of freedom:
/// `P(χ²_{2k} ≤ x) = 1 - e^{-x/2} Σ_{j<k} (x/2)^j / j!`.
pub fn chi2_cdf_even(x: f64, dof: usize) -> f64 {
    assert!(dof.is_multiple_of(2));
    let y = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..dof / 2 {
        term *= y / j as f64;
        sum += term;
    }
    1.0 - (-y).exp() * sum
}

/// `(cdf, sf)` of `F(d1, d2)` via the beta variable `t = d1 x / (d1 x + d2)`,
/// for `d1, d2 >= 2`.
pub fn f_tails(x: f64, d1: f64, d2: f64) -> (f64, f64) {
    let (a, b) = (d1 / 2.0, d2 / 2.0);
    let t = d1 * x / (d1 * x + d2);
    let norm = stirling_lgamma(a) + stirling_lgamma(b) - stirling_lgamma(a + b);
    let pdf = move |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            let edge = if u <= 0.0 { a } else { b };
            if edge == 1.0 {
                (-norm).exp()
            } else {
                0.0
            }
        } else {
            ((a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - norm).exp()
        }
    };
    let mode = if a + b > 2.0 { (a - 1.0) / (a + b - 2.0) } else { 0.5 };
    if t <= mode {
        let lower = integrate(&pdf, 0.0, t, 1e-16);
        (lower, 1.0 - lower)
    } else {
        let upper = integrate(&pdf, t, 1.0, 1e-16);
        (1.0 - upper, upper)
    }
}

/// Solves `cdf(x) = p` by bisection, working on the upper tail when
/// `p > 0.5`.
pub fn bisect_quantile(tails: &dyn Fn(f64) -> (f64, f64), p: f64, mut lo: f64, mut hi: f64) -> f64 {
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    let below = |x: f64| {
        let (c, s) = tails(x);
        if upper {
            s > target
        } else {
            c < target
        }
    };
    while !below(lo) {
        lo = if lo > 0.0 { lo / 2.0 } else { lo * 2.0 - 1.0 };
    }
    while below(hi) {
        hi = hi * 2.0 + 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * mid.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn normal_quantile_oracle(p: f64) -> f64 {
    bisect_quantile(&normal_tails, p, -10.0, 10.0)
}

pub fn chi2_quantile_oracle(p: f64, dof: f64) -> f64 {
    bisect_quantile(&|x| chi2_tails(x, dof), p, 1e-3, dof * 2.0 + 10.0)
}

pub fn f_quantile_oracle(p: f64, d1: f64, d2: f64) -> f64 {
    bisect_quantile(&|x| f_tails(x, d1, d2), p, 1e-3, 10.0)
}

// ---------------------------------------------------------------------------
// Goodness of fit and ranking

/// Kolmogorov–Smirnov distance of `samples` from `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at the 1 % level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Rank-based AUC: `P(damaged > healthy) + P(tie) / 2`.
pub fn mann_whitney_auc(healthy: &[f64], damaged: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &d in damaged {
        for &h in healthy {
            wins += if d > h {
                1.0
            } else if d == h {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (healthy.len() * damaged.len()) as f64
}

// ---------------------------------------------------------------------------
// Random data

/// Standard-normal draws from a seeded generator (Box–Muller on a
/// splitmix64 stream), independent of the library's noise source.
pub struct Gauss {
    state: u64,
    spare: Option<f64>,
}

impl Gauss {
    pub fn new(seed: u64) -> Self {
        Gauss { state: seed, spare: None }
    }

    pub fn uniform(&mut self) -> f64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        ((z >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let theta = 2.0 * PI * self.uniform();
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn vec(&mut self, n: usize, std: f64) -> Vec<f64> {
        (0..n).map(|_| std * self.next()).collect()
    }
}
