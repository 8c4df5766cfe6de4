//! Normal, chi-square and F distributions: CDFs, survival functions and
//! quantiles.
//!
//! Everything is built on two special functions, the regularized incomplete
//! gamma and beta functions, evaluated by power series and Lentz continued
//! fractions. Quantiles are found by a bracketed Newton iteration against the
//! exact CDF; above the median the upper tail is inverted instead so that
//! critical points such as `1 - 5e-7` keep full relative precision.

use crate::error::{Error, Result};
use std::f64::consts::{LN_2, PI};

/// Type I error (false-alarm) probability of a test.
///
/// Valid values lie in `(0, 1]`. The closed upper end admits the `alpha = 1`
/// endpoint of ROC sweeps, where every two-sided critical point collapses to
/// the median.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(Alpha(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Lower and upper tail probabilities `(alpha/2, 1 - alpha/2)`.
    pub fn two_sided(self) -> (f64, f64) {
        (self.0 / 2.0, 1.0 - self.0 / 2.0)
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const MAX_ITER: usize = 200_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Regularized lower and upper incomplete gamma functions `(P(a, x), Q(a, x))`.
pub fn incomplete_gamma(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let ln_front = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        let p = (sum.ln() + ln_front).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        // Lentz evaluation of the continued fraction for Q
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (h.ln() + ln_front).exp().min(1.0);
        (1.0 - q, q)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` together with its
/// complement `1 - I_x(a, b)`, each computed without cancellation.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let v = (ln_front.exp() * beta_continued_fraction(a, b, x) / a).min(1.0);
        (v, 1.0 - v)
    } else {
        let v = (ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b).min(1.0);
        (1.0 - v, v)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "probability must lie in (0, 1), got {p}"
        )))
    }
}

fn check_dof(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "degrees of freedom must be positive and finite, got {d}"
        )))
    }
}

// ---------------------------------------------------------------------------
// Normal

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    // erfc(|z|/sqrt 2) = Q(1/2, z^2/2)
    let (_, q) = incomplete_gamma(0.5, 0.5 * z * z);
    if z < 0.0 {
        0.5 * q
    } else {
        1.0 - 0.5 * q
    }
}

/// Standard normal upper tail `1 - Phi(z)`.
pub fn normal_sf(z: f64) -> f64 {
    normal_cdf(-z)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Rational approximation used only as a starting point (about 1e-9 accurate).
fn acklam_seed(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.024_25;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam_seed(1.0 - p)
    }
}

/// Standard normal quantile: the `z` with `Phi(z) = p`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_probability(p)?;
    if p > 0.5 {
        return Ok(-normal_quantile(1.0 - p)?);
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let seed = acklam_seed(p);
    Ok(invert(
        &Inversion {
            cdf: &normal_cdf,
            sf: &normal_sf,
            pdf: &normal_pdf,
            lower_bound: f64::NEG_INFINITY,
        },
        p,
        seed,
    ))
}

// ---------------------------------------------------------------------------
// Chi-square

pub fn chi2_cdf(x: f64, dof: f64) -> Result<f64> {
    check_dof(dof)?;
    Ok(incomplete_gamma(0.5 * dof, 0.5 * x.max(0.0)).0)
}

pub fn chi2_sf(x: f64, dof: f64) -> Result<f64> {
    check_dof(dof)?;
    Ok(incomplete_gamma(0.5 * dof, 0.5 * x.max(0.0)).1)
}

pub fn chi2_pdf(x: f64, dof: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match dof {
            d if d < 2.0 => f64::INFINITY,
            2.0 => 0.5,
            _ => 0.0,
        };
    }
    let k = 0.5 * dof;
    ((k - 1.0) * x.ln() - 0.5 * x - k * LN_2 - ln_gamma(k)).exp()
}

/// Chi-square quantile with `dof` degrees of freedom.
pub fn chi2_quantile(p: f64, dof: f64) -> Result<f64> {
    check_probability(p)?;
    check_dof(dof)?;
    // Wilson-Hilferty cube-root normal approximation as the seed
    let z = acklam_seed(p);
    let h = 2.0 / (9.0 * dof);
    let seed = (dof * (1.0 - h + z * h.sqrt()).powi(3)).max(1e-300);
    let cdf = move |x: f64| incomplete_gamma(0.5 * dof, 0.5 * x.max(0.0)).0;
    let sf = move |x: f64| incomplete_gamma(0.5 * dof, 0.5 * x.max(0.0)).1;
    let pdf = move |x: f64| chi2_pdf(x, dof);
    Ok(invert(
        &Inversion {
            cdf: &cdf,
            sf: &sf,
            pdf: &pdf,
            lower_bound: 0.0,
        },
        p,
        seed,
    ))
}

// ---------------------------------------------------------------------------
// F

fn f_check(d1: f64, d2: f64) -> Result<()> {
    check_dof(d1)?;
    check_dof(d2)
}

fn f_tails(x: f64, d1: f64, d2: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let num = d1 * x;
    let den = num + d2;
    if num <= d2 {
        incomplete_beta(0.5 * d1, 0.5 * d2, num / den)
    } else {
        let (sf, cdf) = incomplete_beta(0.5 * d2, 0.5 * d1, d2 / den);
        (cdf, sf)
    }
}

pub fn f_cdf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    f_check(d1, d2)?;
    Ok(f_tails(x, d1, d2).0)
}

pub fn f_sf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    f_check(d1, d2)?;
    Ok(f_tails(x, d1, d2).1)
}

pub fn f_pdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 && d1 < 2.0 {
            f64::INFINITY
        } else if x == 0.0 && d1 == 2.0 {
            1.0
        } else {
            0.0
        };
    }
    let ln = 0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
        - 0.5 * (d1 + d2) * (d1 * x / d2).ln_1p()
        - ln_beta(0.5 * d1, 0.5 * d2);
    ln.exp()
}

/// F quantile `f_p(d1, d2)`, defined by `Prob(F <= f_p) = p`.
pub fn f_quantile(p: f64, d1: f64, d2: f64) -> Result<f64> {
    check_probability(p)?;
    f_check(d1, d2)?;
    let cdf = move |x: f64| f_tails(x, d1, d2).0;
    let sf = move |x: f64| f_tails(x, d1, d2).1;
    let pdf = move |x: f64| f_pdf(x, d1, d2);
    Ok(invert(
        &Inversion {
            cdf: &cdf,
            sf: &sf,
            pdf: &pdf,
            lower_bound: 0.0,
        },
        p,
        1.0,
    ))
}

// ---------------------------------------------------------------------------
// Root finding

struct Inversion<'a> {
    cdf: &'a dyn Fn(f64) -> f64,
    sf: &'a dyn Fn(f64) -> f64,
    pdf: &'a dyn Fn(f64) -> f64,
    /// Infimum of the support; `-inf` for the normal.
    lower_bound: f64,
}

/// Solves `cdf(x) = p` by Newton steps kept inside a shrinking bracket.
fn invert(dist: &Inversion<'_>, p: f64, seed: f64) -> f64 {
    let upper = p > 0.5;
    let q = 1.0 - p;
    // g is increasing in x and has its root at the quantile
    let g = |x: f64| {
        if upper {
            q - (dist.sf)(x)
        } else {
            (dist.cdf)(x) - p
        }
    };

    let mut x = if seed.is_finite() { seed } else { 1.0 };
    if dist.lower_bound == 0.0 && x <= 0.0 {
        x = 1.0;
    }
    let g0 = g(x);
    if g0 == 0.0 {
        return x;
    }

    // Bracket the root by geometric expansion away from the seed.
    let (mut lo, mut hi) = (x, x);
    let (mut g_lo, mut g_hi) = (g0, g0);
    let mut step = x.abs().max(1.0) * 0.1;
    if g0 > 0.0 {
        while g_lo > 0.0 {
            lo = if dist.lower_bound == 0.0 {
                lo * 0.5
            } else {
                lo - step
            };
            step *= 2.0;
            g_lo = g(lo);
            if dist.lower_bound == 0.0 && lo < 1e-300 {
                return 0.0;
            }
        }
    } else {
        while g_hi < 0.0 {
            hi = if dist.lower_bound == 0.0 {
                hi * 2.0
            } else {
                hi + step
            };
            step *= 2.0;
            g_hi = g(hi);
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
    }

    let (mut x, mut gx) = (x, g0);
    for _ in 0..300 {
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let density = (dist.pdf)(x);
        let newton = x - gx / density;
        let next = if density > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            break;
        }
        x = next;
        gx = g(x);
    }
    x
}
