//! Small numerical utilities: order-stable reductions, Gauss rules, line fits
//! and the special functions used by the spectral evaluators.

use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 4096;

/// Sum with a fixed chunking so the result does not depend on the number of
/// worker threads: chunk partials are always combined in index order.
pub fn det_sum(xs: &[f64]) -> f64 {
    let partials: Vec<f64> = xs
        .par_chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn det_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    det_sum(xs) / xs.len() as f64
}

/// Order-stable sum of `f(i)` for `i in 0..len`.
pub fn det_sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

pub fn l2_norm(xs: &[f64]) -> f64 {
    (det_sum_by(xs.len(), |i| xs[i] * xs[i]) / xs.len().max(1) as f64).sqrt()
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Gauss–Legendre nodes and weights on (a, b).
pub fn gauss_legendre(count: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..count {
        // Chebyshev-like starting guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (count as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(count, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(count, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid - half * x, half * w));
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// 7-point Gauss / 15-point Kronrod abscissae and weights on (-1, 1).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over (a, b) to absolute
/// tolerance `tol`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut pieces = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        let share = tol * (hi - lo) / (b - a);
        if err <= share.max(f64::EPSILON * val.abs()) || hi - lo < 1e-14 {
            total += val;
            pieces += 1;
        } else if depth >= 50 {
            return Err(Error::Numerical(format!(
                "adaptive quadrature did not converge on ({lo}, {hi})"
            )));
        } else {
            let m = 0.5 * (lo + hi);
            stack.push((m, hi, depth + 1));
            stack.push((lo, m, depth + 1));
        }
        if pieces > 1_000_000 {
            return Err(Error::Numerical(
                "adaptive quadrature exceeded its budget".into(),
            ));
        }
    }
    Ok(total)
}

/// Least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the fit residuals.
    pub rms_residual: f64,
    pub residuals: Vec<f64>,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| b - intercept - slope * a)
        .collect();
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    LineFit {
        slope,
        intercept,
        rms_residual,
        residuals,
    }
}

/// Slope of `log|y|` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    fit_line(&lx, &ly).slope
}

/// sin(z)/z.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// Spherical Bessel function j₁.
pub fn sph_j1(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        z / 3.0 * (1.0 - z2 / 10.0 * (1.0 - z2 / 28.0))
    } else {
        (z.sin() / z - z.cos()) / z
    }
}

/// SplitMix64 finalizer: a counter-based mixing function.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Uniform number in [0, 1) keyed on a sequence of words.
pub fn keyed_uniform(words: &[u64]) -> f64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &w in words {
        h = mix64(h ^ w);
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Geometric sequence of `count` values from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (r * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8, 0.0, 1.0);
        for p in 0..16 {
            let q: f64 = rule.iter().map(|(x, w)| w * x.powi(p)).sum();
            assert!(
                (q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14,
                "degree {p}: {q}"
            );
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singular_behaviour() {
        let v = integrate_adaptive(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn det_sum_matches_serial_for_short_inputs() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        assert_eq!(det_sum(&xs), xs.iter().sum::<f64>());
    }

    #[test]
    fn j1_series_joins_closed_form() {
        for &z in &[9e-4f64, 1.1e-3] {
            let closed = (z.sin() / z - z.cos()) / z;
            assert!((sph_j1(z) - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = fit_line(&x, &y);
        assert!((f.slope - 2.5).abs() < 1e-14 && f.rms_residual < 1e-14);
    }
}
