//! Field transforms that build each system's inputs: Elsässer variables,
//! pressure solves, the Helmholtz filter of the α-models, strain, and the
//! increment-regularity estimator with its helicity-conservation predictor.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{
    divergence, gradient_tensor, padded_size, signed_wavenumber, Field, PeriodicGrid, ScalarField,
    Spectrum, SymTensorField3, VectorField3,
};
use crate::increments::{ShiftEngine, ShiftMethod};
use crate::mollifier::SphereQuadrature;
use crate::numerics::{det_mean, fit_line};

/// u = v + b, h = v − b.
pub fn elsasser(v: &VectorField3, b: &VectorField3) -> Result<(VectorField3, VectorField3)> {
    v.grid().check_same(b.grid())?;
    Ok((v.add(b), v.sub(b)))
}

/// v = (u + h)/2, b = (u − h)/2.
pub fn elsasser_inverse(
    u: &VectorField3,
    h: &VectorField3,
) -> Result<(VectorField3, VectorField3)> {
    u.grid().check_same(h.grid())?;
    Ok((u.add(h).scale(0.5), u.sub(h).scale(0.5)))
}

fn check_solenoidal(name: &str, v: &VectorField3) -> Result<()> {
    let d = divergence(v).max_abs();
    if d > 1e-8 {
        return invalid(format!("{name} is not solenoidal (max |div| = {d:.3e})"));
    }
    Ok(())
}

/// Spectrum of the product f·g on the grid of f, computed alias-free on a
/// padded lattice and truncated at the grid Nyquist.
fn product_spectrum(f: &ScalarField, g: &ScalarField) -> Spectrum {
    let grid = *f.grid();
    let n = grid.n();
    let m = padded_size(n, 2);
    let fine = PeriodicGrid::new(m, grid.length()).expect("padded grid is valid");
    let a = Spectrum::of(f).resample(m).to_field(fine);
    let b = Spectrum::of(g).resample(m).to_field(fine);
    Spectrum::of(&a.zip_with(&b, |x, y| x * y)).resample(n)
}

/// Solves −ΔΠ = ∂_i∂_j F_ij with zero mean, given the spectra of F_ij.
fn solve_poisson(grid: PeriodicGrid, f: &[[Spectrum; 3]; 3]) -> ScalarField {
    let n = grid.n();
    let k0 = grid.k0();
    let mut out = Spectrum::zeros(n);
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                if ix == n / 2 || iy == n / 2 || iz == n / 2 {
                    continue;
                }
                let k = [ix, iy, iz].map(|i| signed_wavenumber(i, n) as f64 * k0);
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if k2 == 0.0 {
                    continue;
                }
                let idx = ix + n * (iy + n * iz);
                let mut s = Complex64::default();
                for i in 0..3 {
                    for j in 0..3 {
                        s -= f[i][j].coeffs[idx] * (k[i] * k[j]);
                    }
                }
                out.coeffs[idx] = s / k2;
            }
        }
    }
    out.to_field(grid)
}

/// Total pressure from −ΔΠ = ∂_i∂_j(v_iv_j − b_ib_j); b = None gives the
/// Euler pressure.
pub fn pressure_poisson(v: &VectorField3, b: Option<&VectorField3>) -> Result<ScalarField> {
    let grid = *v.grid();
    check_solenoidal("v", v)?;
    if let Some(b) = b {
        grid.check_same(b.grid())?;
        check_solenoidal("b", b)?;
    }
    let f: [[Spectrum; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = product_spectrum(v.comp(i), v.comp(j));
            if let Some(b) = b {
                let t = product_spectrum(b.comp(i), b.comp(j));
                s.coeffs
                    .iter_mut()
                    .zip(&t.coeffs)
                    .for_each(|(x, y)| *x -= y);
            }
            s
        })
    });
    Ok(solve_poisson(grid, &f))
}

/// The same pressure in Elsässer form, −ΔΠ = ∂_i∂_j(u_j h_i).
pub fn pressure_poisson_elsasser(u: &VectorField3, h: &VectorField3) -> Result<ScalarField> {
    let grid = *u.grid();
    grid.check_same(h.grid())?;
    check_solenoidal("u", u)?;
    check_solenoidal("h", h)?;
    let f: [[Spectrum; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| product_spectrum(u.comp(j), h.comp(i))));
    Ok(solve_poisson(grid, &f))
}

fn modal_map(v: &VectorField3, m: impl Fn(f64) -> f64) -> VectorField3 {
    let grid = *v.grid();
    let n = grid.n();
    let k0 = grid.k0();
    let comps = v.comps().clone().map(|c| {
        let mut s = Spectrum::of(&c);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let k = [ix, iy, iz].map(|i| signed_wavenumber(i, n) as f64 * k0);
                    s.coeffs[ix + n * (iy + n * iz)] *= m(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
                }
            }
        }
        s.to_field(grid)
    });
    VectorField3::new(comps[0].clone(), comps[1].clone(), comps[2].clone()).expect("shared grid")
}

/// u with (1 − α²Δ)u = v.
pub fn helmholtz_filter(v: &VectorField3, alpha: f64) -> Result<VectorField3> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return invalid(format!("alpha must be non-negative, got {alpha}"));
    }
    if alpha == 0.0 {
        return Ok(v.clone());
    }
    let a2 = alpha * alpha;
    Ok(modal_map(v, |k2| 1.0 / (1.0 + a2 * k2)))
}

/// (1 − α²Δ)u.
pub fn helmholtz_operator(u: &VectorField3, alpha: f64) -> VectorField3 {
    let a2 = alpha * alpha;
    modal_map(u, |k2| 1.0 + a2 * k2)
}

/// ½(∇v + ∇vᵀ).
pub fn strain(v: &VectorField3) -> SymTensorField3 {
    let d = gradient_tensor(v);
    let at = |i: usize, j: usize| &d[3 * j + i];
    let comps = crate::grid::SYM_INDEX.map(|(i, j)| {
        if i == j {
            at(i, i).clone()
        } else {
            at(i, j).add(at(j, i)).scale(0.5)
        }
    });
    SymTensorField3::new(comps).expect("shared grid")
}

/// Scaling of direction-averaged L^p increment norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityEstimate {
    pub exponent: f64,
    /// Standard error of the fitted slope.
    pub exponent_stderr: f64,
    pub norm_order: f64,
    pub fit_range: (f64, f64),
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    /// Log-slope of N(λ)/λ^exponent over the three smallest scales, a proxy
    /// for how the prefactor behaves as λ → 0. Reported, not thresholded.
    pub prefactor_trend: f64,
}

/// Fits N(λ) = (⟨ mean_x |δf(x;λζ)|^p ⟩_ζ)^{1/p} ∝ λ^exponent.
pub fn scaling_exponent(
    f: &Field,
    p: f64,
    lambdas: &[f64],
    sphere: &SphereQuadrature,
) -> Result<RegularityEstimate> {
    let grid = *f.grid();
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("norm order {p} must be at least 1"));
    }
    if lambdas.len() < 3 {
        return invalid("exponent fit needs at least 3 scales");
    }
    let (lo, hi) = (2.0 * grid.spacing(), grid.length() / 4.0);
    for &l in lambdas {
        if !(l > lo && l < hi) {
            return invalid(format!("scale {l} lies outside the fit range ({lo}, {hi})"));
        }
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("scales must be strictly increasing");
    }
    let comps: Vec<ScalarField> = f.components().into_iter().cloned().collect();
    let weights: Vec<f64> = if comps.len() == 6 {
        vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]
    } else {
        vec![1.0; comps.len()]
    };
    if comps
        .iter()
        .all(|c| c.sub(&ScalarField::constant(grid, c.data()[0])).max_abs() == 0.0)
    {
        return invalid("degenerate field: every increment vanishes");
    }
    let engine = ShiftEngine::new(grid, comps, ShiftMethod::FourierPhase);
    let mut norms = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let mut acc = 0.0;
        for (d, &w) in sphere.directions.iter().zip(&sphere.weights) {
            let inc = engine.increments([l * d[0], l * d[1], l * d[2]]);
            let mag: Vec<f64> = (0..grid.len())
                .map(|x| {
                    inc.iter()
                        .zip(&weights)
                        .map(|(c, wt)| wt * c[x] * c[x])
                        .sum::<f64>()
                        .sqrt()
                        .powf(p)
                })
                .collect();
            acc += w * det_mean(&mag);
        }
        norms.push(acc.powf(1.0 / p));
    }
    if norms.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Numerical(
            "increment norm vanished or overflowed".into(),
        ));
    }
    let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&x, &y);
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let exponent_stderr = if k > 2.0 {
        (fit.rms_residual.powi(2) * k / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let pre: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - fit.slope * b).collect();
    let prefactor_trend = fit_line(&x[..3], &pre[..3]).slope;
    Ok(RegularityEstimate {
        exponent: fit.slope,
        exponent_stderr,
        norm_order: p,
        fit_range: (lambdas[0], lambdas[lambdas.len() - 1]),
        residual: fit.rms_residual,
        lambdas: lambdas.to_vec(),
        norms,
        prefactor_trend,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationPrediction {
    pub alpha: f64,
    pub beta: f64,
    /// 2α + β.
    pub combined: f64,
    /// 2σ_α + σ_β from the fit standard errors.
    pub uncertainty: f64,
    pub conserved: bool,
    /// Single-snapshot evaluation; the time-integrability hypothesis is not checked.
    pub scope: String,
}

/// Helicity is predicted conserved iff 2α + β ≥ 1, with α the increment
/// exponent of v and β that of ω; (r₁, r₂) must satisfy 2/r₁ + 1/r₂ = 1.
pub fn conservation_predictor(
    est_v: &RegularityEstimate,
    est_omega: &RegularityEstimate,
    r1: f64,
    r2: f64,
) -> Result<ConservationPrediction> {
    if !(r1 > 1.0 && r1.is_finite() && r2 > 1.0 && r2.is_finite()) {
        return invalid(format!("exponents r1 = {r1}, r2 = {r2} must lie in (1, ∞)"));
    }
    if (2.0 / r1 + 1.0 / r2 - 1.0).abs() > 1e-9 {
        return invalid(format!(
            "2/r1 + 1/r2 = {} must equal 1",
            2.0 / r1 + 1.0 / r2
        ));
    }
    Ok(predict(
        est_v.exponent,
        est_omega.exponent,
        2.0 * est_v.exponent_stderr + est_omega.exponent_stderr,
    ))
}

/// The threshold rule alone. The inequality is closed; a 1e-12 slack absorbs
/// rounding in 2α + β.
pub fn predict(alpha: f64, beta: f64, uncertainty: f64) -> ConservationPrediction {
    let combined = 2.0 * alpha + beta;
    ConservationPrediction {
        alpha,
        beta,
        combined,
        uncertainty,
        conserved: combined >= 1.0 - 1e-12,
        scope: "snapshot criterion".into(),
    }
}
