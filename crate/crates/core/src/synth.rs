//! Deterministic synthetic fields: Gaussian spectra, closed-form flows,
//! random-phase fractional fields and cascade fields with a nonzero mean
//! transfer across scales.
//!
//! Randomness is keyed on (seed, stream, component, canonical mode), so outputs
//! do not depend on iteration order or thread count. Hermitian symmetry is
//! built in: each pair ±k draws once, at its canonical representative.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{
    band_limit, project_divfree, signed_wavenumber, PeriodicGrid, ScalarField, Spectrum,
    VectorField3,
};
use crate::numerics::{fit_line, geomspace, keyed_uniform, sinc};

/// Power-law band: shell energy E(k) ∝ k^{−slope} for k_min ≤ |k| ≤ k_max
/// (wavenumbers in units of the fundamental).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub slope: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub seed: u64,
    /// Root-mean-square of the output (of |v| for vector fields).
    pub amplitude: f64,
}

impl SpectrumSpec {
    pub fn new(slope: f64, k_min: f64, k_max: f64, seed: u64, amplitude: f64) -> Self {
        Self {
            slope,
            k_min,
            k_max,
            seed,
            amplitude,
        }
    }

    pub fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        let lim = band_limit(grid.n()) as f64;
        if !(self.k_min >= 1.0) {
            return invalid(format!("k_min = {} must be at least 1", self.k_min));
        }
        if !(self.k_max <= lim) {
            return invalid(format!(
                "k_max = {} exceeds the band limit n/3 = {lim}",
                self.k_max
            ));
        }
        if self.k_max < self.k_min {
            return invalid("k_max must not be below k_min");
        }
        if !(self.slope.is_finite() && self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return invalid("slope and amplitude must be finite, amplitude non-negative");
        }
        Ok(())
    }
}

// Random streams.
const GAUSS: u64 = 1;
const PHASE: u64 = 2;
const CASCADE: u64 = 3;

/// Mode list of an n³ spectrum: (index, signed integer wavenumber); Nyquist planes excluded.
fn modes(n: usize) -> impl Iterator<Item = (usize, [i64; 3])> {
    (0..n * n * n).filter_map(move |i| {
        let (ix, iy, iz) = (i % n, (i / n) % n, i / (n * n));
        if ix == n / 2 || iy == n / 2 || iz == n / 2 {
            return None;
        }
        Some((
            i,
            [
                signed_wavenumber(ix, n),
                signed_wavenumber(iy, n),
                signed_wavenumber(iz, n),
            ],
        ))
    })
}

fn norm(m: [i64; 3]) -> f64 {
    ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt()
}

/// Canonical member of {k, −k} and whether k is it.
fn canonical(m: [i64; 3]) -> ([i64; 3], bool) {
    let pos = (m[2], m[1], m[0]) > (0, 0, 0);
    if pos {
        (m, true)
    } else {
        ([-m[0], -m[1], -m[2]], false)
    }
}

fn key(seed: u64, stream: u64, comp: u64, m: [i64; 3], draw: u64) -> f64 {
    keyed_uniform(&[
        seed,
        stream,
        comp,
        m[0] as u64,
        m[1] as u64,
        m[2] as u64,
        draw,
    ])
}

/// Unit-variance complex normal at the canonical mode, conjugated for −k.
fn gaussian_coefficient(seed: u64, stream: u64, comp: u64, m: [i64; 3]) -> Complex64 {
    let (c, is) = canonical(m);
    let u1 = key(seed, stream, comp, c, 0).max(f64::MIN_POSITIVE);
    let u2 = key(seed, stream, comp, c, 1);
    let z = Complex64::from_polar((-u1.ln()).sqrt(), 2.0 * PI * u2);
    if is {
        z
    } else {
        z.conj()
    }
}

fn phase_coefficient(seed: u64, stream: u64, comp: u64, m: [i64; 3]) -> Complex64 {
    let (c, is) = canonical(m);
    let z = Complex64::from_polar(1.0, 2.0 * PI * key(seed, stream, comp, c, 0));
    if is {
        z
    } else {
        z.conj()
    }
}

/// Per-mode amplitude for a shell spectrum k^{−slope}: |c_k|² ∝ |k|^{−slope−2}.
fn mode_amplitude(slope: f64, k: f64) -> f64 {
    k.powf(-0.5 * (slope + 2.0))
}

fn power(s: &Spectrum) -> f64 {
    s.coeffs.iter().map(|c| c.norm_sqr()).sum()
}

fn scale_to(spectra: &mut [Spectrum], amplitude: f64) {
    let total: f64 = spectra.iter().map(power).sum();
    let f = if total > 0.0 {
        amplitude / total.sqrt()
    } else {
        0.0
    };
    for s in spectra {
        s.coeffs.iter_mut().for_each(|c| *c *= f);
    }
}

fn banded_spectrum(grid: &PeriodicGrid, spec: &SpectrumSpec, comp: u64) -> Spectrum {
    let n = grid.n();
    let mut s = Spectrum::zeros(n);
    for (i, m) in modes(n) {
        let k = norm(m);
        if k >= spec.k_min && k <= spec.k_max {
            s.coeffs[i] =
                gaussian_coefficient(spec.seed, GAUSS, comp, m) * mode_amplitude(spec.slope, k);
        }
    }
    s
}

/// Gaussian random scalar with shell spectrum ∝ k^{−slope}; zero mean.
pub fn gaussian_scalar(grid: PeriodicGrid, spec: &SpectrumSpec) -> Result<ScalarField> {
    spec.validate(&grid)?;
    let mut s = [banded_spectrum(&grid, spec, 0)];
    scale_to(&mut s, spec.amplitude);
    Ok(s[0].to_field(grid))
}

/// Gaussian solenoidal vector field with shell spectrum ∝ k^{−slope}.
pub fn gaussian_divfree(grid: PeriodicGrid, spec: &SpectrumSpec) -> Result<VectorField3> {
    spec.validate(&grid)?;
    let raw =
        VectorField3::from_array([0, 1, 2].map(|c| banded_spectrum(&grid, spec, c).to_field(grid)));
    let v = project_divfree(&raw);
    let rms = v.magnitude().l2();
    Ok(if rms > 0.0 {
        v.scale(spec.amplitude / rms)
    } else {
        v
    })
}

/// (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x) in units of the fundamental.
pub fn abc_flow(grid: PeriodicGrid, a: f64, b: f64, c: f64) -> VectorField3 {
    let k = grid.k0();
    VectorField3::from_fn(grid, |x, y, z| {
        let (x, y, z) = (k * x, k * y, k * z);
        [
            a * z.sin() + c * y.cos(),
            b * x.sin() + a * z.cos(),
            c * y.sin() + b * x.cos(),
        ]
    })
}

/// (sin x cos y cos z, −cos x sin y cos z, 0).
pub fn taylor_green(grid: PeriodicGrid) -> VectorField3 {
    let k = grid.k0();
    VectorField3::from_fn(grid, |x, y, z| {
        let (x, y, z) = (k * x, k * y, k * z);
        [
            x.sin() * y.cos() * z.cos(),
            -x.cos() * y.sin() * z.cos(),
            0.0,
        ]
    })
}

/// Window over which fractional fields are calibrated and exponents are fitted.
pub fn default_fit_window(grid: &PeriodicGrid) -> Vec<f64> {
    geomspace(4.0 * grid.spacing(), grid.length() / 8.0, 6)
}

/// Fitted Hölder exponent of a random-phase field with slope `p`, from the exact
/// direction-averaged second-order structure function.
fn predicted_exponent(grid: &PeriodicGrid, p: f64, lambdas: &[f64]) -> f64 {
    let n = grid.n();
    let kmax = band_limit(n) as i64;
    let mut shells = vec![0usize; (3 * kmax * kmax + 1) as usize];
    for mz in -kmax..=kmax {
        for my in -kmax..=kmax {
            for mx in -kmax..=kmax {
                let s2 = mx * mx + my * my + mz * mz;
                if s2 > 0 && s2 <= kmax * kmax {
                    shells[s2 as usize] += 1;
                }
            }
        }
    }
    let k0 = grid.k0();
    let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let s2: f64 = shells
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(s, &c)| {
                    let k = (s as f64).sqrt();
                    c as f64 * mode_amplitude(p, k).powi(2) * (1.0 - sinc(k0 * k * l))
                })
                .sum();
            0.5 * s2.ln()
        })
        .collect();
    fit_line(&x, &y).slope
}

/// Spectral slope whose random-phase realization has the requested Hölder
/// exponent over [`default_fit_window`].
pub fn fractional_slope(grid: &PeriodicGrid, holder: f64) -> Result<f64> {
    if !(holder > 0.0 && holder < 1.0) {
        return invalid(format!("Hölder target {holder} must lie in (0, 1)"));
    }
    if grid.n() < 64 {
        return invalid("fractional fields need n ≥ 64 for a usable fit window");
    }
    let lambdas = default_fit_window(grid);
    let (mut lo, mut hi) = (1.0, 7.0);
    if predicted_exponent(grid, lo, &lambdas) > holder
        || predicted_exponent(grid, hi, &lambdas) < holder
    {
        return invalid(format!(
            "Hölder target {holder} is not reachable on n = {}",
            grid.n()
        ));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if predicted_exponent(grid, mid, &lambdas) < holder {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn fractional_spectrum(grid: &PeriodicGrid, slope: f64, seed: u64, comp: u64) -> Spectrum {
    let n = grid.n();
    let kmax = band_limit(n) as f64;
    let mut s = Spectrum::zeros(n);
    for (i, m) in modes(n) {
        let k = norm(m);
        if k > 0.0 && k <= kmax {
            s.coeffs[i] = phase_coefficient(seed, PHASE, comp, m) * mode_amplitude(slope, k);
        }
    }
    s
}

/// Deterministic-amplitude, random-phase scalar with unit rms and the given
/// increment Hölder exponent.
pub fn fractional_scalar(grid: PeriodicGrid, holder: f64, seed: u64) -> Result<ScalarField> {
    let slope = fractional_slope(&grid, holder)?;
    let mut s = [fractional_spectrum(&grid, slope, seed, 0)];
    scale_to(&mut s, 1.0);
    Ok(s[0].to_field(grid))
}

/// Solenoidal counterpart of [`fractional_scalar`]; rms of |v| is 1.
pub fn fractional_divfree(grid: PeriodicGrid, holder: f64, seed: u64) -> Result<VectorField3> {
    let slope = fractional_slope(&grid, holder)?;
    let raw = VectorField3::from_array(
        [0, 1, 2].map(|c| fractional_spectrum(&grid, slope, seed, c).to_field(grid)),
    );
    let v = project_divfree(&raw);
    let rms = v.magnitude().l2();
    Ok(v.scale(1.0 / rms))
}

/// Shell-averaged energy spectrum: entry k holds Σ ½|c_m|² over round(|m|) = k.
pub fn shell_spectrum(comps: &[&ScalarField]) -> Vec<f64> {
    let n = comps[0].grid().n();
    let mut e = vec![0.0; n];
    for f in comps {
        let s = Spectrum::of(f);
        for (i, m) in modes(n) {
            let k = norm(m).round() as usize;
            if k < e.len() {
                e[k] += 0.5 * s.coeffs[i].norm_sqr();
            }
        }
    }
    e
}

/// Cascade construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    /// Target Hölder exponent; the shell spectrum slope is 2·holder + 1.
    pub holder: f64,
    /// Energy fraction of each shell slaved to the advection of coarser shells.
    pub correlated: f64,
    pub seed: u64,
    pub amplitude: f64,
}

impl CascadeSpec {
    pub fn new(holder: f64, seed: u64) -> Self {
        Self {
            holder,
            correlated: 0.5,
            seed,
            amplitude: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.holder > 0.0 && self.holder < 1.0) {
            return invalid(format!("Hölder target {} must lie in (0, 1)", self.holder));
        }
        if !(0.0..=1.0).contains(&self.correlated) {
            return invalid("correlated fraction must lie in [0, 1]");
        }
        Ok(())
    }

    fn slope(&self) -> f64 {
        2.0 * self.holder + 1.0
    }
}

/// Shell edges √2^j up to the band limit; the last shell is closed at n/3.
fn shell_edges(n: usize) -> Vec<f64> {
    let kmax = band_limit(n) as f64;
    let mut e = vec![1.0];
    while *e.last().unwrap() * 2f64.sqrt() < kmax {
        e.push(e.last().unwrap() * 2f64.sqrt());
    }
    e.push(kmax + 1e-9);
    e
}

/// Spectral workspace for shell-by-shell construction.
struct Shells {
    grid: PeriodicGrid,
    /// Mode indices and wavenumbers per shell.
    members: Vec<Vec<(usize, [i64; 3])>>,
}

impl Shells {
    fn new(grid: PeriodicGrid) -> Self {
        let n = grid.n();
        let edges = shell_edges(n);
        let mut members = vec![Vec::new(); edges.len() - 1];
        for (i, m) in modes(n) {
            let k = norm(m);
            if k == 0.0 {
                continue;
            }
            if let Some(s) = edges.windows(2).position(|w| k >= w[0] && k < w[1]) {
                members[s].push((i, m));
            }
        }
        Self { grid, members }
    }

    fn count(&self) -> usize {
        self.members.len()
    }

    /// Target shell energy Σ |c|² from the k^{−slope} law.
    fn energy(&self, s: usize, slope: f64) -> f64 {
        self.members[s]
            .iter()
            .map(|&(_, m)| mode_amplitude(slope, norm(m)).powi(2))
            .sum()
    }

    /// −a·∇c for each component of c, evaluated exactly on the lattice (2/3 rule).
    fn advection(&self, a: &[Spectrum], c: &[Spectrum]) -> Vec<Spectrum> {
        let g = self.grid;
        let k0 = g.k0();
        let af: Vec<Vec<f64>> = a.iter().map(|s| s.to_field(g).into_data()).collect();
        c.iter()
            .map(|cs| {
                let mut acc = vec![0.0; g.len()];
                for (d, ad) in af.iter().enumerate() {
                    let mut ds = Spectrum::zeros(g.n());
                    for (i, m) in modes(g.n()) {
                        ds.coeffs[i] = cs.coeffs[i] * Complex64::new(0.0, k0 * m[d] as f64);
                    }
                    let df = ds.to_field(g);
                    acc.iter_mut()
                        .zip(ad.iter().zip(df.data()))
                        .for_each(|(o, (x, y))| *o -= x * y);
                }
                Spectrum::of(&ScalarField::from_vec_unchecked(g, acc))
            })
            .collect()
    }

    /// Restriction of `w` to shell s, made solenoidal when it has three components.
    fn restrict(&self, s: usize, w: &[Spectrum]) -> Vec<Vec<Complex64>> {
        let mut out: Vec<Vec<Complex64>> = w
            .iter()
            .map(|ws| self.members[s].iter().map(|&(i, _)| ws.coeffs[i]).collect())
            .collect();
        if out.len() == 3 {
            for (j, &(_, m)) in self.members[s].iter().enumerate() {
                let k2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
                let dot = (0..3).fold(Complex64::default(), |acc, c| acc + out[c][j] * m[c] as f64);
                for c in 0..3 {
                    out[c][j] -= dot * (m[c] as f64 / k2);
                }
            }
        }
        out
    }

    fn gaussian(&self, s: usize, ncomp: usize, seed: u64, stream: u64) -> Vec<Vec<Complex64>> {
        let g: Vec<Spectrum> = (0..ncomp)
            .map(|c| {
                let mut sp = Spectrum::zeros(self.grid.n());
                for &(i, m) in &self.members[s] {
                    sp.coeffs[i] = gaussian_coefficient(seed, stream, c as u64, m);
                }
                sp
            })
            .collect();
        self.restrict(s, &g)
    }

    /// Shell content √(fE)·ŵ + √((1−f)E)·ĝ⊥ with both parts normalized and ĝ⊥ ⟂ ŵ.
    fn blend(
        &self,
        w: Vec<Vec<Complex64>>,
        gauss: Vec<Vec<Complex64>>,
        energy: f64,
        f: f64,
    ) -> Vec<Vec<Complex64>> {
        let inner = |x: &[Vec<Complex64>], y: &[Vec<Complex64>]| -> Complex64 {
            x.iter()
                .zip(y)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q.conj()))
                .sum()
        };
        let ww = inner(&w, &w).re;
        let f = if ww > 0.0 { f } else { 0.0 };
        let mut g = gauss;
        if ww > 0.0 {
            let proj = inner(&g, &w) / ww;
            for (gc, wc) in g.iter_mut().zip(&w) {
                gc.iter_mut().zip(wc).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let gg = inner(&g, &g).re;
        let cw = if ww > 0.0 {
            (f * energy / ww).sqrt()
        } else {
            0.0
        };
        let cg = if gg > 0.0 {
            ((1.0 - f) * energy / gg).sqrt()
        } else {
            0.0
        };
        w.iter()
            .zip(&g)
            .map(|(wc, gc)| wc.iter().zip(gc).map(|(a, b)| a * cw + b * cg).collect())
            .collect()
    }

    fn write(&self, s: usize, target: &mut [Spectrum], content: &[Vec<Complex64>]) {
        for (t, c) in target.iter_mut().zip(content) {
            for (&(i, _), v) in self.members[s].iter().zip(c) {
                t.coeffs[i] = *v;
            }
        }
    }
}

fn fields_of(grid: PeriodicGrid, s: &[Spectrum]) -> Vec<ScalarField> {
    s.iter().map(|x| x.to_field(grid)).collect()
}

fn vector_of(grid: PeriodicGrid, s: &[Spectrum]) -> VectorField3 {
    let f = fields_of(grid, s);
    VectorField3::from_array([f[0].clone(), f[1].clone(), f[2].clone()])
}

fn check_cascade_grid(grid: &PeriodicGrid) -> Result<()> {
    if band_limit(grid.n()) < 4 {
        return invalid("cascade fields need n ≥ 12");
    }
    Ok(())
}

/// Solenoidal velocity whose finer shells are partly slaved to the
/// self-advection of coarser ones, giving a downscale energy transfer.
pub fn cascade_velocity(grid: PeriodicGrid, spec: &CascadeSpec) -> Result<VectorField3> {
    spec.validate()?;
    check_cascade_grid(&grid)?;
    let sh = Shells::new(grid);
    let mut v: Vec<Spectrum> = (0..3).map(|_| Spectrum::zeros(grid.n())).collect();
    for s in 0..sh.count() {
        let w = sh.restrict(s, &sh.advection(&v, &v));
        let g = sh.gaussian(s, 3, spec.seed, CASCADE);
        let c = sh.blend(w, g, sh.energy(s, spec.slope()), spec.correlated);
        sh.write(s, &mut v, &c);
    }
    scale_to(&mut v, spec.amplitude);
    Ok(vector_of(grid, &v))
}

/// Cascade velocity and a scalar cascading under it.
pub fn cascade_scalar_pair(
    grid: PeriodicGrid,
    spec: &CascadeSpec,
) -> Result<(VectorField3, ScalarField)> {
    let v = cascade_velocity(grid, spec)?;
    let sh = Shells::new(grid);
    let vs: Vec<Spectrum> = v.comps().iter().map(Spectrum::of).collect();
    let mut theta = vec![Spectrum::zeros(grid.n())];
    for s in 0..sh.count() {
        let lower: Vec<Spectrum> = vs.iter().map(|x| below(&sh, x, s)).collect();
        let w = sh.restrict(s, &sh.advection(&lower, &theta));
        let g = sh.gaussian(s, 1, spec.seed, CASCADE + 10);
        let c = sh.blend(w, g, sh.energy(s, spec.slope()), spec.correlated);
        sh.write(s, &mut theta, &c);
    }
    scale_to(&mut theta, spec.amplitude);
    Ok((v, theta[0].to_field(grid)))
}

/// Modes of `x` in shells below s.
fn below(sh: &Shells, x: &Spectrum, s: usize) -> Spectrum {
    let mut out = Spectrum::zeros(x.n());
    for shell in &sh.members[..s] {
        for &(i, _) in shell {
            out.coeffs[i] = x.coeffs[i];
        }
    }
    out
}

/// Elsässer pair (u, h) built jointly: finer shells of u are partly slaved to
/// −h·∇u and those of h to −u·∇h.
pub fn cascade_elsasser(
    grid: PeriodicGrid,
    spec: &CascadeSpec,
) -> Result<(VectorField3, VectorField3)> {
    spec.validate()?;
    check_cascade_grid(&grid)?;
    let sh = Shells::new(grid);
    let mut u: Vec<Spectrum> = (0..3).map(|_| Spectrum::zeros(grid.n())).collect();
    let mut h: Vec<Spectrum> = (0..3).map(|_| Spectrum::zeros(grid.n())).collect();
    let e = |s| sh.energy(s, spec.slope());
    for s in 0..sh.count() {
        let wu = sh.restrict(s, &sh.advection(&h, &u));
        let wh = sh.restrict(s, &sh.advection(&u, &h));
        let cu = sh.blend(
            wu,
            sh.gaussian(s, 3, spec.seed, CASCADE + 20),
            e(s),
            spec.correlated,
        );
        let ch = sh.blend(
            wh,
            sh.gaussian(s, 3, spec.seed, CASCADE + 30),
            e(s),
            spec.correlated,
        );
        sh.write(s, &mut u, &cu);
        sh.write(s, &mut h, &ch);
    }
    scale_to(&mut u, spec.amplitude);
    scale_to(&mut h, spec.amplitude);
    Ok((vector_of(grid, &u), vector_of(grid, &h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{curl, divergence, is_band_limited};

    #[test]
    fn gaussian_fields_are_deterministic_and_band_limited() {
        let g = PeriodicGrid::cube(16).unwrap();
        let spec = SpectrumSpec::new(5.0 / 3.0, 1.0, 5.0, 7, 1.0);
        let a = gaussian_scalar(g, &spec).unwrap();
        assert_eq!(a, gaussian_scalar(g, &spec).unwrap());
        assert!(is_band_limited(&a));
        assert!(a.mean().abs() < 1e-14);
        assert!((a.l2() - 1.0).abs() < 1e-12);
        let zero = gaussian_scalar(
            g,
            &SpectrumSpec {
                amplitude: 0.0,
                ..spec
            },
        )
        .unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn band_violation_is_rejected() {
        let g = PeriodicGrid::cube(16).unwrap();
        assert!(gaussian_scalar(g, &SpectrumSpec::new(2.0, 1.0, 6.0, 1, 1.0)).is_err());
        assert!(gaussian_scalar(g, &SpectrumSpec::new(2.0, 0.5, 4.0, 1, 1.0)).is_err());
    }

    #[test]
    fn divfree_generator_is_solenoidal() {
        let g = PeriodicGrid::cube(16).unwrap();
        let v = gaussian_divfree(g, &SpectrumSpec::new(2.0, 1.0, 5.0, 3, 1.0)).unwrap();
        assert!(divergence(&v).max_abs() <= 1e-12);
    }

    #[test]
    fn closed_form_flows() {
        let g = PeriodicGrid::cube(16).unwrap();
        let abc = abc_flow(g, 1.0, 1.0, 1.0);
        assert!(divergence(&abc).max_abs() <= 1e-14);
        let c = curl(&abc);
        for i in 0..3 {
            assert!(c.comp(i).sub(abc.comp(i)).max_abs() <= 1e-12);
        }
        assert_eq!(abc_flow(g, 0.0, 0.0, 0.0).magnitude().max_abs(), 0.0);
        let tg = taylor_green(g);
        assert!(divergence(&tg).max_abs() <= 1e-14);
        assert_eq!(tg.comp(2).max_abs(), 0.0);
    }

    #[test]
    fn fractional_slope_increases_with_target() {
        let g = PeriodicGrid::cube(64).unwrap();
        let a = fractional_slope(&g, 0.3).unwrap();
        let b = fractional_slope(&g, 0.5).unwrap();
        assert!(b > a);
        assert!(fractional_slope(&g, 1.2).is_err());
    }

    #[test]
    fn cascade_shells_cover_the_band() {
        let g = PeriodicGrid::cube(24).unwrap();
        let sh = Shells::new(g);
        let total: usize = sh.members.iter().map(Vec::len).sum();
        let direct = modes(24)
            .filter(|&(_, m)| norm(m) > 0.0 && norm(m) <= 8.0)
            .count();
        assert_eq!(total, direct);
    }
}
