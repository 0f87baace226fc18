use rustfft::num_complex::Complex64;

use super::fft::{signed_wavenumber, Spectrum};
use super::{PeriodicGrid, ScalarField, VectorField3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Largest per-axis wavenumber a band-limited field may carry.
pub fn band_limit(n: usize) -> usize {
    n / 3
}

/// Applies `m(kx, ky, kz)` (physical wavenumbers) to every coefficient.
/// Nyquist indices receive k = 0 so odd operators keep fields real.
pub(crate) fn apply_multiplier(
    s: &Spectrum,
    grid: &PeriodicGrid,
    m: impl Fn(f64, f64, f64) -> Complex64,
) -> Spectrum {
    let n = s.n();
    let k0 = grid.k0();
    let kv: Vec<f64> = (0..n)
        .map(|i| {
            if i == n / 2 {
                0.0
            } else {
                signed_wavenumber(i, n) as f64 * k0
            }
        })
        .collect();
    let mut out = s.clone();
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let i = ix + n * (iy + n * iz);
                out.coeffs[i] *= m(kv[ix], kv[iy], kv[iz]);
            }
        }
    }
    out
}

pub(crate) fn derivative_spectrum(s: &Spectrum, grid: &PeriodicGrid, axis: Axis) -> Spectrum {
    apply_multiplier(s, grid, |kx, ky, kz| {
        let k = [kx, ky, kz][axis.index()];
        Complex64::new(0.0, k)
    })
}

/// Exact derivative of a band-limited field along one axis.
pub fn spectral_derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    derivative_spectrum(&Spectrum::of(f), f.grid(), axis).to_field(*f.grid())
}

pub fn gradient(f: &ScalarField) -> VectorField3 {
    let s = Spectrum::of(f);
    let g = *f.grid();
    VectorField3::from_array(Axis::ALL.map(|a| derivative_spectrum(&s, &g, a).to_field(g)))
}

/// All nine first derivatives, ordered (k, j) ↦ 3k + j for ∂_k v_j.
pub fn gradient_tensor(v: &VectorField3) -> Vec<ScalarField> {
    let g = *v.grid();
    let spectra: Vec<Spectrum> = v.comps().iter().map(Spectrum::of).collect();
    let mut out = Vec::with_capacity(9);
    for k in Axis::ALL {
        for s in &spectra {
            out.push(derivative_spectrum(s, &g, k).to_field(g));
        }
    }
    out
}

pub fn divergence(v: &VectorField3) -> ScalarField {
    let g = *v.grid();
    let mut acc = Spectrum::zeros(g.n());
    for a in Axis::ALL {
        let d = derivative_spectrum(&Spectrum::of(v.comp(a.index())), &g, a);
        for (x, y) in acc.coeffs.iter_mut().zip(&d.coeffs) {
            *x += y;
        }
    }
    acc.to_field(g)
}

pub fn curl(v: &VectorField3) -> VectorField3 {
    let g = *v.grid();
    let s: Vec<Spectrum> = v.comps().iter().map(Spectrum::of).collect();
    let d = |c: usize, a: Axis| derivative_spectrum(&s[c], &g, a);
    let diff = |p: Spectrum, q: Spectrum| {
        let mut out = p;
        for (x, y) in out.coeffs.iter_mut().zip(&q.coeffs) {
            *x -= y;
        }
        out.to_field(g)
    };
    VectorField3::from_array([
        diff(d(2, Axis::Y), d(1, Axis::Z)),
        diff(d(0, Axis::Z), d(2, Axis::X)),
        diff(d(1, Axis::X), d(0, Axis::Y)),
    ])
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    apply_multiplier(&Spectrum::of(f), &g, |kx, ky, kz| {
        Complex64::new(-(kx * kx + ky * ky + kz * kz), 0.0)
    })
    .to_field(g)
}

/// Leray projection onto solenoidal fields; the mean mode is kept.
pub fn project_divfree(v: &VectorField3) -> VectorField3 {
    let g = *v.grid();
    let n = g.n();
    let k0 = g.k0();
    let mut s: Vec<Spectrum> = v.comps().iter().map(Spectrum::of).collect();
    let kv: Vec<f64> = (0..n)
        .map(|i| {
            if i == n / 2 {
                0.0
            } else {
                signed_wavenumber(i, n) as f64 * k0
            }
        })
        .collect();
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let k = [kv[ix], kv[iy], kv[iz]];
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if k2 == 0.0 {
                    continue;
                }
                let i = ix + n * (iy + n * iz);
                let dot = (0..3).fold(Complex64::default(), |acc, c| acc + s[c].coeffs[i] * k[c]);
                for (c, sc) in s.iter_mut().enumerate() {
                    sc.coeffs[i] -= dot * (k[c] / k2);
                }
            }
        }
    }
    // Components whose only wavenumber sits on a Nyquist index were given
    // k = 0 above; drop them so the output stays exactly solenoidal.
    for sc in s.iter_mut() {
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    if ix == n / 2 || iy == n / 2 || iz == n / 2 {
                        sc.coeffs[ix + n * (iy + n * iz)] = Complex64::default();
                    }
                }
            }
        }
    }
    VectorField3::from_array([s[0].to_field(g), s[1].to_field(g), s[2].to_field(g)])
}

/// True when every coefficient with some |k_j| > n/3 is negligible relative
/// to the largest coefficient.
pub fn is_band_limited(f: &ScalarField) -> bool {
    spectrum_is_band_limited(&Spectrum::of(f))
}

pub(crate) fn spectrum_is_band_limited(s: &Spectrum) -> bool {
    let n = s.n();
    let lim = band_limit(n) as i64;
    let peak = s.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if peak == 0.0 {
        return true;
    }
    for iz in 0..n {
        let kz = signed_wavenumber(iz, n).abs();
        for iy in 0..n {
            let ky = signed_wavenumber(iy, n).abs();
            for ix in 0..n {
                let kx = signed_wavenumber(ix, n).abs();
                if (kx > lim || ky > lim || kz > lim)
                    && s.coeffs[ix + n * (iy + n * iz)].norm() > 1e-10 * peak
                {
                    return false;
                }
            }
        }
    }
    true
}

/// Smallest 2,3,5-smooth even size m ≥ n whose Nyquist exceeds
/// `degree · n/3`, so products of `degree` band-limited factors are
/// represented without aliasing.
pub fn padded_size(n: usize, degree: usize) -> usize {
    let need = degree * band_limit(n) * 2 + 2;
    let mut m = need.max(n);
    loop {
        if m % 2 == 0 && is_smooth(m) {
            return m;
        }
        m += 1;
    }
}

fn is_smooth(mut m: usize) -> bool {
    for p in [2, 3, 5] {
        while m % p == 0 {
            m /= p;
        }
    }
    m == 1
}
