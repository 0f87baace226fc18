//! Shifted fields f(x+ℓ) and increments δf(x;ℓ) = f(x+ℓ) − f(x) for
//! arbitrary real displacements.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{
    signed_wavenumber, Fft3, Field, PeriodicGrid, ScalarField, Sparsity, VectorField3,
};

/// Modes this far below a packed spectrum's peak are transform round-off and
/// are left out of the phase rotation.
const SPARSE_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMethod {
    /// Phase rotation of Fourier coefficients; exact on band-limited fields.
    #[default]
    FourierPhase,
    /// Trilinear interpolation between lattice points.
    Trilinear,
}

/// Shifts a fixed set of scalar components by many displacements, sharing
/// one forward transform per pair of components.
pub struct ShiftEngine {
    grid: PeriodicGrid,
    comps: Vec<ScalarField>,
    method: ShiftMethod,
    // Normalized spectra of (c[2i] + i·c[2i+1]) and their retained modes.
    packed: Vec<Vec<Complex64>>,
    support: Vec<Sparsity>,
    constant: Vec<bool>,
}

impl ShiftEngine {
    pub fn new(grid: PeriodicGrid, comps: Vec<ScalarField>, method: ShiftMethod) -> Self {
        let packed = match method {
            ShiftMethod::FourierPhase => {
                let fft = Fft3::get(grid.n());
                let scale = 1.0 / grid.len() as f64;
                comps
                    .chunks(2)
                    .map(|pair| {
                        let re = pair[0].data();
                        let mut buf: Vec<Complex64> = match pair.get(1) {
                            Some(im) => re
                                .iter()
                                .zip(im.data())
                                .map(|(&a, &b)| Complex64::new(a, b))
                                .collect(),
                            None => re.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
                        };
                        fft.forward(&mut buf);
                        buf.iter_mut().for_each(|c| *c *= scale);
                        buf
                    })
                    .collect()
            }
            ShiftMethod::Trilinear => Vec::new(),
        };
        let support = packed
            .iter()
            .map(|p| Sparsity::of(grid.n(), p, SPARSE_TOL))
            .collect();
        let constant = comps
            .iter()
            .map(|c| c.data().iter().all(|&v| v == c.data()[0]))
            .collect();
        Self {
            grid,
            comps,
            method,
            packed,
            support,
            constant,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn originals(&self) -> &[ScalarField] {
        &self.comps
    }

    /// Samples of every component at x + ℓ.
    pub fn shifted(&self, l: [f64; 3]) -> Vec<Vec<f64>> {
        self.evaluate(l, false)
    }

    /// δc(x;ℓ) for every component.
    pub fn increments(&self, l: [f64; 3]) -> Vec<Vec<f64>> {
        self.evaluate(l, true)
    }

    fn evaluate(&self, l: [f64; 3], diff: bool) -> Vec<Vec<f64>> {
        let mut out = match self.method {
            ShiftMethod::FourierPhase => self.shift_fourier(l, diff),
            ShiftMethod::Trilinear => self
                .comps
                .iter()
                .map(|c| {
                    let mut s = trilinear(c, l);
                    if diff {
                        s.iter_mut().zip(c.data()).for_each(|(a, &b)| *a -= b);
                    }
                    s
                })
                .collect(),
        };
        // Constants are translation invariant; keep them free of transform round-off.
        for ((o, c), &k) in out.iter_mut().zip(&self.comps).zip(&self.constant) {
            if k {
                if diff {
                    o.fill(0.0);
                } else {
                    o.copy_from_slice(c.data());
                }
            }
        }
        out
    }

    fn shift_fourier(&self, l: [f64; 3], diff: bool) -> Vec<Vec<f64>> {
        let phases = axis_phases(&self.grid, l);
        let fft = Fft3::get(self.grid.n());
        let mut out = Vec::with_capacity(self.comps.len());
        for (p, (spec, support)) in self.packed.iter().zip(&self.support).enumerate() {
            let mut buf = vec![Complex64::default(); spec.len()];
            for &(i, [ix, iy, iz]) in &support.modes {
                buf[i] = spec[i] * (phases[0][ix] * phases[1][iy] * phases[2][iz]);
            }
            fft.inverse_sparse(&mut buf, support);
            let re = self.comps[2 * p].data();
            out.push(if diff {
                buf.iter().zip(re).map(|(c, &b)| c.re - b).collect()
            } else {
                buf.iter().map(|c| c.re).collect()
            });
            if let Some(im) = self.comps.get(2 * p + 1) {
                let im = im.data();
                out.push(if diff {
                    buf.iter().zip(im).map(|(c, &b)| c.im - b).collect()
                } else {
                    buf.iter().map(|c| c.im).collect()
                });
            }
        }
        out
    }
}

/// Per-axis multipliers e^{ikℓ}; the Nyquist index uses the real cos(kℓ) so
/// real fields stay real.
fn axis_phases(grid: &PeriodicGrid, l: [f64; 3]) -> [Vec<Complex64>; 3] {
    let n = grid.n();
    let k0 = grid.k0();
    std::array::from_fn(|a| {
        (0..n)
            .map(|i| {
                let k = signed_wavenumber(i, n) as f64 * k0;
                if i == n / 2 {
                    Complex64::new((k * l[a]).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, k * l[a])
                }
            })
            .collect()
    })
}

/// Lattice offset when ℓ is an integer multiple of the spacing.
pub(crate) fn lattice_offset(grid: &PeriodicGrid, l: [f64; 3]) -> Option<[i64; 3]> {
    let h = grid.spacing();
    let mut m = [0i64; 3];
    for a in 0..3 {
        let s = l[a] / h;
        let r = s.round();
        if (s - r).abs() > 1e-9 {
            return None;
        }
        m[a] = r as i64;
    }
    Some(m)
}

fn trilinear(f: &ScalarField, l: [f64; 3]) -> Vec<f64> {
    let g = f.grid();
    if let Some(m) = lattice_offset(g, l) {
        return f.roll(m).into_data();
    }
    let h = g.spacing();
    let base: [f64; 3] = std::array::from_fn(|a| (l[a] / h).floor());
    let t: [f64; 3] = std::array::from_fn(|a| l[a] / h - base[a]);
    let mut out = vec![0.0; g.len()];
    for corner in 0..8 {
        let bits = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let mut w = 1.0;
        let mut shift = [0i64; 3];
        for a in 0..3 {
            w *= if bits[a] == 1 { t[a] } else { 1.0 - t[a] };
            shift[a] = base[a] as i64 + bits[a] as i64;
        }
        if w == 0.0 {
            continue;
        }
        let r = f.roll(shift);
        out.iter_mut().zip(r.data()).for_each(|(o, &v)| *o += w * v);
    }
    out
}

fn engine_for(f: &Field, method: ShiftMethod) -> ShiftEngine {
    ShiftEngine::new(
        *f.grid(),
        f.components().into_iter().cloned().collect(),
        method,
    )
}

fn rebuild(f: &Field, comps: Vec<Vec<f64>>) -> Field {
    let g = *f.grid();
    Field::from_components(
        comps
            .into_iter()
            .map(|d| ScalarField::from_vec_unchecked(g, d))
            .collect(),
    )
    .expect("component count preserved")
}

/// Samples of f(· + ℓ).
pub fn shifted(f: &Field, l: [f64; 3], method: ShiftMethod) -> Field {
    rebuild(f, engine_for(f, method).shifted(l))
}

/// One shifted field per displacement, sharing the spectral transform.
pub fn shifted_batch(f: &Field, ls: &[[f64; 3]], method: ShiftMethod) -> Vec<Field> {
    let e = engine_for(f, method);
    ls.iter().map(|&l| rebuild(f, e.shifted(l))).collect()
}

/// δf(·;ℓ) = f(· + ℓ) − f. Exactly zero at ℓ = 0.
pub fn increment(f: &Field, l: [f64; 3], method: ShiftMethod) -> Field {
    if l == [0.0; 3] {
        return f.map_components(|c| ScalarField::zeros(*c.grid()));
    }
    rebuild(f, engine_for(f, method).increments(l))
}

/// δv(·;ℓ)·ℓ/|ℓ|.
pub fn longitudinal(v: &VectorField3, l: [f64; 3], method: ShiftMethod) -> Result<ScalarField> {
    let r = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
    if r == 0.0 {
        return invalid("longitudinal increment needs a nonzero displacement");
    }
    let e = ShiftEngine::new(*v.grid(), v.comps().to_vec(), method);
    let d = e.increments(l);
    let g = *v.grid();
    let data = (0..g.len())
        .map(|i| (d[0][i] * l[0] + d[1][i] * l[1] + d[2][i] * l[2]) / r)
        .collect();
    Ok(ScalarField::from_vec_unchecked(g, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g(n: usize) -> PeriodicGrid {
        PeriodicGrid::cube(n).unwrap()
    }

    #[test]
    fn fourier_shift_of_sine() {
        let grid = g(16);
        let f: Field = ScalarField::from_fn(grid, |x, _, _| x.sin()).into();
        let a = 0.37;
        let s = shifted(&f, [a, 0.0, 0.0], ShiftMethod::FourierPhase);
        for i in 0..grid.len() {
            let [x, _, _] = grid.coords(i);
            assert!((s.components()[0].data()[i] - (x + a).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn half_period_increment() {
        let grid = g(16);
        let f: Field = ScalarField::from_fn(grid, |x, _, _| x.sin()).into();
        let d = increment(&f, [PI, 0.0, 0.0], ShiftMethod::FourierPhase);
        for i in 0..grid.len() {
            let [x, _, _] = grid.coords(i);
            assert!((d.components()[0].data()[i] + 2.0 * x.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_shift_agrees_between_methods() {
        let grid = g(16);
        let f: Field =
            VectorField3::from_fn(grid, |x, y, z| [(x + y).sin(), z.cos(), (2.0 * x).sin()]).into();
        let l = [grid.spacing(), 0.0, -2.0 * grid.spacing()];
        let a = shifted(&f, l, ShiftMethod::FourierPhase);
        let b = shifted(&f, l, ShiftMethod::Trilinear);
        for (p, q) in a.components().iter().zip(b.components()) {
            for (u, v) in p.data().iter().zip(q.data()) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn batch_equals_single() {
        let grid = g(8);
        let f: Field =
            VectorField3::from_fn(grid, |x, y, z| [x.sin(), (y + z).cos(), z.sin()]).into();
        let ls = [[0.1, 0.2, 0.3], [-0.4, 0.0, 0.9]];
        let batch = shifted_batch(&f, &ls, ShiftMethod::FourierPhase);
        for (l, b) in ls.iter().zip(&batch) {
            assert_eq!(&shifted(&f, *l, ShiftMethod::FourierPhase), b);
        }
    }

    #[test]
    fn longitudinal_projections() {
        let grid = g(16);
        let v = VectorField3::from_fn(grid, |x, _, _| [x.sin(), x.cos(), 0.0]);
        let a = 0.3;
        let d = longitudinal(&v, [a, 0.0, 0.0], ShiftMethod::FourierPhase).unwrap();
        for i in 0..grid.len() {
            let [x, _, _] = grid.coords(i);
            assert!((d.data()[i] - ((x + a).sin() - x.sin())).abs() < 1e-12);
        }
        let t = VectorField3::from_fn(grid, |x, _, _| [0.0, x.sin(), 0.0]);
        assert!(
            longitudinal(&t, [a, 0.0, 0.0], ShiftMethod::FourierPhase)
                .unwrap()
                .max_abs()
                < 1e-15
        );
        assert!(longitudinal(&v, [0.0; 3], ShiftMethod::FourierPhase).is_err());
    }
}
