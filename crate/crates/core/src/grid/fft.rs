use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{PeriodicGrid, ScalarField};

/// Signed integer wavenumber of lattice index `i`; the Nyquist index maps to +n/2.
pub fn signed_wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Unnormalized 3D complex FFT on an n³ cube, x-fastest layout.
pub struct Fft3 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

#[derive(Clone, Copy)]
struct SyncPtr(*mut Complex64);
unsafe impl Send for SyncPtr {}
unsafe impl Sync for SyncPtr {}

/// Nonzero pattern of a spectrum in x-fastest layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparsity {
    /// Flat indices of the retained modes with their (ix, iy, iz).
    pub modes: Vec<(usize, [usize; 3])>,
    /// z-columns, indexed ix + n·iy, that hold a retained mode.
    columns: Vec<bool>,
    /// x indices that hold a retained mode.
    xs: Vec<bool>,
}

impl Sparsity {
    /// Modes with |c| above `rel_tol` times the largest magnitude.
    pub fn of(n: usize, coeffs: &[Complex64], rel_tol: f64) -> Self {
        let cut = rel_tol * coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut modes = Vec::new();
        let mut columns = vec![false; n * n];
        let mut xs = vec![false; n];
        for (i, c) in coeffs.iter().enumerate() {
            if c.norm() > cut {
                let (ix, iy, iz) = (i % n, (i / n) % n, i / (n * n));
                modes.push((i, [ix, iy, iz]));
                columns[ix + n * iy] = true;
                xs[ix] = true;
            }
        }
        Self { modes, columns, xs }
    }
}

impl Fft3 {
    /// Shared plan for size n.
    pub fn get(n: usize) -> Arc<Fft3> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("fft cache poisoned");
        map.entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft3 {
                    n,
                    fwd: planner.plan_fft_forward(n),
                    inv: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    /// Inverse transform without the 1/N factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
    }

    /// Inverse transform of a spectrum that vanishes off `support`. The
    /// z and y passes visit only occupied lines, leaving the dense pass on
    /// the contiguous x axis.
    pub fn inverse_sparse(&self, data: &mut [Complex64], support: &Sparsity) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(data.len(), n2 * n);
        let plan = &self.inv;
        let scratch_len = plan.get_inplace_scratch_len();
        let buffers = || {
            (
                vec![Complex64::default(); scratch_len],
                vec![Complex64::default(); n],
            )
        };

        // z columns, grouped by iy so each job owns {ix + n·iy + n²·iz}.
        let ptr = SyncPtr(data.as_mut_ptr());
        (0..n)
            .into_par_iter()
            .for_each_init(buffers, |(scratch, col), iy| {
                let p = ptr;
                for ix in (0..n).filter(|&ix| support.columns[ix + n * iy]) {
                    let base = ix + n * iy;
                    // SAFETY: indices base + n²·iz are disjoint across iy.
                    unsafe {
                        for (iz, c) in col.iter_mut().enumerate() {
                            *c = *p.0.add(base + n2 * iz);
                        }
                    }
                    plan.process_with_scratch(col, scratch);
                    unsafe {
                        for (iz, c) in col.iter().enumerate() {
                            *p.0.add(base + n2 * iz) = *c;
                        }
                    }
                }
            });

        // y lines at occupied x.
        data.par_chunks_mut(n2)
            .for_each_init(buffers, |(scratch, line), plane| {
                for ix in (0..n).filter(|&ix| support.xs[ix]) {
                    for (iy, c) in line.iter_mut().enumerate() {
                        *c = plane[iy * n + ix];
                    }
                    plan.process_with_scratch(line, scratch);
                    for (iy, c) in line.iter().enumerate() {
                        plane[iy * n + ix] = *c;
                    }
                }
            });

        // x lines, all dense now.
        data.par_chunks_mut(n2).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, plane| plan.process_with_scratch(plane, scratch),
        );
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(data.len(), n2 * n);
        let scratch_len = plan.get_inplace_scratch_len();
        // Work buffers are allocated once per rayon job, not per line.
        let buffers = || {
            (
                vec![Complex64::default(); scratch_len],
                vec![Complex64::default(); n2],
            )
        };

        // x lines are contiguous.
        data.par_chunks_mut(n2).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, plane| plan.process_with_scratch(plane, scratch),
        );

        // y lines: transpose each z-plane so they become contiguous.
        data.par_chunks_mut(n2)
            .for_each_init(buffers, |(scratch, buf), plane| {
                for iy in 0..n {
                    for ix in 0..n {
                        buf[ix * n + iy] = plane[iy * n + ix];
                    }
                }
                plan.process_with_scratch(buf, scratch);
                for iy in 0..n {
                    for ix in 0..n {
                        plane[iy * n + ix] = buf[ix * n + iy];
                    }
                }
            });

        // z lines: gather one xz-slab per y index.
        let ptr = SyncPtr(data.as_mut_ptr());
        (0..n)
            .into_par_iter()
            .for_each_init(buffers, |(scratch, buf), iy| {
                let p = ptr;
                // SAFETY: each iy touches the disjoint index set {ix + n·iy + n²·iz}.
                unsafe {
                    for iz in 0..n {
                        for ix in 0..n {
                            buf[ix * n + iz] = *p.0.add(ix + n * iy + n2 * iz);
                        }
                    }
                }
                plan.process_with_scratch(buf, scratch);
                unsafe {
                    for iz in 0..n {
                        for ix in 0..n {
                            *p.0.add(ix + n * iy + n2 * iz) = buf[ix * n + iz];
                        }
                    }
                }
            });
    }
}

/// Normalized Fourier coefficients, f(x) = Σ c_k e^{i k·x}.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coeffs: vec![Complex64::default(); n * n * n],
        }
    }

    pub fn of(f: &ScalarField) -> Self {
        let n = f.grid().n();
        let mut buf: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Fft3::get(n).forward(&mut buf);
        let s = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        Self { n, coeffs: buf }
    }

    /// Two real fields through one complex transform.
    pub fn of_pair(f: &ScalarField, g: &ScalarField) -> (Self, Self) {
        let n = f.grid().n();
        let mut buf: Vec<Complex64> = f
            .data()
            .iter()
            .zip(g.data())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Fft3::get(n).forward(&mut buf);
        let s = 1.0 / buf.len() as f64;
        let mut a = vec![Complex64::default(); buf.len()];
        let mut b = vec![Complex64::default(); buf.len()];
        for iz in 0..n {
            let mz = (n - iz) % n;
            for iy in 0..n {
                let my = (n - iy) % n;
                for ix in 0..n {
                    let mx = (n - ix) % n;
                    let p = buf[ix + n * (iy + n * iz)];
                    let q = buf[mx + n * (my + n * mz)].conj();
                    let i = ix + n * (iy + n * iz);
                    a[i] = (p + q) * (0.5 * s);
                    b[i] = (p - q) * Complex64::new(0.0, -0.5 * s);
                }
            }
        }
        (Self { n, coeffs: a }, Self { n, coeffs: b })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    /// Coefficient at signed wavenumber (kx, ky, kz), zero when out of range.
    pub fn at(&self, k: [i64; 3]) -> Complex64 {
        let n = self.n as i64;
        if k.iter().any(|&c| c.abs() > n / 2) {
            return Complex64::default();
        }
        let idx = |c: i64| c.rem_euclid(n) as usize;
        self.coeffs[self.index(idx(k[0]), idx(k[1]), idx(k[2]))]
    }

    /// Real part of the synthesized samples.
    pub fn to_field(&self, grid: PeriodicGrid) -> ScalarField {
        assert_eq!(grid.n(), self.n);
        let mut buf = self.coeffs.clone();
        Fft3::get(self.n).inverse(&mut buf);
        ScalarField::from_vec_unchecked(grid, buf.iter().map(|c| c.re).collect())
    }

    /// Synthesized complex samples, used for packing two real fields.
    pub fn to_complex_samples(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        Fft3::get(self.n).inverse(&mut buf);
        buf
    }

    /// Re-expresses the coefficients on an m³ lattice. Modes with |k_j| ≥ min(n, m)/2
    /// are dropped, so the map is exact for band-limited spectra.
    pub fn resample(&self, m: usize) -> Spectrum {
        let lim = (self.n.min(m) / 2) as i64;
        let mut out = Spectrum::zeros(m);
        let n = self.n;
        for iz in 0..n {
            let kz = signed_wavenumber(iz, n);
            if kz.abs() >= lim {
                continue;
            }
            let oz = kz.rem_euclid(m as i64) as usize;
            for iy in 0..n {
                let ky = signed_wavenumber(iy, n);
                if ky.abs() >= lim {
                    continue;
                }
                let oy = ky.rem_euclid(m as i64) as usize;
                for ix in 0..n {
                    let kx = signed_wavenumber(ix, n);
                    if kx.abs() >= lim {
                        continue;
                    }
                    let ox = kx.rem_euclid(m as i64) as usize;
                    out.coeffs[ox + m * (oy + m * oz)] = self.coeffs[ix + n * (iy + n * iz)];
                }
            }
        }
        out
    }
}
