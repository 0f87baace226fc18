//! Exact box averages of the dissipation and structure functionals.
//!
//! For real fields the mean over x of δa_i (δb·δc) at separation ℓ is a sum of
//! antisymmetrized cross-correlations, −Σ_k Z_i(k) sin(k·ℓ), with Z real and
//! odd in k. Everything downstream is then closed-form per mode:
//! mean D_ε = Σ_k (k·Z) φ̂(ε|k|) and mean T(λ) = −(1/λ) Σ_k (k̂·Z) j₁(λ|k|).

use std::collections::BTreeMap;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::catalog::{CatalogEntry, CatalogId};
use super::fields::{resolve, FieldSet};
use crate::error::Result;
use crate::grid::{band_limit, Fft3, PeriodicGrid, Spectrum};
use crate::mollifier::{BallQuadrature, MollifierProfile, SphereQuadrature};
use crate::numerics::sph_j1;

/// Per-mode transfer spectra of one catalog entry, ready for any scale.
#[derive(Debug, Clone)]
pub struct BoxAverager {
    grid: PeriodicGrid,
    entry: CatalogId,
    kc: i64,
    /// Z_t(k) per term on the cube |k_j| ≤ kc, coefficient included.
    z: Vec<Vec<[f64; 3]>>,
    /// Per term, Σ (k·Z) and Σ (k̂·Z) over each integer shell |m|².
    shells: Vec<Vec<(f64, f64)>>,
    profile: MollifierProfile,
}

fn smooth_even_above(x: usize) -> usize {
    let mut m = x + 1;
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 && m % 2 == 0 {
            return m;
        }
        m += 1;
    }
}

struct Cube {
    kc: i64,
    side: usize,
}

impl Cube {
    fn len(&self) -> usize {
        self.side * self.side * self.side
    }

    fn mode(&self, i: usize) -> [i64; 3] {
        let s = self.side;
        [
            (i % s) as i64 - self.kc,
            ((i / s) % s) as i64 - self.kc,
            (i / (s * s)) as i64 - self.kc,
        ]
    }

    fn extract(&self, s: &Spectrum) -> Vec<Complex64> {
        (0..self.len()).map(|i| s.at(self.mode(i))).collect()
    }

    /// Low-cube coefficients of two real m³ sample arrays via one transform.
    fn pair(&self, m: usize, p: &[f64], q: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf: Vec<Complex64> = p
            .iter()
            .zip(q)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Fft3::get(m).forward(&mut buf);
        let s = 1.0 / buf.len() as f64;
        let at = |k: [i64; 3]| {
            let w = |c: i64| c.rem_euclid(m as i64) as usize;
            buf[w(k[0]) + m * (w(k[1]) + m * w(k[2]))]
        };
        let mut a = Vec::with_capacity(self.len());
        let mut b = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let k = self.mode(i);
            let u = at(k);
            let v = at([-k[0], -k[1], -k[2]]).conj();
            a.push((u + v) * (0.5 * s));
            b.push((u - v) * Complex64::new(0.0, -0.5 * s));
        }
        (a, b)
    }
}

type Product = (usize, usize);

impl BoxAverager {
    pub fn new(fields: &FieldSet, entry: &CatalogEntry) -> Result<Self> {
        let grid = *fields.grid();
        let res = resolve(fields, entry)?;
        let n = grid.n();
        let spectra: Vec<Spectrum> = res.comps.iter().map(Spectrum::of).collect();
        let banded = spectra.iter().all(crate::grid::spectrum_is_band_limited);
        // Band-limited inputs multiply exactly on their own lattice (2/3 rule);
        // otherwise drop the Nyquist plane and pad.
        let (kc, m) = if banded {
            (band_limit(n) as i64, n)
        } else {
            let kc = n / 2 - 1;
            (kc as i64, smooth_even_above(3 * kc).max(n))
        };
        let cube = Cube {
            kc,
            side: 2 * kc as usize + 1,
        };
        let fine = PeriodicGrid::new(m, grid.length())?;
        let samples: Vec<Vec<f64>> = if m == n {
            res.comps.iter().map(|c| c.data().to_vec()).collect()
        } else {
            spectra
                .iter()
                .map(|s| s.resample(m).to_field(fine).into_data())
                .collect()
        };
        let low: Vec<Vec<Complex64>> = spectra.iter().map(|s| cube.extract(s)).collect();

        // Every product needed: a_i·b_p, a_i·c_p and the weighted Σ w b_p c_p.
        let mut wanted: BTreeMap<Product, ()> = BTreeMap::new();
        for a in &res.atoms {
            for &t in &a.transport {
                for &(p, q, _) in &a.pairs {
                    wanted.insert((t.min(p), t.max(p)), ());
                    wanted.insert((t.min(q), t.max(q)), ());
                }
            }
        }
        let mut keys: Vec<Option<Product>> = wanted.keys().map(|&k| Some(k)).collect();
        keys.extend(res.atoms.iter().map(|_| None));
        let mut atom_of = res.atoms.iter();
        let mut build = |key: &Option<Product>| -> Vec<f64> {
            match key {
                Some((i, j)) => samples[*i]
                    .iter()
                    .zip(&samples[*j])
                    .map(|(x, y)| x * y)
                    .collect(),
                None => {
                    let a = atom_of.next().expect("one weighted product per atom");
                    let mut s = vec![0.0; m * m * m];
                    for &(p, q, w) in &a.pairs {
                        s.iter_mut()
                            .zip(samples[p].iter().zip(&samples[q]))
                            .for_each(|(o, (x, y))| *o += w * x * y);
                    }
                    s
                }
            }
        };
        // Products are formed two at a time so only one packed transform is live.
        let mut cubes: Vec<Vec<Complex64>> = Vec::with_capacity(keys.len());
        for chunk in keys.chunks(2) {
            let p = build(&chunk[0]);
            let q = if chunk.len() == 2 {
                build(&chunk[1])
            } else {
                vec![0.0; m * m * m]
            };
            let (a, b) = cube.pair(m, &p, &q);
            cubes.push(a);
            if chunk.len() == 2 {
                cubes.push(b);
            }
        }
        let mut products: BTreeMap<Product, usize> = BTreeMap::new();
        let mut weighted = Vec::new();
        for (idx, key) in keys.iter().enumerate() {
            match key {
                Some(k) => {
                    products.insert(*k, idx);
                }
                None => weighted.push(idx),
            }
        }
        let prod = |i: usize, j: usize| &cubes[products[&(i.min(j), i.max(j))]];

        let mut z = vec![vec![[0.0; 3]; cube.len()]; res.nterms];
        for (ai, a) in res.atoms.iter().enumerate() {
            let bc = &cubes[weighted[ai]];
            for (dir, &t) in a.transport.iter().enumerate() {
                let at = &low[t];
                let out = &mut z[a.term];
                out.par_iter_mut().enumerate().for_each(|(k, o)| {
                    let mut v = (at[k] * bc[k].conj()).im;
                    for &(p, q, w) in &a.pairs {
                        v += w
                            * ((low[p][k] * prod(t, q)[k].conj()).im
                                + (low[q][k] * prod(t, p)[k].conj()).im);
                    }
                    o[dir] += 2.0 * a.coeff * v;
                });
            }
        }

        let k0 = grid.k0();
        let nshell = (3 * kc * kc + 1) as usize;
        let shells = z
            .iter()
            .map(|zt| {
                let mut sh = vec![(0.0, 0.0); nshell];
                for (i, zk) in zt.iter().enumerate() {
                    let mm = cube.mode(i);
                    let s2 = (mm[0] * mm[0] + mm[1] * mm[1] + mm[2] * mm[2]) as usize;
                    if s2 == 0 {
                        continue;
                    }
                    let dot = mm[0] as f64 * zk[0] + mm[1] as f64 * zk[1] + mm[2] as f64 * zk[2];
                    sh[s2].0 += k0 * dot;
                    sh[s2].1 += dot / (s2 as f64).sqrt();
                }
                sh
            })
            .collect();
        Ok(Self {
            grid,
            entry: entry.id,
            kc,
            z,
            shells,
            profile: MollifierProfile::standard(),
        })
    }

    pub fn with_profile(mut self, profile: MollifierProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn entry(&self) -> CatalogId {
        self.entry
    }

    pub fn nterms(&self) -> usize {
        self.z.len()
    }

    fn shell_sum(
        &self,
        f: impl Fn(f64) -> f64 + Sync,
        pick: impl Fn((f64, f64)) -> f64 + Sync,
    ) -> Vec<f64> {
        let k0 = self.grid.k0();
        let weights: Vec<f64> = (0..self.shells[0].len())
            .into_par_iter()
            .map(|s| {
                if s == 0 {
                    0.0
                } else {
                    f(k0 * (s as f64).sqrt())
                }
            })
            .collect();
        self.shells
            .iter()
            .map(|sh| sh.iter().zip(&weights).map(|(&v, w)| pick(v) * w).sum())
            .collect()
    }

    /// Exact box mean of D_ε, total and per term.
    pub fn mean_dissipation(&self, eps: f64) -> Result<(f64, Vec<f64>)> {
        self.grid.check_scale("epsilon", eps)?;
        let terms = self.shell_sum(|k| self.profile.fourier(eps * k), |v| v.0);
        Ok((terms.iter().sum(), terms))
    }

    /// Exact box mean of G(·,λ) = Σ 4c_k T_k, total and per term.
    pub fn mean_structure(&self, lambda: f64) -> Result<(f64, Vec<f64>)> {
        self.grid.check_scale("lambda", lambda)?;
        let terms: Vec<f64> = self
            .shell_sum(|k| sph_j1(lambda * k), |v| v.1)
            .iter()
            .map(|v| -4.0 * v / lambda)
            .collect();
        Ok((terms.iter().sum(), terms))
    }

    /// Box mean of c·δa(ℓ)(δb·δc)(ℓ), one 3-vector per term.
    pub fn mean_increment(&self, l: [f64; 3]) -> Vec<[f64; 3]> {
        let side = 2 * self.kc as usize + 1;
        let k0 = self.grid.k0();
        let phases: Vec<Vec<Complex64>> = (0..3)
            .map(|d| {
                (0..side)
                    .map(|i| Complex64::from_polar(1.0, k0 * (i as i64 - self.kc) as f64 * l[d]))
                    .collect()
            })
            .collect();
        self.z
            .iter()
            .map(|zt| {
                let parts: Vec<[f64; 3]> = (0..side)
                    .into_par_iter()
                    .map(|iz| {
                        let mut acc = [0.0; 3];
                        for iy in 0..side {
                            let pyz = phases[1][iy] * phases[2][iz];
                            let row = side * (iy + side * iz);
                            for ix in 0..side {
                                let s = (phases[0][ix] * pyz).im;
                                let zk = zt[row + ix];
                                acc[0] -= zk[0] * s;
                                acc[1] -= zk[1] * s;
                                acc[2] -= zk[2] * s;
                            }
                        }
                        acc
                    })
                    .collect();
                parts
                    .iter()
                    .fold([0.0; 3], |a, p| [a[0] + p[0], a[1] + p[1], a[2] + p[2]])
            })
            .collect()
    }

    /// Box mean of the ball-quadrature D_ε on exactly the nodes of `ball`.
    pub fn ball_mean(&self, ball: &BallQuadrature) -> Result<(f64, Vec<f64>)> {
        self.grid.check_scale("epsilon", ball.epsilon)?;
        let mut terms = vec![0.0; self.nterms()];
        for node in ball.nodes() {
            for (t, m) in terms.iter_mut().zip(self.mean_increment(node.l)) {
                *t += node.g[0] * m[0] + node.g[1] * m[1] + node.g[2] * m[2];
            }
        }
        Ok((terms.iter().sum(), terms))
    }

    /// Box mean of G(·,λ) on the directions of `sphere`.
    pub fn sphere_structure_mean(
        &self,
        lambda: f64,
        sphere: &SphereQuadrature,
    ) -> Result<(f64, Vec<f64>)> {
        self.grid.check_scale("lambda", lambda)?;
        let mut terms = vec![0.0; self.nterms()];
        for (d, &w) in sphere.directions.iter().zip(&sphere.weights) {
            let l = [lambda * d[0], lambda * d[1], lambda * d[2]];
            for (t, m) in terms.iter_mut().zip(self.mean_increment(l)) {
                *t += 4.0 * w * (d[0] * m[0] + d[1] * m[1] + d[2] * m[2]) / lambda;
            }
        }
        Ok((terms.iter().sum(), terms))
    }
}
