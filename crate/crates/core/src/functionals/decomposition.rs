use rustfft::num_complex::Complex64;

use super::catalog::CatalogEntry;
use super::fields::{resolve, Atom, FieldSet};
use super::pointwise::accumulate;
use crate::error::{invalid, Result};
use crate::grid::{
    band_limit, divergence, spectrum_is_band_limited, PeriodicGrid, ScalarField, Spectrum,
    VectorField3,
};
use crate::increments::{ShiftEngine, ShiftMethod};
use crate::mollifier::{BallQuadrature, MollifierProfile};
use crate::numerics::l2_norm;

/// Both sides of the mollified commutator identity for one catalog term.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResidual {
    /// Ball-quadrature value of ∫∇φ_ε(ℓ)·δa(ℓ)(δb·δc)(ℓ) dℓ.
    pub lhs: ScalarField,
    /// Mollified-product expression built from spectral derivatives.
    pub rhs: ScalarField,
    pub residual: ScalarField,
    /// ‖lhs − rhs‖₂ / ‖lhs‖₂ (absolute when lhs vanishes).
    pub relative_l2: f64,
}

/// Spectral mollification and differentiation on one lattice.
struct Smoother {
    grid: PeriodicGrid,
    /// φ̂(ε|k|) indexed by the integer shell |m|².
    fourier: Vec<f64>,
}

impl Smoother {
    fn new(grid: PeriodicGrid, eps: f64, profile: &MollifierProfile) -> Self {
        let h = grid.n() / 2;
        let k0 = grid.k0();
        let fourier = (0..=3 * h * h)
            .map(|s| profile.fourier(eps * k0 * (s as f64).sqrt()))
            .collect();
        Self { grid, fourier }
    }

    fn for_each_mode(&self, mut f: impl FnMut(usize, [i64; 3], f64)) {
        let n = self.grid.n();
        let sw = |i: usize| {
            if i == n / 2 {
                0
            } else {
                crate::grid::signed_wavenumber(i, n)
            }
        };
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let m = [sw(ix), sw(iy), sw(iz)];
                    let s = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as usize;
                    f(ix + n * (iy + n * iz), m, self.fourier[s]);
                }
            }
        }
    }

    fn spectrum(&self, f: &[f64]) -> Spectrum {
        Spectrum::of(&ScalarField::from_vec_unchecked(self.grid, f.to_vec()))
    }

    /// ∇(f^ε).
    fn grad(&self, f: &[f64]) -> [Vec<f64>; 3] {
        let s = self.spectrum(f);
        let k0 = self.grid.k0();
        let mut out = [s.clone(), s.clone(), s];
        self.for_each_mode(|i, m, phi| {
            for (d, o) in out.iter_mut().enumerate() {
                o.coeffs[i] *= Complex64::new(0.0, k0 * m[d] as f64 * phi);
            }
        });
        out.map(|o| o.to_field(self.grid).into_data())
    }

    /// Σ_i ∂_i (X_i)^ε.
    fn div(&self, x: &[Vec<f64>; 3]) -> Vec<f64> {
        let sp = [
            self.spectrum(&x[0]),
            self.spectrum(&x[1]),
            self.spectrum(&x[2]),
        ];
        let k0 = self.grid.k0();
        let mut out = Spectrum::zeros(self.grid.n());
        self.for_each_mode(|i, m, phi| {
            let mut acc = Complex64::default();
            for d in 0..3 {
                acc += sp[d].coeffs[i] * Complex64::new(0.0, k0 * m[d] as f64 * phi);
            }
            out.coeffs[i] = acc;
        });
        out.to_field(self.grid).into_data()
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Right side for one atom on the fine lattice:
/// Σ_p w [a_i∂_i(bc)^ε − ∂_i(a_i bc)^ε + c ∂_i(a_i b)^ε + b ∂_i(a_i c)^ε − a_i c ∂_i b^ε − a_i b ∂_i c^ε].
fn atom_rhs(sm: &Smoother, atom: &Atom, fine: &[Vec<f64>]) -> Vec<f64> {
    let a = [
        &fine[atom.transport[0]],
        &fine[atom.transport[1]],
        &fine[atom.transport[2]],
    ];
    let mut out = vec![0.0; fine[0].len()];
    for &(p, q, w) in &atom.pairs {
        let (b, c) = (&fine[p], &fine[q]);
        let bc = mul(b, c);
        let g_bc = sm.grad(&bc);
        let abc = sm.div(&[mul(a[0], &bc), mul(a[1], &bc), mul(a[2], &bc)]);
        let ab = sm.div(&[mul(a[0], b), mul(a[1], b), mul(a[2], b)]);
        let ac = sm.div(&[mul(a[0], c), mul(a[1], c), mul(a[2], c)]);
        let gb = sm.grad(b);
        let gc = sm.grad(c);
        for x in 0..out.len() {
            let mut v = -abc[x] + c[x] * ab[x] + b[x] * ac[x];
            for i in 0..3 {
                v += a[i][x] * (g_bc[i][x] - c[x] * gb[i][x] - b[x] * gc[i][x]);
            }
            out[x] += w * v;
        }
    }
    out
}

/// LHS − RHS of the commutator identity for term `term` of `entry` at scale ε,
/// with unit coefficient. The identity needs a solenoidal transport field.
pub fn decomposition_residual(
    fields: &FieldSet,
    entry: &CatalogEntry,
    term: usize,
    eps: f64,
    ball: &BallQuadrature,
) -> Result<DecompositionResidual> {
    if term >= entry.d_terms.len() {
        return invalid(format!("{} has no term {term}", entry.id));
    }
    Ok(residuals(fields, entry, &[term], eps, ball)?
        .pop()
        .expect("one term"))
}

/// Every term of `entry` at once; the ℓ-shifts are shared between terms.
pub fn decomposition_residuals(
    fields: &FieldSet,
    entry: &CatalogEntry,
    eps: f64,
    ball: &BallQuadrature,
) -> Result<Vec<DecompositionResidual>> {
    let terms: Vec<usize> = (0..entry.d_terms.len()).collect();
    residuals(fields, entry, &terms, eps, ball)
}

fn residuals(
    fields: &FieldSet,
    entry: &CatalogEntry,
    terms: &[usize],
    eps: f64,
    ball: &BallQuadrature,
) -> Result<Vec<DecompositionResidual>> {
    let grid = *fields.grid();
    grid.check_scale("epsilon", eps)?;
    let res = resolve(fields, entry)?;
    let atoms: Vec<Atom> = res
        .atoms
        .iter()
        .filter_map(|a| {
            terms.iter().position(|&t| t == a.term).map(|slot| Atom {
                coeff: 1.0,
                term: slot,
                ..a.clone()
            })
        })
        .collect();

    let n = grid.n();
    let mut used: Vec<usize> = atoms
        .iter()
        .flat_map(|a| {
            a.transport
                .iter()
                .copied()
                .chain(a.pairs.iter().flat_map(|p| [p.0, p.1]))
        })
        .collect();
    used.sort_unstable();
    used.dedup();
    for &c in &used {
        if !spectrum_is_band_limited(&Spectrum::of(&res.comps[c])) {
            return invalid("decomposition identity needs band-limited fields");
        }
    }
    for a in &atoms {
        let v = VectorField3::new(
            res.comps[a.transport[0]].clone(),
            res.comps[a.transport[1]].clone(),
            res.comps[a.transport[2]].clone(),
        )?;
        let d = divergence(&v).max_abs();
        if d > 1e-10 {
            return invalid(format!(
                "{}: transport of term {} is not solenoidal (max |div| = {d:.3e})",
                entry.id, terms[a.term]
            ));
        }
    }

    let ball = ball.with_epsilon(eps);
    let engine = ShiftEngine::new(grid, res.comps.clone(), ShiftMethod::FourierPhase);
    let mut lhs = vec![vec![0.0; grid.len()]; terms.len()];
    for node in ball.nodes() {
        let incs = engine.increments(node.l);
        accumulate(&atoms, &incs, node.g, 1.0, &mut lhs);
    }

    // Triple products stay alias-free on an integer multiple of the lattice,
    // whose points include the original ones.
    let r = if 3 * band_limit(n) < n { 2 } else { 3 };
    let fine_grid = PeriodicGrid::new(r * n, grid.length())?;
    let fine: Vec<Vec<f64>> = res
        .comps
        .iter()
        .map(|c| {
            Spectrum::of(c)
                .resample(r * n)
                .to_field(fine_grid)
                .into_data()
        })
        .collect();
    let sm = Smoother::new(fine_grid, eps, &ball.profile);
    let m = r * n;
    let mut out = Vec::with_capacity(terms.len());
    for (slot, lhs) in lhs.into_iter().enumerate() {
        let mut rhs_fine = vec![0.0; fine_grid.len()];
        for a in atoms.iter().filter(|a| a.term == slot) {
            rhs_fine
                .iter_mut()
                .zip(atom_rhs(&sm, a, &fine))
                .for_each(|(o, v)| *o += v);
        }
        let rhs: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (ix, iy, iz) = grid.unravel(i);
                rhs_fine[r * ix + m * (r * iy + m * r * iz)]
            })
            .collect();
        let residual: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let scale = l2_norm(&lhs);
        let err = l2_norm(&residual);
        let relative_l2 = if scale > 0.0 { err / scale } else { err };
        out.push(DecompositionResidual {
            lhs: ScalarField::from_vec_unchecked(grid, lhs),
            rhs: ScalarField::from_vec_unchecked(grid, rhs),
            residual: ScalarField::from_vec_unchecked(grid, residual),
            relative_l2,
        });
    }
    Ok(out)
}
