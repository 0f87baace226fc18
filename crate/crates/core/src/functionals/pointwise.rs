use std::f64::consts::PI;

use rayon::prelude::*;

use super::catalog::{CatalogEntry, CatalogId};
use super::fields::{resolve, Atom, FieldSet, Resolved};
use crate::error::Result;
use crate::grid::{PeriodicGrid, ScalarField};
use crate::increments::{ShiftEngine, ShiftMethod};
use crate::mollifier::{BallQuadrature, MollifierProfile, SphereQuadrature};

/// Pointwise D_ε(x) with its per-term contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationField {
    pub values: ScalarField,
    /// c_k-weighted contribution of each catalog term.
    pub term_values: Vec<ScalarField>,
    pub epsilon: f64,
    pub entry: CatalogId,
    pub quadrature: String,
}

impl DissipationField {
    pub fn mean(&self) -> f64 {
        self.values.mean()
    }
}

/// Adds c·(g·δa)(Σ w δb δc) for every atom into its term accumulator.
pub(crate) fn accumulate(
    atoms: &[Atom],
    incs: &[Vec<f64>],
    g: [f64; 3],
    scale: f64,
    acc: &mut [Vec<f64>],
) {
    for a in atoms {
        let [t0, t1, t2] = a.transport;
        let c = a.coeff * scale;
        let (d0, d1, d2) = (&incs[t0], &incs[t1], &incs[t2]);
        acc[a.term].par_iter_mut().enumerate().for_each(|(x, out)| {
            let ga = g[0] * d0[x] + g[1] * d1[x] + g[2] * d2[x];
            let mut bc = 0.0;
            for &(p, q, w) in &a.pairs {
                bc += w * incs[p][x] * incs[q][x];
            }
            *out += c * ga * bc;
        });
    }
}

fn finish(
    grid: PeriodicGrid,
    acc: Vec<Vec<f64>>,
    eps: f64,
    entry: &CatalogEntry,
    quadrature: String,
) -> DissipationField {
    let mut total = vec![0.0; grid.len()];
    for t in &acc {
        total.iter_mut().zip(t).for_each(|(s, v)| *s += v);
    }
    DissipationField {
        values: ScalarField::from_vec_unchecked(grid, total),
        term_values: acc
            .into_iter()
            .map(|t| ScalarField::from_vec_unchecked(grid, t))
            .collect(),
        epsilon: eps,
        entry: entry.id,
        quadrature,
    }
}

fn prepare(
    fields: &FieldSet,
    entry: &CatalogEntry,
    method: ShiftMethod,
) -> Result<(Resolved, ShiftEngine)> {
    let res = resolve(fields, entry)?;
    let engine = ShiftEngine::new(*fields.grid(), res.comps.clone(), method);
    Ok((res, engine))
}

/// D_ε(x) = Σ_k c_k Σ_nodes W ∇φ_ε(ℓ)·δa_k (δb_k·δc_k) on a ball rule.
pub fn dissipation_direct(
    fields: &FieldSet,
    entry: &CatalogEntry,
    eps: f64,
    ball: &BallQuadrature,
    method: ShiftMethod,
) -> Result<DissipationField> {
    let grid = *fields.grid();
    grid.check_scale("epsilon", eps)?;
    let ball = ball.with_epsilon(eps);
    let (res, engine) = prepare(fields, entry, method)?;
    let mut acc = vec![vec![0.0; grid.len()]; res.nterms];
    for node in ball.nodes() {
        let incs = engine.increments(node.l);
        accumulate(&res.atoms, &incs, node.g, 1.0, &mut acc);
    }
    let q = format!(
        "ball {}x{} ({method:?})",
        ball.radial_nodes.len(),
        ball.sphere.len()
    );
    Ok(finish(grid, acc, eps, entry, q))
}

/// The same quantity through D_ε(x) = Σ_k c_k 4π ∫ r³ φ′(r) T_k(x, rε) dr,
/// with T_k the sphere-averaged structure density of term k at scale rε.
pub fn dissipation_radial(
    fields: &FieldSet,
    entry: &CatalogEntry,
    eps: f64,
    sphere: &SphereQuadrature,
    radial_nodes: &[(f64, f64)],
    profile: &MollifierProfile,
    method: ShiftMethod,
) -> Result<DissipationField> {
    let grid = *fields.grid();
    grid.check_scale("epsilon", eps)?;
    let (res, engine) = prepare(fields, entry, method)?;
    let mut acc = vec![vec![0.0; grid.len()]; res.nterms];
    for &(r, w) in radial_nodes {
        let lambda = r * eps;
        let t = sphere_average(&res, &engine, lambda, sphere);
        let radial = 4.0 * PI * w * r.powi(3) * profile.deriv(r);
        for (a, tk) in acc.iter_mut().zip(&t) {
            a.par_iter_mut()
                .zip(tk.par_iter())
                .for_each(|(o, &v)| *o += radial * v);
        }
    }
    let q = format!(
        "radial {}x{} ({method:?})",
        radial_nodes.len(),
        sphere.len()
    );
    Ok(finish(grid, acc, eps, entry, q))
}

/// Σ_atoms c (1/λ) Σ_j w_j ζ_j·δa(λζ_j) (δb·δc)(λζ_j), one array per term.
fn sphere_average(
    res: &Resolved,
    engine: &ShiftEngine,
    lambda: f64,
    sphere: &SphereQuadrature,
) -> Vec<Vec<f64>> {
    let n = engine.grid().len();
    let mut acc = vec![vec![0.0; n]; res.nterms];
    for (d, &w) in sphere.directions.iter().zip(&sphere.weights) {
        let incs = engine.increments([lambda * d[0], lambda * d[1], lambda * d[2]]);
        let g = [w * d[0] / lambda, w * d[1] / lambda, w * d[2] / lambda];
        accumulate(&res.atoms, &incs, g, 1.0, &mut acc);
    }
    acc
}

/// Lattice-sum rule: ℓ runs over lattice vectors inside the ball with weight
/// h³∇φ_ε(ℓ); shifts are exact cyclic translations.
pub fn dissipation_lattice(
    fields: &FieldSet,
    entry: &CatalogEntry,
    eps: f64,
    profile: &MollifierProfile,
) -> Result<DissipationField> {
    let grid = *fields.grid();
    grid.check_scale("epsilon", eps)?;
    let res = resolve(fields, entry)?;
    let h = grid.spacing();
    let m = (eps / h).ceil() as i64;
    let mut acc = vec![vec![0.0; grid.len()]; res.nterms];
    let mut count = 0usize;
    for mz in -m..=m {
        for my in -m..=m {
            for mx in -m..=m {
                let l = [mx as f64 * h, my as f64 * h, mz as f64 * h];
                let gk = profile.grad_kernel(l, eps);
                if gk == [0.0; 3] {
                    continue;
                }
                count += 1;
                let h3 = h * h * h;
                let g = [h3 * gk[0], h3 * gk[1], h3 * gk[2]];
                let incs: Vec<Vec<f64>> = res
                    .comps
                    .iter()
                    .map(|c| {
                        let mut s = c.roll([mx, my, mz]).into_data();
                        s.iter_mut().zip(c.data()).for_each(|(a, b)| *a -= b);
                        s
                    })
                    .collect();
                accumulate(&res.atoms, &incs, g, 1.0, &mut acc);
            }
        }
    }
    Ok(finish(
        grid,
        acc,
        eps,
        entry,
        format!("lattice {count} nodes"),
    ))
}

/// G(x,λ) = Σ_k (−σ_k)(1/λ) ⟨ζ·δa_k (δb_k·δc_k)⟩_sphere.
pub fn structure_density(
    fields: &FieldSet,
    entry: &CatalogEntry,
    lambda: f64,
    sphere: &SphereQuadrature,
    method: ShiftMethod,
) -> Result<ScalarField> {
    Ok(structure_density_terms(fields, entry, lambda, sphere, method)?.0)
}

/// Structure density together with its per-term parts.
pub fn structure_density_terms(
    fields: &FieldSet,
    entry: &CatalogEntry,
    lambda: f64,
    sphere: &SphereQuadrature,
    method: ShiftMethod,
) -> Result<(ScalarField, Vec<ScalarField>)> {
    let grid = *fields.grid();
    grid.check_scale("lambda", lambda)?;
    let (res, engine) = prepare(fields, entry, method)?;
    let t = sphere_average(&res, &engine, lambda, sphere);
    let mut total = vec![0.0; grid.len()];
    let mut parts = Vec::with_capacity(t.len());
    for tk in t {
        let part: Vec<f64> = tk.iter().map(|v| 4.0 * v).collect();
        total.iter_mut().zip(&part).for_each(|(s, v)| *s += v);
        parts.push(ScalarField::from_vec_unchecked(grid, part));
    }
    Ok((ScalarField::from_vec_unchecked(grid, total), parts))
}
