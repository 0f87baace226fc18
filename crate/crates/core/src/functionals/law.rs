use serde::{Deserialize, Serialize};

use super::catalog::{CatalogEntry, CatalogId};
use super::fields::FieldSet;
use super::pointwise::{dissipation_direct, structure_density_terms};
use super::spectral::BoxAverager;
use crate::error::{invalid, Result};
use crate::increments::ShiftMethod;
use crate::mollifier::{BallQuadrature, SphereQuadrature};
use crate::numerics::det_mean;

/// Box means of the structure density over a λ sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureCurve {
    pub entry: CatalogId,
    pub lambdas: Vec<f64>,
    pub g_values: Vec<f64>,
    /// `term_values[i][k]`: term k at `lambdas[i]`.
    pub term_values: Vec<Vec<f64>>,
    pub term_labels: Vec<String>,
}

impl StructureCurve {
    /// A curve from given values, with no per-term breakdown.
    pub fn from_values(entry: CatalogId, lambdas: Vec<f64>, g_values: Vec<f64>) -> Result<Self> {
        if lambdas.len() != g_values.len() {
            return invalid("lambdas and values differ in length");
        }
        check_increasing("lambda", &lambdas)?;
        let term_values = g_values.iter().map(|&g| vec![g]).collect();
        Ok(Self {
            entry,
            lambdas,
            g_values,
            term_values,
            term_labels: vec!["total".into()],
        })
    }
}

/// Box means of D_ε over an ε sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationSweep {
    pub entry: CatalogId,
    pub epsilons: Vec<f64>,
    pub d_values: Vec<f64>,
    pub term_values: Vec<Vec<f64>>,
    pub term_labels: Vec<String>,
}

impl DissipationSweep {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.epsilons
            .iter()
            .copied()
            .zip(self.d_values.iter().copied())
            .collect()
    }
}

fn check_increasing(what: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|&x| !(x > 0.0)) {
        return invalid(format!("{what} values must be positive"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!("{what} values must be strictly increasing"));
    }
    Ok(())
}

/// λ sweep of box-averaged [`structure_density`](super::structure_density).
pub fn structure_curve(
    fields: &FieldSet,
    entry: &CatalogEntry,
    lambdas: &[f64],
    sphere: &SphereQuadrature,
    method: ShiftMethod,
) -> Result<StructureCurve> {
    check_increasing("lambda", lambdas)?;
    for &l in lambdas {
        fields.grid().check_scale("lambda", l)?;
    }
    let mut g_values = Vec::with_capacity(lambdas.len());
    let mut term_values = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let (total, parts) = structure_density_terms(fields, entry, l, sphere, method)?;
        g_values.push(total.mean());
        term_values.push(parts.iter().map(|p| det_mean(p.data())).collect());
    }
    Ok(StructureCurve {
        entry: entry.id,
        lambdas: lambdas.to_vec(),
        g_values,
        term_values,
        term_labels: entry.term_labels(),
    })
}

/// Same curve from the exact box average (no direction quadrature).
pub fn structure_curve_exact(
    avg: &BoxAverager,
    entry: &CatalogEntry,
    lambdas: &[f64],
) -> Result<StructureCurve> {
    check_increasing("lambda", lambdas)?;
    let mut g_values = Vec::with_capacity(lambdas.len());
    let mut term_values = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let (g, parts) = avg.mean_structure(l)?;
        g_values.push(g);
        term_values.push(parts);
    }
    Ok(StructureCurve {
        entry: entry.id,
        lambdas: lambdas.to_vec(),
        g_values,
        term_values,
        term_labels: entry.term_labels(),
    })
}

/// ε sweep of box-averaged [`dissipation_direct`].
pub fn dissipation_sweep(
    fields: &FieldSet,
    entry: &CatalogEntry,
    epsilons: &[f64],
    ball: &BallQuadrature,
    method: ShiftMethod,
) -> Result<DissipationSweep> {
    check_increasing("epsilon", epsilons)?;
    for &e in epsilons {
        fields.grid().check_scale("epsilon", e)?;
    }
    let mut d_values = Vec::with_capacity(epsilons.len());
    let mut term_values = Vec::with_capacity(epsilons.len());
    for &e in epsilons {
        let d = dissipation_direct(fields, entry, e, ball, method)?;
        d_values.push(d.mean());
        term_values.push(d.term_values.iter().map(|t| det_mean(t.data())).collect());
    }
    Ok(DissipationSweep {
        entry: entry.id,
        epsilons: epsilons.to_vec(),
        d_values,
        term_values,
        term_labels: entry.term_labels(),
    })
}

/// Exact box-averaged ε sweep.
pub fn dissipation_sweep_exact(
    avg: &BoxAverager,
    entry: &CatalogEntry,
    epsilons: &[f64],
) -> Result<DissipationSweep> {
    check_increasing("epsilon", epsilons)?;
    let mut d_values = Vec::with_capacity(epsilons.len());
    let mut term_values = Vec::with_capacity(epsilons.len());
    for &e in epsilons {
        let (d, parts) = avg.mean_dissipation(e)?;
        d_values.push(d);
        term_values.push(parts);
    }
    Ok(DissipationSweep {
        entry: entry.id,
        epsilons: epsilons.to_vec(),
        d_values,
        term_values,
        term_labels: entry.term_labels(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    #[serde(rename = "consistent_4_3")]
    Consistent43,
    Conservative,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Consistent43 => "consistent_4_3",
            Verdict::Conservative => "conservative",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LawOptions {
    /// Consecutive scales per plateau window.
    pub window: usize,
    /// Largest relative deviation from the window median that still counts as flat.
    pub flatness: f64,
    /// Allowed |ratio + 4/3| as a fraction of 4/3.
    pub tolerance: f64,
    pub noise_floor: f64,
}

impl Default for LawOptions {
    fn default() -> Self {
        Self {
            window: 3,
            flatness: 0.15,
            tolerance: 0.15,
            noise_floor: 1e-9,
        }
    }
}

/// Flattest window of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub value: f64,
    /// Scales of the chosen window.
    pub scales: Vec<f64>,
    /// Max relative deviation from the median inside the window.
    pub flatness: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub entry: CatalogId,
    pub d_extrapolated: f64,
    pub s_extrapolated: f64,
    pub ratio: Option<f64>,
    pub verdict: Verdict,
    pub d_plateau: Plateau,
    pub s_plateau: Plateau,
    pub options: LawOptions,
    pub diagnostics: Vec<String>,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn plateau(scales: &[f64], values: &[f64], opts: &LawOptions) -> Plateau {
    let w = opts.window.min(values.len());
    let mut best: Option<Plateau> = None;
    for start in 0..=values.len() - w {
        let win = &values[start..start + w];
        let med = median(win);
        let dev = win.iter().map(|v| (v - med).abs()).fold(0.0, f64::max);
        let flat = if dev == 0.0 {
            0.0
        } else if med == 0.0 {
            f64::INFINITY
        } else {
            dev / med.abs()
        };
        // Ties go to the smaller scales, which sit closer to the limit.
        if best.as_ref().map_or(true, |b| flat < b.flatness) {
            best = Some(Plateau {
                value: med,
                scales: scales[start..start + w].to_vec(),
                flatness: flat,
                accepted: flat <= opts.flatness,
            });
        }
    }
    best.expect("at least one window")
}

pub fn law_check(curve: &StructureCurve, d_sweep: &[(f64, f64)]) -> Result<LawReport> {
    law_check_with(curve, d_sweep, &LawOptions::default())
}

/// Plateau extrapolation of both sweeps and the −4/3 verdict on box averages.
pub fn law_check_with(
    curve: &StructureCurve,
    d_sweep: &[(f64, f64)],
    opts: &LawOptions,
) -> Result<LawReport> {
    if curve.lambdas.len() < 4 || d_sweep.len() < 4 {
        return invalid("law_check needs at least 4 scales in each sweep");
    }
    if opts.window < 2 {
        return invalid("plateau window must hold at least 2 scales");
    }
    let mut d_sorted = d_sweep.to_vec();
    d_sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eps: Vec<f64> = d_sorted.iter().map(|p| p.0).collect();
    check_increasing("epsilon", &eps)?;
    check_increasing("lambda", &curve.lambdas)?;
    let dv: Vec<f64> = d_sorted.iter().map(|p| p.1).collect();
    if dv.iter().chain(&curve.g_values).any(|v| !v.is_finite()) {
        return Err(crate::Error::Numerical(
            "non-finite value in a sweep".into(),
        ));
    }
    let dp = plateau(&eps, &dv, opts);
    let sp = plateau(&curve.lambdas, &curve.g_values, opts);
    let (d, s) = (dp.value, sp.value);
    let mut diagnostics = vec!["verdicts concern box-averaged quantities".to_string()];
    let ratio = if d != 0.0 { Some(s / d) } else { None };
    let verdict = if d.abs() < opts.noise_floor && s.abs() < opts.noise_floor {
        Verdict::Conservative
    } else if d.abs() <= opts.noise_floor {
        diagnostics.push(format!(
            "|d| = {:.3e} is below the noise floor {:.1e}",
            d.abs(),
            opts.noise_floor
        ));
        Verdict::Inconclusive
    } else if !dp.accepted || !sp.accepted {
        for (name, p) in [("dissipation", &dp), ("structure", &sp)] {
            if !p.accepted {
                diagnostics.push(format!(
                    "no {name} plateau: flattest window deviates by {:.3} (limit {})",
                    p.flatness, opts.flatness
                ));
            }
        }
        Verdict::Inconclusive
    } else {
        let r = s / d;
        let miss = (r + 4.0 / 3.0).abs();
        if miss <= opts.tolerance * 4.0 / 3.0 {
            Verdict::Consistent43
        } else {
            diagnostics.push(format!("ratio {r:.4} misses -4/3 by {miss:.4}"));
            Verdict::Inconclusive
        }
    };
    Ok(LawReport {
        entry: curve.entry,
        d_extrapolated: d,
        s_extrapolated: s,
        ratio,
        verdict,
        d_plateau: dp,
        s_plateau: sp,
        options: *opts,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(values: Vec<f64>) -> StructureCurve {
        let lambdas = (1..=values.len()).map(|i| 0.1 * i as f64).collect();
        StructureCurve::from_values(CatalogId::Temp, lambdas, values).unwrap()
    }

    fn sweep(values: &[f64]) -> Vec<(f64, f64)> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (0.1 * (i + 1) as f64, v))
            .collect()
    }

    #[test]
    fn zero_sweeps_are_conservative() {
        let r = law_check(&curve(vec![0.0; 5]), &sweep(&[0.0; 5])).unwrap();
        assert_eq!(r.verdict, Verdict::Conservative);
    }

    #[test]
    fn constant_sweeps_with_the_right_ratio_are_consistent() {
        let r = law_check(&curve(vec![0.4; 5]), &sweep(&[-0.3; 5])).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent43);
        assert!((r.ratio.unwrap() + 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_ratio_and_missing_plateau_are_inconclusive() {
        let r = law_check(&curve(vec![0.3; 5]), &sweep(&[-0.3; 5])).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        let r = law_check(&curve(vec![0.1, 0.4, 1.6, 6.4, 25.6]), &sweep(&[-0.3; 5])).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r
            .diagnostics
            .iter()
            .any(|d| d.contains("no structure plateau")));
    }

    #[test]
    fn too_few_scales_is_an_error() {
        assert!(law_check(&curve(vec![0.4; 3]), &sweep(&[-0.3; 3])).is_err());
    }

    #[test]
    fn plateau_picks_the_flattest_window() {
        let p = plateau(
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[5.0, 1.0, 1.01, 0.99, 3.0],
            &LawOptions::default(),
        );
        assert_eq!(p.scales, vec![2.0, 3.0, 4.0]);
        assert!((p.value - 1.0).abs() < 1e-15);
    }
}
