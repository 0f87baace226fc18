//! Radial mollifier kernels, their gradients and the sphere and ball
//! quadrature rules used for every ℓ-integral.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{gauss_legendre, integrate_adaptive, sinc};

/// Un-normalized radial profile shapes supported on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// exp(−1/(1−r²)).
    Bump,
    /// (1−r²)⁴.
    Quartic,
}

/// A profile kind times a constant factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileShape {
    pub kind: ProfileKind,
    pub scale: f64,
}

impl ProfileShape {
    pub fn new(kind: ProfileKind) -> Self {
        Self { kind, scale: 1.0 }
    }

    pub fn scaled(self, s: f64) -> Self {
        Self {
            scale: self.scale * s,
            ..self
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let q = 1.0 - r * r;
        if q <= 0.0 {
            return 0.0;
        }
        self.scale
            * match self.kind {
                ProfileKind::Bump => {
                    if q <= 1e-12 {
                        0.0
                    } else {
                        (-1.0 / q).exp()
                    }
                }
                ProfileKind::Quartic => q.powi(4),
            }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        let q = 1.0 - r * r;
        if q <= 0.0 {
            return 0.0;
        }
        self.scale
            * match self.kind {
                ProfileKind::Bump => {
                    if q <= 1e-12 {
                        0.0
                    } else {
                        -2.0 * r / (q * q) * (-1.0 / q).exp()
                    }
                }
                ProfileKind::Quartic => -8.0 * r * q.powi(3),
            }
    }
}

/// C₀ such that C₀·shape has unit integral over ℝ³.
pub fn normalization_constant(shape: ProfileShape) -> Result<f64> {
    let m = integrate_adaptive(|r| r * r * shape.eval(r), 0.0, 1.0, 1e-15)?;
    if !(m.is_finite() && m > 0.0) {
        return invalid("profile has no positive mass");
    }
    Ok(1.0 / (4.0 * PI * m))
}

/// φ(r) = c0 · shape(r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierProfile {
    pub shape: ProfileShape,
    pub c0: f64,
}

impl MollifierProfile {
    /// The normalized standard bump C₀ e^{−1/(1−r²)}.
    pub fn standard() -> Self {
        Self::normalized(ProfileShape::new(ProfileKind::Bump))
    }

    pub fn normalized(shape: ProfileShape) -> Self {
        let c0 = normalization_constant(shape).expect("built-in profiles integrate");
        Self { shape, c0 }
    }

    pub fn of_kind(kind: ProfileKind) -> Self {
        Self::normalized(ProfileShape::new(kind))
    }

    /// Arbitrary multiple of a shape, not necessarily of unit mass.
    pub fn with_constant(shape: ProfileShape, c0: f64) -> Self {
        Self { shape, c0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.c0 * self.shape.eval(r)
    }

    pub fn deriv(&self, r: f64) -> f64 {
        self.c0 * self.shape.deriv(r)
    }

    /// 4π ∫ r² φ(r) dr.
    pub fn mass(&self) -> f64 {
        4.0 * PI * integrate_adaptive(|r| r * r * self.eval(r), 0.0, 1.0, 1e-15).unwrap_or(f64::NAN)
    }

    /// Fourier transform φ̂(κ) = 4π ∫₀¹ r² φ(r) sin(κr)/(κr) dr of the radial profile.
    pub fn fourier(&self, kappa: f64) -> f64 {
        let panels = 8 + (kappa.abs() / 2.0).ceil() as usize;
        let base = gauss_legendre(16, 0.0, 1.0);
        let h = 1.0 / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = p as f64 * h;
            for &(x, w) in &base {
                let r = a + h * x;
                acc += w * h * r * r * self.eval(r) * sinc(kappa * r);
            }
        }
        4.0 * PI * acc
    }

    /// ∇φ_ε(ℓ) = ε⁻⁴ φ′(|ℓ|/ε) ℓ/|ℓ|; zero at ℓ = 0 and outside the support.
    pub fn grad_kernel(&self, l: [f64; 3], eps: f64) -> [f64; 3] {
        let r = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
        if r == 0.0 || r >= eps {
            return [0.0; 3];
        }
        let s = self.deriv(r / eps) / (eps.powi(4) * r);
        [s * l[0], s * l[1], s * l[2]]
    }

    /// φ_ε(ℓ) = ε⁻³ φ(|ℓ|/ε).
    pub fn kernel(&self, l: [f64; 3], eps: f64) -> f64 {
        let r = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
        self.eval(r / eps) / eps.powi(3)
    }
}

impl Default for MollifierProfile {
    fn default() -> Self {
        Self::standard()
    }
}

/// ∫₀^∞ r³ φ′(r) dr, which is −3/(4π) times the mass of φ.
pub fn radial_third_moment(profile: &MollifierProfile) -> f64 {
    integrate_adaptive(|r| r.powi(3) * profile.deriv(r), 0.0, 1.0, 1e-15).unwrap_or_else(|_| {
        let rule = gauss_legendre(200, 0.0, 1.0);
        rule.iter()
            .map(|&(r, w)| w * r.powi(3) * profile.deriv(r))
            .sum()
    })
}

/// Equal-weight direction set on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(&d, &w)| w * f(d))
            .sum()
    }

    pub fn first_moments(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (d, &w) in self.directions.iter().zip(&self.weights) {
            for c in 0..3 {
                m[c] += w * d[c];
            }
        }
        m
    }
}

/// Fibonacci-lattice directions with weights 1/count. For even counts the
/// set is a Fibonacci lattice of count/2 points plus its antipodes, so every
/// odd moment vanishes to rounding.
pub fn sphere_rule(count: usize) -> Result<SphereQuadrature> {
    if count < 6 {
        return invalid(format!("sphere rule needs at least 6 points, got {count}"));
    }
    let mut directions = if count % 2 == 0 {
        fibonacci(count / 2)
    } else {
        fibonacci(count)
    };
    if count % 2 == 0 {
        let mirrored: Vec<[f64; 3]> = directions.iter().map(|d| [-d[0], -d[1], -d[2]]).collect();
        directions.extend(mirrored);
    }
    Ok(SphereQuadrature {
        directions,
        weights: vec![1.0 / count as f64; count],
    })
}

fn fibonacci(count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let t = golden * i as f64;
            let d = [rho * t.cos(), rho * t.sin(), z];
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            [d[0] / norm, d[1] / norm, d[2] / norm]
        })
        .collect()
}

/// Node of a ball rule: displacement ℓ and the vector weight W·∇φ_ε(ℓ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallNode {
    pub l: [f64; 3],
    pub g: [f64; 3],
}

/// Product rule (Gauss–Legendre in r) × (sphere) for ∫ ∇φ_ε(ℓ)·F(ℓ) dℓ.
#[derive(Debug, Clone, PartialEq)]
pub struct BallQuadrature {
    /// (r_m, w_m) on (0, 1).
    pub radial_nodes: Vec<(f64, f64)>,
    pub sphere: SphereQuadrature,
    pub epsilon: f64,
    pub profile: MollifierProfile,
}

/// Radial node families for ball rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialRule {
    /// Gauss rule for the weight −r²φ′(r) on (0, 1): exact for integrands
    /// polynomial in r up to degree 2m−1.
    #[default]
    KernelGauss,
    /// Plain Gauss–Legendre on (0, 1).
    GaussLegendre,
}

/// Ball rule with kernel-weighted Gauss radial nodes for the standard bump.
pub fn ball_rule(
    radial_count: usize,
    sphere: SphereQuadrature,
    eps: f64,
) -> Result<BallQuadrature> {
    ball_rule_with(
        radial_count,
        sphere,
        eps,
        MollifierProfile::standard(),
        RadialRule::KernelGauss,
    )
}

pub fn ball_rule_with(
    radial_count: usize,
    sphere: SphereQuadrature,
    eps: f64,
    profile: MollifierProfile,
    rule: RadialRule,
) -> Result<BallQuadrature> {
    if radial_count < 4 {
        return invalid(format!(
            "ball rule needs at least 4 radial nodes, got {radial_count}"
        ));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return invalid(format!("epsilon must be positive, got {eps}"));
    }
    let radial_nodes = match rule {
        RadialRule::GaussLegendre => gauss_legendre(radial_count, 0.0, 1.0),
        RadialRule::KernelGauss => kernel_gauss(&profile, radial_count)?,
    };
    Ok(BallQuadrature {
        radial_nodes,
        sphere,
        epsilon: eps,
        profile,
    })
}

/// Gauss nodes for the weight μ(r) = −r²φ′(r), returned as Lebesgue-style
/// weights w_m with w_m·r_m²·φ′(r_m) = −W_m, so ball nodes are formed the
/// same way for every radial family.
fn kernel_gauss(profile: &MollifierProfile, m: usize) -> Result<Vec<(f64, f64)>> {
    // Discretized measure: composite Gauss–Legendre.
    let panels = 96;
    let base = gauss_legendre(20, 0.0, 1.0);
    let mut xs = Vec::with_capacity(panels * base.len());
    let mut ws = Vec::with_capacity(panels * base.len());
    for p in 0..panels {
        let a = p as f64 / panels as f64;
        let h = 1.0 / panels as f64;
        for &(x, w) in &base {
            let r = a + h * x;
            let mu = -r * r * profile.deriv(r);
            if mu > 0.0 {
                xs.push(r);
                ws.push(w * h * mu);
            }
        }
    }
    if xs.len() < 2 * m {
        return invalid("kernel weight has too little support for the requested node count");
    }
    // Stieltjes procedure for the three-term recurrence.
    let mut alpha = vec![0.0; m];
    let mut beta = vec![0.0; m];
    let mut p_prev = vec![0.0; xs.len()];
    let mut p_cur = vec![1.0; xs.len()];
    let mut norm_prev = 1.0;
    for k in 0..m {
        let norm: f64 = ws.iter().zip(&p_cur).map(|(w, p)| w * p * p).sum();
        let mom: f64 = ws
            .iter()
            .zip(&p_cur)
            .zip(&xs)
            .map(|((w, p), x)| w * x * p * p)
            .sum();
        alpha[k] = mom / norm;
        beta[k] = if k == 0 { norm } else { norm / norm_prev };
        let next: Vec<f64> = (0..xs.len())
            .map(|i| (xs[i] - alpha[k]) * p_cur[i] - if k == 0 { 0.0 } else { beta[k] * p_prev[i] })
            .collect();
        p_prev = std::mem::replace(&mut p_cur, next);
        norm_prev = norm;
    }
    let jacobi = nalgebra::DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[j].sqrt()
        } else if j + 1 == i {
            beta[i].sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let total = beta[0];
    let mut nodes: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let r = eig.eigenvalues[i];
            let big_w = total * eig.eigenvectors[(0, i)].powi(2);
            (r, big_w / (-r * r * profile.deriv(r)))
        })
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    if nodes
        .iter()
        .any(|&(r, w)| !(r > 0.0 && r < 1.0 && w.is_finite() && w > 0.0))
    {
        return Err(crate::error::Error::Numerical(
            "kernel Gauss rule produced invalid nodes".into(),
        ));
    }
    Ok(nodes)
}

impl BallQuadrature {
    pub fn with_profile(mut self, profile: MollifierProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_epsilon(&self, eps: f64) -> Self {
        Self {
            epsilon: eps,
            ..self.clone()
        }
    }

    /// All nodes with their kernel-weighted vector weights,
    /// radial index outer, direction index inner.
    pub fn nodes(&self) -> Vec<BallNode> {
        let eps = self.epsilon;
        let mut out = Vec::with_capacity(self.radial_nodes.len() * self.sphere.len());
        for &(r, wr) in &self.radial_nodes {
            // dℓ = ε³ r² dr dσ and ∇φ_ε = ε⁻⁴ φ′(r) ζ.
            let radial = 4.0 * PI * wr * r * r * self.profile.deriv(r) / eps;
            for (d, &wd) in self.sphere.directions.iter().zip(&self.sphere.weights) {
                let s = radial * wd;
                out.push(BallNode {
                    l: [r * eps * d[0], r * eps * d[1], r * eps * d[2]],
                    g: [s * d[0], s * d[1], s * d[2]],
                });
            }
        }
        out
    }

    /// ∫ ∇φ_ε(ℓ)·F(ℓ) dℓ.
    pub fn integrate(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> f64 {
        self.nodes()
            .iter()
            .map(|nd| {
                let v = f(nd.l);
                nd.g[0] * v[0] + nd.g[1] * v[1] + nd.g[2] * v[2]
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STANDARD_C0: f64 = 2.267_116_739_608_326_7;

    #[test]
    fn standard_constant_matches_tabulated_value() {
        let c0 = normalization_constant(ProfileShape::new(ProfileKind::Bump)).unwrap();
        assert!((c0 - STANDARD_C0).abs() < 1e-9, "{c0}");
        assert!((MollifierProfile::standard().mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn normalization_is_linear_in_scale() {
        let s = ProfileShape::new(ProfileKind::Bump);
        let c = normalization_constant(s).unwrap();
        let c2 = normalization_constant(s.scaled(2.0)).unwrap();
        assert!((c2 - c / 2.0).abs() < 1e-12);
        let unit = normalization_constant(s.scaled(c)).unwrap();
        assert!((unit - 1.0).abs() < 1e-10);
    }

    #[test]
    fn third_moment_is_profile_independent() {
        let target = -3.0 / (4.0 * PI);
        for kind in [ProfileKind::Bump, ProfileKind::Quartic] {
            let m = radial_third_moment(&MollifierProfile::of_kind(kind));
            assert!((m - target).abs() < 1e-8, "{kind:?}: {m}");
        }
        let p = MollifierProfile::standard();
        let doubled = MollifierProfile::with_constant(p.shape, 2.0 * p.c0);
        assert!((radial_third_moment(&doubled) + 3.0 / (2.0 * PI)).abs() < 1e-8);
    }

    #[test]
    fn derivative_guard_near_support_edge() {
        let p = MollifierProfile::standard();
        assert_eq!(p.deriv(1.0 - 1e-13), 0.0);
        assert_eq!(p.deriv(0.0), 0.0);
        assert!(p.deriv(0.5) < 0.0);
    }

    #[test]
    fn grad_kernel_support_parity_scaling() {
        let p = MollifierProfile::standard();
        assert_eq!(p.grad_kernel([0.3, 0.0, 0.0], 0.2), [0.0; 3]);
        let l = [0.03, -0.05, 0.02];
        let a = p.grad_kernel(l, 0.1);
        let b = p.grad_kernel([-l[0], -l[1], -l[2]], 0.1);
        let c = p.grad_kernel([2.0 * l[0], 2.0 * l[1], 2.0 * l[2]], 0.2);
        for i in 0..3 {
            assert_eq!(a[i], -b[i]);
            assert!((c[i] - a[i] / 16.0).abs() < 1e-12 * a[i].abs().max(1.0));
        }
    }

    #[test]
    fn fourier_transform_at_zero_is_mass() {
        let p = MollifierProfile::standard();
        assert!((p.fourier(0.0) - 1.0).abs() < 1e-11);
        // Against adaptive quadrature at a large argument.
        let k = 37.0;
        let direct = 4.0
            * PI
            * integrate_adaptive(|r| r * r * p.eval(r) * sinc(k * r), 0.0, 1.0, 1e-14).unwrap();
        assert!((p.fourier(k) - direct).abs() < 1e-11);
    }

    #[test]
    fn sphere_moment_gates() {
        let s = sphere_rule(64).unwrap();
        for m in s.first_moments() {
            assert!(m.abs() <= 1e-3);
        }
        assert_eq!(s.weights.iter().sum::<f64>(), 1.0);
        let q = s.integrate(|d| d[0] * d[0]);
        assert!((q - 1.0 / 3.0).abs() < 1e-2);
        let errs: Vec<f64> = [16, 64, 256]
            .iter()
            .map(|&c| (sphere_rule(c).unwrap().integrate(|d| d[0] * d[0]) - 1.0 / 3.0).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(sphere_rule(5).is_err());
    }

    #[test]
    fn ball_rule_moment_identities() {
        for eps in [0.1, 0.2] {
            let b = ball_rule(16, sphere_rule(64).unwrap(), eps).unwrap();
            assert!(b.integrate(|_| [1.0, -2.0, 0.5]).abs() < 1e-12);
            assert!((b.integrate(|l| l) + 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn kernel_gauss_is_exact_for_radial_polynomials() {
        let p = MollifierProfile::standard();
        let b = ball_rule(8, sphere_rule(64).unwrap(), 1.0).unwrap();
        for deg in 1..12 {
            let exact = 4.0
                * PI
                * integrate_adaptive(|r| r.powi(2 + deg) * p.deriv(r), 0.0, 1.0, 1e-15).unwrap();
            let quad: f64 = b
                .radial_nodes
                .iter()
                .map(|&(r, w)| 4.0 * PI * w * r.powi(2 + deg) * p.deriv(r))
                .sum();
            assert!(
                (quad - exact).abs() < 1e-11,
                "degree {deg}: {quad} vs {exact}"
            );
        }
        let gl = ball_rule_with(
            16,
            sphere_rule(64).unwrap(),
            1.0,
            p,
            RadialRule::GaussLegendre,
        )
        .unwrap();
        assert!((gl.integrate(|l| l) + 3.0).abs() < 2e-3);
    }
}
