//! TOML run configuration and the slot builder.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::field_file::{decode_field, encode_field, sha256_hex};
use crate::error::{invalid, Error, Result};
use crate::functionals::{catalog, CatalogEntry, CatalogId, FieldSet, LawOptions, Slot};
use crate::grid::{curl, Field, PeriodicGrid, ScalarField, SymTensorField3, VectorField3};
use crate::mollifier::{
    ball_rule_with, sphere_rule, BallQuadrature, MollifierProfile, ProfileKind, RadialRule,
    SphereQuadrature,
};
use crate::numerics::mix64;
use crate::synth::{self, CascadeSpec, SpectrumSpec};
use crate::systems::{elsasser, elsasser_inverse, helmholtz_filter, strain};

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialRuleName {
    #[default]
    KernelGauss,
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSection {
    #[serde(default = "default_profile")]
    pub profile: ProfileKind,
    #[serde(default = "default_radial")]
    pub radial_nodes: usize,
    #[serde(default)]
    pub radial_rule: RadialRuleName,
}

fn default_profile() -> ProfileKind {
    ProfileKind::Bump
}

fn default_radial() -> usize {
    8
}

impl Default for MollifierSection {
    fn default() -> Self {
        Self {
            profile: default_profile(),
            radial_nodes: default_radial(),
            radial_rule: RadialRuleName::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSection {
    #[serde(default = "default_sphere")]
    pub count: usize,
}

fn default_sphere() -> usize {
    64
}

impl Default for SphereSection {
    fn default() -> Self {
        Self {
            count: default_sphere(),
        }
    }
}

/// Scale lists, either absolute or in multiples of the grid spacing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub epsilon: Option<Vec<f64>>,
    pub epsilon_h: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub lambda_h: Option<Vec<f64>>,
}

/// How box averages are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMethod {
    /// Ball and sphere quadrature of the pointwise fields.
    #[default]
    Quadrature,
    /// Closed-form box average from the field spectra.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Member {
    Velocity,
    Scalar,
    U,
    H,
    V,
    B,
}

/// Where a slot's field comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlotSource {
    File {
        path: PathBuf,
    },
    Abc {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "one")]
        c: f64,
    },
    TaylorGreen,
    /// One value per component.
    Constant {
        value: Vec<f64>,
    },
    /// Σ amp·cos(k·x + phase), each term `[amp, kx, ky, kz, phase]` with integer k.
    Modes {
        terms: Vec<[f64; 5]>,
    },
    GaussianScalar {
        slope: f64,
        k_min: f64,
        k_max: f64,
        #[serde(default = "one")]
        amplitude: f64,
        seed: Option<u64>,
    },
    GaussianDivfree {
        slope: f64,
        k_min: f64,
        k_max: f64,
        #[serde(default = "one")]
        amplitude: f64,
        seed: Option<u64>,
    },
    FractionalScalar {
        holder: f64,
        seed: Option<u64>,
    },
    FractionalDivfree {
        holder: f64,
        seed: Option<u64>,
    },
    CascadeVelocity {
        holder: f64,
        #[serde(default = "half")]
        correlated: f64,
        #[serde(default = "one")]
        amplitude: f64,
        seed: Option<u64>,
    },
    /// One member of a jointly built (velocity, scalar) pair.
    CascadeScalar {
        holder: f64,
        member: Member,
        #[serde(default = "half")]
        correlated: f64,
        #[serde(default = "one")]
        amplitude: f64,
        seed: Option<u64>,
    },
    /// One member of a jointly built Elsässer pair.
    CascadeElsasser {
        holder: f64,
        member: Member,
        #[serde(default = "half")]
        correlated: f64,
        #[serde(default = "one")]
        amplitude: f64,
        seed: Option<u64>,
    },
    Curl {
        of: String,
    },
    /// (1 − α²Δ)⁻¹ of another slot; α defaults to the functional's.
    Helmholtz {
        of: String,
        alpha: Option<f64>,
    },
    Strain {
        of: String,
    },
    /// u or h from the slots named `v` and `b`.
    Elsasser {
        v: String,
        b: String,
        member: Member,
    },
    /// v or b from the slots named `u` and `h`.
    ElsasserInverse {
        u: String,
        h: String,
        member: Member,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl SlotSource {
    pub fn kind(&self) -> &'static str {
        match self {
            SlotSource::File { .. } => "file",
            SlotSource::Abc { .. } => "abc",
            SlotSource::TaylorGreen => "taylor_green",
            SlotSource::Constant { .. } => "constant",
            SlotSource::Modes { .. } => "modes",
            SlotSource::GaussianScalar { .. } => "gaussian_scalar",
            SlotSource::GaussianDivfree { .. } => "gaussian_divfree",
            SlotSource::FractionalScalar { .. } => "fractional_scalar",
            SlotSource::FractionalDivfree { .. } => "fractional_divfree",
            SlotSource::CascadeVelocity { .. } => "cascade_velocity",
            SlotSource::CascadeScalar { .. } => "cascade_scalar",
            SlotSource::CascadeElsasser { .. } => "cascade_elsasser",
            SlotSource::Curl { .. } => "curl",
            SlotSource::Helmholtz { .. } => "helmholtz",
            SlotSource::Strain { .. } => "strain",
            SlotSource::Elsasser { .. } => "elsasser",
            SlotSource::ElsasserInverse { .. } => "elsasser_inverse",
        }
    }

    fn dependencies(&self) -> Vec<&str> {
        match self {
            SlotSource::Curl { of }
            | SlotSource::Helmholtz { of, .. }
            | SlotSource::Strain { of } => vec![of],
            SlotSource::Elsasser { v, b, .. } => vec![v, b],
            SlotSource::ElsasserInverse { u, h, .. } => vec![u, h],
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSection {
    pub catalog: Option<String>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub method: AverageMethod,
    #[serde(default)]
    pub slots: BTreeMap<String, SlotSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "one_usize")]
    pub stride: usize,
    #[serde(default = "two_thirds")]
    pub dealias: f64,
}

fn one_usize() -> usize {
    1
}

fn two_thirds() -> f64 {
    crate::solver::DEFAULT_DEALIAS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSection {
    /// Slot whose regularity plays α.
    #[serde(default = "default_v")]
    pub velocity: String,
    /// Slot whose regularity plays β.
    #[serde(default = "default_omega")]
    pub vorticity: String,
    #[serde(default = "three")]
    pub r1: f64,
    #[serde(default = "three")]
    pub r2: f64,
    /// Norm order p of the increment norms; defaults to r1.
    pub norm_order: Option<f64>,
}

fn default_v() -> String {
    "v".into()
}

fn default_omega() -> String {
    "omega".into()
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_out(),
            formats: default_formats(),
        }
    }
}

/// A parsed run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    #[serde(default)]
    pub mollifier: MollifierSection,
    #[serde(default)]
    pub sphere: SphereSection,
    #[serde(default)]
    pub sweeps: SweepSection,
    #[serde(default)]
    pub functional: FunctionalSection,
    pub solver: Option<SolverSection>,
    pub exponents: Option<ExponentSection>,
    pub law: Option<LawOptions>,
    #[serde(default)]
    pub output: OutputSection,
}

/// A configuration together with its source text and base directory.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub text: String,
    /// Relative paths in the config resolve against this directory.
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_text(text, base)
    }

    pub fn from_text(text: String, base: PathBuf) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        let loaded = Self { config, text, base };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.text.as_bytes())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.config.grid.n, self.config.grid.length)
    }

    fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let c = &self.config;
        for (what, list) in [
            ("epsilon", self.epsilons_opt()?),
            ("lambda", self.lambdas_opt()?),
        ] {
            for s in list.iter().flatten() {
                grid.check_scale(what, *s)?;
            }
        }
        if let Some(id) = &c.functional.catalog {
            CatalogId::parse(id)?;
        }
        for (name, src) in &c.functional.slots {
            Slot::parse(name)?;
            for dep in src.dependencies() {
                if !c.functional.slots.contains_key(dep) {
                    return invalid(format!("slot {name}: references undefined slot '{dep}'"));
                }
            }
            if let SlotSource::File { path } = src {
                let p = self.resolve(path);
                if !p.is_file() {
                    return invalid(format!(
                        "slot {name}: input file {} does not exist",
                        p.display()
                    ));
                }
            }
        }
        if c.sphere.count == 0 {
            return invalid("sphere count must be positive");
        }
        if c.output.formats.is_empty() {
            return invalid("output formats must not be empty");
        }
        Ok(())
    }

    fn scaled(
        &self,
        abs: &Option<Vec<f64>>,
        rel: &Option<Vec<f64>>,
        what: &str,
    ) -> Result<Option<Vec<f64>>> {
        let h = self.config.grid.length / self.config.grid.n as f64;
        match (abs, rel) {
            (Some(_), Some(_)) => invalid(format!("give either {what} or {what}_h, not both")),
            (Some(a), None) => Ok(Some(a.clone())),
            (None, Some(r)) => Ok(Some(r.iter().map(|m| m * h).collect())),
            (None, None) => Ok(None),
        }
    }

    fn epsilons_opt(&self) -> Result<Option<Vec<f64>>> {
        self.scaled(
            &self.config.sweeps.epsilon,
            &self.config.sweeps.epsilon_h,
            "epsilon",
        )
    }

    fn lambdas_opt(&self) -> Result<Option<Vec<f64>>> {
        self.scaled(
            &self.config.sweeps.lambda,
            &self.config.sweeps.lambda_h,
            "lambda",
        )
    }

    pub fn epsilons(&self) -> Result<Vec<f64>> {
        self.epsilons_opt()?
            .map_or_else(|| invalid("sweeps.epsilon (or epsilon_h) is required"), Ok)
    }

    pub fn lambdas(&self) -> Result<Vec<f64>> {
        self.lambdas_opt()?
            .map_or_else(|| invalid("sweeps.lambda (or lambda_h) is required"), Ok)
    }

    pub fn entry(&self) -> Result<CatalogEntry> {
        let id = self
            .config
            .functional
            .catalog
            .as_deref()
            .map_or_else(|| invalid("functional.catalog is required"), Ok)?;
        catalog(CatalogId::parse(id)?, self.config.functional.alpha)
    }

    pub fn profile(&self) -> MollifierProfile {
        MollifierProfile::of_kind(self.config.mollifier.profile)
    }

    pub fn sphere(&self) -> Result<SphereQuadrature> {
        sphere_rule(self.config.sphere.count)
    }

    pub fn ball(&self, eps: f64) -> Result<BallQuadrature> {
        let rule = match self.config.mollifier.radial_rule {
            RadialRuleName::KernelGauss => RadialRule::KernelGauss,
            RadialRuleName::GaussLegendre => RadialRule::GaussLegendre,
        };
        ball_rule_with(
            self.config.mollifier.radial_nodes,
            self.sphere()?,
            eps,
            self.profile(),
            rule,
        )
    }

    pub fn law_options(&self) -> LawOptions {
        self.config.law.unwrap_or_default()
    }
}

/// Content hash of one resolved input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub slot: String,
    pub source: String,
    /// sha256 of the file bytes, or of the YGF1 encoding of a generated field.
    pub sha256: String,
    pub path: Option<String>,
}

/// Every configured slot, built in dependency order.
#[derive(Debug, Clone)]
pub struct BuiltSlots {
    pub fields: BTreeMap<String, Field>,
    pub inputs: Vec<InputRecord>,
}

impl BuiltSlots {
    pub fn field_set(&self, grid: PeriodicGrid) -> Result<FieldSet> {
        let mut set = FieldSet::new(grid);
        for (name, f) in &self.fields {
            set.insert(Slot::parse(name)?, f.clone())
                .map_err(|e| Error::Invalid(format!("slot {name}: {e}")))?;
        }
        Ok(set)
    }
}

fn name_salt(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// Builds all slots. Independent generators without an explicit seed draw
/// from (run seed, slot name); joint generators from (run seed, generator)
/// so both members of a pair come from the same draw.
pub fn build_slots(cfg: &LoadedConfig, seed: u64) -> Result<BuiltSlots> {
    let grid = cfg.grid()?;
    let slots = &cfg.config.functional.slots;
    let mut fields: BTreeMap<String, Field> = BTreeMap::new();
    let mut inputs = Vec::new();
    let mut pending: Vec<&String> = slots.keys().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut next = Vec::new();
        for name in pending {
            let src = &slots[name];
            if src.dependencies().iter().any(|d| !fields.contains_key(*d)) {
                next.push(name);
                continue;
            }
            let wrap = |e: Error| match e {
                Error::Invalid(m) => Error::Invalid(format!("slot {name}: {m}")),
                Error::Io(m) => Error::Io(format!("slot {name}: {m}")),
                Error::Numerical(m) => Error::Numerical(format!("slot {name}: {m}")),
            };
            let (field, record) = build_one(cfg, grid, seed, name, src, &fields).map_err(wrap)?;
            let expected = Slot::parse(name)?.ncomp();
            if field.ncomp() != expected {
                return invalid(format!(
                    "slot {name}: needs {expected} components, {} gives {}",
                    src.kind(),
                    field.ncomp()
                ));
            }
            inputs.push(record);
            fields.insert(name.clone(), field);
        }
        if next.len() == before {
            return invalid(format!("slot definitions form a cycle among {next:?}"));
        }
        pending = next;
    }
    inputs.sort_by(|a, b| a.slot.cmp(&b.slot));
    Ok(BuiltSlots { fields, inputs })
}

fn vector_of<'a>(fields: &'a BTreeMap<String, Field>, name: &str) -> Result<&'a VectorField3> {
    fields[name].as_vector().map_or_else(
        || invalid(format!("slot '{name}' is not a vector field")),
        Ok,
    )
}

fn build_one(
    cfg: &LoadedConfig,
    grid: PeriodicGrid,
    seed: u64,
    name: &str,
    src: &SlotSource,
    done: &BTreeMap<String, Field>,
) -> Result<(Field, InputRecord)> {
    let own_seed = |s: &Option<u64>| s.unwrap_or_else(|| mix64(seed ^ name_salt(name)));
    let joint_seed = |s: &Option<u64>| s.unwrap_or_else(|| mix64(seed ^ name_salt(src.kind())));
    let cascade = |holder: f64, correlated: f64, amplitude: f64, s: u64| CascadeSpec {
        holder,
        correlated,
        seed: s,
        amplitude,
    };
    let field: Field = match src {
        SlotSource::File { path: p } => {
            let full = cfg.resolve(p);
            let bytes =
                std::fs::read(&full).map_err(|e| Error::Io(format!("{}: {e}", full.display())))?;
            let f =
                decode_field(&bytes).map_err(|e| Error::Io(format!("{}: {e}", full.display())))?;
            if f.grid() != &grid {
                return invalid(format!(
                    "{} has n={} L={}, config grid is n={} L={}",
                    full.display(),
                    f.grid().n(),
                    f.grid().length(),
                    grid.n(),
                    grid.length()
                ));
            }
            let record = InputRecord {
                slot: name.into(),
                source: src.kind().into(),
                sha256: sha256_hex(&bytes),
                path: Some(p.display().to_string()),
            };
            return Ok((f, record));
        }
        SlotSource::Abc { a, b, c } => synth::abc_flow(grid, *a, *b, *c).into(),
        SlotSource::TaylorGreen => synth::taylor_green(grid).into(),
        SlotSource::Constant { value } => Field::from_components(
            value
                .iter()
                .map(|&c| ScalarField::constant(grid, c))
                .collect(),
        )?,
        SlotSource::Modes { terms } => {
            for t in terms {
                if t[1..4].iter().any(|k| k.fract() != 0.0) {
                    return invalid("mode wavenumbers must be integers");
                }
                let lim = crate::grid::band_limit(grid.n()) as f64;
                if t[1..4].iter().any(|k| k.abs() > lim) {
                    return invalid(format!(
                        "mode {:?} exceeds the band limit n/3 = {lim}",
                        &t[1..4]
                    ));
                }
            }
            let k0 = grid.k0();
            ScalarField::from_fn(grid, |x, y, z| {
                terms
                    .iter()
                    .map(|t| t[0] * (k0 * (t[1] * x + t[2] * y + t[3] * z) + t[4]).cos())
                    .sum()
            })
            .into()
        }
        SlotSource::GaussianScalar {
            slope,
            k_min,
            k_max,
            amplitude,
            seed: s,
        } => {
            let spec = SpectrumSpec {
                slope: *slope,
                k_min: *k_min,
                k_max: *k_max,
                seed: own_seed(s),
                amplitude: *amplitude,
            };
            synth::gaussian_scalar(grid, &spec)?.into()
        }
        SlotSource::GaussianDivfree {
            slope,
            k_min,
            k_max,
            amplitude,
            seed: s,
        } => {
            let spec = SpectrumSpec {
                slope: *slope,
                k_min: *k_min,
                k_max: *k_max,
                seed: own_seed(s),
                amplitude: *amplitude,
            };
            synth::gaussian_divfree(grid, &spec)?.into()
        }
        SlotSource::FractionalScalar { holder, seed: s } => {
            synth::fractional_scalar(grid, *holder, own_seed(s))?.into()
        }
        SlotSource::FractionalDivfree { holder, seed: s } => {
            synth::fractional_divfree(grid, *holder, own_seed(s))?.into()
        }
        SlotSource::CascadeVelocity {
            holder,
            correlated,
            amplitude,
            seed: s,
        } => synth::cascade_velocity(
            grid,
            &cascade(*holder, *correlated, *amplitude, own_seed(s)),
        )?
        .into(),
        SlotSource::CascadeScalar {
            holder,
            member,
            correlated,
            amplitude,
            seed: s,
        } => {
            let (v, th) = synth::cascade_scalar_pair(
                grid,
                &cascade(*holder, *correlated, *amplitude, joint_seed(s)),
            )?;
            match member {
                Member::Velocity | Member::V => v.into(),
                Member::Scalar => th.into(),
                m => {
                    return invalid(format!(
                        "cascade_scalar has members velocity and scalar, not {m:?}"
                    ))
                }
            }
        }
        SlotSource::CascadeElsasser {
            holder,
            member,
            correlated,
            amplitude,
            seed: s,
        } => {
            let (u, h) = synth::cascade_elsasser(
                grid,
                &cascade(*holder, *correlated, *amplitude, joint_seed(s)),
            )?;
            match member {
                Member::U => u.into(),
                Member::H => h.into(),
                m => return invalid(format!("cascade_elsasser has members u and h, not {m:?}")),
            }
        }
        SlotSource::Curl { of } => curl(vector_of(done, of)?).into(),
        SlotSource::Helmholtz { of, alpha } => helmholtz_filter(
            vector_of(done, of)?,
            alpha.unwrap_or(cfg.config.functional.alpha),
        )?
        .into(),
        SlotSource::Strain { of } => {
            let s: SymTensorField3 = strain(vector_of(done, of)?);
            s.into()
        }
        SlotSource::Elsasser { v, b, member } => {
            let (u, h) = elsasser(vector_of(done, v)?, vector_of(done, b)?)?;
            match member {
                Member::U => u.into(),
                Member::H => h.into(),
                m => return invalid(format!("elsasser has members u and h, not {m:?}")),
            }
        }
        SlotSource::ElsasserInverse { u, h, member } => {
            let (v, b) = elsasser_inverse(vector_of(done, u)?, vector_of(done, h)?)?;
            match member {
                Member::V => v.into(),
                Member::B => b.into(),
                m => return invalid(format!("elsasser_inverse has members v and b, not {m:?}")),
            }
        }
    };
    let record = InputRecord {
        slot: name.into(),
        source: src.kind().into(),
        sha256: sha256_hex(&encode_field(&field)),
        path: None,
    };
    Ok((field, record))
}
