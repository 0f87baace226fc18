use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Named field slots an entry can reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    #[serde(rename = "v")]
    V,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "h")]
    H,
    #[serde(rename = "H")]
    BigH,
}

impl Slot {
    pub const ALL: [Slot; 8] = [
        Slot::V,
        Slot::B,
        Slot::Theta,
        Slot::Omega,
        Slot::Tau,
        Slot::U,
        Slot::H,
        Slot::BigH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::V => "v",
            Slot::B => "b",
            Slot::Theta => "theta",
            Slot::Omega => "omega",
            Slot::Tau => "tau",
            Slot::U => "u",
            Slot::H => "h",
            Slot::BigH => "H",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Slot::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .map_or_else(|| invalid(format!("unknown field slot '{s}'")), Ok)
    }

    /// Component count the slot must carry.
    pub fn ncomp(self) -> usize {
        match self {
            Slot::Theta => 1,
            Slot::Tau => 6,
            _ => 3,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A field appearing in a term: a slot, or the nine first derivatives ∂_k u_j of one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldExpr {
    Slot(Slot),
    Gradient(Slot),
}

impl FieldExpr {
    pub fn slot(self) -> Slot {
        match self {
            FieldExpr::Slot(s) | FieldExpr::Gradient(s) => s,
        }
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Slot(s) => write!(f, "{s}"),
            FieldExpr::Gradient(s) => write!(f, "grad({s})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contraction {
    /// δa_i paired with ∂_iφ; δb·δc fully contracted.
    ScalarPair,
    /// ∂_iφ δ(∂_k u_i) δu_j δ(∂_k u_j), summed over j and k.
    ClarkCross,
}

/// Exact coefficient (num/den)·α^{2p}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coefficient {
    pub num: i64,
    pub den: i64,
    pub alpha_power: u32,
}

impl Coefficient {
    pub const fn new(num: i64, den: i64, alpha_power: u32) -> Self {
        Self {
            num,
            den,
            alpha_power,
        }
    }

    pub fn value(&self, alpha: f64) -> f64 {
        self.num as f64 / self.den as f64 * alpha.powi(2 * self.alpha_power as i32)
    }

    pub fn times(&self, k: i64) -> Self {
        Self {
            num: self.num * k,
            ..*self
        }
    }

    /// Equality as rationals with the same α power.
    pub fn same(&self, other: &Self) -> bool {
        self.alpha_power == other.alpha_power && self.num * other.den == other.num * self.den
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)?;
        if self.alpha_power > 0 {
            write!(f, "·α^{}", 2 * self.alpha_power)?;
        }
        Ok(())
    }
}

/// One coefficient-weighted triple-increment term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub coefficient: Coefficient,
    pub transport: FieldExpr,
    pub factor_a: FieldExpr,
    pub factor_b: FieldExpr,
    pub contraction: Contraction,
}

impl TermSpec {
    const fn pair(c: Coefficient, t: Slot, a: Slot, b: Slot) -> Self {
        Self {
            coefficient: c,
            transport: FieldExpr::Slot(t),
            factor_a: FieldExpr::Slot(a),
            factor_b: FieldExpr::Slot(b),
            contraction: Contraction::ScalarPair,
        }
    }

    pub fn label(&self) -> String {
        match self.contraction {
            Contraction::ScalarPair => {
                format!(
                    "{} ({}; {}, {})",
                    self.coefficient, self.transport, self.factor_a, self.factor_b
                )
            }
            Contraction::ClarkCross => format!("{} clark({})", self.coefficient, self.factor_a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CatalogId {
    EulerEnergy,
    Temp,
    ElsasserPlus,
    ElsasserMinus,
    MhdEnergy,
    MhdCross,
    Helicity,
    Oldroyd,
    LerayAlpha,
    EulerAlpha,
    ModLerayAlpha,
    ClarkAlpha,
    LerayMhdEnergy,
    LerayMhdCross,
}

impl CatalogId {
    pub const ALL: [CatalogId; 14] = [
        CatalogId::EulerEnergy,
        CatalogId::Temp,
        CatalogId::ElsasserPlus,
        CatalogId::ElsasserMinus,
        CatalogId::MhdEnergy,
        CatalogId::MhdCross,
        CatalogId::Helicity,
        CatalogId::Oldroyd,
        CatalogId::LerayAlpha,
        CatalogId::EulerAlpha,
        CatalogId::ModLerayAlpha,
        CatalogId::ClarkAlpha,
        CatalogId::LerayMhdEnergy,
        CatalogId::LerayMhdCross,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CatalogId::EulerEnergy => "EULER_ENERGY",
            CatalogId::Temp => "TEMP",
            CatalogId::ElsasserPlus => "ELSASSER_PLUS",
            CatalogId::ElsasserMinus => "ELSASSER_MINUS",
            CatalogId::MhdEnergy => "MHD_ENERGY",
            CatalogId::MhdCross => "MHD_CROSS",
            CatalogId::Helicity => "HELICITY",
            CatalogId::Oldroyd => "OLDROYD",
            CatalogId::LerayAlpha => "LERAY_ALPHA",
            CatalogId::EulerAlpha => "EULER_ALPHA",
            CatalogId::ModLerayAlpha => "MOD_LERAY_ALPHA",
            CatalogId::ClarkAlpha => "CLARK_ALPHA",
            CatalogId::LerayMhdEnergy => "LERAY_MHD_ENERGY",
            CatalogId::LerayMhdCross => "LERAY_MHD_CROSS",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        CatalogId::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .map_or_else(|| invalid(format!("unknown catalog id '{s}'")), Ok)
    }

    pub fn uses_alpha(self) -> bool {
        matches!(
            self,
            CatalogId::EulerAlpha | CatalogId::ModLerayAlpha | CatalogId::ClarkAlpha
        )
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A 4/3 law: D_ε = Σ_k c_k ∫∇φ_ε·δa_k (δb_k ⊙ δc_k) dℓ with sphere
/// coefficients σ_k = −4c_k on the matching structure densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: CatalogId,
    pub alpha: f64,
    pub required: Vec<Slot>,
    pub d_terms: Vec<TermSpec>,
    pub s_coefficients: Vec<Coefficient>,
    /// Metadata carried into reports.
    pub notes: Vec<String>,
}

const QUARTER: Coefficient = Coefficient::new(1, 4, 0);
const M_QUARTER: Coefficient = Coefficient::new(-1, 4, 0);
const HALF: Coefficient = Coefficient::new(1, 2, 0);
const M_HALF: Coefficient = Coefficient::new(-1, 2, 0);

const NOTE_ABS: &str = "products written |δv·δb| are evaluated as the signed product δv·δb";
const NOTE_ELSASSER: &str = "Elsässer terms follow the energy balance: each Elsässer field is transported by the opposite one; the named functional D(u,h) of the statement has the transport roles swapped relative to this";
const NOTE_CLARK_INDEX: &str = "the (∂_k u_i, ∂_k u_j) pattern of the S₂ definition is used in its fully contracted form (∂_k u_j, ∂_k u_j)";
const NOTE_HELICITY: &str = "helicity law implemented in the 2S(v,ω,v) − S(ω,v,v) form";

pub fn catalog(id: CatalogId, alpha: f64) -> Result<CatalogEntry> {
    use Slot::*;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return invalid(format!("alpha must be non-negative, got {alpha}"));
    }
    let p = TermSpec::pair;
    let grad = |s| FieldExpr::Gradient(s);
    let a2 = |num, den| Coefficient::new(num, den, 1);
    let mut notes = vec![NOTE_ABS.to_string()];
    let (required, terms): (Vec<Slot>, Vec<TermSpec>) = match id {
        CatalogId::EulerEnergy => (vec![V], vec![p(M_QUARTER, V, V, V)]),
        CatalogId::Temp => (vec![V, Theta], vec![p(M_QUARTER, V, Theta, Theta)]),
        CatalogId::ElsasserPlus => {
            notes.push(NOTE_ELSASSER.into());
            (vec![U, H], vec![p(M_QUARTER, H, U, U)])
        }
        CatalogId::ElsasserMinus => {
            notes.push(NOTE_ELSASSER.into());
            (vec![U, H], vec![p(M_QUARTER, U, H, H)])
        }
        CatalogId::MhdEnergy => (
            vec![V, B],
            vec![
                p(M_QUARTER, V, V, V),
                p(M_QUARTER, V, B, B),
                p(HALF, B, V, B),
            ],
        ),
        CatalogId::MhdCross => (
            vec![V, B],
            vec![p(M_HALF, V, V, B), p(QUARTER, B, V, V), p(QUARTER, B, B, B)],
        ),
        CatalogId::Helicity => {
            notes.push(NOTE_HELICITY.into());
            (
                vec![V, Omega],
                vec![p(M_HALF, V, Omega, V), p(QUARTER, Omega, V, V)],
            )
        }
        CatalogId::Oldroyd => (
            vec![V, Tau],
            vec![p(M_QUARTER, V, V, V), p(M_QUARTER, V, Tau, Tau)],
        ),
        CatalogId::LerayAlpha => (vec![U, V], vec![p(M_QUARTER, U, V, V)]),
        CatalogId::EulerAlpha | CatalogId::ModLerayAlpha => {
            if id == CatalogId::ModLerayAlpha {
                notes.push(NOTE_CLARK_INDEX.into());
            }
            let grad_term = TermSpec {
                coefficient: a2(-1, 2),
                transport: FieldExpr::Slot(U),
                factor_a: grad(U),
                factor_b: grad(U),
                contraction: Contraction::ScalarPair,
            };
            (vec![U], vec![p(M_QUARTER, U, U, U), grad_term])
        }
        CatalogId::ClarkAlpha => {
            let cross = TermSpec {
                coefficient: a2(-1, 2),
                transport: grad(U),
                factor_a: FieldExpr::Slot(U),
                factor_b: grad(U),
                contraction: Contraction::ClarkCross,
            };
            let grad_term = TermSpec {
                coefficient: a2(-1, 4),
                transport: FieldExpr::Slot(U),
                factor_a: grad(U),
                factor_b: grad(U),
                contraction: Contraction::ScalarPair,
            };
            (vec![U], vec![p(M_QUARTER, U, U, U), cross, grad_term])
        }
        CatalogId::LerayMhdEnergy => (
            vec![U, V, BigH],
            vec![
                p(M_QUARTER, U, V, V),
                p(M_QUARTER, U, BigH, BigH),
                p(HALF, BigH, V, BigH),
            ],
        ),
        CatalogId::LerayMhdCross => (
            vec![U, V, BigH],
            vec![
                p(M_HALF, U, V, BigH),
                p(QUARTER, BigH, V, V),
                p(QUARTER, BigH, BigH, BigH),
            ],
        ),
    };
    // Terms that vanish identically at α = 0 are dropped so the reduced
    // entry is literally the inviscid one.
    let d_terms: Vec<TermSpec> = terms
        .into_iter()
        .filter(|t| t.coefficient.alpha_power == 0 || alpha != 0.0)
        .collect();
    let s_coefficients = d_terms.iter().map(|t| t.coefficient.times(-4)).collect();
    let entry = CatalogEntry {
        id,
        alpha,
        required,
        d_terms,
        s_coefficients,
        notes,
    };
    entry.validate()?;
    Ok(entry)
}

impl CatalogEntry {
    /// Structural checks: σ_k = −4c_k exactly and every coefficient nonzero.
    pub fn validate(&self) -> Result<()> {
        if self.d_terms.len() != self.s_coefficients.len() {
            return invalid(format!(
                "{}: term and sphere-coefficient counts differ",
                self.id
            ));
        }
        for (t, s) in self.d_terms.iter().zip(&self.s_coefficients) {
            if t.coefficient.num == 0 || t.coefficient.den == 0 {
                return invalid(format!("{}: zero or undefined coefficient", self.id));
            }
            if !s.same(&t.coefficient.times(-4)) {
                return invalid(format!(
                    "{}: sphere coefficient {s} is not −4·{}",
                    self.id, t.coefficient
                ));
            }
            if !t.coefficient.value(self.alpha).is_finite() {
                return invalid(format!("{}: non-finite coefficient", self.id));
            }
        }
        Ok(())
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.d_terms[k].coefficient.value(self.alpha)
    }

    pub fn term_labels(&self) -> Vec<String> {
        self.d_terms.iter().map(TermSpec::label).collect()
    }
}
