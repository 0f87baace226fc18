use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use super::catalog::{CatalogEntry, Contraction, FieldExpr, Slot};
use crate::error::{invalid, Result};
use crate::grid::{gradient_tensor, Field, PeriodicGrid, ScalarField, VectorField3};

/// Named input fields on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    grid: PeriodicGrid,
    slots: BTreeMap<Slot, Field>,
}

impl FieldSet {
    pub fn new(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            slots: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn insert(&mut self, slot: Slot, field: impl Into<Field>) -> Result<()> {
        let field = field.into();
        self.grid.check_same(field.grid())?;
        if field.ncomp() != slot.ncomp() {
            return invalid(format!(
                "slot '{slot}' needs {} components, field has {}",
                slot.ncomp(),
                field.ncomp()
            ));
        }
        self.slots.insert(slot, field);
        Ok(())
    }

    pub fn with(mut self, slot: Slot, field: impl Into<Field>) -> Result<Self> {
        self.insert(slot, field)?;
        Ok(self)
    }

    pub fn get(&self, slot: Slot) -> Option<&Field> {
        self.slots.get(&slot)
    }

    pub fn slots(&self) -> impl Iterator<Item = (&Slot, &Field)> {
        self.slots.iter()
    }

    pub fn vector(&self, slot: Slot) -> Result<&VectorField3> {
        match self.get(slot) {
            Some(Field::Vector(v)) => Ok(v),
            Some(_) => invalid(format!("slot '{slot}' is not a vector field")),
            None => invalid(format!("missing field slot '{slot}'")),
        }
    }

    pub fn check_entry(&self, entry: &CatalogEntry) -> Result<()> {
        for s in &entry.required {
            if self.get(*s).is_none() {
                return invalid(format!("{} needs field slot '{s}'", entry.id));
            }
        }
        Ok(())
    }

    /// Every field negated (cubic functionals flip sign).
    pub fn negated(&self) -> Self {
        Self {
            grid: self.grid,
            slots: self
                .slots
                .iter()
                .map(|(k, f)| (*k, f.map_components(|c| c.scale(-1.0))))
                .collect(),
        }
    }
}

/// Elementary term after contraction: c · ∂_iφ δa_i · Σ_p w_p δb_p δc_p.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Atom {
    pub coeff: f64,
    pub term: usize,
    pub transport: [usize; 3],
    pub pairs: Vec<(usize, usize, f64)>,
}

/// Catalog entry lowered onto a flat list of scalar components.
pub(crate) struct Resolved {
    pub comps: Vec<ScalarField>,
    pub atoms: Vec<Atom>,
    pub nterms: usize,
}

#[derive(Default)]
struct Interner {
    keys: Vec<(FieldExpr, usize)>,
    comps: Vec<ScalarField>,
    grads: BTreeMap<Slot, Vec<ScalarField>>,
}

impl Interner {
    fn id(&mut self, set: &FieldSet, e: FieldExpr, c: usize) -> Result<usize> {
        if let Some(i) = self.keys.iter().position(|&k| k == (e, c)) {
            return Ok(i);
        }
        let f = match e {
            FieldExpr::Slot(s) => {
                let fld = set
                    .get(s)
                    .ok_or_else(|| crate::Error::Invalid(format!("missing field slot '{s}'")))?;
                fld.components()[c].clone()
            }
            FieldExpr::Gradient(s) => {
                if let Entry::Vacant(slot) = self.grads.entry(s) {
                    slot.insert(gradient_tensor(set.vector(s)?));
                }
                self.grads[&s][c].clone()
            }
        };
        self.keys.push((e, c));
        self.comps.push(f);
        Ok(self.comps.len() - 1)
    }
}

fn expr_ncomp(set: &FieldSet, e: FieldExpr) -> Result<usize> {
    match e {
        FieldExpr::Slot(s) => set
            .get(s)
            .map(Field::ncomp)
            .ok_or_else(|| crate::Error::Invalid(format!("missing field slot '{s}'"))),
        FieldExpr::Gradient(_) => Ok(9),
    }
}

/// Pairing weights: off-diagonal entries of a symmetric tensor count twice.
fn pair_weights(ncomp: usize) -> Vec<f64> {
    match ncomp {
        6 => vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0],
        k => vec![1.0; k],
    }
}

pub(crate) fn resolve(set: &FieldSet, entry: &CatalogEntry) -> Result<Resolved> {
    set.check_entry(entry)?;
    let mut it = Interner::default();
    let mut atoms = Vec::new();
    for (k, t) in entry.d_terms.iter().enumerate() {
        let coeff = entry.coefficient(k);
        match t.contraction {
            Contraction::ScalarPair => {
                if expr_ncomp(set, t.transport)? != 3 {
                    return invalid(format!(
                        "{}: transport {} must be a vector",
                        entry.id, t.transport
                    ));
                }
                let na = expr_ncomp(set, t.factor_a)?;
                if na != expr_ncomp(set, t.factor_b)? {
                    return invalid(format!("{}: factor shapes differ in term {k}", entry.id));
                }
                let transport = [
                    it.id(set, t.transport, 0)?,
                    it.id(set, t.transport, 1)?,
                    it.id(set, t.transport, 2)?,
                ];
                let w = pair_weights(na);
                let mut pairs = Vec::with_capacity(na);
                for (c, &wc) in w.iter().enumerate().take(na) {
                    pairs.push((it.id(set, t.factor_a, c)?, it.id(set, t.factor_b, c)?, wc));
                }
                atoms.push(Atom {
                    coeff,
                    term: k,
                    transport,
                    pairs,
                });
            }
            Contraction::ClarkCross => {
                let u = FieldExpr::Slot(t.factor_a.slot());
                let du = FieldExpr::Gradient(t.factor_a.slot());
                for kk in 0..3 {
                    let transport = [
                        it.id(set, du, 3 * kk)?,
                        it.id(set, du, 3 * kk + 1)?,
                        it.id(set, du, 3 * kk + 2)?,
                    ];
                    let mut pairs = Vec::with_capacity(3);
                    for j in 0..3 {
                        pairs.push((it.id(set, u, j)?, it.id(set, du, 3 * kk + j)?, 1.0));
                    }
                    atoms.push(Atom {
                        coeff,
                        term: k,
                        transport,
                        pairs,
                    });
                }
            }
        }
    }
    Ok(Resolved {
        comps: it.comps,
        atoms,
        nterms: entry.d_terms.len(),
    })
}
