//! The 4/3-law catalog and its evaluators: pointwise dissipation fields,
//! structure densities, exact box averages, the commutator identity check and
//! the law verdict.

mod catalog;
mod decomposition;
mod fields;
mod law;
mod pointwise;
mod spectral;

pub use catalog::{
    catalog, CatalogEntry, CatalogId, Coefficient, Contraction, FieldExpr, Slot, TermSpec,
};
pub use decomposition::{decomposition_residual, decomposition_residuals, DecompositionResidual};
pub use fields::FieldSet;
pub use law::{
    dissipation_sweep, dissipation_sweep_exact, law_check, law_check_with, structure_curve,
    structure_curve_exact, DissipationSweep, LawOptions, LawReport, Plateau, StructureCurve,
    Verdict,
};
pub use pointwise::{
    dissipation_direct, dissipation_lattice, dissipation_radial, structure_density,
    structure_density_terms, DissipationField,
};
pub use spectral::BoxAverager;
