#![allow(dead_code)]

use yaglom::functionals::{FieldSet, Slot};
use yaglom::grid::curl;
use yaglom::synth::{gaussian_divfree, gaussian_scalar, SpectrumSpec};
use yaglom::{Field, PeriodicGrid, ScalarField, SymTensorField3, VectorField3};

pub fn spec(grid: &PeriodicGrid, seed: u64) -> SpectrumSpec {
    let kmax = (grid.n() / 3) as f64;
    SpectrumSpec::new(5.0 / 3.0, 1.0, kmax, seed, 1.0)
}

pub fn vector(grid: PeriodicGrid, seed: u64) -> VectorField3 {
    gaussian_divfree(grid, &spec(&grid, seed)).unwrap()
}

pub fn scalar(grid: PeriodicGrid, seed: u64) -> ScalarField {
    gaussian_scalar(grid, &spec(&grid, seed)).unwrap()
}

pub fn tensor(grid: PeriodicGrid, seed: u64) -> SymTensorField3 {
    let c: Vec<ScalarField> = (0..6).map(|i| scalar(grid, seed * 10 + i)).collect();
    SymTensorField3::new(c.try_into().unwrap()).unwrap()
}

/// Every slot filled with band-limited random fields; ω is the curl of v.
pub fn all_slots(grid: PeriodicGrid, seed: u64) -> FieldSet {
    let v = vector(grid, seed);
    let omega = curl(&v);
    FieldSet::new(grid)
        .with(Slot::V, v)
        .unwrap()
        .with(Slot::B, vector(grid, seed + 1))
        .unwrap()
        .with(Slot::Theta, scalar(grid, seed + 2))
        .unwrap()
        .with(Slot::Omega, omega)
        .unwrap()
        .with(Slot::Tau, Field::Tensor(tensor(grid, seed + 3)))
        .unwrap()
        .with(Slot::U, vector(grid, seed + 4))
        .unwrap()
        .with(Slot::H, vector(grid, seed + 5))
        .unwrap()
        .with(Slot::BigH, vector(grid, seed + 6))
        .unwrap()
}

pub fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    let d = a.sub(b).l2();
    let s = a.l2().max(b.l2());
    if s == 0.0 {
        d
    } else {
        d / s
    }
}
