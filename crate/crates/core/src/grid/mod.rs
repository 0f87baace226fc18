//! Periodic lattice, field containers and exact spectral operators.

mod fft;
mod ops;

pub use fft::{signed_wavenumber, Fft3, Sparsity, Spectrum};
pub(crate) use ops::spectrum_is_band_limited;
pub use ops::{
    band_limit, curl, divergence, gradient, gradient_tensor, is_band_limited, laplacian,
    padded_size, project_divfree, spectral_derivative, Axis,
};

use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

/// Cubic periodic lattice with `n` points per axis and period `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    n: usize,
    length: f64,
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return invalid(format!("grid size must be even and at least 4, got {n}"));
        }
        if !(length.is_finite() && length > 0.0) {
            return invalid(format!("grid length must be positive, got {length}"));
        }
        Ok(Self { n, length })
    }

    /// The 2π-periodic cube.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fundamental wavenumber 2π/length.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    pub fn unravel(&self, i: usize) -> (usize, usize, usize) {
        let n = self.n;
        (i % n, (i / n) % n, i / (n * n))
    }

    pub fn coords(&self, i: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.unravel(i);
        let h = self.spacing();
        [ix as f64 * h, iy as f64 * h, iz as f64 * h]
    }

    pub(crate) fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self != other {
            return Err(Error::Invalid(format!(
                "grid mismatch: n={} L={} vs n={} L={}",
                self.n, self.length, other.n, other.length
            )));
        }
        Ok(())
    }

    /// Validates a scale against the half-period bound of the kernel support.
    pub fn check_scale(&self, what: &str, s: f64) -> Result<()> {
        if !(s.is_finite() && s > 0.0 && s < 0.5 * self.length) {
            return invalid(format!(
                "{what} = {s} must lie in (0, length/2 = {})",
                0.5 * self.length
            ));
        }
        Ok(())
    }
}

/// Real samples on the lattice, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return invalid(format!(
                "field has {} samples, grid needs {}",
                data.len(),
                grid.len()
            ));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            data: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let data = (0..grid.len())
            .map(|i| {
                let [x, y, z] = grid.coords(i);
                f(x, y, z)
            })
            .collect();
        Self { grid, data }
    }

    pub(crate) fn from_vec_unchecked(grid: PeriodicGrid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        crate::numerics::det_mean(&self.data)
    }

    /// Root-mean-square over the box.
    pub fn l2(&self) -> f64 {
        crate::numerics::l2_norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        crate::numerics::max_abs(&self.data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            grid: self.grid,
            data,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// Cyclic lattice translation: output(x) = self(x + shift·h).
    pub fn roll(&self, shift: [i64; 3]) -> Self {
        let n = self.grid.n as i64;
        let g = self.grid;
        let mut out = vec![0.0; g.len()];
        for iz in 0..n {
            let sz = (iz + shift[2]).rem_euclid(n) as usize;
            for iy in 0..n {
                let sy = (iy + shift[1]).rem_euclid(n) as usize;
                let dst = g.index(0, iy as usize, iz as usize);
                let src_row = g.index(0, sy, sz);
                for ix in 0..n {
                    let sx = (ix + shift[0]).rem_euclid(n) as usize;
                    out[dst + ix as usize] = self.data[src_row + sx];
                }
            }
        }
        Self { grid: g, data: out }
    }
}

/// Three-component vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3 {
    comps: [ScalarField; 3],
}

impl VectorField3 {
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        x.grid.check_same(&y.grid)?;
        x.grid.check_same(&z.grid)?;
        Ok(Self { comps: [x, y, z] })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            comps: std::array::from_fn(|_| ScalarField::zeros(grid)),
        }
    }

    pub fn constant(grid: PeriodicGrid, c: [f64; 3]) -> Self {
        Self {
            comps: std::array::from_fn(|i| ScalarField::constant(grid, c[i])),
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let mut data = [
            vec![0.0; grid.len()],
            vec![0.0; grid.len()],
            vec![0.0; grid.len()],
        ];
        for i in 0..grid.len() {
            let [x, y, z] = grid.coords(i);
            let v = f(x, y, z);
            for (d, vc) in data.iter_mut().zip(v) {
                d[i] = vc;
            }
        }
        let [a, b, c] = data;
        Self {
            comps: [
                ScalarField::from_vec_unchecked(grid, a),
                ScalarField::from_vec_unchecked(grid, b),
                ScalarField::from_vec_unchecked(grid, c),
            ],
        }
    }

    pub(crate) fn from_array(comps: [ScalarField; 3]) -> Self {
        Self { comps }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.comps[0].grid
    }

    pub fn comp(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn into_comps(self) -> [ScalarField; 3] {
        self.comps
    }

    pub fn map_comps(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            comps: std::array::from_fn(|i| f(&self.comps[i])),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            comps: std::array::from_fn(|i| self.comps[i].add(&o.comps[i])),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            comps: std::array::from_fn(|i| self.comps[i].sub(&o.comps[i])),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_comps(|c| c.scale(s))
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let g = *self.grid();
        let data = (0..g.len())
            .map(|i| {
                let [a, b, c] = [
                    self.comps[0].data[i],
                    self.comps[1].data[i],
                    self.comps[2].data[i],
                ];
                (a * a + b * b + c * c).sqrt()
            })
            .collect();
        ScalarField::from_vec_unchecked(g, data)
    }
}

/// Symmetric 3×3 tensor field stored as (xx, yy, zz, xy, xz, yz).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField3 {
    comps: [ScalarField; 6],
}

/// Storage order of the tensor components.
pub const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

impl SymTensorField3 {
    pub fn new(comps: [ScalarField; 6]) -> Result<Self> {
        for c in &comps[1..] {
            comps[0].grid.check_same(&c.grid)?;
        }
        Ok(Self { comps })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            comps: std::array::from_fn(|_| ScalarField::zeros(grid)),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.comps[0].grid
    }

    pub fn comp(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[ScalarField; 6] {
        &self.comps
    }

    /// Component (i, j) in either order.
    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let k = SYM_INDEX
            .iter()
            .position(|&p| p == (a, b))
            .expect("index in range");
        &self.comps[k]
    }

    pub fn trace(&self) -> ScalarField {
        self.comps[0].add(&self.comps[1]).add(&self.comps[2])
    }
}

/// Any of the three field kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField3),
    Tensor(SymTensorField3),
}

impl Field {
    pub fn grid(&self) -> &PeriodicGrid {
        match self {
            Field::Scalar(f) => f.grid(),
            Field::Vector(f) => f.grid(),
            Field::Tensor(f) => f.grid(),
        }
    }

    pub fn ncomp(&self) -> usize {
        match self {
            Field::Scalar(_) => 1,
            Field::Vector(_) => 3,
            Field::Tensor(_) => 6,
        }
    }

    pub fn components(&self) -> Vec<&ScalarField> {
        match self {
            Field::Scalar(f) => vec![f],
            Field::Vector(f) => f.comps.iter().collect(),
            Field::Tensor(f) => f.comps.iter().collect(),
        }
    }

    pub fn from_components(mut comps: Vec<ScalarField>) -> Result<Self> {
        match comps.len() {
            1 => Ok(Field::Scalar(comps.pop().expect("one component"))),
            3 => {
                let z = comps.pop().expect("len 3");
                let y = comps.pop().expect("len 3");
                let x = comps.pop().expect("len 3");
                Ok(Field::Vector(VectorField3::new(x, y, z)?))
            }
            6 => {
                let arr: [ScalarField; 6] = comps.try_into().expect("len 6");
                Ok(Field::Tensor(SymTensorField3::new(arr)?))
            }
            k => invalid(format!(
                "unsupported component count {k} (expected 1, 3 or 6)"
            )),
        }
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        match self {
            Field::Scalar(s) => Field::Scalar(f(s)),
            Field::Vector(v) => Field::Vector(v.map_comps(f)),
            Field::Tensor(t) => Field::Tensor(SymTensorField3 {
                comps: std::array::from_fn(|i| f(&t.comps[i])),
            }),
        }
    }

    pub fn as_vector(&self) -> Option<&VectorField3> {
        match self {
            Field::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<&ScalarField> {
        match self {
            Field::Scalar(s) => Some(s),
            _ => None,
        }
    }
}

impl From<ScalarField> for Field {
    fn from(f: ScalarField) -> Self {
        Field::Scalar(f)
    }
}

impl From<VectorField3> for Field {
    fn from(f: VectorField3) -> Self {
        Field::Vector(f)
    }
}

impl From<SymTensorField3> for Field {
    fn from(f: SymTensorField3) -> Self {
        Field::Tensor(f)
    }
}
