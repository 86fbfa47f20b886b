//! Periodic grid model: strain and displacement fields on a discrete torus.
//!
//! Strains live on cells, displacements on vertices; with periodic
//! identification both index sets coincide. Cell `(i1, i2, i3)` sits between
//! vertex `(i1, i2, i3)` and its forward neighbours, so every derivative on
//! the grid is a forward difference.

pub mod generate;
pub mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wells::{voigt, SymMat3, WellError};

pub use generate::{gen_constant, gen_crossing, gen_laminate, CrossingSpec, LaminateSpec, NormalChoice};
pub use io::{decode_disp, decode_strain, encode_disp, encode_strain, read_disp, read_field, write_disp, write_field, FormatError, IoError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("well index {0} outside 1..=4")]
    BadIndex(usize),
    #[error("invalid well pair ({0}, {1})")]
    BadPair(usize, usize),
    #[error("spacings along axes {0} and {1} differ ({2} vs {3})")]
    SpacingMismatch(Axis, Axis, f64, f64),
    #[error("total shear {shift} breaks periodicity of the non-constant g profile (N = {len})")]
    PeriodicityViolation { shift: i64, len: usize },
    #[error("profile along {what} has length {got}, expected {expected}")]
    ProfileLength { what: String, expected: usize, got: usize },
    #[error("invalid profile: {0}")]
    BadProfile(String),
    #[error("invalid axis roles: {0}")]
    BadAxes(String),
    #[error(transparent)]
    Well(#[from] WellError),
}

/// One of the three coordinate directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Self::ALL.get(i).copied()
    }

    /// Axis with 1-based number `n`.
    pub fn from_number(n: usize) -> Option<Axis> {
        n.checked_sub(1).and_then(Self::from_index)
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }

    /// The two remaining axes in increasing order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X1 => [Axis::X2, Axis::X3],
            Axis::X2 => [Axis::X1, Axis::X3],
            Axis::X3 => [Axis::X1, Axis::X2],
        }
    }

    /// The axis different from both `a` and `b`.
    pub fn third(a: Axis, b: Axis) -> Axis {
        debug_assert_ne!(a, b);
        Self::from_index(3 - a.index() - b.index()).expect("distinct axes")
    }
}

impl From<Axis> for u8 {
    fn from(a: Axis) -> u8 {
        a.number() as u8
    }
}

impl TryFrom<u8> for Axis {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        Axis::from_number(v as usize).ok_or_else(|| format!("axis {v} outside 1..=3"))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.number())
    }
}

/// Periodic box `[0, L1) × [0, L2) × [0, L3)` split into `N1 × N2 × N3` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub dims: [usize; 3],
    pub lengths: [f64; 3],
}

impl TorusGrid {
    pub fn new(dims: [usize; 3], lengths: [f64; 3]) -> Result<Self, FieldError> {
        if dims.iter().any(|&n| n < 2) {
            return Err(FieldError::BadGrid(format!("every cell count must be at least 2, got {dims:?}")));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(FieldError::BadGrid(format!("side lengths must be positive, got {lengths:?}")));
        }
        if dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).is_none() {
            return Err(FieldError::BadGrid("cell count overflows".into()));
        }
        Ok(Self { dims, lengths })
    }

    /// Grid with unit spacing in every direction.
    pub fn unit_spacing(dims: [usize; 3]) -> Result<Self, FieldError> {
        Self::new(dims, dims.map(|n| n as f64))
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n(&self, axis: Axis) -> usize {
        self.dims[axis.index()]
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        self.lengths[axis.index()] / self.dims[axis.index()] as f64
    }

    pub fn spacings(&self) -> [f64; 3] {
        Axis::ALL.map(|a| self.spacing(a))
    }

    /// Linear index `(i1 N2 + i2) N3 + i3`.
    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i3 = idx % self.dims[2];
        let rest = idx / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], i3]
    }

    /// Index of the neighbour `steps` cells away along `axis`, wrapping.
    #[inline]
    pub fn offset(&self, idx: usize, axis: Axis, steps: isize) -> usize {
        let mut c = self.coords(idx);
        let n = self.dims[axis.index()] as isize;
        c[axis.index()] = (c[axis.index()] as isize + steps).rem_euclid(n) as usize;
        self.index(c)
    }

    pub fn cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (0..self.len()).map(|i| self.coords(i))
    }

    pub fn permuted(&self, perm: [usize; 3]) -> TorusGrid {
        TorusGrid { dims: perm.map(|p| self.dims[p]), lengths: perm.map(|p| self.lengths[p]) }
    }
}

/// Storage order of the six strain components.
pub const COMPONENT_NAMES: [&str; 6] = ["e11", "e22", "e33", "e23", "e13", "e12"];

/// 0-based `(row, column)` of each stored component.
pub const COMPONENT_INDICES: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Cell-centred periodic strain field with a defect mask.
///
/// Masked cells may leave the well set; they still take part in every
/// compatibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainField {
    pub grid: TorusGrid,
    pub components: [Vec<f64>; 6],
    pub mask: Vec<bool>,
}

impl StrainField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.len();
        Self { grid, components: std::array::from_fn(|_| vec![0.0; n]), mask: vec![false; n] }
    }

    pub fn constant(grid: TorusGrid, value: &SymMat3) -> Self {
        let n = grid.len();
        Self { grid, components: std::array::from_fn(|c| vec![value.0[c]; n]), mask: vec![false; n] }
    }

    pub fn at(&self, idx: usize) -> SymMat3 {
        SymMat3(std::array::from_fn(|c| self.components[c][idx]))
    }

    pub fn set(&mut self, idx: usize, value: &SymMat3) {
        for c in 0..6 {
            self.components[c][idx] = value.0[c];
        }
    }

    /// Component `(i, j)` with 0-based indices.
    pub fn component(&self, i: usize, j: usize) -> &[f64] {
        &self.components[voigt(i, j)]
    }

    pub fn component_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        &mut self.components[voigt(i, j)]
    }

    /// Off-diagonal component between two distinct axes.
    pub fn shear(&self, a: Axis, b: Axis) -> &[f64] {
        self.component(a.index(), b.index())
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn masked_fraction(&self) -> f64 {
        self.masked_count() as f64 / self.grid.len() as f64
    }

    /// Cell average, summed in linear index order.
    pub fn mean(&self) -> SymMat3 {
        let n = self.grid.len() as f64;
        SymMat3(std::array::from_fn(|c| self.components[c].iter().sum::<f64>() / n))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &StrainField) -> f64 {
        self.components
            .iter()
            .zip(other.components.iter())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Relabels axes so that new axis `k` is old axis `perm[k]`.
    pub fn permute_axes(&self, perm: [usize; 3]) -> StrainField {
        let grid = self.grid.permuted(perm);
        let mut out = StrainField::zeros(grid);
        for old in 0..self.grid.len() {
            let c = self.grid.coords(old);
            let new = grid.index(perm.map(|p| c[p]));
            for (slot, &(i, j)) in COMPONENT_INDICES.iter().enumerate() {
                out.components[slot][new] = self.component(perm[i], perm[j])[old];
            }
            out.mask[new] = self.mask[old];
        }
        out
    }
}

/// Displacement `u(x) = ē x + periodic part`, with the periodic part stored
/// on vertices and mean-free per component.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub grid: TorusGrid,
    pub mean_strain: SymMat3,
    pub periodic: [Vec<f64>; 3],
}

impl DisplacementField {
    pub fn affine(grid: TorusGrid, mean_strain: SymMat3) -> Self {
        let n = grid.len();
        Self { grid, mean_strain, periodic: std::array::from_fn(|_| vec![0.0; n]) }
    }

    /// Shifts each periodic component to zero mean.
    pub fn remove_periodic_mean(&mut self) {
        for comp in self.periodic.iter_mut() {
            let m = comp.iter().sum::<f64>() / comp.len() as f64;
            comp.iter_mut().for_each(|v| *v -= m);
        }
    }

    pub fn periodic_max_abs(&self) -> f64 {
        self.periodic.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A ±1 sequence, one entry per cell along an axis or layer coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct ProfileBits(Vec<i8>);

impl TryFrom<Vec<i8>> for ProfileBits {
    type Error = FieldError;
    fn try_from(v: Vec<i8>) -> Result<Self, FieldError> {
        ProfileBits::new(v)
    }
}

impl From<ProfileBits> for Vec<i8> {
    fn from(p: ProfileBits) -> Vec<i8> {
        p.0
    }
}

impl ProfileBits {
    pub fn new(values: Vec<i8>) -> Result<Self, FieldError> {
        if values.is_empty() {
            return Err(FieldError::BadProfile("empty profile".into()));
        }
        if let Some(v) = values.iter().find(|v| v.abs() != 1) {
            return Err(FieldError::BadProfile(format!("entry {v} is not ±1")));
        }
        Ok(Self(values))
    }

    pub fn constant(len: usize, value: i8) -> Result<Self, FieldError> {
        Self::new(vec![value; len])
    }

    /// First half `+1`, second half `-1`.
    pub fn halves(len: usize) -> Result<Self, FieldError> {
        Self::new((0..len).map(|i| if i < len.div_ceil(2) { 1 } else { -1 }).collect())
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entry at a (possibly negative) cyclic position.
    pub fn at(&self, pos: i64) -> i8 {
        self.0[pos.rem_euclid(self.0.len() as i64) as usize]
    }

    pub fn is_constant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().map(|&v| v as i64).sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() as f64 / self.0.len() as f64
    }

    /// Number of cyclic sign changes.
    pub fn jumps(&self) -> usize {
        let n = self.0.len();
        (0..n).filter(|&k| self.0[k] != self.0[(k + 1) % n]).count()
    }

    pub fn count(&self, value: i8) -> usize {
        self.0.iter().filter(|&&v| v == value).count()
    }

    pub fn negated(&self) -> ProfileBits {
        ProfileBits(self.0.iter().map(|v| -v).collect())
    }
}

impl FromStr for ProfileBits {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, FieldError> {
        let values = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(FieldError::BadProfile(format!("unexpected character {other:?}; use '+' and '-'"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        ProfileBits::new(values)
    }
}

impl fmt::Display for ProfileBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &v in &self.0 {
            f.write_str(if v > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}
