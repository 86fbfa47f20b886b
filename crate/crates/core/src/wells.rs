//! Algebra of the four trigonal strain wells.
//!
//! The wells share the diagonal `(d1, d2, d3)` and carry off-diagonal entries
//! in `{-1, +1}` whose sign pattern satisfies `e12 * e13 = e23` (and the two
//! permutations of that relation). Every pairwise difference is a
//! symmetrized rank-one matrix `½(a ⊗ n + n ⊗ a)`, which is what allows
//! planar twin interfaces between the wells.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance on the middle eigenvalue in the rank-one test.
pub const RANK_ONE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WellError {
    #[error("matrix is zero; no twin pair exists")]
    Degenerate,
    #[error("matrix is not symmetrized rank-one (eigenvalues {0:?})")]
    NotRankOne([f64; 3]),
    #[error("orthorhombic parameter delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("well index {0} outside 1..=4")]
    BadIndex(usize),
}

/// Material constants on the diagonal of every well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellParams {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl WellParams {
    pub fn new(d1: f64, d2: f64, d3: f64) -> Self {
        Self { d1, d2, d3 }
    }

    pub fn diagonal(&self) -> [f64; 3] {
        [self.d1, self.d2, self.d3]
    }

    pub fn is_finite(&self) -> bool {
        self.diagonal().iter().all(|d| d.is_finite())
    }
}

/// Symmetric 3×3 matrix stored as its six independent entries in the order
/// `(e11, e22, e33, e23, e13, e12)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat3(pub [f64; 6]);

/// Position of entry `(i, j)` (0-based) in the six-entry storage.
pub const fn voigt(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        (0, 1) | (1, 0) => 5,
        _ => panic!("index out of range"),
    }
}

impl SymMat3 {
    pub const ZERO: SymMat3 = SymMat3([0.0; 6]);

    pub fn from_entries(e11: f64, e22: f64, e33: f64, e23: f64, e13: f64, e12: f64) -> Self {
        Self([e11, e22, e33, e23, e13, e12])
    }

    /// Builds the matrix from full rows; only the upper triangle is read.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Self([rows[0][0], rows[1][1], rows[2][2], rows[1][2], rows[0][2], rows[0][1]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[voigt(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[voigt(i, j)] = value;
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        out
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let r = self.rows();
        Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        )
    }

    /// Symmetric part of `m`.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let s = (m + m.transpose()) * 0.5;
        Self::from_rows([
            [s[(0, 0)], s[(0, 1)], s[(0, 2)]],
            [s[(1, 0)], s[(1, 1)], s[(1, 2)]],
            [s[(2, 0)], s[(2, 1)], s[(2, 2)]],
        ])
    }

    /// `½(a ⊗ n + n ⊗ a)`.
    pub fn sym_outer(a: &[f64; 3], n: &[f64; 3]) -> Self {
        let mut out = SymMat3::ZERO;
        for i in 0..3 {
            for j in i..3 {
                out.set(i, j, 0.5 * (a[i] * n[j] + n[i] * a[j]));
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        let e = &self.0;
        (e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + 2.0 * (e[3] * e[3] + e[4] * e[4] + e[5] * e[5]))
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymMat3) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Off-diagonal triple `(e12, e13, e23)`.
    pub fn shears(&self) -> [f64; 3] {
        [self.0[5], self.0[4], self.0[3]]
    }
}

impl Add for SymMat3 {
    type Output = SymMat3;
    fn add(self, rhs: SymMat3) -> SymMat3 {
        let mut out = self;
        out.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for SymMat3 {
    type Output = SymMat3;
    fn sub(self, rhs: SymMat3) -> SymMat3 {
        self + (-rhs)
    }
}

impl Neg for SymMat3 {
    type Output = SymMat3;
    fn neg(self) -> SymMat3 {
        self * -1.0
    }
}

impl Mul<f64> for SymMat3 {
    type Output = SymMat3;
    fn mul(self, rhs: f64) -> SymMat3 {
        let mut out = self;
        out.0.iter_mut().for_each(|a| *a *= rhs);
        out
    }
}

impl fmt::Display for SymMat3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.rows();
        for (i, row) in r.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "[{:>9.5} {:>9.5} {:>9.5}]", row[0], row[1], row[2])?;
        }
        Ok(())
    }
}

/// Off-diagonal sign patterns `(e12, e13, e23)` of wells 1..4.
pub const WELL_SIGNS: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
];

/// The four wells, indexed 1..=4 through [`WellSet::well`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellSet {
    pub params: WellParams,
    pub wells: [SymMat3; 4],
}

impl WellSet {
    /// Well with 1-based index.
    pub fn well(&self, index: usize) -> Result<&SymMat3, WellError> {
        if (1..=4).contains(&index) {
            Ok(&self.wells[index - 1])
        } else {
            Err(WellError::BadIndex(index))
        }
    }

    /// 1-based index of the well equal to `m` entrywise within `tol`.
    pub fn identify(&self, m: &SymMat3, tol: f64) -> Option<usize> {
        self.wells
            .iter()
            .position(|w| w.max_abs_diff(m) <= tol)
            .map(|p| p + 1)
    }
}

pub fn build_wells(params: WellParams) -> WellSet {
    let wells = WELL_SIGNS.map(|[e12, e13, e23]| {
        SymMat3::from_entries(params.d1, params.d2, params.d3, e23, e13, e12)
    });
    WellSet { params, wells }
}

/// Checks `e12 e13 = e23`, `e12 e23 = e13` and `e13 e23 = e12`.
pub fn satisfies_product_relations(m: &SymMat3, tol: f64) -> bool {
    let [e12, e13, e23] = m.shears();
    (e12 * e13 - e23).abs() <= tol && (e12 * e23 - e13).abs() <= tol && (e13 * e23 - e12).abs() <= tol
}

/// A twin solution `M = ½(a ⊗ n + n ⊗ a)` with unit normal `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinPair {
    pub a: [f64; 3],
    pub n: [f64; 3],
}

impl TwinPair {
    pub fn reassemble(&self) -> SymMat3 {
        SymMat3::sym_outer(&self.a, &self.n)
    }

    /// Normal rescaled so that its largest component has magnitude one, if
    /// every entry is then within `tol` of an integer.
    pub fn lattice_normal(&self, tol: f64) -> Option<[i32; 3]> {
        lattice_direction(&self.n, tol)
    }

    /// True if `(a, n)` equals `(c a', n' / c)` for some nonzero `c`.
    pub fn same_gauge_class(&self, other: &TwinPair, tol: f64) -> bool {
        let dot: f64 = (0..3).map(|i| self.n[i] * other.n[i]).sum();
        if (dot.abs() - 1.0).abs() > tol {
            return false;
        }
        let s = dot.signum();
        (0..3).all(|i| (self.n[i] - s * other.n[i]).abs() <= tol && (self.a[i] - s * other.a[i]).abs() <= tol * (1.0 + other.a[i].abs()))
    }
}

/// Scales `v` so its largest component is ±1 and rounds to the nearest
/// integer pattern, returning `None` when the rounding error exceeds `tol`.
pub fn lattice_direction(v: &[f64; 3], tol: f64) -> Option<[i32; 3]> {
    let m = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 {
        return None;
    }
    let mut out = [0i32; 3];
    for i in 0..3 {
        let s = v[i] / m;
        let r = s.round();
        if (s - r).abs() > tol {
            return None;
        }
        out[i] = r as i32;
    }
    Some(out)
}

fn normalize_sign(pair: TwinPair) -> TwinPair {
    // first component of n that is clearly nonzero is made positive
    let lead = pair.n.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
    if lead < 0.0 {
        TwinPair { a: pair.a.map(|x| -x), n: pair.n.map(|x| -x) }
    } else {
        pair
    }
}

fn lex_abs_greater(a: &[f64; 3], b: &[f64; 3]) -> bool {
    for i in 0..3 {
        let (x, y) = (a[i].abs(), b[i].abs());
        if (x - y).abs() > 1e-9 {
            return x > y;
        }
    }
    false
}

/// Both twin solutions of `M = ½(a ⊗ n + n ⊗ a)`.
///
/// With eigenvalues `λ+ ≥ 0 ≥ λ-` and middle eigenvalue zero, write
/// `p = √λ+ v+` and `q = √(-λ-) v-`; then `M = p pᵀ - q qᵀ` and the two
/// solutions have `n ∥ p - q, a ∥ p + q` or the roles swapped.
/// Solution A is the one whose `|n|` is lexicographically larger.
pub fn rank_one_decompose(m: &SymMat3) -> Result<[TwinPair; 2], WellError> {
    let norm = m.frobenius();
    if norm == 0.0 {
        return Err(WellError::Degenerate);
    }
    let eig = SymmetricEigen::new(m.to_matrix());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lam = order.map(|i| eig.eigenvalues[i]);
    let tol = RANK_ONE_TOL * norm.max(1.0);
    if lam[1].abs() > tol || lam[0] > tol || lam[2] < -tol {
        return Err(WellError::NotRankOne(lam));
    }
    let v_minus: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    let v_plus: Vector3<f64> = eig.eigenvectors.column(order[2]).into_owned();
    let root = |l: f64| if l.abs() <= tol { 0.0 } else { l.abs().sqrt() };
    let p = v_plus * root(lam[2]);
    let q = v_minus * root(lam[0]);

    let solve = |dir_n: Vector3<f64>, dir_a: Vector3<f64>| {
        let len = dir_n.norm();
        let n = dir_n / len;
        let a = dir_a * len;
        normalize_sign(TwinPair { a: [a[0], a[1], a[2]], n: [n[0], n[1], n[2]] })
    };
    let first = solve(p - q, p + q);
    let second = solve(p + q, p - q);
    if lex_abs_greater(&second.n, &first.n) {
        Ok([second, first])
    } else {
        Ok([first, second])
    }
}

/// One row of the twin table: both decompositions of `e⁽ⁱ⁾ - e⁽ʲ⁾`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinRecord {
    pub pair: (usize, usize),
    pub solutions: [TwinPair; 2],
}

/// Unordered well pairs in table order.
pub const WELL_PAIRS: [(usize, usize); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

pub fn twin_table(params: WellParams) -> Result<Vec<TwinRecord>, WellError> {
    let set = build_wells(params);
    WELL_PAIRS
        .iter()
        .map(|&(i, j)| {
            let diff = set.wells[i - 1] - set.wells[j - 1];
            rank_one_decompose(&diff).map(|solutions| TwinRecord { pair: (i, j), solutions })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthoParams {
    pub delta: f64,
}

impl OrthoParams {
    pub fn new(delta: f64) -> Result<Self, WellError> {
        if delta > 0.0 && delta.is_finite() {
            Ok(Self { delta })
        } else {
            Err(WellError::NonPositiveDelta(delta))
        }
    }
}

/// The six cubic-to-orthorhombic wells.
pub fn ortho_wells(p: OrthoParams) -> Result<[SymMat3; 6], WellError> {
    let d = OrthoParams::new(p.delta)?.delta;
    Ok([
        SymMat3::from_entries(1.0, 1.0, -2.0, 0.0, 0.0, d),
        SymMat3::from_entries(1.0, 1.0, -2.0, 0.0, 0.0, -d),
        SymMat3::from_entries(1.0, -2.0, 1.0, 0.0, d, 0.0),
        SymMat3::from_entries(1.0, -2.0, 1.0, 0.0, -d, 0.0),
        SymMat3::from_entries(-2.0, 1.0, 1.0, d, 0.0, 0.0),
        SymMat3::from_entries(-2.0, 1.0, 1.0, -d, 0.0, 0.0),
    ])
}

/// Change-of-coordinates matrix taking orthorhombic strains to trigonal ones.
pub fn ortho_to_trigonal_matrix(p: OrthoParams) -> Result<Matrix3<f64>, WellError> {
    let d = OrthoParams::new(p.delta)?.delta;
    let s3 = 3f64.sqrt();
    let s2 = 2f64.sqrt();
    let scale = Matrix3::from_diagonal(&Vector3::new(1.0 / s3, s3 / (s2 * d), 1.0 / s3));
    let perm = Matrix3::new(0.0, 1.0, 1.0, s2, 0.0, 0.0, 0.0, 1.0, -1.0);
    Ok(scale * perm)
}

/// `C e Cᵗ`.
pub fn map_to_trigonal(e: &SymMat3, p: OrthoParams) -> Result<SymMat3, WellError> {
    let c = ortho_to_trigonal_matrix(p)?;
    Ok(SymMat3::from_matrix(&(c * e.to_matrix() * c.transpose())))
}

/// Trigonal parameters reached from the orthorhombic wells with `delta`.
pub fn trigonal_params_for(p: OrthoParams) -> Result<WellParams, WellError> {
    let d = OrthoParams::new(p.delta)?.delta;
    Ok(WellParams::new(-1.0 / 3.0, 3.0 / (d * d), -1.0 / 3.0))
}
