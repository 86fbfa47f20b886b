//! Discrete calculus on the torus: symmetrized gradients, Saint-Venant
//! residuals, slice averages and displacement reconstruction.
//!
//! Every derivative is the forward difference `D_j`, which diagonalises under
//! the DFT with multiplier `s_j(k) = (exp(2πi k_j / N_j) - 1) / h_j`. Because
//! these multipliers commute, the six compatibility equations vanish
//! identically on any discrete symmetrized gradient, and conversely a field
//! with vanishing residuals is one.

pub mod fft;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Axis, DisplacementField, StrainField, TorusGrid};
use crate::wells::voigt;
use fft::Fft3;

/// Default relative residual tolerance for reconstruction.
pub const DEFAULT_RECONSTRUCT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompatError {
    #[error("strain is incompatible: {equation} relative residual {relative:.3e} exceeds {tolerance:.1e}")]
    Incompatible { equation: String, relative: f64, tolerance: f64 },
}

/// Fourier multipliers of the forward difference along each axis.
#[derive(Debug, Clone)]
pub struct DiffSymbol {
    pub per_axis: [Vec<Complex64>; 3],
}

impl DiffSymbol {
    pub fn new(grid: &TorusGrid) -> Self {
        let per_axis = std::array::from_fn(|a| {
            let n = grid.dims[a];
            let h = grid.lengths[a] / n as f64;
            (0..n)
                .map(|k| {
                    if k == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        (Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64) - 1.0) / h
                    }
                })
                .collect()
        });
        Self { per_axis }
    }

    pub fn at(&self, k: [usize; 3]) -> [Complex64; 3] {
        [self.per_axis[0][k[0]], self.per_axis[1][k[1]], self.per_axis[2][k[2]]]
    }
}

/// Forward difference `(v[i + e_axis] - v[i]) / h` on the periodic grid.
pub fn forward_difference(grid: &TorusGrid, values: &[f64], axis: Axis) -> Vec<f64> {
    let h = grid.spacing(axis);
    (0..grid.len()).map(|i| (values[grid.offset(i, axis, 1)] - values[i]) / h).collect()
}

/// `e = ē + ½(D_i u_j + D_j u_i)` with an empty mask.
pub fn symmetrized_gradient(u: &DisplacementField) -> StrainField {
    let grid = u.grid;
    let grads: [[Vec<f64>; 3]; 3] = std::array::from_fn(|comp| {
        std::array::from_fn(|axis| forward_difference(&grid, &u.periodic[comp], Axis::ALL[axis]))
    });
    let mut e = StrainField::zeros(grid);
    for i in 0..3 {
        for j in i..3 {
            let mean = u.mean_strain.get(i, j);
            let out = e.component_mut(i, j);
            for (idx, v) in out.iter_mut().enumerate() {
                *v = mean + 0.5 * (grads[j][i][idx] + grads[i][j][idx]);
            }
        }
    }
    e
}

/// The six compatibility equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Equation {
    #[serde(rename = "wave_12")]
    Wave12,
    #[serde(rename = "wave_13")]
    Wave13,
    #[serde(rename = "wave_23")]
    Wave23,
    #[serde(rename = "curl_1")]
    Curl1,
    #[serde(rename = "curl_2")]
    Curl2,
    #[serde(rename = "curl_3")]
    Curl3,
}

impl Equation {
    pub const ALL: [Equation; 6] =
        [Equation::Wave12, Equation::Wave13, Equation::Wave23, Equation::Curl1, Equation::Curl2, Equation::Curl3];

    pub fn name(self) -> &'static str {
        match self {
            Equation::Wave12 => "wave_12",
            Equation::Wave13 => "wave_13",
            Equation::Wave23 => "wave_23",
            Equation::Curl1 => "curl_1",
            Equation::Curl2 => "curl_2",
            Equation::Curl3 => "curl_3",
        }
    }

    /// Symbol of the equation applied to the six transformed components
    /// (storage order), together with an upper bound on the symbol
    /// magnitudes of its terms given `|s_j| <= b[j]`.
    fn apply(self, s: &[Complex64; 3], e: &[Complex64; 6]) -> Complex64 {
        let c = |i, j| e[voigt(i, j)];
        let [s1, s2, s3] = *s;
        match self {
            Equation::Wave12 => 2.0 * s1 * s2 * c(0, 1) - s2 * s2 * c(0, 0) - s1 * s1 * c(1, 1),
            Equation::Wave13 => 2.0 * s1 * s3 * c(0, 2) - s3 * s3 * c(0, 0) - s1 * s1 * c(2, 2),
            Equation::Wave23 => 2.0 * s2 * s3 * c(1, 2) - s3 * s3 * c(1, 1) - s2 * s2 * c(2, 2),
            Equation::Curl1 => s2 * s3 * c(0, 0) - s1 * (-s1 * c(1, 2) + s2 * c(0, 2) + s3 * c(0, 1)),
            Equation::Curl2 => s1 * s3 * c(1, 1) - s2 * (s1 * c(1, 2) - s2 * c(0, 2) + s3 * c(0, 1)),
            Equation::Curl3 => s1 * s2 * c(2, 2) - s3 * (s1 * c(1, 2) + s2 * c(0, 2) - s3 * c(0, 1)),
        }
    }

    fn symbol_bound(self, b: [f64; 3]) -> f64 {
        let [b1, b2, b3] = b;
        match self {
            Equation::Wave12 => 2.0 * b1 * b2 + b2 * b2 + b1 * b1,
            Equation::Wave13 => 2.0 * b1 * b3 + b3 * b3 + b1 * b1,
            Equation::Wave23 => 2.0 * b2 * b3 + b3 * b3 + b2 * b2,
            Equation::Curl1 => b2 * b3 + b1 * (b1 + b2 + b3),
            Equation::Curl2 => b1 * b3 + b2 * (b1 + b2 + b3),
            Equation::Curl3 => b1 * b2 + b3 * (b1 + b2 + b3),
        }
    }

    /// Storage slots of the components the equation reads.
    fn involved(self) -> &'static [usize] {
        match self {
            Equation::Wave12 => &[0, 1, 5],
            Equation::Wave13 => &[0, 2, 4],
            Equation::Wave23 => &[1, 2, 3],
            Equation::Curl1 => &[0, 3, 4, 5],
            Equation::Curl2 => &[1, 3, 4, 5],
            Equation::Curl3 => &[2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationResidual {
    pub equation: Equation,
    /// Max-abs of the residual field in real space.
    pub max_abs: f64,
    /// `max_abs / (symbol bound · max(1, max-abs of the involved components))`.
    pub relative: f64,
    /// Wavevector with the largest residual amplitude.
    pub worst_wavevector: [usize; 3],
    pub worst_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equations: Vec<EquationResidual>,
}

impl ResidualReport {
    pub fn get(&self, eq: Equation) -> &EquationResidual {
        self.equations.iter().find(|r| r.equation == eq).expect("all six equations present")
    }

    /// Entry with the largest relative residual.
    pub fn worst(&self) -> &EquationResidual {
        self.equations
            .iter()
            .max_by(|a, b| a.relative.total_cmp(&b.relative))
            .expect("non-empty report")
    }

    pub fn max_relative(&self) -> f64 {
        self.worst().relative
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative() <= tol
    }
}

fn spectra(e: &StrainField, fft: &Fft3) -> [Vec<Complex64>; 6] {
    std::array::from_fn(|c| fft.forward_real(&e.components[c]))
}

fn residual_from_spectra(e: &StrainField, fft: &Fft3, hat: &[Vec<Complex64>; 6]) -> ResidualReport {
    let grid = e.grid;
    let sym = DiffSymbol::new(&grid);
    let bounds = grid.spacings().map(|h| 2.0 / h);
    let comp_max: [f64; 6] = std::array::from_fn(|c| e.components[c].iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let equations = Equation::ALL
        .iter()
        .map(|&eq| {
            let mut r = vec![Complex64::default(); grid.len()];
            let mut worst = (0usize, 0.0f64);
            for (idx, slot) in r.iter_mut().enumerate() {
                let s = sym.at(grid.coords(idx));
                let vals: [Complex64; 6] = std::array::from_fn(|c| hat[c][idx]);
                *slot = eq.apply(&s, &vals);
                let amp = slot.norm();
                if amp > worst.1 {
                    worst = (idx, amp);
                }
            }
            let real = fft.inverse_real(r);
            let max_abs = real.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = eq.involved().iter().fold(1.0f64, |m, &c| m.max(comp_max[c]));
            EquationResidual {
                equation: eq,
                max_abs,
                relative: max_abs / (eq.symbol_bound(bounds) * scale),
                worst_wavevector: grid.coords(worst.0),
                worst_amplitude: worst.1,
            }
        })
        .collect();
    ResidualReport { equations }
}

/// Evaluates the three wave-type and three curl-type compatibility
/// equations in Fourier space.
pub fn saint_venant_residual(e: &StrainField) -> ResidualReport {
    let fft = Fft3::new(&e.grid);
    let hat = spectra(e, &fft);
    residual_from_spectra(e, &fft, &hat)
}

/// Least-squares displacement mode for one wavevector:
/// `û = (2/|s|²) Ê s̄ - s (sᴴ Ê s̄) / |s|⁴`.
pub fn solve_mode(s: &[Complex64; 3], e: &[Complex64; 6]) -> [Complex64; 3] {
    let norm2: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    let sc = s.map(|v| v.conj());
    let m = |i, j| e[voigt(i, j)];
    let es: [Complex64; 3] = std::array::from_fn(|i| (0..3).map(|j| m(i, j) * sc[j]).sum());
    let quad: Complex64 = (0..3).map(|i| sc[i] * es[i]).sum();
    std::array::from_fn(|i| es[i] * (2.0 / norm2) - s[i] * quad / (norm2 * norm2))
}

/// Displacement whose symmetrized gradient is `e`, with zero-mean periodic
/// part and no rigid rotation. Fails when any relative residual exceeds
/// `tol`.
pub fn reconstruct_displacement(e: &StrainField, tol: f64) -> Result<DisplacementField, CompatError> {
    let grid = e.grid;
    let fft = Fft3::new(&grid);
    let hat = spectra(e, &fft);
    let report = residual_from_spectra(e, &fft, &hat);
    let worst = report.worst();
    if worst.relative > tol {
        return Err(CompatError::Incompatible {
            equation: worst.equation.name().into(),
            relative: worst.relative,
            tolerance: tol,
        });
    }
    let sym = DiffSymbol::new(&grid);
    let mut modes: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); grid.len()]);
    for idx in 1..grid.len() {
        let s = sym.at(grid.coords(idx));
        let vals: [Complex64; 6] = std::array::from_fn(|c| hat[c][idx]);
        let u = solve_mode(&s, &vals);
        for c in 0..3 {
            modes[c][idx] = u[c];
        }
    }
    let periodic = modes.map(|m| fft.inverse_real(m));
    let mut disp = DisplacementField { grid, mean_strain: e.mean(), periodic };
    disp.remove_periodic_mean();
    Ok(disp)
}

/// Largest deviation of slice averages from the global average, for each
/// off-diagonal component `e_ij` averaged over the `(i, j)` plane at every
/// index of the remaining axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceAverageReport {
    pub e23: f64,
    pub e13: f64,
    pub e12: f64,
}

impl SliceAverageReport {
    pub fn max(&self) -> f64 {
        self.e23.max(self.e13).max(self.e12)
    }
}

pub fn slice_average_check(e: &StrainField) -> SliceAverageReport {
    let grid = e.grid;
    let dev = |a: Axis, b: Axis| {
        let k = Axis::third(a, b);
        let vals = e.shear(a, b);
        let global = vals.iter().sum::<f64>() / vals.len() as f64;
        let nk = grid.n(k);
        let mut sums = vec![0.0; nk];
        for idx in 0..grid.len() {
            sums[grid.coords(idx)[k.index()]] += vals[idx];
        }
        let per = (grid.len() / nk) as f64;
        sums.iter().fold(0.0f64, |m, s| m.max((s / per - global).abs()))
    };
    SliceAverageReport {
        e23: dev(Axis::X2, Axis::X3),
        e13: dev(Axis::X1, Axis::X3),
        e12: dev(Axis::X1, Axis::X2),
    }
}
