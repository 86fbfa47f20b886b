//! Periodic potentials of the mean-free planar waves.
//!
//! `Ψ_pq` lives on `(x_p, x_q)` for the cyclic pairs `(1,2)`, `(2,3)`,
//! `(3,1)` and satisfies `D_p Ψ_pq = f_qp - G_qp` and
//! `D_q Ψ_pq = f_pq - G_pq`, where `G_ij(x_i)` is the mean of `f_ij` over
//! `x_j`.

use serde::{Deserialize, Serialize};

use super::planar::{PlanarWaveDecomp, Wave, EXACT_TOL};
use crate::field::{Axis, StrainField, TorusGrid};

/// Tolerance of the potential checks.
pub const PSI_TOL: f64 = 1e-10;

pub const PSI_PAIRS: [(Axis, Axis); 3] = [(Axis::X1, Axis::X2), (Axis::X2, Axis::X3), (Axis::X3, Axis::X1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub p: Axis,
    pub q: Axis,
    pub n_p: usize,
    pub n_q: usize,
    /// Row-major over `(x_p, x_q)`.
    pub values: Vec<f64>,
}

impl Potential {
    pub fn name(&self) -> String {
        format!("psi{}{}", self.p.number(), self.q.number())
    }

    pub fn at(&self, ip: usize, iq: usize) -> f64 {
        self.values[(ip % self.n_p) * self.n_q + iq % self.n_q]
    }

    pub fn range(&self) -> f64 {
        let (lo, hi) = self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        hi - lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveSet {
    pub psi: [Potential; 3],
    /// Line means, laid out like [`PlanarWaveDecomp::waves`].
    pub means: [[Vec<f64>; 2]; 3],
    spacings: [f64; 3],
}

/// Outcomes of the lemma checks on a decomposition and its potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaDiagnostics {
    pub value_inclusion_error: f64,
    pub exclusivity_violations: usize,
    pub reassembly_error: f64,
    pub path_error: f64,
    pub periodicity_error: f64,
    pub primitive_inclusion_error: f64,
    pub trichotomy_violations: usize,
    pub decomposition_error: f64,
    pub constant_psi: Vec<String>,
}

impl LemmaDiagnostics {
    /// First failed claim, if any.
    pub fn first_failure(&self) -> Option<String> {
        if self.value_inclusion_error > EXACT_TOL {
            return Some(format!("wave value off {{-1,0,1}} by {:.3e}", self.value_inclusion_error));
        }
        if self.exclusivity_violations > 0 {
            return Some(format!("{} slices with two active waves", self.exclusivity_violations));
        }
        if self.reassembly_error > EXACT_TOL {
            return Some(format!("waves reassemble the shears only to {:.3e}", self.reassembly_error));
        }
        if self.primitive_inclusion_error > PSI_TOL {
            return Some(format!("potential gradient off the discrete inclusion by {:.3e}", self.primitive_inclusion_error));
        }
        if self.trichotomy_violations > 0 {
            return Some(format!("{} lines break the constancy trichotomy", self.trichotomy_violations));
        }
        if self.decomposition_error > PSI_TOL {
            return Some(format!("shears differ from potential gradients by {:.3e}", self.decomposition_error));
        }
        if self.constant_psi.is_empty() {
            return Some("no cyclic potential is constant".into());
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PrimitiveError {
    PathDependent { psi: String, error: f64 },
    NotPeriodic { psi: String, error: f64 },
}

impl std::fmt::Display for PrimitiveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PrimitiveError::PathDependent { psi, error } => write!(f, "{psi} is path dependent (loop error {error:.3e})"),
            PrimitiveError::NotPeriodic { psi, error } => write!(f, "{psi} is not periodic (wrap error {error:.3e})"),
        }
    }
}

fn slot(sel: Axis, var: Axis) -> usize {
    sel.others().iter().position(|&a| a == var).expect("distinct axes")
}

/// Mean-free wave value `f_{sel,var}(s, v) - G_{sel,var}(s)`.
fn centred(pw: &PlanarWaveDecomp, means: &[[Vec<f64>; 2]; 3], sel: Axis, var: Axis, s: usize, v: usize) -> f64 {
    pw.wave(sel, var).at(s, v) - means[sel.index()][slot(sel, var)][s]
}

impl PrimitiveSet {
    pub fn get(&self, p: Axis, q: Axis) -> &Potential {
        self.psi.iter().find(|x| x.p == p && x.q == q).expect("cyclic pair")
    }

    /// Forward difference of the potential that integrates `f_{sel,var}`,
    /// evaluated at `(x_sel, x_var) = (s, v)`.
    pub fn wave_derivative(&self, sel: Axis, var: Axis, s: usize, v: usize) -> f64 {
        let psi = self.psi.iter().find(|x| (x.p, x.q) == (sel, var) || (x.p, x.q) == (var, sel)).expect("pair");
        if psi.p == sel {
            // D_q Ψ_pq at (s, v)
            (psi.at(s, v + 1) - psi.at(s, v)) / self.spacings[var.index()]
        } else {
            // D_p Ψ_pq at (v, s)
            (psi.at(v + 1, s) - psi.at(v, s)) / self.spacings[var.index()]
        }
    }

    pub fn constant_names(&self) -> Vec<String> {
        self.psi.iter().filter(|p| p.range() <= PSI_TOL).map(|p| p.name()).collect()
    }
}

fn integrate(grid: &TorusGrid, pw: &PlanarWaveDecomp, means: &[[Vec<f64>; 2]; 3], p: Axis, q: Axis) -> (Potential, f64, f64) {
    let (n_p, n_q) = (grid.n(p), grid.n(q));
    let (h_p, h_q) = (grid.spacing(p), grid.spacing(q));
    let mut values = vec![0.0; n_p * n_q];
    for ip in 1..n_p {
        values[ip * n_q] = values[(ip - 1) * n_q] + h_p * centred(pw, means, q, p, 0, ip - 1);
    }
    for ip in 0..n_p {
        for iq in 1..n_q {
            values[ip * n_q + iq] = values[ip * n_q + iq - 1] + h_q * centred(pw, means, p, q, ip, iq - 1);
        }
    }
    let psi = Potential { p, q, n_p, n_q, values };
    let (mut path, mut wrap) = (0.0f64, 0.0f64);
    for ip in 0..n_p {
        for iq in 0..n_q {
            let dp = (psi.at(ip + 1, iq) - psi.at(ip, iq)) / h_p - centred(pw, means, q, p, iq, ip);
            let dq = (psi.at(ip, iq + 1) - psi.at(ip, iq)) / h_q - centred(pw, means, p, q, ip, iq);
            let ep = if ip + 1 == n_p { &mut wrap } else { &mut path };
            *ep = ep.max(dp.abs());
            let eq = if iq + 1 == n_q { &mut wrap } else { &mut path };
            *eq = eq.max(dq.abs());
        }
    }
    (psi, path, wrap)
}

/// Integrates the mean-free waves along axis `p` then axis `q`.
pub fn build_primitives(grid: &TorusGrid, pw: &PlanarWaveDecomp) -> Result<(PrimitiveSet, f64, f64), PrimitiveError> {
    let means: [[Vec<f64>; 2]; 3] = std::array::from_fn(|s| {
        let [w0, w1]: &[Wave; 2] = &pw.waves[s];
        [w0.line_means(), w1.line_means()]
    });
    let mut psis = Vec::with_capacity(3);
    let (mut path_all, mut wrap_all) = (0.0f64, 0.0f64);
    for (p, q) in PSI_PAIRS {
        let (psi, path, wrap) = integrate(grid, pw, &means, p, q);
        if path > PSI_TOL {
            return Err(PrimitiveError::PathDependent { psi: psi.name(), error: path });
        }
        if wrap > PSI_TOL {
            return Err(PrimitiveError::NotPeriodic { psi: psi.name(), error: wrap });
        }
        path_all = path_all.max(path);
        wrap_all = wrap_all.max(wrap);
        psis.push(psi);
    }
    let psi: [Potential; 3] = psis.try_into().expect("three potentials");
    Ok((PrimitiveSet { psi, means, spacings: grid.spacings() }, path_all, wrap_all))
}

/// Runs every lemma check on a decomposition and its potentials.
pub fn lemma_diagnostics(
    e: &StrainField,
    pw: &PlanarWaveDecomp,
    ps: &PrimitiveSet,
    path_error: f64,
    periodicity_error: f64,
) -> LemmaDiagnostics {
    let grid = e.grid;
    let global_mean = |sel: Axis| {
        let [a, b] = sel.others();
        let c = e.shear(a, b);
        c.iter().sum::<f64>() / c.len() as f64
    };

    let mut inclusion = 0.0f64;
    let mut trichotomy = 0usize;
    for sel in Axis::ALL {
        let m = global_mean(sel);
        let targets = [-1.0 - m, 1.0 - m, 0.0];
        for var in sel.others() {
            let w = pw.wave(sel, var);
            for s in 0..w.n_sel {
                let d: Vec<f64> = (0..w.n_var).map(|v| ps.wave_derivative(sel, var, s, v)).collect();
                for &x in &d {
                    inclusion = inclusion.max(targets.iter().map(|t| (x - t).abs()).fold(f64::INFINITY, f64::min));
                }
                let line = w.line(s);
                let constant = line.iter().all(|&v| (v - line[0]).abs() <= EXACT_TOL);
                let all_zero = d.iter().all(|x| x.abs() <= PSI_TOL);
                let some_zero = d.iter().any(|x| x.abs() <= PSI_TOL);
                if constant != all_zero || all_zero != some_zero {
                    trichotomy += 1;
                }
            }
        }
    }

    let mut decomposition = 0.0f64;
    for sel in Axis::ALL {
        let [a, b] = sel.others();
        let m = global_mean(sel);
        let comp = e.shear(a, b);
        for idx in (0..grid.len()).filter(|&i| !e.mask[i]) {
            let c = grid.coords(idx);
            let s = c[sel.index()];
            let v = ps.wave_derivative(sel, a, s, c[a.index()]) + ps.wave_derivative(sel, b, s, c[b.index()]) + m;
            decomposition = decomposition.max((v - comp[idx]).abs());
        }
    }

    LemmaDiagnostics {
        value_inclusion_error: pw.value_inclusion_error(),
        exclusivity_violations: pw.exclusivity_violations(),
        reassembly_error: pw.reassembly_error(e),
        path_error,
        periodicity_error,
        primitive_inclusion_error: inclusion,
        trichotomy_violations: trichotomy,
        decomposition_error: decomposition,
        constant_psi: ps.constant_names(),
    }
}
