//! Invariant direction and profile extraction.
//!
//! With invariant axis `j` and active axes `A`, `B`, an admissible field is
//! `e_AB = f(x_A)`, `e_jB = g(x_B + S(x_A))`, `e_jA = f g(x_B + S + (f-1)/2)`
//! where `S` is the integer cumulative sum of `f`.

use serde::{Deserialize, Serialize};

use super::planar::EXACT_TOL;
use crate::field::{Axis, ProfileBits, StrainField};

/// Roles and profiles recovered from an admissible field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub invariant_axis: Axis,
    pub f_axis: Axis,
    pub g_axis: Axis,
    pub f: ProfileBits,
    pub g: ProfileBits,
    /// `S[i] = Σ_{m<i} f[m]` for `i` in `0..=N_A`.
    pub shear: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureViolation {
    pub check: String,
    pub cell: Option<[usize; 3]>,
    pub detail: String,
}

impl std::fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.cell {
            Some(c) => write!(f, "{} failed at cell {c:?}: {}", self.check, self.detail),
            None => write!(f, "{} failed: {}", self.check, self.detail),
        }
    }
}

fn violation(check: &str, cell: Option<[usize; 3]>, detail: impl Into<String>) -> StructureViolation {
    StructureViolation { check: check.into(), cell, detail: detail.into() }
}

/// True if all six components are unchanged by a unit shift along `axis`.
pub fn is_invariant_along(e: &StrainField, axis: Axis) -> bool {
    let grid = e.grid;
    e.components
        .iter()
        .all(|c| (0..grid.len()).all(|i| (c[grid.offset(i, axis, 1)] - c[i]).abs() <= EXACT_TOL))
}

/// Smallest axis along which the field does not change.
pub fn detect_invariant_direction(e: &StrainField) -> Option<Axis> {
    Axis::ALL.into_iter().find(|&a| is_invariant_along(e, a))
}

/// True if values of `comp` are constant along `axis`, looking only at
/// unmasked cells when `respect_mask` is set.
fn constant_along(e: &StrainField, comp: &[f64], axis: Axis, respect_mask: bool) -> bool {
    let grid = e.grid;
    let n = grid.n(axis);
    (0..grid.len()).filter(|&i| grid.coords(i)[axis.index()] == 0).all(|start| {
        let mut first: Option<f64> = None;
        (0..n).all(|t| {
            let idx = grid.offset(start, axis, t as isize);
            if respect_mask && e.mask[idx] {
                return true;
            }
            let v = comp[idx];
            (*first.get_or_insert(v) - v).abs() <= EXACT_TOL
        })
    })
}

fn sign_of(v: f64, check: &str, cell: [usize; 3]) -> Result<i8, StructureViolation> {
    if (v - 1.0).abs() <= EXACT_TOL {
        Ok(1)
    } else if (v + 1.0).abs() <= EXACT_TOL {
        Ok(-1)
    } else {
        Err(violation(check, Some(cell), format!("value {v} is not ±1")))
    }
}

/// Recovers `f`, `g` and the shear on the invariant plane of `j` and checks
/// the one-variable law, the pullback factorisation and the product law.
pub fn extract_structure(e: &StrainField, j: Axis) -> Result<Extraction, StructureViolation> {
    let grid = e.grid;
    let [a, b] = j.others();
    let e_ab = e.shear(a, b);
    let (mut on_a, mut on_b) = (constant_along(e, e_ab, b, true), constant_along(e, e_ab, a, true));
    if on_a && on_b {
        // masked rows can hide the variation; let every cell break the tie
        let full = (constant_along(e, e_ab, b, false), constant_along(e, e_ab, a, false));
        if full.0 != full.1 {
            (on_a, on_b) = full;
        }
    }
    let (fa, ga) = match (on_a, on_b) {
        (true, true) => (b, a),
        (true, false) => (a, b),
        (false, true) => (b, a),
        (false, false) => {
            return Err(violation(
                "one-variable",
                None,
                format!("e{}{} depends on both {a} and {b}", a.number(), b.number()),
            ))
        }
    };
    let (na, nb) = (grid.n(fa), grid.n(ga));
    let (ai, bi, ji) = (fa.index(), ga.index(), j.index());

    // f from the first unmasked cell of each A-row
    let mut f_vals = Vec::with_capacity(na);
    for ia in 0..na {
        let mut c = [0usize; 3];
        c[ai] = ia;
        let cell = (0..nb)
            .map(|ib| {
                c[bi] = ib;
                c
            })
            .find(|&c| !e.mask[grid.index(c)])
            .unwrap_or(c);
        f_vals.push(sign_of(e_ab[grid.index(cell)], "one-variable", cell)?);
    }
    let mut shear = Vec::with_capacity(na + 1);
    shear.push(0i64);
    for &v in &f_vals {
        shear.push(shear.last().unwrap() + v as i64);
    }
    let q_of = |c: [usize; 3]| (c[bi] as i64 + shear[c[ai]]).rem_euclid(nb as i64) as usize;

    // pullback of e_jB along the discrete shear map
    let e_jb = e.component(ji, bi);
    let mut g_vals: Vec<Option<i8>> = vec![None; nb];
    let mut fallback: Vec<Option<i8>> = vec![None; nb];
    for idx in 0..grid.len() {
        let c = grid.coords(idx);
        let t = q_of(c);
        let v = sign_of(e_jb[idx], "pullback", c);
        if e.mask[idx] {
            if fallback[t].is_none() {
                fallback[t] = v.ok();
            }
            continue;
        }
        let v = v?;
        match g_vals[t] {
            None => g_vals[t] = Some(v),
            Some(prev) if prev != v => {
                return Err(violation("pullback", Some(c), format!("g({t}) is both {prev} and {v}")));
            }
            _ => {}
        }
    }
    let g_vals: Vec<i8> = g_vals
        .iter()
        .zip(&fallback)
        .enumerate()
        .map(|(t, (g, fb))| g.or(*fb).ok_or_else(|| violation("pullback", None, format!("g({t}) is never observed"))))
        .collect::<Result<_, _>>()?;

    // product law with the upwind offset
    let e_ja = e.component(ji, ai);
    for idx in 0..grid.len() {
        let c = grid.coords(idx);
        let fv = f_vals[c[ai]] as i64;
        let t = q_of(c) as i64;
        let g_at = |s: i64| g_vals[s.rem_euclid(nb as i64) as usize] as f64;
        let upwind = fv as f64 * g_at(t + (fv - 1) / 2);
        let ok = (e_ja[idx] - upwind).abs() <= EXACT_TOL
            || (e.mask[idx] && (e_ja[idx] - fv as f64 * g_at(t)).abs() <= EXACT_TOL);
        if !ok {
            return Err(violation(
                "product",
                Some(c),
                format!("e{}{} = {} but f·g = {upwind}", j.number(), fa.number(), e_ja[idx]),
            ));
        }
    }

    Ok(Extraction {
        invariant_axis: j,
        f_axis: fa,
        g_axis: ga,
        f: ProfileBits::new(f_vals).expect("validated signs"),
        g: ProfileBits::new(g_vals).expect("validated signs"),
        shear,
    })
}
