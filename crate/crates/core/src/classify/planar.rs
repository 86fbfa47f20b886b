//! Planar-wave decomposition of the off-diagonal strains.
//!
//! Each shear splits into two waves sharing a selector axis `i`:
//! `e23 = f12 + f13`, `e13 = f21 + f23`, `e12 = f31 + f32`, where `f_ij`
//! depends on `(x_i, x_j)`. On every selector slice at most one wave is
//! nonzero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{Axis, StrainField, TorusGrid};

/// Tolerance of the exact constancy and two-valuedness tests.
pub const EXACT_TOL: f64 = 1e-9;

/// A function of `(x_sel, x_var)` stored in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub sel: Axis,
    pub var: Axis,
    pub n_sel: usize,
    pub n_var: usize,
    pub values: Vec<f64>,
}

impl Wave {
    fn zeros(grid: &TorusGrid, sel: Axis, var: Axis) -> Self {
        let (n_sel, n_var) = (grid.n(sel), grid.n(var));
        Self { sel, var, n_sel, n_var, values: vec![0.0; n_sel * n_var] }
    }

    pub fn at(&self, s: usize, v: usize) -> f64 {
        self.values[s * self.n_var + v]
    }

    pub fn line(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_var..(s + 1) * self.n_var]
    }

    /// Mean over `x_var` for each `x_sel`.
    pub fn line_means(&self) -> Vec<f64> {
        (0..self.n_sel).map(|s| self.line(s).iter().sum::<f64>() / self.n_var as f64).collect()
    }
}

/// Which wave of a selector slice carries its values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceGauge {
    pub carrier: Axis,
    /// The slice is constant and the carrier was chosen by convention.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarWaveDecomp {
    /// Indexed by `[sel][k]` where the wave's variable axis is
    /// `sel.others()[k]`.
    pub waves: [[Wave; 2]; 3],
    /// Gauge indicator per selector axis and slice.
    pub gauges: [Vec<SliceGauge>; 3],
}

impl PlanarWaveDecomp {
    /// The wave `f_{sel,var}`.
    pub fn wave(&self, sel: Axis, var: Axis) -> &Wave {
        let k = sel.others().iter().position(|&a| a == var).expect("var differs from sel");
        &self.waves[sel.index()][k]
    }

    /// Largest deviation of `f_{s,a} + f_{s,b}` from the shear `e_ab` on
    /// unmasked cells.
    pub fn reassembly_error(&self, e: &StrainField) -> f64 {
        let grid = e.grid;
        let mut worst = 0.0f64;
        for sel in Axis::ALL {
            let [a, b] = sel.others();
            let (fa, fb) = (self.wave(sel, a), self.wave(sel, b));
            let comp = e.shear(a, b);
            for idx in (0..grid.len()).filter(|&i| !e.mask[i]) {
                let c = grid.coords(idx);
                let s = c[sel.index()];
                let v = fa.at(s, c[a.index()]) + fb.at(s, c[b.index()]);
                worst = worst.max((v - comp[idx]).abs());
            }
        }
        worst
    }

    /// Number of slices on which both waves are nonzero.
    pub fn exclusivity_violations(&self) -> usize {
        Axis::ALL
            .iter()
            .map(|&sel| {
                let [w0, w1] = &self.waves[sel.index()];
                (0..w0.n_sel)
                    .filter(|&s| {
                        let nz = |w: &Wave| w.line(s).iter().any(|v| v.abs() > EXACT_TOL);
                        nz(w0) && nz(w1)
                    })
                    .count()
            })
            .sum()
    }

    /// Largest distance of any wave value from `{-1, 0, 1}`.
    pub fn value_inclusion_error(&self) -> f64 {
        self.waves
            .iter()
            .flatten()
            .flat_map(|w| w.values.iter())
            .map(|&v| [-1.0, 0.0, 1.0].iter().map(|t| (v - t).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanarError {
    /// Off-diagonal entry outside `{-1, 1}` on an unmasked cell.
    NotTwoValued { cell: [usize; 3], component: String, value: f64 },
    /// A selector slice varies along both remaining axes.
    UndecidableSlice { selector: Axis, slice: usize },
}

impl std::fmt::Display for PlanarError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanarError::NotTwoValued { cell, component, value } => {
                write!(f, "{component} = {value} at cell {cell:?} is not ±1")
            }
            PlanarError::UndecidableSlice { selector, slice } => {
                write!(f, "slice {selector} = {slice} varies along both remaining axes")
            }
        }
    }
}

/// Value of the shear on the line through `(sel = s, var = v)` along the
/// remaining axis, read from the first unmasked cell (any cell if the whole
/// line is masked).
fn line_value(e: &StrainField, comp: &[f64], sel: Axis, s: usize, var: Axis, v: usize, along: Axis) -> f64 {
    let grid = e.grid;
    let mut c = [0usize; 3];
    c[sel.index()] = s;
    c[var.index()] = v;
    let mut fallback = None;
    for t in 0..grid.n(along) {
        c[along.index()] = t;
        let idx = grid.index(c);
        if !e.mask[idx] {
            return comp[idx];
        }
        fallback.get_or_insert(comp[idx]);
    }
    fallback.expect("non-empty line")
}

/// True if, within the slice `sel = s`, values are constant along `along`,
/// looking only at unmasked cells when `respect_mask` is set.
fn slice_constant_along(e: &StrainField, comp: &[f64], sel: Axis, s: usize, along: Axis, respect_mask: bool) -> bool {
    let grid = e.grid;
    let across = Axis::third(sel, along);
    (0..grid.n(across)).all(|v| {
        let mut c = [0usize; 3];
        c[sel.index()] = s;
        c[across.index()] = v;
        let mut first: Option<f64> = None;
        (0..grid.n(along)).all(|t| {
            c[along.index()] = t;
            let idx = grid.index(c);
            if respect_mask && e.mask[idx] {
                return true;
            }
            match first {
                None => {
                    first = Some(comp[idx]);
                    true
                }
                Some(f0) => (comp[idx] - f0).abs() <= EXACT_TOL,
            }
        })
    })
}

pub fn planar_decompose(e: &StrainField) -> Result<PlanarWaveDecomp, PlanarError> {
    let grid = e.grid;
    for (a, b) in [(Axis::X2, Axis::X3), (Axis::X1, Axis::X3), (Axis::X1, Axis::X2)] {
        let comp = e.shear(a, b);
        if let Some(idx) = (0..grid.len()).find(|&i| !e.mask[i] && (comp[i].abs() - 1.0).abs() > EXACT_TOL) {
            return Err(PlanarError::NotTwoValued {
                cell: grid.coords(idx),
                component: format!("e{}{}", a.number(), b.number()),
                value: comp[idx],
            });
        }
    }

    let mut waves: Vec<[Wave; 2]> = Vec::with_capacity(3);
    let mut gauges: Vec<Vec<SliceGauge>> = Vec::with_capacity(3);
    for sel in Axis::ALL {
        let [a, b] = sel.others();
        let comp = e.shear(a, b);
        let slices: Vec<(SliceGauge, Vec<f64>)> = (0..grid.n(sel))
            .into_par_iter()
            .map(|s| {
                let mut along_a = slice_constant_along(e, comp, sel, s, a, true);
                let mut along_b = slice_constant_along(e, comp, sel, s, b, true);
                if along_a && along_b && e.mask.iter().any(|&m| m) {
                    // masked rows can hide the variation; let every cell break the tie
                    let (full_a, full_b) =
                        (slice_constant_along(e, comp, sel, s, a, false), slice_constant_along(e, comp, sel, s, b, false));
                    if full_a != full_b {
                        (along_a, along_b) = (full_a, full_b);
                    }
                }
                let (carrier, along) = match (along_a, along_b) {
                    (false, false) => return Err(PlanarError::UndecidableSlice { selector: sel, slice: s }),
                    // constant along b: a function of x_a
                    (_, true) => (a, b),
                    (true, false) => (b, a),
                };
                let line = (0..grid.n(carrier)).map(|v| line_value(e, comp, sel, s, carrier, v, along)).collect();
                Ok((SliceGauge { carrier, constant: along_a && along_b }, line))
            })
            .collect::<Result<_, _>>()?;
        let mut pair = [Wave::zeros(&grid, sel, a), Wave::zeros(&grid, sel, b)];
        for (s, (gauge, line)) in slices.iter().enumerate() {
            let w = &mut pair[if gauge.carrier == a { 0 } else { 1 }];
            w.values[s * w.n_var..(s + 1) * w.n_var].copy_from_slice(line);
        }
        waves.push(pair);
        gauges.push(slices.into_iter().map(|(g, _)| g).collect());
    }
    let waves: [[Wave; 2]; 3] = waves.try_into().expect("three selectors");
    let gauges: [Vec<SliceGauge>; 3] = gauges.try_into().expect("three selectors");
    Ok(PlanarWaveDecomp { waves, gauges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gen_constant, gen_crossing, gen_laminate, CrossingSpec, LaminateSpec, NormalChoice};
    use crate::wells::WellParams;

    fn params() -> WellParams {
        WellParams::new(0.25, -0.5, 1.5)
    }

    #[test]
    fn crossing_e12_lives_on_x1_x3() {
        let grid = TorusGrid::unit_spacing([4, 2, 4]).unwrap();
        let spec = CrossingSpec::canonical("++--".parse().unwrap(), "+-+-".parse().unwrap());
        let (e, _) = gen_crossing(grid, params(), &spec).unwrap();
        let pw = planar_decompose(&e).unwrap();
        let f31 = pw.wave(Axis::X3, Axis::X1);
        let f32 = pw.wave(Axis::X3, Axis::X2);
        assert!(f32.values.iter().all(|&v| v == 0.0));
        for i3 in 0..4 {
            for i1 in 0..4 {
                assert_eq!(f31.at(i3, i1), e.component(0, 1)[grid.index([i1, 0, i3])]);
            }
        }
        assert_eq!(pw.reassembly_error(&e), 0.0);
        assert_eq!(pw.exclusivity_violations(), 0);
    }

    #[test]
    fn constant_field_uses_earlier_axis() {
        let grid = TorusGrid::unit_spacing([3, 3, 3]).unwrap();
        let (e, _) = gen_constant(grid, params(), 2).unwrap();
        let pw = planar_decompose(&e).unwrap();
        for sel in Axis::ALL {
            let [a, b] = sel.others();
            assert!(pw.gauges[sel.index()].iter().all(|g| g.constant && g.carrier == a));
            assert!(pw.wave(sel, b).values.iter().all(|&v| v == 0.0));
        }
        assert_eq!(pw.reassembly_error(&e), 0.0);
    }

    #[test]
    fn laminate_constant_shear_is_constant_wave() {
        let grid = TorusGrid::unit_spacing([4, 4, 4]).unwrap();
        let spec = LaminateSpec { pair: (1, 2), normal: NormalChoice::Axis, profile: "+-+-".parse().unwrap() };
        let (e, _) = gen_laminate(grid, params(), &spec).unwrap();
        let pw = planar_decompose(&e).unwrap();
        // e23 is the same in wells 1 and 2
        let f12 = pw.wave(Axis::X1, Axis::X2);
        assert!(f12.values.iter().all(|&v| v == 1.0));
        assert!(pw.gauges[0].iter().all(|g| g.constant));
    }

    #[test]
    fn checkerboard_is_undecidable() {
        let grid = TorusGrid::unit_spacing([2, 2, 2]).unwrap();
        let mut e = StrainField::zeros(grid);
        for idx in 0..grid.len() {
            let [i1, i2, _] = grid.coords(idx);
            e.component_mut(0, 1)[idx] = if (i1 + i2) % 2 == 0 { 1.0 } else { -1.0 };
            e.component_mut(0, 2)[idx] = 1.0;
            e.component_mut(1, 2)[idx] = 1.0;
        }
        assert!(matches!(planar_decompose(&e), Err(PlanarError::UndecidableSlice { selector: Axis::X3, .. })));
        e.component_mut(1, 2)[3] = 0.5;
        assert!(matches!(planar_decompose(&e), Err(PlanarError::NotTwoValued { .. })));
    }
}
