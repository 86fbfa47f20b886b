//! Classification of admissible strain fields.
//!
//! The pipeline runs well inclusion, the compatibility residuals, the slice
//! averages, the planar-wave decomposition, the potentials `Ψ`, the
//! invariant direction and finally the profile extraction. The first stage
//! that fails makes the field `Inadmissible` and is recorded in the report.

pub mod inclusion;
pub mod planar;
pub mod primitives;
pub mod structure;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compat::{saint_venant_residual, slice_average_check, ResidualReport};
use crate::field::{
    gen_constant, gen_crossing, gen_laminate, Axis, CrossingSpec, DisplacementField, FieldError, LaminateSpec,
    NormalChoice, ProfileBits, StrainField, TorusGrid,
};
use crate::wells::{build_wells, rank_one_decompose, SymMat3, WellParams, WellSet};

pub use inclusion::{check_inclusion, InclusionMap, InclusionViolation, WELL_MATCH_TOL};
pub use planar::{planar_decompose, EXACT_TOL, PlanarError, PlanarWaveDecomp, SliceGauge, Wave};
pub use primitives::{build_primitives, PSI_TOL, lemma_diagnostics, LemmaDiagnostics, Potential, PrimitiveError, PrimitiveSet};
pub use structure::{detect_invariant_direction, extract_structure, Extraction, StructureViolation};

/// Relative residual accepted as compatible.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Accepted deviation of a slice average from the global average.
pub const SLICE_AVERAGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Constant,
    SimpleLaminate,
    CrossingTwin,
    Inadmissible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Inclusion,
    SaintVenant,
    SliceAverage,
    PlanarDecomposition,
    Primitives,
    InvariantDirection,
    Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: Stage,
    pub message: String,
    pub cell: Option<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantInfo {
    pub well: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaminateInfo {
    /// Increasing well indices; the profile is `+1` on the first.
    pub pair: [usize; 2],
    pub normal_choice: NormalChoice,
    pub lattice_normal: [i32; 3],
    pub normal: [f64; 3],
    pub profile: ProfileBits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingInfo {
    pub f_axis: Axis,
    pub g_axis: Axis,
    pub f: ProfileBits,
    pub g: ProfileBits,
    pub shear: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Relative Saint-Venant residuals by equation name.
    pub residuals: BTreeMap<String, f64>,
    pub max_residual: Option<f64>,
    pub defect_fraction: Option<f64>,
    pub masked_fraction: f64,
    pub slice_average_deviation: Option<f64>,
    pub lemma: Option<LemmaDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub kind: Kind,
    pub invariant_axis: Option<Axis>,
    pub failure: Option<Failure>,
    pub constant: Option<ConstantInfo>,
    pub laminate: Option<LaminateInfo>,
    pub crossing: Option<CrossingInfo>,
    pub notes: Vec<String>,
    pub diagnostics: Diagnostics,
}

impl StructureReport {
    fn inadmissible(stage: Stage, message: String, cell: Option<[usize; 3]>, diagnostics: Diagnostics) -> Self {
        Self {
            kind: Kind::Inadmissible,
            invariant_axis: None,
            failure: Some(Failure { stage, message, cell }),
            constant: None,
            laminate: None,
            crossing: None,
            notes: Vec::new(),
            diagnostics,
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.kind != Kind::Inadmissible
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Reads `d` from the diagonal of the first unmasked cell.
pub fn infer_params(e: &StrainField) -> WellParams {
    let idx = (0..e.grid.len()).find(|&i| !e.mask[i]).unwrap_or(0);
    let m = e.at(idx);
    WellParams::new(m.get(0, 0), m.get(1, 1), m.get(2, 2))
}

fn strain_from_signs(d: [f64; 3], x: &Extraction, f: i8, g: i8) -> SymMat3 {
    let mut m = SymMat3::from_entries(d[0], d[1], d[2], 0.0, 0.0, 0.0);
    let (j, a, b) = (x.invariant_axis.index(), x.f_axis.index(), x.g_axis.index());
    m.set(a, b, f as f64);
    m.set(j, b, g as f64);
    m.set(j, a, (f * g) as f64);
    m
}

fn identify(set: &WellSet, m: &SymMat3) -> Result<usize, StructureViolation> {
    set.identify(m, WELL_MATCH_TOL).ok_or_else(|| StructureViolation {
        check: "wells".into(),
        cell: None,
        detail: format!("recovered strain {m} is not a well"),
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Well pair, normal and layer profile of a laminate extraction.
fn laminate_info(grid: &TorusGrid, set: &WellSet, x: &Extraction) -> Result<LaminateInfo, StructureViolation> {
    let d = set.params.diagonal();
    let along_f = !x.f.is_constant();
    let (w_plus, w_minus) = if along_f {
        let g0 = x.g.values()[0];
        (identify(set, &strain_from_signs(d, x, 1, g0))?, identify(set, &strain_from_signs(d, x, -1, g0))?)
    } else {
        let f0 = x.f.values()[0];
        (identify(set, &strain_from_signs(d, x, f0, 1))?, identify(set, &strain_from_signs(d, x, f0, -1))?)
    };
    let (lo, hi) = (w_plus.min(w_minus), w_plus.max(w_minus));
    let sign_lo: i8 = if w_plus == lo { 1 } else { -1 };

    let mut m = [0i32; 3];
    let (normal_choice, profile) = if along_f {
        m[x.f_axis.index()] = 1;
        (NormalChoice::Axis, x.f.values().iter().map(|&v| v * sign_lo).collect::<Vec<_>>())
    } else {
        let f0 = x.f.values()[0] as i32;
        m[x.g_axis.index()] = 1;
        m[x.f_axis.index()] = f0;
        let period = gcd(grid.n(x.f_axis), grid.n(x.g_axis));
        if (0..x.g.len()).any(|t| x.g.values()[t] != x.g.values()[t % period]) {
            return Err(StructureViolation {
                check: "periodicity".into(),
                cell: None,
                detail: format!("g = {} does not repeat with period {period}", x.g),
            });
        }
        (NormalChoice::Diagonal, x.g.values()[..period].iter().map(|&v| v * sign_lo).collect())
    };

    let diff = set.wells[lo - 1] - set.wells[hi - 1];
    let table_normal = rank_one_decompose(&diff)
        .map_err(|e| StructureViolation { check: "normal".into(), cell: None, detail: e.to_string() })?
        .iter()
        .filter_map(|s| s.lattice_normal(1e-9))
        .any(|n| n == m || n == m.map(|v| -v));
    if !table_normal {
        return Err(StructureViolation {
            check: "normal".into(),
            cell: None,
            detail: format!("layer normal {m:?} is not a twin normal of wells {lo} and {hi}"),
        });
    }
    let len = (m.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt();
    Ok(LaminateInfo {
        pair: [lo, hi],
        normal_choice,
        lattice_normal: m,
        normal: m.map(|v| v as f64 / len),
        profile: ProfileBits::new(profile).expect("signs"),
    })
}

/// Runs the full pipeline; failures are encoded in the report.
pub fn classify(e: &StrainField, params: WellParams) -> StructureReport {
    let grid = e.grid;
    let mut diag = Diagnostics { masked_fraction: e.masked_fraction(), ..Diagnostics::default() };

    let map = match check_inclusion(e, params) {
        Ok(map) => map,
        Err(v) => {
            let msg = format!("cell {:?} is {:.3e} away from every well", v.cell, v.distance);
            return StructureReport::inadmissible(Stage::Inclusion, msg, Some(v.cell), diag);
        }
    };
    diag.defect_fraction = Some(map.defect_fraction());

    let residual: ResidualReport = saint_venant_residual(e);
    diag.residuals = residual.equations.iter().map(|r| (r.equation.name().to_string(), r.relative)).collect();
    diag.max_residual = Some(residual.max_relative());
    if !residual.passes(RESIDUAL_TOL) {
        let w = residual.worst();
        let msg = format!(
            "{} relative residual {:.3e} (worst wavevector {:?})",
            w.equation.name(),
            w.relative,
            w.worst_wavevector
        );
        return StructureReport::inadmissible(Stage::SaintVenant, msg, None, diag);
    }

    let slices = slice_average_check(e);
    diag.slice_average_deviation = Some(slices.max());
    if slices.max() > SLICE_AVERAGE_TOL {
        let msg = format!("slice averages deviate by {:.3e}", slices.max());
        return StructureReport::inadmissible(Stage::SliceAverage, msg, None, diag);
    }

    let pw = match planar_decompose(e) {
        Ok(pw) => pw,
        Err(err) => {
            let cell = match &err {
                PlanarError::NotTwoValued { cell, .. } => Some(*cell),
                PlanarError::UndecidableSlice { .. } => None,
            };
            return StructureReport::inadmissible(Stage::PlanarDecomposition, err.to_string(), cell, diag);
        }
    };

    let (ps, path, wrap) = match build_primitives(&grid, &pw) {
        Ok(x) => x,
        Err(err) => return StructureReport::inadmissible(Stage::Primitives, err.to_string(), None, diag),
    };
    let lemma = lemma_diagnostics(e, &pw, &ps, path, wrap);
    let lemma_failure = lemma.first_failure();
    diag.lemma = Some(lemma);
    if let Some(msg) = lemma_failure {
        return StructureReport::inadmissible(Stage::Primitives, msg, None, diag);
    }

    let Some(j) = detect_invariant_direction(e) else {
        return StructureReport::inadmissible(
            Stage::InvariantDirection,
            "the field varies along every axis".into(),
            None,
            diag,
        );
    };

    let set = build_wells(params);
    let outcome = extract_structure(e, j).and_then(|x| {
        let mut report = StructureReport {
            kind: Kind::Constant,
            invariant_axis: Some(j),
            failure: None,
            constant: None,
            laminate: None,
            crossing: None,
            notes: Vec::new(),
            diagnostics: Diagnostics::default(),
        };
        match (x.f.is_constant(), x.g.is_constant()) {
            (true, true) => {
                let well = identify(&set, &strain_from_signs(params.diagonal(), &x, x.f.values()[0], x.g.values()[0]))?;
                report.constant = Some(ConstantInfo { well });
            }
            (false, false) => {
                report.kind = Kind::CrossingTwin;
                report.crossing = Some(CrossingInfo {
                    f_axis: x.f_axis,
                    g_axis: x.g_axis,
                    f: x.f.clone(),
                    g: x.g.clone(),
                    shear: x.shear.clone(),
                });
            }
            (f_const, _) => {
                report.kind = Kind::SimpleLaminate;
                report.laminate = Some(laminate_info(&grid, &set, &x)?);
                report.notes.push(format!(
                    "also a crossing twin with constant {} along {}",
                    if f_const { "f" } else { "g" },
                    if f_const { x.f_axis } else { x.g_axis }
                ));
            }
        }
        Ok(report)
    });
    match outcome {
        Ok(mut report) => {
            report.diagnostics = diag;
            report
        }
        Err(v) => StructureReport::inadmissible(Stage::Structure, v.to_string(), v.cell, diag),
    }
}

/// Regenerates the field described by an admissible report.
pub fn rebuild(
    report: &StructureReport,
    grid: TorusGrid,
    params: WellParams,
) -> Option<Result<(StrainField, DisplacementField), FieldError>> {
    match report.kind {
        Kind::Inadmissible => None,
        Kind::Constant => report.constant.as_ref().map(|c| gen_constant(grid, params, c.well)),
        Kind::SimpleLaminate => report.laminate.as_ref().map(|l| {
            let spec = LaminateSpec { pair: (l.pair[0], l.pair[1]), normal: l.normal_choice, profile: l.profile.clone() };
            gen_laminate(grid, params, &spec)
        }),
        Kind::CrossingTwin => report.crossing.as_ref().map(|c| {
            let spec = CrossingSpec {
                invariant_axis: report.invariant_axis.expect("crossing has an axis"),
                f_axis: c.f_axis,
                g_axis: c.g_axis,
                f: c.f.clone(),
                g: c.g.clone(),
            };
            gen_crossing(grid, params, &spec)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> WellParams {
        WellParams::new(0.25, -0.5, 1.5)
    }

    #[test]
    fn zero_field_with_zero_diagonal_is_inadmissible() {
        let grid = TorusGrid::unit_spacing([4, 4, 4]).unwrap();
        let r = classify(&StrainField::zeros(grid), WellParams::new(0.0, 0.0, 0.0));
        assert_eq!(r.kind, Kind::Inadmissible);
        assert_eq!(r.failure.unwrap().stage, Stage::Inclusion);
    }

    #[test]
    fn crossing_example() {
        let grid = TorusGrid::unit_spacing([4, 2, 4]).unwrap();
        let spec = CrossingSpec::canonical("++--".parse().unwrap(), "+-+-".parse().unwrap());
        let (e, _) = gen_crossing(grid, params(), &spec).unwrap();
        let r = classify(&e, params());
        assert_eq!(r.kind, Kind::CrossingTwin, "{:?}", r.failure);
        assert_eq!(r.invariant_axis, Some(Axis::X2));
        let c = r.crossing.as_ref().unwrap();
        assert_eq!((&c.f, &c.g), (&spec.f, &spec.g));
        assert_eq!(r.diagnostics.lemma.as_ref().unwrap().constant_psi, vec!["psi12".to_string()]);
        let (back, _) = rebuild(&r, grid, params()).unwrap().unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn laminate_one_four_has_normal_e2() {
        let grid = TorusGrid::unit_spacing([4, 6, 4]).unwrap();
        let spec = LaminateSpec { pair: (1, 4), normal: NormalChoice::Axis, profile: "++-+--".parse().unwrap() };
        let (e, _) = gen_laminate(grid, params(), &spec).unwrap();
        let r = classify(&e, params());
        assert_eq!(r.kind, Kind::SimpleLaminate);
        let l = r.laminate.unwrap();
        assert_eq!(l.pair, [1, 4]);
        assert_eq!(l.lattice_normal, [0, 1, 0]);
        assert_eq!(l.profile, spec.profile);
    }

    #[test]
    fn flipped_cell_is_rejected() {
        let grid = TorusGrid::unit_spacing([8, 4, 8]).unwrap();
        let spec = CrossingSpec::canonical("++--++--".parse().unwrap(), "+--++-+-".parse().unwrap());
        let (mut e, _) = gen_crossing(grid, params(), &spec).unwrap();
        let idx = (0..grid.len()).find(|&i| !e.mask[i]).unwrap();
        e.component_mut(0, 1)[idx] *= -1.0;
        let r = classify(&e, params());
        let stage = r.failure.unwrap().stage;
        assert!(matches!(stage, Stage::Inclusion | Stage::SaintVenant), "{stage:?}");
    }

    #[test]
    fn inferred_params_match() {
        let grid = TorusGrid::unit_spacing([2, 2, 2]).unwrap();
        let (e, _) = gen_constant(grid, params(), 3).unwrap();
        assert_eq!(infer_params(&e), params());
    }
}
