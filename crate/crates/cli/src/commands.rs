//! Subcommand bodies. Each returns a JSON report, a text rendering and an
//! exit code, or a [`CliError`].

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use trigokit::classify::{self, check_inclusion, infer_params, Kind, WELL_MATCH_TOL};
use trigokit::compat::{reconstruct_displacement, saint_venant_residual, slice_average_check, symmetrized_gradient};
use trigokit::field::generate::laminate_geometry;
use trigokit::field::{
    gen_constant, gen_crossing, gen_laminate, read_field, write_disp, write_field, Axis, CrossingSpec,
    DisplacementField, FieldError, IoError, LaminateSpec, ProfileBits, StrainField, TorusGrid, COMPONENT_INDICES,
    COMPONENT_NAMES,
};
use trigokit::wells::{
    build_wells, map_to_trigonal, ortho_wells, trigonal_params_for, twin_table, OrthoParams, SymMat3, TwinPair,
    WellParams,
};

use crate::GenKind;

pub struct Outcome {
    pub report: Value,
    pub text: String,
    pub code: u8,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn precondition(e: FieldError) -> Self {
        Self { code: 3, message: e.to_string() }
    }

    fn file(path: &Path, e: IoError) -> Self {
        Self { code: 4, message: format!("{}: {e}", path.display()) }
    }
}

fn ok(report: Value, text: String) -> Result<Outcome, CliError> {
    Ok(Outcome { report, text, code: 0 })
}

fn fmt_vec(v: &[f64; 3]) -> String {
    // adding zero drops the sign of -0
    let [a, b, c] = v.map(|x| x + 0.0);
    format!("({a:.6}, {b:.6}, {c:.6})")
}

fn rows_json(m: &SymMat3) -> Value {
    json!(m.rows())
}

fn pair_json(s: &TwinPair) -> Value {
    json!({ "a": s.a, "n": s.n, "lattice_normal": s.lattice_normal(1e-9) })
}

pub fn wells(d: [f64; 3]) -> Result<Outcome, CliError> {
    let params = WellParams::new(d[0], d[1], d[2]);
    if !params.is_finite() {
        return Err(CliError::usage("well parameters must be finite"));
    }
    let set = build_wells(params);
    let table = twin_table(params).map_err(|e| CliError { code: 1, message: e.to_string() })?;

    let mut text = format!("wells for d = {}\n", fmt_vec(&d));
    for (i, w) in set.wells.iter().enumerate() {
        let _ = writeln!(text, "e{}:\n{w}", i + 1);
    }
    text.push_str("\ntwin table (pair: n, a for both solutions)\n");
    for rec in &table {
        let _ = write!(text, "({},{}):", rec.pair.0, rec.pair.1);
        for s in &rec.solutions {
            let lattice = s.lattice_normal(1e-9).map(|m| format!(" {m:?}")).unwrap_or_default();
            let _ = write!(text, "  n = {}{lattice} a = {}", fmt_vec(&s.n), fmt_vec(&s.a));
        }
        text.push('\n');
    }
    let report = json!({
        "params": d,
        "wells": set.wells.iter().enumerate().map(|(i, w)| json!({ "index": i + 1, "strain": rows_json(w) })).collect::<Vec<_>>(),
        "table": table.iter().map(|r| json!({
            "pair": [r.pair.0, r.pair.1],
            "solutions": r.solutions.iter().map(pair_json).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    ok(report, text)
}

pub fn map_ortho(delta: f64) -> Result<Outcome, CliError> {
    let p = OrthoParams::new(delta).map_err(|e| CliError::usage(e.to_string()))?;
    let params = trigonal_params_for(p).map_err(|e| CliError::usage(e.to_string()))?;
    let set = build_wells(params);
    let ortho = ortho_wells(p).map_err(|e| CliError::usage(e.to_string()))?;
    let mut text = format!("delta = {delta}\ntrigonal d = {}\n", fmt_vec(&params.diagonal()));
    let mut rows = Vec::new();
    for (k, e) in ortho.iter().enumerate() {
        let image = map_to_trigonal(e, p).map_err(|e| CliError::usage(e.to_string()))?;
        let well = set.identify(&image, WELL_MATCH_TOL);
        let label = well.map(|w| format!("trigonal well {w}")).unwrap_or_else(|| "no trigonal well".into());
        let _ = writeln!(text, "\northo e{}:\n{e}\nimage ({label}):\n{image}", k + 1);
        rows.push(json!({ "index": k + 1, "ortho": rows_json(e), "image": rows_json(&image), "trigonal_well": well }));
    }
    ok(json!({ "delta": delta, "params": params.diagonal(), "wells": rows }), text)
}

fn profile(text: Option<&str>, len: usize) -> Result<ProfileBits, CliError> {
    match text {
        Some(t) => t.parse().map_err(|e: FieldError| CliError::usage(e.to_string())),
        None => ProfileBits::halves(len).map_err(|e| CliError::usage(e.to_string())),
    }
}

fn axis(n: usize) -> Result<Axis, CliError> {
    Axis::from_number(n).ok_or_else(|| CliError::usage(format!("axis must be 1, 2 or 3, got {n}")))
}

fn summary(e: &StrainField) -> Value {
    let mean = e.mean();
    json!({
        "dims": e.grid.dims,
        "lengths": e.grid.lengths,
        "masked_cells": e.masked_count(),
        "defect_fraction": e.masked_fraction(),
        "mean_strain": rows_json(&mean),
    })
}

pub fn gen(kind: GenKind) -> Result<Outcome, CliError> {
    let (args, result) = match kind {
        GenKind::Constant { grid, well } => {
            let g = TorusGrid::new(grid.dims, grid.lengths).map_err(|e| CliError::usage(e.to_string()))?;
            let params = WellParams::new(grid.d[0], grid.d[1], grid.d[2]);
            (grid, ("constant", gen_constant(g, params, well)))
        }
        GenKind::Laminate { grid, pair, normal, profile: text } => {
            let g = TorusGrid::new(grid.dims, grid.lengths).map_err(|e| CliError::usage(e.to_string()))?;
            let params = WellParams::new(grid.d[0], grid.d[1], grid.d[2]);
            let geo = laminate_geometry(&g, params, pair, normal.into()).map_err(generator_error)?;
            let spec = LaminateSpec { pair, normal: normal.into(), profile: profile(text.as_deref(), geo.layers)? };
            (grid, ("laminate", gen_laminate(g, params, &spec)))
        }
        GenKind::Crossing { grid, f, g, axis: j, f_axis, g_axis } => {
            let tg = TorusGrid::new(grid.dims, grid.lengths).map_err(|e| CliError::usage(e.to_string()))?;
            let params = WellParams::new(grid.d[0], grid.d[1], grid.d[2]);
            let (j, fa, ga) = (axis(j)?, axis(f_axis)?, axis(g_axis)?);
            let spec = CrossingSpec {
                invariant_axis: j,
                f_axis: fa,
                g_axis: ga,
                f: profile(f.as_deref(), tg.n(fa))?,
                g: profile(g.as_deref(), tg.n(ga))?,
            };
            (grid, ("crossing", gen_crossing(tg, params, &spec)))
        }
    };
    let (name, result) = result;
    let (e, u) = result.map_err(generator_error)?;
    write_field(&args.out, &e).map_err(|err| CliError::file(&args.out, err))?;
    if let Some(p) = &args.disp {
        write_disp(p, &u).map_err(|err| CliError::file(p, err))?;
    }
    let mut report = summary(&e);
    report["generator"] = json!(name);
    report["out"] = json!(args.out.display().to_string());
    report["disp"] = json!(args.disp.as_ref().map(|p| p.display().to_string()));
    let text = format!(
        "{name} field {:?} written to {}\nmasked cells {} (defect fraction {:.6})\nmean strain\n{}\n",
        e.grid.dims,
        args.out.display(),
        e.masked_count(),
        e.masked_fraction(),
        e.mean()
    );
    ok(report, text)
}

fn generator_error(err: FieldError) -> CliError {
    match err {
        FieldError::BadProfile(_) | FieldError::BadGrid(_) => CliError::usage(err.to_string()),
        other => CliError::precondition(other),
    }
}

fn load(path: &Path) -> Result<StrainField, CliError> {
    read_field(path).map_err(|e| CliError::file(path, e))
}

fn params_for(e: &StrainField, d: Option<[f64; 3]>) -> WellParams {
    d.map(|d| WellParams::new(d[0], d[1], d[2])).unwrap_or_else(|| infer_params(e))
}

pub fn verify(path: &Path, d: Option<[f64; 3]>, tol: f64) -> Result<Outcome, CliError> {
    let e = load(path)?;
    let params = params_for(&e, d);
    let residuals = saint_venant_residual(&e);
    let slices = slice_average_check(&e);
    let inclusion = check_inclusion(&e, params);
    let compatible = residuals.passes(tol);
    let passed = compatible && inclusion.is_ok();
    let worst = residuals.worst();

    let mut text = format!("{}: {:?}\n", path.display(), e.grid.dims);
    for r in &residuals.equations {
        let _ = writeln!(text, "  {:<8} max {:.3e} relative {:.3e}", r.equation.name(), r.max_abs, r.relative);
    }
    let _ = writeln!(text, "slice averages: e23 {:.3e} e13 {:.3e} e12 {:.3e}", slices.e23, slices.e13, slices.e12);
    let inclusion_json = match &inclusion {
        Ok(map) => {
            let _ = writeln!(text, "inclusion: ok, defect fraction {:.6}", map.defect_fraction());
            json!({ "ok": true, "defect_fraction": map.defect_fraction(), "counts": map.counts })
        }
        Err(v) => {
            let _ = writeln!(text, "inclusion: cell {:?} is {:.3e} away from every well", v.cell, v.distance);
            json!({ "ok": false, "cell": v.cell, "distance": v.distance })
        }
    };
    if !compatible {
        let _ = writeln!(text, "incompatible: {} relative residual {:.3e} > {tol:.1e}", worst.equation.name(), worst.relative);
    }
    let _ = writeln!(text, "{}", if passed { "PASS" } else { "FAIL" });
    let report = json!({
        "path": path.display().to_string(),
        "params": params.diagonal(),
        "tolerance": tol,
        "residuals": residuals.equations.iter().map(|r| (r.equation.name().to_string(), json!({
            "max_abs": r.max_abs,
            "relative": r.relative,
            "worst_wavevector": r.worst_wavevector,
        }))).collect::<serde_json::Map<_, _>>(),
        "worst_equation": worst.equation.name(),
        "slice_average": slices,
        "inclusion": inclusion_json,
        "masked_fraction": e.masked_fraction(),
        "passed": passed,
    });
    Ok(Outcome { report, text, code: if passed { 0 } else { 1 } })
}

pub fn classify(path: &Path, d: Option<[f64; 3]>) -> Result<Outcome, CliError> {
    let e = load(path)?;
    let params = params_for(&e, d);
    let report = classify::classify(&e, params);
    let mut text = format!("{}: {:?}\nkind: {:?}\n", path.display(), e.grid.dims, report.kind);
    if let Some(j) = report.invariant_axis {
        let _ = writeln!(text, "invariant axis: {j}");
    }
    if let Some(c) = &report.constant {
        let _ = writeln!(text, "well: {}", c.well);
    }
    if let Some(l) = &report.laminate {
        let _ = writeln!(
            text,
            "wells {} and {}, normal {:?} ({:?}), profile {}",
            l.pair[0], l.pair[1], l.lattice_normal, l.normal_choice, l.profile
        );
    }
    if let Some(c) = &report.crossing {
        let _ = writeln!(text, "f along {}: {}\ng along {}: {}", c.f_axis, c.f, c.g_axis, c.g);
    }
    if let Some(f) = &report.failure {
        let _ = writeln!(text, "failed at {:?}: {}", f.stage, f.message);
    }
    for n in &report.notes {
        let _ = writeln!(text, "note: {n}");
    }
    let code = if report.kind == Kind::Inadmissible { 1 } else { 0 };
    Ok(Outcome { report: report.to_json(), text, code })
}

pub fn reconstruct(path: &Path, out: &Path, tol: f64) -> Result<Outcome, CliError> {
    let e = load(path)?;
    let u: DisplacementField =
        reconstruct_displacement(&e, tol).map_err(|err| CliError { code: 1, message: err.to_string() })?;
    let error = symmetrized_gradient(&u).max_abs_diff(&e);
    write_disp(out, &u).map_err(|err| CliError::file(out, err))?;
    let text = format!(
        "displacement written to {}\nround-trip max error {error:.3e}\nperiodic part max {:.6e}\n",
        out.display(),
        u.periodic_max_abs()
    );
    let report = json!({
        "out": out.display().to_string(),
        "round_trip_error": error,
        "periodic_max_abs": u.periodic_max_abs(),
        "mean_strain": rows_json(&u.mean_strain),
    });
    ok(report, text)
}

fn parse_slice(spec: &str, grid: &TorusGrid) -> Result<(Axis, usize), CliError> {
    let bad = || CliError::usage(format!("slice must look like x2=0, got {spec:?}"));
    let (name, index) = spec.split_once('=').ok_or_else(bad)?;
    let n: usize = name.trim().strip_prefix('x').and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let a = axis(n)?;
    let i: usize = index.trim().parse().map_err(|_| bad())?;
    if i >= grid.n(a) {
        return Err(CliError::usage(format!("slice index {i} out of range 0..{} along {a}", grid.n(a))));
    }
    Ok((a, i))
}

/// Storage slot of `eij`, accepting either index order.
fn component_slot(name: &str) -> Option<usize> {
    let digits: Vec<usize> = name.strip_prefix('e')?.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<_>>()?;
    let [a, b] = digits[..] else { return None };
    if !(1..=3).contains(&a) || !(1..=3).contains(&b) {
        return None;
    }
    let key = (a.min(b) - 1, a.max(b) - 1);
    COMPONENT_INDICES.iter().position(|&p| p == key)
}

pub fn export(path: &Path, component: &str, slice: &str, out: Option<&Path>) -> Result<Outcome, CliError> {
    let e = load(path)?;
    let slot = component_slot(component)
        .ok_or_else(|| CliError::usage(format!("unknown component {component:?}; use one of {COMPONENT_NAMES:?}")))?;
    let (i, j) = COMPONENT_INDICES[slot];
    let values = e.component(i, j);
    let (axis, index) = parse_slice(slice, &e.grid)?;
    let [r, c] = axis.others();
    let matrix: Vec<Vec<f64>> = (0..e.grid.n(r))
        .map(|ir| {
            (0..e.grid.n(c))
                .map(|ic| {
                    let mut cell = [0usize; 3];
                    cell[axis.index()] = index;
                    cell[r.index()] = ir;
                    cell[c.index()] = ic;
                    values[e.grid.index(cell)]
                })
                .collect()
        })
        .collect();
    let mut csv = String::new();
    for row in &matrix {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    let report = json!({
        "component": COMPONENT_NAMES[slot],
        "slice": { "axis": axis.number(), "index": index },
        "rows": r.number(),
        "columns": c.number(),
        "out": out.map(|p| p.display().to_string()),
        "values": matrix,
    });
    match out {
        Some(p) => {
            std::fs::write(p, &csv).map_err(|err| CliError::file(p, IoError::Io(err)))?;
            ok(report, format!("{} on {axis} = {index} ({} x {}) written to {}\n", COMPONENT_NAMES[slot], e.grid.n(r), e.grid.n(c), p.display()))
        }
        None => ok(report, csv),
    }
}
