//! Exact discrete generators: constants, simple laminates and crossing twins.
//!
//! Each generator returns the strain together with a displacement whose
//! forward-difference symmetrized gradient reproduces it on every cell
//! (masked or not), up to floating-point rounding in the displacement.

use serde::{Deserialize, Serialize};

use super::{Axis, DisplacementField, FieldError, ProfileBits, StrainField, TorusGrid};
use crate::wells::{build_wells, lattice_direction, rank_one_decompose, SymMat3, WellParams};

const SPACING_RTOL: f64 = 1e-12;

fn spacings_match(grid: &TorusGrid, a: Axis, b: Axis) -> Result<f64, FieldError> {
    let (ha, hb) = (grid.spacing(a), grid.spacing(b));
    if (ha - hb).abs() <= SPACING_RTOL * ha.max(hb) {
        Ok(ha)
    } else {
        Err(FieldError::SpacingMismatch(a, b, ha, hb))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn gen_constant(
    grid: TorusGrid,
    params: WellParams,
    well_index: usize,
) -> Result<(StrainField, DisplacementField), FieldError> {
    let set = build_wells(params);
    let well = *set.well(well_index).map_err(|_| FieldError::BadIndex(well_index))?;
    Ok((StrainField::constant(grid, &well), DisplacementField::affine(grid, well)))
}

/// Which of the two twin normals of a well pair to laminate along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalChoice {
    /// The coordinate-axis normal, e.g. `(1, 0, 0)`.
    Axis,
    /// The face-diagonal normal, e.g. `(0, 1, 1)/√2`.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaminateSpec {
    /// 1-based well indices; profile `+1` selects the first, `-1` the second.
    pub pair: (usize, usize),
    pub normal: NormalChoice,
    pub profile: ProfileBits,
}

/// Layer geometry of a laminate on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaminateGeometry {
    /// Integer normal with leading nonzero entry `+1`.
    pub normal: [i32; 3],
    /// Axis of the leading nonzero entry.
    pub lead: Axis,
    /// Second axis and sign for diagonal normals.
    pub trail: Option<(Axis, i32)>,
    /// Number of distinct layers.
    pub layers: usize,
    /// Shear vector `b` with `e⁽ⁱ⁾ - e⁽ʲ⁾ = ½(b ⊗ m + m ⊗ b)` for the integer normal `m`.
    pub shear: [f64; 3],
}

impl LaminateGeometry {
    /// Layer index of a cell.
    pub fn layer(&self, c: [usize; 3]) -> usize {
        let lead = c[self.lead.index()] as i64;
        match self.trail {
            None => lead as usize,
            Some((axis, sign)) => {
                (lead + sign as i64 * c[axis.index()] as i64).rem_euclid(self.layers as i64) as usize
            }
        }
    }
}

/// Resolves the twin normal of a pair into grid layers.
pub fn laminate_geometry(
    grid: &TorusGrid,
    params: WellParams,
    pair: (usize, usize),
    normal: NormalChoice,
) -> Result<LaminateGeometry, FieldError> {
    let (i, j) = pair;
    if !(1..=4).contains(&i) || !(1..=4).contains(&j) || i == j {
        return Err(FieldError::BadPair(i, j));
    }
    let set = build_wells(params);
    let diff = set.wells[i - 1] - set.wells[j - 1];
    let sols = rank_one_decompose(&diff)?;
    let want_nonzero = match normal {
        NormalChoice::Axis => 1,
        NormalChoice::Diagonal => 2,
    };
    let m = sols
        .iter()
        .filter_map(|s| s.lattice_normal(1e-9))
        .find(|m| m.iter().filter(|&&x| x != 0).count() == want_nonzero)
        .ok_or(FieldError::BadPair(i, j))?;
    let nonzero: Vec<usize> = (0..3).filter(|&k| m[k] != 0).collect();
    let lead = Axis::from_index(nonzero[0]).unwrap();
    let mut shear = [0.0; 3];
    let (trail, layers) = if nonzero.len() == 1 {
        // sym(b ⊗ e_k): entry (k, l) = b_l / 2 for l ≠ k, entry (k, k) = b_k
        let k = lead.index();
        for (l, s) in shear.iter_mut().enumerate() {
            *s = if l == k { diff.get(k, k) } else { 2.0 * diff.get(k, l) };
        }
        (None, grid.n(lead))
    } else {
        let b = Axis::from_index(nonzero[1]).unwrap();
        let sign = m[nonzero[1]] * m[nonzero[0]];
        spacings_match(grid, lead, b)?;
        let jx = Axis::third(lead, b).index();
        shear[jx] = 2.0 * diff.get(jx, lead.index());
        (Some((b, sign)), gcd(grid.n(lead), grid.n(b)))
    };
    let mut normal_vec = [0i32; 3];
    for k in 0..3 {
        normal_vec[k] = m[k] * m[nonzero[0]];
    }
    debug_assert!(SymMat3::sym_outer(&shear, &normal_vec.map(|x| x as f64)).max_abs_diff(&diff) == 0.0);
    Ok(LaminateGeometry { normal: normal_vec, lead, trail, layers, shear })
}

/// Simple laminate between two wells with the chosen twin normal.
///
/// For a normal `m = e_a + σ e_b` the displacement is `u = ē x + b Λ(i_a + σ i_b)`
/// with `Λ` a discrete primitive of the centred profile. When `σ = -1` the
/// backward shift in the `b` difference puts the `(j, b)` entry one layer
/// behind the `(j, a)` entry, so cells right after a jump are off-well and
/// are masked.
pub fn gen_laminate(
    grid: TorusGrid,
    params: WellParams,
    spec: &LaminateSpec,
) -> Result<(StrainField, DisplacementField), FieldError> {
    let geo = laminate_geometry(&grid, params, spec.pair, spec.normal)?;
    let profile = &spec.profile;
    if profile.len() != geo.layers {
        return Err(FieldError::ProfileLength {
            what: "laminate layers".into(),
            expected: geo.layers,
            got: profile.len(),
        });
    }
    let set = build_wells(params);
    let (wi, wj) = (set.wells[spec.pair.0 - 1], set.wells[spec.pair.1 - 1]);
    let choose = |p: i8, r: usize, c: usize| if p > 0 { wi.get(r, c) } else { wj.get(r, c) };

    let mut strain = StrainField::constant(grid, &wi);
    for idx in 0..grid.len() {
        let c = grid.coords(idx);
        let layer = geo.layer(c);
        let p = profile.values()[layer];
        let mut e = wi;
        match geo.trail {
            None => {
                let k = geo.lead.index();
                for l in 0..3 {
                    e.set(k, l, choose(p, k, l));
                }
            }
            Some((b, sign)) => {
                let a = geo.lead;
                let jx = Axis::third(a, b).index();
                let behind = if sign < 0 { profile.at(layer as i64 - 1) } else { p };
                e.set(jx, a.index(), choose(p, jx, a.index()));
                e.set(jx, b.index(), choose(behind, jx, b.index()));
                strain.mask[idx] = behind != p;
            }
        }
        strain.set(idx, &e);
    }

    let h = grid.spacing(geo.lead);
    let pbar = profile.mean();
    let mut lambda = Vec::with_capacity(geo.layers);
    let mut acc = 0.0;
    for &p in profile.values() {
        lambda.push(acc);
        acc += 0.5 * h * (p as f64 - pbar);
    }
    let mean_l = lambda.iter().sum::<f64>() / lambda.len() as f64;
    let mid = (wi + wj) * 0.5;
    let mean_strain = mid + (wi - wj) * (0.5 * pbar);
    let mut disp = DisplacementField::affine(grid, mean_strain);
    for idx in 0..grid.len() {
        let l = lambda[geo.layer(grid.coords(idx))] - mean_l;
        for k in 0..3 {
            disp.periodic[k][idx] = geo.shear[k] * l;
        }
    }
    disp.remove_periodic_mean();
    Ok((strain, disp))
}

/// Axis roles and profiles of a crossing twin.
///
/// With invariant axis `j`, `f` indexed along `f_axis = A` and `g` along
/// `g_axis = B`, the strain is `e_AB = f(x_A)`, `e_jB = g(x_B + F(x_A))` and
/// `e_jA = f(x_A) g(x_B + F(x_A))` where `F' = f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSpec {
    pub invariant_axis: Axis,
    pub f_axis: Axis,
    pub g_axis: Axis,
    pub f: ProfileBits,
    pub g: ProfileBits,
}

impl CrossingSpec {
    /// Invariant axis 2, `f` along axis 3, `g` along axis 1.
    pub fn canonical(f: ProfileBits, g: ProfileBits) -> Self {
        Self { invariant_axis: Axis::X2, f_axis: Axis::X3, g_axis: Axis::X1, f, g }
    }

    /// Integer shear `S[i] = Σ_{m<i} f[m]` for `i` in `0..=N_A`.
    pub fn cumulative_shear(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.f.len() + 1);
        let mut acc = 0;
        out.push(0);
        for &v in self.f.values() {
            acc += v as i64;
            out.push(acc);
        }
        out
    }
}

/// Checks `g(t + shift) = g(t)` for all `t`.
pub fn shift_invariant(g: &ProfileBits, shift: i64) -> bool {
    (0..g.len() as i64).all(|t| g.at(t + shift) == g.at(t))
}

/// Crossing twin with the upwind convention: on rows with `f = -1` the
/// `e_jA` entry reads `g` one cell behind, which is what makes the field an
/// exact forward-difference symmetrized gradient. Cells where that offset
/// straddles a jump of `g` are masked.
pub fn gen_crossing(
    grid: TorusGrid,
    params: WellParams,
    spec: &CrossingSpec,
) -> Result<(StrainField, DisplacementField), FieldError> {
    let (j, fa, ga) = (spec.invariant_axis, spec.f_axis, spec.g_axis);
    if j == fa || j == ga || fa == ga {
        return Err(FieldError::BadAxes(format!("axes {j}, {fa}, {ga} must be distinct")));
    }
    let h = spacings_match(&grid, fa, ga)?;
    for (what, prof, axis) in [("f", &spec.f, fa), ("g", &spec.g, ga)] {
        if prof.len() != grid.n(axis) {
            return Err(FieldError::ProfileLength { what: what.into(), expected: grid.n(axis), got: prof.len() });
        }
    }
    let shear = spec.cumulative_shear();
    let total = *shear.last().unwrap();
    if !shift_invariant(&spec.g, total) {
        return Err(FieldError::PeriodicityViolation { shift: total, len: spec.g.len() });
    }

    let d = params.diagonal();
    let (f, g) = (&spec.f, &spec.g);
    let (ji, ai, bi) = (j.index(), fa.index(), ga.index());
    let mut strain = StrainField::zeros(grid);
    for idx in 0..grid.len() {
        let c = grid.coords(idx);
        let fv = f.values()[c[ai]];
        let q = c[bi] as i64 + shear[c[ai]];
        let gq = g.at(q);
        let upwind = g.at(q + (fv as i64 - 1) / 2);
        let mut e = SymMat3::from_entries(d[0], d[1], d[2], 0.0, 0.0, 0.0);
        e.set(ai, bi, fv as f64);
        e.set(ji, bi, gq as f64);
        e.set(ji, ai, (fv * upwind) as f64);
        strain.set(idx, &e);
        strain.mask[idx] = fv < 0 && upwind != gq;
    }

    // u_B = P(i_A) with ΔP = 2h f, u_j = W(i_B + S(i_A)) with ΔW = 2h g;
    // the linear parts go into the mean strain.
    let (fbar, gbar) = (f.mean(), g.mean());
    let nb = g.len();
    let mut w_tilde = Vec::with_capacity(nb);
    let mut acc = 0.0;
    for r in 0..nb {
        w_tilde.push(acc - 2.0 * h * gbar * r as f64);
        acc += 2.0 * h * g.values()[r] as f64;
    }
    let s_tilde: Vec<f64> = (0..f.len()).map(|i| shear[i] as f64 - fbar * i as f64).collect();

    let mut mean_strain = SymMat3::from_entries(d[0], d[1], d[2], 0.0, 0.0, 0.0);
    mean_strain.set(ai, bi, fbar);
    mean_strain.set(ji, bi, gbar);
    mean_strain.set(ji, ai, gbar * fbar);
    let mut disp = DisplacementField::affine(grid, mean_strain);
    for idx in 0..grid.len() {
        let c = grid.coords(idx);
        let q = (c[bi] as i64 + shear[c[ai]]).rem_euclid(nb as i64) as usize;
        disp.periodic[bi][idx] = 2.0 * h * s_tilde[c[ai]];
        disp.periodic[ji][idx] = w_tilde[q] + 2.0 * h * gbar * s_tilde[c[ai]];
    }
    disp.remove_periodic_mean();
    Ok((strain, disp))
}

/// Integer direction of a vector, as used by the twin normal helpers.
pub fn integer_normal(n: &[f64; 3]) -> Option<[i32; 3]> {
    lattice_direction(n, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wells::build_wells;

    fn params() -> WellParams {
        WellParams::new(0.25, -0.5, 1.5)
    }

    #[test]
    fn constant_is_the_well() {
        let grid = TorusGrid::new([4, 4, 4], [1.0; 3]).unwrap();
        let (e, u) = gen_constant(grid, WellParams::new(1.0, 2.0, 3.0), 1).unwrap();
        let w = build_wells(WellParams::new(1.0, 2.0, 3.0)).wells[0];
        assert!((0..grid.len()).all(|i| e.at(i) == w));
        assert_eq!(u.mean_strain, w);
        assert_eq!(u.periodic_max_abs(), 0.0);
        assert!(matches!(gen_constant(grid, params(), 0), Err(FieldError::BadIndex(0))));
    }

    #[test]
    fn axis_laminate_alternates() {
        let grid = TorusGrid::new([4, 3, 3], [1.0; 3]).unwrap();
        let spec = LaminateSpec { pair: (1, 2), normal: NormalChoice::Axis, profile: "+-+-".parse().unwrap() };
        let (e, _) = gen_laminate(grid, params(), &spec).unwrap();
        for c in grid.cells() {
            let idx = grid.index(c);
            let s = if c[0] % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(e.component(0, 1)[idx], s);
            assert_eq!(e.component(0, 2)[idx], s);
            assert_eq!(e.component(1, 2)[idx], 1.0);
        }
        assert_eq!(e.masked_count(), 0);
    }

    #[test]
    fn flat_profile_is_constant() {
        let grid = TorusGrid::new([4, 4, 4], [1.0; 3]).unwrap();
        let spec = LaminateSpec { pair: (2, 4), normal: NormalChoice::Diagonal, profile: "++++".parse().unwrap() };
        let (e, _) = gen_laminate(grid, params(), &spec).unwrap();
        let w = build_wells(params()).wells[1];
        assert!((0..grid.len()).all(|i| e.at(i) == w));
        assert_eq!(e.masked_count(), 0);
    }

    #[test]
    fn laminate_errors() {
        let grid = TorusGrid::new([4, 4, 4], [1.0, 2.0, 1.0]).unwrap();
        let p: ProfileBits = "++--".parse().unwrap();
        let diag = LaminateSpec { pair: (1, 3), normal: NormalChoice::Diagonal, profile: p.clone() };
        assert!(matches!(gen_laminate(grid, params(), &diag), Err(FieldError::SpacingMismatch(..))));
        let bad = LaminateSpec { pair: (2, 2), normal: NormalChoice::Axis, profile: p.clone() };
        assert!(matches!(gen_laminate(grid, params(), &bad), Err(FieldError::BadPair(2, 2))));
        let short = LaminateSpec { pair: (1, 2), normal: NormalChoice::Axis, profile: "+-".parse().unwrap() };
        assert!(matches!(gen_laminate(grid, params(), &short), Err(FieldError::ProfileLength { .. })));
    }

    #[test]
    fn crossing_small_example() {
        let grid = TorusGrid::new([4, 2, 4], [1.0, 1.0, 1.0]).unwrap();
        let spec = CrossingSpec::canonical("++--".parse().unwrap(), "+-+-".parse().unwrap());
        assert_eq!(spec.cumulative_shear()[..4], [0, 1, 2, 1]);
        let (e, _) = gen_crossing(grid, params(), &spec).unwrap();
        for i1 in 0..4 {
            let idx = grid.index([i1, 0, 0]);
            assert_eq!(e.component(0, 1)[idx], spec.g.values()[i1] as f64);
        }
        // J = 4 jumps of g, R = 2 rows with f = -1, one x2-plane count each
        assert_eq!(e.masked_count(), 4 * 2 * 2);
    }

    #[test]
    fn crossing_preconditions() {
        let grid = TorusGrid::new([4, 2, 4], [1.0, 1.0, 2.0]).unwrap();
        let spec = CrossingSpec::canonical("++--".parse().unwrap(), "+-+-".parse().unwrap());
        assert!(matches!(gen_crossing(grid, params(), &spec), Err(FieldError::SpacingMismatch(..))));
        let grid = TorusGrid::new([4, 2, 4], [1.0; 3]).unwrap();
        let spec = CrossingSpec::canonical("+++-".parse().unwrap(), "++--".parse().unwrap());
        assert!(matches!(gen_crossing(grid, params(), &spec), Err(FieldError::PeriodicityViolation { shift: 2, .. })));
        // period 2 in g is compatible with a total shift of 2
        let spec = CrossingSpec::canonical("+++-".parse().unwrap(), "+-+-".parse().unwrap());
        assert!(gen_crossing(grid, params(), &spec).is_ok());
    }

    #[test]
    fn crossing_with_flat_g_is_axis_laminate() {
        let grid = TorusGrid::new([4, 3, 6], [1.0, 1.0, 1.5]).unwrap();
        let f: ProfileBits = "++-+--".parse().unwrap();
        let spec = CrossingSpec::canonical(f.clone(), ProfileBits::constant(4, 1).unwrap());
        let (cross, _) = gen_crossing(grid, params(), &spec).unwrap();
        let lam = LaminateSpec { pair: (1, 3), normal: NormalChoice::Axis, profile: f };
        let (lam, _) = gen_laminate(grid, params(), &lam).unwrap();
        assert_eq!(cross, lam);
    }
}
