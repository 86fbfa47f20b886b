//! Randomized generator specs and independent expectations.
#![allow(dead_code)]

pub mod dense;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trigokit::classify::Kind;
use trigokit::field::{
    gen_constant, gen_crossing, gen_laminate, Axis, CrossingSpec, DisplacementField, LaminateSpec, NormalChoice,
    ProfileBits, StrainField, TorusGrid,
};
use trigokit::wells::{WellParams, WELL_PAIRS, WELL_SIGNS};

#[derive(Debug, Clone)]
pub enum GenSpec {
    Constant(usize),
    Laminate(LaminateSpec),
    Crossing(CrossingSpec),
}

#[derive(Debug, Clone)]
pub struct Case {
    pub grid: TorusGrid,
    pub params: WellParams,
    pub spec: GenSpec,
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Axis `k` whose two shears `e_ka`, `e_kb` differ between the wells, and
/// the common value of the remaining shear `e_ab`. Read off the sign table.
pub fn pair_geometry(pair: (usize, usize)) -> (Axis, f64) {
    let (si, sj) = (WELL_SIGNS[pair.0 - 1], WELL_SIGNS[pair.1 - 1]);
    // sign order (e12, e13, e23); the common entry names the plane (a, b)
    let common = (0..3).find(|&s| si[s] == sj[s]).expect("wells share one shear");
    let k = match common {
        0 => Axis::X3,
        1 => Axis::X2,
        _ => Axis::X1,
    };
    (k, si[common])
}

impl Case {
    pub fn generate(&self) -> (StrainField, DisplacementField) {
        match &self.spec {
            GenSpec::Constant(w) => gen_constant(self.grid, self.params, *w),
            GenSpec::Laminate(s) => gen_laminate(self.grid, self.params, s),
            GenSpec::Crossing(s) => gen_crossing(self.grid, self.params, s),
        }
        .expect("corpus specs are valid")
    }

    pub fn label(&self) -> String {
        match &self.spec {
            GenSpec::Constant(w) => format!("constant well {w} on {:?}", self.grid.dims),
            GenSpec::Laminate(s) => {
                format!("laminate {:?} {:?} {} on {:?}", s.pair, s.normal, s.profile, self.grid.dims)
            }
            GenSpec::Crossing(s) => format!(
                "crossing j={} A={} B={} f={} g={} on {:?}",
                s.invariant_axis, s.f_axis, s.g_axis, s.f, s.g, self.grid.dims
            ),
        }
    }

    pub fn expected_kind(&self) -> Kind {
        match &self.spec {
            GenSpec::Constant(_) => Kind::Constant,
            GenSpec::Laminate(s) if s.profile.is_constant() => Kind::Constant,
            GenSpec::Laminate(_) => Kind::SimpleLaminate,
            GenSpec::Crossing(s) => match (s.f.is_constant(), s.g.is_constant()) {
                (true, true) => Kind::Constant,
                (false, false) => Kind::CrossingTwin,
                _ => Kind::SimpleLaminate,
            },
        }
    }

    /// Smallest axis along which the generated field is invariant.
    pub fn expected_axis(&self) -> Axis {
        let smallest_other = |k: Axis| Axis::ALL.into_iter().find(|&a| a != k).unwrap();
        match (&self.spec, self.expected_kind()) {
            (_, Kind::Constant) => Axis::X1,
            (GenSpec::Laminate(s), _) => {
                let (k, _) = pair_geometry(s.pair);
                match s.normal {
                    NormalChoice::Axis => smallest_other(k),
                    NormalChoice::Diagonal => k,
                }
            }
            (GenSpec::Crossing(s), _) if s.g.is_constant() => smallest_other(s.f_axis),
            (GenSpec::Crossing(s), _) => s.invariant_axis,
            (GenSpec::Constant(_), _) => unreachable!(),
        }
    }

    /// Expected masked-cell count: `J R N_j` for crossings, `J N / M` for
    /// anti-diagonal laminates, zero otherwise.
    pub fn expected_masked(&self) -> usize {
        let n = self.grid.len();
        match &self.spec {
            GenSpec::Constant(_) => 0,
            GenSpec::Laminate(s) => {
                let (_, sigma) = pair_geometry(s.pair);
                if s.normal == NormalChoice::Diagonal && sigma < 0.0 {
                    s.profile.jumps() * n / s.profile.len()
                } else {
                    0
                }
            }
            GenSpec::Crossing(s) => s.g.jumps() * s.f.count(-1) * self.grid.n(s.invariant_axis),
        }
    }
}

/// Cyclic translation by `shift` cells.
pub fn shifted(e: &StrainField, shift: [usize; 3]) -> StrainField {
    let grid = e.grid;
    let mut out = StrainField::zeros(grid);
    for old in 0..grid.len() {
        let c = grid.coords(old);
        let new = grid.index(std::array::from_fn(|k| (c[k] + shift[k]) % grid.dims[k]));
        for slot in 0..6 {
            out.components[slot][new] = e.components[slot][old];
        }
        out.mask[new] = e.mask[old];
    }
    out
}

fn random_profile(rng: &mut impl Rng, len: usize) -> ProfileBits {
    let values: Vec<i8> = match rng.gen_range(0..10) {
        0 => vec![if rng.gen_bool(0.5) { 1 } else { -1 }; len],
        1 => ProfileBits::halves(len).unwrap().values().to_vec(),
        _ => loop {
            let v: Vec<i8> = (0..len).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            if len < 2 || v.iter().any(|&x| x != v[0]) {
                break v;
            }
        },
    };
    ProfileBits::new(values).unwrap()
}

/// Random `g` of length `n` invariant under a cyclic shift by `shift`.
fn periodic_profile(rng: &mut impl Rng, n: usize, shift: i64) -> ProfileBits {
    let period = gcd(shift.rem_euclid(n as i64) as usize, n);
    let base = random_profile(rng, period);
    ProfileBits::new((0..n).map(|t| base.values()[t % period]).collect()).unwrap()
}

fn random_params(rng: &mut impl Rng) -> WellParams {
    let mut d = || (rng.gen_range(-8..=8) as f64) * 0.25;
    WellParams::new(d(), d(), d())
}

pub fn random_case(rng: &mut impl Rng, max_dim: usize) -> Case {
    let sizes: Vec<usize> = [3, 4, 5, 6, 8, 10, 12, 16, 32].into_iter().filter(|&n| n <= max_dim).collect();
    let dims = [0; 3].map(|_| *sizes.choose(rng).unwrap());
    random_case_on(rng, dims)
}

pub fn random_case_on(rng: &mut impl Rng, dims: [usize; 3]) -> Case {
    let h = [0.25, 0.5, 1.0][rng.gen_range(0..3)];
    let params = random_params(rng);
    let uniform = TorusGrid::new(dims, dims.map(|n| n as f64 * h)).unwrap();
    match rng.gen_range(0..10) {
        0 | 1 => {
            let lengths = [0; 3].map(|_| rng.gen_range(1..=4) as f64 * 0.5);
            Case { grid: TorusGrid::new(dims, lengths).unwrap(), params, spec: GenSpec::Constant(rng.gen_range(1..=4)) }
        }
        2..=5 => {
            let pair = WELL_PAIRS[rng.gen_range(0..6)];
            let pair = if rng.gen_bool(0.5) { pair } else { (pair.1, pair.0) };
            let (k, _) = pair_geometry(pair);
            let normal = if rng.gen_bool(0.5) { NormalChoice::Axis } else { NormalChoice::Diagonal };
            let (grid, layers) = match normal {
                NormalChoice::Axis => {
                    let lengths = [0; 3].map(|_| rng.gen_range(1..=4) as f64 * 0.5);
                    (TorusGrid::new(dims, lengths).unwrap(), dims[k.index()])
                }
                NormalChoice::Diagonal => {
                    let [a, b] = k.others();
                    (uniform, gcd(dims[a.index()], dims[b.index()]))
                }
            };
            let profile = random_profile(rng, layers);
            Case { grid, params, spec: GenSpec::Laminate(LaminateSpec { pair, normal, profile }) }
        }
        _ => {
            let mut axes = Axis::ALL;
            axes.shuffle(rng);
            let [j, fa, ga] = axes;
            let f = random_profile(rng, dims[fa.index()]);
            let g = periodic_profile(rng, dims[ga.index()], f.sum());
            let spec = CrossingSpec { invariant_axis: j, f_axis: fa, g_axis: ga, f, g };
            Case { grid: uniform, params, spec: GenSpec::Crossing(spec) }
        }
    }
}

pub fn corpus(seed: u64, count: usize, max_dim: usize) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_case(&mut rng, max_dim)).collect()
}

/// A corpus guaranteed to contain every generator family.
pub fn mixed_corpus(seed: u64, count: usize, max_dim: usize) -> Vec<Case> {
    let mut cases = corpus(seed, count, max_dim);
    let has = |cases: &[Case], f: fn(&GenSpec) -> bool| cases.iter().any(|c| f(&c.spec));
    assert!(has(&cases, |s| matches!(s, GenSpec::Constant(_))));
    assert!(has(&cases, |s| matches!(s, GenSpec::Laminate(l) if l.normal == NormalChoice::Diagonal)));
    assert!(has(&cases, |s| matches!(s, GenSpec::Crossing(_))));
    cases.sort_by_key(|c| c.grid.len());
    cases
}
