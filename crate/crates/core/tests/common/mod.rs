//! Shared corpus generators and independent oracles for the integration
//! tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geoindex_core::exact::{rat, CertifiedReal, PrecisionBudget};
use geoindex_core::iteration::IndexGerm;
use geoindex_core::normal_forms::{Angle, BClass, BasicBlock, BlockList, N2Kind};

pub const DIGITS: u32 = 60;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// θ/π as a genuinely irrational number: `frac(√n) (+1)`, truncated to
/// 60 digits.
#[derive(Debug, Clone)]
pub struct IrrationalAngle {
    pub text: String,
    pub approx: BigRational,
}

impl IrrationalAngle {
    pub fn certified(&self) -> CertifiedReal {
        CertifiedReal::parse(&self.text, true, &PrecisionBudget::default()).unwrap()
    }

    pub fn angle(&self) -> Angle {
        Angle::new(self.certified(), &PrecisionBudget::default()).unwrap()
    }
}

pub fn sqrt_frac(n: u64, upper: bool) -> IrrationalAngle {
    let scale = BigInt::from(10u32).pow(DIGITS);
    let root = (BigInt::from(n) * &scale * &scale).sqrt();
    let int_part = BigInt::from(n).sqrt();
    let mut frac = root - int_part * &scale;
    if upper {
        frac += &scale;
    }
    let approx = BigRational::new(frac.clone(), scale.clone());
    let s = frac.to_string();
    let text = if upper {
        format!("1.{}~{DIGITS}", &s[1..])
    } else {
        format!("0.{:0>width$}~{DIGITS}", s, width = DIGITS as usize)
    };
    IrrationalAngle { text, approx }
}

fn is_square(n: u64) -> bool {
    let r = n.sqrt();
    r * r == n
}

/// A random irrational θ/π bounded away from 0, 1 and 2.
pub fn random_irrational(r: &mut ChaCha8Rng) -> IrrationalAngle {
    loop {
        let n = r.gen_range(2..1_000_000u64);
        if is_square(n) {
            continue;
        }
        let a = sqrt_frac(n, r.gen_bool(0.5));
        let f = a.approx.to_f64().unwrap().fract();
        if (0.02..0.98).contains(&f) {
            return a;
        }
    }
}

/// Splitting data of one block, written out independently of the library:
/// `(θ/π, S⁺, S⁻)` points on the unit circle.
#[derive(Debug, Clone)]
pub enum Spec {
    N1 { eigenvalue: i8, b: i8 },
    D,
    R(BigRational),
    N2(BigRational, bool),
}

impl Spec {
    pub fn points(&self) -> Vec<(BigRational, u32, u32)> {
        let two = rat(2, 1);
        match self {
            Spec::N1 { eigenvalue: 1, b } => vec![(rat(0, 1), (*b >= 0) as u32, (*b >= 0) as u32)],
            Spec::N1 { b, .. } => vec![(rat(1, 1), (*b <= 0) as u32, (*b <= 0) as u32)],
            Spec::D => vec![],
            Spec::R(t) => vec![(t.clone(), 0, 1), (&two - t, 1, 0)],
            Spec::N2(t, nontrivial) => {
                let s = *nontrivial as u32;
                vec![(t.clone(), s, s), (&two - t, s, s)]
            }
        }
    }

    pub fn dim(&self) -> usize {
        if matches!(self, Spec::N2(..)) {
            4
        } else {
            2
        }
    }
}

/// One generated germ with its library form and its independent data.
#[derive(Debug, Clone)]
pub struct Generated {
    pub germ: IndexGerm,
    pub i1: i64,
    pub specs: Vec<Spec>,
    /// θ/π of the irrational angles.
    pub irrational: Vec<BigRational>,
}

impl Generated {
    pub fn points(&self) -> Vec<(BigRational, u32, u32)> {
        self.specs.iter().flat_map(Spec::points).collect()
    }

    pub fn s_plus_one(&self) -> i64 {
        self.points()
            .iter()
            .filter(|p| p.0.is_zero())
            .map(|p| p.1 as i64)
            .sum()
    }

    /// Sum of S⁻ over the circle minus 1.
    pub fn c(&self) -> i64 {
        self.points()
            .iter()
            .filter(|p| !p.0.is_zero())
            .map(|p| p.2 as i64)
            .sum()
    }

    /// Rational approximation of the mean index (error below 10⁻⁵⁹).
    pub fn mean_approx(&self) -> BigRational {
        let mut m = BigRational::from_integer((self.i1 + self.s_plus_one() - self.c()).into());
        for (t, _, sm) in self.points() {
            if !t.is_zero() {
                m += t * BigRational::from_integer(sm.into());
            }
        }
        m
    }

    /// `i(c^m)` as the Bott sum of `i_ω` over the m-th roots of unity.
    pub fn bott_index(&self, m: u64) -> i64 {
        let pts = self.points();
        let sp1 = self.s_plus_one();
        let mut total = self.i1;
        for k in 1..m {
            let phi = rat(2 * k as i64, m as i64);
            let mut v = self.i1 + sp1;
            for (t, sp, sm) in &pts {
                if t.is_zero() {
                    continue;
                }
                if *t < phi {
                    v += *sp as i64 - *sm as i64;
                } else if *t == phi {
                    v -= *sm as i64;
                }
            }
            total += v;
        }
        total
    }

    /// `ν(c^m)` for D, R and N1 blocks with b ≠ 0 as a sum over roots of unity.
    pub fn bott_nullity(&self, m: u64) -> Option<u32> {
        let mut total = 0;
        for s in &self.specs {
            match s {
                Spec::D => {}
                Spec::N1 { b: 0, .. } | Spec::N2(..) => return None,
                Spec::N1 { eigenvalue, .. } => {
                    if *eigenvalue == 1 || m.is_multiple_of(2) {
                        total += 1;
                    }
                }
                Spec::R(t) => {
                    // e^{±iθ} is an m-th root of unity when mθ/2π ∈ ℤ
                    if (t * rat(m as i64, 2)).is_integer() {
                        total += 2;
                    }
                }
            }
        }
        Some(total)
    }
}

fn bclass(b: i8) -> BClass {
    match b.signum() {
        1 => BClass::Positive,
        0 => BClass::Zero,
        _ => BClass::Negative,
    }
}

pub fn block_of(spec: &Spec, irr: Option<&IrrationalAngle>) -> BasicBlock {
    let angle = |t: &BigRational| match irr {
        Some(a) => a.angle(),
        None => Angle::rational(t.numer().to_i64().unwrap(), t.denom().to_i64().unwrap()).unwrap(),
    };
    match spec {
        Spec::N1 { eigenvalue, b } => BasicBlock::n1(*eigenvalue, bclass(*b)).unwrap(),
        Spec::D => BasicBlock::d_rational(2, 1).unwrap(),
        Spec::R(t) => BasicBlock::r(angle(t)),
        Spec::N2(t, nontrivial) => BasicBlock::n2(
            angle(t),
            if *nontrivial {
                N2Kind::Nontrivial
            } else {
                N2Kind::Trivial
            },
        ),
    }
}

/// Builds a germ from `(spec, irrational angle)` pairs.
pub fn germ(name: &str, i1: i64, parts: Vec<(Spec, Option<IrrationalAngle>)>) -> Generated {
    let blocks = parts.iter().map(|(s, a)| block_of(s, a.as_ref())).collect();
    let germ = IndexGerm::new(name, i1, BlockList::new(blocks), PrecisionBudget::default());
    Generated {
        germ,
        i1,
        irrational: parts
            .iter()
            .filter_map(|(_, a)| a.as_ref().map(|a| a.approx.clone()))
            .collect(),
        specs: parts.into_iter().map(|(s, _)| s).collect(),
    }
}

pub fn random_rational_angle(r: &mut ChaCha8Rng, dens: &[i64]) -> BigRational {
    loop {
        let q = dens[r.gen_range(0..dens.len())];
        let p = r.gen_range(1..2 * q);
        if p != q {
            return rat(p, q);
        }
    }
}

fn random_two_block(r: &mut ChaCha8Rng, irrational_ok: bool) -> (Spec, Option<IrrationalAngle>) {
    match r.gen_range(0..5) {
        0 => (
            Spec::N1 {
                eigenvalue: if r.gen_bool(0.5) { 1 } else { -1 },
                b: r.gen_range(-1..=1),
            },
            None,
        ),
        1 => (Spec::D, None),
        _ if irrational_ok && r.gen_bool(0.5) => {
            let a = random_irrational(r);
            (Spec::R(a.approx.clone()), Some(a))
        }
        _ => (
            Spec::R(random_rational_angle(r, &[2, 3, 4, 5, 6, 7, 8, 12])),
            None,
        ),
    }
}

/// A germ of the iteration corpus: dimension-4 blocks, mixed angles,
/// `i₁ ∈ [−5, 10]`.
pub fn random_germ(r: &mut ChaCha8Rng, name: &str) -> Generated {
    let i1 = r.gen_range(-5..=10);
    let parts = if r.gen_range(0..5) == 0 {
        let (t, a) = if r.gen_bool(0.5) {
            let a = random_irrational(r);
            (a.approx.clone(), Some(a))
        } else {
            (random_rational_angle(r, &[2, 3, 4, 6, 8]), None)
        };
        vec![(Spec::N2(t, r.gen_bool(0.5)), a)]
    } else {
        vec![random_two_block(r, true), random_two_block(r, true)]
    };
    germ(name, i1, parts)
}

/// Whether `dist(mθ/2π, ℤ) > δ` for all `1 ≤ m ≤ m_max` and all irrational
/// angles of the germ.
pub fn nonresonant(g: &Generated, delta: &BigRational, m_max: u64) -> bool {
    g.irrational.iter().all(|t| {
        (1..=m_max).all(|m| {
            let x = t * rat(m as i64, 2);
            let f = &x - BigRational::from_integer(x.floor().to_integer());
            let d = if f > rat(1, 2) { rat(1, 1) - f } else { f };
            &d.abs() > delta
        })
    })
}

pub fn hyperbolic(name: &str, i1: i64) -> Generated {
    germ(name, i1, vec![(Spec::D, None), (Spec::D, None)])
}

pub fn elliptic(name: &str, i1: i64, a: IrrationalAngle) -> Generated {
    germ(
        name,
        i1,
        vec![(Spec::R(a.approx.clone()), Some(a)), (Spec::D, None)],
    )
}

/// `E(x)`: the least integer not below x, for a rational approximation of an
/// irrational or an exact rational.
fn ceil_checked(x: &BigRational, exact: bool) -> i64 {
    let c = x.ceil().to_integer();
    if !exact {
        let gap = BigRational::from_integer(c.clone()) - x;
        let tol = BigRational::new(1.into(), BigInt::from(10u32).pow(40));
        assert!(
            gap > tol && gap < BigRational::from_integer(1.into()) - tol,
            "undecided E({x})"
        );
    }
    c.to_i64().unwrap()
}

impl Generated {
    fn is_irrational(&self, t: &BigRational) -> bool {
        self.irrational
            .iter()
            .any(|a| a == t || &(rat(2, 1) - a) == t)
    }

    /// Closed iteration formula evaluated independently on the spectral data.
    pub fn closed_index(&self, m: u64) -> i64 {
        let (sp, c) = (self.s_plus_one(), self.c());
        let mut v = m as i64 * (self.i1 + sp - c) - (sp + c);
        for (t, _, sm) in self.points() {
            if !t.is_zero() && sm > 0 {
                let x = &t * rat(m as i64, 2);
                v += 2 * sm as i64 * ceil_checked(&x, !self.is_irrational(&t));
            }
        }
        v
    }

    /// `ν(c^m)` summed over blocks: dimension of ker(M^m − I).
    pub fn nullity(&self, m: u64) -> u32 {
        let mut total = 0;
        for s in &self.specs {
            total += match s {
                Spec::D => 0,
                Spec::N1 { eigenvalue, b } => {
                    let dim = if *b == 0 { 2 } else { 1 };
                    if *eigenvalue == 1 || m.is_multiple_of(2) {
                        dim
                    } else {
                        0
                    }
                }
                Spec::R(t) | Spec::N2(t, _) => {
                    if !self.is_irrational(t) && (t * rat(m as i64, 2)).is_integer() {
                        2
                    } else {
                        0
                    }
                }
            };
        }
        total
    }

    /// Angles θ/π of every eigenvalue on the unit circle except 1.
    pub fn circle_angles(&self) -> Vec<(BigRational, u32, bool)> {
        self.points()
            .into_iter()
            .filter(|p| !p.0.is_zero())
            .map(|(t, _, sm)| {
                let irr = self.is_irrational(&t);
                (t, sm, irr)
            })
            .collect()
    }
}

/// Distance from x to the nearest integer.
pub fn dist_to_z(x: &BigRational) -> BigRational {
    let f = x - BigRational::from_integer(x.floor().to_integer());
    let g = rat(1, 1) - &f;
    if f < g {
        f
    } else {
        g
    }
}

/// A germ for the jump corpus with mean-index sign `sign`.
pub fn jump_germ(r: &mut ChaCha8Rng, name: &str, sign: i64, irrational: bool) -> Generated {
    let base = r.gen_range(1..=3i64);
    if irrational {
        let a = random_irrational(r);
        return elliptic(name, sign * base, a);
    }
    match r.gen_range(0..5) {
        0 => hyperbolic(name, sign * base),
        1 => {
            let t = random_rational_angle(r, &[2, 3, 4, 6]);
            germ(name, sign * base, vec![(Spec::R(t), None), (Spec::D, None)])
        }
        2 => germ(
            name,
            sign * base,
            vec![
                (
                    Spec::N1 {
                        eigenvalue: if r.gen_bool(0.5) { 1 } else { -1 },
                        b: r.gen_range(-1..=1),
                    },
                    None,
                ),
                (Spec::D, None),
            ],
        ),
        3 => {
            let t = random_rational_angle(r, &[2, 3, 4, 6]);
            germ(
                name,
                sign * base,
                vec![(Spec::N2(t, r.gen_bool(0.5)), None)],
            )
        }
        _ => {
            let t = random_rational_angle(r, &[2, 3, 4, 6]);
            let u = random_rational_angle(r, &[2, 3, 4, 6]);
            germ(
                name,
                sign * base,
                vec![(Spec::R(t), None), (Spec::R(u), None)],
            )
        }
    }
}

/// Mean-index sign of a generated germ.
pub fn sign_of(g: &Generated) -> i64 {
    match g.germ.mean_index_sign().unwrap() {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
    }
}

/// A jump-corpus system: 2 to 4 germs, both mean-index signs, at most two
/// germs with one irrational angle each, nonresonant up to the horizon.
pub fn jump_system(r: &mut ChaCha8Rng, delta: &BigRational) -> Vec<Generated> {
    loop {
        let q = r.gen_range(2..=4usize);
        // two irrational directions only for q = 2 keeps N ≤ 10⁷ reachable at δ/5
        let irr = r.gen_range(0..=if q == 2 { 2 } else { 1 });
        let mut gs = Vec::new();
        for k in 0..q {
            let sign = match k {
                0 => 1,
                1 => -1,
                _ => {
                    if r.gen_bool(0.5) {
                        1
                    } else {
                        -1
                    }
                }
            };
            let g = loop {
                let g = jump_germ(r, &format!("g{k}"), sign, k >= q - irr);
                if sign_of(&g) == sign {
                    break g;
                }
            };
            gs.push(g);
        }
        let germs: Vec<IndexGerm> = gs.iter().map(|g| g.germ.clone()).collect();
        let horizon =
            geoindex_core::jump::build_problem(&germs, delta.clone(), Some(delta.clone()), 1)
                .unwrap()
                .mbar();
        if gs.iter().all(|g| nonresonant(g, delta, 2 * horizon)) {
            return gs;
        }
    }
}

/// `γ_c ∈ {±1/2, ±1}`: positive iff `i(c)` is even, of magnitude 1 iff
/// `i(c²) − i(c)` is even. Returned doubled, as an integer in {±1, ±2}.
pub fn gamma_doubled(i1: i64, i2: i64) -> i64 {
    let sign = if i1.rem_euclid(2) == 0 { 1 } else { -1 };
    let mag = if (i2 - i1).rem_euclid(2) == 0 { 2 } else { 1 };
    sign * mag
}

/// Rank of the local critical group of `c^m` in degree `i(c^m)` on a bumpy
/// manifold.
pub fn critical_rank(i1: i64, im: i64) -> i64 {
    ((im - i1).rem_euclid(2) == 0) as i64
}

/// Betti numbers of the free loop space of S³ relative to constant loops,
/// read off `t²(1 + t²)/(1 − t²)` by series multiplication.
pub fn betti_series(q_max: usize) -> Vec<i64> {
    let mut geometric = vec![0i64; q_max + 1];
    for q in (0..=q_max).step_by(2) {
        geometric[q] = 1;
    }
    let mut out = vec![0i64; q_max + 1];
    for (shift, coeff) in [(2usize, 1i64), (4, 1)] {
        for q in shift..=q_max {
            out[q] += coeff * geometric[q - shift];
        }
    }
    out
}

fn positive_irrational_germ(r: &mut ChaCha8Rng, name: &str, i1: i64, allow_two: bool) -> Generated {
    if allow_two && r.gen_bool(0.3) {
        let (a, b) = (random_irrational(r), random_irrational(r));
        return germ(
            name,
            i1,
            vec![
                (Spec::R(a.approx.clone()), Some(a)),
                (Spec::R(b.approx.clone()), Some(b)),
            ],
        );
    }
    elliptic(name, i1, random_irrational(r))
}

/// Admissible three-curve systems on bumpy S³ with the given initial
/// indices: hyperbolic or irrationally elliptic curves, one or two
/// irrational angles in total, nonresonant up to twice the horizon.
pub fn bumpy_system(r: &mut ChaCha8Rng, indices: [i64; 3]) -> Vec<Generated> {
    let delta = rat(1, 64);
    loop {
        let mut budget = 2usize;
        let mut gs = Vec::new();
        let elliptic_slot = r.gen_range(0..3);
        for (k, &i1) in indices.iter().enumerate() {
            let name = format!("c{}", k + 1);
            let g = if budget > 0 && (k == elliptic_slot || r.gen_bool(0.3)) {
                let g = positive_irrational_germ(r, &name, i1, budget == 2 && i1 >= 2);
                budget -= g.irrational.len();
                g
            } else {
                hyperbolic(&name, i1)
            };
            gs.push(g);
        }
        if gs
            .iter()
            .any(|g| sign_of(g) != 1 || !g.germ.is_bott_positive().unwrap() || !g.germ.is_bumpy())
        {
            continue;
        }
        let germs: Vec<IndexGerm> = gs.iter().map(|g| g.germ.clone()).collect();
        let horizon = geoindex_core::iteration::mbar(&germs).unwrap();
        if gs.iter().all(|g| nonresonant(g, &delta, 2 * horizon + 2)) {
            return gs;
        }
    }
}
