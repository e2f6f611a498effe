//! Basic symplectic normal forms, their ⋄-sums and splitting numbers.
//!
//! Unit-circle points are written by their angle over π, a value in `[0, 2)`:
//! `0` is the eigenvalue `1`, `1` is `-1`, and `t` is `e^{iπt}`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{
    certified_sign, int, phi, rat, ArithError, CertifiedReal, DecimalReal, Enclosure,
    PrecisionBudget, RealExpr, Scaled,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NormalFormError {
    #[error("cannot certify spectrum membership: {0}")]
    UnresolvedSpectrum(String),
    #[error("invalid block: {0}")]
    Invalid(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

type Result<T> = std::result::Result<T, NormalFormError>;

/// An angle θ ∈ (0,π)∪(π,2π), stored as θ/π.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Angle(CertifiedReal);

impl Angle {
    pub fn new(over_pi: CertifiedReal, budget: &PrecisionBudget) -> Result<Self> {
        let bad = || NormalFormError::Invalid(format!("θ/π = {over_pi} is not in (0,1)∪(1,2)"));
        let expr = RealExpr::from(&over_pi);
        let checks = [
            (expr.clone(), Ordering::Greater),
            (expr.add_rational(&int(-1)), Ordering::Equal),
            (expr.neg().add_rational(&int(2)), Ordering::Greater),
        ];
        for (e, want) in checks {
            let s = certified_sign(&e, budget).map_err(|_| {
                NormalFormError::UnresolvedSpectrum(format!("range of θ/π = {over_pi}"))
            })?;
            match want {
                Ordering::Equal if s == Ordering::Equal => return Err(bad()),
                Ordering::Greater if s != Ordering::Greater => return Err(bad()),
                _ => {}
            }
        }
        Ok(Angle(over_pi))
    }

    /// Convenience constructor for rational θ/π = p/q.
    pub fn rational(p: i64, q: i64) -> Result<Self> {
        Angle::new(CertifiedReal::ratio(p, q), &PrecisionBudget::default())
    }

    pub fn over_pi(&self) -> &CertifiedReal {
        &self.0
    }

    pub fn expr(&self) -> RealExpr {
        RealExpr::from(&self.0)
    }

    /// The conjugate angle 2 - θ/π.
    pub fn conjugate_expr(&self) -> RealExpr {
        self.expr().neg().add_rational(&int(2))
    }

    pub fn is_rational(&self) -> bool {
        self.0.is_rational()
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}π", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BClass {
    Positive,
    Zero,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum N2Kind {
    Trivial,
    Nontrivial,
}

/// One of the basic normal forms N1(λ,b), D(λ), R(θ), N2(e^{iθ},B).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasicBlock {
    /// `eigenvalue` is `+1` or `-1`.
    N1 {
        eigenvalue: i8,
        b: BClass,
    },
    D {
        lambda: CertifiedReal,
    },
    R {
        theta: Angle,
    },
    N2 {
        theta: Angle,
        kind: N2Kind,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplittingPair {
    pub plus: u32,
    pub minus: u32,
}

impl SplittingPair {
    pub const ZERO: SplittingPair = SplittingPair { plus: 0, minus: 0 };

    pub fn new(plus: u32, minus: u32) -> Self {
        SplittingPair { plus, minus }
    }
}

impl std::ops::Add for SplittingPair {
    type Output = SplittingPair;
    fn add(self, o: SplittingPair) -> SplittingPair {
        SplittingPair::new(self.plus + o.plus, self.minus + o.minus)
    }
}

/// A unit-circle eigenvalue of a block with its splitting numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralPoint {
    /// Angle over π in `[0, 2)`.
    pub angle: RealExpr,
    pub splitting: SplittingPair,
}

impl SpectralPoint {
    fn new(angle: RealExpr, plus: u32, minus: u32) -> Self {
        SpectralPoint {
            angle,
            splitting: SplittingPair::new(plus, minus),
        }
    }

    /// True for the point ω = 1 (angle 0).
    pub fn is_one(&self) -> bool {
        self.angle.exact().is_some_and(|q| q.is_zero())
    }
}

impl BasicBlock {
    pub fn n1(eigenvalue: i8, b: BClass) -> Result<Self> {
        if eigenvalue != 1 && eigenvalue != -1 {
            return Err(NormalFormError::Invalid(format!(
                "N1 eigenvalue must be ±1, got {eigenvalue}"
            )));
        }
        Ok(BasicBlock::N1 { eigenvalue, b })
    }

    pub fn d(lambda: CertifiedReal, budget: &PrecisionBudget) -> Result<Self> {
        let e = RealExpr::from(&lambda);
        for shift in [0, 1, -1] {
            let s = certified_sign(&e.add_rational(&int(shift)), budget).map_err(|_| {
                NormalFormError::UnresolvedSpectrum(format!(
                    "cannot separate λ = {lambda} from 0, ±1"
                ))
            })?;
            if s == Ordering::Equal {
                return Err(NormalFormError::Invalid(format!(
                    "D(λ) needs λ ∉ {{0, ±1}}, got {lambda}"
                )));
            }
        }
        Ok(BasicBlock::D { lambda })
    }

    pub fn d_rational(p: i64, q: i64) -> Result<Self> {
        BasicBlock::d(CertifiedReal::ratio(p, q), &PrecisionBudget::default())
    }

    pub fn r(theta: Angle) -> Self {
        BasicBlock::R { theta }
    }

    pub fn r_rational(p: i64, q: i64) -> Result<Self> {
        Ok(BasicBlock::R {
            theta: Angle::rational(p, q)?,
        })
    }

    pub fn n2(theta: Angle, kind: N2Kind) -> Self {
        BasicBlock::N2 { theta, kind }
    }

    pub fn dimension(&self) -> usize {
        match self {
            BasicBlock::N2 { .. } => 4,
            _ => 2,
        }
    }

    /// The unit-circle spectrum together with the splitting numbers at each
    /// point. This is the single table every index formula reads.
    ///
    /// Conjugate points follow `S^±(ω̄) = S^∓(ω)`.
    pub fn unit_spectrum(&self) -> Vec<SpectralPoint> {
        match self {
            BasicBlock::N1 { eigenvalue: 1, b } => {
                let s = u32::from(*b != BClass::Negative);
                vec![SpectralPoint::new(RealExpr::zero(), s, s)]
            }
            BasicBlock::N1 { b, .. } => {
                let s = u32::from(*b != BClass::Positive);
                vec![SpectralPoint::new(RealExpr::constant(int(1)), s, s)]
            }
            BasicBlock::D { .. } => Vec::new(),
            BasicBlock::R { theta } => vec![
                SpectralPoint::new(theta.expr(), 0, 1),
                SpectralPoint::new(theta.conjugate_expr(), 1, 0),
            ],
            BasicBlock::N2 { theta, kind } => {
                let s = u32::from(*kind == N2Kind::Nontrivial);
                vec![
                    SpectralPoint::new(theta.expr(), s, s),
                    SpectralPoint::new(theta.conjugate_expr(), s, s),
                ]
            }
        }
    }

    /// Total algebraic multiplicity of unit-circle eigenvalues.
    pub fn elliptic_height(&self) -> u32 {
        match self {
            BasicBlock::D { .. } => 0,
            BasicBlock::N2 { .. } => 4,
            _ => 2,
        }
    }

    /// Complex dimension of `ker(block - ωI)` at a unit-circle point of
    /// the block, an upper bound for both splitting numbers there.
    pub fn kernel_dim_at_spectrum(&self) -> u32 {
        match self {
            BasicBlock::N1 {
                b: BClass::Zero, ..
            } => 2,
            BasicBlock::D { .. } => 0,
            _ => 1,
        }
    }

    pub fn angle(&self) -> Option<&Angle> {
        match self {
            BasicBlock::R { theta } | BasicBlock::N2 { theta, .. } => Some(theta),
            _ => None,
        }
    }

    pub fn to_spec(&self) -> BlockSpec {
        match self {
            BasicBlock::N1 { eigenvalue, b } => BlockSpec::N1 {
                eigenvalue: *eigenvalue,
                b: *b,
            },
            BasicBlock::D { lambda } => BlockSpec::D {
                lambda: lambda.to_string(),
                irrational: lambda.is_irrational().then_some(true),
            },
            BasicBlock::R { theta } => BlockSpec::R {
                theta_over_pi: theta.over_pi().to_string(),
                irrational: theta.over_pi().is_irrational().then_some(true),
            },
            BasicBlock::N2 { theta, kind } => BlockSpec::N2 {
                theta_over_pi: theta.over_pi().to_string(),
                kind: *kind,
                irrational: theta.over_pi().is_irrational().then_some(true),
            },
        }
    }

    pub fn from_spec(spec: &BlockSpec, budget: &PrecisionBudget) -> Result<Self> {
        let num =
            |s: &str, irr: &Option<bool>| CertifiedReal::parse(s, irr.unwrap_or(false), budget);
        match spec {
            BlockSpec::N1 { eigenvalue, b } => BasicBlock::n1(*eigenvalue, *b),
            BlockSpec::D { lambda, irrational } => BasicBlock::d(num(lambda, irrational)?, budget),
            BlockSpec::R {
                theta_over_pi,
                irrational,
            } => Ok(BasicBlock::R {
                theta: Angle::new(num(theta_over_pi, irrational)?, budget)?,
            }),
            BlockSpec::N2 {
                theta_over_pi,
                kind,
                irrational,
            } => Ok(BasicBlock::N2 {
                theta: Angle::new(num(theta_over_pi, irrational)?, budget)?,
                kind: *kind,
            }),
        }
    }
}

impl fmt::Display for BasicBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicBlock::N1 { eigenvalue, b } => write!(f, "N1({eigenvalue}, {b:?})"),
            BasicBlock::D { lambda } => write!(f, "D({lambda})"),
            BasicBlock::R { theta } => write!(f, "R({theta})"),
            BasicBlock::N2 { theta, kind } => write!(f, "N2({theta}, {kind:?})"),
        }
    }
}

/// Wire form of a block inside system files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum BlockSpec {
    N1 {
        eigenvalue: i8,
        b: BClass,
    },
    D {
        lambda: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        irrational: Option<bool>,
    },
    R {
        theta_over_pi: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        irrational: Option<bool>,
    },
    N2 {
        theta_over_pi: String,
        kind: N2Kind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        irrational: Option<bool>,
    },
}

/// Whether two unit-circle angles (over π) coincide.
fn same_point(a: &RealExpr, b: &RealExpr, budget: &PrecisionBudget) -> Result<bool> {
    let diff = a.add(&b.neg());
    if let Some(q) = diff.exact() {
        return Ok(q.is_zero());
    }
    match certified_sign(&diff, budget) {
        Ok(Ordering::Equal) => Ok(true),
        Ok(_) => Ok(false),
        Err(_) => Err(NormalFormError::UnresolvedSpectrum(format!(
            "cannot decide whether e^(iπ·{a}) equals e^(iπ·{b})"
        ))),
    }
}

/// `S^±_block(ω)`, with ω given by its angle over π in `[0, 2)`.
pub fn splitting_at(
    block: &BasicBlock,
    omega: &CertifiedReal,
    budget: &PrecisionBudget,
) -> Result<SplittingPair> {
    let w = RealExpr::from(omega);
    let mut out = SplittingPair::ZERO;
    for p in block.unit_spectrum() {
        if same_point(&p.angle, &w, budget)? {
            out = out + p.splitting;
        }
    }
    Ok(out)
}

/// An ordered ⋄-sum of basic normal forms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockList(pub Vec<BasicBlock>);

impl BlockList {
    pub fn new(blocks: Vec<BasicBlock>) -> Self {
        BlockList(blocks)
    }

    pub fn blocks(&self) -> &[BasicBlock] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.iter().map(BasicBlock::dimension).sum()
    }

    /// All unit-circle points of all blocks, one entry per block and point.
    pub fn unit_spectrum(&self) -> Vec<SpectralPoint> {
        self.0.iter().flat_map(BasicBlock::unit_spectrum).collect()
    }

    /// `S^+_M(1)`.
    pub fn s_plus_at_one(&self) -> u32 {
        self.unit_spectrum()
            .iter()
            .filter(|p| p.is_one())
            .map(|p| p.splitting.plus)
            .sum()
    }

    /// Points e^{iθ}, 0 < θ < 2π, with `S^-` > 0, one entry per block.
    pub fn minus_points(&self) -> Vec<(RealExpr, u32)> {
        self.unit_spectrum()
            .into_iter()
            .filter(|p| !p.is_one() && p.splitting.minus > 0)
            .map(|p| (p.angle, p.splitting.minus))
            .collect()
    }

    pub fn is_bumpy_spectrum(&self) -> bool {
        self.0.iter().all(|b| match b {
            BasicBlock::N1 { .. } => false,
            BasicBlock::D { .. } => true,
            BasicBlock::R { theta } | BasicBlock::N2 { theta, .. } => {
                theta.over_pi().is_irrational()
            }
        })
    }
}

impl fmt::Display for BlockList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        write!(f, "{}", parts.join(" ⋄ "))
    }
}

pub fn splitting_sum(
    blocks: &BlockList,
    omega: &CertifiedReal,
    budget: &PrecisionBudget,
) -> Result<SplittingPair> {
    blocks
        .blocks()
        .iter()
        .try_fold(SplittingPair::ZERO, |acc, b| {
            Ok(acc + splitting_at(b, omega, budget)?)
        })
}

/// `C(M) = Σ_{0<θ<2π} S^-_M(e^{iθ})`.
pub fn big_c(blocks: &BlockList) -> u32 {
    blocks.minus_points().iter().map(|(_, s)| s).sum()
}

/// `dim ker(block^m - I)`.
pub fn nullity_contribution(block: &BasicBlock, m: u64, budget: &PrecisionBudget) -> Result<u32> {
    assert!(m >= 1, "iteration count starts at 1");
    Ok(match block {
        BasicBlock::N1 { eigenvalue: 1, .. } => 1,
        BasicBlock::N1 { .. } => u32::from(m.is_multiple_of(2)),
        BasicBlock::D { .. } => 0,
        BasicBlock::R { theta } | BasicBlock::N2 { theta, .. } => {
            // θ/2π · m ∈ Z ?
            let x = Scaled::new(theta.over_pi(), rat(m as i64, 2));
            if phi(&x, budget)? == 0 {
                2
            } else {
                0
            }
        }
    })
}

pub fn elliptic_height(blocks: &BlockList) -> u32 {
    blocks
        .blocks()
        .iter()
        .map(BasicBlock::elliptic_height)
        .sum()
}

/// Classifies a 2×2 symplectic matrix `[[a, b], [c, d]]` into the basic
/// normal form of its Ω⁰ class.
pub fn classify_2x2(m: [&CertifiedReal; 4], budget: &PrecisionBudget) -> Result<BasicBlock> {
    let [a, b, c, d] = m;
    if let (Some(a), Some(b), Some(c), Some(d)) = (
        a.as_rational(),
        b.as_rational(),
        c.as_rational(),
        d.as_rational(),
    ) {
        return classify_rational(a, b, c, d);
    }
    classify_decimal(m, budget)
}

fn classify_rational(
    a: &BigRational,
    b: &BigRational,
    c: &BigRational,
    d: &BigRational,
) -> Result<BasicBlock> {
    let det = a * d - b * c;
    if !det.is_one() {
        return Err(NormalFormError::Invalid(format!(
            "determinant is {det}, not 1"
        )));
    }
    let tr = a + d;
    let two = int(2);
    let budget = PrecisionBudget::default();
    if tr.abs() > two {
        // λ with |λ| > 1 solving λ² - tr λ + 1 = 0
        let disc = &tr * &tr - int(4);
        let sign = if tr.is_positive() { int(1) } else { int(-1) };
        let lambda = match exact_sqrt(&disc) {
            Some(r) => CertifiedReal::Rational((&tr + sign * r) / &two),
            None => {
                let digits = 60;
                let root = sqrt_decimal(&disc, digits);
                let val = (&tr + sign * root) / &two;
                CertifiedReal::Decimal(decimal_from_rational(&val, digits - 2, true))
            }
        };
        return BasicBlock::d(lambda, &budget);
    }
    if tr.abs() == two {
        let lambda = if tr.is_positive() { 1 } else { -1 };
        let class = match (b - c).cmp(&BigRational::zero()) {
            Ordering::Greater => BClass::Positive,
            Ordering::Less => BClass::Negative,
            Ordering::Equal => BClass::Zero,
        };
        return BasicBlock::n1(lambda, class);
    }
    // elliptic: cos θ = tr/2, orientation from the sign of c - b
    let half = &tr / &two;
    let upper = (c - b).is_positive();
    let base = match half.to_f64() {
        _ if half.is_zero() => Some(rat(1, 2)),
        _ if half == rat(1, 2) => Some(rat(1, 3)),
        _ if half == rat(-1, 2) => Some(rat(2, 3)),
        _ => None,
    };
    let over_pi = match base {
        Some(t) => CertifiedReal::Rational(if upper { t } else { int(2) - t }),
        None => {
            // cos θ rational outside {0, ±1/2, ±1}: θ/π is irrational
            let t = half.to_f64().unwrap_or(0.0).acos() / std::f64::consts::PI;
            let t = if upper { t } else { 2.0 - t };
            CertifiedReal::Decimal(DecimalReal::new(&format!("{t:.15}"), Some(11), true)?)
        }
    };
    Ok(BasicBlock::R {
        theta: Angle::new(over_pi, &budget)?,
    })
}

fn classify_decimal(m: [&CertifiedReal; 4], budget: &PrecisionBudget) -> Result<BasicBlock> {
    let [a, b, c, d] = m.map(RealExpr::from);
    let unresolved = |what: &str| NormalFormError::UnresolvedSpectrum(what.to_string());
    // det = ad - bc; only affine expressions are tracked, so use intervals
    let digits = m.iter().map(|x| x.digits_available()).max().unwrap_or(0);
    let iv = |e: &RealExpr| e.enclose(digits).expect("affine enclosure");
    let (ia, ib, ic, id) = (iv(&a), iv(&b), iv(&c), iv(&d));
    let prod = |x: &crate::exact::Interval, y: &crate::exact::Interval| {
        let p = [&x.lo * &y.lo, &x.lo * &y.hi, &x.hi * &y.lo, &x.hi * &y.hi];
        crate::exact::Interval::new(
            p.iter().min().unwrap().clone(),
            p.iter().max().unwrap().clone(),
        )
    };
    let det = prod(&ia, &id).add(&prod(&ib, &ic).scale(&int(-1)));
    if !(det.lo <= int(1) && int(1) <= det.hi) {
        return Err(NormalFormError::Invalid("determinant is not 1".into()));
    }
    let tr = a.add(&d);
    let above =
        certified_sign(&tr.add_rational(&int(-2)), budget).map_err(|_| unresolved("|tr| - 2"))?;
    let below =
        certified_sign(&tr.add_rational(&int(2)), budget).map_err(|_| unresolved("|tr| - 2"))?;
    let trv = iv(&tr);
    if above == Ordering::Greater || below == Ordering::Less {
        let t = (&trv.lo + &trv.hi) / int(2);
        let disc = &t * &t - int(4);
        let sign = if t.is_positive() { int(1) } else { int(-1) };
        let val = (&t + sign * sqrt_decimal(&disc, 40)) / int(2);
        let width = (&trv.hi - &trv.lo).to_f64().unwrap_or(1.0);
        let k =
            correct_digits_for(width * 4.0 / disc.to_f64().unwrap_or(1e-300).sqrt().max(1e-300));
        return BasicBlock::d(
            CertifiedReal::Decimal(decimal_from_rational(&val, k, true)),
            budget,
        );
    }
    if above == Ordering::Less && below == Ordering::Greater {
        let orient =
            certified_sign(&c.add(&b.neg()), budget).map_err(|_| unresolved("orientation"))?;
        let half = ((&trv.lo + &trv.hi) / int(4)).to_f64().unwrap_or(0.0);
        let mut t = half.acos() / std::f64::consts::PI;
        if orient == Ordering::Less {
            t = 2.0 - t;
        }
        let width = (&trv.hi - &trv.lo).to_f64().unwrap_or(1.0);
        let slope = 1.0 / (std::f64::consts::PI * (1.0 - half * half).sqrt().max(1e-12));
        let k = correct_digits_for(width * slope + 1e-13);
        let over_pi =
            CertifiedReal::Decimal(DecimalReal::new(&format!("{t:.17}"), Some(k), false)?);
        return Ok(BasicBlock::R {
            theta: Angle::new(over_pi, budget)?,
        });
    }
    Err(unresolved("trace equals ±2 up to the given precision"))
}

fn correct_digits_for(err: f64) -> u32 {
    let k = (-(err.max(1e-300)).log10()).floor() - 1.0;
    k.clamp(1.0, 15.0) as u32
}

fn exact_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let (n, d) = (q.numer().sqrt(), q.denom().sqrt());
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| BigRational::new(n, d))
}

/// `floor(sqrt(q) · 10^digits) / 10^digits`.
fn sqrt_decimal(q: &BigRational, digits: u32) -> BigRational {
    let scale = crate::exact::pow10(2 * digits);
    let s = crate::exact::floor_q(&(q * BigRational::from_integer(scale)));
    BigRational::new(s.sqrt(), crate::exact::pow10(digits))
}

fn decimal_from_rational(x: &BigRational, digits: u32, irrational: bool) -> DecimalReal {
    let scaled =
        crate::exact::floor_q(&(x * BigRational::from_integer(crate::exact::pow10(digits + 2))));
    let neg = scaled < BigInt::zero();
    let mut s = scaled.abs().to_string();
    let fd = (digits + 2) as usize;
    if s.len() <= fd {
        s = format!("{}{}", "0".repeat(fd + 1 - s.len()), s);
    }
    s.insert(s.len() - fd, '.');
    if neg {
        s.insert(0, '-');
    }
    DecimalReal::new(&s, Some(digits), irrational).expect("well-formed decimal")
}
