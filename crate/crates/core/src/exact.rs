//! Exact and certified real arithmetic.
//!
//! Every integer-valued quantity used by the index formulas (floor, the
//! ceiling `E`, the jump `φ`, fractional parts) is decided either exactly on
//! rationals or from a rational enclosure that provably determines the
//! answer. Decimal inputs are refined in steps of
//! [`PrecisionBudget::refine_step`] digits until the answer is certified or
//! the budget runs out, in which case [`ArithError::PrecisionInsufficient`]
//! is returned.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("precision insufficient: undecided after {digits} digits")]
    PrecisionInsufficient { digits: u32 },
    #[error("cannot parse number {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("invalid number: {0}")]
    Invalid(String),
}

pub type Result<T, E = ArithError> = std::result::Result<T, E>;

/// Digit budget for refining decimal enclosures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionBudget {
    pub max_digits: u32,
    pub refine_step: u32,
}

impl Default for PrecisionBudget {
    fn default() -> Self {
        PrecisionBudget {
            max_digits: 200,
            refine_step: 50,
        }
    }
}

impl PrecisionBudget {
    pub fn new(max_digits: u32, refine_step: u32) -> Result<Self> {
        if max_digits == 0 || refine_step == 0 {
            return Err(ArithError::Invalid(
                "precision budget must be positive".into(),
            ));
        }
        Ok(PrecisionBudget {
            max_digits,
            refine_step,
        })
    }

    /// Working precisions to try, coarsest first, for a value that carries
    /// `available` decimal digits.
    pub fn levels(&self, available: u32) -> Vec<u32> {
        let top = available.min(self.max_digits);
        let mut out = Vec::new();
        let mut d = self.refine_step;
        while d < top {
            out.push(d);
            d = d.saturating_add(self.refine_step);
        }
        out.push(top);
        out
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn pow10(k: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), k as usize)
}

pub fn floor_q(x: &BigRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil_q(x: &BigRational) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

/// `{x} = x - [x]` for an exact rational.
pub fn frac_q(x: &BigRational) -> BigRational {
    x - BigRational::from_integer(floor_q(x))
}

/// Renders a rational as `p` or `p/q`.
pub fn fmt_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p`, `p/q` or an exact decimal `d.ddd` into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = |reason: &str| ArithError::Parse {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad("bad numerator"))?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad("bad denominator"))?;
        if q.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (value, _) = parse_decimal_digits(t).map_err(|r| bad(&r))?;
    Ok(value)
}

fn parse_decimal_digits(t: &str) -> std::result::Result<(BigRational, u32), String> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err("empty number".into());
    }
    if !ip.chars().all(|c| c.is_ascii_digit()) || !fp.chars().all(|c| c.is_ascii_digit()) {
        return Err("unexpected character".into());
    }
    let digits = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp);
    let mut n = BigInt::from_str(&digits).map_err(|e| e.to_string())?;
    if neg {
        n = -n;
    }
    let frac_digits = fp.len() as u32;
    Ok((BigRational::new(n, pow10(frac_digits)), frac_digits))
}

/// Closed interval with rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn point(x: BigRational) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn new(a: BigRational, b: BigRational) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    pub fn scale(&self, f: &BigRational) -> Interval {
        Interval::new(&self.lo * f, &self.hi * f)
    }

    pub fn shift(&self, c: &BigRational) -> Interval {
        Interval {
            lo: &self.lo + c,
            hi: &self.hi + c,
        }
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn div(&self, o: &Interval) -> Option<Interval> {
        if o.contains_zero() {
            return None;
        }
        let c = [
            &self.lo / &o.lo,
            &self.lo / &o.hi,
            &self.hi / &o.lo,
            &self.hi / &o.hi,
        ];
        let lo = c.iter().min().cloned()?;
        let hi = c.iter().max().cloned()?;
        Some(Interval { lo, hi })
    }

    pub fn abs(&self) -> Interval {
        if self.lo.is_negative() && self.hi.is_negative() {
            Interval::new(-&self.hi, -&self.lo)
        } else if self.lo.is_negative() {
            Interval::new(BigRational::zero(), (-&self.lo).max(self.hi.clone()))
        } else {
            self.clone()
        }
    }

    /// Least integer `>= x` if every point of the interval agrees.
    /// `irrational` excludes integer points from the interval.
    pub fn ceil_unique(&self, irrational: bool) -> Option<BigInt> {
        let (cl, ch) = (ceil_q(&self.lo), ceil_q(&self.hi));
        if cl == ch {
            return Some(cl);
        }
        if irrational {
            let (fl, fh) = (floor_q(&self.lo), floor_q(&self.hi));
            if fl == fh {
                return Some(fl + 1);
            }
        }
        None
    }

    pub fn floor_unique(&self, irrational: bool) -> Option<BigInt> {
        let (fl, fh) = (floor_q(&self.lo), floor_q(&self.hi));
        if fl == fh {
            return Some(fl);
        }
        if irrational {
            let (cl, ch) = (ceil_q(&self.lo), ceil_q(&self.hi));
            if cl == ch {
                return Some(cl - 1);
            }
        }
        None
    }

    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
}

/// Anything that can be enclosed by rational intervals at increasing
/// working precision.
pub trait Enclosure {
    /// The exact value, when known symbolically.
    fn exact(&self) -> Option<BigRational>;
    /// True only when the value is known to be irrational.
    fn declared_irrational(&self) -> bool;
    /// Enclosure at `digits` working decimal digits, if usable there.
    fn enclose(&self, digits: u32) -> Option<Interval>;
    /// Number of digits the underlying inputs carry.
    fn digits_available(&self) -> u32;
}

/// A decimal approximation `center ± radius`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecimalReal {
    center: BigRational,
    radius: BigRational,
    frac_digits: u32,
    correct_digits: u32,
    irrational: bool,
}

impl DecimalReal {
    /// `digits` is a plain decimal string, `correct` the number of correct
    /// fractional digits (radius `10^-correct`).
    pub fn new(digits: &str, correct: Option<u32>, irrational: bool) -> Result<Self> {
        let (center, frac_digits) =
            parse_decimal_digits(digits.trim()).map_err(|reason| ArithError::Parse {
                input: digits.to_string(),
                reason,
            })?;
        let correct_digits = correct.unwrap_or(frac_digits);
        if correct_digits == 0 {
            return Err(ArithError::Invalid(format!(
                "decimal {digits:?} needs at least one correct digit"
            )));
        }
        let radius = BigRational::new(BigInt::one(), pow10(correct_digits));
        Ok(DecimalReal {
            center,
            radius,
            frac_digits,
            correct_digits,
            irrational,
        })
    }

    pub fn center(&self) -> &BigRational {
        &self.center
    }

    pub fn radius(&self) -> &BigRational {
        &self.radius
    }

    pub fn correct_digits(&self) -> u32 {
        self.correct_digits
    }

    pub fn frac_digits(&self) -> u32 {
        self.frac_digits
    }

    pub fn is_irrational(&self) -> bool {
        self.irrational
    }

    /// Enclosure using the first `digits` fractional digits of the center.
    pub fn interval(&self, digits: u32) -> Interval {
        if digits >= self.frac_digits {
            return Interval {
                lo: &self.center - &self.radius,
                hi: &self.center + &self.radius,
            };
        }
        let scale = pow10(digits);
        let truncated = BigRational::new(
            floor_q(&(&self.center * BigRational::from_integer(scale.clone()))),
            scale.clone(),
        );
        let ulp = BigRational::new(BigInt::one(), scale);
        Interval {
            lo: &truncated - &self.radius,
            hi: truncated + ulp + &self.radius,
        }
    }

    /// The same number shifted by an integer.
    pub fn shifted(&self, by: &BigInt) -> DecimalReal {
        DecimalReal {
            center: &self.center + BigRational::from_integer(by.clone()),
            ..self.clone()
        }
    }

    fn digit_string(&self) -> String {
        let scaled = &self.center * BigRational::from_integer(pow10(self.frac_digits));
        let n = scaled.to_integer();
        let neg = n.is_negative();
        let mut s = n.abs().to_string();
        let fd = self.frac_digits as usize;
        if fd > 0 {
            if s.len() <= fd {
                s = format!("{}{}", "0".repeat(fd + 1 - s.len()), s);
            }
            s.insert(s.len() - fd, '.');
        }
        if neg {
            s.insert(0, '-');
        }
        s
    }
}

impl fmt::Display for DecimalReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `?` marks an approximation not declared irrational
        let mark = if self.irrational { "" } else { "?" };
        write!(f, "{}~{}{}", self.digit_string(), self.correct_digits, mark)
    }
}

impl Enclosure for DecimalReal {
    fn exact(&self) -> Option<BigRational> {
        None
    }
    fn declared_irrational(&self) -> bool {
        self.irrational
    }
    fn enclose(&self, digits: u32) -> Option<Interval> {
        Some(self.interval(digits))
    }
    fn digits_available(&self) -> u32 {
        self.frac_digits
    }
}

/// An exact rational or a certified decimal enclosure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CertifiedReal {
    Rational(BigRational),
    Decimal(DecimalReal),
}

impl From<BigRational> for CertifiedReal {
    fn from(q: BigRational) -> Self {
        CertifiedReal::Rational(q)
    }
}

impl From<i64> for CertifiedReal {
    fn from(n: i64) -> Self {
        CertifiedReal::Rational(int(n))
    }
}

impl CertifiedReal {
    pub fn ratio(p: i64, q: i64) -> Self {
        CertifiedReal::Rational(rat(p, q))
    }

    /// Parses `p/q`, an integer, an exact decimal, or `d.ddd~k`.
    ///
    /// A value is approximate when it carries `~k` or `irrational` is set;
    /// otherwise it is the exact rational the string denotes.
    pub fn parse(s: &str, irrational: bool, budget: &PrecisionBudget) -> Result<Self> {
        let t = s.trim();
        let mut irrational = irrational;
        let (body, correct) = match t.split_once('~') {
            Some((b, k)) => {
                let k = match k.trim().strip_suffix('?') {
                    Some(k) => {
                        irrational = false;
                        k
                    }
                    None => k,
                };
                let k = k.trim().parse::<u32>().map_err(|_| ArithError::Parse {
                    input: s.into(),
                    reason: "bad digit count after '~'".into(),
                })?;
                (b, Some(k))
            }
            None => (t, None),
        };
        if body.contains('/') {
            if irrational || correct.is_some() {
                return Err(ArithError::Invalid(format!(
                    "{s:?} is a fraction and cannot be approximate or irrational"
                )));
            }
            return Ok(CertifiedReal::Rational(parse_rational(body)?));
        }
        if !irrational && correct.is_none() {
            return Ok(CertifiedReal::Rational(parse_rational(body)?));
        }
        let d = DecimalReal::new(body, correct, irrational)?;
        if d.frac_digits > budget.max_digits {
            return Err(ArithError::Invalid(format!(
                "{s:?} carries {} digits, budget allows {}",
                d.frac_digits, budget.max_digits
            )));
        }
        Ok(CertifiedReal::Decimal(d))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            CertifiedReal::Rational(q) => Some(q),
            CertifiedReal::Decimal(_) => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, CertifiedReal::Rational(_))
    }

    pub fn is_irrational(&self) -> bool {
        matches!(self, CertifiedReal::Decimal(d) if d.irrational)
    }

    /// Certified sign; exact zero only for rationals.
    pub fn sign(&self, budget: &PrecisionBudget) -> Result<Ordering> {
        certified_sign(self, budget)
    }

    /// Best-effort `f64` value for display.
    pub fn approx_f64(&self) -> f64 {
        match self {
            CertifiedReal::Rational(q) => q.to_f64().unwrap_or(f64::NAN),
            CertifiedReal::Decimal(d) => d.center.to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertifiedReal::Rational(q) => f.write_str(&fmt_rational(q)),
            CertifiedReal::Decimal(d) => d.fmt(f),
        }
    }
}

impl Enclosure for CertifiedReal {
    fn exact(&self) -> Option<BigRational> {
        self.as_rational().cloned()
    }
    fn declared_irrational(&self) -> bool {
        self.is_irrational()
    }
    fn enclose(&self, digits: u32) -> Option<Interval> {
        match self {
            CertifiedReal::Rational(q) => Some(Interval::point(q.clone())),
            CertifiedReal::Decimal(d) => d.enclose(digits),
        }
    }
    fn digits_available(&self) -> u32 {
        match self {
            CertifiedReal::Rational(_) => 0,
            CertifiedReal::Decimal(d) => d.frac_digits,
        }
    }
}

/// `factor * inner`.
pub struct Scaled<'a, T: ?Sized> {
    pub inner: &'a T,
    pub factor: BigRational,
}

impl<'a, T: Enclosure + ?Sized> Scaled<'a, T> {
    pub fn new(inner: &'a T, factor: BigRational) -> Self {
        Scaled { inner, factor }
    }
}

impl<T: Enclosure + ?Sized> Enclosure for Scaled<'_, T> {
    fn exact(&self) -> Option<BigRational> {
        if self.factor.is_zero() {
            return Some(BigRational::zero());
        }
        self.inner.exact().map(|q| q * &self.factor)
    }
    fn declared_irrational(&self) -> bool {
        !self.factor.is_zero() && self.inner.declared_irrational()
    }
    fn enclose(&self, digits: u32) -> Option<Interval> {
        self.inner.enclose(digits).map(|iv| iv.scale(&self.factor))
    }
    fn digits_available(&self) -> u32 {
        self.inner.digits_available()
    }
}

fn decide<T, R>(
    x: &T,
    budget: &PrecisionBudget,
    mut f: impl FnMut(&Interval, bool) -> Option<R>,
) -> Result<R>
where
    T: Enclosure + ?Sized,
{
    let irr = x.declared_irrational();
    let levels = budget.levels(x.digits_available());
    for &d in &levels {
        if let Some(iv) = x.enclose(d) {
            if let Some(r) = f(&iv, irr) {
                return Ok(r);
            }
        }
    }
    Err(ArithError::PrecisionInsufficient {
        digits: *levels.last().unwrap_or(&0),
    })
}

/// `E(x) = min{k ∈ Z | k >= x}`.
pub fn ceil_e<T: Enclosure + ?Sized>(x: &T, budget: &PrecisionBudget) -> Result<BigInt> {
    if let Some(q) = x.exact() {
        return Ok(ceil_q(&q));
    }
    decide(x, budget, |iv, irr| iv.ceil_unique(irr))
}

/// `[x] = max{k ∈ Z | k <= x}`.
pub fn floor_of<T: Enclosure + ?Sized>(x: &T, budget: &PrecisionBudget) -> Result<BigInt> {
    if let Some(q) = x.exact() {
        return Ok(floor_q(&q));
    }
    decide(x, budget, |iv, irr| iv.floor_unique(irr))
}

/// `φ(x) = E(x) - [x]`.
pub fn phi<T: Enclosure + ?Sized>(x: &T, budget: &PrecisionBudget) -> Result<u8> {
    if let Some(q) = x.exact() {
        return Ok(u8::from(!q.is_integer()));
    }
    if x.declared_irrational() {
        // ceil and floor both certified, so they differ by one
        floor_of(x, budget)?;
        return Ok(1);
    }
    let e = ceil_e(x, budget)?;
    let f = floor_of(x, budget)?;
    Ok(if e == f { 0 } else { 1 })
}

pub fn certified_sign<T: Enclosure + ?Sized>(x: &T, budget: &PrecisionBudget) -> Result<Ordering> {
    if let Some(q) = x.exact() {
        return Ok(q.cmp(&BigRational::zero()));
    }
    decide(x, budget, |iv, _| match iv.sign() {
        Some(Ordering::Equal) | None => None,
        s => s,
    })
}

/// `{x} = x - [x]`.
pub fn frac(x: &CertifiedReal, budget: &PrecisionBudget) -> Result<CertifiedReal> {
    match x {
        CertifiedReal::Rational(q) => Ok(CertifiedReal::Rational(frac_q(q))),
        CertifiedReal::Decimal(d) => {
            let n = floor_of(x, budget)?;
            Ok(CertifiedReal::Decimal(d.shifted(&-n)))
        }
    }
}

/// Which vertex of `[0,1]` the fractional part of `x` is within `eps` of:
/// `Some(0)` if `{x} < eps`, `Some(1)` if `1 - {x} < eps`, `None` if
/// neither.
pub fn near_vertex<T: Enclosure + ?Sized>(
    x: &T,
    eps: &BigRational,
    budget: &PrecisionBudget,
) -> Result<Option<u8>> {
    let one = BigRational::one();
    let classify = |lo: &BigRational, hi: &BigRational| -> Option<Option<u8>> {
        // lo, hi enclose {x} inside [0, 1)
        if hi < eps {
            Some(Some(0))
        } else if (&one - lo) < *eps {
            Some(Some(1))
        } else if lo >= eps && (&one - hi) >= *eps {
            Some(None)
        } else {
            None
        }
    };
    if let Some(q) = x.exact() {
        let f = frac_q(&q);
        return Ok(classify(&f, &f).expect("point enclosure always classifies"));
    }
    decide(x, budget, |iv, irr| {
        let n = BigRational::from_integer(iv.floor_unique(irr)?);
        let lo = (&iv.lo - &n).max(BigRational::zero());
        let hi = &iv.hi - &n;
        classify(&lo, &hi)
    })
}

/// An affine combination `c + Σ a_k x_k` of decimal atoms.
///
/// Keeping derived quantities symbolic in the atoms lets exact cancellations
/// (for example `x / x`) be recognised instead of producing an interval that
/// straddles an integer forever.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RealExpr {
    constant: BigRational,
    terms: Vec<(BigRational, DecimalReal)>,
}

impl RealExpr {
    pub fn constant(c: BigRational) -> Self {
        RealExpr {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(BigRational::zero())
    }

    pub fn constant_part(&self) -> &BigRational {
        &self.constant
    }

    pub fn atom_count(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, coeff: BigRational, atom: &DecimalReal) {
        if coeff.is_zero() {
            return;
        }
        if let Some(pos) = self.terms.iter().position(|(_, a)| a == atom) {
            self.terms[pos].0 += coeff;
            if self.terms[pos].0.is_zero() {
                self.terms.remove(pos);
            }
        } else {
            self.terms.push((coeff, atom.clone()));
        }
    }

    pub fn add(&self, o: &RealExpr) -> RealExpr {
        let mut out = self.clone();
        out.constant += &o.constant;
        for (c, a) in &o.terms {
            out.add_term(c.clone(), a);
        }
        out
    }

    pub fn add_rational(&self, c: &BigRational) -> RealExpr {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    pub fn scale(&self, f: &BigRational) -> RealExpr {
        if f.is_zero() {
            return RealExpr::zero();
        }
        RealExpr {
            constant: &self.constant * f,
            terms: self.terms.iter().map(|(c, a)| (c * f, a.clone())).collect(),
        }
    }

    pub fn neg(&self) -> RealExpr {
        self.scale(&-BigRational::one())
    }

    fn coeff_of(&self, atom: &DecimalReal) -> BigRational {
        self.terms
            .iter()
            .find(|(_, a)| a == atom)
            .map(|(c, _)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// If `self = r * other` for a rational `r`, returns `r`.
    pub fn proportional_to(&self, other: &RealExpr) -> Option<BigRational> {
        let r = match other.terms.first() {
            Some((c, a)) => self.coeff_of(a) / c,
            None if !other.constant.is_zero() => &self.constant / &other.constant,
            None => return None,
        };
        (other.scale(&r) == *self).then_some(r)
    }

    /// The single atom the expression depends on, if any and unique.
    fn single_atom(&self) -> Option<&DecimalReal> {
        match self.terms.as_slice() {
            [(_, a)] => Some(a),
            _ => None,
        }
    }

    /// Collapses to a [`CertifiedReal`] when that is lossless (constant, or
    /// a single atom with unit coefficient and integer shift).
    pub fn to_certified(&self) -> Option<CertifiedReal> {
        match self.terms.as_slice() {
            [] => Some(CertifiedReal::Rational(self.constant.clone())),
            [(c, a)] if c.is_one() && self.constant.is_integer() => Some(CertifiedReal::Decimal(
                a.shifted(&self.constant.to_integer()),
            )),
            _ => None,
        }
    }
}

impl From<&CertifiedReal> for RealExpr {
    fn from(x: &CertifiedReal) -> Self {
        match x {
            CertifiedReal::Rational(q) => RealExpr::constant(q.clone()),
            CertifiedReal::Decimal(d) => {
                let mut e = RealExpr::zero();
                e.add_term(BigRational::one(), d);
                e
            }
        }
    }
}

impl Enclosure for RealExpr {
    fn exact(&self) -> Option<BigRational> {
        self.terms.is_empty().then(|| self.constant.clone())
    }
    fn declared_irrational(&self) -> bool {
        self.single_atom().is_some_and(|a| a.irrational)
    }
    fn enclose(&self, digits: u32) -> Option<Interval> {
        let mut iv = Interval::point(self.constant.clone());
        for (c, a) in &self.terms {
            iv = iv.add(&a.interval(digits).scale(c));
        }
        Some(iv)
    }
    fn digits_available(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, a)| a.frac_digits)
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.to_certified() {
            return c.fmt(f);
        }
        write!(f, "{}", fmt_rational(&self.constant))?;
        for (c, a) in &self.terms {
            write!(f, " + ({})*{}", fmt_rational(c), a)?;
        }
        Ok(())
    }
}

/// Quotient of two affine expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealRatio {
    num: RealExpr,
    den: RealExpr,
    exact: Option<BigRational>,
}

impl RealRatio {
    pub fn new(num: RealExpr, den: RealExpr) -> Result<Self> {
        if den.exact().is_some_and(|q| q.is_zero()) {
            return Err(ArithError::Invalid("division by zero".into()));
        }
        let exact = match (num.exact(), den.exact()) {
            (Some(a), Some(b)) => Some(a / b),
            (Some(a), None) if a.is_zero() => Some(a),
            _ => num.proportional_to(&den),
        };
        Ok(RealRatio { num, den, exact })
    }

    pub fn numerator(&self) -> &RealExpr {
        &self.num
    }

    pub fn denominator(&self) -> &RealExpr {
        &self.den
    }
}

impl Enclosure for RealRatio {
    fn exact(&self) -> Option<BigRational> {
        self.exact.clone()
    }
    fn declared_irrational(&self) -> bool {
        if self.exact.is_some() {
            return false;
        }
        // A Möbius image (a + b x) / (c + d x) of an irrational x with
        // rational coefficients and ad - bc != 0 is irrational.
        match (self.num.single_atom(), self.den.single_atom()) {
            (Some(x), None) => x.irrational,
            (None, Some(x)) => x.irrational && !self.num.constant.is_zero(),
            (Some(x), Some(y)) if x == y => x.irrational,
            _ => false,
        }
    }
    fn enclose(&self, digits: u32) -> Option<Interval> {
        if let Some(q) = &self.exact {
            return Some(Interval::point(q.clone()));
        }
        self.num.enclose(digits)?.div(&self.den.enclose(digits)?)
    }
    fn digits_available(&self) -> u32 {
        self.num.digits_available().max(self.den.digits_available())
    }
}

const FAST_DIGITS: u32 = 20;

/// Certified `E(m y)` and `[m y]` for many integer multipliers `m` of one
/// fixed value `y`, with an `i128` fast path and a certified fallback.
#[derive(Debug, Clone)]
pub struct MultipleFloors {
    value: RealExpr,
    budget: PrecisionBudget,
    fast: Fast,
}

#[derive(Debug, Clone)]
enum Fast {
    Exact {
        p: i128,
        q: i128,
    },
    Bounds {
        lo: i128,
        hi: i128,
        irrational: bool,
    },
    None,
}

const FAST_SCALE: i128 = 100_000_000_000_000_000_000; // 10^20

impl MultipleFloors {
    pub fn new(value: RealExpr, budget: PrecisionBudget) -> Self {
        let fast = match value.exact() {
            Some(q) => match (q.numer().to_i64(), q.denom().to_i64()) {
                (Some(p), Some(d)) => Fast::Exact {
                    p: p as i128,
                    q: d as i128,
                },
                _ => Fast::None,
            },
            None => {
                let iv = value
                    .enclose(FAST_DIGITS.min(value.digits_available()))
                    .expect("affine enclosures always exist");
                let s = BigRational::from_integer(pow10(FAST_DIGITS));
                match (
                    floor_q(&(&iv.lo * &s)).to_i128(),
                    ceil_q(&(&iv.hi * &s)).to_i128(),
                ) {
                    (Some(lo), Some(hi))
                        if lo.abs() < (1i128 << 100) && hi.abs() < (1i128 << 100) =>
                    {
                        Fast::Bounds {
                            lo,
                            hi,
                            irrational: value.declared_irrational(),
                        }
                    }
                    _ => Fast::None,
                }
            }
        };
        MultipleFloors {
            value,
            budget,
            fast,
        }
    }

    pub fn value(&self) -> &RealExpr {
        &self.value
    }

    pub fn ceil_at(&self, m: i64) -> Result<i64> {
        match &self.fast {
            Fast::Exact { p, q } => {
                return Ok(ceil_div(*p * m as i128, *q) as i64);
            }
            Fast::Bounds { lo, hi, irrational } => {
                if let (Some(a), Some(b)) = (lo.checked_mul(m as i128), hi.checked_mul(m as i128)) {
                    let (a, b) = if m >= 0 { (a, b) } else { (b, a) };
                    let (ca, cb) = (ceil_div(a, FAST_SCALE), ceil_div(b, FAST_SCALE));
                    if ca == cb {
                        return Ok(ca as i64);
                    }
                    if *irrational {
                        let (fa, fb) = (a.div_euclid(FAST_SCALE), b.div_euclid(FAST_SCALE));
                        if fa == fb {
                            return Ok(fa as i64 + 1);
                        }
                    }
                }
            }
            Fast::None => {}
        }
        let scaled = Scaled::new(&self.value, int(m));
        let v = ceil_e(&scaled, &self.budget)?;
        v.to_i64()
            .ok_or_else(|| ArithError::Invalid("index exceeds i64".into()))
    }

    pub fn floor_at(&self, m: i64) -> Result<i64> {
        Ok(-self.ceil_neg(m)?)
    }

    fn ceil_neg(&self, m: i64) -> Result<i64> {
        // [y m] = -E(-y m)
        match &self.fast {
            Fast::Exact { p, q } => Ok(ceil_div(-*p * m as i128, *q) as i64),
            _ => {
                let scaled = Scaled::new(&self.value, int(m));
                let v = floor_of(&scaled, &self.budget)?;
                Ok(-v
                    .to_i64()
                    .ok_or_else(|| ArithError::Invalid("index exceeds i64".into()))?)
            }
        }
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

impl Serialize for CertifiedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CertifiedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        // "~k" marks a declared irrational, "~k?" a plain approximation
        let s = String::deserialize(d)?;
        let irrational = s.contains('~') && !s.ends_with('?');
        CertifiedReal::parse(
            &s,
            irrational,
            &PrecisionBudget {
                max_digits: u32::MAX,
                refine_step: 50,
            },
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}
