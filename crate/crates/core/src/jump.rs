//! Common index jump: problem construction, certified search over N,
//! certificate verification and scaling by a factor p̂.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{
    ceil_e, ceil_q, certified_sign, floor_of, floor_q, frac_q, int, near_vertex, phi, pow10, rat,
    rational_str, ArithError, Enclosure, Interval, PrecisionBudget, RealExpr, RealRatio, Scaled,
};
use crate::iteration::{IndexGerm, IterationError};
use crate::normal_forms::NormalFormError;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum JumpError {
    #[error("mean index of {germ} is zero")]
    ZeroMeanIndex { germ: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no qualifying N up to {n_max}")]
    NotFound { n_max: u64 },
    #[error("scaled certificate does not match its base: {0}")]
    ScaleMismatch(String),
    #[error("identity violated for {curve} at m = {m}: {clause}")]
    IdentityViolation {
        curve: String,
        m: u64,
        clause: Clause,
    },
    #[error("certificate does not fit the system: {0}")]
    InvalidCertificate(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Iteration(#[from] IterationError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

type Result<T> = std::result::Result<T, JumpError>;

/// Per-germ data of a jump problem.
#[derive(Debug, Clone)]
pub struct GermData {
    /// `i₁ + S⁺(1) − C`.
    pub beta: i64,
    /// Angles θ/π repeated by their `S⁻` multiplicity.
    pub alphas: Vec<RealExpr>,
    /// `D = β + Σα = î`.
    pub mean: RealExpr,
    pub rho: i8,
}

impl GermData {
    pub fn mu(&self) -> usize {
        self.alphas.len()
    }
}

#[derive(Debug, Clone)]
pub struct JumpProblem {
    germs: Vec<IndexGerm>,
    data: Vec<GermData>,
    delta: BigRational,
    epsilon: BigRational,
    big_m: u64,
    m0: u64,
    mbar: u64,
    v: Vec<RealRatio>,
    budget: PrecisionBudget,
}

/// Builds the jump problem for a system of germs. `eps = None` selects
/// `δ / (2·max(M|î_i|, 1))`.
pub fn build_problem(
    germs: &[IndexGerm],
    delta: BigRational,
    eps: Option<BigRational>,
    m0: u64,
) -> Result<JumpProblem> {
    if germs.is_empty() {
        return Err(JumpError::Precondition("empty system".into()));
    }
    if m0 == 0 {
        return Err(JumpError::Precondition("M0 must be positive".into()));
    }
    let budget = *germs[0].budget();
    let mut data = Vec::with_capacity(germs.len());
    let mut big_m = BigInt::one();
    for g in germs {
        let rho = match g.mean_index_sign()? {
            Ordering::Equal => {
                return Err(JumpError::ZeroMeanIndex {
                    germ: g.name().to_string(),
                })
            }
            Ordering::Greater => 1,
            Ordering::Less => -1,
        };
        for b in g.blocks().blocks() {
            if let Some(a) = b.angle() {
                if !a.is_rational() && !a.over_pi().is_irrational() {
                    return Err(JumpError::Precondition(format!(
                        "angle {a} of {} is neither exact nor declared irrational",
                        g.name()
                    )));
                }
            }
        }
        for p in g.blocks().unit_spectrum() {
            if let Some(q) = p.angle.exact() {
                big_m = big_m.lcm(q.denom());
            }
        }
        let mut alphas = Vec::new();
        for (a, s) in g.minus_angles() {
            alphas.extend(std::iter::repeat_n(a, s as usize));
        }
        data.push(GermData {
            beta: g.linear_part(),
            alphas,
            mean: g.mean_index().clone(),
            rho,
        });
    }
    let big_m = big_m
        .to_u64()
        .ok_or_else(|| JumpError::Precondition("M exceeds 64 bits".into()))?;
    let max_mu = data.iter().map(GermData::mu).max().unwrap_or(0);
    check_delta(&delta, max_mu)?;
    let epsilon = match eps {
        Some(e) => e,
        None => default_epsilon(germs, &delta, big_m),
    };
    if !(epsilon.is_positive() && epsilon < rat(1, 2)) {
        return Err(JumpError::Precondition(format!(
            "ε = {} must lie in (0, 1/2)",
            crate::exact::fmt_rational(&epsilon)
        )));
    }
    let mut v = Vec::new();
    for d in &data {
        let abs = d.mean.scale(&int(i64::from(d.rho)));
        v.push(RealRatio::new(
            RealExpr::constant(BigRational::one()),
            abs.scale(&BigRational::from_integer(big_m.into())),
        )?);
    }
    for d in &data {
        let abs = d.mean.scale(&int(i64::from(d.rho)));
        for a in &d.alphas {
            v.push(RealRatio::new(a.clone(), abs.clone())?);
        }
    }
    let mbar = germs
        .iter()
        .try_fold(1, |acc, g| Ok::<_, JumpError>(acc.max(g.signed_mbar()?)))?;
    Ok(JumpProblem {
        germs: germs.to_vec(),
        data,
        delta,
        epsilon,
        big_m,
        m0,
        mbar,
        v,
        budget,
    })
}

fn check_delta(delta: &BigRational, max_mu: usize) -> Result<()> {
    let half = rat(1, 2);
    if !(delta.is_positive() && *delta < half && delta * int(max_mu as i64) < half) {
        return Err(JumpError::Precondition(format!(
            "δ = {} needs 0 < δ < 1/2 and δ·max μ = δ·{max_mu} < 1/2",
            crate::exact::fmt_rational(delta)
        )));
    }
    Ok(())
}

fn default_epsilon(germs: &[IndexGerm], delta: &BigRational, big_m: u64) -> BigRational {
    let scale = BigRational::from_integer(pow10(6));
    let worst = germs
        .iter()
        .map(|g| match g.mean_index().exact() {
            Some(q) => q.abs(),
            None => BigRational::new(ceil_q(&(g.abs_mean_upper_bound() * &scale)), pow10(6)),
        })
        .map(|u| u * int(big_m as i64))
        .fold(BigRational::one(), |a, b| a.max(b));
    delta / (int(2) * worst)
}

impl JumpProblem {
    pub fn germs(&self) -> &[IndexGerm] {
        &self.germs
    }

    pub fn data(&self) -> &[GermData] {
        &self.data
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    /// The common period M of the rational angles.
    pub fn big_m(&self) -> u64 {
        self.big_m
    }

    pub fn m0(&self) -> u64 {
        self.m0
    }

    pub fn mbar(&self) -> u64 {
        self.mbar
    }

    pub fn set_mbar(&mut self, mbar: u64) {
        self.mbar = mbar.max(1);
    }

    pub fn v(&self) -> &[RealRatio] {
        &self.v
    }

    pub fn budget(&self) -> &PrecisionBudget {
        &self.budget
    }

    fn max_mu(&self) -> usize {
        self.data.iter().map(GermData::mu).max().unwrap_or(0)
    }

    /// Smallest multiple N of M₀ in `[n_min, n_max]` whose certificate
    /// passes every identity check.
    pub fn search(&self, n_min: u64, n_max: u64) -> Result<JumpCertificate> {
        if n_min == 0 || n_min > n_max {
            return Err(JumpError::Precondition(format!(
                "search range [{n_min}, {n_max}] is empty"
            )));
        }
        let fixed: Vec<Option<FixedFrac>> = self.v.iter().map(FixedFrac::new).collect();
        let two64 = BigRational::from_integer(BigInt::one() << 64);
        let e = ceil_q(&(&self.epsilon * &two64))
            .to_u64()
            .unwrap_or(u64::MAX);
        let first = n_min.div_ceil(self.m0);
        let last = n_max / self.m0;
        const CHUNK: u64 = 1 << 16;
        let mut k = first;
        while k <= last {
            let end = last.min(k.saturating_add(CHUNK - 1));
            let cands: Vec<u64> = (k..=end)
                .into_par_iter()
                .map(|k| k * self.m0)
                .filter(|&n| {
                    fixed
                        .iter()
                        .all(|f| f.as_ref().is_none_or(|f| f.maybe_near(n, e)))
                })
                .collect();
            for n in cands {
                match self.try_candidate(n) {
                    Ok(Some(cert)) => return Ok(cert),
                    Ok(None) => {}
                    Err(JumpError::Arith(err)) => log::warn!("skipping N = {n}: {err}"),
                    Err(err) => return Err(err),
                }
            }
            if end == u64::MAX {
                break;
            }
            k = end + 1;
        }
        Err(JumpError::NotFound { n_max })
    }

    /// Assembles and verifies the certificate for one N, if its orbit point
    /// is ε-close to a vertex.
    pub fn try_candidate(&self, n: u64) -> Result<Option<JumpCertificate>> {
        let Some(cert) = self.candidate(n)? else {
            return Ok(None);
        };
        if verify_t34(self, &cert)?.passed() && verify_t36(&self.germs, &cert, self.mbar)?.passed()
        {
            return Ok(Some(cert));
        }
        Ok(None)
    }

    /// The certificate assembled at the vertex nearest `Nv`, before the
    /// identities are checked. `None` if `Nv` is not ε-close to a vertex or
    /// some iterate is zero.
    pub fn candidate(&self, n: u64) -> Result<Option<JumpCertificate>> {
        let Some(chi) = self.vertex(n, &self.epsilon)? else {
            return Ok(None);
        };
        let cert = self.assemble(n, &chi, &self.delta, &self.epsilon)?;
        if cert.curves.iter().any(|c| c.m == 0) {
            return Ok(None);
        }
        Ok(Some(cert))
    }

    /// χ with `|{Nv} − χ| < ε` coordinatewise, if it exists.
    fn vertex(&self, n: u64, eps: &BigRational) -> Result<Option<Vec<u8>>> {
        let mut chi = Vec::with_capacity(self.v.len());
        for x in &self.v {
            match near_vertex(&Scaled::new(x, big(n)), eps, &self.budget)? {
                Some(c) => chi.push(c),
                None => return Ok(None),
            }
        }
        Ok(Some(chi))
    }

    /// `m_i = ([N v_i] + χ_i)·M`.
    fn iterate_for(&self, i: usize, n: u64, chi_i: u8) -> Result<u64> {
        let fl = floor_of(&Scaled::new(&self.v[i], big(n)), &self.budget)?;
        (fl + BigInt::from(chi_i))
            .to_u64()
            .and_then(|k| k.checked_mul(self.big_m))
            .ok_or_else(|| JumpError::Precondition(format!("iterate for N = {n} overflows")))
    }

    fn delta_count(&self, i: usize, m: u64, delta: &BigRational) -> Result<u64> {
        let mut count = 0;
        for a in &self.data[i].alphas {
            if in_open_window(&a.scale(&big(m)), delta, &self.budget)? {
                count += 1;
            }
        }
        Ok(count)
    }

    fn assemble(
        &self,
        n: u64,
        chi: &[u8],
        delta: &BigRational,
        eps: &BigRational,
    ) -> Result<JumpCertificate> {
        let mut curves = Vec::with_capacity(self.germs.len());
        for (i, g) in self.germs.iter().enumerate() {
            let m = self.iterate_for(i, n, chi[i])?;
            curves.push(CurveJump {
                name: g.name().to_string(),
                m,
                delta: self.delta_count(i, m, delta)?,
                rho: self.data[i].rho,
            });
        }
        Ok(JumpCertificate {
            n,
            big_m: self.big_m,
            m0: self.m0,
            delta: delta.clone(),
            epsilon: eps.clone(),
            chi: chi.to_vec(),
            curves,
        })
    }

    /// Rescales a certificate found at tolerances (δ/p̂, ε/p̂) to N̂ = p̂N and
    /// tolerances (δ, ε), checking that χ, m and Δ transform as predicted.
    pub fn scale(&self, cert: &JumpCertificate, p_hat: u64) -> Result<ScaledCertificate> {
        if p_hat == 0 {
            return Err(JumpError::Precondition("p̂ must be positive".into()));
        }
        self.check_fits(cert)?;
        let p = big(p_hat);
        let n_hat = cert
            .n
            .checked_mul(p_hat)
            .ok_or_else(|| JumpError::Precondition("p̂N overflows".into()))?;
        let delta = &cert.delta * &p;
        let eps = &cert.epsilon * &p;
        let chi_hat = self.vertex(n_hat, &eps)?.ok_or_else(|| {
            JumpError::ScaleMismatch(format!(
                "{{N̂v}} with N̂ = {n_hat} is not ε-close to a vertex"
            ))
        })?;
        let scaled = self.assemble(n_hat, &chi_hat, &delta, &eps)?;
        let mut ledger = Report::default();
        for (i, (c, s)) in cert.curves.iter().zip(&scaled.curves).enumerate() {
            ledger.push(
                &c.name,
                Clause::ScaledVertex,
                None,
                chi_hat[i] == cert.chi[i],
                format!("χ̂ = {}, χ = {}", chi_hat[i], cert.chi[i]),
            );
            ledger.push(
                &c.name,
                Clause::ScaledIterate,
                None,
                Some(s.m) == c.m.checked_mul(p_hat),
                format!("m̂ = {}, p̂m = {}", s.m, c.m as u128 * p_hat as u128),
            );
            ledger.push(
                &c.name,
                Clause::ScaledDelta,
                None,
                s.delta == c.delta,
                format!("Δ̂ = {}, Δ = {}", s.delta, c.delta),
            );
        }
        if let Some(bad) = ledger.first_failure() {
            return Err(JumpError::ScaleMismatch(bad.to_string()));
        }
        ledger.extend(verify_t36(&self.germs, &scaled, self.mbar)?);
        Ok(ScaledCertificate {
            p_hat,
            base: cert.clone(),
            scaled,
            ledger,
        })
    }

    /// Whether Δ_i recounted under δ₁ and δ₂ agree for every curve.
    pub fn delta_invariance(
        &self,
        cert: &JumpCertificate,
        d1: &BigRational,
        d2: &BigRational,
    ) -> Result<bool> {
        self.check_fits(cert)?;
        check_delta(d1, self.max_mu())?;
        check_delta(d2, self.max_mu())?;
        for (i, c) in cert.curves.iter().enumerate() {
            if self.delta_count(i, c.m, d1)? != self.delta_count(i, c.m, d2)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn check_fits(&self, cert: &JumpCertificate) -> Result<()> {
        if cert.curves.len() != self.germs.len() {
            return Err(JumpError::InvalidCertificate(format!(
                "{} curves in certificate, {} in system",
                cert.curves.len(),
                self.germs.len()
            )));
        }
        for (c, g) in cert.curves.iter().zip(&self.germs) {
            if c.name != g.name() {
                return Err(JumpError::InvalidCertificate(format!(
                    "curve {} does not match {}",
                    c.name,
                    g.name()
                )));
            }
        }
        if cert.chi.len() != self.v.len() {
            return Err(JumpError::InvalidCertificate(format!(
                "χ has length {}, expected {}",
                cert.chi.len(),
                self.v.len()
            )));
        }
        if cert.big_m != self.big_m {
            return Err(JumpError::InvalidCertificate(format!(
                "M = {} but the system needs M = {}",
                cert.big_m, self.big_m
            )));
        }
        Ok(())
    }
}

fn big(n: u64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `0 < {x} < δ`.
fn in_open_window(x: &RealExpr, delta: &BigRational, budget: &PrecisionBudget) -> Result<bool> {
    if let Some(q) = x.exact() {
        let f = frac_q(&q);
        return Ok(f.is_positive() && f < *delta);
    }
    let fl = floor_of(x, budget)?;
    let f = x.add_rational(&-BigRational::from_integer(fl));
    if certified_sign(&f, budget)? != Ordering::Greater {
        return Ok(false);
    }
    Ok(certified_sign(&f.add_rational(&-delta), budget)? == Ordering::Less)
}

/// `{x}` as a 64-bit fixed-point fraction `f·2⁻⁶⁴` with error at most
/// `w·2⁻⁶⁴`.
struct FixedFrac {
    f: u64,
    w: u64,
}

impl FixedFrac {
    fn new<T: Enclosure>(x: &T) -> Option<Self> {
        let iv = match x.exact() {
            Some(q) => Interval::point(q),
            None => x.enclose(x.digits_available().min(40))?,
        };
        let two64 = BigRational::from_integer(BigInt::one() << 64);
        let lo = &iv.lo - BigRational::from_integer(floor_q(&iv.lo));
        let f = floor_q(&(&lo * &two64)).to_u64()?;
        let w = ceil_q(&((&iv.hi - &iv.lo) * &two64))
            .to_u64()?
            .checked_add(1)?;
        Some(FixedFrac { f, w })
    }

    /// False only when `{n x}` is certainly at least `e·2⁻⁶⁴` away from
    /// both 0 and 1.
    fn maybe_near(&self, n: u64, e: u64) -> bool {
        const ONE: u128 = 1 << 64;
        let x = (n as u128 * self.f as u128) & (ONE - 1);
        let err = n as u128 * self.w as u128;
        if err >= ONE / 2 {
            return true;
        }
        let hi = x + err;
        hi >= ONE || x <= e as u128 || hi >= ONE - e as u128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveJump {
    pub name: String,
    pub m: u64,
    #[serde(rename = "Delta")]
    pub delta: u64,
    pub rho: i8,
}

/// A witness `(N, M, M₀, δ, ε, χ, {m_i, Δ_i, ϱ_i})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpCertificate {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub big_m: u64,
    #[serde(rename = "M0")]
    pub m0: u64,
    #[serde(with = "rational_str")]
    pub delta: BigRational,
    #[serde(with = "rational_str")]
    pub epsilon: BigRational,
    pub chi: Vec<u8>,
    pub curves: Vec<CurveJump>,
}

impl JumpCertificate {
    pub fn iterates(&self) -> Vec<u64> {
        self.curves.iter().map(|c| c.m).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScaledCertificate {
    pub p_hat: u64,
    pub base: JumpCertificate,
    pub scaled: JumpCertificate,
    pub ledger: Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// `m β + Σ E(m α) = ϱN + Δ`.
    JumpIdentity,
    /// `min({mα}, 1−{mα}) < δ`.
    AngleCloseness,
    /// `mα ∈ ℕ` for rational α.
    Integrality,
    DeltaCount,
    Sign,
    /// `m = ([N v] + χ) M`.
    IterateFormula,
    /// `|{Nv} − χ| < ε`.
    VertexCloseness,
    /// `M₀ | N`.
    Divisibility,
    /// `ν(2m_i ± m) = ν(m)`.
    Nullity,
    /// `i(2m_i + m) = 2ϱN + i(m)`.
    ForwardJump,
    /// `i(2m_i − m) = 2ϱN − i(m) − 2(S⁺ + Q(m))`.
    BackwardJump,
    /// `i(2m_i) = 2ϱN − (S⁺ + C − 2Δ)`.
    Midpoint,
    ScaledVertex,
    ScaledIterate,
    ScaledDelta,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        write!(f, "{}", s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub curve: String,
    pub clause: Clause,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "ok" } else { "FAIL" };
        match self.m {
            Some(m) => write!(
                f,
                "{status} {} {} m={m}: {}",
                self.curve, self.clause, self.detail
            ),
            None => write!(
                f,
                "{status} {} {}: {}",
                self.curve, self.clause, self.detail
            ),
        }
    }
}

/// Pass/fail record of every checked clause.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    fn push(&mut self, curve: &str, clause: Clause, m: Option<u64>, passed: bool, detail: String) {
        self.checks.push(Check {
            curve: curve.to_string(),
            clause,
            m,
            passed,
            detail,
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    /// Turns the first failure into an [`JumpError::IdentityViolation`].
    pub fn into_result(self) -> Result<Report> {
        match self.first_failure() {
            Some(c) => Err(JumpError::IdentityViolation {
                curve: c.curve.clone(),
                m: c.m.unwrap_or(0),
                clause: c.clause,
            }),
            None => Ok(self),
        }
    }
}

/// Checks the Diophantine jump identity, the δ-closeness and integrality
/// of every `m_i α`, the Δ counts, and the certificate's own structure.
pub fn verify_t34(problem: &JumpProblem, cert: &JumpCertificate) -> Result<Report> {
    problem.check_fits(cert)?;
    let budget = &problem.budget;
    let mut r = Report::default();
    r.push(
        "*",
        Clause::Divisibility,
        None,
        cert.m0 > 0 && cert.n.is_multiple_of(cert.m0),
        format!("N = {}, M0 = {}", cert.n, cert.m0),
    );
    for (j, x) in problem.v.iter().enumerate() {
        let ok = match near_vertex(&Scaled::new(x, big(cert.n)), &cert.epsilon, budget)? {
            Some(c) => c == cert.chi[j],
            None => false,
        };
        r.push(
            "*",
            Clause::VertexCloseness,
            None,
            ok,
            format!("coordinate {j}, χ = {}", cert.chi[j]),
        );
    }
    for (i, (c, d)) in cert.curves.iter().zip(&problem.data).enumerate() {
        let expect = problem.iterate_for(i, cert.n, cert.chi[i])?;
        r.push(
            &c.name,
            Clause::IterateFormula,
            None,
            expect == c.m && c.m > 0,
            format!("m = {}, formula gives {expect}", c.m),
        );
        r.push(
            &c.name,
            Clause::Sign,
            None,
            c.rho == d.rho,
            format!("ϱ = {}, sign of î is {}", c.rho, d.rho),
        );
        let m = big(c.m);
        let mut lhs = BigInt::from(c.m) * BigInt::from(d.beta);
        for a in &d.alphas {
            let ma = a.scale(&m);
            lhs += ceil_e(&ma, budget)?;
            let close = near_vertex(&ma, &cert.delta, budget)?.is_some();
            r.push(
                &c.name,
                Clause::AngleCloseness,
                None,
                close,
                format!("m·α with α = {a}"),
            );
            if let Some(q) = a.exact() {
                let v = q * &m;
                r.push(
                    &c.name,
                    Clause::Integrality,
                    None,
                    v.is_integer() && !v.is_negative(),
                    format!("m·α = {}", crate::exact::fmt_rational(&v)),
                );
            }
        }
        let rhs = BigInt::from(c.rho) * BigInt::from(cert.n) + BigInt::from(c.delta);
        r.push(
            &c.name,
            Clause::JumpIdentity,
            None,
            lhs == rhs,
            format!("lhs = {lhs}, ϱN + Δ = {rhs}"),
        );
        let count = problem.delta_count(i, c.m, &cert.delta)?;
        r.push(
            &c.name,
            Clause::DeltaCount,
            None,
            count == c.delta,
            format!("recounted Δ = {count}, certificate Δ = {}", c.delta),
        );
    }
    Ok(r)
}

/// Recomputes both sides of the iterated index and nullity identities for
/// every curve and every `1 ≤ m ≤ m_bar`.
pub fn verify_t36(germs: &[IndexGerm], cert: &JumpCertificate, m_bar: u64) -> Result<Report> {
    if germs.len() != cert.curves.len() {
        return Err(JumpError::InvalidCertificate(format!(
            "{} curves in certificate, {} in system",
            cert.curves.len(),
            germs.len()
        )));
    }
    let mut r = Report::default();
    for (g, c) in germs.iter().zip(&cert.curves) {
        let budget = g.budget();
        let rho = match g.mean_index_sign()? {
            Ordering::Greater => 1i128,
            Ordering::Less => -1,
            Ordering::Equal => {
                return Err(JumpError::ZeroMeanIndex {
                    germ: g.name().to_string(),
                })
            }
        };
        r.push(
            &c.name,
            Clause::Sign,
            None,
            i128::from(c.rho) == rho,
            format!("ϱ = {}", c.rho),
        );
        let jump = 2 * rho * i128::from(cert.n);
        let two_mi =
            c.m.checked_mul(2)
                .ok_or_else(|| JumpError::Precondition("2m overflows".into()))?;
        let s_plus = i128::from(g.s_plus());
        let minus = g.minus_angles();
        for m in 1..=m_bar {
            if two_mi <= m {
                r.push(
                    &c.name,
                    Clause::Nullity,
                    Some(m),
                    false,
                    format!("2m_i = {two_mi} does not exceed m"),
                );
                continue;
            }
            let nu = g.nullity_at(m)?;
            let (nu_minus, nu_plus) = (g.nullity_at(two_mi - m)?, g.nullity_at(two_mi + m)?);
            r.push(
                &c.name,
                Clause::Nullity,
                Some(m),
                nu_minus == nu && nu_plus == nu,
                format!("ν(2m_i−m) = {nu_minus}, ν(2m_i+m) = {nu_plus}, ν(m) = {nu}"),
            );
            let im = i128::from(g.index_at(m)?);
            let fwd = i128::from(g.index_at(two_mi + m)?);
            r.push(
                &c.name,
                Clause::ForwardJump,
                Some(m),
                fwd == jump + im,
                format!("i(2m_i+m) = {fwd}, 2ϱN + i(m) = {}", jump + im),
            );
            let mut q = 0i128;
            for (a, s) in &minus {
                let at_mi = phi(&Scaled::new(a, big(c.m)), budget)? == 0;
                if at_mi && phi(&Scaled::new(a, rat(m as i64, 2)), budget)? == 0 {
                    q += i128::from(*s);
                }
            }
            let back = i128::from(g.index_at(two_mi - m)?);
            let want = jump - im - 2 * (s_plus + q);
            r.push(
                &c.name,
                Clause::BackwardJump,
                Some(m),
                back == want,
                format!("i(2m_i−m) = {back}, expected {want} with Q = {q}"),
            );
        }
        let mid = i128::from(g.index_at(two_mi)?);
        let want = jump - (s_plus + i128::from(g.big_c()) - 2 * i128::from(c.delta));
        r.push(
            &c.name,
            Clause::Midpoint,
            None,
            mid == want,
            format!("i(2m_i) = {mid}, expected {want}"),
        );
        for p in g.blocks().unit_spectrum() {
            if p.is_one() {
                continue;
            }
            let close = near_vertex(&p.angle.scale(&big(c.m)), &cert.delta, budget)?.is_some();
            r.push(
                &c.name,
                Clause::AngleCloseness,
                None,
                close,
                format!("m_i·θ/π with θ/π = {}", p.angle),
            );
        }
    }
    Ok(r)
}
