//! The three-geodesic contradiction pipeline on bumpy S³: parity screening,
//! index bounds around the jump, forced top indices, the Euler-characteristic
//! sandwich and the final mod-4 clash after scaling by p̂ = 4.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::exact::{fmt_rational, int, rat, PrecisionBudget};
use crate::io::{SystemError, SystemFile};
use crate::iteration::{gamma_invariant, mbar as system_mbar, IndexGerm, IterationError};
use crate::jump::{build_problem, verify_t34, verify_t36, JumpCertificate, JumpError, JumpProblem};
use crate::morse::{
    betti, betti_alternating, euler_block_identity, morse_numbers_up_to, parity_counts, MorseError,
    TruncationBound,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AnosovError {
    #[error("system is not admissible: {0}")]
    Admissibility(String),
    #[error("index bound fails for {curve} at m = {m}: {detail}")]
    Lemma41Violation {
        curve: String,
        m: u64,
        detail: String,
    },
    #[error("internal identity failed: {0}")]
    Inconsistent(String),
    #[error("report cannot be replayed: {0}")]
    Replay(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Jump(#[from] JumpError),
    #[error(transparent)]
    Iteration(#[from] IterationError),
    #[error(transparent)]
    Morse(#[from] MorseError),
}

type Result<T> = std::result::Result<T, AnosovError>;

/// A validated system of prime closed geodesic germs together with its
/// source file.
#[derive(Debug, Clone)]
pub struct GeodesicSystem {
    pub source: SystemFile,
    pub germs: Vec<IndexGerm>,
}

impl GeodesicSystem {
    pub fn new(source: SystemFile, fallback: PrecisionBudget) -> Result<Self> {
        let germs = source.germs(fallback)?;
        Ok(GeodesicSystem { source, germs })
    }

    pub fn from_germs(dim: u32, germs: Vec<IndexGerm>) -> Self {
        GeodesicSystem {
            source: crate::io::system_file(dim, &germs),
            germs,
        }
    }
}

/// Search parameters for the pipeline; tolerances are before division by p̂.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    pub delta: BigRational,
    pub epsilon: BigRational,
    pub n_min: u64,
    pub n_max: u64,
    pub m0: u64,
    pub p_hat: u64,
    pub mbar_override: Option<u64>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            delta: rat(1, 64),
            epsilon: rat(1, 64),
            n_min: 1,
            n_max: 10_000_000,
            m0: 1,
            p_hat: 4,
            mbar_override: None,
        }
    }
}

/// Stage outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Proceed,
    /// Bounds implied by the Morse axioms, recorded for the next stage.
    Derived,
    Contradiction(String),
    Inconclusive(String),
    /// Every stage passed; would refute the argument for this input.
    Consistent,
}

impl Verdict {
    pub fn is_final(&self) -> bool {
        matches!(self, Verdict::Contradiction(_) | Verdict::Inconclusive(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Proceed => write!(f, "PROCEED"),
            Verdict::Derived => write!(f, "DERIVED"),
            Verdict::Contradiction(s) => write!(f, "CONTRADICTION({s})"),
            Verdict::Inconclusive(s) => write!(f, "INCONCLUSIVE({s})"),
            Verdict::Consistent => write!(f, "CONSISTENT"),
        }
    }
}

impl FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(str::to_string)
        };
        match s {
            "PASS" => Ok(Verdict::Pass),
            "PROCEED" => Ok(Verdict::Proceed),
            "DERIVED" => Ok(Verdict::Derived),
            "CONSISTENT" => Ok(Verdict::Consistent),
            _ => inner("CONTRADICTION")
                .map(Verdict::Contradiction)
                .or_else(|| inner("INCONCLUSIVE").map(Verdict::Inconclusive))
                .ok_or_else(|| format!("unknown verdict {s:?}")),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub name: String,
    pub verdict: Verdict,
    pub witness: Value,
}

/// Outcome of the pipeline with every intermediate number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpossibilityReport {
    pub system: SystemFile,
    pub stages: Vec<Stage>,
    #[serde(rename = "final")]
    pub final_verdict: Verdict,
}

impl ImpossibilityReport {
    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// Labels of the stages that can end the pipeline.
pub mod labels {
    pub const LEMMA_4_2: &str = "L4.2";
    pub const NO_EVEN_INDEX: &str = "M2";
    pub const FORCED_TOPS: &str = "4.17";
    pub const SANDWICH: &str = "4.18";
    pub const MOD4: &str = "4.19";
    pub const OUTSIDE: &str = "outside Assumption";
}

/// Checks the standing hypotheses on every curve and returns the witness.
pub fn admissibility(system: &GeodesicSystem) -> Result<Value> {
    let mut problems = Vec::new();
    let mut curves = Vec::new();
    for g in &system.germs {
        let dim = g.blocks().dimension();
        let bumpy = g.is_bumpy();
        let sign = g.mean_index_sign()?;
        let bott = if sign == Ordering::Greater {
            g.is_bott_positive()?
        } else {
            false
        };
        if dim != 4 {
            problems.push(format!("{}: block dimension {dim}, expected 4", g.name()));
        }
        if !bumpy {
            problems.push(format!("{} is not bumpy", g.name()));
        }
        if g.initial_index() < 1 {
            problems.push(format!("{} has index {} < 1", g.name(), g.initial_index()));
        }
        if sign != Ordering::Greater {
            problems.push(format!("{} has non-positive mean index", g.name()));
        } else if !bott {
            problems.push(format!("{} has an iterate of index below i(c)", g.name()));
        }
        curves.push(json!({
            "name": g.name(),
            "initial_index": g.initial_index(),
            "mean_index": g.mean_index().to_string(),
            "bumpy": bumpy,
            "bott_positive": bott,
        }));
    }
    if !problems.is_empty() {
        return Err(AnosovError::Admissibility(problems.join("; ")));
    }
    Ok(json!({ "curves": curves }))
}

/// Result of classifying the index parities.
#[derive(Debug, Clone, PartialEq)]
pub enum Screen {
    /// `i(c₁) = 1`, the other two even; position of c₁.
    Proceed {
        odd: usize,
    },
    /// Two odd and one even index; position of the even curve.
    TwoOdd {
        even: usize,
    },
    Final(Verdict, Value),
}

pub fn classify_parities(system: &GeodesicSystem) -> Screen {
    let idx: Vec<i64> = system.germs.iter().map(IndexGerm::initial_index).collect();
    let odd: Vec<usize> = (0..idx.len())
        .filter(|&k| idx[k].rem_euclid(2) == 1)
        .collect();
    let w = json!({ "indices": idx, "odd_positions": odd });
    if idx.len() != 3 {
        return Screen::Final(Verdict::Inconclusive(labels::OUTSIDE.into()), w);
    }
    match odd.len() {
        1 if idx[odd[0]] == 1 => Screen::Proceed { odd: odd[0] },
        2 => Screen::TwoOdd {
            even: (0..3).find(|k| !odd.contains(k)).expect("one even index"),
        },
        // only odd degrees receive contributions, so M_2 = 0 < b_2 = 1
        3 => Screen::Final(
            Verdict::Contradiction(labels::NO_EVEN_INDEX.into()),
            json!({ "indices": idx, "M_2": 0, "b_2": betti(2) }),
        ),
        _ => Screen::Final(Verdict::Inconclusive(labels::OUTSIDE.into()), w),
    }
}

/// Runs the parity screen. For two odd indices and one even, searches a
/// certificate for the even curve and shows `M_{2N} ≤ 1 < b_{2N}`.
pub fn screen_parities(
    system: &GeodesicSystem,
    budget: &SearchBudget,
) -> Result<(Screen, Option<Stage>)> {
    let screen = classify_parities(system);
    match &screen {
        Screen::Proceed { odd } => {
            let w = json!({ "pattern": "(1, even, even)", "odd_curve": system.germs[*odd].name() });
            Ok((
                screen.clone(),
                Some(stage("parity-screen", Verdict::Proceed, w)),
            ))
        }
        Screen::Final(v, w) => Ok((
            screen.clone(),
            Some(stage("parity-screen", v.clone(), w.clone())),
        )),
        Screen::TwoOdd { even } => {
            let g = system.germs[*even].clone();
            let mut problem = build_problem(
                std::slice::from_ref(&g),
                budget.delta.clone(),
                Some(budget.epsilon.clone()),
                budget.m0,
            )?;
            if let Some(mb) = budget.mbar_override {
                problem.set_mbar(mb);
            }
            let cert = problem.search(budget.n_min.max(2), budget.n_max)?;
            let st = lemma42_stage(system, &problem, &cert)?;
            Ok((screen, Some(st)))
        }
    }
}

fn lemma42_stage(
    system: &GeodesicSystem,
    problem: &JumpProblem,
    cert: &JumpCertificate,
) -> Result<Stage> {
    let g = &problem.germs()[0];
    verify_t34(problem, cert)?.into_result()?;
    verify_t36(problem.germs(), cert, problem.mbar())?.into_result()?;
    let (_, l41) = verify_lemma41(problem.germs(), cert, problem.mbar())?;
    let n2 = 2 * cert.n as i64;
    let m = cert.curves[0].m;
    // odd-index curves only reach odd degrees; the even curve reaches 2N
    // at most through its 2m-th iterate
    let mut m_2n = 0u64;
    for k in 1..=2 * m {
        let idx = g.index_at(k)?;
        if idx == n2 && (idx - g.initial_index()).rem_euclid(2) == 0 {
            m_2n += 1;
        }
    }
    let b = betti(n2);
    let verdict = if m_2n < b {
        Verdict::Contradiction(labels::LEMMA_4_2.into())
    } else {
        Verdict::Consistent
    };
    let w = json!({
        "pattern": "(odd, odd, even)",
        "even_curve": g.name(),
        "odd_curves": system.germs.iter().filter(|x| x.name() != g.name()).map(|x| x.name()).collect::<Vec<_>>(),
        "certificate": cert,
        "mbar": problem.mbar(),
        "top_index": g.index_at(2 * m)?,
        "M_2N": m_2n,
        "b_2N": b,
        "index_bounds": l41,
    });
    Ok(stage("parity-screen", verdict, w))
}

fn stage(name: &str, verdict: Verdict, witness: Value) -> Stage {
    Stage {
        name: name.to_string(),
        verdict,
        witness,
    }
}

/// Verifies `i(c^{2m_k−m}) ≤ 2N − i(c)` for `1 ≤ m < 2m_k` and
/// `i(c^{2m_k+m}) ≥ 2N + i(c)` for all `m ≥ 1`: directly up to m̄, then
/// through `i(c^m) ≥ i(c) + 4` beyond m̄ with `0 ≤ Δ ≤ C ≤ 2`.
pub fn verify_lemma41(
    germs: &[IndexGerm],
    cert: &JumpCertificate,
    mbar: u64,
) -> Result<(TruncationBound, Value)> {
    if germs.len() != cert.curves.len() {
        return Err(AnosovError::Inconsistent(
            "certificate does not match the system".into(),
        ));
    }
    let n2 = 2 * cert.n as i64;
    let mut out = Vec::new();
    for (g, c) in germs.iter().zip(&cert.curves) {
        let i1 = g.initial_index();
        let mk = c.m;
        let mut max_back = i64::MIN;
        for m in 1..2 * mk {
            let v = g.index_at(2 * mk - m)?;
            if v > n2 - i1 {
                return Err(AnosovError::Lemma41Violation {
                    curve: g.name().into(),
                    m,
                    detail: format!("i(c^(2m_k-m)) = {v} > 2N - i(c) = {}", n2 - i1),
                });
            }
            max_back = max_back.max(v);
        }
        let mut min_fwd = i64::MAX;
        for m in 1..=mbar {
            let v = g.index_at(2 * mk + m)?;
            if v < n2 + i1 {
                return Err(AnosovError::Lemma41Violation {
                    curve: g.name().into(),
                    m,
                    detail: format!("i(c^(2m_k+m)) = {v} < 2N + i(c) = {}", n2 + i1),
                });
            }
            min_fwd = min_fwd.min(v);
        }
        // beyond m̄: i(c^m) ≥ i(c) + 4 needs m̄ ≥ m₀ of this curve
        let own = g.mbar()?;
        let cc = g.big_c();
        let d = c.delta as i64;
        let side = own <= mbar && 0 <= d && d <= cc && cc <= 2 && g.s_plus() == 0;
        if !side {
            return Err(AnosovError::Lemma41Violation {
                curve: g.name().into(),
                m: mbar + 1,
                detail: format!("tail bound needs m0 = {own} <= m̄ = {mbar}, 0 <= Δ = {d} <= C = {cc} <= 2, S+ = 0"),
            });
        }
        out.push(json!({
            "name": g.name(),
            "m": mk,
            "max_backward_index": if mk > 0 && 2 * mk > 1 { Some(max_back) } else { None },
            "backward_bound": n2 - i1,
            "min_forward_index_to_mbar": min_fwd,
            "forward_bound": n2 + i1,
            "m0": own,
            "Delta": d,
            "C": cc,
        }));
    }
    Ok((
        TruncationBound::new(cert.n, cert.iterates()),
        json!({ "N": cert.n, "mbar": mbar, "curves": out }),
    ))
}

/// `i(c_k^{2m_k})` of the even curves must equal 2N.
pub fn forced_top_indices(germs: &[IndexGerm], cert: &JumpCertificate) -> Result<(Verdict, Value)> {
    let n2 = 2 * cert.n as i64;
    let mut rows = Vec::new();
    let mut failing = Vec::new();
    for (g, c) in germs.iter().zip(&cert.curves) {
        let top = g.index_at(2 * c.m)?;
        let formula = n2 - (g.s_plus() + g.big_c() - 2 * c.delta as i64);
        if top != formula {
            return Err(AnosovError::Inconsistent(format!(
                "i(c^(2m)) = {top} for {} but the jump formula gives {formula}",
                g.name()
            )));
        }
        let even = g.initial_index().rem_euclid(2) == 0;
        if even && top != n2 {
            failing.push(g.name().to_string());
        }
        rows.push(json!({ "name": g.name(), "initial_index": g.initial_index(), "top_index": top, "even": even }));
    }
    let verdict = if failing.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Contradiction(labels::FORCED_TOPS.into())
    };
    Ok((
        verdict,
        json!({ "N": cert.n, "2N": n2, "curves": rows, "failing": failing, "b_2N": betti(n2) }),
    ))
}

/// Numbers entering the sandwich for one certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sandwich {
    pub n: u64,
    pub s: i64,
    pub gammas: Vec<String>,
    pub e_2n: u32,
    pub o_2n: u32,
    pub e_2n_minus_1: u32,
    pub o_2n_minus_1: u32,
    pub morse_alt_2n: i64,
    pub morse_alt_2n_minus_1: i64,
    pub betti_alt_2n: i64,
    pub betti_alt_2n_minus_1: i64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub chain_holds: bool,
}

/// `S = Σ 2m_kγ_k`, checked to be an integer.
pub fn euler_sum(germs: &[IndexGerm], cert: &JumpCertificate) -> Result<(i64, Vec<BigRational>)> {
    let mut s = int(0);
    let mut gammas = Vec::new();
    for (g, c) in germs.iter().zip(&cert.curves) {
        let gamma = gamma_invariant(g.initial_index(), g.index_at(2)?);
        s += &gamma * int(2 * c.m as i64);
        gammas.push(gamma);
    }
    if !s.is_integer() {
        return Err(AnosovError::Inconsistent(format!(
            "S = {} is not an integer",
            fmt_rational(&s)
        )));
    }
    let s = s
        .to_integer()
        .to_i64()
        .ok_or_else(|| AnosovError::Inconsistent("S overflows".into()))?;
    Ok((s, gammas))
}

pub fn sandwich(
    germs: &[IndexGerm],
    cert: &JumpCertificate,
    bound: &TruncationBound,
) -> Result<(Verdict, Sandwich)> {
    let n2 = 2 * cert.n as i64;
    let (s, gammas) = euler_sum(germs, cert)?;
    let mut euler_total = 0i64;
    for (g, c) in germs.iter().zip(&cert.curves) {
        let (lhs, rhs) = euler_block_identity(g, c.m)?;
        if int(lhs) != rhs {
            return Err(AnosovError::Inconsistent(format!(
                "alternating count {lhs} != 2mγ = {} for {}",
                fmt_rational(&rhs),
                g.name()
            )));
        }
        euler_total += lhs;
    }
    let (e_2n, o_2n) = parity_counts(germs, cert, n2)?;
    let (e_2n1, o_2n1) = parity_counts(germs, cert, n2 - 1)?;
    let counts = morse_numbers_up_to(germs, cert, n2, Some(bound))?;
    let alt_2n = counts.alternating_sum(n2);
    let alt_2n1 = counts.alternating_sum(n2 - 1);
    if euler_total != alt_2n + e_2n as i64 - o_2n as i64
        || euler_total != alt_2n1 + e_2n1 as i64 - o_2n1 as i64
    {
        return Err(AnosovError::Inconsistent(format!(
            "truncated Euler sums disagree: {euler_total} vs {alt_2n}+{e_2n}-{o_2n} and {alt_2n1}+{e_2n1}-{o_2n1}"
        )));
    }
    let lower = s - e_2n as i64 + o_2n as i64 >= n2 - 1;
    let upper = s - e_2n1 as i64 + o_2n1 as i64 <= n2 - 3;
    let chain = n2 - 2 <= s && s <= n2 - 1;
    let data = Sandwich {
        n: cert.n,
        s,
        gammas: gammas.iter().map(fmt_rational).collect(),
        e_2n,
        o_2n,
        e_2n_minus_1: e_2n1,
        o_2n_minus_1: o_2n1,
        morse_alt_2n: alt_2n,
        morse_alt_2n_minus_1: alt_2n1,
        betti_alt_2n: betti_alternating(n2),
        betti_alt_2n_minus_1: betti_alternating(n2 - 1),
        lower_holds: lower,
        upper_holds: upper,
        chain_holds: chain,
    };
    let verdict = if lower && upper && chain {
        Verdict::Pass
    } else {
        Verdict::Contradiction(labels::SANDWICH.into())
    };
    Ok((verdict, data))
}

/// Compares `Ŝ = Σ 2m̂_kγ_k` with the window `[8N−2, 8N−1]` that the
/// sandwich forces after scaling by 4.
pub fn mod4_contradiction(n: u64, s: i64, s_hat: i64, p_hat: u64) -> (Verdict, Value) {
    let n_hat = p_hat as i64 * n as i64;
    let (lo, hi) = (2 * n_hat - 2, 2 * n_hat - 1);
    let scaled_ok = s_hat == p_hat as i64 * s;
    let inside = lo <= s_hat && s_hat <= hi;
    let verdict = if scaled_ok && !inside {
        Verdict::Contradiction(labels::MOD4.into())
    } else if !scaled_ok {
        Verdict::Contradiction(format!("{} scaling", labels::MOD4))
    } else {
        Verdict::Consistent
    };
    let w = json!({
        "N": n,
        "p_hat": p_hat,
        "S": s,
        "S_hat": s_hat,
        "S_hat_equals_p_hat_S": scaled_ok,
        "window": [lo, hi],
        "window_mod_4": [lo.rem_euclid(4), hi.rem_euclid(4)],
        "S_hat_mod_4": s_hat.rem_euclid(4),
    });
    (verdict, w)
}

/// Runs every stage in order and stops at the first final verdict.
pub fn run_pipeline(system: &GeodesicSystem, budget: &SearchBudget) -> Result<ImpossibilityReport> {
    let mut stages = vec![stage(
        "admissibility",
        Verdict::Pass,
        admissibility(system)?,
    )];
    let (screen, st) = screen_parities(system, budget)?;
    if let Some(st) = st {
        let fin = st.verdict.clone();
        stages.push(st);
        if !matches!(screen, Screen::Proceed { .. }) {
            return Ok(report(system, stages, fin));
        }
    }
    let mbar = match budget.mbar_override {
        Some(m) => m,
        None => system_mbar(&system.germs)?,
    };
    let per: Vec<Value> = system
        .germs
        .iter()
        .map(|g| Ok(json!({ "name": g.name(), "m0": g.mbar()? })))
        .collect::<Result<_>>()?;
    stages.push(stage(
        "mbar",
        Verdict::Pass,
        json!({ "mbar": mbar, "curves": per }),
    ));

    let p = int(budget.p_hat as i64);
    let mut problem = build_problem(
        &system.germs,
        &budget.delta / &p,
        Some(&budget.epsilon / &p),
        budget.m0,
    )?;
    problem.set_mbar(mbar);
    let cert = problem.search(budget.n_min.max(2), budget.n_max)?;
    stages.push(stage(
        "jump-search",
        Verdict::Pass,
        json!({
            "certificate": cert,
            "delta": fmt_rational(problem.delta()),
            "epsilon": fmt_rational(problem.epsilon()),
            "p_hat": budget.p_hat,
            "mbar": mbar,
            "n_min": budget.n_min.max(2),
            "n_max": budget.n_max,
        }),
    ));
    continue_from_certificate(system, &problem, &cert, budget.p_hat, stages)
}

/// Verifies a certificate and runs the stages that follow the search.
pub fn continue_from_certificate(
    system: &GeodesicSystem,
    problem: &JumpProblem,
    cert: &JumpCertificate,
    p_hat: u64,
    mut stages: Vec<Stage>,
) -> Result<ImpossibilityReport> {
    let germs = problem.germs();
    let mbar = problem.mbar();
    let t34 = verify_t34(problem, cert)?.into_result()?;
    let t36 = verify_t36(germs, cert, mbar)?.into_result()?;
    stages.push(stage(
        "jump-verification",
        Verdict::Pass,
        json!({ "diophantine_checks": t34.checks.len(), "iteration_checks": t36.checks.len() }),
    ));

    let (bound, l41) = verify_lemma41(germs, cert, mbar)?;
    stages.push(stage("index-bounds", Verdict::Pass, l41));

    let (v, w) = forced_top_indices(germs, cert)?;
    let stop = v.is_final();
    stages.push(stage("forced-top-indices", v.clone(), w));
    if stop {
        return Ok(report(system, stages, v));
    }

    let (v, base) = sandwich(germs, cert, &bound)?;
    let stop = v.is_final();
    stages.push(stage(
        "sandwich",
        v.clone(),
        serde_json::to_value(&base).expect("plain data"),
    ));
    if stop {
        return Ok(report(system, stages, v));
    }

    let scaled = problem.scale(cert, p_hat)?;
    let sc = scaled.scaled.clone();
    stages.push(stage(
        "scale",
        Verdict::Pass,
        json!({
            "p_hat": p_hat,
            "certificate": sc,
            "identity_checks": scaled.ledger.checks.len(),
            "identities_hold": scaled.ledger.passed(),
        }),
    ));
    scaled.ledger.clone().into_result()?;

    let (_, l41) = verify_lemma41(germs, &sc, mbar)?;
    stages.push(stage("scaled-index-bounds", Verdict::Pass, l41));

    let (v, w) = forced_top_indices(germs, &sc)?;
    let stop = v.is_final();
    stages.push(stage("scaled-forced-top-indices", v.clone(), w));
    if stop {
        return Ok(report(system, stages, v));
    }

    let (s_hat, _) = euler_sum(germs, &sc)?;
    let n2 = 2 * sc.n as i64;
    stages.push(stage(
        "scaled-sandwich",
        Verdict::Derived,
        json!({ "N_hat": sc.n, "window": [n2 - 2, n2 - 1], "S_hat": s_hat }),
    ));

    let (v, w) = mod4_contradiction(cert.n, base.s, s_hat, p_hat);
    stages.push(stage("mod-4", v.clone(), w));
    let fin = if v.is_final() { v } else { Verdict::Consistent };
    Ok(report(system, stages, fin))
}

fn report(
    system: &GeodesicSystem,
    stages: Vec<Stage>,
    final_verdict: Verdict,
) -> ImpossibilityReport {
    ImpossibilityReport {
        system: system.source.clone(),
        stages,
        final_verdict,
    }
}

/// Re-derives a report from its embedded system and certificate without
/// searching, and returns the re-derived report. The caller compares it
/// with the original.
pub fn replay(
    report: &ImpossibilityReport,
    fallback: PrecisionBudget,
) -> Result<ImpossibilityReport> {
    let system = GeodesicSystem::new(report.system.clone(), fallback)?;
    let field = |st: &Stage, key: &str| -> Result<Value> {
        st.witness
            .get(key)
            .cloned()
            .ok_or_else(|| AnosovError::Replay(format!("stage {} lacks {key}", st.name)))
    };
    let cert_of = |v: Value| -> Result<JumpCertificate> {
        serde_json::from_value(v).map_err(|e| AnosovError::Replay(e.to_string()))
    };
    let rational = |v: Value| -> Result<BigRational> {
        v.as_str()
            .and_then(|s| crate::exact::parse_rational(s).ok())
            .ok_or_else(|| AnosovError::Replay(format!("bad rational {v}")))
    };
    let u64_of = |v: Value| {
        v.as_u64()
            .ok_or_else(|| AnosovError::Replay(format!("bad integer {v}")))
    };

    let mut stages = vec![stage(
        "admissibility",
        Verdict::Pass,
        admissibility(&system)?,
    )];
    let screen = classify_parities(&system);
    match screen {
        Screen::Final(v, w) => {
            stages.push(stage("parity-screen", v.clone(), w));
            Ok(ImpossibilityReport {
                system: report.system.clone(),
                stages,
                final_verdict: v,
            })
        }
        Screen::TwoOdd { even } => {
            let st = report
                .stage("parity-screen")
                .ok_or_else(|| AnosovError::Replay("missing parity-screen stage".into()))?;
            let cert = cert_of(field(st, "certificate")?)?;
            let g = system.germs[even].clone();
            let mut problem = build_problem(
                std::slice::from_ref(&g),
                cert.delta.clone(),
                Some(cert.epsilon.clone()),
                cert.m0,
            )?;
            problem.set_mbar(u64_of(field(st, "mbar")?)?);
            let st = lemma42_stage(&system, &problem, &cert)?;
            let fin = st.verdict.clone();
            stages.push(st);
            Ok(ImpossibilityReport {
                system: report.system.clone(),
                stages,
                final_verdict: fin,
            })
        }
        Screen::Proceed { odd } => {
            let w = json!({ "pattern": "(1, even, even)", "odd_curve": system.germs[odd].name() });
            stages.push(stage("parity-screen", Verdict::Proceed, w));
            let mb = report
                .stage("mbar")
                .ok_or_else(|| AnosovError::Replay("missing mbar stage".into()))?;
            stages.push(mb.clone());
            let st = report
                .stage("jump-search")
                .ok_or_else(|| AnosovError::Replay("missing jump-search stage".into()))?;
            let cert = cert_of(field(st, "certificate")?)?;
            let mut problem = build_problem(
                &system.germs,
                rational(field(st, "delta")?)?,
                Some(rational(field(st, "epsilon")?)?),
                cert.m0,
            )?;
            problem.set_mbar(u64_of(field(st, "mbar")?)?);
            stages.push(st.clone());
            let p_hat = u64_of(field(st, "p_hat")?)?;
            continue_from_certificate(&system, &problem, &cert, p_hat, stages)
        }
    }
}
