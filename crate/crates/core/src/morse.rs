//! Loop-space topology of S³: Betti numbers of (Λ̄S³, Λ̄⁰S³), critical
//! module dimensions of iterates, truncated Morse-type numbers and the
//! alternating-sum and parity-count bookkeeping built on them.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::exact::int;
use crate::iteration::{gamma_invariant, IndexGerm, IterationError};
use crate::jump::JumpCertificate;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MorseError {
    #[error(
        "Morse numbers up to degree {q_max} need an index bound verified for this certificate"
    )]
    TruncationUnsound { q_max: i64 },
    #[error("certificate does not fit the system: {0}")]
    InvalidCertificate(String),
    #[error(transparent)]
    Iteration(#[from] IterationError),
}

type Result<T> = std::result::Result<T, MorseError>;

/// `b_q(Λ̄S³, Λ̄⁰S³)`.
pub fn betti(q: i64) -> u64 {
    match q {
        2 => 1,
        q if q >= 4 && q % 2 == 0 => 2,
        _ => 0,
    }
}

/// `Σ_{i=1}^{top} (−1)^i b_i`.
pub fn betti_alternating(top: i64) -> i64 {
    if top < 2 {
        0
    } else {
        1 + 2 * (top / 2 - 1)
    }
}

/// `Σ_{i=0}^{q} (−1)^{q−i} b_i`, the right side of the strong Morse
/// inequality in degree q.
pub fn betti_strong(q: i64) -> i64 {
    let s = betti_alternating(q);
    if q % 2 == 0 {
        s
    } else {
        -s
    }
}

/// Dimension of the critical module of `c^m` in degree q, together with
/// whether `c^m` is degenerate (where the dimension formula is not
/// guaranteed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CriticalDim {
    pub value: u8,
    pub degenerate: bool,
}

pub fn critical_dim(
    germ: &IndexGerm,
    m: u64,
    q: i64,
) -> std::result::Result<CriticalDim, IterationError> {
    let idx = germ.index_at(m)?;
    let value = u8::from(q == idx && (idx - germ.initial_index()).rem_euclid(2) == 0);
    Ok(CriticalDim {
        value,
        degenerate: germ.nullity_at(m)? > 0,
    })
}

/// Evidence that, for a given certificate, iterates `c_k^m` with
/// `m > 2m_k` have index at least `2N + i(c_k)`, so that Morse numbers in
/// degrees up to 2N only see `m ≤ 2m_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationBound {
    n: u64,
    iterates: Vec<u64>,
}

impl TruncationBound {
    pub(crate) fn new(n: u64, iterates: Vec<u64>) -> Self {
        TruncationBound { n, iterates }
    }

    pub fn covers(&self, cert: &JumpCertificate) -> bool {
        self.n == cert.n && self.iterates == cert.iterates()
    }
}

/// Morse-type numbers `M_q` for `q ≤ q_max`, stored sparsely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MorseCounts {
    pub q_max: i64,
    pub counts: BTreeMap<i64, u64>,
}

impl MorseCounts {
    pub fn empty(q_max: i64) -> Self {
        MorseCounts {
            q_max,
            counts: BTreeMap::new(),
        }
    }

    pub fn get(&self, q: i64) -> u64 {
        self.counts.get(&q).copied().unwrap_or(0)
    }

    /// `Σ_{i=1}^{top} (−1)^i M_i`.
    pub fn alternating_sum(&self, top: i64) -> i64 {
        assert!(
            top <= self.q_max,
            "degree {top} beyond the truncation {}",
            self.q_max
        );
        self.counts
            .range(1..=top)
            .map(|(&q, &c)| if q % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }

    /// `(Σ_{i≤q} (−1)^{q−i} M_i, Σ_{i≤q} (−1)^{q−i} b_i)`.
    pub fn strong_inequality(&self, q: i64) -> (i64, i64) {
        let lhs = self.alternating_sum(q) + self.counts.get(&0).map_or(0, |&c| c as i64);
        let lhs = if q % 2 == 0 { lhs } else { -lhs };
        (lhs, betti_strong(q))
    }

    /// Degrees `q ≤ top` with `M_q < b_q`.
    pub fn weak_violations(&self, top: i64) -> Vec<i64> {
        (2..=top.min(self.q_max))
            .step_by(2)
            .filter(|&q| self.get(q) < betti(q))
            .collect()
    }
}

fn check_fits(system: &[IndexGerm], cert: &JumpCertificate) -> Result<()> {
    if system.len() != cert.curves.len() {
        return Err(MorseError::InvalidCertificate(format!(
            "{} curves in certificate, {} in system",
            cert.curves.len(),
            system.len()
        )));
    }
    Ok(())
}

/// `M_q = Σ_k Σ_{m=1}^{2m_k} dim C̄_q(E, c_k^m)` for `q ≤ q_max ≤ 2N`.
pub fn morse_numbers_up_to(
    system: &[IndexGerm],
    cert: &JumpCertificate,
    q_max: i64,
    bound: Option<&TruncationBound>,
) -> Result<MorseCounts> {
    check_fits(system, cert)?;
    match bound {
        Some(b) if b.covers(cert) && q_max <= 2 * cert.n as i64 => {}
        _ => return Err(MorseError::TruncationUnsound { q_max }),
    }
    let mut out = MorseCounts::empty(q_max);
    for (g, c) in system.iter().zip(&cert.curves) {
        for m in 1..=2 * c.m {
            let idx = g.index_at(m)?;
            if idx <= q_max && (idx - g.initial_index()).rem_euclid(2) == 0 {
                *out.counts.entry(idx).or_insert(0) += 1;
            }
        }
    }
    Ok(out)
}

/// `(Σ_{m=1}^{2m_k} (−1)^{i(c^m)} dim C̄_{i(c^m)}(E,c^m), 2m_k γ_c)`.
pub fn euler_block_identity(
    germ: &IndexGerm,
    m_k: u64,
) -> std::result::Result<(i64, BigRational), IterationError> {
    let i1 = germ.initial_index();
    let mut lhs = 0i64;
    for m in 1..=2 * m_k {
        let idx = germ.index_at(m)?;
        if (idx - i1).rem_euclid(2) == 0 {
            lhs += if idx.rem_euclid(2) == 0 { 1 } else { -1 };
        }
    }
    let gamma = gamma_invariant(i1, germ.index_at(2)?);
    Ok((lhs, gamma * int(2 * m_k as i64)))
}

/// `(n_+^e, n_+^o)` from pairs `(i(c_k), i(c_k^{2m_k}))`.
pub fn parity_counts_from_tops(tops: &[(i64, i64)], n: i64) -> (u32, u32) {
    let mut e = 0;
    let mut o = 0;
    for &(i1, top) in tops {
        if top > n && (top - i1).rem_euclid(2) == 0 {
            if i1.rem_euclid(2) == 0 {
                e += 1;
            } else {
                o += 1;
            }
        }
    }
    (e, o)
}

pub fn parity_counts(system: &[IndexGerm], cert: &JumpCertificate, n: i64) -> Result<(u32, u32)> {
    check_fits(system, cert)?;
    let tops = system
        .iter()
        .zip(&cert.curves)
        .map(|(g, c)| Ok((g.initial_index(), g.index_at(2 * c.m)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(parity_counts_from_tops(&tops, n))
}
