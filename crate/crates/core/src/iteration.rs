//! Index iteration of symplectic path germs: i(γ,m), ν(γ,m), î and m̄.

use std::cmp::Ordering;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{
    ceil_q, certified_sign, int, rat, ArithError, Enclosure, MultipleFloors, PrecisionBudget,
    RealExpr,
};
use crate::normal_forms::{big_c, nullity_contribution, BlockList, NormalFormError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IterationError {
    #[error("mean index of {germ} is not positive, so no finite m̄ exists")]
    Unbounded { germ: String },
    #[error("cannot certify the sign of the mean index of {germ}")]
    UnresolvedSign { germ: String },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

type Result<T> = std::result::Result<T, IterationError>;

/// A path germ: the index of the first iterate and the ⋄-decomposition of
/// its end matrix.
#[derive(Debug, Clone)]
pub struct IndexGerm {
    name: String,
    i1: i64,
    blocks: BlockList,
    budget: PrecisionBudget,
    s_plus: i64,
    c: i64,
    /// `(θ/2π, S⁻)` per unit-circle point other than 1.
    floors: Vec<(MultipleFloors, i64)>,
    mean: RealExpr,
}

impl IndexGerm {
    pub fn new(
        name: impl Into<String>,
        i1: i64,
        blocks: BlockList,
        budget: PrecisionBudget,
    ) -> Self {
        let s_plus = i64::from(blocks.s_plus_at_one());
        let c = i64::from(big_c(&blocks));
        let minus = blocks.minus_points();
        let mut mean = RealExpr::constant(int(i1 + s_plus - c));
        let mut floors = Vec::with_capacity(minus.len());
        for (angle, s) in minus {
            mean = mean.add(&angle.scale(&int(i64::from(s))));
            floors.push((
                MultipleFloors::new(angle.scale(&rat(1, 2)), budget),
                i64::from(s),
            ));
        }
        IndexGerm {
            name: name.into(),
            i1,
            blocks,
            budget,
            s_plus,
            c,
            floors,
            mean,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn initial_index(&self) -> i64 {
        self.i1
    }

    pub fn blocks(&self) -> &BlockList {
        &self.blocks
    }

    pub fn budget(&self) -> &PrecisionBudget {
        &self.budget
    }

    /// `S⁺_M(1)`.
    pub fn s_plus(&self) -> i64 {
        self.s_plus
    }

    /// `C(M)`.
    pub fn big_c(&self) -> i64 {
        self.c
    }

    /// `i₁ + S⁺_M(1) − C(M)`.
    pub fn linear_part(&self) -> i64 {
        self.i1 + self.s_plus - self.c
    }

    /// Angles θ/π of the points e^{iθ} with `S⁻ > 0`, with multiplicity.
    pub fn minus_angles(&self) -> Vec<(RealExpr, i64)> {
        self.blocks
            .minus_points()
            .into_iter()
            .map(|(a, s)| (a, i64::from(s)))
            .collect()
    }

    /// `î(γ,1)` kept symbolic in the irrational angle atoms.
    pub fn mean_index(&self) -> &RealExpr {
        &self.mean
    }

    pub fn mean_index_sign(&self) -> Result<Ordering> {
        certified_sign(&self.mean, &self.budget).map_err(|_| IterationError::UnresolvedSign {
            germ: self.name.clone(),
        })
    }

    pub fn index_at(&self, m: u64) -> Result<i64> {
        assert!(m >= 1, "iteration count starts at 1");
        let m = m as i64;
        let mut total = m * self.linear_part() - (self.s_plus + self.c);
        for (f, s) in &self.floors {
            total += 2 * s * f.ceil_at(m)?;
        }
        Ok(total)
    }

    pub fn nullity_at(&self, m: u64) -> Result<u32> {
        self.blocks
            .blocks()
            .iter()
            .map(|b| Ok(nullity_contribution(b, m, &self.budget)?))
            .sum()
    }

    /// `(S⁺ + C, C − S⁺)`: `−(S⁺+C) ≤ i(γ,m) − m·î < C − S⁺` for all m ≥ 1.
    pub fn deviation_bounds(&self) -> (i64, i64) {
        (self.s_plus + self.c, self.c - self.s_plus)
    }

    pub fn is_bumpy(&self) -> bool {
        self.blocks.is_bumpy_spectrum()
    }

    /// A positive rational lower bound for î, or `None` if î is not
    /// certifiably positive.
    pub fn mean_index_lower_bound(&self) -> Result<Option<BigRational>> {
        if self.mean_index_sign()? != Ordering::Greater {
            return Ok(None);
        }
        self.abs_mean_lower_bound()
    }

    /// A positive rational lower bound for |î|, or `None` if î = 0.
    pub fn abs_mean_lower_bound(&self) -> Result<Option<BigRational>> {
        if self.mean_index_sign()? == Ordering::Equal {
            return Ok(None);
        }
        for digits in self.budget.levels(self.mean.digits_available()) {
            if let Some(iv) = self.mean.enclose(digits) {
                if iv.lo.is_positive() {
                    return Ok(Some(iv.lo));
                }
                if iv.hi.is_negative() {
                    return Ok(Some(-iv.hi));
                }
            }
        }
        Ok(None)
    }

    /// A rational upper bound for |î|.
    pub fn abs_mean_upper_bound(&self) -> BigRational {
        let iv = self
            .mean
            .enclose(self.mean.digits_available().min(30))
            .expect("affine enclosures always exist");
        iv.lo.abs().max(iv.hi.abs())
    }

    /// Smallest `n` such that `n·î − (S⁺+C) ≥ target` is certified, i.e.
    /// `i(γ,m) ≥ target` for all `m ≥ n`.
    pub fn growth_horizon(&self, target: i64) -> Result<u64> {
        let lo = self
            .mean_index_lower_bound()?
            .ok_or_else(|| IterationError::Unbounded {
                germ: self.name.clone(),
            })?;
        let need = int(target + self.s_plus + self.c) / lo;
        Ok(ceil_q(&need)
            .max(BigInt::from(1))
            .to_u64()
            .unwrap_or(u64::MAX))
    }

    /// Least `m₀ ≥ 0` with `i(γ, m+m₀) ≥ i₁ + 4` for every `m ≥ 1`.
    pub fn mbar(&self) -> Result<u64> {
        let target = self.i1 + 4;
        let horizon = self.growth_horizon(target)?;
        let mut m0 = 0;
        for n in 1..=horizon {
            if self.index_at(n)? < target {
                m0 = n;
            }
        }
        Ok(m0)
    }

    /// m₀ for either sign of î: the least `m₀` with
    /// `ϱ·(i(γ, m+m₀) − i₁) ≥ 4` for every `m ≥ 1`, where ϱ is the sign of î.
    pub fn signed_mbar(&self) -> Result<u64> {
        match self.mean_index_sign()? {
            Ordering::Greater => self.mbar(),
            Ordering::Equal => Err(IterationError::Unbounded {
                germ: self.name.clone(),
            }),
            Ordering::Less => {
                let target = self.i1 - 4;
                let lo = self
                    .abs_mean_lower_bound()?
                    .ok_or_else(|| IterationError::Unbounded {
                        germ: self.name.clone(),
                    })?;
                // i(γ,n) < n·î + C − S⁺ ≤ target once n·|î| ≥ C − S⁺ − target
                let need = int(self.c - self.s_plus - target) / lo;
                let horizon = ceil_q(&need)
                    .max(BigInt::from(1))
                    .to_u64()
                    .unwrap_or(u64::MAX);
                let mut m0 = 0;
                for n in 1..=horizon {
                    if self.index_at(n)? > target {
                        m0 = n;
                    }
                }
                Ok(m0)
            }
        }
    }

    /// `i(γ,m) ≥ i₁` for every `m ≥ 1`, checked directly up to the horizon
    /// past which the mean-index growth guarantees it.
    pub fn is_bott_positive(&self) -> Result<bool> {
        if self.mean_index_sign()? == Ordering::Less {
            return Ok(false);
        }
        let horizon = self.growth_horizon(self.i1)?;
        for m in 1..=horizon {
            if self.index_at(m)? < self.i1 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn profile(&self, range: RangeInclusive<u64>) -> Result<IndexProfile> {
        IndexProfile::compute(self, range)
    }
}

/// m̄ of a system: the maximum over germs of their individual m₀.
pub fn mbar(system: &[IndexGerm]) -> Result<u64> {
    system.iter().try_fold(0, |acc, g| Ok(acc.max(g.mbar()?)))
}

/// `γ_c` from `i(c)` and `i(c²)`: positive iff `i(c)` is even, of
/// magnitude 1 iff `i(c²) − i(c)` is even, else 1/2.
pub fn gamma_invariant(i1: i64, i2: i64) -> BigRational {
    let sign = if i1.rem_euclid(2) == 0 { 1 } else { -1 };
    if (i2 - i1).rem_euclid(2) == 0 {
        int(sign)
    } else {
        rat(sign, 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileEntry {
    pub m: u64,
    pub index: i64,
    pub nullity: u32,
}

/// `(i(γ,m), ν(γ,m))` over a range of iterates.
#[derive(Debug, Clone)]
pub struct IndexProfile {
    pub germ: String,
    pub entries: Vec<ProfileEntry>,
}

impl IndexProfile {
    pub fn compute(germ: &IndexGerm, range: RangeInclusive<u64>) -> Result<Self> {
        let entries = range
            .into_par_iter()
            .map(|m| {
                Ok(ProfileEntry {
                    m,
                    index: germ.index_at(m)?,
                    nullity: germ.nullity_at(m)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IndexProfile {
            germ: germ.name().to_string(),
            entries,
        })
    }

    pub fn get(&self, m: u64) -> Option<&ProfileEntry> {
        let first = self.entries.first()?.m;
        self.entries.get(m.checked_sub(first)? as usize)
    }

    /// First `m` at which `i(γ,m+2) − i(γ,m)` is odd, if any.
    pub fn parity_violation(&self) -> Option<u64> {
        self.entries
            .windows(3)
            .find(|w| (w[2].index - w[0].index).rem_euclid(2) != 0)
            .map(|w| w[0].m)
    }
}
