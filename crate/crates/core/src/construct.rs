//! The block-schedule construction: derive per-block thresholds `L_n` from a
//! survival table, then build the alternating growth/critical schedule
//! `t_n, u_n, K_n` and the retention sequence it induces.
//!
//! The recursion, for a base mean `m > 1`:
//!
//! * `L_n`: least index from which `k * r_k` stays below `4^{-n}` for the
//!   rest of the table, with a trend check that the product is still falling
//!   over the final decade (evidence the inequality persists beyond the
//!   horizon).
//! * `t_1`: least integer with `m^{t_1 - 1} > 2 L_1`, so `K_1 = m^{t_1 - 1}`
//!   (the expected size of generation `t_1`) already exceeds `2 L_1`.
//! * `u_n = t_n + ceil(2^{-n} K_n)`; retention is `1/m` on `[t_n, u_n)` and
//!   1 elsewhere, so the expected generation size is frozen at `K_n` across
//!   the critical stretch.
//! * `t_{n+1}`: least integer `k > u_n` with `K_n m^{k - u_n} > 2^{n+1} L_{n+1}`,
//!   which forces `K_{n+1} > 2^{n+1} L_{n+1}`.
//!
//! `K_n = m^{e_n}` is kept as an exact integer exponent over `m`. Since any
//! finite `m` is a dyadic rational, `ceil(2^{-n} K_n)` and every comparison
//! in the recursion are evaluated exactly in big-integer arithmetic; no
//! floating-point guard bands are involved. Generation indices are
//! arbitrary-precision integers.

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, NotCertifiableCause, Result};
use crate::numeric::{ceil_shifted, ln_biguint, Dyadic};
use crate::offspring::OffspringLaw;
use crate::survival::SurvivalTable;

/// Relative slack allowed when checking that `k * r_k` is nonincreasing;
/// covers benign last-ulp wobble in otherwise smooth tables.
const TREND_SLACK: f64 = 1e-12;

/// One block of the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    /// Block number `n`, 1-based.
    pub index: u32,
    /// Threshold index `L_n` certified from the survival table.
    pub l: u64,
    /// First critical generation.
    pub t: BigUint,
    /// First generation after the critical stretch; retention is `1/m` on
    /// `[t, u)`.
    pub u: BigUint,
    /// `u - t = ceil(2^{-n} K_n)`, the number of critical generations.
    pub crit_len: BigUint,
    /// Growth generations contributed ahead of this block: `t_1 - 1` for the
    /// first block (generations `1..t_1`), `t_n - u_{n-1}` afterwards.
    pub growth_gens: u64,
    /// Exponent `e_n` with `K_n = m^{e_n} = E Z_{t_n}` exactly.
    pub m_exponent: u64,
    /// `ln K_n`, for log-domain arithmetic.
    pub ln_k: f64,
}

/// A built schedule: the base mean, its blocks, and the retention pattern
/// they induce. Retentions are derived on lookup, never stored
/// per generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    m: f64,
    law_spec: String,
    blocks: Vec<BlockRecord>,
}

/// Expected generation size in log domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogMean {
    /// Number of growth generations contributing a factor `m`.
    pub growth_exponent: u64,
    pub ln: f64,
}

impl LogMean {
    /// The mean itself; may overflow to infinity, the log never does.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }
}

/// Least `L` such that `k * r_k < 4^{-block}` for every `k` in `[L, H]`,
/// certified by the additional requirement that `k * r_k` is nonincreasing
/// over the final decade of the table.
///
/// # Errors
/// `NotCertifiable` when the threshold is still violated at the horizon
/// (horizon too small, or the offspring variance is finite and `k * r_k`
/// converges to a positive constant) or when the trend check fails.
pub fn choose_l(table: &SurvivalTable, block: u32) -> Result<u64> {
    let h = table.horizon();
    if h == 0 {
        return Err(Error::NotCertifiable {
            block,
            cause: NotCertifiableCause::ThresholdNotMet {
                threshold: 0.25f64.powi(block as i32),
                value_at_horizon: f64::NAN,
                horizon: 0,
            },
        });
    }
    let threshold = 0.25f64.powi(block as i32);
    let mut last_violation = 0usize;
    for k in 1..=h {
        if k as f64 * table.r(k) >= threshold {
            last_violation = k;
        }
    }
    if last_violation >= h {
        return Err(Error::NotCertifiable {
            block,
            cause: NotCertifiableCause::ThresholdNotMet {
                threshold,
                value_at_horizon: h as f64 * table.r(h),
                horizon: h,
            },
        });
    }
    for k in (h / 10).max(1)..h {
        let here = k as f64 * table.r(k);
        let next = (k + 1) as f64 * table.r(k + 1);
        if next > here * (1.0 + TREND_SLACK) {
            return Err(Error::NotCertifiable {
                block,
                cause: NotCertifiableCause::TrendNotDecreasing { at: k + 1 },
            });
        }
    }
    Ok(last_violation as u64 + 1)
}

/// Builds `n_blocks` blocks of the schedule for the supercritical law `f`,
/// with thresholds certified from `table` (the survival table of the
/// criticalized law).
///
/// The caller is expected to have checked that `f` has infinite offspring
/// variance; with finite variance the construction fails at [`choose_l`]
/// with a `NotCertifiable` error naming the block.
pub fn build_schedule(
    f: &OffspringLaw,
    table: &SurvivalTable,
    n_blocks: u32,
) -> Result<Schedule> {
    let m = f.mean();
    if m <= 1.0 || m.is_nan() {
        return Err(Error::NotSupercritical(m));
    }
    if n_blocks == 0 {
        return Err(Error::Config("n_blocks must be at least 1".into()));
    }
    let dy = Dyadic::from_f64(m).expect("mean is finite and positive");
    let ln_m = m.ln();

    let l1 = choose_l(table, 1)?;
    // t_1 - 1 = least exponent e with m^e > 2 L_1
    let base_target = BigUint::from(2 * l1);
    let mut e: u64 = 0;
    while !dy.pow_gt(e, &base_target) {
        e += 1;
    }
    let mut t = BigUint::from(e + 1);
    let mut e_prev = 0u64;
    let mut blocks = Vec::with_capacity(n_blocks as usize);
    let mut l = l1;

    for n in 1..=n_blocks {
        let (mant, shift) = dy.pow(e);
        let crit_len = ceil_shifted(&mant, shift - n as i64);
        debug_assert!(crit_len > BigUint::from(l), "crit_len must exceed L_n");
        let u = &t + &crit_len;
        let growth_gens = e - e_prev;
        blocks.push(BlockRecord {
            index: n,
            l,
            t: t.clone(),
            u: u.clone(),
            crit_len,
            growth_gens,
            m_exponent: e,
            ln_k: e as f64 * ln_m,
        });
        if n < n_blocks {
            let l_next = choose_l(table, n + 1)?;
            // least delta >= 1 with m^{e + delta} > 2^{n+1} L_{n+1}
            let target = BigUint::from(l_next) << (n + 1);
            let est = ((ln_biguint(&target) - e as f64 * ln_m) / ln_m).floor() as i64;
            let mut delta = est.max(1) as u64;
            while delta > 1 && dy.pow_gt(e + delta - 1, &target) {
                delta -= 1;
            }
            while !dy.pow_gt(e + delta, &target) {
                delta += 1;
            }
            e_prev = e;
            e += delta;
            t = &u + BigUint::from(delta);
            l = l_next;
        }
    }
    Ok(Schedule {
        m,
        law_spec: f.to_string(),
        blocks,
    })
}

impl Schedule {
    /// Assembles a schedule from explicit blocks, validating the ordering
    /// and consistency invariants. Intended for synthetic schedules in
    /// tests and what-if analyses; [`build_schedule`] is the normal path.
    pub fn from_blocks(m: f64, law_spec: impl Into<String>, blocks: Vec<BlockRecord>) -> Result<Self> {
        if m <= 1.0 || m.is_nan() {
            return Err(Error::NotSupercritical(m));
        }
        let mut u_prev = BigUint::from(0u32);
        let mut e_prev = 0u64;
        for (i, b) in blocks.iter().enumerate() {
            let n = i as u32 + 1;
            if b.index != n {
                return Err(Error::Config(format!(
                    "block {} is out of order (index {})",
                    n, b.index
                )));
            }
            if b.t <= u_prev {
                return Err(Error::Config(format!(
                    "block {n}: t = {} does not exceed previous u = {u_prev}",
                    b.t
                )));
            }
            if &b.t + &b.crit_len != b.u {
                return Err(Error::Config(format!("block {n}: u != t + crit_len")));
            }
            // first block counts generations 1..t_1, later ones u_{n-1}..t_n
            let start = if n == 1 { BigUint::from(1u32) } else { u_prev.clone() };
            let gap = u64::try_from(&b.t - &start).map_err(|_| {
                Error::Config(format!("block {n}: growth stretch does not fit u64"))
            })?;
            if gap != b.growth_gens {
                return Err(Error::Config(format!(
                    "block {n}: growth_gens = {} but the growth stretch has {gap}",
                    b.growth_gens
                )));
            }
            if b.m_exponent != e_prev + gap {
                return Err(Error::Config(format!(
                    "block {n}: m_exponent = {} inconsistent with growth count {}",
                    b.m_exponent,
                    e_prev + gap
                )));
            }
            u_prev = b.u.clone();
            e_prev = b.m_exponent;
        }
        Ok(Schedule {
            m,
            law_spec: law_spec.into(),
            blocks,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn law_spec(&self) -> &str {
        &self.law_spec
    }

    pub fn blocks(&self) -> &[BlockRecord] {
        &self.blocks
    }

    /// Last generation with a determined retention: `u_{N_b}`. (Generation
    /// `u_{N_b}` itself is a growth generation under any continuation of
    /// the recursion, since the next block starts strictly after it.)
    pub fn span(&self) -> BigUint {
        self.blocks
            .last()
            .map(|b| b.u.clone())
            .unwrap_or_default()
    }

    pub fn span_u64(&self) -> Option<u64> {
        u64::try_from(self.span()).ok()
    }

    /// Retention `p_n`: `1/m` on the critical stretches `[t_j, u_j)`, 1 on
    /// the growth stretches. `O(log blocks)` lookup.
    pub fn retention_at(&self, n: u64) -> Result<f64> {
        let block = self.locate(n)?;
        match block {
            Some(b) if BigUint::from(n) < b.u => Ok(1.0 / self.m),
            _ => Ok(1.0),
        }
    }

    /// Expected size of generation `n` in log domain: constant `K_j` across
    /// `[t_j, u_j]`, multiplied by `m` for each growth generation after.
    pub fn mean_at(&self, n: u64) -> Result<LogMean> {
        let growth = match self.locate(n)? {
            None => n - 1,
            Some(b) => {
                if BigUint::from(n) <= b.u {
                    b.m_exponent
                } else {
                    let u = u64::try_from(&b.u).expect("u <= n so it fits u64");
                    b.m_exponent + (n - u)
                }
            }
        };
        Ok(LogMean {
            growth_exponent: growth,
            ln: growth as f64 * self.m.ln(),
        })
    }

    /// Number of growth generations in `[1, n]` (so the product
    /// `prod_{k<=n} m p_k` equals `m` to this power).
    pub fn growth_gens_through(&self, n: u64) -> Result<u64> {
        match self.locate(n)? {
            None => Ok(n),
            Some(b) => {
                if BigUint::from(n) < b.u {
                    Ok(b.m_exponent)
                } else {
                    let u = u64::try_from(&b.u).expect("u <= n so it fits u64");
                    Ok(b.m_exponent + (n - u) + 1)
                }
            }
        }
    }

    /// Last block with `t <= n`, or `None` when `n` precedes the first
    /// critical stretch. Errors when `n` is outside the built span.
    fn locate(&self, n: u64) -> Result<Option<&BlockRecord>> {
        if n < 1 || BigUint::from(n) > self.span() {
            return Err(Error::OutOfSpan {
                n,
                span: self.span().to_string(),
            });
        }
        let big = BigUint::from(n);
        let idx = self.blocks.partition_point(|b| b.t <= big);
        Ok(if idx == 0 {
            None
        } else {
            Some(&self.blocks[idx - 1])
        })
    }

    /// CSV export with columns `block,L,t,u,growth_gens,log10_K`; indices
    /// are exact decimal integers.
    pub fn csv_string(&self) -> String {
        let mut s = String::from("block,L,t,u,growth_gens,log10_K\n");
        for b in &self.blocks {
            let log10_k = b.m_exponent as f64 * self.m.log10();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                b.index, b.l, b.t, b.u, b.growth_gens, log10_k
            ));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Retention sources
// ---------------------------------------------------------------------------

/// Anything that supplies the retention sequence `p_1, p_2, ...`.
pub trait RetentionSource {
    /// Retention for generation `n >= 1`.
    fn retention(&self, n: u64) -> Result<f64>;

    /// Largest generation with a determined retention, when bounded.
    fn span_hint(&self) -> Option<u64>;
}

impl RetentionSource for Schedule {
    fn retention(&self, n: u64) -> Result<f64> {
        self.retention_at(n)
    }

    fn span_hint(&self) -> Option<u64> {
        self.span_u64()
    }
}

/// The same retention every generation.
#[derive(Debug, Clone, Copy)]
pub struct ConstantRetention(pub f64);

impl RetentionSource for ConstantRetention {
    fn retention(&self, _n: u64) -> Result<f64> {
        Ok(self.0)
    }

    fn span_hint(&self) -> Option<u64> {
        None
    }
}

/// An explicit list, 1-based.
impl RetentionSource for [f64] {
    fn retention(&self, n: u64) -> Result<f64> {
        usize::try_from(n)
            .ok()
            .filter(|&i| i >= 1 && i <= self.len())
            .map(|i| self[i - 1])
            .ok_or(Error::HorizonBeyondSpan {
                horizon: n,
                span: self.len().to_string(),
            })
    }

    fn span_hint(&self) -> Option<u64> {
        Some(self.len() as u64)
    }
}

impl RetentionSource for Vec<f64> {
    fn retention(&self, n: u64) -> Result<f64> {
        self.as_slice().retention(n)
    }

    fn span_hint(&self) -> Option<u64> {
        Some(self.len() as u64)
    }
}
