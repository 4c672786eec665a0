//! Certification of the two conditions a built schedule must satisfy:
//! summable reciprocal generation means, and extinction bounds per block.
//!
//! Condition (i). The sum of reciprocal means over the built span splits
//! into a growth part and a critical part. Each growth generation is the
//! `j`-th position with retention 1, where the running mean is exactly
//! `m^j`, so the growth part is a plain geometric sum. Across a critical
//! block the mean is frozen at `K_n`, contributing `(u_n - t_n) / K_n`.
//! Beyond the built blocks the per-block contributions are bounded by
//! `2^{-n} + m^{-n}` (because `u_n - t_n < 2^{-n} K_n + 1` and
//! `K_n^{-1} < m^{-n}`), and the unbuilt growth positions by the geometric
//! remainder, so the infinite tail is reported as a closed-form bound, kept
//! separate from the computed finite part.
//!
//! Condition (ii). For every block, `P(Z_{u_n} > 0) <= r_{u_n - t_n} K_n`,
//! and the construction forces that bound below `2^{-n}`. Both inequalities
//! are checked; within the generation budget the exact survival probability
//! is also computed by backward composition and checked against the bound.
//! A violated block aborts with a diagnostic dump: it contradicts the
//! construction and always indicates an implementation or input fault.

use num_bigint::BigUint;
use serde::Serialize;

use crate::construct::{RetentionSource, Schedule};
use crate::error::{Error, Result, ViolationDump, ViolationKind};
use crate::numeric::{ln_biguint, NeumaierSum};
use crate::offspring::OffspringLaw;
use crate::survival::{bpve_survival_exact_bounded, SurvivalTable};

/// Default cap on generations expanded by the brute-force evaluator.
pub const DEFAULT_BRUTEFORCE_BUDGET: u64 = 1_000_000;
/// Default cap on total generations composed exactly for condition (ii).
pub const DEFAULT_EXACT_BUDGET: u64 = 1_000_000;
/// Agreement required between the closed-form and brute-force evaluations.
pub const CROSS_CHECK_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CiStatus {
    Certified,
    NotFinite,
}

/// Condition (i) evidence: computed finite part plus a proven tail bound.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionI {
    pub growth_contribution: f64,
    pub critical_contribution: f64,
    /// `growth_contribution + critical_contribution`, the sum of reciprocal
    /// means over the built span.
    pub partial_sum: f64,
    /// Upper bound on everything beyond the built blocks.
    pub infinite_tail_bound: f64,
    pub total_upper_bound: f64,
    pub span: String,
    pub status: CiStatus,
}

/// Closed-form evaluation of the reciprocal-mean sum over the built span,
/// plus the infinite tail bound.
pub fn condition_i_closed_form(schedule: &Schedule) -> ConditionI {
    let m = schedule.m();
    let last = schedule.blocks().last().expect("schedule has blocks");
    let n_blocks = last.index;
    // the span u_{N_b} is itself a growth generation
    let growth_count = last.m_exponent + 1;
    let growth = geometric_sum(m, growth_count);
    let mut critical = NeumaierSum::new();
    for b in schedule.blocks() {
        critical.add((ln_biguint(&b.crit_len) - b.ln_k).exp());
    }
    let critical = critical.total();
    let partial = growth + critical;
    let ln_m = m.ln();
    let tail = 0.5f64.powi(n_blocks as i32)
        + (-(n_blocks as f64) * ln_m).exp() / (m - 1.0)
        + (-(growth_count as f64) * ln_m).exp() / (m - 1.0);
    let total = partial + tail;
    ConditionI {
        growth_contribution: growth,
        critical_contribution: critical,
        partial_sum: partial,
        infinite_tail_bound: tail,
        total_upper_bound: total,
        span: schedule.span().to_string(),
        status: if total.is_finite() {
            CiStatus::Certified
        } else {
            CiStatus::NotFinite
        },
    }
}

/// The same sum restricted to generations `1..=n`.
pub fn condition_i_partial(schedule: &Schedule, n: u64) -> Result<f64> {
    let growth = geometric_sum(schedule.m(), schedule.growth_gens_through(n)?);
    let big_n = BigUint::from(n);
    let mut critical = NeumaierSum::new();
    for b in schedule.blocks() {
        if b.t > big_n {
            break;
        }
        // overlap of the critical stretch [t, u) with [1, n]
        let last = std::cmp::min(&b.u - 1u32, big_n.clone());
        let count = u64::try_from(last - &b.t + 1u32).expect("count <= n");
        critical.add(((count as f64).ln() - b.ln_k).exp());
    }
    Ok(growth + critical.total())
}

/// `sum_{j=1}^{count} m^{-j}`, evaluated in closed form.
fn geometric_sum(m: f64, count: u64) -> f64 {
    (1.0 - (-(count as f64) * m.ln()).exp()) / (m - 1.0)
}

/// Direct generation-by-generation accumulation of
/// `sum_{n<=N} prod_{k<=n} (m p_k)^{-1}` in log domain.
pub fn condition_i_bruteforce(
    m: f64,
    retentions: &impl RetentionSource,
    n: u64,
    budget: u64,
) -> Result<f64> {
    if n > budget {
        return Err(Error::BudgetExceeded { needed: n, budget });
    }
    let mut log_inv = 0.0f64;
    let mut sum = NeumaierSum::new();
    for gen in 1..=n {
        let p = retentions.retention(gen)?;
        // ln(m p) via ln_1p keeps the critical steps, where m p is within an
        // ulp of 1, from polluting the running log
        log_inv -= m.mul_add(p, -1.0).ln_1p();
        sum.add(log_inv.exp());
    }
    Ok(sum.total())
}

/// Closed form against brute force over a shared prefix.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub generations: u64,
    pub closed_form: f64,
    pub bruteforce: f64,
    pub rel_diff: f64,
    pub status: CiStatus,
}

pub fn cross_check(schedule: &Schedule, n: u64, budget: u64) -> Result<CrossCheck> {
    let closed = condition_i_partial(schedule, n)?;
    let brute = condition_i_bruteforce(schedule.m(), schedule, n, budget)?;
    let rel = (closed - brute).abs() / brute.abs().max(f64::MIN_POSITIVE);
    Ok(CrossCheck {
        generations: n,
        closed_form: closed,
        bruteforce: brute,
        rel_diff: rel,
        status: if rel <= CROSS_CHECK_RTOL {
            CiStatus::Certified
        } else {
            CiStatus::NotFinite
        },
    })
}

// ---------------------------------------------------------------------------
// Condition (ii)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockStatus {
    Certified,
    HorizonLimited,
}

impl BlockStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockStatus::Certified => "certified",
            BlockStatus::HorizonLimited => "horizon-limited",
        }
    }
}

/// Extinction evidence for one block.
#[derive(Debug, Clone, Serialize)]
pub struct BlockCheck {
    #[serde(rename = "n")]
    pub block: u32,
    /// `u_n - t_n` as an exact decimal integer.
    pub r_index: String,
    /// `r_{u_n - t_n} * K_n` when the index is within the table horizon.
    pub bound: Option<f64>,
    /// `log10` of the bound, finite even when the bound itself would
    /// underflow or overflow an f64.
    pub log10_bound: Option<f64>,
    /// `2^{-n}`.
    pub threshold: f64,
    /// Exact `P(Z_{u_n} > 0)` when `u_n` fits the generation budget.
    pub exact_survival: Option<f64>,
    pub status: BlockStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionIi {
    pub blocks: Vec<BlockCheck>,
}

/// Per-block extinction bounds, with exact survival cross-checks within the
/// generation budget.
///
/// # Errors
/// `ConditionViolated` with a diagnostic dump as soon as any block has
/// `bound >= 2^{-n}` or exact survival above the bound.
pub fn condition_ii_report(
    f: &OffspringLaw,
    schedule: &Schedule,
    table: &SurvivalTable,
    exact_budget: u64,
) -> Result<ConditionIi> {
    let mut blocks = Vec::with_capacity(schedule.blocks().len());
    for b in schedule.blocks() {
        let threshold = 0.5f64.powi(b.index as i32);
        let idx = usize::try_from(&b.crit_len).ok().filter(|&i| i <= table.horizon());
        let Some(idx) = idx else {
            blocks.push(BlockCheck {
                block: b.index,
                r_index: b.crit_len.to_string(),
                bound: None,
                log10_bound: None,
                threshold,
                exact_survival: None,
                status: BlockStatus::HorizonLimited,
            });
            continue;
        };
        let r = table.r(idx);
        let ln_bound = r.ln() + b.ln_k;
        let bound = ln_bound.exp();
        if ln_bound >= -(b.index as f64) * std::f64::consts::LN_2 {
            return Err(Error::ConditionViolated(Box::new(ViolationDump {
                kind: ViolationKind::BoundAboveThreshold,
                block: b.index,
                r_index: idx as u64,
                r_value: r,
                log10_k: b.ln_k / std::f64::consts::LN_10,
                bound,
                threshold,
                exact_survival: None,
            })));
        }
        let exact = match u64::try_from(&b.u) {
            Ok(u) if u <= exact_budget => {
                let ps: Vec<f64> = (1..=u)
                    .map(|gen| schedule.retention_at(gen))
                    .collect::<Result<_>>()?;
                let (exact, _) = bpve_survival_exact_bounded(f, &ps)?;
                if exact > bound * (1.0 + 1e-9) {
                    return Err(Error::ConditionViolated(Box::new(ViolationDump {
                        kind: ViolationKind::ExactAboveBound,
                        block: b.index,
                        r_index: idx as u64,
                        r_value: r,
                        log10_k: b.ln_k / std::f64::consts::LN_10,
                        bound,
                        threshold,
                        exact_survival: Some(exact),
                    })));
                }
                Some(exact)
            }
            _ => None,
        };
        blocks.push(BlockCheck {
            block: b.index,
            r_index: b.crit_len.to_string(),
            bound: Some(bound),
            log10_bound: Some(ln_bound / std::f64::consts::LN_10),
            threshold,
            exact_survival: exact,
            status: BlockStatus::Certified,
        });
    }
    Ok(ConditionIi { blocks })
}

// ---------------------------------------------------------------------------
// Combined report
// ---------------------------------------------------------------------------

/// The full certification artifact for one schedule.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub law_spec: String,
    pub m: f64,
    pub condition_i: ConditionI,
    pub condition_ii: ConditionIi,
    pub cross_check: CrossCheck,
}

/// Options for [`verification_report`].
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub exact_budget: u64,
    pub bruteforce_budget: u64,
    /// Cross-check prefix; clamped to the built span.
    pub cross_check_generations: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            exact_budget: DEFAULT_EXACT_BUDGET,
            bruteforce_budget: DEFAULT_BRUTEFORCE_BUDGET,
            cross_check_generations: 10_000,
        }
    }
}

pub fn verification_report(
    f: &OffspringLaw,
    schedule: &Schedule,
    table: &SurvivalTable,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let condition_i = condition_i_closed_form(schedule);
    let condition_ii = condition_ii_report(f, schedule, table, opts.exact_budget)?;
    let prefix = schedule
        .span_u64()
        .map(|s| s.min(opts.cross_check_generations))
        .unwrap_or(opts.cross_check_generations)
        .min(opts.bruteforce_budget);
    let cross = cross_check(schedule, prefix, opts.bruteforce_budget)?;
    Ok(VerificationReport {
        law_spec: schedule.law_spec().to_string(),
        m: schedule.m(),
        condition_i,
        condition_ii,
        cross_check: cross,
    })
}

impl VerificationReport {
    /// Whether every status in the report is certified.
    pub fn all_certified(&self) -> bool {
        self.condition_i.status == CiStatus::Certified
            && self.cross_check.status == CiStatus::Certified
            && self
                .condition_ii
                .blocks
                .iter()
                .all(|b| b.status == BlockStatus::Certified)
    }

    /// CSV export of the per-block table with columns
    /// `block,r_index,bound,threshold,exact_survival,status`.
    pub fn csv_string(&self) -> String {
        let mut s = String::from("block,r_index,bound,threshold,exact_survival,status\n");
        for b in &self.condition_ii.blocks {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                b.block,
                b.r_index,
                b.bound.map(|v| v.to_string()).unwrap_or_default(),
                b.threshold,
                b.exact_survival.map(|v| v.to_string()).unwrap_or_default(),
                b.status.as_str()
            ));
        }
        s
    }
}
