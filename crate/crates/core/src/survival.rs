//! Survival probabilities of critical Galton-Watson processes, exact
//! finite-horizon survival of thinned branching processes, and the
//! `n * P(Z_n > 0)` asymptotic diagnostic.
//!
//! Everything runs in the complement (survival) domain: extinction
//! probabilities are never stored as values near 1, because the survival
//! probabilities reach `1e-10` and below and would lose all precision to
//! cancellation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::{OffspringLaw, SecondMoment};

/// Default relative accuracy requested of each table entry.
pub const DEFAULT_TABLE_RTOL: f64 = 1e-9;

/// Survival probabilities `r_1..r_H` of a critical process, with the
/// accumulated accuracy bound of every entry.
///
/// Convention: `r_0 = 1`, the root exists; `r_{n+1} = 1 - g(1 - r_n)`.
#[derive(Debug, Clone)]
pub struct SurvivalTable {
    law_spec: String,
    r: Vec<f64>,
    err: Vec<f64>,
    requested_rtol: f64,
    flagged_from: Option<usize>,
}

impl SurvivalTable {
    /// Runs the survival recursion for `g` up to `horizon` generations.
    ///
    /// Subcritical laws are accepted (the recursion is still well defined
    /// and degenerate fixtures rely on it); supercritical laws are a domain
    /// error. Entries whose accumulated accuracy bound exceeds `rtol` are
    /// flagged rather than silently returned.
    pub fn build(g: &OffspringLaw, horizon: usize, rtol: f64) -> Result<Self> {
        let m = g.mean();
        if m > 1.0 + 1e-9 {
            return Err(Error::NotCritical(m));
        }
        let mut r = Vec::with_capacity(horizon);
        let mut err = Vec::with_capacity(horizon);
        let mut cur = 1.0f64;
        let mut acc_err = 0.0f64;
        let mut flagged_from = None;
        for n in 1..=horizon {
            let (next, step_err) = g.pgf_complement_bounded(cur);
            // the complement map has elasticity <= 1 in its argument, so
            // relative errors accumulate at most additively
            acc_err += step_err + 2.0 * f64::EPSILON;
            cur = next;
            r.push(cur);
            err.push(acc_err);
            if flagged_from.is_none() && acc_err > rtol {
                flagged_from = Some(n);
            }
            if cur == 0.0 {
                // absorbed; remaining entries are exactly zero
                for _ in n + 1..=horizon {
                    r.push(0.0);
                    err.push(acc_err);
                }
                break;
            }
        }
        Ok(SurvivalTable {
            law_spec: g.to_string(),
            r,
            err,
            requested_rtol: rtol,
            flagged_from,
        })
    }

    /// Wraps externally supplied survival values (synthetic tables for
    /// tests and what-if analyses). Values must lie in `[0, 1]` and be
    /// nonincreasing.
    pub fn from_values(law_spec: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let mut prev = 1.0f64;
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidLaw(format!(
                    "survival value r_{} = {v} outside [0,1]",
                    i + 1
                )));
            }
            if v > prev {
                return Err(Error::InvalidLaw(format!(
                    "survival values must be nonincreasing, r_{} = {v} > {prev}",
                    i + 1
                )));
            }
            prev = v;
        }
        let n = values.len();
        Ok(SurvivalTable {
            law_spec: law_spec.into(),
            r: values,
            err: vec![0.0; n],
            requested_rtol: DEFAULT_TABLE_RTOL,
            flagged_from: None,
        })
    }

    pub fn law_spec(&self) -> &str {
        &self.law_spec
    }

    pub fn horizon(&self) -> usize {
        self.r.len()
    }

    /// `r_n`, 1-based. `r(0)` returns the convention value 1.
    pub fn r(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            self.r[n - 1]
        }
    }

    pub fn try_r(&self, n: usize) -> Option<f64> {
        if n == 0 {
            Some(1.0)
        } else {
            self.r.get(n - 1).copied()
        }
    }

    /// Accumulated relative error bound of `r_n`.
    pub fn error_bound(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.err[n - 1]
        }
    }

    /// First entry whose accuracy bound exceeds the requested tolerance.
    pub fn flagged_from(&self) -> Option<usize> {
        self.flagged_from
    }

    pub fn requested_rtol(&self) -> f64 {
        self.requested_rtol
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    /// Logarithmic checkpoint set: 1, 2, 5 per decade, plus the horizon.
    pub fn checkpoints(&self) -> Vec<usize> {
        let h = self.horizon();
        let mut out = Vec::new();
        let mut decade = 1usize;
        'outer: loop {
            for mantissa in [1usize, 2, 5] {
                match mantissa.checked_mul(decade) {
                    Some(n) if n <= h => out.push(n),
                    _ => break 'outer,
                }
            }
            match decade.checked_mul(10) {
                Some(d) => decade = d,
                None => break,
            }
        }
        if out.last() != Some(&h) && h >= 1 {
            out.push(h);
        }
        out
    }

    /// CSV export with columns `n,r_n,n_times_r_n`; one row per checkpoint,
    /// or per generation when `full` is set.
    pub fn csv_string(&self, full: bool) -> String {
        let mut s = String::from("n,r_n,n_times_r_n\n");
        let rows: Vec<usize> = if full {
            (1..=self.horizon()).collect()
        } else {
            self.checkpoints()
        };
        for n in rows {
            let r = self.r(n);
            s.push_str(&format!("{n},{r},{}\n", n as f64 * r));
        }
        s
    }
}

/// Exact survival probability `P(Z_n > 0)` of the branching process built
/// from `f` with per-generation retentions `p_1..p_n`.
///
/// Backward composition in the complement domain: `s <- 1`, then
/// `s <- 1 - f_k(1 - s)` for `k = n..1`, where `f_k(z) = f(1 - p_k + p_k z)`.
/// An empty retention list returns 1 (the root exists).
pub fn bpve_survival_exact(f: &OffspringLaw, retentions: &[f64]) -> Result<f64> {
    let (v, err) = bpve_survival_exact_bounded(f, retentions)?;
    if err > DEFAULT_TABLE_RTOL {
        return Err(Error::Accuracy {
            requested: DEFAULT_TABLE_RTOL,
            achieved: err,
        });
    }
    Ok(v)
}

/// As [`bpve_survival_exact`] but returns the accumulated relative error
/// bound instead of failing on it.
pub fn bpve_survival_exact_bounded(f: &OffspringLaw, retentions: &[f64]) -> Result<(f64, f64)> {
    for &p in retentions {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::RetentionOutOfRange(p));
        }
    }
    let mut s = 1.0f64;
    let mut err = 0.0f64;
    for &p in retentions.iter().rev() {
        // complement of the thinned pgf scales the argument: 1 - f(1 - p s)
        let (next, step) = f.pgf_complement_bounded(p * s);
        s = next;
        err += step + 2.0 * f64::EPSILON;
    }
    Ok((s, err))
}

// ---------------------------------------------------------------------------
// K-K-N-S diagnostic
// ---------------------------------------------------------------------------

/// Thresholds for the trend verdict.
#[derive(Debug, Clone)]
pub struct KknsConfig {
    /// `n r_n` at the horizon below this multiple of its value two decades
    /// earlier reads as decay to zero.
    pub decay_ratio: f64,
    /// Relative change over the last decade below this reads as convergence.
    pub flat_rel: f64,
}

impl Default for KknsConfig {
    fn default() -> Self {
        KknsConfig {
            decay_ratio: 0.2,
            flat_rel: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KknsVerdict {
    /// `n r_n` flattens out; for a finite-variance critical law the limit
    /// is `2 / sigma^2`.
    Converging { limit_estimate: f64 },
    /// `n r_n` keeps falling, as it must when the variance is infinite.
    Decaying { ratio: f64 },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct KknsPoint {
    pub n: usize,
    pub r: f64,
    pub n_times_r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KknsDiagnostic {
    pub law_spec: String,
    pub checkpoints: Vec<KknsPoint>,
    pub verdict: KknsVerdict,
    /// `2 / sigma^2` for finite variance, 0 for infinite variance.
    pub theoretical_limit: Option<f64>,
}

/// Trend record of `n * r_n` at logarithmic checkpoints.
///
/// The verdict thresholds are tool decisions; the mathematical fact behind
/// them is that `n P(Z_n > 0)` tends to `2 / sigma^2` for a critical law,
/// which is zero exactly when the offspring variance is infinite.
pub fn kkns_diagnostic(
    table: &SurvivalTable,
    class: SecondMoment,
    cfg: &KknsConfig,
) -> KknsDiagnostic {
    let checkpoints: Vec<KknsPoint> = table
        .checkpoints()
        .into_iter()
        .map(|n| KknsPoint {
            n,
            r: table.r(n),
            n_times_r: n as f64 * table.r(n),
        })
        .collect();
    let theoretical_limit = match class {
        SecondMoment::Finite { variance } if variance > 0.0 => Some(2.0 / variance),
        SecondMoment::Finite { .. } => None,
        SecondMoment::Infinite => Some(0.0),
    };
    let h = table.horizon();
    let verdict = if h < 100 {
        KknsVerdict::Inconclusive {
            reason: format!("horizon {h} too small for a trend verdict (need >= 100)"),
        }
    } else {
        let value_near = |target: usize| -> f64 {
            let p = checkpoints
                .iter()
                .min_by_key(|p| p.n.abs_diff(target))
                .expect("nonempty checkpoints");
            p.n_times_r
        };
        let early = value_near(h / 100);
        let mid = value_near(h / 10);
        let last = checkpoints.last().expect("nonempty").n_times_r;
        if early == 0.0 {
            KknsVerdict::Decaying { ratio: 0.0 }
        } else if last < cfg.decay_ratio * early {
            KknsVerdict::Decaying { ratio: last / early }
        } else if (last - mid).abs() <= cfg.flat_rel * last.abs() {
            KknsVerdict::Converging {
                limit_estimate: last,
            }
        } else {
            KknsVerdict::Inconclusive {
                reason: format!(
                    "n*r_n moved from {mid} to {last} over the final decade: neither flat nor decaying"
                ),
            }
        }
    };
    KknsDiagnostic {
        law_spec: table.law_spec().to_string(),
        checkpoints,
        verdict,
        theoretical_limit,
    }
}
