//! Error type shared by all modules.

use thiserror::Error;

/// Why a block threshold could not be certified from a finite survival table.
#[derive(Debug, Clone, PartialEq)]
pub enum NotCertifiableCause {
    /// `k * r_k` never falls below the block threshold within the horizon.
    /// Either the horizon is too small or the offspring variance is finite
    /// (in which case `k * r_k` converges to a positive constant and the
    /// threshold can never be met).
    ThresholdNotMet {
        threshold: f64,
        value_at_horizon: f64,
        horizon: usize,
    },
    /// `k * r_k` is not nonincreasing over the final decade of the table,
    /// so there is no trend evidence that the threshold keeps holding
    /// beyond the horizon.
    TrendNotDecreasing { at: usize },
}

impl std::fmt::Display for NotCertifiableCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NotCertifiableCause::ThresholdNotMet {
                threshold,
                value_at_horizon,
                horizon,
            } => write!(
                f,
                "k*r_k = {value_at_horizon} at k = {horizon} is not below the threshold {threshold}; \
                 horizon too small or offspring variance finite"
            ),
            NotCertifiableCause::TrendNotDecreasing { at } => write!(
                f,
                "k*r_k is not nonincreasing over the final decade of the table (first increase at k = {at})"
            ),
        }
    }
}

/// Which extinction inequality was falsified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `r_{u-t} * K_n >= 2^{-n}`.
    BoundAboveThreshold,
    /// Exact survival above the `r_{u-t} * K_n` bound.
    ExactAboveBound,
}

/// Diagnostic payload attached to a falsified extinction bound. Either
/// inequality failing contradicts the construction and always indicates an
/// implementation or input fault, so the check aborts with this dump rather
/// than continuing.
#[derive(Debug, Clone)]
pub struct ViolationDump {
    pub kind: ViolationKind,
    pub block: u32,
    pub r_index: u64,
    pub r_value: f64,
    pub log10_k: f64,
    pub bound: f64,
    pub threshold: f64,
    pub exact_survival: Option<f64>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("law spec parse error: {0}")]
    ParseLaw(String),

    #[error("infeasible power tail: mean {mean} exceeds the maximum feasible mean {max_mean} for alpha = {alpha} (q_0 would be negative)")]
    InfeasibleMean { alpha: f64, mean: f64, max_mean: f64 },

    #[error("retention probability must lie in (0, 1], got {0}")]
    RetentionOutOfRange(f64),

    #[error("law is not supercritical: mean = {0} but mean > 1 is required")]
    NotSupercritical(f64),

    #[error("law is not critical: mean = {0}")]
    NotCritical(f64),

    #[error("certified accuracy {achieved:e} does not meet the requested tolerance {requested:e}")]
    Accuracy { requested: f64, achieved: f64 },

    #[error("block {block} not certifiable: {cause}")]
    NotCertifiable {
        block: u32,
        cause: NotCertifiableCause,
    },

    #[error("generation {n} lies outside the built span [1, {span}]")]
    OutOfSpan { n: u64, span: String },

    #[error("condition (ii) violated at block {}: {} (bound {}, threshold {}, r_{} = {}, log10 K = {}{})",
            .0.block,
            match .0.kind {
                ViolationKind::BoundAboveThreshold => "bound not below threshold",
                ViolationKind::ExactAboveBound => "exact survival above bound",
            },
            .0.bound, .0.threshold, .0.r_index, .0.r_value, .0.log10_k,
            .0.exact_survival.map(|e| format!(", exact = {e}")).unwrap_or_default())]
    ConditionViolated(Box<ViolationDump>),

    #[error("invalid Monte Carlo config: {0}")]
    Config(String),

    #[error("expansion budget exceeded: needed {needed}, budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("horizon {horizon} exceeds the retention source span {span}")]
    HorizonBeyondSpan { horizon: u64, span: String },
}

impl Error {
    /// Module that produced the error, for machine-readable diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidLaw(_)
            | Error::ParseLaw(_)
            | Error::InfeasibleMean { .. }
            | Error::RetentionOutOfRange(_)
            | Error::NotSupercritical(_)
            | Error::Accuracy { .. } => "offspring",
            Error::NotCritical(_) => "survival",
            Error::NotCertifiable { .. } | Error::OutOfSpan { .. } => "construct",
            Error::ConditionViolated(_) | Error::BudgetExceeded { .. } => "verify",
            Error::Config(_) | Error::HorizonBeyondSpan { .. } => "simulate",
        }
    }

    /// Short stable code for machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidLaw(_) => "invalid_law",
            Error::ParseLaw(_) => "parse_law",
            Error::InfeasibleMean { .. } => "infeasible_mean",
            Error::RetentionOutOfRange(_) => "retention_out_of_range",
            Error::NotSupercritical(_) => "not_supercritical",
            Error::NotCritical(_) => "not_critical",
            Error::Accuracy { .. } => "certified_accuracy",
            Error::NotCertifiable { .. } => "not_certifiable",
            Error::OutOfSpan { .. } => "out_of_span",
            Error::ConditionViolated(_) => "condition_violated",
            Error::Config(_) => "invalid_config",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::HorizonBeyondSpan { .. } => "horizon_beyond_span",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
