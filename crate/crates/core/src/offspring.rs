//! Offspring distributions: exact pmf access, generating functions with
//! certified accuracy, Bernoulli thinning, criticalization, and sampling.
//!
//! Three families are supported:
//!
//! * `finite`    - an explicit pmf `q_0..q_K`;
//! * `geometric` - `q_k = (1-b) b^k` parameterized by its mean (closed-form
//!   pgf, finite variance);
//! * `powertail` - `q_k = c k^{-(2+alpha)}` for `k >= 1` with `alpha` in
//!   `(0,1)`, so the mean is finite but the variance diverges.
//!
//! Thinning (killing each child independently with probability `1-p`) is a
//! lazy reparameterization of the pgf, `f_p(s) = f(1 - p + p s)`; nested
//! thinnings compose multiplicatively into a single retention factor, and
//! thinning a geometric law folds back into a geometric law of mean `p m`.
//! No thinned pmf is ever materialized.
//!
//! Everything here is pure and immutable after construction. Callers own
//! their RNG state.

use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::Discrete;

use crate::error::{Error, Result};
use crate::numeric::powertail::PowerTailSeries;
use crate::numeric::zeta::zeta_p;

/// Default absolute tolerance for `pgf`.
pub const DEFAULT_PGF_TOL: f64 = 1e-12;
/// Default relative tolerance for `pgf_complement`, guaranteed for
/// arguments `s >= 1e-12`.
pub const DEFAULT_COMPLEMENT_RTOL: f64 = 1e-10;

const PMF_SUM_TOL: f64 = 1e-12;

/// Second-moment classification of an offspring law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondMoment {
    Finite { variance: f64 },
    Infinite,
}

impl SecondMoment {
    pub fn is_infinite(&self) -> bool {
        matches!(self, SecondMoment::Infinite)
    }
}

#[derive(Debug, Clone)]
enum LawRepr {
    Finite {
        probs: Vec<f64>,
    },
    Geometric {
        mean: f64,
        b: f64,
    },
    PowerTail {
        alpha: f64,
        mean: f64,
        c: f64,
        q0: f64,
        /// `c * Z(2+alpha) = 1 - q0`, kept separately so the complement at
        /// `s = 1` never forms `1 - q0`.
        complement_at_one: f64,
        series: PowerTailSeries,
    },
}

/// An offspring distribution, possibly wrapped in a Bernoulli thinning.
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    repr: LawRepr,
    retention: f64,
}

impl PartialEq for OffspringLaw {
    fn eq(&self, other: &Self) -> bool {
        if self.retention != other.retention {
            return false;
        }
        match (&self.repr, &other.repr) {
            (LawRepr::Finite { probs: a }, LawRepr::Finite { probs: b }) => a == b,
            (LawRepr::Geometric { mean: a, .. }, LawRepr::Geometric { mean: b, .. }) => a == b,
            (
                LawRepr::PowerTail {
                    alpha: a1,
                    mean: m1,
                    ..
                },
                LawRepr::PowerTail {
                    alpha: a2,
                    mean: m2,
                    ..
                },
            ) => a1 == a2 && m1 == m2,
            _ => false,
        }
    }
}

impl OffspringLaw {
    /// Explicit finite law `q_0..q_K`. The pmf must be nonnegative and sum
    /// to 1 within `1e-12`. Degenerate laws (`q_0 = 1` or `q_1 = 1`) are
    /// accepted.
    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidLaw("finite law needs at least q_0".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidLaw(
                "finite law probabilities must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidLaw(format!(
                "finite law pmf sums to {sum}, not 1"
            )));
        }
        Ok(OffspringLaw {
            repr: LawRepr::Finite { probs },
            retention: 1.0,
        })
    }

    /// Geometric law `q_k = (1-b) b^k` with the given mean `b/(1-b)`.
    pub fn geometric(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidLaw(format!(
                "geometric law needs a finite positive mean, got {mean}"
            )));
        }
        let b = mean / (1.0 + mean);
        Ok(OffspringLaw {
            repr: LawRepr::Geometric { mean, b },
            retention: 1.0,
        })
    }

    /// Power-tail law `q_k = c k^{-(2+alpha)}` for `k >= 1`, `q_0` the
    /// residual mass, with `c` chosen so the mean equals `mean`.
    ///
    /// # Errors
    /// `InfeasibleMean` when the requested mean would force `q_0 < 0`;
    /// the maximum feasible mean is `Z(1+alpha)/Z(2+alpha)`.
    pub fn power_tail(alpha: f64, mean: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidLaw(format!(
                "power-tail alpha must lie in (0,1), got {alpha}"
            )));
        }
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidLaw(format!(
                "power-tail mean must be finite and positive, got {mean}"
            )));
        }
        let (z1, _) = zeta_p(1.0 + alpha);
        let (z2, _) = zeta_p(2.0 + alpha);
        let c = mean / z1;
        let complement_at_one = c * z2;
        let q0 = 1.0 - complement_at_one;
        if q0 < -1e-15 {
            return Err(Error::InfeasibleMean {
                alpha,
                mean,
                max_mean: z1 / z2,
            });
        }
        Ok(OffspringLaw {
            repr: LawRepr::PowerTail {
                alpha,
                mean,
                c,
                q0: q0.max(0.0),
                complement_at_one,
                series: PowerTailSeries::new(alpha),
            },
            retention: 1.0,
        })
    }

    /// Largest mean a power-tail law with this `alpha` can carry.
    pub fn max_feasible_mean(alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidLaw(format!(
                "power-tail alpha must lie in (0,1), got {alpha}"
            )));
        }
        let (z1, _) = zeta_p(1.0 + alpha);
        let (z2, _) = zeta_p(2.0 + alpha);
        Ok(z1 / z2)
    }

    /// Effective retention of the thinning wrapper (1 when unthinned).
    pub fn retention(&self) -> f64 {
        self.retention
    }

    /// `P(X = k)`.
    ///
    /// Exact for unthinned finite and geometric laws; `c k^{-(2+alpha)}`
    /// (or the `q_0` residual) for power tails. For thinned laws the value
    /// is the binomial mixture `sum_j q_j C(j,k) p^k (1-p)^{j-k}`, summed
    /// until its certified remainder is negligible.
    pub fn pmf(&self, k: u64) -> f64 {
        if self.retention == 1.0 {
            return self.base_pmf(k);
        }
        let p = self.retention;
        let lead = match &self.repr {
            LawRepr::Finite { probs } => probs.len() as u64,
            _ => u64::MAX,
        };
        let mut acc = 0.0;
        let mut j = k;
        loop {
            if j >= lead {
                break;
            }
            let base = self.base_pmf(j);
            if base > 0.0 {
                let bin = statrs::distribution::Binomial::new(p, j)
                    .expect("retention validated at construction");
                acc += base * bin.pmf(k);
            }
            // past the binomial mode the terms decay geometrically; stop once
            // they can no longer move the sum
            if j > k + 8 && (j as f64) * p > k as f64 + 8.0 {
                let term_scale = self.base_pmf(j);
                if term_scale * (1.0 - p).powf(j as f64 - k as f64) < 1e-18 * acc.max(1e-300) {
                    break;
                }
            }
            if j > k + 4_000_000 {
                break;
            }
            j += 1;
        }
        acc
    }

    fn base_pmf(&self, k: u64) -> f64 {
        match &self.repr {
            LawRepr::Finite { probs } => probs.get(k as usize).copied().unwrap_or(0.0),
            LawRepr::Geometric { b, .. } => (1.0 - b) * b.powf(k as f64),
            LawRepr::PowerTail { c, q0, alpha, .. } => {
                if k == 0 {
                    *q0
                } else {
                    c * (k as f64).powf(-(2.0 + alpha))
                }
            }
        }
    }

    /// `f(s)` for `s` in `[0,1]`, honoring the thinning wrapper:
    /// `f(1 - p + p s)` of the base law.
    ///
    /// # Errors
    /// `Accuracy` when the certified absolute error exceeds the default
    /// tolerance of `1e-12`.
    pub fn pgf(&self, s: f64) -> Result<f64> {
        self.pgf_with_tolerance(s, DEFAULT_PGF_TOL)
    }

    pub fn pgf_with_tolerance(&self, s: f64, tol: f64) -> Result<f64> {
        let (value, abs_err) = self.pgf_bounded(s);
        if abs_err > tol {
            return Err(Error::Accuracy {
                requested: tol,
                achieved: abs_err,
            });
        }
        Ok(value)
    }

    /// `f(s)` together with a certified absolute error bound. Infallible.
    pub fn pgf_bounded(&self, s: f64) -> (f64, f64) {
        assert!((0.0..=1.0).contains(&s), "pgf argument {s} outside [0,1]");
        let x = 1.0 - self.retention + self.retention * s;
        match &self.repr {
            LawRepr::Finite { probs } => {
                let mut acc = 0.0;
                for &q in probs.iter().rev() {
                    acc = acc * x + q;
                }
                (acc, (probs.len() as f64 + 2.0) * f64::EPSILON * acc.abs())
            }
            LawRepr::Geometric { b, .. } => {
                let v = (1.0 - b) / (1.0 - b * x);
                (v, 4.0 * f64::EPSILON * v.abs())
            }
            LawRepr::PowerTail {
                c, q0, series, ..
            } => {
                if x >= 1.0 {
                    return (1.0, 0.0);
                }
                if x == 0.0 {
                    return (*q0, f64::EPSILON * q0);
                }
                let (sum, bound) = series.pgf_sum(x);
                let v = q0 + c * sum;
                (v, c * bound + 4.0 * f64::EPSILON * v.abs())
            }
        }
    }

    /// `1 - f(1-s)` computed without ever forming `1 - f`, so the result
    /// keeps full relative precision down to survival probabilities of
    /// `1e-12` and below.
    ///
    /// # Errors
    /// `Accuracy` when the certified relative error exceeds `1e-10` for
    /// `s >= 1e-12`.
    pub fn pgf_complement(&self, s: f64) -> Result<f64> {
        let (value, rel) = self.pgf_complement_bounded(s);
        if s >= 1e-12 && rel > DEFAULT_COMPLEMENT_RTOL {
            return Err(Error::Accuracy {
                requested: DEFAULT_COMPLEMENT_RTOL,
                achieved: rel,
            });
        }
        Ok(value)
    }

    /// `1 - f(1-s)` together with a certified relative error bound.
    pub fn pgf_complement_bounded(&self, s: f64) -> (f64, f64) {
        assert!(
            (0.0..=1.0).contains(&s),
            "pgf_complement argument {s} outside [0,1]"
        );
        // thinning scales the complement argument: 1 - f_p(1-s) = 1 - f(1-ps)
        let x = self.retention * s;
        if x == 0.0 {
            return (0.0, 0.0);
        }
        match &self.repr {
            LawRepr::Finite { probs } => {
                let lx = (-x).ln_1p(); // ln(1-x), -inf at x = 1
                let mut acc = crate::numeric::NeumaierSum::new();
                for (k, &q) in probs.iter().enumerate().skip(1) {
                    if q > 0.0 {
                        acc.add(q * (-((k as f64) * lx).exp_m1()));
                    }
                }
                let v = acc.total();
                (v, (probs.len() as f64 + 4.0) * f64::EPSILON)
            }
            LawRepr::Geometric { b, .. } => {
                let v = b * x / ((1.0 - b) + b * x);
                (v, 8.0 * f64::EPSILON)
            }
            LawRepr::PowerTail {
                c,
                complement_at_one,
                series,
                ..
            } => {
                if x >= 1.0 {
                    return (*complement_at_one, 4.0 * f64::EPSILON);
                }
                let (sum, abs_bound) = series.complement_sum(x);
                let v = c * sum;
                (v, abs_bound / sum.abs().max(f64::MIN_POSITIVE) + 8.0 * f64::EPSILON)
            }
        }
    }

    /// `f'(1)`, the mean number of children. For a thinned law this is
    /// `p * m` of the base law.
    pub fn mean(&self) -> f64 {
        self.retention * self.base_mean()
    }

    fn base_mean(&self) -> f64 {
        match &self.repr {
            LawRepr::Finite { probs } => probs
                .iter()
                .enumerate()
                .map(|(k, &q)| k as f64 * q)
                .sum(),
            LawRepr::Geometric { mean, .. } => *mean,
            LawRepr::PowerTail { mean, .. } => *mean,
        }
    }

    /// Whether the offspring variance is finite, and its value when it is.
    ///
    /// Power tails with `alpha` in `(0,1)` always have infinite variance:
    /// `sum k^2 q_k` is a p-series with exponent `alpha <= 1`.
    pub fn second_moment_class(&self) -> SecondMoment {
        let p = self.retention;
        match &self.repr {
            LawRepr::PowerTail { .. } => SecondMoment::Infinite,
            LawRepr::Finite { probs } => {
                let f2: f64 = probs
                    .iter()
                    .enumerate()
                    .map(|(k, &q)| (k * k.saturating_sub(1)) as f64 * q)
                    .sum();
                let m = self.base_mean();
                SecondMoment::Finite {
                    variance: p * p * f2 + p * m - (p * m) * (p * m),
                }
            }
            LawRepr::Geometric { mean, .. } => {
                let f2 = 2.0 * mean * mean;
                SecondMoment::Finite {
                    variance: p * p * f2 + p * mean - (p * mean) * (p * mean),
                }
            }
        }
    }

    /// Bernoulli thinning by retention `p`: each child survives
    /// independently with probability `p`. `thin(law, 1)` is the identity;
    /// nested thinnings compose multiplicatively. Thinning a geometric law
    /// yields the geometric law of mean `p m` exactly.
    pub fn thin(&self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::RetentionOutOfRange(p));
        }
        if let LawRepr::Geometric { mean, .. } = &self.repr {
            return Self::geometric(mean * self.retention * p);
        }
        Ok(OffspringLaw {
            repr: self.repr.clone(),
            retention: self.retention * p,
        })
    }

    /// Thin by `1/m` so the resulting law is critical (mean exactly 1 up to
    /// rounding).
    ///
    /// # Errors
    /// `NotSupercritical` unless `mean > 1`.
    pub fn criticalize(&self) -> Result<Self> {
        let m = self.mean();
        if m <= 1.0 || m.is_nan() {
            return Err(Error::NotSupercritical(m));
        }
        self.thin(1.0 / m)
    }

    /// Sampling plan for this law. The plan is cheap to build and safe to
    /// share across threads.
    pub fn sampler(&self) -> Sampler {
        let plan = match &self.repr {
            LawRepr::Finite { probs } => {
                let mut cum = Vec::with_capacity(probs.len());
                let mut acc = 0.0;
                for &q in probs {
                    acc += q;
                    cum.push(acc);
                }
                Plan::Finite { cum }
            }
            LawRepr::Geometric { b, .. } => Plan::Geometric { b: *b },
            LawRepr::PowerTail { c, q0, alpha, .. } => Plan::PowerTail {
                c: *c,
                q: 2.0 + alpha,
                cum: RwLock::new(vec![*q0]),
            },
        };
        Sampler {
            retention: self.retention,
            plan,
        }
    }

    /// One draw from the law. Convenience over [`OffspringLaw::sampler`];
    /// build a `Sampler` once when drawing in bulk.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sampler().sample(rng)
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum Plan {
    Finite { cum: Vec<f64> },
    Geometric { b: f64 },
    PowerTail { c: f64, q: f64, cum: RwLock<Vec<f64>> },
}

/// Exact sampler for an offspring law.
///
/// Finite laws draw by inverse CDF over the cumulative table; geometric laws
/// invert the closed-form CDF; power tails use a lazily extended exact
/// cumulative table, grown until the target uniform falls inside the covered
/// mass, so there is no truncation bias. Thinned laws draw from the base law
/// and then apply binomial retention.
#[derive(Debug)]
pub struct Sampler {
    retention: f64,
    plan: Plan,
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let base = self.sample_base(rng);
        if self.retention >= 1.0 || base == 0 {
            return base;
        }
        rand_distr::Binomial::new(base, self.retention)
            .expect("retention validated at construction")
            .sample(rng)
    }

    /// Draw from the law and then keep each child independently with
    /// probability `p` (on top of any retention baked into the law).
    pub fn sample_retained<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> u64 {
        let base = self.sample(rng);
        if p >= 1.0 || base == 0 {
            return base;
        }
        rand_distr::Binomial::new(base, p)
            .expect("retention validated by the caller")
            .sample(rng)
    }

    fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.plan {
            Plan::Finite { cum } => {
                let u: f64 = rng.random();
                let idx = cum.partition_point(|&c| c <= u);
                idx.min(cum.len() - 1) as u64
            }
            Plan::Geometric { b } => {
                let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
                if *b <= 0.0 {
                    return 0;
                }
                (u.ln() / b.ln()).floor() as u64
            }
            Plan::PowerTail { c, q, cum } => {
                let u: f64 = rng.random();
                {
                    let table = cum.read().expect("sampler lock");
                    if u < *table.last().expect("nonempty") {
                        return table.partition_point(|&x| x <= u) as u64;
                    }
                }
                let mut table = cum.write().expect("sampler lock");
                while u >= *table.last().expect("nonempty") {
                    let k = table.len() as f64;
                    let next = table.last().unwrap() + c * k.powf(-q);
                    table.push(next);
                }
                table.partition_point(|&x| x <= u) as u64
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Law specification strings
// ---------------------------------------------------------------------------

impl fmt::Display for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            LawRepr::Finite { probs } => {
                write!(f, "finite:")?;
                for (i, q) in probs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{q}")?;
                }
            }
            LawRepr::Geometric { mean, .. } => write!(f, "geometric:mean={mean}")?,
            LawRepr::PowerTail { alpha, mean, .. } => {
                write!(f, "powertail:alpha={alpha},mean={mean}")?
            }
        }
        if self.retention < 1.0 {
            write!(f, "|thin={}", self.retention)?;
        }
        Ok(())
    }
}

impl FromStr for OffspringLaw {
    type Err = Error;

    /// Parses the law grammar
    /// `finite:q0,q1,...,qK | powertail:alpha=<a>,mean=<m> | geometric:mean=<m>`
    /// with an optional `|thin=<p>` suffix.
    ///
    /// A finite pmf whose sum is off by more than `1e-9` is rejected; a sum
    /// within `(1e-12, 1e-9]` of 1 is renormalized.
    fn from_str(spec: &str) -> Result<Self> {
        let mut parts = spec.split('|');
        let base = parts.next().expect("split yields at least one part");
        let mut law = parse_base(base.trim())?;
        for suffix in parts {
            let suffix = suffix.trim();
            let Some(p) = suffix.strip_prefix("thin=") else {
                return Err(Error::ParseLaw(format!(
                    "unknown law suffix '{suffix}' (expected thin=<p>)"
                )));
            };
            let p: f64 = p
                .parse()
                .map_err(|e| Error::ParseLaw(format!("bad thin probability '{p}': {e}")))?;
            law = law.thin(p)?;
        }
        Ok(law)
    }
}

fn parse_base(base: &str) -> Result<OffspringLaw> {
    let Some((kind, args)) = base.split_once(':') else {
        return Err(Error::ParseLaw(format!(
            "law spec '{base}' has no kind prefix (finite:, geometric:, powertail:)"
        )));
    };
    match kind {
        "finite" => {
            let mut probs = Vec::new();
            for tok in args.split(',') {
                let v: f64 = tok.trim().parse().map_err(|e| {
                    Error::ParseLaw(format!("bad finite probability '{tok}': {e}"))
                })?;
                probs.push(v);
            }
            if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::ParseLaw(
                    "finite law probabilities must be finite and nonnegative".into(),
                ));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::ParseLaw(format!(
                    "finite law pmf sums to {sum}, not 1 (tolerance 1e-9)"
                )));
            }
            if (sum - 1.0).abs() > PMF_SUM_TOL {
                for p in &mut probs {
                    *p /= sum;
                }
            }
            OffspringLaw::finite(probs)
        }
        "geometric" => {
            let kv = parse_kv(args)?;
            let mean = take_num(&kv, "mean", "geometric")?;
            if kv.len() != 1 {
                return Err(Error::ParseLaw(format!(
                    "geometric law takes only mean=<m>, got '{args}'"
                )));
            }
            OffspringLaw::geometric(mean)
        }
        "powertail" => {
            let kv = parse_kv(args)?;
            let alpha = take_num(&kv, "alpha", "powertail")?;
            let mean = take_num(&kv, "mean", "powertail")?;
            if kv.len() != 2 {
                return Err(Error::ParseLaw(format!(
                    "powertail law takes alpha=<a>,mean=<m>, got '{args}'"
                )));
            }
            OffspringLaw::power_tail(alpha, mean)
        }
        other => Err(Error::ParseLaw(format!("unknown law kind '{other}'"))),
    }
}

fn parse_kv(args: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for tok in args.split(',') {
        let Some((k, v)) = tok.split_once('=') else {
            return Err(Error::ParseLaw(format!("expected key=value, got '{tok}'")));
        };
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::ParseLaw(format!("bad value for '{k}': {e}")))?;
        out.push((k.trim().to_string(), v));
    }
    Ok(out)
}

fn take_num(kv: &[(String, f64)], key: &str, kind: &str) -> Result<f64> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::ParseLaw(format!("{kind} law is missing {key}=<value>")))
}
