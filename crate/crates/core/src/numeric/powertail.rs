//! Series engine for power-tail offspring laws with pmf `c k^{-q}`, `q = 2 + alpha`.
//!
//! Two sums are needed, both over `k >= 1`:
//!
//! * `pgf_sum(s)      = sum k^{-q} s^k`
//! * `complement_sum(s) = sum k^{-q} (1 - (1-s)^k)`
//!
//! Direct summation of the complement needs `O(1/s)` terms before the
//! `(1-(1-s)^k)` factor saturates, which is infeasible for the tiny survival
//! probabilities this crate feeds in. Instead the first `N` terms are summed
//! directly (each via `expm1`, so nothing cancels) and the rest is replaced
//! by an Euler-Maclaurin tail: writing `beta = -ln(1-s)` and
//! `phi(x) = x^{-q}(1 - e^{-beta x})`,
//!
//! ```text
//! sum_{k>=N} phi(k) = int_N^inf phi + phi(N)/2 - phi'(N)/12 + phi'''(N)/720 + R
//! ```
//!
//! The integral reduces exactly to upper incomplete gamma functions of
//! fractional shape:
//!
//! ```text
//! int_N^inf x^{-q}(1-e^{-beta x}) dx = beta^{q-1} G(beta N),
//! G(y) = [ y^{-1-alpha}(1-e^{-y}) + Gamma(-alpha, y) ] / (1 + alpha)
//! ```
//!
//! (integrate by parts once; the `1-e^{-y}` factor is evaluated with `expm1`).
//! The remainder `R` is bounded by `2 zeta(4)/(2 pi)^4 * int_N^inf |phi''''|`,
//! and the integrand bound is assembled term by term from
//! `1 - e^{-beta x} <= min(1, beta x)` and `e^{-beta x} <= e^{-beta N}`.
//! Every call returns the value together with this certified absolute bound.

use super::gammainc::gamma_upper;

/// `2 zeta(4) / (2 pi)^4`, the Euler-Maclaurin remainder constant after the
/// `B_4` term.
const K4: f64 = 2.0 * 1.082_323_233_711_138_2 / 1_558.545_456_544_038_9;

/// Default direct-summation cutoff. The certified tail bound at this cutoff
/// is already ~1e-14 relative; escalation beyond it is a fallback.
const N_DEFAULT: usize = 1024;
const N_MAX: usize = 65_536;

/// Internal relative accuracy target that stops cutoff escalation.
const TARGET_REL: f64 = 1e-13;

/// Precomputed series state for one tail exponent `q = 2 + alpha`.
#[derive(Debug, Clone)]
pub struct PowerTailSeries {
    alpha: f64,
    q: f64,
    /// `k^{-q}` for `k = 1..N_DEFAULT`, index 0 unused.
    kpow: Vec<f64>,
}

impl PowerTailSeries {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
        let q = 2.0 + alpha;
        let mut kpow = vec![0.0; N_DEFAULT];
        for (k, slot) in kpow.iter_mut().enumerate().skip(1) {
            *slot = (k as f64).powf(-q);
        }
        PowerTailSeries { alpha, q, kpow }
    }

    #[inline]
    fn kpow(&self, k: usize) -> f64 {
        if k < self.kpow.len() {
            self.kpow[k]
        } else {
            (k as f64).powf(-self.q)
        }
    }

    /// `sum_{k>=1} k^{-q} (1 - (1-s)^k)` for `s` in `[0, 1)`.
    ///
    /// Returns `(value, certified absolute error bound)`.
    pub fn complement_sum(&self, s: f64) -> (f64, f64) {
        debug_assert!((0.0..1.0).contains(&s));
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let beta = -(-s).ln_1p();
        let mut n = N_DEFAULT;
        loop {
            let (value, bound) = self.complement_at_cutoff(beta, n);
            if bound <= TARGET_REL * value.abs() || n >= N_MAX {
                return (value, bound);
            }
            n *= 4;
        }
    }

    fn complement_at_cutoff(&self, beta: f64, n: usize) -> (f64, f64) {
        let q = self.q;
        let alpha = self.alpha;
        let mut direct = super::NeumaierSum::new();
        for k in 1..n {
            direct.add(self.kpow(k) * (-(-beta * k as f64).exp_m1()));
        }
        let direct = direct.total();

        let nf = n as f64;
        let y = beta * nf;
        let eb = if y > 745.0 { 0.0 } else { (-y).exp() };
        let one_m = -(-y).exp_m1();
        let nq = nf.powf(-q);

        // integral: beta^{q-1} G(y), with the pure power-law limit once the
        // exponential part is below resolution
        let (integral, gamma_err) = if y > 700.0 {
            (nf.powf(1.0 - q) / (q - 1.0), 0.0)
        } else {
            let g = (y.powf(-1.0 - alpha) * one_m + gamma_upper(-alpha, y)) / (1.0 + alpha);
            let integral = beta.powf(q - 1.0) * g;
            (integral, 5e-12 * integral.abs())
        };

        let phi = nq * one_m;
        let dphi = -q * nq / nf * one_m + beta * nq * eb;
        let d3phi = -q * (q + 1.0) * (q + 2.0) * nq / (nf * nf * nf) * one_m
            + 3.0 * q * (q + 1.0) * beta * nq / (nf * nf) * eb
            + 3.0 * q * beta * beta * nq / nf * eb
            + beta * beta * beta * nq * eb;
        let tail = integral + 0.5 * phi - dphi / 12.0 + d3phi / 720.0;

        let r4 = K4 * self.complement_i4_bound(beta, nf, eb);
        let value = direct + tail;
        let rounding = 8.0 * f64::EPSILON * (direct.abs() + tail.abs());
        (value, r4 + gamma_err + rounding)
    }

    /// Upper bound on `int_N^inf |phi''''(x)| dx` for
    /// `phi(x) = x^{-q}(1 - e^{-beta x})`.
    fn complement_i4_bound(&self, beta: f64, n: f64, eb: f64) -> f64 {
        let q = self.q;
        // int_N x^{-r} dx = N^{1-r}/(r-1); int_N x^{-r} e^{-bx} dx bounded both ways
        let pow_int = |r: f64| n.powf(1.0 - r) / (r - 1.0);
        let exp_int = |r: f64| {
            let by_power = pow_int(r);
            if beta > 0.0 {
                by_power.min(n.powf(-r) * eb / beta)
            } else {
                by_power
            }
        };
        let c1 = q * (q + 1.0) * (q + 2.0) * (q + 3.0);
        let t1 = c1 * (beta * pow_int(q + 2.0)).min(pow_int(q + 3.0));
        let t2 = 4.0 * q * (q + 1.0) * (q + 2.0) * beta * exp_int(q + 3.0);
        let t3 = 6.0 * q * (q + 1.0) * beta * beta * exp_int(q + 2.0);
        let t4 = 4.0 * q * beta.powi(3) * exp_int(q + 1.0);
        let t5 = beta.powi(4) * exp_int(q);
        t1 + t2 + t3 + t4 + t5
    }

    /// `sum_{k>=1} k^{-q} s^k` for `s` in `[0, 1)`.
    ///
    /// Returns `(value, certified absolute error bound)`.
    pub fn pgf_sum(&self, s: f64) -> (f64, f64) {
        debug_assert!((0.0..1.0).contains(&s));
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let beta = -s.ln();
        let mut n = N_DEFAULT;
        loop {
            let (value, bound) = self.pgf_at_cutoff(s, beta, n);
            if bound <= TARGET_REL * value.abs() || n >= N_MAX {
                return (value, bound);
            }
            n *= 4;
        }
    }

    fn pgf_at_cutoff(&self, s: f64, beta: f64, n: usize) -> (f64, f64) {
        let q = self.q;
        let alpha = self.alpha;
        let mut direct = super::NeumaierSum::new();
        let mut sk = 1.0;
        for k in 1..n {
            sk *= s;
            if sk == 0.0 {
                break;
            }
            direct.add(self.kpow(k) * sk);
        }
        let direct = direct.total();

        let nf = n as f64;
        let y = beta * nf;
        if y > 700.0 {
            // the tail is below 1e-300 relative to the k = 1 term
            return (direct, 4.0 * f64::EPSILON * direct.abs());
        }
        let integral = beta.powf(q - 1.0) * gamma_upper(-1.0 - alpha, y);
        let psi = nf.powf(-q) * (-y).exp();
        let l1 = -(beta + q / nf);
        let l2 = q / (nf * nf);
        let l3 = -2.0 * q / (nf * nf * nf);
        let l4 = 6.0 * q / (nf * nf * nf * nf);
        let dpsi = psi * l1;
        let d3psi = psi * (l1 * l1 * l1 + 3.0 * l1 * l2 + l3);
        let tail = integral + 0.5 * psi - dpsi / 12.0 + d3psi / 720.0;

        // |psi''''(x)| <= psi(x) * B(N) for x >= N, so the remainder integral
        // is bounded by B(N) times the tail integral itself
        let b4 = l1.powi(4) + 6.0 * l1 * l1 * l2 + 4.0 * l1 * l3 + 3.0 * l2 * l2 + l4;
        let r4 = K4 * b4.abs() * integral.abs();
        let value = direct + tail;
        let gamma_err = 5e-12 * integral.abs();
        let rounding = 8.0 * f64::EPSILON * (direct.abs() + tail.abs());
        (value, r4 + gamma_err + rounding)
    }
}
