//! Numeric primitives: compensated summation, zeta-type sums with certified
//! truncation bounds, incomplete gamma functions for fractional shapes, and
//! exact dyadic-rational arithmetic on powers of an `f64`.

pub mod gammainc;
pub mod powertail;
pub mod zeta;

use num_bigint::BigUint;

/// Neumaier-compensated accumulator. Protects long positive-term sums
/// against cancellation and drift.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.s + self.c
    }
}

/// Natural log of a nonzero big integer, accurate to a couple of ulps.
///
/// Takes the top 53 bits as an exact `f64` mantissa and adds `ln 2` times
/// the discarded shift, so the result stays finite for integers far beyond
/// `f64` range.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    assert!(bits > 0, "ln of zero");
    if bits <= 63 {
        let v: u64 = x.try_into().map(|v: u64| v).unwrap_or(u64::MAX);
        return (v as f64).ln();
    }
    let shift = bits - 53;
    let top: u64 = (x >> shift).try_into().expect("53 bits fit in u64");
    (top as f64).ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Exact dyadic decomposition of a positive finite `f64`:
/// `value = mant * 2^exp2` with `mant` odd (or 1).
///
/// Every `f64` is a dyadic rational, so powers and ceilings of powers can be
/// computed exactly in big-integer arithmetic with no guard bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Dyadic {
    pub mant: BigUint,
    pub exp2: i64,
}

impl Dyadic {
    pub fn from_f64(x: f64) -> Option<Self> {
        if !(x.is_finite() && x > 0.0) {
            return None;
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut mant, mut exp2) = if raw_exp == 0 {
            (frac, -1074i64) // subnormal
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        let tz = mant.trailing_zeros() as i64;
        mant >>= tz;
        exp2 += tz;
        Some(Dyadic {
            mant: BigUint::from(mant),
            exp2,
        })
    }

    /// Exact `self^e` as `(mant^e, exp2 * e)`.
    pub fn pow(&self, e: u64) -> (BigUint, i64) {
        let e32 = u32::try_from(e).expect("exponent fits u32");
        (
            self.mant.pow(e32),
            self.exp2
                .checked_mul(e as i64)
                .expect("dyadic exponent overflow"),
        )
    }

    /// Exact test `self^e > rhs` for a nonnegative integer `rhs`.
    pub fn pow_gt(&self, e: u64, rhs: &BigUint) -> bool {
        let (m, s) = self.pow(e);
        cmp_shifted(&m, s, rhs) == std::cmp::Ordering::Greater
    }
}

/// Compares `mant * 2^shift` with `rhs`, exactly.
pub fn cmp_shifted(mant: &BigUint, shift: i64, rhs: &BigUint) -> std::cmp::Ordering {
    if shift >= 0 {
        (mant << (shift as u64)).cmp(rhs)
    } else {
        mant.cmp(&(rhs << ((-shift) as u64)))
    }
}

/// Exact `ceil(mant * 2^shift)`.
pub fn ceil_shifted(mant: &BigUint, shift: i64) -> BigUint {
    if shift >= 0 {
        mant << (shift as u64)
    } else {
        let k = (-shift) as u64;
        let one = BigUint::from(1u32);
        let denom_minus_one = (&one << k) - &one;
        (mant + denom_minus_one) >> k
    }
}
