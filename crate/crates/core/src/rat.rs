//! Exact rational scalars and the few conversions the toolkit allows.
//!
//! Every verdict-carrying quantity in this crate is a `Rat`. Floating point
//! appears only in regression fits and human-readable summaries.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always reduced with positive denominator
/// (maintained by `num_rational`).
pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rat {
    assert!(d != 0, "zero denominator");
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `base^e` for signed integer exponents; `e < 0` requires `base != 0`.
pub fn pow_i(base: &Rat, e: i64) -> Rat {
    if e == 0 {
        return Rat::one();
    }
    let p = base.pow(e.unsigned_abs().min(i32::MAX as u64) as i32);
    if e > 0 {
        p
    } else {
        assert!(!base.is_zero(), "negative power of zero");
        p.recip()
    }
}

pub fn abs(x: &Rat) -> Rat {
    if x.is_negative() {
        -x.clone()
    } else {
        x.clone()
    }
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from an `f64` (the dyadic value the float denotes).
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Parses "p/q", "p", or a plain decimal like "0.25".
pub fn parse(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|e| format!("bad numerator: {e}"))?;
        let d: BigInt = den.trim().parse().map_err(|e| format!("bad denominator: {e}"))?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let sign = if whole.trim_start().starts_with('-') { -1 } else { 1 };
        let w: BigInt = whole.parse().map_err(|e| format!("bad decimal: {e}"))?;
        let digits = frac.len() as u32;
        let f: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().map_err(|e| format!("bad decimal: {e}"))? };
        let den = BigInt::from(10u32).pow(digits);
        return Ok(Rat::new(w * &den + BigInt::from(sign) * f, den));
    }
    let n: BigInt = s.parse().map_err(|e| format!("bad integer: {e}"))?;
    Ok(Rat::from_integer(n))
}

pub fn format(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Serde adapter: rationals serialize as "p/q" strings.
pub mod serde_str {
    use super::Rat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rat>`.
pub mod serde_str_vec {
    use super::Rat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::format(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let ss = Vec::<String>::deserialize(d)?;
        ss.iter().map(|s| super::parse(s).map_err(serde::de::Error::custom)).collect()
    }
}

/// p-adic valuation of a nonzero integer.
pub fn val_p_int(n: &BigInt, p: u64) -> u64 {
    assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0u64;
    loop {
        let (q, r) = num_integer::Integer::div_rem(&n, &p);
        if r.is_zero() {
            n = q;
            v += 1;
        } else {
            return v;
        }
    }
}

/// p-adic valuation of a nonzero rational.
pub fn val_p(x: &Rat, p: u64) -> i64 {
    assert!(!x.is_zero());
    val_p_int(x.numer(), p) as i64 - val_p_int(x.denom(), p) as i64
}

/// p-adic absolute value `p^{-v_p(x)}` as an exact rational; `|0|_p = 0`.
pub fn abs_p(x: &Rat, p: u64) -> Rat {
    if x.is_zero() {
        return Rat::zero();
    }
    pow_i(&int(p as i64), -val_p(x, p))
}

/// Compares `a^q` with `b^p`, deciding `a^{1/p} ? b^{1/q}` for positive rationals.
pub fn cmp_root(a: &Rat, p: u32, b: &Rat, q: u32) -> std::cmp::Ordering {
    assert!(!a.is_negative() && !b.is_negative());
    a.pow(q as i32).cmp(&b.pow(p as i32))
}

/// Integer part of the n-th root of a nonnegative rational, as a rational
/// bracket `(lo, hi)` with `hi - lo <= tol`.
pub fn nth_root_bracket(x: &Rat, n: u32, tol: &Rat) -> (Rat, Rat) {
    assert!(n >= 1 && !x.is_negative() && tol > &Rat::zero());
    if x.is_zero() {
        return (Rat::zero(), Rat::zero());
    }
    let mut lo = Rat::zero();
    let mut hi = if x >= &Rat::one() { x.clone() } else { Rat::one() };
    while &(hi.clone() - &lo) > tol {
        let mid = (&lo + &hi) / int(2);
        if mid.pow(n as i32) <= *x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

pub fn max_rat<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
    if a >= b {
        a
    } else {
        b
    }
}

/// Sign of a `BigInt` as -1, 0, 1.
pub fn sign_i(n: &BigInt) -> i32 {
    match n.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}
