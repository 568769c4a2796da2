//! Fixed-precision p-adic integers: residues mod `p^prec` with explicit
//! precision tracking. Every arithmetic result carries its guaranteed digit
//! count; valuations saturate at the working precision.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicInt {
    pub p: u64,
    /// Guaranteed-correct digit count: the value is known mod `p^prec`.
    pub prec: u32,
    /// Canonical residue in `[0, p^prec)`.
    pub val: BigInt,
}

pub fn p_pow(p: u64, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

impl PadicInt {
    pub fn new(p: u64, prec: u32, value: &BigInt) -> Self {
        let m = p_pow(p, prec);
        let mut v = value % &m;
        if v.is_negative() {
            v += &m;
        }
        PadicInt { p, prec, val: v }
    }

    pub fn zero(p: u64, prec: u32) -> Self {
        PadicInt { p, prec, val: BigInt::zero() }
    }

    /// Valuation, saturated: `None` means "≥ prec" (indistinguishable from 0
    /// at this precision).
    pub fn valuation(&self) -> Option<u32> {
        if self.val.is_zero() {
            return None;
        }
        let mut v = 0u32;
        let p = BigInt::from(self.p);
        let mut x = self.val.clone();
        while v < self.prec {
            let (q, r) = x.div_rem(&p);
            if !r.is_zero() {
                return Some(v);
            }
            x = q;
            v += 1;
        }
        None
    }

    pub fn add(&self, other: &PadicInt) -> PadicInt {
        let prec = self.prec.min(other.prec);
        PadicInt::new(self.p, prec, &(&self.val + &other.val))
    }

    pub fn sub(&self, other: &PadicInt) -> PadicInt {
        let prec = self.prec.min(other.prec);
        PadicInt::new(self.p, prec, &(&self.val - &other.val))
    }

    pub fn mul(&self, other: &PadicInt) -> PadicInt {
        let prec = self.prec.min(other.prec);
        PadicInt::new(self.p, prec, &(&self.val * &other.val))
    }

    /// Inverse of a unit (valuation 0).
    pub fn unit_inverse(&self) -> Option<PadicInt> {
        if self.valuation() != Some(0) {
            return None;
        }
        let m = p_pow(self.p, self.prec);
        let inv = mod_inverse(&self.val, &m)?;
        Some(PadicInt { p: self.p, prec: self.prec, val: inv })
    }

    /// Exact division by `p^k`; loses `k` digits of precision.
    pub fn div_p_pow(&self, k: u32) -> Option<PadicInt> {
        if k == 0 {
            return Some(self.clone());
        }
        if k > self.prec {
            return None;
        }
        let d = p_pow(self.p, k);
        let (q, r) = self.val.div_rem(&d);
        if !r.is_zero() {
            return None;
        }
        Some(PadicInt::new(self.p, self.prec - k, &q))
    }
}

/// Modular inverse via extended Euclid; `None` when not coprime.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = r1;
        r1 = r2;
        let t2 = &t0 - &q * &t1;
        t0 = t1;
        t1 = t2;
    }
    if !r0.is_one() {
        return None;
    }
    Some(t0.mod_floor(m))
}

/// A tuple of p-adic coordinates at a declared congruence level.
#[derive(Clone, Debug)]
pub struct PadicPoint {
    pub p: u64,
    pub prec: u32,
    pub coords: Vec<BigInt>,
    /// Declared `C₂`: the system vanishes mod `p^{congruence_level}` here.
    pub congruence_level: u32,
}

impl PadicPoint {
    pub fn new(p: u64, prec: u32, coords: Vec<BigInt>, congruence_level: u32) -> Self {
        assert!(prec >= congruence_level, "precision below the congruence level");
        let m = p_pow(p, prec);
        let coords = coords
            .into_iter()
            .map(|c| {
                let mut v = c % &m;
                if v.is_negative() {
                    v += &m;
                }
                v
            })
            .collect();
        PadicPoint { p, prec, coords, congruence_level }
    }
}

/// Valuation of an integer, saturated at `cap`.
pub fn val_capped(x: &BigInt, p: u64, cap: u32) -> u32 {
    if x.is_zero() {
        return cap;
    }
    let p = BigInt::from(p);
    let mut v = 0u32;
    let mut x = x.clone();
    while v < cap {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            break;
        }
        x = q;
        v += 1;
    }
    v
}
