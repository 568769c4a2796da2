//! Sparse multivariate polynomials over Z, enough for certificate
//! verification and Jacobians: arithmetic, evaluation, derivatives, and a
//! small expression parser for the CLI.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// Terms map exponent vectors (one entry per variable) to coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MPoly {
    pub vars: usize,
    terms: BTreeMap<Vec<u32>, BigInt>,
}

impl MPoly {
    pub fn zero(vars: usize) -> Self {
        MPoly { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: BigInt) -> Self {
        let mut p = MPoly::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; vars], c);
        }
        p
    }

    pub fn var(vars: usize, i: usize) -> Self {
        assert!(i < vars);
        let mut e = vec![0; vars];
        e[i] = 1;
        let mut p = MPoly::zero(vars);
        p.terms.insert(e, BigInt::one());
        p
    }

    pub fn from_terms(vars: usize, terms: Vec<(Vec<u32>, BigInt)>) -> Self {
        let mut p = MPoly::zero(vars);
        for (e, c) in terms {
            assert_eq!(e.len(), vars);
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            let key = self.terms.iter().find(|(_, v)| v.is_zero()).map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigInt)> {
        self.terms.iter()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    /// Logarithmic height: ln of the max absolute coefficient (0 for 0).
    pub fn log_height(&self) -> f64 {
        let m = self.max_abs_coeff();
        if m.is_zero() || m.is_one() {
            0.0
        } else {
            // ln via bit length for very large coefficients
            let bits = m.bits();
            if bits <= 52 {
                (m.to_string().parse::<f64>().unwrap_or(1.0)).ln()
            } else {
                (bits as f64 - 1.0) * std::f64::consts::LN_2
            }
        }
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.vars, other.vars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> MPoly {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect();
        MPoly { vars: self.vars, terms }
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.vars, other.vars);
        let mut out = MPoly::zero(self.vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn mul_scalar(&self, c: &BigInt) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.vars);
        }
        let terms = self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect();
        MPoly { vars: self.vars, terms }
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut acc = MPoly::constant(self.vars, BigInt::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, xs: &[BigInt]) -> BigInt {
        assert_eq!(xs.len(), self.vars);
        let mut acc = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &p) in xs.iter().zip(e) {
                for _ in 0..p {
                    t *= x;
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_mod(&self, xs: &[BigInt], modulus: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone() % modulus;
            for (x, &p) in xs.iter().zip(e) {
                for _ in 0..p {
                    t = (t * x) % modulus;
                }
            }
            acc = (acc + t) % modulus;
        }
        ((acc % modulus) + modulus) % modulus
    }

    pub fn partial(&self, i: usize) -> MPoly {
        assert!(i < self.vars);
        let mut out = MPoly::zero(self.vars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * BigInt::from(e[i]));
        }
        out
    }
}

/// Parses expressions like `x^2 - 2`, `3*x*y + y^3 - 1`, `x0^2 + x1`.
/// Variables: `x, y, z, w` (aliases of `x0..x3`) or `x<digit>`.
pub fn parse_poly(input: &str, vars: usize) -> Result<MPoly, String> {
    let mut p = Parser { s: input.as_bytes(), pos: 0, vars };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(format!("unexpected trailing input at byte {}", p.pos));
    }
    Ok(out)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    vars: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<MPoly, String> {
        let mut acc = if self.peek() == Some(b'-') {
            self.pos += 1;
            self.term()?.neg()
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MPoly, String> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                // implicit multiplication: `3x`, `x y`
                Some(c) if c.is_ascii_alphabetic() || c == b'(' => {
                    acc = acc.mul(&self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<MPoly, String> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let e: u32 = std::str::from_utf8(&self.s[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| "bad exponent".to_string())?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MPoly, String> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err("missing )".into());
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let n: BigInt = std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().unwrap();
                Ok(MPoly::constant(self.vars, n))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                self.pos += 1;
                let idx = match c {
                    b'x' => {
                        // allow x<digit>
                        if let Some(d) = self.s.get(self.pos).filter(|d| d.is_ascii_digit()) {
                            self.pos += 1;
                            (d - b'0') as usize
                        } else {
                            0
                        }
                    }
                    b'y' => 1,
                    b'z' => 2,
                    b'w' => 3,
                    _ => return Err(format!("unknown variable '{}'", c as char)),
                };
                if idx >= self.vars {
                    return Err(format!("variable index {idx} out of range for {} vars", self.vars));
                }
                Ok(MPoly::var(self.vars, idx))
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}
