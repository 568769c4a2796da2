//! Exact-rational LLL reduction and Fincke–Pohst enumeration.
//!
//! Bases are matrix *columns*. Everything runs over `BigRational`; the Lovász
//! condition uses δ = 3/4. Enumeration returns every integer coefficient
//! vector inside an exact ℓ²-ball, so callers can certify ∞-norm or
//! product-norm minima by filtering.

use crate::linalg::QMat;
use crate::rat::{rat, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub struct LllResult {
    /// Reduced basis, columns.
    pub basis: QMat,
    /// Unimodular transform with `basis = original · transform`.
    pub transform: QMat,
}

struct GramSchmidt {
    mu: Vec<Vec<Rat>>,
    bstar_norm2: Vec<Rat>,
}

fn gram_schmidt(cols: &[Vec<Rat>]) -> GramSchmidt {
    let k = cols.len();
    let mut mu = vec![vec![Rat::zero(); k]; k];
    let mut bstar: Vec<Vec<Rat>> = Vec::with_capacity(k);
    let mut norms = Vec::with_capacity(k);
    for i in 0..k {
        let mut v = cols[i].clone();
        for j in 0..i {
            let num: Rat = cols[i].iter().zip(&bstar[j]).map(|(a, b)| a * b).sum();
            let m = if norms[j] == Rat::zero() { Rat::zero() } else { num / &norms[j] };
            for (x, y) in v.iter_mut().zip(&bstar[j]) {
                *x -= &m * y;
            }
            mu[i][j] = m;
        }
        let n2: Rat = v.iter().map(|x| x * x).sum();
        norms.push(n2);
        bstar.push(v);
    }
    GramSchmidt { mu, bstar_norm2: norms }
}

/// LLL-reduces the columns of `basis` (must be linearly independent).
pub fn lll(basis: &QMat) -> LllResult {
    let n_cols = basis.cols;
    let mut cols: Vec<Vec<Rat>> = (0..n_cols).map(|j| basis.col(j)).collect();
    let mut u = QMat::identity(n_cols);
    let delta = rat(3, 4);
    let mut gs = gram_schmidt(&cols);
    let mut k = 1usize;
    while k < n_cols {
        for j in (0..k).rev() {
            let r = round_nearest(&gs.mu[k][j]);
            if !r.is_zero() {
                let rq = Rat::from_integer(r);
                for t in 0..cols[k].len() {
                    let d = &rq * &cols[j][t];
                    cols[k][t] -= d;
                }
                for t in 0..n_cols {
                    let d = &rq * &u[(t, j)];
                    u[(t, k)] -= d;
                }
                gs = gram_schmidt(&cols);
            }
        }
        let lhs = &gs.bstar_norm2[k] + &gs.mu[k][k - 1] * &gs.mu[k][k - 1] * &gs.bstar_norm2[k - 1];
        if lhs >= &delta * &gs.bstar_norm2[k - 1] {
            k += 1;
        } else {
            cols.swap(k, k - 1);
            for t in 0..n_cols {
                let a = u[(t, k)].clone();
                let b = u[(t, k - 1)].clone();
                u[(t, k)] = b;
                u[(t, k - 1)] = a;
            }
            gs = gram_schmidt(&cols);
            k = k.max(2) - 1;
        }
    }
    let mut out = QMat::zeros(basis.rows, n_cols);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..basis.rows {
            out[(i, j)] = c[i].clone();
        }
    }
    LllResult { basis: out, transform: u }
}

fn round_nearest(x: &Rat) -> BigInt {
    (x + rat(1, 2)).floor().to_integer()
}

/// All nonzero integer coefficient vectors `x` with `‖B x‖₂² ≤ bound`.
/// Only one of each ± pair is returned (the one whose last nonzero
/// coefficient is positive).
pub fn enumerate_in_ball(basis: &QMat, bound: &Rat) -> Vec<Vec<BigInt>> {
    let k = basis.cols;
    if k == 0 {
        return Vec::new();
    }
    let cols: Vec<Vec<Rat>> = (0..k).map(|j| basis.col(j)).collect();
    let gs = gram_schmidt(&cols);
    let mut out = Vec::new();
    let mut x = vec![BigInt::zero(); k];
    // Depth-first over coordinates k-1 .. 0. At level i the squared norm
    // contribution is (x_i + c_i)² ‖b*_i‖² with c_i = Σ_{j>i} μ_{ji} x_j.
    fn recurse(
        gs: &GramSchmidt,
        level: usize,
        budget: &Rat,
        x: &mut Vec<BigInt>,
        out: &mut Vec<Vec<BigInt>>,
    ) {
        let center: Rat = (level + 1..x.len())
            .map(|j| &gs.mu[j][level] * Rat::from_integer(x[j].clone()))
            .sum();
        let bst = &gs.bstar_norm2[level];
        let fits = |t: &BigInt| -> Option<Rat> {
            let term = (Rat::from_integer(t.clone()) + &center).pow(2) * bst;
            if &term <= budget {
                Some(budget - term)
            } else {
                None
            }
        };
        let descend = |t: BigInt, rem: Rat, x: &mut Vec<BigInt>, out: &mut Vec<Vec<BigInt>>| {
            x[level] = t;
            if level == 0 {
                if x.iter().any(|v| !v.is_zero()) {
                    // canonical representative of the ± pair
                    let last_nonzero_positive = x.iter().rev().find(|v| !v.is_zero()).map(|v| v.is_positive()).unwrap_or(false);
                    if last_nonzero_positive {
                        out.push(x.clone());
                    }
                }
            } else {
                recurse(gs, level - 1, &rem, x, out);
            }
            x[level] = BigInt::zero();
        };
        // scan down from floor(-center), then up, while inside the ball
        let start = (-&center).floor().to_integer();
        let mut t = start.clone();
        while let Some(rem) = fits(&t) {
            descend(t.clone(), rem, x, out);
            t -= BigInt::one();
        }
        let mut t = &start + BigInt::one();
        while let Some(rem) = fits(&t) {
            descend(t.clone(), rem, x, out);
            t += BigInt::one();
        }
    }
    if gs.bstar_norm2.iter().any(|n| n.is_zero()) {
        // dependent columns: caller should have prevented this
        return Vec::new();
    }
    recurse(&gs, k - 1, bound, &mut x, &mut out);
    out
}
