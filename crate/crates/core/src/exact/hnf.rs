//! Integer matrices, Hermite normal form, integer kernels, and saturation.
//!
//! Saturation (the lattice of *all* integer points of a rational subspace) is
//! what makes primitive vectors and primitive submodules canonical, so this
//! module is the root of every height computation in the crate.

use crate::linalg::QMat;
use crate::rat::Rat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl ZMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ZMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ZMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        ZMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_vec(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_qmat(&self) -> QMat {
        QMat::from_rows(
            self.rows_vec()
                .into_iter()
                .map(|r| r.into_iter().map(Rat::from_integer).collect())
                .collect(),
        )
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row_mul(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let t = k * &self[(src, c)];
            self[(dst, c)] += t;
        }
    }

    fn add_col_mul(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let t = k * &self[(r, src)];
            self[(r, dst)] += t;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let t = -self[(r, c)].clone();
            self[(r, c)] = t;
        }
    }

    fn negate_col(&mut self, c: usize) {
        for r in 0..self.rows {
            let t = -self[(r, c)].clone();
            self[(r, c)] = t;
        }
    }
}

impl std::ops::Index<(usize, usize)> for ZMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ZMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-style Hermite normal form. Pivots positive, entries above a pivot
/// reduced into `[0, pivot)`, zero rows dropped. The result is the canonical
/// basis of the row lattice.
pub fn row_hnf(m: &ZMat) -> ZMat {
    let mut m = m.clone();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        loop {
            // Find the row with the smallest nonzero |entry| in this column.
            let mut best: Option<usize> = None;
            for i in r..m.rows {
                if m[(i, c)].is_zero() {
                    continue;
                }
                if best.is_none_or(|b| m[(i, c)].abs() < m[(b, c)].abs()) {
                    best = Some(i);
                }
            }
            let Some(p) = best else { break };
            m.swap_rows(p, r);
            let mut done = true;
            for i in r + 1..m.rows {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let q = -(&m[(i, c)] / &m[(r, c)]); // truncated division
                m.add_row_mul(i, r, &q);
                if !m[(i, c)].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if m[(r, c)].is_zero() {
            continue;
        }
        if m[(r, c)].is_negative() {
            m.negate_row(r);
        }
        // Reduce entries above the pivot into [0, pivot).
        for i in 0..r {
            let q = -m[(i, c)].div_floor(&m[(r, c)]);
            m.add_row_mul(i, r, &q);
        }
        r += 1;
    }
    ZMat::from_rows(m.rows_vec().into_iter().take(r).collect())
}

/// Column-style HNF with a recorded unimodular transform: returns `(h, u)`
/// with `m * u == h` and `u` in `GL_n(Z)`.
pub fn col_hnf_with_transform(m: &ZMat) -> (ZMat, ZMat) {
    let mut h = m.clone();
    let mut u = ZMat::identity(m.cols);
    let mut c = 0;
    for r in 0..h.rows {
        if c == h.cols {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for j in c..h.cols {
                if h[(r, j)].is_zero() {
                    continue;
                }
                if best.is_none_or(|b| h[(r, j)].abs() < h[(r, b)].abs()) {
                    best = Some(j);
                }
            }
            let Some(p) = best else { break };
            h.swap_cols(p, c);
            u.swap_cols(p, c);
            let mut done = true;
            for j in c + 1..h.cols {
                if h[(r, j)].is_zero() {
                    continue;
                }
                let q = -(&h[(r, j)] / &h[(r, c)]);
                h.add_col_mul(j, c, &q);
                u.add_col_mul(j, c, &q);
                if !h[(r, j)].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h[(r, c)].is_zero() {
            continue;
        }
        if h[(r, c)].is_negative() {
            h.negate_col(c);
            u.negate_col(c);
        }
        c += 1;
    }
    (h, u)
}

/// Z-basis of `{x in Z^n : m x = 0}` (rows of the result). Kernels of integer
/// matrices are saturated, which is what `saturate` relies on.
pub fn zkernel(m: &ZMat) -> Vec<Vec<BigInt>> {
    if m.rows == 0 {
        return ZMat::identity(m.cols).rows_vec();
    }
    let (h, u) = col_hnf_with_transform(m);
    let mut kernel = Vec::new();
    for j in 0..m.cols {
        if (0..m.rows).all(|i| h[(i, j)].is_zero()) {
            kernel.push((0..m.cols).map(|i| u[(i, j)].clone()).collect());
        }
    }
    kernel
}

/// Clears denominators of a rational row to a primitive integer row.
pub fn clear_denominators(row: &[Rat]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in row {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() || g.is_one() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// Z-basis (rows) of `W ∩ Z^n` for the rational subspace `W` spanned by the
/// given generators. Computed as the integer kernel of an integer basis of
/// the orthogonal complement.
pub fn saturate(ambient: usize, generators: &[Vec<Rat>]) -> Vec<Vec<BigInt>> {
    let w = crate::linalg::Subspace::from_generators(ambient, generators);
    if w.is_zero() {
        return Vec::new();
    }
    if w.dim() == ambient {
        return ZMat::identity(ambient).rows_vec();
    }
    let perp: Vec<Vec<BigInt>> = w.complement_perp().iter().map(|r| clear_denominators(r)).collect();
    zkernel(&ZMat::from_rows(perp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn hnf_of_multiples() {
        let m = ZMat::from_rows(vec![vec![bi(2), bi(4)], vec![bi(4), bi(8)]]);
        let h = row_hnf(&m);
        assert_eq!(h.rows_vec(), vec![vec![bi(2), bi(4)]]);
    }

    #[test]
    fn hnf_canonical_gcd() {
        let m = ZMat::from_rows(vec![vec![bi(6)], vec![bi(10)]]);
        let h = row_hnf(&m);
        assert_eq!(h.rows_vec(), vec![vec![bi(2)]]);
    }

    #[test]
    fn kernel_is_saturated() {
        // x + 2y = 0 over Z: kernel generated by (2, -1) up to sign.
        let m = ZMat::from_rows(vec![vec![bi(1), bi(2)]]);
        let k = zkernel(&m);
        assert_eq!(k.len(), 1);
        let v = &k[0];
        assert_eq!(&v[0] + bi(2) * &v[1], bi(0));
        assert_eq!(v[0].gcd(&v[1]), bi(1));
    }

    #[test]
    fn saturation_clears_index() {
        // span{(1/2, 1/2)}: integer points are multiples of (1, 1).
        let sat = saturate(2, &[vec![rat(1, 2), rat(1, 2)]]);
        assert_eq!(sat.len(), 1);
        let v = &sat[0];
        assert_eq!(v[0].abs(), bi(1));
        assert_eq!(v[1], v[0]);
        // span{(2, 0)}: saturation is (1, 0)Z, not (2, 0)Z.
        let sat = saturate(2, &[vec![int(2), int(0)]]);
        assert_eq!(sat, vec![vec![bi(1), bi(0)]]);
    }

    #[test]
    fn saturation_full_and_zero() {
        assert_eq!(saturate(2, &[]).len(), 0);
        let full = saturate(2, &[vec![int(1), int(0)], vec![int(0), int(1)]]);
        assert_eq!(full.len(), 2);
    }
}
