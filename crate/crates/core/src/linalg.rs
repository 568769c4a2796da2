//! Dense rational matrices and the subspace algebra used throughout the crate.
//!
//! Everything here is exact; elimination uses plain fraction arithmetic, which
//! is fine at the dimensions this toolkit targets.

use crate::rat::{abs, Rat};
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        QMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        QMat::from_rows(rows.iter().map(|r| r.iter().map(|&x| crate::rat::int(x)).collect()).collect())
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_vec(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn col(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let t = a * b;
                        out[(i, j)] += t;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        QMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        QMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &Rat) -> QMat {
        let data = self.data.iter().map(|a| a * c).collect();
        QMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> QMat {
        self.scale(&-Rat::one())
    }

    pub fn pow(&self, e: usize) -> QMat {
        assert_eq!(self.rows, self.cols);
        let mut acc = QMat::identity(self.rows);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn trace(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Max absolute value of the entries (the archimedean max norm).
    pub fn max_abs(&self) -> Rat {
        self.data.iter().map(abs).max().unwrap_or_else(Rat::zero)
    }

    pub fn det(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Rat::zero();
            };
            if p != col {
                m.swap_rows(p, col);
                det = -det;
            }
            let pivot = m[(col, col)].clone();
            det *= &pivot;
            for r in col + 1..n {
                let factor = &m[(r, col)] / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let t = &factor * &m[(col, c)];
                    m[(r, c)] -= t;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<QMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = QMat::identity(n);
        for col in 0..n {
            let p = (col..n).find(|&r| !m[(r, col)].is_zero())?;
            m.swap_rows(p, col);
            inv.swap_rows(p, col);
            let pivot = m[(col, col)].clone();
            for c in 0..n {
                m[(col, c)] /= &pivot;
                inv[(col, c)] /= &pivot;
            }
            for r in 0..n {
                if r == col || m[(r, col)].is_zero() {
                    continue;
                }
                let factor = m[(r, col)].clone();
                for c in 0..n {
                    let t = &factor * &m[(col, c)];
                    m[(r, c)] -= t;
                    let t = &factor * &inv[(col, c)];
                    inv[(r, c)] -= t;
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            let ia = a * self.cols + c;
            let ib = b * self.cols + c;
            self.data.swap(ia, ib);
        }
    }

    /// Reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(p, r);
            let pivot = self[(r, c)].clone();
            for j in c..self.cols {
                self[(r, j)] /= &pivot;
            }
            for i in 0..self.rows {
                if i == r || self[(i, c)].is_zero() {
                    continue;
                }
                let factor = self[(i, c)].clone();
                for j in c..self.cols {
                    let t = &factor * &self[(r, j)];
                    self[(i, j)] -= t;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis (as rows) of the kernel `{x : M x = 0}`.
    pub fn kernel(&self) -> Vec<Vec<Rat>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let mut basis = Vec::new();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        for free in (0..self.cols).filter(|c| !pivot_set.contains(c)) {
            let mut v = vec![Rat::zero(); self.cols];
            v[free] = Rat::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(row, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of `M x = b`, if consistent.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(self.rows, b.len());
        let mut aug = QMat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // inconsistent
        }
        let mut x = vec![Rat::zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(row, self.cols)].clone();
        }
        Some(x)
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

/// A rational subspace of `Q^n`, stored as a spanning matrix in RREF.
/// The RREF rows make equality tests and membership canonical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    pub ambient: usize,
    basis: QMat, // RREF, full row rank
}

impl Subspace {
    pub fn from_generators(ambient: usize, gens: &[Vec<Rat>]) -> Self {
        assert!(gens.iter().all(|g| g.len() == ambient));
        if gens.is_empty() {
            return Subspace { ambient, basis: QMat::zeros(0, ambient) };
        }
        let mut m = QMat::from_rows(gens.to_vec());
        let pivots = m.rref();
        let rows = pivots.len();
        let mut basis = QMat::zeros(rows, ambient);
        for i in 0..rows {
            for j in 0..ambient {
                basis[(i, j)] = m[(i, j)].clone();
            }
        }
        Subspace { ambient, basis }
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: QMat::zeros(0, ambient) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: QMat::identity(ambient) }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis_rows(&self) -> Vec<Vec<Rat>> {
        self.basis.rows_vec()
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        assert_eq!(v.len(), self.ambient);
        if v.iter().all(|x| x.is_zero()) {
            return true;
        }
        let mut gens = self.basis.rows_vec();
        gens.push(v.to_vec());
        Subspace::from_generators(self.ambient, &gens).dim() == self.dim()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis_rows().iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        let mut gens = self.basis_rows();
        gens.extend(other.basis_rows());
        Subspace::from_generators(self.ambient, &gens)
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        let (a, b) = (self.dim(), other.dim());
        if a == 0 || b == 0 {
            return Subspace::zero(self.ambient);
        }
        // Kernel of [A^T | -B^T]: x A = y B gives vectors in both row spans.
        let mut m = QMat::zeros(self.ambient, a + b);
        for j in 0..a {
            for i in 0..self.ambient {
                m[(i, j)] = self.basis[(j, i)].clone();
            }
        }
        for j in 0..b {
            for i in 0..self.ambient {
                m[(i, a + j)] = -other.basis[(j, i)].clone();
            }
        }
        let ker = m.kernel();
        let gens: Vec<Vec<Rat>> = ker
            .iter()
            .map(|xy| {
                (0..self.ambient)
                    .map(|i| (0..a).map(|j| &xy[j] * &self.basis[(j, i)]).sum())
                    .collect()
            })
            .collect();
        Subspace::from_generators(self.ambient, &gens)
    }

    /// Basis of the orthogonal complement w.r.t. the standard bilinear form.
    pub fn complement_perp(&self) -> Vec<Vec<Rat>> {
        if self.dim() == 0 {
            return QMat::identity(self.ambient).rows_vec();
        }
        self.basis.kernel()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    #[test]
    fn det_and_inverse() {
        let m = QMat::from_i64(&[&[1, 2], &[3, 4]]);
        assert_eq!(m.det(), int(-2));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), QMat::identity(2));
        let singular = QMat::from_i64(&[&[1, 2], &[2, 4]]);
        assert_eq!(singular.det(), int(0));
        assert!(singular.inverse().is_none());
    }

    #[test]
    fn kernel_solves() {
        let m = QMat::from_i64(&[&[1, 1, 0], &[0, 0, 1]]);
        let k = m.kernel();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], vec![int(-1), int(1), int(0)]);
        let x = m.solve(&[int(3), int(5)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![int(3), int(5)]);
    }

    #[test]
    fn subspace_intersection() {
        // span{(1,0,0),(0,1,0)} ∩ span{(0,1,0),(0,0,1)} = span{(0,1,0)}
        let a = Subspace::from_generators(3, &[vec![int(1), int(0), int(0)], vec![int(0), int(1), int(0)]]);
        let b = Subspace::from_generators(3, &[vec![int(0), int(1), int(0)], vec![int(0), int(0), int(1)]]);
        let c = a.intersect(&b);
        assert_eq!(c.dim(), 1);
        assert!(c.contains(&[int(0), int(1), int(0)]));
        assert!(!c.contains(&[int(1), int(0), int(0)]));
    }

    #[test]
    fn rref_fractions() {
        let mut m = QMat::from_rows(vec![vec![rat(1, 2), rat(1, 3)], vec![rat(1, 4), rat(1, 6)]]);
        let pivots = m.rref();
        assert_eq!(pivots.len(), 1); // rows proportional
    }
}
