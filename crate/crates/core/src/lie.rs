//! Lie-algebra computations inside `sl_N` over Q: brackets, Killing forms,
//! radicals, class-H closures, nilpotency certificates, normalizers, and the
//! parabolic-from-nilpotent construction.
//!
//! The fixed coordinate basis of `sl_N` is `H_1..H_{N-1}` (with
//! `H_i = E_ii - E_{i+1,i+1}`) followed by the off-diagonal `E_ij` in
//! row-major order. For `sl_2` this is `(h, e, f)`.

use crate::exact::hnf;
use crate::exact::{ExactVector, ExteriorVector};
use crate::linalg::{QMat, Subspace};
use crate::rat::{int, Rat};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LieError {
    #[error("matrix is not traceless")]
    NotTraceless,
    #[error("basis is linearly dependent")]
    DependentBasis,
    #[error("span is not closed under the bracket")]
    NotClosed,
    #[error("generator is not a nilpotent element")]
    NotNilpotent,
    #[error("algebra is not nilpotent: lower central series stalls")]
    NotNilpotentAlgebra,
    #[error("inner algebra is not contained in the ambient one")]
    NotContained,
}

pub fn sl_dim(n: usize) -> usize {
    n * n - 1
}

/// The fixed ordered basis of `sl_N`.
pub fn sl_basis(n: usize) -> Vec<QMat> {
    let mut basis = Vec::with_capacity(sl_dim(n));
    for i in 0..n - 1 {
        let mut h = QMat::zeros(n, n);
        h[(i, i)] = Rat::one();
        h[(i + 1, i + 1)] = -Rat::one();
        basis.push(h);
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut e = QMat::zeros(n, n);
            e[(i, j)] = Rat::one();
            basis.push(e);
        }
    }
    basis
}

/// Coordinates of a traceless matrix in the fixed `sl_N` basis.
pub fn mat_to_coords(m: &QMat) -> Result<Vec<Rat>, LieError> {
    let n = m.rows;
    assert_eq!(m.rows, m.cols);
    if !m.trace().is_zero() {
        return Err(LieError::NotTraceless);
    }
    let mut coords = Vec::with_capacity(sl_dim(n));
    // diagonal part: entry_k = c_k - c_{k-1}, so c_k is a partial sum
    let mut acc = Rat::zero();
    for k in 0..n - 1 {
        acc += &m[(k, k)];
        coords.push(acc.clone());
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                coords.push(m[(i, j)].clone());
            }
        }
    }
    Ok(coords)
}

pub fn coords_to_mat(n: usize, coords: &[Rat]) -> QMat {
    assert_eq!(coords.len(), sl_dim(n));
    let mut m = QMat::zeros(n, n);
    let mut idx = 0;
    for i in 0..n - 1 {
        m[(i, i)] += &coords[idx];
        m[(i + 1, i + 1)] -= &coords[idx];
        idx += 1;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[(i, j)] = coords[idx].clone();
                idx += 1;
            }
        }
    }
    m
}

/// `[z, w] = zw - wz`.
pub fn bracket(z: &QMat, w: &QMat) -> QMat {
    z.mul(w).sub(&w.mul(z))
}

/// `ad(z)` as a matrix on `sl_N` in the fixed coordinates.
pub fn ad_matrix(n: usize, z: &QMat) -> QMat {
    let basis = sl_basis(n);
    let d = sl_dim(n);
    let mut m = QMat::zeros(d, d);
    for (j, b) in basis.iter().enumerate() {
        let col = mat_to_coords(&bracket(z, b)).expect("bracket of traceless is traceless");
        for i in 0..d {
            m[(i, j)] = col[i].clone();
        }
    }
    m
}

/// `Ad(g)` on `sl_N` in the fixed coordinates (`z ↦ g z g⁻¹`).
pub fn ad_group(n: usize, g: &QMat) -> QMat {
    let g_inv = g.inverse().expect("group element must be invertible");
    let basis = sl_basis(n);
    let d = sl_dim(n);
    let mut m = QMat::zeros(d, d);
    for (j, b) in basis.iter().enumerate() {
        let col = mat_to_coords(&g.mul(b).mul(&g_inv)).expect("conjugate of traceless is traceless");
        for i in 0..d {
            m[(i, j)] = col[i].clone();
        }
    }
    m
}

/// A Lie subalgebra of `sl_N` given by an explicit basis of matrices.
/// Closure under the bracket is verified at construction.
#[derive(Clone, Debug)]
pub struct MatrixLieAlgebra {
    pub n: usize,
    basis: Vec<QMat>,
    coords: Vec<Vec<Rat>>,
    span: Subspace,
}

impl MatrixLieAlgebra {
    pub fn new(n: usize, basis: Vec<QMat>) -> Result<Self, LieError> {
        let coords: Result<Vec<_>, _> = basis.iter().map(mat_to_coords).collect();
        let coords = coords?;
        let span = Subspace::from_generators(sl_dim(n), &coords);
        if span.dim() != basis.len() {
            return Err(LieError::DependentBasis);
        }
        for a in &basis {
            for b in &basis {
                let br = mat_to_coords(&bracket(a, b))?;
                if !span.contains(&br) {
                    return Err(LieError::NotClosed);
                }
            }
        }
        Ok(MatrixLieAlgebra { n, basis, coords, span })
    }

    pub fn zero(n: usize) -> Self {
        MatrixLieAlgebra { n, basis: Vec::new(), coords: Vec::new(), span: Subspace::zero(sl_dim(n)) }
    }

    pub fn sl_full(n: usize) -> Self {
        MatrixLieAlgebra::new(n, sl_basis(n)).expect("sl_N is closed")
    }

    /// Completes a generating set to the Lie algebra it generates.
    pub fn generated(n: usize, gens: &[QMat]) -> Result<Self, LieError> {
        let mut coords: Vec<Vec<Rat>> = Vec::new();
        let mut mats: Vec<QMat> = Vec::new();
        let mut span = Subspace::zero(sl_dim(n));
        let mut queue: Vec<QMat> = gens.to_vec();
        while let Some(m) = queue.pop() {
            let c = mat_to_coords(&m)?;
            if span.contains(&c) {
                continue;
            }
            for old in &mats {
                queue.push(bracket(old, &m));
            }
            coords.push(c.clone());
            let mut gens2 = span.basis_rows();
            gens2.push(c);
            span = Subspace::from_generators(sl_dim(n), &gens2);
            mats.push(m);
        }
        Ok(Self::from_span(n, &span))
    }

    /// The algebra spanned by a bracket-closed subspace of `sl_N`
    /// coordinates, with a saturated primitive integral basis.
    pub fn from_span(n: usize, span: &Subspace) -> Self {
        let sat = hnf::saturate(sl_dim(n), &span.basis_rows());
        let basis: Vec<QMat> = sat
            .iter()
            .map(|r| coords_to_mat(n, &r.iter().map(|x| Rat::from_integer(x.clone())).collect::<Vec<_>>()))
            .collect();
        MatrixLieAlgebra::new(n, basis).expect("saturation preserves span and closure")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[QMat] {
        &self.basis
    }

    pub fn coords(&self) -> &[Vec<Rat>] {
        &self.coords
    }

    pub fn span(&self) -> &Subspace {
        &self.span
    }

    pub fn contains(&self, m: &QMat) -> bool {
        mat_to_coords(m).map(|c| self.span.contains(&c)).unwrap_or(false)
    }

    pub fn same_span(&self, other: &MatrixLieAlgebra) -> bool {
        self.dim() == other.dim() && self.span.contains_subspace(&other.span)
    }

    /// Basis vectors as `ExactVector`s in `sl_N` coordinates.
    pub fn coord_vectors(&self) -> Vec<ExactVector> {
        self.coords.iter().map(|c| ExactVector::new(c.clone())).collect()
    }

    /// Primitive integral wedge vector of the span; its ∞-norm is the height.
    pub fn primitive_vector(&self) -> Result<ExteriorVector, crate::exact::ExactError> {
        crate::exact::primitive_integral_vector(&self.coord_vectors())
    }

    pub fn height(&self) -> Result<BigInt, crate::exact::ExactError> {
        crate::exact::wedge::subspace_height(&self.coord_vectors())
    }

    /// `ad(z)` restricted to this algebra, in its own basis. `z` must
    /// normalize the algebra.
    pub fn ad_inside(&self, z: &QMat) -> Result<QMat, LieError> {
        let d = self.dim();
        let mut m = QMat::zeros(d, d);
        let basis_mat = QMat::from_rows(self.coords.clone()).transpose(); // columns are basis coords
        for (j, b) in self.basis.iter().enumerate() {
            let br = mat_to_coords(&bracket(z, b))?;
            let col = basis_mat.solve(&br).ok_or(LieError::NotClosed)?;
            for i in 0..d {
                m[(i, j)] = col[i].clone();
            }
        }
        Ok(m)
    }

    /// Killing form `K[i][j] = tr(ad b_i ∘ ad b_j)` with `ad` computed inside
    /// the algebra.
    pub fn killing_matrix(&self) -> QMat {
        let d = self.dim();
        let ads: Vec<QMat> = self.basis.iter().map(|b| self.ad_inside(b).expect("closure verified")).collect();
        let mut k = QMat::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let t = ads[i].mul(&ads[j]).trace();
                k[(i, j)] = t.clone();
                k[(j, i)] = t;
            }
        }
        k
    }

    /// `[L, L]` with a saturated integral basis.
    pub fn derived(&self) -> MatrixLieAlgebra {
        let mut gens = Vec::new();
        for i in 0..self.dim() {
            for j in i + 1..self.dim() {
                gens.push(mat_to_coords(&bracket(&self.basis[i], &self.basis[j])).unwrap());
            }
        }
        MatrixLieAlgebra::from_span(self.n, &Subspace::from_generators(sl_dim(self.n), &gens))
    }

    /// Does the derived series reach zero?
    pub fn is_solvable(&self) -> bool {
        let mut cur = self.clone();
        loop {
            if cur.dim() == 0 {
                return true;
            }
            let next = cur.derived();
            if next.dim() == cur.dim() {
                return false;
            }
            cur = next;
        }
    }

    /// Is `[ambient, self] ⊆ self`?
    pub fn is_ideal_in(&self, ambient: &MatrixLieAlgebra) -> bool {
        ambient.basis.iter().all(|a| {
            self.basis.iter().all(|b| {
                mat_to_coords(&bracket(a, b)).map(|c| self.span.contains(&c)).unwrap_or(false)
            })
        })
    }
}

/// Solvable radical and unipotent radical of `L`, both with saturated
/// integral bases.
///
/// The radical is the Killing-orthogonal complement of the derived algebra
/// inside `L` (Cartan's criterion); the unipotent radical cuts it down by the
/// trace conditions `tr(w_1 ⋯ w_s z) = 0` over all words of length `≤ N` in
/// the radical basis.
pub fn radical_and_unipotent_radical(l: &MatrixLieAlgebra) -> (MatrixLieAlgebra, MatrixLieAlgebra) {
    let n = l.n;
    let d = l.dim();
    if d == 0 {
        return (MatrixLieAlgebra::zero(n), MatrixLieAlgebra::zero(n));
    }
    let derived = l.derived();
    let k = l.killing_matrix();
    let basis_mat = QMat::from_rows(l.coords.to_vec()).transpose();
    let derived_in_l: Vec<Vec<Rat>> = derived
        .coords()
        .iter()
        .map(|c| basis_mat.solve(c).expect("derived lies in L"))
        .collect();
    // conditions: x^T K w = 0 for each derived basis vector w
    let mut cond_rows = Vec::new();
    for w in &derived_in_l {
        cond_rows.push(k.mul_vec(w));
    }
    let radical_x = if cond_rows.is_empty() {
        Subspace::full(d)
    } else {
        Subspace::from_generators(d, &QMat::from_rows(cond_rows).kernel())
    };
    let rad_coords = lift_coords(&radical_x, l.coords(), sl_dim(n));
    let radical = MatrixLieAlgebra::from_span(n, &Subspace::from_generators(sl_dim(n), &rad_coords));

    let rd = radical.dim();
    if rd == 0 {
        return (radical.clone(), MatrixLieAlgebra::zero(n));
    }
    // words of length 1..N in the radical basis, memoized by length
    let mut words: Vec<QMat> = radical.basis().to_vec();
    let mut all_words: Vec<QMat> = words.clone();
    for _ in 2..=n {
        let mut next = Vec::new();
        for w in &words {
            for b in radical.basis() {
                next.push(w.mul(b));
            }
        }
        all_words.extend(next.iter().cloned());
        words = next;
    }
    let mut cond = Vec::new();
    for w in &all_words {
        let row: Vec<Rat> = radical.basis().iter().map(|b| w.mul(b).trace()).collect();
        cond.push(row);
    }
    let ru_x = Subspace::from_generators(rd, &QMat::from_rows(cond).kernel());
    let ru_coords = lift_coords(&ru_x, radical.coords(), sl_dim(n));
    let ru = MatrixLieAlgebra::from_span(n, &Subspace::from_generators(sl_dim(n), &ru_coords));
    (radical, ru)
}

// Lifts coefficient-space vectors back to sl_N coordinates.
fn lift_coords(x_space: &Subspace, basis_coords: &[Vec<Rat>], ambient: usize) -> Vec<Vec<Rat>> {
    x_space
        .basis_rows()
        .iter()
        .map(|x| {
            let mut acc = vec![Rat::zero(); ambient];
            for (j, xi) in x.iter().enumerate() {
                for (a, c) in acc.iter_mut().zip(&basis_coords[j]) {
                    *a += xi * c;
                }
            }
            acc
        })
        .collect()
}

/// `[L,L] + R_u(L)`: the Lie algebra of the maximal class-H normal subgroup.
pub fn class_h_closure(l: &MatrixLieAlgebra) -> MatrixLieAlgebra {
    let derived = l.derived();
    let (_, ru) = radical_and_unipotent_radical(l);
    MatrixLieAlgebra::from_span(l.n, &derived.span().sum(ru.span()))
}

/// True iff the solvable radical equals the unipotent radical.
pub fn is_class_h(l: &MatrixLieAlgebra) -> bool {
    let (r, ru) = radical_and_unipotent_radical(l);
    r.dim() == ru.dim()
}

/// Nilpotency together with the certificate `σ̄(w)`: the product of the
/// nonzero eigenvalues (0 when nilpotent), read off the characteristic
/// polynomial via Newton's identities.
pub fn is_nilpotent_element(w: &QMat) -> (bool, Rat) {
    let n = w.rows;
    assert_eq!(w.rows, w.cols);
    let nilpotent = w.pow(n).is_zero();
    let mut powers = Vec::with_capacity(n);
    let mut acc = QMat::identity(n);
    for _ in 0..n {
        acc = acc.mul(w);
        powers.push(acc.trace());
    }
    let mut e = vec![Rat::one()];
    for k in 1..=n {
        let mut s = Rat::zero();
        for i in 1..=k {
            let term = &e[k - i] * &powers[i - 1];
            if i % 2 == 1 {
                s += term;
            } else {
                s -= term;
            }
        }
        e.push(s / int(k as i64));
    }
    let sigma = e
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .find(|(_, ek)| !ek.is_zero())
        .map(|(_, ek)| ek.clone())
        .unwrap_or_else(Rat::zero);
    (nilpotent, sigma)
}

/// Normalizer of `inner` inside `ambient`: `{z ∈ ambient : [z, inner] ⊆ inner}`.
pub fn normalizer(ambient: &MatrixLieAlgebra, inner: &MatrixLieAlgebra) -> Result<MatrixLieAlgebra, LieError> {
    assert_eq!(ambient.n, inner.n);
    if !ambient.span().contains_subspace(inner.span()) {
        return Err(LieError::NotContained);
    }
    let n = ambient.n;
    let d = ambient.dim();
    let ann = inner.span().complement_perp();
    let mut cond_rows: Vec<Vec<Rat>> = Vec::new();
    for u in inner.basis() {
        let cols: Vec<Vec<Rat>> = ambient
            .basis()
            .iter()
            .map(|b| mat_to_coords(&bracket(b, u)).expect("traceless"))
            .collect();
        for phi in &ann {
            let row: Vec<Rat> = cols
                .iter()
                .map(|c| c.iter().zip(phi).map(|(a, b)| a * b).sum())
                .collect();
            cond_rows.push(row);
        }
    }
    let x_space = if cond_rows.is_empty() {
        Subspace::full(d)
    } else {
        Subspace::from_generators(d, &QMat::from_rows(cond_rows).kernel())
    };
    let coords = lift_coords(&x_space, ambient.coords(), sl_dim(n));
    Ok(MatrixLieAlgebra::from_span(n, &Subspace::from_generators(sl_dim(n), &coords)))
}

/// Iterates `u_i = R_u(N(u_{i-1}))` from the algebra generated by `w_gens`
/// until stabilization, then returns the parabolic `Lie(N(u_d))`. Errors if a
/// generator is not a nilpotent element.
pub fn parabolic_from_nilpotent(
    ambient: &MatrixLieAlgebra,
    w_gens: &[QMat],
) -> Result<MatrixLieAlgebra, LieError> {
    for w in w_gens {
        if !is_nilpotent_element(w).0 {
            return Err(LieError::NotNilpotent);
        }
    }
    let mut u = MatrixLieAlgebra::generated(ambient.n, w_gens)?;
    lower_central_series(&u)?; // the generated algebra must itself be nilpotent
    for _ in 0..=sl_dim(ambient.n) {
        let norm = normalizer(ambient, &u)?;
        let (_, ru) = radical_and_unipotent_radical(&norm);
        if ru.same_span(&u) {
            return normalizer(ambient, &u);
        }
        u = ru;
    }
    Err(LieError::NotNilpotentAlgebra)
}

/// Lower central series of a nilpotent algebra plus integral bases of chosen
/// graded complements (`u_i = u_{i+1} ⊕ grade_i` over Q).
pub struct LowerCentralSeries {
    pub chain: Vec<MatrixLieAlgebra>,
    pub grades: Vec<Vec<Vec<Rat>>>,
}

pub fn lower_central_series(u: &MatrixLieAlgebra) -> Result<LowerCentralSeries, LieError> {
    let n = u.n;
    let mut chain = vec![u.clone()];
    loop {
        let last = chain.last().unwrap();
        if last.dim() == 0 {
            break;
        }
        let mut gens = Vec::new();
        for a in u.basis() {
            for b in last.basis() {
                gens.push(mat_to_coords(&bracket(a, b))?);
            }
        }
        let next = MatrixLieAlgebra::from_span(n, &Subspace::from_generators(sl_dim(n), &gens));
        if next.dim() == last.dim() {
            return Err(LieError::NotNilpotentAlgebra);
        }
        chain.push(next);
    }
    let mut grades = Vec::new();
    for w in chain.windows(2) {
        let (big, small) = (&w[0], &w[1]);
        let mut grade: Vec<Vec<Rat>> = Vec::new();
        let mut cur = small.span().clone();
        for row in big.coords() {
            if !cur.contains(row) {
                grade.push(row.clone());
                let mut gens = cur.basis_rows();
                gens.push(row.clone());
                cur = Subspace::from_generators(sl_dim(n), &gens);
            }
        }
        grades.push(grade);
    }
    Ok(LowerCentralSeries { chain, grades })
}

/// Derived-series oracle for the radical: `r` must be a solvable ideal of `l`,
/// and no one-generator enlargement inside `l` may generate a solvable ideal.
/// Sound and complete because the radical contains every solvable ideal.
pub fn radical_oracle_check(l: &MatrixLieAlgebra, r: &MatrixLieAlgebra) -> bool {
    if !r.is_solvable() || !r.is_ideal_in(l) {
        return false;
    }
    if !l.span().contains_subspace(r.span()) {
        return false;
    }
    for z in l.basis() {
        if r.contains(z) {
            continue;
        }
        // smallest ideal of l containing r and z; grow the span first and
        // only construct the algebra once [l, span] ⊆ span
        let mut span = {
            let mut gens: Vec<Vec<Rat>> = r.coords().to_vec();
            gens.push(mat_to_coords(z).unwrap());
            Subspace::from_generators(sl_dim(l.n), &gens)
        };
        loop {
            let mats: Vec<QMat> = span.basis_rows().iter().map(|c| coords_to_mat(l.n, c)).collect();
            let mut rows = span.basis_rows();
            let mut grew = false;
            for a in l.basis() {
                for b in &mats {
                    let c = mat_to_coords(&bracket(a, b)).unwrap();
                    if !span.contains(&c) {
                        rows.push(c);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
            span = Subspace::from_generators(sl_dim(l.n), &rows);
        }
        if MatrixLieAlgebra::from_span(l.n, &span).is_solvable() {
            return false; // r was not maximal
        }
    }
    true
}

pub fn elementary(n: usize, i: usize, j: usize) -> QMat {
    let mut m = QMat::zeros(n, n);
    m[(i, j)] = Rat::one();
    m
}

pub fn sl2_h() -> QMat {
    QMat::from_i64(&[&[1, 0], &[0, -1]])
}

pub fn sl2_e() -> QMat {
    elementary(2, 0, 1)
}

pub fn sl2_f() -> QMat {
    elementary(2, 1, 0)
}
