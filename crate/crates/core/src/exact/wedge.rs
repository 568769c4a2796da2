//! Exterior algebra over the rationals: sparse multi-index vectors, wedge
//! products, pushforwards along linear maps, and primitive integral vectors
//! of rational subspaces (whose max norm is the subspace height).

use super::hnf;
use super::{ExactError, ExactVector, Place, PlaceSystem};
use crate::linalg::QMat;
use crate::rat::Rat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Element of Λ^k(Q^ambient), indexed by strictly increasing multi-indices.
/// Zero components are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExteriorVector {
    pub degree: usize,
    pub ambient: usize,
    comps: BTreeMap<Vec<usize>, Rat>,
}

impl ExteriorVector {
    pub fn zero(ambient: usize, degree: usize) -> Self {
        ExteriorVector { degree, ambient, comps: BTreeMap::new() }
    }

    /// Λ^0 is the scalar line; this is the unit.
    pub fn scalar_one(ambient: usize) -> Self {
        let mut comps = BTreeMap::new();
        comps.insert(Vec::new(), Rat::one());
        ExteriorVector { degree: 0, ambient, comps }
    }

    pub fn from_vector(v: &ExactVector) -> Self {
        let mut comps = BTreeMap::new();
        for (i, x) in v.coords.iter().enumerate() {
            if !x.is_zero() {
                comps.insert(vec![i], x.clone());
            }
        }
        ExteriorVector { degree: 1, ambient: v.dim(), comps }
    }

    pub fn set(&mut self, index: Vec<usize>, value: Rat) {
        assert_eq!(index.len(), self.degree);
        assert!(index.windows(2).all(|w| w[0] < w[1]), "indices must be strictly increasing");
        assert!(index.iter().all(|&i| i < self.ambient));
        if value.is_zero() {
            self.comps.remove(&index);
        } else {
            self.comps.insert(index, value);
        }
    }

    pub fn get(&self, index: &[usize]) -> Rat {
        self.comps.get(index).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Rat)> {
        self.comps.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn add(&self, other: &ExteriorVector) -> ExteriorVector {
        assert_eq!((self.degree, self.ambient), (other.degree, other.ambient));
        let mut out = self.clone();
        for (idx, val) in &other.comps {
            let cur = out.get(idx) + val;
            out.set(idx.clone(), cur);
        }
        out
    }

    pub fn sub(&self, other: &ExteriorVector) -> ExteriorVector {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> ExteriorVector {
        if c.is_zero() {
            return ExteriorVector::zero(self.ambient, self.degree);
        }
        let comps = self.comps.iter().map(|(k, v)| (k.clone(), v * c)).collect();
        ExteriorVector { degree: self.degree, ambient: self.ambient, comps }
    }

    pub fn norm_at(&self, place: Place) -> Rat {
        self.comps.values().map(|x| super::scalar_norm_at(x, place)).max().unwrap_or_else(Rat::zero)
    }

    pub fn c_fun(&self, places: &PlaceSystem) -> Rat {
        let mut prod = Rat::one();
        for &v in places.places() {
            let n = self.norm_at(v);
            if n.is_zero() {
                return Rat::zero();
            }
            prod *= n;
        }
        prod
    }

    /// Wedge with a degree-1 vector on the right.
    pub fn wedge_vector(&self, v: &ExactVector) -> ExteriorVector {
        assert_eq!(self.ambient, v.dim());
        let mut out = ExteriorVector::zero(self.ambient, self.degree + 1);
        for (idx, coeff) in &self.comps {
            for (j, x) in v.coords.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                if idx.binary_search(&j).is_ok() {
                    continue; // repeated index
                }
                let pos = idx.partition_point(|&i| i < j);
                // moving e_j left past (degree - pos) factors
                let sign = if (self.degree - pos) % 2 == 0 { Rat::one() } else { -Rat::one() };
                let mut new_idx = idx.clone();
                new_idx.insert(pos, j);
                let cur = out.get(&new_idx) + coeff * x * sign;
                out.set(new_idx, cur);
            }
        }
        out
    }

    /// Wedge of two exterior vectors.
    pub fn wedge(&self, other: &ExteriorVector) -> ExteriorVector {
        assert_eq!(self.ambient, other.ambient);
        let mut out = ExteriorVector::zero(self.ambient, self.degree + other.degree);
        for (ia, ca) in &self.comps {
            'next: for (ib, cb) in &other.comps {
                // merge the two increasing index lists, tracking the sign
                let mut merged = Vec::with_capacity(ia.len() + ib.len());
                let mut sign_flips = 0usize;
                let (mut x, mut y) = (0usize, 0usize);
                while x < ia.len() || y < ib.len() {
                    if y == ib.len() || (x < ia.len() && ia[x] < ib[y]) {
                        merged.push(ia[x]);
                        x += 1;
                    } else if x == ia.len() || ib[y] < ia[x] {
                        // ib[y] jumps over the remaining ia entries
                        sign_flips += ia.len() - x;
                        merged.push(ib[y]);
                        y += 1;
                    } else {
                        continue 'next; // repeated index
                    }
                }
                let term = if sign_flips % 2 == 0 { ca * cb } else { -(ca * cb) };
                let cur = out.get(&merged) + term;
                out.set(merged, cur);
            }
        }
        out
    }

    /// Pushforward along a linear map `a` of the ambient space:
    /// `Λ^k(a)` applied to this vector, computed from k×k minors.
    pub fn apply_map(&self, a: &QMat) -> ExteriorVector {
        assert_eq!(a.rows, self.ambient);
        assert_eq!(a.cols, self.ambient);
        let mut out = ExteriorVector::zero(self.ambient, self.degree);
        for (idx, coeff) in &self.comps {
            // wedge of the image columns a·e_{i1} ∧ ... ∧ a·e_{ik}
            let mut acc = ExteriorVector::scalar_one(self.ambient);
            for &i in idx {
                let col = ExactVector::new(a.col(i));
                acc = acc.wedge_vector(&col);
                if acc.is_zero() {
                    break;
                }
            }
            if acc.degree == self.degree {
                out = out.add(&acc.scale(coeff));
            }
        }
        out
    }

    /// Derivation action of a linear map `m` on Λ^k: sum over positions of
    /// applying `m` to one factor. This is `Der ρ(z)` when `m = ad(z)`.
    pub fn apply_derivation(&self, m: &QMat) -> ExteriorVector {
        assert_eq!(m.rows, self.ambient);
        let mut out = ExteriorVector::zero(self.ambient, self.degree);
        for (idx, coeff) in &self.comps {
            for pos in 0..idx.len() {
                // replace factor e_{idx[pos]} by m·e_{idx[pos]}
                let img = ExactVector::new(m.col(idx[pos]));
                let mut acc = ExteriorVector::scalar_one(self.ambient);
                for (q, &i) in idx.iter().enumerate() {
                    if q == pos {
                        acc = acc.wedge_vector(&img);
                    } else {
                        let mut e = ExactVector::zeros(self.ambient);
                        e.coords[i] = Rat::one();
                        acc = acc.wedge_vector(&e);
                    }
                    if acc.is_zero() {
                        break;
                    }
                }
                if acc.degree == self.degree {
                    out = out.add(&acc.scale(coeff));
                }
            }
        }
        out
    }

    /// True iff this vector is decomposable (a wedge of `degree` vectors):
    /// the annihilator `{v : v ∧ w = 0}` has dimension exactly `degree`.
    pub fn is_decomposable(&self) -> bool {
        if self.is_zero() {
            return false;
        }
        self.annihilator().dim() == self.degree
    }

    /// The subspace `{v ∈ Q^n : v ∧ w = 0}`; for decomposable `w` this is the
    /// subspace `w` represents.
    pub fn annihilator(&self) -> crate::linalg::Subspace {
        let n = self.ambient;
        // rows indexed by (degree+1)-multi-indices, cols by ambient basis
        let mut row_index: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        for j in 0..n {
            let mut e = ExactVector::zeros(n);
            e.coords[j] = Rat::one();
            // e_j ∧ w with the vector on the left: (-1)^deg? compute w ∧ e_j and flip
            let w = self.wedge_vector(&e);
            for (idx, val) in &w.comps {
                let next = row_index.len();
                let r = *row_index.entry(idx.clone()).or_insert(next);
                if r == rows.len() {
                    rows.push(vec![Rat::zero(); n]);
                }
                rows[r][j] = val.clone();
            }
        }
        if rows.is_empty() {
            return crate::linalg::Subspace::full(n);
        }
        let m = QMat::from_rows(rows);
        crate::linalg::Subspace::from_generators(n, &m.kernel())
    }

    /// Scales to coprime integer components with the first. nonzero component
    /// positive; returns the normalized vector. Panics on zero input.
    pub fn normalize_primitive(&self) -> ExteriorVector {
        assert!(!self.is_zero());
        let mut lcm = BigInt::one();
        for v in self.comps.values() {
            lcm = lcm.lcm(v.denom());
        }
        let mut gcd = BigInt::zero();
        let ints: BTreeMap<Vec<usize>, BigInt> = self
            .comps
            .iter()
            .map(|(k, v)| {
                let n = v.numer() * (&lcm / v.denom());
                gcd = gcd.gcd(&n);
                (k.clone(), n)
            })
            .collect();
        let first = ints.values().next().unwrap();
        let sign = if first.is_negative() { -BigInt::one() } else { BigInt::one() };
        let div = &gcd * sign;
        let comps = ints
            .into_iter()
            .map(|(k, v)| (k, Rat::from_integer(v / &div)))
            .collect();
        ExteriorVector { degree: self.degree, ambient: self.ambient, comps }
    }

    /// All components are integers.
    pub fn is_integral(&self) -> bool {
        self.comps.values().all(|v| v.denom().is_one())
    }
}

impl Serialize for ExteriorVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ExteriorVector", 3)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("ambient", &self.ambient)?;
        let comps: BTreeMap<String, String> = self
            .comps
            .iter()
            .map(|(k, v)| {
                let key = k.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
                (key, crate::rat::format(v))
            })
            .collect();
        st.serialize_field("components", &comps)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ExteriorVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            degree: usize,
            ambient: usize,
            components: BTreeMap<String, String>,
        }
        let raw = Raw::deserialize(d)?;
        let mut out = ExteriorVector::zero(raw.ambient, raw.degree);
        for (k, v) in raw.components {
            let idx: Vec<usize> = if k.is_empty() {
                Vec::new()
            } else {
                k.split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(serde::de::Error::custom))
                    .collect::<Result<_, _>>()?
            };
            let val = crate::rat::parse(&v).map_err(serde::de::Error::custom)?;
            out.set(idx, val);
        }
        Ok(out)
    }
}

/// Alternating multilinear product of a list of vectors.
pub fn wedge(vectors: &[ExactVector]) -> ExteriorVector {
    assert!(!vectors.is_empty(), "wedge of empty list");
    let n = vectors[0].dim();
    assert!(vectors.iter().all(|v| v.dim() == n));
    assert!(vectors.len() <= n, "degree exceeds ambient dimension");
    let mut acc = ExteriorVector::scalar_one(n);
    for v in vectors {
        acc = acc.wedge_vector(v);
        if acc.is_zero() {
            return ExteriorVector::zero(n, vectors.len());
        }
    }
    acc
}

/// The primitive integral vector of the rational subspace spanned by `basis`:
/// the wedge of a Z-basis of `W ∩ Z^n` (computed by HNF saturation),
/// normalized to coprime integer components with the first nonzero component
/// positive. Its ∞-norm is the height of `W`.
pub fn primitive_integral_vector(basis: &[ExactVector]) -> Result<ExteriorVector, ExactError> {
    if basis.is_empty() {
        return Err(ExactError::DependentBasis);
    }
    let n = basis[0].dim();
    let gens: Vec<Vec<Rat>> = basis.iter().map(|v| v.coords.clone()).collect();
    let sat = hnf::saturate(n, &gens);
    if sat.len() != basis.len() {
        return Err(ExactError::DependentBasis);
    }
    let sat_vecs: Vec<ExactVector> = sat
        .iter()
        .map(|r| ExactVector::new(r.iter().map(|x| Rat::from_integer(x.clone())).collect()))
        .collect();
    let w = wedge(&sat_vecs);
    debug_assert!(!w.is_zero());
    Ok(w.normalize_primitive())
}

/// Height of the rational subspace spanned by `basis` (∞-norm of its
/// primitive integral vector, always a positive integer).
pub fn subspace_height(basis: &[ExactVector]) -> Result<BigInt, ExactError> {
    let v = primitive_integral_vector(basis)?;
    let h = v.norm_at(Place::Infinity);
    debug_assert!(h.denom().is_one());
    Ok(h.numer().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    fn e(n: usize, i: usize) -> ExactVector {
        let mut v = ExactVector::zeros(n);
        v.coords[i] = Rat::one();
        v
    }

    #[test]
    fn wedge_basics() {
        let w = wedge(&[e(3, 0), e(3, 1)]);
        assert_eq!(w.get(&[0, 1]), int(1));
        let v = ExactVector::from_i64(&[1, 2, 3]);
        assert!(wedge(&[v.clone(), v]).is_zero());
        // (e1+e2) ∧ (e1−e2) = −2 e1∧e2
        let a = e(2, 0).add(&e(2, 1));
        let b = e(2, 0).sub(&e(2, 1));
        let w = wedge(&[a, b]);
        assert_eq!(w.get(&[0, 1]), int(-2));
    }

    #[test]
    fn wedge_of_exterior_vectors_sign() {
        // (e0∧e1) ∧ e2 == e0∧e1∧e2; e2 ∧ (e0∧e1) == +e0∧e1∧e2 (two transpositions)
        let w01 = wedge(&[e(3, 0), e(3, 1)]);
        let w2 = ExteriorVector::from_vector(&e(3, 2));
        assert_eq!(w01.wedge(&w2).get(&[0, 1, 2]), int(1));
        assert_eq!(w2.wedge(&w01).get(&[0, 1, 2]), int(1));
        let w1 = ExteriorVector::from_vector(&e(3, 1));
        let w02 = wedge(&[e(3, 0), e(3, 2)]);
        assert_eq!(w1.wedge(&w02).get(&[0, 1, 2]), int(-1));
    }

    #[test]
    fn primitive_vector_from_spec() {
        // span{(1/2, 1/2)} in Q^2 → (1,1), height 1
        let v = ExactVector::new(vec![rat(1, 2), rat(1, 2)]);
        let p = primitive_integral_vector(&[v]).unwrap();
        assert_eq!(p.get(&[0]), int(1));
        assert_eq!(p.get(&[1]), int(1));
        assert_eq!(subspace_height(&[ExactVector::new(vec![rat(1, 2), rat(1, 2)])]).unwrap(), 1.into());
        // span{(-2, 1, -4)}: already primitive; canonical sign flips it
        let v = ExactVector::from_i64(&[-2, 1, -4]);
        let p = primitive_integral_vector(&[v]).unwrap();
        assert_eq!(p.get(&[0]), int(2));
        assert_eq!(p.get(&[1]), int(-1));
        assert_eq!(p.get(&[2]), int(4));
        assert_eq!(p.norm_at(Place::Infinity), int(4));
    }

    #[test]
    fn dependent_basis_rejected() {
        let v = ExactVector::from_i64(&[1, 2]);
        let w = ExactVector::from_i64(&[2, 4]);
        assert!(matches!(primitive_integral_vector(&[v, w]), Err(ExactError::DependentBasis)));
    }

    #[test]
    fn primitive_vector_basis_invariance() {
        // gcd-normalized direct wedge is an independent oracle for the
        // HNF-saturation route, and both must be basis-independent.
        let b1 = vec![ExactVector::from_i64(&[2, 0, 2, 0]), ExactVector::from_i64(&[0, 3, 0, 3])];
        let direct = wedge(&b1).normalize_primitive();
        let p1 = primitive_integral_vector(&b1).unwrap();
        assert_eq!(p1, direct);
        // change of rational basis
        let b2 = vec![
            ExactVector::new(vec![rat(1, 3), int(1), rat(1, 3), int(1)]),
            ExactVector::new(vec![int(1), rat(-1, 2), int(1), rat(-1, 2)]),
        ];
        let p2 = primitive_integral_vector(&b2).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn decomposability() {
        let w = wedge(&[e(4, 0), e(4, 1)]);
        assert!(w.is_decomposable());
        // e0∧e1 + e2∧e3 is not decomposable in Λ²(Q⁴)
        let w2 = wedge(&[e(4, 2), e(4, 3)]);
        let sum = w.add(&w2);
        assert!(!sum.is_decomposable());
        assert!(sum.annihilator().is_zero());
    }

    #[test]
    fn apply_map_is_determinant_on_top_degree() {
        let a = QMat::from_i64(&[&[2, 1], &[1, 1]]);
        let w = wedge(&[e(2, 0), e(2, 1)]);
        let img = w.apply_map(&a);
        assert_eq!(img.get(&[0, 1]), a.det());
    }
}
