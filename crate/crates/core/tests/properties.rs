//! Randomized property tests for the structural invariants of the exact
//! layer: unit invariance of the size function, alternation of the wedge,
//! basis invariance of primitive vectors, and the sum-intersection
//! inequality on lattice submodules.

use num_bigint::BigInt;
use proptest::prelude::*;
use uniflow_core::exact::{self, ExactVector, Place, PlaceSystem, UnitElement};
use uniflow_core::lattice::{self, LatticeBasis};
use uniflow_core::linalg::QMat;
use uniflow_core::rat::{int, rat, Rat};

fn small_rat() -> impl Strategy<Value = Rat> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| rat(n, d))
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<Rat>> {
    proptest::collection::vec(small_rat(), dim)
}

fn unit_element() -> impl Strategy<Value = UnitElement> {
    ((-6i64..=6), (-4i64..=4), any::<bool>()).prop_map(|(e2, e3, negative)| {
        let mut exponents = std::collections::BTreeMap::new();
        exponents.insert(2u64, e2);
        exponents.insert(3u64, e3);
        UnitElement { exponents, negative }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // c(r·v) = c(v) for every Σ-unit r
    #[test]
    fn c_fun_is_unit_invariant(v in vector(4), r in unit_element()) {
        let places = PlaceSystem::new(&[2, 3]).unwrap();
        let rv: Vec<Rat> = v.iter().map(|x| x * r.value()).collect();
        prop_assert_eq!(exact::c_fun(&v, &places), exact::c_fun(&rv, &places));
    }

    // ultrametric at finite places, triangle at ∞
    #[test]
    fn norms_satisfy_their_inequalities(x in small_rat(), y in small_rat()) {
        let s = &x + &y;
        for p in [2u64, 3, 5] {
            let lhs = exact::scalar_norm_at(&s, Place::Finite(p));
            let rhs = exact::scalar_norm_at(&x, Place::Finite(p))
                .max(exact::scalar_norm_at(&y, Place::Finite(p)));
            prop_assert!(lhs <= rhs);
        }
        let lhs = exact::scalar_norm_at(&s, Place::Infinity);
        let rhs = exact::scalar_norm_at(&x, Place::Infinity) + exact::scalar_norm_at(&y, Place::Infinity);
        prop_assert!(lhs <= rhs);
    }

    // wedge is alternating: a repeated factor kills the product
    #[test]
    fn wedge_alternates(v in vector(4), w in vector(4)) {
        let a = ExactVector::new(v);
        let b = ExactVector::new(w);
        prop_assert!(exact::wedge(&[a.clone(), b.clone(), a.clone()]).is_zero());
        // and is antisymmetric in adjacent factors
        let ab = exact::wedge(&[a.clone(), b.clone()]);
        let ba = exact::wedge(&[b, a]);
        prop_assert_eq!(ab, ba.scale(&int(-1)));
    }

    // primitive integral vector is invariant under rational basis changes
    #[test]
    fn primitive_vector_ignores_basis(
        v1 in vector(4),
        v2 in vector(4),
        a in 1i64..=5, b in -4i64..=4, c in -4i64..=4, d in 1i64..=5,
    ) {
        let m = QMat::from_rows(vec![v1.clone(), v2.clone()]);
        prop_assume!(m.rank() == 2);
        // unimodular-rational change of basis (nonzero determinant suffices
        // for spanning the same subspace)
        prop_assume!(a * d - b * c != 0);
        let w1: Vec<Rat> = v1.iter().zip(&v2).map(|(x, y)| int(a) * x + int(b) * y).collect();
        let w2: Vec<Rat> = v1.iter().zip(&v2).map(|(x, y)| int(c) * x + int(d) * y).collect();
        let p1 = exact::primitive_integral_vector(&[ExactVector::new(v1), ExactVector::new(v2)]).unwrap();
        let p2 = exact::primitive_integral_vector(&[ExactVector::new(w1), ExactVector::new(w2)]).unwrap();
        prop_assert_eq!(&p1, &p2);
        // height is a positive integer
        let h = p1.norm_at(Place::Infinity);
        prop_assert!(h > Rat::from_integer(0.into()));
        prop_assert!(h.denom() == &BigInt::from(1));
    }

    // c(uΔ)·c(uΔ') ≥ c(uΔ ∩ uΔ')·c(uΔ + uΔ') / A on random primitive pairs;
    // the measured constant stays 1 at the archimedean place for these
    // integral fixtures, so A = 4 is generous headroom
    #[test]
    fn sum_intersection_inequality(
        x1 in -3i64..=3, x2 in -3i64..=3, y1 in -3i64..=3, y2 in -3i64..=3,
        t in -2i64..=2,
    ) {
        prop_assume!((x1, x2) != (0, 0) && (y1, y2) != (0, 0));
        let places = PlaceSystem::archimedean();
        let lat = LatticeBasis::new(QMat::identity(3), places.clone()).unwrap();
        let mut u = QMat::identity(3);
        u[(0, 1)] = int(t);
        let d1 = vec![
            vec![BigInt::from(x1), BigInt::from(x2), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(1), BigInt::from(1)],
        ];
        let d2 = vec![vec![BigInt::from(y1), BigInt::from(0), BigInt::from(y2)]];
        let sat1 = uniflow_core::exact::hnf::saturate(
            3,
            &d1.iter()
                .map(|r| r.iter().map(|z| Rat::from_integer(z.clone())).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        prop_assume!(sat1.len() == 2);
        let c1 = lattice::submodule_c(&lat, &u, &sat1);
        let c2 = lattice::submodule_c(&lat, &u, &d2);
        // intersection and sum of the rational spans, saturated
        let s1 = uniflow_core::linalg::Subspace::from_generators(
            3,
            &sat1.iter().map(|r| r.iter().map(|z| Rat::from_integer(z.clone())).collect()).collect::<Vec<_>>(),
        );
        let s2 = uniflow_core::linalg::Subspace::from_generators(
            3,
            &d2.iter().map(|r| r.iter().map(|z| Rat::from_integer(z.clone())).collect()).collect::<Vec<_>>(),
        );
        let meet = s1.intersect(&s2);
        let join = s1.sum(&s2);
        let c_meet = if meet.is_zero() {
            int(1)
        } else {
            lattice::submodule_c(&lat, &u, &uniflow_core::exact::hnf::saturate(3, &meet.basis_rows()))
        };
        let c_join = lattice::submodule_c(&lat, &u, &uniflow_core::exact::hnf::saturate(3, &join.basis_rows()));
        prop_assert!(int(4) * c1 * c2 >= c_meet * c_join);
    }
}
