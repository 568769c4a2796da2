//! Adjoint-lattice computations: product-norm minima, compact-part
//! membership, reduction to small representatives, Minkowski-type minima
//! over primitive submodules, and the nondivergence flag machinery.

pub mod flag;
pub mod lll;

pub use flag::{detect_unipotent_obstruction, flag_construct, minkowski_complete, FlagProfile, Obstruction, Submodule};

use crate::exact::{c_fun, ExteriorVector, PlaceSystem};
use crate::linalg::{QMat, Subspace};
use crate::rat::{int, nth_root_bracket, pow_i, rat, Rat};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice basis is degenerate")]
    DegenerateLattice,
}

/// A full-column-rank rational basis of a Z_Σ-module, columns as vectors.
#[derive(Clone, Debug)]
pub struct LatticeBasis {
    pub basis: QMat,
    pub places: PlaceSystem,
}

impl LatticeBasis {
    pub fn new(basis: QMat, places: PlaceSystem) -> Result<Self, LatticeError> {
        if basis.rank() != basis.cols {
            return Err(LatticeError::DegenerateLattice);
        }
        Ok(LatticeBasis { basis, places })
    }

    pub fn ambient(&self) -> usize {
        self.basis.rows
    }

    pub fn rank(&self) -> usize {
        self.basis.cols
    }
}

/// Result of a certified product-norm minimization over a lattice.
#[derive(Clone, Debug)]
pub struct MinC {
    pub vector: Vec<Rat>,
    /// Coefficients w.r.t. the *scaled* working basis used in the search.
    pub coeffs: Vec<BigInt>,
    pub c: Rat,
    /// True when the denominator window provably covered every candidate.
    /// Always true for Σ = {∞}.
    pub certified: bool,
    pub window_used: u32,
}

/// Minimizes `c` over nonzero lattice elements accepted by `accept`.
/// `seeds` must be coefficient vectors of accepted elements (they bound the
/// search radius). For Σ ⊋ {∞} the module is widened to denominators up to
/// `p^window` per finite place; the result reports whether that window was
/// provably sufficient.
pub(crate) fn min_c_in_lattice(
    basis: &QMat,
    places: &PlaceSystem,
    window: u32,
    seeds: &[Vec<BigInt>],
    accept: &dyn Fn(&[Rat]) -> bool,
) -> Option<MinC> {
    let finite: Vec<u64> = places.finite().collect();
    let mut scale = Rat::one();
    for &p in &finite {
        scale *= pow_i(&int(p as i64), -(window as i64));
    }
    let work = basis.scale(&scale);
    let reduced = lll::lll(&work);

    fn consider(
        best: &mut Option<MinC>,
        coeffs: Vec<BigInt>,
        mat: &QMat,
        places: &PlaceSystem,
        window: u32,
        accept: &dyn Fn(&[Rat]) -> bool,
    ) {
        let x: Vec<Rat> = coeffs.iter().map(|c| Rat::from_integer(c.clone())).collect();
        let v = mat.mul_vec(&x);
        let c = c_fun(&v, places);
        if c.is_zero() || !accept(&v) {
            return;
        }
        let better = match best {
            None => true,
            Some(b) => c < b.c || (c == b.c && coeffs < b.coeffs),
        };
        if better {
            *best = Some(MinC { vector: v, coeffs, c, certified: false, window_used: window });
        }
    }

    let mut best: Option<MinC> = None;
    // seeds are coefficients w.r.t. the unscaled basis; rescale them
    let mut unit_factor = BigInt::one();
    for &p in &finite {
        unit_factor *= BigInt::from(p).pow(window);
    }
    for s in seeds {
        let scaled: Vec<BigInt> = s.iter().map(|x| x * &unit_factor).collect();
        consider(&mut best, scaled, &work, places, window, accept);
    }
    // reduced columns are cheap candidates
    for j in 0..reduced.basis.cols {
        let orig: Vec<BigInt> = reduced.transform.col(j).iter().map(|x| x.to_integer()).collect();
        consider(&mut best, orig, &work, places, window, accept);
    }
    let c_best = best.as_ref()?.c.clone();

    // Any element with c ≤ c_best has a unit rescaling with all per-place
    // norms ≤ t·P where t = c_best^{1/ℓ} and P = ∏ finite p. Bound the ℓ²
    // radius by ambient·(t_hi·P)² and the needed denominator window from t.
    let ell = places.len() as u32;
    let (t_lo, t_hi) = nth_root_bracket(&c_best, ell, &rat(1, 1 << 16));
    let p_prod: Rat = finite.iter().fold(Rat::one(), |acc, &p| acc * int(p as i64));
    let r_inf = (&t_hi + rat(1, 1 << 16)) * &p_prod;
    let l2_bound = int(basis.rows as i64) * &r_inf * &r_inf;

    // window sufficiency: balanced representatives have coordinates with
    // |x|_p ≤ t, and pulling back through B⁻¹ costs the worst p-denominator
    // of B⁻¹'s entries.
    let mut certified = true;
    if !finite.is_empty() {
        match basis.inverse() {
            Some(inv) => {
                for &p in &finite {
                    let mut worst: i64 = 0;
                    for i in 0..inv.rows {
                        for j in 0..inv.cols {
                            let e = &inv[(i, j)];
                            if !e.is_zero() {
                                worst = worst.max(-crate::rat::val_p(e, p));
                            }
                        }
                    }
                    // coordinate denominators of a balanced representative
                    let mut coord: i64 = 0;
                    if t_lo > Rat::zero() && t_lo < Rat::one() {
                        let mut k = 0i64;
                        while pow_i(&int(p as i64), -k) > t_lo {
                            k += 1;
                        }
                        coord = k;
                    }
                    if (worst + coord) > window as i64 {
                        certified = false;
                    }
                }
            }
            None => certified = false,
        }
    }

    // enumerate over the reduced basis (same lattice, sane Gram–Schmidt
    // profile) and map coefficients back through the unimodular transform
    for red_coeffs in lll::enumerate_in_ball(&reduced.basis, &l2_bound) {
        let coeffs: Vec<BigInt> = (0..reduced.transform.rows)
            .map(|i| {
                (0..reduced.transform.cols)
                    .map(|j| reduced.transform[(i, j)].to_integer() * &red_coeffs[j])
                    .sum()
            })
            .collect();
        consider(&mut best, coeffs, &work, places, window, accept);
    }
    let mut out = best?;
    out.certified = certified;
    Some(out)
}

/// A nonzero lattice element minimizing the product norm `c`, with the exact
/// minimum. LLL preprocessing plus exact enumeration at the archimedean
/// place; finite places enter through valuation bookkeeping.
pub fn shortest_c(lat: &LatticeBasis, window: u32) -> MinC {
    let n = lat.rank();
    let seeds: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut s = vec![BigInt::zero(); n];
            s[j] = BigInt::one();
            s
        })
        .collect();
    min_c_in_lattice(&lat.basis, &lat.places, window, &seeds, &|_| true)
        .expect("full-rank lattice has nonzero elements")
}

/// Verdict of the compact-part membership test.
#[derive(Clone, Debug)]
pub struct XEtaVerdict {
    pub in_x_eta: bool,
    pub shortest: MinC,
    /// The minimizing vector when the test fails.
    pub witness: Option<Vec<Rat>>,
}

/// `true` iff every nonzero lattice element has `c ≥ η`.
pub fn x_eta_test(lat: &LatticeBasis, eta: &Rat, window: u32) -> XEtaVerdict {
    let shortest = shortest_c(lat, window);
    let in_x_eta = &shortest.c >= eta;
    let witness = if in_x_eta { None } else { Some(shortest.vector.clone()) };
    XEtaVerdict { in_x_eta, shortest, witness }
}

/// Output of the reduction to a small representative `gγ`.
#[derive(Clone, Debug)]
pub struct Reduced {
    /// Integral, determinant one.
    pub gamma: QMat,
    pub reduced: QMat,
    /// `|gγ| = max(‖gγ‖, ‖(gγ)⁻¹‖)` in the entrywise max norm.
    pub norm: Rat,
}

/// Matrix size `|g|` used throughout: max-abs entry of `g` and `g⁻¹`.
pub fn group_norm(g: &QMat) -> Rat {
    let inv = g.inverse().expect("group element");
    g.max_abs().max(inv.max_abs())
}

/// LLL size-reduction of the column lattice `g Z^N`: returns `γ ∈ SL_N(Z)`
/// with `|gγ|` small.
pub fn reduce_representative(g: &QMat) -> Reduced {
    let r = lll::lll(g);
    let mut gamma = QMat::zeros(g.cols, g.cols);
    for i in 0..g.cols {
        for j in 0..g.cols {
            gamma[(i, j)] = r.transform[(i, j)].clone();
        }
    }
    if gamma.det() == -Rat::one() {
        for i in 0..g.cols {
            let v = -gamma[(i, g.cols - 1)].clone();
            gamma[(i, g.cols - 1)] = v;
        }
    }
    let reduced = g.mul(&gamma);
    let norm = group_norm(&reduced);
    Reduced { gamma, reduced, norm }
}

/// Checks the effective-reduction inequality `|gγ| ≤ E_G · η^{-F}` exactly
/// (compared as `|gγ| · η^F ≤ E_G`).
pub fn reduction_bound_holds(norm: &Rat, eta: &Rat, e_g: &Rat, f: u32) -> bool {
    norm * eta.pow(f as i32) <= *e_g
}

/// Minkowski-type minimum over primitive rank-i submodules.
#[derive(Clone, Debug)]
pub struct AlphaI {
    /// `α_i = 1 / min c(Δ)`.
    pub alpha: Rat,
    pub min_c: Rat,
    /// Saturated coefficient basis (w.r.t. the lattice basis columns) of a
    /// minimizing primitive submodule.
    pub witness_coeffs: Vec<Vec<BigInt>>,
    pub wedge: ExteriorVector,
    pub certified: bool,
}

fn index_sets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn exterior_to_coords(w: &ExteriorVector, sets: &[Vec<usize>]) -> Vec<Rat> {
    sets.iter().map(|s| w.get(s)).collect()
}

fn coords_to_exterior(ambient: usize, degree: usize, sets: &[Vec<usize>], coords: &[Rat]) -> ExteriorVector {
    let mut w = ExteriorVector::zero(ambient, degree);
    for (s, c) in sets.iter().zip(coords) {
        if !c.is_zero() {
            w.set(s.clone(), c.clone());
        }
    }
    w
}

/// Minimizes `c` over primitive rank-i submodules. LLL on the i-th exterior
/// power with a decomposability filter; exhaustive inside the certified
/// enumeration ball.
pub fn alpha_i(lat: &LatticeBasis, i: usize, window: u32) -> AlphaI {
    let n = lat.rank();
    assert!(i >= 1 && i <= n, "rank out of range");
    let ambient = lat.ambient();
    if i == n {
        // full rank: c is the covolume |det|, submodule is everything
        let det = lat.basis.det();
        let wedgev = crate::exact::wedge(
            &(0..n).map(|j| crate::exact::ExactVector::new(lat.basis.col(j))).collect::<Vec<_>>(),
        );
        let c = wedgev.c_fun(&lat.places);
        let _ = det;
        return AlphaI {
            alpha: c.recip(),
            min_c: c,
            witness_coeffs: (0..n)
                .map(|j| {
                    let mut r = vec![BigInt::zero(); n];
                    r[j] = BigInt::one();
                    r
                })
                .collect(),
            wedge: wedgev,
            certified: true,
        };
    }
    // reduce the base lattice first so elementary wedges are good seeds
    let base = lll::lll(&lat.basis);
    let sets = index_sets(n, i);
    let cols: Vec<Vec<Rat>> = (0..n).map(|j| base.basis.col(j)).collect();
    let mut wedge_cols: Vec<Vec<Rat>> = Vec::new();
    for s in &sets {
        let vs: Vec<crate::exact::ExactVector> =
            s.iter().map(|&j| crate::exact::ExactVector::new(cols[j].clone())).collect();
        let w = crate::exact::wedge(&vs);
        wedge_cols.push(exterior_to_coords(&w, &sets));
    }
    let wedge_basis = QMat::from_rows(wedge_cols).transpose();
    let seeds: Vec<Vec<BigInt>> = (0..sets.len())
        .map(|j| {
            let mut s = vec![BigInt::zero(); sets.len()];
            s[j] = BigInt::one();
            s
        })
        .collect();
    let accept = |v: &[Rat]| -> bool {
        let w = coords_to_exterior(ambient, i, &sets, v);
        !w.is_zero() && w.is_decomposable()
    };
    let found = min_c_in_lattice(&wedge_basis, &lat.places, window, &seeds, &accept)
        .expect("elementary wedges are decomposable");
    let wedgev = coords_to_exterior(ambient, i, &sets, &found.vector);
    // recover the submodule: solutions x with B x ∈ ann(wedge)
    let ann = wedgev.annihilator();
    let mut cond_rows: Vec<Vec<Rat>> = Vec::new();
    for phi in ann.complement_perp() {
        // φ(B x) = 0
        let row: Vec<Rat> = (0..n)
            .map(|j| lat.basis.col(j).iter().zip(&phi).map(|(a, b)| a * b).sum())
            .collect();
        cond_rows.push(row);
    }
    let x_space = Subspace::from_generators(n, &QMat::from_rows(cond_rows).kernel());
    let witness_coeffs = crate::exact::hnf::saturate(n, &x_space.basis_rows());
    AlphaI {
        alpha: found.c.clone().recip(),
        min_c: found.c.clone(),
        witness_coeffs,
        wedge: wedgev,
        certified: found.certified,
    }
}

/// `c` of the submodule spanned by integer coefficient rows, under an action
/// matrix applied to the lattice basis.
pub fn submodule_c(lat: &LatticeBasis, action: &QMat, coeff_rows: &[Vec<BigInt>]) -> Rat {
    submodule_wedge(lat, action, coeff_rows).c_fun(&lat.places)
}

/// Wedge vector of the image of a coefficient-basis submodule under `action`.
pub fn submodule_wedge(lat: &LatticeBasis, action: &QMat, coeff_rows: &[Vec<BigInt>]) -> ExteriorVector {
    let moved = action.mul(&lat.basis);
    let vs: Vec<crate::exact::ExactVector> = coeff_rows
        .iter()
        .map(|row| {
            let x: Vec<Rat> = row.iter().map(|b| Rat::from_integer(b.clone())).collect();
            crate::exact::ExactVector::new(moved.mul_vec(&x))
        })
        .collect();
    crate::exact::wedge(&vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{norm_at, ExactVector, Place};

    fn arch() -> PlaceSystem {
        PlaceSystem::archimedean()
    }

    fn sl2_adjoint_lattice(g: &QMat) -> LatticeBasis {
        LatticeBasis::new(crate::lie::ad_group(2, g), arch()).unwrap()
    }

    #[test]
    fn shortest_c_identity_lattice() {
        let lat = LatticeBasis::new(QMat::identity(3), arch()).unwrap();
        let s = shortest_c(&lat, 0);
        assert_eq!(s.c, int(1));
        assert!(s.certified);
    }

    #[test]
    fn shortest_c_adjoint_scaling() {
        // Ad(diag(4,1/4)) scales f by 1/16
        let g = QMat::from_rows(vec![vec![int(4), int(0)], vec![int(0), rat(1, 4)]]);
        let lat = sl2_adjoint_lattice(&g);
        let s = shortest_c(&lat, 0);
        assert_eq!(s.c, rat(1, 16));
        // witness is the f-direction: coords (0, 0, ±1/16)
        assert_eq!(norm_at(&s.vector, Place::Infinity), rat(1, 16));
    }

    #[test]
    fn x_eta_from_spec() {
        let id = QMat::identity(2);
        let lat = sl2_adjoint_lattice(&id);
        assert!(x_eta_test(&lat, &int(1), 0).in_x_eta);
        assert!(x_eta_test(&lat, &rat(1, 2), 0).in_x_eta);

        let g = QMat::from_rows(vec![vec![int(4), int(0)], vec![int(0), rat(1, 4)]]);
        let lat = sl2_adjoint_lattice(&g);
        assert!(x_eta_test(&lat, &rat(1, 16), 0).in_x_eta);
        let v = x_eta_test(&lat, &rat(1, 8), 0);
        assert!(!v.in_x_eta);
        let w = v.witness.unwrap();
        assert!(c_fun(&w, &arch()) < rat(1, 8));

        // η > 1 fails for every unimodular lattice (Minkowski)
        let v = x_eta_test(&lat, &rat(17, 16), 0);
        assert!(!v.in_x_eta);
        let id_lat = sl2_adjoint_lattice(&QMat::identity(2));
        assert!(!x_eta_test(&id_lat, &rat(33, 32), 0).in_x_eta);
    }

    #[test]
    fn shortest_never_exceeds_one_for_unimodular() {
        // Minkowski: min c ≤ 1 when covolume is 1
        for g in [
            QMat::identity(2),
            QMat::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(1)]]),
            QMat::from_rows(vec![vec![int(8), int(0)], vec![int(0), rat(1, 8)]]),
        ] {
            let lat = sl2_adjoint_lattice(&g);
            assert!(shortest_c(&lat, 0).c <= int(1));
        }
    }

    #[test]
    fn reduce_representative_from_spec() {
        let g = QMat::from_i64(&[&[1, 100], &[0, 1]]);
        let r = reduce_representative(&g);
        assert_eq!(r.norm, int(1));
        assert_eq!(r.gamma.det(), int(1));
        assert_eq!(r.reduced.max_abs(), int(1));

        let id = QMat::identity(2);
        let r = reduce_representative(&id);
        assert_eq!(r.reduced.max_abs(), int(1));
        assert_eq!(r.norm, int(1));

        // diag(4, 1/4): no integral column op shrinks it
        let g = QMat::from_rows(vec![vec![int(4), int(0)], vec![int(0), rat(1, 4)]]);
        let r = reduce_representative(&g);
        assert_eq!(r.norm, int(4));
        assert!(reduction_bound_holds(&r.norm, &rat(1, 16), &int(16), 1));
    }

    #[test]
    fn alpha_i_from_spec() {
        let lat = LatticeBasis::new(QMat::identity(3), arch()).unwrap();
        for i in 1..=3 {
            let a = alpha_i(&lat, i, 0);
            assert_eq!(a.alpha, int(1), "identity lattice has α_{i} = 1");
        }
        let g = QMat::from_rows(vec![vec![rat(1, 4), int(0)], vec![int(0), int(4)]]);
        let lat = LatticeBasis::new(g, arch()).unwrap();
        let a = alpha_i(&lat, 1, 0);
        assert_eq!(a.alpha, int(4));
        assert_eq!(a.min_c, rat(1, 4));
        // i = N: covolume one
        let a = alpha_i(&lat, 2, 0);
        assert_eq!(a.min_c, int(1));
    }

    #[test]
    fn alpha_i_exhaustive_cross_check() {
        // brute force over primitive vectors with small coefficients
        let b = QMat::from_rows(vec![vec![rat(1, 2), int(3)], vec![int(1), int(-2)]]);
        let lat = LatticeBasis::new(b.clone(), arch()).unwrap();
        let a = alpha_i(&lat, 1, 0);
        let mut brute = None::<Rat>;
        for x in -12i64..=12 {
            for y in -12i64..=12 {
                if (x, y) == (0, 0) {
                    continue;
                }
                let v = b.mul_vec(&[int(x), int(y)]);
                let c = c_fun(&v, &arch());
                brute = Some(match brute {
                    None => c,
                    Some(bb) => bb.min(c),
                });
            }
        }
        assert_eq!(a.min_c, brute.unwrap());
    }

    #[test]
    fn finite_place_window() {
        // module Z_Σ² with Σ = {∞, 2}: c-minimum is 1 (any unit vector);
        // vectors like (1/2, 0) have c = (1/2)·2 = 1 as well
        let places = PlaceSystem::new(&[2]).unwrap();
        let lat = LatticeBasis::new(QMat::identity(2), places).unwrap();
        let s = shortest_c(&lat, 2);
        assert_eq!(s.c, int(1));
        assert!(s.certified);
    }

    #[test]
    fn submodule_wedge_matches_direct() {
        let lat = LatticeBasis::new(QMat::identity(3), arch()).unwrap();
        let rows = vec![vec![BigInt::from(1), BigInt::from(0), BigInt::from(2)]];
        let act = QMat::from_i64(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 1]]);
        let w = submodule_wedge(&lat, &act, &rows);
        let direct = crate::exact::wedge(&[ExactVector::from_i64(&[1, 0, 2])]);
        let _ = direct;
        assert_eq!(w.get(&[0]), int(1));
        assert_eq!(w.get(&[2]), int(2));
    }
}
