//! The nondivergence flag: a partial flag of primitive submodules whose
//! product norms under the expanded unipotent action form a concave
//! `-log η` envelope, plus the slope-rule extraction of unipotent
//! obstructions and Minkowski completion to a full flag.
//!
//! All envelope comparisons run in the power domain (`a^{1/p} ≤ b^{1/q}`
//! decided as `a^q ≤ b^p`), so every verdict is exact.

use super::{alpha_i, submodule_c, LatticeBasis, LatticeError};
use crate::exact::hnf;
use crate::linalg::QMat;
use crate::rat::Rat;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

/// A primitive submodule stored as a saturated integer coefficient basis
/// with respect to the lattice basis columns. Coefficients are invariant
/// under the ambient action, so the same rows describe the submodule at
/// every sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Submodule {
    pub coeff_rows: Vec<Vec<BigInt>>,
}

impl Submodule {
    pub fn rank(&self) -> usize {
        self.coeff_rows.len()
    }

    fn canonical(rows: Vec<Vec<BigInt>>) -> Self {
        let h = hnf::row_hnf(&hnf::ZMat::from_rows(rows));
        Submodule { coeff_rows: h.rows_vec() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlagProfile {
    /// Rank of the ambient lattice.
    pub n: usize,
    /// Flag ranks `k_1 < … < k_ℓ` (0 and n are implicit with η = 1).
    pub ranks: Vec<usize>,
    pub submodules: Vec<Submodule>,
    /// `η(k_i) = max over the grid of c(λ_k(u)·Δ_{k_i})`, all in (0, 1).
    #[serde(with = "crate::rat::serde_str_vec")]
    pub eta: Vec<Rat>,
}

impl FlagProfile {
    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    fn points(&self) -> Vec<(usize, Rat)> {
        let mut pts = vec![(0usize, Rat::one())];
        pts.extend(self.ranks.iter().copied().zip(self.eta.iter().cloned()));
        pts.push((self.n, Rat::one()));
        pts
    }

    /// `η(r)^q` for the interpolated envelope at integer rank `r`, where
    /// `q` is the containing segment length. Exact.
    pub fn envelope_pow(&self, r: usize) -> (Rat, u32) {
        assert!(r <= self.n);
        let pts = self.points();
        for w in pts.windows(2) {
            let (a, ea) = (&w[0].0, &w[0].1);
            let (b, eb) = (&w[1].0, &w[1].1);
            if r >= *a && r <= *b {
                let q = (b - a) as u32;
                if q == 0 {
                    return (ea.clone(), 1);
                }
                let val = ea.pow((b - r) as i32) * eb.pow((r - a) as i32);
                return (val, q);
            }
        }
        unreachable!("rank inside [0, n]");
    }

    /// Exact concavity of `-log η` on the envelope points.
    pub fn is_concave(&self) -> bool {
        let pts = self.points();
        for w in pts.windows(3) {
            let (x1, e1) = (w[0].0 as i32, &w[0].1);
            let (x2, e2) = (w[1].0 as i32, &w[1].1);
            let (x3, e3) = (w[2].0 as i32, &w[2].1);
            // slope((x1,x2)) ≥ slope((x2,x3)) in -log η:
            // (η1/η2)^(x3-x2) ≥ (η2/η3)^(x2-x1)
            let lhs = (e1 / e2).pow(x3 - x2);
            let rhs = (e2 / e3).pow(x2 - x1);
            if lhs < rhs {
                return false;
            }
        }
        true
    }

    /// Maximal integer `k` with `η(k)/η(k-1) ≤ ρ^{1/r}` (None when even the
    /// first step fails). By concavity the condition holds on a prefix.
    pub fn slope_rule_rank(&self, rho: &Rat, r: u32) -> Option<usize> {
        let pts = self.points();
        let mut best = None;
        for w in pts.windows(2) {
            let (a, ea) = (w[0].0, &w[0].1);
            let (b, eb) = (&w[1].0, &w[1].1);
            // per-step ratio within the segment: (η_b/η_a)^{1/(b-a)} ≤ ρ^{1/r}
            // ⟺ (η_b/η_a)^r ≤ ρ^{b-a}
            let lhs = (eb / ea).pow(r as i32);
            let rhs = rho.pow((*b - a) as i32);
            if lhs <= rhs {
                best = Some(*b);
            } else {
                break;
            }
        }
        best
    }
}

/// Builds the flag: discovers candidate primitive submodules by
/// exterior-power reduction at a subsample of the action grid, evaluates
/// each candidate's exact grid maximum, and selects the partial flag whose
/// `-log η` points form the maximal upper convex hull.
///
/// `actions` are the exact matrices of the expanded unipotent elements at
/// the grid samples; `discovery_stride` controls how many samples seed the
/// candidate search; `extra` candidates (coefficient bases) are always
/// included, which gives the envelope-domination guarantee for a caller-
/// supplied submodule.
pub fn flag_construct(
    lat: &LatticeBasis,
    actions: &[QMat],
    discovery_stride: usize,
    extra: &[Vec<Vec<BigInt>>],
    window: u32,
) -> Result<FlagProfile, LatticeError> {
    if actions.is_empty() {
        return Err(LatticeError::DegenerateLattice);
    }
    let n = lat.rank();
    let stride = discovery_stride.max(1);
    let mut candidates: Vec<Submodule> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut push = |sub: Submodule, candidates: &mut Vec<Submodule>| {
        if sub.rank() == 0 || sub.rank() >= n {
            return;
        }
        let key = format!("{:?}", sub.coeff_rows);
        if seen.insert(key) {
            candidates.push(sub);
        }
    };
    for rows in extra {
        push(Submodule::canonical(rows.clone()), &mut candidates);
    }
    let mut idxs: Vec<usize> = (0..actions.len()).step_by(stride).collect();
    if !idxs.contains(&(actions.len() - 1)) {
        idxs.push(actions.len() - 1);
    }
    for &idx in &idxs {
        let moved = QMat::mul(&actions[idx], &lat.basis);
        let Ok(moved_lat) = LatticeBasis::new(moved, lat.places.clone()) else {
            return Err(LatticeError::DegenerateLattice);
        };
        for i in 1..n {
            let a = alpha_i(&moved_lat, i, window);
            push(Submodule::canonical(a.witness_coeffs), &mut candidates);
        }
    }

    // exact grid maximum per candidate; keep only those that stay < 1
    let mut best_per_rank: std::collections::BTreeMap<usize, (Rat, Submodule)> = Default::default();
    for cand in candidates {
        let mut m = Rat::zero();
        for a in actions {
            let c = submodule_c(lat, a, &cand.coeff_rows);
            if c > m {
                m = c;
            }
            if m >= Rat::one() {
                break;
            }
        }
        if m.is_zero() || m >= Rat::one() {
            continue;
        }
        let r = cand.rank();
        let better = match best_per_rank.get(&r) {
            None => true,
            Some((cur, _)) => m < *cur,
        };
        if better {
            best_per_rank.insert(r, (m, cand));
        }
    }

    // upper convex hull over (0,0), (r, -log η_r), (n, 0)
    let mut pts: Vec<(usize, Rat, Option<Submodule>)> = vec![(0, Rat::one(), None)];
    for (r, (eta, sub)) in &best_per_rank {
        pts.push((*r, eta.clone(), Some(sub.clone())));
    }
    pts.push((n, Rat::one(), None));
    let mut hull: Vec<(usize, Rat, Option<Submodule>)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let p1 = &hull[hull.len() - 2];
            let p2 = &hull[hull.len() - 1];
            // drop p2 if it lies on or below the chord p1→p:
            // (η1/η2)^(x3-x1) ≤ (η1/η3)^(x2-x1)
            let lhs = (&p1.1 / &p2.1).pow((p.0 - p1.0) as i32);
            let rhs = (&p1.1 / &p.1).pow((p2.0 - p1.0) as i32);
            if lhs <= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut ranks = Vec::new();
    let mut submodules = Vec::new();
    let mut eta = Vec::new();
    for (r, e, sub) in hull {
        if let Some(sub) = sub {
            ranks.push(r);
            eta.push(e);
            submodules.push(sub);
        }
    }
    Ok(FlagProfile { n, ranks, submodules, eta })
}

/// Outcome of the obstruction extraction.
#[derive(Clone, Debug)]
pub enum Obstruction {
    /// A nilpotent subalgebra was found at the slope-rule rank. The bound
    /// `η(k)^r ≤ ρ^k` is reported in the power domain.
    Found {
        rank: usize,
        basis_matrices: Vec<QMat>,
        coeff_rows: Vec<Vec<BigInt>>,
        eta_k: Rat,
        bound_ok: bool,
    },
    /// Flag empty or slope rule never satisfied.
    NoFlag,
    /// The selected subspace failed bracket closure.
    NotClosed { rank: usize },
    /// Some basis element of the selected subspace is not nilpotent; carries
    /// the eigenvalue-product certificates.
    NotNilpotent { rank: usize, certificates: Vec<Rat> },
}

/// Applies the slope rule `k maximal with η(k)/η(k-1) ≤ ρ^{1/r}` to the
/// flag, pulls the submodule at that rank back to matrices via `to_matrix`,
/// and verifies it is a nilpotent subalgebra.
pub fn detect_unipotent_obstruction(
    flag: &FlagProfile,
    rho: &Rat,
    source_rank: u32,
    to_matrix: &dyn Fn(&[Rat]) -> QMat,
) -> Obstruction {
    if flag.is_empty() {
        return Obstruction::NoFlag;
    }
    let Some(k) = flag.slope_rule_rank(rho, source_rank) else {
        return Obstruction::NoFlag;
    };
    let Some(pos) = flag.ranks.iter().position(|&r| r == k) else {
        return Obstruction::NoFlag;
    };
    let sub = &flag.submodules[pos];
    let eta_k = flag.eta[pos].clone();
    // bound: η(k) ≤ ρ^{k/r} ⟺ η(k)^r ≤ ρ^k
    let bound_ok = eta_k.pow(source_rank as i32) <= rho.pow(k as i32);
    let mats: Vec<QMat> = sub
        .coeff_rows
        .iter()
        .map(|row| to_matrix(&row.iter().map(|b| Rat::from_integer(b.clone())).collect::<Vec<_>>()))
        .collect();
    // nilpotency of each basis element, with certificates
    let mut certs = Vec::new();
    let mut all_nil = true;
    for m in &mats {
        let (nil, sigma) = crate::lie::is_nilpotent_element(m);
        all_nil &= nil;
        certs.push(sigma);
    }
    if !all_nil {
        return Obstruction::NotNilpotent { rank: k, certificates: certs };
    }
    // bracket closure of the span
    let coords: Vec<Vec<Rat>> = mats.iter().map(|m| crate::lie::mat_to_coords(m).unwrap()).collect();
    let span = crate::linalg::Subspace::from_generators(coords[0].len(), &coords);
    for a in &mats {
        for b in &mats {
            let br = crate::lie::bracket(a, b);
            let c = crate::lie::mat_to_coords(&br).unwrap();
            if !span.contains(&c) {
                return Obstruction::NotClosed { rank: k };
            }
        }
    }
    Obstruction::Found { rank: k, basis_matrices: mats, coeff_rows: sub.coeff_rows.clone(), eta_k, bound_ok }
}

/// One rank of a completed flag.
#[derive(Clone, Debug, Serialize)]
pub struct CompletedRank {
    pub rank: usize,
    pub submodule: Submodule,
    #[serde(with = "crate::rat::serde_str")]
    pub c_value: Rat,
    /// `c ≤ A·η(rank)` in the power domain, with the interpolated envelope.
    pub interpolation_ok: bool,
}

/// Completes the partial flag to a full flag of primitive submodules at one
/// sample, greedily extending each gap by a min-`c` vector, and checks the
/// interpolation bound `c(λ_k(u)Δ_r) ≤ A·η(r)` rank by rank.
pub fn minkowski_complete(
    flag: &FlagProfile,
    lat: &LatticeBasis,
    action: &QMat,
    a_const: &Rat,
    window: u32,
) -> Vec<CompletedRank> {
    let n = lat.rank();
    let full_rows: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut r = vec![BigInt::zero(); n];
            r[j] = BigInt::one();
            r
        })
        .collect();
    // chain endpoints: rank 0 (empty) .. flag .. rank n (full)
    let mut chain: Vec<(usize, Vec<Vec<BigInt>>)> = vec![(0, Vec::new())];
    for (i, r) in flag.ranks.iter().enumerate() {
        chain.push((*r, flag.submodules[i].coeff_rows.clone()));
    }
    chain.push((n, full_rows));

    let mut out: Vec<CompletedRank> = Vec::new();
    for w in 0..chain.len() - 1 {
        let (a_rank, a_rows) = chain[w].clone();
        let (b_rank, b_rows) = chain[w + 1].clone();
        let mut cur = a_rows.clone();
        for step_rank in a_rank + 1..=b_rank {
            if step_rank == b_rank {
                cur = b_rows.clone();
            } else {
                cur = extend_by_min_c(lat, action, &cur, &b_rows, window);
            }
            if step_rank == n {
                continue;
            }
            let c = submodule_c(lat, action, &cur);
            let (env_pow, q) = flag.envelope_pow(step_rank);
            // c ≤ A · η(r) ⟺ c^q ≤ A^q · η(r)^q
            let ok = c.pow(q as i32) <= a_const.pow(q as i32) * &env_pow;
            out.push(CompletedRank {
                rank: step_rank,
                submodule: Submodule::canonical(cur.clone()),
                c_value: c,
                interpolation_ok: ok,
            });
        }
    }
    out
}

/// Extends `current` by one vector chosen from the span of `inside`,
/// minimizing the submodule `c` at the given sample. Greedy successive-
/// minima step; enumeration is seeded by the inside basis itself.
fn extend_by_min_c(
    lat: &LatticeBasis,
    action: &QMat,
    current: &[Vec<BigInt>],
    inside: &[Vec<BigInt>],
    window: u32,
) -> Vec<Vec<BigInt>> {
    let n = lat.rank();
    let cur_span = crate::linalg::Subspace::from_generators(
        n,
        &current
            .iter()
            .map(|r| r.iter().map(|b| Rat::from_integer(b.clone())).collect::<Vec<Rat>>())
            .collect::<Vec<_>>(),
    );
    let mut best: Option<(Rat, Vec<Vec<BigInt>>)> = None;
    let mut try_vec = |w: Vec<BigInt>| {
        let wq: Vec<Rat> = w.iter().map(|b| Rat::from_integer(b.clone())).collect();
        if cur_span.contains(&wq) {
            return;
        }
        let mut rows = current.to_vec();
        rows.push(w);
        let gens: Vec<Vec<Rat>> = rows
            .iter()
            .map(|r| r.iter().map(|b| Rat::from_integer(b.clone())).collect())
            .collect();
        let sat = hnf::saturate(n, &gens);
        let c = submodule_c(lat, action, &sat);
        let better = match &best {
            None => true,
            Some((bc, _)) => c < *bc,
        };
        if better {
            best = Some((c, sat));
        }
    };
    // seed with the inside basis
    for row in inside {
        try_vec(row.clone());
    }
    // small combination search inside the gap lattice
    let moved = action.mul(&lat.basis);
    let imgs: Vec<Vec<Rat>> = inside
        .iter()
        .map(|r| moved.mul_vec(&r.iter().map(|b| Rat::from_integer(b.clone())).collect::<Vec<Rat>>()))
        .collect();
    let img_mat = QMat::from_rows(imgs).transpose();
    let reduced = super::lll::lll(&img_mat);
    let norms: Vec<Rat> = (0..reduced.basis.cols)
        .map(|j| reduced.basis.col(j).iter().map(|x| x * x).sum())
        .collect();
    if let Some(r2) = norms.iter().max() {
        let bound = r2 * crate::rat::int(4);
        for coeffs in super::lll::enumerate_in_ball(&img_mat, &bound) {
            let w: Vec<BigInt> = (0..inside[0].len())
                .map(|t| {
                    coeffs
                        .iter()
                        .zip(inside)
                        .map(|(c, row)| c * &row[t])
                        .sum()
                })
                .collect();
            try_vec(w);
        }
        let _ = window;
    }
    best.expect("gap is nonempty").1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::PlaceSystem;
    use crate::rat::{int, rat};

    fn arch() -> PlaceSystem {
        PlaceSystem::archimedean()
    }

    #[test]
    fn identity_lattice_has_empty_flag() {
        let lat = LatticeBasis::new(QMat::identity(2), arch()).unwrap();
        let actions = vec![QMat::identity(2), QMat::identity(2)];
        let flag = flag_construct(&lat, &actions, 1, &[], 0).unwrap();
        assert!(flag.is_empty());
        assert!(flag.is_concave());
        assert_eq!(flag.envelope_pow(1), (Rat::one(), 2));
    }

    #[test]
    fn contracted_line_enters_flag() {
        // g = diag(1/4, 4); upper unipotent u(t) fixes (1/4, 0)·Z
        let g = QMat::from_rows(vec![vec![rat(1, 4), int(0)], vec![int(0), int(4)]]);
        let lat = LatticeBasis::new(g, arch()).unwrap();
        let mut actions = Vec::new();
        for j in -4i64..=4 {
            let t = rat(j, 4);
            let mut u = QMat::identity(2);
            u[(0, 1)] = t;
            actions.push(u);
        }
        let flag = flag_construct(&lat, &actions, 2, &[], 0).unwrap();
        assert_eq!(flag.ranks, vec![1]);
        assert_eq!(flag.eta, vec![rat(1, 4)]);
        assert!(flag.is_concave());
    }

    #[test]
    fn expanded_action_expels_module() {
        // lower unipotent with large parameter pushes (1/4,0) off: max c > 1
        let g = QMat::from_rows(vec![vec![rat(1, 4), int(0)], vec![int(0), int(4)]]);
        let lat = LatticeBasis::new(g, arch()).unwrap();
        let mut actions = Vec::new();
        for j in -4i64..=4 {
            let t = int(j * 8); // λ_k-expanded times
            let mut u = QMat::identity(2);
            u[(1, 0)] = t;
            actions.push(u);
        }
        let flag = flag_construct(&lat, &actions, 1, &[], 0).unwrap();
        assert!(flag.is_empty(), "no module survives the expanded window");
    }

    #[test]
    fn slope_rule_and_obstruction() {
        let g = QMat::from_rows(vec![vec![rat(1, 16), int(0), int(0)], vec![int(0), int(1), int(0)], vec![
            int(0),
            int(0),
            int(16),
        ]]);
        // adjoint-free synthetic: lattice in Q³ whose rank-1 minimum is the
        // first coordinate line; treat coefficients as sl_2 coordinates
        let lat = LatticeBasis::new(g, arch()).unwrap();
        let actions = vec![QMat::identity(3)];
        let flag = flag_construct(&lat, &actions, 1, &[], 0).unwrap();
        // rank-2 module (coords 0,1) also stays small: wedge c = 1/16
        assert_eq!(flag.ranks, vec![1, 2]);
        assert_eq!(flag.eta, vec![rat(1, 16), rat(1, 16)]);
        assert!(flag.is_concave());
        // slope rule with ρ = 1/8, r = 1: the 1→2 step ratio is 1, so k = 1
        assert_eq!(flag.slope_rule_rank(&rat(1, 8), 1), Some(1));
        // coefficient row (1,0,0) ↦ h is NOT nilpotent → diagnostic
        let det = detect_unipotent_obstruction(&flag, &rat(1, 8), 1, &|c| {
            crate::lie::coords_to_mat(2, c)
        });
        match det {
            Obstruction::NotNilpotent { certificates, .. } => {
                assert_eq!(certificates[0], int(-1)); // σ̄(h) = -1
            }
            other => panic!("expected NotNilpotent, got {other:?}"),
        }
    }

    #[test]
    fn obstruction_found_for_nilpotent_direction() {
        // permute coordinates so the contracted line is the e-direction
        // (sl_2 coords (h, e, f)): lattice diag with small middle coordinate
        let g = QMat::from_rows(vec![vec![int(1), int(0), int(0)], vec![int(0), rat(1, 16), int(0)], vec![
            int(0),
            int(0),
            int(16),
        ]]);
        let lat = LatticeBasis::new(g, arch()).unwrap();
        let actions = vec![QMat::identity(3)];
        let flag = flag_construct(&lat, &actions, 1, &[], 0).unwrap();
        assert_eq!(flag.ranks[0], 1);
        let det = detect_unipotent_obstruction(&flag, &rat(1, 8), 1, &|c| {
            crate::lie::coords_to_mat(2, c)
        });
        match det {
            Obstruction::Found { rank, basis_matrices, bound_ok, .. } => {
                assert_eq!(rank, 1);
                assert!(bound_ok);
                assert_eq!(basis_matrices[0], crate::lie::sl2_e());
            }
            other => panic!("expected Found, got {other:?}"),
        }
    }

    #[test]
    fn minkowski_completion_small() {
        // N=2: empty flag completes to the successive-minima flag
        let lat = LatticeBasis::new(QMat::identity(2), arch()).unwrap();
        let actions = vec![QMat::identity(2)];
        let flag = flag_construct(&lat, &actions, 1, &[], 0).unwrap();
        let done = minkowski_complete(&flag, &lat, &actions[0], &int(2), 0);
        assert_eq!(done.len(), 1);
        assert_eq!(done[0].rank, 1);
        assert_eq!(done[0].c_value, int(1));
        assert!(done[0].interpolation_ok);
    }

    #[test]
    fn minkowski_completion_keeps_flag_module() {
        // the diag(1/4, 4) flag {Δ} is already full at N=2; interpolation
        // holds with the configured constant
        let g = QMat::from_rows(vec![vec![rat(1, 4), int(0)], vec![int(0), int(4)]]);
        let lat = LatticeBasis::new(g, arch()).unwrap();
        let mut actions = Vec::new();
        for j in -4i64..=4 {
            let mut u = QMat::identity(2);
            u[(0, 1)] = rat(j, 4);
            actions.push(u);
        }
        let flag = flag_construct(&lat, &actions, 2, &[], 0).unwrap();
        assert_eq!(flag.ranks, vec![1]);
        let done = minkowski_complete(&flag, &lat, &actions[4], &int(2), 0);
        assert_eq!(done.len(), 1);
        assert_eq!(done[0].submodule, flag.submodules[0]);
        assert_eq!(done[0].c_value, rat(1, 4));
        assert!(done[0].interpolation_ok);
    }

    #[test]
    fn envelope_domination_of_supplied_candidate() {
        let g = QMat::from_rows(vec![vec![rat(1, 4), int(0)], vec![int(0), int(4)]]);
        let lat = LatticeBasis::new(g, arch()).unwrap();
        let actions = vec![QMat::identity(2)];
        // supply the full-rank-1 candidate (0,1) whose c is 4 (≥ 1, dropped)
        // and the good one (1,0)
        let extra = vec![vec![vec![BigInt::from(1), BigInt::from(0)]], vec![vec![BigInt::from(0), BigInt::from(1)]]];
        let flag = flag_construct(&lat, &actions, 1, &extra, 0).unwrap();
        // envelope at rank 1 must dominate the supplied candidate's η
        let (env_pow, q) = flag.envelope_pow(1);
        let cand_c = submodule_c(&lat, &actions[0], &extra[0][..]);
        assert!(env_pow <= cand_c.pow(q as i32));
    }
}
