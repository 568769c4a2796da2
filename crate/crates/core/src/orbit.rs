//! Exact unipotent-orbit scanning on rational time grids, the expanding-map
//! machinery, the empirical trichotomy harness, and the obstruction and
//! parabolic pipelines.
//!
//! The transcendental time base `e³` is replaced throughout by a configured
//! rational base (default 20), so every sample point, every lattice minimum,
//! and every verdict is an exact rational. Reports name the base they used.

use crate::lattice::{self};
use crate::lie::{self, MatrixLieAlgebra};
use crate::linalg::QMat;
use crate::rat::{int, pow_i, Rat};
use crate::subgroups::{
    self, AmbientGroup, ConstantsProfile, DioVerdict, DiophantineProfile, SigmaElem, SubgroupDescriptor,
    UnipotentDirection,
};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrbitError {
    #[error("generator is not nilpotent")]
    NotNilpotent,
    #[error("one-parameter law u(t)u(s) = u(t+s) failed symbolic verification")]
    NotOneParameter,
    #[error("Diophantine precondition could not be certified: {0}")]
    PreconditionUnverifiable(String),
    #[error(transparent)]
    Subgroup(#[from] subgroups::SubgroupError),
    #[error(transparent)]
    Lie(#[from] lie::LieError),
}

/// `exp` of a nilpotent matrix, exactly.
pub fn nilpotent_exp(z: &QMat) -> QMat {
    let n = z.rows;
    let mut acc = QMat::identity(n);
    let mut term = QMat::identity(n);
    let mut factorial = Rat::one();
    for k in 1..=n {
        term = term.mul(z);
        if term.is_zero() {
            break;
        }
        factorial *= int(k as i64);
        acc = acc.add(&term.scale(&factorial.clone().recip()));
    }
    acc
}

/// `log` of a unipotent matrix, exactly.
pub fn unipotent_log(m: &QMat) -> QMat {
    let n = m.rows;
    let x = m.sub(&QMat::identity(n));
    let mut acc = QMat::zeros(n, n);
    let mut pow = QMat::identity(n);
    for j in 1..=n {
        pow = pow.mul(&x);
        if pow.is_zero() {
            break;
        }
        let c = Rat::new(if j % 2 == 1 { 1.into() } else { (-1).into() }, j.into());
        acc = acc.add(&pow.scale(&c));
    }
    acc
}

/// A one-parameter unipotent subgroup `u(t) = exp(t z)` with precomputed
/// rational matrix coefficients. The generator is rescaled to entrywise max
/// norm 1.
#[derive(Clone, Debug)]
pub struct OneParameterUnipotent {
    pub generator: QMat,
    coeffs: Vec<QMat>,
    pub n: usize,
}

impl OneParameterUnipotent {
    pub fn new(z: QMat) -> Result<Self, OrbitError> {
        let n = z.rows;
        if !lie::is_nilpotent_element(&z).0 {
            return Err(OrbitError::NotNilpotent);
        }
        let norm = z.max_abs();
        let z = if norm.is_zero() || norm.is_one() { z } else { z.scale(&norm.recip()) };
        let mut coeffs = vec![QMat::identity(n)];
        let mut term = QMat::identity(n);
        let mut factorial = Rat::one();
        for k in 1..=n {
            term = term.mul(&z);
            if term.is_zero() {
                break;
            }
            factorial *= int(k as i64);
            coeffs.push(term.scale(&factorial.clone().recip()));
        }
        let u = OneParameterUnipotent { generator: z, coeffs, n };
        if !u.verify_one_parameter() {
            return Err(OrbitError::NotOneParameter);
        }
        Ok(u)
    }

    pub fn at(&self, t: &Rat) -> QMat {
        let mut acc = QMat::zeros(self.n, self.n);
        let mut tp = Rat::one();
        for c in &self.coeffs {
            acc = acc.add(&c.scale(&tp));
            tp *= t;
        }
        acc
    }

    /// Symbolic check of `u(t)u(s) = u(t+s)`: with `u(t) = Σ t^k C_k` this
    /// reduces to `C_a · C_b = binom(a+b, a) · C_{a+b}` for all `a, b`.
    pub fn verify_one_parameter(&self) -> bool {
        let deg = self.coeffs.len();
        for a in 0..deg {
            for b in 0..deg {
                let prod = self.coeffs[a].mul(&self.coeffs[b]);
                if a + b >= deg {
                    if !prod.is_zero() {
                        return false;
                    }
                    continue;
                }
                let binom = binomial(a + b, a);
                if prod != self.coeffs[a + b].scale(&binom) {
                    return false;
                }
            }
        }
        true
    }
}

fn binomial(n: usize, k: usize) -> Rat {
    let mut num = Rat::one();
    for i in 0..k {
        num *= int((n - i) as i64);
        num /= int((i + 1) as i64);
    }
    num
}

/// Graded expanding map: grade-`i` components of the direction algebra are
/// scaled by `base^{(i+1)k}`. The rational base replaces `e³`.
#[derive(Clone, Debug)]
pub struct ExpandingMap {
    pub base: Rat,
    pub kappa: u32,
    /// Per-grade bases in ambient lattice coordinates.
    grades: Vec<Vec<Vec<Rat>>>,
    pub algebra: MatrixLieAlgebra,
}

impl ExpandingMap {
    pub fn new(ambient: &AmbientGroup, u: &UnipotentDirection, base: Rat, kappa: u32) -> Result<Self, OrbitError> {
        assert!(base >= int(2), "expanding base must be at least 2");
        let gens: Vec<QMat> = u.elements().iter().map(|(_, m, _)| m.clone()).collect();
        let algebra = MatrixLieAlgebra::generated(ambient.n, &gens)?;
        let lcs = lie::lower_central_series(&algebra)?;
        let grades = lcs
            .grades
            .iter()
            .map(|g| {
                g.iter()
                    .map(|coords| {
                        let m = lie::coords_to_mat(ambient.n, coords);
                        ambient.to_coords(&m).expect("grade inside ambient")
                    })
                    .collect()
            })
            .collect();
        Ok(ExpandingMap { base, kappa, grades, algebra })
    }

    /// λ_k applied to a direction-algebra element given in ambient lattice
    /// coordinates.
    pub fn apply_k(&self, coords: &[Rat], k: u32) -> Option<Vec<Rat>> {
        // decompose over the graded basis
        let flat: Vec<Vec<Rat>> = self.grades.iter().flatten().cloned().collect();
        let mat = QMat::from_rows(flat.clone()).transpose();
        let x = mat.solve(&coords.to_vec())?;
        let mut out = vec![Rat::zero(); coords.len()];
        let mut idx = 0;
        for (grade, basis) in self.grades.iter().enumerate() {
            let scale = pow_i(&self.base, (grade as i64 + 1) * k as i64);
            for b in basis {
                for (o, c) in out.iter_mut().zip(b) {
                    *o += &x[idx] * &scale * c;
                }
                idx += 1;
            }
        }
        Some(out)
    }

    /// Checks the containment
    /// `exp(λ_{k-κ}(B)) · exp(λ_{k-1}(B)) ⊆ exp(λ_k(B))` on a sample grid of
    /// ball elements, via exact log of the unipotent product.
    pub fn verify_containment(&self, ambient: &AmbientGroup, k: u32, grid: &[Rat]) -> bool {
        let dim: usize = self.grades.iter().map(|g| g.len()).sum();
        let flat: Vec<Vec<Rat>> = self.grades.iter().flatten().cloned().collect();
        // sample coefficient vectors with entries from the grid
        let mut samples: Vec<Vec<Rat>> = vec![vec![]];
        for _ in 0..dim {
            let mut next = Vec::new();
            for s in &samples {
                for g in grid {
                    let mut s2 = s.clone();
                    s2.push(g.clone());
                    next.push(s2);
                }
            }
            samples = next;
        }
        let coords_of = |coeffs: &[Rat]| -> Vec<Rat> {
            let mut acc = vec![Rat::zero(); ambient.dim()];
            for (c, b) in coeffs.iter().zip(&flat) {
                for (a, x) in acc.iter_mut().zip(b) {
                    *a += c * x;
                }
            }
            acc
        };
        for s1 in &samples {
            for s2 in &samples {
                let z1 = coords_of(s1);
                let z2 = coords_of(s2);
                let Some(l1) = self.apply_k(&z1, k.saturating_sub(self.kappa)) else { return false };
                let Some(l2) = self.apply_k(&z2, k.saturating_sub(1)) else { return false };
                let m1 = nilpotent_exp(&ambient.from_coords(&l1));
                let m2 = nilpotent_exp(&ambient.from_coords(&l2));
                let w = unipotent_log(&m1.mul(&m2));
                let Some(wc) = ambient.to_coords(&w) else { return false };
                // pull back through λ_k and check the ball bound
                let mat = QMat::from_rows(flat.clone()).transpose();
                let Some(x) = mat.solve(&wc) else { return false };
                let mut idx = 0;
                for (grade, basis) in self.grades.iter().enumerate() {
                    let scale = pow_i(&self.base, (grade as i64 + 1) * k as i64);
                    for _ in basis {
                        if crate::rat::abs(&x[idx]) > scale {
                            return false;
                        }
                        idx += 1;
                    }
                }
            }
        }
        true
    }
}

/// Per-sample record of an orbit scan.
#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    #[serde(with = "crate::rat::serde_str")]
    pub xi: Rat,
    pub in_x_eta: bool,
    #[serde(with = "crate::rat::serde_str")]
    pub shortest_c: Rat,
    pub diophantine: bool,
    pub violator: Option<String>,
    /// Per catalog entry: (name, c(η_H), max direction-wedge norm).
    pub per_catalog: Vec<(String, String, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitScanReport {
    pub rows: Vec<ScanRow>,
    /// Fraction of samples outside `X_η` or failing the Diophantine test.
    #[serde(with = "crate::rat::serde_str")]
    pub exceptional_fraction: Rat,
    /// Fraction outside `X_η` alone.
    #[serde(with = "crate::rat::serde_str")]
    pub x_eta_fraction: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub raw_norm: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub reduced_norm: Rat,
    pub k: u32,
    #[serde(with = "crate::rat::serde_str")]
    pub base: Rat,
    pub grid: usize,
    #[serde(with = "crate::rat::serde_str")]
    pub eta: Rat,
}

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub k: u32,
    pub grid: usize,
    pub eta: Rat,
    pub base: Rat,
    pub window: u32,
    /// Γ-reduce the base point before scanning.
    pub reduce: bool,
}

impl ScanConfig {
    pub fn grid_points(&self) -> Vec<Rat> {
        let m = self.grid.max(2);
        (0..m).map(|j| int(-1) + int(2) * Rat::new((j as i64).into(), ((m - 1) as i64).into())).collect()
    }
}

/// Scans `u(base^k ξ)·g` over the rational grid `ξ ∈ [-1, 1]`, running the
/// compact-part and Diophantine tests at every sample. All per-sample data
/// is exact; samples evaluate in parallel and merge in grid order.
pub fn orbit_scan(
    ambient: &AmbientGroup,
    g: &QMat,
    u: &OneParameterUnipotent,
    cfg: &ScanConfig,
    profile: &DiophantineProfile,
    catalog: &[SubgroupDescriptor],
    u_dir: &UnipotentDirection,
) -> Result<OrbitScanReport, OrbitError> {
    let raw_norm = lattice::group_norm(g);
    let g_use = if cfg.reduce { lattice::reduce_representative(g).reduced } else { g.clone() };
    let reduced_norm = lattice::group_norm(&g_use);
    let scale = pow_i(&cfg.base, cfg.k as i64);
    let points = cfg.grid_points();
    // validate the catalog once, with a throwaway test on the base point
    let sig0 = SigmaElem::diagonal(g_use.clone(), &ambient.places);
    subgroups::diophantine_test(ambient, &sig0, profile, catalog, u_dir, None)?;
    let rows: Vec<ScanRow> = points
        .par_iter()
        .map(|xi| {
            let t = xi * &scale;
            let h = u.at(&t).mul(&g_use);
            // one Ad evaluation serves the lattice test and the catalog
            let ad = ambient.ad_in_basis(&h);
            let lat = lattice::LatticeBasis::new(ad.clone(), ambient.places.clone())
                .expect("Ad(g) is invertible");
            let xv = lattice::x_eta_test(&lat, &cfg.eta, cfg.window);
            let (violator, data) = subgroups::diophantine_scan_diag(ambient, &ad, profile, catalog, u_dir, None);
            let per_catalog = data
                .into_iter()
                .map(|(n, c, w)| (n, crate::rat::format(&c), crate::rat::format(&w)))
                .collect();
            ScanRow {
                xi: xi.clone(),
                in_x_eta: xv.in_x_eta,
                shortest_c: xv.shortest.c,
                diophantine: violator.is_none(),
                violator,
                per_catalog,
            }
        })
        .collect();
    let total = int(rows.len() as i64);
    let exceptional = rows.iter().filter(|r| !r.in_x_eta || !r.diophantine).count();
    let outside = rows.iter().filter(|r| !r.in_x_eta).count();
    Ok(OrbitScanReport {
        exceptional_fraction: Rat::new((exceptional as i64).into(), total.numer().clone()),
        x_eta_fraction: Rat::new((outside as i64).into(), total.numer().clone()),
        rows,
        raw_norm,
        reduced_norm,
        k: cfg.k,
        base: cfg.base.clone(),
        grid: cfg.grid,
        eta: cfg.eta.clone(),
    })
}

/// Classification outcome of a scan against the three alternatives.
#[derive(Clone, Debug, Serialize)]
pub enum TrichotomyVerdict {
    /// Exceptional fraction within `E₁ η^{1/D}`.
    Alt1 {
        #[serde(with = "crate::rat::serde_str")]
        fraction: Rat,
        /// The bound is vacuous (`E₁^D η ≥ 1`).
        vacuous: bool,
    },
    /// Some catalog subgroup satisfies the uniform `c` bound and the
    /// decaying wedge bound at every sample.
    Alt2 {
        name: String,
        #[serde(with = "crate::rat::serde_str")]
        max_c: Rat,
        #[serde(with = "crate::rat::serde_str")]
        max_wedge: Rat,
    },
    /// A normal catalog subgroup with nearly invariant direction.
    Alt3 {
        name: String,
        #[serde(with = "crate::rat::serde_str")]
        wedge: Rat,
        #[serde(with = "crate::rat::serde_str")]
        eps: Rat,
    },
    Inconclusive {
        nearest_miss: String,
    },
}

/// Applies the alternative checks in order. All comparisons run in the
/// power domain against the configured constants.
pub fn trichotomy_classify(
    report: &OrbitScanReport,
    constants: &ConstantsProfile,
    profile: &DiophantineProfile,
    catalog: &[SubgroupDescriptor],
    u_dir: &UnipotentDirection,
) -> TrichotomyVerdict {
    let a = constants.a;
    let d = constants.d;
    let eta = &report.eta;
    // alt1: fraction ≤ E₁ η^{1/D}  ⟺  fraction^D ≤ E₁^D η
    let bound_pow = constants.e1.pow(d as i32) * eta;
    let vacuous = bound_pow >= Rat::one();
    if report.exceptional_fraction.pow(d as i32) <= bound_pow {
        return TrichotomyVerdict::Alt1 { fraction: report.exceptional_fraction.clone(), vacuous };
    }
    // alt2: uniform c bound + decaying wedge bound across all samples
    // B = (E·|g|^A + E₁·cutoff^A)·η^{-A}
    let g_norm = &report.reduced_norm;
    let big_b = (&constants.e * g_norm.pow(a as i32) + &constants.e1 * profile.cutoff.pow(a as i32))
        * pow_i(eta, -(a as i64));
    let decay_pow = pow_i(&report.base, report.k as i64); // base^k
    let mut nearest = String::new();
    for (idx, h) in catalog.iter().enumerate() {
        let mut max_c = Rat::zero();
        let mut max_wedge = Rat::zero();
        let mut ok = true;
        for row in &report.rows {
            let (_, c_s, w_s) = &row.per_catalog[idx];
            let c = crate::rat::parse(c_s).unwrap();
            let w = crate::rat::parse(w_s).unwrap();
            if c > max_c {
                max_c = c.clone();
            }
            if w > max_wedge {
                max_wedge = w.clone();
            }
            // c ≤ B and wedge ≤ B·base^{-k/D}  ⟺  wedge^D·base^k ≤ B^D
            if c > big_b || w.pow(d as i32) * &decay_pow > big_b.pow(d as i32) {
                ok = false;
                break;
            }
        }
        if ok {
            return TrichotomyVerdict::Alt2 { name: h.name.clone(), max_c, max_wedge };
        }
        if nearest.is_empty() {
            nearest = format!("{}: max_c={}, max_wedge={}", h.name, max_c, max_wedge);
        }
    }
    // alt3: normal subgroup with small invariant wedge:
    // ‖z∧v_H‖ ≤ ε(height^{1/A}·η/E₁)^{1/A}, height ≤ E₁(cutoff/η)^A
    let height_cap = &constants.e1 * (&profile.cutoff / eta).pow(a as i32);
    for h in catalog.iter().filter(|h| h.normal_in_g) {
        let height = Rat::from_integer(h.height.clone());
        if height > height_cap {
            continue;
        }
        let wedge = u_dir.max_wedge_norm_diag(&h.v_h);
        // s^A = height·(η/E₁)^A
        let s_pow = &height * (eta / &constants.e1).pow(a as i32);
        let eps = profile.eval_at_power(&s_pow, a, None);
        if wedge.pow(a as i32) <= eps {
            return TrichotomyVerdict::Alt3 { name: h.name.clone(), wedge, eps };
        }
        if nearest.is_empty() {
            nearest = format!("{} (normal): wedge={wedge}", h.name);
        }
    }
    TrichotomyVerdict::Inconclusive { nearest_miss: nearest }
}

#[derive(Clone, Debug, Serialize)]
pub struct InheritanceReport {
    pub precondition_diophantine: bool,
    #[serde(with = "crate::rat::serde_str")]
    pub fraction: Rat,
    /// `fraction^D ≤ E₁^D·η` held.
    pub bound_holds: bool,
    /// The bound was vacuous (`E₁^D η ≥ 1`).
    pub vacuous: bool,
    /// `E₁^D·η - fraction^D`, the margin in the power domain.
    #[serde(with = "crate::rat::serde_str")]
    pub margin_pow: Rat,
}

/// Verifies the inheritance statement: a Diophantine start in `X_η` keeps
/// the exceptional fraction within `E₁ η^{1/D}` after expansion by `k`.
/// The Diophantine hypothesis is certified against the catalog at cutoff
/// `t'`; failure to certify is an error, not a silent pass.
#[allow(clippy::too_many_arguments)]
pub fn inheritance_check(
    ambient: &AmbientGroup,
    g: &QMat,
    u: &OneParameterUnipotent,
    cfg: &ScanConfig,
    profile_t: &DiophantineProfile,
    profile_t_prime: &DiophantineProfile,
    constants: &ConstantsProfile,
    catalog: &[SubgroupDescriptor],
    u_dir: &UnipotentDirection,
) -> Result<InheritanceReport, OrbitError> {
    let sig = SigmaElem::diagonal(g.clone(), &ambient.places);
    let pre = subgroups::diophantine_test(ambient, &sig, profile_t_prime, catalog, u_dir, None)?;
    if let DioVerdict::Violated { name, .. } = &pre {
        return Err(OrbitError::PreconditionUnverifiable(format!(
            "start point violates the Diophantine condition at {name}"
        )));
    }
    let report = orbit_scan(ambient, g, u, cfg, profile_t, catalog, u_dir)?;
    let d = constants.d;
    let bound_pow = constants.e1.pow(d as i32) * &cfg.eta;
    let frac_pow = report.exceptional_fraction.pow(d as i32);
    Ok(InheritanceReport {
        precondition_diophantine: pre.is_diophantine(),
        fraction: report.exceptional_fraction.clone(),
        bound_holds: frac_pow <= bound_pow,
        vacuous: bound_pow >= Rat::one(),
        margin_pow: &bound_pow - &frac_pow,
    })
}

/// Outcome of the obstruction pipeline.
#[derive(Clone, Debug)]
pub enum PipelineOutcome {
    /// Fraction outside `X_η` did not exceed `E η^{1/F}`.
    NotTriggered,
    /// η was not below the slope-rule threshold κ'(N).
    ThresholdTooLarge,
    /// Flag found but the slope-rule subspace failed a check.
    DetectionFailed { diagnostic: String },
    /// Full chain recovered and verified.
    Found(Box<ObstructionChain>),
}

#[derive(Clone, Debug)]
pub struct ObstructionChain {
    pub w: SubgroupDescriptor,
    pub m: SubgroupDescriptor,
    /// height(W)^F ≤ E^F·|g|^{F²}·η held.
    pub height_bound_ok: bool,
    /// (a): c(η_M(λ_k(u)g))^F ≤ E^F·|g|^{F²}·η at every sample.
    pub c_bound_ok: bool,
    /// (b): wedge^F·base^k ≤ E^F·|g|^{F²}·η at every sample.
    pub wedge_bound_ok: bool,
    pub max_wedge: Rat,
    pub max_c: Rat,
    /// First failing sample, when a bound fails.
    pub counterexample: Option<Rat>,
}

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub x_eta_fraction: Rat,
    pub triggered: bool,
    pub flag: Option<lattice::FlagProfile>,
    pub outcome: PipelineOutcome,
    pub k: u32,
}

/// The nondivergence-to-obstruction pipeline: when the non-`X_η` fraction
/// exceeds `E η^{1/F}`, build the adjoint-lattice flag, extract the
/// unipotent subalgebra by the slope rule, pass to `M = M_W`, and verify
/// the uniform and decaying bounds at every grid sample.
pub fn obstruction_pipeline(
    ambient: &AmbientGroup,
    g: &QMat,
    u: &OneParameterUnipotent,
    cfg: &ScanConfig,
    constants: &ConstantsProfile,
    u_dir: &UnipotentDirection,
) -> Result<PipelineReport, OrbitError> {
    let g_use = if cfg.reduce { lattice::reduce_representative(g).reduced } else { g.clone() };
    let g_norm = lattice::group_norm(&g_use);
    let scale = pow_i(&cfg.base, cfg.k as i64);
    let points = cfg.grid_points();
    // X_η fractions per sample
    let outside: Vec<bool> = points
        .par_iter()
        .map(|xi| {
            let h = u.at(&(xi * &scale)).mul(&g_use);
            let lat = ambient.adjoint_lattice(&h);
            !lattice::x_eta_test(&lat, &cfg.eta, cfg.window).in_x_eta
        })
        .collect();
    let frac = Rat::new(
        (outside.iter().filter(|b| **b).count() as i64).into(),
        (points.len() as i64).into(),
    );
    let f = constants.f;
    // trigger: fraction > E η^{1/F} ⟺ fraction^F > E^F η
    let triggered = frac.pow(f as i32) > constants.e.pow(f as i32) * &cfg.eta;
    if !triggered {
        return Ok(PipelineReport { x_eta_fraction: frac, triggered, flag: None, outcome: PipelineOutcome::NotTriggered, k: cfg.k });
    }
    if cfg.eta >= constants.rho_threshold {
        return Ok(PipelineReport {
            x_eta_fraction: frac,
            triggered,
            flag: None,
            outcome: PipelineOutcome::ThresholdTooLarge,
            k: cfg.k,
        });
    }
    // adjoint-lattice flag under the expanded action
    let lat = ambient.adjoint_lattice(&g_use);
    let actions: Vec<QMat> = points
        .par_iter()
        .map(|xi| ambient.ad_in_basis(&u.at(&(xi * &scale))))
        .collect();
    let stride = (points.len() / 8).max(1);
    let flag = lattice::flag_construct(&lat, &actions, stride, &[], cfg.window)
        .map_err(|_| OrbitError::PreconditionUnverifiable("degenerate adjoint lattice".into()))?;
    // source rank: smallest flag rank with η ≤ η_scan
    let Some(source_rank) = flag
        .ranks
        .iter()
        .zip(&flag.eta)
        .find(|(_, e)| *e <= &cfg.eta)
        .map(|(r, _)| *r as u32)
    else {
        return Ok(PipelineReport {
            x_eta_fraction: frac,
            triggered,
            flag: Some(flag),
            outcome: PipelineOutcome::DetectionFailed {
                diagnostic: "no flag submodule stays below the scan η".into(),
            },
            k: cfg.k,
        });
    };
    let det = lattice::detect_unipotent_obstruction(&flag, &cfg.eta, source_rank, &|coords| {
        ambient.from_coords(coords)
    });
    let found = match det {
        lattice::Obstruction::Found { basis_matrices, .. } => basis_matrices,
        lattice::Obstruction::NoFlag => {
            return Ok(PipelineReport {
                x_eta_fraction: frac,
                triggered,
                flag: Some(flag),
                outcome: PipelineOutcome::DetectionFailed { diagnostic: "slope rule empty".into() },
                k: cfg.k,
            })
        }
        lattice::Obstruction::NotClosed { rank } => {
            return Ok(PipelineReport {
                x_eta_fraction: frac,
                triggered,
                flag: Some(flag),
                outcome: PipelineOutcome::DetectionFailed {
                    diagnostic: format!("rank-{rank} subspace is not bracket-closed"),
                },
                k: cfg.k,
            })
        }
        lattice::Obstruction::NotNilpotent { rank, certificates } => {
            return Ok(PipelineReport {
                x_eta_fraction: frac,
                triggered,
                flag: Some(flag),
                outcome: PipelineOutcome::DetectionFailed {
                    diagnostic: format!(
                        "rank-{rank} subspace has non-nilpotent element (σ̄ = {})",
                        certificates.iter().map(crate::rat::format).collect::<Vec<_>>().join(", ")
                    ),
                },
                k: cfg.k,
            })
        }
    };
    let w_alg = MatrixLieAlgebra::generated(ambient.n, &found)?;
    let w = SubgroupDescriptor::new(ambient, "W", w_alg)?;
    let stab = subgroups::stabilizer_l_h(ambient, &w)?;
    let m = stab.m_h;
    // bounds: E^F·|g|^{F²}·η in the power domain
    let rhs = constants.e.pow(f as i32) * g_norm.pow((f * f) as i32) * &cfg.eta;
    let height_bound_ok = Rat::from_integer(w.height.clone()).pow(f as i32) <= rhs;
    let decay_pow = pow_i(&cfg.base, cfg.k as i64);
    let mut c_bound_ok = true;
    let mut wedge_bound_ok = true;
    let mut max_c = Rat::zero();
    let mut max_wedge = Rat::zero();
    let mut counterexample = None;
    for (xi, _) in points.iter().zip(&outside) {
        let hmat = u.at(&(xi * &scale)).mul(&g_use);
        let sig = SigmaElem::diagonal(hmat, &ambient.places);
        let wvec = subgroups::eta_h(ambient, &sig, &m);
        let c = wvec.c_fun();
        let wedge = u_dir.max_wedge_norm(&wvec);
        if c > max_c {
            max_c = c.clone();
        }
        if wedge > max_wedge {
            max_wedge = wedge.clone();
        }
        let c_ok = c.pow(f as i32) <= rhs;
        let w_ok = wedge.pow(f as i32) * &decay_pow <= rhs;
        if !(c_ok && w_ok) && counterexample.is_none() {
            counterexample = Some(xi.clone());
        }
        c_bound_ok &= c_ok;
        wedge_bound_ok &= w_ok;
    }
    Ok(PipelineReport {
        x_eta_fraction: frac,
        triggered,
        flag: Some(flag),
        outcome: PipelineOutcome::Found(Box::new(ObstructionChain {
            w,
            m,
            height_bound_ok,
            c_bound_ok,
            wedge_bound_ok,
            max_wedge,
            max_c,
            counterexample,
        })),
        k: cfg.k,
    })
}

#[derive(Clone, Debug)]
pub struct ParabolicLimitReport {
    /// Recurring obstruction group, when found.
    pub recurring: Option<String>,
    pub parabolic: Option<MatrixLieAlgebra>,
    /// `Ad(g)` preserves `Lie(R_u(P))` and the direction lies in `Lie(P)`.
    pub membership_ok: bool,
    pub insufficient_evidence: bool,
    pub per_k: Vec<(u32, bool, Rat)>,
}

/// Runs the obstruction pipeline along a `k`-sequence; when the same
/// obstruction group recurs with decaying wedge norms, builds the parabolic
/// from its nilpotent algebra and tests `Ug ⊆ P` exactly.
pub fn parabolic_limit_check(
    ambient: &AmbientGroup,
    g: &QMat,
    u: &OneParameterUnipotent,
    base_cfg: &ScanConfig,
    constants: &ConstantsProfile,
    u_dir: &UnipotentDirection,
    ks: &[u32],
) -> Result<ParabolicLimitReport, OrbitError> {
    let mut hits: Vec<(u32, SubgroupDescriptor, Rat)> = Vec::new();
    let mut per_k = Vec::new();
    for &k in ks {
        let mut cfg = base_cfg.clone();
        cfg.k = k;
        let rep = obstruction_pipeline(ambient, g, u, &cfg, constants, u_dir)?;
        match rep.outcome {
            PipelineOutcome::Found(chain) => {
                per_k.push((k, true, chain.max_wedge.clone()));
                hits.push((k, chain.w.clone(), chain.max_wedge.clone()));
            }
            _ => per_k.push((k, false, Rat::zero())),
        }
    }
    if ks.len() < 2 || hits.len() < 2 {
        return Ok(ParabolicLimitReport {
            recurring: None,
            parabolic: None,
            membership_ok: false,
            insufficient_evidence: true,
            per_k,
        });
    }
    // recurrence: same primitive vector at ≥ 2 values of k, wedge nonincreasing
    let key = hits[0].1.vector_key();
    let recurring = hits.iter().all(|(_, w, _)| w.vector_key() == key)
        && hits.windows(2).all(|w| w[1].2 <= w[0].2);
    if !recurring {
        return Ok(ParabolicLimitReport {
            recurring: None,
            parabolic: None,
            membership_ok: false,
            insufficient_evidence: false,
            per_k,
        });
    }
    let w = &hits[0].1;
    let p = lie::parabolic_from_nilpotent(&ambient.lie, w.lie.basis())?;
    // membership Ug ⊆ P: the direction algebra sits inside Lie(P) and
    // Ad(g) preserves the defining nilradical
    let (_, ru) = lie::radical_and_unipotent_radical(&p);
    let g_use = if base_cfg.reduce { lattice::reduce_representative(g).reduced } else { g.clone() };
    let g_inv = g_use.inverse().expect("group element");
    let mut membership_ok = u_dir.elements().iter().all(|(_, z, _)| p.contains(z));
    for b in ru.basis() {
        let img = g_use.mul(b).mul(&g_inv);
        membership_ok &= ru.contains(&img);
    }
    Ok(ParabolicLimitReport {
        recurring: Some(w.name.clone()),
        parabolic: Some(p),
        membership_ok,
        insufficient_evidence: false,
        per_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::PlaceSystem;
    use crate::lie::{sl2_e, sl2_f};
    use crate::rat::rat;
    use crate::subgroups::EpsShape;

    fn sl2() -> AmbientGroup {
        AmbientGroup::sl(2, PlaceSystem::archimedean())
    }

    fn upper_desc(amb: &AmbientGroup) -> SubgroupDescriptor {
        SubgroupDescriptor::new(amb, "upper", MatrixLieAlgebra::new(2, vec![sl2_e()]).unwrap()).unwrap()
    }

    fn basic_profile() -> DiophantineProfile {
        DiophantineProfile::with_cutoff(
            EpsShape::Parametric { a: 4, e1: int(10), eta: rat(1, 10) },
            int(1000),
        )
    }

    #[test]
    fn one_parameter_law() {
        let u = OneParameterUnipotent::new(sl2_e()).unwrap();
        assert!(u.verify_one_parameter());
        let a = u.at(&rat(1, 3));
        let b = u.at(&rat(2, 3));
        assert_eq!(a.mul(&b), u.at(&int(1)));
        assert!(OneParameterUnipotent::new(crate::lie::sl2_h()).is_err());
    }

    #[test]
    fn heisenberg_exp_log_round_trip() {
        let z = crate::lie::elementary(3, 0, 1).add(&crate::lie::elementary(3, 1, 2));
        let m = nilpotent_exp(&z);
        assert_eq!(unipotent_log(&m), z);
    }

    #[test]
    fn expanding_map_containment_abelian() {
        let amb = sl2();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_e()).unwrap();
        let lam = ExpandingMap::new(&amb, &dir, int(20), 1).unwrap();
        let grid: Vec<Rat> = vec![int(-1), rat(-1, 2), int(0), rat(1, 2), int(1)];
        for k in [1u32, 2, 3] {
            assert!(lam.verify_containment(&amb, k, &grid), "containment failed at k={k}");
        }
    }

    #[test]
    fn expanding_map_containment_heisenberg() {
        let amb = AmbientGroup::sl(3, PlaceSystem::archimedean());
        let dir = UnipotentDirection::new(
            &amb,
            vec![
                (crate::exact::Place::Infinity, crate::lie::elementary(3, 0, 1)),
                (crate::exact::Place::Infinity, crate::lie::elementary(3, 1, 2)),
            ],
        )
        .unwrap();
        let lam = ExpandingMap::new(&amb, &dir, int(20), 1).unwrap();
        assert_eq!(lam.grades.len(), 2);
        // 4³ = 64 ball samples per side gives > 10³ product pairs
        let grid: Vec<Rat> = vec![int(-1), rat(-1, 3), rat(1, 3), int(1)];
        assert!(lam.verify_containment(&amb, 2, &grid));
    }

    #[test]
    fn scan_singular_start_all_exceptional() {
        // g = identity, U its own stabilized direction: wedge ≡ 0 everywhere
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_e()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_e()).unwrap();
        let catalog = vec![upper_desc(&amb)];
        let cfg = ScanConfig { k: 2, grid: 51, eta: rat(1, 100), base: int(20), window: 0, reduce: true };
        let rep = orbit_scan(&amb, &QMat::identity(2), &u, &cfg, &basic_profile(), &catalog, &dir).unwrap();
        assert_eq!(rep.exceptional_fraction, int(1));
        // every sample violates via the invariant subgroup
        assert!(rep.rows.iter().all(|r| !r.diophantine));
    }

    #[test]
    fn scan_exactness_under_permutation() {
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_e()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_e()).unwrap();
        let catalog = vec![upper_desc(&amb)];
        let g = QMat::from_i64(&[&[3, 1], &[2, 1]]);
        let cfg = ScanConfig { k: 3, grid: 21, eta: rat(1, 50), base: int(20), window: 0, reduce: true };
        let rep1 = orbit_scan(&amb, &g, &u, &cfg, &basic_profile(), &catalog, &dir).unwrap();
        let rep2 = orbit_scan(&amb, &g, &u, &cfg, &basic_profile(), &catalog, &dir).unwrap();
        for (a, b) in rep1.rows.iter().zip(&rep2.rows) {
            assert_eq!(a.shortest_c, b.shortest_c);
            assert_eq!(a.per_catalog, b.per_catalog);
        }
        // per-sample values agree with standalone recomputation at the same ξ
        let g_red = lattice::reduce_representative(&g).reduced;
        let scale = pow_i(&cfg.base, cfg.k as i64);
        for row in rep1.rows.iter().step_by(7) {
            let h = u.at(&(&row.xi * &scale)).mul(&g_red);
            let lat = amb.adjoint_lattice(&h);
            let xv = lattice::x_eta_test(&lat, &cfg.eta, cfg.window);
            assert_eq!(xv.shortest.c, row.shortest_c);
        }
    }

    #[test]
    fn exceptional_fraction_monotone_in_k_on_average() {
        // orbit leaving a cusp excursion: the non-compact fraction shrinks
        // with the expansion step, averaged over grid refinements
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_e()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_e()).unwrap();
        let g = QMat::from_rows(vec![vec![int(8), Rat::zero()], vec![Rat::zero(), rat(1, 8)]]);
        let profile = basic_profile();
        let grids = [21usize, 31, 41, 51, 61];
        let mut means = Vec::new();
        let mut variances = Vec::new();
        for k in [0u32, 1, 2, 3] {
            let fractions: Vec<f64> = grids
                .iter()
                .map(|&grid| {
                    let cfg = ScanConfig { k, grid, eta: rat(1, 24), base: int(20), window: 0, reduce: false };
                    let rep = orbit_scan(&amb, &g, &u, &cfg, &profile, &[], &dir).unwrap();
                    crate::rat::to_f64(&rep.exceptional_fraction)
                })
                .collect();
            let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
            let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / fractions.len() as f64;
            means.push(mean);
            variances.push(var);
        }
        // nonincreasing within two standard deviations (horocycle returns at
        // quadratic times cause small fluctuations), with decisive overall decay
        for w in 0..means.len() - 1 {
            let tol = 2.0 * (variances[w] + variances[w + 1]).sqrt() + 0.02;
            assert!(
                means[w + 1] <= means[w] + tol,
                "step {w}: means {means:?}, variances {variances:?}"
            );
        }
        assert!(
            means.last().unwrap() < &(means[0] / 2.0),
            "expansion should shrink the exceptional set: {means:?}"
        );
    }

    #[test]
    fn trichotomy_singular_start_is_alt2() {
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_e()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_e()).unwrap();
        let catalog = vec![upper_desc(&amb)];
        let profile = basic_profile();
        let constants = ConstantsProfile { e1: int(2), ..Default::default() };
        let cfg = ScanConfig { k: 4, grid: 101, eta: rat(1, 10000), base: int(20), window: 0, reduce: true };
        let rep = orbit_scan(&amb, &QMat::identity(2), &u, &cfg, &profile, &catalog, &dir).unwrap();
        let v = trichotomy_classify(&rep, &constants, &profile, &catalog, &dir);
        match v {
            TrichotomyVerdict::Alt2 { name, max_wedge, .. } => {
                assert_eq!(name, "upper");
                assert_eq!(max_wedge, Rat::zero());
            }
            other => panic!("expected Alt2, got {other:?}"),
        }
    }

    #[test]
    fn trichotomy_inconclusive_without_normal_candidates() {
        // a near-invariant non-normal subgroup violates the scale condition
        // at every sample; with no normal catalog entries the classifier
        // must flag inconclusive rather than fall through
        let amb = AmbientGroup::block_diagonal(&[2, 2], crate::exact::PlaceSystem::archimedean());
        let mut z = QMat::zeros(4, 4);
        z[(0, 1)] = int(1);
        z[(2, 3)] = rat(1, 32);
        let u = OneParameterUnipotent::new(z.clone()).unwrap();
        let dir = UnipotentDirection::new(&amb, vec![(crate::exact::Place::Infinity, z)]).unwrap();
        let mut e1 = QMat::zeros(4, 4);
        e1[(0, 1)] = int(1);
        let factor_upper =
            SubgroupDescriptor::new(&amb, "u1", MatrixLieAlgebra::new(4, vec![e1]).unwrap()).unwrap();
        assert!(!factor_upper.normal_in_g);
        let catalog = vec![factor_upper];
        let constants = ConstantsProfile { a: 2, d: 2, e: rat(3, 2), e1: rat(3, 2), ..Default::default() };
        let eta = rat(1, 4);
        let profile = DiophantineProfile::with_cutoff(
            crate::subgroups::EpsShape::Parametric { a: 2, e1: rat(3, 2), eta: eta.clone() },
            rat(6, 5),
        );
        let cfg = ScanConfig { k: 6, grid: 51, eta, base: int(20), window: 0, reduce: false };
        let rep = orbit_scan(&amb, &QMat::identity(4), &u, &cfg, &profile, &catalog, &dir).unwrap();
        assert_eq!(rep.exceptional_fraction, int(1));
        let v = trichotomy_classify(&rep, &constants, &profile, &catalog, &dir);
        assert!(matches!(v, TrichotomyVerdict::Inconclusive { .. }), "got {v:?}");
    }

    #[test]
    fn weyl_scan_exceptional_only_from_x_eta() {
        // wedge norms stay at least 1 along the Weyl orbit, so the
        // exceptional set reduces to the compact-part misses
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_e()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_e()).unwrap();
        let catalog = vec![upper_desc(&amb)];
        let weyl = QMat::from_i64(&[&[0, -1], &[1, 0]]);
        let cfg = ScanConfig { k: 2, grid: 41, eta: rat(1, 1000), base: int(20), window: 0, reduce: true };
        let rep = orbit_scan(&amb, &weyl, &u, &cfg, &basic_profile(), &catalog, &dir).unwrap();
        assert_eq!(rep.exceptional_fraction, rep.x_eta_fraction);
        assert!(rep.rows.iter().all(|r| r.diophantine));
    }

    #[test]
    fn obstruction_pipeline_contracted_direction() {
        // g = diag(2^j, 2^-j) contracts f; scanning along the lower
        // unipotent direction keeps its line invariant
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_f()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_f()).unwrap();
        let constants = ConstantsProfile { e: int(2), f: 2, rho_threshold: rat(1, 8), ..Default::default() };
        let j = 3i64;
        let g = QMat::from_rows(vec![
            vec![pow_i(&int(2), j), Rat::zero()],
            vec![Rat::zero(), pow_i(&int(2), -j)],
        ]);
        let cfg = ScanConfig { k: 1, grid: 41, eta: rat(1, 32), base: int(20), window: 0, reduce: false };
        let rep = obstruction_pipeline(&amb, &g, &u, &cfg, &constants, &dir).unwrap();
        assert!(rep.triggered);
        match rep.outcome {
            PipelineOutcome::Found(chain) => {
                assert!(chain.w.lie.contains(&sl2_f()), "W should be the stabilized lower unipotent");
                assert_eq!(chain.m.dim, 1);
                assert!(chain.c_bound_ok && chain.wedge_bound_ok && chain.height_bound_ok);
                assert_eq!(chain.max_wedge, Rat::zero());
            }
            other => panic!("expected Found, got {other:?}"),
        }
    }

    #[test]
    fn pipeline_not_triggered_in_interior() {
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_e()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_e()).unwrap();
        let constants = ConstantsProfile::default();
        let cfg = ScanConfig { k: 2, grid: 21, eta: rat(1, 10000), base: int(20), window: 0, reduce: true };
        let rep = obstruction_pipeline(&amb, &QMat::identity(2), &u, &cfg, &constants, &dir).unwrap();
        assert!(!rep.triggered);
        assert!(matches!(rep.outcome, PipelineOutcome::NotTriggered));
    }

    #[test]
    fn parabolic_limit_for_upper_triangular_start() {
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_f()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_f()).unwrap();
        let constants = ConstantsProfile { e: int(2), f: 2, rho_threshold: rat(1, 8), ..Default::default() };
        let g = QMat::from_rows(vec![vec![int(8), Rat::zero()], vec![Rat::zero(), rat(1, 8)]]);
        let cfg = ScanConfig { k: 1, grid: 21, eta: rat(1, 32), base: int(20), window: 0, reduce: false };
        let rep = parabolic_limit_check(&amb, &g, &u, &cfg, &constants, &dir, &[1, 2]).unwrap();
        assert_eq!(rep.recurring.as_deref(), Some("W"));
        let p = rep.parabolic.unwrap();
        assert_eq!(p.dim(), 2); // the opposite Borel span{h, f}
        assert!(p.contains(&sl2_f()));
        assert!(rep.membership_ok);
        // single k: insufficient evidence
        let rep1 = parabolic_limit_check(&amb, &g, &u, &cfg, &constants, &dir, &[1]).unwrap();
        assert!(rep1.insufficient_evidence);
    }

    #[test]
    fn inheritance_weyl_start() {
        let amb = sl2();
        let u = OneParameterUnipotent::new(sl2_e()).unwrap();
        let dir = UnipotentDirection::one_parameter(&amb, sl2_e()).unwrap();
        let catalog = vec![upper_desc(&amb)];
        let constants = ConstantsProfile::default();
        let weyl = QMat::from_i64(&[&[0, -1], &[1, 0]]);
        let cfg = ScanConfig { k: 3, grid: 51, eta: rat(1, 20), base: int(20), window: 0, reduce: true };
        let profile = basic_profile();
        let rep =
            inheritance_check(&amb, &weyl, &u, &cfg, &profile, &profile, &constants, &catalog, &dir).unwrap();
        assert!(rep.precondition_diophantine);
        assert!(rep.bound_holds);
        // singular start: precondition fails, reported as an error
        let id = QMat::identity(2);
        assert!(matches!(
            inheritance_check(&amb, &id, &u, &cfg, &profile, &profile, &constants, &catalog, &dir),
            Err(OrbitError::PreconditionUnverifiable(_))
        ));
    }
}
