//! Effective algebraic certificates: Nullstellensatz bound evaluation and
//! certificate verification, local lower-bound calculators, and p-adic
//! Newton lifting with explicit precision loss.

pub mod mpoly;
pub mod padic;

pub use mpoly::{parse_poly, MPoly};
pub use padic::{PadicInt, PadicPoint};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertifyError {
    #[error("variable counts differ between certificate and system")]
    VarMismatch,
    #[error("point does not satisfy the congruence: f_{index}(w) has valuation {found} < required {required}")]
    CongruenceTooWeak { index: usize, found: u32, required: u32 },
    #[error("all Jacobian minors are too divisible (best valuation {best:?}); the smooth step does not apply")]
    SingularPoint { best: Option<u32> },
    #[error("Newton iteration did not reach the target precision")]
    PrecisionExhausted,
    #[error("lifted point fails system polynomial {index} at target precision; descent through singular components is out of scope")]
    ResidualNonzero { index: usize },
}

/// A system of integer polynomials with its declared complexity data.
#[derive(Clone, Debug)]
pub struct PolySystem {
    pub polys: Vec<MPoly>,
    pub vars: usize,
    /// Declared total-degree bound (≥ the true max degree).
    pub degree_bound: u32,
    /// Logarithmic height (ln of the max |coefficient|).
    pub log_height: f64,
}

impl PolySystem {
    pub fn new(polys: Vec<MPoly>) -> Self {
        assert!(!polys.is_empty());
        let vars = polys[0].vars;
        assert!(polys.iter().all(|p| p.vars == vars));
        let degree_bound = polys.iter().map(|p| p.total_degree()).max().unwrap_or(1).max(1);
        let log_height = polys.iter().map(|p| p.log_height()).fold(0.0, f64::max);
        PolySystem { polys, vars, degree_bound, log_height }
    }

    pub fn with_degree_bound(mut self, d0: u32) -> Self {
        assert!(d0 >= self.degree_bound, "declared bound below the true degree");
        self.degree_bound = d0;
        self
    }
}

/// The evaluated shape bounds: `b ≤ (8D₀)^{2M}`, cofactor degrees
/// `≤ (8D₀)^{2M+1}`, log-heights `≤ (8D₀)^{4M-1}(h + 8D₀·ln(8D₀))`, with
/// `M = 2^{m-1}` and every implicit constant set to 1 by convention.
#[derive(Clone, Debug, Serialize)]
pub struct NssBounds {
    pub m_vars: u32,
    pub big_m: u64,
    pub b_bound: BigInt,
    pub degree_bound: BigInt,
    pub height_bound: f64,
    pub a_log_bound: f64,
    /// Printed in every report: the `≪` constants are fixed to 1.
    pub convention: &'static str,
}

pub const NSS_CONVENTION: &str = "implicit multiplicative constants fixed to 1";

pub fn nss_bounds(m_vars: u32, d0: u32, log_height: f64) -> NssBounds {
    assert!(m_vars >= 1 && d0 >= 1);
    assert!(m_vars <= 24, "exponent 2^(m-1) too large to evaluate exactly");
    let big_m: u64 = 1 << (m_vars - 1);
    let base = BigInt::from(8u32 * d0);
    let b_bound = base.pow(2 * big_m as u32);
    let degree_bound = base.pow(2 * big_m as u32 + 1);
    let base_f = (8.0 * d0 as f64).ln();
    let log_factor = log_height + 8.0 * d0 as f64 * base_f;
    let height_exp = (4.0 * big_m as f64 - 1.0) * base_f;
    // (8D₀)^{4M-1}·(h + 8D₀ ln 8D₀), reported in log scale to stay finite
    let height_bound = height_exp.exp() * log_factor;
    NssBounds {
        m_vars,
        big_m,
        b_bound,
        degree_bound,
        height_bound,
        a_log_bound: height_bound,
        convention: NSS_CONVENTION,
    }
}

/// A claimed identity `a·f^b = Σ qᵢ fᵢ`.
#[derive(Clone, Debug)]
pub struct NssCertificate {
    pub f: MPoly,
    pub a: BigInt,
    pub b: u32,
    pub cofactors: Vec<MPoly>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub identity_valid: bool,
    pub b_within_bound: bool,
    pub degrees_within_bound: bool,
    pub heights_within_bound: bool,
    pub a_within_bound: bool,
    pub convention: &'static str,
}

/// Exact polynomial identity check plus bound compliance against
/// [`nss_bounds`]. An invalid identity is a `false`, not an error.
pub fn verify_certificate(cert: &NssCertificate, system: &PolySystem) -> Result<CertificateReport, CertifyError> {
    if cert.f.vars != system.vars || cert.cofactors.iter().any(|q| q.vars != system.vars) {
        return Err(CertifyError::VarMismatch);
    }
    if cert.cofactors.len() != system.polys.len() || cert.a.is_zero() || cert.b == 0 {
        return Ok(CertificateReport {
            identity_valid: false,
            b_within_bound: false,
            degrees_within_bound: false,
            heights_within_bound: false,
            a_within_bound: false,
            convention: NSS_CONVENTION,
        });
    }
    let lhs = cert.f.pow(cert.b).mul_scalar(&cert.a);
    let mut rhs = MPoly::zero(system.vars);
    for (q, f) in cert.cofactors.iter().zip(&system.polys) {
        rhs = rhs.add(&q.mul(f));
    }
    let identity_valid = lhs.sub(&rhs).is_zero();
    let bounds = nss_bounds(system.vars as u32, system.degree_bound, system.log_height);
    let b_within_bound = BigInt::from(cert.b) <= bounds.b_bound;
    let degrees_within_bound = cert
        .cofactors
        .iter()
        .all(|q| BigInt::from(q.total_degree()) <= bounds.degree_bound);
    let heights_within_bound = cert.cofactors.iter().all(|q| q.log_height() <= bounds.height_bound);
    let a_log = {
        let a = cert.a.abs();
        if a.is_one() {
            0.0
        } else {
            (a.bits() as f64) * std::f64::consts::LN_2
        }
    };
    let a_within_bound = a_log <= bounds.a_log_bound + 1.0;
    Ok(CertificateReport {
        identity_valid,
        b_within_bound,
        degrees_within_bound,
        heights_within_bound,
        a_within_bound,
        convention: NSS_CONVENTION,
    })
}

/// The local lower bound `C₁·e^{-k·h}·(‖w‖²/b)^{-k}` for systems with no
/// common zero within distance `b ≤ 1` of `w`. A calculator only: it feeds
/// intersection thresholds and reports.
pub fn brownawell_bound(c1: f64, k: u32, log_height: f64, norm_w: f64, b: f64) -> f64 {
    assert!(b > 0.0 && b <= 1.0);
    c1 * (-(k as f64) * log_height).exp() * (norm_w * norm_w / b).powi(-(k as i32))
}

/// Same, with `(C₁, k)` taken from a constants profile.
pub fn brownawell_from_profile(
    constants: &crate::subgroups::ConstantsProfile,
    log_height: f64,
    norm_w: f64,
    b: f64,
) -> f64 {
    brownawell_bound(crate::rat::to_f64(&constants.c1), constants.k_brownawell, log_height, norm_w, b)
}

/// Per-iteration valuation row of a Newton lift.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRow {
    pub step: usize,
    /// Valuation of the residual before the step (saturated at working precision).
    pub residual_valuation: u32,
    /// Valuation of the applied update.
    pub step_valuation: u32,
}

#[derive(Clone, Debug)]
pub struct HenselReport {
    pub point: PadicPoint,
    pub minor_valuation: u32,
    pub minor_size: usize,
    pub selected_rows: Vec<usize>,
    pub selected_cols: Vec<usize>,
    pub iterations: Vec<IterationRow>,
    /// `v_p(y - w)` (min over coordinates, saturated at the target).
    pub proximity_valuation: u32,
    /// `proximity ≥ C₂ - 2v` held.
    pub proximity_ok: bool,
    /// Residual valuation at least doubled (minus `2v`) each step.
    pub quadratic_ok: bool,
}

fn det_bigint(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    match n {
        0 => BigInt::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut acc = BigInt::zero();
            for j in 0..n {
                let minor: Vec<Vec<BigInt>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect()
                    })
                    .collect();
                let term = &m[0][j] * det_bigint(&minor);
                if j % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
    }
}

fn adjugate(m: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![BigInt::one()]];
    }
    let mut adj = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<BigInt>> = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != i)
                .map(|(_, row)| {
                    row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect()
                })
                .collect();
            let cof = det_bigint(&minor);
            adj[j][i] = if (i + j) % 2 == 0 { cof } else { -cof };
        }
    }
    adj
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
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

/// Multivariate Newton lifting on the best square Jacobian subsystem.
///
/// Requires `f_j(w) ≡ 0 mod p^{C₂}` for all `j` and some maximal-size minor
/// of the Jacobian at `w` with valuation `v < C₂/2`. Doubles the residual
/// valuation (minus the fixed `2v` loss) per step up to `target`, then
/// verifies the full system and the proximity congruence
/// `v_p(y-w) ≥ C₂ - 2v` exactly.
pub fn hensel_lift(system: &PolySystem, w: &PadicPoint, target: u32) -> Result<HenselReport, CertifyError> {
    let p = w.p;
    let m = system.vars;
    let n = system.polys.len();
    if w.coords.len() != m {
        return Err(CertifyError::VarMismatch);
    }
    let c2 = w.congruence_level;
    // working precision: target plus room for the division losses
    let work = target + 2 * c2 + 8;
    let modulus = padic::p_pow(p, work);
    let mut y: Vec<BigInt> = w.coords.iter().map(|c| c.mod_floor(&modulus)).collect();

    // precondition: congruence at w
    for (i, f) in system.polys.iter().enumerate() {
        let val = padic::val_capped(&f.eval_mod(&y, &modulus), p, work);
        if val < c2 {
            return Err(CertifyError::CongruenceTooWeak { index: i, found: val, required: c2 });
        }
    }

    // Jacobian at w and the best square minor: largest size whose valuation
    // stays below C₂/2
    let jac: Vec<Vec<MPoly>> = system
        .polys
        .iter()
        .map(|f| (0..m).map(|j| f.partial(j)).collect())
        .collect();
    let jac_at = |y: &[BigInt], rows: &[usize], cols: &[usize]| -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|&r| cols.iter().map(|&c| jac[r][c].eval_mod(y, &modulus)).collect())
            .collect()
    };
    let mut best: Option<(usize, Vec<usize>, Vec<usize>, u32)> = None;
    let mut best_val_any: Option<u32> = None;
    for s in (1..=n.min(m)).rev() {
        for rows in subsets(n, s) {
            for cols in subsets(m, s) {
                let d = det_bigint(&jac_at(&y, &rows, &cols));
                let v = padic::val_capped(&d, p, work);
                best_val_any = Some(best_val_any.map_or(v, |b: u32| b.min(v)));
                if 2 * v < c2 {
                    let better = match &best {
                        None => true,
                        Some((bs, _, _, bv)) => s > *bs || (s == *bs && v < *bv),
                    };
                    if better {
                        best = Some((s, rows.clone(), cols.clone(), v));
                    }
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    let Some((size, rows, cols, v0)) = best else {
        return Err(CertifyError::SingularPoint { best: best_val_any });
    };

    let residual_val = |y: &[BigInt]| -> u32 {
        rows.iter()
            .map(|&r| padic::val_capped(&system.polys[r].eval_mod(y, &modulus), p, work))
            .min()
            .unwrap_or(work)
    };

    let mut iterations = Vec::new();
    let mut quadratic_ok = true;
    let mut prev_val = residual_val(&y);
    for step in 0..64 {
        if prev_val >= target {
            break;
        }
        if step == 63 {
            return Err(CertifyError::PrecisionExhausted);
        }
        let j = jac_at(&y, &rows, &cols);
        let d = det_bigint(&j);
        let v = padic::val_capped(&d, p, work);
        // unit part of the determinant
        let p_v = padic::p_pow(p, v);
        let (unit, rem) = d.div_rem(&p_v);
        if !rem.is_zero() {
            return Err(CertifyError::PrecisionExhausted);
        }
        let unit_inv = padic::mod_inverse(&unit, &modulus).ok_or(CertifyError::PrecisionExhausted)?;
        let adj = adjugate(&j);
        let f_vec: Vec<BigInt> = rows.iter().map(|&r| system.polys[r].eval_mod(&y, &modulus)).collect();
        // δ = adj·f / det: divide by p^v exactly, then by the unit
        let mut step_val = work;
        for (ci, &c) in cols.iter().enumerate() {
            let mut num = BigInt::zero();
            for (k, fv) in f_vec.iter().enumerate() {
                num += &adj[ci][k] * fv;
            }
            let (q, r) = num.div_rem(&p_v);
            if !r.is_zero() {
                return Err(CertifyError::SingularPoint { best: Some(v) });
            }
            let delta = (q * &unit_inv).mod_floor(&modulus);
            step_val = step_val.min(padic::val_capped(&delta, p, work));
            y[c] = (&y[c] - delta).mod_floor(&modulus);
        }
        let next_val = residual_val(&y);
        iterations.push(IterationRow { step, residual_valuation: prev_val, step_valuation: step_val });
        let promised = (2 * prev_val).saturating_sub(2 * v0).min(target);
        if next_val < promised.min(work) && next_val < target {
            quadratic_ok = false;
        }
        if next_val <= prev_val {
            return Err(CertifyError::PrecisionExhausted);
        }
        prev_val = next_val;
    }

    // truncate to the target and verify the whole system there
    let target_mod = padic::p_pow(p, target);
    let y_t: Vec<BigInt> = y.iter().map(|c| c.mod_floor(&target_mod)).collect();
    for (i, f) in system.polys.iter().enumerate() {
        if !f.eval_mod(&y_t, &target_mod).is_zero() {
            return Err(CertifyError::ResidualNonzero { index: i });
        }
    }
    let proximity_valuation = y_t
        .iter()
        .zip(&w.coords)
        .map(|(a, b)| padic::val_capped(&((a - b).mod_floor(&target_mod)), p, target))
        .min()
        .unwrap_or(target);
    let proximity_ok = proximity_valuation >= c2.saturating_sub(2 * v0);
    let point = PadicPoint::new(p, target, y_t, target);
    Ok(HenselReport {
        point,
        minor_valuation: v0,
        minor_size: size,
        selected_rows: rows,
        selected_cols: cols,
        iterations,
        proximity_valuation,
        proximity_ok,
        quadratic_ok,
    })
}

/// Extended Euclid over Q[x] for coprime univariate integer polynomials:
/// returns `(a, q₁, q₂)` with `a = q₁f₁ + q₂f₂`, everything integral.
/// This is the only certificate *constructor* in the toolkit; it exists to
/// build test fixtures.
pub fn univariate_bezout(f1: &MPoly, f2: &MPoly) -> Option<(BigInt, MPoly, MPoly)> {
    use crate::rat::Rat;
    assert_eq!(f1.vars, 1);
    assert_eq!(f2.vars, 1);
    type UPoly = Vec<Rat>;
    let to_u = |p: &MPoly| -> UPoly {
        let mut v = vec![Rat::zero(); p.total_degree() as usize + 1];
        for (e, c) in p.terms() {
            v[e[0] as usize] = Rat::from_integer(c.clone());
        }
        v
    };
    let trim = |mut v: UPoly| -> UPoly {
        while v.len() > 1 && v.last().map(|c| c.is_zero()).unwrap_or(false) {
            v.pop();
        }
        v
    };
    let is_zero = |v: &UPoly| v.iter().all(|c| c.is_zero());
    let deg = |v: &UPoly| v.len() - 1;
    let divmod = |num: &UPoly, den: &UPoly| -> (UPoly, UPoly) {
        let mut r = num.clone();
        let mut q = vec![Rat::zero(); num.len().saturating_sub(den.len()) + 1];
        while !is_zero(&r) && deg(&r) >= deg(den) {
            let shift = deg(&r) - deg(den);
            let coef = r.last().unwrap() / den.last().unwrap();
            q[shift] = coef.clone();
            for (i, d) in den.iter().enumerate() {
                let t = &coef * d;
                r[i + shift] -= t;
            }
            r = trim(r);
            if deg(&r) == 0 && r[0].is_zero() {
                break;
            }
        }
        (trim(q), trim(r))
    };
    let add_u = |a: &UPoly, b: &UPoly| -> UPoly {
        let mut out = vec![Rat::zero(); a.len().max(b.len())];
        for (i, c) in a.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in b.iter().enumerate() {
            out[i] += c;
        }
        trim(out)
    };
    let mul_u = |a: &UPoly, b: &UPoly| -> UPoly {
        let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let t = x * y;
                out[i + j] += t;
            }
        }
        trim(out)
    };
    let neg_u = |a: &UPoly| -> UPoly { a.iter().map(|c| -c.clone()).collect() };

    let (mut r0, mut r1) = (trim(to_u(f1)), trim(to_u(f2)));
    let (mut s0, mut s1) = (vec![Rat::one()], vec![Rat::zero()]);
    let (mut t0, mut t1) = (vec![Rat::zero()], vec![Rat::one()]);
    while !is_zero(&r1) {
        let (q, r2) = divmod(&r0, &r1);
        let s2 = add_u(&s0, &neg_u(&mul_u(&q, &s1)));
        let t2 = add_u(&t0, &neg_u(&mul_u(&q, &t1)));
        r0 = r1;
        r1 = r2;
        s0 = s1;
        s1 = s2;
        t0 = t1;
        t1 = t2;
    }
    if deg(&r0) != 0 || r0[0].is_zero() {
        return None; // not coprime
    }
    // a/r = s0 f1 + t0 f2 with a integral: clear denominators of s0/r0, t0/r0
    let gcd_inv = r0[0].clone();
    let s: Vec<Rat> = s0.iter().map(|c| c / &gcd_inv).collect();
    let t: Vec<Rat> = t0.iter().map(|c| c / &gcd_inv).collect();
    let mut lcm = BigInt::one();
    for c in s.iter().chain(&t) {
        lcm = lcm.lcm(c.denom());
    }
    let a = lcm.clone();
    let to_m = |v: &[Rat]| -> MPoly {
        MPoly::from_terms(
            1,
            v.iter()
                .enumerate()
                .map(|(i, c)| (vec![i as u32], c.numer() * (&lcm / c.denom())))
                .collect(),
        )
    };
    Some((a, to_m(&s), to_m(&t)))
}
