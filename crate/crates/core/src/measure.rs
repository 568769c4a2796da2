//! Sublevel-measure estimation for polynomial maps on products of real
//! intervals, under Lebesgue and friendly measures, with certified rational
//! brackets. Verdicts are exact interval arithmetic; floats appear only in
//! the regression fits.

use crate::rat::{abs, int, rat, to_f64, Rat};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("fitted exponent {fitted} fell below required {required}")]
    ExponentViolation { fitted: f64, required: f64 },
    #[error("bad measure configuration: {0}")]
    BadConfig(String),
}

/// Dense univariate polynomial over Q.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poly {
    #[serde(with = "crate::rat::serde_str_vec")]
    pub coeffs: Vec<Rat>,
}

impl Poly {
    pub fn new(coeffs: Vec<Rat>) -> Self {
        let mut p = Poly { coeffs };
        while p.coeffs.len() > 1 && p.coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            p.coeffs.pop();
        }
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| int(c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    /// Interval enclosure on `[lo, hi]` by Horner in exact interval
    /// arithmetic (no rounding, so the enclosure is tight per operation).
    pub fn enclose(&self, lo: &Rat, hi: &Rat) -> (Rat, Rat) {
        let mut acc = (Rat::zero(), Rat::zero());
        for c in self.coeffs.iter().rev() {
            acc = interval_mul(&acc, &(lo.clone(), hi.clone()));
            acc = (acc.0 + c, acc.1 + c);
        }
        acc
    }
}

fn interval_mul(a: &(Rat, Rat), b: &(Rat, Rat)) -> (Rat, Rat) {
    let cands = [&a.0 * &b.0, &a.0 * &b.1, &a.1 * &b.0, &a.1 * &b.1];
    let lo = cands.iter().min().unwrap().clone();
    let hi = cands.iter().max().unwrap().clone();
    (lo, hi)
}

fn interval_abs(a: &(Rat, Rat)) -> (Rat, Rat) {
    if a.0 >= Rat::zero() {
        a.clone()
    } else if a.1 <= Rat::zero() {
        (-a.1.clone(), -a.0.clone())
    } else {
        (Rat::zero(), abs(&a.0).max(abs(&a.1)))
    }
}

/// One factor of the product domain: `f(t) = max_j |f_j(t)|` on `[lo, hi]`,
/// weighted by its own measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub polys: Vec<Poly>,
    #[serde(with = "crate::rat::serde_str")]
    pub lo: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub hi: Rat,
    pub measure: FriendlyMeasure,
}

impl Factor {
    fn enclose_f(&self, lo: &Rat, hi: &Rat) -> (Rat, Rat) {
        let mut best = (Rat::zero(), Rat::zero());
        for (j, p) in self.polys.iter().enumerate() {
            let e = interval_abs(&p.enclose(lo, hi));
            if j == 0 {
                best = e;
            } else {
                best = (best.0.max(e.0), best.1.max(e.1));
            }
        }
        best
    }

    fn eval_f(&self, t: &Rat) -> Rat {
        self.polys.iter().map(|p| abs(&p.eval(t))).max().unwrap_or_else(Rat::zero)
    }
}

/// Polynomial map `F = ∏_factors max_j |f_j|` on a product of intervals,
/// with a declared total degree bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolynomialMap {
    pub factors: Vec<Factor>,
    pub degree: u32,
}

impl PolynomialMap {
    pub fn univariate(poly: Poly, lo: Rat, hi: Rat, measure: FriendlyMeasure) -> Self {
        let degree = poly.degree() as u32;
        PolynomialMap {
            factors: vec![Factor { label: "t".into(), polys: vec![poly], lo, hi, measure }],
            degree: degree.max(1),
        }
    }
}

/// The friendly-measure kinds the sublevel machinery accepts (all on R).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FriendlyMeasure {
    Lebesgue,
    /// Middle-thirds Cantor measure on [0,1], branch weights 1/2.
    Cantor,
    /// Point masses with a declared support interval.
    Table {
        atoms: Vec<(String, String)>,
        support: (String, String),
    },
}

impl FriendlyMeasure {
    /// Exact mass bracket of the closed interval `[a, b]`.
    pub fn mass_bracket(&self, a: &Rat, b: &Rat) -> (Rat, Rat) {
        if b <= a {
            return (Rat::zero(), Rat::zero());
        }
        match self {
            FriendlyMeasure::Lebesgue => {
                let len = b - a;
                (len.clone(), len)
            }
            FriendlyMeasure::Cantor => {
                // depth: enough ternary levels to resolve the interval, plus
                // 40 extra so per-call bracket slack stays below 2^-40
                let len = b - a;
                let mut depth = 1u32;
                let mut scale = rat(1, 3);
                while scale > len && depth < 160 {
                    scale /= int(3);
                    depth += 1;
                }
                cantor_mass(a, b, (depth + 40).min(200))
            }
            FriendlyMeasure::Table { atoms, .. } => {
                let mut m = Rat::zero();
                for (x, w) in atoms {
                    let x = crate::rat::parse(x).expect("atom position");
                    let w = crate::rat::parse(w).expect("atom weight");
                    if &x >= a && &x <= b {
                        m += w;
                    }
                }
                (m.clone(), m)
            }
        }
    }

    /// Total mass of the natural domain.
    pub fn total_mass(&self, lo: &Rat, hi: &Rat) -> Rat {
        match self {
            FriendlyMeasure::Lebesgue => hi - lo,
            _ => self.mass_bracket(lo, hi).1,
        }
    }

    pub fn support(&self, domain_lo: &Rat, domain_hi: &Rat) -> (Rat, Rat) {
        match self {
            FriendlyMeasure::Lebesgue => (domain_lo.clone(), domain_hi.clone()),
            FriendlyMeasure::Cantor => (Rat::zero(), Rat::one()),
            FriendlyMeasure::Table { support, .. } => {
                (crate::rat::parse(&support.0).unwrap(), crate::rat::parse(&support.1).unwrap())
            }
        }
    }
}

/// Exact recursive mass bracket of `[a,b]` under the middle-thirds measure.
fn cantor_mass(a: &Rat, b: &Rat, depth: u32) -> (Rat, Rat) {
    let zero = Rat::zero();
    let one = Rat::one();
    let a = a.clone().max(zero.clone());
    let b = b.clone().min(one.clone());
    if b <= a {
        return (zero.clone(), zero);
    }
    if a <= zero && b >= one {
        return (one.clone(), one);
    }
    if depth == 0 {
        return (zero, one);
    }
    let third = rat(1, 3);
    let two_thirds = rat(2, 3);
    let mut lo = Rat::zero();
    let mut hi = Rat::zero();
    // left branch: x ↦ 3x
    if a < third {
        let (l, h) = cantor_mass(&(&a * int(3)), &(&b.clone().min(third.clone()) * int(3)), depth - 1);
        lo += &l / int(2);
        hi += &h / int(2);
    }
    // right branch: x ↦ 3(x - 2/3)
    if b > two_thirds {
        let a2 = (a.clone().max(two_thirds.clone()) - &two_thirds) * int(3);
        let b2 = (b.clone() - &two_thirds) * int(3);
        let (l, h) = cantor_mass(&a2, &b2, depth - 1);
        lo += &l / int(2);
        hi += &h / int(2);
    }
    (lo, hi)
}

/// Report of a sublevel measure computation.
#[derive(Clone, Debug, Serialize)]
pub struct SublevelReport {
    #[serde(with = "crate::rat::serde_str")]
    pub lower: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub upper: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub sup_lower: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub sup_upper: Rat,
    /// Total mass of the domain box.
    #[serde(with = "crate::rat::serde_str")]
    pub box_mass: Rat,
    /// False when the bracket target was not reached before the work cap.
    pub resolved: bool,
}

/// Certified sup bracket of one factor by grid evaluation (lower) and
/// branch-and-bound refinement of the interval enclosure (upper).
fn factor_sup(f: &Factor, grid_size: usize, rel_tol: &Rat) -> (Rat, Rat) {
    let span = &f.hi - &f.lo;
    let mut sup_lo = Rat::zero();
    let m = grid_size.max(2);
    for j in 0..=m {
        // rationalized Chebyshev-like points
        let theta = (j as f64) * std::f64::consts::PI / (m as f64);
        let c = crate::rat::from_f64(theta.cos()).unwrap();
        let t = (&f.lo + &f.hi + &span * c) / int(2);
        let t = t.clone().max(f.lo.clone()).min(f.hi.clone());
        let v = f.eval_f(&t);
        if v > sup_lo {
            sup_lo = v;
        }
    }
    // branch and bound for the upper side
    let mut stack = vec![(f.lo.clone(), f.hi.clone())];
    let mut sup_hi = Rat::zero();
    let mut work = 0usize;
    let mut unresolved: Vec<(Rat, Rat)> = Vec::new();
    while let Some((a, b)) = stack.pop() {
        work += 1;
        let (_, h) = f.enclose_f(&a, &b);
        if h <= sup_lo {
            continue;
        }
        let gap_ok = (&h - &sup_lo) <= &sup_lo * rel_tol;
        if gap_ok || work > 4000 {
            if h > sup_hi {
                sup_hi = h;
            }
            if work > 4000 {
                unresolved.push((a, b));
            }
            continue;
        }
        let mid = (&a + &b) / int(2);
        // exact sample at the midpoint may raise the lower bound
        let v = f.eval_f(&mid);
        if v > sup_lo {
            sup_lo = v;
        }
        stack.push((a, mid.clone()));
        stack.push((mid, b));
    }
    if sup_hi < sup_lo {
        sup_hi = sup_lo.clone();
    }
    (sup_lo, sup_hi)
}

/// Measure of `{z ∈ B : F(z) < δ·sup_B F}` by adaptive dyadic subdivision
/// with exact interval enclosures, returning a certified bracket.
pub fn sublevel_measure(map: &PolynomialMap, delta: &Rat, resolution: &Rat) -> SublevelReport {
    assert!(delta > &Rat::zero() && delta < &Rat::one(), "δ must be in (0,1)");
    let sup_tol = rat(1, 1024);
    let sups: Vec<(Rat, Rat)> = map
        .factors
        .iter()
        .map(|f| factor_sup(f, 4 * map.degree.max(1) as usize, &sup_tol))
        .collect();
    let sup_lower: Rat = sups.iter().map(|s| s.0.clone()).product();
    let sup_upper: Rat = sups.iter().map(|s| s.1.clone()).product();
    let thresh_lo = delta * &sup_lower;
    let thresh_hi = delta * &sup_upper;

    let box_mass: Rat = map.factors.iter().map(|f| f.measure.total_mass(&f.lo, &f.hi)).product();

    // cells are products of per-factor intervals; mass brackets cached
    #[derive(Clone)]
    struct Cell {
        ivs: Vec<(Rat, Rat)>,
        mass: (Rat, Rat),
        depth: u32,
    }
    // depth cap: beyond this, an undecided cell's mass goes to the pending
    // slack (it is tiny by then); keeps denominators bounded
    let mut max_depth = 16u32;
    {
        let mut r = resolution.clone();
        while r < Rat::one() && max_depth < 120 {
            r *= int(2);
            max_depth += 2;
        }
    }
    let cell_mass = |ivs: &[(Rat, Rat)]| -> (Rat, Rat) {
        ivs.iter().zip(&map.factors).fold((Rat::one(), Rat::one()), |acc, ((a, b), f)| {
            let m = f.measure.mass_bracket(a, b);
            (acc.0 * m.0, acc.1 * m.1)
        })
    };
    let root_ivs: Vec<(Rat, Rat)> = map.factors.iter().map(|f| (f.lo.clone(), f.hi.clone())).collect();
    let root_mass = cell_mass(&root_ivs);
    // running sum of the mass uppers still in the queue
    let mut queue_upper = root_mass.1.clone();
    let mut queue = std::collections::VecDeque::from([Cell { ivs: root_ivs, mass: root_mass, depth: 0 }]);
    let mut lower = Rat::zero();
    let mut pending_mass = Rat::zero();
    let mut work = 0usize;
    let cap = 200_000usize;
    while let Some(cell) = queue.pop_front() {
        work += 1;
        queue_upper -= &cell.mass.1;
        if cell.mass.1.is_zero() {
            continue;
        }
        let encl = cell
            .ivs
            .iter()
            .zip(&map.factors)
            .fold((Rat::one(), Rat::one()), |acc, ((a, b), f)| {
                let e = f.enclose_f(a, b);
                (acc.0 * e.0, acc.1 * e.1)
            });
        if encl.1 < thresh_lo {
            lower += &cell.mass.0;
            pending_mass += &cell.mass.1 - &cell.mass.0; // measure bracket slack only
            continue;
        }
        if encl.0 >= thresh_hi {
            continue;
        }
        // undecided: stop early once the residual width is inside the
        // target; park cells that hit the depth or work cap
        if &pending_mass + &cell.mass.1 + &queue_upper <= *resolution {
            pending_mass += &cell.mass.1 + &queue_upper;
            break;
        }
        if work >= cap || cell.depth >= max_depth {
            pending_mass += &cell.mass.1;
            continue;
        }
        let widest = cell
            .ivs
            .iter()
            .enumerate()
            .max_by(|(_, (a1, b1)), (_, (a2, b2))| (b1 - a1).cmp(&(b2 - a2)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (a, b) = cell.ivs[widest].clone();
        let mid = (&a + &b) / int(2);
        let mut left_ivs = cell.ivs.clone();
        left_ivs[widest] = (a, mid.clone());
        let mut right_ivs = cell.ivs;
        right_ivs[widest] = (mid, b);
        for ivs in [left_ivs, right_ivs] {
            let mass = cell_mass(&ivs);
            queue_upper += &mass.1;
            queue.push_back(Cell { ivs, mass, depth: cell.depth + 1 });
        }
    }
    let upper = &lower + &pending_mass;
    let resolved = (&upper - &lower) <= *resolution;
    SublevelReport { lower, upper, sup_lower, sup_upper, box_mass, resolved }
}

/// One row of a Remez verification: δ, the measure bracket, the sup
/// bracket, and the measured ratio bracket.
#[derive(Clone, Debug, Serialize)]
pub struct RemezPoint {
    #[serde(with = "crate::rat::serde_str")]
    pub delta: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub measure_lower: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub measure_upper: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub sup_lower: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub sup_upper: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub ratio_lower: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub ratio_upper: Rat,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemezReport {
    pub points: Vec<RemezPoint>,
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    /// Number of product factors (the log-correction power is this minus 1).
    pub num_factors: usize,
}

/// Measures sublevel ratios on a δ grid and fits
/// `log ratio = log c + α log δ + (#factors-1)·log|log δ|`, asserting
/// `α ≥ 1/d - tolerance`.
pub fn remez_verify(
    map: &PolynomialMap,
    declared_degree: u32,
    deltas: &[Rat],
    resolution: &Rat,
    tolerance: f64,
) -> Result<RemezReport, MeasureError> {
    if declared_degree == 0 {
        return Err(MeasureError::BadConfig("degree must be ≥ 1".into()));
    }
    let mut points = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let correction = (map.factors.len().saturating_sub(1)) as f64;
    for delta in deltas {
        let rep = sublevel_measure(map, delta, resolution);
        let ratio_lower = &rep.lower / &rep.box_mass;
        let ratio_upper = &rep.upper / &rep.box_mass;
        let mid = (to_f64(&ratio_lower) + to_f64(&ratio_upper)) / 2.0;
        if mid > 0.0 {
            let ln_delta = to_f64(delta).ln();
            xs.push(ln_delta);
            ys.push(mid.ln() - correction * ln_delta.abs().ln().max(0.0));
        }
        points.push(RemezPoint {
            delta: delta.clone(),
            measure_lower: rep.lower.clone(),
            measure_upper: rep.upper.clone(),
            sup_lower: rep.sup_lower.clone(),
            sup_upper: rep.sup_upper.clone(),
            ratio_lower,
            ratio_upper,
        });
    }
    if xs.len() < 2 {
        return Err(MeasureError::BadConfig("need at least two usable δ samples".into()));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let required = 1.0 / declared_degree as f64 - tolerance;
    if slope < required {
        return Err(MeasureError::ExponentViolation { fitted: slope, required });
    }
    Ok(RemezReport {
        points,
        fitted_exponent: slope,
        fitted_constant: intercept.exp(),
        num_factors: map.factors.len(),
    })
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

#[derive(Clone, Debug, Serialize)]
pub struct FedererSample {
    #[serde(with = "crate::rat::serde_str")]
    pub center: Rat,
    #[serde(with = "crate::rat::serde_str")]
    pub radius: Rat,
    /// Upper bracket of μ(B(y,3r))/μ(B(y,r)); None when the denominator
    /// bracket is zero while the numerator is not (unbounded).
    pub ratio: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FedererReport {
    pub samples: Vec<FedererSample>,
    /// Max observed finite ratio.
    pub measured_a: Option<f64>,
    pub unbounded: bool,
}

/// Measures the doubling ratio `μ(B(y,3r))/μ(B(y,r))` over the samples.
pub fn federer_check(measure: &FriendlyMeasure, centers: &[Rat], radii: &[Rat]) -> FedererReport {
    let mut samples = Vec::new();
    let mut measured: Option<Rat> = None;
    let mut unbounded = false;
    for y in centers {
        for r in radii {
            let small = measure.mass_bracket(&(y - r), &(y + r));
            let big = measure.mass_bracket(&(y - r * int(3)), &(y + r * int(3)));
            if small.0.is_zero() {
                if !big.1.is_zero() {
                    unbounded = true;
                    samples.push(FedererSample { center: y.clone(), radius: r.clone(), ratio: None });
                }
                continue;
            }
            let ratio = &big.1 / &small.0;
            measured = Some(match measured {
                None => ratio.clone(),
                Some(m) => m.max(ratio.clone()),
            });
            samples.push(FedererSample {
                center: y.clone(),
                radius: r.clone(),
                ratio: Some(crate::rat::format(&ratio)),
            });
        }
    }
    FedererReport { samples, measured_a: measured.as_ref().map(to_f64), unbounded }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayingReport {
    /// (δ/r, worst ratio) samples used in the fit.
    pub samples: Vec<(f64, f64)>,
    pub c: f64,
    pub alpha: f64,
}

/// Fits `(c, α)` in `μ(J ∩ I_δ(a)) ≤ c (δ/r)^α μ(J)` over the sample grid.
pub fn decaying_check(
    measure: &FriendlyMeasure,
    intervals: &[(Rat, Rat)], // (center, half-length r)
    points: &[Rat],
    deltas: &[Rat],
) -> DecayingReport {
    let mut best: std::collections::BTreeMap<String, (f64, f64)> = Default::default();
    for (center, r) in intervals {
        let j_mass = measure.mass_bracket(&(center - r), &(center + r));
        if j_mass.0.is_zero() {
            continue;
        }
        for delta in deltas {
            if delta > r {
                continue;
            }
            let x = to_f64(&(delta / r));
            let mut worst = 0.0f64;
            for a in points {
                let cap = measure.mass_bracket(&(a - delta).max(center - r), &(a + delta).min(center + r));
                let ratio = to_f64(&(&cap.1 / &j_mass.0));
                if ratio > worst {
                    worst = ratio;
                }
            }
            if worst > 0.0 {
                let key = format!("{x:.12e}");
                let e = best.entry(key).or_insert((x, worst));
                if worst > e.1 {
                    e.1 = worst;
                }
            }
        }
    }
    let samples: Vec<(f64, f64)> = best.into_values().collect();
    let xs: Vec<f64> = samples.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, y)| y.ln()).collect();
    let (alpha, intercept) = if xs.len() >= 2 { least_squares(&xs, &ys) } else { (f64::NAN, 0.0) };
    DecayingReport { samples, c: intercept.exp(), alpha }
}

/// `log 2 / log 3`: the decay exponent of the middle-thirds measure.
pub fn cantor_alpha() -> f64 {
    2f64.ln() / 3f64.ln()
}
