//! Exact arithmetic over a fixed finite set of places: per-place max norms,
//! the product-of-norms size function, unit rescaling, exterior algebra, and
//! primitive integral vectors of rational subspaces.

pub mod hnf;
pub mod wedge;

pub use wedge::{primitive_integral_vector, wedge, ExteriorVector};

use crate::rat::{abs, abs_p, int, pow_i, Rat};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("zero vector has no unit rescaling")]
    ZeroVector,
    #[error("generators are linearly dependent")]
    DependentBasis,
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// A place of Q: the archimedean one or a finite prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Infinity,
    Finite(u64),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Infinity => write!(f, "inf"),
            Place::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl Serialize for Place {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Place {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "inf" || s == "∞" {
            Ok(Place::Infinity)
        } else {
            s.parse::<u64>().map(Place::Finite).map_err(serde::de::Error::custom)
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The fixed finite place set Σ: always contains ∞, plus distinct primes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceSystem {
    places: Vec<Place>,
}

impl PlaceSystem {
    pub fn new(finite_primes: &[u64]) -> Result<Self, ExactError> {
        let mut places = vec![Place::Infinity];
        let mut seen = std::collections::BTreeSet::new();
        for &p in finite_primes {
            if !is_prime(p) {
                return Err(ExactError::NotPrime(p));
            }
            if seen.insert(p) {
                places.push(Place::Finite(p));
            }
        }
        places.sort();
        Ok(PlaceSystem { places })
    }

    /// Σ = {∞}.
    pub fn archimedean() -> Self {
        PlaceSystem { places: vec![Place::Infinity] }
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn finite(&self) -> impl Iterator<Item = u64> + '_ {
        self.places.iter().filter_map(|p| match p {
            Place::Finite(q) => Some(*q),
            Place::Infinity => None,
        })
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        false // always contains ∞
    }

    pub fn contains(&self, p: Place) -> bool {
        self.places.contains(&p)
    }
}

/// |x| at a place, exactly.
pub fn scalar_norm_at(x: &Rat, place: Place) -> Rat {
    match place {
        Place::Infinity => abs(x),
        Place::Finite(p) => abs_p(x, p),
    }
}

/// Max norm of a coordinate slice at a place.
pub fn norm_at(coords: &[Rat], place: Place) -> Rat {
    coords.iter().map(|x| scalar_norm_at(x, place)).max().unwrap_or_else(Rat::zero)
}

/// Product over Σ of the per-place max norms; zero iff the vector is zero.
pub fn c_fun(coords: &[Rat], places: &PlaceSystem) -> Rat {
    let mut prod = Rat::one();
    for &v in places.places() {
        let n = norm_at(coords, v);
        if n.is_zero() {
            return Rat::zero();
        }
        prod *= n;
    }
    prod
}

/// A vector with exact rational coordinates in a fixed ambient dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactVector {
    #[serde(with = "crate::rat::serde_str_vec")]
    pub coords: Vec<Rat>,
}

impl ExactVector {
    pub fn new(coords: Vec<Rat>) -> Self {
        ExactVector { coords }
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        ExactVector { coords: coords.iter().map(|&x| int(x)).collect() }
    }

    pub fn zeros(n: usize) -> Self {
        ExactVector { coords: vec![Rat::zero(); n] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|x| x.is_zero())
    }

    pub fn norm_at(&self, place: Place) -> Rat {
        norm_at(&self.coords, place)
    }

    pub fn c_fun(&self, places: &PlaceSystem) -> Rat {
        c_fun(&self.coords, places)
    }

    pub fn scale(&self, c: &Rat) -> ExactVector {
        ExactVector { coords: self.coords.iter().map(|x| x * c).collect() }
    }

    pub fn add(&self, other: &ExactVector) -> ExactVector {
        assert_eq!(self.dim(), other.dim());
        ExactVector { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &ExactVector) -> ExactVector {
        assert_eq!(self.dim(), other.dim());
        ExactVector { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect() }
    }
}

/// An element of the Σ-unit group: ± ∏ p^{e_p} over the finite places.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitElement {
    pub exponents: BTreeMap<u64, i64>,
    pub negative: bool,
}

impl UnitElement {
    pub fn one() -> Self {
        UnitElement { exponents: BTreeMap::new(), negative: false }
    }

    pub fn value(&self) -> Rat {
        let mut v = Rat::one();
        for (&p, &e) in &self.exponents {
            v *= pow_i(&int(p as i64), e);
        }
        if self.negative {
            -v
        } else {
            v
        }
    }
}

/// Result of balancing the per-place norms of a vector by a Σ-unit.
#[derive(Clone, Debug)]
pub struct UnitRescaling {
    pub unit: UnitElement,
    pub rescaled: Vec<Rat>,
    /// max/min ratio of the per-place norms after rescaling (1 = perfectly balanced).
    pub spread: Rat,
    /// `‖r₀v‖_Σ^{#Σ} / c(v)`: the achieved constant of the balancing
    /// inequality, raised to the `#Σ` power so it stays rational.
    pub balance_power: Rat,
}

/// Finds a Σ-unit `r₀` so that the per-place norms of `r₀ v` agree up to a
/// bounded factor (at most `p` at each finite place) and
/// `‖r₀v‖_Σ^{#Σ} ≤ balance_power · c(v)`.
///
/// For each finite `p` the exponent is chosen so the rescaled p-norm lands in
/// `(t/p, t]` where `t = c(v)^{1/#Σ}`; the archimedean norm then absorbs the
/// remaining factor. All comparisons run on integer powers, never on roots.
pub fn minimize_over_units(v: &[Rat], places: &PlaceSystem) -> Result<UnitRescaling, ExactError> {
    let c = c_fun(v, places);
    if c.is_zero() {
        return Err(ExactError::ZeroVector);
    }
    let ell = places.len() as u32;
    let mut exponents = BTreeMap::new();
    for p in places.finite() {
        // k = max { k : p^{k·ℓ} ≤ c }, i.e. k = floor(log_p c^{1/ℓ}).
        let base = int(p as i64);
        let mut k: i64 = 0;
        if pow_i(&base, ell as i64) <= c {
            while pow_i(&base, (k + 1) * ell as i64) <= c {
                k += 1;
            }
        } else {
            while pow_i(&base, k * ell as i64) > c {
                k -= 1;
            }
        }
        // ‖v‖_p = p^{-m}; pick e with p^{-e-m} = p^k, i.e. e = -m - k.
        let np = norm_at(v, Place::Finite(p));
        let m = -crate::rat::val_p(&np, p);
        exponents.insert(p, -m - k);
    }
    let unit = UnitElement { exponents, negative: false };
    let r = unit.value();
    let rescaled: Vec<Rat> = v.iter().map(|x| x * &r).collect();
    let norms: Vec<Rat> = places.places().iter().map(|&pl| norm_at(&rescaled, pl)).collect();
    let max = norms.iter().max().unwrap().clone();
    let min = norms.iter().min().unwrap().clone();
    let spread = &max / &min;
    let balance_power = max.pow(ell as i32) / &c;
    Ok(UnitRescaling { unit, rescaled, spread, balance_power })
}
