//! JSON config schemas and conversion into core types. Matrices are rows of
//! rational strings; places are `"inf"` or a prime.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use std::path::Path;
use uniflow_core::exact::{Place, PlaceSystem};
use uniflow_core::linalg::QMat;
use uniflow_core::measure::{Factor, FriendlyMeasure, Poly, PolynomialMap};
use uniflow_core::orbit::{OneParameterUnipotent, ScanConfig};
use uniflow_core::rat::{self, Rat};
use uniflow_core::subgroups::{
    AmbientGroup, CatalogEntryFile, ConstantsProfile, DiophantineProfile, EpsShape, SubgroupDescriptor,
    UnipotentDirection,
};

pub fn parse_matrix(rows: &[Vec<String>]) -> Result<QMat> {
    let parsed: Result<Vec<Vec<Rat>>> = rows
        .iter()
        .map(|r| r.iter().map(|s| rat::parse(s).map_err(|e| anyhow!(e))).collect())
        .collect();
    Ok(QMat::from_rows(parsed?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    /// Ambient SL_N when `blocks` is absent.
    pub n: Option<usize>,
    /// Block-diagonal product of SL_{n_i}.
    pub blocks: Option<Vec<usize>>,
    #[serde(default)]
    pub finite_places: Vec<u64>,
}

impl GroupSpec {
    pub fn build(&self) -> Result<AmbientGroup> {
        let places = PlaceSystem::new(&self.finite_places).map_err(|e| anyhow!(e))?;
        match (&self.n, &self.blocks) {
            (Some(n), None) => Ok(AmbientGroup::sl(*n, places)),
            (None, Some(blocks)) => Ok(AmbientGroup::block_diagonal(blocks, places)),
            _ => bail!("group needs exactly one of `n` or `blocks`"),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct DirectionSpec {
    /// Each element: a matrix plus the place carrying it ("inf" default).
    pub elements: Vec<DirectionElement>,
}

#[derive(Debug, Deserialize)]
pub struct DirectionElement {
    pub matrix: Vec<Vec<String>>,
    #[serde(default = "default_place")]
    pub place: String,
}

fn default_place() -> String {
    "inf".into()
}

fn parse_place(s: &str) -> Result<Place> {
    if s == "inf" || s == "∞" {
        Ok(Place::Infinity)
    } else {
        Ok(Place::Finite(s.parse::<u64>().context("place must be 'inf' or a prime")?))
    }
}

impl DirectionSpec {
    pub fn build(&self, ambient: &AmbientGroup) -> Result<UnipotentDirection> {
        let raw: Result<Vec<(Place, QMat)>> = self
            .elements
            .iter()
            .map(|e| Ok((parse_place(&e.place)?, parse_matrix(&e.matrix)?)))
            .collect();
        UnipotentDirection::new(ambient, raw?).map_err(|e| anyhow!(e))
    }

    pub fn one_parameter(&self) -> Result<OneParameterUnipotent> {
        if self.elements.len() != 1 {
            bail!("orbit scans need a single one-parameter generator");
        }
        OneParameterUnipotent::new(parse_matrix(&self.elements[0].matrix)?).map_err(|e| anyhow!(e))
    }
}

#[derive(Debug, Deserialize)]
pub struct ProfileSpec {
    /// "parametric" | "sigma_aware" | explicit table rows.
    #[serde(default)]
    pub shape: Option<String>,
    pub a: Option<u32>,
    pub e1: Option<String>,
    pub eta: Option<String>,
    #[serde(default)]
    pub table: Vec<(String, String)>,
    /// Height cutoff: either `t` (log scale, rationalized via exp) or an
    /// exact rational `cutoff`.
    pub t: Option<f64>,
    pub cutoff: Option<String>,
}

impl ProfileSpec {
    pub fn build(&self, constants: &ConstantsProfile) -> Result<DiophantineProfile> {
        let a = self.a.unwrap_or(constants.a);
        let e1 = match &self.e1 {
            Some(s) => rat::parse(s).map_err(|e| anyhow!(e))?,
            None => constants.e1.clone(),
        };
        let eta = match &self.eta {
            Some(s) => rat::parse(s).map_err(|e| anyhow!(e))?,
            None => rat::rat(1, 10),
        };
        let shape = match self.shape.as_deref() {
            Some("sigma_aware") => EpsShape::SigmaAware { a, e1, eta },
            Some("table") => EpsShape::Table(self.table.clone()),
            _ => EpsShape::Parametric { a, e1, eta },
        };
        match (&self.cutoff, self.t) {
            (Some(c), _) => Ok(DiophantineProfile::with_cutoff(shape, rat::parse(c).map_err(|e| anyhow!(e))?)),
            (None, Some(t)) => Ok(DiophantineProfile::from_t(shape, t)),
            (None, None) => Ok(DiophantineProfile::with_cutoff(shape, rat::int(100))),
        }
    }
}

pub fn load_catalog(path: &Path, ambient: &AmbientGroup) -> Result<Vec<SubgroupDescriptor>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading catalog {path:?}"))?;
    let entries: Vec<CatalogEntryFile> = serde_json::from_str(&text).context("catalog JSON")?;
    entries
        .iter()
        .map(|e| e.to_descriptor(ambient).map_err(|err| anyhow!("entry {}: {err}", e.name)))
        .collect()
}

#[derive(Debug, Deserialize)]
pub struct ScanSpec {
    pub group: GroupSpec,
    pub g: Vec<Vec<String>>,
    pub direction: DirectionSpec,
    pub k: u32,
    #[serde(default = "default_grid")]
    pub grid: usize,
    pub eta: String,
    #[serde(default = "default_base")]
    pub base: String,
    #[serde(default)]
    pub window: u32,
    #[serde(default = "default_true")]
    pub reduce: bool,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub catalog_path: Option<String>,
}

fn default_grid() -> usize {
    1001
}

fn default_base() -> String {
    "20".into()
}

fn default_true() -> bool {
    true
}

impl ScanSpec {
    pub fn scan_config(&self) -> Result<ScanConfig> {
        Ok(ScanConfig {
            k: self.k,
            grid: self.grid,
            eta: rat::parse(&self.eta).map_err(|e| anyhow!(e))?,
            base: rat::parse(&self.base).map_err(|e| anyhow!(e))?,
            window: self.window,
            reduce: self.reduce,
        })
    }
}

#[derive(Debug, Deserialize)]
pub struct MeasureSpec {
    /// "lebesgue" | "cantor" | "table".
    pub kind: String,
    #[serde(default)]
    pub atoms: Vec<(String, String)>,
    #[serde(default)]
    pub support: Option<(String, String)>,
}

impl MeasureSpec {
    pub fn build(&self) -> Result<FriendlyMeasure> {
        match self.kind.as_str() {
            "lebesgue" => Ok(FriendlyMeasure::Lebesgue),
            "cantor" => Ok(FriendlyMeasure::Cantor),
            "table" => Ok(FriendlyMeasure::Table {
                atoms: self.atoms.clone(),
                support: self.support.clone().unwrap_or(("0".into(), "1".into())),
            }),
            other => bail!("unknown measure kind {other:?}"),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct RemezSpec {
    pub factors: Vec<FactorSpec>,
    pub degree: u32,
    pub deltas: Vec<String>,
    #[serde(default = "default_resolution")]
    pub resolution: String,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_resolution() -> String {
    "1/4096".into()
}

fn default_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
pub struct FactorSpec {
    #[serde(default = "default_label")]
    pub label: String,
    /// Coefficient lists, constant first.
    pub polys: Vec<Vec<String>>,
    pub lo: String,
    pub hi: String,
    pub measure: MeasureSpec,
}

fn default_label() -> String {
    "t".into()
}

impl RemezSpec {
    pub fn build(&self) -> Result<(PolynomialMap, Vec<Rat>, Rat)> {
        let factors: Result<Vec<Factor>> = self
            .factors
            .iter()
            .map(|f| {
                let polys: Result<Vec<Poly>> = f
                    .polys
                    .iter()
                    .map(|c| {
                        let coeffs: Result<Vec<Rat>> =
                            c.iter().map(|s| rat::parse(s).map_err(|e| anyhow!(e))).collect();
                        Ok(Poly::new(coeffs?))
                    })
                    .collect();
                Ok(Factor {
                    label: f.label.clone(),
                    polys: polys?,
                    lo: rat::parse(&f.lo).map_err(|e| anyhow!(e))?,
                    hi: rat::parse(&f.hi).map_err(|e| anyhow!(e))?,
                    measure: f.measure.build()?,
                })
            })
            .collect();
        let deltas: Result<Vec<Rat>> =
            self.deltas.iter().map(|s| rat::parse(s).map_err(|e| anyhow!(e))).collect();
        Ok((
            PolynomialMap { factors: factors?, degree: self.degree },
            deltas?,
            rat::parse(&self.resolution).map_err(|e| anyhow!(e))?,
        ))
    }
}
