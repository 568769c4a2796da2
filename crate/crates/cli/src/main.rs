//! Single-binary command-line driver: wires JSON configs, catalogs, and
//! reports onto the core toolkit. Every output embeds the resolved constants
//! profile, the tool version, and the seed; exit codes are 0 (ok),
//! 2 (precondition violated), 3 (internal error).

mod config;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use uniflow_core::certify;
use uniflow_core::lattice;
use uniflow_core::lie;
use uniflow_core::measure;
use uniflow_core::orbit;
use uniflow_core::rat::{self, Rat};
use uniflow_core::subgroups::{self, ConstantsProfile};

/// Print that tolerates a closed pipe (e.g. `uniflow ... | head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "uniflow", version, about = "Exact-arithmetic toolkit for unipotent orbits on arithmetic quotients")]
struct Cli {
    /// Output directory for JSON/CSV artifacts.
    #[arg(long, global = true, default_value = "out")]
    output: PathBuf,
    /// Seed recorded in every artifact (reserved for randomized suites).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker pool size (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file with constants-profile overrides.
    #[arg(long, global = true)]
    constants: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Heights and flags of catalog subgroups.
    Height {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Radicals, class-H closure, and stabilizer data per catalog entry.
    SubgroupAnalyze {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Relative Diophantine verdict for a point against a catalog.
    Diophantine {
        #[arg(long)]
        config: PathBuf,
    },
    /// BFS catalog of Γ-conjugates of a seed subgroup.
    CatalogBuild {
        #[arg(long)]
        seed_subgroup: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        height_bound: u64,
        #[arg(long, default_value_t = 16)]
        word_bound: usize,
        #[arg(long, default_value = "64")]
        prune_norm: String,
    },
    /// Compact-part membership of the adjoint lattice.
    Xeta {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reduction to a small representative via the column lattice.
    Reduce {
        #[arg(long)]
        config: PathBuf,
    },
    /// Nondivergence flag of the standard lattice under an expanded scan.
    Flag {
        #[arg(long)]
        config: PathBuf,
    },
    /// Obstruction pipeline: flag, slope rule, stabilizer chain, bounds.
    Obstruct {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sublevel-measure brackets and exponent fits.
    Remez {
        #[arg(long)]
        config: PathBuf,
    },
    /// Federer and decay checks for a friendly measure.
    FriendlyCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Shape bounds of the effective certificate theorem.
    NssBounds {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        d0: u32,
        #[arg(long, default_value_t = 0.0)]
        height: f64,
    },
    /// Exact verification of a polynomial certificate.
    NssVerify {
        #[arg(long)]
        config: PathBuf,
    },
    /// p-adic Newton lifting with per-iteration valuations.
    Hensel {
        #[arg(long)]
        p: u64,
        /// Polynomials, e.g. "x^2 - 2" (repeatable).
        #[arg(long = "poly")]
        polys: Vec<String>,
        /// Start coordinates (repeatable, one per variable).
        #[arg(long = "w", allow_hyphen_values = true)]
        ws: Vec<i64>,
        #[arg(long, default_value_t = 1)]
        c2: u32,
        #[arg(long, default_value_t = 30)]
        target: u32,
    },
    /// Exact per-sample scan of an expanded unipotent orbit.
    OrbitScan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Scan plus classification into the three alternatives.
    Trichotomy {
        #[arg(long)]
        config: PathBuf,
    },
    /// Diophantine-start inheritance check after expansion.
    Inheritance {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recurring-obstruction parabolic membership test.
    ParabolicLimit {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Errors that mean "your inputs don't satisfy a precondition", exit code 2.
fn is_precondition(err: &anyhow::Error) -> bool {
    let s = format!("{err:#}");
    s.contains("precondition")
        || s.contains("congruence")
        || s.contains("singular")
        || s.contains("catalog")
        || s.contains("config")
        || s.contains("reading")
        || s.contains("JSON")
        || s.contains("parse")
        || s.contains("must")
        || s.contains("unknown")
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let constants = match load_constants(cli.constants.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", json!({"error": format!("{e:#}"), "kind": "precondition"}));
            std::process::exit(2);
        }
    };
    match run(&cli, &constants) {
        Ok(()) => {}
        Err(e) => {
            let kind = if is_precondition(&e) { "precondition" } else { "internal" };
            eprintln!("{}", json!({"error": format!("{e:#}"), "kind": kind}));
            std::process::exit(if kind == "precondition" { 2 } else { 3 });
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsOverride {
    a: Option<u32>,
    d: Option<u32>,
    f: Option<u32>,
    e: Option<String>,
    e1: Option<String>,
    e_g: Option<String>,
    kappa: Option<u32>,
    c1: Option<String>,
    k_brownawell: Option<u32>,
    k_greenberg: Option<u32>,
    rho_threshold: Option<String>,
}

fn load_constants(path: Option<&Path>) -> Result<ConstantsProfile> {
    let mut c = ConstantsProfile::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading constants {p:?}"))?;
        let o: ConstantsOverride = serde_json::from_str(&text).context("constants JSON")?;
        let parse = |s: &Option<String>, cur: &Rat| -> Result<Rat> {
            match s {
                Some(v) => rat::parse(v).map_err(|e| anyhow!(e)),
                None => Ok(cur.clone()),
            }
        };
        c.a = o.a.unwrap_or(c.a);
        c.d = o.d.unwrap_or(c.d);
        c.f = o.f.unwrap_or(c.f);
        c.e = parse(&o.e, &c.e)?;
        c.e1 = parse(&o.e1, &c.e1)?;
        c.e_g = parse(&o.e_g, &c.e_g)?;
        c.kappa = o.kappa.unwrap_or(c.kappa);
        c.c1 = parse(&o.c1, &c.c1)?;
        c.k_brownawell = o.k_brownawell.unwrap_or(c.k_brownawell);
        c.k_greenberg = o.k_greenberg.unwrap_or(c.k_greenberg);
        c.rho_threshold = parse(&o.rho_threshold, &c.rho_threshold)?;
    }
    c.validate().map_err(|e| anyhow!("config: {e}"))?;
    Ok(c)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {path:?}"))?;
    serde_json::from_str(&text).with_context(|| format!("config JSON {path:?}"))
}

struct Out<'a> {
    dir: &'a Path,
    command: &'static str,
    seed: u64,
    constants: &'a ConstantsProfile,
}

impl Out<'_> {
    fn write_json(&self, data: Value) -> Result<()> {
        std::fs::create_dir_all(self.dir)?;
        let envelope = json!({
            "command": self.command,
            "version": uniflow_core::VERSION,
            "seed": self.seed,
            "constants": self.constants,
            "data": data,
        });
        let path = self.dir.join(format!("{}.json", self.command));
        std::fs::write(&path, serde_json::to_string_pretty(&envelope)?)?;
        say!("wrote {}", path.display());
        Ok(())
    }

    fn write_csv(&self, header: &str, rows: &[String]) -> Result<PathBuf> {
        std::fs::create_dir_all(self.dir)?;
        let path = self.dir.join(format!("{}.csv", self.command));
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        std::fs::write(&path, text)?;
        say!("wrote {}", path.display());
        Ok(path)
    }
}

fn run(cli: &Cli, constants: &ConstantsProfile) -> Result<()> {
    let out = |command: &'static str| Out { dir: &cli.output, command, seed: cli.seed, constants };
    match &cli.command {
        Command::Height { catalog, n } => {
            let ambient = subgroups::AmbientGroup::sl(*n, uniflow_core::exact::PlaceSystem::archimedean());
            let descs = config::load_catalog(catalog, &ambient)?;
            let rows: Vec<Value> = descs
                .iter()
                .map(|d| {
                    json!({
                        "name": d.name, "dim": d.dim, "height": d.height.to_string(),
                        "class_h": d.class_h, "normal_in_g": d.normal_in_g,
                    })
                })
                .collect();
            for d in &descs {
                say!("{}: dim {}, height {}, class-H {}", d.name, d.dim, d.height, d.class_h);
            }
            out("height").write_json(json!(rows))
        }
        Command::SubgroupAnalyze { catalog, n } => {
            let ambient = subgroups::AmbientGroup::sl(*n, uniflow_core::exact::PlaceSystem::archimedean());
            let descs = config::load_catalog(catalog, &ambient)?;
            let mut rows = Vec::new();
            for d in &descs {
                let (r, ru) = lie::radical_and_unipotent_radical(&d.lie);
                let closure = lie::class_h_closure(&d.lie);
                let stab = subgroups::stabilizer_l_h(&ambient, d).map_err(|e| anyhow!(e))?;
                say!(
                    "{}: dim {}, R dim {}, R_u dim {}, class-H {}, L_H dim {}, M_H dim {} (height {})",
                    d.name, d.dim, r.dim(), ru.dim(), d.class_h, stab.l_h.dim(), stab.m_h.dim, stab.m_h.height
                );
                rows.push(json!({
                    "name": d.name, "dim": d.dim, "height": d.height.to_string(),
                    "radical_dim": r.dim(), "unipotent_radical_dim": ru.dim(),
                    "class_h": d.class_h, "closure_dim": closure.dim(),
                    "l_h_dim": stab.l_h.dim(), "m_h_dim": stab.m_h.dim,
                    "m_h_height": stab.m_h.height.to_string(),
                }));
            }
            out("subgroup-analyze").write_json(json!(rows))
        }
        Command::Diophantine { config: path } => {
            #[derive(Deserialize)]
            struct Spec {
                group: config::GroupSpec,
                g: Vec<Vec<String>>,
                direction: config::DirectionSpec,
                profile: config::ProfileSpec,
                catalog_path: String,
            }
            let spec: Spec = read_json(path)?;
            let ambient = spec.group.build()?;
            let g = config::parse_matrix(&spec.g)?;
            let dir = spec.direction.build(&ambient)?;
            let profile = spec.profile.build(constants)?;
            let catalog = config::load_catalog(Path::new(&spec.catalog_path), &ambient)?;
            let sig = subgroups::SigmaElem::diagonal(g, &ambient.places);
            let verdict = subgroups::diophantine_test(&ambient, &sig, &profile, &catalog, &dir, None)
                .map_err(|e| anyhow!("precondition: {e}"))?;
            let data = match &verdict {
                subgroups::DioVerdict::Diophantine { vacuous } => {
                    say!(
                        "diophantine relative to catalog ({} entries){}",
                        catalog.len(),
                        if *vacuous { " [vacuous]" } else { "" }
                    );
                    json!({"verdict": "diophantine", "vacuous": vacuous, "catalog_size": catalog.len()})
                }
                subgroups::DioVerdict::Violated { name, c_eta, max_wedge, eps } => {
                    say!("violated at {name}: c(η_H) = {c_eta}, max wedge = {max_wedge} < ε = {eps}");
                    json!({
                        "verdict": "violated", "subgroup": name,
                        "c_eta": rat::format(c_eta), "max_wedge": rat::format(max_wedge),
                        "eps": rat::format(eps),
                    })
                }
            };
            out("diophantine").write_json(data)
        }
        Command::CatalogBuild { seed_subgroup, n, height_bound, word_bound, prune_norm } => {
            let ambient = subgroups::AmbientGroup::sl(*n, uniflow_core::exact::PlaceSystem::archimedean());
            let entries: Vec<subgroups::CatalogEntryFile> = read_json(seed_subgroup)?;
            let seed_entry = entries.first().ok_or_else(|| anyhow!("config: seed catalog is empty"))?;
            let h = seed_entry.to_descriptor(&ambient).map_err(|e| anyhow!("config: {e}"))?;
            // default generators: elementary shears E_ij(1)
            let mut gens = Vec::new();
            for i in 0..*n {
                for j in 0..*n {
                    if i != j {
                        gens.push(uniflow_core::linalg::QMat::identity(*n).add(&lie::elementary(*n, i, j)));
                    }
                }
            }
            let rep = subgroups::gamma_orbit_catalog(
                &ambient,
                &h,
                &gens,
                &num_bigint::BigInt::from(*height_bound),
                *word_bound,
                &rat::parse(prune_norm).map_err(|e| anyhow!(e))?,
            );
            let file: Vec<subgroups::CatalogEntryFile> = rep
                .descriptors
                .iter()
                .map(|d| subgroups::CatalogEntryFile {
                    name: d.name.clone(),
                    ambient_n: *n,
                    basis: d
                        .lie
                        .basis()
                        .iter()
                        .map(|m| (0..*n).map(|i| (0..*n).map(|j| rat_to_i64(&m[(i, j)])).collect()).collect())
                        .collect(),
                    tags: vec!["conjugate".into()],
                })
                .collect();
            std::fs::create_dir_all(&cli.output)?;
            let path = cli.output.join("catalog.json");
            std::fs::write(&path, serde_json::to_string_pretty(&file)?)?;
            say!(
                "{} conjugates of height ≤ {height_bound}; word bound binding: {}; pruned {}",
                rep.descriptors.len(),
                rep.word_bound_reached,
                rep.pruned
            );
            out("catalog-build").write_json(json!({
                "count": rep.descriptors.len(),
                "word_bound_reached": rep.word_bound_reached,
                "pruned": rep.pruned,
                "explored": rep.explored,
                "catalog_file": path.display().to_string(),
            }))
        }
        Command::Xeta { config: path } => {
            #[derive(Deserialize)]
            struct Spec {
                group: config::GroupSpec,
                g: Vec<Vec<String>>,
                eta: String,
                #[serde(default)]
                window: u32,
            }
            let spec: Spec = read_json(path)?;
            let ambient = spec.group.build()?;
            let g = config::parse_matrix(&spec.g)?;
            let eta = rat::parse(&spec.eta).map_err(|e| anyhow!(e))?;
            let lat = ambient.adjoint_lattice(&g);
            let v = lattice::x_eta_test(&lat, &eta, spec.window);
            say!(
                "in X_η: {} (shortest c = {}, certified: {})",
                v.in_x_eta, v.shortest.c, v.shortest.certified
            );
            out("xeta").write_json(json!({
                "in_x_eta": v.in_x_eta,
                "shortest_c": rat::format(&v.shortest.c),
                "certified": v.shortest.certified,
                "witness": v.witness.map(|w| w.iter().map(rat::format).collect::<Vec<_>>()),
            }))
        }
        Command::Reduce { config: path } => {
            #[derive(Deserialize)]
            struct Spec {
                g: Vec<Vec<String>>,
                #[serde(default)]
                eta: Option<String>,
            }
            let spec: Spec = read_json(path)?;
            let g = config::parse_matrix(&spec.g)?;
            let r = lattice::reduce_representative(&g);
            let bound = match &spec.eta {
                Some(e) => {
                    let eta = rat::parse(e).map_err(|err| anyhow!(err))?;
                    Some(lattice::reduction_bound_holds(&r.norm, &eta, &constants.e_g, constants.f))
                }
                None => None,
            };
            say!("|gγ| = {} (raw |g| = {})", r.norm, lattice::group_norm(&g));
            out("reduce").write_json(json!({
                "norm": rat::format(&r.norm),
                "raw_norm": rat::format(&lattice::group_norm(&g)),
                "gamma": mat_json(&r.gamma),
                "reduced": mat_json(&r.reduced),
                "bound_holds": bound,
            }))
        }
        Command::Flag { config: path } => {
            let spec: config::ScanSpec = read_json(path)?;
            let g = config::parse_matrix(&spec.g)?;
            let u = spec.direction.one_parameter()?;
            let cfg = spec.scan_config()?;
            let ambient = spec.group.build()?;
            let lat = lattice::LatticeBasis::new(g, ambient.places.clone())
                .map_err(|e| anyhow!("precondition: {e}"))?;
            let scale = rat::pow_i(&cfg.base, cfg.k as i64);
            let actions: Vec<uniflow_core::linalg::QMat> =
                cfg.grid_points().iter().map(|xi| u.at(&(xi * &scale))).collect();
            let flag = lattice::flag_construct(&lat, &actions, (actions.len() / 8).max(1), &[], cfg.window)
                .map_err(|e| anyhow!("precondition: {e}"))?;
            let concave = flag.is_concave();
            say!("flag ranks {:?}, concave: {concave}", flag.ranks);
            out("flag").write_json(json!({
                "flag": flag,
                "concave": concave,
            }))
        }
        Command::Obstruct { config: path } => {
            let spec: config::ScanSpec = read_json(path)?;
            let ambient = spec.group.build()?;
            let g = config::parse_matrix(&spec.g)?;
            let u = spec.direction.one_parameter()?;
            let dir = spec.direction.build(&ambient)?;
            let cfg = spec.scan_config()?;
            let rep =
                orbit::obstruction_pipeline(&ambient, &g, &u, &cfg, constants, &dir).map_err(|e| anyhow!(e))?;
            let outcome = match &rep.outcome {
                orbit::PipelineOutcome::NotTriggered => json!({"kind": "not_triggered"}),
                orbit::PipelineOutcome::ThresholdTooLarge => json!({"kind": "threshold_too_large"}),
                orbit::PipelineOutcome::DetectionFailed { diagnostic } => {
                    json!({"kind": "detection_failed", "diagnostic": diagnostic})
                }
                orbit::PipelineOutcome::Found(chain) => json!({
                    "kind": "found",
                    "w": {"name": chain.w.name, "dim": chain.w.dim, "height": chain.w.height.to_string()},
                    "m": {"name": chain.m.name, "dim": chain.m.dim, "height": chain.m.height.to_string()},
                    "height_bound_ok": chain.height_bound_ok,
                    "c_bound_ok": chain.c_bound_ok,
                    "wedge_bound_ok": chain.wedge_bound_ok,
                    "max_c": rat::format(&chain.max_c),
                    "max_wedge": rat::format(&chain.max_wedge),
                    "counterexample": chain.counterexample.as_ref().map(rat::format),
                }),
            };
            say!("fraction outside X_η: {}; triggered: {}", rep.x_eta_fraction, rep.triggered);
            out("obstruct").write_json(json!({
                "x_eta_fraction": rat::format(&rep.x_eta_fraction),
                "triggered": rep.triggered,
                "k": rep.k,
                "flag": rep.flag,
                "outcome": outcome,
            }))
        }
        Command::Remez { config: path } => {
            let spec: config::RemezSpec = read_json(path)?;
            let (map, deltas, resolution) = spec.build()?;
            let rep = measure::remez_verify(&map, spec.degree, &deltas, &resolution, spec.tolerance)
                .map_err(|e| anyhow!("precondition: {e}"))?;
            let o = out("remez");
            let rows: Vec<String> = rep
                .points
                .iter()
                .map(|p| {
                    format!(
                        "{},{},{},{},{},{}",
                        rat::format(&p.delta),
                        rat::format(&p.measure_lower),
                        rat::format(&p.measure_upper),
                        rat::format(&p.sup_lower),
                        rat::format(&p.sup_upper),
                        (rat::to_f64(&p.ratio_lower) + rat::to_f64(&p.ratio_upper)) / 2.0
                    )
                })
                .collect();
            o.write_csv("delta,lower,upper,sup_lower,sup_upper,ratio_mid", &rows)?;
            say!("fitted exponent {:.4}, constant {:.4}", rep.fitted_exponent, rep.fitted_constant);
            o.write_json(json!({
                "fitted_exponent": rep.fitted_exponent,
                "fitted_constant": rep.fitted_constant,
                "num_factors": rep.num_factors,
                "points": rep.points,
            }))
        }
        Command::FriendlyCheck { config: path } => {
            #[derive(Deserialize)]
            struct Spec {
                measure: config::MeasureSpec,
                #[serde(default)]
                centers: Vec<String>,
                #[serde(default)]
                radii: Vec<String>,
                #[serde(default)]
                intervals: Vec<(String, String)>,
                #[serde(default)]
                points: Vec<String>,
                #[serde(default)]
                deltas: Vec<String>,
            }
            let spec: Spec = read_json(path)?;
            let m = spec.measure.build()?;
            let parse_all = |v: &[String]| -> Result<Vec<Rat>> {
                v.iter().map(|s| rat::parse(s).map_err(|e| anyhow!(e))).collect()
            };
            let centers = if spec.centers.is_empty() {
                match &m {
                    // centers must lie in the support: ternary endpoints
                    measure::FriendlyMeasure::Cantor => vec![
                        rat::int(0),
                        rat::rat(2, 27),
                        rat::rat(2, 9),
                        rat::rat(8, 27),
                        rat::rat(2, 3),
                        rat::rat(20, 27),
                        rat::rat(8, 9),
                        rat::int(1),
                    ],
                    _ => {
                        let (lo, hi) = m.support(&rat::int(0), &rat::int(1));
                        (0..=8).map(|j| &lo + (&hi - &lo) * rat::rat(j, 8)).collect()
                    }
                }
            } else {
                parse_all(&spec.centers)?
            };
            let radii = if spec.radii.is_empty() {
                vec![rat::rat(1, 27), rat::rat(1, 81), rat::rat(1, 243)]
            } else {
                parse_all(&spec.radii)?
            };
            let fed = measure::federer_check(&m, &centers, &radii);
            let intervals: Vec<(Rat, Rat)> = if spec.intervals.is_empty() {
                vec![(rat::rat(1, 2), rat::rat(1, 2))]
            } else {
                spec.intervals
                    .iter()
                    .map(|(c, r)| {
                        Ok((rat::parse(c).map_err(|e| anyhow!(e))?, rat::parse(r).map_err(|e| anyhow!(e))?))
                    })
                    .collect::<Result<_>>()?
            };
            let points = if spec.points.is_empty() {
                (0..=27).map(|j| rat::rat(j, 27)).collect()
            } else {
                parse_all(&spec.points)?
            };
            let deltas = if spec.deltas.is_empty() {
                vec![rat::rat(1, 27), rat::rat(1, 243), rat::rat(1, 2187)]
            } else {
                parse_all(&spec.deltas)?
            };
            let dec = measure::decaying_check(&m, &intervals, &points, &deltas);
            say!(
                "Federer A: {:?} (unbounded: {}); decaying (c, α) = ({:.4}, {:.4})",
                fed.measured_a, fed.unbounded, dec.c, dec.alpha
            );
            out("friendly-check").write_json(json!({
                "federer": fed,
                "decaying": dec,
            }))
        }
        Command::NssBounds { m, d0, height } => {
            let b = certify::nss_bounds(*m, *d0, *height);
            say!(
                "M = {}, b ≤ {}, deg ≤ {}, log-height ≤ {:.3} ({})",
                b.big_m, b.b_bound, b.degree_bound, b.height_bound, b.convention
            );
            out("nss-bounds").write_json(json!({
                "m": m, "d0": d0, "log_height": height,
                "big_m": b.big_m,
                "b_bound": b.b_bound.to_string(),
                "degree_bound": b.degree_bound.to_string(),
                "height_bound": b.height_bound,
                "a_log_bound": b.a_log_bound,
                "convention": b.convention,
            }))
        }
        Command::NssVerify { config: path } => {
            #[derive(Deserialize)]
            struct Spec {
                vars: usize,
                system: Vec<String>,
                f: String,
                a: i64,
                b: u32,
                cofactors: Vec<String>,
            }
            let spec: Spec = read_json(path)?;
            let polys: Result<Vec<certify::MPoly>> = spec
                .system
                .iter()
                .map(|s| certify::parse_poly(s, spec.vars).map_err(|e| anyhow!("parse {s:?}: {e}")))
                .collect();
            let system = certify::PolySystem::new(polys?);
            let cofactors: Result<Vec<certify::MPoly>> = spec
                .cofactors
                .iter()
                .map(|s| certify::parse_poly(s, spec.vars).map_err(|e| anyhow!("parse {s:?}: {e}")))
                .collect();
            let cert = certify::NssCertificate {
                f: certify::parse_poly(&spec.f, spec.vars).map_err(|e| anyhow!("parse f: {e}"))?,
                a: spec.a.into(),
                b: spec.b,
                cofactors: cofactors?,
            };
            let rep = certify::verify_certificate(&cert, &system).map_err(|e| anyhow!("precondition: {e}"))?;
            say!(
                "identity valid: {}; bounds: b {}, degrees {}, heights {}",
                rep.identity_valid, rep.b_within_bound, rep.degrees_within_bound, rep.heights_within_bound
            );
            out("nss-verify").write_json(json!(rep))
        }
        Command::Hensel { p, polys, ws, c2, target } => {
            if polys.is_empty() || ws.is_empty() {
                return Err(anyhow!("config: need at least one --poly and one --w"));
            }
            let vars = ws.len();
            let parsed: Result<Vec<certify::MPoly>> = polys
                .iter()
                .map(|s| certify::parse_poly(s, vars).map_err(|e| anyhow!("parse {s:?}: {e}")))
                .collect();
            let system = certify::PolySystem::new(parsed?);
            let w = certify::PadicPoint::new(*p, *target, ws.iter().map(|&x| x.into()).collect(), *c2);
            let rep = certify::hensel_lift(&system, &w, *target).map_err(|e| anyhow!("precondition: {e}"))?;
            let coords: Vec<String> = rep.point.coords.iter().map(|c| c.to_string()).collect();
            say!(
                "lifted: y ≡ ({}) mod {p}^{target}; minor valuation {}",
                coords.join(", "),
                rep.minor_valuation
            );
            out("hensel").write_json(json!({
                "p": p, "target": target, "c2": c2,
                "y": coords,
                "minor_valuation": rep.minor_valuation,
                "minor_size": rep.minor_size,
                "selected_rows": rep.selected_rows,
                "selected_cols": rep.selected_cols,
                "iterations": rep.iterations,
                "proximity_valuation": rep.proximity_valuation,
                "proximity_ok": rep.proximity_ok,
                "quadratic_ok": rep.quadratic_ok,
            }))
        }
        Command::OrbitScan { config: path } => {
            let (rep, _, _, _, _) = run_scan(path, constants)?;
            let o = out("orbit-scan");
            let rows: Vec<String> = rep
                .rows
                .iter()
                .map(|r| {
                    let cat = r
                        .per_catalog
                        .iter()
                        .map(|(n, c, w)| format!("{n}:{c}:{w}"))
                        .collect::<Vec<_>>()
                        .join(";");
                    format!(
                        "{},{},{},{},{},{}",
                        rat::format(&r.xi),
                        r.in_x_eta,
                        rat::format(&r.shortest_c),
                        r.diophantine,
                        r.violator.clone().unwrap_or_default(),
                        cat
                    )
                })
                .collect();
            o.write_csv("xi,in_x_eta,shortest_c,diophantine,violator,per_catalog", &rows)?;
            say!(
                "exceptional fraction {} ({} samples); outside X_η: {}",
                rep.exceptional_fraction, rep.grid, rep.x_eta_fraction
            );
            o.write_json(json!({
                "exceptional_fraction": rat::format(&rep.exceptional_fraction),
                "x_eta_fraction": rat::format(&rep.x_eta_fraction),
                "raw_norm": rat::format(&rep.raw_norm),
                "reduced_norm": rat::format(&rep.reduced_norm),
                "k": rep.k, "grid": rep.grid,
                "base": rat::format(&rep.base),
                "eta": rat::format(&rep.eta),
            }))
        }
        Command::Trichotomy { config: path } => {
            let (rep, _ambient, profile, catalog, dir) = run_scan(path, constants)?;
            let verdict = orbit::trichotomy_classify(&rep, constants, &profile, &catalog, &dir);
            say!("verdict: {verdict:?}");
            out("trichotomy").write_json(json!({
                "verdict": verdict,
                "exceptional_fraction": rat::format(&rep.exceptional_fraction),
                "grid": rep.grid,
            }))
        }
        Command::Inheritance { config: path } => {
            #[derive(Deserialize)]
            struct Spec {
                scan: config::ScanSpec,
                profile_t_prime: config::ProfileSpec,
            }
            let spec: Spec = read_json(path)?;
            let ambient = spec.scan.group.build()?;
            let g = config::parse_matrix(&spec.scan.g)?;
            let u = spec.scan.direction.one_parameter()?;
            let dir = spec.scan.direction.build(&ambient)?;
            let cfg = spec.scan.scan_config()?;
            let profile_t = spec
                .scan
                .profile
                .as_ref()
                .ok_or_else(|| anyhow!("config: scan.profile required"))?
                .build(constants)?;
            let profile_tp = spec.profile_t_prime.build(constants)?;
            let catalog = match &spec.scan.catalog_path {
                Some(p) => config::load_catalog(Path::new(p), &ambient)?,
                None => Vec::new(),
            };
            let rep = orbit::inheritance_check(
                &ambient, &g, &u, &cfg, &profile_t, &profile_tp, constants, &catalog, &dir,
            )
            .map_err(|e| anyhow!("precondition: {e}"))?;
            say!("fraction {} bound holds: {} (vacuous: {})", rep.fraction, rep.bound_holds, rep.vacuous);
            out("inheritance").write_json(json!(rep))
        }
        Command::ParabolicLimit { config: path } => {
            #[derive(Deserialize)]
            struct Spec {
                scan: config::ScanSpec,
                ks: Vec<u32>,
            }
            let spec: Spec = read_json(path)?;
            let ambient = spec.scan.group.build()?;
            let g = config::parse_matrix(&spec.scan.g)?;
            let u = spec.scan.direction.one_parameter()?;
            let dir = spec.scan.direction.build(&ambient)?;
            let cfg = spec.scan.scan_config()?;
            let rep = orbit::parabolic_limit_check(&ambient, &g, &u, &cfg, constants, &dir, &spec.ks)
                .map_err(|e| anyhow!(e))?;
            say!(
                "recurring: {:?}; parabolic dim: {:?}; membership: {}; insufficient evidence: {}",
                rep.recurring,
                rep.parabolic.as_ref().map(|p| p.dim()),
                rep.membership_ok,
                rep.insufficient_evidence
            );
            out("parabolic-limit").write_json(json!({
                "recurring": rep.recurring,
                "parabolic_dim": rep.parabolic.as_ref().map(|p| p.dim()),
                "parabolic_basis": rep.parabolic.as_ref().map(|p| {
                    p.basis().iter().map(mat_json).collect::<Vec<_>>()
                }),
                "membership_ok": rep.membership_ok,
                "insufficient_evidence": rep.insufficient_evidence,
                "per_k": rep.per_k.iter().map(|(k, found, w)| json!([k, found, rat::format(w)])).collect::<Vec<_>>(),
            }))
        }
    }
}

type ScanParts = (
    orbit::OrbitScanReport,
    subgroups::AmbientGroup,
    subgroups::DiophantineProfile,
    Vec<subgroups::SubgroupDescriptor>,
    subgroups::UnipotentDirection,
);

fn run_scan(path: &Path, constants: &ConstantsProfile) -> Result<ScanParts> {
    let spec: config::ScanSpec = read_json(path)?;
    let ambient = spec.group.build()?;
    let g = config::parse_matrix(&spec.g)?;
    let u = spec.direction.one_parameter()?;
    let dir = spec.direction.build(&ambient)?;
    let cfg = spec.scan_config()?;
    let profile = match &spec.profile {
        Some(p) => p.build(constants)?,
        None => config::ProfileSpec {
            shape: None,
            a: None,
            e1: None,
            eta: Some(rat::format(&cfg.eta)),
            table: Vec::new(),
            t: None,
            cutoff: None,
        }
        .build(constants)?,
    };
    let catalog = match &spec.catalog_path {
        Some(p) => config::load_catalog(Path::new(p), &ambient)?,
        None => Vec::new(),
    };
    let rep = orbit::orbit_scan(&ambient, &g, &u, &cfg, &profile, &catalog, &dir)
        .map_err(|e| anyhow!("precondition: {e}"))?;
    Ok((rep, ambient, profile, catalog, dir))
}

fn mat_json(m: &uniflow_core::linalg::QMat) -> Value {
    let rows: Vec<Vec<String>> = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| rat::format(&m[(i, j)])).collect())
        .collect();
    json!(rows)
}

fn rat_to_i64(x: &Rat) -> i64 {
    assert!(x.denom() == &num_bigint::BigInt::from(1), "catalog bases must be integral");
    x.numer().try_into().expect("catalog entry fits in i64")
}
