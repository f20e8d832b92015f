//! Command-line front end: one subcommand per analysis, JSON or CSV output.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::path::PathBuf;

use crate::bimodule::{
    self, disintegrate, fiber_mixing_profile, Axis, Base, BimoduleError, BivariateMeasure, FiniteKoopmanModel, KoopmanDoc,
    MeasureJson, Weights,
};
use crate::circle_measures::{self as cm, CircleMeasure, MeasureDoc, MeasureError};
use crate::format::{fmt_sig, round_json};
use crate::group_masa::{self as gm, AhpResult, GroupAlgebraElement, KgStructure, MasaError, StVerdict};
use crate::groups::{format_element, parse_element, Element, GroupError, GroupModel};
use crate::rank_one::{self, RankOneError, SpecDoc};

#[derive(Debug, Parser)]
#[command(name = "sml", version, about = "Finite-model computations for mixing masas")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Args, Clone)]
pub struct GlobalOpts {
    /// Horizon N for sequences and sums.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Search radius R for ball enumerations.
    #[arg(long, global = true)]
    pub radius: Option<usize>,
    /// Numerical tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measures on the circle.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Rank-one cutting-and-stacking systems.
    #[command(subcommand)]
    Rankone(RankoneCmd),
    /// Combinatorics of the marked subgroup.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Group-algebra diagnostics.
    #[command(subcommand)]
    Masa(MasaCmd),
    /// Bivariate measures and finite crossed products.
    #[command(subcommand)]
    Bimodule(BimoduleCmd),
}

/// Inputs are file paths, or inline JSON when they start with `{`.
#[derive(Debug, Args)]
pub struct MeasureInput {
    pub input: String,
    #[arg(long)]
    pub tail_start: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum MeasureCmd {
    Fourier(MeasureInput),
    Wiener(MeasureInput),
    Rajchman(MeasureInput),
    Weakmix(MeasureInput),
}

#[derive(Debug, Args)]
pub struct TowerInput {
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// Cut/spacer spec (path or inline JSON).
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(short = 'K', long = "stages")]
    pub stages: usize,
}

#[derive(Debug, Subcommand)]
pub enum RankoneCmd {
    Build(TowerInput),
    Correlate {
        #[command(flatten)]
        tower: TowerInput,
        /// Stage of the base whose centered indicator is correlated.
        #[arg(long)]
        base_stage: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GroupCmd {
    St {
        model: String,
        /// Element of F (repeat the flag); defaults to the generators outside Γ₀.
        #[arg(long = "f")]
        f: Vec<String>,
        #[arg(long, default_value_t = 64)]
        e_bound: usize,
    },
    Kg {
        model: String,
        #[arg(long)]
        g: String,
    },
    Malnormal {
        model: String,
    },
    Icc {
        model: String,
        #[arg(long)]
        threshold: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MasaCmd {
    Condexp {
        model: String,
        #[arg(long)]
        x: String,
    },
    Cesaro {
        model: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        v: String,
    },
    Ahp {
        model: String,
        #[arg(long = "family")]
        family: Vec<String>,
        #[arg(long)]
        v: String,
        #[arg(long, default_value_t = 5)]
        length: usize,
        #[arg(long, default_value_t = 100)]
        k_max: u64,
    },
    Wandering {
        model: String,
        #[arg(long)]
        zeta: String,
        #[arg(long)]
        v: String,
    },
    Summability {
        model: String,
        #[arg(long)]
        xi1: String,
        #[arg(long)]
        xi2: String,
        #[arg(long)]
        v: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaseArg {
    Pushforward,
    Haar,
}

#[derive(Debug, Subcommand)]
pub enum BimoduleCmd {
    Eta {
        model: String,
        #[arg(long)]
        zeta1: String,
        /// Defaults to zeta1.
        #[arg(long)]
        zeta2: Option<String>,
    },
    Disintegrate {
        measure: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        axis: u8,
        #[arg(long, value_enum, default_value_t = BaseArg::Pushforward)]
        base: BaseArg,
    },
    Fibers {
        measure: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        axis: u8,
        #[arg(long, default_value_t = 1)]
        tail_start: usize,
    },
    Snag {
        koopman: String,
        /// Comma-separated real values of f₁ on X.
        #[arg(long)]
        f1: Option<String>,
        #[arg(long)]
        f2: Option<String>,
        #[arg(long, default_value_t = 0)]
        g1: usize,
        #[arg(long, default_value_t = 0)]
        g2: usize,
        #[arg(long, default_value_t = 0)]
        h1: usize,
        #[arg(long, default_value_t = 0)]
        h2: usize,
        /// Random seeded trials instead of a single instance.
        #[arg(long)]
        trials: Option<usize>,
    },
    Transport {
        koopman: String,
        /// Comma-separated masses on Ĥ; defaults to the maximal spectral type.
        #[arg(long)]
        mu: Option<String>,
    },
    Fingerprint {
        /// Comma-separated weights; defaults to 2⁻ⁿ.
        #[arg(long, conflicts_with = "geometric")]
        weights: Option<String>,
        /// "first,ratio" for αₙ = first·ratioⁿ⁻¹.
        #[arg(long)]
        geometric: Option<String>,
        #[arg(long, default_value_t = bimodule::DEFAULT_N_MAX)]
        n_max: usize,
        #[arg(long, conflicts_with = "compare_geometric")]
        compare_weights: Option<String>,
        #[arg(long)]
        compare_geometric: Option<String>,
    },
}

/// Exit status and message of a failed run.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_PRECONDITION: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

impl CliError {
    fn precondition(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PRECONDITION,
            message: message.into(),
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        let code = if matches!(e, GroupError::BudgetExceeded { .. }) { EXIT_BUDGET } else { EXIT_PRECONDITION };
        CliError { code, message: e.to_string() }
    }
}

impl From<MasaError> for CliError {
    fn from(e: MasaError) -> Self {
        match e {
            MasaError::Group(g) => g.into(),
            e => CliError::precondition(e.to_string()),
        }
    }
}

impl From<BimoduleError> for CliError {
    fn from(e: BimoduleError) -> Self {
        match e {
            BimoduleError::Group(g) => g.into(),
            BimoduleError::Masa(m) => m.into(),
            e => CliError::precondition(e.to_string()),
        }
    }
}

impl From<RankOneError> for CliError {
    fn from(e: RankOneError) -> Self {
        let code = if matches!(e, RankOneError::BudgetExceeded { .. }) { EXIT_BUDGET } else { EXIT_PRECONDITION };
        CliError { code, message: e.to_string() }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        CliError::precondition(e.to_string())
    }
}

/// A JSON document and, when the subcommand has one, a CSV rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: Value,
    pub csv: Option<String>,
}

impl Output {
    fn json(json: Value) -> Self {
        Output { json, csv: None }
    }

    /// Text for the requested format, numbers rounded to 12 significant digits.
    pub fn render(&self, format: Format) -> String {
        match (format, &self.csv) {
            (Format::Csv, Some(csv)) => csv.clone(),
            (Format::Csv, None) => scalar_csv(&self.json),
            (Format::Json, _) => {
                let mut v = self.json.clone();
                round_json(&mut v);
                format!("{v}\n")
            }
        }
    }
}

/// key,value rows for the scalar fields of an object.
fn scalar_csv(v: &Value) -> String {
    let mut out = String::from("key,value\n");
    if let Value::Object(map) = v {
        for (k, x) in map {
            let cell = match x {
                Value::Number(n) => n.as_f64().map(fmt_sig).unwrap_or_else(|| n.to_string()),
                Value::String(s) => s.clone(),
                Value::Bool(b) => b.to_string(),
                _ => continue,
            };
            out.push_str(&format!("{k},{cell}\n"));
        }
    }
    out
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn read_input(s: &str) -> Result<String, CliError> {
    let t = s.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(s.to_string())
    } else {
        std::fs::read_to_string(s).map_err(|e| CliError::precondition(format!("cannot read {s}: {e}")))
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> Result<T, CliError> {
    let text = read_input(s)?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::precondition(format!("{what}: parse error at line {} column {}: {e}", e.line(), e.column()))
    })
}

fn load_model(s: &str) -> Result<GroupModel, CliError> {
    let text = read_input(s)?;
    Ok(text.parse::<GroupModel>()?)
}

fn load_measure(s: &str) -> Result<CircleMeasure, CliError> {
    let doc: MeasureDoc = parse_json(s, "measure")?;
    Ok(CircleMeasure::from_doc(doc)?)
}

fn load_koopman(s: &str) -> Result<FiniteKoopmanModel, CliError> {
    let doc: KoopmanDoc = parse_json(s, "koopman model")?;
    Ok(FiniteKoopmanModel::from_doc(doc)?)
}

fn load_bivariate(s: &str) -> Result<BivariateMeasure, CliError> {
    let doc: MeasureJson = parse_json(s, "bivariate measure")?;
    Ok(BivariateMeasure::from_doc(doc)?)
}

fn element(model: &GroupModel, s: &str) -> Result<Element, CliError> {
    Ok(parse_element(model, s)?)
}

fn algebra(model: &GroupModel, s: &str) -> Result<GroupAlgebraElement, CliError> {
    Ok(GroupAlgebraElement::parse(model, s)?)
}

fn reals(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::precondition(format!("{what}: cannot parse {x:?} as a number")))
        })
        .collect()
}

fn complex_json(c: Complex64) -> Value {
    json!([c.re, c.im])
}

fn bivariate_csv(m: &BivariateMeasure) -> String {
    csv_table(
        "t,s,re,im",
        m.masses()
            .iter()
            .map(|(&(t, s), c)| vec![t.to_string(), s.to_string(), fmt_sig(c.re), fmt_sig(c.im)]),
    )
}

fn profile_csv(values: &[f64]) -> String {
    csv_table("N,value", values.iter().enumerate().map(|(n, v)| vec![n.to_string(), fmt_sig(*v)]))
}

fn run_measure(cmd: &MeasureCmd, opts: &GlobalOpts) -> Result<Output, CliError> {
    match cmd {
        MeasureCmd::Fourier(a) => {
            let mu = load_measure(&a.input)?;
            let n = opts.horizon.unwrap_or(64).max(1);
            let p = cm::FourierProfile::from_coefficients(mu.coefficients(n), a.tail_start.unwrap_or(1).clamp(1, n));
            let coeffs: Vec<Value> = (-(n as i64)..=n as i64)
                .map(|k| {
                    let c = p.coefficient(k);
                    json!([k, c.re, c.im])
                })
                .collect();
            Ok(Output {
                json: json!({"horizon": n, "coefficients": coeffs}),
                csv: Some(p.to_csv()),
            })
        }
        MeasureCmd::Wiener(a) => {
            let mu = load_measure(&a.input)?;
            let n = opts.horizon.unwrap_or(10_000);
            let values = cm::wiener_atom_energy(&mu, n)?;
            Ok(Output {
                json: json!({
                    "horizon": n,
                    "terminal": values.last().copied().unwrap_or(0.0),
                    "atom_energy": mu.atom_energy(),
                }),
                csv: Some(profile_csv(&values)),
            })
        }
        MeasureCmd::Rajchman(a) => {
            let mu = load_measure(&a.input)?;
            let n = opts.horizon.unwrap_or(1000);
            let n0 = a.tail_start.unwrap_or((n / 2).max(1));
            let p = cm::rajchman_profile(&mu, n0, n)?;
            Ok(Output {
                json: json!({
                    "horizon": n,
                    "tail_start": n0,
                    "tail_sup": p.tail_sup,
                    "tail_argmax": p.tail_argmax,
                    "cesaro_sq": p.cesaro_sq.last(),
                    "cesaro_abs": p.cesaro_abs.last(),
                }),
                csv: Some(p.to_csv()),
            })
        }
        MeasureCmd::Weakmix(a) => {
            let mu = load_measure(&a.input)?;
            let n = opts.horizon.unwrap_or(10_000);
            let values = cm::weak_mixing_profile(&mu, n)?;
            Ok(Output {
                json: json!({"horizon": n, "terminal": values.last().copied().unwrap_or(0.0)}),
                csv: Some(profile_csv(&values)),
            })
        }
    }
}

fn resolve_spec(t: &TowerInput) -> Result<rank_one::CutSpacerSpec, CliError> {
    let doc = match (&t.preset, &t.spec) {
        (Some(p), _) => SpecDoc::Preset { preset: p.clone() },
        (None, Some(s)) => parse_json(s, "cut/spacer spec")?,
        (None, None) => return Err(CliError::precondition("either --preset or --spec is required")),
    };
    Ok(doc.resolve(t.stages)?)
}

fn run_rankone(cmd: &RankoneCmd, opts: &GlobalOpts, budget: usize) -> Result<Output, CliError> {
    match cmd {
        RankoneCmd::Build(t) => {
            let spec = resolve_spec(t)?;
            let tower = rank_one::build_tower(&spec, t.stages, budget)?;
            let heights: Vec<u64> = spec.heights(t.stages).iter().map(|&h| h as u64).collect();
            Ok(Output::json(json!({
                "height": tower.height(),
                "stage": tower.stage(),
                "heights": heights,
                "base_width": tower.base_width().to_string(),
            })))
        }
        RankoneCmd::Correlate { tower: t, base_stage } => {
            let spec = resolve_spec(t)?;
            let tower = rank_one::build_tower(&spec, t.stages, budget)?;
            let f = match base_stage {
                Some(j) => tower.centered_base_indicator(*j),
                None => tower.default_function(),
            };
            let max_lag = opts.horizon.unwrap_or(tower.height() - 1).min(tower.height() - 1);
            let c = rank_one::correlation_sequence(&tower, &f, max_lag)?;
            let csv = csv_table(
                "m,c,truncation",
                c.values
                    .iter()
                    .zip(&c.truncation)
                    .enumerate()
                    .map(|(m, (v, tr))| vec![m.to_string(), fmt_sig(*v), fmt_sig(*tr)]),
            );
            Ok(Output {
                json: json!({
                    "stage": tower.stage(),
                    "height": tower.height(),
                    "max_lag": max_lag,
                    "values": c.values,
                    "truncation": c.truncation,
                }),
                csv: Some(csv),
            })
        }
    }
}

fn pair_json(p: &(Element, Element)) -> Value {
    json!([format_element(&p.0), format_element(&p.1)])
}

const MAX_LISTED: usize = 100;

fn run_group(cmd: &GroupCmd, opts: &GlobalOpts, budget: usize) -> Result<Output, CliError> {
    match cmd {
        GroupCmd::St { model, f, e_bound } => {
            let m = load_model(model)?;
            let radius = opts.radius.unwrap_or(8);
            let fs: Vec<Element> = if f.is_empty() {
                let mut out = Vec::new();
                for g in m.generators() {
                    if !m.in_marked(&g)? {
                        out.push(g);
                    }
                }
                out
            } else {
                f.iter().map(|s| element(&m, s)).collect::<Result<_, _>>()?
            };
            let r = gm::st_condition(&m, &fs, radius, *e_bound, budget)?;
            let witnesses: Vec<Value> = r
                .witnesses
                .iter()
                .take(MAX_LISTED)
                .map(|(a, b, c)| json!([format_element(a), format_element(b), format_element(c)]))
                .collect();
            let mut doc = json!({
                "radius": r.radius,
                "F": r.f.iter().map(format_element).collect::<Vec<_>>(),
                "witnesses": witnesses,
                "witness_count": r.witnesses.len(),
            });
            match &r.verdict {
                StVerdict::HoldsWithE(e) => {
                    doc["verdict"] = json!("holds_with_E");
                    doc["E"] = json!(e.iter().map(format_element).collect::<Vec<_>>());
                }
                StVerdict::Violation => doc["verdict"] = json!("violation"),
                StVerdict::Inconclusive => doc["verdict"] = json!("inconclusive"),
            }
            Ok(Output::json(doc))
        }
        GroupCmd::Kg { model, g } => {
            let m = load_model(model)?;
            let g = element(&m, g)?;
            let r = gm::stabilizer_kg(&m, &g, opts.radius.unwrap_or(4), budget)?;
            let (structure, order, pairs) = match &r.structure {
                KgStructure::Trivial => ("trivial", json!(1), vec![]),
                KgStructure::Finite(p) => ("finite", json!(p.len()), p.iter().map(pair_json).collect()),
                KgStructure::Infinite => ("infinite", Value::Null, vec![]),
                KgStructure::Unknown => ("unknown", Value::Null, vec![]),
            };
            Ok(Output::json(json!({
                "g": format_element(&r.g),
                "structure": structure,
                "order": order,
                "elements": pairs,
                "exact": r.exact,
                "radius": r.radius,
                "found": r.found.iter().take(MAX_LISTED).map(pair_json).collect::<Vec<_>>(),
            })))
        }
        GroupCmd::Malnormal { model } => {
            let m = load_model(model)?;
            let r = gm::malnormality_check(&m, opts.radius.unwrap_or(4), budget)?;
            Ok(Output::json(json!({
                "radius": r.radius,
                "malnormal": r.malnormal,
                "witness": r.witness.as_ref().map(pair_json),
            })))
        }
        GroupCmd::Icc { model, threshold } => {
            let m = load_model(model)?;
            let r = gm::icc_check(&m, opts.radius.unwrap_or(3), *threshold, budget)?;
            Ok(Output::json(json!({
                "radius": r.radius,
                "threshold": r.threshold,
                "all_exceed": r.all_exceed,
                "min_class_size": r.min_class_size,
                "smallest": r.smallest.as_ref().map(format_element),
            })))
        }
    }
}

fn run_masa(cmd: &MasaCmd, opts: &GlobalOpts) -> Result<Output, CliError> {
    match cmd {
        MasaCmd::Condexp { model, x } => {
            let m = load_model(model)?;
            let y = gm::conditional_expectation(&m, &algebra(&m, x)?)?;
            Ok(Output::json(json!({"result": y.format(), "norm2": y.norm2()})))
        }
        MasaCmd::Cesaro { model, x, v } => {
            let m = load_model(model)?;
            let r = gm::cesaro_diagnostics(&m, &algebra(&m, x)?, &element(&m, v)?, opts.horizon.unwrap_or(50))?;
            Ok(Output::json(json!({
                "horizon": r.horizon,
                "i": r.i,
                "i_prime": r.i_prime,
                "ii": r.ii,
                "ii_prime": r.ii_prime,
                "all_vanish": r.all_vanish,
                "l1_exact": r.l1_exact,
            })))
        }
        MasaCmd::Ahp { model, family, v, length, k_max } => {
            let m = load_model(model)?;
            let fam = family.iter().map(|s| algebra(&m, s)).collect::<Result<Vec<_>, _>>()?;
            let doc = match gm::ahp_subsequence(&m, &fam, &element(&m, v)?, *length, *k_max)? {
                AhpResult::Found(ks) => json!({"status": "found", "k": ks}),
                AhpResult::Inconclusive { found, k_max } => json!({"status": "inconclusive", "k": found, "k_max": k_max}),
            };
            Ok(Output::json(doc))
        }
        MasaCmd::Wandering { model, zeta, v } => {
            let m = load_model(model)?;
            let r = gm::wandering_test(
                &m,
                &algebra(&m, zeta)?,
                &element(&m, v)?,
                opts.horizon.unwrap_or(50),
                opts.tol.unwrap_or(1e-12),
            )?;
            Ok(Output::json(json!({
                "horizon": r.horizon,
                "wandering": r.wandering,
                "max_defect": r.max_defect,
                "worst_n": r.worst_n,
            })))
        }
        MasaCmd::Summability { model, xi1, xi2, v } => {
            let m = load_model(model)?;
            let r = gm::summability_identity(&m, &algebra(&m, xi1)?, &algebra(&m, xi2)?, &element(&m, v)?)?;
            Ok(Output::json(json!({
                "lhs": r.lhs,
                "rhs": r.rhs,
                "defect": (r.lhs - r.rhs).abs(),
                "ks": r.ks,
            })))
        }
    }
}

fn measure_json(m: &BivariateMeasure) -> Value {
    serde_json::to_value(m.to_doc()).unwrap_or(Value::Null)
}

fn weights_from(list: &Option<String>, geo: &Option<String>) -> Result<Weights, CliError> {
    match (list, geo) {
        (Some(l), _) => Ok(Weights::Explicit { values: reals(l, "weights")? }),
        (None, Some(g)) => match reals(g, "geometric")?.as_slice() {
            [first, ratio] => Ok(Weights::Geometric { first: *first, ratio: *ratio }),
            _ => Err(CliError::precondition("--geometric takes \"first,ratio\"")),
        },
        (None, None) => Ok(Weights::dyadic()),
    }
}

fn function_arg(k: &FiniteKoopmanModel, s: &Option<String>, fallback: impl FnOnce() -> Vec<Complex64>) -> Result<Vec<Complex64>, CliError> {
    match s {
        Some(s) => {
            let v = reals(s, "function")?;
            if v.len() != k.points() {
                return Err(CliError::precondition(format!("function has {} values, X has {}", v.len(), k.points())));
            }
            Ok(v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
        }
        None => Ok(fallback()),
    }
}

fn random_mean_zero(k: &FiniteKoopmanModel, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let f: Vec<Complex64> = (0..k.points())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let m = k.mean(&f);
    f.into_iter().map(|v| v - m).collect()
}

fn run_bimodule(cmd: &BimoduleCmd, opts: &GlobalOpts, budget: usize) -> Result<Output, CliError> {
    match cmd {
        BimoduleCmd::Eta { model, zeta1, zeta2 } => {
            let m = load_model(model)?;
            let z1 = algebra(&m, zeta1)?;
            let z2 = match zeta2 {
                Some(s) => algebra(&m, s)?,
                None => z1.clone(),
            };
            let (eta, _) = bimodule::eta_from_vectors(&m, &z1, &z2, budget)?;
            Ok(Output {
                json: measure_json(&eta),
                csv: Some(bivariate_csv(&eta)),
            })
        }
        BimoduleCmd::Disintegrate { measure, axis, base } => {
            let beta = load_bivariate(measure)?;
            let axis = Axis::from_index(*axis).unwrap_or(Axis::First);
            let base = match base {
                BaseArg::Pushforward => Base::Pushforward,
                BaseArg::Haar => Base::Haar,
            };
            let d = disintegrate(&beta, axis, base)?;
            let fibers: Vec<Value> = d
                .fibers
                .iter()
                .map(|(t, f)| json!({"t": t, "total": complex_json(f.total_mass()), "points": measure_json(f)["points"].clone()}))
                .collect();
            let mut rows = Vec::new();
            for (t, f) in &d.fibers {
                for (&(a, b), c) in f.masses() {
                    rows.push(vec![t.to_string(), a.to_string(), b.to_string(), fmt_sig(c.re), fmt_sig(c.im)]);
                }
            }
            Ok(Output {
                json: json!({
                    "axis": axis,
                    "base_kind": base,
                    "base": d.base.iter().map(|c| complex_json(*c)).collect::<Vec<_>>(),
                    "fibers": fibers,
                    "reconstruction_defect": d.reconstruct().max_defect(&beta),
                }),
                csv: Some(csv_table("fiber,t,s,re,im", rows)),
            })
        }
        BimoduleCmd::Fibers { measure, axis, tail_start } => {
            let beta = load_bivariate(measure)?;
            let d = disintegrate(&beta, Axis::from_index(*axis).unwrap_or(Axis::First), Base::Pushforward)?;
            let n = opts.horizon.unwrap_or(32);
            let p = fiber_mixing_profile(&d, *tail_start, n)?;
            Ok(Output {
                csv: Some(csv_table(
                    "fiber,tail_sup",
                    p.tail_sups.iter().map(|(t, s)| vec![t.to_string(), fmt_sig(*s)]),
                )),
                json: serde_json::to_value(&p).unwrap_or(Value::Null),
            })
        }
        BimoduleCmd::Snag { koopman, f1, f2, g1, g2, h1, h2, trials } => {
            let k = load_koopman(koopman)?;
            let n = k.order();
            if [g1, g2, h1, h2].iter().any(|&&g| g >= n) {
                return Err(CliError::precondition(format!("group indices must be below |H| = {n}")));
            }
            if let Some(trials) = trials {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                let mut worst: f64 = 0.0;
                for _ in 0..*trials {
                    let (a, b) = (random_mean_zero(&k, &mut rng), random_mean_zero(&k, &mut rng));
                    let g: Vec<usize> = (0..4).map(|_| rng.gen_range(0..n)).collect();
                    worst = worst.max(k.snag_identity_check(&a, &b, g[0], g[1], g[2], g[3])?.defect);
                }
                return Ok(Output::json(json!({"trials": trials, "seed": opts.seed, "max_defect": worst})));
            }
            let a = function_arg(&k, f1, || k.centered_indicator(0))?;
            let b = function_arg(&k, f2, || a.clone())?;
            let r = k.snag_identity_check(&a, &b, *g1, *g2, *h1, *h2)?;
            Ok(Output::json(json!({"lhs": complex_json(r.lhs), "rhs": complex_json(r.rhs), "defect": r.defect})))
        }
        BimoduleCmd::Transport { koopman, mu } => {
            let k = load_koopman(koopman)?;
            match mu {
                Some(s) => {
                    let t = k.transport_s(&reals(s, "mu")?)?;
                    Ok(Output {
                        json: json!({"measure": measure_json(&t)}),
                        csv: Some(bivariate_csv(&t)),
                    })
                }
                None => {
                    let (_, mu) = k.maximal_spectral_type();
                    let t = k.transport_s(&mu)?;
                    Ok(Output {
                        json: json!({"mu": mu, "measure": measure_json(&t), "defect": k.transport_defect()?}),
                        csv: Some(bivariate_csv(&t)),
                    })
                }
            }
        }
        BimoduleCmd::Fingerprint { weights, geometric, n_max, compare_weights, compare_geometric } => {
            let fp = bimodule::fingerprint(&weights_from(weights, geometric)?, *n_max)?;
            let mut doc = serde_json::to_value(&fp).unwrap_or(Value::Null);
            if compare_weights.is_some() || compare_geometric.is_some() {
                let other = bimodule::fingerprint(&weights_from(compare_weights, compare_geometric)?, *n_max)?;
                doc["equal"] = json!(bimodule::compare(&fp, &other));
            }
            let csv = csv_table(
                "mass,weight",
                fp.blocks.iter().map(|(m, w)| vec![fmt_sig(*m), fmt_sig(*w)]),
            );
            Ok(Output { json: doc, csv: Some(csv) })
        }
    }
}

/// Runs a parsed command line; the budget comes from `SML_BUDGET`.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let budget = crate::budget::from_env();
    let opts = &cli.opts;
    match &cli.command {
        Command::Measure(c) => run_measure(c, opts),
        Command::Rankone(c) => run_rankone(c, opts, budget),
        Command::Group(c) => run_group(c, opts, budget),
        Command::Masa(c) => run_masa(c, opts),
        Command::Bimodule(c) => run_bimodule(c, opts, budget),
    }
}

/// Parses `args`, runs, writes the output and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PRECONDITION } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            let text = out.render(cli.opts.format);
            match &cli.opts.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return EXIT_PRECONDITION;
                    }
                }
                None => print!("{text}"),
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
