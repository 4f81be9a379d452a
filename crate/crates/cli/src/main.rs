use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use gptlab::compat::{
    degree_bound_closed_form, degree_bound_rhs, is_jointly_measurable, max_fuzz_lambda, min_mur_linf, JointMeasurement,
};
use gptlab::error::GptError;
use gptlab::harness::{
    load_config, random_joint, random_perturbation, run_report, verify_cor1, verify_prop_c, verify_thm1, verify_thm2,
    verify_thm3_even, EvenMode, ReportConfig, VerificationReport, DEFAULT_EPS_GRID,
};
use gptlab::ideal::{enumerate_ideal_measurements, fuzzify, psi_matrix, psi_transform, IdealMeasurement};
use gptlab::measures::{
    distribution, eigen_vertices, error_bar_width, linf_distance, localization_error, min_le_sum, overall_width,
    werner_distance,
};
use gptlab::model::{
    builtin_theory, measurement_from_json, measurement_to_json, parse_scalar, parse_vector, scalar_to_json,
    theory_from_json, validate_measurement, vector_to_json, AnyTheory, Measurement, Theory, TheoryKind,
};
use gptlab::scalar::{Rational, Scalar};
use gptlab::symmetry::{
    automorphism_group, averaged_inner_product, canonicalize, is_self_dual, is_transitive, maximally_mixed,
};

const THEORY_HELP: &str = "builtin spec (polygon:N, psi-polygon:N, disc:M, classical:N) or theory JSON file";
const MEASUREMENT_HELP: &str = "ideal:K, fuzz:LAMBDA:REF, perturb:SEED:REF, inline JSON or measurement JSON file";

#[derive(Parser)]
#[command(
    name = "gptlab",
    version,
    about = "Polytopic GPT toolkit: symmetry, uncertainty measures, joint measurability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Theory-level structure.
    Theory {
        #[command(subcommand)]
        action: TheoryAction,
    },
    /// Ideal measurement enumeration.
    Measurements {
        #[command(subcommand)]
        action: MeasurementsAction,
    },
    /// Evaluate one uncertainty measure.
    Measure(MeasureArgs),
    /// Joint measurability programs.
    Compat {
        #[command(subcommand)]
        action: CompatAction,
    },
    /// Check one uncertainty relation on explicit inputs.
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
    /// Batch verification reports.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Subcommand)]
enum TheoryAction {
    /// Group order, transitivity, maximally mixed state and self-duality.
    Analyze {
        #[arg(long, help = THEORY_HELP)]
        theory: String,
    },
}

#[derive(Subcommand)]
enum MeasurementsAction {
    /// List ideal measurements with at most `max-outcomes` outcomes.
    List {
        #[arg(long, help = THEORY_HELP)]
        theory: String,
        #[arg(long, default_value_t = 2)]
        max_outcomes: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    OverallWidth,
    LocalizationError,
    ErrorBarWidth,
    WernerDistance,
    LinfDistance,
    MinLeSum,
}

#[derive(Args)]
struct MeasureArgs {
    which: Which,
    #[arg(long, help = THEORY_HELP)]
    theory: String,
    /// Measurement (the approximation for the distance measures).
    #[arg(long, help = MEASUREMENT_HELP)]
    measurement: String,
    /// Reference measurement for the distances, second measurement for min-le-sum.
    #[arg(long)]
    other: Option<String>,
    /// State: vertex:K, mixed, or a JSON vector.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long, help = THEORY_HELP)]
    theory: String,
    #[arg(short = 'f', long = "measurement-f", help = MEASUREMENT_HELP)]
    f: String,
    #[arg(short = 'g', long = "measurement-g", help = MEASUREMENT_HELP)]
    g: String,
}

#[derive(Subcommand)]
enum CompatAction {
    /// Feasibility of a joint measurement.
    Check(PairArgs),
    /// Smallest summed l-infinity error of the marginals.
    MinMur(PairArgs),
    /// Largest fuzzing parameter making the pair compatible.
    MaxLambda(PairArgs),
    /// Upper bound on the fuzzing parameter: from the pair, or in closed form for `--n`.
    DegreeBound {
        #[arg(long, help = THEORY_HELP)]
        theory: Option<String>,
        #[arg(short = 'f', long = "measurement-f")]
        f: Option<String>,
        #[arg(short = 'g', long = "measurement-g")]
        g: Option<String>,
        /// Polygon size, or `inf` for the disc.
        #[arg(long)]
        n: Option<String>,
    },
}

#[derive(Args)]
struct JointArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// min-mur, max-fuzz, random:SEED, inline JSON grid or grid JSON file.
    #[arg(long, default_value = "min-mur")]
    joint: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Thm3Mode {
    Thm1,
    Cor1,
    Thm2,
}

#[derive(Subcommand)]
enum VerifyAction {
    /// Error-bar widths of the marginals against overall widths.
    Thm1 {
        #[command(flatten)]
        joint: JointArgs,
        #[arg(long, default_value_t = 0.2)]
        eps1: f64,
        #[arg(long, default_value_t = 0.2)]
        eps2: f64,
    },
    /// Werner distances of the marginals against overall widths.
    Cor1 {
        #[command(flatten)]
        joint: JointArgs,
        #[arg(long, default_value_t = 0.2)]
        eps1: f64,
        #[arg(long, default_value_t = 0.2)]
        eps2: f64,
    },
    /// l-infinity errors of the marginals against localization errors.
    Thm2 {
        #[command(flatten)]
        joint: JointArgs,
    },
    /// Raw even-polygon inputs checked through the psi representation.
    Thm3 {
        #[command(flatten)]
        joint: JointArgs,
        #[arg(long, value_enum, default_value = "thm1")]
        mode: Thm3Mode,
        #[arg(long, default_value_t = 0.2)]
        eps1: f64,
        #[arg(long, default_value_t = 0.2)]
        eps2: f64,
    },
    /// Error-bar width bounded by the Werner distance.
    #[command(name = "propC")]
    PropC {
        #[arg(long, help = THEORY_HELP)]
        theory: String,
        /// Approximating measurement.
        #[arg(long, help = MEASUREMENT_HELP)]
        approx: String,
        /// Ideal measurement.
        #[arg(short = 'f', long = "measurement-f", help = MEASUREMENT_HELP)]
        f: String,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum ReportAction {
    /// Run a battery and write report.json, summary.csv and plot.csv.
    Run {
        /// Battery config; the default battery covers polygons 3 to 16.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns `false` when a verification verdict fails.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Theory { action: TheoryAction::Analyze { theory } } => {
            let doc = match load_theory(&theory)? {
                AnyTheory::Exact(t) => analyze(&t)?,
                AnyTheory::Float(t) => analyze(&t)?,
            };
            print_json(&doc)
        }
        Command::Measurements { action: MeasurementsAction::List { theory, max_outcomes } } => {
            let doc = match load_theory(&theory)? {
                AnyTheory::Exact(t) => list_ideals(&ideals(&t, max_outcomes)?),
                AnyTheory::Float(t) => list_ideals(&ideals(&t, max_outcomes)?),
            };
            print_json(&doc)
        }
        Command::Measure(args) => {
            let doc = match load_theory(&args.theory)? {
                AnyTheory::Exact(t) => measure(&t, &args)?,
                AnyTheory::Float(t) => measure(&t, &args)?,
            };
            print_json(&doc)
        }
        Command::Compat { action } => {
            let doc = match action {
                CompatAction::DegreeBound { theory: None, n: Some(n), .. } => {
                    let n = if n == "inf" { None } else { Some(n.parse().context("--n must be an integer or `inf`")?) };
                    json!({ "status": "closed-form", "value": degree_bound_closed_form(n)?, "witness": Value::Null })
                }
                CompatAction::DegreeBound { theory: Some(theory), f: Some(f), g: Some(g), n: None } => {
                    let pair = PairArgs { theory, f, g };
                    match load_theory(&pair.theory)? {
                        AnyTheory::Exact(t) => compat::<Rational>(&t, &pair, CompatKind::DegreeBound)?,
                        AnyTheory::Float(t) => compat(&t, &pair, CompatKind::DegreeBound)?,
                    }
                }
                CompatAction::DegreeBound { .. } => bail!("degree-bound takes either --n or --theory with -f and -g"),
                CompatAction::Check(pair) => compat_any(&pair, CompatKind::Check)?,
                CompatAction::MinMur(pair) => compat_any(&pair, CompatKind::MinMur)?,
                CompatAction::MaxLambda(pair) => compat_any(&pair, CompatKind::MaxLambda)?,
            };
            print_json(&doc)
        }
        Command::Verify { action } => {
            let report = verify(action)?;
            print_json(&serde_json::to_value(&report)?)?;
            if !report.verdict {
                eprintln!("verdict: FAIL ({})", report.check);
            }
            Ok(report.verdict)
        }
        Command::Report { action: ReportAction::Run { config, seed, out } } => {
            let mut cfg = match &config {
                Some(path) => load_config(path).with_context(|| format!("reading {}", path.display()))?,
                None => ReportConfig::default_battery(seed.unwrap_or(0)),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_report(&cfg)?;
            report.write_to(&out)?;
            let passed = report.rows.iter().filter(|r| r.verdict).count();
            print_json(&json!({
                "out": out.display().to_string(),
                "rows": report.rows.len(),
                "passed": passed,
                "failures": report.failures.len(),
                "all_pass": report.all_pass(),
            }))?;
            Ok(report.all_pass())
        }
    }
}

/// A closed stdout (e.g. piping into `head`) is not an error.
fn print_json(v: &Value) -> Result<bool> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(true),
    }
}

// ---------------------------------------------------------------------------
// Inputs

/// A path that exists is read as JSON; anything else must be a builtin spec.
fn load_theory(src: &str) -> Result<AnyTheory> {
    if Path::new(src).is_file() {
        let v = read_json(Path::new(src))?;
        return theory_from_json(&v).with_context(|| format!("loading theory from {src}"));
    }
    builtin_theory(src).with_context(|| format!("`{src}` is neither a file nor a builtin theory"))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Inline JSON when the text starts like JSON, otherwise a file.
fn json_arg(src: &str) -> Result<Value> {
    let s = src.trim_start();
    if s.starts_with('{') || s.starts_with('[') {
        serde_json::from_str(s).context("parsing inline JSON")
    } else {
        read_json(Path::new(src))
    }
}

fn raw_even(kind: TheoryKind) -> Option<usize> {
    match kind {
        TheoryKind::Polygon { n } | TheoryKind::DiscApprox { m: n } if n % 2 == 0 => Some(n),
        _ => None,
    }
}

/// Ideal measurements of `t`. Raw even polygons are enumerated in their psi
/// representation, other nonconforming theories in canonical form, and the
/// effects are mapped back to the coordinates of `t`.
fn ideals<S: Scalar>(t: &Theory<S>, max_outcomes: usize) -> Result<Vec<IdealMeasurement<S>>> {
    let (list, back) = match raw_even(t.kind) {
        Some(n) if !S::is_exact() => {
            (enumerate_ideal_measurements(&psi_transform(&t.to_f64())?, max_outcomes)?, psi_matrix(n))
        }
        _ => match enumerate_ideal_measurements(t, max_outcomes) {
            Err(GptError::NotConforming(_)) => {
                let c = canonicalize(t)?;
                let inv = c.effect_transform.inverse(1e-12).ok_or_else(|| anyhow!("singular canonical transform"))?;
                (enumerate_ideal_measurements(&c.theory, max_outcomes)?, inv.scale(&c.rescale))
            }
            other => return Ok(other?),
        },
    };
    Ok(list
        .into_iter()
        .map(|im| {
            let mut m = Measurement::from_effects(
                im.measurement.name.clone(),
                im.measurement
                    .effects
                    .iter()
                    .map(|e| back.apply(&e.covector).into_iter().map(snap).collect())
                    .collect(),
            );
            m.outcomes = im.measurement.outcomes.clone();
            IdealMeasurement { measurement: m, provenance: im.provenance }
        })
        .collect())
}

/// Exact scalars recover small-denominator rationals from mapped-back floats.
fn snap<S: Scalar>(x: f64) -> S {
    if S::is_exact() {
        for q in 1..=64i64 {
            let p = (x * q as f64).round();
            if (x - p / q as f64).abs() < 1e-9 {
                return S::from_ratio(p as i64, q);
            }
        }
    }
    S::from_f64(x)
}

fn list_ideals<S: Scalar>(list: &[IdealMeasurement<S>]) -> Value {
    Value::Array(
        list.iter()
            .enumerate()
            .map(|(k, im)| {
                json!({
                    "index": k,
                    "measurement": measurement_to_json(&im.measurement),
                    "provenance": im.provenance,
                })
            })
            .collect(),
    )
}

fn load_measurement<S: Scalar>(t: &Theory<S>, src: &str) -> Result<Measurement<S>> {
    let m = measurement_ref(t, src)?;
    validate_measurement(t, &m).with_context(|| format!("measurement `{src}`"))?;
    Ok(m)
}

fn measurement_ref<S: Scalar>(t: &Theory<S>, src: &str) -> Result<Measurement<S>> {
    if let Some(k) = src.strip_prefix("ideal:") {
        let k: usize = k.parse().with_context(|| format!("bad index in `{src}`"))?;
        let list = ideals(t, 2)?;
        let len = list.len();
        return list
            .into_iter()
            .nth(k)
            .map(|im| im.measurement)
            .ok_or_else(|| anyhow!("ideal index {k} out of range ({len} binary ideal measurements)"));
    }
    if let Some(rest) = src.strip_prefix("fuzz:") {
        let (lambda, inner) = rest.split_once(':').ok_or_else(|| anyhow!("expected fuzz:LAMBDA:REF"))?;
        let lambda: S = parse_scalar(&Value::String(lambda.into()))?;
        return Ok(fuzzify(&measurement_ref(t, inner)?, &lambda)?);
    }
    if let Some(rest) = src.strip_prefix("perturb:") {
        let (seed, inner) = rest.split_once(':').ok_or_else(|| anyhow!("expected perturb:SEED:REF"))?;
        let seed: u64 = seed.parse().with_context(|| format!("bad seed in `{src}`"))?;
        let tf = t.to_f64();
        let base = measurement_ref(t, inner)?.to_f64();
        let m = random_perturbation(&mut ChaCha8Rng::seed_from_u64(seed), &tf, &base)?;
        let mut out = Measurement::from_effects(
            m.name.clone(),
            m.effects.iter().map(|e| e.covector.iter().map(|&x| S::from_f64(x)).collect()).collect(),
        );
        out.outcomes = m.outcomes;
        return Ok(out);
    }
    Ok(measurement_from_json(&json_arg(src)?)?)
}

fn load_state<S: Scalar>(t: &Theory<S>, src: &str) -> Result<Vec<S>> {
    if let Some(k) = src.strip_prefix("vertex:") {
        let k: usize = k.parse().with_context(|| format!("bad index in `{src}`"))?;
        return t.vertices().get(k).cloned().ok_or_else(|| anyhow!("vertex {k} out of range"));
    }
    if src == "mixed" {
        let n = S::from_i64(t.vertices().len() as i64);
        let mut w = vec![S::zero(); t.dim()];
        for v in t.vertices() {
            for (x, y) in w.iter_mut().zip(v) {
                *x = x.clone() + y.clone() / n.clone();
            }
        }
        return Ok(w);
    }
    Ok(parse_vector(&json_arg(src)?)?)
}

fn load_joint(t: &Theory<f64>, f: &Measurement<f64>, g: &Measurement<f64>, src: &str) -> Result<JointMeasurement<f64>> {
    let j = match src {
        "min-mur" => min_mur_linf(t, f, g)?.joint,
        "max-fuzz" => max_fuzz_lambda(t, f, g)?.joint,
        _ => {
            if let Some(seed) = src.strip_prefix("random:") {
                let seed: u64 = seed.parse().with_context(|| format!("bad seed in `{src}`"))?;
                let fuzz = if f.len() == 2 && g.len() == 2 { Some(max_fuzz_lambda(t, f, g)?.joint) } else { None };
                random_joint(&mut ChaCha8Rng::seed_from_u64(seed), t, f, g, fuzz.as_ref())?
            } else {
                let v = json_arg(src)?;
                let grid = v.get("effects").unwrap_or(&v);
                let rows = grid.as_array().ok_or_else(|| anyhow!("joint grid must be an array of rows"))?;
                let effects = rows
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .ok_or_else(|| anyhow!("joint grid row must be an array"))?
                            .iter()
                            .map(|e| Ok(parse_vector(e)?))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                JointMeasurement::new(f.outcomes.clone(), g.outcomes.clone(), effects)?
            }
        }
    };
    j.validate(t)?;
    Ok(j)
}

fn joint_grid<S: Scalar>(j: &JointMeasurement<S>) -> Value {
    Value::Array(j.effects.iter().map(|row| Value::Array(row.iter().map(|e| vector_to_json(e)).collect())).collect())
}

// ---------------------------------------------------------------------------
// Commands

fn analyze<S: Scalar>(t: &Theory<S>) -> Result<Value> {
    let g = automorphism_group(t)?;
    let transitive = is_transitive(&g, t);
    let omega = if transitive { vector_to_json(&maximally_mixed(t, &g)?) } else { Value::Null };
    let averaged = averaged_inner_product(&g)?;
    Ok(json!({
        "name": t.name,
        "kind": t.kind,
        "dim": t.dim(),
        "vertices": t.vertices().len(),
        "exact": S::is_exact(),
        "group_order": g.order(),
        "transitive": transitive,
        "maximally_mixed": omega,
        "self_dual": is_self_dual(t, &averaged)?,
        "self_dual_given_inner": is_self_dual(t, t.inner())?,
    }))
}

fn measure<S: Scalar>(t: &Theory<S>, args: &MeasureArgs) -> Result<Value> {
    let m = load_measurement(t, &args.measurement)?;
    let other = || -> Result<Measurement<S>> {
        load_measurement(t, args.other.as_deref().ok_or_else(|| anyhow!("this measure needs --other"))?)
    };
    let state = || -> Result<Vec<S>> {
        load_state(t, args.state.as_deref().ok_or_else(|| anyhow!("this measure needs --state"))?)
    };
    let eps = || -> Result<S> {
        Ok(parse_scalar(&Value::String(args.epsilon.clone().ok_or_else(|| anyhow!("this measure needs --epsilon"))?))?)
    };
    let (value, witness) = match args.which {
        Which::OverallWidth => {
            let w = state()?;
            let d = distribution(t, &m, &w)?;
            (
                overall_width(&d, &eps()?)?,
                json!({ "state": vector_to_json(&w), "probabilities": vector_to_json(&d.probs) }),
            )
        }
        Which::LocalizationError => {
            let w = state()?;
            let d = distribution(t, &m, &w)?;
            (localization_error(&d), json!({ "state": vector_to_json(&w), "probabilities": vector_to_json(&d.probs) }))
        }
        Which::ErrorBarWidth => {
            let ideal = other()?;
            let faces: Vec<Vec<usize>> = ideal.effects.iter().map(|e| eigen_vertices(t, &e.covector)).collect();
            (error_bar_width(t, &m, &ideal, &eps()?)?, json!({ "eigen_vertices": faces }))
        }
        Which::WernerDistance => (werner_distance(t, &m, &other()?)?, Value::Null),
        Which::LinfDistance => {
            let o = other()?;
            let value = linf_distance(t, &m, &o)?;
            let mut best = (S::zero(), 0, 0);
            for (k, w) in t.vertices().iter().enumerate() {
                for (a, (x, y)) in m.effects.iter().zip(&o.effects).enumerate() {
                    let gap = (t.pair(&x.covector, w) - t.pair(&y.covector, w)).abs();
                    if (gap.clone() - best.0.clone()).sign_tol(0.0).is_gt() {
                        best = (gap, k, a);
                    }
                }
            }
            (value, json!({ "vertex": best.1, "outcome": m.outcomes[best.2] }))
        }
        Which::MinLeSum => {
            let r = min_le_sum(t, &m, &other()?);
            (r.value, json!({ "state": vector_to_json(&r.argmin) }))
        }
    };
    Ok(json!({ "value": scalar_to_json(&value), "value_f64": value.to_f64(), "witness": witness }))
}

#[derive(Clone, Copy)]
enum CompatKind {
    Check,
    MinMur,
    MaxLambda,
    DegreeBound,
}

fn compat_any(pair: &PairArgs, kind: CompatKind) -> Result<Value> {
    match load_theory(&pair.theory)? {
        AnyTheory::Exact(t) => compat::<Rational>(&t, pair, kind),
        AnyTheory::Float(t) => compat(&t, pair, kind),
    }
}

fn compat<S: Scalar>(t: &Theory<S>, pair: &PairArgs, kind: CompatKind) -> Result<Value> {
    let f = load_measurement(t, &pair.f)?;
    let g = load_measurement(t, &pair.g)?;
    let out = |status: &str, value: Option<&S>, witness: Value| {
        json!({
            "status": status,
            "value": value.map_or(Value::Null, scalar_to_json),
            "value_f64": value.map(|v| v.to_f64()),
            "witness": witness,
        })
    };
    Ok(match kind {
        CompatKind::Check => {
            let c = is_jointly_measurable(t, &f, &g)?;
            let status = if c.compatible { "compatible" } else { "incompatible" };
            out(status, None, c.witness.as_ref().map_or(Value::Null, joint_grid))
        }
        CompatKind::MinMur => {
            let r = min_mur_linf(t, &f, &g)?;
            let mut doc = out("optimal", Some(&r.value), joint_grid(&r.joint));
            doc["t1"] = scalar_to_json(&r.t1);
            doc["t2"] = scalar_to_json(&r.t2);
            doc
        }
        CompatKind::MaxLambda => {
            let r = max_fuzz_lambda(t, &f, &g)?;
            out("optimal", Some(&r.lambda), joint_grid(&r.joint))
        }
        CompatKind::DegreeBound => out("bound", Some(&degree_bound_rhs(t, &f, &g)?), Value::Null),
    })
}

fn verify(action: VerifyAction) -> Result<VerificationReport> {
    let inputs = |j: &JointArgs| -> Result<(Theory<f64>, Measurement<f64>, Measurement<f64>, JointMeasurement<f64>)> {
        let t = load_theory(&j.pair.theory)?.to_f64();
        let f = load_measurement(&t, &j.pair.f)?;
        let g = load_measurement(&t, &j.pair.g)?;
        let joint = load_joint(&t, &f, &g, &j.joint)?;
        Ok((t, f, g, joint))
    };
    Ok(match action {
        VerifyAction::Thm1 { joint, eps1, eps2 } => {
            let (t, f, g, j) = inputs(&joint)?;
            verify_thm1(&t, &f, &g, &j, eps1, eps2)?
        }
        VerifyAction::Cor1 { joint, eps1, eps2 } => {
            let (t, f, g, j) = inputs(&joint)?;
            verify_cor1(&t, &f, &g, &j, eps1, eps2)?
        }
        VerifyAction::Thm2 { joint } => {
            let (t, f, g, j) = inputs(&joint)?;
            verify_thm2(&t, &f, &g, &j)?
        }
        VerifyAction::Thm3 { joint, mode, eps1, eps2 } => {
            let (t, f, g, j) = inputs(&joint)?;
            let mode = match mode {
                Thm3Mode::Thm1 => EvenMode::Thm1 { eps1, eps2 },
                Thm3Mode::Cor1 => EvenMode::Cor1 { eps1, eps2 },
                Thm3Mode::Thm2 => EvenMode::Thm2,
            };
            verify_thm3_even(&t, &f, &g, &j, mode)?
        }
        VerifyAction::PropC { theory, approx, f, eps } => {
            let t = load_theory(&theory)?.to_f64();
            let ft = load_measurement(&t, &approx)?;
            let f = load_measurement(&t, &f)?;
            let grid = if eps.is_empty() { DEFAULT_EPS_GRID.to_vec() } else { eps };
            verify_prop_c(&t, &ft, &f, &grid)?
        }
    })
}
