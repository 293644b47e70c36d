//! The `skan` command line: load an instance, run validators and checkers,
//! compute lifts, and print text or JSON reports.
//!
//! Exit codes: 0 when everything passes, 1 when a check finds violations,
//! 2 for unreadable input or an invalid configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::awfs::{
    check_d_squares, decompose_horizontal_with, expected_d_square_instances, expected_square_instances, face_squares, probe_decomposability,
    sweep_squares, AwfsError, Decomposition, Lifts, SquareJson, WordChoice,
};
use crate::kan::{
    brute_force_problem_count, check_degenerate_preferring, check_effective, check_lifts, check_symmetric_effective,
    degenerate_filler, degenerate_preferring_assignment, expected_effective_instances, expected_symmetric_instances,
    sample_problems, CheckReport, Fibration, FirstFiller, KanError, LiftingProblem, LiftingStructure,
    MalcevLifting, SignedLifts,
};
use crate::salg::{
    cocycle_algebra, constant_algebra, nerve_abelian, section_from_point, terminal, FiniteGroup,
    FiniteMalcevAlgebra, SalgError, SimplicialSet, SimplicialSetJson,
};
use crate::sieve::HornSpec;

#[derive(Debug, Parser)]
#[command(name = "skan", version, about = "Horn filling and lifting checks on finite truncated simplicial sets")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Worker threads for sweeps. Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Refuse exhaustive runs whose estimated size exceeds this.
    #[arg(long, default_value_t = 10_000_000, global = true)]
    cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct Instance {
    /// `nerve:<group>`, `constant:<algebra>`, `k2:<group>`, `terminal` or
    /// `file:<path>`. Groups: `Z<k>`, `Z2xZ2`, `S3`; algebras additionally
    /// `trivial`, `heyting2`, `heyting3`.
    #[arg(long, default_value = "nerve:Z2")]
    generator: String,
    /// Truncation level for builtin generators; files carry their own.
    #[arg(long)]
    truncation: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LiftChoice {
    /// The Malcev filler built from the section at the first vertex.
    Malcev,
    /// The first filler by element index.
    First,
    /// The degenerate filler when there is one, else the first filler.
    DpFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Kan,
    Dp,
    Symmetric,
    Effective,
    Dsquares,
    Facesquares,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the simplicial identities and Malcev axioms of an instance.
    Validate {
        /// A JSON instance; overrides --generator.
        file: Option<PathBuf>,
        #[command(flatten)]
        instance: Instance,
    },
    /// Fill one horn.
    Lift {
        #[command(flatten)]
        instance: Instance,
        /// The horn as `n,m`.
        #[arg(long)]
        horn: String,
        /// Names of the facets `x_k`, `k ≠ m`, in ascending order of `k`.
        #[arg(long, num_args = 1.., required = true)]
        facets: Vec<String>,
        /// Name of the base simplex; optional over a point.
        #[arg(long)]
        base: Option<String>,
        /// Print the helper values of the Malcev construction.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = LiftChoice::Malcev)]
        lifts: LiftChoice,
    },
    /// Run one checker exhaustively, or on seeded samples.
    Check {
        #[arg(value_enum)]
        property: Property,
        #[command(flatten)]
        instance: Instance,
        /// Largest horn dimension; defaults to the largest the checker allows.
        #[arg(long)]
        maxdim: Option<usize>,
        #[arg(long, value_enum, default_value_t = LiftChoice::Malcev)]
        lifts: LiftChoice,
        /// Sample problems with this seed instead of enumerating (kan, dp).
        #[arg(long, requires = "samples")]
        seed: Option<u64>,
        /// Problems sampled per horn.
        #[arg(long, requires = "seed")]
        samples: Option<usize>,
    },
    /// Decompose a square of horn pushout sequences into face and
    /// degeneracy squares, or probe all small squares.
    AwfsDecompose {
        /// A JSON square; without it every square with a one-step target
        /// on ambients up to --max-ambient is tried.
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        max_ambient: usize,
        /// Search nodes allowed per square.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        /// Try every shortest factorization of the map, not only the
        /// canonical one.
        #[arg(long)]
        all_words: bool,
    },
    /// Validate and run every checker.
    Report {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        maxdim: Option<usize>,
        #[arg(long, value_enum, default_value_t = LiftChoice::Malcev)]
        lifts: LiftChoice,
    },
}

/// Failure modes mapped to exit codes.
#[derive(Debug)]
enum CliError {
    /// Unreadable input or invalid configuration (exit 2).
    Config(String),
    /// A precondition of the requested computation failed (exit 1).
    Failed(String),
}

impl From<SalgError> for CliError {
    fn from(e: SalgError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<KanError> for CliError {
    fn from(e: KanError) -> Self {
        match e {
            KanError::IncompatibleFacets { .. } | KanError::NotOverBase { .. } => CliError::Failed(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<AwfsError> for CliError {
    fn from(e: AwfsError) -> Self {
        match e {
            AwfsError::Kan(k) => k.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

struct Outcome {
    ok: bool,
    output: String,
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.output);
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Validate { file, instance } => validate(cli, file.as_ref(), instance),
        Command::Lift {
            instance,
            horn,
            facets,
            base,
            trace,
            lifts,
        } => lift(cli, instance, horn, facets, base.as_deref(), *trace, *lifts),
        Command::Check {
            property,
            instance,
            maxdim,
            lifts,
            seed,
            samples,
        } => {
            let fib = Fibration::over_point(load(instance)?);
            let maxdim = resolve_maxdim(&fib, *property, *maxdim)?;
            let report = match (seed, samples) {
                (Some(seed), Some(samples)) => sampled_check(&fib, *property, maxdim, *lifts, *seed, *samples)?,
                _ => {
                    check_estimate(&fib, maxdim, cli.cap)?;
                    run_check(&fib, *property, maxdim, *lifts, cli.cap)?
                }
            };
            Ok(Outcome {
                ok: report.is_ok(),
                output: render_check(cli.format, &report),
            })
        }
        Command::AwfsDecompose {
            file,
            max_ambient,
            budget,
            all_words,
        } => {
            let words = if *all_words {
                WordChoice::AllMinimal
            } else {
                WordChoice::Canonical
            };
            decompose(cli, file.as_ref(), *max_ambient, *budget, words)
        }
        Command::Report {
            instance,
            maxdim,
            lifts,
        } => report(cli, instance, *maxdim, *lifts),
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))
}

fn group(name: &str) -> Result<FiniteGroup, CliError> {
    FiniteGroup::builtin(name).ok_or_else(|| CliError::Config(format!("unknown group {name}")))
}

/// Build the instance named by `--generator`. Files are validated.
fn load(instance: &Instance) -> Result<SimplicialSet, CliError> {
    let truncation = instance.truncation.unwrap_or(3);
    let (kind, arg) = instance.generator.split_once(':').unwrap_or((instance.generator.as_str(), ""));
    Ok(match kind {
        "nerve" => nerve_abelian(&group(arg)?, truncation)?,
        "k2" => cocycle_algebra(&group(arg)?, truncation)?,
        "constant" => {
            let algebra = FiniteMalcevAlgebra::builtin(arg)
                .ok_or_else(|| CliError::Config(format!("unknown algebra {arg}")))?;
            constant_algebra(&algebra, truncation)
        }
        "terminal" => terminal(truncation),
        "file" => {
            let x = SimplicialSet::from_json_str(&read(&PathBuf::from(arg))?)?;
            check_file_truncation(instance, &x)?;
            x
        }
        _ => return Err(CliError::Config(format!("unknown generator {}", instance.generator))),
    })
}

fn check_file_truncation(instance: &Instance, x: &SimplicialSet) -> Result<(), CliError> {
    match instance.truncation {
        Some(t) if t != x.truncation() => Err(CliError::Config(format!(
            "--truncation {t} does not match the file's truncation {}",
            x.truncation()
        ))),
        _ => Ok(()),
    }
}

fn with_lifts<T>(
    fib: &Fibration,
    choice: LiftChoice,
    f: impl FnOnce(&dyn LiftingStructure, Option<&MalcevLifting<'_>>) -> Result<T, CliError>,
) -> Result<T, CliError> {
    match choice {
        LiftChoice::Malcev => {
            let (_, _, beta) = section_from_point(fib.total(), 0)?;
            let lifting = MalcevLifting::new(fib, &beta)?;
            f(&lifting, Some(&lifting))
        }
        LiftChoice::First => f(&FirstFiller { fib }, None),
        LiftChoice::DpFirst => {
            let first = FirstFiller { fib };
            f(&degenerate_preferring_assignment(fib, &first), None)
        }
    }
}

fn validate(cli: &Cli, file: Option<&PathBuf>, instance: &Instance) -> Result<Outcome, CliError> {
    let x = match file {
        Some(path) => {
            let raw: SimplicialSetJson = parse_json(&read(path)?)?;
            let x = raw.to_set()?;
            check_file_truncation(instance, &x)?;
            x
        }
        None => load(instance)?,
    };
    let report = x.validate();
    let output = match cli.format {
        Format::Json => pretty(&json!({
            "checked": report.checked,
            "violations": report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut out = String::new();
            if report.is_ok() {
                writeln!(out, "ok: {} identity instances checked", report.checked).unwrap();
            } else {
                writeln!(out, "{} violations in {} instances", report.violations.len(), report.checked).unwrap();
                for v in &report.violations {
                    writeln!(out, "  {v}").unwrap();
                }
            }
            out
        }
    };
    Ok(Outcome {
        ok: report.is_ok(),
        output,
    })
}

fn parse_horn(text: &str) -> Result<HornSpec, CliError> {
    let bad = || CliError::Config(format!("--horn expects n,m, got {text}"));
    let (n, m) = text.split_once(',').ok_or_else(bad)?;
    let n = n.trim().parse().map_err(|_| bad())?;
    let m = m.trim().parse().map_err(|_| bad())?;
    HornSpec::new(n, m).map_err(|e| CliError::Config(e.to_string()))
}

fn lift(
    cli: &Cli,
    instance: &Instance,
    horn: &str,
    facets: &[String],
    base: Option<&str>,
    trace: bool,
    choice: LiftChoice,
) -> Result<Outcome, CliError> {
    let spec = parse_horn(horn)?;
    if trace && choice != LiftChoice::Malcev {
        return Err(CliError::Config("--trace needs --lifts malcev".into()));
    }
    let fib = Fibration::over_point(load(instance)?);
    let n = spec.n();
    fib.require_level(n)?;
    if facets.len() != n {
        return Err(CliError::Config(format!("{spec} needs {n} facets, got {}", facets.len())));
    }
    for name in facets {
        fib.total().lookup(n - 1, name)?;
    }
    let p = LiftingProblem::from_names(&fib, spec, facets, base)?;
    let x = fib.total();
    with_lifts(&fib, choice, |lifts, malcev| {
        let filler = lifts.lift(&p)?;
        let steps = match (trace, malcev) {
            (true, Some(m)) => m.trace(&p)?,
            _ => Vec::new(),
        };
        let output = match cli.format {
            Format::Json => {
                let mut value = json!({
                    "problem": p.encode(&fib),
                    "filler": x.name(n, filler),
                });
                if trace {
                    value["trace"] = steps
                        .iter()
                        .map(|s| json!({"index": s.index, "value": x.name(n, s.value)}))
                        .collect();
                }
                pretty(&value)
            }
            Format::Text => {
                let mut out = format!("filler: {}\n", x.name(n, filler));
                for s in &steps {
                    writeln!(out, "w_{} = {}", s.index, x.name(n, s.value)).unwrap();
                }
                out
            }
        };
        Ok(Outcome { ok: true, output })
    })
}

/// Largest useful maxdim per checker, and the refusal when asked for more.
fn resolve_maxdim(fib: &Fibration, property: Property, maxdim: Option<usize>) -> Result<usize, CliError> {
    let truncation = fib.truncation();
    let limit = match property {
        Property::Symmetric | Property::Effective => truncation.checked_sub(1).filter(|&l| l >= 1),
        _ => Some(truncation).filter(|&l| l >= 1),
    }
    .ok_or_else(|| CliError::Config(format!("truncation {truncation} is too small for this check")))?;
    let maxdim = maxdim.unwrap_or(limit);
    if maxdim == 0 || maxdim > limit {
        return Err(CliError::Config(format!(
            "--maxdim must lie in 1..={limit} for this check at truncation {truncation}"
        )));
    }
    Ok(maxdim)
}

/// Upper bound on the number of problems: every facet tuple over every
/// base simplex.
fn estimated_problems(fib: &Fibration, maxdim: usize) -> f64 {
    (1..=maxdim)
        .map(|n| {
            let facets = (fib.total().len(n - 1) as f64).powi(n as i32);
            (n + 1) as f64 * facets * fib.base().len(n) as f64
        })
        .sum()
}

fn check_estimate(fib: &Fibration, maxdim: usize, cap: usize) -> Result<(), CliError> {
    let estimate = estimated_problems(fib, maxdim);
    if estimate > cap as f64 {
        return Err(CliError::Config(format!(
            "refusing an exhaustive sweep of about {estimate:.0} problems (cap {cap}); lower --maxdim, \
             raise --cap, or sample with --seed and --samples"
        )));
    }
    Ok(())
}

fn run_check(
    fib: &Fibration,
    property: Property,
    maxdim: usize,
    choice: LiftChoice,
    cap: usize,
) -> Result<CheckReport, CliError> {
    with_lifts(fib, choice, |lifts, _| {
        Ok(match property {
            Property::Kan => check_lifts(fib, lifts, maxdim)?.with_expected(brute_force_problem_count(fib, maxdim)?),
            Property::Dp => check_degenerate_preferring(fib, lifts, maxdim)?
                .with_expected(brute_force_problem_count(fib, maxdim)?),
            Property::Symmetric => check_symmetric_effective(fib, lifts, maxdim)?
                .with_expected(expected_symmetric_instances(fib, maxdim)?),
            Property::Effective => check_effective(fib, &SignedLifts::duplicated(lifts), maxdim)?
                .with_expected(expected_effective_instances(fib, maxdim)?),
            Property::Dsquares => {
                check_d_squares(fib, lifts, maxdim)?.with_expected(expected_d_square_instances(fib, maxdim))
            }
            Property::Facesquares => {
                let squares = face_squares(maxdim.min(3), 2, false, cap)?;
                sweep_squares("facesquares", fib, Lifts::Plain(lifts), &squares, cap)?
                    .with_expected(expected_square_instances(fib, &squares)?)
            }
        })
    })
}

fn sampled_check(
    fib: &Fibration,
    property: Property,
    maxdim: usize,
    choice: LiftChoice,
    seed: u64,
    samples: usize,
) -> Result<CheckReport, CliError> {
    if !matches!(property, Property::Kan | Property::Dp) {
        return Err(CliError::Config("sampling is available for kan and dp only".into()));
    }
    let mut problems = Vec::new();
    for n in 1..=maxdim {
        for spec in HornSpec::all(n) {
            problems.extend(sample_problems(fib, spec, samples, seed)?);
        }
    }
    with_lifts(fib, choice, |lifts, _| {
        let mut failures = Vec::new();
        for p in &problems {
            let n = p.spec().n();
            let lifted = lifts.lift(p)?;
            let expected = match property {
                Property::Dp => degenerate_filler(fib, p),
                _ => None,
            };
            let ok = fib.solves(p, lifted) && expected.is_none_or(|e| e == lifted);
            if !ok {
                let mut failure = json!({"problem": p.encode(fib), "lift": fib.total().name(n, lifted)});
                if let Some(e) = expected {
                    failure["expected"] = json!(fib.total().name(n, e));
                }
                failures.push(failure);
            }
        }
        let name = match property {
            Property::Dp => "dp-sampled",
            _ => "kan-sampled",
        };
        Ok(CheckReport::new(name, problems.len(), failures))
    })
}

fn render_check(format: Format, report: &CheckReport) -> String {
    match format {
        Format::Json => pretty(&report.to_json()),
        Format::Text => {
            let mut out = String::new();
            write!(out, "{}: {} instances", report.checker, report.instances).unwrap();
            if let Some(expected) = report.expected_instances {
                write!(out, " (expected {expected})").unwrap();
            }
            writeln!(out, ", {} failures", report.failures.len()).unwrap();
            for failure in &report.failures {
                writeln!(out, "  {failure}").unwrap();
            }
            out
        }
    }
}

fn decompose(
    cli: &Cli,
    file: Option<&PathBuf>,
    max_ambient: usize,
    budget: usize,
    words: WordChoice,
) -> Result<Outcome, CliError> {
    let Some(path) = file else {
        let report = probe_decomposability(max_ambient, budget, words, cli.cap)?;
        let output = match cli.format {
            Format::Json => pretty(&serde_json::to_value(&report).expect("reports serialize")),
            Format::Text => {
                let mut out = format!(
                    "{} squares, {} decomposed, {} not found ({} stopped by the budget)\n",
                    report.squares,
                    report.decomposed,
                    report.not_found.len(),
                    report.budget_exhausted
                );
                for sq in &report.not_found {
                    writeln!(out, "  {sq}").unwrap();
                }
                out
            }
        };
        return Ok(Outcome { ok: true, output });
    };
    let raw: SquareJson = parse_json(&read(path)?)?;
    let sq = raw.to_square()?;
    let (ok, value) = match decompose_horizontal_with(&sq, budget, words) {
        Decomposition::Found(parts) => (
            true,
            json!({
                "found": true,
                "squares": parts.iter().map(|p| p.to_value()).collect::<Vec<_>>(),
            }),
        ),
        Decomposition::NotFound {
            explored,
            budget_exhausted,
        } => (
            false,
            json!({"found": false, "explored": explored, "budget_exhausted": budget_exhausted}),
        ),
    };
    let output = match cli.format {
        Format::Json => pretty(&value),
        Format::Text => match &value["squares"] {
            Value::Array(parts) => {
                let mut out = format!("decomposed into {} squares\n", parts.len());
                for p in parts {
                    writeln!(out, "  {p}").unwrap();
                }
                out
            }
            _ => format!(
                "no decomposition found after {} search nodes{}\n",
                value["explored"],
                if value["budget_exhausted"] == true {
                    " (budget exhausted)"
                } else {
                    ""
                }
            ),
        },
    };
    Ok(Outcome { ok, output })
}

fn report(cli: &Cli, instance: &Instance, maxdim: Option<usize>, choice: LiftChoice) -> Result<Outcome, CliError> {
    let x = load(instance)?;
    let validation = x.validate();
    let fib = Fibration::over_point(x);
    let mut reports = Vec::new();
    for property in [
        Property::Kan,
        Property::Dp,
        Property::Symmetric,
        Property::Effective,
        Property::Dsquares,
        Property::Facesquares,
    ] {
        let Ok(limit) = resolve_maxdim(&fib, property, None) else {
            continue;
        };
        let d = maxdim.map_or(limit, |m| m.min(limit));
        check_estimate(&fib, d, cli.cap)?;
        reports.push(run_check(&fib, property, d, choice, cli.cap)?);
    }
    let ok = validation.is_ok() && reports.iter().all(CheckReport::is_ok);
    let output = match cli.format {
        Format::Json => pretty(&json!({
            "generator": instance.generator,
            "truncation": fib.truncation(),
            "validation": {
                "checked": validation.checked,
                "violations": validation.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            },
            "checks": reports.iter().map(CheckReport::to_json).collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut out = format!("{} at truncation {}\n", instance.generator, fib.truncation());
            let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
            writeln!(
                out,
                "{} validate: {} instances, {} violations",
                mark(validation.is_ok()),
                validation.checked,
                validation.violations.len()
            )
            .unwrap();
            for r in &reports {
                write!(out, "{} {}", mark(r.is_ok()), render_check(Format::Text, r)).unwrap();
            }
            out
        }
    };
    Ok(Outcome { ok, output })
}

fn pretty(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    text
}
