//! Command-line front end: run mechanisms, audit matchings, enumerate
//! stable sets, inspect improvement graphs, check incentive axioms,
//! characterize variable-population mechanisms, reproduce the bundled
//! fixtures, and drive the property sweeps.
//!
//! Reports are emitted as JSON documents (`--format json`, the default) or
//! a human-readable table. JSON documents are deterministic for a given
//! seed; timing goes to stderr.

use std::collections::BTreeMap;
use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use school_choice::axioms::{self, Axiom, BaseProfiles, SearchScope};
use school_choice::charax::{verify_characterization, DaPriority, VariablePopulationMechanism, VpScope};
use school_choice::cycles;
use school_choice::fixtures;
use school_choice::instance::{
    matching_from_document, matching_to_document, parse_instance, Instance,
};
use school_choice::mechanisms::{
    boston_traced, da_student_traced, school_median, serial_dictatorship, Mechanism, Trace,
    DEFAULT_BUDGET,
};
use school_choice::model::{
    Matching, Preference, PreferenceProfile, SchoolChoiceContext, StudentId,
};
use school_choice::stability::{audit_matching, enumerate_stable};
use school_choice::sweeps::{run_sweep, GridBounds};

const BUDGET_ENV: &str = "SCHOOL_CHOICE_BUDGET";

fn budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Parser)]
#[command(
    name = "school-choice",
    about = "School-choice mechanisms and their verification harness",
    version
)]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on an instance and print the matching.
    Run(RunArgs),
    /// Audit a matching against an instance.
    Audit {
        #[arg(long)]
        instance: String,
        /// A matching document `{student: school-or-s0}`.
        #[arg(long)]
        matching: String,
    },
    /// Enumerate the stable set of an instance by brute force.
    Enumerate {
        #[arg(long)]
        instance: String,
    },
    /// Build the improvement graph between the outcomes of two profiles,
    /// replace blocked edges, and report the extracted cycle.
    Cycles {
        #[arg(long)]
        instance: String,
        /// Preferences document for the baseline run.
        #[arg(long)]
        profile_a: String,
        /// Preferences document for the comparison run.
        #[arg(long)]
        profile_b: String,
        /// The deviating student; the two profiles must agree elsewhere.
        #[arg(long)]
        student: String,
    },
    /// Check one incentive axiom for a mechanism on an instance.
    Check(CheckArgs),
    /// Run the characterization engine over a universe document.
    Characterize {
        #[arg(long)]
        mechanism: String,
        /// Instance document; preferences are ignored.
        #[arg(long)]
        universe: String,
        /// Exhaustive profile scope (the default below five students).
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 200)]
        samples: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Re-run a bundled fixture (or all of them) and diff expected values.
    Reproduce {
        /// Fixture name, or `all`.
        #[arg(default_value = "all")]
        fixture: String,
    },
    /// Run a named property sweep.
    Sweep {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long, default_value_t = 3)]
        qmax: usize,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        coalition: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// One of: da, da-school, boston, sd, median.
    #[arg(long)]
    mechanism: String,
    #[arg(long)]
    instance: String,
    /// Picking order for the serial dictatorship, e.g. `--order 4,3,2,1`.
    #[arg(long)]
    order: Option<String>,
    /// Include the per-round proposal trace.
    #[arg(long)]
    trace: bool,
    /// Colleague-domain profile document, for `--mechanism da-bar`.
    #[arg(long)]
    ext_profile: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    /// Axiom name, e.g. strategy-proof, local-non-bossy, weak-non-bossy,
    /// group-strategy-proof, colleague-disjointness, ...
    #[arg(long)]
    axiom: String,
    /// Mechanism name: da, da-school, boston, sd, median, or a fixture
    /// mechanism (fx-a1-omega ... fx-l3-omega, on its home instance).
    #[arg(long)]
    mechanism: String,
    #[arg(long)]
    instance: String,
    /// Largest coalition size for group axioms.
    #[arg(long, default_value_t = 3)]
    coalition: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Enumerate every base profile instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, default_value_t = 500)]
    samples: u64,
    /// Collect every counterexample instead of stopping at the first.
    #[arg(long)]
    all: bool,
}

fn load_instance(path: &str) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    Ok(parse_instance(&text)?)
}

fn load_profile(path: &str, ctx: &SchoolChoiceContext) -> Result<PreferenceProfile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let map: BTreeMap<String, Vec<String>> = serde_json::from_str(&text)?;
    if map.len() != ctx.n_students() {
        bail!("profile document covers {} of {} students", map.len(), ctx.n_students());
    }
    let mut prefs: Vec<Option<Preference>> = vec![None; ctx.n_students()];
    for (name, ranking) in &map {
        let owner = ctx.student_by_name(name)?;
        let alts = ranking
            .iter()
            .map(|a| ctx.alternative_by_name(a))
            .collect::<Result<Vec<_>, _>>()?;
        prefs[owner.index()] = Some(Preference::new(owner, alts, ctx.n_schools())?);
    }
    Ok(PreferenceProfile::new(
        prefs.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| anyhow!("missing student"))?,
    )?)
}

fn matching_json(m: &Matching, ctx: &SchoolChoiceContext) -> Value {
    serde_json::to_value(matching_to_document(m, ctx)).expect("serializable")
}

fn trace_json(trace: &Trace, ctx: &SchoolChoiceContext) -> Value {
    Value::Array(
        trace
            .iter()
            .enumerate()
            .map(|(round, r)| {
                json!({
                    "round": round + 1,
                    "proposals": r.proposals.iter().map(|(i, s)| json!([ctx.student_name(*i), ctx.school_name(*s)])).collect::<Vec<_>>(),
                    "rejections": r.rejections.iter().map(|(i, s)| json!([ctx.student_name(*i), ctx.school_name(*s)])).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

fn students_json(ids: &[StudentId], ctx: &SchoolChoiceContext) -> Value {
    Value::Array(ids.iter().map(|&i| Value::String(ctx.student_name(i).to_string())).collect())
}

fn parse_order(text: &str, ctx: &SchoolChoiceContext) -> Result<Vec<StudentId>> {
    text.split(',')
        .map(|name| Ok(ctx.student_by_name(name.trim())?))
        .collect()
}

fn fixed_mechanism(
    name: &str,
    instance: &Instance,
    order: Option<&str>,
) -> Result<Box<dyn Mechanism>> {
    let mech: Box<dyn Mechanism> = match name {
        "da" => Box::new(school_choice::mechanisms::DaStudent),
        "da-school" => Box::new(school_choice::mechanisms::DaSchool),
        "boston" => Box::new(school_choice::mechanisms::Boston),
        "median" => Box::new(school_choice::mechanisms::SchoolMedian { budget: budget() }),
        "sd" => {
            let ctx = instance.require_responsive()?;
            let text = order.ok_or_else(|| anyhow!("serial dictatorship needs --order"))?;
            let order = parse_order(text, ctx)?;
            serial_dictatorship(ctx, instance.require_profile()?, &order)?;
            Box::new(school_choice::mechanisms::SerialDictatorship { order })
        }
        "da-choice" => Box::new(school_choice::choicefn::ChoiceDa {
            choices: instance.choices.clone(),
        }),
        "fx-a1-omega" => fixture_mech(instance, fixtures::fx_a1_context(), Box::new(fixtures::FxA1Omega::default()))?,
        "fx-a2-omega" => fixture_mech(instance, fixtures::fx_a2_context(), Box::new(fixtures::FxA2Omega))?,
        "fx-a3-omega" => fixture_mech(instance, fixtures::fx_a3_context(), Box::new(fixtures::FxA3Omega))?,
        "fx-a4-omega" => fixture_mech(instance, fixtures::fx_a4_context(), Box::new(fixtures::FxA4Omega))?,
        "fx-l3-omega" => fixture_mech(instance, fixtures::fx_l3_context(), Box::new(fixtures::FxL3Omega))?,
        other => bail!("unknown mechanism `{other}`"),
    };
    Ok(mech)
}

fn fixture_mech(
    instance: &Instance,
    home: SchoolChoiceContext,
    mech: Box<dyn Mechanism>,
) -> Result<Box<dyn Mechanism>> {
    if instance.context != home {
        bail!("this fixture mechanism is defined on its home instance only");
    }
    Ok(mech)
}

fn emit(format: Format, doc: &Value) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(doc).expect("serializable")),
        Format::Table => print_table(doc, 0),
    }
}

fn print_table(doc: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match doc {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}{k}:");
                        print_table(v, indent + 1);
                    }
                    other => println!("{pad}{k}: {other}"),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}-");
                        print_table(item, indent + 1);
                    }
                    other => println!("{pad}- {other}"),
                }
            }
        }
        other => println!("{pad}{other}"),
    }
}

fn audit_json(
    m: &Matching,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> Result<Value> {
    let report = audit_matching(m, ctx, profile)?;
    Ok(json!({
        "stable": report.stable,
        "individually_rational": report.individually_rational,
        "ir_violations": students_json(&report.ir_violations, ctx),
        "wasteful_pairs": report.wasteful_pairs.iter().map(|(i, s)| json!([ctx.student_name(*i), ctx.school_name(*s)])).collect::<Vec<_>>(),
        "envy_triples": report.envy_triples.iter().map(|(i, s, j)| json!([ctx.student_name(*i), ctx.school_name(*s), ctx.student_name(*j)])).collect::<Vec<_>>(),
        "blocking_pairs": report.blocking_pairs.iter().map(|(i, s)| json!([ctx.student_name(*i), ctx.school_name(*s)])).collect::<Vec<_>>(),
    }))
}

fn run_command(args: &RunArgs, format: Format) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    if args.mechanism == "da-bar" {
        let ctx = instance.require_responsive()?;
        let path = args
            .ext_profile
            .as_deref()
            .ok_or_else(|| anyhow!("da-bar needs --ext-profile"))?;
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let (profile, defaulted) =
            school_choice::externalities::parse_colleague_profile(&text, ctx)?;
        if !defaulted.is_empty() {
            let names: Vec<&str> = defaulted.iter().map(|&i| ctx.student_name(i)).collect();
            eprintln!(
                "note: colleague orders defaulted to index-lexicographic for: {}",
                names.join(", ")
            );
        }
        let matching = school_choice::externalities::da_bar(ctx, &profile);
        let doc = json!({
            "mechanism": "da-bar",
            "matching": matching_json(&matching, ctx),
            "defaulted_colleague_orders": defaulted.iter().map(|&i| ctx.student_name(i)).collect::<Vec<_>>(),
        });
        emit(format, &doc);
        return Ok(());
    }
    let profile = instance.require_profile()?;
    let (matching, trace): (Matching, Option<Trace>) = match args.mechanism.as_str() {
        "da" if args.trace => {
            let ctx = instance.require_responsive()?;
            let (m, t) = da_student_traced(ctx, profile);
            (m, Some(t))
        }
        "boston" if args.trace => {
            let ctx = instance.require_responsive()?;
            let (m, t) = boston_traced(ctx, profile);
            (m, Some(t))
        }
        "median" => {
            let ctx = instance.require_responsive()?;
            (school_median(ctx, profile, budget())?, None)
        }
        name => {
            let mech = fixed_mechanism(name, &instance, args.order.as_deref())?;
            if name == "da-choice" {
                (mech.run(&instance.context, profile), None)
            } else {
                (mech.run(instance.require_responsive()?, profile), None)
            }
        }
    };
    let ctx = &instance.context;
    let mut doc = json!({
        "mechanism": args.mechanism,
        "matching": matching_json(&matching, ctx),
    });
    if let Some(trace) = trace {
        doc["trace"] = trace_json(&trace, ctx);
    }
    emit(format, &doc);
    Ok(())
}

fn cycles_command(
    instance_path: &str,
    profile_a: &str,
    profile_b: &str,
    student: &str,
    format: Format,
) -> Result<()> {
    let instance = load_instance(instance_path)?;
    let ctx = instance.require_responsive()?;
    let a = load_profile(profile_a, ctx)?;
    let b = load_profile(profile_b, ctx)?;
    let deviator = ctx.student_by_name(student)?;
    for i in ctx.students() {
        if i != deviator && a.get(i) != b.get(i) {
            bail!(
                "profiles differ at student `{}`; only `--student` may deviate",
                ctx.student_name(i)
            );
        }
    }
    let mu = school_choice::mechanisms::da_student(ctx, &a);
    let mu_prime = school_choice::mechanisms::da_student(ctx, &b);
    let pivot = mu.of(deviator);
    let monotonic =
        cycles::is_monotonic_transformation(a.get(deviator), b.get(deviator), pivot);
    let graph = cycles::build_graph(&mu, &mu_prime, ctx, &a)?;
    let edge_json = |edges: &[(StudentId, StudentId)]| {
        edges
            .iter()
            .map(|(x, y)| json!([ctx.student_name(*x), ctx.student_name(*y)]))
            .collect::<Vec<_>>()
    };
    let mut edge_blockers = serde_json::Map::new();
    for &(i, j) in graph.edges() {
        let blockers = cycles::blocking_set(i, j, &graph, ctx, &a)?;
        edge_blockers.insert(
            format!("[{},{}]", ctx.student_name(i), ctx.student_name(j)),
            students_json(&blockers, ctx),
        );
    }
    let replaced = cycles::edge_replace(&graph, ctx, &a);
    let cycle = cycles::find_cycle(&replaced)?;
    let blockers = cycles::cycle_blockers(&cycle, &mu, ctx, &a)?;
    let eta = cycles::apply_cycle(&mu, &cycle, &a)?;
    let doc = json!({
        "baseline": matching_json(&mu, ctx),
        "target": matching_json(&mu_prime, ctx),
        "deviator": ctx.student_name(deviator),
        "monotonic_transformation": monotonic,
        "nodes": students_json(&graph.nodes().iter().copied().collect::<Vec<_>>(), ctx),
        "edges": edge_json(graph.edges()),
        "edge_blockers": Value::Object(edge_blockers),
        "replaced_edges": edge_json(replaced.edges()),
        "cycle": students_json(cycle.members(), ctx),
        "cycle_blockers": students_json(&blockers, ctx),
        "implemented": matching_json(&eta, ctx),
    });
    emit(format, &doc);
    Ok(())
}

fn violation_json(v: &axioms::Violation, ctx: &SchoolChoiceContext) -> Value {
    match v {
        axioms::Violation::Manipulation { coalition, gainer } => json!({
            "kind": "manipulation",
            "coalition": students_json(coalition, ctx),
            "gainer": ctx.student_name(*gainer),
        }),
        axioms::Violation::Bossiness { deviator } => json!({
            "kind": "bossiness",
            "deviator": ctx.student_name(*deviator),
        }),
        axioms::Violation::LocalBossiness { deviators, at } => json!({
            "kind": "local-bossiness",
            "deviators": students_json(deviators, ctx),
            "at": ctx.alternative_name(*at),
        }),
        axioms::Violation::GroupBossiness { coalition } => json!({
            "kind": "group-bossiness",
            "coalition": students_json(coalition, ctx),
        }),
        axioms::Violation::WeakBossiness { deviator } => json!({
            "kind": "weak-bossiness",
            "deviator": ctx.student_name(*deviator),
        }),
        axioms::Violation::ColleagueOverlap { deviator, shared } => json!({
            "kind": "colleague-overlap",
            "deviator": ctx.student_name(*deviator),
            "shared": students_json(shared, ctx),
        }),
    }
}

fn profile_json(p: &PreferenceProfile, ctx: &SchoolChoiceContext) -> Value {
    let map: BTreeMap<String, Vec<String>> = p
        .iter()
        .map(|pref| {
            (
                ctx.student_name(pref.owner()).to_string(),
                pref.ranking().iter().map(|&a| ctx.alternative_name(a).to_string()).collect(),
            )
        })
        .collect();
    serde_json::to_value(map).expect("serializable")
}

fn check_command(args: &CheckArgs, format: Format) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let axiom = Axiom::from_name(&args.axiom)
        .ok_or_else(|| anyhow!("unknown axiom `{}`", args.axiom))?;
    let mech = fixed_mechanism(&args.mechanism, &instance, None)?;
    let ctx = &instance.context;
    let scope = SearchScope {
        bases: if args.exhaustive {
            BaseProfiles::Exhaustive
        } else {
            BaseProfiles::Sampled {
                count: args.samples,
                seed: args.seed,
            }
        },
        max_coalition: args.coalition,
        find_all: args.all,
        budget: budget(),
    };
    let outcome = axioms::check(axiom, mech.as_ref(), ctx, &scope)?;
    let mut doc = json!({
        "axiom": axiom.name(),
        "mechanism": args.mechanism,
        "exhaustive": args.exhaustive,
        "seed": if args.exhaustive { Value::Null } else { json!(args.seed) },
        "holds": outcome.holds(),
    });
    if let school_choice::axioms::CheckOutcome::Violated(cexs) = &outcome {
        let rendered: Vec<Value> = cexs
            .iter()
            .map(|cex| {
                json!({
                    "profile": profile_json(&cex.profile, ctx),
                    "reports": cex.reports.iter().map(|r| json!({
                        "student": ctx.student_name(r.owner()),
                        "ranking": r.ranking().iter().map(|&a| ctx.alternative_name(a)).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                    "truthful": matching_json(&cex.truthful, ctx),
                    "deviant": matching_json(&cex.deviant, ctx),
                    "violation": violation_json(&cex.violation, ctx),
                })
            })
            .collect();
        doc["counterexamples"] = Value::Array(rendered);
    }
    emit(format, &doc);
    Ok(())
}

fn characterize_command(
    mechanism: &str,
    universe_path: &str,
    exhaustive: bool,
    samples: u64,
    seed: u64,
    format: Format,
) -> Result<()> {
    let instance = load_instance(universe_path)?;
    let ctx = instance.require_responsive()?.clone();
    let mech: Box<dyn VariablePopulationMechanism> = match mechanism {
        "da" => Box::new(DaPriority::new(ctx.clone())),
        "fx-ek1-omega" => {
            if ctx != fixtures::fx_ek1_universe() {
                bail!("fx-ek1-omega is defined on its home universe only");
            }
            Box::new(fixtures::FxEk1Omega::default())
        }
        "fx-c1-phi" => {
            if ctx != fixtures::fx_c1_universe() {
                bail!("fx-c1-phi is defined on its home universe only");
            }
            Box::new(fixtures::FxC1Phi::default())
        }
        other => bail!("unknown variable-population mechanism `{other}`"),
    };
    let scope = if exhaustive {
        VpScope::Exhaustive
    } else {
        VpScope::Sampled {
            per_population: samples,
            seed,
        }
    };
    let report = verify_characterization(mech.as_ref(), &scope)?;
    let doc = json!({
        "mechanism": mechanism,
        "truncation_invariant": report.truncation_invariant,
        "axioms": report.axioms.iter().map(|v| json!({
            "axiom": v.axiom.name(),
            "holds": v.holds,
        })).collect::<Vec<_>>(),
        "recovered_priorities": report.recovered.as_ref().map(|rec| {
            let map: BTreeMap<String, Vec<String>> = rec
                .iter()
                .map(|(s, ranking)| {
                    (
                        ctx.school_name(*s).to_string(),
                        ranking.iter().map(|&i| ctx.student_name(i).to_string()).collect(),
                    )
                })
                .collect();
            serde_json::to_value(map).expect("serializable")
        }),
        "equivalent": report.equivalent,
    });
    emit(format, &doc);
    Ok(())
}

fn reproduce_command(fixture: &str, format: Format) -> Result<()> {
    let reports = if fixture == "all" {
        fixtures::reproduce_all()
    } else {
        vec![fixtures::reproduce(fixture)?]
    };
    let mut all_pass = true;
    let rendered: Vec<Value> = reports
        .iter()
        .map(|r| {
            all_pass &= r.pass();
            json!({
                "fixture": r.fixture,
                "pass": r.pass(),
                "checks": r.checks.iter().map(|c| json!({
                    "name": c.name,
                    "provenance": match c.provenance {
                        fixtures::Provenance::Pinned => "pinned",
                        fixtures::Provenance::Derived => "derived",
                    },
                    "expected": c.expected,
                    "actual": c.actual,
                    "pass": c.pass,
                })).collect::<Vec<_>>(),
                "notes": r.notes,
            })
        })
        .collect();
    emit(format, &json!({ "pass": all_pass, "fixtures": rendered }));
    if !all_pass {
        std::process::exit(1);
    }
    Ok(())
}

fn sweep_command(
    kind: &str,
    bounds: GridBounds,
    samples: u64,
    seed: u64,
    coalition: usize,
    format: Format,
) -> Result<()> {
    let report = run_sweep(kind, &bounds, samples, seed, coalition)
        .ok_or_else(|| anyhow!("unknown sweep kind `{kind}`"))?;
    eprintln!("sweep `{kind}` finished in {}ms", report.elapsed_ms);
    let doc = json!({
        "kind": report.kind,
        "contexts": report.contexts,
        "instances": report.instances,
        "seed": report.seed,
        "counterexamples": report.counterexamples,
        "pass": report.clean(),
    });
    emit(format, &doc);
    if !report.clean() {
        std::process::exit(1);
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run_command(args, cli.format),
        Command::Audit { instance, matching } => {
            let instance = load_instance(instance)?;
            let ctx = instance.require_responsive()?;
            let text = fs::read_to_string(matching)?;
            let doc: BTreeMap<String, String> = serde_json::from_str(&text)?;
            let m = matching_from_document(&doc, ctx)?;
            let report = audit_json(&m, ctx, instance.require_profile()?)?;
            emit(cli.format, &report);
            Ok(())
        }
        Command::Enumerate { instance } => {
            let instance = load_instance(instance)?;
            let ctx = instance.require_responsive()?;
            let stable = enumerate_stable(ctx, instance.require_profile()?, budget())?;
            let doc = json!({
                "count": stable.len(),
                "matchings": stable.iter().map(|m| matching_json(m, ctx)).collect::<Vec<_>>(),
            });
            emit(cli.format, &doc);
            Ok(())
        }
        Command::Cycles {
            instance,
            profile_a,
            profile_b,
            student,
        } => cycles_command(instance, profile_a, profile_b, student, cli.format),
        Command::Check(args) => check_command(args, cli.format),
        Command::Characterize {
            mechanism,
            universe,
            exhaustive,
            samples,
            seed,
        } => characterize_command(mechanism, universe, *exhaustive, *samples, *seed, cli.format),
        Command::Reproduce { fixture } => reproduce_command(fixture, cli.format),
        Command::Sweep {
            kind,
            n,
            s,
            qmax,
            samples,
            seed,
            coalition,
        } => sweep_command(
            kind,
            GridBounds {
                max_students: *n,
                max_schools: *s,
                max_capacity: *qmax,
            },
            *samples,
            *seed,
            *coalition,
            cli.format,
        ),
    }
}
