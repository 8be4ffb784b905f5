//! Command-line front end: model loading, analysis verbs, fixture
//! emission, and report rendering (human tables or line-delimited JSON).
//!
//! Exit codes: 0 for successful runs (negative mathematical findings are
//! still successes; read the payload), 2 for input and precondition
//! errors, 3 for numeric failures.

use clap::{Args, Parser, Subcommand, ValueEnum};
use colarb_core::arbitrage::{
    check_collective_ftap, check_completeness, check_ftap, collective_martingale_polytope,
    martingale_polytope, payoff_space,
};
use colarb_core::beneficial::PipelineOutcome;
use colarb_core::cara::CaraRegionSpec;
use colarb_core::error::Error as CoreError;
use colarb_core::fixtures::{fixture, FixtureName};
use colarb_core::minimax::solve_minimax_tol;
use colarb_core::model::{restrict_measure, MarketModel};
use colarb_core::optim::{vertex_enumerate, InteriorAnswer, DEFAULT_VERTEX_CAP};
use colarb_core::rational::Rat;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "colarb",
    version,
    about = "Collective arbitrage and risk-sharing analysis on finite scenario-tree markets"
)]
struct Cli {
    /// Output format: human tables or line-delimited JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Tolerance for the float-certified solves.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Seed for any randomized diagnostics.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Table,
    Structured,
}

#[derive(Subcommand)]
enum Verb {
    /// Check a model file against every structural invariant.
    Validate(ModelArg),
    /// Individual and collective arbitrage, with certificates.
    Arbitrage(ModelArg),
    /// Martingale-measure polytopes and their interiors.
    Measures(MeasuresArgs),
    /// Per-agent minimax measures and duality certificates.
    Minimax(ModelArg),
    /// Search for an exchange strictly improving every agent.
    Beneficial(BeneficialArgs),
    /// Closed-form feasible trade region for two exponential-utility agents.
    CaraRegion(Box<CaraArgs>),
    /// Named example models.
    #[command(subcommand)]
    Fixtures(FixturesVerb),
}

#[derive(Args)]
struct ModelArg {
    /// Path to the model file (JSON).
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct BeneficialArgs {
    #[arg(long)]
    model: PathBuf,
    /// When no certificate exists, additionally sample this many random
    /// exchanges from the family looking for a simultaneous improvement
    /// (a falsification cross-check; uses --seed).
    #[arg(long, default_value_t = 0)]
    search: usize,
}

#[derive(Args)]
struct MeasuresArgs {
    #[arg(long)]
    model: PathBuf,
    /// Enumerate polytope vertices (exact, dimension-capped).
    #[arg(long)]
    vertices: bool,
    /// Also print measure restrictions to this trading time.
    #[arg(long)]
    restrict: Option<usize>,
}

#[derive(Args)]
struct CaraArgs {
    /// Mass of the event under the first agent's pricing measure.
    #[arg(long)]
    q1: Rat,
    /// Mass under the second agent's pricing measure (must be smaller).
    #[arg(long)]
    q2: Rat,
    #[arg(long, default_value = "1")]
    gamma1: Rat,
    #[arg(long, default_value = "1")]
    gamma2: Rat,
    /// Optional trade to test for membership (size of the indicator leg).
    #[arg(long)]
    alpha: Option<f64>,
    /// Optional fee leg of the trade.
    #[arg(long)]
    beta: Option<f64>,
    /// Number of boundary samples in the summary table.
    #[arg(long, default_value_t = 9)]
    samples: usize,
}

#[derive(Subcommand)]
enum FixturesVerb {
    /// Write a named fixture model to disk.
    Emit(EmitArgs),
    /// List the available fixtures.
    List,
}

#[derive(Args)]
struct EmitArgs {
    /// One of: fig1, twin-complete, ca-pair, zero-market.
    #[arg(long)]
    name: String,
    /// Output path (defaults to <name>.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    verb: &'static str,
    status: String,
    payload: serde_json::Value,
    timing_us: u64,
}

type VerbOutcome = (&'static str, String, serde_json::Value, String);

fn main() {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = run(&cli);
    let timing_us = start.elapsed().as_micros() as u64;
    match outcome {
        Ok((verb, status, payload, table)) => {
            match cli.format {
                Format::Structured => {
                    let report = Report {
                        verb,
                        status,
                        payload,
                        timing_us,
                    };
                    println!("{}", serde_json::to_string(&report).expect("report json"));
                }
                Format::Table => {
                    println!("{table}");
                    println!("status: {status}  ({:.1} ms)", timing_us as f64 / 1e3);
                }
            }
            std::process::exit(0);
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

fn exit_code(err: &CoreError) -> i32 {
    match err {
        CoreError::NonConvergence { .. }
        | CoreError::NumericFailure(_)
        | CoreError::InternalInconsistency(_) => 3,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<VerbOutcome, CoreError> {
    match &cli.verb {
        Verb::Validate(args) => validate(&args.model),
        Verb::Arbitrage(args) => arbitrage(&args.model),
        Verb::Measures(args) => measures(args),
        Verb::Minimax(args) => minimax(&args.model, cli.tol),
        Verb::Beneficial(args) => beneficial(args, cli.tol, cli.seed),
        Verb::CaraRegion(args) => cara_region(args),
        Verb::Fixtures(FixturesVerb::Emit(args)) => fixtures_emit(args),
        Verb::Fixtures(FixturesVerb::List) => fixtures_list(),
    }
}

/// Floats rendered with twelve significant digits.
fn f(x: f64) -> String {
    format!("{x:.11e}")
}

fn rat_list(v: &[Rat]) -> Vec<String> {
    v.iter().map(Rat::to_string).collect()
}

fn validate(path: &Path) -> Result<VerbOutcome, CoreError> {
    let model = MarketModel::load(path)?;
    let report = model.validate();
    let status = if report.is_valid() { "valid" } else { "invalid" };
    let payload = json!({
        "valid": report.is_valid(),
        "violations": report.violations,
    });
    let mut table = format!(
        "model: {} outcomes, {} agents, horizon {}\n",
        model.num_outcomes(),
        model.num_agents(),
        model.horizon
    );
    if report.is_valid() {
        table.push_str("all structural checks passed");
    } else {
        table.push_str("violations:\n");
        for v in &report.violations {
            table.push_str(&format!("  [{}] {}\n", v.code, v.message));
        }
    }
    Ok(("validate", status.to_string(), payload, table))
}

fn arbitrage(path: &Path) -> Result<VerbOutcome, CoreError> {
    let model = MarketModel::load(path)?;
    model.ensure_valid()?;
    let mut agents = Vec::new();
    let mut table = String::new();
    table.push_str("agent  no-arbitrage  complete  payoff-dim\n");
    for i in 0..model.num_agents() {
        let ftap = check_ftap(&model, i)?;
        let dim = payoff_space(&model, i)?.dim();
        let complete = if ftap.no_arbitrage {
            Some(check_completeness(&model, i)?)
        } else {
            None
        };
        table.push_str(&format!(
            "{:<6} {:<13} {:<9} {}\n",
            i,
            ftap.no_arbitrage,
            complete.map_or("-".into(), |c| c.to_string()),
            dim
        ));
        agents.push(json!({
            "agent": i,
            "no_arbitrage": ftap.no_arbitrage,
            "complete": complete,
            "payoff_dimension": dim,
            "equivalent_measure": ftap.equivalent_measure.as_deref().map(rat_list),
            "witness_totals": ftap.witness.as_ref().map(|w| {
                w.totals.iter().map(|t| rat_list(t)).collect::<Vec<_>>()
            }),
        }));
    }
    let collective = check_collective_ftap(&model, &model.exchange)?;
    table.push_str(&format!(
        "collective: no-collective-arbitrage = {}\n",
        collective.no_collective_arbitrage
    ));
    if let Some(w) = &collective.witness {
        table.push_str("  witness totals per agent:\n");
        for (i, t) in w.totals.iter().enumerate() {
            table.push_str(&format!("    agent {i}: {:?}\n", rat_list(t)));
        }
    }
    let status = if collective.no_collective_arbitrage {
        "nca-holds"
    } else {
        "collective-arbitrage"
    };
    let payload = json!({
        "agents": agents,
        "no_collective_arbitrage": collective.no_collective_arbitrage,
        "collective_witness": collective.witness.as_ref().map(|w| json!({
            "totals": w.totals.iter().map(|t| rat_list(t)).collect::<Vec<_>>(),
            "exchange": w.exchange.legs.iter().map(|l| rat_list(l)).collect::<Vec<_>>(),
        })),
    });
    Ok(("arbitrage", status.to_string(), payload, table))
}

fn measures(args: &MeasuresArgs) -> Result<VerbOutcome, CoreError> {
    let model = MarketModel::load(&args.model)?;
    model.ensure_valid()?;
    let mut table = String::new();
    let mut agents = Vec::new();
    for i in 0..model.num_agents() {
        let polytope = martingale_polytope(&model, i)?;
        let rank = polytope.set.independent_rows().len();
        let dimension = polytope.set.dim - rank;
        let interior = polytope.interior();
        let sample = match &interior {
            InteriorAnswer::Yes { point, .. } => Some(point.clone()),
            _ => None,
        };
        table.push_str(&format!(
            "agent {i}: polytope dim {dimension}, equivalent measure exists: {}\n",
            interior.exists()
        ));
        if let Some(q) = &sample {
            table.push_str(&format!("  sample: {:?}\n", rat_list(q)));
            if let Some(t) = args.restrict {
                if t <= model.horizon {
                    let r = restrict_measure(q, model.agents[i].filtration.at(t));
                    table.push_str(&format!("  restriction to t={t}: {:?}\n", rat_list(&r)));
                }
            }
        }
        let vertices = if args.vertices {
            let vs = vertex_enumerate(&polytope.set, DEFAULT_VERTEX_CAP)?;
            table.push_str(&format!("  vertices: {}\n", vs.len()));
            for v in vs.iter().take(12) {
                table.push_str(&format!("    {:?}\n", rat_list(v)));
            }
            Some(vs.iter().map(|v| rat_list(v)).collect::<Vec<_>>())
        } else {
            None
        };
        agents.push(json!({
            "agent": i,
            "dimension": dimension,
            "equivalent_exists": interior.exists(),
            "sample_measure": sample.as_deref().map(rat_list),
            "vertices": vertices,
        }));
    }

    let collective = collective_martingale_polytope(&model, &model.exchange)?;
    let interior = collective.interior();
    table.push_str(&format!(
        "collective polytope: equivalent vector exists: {}\n",
        interior.exists()
    ));
    let mut collective_sample = None;
    if let InteriorAnswer::Yes { point, .. } = &interior {
        let measures: Vec<Vec<Rat>> = (0..model.num_agents())
            .map(|i| collective.measure_of(point, i))
            .collect();
        for (i, q) in measures.iter().enumerate() {
            table.push_str(&format!("  agent {i}: {:?}\n", rat_list(q)));
            if let Some(t) = args.restrict {
                if t <= model.horizon {
                    let r = restrict_measure(q, model.agents[i].filtration.at(t));
                    table.push_str(&format!("    restriction to t={t}: {:?}\n", rat_list(&r)));
                }
            }
        }
        collective_sample = Some(measures.iter().map(|q| rat_list(q)).collect::<Vec<_>>());
    }
    let status = if interior.exists() {
        "collective-measure-exists"
    } else {
        "no-collective-measure"
    };
    let payload = json!({
        "agents": agents,
        "collective_exists": interior.exists(),
        "collective_sample": collective_sample,
    });
    Ok(("measures", status.to_string(), payload, table))
}

fn minimax(path: &Path, tol: f64) -> Result<VerbOutcome, CoreError> {
    let model = MarketModel::load(path)?;
    model.ensure_valid()?;
    let mut table = String::new();
    table.push_str("agent  lambda           gap              equivalent  boundary\n");
    let mut agents = Vec::new();
    for i in 0..model.num_agents() {
        let sol = solve_minimax_tol(&model, i, tol)?;
        table.push_str(&format!(
            "{:<6} {:<16} {:<16} {:<11} {}\n",
            i,
            sol.lambda_exact
                .as_ref()
                .map_or_else(|| f(sol.lambda), Rat::to_string),
            f(sol.gap),
            sol.equivalent,
            sol.boundary
        ));
        let measure = sol
            .measure_exact
            .as_ref()
            .map(|q| rat_list(q))
            .unwrap_or_else(|| sol.measure.iter().map(|&v| f(v)).collect());
        table.push_str(&format!("       measure: {measure:?}\n"));
        agents.push(json!({
            "agent": i,
            "lambda": f(sol.lambda),
            "lambda_exact": sol.lambda_exact.as_ref().map(Rat::to_string),
            "measure": measure,
            "exact": sol.measure_exact.is_some(),
            "equivalent": sol.equivalent,
            "boundary": sol.boundary,
            "primal": f(sol.primal_value),
            "dual": f(sol.dual_value),
            "gap": f(sol.gap),
        }));
    }
    let payload = json!({ "agents": agents });
    Ok(("minimax", "solved".to_string(), payload, table))
}

fn beneficial(args: &BeneficialArgs, tol: f64, seed: u64) -> Result<VerbOutcome, CoreError> {
    let model = MarketModel::load(&args.model)?;
    model.ensure_valid()?;
    let solutions = (0..model.num_agents())
        .map(|i| solve_minimax_tol(&model, i, tol))
        .collect::<Result<Vec<_>, _>>()?;
    match colarb_core::beneficial::beneficial_pipeline_with(&model, &model.exchange, &solutions)? {
        PipelineOutcome::Certificate(cert) => {
            let mut table = String::new();
            table.push_str(&format!(
                "strictly beneficial exchange found (seed generator {}{})\n",
                cert.seed_index,
                if cert.seed_flipped { ", sign flipped" } else { "" }
            ));
            table.push_str(&format!(
                "common minimax expectation per agent: {}\n",
                cert.common_expectation_exact
                    .as_ref()
                    .map_or_else(|| f(cert.common_expectation), Rat::to_string)
            ));
            table.push_str(&format!("scale alpha: {:.12}\n", cert.alpha.to_f64()));
            table.push_str("agent  utility-before      utility-after\n");
            for (i, (b, a)) in cert
                .utilities_before
                .iter()
                .zip(&cert.utilities_after)
                .enumerate()
            {
                table.push_str(&format!("{:<6} {:<19} {}\n", i, f(*b), f(*a)));
            }
            table.push_str("rebalanced exchange legs:\n");
            for (i, leg) in cert.y_hat.legs.iter().enumerate() {
                table.push_str(&format!("  agent {i}: {:?}\n", rat_list(leg)));
            }
            let payload = json!({
                "certificate": {
                    "seed_index": cert.seed_index,
                    "seed_flipped": cert.seed_flipped,
                    "y_hat": cert.y_hat.legs.iter().map(|l| rat_list(l)).collect::<Vec<_>>(),
                    "alpha": format!("{:.12}", cert.alpha.to_f64()),
                    "alpha_exact": cert.alpha.to_string(),
                    "common_expectation": cert.common_expectation_exact
                        .as_ref()
                        .map_or_else(|| f(cert.common_expectation), Rat::to_string),
                    "utilities_before": cert.utilities_before.iter().map(|&v| f(v)).collect::<Vec<_>>(),
                    "utilities_after": cert.utilities_after.iter().map(|&v| f(v)).collect::<Vec<_>>(),
                    "strict": cert.strict,
                }
            });
            Ok(("beneficial", "certificate".to_string(), payload, table))
        }
        PipelineOutcome::Absent(report) => {
            let values: Vec<String> = report
                .values_exact
                .as_ref()
                .map(|vs| vs.iter().map(Rat::to_string).collect())
                .unwrap_or_else(|| report.values.iter().map(|&v| f(v)).collect());
            let mut table = format!(
                "no beneficial exchange: the minimax vector prices every generator at most zero\nper-generator values: {values:?}"
            );
            let mut search = None;
            if args.search > 0 {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let best = colarb_core::sweep::randomized_improvement_search(
                    &model,
                    &model.exchange,
                    &solutions,
                    args.search,
                    &mut rng,
                );
                table.push_str(&format!(
                    "\nrandomized cross-check over {} samples: best simultaneous gain {}",
                    args.search,
                    f(best)
                ));
                search = Some(json!({ "samples": args.search, "best_gain": f(best) }));
            }
            let payload = json!({ "absent": { "values": values, "search": search } });
            Ok(("beneficial", "absent".to_string(), payload, table))
        }
    }
}

fn cara_region(args: &CaraArgs) -> Result<VerbOutcome, CoreError> {
    let spec = CaraRegionSpec::new(
        args.q1.clone(),
        args.q2.clone(),
        args.gamma1.clone(),
        args.gamma2.clone(),
    )?;
    let region = spec.region(1e-12)?;
    let mut table = format!("alpha* = {}\n", f(region.alpha_star));
    table.push_str("alpha        lower-fee     upper-fee\n");
    let mut samples = Vec::new();
    for k in 1..=args.samples {
        let alpha = region.alpha_star * k as f64 / (args.samples + 1) as f64;
        let lo = spec.curve_lower(alpha);
        let hi = spec.curve_upper(alpha);
        table.push_str(&format!("{alpha:<12.6} {lo:<13.6} {hi:.6}\n"));
        samples.push(json!({ "alpha": f(alpha), "lower": f(lo), "upper": f(hi) }));
    }
    let mut membership = None;
    let mut exchange = None;
    let mut status = "region".to_string();
    if let (Some(alpha), Some(beta)) = (args.alpha, args.beta) {
        let m = region.membership(alpha, beta);
        table.push_str(&format!(
            "({alpha}, {beta}): inside = {}, expectations {} / {}\n",
            m.inside,
            f(m.first_expectation),
            f(m.second_expectation)
        ));
        status = if m.inside { "inside" } else { "outside" }.to_string();
        if m.inside {
            let y = region.emit_exchange(alpha, beta)?;
            let (g1, g2) = region.certainty_equivalent_gains(&y);
            table.push_str(&format!(
                "certainty-equivalent gains: {} / {}\n",
                f(g1),
                f(g2)
            ));
            table.push_str(&format!(
                "exchange legs: {:?} / {:?}\n",
                rat_list(&y.legs[0]),
                rat_list(&y.legs[1])
            ));
            exchange = Some(json!({
                "legs": y.legs.iter().map(|l| rat_list(l)).collect::<Vec<_>>(),
                "gains": [f(g1), f(g2)],
            }));
        }
        membership = Some(json!({
            "alpha": f(alpha),
            "beta": f(beta),
            "inside": m.inside,
            "first_expectation": f(m.first_expectation),
            "second_expectation": f(m.second_expectation),
        }));
    }
    let payload = json!({
        "alpha_star": f(region.alpha_star),
        "boundary_samples": samples,
        "membership": membership,
        "exchange": exchange,
    });
    Ok(("cara-region", status, payload, table))
}

fn fixtures_emit(args: &EmitArgs) -> Result<VerbOutcome, CoreError> {
    let name: FixtureName = args.name.parse().map_err(CoreError::Parameter)?;
    let model = fixture(name);
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.json", name.as_str())));
    model.save(&path)?;
    let bytes = model.to_json().len();
    let payload = json!({
        "name": name.as_str(),
        "path": path.display().to_string(),
        "bytes": bytes,
    });
    let table = format!("wrote {} ({bytes} bytes)", path.display());
    Ok(("fixtures", "written".to_string(), payload, table))
}

fn fixtures_list() -> Result<VerbOutcome, CoreError> {
    let names: Vec<&str> = FixtureName::ALL.iter().map(|n| n.as_str()).collect();
    let table = names.join("\n");
    Ok((
        "fixtures",
        "listed".to_string(),
        json!({ "names": names }),
        table,
    ))
}
