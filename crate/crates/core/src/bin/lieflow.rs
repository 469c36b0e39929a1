//! Command-line front end: catalog listing, scenario runs, sweeps,
//! matrix decomposition, algebra grading, and quotient checks.
//!
//! Exit code 0 means PASS, 2 means a graded FAIL, 1 means an error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use lieflow::algebra::LieAlgebra;
use lieflow::chain::{random_chain, validate_chain};
use lieflow::grading::{layer_decomposition, tri_decomposition};
use lieflow::harness::{
    self, find_scenario, parse_window, report_csv, report_json, run_scenario, write_atomic,
    Overrides, RunOutput,
};
use lieflow::jordan::{classify, jordan_additive};
use lieflow::quotient::{homo_witness, lift_chain, QuotientMap};
use lieflow::Result;

#[derive(Parser)]
#[command(name = "lieflow", version, about = "Chain recurrence for flows of automorphisms on low-dimensional Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the built-in scenario catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Run one scenario and grade its verdict.
    Run {
        scenario: String,
        #[command(flatten)]
        levels: LevelArgs,
        #[arg(long, value_name = "PATH", help = "Write the JSON report here")]
        json: Option<PathBuf>,
        #[arg(long, value_name = "PATH", help = "Write the per-node CSV table here")]
        csv: Option<PathBuf>,
    },
    /// Run one scenario at several eps levels and check shrinkage.
    Sweep {
        scenario: String,
        #[arg(long, value_name = "LIST", help = "Comma-separated eps levels, e.g. 0.2,0.1,0.05")]
        eps: String,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Emit the full sampled graph with per-node recurrence data.
    ChainGraph {
        scenario: String,
        #[command(flatten)]
        levels: LevelArgs,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Split a square matrix into commuting parts and classify it.
    Decompose {
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
    },
    /// Layer an algebra by the real spectrum of a derivation.
    Grade {
        #[arg(long, value_name = "FILE")]
        algebra: PathBuf,
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
    },
    /// Quotient a scenario's flow by an invariant ideal and test lifting.
    Quotient {
        scenario: String,
        #[arg(long, value_delimiter = ',', value_name = "INDICES", help = "Basis indices spanning the ideal")]
        ideal: Vec<usize>,
        #[arg(long, default_value_t = 0.3)]
        u_radius: f64,
        #[arg(long, default_value_t = 2.0)]
        window_radius: f64,
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Print one line per scenario.
    List,
}

#[derive(Args)]
struct LevelArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long, value_name = "SPEC", help = "Radius or lo:hi,lo:hi ranges")]
    window: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

fn overrides_for(scenario_name: &str, levels: &LevelArgs) -> Result<Overrides> {
    let window = match &levels.window {
        Some(s) => {
            let dim = find_scenario(scenario_name)?.spec.chart.dim();
            Some(parse_window(s, dim)?)
        }
        None => None,
    };
    Ok(Overrides {
        eps: levels.eps,
        tau: levels.tau,
        spacing: levels.spacing,
        window,
        seed: levels.seed,
    })
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matrix_csv(out: &mut String, name: &str, m: &DMatrix<f64>) {
    out.push_str("# ");
    out.push_str(name);
    out.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.push('\n');
}

fn cmd_catalog_list() -> Result<ExitCode> {
    for s in harness::catalog()? {
        println!(
            "{:<22} algebra={:<11} dim={} expected={} eps={} tau={} spacing={}",
            s.name,
            s.algebra_name,
            s.spec.chart.dim(),
            s.expected,
            s.eps,
            s.tau,
            s.spacing
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn finish_run(out: &RunOutput, json: Option<&Path>, csv: Option<&Path>) -> Result<ExitCode> {
    if let Some(p) = json {
        write_atomic(p, &report_json(&out.report)?)?;
    } else {
        print!("{}", report_json(&out.report)?);
    }
    if let Some(p) = csv {
        write_atomic(p, &report_csv(out))?;
    }
    eprintln!("wall clock: {} ms", out.report.wall_clock_ms);
    Ok(exit_for(&out.report.verdict))
}

fn exit_for(verdict: &str) -> ExitCode {
    if verdict == "PASS" {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_run(name: &str, levels: &LevelArgs, json: Option<&Path>, csv: Option<&Path>) -> Result<ExitCode> {
    let scenario = find_scenario(name)?;
    let overrides = overrides_for(name, levels)?;
    let out = run_scenario(&scenario, &overrides)?;
    finish_run(&out, json, csv)
}

fn cmd_sweep(
    name: &str,
    eps_list: &str,
    tau: Option<f64>,
    spacing: Option<f64>,
    json: Option<&Path>,
) -> Result<ExitCode> {
    let scenario = find_scenario(name)?;
    let eps_values: Vec<f64> = eps_list
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| lieflow::LieFlowError::parse("sweep", format!("bad eps '{t}'")))
        })
        .collect::<Result<_>>()?;
    let overrides = Overrides { tau, spacing, ..Overrides::default() };
    let start = Instant::now();
    let (report, _) = harness::sweep(&scenario, &eps_values, &overrides)?;
    emit(&report_json(&report)?, json)?;
    eprintln!("wall clock: {} ms", start.elapsed().as_millis());
    Ok(exit_for(&report.verdict))
}

#[derive(Serialize)]
struct GraphNodeReport {
    id: u32,
    coords: Vec<f64>,
    interior: bool,
    recurrent: bool,
    central_distance: f64,
}

#[derive(Serialize)]
struct GraphReport {
    scenario: String,
    parameters: harness::Parameters,
    node_count: usize,
    edge_count: usize,
    recurrent_coords: Vec<Vec<f64>>,
    component_sizes: Vec<usize>,
    nodes: Vec<GraphNodeReport>,
    verdict: String,
}

fn cmd_chain_graph(
    name: &str,
    levels: &LevelArgs,
    json: Option<&Path>,
    csv: Option<&Path>,
) -> Result<ExitCode> {
    let scenario = find_scenario(name)?;
    let overrides = overrides_for(name, levels)?;
    let out = run_scenario(&scenario, &overrides)?;
    let rec = &out.recurrence;
    let graph = &out.graph;
    let nodes = (0..graph.node_count())
        .map(|i| GraphNodeReport {
            id: i as u32,
            coords: graph.coords[i].iter().copied().collect(),
            interior: graph.interior_mask[i],
            recurrent: rec.recurrent_nodes.binary_search(&(i as u32)).is_ok(),
            central_distance: rec.central[i],
        })
        .collect();
    let report = GraphReport {
        scenario: out.report.scenario.clone(),
        parameters: out.report.parameters.clone(),
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        recurrent_coords: rec
            .recurrent_nodes
            .iter()
            .map(|&i| graph.coords[i as usize].iter().copied().collect())
            .collect(),
        component_sizes: rec.components.iter().map(Vec::len).collect(),
        nodes,
        verdict: out.report.verdict.clone(),
    };
    emit(&report_json(&report)?, json)?;
    if let Some(p) = csv {
        write_atomic(p, &report_csv(&out))?;
    }
    eprintln!("wall clock: {} ms", out.report.wall_clock_ms);
    Ok(exit_for(&report.verdict))
}

fn cmd_decompose(path: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path)?;
    let d = harness::parse_matrix_str(&text)?;
    let jd = jordan_additive(&d)?;
    let class = classify(&d)?;
    let mut out = String::new();
    matrix_csv(&mut out, "hyperbolic", &jd.hyperbolic);
    matrix_csv(&mut out, "elliptic", &jd.elliptic);
    matrix_csv(&mut out, "nilpotent", &jd.nilpotent);
    out.push_str("# classification\n");
    out.push_str(&class.to_string());
    out.push('\n');
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_grade(algebra_path: &Path, matrix_path: &Path) -> Result<ExitCode> {
    let alg = LieAlgebra::load_definition(algebra_path)?;
    let text = std::fs::read_to_string(matrix_path)?;
    let d = harness::parse_matrix_str(&text)?;
    alg.check_derivation(&d)?;
    let jd = jordan_additive(&d)?;
    let layers = layer_decomposition(&alg, &jd)?;
    let tri = tri_decomposition(&alg, &jd, &layers)?;
    let mut out = String::new();
    out.push_str("# layers\nlambda,dim\n");
    for layer in &layers {
        out.push_str(&format!("{},{}\n", layer.lambda, layer.dim()));
    }
    out.push('\n');
    for layer in &layers {
        matrix_csv(&mut out, &format!("layer lambda={}", layer.lambda), &layer.basis);
    }
    matrix_csv(&mut out, "plus", &tri.plus);
    matrix_csv(&mut out, "zero", &tri.zero);
    matrix_csv(&mut out, "minus", &tri.minus);
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct LiftTrials {
    count: usize,
    validated: usize,
    max_residual: f64,
    max_off_ideal: f64,
}

#[derive(Serialize)]
struct QuotientReport {
    scenario: String,
    ideal: Vec<usize>,
    h_dim: usize,
    quotient_dim: usize,
    central: bool,
    intertwining_defect: f64,
    witness_eps: f64,
    lift_trials: LiftTrials,
    verdict: String,
}

fn cmd_quotient(
    name: &str,
    ideal: &[usize],
    u_radius: f64,
    window_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<ExitCode> {
    let start = Instant::now();
    let scenario = find_scenario(name)?;
    let qm = QuotientMap::from_indices(&scenario.spec, ideal)?;
    let intertwining = qm.intertwining_defect(samples.max(10), seed)?;
    let witness = homo_witness(&qm, u_radius, window_radius, samples.max(10), seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x71f0);
    let mut validated = 0usize;
    let mut max_residual = 0.0f64;
    let mut max_off_ideal = 0.0f64;
    let trials = if qm.quotient_dim() == 0 { 0 } else { samples };
    for _ in 0..trials {
        let zeta = random_chain(
            &qm.quotient,
            &qm.quotient.chart.identity(),
            5,
            (scenario.tau, 1.25 * scenario.tau),
            0.5 * u_radius,
            &mut rng,
        )?;
        let lifted = lift_chain(&qm, &zeta, u_radius)?;
        let v = validate_chain(&scenario.spec, &lifted.chain, u_radius + 1e-9, scenario.tau);
        if v.valid {
            validated += 1;
        }
        max_residual = max_residual.max(v.max_residual);
        max_off_ideal = max_off_ideal.max(lifted.off_ideal);
    }
    let pass = intertwining < 1e-9 && validated == trials && max_off_ideal < 1e-6;
    let report = QuotientReport {
        scenario: scenario.name.clone(),
        ideal: ideal.to_vec(),
        h_dim: qm.h_dim(),
        quotient_dim: qm.quotient_dim(),
        central: qm.is_central(),
        intertwining_defect: intertwining,
        witness_eps: witness,
        lift_trials: LiftTrials { count: trials, validated, max_residual, max_off_ideal },
        verdict: if pass { "PASS" } else { "FAIL" }.to_string(),
    };
    print!("{}", report_json(&report)?);
    eprintln!("wall clock: {} ms", start.elapsed().as_millis());
    Ok(exit_for(&report.verdict))
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Catalog { action: CatalogAction::List } => cmd_catalog_list(),
        Command::Run { scenario, levels, json, csv } => {
            cmd_run(&scenario, &levels, json.as_deref(), csv.as_deref())
        }
        Command::Sweep { scenario, eps, tau, spacing, json } => {
            cmd_sweep(&scenario, &eps, tau, spacing, json.as_deref())
        }
        Command::ChainGraph { scenario, levels, json, csv } => {
            cmd_chain_graph(&scenario, &levels, json.as_deref(), csv.as_deref())
        }
        Command::Decompose { matrix } => cmd_decompose(&matrix),
        Command::Grade { algebra, matrix } => cmd_grade(&algebra, &matrix),
        Command::Quotient { scenario, ideal, u_radius, window_radius, samples, seed } => {
            cmd_quotient(&scenario, &ideal, u_radius, window_radius, samples, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
