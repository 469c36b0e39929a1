//! Scenario catalog, experiment runs, sweeps, and report emission.
//!
//! Scenarios are parsed from an embedded catalog file so the on-disk
//! format and the built-ins exercise the same loader. A run builds the
//! chain graph at the scenario's level, estimates the recurrent set, and
//! grades the outcome against the scenario's declared prediction.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::LieAlgebra;
use crate::chain::{
    build_chain_graph, mutual_reachability_fraction, recurrent_estimate, ChainGraph,
    RecurrenceReport, Window,
};
use crate::grading::ClassHint;
use crate::group::{sl2_rep, so3_rep, FlowMode, FlowSpec, GroupChart};
use crate::tol;
use crate::{LieFlowError, Result};

const SCENARIOS_CFG: &str = include_str!("../assets/scenarios.cfg");
const ALGEBRA_ABELIAN2: &str = include_str!("../assets/algebras/abelian2.alg");
const ALGEBRA_HEISENBERG: &str = include_str!("../assets/algebras/heisenberg.alg");
const ALGEBRA_SL2: &str = include_str!("../assets/algebras/sl2.alg");
const ALGEBRA_SO3: &str = include_str!("../assets/algebras/so3.alg");

/// Declared prediction for the recurrent set of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    /// Recurrence concentrates on the central subgroup of the flow.
    CentralSubgroup,
    /// The whole group is one chain class.
    All,
}

impl std::fmt::Display for Expected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Expected {
    fn as_str(&self) -> &'static str {
        match self {
            Expected::CentralSubgroup => "central-subgroup",
            Expected::All => "all",
        }
    }
}

impl std::str::FromStr for Expected {
    type Err = LieFlowError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central-subgroup" => Ok(Expected::CentralSubgroup),
            "all" => Ok(Expected::All),
            other => Err(LieFlowError::parse("expected_recurrent", format!("unknown value '{other}'"))),
        }
    }
}

/// One catalog entry: a flow on a group with default sampling levels.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub algebra_name: String,
    pub spec: FlowSpec,
    pub window: Window,
    pub eps: f64,
    pub tau: f64,
    pub spacing: f64,
    pub class_hint: ClassHint,
    pub expected: Expected,
}

/// Optional parameter overrides for a run.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub tau: Option<f64>,
    pub spacing: Option<f64>,
    pub window: Option<Window>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Parameters {
    pub eps: f64,
    pub tau: f64,
    pub spacing: f64,
    pub window_lo: Vec<f64>,
    pub window_hi: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub interior_nodes: usize,
    pub sparse_warning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceSummary {
    pub recurrent_interior: usize,
    pub cyclic_total: usize,
    pub components: usize,
    /// Largest central distance among recurrent interior nodes.
    pub max_central_distance: Option<f64>,
}

/// Outcome of one scenario run. Wall-clock time is kept out of the
/// serialized form so identical runs emit identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub expected: String,
    pub parameters: Parameters,
    pub graph: GraphSummary,
    pub recurrence: RecurrenceSummary,
    pub mutual_reachability_fraction: f64,
    pub verdict: String,
    #[serde(skip)]
    pub wall_clock_ms: u128,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }
}

/// Full artifacts of a run, for report writers that need node data.
#[derive(Debug)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub graph: ChainGraph,
    pub recurrence: RecurrenceReport,
}

/// Sweep outcome across a list of eps levels.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub scenario: String,
    pub eps_values: Vec<f64>,
    pub runs: Vec<ExperimentReport>,
    /// Cyclic node sets shrink as eps does, compared pairwise along the
    /// list wherever eps decreases.
    pub monotone: bool,
    pub verdict: String,
}

// -- parsing helpers ----------------------------------------------------

/// Parses a matrix from rows of whitespace-separated numbers, one row
/// per line.
pub fn parse_matrix_str(text: &str) -> Result<DMatrix<f64>> {
    let ctx = "matrix";
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    LieFlowError::parse(ctx, format!("line {}: bad number '{tok}'", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(LieFlowError::parse(
                    ctx,
                    format!("line {}: expected {} entries, got {}", lineno + 1, first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LieFlowError::parse(ctx, "no rows"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Window syntax: a single radius, or comma-separated `lo:hi` ranges.
pub fn parse_window(s: &str, dim: usize) -> Result<Window> {
    let ctx = "window";
    let s = s.trim();
    if !s.contains(':') {
        let radius: f64 = s
            .parse()
            .map_err(|_| LieFlowError::parse(ctx, format!("bad radius '{s}'")))?;
        if radius <= 0.0 {
            return Err(LieFlowError::parse(ctx, "radius must be positive"));
        }
        return Window::symmetric(dim, radius);
    }
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in s.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| LieFlowError::parse(ctx, format!("expected lo:hi, got '{part}'")))?;
        lo.push(
            a.trim()
                .parse()
                .map_err(|_| LieFlowError::parse(ctx, format!("bad bound '{a}'")))?,
        );
        hi.push(
            b.trim()
                .parse()
                .map_err(|_| LieFlowError::parse(ctx, format!("bad bound '{b}'")))?,
        );
    }
    if lo.len() != dim {
        return Err(LieFlowError::parse(
            ctx,
            format!("{} ranges for dimension {dim}", lo.len()),
        ));
    }
    Window::new(lo, hi)
}

fn builtin_algebra(name: &str) -> Result<LieAlgebra> {
    let text = match name {
        "abelian2" => ALGEBRA_ABELIAN2,
        "heisenberg" => ALGEBRA_HEISENBERG,
        "sl2" => ALGEBRA_SL2,
        "so3" => ALGEBRA_SO3,
        other => {
            return Err(LieFlowError::parse(
                "scenario catalog",
                format!("unknown algebra '{other}'"),
            ))
        }
    };
    LieAlgebra::from_definition_str(text)
}

fn parse_scenario_block(name: &str, keys: &BTreeMap<String, String>) -> Result<Scenario> {
    let ctx = "scenario catalog";
    let get = |key: &str| -> Result<&str> {
        keys.get(key)
            .map(String::as_str)
            .ok_or_else(|| LieFlowError::parse(ctx, format!("[{name}] missing key '{key}'")))
    };
    let algebra_name = get("algebra")?.to_string();
    let algebra = builtin_algebra(&algebra_name)?;
    let n = algebra.dim();

    let chart = match get("chart")? {
        "abelian" => GroupChart::abelian(algebra)?,
        "nilpotent" => GroupChart::nilpotent_exp(algebra)?,
        "matrix" => {
            let rep = match get("rep")? {
                "sl2" => sl2_rep(&algebra)?,
                "so3" => so3_rep(&algebra)?,
                other => {
                    return Err(LieFlowError::parse(ctx, format!("[{name}] unknown rep '{other}'")))
                }
            };
            GroupChart::matrix_embedded(algebra, rep, tol::LOG_WINDOW)?
        }
        other => return Err(LieFlowError::parse(ctx, format!("[{name}] unknown chart '{other}'"))),
    };

    let generator = parse_matrix_str(&get("generator")?.replace(';', "\n"))?;
    let mode = match get("mode")? {
        "derivation" => {
            if generator.nrows() != n || generator.ncols() != n {
                return Err(LieFlowError::parse(
                    ctx,
                    format!("[{name}] derivation must be {n}x{n}"),
                ));
            }
            FlowMode::Derivation(generator)
        }
        "inner" => {
            if generator.nrows() != 1 || generator.ncols() != n {
                return Err(LieFlowError::parse(
                    ctx,
                    format!("[{name}] inner generator must have {n} coordinates"),
                ));
            }
            FlowMode::Inner(DVector::from_fn(n, |i, _| generator[(0, i)]))
        }
        other => return Err(LieFlowError::parse(ctx, format!("[{name}] unknown mode '{other}'"))),
    };
    let spec = FlowSpec::new(chart, mode)?;

    let window = parse_window(get("window")?, n)?;
    let parse_f64 = |key: &str| -> Result<f64> {
        get(key)?
            .parse()
            .map_err(|_| LieFlowError::parse(ctx, format!("[{name}] bad number for '{key}'")))
    };
    Ok(Scenario {
        name: name.to_string(),
        algebra_name,
        spec,
        window,
        eps: parse_f64("eps")?,
        tau: parse_f64("tau")?,
        spacing: parse_f64("spacing")?,
        class_hint: get("class_hint")?.parse()?,
        expected: get("expected")?.parse()?,
    })
}

/// Parses a scenario catalog in the sectioned key/value format.
pub fn parse_catalog(text: &str) -> Result<Vec<Scenario>> {
    let ctx = "scenario catalog";
    let mut blocks: Vec<(String, BTreeMap<String, String>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| LieFlowError::parse(ctx, format!("line {}: unclosed section", lineno + 1)))?
                .trim();
            if name.is_empty() {
                return Err(LieFlowError::parse(ctx, format!("line {}: empty section name", lineno + 1)));
            }
            blocks.push((name.to_string(), BTreeMap::new()));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            LieFlowError::parse(ctx, format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let Some((_, keys)) = blocks.last_mut() else {
            return Err(LieFlowError::parse(ctx, format!("line {}: key before any section", lineno + 1)));
        };
        keys.insert(key.trim().to_string(), value.trim().to_string());
    }
    blocks
        .iter()
        .map(|(name, keys)| parse_scenario_block(name, keys))
        .collect()
}

/// The seven built-in scenarios.
pub fn catalog() -> Result<Vec<Scenario>> {
    parse_catalog(SCENARIOS_CFG)
}

pub fn find_scenario(name: &str) -> Result<Scenario> {
    catalog()?
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| LieFlowError::parse("scenario", format!("unknown scenario '{name}'")))
}

// -- running ------------------------------------------------------------

/// Builds the graph at the effective parameters and grades the verdict.
pub fn run_scenario(scenario: &Scenario, overrides: &Overrides) -> Result<RunOutput> {
    let start = Instant::now();
    let eps = overrides.eps.unwrap_or(scenario.eps);
    let tau = overrides.tau.unwrap_or(scenario.tau);
    let spacing = overrides.spacing.unwrap_or(scenario.spacing);
    let window = overrides.window.clone().unwrap_or_else(|| scenario.window.clone());
    let seed = overrides.seed.unwrap_or(0);

    let graph = build_chain_graph(&scenario.spec, &window, spacing, eps, tau)?;
    let recurrence = recurrent_estimate(&graph);
    let fraction = mutual_reachability_fraction(&graph);

    let pass = match scenario.expected {
        Expected::CentralSubgroup => central_subgroup_pass(&graph, &recurrence),
        Expected::All => fraction >= 0.95,
    };
    let max_central = recurrence
        .recurrent_nodes
        .iter()
        .map(|&i| recurrence.central[i as usize])
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));

    let report = ExperimentReport {
        scenario: scenario.name.clone(),
        expected: scenario.expected.as_str().to_string(),
        parameters: Parameters {
            eps,
            tau,
            spacing,
            window_lo: window.lo.clone(),
            window_hi: window.hi.clone(),
            seed,
        },
        graph: GraphSummary {
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            interior_nodes: graph.interior_mask.iter().filter(|&&m| m).count(),
            sparse_warning: graph.sparse_warning,
        },
        recurrence: RecurrenceSummary {
            recurrent_interior: recurrence.recurrent_nodes.len(),
            cyclic_total: recurrence.cyclic_nodes.len(),
            components: recurrence.components.len(),
            max_central_distance: max_central,
        },
        mutual_reachability_fraction: fraction,
        verdict: if pass { "PASS" } else { "FAIL" }.to_string(),
        wall_clock_ms: start.elapsed().as_millis(),
    };
    Ok(RunOutput { report, graph, recurrence })
}

/// Central-subgroup verdict: recurrent interior nodes hug the central
/// set to within twice the jump radius, and interior nodes strictly
/// inside one grid cell of the central set are recurrent.
fn central_subgroup_pass(graph: &ChainGraph, rec: &RecurrenceReport) -> bool {
    let near_bound = 2.0 * graph.eps + 1e-12;
    let all_near = rec
        .recurrent_nodes
        .iter()
        .all(|&i| rec.central[i as usize] <= near_bound);
    let core_bound = graph.spacing - 1e-9;
    let core_recurrent = (0..graph.node_count()).all(|i| {
        !(graph.interior_mask[i] && rec.central[i] < core_bound)
            || rec.recurrent_nodes.binary_search(&(i as u32)).is_ok()
    });
    all_near && core_recurrent
}

pub fn run_named(name: &str, overrides: &Overrides) -> Result<RunOutput> {
    run_scenario(&find_scenario(name)?, overrides)
}

/// Runs a scenario at several eps levels and checks the cyclic sets
/// shrink with eps.
pub fn sweep(scenario: &Scenario, eps_values: &[f64], overrides: &Overrides) -> Result<(SweepReport, Vec<RunOutput>)> {
    if eps_values.is_empty() {
        return Err(LieFlowError::parse("sweep", "no eps values"));
    }
    if eps_values.iter().any(|&e| e <= 0.0) {
        return Err(LieFlowError::parse("sweep", "eps values must be positive"));
    }
    let mut outputs = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let mut ov = overrides.clone();
        ov.eps = Some(eps);
        outputs.push(run_scenario(scenario, &ov)?);
    }
    let mut monotone = true;
    for pair in outputs.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.graph.eps < a.graph.eps {
            let larger = &a.recurrence.cyclic_nodes;
            monotone &= b
                .recurrence
                .cyclic_nodes
                .iter()
                .all(|n| larger.binary_search(n).is_ok());
        } else if b.graph.eps > a.graph.eps {
            let larger = &b.recurrence.cyclic_nodes;
            monotone &= a
                .recurrence
                .cyclic_nodes
                .iter()
                .all(|n| larger.binary_search(n).is_ok());
        }
    }
    let all_pass = outputs.iter().all(|o| o.report.passed());
    let report = SweepReport {
        scenario: scenario.name.clone(),
        eps_values: eps_values.to_vec(),
        runs: outputs.iter().map(|o| o.report.clone()).collect(),
        monotone,
        verdict: if all_pass && monotone { "PASS" } else { "FAIL" }.to_string(),
    };
    Ok((report, outputs))
}

// -- emission -----------------------------------------------------------

pub fn report_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)
        .map_err(|e| LieFlowError::parse("report", e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Per-node table: coordinates, interior flag, recurrence membership,
/// central distance, and the id of the recurrent component if any.
pub fn report_csv(output: &RunOutput) -> String {
    let graph = &output.graph;
    let rec = &output.recurrence;
    let dim = graph.spec.chart.dim();
    let mut component_of: Vec<i64> = vec![-1; graph.node_count()];
    for (ci, comp) in rec.components.iter().enumerate() {
        for &n in comp {
            component_of[n as usize] = ci as i64;
        }
    }
    let mut out = String::new();
    out.push_str("node");
    for d in 0..dim {
        let _ = write!(out, ",coord_{d}");
    }
    out.push_str(",interior,cyclic,recurrent,central_distance,component\n");
    for i in 0..graph.node_count() {
        let _ = write!(out, "{i}");
        for d in 0..dim {
            let _ = write!(out, ",{}", graph.coords[i][d]);
        }
        let cyclic = rec.cyclic_nodes.binary_search(&(i as u32)).is_ok();
        let recurrent = rec.recurrent_nodes.binary_search(&(i as u32)).is_ok();
        let _ = write!(
            out,
            ",{},{},{},{},{}\n",
            graph.interior_mask[i] as u8,
            cyclic as u8,
            recurrent as u8,
            rec.central[i],
            component_of[i]
        );
    }
    out
}

/// Writes text to a path atomically: temp file in the same directory,
/// then rename.
pub fn write_atomic(path: &std::path::Path, text: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into())
        )),
        None => std::path::PathBuf::from(format!(".{}.tmp", path.display())),
    };
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ChartKind;

    #[test]
    fn catalog_has_the_seven_builtins() {
        let cat = catalog().unwrap();
        assert_eq!(cat.len(), 7);
        let names: Vec<&str> = cat.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "plane-saddle",
                "plane-rotation",
                "plane-shear",
                "heis-saddle",
                "heis-shear",
                "sl2-inner-nilpotent",
                "so3-inner"
            ]
        );
        let heis = cat.iter().find(|s| s.name == "heis-saddle").unwrap();
        assert_eq!(heis.expected, Expected::CentralSubgroup);
        assert_eq!(heis.spec.chart.kind, ChartKind::NilpotentExp);
        let rot = cat.iter().find(|s| s.name == "plane-rotation").unwrap();
        assert_eq!(rot.expected, Expected::All);
    }

    #[test]
    fn matrix_parser_round_trips() {
        let m = parse_matrix_str("1 2\n3 4\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert!(parse_matrix_str("1 2\n3\n").is_err());
        assert!(parse_matrix_str("\n").is_err());
    }

    #[test]
    fn window_parser_accepts_both_syntaxes() {
        let w = parse_window("0.4", 3).unwrap();
        assert_eq!(w, Window::symmetric(3, 0.4).unwrap());
        let w = parse_window("-2:2,-1:3", 2).unwrap();
        assert_eq!(w.lo, vec![-2.0, -1.0]);
        assert_eq!(w.hi, vec![2.0, 3.0]);
        assert!(parse_window("-2:2", 2).is_err());
        assert!(parse_window("abc", 1).is_err());
    }

    #[test]
    fn plane_saddle_run_passes_and_stays_near_the_origin() {
        let out = run_named("plane-saddle", &Overrides::default()).unwrap();
        assert!(out.report.passed(), "verdict {:?}", out.report);
        let max_central = out.report.recurrence.max_central_distance.unwrap();
        assert!(max_central <= 0.2, "recurrent nodes as far as {max_central}");
        let origin = out.graph.nearest_node(&DVector::from_vec(vec![0.0, 0.0]));
        assert!(out
            .recurrence
            .recurrent_nodes
            .binary_search(&(origin as u32))
            .is_ok());
    }

    #[test]
    fn plane_rotation_run_is_one_class() {
        let out = run_named("plane-rotation", &Overrides::default()).unwrap();
        assert!(out.report.passed());
        assert!(out.report.mutual_reachability_fraction >= 0.95);
    }

    #[test]
    fn sweep_shrinks_with_eps_on_the_plane_saddle() {
        let scenario = find_scenario("plane-saddle").unwrap();
        let (report, outputs) =
            sweep(&scenario, &[0.2, 0.1, 0.05], &Overrides::default()).unwrap();
        assert!(report.monotone);
        let radii: Vec<f64> = outputs
            .iter()
            .map(|o| {
                o.recurrence
                    .cyclic_nodes
                    .iter()
                    .map(|&i| o.graph.coords[i as usize].norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(radii[0] >= radii[1] && radii[1] >= radii[2]);
    }

    #[test]
    fn huge_eps_makes_every_interior_node_recurrent() {
        let scenario = find_scenario("plane-saddle").unwrap();
        let mut ov = Overrides::default();
        ov.eps = Some(50.0);
        let out = run_scenario(&scenario, &ov).unwrap();
        let interior: Vec<u32> = (0..out.graph.node_count() as u32)
            .filter(|&i| out.graph.interior_mask[i as usize])
            .collect();
        assert_eq!(out.recurrence.recurrent_nodes, interior);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_named("plane-saddle", &Overrides::default()).unwrap();
        let b = run_named("plane-saddle", &Overrides::default()).unwrap();
        assert_eq!(report_json(&a.report).unwrap(), report_json(&b.report).unwrap());
        assert_eq!(report_csv(&a), report_csv(&b));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let out = run_named("plane-saddle", &Overrides::default()).unwrap();
        let csv = report_csv(&out);
        assert_eq!(csv.lines().count(), out.graph.node_count() + 1);
        assert!(csv.starts_with("node,coord_0,coord_1,interior"));
    }

    #[test]
    fn restriction_to_the_central_line_matches_the_ambient_trace() {
        // The heis-saddle fixes the center pointwise; the restricted
        // scenario is the line with the identity flow.
        let ambient = run_named("heis-saddle", &Overrides::default()).unwrap();
        let line_chart = GroupChart::abelian(LieAlgebra::abelian(1)).unwrap();
        let line_spec =
            FlowSpec::new(line_chart, FlowMode::Derivation(DMatrix::zeros(1, 1))).unwrap();
        let line_graph = build_chain_graph(
            &line_spec,
            &Window::symmetric(1, 2.0).unwrap(),
            0.2,
            0.2,
            1.0,
        )
        .unwrap();
        let line_rec = recurrent_estimate(&line_graph);
        let line_interior: Vec<u32> = (0..line_graph.node_count() as u32)
            .filter(|&i| line_graph.interior_mask[i as usize])
            .collect();
        assert_eq!(line_rec.recurrent_nodes, line_interior);

        // Ambient recurrent nodes on the axis, z values.
        let mut ambient_z: Vec<f64> = ambient
            .recurrence
            .recurrent_nodes
            .iter()
            .map(|&i| &ambient.graph.coords[i as usize])
            .filter(|c| c[0].abs() < 1e-12 && c[1].abs() < 1e-12)
            .map(|c| c[2])
            .collect();
        ambient_z.sort_by(f64::total_cmp);
        assert!(!ambient_z.is_empty());
        for &i in &line_rec.recurrent_nodes {
            let z = line_graph.coords[i as usize][0];
            let nearest = ambient_z
                .iter()
                .map(|a| (a - z).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 0.2 + 1e-9, "line node {z} unmatched");
        }
        for z in &ambient_z {
            let nearest = line_rec
                .recurrent_nodes
                .iter()
                .map(|&i| (line_graph.coords[i as usize][0] - z).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 0.2 + 1e-9, "ambient node {z} unmatched");
        }
    }

    #[test]
    fn atomic_write_replaces_the_target() {
        let dir = std::env::temp_dir().join("lieflow-harness-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
