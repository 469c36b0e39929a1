//! Chains, their algebraic transformations, and the sampled chain graph.
//!
//! A chain is a finite pseudo-orbit: points joined by flowing for at least
//! a minimum time and then jumping by less than a given radius. The graph
//! estimator samples a window on a uniform grid and draws an edge wherever
//! one flow-plus-jump step connects two nodes; strongly connected
//! components with a cycle then estimate the recurrent set. Out-of-window
//! distance queries produce no edge, so the estimate only under-reports.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::group::{ChartKind, FlowMode, FlowSpec, GroupElement};
use crate::jordan::{classify, DerivationClass};
use crate::linalg;
use crate::tol;
use crate::{LieFlowError, Result};

/// Finite pseudo-orbit: n+1 points and n positive flow times.
#[derive(Debug, Clone)]
pub struct Chain {
    pub points: Vec<GroupElement>,
    pub times: Vec<f64>,
}

impl Chain {
    pub fn new(points: Vec<GroupElement>, times: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || times.len() + 1 != points.len() {
            return Err(LieFlowError::InvalidChain(format!(
                "{} points with {} times",
                points.len(),
                times.len()
            )));
        }
        if times.iter().any(|t| *t <= 0.0) {
            return Err(LieFlowError::InvalidChain("nonpositive flow time".into()));
        }
        Ok(Chain { points, times })
    }

    /// Jump count.
    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn total_time(&self) -> f64 {
        self.times.iter().sum()
    }

    pub fn first(&self) -> &GroupElement {
        &self.points[0]
    }

    pub fn last(&self) -> &GroupElement {
        &self.points[self.points.len() - 1]
    }
}

/// Outcome of checking a chain at a validity level.
#[derive(Debug, Clone)]
pub struct ChainValidation {
    pub valid: bool,
    pub max_residual: f64,
    pub residuals: Vec<f64>,
    pub reason: Option<String>,
}

/// Checks every jump residual against eps and every time against tau.
pub fn validate_chain(spec: &FlowSpec, chain: &Chain, eps: f64, tau: f64) -> ChainValidation {
    let mut residuals = Vec::with_capacity(chain.n());
    let mut max_residual = 0.0f64;
    for (i, t) in chain.times.iter().enumerate() {
        if *t < tau - 1e-12 {
            return ChainValidation {
                valid: false,
                max_residual,
                residuals,
                reason: Some(format!("time {t} at jump {i} is below the minimum {tau}")),
            };
        }
        let image = match spec.apply(*t, &chain.points[i]) {
            Ok(p) => p,
            Err(e) => {
                return ChainValidation {
                    valid: false,
                    max_residual,
                    residuals,
                    reason: Some(format!("flow failed at jump {i}: {e}")),
                }
            }
        };
        match spec.chart.distance(&image, &chain.points[i + 1]) {
            Ok(d) => {
                max_residual = max_residual.max(d);
                residuals.push(d);
            }
            Err(e) => {
                return ChainValidation {
                    valid: false,
                    max_residual,
                    residuals,
                    reason: Some(format!("distance unavailable at jump {i}: {e}")),
                }
            }
        }
    }
    let valid = max_residual < eps;
    ChainValidation { valid, max_residual, residuals, reason: None }
}

/// Builds a valid chain by flowing and then jumping on the right by a
/// group element whose log has norm below jump_scale. With the
/// left-invariant distance every residual equals its jump norm exactly.
pub fn random_chain(
    spec: &FlowSpec,
    start: &GroupElement,
    n_jumps: usize,
    time_range: (f64, f64),
    jump_scale: f64,
    rng: &mut impl rand::Rng,
) -> Result<Chain> {
    let dim = spec.chart.dim();
    let mut points = vec![start.clone()];
    let mut times = Vec::with_capacity(n_jumps);
    for _ in 0..n_jumps {
        let t = rng.gen_range(time_range.0..=time_range.1);
        let image = spec.apply(t, points.last().unwrap())?;
        let mut w = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let norm = w.norm();
        if norm > 0.0 {
            w *= jump_scale * rng.gen_range(0.05..0.95) / norm;
        }
        points.push(spec.chart.mul(&image, &spec.chart.exp_point(&w)?)?);
        times.push(t);
    }
    Chain::new(points, times)
}

/// Joins two chains sharing an endpoint.
pub fn concatenate(spec: &FlowSpec, a: &Chain, b: &Chain) -> Result<Chain> {
    let gap = spec.chart.distance(a.last(), b.first())?;
    if gap > 1e-9 {
        return Err(LieFlowError::InvalidChain(format!(
            "endpoint mismatch of size {gap:.3e} in concatenation"
        )));
    }
    let mut points = a.points.clone();
    points.extend_from_slice(&b.points[1..]);
    let mut times = a.times.clone();
    times.extend_from_slice(&b.times);
    Chain::new(points, times)
}

/// Left and right translates of a chain by a group element. Both keep the
/// times, and their jump residuals agree with the input's identically: the
/// inserted factors cancel inside each jump.
pub fn translate_chain(spec: &FlowSpec, chain: &Chain, g: &GroupElement) -> Result<(Chain, Chain)> {
    let n1 = chain.points.len();
    let mut prefix = vec![0.0; n1];
    for i in 0..chain.n() {
        prefix[i + 1] = prefix[i] + chain.times[i];
    }
    let total = prefix[n1 - 1];

    let mut left = Vec::with_capacity(n1);
    let mut right = Vec::with_capacity(n1);
    for i in 0..n1 {
        let gl = spec.apply(prefix[i], g)?;
        left.push(spec.chart.mul(&gl, &chain.points[i])?);
        let gr = spec.apply(prefix[i] - total, g)?;
        right.push(spec.chart.mul(&gr, &chain.points[i])?);
    }
    Ok((
        Chain::new(left, chain.times.clone())?,
        Chain::new(right, chain.times.clone())?,
    ))
}

/// A reversed chain plus the validity radius it is guaranteed to satisfy
/// for the reverse flow.
#[derive(Debug)]
pub struct ReversedChain {
    pub chain: Chain,
    pub spec: FlowSpec,
    /// Input radius inflated by the largest backward-flow distortion over
    /// one normalized jump interval.
    pub eps_prime: f64,
}

/// Normalizes jump times into [tau, 2 tau] by splitting long jumps along
/// the exact orbit, then runs the chain backwards for the reverse flow.
pub fn reverse_chain(spec: &FlowSpec, chain: &Chain, eps: f64, tau: f64) -> Result<ReversedChain> {
    let mut points: Vec<GroupElement> = vec![chain.points[0].clone()];
    let mut times: Vec<f64> = Vec::new();
    for i in 0..chain.n() {
        let t = chain.times[i];
        if t < tau - 1e-12 {
            return Err(LieFlowError::InvalidChain(format!(
                "time {t} at jump {i} is below the minimum {tau}"
            )));
        }
        let parts = if t > 2.0 * tau { (t / (2.0 * tau)).ceil() as usize } else { 1 };
        let sub = t / parts as f64;
        // Intermediate waypoints ride the exact orbit; only the final
        // sub-jump carries the original residual.
        for p in 1..parts {
            points.push(spec.apply(sub * p as f64, &chain.points[i])?);
            times.push(sub);
        }
        points.push(chain.points[i + 1].clone());
        times.push(sub);
    }

    points.reverse();
    times.reverse();

    let distortion = backward_distortion(spec, 2.0 * tau);
    Ok(ReversedChain {
        chain: Chain::new(points, times)?,
        spec: spec.reverse()?,
        eps_prime: eps * distortion,
    })
}

/// Largest operator norm of the backward flow differential over [0, span].
fn backward_distortion(spec: &FlowSpec, span: f64) -> f64 {
    let steps = 32;
    (0..=steps)
        .map(|k| {
            let t = span * k as f64 / steps as f64;
            linalg::op_norm(&linalg::expm(&(&spec.derivation * -t)))
        })
        .fold(0.0, f64::max)
}

/// Transfers a chain of one flow to the composition with a commuting
/// elliptic flow by sliding each point along the second flow for the
/// accumulated time.
pub fn elliptic_compose_chain(
    spec_phi: &FlowSpec,
    spec_psi: &FlowSpec,
    chain: &Chain,
) -> Result<(Chain, FlowSpec)> {
    let d_psi = &spec_psi.derivation;
    let psi_class = classify(d_psi)?;
    if psi_class != DerivationClass::Elliptic && linalg::inf_norm(d_psi) != 0.0 {
        return Err(LieFlowError::Unsupported(format!(
            "composition requires an elliptic flow, got {psi_class}"
        )));
    }
    let d_phi = &spec_phi.derivation;
    let commutator = d_phi * d_psi - d_psi * d_phi;
    let scale = 1.0 + linalg::inf_norm(d_phi).max(linalg::inf_norm(d_psi));
    if linalg::inf_norm(&commutator) > tol::ELLIPTIC_COMPOSE_TOL * scale {
        return Err(LieFlowError::Unsupported(
            "the two derivations do not commute".into(),
        ));
    }
    // Sampled flow-level commutation, over and above the generator check.
    for (t, s) in [(0.7, 1.3), (-1.1, 0.4), (2.0, -0.6)] {
        let probe = spec_phi.chart.exp_point(&DVector::from_fn(spec_phi.chart.dim(), |i, _| {
            0.1 * (i as f64 + 1.0)
        }))?;
        let ab = spec_psi.apply(s, &spec_phi.apply(t, &probe)?)?;
        let ba = spec_phi.apply(t, &spec_psi.apply(s, &probe)?)?;
        if spec_phi.chart.distance(&ab, &ba)? > 1e-9 {
            return Err(LieFlowError::Unsupported(
                "the two flows do not commute at sampled times".into(),
            ));
        }
    }

    let mut prefix = 0.0;
    let mut points = Vec::with_capacity(chain.points.len());
    for (i, p) in chain.points.iter().enumerate() {
        points.push(spec_psi.apply(prefix, p)?);
        if i < chain.n() {
            prefix += chain.times[i];
        }
    }
    let composed_mode = match (&spec_phi.mode, &spec_psi.mode) {
        (FlowMode::Derivation(a), FlowMode::Derivation(b)) => FlowMode::Derivation(a + b),
        (FlowMode::Inner(a), FlowMode::Inner(b)) => FlowMode::Inner(a + b),
        _ => {
            return Err(LieFlowError::Unsupported(
                "cannot compose flows of different modes".into(),
            ))
        }
    };
    let composed = FlowSpec::new(spec_phi.chart.clone(), composed_mode)?;
    Ok((Chain::new(points, chain.times.clone())?, composed))
}

/// Axis-aligned box in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(LieFlowError::DimensionMismatch("window bounds differ in length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(LieFlowError::Parse {
                context: "window".into(),
                message: "lower bound must be below upper bound".into(),
            });
        }
        Ok(Window { lo, hi })
    }

    pub fn symmetric(dim: usize, radius: f64) -> Result<Self> {
        Window::new(vec![-radius; dim], vec![radius; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        (0..self.dim()).all(|d| v[d] >= self.lo[d] - 1e-9 && v[d] <= self.hi[d] + 1e-9)
    }

    /// Distance from the point to the window boundary, in the min over
    /// coordinate slacks; negative outside.
    pub fn boundary_margin(&self, v: &DVector<f64>) -> f64 {
        (0..self.dim())
            .map(|d| (v[d] - self.lo[d]).min(self.hi[d] - v[d]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sampled one-step transition structure of the flow at a fixed level.
#[derive(Debug, Clone)]
pub struct ChainGraph {
    pub spec: FlowSpec,
    pub window: Window,
    pub spacing: f64,
    pub eps: f64,
    pub tau: f64,
    /// Chart coordinates of each node, grid order.
    pub coords: Vec<DVector<f64>>,
    pub edges: Vec<Vec<u32>>,
    /// Nodes far enough from the boundary that one flow-plus-jump step
    /// cannot have been cut off by the window.
    pub interior_mask: Vec<bool>,
    /// Set when eps < spacing / 2, which disconnects the grid trivially.
    pub sparse_warning: bool,
}

/// Recurrence estimate extracted from a graph.
#[derive(Debug, Clone)]
pub struct RecurrenceReport {
    /// Cyclic-component nodes inside the interior mask, sorted.
    pub recurrent_nodes: Vec<u32>,
    /// Cyclic-component nodes with no mask applied, sorted.
    pub cyclic_nodes: Vec<u32>,
    /// Cyclic components restricted to the interior, ordered by first node.
    pub components: Vec<Vec<u32>>,
    /// Central distance of every node, graph order.
    pub central: Vec<f64>,
    pub eps: f64,
    pub tau: f64,
    pub spacing: f64,
}

pub fn build_chain_graph(
    spec: &FlowSpec,
    window: &Window,
    spacing: f64,
    eps: f64,
    tau: f64,
) -> Result<ChainGraph> {
    if eps <= 0.0 || tau <= 0.0 || spacing <= 0.0 {
        return Err(LieFlowError::Parse {
            context: "chain graph".into(),
            message: "eps, tau and spacing must be positive".into(),
        });
    }
    let n = spec.chart.dim();
    if window.dim() != n {
        return Err(LieFlowError::DimensionMismatch(format!(
            "window dimension {} does not match the chart dimension {n}",
            window.dim()
        )));
    }

    // Uniform grid, row-major over dimensions.
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
    for d in 0..n {
        let mut axis = Vec::new();
        let mut k = 0usize;
        loop {
            let v = window.lo[d] + spacing * k as f64;
            if v > window.hi[d] + 1e-9 {
                break;
            }
            axis.push(v);
            k += 1;
        }
        if axis.is_empty() {
            return Err(LieFlowError::Parse {
                context: "chain graph".into(),
                message: format!("empty grid axis {d}"),
            });
        }
        axes.push(axis);
    }
    let total: usize = axes.iter().map(Vec::len).product();
    let mut coords = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    loop {
        coords.push(DVector::from_fn(n, |d, _| axes[d][idx[d]]));
        let mut d = n;
        loop {
            if d == 0 {
                break;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            if d == 0 {
                break;
            }
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    debug_assert_eq!(coords.len(), total);

    let edges = match spec.chart.kind {
        ChartKind::Abelian | ChartKind::NilpotentExp => {
            coordinate_chart_edges(spec, window, &coords, eps, tau)
        }
        ChartKind::MatrixEmbedded => matrix_chart_edges(spec, &coords, eps, tau)?,
    };

    let interior_mask = interior_mask(spec, window, &coords, eps, tau);

    Ok(ChainGraph {
        spec: spec.clone(),
        window: window.clone(),
        spacing,
        eps,
        tau,
        coords,
        edges,
        interior_mask,
        sparse_warning: eps < spacing / 2.0,
    })
}

/// Per-node interior test: the margin covers the jump radius plus the
/// distance the node can travel along the flow during one step, so a
/// cut-off edge cannot involve an interior source.
fn interior_mask(
    spec: &FlowSpec,
    window: &Window,
    coords: &[DVector<f64>],
    eps: f64,
    tau: f64,
) -> Vec<bool> {
    let samples = 8;
    coords
        .iter()
        .map(|c| {
            let mut drift = 0.0f64;
            for k in 0..=samples {
                let t = tau * k as f64 / samples as f64;
                let path = spec.flow_matrix(t) * c;
                drift = drift.max((&spec.derivation * path).norm());
            }
            window.boundary_margin(c) > eps + tau * drift
        })
        .collect()
}

/// Edge build on global exponential charts, bucketed by the coordinates no
/// bracket correction can reach, where the distance is bounded below by
/// the plain coordinate difference.
fn coordinate_chart_edges(
    spec: &FlowSpec,
    window: &Window,
    coords: &[DVector<f64>],
    eps: f64,
    tau: f64,
) -> Vec<Vec<u32>> {
    let n = spec.chart.dim();
    let alg = &spec.chart.algebra;
    let exact_dims: Vec<usize> = (0..n)
        .filter(|&i| {
            (0..n).all(|j| (0..n).all(|k| alg.structure_constant(j, k, i) == 0.0))
        })
        .collect();
    let flow = spec.flow_matrix(tau);

    let key_of = |v: &DVector<f64>| -> Vec<i64> {
        exact_dims.iter().map(|&d| ((v[d] - window.lo[d]) / eps).floor() as i64).collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
    for (j, c) in coords.iter().enumerate() {
        buckets.entry(key_of(c)).or_default().push(j as u32);
    }

    coords
        .par_iter()
        .map(|c| {
            let image = &flow * c;
            let mut out: Vec<u32> = Vec::new();
            let center = key_of(&image);
            let mut offsets = vec![-1i64; center.len()];
            // Enumerate the 3^k neighborhood of the image's bucket.
            loop {
                let key: Vec<i64> =
                    center.iter().zip(&offsets).map(|(c, o)| c + o).collect();
                if let Some(candidates) = buckets.get(&key) {
                    for &j in candidates {
                        let d = match spec.chart.kind {
                            ChartKind::Abelian => (&coords[j as usize] - &image).norm(),
                            _ => crate::group::bch(alg, &-image.clone(), &coords[j as usize])
                                .norm(),
                        };
                        if d < eps {
                            out.push(j);
                        }
                    }
                }
                let mut pos = 0usize;
                loop {
                    if pos == offsets.len() {
                        break;
                    }
                    offsets[pos] += 1;
                    if offsets[pos] <= 1 {
                        break;
                    }
                    offsets[pos] = -1;
                    pos += 1;
                }
                if pos == offsets.len() {
                    break;
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

/// Edge build on matrix charts: all pairs, with a matrix-space prefilter
/// that only discards pairs certainly beyond eps, then the exact
/// log-coordinate distance. Out-of-window pairs contribute no edge.
fn matrix_chart_edges(
    spec: &FlowSpec,
    coords: &[DVector<f64>],
    eps: f64,
    tau: f64,
) -> Result<Vec<Vec<u32>>> {
    let rep = spec.chart.rep.as_ref().unwrap();
    let nodes: Vec<DMatrix<f64>> =
        coords.iter().map(|c| linalg::expm(&rep.embed(c))).collect();
    let inverses: Vec<DMatrix<f64>> = nodes
        .iter()
        .map(|m| {
            m.clone()
                .try_inverse()
                .ok_or_else(|| LieFlowError::Degeneracy("singular grid node".into()))
        })
        .collect::<Result<_>>()?;
    let (e, einv) = spec.inner_pair(tau)?;
    let images: Vec<DMatrix<f64>> = nodes.iter().map(|m| &e * m * &einv).collect();

    // Coordinate norm below eps bounds the embedded log by s = sqrt(sum
    // of squared basis Frobenius norms) times eps, hence the relative
    // matrix sits within s eps e^{s eps} of the identity. Anything
    // farther is certainly not an edge.
    let basis_scale = rep
        .basis
        .iter()
        .map(|b| b.norm_squared())
        .sum::<f64>()
        .sqrt();
    let frob_cut = {
        let f = basis_scale * eps;
        f * f.exp()
    };
    let size = rep.size;
    let ident = DMatrix::<f64>::identity(size, size);

    let edges: Vec<Vec<u32>> = images
        .par_iter()
        .map(|img| {
            let mut out = Vec::new();
            for (j, inv_j) in inverses.iter().enumerate() {
                let rel = inv_j * img;
                if (&rel - &ident).norm() > frob_cut.min(spec.chart.log_window) {
                    continue;
                }
                let log = match linalg::logm(&rel) {
                    Ok(l) => l,
                    Err(_) => continue,
                };
                let a = match rep.coords(&log) {
                    Ok(a) => a,
                    Err(_) => continue,
                };
                if a.norm() < eps {
                    out.push(j as u32);
                }
            }
            out
        })
        .collect();
    Ok(edges)
}

impl ChainGraph {
    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn node_point(&self, i: usize) -> Result<GroupElement> {
        self.spec.chart.exp_point(&self.coords[i])
    }

    /// Index of the grid node nearest to the given chart coordinates.
    pub fn nearest_node(&self, v: &DVector<f64>) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.coords.iter().enumerate() {
            let d = (c - v).norm();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges[i].binary_search(&(j as u32)).is_ok()
    }

    /// Same nodes with every edge reversed.
    pub fn transpose(&self) -> ChainGraph {
        let mut edges: Vec<Vec<u32>> = vec![Vec::new(); self.edges.len()];
        for (i, outs) in self.edges.iter().enumerate() {
            for &j in outs {
                edges[j as usize].push(i as u32);
            }
        }
        for list in &mut edges {
            list.sort_unstable();
        }
        ChainGraph { edges, ..self.clone() }
    }
}

/// Tarjan's algorithm, iterative, components ordered by smallest member.
pub fn strongly_connected_components(edges: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let n = edges.len();
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut frames: Vec<(u32, usize)> = Vec::new();
    let mut comps: Vec<Vec<u32>> = Vec::new();
    let mut counter = 0u32;

    for root in 0..n as u32 {
        if index[root as usize] != UNSEEN {
            continue;
        }
        index[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        frames.push((root, 0));

        while let Some(frame) = frames.last_mut() {
            let v = frame.0 as usize;
            if frame.1 < edges[v].len() {
                let w = edges[v][frame.1] as usize;
                frame.1 += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    frames.push((w as u32, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(parent) = frames.last() {
                    let p = parent.0 as usize;
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w as usize] = false;
                        comp.push(w);
                        if w as usize == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Recurrent-set estimate: nodes of components that contain a cycle.
pub fn recurrent_estimate(graph: &ChainGraph) -> RecurrenceReport {
    let comps = strongly_connected_components(&graph.edges);
    let mut cyclic_nodes: Vec<u32> = Vec::new();
    let mut components: Vec<Vec<u32>> = Vec::new();
    for comp in &comps {
        let cyclic = comp.len() >= 2
            || graph.has_edge(comp[0] as usize, comp[0] as usize);
        if !cyclic {
            continue;
        }
        cyclic_nodes.extend_from_slice(comp);
        let masked: Vec<u32> = comp
            .iter()
            .copied()
            .filter(|&i| graph.interior_mask[i as usize])
            .collect();
        if !masked.is_empty() {
            components.push(masked);
        }
    }
    cyclic_nodes.sort_unstable();
    let recurrent_nodes: Vec<u32> = cyclic_nodes
        .iter()
        .copied()
        .filter(|&i| graph.interior_mask[i as usize])
        .collect();
    let central = graph
        .coords
        .iter()
        .map(|c| graph.spec.central_distance_coords(c))
        .collect();
    RecurrenceReport {
        recurrent_nodes,
        cyclic_nodes,
        components,
        central,
        eps: graph.eps,
        tau: graph.tau,
        spacing: graph.spacing,
    }
}

/// Forward-reachable set through at least one edge, breadth-first.
pub fn omega_estimate(graph: &ChainGraph, start: usize) -> Result<Vec<u32>> {
    if start >= graph.node_count() {
        return Err(LieFlowError::InvalidChain(format!("unknown node {start}")));
    }
    let mut seen = vec![false; graph.node_count()];
    let mut queue: std::collections::VecDeque<u32> = graph.edges[start].iter().copied().collect();
    for &j in &graph.edges[start] {
        seen[j as usize] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &w in &graph.edges[v as usize] {
            if !seen[w as usize] {
                seen[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    Ok(seen
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.then_some(i as u32))
        .collect())
}

/// Materializes a node path as a chain with uniform times.
pub fn extract_chain(graph: &ChainGraph, path: &[usize]) -> Result<Chain> {
    if path.len() < 2 {
        return Err(LieFlowError::InvalidChain("path needs at least two nodes".into()));
    }
    for w in path.windows(2) {
        if !graph.has_edge(w[0], w[1]) {
            return Err(LieFlowError::InvalidChain(format!(
                "no edge from node {} to node {}",
                w[0], w[1]
            )));
        }
    }
    let points: Vec<GroupElement> =
        path.iter().map(|&i| graph.node_point(i)).collect::<Result<_>>()?;
    Chain::new(points, vec![graph.tau; path.len() - 1])
}

/// Fraction of interior nodes lying in the largest mutually reachable
/// class among interior nodes.
pub fn mutual_reachability_fraction(graph: &ChainGraph) -> f64 {
    let comps = strongly_connected_components(&graph.edges);
    let interior_total = graph.interior_mask.iter().filter(|&&m| m).count();
    if interior_total == 0 {
        return 0.0;
    }
    let best = comps
        .iter()
        .map(|c| {
            c.iter().filter(|&&i| graph.interior_mask[i as usize]).count()
        })
        .max()
        .unwrap_or(0);
    best as f64 / interior_total as f64
}
