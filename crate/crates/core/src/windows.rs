//! Temporal and spatial window plans and their execution.
//!
//! Time slots are the SE rounds `0..R` plus slot `R` holding the terminal
//! readout checks. A window decodes the checks in its region; selected edges
//! with at least one vertex in the commit region are committed: their global
//! vertices are flipped in the working syndrome, their masks accumulate, and
//! their events leave the event set. Afterwards the commit region is final, and
//! later windows drop every edge that touches a final check.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Block, CircuitError, LogicalCircuit};
use crate::decoder::{connected_components, Component, DecodeError, DecodeResult, Decoder, DecodingInstance, PreparedDecoder};
use crate::hypergraph::{DecodingHypergraph, WindowInstance};
use crate::noise::LogicalMask;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WindowError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("cannot plan spatial windows: {0}")]
    Unplannable(String),
    #[error("window {window}: {source}")]
    Decode { window: usize, source: DecodeError },
    #[error("{} checks still flipped after the final stage (first: {})", .checks.len(), .checks[0])]
    Residual { checks: Vec<usize> },
    #[error("edge {edge} has no vertex inside window {window}")]
    EdgeOutsideWindow { edge: usize, window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Temporal,
    Spatial,
}

/// A set of logical qubits over the half-open slot range `start..end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub qubits: Vec<usize>,
    pub start: usize,
    pub end: usize,
}

impl Region {
    pub fn contains(&self, qubit: usize, round: usize) -> bool {
        round >= self.start && round < self.end && self.qubits.binary_search(&qubit).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty() || self.start >= self.end
    }

    /// Number of (qubit, slot) cells.
    pub fn volume(&self) -> usize {
        self.qubits.len() * self.end.saturating_sub(self.start)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, "q{{{}}} r[{},{})", qs.join(","), self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub id: usize,
    pub kind: WindowKind,
    pub region: Region,
    pub commit: Region,
    pub buffers: Vec<Region>,
    /// Block indices for spatial windows.
    pub blocks: Vec<usize>,
    pub commit_blocks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMode {
    None,
    Temporal,
    SpatialFf,
    SpatialParallel,
}

impl WindowMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowMode::None => "none",
            WindowMode::Temporal => "temporal",
            WindowMode::SpatialFf => "spatial-ff",
            WindowMode::SpatialParallel => "spatial-parallel",
        }
    }
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for WindowMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(WindowMode::None),
            "temporal" => Ok(WindowMode::Temporal),
            "spatial-ff" => Ok(WindowMode::SpatialFf),
            "spatial-parallel" => Ok(WindowMode::SpatialParallel),
            other => Err(format!("unknown window mode `{other}`")),
        }
    }
}

/// Window sizes in rounds (temporal) or blocks (spatial).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSizes {
    pub window: usize,
    pub commit: usize,
    pub buffer: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub mode: WindowMode,
    pub sizes: WindowSizes,
    /// Windows of one stage have disjoint regions and may run concurrently.
    pub stages: Vec<Vec<WindowSpec>>,
    /// Number of time slots, SE rounds plus the terminal slot.
    pub slots: usize,
}

impl WindowPlan {
    pub fn windows(&self) -> impl Iterator<Item = &WindowSpec> {
        self.stages.iter().flatten()
    }

    pub fn num_windows(&self) -> usize {
        self.stages.iter().map(|s| s.len()).sum()
    }

    /// Table with one row per window.
    pub fn table(&self) -> String {
        let mut s = String::from("window\tstage\tregion\tcommit\tbuffers\n");
        for (k, stage) in self.stages.iter().enumerate() {
            for w in stage {
                let b: Vec<String> = w.buffers.iter().map(|r| r.to_string()).collect();
                let buffers = if b.is_empty() { "-".to_string() } else { b.join(" ") };
                s.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", w.id, k, w.region, w.commit, buffers));
            }
        }
        s
    }
}

fn all_qubits(circuit: &LogicalCircuit) -> Vec<usize> {
    (0..circuit.num_qubits).collect()
}

/// A single window committing everything.
pub fn plan_monolithic(circuit: &LogicalCircuit) -> WindowPlan {
    let slots = circuit.se_rounds() + 1;
    let region = Region { qubits: all_qubits(circuit), start: 0, end: slots };
    WindowPlan {
        mode: WindowMode::None,
        sizes: WindowSizes { window: slots, commit: slots, buffer: 0 },
        stages: vec![vec![WindowSpec {
            id: 0,
            kind: WindowKind::Temporal,
            commit: region.clone(),
            region,
            buffers: vec![],
            blocks: vec![],
            commit_blocks: vec![],
        }]],
        slots,
    }
}

/// Windows of `d + 1` rounds committing the first `(d + 1) / 2` and sliding by
/// that much; the window reaching the end commits everything.
pub fn plan_temporal(circuit: &LogicalCircuit, d: usize) -> WindowPlan {
    let rounds = circuit.se_rounds();
    let slots = rounds + 1;
    let n_w = d + 1;
    let n_c = (d + 1) / 2;
    let qubits = all_qubits(circuit);
    let mut stages = Vec::new();
    let mut start = 0;
    loop {
        let id = stages.len();
        let last = start + n_w >= rounds;
        let end = if last { slots } else { start + n_w };
        let region = Region { qubits: qubits.clone(), start, end };
        let (commit, buffers) = if last {
            (region.clone(), vec![])
        } else {
            (
                Region { qubits: qubits.clone(), start, end: start + n_c },
                vec![Region { qubits: qubits.clone(), start: start + n_c, end }],
            )
        };
        stages.push(vec![WindowSpec {
            id,
            kind: WindowKind::Temporal,
            region,
            commit,
            buffers,
            blocks: vec![],
            commit_blocks: vec![],
        }]);
        if last {
            break;
        }
        start += n_c;
    }
    WindowPlan { mode: WindowMode::Temporal, sizes: WindowSizes { window: n_w, commit: n_c, buffer: n_w - n_c }, stages, slots }
}

/// Buffer depth in blocks so that `m_b * L >= (d + 1) / 2`.
pub fn spatial_buffer_blocks(d: usize, depth: usize) -> Result<usize, WindowError> {
    if depth == 0 {
        return Err(WindowError::Unplannable("blocks have zero gate depth".into()));
    }
    Ok((d + 1).div_ceil(2).div_ceil(depth))
}

fn spatial_window(id: usize, blocks: &[Block], region: std::ops::Range<usize>, commit: std::ops::Range<usize>, slots: usize) -> WindowSpec {
    let qubits_of = |r: std::ops::Range<usize>| {
        let mut q: Vec<usize> = blocks[r].iter().flat_map(|b| b.qubits.iter().copied()).collect();
        q.sort_unstable();
        q
    };
    let mut buffers = Vec::new();
    if region.start < commit.start {
        buffers.push(Region { qubits: qubits_of(region.start..commit.start), start: 0, end: slots });
    }
    if commit.end < region.end {
        buffers.push(Region { qubits: qubits_of(commit.end..region.end), start: 0, end: slots });
    }
    WindowSpec {
        id,
        kind: WindowKind::Spatial,
        region: Region { qubits: qubits_of(region.clone()), start: 0, end: slots },
        commit: Region { qubits: qubits_of(commit.clone()), start: 0, end: slots },
        buffers,
        blocks: region.collect(),
        commit_blocks: commit.collect(),
    }
}

struct SpatialSetup {
    blocks: Vec<Block>,
    m_b: usize,
    slots: usize,
}

fn spatial_setup(circuit: &LogicalCircuit, d: usize) -> Result<SpatialSetup, WindowError> {
    let blocks = circuit.block_partition()?;
    let m_b = if blocks.len() == 1 { 1 } else { spatial_buffer_blocks(d, blocks[0].depth)? };
    Ok(SpatialSetup { blocks, m_b, slots: circuit.se_rounds() + 1 })
}

/// Windows of `m_w = 2 m_b` blocks sliding by `m_c = m_b`; the last commits everything.
pub fn plan_spatial_feedforward(circuit: &LogicalCircuit, d: usize) -> Result<WindowPlan, WindowError> {
    let SpatialSetup { blocks, m_b, slots } = spatial_setup(circuit, d)?;
    let nb = blocks.len();
    let (m_c, m_w) = (m_b, 2 * m_b);
    let mut stages = Vec::new();
    let mut start = 0;
    loop {
        let id = stages.len();
        let last = start + m_w >= nb;
        let end = if last { nb } else { start + m_w };
        let commit = if last { start..end } else { start..start + m_c };
        stages.push(vec![spatial_window(id, &blocks, start..end, commit, slots)]);
        if last {
            break;
        }
        start += m_c;
    }
    Ok(WindowPlan { mode: WindowMode::SpatialFf, sizes: WindowSizes { window: m_w, commit: m_c, buffer: m_b }, stages, slots })
}

/// Stage 1: disjoint windows with a central commit of `m_c` blocks flanked by
/// `m_b` buffer blocks on each side. Stage 2: the uncommitted runs in between,
/// each decoded and committed as a whole.
pub fn plan_spatial_parallel(circuit: &LogicalCircuit, d: usize) -> Result<WindowPlan, WindowError> {
    let SpatialSetup { blocks, m_b, slots } = spatial_setup(circuit, d)?;
    let nb = blocks.len();
    let m_c = m_b;
    let width = 2 * m_b + m_c;
    let sizes = WindowSizes { window: width, commit: m_c, buffer: m_b };
    if nb <= width {
        let w = spatial_window(0, &blocks, 0..nb, 0..nb, slots);
        return Ok(WindowPlan { mode: WindowMode::SpatialParallel, sizes, stages: vec![vec![w], vec![]], slots });
    }
    let mut stage1 = Vec::new();
    let mut committed = vec![false; nb];
    let mut start = 0;
    while start < nb {
        let end = (start + width).min(nb);
        let c0 = (start + m_b).min(end);
        let c1 = (c0 + m_c).min(end);
        if c0 < c1 {
            committed[c0..c1].iter_mut().for_each(|c| *c = true);
            stage1.push(spatial_window(stage1.len(), &blocks, start..end, c0..c1, slots));
        }
        start = end;
    }
    let mut stage2 = Vec::new();
    let mut b = 0;
    while b < nb {
        if committed[b] {
            b += 1;
            continue;
        }
        let s = b;
        while b < nb && !committed[b] {
            b += 1;
        }
        stage2.push(spatial_window(stage1.len() + stage2.len(), &blocks, s..b, s..b, slots));
    }
    Ok(WindowPlan { mode: WindowMode::SpatialParallel, sizes, stages: vec![stage1, stage2], slots })
}

pub fn plan_for_mode(circuit: &LogicalCircuit, mode: WindowMode) -> Result<WindowPlan, WindowError> {
    let d = circuit.distance;
    match mode {
        WindowMode::None => Ok(plan_monolithic(circuit)),
        WindowMode::Temporal => Ok(plan_temporal(circuit, d)),
        WindowMode::SpatialFf => plan_spatial_feedforward(circuit, d),
        WindowMode::SpatialParallel => plan_spatial_parallel(circuit, d),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Commit,
    Defer,
}

/// Commit iff some vertex of the (already trimmed) edge lies in the commit region.
pub fn classify_hyperedge(graph: &DecodingHypergraph, edge: usize, window: &WindowSpec) -> Result<Classification, WindowError> {
    let verts: Vec<usize> = graph.edges[edge]
        .vertices
        .iter()
        .copied()
        .filter(|&v| window.region.contains(graph.checks[v].qubit, graph.checks[v].round))
        .collect();
    if verts.is_empty() {
        return Err(WindowError::EdgeOutsideWindow { edge, window: window.id });
    }
    let commit = verts.iter().any(|&v| window.commit.contains(graph.checks[v].qubit, graph.checks[v].round));
    Ok(if commit { Classification::Commit } else { Classification::Defer })
}

fn membership(graph: &DecodingHypergraph, region: &Region) -> Vec<bool> {
    graph.checks.iter().map(|c| region.contains(c.qubit, c.round)).collect()
}

/// Trims the graph to a window, dropping edges whose events were removed.
pub fn restrict_to_window(graph: &DecodingHypergraph, window: &WindowSpec, removed_events: &[usize]) -> WindowInstance {
    let mut removed = vec![false; graph.num_edges()];
    for &e in removed_events {
        if let Some(Some(edge)) = graph.event_edge.get(e) {
            removed[*edge] = true;
        }
    }
    graph.restrict(&membership(graph, &window.region), &vec![false; graph.num_checks()], &removed)
}

/// Connected components of a window instance, in local ids.
pub fn auto_split_independent(instance: &DecodingInstance) -> Vec<Component> {
    connected_components(instance, None)
}

struct Prepared {
    spec: WindowSpec,
    view: WindowInstance,
    /// Local edge index is committed when selected.
    commits: Vec<bool>,
    decoder: Box<dyn PreparedDecoder>,
}

/// A plan with its per-window restricted instances precomputed. Which checks are
/// final before a window depends only on the plan, so the instances are the
/// same for every shot.
pub struct PreparedPlan {
    pub plan: WindowPlan,
    stages: Vec<Vec<Prepared>>,
}

/// Edges committed by one window, in global ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCommit {
    pub window: usize,
    pub edges: Vec<usize>,
    pub mask: LogicalMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedResult {
    pub result: DecodeResult,
    pub commits: Vec<WindowCommit>,
}

impl PreparedPlan {
    pub fn new(graph: &DecodingHypergraph, plan: &WindowPlan, decoder: &dyn Decoder) -> Self {
        let mut finalized = vec![false; graph.num_checks()];
        let none_removed = vec![false; graph.num_edges()];
        let mut stages = Vec::with_capacity(plan.stages.len());
        for stage in &plan.stages {
            let mut prepared = Vec::with_capacity(stage.len());
            for spec in stage {
                let view = graph.restrict(&membership(graph, &spec.region), &finalized, &none_removed);
                let commits = view
                    .edge_map
                    .iter()
                    .map(|&e| matches!(classify_hyperedge(graph, e, spec), Ok(Classification::Commit)))
                    .collect();
                let decoder = decoder.prepare(&view.instance);
                prepared.push(Prepared { spec: spec.clone(), view, commits, decoder });
            }
            for spec in stage {
                for (f, inside) in finalized.iter_mut().zip(membership(graph, &spec.commit)) {
                    *f |= inside;
                }
            }
            stages.push(prepared);
        }
        PreparedPlan { plan: plan.clone(), stages }
    }

    pub fn instance(&self, window: usize) -> Option<&WindowInstance> {
        self.stages.iter().flatten().find(|p| p.spec.id == window).map(|p| &p.view)
    }

    /// Decodes one shot. `parallel` runs the windows of a stage on the rayon pool.
    pub fn decode(
        &self,
        graph: &DecodingHypergraph,
        syndrome: &[bool],
        parallel: bool,
    ) -> Result<WindowedResult, WindowError> {
        let mut working = syndrome.to_vec();
        let mut commits = Vec::new();
        let mut all = Vec::new();
        let mut mask = 0;
        for stage in &self.stages {
            let solve = |p: &Prepared| -> Result<WindowCommit, WindowError> {
                let local: Vec<bool> = p.view.check_map.iter().map(|&c| working[c]).collect();
                let r = p
                    .decoder
                    .decode(&local)
                    .map_err(|source| WindowError::Decode { window: p.spec.id, source: globalize(source, p) })?;
                let edges: Vec<usize> = r.edges.iter().filter(|&&e| p.commits[e]).map(|&e| p.view.edge_map[e]).collect();
                let mask = edges.iter().fold(0, |m, &e| m ^ graph.edges[e].mask);
                Ok(WindowCommit { window: p.spec.id, edges, mask })
            };
            let results: Vec<Result<WindowCommit, WindowError>> =
                if parallel && stage.len() > 1 { stage.par_iter().map(solve).collect() } else { stage.iter().map(solve).collect() };
            for r in results {
                let c = r?;
                for &e in &c.edges {
                    for &v in &graph.edges[e].vertices {
                        working[v] ^= true;
                    }
                }
                mask ^= c.mask;
                all.extend_from_slice(&c.edges);
                commits.push(c);
            }
        }
        let left: Vec<usize> = working.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
        if !left.is_empty() {
            return Err(WindowError::Residual { checks: left });
        }
        all.sort_unstable();
        let objective = all.iter().map(|&e| graph.edges[e].weight).sum();
        Ok(WindowedResult { result: DecodeResult { edges: all, objective, mask, residual: working }, commits })
    }
}

fn globalize(err: DecodeError, p: &Prepared) -> DecodeError {
    match err {
        DecodeError::Infeasible { check } => DecodeError::Infeasible { check: p.view.check_map[check] },
        other => other,
    }
}

/// Runs a plan on one syndrome.
pub fn run_windowed_decode(
    graph: &DecodingHypergraph,
    syndrome: &[bool],
    plan: &WindowPlan,
    decoder: &dyn Decoder,
) -> Result<WindowedResult, WindowError> {
    PreparedPlan::new(graph, plan, decoder).decode(graph, syndrome, false)
}
