//! Exact most-likely-error decoding of parity-constrained hypergraph instances.
//!
//! Given flipped checks `s`, find the edge set `E` minimizing `sum w_e` such that
//! every check is covered by an odd number of selected edges exactly when it is
//! flipped. Among optimal sets (costs within [`TIE_TOL`]) the one containing the
//! smallest edge id in which two candidates differ wins, which is the
//! lexicographically smallest sorted id sequence whenever neither is a prefix of
//! the other.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::sync::Mutex;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::LogicalMask;

/// Costs closer than this are treated as equal.
pub const TIE_TOL: f64 = 1e-9;

/// Largest instance the exhaustive decoder accepts.
pub const BRUTE_FORCE_MAX_EDGES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEdge {
    pub vertices: Vec<usize>,
    pub weight: f64,
    pub mask: LogicalMask,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecodingInstance {
    pub num_checks: usize,
    pub edges: Vec<InstanceEdge>,
}

impl DecodingInstance {
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.num_checks];
        for (e, edge) in self.edges.iter().enumerate() {
            for &v in &edge.vertices {
                inc[v].push(e);
            }
        }
        inc
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Selected edge ids, ascending.
    pub edges: Vec<usize>,
    pub objective: f64,
    pub mask: LogicalMask,
    /// Syndrome left after flipping the selected edges' vertices.
    pub residual: Vec<bool>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("syndrome has {syndrome} bits but the instance has {checks} checks")]
    LengthMismatch { syndrome: usize, checks: usize },
    #[error("infeasible syndrome: no edge set explains flipped check {check}")]
    Infeasible { check: usize },
    #[error("exhaustive decoding refused for {edges} edges (limit {BRUTE_FORCE_MAX_EDGES})")]
    TooLarge { edges: usize },
}

pub trait Decoder: Send + Sync {
    fn name(&self) -> &'static str;
    fn decode(&self, instance: &DecodingInstance, syndrome: &[bool]) -> Result<DecodeResult, DecodeError>;
    /// Binds the decoder to one instance for repeated syndromes.
    fn prepare(&self, instance: &DecodingInstance) -> Box<dyn PreparedDecoder>;
}

pub trait PreparedDecoder: Send + Sync {
    fn decode(&self, syndrome: &[bool]) -> Result<DecodeResult, DecodeError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MleDecoder;

#[derive(Debug, Clone, Copy, Default)]
pub struct BruteForceDecoder;

impl Decoder for MleDecoder {
    fn name(&self) -> &'static str {
        "mle"
    }
    fn decode(&self, instance: &DecodingInstance, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
        decode_mle(instance, syndrome)
    }
    fn prepare(&self, instance: &DecodingInstance) -> Box<dyn PreparedDecoder> {
        Box::new(PreparedInstance::new(instance))
    }
}

impl PreparedDecoder for PreparedInstance {
    fn decode(&self, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
        PreparedInstance::decode(self, syndrome)
    }
}

struct BoundBruteForce(DecodingInstance);

impl PreparedDecoder for BoundBruteForce {
    fn decode(&self, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
        decode_bruteforce(&self.0, syndrome)
    }
}

impl Decoder for BruteForceDecoder {
    fn name(&self) -> &'static str {
        "bruteforce"
    }
    fn decode(&self, instance: &DecodingInstance, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
        decode_bruteforce(instance, syndrome)
    }
    fn prepare(&self, instance: &DecodingInstance) -> Box<dyn PreparedDecoder> {
        Box::new(BoundBruteForce(instance.clone()))
    }
}

/// Tie order on ascending id lists: the set holding the smallest differing id is smaller.
pub fn tie_order(a: &[usize], b: &[usize]) -> Ordering {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
            Ordering::Less => return Ordering::Less,
            Ordering::Greater => return Ordering::Greater,
        }
    }
    match (i < a.len(), j < b.len()) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => Ordering::Equal,
    }
}

/// True when `(cost, set)` beats the incumbent.
fn improves(cost: f64, set: &[usize], best: Option<&(f64, Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((bc, bs)) => cost < bc - TIE_TOL || ((cost - bc).abs() <= TIE_TOL && tie_order(set, bs) == Ordering::Less),
    }
}

fn objective_of(instance: &DecodingInstance, edges: &[usize]) -> f64 {
    edges.iter().map(|&e| instance.edges[e].weight).sum()
}

fn finish(instance: &DecodingInstance, syndrome: &[bool], mut edges: Vec<usize>) -> DecodeResult {
    edges.sort_unstable();
    let mut residual = syndrome.to_vec();
    let mut mask = 0;
    for &e in &edges {
        for &v in &instance.edges[e].vertices {
            residual[v] ^= true;
        }
        mask ^= instance.edges[e].mask;
    }
    DecodeResult { objective: objective_of(instance, &edges), edges, mask, residual }
}

fn check_len(instance: &DecodingInstance, syndrome: &[bool]) -> Result<(), DecodeError> {
    if syndrome.len() != instance.num_checks {
        return Err(DecodeError::LengthMismatch { syndrome: syndrome.len(), checks: instance.num_checks });
    }
    Ok(())
}

/// A connected piece of an instance in global ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub checks: Vec<usize>,
    pub edges: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of the check-edge incidence graph. Edges without
/// vertices are ignored; with a syndrome, components holding no flipped check
/// are pruned.
pub fn connected_components(instance: &DecodingInstance, syndrome: Option<&[bool]>) -> Vec<Component> {
    let n = instance.num_checks;
    let mut parent: Vec<usize> = (0..n).collect();
    for e in &instance.edges {
        if let Some((&first, rest)) = e.vertices.split_first() {
            for &v in rest {
                let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut comps: Vec<Component> = Vec::new();
    for c in 0..n {
        let r = find(&mut parent, c);
        if index[r] == usize::MAX {
            index[r] = comps.len();
            comps.push(Component { checks: Vec::new(), edges: Vec::new() });
        }
        comps[index[r]].checks.push(c);
    }
    for (id, e) in instance.edges.iter().enumerate() {
        if let Some(&v) = e.vertices.first() {
            let r = find(&mut parent, v);
            comps[index[r]].edges.push(id);
        }
    }
    match syndrome {
        Some(s) => comps.into_iter().filter(|c| c.checks.iter().any(|&v| s[v])).collect(),
        None => comps,
    }
}

pub fn component_decompose(instance: &DecodingInstance, syndrome: &[bool]) -> Result<Vec<Component>, DecodeError> {
    check_len(instance, syndrome)?;
    Ok(connected_components(instance, Some(syndrome)))
}

/// Row-reduces the component's incidence matrix, with the syndrome as an extra
/// column when given. Returns the rank and whether the syndrome is in range.
fn eliminate(instance: &DecodingInstance, comp: &Component, syndrome: Option<&[bool]>) -> (usize, bool) {
    let mut local = HashMap::with_capacity(comp.checks.len());
    for (i, &c) in comp.checks.iter().enumerate() {
        local.insert(c, i);
    }
    let words = comp.edges.len().div_ceil(64) + 1;
    let rhs_bit = comp.edges.len();
    // one row per check: incident edges plus the syndrome bit in the last column
    let mut rows: Vec<Vec<u64>> = vec![vec![0; words]; comp.checks.len()];
    for (j, &e) in comp.edges.iter().enumerate() {
        for &v in &instance.edges[e].vertices {
            rows[local[&v]][j / 64] ^= 1 << (j % 64);
        }
    }
    if let Some(s) = syndrome {
        for (i, &c) in comp.checks.iter().enumerate() {
            if s[c] {
                rows[i][rhs_bit / 64] |= 1 << (rhs_bit % 64);
            }
        }
    }
    let mut rank = 0;
    for col in 0..comp.edges.len() {
        let (w, b) = (col / 64, 1u64 << (col % 64));
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][w] & b != 0) else { continue };
        rows.swap(rank, piv);
        for r in 0..rows.len() {
            if r != rank && rows[r][w] & b != 0 {
                let (src, dst) = if r < rank {
                    let (lo, hi) = rows.split_at_mut(rank);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = rows.split_at_mut(r);
                    (&lo[rank], &mut hi[0])
                };
                for k in 0..words {
                    dst[k] ^= src[k];
                }
            }
        }
        rank += 1;
    }
    let (w, b) = (rhs_bit / 64, 1u64 << (rhs_bit % 64));
    (rank, !(rank..rows.len()).any(|r| rows[r][w] & b != 0))
}

/// GF(2) solvability of one component, returning a witness check when unsolvable.
fn feasibility(instance: &DecodingInstance, comp: &Component, syndrome: &[bool]) -> Result<(), DecodeError> {
    if eliminate(instance, comp, Some(syndrome)).1 {
        return Ok(());
    }
    // a flipped check no edge reaches, else the component's first flipped check
    let reachable = |c: usize| comp.edges.iter().any(|&e| instance.edges[e].vertices.contains(&c));
    let flipped = comp.checks.iter().copied().filter(|&c| syndrome[c]);
    let check = flipped.clone().find(|&c| !reachable(c)).or_else(|| flipped.clone().next()).unwrap_or(comp.checks[0]);
    Err(DecodeError::Infeasible { check })
}

/// Clusters with at most this many flipped checks are memoized.
const MEMO_MAX_DEFECTS: usize = 6;
const MEMO_CAPACITY: usize = 1 << 18;

/// An instance with its components, ranks and sorted incidence lists computed
/// once, for decoding many syndromes.
///
/// Flipped checks in a component are split into clusters that are decoded
/// separately. Clusters `A` are kept apart only when connecting any of them to
/// another costs more than the summed cluster optima: any optimal solution then
/// splits into per-cluster optima, and the tie order composes over that split.
#[derive(Debug)]
pub struct PreparedInstance {
    instance: DecodingInstance,
    comps: Vec<Component>,
    comp_of: Vec<usize>,
    /// Every syndrome on the component is explainable.
    full_rank: Vec<bool>,
    /// Incident edges of each check, ascending by (weight, id).
    adj: Vec<Vec<usize>>,
    /// Weight of an edge shared out over its vertices.
    share: Vec<f64>,
    min_weight: Vec<f64>,
    max_weight: Vec<f64>,
    memo: Mutex<HashMap<Vec<usize>, Vec<usize>>>,
    trails: Option<TrailTable>,
    pool: Mutex<Vec<Buffers>>,
}

/// Largest instance for which trail distances are tabulated up front.
const TRAIL_TABLE_MAX_CHECKS: usize = 2048;

/// Trail-metric distances over all edges: check to check, and check to the
/// nearest edge of odd size. Ignoring branch decisions only shortens paths, so
/// bounds from the table stay admissible.
#[derive(Debug)]
struct TrailTable {
    n: usize,
    pair: Vec<f32>,
    term: Vec<f32>,
    /// Check to check distances where crossing an edge costs its full weight.
    full: Vec<f32>,
}

impl PreparedInstance {
    /// Prepares for many syndromes, tabulating distances when the instance is small enough.
    pub fn new(instance: &DecodingInstance) -> Self {
        let mut p = Self::light(instance);
        if instance.num_checks <= TRAIL_TABLE_MAX_CHECKS {
            p.trails = Some(p.trail_table());
        }
        p
    }

    /// Prepares without distance tables, for decoding a handful of syndromes.
    pub fn light(instance: &DecodingInstance) -> Self {
        let all = connected_components(instance, None);
        let mut comp_of = vec![usize::MAX; instance.num_checks];
        let mut comps = Vec::new();
        let mut full_rank = Vec::new();
        let mut min_weight = Vec::new();
        let mut max_weight = Vec::new();
        for comp in all {
            // isolated checks without edges never decode a flip
            let (rank, _) = eliminate(instance, &comp, None);
            for &c in &comp.checks {
                comp_of[c] = comps.len();
            }
            full_rank.push(rank == comp.checks.len());
            min_weight.push(comp.edges.iter().map(|&e| instance.edges[e].weight).fold(f64::INFINITY, f64::min));
            max_weight.push(comp.edges.iter().map(|&e| instance.edges[e].weight).fold(0.0, f64::max));
            comps.push(comp);
        }
        let mut adj = instance.incidence();
        for a in &mut adj {
            a.sort_by(|&x, &y| instance.edges[x].weight.total_cmp(&instance.edges[y].weight).then(x.cmp(&y)));
        }
        let share = instance.edges.iter().map(|e| e.weight / e.vertices.len().max(1) as f64).collect();
        PreparedInstance {
            instance: instance.clone(),
            comps,
            comp_of,
            full_rank,
            adj,
            share,
            min_weight,
            max_weight,
            memo: Mutex::new(HashMap::new()),
            trails: None,
            pool: Mutex::new(Vec::new()),
        }
    }

    pub fn instance(&self) -> &DecodingInstance {
        &self.instance
    }

    fn trail_table(&self) -> TrailTable {
        let n = self.instance.num_checks;
        let mut pair = vec![f32::INFINITY; n * n];
        let mut term = vec![f32::INFINITY; n];
        let mut full = vec![f32::INFINITY; n * n];
        let mut search = Search::new(self);
        for c in 0..n {
            term[c] = search.trail_distances(c, &mut pair[c * n..(c + 1) * n]) as f32;
            search.full_distances(c, &mut full[c * n..(c + 1) * n]);
        }
        TrailTable { n, pair, term, full }
    }

    pub fn decode(&self, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
        check_len(&self.instance, syndrome)?;
        let mut touched: Vec<usize> = syndrome.iter().enumerate().filter(|(_, b)| **b).map(|(c, _)| self.comp_of[c]).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut edges = Vec::new();
        if touched.is_empty() {
            return Ok(finish(&self.instance, syndrome, edges));
        }
        let mut search = Search::new(self);
        for k in touched {
            let comp = &self.comps[k];
            if !self.full_rank[k] {
                feasibility(&self.instance, comp, syndrome)?;
            }
            let odd: Vec<usize> = comp.checks.iter().copied().filter(|&c| syndrome[c]).collect();
            match self.solve_component(&mut search, k, odd.clone()) {
                Some(set) => edges.extend(set),
                None => return Err(DecodeError::Infeasible { check: odd[0] }),
            }
        }
        Ok(finish(&self.instance, syndrome, edges))
    }

    fn solve_cluster(&self, search: &mut Search<'_>, k: usize, defects: &[usize]) -> Option<Vec<usize>> {
        let memo = defects.len() <= MEMO_MAX_DEFECTS;
        if memo {
            if let Some(hit) = self.memo.lock().expect("memo lock").get(defects) {
                return Some(hit.clone());
            }
        }
        let set = search.solve(defects, self.min_weight[k])?;
        if memo {
            let mut m = self.memo.lock().expect("memo lock");
            if m.len() < MEMO_CAPACITY {
                m.insert(defects.to_vec(), set.clone());
            }
        }
        Some(set)
    }

    fn solve_component(&self, search: &mut Search<'_>, k: usize, defects: Vec<usize>) -> Option<Vec<usize>> {
        if defects.len() <= 1 || !self.full_rank[k] {
            return self.solve_cluster(search, k, &defects);
        }
        // start from single linkage at one edge of the heaviest weight
        let mut label: Vec<usize> = (0..defects.len()).collect();
        for (i, &a) in defects.iter().enumerate() {
            for b in search.reach(&[a], self.max_weight[k], &defects) {
                let j = defects.binary_search(&b).expect("reach returns defects");
                let (x, y) = (find(&mut label, i), find(&mut label, j));
                label[x.max(y)] = x.min(y);
            }
        }
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; defects.len()];
        for i in 0..defects.len() {
            let r = find(&mut label, i);
            if slot[r] == usize::MAX {
                slot[r] = clusters.len();
                clusters.push(Vec::new());
            }
            clusters[slot[r]].push(defects[i]);
        }
        let mut sols: Vec<Option<(f64, Vec<usize>)>> = vec![None; clusters.len()];
        loop {
            for (c, sol) in clusters.iter().zip(sols.iter_mut()) {
                if sol.is_none() {
                    let set = self.solve_cluster(search, k, c)?;
                    let cost = set.iter().map(|&e| self.instance.edges[e].weight).sum();
                    *sol = Some((cost, set));
                }
            }
            if clusters.len() == 1 {
                return sols.pop().flatten().map(|(_, s)| s);
            }
            let total: f64 = sols.iter().flatten().map(|(c, _)| c).sum();
            let mut merge = None;
            for (i, c) in clusters.iter().enumerate() {
                let near = search.reach(c, total + TIE_TOL, &defects);
                let others: BTreeSet<usize> =
                    near.iter().filter_map(|v| clusters.iter().position(|o| o.binary_search(v).is_ok())).filter(|&j| j != i).collect();
                if !others.is_empty() {
                    merge = Some((i, others));
                    break;
                }
            }
            let Some((i, others)) = merge else {
                let mut all: Vec<usize> = sols.into_iter().flatten().flat_map(|(_, s)| s).collect();
                all.sort_unstable();
                return Some(all);
            };
            let mut joined = clusters[i].clone();
            for &j in &others {
                joined.extend_from_slice(&clusters[j]);
            }
            joined.sort_unstable();
            let mut keep_c = Vec::new();
            let mut keep_s = Vec::new();
            for (j, (c, s)) in clusters.into_iter().zip(sols).enumerate() {
                if j != i && !others.contains(&j) {
                    keep_c.push(c);
                    keep_s.push(s);
                }
            }
            keep_c.push(joined);
            keep_s.push(None);
            clusters = keep_c;
            sols = keep_s;
        }
    }
}

/// Search scratch returned to the instance after each decode; the search
/// leaves counts and states zeroed on exit.
#[derive(Debug)]
struct Buffers {
    odd_count: Vec<u32>,
    state: Vec<u8>,
    dist: Vec<f64>,
    stamp: Vec<u32>,
    generation: u32,
}

impl Drop for Search<'_> {
    fn drop(&mut self) {
        if !self.odd.is_empty() || !self.chosen.is_empty() {
            return;
        }
        let b = Buffers {
            odd_count: std::mem::take(&mut self.odd_count),
            state: std::mem::take(&mut self.state),
            dist: std::mem::take(&mut self.dist),
            stamp: std::mem::take(&mut self.stamp),
            generation: self.generation,
        };
        if let Ok(mut pool) = self.p.pool.lock() {
            pool.push(b);
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, usize);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    // reversed for a min-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

const UNDECIDED: u8 = 0;
const IN: u8 = 1;
const OUT: u8 = 2;

/// Depth-first branch and bound with iterative deepening: until a first solution
/// exists, nodes whose bound exceeds a threshold are cut and the threshold grows
/// between passes. The bound is the larger of two admissible estimates for the
/// remaining cost:
///
/// * each odd check needs an undecided incident edge, whose weight is split
///   over the odd checks it touches;
/// * in the check/edge incidence graph of any remaining solution, every odd
///   check ends a trail at another odd check or at an edge of odd size. Charging
///   `w_e / |e|` per incidence makes the trails disjoint in cost, so half the
///   distance to the nearest other odd check, or the full distance to the
///   nearest odd edge, bounds each odd check's share.
struct Search<'a> {
    p: &'a PreparedInstance,
    odd: BTreeSet<usize>,
    odd_count: Vec<u32>,
    state: Vec<u8>,
    chosen: Vec<usize>,
    cost: f64,
    best: Option<(f64, Vec<usize>)>,
    limit: f64,
    exceeded: f64,
    // Dijkstra scratch: node ids are checks, then edges offset by num_checks
    dist: Vec<f64>,
    stamp: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Dist>,
}

impl<'a> Search<'a> {
    fn new(p: &'a PreparedInstance) -> Self {
        let m = p.instance.edges.len();
        let nodes = p.instance.num_checks + m;
        let b = p.pool.lock().expect("pool lock").pop().unwrap_or_else(|| Buffers {
            odd_count: vec![0; m],
            state: vec![UNDECIDED; m],
            dist: vec![0.0; nodes],
            stamp: vec![0; nodes],
            generation: 0,
        });
        Search {
            p,
            odd: BTreeSet::new(),
            odd_count: b.odd_count,
            state: b.state,
            chosen: Vec::new(),
            cost: 0.0,
            best: None,
            limit: 0.0,
            exceeded: f64::INFINITY,
            dist: b.dist,
            stamp: b.stamp,
            generation: b.generation,
            heap: BinaryHeap::new(),
        }
    }

    fn solve(&mut self, odd: &[usize], step: f64) -> Option<Vec<usize>> {
        for &c in odd {
            self.toggle(c);
        }
        let result = self.deepen(step.max(TIE_TOL));
        for &c in odd {
            self.toggle(c);
        }
        debug_assert!(self.odd.is_empty() && self.chosen.is_empty());
        result
    }

    fn deepen(&mut self, step: f64) -> Option<Vec<usize>> {
        self.best = None;
        self.limit = self.lower_bound()?;
        loop {
            self.exceeded = f64::INFINITY;
            self.run();
            if let Some((_, set)) = self.best.take() {
                return Some(set);
            }
            if self.exceeded == f64::INFINITY {
                return None;
            }
            self.limit = self.exceeded.max(self.limit + step);
        }
    }

    fn toggle(&mut self, v: usize) {
        let now_odd = self.odd.insert(v);
        if !now_odd {
            self.odd.remove(&v);
        }
        for &f in &self.p.adj[v] {
            if now_odd {
                self.odd_count[f] += 1;
            } else {
                self.odd_count[f] -= 1;
            }
        }
    }

    fn flip(&mut self, e: usize) {
        for i in 0..self.p.instance.edges[e].vertices.len() {
            self.toggle(self.p.instance.edges[e].vertices[i]);
        }
    }

    fn incident_bound(&self) -> Option<f64> {
        let mut lb = 0.0;
        for &c in &self.odd {
            let m = self.p.adj[c]
                .iter()
                .filter(|&&e| self.state[e] == UNDECIDED)
                .map(|&e| self.p.instance.edges[e].weight / self.odd_count[e] as f64)
                .fold(f64::INFINITY, f64::min);
            if m == f64::INFINITY {
                return None;
            }
            lb += m;
        }
        Some(lb)
    }

    /// Share of odd check `c` under the trail argument, or `None` if it cannot be explained.
    fn trail_share(&mut self, c: usize) -> Option<f64> {
        let n = self.p.instance.num_checks;
        let g = self.next_generation();
        self.heap.clear();
        self.heap.push(Dist(0.0, c));
        self.stamp[c] = g;
        self.dist[c] = 0.0;
        let mut best = f64::INFINITY;
        while let Some(Dist(d, node)) = self.heap.pop() {
            if d > self.dist[node] || d * 0.5 >= best {
                if d * 0.5 >= best {
                    break;
                }
                continue;
            }
            if node < n {
                if node != c && self.odd.contains(&node) {
                    best = best.min(d * 0.5);
                    continue;
                }
                for &e in &self.p.adj[node] {
                    if self.state[e] != UNDECIDED {
                        continue;
                    }
                    let (id, nd) = (n + e, d + self.p.share[e]);
                    if self.stamp[id] != g || nd < self.dist[id] {
                        self.stamp[id] = g;
                        self.dist[id] = nd;
                        self.heap.push(Dist(nd, id));
                    }
                }
            } else {
                let e = node - n;
                let verts = &self.p.instance.edges[e].vertices;
                if verts.len() % 2 == 1 {
                    best = best.min(d);
                }
                for &u in verts {
                    let nd = d + self.p.share[e];
                    if self.stamp[u] != g || nd < self.dist[u] {
                        self.stamp[u] = g;
                        self.dist[u] = nd;
                        self.heap.push(Dist(nd, u));
                    }
                }
            }
        }
        (best < f64::INFINITY).then_some(best)
    }

    /// Fills `row` with trail distances from `c` to every check over all edges and
    /// returns the distance to the nearest odd edge.
    fn trail_distances(&mut self, c: usize, row: &mut [f32]) -> f64 {
        let n = self.p.instance.num_checks;
        let g = self.next_generation();
        self.heap.clear();
        self.heap.push(Dist(0.0, c));
        self.stamp[c] = g;
        self.dist[c] = 0.0;
        let mut term = f64::INFINITY;
        while let Some(Dist(d, node)) = self.heap.pop() {
            if d > self.dist[node] {
                continue;
            }
            if node < n {
                row[node] = d as f32;
                for &e in &self.p.adj[node] {
                    let (id, nd) = (n + e, d + self.p.share[e]);
                    if self.stamp[id] != g || nd < self.dist[id] {
                        self.stamp[id] = g;
                        self.dist[id] = nd;
                        self.heap.push(Dist(nd, id));
                    }
                }
            } else {
                let verts = &self.p.instance.edges[node - n].vertices;
                if verts.len() % 2 == 1 {
                    term = term.min(d);
                }
                let nd = d + self.p.share[node - n];
                for &u in verts {
                    if self.stamp[u] != g || nd < self.dist[u] {
                        self.stamp[u] = g;
                        self.dist[u] = nd;
                        self.heap.push(Dist(nd, u));
                    }
                }
            }
        }
        term
    }

    fn full_distances(&mut self, c: usize, row: &mut [f32]) {
        let n = self.p.instance.num_checks;
        let g = self.next_generation();
        self.heap.clear();
        self.heap.push(Dist(0.0, c));
        self.stamp[c] = g;
        self.dist[c] = 0.0;
        while let Some(Dist(d, node)) = self.heap.pop() {
            if d > self.dist[node] {
                continue;
            }
            if node < n {
                row[node] = d as f32;
                for &e in &self.p.adj[node] {
                    let (id, nd) = (n + e, d + self.p.instance.edges[e].weight);
                    if self.stamp[id] != g || nd < self.dist[id] {
                        self.stamp[id] = g;
                        self.dist[id] = nd;
                        self.heap.push(Dist(nd, id));
                    }
                }
            } else {
                for &u in &self.p.instance.edges[node - n].vertices {
                    if self.stamp[u] != g || d < self.dist[u] {
                        self.stamp[u] = g;
                        self.dist[u] = d;
                        self.heap.push(Dist(d, u));
                    }
                }
            }
        }
    }

    /// Members of `targets` (ascending) within `radius` of `sources`, where
    /// crossing an edge costs its full weight.
    fn reach(&mut self, sources: &[usize], radius: f64, targets: &[usize]) -> Vec<usize> {
        if let Some(t) = &self.p.trails {
            // round outwards so the table never hides a close pair
            let r = (radius * (1.0 + 1e-6)) as f32;
            return targets
                .iter()
                .copied()
                .filter(|v| !sources.contains(v) && sources.iter().any(|&s| t.full[s * t.n + v] <= r))
                .collect();
        }
        let n = self.p.instance.num_checks;
        let g = self.next_generation();
        self.heap.clear();
        for &c in sources {
            self.stamp[c] = g;
            self.dist[c] = 0.0;
            self.heap.push(Dist(0.0, c));
        }
        let mut found = Vec::new();
        while let Some(Dist(d, node)) = self.heap.pop() {
            if d > radius {
                break;
            }
            if d > self.dist[node] {
                continue;
            }
            if node < n {
                if d > 0.0 && targets.binary_search(&node).is_ok() && !sources.contains(&node) {
                    found.push(node);
                }
                for &e in &self.p.adj[node] {
                    let (id, nd) = (n + e, d + self.p.instance.edges[e].weight);
                    if nd <= radius && (self.stamp[id] != g || nd < self.dist[id]) {
                        self.stamp[id] = g;
                        self.dist[id] = nd;
                        self.heap.push(Dist(nd, id));
                    }
                }
            } else {
                for &u in &self.p.instance.edges[node - n].vertices {
                    if self.stamp[u] != g || d < self.dist[u] {
                        self.stamp[u] = g;
                        self.dist[u] = d;
                        self.heap.push(Dist(d, u));
                    }
                }
            }
        }
        found.sort_unstable();
        found
    }

    fn next_generation(&mut self) -> u32 {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.generation
    }

    fn trail_bound(&mut self) -> Option<f64> {
        if let Some(t) = &self.p.trails {
            let mut lb = 0.0;
            for &c in &self.odd {
                let row = &t.pair[c * t.n..(c + 1) * t.n];
                let mut share = t.term[c];
                for &o in &self.odd {
                    if o != c {
                        share = share.min(row[o] * 0.5);
                    }
                }
                if share == f32::INFINITY {
                    return None;
                }
                lb += share as f64;
            }
            // f32 rounding must not make the bound exceed the truth
            return Some(lb * (1.0 - 1e-6));
        }
        let odd: Vec<usize> = self.odd.iter().copied().collect();
        let mut lb = 0.0;
        for c in odd {
            lb += self.trail_share(c)?;
        }
        Some(lb)
    }

    fn lower_bound(&mut self) -> Option<f64> {
        let a = self.incident_bound()?;
        let b = self.trail_bound()?;
        Some(self.cost + a.max(b))
    }

    fn cut(&mut self, lb: f64) -> bool {
        match &self.best {
            Some((bc, _)) => lb > bc + TIE_TOL,
            None => {
                let over = lb > self.limit + TIE_TOL;
                if over {
                    self.exceeded = self.exceeded.min(lb);
                }
                over
            }
        }
    }

    fn run(&mut self) {
        if self.odd.is_empty() {
            let mut set = self.chosen.clone();
            set.sort_unstable();
            let cost: f64 = set.iter().map(|&e| self.p.instance.edges[e].weight).sum();
            // before an incumbent exists, a leaf above the threshold may hide a
            // cheaper sibling that was already cut
            if self.best.is_none() && cost > self.limit {
                self.exceeded = self.exceeded.min(cost);
                return;
            }
            if improves(cost, &set, self.best.as_ref()) {
                self.best = Some((cost, set));
            }
            return;
        }
        let Some(lb) = self.lower_bound() else { return };
        if self.cut(lb) {
            return;
        }
        // branch on the odd check with the fewest open edges
        let undecided = |s: &Self, c: usize| s.p.adj[c].iter().filter(|&&e| s.state[e] == UNDECIDED).count();
        let c = self.odd.iter().copied().min_by_key(|&c| (undecided(self, c), c)).expect("odd set is non-empty");
        let cands: Vec<usize> = self.p.adj[c].iter().copied().filter(|&e| self.state[e] == UNDECIDED).collect();
        for &e in &cands {
            self.state[e] = IN;
            self.chosen.push(e);
            self.cost += self.p.instance.edges[e].weight;
            self.flip(e);
            self.run();
            self.flip(e);
            self.cost -= self.p.instance.edges[e].weight;
            self.chosen.pop();
            self.state[e] = OUT;
            // later siblings all exclude `e`, so the bound still covers them
            match self.lower_bound() {
                None => break,
                Some(lb) if self.cut(lb) => break,
                _ => {}
            }
        }
        for &e in &cands {
            self.state[e] = UNDECIDED;
        }
    }
}

/// Exact branch-and-bound decoding, one connected component at a time.
pub fn decode_mle(instance: &DecodingInstance, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
    PreparedInstance::light(instance).decode(syndrome)
}
/// Scans all `2^M` edge subsets.
pub fn decode_bruteforce(instance: &DecodingInstance, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
    check_len(instance, syndrome)?;
    let m = instance.edges.len();
    if m > BRUTE_FORCE_MAX_EDGES {
        return Err(DecodeError::TooLarge { edges: m });
    }
    let words = instance.num_checks.div_ceil(64).max(1);
    let to_bits = |vs: &mut dyn Iterator<Item = usize>| {
        let mut b = vec![0u64; words];
        for v in vs {
            b[v / 64] ^= 1 << (v % 64);
        }
        b
    };
    let edge_bits: Vec<Vec<u64>> = instance.edges.iter().map(|e| to_bits(&mut e.vertices.iter().copied())).collect();
    let target = to_bits(&mut (0..instance.num_checks).filter(|&c| syndrome[c]));
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut acc = vec![0u64; words];
    for subset in 0u32..(1u32 << m) {
        acc.iter_mut().for_each(|w| *w = 0);
        for (e, bits) in edge_bits.iter().enumerate() {
            if subset >> e & 1 == 1 {
                for k in 0..words {
                    acc[k] ^= bits[k];
                }
            }
        }
        if acc != target {
            continue;
        }
        let set: Vec<usize> = (0..m).filter(|&e| subset >> e & 1 == 1).collect();
        let cost = objective_of(instance, &set);
        if improves(cost, &set, best.as_ref()) {
            best = Some((cost, set));
        }
    }
    match best {
        Some((_, set)) => Ok(finish(instance, syndrome, set)),
        None => {
            let comp = connected_components(instance, Some(syndrome))
                .into_iter()
                .find(|c| feasibility(instance, c, syndrome).is_err());
            let check = match comp.map(|c| feasibility(instance, &c, syndrome)) {
                Some(Err(DecodeError::Infeasible { check })) => check,
                _ => syndrome.iter().position(|&b| b).unwrap_or(0),
            };
            Err(DecodeError::Infeasible { check })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    UnknownEdge(usize),
    Parity { check: usize },
    Objective { reported: f64, recomputed: f64 },
    Mask { reported: LogicalMask, recomputed: LogicalMask },
    Residual,
}

/// Checks every parity constraint and recomputes objective, mask and residual.
pub fn verify_solution(instance: &DecodingInstance, syndrome: &[bool], result: &DecodeResult) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut parity = vec![false; instance.num_checks];
    let mut mask = 0;
    let mut valid = Vec::new();
    for &e in &result.edges {
        match instance.edges.get(e) {
            Some(edge) => {
                for &v in &edge.vertices {
                    parity[v] ^= true;
                }
                mask ^= edge.mask;
                valid.push(e);
            }
            None => out.push(Violation::UnknownEdge(e)),
        }
    }
    for c in 0..instance.num_checks {
        if parity[c] != syndrome.get(c).copied().unwrap_or(false) {
            out.push(Violation::Parity { check: c });
        }
    }
    valid.sort_unstable();
    let recomputed = objective_of(instance, &valid);
    if (recomputed - result.objective).abs() > TIE_TOL * (1.0 + recomputed.abs()) {
        out.push(Violation::Objective { reported: result.objective, recomputed });
    }
    if mask != result.mask {
        out.push(Violation::Mask { reported: result.mask, recomputed: mask });
    }
    let residual: Vec<bool> = (0..instance.num_checks).map(|c| parity[c] != syndrome.get(c).copied().unwrap_or(false)).collect();
    if residual != result.residual {
        out.push(Violation::Residual);
    }
    out
}

/// The decoding program in CPLEX LP format: binary `e_j`, integer slack `k_i`.
pub fn export_lp(instance: &DecodingInstance, syndrome: &[bool]) -> String {
    let mut s = String::from("\\ most-likely-error decoding\nMinimize\n obj:");
    for (j, e) in instance.edges.iter().enumerate() {
        let _ = write!(s, " {}{} e{j}", if j == 0 { "" } else { "+ " }, e.weight);
    }
    s.push_str("\nSubject To\n");
    let inc = instance.incidence();
    let mut slacks = Vec::new();
    for (i, edges) in inc.iter().enumerate() {
        let rhs = syndrome.get(i).copied().unwrap_or(false) as u8;
        if edges.is_empty() && rhs == 0 {
            continue;
        }
        let terms: Vec<String> = edges.iter().map(|e| format!("e{e}")).collect();
        let lhs = if terms.is_empty() { String::new() } else { terms.join(" + ") + " " };
        let _ = writeln!(s, " c{i}: {lhs}- 2 k{i} = {rhs}");
        slacks.push((i, edges.len() / 2));
    }
    if !slacks.is_empty() {
        s.push_str("Bounds\n");
        for (i, ub) in &slacks {
            let _ = writeln!(s, " 0 <= k{i} <= {ub}");
        }
    }
    if !instance.edges.is_empty() {
        s.push_str("Binaries\n");
        let vars: Vec<String> = (0..instance.edges.len()).map(|j| format!("e{j}")).collect();
        let _ = writeln!(s, " {}", vars.join(" "));
    }
    if !slacks.is_empty() {
        s.push_str("Generals\n");
        let vars: Vec<String> = slacks.iter().map(|(i, _)| format!("k{i}")).collect();
        let _ = writeln!(s, " {}", vars.join(" "));
    }
    s.push_str("End\n");
    s
}
