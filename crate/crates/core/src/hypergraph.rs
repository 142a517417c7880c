//! The decoding hypergraph: one vertex per check, one hyperedge per class of
//! error events with the same (check set, logical mask).

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::{Check, CheckDefs};
use crate::decoder::{DecodingInstance, InstanceEdge};
use crate::noise::{EventKind, EventTable, LogicalMask};
use crate::pauli::{Basis, Pauli};
use crate::physical::{Channel, Clifford1, Op, PhysicalCircuit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypergraphError {
    #[error("probability {0} outside (0, 0.5) has no positive weight")]
    BadProbability(f64),
    #[error("merged probability {p} of hyperedge with checks {checks:?} is not below 0.5")]
    MergedTooLikely { p: f64, checks: Vec<usize> },
    #[error("unknown error event id {0}")]
    UnknownEvent(usize),
    #[error("malformed hypergraph dump at line {line}: {message}")]
    Dump { line: usize, message: String },
}

/// `ln((1 - p) / p)`, the cost of assuming an event happened.
pub fn weight(p: f64) -> Result<f64, HypergraphError> {
    if !(p > 0.0 && p < 0.5) {
        return Err(HypergraphError::BadProbability(p));
    }
    Ok(((1.0 - p) / p).ln())
}

/// Probability that an odd number of two independent events occur.
pub fn odd_parity(pa: f64, pb: f64) -> f64 {
    pa * (1.0 - pb) + pb * (1.0 - pa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperedge {
    pub id: usize,
    /// Sorted check ids.
    pub vertices: Vec<usize>,
    pub mask: LogicalMask,
    pub p: f64,
    pub weight: f64,
    pub events: Vec<usize>,
}

/// What one event does: the checks it flips and the observables it flips.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub checks: Vec<usize>,
    pub mask: LogicalMask,
}

#[derive(Debug, Clone)]
pub struct DecodingHypergraph {
    pub checks: Vec<Check>,
    pub edges: Vec<Hyperedge>,
    /// Edges incident to each check.
    pub check_edges: Vec<Vec<usize>>,
    /// Edge of each event, `None` for events that act trivially.
    pub event_edge: Vec<Option<usize>>,
    signatures: Vec<Signature>,
    pub num_observables: usize,
    pub num_rounds: usize,
    pub distance: usize,
}

/// Sparse forward frame propagation of single Paulis from a given location.
struct Propagator<'a> {
    phys: &'a PhysicalCircuit,
    x: Vec<bool>,
    z: Vec<bool>,
    flips: Vec<bool>,
}

impl<'a> Propagator<'a> {
    fn new(phys: &'a PhysicalCircuit) -> Self {
        Propagator {
            phys,
            x: vec![false; phys.num_qubits],
            z: vec![false; phys.num_qubits],
            flips: vec![false; phys.num_slots()],
        }
    }

    /// Flipped slots after inserting `pauli` on `qubit` right after op `loc`.
    fn run(&mut self, loc: usize, qubit: usize, pauli: Pauli) -> Vec<usize> {
        let mut touched = vec![qubit];
        let mut slots = Vec::new();
        self.x[qubit] = pauli.x;
        self.z[qubit] = pauli.z;
        let mut active = 1usize;
        let on = |x: &[bool], z: &[bool], q: usize| x[q] || z[q];
        for op in &self.phys.ops[loc + 1..] {
            if active == 0 {
                break;
            }
            match op {
                Op::Reset { qubit, .. } if on(&self.x, &self.z, *qubit) => {
                    self.x[*qubit] = false;
                    self.z[*qubit] = false;
                    active -= 1;
                }
                Op::Measure { qubit, basis, slot } => {
                    let p = Pauli { x: self.x[*qubit], z: self.z[*qubit] };
                    if p.flips(*basis) {
                        self.flips[*slot] ^= true;
                        slots.push(*slot);
                    }
                }
                Op::Gate1 { qubit, gate: Clifford1::H } => {
                    let q = *qubit;
                    let (x, z) = (self.x[q], self.z[q]);
                    self.x[q] = z;
                    self.z[q] = x;
                }
                Op::Cnot { control, target } => {
                    let (c, t) = (*control, *target);
                    let before = on(&self.x, &self.z, c) as usize + on(&self.x, &self.z, t) as usize;
                    if before == 0 {
                        continue;
                    }
                    self.x[t] ^= self.x[c];
                    self.z[c] ^= self.z[t];
                    let after = on(&self.x, &self.z, c) as usize + on(&self.x, &self.z, t) as usize;
                    active = active + after - before;
                    touched.push(c);
                    touched.push(t);
                }
                Op::MeasurePauli { basis, qubits, slot } => {
                    let bits = if *basis == Basis::Z { &self.x } else { &self.z };
                    if qubits.iter().fold(false, |acc, &q| acc ^ bits[q]) {
                        self.flips[*slot] ^= true;
                        slots.push(*slot);
                    }
                }
                _ => {}
            }
        }
        for q in touched {
            self.x[q] = false;
            self.z[q] = false;
        }
        let mut out: Vec<usize> = slots.into_iter().filter(|&s| std::mem::take(&mut self.flips[s])).collect();
        out.sort_unstable();
        out
    }
}

fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Signatures of every event, computed from X and Z propagations per location.
pub fn propagate_all(phys: &PhysicalCircuit, defs: &CheckDefs, table: &EventTable) -> Vec<Signature> {
    let nloc = phys.ops.len();
    let per_loc: Vec<Vec<Signature>> = (0..nloc)
        .into_par_iter()
        .map_init(
            || Propagator::new(phys),
            |prop, l| {
                let events = table.at_location(l);
                if events.is_empty() {
                    return Vec::new();
                }
                let to_sig = |slots: &[usize]| {
                    let (checks, mask) = defs.checks_of_slots(slots.iter().copied());
                    Signature { checks, mask }
                };
                match phys.ops[l].channel() {
                    Channel::MeasureFlip(slot) => vec![to_sig(&[slot])],
                    Channel::ResetFlip(q, basis) => {
                        let p = if basis == Basis::Z { Pauli::X } else { Pauli::Z };
                        vec![to_sig(&prop.run(l, q, p))]
                    }
                    Channel::Depolarize1(q) => {
                        let sx = prop.run(l, q, Pauli::X);
                        let sz = prop.run(l, q, Pauli::Z);
                        events
                            .iter()
                            .map(|e| {
                                let EventKind::Pauli1(p) = e.kind else { unreachable!() };
                                let mut s = Vec::new();
                                if p.x {
                                    s = xor_sorted(&s, &sx);
                                }
                                if p.z {
                                    s = xor_sorted(&s, &sz);
                                }
                                to_sig(&s)
                            })
                            .collect()
                    }
                    Channel::Depolarize2(a, b) => {
                        let basis = [
                            prop.run(l, a, Pauli::X),
                            prop.run(l, a, Pauli::Z),
                            prop.run(l, b, Pauli::X),
                            prop.run(l, b, Pauli::Z),
                        ];
                        events
                            .iter()
                            .map(|e| {
                                let EventKind::Pauli2(pa, pb) = e.kind else { unreachable!() };
                                let mut s = Vec::new();
                                for (bit, sig) in [pa.x, pa.z, pb.x, pb.z].into_iter().zip(&basis) {
                                    if bit {
                                        s = xor_sorted(&s, sig);
                                    }
                                }
                                to_sig(&s)
                            })
                            .collect()
                    }
                }
            },
        )
        .collect();
    per_loc.into_iter().flatten().collect()
}

/// Groups events by signature and folds their probabilities.
pub fn merge_events(signatures: &[Signature], probs: &[f64]) -> Result<(Vec<Hyperedge>, Vec<Option<usize>>), HypergraphError> {
    let mut groups: HashMap<&Signature, (f64, Vec<usize>)> = HashMap::new();
    for (e, sig) in signatures.iter().enumerate() {
        if sig.checks.is_empty() && sig.mask == 0 {
            continue;
        }
        let g = groups.entry(sig).or_insert((0.0, Vec::new()));
        g.0 = odd_parity(g.0, probs[e]);
        g.1.push(e);
    }
    let mut sorted: Vec<(&Signature, (f64, Vec<usize>))> = groups.into_iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let mut event_edge = vec![None; signatures.len()];
    let mut edges = Vec::with_capacity(sorted.len());
    for (id, (sig, (p, events))) in sorted.into_iter().enumerate() {
        if p >= 0.5 {
            return Err(HypergraphError::MergedTooLikely { p, checks: sig.checks.clone() });
        }
        for &e in &events {
            event_edge[e] = Some(id);
        }
        edges.push(Hyperedge { id, vertices: sig.checks.clone(), mask: sig.mask, p, weight: weight(p)?, events });
    }
    Ok((edges, event_edge))
}

impl DecodingHypergraph {
    pub fn build(phys: &PhysicalCircuit, defs: &CheckDefs, table: &EventTable) -> Result<Self, HypergraphError> {
        let signatures = propagate_all(phys, defs, table);
        let probs: Vec<f64> = table.events.iter().map(|e| e.p).collect();
        let (edges, event_edge) = merge_events(&signatures, &probs)?;
        let mut check_edges = vec![Vec::new(); defs.len()];
        for e in &edges {
            for &v in &e.vertices {
                check_edges[v].push(e.id);
            }
        }
        Ok(DecodingHypergraph {
            checks: defs.checks.clone(),
            edges,
            check_edges,
            event_edge,
            signatures,
            num_observables: phys.num_logical,
            num_rounds: phys.num_rounds,
            distance: phys.layout.d,
        })
    }

    pub fn num_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_events(&self) -> usize {
        self.signatures.len()
    }

    /// Checks flipped by an event and its logical action.
    pub fn propagate_event(&self, event: usize) -> Result<&Signature, HypergraphError> {
        self.signatures.get(event).ok_or(HypergraphError::UnknownEvent(event))
    }

    /// Check syndrome and logical flips of a set of simultaneous events.
    pub fn syndrome_of(&self, events: &[usize]) -> (Vec<bool>, LogicalMask) {
        let mut syn = vec![false; self.num_checks()];
        let mut mask = 0;
        for &e in events {
            let sig = &self.signatures[e];
            for &c in &sig.checks {
                syn[c] ^= true;
            }
            mask ^= sig.mask;
        }
        (syn, mask)
    }

    /// The whole graph as a decoder instance (edge ids preserved).
    pub fn instance(&self) -> DecodingInstance {
        DecodingInstance {
            num_checks: self.num_checks(),
            edges: self
                .edges
                .iter()
                .map(|e| InstanceEdge { vertices: e.vertices.clone(), weight: e.weight, mask: e.mask })
                .collect(),
        }
    }

    /// Restricts to the checks with `in_window` set. Edges lose their outside
    /// vertices, and are dropped when none remain, when they touch a `finalized`
    /// check, or when their events were removed by an earlier commit.
    pub fn restrict(&self, in_window: &[bool], finalized: &[bool], removed_edges: &[bool]) -> WindowInstance {
        let mut local_of = vec![usize::MAX; self.num_checks()];
        let mut check_map = Vec::new();
        for (c, &inside) in in_window.iter().enumerate() {
            if inside && !finalized[c] {
                local_of[c] = check_map.len();
                check_map.push(c);
            }
        }
        let mut edges = Vec::new();
        let mut edge_map = Vec::new();
        for e in &self.edges {
            if removed_edges[e.id] || e.vertices.iter().any(|&v| finalized[v]) {
                continue;
            }
            let vertices: Vec<usize> =
                e.vertices.iter().filter(|&&v| local_of[v] != usize::MAX).map(|&v| local_of[v]).collect();
            if vertices.is_empty() {
                continue;
            }
            edges.push(InstanceEdge { vertices, weight: e.weight, mask: e.mask });
            edge_map.push(e.id);
        }
        WindowInstance { instance: DecodingInstance { num_checks: check_map.len(), edges }, check_map, edge_map }
    }

    /// Text dump: a header, one line per check and one per hyperedge.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hypergraph {} {} {}", self.num_checks(), self.num_edges(), self.num_observables);
        for c in &self.checks {
            let _ = writeln!(s, "check {} {} {} {}", c.id, c.qubit, c.round, c.basis);
        }
        for e in &self.edges {
            let verts = if e.vertices.is_empty() {
                "-".to_string()
            } else {
                e.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            };
            let bits: String = (0..self.num_observables).map(|i| if e.mask >> i & 1 == 1 { '1' } else { '0' }).collect();
            let _ = writeln!(s, "edge {} {:e} {} {} {} {}", e.id, e.p, e.weight, verts, bits, e.events.len());
        }
        s
    }
}

/// A restricted instance with maps back to global check and edge ids.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowInstance {
    pub instance: DecodingInstance,
    pub check_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

/// Reads a dump back as a decoder instance.
pub fn parse_dump(text: &str) -> Result<DecodingInstance, HypergraphError> {
    let err = |line: usize, message: &str| HypergraphError::Dump { line, message: message.to_string() };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty dump"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "hypergraph" {
        return Err(err(1, "expected `hypergraph N M K`"));
    }
    let num = |t: &str, line| t.parse::<usize>().map_err(|_| err(line, "bad integer"));
    let n = num(h[1], 1)?;
    let m = num(h[2], 1)?;
    let mut edges = Vec::with_capacity(m);
    let mut checks = 0;
    for (i, line) in lines {
        let ln = i + 1;
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.first().copied() {
            Some("check") => checks += 1,
            Some("edge") if t.len() == 7 => {
                let weight: f64 = t[3].parse().map_err(|_| err(ln, "bad weight"))?;
                let vertices = if t[4] == "-" {
                    Vec::new()
                } else {
                    t[4].split(',').map(|v| num(v, ln)).collect::<Result<Vec<_>, _>>()?
                };
                if vertices.iter().any(|&v| v >= n) {
                    return Err(err(ln, "vertex out of range"));
                }
                let mask = t[5].chars().rev().try_fold(0u64, |m, ch| match ch {
                    '0' => Ok(m << 1),
                    '1' => Ok(m << 1 | 1),
                    _ => Err(err(ln, "bad mask bits")),
                })?;
                edges.push(InstanceEdge { vertices, weight, mask });
            }
            _ => return Err(err(ln, "unrecognized line")),
        }
    }
    if checks != n || edges.len() != m {
        return Err(err(0, "counts disagree with header"));
    }
    Ok(DecodingInstance { num_checks: n, edges })
}
