//! Pauli noise: event enumeration, frame propagation, sampling and injection.
//!
//! Errors are tracked as a Pauli frame relative to the noiseless circuit, so a
//! raw measurement bit is 1 exactly when the frame flips it. Every operation has
//! a single noise location that fails with probability `p`: depolarizing
//! (3 or 15 equally likely Paulis) after gates and idles, and a flip at resets
//! and measurements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::CheckDefs;
use crate::pauli::{Basis, Pauli};
use crate::physical::{Channel, Clifford1, NoiseTier, Op, PhysicalCircuit};

pub type LogicalMask = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("physical error rate must lie in [0, 0.5), got {0}")]
    BadProbability(f64),
    #[error("unknown error event id {0}")]
    UnknownEvent(usize),
    #[error("check {check} references slot {slot} but the shot has {len} slots")]
    MissingSlot { check: usize, slot: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: f64,
    pub tier: NoiseTier,
}

impl NoiseModel {
    pub fn new(p: f64, tier: NoiseTier) -> Result<Self, NoiseError> {
        if !(0.0..0.5).contains(&p) {
            return Err(NoiseError::BadProbability(p));
        }
        Ok(NoiseModel { p, tier })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Pauli1(Pauli),
    Pauli2(Pauli, Pauli),
    /// Outcome flip for measurements, wrong eigenstate for resets.
    Flip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub id: usize,
    /// Index of the operation the event follows.
    pub location: usize,
    pub kind: EventKind,
    pub p: f64,
}

/// All events of a circuit with a per-location index.
#[derive(Debug, Clone)]
pub struct EventTable {
    pub events: Vec<ErrorEvent>,
    /// Events of location `l` are `offsets[l]..offsets[l + 1]`.
    pub offsets: Vec<usize>,
    pub p: f64,
}

impl EventTable {
    pub fn new(phys: &PhysicalCircuit, noise: &NoiseModel) -> Self {
        let mut events = Vec::new();
        let mut offsets = Vec::with_capacity(phys.ops.len() + 1);
        for (location, op) in phys.ops.iter().enumerate() {
            offsets.push(events.len());
            if noise.p == 0.0 {
                continue;
            }
            let mut push = |kind, p| events.push(ErrorEvent { id: events.len(), location, kind, p });
            match op.channel() {
                Channel::Depolarize1(_) => {
                    for pa in Pauli::NONTRIVIAL {
                        push(EventKind::Pauli1(pa), noise.p / 3.0);
                    }
                }
                Channel::Depolarize2(..) => {
                    for (a, b) in Pauli::two_qubit_nontrivial() {
                        push(EventKind::Pauli2(a, b), noise.p / 15.0);
                    }
                }
                Channel::ResetFlip(..) | Channel::MeasureFlip(_) => push(EventKind::Flip, noise.p),
            }
        }
        offsets.push(events.len());
        EventTable { events, offsets, p: noise.p }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn at_location(&self, l: usize) -> &[ErrorEvent] {
        &self.events[self.offsets[l]..self.offsets[l + 1]]
    }

    /// Draws the failing locations of one shot and the event at each, in location order.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::new();
        if self.p <= 0.0 || self.events.is_empty() {
            return out;
        }
        let nloc = self.offsets.len() - 1;
        let log_q = (1.0 - self.p).ln();
        let mut l = 0usize;
        loop {
            // geometric gap to the next failing location
            let u: f64 = rng.gen::<f64>();
            let gap = ((1.0 - u).ln() / log_q).floor();
            if !gap.is_finite() || gap >= (nloc - l) as f64 {
                break;
            }
            l += gap as usize;
            let range = self.offsets[l]..self.offsets[l + 1];
            out.push(rng.gen_range(range));
            l += 1;
            if l >= nloc {
                break;
            }
        }
        out
    }
}

/// One event per (location, nontrivial Pauli or flip).
pub fn enumerate_events(phys: &PhysicalCircuit, noise: &NoiseModel) -> Vec<ErrorEvent> {
    EventTable::new(phys, noise).events
}

/// Pauli frame over all physical qubits plus the raw measurement flips.
#[derive(Debug, Clone)]
pub struct FrameSim<'a> {
    phys: &'a PhysicalCircuit,
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    pub flips: Vec<bool>,
}

impl<'a> FrameSim<'a> {
    pub fn new(phys: &'a PhysicalCircuit) -> Self {
        FrameSim {
            phys,
            x: vec![false; phys.num_qubits],
            z: vec![false; phys.num_qubits],
            flips: vec![false; phys.num_slots()],
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        self.x[q] ^= p.x;
        self.z[q] ^= p.z;
    }

    /// Propagates the frame through operation `l` (noiselessly).
    pub fn step(&mut self, l: usize) {
        match &self.phys.ops[l] {
            Op::Reset { qubit, .. } => {
                self.x[*qubit] = false;
                self.z[*qubit] = false;
            }
            Op::Measure { qubit, basis, slot } => {
                let p = Pauli { x: self.x[*qubit], z: self.z[*qubit] };
                self.flips[*slot] ^= p.flips(*basis);
            }
            Op::Gate1 { qubit, gate: Clifford1::H } => {
                let q = *qubit;
                std::mem::swap(&mut self.x[q], &mut self.z[q]);
            }
            Op::Gate1 { .. } | Op::Idle { .. } => {}
            Op::Cnot { control, target } => {
                let (c, t) = (*control, *target);
                self.x[t] ^= self.x[c];
                self.z[c] ^= self.z[t];
            }
            Op::MeasurePauli { basis, qubits, slot } => {
                let bits = match basis {
                    Basis::Z => &self.x,
                    Basis::X => &self.z,
                };
                let parity = qubits.iter().fold(false, |acc, &q| acc ^ bits[q]);
                self.flips[*slot] ^= parity;
            }
        }
    }

    /// Applies an event located at the operation just stepped.
    pub fn inject(&mut self, event: &ErrorEvent) {
        match (self.phys.ops[event.location].channel(), event.kind) {
            (Channel::Depolarize1(q), EventKind::Pauli1(p)) => self.apply_pauli(q, p),
            (Channel::Depolarize2(a, b), EventKind::Pauli2(pa, pb)) => {
                self.apply_pauli(a, pa);
                self.apply_pauli(b, pb);
            }
            (Channel::ResetFlip(q, basis), EventKind::Flip) => {
                let p = match basis {
                    Basis::Z => Pauli::X,
                    Basis::X => Pauli::Z,
                };
                self.apply_pauli(q, p);
            }
            (Channel::MeasureFlip(slot), EventKind::Flip) => self.flips[slot] ^= true,
            (ch, kind) => unreachable!("event {kind:?} does not fit channel {ch:?}"),
        }
    }

    pub fn logical_flips(&self) -> LogicalMask {
        self.phys
            .observables
            .iter()
            .filter(|o| o.slots.iter().fold(false, |acc, &s| acc ^ self.flips[s]))
            .fold(0, |m, o| m | (1 << o.qubit))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    /// Raw measurement flips relative to the noiseless reference.
    pub syndrome: Vec<bool>,
    pub logical_flips: LogicalMask,
    /// Events applied, in location order (empty for random shots).
    pub injected: Vec<usize>,
}

impl ShotResult {
    pub fn flipped_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.syndrome.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }
}

/// Runs the whole circuit with the given events (sorted by location) applied.
fn run(phys: &PhysicalCircuit, table: &EventTable, mut events: Vec<usize>) -> Result<(Vec<bool>, LogicalMask), NoiseError> {
    if let Some(&bad) = events.iter().find(|&&e| e >= table.len()) {
        return Err(NoiseError::UnknownEvent(bad));
    }
    events.sort_by_key(|&e| (table.events[e].location, e));
    let mut sim = FrameSim::new(phys);
    let mut next = events.iter().peekable();
    for l in 0..phys.ops.len() {
        sim.step(l);
        while let Some(&&e) = next.peek() {
            if table.events[e].location != l {
                break;
            }
            sim.inject(&table.events[e]);
            next.next();
        }
    }
    let mask = sim.logical_flips();
    Ok((sim.flips, mask))
}

/// Deterministic propagation of exactly the listed events.
pub fn inject_events(phys: &PhysicalCircuit, table: &EventTable, events: &[usize]) -> Result<ShotResult, NoiseError> {
    let (syndrome, logical_flips) = run(phys, table, events.to_vec())?;
    let mut injected = events.to_vec();
    injected.sort_by_key(|&e| (table.events[e].location, e));
    Ok(ShotResult { syndrome, logical_flips, injected })
}

/// Per-shot generator for shot `(point, shot)` of a run seeded with `master`.
pub fn shot_rng(master: u64, point: u64, shot: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(master, point, shot))
}

/// SplitMix64-style mixing of a master seed with stream coordinates.
pub fn mix_seed(master: u64, point: u64, shot: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(master) ^ point) ^ shot)
}

/// Samples and frame-simulates one noisy shot.
pub struct Sampler<'a> {
    pub phys: &'a PhysicalCircuit,
    pub table: EventTable,
}

impl<'a> Sampler<'a> {
    pub fn new(phys: &'a PhysicalCircuit, noise: &NoiseModel) -> Self {
        Sampler { phys, table: EventTable::new(phys, noise) }
    }

    pub fn sample(&self, seed: u64) -> ShotResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let events = self.table.sample(&mut rng);
        let (syndrome, logical_flips) = run(self.phys, &self.table, events).expect("sampled ids are valid");
        ShotResult { syndrome, logical_flips, injected: Vec::new() }
    }
}

pub fn sample_shot(phys: &PhysicalCircuit, noise: &NoiseModel, seed: u64) -> Result<ShotResult, NoiseError> {
    NoiseModel::new(noise.p, noise.tier)?;
    Ok(Sampler::new(phys, noise).sample(seed))
}

/// Check values as flip bits (`true` for -1).
pub fn compose_checks(shot: &ShotResult, defs: &CheckDefs) -> Result<Vec<bool>, NoiseError> {
    let len = shot.syndrome.len();
    defs.slots
        .iter()
        .enumerate()
        .map(|(check, slots)| {
            slots.iter().try_fold(false, |acc, &slot| {
                shot.syndrome.get(slot).map(|b| acc ^ b).ok_or(NoiseError::MissingSlot { check, slot, len })
            })
        })
        .collect()
}

/// The same values as ±1.
pub fn check_values(bits: &[bool]) -> Vec<i8> {
    bits.iter().map(|&b| if b { -1 } else { 1 }).collect()
}
