//! Expansion of a logical circuit into physical operations on rotated patches.
//!
//! Every physical operation is one noise location, identified by its index in
//! [`PhysicalCircuit::ops`]. Patch `q` owns physical qubits
//! `q * (2d^2 - 1) ..`: first its `d^2` data qubits, then one measure qubit per
//! plaquette.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Gate, LogicalCircuit, Step};
use crate::layout::PatchLayout;
use crate::pauli::Basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseTier {
    /// Full 4-step CNOT schedule with measure qubits.
    CircuitLevel,
    /// Data-qubit depolarization and noisy direct stabilizer readout each round.
    Phenomenological,
}

impl std::str::FromStr for NoiseTier {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "circuit-level" | "circuit" => Ok(NoiseTier::CircuitLevel),
            "phenomenological" | "phenom" => Ok(NoiseTier::Phenomenological),
            other => Err(format!("unknown noise tier `{other}`")),
        }
    }
}

/// The only syndrome-extraction schedule: home-X plaquettes visit NW, NE, SW, SE
/// and home-Z plaquettes NW, SW, NE, SE.
pub const SCHEDULE_ID: &str = "rotated-4step";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceCodeSpec {
    pub distance: usize,
    pub tier: NoiseTier,
    /// Idle noise on data qubits while measure qubits are reset and read out.
    pub idle_during_reset_measure: bool,
}

impl SurfaceCodeSpec {
    pub fn new(distance: usize, tier: NoiseTier) -> Self {
        SurfaceCodeSpec { distance, tier, idle_during_reset_measure: true }
    }

    pub fn schedule(&self) -> &'static str {
        SCHEDULE_ID
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpandError {
    #[error("circuit distance {circuit} does not match code distance {spec}")]
    DistanceMismatch { circuit: usize, spec: usize },
    #[error("gate {gate} is not supported by the surface-code expansion")]
    UnsupportedGate { gate: String },
    #[error("CNOT {control}->{target} between patches of different orientation")]
    OrientationMismatch { control: usize, target: usize },
    #[error("{0} logical qubits exceed the 64 tracked observables")]
    TooManyQubits(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clifford1 {
    H,
    X,
    Y,
    Z,
}

/// One physical operation. Measurement results go to `slot`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    Reset { qubit: usize, basis: Basis },
    Measure { qubit: usize, basis: Basis, slot: usize },
    Gate1 { qubit: usize, gate: Clifford1 },
    Idle { qubit: usize },
    Cnot { control: usize, target: usize },
    /// Direct readout of a stabilizer on data qubits (phenomenological tier).
    MeasurePauli { basis: Basis, qubits: Vec<usize>, slot: usize },
}

/// The noise channel attached to an operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Depolarize1(usize),
    Depolarize2(usize, usize),
    /// Wrong eigenstate after a reset in `basis`.
    ResetFlip(usize, Basis),
    MeasureFlip(usize),
}

impl Op {
    pub fn channel(&self) -> Channel {
        match *self {
            Op::Reset { qubit, basis } => Channel::ResetFlip(qubit, basis),
            Op::Measure { slot, .. } | Op::MeasurePauli { slot, .. } => Channel::MeasureFlip(slot),
            Op::Gate1 { qubit, .. } | Op::Idle { qubit } => Channel::Depolarize1(qubit),
            Op::Cnot { control, target } => Channel::Depolarize2(control, target),
        }
    }
}

/// Names a raw measurement independently of slot numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasKey {
    Stabilizer { qubit: usize, round: usize, plaquette: usize },
    Data { qubit: usize, data: usize },
}

/// Logical readout of one qubit: the XOR of `slots` in its terminal basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observable {
    pub qubit: usize,
    pub basis: Basis,
    pub slots: Vec<usize>,
}

/// Orientation change of a patch caused by a transversal H.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabel {
    pub moment: usize,
    pub qubit: usize,
    pub swapped: bool,
}

#[derive(Debug, Clone)]
pub struct PhysicalCircuit {
    pub spec: SurfaceCodeSpec,
    pub layout: PatchLayout,
    pub num_logical: usize,
    pub num_qubits: usize,
    pub num_rounds: usize,
    pub ops: Vec<Op>,
    /// Moment (time step) of each op.
    pub moments: Vec<usize>,
    pub slot_keys: Vec<MeasKey>,
    slot_of: HashMap<MeasKey, usize>,
    pub observables: Vec<Observable>,
    pub relabels: Vec<Relabel>,
}

impl PhysicalCircuit {
    pub fn num_slots(&self) -> usize {
        self.slot_keys.len()
    }

    pub fn slot(&self, key: &MeasKey) -> Option<usize> {
        self.slot_of.get(key).copied()
    }

    pub fn patch_size(&self) -> usize {
        2 * self.layout.d * self.layout.d - 1
    }

    pub fn data_qubit(&self, logical: usize, data: usize) -> usize {
        logical * self.patch_size() + data
    }

    pub fn measure_qubit(&self, logical: usize, plaquette: usize) -> usize {
        logical * self.patch_size() + self.layout.num_data() + plaquette
    }

    /// Logical patch owning a physical qubit.
    pub fn owner(&self, qubit: usize) -> usize {
        qubit / self.patch_size()
    }

    pub fn num_moments(&self) -> usize {
        self.moments.last().map_or(0, |m| m + 1)
    }
}

struct Builder<'a> {
    layout: &'a PatchLayout,
    psize: usize,
    ops: Vec<Op>,
    moments: Vec<usize>,
    moment: usize,
    slot_keys: Vec<MeasKey>,
}

impl Builder<'_> {
    fn data(&self, q: usize, i: usize) -> usize {
        q * self.psize + i
    }
    fn anc(&self, q: usize, s: usize) -> usize {
        q * self.psize + self.layout.num_data() + s
    }
    fn push(&mut self, op: Op) {
        self.ops.push(op);
        self.moments.push(self.moment);
    }
    fn slot(&mut self, key: MeasKey) -> usize {
        self.slot_keys.push(key);
        self.slot_keys.len() - 1
    }
    fn idle_data(&mut self, q: usize) {
        for i in 0..self.layout.num_data() {
            let qubit = self.data(q, i);
            self.push(Op::Idle { qubit });
        }
    }
    fn end_moment(&mut self) {
        self.moment += 1;
    }
}

/// Expands every logical qubit into one patch and every layer into physical ops.
pub fn expand_to_physical(circuit: &LogicalCircuit, spec: &SurfaceCodeSpec) -> Result<PhysicalCircuit, ExpandError> {
    if circuit.distance != spec.distance {
        return Err(ExpandError::DistanceMismatch { circuit: circuit.distance, spec: spec.distance });
    }
    if circuit.num_qubits > 64 {
        return Err(ExpandError::TooManyQubits(circuit.num_qubits));
    }
    let layout = PatchLayout::new(spec.distance);
    let n = circuit.num_qubits;
    let nd = layout.num_data();
    let mut b = Builder {
        layout: &layout,
        psize: 2 * nd - 1,
        ops: Vec::new(),
        moments: Vec::new(),
        moment: 0,
        slot_keys: Vec::new(),
    };
    let mut live = circuit.initially_live();
    let mut swapped = vec![false; n];
    let mut observables: Vec<Option<Observable>> = vec![None; n];
    let mut relabels = Vec::new();
    let mut rounds = 0;

    for step in circuit.timeline() {
        match step {
            Step::Gates(gates) => {
                let mut touched = vec![false; n];
                for g in &gates {
                    match *g {
                        Gate::S(_) => return Err(ExpandError::UnsupportedGate { gate: "S".into() }),
                        Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => {
                            let gate = match g {
                                Gate::H(_) => Clifford1::H,
                                Gate::X(_) => Clifford1::X,
                                Gate::Y(_) => Clifford1::Y,
                                _ => Clifford1::Z,
                            };
                            for i in 0..nd {
                                let qubit = b.data(q, i);
                                b.push(Op::Gate1 { qubit, gate });
                            }
                            touched[q] = true;
                        }
                        Gate::Cnot { control, target } => {
                            if swapped[control] != swapped[target] {
                                return Err(ExpandError::OrientationMismatch { control, target });
                            }
                            for i in 0..nd {
                                let (c, t) = (b.data(control, i), b.data(target, i));
                                b.push(Op::Cnot { control: c, target: t });
                            }
                            touched[control] = true;
                            touched[target] = true;
                        }
                    }
                }
                for q in (0..n).filter(|&q| live[q] && !touched[q]) {
                    b.idle_data(q);
                }
                for g in &gates {
                    if let Gate::H(q) = *g {
                        swapped[q] = !swapped[q];
                        relabels.push(Relabel { moment: b.moment, qubit: q, swapped: swapped[q] });
                    }
                }
                b.end_moment();
            }
            Step::Se(round) => {
                rounds = round + 1;
                let active: Vec<usize> = (0..n).filter(|&q| live[q]).collect();
                match spec.tier {
                    NoiseTier::CircuitLevel => se_circuit_level(&mut b, &active, &swapped, round, spec),
                    NoiseTier::Phenomenological => se_phenomenological(&mut b, &active, &swapped, round),
                }
            }
            Step::Measure { basis, qubits } => {
                let mut measured = vec![false; n];
                for &q in &qubits {
                    let mut slots = Vec::with_capacity(nd);
                    for i in 0..nd {
                        let slot = b.slot(MeasKey::Data { qubit: q, data: i });
                        let qubit = b.data(q, i);
                        b.push(Op::Measure { qubit, basis, slot });
                        slots.push(slot);
                    }
                    let support = layout.logical_support(basis, swapped[q]);
                    observables[q] =
                        Some(Observable { qubit: q, basis, slots: support.into_iter().map(|i| slots[i]).collect() });
                    measured[q] = true;
                }
                for q in (0..n).filter(|&q| live[q] && !measured[q]) {
                    b.idle_data(q);
                }
                for &q in &qubits {
                    live[q] = false;
                }
                b.end_moment();
            }
            Step::Minit(q) => live[q] = true,
        }
    }

    let slot_of = b.slot_keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    Ok(PhysicalCircuit {
        spec: spec.clone(),
        num_logical: n,
        num_qubits: n * b.psize,
        num_rounds: rounds,
        ops: b.ops,
        moments: b.moments,
        slot_keys: b.slot_keys,
        slot_of,
        observables: observables.into_iter().map(|o| o.expect("every qubit is read out")).collect(),
        relabels,
        layout,
    })
}

fn se_circuit_level(b: &mut Builder<'_>, active: &[usize], swapped: &[bool], round: usize, spec: &SurfaceCodeSpec) {
    let layout = b.layout;
    let nd = layout.num_data();
    for &q in active {
        for (s, p) in layout.plaquettes.iter().enumerate() {
            let qubit = b.anc(q, s);
            b.push(Op::Reset { qubit, basis: p.basis(swapped[q]) });
        }
        if spec.idle_during_reset_measure {
            b.idle_data(q);
        }
    }
    b.end_moment();
    for step in 0..4 {
        for &q in active {
            let mut busy = vec![false; nd];
            for (s, p) in layout.plaquettes.iter().enumerate() {
                let anc = b.anc(q, s);
                match p.schedule[step] {
                    Some(i) => {
                        busy[i] = true;
                        let data = b.data(q, i);
                        match p.basis(swapped[q]) {
                            Basis::X => b.push(Op::Cnot { control: anc, target: data }),
                            Basis::Z => b.push(Op::Cnot { control: data, target: anc }),
                        }
                    }
                    None => b.push(Op::Idle { qubit: anc }),
                }
            }
            for i in (0..nd).filter(|&i| !busy[i]) {
                let qubit = b.data(q, i);
                b.push(Op::Idle { qubit });
            }
        }
        b.end_moment();
    }
    for &q in active {
        for (s, p) in layout.plaquettes.iter().enumerate() {
            let slot = b.slot(MeasKey::Stabilizer { qubit: q, round, plaquette: s });
            let qubit = b.anc(q, s);
            b.push(Op::Measure { qubit, basis: p.basis(swapped[q]), slot });
        }
        if spec.idle_during_reset_measure {
            b.idle_data(q);
        }
    }
    b.end_moment();
}

fn se_phenomenological(b: &mut Builder<'_>, active: &[usize], swapped: &[bool], round: usize) {
    for &q in active {
        b.idle_data(q);
    }
    b.end_moment();
    let layout = b.layout;
    for &q in active {
        for (s, p) in layout.plaquettes.iter().enumerate() {
            let slot = b.slot(MeasKey::Stabilizer { qubit: q, round, plaquette: s });
            let qubits = p.support().map(|i| b.data(q, i)).collect();
            b.push(Op::MeasurePauli { basis: p.basis(swapped[q]), qubits, slot });
        }
    }
    b.end_moment();
}
