//! Check (detector) definitions.
//!
//! A check compares a stabilizer outcome with the outcomes that determine it one
//! round earlier. The round-`k` stabilizer is pulled back through the gate layers
//! since round `k-1`: an H swaps its type, a CNOT spreads a control X-stabilizer
//! onto the target and a target Z-stabilizer onto the control, and a Pauli leaves
//! it alone. Whatever reaches a freshly prepared code state is deterministic and
//! drops out, so first-round checks reference only their own outcome. A terminal
//! readout in basis B reconstructs the B-type stabilizers from data outcomes and
//! closes them the same way.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Gate, LogicalCircuit, Step};
use crate::layout::PatchLayout;
use crate::pauli::Basis;
use crate::physical::{MeasKey, PhysicalCircuit};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("gate {0} has no check propagation rule on the rotated surface code")]
    UnsupportedGate(String),
    #[error("CNOT {control}->{target} between patches of different orientation")]
    OrientationMismatch { control: usize, target: usize },
    #[error("check {check} references measurement {key:?} absent from the circuit")]
    MissingMeasurement { check: usize, key: MeasKey },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub id: usize,
    pub qubit: usize,
    /// SE round index; terminal checks use the number of rounds preceding the readout.
    pub round: usize,
    pub basis: Basis,
    pub plaquette: usize,
    pub terminal: bool,
    pub refs: Vec<MeasKey>,
}

type Element = (usize, usize, Basis);

fn toggle(set: &mut BTreeSet<Element>, e: Element) {
    if !set.remove(&e) {
        set.insert(e);
    }
}

fn pull_back(steps: &[Step], mut elems: BTreeSet<Element>) -> Result<BTreeSet<Element>, CheckError> {
    for step in steps.iter().rev() {
        match step {
            Step::Gates(gates) => {
                let mut next = BTreeSet::new();
                for &(q, s, b) in &elems {
                    toggle(&mut next, (q, s, b));
                    for g in gates {
                        match *g {
                            Gate::H(h) if h == q => {
                                toggle(&mut next, (q, s, b));
                                toggle(&mut next, (q, s, b.flipped()));
                            }
                            Gate::S(t) if t == q => return Err(CheckError::UnsupportedGate("S".into())),
                            Gate::Cnot { control, target } if control == q && b == Basis::X => {
                                toggle(&mut next, (target, s, Basis::X));
                            }
                            Gate::Cnot { control, target } if target == q && b == Basis::Z => {
                                toggle(&mut next, (control, s, Basis::Z));
                            }
                            _ => {}
                        }
                    }
                }
                elems = next;
            }
            Step::Minit(q) => elems.retain(|e| e.0 != *q),
            Step::Measure { .. } | Step::Se(_) => {}
        }
    }
    Ok(elems)
}

/// Builds every check of the circuit, sorted by `(round, qubit, basis, plaquette)`.
pub fn build_checks(circuit: &LogicalCircuit) -> Result<Vec<Check>, CheckError> {
    let layout = PatchLayout::new(circuit.distance);
    let steps = circuit.timeline();
    let n = circuit.num_qubits;
    let mut live = circuit.initially_live();
    let mut swapped = vec![false; n];
    // Index of the last SE step and its round.
    let mut prev: Option<(usize, usize)> = None;
    let mut checks = Vec::new();

    let close = |elems: BTreeSet<Element>, prev: Option<(usize, usize)>, refs: &mut Vec<MeasKey>| {
        if let Some((_, round)) = prev {
            refs.extend(elems.into_iter().map(|(qubit, plaquette, _)| MeasKey::Stabilizer { qubit, round, plaquette }));
        }
    };

    for (t, step) in steps.iter().enumerate() {
        let since = prev.map_or(0, |(i, _)| i + 1);
        match step {
            Step::Gates(gates) => {
                for g in gates {
                    match *g {
                        Gate::H(q) => swapped[q] = !swapped[q],
                        Gate::S(_) => return Err(CheckError::UnsupportedGate("S".into())),
                        Gate::Cnot { control, target } if swapped[control] != swapped[target] => {
                            return Err(CheckError::OrientationMismatch { control, target });
                        }
                        _ => {}
                    }
                }
            }
            Step::Se(round) => {
                for q in (0..n).filter(|&q| live[q]) {
                    for (s, p) in layout.plaquettes.iter().enumerate() {
                        let basis = p.basis(swapped[q]);
                        let elems = pull_back(&steps[since..t], BTreeSet::from([(q, s, basis)]))?;
                        let mut refs = vec![MeasKey::Stabilizer { qubit: q, round: *round, plaquette: s }];
                        close(elems, prev, &mut refs);
                        checks.push(Check { id: 0, qubit: q, round: *round, basis, plaquette: s, terminal: false, refs });
                    }
                }
                prev = Some((t, *round));
            }
            Step::Measure { basis, qubits } => {
                let round = prev.map_or(0, |(_, r)| r + 1);
                for &q in qubits {
                    for (s, p) in layout.plaquettes.iter().enumerate() {
                        if p.basis(swapped[q]) != *basis {
                            continue;
                        }
                        let elems = pull_back(&steps[since..t], BTreeSet::from([(q, s, *basis)]))?;
                        let mut refs: Vec<MeasKey> = p.support().map(|data| MeasKey::Data { qubit: q, data }).collect();
                        close(elems, prev, &mut refs);
                        checks.push(Check { id: 0, qubit: q, round, basis: *basis, plaquette: s, terminal: true, refs });
                    }
                    live[q] = false;
                }
            }
            Step::Minit(q) => live[*q] = true,
        }
    }
    checks.sort_by_key(|c| (c.round, c.qubit, c.basis, c.plaquette));
    for (i, c) in checks.iter_mut().enumerate() {
        c.id = i;
    }
    Ok(checks)
}

/// Checks resolved against the measurement slots of a physical circuit.
#[derive(Debug, Clone)]
pub struct CheckDefs {
    pub checks: Vec<Check>,
    /// Raw slots of each check.
    pub slots: Vec<Vec<usize>>,
    /// Checks containing each slot.
    pub by_slot: Vec<Vec<usize>>,
    /// Observables containing each slot, as a bit mask.
    pub obs_by_slot: Vec<u64>,
}

impl CheckDefs {
    pub fn new(checks: Vec<Check>, phys: &PhysicalCircuit) -> Result<Self, CheckError> {
        let mut slots = Vec::with_capacity(checks.len());
        let mut by_slot = vec![Vec::new(); phys.num_slots()];
        for c in &checks {
            let mut s = Vec::with_capacity(c.refs.len());
            for key in &c.refs {
                let slot = phys.slot(key).ok_or(CheckError::MissingMeasurement { check: c.id, key: *key })?;
                s.push(slot);
                by_slot[slot].push(c.id);
            }
            slots.push(s);
        }
        let mut obs_by_slot = vec![0u64; phys.num_slots()];
        for o in &phys.observables {
            for &s in &o.slots {
                obs_by_slot[s] ^= 1 << o.qubit;
            }
        }
        Ok(CheckDefs { checks, slots, by_slot, obs_by_slot })
    }

    pub fn build(circuit: &LogicalCircuit, phys: &PhysicalCircuit) -> Result<Self, CheckError> {
        CheckDefs::new(build_checks(circuit)?, phys)
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }

    /// Indices of the checks flipped by a set of raw slot flips.
    pub fn checks_of_slots(&self, flipped: impl IntoIterator<Item = usize>) -> (Vec<usize>, u64) {
        let mut hit: BTreeSet<usize> = BTreeSet::new();
        let mut mask = 0u64;
        for s in flipped {
            for &c in &self.by_slot[s] {
                if !hit.remove(&c) {
                    hit.insert(c);
                }
            }
            mask ^= self.obs_by_slot[s];
        }
        (hit.into_iter().collect(), mask)
    }
}
