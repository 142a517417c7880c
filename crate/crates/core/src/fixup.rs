//! Classical control for constant-time T gadgets.
//!
//! A gadget entangles the data qubit with a `|T⟩` ancilla and an `|S⟩` ancilla,
//! reads the T ancilla out in Z, and only later measures the S ancilla. Once the
//! T outcome is committed by the window decoder the controller picks the S
//! basis: Z applies the S fixup, X leaves the data alone. An X in the Pauli
//! frame on the data turns the applied T into T†, so the effective outcome is
//! the committed bit XOR the frame's X bit.
//!
//! Outcome bits follow the usual convention, `1` meaning eigenvalue `-1`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{LogicalCircuit, Step};
use crate::noise::LogicalMask;
use crate::pauli::{Basis, Pauli};
use crate::physical::PhysicalCircuit;
use crate::windows::WindowPlan;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixupError {
    #[error("premature feedback: T outcome of gadget {gadget} is not committed yet")]
    PrematureFeedback { gadget: usize },
    #[error("outcome for gadget {got} arrived while gadget {expected} was pending")]
    OutOfOrder { expected: usize, got: usize },
    #[error("gadget {0} has no T measurement in the circuit")]
    MissingMeasurement(usize),
    #[error("qubit {qubit} outside a frame of {len} qubits")]
    QubitOutOfRange { qubit: usize, len: usize },
}

/// Where the T ancilla is read out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TMeasurement {
    pub qubit: usize,
    /// Time slot of its terminal checks, the number of SE rounds before the readout.
    pub slot: usize,
    /// Index into the physical circuit's observables; masks use the qubit bit.
    pub observable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetRecord {
    pub id: usize,
    pub data: usize,
    pub t_measurement: TMeasurement,
    pub s_ancilla: usize,
    /// Position in the order the S bases must be resolved in.
    pub order: usize,
}

/// Collects the gadgets of a circuit in program order.
pub fn gadget_records(circuit: &LogicalCircuit, phys: &PhysicalCircuit) -> Result<Vec<GadgetRecord>, FixupError> {
    let mut slot_of = vec![None; circuit.num_qubits];
    let mut rounds = 0;
    for step in circuit.timeline() {
        match step {
            Step::Se(_) => rounds += 1,
            Step::Measure { qubits, .. } => {
                for q in qubits {
                    slot_of[q].get_or_insert(rounds);
                }
            }
            _ => {}
        }
    }
    circuit
        .gadgets()
        .into_iter()
        .map(|g| {
            let slot = slot_of[g.t_ancilla].ok_or(FixupError::MissingMeasurement(g.index))?;
            let observable = phys
                .observables
                .iter()
                .position(|o| o.qubit == g.t_ancilla)
                .ok_or(FixupError::MissingMeasurement(g.index))?;
            Ok(GadgetRecord {
                id: g.index,
                data: g.data,
                t_measurement: TMeasurement { qubit: g.t_ancilla, slot, observable },
                s_ancilla: g.s_ancilla,
                order: g.index,
            })
        })
        .collect()
}

/// Committed T outcome: the raw readout corrected by the decoder's logical mask.
pub fn committed_t_outcome(gadget: &GadgetRecord, raw: bool, correction: LogicalMask) -> bool {
    raw ^ (correction >> gadget.t_measurement.qubit & 1 == 1)
}

/// Pauli frame over logical qubits, modulo phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FrameState {
    pub paulis: Vec<Pauli>,
}

impl FrameState {
    pub fn identity(n: usize) -> Self {
        FrameState { paulis: vec![Pauli::I; n] }
    }

    pub fn len(&self) -> usize {
        self.paulis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paulis.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.paulis.iter().all(|p| p.is_identity())
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.paulis[qubit]
    }

    /// Multiplies `p` onto `qubit`.
    pub fn apply(&mut self, qubit: usize, p: Pauli) {
        self.paulis[qubit] = self.paulis[qubit].compose(p);
    }

    /// Qubit-wise product. Frames of different length are padded with identity.
    pub fn compose(&self, other: &FrameState) -> FrameState {
        let n = self.len().max(other.len());
        let at = |f: &FrameState, q: usize| f.paulis.get(q).copied().unwrap_or(Pauli::I);
        FrameState { paulis: (0..n).map(|q| at(self, q).compose(at(other, q))).collect() }
    }

    fn check(&self, qubit: usize) -> Result<(), FixupError> {
        if qubit < self.len() {
            Ok(())
        } else {
            Err(FixupError::QubitOutOfRange { qubit, len: self.len() })
        }
    }
}

impl fmt::Display for FrameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.paulis.is_empty() {
            return f.write_str("-");
        }
        self.paulis.iter().try_for_each(|p| write!(f, "{p}"))
    }
}

/// One basis decision and the frames around it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub gadget: usize,
    pub data: usize,
    pub outcome: bool,
    pub basis: Basis,
    pub before: FrameState,
    pub after: FrameState,
}

impl Decision {
    /// Event log line.
    pub fn log_line(&self) -> String {
        format!(
            "gadget={} outcome={} frame_before={} basis={} frame_after={}",
            self.gadget, self.outcome as u8, self.before, self.basis, self.after
        )
    }
}

/// Picks the S-ancilla basis for `gadget`. `outcome` is `None` while the T
/// readout is still outside every applied commit region.
pub fn choose_basis(gadget: &GadgetRecord, outcome: Option<bool>, frame: &FrameState) -> Result<Decision, FixupError> {
    let outcome = outcome.ok_or(FixupError::PrematureFeedback { gadget: gadget.id })?;
    frame.check(gadget.data)?;
    let mut after = frame.clone();
    let basis = if outcome ^ frame.get(gadget.data).x {
        after.apply(gadget.data, Pauli::Z);
        Basis::Z
    } else {
        Basis::X
    };
    Ok(Decision { gadget: gadget.id, data: gadget.data, outcome, basis, before: frame.clone(), after })
}

/// Folds the S-ancilla readout `s` of a decided gadget into `frame`.
///
/// An X readout leaves the byproduct `Z^s`. A Z readout leaves `Z^s` for a
/// committed outcome of 1; for outcome 0 the S was forced by a frame X and
/// commuting it past that X contributes one more Z. With the Z already added
/// by [`choose_basis`] this nets to `Z^(s XOR outcome XOR 1)`.
pub fn absorb_s_outcome(decision: &Decision, s: bool, frame: &mut FrameState) -> Result<(), FixupError> {
    frame.check(decision.data)?;
    let flip = match decision.basis {
        Basis::X => s,
        Basis::Z => s ^ decision.outcome,
    };
    if flip {
        frame.apply(decision.data, Pauli::Z);
    }
    Ok(())
}

/// A committed T outcome addressed to one gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub gadget: usize,
    pub outcome: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub decisions: Vec<Decision>,
    pub frame: FrameState,
}

impl Resolution {
    pub fn log(&self) -> String {
        self.decisions.iter().map(|d| d.log_line() + "\n").collect()
    }
}

/// Resolves the S bases of `gadgets` in order. Deliveries must follow the
/// gadgets' ordering indices one for one.
pub fn sequential_resolution(
    gadgets: &[GadgetRecord],
    feed: &[Delivery],
    initial: &FrameState,
) -> Result<Resolution, FixupError> {
    let mut order: Vec<&GadgetRecord> = gadgets.iter().collect();
    order.sort_by_key(|g| g.order);
    let mut frame = initial.clone();
    let mut decisions = Vec::with_capacity(order.len());
    for (k, delivery) in feed.iter().enumerate() {
        let Some(gadget) = order.get(k) else {
            return Err(FixupError::OutOfOrder { expected: usize::MAX, got: delivery.gadget });
        };
        if delivery.gadget != gadget.id {
            return Err(FixupError::OutOfOrder { expected: gadget.id, got: delivery.gadget });
        }
        let decision = choose_basis(gadget, delivery.outcome, &frame)?;
        frame = decision.after.clone();
        decisions.push(decision);
    }
    Ok(Resolution { decisions, frame })
}

/// Byproduct frame of teleporting each qubit given its `(m_x, m_z)` Bell outcomes:
/// `X^m_z Z^m_x` per qubit.
pub fn teleport_recovery(outcomes: &[(bool, bool)]) -> FrameState {
    FrameState { paulis: outcomes.iter().map(|&(mx, mz)| Pauli { x: mz, z: mx }).collect() }
}

/// When each gadget's feedback can happen under a window plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduledGadget {
    pub gadget: usize,
    pub t_slot: usize,
    /// Window whose commit region covers the T readout.
    pub commit_window: usize,
    /// Slot at which that window's decode is complete and the S ancilla is measured.
    pub s_slot: usize,
}

impl ScheduledGadget {
    /// SE rounds the S ancilla waits after the T readout.
    pub fn persistence(&self) -> usize {
        self.s_slot - self.t_slot
    }
}

/// Places the S measurements as early as the plan allows.
pub fn schedule_gadgets(gadgets: &[GadgetRecord], plan: &WindowPlan) -> Result<Vec<ScheduledGadget>, FixupError> {
    gadgets
        .iter()
        .map(|g| {
            let t = &g.t_measurement;
            let w = plan
                .windows()
                .find(|w| w.commit.contains(t.qubit, t.slot))
                .ok_or(FixupError::PrematureFeedback { gadget: g.id })?;
            let s_slot = (w.region.end - 1).clamp(t.slot, plan.slots - 1);
            Ok(ScheduledGadget { gadget: g.id, t_slot: t.slot, commit_window: w.id, s_slot })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gadget(id: usize, data: usize) -> GadgetRecord {
        GadgetRecord {
            id,
            data,
            t_measurement: TMeasurement { qubit: 1, slot: 2, observable: id },
            s_ancilla: 2,
            order: id,
        }
    }

    fn frame(s: &str) -> FrameState {
        FrameState {
            paulis: s
                .chars()
                .map(|c| match c {
                    'X' => Pauli::X,
                    'Y' => Pauli::Y,
                    'Z' => Pauli::Z,
                    _ => Pauli::I,
                })
                .collect(),
        }
    }

    #[test]
    fn basis_table() {
        let g = gadget(0, 0);
        let d = choose_basis(&g, Some(false), &frame("I")).unwrap();
        assert_eq!((d.basis, d.after.to_string()), (Basis::X, "I".into()));
        let d = choose_basis(&g, Some(true), &frame("I")).unwrap();
        assert_eq!((d.basis, d.after.to_string()), (Basis::Z, "Z".into()));
        let d = choose_basis(&g, Some(false), &frame("X")).unwrap();
        assert_eq!((d.basis, d.after.to_string()), (Basis::Z, "Y".into()));
        let d = choose_basis(&g, Some(true), &frame("X")).unwrap();
        assert_eq!((d.basis, d.after.to_string()), (Basis::X, "X".into()));
    }

    #[test]
    fn pending_outcome_is_premature() {
        assert_eq!(
            choose_basis(&gadget(3, 0), None, &frame("I")),
            Err(FixupError::PrematureFeedback { gadget: 3 })
        );
    }

    #[test]
    fn two_step_fold() {
        let gs = [gadget(0, 0), gadget(1, 0)];
        let feed = [Delivery { gadget: 0, outcome: Some(true) }, Delivery { gadget: 1, outcome: Some(false) }];
        let r = sequential_resolution(&gs, &feed, &frame("I")).unwrap();
        // first: Z basis, frame Z; second sees no X so effective 0
        assert_eq!(r.decisions[0].basis, Basis::Z);
        assert_eq!(r.decisions[1].basis, Basis::X);
        assert_eq!(r.frame.to_string(), "Z");
        assert_eq!(r.log().lines().count(), 2);
        assert_eq!(
            r.decisions[0].log_line(),
            "gadget=0 outcome=1 frame_before=I basis=Z frame_after=Z"
        );
    }

    #[test]
    fn empty_and_out_of_order() {
        let r = sequential_resolution(&[], &[], &frame("XZ")).unwrap();
        assert!(r.decisions.is_empty());
        assert_eq!(r.frame, frame("XZ"));
        let gs = [gadget(0, 0), gadget(1, 0)];
        let feed = [Delivery { gadget: 1, outcome: Some(false) }];
        assert_eq!(
            sequential_resolution(&gs, &feed, &frame("I")).unwrap_err(),
            FixupError::OutOfOrder { expected: 0, got: 1 }
        );
    }

    #[test]
    fn teleport_byproducts() {
        assert!(teleport_recovery(&[(false, false); 3]).is_identity());
        assert_eq!(teleport_recovery(&[(true, false)]).to_string(), "Z");
        assert_eq!(teleport_recovery(&[(true, true)]).to_string(), "Y");
        assert_eq!(teleport_recovery(&[(false, true)]).to_string(), "X");
    }

    #[test]
    fn committed_outcome_uses_the_mask_bit() {
        // the T ancilla is logical qubit 1
        let g = gadget(2, 0);
        assert!(committed_t_outcome(&g, false, 0b010));
        assert!(!committed_t_outcome(&g, true, 0b010));
        assert!(committed_t_outcome(&g, true, 0b101));
    }

    #[test]
    fn data_qubit_out_of_range() {
        assert!(matches!(
            choose_basis(&gadget(0, 4), Some(true), &frame("II")),
            Err(FixupError::QubitOutOfRange { qubit: 4, len: 2 })
        ));
    }
}
