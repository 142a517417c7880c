//! Logical circuits of transversal gates, their text format, and the built-in examples.
//!
//! A circuit is a list of [`Layer`]s executed in order. Each `se` layer is one
//! syndrome-extraction round applied to every live logical qubit. A qubit is live
//! from the start of the circuit (or from its `minit`) until it is measured; qubits
//! still live at the end receive an implicit terminal Z readout during expansion.
//!
//! Text format, one directive per line, `#` starts a comment:
//!
//! ```text
//! qubits 2
//! distance 3
//! block left 0
//! block right 1
//! layer H 0 | CNOT 0 1
//! se
//! minit T 1
//! measure Z 0 1
//! gadget_t 0 1 2
//! ```

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::Basis;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    /// `line` is 0 for circuits that were not parsed from text.
    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },
    #[error("unknown built-in example `{0}` (expected fig6a or fig6b)")]
    UnknownExample(String),
    #[error("code distance must be odd and at least 3, got {0}")]
    BadDistance(usize),
    #[error("not spatially windowable: CNOT {control}->{target} in gate layer {gate_layer} crosses blocks `{control_block}` and `{target_block}`")]
    NotSpatiallyWindowable {
        gate_layer: usize,
        control: usize,
        target: usize,
        control_block: String,
        target_block: String,
    },
}

/// One gate application inside a transversal layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    S(usize),
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::S(q) => (q, None),
            Gate::Cnot { control, target } => (control, Some(target)),
        };
        std::iter::once(a).chain(b)
    }

    fn mnemonic(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::X(_) => "X",
            Gate::Y(_) => "Y",
            Gate::Z(_) => "Z",
            Gate::S(_) => "S",
            Gate::Cnot { .. } => "CNOT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MagicKind {
    T,
    S,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    TransversalGates(Vec<Gate>),
    SyndromeExtraction,
    LogicalMeasurement { basis: Basis, qubits: Vec<usize> },
    MagicInit { kind: MagicKind, qubit: usize },
    /// T gate on `data` consuming a |T> patch, with the S fixup delayed onto an |S> patch.
    GadgetT { data: usize, t_ancilla: usize, s_ancilla: usize },
}

/// A named spatial block. `depth` is the block gate depth L: the number of gate
/// layers strictly between the first and last gate layers of the circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub qubits: Vec<usize>,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalCircuit {
    pub num_qubits: usize,
    pub distance: usize,
    pub layers: Vec<Layer>,
    pub blocks: Vec<Block>,
}

/// T-gadget bookkeeping extracted from a circuit, in circuit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetSite {
    pub index: usize,
    pub data: usize,
    pub t_ancilla: usize,
    pub s_ancilla: usize,
}

/// A lowered circuit step as seen by the expansion and check builders. Qubits
/// still live at the end get an implicit terminal Z readout step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Gates(Vec<Gate>),
    /// Syndrome-extraction round with its global round index.
    Se(usize),
    Measure { basis: Basis, qubits: Vec<usize> },
    Minit(usize),
}

pub fn check_distance(d: usize) -> Result<(), CircuitError> {
    if d < 3 || d % 2 == 0 {
        return Err(CircuitError::BadDistance(d));
    }
    Ok(())
}

impl LogicalCircuit {
    /// Builds and validates a circuit. Block depths are recomputed from the layers.
    pub fn new(
        num_qubits: usize,
        distance: usize,
        layers: Vec<Layer>,
        blocks: Vec<(String, Vec<usize>)>,
    ) -> Result<Self, CircuitError> {
        let mut circuit = LogicalCircuit {
            num_qubits,
            distance,
            layers,
            blocks: blocks
                .into_iter()
                .map(|(name, qubits)| Block { name, qubits, depth: 0 })
                .collect(),
        };
        circuit.validate().map_err(|(_, message)| CircuitError::Semantic { line: 0, message })?;
        circuit.assign_block_depths();
        Ok(circuit)
    }

    /// The layer list with every `GadgetT` replaced by its primitive layers. Each
    /// lowered layer carries the index of the source layer it came from.
    pub fn lowered(&self) -> Vec<(usize, Layer)> {
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            match *layer {
                Layer::GadgetT { data, t_ancilla, s_ancilla } => {
                    out.push((i, Layer::TransversalGates(vec![Gate::Cnot { control: data, target: t_ancilla }])));
                    out.push((i, Layer::SyndromeExtraction));
                    out.push((i, Layer::TransversalGates(vec![Gate::Cnot { control: data, target: s_ancilla }])));
                    out.push((i, Layer::SyndromeExtraction));
                    out.push((i, Layer::LogicalMeasurement { basis: Basis::Z, qubits: vec![t_ancilla] }));
                }
                ref other => out.push((i, other.clone())),
            }
        }
        out
    }

    pub fn gadgets(&self) -> Vec<GadgetSite> {
        self.layers
            .iter()
            .filter_map(|l| match *l {
                Layer::GadgetT { data, t_ancilla, s_ancilla } => Some((data, t_ancilla, s_ancilla)),
                _ => None,
            })
            .enumerate()
            .map(|(index, (data, t_ancilla, s_ancilla))| GadgetSite { index, data, t_ancilla, s_ancilla })
            .collect()
    }

    pub fn se_rounds(&self) -> usize {
        self.lowered().iter().filter(|(_, l)| matches!(l, Layer::SyndromeExtraction)).count()
    }

    pub fn gate_layer_count(&self) -> usize {
        self.lowered().iter().filter(|(_, l)| matches!(l, Layer::TransversalGates(_))).count()
    }

    /// Which qubits are live before the first layer.
    pub fn initially_live(&self) -> Vec<bool> {
        let late = self.late_initialized();
        (0..self.num_qubits).map(|q| !late.contains(&q)).collect()
    }

    pub fn timeline(&self) -> Vec<Step> {
        let mut live = self.initially_live();
        let mut steps = Vec::new();
        let mut round = 0;
        for (_, layer) in self.lowered() {
            steps.push(match layer {
                Layer::TransversalGates(g) => Step::Gates(g),
                Layer::SyndromeExtraction => {
                    round += 1;
                    Step::Se(round - 1)
                }
                Layer::LogicalMeasurement { basis, qubits } => {
                    for &q in &qubits {
                        live[q] = false;
                    }
                    Step::Measure { basis, qubits }
                }
                Layer::MagicInit { qubit, .. } => {
                    live[qubit] = true;
                    Step::Minit(qubit)
                }
                Layer::GadgetT { .. } => unreachable!("lowered"),
            });
        }
        let rest: Vec<usize> = (0..self.num_qubits).filter(|&q| live[q]).collect();
        if !rest.is_empty() {
            steps.push(Step::Measure { basis: Basis::Z, qubits: rest });
        }
        steps
    }

    /// Qubits that start dead and only come alive at their `minit`.
    fn late_initialized(&self) -> BTreeSet<usize> {
        self.layers
            .iter()
            .filter_map(|l| match *l {
                Layer::MagicInit { qubit, .. } => Some(qubit),
                _ => None,
            })
            .collect()
    }

    /// Returns the offending source-layer index (or `usize::MAX` for header problems)
    /// and a message.
    fn validate(&self) -> Result<(), (usize, String)> {
        const HEADER: usize = usize::MAX;
        if self.num_qubits == 0 {
            return Err((HEADER, "circuit needs at least one qubit".into()));
        }
        if self.distance < 3 || self.distance % 2 == 0 {
            return Err((HEADER, format!("distance must be odd and >= 3, got {}", self.distance)));
        }
        let n = self.num_qubits;
        let check_range = |q: usize, at: usize| -> Result<(), (usize, String)> {
            if q >= n {
                Err((at, format!("qubit {q} out of range [0, {n})")))
            } else {
                Ok(())
            }
        };

        if !self.blocks.is_empty() {
            let mut seen = vec![false; n];
            let mut names = BTreeSet::new();
            for b in &self.blocks {
                if !names.insert(b.name.as_str()) {
                    return Err((HEADER, format!("duplicate block name `{}`", b.name)));
                }
                if b.qubits.is_empty() {
                    return Err((HEADER, format!("block `{}` is empty", b.name)));
                }
                for &q in &b.qubits {
                    check_range(q, HEADER)?;
                    if std::mem::replace(&mut seen[q], true) {
                        return Err((HEADER, format!("qubit {q} appears in more than one block")));
                    }
                }
            }
            if let Some(q) = seen.iter().position(|s| !s) {
                return Err((HEADER, format!("qubit {q} is not covered by any block")));
            }
        }

        #[derive(Clone, Copy, PartialEq)]
        enum Life {
            Waiting,
            Live,
            Measured,
        }
        let late = self.late_initialized();
        let mut life: Vec<Life> =
            (0..n).map(|q| if late.contains(&q) { Life::Waiting } else { Life::Live }).collect();
        // Set when a gate has touched the qubit since the last SE round.
        let mut gated = vec![false; n];

        for (at, layer) in self.lowered() {
            match layer {
                Layer::TransversalGates(gates) => {
                    let mut used = BTreeSet::new();
                    for g in &gates {
                        if let Gate::Cnot { control, target } = *g {
                            if control == target {
                                return Err((at, format!("CNOT control equals target ({control})")));
                            }
                        }
                        for q in g.qubits() {
                            check_range(q, at)?;
                            if !used.insert(q) {
                                return Err((at, format!("qubit {q} appears twice in one layer")));
                            }
                            if life[q] != Life::Live {
                                return Err((at, format!("gate on qubit {q} which is not live")));
                            }
                            gated[q] = true;
                        }
                    }
                }
                Layer::SyndromeExtraction => gated.iter_mut().for_each(|g| *g = false),
                Layer::LogicalMeasurement { qubits, .. } => {
                    if qubits.is_empty() {
                        return Err((at, "measure needs at least one qubit".into()));
                    }
                    let mut used = BTreeSet::new();
                    for &q in &qubits {
                        check_range(q, at)?;
                        if !used.insert(q) {
                            return Err((at, format!("qubit {q} measured twice in one layer")));
                        }
                        if life[q] != Life::Live {
                            return Err((at, format!("measurement of qubit {q} which is not live")));
                        }
                        if gated[q] {
                            return Err((
                                at,
                                format!("qubit {q} is measured before a syndrome-extraction round follows its last gate"),
                            ));
                        }
                        life[q] = Life::Measured;
                    }
                }
                Layer::MagicInit { qubit, .. } => {
                    check_range(qubit, at)?;
                    if life[qubit] != Life::Waiting {
                        return Err((at, format!("minit on qubit {qubit} which was already initialized")));
                    }
                    life[qubit] = Life::Live;
                }
                Layer::GadgetT { .. } => unreachable!("lowered"),
            }
        }
        // Distinctness of the gadget operands is not caught by the lowered checks when
        // data == s_ancilla (CNOT control == target) only; catch the remaining case here.
        for (i, l) in self.layers.iter().enumerate() {
            if let Layer::GadgetT { data, t_ancilla, s_ancilla } = *l {
                if data == t_ancilla || data == s_ancilla || t_ancilla == s_ancilla {
                    return Err((i, "gadget_t operands must be three distinct qubits".into()));
                }
            }
        }
        Ok(())
    }

    fn assign_block_depths(&mut self) {
        let depth = self.gate_layer_count().saturating_sub(2);
        for b in &mut self.blocks {
            b.depth = depth;
        }
    }

    /// The declared blocks, or one block holding every qubit. Verifies that CNOTs
    /// between different blocks only occur in the first and last gate layers.
    pub fn block_partition(&self) -> Result<Vec<Block>, CircuitError> {
        if self.blocks.is_empty() {
            return Ok(vec![Block {
                name: "all".into(),
                qubits: (0..self.num_qubits).collect(),
                depth: self.gate_layer_count(),
            }]);
        }
        let mut owner = vec![0usize; self.num_qubits];
        for (bi, b) in self.blocks.iter().enumerate() {
            for &q in &b.qubits {
                owner[q] = bi;
            }
        }
        let gate_layers: Vec<Vec<Gate>> = self
            .lowered()
            .into_iter()
            .filter_map(|(_, l)| match l {
                Layer::TransversalGates(g) => Some(g),
                _ => None,
            })
            .collect();
        let last = gate_layers.len().saturating_sub(1);
        for (gi, gates) in gate_layers.iter().enumerate() {
            if gi == 0 || gi == last {
                continue;
            }
            for g in gates {
                if let Gate::Cnot { control, target } = *g {
                    if owner[control] != owner[target] {
                        return Err(CircuitError::NotSpatiallyWindowable {
                            gate_layer: gi,
                            control,
                            target,
                            control_block: self.blocks[owner[control]].name.clone(),
                            target_block: self.blocks[owner[target]].name.clone(),
                        });
                    }
                }
            }
        }
        Ok(self.blocks.clone())
    }

    /// Canonical text form; `parse_circuit(&c.to_dsl()) == Ok(c)`.
    pub fn to_dsl(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "qubits {}", self.num_qubits);
        let _ = writeln!(s, "distance {}", self.distance);
        for b in &self.blocks {
            let _ = writeln!(s, "block {} {}", b.name, join(&b.qubits));
        }
        for layer in &self.layers {
            match layer {
                Layer::TransversalGates(gates) => {
                    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
                    for g in gates {
                        let args: Vec<usize> = g.qubits().collect();
                        match groups.last_mut() {
                            Some((m, a)) if m == g.mnemonic() => a.extend(args),
                            _ => groups.push((g.mnemonic().to_string(), args)),
                        }
                    }
                    let body: Vec<String> = groups.iter().map(|(m, a)| format!("{m} {}", join(a))).collect();
                    let _ = writeln!(s, "layer {}", body.join(" | "));
                }
                Layer::SyndromeExtraction => s.push_str("se\n"),
                Layer::LogicalMeasurement { basis, qubits } => {
                    let _ = writeln!(s, "measure {basis} {}", join(qubits));
                }
                Layer::MagicInit { kind, qubit } => {
                    let k = match kind {
                        MagicKind::T => 'T',
                        MagicKind::S => 'S',
                    };
                    let _ = writeln!(s, "minit {k} {qubit}");
                }
                Layer::GadgetT { data, t_ancilla, s_ancilla } => {
                    let _ = writeln!(s, "gadget_t {data} {t_ancilla} {s_ancilla}");
                }
            }
        }
        s
    }
}

impl fmt::Display for LogicalCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dsl())
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_usize(tok: &str, line: usize) -> Result<usize, CircuitError> {
    tok.parse().map_err(|_| CircuitError::Syntax { line, message: format!("expected an integer, found `{tok}`") })
}

/// Parses the line-oriented circuit format.
pub fn parse_circuit(text: &str) -> Result<LogicalCircuit, CircuitError> {
    let mut num_qubits = None;
    let mut distance = None;
    let mut header_line = 0;
    let mut blocks = Vec::new();
    let mut layers = Vec::new();
    let mut layer_lines = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| CircuitError::Syntax { line, message };
        let mut toks = content.split_whitespace();
        let head = toks.next().expect("non-empty line");
        let rest: Vec<&str> = toks.collect();
        match head {
            "qubits" | "distance" => {
                let [v] = rest.as_slice() else {
                    return Err(syntax(format!("`{head}` takes exactly one integer")));
                };
                let v = parse_usize(v, line)?;
                let slot = if head == "qubits" { &mut num_qubits } else { &mut distance };
                if slot.replace(v).is_some() {
                    return Err(syntax(format!("`{head}` given twice")));
                }
                header_line = line;
            }
            "block" => {
                let Some((name, qs)) = rest.split_first() else {
                    return Err(syntax("`block` needs a name and qubits".into()));
                };
                let qs = qs.iter().map(|t| parse_usize(t, line)).collect::<Result<Vec<_>, _>>()?;
                blocks.push((name.to_string(), qs));
                header_line = line;
            }
            "layer" => {
                let joined = rest.join(" ");
                let mut gates = Vec::new();
                for group in joined.split('|') {
                    let toks: Vec<&str> = group.split_whitespace().collect();
                    let Some((name, args)) = toks.split_first() else {
                        return Err(syntax("empty gate group in `layer`".into()));
                    };
                    let args = args.iter().map(|t| parse_usize(t, line)).collect::<Result<Vec<_>, _>>()?;
                    if args.is_empty() {
                        return Err(syntax(format!("gate `{name}` has no operands")));
                    }
                    match *name {
                        "H" | "X" | "Y" | "Z" | "S" => {
                            for q in args {
                                gates.push(match *name {
                                    "H" => Gate::H(q),
                                    "X" => Gate::X(q),
                                    "Y" => Gate::Y(q),
                                    "Z" => Gate::Z(q),
                                    _ => Gate::S(q),
                                });
                            }
                        }
                        "CNOT" => {
                            if args.len() % 2 != 0 {
                                return Err(syntax("CNOT takes control/target pairs".into()));
                            }
                            gates.extend(args.chunks(2).map(|p| Gate::Cnot { control: p[0], target: p[1] }));
                        }
                        other => return Err(syntax(format!("unknown gate `{other}`"))),
                    }
                }
                layers.push(Layer::TransversalGates(gates));
                layer_lines.push(line);
            }
            "se" => {
                if !rest.is_empty() {
                    return Err(syntax("`se` takes no arguments".into()));
                }
                layers.push(Layer::SyndromeExtraction);
                layer_lines.push(line);
            }
            "minit" => {
                let [kind, q] = rest.as_slice() else {
                    return Err(syntax("usage: minit T|S q".into()));
                };
                let kind = match *kind {
                    "T" => MagicKind::T,
                    "S" => MagicKind::S,
                    other => return Err(syntax(format!("unknown magic state `{other}`"))),
                };
                layers.push(Layer::MagicInit { kind, qubit: parse_usize(q, line)? });
                layer_lines.push(line);
            }
            "measure" => {
                let Some((basis, qs)) = rest.split_first() else {
                    return Err(syntax("usage: measure X|Z q ...".into()));
                };
                let basis = match *basis {
                    "X" => Basis::X,
                    "Z" => Basis::Z,
                    other => return Err(syntax(format!("unknown measurement basis `{other}`"))),
                };
                let qubits = qs.iter().map(|t| parse_usize(t, line)).collect::<Result<Vec<_>, _>>()?;
                layers.push(Layer::LogicalMeasurement { basis, qubits });
                layer_lines.push(line);
            }
            "gadget_t" => {
                let [a, b, c] = rest.as_slice() else {
                    return Err(syntax("usage: gadget_t data t_ancilla s_ancilla".into()));
                };
                layers.push(Layer::GadgetT {
                    data: parse_usize(a, line)?,
                    t_ancilla: parse_usize(b, line)?,
                    s_ancilla: parse_usize(c, line)?,
                });
                layer_lines.push(line);
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }

    let missing = |what: &str| CircuitError::Syntax { line: header_line.max(1), message: format!("missing `{what}` directive") };
    let mut circuit = LogicalCircuit {
        num_qubits: num_qubits.ok_or_else(|| missing("qubits"))?,
        distance: distance.ok_or_else(|| missing("distance"))?,
        layers,
        blocks: blocks.into_iter().map(|(name, qubits)| Block { name, qubits, depth: 0 }).collect(),
    };
    circuit.validate().map_err(|(at, message)| CircuitError::Semantic {
        line: layer_lines.get(at).copied().unwrap_or(header_line),
        message,
    })?;
    circuit.assign_block_depths();
    Ok(circuit)
}

/// The two example circuits: `fig6a` (two qubits, alternating CNOT and
/// single-qubit Clifford layers, depth 3(d+1)/2) and `fig6b` (five single-qubit
/// blocks joined by CNOTs at the start and end, interior depth (d+1)/2).
pub fn builtin_example(name: &str, d: usize) -> Result<LogicalCircuit, CircuitError> {
    match name {
        "fig6a" => {
            check_distance(d)?;
            fig6a(d)
        }
        "fig6b" => {
            check_distance(d)?;
            fig6b(d)
        }
        other => Err(CircuitError::UnknownExample(other.to_string())),
    }
}

fn fig6a(d: usize) -> Result<LogicalCircuit, CircuitError> {
    let depth = 3 * (d + 1) / 2;
    let mut layers = Vec::new();
    for i in 0..depth {
        let gates = if i % 2 == 0 {
            if (i / 2) % 2 == 0 {
                vec![Gate::Cnot { control: 0, target: 1 }]
            } else {
                vec![Gate::Cnot { control: 1, target: 0 }]
            }
        } else if (i / 2) % 2 == 0 {
            vec![Gate::H(0), Gate::H(1)]
        } else {
            vec![Gate::X(0), Gate::Z(1)]
        };
        layers.push(Layer::TransversalGates(gates));
        layers.push(Layer::SyndromeExtraction);
    }
    layers.push(Layer::LogicalMeasurement { basis: Basis::Z, qubits: vec![0, 1] });
    LogicalCircuit::new(2, d, layers, Vec::new())
}

fn fig6b(d: usize) -> Result<LogicalCircuit, CircuitError> {
    let interior = (d + 1) / 2;
    let mut layers = vec![
        Layer::TransversalGates(vec![Gate::Cnot { control: 0, target: 1 }, Gate::Cnot { control: 2, target: 3 }]),
        Layer::SyndromeExtraction,
    ];
    for i in 0..interior {
        let gates = if i % 2 == 0 {
            (0..5).map(Gate::H).collect()
        } else {
            vec![Gate::X(0), Gate::Y(1), Gate::Z(2), Gate::X(3), Gate::Y(4)]
        };
        layers.push(Layer::TransversalGates(gates));
        layers.push(Layer::SyndromeExtraction);
    }
    layers.push(Layer::TransversalGates(vec![
        Gate::Cnot { control: 1, target: 2 },
        Gate::Cnot { control: 3, target: 4 },
    ]));
    layers.push(Layer::SyndromeExtraction);
    layers.push(Layer::LogicalMeasurement { basis: Basis::Z, qubits: (0..5).collect() });
    let blocks = (0..5).map(|q| (format!("b{q}"), vec![q])).collect();
    LogicalCircuit::new(5, d, layers, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let c = parse_circuit("qubits 1\ndistance 3\nse\nse").unwrap();
        assert_eq!(c.num_qubits, 1);
        assert_eq!(c.distance, 3);
        assert_eq!(c.se_rounds(), 2);
        assert_eq!(c.gate_layer_count(), 0);
    }

    #[test]
    fn cnot_control_equals_target() {
        let err = parse_circuit("qubits 2\ndistance 3\nlayer CNOT 0 0").unwrap_err();
        assert!(matches!(err, CircuitError::Semantic { line: 3, ref message } if message.contains("control equals target")));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_circuit("qubits 2\n# comment\ndistance 3\nlayer FOO 1\n").unwrap_err();
        assert_eq!(err, CircuitError::Syntax { line: 4, message: "unknown gate `FOO`".into() });
    }

    #[test]
    fn out_of_range_and_overlapping_blocks() {
        assert!(matches!(
            parse_circuit("qubits 2\ndistance 3\nlayer H 2\nse"),
            Err(CircuitError::Semantic { line: 3, .. })
        ));
        assert!(matches!(
            parse_circuit("qubits 2\ndistance 3\nblock a 0 1\nblock b 1\nse"),
            Err(CircuitError::Semantic { .. })
        ));
    }

    #[test]
    fn measurement_needs_se_after_gate() {
        assert!(parse_circuit("qubits 1\ndistance 3\nlayer H 0\nmeasure Z 0").is_err());
        assert!(parse_circuit("qubits 1\ndistance 3\nlayer H 0\nse\nmeasure Z 0").is_ok());
        // a gate on another qubit does not block the measurement
        assert!(parse_circuit("qubits 2\ndistance 3\nse\nlayer H 1\nmeasure Z 0\nse").is_ok());
    }

    #[test]
    fn lifecycle_rules() {
        assert!(parse_circuit("qubits 2\ndistance 3\nlayer H 1\nse\nminit T 1").is_err());
        assert!(parse_circuit("qubits 2\ndistance 3\nse\nmeasure Z 0\nlayer H 0\nse").is_err());
        assert!(parse_circuit("qubits 3\ndistance 3\nse\nminit T 1\nminit S 2\ngadget_t 0 1 2\nse").is_ok());
        assert!(parse_circuit("qubits 3\ndistance 3\ngadget_t 0 0 2").is_err());
    }

    #[test]
    fn fig6a_shape() {
        for d in [3, 5, 7] {
            let c = builtin_example("fig6a", d).unwrap();
            assert_eq!(c.num_qubits, 2);
            assert_eq!(c.gate_layer_count(), 3 * (d + 1) / 2);
            assert_eq!(c.se_rounds(), 3 * (d + 1) / 2);
        }
        let c = builtin_example("fig6a", 3).unwrap();
        assert_eq!(c.gate_layer_count(), 6);
        assert_eq!(c.se_rounds(), 6);
    }

    #[test]
    fn fig6b_shape() {
        let c = builtin_example("fig6b", 3).unwrap();
        assert_eq!(c.num_qubits, 5);
        let blocks = c.block_partition().unwrap();
        assert_eq!(blocks.len(), 5);
        assert!(blocks.iter().all(|b| b.depth == 2));
        let c5 = builtin_example("fig6b", 5).unwrap();
        assert!(c5.blocks.iter().all(|b| b.depth == 3));
    }

    #[test]
    fn builtin_errors() {
        assert_eq!(builtin_example("fig6a", 4), Err(CircuitError::BadDistance(4)));
        assert!(matches!(builtin_example("fig7", 3), Err(CircuitError::UnknownExample(_))));
    }

    #[test]
    fn round_trip_builtins() {
        for name in ["fig6a", "fig6b"] {
            let c = builtin_example(name, 3).unwrap();
            assert_eq!(parse_circuit(&c.to_dsl()).unwrap(), c);
        }
    }

    #[test]
    fn no_blocks_means_one_block() {
        let c = builtin_example("fig6a", 3).unwrap();
        let b = c.block_partition().unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].qubits, vec![0, 1]);
    }

    #[test]
    fn interior_cross_block_cnot_rejected() {
        let mut text = builtin_example("fig6a", 3).unwrap().to_dsl();
        text = text.replacen("distance 3\n", "distance 3\nblock a 0\nblock b 1\n", 1);
        let c = parse_circuit(&text).unwrap();
        assert!(matches!(c.block_partition(), Err(CircuitError::NotSpatiallyWindowable { gate_layer: 2, .. })));
    }

    #[test]
    fn gadget_lowering() {
        let c = parse_circuit("qubits 3\ndistance 3\nminit T 1\nminit S 2\ngadget_t 0 1 2\nse").unwrap();
        let lowered: Vec<Layer> = c.lowered().into_iter().map(|(_, l)| l).collect();
        assert_eq!(
            lowered[2..7],
            [
                Layer::TransversalGates(vec![Gate::Cnot { control: 0, target: 1 }]),
                Layer::SyndromeExtraction,
                Layer::TransversalGates(vec![Gate::Cnot { control: 0, target: 2 }]),
                Layer::SyndromeExtraction,
                Layer::LogicalMeasurement { basis: Basis::Z, qubits: vec![1] },
            ]
        );
        assert_eq!(c.gadgets(), vec![GadgetSite { index: 0, data: 0, t_ancilla: 1, s_ancilla: 2 }]);
    }
}
