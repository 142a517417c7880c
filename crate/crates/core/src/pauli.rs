//! Phase-free single-qubit Paulis and the two stabilizer types.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Stabilizer / measurement basis of a CSS code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn flipped(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Z => 'Z',
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A single-qubit Pauli modulo phase, stored as its symplectic `(x, z)` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Pauli {
    pub x: bool,
    pub z: bool,
}

impl Pauli {
    pub const I: Pauli = Pauli { x: false, z: false };
    pub const X: Pauli = Pauli { x: true, z: false };
    pub const Y: Pauli = Pauli { x: true, z: true };
    pub const Z: Pauli = Pauli { x: false, z: true };

    /// The three non-identity Paulis in the order X, Y, Z.
    pub const NONTRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn is_identity(self) -> bool {
        !self.x && !self.z
    }

    /// Product modulo phase.
    pub fn compose(self, other: Pauli) -> Pauli {
        Pauli {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        }
    }

    /// True when the two Paulis anticommute.
    pub fn anticommutes(self, other: Pauli) -> bool {
        (self.x & other.z) ^ (self.z & other.x)
    }

    /// The Pauli that flips a measurement in `basis`.
    pub fn flips(self, basis: Basis) -> bool {
        match basis {
            Basis::Z => self.x,
            Basis::X => self.z,
        }
    }

    /// The 15 non-identity two-qubit Paulis, ordered lexicographically over `I, X, Y, Z`.
    pub fn two_qubit_nontrivial() -> impl Iterator<Item = (Pauli, Pauli)> {
        const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        ALL.into_iter()
            .flat_map(|a| ALL.into_iter().map(move |b| (a, b)))
            .filter(|(a, b)| !(a.is_identity() && b.is_identity()))
    }

    pub fn as_char(self) -> char {
        match (self.x, self.z) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}
