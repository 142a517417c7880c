//! Rotated surface-code patch geometry.
//!
//! Data qubit `(r, c)` of a distance-`d` patch has index `r * d + c`. Plaquettes sit
//! on the corners `(i, j)` with `0 <= i, j <= d` and act on the (up to four) data
//! qubits around the corner. A plaquette's *home* type is X when `i + j` is even.
//! Bulk corners keep all four qubits; the top and bottom edges keep the weight-two
//! home-X plaquettes and the left and right edges the home-Z ones, which gives
//! `d^2 - 1` stabilizers.
//!
//! A transversal H swaps every stabilizer's type, so a patch carries an orientation
//! bit. In the normal orientation the stabilizer type is the home type, X_L acts on
//! column 0 and Z_L on row 0. In the swapped orientation all three are transposed.

use crate::pauli::Basis;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plaquette {
    pub corner: (usize, usize),
    pub home: Basis,
    /// Data qubit touched at each of the four CNOT steps, `None` where the corner
    /// is missing on a boundary.
    pub schedule: [Option<usize>; 4],
}

impl Plaquette {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.schedule.iter().flatten().copied()
    }

    pub fn weight(&self) -> usize {
        self.schedule.iter().flatten().count()
    }

    /// Stabilizer type under the given orientation (`swapped` after an odd number of H).
    pub fn basis(&self, swapped: bool) -> Basis {
        if swapped {
            self.home.flipped()
        } else {
            self.home
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLayout {
    pub d: usize,
    pub plaquettes: Vec<Plaquette>,
}

impl PatchLayout {
    pub fn new(d: usize) -> Self {
        assert!(d >= 3 && d % 2 == 1, "distance must be odd and >= 3");
        let mut plaquettes = Vec::with_capacity(d * d - 1);
        for i in 0..=d {
            for j in 0..=d {
                let home = if (i + j) % 2 == 0 { Basis::X } else { Basis::Z };
                let edge_row = i == 0 || i == d;
                let edge_col = j == 0 || j == d;
                let keep = match (edge_row, edge_col) {
                    (false, false) => true,
                    (true, false) => home == Basis::X,
                    (false, true) => home == Basis::Z,
                    (true, true) => false,
                };
                if !keep {
                    continue;
                }
                let at = |r: isize, c: isize| -> Option<usize> {
                    let in_range = |v: isize| v >= 0 && (v as usize) < d;
                    (in_range(r) && in_range(c)).then(|| r as usize * d + c as usize)
                };
                let (r, c) = (i as isize, j as isize);
                let nw = at(r - 1, c - 1);
                let ne = at(r - 1, c);
                let sw = at(r, c - 1);
                let se = at(r, c);
                // The X order hooks horizontally and the Z order vertically, both
                // perpendicular to the logical of the same type.
                let schedule = match home {
                    Basis::X => [nw, ne, sw, se],
                    Basis::Z => [nw, sw, ne, se],
                };
                plaquettes.push(Plaquette { corner: (i, j), home, schedule });
            }
        }
        debug_assert_eq!(plaquettes.len(), d * d - 1);
        PatchLayout { d, plaquettes }
    }

    pub fn num_data(&self) -> usize {
        self.d * self.d
    }

    pub fn num_stabilizers(&self) -> usize {
        self.plaquettes.len()
    }

    /// Data and measure qubits of one patch.
    pub fn qubits_per_patch(&self) -> usize {
        self.num_data() + self.num_stabilizers()
    }

    /// Support of the logical operator of the given type.
    pub fn logical_support(&self, basis: Basis, swapped: bool) -> Vec<usize> {
        let d = self.d;
        let column = (basis == Basis::X) != swapped;
        if column {
            (0..d).map(|r| r * d).collect()
        } else {
            (0..d).collect()
        }
    }

    /// Plaquettes containing data qubit `q`, with their positions in the schedule.
    pub fn plaquettes_on(&self, q: usize) -> Vec<usize> {
        self.plaquettes
            .iter()
            .enumerate()
            .filter(|(_, p)| p.support().any(|x| x == q))
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap(a: &[usize], b: &[usize]) -> usize {
        a.iter().filter(|x| b.contains(x)).count()
    }

    #[test]
    fn counts() {
        for d in [3, 5, 7] {
            let l = PatchLayout::new(d);
            assert_eq!(l.num_stabilizers(), d * d - 1);
            let weight2 = l.plaquettes.iter().filter(|p| p.weight() == 2).count();
            assert_eq!(weight2, 2 * (d - 1));
            assert!(l.plaquettes.iter().all(|p| matches!(p.weight(), 2 | 4)));
        }
        assert_eq!(PatchLayout::new(3).qubits_per_patch(), 17);
    }

    #[test]
    fn stabilizers_commute_and_logicals_anticommute() {
        for d in [3, 5] {
            let l = PatchLayout::new(d);
            for swapped in [false, true] {
                let sup: Vec<(Basis, Vec<usize>)> =
                    l.plaquettes.iter().map(|p| (p.basis(swapped), p.support().collect())).collect();
                for (ba, a) in &sup {
                    for (bb, b) in &sup {
                        if ba != bb {
                            assert_eq!(overlap(a, b) % 2, 0);
                        }
                    }
                }
                let xl = l.logical_support(Basis::X, swapped);
                let zl = l.logical_support(Basis::Z, swapped);
                assert_eq!(overlap(&xl, &zl) % 2, 1);
                for (b, s) in &sup {
                    let other = if *b == Basis::Z { &xl } else { &zl };
                    assert_eq!(overlap(other, s) % 2, 0, "logical must commute with stabilizers");
                }
            }
        }
    }

    #[test]
    fn schedule_interleaving_preserves_commutation() {
        // For each X/Z pair sharing two qubits, the number of shared qubits the X
        // plaquette reaches first must be even, or mid-round measurements disturb
        // each other.
        let l = PatchLayout::new(5);
        for a in l.plaquettes.iter().filter(|p| p.home == Basis::X) {
            for b in l.plaquettes.iter().filter(|p| p.home == Basis::Z) {
                let mut first = 0;
                for (ta, qa) in a.schedule.iter().enumerate() {
                    let Some(qa) = qa else { continue };
                    if let Some(tb) = b.schedule.iter().position(|q| *q == Some(*qa)) {
                        assert_ne!(ta, tb, "qubit used twice in one step");
                        if ta < tb {
                            first += 1;
                        }
                    }
                }
                assert_eq!(first % 2, 0);
            }
        }
    }

    #[test]
    fn each_data_qubit_touched_once_per_step() {
        let l = PatchLayout::new(5);
        for step in 0..4 {
            let mut seen = vec![false; l.num_data()];
            for p in &l.plaquettes {
                if let Some(q) = p.schedule[step] {
                    assert!(!std::mem::replace(&mut seen[q], true));
                }
            }
        }
    }
}
