//! Event signatures from sparse propagation must agree with full-circuit
//! injection followed by check composition.

use std::collections::BTreeSet;

use corrwin::checks::CheckDefs;
use corrwin::circuit::{builtin_example, parse_circuit, LogicalCircuit};
use corrwin::hypergraph::DecodingHypergraph;
use corrwin::layout::PatchLayout;
use corrwin::noise::{compose_checks, inject_events, EventKind, EventTable, NoiseModel};
use corrwin::pauli::{Basis, Pauli};
use corrwin::physical::{expand_to_physical, MeasKey, NoiseTier, Op, PhysicalCircuit, SurfaceCodeSpec};
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Built {
    phys: PhysicalCircuit,
    defs: CheckDefs,
    table: EventTable,
    graph: DecodingHypergraph,
}

fn build(c: &LogicalCircuit, tier: NoiseTier, p: f64) -> Built {
    let phys = expand_to_physical(c, &SurfaceCodeSpec::new(c.distance, tier)).unwrap();
    let defs = CheckDefs::build(c, &phys).unwrap();
    let table = EventTable::new(&phys, &NoiseModel::new(p, tier).unwrap());
    let graph = DecodingHypergraph::build(&phys, &defs, &table).unwrap();
    Built { phys, defs, table, graph }
}

fn injected_signature(b: &Built, events: &[usize]) -> (Vec<usize>, u64) {
    let shot = inject_events(&b.phys, &b.table, events).unwrap();
    let bits = compose_checks(&shot, &b.defs).unwrap();
    (bits.iter().enumerate().filter(|(_, v)| **v).map(|(i, _)| i).collect(), shot.logical_flips)
}

fn exhaustive(b: &Built) {
    for e in 0..b.table.len() {
        let sig = b.graph.propagate_event(e).unwrap();
        let (checks, mask) = injected_signature(b, &[e]);
        assert_eq!((&sig.checks, sig.mask), (&checks, mask), "event {:?}", b.table.events[e]);
    }
}

#[test]
fn fig6a_d3_every_event_matches_injection() {
    let c = builtin_example("fig6a", 3).unwrap();
    exhaustive(&build(&c, NoiseTier::CircuitLevel, 1e-3));
    exhaustive(&build(&c, NoiseTier::Phenomenological, 1e-3));
}

#[test]
fn fig6b_d3_every_event_matches_injection() {
    let c = builtin_example("fig6b", 3).unwrap();
    exhaustive(&build(&c, NoiseTier::Phenomenological, 1e-3));
}

#[test]
fn fig6a_d5_sampled_events_match_injection() {
    let c = builtin_example("fig6a", 5).unwrap();
    let b = build(&c, NoiseTier::CircuitLevel, 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let e = rng.gen_range(0..b.table.len());
        let sig = b.graph.propagate_event(e).unwrap();
        assert_eq!((sig.checks.clone(), sig.mask), injected_signature(&b, &[e]));
    }
}

#[test]
fn multi_event_injection_is_xor_of_signatures() {
    let c = builtin_example("fig6a", 3).unwrap();
    let b = build(&c, NoiseTier::CircuitLevel, 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ids: Vec<usize> = (0..b.table.len()).collect();
    for _ in 0..200 {
        let k = rng.gen_range(1..6);
        let chosen: Vec<usize> = ids.choose_multiple(&mut rng, k).copied().collect();
        let (syn, mask) = b.graph.syndrome_of(&chosen);
        let expected: Vec<usize> = syn.iter().enumerate().filter(|(_, v)| **v).map(|(i, _)| i).collect();
        assert_eq!(injected_signature(&b, &chosen), (expected, mask));
        // linearity of the raw syndrome for a split into disjoint halves
        let (a, rest) = chosen.split_at(k / 2);
        let sa = inject_events(&b.phys, &b.table, a).unwrap();
        let sb = inject_events(&b.phys, &b.table, rest).unwrap();
        let sab = inject_events(&b.phys, &b.table, &chosen).unwrap();
        let xor: Vec<bool> = sa.syndrome.iter().zip(&sb.syndrome).map(|(x, y)| x ^ y).collect();
        assert_eq!(xor, sab.syndrome);
        assert_eq!(sa.logical_flips ^ sb.logical_flips, sab.logical_flips);
    }
}

#[test]
fn event_count_matches_location_enumeration() {
    let c = parse_circuit("qubits 1\ndistance 3\nse\nse").unwrap();
    let b = build(&c, NoiseTier::Phenomenological, 1e-3);
    // per round: 9 idle data (3 each) + 8 readouts (1 each); terminal readout: 9 flips
    let expected = 2 * (9 * 3 + 8) + 9;
    assert_eq!(b.table.len(), expected);
    assert_eq!(corrwin::noise::enumerate_events(&b.phys, &NoiseModel::new(1e-3, NoiseTier::Phenomenological).unwrap()).len(), expected);
}

fn find_check(b: &Built, q: usize, round: usize, basis: Basis, plaquette: usize) -> usize {
    b.defs
        .checks
        .iter()
        .find(|c| c.qubit == q && c.round == round && c.basis == basis && c.plaquette == plaquette)
        .unwrap()
        .id
}

/// Event applying `pauli` on data qubit `data` at the first idle in the reset
/// moment of round `round`.
fn idle_event(b: &Built, data: usize, round: usize, pauli: Pauli) -> usize {
    let qubit = b.phys.data_qubit(0, data);
    let idles: Vec<usize> = b
        .phys
        .ops
        .iter()
        .enumerate()
        .filter(|(_, o)| matches!(o, Op::Idle { qubit: q } if *q == qubit))
        .map(|(l, _)| l)
        .collect();
    // circuit-level rounds have six moments; the data idle in the reset moment comes first
    let per_round = idles.len() / b.phys.num_rounds;
    let loc = idles[round * per_round];
    b.table.at_location(loc).iter().find(|e| e.kind == EventKind::Pauli1(pauli)).unwrap().id
}

#[test]
fn bulk_x_flips_two_adjacent_z_checks() {
    let c = parse_circuit("qubits 1\ndistance 3\nse\nse\nse").unwrap();
    let b = build(&c, NoiseTier::CircuitLevel, 1e-3);
    let layout = PatchLayout::new(3);
    let center = 4;
    let e = idle_event(&b, center, 1, Pauli::X);
    let sig = b.graph.propagate_event(e).unwrap();
    let expected: BTreeSet<usize> = layout
        .plaquettes_on(center)
        .into_iter()
        .filter(|&s| layout.plaquettes[s].home == Basis::Z)
        .map(|s| find_check(&b, 0, 1, Basis::Z, s))
        .collect();
    assert_eq!(expected.len(), 2);
    assert_eq!(sig.checks.iter().copied().collect::<BTreeSet<_>>(), expected);
    assert_eq!(sig.mask, 0);
}

#[test]
fn measurement_flip_hits_consecutive_rounds() {
    let c = parse_circuit("qubits 1\ndistance 3\nse\nse\nse").unwrap();
    let b = build(&c, NoiseTier::CircuitLevel, 1e-3);
    let slot = b.phys.slot(&MeasKey::Stabilizer { qubit: 0, round: 1, plaquette: 3 }).unwrap();
    let loc = b.phys.ops.iter().position(|o| matches!(o, Op::Measure { slot: s, .. } if *s == slot)).unwrap();
    let e = b.table.at_location(loc)[0].id;
    let basis = b.defs.checks.iter().find(|c| c.plaquette == 3).unwrap().basis;
    let expected = vec![find_check(&b, 0, 1, basis, 3), find_check(&b, 0, 2, basis, 3)];
    assert_eq!(b.graph.propagate_event(e).unwrap().checks, expected);
}

#[test]
fn stabilizer_error_is_invisible_and_logical_chain_flips_observable() {
    let c = parse_circuit("qubits 1\ndistance 3\nse\nse\nse").unwrap();
    let b = build(&c, NoiseTier::CircuitLevel, 1e-3);
    let layout = PatchLayout::new(3);
    let stab = layout.plaquettes.iter().find(|p| p.home == Basis::X && p.weight() == 4).unwrap();
    let events: Vec<usize> = stab.support().map(|i| idle_event(&b, i, 1, Pauli::X)).collect();
    let (syn, mask) = b.graph.syndrome_of(&events);
    assert!(syn.iter().all(|v| !v));
    assert_eq!(mask, 0);
    assert_eq!(injected_signature(&b, &events), (vec![], 0));

    let chain: Vec<usize> = layout.logical_support(Basis::X, false).into_iter().map(|i| idle_event(&b, i, 1, Pauli::X)).collect();
    let (syn, mask) = b.graph.syndrome_of(&chain);
    assert!(syn.iter().all(|v| !v));
    assert_eq!(mask, 1, "Z readout of qubit 0 flips");
}

#[test]
fn merged_edges_partition_nontrivial_events() {
    let c = builtin_example("fig6a", 3).unwrap();
    let b = build(&c, NoiseTier::CircuitLevel, 2e-3);
    let mut seen = vec![false; b.table.len()];
    for e in &b.graph.edges {
        assert!(!e.vertices.is_empty() || e.mask != 0);
        assert!(e.weight > 0.0 && e.p < 0.5);
        let sum: f64 = e.events.iter().map(|&i| b.table.events[i].p).sum();
        assert!(e.p <= sum + 1e-15);
        for &i in &e.events {
            assert!(!std::mem::replace(&mut seen[i], true));
            assert_eq!(b.graph.event_edge[i], Some(e.id));
        }
    }
    for w in b.graph.edges.windows(2) {
        assert!((&w[0].vertices, w[0].mask) < (&w[1].vertices, w[1].mask));
    }
    for (i, s) in seen.iter().enumerate() {
        if !s {
            let sig = b.graph.propagate_event(i).unwrap();
            assert!(sig.checks.is_empty() && sig.mask == 0);
        }
    }
}
