//! Correlated window decoding for transversal-gate surface-code circuits.
//!
//! The pipeline runs from a [`LogicalCircuit`] through its physical expansion,
//! the decoding hypergraph and exact most-likely-error decoding, optionally in
//! temporal or spatial windows, to Monte Carlo failure-rate estimates.

pub mod checks;
pub mod circuit;
pub mod decoder;
pub mod estimate;
pub mod fixup;
pub mod harness;
pub mod hypergraph;
pub mod layout;
pub mod noise;
pub mod osd;
pub mod pauli;
pub mod physical;
pub mod windows;

pub use checks::{build_checks, Check, CheckDefs};
pub use circuit::{builtin_example, parse_circuit, Gate, Layer, LogicalCircuit, MagicKind};
pub use noise::{compose_checks, enumerate_events, inject_events, sample_shot, ErrorEvent, LogicalMask, NoiseModel, ShotResult};
pub use pauli::{Basis, Pauli};
pub use physical::{expand_to_physical, NoiseTier, PhysicalCircuit, SurfaceCodeSpec};
pub use fixup::{choose_basis, sequential_resolution, teleport_recovery, FrameState, GadgetRecord};
pub use decoder::{decode_bruteforce, decode_mle, verify_solution, DecodeResult, Decoder, DecodingInstance, MleDecoder};
pub use harness::{compare_windowed, emit_results, run_experiment, ExperimentConfig, ResultRow};
pub use hypergraph::{DecodingHypergraph, Hyperedge};
pub use windows::{plan_for_mode, plan_spatial_feedforward, plan_spatial_parallel, plan_temporal, run_windowed_decode, PreparedPlan, WindowMode, WindowPlan, WindowSpec};
