//! Monte Carlo failure-rate experiments.
//!
//! Shot `k` of grid point `(d, p)` draws its faults from a generator seeded by
//! `(master seed, point, k)`, so results do not depend on how shots are split
//! across workers, and windowed and unwindowed runs see the same syndromes.
//! The syndrome of a shot is the XOR of the sampled events' signatures, which
//! matches a frame simulation of the same faults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::CheckDefs;
use crate::circuit::{builtin_example, check_distance, parse_circuit, LogicalCircuit};
use crate::decoder::{Decoder, MleDecoder, PreparedDecoder};
use crate::hypergraph::DecodingHypergraph;
use crate::noise::{mix_seed, EventTable, LogicalMask, NoiseModel};
use crate::osd::OrderedEliminationDecoder;
use crate::physical::{expand_to_physical, NoiseTier, SurfaceCodeSpec};
use crate::windows::{plan_for_mode, PreparedPlan, WindowMode};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("decoding failed at d={d}, p={p}, shot {shot} (seed {seed:#018x}): {message}")]
    Infeasible { d: usize, p: f64, shot: u64, seed: u64, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }
}

fn default_workers() -> usize {
    1
}

fn default_max_shots() -> u64 {
    100_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    /// Exact most-likely-error decoding.
    #[default]
    Mle,
    /// Approximate, for runs far above threshold.
    OrderedElimination,
}

impl DecoderKind {
    fn decoder(self) -> &'static dyn Decoder {
        match self {
            DecoderKind::Mle => &MleDecoder,
            DecoderKind::OrderedElimination => &OrderedEliminationDecoder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in example name or path to a circuit file.
    pub circuit: String,
    #[serde(rename = "d")]
    pub distances: Vec<usize>,
    #[serde(rename = "p")]
    pub error_rates: Vec<f64>,
    #[serde(default)]
    pub shots: Option<u64>,
    /// Keep sampling until this many failures (in every compared mode).
    #[serde(default)]
    pub target_failures: Option<u64>,
    /// Cap on shots per point when sampling to a failure target.
    #[serde(default = "default_max_shots")]
    pub max_shots: u64,
    pub mode: WindowMode,
    #[serde(default)]
    pub seed: u64,
    pub tier: NoiseTier,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub decoder: DecoderKind,
    /// Record wall time. Off by default so outputs are reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        match (self.shots, self.target_failures) {
            (None, None) => return Err(HarnessError::config("either shots or target_failures is required")),
            (Some(0), _) => return Err(HarnessError::config("shots must be at least 1")),
            (_, Some(0)) => return Err(HarnessError::config("target_failures must be at least 1")),
            _ => {}
        }
        if self.max_shots == 0 {
            return Err(HarnessError::config("max_shots must be at least 1"));
        }
        if self.workers == 0 {
            return Err(HarnessError::config("workers must be at least 1"));
        }
        if self.distances.is_empty() || self.error_rates.is_empty() {
            return Err(HarnessError::config("d and p lists must be non-empty"));
        }
        for &d in &self.distances {
            check_distance(d).map_err(|e| HarnessError::config(e.to_string()))?;
        }
        for &p in &self.error_rates {
            if !(0.0..0.5).contains(&p) {
                return Err(HarnessError::config(format!("p = {p} outside [0, 0.5)")));
            }
        }
        Ok(())
    }

    pub fn circuit_at(&self, d: usize) -> Result<LogicalCircuit, HarnessError> {
        if let Ok(c) = builtin_example(&self.circuit, d) {
            return Ok(c);
        }
        let path = Path::new(&self.circuit);
        if !path.exists() {
            return Err(HarnessError::config(format!("`{}` is neither a built-in example nor a file", self.circuit)));
        }
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        let mut circuit = parse_circuit(&text).map_err(|e| HarnessError::config(e.to_string()))?;
        circuit.distance = d;
        Ok(circuit)
    }

    /// Label used in output rows.
    pub fn circuit_label(&self) -> String {
        Path::new(&self.circuit)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.circuit.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub circuit: String,
    pub d: usize,
    pub p: f64,
    pub mode: WindowMode,
    pub shots: u64,
    pub failures: u64,
    pub p_fail: f64,
    pub stderr: f64,
    pub seconds: f64,
}

fn rate(failures: u64, shots: u64) -> (f64, f64) {
    let p = failures as f64 / shots as f64;
    (p, (p * (1.0 - p) / shots as f64).sqrt())
}

/// Everything needed to sample and decode shots at one grid point.
pub struct Point {
    pub d: usize,
    pub p: f64,
    pub id: u64,
    /// `None` at `p = 0`, where no fault ever occurs.
    model: Option<(DecodingHypergraph, EventTable)>,
}

/// A decoder bound to one point's hypergraph.
pub enum PointDecoder {
    Monolithic(Box<dyn PreparedDecoder>),
    Windowed(PreparedPlan),
}

impl PointDecoder {
    pub fn decode(&self, graph: &DecodingHypergraph, syndrome: &[bool]) -> Result<LogicalMask, String> {
        match self {
            PointDecoder::Monolithic(inst) => inst.decode(syndrome).map(|r| r.mask).map_err(|e| e.to_string()),
            PointDecoder::Windowed(plan) => plan.decode(graph, syndrome, false).map(|r| r.result.mask).map_err(|e| e.to_string()),
        }
    }
}

impl Point {
    pub fn build(config: &ExperimentConfig, d: usize, p: f64) -> Result<Self, HarnessError> {
        let id = mix_seed(d as u64, p.to_bits(), config.tier as u64);
        if p == 0.0 {
            return Ok(Point { d, p, id, model: None });
        }
        let circuit = config.circuit_at(d)?;
        let err = |e: &dyn std::fmt::Display| HarnessError::config(format!("d={d}: {e}"));
        let phys = expand_to_physical(&circuit, &SurfaceCodeSpec::new(d, config.tier)).map_err(|e| err(&e))?;
        let defs = CheckDefs::build(&circuit, &phys).map_err(|e| err(&e))?;
        let noise = NoiseModel::new(p, config.tier).map_err(|e| err(&e))?;
        let table = EventTable::new(&phys, &noise);
        let graph = DecodingHypergraph::build(&phys, &defs, &table).map_err(|e| err(&e))?;
        Ok(Point { d, p, id, model: Some((graph, table)) })
    }

    pub fn graph(&self) -> Option<&DecodingHypergraph> {
        self.model.as_ref().map(|(g, _)| g)
    }

    pub fn decoder(&self, config: &ExperimentConfig, mode: WindowMode) -> Result<Option<PointDecoder>, HarnessError> {
        let Some((graph, _)) = &self.model else { return Ok(None) };
        Ok(Some(match mode {
            WindowMode::None => PointDecoder::Monolithic(config.decoder.decoder().prepare(&graph.instance())),
            mode => {
                let circuit = config.circuit_at(self.d)?;
                let plan = plan_for_mode(&circuit, mode).map_err(|e| HarnessError::config(e.to_string()))?;
                PointDecoder::Windowed(PreparedPlan::new(graph, &plan, config.decoder.decoder()))
            }
        }))
    }

    pub fn seed(&self, master: u64, shot: u64) -> u64 {
        mix_seed(master, self.id, shot)
    }

    /// Check syndrome and true logical flips of one shot.
    pub fn sample(&self, seed: u64) -> (Vec<bool>, LogicalMask) {
        match &self.model {
            None => (Vec::new(), 0),
            Some((graph, table)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                graph.syndrome_of(&table.sample(&mut rng))
            }
        }
    }
}

/// Outcome of one shot under one decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Scored {
    /// Bit `k` set when the residual flips logical qubit `k`.
    residual: LogicalMask,
    digest: u64,
}

fn digest(seed: u64, syndrome: &[bool]) -> u64 {
    // FNV-1a over the seed and the flipped check ids
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(seed);
    for (i, &b) in syndrome.iter().enumerate() {
        if b {
            eat(i as u64);
        }
    }
    h
}

fn score(point: &Point, decoder: Option<&PointDecoder>, syndrome: &[bool], truth: LogicalMask, seed: u64, shot: u64) -> Result<Scored, HarnessError> {
    let digest = digest(seed, syndrome);
    let correction = match (decoder, point.graph()) {
        (Some(dec), Some(graph)) if syndrome.iter().any(|&b| b) => dec.decode(graph, syndrome).map_err(|message| {
            HarnessError::Infeasible { d: point.d, p: point.p, shot, seed, message }
        })?,
        _ => 0,
    };
    Ok(Scored { residual: correction ^ truth, digest })
}

/// Shot ranges processed between stopping checks. The schedule is fixed, so
/// stopping points never depend on the worker count.
fn batches(config: &ExperimentConfig) -> impl Iterator<Item = (u64, u64)> {
    let total = config.shots.unwrap_or(config.max_shots);
    let mut start = 0u64;
    let mut size = 1024u64;
    std::iter::from_fn(move || {
        if start >= total {
            return None;
        }
        let end = (start + size).min(total);
        let range = (start, end);
        start = end;
        size = (size * 2).min(1 << 18);
        Some(range)
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::config(format!("thread pool: {e}")))
}

/// Decodes `range` of shots with every decoder in `decoders` on the same syndromes.
fn run_batch(
    config: &ExperimentConfig,
    point: &Point,
    decoders: &[Option<PointDecoder>],
    range: (u64, u64),
) -> Result<Vec<Vec<Scored>>, HarnessError> {
    let results: Vec<Result<Vec<Scored>, HarnessError>> = (range.0..range.1)
        .into_par_iter()
        .map(|shot| {
            let seed = point.seed(config.seed, shot);
            let (syndrome, truth) = point.sample(seed);
            decoders.iter().map(|dec| score(point, dec.as_ref(), &syndrome, truth, seed, shot)).collect()
        })
        .collect();
    // first error in shot order, whatever the scheduling
    results.into_iter().collect()
}

/// Per-point tallies for one decoder.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Tally {
    failures: u64,
    /// Failures per logical qubit.
    by_qubit: Vec<u64>,
    digest: u64,
}

impl Tally {
    fn add(&mut self, s: &Scored) {
        if s.residual != 0 {
            self.failures += 1;
        }
        let bits = 64 - s.residual.leading_zeros() as usize;
        if self.by_qubit.len() < bits {
            self.by_qubit.resize(bits, 0);
        }
        for (q, n) in self.by_qubit.iter_mut().enumerate() {
            *n += s.residual >> q & 1;
        }
        self.digest = (self.digest ^ s.digest).wrapping_mul(0x0000_0100_0000_01b3);
    }
}

struct PointRun {
    shots: u64,
    tallies: Vec<Tally>,
    /// Shots failing under every decoder at once.
    joint_failures: u64,
    disagreements: u64,
    seconds: f64,
}

fn run_point(config: &ExperimentConfig, point: &Point, modes: &[WindowMode]) -> Result<PointRun, HarnessError> {
    let start = Instant::now();
    let decoders = modes.iter().map(|&m| point.decoder(config, m)).collect::<Result<Vec<_>, _>>()?;
    let mut run = PointRun {
        shots: 0,
        tallies: vec![Tally::default(); modes.len()],
        joint_failures: 0,
        disagreements: 0,
        seconds: 0.0,
    };
    let workers = pool(config.workers)?;
    for range in batches(config) {
        if point.model.is_none() {
            // noiseless: every shot has an empty syndrome and no logical flip
            run.shots = range.1;
            continue;
        }
        let scored = workers.install(|| run_batch(config, point, &decoders, range))?;
        for shot in &scored {
            for (t, s) in run.tallies.iter_mut().zip(shot) {
                t.add(s);
            }
            if shot.iter().all(|s| s.residual != 0) {
                run.joint_failures += 1;
            }
            if shot.iter().any(|s| s.residual != shot[0].residual) {
                run.disagreements += 1;
            }
        }
        run.shots = range.1;
        if let (None, Some(target)) = (config.shots, config.target_failures) {
            if run.tallies.iter().all(|t| t.failures >= target) {
                break;
            }
        }
    }
    if config.timing {
        run.seconds = start.elapsed().as_secs_f64();
    }
    Ok(run)
}

fn grid(config: &ExperimentConfig) -> Vec<(usize, f64)> {
    let mut points: Vec<(usize, f64)> = config
        .distances
        .iter()
        .flat_map(|&d| config.error_rates.iter().map(move |&p| (d, p)))
        .collect();
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup();
    points
}

/// Runs every `(d, p)` of the config in its window mode.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    config.validate()?;
    let label = config.circuit_label();
    let mut rows = Vec::new();
    for (d, p) in grid(config) {
        let point = Point::build(config, d, p)?;
        let run = run_point(config, &point, &[config.mode])?;
        let failures = run.tallies[0].failures;
        let (p_fail, stderr) = rate(failures, run.shots);
        rows.push(ResultRow {
            circuit: label.clone(),
            d,
            p,
            mode: config.mode,
            shots: run.shots,
            failures,
            p_fail,
            stderr,
            seconds: run.seconds,
        });
    }
    Ok(rows)
}

/// Failure rates of each logical qubit at every grid point, in the config's mode.
pub fn per_qubit_failures(config: &ExperimentConfig) -> Result<Vec<(usize, f64, u64, Vec<u64>)>, HarnessError> {
    config.validate()?;
    grid(config)
        .into_iter()
        .map(|(d, p)| {
            let point = Point::build(config, d, p)?;
            let run = run_point(config, &point, &[config.mode])?;
            Ok((d, p, run.shots, run.tallies[0].by_qubit.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub circuit: String,
    pub d: usize,
    pub p: f64,
    pub mode: WindowMode,
    pub shots: u64,
    pub failures_windowed: u64,
    pub failures_unwindowed: u64,
    pub p_fail_windowed: f64,
    pub p_fail_unwindowed: f64,
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// Shots on which the two decoders leave different logical residuals.
    pub disagreements: u64,
    pub digest_windowed: String,
    pub digest_unwindowed: String,
    pub seconds: f64,
}

/// `w/u` with its delta-method error, using the correlation of paired shots.
fn paired_ratio(w: u64, u: u64, both: u64, n: u64) -> (f64, f64) {
    if w == u && (w == 0 || both == w) {
        return (1.0, 0.0);
    }
    if u == 0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let n = n as f64;
    let (pw, pu, pb) = (w as f64 / n, u as f64 / n, both as f64 / n);
    let r = pw / pu;
    let var_w = pw * (1.0 - pw) / n;
    let var_u = pu * (1.0 - pu) / n;
    let cov = (pb - pw * pu) / n;
    let rel = var_w / (pw * pw).max(f64::MIN_POSITIVE) + var_u / (pu * pu) - 2.0 * cov / (pw * pu).max(f64::MIN_POSITIVE);
    (r, r * rel.max(0.0).sqrt())
}

/// Decodes one syndrome stream both with the config's window mode and without windows.
pub fn compare_windowed(config: &ExperimentConfig) -> Result<Vec<RatioRow>, HarnessError> {
    config.validate()?;
    if config.mode == WindowMode::None {
        return Err(HarnessError::config("compare needs a window mode other than none"));
    }
    let label = config.circuit_label();
    let mut rows = Vec::new();
    for (d, p) in grid(config) {
        let point = Point::build(config, d, p)?;
        let run = run_point(config, &point, &[config.mode, WindowMode::None])?;
        let (w, u) = (&run.tallies[0], &run.tallies[1]);
        let (ratio, ratio_stderr) = paired_ratio(w.failures, u.failures, run.joint_failures, run.shots);
        rows.push(RatioRow {
            circuit: label.clone(),
            d,
            p,
            mode: config.mode,
            shots: run.shots,
            failures_windowed: w.failures,
            failures_unwindowed: u.failures,
            p_fail_windowed: rate(w.failures, run.shots).0,
            p_fail_unwindowed: rate(u.failures, run.shots).0,
            ratio,
            ratio_stderr,
            disagreements: run.disagreements,
            digest_windowed: format!("{:016x}", w.digest),
            digest_unwindowed: format!("{:016x}", u.digest),
            seconds: run.seconds,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

/// Serializes rows. CSV has a header line; JSON is an array.
pub fn render<T: Serialize>(rows: &[T], format: Format) -> Result<String, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::config("no rows to write"));
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| HarnessError::config(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows)?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn emit_results<T: Serialize>(rows: &[T], format: Format, path: &Path) -> Result<(), HarnessError> {
    let text = render(rows, format)?;
    std::fs::write(path, text).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, HarnessError> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

/// Human-readable summary table.
pub fn summary(rows: &[ResultRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(
            s,
            "{} d={} p={:e} {}: {}/{} failures, p_fail = {:.3e} ± {:.1e}",
            r.circuit, r.d, r.p, r.mode, r.failures, r.shots, r.p_fail, r.stderr
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            circuit: "fig6a".into(),
            distances: vec![3],
            error_rates: vec![1e-3],
            shots: Some(10),
            target_failures: None,
            max_shots: default_max_shots(),
            mode: WindowMode::None,
            seed: 1,
            tier: NoiseTier::Phenomenological,
            workers: 1,
            decoder: DecoderKind::Mle,
            timing: false,
        }
    }

    #[test]
    fn validation() {
        assert!(config().validate().is_ok());
        let bad = [
            ExperimentConfig { shots: Some(0), ..config() },
            ExperimentConfig { shots: None, ..config() },
            ExperimentConfig { error_rates: vec![0.5], ..config() },
            ExperimentConfig { distances: vec![4], ..config() },
            ExperimentConfig { workers: 0, ..config() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(HarnessError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn toml_config() {
        let c = ExperimentConfig::from_toml(
            "circuit = \"fig6b\"\nd = [3, 5]\np = [0.001]\ntarget_failures = 100\nmode = \"spatial-ff\"\ntier = \"circuit-level\"\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(c.mode, WindowMode::SpatialFf);
        assert_eq!(c.workers, 1);
        assert_eq!(c.distances, vec![3, 5]);
        assert!(ExperimentConfig::from_toml("circuit = \"fig6a\"\n").is_err());
    }

    #[test]
    fn batch_schedule_covers_the_shots() {
        let c = ExperimentConfig { shots: Some(5000), ..config() };
        let v: Vec<_> = batches(&c).collect();
        assert_eq!(v.first(), Some(&(0, 1024)));
        assert_eq!(v.last().unwrap().1, 5000);
        assert!(v.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn paired_ratio_edge_cases() {
        assert_eq!(paired_ratio(0, 0, 0, 10), (1.0, 0.0));
        assert_eq!(paired_ratio(4, 4, 4, 10), (1.0, 0.0));
        assert_eq!(paired_ratio(1, 0, 0, 10).0, f64::INFINITY);
        let (r, e) = paired_ratio(110, 100, 95, 10_000);
        assert!((r - 1.1).abs() < 1e-12 && e > 0.0 && e < 0.1);
    }

    #[test]
    fn empty_rows_are_refused() {
        assert!(render::<ResultRow>(&[], Format::Csv).is_err());
    }
}
