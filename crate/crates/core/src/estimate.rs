//! Time and space estimates for lookup additions on a slow-clock, fast-gate
//! platform (trapped ions) against a superconducting baseline.
//!
//! γ is the ratio of QEC round times and η the ratio of reaction times. With
//! transversal gates the multi-target CNOT of a lookup takes one round instead
//! of `d`, so the lookup phase costs `14 ms · γ / d`; the addition phase is
//! reaction-limited and costs `22 ms · η`. Durations are exact rationals and
//! only rounded for display.

use std::fmt;

use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("code distance must be positive, got {0}")]
    BadDistance(i64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{0} is not representable as a rational")]
    NotRational(f64),
    #[error("physical error rate {p} must lie below the threshold {p_th}")]
    AboveThreshold { p: f64, p_th: f64 },
    #[error("target distance {to} must be odd and below {from}")]
    BadReduction { from: i64, to: i64 },
    #[error("cat state over {0} qubits")]
    EmptyCat(u64),
}

pub fn rational(value: f64) -> Result<Rational64, EstimateError> {
    Rational64::approximate_float(value).ok_or(EstimateError::NotRational(value))
}

fn float(value: Rational64) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformParams {
    pub gamma: Rational64,
    pub eta: Rational64,
    pub d: i64,
    pub p: f64,
    pub p_th: f64,
    pub base_lookup_ms: Rational64,
    pub base_addition_ms: Rational64,
    /// Superconducting QEC round time.
    pub sc_round_us: Rational64,
}

impl PlatformParams {
    pub fn new(gamma: f64, eta: f64, d: i64) -> Result<Self, EstimateError> {
        let params = PlatformParams { gamma: rational(gamma)?, eta: rational(eta)?, d, ..Self::default() };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        if self.d <= 0 {
            return Err(EstimateError::BadDistance(self.d));
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("base lookup time", self.base_lookup_ms),
            ("base addition time", self.base_addition_ms),
            ("round time", self.sc_round_us),
        ] {
            if v <= Rational64::zero() {
                return Err(EstimateError::NonPositive { name, value: float(v) });
            }
        }
        for (name, value) in [("p", self.p), ("p_th", self.p_th)] {
            if !(value > 0.0) {
                return Err(EstimateError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// Notes on parameters outside the studied regime. They do not stop a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (g, e) = (float(self.gamma), float(self.eta));
        if !(100.0..=1000.0).contains(&g) {
            out.push(format!("gamma = {g} outside [100, 1000]"));
        }
        if !(2.0..=20.0).contains(&e) {
            out.push(format!("eta = {e} outside [2, 20]"));
        }
        if self.gamma != self.eta * 50 {
            out.push(format!("gamma/eta = {} differs from 50", float(self.gamma / self.eta)));
        }
        out
    }
}

impl Default for PlatformParams {
    fn default() -> Self {
        PlatformParams {
            gamma: Rational64::from_integer(100),
            eta: Rational64::from_integer(2),
            d: 27,
            p: 1e-3,
            p_th: 1e-2,
            base_lookup_ms: Rational64::from_integer(14),
            base_addition_ms: Rational64::from_integer(22),
            sc_round_us: Rational64::from_integer(1),
        }
    }
}

/// Lookup phase in ms: `base · γ / d`.
pub fn lookup_time(params: &PlatformParams) -> Result<Rational64, EstimateError> {
    params.validate()?;
    Ok(params.base_lookup_ms * params.gamma / params.d)
}

/// Addition phase in ms: `base · η`.
pub fn addition_time(params: &PlatformParams) -> Result<Rational64, EstimateError> {
    params.validate()?;
    Ok(params.base_addition_ms * params.eta)
}

/// Lookup addition time relative to the superconducting baseline.
pub fn total_ratio(params: &PlatformParams) -> Result<Rational64, EstimateError> {
    Ok((lookup_time(params)? + addition_time(params)?) / (params.base_lookup_ms + params.base_addition_ms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Platform {
    Ion,
    Superconducting,
}

/// QEC rounds spent in one lookup addition.
pub fn qec_rounds(params: &PlatformParams, platform: Platform) -> Result<Rational64, EstimateError> {
    params.validate()?;
    let us_per_ms = 1000;
    Ok(match platform {
        Platform::Ion => {
            let round_us = params.sc_round_us * params.gamma;
            (lookup_time(params)? + addition_time(params)?) * us_per_ms / round_us
        }
        Platform::Superconducting => {
            (params.base_lookup_ms + params.base_addition_ms) * us_per_ms / params.sc_round_us
        }
    })
}

/// Fewer rounds means proportionally less accumulated logical error.
pub fn error_rate_reduction(params: &PlatformParams) -> Result<Rational64, EstimateError> {
    Ok(qec_rounds(params, Platform::Superconducting)? / qec_rounds(params, Platform::Ion)?)
}

/// `(p/p_th)^((d+1)/2)`, meaningful only in ratios.
pub fn logical_error_per_round(d: i64, p: f64, p_th: f64) -> Result<f64, EstimateError> {
    if d <= 0 {
        return Err(EstimateError::BadDistance(d));
    }
    if p > p_th {
        return Err(EstimateError::AboveThreshold { p, p_th });
    }
    Ok((p / p_th).powf((d + 1) as f64 / 2.0))
}

/// Physical qubits of a rotated patch.
pub fn patch_qubits(d: i64) -> i64 {
    2 * d * d - 1
}

/// Fraction of physical qubits saved by shrinking patches from `from` to `to`.
pub fn space_reduction(from: i64, to: i64) -> Result<Rational64, EstimateError> {
    if to > from || to <= 0 || from % 2 == 0 || to % 2 == 0 {
        return Err(EstimateError::BadReduction { from, to });
    }
    Ok(Rational64::one() - Rational64::new(patch_qubits(to), patch_qubits(from)))
}

/// The same saving counting `d²` qubits per patch.
pub fn space_reduction_square(from: i64, to: i64) -> Result<Rational64, EstimateError> {
    space_reduction(from, to)?;
    Ok(Rational64::one() - Rational64::new(to * to, from * from))
}

/// Smallest odd distance, starting from `d`, whose per-round error growth is
/// still paid for by the reduction in rounds.
pub fn reduced_distance(params: &PlatformParams) -> Result<i64, EstimateError> {
    let saving = float(error_rate_reduction(params)?);
    let base = logical_error_per_round(params.d, params.p, params.p_th)?;
    let mut d = params.d;
    while d > 1 {
        let next = d - 2;
        if logical_error_per_round(next, params.p, params.p_th)? / base > saving {
            break;
        }
        d = next;
    }
    Ok(d)
}

/// Magic-state factory accounting. Only the intermediate terms are
/// well-defined; how they combine into a single ratio is a modelling choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactoryModel {
    /// Logical qubits of two-level CCZ distillation on the baseline.
    pub distillation_logical: f64,
    /// Logical qubits converting CCZ to auto-CCZ on the baseline.
    pub conversion_logical: f64,
    pub distillation_reduction: f64,
    /// Conversion speed-up; the code distance when unset.
    pub conversion_reduction: Option<f64>,
    /// Multiply the factory footprint by γ/η to match generation and consumption rates.
    pub rate_matching: bool,
    pub computational_logical: f64,
    /// Computational patch distance after the error-rate trade; `d` when unset.
    pub reduced_distance: Option<i64>,
}

impl Default for FactoryModel {
    fn default() -> Self {
        FactoryModel {
            distillation_logical: 16.0 * 113.0,
            conversion_logical: 6.0 * 113.0,
            distillation_reduction: 5.0,
            conversion_reduction: None,
            rate_matching: true,
            computational_logical: 6200.0,
            reduced_distance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactoryBreakdown {
    pub distillation_logical: f64,
    pub conversion_logical: f64,
    pub rate_factor: f64,
    pub factory_logical: f64,
    pub baseline_factory_logical: f64,
    /// Ion factory footprint over the baseline factory footprint.
    pub factory_ratio: f64,
    pub computational_distance: i64,
    /// Computational plus factory physical qubits, ion over baseline.
    pub total_ratio: f64,
}

/// Composes the factory and computational footprints. Every patch counts
/// `2d² − 1` physical qubits at code distance `d`; factories keep the
/// baseline distance.
pub fn factory_space_model(params: &PlatformParams, model: &FactoryModel) -> Result<FactoryBreakdown, EstimateError> {
    params.validate()?;
    for (name, v) in [
        ("distillation reduction", model.distillation_reduction),
        ("conversion reduction", model.conversion_reduction.unwrap_or(1.0)),
    ] {
        if !(v > 0.0) {
            return Err(EstimateError::NonPositive { name, value: v });
        }
    }
    let conversion_reduction = model.conversion_reduction.unwrap_or(params.d as f64);
    let d_comp = model.reduced_distance.unwrap_or(params.d);
    if d_comp <= 0 {
        return Err(EstimateError::BadDistance(d_comp));
    }
    let distillation = model.distillation_logical / model.distillation_reduction;
    let conversion = model.conversion_logical / conversion_reduction;
    let rate_factor = if model.rate_matching { float(params.gamma / params.eta) } else { 1.0 };
    let factory_logical = (distillation + conversion) * rate_factor;
    let baseline_factory_logical = model.distillation_logical + model.conversion_logical;
    let patch = |d: i64| patch_qubits(d) as f64;
    let baseline = (model.computational_logical + baseline_factory_logical) * patch(params.d);
    let ion = model.computational_logical * patch(d_comp) + factory_logical * patch(params.d);
    Ok(FactoryBreakdown {
        distillation_logical: distillation,
        conversion_logical: conversion,
        rate_factor,
        factory_logical,
        baseline_factory_logical,
        factory_ratio: factory_logical / baseline_factory_logical,
        computational_distance: d_comp,
        total_ratio: ion / baseline,
    })
}

/// CNOT layers to prepare an `n`-qubit cat state by doubling.
pub fn cat_state_depth(n: u64) -> Result<u32, EstimateError> {
    if n == 0 {
        return Err(EstimateError::EmptyCat(n));
    }
    Ok(u64::BITS - (n - 1).leading_zeros())
}

/// Everything the `estimate` command prints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub gamma: f64,
    pub eta: f64,
    pub d: i64,
    pub lookup_ms: f64,
    pub addition_ms: f64,
    pub total_ratio: f64,
    pub ion_rounds: f64,
    pub superconducting_rounds: f64,
    pub error_rate_reduction: f64,
    pub reduced_distance: i64,
    pub per_round_error_ratio: f64,
    pub space_reduction: f64,
    pub factory: FactoryBreakdown,
    pub warnings: Vec<String>,
}

pub fn report(params: &PlatformParams, model: &FactoryModel) -> Result<Report, EstimateError> {
    let d_to = reduced_distance(params)?;
    let model = FactoryModel { reduced_distance: model.reduced_distance.or(Some(d_to)), ..model.clone() };
    let per_round = logical_error_per_round(d_to, params.p, params.p_th)? / logical_error_per_round(params.d, params.p, params.p_th)?;
    let space = if params.d % 2 == 1 { float(space_reduction(params.d, d_to)?) } else { 0.0 };
    Ok(Report {
        gamma: float(params.gamma),
        eta: float(params.eta),
        d: params.d,
        lookup_ms: float(lookup_time(params)?),
        addition_ms: float(addition_time(params)?),
        total_ratio: float(total_ratio(params)?),
        ion_rounds: float(qec_rounds(params, Platform::Ion)?),
        superconducting_rounds: float(qec_rounds(params, Platform::Superconducting)?),
        error_rate_reduction: float(error_rate_reduction(params)?),
        reduced_distance: d_to,
        per_round_error_ratio: per_round,
        space_reduction: space,
        factory: factory_space_model(params, &model)?,
        warnings: params.warnings(),
    })
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gamma                   {}", self.gamma)?;
        writeln!(f, "eta                     {}", self.eta)?;
        writeln!(f, "code distance           {}", self.d)?;
        writeln!(f, "lookup time             {:.1} ms", self.lookup_ms)?;
        writeln!(f, "addition time           {:.1} ms", self.addition_ms)?;
        writeln!(f, "time ratio              {:.1}", self.total_ratio)?;
        writeln!(f, "ion QEC rounds          {:.0}", self.ion_rounds)?;
        writeln!(f, "superconducting rounds  {:.0}", self.superconducting_rounds)?;
        writeln!(f, "error-rate reduction    {:.1}x", self.error_rate_reduction)?;
        writeln!(f, "reduced distance        {}", self.reduced_distance)?;
        writeln!(f, "per-round error ratio   {:.1}x", self.per_round_error_ratio)?;
        writeln!(f, "space reduction         {:.1}%", 100.0 * self.space_reduction)?;
        let fb = &self.factory;
        writeln!(f, "distillation (logical)  {:.2}", fb.distillation_logical)?;
        writeln!(f, "conversion (logical)    {:.2}", fb.conversion_logical)?;
        writeln!(f, "rate factor             {}", fb.rate_factor)?;
        writeln!(f, "factory ratio           {:.4}", fb.factory_ratio)?;
        writeln!(f, "space ratio             {:.4} (depends on accounting)", fb.total_ratio)?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: i64, eta: i64) -> PlatformParams {
        PlatformParams { gamma: gamma.into(), eta: eta.into(), ..PlatformParams::default() }
    }

    #[test]
    fn identity_cases() {
        assert_eq!(lookup_time(&params(27, 1)).unwrap(), Rational64::from_integer(14));
        assert_eq!(addition_time(&params(27, 1)).unwrap(), Rational64::from_integer(22));
        assert_eq!(total_ratio(&params(27, 1)).unwrap(), Rational64::from_integer(1));
        assert_eq!(space_reduction(9, 9).unwrap(), Rational64::zero());
        assert_eq!(logical_error_per_round(5, 0.01, 0.01).unwrap(), 1.0);
    }

    #[test]
    fn ion_rounds_for_36000_give_no_reduction() {
        // 14000/d + 22000 η/γ = 36000 with d = 1, η = γ
        let p = PlatformParams { d: 1, ..params(10, 10) };
        assert_eq!(qec_rounds(&p, Platform::Ion).unwrap(), Rational64::from_integer(36000));
        assert_eq!(error_rate_reduction(&p).unwrap(), Rational64::from_integer(1));
    }

    #[test]
    fn large_distance_leaves_the_addition_term() {
        let p = PlatformParams { d: 1_000_000_000, ..params(100, 2) };
        let rounds = float(qec_rounds(&p, Platform::Ion).unwrap());
        assert!((rounds - 440.0).abs() < 1e-3);
    }

    #[test]
    fn cat_depths() {
        assert_eq!(cat_state_depth(1).unwrap(), 0);
        assert_eq!(cat_state_depth(2).unwrap(), 1);
        assert_eq!(cat_state_depth(8).unwrap(), 3);
        assert_eq!(cat_state_depth(9).unwrap(), 4);
        assert!(cat_state_depth(0).is_err());
    }

    #[test]
    fn no_op_factory_model() {
        let model = FactoryModel {
            distillation_reduction: 1.0,
            conversion_reduction: Some(1.0),
            rate_matching: true,
            reduced_distance: Some(27),
            ..FactoryModel::default()
        };
        let b = factory_space_model(&params(7, 7), &model).unwrap();
        assert!((b.factory_ratio - 1.0).abs() < 1e-12);
        assert!((b.total_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warnings_outside_the_regime() {
        assert!(params(100, 2).warnings().is_empty());
        assert_eq!(params(50, 2).warnings().len(), 2);
        assert!(PlatformParams { d: 0, ..params(100, 2) }.validate().is_err());
    }

    #[test]
    fn bad_reductions() {
        assert!(space_reduction(25, 27).is_err());
        assert!(space_reduction(27, 24).is_err());
        assert!(logical_error_per_round(3, 0.1, 0.01).is_err());
    }
}
