//! Timing and space figures for the ion-trap lookup addition estimate.

use corrwin::estimate::*;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn at(gamma: i64, eta: i64, d: i64) -> PlatformParams {
    PlatformParams { gamma: gamma.into(), eta: eta.into(), d, ..PlatformParams::default() }
}

fn f(r: Rational64) -> f64 {
    r.to_f64().unwrap()
}

#[test]
fn lookup_and_addition_endpoints() {
    assert!((f(lookup_time(&at(100, 2, 27)).unwrap()) - 51.9).abs() < 0.1);
    assert!((f(lookup_time(&at(1000, 20, 27)).unwrap()) - 519.0).abs() < 1.0);
    assert_eq!(addition_time(&at(100, 2, 27)).unwrap(), Rational64::from_integer(44));
    assert_eq!(addition_time(&at(1000, 20, 27)).unwrap(), Rational64::from_integer(440));
    assert_eq!(addition_time(&at(100, 1, 27)).unwrap(), Rational64::from_integer(22));
}

#[test]
fn time_ratio_endpoints() {
    let lo = f(total_ratio(&at(100, 2, 27)).unwrap());
    let hi = f(total_ratio(&at(1000, 20, 27)).unwrap());
    assert!((lo - 2.66).abs() < 0.01 && (lo - 2.7).abs() <= 0.1);
    assert!((hi - 26.6).abs() < 0.1 && (hi - 27.0).abs() <= 0.5);
}

#[test]
fn round_counts_and_reduction() {
    let p = at(100, 2, 27);
    let ion = qec_rounds(&p, Platform::Ion).unwrap();
    // 14000/27 + 440
    assert_eq!(ion, Rational64::new(14000, 27) + 440);
    assert!((f(ion) - 959.0).abs() <= 1.0);
    assert_eq!(qec_rounds(&p, Platform::Superconducting).unwrap(), Rational64::from_integer(36000));
    let r = f(error_rate_reduction(&p).unwrap());
    assert!((r - 37.6).abs() < 0.1 && (r - 37.0).abs() <= 1.0);
    assert_eq!(error_rate_reduction(&at(1000, 20, 27)).unwrap(), error_rate_reduction(&p).unwrap());
}

#[test]
fn distance_trade() {
    let ratio = logical_error_per_round(25, 1e-3, 1e-2).unwrap() / logical_error_per_round(27, 1e-3, 1e-2).unwrap();
    assert!((ratio - 10.0).abs() < 1e-9);
    assert!(ratio < f(error_rate_reduction(&at(100, 2, 27)).unwrap()));
    assert_eq!(reduced_distance(&at(100, 2, 27)).unwrap(), 25);
    let s = f(space_reduction(27, 25).unwrap());
    assert!((100.0 * s - 14.0).abs() <= 0.5 && (100.0 * s - 14.3).abs() < 0.05);
    let sq = f(space_reduction_square(27, 25).unwrap());
    assert!((100.0 * sq - 14.3).abs() < 0.05);
}

#[test]
fn factory_intermediates() {
    let p = at(100, 2, 25);
    let b = factory_space_model(&p, &FactoryModel::default()).unwrap();
    assert!((b.distillation_logical - 16.0 * 113.0 / 5.0).abs() < 1e-9);
    assert!((b.conversion_logical - 6.0 * 113.0 / 25.0).abs() < 1e-9);
    assert_eq!(b.rate_factor, 50.0);
}

#[test]
fn report_prints_every_term() {
    let r = report(&at(100, 2, 27), &FactoryModel::default()).unwrap();
    let text = r.to_string();
    for needle in ["51.9 ms", "44.0 ms", "ion QEC rounds          959", "36000", "37.6x", "14.3%", "space ratio"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    assert!(r.warnings.is_empty());
}

proptest! {
    #[test]
    fn homogeneous_in_gamma_and_eta(g in 1i64..2000, e in 1i64..50, c in 1i64..20, d in 1i64..60) {
        let a = at(g, e, d);
        let b = at(c * g, c * e, d);
        prop_assert_eq!(qec_rounds(&a, Platform::Ion).unwrap(), qec_rounds(&b, Platform::Ion).unwrap());
        prop_assert_eq!(lookup_time(&b).unwrap(), lookup_time(&a).unwrap() * c);
        prop_assert_eq!(addition_time(&b).unwrap(), addition_time(&a).unwrap() * c);
    }

    #[test]
    fn space_reduction_grows_as_the_target_shrinks(from in 2i64..40, a in 0i64..40, b in 0i64..40) {
        let from = 2 * from + 1;
        let (hi, lo) = (2 * a.min(b) + 1, 2 * a.max(b) + 1);
        prop_assume!(lo <= from);
        prop_assert!(space_reduction(from, hi).unwrap() >= space_reduction(from, lo).unwrap());
    }

    #[test]
    fn per_round_error_falls_with_distance(d in 1i64..60, p in 1e-5f64..9e-3) {
        prop_assert!(logical_error_per_round(d + 2, p, 1e-2).unwrap() < logical_error_per_round(d, p, 1e-2).unwrap());
    }
}
