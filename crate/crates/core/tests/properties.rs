mod common;

use common::uniform;
use delay_rc::readout::quantize_symbol;
use delay_rc::{
    continuous_mask_value, fading_memory_probe, generate_mask, mask_degeneracy_report, nmse, run_discrete, ser,
    InitialState, MaskFamily, MaskSpec, NonlinearitySpec, ReservoirConfig,
};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = MaskFamily> {
    prop_oneof![
        Just(MaskFamily::RandomUniform),
        Just(MaskFamily::RandomBinary),
        Just(MaskFamily::SingleSine),
        Just(MaskFamily::TwoSine),
    ]
}

fn mask_spec() -> impl Strategy<Value = MaskSpec> {
    (family(), 2usize..60, any::<u64>())
        .prop_flat_map(|(family, n, seed)| (Just(family), Just(n), 1..=n, 1..=n, Just(seed)))
        .prop_filter("two_sine needs distinct frequencies", |(family, _, f1, f2, _)| {
            *family != MaskFamily::TwoSine || f1 != f2
        })
        .prop_map(|(family, n_nodes, f1, f2, seed)| MaskSpec { family, n_nodes, f1, f2, seed })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masks_are_periodic(spec in mask_spec(), t in -5.0f64..5.0, tp in 0.1f64..10.0) {
        let a = continuous_mask_value(&spec, t * tp, tp).unwrap();
        let b = continuous_mask_value(&spec, t * tp + tp, tp).unwrap();
        // a step boundary may fall between the two evaluations by one ulp
        let slot = (t.rem_euclid(1.0) * spec.n_nodes as f64).fract();
        let on_edge = !spec.family.is_harmonic() && !(1e-9..=1.0 - 1e-9).contains(&slot);
        prop_assert!((a - b).abs() < 1e-12 || on_edge, "{} vs {}", a, b);
    }

    #[test]
    fn harmonic_masks_agree_with_their_samples(spec in mask_spec(), tp in 0.1f64..10.0) {
        prop_assume!(spec.family.is_harmonic());
        let mask = generate_mask(&spec).unwrap();
        let theta = tp / spec.n_nodes as f64;
        for i in 1..=spec.n_nodes {
            let c = continuous_mask_value(&spec, i as f64 * theta, tp).unwrap();
            prop_assert!((c - mask.m(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn masks_are_deterministic_and_in_range(spec in mask_spec()) {
        let a = generate_mask(&spec).unwrap();
        let b = generate_mask(&spec).unwrap();
        prop_assert_eq!(a.coefficients(), b.coefficients());
        let bound = match spec.family { MaskFamily::TwoSine => 2.0, _ => 1.0 };
        prop_assert!(a.coefficients().iter().all(|c| c.abs() <= bound));
        if spec.family == MaskFamily::RandomBinary {
            prop_assert!(a.coefficients().iter().all(|c| c.abs() == 1.0));
        }
    }

    #[test]
    fn coprime_two_sine_masks_have_distinct_coefficients(n in 3usize..80, f1 in 1usize..80, f2 in 1usize..80) {
        prop_assume!(f1 <= n && f2 <= n && f1 != f2);
        prop_assume!(gcd(f1, n) == 1 && gcd(f2, n) == 1);
        prop_assume!((f1 + f2) % n != 0);
        // for composite N the sum and difference must be coprime as well
        let prime = (2..n).all(|d| n % d != 0);
        prop_assume!(prime || (gcd(f1 + f2, n) == 1 && gcd(f1.abs_diff(f2), n) == 1));
        let mask = generate_mask(&MaskSpec::two_sine(n, f1, f2)).unwrap();
        let report = mask_degeneracy_report(&mask);
        prop_assert!(!report.has_duplicates(), "{:?}", report.duplicates);
    }

    #[test]
    fn sine_states_stay_bounded(
        alpha in 0.0f64..5.0, beta in 0.0f64..20.0, phase in -3.0f64..3.0,
        k in 1usize..20, seed in any::<u64>(), noise in 0.0f64..1.0,
    ) {
        let mut cfg = ReservoirConfig::new(20, k, alpha, beta)
            .with_washout(10)
            .with_nonlinearity(NonlinearitySpec::sine(phase));
        cfg.state_noise_std = noise;
        let mask = generate_mask(&MaskSpec::two_sine(20, 3, 7)).unwrap();
        let input = uniform(120, -50.0, 50.0, seed);
        let s = run_discrete(&cfg, &mask, &input, seed).unwrap();
        prop_assert!(s.as_slice().iter().all(|x| x.is_finite() && x.abs() <= 1.0));
    }

    #[test]
    fn reservoir_runs_are_deterministic(seed in any::<u64>(), noise in 0.0f64..0.2) {
        let mut cfg = ReservoirConfig::new(13, 5, 0.9, 0.8).with_washout(20);
        cfg.state_noise_std = noise;
        let mask = generate_mask(&MaskSpec::random_uniform(13, seed)).unwrap();
        let input = uniform(100, -1.0, 1.0, seed);
        let a = run_discrete(&cfg, &mask, &input, seed).unwrap();
        let b = run_discrete(&cfg, &mask, &input, seed).unwrap();
        prop_assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn nmse_ignores_common_offsets(
        d in prop::collection::vec(-10.0f64..10.0, 3..50), noise_seed in any::<u64>(), c in -100.0f64..100.0,
    ) {
        let var = {
            let m = d.iter().sum::<f64>() / d.len() as f64;
            d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / d.len() as f64
        };
        prop_assume!(var > 1e-6);
        let y: Vec<f64> = d.iter().zip(uniform(d.len(), -1.0, 1.0, noise_seed)).map(|(a, e)| a + e).collect();
        let base = nmse(&y, &d).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v + c).collect();
        let ds: Vec<f64> = d.iter().map(|v| v + c).collect();
        prop_assert!((nmse(&ys, &ds).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn ser_ignores_sub_threshold_perturbations(
        y in prop::collection::vec(-6.0f64..6.0, 1..60), seed in any::<u64>(),
    ) {
        let d: Vec<f64> = y.iter().map(|v| quantize_symbol(*v)).collect();
        let eps = uniform(y.len(), -1.0, 1.0, seed);
        let moved: Vec<f64> = y.iter().zip(&eps).map(|(v, e)| {
            let gap = [-2.0f64, 0.0, 2.0].iter().map(|t| (v - t).abs()).fold(f64::INFINITY, f64::min);
            v + 0.999 * gap * e
        }).collect();
        prop_assert_eq!(ser(&y, &d).unwrap(), ser(&moved, &d).unwrap());
    }

    #[test]
    fn memory_fades_for_contracting_gains(
        alpha in 0.0f64..=0.95, beta in 0.5f64..5.0, k in 1usize..53, seed in any::<u64>(),
    ) {
        let cfg = ReservoirConfig::new(53, k, alpha, beta);
        let mask = generate_mask(&MaskSpec::two_sine(53, 3, 5)).unwrap();
        let input = uniform(200, -1.0, 1.0, seed);
        let other = InitialState {
            current: uniform(53, -1.0, 1.0, seed ^ 1),
            previous: uniform(53, -1.0, 1.0, seed ^ 2),
        };
        let delta = fading_memory_probe(&cfg, &mask, &input, &InitialState::zeros(53), &other).unwrap();
        prop_assert!(delta[199] < 1e-6, "delta(200) = {}", delta[199]);
    }
}

#[test]
fn probe_without_feedback_or_difference_is_zero() {
    let mask = generate_mask(&MaskSpec::two_sine(11, 2, 5)).unwrap();
    let input = uniform(50, -1.0, 1.0, 1);
    let other = InitialState {
        current: uniform(11, -1.0, 1.0, 2),
        previous: uniform(11, -1.0, 1.0, 3),
    };
    let zero = InitialState::zeros(11);
    let cfg = ReservoirConfig::new(11, 4, 0.0, 1.0);
    assert!(fading_memory_probe(&cfg, &mask, &input, &zero, &other).unwrap().iter().all(|&d| d == 0.0));
    let cfg = ReservoirConfig::new(11, 4, 0.9, 1.0);
    assert!(fading_memory_probe(&cfg, &mask, &input, &other, &other).unwrap().iter().all(|&d| d == 0.0));
}

#[test]
fn probe_at_point_nine_settles_within_a_hundred_steps() {
    let mask = generate_mask(&MaskSpec::two_sine(53, 3, 5)).unwrap();
    let input = uniform(100, -1.0, 1.0, 7);
    let other = InitialState {
        current: uniform(53, -1.0, 1.0, 8),
        previous: uniform(53, -1.0, 1.0, 9),
    };
    let cfg = ReservoirConfig::new(53, 18, 0.9, 1.0);
    let delta = fading_memory_probe(&cfg, &mask, &input, &InitialState::zeros(53), &other).unwrap();
    assert!(delta[99] < 1e-6, "{}", delta[99]);
}

#[test]
fn coprime_frequencies_alone_do_not_prevent_duplicates_for_composite_n() {
    let mask = generate_mask(&MaskSpec::two_sine(56, 13, 45)).unwrap();
    let report = mask_degeneracy_report(&mask);
    assert_eq!((report.gcd_f1, report.gcd_f2), (Some(1), Some(1)));
    assert_eq!((report.gcd_sum, report.gcd_diff), (Some(2), Some(8)));
    assert!(report.duplicates.contains(&(1, 27)));
    assert!(!report.coprime());
}

#[test]
fn every_coprime_pair_is_distinct_for_fifty_three_nodes() {
    for f1 in 1..=53 {
        for f2 in 1..=53 {
            if f1 == f2 || f1 + f2 == 53 || f1 == 53 || f2 == 53 {
                continue;
            }
            let mask = generate_mask(&MaskSpec::two_sine(53, f1, f2)).unwrap();
            assert!(!mask_degeneracy_report(&mask).has_duplicates(), "({f1}, {f2})");
        }
    }
}
