mod common;

use common::{ridge_oracle, rng, states_from, uniform};
use delay_rc::readout::{predict, train, train_with_bias};
use delay_rc::{
    generate_mask, nmse, run_continuous, run_discrete, run_discrete_from, EmulatorConfig, InitialState, Mask,
    MaskFamily, MaskSpec, NonlinearitySpec, ReservoirConfig,
};
use rand::Rng;
use std::f64::consts::PI;

#[test]
fn ridge_matches_normal_equations_on_fifty_instances() {
    let mut r = rng(11);
    for case in 0..50 {
        let n = r.random_range(2..=10);
        let len = r.random_range(n + 2..=100);
        let rows: Vec<Vec<f64>> = (0..len).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let d: Vec<f64> = (0..len).map(|_| r.random_range(-2.0..2.0)).collect();
        let ridge = [1e-3, 1e-1, 1e-5][case % 3];
        let states = states_from(n, rows.concat());
        let got = train(&states, &d, ridge).unwrap();
        let (w, b) = ridge_oracle(&rows, &d, ridge);
        for (x, y) in got.weights.iter().zip(&w) {
            assert!((x - y).abs() < 1e-8, "case {case}: {x} vs {y}");
        }
        assert!((got.bias - b).abs() < 1e-8, "case {case}: bias {} vs {b}", got.bias);
    }
}

#[test]
fn unregularized_fit_is_least_squares_optimal() {
    let mut r = rng(5);
    let (n, len) = (6, 80);
    let rows: Vec<Vec<f64>> = (0..len).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let d: Vec<f64> = (0..len).map(|_| r.random_range(-1.0..1.0)).collect();
    let states = states_from(n, rows.concat());
    let best = train(&states, &d, 0.0).unwrap();
    let base = nmse(&predict(&best, &states).unwrap(), &d).unwrap();
    for _ in 0..200 {
        let mut other = best.clone();
        for w in other.weights.iter_mut() {
            *w += r.random_range(-1e-3..1e-3);
        }
        other.bias += r.random_range(-1e-3..1e-3);
        assert!(nmse(&predict(&other, &states).unwrap(), &d).unwrap() >= base);
    }
}

#[test]
fn without_bias_matches_plain_normal_equations() {
    let mut r = rng(8);
    let (n, len) = (4, 40);
    let rows: Vec<Vec<f64>> = (0..len).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let d: Vec<f64> = (0..len).map(|_| r.random_range(-1.0..1.0)).collect();
    let ridge = 1e-2;
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for (x, t) in rows.iter().zip(&d) {
        for i in 0..n {
            for j in 0..n {
                a[i][j] += x[i] * x[j];
            }
            b[i] += x[i] * t;
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += ridge;
    }
    let w = common::solve_dense(a, b);
    let got = train_with_bias(&states_from(n, rows.concat()), &d, ridge, false).unwrap();
    assert_eq!(got.bias, 0.0);
    for (x, y) in got.weights.iter().zip(&w) {
        assert!((x - y).abs() < 1e-10);
    }
}

fn random_config(r: &mut impl Rng) -> (ReservoirConfig, MaskSpec, Vec<f64>) {
    let n = r.random_range(2..=20);
    let k = r.random_range(1..n);
    let len = r.random_range(20..=200);
    let mut cfg = ReservoirConfig::new(n, k, r.random_range(0.0..1.2), r.random_range(0.0..2.0))
        .with_washout(r.random_range(0..len / 2))
        .with_nonlinearity(NonlinearitySpec::sine(r.random_range(-1.0..1.0)));
    if r.random_bool(0.5) {
        cfg.state_noise_std = 0.05;
    }
    let family = if r.random_bool(0.5) { MaskFamily::RandomUniform } else { MaskFamily::RandomBinary };
    let spec = MaskSpec {
        family,
        ..MaskSpec::random_uniform(n, r.random())
    };
    let input = (0..len).map(|_| r.random_range(-1.0..1.0)).collect();
    (cfg, spec, input)
}

#[test]
fn emulator_without_oversampling_reproduces_discrete_model() {
    let mut r = rng(3);
    for case in 0..20 {
        let (cfg, spec, input) = random_config(&mut r);
        let mask = generate_mask(&spec).unwrap();
        let seed = r.random();
        let a = run_discrete(&cfg, &mask, &input, seed).unwrap();
        let b = run_continuous(&EmulatorConfig::new(cfg.clone(), 1), &spec, &input, seed).unwrap();
        assert_eq!(a.input_len(), b.input_len());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-300), "case {case}: {x} vs {y}");
        }
    }
}

#[test]
fn feedback_free_emulator_is_window_average() {
    let (n, os, f1, f2, beta, phase) = (10, 8, 3, 5, 1.3, 0.2);
    let spec = MaskSpec::two_sine(n, f1, f2);
    let cfg = ReservoirConfig::new(n, 4, 0.0, beta)
        .with_washout(0)
        .with_nonlinearity(NonlinearitySpec::sine(phase));
    let input = uniform(6, -1.0, 1.0, 21);
    let emu = EmulatorConfig { oversampling: os, t_prime: 2.5, base: cfg };
    let states = run_continuous(&emu, &spec, &input, 0).unwrap();
    let (tp, theta) = (emu.t_prime, emu.t_prime / n as f64);
    let m = |t: f64| (2.0 * PI * t * f1 as f64 / tp).sin() + (2.0 * PI * t * f2 as f64 / tp).sin();
    for (step, &u) in input.iter().enumerate() {
        for i in 1..=n {
            let start = (i - 1) as f64 * theta;
            let g = |t: f64| (beta * m(t) * u + phase).sin();
            // left-point average over the grid inside the window
            let sampled: f64 = (0..os).map(|s| g(start + s as f64 * theta / os as f64)).sum::<f64>() / os as f64;
            let x = states.get(i, step);
            assert!((x - sampled).abs() < 1e-12, "node {i} step {step}: {x} vs {sampled}");
            // and within the left-Riemann error bound of the exact window integral
            let fine = 4000;
            let h = theta / fine as f64;
            let integral: f64 = (0..fine)
                .map(|s| {
                    let t = start + (s as f64 + 0.5) * h;
                    g(t)
                })
                .sum::<f64>()
                / fine as f64;
            let slope = beta * u.abs() * 2.0 * PI * (f1 + f2) as f64 / tp;
            let bound = 0.5 * theta / os as f64 * slope + 1e-9;
            assert!((x - integral).abs() <= bound, "node {i}: {x} vs {integral}, bound {bound}");
        }
    }
}

#[test]
fn first_k_nodes_read_two_steps_back() {
    let (n, k) = (9, 4);
    let cfg = ReservoirConfig::new(n, k, 0.8, 0.7).with_washout(0);
    let mask = generate_mask(&MaskSpec::random_uniform(n, 2)).unwrap();
    let input = uniform(30, -1.0, 1.0, 4);
    let full = run_discrete(&cfg, &mask, &input, 0).unwrap();
    for step in 2..input.len() {
        let init = InitialState {
            current: full.step(step - 1).to_vec(),
            previous: full.step(step - 2).to_vec(),
        };
        let replay = run_discrete_from(&cfg, &mask, &input[step..=step], 0, &init).unwrap();
        assert_eq!(replay.step(0), full.step(step));
        for i in 1..=k {
            let source = i + n - k;
            for j in 1..=n {
                for (which, delta) in [("previous", 0.3), ("current", 0.3)] {
                    let mut p = init.clone();
                    let v = if which == "previous" { &mut p.previous } else { &mut p.current };
                    v[j - 1] += delta;
                    let x = run_discrete_from(&cfg, &mask, &input[step..=step], 0, &p).unwrap().get(i, 0);
                    let moved = x != full.get(i, step);
                    assert_eq!(moved, which == "previous" && j == source, "node {i} step {step} perturb {which}[{j}]");
                }
            }
        }
        for i in k + 1..=n {
            for j in 1..=n {
                let mut p = init.clone();
                p.current[j - 1] += 0.3;
                let moved = run_discrete_from(&cfg, &mask, &input[step..=step], 0, &p).unwrap().get(i, 0) != full.get(i, step);
                assert_eq!(moved, j == i - k, "node {i} step {step} perturb current[{j}]");
            }
        }
    }
}

#[test]
fn three_node_ring_by_hand() {
    // N=3, k=1, alpha=0.5, beta=1, mask (1, -1, 0.5), u = (0.2, 0.4)
    let cfg = ReservoirConfig::new(3, 1, 0.5, 1.0).with_washout(0);
    let mask = Mask::from_coefficients(vec![1.0, -1.0, 0.5]).unwrap();
    let s = run_discrete(&cfg, &mask, &[0.2, 0.4], 0).unwrap();
    let x1_1 = (0.2f64).sin();
    let x2_1 = (-0.2f64).sin();
    let x3_1 = (0.1f64).sin();
    let x1_2 = (0.5 * 0.0 + 0.4f64).sin();
    let x2_2 = (0.5 * x1_1 - 0.4).sin();
    let x3_2 = (0.5 * x2_1 + 0.2).sin();
    let expected = [[x1_1, x2_1, x3_1], [x1_2, x2_2, x3_2]];
    for (n, row) in expected.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            assert!((s.get(i + 1, n) - v).abs() < 1e-15, "x_{}({})", i + 1, n + 1);
        }
    }
}
