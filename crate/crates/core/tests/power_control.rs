mod common;

use cellfree::combining::{self, CombinerKind, CombinerParams, Scheme};
use cellfree::performance::{self, linearize_sinr, DistributedForm, SinrLinearization};
use cellfree::powercontrol::{self, feasibility_check, interference_map, maxmin_bisection};
use cellfree::Error;
use common::*;
use nalgebra::DMatrix;
use rand::Rng;

const EPS: f64 = 1e-3;

fn random_lin<R: Rng>(users: usize, rng: &mut R) -> SinrLinearization {
    let mut cross = DMatrix::from_fn(users, users, |_, _| 0.3 * rng.random::<f64>());
    cross.fill_diagonal(0.0);
    SinrLinearization {
        signal: (0..users)
            .map(|_| 0.5 + 1.5 * rng.random::<f64>())
            .collect(),
        cross,
        error: DMatrix::from_fn(users, users, |_, _| 0.1 * rng.random::<f64>()),
        noise: (0..users)
            .map(|_| 0.05 + 0.45 * rng.random::<f64>())
            .collect(),
        own_quadratic: vec![0.0; users],
    }
}

fn symmetric(a: f64, b: f64, c: f64, n: f64) -> SinrLinearization {
    SinrLinearization {
        signal: vec![a, a],
        cross: DMatrix::from_row_slice(2, 2, &[0.0, b, b, 0.0]),
        error: DMatrix::from_element(2, 2, c),
        noise: vec![n, n],
        own_quadratic: vec![0.0; 2],
    }
}

fn upper(lin: &SinrLinearization) -> f64 {
    (0..lin.users())
        .map(|k| lin.signal[k] / lin.noise[k])
        .fold(0.0, f64::max)
}

#[test]
fn bisection_never_loses_to_full_power() {
    let mut rng = rng(51);
    for _ in 0..100 {
        let users = rng.random_range(1..=8);
        let lin = random_lin(users, &mut rng);
        let (eta, trace) = maxmin_bisection(&lin, EPS, upper(&lin)).unwrap();
        assert!(eta.iter().all(|e| (0.0..=1.0).contains(e)));
        let full = lin.min_sinr(&vec![1.0; users]);
        assert!(trace.gamma >= full - EPS, "{} < {full}", trace.gamma);
        assert!((trace.gamma - lin.min_sinr(&eta)).abs() < 1e-15);
    }
}

#[test]
fn bisection_on_channel_linearizations() {
    let mut rng = rng(52);
    for _ in 0..20 {
        let state = random_state(4, 2, 4, 2, 0.5, &mut rng);
        let (p, noise) = (state.stats.ue_power, state.stats.noise_power);
        for scheme in [Scheme::Mr, Scheme::Mmse] {
            let set = combining::build(
                CombinerKind::centralized(scheme),
                &state,
                &CombinerParams::full_power(4),
            )
            .unwrap();
            let lin = linearize_sinr(&set, &state, p, noise).unwrap();
            let bound = powercontrol::sinr_upper_bound(&state, p, noise);
            assert!(lin.sinr(&[1.0; 4]).iter().all(|&g| g <= bound));
            let (_, trace) = maxmin_bisection(&lin, EPS, bound).unwrap();
            assert!(trace.gamma >= lin.min_sinr(&[1.0; 4]) - EPS);
        }
    }
}

#[test]
fn bisection_on_as_printed_distributed_form() {
    let mut rng = rng(53);
    let scn = random_scenario(4, 2, 4, 2, 0.5, &mut rng);
    let mom = performance::estimate_distributed_moments(
        &model(&scn),
        CombinerKind::local(Scheme::Mr),
        &[1.0; 4],
        300,
        3,
    )
    .unwrap();
    let lin = mom.linearize(DistributedForm::AsPrinted, 1.0, 0.5);
    assert!(lin.own_quadratic.iter().all(|&g| g > 0.0));
    let (eta, trace) = maxmin_bisection(&lin, EPS, mom.sinr_upper_bound(1.0, 0.5)).unwrap();
    let full = lin.min_sinr(&[1.0; 4]);
    assert!(trace.gamma >= full - EPS);
    let target = trace
        .steps
        .iter()
        .filter(|s| s.feasible)
        .map(|s| s.gamma_t)
        .fold(0.0, f64::max);
    assert!(lin.sinr(&eta).iter().all(|&g| g >= target * (1.0 - 1e-9)));
}

#[test]
fn trace_halves_and_terminates_on_schedule() {
    let mut rng = rng(54);
    for _ in 0..20 {
        let lin = random_lin(4, &mut rng);
        let gmax = upper(&lin);
        let (_, trace) = maxmin_bisection(&lin, EPS, gmax).unwrap();
        assert_eq!(trace.steps.len(), (gmax / EPS).log2().ceil() as usize);
        for w in trace.steps.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(b.gamma_min >= a.gamma_min && b.gamma_max <= a.gamma_max);
            let ratio = (b.gamma_max - b.gamma_min) / (a.gamma_max - a.gamma_min);
            assert!((ratio - 0.5).abs() < 1e-12);
        }
    }
}

#[test]
fn single_user_gets_full_power() {
    let lin = SinrLinearization {
        signal: vec![3.0],
        cross: DMatrix::zeros(1, 1),
        error: DMatrix::from_element(1, 1, 0.4),
        noise: vec![0.2],
        own_quadratic: vec![0.0],
    };
    let (eta, trace) = maxmin_bisection(&lin, EPS, upper(&lin)).unwrap();
    let opt = 3.0 / 0.6;
    assert!((trace.gamma - opt).abs() <= EPS);
    assert!((eta[0] - 1.0).abs() < 1e-3);
}

#[test]
fn scalar_feasibility_matches_closed_form() {
    let (a, c, n) = (3.0, 0.4, 0.2);
    let lin = SinrLinearization {
        signal: vec![a],
        cross: DMatrix::zeros(1, 1),
        error: DMatrix::from_element(1, 1, c),
        noise: vec![n],
        own_quadratic: vec![0.0],
    };
    for gamma_t in [0.5, 2.0, 4.9] {
        let eta = feasibility_check(&lin, gamma_t).unwrap();
        let want = gamma_t * n / (a - gamma_t * c);
        assert!((eta[0] - want).abs() < 1e-12);
    }
    assert!(feasibility_check(&lin, 5.1).is_none());
    assert_eq!(feasibility_check(&lin, 0.0).unwrap().as_slice(), &[0.0]);
}

#[test]
fn symmetric_pair_matches_closed_form() {
    let (a, b, c, n) = (2.0, 0.3, 0.1, 0.25);
    let lin = symmetric(a, b, c, n);
    let (eta, trace) = maxmin_bisection(&lin, EPS, upper(&lin)).unwrap();
    let opt = a / (b + c + c + n);
    assert!((eta[0] - eta[1]).abs() < 1e-9);
    assert!(trace.gamma <= opt + 1e-12 && trace.gamma >= opt - EPS);
    let feas = feasibility_check(&lin, 0.5 * opt).unwrap();
    assert!((feas[0] - feas[1]).abs() < 1e-12);
}

#[test]
fn grid_search_never_beats_bisection() {
    let mut rng = rng(55);
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    for _ in 0..10 {
        let lin = random_lin(3, &mut rng);
        let (_, trace) = maxmin_bisection(&lin, EPS, upper(&lin)).unwrap();
        let mut best: f64 = 0.0;
        for &x in &grid {
            for &y in &grid {
                for &z in &grid {
                    best = best.max(lin.min_sinr(&[x, y, z]));
                }
            }
        }
        assert!(best <= trace.gamma + EPS, "grid {best} vs {}", trace.gamma);
    }
}

#[test]
fn fixed_point_iterates_increase_monotonically() {
    let mut rng = rng(56);
    for _ in 0..20 {
        let lin = random_lin(5, &mut rng);
        let full = lin.min_sinr(&[1.0; 5]);
        let mut eta = vec![0.0; 5];
        for _ in 0..200 {
            let next = interference_map(&lin, full, &eta).unwrap();
            assert!(next.iter().zip(&eta).all(|(n, o)| *n >= *o));
            eta = next;
        }
        assert!(eta.iter().all(|&e| e <= 1.0 + 1e-12));
    }
}

#[test]
fn infeasible_targets_are_rejected() {
    let lin = symmetric(1.0, 0.5, 0.2, 0.1);
    assert!(feasibility_check(&lin, 10.0).is_none());
    // a_k - gamma C_kk <= 0
    assert!(feasibility_check(&lin, 5.0).is_none());
}

#[test]
fn nonpositive_tolerance_is_rejected() {
    let lin = symmetric(1.0, 0.5, 0.2, 0.1);
    for eps in [0.0, -1.0, f64::NAN] {
        assert!(matches!(
            maxmin_bisection(&lin, eps, 10.0),
            Err(Error::Parameter(_))
        ));
    }
}
