//! Max-min fair power control by bisection over the common SINR target.
//!
//! Each bisection step asks whether every user can reach `gamma_t` with
//! `0 <= eta <= 1`. The question is answered with the standard interference-function
//! fixed point started at `eta = 0`, whose iterates increase monotonically towards the
//! minimal feasible power vector when one exists.

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::performance::SinrLinearization;

/// Fixed-point iteration cap per feasibility check.
pub const MAX_FIXED_POINT_ITERS: usize = 500;
/// Componentwise change below which the fixed point is considered settled.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Default bisection tolerance on the (linear) SINR.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Power coefficients in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if let Some(bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Parameter(format!(
                "power coefficient {bad} outside [0, 1]"
            )));
        }
        Ok(Self(eta))
    }

    pub fn full(users: usize) -> Self {
        Self(vec![1.0; users])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for PowerVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Smallest `x >= 0` with `x a >= gamma_t (interference + x own - x^2 quad)`, if any.
fn minimal_own_power(a: f64, own: f64, quad: f64, interference: f64, gamma_t: f64) -> Option<f64> {
    let c = gamma_t * interference;
    if c <= 0.0 {
        return Some(0.0);
    }
    if a <= 0.0 {
        return None;
    }
    let b = a - gamma_t * own;
    let qa = gamma_t * quad;
    if qa <= 0.0 {
        return (b > 0.0).then(|| c / b);
    }
    // Positive root of qa x^2 + b x - c, in a cancellation-free form.
    let disc = (b * b + 4.0 * qa * c).sqrt();
    Some(if b >= 0.0 {
        2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * qa)
    })
}

/// One application of the interference map `T(eta)` at target `gamma_t`.
///
/// Returns `None` when some user cannot reach `gamma_t` at any power.
pub fn interference_map(lin: &SinrLinearization, gamma_t: f64, eta: &[f64]) -> Option<Vec<f64>> {
    (0..lin.users())
        .map(|k| {
            minimal_own_power(
                lin.signal[k],
                lin.own(k),
                lin.own_quadratic[k],
                lin.interference(k, eta),
                gamma_t,
            )
        })
        .collect()
}

fn meets_target(lin: &SinrLinearization, gamma_t: f64, eta: &[f64]) -> bool {
    eta.iter().all(|e| (0.0..=1.0).contains(e))
        && lin.sinr(eta).iter().all(|&g| g >= gamma_t * (1.0 - 1e-12))
}

/// Decides whether all users can reach `gamma_t`; returns the minimal power vector if so.
pub fn feasibility_check(lin: &SinrLinearization, gamma_t: f64) -> Option<PowerVector> {
    let users = lin.users();
    if gamma_t <= 0.0 {
        return Some(PowerVector(vec![0.0; users]));
    }
    let mut eta = vec![0.0; users];
    let mut prev_step = vec![0.0; users];
    for _ in 0..MAX_FIXED_POINT_ITERS {
        let next = interference_map(lin, gamma_t, &eta)?;
        if next.iter().any(|&e| e > 1.0) {
            return None;
        }
        let step: Vec<f64> = next.iter().zip(&eta).map(|(n, o)| n - o).collect();
        debug_assert!(
            step.iter()
                .zip(&next)
                .all(|(s, n)| *s >= -1e-12 * n.max(1e-300)),
            "fixed-point iterate decreased"
        );
        eta = next;
        if step.iter().all(|s| s.abs() < FIXED_POINT_TOL) {
            return Some(PowerVector(eta));
        }
        prev_step = step;
    }
    // Not settled: try a geometric extrapolation of the tail and accept it only if it
    // provably meets every constraint.
    let next = interference_map(lin, gamma_t, &eta)?;
    let step: Vec<f64> = next.iter().zip(&eta).map(|(n, o)| n - o).collect();
    let ratio = step
        .iter()
        .zip(&prev_step)
        .filter(|(_, p)| **p > 0.0)
        .map(|(s, p)| s / p)
        .fold(0.0, f64::max);
    if ratio < 1.0 {
        let candidate: Vec<f64> = next
            .iter()
            .zip(&step)
            .map(|(n, s)| (n + s * ratio / (1.0 - ratio)) * (1.0 + 1e-9))
            .collect();
        if meets_target(lin, gamma_t, &candidate) {
            return Some(PowerVector(candidate));
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionStep {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_t: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionTrace {
    pub steps: Vec<BisectionStep>,
    pub eta: Vec<f64>,
    /// Minimum SINR achieved by the returned power vector.
    pub gamma: f64,
}

/// `max_k p_u sum_l ||h_hat_kl||^2 / sigma^2`, an upper bound on any user's SINR.
pub fn sinr_upper_bound(state: &ChannelState, p_u: f64, noise: f64) -> f64 {
    (0..state.users())
        .map(|k| p_u * state.h_hat.column(k).norm_squared() / noise)
        .fold(0.0, f64::max)
}

/// Bisection on the common SINR target between 0 and `gamma_upper`.
///
/// If no midpoint is feasible the optimum lies below `epsilon` and full power is returned.
pub fn maxmin_bisection(
    lin: &SinrLinearization,
    epsilon: f64,
    gamma_upper: f64,
) -> Result<(PowerVector, BisectionTrace)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!(
            "bisection tolerance must be > 0, got {epsilon}"
        )));
    }
    if !(gamma_upper >= 0.0 && gamma_upper.is_finite()) {
        return Err(Error::Parameter(format!(
            "invalid SINR upper bound {gamma_upper}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = gamma_upper;
    let mut best = PowerVector::full(lin.users());
    let mut steps = Vec::new();
    while hi - lo > epsilon {
        let target = 0.5 * (lo + hi);
        let outcome = feasibility_check(lin, target);
        let step = BisectionStep {
            gamma_min: lo,
            gamma_max: hi,
            gamma_t: target,
            feasible: outcome.is_some(),
        };
        log::trace!(
            "bisection {:>3}: [{:.6e}, {:.6e}] target {:.6e} feasible={}",
            steps.len(),
            lo,
            hi,
            target,
            step.feasible
        );
        steps.push(step);
        match outcome {
            Some(eta) => {
                lo = target;
                best = eta;
            }
            None => hi = target,
        }
    }
    let gamma = lin.min_sinr(&best);
    let trace = BisectionTrace {
        steps,
        eta: best.as_slice().to_vec(),
        gamma,
    };
    Ok((best, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn single(a: f64, c: f64, n: f64) -> SinrLinearization {
        SinrLinearization {
            signal: vec![a],
            cross: DMatrix::zeros(1, 1),
            error: DMatrix::from_element(1, 1, c),
            noise: vec![n],
            own_quadratic: vec![0.0],
        }
    }

    #[test]
    fn zero_target_is_trivially_feasible() {
        let eta = feasibility_check(&single(2.0, 0.5, 1.0), 0.0).unwrap();
        assert_eq!(eta.as_slice(), &[0.0]);
    }

    #[test]
    fn scalar_feasibility_threshold() {
        let (a, c, n) = (2.0, 0.5, 1.0);
        let lin = single(a, c, n);
        let limit = a / (c + n);
        for gamma_t in [0.3, 0.9, 1.2, limit * 0.999] {
            let eta = feasibility_check(&lin, gamma_t).unwrap();
            let expected = gamma_t * n / (a - gamma_t * c);
            assert!((eta[0] - expected).abs() < 1e-12);
        }
        assert!(feasibility_check(&lin, limit * 1.001).is_none());
        assert!(feasibility_check(&lin, a / c + 1.0).is_none());
    }

    #[test]
    fn symmetric_pair_gets_equal_powers() {
        let lin = SinrLinearization {
            signal: vec![3.0, 3.0],
            cross: DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.4, 0.0]),
            error: DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.2, 0.1]),
            noise: vec![0.7, 0.7],
            own_quadratic: vec![0.0, 0.0],
        };
        let eta = feasibility_check(&lin, 1.5).unwrap();
        assert!((eta[0] - eta[1]).abs() < 1e-12);
    }

    #[test]
    fn bisection_rejects_bad_tolerance() {
        assert!(maxmin_bisection(&single(1.0, 0.0, 1.0), 0.0, 10.0).is_err());
        assert!(maxmin_bisection(&single(1.0, 0.0, 1.0), -1.0, 10.0).is_err());
    }

    #[test]
    fn single_user_uses_full_power() {
        let (a, c, n) = (2.0, 0.5, 1.0);
        let lin = single(a, c, n);
        let (eta, trace) = maxmin_bisection(&lin, 1e-6, 10.0).unwrap();
        assert!((trace.gamma - a / (c + n)).abs() <= 1e-6);
        assert!(eta[0] > 1.0 - 1e-5);
    }

    #[test]
    fn quadratic_own_term_is_respected() {
        let lin = SinrLinearization {
            signal: vec![4.0],
            cross: DMatrix::from_element(1, 1, 3.0),
            error: DMatrix::from_element(1, 1, 0.5),
            noise: vec![1.0],
            own_quadratic: vec![2.0],
        };
        for gamma_t in [0.2, 0.8, 1.5] {
            if let Some(eta) = feasibility_check(&lin, gamma_t) {
                let g = lin.sinr(&eta)[0];
                assert!((g - gamma_t).abs() < 1e-9 * gamma_t, "{g} vs {gamma_t}");
            }
        }
    }
}
