#![allow(dead_code)]

use cellfree::channel::{self, ChannelModel, ChannelState};
use cellfree::linalg::CMat;
use cellfree::scenario::{NetworkConfig, Scenario};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TAU_C: usize = 200;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn network(aps: usize, antennas_per_ap: usize, users: usize, tau_p: usize) -> NetworkConfig {
    NetworkConfig {
        aps,
        antennas_per_ap,
        users,
        tau_p,
        tau_u: TAU_C - tau_p,
        tau_c: TAU_C,
        ue_power_w: 1.0,
        ..NetworkConfig::default()
    }
}

/// Random Hermitian positive-definite matrix with trace close to `n * scale`.
pub fn random_psd<R: Rng>(n: usize, scale: f64, rng: &mut R) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let mut r = &a * a.adjoint() * Complex64::from(2.0 / n as f64);
    for i in 0..n {
        r[(i, i)] += Complex64::from(0.05);
    }
    r * Complex64::from(scale)
}

/// Scenario with random correlation matrices of per-link strength in `[0.1, 1]`.
pub fn random_scenario<R: Rng>(
    aps: usize,
    antennas_per_ap: usize,
    users: usize,
    tau_p: usize,
    noise: f64,
    rng: &mut R,
) -> Scenario {
    let cfg = network(aps, antennas_per_ap, users, tau_p);
    let correlation = (0..users * aps)
        .map(|_| {
            let scale = 0.1 + 0.9 * rng.random::<f64>();
            random_psd(antennas_per_ap, scale, rng)
        })
        .collect();
    Scenario::from_correlation(&cfg, correlation)
        .unwrap()
        .with_noise_power(noise)
}

pub fn random_state<R: Rng>(
    aps: usize,
    antennas_per_ap: usize,
    users: usize,
    tau_p: usize,
    noise: f64,
    rng: &mut R,
) -> ChannelState {
    let scn = random_scenario(aps, antennas_per_ap, users, tau_p, noise, rng);
    channel::realize_block(&scn, rng).unwrap()
}

pub fn model(scn: &Scenario) -> ChannelModel {
    ChannelModel::new(scn).unwrap()
}

/// Sample covariance `E[x x^H]` of zero-mean columns.
pub fn sample_covariance(samples: &[nalgebra::DVector<Complex64>]) -> CMat {
    let n = samples[0].len();
    let mut acc = CMat::zeros(n, n);
    for s in samples {
        acc += s * s.adjoint();
    }
    acc / Complex64::from(samples.len() as f64)
}

pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn real_matrix(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, f)
}
