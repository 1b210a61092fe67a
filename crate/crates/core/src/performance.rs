//! SINR and spectral-efficiency evaluation.
//!
//! Centralized combining is scored per realization through a [`SinrLinearization`],
//! which writes the SINR as a ratio linear in the power vector. Distributed combining
//! is scored from realization-averaged [`DistributedMoments`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelState};
use crate::combining::{self, CombinerKind, CombinerParams, CombinerSet, Vectors};
use crate::error::{Error, Result};
use crate::linalg;
use crate::seed;

/// Pre-log factor used when mapping SINR to spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrelogForm {
    /// `1 - tau_p / tau_u`.
    #[default]
    AsPrinted,
    /// `1 - tau_p / tau_c`.
    Conventional,
}

/// Which distributed SINR expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributedForm {
    /// Per-AP second moments and the `eta_k^2` own-signal correction.
    #[default]
    AsPrinted,
    /// Use-and-then-forget bound: second moment of the AP sum minus its squared mean.
    Standard,
}

/// Per-user SINR coefficients:
///
/// ```text
/// gamma_k(eta) = eta_k a_k / (sum_k' eta_k' (B_kk' + C_kk') - eta_k^2 g_k + n_k)
/// ```
///
/// For centralized combining `B_kk = 0` and `g = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrLinearization {
    /// Desired-signal gain `a_k`.
    pub signal: Vec<f64>,
    /// Coherent gains `B`.
    pub cross: DMatrix<f64>,
    /// Estimation-error gains `C`.
    pub error: DMatrix<f64>,
    /// Noise terms `n_k`.
    pub noise: Vec<f64>,
    /// Own-power quadratic correction `g_k` (distributed, as-printed form only).
    pub own_quadratic: Vec<f64>,
}

impl SinrLinearization {
    pub fn users(&self) -> usize {
        self.signal.len()
    }

    /// `sum_{k' != k} eta_k' (B_kk' + C_kk') + n_k`.
    pub fn interference(&self, k: usize, eta: &[f64]) -> f64 {
        let mut acc = self.noise[k];
        for (j, &e) in eta.iter().enumerate() {
            if j != k {
                acc += e * (self.cross[(k, j)] + self.error[(k, j)]);
            }
        }
        acc
    }

    /// Self-interference coefficient `B_kk + C_kk`.
    pub fn own(&self, k: usize) -> f64 {
        self.cross[(k, k)] + self.error[(k, k)]
    }

    pub fn denominator(&self, k: usize, eta: &[f64]) -> f64 {
        self.interference(k, eta) + eta[k] * self.own(k) - eta[k] * eta[k] * self.own_quadratic[k]
    }

    /// SINR of every user at power vector `eta`.
    pub fn sinr(&self, eta: &[f64]) -> Vec<f64> {
        (0..self.users())
            .map(|k| {
                if eta[k] == 0.0 {
                    0.0
                } else {
                    eta[k] * self.signal[k] / self.denominator(k, eta)
                }
            })
            .collect()
    }

    pub fn min_sinr(&self, eta: &[f64]) -> f64 {
        self.sinr(eta).into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Coefficients of the instantaneous centralized SINR for a given combiner set.
pub fn linearize_sinr(
    combiners: &CombinerSet,
    state: &ChannelState,
    p_u: f64,
    noise: f64,
) -> Result<SinrLinearization> {
    let d = combiners.centralized().ok_or_else(|| {
        Error::Parameter(format!("{} is not a centralized combiner", combiners.kind))
    })?;
    let (users, aps, n_a) = (state.users(), state.aps(), state.antennas_per_ap());
    let gains = d.adjoint() * &state.h_hat;
    let mut cross = DMatrix::zeros(users, users);
    let mut error = DMatrix::zeros(users, users);
    let mut signal = Vec::with_capacity(users);
    let mut noise_terms = Vec::with_capacity(users);
    for k in 0..users {
        signal.push(gains[(k, k)].norm_sqr());
        noise_terms.push(noise / p_u * d.column(k).norm_squared());
        for j in 0..users {
            if j != k {
                cross[(k, j)] = gains[(k, j)].norm_sqr();
            }
            let mut acc = 0.0;
            for l in 0..aps {
                let dkl = d.view((l * n_a, k), (n_a, 1));
                acc += linalg::quad_form_slice(state.theta(j, l), &dkl.column(0));
            }
            error[(k, j)] = acc.max(0.0);
        }
    }
    Ok(SinrLinearization {
        signal,
        cross,
        error,
        noise: noise_terms,
        own_quadratic: vec![0.0; users],
    })
}

/// Instantaneous centralized SINR at power vector `eta`.
pub fn centralized_sinr(lin: &SinrLinearization, eta: &[f64]) -> Vec<f64> {
    lin.sinr(eta)
}

/// Spectral efficiency in bit/channel use.
pub fn spectral_efficiency(
    gamma: f64,
    tau_p: usize,
    tau_u: usize,
    form: PrelogForm,
) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::Parameter(format!("SINR must be >= 0, got {gamma}")));
    }
    let prelog = match form {
        PrelogForm::AsPrinted => {
            if tau_p >= tau_u {
                return Err(Error::Parameter(format!(
                    "as-printed prelog needs tau_p < tau_u ({tau_p} >= {tau_u})"
                )));
            }
            1.0 - tau_p as f64 / tau_u as f64
        }
        PrelogForm::Conventional => 1.0 - tau_p as f64 / (tau_p + tau_u) as f64,
    };
    Ok(prelog * (1.0 + gamma).log2())
}

/// Realization averages of the terms entering the distributed SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedMoments {
    pub users: usize,
    pub aps: usize,
    pub n_samples: usize,
    /// `E[v_kl^H h_hat_kl]`, index `k * L + l`.
    pub m1: Vec<Complex64>,
    /// `E[|v_kl^H h_hat_k'l|^2]`, index `(k * K + k') * L + l`.
    pub m2: Vec<f64>,
    /// `E[v_kl^H Theta_k'l v_kl]`, indexed like `m2`.
    pub e2: Vec<f64>,
    /// `E[||v_kl||^2]`, index `k * L + l`.
    pub nv: Vec<f64>,
    /// `E[|sum_l v_kl^H h_hat_k'l|^2]`, index `k * K + k'`.
    pub coherent: Vec<f64>,
    /// `E[||h_hat_kl||^2]`, index `k * L + l`.
    pub estimate_power: Vec<f64>,
}

impl DistributedMoments {
    fn kl(&self, k: usize, l: usize) -> usize {
        k * self.aps + l
    }

    fn kjl(&self, k: usize, j: usize, l: usize) -> usize {
        (k * self.users + j) * self.aps + l
    }

    pub fn mean_gain(&self, k: usize, l: usize) -> Complex64 {
        self.m1[self.kl(k, l)]
    }

    pub fn second_moment(&self, k: usize, j: usize, l: usize) -> f64 {
        self.m2[self.kjl(k, j, l)]
    }

    pub fn error_moment(&self, k: usize, j: usize, l: usize) -> f64 {
        self.e2[self.kjl(k, j, l)]
    }

    pub fn combiner_power(&self, k: usize, l: usize) -> f64 {
        self.nv[self.kl(k, l)]
    }

    fn coherent_mean(&self, k: usize) -> Complex64 {
        (0..self.aps).map(|l| self.mean_gain(k, l)).sum()
    }

    /// Coefficients of the distributed SINR in the requested form.
    pub fn linearize(&self, form: DistributedForm, p_u: f64, noise: f64) -> SinrLinearization {
        let k_users = self.users;
        let mut cross = DMatrix::zeros(k_users, k_users);
        let mut error = DMatrix::zeros(k_users, k_users);
        let mut signal = Vec::with_capacity(k_users);
        let mut noise_terms = Vec::with_capacity(k_users);
        let mut quad = vec![0.0; k_users];
        for k in 0..k_users {
            let a = self.coherent_mean(k).norm_sqr();
            signal.push(a);
            noise_terms.push(
                noise / p_u
                    * (0..self.aps)
                        .map(|l| self.combiner_power(k, l))
                        .sum::<f64>(),
            );
            for j in 0..k_users {
                error[(k, j)] = (0..self.aps).map(|l| self.error_moment(k, j, l)).sum();
                cross[(k, j)] = match form {
                    DistributedForm::AsPrinted => {
                        (0..self.aps).map(|l| self.second_moment(k, j, l)).sum()
                    }
                    DistributedForm::Standard => self.coherent[k * k_users + j],
                };
            }
            match form {
                DistributedForm::AsPrinted => {
                    quad[k] = (0..self.aps).map(|l| self.mean_gain(k, l).norm_sqr()).sum();
                }
                DistributedForm::Standard => {
                    cross[(k, k)] = (cross[(k, k)] - a).max(0.0);
                }
            }
        }
        SinrLinearization {
            signal,
            cross,
            error,
            noise: noise_terms,
            own_quadratic: quad,
        }
    }

    /// Largest `p_u sum_l E||h_hat_kl||^2 / sigma^2` over users.
    pub fn sinr_upper_bound(&self, p_u: f64, noise: f64) -> f64 {
        (0..self.users)
            .map(|k| {
                p_u * (0..self.aps)
                    .map(|l| self.estimate_power[self.kl(k, l)])
                    .sum::<f64>()
                    / noise
            })
            .fold(0.0, f64::max)
    }
}

/// Running sums for [`DistributedMoments`]; blocks must be added in a fixed order
/// for bit-reproducible results.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    users: usize,
    aps: usize,
    n: usize,
    m1: Vec<Complex64>,
    m2: Vec<f64>,
    e2: Vec<f64>,
    nv: Vec<f64>,
    coherent: Vec<f64>,
    estimate_power: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(users: usize, aps: usize) -> Self {
        Self {
            users,
            aps,
            n: 0,
            m1: vec![Complex64::new(0.0, 0.0); users * aps],
            m2: vec![0.0; users * users * aps],
            e2: vec![0.0; users * users * aps],
            nv: vec![0.0; users * aps],
            coherent: vec![0.0; users * users],
            estimate_power: vec![0.0; users * aps],
        }
    }

    pub fn add(&mut self, state: &ChannelState, combiners: &CombinerSet) -> Result<()> {
        let v = match &combiners.vectors {
            Vectors::Local(v) => v,
            Vectors::Centralized(_) => {
                return Err(Error::Parameter(format!(
                    "{} is not a local combiner",
                    combiners.kind
                )))
            }
        };
        let (users, aps) = (self.users, self.aps);
        let mut sums = vec![Complex64::new(0.0, 0.0); users * users];
        for (l, vl) in v.iter().enumerate() {
            let hl = state.local_estimates(l);
            let gains = vl.adjoint() * &hl;
            for k in 0..users {
                let vk = vl.column(k);
                self.m1[k * aps + l] += gains[(k, k)];
                self.nv[k * aps + l] += vk.norm_squared();
                self.estimate_power[k * aps + l] += hl.column(k).norm_squared();
                for j in 0..users {
                    let idx = (k * users + j) * aps + l;
                    self.m2[idx] += gains[(k, j)].norm_sqr();
                    self.e2[idx] += linalg::quad_form_slice(state.theta(j, l), &vk).max(0.0);
                    sums[k * users + j] += gains[(k, j)];
                }
            }
        }
        for (acc, s) in self.coherent.iter_mut().zip(&sums) {
            *acc += s.norm_sqr();
        }
        self.n += 1;
        Ok(())
    }

    pub fn finish(self) -> DistributedMoments {
        let inv = if self.n == 0 {
            0.0
        } else {
            1.0 / self.n as f64
        };
        let scale = |v: Vec<f64>| v.into_iter().map(|x| x * inv).collect::<Vec<_>>();
        DistributedMoments {
            users: self.users,
            aps: self.aps,
            n_samples: self.n,
            m1: self.m1.into_iter().map(|z| z * inv).collect(),
            m2: scale(self.m2),
            e2: scale(self.e2),
            nv: scale(self.nv),
            coherent: scale(self.coherent),
            estimate_power: scale(self.estimate_power),
        }
    }
}

/// Monte-Carlo estimate of the distributed moments over `n_blocks` fresh realizations.
pub fn estimate_distributed_moments(
    model: &ChannelModel,
    kind: CombinerKind,
    eta: &[f64],
    n_blocks: usize,
    master_seed: u64,
) -> Result<DistributedMoments> {
    if n_blocks == 0 {
        return Err(Error::Parameter("n_blocks must be >= 1".into()));
    }
    if kind.is_centralized() {
        return Err(Error::Parameter(format!("{kind} is not a local combiner")));
    }
    let stats = model.statistics();
    let params = CombinerParams {
        eta: eta.to_vec(),
        alpha: None,
    };
    let mut acc = MomentAccumulator::new(stats.users, stats.aps);
    for b in 0..n_blocks {
        let state = model.realize_seeded(seed::derive(master_seed, &[b as u64]));
        let set = combining::build(kind, &state, &params)?;
        acc.add(&state, &set)?;
    }
    Ok(acc.finish())
}

/// Distributed SINR of every user from realization-averaged moments.
pub fn distributed_sinr(
    mom: &DistributedMoments,
    eta: &[f64],
    p_u: f64,
    noise: f64,
    form: DistributedForm,
) -> Result<Vec<f64>> {
    let lin = mom.linearize(form, p_u, noise);
    (0..mom.users)
        .map(|k| {
            if eta[k] == 0.0 {
                return Ok(0.0);
            }
            let den = lin.denominator(k, eta);
            if !(den > 0.0) {
                return Err(Error::MomentInconsistency {
                    user: k,
                    denominator: den,
                });
            }
            Ok(eta[k] * lin.signal[k] / den)
        })
        .collect()
}
