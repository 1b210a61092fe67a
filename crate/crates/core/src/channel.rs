//! Correlated Rayleigh channel realizations and LMMSE estimation with pilot contamination.
//!
//! The pilot phase is simulated through its despread observation
//! `y_p = sqrt(p_u) tau_p sum_{k' in P_k} h_k'l + n_p`, `n_p ~ CN(0, tau_p sigma^2 I)`,
//! and every estimate is `sqrt(p_u) R_kl Gamma_kl^-1 y_p`. Users sharing a pilot are
//! estimated from the same observation, so their estimates stay correlated.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::{Const, DVectorView, Dyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::scenario::Scenario;

/// Standard circularly-symmetric complex Gaussian vector of length `n`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * FRAC_1_SQRT_2
    })
}

/// Draws `h ~ CN(0, R)` as `R^(1/2) w`.
pub fn sample_channel<R: Rng + ?Sized>(r: &CMat, rng: &mut R) -> Result<CVec> {
    let root = linalg::sqrtm_psd(r)?;
    let w = complex_gaussian(rng, r.nrows());
    Ok(root * w)
}

/// `Gamma_kl = p_u tau_p sum_{k' in P_k} R_k'l + sigma^2 I`.
pub fn gamma_matrix(
    copilot_correlations: &[&CMat],
    p_u: f64,
    tau_p: usize,
    noise_power: f64,
) -> CMat {
    let n = copilot_correlations[0].nrows();
    let mut g = CMat::identity(n, n).scale(noise_power);
    for r in copilot_correlations {
        g += r.scale(p_u * tau_p as f64);
    }
    g
}

/// Error covariance `Theta = R - p_u tau_p R Gamma^-1 R`.
pub fn error_covariance(r: &CMat, gamma: &CMat, p_u: f64, tau_p: usize) -> Result<CMat> {
    Ok(r - estimate_covariance(r, gamma, p_u, tau_p)?)
}

/// Covariance of the LMMSE estimate, `p_u tau_p R Gamma^-1 R`.
pub fn estimate_covariance(r: &CMat, gamma: &CMat, p_u: f64, tau_p: usize) -> Result<CMat> {
    let gi_r = linalg::solve_hpd(gamma.clone(), r, "Gamma")?;
    Ok(linalg::hermitian_part(&(r * gi_r)).scale(p_u * tau_p as f64))
}

/// Second-order statistics that do not change from one coherence block to the next.
#[derive(Debug)]
pub struct Statistics {
    pub aps: usize,
    pub users: usize,
    pub antennas_per_ap: usize,
    pub ue_power: f64,
    pub tau_p: usize,
    pub noise_power: f64,
    gamma: Vec<CMat>,
    theta: Vec<CMat>,
    estimate_cov: Vec<CMat>,
}

impl Statistics {
    fn idx(&self, k: usize, l: usize) -> usize {
        k * self.aps + l
    }

    pub fn gamma(&self, k: usize, l: usize) -> &CMat {
        &self.gamma[self.idx(k, l)]
    }

    pub fn theta(&self, k: usize, l: usize) -> &CMat {
        &self.theta[self.idx(k, l)]
    }

    /// `p_u tau_p R_kl Gamma_kl^-1 R_kl`.
    pub fn estimate_covariance(&self, k: usize, l: usize) -> &CMat {
        &self.estimate_cov[self.idx(k, l)]
    }

    pub fn total_antennas(&self) -> usize {
        self.aps * self.antennas_per_ap
    }
}

/// Per-scenario precomputation for drawing coherence blocks.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    stats: Arc<Statistics>,
    sqrt_r: Vec<CMat>,
    /// `sqrt(p_u) R_kl Gamma_kl^-1`
    estimator: Vec<CMat>,
    pilot_members: Vec<Vec<usize>>,
    pilot_of: Vec<usize>,
}

impl ChannelModel {
    pub fn new(scn: &Scenario) -> Result<Self> {
        let (aps, users, n_a) = (scn.aps(), scn.users(), scn.antennas_per_ap());
        let (p_u, tau_p, noise) = (scn.config.ue_power_w, scn.config.tau_p, scn.noise_power);
        let mut gamma = Vec::with_capacity(users * aps);
        let mut theta = Vec::with_capacity(users * aps);
        let mut estimate_cov = Vec::with_capacity(users * aps);
        let mut sqrt_r = Vec::with_capacity(users * aps);
        let mut estimator = Vec::with_capacity(users * aps);
        for k in 0..users {
            for l in 0..aps {
                let r = scn.correlation(k, l);
                let copilot: Vec<&CMat> = scn
                    .copilots(k)
                    .iter()
                    .map(|&j| scn.correlation(j, l))
                    .collect();
                let g = gamma_matrix(&copilot, p_u, tau_p, noise);
                // R and Gamma are Hermitian, so R Gamma^-1 = (Gamma^-1 R)^H.
                let gi_r = linalg::solve_hpd(g.clone(), r, "Gamma").map_err(|_| {
                    Error::NumericDomain(format!("Gamma for user {k}, AP {l} is singular"))
                })?;
                let cov = linalg::hermitian_part(&(r * &gi_r)).scale(p_u * tau_p as f64);
                let th = linalg::hermitian_part(&(r - &cov));
                estimator.push(gi_r.adjoint().scale(p_u.sqrt()));
                sqrt_r.push(linalg::sqrtm_psd(r)?);
                gamma.push(g);
                theta.push(th);
                estimate_cov.push(cov);
            }
        }
        let n_pilots = scn.pilot_of.iter().copied().max().map_or(0, |m| m + 1);
        let mut pilot_members = vec![Vec::new(); n_pilots];
        for (k, &p) in scn.pilot_of.iter().enumerate() {
            pilot_members[p].push(k);
        }
        Ok(Self {
            stats: Arc::new(Statistics {
                aps,
                users,
                antennas_per_ap: n_a,
                ue_power: p_u,
                tau_p,
                noise_power: noise,
                gamma,
                theta,
                estimate_cov,
            }),
            sqrt_r,
            estimator,
            pilot_members,
            pilot_of: scn.pilot_of.clone(),
        })
    }

    pub fn statistics(&self) -> &Arc<Statistics> {
        &self.stats
    }

    /// Draws one coherence block from `rng`.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelState {
        let s = &*self.stats;
        let (aps, users, n_a) = (s.aps, s.users, s.antennas_per_ap);
        let m = s.total_antennas();
        let mut h = CMat::zeros(m, users);
        for k in 0..users {
            for l in 0..aps {
                let w = complex_gaussian(rng, n_a);
                let hk = &self.sqrt_r[k * aps + l] * w;
                h.view_mut((l * n_a, k), (n_a, 1)).copy_from(&hk);
            }
        }
        let amp = s.ue_power.sqrt() * s.tau_p as f64;
        let noise_std = (s.tau_p as f64 * s.noise_power).sqrt();
        let mut h_hat = CMat::zeros(m, users);
        for members in &self.pilot_members {
            for l in 0..aps {
                let mut y = complex_gaussian(rng, n_a).scale(noise_std);
                for &k in members {
                    y += h.view((l * n_a, k), (n_a, 1)).scale(amp);
                }
                for &k in members {
                    let est = &self.estimator[k * aps + l] * &y;
                    h_hat.view_mut((l * n_a, k), (n_a, 1)).copy_from(&est);
                }
            }
        }
        ChannelState {
            h,
            h_hat,
            stats: Arc::clone(&self.stats),
            block_seed: None,
        }
    }

    /// Draws the block identified by `block_seed`; identical seeds give identical blocks.
    pub fn realize_seeded(&self, block_seed: u64) -> ChannelState {
        let mut rng = ChaCha8Rng::seed_from_u64(block_seed);
        let mut state = self.realize(&mut rng);
        state.block_seed = Some(block_seed);
        state
    }

    pub fn pilot_of(&self) -> &[usize] {
        &self.pilot_of
    }
}

/// Convenience wrapper that builds the per-scenario model and draws a single block.
pub fn realize_block<R: Rng + ?Sized>(scn: &Scenario, rng: &mut R) -> Result<ChannelState> {
    Ok(ChannelModel::new(scn)?.realize(rng))
}

/// One coherence-block realization.
#[derive(Debug, Clone)]
pub struct ChannelState {
    /// True channels, M x K; AP `l` owns rows `l*N_a .. (l+1)*N_a`.
    pub h: CMat,
    /// LMMSE estimates, same layout as `h`.
    pub h_hat: CMat,
    pub stats: Arc<Statistics>,
    pub block_seed: Option<u64>,
}

impl ChannelState {
    pub fn aps(&self) -> usize {
        self.stats.aps
    }

    pub fn users(&self) -> usize {
        self.stats.users
    }

    pub fn antennas_per_ap(&self) -> usize {
        self.stats.antennas_per_ap
    }

    pub fn total_antennas(&self) -> usize {
        self.stats.total_antennas()
    }

    pub fn estimate(&self, k: usize, l: usize) -> DVectorView<'_, Complex64> {
        let n_a = self.stats.antennas_per_ap;
        self.h_hat
            .generic_view((l * n_a, k), (Dyn(n_a), Const::<1>))
    }

    pub fn true_channel(&self, k: usize, l: usize) -> DVectorView<'_, Complex64> {
        let n_a = self.stats.antennas_per_ap;
        self.h.generic_view((l * n_a, k), (Dyn(n_a), Const::<1>))
    }

    /// Local estimate matrix `H_l` (N_a x K) of AP `l`.
    pub fn local_estimates(&self, l: usize) -> CMat {
        let n_a = self.stats.antennas_per_ap;
        self.h_hat.rows(l * n_a, n_a).into_owned()
    }

    pub fn theta(&self, k: usize, l: usize) -> &CMat {
        self.stats.theta(k, l)
    }

    pub fn gamma(&self, k: usize, l: usize) -> &CMat {
        self.stats.gamma(k, l)
    }

    /// Block-diagonal error covariance `Theta_k` of user `k` (M x M).
    pub fn theta_full(&self, k: usize) -> CMat {
        let n_a = self.stats.antennas_per_ap;
        let m = self.total_antennas();
        let mut out = CMat::zeros(m, m);
        for l in 0..self.aps() {
            out.view_mut((l * n_a, l * n_a), (n_a, n_a))
                .copy_from(self.theta(k, l));
        }
        out
    }
}
