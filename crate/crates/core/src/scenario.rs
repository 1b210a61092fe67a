//! Network snapshot: geometry, large-scale fading, spatial correlation and pilots.
//!
//! A [`Scenario`] is a pure function of its [`NetworkConfig`] (including the seed)
//! and is immutable afterwards, so it can be shared freely between workers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Thermal noise power spectral density in dBm/Hz.
pub const NOISE_PSD_DBM_HZ: f64 = -174.0;

/// Three-slope COST-Hata path-loss parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossParams {
    pub carrier_mhz: f64,
    pub ap_height_m: f64,
    pub ue_height_m: f64,
    /// Inner breakpoint; distances below it are clamped (also the minimum AP-UE distance).
    pub d0_m: f64,
    /// Outer breakpoint between the 20 dB/decade and 35 dB/decade slopes.
    pub d1_m: f64,
    /// Log-normal shadowing standard deviation in dB; 0 disables shadowing.
    pub shadowing_std_db: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            carrier_mhz: 1900.0,
            ap_height_m: 15.0,
            ue_height_m: 1.65,
            d0_m: 10.0,
            d1_m: 50.0,
            shadowing_std_db: 0.0,
        }
    }
}

impl PathLossParams {
    /// Distance-independent COST-Hata term in dB.
    pub fn fixed_loss_db(&self) -> f64 {
        let lf = self.carrier_mhz.log10();
        46.3 + 33.9 * lf - 13.82 * self.ap_height_m.log10() - (1.1 * lf - 0.7) * self.ue_height_m
            + (1.56 * lf - 0.8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApLayout {
    /// Uniform random in the coverage disk.
    Random,
    /// Deterministic square grid inscribed in the disk.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Number of access points (L).
    pub aps: usize,
    /// Antennas per AP (N_a).
    pub antennas_per_ap: usize,
    /// Number of single-antenna users (K).
    pub users: usize,
    pub radius_m: f64,
    /// UE transmit power in watts.
    pub ue_power_w: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub tau_c: usize,
    pub tau_p: usize,
    pub tau_u: usize,
    /// Angular standard deviation of the local scattering model, degrees.
    pub asd_deg: f64,
    pub seed: u64,
    pub ap_layout: ApLayout,
    pub pathloss: PathLossParams,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            aps: 64,
            antennas_per_ap: 4,
            users: 10,
            radius_m: 1000.0,
            ue_power_w: 0.2,
            bandwidth_hz: 5e6,
            noise_figure_db: 9.0,
            tau_c: 200,
            tau_p: 5,
            tau_u: 195,
            asd_deg: 10.0,
            seed: 0,
            ap_layout: ApLayout::Random,
            pathloss: PathLossParams::default(),
        }
    }
}

impl NetworkConfig {
    /// Total number of service antennas M = L * N_a.
    pub fn total_antennas(&self) -> usize {
        self.aps * self.antennas_per_ap
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("aps", self.aps),
            ("antennas_per_ap", self.antennas_per_ap),
            ("users", self.users),
            ("tau_c", self.tau_c),
            ("tau_p", self.tau_p),
            ("tau_u", self.tau_u),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        let finite_pos = [
            ("radius_m", self.radius_m),
            ("ue_power_w", self.ue_power_w),
            ("bandwidth_hz", self.bandwidth_hz),
            ("asd_deg", self.asd_deg),
        ];
        for (field, v) in finite_pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    field,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::config("noise_figure_db", "must be finite"));
        }
        if self.tau_p > self.tau_c {
            return Err(Error::config("tau_p", "must not exceed tau_c"));
        }
        if self.tau_p + self.tau_u != self.tau_c {
            return Err(Error::config(
                "tau_c",
                format!(
                    "must equal tau_p + tau_u ({} + {} != {})",
                    self.tau_p, self.tau_u, self.tau_c
                ),
            ));
        }
        let pl = &self.pathloss;
        if !(pl.d0_m > 0.0 && pl.d1_m > pl.d0_m) {
            return Err(Error::config("pathloss", "requires 0 < d0_m < d1_m"));
        }
        if !(pl.carrier_mhz > 0.0 && pl.ap_height_m > 0.0 && pl.ue_height_m > 0.0) {
            return Err(Error::config(
                "pathloss",
                "carrier and heights must be positive",
            ));
        }
        if !(pl.shadowing_std_db >= 0.0 && pl.shadowing_std_db.is_finite()) {
            return Err(Error::config("pathloss", "shadowing_std_db must be >= 0"));
        }
        Ok(())
    }
}

/// Three-slope COST-Hata channel gain in dB (negative) at 2-D distance `d_m`.
pub fn pathloss_db(d_m: f64, params: &PathLossParams) -> f64 {
    let l = params.fixed_loss_db();
    let km = |m: f64| m / 1000.0;
    let d = d_m.max(params.d0_m);
    if d > params.d1_m {
        -l - 35.0 * km(d).log10()
    } else {
        -l - 15.0 * km(params.d1_m).log10() - 20.0 * km(d).log10()
    }
}

/// Noise power in watts for the given bandwidth and receiver noise figure.
pub fn noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    let dbm = NOISE_PSD_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Gaussian local scattering correlation matrix for a half-wavelength ULA.
///
/// `phi` is the nominal azimuth and `asd` the angular standard deviation, both in radians.
pub fn local_scattering(n_a: usize, phi: f64, asd: f64, beta: f64) -> CMat {
    let (s, c) = phi.sin_cos();
    CMat::from_fn(n_a, n_a, |m, n| {
        let dist = m as f64 - n as f64;
        let spread = (-(asd * asd) / 2.0 * (PI * dist * c).powi(2)).exp();
        Complex64::from_polar(beta * spread, PI * dist * s)
    })
}

/// Round-robin pilot assignment: user k uses pilot `k mod tau_p`.
pub fn assign_pilots(users: usize, tau_p: usize) -> Vec<usize> {
    (0..users).map(|k| k % tau_p.max(1)).collect()
}

fn copilot_sets(pilot_of: &[usize]) -> Vec<Vec<usize>> {
    pilot_of
        .iter()
        .map(|&p| {
            pilot_of
                .iter()
                .enumerate()
                .filter(|&(_, &q)| q == p)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

fn uniform_in_disk<R: Rng>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    [r * theta.cos(), r * theta.sin()]
}

fn grid_in_disk(count: usize, radius: f64) -> Vec<[f64; 2]> {
    let side = (count as f64).sqrt().ceil() as usize;
    let half = radius / std::f64::consts::SQRT_2;
    let step = 2.0 * half / side as f64;
    (0..count)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            [
                -half + (col as f64 + 0.5) * step,
                -half + (row as f64 + 0.5) * step,
            ]
        })
        .collect()
}

/// Immutable network snapshot.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: NetworkConfig,
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// Large-scale gains, row-major `k * L + l`, linear scale.
    beta: Vec<f64>,
    /// Spatial correlation matrices, indexed like `beta`.
    correlation: Vec<CMat>,
    pub pilot_of: Vec<usize>,
    copilots: Vec<Vec<usize>>,
    /// Receiver noise power in watts.
    pub noise_power: f64,
}

impl Scenario {
    /// Builds a random network snapshot; deterministic in `config` (including `config.seed`).
    pub fn build(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let (l_aps, k_users, n_a) = (config.aps, config.users, config.antennas_per_ap);
        if config.total_antennas() < 4 * k_users {
            log::warn!(
                "M = {} service antennas is not much larger than K = {} users",
                config.total_antennas(),
                k_users
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let ap_positions = match config.ap_layout {
            ApLayout::Random => (0..l_aps)
                .map(|_| uniform_in_disk(&mut rng, config.radius_m))
                .collect(),
            ApLayout::Grid => grid_in_disk(l_aps, config.radius_m),
        };
        let ue_positions: Vec<[f64; 2]> = (0..k_users)
            .map(|_| uniform_in_disk(&mut rng, config.radius_m))
            .collect();

        let shadowing = if config.pathloss.shadowing_std_db > 0.0 {
            Some(Normal::new(0.0, config.pathloss.shadowing_std_db).expect("validated std"))
        } else {
            None
        };
        let asd = config.asd_deg.to_radians();
        let mut beta = Vec::with_capacity(k_users * l_aps);
        let mut correlation = Vec::with_capacity(k_users * l_aps);
        for ue in &ue_positions {
            for ap in &ap_positions {
                let (dx, dy) = (ue[0] - ap[0], ue[1] - ap[1]);
                let dist = dx.hypot(dy).max(config.pathloss.d0_m);
                let mut gain_db = pathloss_db(dist, &config.pathloss);
                if let Some(shadow) = &shadowing {
                    gain_db += shadow.sample(&mut rng);
                }
                let b = 10f64.powf(gain_db / 10.0);
                let phi = dy.atan2(dx);
                beta.push(b);
                correlation.push(local_scattering(n_a, phi, asd, b));
            }
        }
        let pilot_of = assign_pilots(k_users, config.tau_p);
        Ok(Self {
            copilots: copilot_sets(&pilot_of),
            pilot_of,
            noise_power: noise_power(config.bandwidth_hz, config.noise_figure_db),
            config: config.clone(),
            ap_positions,
            ue_positions,
            beta,
            correlation,
        })
    }

    /// Scenario with caller-supplied correlation matrices (`k * L + l` order).
    ///
    /// Positions are all placed at the origin and β is recovered as `trace(R) / N_a`.
    pub fn from_correlation(config: &NetworkConfig, correlation: Vec<CMat>) -> Result<Self> {
        config.validate()?;
        let (l_aps, k_users, n_a) = (config.aps, config.users, config.antennas_per_ap);
        if correlation.len() != k_users * l_aps {
            return Err(Error::Parameter(format!(
                "expected {} correlation matrices, got {}",
                k_users * l_aps,
                correlation.len()
            )));
        }
        for r in &correlation {
            if r.nrows() != n_a || r.ncols() != n_a {
                return Err(Error::Parameter(format!(
                    "correlation matrix is {}x{}, expected {n_a}x{n_a}",
                    r.nrows(),
                    r.ncols()
                )));
            }
            linalg::check_hermitian_psd(r, "correlation matrix")?;
        }
        let beta = correlation
            .iter()
            .map(|r| linalg::trace_re(r) / n_a as f64)
            .collect();
        let pilot_of = assign_pilots(k_users, config.tau_p);
        Ok(Self {
            copilots: copilot_sets(&pilot_of),
            pilot_of,
            noise_power: noise_power(config.bandwidth_hz, config.noise_figure_db),
            config: config.clone(),
            ap_positions: vec![[0.0; 2]; l_aps],
            ue_positions: vec![[0.0; 2]; k_users],
            beta,
            correlation,
        })
    }

    /// Overrides the receiver noise power (watts).
    pub fn with_noise_power(mut self, noise_power: f64) -> Self {
        self.noise_power = noise_power;
        self
    }

    pub fn aps(&self) -> usize {
        self.config.aps
    }

    pub fn users(&self) -> usize {
        self.config.users
    }

    pub fn antennas_per_ap(&self) -> usize {
        self.config.antennas_per_ap
    }

    pub fn beta(&self, k: usize, l: usize) -> f64 {
        self.beta[k * self.config.aps + l]
    }

    pub fn correlation(&self, k: usize, l: usize) -> &CMat {
        &self.correlation[k * self.config.aps + l]
    }

    /// Users sharing user `k`'s pilot, `k` included.
    pub fn copilots(&self, k: usize) -> &[usize] {
        &self.copilots[k]
    }
}
