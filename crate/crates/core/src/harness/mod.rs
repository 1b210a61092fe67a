//! Monte-Carlo experiment driver.
//!
//! Spectral efficiency is averaged over coherence blocks within a setup; CDFs are
//! taken across (setup, user) pairs. Every setup and block draws from its own RNG
//! stream derived from the master seed, so results do not depend on thread count.

pub mod cdf;
pub mod config;
pub mod output;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::combining::{self, CombinerKind, CombinerParams};
use crate::costmodel::{self, CostRecord};
use crate::error::{Error, Result};
use crate::performance::{self, MomentAccumulator};
use crate::powercontrol;
use crate::scenario::Scenario;
use crate::seed;

pub use cdf::{compute_cdf, percentile};
pub use config::{ExperimentConfig, PowerPolicy, Profile};

/// Seed path tag for setup geometry: `derive(master, [SCENARIO_STREAM, setup])`.
pub const SCENARIO_STREAM: u64 = 0;
/// Seed path tag for coherence blocks: `derive(master, [BLOCK_STREAM, setup, block])`.
pub const BLOCK_STREAM: u64 = 1;

/// Outcome for one (setup, user, combiner, policy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub setup: usize,
    pub user: usize,
    pub combiner: CombinerKind,
    pub policy: PowerPolicy,
    /// Mean spectral efficiency, bit/channel use.
    pub se: f64,
    /// Mean SINR (linear).
    pub sinr: f64,
    /// Power coefficient used (mean over blocks for per-block policies).
    pub eta: f64,
}

/// A (setup, combiner, policy) cell that produced no records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub setup: usize,
    pub combiner: CombinerKind,
    pub policy: PowerPolicy,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub setup: usize,
    pub combiner: CombinerKind,
    pub policy: PowerPolicy,
    pub capacity_mbps: f64,
}

#[derive(Debug, Clone)]
pub struct ResultSet {
    pub config: ExperimentConfig,
    pub records: Vec<ResultRecord>,
    pub skipped: Vec<SkipRecord>,
    pub costs: Vec<CostRecord>,
}

impl ResultSet {
    /// Values of `field` over all records of one (combiner, policy).
    pub fn se_of(&self, combiner: CombinerKind, policy: PowerPolicy) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.combiner == combiner && r.policy == policy)
            .map(|r| r.se)
            .collect()
    }

    pub fn capacity(&self) -> Result<Vec<CapacityRecord>> {
        sum_capacity(
            &self.records,
            self.config.network.bandwidth_hz,
            self.config.network.users,
        )
    }

    pub fn is_skipped(&self, combiner: CombinerKind) -> bool {
        self.skipped.iter().any(|s| s.combiner == combiner)
    }
}

fn skip_status(err: &Error) -> Option<String> {
    match err {
        Error::DegenerateCombiner { .. } => Some("skipped: rank-deficient".into()),
        Error::MomentInconsistency { .. } => Some("skipped: moment-inconsistency".into()),
        _ => None,
    }
}

#[derive(Default)]
struct CentralizedAcc {
    se: Vec<f64>,
    sinr: Vec<f64>,
    eta: Vec<f64>,
}

impl CentralizedAcc {
    fn new(users: usize) -> Self {
        Self {
            se: vec![0.0; users],
            sinr: vec![0.0; users],
            eta: vec![0.0; users],
        }
    }

    fn add(&mut self, se: &[f64], sinr: &[f64], eta: &[f64]) {
        for k in 0..self.se.len() {
            self.se[k] += se[k];
            self.sinr[k] += sinr[k];
            self.eta[k] += eta[k];
        }
    }
}

enum Cell {
    /// Per-block SE sums for each policy.
    Centralized(BTreeMap<PowerPolicy, CentralizedAcc>),
    /// Moments at full power, shared by every policy.
    Distributed(MomentAccumulator),
    Skipped(String),
}

struct SetupOutcome {
    records: Vec<ResultRecord>,
    skipped: Vec<SkipRecord>,
}

fn run_setup(cfg: &ExperimentConfig, setup: usize) -> Result<SetupOutcome> {
    let mut network = cfg.network.clone();
    network.seed = seed::derive(cfg.master_seed, &[SCENARIO_STREAM, setup as u64]);
    let scn = Scenario::build(&network)?;
    let model = ChannelModel::new(&scn)?;
    let (users, p_u, noise) = (network.users, network.ue_power_w, scn.noise_power);
    let (tau_p, tau_u) = (network.tau_p, network.tau_u);
    let params = CombinerParams {
        eta: vec![1.0; users],
        alpha: cfg.rzf_alpha,
    };
    let se_of = |g: f64| performance::spectral_efficiency(g, tau_p, tau_u, cfg.prelog_form);
    let mut policies = cfg.power_policies.clone();
    policies.sort();
    policies.dedup();

    let mut cells: Vec<(CombinerKind, Cell)> = cfg
        .combiners
        .iter()
        .map(|&kind| {
            let cell = if kind.is_centralized() {
                Cell::Centralized(
                    policies
                        .iter()
                        .map(|&p| (p, CentralizedAcc::new(users)))
                        .collect(),
                )
            } else {
                Cell::Distributed(MomentAccumulator::new(users, network.aps))
            };
            (kind, cell)
        })
        .collect();

    // Centralized cells use the first `n_blocks` draws, distributed cells the first `moment_blocks`.
    for block in 0..cfg.n_blocks.max(cfg.moment_blocks) {
        let active = |cell: &Cell| match cell {
            Cell::Centralized(_) => block < cfg.n_blocks,
            Cell::Distributed(_) => block < cfg.moment_blocks,
            Cell::Skipped(_) => false,
        };
        if !cells.iter().any(|(_, c)| active(c)) {
            break;
        }
        let state = model.realize_seeded(seed::derive(
            cfg.master_seed,
            &[BLOCK_STREAM, setup as u64, block as u64],
        ));
        for (kind, cell) in cells.iter_mut() {
            if !active(cell) {
                continue;
            }
            let set = match combining::build(*kind, &state, &params) {
                Ok(set) => set,
                Err(e) => match skip_status(&e) {
                    Some(status) => {
                        log::debug!("setup {setup}: {kind} {status} ({e})");
                        *cell = Cell::Skipped(status);
                        continue;
                    }
                    None => return Err(e),
                },
            };
            match cell {
                Cell::Centralized(accs) => {
                    let lin = performance::linearize_sinr(&set, &state, p_u, noise)?;
                    for (policy, acc) in accs.iter_mut() {
                        let eta = match policy {
                            PowerPolicy::Full => vec![1.0; users],
                            PowerPolicy::Maxmin => {
                                let upper = powercontrol::sinr_upper_bound(&state, p_u, noise);
                                powercontrol::maxmin_bisection(&lin, cfg.epsilon, upper)?
                                    .0
                                    .into_inner()
                            }
                        };
                        let sinr = lin.sinr(&eta);
                        let se = sinr.iter().map(|&g| se_of(g)).collect::<Result<Vec<_>>>()?;
                        acc.add(&se, &sinr, &eta);
                    }
                }
                Cell::Distributed(acc) => acc.add(&state, &set)?,
                Cell::Skipped(_) => unreachable!(),
            }
        }
    }

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let skip = |kind, policy, status: &str| SkipRecord {
        setup,
        combiner: kind,
        policy,
        status: status.to_string(),
    };
    let inv_blocks = 1.0 / cfg.n_blocks as f64;
    for (kind, cell) in cells {
        match cell {
            Cell::Skipped(status) => {
                skipped.extend(policies.iter().map(|&p| skip(kind, p, &status)));
            }
            Cell::Centralized(accs) => {
                for (policy, acc) in accs {
                    records.extend((0..users).map(|k| ResultRecord {
                        setup,
                        user: k,
                        combiner: kind,
                        policy,
                        se: acc.se[k] * inv_blocks,
                        sinr: acc.sinr[k] * inv_blocks,
                        eta: acc.eta[k] * inv_blocks,
                    }));
                }
            }
            Cell::Distributed(acc) => {
                let mom = acc.finish();
                for &policy in &policies {
                    let eta = match policy {
                        PowerPolicy::Full => vec![1.0; users],
                        PowerPolicy::Maxmin => {
                            let lin = mom.linearize(cfg.distributed_form, p_u, noise);
                            let upper = mom.sinr_upper_bound(p_u, noise);
                            powercontrol::maxmin_bisection(&lin, cfg.epsilon, upper)?
                                .0
                                .into_inner()
                        }
                    };
                    match performance::distributed_sinr(
                        &mom,
                        &eta,
                        p_u,
                        noise,
                        cfg.distributed_form,
                    ) {
                        Ok(sinr) => {
                            for k in 0..users {
                                records.push(ResultRecord {
                                    setup,
                                    user: k,
                                    combiner: kind,
                                    policy,
                                    se: se_of(sinr[k])?,
                                    sinr: sinr[k],
                                    eta: eta[k],
                                });
                            }
                        }
                        Err(e) => match skip_status(&e) {
                            Some(status) => skipped.push(skip(kind, policy, &status)),
                            None => return Err(e),
                        },
                    }
                }
            }
        }
    }
    log::debug!("setup {setup} done");
    Ok(SetupOutcome { records, skipped })
}

/// Runs every setup (in parallel) and gathers records in setup order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultSet> {
    cfg.validate()?;
    let outcomes = (0..cfg.n_setups)
        .into_par_iter()
        .map(|s| run_setup(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        records.extend(o.records);
        skipped.extend(o.skipped);
    }
    let n = &cfg.network;
    let costs = costmodel::cost_table(
        n.aps as u64,
        n.antennas_per_ap as u64,
        n.users as u64,
        n.tau_p as u64,
        n.tau_u as u64,
    )?;
    Ok(ResultSet {
        config: cfg.clone(),
        records,
        skipped,
        costs,
    })
}

/// Per-setup sum throughput `B * sum_k SE_k` in Mbit/s for each (combiner, policy).
pub fn sum_capacity(
    records: &[ResultRecord],
    bandwidth_hz: f64,
    users: usize,
) -> Result<Vec<CapacityRecord>> {
    let mut groups: BTreeMap<(usize, CombinerKind, PowerPolicy), Vec<Option<f64>>> =
        BTreeMap::new();
    for r in records {
        let slots = groups
            .entry((r.setup, r.combiner, r.policy))
            .or_insert_with(|| vec![None; users]);
        let slot = slots.get_mut(r.user).ok_or_else(|| {
            Error::Consistency(format!("user {} out of range for K = {users}", r.user))
        })?;
        if slot.replace(r.se).is_some() {
            return Err(Error::Consistency(format!(
                "duplicate record for setup {}, user {}, {} / {}",
                r.setup, r.user, r.combiner, r.policy
            )));
        }
    }
    groups
        .into_iter()
        .map(|((setup, combiner, policy), slots)| {
            let total = slots
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    s.ok_or_else(|| {
                        Error::Consistency(format!(
                            "setup {setup}, {combiner} / {policy}: missing user {k}"
                        ))
                    })
                })
                .sum::<Result<f64>>()?;
            Ok(CapacityRecord {
                setup,
                combiner,
                policy,
                capacity_mbps: bandwidth_hz * total / 1e6,
            })
        })
        .collect()
}
