//! Receive combining: MR, ZF, RZF and MMSE, each in a centralized (length M) and a
//! local per-AP (length N_a) flavour.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Gram matrices with a larger condition number are treated as rank deficient.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Mr,
    Zf,
    Rzf,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Processing {
    Centralized,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CombinerKind {
    pub processing: Processing,
    pub scheme: Scheme,
}

impl CombinerKind {
    pub const fn new(processing: Processing, scheme: Scheme) -> Self {
        Self { processing, scheme }
    }

    pub const fn centralized(scheme: Scheme) -> Self {
        Self::new(Processing::Centralized, scheme)
    }

    pub const fn local(scheme: Scheme) -> Self {
        Self::new(Processing::Distributed, scheme)
    }

    /// All eight combiners, centralized first.
    pub const ALL: [CombinerKind; 8] = [
        Self::centralized(Scheme::Mr),
        Self::centralized(Scheme::Zf),
        Self::centralized(Scheme::Rzf),
        Self::centralized(Scheme::Mmse),
        Self::local(Scheme::Mr),
        Self::local(Scheme::Zf),
        Self::local(Scheme::Rzf),
        Self::local(Scheme::Mmse),
    ];

    pub fn is_centralized(&self) -> bool {
        self.processing == Processing::Centralized
    }

    pub fn name(&self) -> &'static str {
        match (self.processing, self.scheme) {
            (Processing::Centralized, Scheme::Mr) => "mr",
            (Processing::Centralized, Scheme::Zf) => "zf",
            (Processing::Centralized, Scheme::Rzf) => "rzf",
            (Processing::Centralized, Scheme::Mmse) => "mmse",
            (Processing::Distributed, Scheme::Mr) => "local-mr",
            (Processing::Distributed, Scheme::Zf) => "local-zf",
            (Processing::Distributed, Scheme::Rzf) => "local-rzf",
            (Processing::Distributed, Scheme::Mmse) => "local-mmse",
        }
    }
}

impl fmt::Display for CombinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase();
        let norm = if norm == "lsfd" {
            "local-mr".to_string()
        } else {
            norm
        };
        CombinerKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Parameter(format!("unknown combiner `{s}`")))
    }
}

impl TryFrom<String> for CombinerKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CombinerKind> for String {
    fn from(k: CombinerKind) -> Self {
        k.name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Vectors {
    /// Column `k` is `d_k` (M x K).
    Centralized(CMat),
    /// One N_a x K matrix per AP; column `k` of entry `l` is `v_kl`.
    Local(Vec<CMat>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSet {
    pub kind: CombinerKind,
    pub vectors: Vectors,
    /// Regularization used by centralized RZF.
    pub alpha: Option<f64>,
}

impl CombinerSet {
    pub fn centralized(&self) -> Option<&CMat> {
        match &self.vectors {
            Vectors::Centralized(d) => Some(d),
            Vectors::Local(_) => None,
        }
    }

    pub fn local(&self) -> Option<&[CMat]> {
        match &self.vectors {
            Vectors::Local(v) => Some(v),
            Vectors::Centralized(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        let finite = |m: &CMat| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        match &self.vectors {
            Vectors::Centralized(d) => finite(d),
            Vectors::Local(v) => v.iter().all(finite),
        }
    }
}

/// Parameters shared by all combiner constructions.
#[derive(Debug, Clone)]
pub struct CombinerParams {
    /// Power coefficients used by (local) MMSE.
    pub eta: Vec<f64>,
    /// Centralized RZF regularization; `None` means the noise power.
    pub alpha: Option<f64>,
}

impl CombinerParams {
    pub fn full_power(users: usize) -> Self {
        Self {
            eta: vec![1.0; users],
            alpha: None,
        }
    }
}

/// Builds any of the eight combiners.
pub fn build(
    kind: CombinerKind,
    state: &ChannelState,
    params: &CombinerParams,
) -> Result<CombinerSet> {
    let (p_u, noise) = (state.stats.ue_power, state.stats.noise_power);
    match (kind.processing, kind.scheme) {
        (Processing::Centralized, Scheme::Mr) => Ok(mr_centralized(state)),
        (Processing::Centralized, Scheme::Zf) => zf_centralized(state),
        (Processing::Centralized, Scheme::Rzf) => {
            rzf_centralized(state, params.alpha.unwrap_or(noise))
        }
        (Processing::Centralized, Scheme::Mmse) => mmse_centralized(state, &params.eta, p_u, noise),
        (Processing::Distributed, Scheme::Mr) => Ok(local_mr(state)),
        (Processing::Distributed, Scheme::Zf) => local_zf(state),
        (Processing::Distributed, Scheme::Rzf) => local_rzf(state),
        (Processing::Distributed, Scheme::Mmse) => local_mmse(state, &params.eta, p_u, noise),
    }
}

/// Columns of `H (H^H H + reg I)^-1`. With `reg == 0` the Gram matrix must be well conditioned.
fn pinv_columns(h: &CMat, reg: f64) -> Result<CMat> {
    let (rows, users) = h.shape();
    let gram = h.adjoint() * h;
    if reg == 0.0 {
        if rows < users {
            return Err(Error::DegenerateCombiner {
                reason: format!("{rows} antennas cannot separate {users} users"),
                condition: f64::INFINITY,
            });
        }
        let cond = linalg::hermitian_condition(&gram);
        if !(cond <= CONDITION_LIMIT) {
            return Err(Error::DegenerateCombiner {
                reason: "estimated channel matrix is rank deficient".into(),
                condition: cond,
            });
        }
    }
    let system = gram + CMat::identity(users, users).scale(reg);
    let x = linalg::solve_hpd(system, &h.adjoint(), "Gram matrix").map_err(|_| {
        Error::DegenerateCombiner {
            reason: "Gram matrix is not positive definite".into(),
            condition: f64::INFINITY,
        }
    })?;
    Ok(x.adjoint())
}

/// `d_k = h_hat_k`.
pub fn mr_centralized(state: &ChannelState) -> CombinerSet {
    CombinerSet {
        kind: CombinerKind::centralized(Scheme::Mr),
        vectors: Vectors::Centralized(state.h_hat.clone()),
        alpha: None,
    }
}

/// Pseudo-inverse combining: `d_k^H h_hat_k' = delta_kk'`.
pub fn zf_centralized(state: &ChannelState) -> Result<CombinerSet> {
    Ok(CombinerSet {
        kind: CombinerKind::centralized(Scheme::Zf),
        vectors: Vectors::Centralized(pinv_columns(&state.h_hat, 0.0)?),
        alpha: None,
    })
}

/// Rows of `(H^H H + alpha I)^-1 H^H`, conjugate transposed.
pub fn rzf_centralized(state: &ChannelState, alpha: f64) -> Result<CombinerSet> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!(
            "RZF regularization must be > 0, got {alpha}"
        )));
    }
    Ok(CombinerSet {
        kind: CombinerKind::centralized(Scheme::Rzf),
        vectors: Vectors::Centralized(pinv_columns(&state.h_hat, alpha)?),
        alpha: Some(alpha),
    })
}

fn check_eta(eta: &[f64], users: usize) -> Result<()> {
    if eta.len() != users {
        return Err(Error::Parameter(format!(
            "power vector has {} entries, expected {users}",
            eta.len()
        )));
    }
    if let Some(bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::Parameter(format!(
            "power coefficient {bad} outside [0, 1]"
        )));
    }
    Ok(())
}

/// `d_k = (p_u sum_k' eta_k' (h_hat_k' h_hat_k'^H + Theta_k') + sigma^2 I)^-1 h_hat_k`.
pub fn mmse_centralized(
    state: &ChannelState,
    eta: &[f64],
    p_u: f64,
    noise: f64,
) -> Result<CombinerSet> {
    let (users, m, n_a) = (
        state.users(),
        state.total_antennas(),
        state.antennas_per_ap(),
    );
    check_eta(eta, users)?;
    let mut cov = CMat::identity(m, m).scale(noise);
    for (k, &e) in eta.iter().enumerate() {
        if e == 0.0 {
            continue;
        }
        let hk = state.h_hat.column(k);
        cov += (hk * hk.adjoint()).scale(p_u * e);
        for l in 0..state.aps() {
            let mut block = cov.view_mut((l * n_a, l * n_a), (n_a, n_a));
            block += state.theta(k, l).scale(p_u * e);
        }
    }
    let d = linalg::solve_hpd(cov, &state.h_hat, "MMSE covariance")?;
    Ok(CombinerSet {
        kind: CombinerKind::centralized(Scheme::Mmse),
        vectors: Vectors::Centralized(d),
        alpha: None,
    })
}

fn per_ap<F>(state: &ChannelState, scheme: Scheme, f: F) -> Result<CombinerSet>
where
    F: Fn(usize, CMat) -> Result<CMat>,
{
    let vectors = (0..state.aps())
        .map(|l| f(l, state.local_estimates(l)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CombinerSet {
        kind: CombinerKind::local(scheme),
        vectors: Vectors::Local(vectors),
        alpha: None,
    })
}

/// `v_kl = h_hat_kl`.
pub fn local_mr(state: &ChannelState) -> CombinerSet {
    per_ap(state, Scheme::Mr, |_, h| Ok(h)).expect("local MR cannot fail")
}

/// Columns of `H_l (H_l^H H_l)^-1`; needs N_a >= K and a full-rank `H_l`.
pub fn local_zf(state: &ChannelState) -> Result<CombinerSet> {
    per_ap(state, Scheme::Zf, |_, h| pinv_columns(&h, 0.0))
}

/// Columns of `H_l (H_l^H H_l + sigma^2 I_K)^-1`.
pub fn local_rzf(state: &ChannelState) -> Result<CombinerSet> {
    let noise = state.stats.noise_power;
    per_ap(state, Scheme::Rzf, |_, h| pinv_columns(&h, noise))
}

/// Per-AP Wiener filter built from local estimates and local error covariances.
pub fn local_mmse(state: &ChannelState, eta: &[f64], p_u: f64, noise: f64) -> Result<CombinerSet> {
    check_eta(eta, state.users())?;
    let n_a = state.antennas_per_ap();
    per_ap(state, Scheme::Mmse, |l, h| {
        let mut cov = CMat::identity(n_a, n_a).scale(noise);
        for (k, &e) in eta.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            let hk = h.column(k);
            cov += (hk * hk.adjoint()).scale(p_u * e);
            cov += state.theta(k, l).scale(p_u * e);
        }
        linalg::solve_hpd(cov, &h, "local MMSE covariance")
    })
}
