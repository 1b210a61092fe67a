//! Closed-form complexity and fronthaul counts.
//!
//! Complexity is counted in complex multiplications per channel use (exact rationals,
//! channel estimation excluded); fronthaul in complex scalars per coherence block.

use num_rational::Ratio;
use serde::Serialize;

use crate::combining::{CombinerKind, Processing, Scheme};
use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostQuery {
    pub method: CombinerKind,
    pub aps: u64,
    pub antennas_per_ap: u64,
    pub users: u64,
    pub tau_p: u64,
    pub tau_u: u64,
}

impl CostQuery {
    pub fn new(
        method: CombinerKind,
        aps: u64,
        antennas_per_ap: u64,
        users: u64,
        tau_p: u64,
        tau_u: u64,
    ) -> Result<Self> {
        if aps == 0 || antennas_per_ap == 0 || users == 0 || tau_u == 0 {
            return Err(Error::Parameter(
                "cost query needs positive L, N_a, K and tau_u".into(),
            ));
        }
        Ok(Self {
            method,
            aps,
            antennas_per_ap,
            users,
            tau_p,
            tau_u,
        })
    }

    /// M = L * N_a.
    pub fn total_antennas(&self) -> u64 {
        self.aps * self.antennas_per_ap
    }
}

/// Complex multiplications per channel use for the queried combiner.
pub fn complexity(q: &CostQuery) -> Rational {
    let m = q.total_antennas() as i128;
    let k = q.users as i128;
    let l = q.aps as i128;
    let n_a = q.antennas_per_ap as i128;
    let tau_u = q.tau_u as i128;
    let detection = Rational::from_integer(k * m);
    let per_block = match (q.method.processing, q.method.scheme) {
        (_, Scheme::Mr) => 0,
        (Processing::Centralized, Scheme::Zf | Scheme::Rzf) => 2 * k * k * m + k * k * k,
        (Processing::Centralized, Scheme::Mmse) => m * m * m + 2 * k * m * m,
        (Processing::Distributed, Scheme::Zf | Scheme::Rzf) => 2 * k * k * m + k * k * k * l,
        (Processing::Distributed, Scheme::Mmse) => m * n_a * n_a + 2 * k * m * n_a,
    };
    Rational::new(per_block, tau_u) + detection
}

/// Complex scalars sent over the fronthaul per coherence block.
pub fn fronthaul(
    processing: Processing,
    aps: u64,
    antennas_per_ap: u64,
    users: u64,
    tau_p: u64,
    tau_u: u64,
) -> u64 {
    match processing {
        Processing::Centralized => aps * antennas_per_ap * (tau_p + tau_u),
        Processing::Distributed => aps * users * tau_u,
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// One row of the complexity/fronthaul table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRecord {
    pub combiner: CombinerKind,
    /// Exact value as `numerator/denominator`.
    pub complexity_exact: String,
    pub complexity: f64,
    pub fronthaul: u64,
}

pub fn cost_table(
    aps: u64,
    antennas_per_ap: u64,
    users: u64,
    tau_p: u64,
    tau_u: u64,
) -> Result<Vec<CostRecord>> {
    CombinerKind::ALL
        .iter()
        .map(|&method| {
            let q = CostQuery::new(method, aps, antennas_per_ap, users, tau_p, tau_u)?;
            let c = complexity(&q);
            Ok(CostRecord {
                combiner: method,
                complexity_exact: format!("{}/{}", c.numer(), c.denom()),
                complexity: to_f64(&c),
                fronthaul: fronthaul(method.processing, aps, antennas_per_ap, users, tau_p, tau_u),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(method: CombinerKind) -> CostQuery {
        CostQuery::new(method, 64, 4, 10, 5, 195).unwrap()
    }

    #[test]
    fn table_values_at_reference_parameters() {
        assert_eq!(
            complexity(&q(CombinerKind::centralized(Scheme::Mr))),
            Rational::from_integer(2560)
        );
        assert_eq!(
            complexity(&q(CombinerKind::local(Scheme::Mr))),
            Rational::from_integer(2560)
        );
        let zf = complexity(&q(CombinerKind::centralized(Scheme::Zf)));
        assert_eq!(zf, Rational::new(36760, 13));
        assert_eq!(zf, complexity(&q(CombinerKind::centralized(Scheme::Rzf))));
        assert_eq!(
            complexity(&q(CombinerKind::local(Scheme::Zf))),
            Rational::new(40960, 13)
        );
        assert_eq!(
            complexity(&q(CombinerKind::centralized(Scheme::Mmse))),
            Rational::new(6195712, 65)
        );
        assert_eq!(
            complexity(&q(CombinerKind::local(Scheme::Mmse))),
            Rational::new(174592, 65)
        );
    }

    #[test]
    fn fronthaul_values() {
        assert_eq!(
            fronthaul(Processing::Centralized, 64, 4, 10, 5, 195),
            51_200
        );
        assert_eq!(
            fronthaul(Processing::Distributed, 64, 4, 10, 5, 195),
            124_800
        );
    }

    #[test]
    fn fronthaul_ratio_without_pilots() {
        let c = fronthaul(Processing::Centralized, 7, 3, 11, 0, 50);
        let d = fronthaul(Processing::Distributed, 7, 3, 11, 0, 50);
        assert_eq!(Ratio::new(d, c), Ratio::new(11, 3));
    }

    #[test]
    fn invalid_query() {
        assert!(CostQuery::new(CombinerKind::centralized(Scheme::Mr), 0, 4, 10, 5, 195).is_err());
        assert!(CostQuery::new(CombinerKind::centralized(Scheme::Mr), 4, 4, 10, 5, 0).is_err());
    }
}
