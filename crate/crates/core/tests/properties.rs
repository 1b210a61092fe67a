use cellfree::combining::{CombinerKind, Processing, Scheme};
use cellfree::costmodel::{complexity, fronthaul, CostQuery, Rational};
use cellfree::linalg;
use cellfree::performance::{spectral_efficiency, PrelogForm};
use cellfree::scenario::{assign_pilots, local_scattering, pathloss_db, PathLossParams};
use proptest::prelude::*;

proptest! {
    #[test]
    fn pathloss_never_increases_gain_with_distance(d in 0.0f64..5000.0, step in 0.0f64..500.0) {
        let p = PathLossParams::default();
        prop_assert!(pathloss_db(d + step, &p) <= pathloss_db(d, &p) + 1e-12);
    }

    #[test]
    fn local_scattering_is_hermitian_psd(
        n_a in 1usize..9,
        phi in -std::f64::consts::PI..std::f64::consts::PI,
        asd_deg in 0.5f64..40.0,
        beta in 1e-15f64..1.0,
    ) {
        let r = local_scattering(n_a, phi, asd_deg.to_radians(), beta);
        prop_assert!(linalg::is_hermitian(&r));
        prop_assert!(linalg::check_hermitian_psd(&r, "R").is_ok());
        prop_assert!((linalg::trace_re(&r) - beta * n_a as f64).abs() <= 1e-12 * beta * n_a as f64);
    }

    #[test]
    fn pilots_partition_users_evenly(users in 1usize..40, tau_p in 1usize..12) {
        let pilots = assign_pilots(users, tau_p);
        prop_assert_eq!(pilots.len(), users);
        let mut counts = vec![0usize; tau_p];
        for &p in &pilots {
            prop_assert!(p < tau_p);
            counts[p] += 1;
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn local_zf_costs_at_least_centralized_zf(
        aps in 1u64..128, n_a in 1u64..16, users in 1u64..64, tau_u in 1u64..400,
    ) {
        let q = |p| complexity(&CostQuery::new(CombinerKind::new(p, Scheme::Zf), aps, n_a, users, 1, tau_u).unwrap());
        prop_assert!(q(Processing::Distributed) >= q(Processing::Centralized));
        let rzf = complexity(&CostQuery::new(CombinerKind::centralized(Scheme::Rzf), aps, n_a, users, 1, tau_u).unwrap());
        prop_assert_eq!(rzf, q(Processing::Centralized));
    }

    #[test]
    fn distributed_fronthaul_exceeds_centralized_exactly_when_users_dominate(
        aps in 1u64..128, n_a in 1u64..16, users in 1u64..64, tau_p in 0u64..20, tau_u in 1u64..400,
    ) {
        let c = fronthaul(Processing::Centralized, aps, n_a, users, tau_p, tau_u);
        let d = fronthaul(Processing::Distributed, aps, n_a, users, tau_p, tau_u);
        let threshold = Rational::new((n_a * (tau_p + tau_u)) as i128, tau_u as i128);
        prop_assert_eq!(d > c, Rational::from(users as i128) > threshold);
    }

    #[test]
    fn spectral_efficiency_increases_with_sinr(g in 0.0f64..1e6, dg in 1e-6f64..10.0) {
        let se = |x| spectral_efficiency(x, 5, 195, PrelogForm::AsPrinted).unwrap();
        prop_assert!(se(g + dg) > se(g));
    }
}
