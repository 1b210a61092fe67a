use std::cell::Cell;

use cellfree::combining::{CombinerKind, Processing, Scheme};
use cellfree::costmodel::{complexity, cost_table, fronthaul, CostQuery, Rational};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M = DMatrix<Complex64>;

/// Naive dense kernels that count every complex multiplication.
#[derive(Default)]
struct Counter(Cell<u64>);

impl Counter {
    fn mul(&self, a: Complex64, b: Complex64) -> Complex64 {
        self.0.set(self.0.get() + 1);
        a * b
    }

    fn count(&self) -> u64 {
        self.0.get()
    }

    fn matmul(&self, a: &M, b: &M) -> M {
        M::from_fn(a.nrows(), b.ncols(), |i, j| {
            (0..a.ncols()).map(|t| self.mul(a[(i, t)], b[(t, j)])).sum()
        })
    }

    /// Sum of outer products of the columns of `h`.
    fn gram_outer(&self, h: &M) -> M {
        let n = h.nrows();
        let mut out = M::zeros(n, n);
        for k in 0..h.ncols() {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += self.mul(h[(i, k)], h[(j, k)].conj());
                }
            }
        }
        out
    }

    /// In-place Gauss-Jordan inversion, `n^3` multiplications.
    fn invert(&self, mut a: M) -> M {
        let n = a.nrows();
        for p in 0..n {
            let piv = Complex64::new(1.0, 0.0) / a[(p, p)];
            a[(p, p)] = Complex64::new(1.0, 0.0);
            for j in 0..n {
                let apj = a[(p, j)];
                a[(p, j)] = self.mul(apj, piv);
            }
            for i in (0..n).filter(|&i| i != p) {
                let f = a[(i, p)];
                a[(i, p)] = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let apj = a[(p, j)];
                    a[(i, j)] -= self.mul(f, apj);
                }
            }
        }
        a
    }

    /// `d_k^H y` for every user; one channel use.
    fn combine(&self, d: &M, y: &M) {
        let _ = self.matmul(&d.adjoint(), y);
    }
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> M {
    M::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

fn diagonal_boost(mut a: M) -> M {
    for i in 0..a.nrows() {
        a[(i, i)] += Complex64::new(1.0, 0.0);
    }
    a
}

/// Multiplications per channel use of a naive implementation: per-block work over `tau_u` plus per-use combining.
fn measured(
    kind: CombinerKind,
    aps: usize,
    n_a: usize,
    users: usize,
    tau_u: u64,
    rng: &mut ChaCha8Rng,
) -> Rational {
    let m = aps * n_a;
    let c = Counter::default();
    let h = random(m, users, rng);
    let y = random(m, 1, rng);
    let local = |l: usize| h.rows(l * n_a, n_a).into_owned();
    let per_use = match (kind.processing, kind.scheme) {
        (Processing::Centralized, Scheme::Mr) | (Processing::Distributed, Scheme::Mr) => {
            c.combine(&h, &y);
            c.count()
        }
        (Processing::Centralized, Scheme::Zf | Scheme::Rzf) => {
            let gram = c.matmul(&h.adjoint(), &h);
            let d = c.matmul(&h, &c.invert(diagonal_boost(gram)));
            let block = c.count();
            c.combine(&d, &y);
            return Rational::new(block as i128, tau_u as i128)
                + Rational::from((c.count() - block) as i128);
        }
        (Processing::Centralized, Scheme::Mmse) => {
            let cov = c.gram_outer(&h);
            let d = c.matmul(&c.invert(diagonal_boost(cov)), &h);
            let block = c.count();
            c.combine(&d, &y);
            return Rational::new(block as i128, tau_u as i128)
                + Rational::from((c.count() - block) as i128);
        }
        (Processing::Distributed, scheme) => {
            let mut vs = Vec::new();
            for l in 0..aps {
                let hl = local(l);
                vs.push(match scheme {
                    Scheme::Mmse => c.matmul(&c.invert(diagonal_boost(c.gram_outer(&hl))), &hl),
                    _ => c.matmul(&hl, &c.invert(diagonal_boost(c.matmul(&hl.adjoint(), &hl)))),
                });
            }
            let block = c.count();
            for (l, v) in vs.iter().enumerate() {
                c.combine(v, &y.rows(l * n_a, n_a).into_owned());
            }
            return Rational::new(block as i128, tau_u as i128)
                + Rational::from((c.count() - block) as i128);
        }
    };
    Rational::from(per_use as i128)
}

#[test]
fn counter_inversion_is_correct() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = diagonal_boost(random(4, 4, &mut rng));
    let c = Counter::default();
    let inv = c.invert(a.clone());
    assert!((&a * inv - M::identity(4, 4)).norm() < 1e-12);
    assert_eq!(c.count(), 64);
}

#[test]
fn formulas_match_instrumented_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (aps, n_a, users, tau_u) in [(2, 4, 3, 7), (4, 2, 2, 5), (2, 8, 4, 11), (4, 4, 3, 195)] {
        for kind in CombinerKind::ALL {
            let q = CostQuery::new(kind, aps, n_a, users, 1, tau_u).unwrap();
            let got = measured(
                kind,
                aps as usize,
                n_a as usize,
                users as usize,
                tau_u,
                &mut rng,
            );
            assert_eq!(complexity(&q), got, "{kind} at L={aps} N_a={n_a} K={users}");
        }
    }
}

#[test]
fn table_values_at_reference_configuration() {
    let q = |kind| complexity(&CostQuery::new(kind, 64, 4, 10, 5, 195).unwrap());
    let mr = q(CombinerKind::centralized(Scheme::Mr));
    let zf = q(CombinerKind::centralized(Scheme::Zf));
    let lzf = q(CombinerKind::local(Scheme::Zf));
    assert_eq!(mr, Rational::from(2560));
    assert_eq!(zf, Rational::new(551_400, 195));
    assert_eq!(lzf, Rational::new(614_400, 195));
    assert_eq!(zf, q(CombinerKind::centralized(Scheme::Rzf)));
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
fn fronthaul_ratio_without_pilots_is_users_over_antennas() {
    for (aps, n_a, users, tau_u) in [(64, 4, 10, 195), (3, 2, 7, 11)] {
        let c = fronthaul(Processing::Centralized, aps, n_a, users, 0, tau_u);
        let d = fronthaul(Processing::Distributed, aps, n_a, users, 0, tau_u);
        assert_eq!(
            Rational::new(d as i128, c as i128),
            Rational::new(users as i128, n_a as i128)
        );
    }
}

#[test]
fn cost_table_covers_all_combiners() {
    let table = cost_table(64, 4, 10, 5, 195).unwrap();
    assert_eq!(table.len(), 8);
    let mmse = table.iter().find(|r| r.combiner.name() == "mmse").unwrap();
    assert!(table.iter().all(|r| r.complexity <= mmse.complexity));
    assert_eq!(mmse.complexity_exact, "6195712/65");
    assert!(CostQuery::new(CombinerKind::centralized(Scheme::Mr), 0, 4, 10, 5, 195).is_err());
}
