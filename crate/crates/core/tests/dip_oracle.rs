mod common;

use common::dip_oracle::dip_lp;
use common::simplex::minimize;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uniforce::diptest::dip_statistic;

const TOL: f64 = 1e-9;

#[test]
fn simplex_small_problems() {
    // min -x - y, x + 2y <= 4, 3x + y <= 6 => x = 1.6, y = 1.2
    let v = minimize(&[-1.0, -1.0], &[vec![1.0, 2.0], vec![3.0, 1.0]], &[4.0, 6.0]).unwrap();
    assert!((v + 2.8).abs() < 1e-9);
    let v = minimize(&[1.0], &[vec![-1.0]], &[-2.0]).unwrap();
    assert!((v - 2.0).abs() < 1e-9);
    assert!(minimize(&[1.0], &[vec![1.0], vec![-1.0]], &[1.0, -2.0]).is_none());
}

#[test]
fn oracle_reproduces_closed_forms() {
    assert!((dip_lp(&[0.0, 1.0]) - 0.25).abs() < TOL);
    let even: Vec<f64> = (0..9).map(f64::from).collect();
    assert!((dip_lp(&even) - 1.0 / 18.0).abs() < TOL);
}

#[test]
fn dip_matches_lp_oracle_on_uniform_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..=12 {
        for _ in 0..300 {
            let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let (a, b) = (dip_statistic(&xs).unwrap(), dip_lp(&xs));
            assert!((a - b).abs() < TOL, "n={n} dip={a} oracle={b} xs={xs:?}");
        }
    }
}

#[test]
fn dip_matches_lp_oracle_on_clumped_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 4..=12 {
        for _ in 0..200 {
            let xs: Vec<f64> = (0..n)
                .map(|_| {
                    let centre = [0.0, 3.0, 7.0][rng.random_range(0..3)];
                    centre + rng.random::<f64>()
                })
                .collect();
            let (a, b) = (dip_statistic(&xs).unwrap(), dip_lp(&xs));
            assert!((a - b).abs() < TOL, "n={n} dip={a} oracle={b} xs={xs:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn dip_matches_lp_oracle(
        xs in proptest::collection::btree_set(-1000i32..1000, 2..10)
    ) {
        let xs: Vec<f64> = xs.into_iter().map(|v| f64::from(v) / 7.0).collect();
        let (a, b) = (dip_statistic(&xs).unwrap(), dip_lp(&xs));
        prop_assert!((a - b).abs() < TOL, "dip={} oracle={}", a, b);
    }
}
