use uniforce::data::{generate, Shape, SyntheticSpec};
use uniforce::pipeline::{run_pipeline, run_repeats, sweep_kprime, PValueMethod, RunConfig};

fn three_blobs(seed: u64) -> uniforce::data::Dataset {
    generate(&SyntheticSpec {
        shape: Shape::Blobs {
            centers: vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]],
            std: 1.0,
        },
        n_points: 1500,
        seed,
    })
    .unwrap()
}

#[test]
fn separated_blobs_are_recovered() {
    let res = run_pipeline(
        &three_blobs(1),
        &RunConfig {
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(res.estimated_k, 3);
    assert!(res.ami.unwrap() >= 0.99);
}

#[test]
fn single_gaussian_stays_whole() {
    let ds = generate(&SyntheticSpec {
        shape: Shape::Blobs {
            centers: vec![vec![0.0, 0.0]],
            std: 1.0,
        },
        n_points: 2000,
        seed: 6,
    })
    .unwrap();
    let res = run_pipeline(&ds, &RunConfig::default()).unwrap();
    assert_eq!(res.estimated_k, 1);
}

#[test]
fn bootstrap_method_agrees_on_blobs() {
    let res = run_pipeline(
        &three_blobs(2),
        &RunConfig {
            k_prime: 20,
            pvalue_method: PValueMethod::Bootstrap,
            bootstrap_reps: 1000,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(res.estimated_k, 3);
}

#[test]
fn sweep_never_exceeds_vertex_count() {
    let ds = three_blobs(3);
    let rows = sweep_kprime(&ds, &RunConfig::default(), &[1, 2, 10, 30]).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].estimated_k, 1);
    assert!(rows[1].estimated_k <= 2);
    for row in &rows[2..] {
        assert_eq!(row.estimated_k, 3);
    }
}

#[test]
fn repeats_use_consecutive_seeds() {
    let summary = run_repeats(
        &three_blobs(4),
        &RunConfig {
            k_prime: 15,
            seed: 40,
            ..Default::default()
        },
        4,
    )
    .unwrap();
    let seeds: Vec<u64> = summary.runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![40, 41, 42, 43]);
    assert_eq!(summary.estimated_k.mean, 3.0);
    assert_eq!(summary.estimated_k.std, 0.0);
}

#[test]
fn json_is_deterministic_apart_from_timings() {
    let ds = three_blobs(5);
    let cfg = RunConfig {
        seed: 12,
        ..Default::default()
    };
    let strip = |mut b: uniforce::pipeline::ResultBundle| {
        b.timings_ms = Default::default();
        serde_json::to_string(&b).unwrap()
    };
    let a = strip(run_pipeline(&ds, &cfg).unwrap());
    let b = strip(run_pipeline(&ds, &cfg).unwrap());
    assert_eq!(a, b);
}
