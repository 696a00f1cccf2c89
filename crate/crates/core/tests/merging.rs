use emblouv_core::merging::{community_pair_distance, pair_distances};
use emblouv_core::{centroid, iterative_merge, merge_pass, EmbeddingMatrix, MergeConfig, Partition, StopReason};

fn at_angle(degrees: f64) -> [f64; 2] {
    let r = degrees.to_radians();
    [r.cos(), r.sin()]
}

/// Five communities of three identical nodes each. Directions: cluster A at
/// 0° and a, cluster B at 120° - a, 120°, 120° + a, where 1 - cos a = 0.05.
fn two_cluster_fixture() -> (EmbeddingMatrix, Partition) {
    let a = (0.95f64).acos().to_degrees();
    let directions = [0.0, a, 120.0 - a, 120.0, 120.0 + a];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &d) in directions.iter().enumerate() {
        for _ in 0..3 {
            rows.push(at_angle(d));
            labels.push(c);
        }
    }
    (EmbeddingMatrix::from_rows(&rows).unwrap(), Partition::from_labels(&labels))
}

#[test]
fn fixture_distance_table() {
    let (e, p) = two_cluster_fixture();
    let members = p.members();
    let direct = |i: usize, j: usize| {
        community_pair_distance(&e, &members[i], &centroid(&e, &members[j]).unwrap()).unwrap()
    };
    assert!((direct(0, 1) - 0.05).abs() < 1e-12);
    assert!((direct(2, 3) - 0.05).abs() < 1e-12);
    assert!((direct(3, 4) - 0.05).abs() < 1e-12);
    assert!((direct(0, 3) - 1.5).abs() < 1e-12);
    for (i, j, d) in pair_distances(&e, &p).unwrap() {
        let same_cluster = (i < 2) == (j < 2);
        if same_cluster && (i, j) != (2, 4) {
            assert!((d - 0.05).abs() < 1e-9, "{i}-{j}: {d}");
        } else {
            assert!(d > 0.15, "{i}-{j}: {d}");
        }
    }
}

#[test]
fn two_cluster_geometry_merges_to_two() {
    let (e, p) = two_cluster_fixture();
    let cfg = MergeConfig {
        t_initial: 0.1,
        alpha: 0.01,
        t_min: 0.05,
        ..MergeConfig::default()
    };
    let (out, trace) = iterative_merge(&p, &e, &cfg).unwrap();
    assert_eq!(out.community_count(), 2);
    assert_eq!(out.community_of(0), out.community_of(3));
    assert_eq!(out.community_of(6), out.community_of(14));
    assert_ne!(out.community_of(0), out.community_of(6));
    assert_eq!(trace.stop_reason, StopReason::ThresholdFloor);
}

#[test]
fn larger_threshold_never_leaves_more_communities() {
    let (e, p) = two_cluster_fixture();
    let mut previous = usize::MAX;
    for t in [0.02, 0.06, 0.2, 0.6, 1.0, 1.6] {
        let cfg = MergeConfig {
            t_initial: t,
            alpha: 0.01,
            t_min: 0.0,
            ..MergeConfig::default()
        };
        let (out, _) = iterative_merge(&p, &e, &cfg).unwrap();
        assert!(out.community_count() <= previous, "threshold {t}");
        previous = out.community_count();
    }
    assert_eq!(previous, 1);
}

fn scattered(n: usize, seed: u64) -> (EmbeddingMatrix, Partition) {
    let rows: Vec<[f64; 3]> = (0..n)
        .map(|v| {
            let x = (v as u64).wrapping_mul(6364136223846793005).wrapping_add(seed) % 1000;
            [((x % 10) as f64) - 3.0, ((x / 10 % 10) as f64) + 0.5, ((x / 100) as f64) * 0.2]
        })
        .collect();
    let labels: Vec<usize> = (0..n).map(|v| v % 17).collect();
    (EmbeddingMatrix::from_rows(&rows).unwrap(), Partition::from_labels(&labels))
}

#[test]
fn count_non_increasing_and_bounded_passes() {
    for seed in 0..20 {
        let (e, p) = scattered(120, seed);
        let cfg = MergeConfig {
            t_initial: 0.04 + 0.03 * seed as f64,
            alpha: 0.02,
            t_min: 0.01,
            it_max: 7,
            target_communities: Some(2),
            outer_max: 4,
        };
        let (out, trace) = iterative_merge(&p, &e, &cfg).unwrap();
        assert!(trace.passes() <= cfg.it_max * cfg.outer_max);
        let mut last = p.community_count();
        for it in &trace.iterations {
            assert!(it.community_count <= last);
            last = it.community_count;
        }
        assert_eq!(out.community_count(), last);
        let dense = Partition::from_dense(out.assignment().to_vec()).unwrap();
        assert_eq!(dense.community_count(), out.community_count());
        assert_eq!(out.node_count(), 120);
        let again = iterative_merge(&p, &e, &cfg).unwrap();
        assert_eq!(again, (out, trace));
    }
}

#[test]
fn target_stops_outer_loop() {
    let (e, p) = scattered(90, 5);
    let cfg = MergeConfig {
        t_initial: 0.3,
        alpha: 0.05,
        t_min: 0.1,
        target_communities: Some(4),
        ..MergeConfig::default()
    };
    let (out, trace) = iterative_merge(&p, &e, &cfg).unwrap();
    match trace.stop_reason {
        StopReason::TargetReached => assert!(out.community_count() <= 4),
        StopReason::Converged | StopReason::IterationCap => assert!(out.community_count() > 4),
        StopReason::ThresholdFloor => panic!("outer loop must decide the stop reason"),
    }
}

#[test]
fn merge_pass_is_idempotent_when_nothing_is_close() {
    let (e, p) = scattered(60, 1);
    let (once, merges) = merge_pass(&p, &e, 1e-6).unwrap();
    assert_eq!(merges, 0);
    assert_eq!(once, p);
}
