use num_bigint::BigInt;
use num_rational::BigRational;
use raylanding::angle_arith::{enum_parabolic_quadratic, misiurewicz_count_tricorn};
use raylanding::dynamics::Family;
use raylanding::landing::{cluster, land_angles, LandingTarget, DEFAULT_EPSILON};
use raylanding::measures::{
    convergence_report, measure_from_clusters, moment_distance, reference_sample, ExactMeasure,
    RowKind,
};
use raylanding::rays::RaySchedule;

#[test]
fn periodic_landings_approach_the_reference() {
    let s = RaySchedule::default();
    let angles = enum_parabolic_quadratic(7).unwrap();
    let recs: Vec<_> = land_angles(Family::Mandelbrot, &angles, LandingTarget::Parabolic { q: 7 }, &s)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let cs = cluster(&recs, DEFAULT_EPSILON).unwrap();
    let mu = measure_from_clusters(&cs, angles.len()).unwrap();
    assert!(mu.is_normalized());
    let reference = reference_sample(Family::Mandelbrot, 8192, 1, &s).unwrap();
    let d = moment_distance(&mu, &reference.measure, 4).unwrap();
    assert!(d <= 0.08, "moment distance {d}");

    // float weights agree with the exact pushforward, atom by atom
    let exact = ExactMeasure::pushforward(&cs);
    assert_eq!(exact.total(), BigRational::from_integer(BigInt::from(1)));
    for (id, (_, w)) in mu.atoms.iter().enumerate() {
        let q = &exact.weights[&id];
        let qf = q.numer().to_string().parse::<f64>().unwrap() / q.denom().to_string().parse::<f64>().unwrap();
        assert!((w - qf).abs() < 1e-15);
    }
}

#[test]
fn dropped_rays_lower_the_total_exactly() {
    let s = RaySchedule::default();
    let angles = enum_parabolic_quadratic(4).unwrap();
    let recs: Vec<_> = land_angles(Family::Mandelbrot, &angles, LandingTarget::Parabolic { q: 4 }, &s)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    // pretend the last two rays stalled
    let kept = &recs[..recs.len() - 2];
    let cs = cluster(kept, DEFAULT_EPSILON).unwrap();
    let mu = measure_from_clusters(&cs, angles.len()).unwrap();
    assert!((mu.total - 13.0 / 15.0).abs() < 1e-15);
}

#[test]
fn parabolic_rows_have_one_cluster_per_root() {
    let s = RaySchedule::default();
    let reference = reference_sample(Family::Mandelbrot, 512, 3, &s).unwrap();
    let idx: Vec<(u32, u32)> = (2..=8).map(|n| (n, 0)).collect();
    let report = convergence_report(Family::Mandelbrot, RowKind::Parabolic, &idx, &s, &reference, 8);
    for r in &report.rows {
        assert_eq!(r.clusters, Some(1 << (r.n - 1)), "n={}: {}", r.n, r.note);
        assert_eq!(r.cardinality as i128, r.expected_cardinality.unwrap());
        assert!(r.note.is_empty());
    }
}

#[test]
fn tricorn_rows_match_parity_counts() {
    let s = RaySchedule::default();
    let reference = reference_sample(Family::Tricorn, 256, 4, &s).unwrap();
    let idx: Vec<(u32, u32)> = (4..=10).map(|n| (n, n / 2 + 1)).collect();
    let report = convergence_report(Family::Tricorn, RowKind::Misiurewicz, &idx, &s, &reference, 8);
    for r in &report.rows {
        assert_eq!(r.cardinality as i128, misiurewicz_count_tricorn(r.n, r.k));
        assert_eq!(r.expected_cardinality, Some(misiurewicz_count_tricorn(r.n, r.k)));
        assert!(r.moment_distance.is_some());
    }
}

#[test]
fn invalid_rows_are_annotated_not_fatal() {
    let s = RaySchedule::default();
    let reference = reference_sample(Family::Mandelbrot, 64, 5, &s).unwrap();
    let report = convergence_report(Family::Mandelbrot, RowKind::Misiurewicz, &[(3, 1), (4, 2)], &s, &reference, 8);
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows[0].note.contains("empty"));
    assert_eq!(report.rows[1].cardinality, 3);
    let tricorn = convergence_report(Family::Tricorn, RowKind::Parabolic, &[(3, 0)], &s, &reference, 8);
    assert!(!tricorn.rows[0].note.is_empty());
}
