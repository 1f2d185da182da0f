//! Cross-module integration tests: the index against the linear-scan
//! oracle, probing schedules against planted distances, decoded set sizes
//! against cap volumes, and the tradeoff curve against its closed-form
//! endpoints.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphere_filters::decoder::decode_above;
use sphere_filters::filter_index::{FilterIndex, ProbeSchedule, QueryOptions};
use sphere_filters::oracle::linear_nn;
use sphere_filters::planner::{plan, tradeoff_curve_for_c, Regime};
use sphere_filters::product_code::ProductCode;
use sphere_filters::sphere_geometry::{
    cap_volume, sample_at_angle, sample_unit_vector, Angle, UnitVector,
};

fn angle(radians: f64) -> Angle {
    Angle::from_radians(radians).unwrap()
}

/// Builds an index over `n` uniform points with ids `0..n`, returning the
/// index together with the raw dataset in id order.
fn build_uniform_index(
    n: u64,
    d: u32,
    theta: Angle,
    kappa: f64,
    m: u32,
    code_seed: u64,
    data_seed: u64,
) -> (FilterIndex, Vec<UnitVector>) {
    let params = plan(Regime::Sparse, n, d, theta, 1.0, kappa, Some(m)).unwrap();
    let mut index = FilterIndex::from_plan(params, code_seed).unwrap();
    index.reserve_for_points(n as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let mut dataset = Vec::with_capacity(n as usize);
    for id in 0..n {
        let p = sample_unit_vector(d, &mut rng).unwrap();
        index.insert(id, &p).unwrap();
        dataset.push(p);
    }
    (index, dataset)
}

/// An exhaustive index query with a generous filter budget must return the
/// same nearest neighbor as the linear-scan oracle almost always; the rare
/// disagreements are true neighbors that never share a bucket.
#[test]
fn exhaustive_queries_agree_with_the_linear_scan_oracle() {
    const N: u64 = 512;
    const D: u32 = 32;
    const TRIALS: u64 = 200;
    const MIN_AGREEMENT: u64 = 190; // 95%
    let theta = angle(FRAC_PI_3);
    let (mut index, mut dataset) = build_uniform_index(N, D, theta, 16.0, 2, 21, 22);
    let planted_id = N;
    let mut agreements = 0u64;
    for trial in 0..TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(23_000 + trial);
        let q = sample_unit_vector(D, &mut rng).unwrap();
        let planted = sample_at_angle(&q, theta, &mut rng).unwrap();
        index.insert(planted_id, &planted).unwrap();
        dataset.push(planted.clone());

        let (oracle_id, _) = linear_nn(&dataset, &q).unwrap();
        let result = index
            .query_with(&q, theta, QueryOptions { exhaustive: true })
            .unwrap();
        if result.best.map(|(id, _)| id) == Some(oracle_id as u64) {
            agreements += 1;
        }

        dataset.pop();
        index.delete(planted_id).unwrap();
    }
    assert!(
        agreements >= MIN_AGREEMENT,
        "index agreed with linear_nn on {agreements}/{TRIALS} trials (need {MIN_AGREEMENT})"
    );
}

/// Closer planted neighbors surface in earlier probe intervals: the mean
/// first-hit interval must increase with the planted angle.
#[test]
fn probing_surfaces_closer_neighbors_in_earlier_intervals() {
    const N: u64 = 256;
    const D: u32 = 32;
    const TRIALS: u64 = 80;
    const INTERVALS: usize = 8;
    let plan_theta = angle(FRAC_PI_3);
    let (mut index, _) = build_uniform_index(N, D, plan_theta, 8.0, 2, 31, 32);
    let alpha_q = index.params().alpha_q;
    let schedule = ProbeSchedule::linear(alpha_q, INTERVALS).unwrap();
    let planted_id = N;

    let mut means = Vec::new();
    for (case, plant_radians) in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3].iter().enumerate() {
        let plant_angle = angle(*plant_radians);
        let target = angle(plant_radians + 1e-9);
        let mut hits = 0u64;
        let mut interval_sum = 0u64;
        for trial in 0..TRIALS {
            let mut rng = ChaCha8Rng::seed_from_u64(33_000 + 1000 * case as u64 + trial);
            let q = sample_unit_vector(D, &mut rng).unwrap();
            let planted = sample_at_angle(&q, plant_angle, &mut rng).unwrap();
            index.insert(planted_id, &planted).unwrap();
            let result = index.query_probed(&q, target, &schedule).unwrap();
            index.delete(planted_id).unwrap();
            if let Some(interval) = result.first_hit_interval {
                hits += 1;
                interval_sum += interval as u64;
            }
        }
        assert!(
            hits * 2 > TRIALS,
            "planted angle {plant_radians:.3}: only {hits}/{TRIALS} probed hits"
        );
        means.push(interval_sum as f64 / hits as f64);
    }
    assert!(
        means[0] < means[1] && means[1] < means[2],
        "mean first-hit interval must increase with planted angle: {means:?}"
    );
}

/// Over uniform random targets the expected decoded-set size is exactly
/// `t * C(alpha)`: each code word is a fixed unit vector, and the score of
/// a uniform target against any fixed direction has the cap distribution.
/// Checked for a plain code and a two-block product code.
#[test]
fn decoded_set_size_tracks_the_cap_volume() {
    const D: u32 = 8;
    const T_MIN: u64 = 2000;
    const ALPHA: f64 = 0.45;
    const TARGETS: u64 = 300;
    const FACTOR: f64 = 2.0;
    for (m, seed) in [(1u32, 41u64), (2, 42)] {
        let code = ProductCode::sample(D, T_MIN, m, seed).unwrap();
        let expected = code.t() as f64 * cap_volume(ALPHA, code.d_pad()).unwrap();
        assert!(
            expected >= 50.0,
            "m = {m}: expected size {expected:.1} too small to measure"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let mut total = 0usize;
        for _ in 0..TARGETS {
            let target = sample_unit_vector(code.d_pad(), &mut rng).unwrap();
            total += decode_above(&code, &target, ALPHA).unwrap().len();
        }
        let mean = total as f64 / TARGETS as f64;
        let ratio = mean / expected;
        assert!(
            (1.0 / FACTOR..=FACTOR).contains(&ratio),
            "m = {m}: mean decoded size {mean:.1} vs expected {expected:.1} (ratio {ratio:.3})"
        );
    }
}

/// The beta sweep pins its endpoints to the closed-form extreme rows, and
/// the exponents move monotonically between them.
#[test]
fn tradeoff_curve_endpoints_match_closed_forms() {
    // c = 2: endpoints (7/16, 0) and (0, 7/9), both hit exactly.
    let curve = tradeoff_curve_for_c(2.0, 101, Regime::Sparse).unwrap();
    let first = &curve[0];
    let last = &curve[100];
    assert_eq!(first.beta, 0.75);
    assert!((first.rho_q - 7.0 / 16.0).abs() < 1e-15, "rho_q {}", first.rho_q);
    assert_eq!(first.rho_u, 0.0);
    assert!((last.beta - 4.0 / 3.0).abs() < 1e-15);
    assert_eq!(last.rho_q, 0.0);
    assert!((last.rho_u - 7.0 / 9.0).abs() < 1e-15, "rho_u {}", last.rho_u);

    // Query exponent falls and update exponent rises across the sweep.
    for pair in curve.windows(2) {
        assert!(pair[1].rho_q <= pair[0].rho_q + 1e-12);
        assert!(pair[1].rho_u >= pair[0].rho_u - 1e-12);
    }

    // c = sqrt(2 + sqrt 2) is the approximation factor whose query-optimal
    // endpoint needs exactly quadratic space: rho_u = 1 at rho_q = 0.
    let c = (2.0 + 2.0_f64.sqrt()).sqrt();
    let curve = tradeoff_curve_for_c(c, 11, Regime::Sparse).unwrap();
    let last = curve.last().unwrap();
    assert!(last.rho_q.abs() < 1e-9, "rho_q {}", last.rho_q);
    assert!((last.rho_u - 1.0).abs() < 1e-9, "rho_u {}", last.rho_u);
}
