//! End-to-end tests of the `sphf` binary: exit codes, output formats,
//! run-to-run determinism, and agreement between the persisted pipeline
//! and an in-process replica.

use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphere_filters::cli::vecfile::read_vectors;
use sphere_filters::filter_index::FilterIndex;
use sphere_filters::planner::{plan, Regime};
use sphere_filters::sphere_geometry::{sample_unit_vector, Angle, UnitVector};

const THETA_PI_3: &str = "1.0471975511965976";

fn sphf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphf"))
        .args(args)
        .output()
        .expect("binary must launch")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes the binary vector format by hand, independently of the library's
/// writer: magic `SPHF`, u32 version 1, u32 count, u32 dim, binary32
/// little-endian coordinates in row-major order.
fn write_raw_vector_file(path: &Path, vectors: &[UnitVector]) {
    let dim = vectors[0].dim() as u32;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"SPHF");
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&dim.to_le_bytes());
    for v in vectors {
        for &x in v.as_slice() {
            bytes.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    std::fs::write(path, bytes).unwrap();
}

fn sample_vectors(count: usize, d: u32, seed: u64) -> Vec<UnitVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| sample_unit_vector(d, &mut rng).unwrap())
        .collect()
}

#[test]
fn plan_mode_prints_closed_form_exponents() {
    let out = sphf(&["--mode", "plan", "--n", "1024", "--d", "32", "--c", "2.0"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    // Balanced beta at c = 2 gives rho_q = rho_u = 1/7 exactly.
    assert!(stdout.contains("rho_q        0.14285714"), "stdout: {stdout}");
    assert!(stdout.contains("rho_u        0.14285714"), "stdout: {stdout}");
    assert!(stdout.contains("c            2.00000000"), "stdout: {stdout}");
    // The last line is the machine-readable plan.
    let json_line = stdout.lines().rev().find(|l| l.starts_with('{')).unwrap();
    let plan: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(plan["regime"], "sparse");
    assert_eq!(plan["n"], 1024);
    assert_eq!(plan["d"], 32);
}

#[test]
fn out_of_range_beta_exits_two_and_names_the_optimal_range() {
    let out = sphf(&[
        "--mode", "plan", "--n", "1024", "--d", "32", "--c", "2.0", "--beta", "2.7",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("optimal range"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn conflicting_angle_flags_exit_two() {
    let out = sphf(&[
        "--mode", "plan", "--n", "64", "--d", "8", "--theta", "1.0", "--c", "2.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("exactly one"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn missing_index_file_exits_two_with_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let vectors = dir.path().join("qs.csv");
    std::fs::write(&vectors, "1,0,0\n").unwrap();
    let missing = dir.path().join("no-such-index.bin");
    let out = sphf(&[
        "--mode",
        "query",
        "--index",
        missing.to_str().unwrap(),
        "--vectors",
        vectors.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("no-such-index.bin"),
        "stderr: {}",
        stderr_of(&out)
    );
}

/// Full persisted pipeline:  build from a raw vector file, query from a
/// second file, and reproduce every CSV row with an in-process index built
/// from the same plan, seed, and (binary32-quantized) points. Repeated
/// runs must be byte-identical.
#[test]
fn build_then_query_matches_an_in_process_replica() {
    const N: usize = 40;
    const D: u32 = 16;
    const QUERIES: usize = 6;
    const SEED: u64 = 5;
    const TARGET: f64 = 1.2;
    let dir = tempfile::tempdir().unwrap();
    let points_path = dir.path().join("points.sphf");
    let queries_path = dir.path().join("queries.sphf");
    write_raw_vector_file(&points_path, &sample_vectors(N, D, 51));
    write_raw_vector_file(&queries_path, &sample_vectors(QUERIES, D, 52));

    let index_path = dir.path().join("index.bin");
    let build_args = [
        "--mode",
        "build",
        "--vectors",
        points_path.to_str().unwrap(),
        "--index",
        index_path.to_str().unwrap(),
        "--theta",
        THETA_PI_3,
        "--m",
        "2",
        "--kappa",
        "4",
        "--seed",
        "5",
    ];
    let out = sphf(&build_args);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let summary: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    assert_eq!(summary["points"], N);
    assert_eq!(summary["dimension"], D);

    // Rebuilding writes a byte-identical index file.
    let index_copy = dir.path().join("index2.bin");
    let mut second_build: Vec<&str> = build_args.to_vec();
    second_build[5] = index_copy.to_str().unwrap();
    let out = sphf(&second_build);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(
        std::fs::read(&index_path).unwrap(),
        std::fs::read(&index_copy).unwrap(),
        "two builds from the same inputs diverged"
    );

    let csv_path = dir.path().join("results.csv");
    let query_args = [
        "--mode",
        "query",
        "--index",
        index_path.to_str().unwrap(),
        "--vectors",
        queries_path.to_str().unwrap(),
        "--target-angle",
        "1.2",
        "--out",
        csv_path.to_str().unwrap(),
    ];
    let out = sphf(&query_args);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();

    // Replica: same plan resolution (n from the file, beta defaulted) and
    // the same quantized points the binary read back.
    let theta = Angle::from_radians(THETA_PI_3.parse().unwrap()).unwrap();
    let params = plan(Regime::Sparse, N as u64, D, theta, 1.0, 4.0, Some(2)).unwrap();
    let mut index = FilterIndex::from_plan(params, SEED).unwrap();
    for (id, p) in read_vectors(&points_path).unwrap().iter().enumerate() {
        index.insert(id as u64, p).unwrap();
    }
    let target = Angle::from_radians(TARGET).unwrap();
    let mut expected = String::from(
        "# sphere-filters query csv v1\nquery,found,best_id,best_angle,candidates,buckets\n",
    );
    for (i, q) in read_vectors(&queries_path).unwrap().iter().enumerate() {
        let r = index.query(q, target).unwrap();
        let (best_id, best_angle) = match r.best {
            Some((id, angle)) => (id.to_string(), format!("{:.12}", angle.radians())),
            None => (String::new(), String::new()),
        };
        expected += &format!(
            "{i},{},{best_id},{best_angle},{},{}\n",
            r.found_within_target as u8, r.candidates_examined, r.buckets_visited
        );
    }
    assert_eq!(csv, expected, "persisted pipeline diverged from the replica");

    // Re-querying is deterministic too.
    let csv_copy = dir.path().join("results2.csv");
    let mut second_query: Vec<&str> = query_args.to_vec();
    second_query[9] = csv_copy.to_str().unwrap();
    let out = sphf(&second_query);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(csv, std::fs::read_to_string(&csv_copy).unwrap());
}

fn run_bench(dir: &Path, beta: &str, csv_name: &str) -> serde_json::Value {
    let csv_path = dir.join(csv_name);
    let out = sphf(&[
        "--mode",
        "bench",
        "--n",
        "512",
        "--d",
        "48",
        "--theta",
        THETA_PI_3,
        "--beta",
        beta,
        "--m",
        "2",
        "--kappa",
        "4",
        "--trials",
        "10",
        "--seed",
        "7",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    serde_json::from_str(stdout_of(&out).trim()).unwrap()
}

/// Two bench runs with one (config, seed) produce byte-identical CSVs, and
/// the planted recall at an easy small scale stays high. The instance must
/// be genuinely sparse (n^(2/d) below 1/sin^2 theta): past that density a
/// background point typically beats the planted pair, and recall measures
/// the dataset rather than the filters.
#[test]
fn bench_is_deterministic_and_recalls_planted_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("bench.csv");
    let args = [
        "--mode",
        "bench",
        "--n",
        "256",
        "--d",
        "48",
        "--theta",
        THETA_PI_3,
        "--m",
        "2",
        "--kappa",
        "6",
        "--trials",
        "25",
        "--seed",
        "42",
        "--out",
        csv_path.to_str().unwrap(),
    ];
    let out = sphf(&args);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let summary: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("# sphere-filters bench csv v1\n"));
    assert_eq!(csv.lines().count(), 2 + 25, "one row per trial plus headers");

    let recall = summary["recall"].as_f64().unwrap();
    assert!(recall >= 0.8, "recall {recall} too low for kappa 6 at d = 48");

    let csv_copy = dir.path().join("bench2.csv");
    let mut second: Vec<&str> = args.to_vec();
    second[17] = csv_copy.to_str().unwrap();
    let out = sphf(&second);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(csv, std::fs::read_to_string(&csv_copy).unwrap());
}

/// Raising beta trades update cost for query cost: measured buckets per
/// update increase with beta while measured buckets per query decrease.
#[test]
fn bench_beta_sweep_moves_costs_in_opposite_directions() {
    let dir = tempfile::tempdir().unwrap();
    let low = run_bench(dir.path(), "0.8", "b08.csv");
    let mid = run_bench(dir.path(), "1.0", "b10.csv");
    let high = run_bench(dir.path(), "1.25", "b125.csv");
    let upd = |s: &serde_json::Value| s["avg_buckets_update"].as_f64().unwrap();
    let qry = |s: &serde_json::Value| s["avg_buckets_query"].as_f64().unwrap();
    assert!(
        upd(&low) < upd(&mid) && upd(&mid) < upd(&high),
        "buckets/update not increasing in beta: {} {} {}",
        upd(&low),
        upd(&mid),
        upd(&high)
    );
    assert!(
        qry(&low) > qry(&mid) && qry(&mid) > qry(&high),
        "buckets/query not decreasing in beta: {} {} {}",
        qry(&low),
        qry(&mid),
        qry(&high)
    );
}

/// The curve CSV carries the closed-form endpoint rows for c = 2.
#[test]
fn curve_csv_pins_the_extreme_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("curve.csv");
    let out = sphf(&[
        "--mode",
        "curve",
        "--c",
        "2.0",
        "--curve-points",
        "9",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# sphere-filters curve csv v1"));
    assert_eq!(lines.next(), Some("beta,rho_u,rho_q"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    // beta = cos theta: (rho_u, rho_q) = (0, 7/16); beta = 1/cos theta:
    // (7/9, 0).
    assert_eq!(rows[0], "0.750000000000,0.000000000000,0.437500000000");
    assert_eq!(rows[8], "1.333333333333,0.777777777778,0.000000000000");
}
