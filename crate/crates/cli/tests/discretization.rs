use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use ltebounds::{empirical_moments, solve_bounds, AssumptionSpec, Direction, SolverConfig};
use ltebounds_cli::samples::{load_samples, BinMode, DiscretizationSpec};
use ltebounds_cli::{execute, Cli};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Files {
    _dir: tempfile::TempDir,
    obs: PathBuf,
    exp: PathBuf,
}

/// Continuous short-term values on [0, 100] with an optional covariate `x`.
fn write_samples(n: usize, seed: u64, with_covariate: bool) -> Files {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    let exp = dir.path().join("exp.csv");
    let mut o = String::from(if with_covariate { "y,s,d,x\n" } else { "y,s,d\n" });
    let mut e = String::from(if with_covariate { "s,d,z,x\n" } else { "s,d,z\n" });
    for _ in 0..n {
        let d = rng.random_range(0..2);
        let s: f64 = rng.random_range(0.0..100.0);
        let y = (s / 100.0 + rng.random_range(-0.2..0.2f64)).clamp(0.0, 1.0);
        let x = if rng.random::<bool>() { "a" } else { "b" };
        o.push_str(&format!("{y},{s},{d}"));
        o.push_str(&if with_covariate { format!(",{x}\n") } else { "\n".into() });
        let z = rng.random_range(0..2);
        let d = if rng.random::<f64>() < 0.15 + 0.7 * z as f64 { 1 } else { 0 };
        let s: f64 = rng.random_range(0.0..100.0);
        e.push_str(&format!("{s},{d},{z}"));
        e.push_str(&if with_covariate { format!(",{x}\n") } else { "\n".into() });
    }
    fs::write(&obs, o).unwrap();
    fs::write(&exp, e).unwrap();
    Files { _dir: dir, obs, exp }
}

fn spec(mode: BinMode, order: Direction) -> DiscretizationSpec {
    DiscretizationSpec { mode, order }
}

#[test]
fn pooled_quartiles() {
    let f = write_samples(1000, 1, false);
    let loaded = load_samples(&f.obs, &f.exp, &spec(BinMode::Quantile(4), Direction::Increasing), &[], None).unwrap();
    assert_eq!(loaded.support.k, 4);
    let cell = &loaded.cells[&Vec::<String>::new()];
    let mut counts = [0usize; 4];
    for r in &cell.obs {
        counts[r.s] += 1;
    }
    for r in &cell.exp {
        counts[r.s] += 1;
    }
    let pooled = (cell.obs.len() + cell.exp.len()) as f64;
    for c in counts {
        assert!((c as f64 - pooled / 4.0).abs() <= 1.0, "{counts:?}");
    }
}

#[test]
fn single_edge_on_binary_codes_is_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    let exp = dir.path().join("exp.csv");
    fs::write(&obs, "y,s,d\n0.1,0,0\n0.9,1,1\n0.4,1,0\n").unwrap();
    fs::write(&exp, "s,d,z\n0,0,1\n1,1,2\n").unwrap();
    let loaded = load_samples(&obs, &exp, &spec(BinMode::Edges(vec![0.5]), Direction::Increasing), &[], None).unwrap();
    assert_eq!(loaded.support.k, 2);
    assert!(loaded.discretization.is_identity());
    let s: Vec<usize> = loaded.cells[&Vec::<String>::new()].obs.iter().map(|r| r.s).collect();
    assert_eq!(s, vec![0, 1, 1]);
    assert_eq!(loaded.support.z_count, 2);
}

#[test]
fn reversed_bins_swap_the_monotonicity_direction() {
    let f = write_samples(800, 2, false);
    let edges = BinMode::Edges(vec![25.0, 50.0, 75.0]);
    let inc = load_samples(&f.obs, &f.exp, &spec(edges.clone(), Direction::Increasing), &[], Some((0.0, 1.0))).unwrap();
    let dec = load_samples(&f.obs, &f.exp, &spec(edges, Direction::Decreasing), &[], Some((0.0, 1.0))).unwrap();
    let moments = |l: &ltebounds_cli::samples::LoadedSamples| {
        let c = &l.cells[&Vec::<String>::new()];
        empirical_moments(&c.obs, &c.exp, &l.support, false).unwrap()
    };
    let cfg = SolverConfig::default();
    let a = solve_bounds(&moments(&dec), &AssumptionSpec::liv(), &cfg).unwrap();
    let b = solve_bounds(&moments(&inc), &AssumptionSpec::Liv { direction: Direction::Decreasing }, &cfg).unwrap();
    assert!(!a.is_infeasible());
    assert!(a.normalized.hausdorff(&b.normalized) <= 1e-7, "{} vs {}", a.normalized, b.normalized);
}

#[test]
fn discretization_is_deterministic() {
    let f = write_samples(500, 3, true);
    let s = spec(BinMode::Quantile(5), Direction::Increasing);
    let covs = vec!["x".to_string()];
    let a = load_samples(&f.obs, &f.exp, &s, &covs, None).unwrap();
    let b = load_samples(&f.obs, &f.exp, &s, &covs, None).unwrap();
    assert_eq!(a, b);
}

fn run_json(args: &[&str]) -> serde_json::Value {
    let cli = Cli::try_parse_from([&["ltebounds"], args].concat()).unwrap();
    let out = execute(&cli).unwrap();
    assert_eq!(out.code, 0, "{}", out.output);
    serde_json::from_str(&out.output).unwrap()
}

fn args<'a>(f: &'a Files, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "estimate",
        "--obs",
        f.obs.to_str().unwrap(),
        "--exp",
        f.exp.to_str().unwrap(),
        "--assumption",
        "liv",
        "--quantiles",
        "3",
        "--y-range",
        "0,1",
        "--format",
        "json",
    ];
    v.extend_from_slice(extra);
    v
}

fn weights_file(dir: &Path, rows: &[(&str, f64)]) -> PathBuf {
    let path = dir.join("weights.csv");
    let mut text = String::from("x,weight\n");
    for (x, w) in rows {
        text.push_str(&format!("{x},{w}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn single_stratum_with_unit_weight_equals_the_pooled_run() {
    let f = write_samples(400, 4, true);
    // Give every record the same covariate value.
    for p in [&f.obs, &f.exp] {
        let text = fs::read_to_string(p).unwrap().replace(",b\n", ",a\n");
        fs::write(p, text).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let w = weights_file(dir.path(), &[("a", 1.0)]);
    let pooled = run_json(&args(&f, &[]));
    let stratified = run_json(&args(&f, &["--covariates", "x", "--weights", w.to_str().unwrap()]));
    assert_eq!(pooled["result"]["interval"], stratified["result"]["interval"]);
}

#[test]
fn strata_aggregate_as_weighted_endpoint_sums() {
    let f = write_samples(600, 5, true);
    let dir = tempfile::tempdir().unwrap();
    let w = weights_file(dir.path(), &[("a", 0.25), ("b", 0.75)]);
    let doc = run_json(&args(&f, &["--covariates", "x", "--weights", w.to_str().unwrap()]));
    let strata = doc["result"]["strata"].as_array().unwrap();
    assert_eq!(strata.len(), 2);
    for end in ["lo", "hi"] {
        let sum: f64 = strata
            .iter()
            .map(|s| s["weight"].as_f64().unwrap() * s["bounds"]["interval"][end].as_f64().unwrap())
            .sum();
        assert!((sum - doc["result"]["interval"][end].as_f64().unwrap()).abs() <= 1e-12);
    }

    let bad = weights_file(dir.path(), &[("a", 0.5), ("b", 0.25)]);
    let cli = Cli::try_parse_from(
        [&["ltebounds"], &args(&f, &["--covariates", "x", "--weights", bad.to_str().unwrap()])[..]].concat(),
    )
    .unwrap();
    assert_eq!(execute(&cli).unwrap_err().exit_code(), 3);
}
