use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use tracetopk::persist::Dataset;
use tracetopk::query::brute_force_topk;
use tracetopk::Measure;

fn run(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_tracetopk")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "tracetopk {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

/// (query, entity, degree) rows of a query CSV.
fn answers(path: &str) -> Vec<(String, String, f64)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|row| {
        let row = row.unwrap();
        (row[1].to_string(), row[3].to_string(), row[4].parse().unwrap())
    }).collect()
}

fn generate(dir: &TempDir) {
    run(&[
        "--seed", "7", "generate", "--entities", "300", "--side-length", "16", "--levels", "3", "--duration", "48",
        "--out", &p(dir, "traces.jsonl"), "--hierarchy-out", &p(dir, "hier.csv"),
    ]);
    run(&["ingest", "--traces", &p(dir, "traces.jsonl"), "--hierarchy", &p(dir, "hier.csv"), "--out", &p(dir, "ds.bin")]);
}

fn check_against_brute_force(dataset: &str, rows: &[(String, String, f64)], k: usize) {
    let ds = Dataset::load(dataset).unwrap();
    let seqs = ds.sequences().unwrap();
    let measure = Measure::adm(ds.index.height(), 1.0, 1.0).unwrap();
    let mut queries: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    queries.dedup();
    assert!(!queries.is_empty());
    for q in queries {
        let e = ds.entity_id(q).unwrap();
        let want = brute_force_topk(&seqs, &seqs[e as usize], Some(e), k, &measure).unwrap();
        let got: Vec<f64> = rows.iter().filter(|r| r.0 == q).map(|r| r.2).collect();
        let want: Vec<f64> = want.hits.iter().map(|h| h.degree).collect();
        assert_eq!(got.len(), want.len(), "query {q}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "query {q}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn build_query_update_round_trip() {
    let dir = TempDir::new().unwrap();
    generate(&dir);
    run(&["--seed", "7", "--hashes", "16", "build", "--dataset", &p(&dir, "ds.bin"), "--out", &p(&dir, "idx.bin")]);
    assert!(Path::new(&p(&dir, "idx.bin.manifest.json")).exists());

    run(&[
        "--seed", "7", "query", "--dataset", &p(&dir, "ds.bin"), "--index", &p(&dir, "idx.bin"), "--sample", "5", "--k", "5",
        "--out", &p(&dir, "answers.csv"), "--stats", &p(&dir, "stats.csv"),
    ]);
    let rows = answers(&p(&dir, "answers.csv"));
    assert_eq!(rows.len(), 25);
    check_against_brute_force(&p(&dir, "ds.bin"), &rows, 5);
    let stats = csv::Reader::from_path(p(&dir, "stats.csv")).unwrap().records().count();
    assert_eq!(stats, 5);

    let first = rows[0].0.clone();
    let index = tracetopk::SpIndex::from_csv(&std::fs::read_to_string(p(&dir, "hier.csv")).unwrap()).unwrap();
    let update = format!(
        "{{\"entity\":\"{first}\",\"location\":\"{loc}\",\"start\":0,\"end\":36000}}\n{{\"entity\":\"newcomer\",\"location\":\"{loc}\",\"start\":0,\"end\":7200}}\n",
        loc = index.name(index.base_units()[0]),
    );
    std::fs::write(p(&dir, "update.jsonl"), update).unwrap();
    run(&[
        "--seed", "7", "update", "--dataset", &p(&dir, "ds.bin"), "--index", &p(&dir, "idx.bin"), "--traces", &p(&dir, "update.jsonl"),
        "--dataset-out", &p(&dir, "ds2.bin"), "--index-out", &p(&dir, "idx2.bin"),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p(&dir, "idx2.bin.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["results"]["added"], 1);
    assert_eq!(manifest["results"]["updated"], 1);

    run(&[
        "--seed", "7", "query", "--dataset", &p(&dir, "ds2.bin"), "--index", &p(&dir, "idx2.bin"), "--entity", "newcomer",
        "--entity", &first, "--k", "5", "--out", &p(&dir, "answers2.csv"),
    ]);
    check_against_brute_force(&p(&dir, "ds2.bin"), &answers(&p(&dir, "answers2.csv")), 5);
}

#[test]
fn mismatched_seed_or_dataset_is_rejected() {
    let dir = TempDir::new().unwrap();
    generate(&dir);
    run(&["--seed", "7", "--hashes", "8", "build", "--dataset", &p(&dir, "ds.bin"), "--out", &p(&dir, "idx.bin")]);
    let bin = env!("CARGO_BIN_EXE_tracetopk");
    let out = Command::new(bin)
        .args(["--seed", "8", "query", "--dataset", &p(&dir, "ds.bin"), "--index", &p(&dir, "idx.bin"), "--sample", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    run(&["--seed", "9", "generate", "--entities", "50", "--side-length", "16", "--levels", "3", "--out", &p(&dir, "t2.jsonl"), "--hierarchy-out", &p(&dir, "h2.csv"), "--dataset-out", &p(&dir, "ds_other.bin")]);
    let out = Command::new(bin)
        .args(["--seed", "7", "query", "--dataset", &p(&dir, "ds_other.bin"), "--index", &p(&dir, "idx.bin"), "--sample", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("different dataset"));
}

#[test]
fn analysis_commands_write_reports() {
    let dir = TempDir::new().unwrap();
    generate(&dir);
    let out = run(&["predict-pe", "--n", "256", "--t", "48", "--trace-size", "40", "--nc", "3", "--de", "0.2"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pe = report["predicted_pe"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pe), "{report}");

    run(&[
        "compare-measures", "--corpus", &p(&dir, "ds.bin"), "--k", "1,10", "--queries", "10", "--out", &p(&dir, "cmp.csv"),
    ]);
    let rows = csv::Reader::from_path(p(&dir, "cmp.csv")).unwrap().records().count();
    assert!(rows > 0);

    run(&[
        "--hashes", "8", "bench", "--entities", "200", "--nh", "8,16", "--queries", "10", "--update-batch", "10", "--mixes", "1.0,0.0",
        "--out", &p(&dir, "bench.csv"),
    ]);
    let rows = csv::Reader::from_path(p(&dir, "bench.csv")).unwrap().records().count();
    assert!(rows >= 2);
    assert!(Path::new(&p(&dir, "bench.csv.manifest.json")).exists());
}
