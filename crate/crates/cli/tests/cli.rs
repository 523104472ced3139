use std::path::Path;
use std::process::{Command, Output};

use prosoqa::harness::synthetic::{write_synthetic_corpus, SyntheticCorpusConfig};
use prosoqa::harness::{load_manifest, Split};

fn prosoqa(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prosoqa"))
        .arg("--cache-dir")
        .arg(cache)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(output: Output) -> String {
    assert!(
        output.status.success(),
        "exit {:?}\nstderr: {}",
        output.status,
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn corpus(dir: &Path, n_items: usize) -> String {
    let cfg = SyntheticCorpusConfig {
        n_items,
        ..Default::default()
    };
    write_synthetic_corpus(dir, &cfg).unwrap();
    dir.join("manifest.jsonl").to_string_lossy().into_owned()
}

#[test]
fn run_prints_a_results_row_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus(&tmp.path().join("corpus"), 16);
    let args = ["run", "--manifest", &manifest, "--k", "16", "--seeds", "0,1", "--test", "noise:2"];
    let first = ok(prosoqa(&tmp.path().join("cache-a"), &args));
    let second = ok(prosoqa(&tmp.path().join("cache-b"), &args));
    assert_eq!(first, second);
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 2, "{first}");
    assert!(lines[0].starts_with("condition_train"));
    assert!(lines[1].starts_with("natural\tnoise"), "{}", lines[1]);
}

#[test]
fn stepwise_commands_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let manifest = corpus(&tmp.path().join("corpus"), 12);
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();

    ok(prosoqa(&cache, &["units", "train", "--manifest", &manifest, "--k", "8", "--out", &p("codebook")]));
    ok(prosoqa(
        &cache,
        &["units", "encode", "--manifest", &manifest, "--codebook", &p("codebook"), "--dedup", "--out", &p("units.tsv")],
    ));
    let units = std::fs::read_to_string(p("units.tsv")).unwrap();
    let n_test = load_manifest(Path::new(&manifest)).unwrap().split(Split::Test).count();
    assert_eq!(units.lines().count(), 2 * n_test);

    ok(prosoqa(
        &cache,
        &["predict", "--manifest", &manifest, "--codebook", &p("codebook"), "--out", &p("predictions.tsv")],
    ));
    let table = ok(prosoqa(&cache, &["eval", "--manifest", &manifest, "--predictions", &p("predictions.tsv")]));
    assert_eq!(table.lines().count(), 2, "{table}");
}

#[test]
fn sweep_prints_one_row_per_cutoff_and_rejects_nyquist() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let manifest = corpus(&tmp.path().join("corpus"), 8);
    let table = ok(prosoqa(&cache, &["sweep", "--manifest", &manifest, "--k", "8", "--cutoffs", "600,1200"]));
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "{table}");
    assert!(rows[0].starts_with("600\t") && rows[1].starts_with("1200\t"), "{table}");

    let bad = prosoqa(&cache, &["sweep", "--manifest", &manifest, "--k", "8", "--cutoffs", "600,8000"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("8000"));
}

#[test]
fn mix_and_shuffle_write_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let primary = corpus(&tmp.path().join("a"), 6);
    let other = corpus(&tmp.path().join("b"), 10);
    let mixed = tmp.path().join("mixed.jsonl");
    let add = format!("{other}:0.5:extra");
    ok(prosoqa(&cache, &["mix", "--manifest", &primary, "--add", &add, "--out", &mixed.to_string_lossy()]));
    let m = load_manifest(&mixed).unwrap();
    assert_eq!(m.len(), 6 + 5);
    assert_eq!(m.records.iter().filter(|r| r.id.ends_with("@extra")).count(), 5);

    let shuffled = tmp.path().join("shuffled.jsonl");
    ok(prosoqa(&cache, &["shuffle-pairs", "--manifest", &other, "--seed", "4", "--out", &shuffled.to_string_lossy()]));
    let before = load_manifest(Path::new(&other)).unwrap();
    let after = load_manifest(&shuffled).unwrap();
    for (a, b) in before.split(Split::Test).zip(after.split(Split::Test)) {
        assert_eq!(a.question, b.question);
        assert_ne!(a.document, b.document);
    }
}

#[test]
fn condition_transforms_files_and_rejects_unknown_names() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    corpus(&tmp.path().join("corpus"), 2);
    let input = tmp.path().join("corpus/audio/item0000_q.wav");
    let out_dir = tmp.path().join("out");
    ok(prosoqa(
        &cache,
        &["condition", "--condition", "prosodic:400", "--input", &input.to_string_lossy(), "--out", &out_dir.to_string_lossy()],
    ));
    assert!(out_dir.join("item0000_q.prosodic400.wav").exists());

    let bad = prosoqa(
        &cache,
        &["condition", "--condition", "whisper", "--input", &input.to_string_lossy(), "--out", &out_dir.to_string_lossy()],
    );
    assert!(!bad.status.success());
}
