use std::path::Path;
use std::process::{Command, Output};

fn mtprep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtprep"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

#[test]
fn bleu_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "hyp.txt", "the cat sat on mat\n");
    write(dir.path(), "ref.txt", "the cat sat on the mat\n");
    let text = stdout(&mtprep(dir.path(), &["bleu", "--hyp", "hyp.txt", "--ref", "ref.txt"]));
    assert!(text.starts_with("BLEU = 57.89\n"), "{text}");
    let json = stdout(&mtprep(dir.path(), &["bleu", "--hyp", "hyp.txt", "--ref", "ref.txt", "--json"]));
    assert!(json.contains("\"score\": 57.89"), "{json}");
}

#[test]
fn bleu_with_truecasing() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cased.txt", "we met in Cairo today\nthe Nile is long\n");
    write(dir.path(), "hyp.txt", "we met in cairo today\n");
    write(dir.path(), "ref.txt", "we met in Cairo today\n");
    stdout(&mtprep(dir.path(), &["truecase-train", "--input", "cased.txt", "--output", "tc.model"]));
    let plain = stdout(&mtprep(dir.path(), &["bleu", "--hyp", "hyp.txt", "--ref", "ref.txt"]));
    let cased = stdout(&mtprep(
        dir.path(),
        &["bleu", "--hyp", "hyp.txt", "--ref", "ref.txt", "--truecase-model", "tc.model"],
    ));
    assert!(!plain.starts_with("BLEU = 100.00"));
    assert!(cased.starts_with("BLEU = 100.00"), "{cased}");
    stdout(&mtprep(dir.path(), &["truecase", "--model", "tc.model", "--input", "hyp.txt", "--output", "out.txt"]));
    assert_eq!(std::fs::read_to_string(dir.path().join("out.txt")).unwrap(), "we met in Cairo today\n");
}

#[test]
fn dedup_and_split_commands() {
    let dir = tempfile::tempdir().unwrap();
    let lines: String = (0..50).map(|i| format!("s{}\tt{}\n", i % 20, i % 20)).collect();
    write(dir.path(), "in.tsv", &lines);
    let table = stdout(&mtprep(dir.path(), &["dedup", "--input", "in.tsv", "--out", "d", "--audit"]));
    assert!(table.contains("dedup, 50, 20, 30"), "{table}");
    let table = stdout(&mtprep(
        dir.path(),
        &["split", "--input", "d/clean.tsv", "--out", "s", "--n-dev", "5", "--seed", "3"],
    ));
    assert!(table.contains("split, 20, 15, 5"), "{table}");
    let dev = std::fs::read_to_string(dir.path().join("s/dev.tsv")).unwrap();
    assert_eq!(dev.lines().count(), 5);
}

#[test]
fn bpe_learn_and_apply() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "in.tsv", "low lower newest\twidest newest\nlow low newest\tnewest widest low\n");
    stdout(&mtprep(dir.path(), &["bpe-learn", "--input", "in.tsv", "--merges", "10", "--output", "bpe.model"]));
    let model = std::fs::read_to_string(dir.path().join("bpe.model")).unwrap();
    assert!(model.starts_with("#bpe v1"), "{model}");
    stdout(&mtprep(dir.path(), &["bpe-apply", "--model", "bpe.model", "--input", "in.tsv", "--output", "seg.tsv"]));
    let seg = std::fs::read_to_string(dir.path().join("seg.tsv")).unwrap();
    assert_eq!(seg.lines().count(), 2);
    assert!(seg.contains("</w>"));
}

#[test]
fn dialect_train_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut labeled = String::new();
    for i in 0..40 {
        labeled += &format!("MSA\tماذا يريد الرجل {i}\n");
        labeled += &format!("DA\tعايز ايه ده {i}\n");
    }
    write(dir.path(), "train.tsv", &labeled);
    write(dir.path(), "text.txt", "ماذا يريد\nعايز ايه\nعايز ده\n");
    stdout(&mtprep(dir.path(), &["dialect-train", "--input", "train.tsv", "--output", "di.model"]));
    let report = stdout(&mtprep(dir.path(), &["dialect-report", "--model", "di.model", "--input", "text.txt"]));
    assert!(report.contains("msa = 1 (33.33%)"), "{report}");
    assert!(report.contains("da = 2 (66.67%)"), "{report}");
}

#[test]
fn qa_sweep_and_filter() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "in.tsv",
        "a b c d\ta b c d\nذهب الولد\tthe boy went\nCairo 2019 حدث\tCairo 2019 happened\n",
    );
    let sweep = stdout(&mtprep(dir.path(), &["qa", "--input", "in.tsv", "--sweep"]));
    assert!(sweep.contains("0.30\t1"), "{sweep}");
    let table = stdout(&mtprep(dir.path(), &["qa", "--input", "in.tsv", "--out", "q"]));
    assert!(table.contains("band, 3, 1, 2"), "{table}");
}

#[test]
fn failures_exit_nonzero_with_stage() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.tsv", "one\ttwo\nno tab here\n");
    let out = mtprep(dir.path(), &["dedup", "--input", "bad.tsv", "--out", "o"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage `input`") && err.contains("line 1"), "{err}");
    assert_eq!(std::fs::read_dir(dir.path().join("o")).unwrap().count(), 0);

    write(dir.path(), "a.ar", "1\n2\n3\n");
    write(dir.path(), "a.en", "1\n2\n");
    let out = mtprep(dir.path(), &["dedup", "--src", "a.ar", "--tgt", "a.en", "--out", "o2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line-count mismatch at line 2"));

    write(dir.path(), "run.toml", "output_dir = \"o3\"\n[input]\ntsv = \"missing.tsv\"\n");
    let out = mtprep(dir.path(), &["pipeline", "--config", "run.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.tsv"));
}

#[test]
fn mix_and_datasets() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.tsv", "a\tA\nb\tB\n");
    write(dir.path(), "d.tsv", "c\tC\n");
    let out = stdout(&mtprep(
        dir.path(),
        &["mix", "--preset", "msa-plus-da", "--msa", "opus-bible=m.tsv", "--da", "madar-gulf=d.tsv", "--out", "mix"],
    ));
    assert_eq!(out, "msa-train.tsv\t2\nda-train.tsv\t1\n");
    let list = stdout(&mtprep(dir.path(), &["datasets"]));
    assert!(list.contains("qatari-speech\tar\ten\t14700\tGulf"), "{list}");
}
