use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clare::clre::{load_binary, read_raw};
use clare::data::read_csv_table;
use clare::evaluate::read_metadata;
use clare::Codec;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clare"))
}

fn dataset() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/rank5.csv")
}

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/rank5.conf")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn evaluate(out: &Path, extra: &[&str]) -> Output {
    run(bin()
        .arg("evaluate")
        .arg("--config")
        .arg(config())
        .arg("--out")
        .arg(out)
        .args(extra))
}

fn qd_from(stdout: &str) -> Option<usize> {
    let rest = stdout.split("qualifying dimension ").nth(1)?;
    rest.split(',').next()?.trim().parse().ok()
}

#[test]
fn shipped_rank_five_data_qualifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = evaluate(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let qd = qd_from(&text).expect("qualifying dimension printed");
    assert!(qd <= 5);
    assert!(text.contains(&format!("{}:1", (128.0 / qd as f64).round() as u64)));
}

#[test]
fn criterion_not_met_exits_two_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = evaluate(dir.path(), &["--set", "latent_dim_to=3"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("criterion not met within grid"));
    let cv = read_raw(dir.path().join("cv.clre")).unwrap();
    assert_eq!((cv.rows, cv.cols), (200, 3));
    assert!(!dir.path().join("codec.clre").exists());
}

#[test]
fn missing_data_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = evaluate(dir.path(), &["--data", "/nonexistent/input.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/input.csv"), "{}", stderr(&o));
}

#[test]
fn config_errors_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "learn = pca\n# ok\nlatent_dim_by = zero\n").unwrap();
    let o = run(bin().arg("evaluate").arg("-c").arg(&conf));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.conf:3"), "{}", stderr(&o));

    let o = run(bin().args(["evaluate", "--set", "colour=blue"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn same_config_and_seed_give_identical_directories() {
    for learn in ["pca", "dwt"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let grid = ["--set", "latent_dim_to=6"];
        evaluate(a.path(), &[&["--learn", learn, "--threads", "1"][..], &grid].concat());
        evaluate(b.path(), &[&["--learn", learn, "--threads", "4"][..], &grid].concat());
        let (fa, fb) = (dir_bytes(a.path()), dir_bytes(b.path()));
        assert!(fa.len() >= 8);
        assert_eq!(fa, fb, "{learn}");
    }
}

#[test]
fn written_files_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = evaluate(dir.path(), &["--set", "latent_dim_to=6"]);
    assert_eq!(o.status.code(), Some(0));
    let d = dir.path();
    let summary = read_csv_table(d.join("summary.csv"), false).unwrap();
    assert_eq!((summary.rows, summary.cols), (6, 7));
    let heat = read_csv_table(d.join("heatmap.csv"), false).unwrap();
    assert_eq!(heat.rows, 200);
    assert_eq!(read_raw(d.join("train.clre")).unwrap().rows, 200);
    let meta = read_metadata(d.join("metadata.txt")).unwrap();
    assert!(meta.iter().any(|(k, v)| k == "learn" && v == "pca"));
    let codec = Codec::load(d.join("codec.clre")).unwrap();
    let recon = load_binary(d.join("reconstruction.clre")).unwrap();
    assert_eq!((recon.n(), recon.t()), (200, 128));
    assert_eq!(codec.t(), 128);
    for svg in ["summary.svg", "heatmap.svg", "ratio.svg", "reconstruction.svg"] {
        let text = std::fs::read_to_string(d.join(svg)).unwrap();
        assert!(text.starts_with("<?xml") && text.trim_end().ends_with("</svg>"), "{svg}");
    }
}

#[test]
fn compare_ranks_pca_first() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .arg("compare")
        .arg("-c")
        .arg(config())
        .args(["--learn", "dwt,pca,pca", "--out"])
        .arg(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(lines[0].starts_with("1. pca"), "{lines:?}");
    let ranking = std::fs::read_to_string(dir.path().join("ranking.csv")).unwrap();
    let rows: Vec<&str> = ranking.lines().skip(1).collect();
    assert!(rows[0].starts_with("1,2,pca,"));
    assert!(rows[1].starts_with("2,3,pca,"));
    assert!(rows[2].starts_with("3,1,dwt,"));
    // Duplicate entries produce identical reports.
    let a = std::fs::read(dir.path().join("2_pca/cv.clre")).unwrap();
    let b = std::fs::read(dir.path().join("3_pca/cv.clre")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn compare_names_a_failing_learner() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .arg("compare")
        .arg("-c")
        .arg(config())
        .args(["--learn", "pca,dwt.2d", "--out"])
        .arg(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("dwt.2d"), "{}", stderr(&o));
}

#[test]
fn subsample_writes_one_directory_per_size_and_learner() {
    let runs: Vec<PathBuf> = (0..2)
        .map(|seed| {
            let dir = tempfile::tempdir().unwrap().keep();
            let o = run(bin()
                .arg("subsample")
                .arg("-c")
                .arg(config())
                .args(["--learn", "pca,dwt", "--sizes", "100,50", "--seed", &seed.to_string()])
                .args(["--set", "latent_dim_to=6", "--out"])
                .arg(&dir));
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            assert_eq!(stdout(&o).lines().count(), 4);
            dir
        })
        .collect();
    for name in ["n100_pca", "n100_dwt", "n50_pca", "n50_dwt"] {
        let meta = read_metadata(runs[0].join(name).join("metadata.txt")).unwrap();
        assert!(meta.iter().any(|(k, v)| k == "folds" && v == "loo"), "{name}");
    }
    assert!(runs[0].join("summary_grid.svg").exists());
    let a = std::fs::read(runs[0].join("n50_pca/cv.clre")).unwrap();
    let b = std::fs::read(runs[1].join("n50_pca/cv.clre")).unwrap();
    assert_ne!(a, b);
    for dir in runs {
        std::fs::remove_dir_all(dir).unwrap();
    }
}

#[test]
fn apply_round_trip_matches_training_losses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(evaluate(d, &[]).status.code(), Some(0));
    let codec = d.join("codec.clre");
    let k = Codec::load(&codec).unwrap().k();

    let o = run(bin().arg("apply").arg("--codec").arg(&codec).arg("--data").arg(dataset())
        .args(["--direction", "encode", "--out"]).arg(d.join("z.csv")));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let z = read_csv_table(d.join("z.csv"), false).unwrap();
    assert_eq!((z.rows, z.cols), (200, k));

    let o = run(bin().arg("apply").arg("--codec").arg(&codec).arg("--data").arg(d.join("z.csv"))
        .args(["--direction", "decode", "--out"]).arg(d.join("x.clre")));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read_raw(d.join("x.clre")).unwrap().cols, 128);

    let o = run(bin().arg("apply").arg("--codec").arg(&codec).arg("--data").arg(dataset())
        .args(["--direction", "roundtrip", "--out"]).arg(d.join("rt.csv")));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let losses = read_csv_table(d.join("rt.losses.csv"), false).unwrap();
    let train = read_raw(d.join("train.clre")).unwrap();
    let summary = read_csv_table(d.join("summary.csv"), false).unwrap();
    let col = (0..summary.rows).position(|j| summary.values[j * summary.cols] as usize == k).unwrap();
    for i in 0..200 {
        assert!(losses.values[i * 2 + 1] <= train.row(i)[col] + 1e-12, "row {i}");
    }

    let o = run(bin().arg("apply").arg("--codec").arg(&codec).arg("--data").arg(d.join("z.csv"))
        .args(["--direction", "encode", "--out"]).arg(d.join("bad.csv")));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("shape"), "{}", stderr(&o));
}
