use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use agenda_cli::manifest::RunManifest;

fn agenda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agenda"))
        .args(args)
        .env_remove("AGENDA_SEED")
        .output()
        .unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_flag_prints_usage_and_exits_64() {
    let out = agenda(&["parse", "--bogus"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(agenda(&[]).status.code(), Some(64));
    assert_eq!(agenda(&["--help"]).status.code(), Some(0));
}

#[test]
fn empty_input_dir_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty");
    fs::create_dir(&input).unwrap();
    let out = agenda(&["parse", "--input", s(&input), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no .txt page files"));
}

#[test]
fn parse_fixture_matches_golden_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let pages = fixtures().join("pages");
    for name in ["a", "b"] {
        let out = agenda(&["parse", "--input", s(&pages), "--out", s(&dir.path().join(name))]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a/tidy.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/tidy.csv")).unwrap());
    assert_eq!(a, fs::read(fixtures().join("tidy_expected.csv")).unwrap());

    let m = RunManifest::read(&dir.path().join("a")).unwrap();
    assert_eq!(m.command, "parse");
    assert_eq!(m.inputs.len(), 3);
    assert!(m.outputs.contains_key("tidy.csv"));
}

#[test]
fn malformed_page_name_fails_unless_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pages");
    fs::create_dir(&input).unwrap();
    for e in fs::read_dir(fixtures().join("pages")).unwrap() {
        let p = e.unwrap().path();
        fs::copy(&p, input.join(p.file_name().unwrap())).unwrap();
    }
    fs::write(input.join("notes.txt"), "L|hello\n").unwrap();
    let out = agenda(&["parse", "--input", s(&input), "--out", s(&dir.path().join("strict"))]);
    assert_eq!(out.status.code(), Some(2));
    let out_dir = dir.path().join("lenient");
    let out = agenda(&["parse", "--input", s(&input), "--out", s(&out_dir), "--lenient"]);
    assert!(out.status.success());
    let m = RunManifest::read(&out_dir).unwrap();
    assert_eq!(m.warnings.len(), 1);
    assert_eq!(
        fs::read(out_dir.join("tidy.csv")).unwrap(),
        fs::read(fixtures().join("tidy_expected.csv")).unwrap()
    );
}

#[test]
fn stale_upstream_refused_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let parsed = dir.path().join("parsed");
    assert!(
        agenda(&["parse", "--input", s(&fixtures().join("pages")), "--out", s(&parsed)])
            .status
            .success()
    );
    let tidy = parsed.join("tidy.csv");
    let mut text = fs::read_to_string(&tidy).unwrap();
    text.push_str("2013-03-07,hor,SWAN,extra words\r\n");
    fs::write(&tidy, text).unwrap();

    let corpus = dir.path().join("corpus");
    let out = agenda(&[
        "preprocess",
        "--corpus",
        s(&parsed),
        "--out",
        s(&corpus),
        "--min-term-count",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stale"));

    let out = agenda(&[
        "preprocess",
        "--corpus",
        s(&parsed),
        "--out",
        s(&corpus),
        "--min-term-count",
        "1",
        "--force",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!RunManifest::read(&corpus).unwrap().warnings.is_empty());
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "simulate",
        "topics",
        "--k",
        "3",
        "--vocab-size",
        "20",
        "--docs",
        "10",
        "--doc-len",
        "15",
    ];
    let run = |name: &str, extra: &[&str], env: Option<&str>| {
        let out_dir = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_agenda"));
        cmd.args(base)
            .args(extra)
            .arg("--out")
            .arg(&out_dir)
            .env_remove("AGENDA_SEED");
        if let Some(v) = env {
            cmd.env("AGENDA_SEED", v);
        }
        assert!(cmd.status().unwrap().success());
        out_dir
    };
    let by_env = run("env", &[], Some("77"));
    let by_flag = run("flag", &["--seed", "77"], Some("5"));
    let default = run("default", &[], None);
    assert_eq!(RunManifest::read(&by_env).unwrap().seeds, vec![77]);
    assert_eq!(RunManifest::read(&by_flag).unwrap().seeds, vec![77]);
    assert_eq!(
        RunManifest::read(&default).unwrap().seeds,
        vec![agenda_core::rng::DEFAULT_SEED]
    );
    let dtm = |d: &Path| fs::read(d.join("dtm.csv")).unwrap();
    assert_eq!(dtm(&by_env), dtm(&by_flag));
    assert_ne!(dtm(&by_env), dtm(&default));

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_agenda"));
    cmd.args(base)
        .arg("--out")
        .arg(dir.path().join("bad"))
        .env("AGENDA_SEED", "abc");
    assert_eq!(cmd.output().unwrap().status.code(), Some(64));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let sim = [
        "simulate",
        "topics",
        "--k",
        "3",
        "--vocab-size",
        "30",
        "--docs",
        "20",
        "--doc-len",
        "20",
    ];
    assert!(agenda(&[&sim[..], &["--out", s(&corpus)]].concat()).status.success());
    let config = dir.path().join("run.toml");
    fs::write(&config, "k = 4\niters = 20\n").unwrap();

    let from_file = dir.path().join("file");
    let out = agenda(&[
        "fit-topics",
        "--corpus",
        s(&corpus),
        "--out",
        s(&from_file),
        "--config",
        s(&config),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = |d: &Path| fs::read_to_string(d.join("beta.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows(&from_file), 4);
    let m = RunManifest::read(&from_file).unwrap();
    assert_eq!(m.config["iters"], 20);
    assert_eq!(m.config["burn_in"], 10);
    assert!(m.inputs.keys().any(|k| k.ends_with("run.toml")));

    let from_flag = dir.path().join("flag");
    let args = [
        "fit-topics",
        "--corpus",
        s(&corpus),
        "--out",
        s(&from_flag),
        "--config",
        s(&config),
        "--k",
        "2",
    ];
    assert!(agenda(&args).status.success());
    assert_eq!(rows(&from_flag), 2);

    fs::write(&config, "topics = 4\n").unwrap();
    let out = agenda(&[
        "fit-topics",
        "--corpus",
        s(&corpus),
        "--out",
        s(&dir.path().join("x")),
        "--config",
        s(&config),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn model_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let panel = dir.path().join("panel");
    let sim = [
        "simulate",
        "events",
        "--periods",
        "6",
        "--n-governments",
        "1",
        "--n-elections",
        "1",
        "--p",
        "2",
    ];
    assert!(agenda(&[&sim[..], &["--out", s(&panel)]].concat()).status.success());
    // A hyper-mean prior this narrow has no density at the starting values.
    let events = dir.path().join("e");
    let args = [
        "fit-events",
        "--panel",
        s(&panel),
        "--out",
        s(&events),
        "--prior-sd-mu",
        "1e-300",
    ];
    let out = agenda(&args);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let corpus = dir.path().join("corpus");
    let sim = [
        "simulate",
        "topics",
        "--k",
        "2",
        "--vocab-size",
        "10",
        "--docs",
        "4",
        "--doc-len",
        "3",
    ];
    assert!(agenda(&[&sim[..], &["--out", s(&corpus)]].concat()).status.success());
    let out = agenda(&[
        "fit-topics",
        "--corpus",
        s(&corpus),
        "--out",
        s(&dir.path().join("t")),
        "--k",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn event_stages_write_tables_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    let steps: Vec<Vec<String>> = vec![
        vec![
            "simulate",
            "events",
            "--periods",
            "12",
            "--n-governments",
            "2",
            "--n-elections",
            "2",
            "--p",
            "3",
            "--out",
            s(&d("panel")),
        ],
        vec![
            "fit-events",
            "--panel",
            s(&d("panel")),
            "--out",
            s(&d("events")),
            "--iters",
            "200",
            "--chains",
            "2",
        ],
        vec![
            "compare",
            "--events",
            s(&d("events")),
            "--panel",
            s(&d("panel")),
            "--out",
            s(&d("compare")),
        ],
        vec![
            "outliers",
            "--events",
            s(&d("events")),
            "--panel",
            s(&d("panel")),
            "--out",
            s(&d("outliers")),
        ],
        vec![
            "figures",
            "--events",
            s(&d("events")),
            "--panel",
            s(&d("panel")),
            "--out",
            s(&d("figures")),
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        let out = agenda(&args);
        assert!(
            out.status.success(),
            "{}: {}",
            step[0],
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let summary = fs::read_to_string(d("events/summary.csv")).unwrap();
    assert!(summary.starts_with("param,unit,topic,mean,sd,q2.5,q97.5,rhat"));
    let draws = fs::read_to_string(d("events/draws.csv")).unwrap();
    assert!(draws.starts_with("param,g_or_e_or_cs,topic,chain,draw,value"));
    // Two chains of 100 kept draws per scalar.
    assert_eq!(draws.lines().filter(|l| l.starts_with("alpha,1,1,")).count(), 200);

    let govs = fs::read_to_string(d("compare/governments.csv")).unwrap();
    assert_eq!(govs.lines().count(), 2);
    let elections = fs::read_to_string(d("compare/elections.csv")).unwrap();
    assert_eq!(elections.lines().count(), 2);
    assert!(d("outliers/outliers.csv").exists());
    for f in [
        "prevalence_by_period.csv",
        "prevalence_hor.svg",
        "government_levels.csv",
        "government_levels.svg",
        "election_effects.csv",
        "election_effects.svg",
    ] {
        assert!(d("figures").join(f).exists(), "{f}");
    }
    let prevalence = fs::read_to_string(d("figures/prevalence_by_period.csv")).unwrap();
    // Both chambers, 12 periods, 3 groups.
    assert_eq!(prevalence.lines().count(), 1 + 2 * 12 * 3);
}

#[test]
fn shipped_golden_tables_have_one_row_per_comparison() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic/golden");
    let rows = |f: &str| fs::read_to_string(golden.join(f)).unwrap().lines().count() - 1;
    assert_eq!(rows("governments.csv"), 31);
    assert_eq!(rows("elections.csv"), 44);
}
