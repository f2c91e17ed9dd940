use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use burstline::modelfile::{self, ModelFile};
use tempfile::TempDir;

const TABLE2: &str = include_str!("../presets/table2.toml");

fn burstline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_burstline"))
        .args(args)
        .env_remove("BURSTLINE_PRESET_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

#[test]
fn calibrate_recovers_the_preset_law() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("cal.csv");
    let model = dir.path().join("cluster.model");
    let o = burstline(&[
        "generate",
        "--kind",
        "loglaw",
        "--slope",
        "0.65",
        "--intercept",
        "6.5",
        "--counts",
        "1,2,4,8,16,32",
        "--out",
        p(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = burstline(&[
        "calibrate",
        "--kind",
        "loglaw",
        "--in",
        p(&csv),
        "--out",
        p(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("samples=6 rss="));
    let ModelFile::LogLaw(m) = modelfile::load(&model).unwrap() else {
        panic!("expected a log law")
    };
    assert!((m.slope() - 0.65).abs() < 1e-9 && (m.intercept() - 6.5).abs() < 1e-9);
    let text = fs::read_to_string(&model).unwrap();
    assert!(text.contains("label=cluster"));
}

#[test]
fn calibrate_split_with_noise_lands_near_the_generator() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("split.csv");
    let model = dir.path().join("split.model");
    let o = burstline(&[
        "generate",
        "--kind",
        "split",
        "--slope",
        "7.46",
        "--intercept",
        "231.18",
        "--counts",
        "0,10,20,40,80,160,320,600",
        "--noise",
        "0.01",
        "--seed",
        "4",
        "--out",
        p(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = burstline(&[
        "calibrate",
        "--kind",
        "split",
        "--in",
        p(&csv),
        "--out",
        p(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ModelFile::Split(m) = modelfile::load(&model).unwrap() else {
        panic!("expected a split model")
    };
    assert!(
        (m.slope_a() / 7.46 - 1.0).abs() < 0.02,
        "a = {}",
        m.slope_a()
    );
    assert!(
        (m.intercept_b() / 231.18 - 1.0).abs() < 0.02,
        "b = {}",
        m.intercept_b()
    );
    assert!(fs::read_to_string(&model).unwrap().contains("label=split"));
}

#[test]
fn calibrate_reports_bad_input() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.model");
    let bad = write(
        &dir,
        "bad.csv",
        "cores,elapsed_seconds\n1,10\n2,9\n3,8\n4,7\n5,6\n6,five\n7,4\n",
    );
    let o = burstline(&[
        "calibrate",
        "--kind",
        "loglaw",
        "--in",
        p(&bad),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));

    let thin = write(&dir, "thin.csv", "cores,elapsed_seconds\n4,100\n");
    let o = burstline(&[
        "calibrate",
        "--kind",
        "loglaw",
        "--in",
        p(&thin),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let o = burstline(&[
        "calibrate",
        "--kind",
        "loglaw",
        "--in",
        "/no/such.csv",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn plan_examples() {
    let o = burstline(&["plan", "--preset", "table2", "--surplus", "305.78"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(value(&text, "verdict"), Some("feasible"));
    assert_eq!(value(&text, "gamma"), Some("10"));
    for key in [
        "c_required",
        "correction_factor",
        "c_n",
        "checkpoint_seconds",
        "transfer_seconds",
    ] {
        assert!(value(&text, key).is_some(), "missing {key}");
    }

    let o = burstline(&["plan", "--preset", "table2", "--surplus", "0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(value(&text, "verdict"), Some("no burst needed"));
    assert_eq!(value(&text, "gamma"), Some("0"));
    assert_eq!(value(&text, "c_n"), Some("0"));

    let o = burstline(&["plan", "--preset", "table2", "--surplus", "100000"]);
    assert_eq!(code(&o), 4);
    assert_eq!(value(&stdout(&o), "constraint"), Some("gamma"));
}

#[test]
fn plan_from_estimate_matches_surplus() {
    let o = burstline(&["plan", "--preset", "table2", "--surplus", "5000"]);
    let deadline: f64 = value(&stdout(&o), "deadline_seconds")
        .unwrap()
        .parse()
        .unwrap();
    let est = format!("{}", deadline + 5000.0);
    let e = burstline(&["plan", "--preset", "table2", "--estimate", &est]);
    assert_eq!(value(&stdout(&o), "gamma"), value(&stdout(&e), "gamma"));
}

#[test]
fn plan_without_models_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let start = TABLE2.find("[models]").unwrap();
    let end = TABLE2.find("[overheads]").unwrap();
    let text = format!("{}{}", &TABLE2[..start], &TABLE2[end..]);
    let path = write(
        &dir,
        "nomodels.toml",
        &text.replace("baseline_factor = 1.2", "seconds = 40000.0"),
    );
    let o = burstline(&["plan", "--scenario", p(&path), "--surplus", "300"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("missing"));
}

#[test]
fn scenario_parsing_is_strict() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "typo.toml", &TABLE2.replace("timesteps", "timestep"));
    let t = dir.path().join("t.csv");
    let o = burstline(&["simulate", "--scenario", p(&path), "--trace", p(&t)]);
    assert_eq!(code(&o), 2);

    let extra = format!("{TABLE2}\n[cache]\nsize = 3\n");
    let path = write(&dir, "extra.toml", &extra);
    let o = burstline(&["simulate", "--scenario", p(&path), "--trace", p(&t)]);
    assert_eq!(code(&o), 2);

    let both = TABLE2.replace(
        "baseline_factor = 1.2",
        "baseline_factor = 1.2\nseconds = 5.0",
    );
    let path = write(&dir, "both.toml", &both);
    let o = burstline(&["simulate", "--scenario", p(&path), "--trace", p(&t)]);
    assert_eq!(code(&o), 2);

    let o = burstline(&["simulate", "--scenario", "/no/such.toml", "--trace", p(&t)]);
    assert_eq!(code(&o), 2);
    assert!(!t.exists());
}

#[test]
fn model_files_can_be_referenced_from_scenarios() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.model"),
        "slope=0.65\nintercept=6.5\nlabel=cluster\n",
    )
    .unwrap();
    let text = TABLE2.replace(
        "cluster = { slope = 0.65, intercept = 6.5 }",
        "cluster = { file = \"c.model\" }",
    );
    let path = write(&dir, "s.toml", &text);
    let a = burstline(&["plan", "--scenario", p(&path), "--surplus", "305.78"]);
    let b = burstline(&["plan", "--preset", "table2", "--surplus", "305.78"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn simulate_generous_deadline() {
    let dir = TempDir::new().unwrap();
    let t = dir.path().join("t.csv");
    let log = dir.path().join("m.csv");
    let o = burstline(&[
        "simulate",
        "--preset",
        "table2",
        "--trace",
        p(&t),
        "--monitor-log",
        p(&log),
    ]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o);
    assert!(line.starts_with("deadline_met=true finished_at="), "{line}");
    assert!(line.trim_end().ends_with("burst_step=none"));
    let log = fs::read_to_string(&log).unwrap();
    assert_eq!(
        log.lines().next(),
        Some("step_index,duration_seconds,environment,estimate_seconds,decision")
    );
    assert_eq!(log.lines().count(), 3001);
}

#[test]
fn simulate_is_byte_deterministic_and_writes_checkpoints() {
    let dir = TempDir::new().unwrap();
    let s = write(
        &dir,
        "s.toml",
        &format!("{TABLE2}\n[[event]]\nat_step = 500\nkind = \"contention\"\nfactor = 2.0\n"),
    );
    let ck = dir.path().join("ck");
    let mut traces = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let t = dir.path().join(name);
        let o = burstline(&[
            "simulate",
            "--scenario",
            p(&s),
            "--trace",
            p(&t),
            "--checkpoint-dir",
            p(&ck),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        traces.push(fs::read(&t).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    let files: Vec<_> = fs::read_dir(&ck)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(files.len(), 1);
    let c = burstline::checkpoint::load(&ck.join(&files[0])).unwrap();
    assert_eq!(c.header.nx, 600);
    assert_eq!(c.header.gamma, 0);
}

#[test]
fn node_loss_and_deadline_changes_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let s = write(
        &dir,
        "s.toml",
        &format!(
            "{TABLE2}\n[[event]]\nat_step = 300\nkind = \"node_down\"\nnode = 1\n\n\
             [[event]]\nat_step = 900\nkind = \"node_up\"\nnode = 1\n\n\
             [[event]]\nat_step = 50\nkind = \"deadline_change\"\nseconds = 41000.0\n"
        ),
    );
    let t = dir.path().join("t.csv");
    let o = burstline(&["simulate", "--scenario", p(&s), "--trace", p(&t)]);
    assert!(matches!(code(&o), 0 | 5), "{}", stderr(&o));
    let text = fs::read_to_string(&t).unwrap();
    assert!(text.contains("node_down=1"));
    assert!(text.contains("node_up=1"));
    assert!(text.contains("deadline=41000"));
    assert!(text.contains("# deadline_seconds=41000"));
}

fn report(trace: &Path, out: &Path) -> Output {
    burstline(&["report", "--trace", p(trace), "--out-dir", p(out)])
}

#[test]
fn report_series() {
    let dir = TempDir::new().unwrap();
    let plain = dir.path().join("plain.csv");
    assert_eq!(
        code(&burstline(&[
            "simulate",
            "--preset",
            "table2",
            "--trace",
            p(&plain)
        ])),
        0
    );
    let out = dir.path().join("plain");
    assert_eq!(code(&report(&plain, &out)), 0);
    let own = fs::read_to_string(out.join("ownership_vs_step.csv")).unwrap();
    assert!(own.lines().skip(1).all(|l| l.ends_with(",600,0")));
    assert_eq!(own.lines().count(), 3001);

    let s = write(
        &dir,
        "s.toml",
        &format!("{TABLE2}\n[[event]]\nat_step = 500\nkind = \"contention\"\nfactor = 2.0\n"),
    );
    let burst = dir.path().join("burst.csv");
    assert_eq!(
        code(&burstline(&[
            "simulate",
            "--scenario",
            p(&s),
            "--trace",
            p(&burst)
        ])),
        0
    );
    let out = dir.path().join("burst");
    assert_eq!(code(&report(&burst, &out)), 0);
    let own = fs::read_to_string(out.join("ownership_vs_step.csv")).unwrap();
    let pairs: Vec<&str> = own
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1)
        .collect();
    let changes = pairs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(changes, 1);
    let est = fs::read_to_string(out.join("estimate_vs_step.csv")).unwrap();
    assert_eq!(est.lines().count() - 1, 3000);
    let time = fs::read_to_string(out.join("time_vs_step.csv")).unwrap();
    assert_eq!(time.lines().count() - 1, 3000);

    let first: Vec<_> = [
        "time_vs_step.csv",
        "estimate_vs_step.csv",
        "ownership_vs_step.csv",
    ]
    .iter()
    .map(|f| fs::read(out.join(f)).unwrap())
    .collect();
    assert_eq!(code(&report(&burst, &out)), 0);
    for (f, before) in [
        "time_vs_step.csv",
        "estimate_vs_step.csv",
        "ownership_vs_step.csv",
    ]
    .iter()
    .zip(first)
    {
        assert_eq!(fs::read(out.join(f)).unwrap(), before);
    }

    let junk = write(&dir, "junk.csv", "step,phase\n1,2\n");
    assert_eq!(code(&report(&junk, &dir.path().join("junk"))), 2);
}

#[test]
fn presets_print_and_override() {
    let o = burstline(&["preset", "paper-cloud"]);
    assert_eq!(stdout(&o), "slope=0.77\nintercept=7.1\nlabel=cloud\n");
    let o = burstline(&["preset", "nope"]);
    assert_eq!(code(&o), 2);

    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("table2.toml"),
        TABLE2.replace("baseline_factor = 1.2", "baseline_factor = 0.5"),
    )
    .unwrap();
    let t = dir.path().join("t.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_burstline"))
        .args([
            "simulate",
            "--preset",
            "table2",
            "--no-burst",
            "--trace",
            p(&t),
        ])
        .env("BURSTLINE_PRESET_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 5, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&burstline(&["plan", "--preset", "table2"])), 2);
    assert_eq!(code(&burstline(&["frobnicate"])), 2);
    let o = burstline(&["plan", "--preset", "paper-cluster", "--surplus", "1"]);
    assert_eq!(code(&o), 2);
}
