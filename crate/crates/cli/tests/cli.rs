use std::path::Path;
use std::process::{Command, Output};

use qpkc_lab::{write_report, OutputFormat, Report, Value};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpkc-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn table1_default_has_header_and_five_rows() {
    let text = stdout(&lab(&["table1"]));
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("K,F,I_AE,I_AE_clamped,P_e\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn fig1_grid_is_monotone() {
    let ks: Vec<String> = (10..=1000).step_by(10).map(|k| k.to_string()).collect();
    let report = Report::from_csv(&stdout(&lab(&["table1", "--k", &ks.join(",")]))).unwrap();
    let col = |name| -> Vec<f64> {
        report
            .column(name)
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect()
    };
    let (info, pe) = (col("I_AE"), col("P_e"));
    assert_eq!(info.len(), 100);
    assert!(info.windows(2).all(|w| w[1] >= w[0]));
    assert!(pe.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn same_seed_gives_byte_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &[
            "session",
            "--adversary",
            "intercept",
            "--attack-fraction",
            "0.4",
            "--trials",
            "50",
            "--seed",
            "11",
        ],
        &[
            "sweep",
            "--adversary",
            "dos",
            "--fractions",
            "0:1:0.25",
            "--trials",
            "20",
            "--format",
            "json",
        ],
        &[
            "estimate-sim",
            "--k",
            "20",
            "--trials",
            "20000",
            "--msg-len",
            "3",
        ],
    ];
    for (i, args) in runs.iter().enumerate() {
        let paths = [
            dir.path().join(format!("{i}a")),
            dir.path().join(format!("{i}b")),
        ];
        for (p, threads) in paths.iter().zip(["1", "3"]) {
            let out = Command::new(env!("CARGO_BIN_EXE_qpkc-lab"))
                .args(*args)
                .args(["--out", p.to_str().unwrap()])
                .env("RAYON_NUM_THREADS", threads)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        assert_eq!(read(&paths[0]), read(&paths[1]), "{args:?}");
    }
    let other = lab(&[
        "session",
        "--adversary",
        "intercept",
        "--attack-fraction",
        "0.4",
        "--trials",
        "50",
        "--seed",
        "12",
    ]);
    assert_ne!(stdout(&other).as_bytes(), read(&dir.path().join("0a")));
}

#[test]
fn session_csv_round_trips_exactly() {
    let text = stdout(&lab(&[
        "session",
        "--adversary",
        "entangle",
        "--attack-fraction",
        "0.3",
        "--trials",
        "40",
    ]));
    let report = Report::from_csv(&text).unwrap();
    assert_eq!(report.rows.len(), 41);
    assert_eq!(report.to_csv().unwrap(), text);
    assert_eq!(
        report.cell(40, "trial"),
        Some(&Value::Text("summary".into()))
    );
}

#[test]
fn json_is_an_array_of_flat_objects_with_identical_keys() {
    let text = stdout(&lab(&[
        "sweep",
        "--adversary",
        "entangle",
        "--trials",
        "10",
        "--fractions",
        "0:0.5:0.25",
        "--format",
        "json",
    ]));
    let rows: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 3);
    let keys: Vec<&String> = rows[0].keys().collect();
    assert_eq!(keys[0], "fraction");
    assert!(rows.iter().all(|r| r.keys().collect::<Vec<_>>() == keys));
    assert!(rows
        .iter()
        .all(|r| r.values().all(|v| !v.is_object() && !v.is_array())));
}

#[test]
fn empty_report_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    write_report(&Report::new(&["K", "F"]), Some(&path), OutputFormat::Csv).unwrap();
    assert_eq!(read(&path), b"K,F\n");
}

#[test]
fn usage_errors_exit_1_with_one_line() {
    for args in [
        &["session", "--adversary", "mitm"][..],
        &["table1", "--k", "10,-3"],
        &["sweep", "--fractions", "0.9:0.1:0.1"],
        &["session", "--msg-len", "60"],
        &["session", "--trials", "0"],
        &["estimate-sim", "--fidelity", "0.3"],
        &["--bogus"],
        &[],
    ] {
        let out = lab(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(out.stdout.is_empty());
    }
    let err = String::from_utf8(lab(&["session", "--adversary", "mitm"]).stderr).unwrap();
    for name in ["none", "intercept", "entangle", "dos"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unwritable_output_exits_2_and_names_the_path() {
    let out = lab(&["table1", "--out", "/nonexistent-dir/t.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("/nonexistent-dir/t.csv"));
    let missing = lab(&["table1", "--config", "/nonexistent-dir/c.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn show_config_prints_reloadable_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let shown = stdout(&lab(&["--show-config"]));
    assert!(shown.contains("seed = 0") && shown.contains("[session]"));
    let path = dir.path().join("c.toml");
    std::fs::write(
        &path,
        shown
            .replace("seed = 0", "seed = 5")
            .replace("trials = 1000", "trials = 3"),
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let effective = stdout(&lab(&[
        "session",
        "--config",
        p,
        "--trials",
        "4",
        "--show-config",
    ]));
    assert!(
        effective.contains("seed = 5") && effective.contains("trials = 4"),
        "{effective}"
    );

    let from_file = stdout(&lab(&["session", "--config", p]));
    assert_eq!(from_file.lines().count(), 1 + 3 + 1);
    assert_eq!(
        from_file,
        stdout(&lab(&["session", "--seed", "5", "--trials", "3"]))
    );
}
