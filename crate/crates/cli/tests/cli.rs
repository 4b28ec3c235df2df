use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn hetro(args: &[&str]) -> Output {
    hetro_env(args, &[])
}

fn hetro_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hetro"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json_test(file: &Path, extra: &[&str]) -> Value {
    let mut args = vec![
        "test",
        file.to_str().unwrap(),
        "-r",
        "y",
        "--format",
        "json",
    ];
    args.extend_from_slice(extra);
    let out = hetro(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    serde_json::from_str(&stdout(&out)).unwrap()
}

fn result<'a>(doc: &'a Value, method: &str) -> &'a Value {
    doc["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["method"] == method)
        .unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn assert_rel(got: f64, want: f64, tol: f64) {
    assert!(
        (got - want).abs() <= tol * want.abs().max(1e-300),
        "got {got}, want {want}"
    );
}

// Reference values from a least-squares fit of the same files with numpy.
#[test]
fn homoscedastic_fixture_is_not_rejected() {
    let doc = json_test(&data("homoscedastic.csv"), &["-t", "alrt,cvt,bp"]);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(
        (doc["n"].as_u64(), doc["p"].as_u64(), doc["k"].as_u64()),
        (Some(400), Some(40), Some(360))
    );
    let alrt = result(&doc, "alrt");
    let cvt = result(&doc, "cvt");
    assert!(f(&alrt["p_value"]) > 0.05 && f(&cvt["p_value"]) > 0.05);
    assert_rel(f(&alrt["statistic"]), 1.1123952182047443, 1e-10);
    assert_rel(f(&alrt["standardized"]), -1.8442027808134926, 1e-9);
    assert_rel(f(&cvt["statistic"]), 1.5124746717695272, 1e-10);
    assert_rel(
        f(&result(&doc, "bp")["statistic"]),
        27.596757383895152,
        1e-9,
    );
    assert_rel(f(&result(&doc, "bp")["p_value"]), 0.931437011476314, 1e-8);
}

#[test]
fn model1_fixture_is_rejected_by_cvt() {
    let doc = json_test(&data("model1.csv"), &[]);
    let cvt = result(&doc, "cvt");
    assert!(f(&cvt["p_value"]) < 0.01);
    assert_eq!(cvt["reject"], true);
    assert_rel(f(&cvt["statistic"]), 5.076747780152204, 1e-10);
    assert_rel(f(&cvt["p_value"]), 1.7346945541347986e-36, 1e-6);
    assert_rel(
        f(&result(&doc, "alrt")["p_value"]),
        0.0013782142318433564,
        1e-7,
    );
}

#[test]
fn intercept_counts_toward_p() {
    let doc = json_test(&data("homoscedastic.csv"), &["--intercept"]);
    assert_eq!(
        (doc["p"].as_u64(), doc["k"].as_u64()),
        (Some(41), Some(359))
    );
    assert_eq!(doc["intercept"], true);
    assert_rel(
        f(&result(&doc, "alrt")["statistic"]),
        1.1318971967363565,
        1e-10,
    );
}

#[test]
fn json_and_csv_agree_bit_exactly() {
    let file = data("model1.csv");
    let doc = json_test(&file, &["-t", "alrt,cvt,bp,white"]);
    let reparsed: Value = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(doc, reparsed);

    let out = hetro(&[
        "test",
        file.to_str().unwrap(),
        "-r",
        "y",
        "-t",
        "alrt,cvt,bp,white",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows[..3] {
        let r = result(&doc, &row[0]);
        for (col, key) in [(1, "statistic"), (2, "standardized"), (4, "p_value")] {
            assert_eq!(
                row[col].parse::<f64>().unwrap().to_bits(),
                f(&r[key]).to_bits(),
                "{} {key}",
                &row[0]
            );
        }
    }
    assert_eq!(&rows[3][0], "white");
    assert!(rows[3][10].contains("not applicable"));
}

#[test]
fn headerless_input_matches_named_columns() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("homoscedastic.csv")).unwrap();
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let path = dir.path().join("plain.csv");
    std::fs::write(&path, body).unwrap();
    let out = hetro(&[
        "test",
        path.to_str().unwrap(),
        "-r",
        "0",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plain: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let named = json_test(&data("homoscedastic.csv"), &[]);
    assert_eq!(plain["results"], named["results"]);

    let subset = hetro(&[
        "test",
        path.to_str().unwrap(),
        "-r",
        "0",
        "-x",
        "1,2,3",
        "--format",
        "json",
    ]);
    let subset: Value = serde_json::from_str(&stdout(&subset)).unwrap();
    assert_eq!(subset["p"], 3);
}

#[test]
fn data_errors_exit_2() {
    let out = hetro(&[
        "test",
        data("homoscedastic.csv").to_str().unwrap(),
        "-r",
        "income",
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("response column `income` not found"),
        "{}",
        stderr(&out)
    );

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    std::fs::write(&missing, "y,x1,x2\n1,2,3\n2,,4\n3,1,1\n4,2,2\n5,0,1\n").unwrap();
    let out = hetro(&["test", missing.to_str().unwrap(), "-r", "y"]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("missing value in column `x1` at line 3"),
        "{}",
        stderr(&out)
    );

    let text = dir.path().join("text.csv");
    std::fs::write(&text, "y,g,x\n1,a,2\n2,b,1\n3,a,5\n4,b,3\n5,a,4\n").unwrap();
    let out = hetro(&["test", text.to_str().unwrap(), "-r", "y", "-x", "g"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("non-numeric"));
    let out = hetro(&["test", text.to_str().unwrap(), "-r", "y"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let collinear = dir.path().join("collinear.csv");
    std::fs::write(&collinear, "y,a,b\n1,1,2\n2,2,4\n3,3,6\n4,5,10\n5,1,2\n").unwrap();
    let out = hetro(&["test", collinear.to_str().unwrap(), "-r", "y"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("rank deficient"));

    let out = hetro(&[
        "test",
        dir.path().join("absent.csv").to_str().unwrap(),
        "-r",
        "y",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sole_inapplicable_test_exits_3() {
    let file = data("homoscedastic.csv");
    let out = hetro(&["test", file.to_str().unwrap(), "-r", "y", "-t", "white"]);
    assert_eq!(code(&out), 3);
    assert!(
        stderr(&out).contains("not applicable when p(p+1)/2 >= n"),
        "{}",
        stderr(&out)
    );

    let doc = json_test(&file, &["-t", "white,bp"]);
    assert_eq!(doc["results"].as_array().unwrap().len(), 1);
    assert_eq!(doc["not_applicable"][0]["method"], "white");
}

#[test]
fn usage_errors_exit_4() {
    let file = data("homoscedastic.csv");
    let file = file.to_str().unwrap();
    for args in [
        vec!["test", file, "-r", "y", "--alpha", "1.5"],
        vec!["test", file, "-r", "y", "--alpha", "0"],
        vec!["test", file, "-r", "y", "-t", "glejser"],
        vec!["test", file],
        vec!["frobnicate"],
        vec![],
    ] {
        assert_eq!(code(&hetro(&args)), 4, "{args:?}");
    }
    let out = hetro(&["test", file, "-r", "y", "-x", "y"]);
    assert_eq!(code(&out), 4);
    for args in [["--help"], ["--version"]] {
        let out = hetro(&args);
        assert_eq!(code(&out), 0);
        assert!(!out.stdout.is_empty());
    }
    assert!(stdout(&hetro(&["--help"])).contains("Exit codes"));
    assert_eq!(
        code(&hetro_env(
            &["test", file, "-r", "y"],
            &[("HETRO_THREADS", "zero")]
        )),
        4
    );
}

#[test]
fn unknown_table_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetro(&[
        "simulate",
        "table9",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4);
    assert!(
        stderr(&out).contains("unknown table `table9"),
        "{}",
        stderr(&out)
    );
}

fn read_csv(path: &Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().clone();
    (header, rdr.records().map(Result::unwrap).collect())
}

#[test]
fn simulate_table1_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = hetro(&[
        "simulate",
        "table1",
        "--reps",
        "20",
        "--seed",
        "7",
        "--out-dir",
        out_dir,
        "-q",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("table1.csv"));
    assert_eq!(rows.len(), 18);
    let tests: Vec<&str> = header.iter().skip(11).collect();
    assert_eq!(tests, ["alrt", "cvt", "bp", "white"]);
    for row in &rows {
        for v in row.iter().skip(11) {
            assert!(
                v == "NA" || (0.0..=1.0).contains(&v.parse::<f64>().unwrap()),
                "{v}"
            );
        }
    }
    let (_, long) = read_csv(&dir.path().join("table1_long.csv"));
    assert_eq!(long.len(), 18 * 4);
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("table1.json")).unwrap())
            .unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["reports"].as_array().unwrap().len(), 18);
    let svg = std::fs::read_to_string(dir.path().join("table1.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}

#[test]
fn simulate_table2_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetro(&[
        "simulate",
        "table2",
        "--reps",
        "100",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "-q",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("table2.json")).unwrap())
            .unwrap();
    let mut rates = 0;
    for r in json["reports"].as_array().unwrap() {
        for t in r["tests"].as_array().unwrap() {
            if let Some(v) = t["rejection_rate"].as_f64() {
                assert!((0.0..=1.0).contains(&v));
                rates += 1;
            }
        }
    }
    assert!(rates > 0);
}

const GRID: &str = r#"
name = "mini"

[defaults]
n = 60
replications = 40
seed = 11
tests = ["alrt", "cvt", "bp"]

[[cell]]
ratio = 0.1

[[cell]]
ratio = 0.3
model = "model1"
c0 = 1.0
"#;

#[test]
fn grid_runs_are_thread_independent_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("mini.toml");
    std::fs::write(&grid, GRID).unwrap();
    let grid = grid.to_str().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = hetro_env(
            &[
                "simulate",
                grid,
                "--out-dir",
                out_dir.to_str().unwrap(),
                "--dump-raw",
                "-q",
            ],
            &[("HETRO_THREADS", threads)],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push((
            std::fs::read_to_string(out_dir.join("mini.csv")).unwrap(),
            std::fs::read_to_string(out_dir.join("mini_raw.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let (_, raw) = read_csv(&dir.path().join("t1/mini_raw.csv"));
    assert_eq!(raw.len(), 2 * 40 * 3);

    let ckpt = dir.path().join("mini.jsonl");
    let ckpt = ckpt.to_str().unwrap();
    let run = |out_dir: &str| {
        hetro(&[
            "simulate",
            grid,
            "--out-dir",
            dir.path().join(out_dir).to_str().unwrap(),
            "--checkpoint",
            ckpt,
        ])
    };
    let first = run("c1");
    assert_eq!(code(&first), 0);
    assert!(!stderr(&first).contains("resumed"));
    let second = run("c2");
    assert_eq!(stderr(&second).matches("(resumed)").count(), 2);
    let a = std::fs::read_to_string(dir.path().join("c1/mini.csv")).unwrap();
    assert_eq!(
        a,
        std::fs::read_to_string(dir.path().join("c2/mini.csv")).unwrap()
    );
    assert_eq!(a, outputs[0].0);

    let reseeded = dir.path().join("s");
    hetro(&[
        "simulate",
        grid,
        "--seed",
        "99",
        "--out-dir",
        reseeded.to_str().unwrap(),
        "-q",
    ]);
    assert_ne!(
        std::fs::read_to_string(reseeded.join("mini.csv")).unwrap(),
        a
    );
}

#[test]
fn bad_grid_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("bad.toml");
    std::fs::write(&grid, "[[cell]]\nratio = 0.2\n").unwrap();
    let out = hetro(&[
        "simulate",
        grid.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing `n`"));
}

#[test]
fn verify_moments_exit_code_follows_report() {
    let out = hetro(&[
        "verify-moments",
        "--n",
        "8",
        "--k",
        "5",
        "--samples",
        "1000000",
        "--format",
        "json",
    ]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().filter(|c| c["pass"] == true).count() > 0);
    let exact_failures: Vec<&str> = checks
        .iter()
        .filter(|c| c["pass"] == false && c["approximate"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    let expected = if exact_failures.is_empty() { 0 } else { 1 };
    println!("exact identities outside their band at n=8, k=5: {exact_failures:?}");
    assert_eq!(code(&out), expected, "{}", stderr(&out));
    for known in ["E[v11^4]", "E[|v1|^2]", "var(|v1|^2)"] {
        let c = checks.iter().find(|c| c["name"] == known).unwrap();
        assert_eq!(c["pass"], true, "{known}");
    }
}

#[test]
fn verify_moments_shape_and_sample_checks() {
    let out = hetro(&["verify-moments", "--n", "4", "--k", "5"]);
    assert_eq!(code(&out), 2);
    let out = hetro(&[
        "verify-moments",
        "--n",
        "6",
        "--k",
        "3",
        "--samples",
        "100",
        "--format",
        "csv",
    ]);
    assert!(code(&out) <= 1);
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("name,exact,estimate,se,z,pass\n"));
}
