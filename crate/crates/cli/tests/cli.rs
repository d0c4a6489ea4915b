use std::path::PathBuf;
use std::process::{Command, Output};

fn walters(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walters"))
        .args(args)
        .env_remove("WALTERS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parses the CSV body into a header and rows of cells.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<String> {
    let (header, rows) = table(text);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.into_iter().map(|r| r[i].clone()).collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("walters-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn first_type_fixed_point_is_harmonic() {
    let text = stdout(&walters(&["fixed-point", "--type1", "--k", "2", "--nmax", "200"]));
    let (header, rows) = table(&text);
    assert_eq!(header, ["n", "a", "Ra", "residual", "offset"]);
    assert_eq!(rows.len(), 199);
    for row in rows {
        let n: f64 = row[0].parse().unwrap();
        let a: f64 = row[1].parse().unwrap();
        assert!((a + (n / (n - 1.0)).ln()).abs() < 1e-12, "n = {n}");
    }
    assert!(text.contains("# param a2 = "));
}

#[test]
fn geometric_correlations_vanish() {
    let text = stdout(&walters(&["decay", "--family", "geometric:0.5", "--qmax", "50"]));
    let c = column(&text, "C_renewal");
    assert_eq!(c.len(), 50);
    for v in c {
        assert!(v.parse::<f64>().unwrap().abs() < 1e-12);
    }
}

#[test]
fn oracle_columns_follow_renewal() {
    let text = stdout(&walters(&[
        "decay",
        "--family",
        "power:3",
        "--qmax",
        "20",
        "--oracle-trunc",
        "4000",
        "--eps",
        "1e-3",
    ]));
    let renewal = column(&text, "C_renewal");
    let oracle = column(&text, "C_oracle");
    let bound: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# summary oracle_bound = "))
        .unwrap()
        .parse()
        .unwrap();
    for (r, o) in renewal.iter().zip(&oracle) {
        let (r, o): (f64, f64) = (r.parse().unwrap(), o.parse().unwrap());
        assert!((r - o).abs() <= bound);
    }
}

#[test]
fn runs_are_deterministic() {
    let args = [
        "decay",
        "--family",
        "stretched:0.5",
        "--qmax",
        "10",
        "--oracle-trunc",
        "2000",
        "--mc-paths",
        "2000",
        "--seed",
        "11",
    ];
    let a = stdout(&walters(&args));
    let b = stdout(&walters(&args));
    assert_eq!(a, b);
    assert!(a.contains("# param seed = 11"));
    let mc = column(&a, "C_mc");
    assert!(mc.iter().all(|v| v.parse::<f64>().is_ok()));
}

#[test]
fn integrate_reports_bounds() {
    let text = stdout(&walters(&[
        "integrate",
        "--k",
        "3",
        "--digits",
        "0,2",
        "--n",
        "2,10",
        "--depth",
        "10",
    ]));
    let values = column(&text, "value");
    let bounds = column(&text, "bound");
    assert_eq!(values.len(), 2);
    for b in bounds {
        assert!(b.parse::<f64>().unwrap() < 1e-4);
    }
    // n = 1 touches the support
    let out = walters(&["integrate", "--k", "3", "--digits", "0,2", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("walters: cantor:"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        walters(&["eta", "--family", "power:3", "--no-such-flag"]).status.code(),
        Some(2)
    );
    assert_eq!(walters(&["fixed-point", "--k", "2"]).status.code(), Some(2));
    assert_eq!(
        walters(&["fixed-point", "--type1", "--type2", "--k", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(walters(&["--help"]).status.code(), Some(0));
}

#[test]
fn precondition_errors_name_the_module() {
    let out = walters(&["fixed-point", "--type1", "--k", "2", "--a2", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("walters: renorm:"));

    let out = walters(&["eta", "--family", "power:0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("walters: seq:"));

    let out = walters(&["decay", "--family", "power:2", "--qmax", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = scratch("config");
    let conf = dir.join("eta.conf");
    std::fs::write(&conf, "# defaults\nfamily = power:3\nnmax = 30\n").unwrap();
    let conf = conf.to_str().unwrap();

    let text = stdout(&walters(&["eta", "--config", conf]));
    assert_eq!(column(&text, "n").len(), 30);

    let text = stdout(&walters(&["eta", "--config", conf, "--nmax", "12"]));
    assert_eq!(column(&text, "n").len(), 12);

    let out = walters(&["eta", "--config", dir.join("missing.conf").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_and_json() {
    let dir = scratch("outdir");
    let out = Command::new(env!("CARGO_BIN_EXE_walters"))
        .args([
            "eta",
            "--family",
            "geometric:0.5",
            "--nmax",
            "20",
            "--out-format",
            "json",
        ])
        .env("WALTERS_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("eta.json")).unwrap()).unwrap();
    assert_eq!(doc["command"], "eta");
    assert_eq!(doc["columns"][1], "eta");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 20);
    assert_eq!(doc["summary"]["W"], 2.0);

    let file = dir.join("explicit.csv");
    stdout(&walters(&[
        "eta",
        "--family",
        "geometric:0.5",
        "--nmax",
        "20",
        "--out",
        file.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(file).unwrap();
    assert!(text.starts_with("# walters "));
}

#[test]
fn apply_round_trips_a_fixed_point() {
    let dir = scratch("apply");
    let file = dir.join("fp.csv");
    stdout(&walters(&[
        "fixed-point",
        "--type1",
        "--k",
        "3",
        "--a2",
        "-0.4",
        "--nmax",
        "300",
        "--out",
        file.to_str().unwrap(),
    ]));
    let text = stdout(&walters(&[
        "apply",
        "--type1",
        "--k",
        "3",
        "--in",
        file.to_str().unwrap(),
    ]));
    let residuals: Vec<f64> = column(&text, "residual")
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(!residuals.is_empty());
    assert!(residuals.iter().all(|r| *r < 1e-13));

    std::fs::write(&file, "n,a\n2,-0.5\n4,-0.1\n").unwrap();
    let out = walters(&["apply", "--type1", "--k", "2", "--in", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inverse_hits_its_target() {
    let text = stdout(&walters(&["inverse", "--target", "power:2", "--qmax", "100"]));
    assert!(text.contains("# summary shift = 1"));
    let errs = column(&text, "rel_err");
    assert!(errs
        .iter()
        .filter(|s| !s.is_empty())
        .all(|s| s.parse::<f64>().unwrap() < 1e-10));

    let dir = scratch("inverse");
    let file = dir.join("target.txt");
    let values: String = (1..=60).map(|q| format!("{}\n", 0.8f64.powi(q))).collect();
    std::fs::write(&file, format!("d\n{values}")).unwrap();
    let text = stdout(&walters(&[
        "inverse",
        "--target-file",
        file.to_str().unwrap(),
        "--qmax",
        "50",
    ]));
    assert!(!column(&text, "eta").is_empty());
}

#[test]
fn equilibrium_and_fit() {
    let text = stdout(&walters(&["equilibrium", "--family", "power:3", "--qmax", "20"]));
    assert!(text.contains("# summary mu_zero = 0.5"));
    assert_eq!(column(&text, "q").len(), 20);

    let text = stdout(&walters(&["fit", "--family", "power:2.5", "--nmax", "2000"]));
    let gamma: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# summary gamma = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((gamma - 2.5).abs() < 1e-10);
    assert!(text.contains("# summary power_law = true"));
}
