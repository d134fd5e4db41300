use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hdwatson::inference::normal_quantile;
use serde_json::Value;

fn hdwatson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdwatson"))
        .args(args)
        .env_remove("HDWATSON_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn test_command_examples() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "0,1,0\n0,0,1\n");

    let o = hdwatson(&["test", "--input", &data, "--method", "modified"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["method"], "modified");
    assert_eq!(v["n"], 2);
    assert_eq!(v["p"], 3);
    assert_eq!(v["statistic"].as_f64(), Some(0.0));
    assert_eq!(v["p_value"].as_f64(), Some(0.5));
    assert_eq!(v["reject"], false);

    let o = hdwatson(&[
        "test",
        "--input",
        &data,
        "--method",
        "classical",
        "--theta0",
        "e1",
        "--alpha",
        "0.05",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["statistic"].as_f64().unwrap() - 2.0).abs() < 1e-14);
    assert!((v["critical_value"].as_f64().unwrap() - 5.9914).abs() < 1e-4);
    assert_eq!(v["reject"], false);
    assert_eq!(v["alpha"].as_f64(), Some(0.05));
}

#[test]
fn test_command_reads_header_and_pole_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "x,y,z\n1, 0, 0\n0, 0, 1\n");
    let pole = write(dir.path(), "pole.csv", "0,1,0\n");
    let o = hdwatson(&[
        "test",
        "--input",
        &data,
        "--header",
        "--theta0",
        &pole,
        "--method",
        "classical",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["statistic"].as_f64().unwrap() - 2.0).abs() < 1e-14);

    // Without --header the text row is an error.
    let o = hdwatson(&["test", "--input", &data, "--method", "classical"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));
}

#[test]
fn test_command_input_errors_name_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("zero.csv", "1,2,3\n0,0,0\n4,5,6\n", "spiked", "row 2"),
        ("ragged.csv", "0,1,0\n0,0,1\n0,1\n", "modified", "row 3"),
        ("norm.csv", "0,1,0\n0,0,1.01\n", "sign", "row 2"),
        ("pole.csv", "0,1,0\n1,0,0\n", "modified", "row 2"),
        ("nan.csv", "0,1,0\n0,NaN,1\n", "modified", "row 2"),
    ];
    for (name, contents, method, row) in cases {
        let path = write(dir.path(), name, contents);
        let o = hdwatson(&["test", "--input", &path, "--method", method]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let msg = stderr(&o);
        assert!(msg.contains(row), "{name}: {msg}");
        assert_eq!(msg.trim_end().lines().count(), 1, "{name}: {msg}");
        assert!(o.stdout.is_empty());
    }
    let o = hdwatson(&[
        "test",
        "--input",
        "/nonexistent/file.csv",
        "--method",
        "sign",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let data = write(dir.path(), "ok.csv", "0,1,0\n0,0,1\n");
    let o = hdwatson(&[
        "test", "--input", &data, "--method", "sign", "--alpha", "1.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_flags_exit_two() {
    for args in [
        vec![
            "simulate", "--dist", "fvml", "--kappa", "2", "--n", "20", "--p", "10", "--out", "x",
        ],
        vec![
            "simulate", "--dist", "fvml", "--n", "20", "--p", "10", "--seed", "1", "--out", "x",
        ],
        vec![
            "simulate", "--dist", "cauchy", "--n", "20", "--p", "10", "--seed", "1", "--out", "x",
        ],
        vec![
            "simulate", "--dist", "uniform", "--grid", "20by10", "--seed", "1", "--out", "x",
        ],
        vec![
            "simulate", "--dist", "uniform", "--n", "1", "--p", "10", "--seed", "1", "--out", "x",
        ],
        vec!["test", "--method", "sign"],
        vec!["frobnicate"],
    ] {
        let o = hdwatson(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn simulate_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let o = hdwatson(&[
        "simulate",
        "--dist",
        "fvml",
        "--kappa",
        "2",
        "--grid",
        "30x20,10×8",
        "--replicates",
        "150",
        "--methods",
        "modified,sign",
        "--seed",
        "5",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let csv = fs::read_to_string(format!("{out}.replicates.csv")).unwrap();
    assert!(csv.starts_with("n,p,method,replicate,value\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 150);

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(format!("{out}.summary.json")).unwrap()).unwrap();
    let cells = summary["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    assert!(cells[0]["equivalence_mean_abs_diff"].is_number());
    assert!(cells[0]["condition_ratios"].is_object());

    let o = hdwatson(&["report", "--in", &format!("{out}.replicates.csv")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let hist = fs::read_to_string(format!("{out}.hist.csv")).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next(), Some("n,p,method,bin_lo,bin_hi,count,density"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * (41 + 2));

    // Counts re-read from CSV equal the in-memory histograms in the summary.
    for cell in cells {
        let (n, p) = (cell["n"].to_string(), cell["p"].to_string());
        for m in cell["methods"].as_array().unwrap() {
            let name = m["method"].as_str().unwrap();
            let counts: Vec<u64> = rows
                .iter()
                .filter(|r| r[0] == n && r[1] == p && r[2] == name)
                .map(|r| r[5].parse().unwrap())
                .collect();
            let h = &m["histogram"];
            let mut expected = vec![h["underflow"].as_u64().unwrap()];
            expected.extend(
                h["counts"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|c| c.as_u64().unwrap()),
            );
            expected.push(h["overflow"].as_u64().unwrap());
            assert_eq!(counts, expected, "{n} {p} {name}");
            assert_eq!(counts.iter().sum::<u64>(), 150);
        }
    }
}

#[test]
fn summary_numbers_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let out = out.to_str().unwrap();
    let o = hdwatson(&[
        "simulate",
        "--dist",
        "spiked",
        "--lambda",
        "0.5",
        "--sigma2",
        "1",
        "--n",
        "20",
        "--p",
        "6",
        "--replicates",
        "40",
        "--methods",
        "spiked",
        "--seed",
        "1",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(format!("{out}.summary.json")).unwrap();
    let line = text.lines().find(|l| l.contains("\"mean\"")).unwrap();
    let number = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa: String = number
        .split('e')
        .next()
        .unwrap()
        .chars()
        .filter(char::is_ascii_digit)
        .collect();
    assert_eq!(mantissa.len(), 17, "{number}");
}

#[test]
fn report_density_matches_normal_density() {
    let dir = tempfile::tempdir().unwrap();
    let m = 2500;
    let mut csv = String::from("n,p,method,replicate,value\n");
    for i in 0..m {
        let z = normal_quantile((i as f64 + 0.5) / m as f64).unwrap();
        csv.push_str(&format!("200,200,modified,{i},{z:?}\n"));
    }
    let input = write(dir.path(), "q.replicates.csv", &csv);
    let out = dir.path().join("q");
    let o = hdwatson(&["report", "--in", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let hist = fs::read_to_string(dir.path().join("q.hist.csv")).unwrap();
    let mut mass = 0.0;
    for line in hist.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (lo, hi, density): (f64, f64, f64) = (
            f[3].parse().unwrap(),
            f[4].parse().unwrap(),
            f[6].parse().unwrap(),
        );
        if lo.is_finite() && hi.is_finite() {
            let mid = 0.5 * (lo + hi);
            let phi = (-0.5 * mid * mid).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!(
                (density - phi).abs() < 0.05,
                "bin [{lo}, {hi}]: {density} vs {phi}"
            );
            mass += density * (hi - lo);
        } else {
            mass += density;
        }
    }
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn report_rejects_malformed_or_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    for (name, contents) in [
        ("empty.csv", ""),
        ("header_only.csv", "n,p,method,replicate,value\n"),
        (
            "bad_value.csv",
            "n,p,method,replicate,value\n10,5,sign,0,abc\n",
        ),
        ("bad_header.csv", "a,b,c\n1,2,3\n"),
    ] {
        let path = write(dir.path(), name, contents);
        let o = hdwatson(&["report", "--in", &path]);
        assert_eq!(o.status.code(), Some(2), "{name}");
    }
    let path = write(
        dir.path(),
        "ok.csv",
        "n,p,method,replicate,value\n10,5,sign,0,0.5\n",
    );
    let o = hdwatson(&["report", "--in", &path, "--range", "3:-3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = hdwatson(&[
            "simulate",
            "--dist",
            "purkayastha",
            "--kappa",
            "1",
            "--n",
            "25",
            "--p",
            "12",
            "--replicates",
            "60",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (
            fs::read(format!("{}.replicates.csv", out.display())).unwrap(),
            fs::read(format!("{}.summary.json", out.display())).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}
