use std::path::PathBuf;
use std::process::{Command, Output};

fn kgfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgfield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

/// `(quantity, value_re, pass)` per CSV data row.
fn rows(csv: &str) -> Vec<(String, f64, bool)> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("schema=1"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (q, v, p) = (col("quantity"), col("value_re"), col("pass"));
    lines
        .map(|l| {
            // the quoted lattice descriptor is the only field with commas
            let fields = split_csv(l);
            assert_eq!(fields.len(), header.len(), "{l}");
            (fields[q].clone(), fields[v].parse().unwrap(), fields[p] == "true")
        })
        .collect()
}

fn split_csv(line: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(String::new()),
            _ => out.last_mut().unwrap().push(c),
        }
    }
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn continuity_on_two_mode_fixture() {
    let o = kgfield(&["continuity", "--in", &fixture("two_mode.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    let residual = r.iter().find(|(q, ..)| q == "residual_J").unwrap();
    assert!(residual.1 <= 1e-8 && residual.2);
    assert!(r.iter().any(|(q, ..)| q == "div_script_J_mode_vs_closed_form"));
    assert!(r.iter().all(|(.., pass)| *pass));
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let o = kgfield(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("Usage"), "{err}");
    assert!(err.contains("continuity"));
    assert!(o.stdout.is_empty());
}

#[test]
fn repeated_seed_gives_identical_bytes() {
    let a = scratch("seed_a.csv");
    let b = scratch("seed_b.csv");
    let c = scratch("seed_c.csv");
    for (path, seed) in [(&a, "17"), (&b, "17"), (&c, "18")] {
        let o = kgfield(&[
            "total-probability",
            "--seed",
            seed,
            "--states",
            "2",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    let (a, b, c) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), std::fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn tolerance_failure_exits_one() {
    let o = kgfield(&["continuity", "--in", &fixture("two_mode.json"), "--tolerance-scale", "1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    let r = rows(&stdout(&o));
    assert!(r.iter().any(|(.., pass)| !pass));
    assert!(stdout(&o).lines().nth(2).unwrap().ends_with(",1e-9"));
}

#[test]
fn document_errors_exit_three() {
    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\"mass\": 1.0, \"modes\": [").unwrap();
    let o = kgfield(&["continuity", "--in", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("input document error"));
    let o = kgfield(&["continuity", "--in", "/nonexistent/field.json"]);
    assert_eq!(o.status.code(), Some(3));
    let off = scratch("off_lattice.json");
    std::fs::write(
        &off,
        r#"{"mass": 1.0, "box_length": 8.0, "boxed": true, "modes": [{"re": 1, "im": 0, "k": [0.3, 0, 0], "eps": 1}]}"#,
    )
    .unwrap();
    let o = kgfield(&["continuity", "--in", off.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let em = scratch("bad_em.json");
    std::fs::write(&em, r#"{"q": 1.0}"#).unwrap();
    let o = kgfield(&["em-spectrum", "--lattice", "1,8,2", "--in", em.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn precondition_violations_exit_two() {
    let o = kgfield(&["inner-products", "--a", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("precondition violation"));
    let o = kgfield(&["classify-group", "--a", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rationality"));
    let o = kgfield(&["covariance", "--beta", "1.2,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = kgfield(&["classify-group", "--rational", "2/4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_group_from_document_and_flags() {
    let doc = scratch("params.json");
    std::fs::write(
        &doc,
        r#"[{"type": "rational", "m": 1, "n": 3}, {"type": "irrational", "approx": 0.41421356237309503}]"#,
    )
    .unwrap();
    let o = kgfield(&["classify-group", "--in", doc.to_str().unwrap(), "--rational", "-2/5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert!(r.iter().any(|(q, ..)| q == "group_U1[a=1/3]"));
    assert!(r.iter().any(|(q, ..)| q == "group_U1[a=-2/5]"));
    assert!(r.iter().any(|(q, ..)| q.starts_with("group_R+[")));
    let bare = scratch("bare.json");
    std::fs::write(&bare, "0.5").unwrap();
    let o = kgfield(&["classify-group", "--in", bare.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_report() {
    let o = kgfield(&["gauge-orbit", "--format", "json", "--a", "-0.4", "--lattice", "1,32,6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    assert_eq!(v["rows"][0]["a"], -0.4);
    assert_eq!(v["rows"][0]["lattice"], "1,32,6");
}

#[test]
fn every_experiment_passes_at_desk_scale() {
    let small: &[(&str, &[&str])] = &[
        ("covariance", &[]),
        ("nonrel-limit", &["--a", "0.3"]),
        ("inner-products", &["--states", "3"]),
        ("localized-compare", &[]),
        ("classify-group", &[]),
        ("em-spectrum", &["--q", "0.7"]),
        ("continuity", &["--seed", "5", "--modes", "6"]),
    ];
    for (name, extra) in small {
        let mut args = vec![*name];
        args.extend_from_slice(extra);
        let o = kgfield(&args);
        assert_eq!(o.status.code(), Some(0), "{name}: {}\n{}", stderr(&o), stdout(&o));
    }
}
