use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trimwind"))
        .args(args)
        .env_remove("TRIMWIND_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_accepts_the_shipped_models() {
    for m in [
        "sphere.twm",
        "torus.twm",
        "box.twm",
        "square.twm",
        "disk_and_dome.twm",
    ] {
        let o = run(&["validate", data(m).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{m}: {}", stdout(&o));
        assert!(stdout(&o).contains("0 errors"));
    }
}

#[test]
fn validate_separates_violations_from_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("square.twm")).unwrap();
    // a negative control weight is a violation
    let bad = text.replacen("0.0 0.0 0.0 1.0", "0.0 0.0 0.0 -1.0", 1);
    let p = write(&dir, "neg.twm", &bad);
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));

    // an open loop is legal input and only warned about
    let mut lines: Vec<&str> = text.lines().collect();
    let last_curve = lines.iter().rposition(|l| l.starts_with("curve")).unwrap();
    // a degree-1 curve is four lines: header, knots, two points
    lines.drain(last_curve..last_curve + 4);
    let p = write(&dir, "open.twm", &lines.join("\n"));
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("not closed"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "bad.twm",
        "trimwind-model 1\nunits mm\npatch x\ndegree three 3\n",
    );
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
    assert_eq!(run(&["query"]).status.code(), Some(1));
    assert_eq!(
        run(&["--eps-quad", "-1", "query", "a", "b"]).status.code(),
        Some(1)
    );
}

#[test]
fn query_classifies_sphere_points() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(
        &dir,
        "q.txt",
        "# center and far away\n0 0 0\n2, 0, 0\n0.5;0.5;0.5\n",
    );
    let out = dir.path().join("out.csv");
    let o = run(&[
        "--threads",
        "2",
        "query",
        data("sphere.twm").to_str().unwrap(),
        q.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--per-patch",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let inside: Vec<&str> = rows.iter().map(|r| r[5]).collect();
    assert_eq!(inside, ["true", "false", "true"]);
    let w: f64 = rows[0][3].parse().unwrap();
    assert!((w - 1.0).abs() < 1e-5);
    assert_eq!(rows[0][10].split(';').count(), 6);
}

#[test]
fn slice_writes_a_graymap_of_the_requested_size() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("s.pgm");
    let o = run(&[
        "slice",
        data("torus.twm").to_str().unwrap(),
        "--origin",
        "0,0,0",
        "--u",
        "1,0,0",
        "--v",
        "0,1,0",
        "--extent",
        "6,5",
        "--res",
        "12,10",
        "--pgm",
        pgm.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let img = std::fs::read(pgm).unwrap();
    assert!(img.starts_with(b"P5\n12 10\n65535\n"));
    assert_eq!(img.len(), "P5\n12 10\n65535\n".len() + 12 * 10 * 2);
    assert_eq!(stdout(&o).lines().count(), 10);
}

#[test]
fn stats_lists_every_case_row() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(&dir, "q.txt", "0 0 0\n0.99 0 0\n5 5 5\n0 0 -1\n");
    let o = run(&[
        "stats",
        data("sphere.twm").to_str().unwrap(),
        q.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("metric,value"));
    assert_eq!(
        text.lines()
            .filter(|l| !l.starts_with('#') && l.contains(','))
            .count(),
        8
    );
}

#[test]
fn compare_shows_mesh_errors_near_the_surface() {
    let dir = tempfile::tempdir().unwrap();
    let pts: String = (0..40)
        .map(|k| {
            let a = k as f64 * 0.61;
            let b = k as f64 * 0.37;
            let r = if k % 2 == 0 { 0.995 } else { 1.005 };
            format!(
                "{} {} {}\n",
                r * a.cos() * b.sin(),
                r * a.sin() * b.sin(),
                r * b.cos()
            )
        })
        .collect();
    let q = write(&dir, "q.txt", &pts);
    let o = run(&[
        "compare",
        data("sphere.twm").to_str().unwrap(),
        q.to_str().unwrap(),
        "--methods",
        "gwn,mesh:8",
        "--reference",
        "sphere:0,0,0,1",
    ]);
    let text = stdout(&o);
    let row = |name: &str| -> Vec<String> {
        text.lines()
            .find(|l| l.starts_with(name))
            .unwrap_or_else(|| panic!("no {name} row in\n{text}"))
            .split(',')
            .map(str::to_string)
            .collect()
    };
    assert_eq!(row("gwn,")[1], "0", "{text}");
    assert_ne!(row("mesh:8")[1], "0", "{text}");
    assert_eq!(o.status.code(), Some(0));
}
