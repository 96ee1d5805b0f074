use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_archipelago"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn unit_disk_moments_start_with_pi() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("disk.json");
    std::fs::write(&spec, r#"{"islands":[{"type":"disk","center":[0,0],"radius":1}]}"#).unwrap();
    let out = dir.path().join("m.csv");
    let (code, msg) = run(&["moments", "--input", p(&spec), "--degree", "5", "--precision", "128", "--out", p(&out)]);
    assert_eq!(code, 0, "{msg}");
    let csv = std::fs::read_to_string(&out).unwrap();
    let row = csv.lines().find(|l| l.starts_with("0,0,")).unwrap();
    let re: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((re - std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn pipeline_is_deterministic_and_reconstructs_two_disks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = d.join("two.json");
    std::fs::write(
        &spec,
        r#"{"islands":[{"type":"disk","center":[-2,0],"radius":1},{"type":"disk","center":[3,0],"radius":0.6666666666666666}]}"#,
    )
    .unwrap();
    let m = d.join("m.csv");
    let b = d.join("b.json");
    let lam = d.join("lambda.csv");
    assert_eq!(run(&["moments", "--input", p(&spec), "--degree", "101", "--out", p(&m)]).0, 0);
    assert_eq!(run(&["basis", "--moments", p(&m), "--out", p(&b), "--lambda-table", p(&lam)]).0, 0);
    assert_eq!(std::fs::read_to_string(&lam).unwrap().lines().count(), 102);

    let out1 = d.join("r1");
    let out2 = d.join("r2");
    for out in [&out1, &out2] {
        let (code, msg) = run(&["reconstruct", "--basis", p(&b), "--n", "100", "--out-dir", p(out), "--no-timestamp"]);
        assert_eq!(code, 0, "{msg}");
        assert!(msg.contains("2 closed"), "{msg}");
    }
    for f in ["boundary_100.csv", "boundary_100.svg"] {
        assert_eq!(std::fs::read(out1.join(f)).unwrap(), std::fs::read(out2.join(f)).unwrap(), "{f} differs");
    }
    let svg = std::fs::read_to_string(out1.join("boundary_100.svg")).unwrap();
    assert_eq!(svg.matches("Z\"").count(), 2);

    let (code, msg) = run(&["zeros", "--basis", p(&b), "--n", "30", "--out-dir", p(&out1)]);
    assert_eq!(code, 0, "{msg}");
    let zeros = std::fs::read_to_string(out1.join("zeros_30.csv")).unwrap();
    assert_eq!(zeros.lines().count(), 31);
    assert!(std::fs::read_to_string(out1.join("zeros_30.svg")).unwrap().contains("<!--"));

    let (code, msg) = run(&["field", "--basis", p(&b), "--n", "10", "--grid=-4,4,-2,2,41,21", "--out-dir", p(&out1)]);
    assert_eq!(code, 0, "{msg}");
    assert_eq!(std::fs::read_to_string(out1.join("field_10.csv")).unwrap().lines().count(), 1 + 41 * 21);

    let (code, msg) = run(&["green", "--input", p(&spec), "--out-dir", p(&out1), "--no-timestamp"]);
    assert_eq!(code, 0, "{msg}");
    assert!(msg.contains("critical point"), "{msg}");
    assert!(out1.join("green.json").exists());
}

#[test]
fn lemniscate_check_reports_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let (code, msg) = run(&["lemniscate-check", "--m", "3", "--r", "0.9", "--n-range", "38..52", "--out", p(&out)]);
    assert_eq!(code, 0, "{msg}");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 16);
    let row39: Vec<&str> = csv.lines().find(|l| l.starts_with("39,")).unwrap().split(',').collect();
    let lam: f64 = row39[3].parse().unwrap();
    assert!((lam - 305.078943).abs() < 5e-6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(&["nonsense"]).0, 2);
    assert_eq!(run(&["basis", "--moments", p(&d.join("missing.csv")), "--out", p(&d.join("b.json"))]).0, 2);

    let spec = d.join("pair.json");
    std::fs::write(
        &spec,
        r#"{"islands":[{"type":"disk","center":[-2,0],"radius":1},{"type":"disk","center":[2,0],"radius":1}]}"#,
    )
    .unwrap();
    let m = d.join("m.csv");
    assert_eq!(run(&["moments", "--input", p(&spec), "--degree", "6", "--out", p(&m)]).0, 0);
    // n must stay below the moment degree
    assert_eq!(run(&["basis", "--moments", p(&m), "--n", "6", "--out", p(&d.join("b.json"))]).0, 4);
    // a two-point measure cannot support degree-2 orthogonal polynomials
    let csv = "degree,3,precision_bits,53\n0,0,2,0\n0,1,0,0\n0,2,2,0\n0,3,0,0\n1,1,2,0\n1,2,0,0\n1,3,2,0\n2,2,2,0\n2,3,0,0\n3,3,2,0\n";
    let bad = d.join("bad.csv");
    std::fs::write(&bad, csv).unwrap();
    let (code, msg) = run(&["basis", "--moments", p(&bad), "--n", "2", "--out", p(&d.join("b2.json"))]);
    assert_eq!(code, 3, "{msg}");

    let ell = d.join("ellipse.json");
    std::fs::write(&ell, r#"{"islands":[{"type":"ellipse","center":[0,0],"a":1,"b":0.5}]}"#).unwrap();
    assert_eq!(run(&["green", "--input", p(&ell), "--out-dir", p(d)]).0, 4);
}

#[test]
fn radon_import_recovers_disk_moments() {
    let dir = tempfile::tempdir().unwrap();
    let pi = std::f64::consts::PI;
    let mut csv = String::from("theta,k,a\n");
    for i in 0..12 {
        let theta = pi * i as f64 / 12.0;
        for (k, a) in [pi, 0.0, pi / 4.0, 0.0, pi / 8.0].iter().enumerate() {
            csv += &format!("{theta},{k},{a}\n");
        }
    }
    let input = dir.path().join("radon.csv");
    std::fs::write(&input, csv).unwrap();
    let out = dir.path().join("m.csv");
    let (code, msg) = run(&["radon-import", "--input", p(&input), "--degree", "2", "--precision", "128", "--out", p(&out)]);
    assert_eq!(code, 0, "{msg}");
    let text = std::fs::read_to_string(&out).unwrap();
    let value = |j: &str, k: &str| -> (f64, f64) {
        let row: Vec<&str> = text.lines().find(|l| l.starts_with(&format!("{j},{k},"))).unwrap().split(',').collect();
        (row[2].parse().unwrap(), row[3].parse().unwrap())
    };
    let (re, im) = value("1", "1");
    assert!((re - pi / 2.0).abs() < 1e-12 && im.abs() < 1e-12, "{re} {im}");
    let (re, im) = value("0", "2");
    assert!(re.abs() < 1e-12 && im.abs() < 1e-12, "{re} {im}");
}
