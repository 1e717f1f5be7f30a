use std::process::{Command, Output};

fn cuspbase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspbase")).args(args).env_remove("CUSPBASE_PREC").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<String> {
    stdout(o).lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

#[test]
fn dims_tables() {
    let o = cuspbase(&["dims", "--level", "2", "--weights", "2..18"]);
    assert!(o.status.success());
    assert!(rows(&o).contains(&"N=2 dim_S 0 0 0 1 1 2 2 3 3".to_string()));
    let o = cuspbase(&["dims", "--level", "9", "--weights", "2..16"]);
    assert!(rows(&o).contains(&"N=9 dim_S 0 1 3 5 7 9 11 13".to_string()));
    let o = cuspbase(&["dims", "--level", "1", "--weights", "2..2"]);
    assert!(rows(&o).contains(&"N=1 dim_S 0".to_string()));
    let o = cuspbase(&["dims", "--level", "all"]);
    assert_eq!(rows(&o).len(), 30);
}

#[test]
fn dims_rejects_odd_bounds() {
    let o = cuspbase(&["dims", "--weights", "3..9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn basis_text_rows() {
    let o = cuspbase(&["basis", "--level", "2", "--weight", "8", "--space", "cusp"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 1);
    assert!(r[0].starts_with("1 1: 0 1 -8 12 64 -210 -96 1016"), "{}", r[0]);

    let o = cuspbase(&["basis", "--level", "3", "--weight", "2", "--space", "cusp"]);
    assert!(o.status.success());
    assert!(rows(&o).is_empty());
    assert!(stdout(&o).starts_with("# cuspbase/1 basis level=3 weight=2 space=cusp"));

    let o = cuspbase(&["basis", "--level", "7", "--weight", "6", "--space", "cusp"]);
    let vals: Vec<String> = rows(&o).iter().map(|r| r.split(':').next().unwrap().to_string()).collect();
    assert_eq!(vals, ["1 1", "2 2", "3 3"]);
}

#[test]
fn basis_jsonl_is_parseable() {
    let o = cuspbase(&["basis", "--level", "10", "--weight", "6", "--space", "full", "--format", "jsonl"]);
    assert!(o.status.success());
    let objs: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(objs.len(), 9);
    for (i, v) in objs.iter().enumerate() {
        assert_eq!(v["format"], "cuspbase/1");
        assert_eq!(v["level"], 10);
        assert_eq!(v["weight"], 6);
        assert_eq!(v["space"], "full");
        assert_eq!(v["index"], i as u64 + 1);
        let coeffs = v["coeffs"].as_array().unwrap();
        let val = v["valuation"].as_u64().unwrap() as usize;
        assert_eq!(coeffs[val], "1");
        assert!(coeffs.iter().all(|c| c.is_string()));
    }
}

#[test]
fn precision_flag_and_environment() {
    let o = cuspbase(&["basis", "--level", "4", "--weight", "6", "--prec", "20"]);
    assert_eq!(rows(&o)[0].split(' ').count(), 2 + 20);
    let o = Command::new(env!("CARGO_BIN_EXE_cuspbase"))
        .args(["basis", "--level", "4", "--weight", "6"])
        .env("CUSPBASE_PREC", "15")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("prec=15"));
    let o = cuspbase(&["basis", "--level", "4", "--weight", "6", "--prec", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn basis_usage_errors() {
    assert_eq!(cuspbase(&["basis", "--level", "11", "--weight", "4"]).status.code(), Some(2));
    assert_eq!(cuspbase(&["basis", "--level", "2", "--weight", "7"]).status.code(), Some(2));
    assert_eq!(cuspbase(&["basis", "--level", "2"]).status.code(), Some(2));
}

#[test]
fn expand_inputs() {
    let o = cuspbase(&["expand", "--eta", "4:8,2:-4", "--prec", "10"]);
    assert!(stdout(&o).contains("coeffs: 0 1 0 4 0 6 0 8 0 13"));
    let o = cuspbase(&["expand", "--expr", "1", "--prec", "3"]);
    assert!(stdout(&o).contains("coeffs: 1 0 0"));
    let o = cuspbase(&["expand", "--wpa", "2,0,2", "--prec", "8", "--scale", "-3"]);
    assert!(stdout(&o).contains("coeffs: 1 24 24 96 24 144 96 192"));
    let o = cuspbase(&["expand", "--wpa", "1,0,5", "--prec", "3"]);
    assert!(stdout(&o).contains("grid=1/2"));
    let o = cuspbase(&["expand", "--expr", "1/16*(wpa(2,0,5)-wpa(4,0,5))^2", "--prec", "6"]);
    assert!(stdout(&o).contains("coeffs: 0 0 1 2 5 10"));
}

#[test]
fn expand_syntax_error_points_at_the_column() {
    let o = cuspbase(&["expand", "--expr", "E[2,4,0]*/E[2,4,1]"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines[1].trim(), "E[2,4,0]*/E[2,4,1]");
    assert_eq!(lines[2].find('^').unwrap(), lines[1].find('/').unwrap());
}

#[test]
fn verify_exit_status() {
    let o = cuspbase(&["verify", "--level", "2", "--suite", "paper"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(rows(&o).iter().all(|l| l.starts_with("PASS ")));
    let o = cuspbase(&["verify", "--level", "all", "--suite", "structure"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&o).iter().filter(|l| l.starts_with("PASS lemma-dims/")).count(), 10);
    let o = cuspbase(&["verify", "--level", "12"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(cuspbase(&["verify", "--suite", "everything"]).status.code(), Some(2));
}

#[test]
fn verify_reports_a_corrupted_catalog() {
    let text = cuspbase::catalog::STANDARD_SOURCE.replace("qser(2: 1,6,27,80,", "qser(2: 1,6,27,81,");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("levels.cat");
    std::fs::write(&path, text).unwrap();
    let o = cuspbase(&["verify", "--level", "3", "--suite", "paper", "--catalog", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("FAIL printed/3/delta3")).unwrap();
    assert!(line.contains("first mismatch at q^5: expected 81, got 80"), "{line}");

    std::fs::write(&path, "level 2\ndelta = eta(2:16,1:-8\n").unwrap();
    let o = cuspbase(&["verify", "--catalog", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_byte_deterministic() {
    for args in [
        &["verify", "--level", "all", "--suite", "all"][..],
        &["basis", "--level", "6", "--weight", "10", "--format", "jsonl"][..],
        &["catalog"][..],
    ] {
        assert_eq!(cuspbase(args).stdout, cuspbase(args).stdout);
    }
}

#[test]
fn catalog_listing_marks_reconstructions() {
    let o = cuspbase(&["catalog", "--level", "3"]);
    assert!(stdout(&o).contains("F[6,3,1] = eta(1:6,3:6)  (reconstructed)"));
}
