use std::process::{Command, Output};

fn gp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gp-spectrum"))
        .args(args)
        .env("GP_SPECTRUM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn kernel_csv_at_telescoping_point() {
    let o = gp(&["kernel", "--alpha", "1", "--beta", "1", "--z", "1,0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "quantity,z_re,z_im,K_re,K_im,err_bound,terms,error");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k: f64 = row[3].parse().unwrap();
    assert!((k - 1.0).abs() < 1e-10);
}

#[test]
fn malformed_point_is_usage_error() {
    let o = gp(&["kernel", "--alpha", "1", "--beta", "1", "--z", "1;2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn parameters_outside_model_class_are_rejected() {
    let o = gp(&["kernel", "--alpha", "0.5", "--beta", "0.5", "--z", "1,0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha + beta > 1"));
}

#[test]
fn inverted_mode_range_is_usage_error() {
    let o = gp(&["spectrum", "--alpha", "0.5", "--beta", "1", "--n-min", "10", "--n-max", "5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn spectrum_eleven_modes() {
    let o = gp(&["spectrum", "--alpha", "0.5", "--beta", "1", "--n-min", "50", "--n-max", "60", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = doc["results"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r["n"].as_u64().unwrap(), 50 + i as u64);
        assert!(r["residual"].as_f64().unwrap() < 1e-10);
        assert!(r["z"]["re"].as_f64().unwrap() < 0.0);
    }
    assert_eq!(doc["config"]["command"], "spectrum");
}

#[test]
fn verify_is_reproducible_and_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let args = ["verify", "--experiment", "sector", "--samples", "2000", "--seed", "11"];
    let first = gp(&args);
    assert_eq!(first.status.code(), Some(0));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(gp(&with_out).status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), first.stdout);
    let other = gp(&["verify", "--experiment", "sector", "--samples", "2000", "--seed", "12"]);
    assert_ne!(other.stdout, first.stdout);
}
