use std::process::Command;

fn fklab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fklab"))
}

fn out_dir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("fklab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn kappa_writes_csv_and_json() {
    let out = out_dir("kappa");
    let st = fklab().args(["kappa", "--seed", "3", "--out"]).arg(&out).status().unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(out.join("kappa.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "experiment,q,p,n,quantity,value,stderr,tolerance,pass");
    let anchor = csv.lines().find(|l| l.contains(",kappa_minus_6,")).unwrap();
    assert!(anchor.ends_with(",1e-12,true"), "{anchor}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("kappa.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 3);
    assert_eq!(json["config"]["qs"].as_array().unwrap().len(), 6);
}

#[test]
fn failing_assertions_give_a_nonzero_exit() {
    let out = out_dir("crossing");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("cfg.json");
    let small = serde_json::json!({
        "exact_n": 1, "exact_qs": [2.0], "mc_n": 2, "mc_qs": [1.0], "square_n": 2, "rect_n": 1,
        "schedule": {"burn_in": 10, "samples": 200, "thin": 1, "chains": 1}
    });
    std::fs::write(&cfg, small.to_string()).unwrap();
    let st = fklab().args(["crossing", "--seed", "1", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    // at q = 2 the exact crossing probability is 1/(1+sqrt 2), not 1/2
    assert_eq!(st.code(), Some(1));
    assert!(out.join("crossing.csv").exists());
}

#[test]
fn bad_config_is_rejected() {
    let out = out_dir("bad");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("cfg.json");
    std::fs::write(&cfg, r#"{"no_such_field": 1}"#).unwrap();
    let st = fklab().args(["kappa", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(2));
}
