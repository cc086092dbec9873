use std::process::{Command, Output};

use serde_json::Value;

fn horocp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horocp")).args(args).env_remove("HOROCP_CAP").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn separate_diamond_is_separated() {
    let out = horocp(&["separate", "--group", "Z2", "--gens", "diamond"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "separate");
    assert_eq!(v["result"]["separated"], true);
    assert_eq!(v["result"]["rank"], 2);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["command", "diagnostics", "inputs", "result"]);
}

#[test]
fn separate_central_sqrt_has_sublinearity_witness() {
    let out = horocp(&["separate", "--group", "Z", "--length", "central-sqrt"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["separated"], false);
    assert_eq!(v["result"]["witness_kind"], "sublinearity_failure");
    let ratio = v["result"]["sublinearity"]["ratio"].as_f64().unwrap();
    assert!((ratio - 0.04).abs() < 1e-15);
}

#[test]
fn verify_cocycle_on_heisenberg() {
    let out = horocp(&["verify", "cocycle", "--group", "H3", "--radius", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["result"]["pass"], true);
    assert_eq!(v["result"]["residual"].as_f64(), Some(0.0));
    assert!(v["result"]["anchor"].as_str().unwrap().contains("φ"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let a = horocp(&["verify", "cocycle", "--seed", "7"]);
    let b = horocp(&["verify", "cocycle", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = horocp(&["verify", "cocycle", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn floats_have_seventeen_significant_digits() {
    let out = horocp(&["stable-norm", "--group", "Z2", "--g", "3,1", "--scale", "1/3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"dual_norm_value\": 1.3333333333333333e0"), "{text}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(horocp(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(horocp(&["separate", "--no-such-flag"]).status.code(), Some(2));
    let out = horocp(&["verify", "no_such_check"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["diagnostics"]["kind"], "usage");
}

#[test]
fn cap_errors_carry_cap_diagnostic() {
    let out = horocp(&["group-ball", "--group", "H3", "--radius", "6", "--cap", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["diagnostics"]["kind"], "cap");

    let out = Command::new(env!("CARGO_BIN_EXE_horocp"))
        .args(["group-ball", "--group", "H3", "--radius", "6"])
        .env("HOROCP_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["diagnostics"]["kind"], "cap");
}

#[test]
fn group_ball_counts_spheres() {
    let out = horocp(&["group-ball", "--group", "Z2", "--radius", "3", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["size"], 25);
    let counts: Vec<u64> =
        v["result"]["spheres"].as_array().unwrap().iter().map(|s| s["count"].as_u64().unwrap()).collect();
    assert_eq!(counts, [1, 4, 8, 12]);
    assert_eq!(v["result"]["elements"].as_array().unwrap().len(), 25);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = std::env::temp_dir().join(format!("horocp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# defaults\ngroup = Z3\ngens = standard\n").unwrap();
    let out = horocp(&["separate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["rank"], 3);
    let out = horocp(&["separate", "--config", cfg.to_str().unwrap(), "--group", "Z"]);
    assert_eq!(json(&out)["result"]["rank"], 1);

    let target = dir.join("out.json");
    let out = horocp(&["facets", "--group", "Z2", "--gens", "hexagonal", "-o", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["result"]["count"], 6);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn busemann_matches_facet_functional() {
    let out = horocp(&["busemann", "--group", "Z2", "--direction", "2,1", "--g", "1,-3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["value"].as_f64(), Some(-2.0));
    assert_eq!(v["result"]["facet_residual"].as_f64(), Some(0.0));

    let out = horocp(&["busemann", "--group", "H3", "--word", "a|b", "--g", "a", "--steps", "16"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["value"].as_f64(), Some(1.0));
}

#[test]
fn mk_distance_on_two_point_group() {
    let out = horocp(&["mk-distance", "--order", "2", "--brute-force-grid", "21"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["result"]["distance"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!(v["result"]["brute_force_residual"].as_f64().unwrap() < 1e-4);
}

#[test]
fn af_triple_and_nctorus_pass() {
    let out = horocp(&["af-triple", "--orders", "3,2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["details"]["rank_q1"].as_f64(), Some(2.0));
    let out = horocp(&["nctorus", "--q", "5", "--p", "2", "--n-min", "-3", "--n-max", "3", "--radius", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["result"]["pass"], true);
}

#[test]
fn phi_attains_length_at_g() {
    let out = horocp(&["phi", "--group", "H3", "--g", "1,1,0", "--radius", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let lg = v["result"]["length_g"].as_f64().unwrap();
    assert_eq!(v["result"]["max_abs"].as_f64(), Some(lg));
}
