use std::path::Path;

use gengeom::cli::{run, Report};

fn report(path: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn arg(p: &Path) -> String {
    p.display().to_string()
}

const NORMAL_FORM: &str = r#"{"dim":5,
  "rho1":{"terms":[{"indices":[0,1],"coeff":1},{"indices":[2,3],"coeff":1},{"indices":[0,2,3,4],"coeff":1}]},
  "rho2":{"terms":[{"indices":[],"coeff":1},{"indices":[1,2,3,4],"coeff":1}]}}"#;

#[test]
fn identities_pass_and_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let code =
            run(["gengeom", "verify", "identities", "--dim", "3", "--cases", "100", "--seed", "7", "--out", &arg(out)]);
        assert_eq!(code, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r = report(&a);
    assert_eq!(r.checks.len(), 5);
    assert!(r.checks.iter().all(|c| c.passed && c.residual == "0"));
    assert_eq!(r.metadata["seed"], 7);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(["gengeom", "frobnicate"]), 2);
    assert_eq!(run(["gengeom", "verify", "identities", "--cases", "many"]), 2);
}

#[test]
fn normal_form_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let rho = dir.path().join("rho.json");
    let out = dir.path().join("out.json");
    std::fs::write(&rho, NORMAL_FORM).unwrap();
    assert_eq!(run(["gengeom", "spin55", "analyze", &arg(&rho), "--out", &arg(&out)]), 0);
    let r = report(&out);
    assert_eq!(r.results["stable"], true);
    assert_eq!(r.results["orbit_sign"], -1);
    assert_eq!(r.results["f"], "-8");
    for key in ["d_rho1", "d_rho2", "d_rho_hat1", "d_rho_hat2"] {
        assert_eq!(r.results["residuals"][key], "0");
    }
    assert_eq!(r.results["gram"][1][1], "1/2");
    assert_eq!(r.results["commuting"]["passed"], true);
}

#[test]
fn unstable_pair_is_a_named_failure() {
    let dir = tempfile::tempdir().unwrap();
    let rho = dir.path().join("rho.json");
    let out = dir.path().join("out.json");
    std::fs::write(
        &rho,
        r#"{"rho1":{"terms":[{"indices":[],"coeff":1}]},"rho2":{"terms":[{"indices":[],"coeff":2}]}}"#,
    )
    .unwrap();
    assert_eq!(run(["gengeom", "spin55", "analyze", &arg(&rho), "--out", &arg(&out)]), 1);
    let r = report(&out);
    assert_eq!(r.results["stable"], false);
    assert!(!r.checks[0].passed);
}

#[test]
fn malformed_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let rho = dir.path().join("rho.json");
    std::fs::write(&rho, "{\"rho1\": {\"terms\": [\n  {\"indices\": [0}\n]}}").unwrap();
    assert_eq!(run(["gengeom", "spin55", "analyze", &arg(&rho)]), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(run(["gengeom", "verify", "skew-torsion", "--input", &arg(&missing)]), 2);
}

#[test]
fn skew_torsion_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let metric = dir.path().join("metric.json");
    let points = dir.path().join("points.json");
    let out = dir.path().join("out.json");
    std::fs::write(
        &metric,
        r#"{"C":[[1,[{"exponents":[1,0,0],"coeff":"1/2"}],0],[[{"exponents":[1,0,0],"coeff":"-1/2"}],2,0],[0,0,3]]}"#,
    )
    .unwrap();
    std::fs::write(&points, r#"[["1/2",0,1],[1,2,3]]"#).unwrap();
    let code = run([
        "gengeom",
        "verify",
        "skew-torsion",
        "--input",
        &arg(&metric),
        "--points",
        &arg(&points),
        "--out",
        &arg(&out),
    ]);
    assert_eq!(code, 0);
    assert!(report(&out).passed());
}

#[test]
fn twisted_suite_on_a_cover_file() {
    let dir = tempfile::tempdir().unwrap();
    let cover = dir.path().join("cover.json");
    let out = dir.path().join("out.json");
    std::fs::write(
        &cover,
        r#"{"dim":3,"charts":["a","b"],
            "A":{"(a,b)":{"terms":[{"indices":[1],"coeff":[{"exponents":[1,0,0],"coeff":1}]}]}},
            "B":{"a":{"terms":[{"indices":[1,2],"coeff":[{"exponents":[1,0,0],"coeff":1}]}]},
                 "b":{"terms":[{"indices":[1,2],"coeff":[{"exponents":[1,0,0],"coeff":1}]},{"indices":[0,1],"coeff":1}]}}}"#,
    )
    .unwrap();
    assert_eq!(run(["gengeom", "verify", "twisted", "--cover", &arg(&cover), "--cases", "10", "--out", &arg(&out)]), 0);
    let r = report(&out);
    assert_eq!(
        r.checks.iter().map(|c| c.id.as_str()).collect::<Vec<_>>(),
        ["cocycle", "twisted_square", "curving_round_trip"]
    );
}

#[test]
fn flow_then_sixdim() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let traj = dir.path().join("traj.bin");
    let flow_out = dir.path().join("flow.json");
    let six_out = dir.path().join("six.json");
    std::fs::write(
        &cfg,
        r#"{"N":4,"dt":0.02,"steps":3,"epsilon":0.01,
            "perturbation":{"terms":[{"component":1,"indices":[1],"mode":[1,0,1,0,0],"cos":1.0},
                                     {"component":2,"indices":[2],"mode":[1,0,0,0,0],"sin":1.0}]}}"#,
    )
    .unwrap();
    let code =
        run(["gengeom", "flow", "run", "--config", &arg(&cfg), "--trajectory", &arg(&traj), "--out", &arg(&flow_out)]);
    assert_eq!(code, 0);
    let r = report(&flow_out);
    assert_eq!(r.metadata["N"], 4);
    assert_eq!(r.results["nahm"].as_array().unwrap().len(), 2);
    let code = run([
        "gengeom",
        "sixdim",
        "check",
        "--trajectory",
        &arg(&traj),
        "--z",
        "-1/2,1,2,0,inf",
        "--out",
        &arg(&six_out),
    ]);
    assert_eq!(code, 0);
    let r = report(&six_out);
    assert_eq!(r.metadata["z"], serde_json::json!(["-0.5", "1", "2", "0", "inf"]));
    assert!(r.checks.iter().any(|c| c.id == "span_signature" && c.passed));
}

#[test]
fn flow_config_rejects_even_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"N":4,"dt":0.1,"steps":1,"epsilon":0.1,"perturbation":{"terms":[{"indices":[0,1],"mode":[1,0,0,0,0],"cos":1}]}}"#).unwrap();
    assert_eq!(run(["gengeom", "flow", "run", "--config", &arg(&cfg)]), 2);
}
