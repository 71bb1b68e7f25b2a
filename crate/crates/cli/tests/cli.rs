use nalgebra::{DVector, Vector3};
use screwkin::chain::jacobian_spatial;
use screwkin::derivatives::twist_derivatives_recursive;
use screwkin::loop_solver::{loop_taylor_motion, CoordinateSplit, LoopOptions};
use screwkin::{models, Chain, DerivativeStack, UnitScrew};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn model(name: &str) -> String {
    root().join("models").join(name).display().to_string()
}

fn tmp(name: &str, contents: &str) -> String {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, contents).unwrap();
    p.display().to_string()
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_screwkin"));
    cmd.args(args).env_remove("SCREWKIN_TOL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let errors: Vec<String> = report_validator().iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{args:?} report violates the schema: {errors:?}");
    v
}

fn code(args: &[&str]) -> (i32, String) {
    let out = run(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(root().join("schemas").join(name)).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn report_validator() -> jsonschema::Validator {
    schema("report.schema.json")
}

fn floats(v: &Value) -> Vec<f64> {
    match v {
        Value::Number(n) => vec![n.as_f64().unwrap()],
        Value::Array(a) => a.iter().flat_map(floats).collect(),
        _ => panic!("not numeric: {v}"),
    }
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

const IDENTITY: [f64; 16] = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];

#[test]
fn fk_reference_configurations_are_identity() {
    let r = ok(&["fk", "--model", &model("four_bar.json")]);
    assert_close(&floats(&r["outputs"]["pose"]), &IDENTITY, 0.0);
    let r = ok(&["fk", "--model", &model("four_c.json"), "--config", "reference", "--link", "8"]);
    assert_eq!(r["outputs"]["link"], 8);
    assert_close(&floats(&r["outputs"]["pose"]), &IDENTITY, 0.0);
}

#[test]
fn fk_translates_along_prismatic_axis() {
    let r = ok(&["fk", "--model", &model("four_c.json"), "--q=0,0.5,0,0,0,0,0,0", "--link", "2"]);
    assert_eq!(floats(&r["outputs"]["pose"])[3], 0.5);
}

#[test]
fn malformed_json_reports_position() {
    let bad = tmp("malformed.json", "{\n  \"name\": \"x\",\n  \"joints\": [\n");
    let (c, err) = code(&["fk", "--model", &bad]);
    assert_eq!(c, 2);
    assert!(err.contains("line 4 column 0"), "{err}");
}

#[test]
fn schema_violations_exit_two() {
    let unknown = tmp("unknown_field.json", r#"{"name":"x","joints":[{"type":"revolute","axis":[0,0,1],"point":[0,0,0],"mass":1}]}"#);
    let (c, err) = code(&["fk", "--model", &unknown]);
    assert_eq!(c, 2);
    assert!(err.contains("schema"), "{err}");
    let helical = tmp("helical_no_pitch.json", r#"{"name":"x","joints":[{"type":"helical","axis":[0,0,1],"point":[0,0,0]}]}"#);
    assert_eq!(code(&["fk", "--model", &helical]).0, 2);
    assert_eq!(code(&["fk", "--model", &model("four_bar.json"), "--config", "nope"]).0, 2);
    assert_eq!(code(&["fk", "--model", &model("four_bar.json"), "--q=1,2"]).0, 2);
    assert_eq!(code(&["fk", "--model", &model("four_bar.json"), "--link", "5"]).0, 2);
}

#[test]
fn model_schema_agrees_with_loader() {
    let v = schema("model.schema.json");
    for name in ["four_bar.json", "four_c.json", "two_r_two_c.json", "delassus_4h.json", "delassus_4h_equal.json"] {
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(model(name)).unwrap()).unwrap();
        assert!(v.is_valid(&doc), "{name}");
    }
    let rejected = [
        r#"{"name":"x","joints":[{"type":"helical","axis":[0,0,1],"point":[0,0,0]}]}"#,
        r#"{"name":"x","joints":[{"type":"revolute","axis":[0,0,1],"point":[0,0,0],"pitch":1}]}"#,
        r#"{"name":"x","joints":[{"type":"spherical","axis":[0,0,1],"point":[0,0,0]}]}"#,
        r#"{"name":"x","joints":[]}"#,
        r#"{"name":"x","joints":[{"type":"revolute","axis":[0,1],"point":[0,0,0]}]}"#,
    ];
    for (k, text) in rejected.iter().enumerate() {
        assert!(!v.is_valid(&serde_json::from_str(text).unwrap()), "case {k}");
        let path = tmp(&format!("rejected_{k}.json"), text);
        assert_eq!(code(&["fk", "--model", &path]).0, 2, "case {k}");
    }
}

#[test]
fn derivs_first_entry_is_jacobian_times_velocity() {
    let q = [0.1, -0.2, 0.3, 0.05, 0.4, -0.1];
    let qd = [0.5, -1.0, 0.25, 0.3, 0.7, -0.2];
    let stack = tmp("derivs_stack.json", &serde_json::json!({"q": q, "derivs": [qd, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]]}).to_string());
    let r = ok(&["derivs", "--model", &model("two_r_two_c.json"), "--stack", &stack, "--order", "1"]);
    let chain = models::two_r_two_c(1.0);
    let v = jacobian_spatial(&chain, &DVector::from_column_slice(&q), 6).unwrap() * DVector::from_column_slice(&qd);
    assert_close(&floats(&r["outputs"]["derivatives"][0]), v.as_slice(), 1e-14);
    assert_eq!(r["outputs"]["derivatives"].as_array().unwrap().len(), 2);
}

#[test]
fn body_fixed_output_equals_converted_spatial_output() {
    let stack = tmp(
        "conv_stack.json",
        r#"{"q":[0.3,-0.4,0.2,0.1,-0.5,0.6,0.2,-0.1],"derivs":[[1,0.5,-0.3,0.2,0.4,-0.6,0.1,0.3],[0.2,0.1,0,0.3,-0.2,0.1,0.4,0],[0.1,0,0.2,0,0.1,0,-0.3,0.2]]}"#,
    );
    let m = model("four_c.json");
    for rep in ["b", "h"] {
        let s = ok(&["derivs", "--model", &m, "--stack", &stack, "--order", "2", "--rep", "s", "--link", "5"]);
        let target = ok(&["derivs", "--model", &m, "--stack", &stack, "--order", "2", "--rep", rep, "--link", "5"]);
        let twists = tmp(
            &format!("conv_twists_{rep}.json"),
            &serde_json::json!({"twists": s["outputs"]["derivatives"]}).to_string(),
        );
        let q = "--q=0.3,-0.4,0.2,0.1,-0.5,0.6,0.2,-0.1";
        let conv = ok(&["convert-rep", "--model", &m, q, "--stack", &twists, "--from", "s", "--to", rep, "--link", "5"]);
        assert_close(&floats(&conv["outputs"]["derivatives"]), &floats(&target["outputs"]["derivatives"]), 1e-12);
    }
}

#[test]
fn order_above_maximum_exits_two() {
    let stack = tmp("short_stack.json", r#"{"derivs":[[1,0,0,0]]}"#);
    let (c, err) = code(&["derivs", "--model", &model("four_bar.json"), "--stack", &stack, "--order", "9"]);
    assert_eq!(c, 2);
    assert!(err.contains("exceeds"), "{err}");
}

#[test]
fn mobility_of_reference_linkages() {
    let cases = [
        ("four_c.json", 6, 2, false),
        ("two_r_two_c.json", 4, 2, false),
        ("delassus_4h.json", 4, 0, true),
        ("delassus_4h_equal.json", 3, 1, false),
    ];
    for (name, g, delta, flag) in cases {
        let r = ok(&["mobility", "--model", &model(name)]);
        let o = &r["outputs"];
        assert_eq!(o["g_total"], g, "{name}");
        assert_eq!(o["loops"][0]["g"], g, "{name}");
        assert_eq!(o["loops"][0]["closure_basis"].as_array().unwrap().len(), g);
        assert_eq!(o["delta_str"], delta, "{name}");
        let flagged = o["flags"].as_array().unwrap().iter().any(|f| f == "paradoxical-candidate");
        assert_eq!(flagged, flag, "{name}");
    }
}

#[test]
fn mobility_requires_closed_configuration() {
    let (c, err) = code(&["mobility", "--model", &model("four_bar.json"), "--q=0.3,0,0,0"]);
    assert_eq!(c, 3);
    assert!(err.contains("closure"), "{err}");
}

#[test]
fn cone_membership_of_four_c_example() {
    let r = ok(&["cone", "--model", &model("four_c.json"), "--x=0,0,1,2,0,0,-1,-2", "--order", "4"]);
    let res = &r["outputs"]["results"][0];
    assert_eq!(res["member"], true);
    assert_eq!(res["member_order"], 4);
    // A generic first-order cone vector fails at second order.
    let r = ok(&["cone", "--model", &model("four_c.json"), "--x=0.5,0.7,-0.6,0.9,-0.5,-0.7,0.6,-0.9", "--order", "2"]);
    let verdicts = &r["outputs"]["results"][0]["verdicts"];
    assert_eq!(verdicts[0], "member");
    assert_eq!(verdicts[1], "nonmember");
}

#[test]
fn cone_accepts_several_vectors() {
    let r = ok(&["cone", "--model", &model("four_c.json"), "--x=0,0,1,2,0,0,-1,-2", "--x=1,0,0,0,-1,0,0,0", "--order", "2"]);
    assert_eq!(r["outputs"]["results"].as_array().unwrap().len(), 2);
}

#[test]
fn loop_approx_matches_library_taylor_polynomial() {
    let r = ok(&[
        "loop-approx",
        "--model",
        &model("four_bar.json"),
        "--independent",
        "4",
        "--u=1;0;-1;0",
        "--dt",
        "0.1",
        "--order",
        "4",
    ]);
    let chain = models::four_bar();
    let split = CoordinateSplit::from_independent(vec![4], 4).unwrap();
    let u: Vec<DVector<f64>> = [1.0, 0.0, -1.0, 0.0].iter().map(|&v| DVector::from_vec(vec![v])).collect();
    let want = loop_taylor_motion(&chain, &DVector::zeros(4), &split, &u, 0.1, 4, &LoopOptions::default()).unwrap();
    assert_eq!(floats(&r["outputs"]["q_approx"]), want.as_slice());
    assert_close(&floats(&r["outputs"]["derivatives"][0]), &[-0.5, 0.5, -1.0, 1.0], 1e-12);
    assert!(r["outputs"]["closure_residual"].as_f64().unwrap() < 1e-5);
}

fn six_axis_model() -> (Chain, String) {
    let spec = [
        ([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]),
        ([0.0, 1.0, 0.0], [0.0, 0.0, 0.4]),
        ([0.0, 1.0, 0.0], [0.5, 0.0, 0.4]),
        ([1.0, 0.0, 0.0], [0.9, 0.0, 0.4]),
        ([0.0, 1.0, 0.0], [0.9, 0.0, 0.4]),
        ([1.0, 0.0, 0.0], [1.0, 0.0, 0.4]),
    ];
    let joints = spec.iter().map(|(a, p)| UnitScrew::revolute(Vector3::from(*a), Vector3::from(*p)).unwrap()).collect();
    let json = serde_json::json!({
        "name": "arm",
        "joints": spec.iter().map(|(a, p)| serde_json::json!({"type": "revolute", "axis": a, "point": p})).collect::<Vec<_>>(),
    });
    (Chain::new("arm", joints).unwrap(), tmp("arm.json", &json.to_string()))
}

#[test]
fn ik_recovers_joint_derivatives() {
    let (chain, path) = six_axis_model();
    let q = [0.2, -0.5, 0.9, 0.3, -0.7, 0.4];
    let d: Vec<Vec<f64>> = vec![
        vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.2],
        vec![0.1, 0.2, -0.3, 0.4, 0.0, -0.1],
        vec![-0.2, 0.1, 0.0, 0.3, 0.2, 0.1],
        vec![0.05, -0.1, 0.2, 0.0, 0.1, -0.3],
    ];
    let st = DerivativeStack::new(DVector::from_column_slice(&q), d.iter().map(|v| DVector::from_column_slice(v)).collect()).unwrap();
    let fk = twist_derivatives_recursive(&chain, &st, 3).unwrap();
    let twists: Vec<Vec<f64>> = (0..4).map(|l| fk.twist(6, l).as_slice().to_vec()).collect();
    let file = tmp("ik_twists.json", &serde_json::json!({ "twists": twists }).to_string());
    let qs = format!("--q={}", q.map(|v| v.to_string()).join(","));
    let r = ok(&["ik", "--model", &path, &qs, "--twists", &file]);
    let got = &r["outputs"]["qd"];
    for (l, want) in d.iter().enumerate() {
        assert_close(&floats(&got[l]), want, 1e-9);
    }
}

#[test]
fn dexterity_reports_and_fails_numerically_when_singular() {
    let (_, path) = six_axis_model();
    let r = ok(&["dexterity", "--model", &path, "--q=0.2,-0.5,0.9,0.3,-0.7,0.4", "--grad", "--hess"]);
    let o = &r["outputs"];
    assert!(o["manipulability"].as_f64().unwrap() > 0.0);
    assert_eq!(o["manipulability_gradient"].as_array().unwrap().len(), 6);
    assert_eq!(o["manipulability_hessian"].as_array().unwrap().len(), 6);
    assert!(r["diagnostics"]["condition_numbers"]["jacobian"].as_f64().unwrap() >= 1.0);
    assert_eq!(code(&["dexterity", "--model", &model("four_bar.json"), "--grad"]).0, 3);
}

#[test]
fn taylor_km_emits_differentials_and_polynomials() {
    let polys = Path::new(env!("CARGO_TARGET_TMPDIR")).join("four_c_polys.txt");
    let r = ok(&[
        "taylor-km",
        "--model",
        &model("four_c.json"),
        "--order",
        "2",
        "--x=0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8",
        "--emit-polys",
        &polys.display().to_string(),
    ]);
    let o = &r["outputs"];
    assert_eq!(o["differentials"].as_array().unwrap().len(), 3);
    assert_close(&floats(&o["differentials"][0]), &IDENTITY, 0.0);
    assert!(o["polynomials"]["equations"].as_u64().unwrap() > 0);
    assert!(!std::fs::read_to_string(polys).unwrap().trim().is_empty());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["cone", "--model", &model("four_c.json"), "--x=0,0,1,2,0,0,-1,-2", "--order", "3"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reports_round_trip_through_parse() {
    let out = run(&["mobility", "--model", &model("delassus_4h.json")]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    for x in floats_in(&v) {
        assert!(x.is_finite());
    }
    // Every float carries 17 significant digits.
    let g = v["outputs"]["loops"][0]["bracket_residual"].as_f64().unwrap();
    assert_eq!(format!("{g:.16e}"), text.split("\"bracket_residual\": ").nth(1).unwrap().split(',').next().unwrap());
}

fn floats_in(v: &Value) -> Vec<f64> {
    match v {
        Value::Number(n) => vec![n.as_f64().unwrap()],
        Value::Array(a) => a.iter().flat_map(floats_in).collect(),
        Value::Object(m) => m.values().flat_map(floats_in).collect(),
        _ => vec![],
    }
}

#[test]
fn tolerance_overrides_from_environment() {
    let args = ["fk", "--model", &model("four_bar.json")];
    let out = run_env(&args, &[("SCREWKIN_TOL", "loop=1e-6,cone=2e-8")]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["diagnostics"]["tolerances"]["loop"].as_f64().unwrap(), 1e-6);
    assert_eq!(v["diagnostics"]["tolerances"]["cone"].as_f64().unwrap(), 2e-8);
    let out = run_env(&args, &[("SCREWKIN_TOL", "bogus=1")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn renormalized_axis_is_warned_on_stderr() {
    let path = tmp("long_axis.json", r#"{"name":"x","joints":[{"type":"revolute","axis":[0,0,2],"point":[0,0,0]}]}"#);
    let out = run(&["fk", "--model", &path]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("renormalized"));
}
