use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn instanton(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_instanton"))
        .args(args)
        .env("INSTANTON_OUT_DIR", dir)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_rows(text: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text);
    let head = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (head, rows)
}

#[test]
fn params_echo_figure_rates() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&instanton(dir.path(), &["params"]));
    let r = &v["rates"];
    assert_eq!(r["kappa"].as_f64().unwrap(), 1.0);
    assert!((r["epsilon"].as_f64().unwrap() - 0.4).abs() < 1e-15);
    assert!((r["mu2"].as_f64().unwrap().sqrt() - 0.4).abs() < 1e-15);
    assert!((r["nu2"].as_f64().unwrap().sqrt() - 0.4).abs() < 1e-15);
    assert_eq!(v["hierarchy"]["grade"], "marginal");
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = instanton(dir.path(), &["params", "--set", "mode=molecule", "--set", "L=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("degenerate geometry"));

    let out = instanton(dir.path(), &["params", "--set", "kapa=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kapa"));

    let out = instanton(dir.path(), &["params", "--set", "a1=abc"]);
    assert_eq!(out.status.code(), Some(2));

    let out = instanton(dir.path(), &["params", "--set", "mode=molecule", "--set", "b2=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("b2"));
}

#[test]
fn numerical_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = instanton(dir.path(), &["classical", "--flavor", "R", "--set", "solver_max_iter=1"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn decoupled_bvp_action_in_json() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&instanton(dir.path(), &["classical", "--flavor", "P", "--set", "c=0"]));
    let want = (8.0f64 * 1.0 * 0.5 / 9.0).sqrt();
    let s0 = v["result"]["S0"].as_f64().unwrap();
    assert!((s0 - want).abs() < 1e-8, "{s0}");
    assert!(!v["result"]["warnings"].as_array().unwrap().is_empty());
    let csv = std::fs::read(dir.path().join("classical_P_bvp.csv")).unwrap();
    let (head, rows) = csv_rows(&csv);
    assert_eq!(head, ["t", "p", "q"]);
    assert_eq!(rows.len(), v["grid"]["points"].as_u64().unwrap() as usize);
}

#[test]
fn analytic_profile_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = instanton(dir.path(), &["classical", "--flavor", "q", "--method", "analytic", "--set", "format=csv"]);
    assert!(out.status.success());
    let (head, rows) = csv_rows(&out.stdout);
    assert_eq!(head, ["t", "p", "q"]);
    let first: f64 = rows[0][2].parse().unwrap();
    let last: f64 = rows[rows.len() - 1][2].parse().unwrap();
    assert!(first < -0.99 && last > 0.99);
    // 17 significant digits
    assert_eq!(rows[1][0].split('e').next().unwrap().trim_start_matches('-').len(), 18);
}

#[test]
fn decoupled_splittings_pass_structure_checks() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["splittings", "--set", "a1=12", "--set", "a2=6", "--set", "b1=24", "--set", "b2=3", "--set", "c=0"];
    let v = json(&instanton(dir.path(), &args));
    assert_eq!(v["checks"]["sum_delta_ok"], true);
    assert_eq!(v["checks"]["tensor_ok"], true);
    assert!(v["timing_ms"]["flavors"].is_number());
    assert_eq!(v["amplitudes"].as_array().unwrap().len(), 41);

    let mut csv_args = args.to_vec();
    csv_args.extend(["--set", "format=csv"]);
    let out = instanton(dir.path(), &csv_args);
    let (head, rows) = csv_rows(&out.stdout);
    assert_eq!(head, ["T", "A_aa", "A_ab", "A_ac", "A_ad"]);
    let r0 = (2.0f64 * 12.0 * 6.0 * 2.0 * 24.0 * 3.0).powf(0.25) / std::f64::consts::PI;
    assert!((rows[0][1].parse::<f64>().unwrap() - r0).abs() <= 4.0 * f64::EPSILON * r0);
}

#[test]
fn molecule_splittings_report_ratio_forms() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&instanton(
        dir.path(),
        &["splittings", "--set", "mode=molecule", "--set", "Omega=100", "--set", "L=0.5", "--set", "a=2"],
    ));
    let m = &v["molecule"];
    for key in ["ratio_pq", "ratio_rq", "ratio_pq_closed", "ratio_rq_closed"] {
        let x = m[key].as_f64().unwrap();
        assert!(x.is_finite() && x > 0.0, "{key} = {x}");
    }
    let kp = m["printed_K"]["k_p"].as_f64().unwrap();
    let kq = m["printed_K"]["k_q"].as_f64().unwrap();
    assert!((m["ratio_pq"].as_f64().unwrap() - kp / kq).abs() <= 1e-12 * kp / kq);
}

#[test]
fn splittings_with_oracle_report() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&instanton(
        dir.path(),
        &[
            "splittings", "--oracle", "--set", "a1=4", "--set", "a2=2", "--set", "b1=8", "--set", "b2=2", "--set", "c=0.05",
            "--set", "oracle_points=129",
        ],
    ));
    let rep = &v["oracle"];
    assert_eq!(rep["levels"].as_array().unwrap().len(), 4);
    assert!(rep["verdict"].is_string());
    assert!(v["timing_ms"]["oracle"].is_number());
}

#[test]
fn oracle_levels_carry_parities() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&instanton(
        dir.path(),
        &["oracle", "--set", "a1=4", "--set", "a2=2", "--set", "b1=8", "--set", "b2=2", "--set", "c=0.05", "--set", "oracle_points=129"],
    ));
    let pars = v["oracle"]["parities"].as_array().unwrap();
    let mut first: Vec<String> = pars[..4].iter().map(|p| p.to_string()).collect();
    first.sort();
    first.dedup();
    assert_eq!(first.len(), 4);
}

#[test]
fn propagator_evaluation_and_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&instanton(dir.path(), &["propagator", "--kappa", "2", "--tp", "-0.5", "--t", "-3,0.5,3", "--calibrate"]));
    assert!((v["calibrated_c0"].as_f64().unwrap() + 8.0).abs() < 1e-6);
    assert!(v["orthogonality_defect"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["values"].as_array().unwrap().len(), 3);
    let out = instanton(dir.path(), &["propagator", "--kappa", "1", "--set", "format=csv"]);
    let (head, rows) = csv_rows(&out.stdout);
    assert_eq!(head, ["t", "G"]);
    assert_eq!(rows.len(), 7);
}

#[test]
fn fluct_lists_three_flavors() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&instanton(dir.path(), &["fluct", "--set", "fc=numeric", "--set", "c=0.02"]));
    let f = v["flavors"].as_array().unwrap();
    assert_eq!(f.len(), 3);
    for entry in f {
        for key in ["flavor", "S0", "norm_p", "norm_q", "Fc", "K", "Fc_closed", "Fc_terms"] {
            assert!(!entry[key].is_null(), "{key}");
        }
    }
    assert!(v["R0"]["rate"].as_f64().unwrap() < 0.0);
}

#[test]
fn bond_length_sweep_rises_then_falls() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--axis", "L", "--from", "0.025", "--to", "0.75", "--points", "30", "--quantity", "molecule", "--set",
        "mode=molecule", "--set", "Omega=20",
    ];
    let serial = instanton(dir.path(), &[&args[..], &["--jobs", "1"]].concat());
    let parallel = instanton(dir.path(), &[&args[..], &["--jobs", "4"]].concat());
    assert!(serial.status.success());
    assert_eq!(serial.stdout, parallel.stdout);
    let (head, rows) = csv_rows(&serial.stdout);
    assert_eq!(head[0], "L");
    assert_eq!(head.last().unwrap(), "error");
    let col = head.iter().position(|h| h == "ratio_pq").unwrap();
    let ratio: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
    let peak = ratio.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(peak > 0 && peak + 1 < ratio.len());
    assert!(ratio[..=peak].windows(2).all(|w| w[1] > w[0]));
    assert!(ratio[peak..].windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn hierarchy_sweep_closes_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = instanton(
        dir.path(),
        &[
            "sweep", "--axis", "kappa_over_epsilon", "--from", "5", "--to", "20", "--points", "3", "--geom", "--quantity",
            "fc", "--set", "mode=rates", "--set", "epsilon=0.2", "--set", "mu2=0.008", "--set", "nu2=0.008",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (head, rows) = csv_rows(&out.stdout);
    for flavor in ["P", "Q", "R"] {
        let col = head.iter().position(|h| *h == format!("dev_{flavor}")).unwrap();
        let dev: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]), "{flavor}: {dev:?}");
    }
}

#[test]
fn sweep_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = instanton(dir.path(), &["sweep", "--axis", "c", "--from", "0", "--to", "0.1", "--points", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = instanton(dir.path(), &["sweep", "--axis", "nonsense", "--from", "0", "--to", "0.1", "--points", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nonsense"));

    // points past the critical length keep their row with an error
    let target = dir.path().join("sub/rows.csv");
    let out = instanton(
        dir.path(),
        &[
            "sweep", "--axis", "L", "--from", "0.5", "--to", "1.5", "--points", "3", "--quantity", "molecule", "--set",
            "mode=molecule", "--output", target.to_str().unwrap(),
        ],
    );
    assert!(json(&out)["rows"] == 3);
    let (_, rows) = csv_rows(&std::fs::read(&target).unwrap());
    assert!(rows[0].last().unwrap().is_empty());
    assert!(rows[2].last().unwrap().contains("no instanton"));
}

#[test]
fn defaults_file_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = instanton(dir.path(), &["defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["a1 = 1.0", "oracle_points = 257", "k_mode = closed", "t_points = 41"] {
        assert!(text.contains(key), "{key}");
    }
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, &text).unwrap();
    let a = json(&instanton(dir.path(), &["params", "--config", path.to_str().unwrap()]));
    let b = json(&instanton(dir.path(), &["params"]));
    assert_eq!(a, b);
}

#[test]
fn emitted_params_reproduce_results_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mol = ["--set", "mode=molecule", "--set", "Omega=30", "--set", "L=0.4", "--set", "timing=false"];
    let first = instanton(dir.path(), &[&["params"][..], &mol[..]].concat());
    assert!(first.status.success());
    let path = dir.path().join("params.json");
    std::fs::write(&path, &first.stdout).unwrap();
    let direct = json(&instanton(dir.path(), &[&["splittings"][..], &mol[..]].concat()));
    let replay = json(&instanton(dir.path(), &["splittings", "--params-json", path.to_str().unwrap(), "--set", "timing=false"]));
    for key in ["action_params", "rates", "flavors", "levels", "amplitudes"] {
        assert_eq!(direct[key], replay[key], "{key}");
    }
}
