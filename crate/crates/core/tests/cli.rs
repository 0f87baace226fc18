use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use yaglom::cli_io::{decode_field, encode_field, read_field, write_field};
use yaglom::functionals::{catalog, structure_curve, CatalogId, FieldSet, Slot};
use yaglom::increments::ShiftMethod;
use yaglom::mollifier::sphere_rule;
use yaglom::synth::{gaussian_divfree, gaussian_scalar, SpectrumSpec};
use yaglom::systems::elsasser;
use yaglom::{Field, PeriodicGrid};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_yaglom"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

/// Runs the binary and returns (exit code, stderr).
fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_consistent_headers_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "gen.toml",
        r#"
seed = 3
[grid]
n = 12
[functional.slots.v]
kind = "abc"
[functional.slots.theta]
kind = "gaussian_scalar"
slope = 1.5
k_min = 1
k_max = 4
"#,
    );
    for out in ["a", "b"] {
        let (code, err) = run(&[
            "generate",
            "--config",
            s(&cfg),
            "--out",
            s(&dir.path().join(out)),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    let bytes = std::fs::read(dir.path().join("a/v.ygf")).unwrap();
    assert_eq!(&bytes[..4], b"YGF1");
    assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 3);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 12);
    for f in ["v.ygf", "theta.ygf", "generate.json"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(f)).unwrap(),
            std::fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
    let report = json(&dir.path().join("a/generate.json"));
    assert_eq!(report["seed"], 3);
    assert_eq!(report["inputs"].as_array().unwrap().len(), 2);
    assert!(report.to_string().len() > 100 && !report.to_string().contains("time"));
}

#[test]
fn band_violation_exits_with_config_code_naming_the_slot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        r#"
[grid]
n = 12
[functional.slots.b]
kind = "gaussian_divfree"
slope = 1.0
k_min = 1
k_max = 6
"#,
    );
    let (code, err) = run(&["generate", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("slot b"), "{err}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Missing config file is an IO failure.
    assert_eq!(
        run(&["structure", "--config", s(&d.join("nope.toml"))]).0,
        2
    );
    // Unknown key, missing slot, ε beyond half the box: configuration errors.
    let unknown = write_config(d, "u.toml", "[grid]\nn = 8\nbogus = 1\n");
    assert_eq!(run(&["generate", "--config", s(&unknown)]).0, 1);
    let missing = write_config(
        d,
        "m.toml",
        "[grid]\nn = 8\n[sweeps]\nlambda_h = [1.0, 1.5, 2.0, 2.5]\n[functional]\ncatalog = \"TEMP\"\n[functional.slots.v]\nkind = \"abc\"\n",
    );
    let (code, err) = run(&["structure", "--config", s(&missing), "--out", s(d)]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("theta"), "{err}");
    let big = write_config(
        d,
        "e.toml",
        "[grid]\nn = 8\n[sweeps]\nepsilon = [3.2]\n[functional]\ncatalog = \"TEMP\"\n",
    );
    assert_eq!(run(&["dissipation", "--config", s(&big)]).0, 1);
    // A referenced file that is not there violates the config invariants.
    let nofile = write_config(
        d,
        "f.toml",
        "[grid]\nn = 8\n[functional.slots.v]\nkind = \"file\"\npath = \"v.ygf\"\n",
    );
    assert_eq!(run(&["generate", "--config", s(&nofile)]).0, 1);
    // A corrupt field file is an IO failure.
    std::fs::write(d.join("v.ygf"), b"YGF1 truncated").unwrap();
    assert_eq!(
        run(&["generate", "--config", s(&nofile), "--out", s(&d.join("o"))]).0,
        2
    );
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn balance_with_two_snapshots_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bal.toml",
        r#"
[grid]
n = 8
[sweeps]
epsilon_h = [2.0]
[functional.slots.v]
kind = "abc"
[functional.slots.theta]
kind = "modes"
terms = [[1.0, 1, 0, 0, 0.0]]
[solver]
dt = 0.01
steps = 1
"#,
    );
    let (code, err) = run(&["balance", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("3 snapshots"), "{err}");
}

#[test]
fn constant_fields_are_conservative_through_lawcheck() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        r#"
[grid]
n = 8
[sphere]
count = 12
[mollifier]
radial_nodes = 4
[sweeps]
epsilon_h = [1.0, 1.5, 2.0, 2.5]
lambda_h = [1.0, 1.5, 2.0, 2.5]
[functional]
catalog = "TEMP"
[functional.slots.v]
kind = "constant"
value = [1.0, -2.0, 0.5]
[functional.slots.theta]
kind = "constant"
value = [3.0]
"#,
    );
    let (code, err) = run(&["lawcheck", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 0, "{err}");
    let r = json(&dir.path().join("lawcheck.json"));
    assert_eq!(r["result"]["law"]["verdict"], "conservative");
    let csv = std::fs::read_to_string(dir.path().join("structure.csv")).unwrap();
    assert!(csv.starts_with("scale,value,"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn injected_curves_reach_the_four_thirds_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "i.toml",
        "[grid]\nn = 8\n[functional]\ncatalog = \"TEMP\"\n",
    );
    let curves = serde_json::json!({
        "epsilons": [0.1, 0.2, 0.3, 0.4, 0.5],
        "d_values": [0.75, 0.75, 0.75, 0.75, 0.75],
        "lambdas": [0.1, 0.2, 0.3, 0.4, 0.5],
        "g_values": [-1.0, -1.0, -1.0, -1.0, -1.0],
    });
    let inj = dir.path().join("curves.json");
    std::fs::write(&inj, curves.to_string()).unwrap();
    let (code, err) = run(&[
        "lawcheck",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--inject-curves",
        s(&inj),
    ]);
    assert_eq!(code, 0, "{err}");
    let r = json(&dir.path().join("lawcheck.json"));
    assert_eq!(r["result"]["law"]["verdict"], "consistent_4_3");
    assert_eq!(r["result"]["injected"], true);
    assert!((r["result"]["law"]["ratio"].as_f64().unwrap() + 4.0 / 3.0).abs() < 1e-12);
}

fn mhd_config(slots: &str) -> String {
    format!(
        r#"
[grid]
n = 12
[sphere]
count = 16
[mollifier]
radial_nodes = 5
[sweeps]
epsilon_h = [1.5, 2.0, 2.5, 3.0]
lambda_h = [1.5, 2.0, 2.5, 3.0]
[functional]
catalog = "MHD_ENERGY"
{slots}
"#
    )
}

#[test]
fn mhd_and_elsasser_inputs_give_the_same_dissipation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = PeriodicGrid::cube(12).unwrap();
    let spec = |seed| SpectrumSpec::new(1.0, 1.0, 4.0, seed, 1.0);
    let v = gaussian_divfree(g, &spec(1)).unwrap();
    let b = gaussian_divfree(g, &spec(2)).unwrap();
    let (u, h) = elsasser(&v, &b).unwrap();
    for (name, f) in [("v", &v), ("b", &b), ("u", &u), ("h", &h)] {
        write_field(&d.join(format!("{name}.ygf")), &Field::Vector(f.clone())).unwrap();
    }
    let prim = write_config(
        d,
        "prim.toml",
        &mhd_config("[functional.slots.v]\nkind = \"file\"\npath = \"v.ygf\"\n[functional.slots.b]\nkind = \"file\"\npath = \"b.ygf\"\n"),
    );
    let els = write_config(
        d,
        "els.toml",
        &mhd_config(
            "[functional.slots.u]\nkind = \"file\"\npath = \"u.ygf\"\n[functional.slots.h]\nkind = \"file\"\npath = \"h.ygf\"\n\
             [functional.slots.v]\nkind = \"elsasser_inverse\"\nu = \"u\"\nh = \"h\"\nmember = \"v\"\n\
             [functional.slots.b]\nkind = \"elsasser_inverse\"\nu = \"u\"\nh = \"h\"\nmember = \"b\"\n",
        ),
    );
    assert_eq!(
        run(&["lawcheck", "--config", s(&prim), "--out", s(&d.join("p"))]).0,
        0
    );
    assert_eq!(
        run(&["lawcheck", "--config", s(&els), "--out", s(&d.join("e"))]).0,
        0
    );
    let dp = json(&d.join("p/lawcheck.json"))["result"]["dissipation"]["d_values"].clone();
    let de = json(&d.join("e/lawcheck.json"))["result"]["dissipation"]["d_values"].clone();
    for (a, b) in dp.as_array().unwrap().iter().zip(de.as_array().unwrap()) {
        let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "{a} vs {b}");
    }
    // Input hashes identify the files.
    let inputs = json(&d.join("p/lawcheck.json"))["inputs"].clone();
    let vhash = yaglom::cli_io::sha256_hex(&std::fs::read(d.join("v.ygf")).unwrap());
    assert!(inputs
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["sha256"] == vhash.as_str()));
}

#[test]
fn structure_from_a_saved_field_matches_memory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = PeriodicGrid::cube(12).unwrap();
    let v = gaussian_divfree(g, &SpectrumSpec::new(1.0, 1.0, 4.0, 7, 1.0)).unwrap();
    let th = gaussian_scalar(g, &SpectrumSpec::new(1.0, 1.0, 4.0, 8, 1.0)).unwrap();
    write_field(&d.join("v.ygf"), &Field::Vector(v.clone())).unwrap();
    write_field(&d.join("theta.ygf"), &Field::Scalar(th.clone())).unwrap();
    let back = read_field(&d.join("v.ygf")).unwrap();
    assert_eq!(
        decode_field(&encode_field(&back)).unwrap(),
        Field::Vector(v.clone())
    );
    let cfg = write_config(
        d,
        "s.toml",
        r#"
[grid]
n = 12
[sphere]
count = 20
[sweeps]
lambda_h = [1.0, 2.0, 3.0]
[functional]
catalog = "TEMP"
[functional.slots.v]
kind = "file"
path = "v.ygf"
[functional.slots.theta]
kind = "file"
path = "theta.ygf"
"#,
    );
    assert_eq!(run(&["structure", "--config", s(&cfg), "--out", s(d)]).0, 0);
    let r = json(&d.join("structure.json"));
    let set = FieldSet::new(g)
        .with(Slot::V, v)
        .unwrap()
        .with(Slot::Theta, th)
        .unwrap();
    let h = g.spacing();
    let mem = structure_curve(
        &set,
        &catalog(CatalogId::Temp, 0.0).unwrap(),
        &[h, 2.0 * h, 3.0 * h],
        &sphere_rule(20).unwrap(),
        ShiftMethod::FourierPhase,
    )
    .unwrap();
    for (a, b) in r["result"]["g_values"]
        .as_array()
        .unwrap()
        .iter()
        .zip(&mem.g_values)
    {
        assert!(
            (a.as_f64().unwrap() - b).abs() <= 1e-15 * b.abs().max(1e-300),
            "{a} vs {b}"
        );
    }
}

#[test]
fn thread_count_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(
        d,
        "t.toml",
        r#"
seed = 11
[grid]
n = 12
[sphere]
count = 16
[mollifier]
radial_nodes = 5
[sweeps]
epsilon_h = [1.5, 2.0, 2.5, 3.0]
lambda_h = [1.5, 2.0, 2.5, 3.0]
[functional]
catalog = "ELSASSER_PLUS"
[functional.slots.u]
kind = "gaussian_divfree"
slope = 1.0
k_min = 1
k_max = 4
[functional.slots.h]
kind = "gaussian_divfree"
slope = 1.0
k_min = 1
k_max = 4
"#,
    );
    for t in ["1", "3"] {
        let (code, err) = run(&[
            "lawcheck",
            "--config",
            s(&cfg),
            "--out",
            s(&d.join(t)),
            "--threads",
            t,
        ]);
        assert_eq!(code, 0, "{err}");
    }
    for f in ["lawcheck.json", "structure.csv", "dissipation.csv"] {
        assert_eq!(
            std::fs::read(d.join("1").join(f)).unwrap(),
            std::fs::read(d.join("3").join(f)).unwrap(),
            "{f}"
        );
    }
    // --seed overrides the config seed and changes the generated inputs.
    assert_eq!(
        run(&[
            "lawcheck",
            "--config",
            s(&cfg),
            "--out",
            s(&d.join("s")),
            "--seed",
            "12"
        ])
        .0,
        0
    );
    let a = json(&d.join("1/lawcheck.json"));
    let b = json(&d.join("s/lawcheck.json"));
    assert_eq!(b["seed"], 12);
    assert_ne!(a["inputs"][0]["sha256"], b["inputs"][0]["sha256"]);
    assert_eq!(a["config_sha256"], b["config_sha256"]);
}

#[test]
fn exponents_and_balance_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(
        d,
        "x.toml",
        r#"
[grid]
n = 16
[sphere]
count = 16
[mollifier]
radial_nodes = 4
[sweeps]
epsilon_h = [2.0, 3.0]
lambda_h = [2.5, 3.0, 3.5]
[functional.slots.v]
kind = "abc"
[functional.slots.omega]
kind = "curl"
of = "v"
[functional.slots.theta]
kind = "modes"
terms = [[1.0, 1, 0, 0, 0.0], [0.5, 0, 1, 1, 0.3]]
[solver]
dt = 0.002
steps = 4
stride = 2
[exponents]
r1 = 3
r2 = 3
"#,
    );
    let (code, err) = run(&["exponents", "--config", s(&cfg), "--out", s(d)]);
    assert_eq!(code, 0, "{err}");
    let r = json(&d.join("exponents.json"));
    // Smooth fields: increments scale like λ.
    assert!((r["result"]["velocity"]["exponent"].as_f64().unwrap() - 1.0).abs() < 0.1);
    assert_eq!(r["result"]["prediction"]["conserved"], true);
    let (code, err) = run(&["balance", "--config", s(&cfg), "--out", s(d)]);
    assert_eq!(code, 0, "{err}");
    let r = json(&d.join("balance.json"));
    assert_eq!(r["result"]["snapshots"], 3);
    assert_eq!(r["result"]["scales"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(d.join("balance.csv")).unwrap();
    assert!(csv.starts_with("epsilon,time,l1,l2,linf"));
}
