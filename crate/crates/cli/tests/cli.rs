use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chc_core::scenarios;

fn groups_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../groups")
}

fn group(name: &str) -> String {
    groups_dir().join(format!("{name}.grp")).display().to_string()
}

fn chc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chc"))
        .args(args)
        .env_remove("CHC_SEED")
        .output()
        .expect("run chc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field(report: &str, key: &str) -> String {
    let prefix = format!("{key}: ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
        .to_string()
}

fn temp_file(name: &str, text: &str) -> String {
    let path = std::env::temp_dir().join(format!("chc-{}-{name}.grp", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

/// Golden group files under `groups/` are the canonical serializations of
/// the built-in scenarios. `UPDATE_GROUPS=1` rewrites them.
#[test]
fn group_files_match_scenarios() {
    for name in scenarios::NAMES {
        let text = scenarios::by_name(name).unwrap().to_string();
        let path = groups_dir().join(format!("{name}.grp"));
        if std::env::var_os("UPDATE_GROUPS").is_some() {
            std::fs::write(&path, &text).unwrap();
        }
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text, "{name}");
    }
}

#[test]
fn classify_examples() {
    let lox = temp_file(
        "lox",
        "dimension 2\nbasis siegel\ngenerator matrix\n  row [2.718281828459045, 0] [0, 0] [0, 0]\n  \
         row [0, 0] [0.36787944117144233, 0] [0, 0]\n  row [0, 0] [0, 0] [1, 0]\nend\n",
    );
    let par = temp_file("par", "dimension 2\ngenerator heisenberg\n  b [1, 0]\nend\n");
    let id = temp_file("id", "dimension 3\ngenerator heisenberg\nend\n");
    for (file, class) in [(&lox, "loxodromic"), (&par, "parabolic"), (&id, "identity")] {
        let o = chc(&["classify", file]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(field(&stdout(&o), "g1"), class);
    }
}

#[test]
fn parabolic_golden_values() {
    for (name, stein, delta) in [
        ("example-1", "false", "2/1"),
        ("example-2", "false", "5/2"),
        ("single-translation", "true", "1/2"),
    ] {
        let o = chc(&["parabolic", &group(name)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let out = stdout(&o);
        assert_eq!(field(&out, "stein"), stein, "{name}");
        assert_eq!(field(&out, "delta"), delta, "{name}");
        let exact = chc(&["delta-exact", &group(name)]);
        assert_eq!(field(&stdout(&exact), "delta"), delta);
    }
}

#[test]
fn non_commuting_rotations_exit_4_with_witness() {
    let file = temp_file(
        "noncomm",
        "dimension 3\ngenerator heisenberg\n  t [0, 0] [1, 0]\n  t [1, 0] [0, 0]\nend\n\
         generator heisenberg\n  t [1, 0] [0, 0]\n  t [0, 0] [-1, 0]\nend\n",
    );
    let o = chc(&["parabolic", &file]);
    assert_eq!(o.status.code(), Some(4));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("witness pair: g1, g2"), "{}", stderr(&o));
}

#[test]
fn malformed_and_invalid_inputs() {
    let bad = temp_file("bad", "dimension 2\ngenerator heisenberg\n  b [1, 0\nend\n");
    let o = chc(&["parabolic", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"));
    assert_eq!(chc(&["levi-check", &bad]).status.code(), Some(2));
    assert_eq!(chc(&["classify", "/nonexistent/group.grp"]).status.code(), Some(2));

    let scaled = temp_file(
        "scaled",
        "dimension 1\nbasis ball\ngenerator matrix\n  row [2, 0] [0, 0]\n  row [0, 0] [1, 0]\nend\n",
    );
    assert_eq!(chc(&["classify", &scaled]).status.code(), Some(3));
}

#[test]
fn delta_estimates_with_default_caps() {
    let o = chc(&["delta-estimate", &group("example-1")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let est: f64 = field(&stdout(&o), "estimate").parse().unwrap();
    assert!((1.5..=2.5).contains(&est), "{est}");

    let o = chc(&["delta-estimate", &group("cyclic-loxodromic")]);
    let est: f64 = field(&stdout(&o), "estimate").parse().unwrap();
    assert!(est <= 0.1, "{est}");

    let o = chc(&["delta-estimate", &group("example-1"), "--depth", "0"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(o.stdout.is_empty());
}

#[test]
fn shells_as_csv() {
    let o = chc(&["delta-estimate", "--scenario", "cyclic-loxodromic", "--format", "csv"]);
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("inner,outer,count"));
    let total: usize = out
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 81);
}

#[test]
fn levi_check_on_schottky_group() {
    let o = chc(&["levi-check", &group("schottky"), "--max-points", "40000", "--grid", "6x3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "result"), "PASS");
    assert_eq!(field(&out, "warning"), "none");

    let csv = chc(&["levi-check", "--scenario", "schottky", "--max-points", "2000", "--grid", "2x2", "--format", "csv"]);
    assert_eq!(stdout(&csv).lines().count(), 5);
}

#[test]
fn levi_check_on_single_atom_warns() {
    let o = chc(&["levi-check", &group("cyclic-loxodromic"), "--depth", "0", "--grid", "2x2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "orbit_size"), "1");
    assert_ne!(field(&out, "warning"), "none");
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn reports_are_reproducible_and_carry_the_seed() {
    let args = ["levi-check", "--scenario", "schottky", "--max-points", "3000", "--grid", "3x2", "--seed", "7"];
    let a = chc(&args);
    let b = chc(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(field(&stdout(&a), "seed"), "7");

    let env = Command::new(env!("CARGO_BIN_EXE_chc"))
        .args(["parabolic", "--scenario", "example-1"])
        .env("CHC_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(field(&stdout(&env), "seed"), "42");
}

#[test]
fn orbit_export_writes_one_row_per_element() {
    let o = chc(&["orbit-export", &group("cyclic-loxodromic"), "--depth", "5"]);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 12);
    assert!(out.starts_with("key_hash,word,word_length,displacement\n"));

    let summary = chc(&["orbit-export", &group("cyclic-loxodromic"), "--depth", "5", "--format", "report"]);
    assert_eq!(field(&stdout(&summary), "orbit_size"), "11");
}

#[test]
fn density_build_reports_invariance_bounds() {
    let o = chc(&["density-build", "--scenario", "schottky", "--depth", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for g in ["g1", "g2", "g1^-1", "g2^-1"] {
        let shift: f64 = field(&out, &format!("log_mass_shift.{g}")).parse().unwrap();
        let bound: f64 = field(&out, &format!("invariance_bound.{g}")).parse().unwrap();
        assert!(shift.abs() <= bound);
    }
}
