//! End-to-end tests driving the compiled binary: exit codes, stdout
//! contracts, trace/report side files, and seeded generation.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracopt"))
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("fracopt-cli-{}-{name}", std::process::id()))
}

fn temp_file(name: &str, contents: &str) -> String {
    let p = temp_path(name);
    std::fs::write(&p, contents).expect("write temp instance");
    p.display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
    )
}

fn lines(s: &str) -> Vec<&str> {
    s.lines().collect()
}

#[test]
fn intro_system_has_exact_maximal_solution() {
    let (code, out, _) = run(&["solve-m2vpi", &fixture("intro.m2vpi")]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out), ["FEASIBLE", "-2 -2"]);
}

#[test]
fn intro_system_in_float_mode() {
    let (code, out, _) = run(&["solve-m2vpi", &fixture("intro.m2vpi"), "--arith", "float"]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out), ["FEASIBLE", "-2 -2"]);
}

#[test]
fn intro_system_with_standard_method() {
    let (code, out, _) = run(&["solve-m2vpi", &fixture("intro.m2vpi"), "--method", "standard"]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out), ["FEASIBLE", "-2 -2"]);
}

#[test]
fn empty_system_is_feasible_and_unbounded() {
    let path = temp_file("empty.m2vpi", "m2vpi 3 0\n");
    let (code, out, _) = run(&["solve-m2vpi", &path]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out), ["FEASIBLE", "inf inf inf"]);
}

#[test]
fn negative_unit_gain_cycle_is_certified_infeasible() {
    let (code, out, _) = run(&["solve-m2vpi", &fixture("cycle_negative_unit.m2vpi")]);
    assert_eq!(code, 1);
    let ls = lines(&out);
    assert_eq!(ls[0], "INFEASIBLE");
    assert!(ls[1].starts_with("phase "), "missing location line: {out}");
    assert!(
        ls.iter().any(|l| l.starts_with("evidence ")),
        "missing evidence line: {out}"
    );
}

#[test]
fn absorbing_cycle_pins_labels_at_zero() {
    let (code, out, _) = run(&["solve-m2vpi", &fixture("cycle_flow_absorbing.m2vpi")]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out), ["FEASIBLE", "0 0 0"]);
}

#[test]
fn generating_cycle_leaves_labels_unbounded() {
    let (code, out, _) = run(&["solve-m2vpi", &fixture("cycle_flow_generating.m2vpi")]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out), ["FEASIBLE", "inf inf inf"]);
}

#[test]
fn recovery_replaces_unbounded_labels_with_finite_values() {
    let path = temp_file("chain.m2vpi", "m2vpi 2 1\n0 1 1 0\n");
    let (code, out, _) = run(&["solve-m2vpi", &path]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out), ["FEASIBLE", "inf inf"]);
    let (code, out, _) = run(&["solve-m2vpi", &path, "--recover-finite"]);
    assert_eq!(code, 0);
    let ls = lines(&out);
    assert_eq!(ls[0], "FEASIBLE");
    assert!(!ls[1].contains("inf"), "expected a finite point, got {}", ls[1]);
}

#[test]
fn rank_one_table_minimizes_at_one_half() {
    let (code, out, _) = run(&["solve-sfm", &fixture("rank1.sfm")]);
    assert_eq!(code, 0);
    let ls = lines(&out);
    assert_eq!(ls[0], "delta_star 1/2");
    assert_eq!(ls[1], "witness 0 1");
    assert!(ls[2].starts_with("iterations "));
    assert!(ls[3].starts_with("sfm_calls "));
}

#[test]
fn cut_function_instance_solves() {
    let path = temp_file("cut.sfm", "sfm cut 3 2\n1 1 1\n0 1 2\n1 2 3\n");
    let (code, out, _) = run(&["solve-sfm", &path]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out)[0], "delta_star 0");
}

#[test]
fn two_point_ratio_picks_the_cheaper_vector() {
    let (code, out, _) = run(&["min-ratio", &fixture("two_point.ratio")]);
    assert_eq!(code, 0);
    let ls = lines(&out);
    assert_eq!(ls[0], "delta_star 1");
    assert_eq!(ls[1], "witness 01");
    assert!(ls[2].starts_with("iterations "));
}

#[test]
fn discounted_self_loops_pick_the_cheaper_policy() {
    let (code, out, _) = run(&["solve-dmdp", &fixture("loops.dmdp")]);
    assert_eq!(code, 0);
    assert_eq!(lines(&out), ["FEASIBLE", "4", "policy: 1"]);
}

#[test]
fn undiscounted_negative_cycle_is_certified() {
    let path = temp_file("negcyc.dmdp", "dmdp 2 3\n0 1 1 -1\n1 0 1 -1\n0 0 1 5\n");
    let (code, out, _) = run(&["solve-dmdp", &path]);
    assert_eq!(code, 1);
    assert_eq!(lines(&out)[0], "INFEASIBLE");
    assert!(out.contains("evidence negative_unit_gain_cycle"), "got {out}");
}

#[test]
fn box_system_yields_a_satisfying_point() {
    let (code, out, _) = run(&["solve-2vpi", &fixture("box.2vpi")]);
    assert_eq!(code, 0);
    let ls = lines(&out);
    assert_eq!(ls[0], "FEASIBLE");
    assert_eq!(ls[1].split_whitespace().count(), 2);
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let path = temp_file("contra.2vpi", "2vpi 1 2\n1 0 0 0 1\n-1 0 0 0 -2\n");
    let (code, out, _) = run(&["solve-2vpi", &path]);
    assert_eq!(code, 1);
    assert_eq!(lines(&out)[0], "INFEASIBLE");
}

#[test]
fn trivially_false_row_is_reported() {
    let path = temp_file("trivial.2vpi", "2vpi 1 1\n0 0 0 0 -1\n");
    let (code, out, _) = run(&["solve-2vpi", &path]);
    assert_eq!(code, 1);
    assert!(out.contains("evidence trivial_row"), "got {out}");
}

#[test]
fn parse_errors_carry_line_and_column() {
    let path = temp_file("bad.m2vpi", "m2vpi 2 1\n0 5 1 0\n");
    let (code, out, err) = run(&["solve-m2vpi", &path]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("line 2, column 3"), "got {err}");
}

#[test]
fn nonpositive_discount_is_rejected() {
    let path = temp_file("badgamma.dmdp", "dmdp 2 1\n0 1 3/2 1\n");
    let (code, _, err) = run(&["solve-dmdp", &path]);
    assert_eq!(code, 2);
    assert!(err.contains("must lie in (0, 1]"), "got {err}");
}

#[test]
fn compare_prints_per_phase_counts_for_both_methods() {
    let (code, out, _) = run(&["compare", &fixture("intro.m2vpi")]);
    assert_eq!(code, 0);
    let ls = lines(&out);
    assert_eq!(ls[0], "verdict FEASIBLE");
    assert!(
        ls.iter().any(|l| l.starts_with("phase ") && l.contains(" lookahead ") && l.contains(" standard ")),
        "missing per-phase line: {out}"
    );
    assert!(ls.last().unwrap().starts_with("total lookahead "));
}

#[test]
fn compare_handles_single_search_solvers() {
    let (code, out, _) = run(&["compare", &fixture("rank1.sfm")]);
    assert_eq!(code, 0);
    let ls = lines(&out);
    assert_eq!(ls[0], "delta_star 1/2");
    assert!(ls.last().unwrap().starts_with("total lookahead "));
}

#[test]
fn compare_flags_infeasible_instances() {
    let (code, out, _) = run(&["compare", &fixture("cycle_negative_unit.m2vpi")]);
    assert_eq!(code, 1);
    assert_eq!(lines(&out)[0], "verdict INFEASIBLE");
}

#[test]
fn trace_files_use_the_documented_headers() {
    let trace = temp_path("m2vpi-trace.csv");
    let (code, _, _) = run(&[
        "solve-m2vpi",
        &fixture("intro.m2vpi"),
        "--trace",
        &trace.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&trace).expect("trace written");
    assert!(csv.starts_with("phase,node,i,delta,f,g,lookahead_attempted,lookahead_success\n"));
    assert!(csv.lines().count() >= 2, "trace has no records: {csv}");

    let trace = temp_path("sfm-trace.csv");
    let (code, _, _) = run(&[
        "solve-sfm",
        &fixture("rank1.sfm"),
        "--trace",
        &trace.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&trace).expect("trace written");
    assert!(csv.starts_with("i,delta,f,g,lookahead_attempted,lookahead_success\n"));
}

#[test]
fn report_files_are_valid_json() {
    let report = temp_path("report.json");
    let (code, _, _) = run(&[
        "solve-m2vpi",
        &fixture("intro.m2vpi"),
        "--report",
        &report.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&report).expect("report written");
    let v: serde_json::Value = serde_json::from_str(&text).expect("valid json");
    assert_eq!(v["solver"], "m2vpi");
    assert_eq!(v["verdict"], "feasible");
    assert!(v["phase_iterations"].is_array());
    assert!(v["wall_time_ms"].is_number());
}

#[test]
fn generation_is_reproducible_and_env_overridable() {
    let (c1, g1, _) = run(&["gen", "m2vpi", "--seed", "9"]);
    let (c2, g2, _) = run(&["gen", "m2vpi", "--seed", "9"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(g1, g2, "same seed must generate identical bytes");

    let out = bin()
        .args(["gen", "m2vpi", "--seed", "4"])
        .env("NEWTON_FRAC_SEED", "9")
        .output()
        .expect("binary runs");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), g1, "env seed must win");

    let (c3, g3, _) = run(&["gen", "m2vpi", "--seed", "4"]);
    assert_eq!(c3, 0);
    assert_ne!(g1, g3, "different seeds should differ");
}

#[test]
fn generated_instances_round_trip_through_their_solvers() {
    let cases = [
        ("m2vpi", "solve-m2vpi"),
        ("2vpi", "solve-2vpi"),
        ("dmdp", "solve-dmdp"),
        ("sfm", "solve-sfm"),
        ("min-ratio", "min-ratio"),
    ];
    for (fmt, solver) in cases {
        for seed in ["5", "6", "7"] {
            let (code, text, _) = run(&["gen", fmt, "--seed", seed]);
            assert_eq!(code, 0, "gen {fmt} --seed {seed}");
            let path = temp_file(&format!("gen-{fmt}-{seed}.txt"), &text);
            let (code, out, err) = run(&[solver, &path]);
            assert!(
                code == 0 || code == 1,
                "{solver} on generated {fmt} (seed {seed}) exited {code}: {out}{err}"
            );
        }
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn help_exits_cleanly() {
    let (code, _, _) = run(&["--help"]);
    assert_eq!(code, 0);
}
