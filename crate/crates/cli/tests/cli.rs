//! Command surface tests: exit codes, output discipline, file round-trips.

use std::path::PathBuf;
use std::process::Command;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_dtla"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code().unwrap_or(-1),
    )
}

#[test]
fn validate_accepts_the_corpus() {
    for f in [
        "mex.dtla",
        "mthree.dtla",
        "mleaves.dtla",
        "mcounter.dtla",
        "threeletters.dtla",
        "eqtest.dtla",
        "depgraph.dtla",
        "ysets.dtla",
        "binarycopy.dtla",
    ] {
        let (out, _, code) = run(&["validate", &corpus(f)]);
        assert_eq!(code, 0, "{f}: {out}");
        assert!(out.starts_with("valid"));
    }
}

#[test]
fn bad_syntax_exits_3() {
    let dir = std::env::temp_dir().join("dtla-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.dtla");
    std::fs::write(&bad, "input { a:0 ").unwrap();
    let (_, _, code) = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    let (_, err, code) = run(&["classify", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("syntax error"));
}

#[test]
fn usage_error_exits_2() {
    let (_, _, code) = run(&["no-such-command"]);
    assert_eq!(code, 2);
    let (_, _, code) = run(&["diff", &corpus("mex.dtla")]); // missing budget
    assert_eq!(code, 2);
}

#[test]
fn auto_bound_out_of_class_exits_4() {
    let (_, err, code) = run(&["bounds", &corpus("binarycopy.dtla"), "--auto"]);
    assert_eq!(code, 4);
    assert!(err.contains("not applicable"));
    let (_, _, code) = run(&["remove-la", &corpus("binarycopy.dtla"), "--auto-bound"]);
    assert_eq!(code, 4);
}

#[test]
fn negative_answer_is_exit_0() {
    let (out, _, code) = run(&[
        "remove-la",
        &corpus("mcounter.dtla"),
        "--bound",
        "5",
        "--json",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("\"answer\": \"no\""));
}

#[test]
fn run_command_covers_states_and_extended_trees() {
    let mex = corpus("mex.dtla");
    let (out, _, code) = run(&["run", &mex, "--tree", "sigma(a)"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "a");
    let (out, _, _) = run(&["run", &mex, "--tree", "b", "--state", "q"]);
    assert_eq!(out.trim(), "b");
    let (out, _, _) = run(&["run", &mex, "--tree", "a", "--state", "q"]);
    assert_eq!(out.trim(), "undefined");
    let (out, _, _) = run(&["run", &mex, "--tree", "sigma(pb)", "--extended"]);
    assert_eq!(out.trim(), "sigma(<q,pb>)");
    let (_, _, code) = run(&["run", &mex, "--tree", "sigma(pb)"]);
    assert_eq!(code, 3);
}

#[test]
fn normalize_output_reparses_and_preserves_meaning() {
    let dir = std::env::temp_dir().join("dtla-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    for stage in ["initialized", "uniform", "earliest", "canonical"] {
        let out_file = dir.join(format!("ysets-{stage}.dtla"));
        let (_, _, code) = run(&[
            "normalize",
            &corpus("ysets.dtla"),
            "--to",
            stage,
            "-o",
            out_file.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{stage}");
        let (out, _, code) = run(&["validate", out_file.to_str().unwrap()]);
        assert_eq!(code, 0, "{stage}: {out}");
        let (got, _, _) = run(&[
            "run",
            out_file.to_str().unwrap(),
            "--tree",
            "sigma(sigma(a,b),a)",
        ]);
        assert_eq!(got.trim(), "sab(sab(a,b),a)", "{stage}");
    }
}

#[test]
fn remove_la_output_file_is_a_valid_equivalent_transducer() {
    let dir = std::env::temp_dir().join("dtla-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let out_file = dir.join("mthree-dtop.dtla");
    let (_, _, code) = run(&[
        "remove-la",
        &corpus("mthree.dtla"),
        "--auto-bound",
        "-o",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out_file).unwrap();
    assert!(text.contains("# tuple-table:"));
    let (out, _, code) = run(&["validate", out_file.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    for (tree, expected) in [
        ("tau(sigma(tau(sigma(a))))", "tau(sigma(tau(a)))"),
        ("tau(b)", "b"),
        ("a", "a"),
    ] {
        let (got, _, _) = run(&["run", out_file.to_str().unwrap(), "--tree", tree]);
        let (want, _, _) = run(&["run", &corpus("mthree.dtla"), "--tree", tree]);
        assert_eq!(got, want, "{tree}");
        assert_eq!(got.trim(), expected);
    }
}

#[test]
fn bounds_report_on_the_parity_counter() {
    // no states at all: maxrhs 0, so the class formula gives 1
    let (out, _, code) = run(&["bounds", &corpus("mcounter.dtla")]);
    assert_eq!(code, 0);
    assert!(out.contains("class difference bound: 1"));
    let (out, _, _) = run(&["bounds", &corpus("mcounter.dtla"), "--auto"]);
    assert_eq!(out.trim(), "1");
}

#[test]
fn depgraph_dot_is_emitted() {
    let (out, _, code) = run(&["depgraph", &corpus("depgraph.dtla"), "--dot"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("digraph"));
    assert!(out.contains("\"q2a|q2b|0\" -> \"q2a|q2b|0\""));
    assert!(out.contains("(tau,1)(tau,2)"));
}

#[test]
fn origin_command_reports_the_producing_rule_position() {
    let (out, _, code) = run(&[
        "origin",
        &corpus("depgraph.dtla"),
        "--tree",
        "tau(sigma(a),sigma(a))",
        "--node",
        "2.1",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("state: q2a"));
    assert!(out.contains("input node: 2"));
    // non-initialized input gets normalized with a note on stderr
    let (_, err, code) = run(&[
        "origin",
        &corpus("mex.dtla"),
        "--tree",
        "sigma(b)",
        "--node",
        "1",
    ]);
    assert_eq!(code, 0);
    assert!(err.contains("normalizing"));
}

#[test]
fn classify_json_has_the_documented_fields() {
    let (out, _, code) = run(&["classify", &corpus("mex.dtla"), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for field in [
        "linear",
        "ultralinear",
        "b_erasing",
        "output_monadic",
        "depth_uniform",
        "la_uniform",
        "singleton_rlabs",
        "earliest",
        "canonical",
    ] {
        assert!(v.get(field).is_some(), "missing {field}");
    }
    assert_eq!(v["la_map"]["q"], "pb");
}

#[test]
fn diff_human_output_lists_everything_json_does() {
    let (human, _, _) = run(&["diff", &corpus("mcounter.dtla"), "--max-context-nodes", "4"]);
    let (json, _, _) = run(&[
        "diff",
        &corpus("mcounter.dtla"),
        "--max-context-nodes",
        "4",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for t in v["trees"].as_array().unwrap() {
        assert!(human.contains(t.as_str().unwrap()));
    }
    assert!(human.contains("exhausted: true"));
}
