mod common;

use std::path::Path;
use std::process::Command;

use uavpki::lightclient::{make_bundle, Bundle, LightClient};
use uavpki::selection::ViewSpec;
use uavpki::simnet::{run_scenario, Scenario, SimReport};
use uavpki::trustgraph::{build_trust_graph, find_valid_path};

use common::*;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = uavpki::cli::run(
        std::iter::once("uavpki").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build(dir: &Path, schedule: &str) -> std::path::PathBuf {
    let chain = dir.join(format!("{schedule}.chain"));
    let (code, _, err) = run(&[
        "chain",
        "build",
        "--genesis",
        s(&fixture("genesis.json")),
        "--schedule",
        s(&fixture(schedule)),
        "--out",
        s(&chain),
    ]);
    assert_eq!(code, 0, "{err}");
    chain
}

#[test]
fn chain_verify_accepts_built_chains_and_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let chain = build(dir.path(), "scope_chain_schedule.json");
    let (code, out, _) = run(&["chain", "verify", "--chain", s(&chain)]);
    assert_eq!(code, 0);
    let lib = uavpki::ledger::read_chain_file(&chain).unwrap();
    assert_eq!(
        out.trim(),
        format!("ok height {} tip {}", lib.height(), lib.tip_hash())
    );

    let mut bytes = std::fs::read(&chain).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&chain, &bytes).unwrap();
    assert_eq!(run(&["chain", "verify", "--chain", s(&chain)]).0, 1);
}

#[test]
fn path_output_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let chain_path = build(dir.path(), "scope_chain_schedule.json");
    let chain = uavpki::ledger::read_chain_file(&chain_path).unwrap();
    let graph = build_trust_graph(chain.state());
    for from in ["A", "B", "C", "D"] {
        for to in ["A", "B", "C", "D"] {
            let (code, out, _) = run(&["path", "--chain", s(&chain_path), "--from", from, "--to", to]);
            match find_valid_path(&graph, &id_of(from), &id_of(to)).unwrap() {
                Some(p) => {
                    assert_eq!(code, 0);
                    assert_eq!(out.trim(), p.display(&graph).to_string());
                }
                None => {
                    assert_eq!(code, 1);
                    assert_eq!(out.trim(), "none");
                }
            }
        }
    }
    let (code, out, _) = run(&["path", "--chain", s(&chain_path), "--from", "A", "--to", "C"]);
    assert_eq!((code, out.trim()), (0, "A -(3)-> B -(1)-> C"));
    let hex = id_of("B").to_string();
    assert_eq!(
        run(&["path", "--chain", s(&chain_path), "--from", &hex, "--to", "C"]).0,
        0
    );
    assert_eq!(
        run(&["path", "--chain", s(&chain_path), "--from", "A", "--to", "Z"]).0,
        2
    );
}

#[test]
fn provisioned_bundles_verify() {
    let dir = tempfile::tempdir().unwrap();
    let chain_path = build(dir.path(), "scope_chain_schedule.json");
    let bundle_path = dir.path().join("a.bundle");
    let (code, _, err) = run(&[
        "provision",
        "--chain",
        s(&chain_path),
        "--owner",
        "A",
        "--k-out",
        "2",
        "--k-in",
        "1",
        "--out",
        s(&bundle_path),
    ]);
    assert_eq!(code, 0, "{err}");

    let chain = uavpki::ledger::read_chain_file(&chain_path).unwrap();
    let spec = ViewSpec {
        owner: id_of("A"),
        k_out: 2,
        k_in: 1,
    };
    let lib = make_bundle(&chain, spec).unwrap();
    assert_eq!(Bundle::read_file(&bundle_path).unwrap(), lib);

    let (code, out, _) = run(&["bundle", "verify", "--bundle", s(&bundle_path)]);
    assert_eq!(code, 0);
    let view = LightClient::from_bundle(&lib).unwrap();
    assert_eq!(
        out.trim(),
        format!(
            "ok owner A as_of {} nodes {} edges {}",
            view.as_of_height(),
            view.view().graph.node_count(),
            view.view().graph.edge_count()
        )
    );

    let mut bytes = std::fs::read(&bundle_path).unwrap();
    let last = bytes.len() - 40;
    bytes[last] ^= 1;
    std::fs::write(&bundle_path, &bytes).unwrap();
    assert_eq!(run(&["bundle", "verify", "--bundle", s(&bundle_path)]).0, 1);
}

#[test]
fn rejected_schedules_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.chain");
    let (code, _, err) = run(&[
        "chain",
        "build",
        "--genesis",
        s(&fixture("genesis.json")),
        "--schedule",
        s(&fixture("self_confirm_schedule.json")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("SelfConfirmation"), "{err}");
    assert!(!out.exists());
}

#[test]
fn sim_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("fleet_mixed.json");
    let report_path = dir.path().join("report.json");
    let (code, out, _) = run(&[
        "sim",
        "--scenario",
        s(&scenario),
        "--seed",
        "42",
        "--out",
        s(&report_path),
    ]);
    assert_eq!(code, 0);

    let mut lib_scenario = Scenario::load(&scenario).unwrap();
    lib_scenario.seed = 42;
    let lib = run_scenario(&lib_scenario).unwrap();
    let printed: SimReport = serde_json::from_str(&out).unwrap();
    assert_eq!(printed, lib);
    let written: SimReport = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(written, lib);

    let (_, digest, _) = run(&["sim", "--scenario", s(&scenario), "--seed", "42", "--digest-only"]);
    assert_eq!(digest.trim(), lib.digest.to_hex());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_uavpki");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["frobnicate"]), Some(2));
    assert_eq!(
        status(&["chain", "verify", "--chain", "/nonexistent/chain"]),
        Some(2)
    );
    assert_eq!(
        status(&[
            "sim",
            "--scenario",
            s(&fixture("honest_2k.json")),
            "--digest-only"
        ]),
        Some(0)
    );
    assert_eq!(status(&["--help"]), Some(0));
}
