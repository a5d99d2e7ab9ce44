//! End-to-end behavior of the fpgaflow binary: exit codes, file outputs,
//! determinism of everything on stdout and on disk.

use std::path::Path;
use std::process::{Command, Output};

fn fpgaflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpgaflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn himeno_run_prints_trace_and_flops() {
    let out = fpgaflow(&[
        "himeno", "run", "--nx", "17", "--ny", "17", "--nz", "33", "--iters", "10",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("gosa ")).count(), 10);
    assert!(text.contains("gosa 1 7.391682e-4"), "first residual: {text}");
    assert!(text.contains("total flops"));
    // Measured timing goes to stderr only.
    assert!(String::from_utf8_lossy(&out.stderr).contains("elapsed"));
}

#[test]
fn himeno_run_reports_middle_size_flop_total() {
    let out = fpgaflow(&[
        "himeno", "run", "--nx", "256", "--ny", "128", "--nz", "128", "--iters", "200",
        "--assume-seconds", "10.0",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("total flops 2.74210272e10"), "{text}");
    assert!(text.contains("mflops 2742.10272"), "{text}");
}

#[test]
fn himeno_run_rejects_tiny_grid_with_exit_2() {
    let out = fpgaflow(&["himeno", "run", "--nx", "2", "--ny", "5", "--nz", "5", "--iters", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn himeno_oracle_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let oracle = dir.path().join("expected.txt");

    // A matching oracle: the tool's own trace.
    let run = fpgaflow(&["himeno", "run", "--nx", "9", "--ny", "9", "--nz", "9", "--iters", "4"]);
    let trace: Vec<String> = stdout_of(&run)
        .lines()
        .filter(|l| l.starts_with("gosa "))
        .map(|l| l.to_string())
        .collect();
    std::fs::write(&oracle, trace.join("\n")).unwrap();
    let ok = fpgaflow(&[
        "himeno", "run", "--nx", "9", "--ny", "9", "--nz", "9", "--iters", "4",
        "--oracle", oracle.to_str().unwrap(),
    ]);
    assert!(ok.status.success());
    assert!(stdout_of(&ok).contains("oracle check: OK"));

    // A wrong oracle: exit 1 and a mismatch report.
    std::fs::write(&oracle, "1.0\n2.0\n3.0\n4.0\n").unwrap();
    let bad = fpgaflow(&[
        "himeno", "run", "--nx", "9", "--ny", "9", "--nz", "9", "--iters", "4",
        "--oracle", oracle.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout_of(&bad).contains("MISMATCH"));
}

#[test]
fn himeno_dump_writes_framed_fields() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("fields");
    let out = fpgaflow(&[
        "himeno", "run", "--nx", "5", "--ny", "5", "--nz", "7", "--iters", "2",
        "--dump", dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for name in ["a", "b", "c", "p", "wrk1", "bnd", "wrk2"] {
        let bytes = std::fs::read(dump.join(format!("{name}.bin"))).unwrap();
        assert_eq!(&bytes[0..4], b"HIMF", "{name}: magic");
        let dims: Vec<u32> = (0..3)
            .map(|i| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()))
            .collect();
        assert_eq!(dims, vec![5, 5, 7], "{name}: dims");
        let name_len = bytes[20] as usize;
        assert_eq!(&bytes[21..21 + name_len], name.as_bytes());
        let payload = &bytes[21 + name_len..];
        let components = if name == "a" { 4 } else if name == "b" || name == "c" { 3 } else { 1 };
        assert_eq!(payload.len(), components * 5 * 5 * 7 * 4, "{name}: payload");
    }
    // bnd is identically one under reference initialization.
    let bnd = std::fs::read(dump.join("bnd.bin")).unwrap();
    let payload_start = 21 + bnd[20] as usize;
    let first = f32::from_le_bytes(bnd[payload_start..payload_start + 4].try_into().unwrap());
    assert_eq!(first, 1.0);
}

#[test]
fn sim_run_unknown_scenario_is_exit_2() {
    let out = fpgaflow(&["sim", "run", "--scenario", "warp_drive"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
}

#[test]
fn sim_run_writes_profile_guidance_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.csv");
    let guidance = dir.path().join("g.txt");
    let guidance_json = dir.path().join("g.json");
    let out = fpgaflow(&[
        "sim", "run", "--scenario", "initial", "--nx", "8", "--ny", "8", "--nz", "8",
        "--out", profile.to_str().unwrap(),
        "--guidance", guidance.to_str().unwrap(),
        "--guidance-json", guidance_json.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let guidance_text = std::fs::read_to_string(&guidance).unwrap();
    for rule in ["R1", "R2", "R5", "R8"] {
        assert!(guidance_text.contains(rule), "guidance lacks {rule}:\n{guidance_text}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&guidance_json).unwrap()).unwrap();
    assert!(json.as_array().unwrap().len() >= 4);

    let csv = std::fs::read_to_string(&profile).unwrap();
    assert!(csv.starts_with("entity_type,name,total_cycles"));
    assert!(csv.lines().last().unwrap().starts_with("summary,overall"));
    // The emitted document re-parses to a profile and renders back verbatim.
    let parsed = fpgaflow_core::profile::SimProfile::from_csv(&csv).unwrap();
    assert_eq!(parsed.to_csv(), csv);

    let manifest_path = format!("{}.manifest.json", profile.display());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn no_stalls_guidance_has_no_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let guidance = dir.path().join("g.txt");
    let out = fpgaflow(&[
        "sim", "run", "--scenario", "no_stalls", "--nx", "16", "--ny", "16", "--nz", "16",
        "--guidance", guidance.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&guidance).unwrap();
    assert!(
        !text.contains("WARNING") && !text.contains("CRITICAL"),
        "no_stalls guidance should be clean:\n{text}"
    );
}

#[test]
fn sim_run_rejects_cyclic_graph_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cyclic.json");
    let graph = serde_json::json!({
        "stages": [
            {"name": "x", "base_ii": 1, "pipeline_latency": 2, "items": 10},
            {"name": "y", "base_ii": 1, "pipeline_latency": 2, "items": 10},
        ],
        "streams": [
            {"name": "fwd", "producer": "x", "consumer": "y", "width_bits": 32, "depth": 4, "words_per_item": 1},
            {"name": "back", "producer": "y", "consumer": "x", "width_bits": 32, "depth": 4, "words_per_item": 1},
        ],
        "ports": [],
        "memory": {"channel_count": 32, "chunk_bytes": 268435456u64, "per_channel_bytes_per_cycle": 47.9, "access_latency_cycles": 64},
        "clock": {"freq_hz": 3.0e8},
        "flops_per_item": 1.0,
        "compute_stage": "y"
    });
    std::fs::write(&path, serde_json::to_string(&graph).unwrap()).unwrap();
    let out = fpgaflow(&["sim", "run", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cycle"));
}

#[test]
fn sim_run_deadlocked_graph_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("starved.json");
    let graph = serde_json::json!({
        "stages": [
            {"name": "feed", "base_ii": 1, "pipeline_latency": 2, "items": 5},
            {"name": "work", "base_ii": 1, "pipeline_latency": 2, "items": 10},
        ],
        "streams": [
            {"name": "link", "producer": "feed", "consumer": "work", "width_bits": 32, "depth": 4, "words_per_item": 1},
        ],
        "ports": [],
        "memory": {"channel_count": 32, "chunk_bytes": 268435456u64, "per_channel_bytes_per_cycle": 47.9, "access_latency_cycles": 64},
        "clock": {"freq_hz": 3.0e8},
        "flops_per_item": 1.0,
        "compute_stage": "work"
    });
    std::fs::write(&path, serde_json::to_string(&graph).unwrap()).unwrap();
    let out = fpgaflow(&["sim", "run", "--graph", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("work"));
}

#[test]
fn sim_run_accepts_canonical_graph_documents() {
    let doc = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/scenarios/no_stalls.json");
    let out = fpgaflow(&[
        "sim", "run", "--graph", doc.to_str().unwrap(), "--items", "5000", "--iterations", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_of(&out).contains("analytic bottleneck jacobi"));
}

#[test]
fn ladder_freq_override_doubles_no_stalls() {
    // The compute-bound rung scales with the clock; warmup transfer cycles
    // shift slightly (memory bandwidth is absolute), hence the band.
    let base = fpgaflow(&["sim", "ladder", "--nx", "20", "--ny", "20", "--nz", "20"]);
    let doubled = fpgaflow(&[
        "sim", "ladder", "--nx", "20", "--ny", "20", "--nz", "20", "--freq-override", "600e6",
    ]);
    let pick = |out: &Output| -> f64 {
        stdout_of(out)
            .lines()
            .find(|l| l.starts_with("no_stalls"))
            .unwrap()
            .split_whitespace()
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    let slow = pick(&base);
    let fast = pick(&doubled);
    assert!(
        (fast / slow - 2.0).abs() < 0.02,
        "no_stalls at 600 MHz should double: {slow} -> {fast}"
    );
}

#[test]
fn ladder_csv_row_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ladder.csv");
    let out = fpgaflow(&[
        "sim", "ladder", "--nx", "8", "--ny", "8", "--nz", "8", "--csv", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 8); // header + 7 rows
    assert!(text.contains("initial,"));
    assert!(text.contains("freq450,"));
}

#[test]
fn config_file_overrides_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("calib.json");
    std::fs::write(&config, r#"{"access_latency_cycles": 1}"#).unwrap();
    let slow = fpgaflow(&["sim", "run", "--scenario", "initial", "--nx", "8", "--ny", "8", "--nz", "8"]);
    let fast = fpgaflow(&[
        "sim", "run", "--scenario", "initial", "--nx", "8", "--ny", "8", "--nz", "8",
        "--config", config.to_str().unwrap(),
    ]);
    let cycles = |out: &Output| -> u64 {
        stdout_of(out)
            .lines()
            .next()
            .unwrap()
            .split_whitespace()
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(cycles(&fast) < cycles(&slow) / 10, "latency 1 should collapse the stalls");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"no_such_knob": 1}"#).unwrap();
    let rejected = fpgaflow(&[
        "sim", "run", "--scenario", "initial", "--config", bad.to_str().unwrap(),
    ]);
    assert_eq!(rejected.status.code(), Some(2));
}

#[test]
fn stdout_and_files_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let commands: Vec<Vec<String>> = vec![
        vec!["himeno", "run", "--nx", "9", "--ny", "9", "--nz", "17", "--iters", "5"]
            .into_iter()
            .map(String::from)
            .collect(),
        vec!["sim", "run", "--scenario", "wide512_full", "--nx", "8", "--ny", "8", "--nz", "8",
             "--seed", "42"]
            .into_iter()
            .map(String::from)
            .collect(),
        vec!["sim", "ladder", "--nx", "8", "--ny", "8", "--nz", "8", "--seed", "7"]
            .into_iter()
            .map(String::from)
            .collect(),
        vec!["sim", "peak", "--flops", "34", "--freq", "450e6", "--ii", "1"]
            .into_iter()
            .map(String::from)
            .collect(),
    ];
    for (idx, command) in commands.iter().enumerate() {
        let args: Vec<&str> = command.iter().map(|s| s.as_str()).collect();
        let first = fpgaflow(&args);
        let second = fpgaflow(&args);
        assert!(first.status.success());
        assert_eq!(
            first.stdout, second.stdout,
            "command {idx} stdout differs between runs"
        );
    }

    // File outputs too.
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    for path in [&csv_a, &csv_b] {
        let out = fpgaflow(&[
            "sim", "run", "--scenario", "burst", "--nx", "8", "--ny", "8", "--nz", "8",
            "--seed", "3", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap(),
        "profile CSV differs between identical runs"
    );
}
