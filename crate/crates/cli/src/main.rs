//! Command-line front end for the benchmark and the dataflow simulator.
//!
//! Output conventions: everything on stdout and in written files is
//! deterministic for fixed arguments and seed. Wall-clock measurements
//! (elapsed time, measured MFLOPs) go to stderr. Run manifests carry a
//! timestamp and sit next to the primary artifact as `<file>.manifest.json`.
//!
//! Exit codes: 0 success, 1 oracle mismatch, 2 usage/config/validation
//! error, 3 simulation deadlock.

use clap::{Args, Parser, Subcommand};
use fpgaflow_core::error::Error;
use fpgaflow_core::guidance::{has_problems, render_text, run_rules, GuidanceThresholds};
use fpgaflow_core::himeno::{self, GridDims, HimenoProblem};
use fpgaflow_core::model::{analytic_throughput, peak_mflops, validate_graph, PipelineGraph};
use fpgaflow_core::scenarios::{
    self, build_himeno_graph, ladder_with, DEFAULT_LADDER_DIMS, DEFAULT_LADDER_ITERATIONS,
};
use fpgaflow_core::sim::{simulate_iterations, simulate_stage_items};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fpgaflow", version, about = "Himeno benchmark and dataflow kernel performance toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// The functional Himeno point-Jacobi benchmark.
    #[command(subcommand)]
    Himeno(HimenoCommand),
    /// The dataflow kernel performance model.
    #[command(subcommand)]
    Sim(SimCommand),
}

#[derive(Subcommand)]
enum HimenoCommand {
    /// Run the solver and print the residual trace and MFLOPs.
    Run(HimenoRunArgs),
}

#[derive(Args)]
struct HimenoRunArgs {
    #[arg(long)]
    nx: usize,
    #[arg(long)]
    ny: usize,
    #[arg(long)]
    nz: usize,
    #[arg(long)]
    iters: u64,
    /// Compare the residual trace against a file of expected values
    /// (one per line, relative tolerance 1e-5).
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Dump all fields as raw little-endian f32 binaries into a directory.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Report MFLOPs for this runtime instead of the measured wall clock
    /// (keeps stdout deterministic).
    #[arg(long)]
    assume_seconds: Option<f64>,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Simulate one scenario or a graph JSON file.
    Run(SimRunArgs),
    /// Simulate all seven scenarios and print the ladder table.
    Ladder(LadderArgs),
    /// Print the theoretical peak MFLOPs for a flop count, clock and II.
    Peak(PeakArgs),
    /// Print the embedded scenario catalog as JSON.
    Scenarios,
}

#[derive(Args)]
struct SimRunArgs {
    /// Scenario name (initial, split_ports, burst, wide512_partial,
    /// wide512_full, no_stalls, freq450).
    #[arg(long, conflicts_with = "graph")]
    scenario: Option<String>,
    /// Pipeline graph JSON document.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LADDER_DIMS.nx)]
    nx: usize,
    #[arg(long, default_value_t = DEFAULT_LADDER_DIMS.ny)]
    ny: usize,
    #[arg(long, default_value_t = DEFAULT_LADDER_DIMS.nz)]
    nz: usize,
    /// Work items per iteration (graph runs; defaults to each stage's own
    /// item count).
    #[arg(long)]
    items: Option<u64>,
    /// Iterations to simulate (scenario default: 2; graph default: 1).
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the profile CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the guidance text report here.
    #[arg(long)]
    guidance: Option<PathBuf>,
    /// Write the guidance findings as JSON here.
    #[arg(long)]
    guidance_json: Option<PathBuf>,
    /// Calibration and threshold overrides (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LadderArgs {
    #[arg(long, default_value_t = DEFAULT_LADDER_DIMS.nx)]
    nx: usize,
    #[arg(long, default_value_t = DEFAULT_LADDER_DIMS.ny)]
    ny: usize,
    #[arg(long, default_value_t = DEFAULT_LADDER_DIMS.nz)]
    nz: usize,
    #[arg(long, default_value_t = DEFAULT_LADDER_ITERATIONS)]
    iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Override every scenario's clock frequency, in Hz.
    #[arg(long)]
    freq_override: Option<f64>,
    /// Calibration overrides (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PeakArgs {
    #[arg(long)]
    flops: f64,
    #[arg(long)]
    freq: f64,
    #[arg(long, default_value_t = 1)]
    ii: u64,
}

/// Optional calibration file: every field overrides its default.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CliConfig {
    access_latency_cycles: Option<u64>,
    per_channel_bytes_per_cycle: Option<f64>,
    overhead_beats: Option<u64>,
    steady_cycles_per_item: Option<f64>,
    guidance_thresholds: Option<GuidanceThresholds>,
}

impl CliConfig {
    fn load(path: Option<&Path>) -> Result<CliConfig, Error> {
        match path {
            None => Ok(CliConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }

    fn apply(&self, graph: &mut PipelineGraph) {
        if let Some(latency) = self.access_latency_cycles {
            graph.memory.access_latency_cycles = latency;
        }
        if let Some(rate) = self.per_channel_bytes_per_cycle {
            graph.memory.per_channel_bytes_per_cycle = rate;
        }
        if let Some(overhead) = self.overhead_beats {
            graph.tuning.overhead_beats = overhead;
        }
        if let Some(steady) = self.steady_cycles_per_item {
            graph.tuning.steady_cycles_per_item = steady;
        }
    }

    fn thresholds(&self) -> GuidanceThresholds {
        self.guidance_thresholds.unwrap_or_default()
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    seed: Option<u64>,
    config_path: Option<String>,
    outputs: Vec<String>,
    tool_version: &'static str,
    unix_time: u64,
}

impl RunManifest {
    fn new(seed: Option<u64>, config_path: Option<&Path>, outputs: &[&Path]) -> RunManifest {
        RunManifest {
            command: std::env::args().collect::<Vec<_>>().join(" "),
            seed,
            config_path: config_path.map(|p| p.display().to_string()),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            tool_version: env!("CARGO_PKG_VERSION"),
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// Written next to the primary artifact for reproducibility.
    fn write_next_to(&self, primary: &Path) -> Result<(), Error> {
        let mut path = primary.as_os_str().to_owned();
        path.push(".manifest.json");
        std::fs::write(PathBuf::from(path), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Himeno(HimenoCommand::Run(args)) => himeno_run(args),
        Command::Sim(SimCommand::Run(args)) => sim_run(args),
        Command::Sim(SimCommand::Ladder(args)) => sim_ladder(args),
        Command::Sim(SimCommand::Peak(args)) => sim_peak(args),
        Command::Sim(SimCommand::Scenarios) => sim_scenarios(),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Deadlock { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn himeno_run(args: HimenoRunArgs) -> Result<ExitCode, Error> {
    let dims = GridDims::new(args.nx, args.ny, args.nz)?;
    if args.iters < 1 {
        return Err(Error::InvalidConfig("iters must be >= 1".into()));
    }
    let run = himeno::run_benchmark(dims, args.iters);

    println!("dims {}x{}x{} iters {}", dims.nx, dims.ny, dims.nz, args.iters);
    for (i, gosa) in run.gosa_trace.iter().enumerate() {
        println!("gosa {} {:e}", i + 1, gosa);
    }
    println!("total flops {:e}", run.total_flops as f64);
    if let Some(seconds) = args.assume_seconds {
        let value = himeno::mflops(dims, args.iters, seconds)?;
        println!("mflops {value:.5} (assumed {seconds} s)");
    }
    eprintln!(
        "elapsed {:.6} s, measured {:.2} MFLOPs",
        run.elapsed_seconds, run.mflops
    );

    if let Some(dir) = &args.dump {
        let problem = rebuild_final_state(dims, args.iters);
        dump_fields(dir, &problem)?;
        let manifest = RunManifest::new(None, None, &[dir]);
        manifest.write_next_to(&dir.join("fields"))?;
        println!("dumped fields to {}", dir.display());
    }

    if let Some(oracle_path) = &args.oracle {
        let expected = load_oracle(oracle_path)?;
        match compare_traces(&run.gosa_trace, &expected) {
            Ok(count) => println!("oracle check: OK ({count} entries within 1e-5)"),
            Err(message) => {
                println!("oracle check: MISMATCH {message}");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Re-runs the solver to obtain the full post-run field state for dumping.
fn rebuild_final_state(dims: GridDims, iters: u64) -> HimenoProblem {
    let mut problem = himeno::init_problem(dims);
    for _ in 0..iters {
        himeno::jacobi_sweep(&mut problem);
        himeno::copy_back(&mut problem);
    }
    problem
}

const DUMP_MAGIC: &[u8; 4] = b"HIMF";

fn dump_field(dir: &Path, dims: GridDims, name: &str, data: &[f32]) -> Result<(), Error> {
    let mut bytes = Vec::with_capacity(4 + 4 + 12 + 1 + name.len() + data.len() * 4);
    bytes.extend_from_slice(DUMP_MAGIC);
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&(dims.nx as u32).to_le_bytes());
    bytes.extend_from_slice(&(dims.ny as u32).to_le_bytes());
    bytes.extend_from_slice(&(dims.nz as u32).to_le_bytes());
    bytes.push(name.len() as u8);
    bytes.extend_from_slice(name.as_bytes());
    for value in data {
        bytes.extend_from_slice(&value.to_le_bytes());
    }
    std::fs::write(dir.join(format!("{name}.bin")), bytes)?;
    Ok(())
}

fn dump_fields(dir: &Path, problem: &HimenoProblem) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let dims = problem.dims;
    dump_field(dir, dims, "a", problem.a.as_slice())?;
    dump_field(dir, dims, "b", problem.b.as_slice())?;
    dump_field(dir, dims, "c", problem.c.as_slice())?;
    dump_field(dir, dims, "p", problem.p.as_slice())?;
    dump_field(dir, dims, "wrk1", problem.wrk1.as_slice())?;
    dump_field(dir, dims, "bnd", problem.bnd.as_slice())?;
    dump_field(dir, dims, "wrk2", problem.wrk2.as_slice())?;
    Ok(())
}

fn load_oracle(path: &Path) -> Result<Vec<f32>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        // Accept either a bare value or "gosa <n> <value>" lines.
        let token = trimmed.split_whitespace().last().unwrap();
        let value: f32 = token.parse().map_err(|_| {
            Error::InvalidConfig(format!(
                "{}:{}: not a float: '{token}'",
                path.display(),
                line_no + 1
            ))
        })?;
        values.push(value);
    }
    Ok(values)
}

fn compare_traces(actual: &[f32], expected: &[f32]) -> Result<usize, String> {
    if actual.len() != expected.len() {
        return Err(format!(
            "entry count differs: ran {} iterations, oracle has {}",
            actual.len(),
            expected.len()
        ));
    }
    for (i, (&got, &want)) in actual.iter().zip(expected.iter()).enumerate() {
        let scale = want.abs().max(f32::MIN_POSITIVE);
        if (got - want).abs() / scale > 1e-5 {
            return Err(format!("at iteration {}: {got:e} vs oracle {want:e}", i + 1));
        }
    }
    Ok(actual.len())
}

fn sim_run(args: SimRunArgs) -> Result<ExitCode, Error> {
    let config = CliConfig::load(args.config.as_deref())?;

    let (mut graph, items) = if let Some(name) = &args.scenario {
        let sc = scenarios::scenario(name)?;
        let dims = GridDims::new(args.nx, args.ny, args.nz)?;
        (build_himeno_graph(&sc.config, dims)?, Some(dims.interior_cells()))
    } else if let Some(path) = &args.graph {
        let text = std::fs::read_to_string(path)?;
        let graph: PipelineGraph = serde_json::from_str(&text)?;
        (graph, None)
    } else {
        return Err(Error::InvalidConfig(
            "one of --scenario or --graph is required".into(),
        ));
    };
    config.apply(&mut graph);

    let violations = validate_graph(&graph);
    if !violations.is_empty() {
        for violation in &violations {
            eprintln!("violation: {violation}");
        }
        return Err(Error::InvalidGraph(format!(
            "{} violation(s)",
            violations.len()
        )));
    }

    let scenario_run = args.scenario.is_some();
    let iterations = args
        .iterations
        .unwrap_or(if scenario_run { DEFAULT_LADDER_ITERATIONS } else { 1 });
    let items = args.items.or(items);
    let profile = match items {
        Some(items) => simulate_iterations(&graph, items, iterations, args.seed)?,
        None => {
            if iterations > 1 {
                return Err(Error::InvalidConfig(
                    "--items is required when --iterations > 1 for graph runs".into(),
                ));
            }
            simulate_stage_items(&graph, args.seed)?
        }
    };

    let (rate, bottleneck) = analytic_throughput(&graph)?;
    println!(
        "cycles {} achieved {:.2} MFLOPs memory_stall {:.4}",
        profile.total_cycles, profile.achieved_mflops, profile.memory_stall_fraction
    );
    println!("analytic bottleneck {bottleneck} at {rate:.3e} items/s");

    let thresholds = config.thresholds();
    let findings = run_rules(&graph, &profile, &thresholds)?;
    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(path) = &args.out {
        std::fs::write(path, profile.to_csv())?;
        outputs.push(path);
        println!("profile csv: {}", path.display());
    }
    if let Some(path) = &args.guidance {
        std::fs::write(path, render_text(&findings))?;
        outputs.push(path);
        println!("guidance: {}", path.display());
    }
    if let Some(path) = &args.guidance_json {
        std::fs::write(path, serde_json::to_string_pretty(&findings)?)?;
        outputs.push(path);
        println!("guidance json: {}", path.display());
    }
    if !outputs.is_empty() {
        let manifest = RunManifest::new(Some(args.seed), args.config.as_deref(), &outputs);
        manifest.write_next_to(outputs[0])?;
    }
    if findings.is_empty() {
        println!("guidance: healthy, no findings");
    } else {
        println!(
            "guidance: {} finding(s){}",
            findings.len(),
            if has_problems(&findings) {
                ", problems flagged"
            } else {
                ""
            }
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn sim_ladder(args: LadderArgs) -> Result<ExitCode, Error> {
    let dims = GridDims::new(args.nx, args.ny, args.nz)?;
    let config = CliConfig::load(args.config.as_deref())?;
    let freq_override = args.freq_override;
    let rows = ladder_with(dims, args.iters, args.seed, |graph| {
        config.apply(graph);
        if let Some(freq) = freq_override {
            graph.clock.freq_hz = freq;
        }
    })?;

    println!(
        "{:<16} {:>12} {:>12} {:>14} {:>12}",
        "scenario", "sim MFLOPs", "published", "bottleneck", "mem stall"
    );
    for row in &rows {
        println!(
            "{:<16} {:>12.2} {:>12.2} {:>14} {:>11.2}%",
            row.scenario,
            row.simulated_mflops,
            row.published_mflops,
            row.bottleneck,
            row.memory_stall_fraction * 100.0
        );
    }
    println!(
        "dims {}x{}x{} iters {} (published column: measured MFLOPs from the \
         original tuning study; the simulator reproduces ordering and stall \
         behavior, not absolute figures)",
        dims.nx, dims.ny, dims.nz, args.iters
    );

    if let Some(path) = &args.csv {
        let mut text = String::from(
            "scenario,simulated_mflops,published_mflops,bottleneck,memory_stall_fraction,total_cycles\n",
        );
        for row in &rows {
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.scenario,
                row.simulated_mflops,
                row.published_mflops,
                row.bottleneck,
                row.memory_stall_fraction,
                row.total_cycles
            ));
        }
        std::fs::write(path, text)?;
        let manifest = RunManifest::new(Some(args.seed), args.config.as_deref(), &[path]);
        manifest.write_next_to(path)?;
        println!("csv: {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn sim_scenarios() -> Result<ExitCode, Error> {
    println!("{}", serde_json::to_string_pretty(&scenarios::catalog())?);
    Ok(ExitCode::SUCCESS)
}

fn sim_peak(args: PeakArgs) -> Result<ExitCode, Error> {
    if args.flops <= 0.0 || args.freq <= 0.0 || args.ii < 1 {
        return Err(Error::InvalidConfig(
            "flops and freq must be positive, ii >= 1".into(),
        ));
    }
    let value = peak_mflops(args.flops, args.freq, args.ii);
    println!(
        "theoretical peak: {value} MFLOPs ({} flops/item at {:e} Hz, II={})",
        args.flops, args.freq, args.ii
    );
    // Flush so piped consumers always see the line before exit.
    std::io::stdout().flush().ok();
    Ok(ExitCode::SUCCESS)
}
