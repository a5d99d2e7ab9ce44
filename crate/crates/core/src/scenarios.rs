//! The Himeno kernel as a five-stage dataflow graph, generated from an
//! optimization-knob record, plus the seven named configurations of the
//! optimization ladder.
//!
//! Per-field traffic per grid cell: `a` carries four single-precision values,
//! `b` and `c` three each, `p`/`wrk1`/`bnd`/`result` one each. In scalar
//! streaming mode the per-field streams deliver that many 32-bit words per
//! item; chunked mode packs a whole cell's worth into one wide word.

use crate::error::{Error, Result};
use crate::himeno::GridDims;
use crate::model::{
    ClockSpec, LogicalBuffer, MemorySystemSpec, PipelineGraph, PortDirection, PortSpec, StageSpec,
    StreamSpec, Tuning,
};
use crate::profile::SimProfile;
use crate::sim::simulate_iterations;
use serde::{Deserialize, Serialize};

/// Latency of a single-precision floating-point add chain; the residual
/// accumulator is unrolled by `gosa_unroll` to hide it.
pub const FADD_LATENCY: u64 = 11;

/// The kernel's data fields, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    A,
    B,
    C,
    P,
    Wrk1,
    Bnd,
    Result,
}

impl Field {
    pub const ALL: [Field; 7] = [
        Field::A,
        Field::B,
        Field::C,
        Field::P,
        Field::Wrk1,
        Field::Bnd,
        Field::Result,
    ];

    pub const INPUTS: [Field; 6] = [
        Field::A,
        Field::B,
        Field::C,
        Field::P,
        Field::Wrk1,
        Field::Bnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::A => "a",
            Field::B => "b",
            Field::C => "c",
            Field::P => "p",
            Field::Wrk1 => "wrk1",
            Field::Bnd => "bnd",
            Field::Result => "result",
        }
    }

    /// Single-precision values a cell moves through this field.
    pub fn floats_per_item(self) -> u32 {
        match self {
            Field::A => 4,
            Field::B | Field::C => 3,
            _ => 1,
        }
    }

    pub fn bytes_per_item(self) -> u64 {
        self.floats_per_item() as u64 * 4
    }
}

/// One value per kernel field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerField<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub p: T,
    pub wrk1: T,
    pub bnd: T,
    pub result: T,
}

impl<T: Copy> PerField<T> {
    pub fn uniform(value: T) -> Self {
        PerField {
            a: value,
            b: value,
            c: value,
            p: value,
            wrk1: value,
            bnd: value,
            result: value,
        }
    }

    pub fn get(&self, field: Field) -> T {
        match field {
            Field::A => self.a,
            Field::B => self.b,
            Field::C => self.c,
            Field::P => self.p,
            Field::Wrk1 => self.wrk1,
            Field::Bnd => self.bnd,
            Field::Result => self.result,
        }
    }

    pub fn set(&mut self, field: Field, value: T) {
        match field {
            Field::A => self.a = value,
            Field::B => self.b = value,
            Field::C => self.c = value,
            Field::P => self.p = value,
            Field::Wrk1 => self.wrk1 = value,
            Field::Bnd => self.bnd = value,
            Field::Result => self.result = value,
        }
    }
}

/// The optimization knobs that generate one kernel configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// One port per field instead of a single shared port.
    pub split_ports: bool,
    /// HBM channel index per field.
    pub channel_map: PerField<usize>,
    /// Burst length qualifier, in beats.
    pub burst_beats: u64,
    /// Outstanding-transactions qualifier.
    pub outstanding: u64,
    /// Configured port width; packing is required to exploit widths > 32.
    pub port_width_bits: u32,
    /// Whether each field's wide-port packing directive is present.
    pub packed_fields: PerField<bool>,
    /// Chunked (one wide word per cell) versus scalar streaming per field.
    pub stream_chunking: PerField<bool>,
    pub stream_depth: usize,
    pub freq_hz: f64,
    /// Unroll factor of the residual accumulator (11 or 20).
    pub gosa_unroll: u32,
}

impl KernelConfig {
    fn validate(&self, memory: &MemorySystemSpec) -> Result<()> {
        if self.burst_beats < 1 {
            return Err(Error::InvalidConfig("burst_beats must be >= 1".into()));
        }
        if self.outstanding < 1 {
            return Err(Error::InvalidConfig("outstanding must be >= 1".into()));
        }
        if self.port_width_bits != 32 && self.port_width_bits != 512 {
            return Err(Error::InvalidConfig(format!(
                "port_width_bits must be 32 or 512, got {}",
                self.port_width_bits
            )));
        }
        if self.freq_hz <= 0.0 {
            return Err(Error::InvalidConfig("freq_hz must be positive".into()));
        }
        if self.stream_depth < 1 {
            return Err(Error::InvalidConfig("stream_depth must be >= 1".into()));
        }
        if self.gosa_unroll < 1 {
            return Err(Error::InvalidConfig("gosa_unroll must be >= 1".into()));
        }
        for field in Field::ALL {
            if self.channel_map.get(field) >= memory.channel_count {
                return Err(Error::InvalidConfig(format!(
                    "channel {} for field {} out of range",
                    self.channel_map.get(field),
                    field.name()
                )));
            }
        }
        Ok(())
    }

    /// Effective (width, beats) a field's port materializes to. A 32-bit port
    /// bursts without packing; an unpacked field on a wide port degenerates
    /// to 4-byte single-beat accesses.
    fn port_shape(&self, field: Field) -> (u32, u64) {
        if self.port_width_bits > 32 && !self.packed_fields.get(field) {
            (32, 1)
        } else {
            (self.port_width_bits, self.burst_beats)
        }
    }
}

fn stream(
    name: &str,
    producer: &str,
    consumer: &str,
    width_bits: u32,
    depth: usize,
    words_per_item: u32,
) -> StreamSpec {
    StreamSpec {
        name: name.into(),
        producer: producer.into(),
        consumer: consumer.into(),
        width_bits,
        depth,
        words_per_item,
    }
}

/// Builds the five-stage Himeno pipeline graph for one knob record:
/// read -> package -> jacobi -> write, with the residual accumulator fed
/// from the jacobi stage. `a`, `b` and `c` stream straight into the jacobi
/// stage, which is where scalar streaming inflates the initiation interval.
pub fn build_himeno_graph(cfg: &KernelConfig, dims: GridDims) -> Result<PipelineGraph> {
    let memory = MemorySystemSpec::default();
    cfg.validate(&memory)?;
    let items = dims.interior_cells();
    let depth = cfg.stream_depth;

    let gosa_ii = FADD_LATENCY.div_ceil(cfg.gosa_unroll as u64).max(1);
    let stages = vec![
        StageSpec {
            name: "read_data".into(),
            base_ii: 1,
            pipeline_latency: 4,
            items,
        },
        StageSpec {
            name: "package_data".into(),
            base_ii: 1,
            pipeline_latency: 8,
            items,
        },
        StageSpec {
            name: "jacobi".into(),
            base_ii: 1,
            pipeline_latency: 30,
            items,
        },
        StageSpec {
            name: "write_results".into(),
            base_ii: 1,
            pipeline_latency: 4,
            items,
        },
        StageSpec {
            name: "gosa_accum".into(),
            base_ii: gosa_ii,
            pipeline_latency: FADD_LATENCY + cfg.gosa_unroll as u64,
            items,
        },
    ];

    let mut streams = Vec::new();
    for field in [Field::A, Field::B, Field::C] {
        let floats = field.floats_per_item();
        let (width, wpi) = if cfg.stream_chunking.get(field) {
            (32 * floats, 1)
        } else {
            (32, floats)
        };
        streams.push(stream(field.name(), "read_data", "jacobi", width, depth, wpi));
    }
    for field in [Field::P, Field::Wrk1, Field::Bnd] {
        streams.push(stream(field.name(), "read_data", "package_data", 32, depth, 1));
    }
    // The assembled cell package: a 19-value pressure window plus the source
    // and boundary terms.
    streams.push(stream("package", "package_data", "jacobi", 21 * 32, depth, 1));
    streams.push(stream("result", "jacobi", "write_results", 32, depth, 1));
    streams.push(stream("ss", "jacobi", "gosa_accum", 32, depth, 1));

    let mut ports = Vec::new();
    if cfg.split_ports {
        for field in Field::INPUTS {
            let (width, beats) = cfg.port_shape(field);
            ports.push(PortSpec {
                name: format!("port_{}", field.name()),
                stage: "read_data".into(),
                direction: PortDirection::Read,
                width_bits: width,
                max_burst_beats: beats,
                outstanding: cfg.outstanding,
                channel: cfg.channel_map.get(field),
                logical_buffers: vec![LogicalBuffer {
                    name: field.name().into(),
                    bytes_per_item: field.bytes_per_item(),
                }],
            });
        }
    } else {
        let (width, beats) = cfg.port_shape(Field::A);
        ports.push(PortSpec {
            name: "port_all".into(),
            stage: "read_data".into(),
            direction: PortDirection::Read,
            width_bits: width,
            max_burst_beats: beats,
            outstanding: cfg.outstanding,
            channel: cfg.channel_map.get(Field::A),
            logical_buffers: Field::INPUTS
                .iter()
                .map(|f| LogicalBuffer {
                    name: f.name().into(),
                    bytes_per_item: f.bytes_per_item(),
                })
                .collect(),
        });
    }
    let (width, beats) = cfg.port_shape(Field::Result);
    ports.push(PortSpec {
        name: "port_result".into(),
        stage: "write_results".into(),
        direction: PortDirection::Write,
        width_bits: width,
        max_burst_beats: beats,
        outstanding: cfg.outstanding,
        channel: cfg.channel_map.get(Field::Result),
        logical_buffers: vec![LogicalBuffer {
            name: "result".into(),
            bytes_per_item: Field::Result.bytes_per_item(),
        }],
    });

    Ok(PipelineGraph {
        stages,
        streams,
        ports,
        memory,
        clock: ClockSpec {
            freq_hz: cfg.freq_hz,
        },
        flops_per_item: 34.0,
        compute_stage: "jacobi".into(),
        tuning: Tuning::default(),
    })
}

/// A named rung of the optimization ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub config: KernelConfig,
    /// The published MFLOPs for this rung; reporting metadata, never a
    /// simulation target.
    pub published_mflops: f64,
}

/// The seven FPGA configurations, in ladder order.
pub fn catalog() -> Vec<Scenario> {
    let spread_channels = PerField {
        a: 0,
        b: 1,
        c: 2,
        p: 3,
        wrk1: 4,
        bnd: 5,
        result: 6,
    };

    let initial = KernelConfig {
        split_ports: false,
        channel_map: PerField::uniform(0),
        burst_beats: 1,
        outstanding: 1,
        port_width_bits: 32,
        packed_fields: PerField::uniform(false),
        stream_chunking: PerField::uniform(false),
        stream_depth: 16,
        freq_hz: 300.0e6,
        gosa_unroll: 11,
    };

    let split = KernelConfig {
        split_ports: true,
        channel_map: spread_channels,
        ..initial.clone()
    };

    let burst = KernelConfig {
        burst_beats: 4,
        ..split.clone()
    };

    let wide512_partial = KernelConfig {
        port_width_bits: 512,
        burst_beats: 16,
        outstanding: 8,
        packed_fields: PerField {
            a: false,
            b: false,
            c: false,
            p: true,
            wrk1: true,
            bnd: true,
            result: true,
        },
        ..burst.clone()
    };

    let wide512_full = KernelConfig {
        packed_fields: PerField::uniform(true),
        ..wide512_partial.clone()
    };

    let no_stalls = KernelConfig {
        stream_chunking: PerField {
            a: true,
            b: true,
            c: true,
            p: false,
            wrk1: false,
            bnd: false,
            result: false,
        },
        ..wide512_full.clone()
    };

    let freq450 = KernelConfig {
        freq_hz: 450.0e6,
        gosa_unroll: 20,
        ..no_stalls.clone()
    };

    vec![
        Scenario {
            name: "initial".into(),
            config: initial,
            published_mflops: 77.82,
        },
        Scenario {
            name: "split_ports".into(),
            config: split,
            published_mflops: 220.23,
        },
        Scenario {
            name: "burst".into(),
            config: burst,
            published_mflops: 301.58,
        },
        Scenario {
            name: "wide512_partial".into(),
            config: wide512_partial,
            published_mflops: 357.21,
        },
        Scenario {
            name: "wide512_full".into(),
            config: wide512_full,
            published_mflops: 1452.13,
        },
        Scenario {
            name: "no_stalls".into(),
            config: no_stalls,
            published_mflops: 5773.25,
        },
        Scenario {
            name: "freq450".into(),
            config: freq450,
            published_mflops: 8658.42,
        },
    ]
}

pub fn scenario(name: &str) -> Result<Scenario> {
    catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// Grid used by the desk-scale ladder by default.
pub const DEFAULT_LADDER_DIMS: GridDims = GridDims {
    nx: 34,
    ny: 34,
    nz: 34,
};
pub const DEFAULT_LADDER_ITERATIONS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub scenario: String,
    pub simulated_mflops: f64,
    pub published_mflops: f64,
    pub bottleneck: String,
    pub memory_stall_fraction: f64,
    pub total_cycles: u64,
}

/// Simulates every scenario at the given problem size and returns the table
/// in ladder order. Scenarios run on worker threads; the table order is
/// fixed regardless.
pub fn ladder(dims: GridDims, iterations: u64, seed: u64) -> Result<Vec<LadderRow>> {
    ladder_with(dims, iterations, seed, |_| {})
}

/// As [`ladder`], applying `adjust` to every graph before simulation (used
/// for frequency overrides and calibration).
pub fn ladder_with(
    dims: GridDims,
    iterations: u64,
    seed: u64,
    adjust: impl Fn(&mut PipelineGraph) + Sync,
) -> Result<Vec<LadderRow>> {
    let scenarios = catalog();
    let mut rows: Vec<Result<LadderRow>> = Vec::with_capacity(scenarios.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| {
                let adjust = &adjust;
                scope.spawn(move || -> Result<LadderRow> {
                    let mut graph = build_himeno_graph(&sc.config, dims)?;
                    adjust(&mut graph);
                    let items = dims.interior_cells();
                    let profile = simulate_iterations(&graph, items, iterations, seed)?;
                    let (_, bottleneck) = crate::model::analytic_throughput(&graph)?;
                    Ok(LadderRow {
                        scenario: sc.name.clone(),
                        simulated_mflops: profile.achieved_mflops,
                        published_mflops: sc.published_mflops,
                        bottleneck,
                        memory_stall_fraction: profile.memory_stall_fraction,
                        total_cycles: profile.total_cycles,
                    })
                })
            })
            .collect();
        for handle in handles {
            rows.push(handle.join().expect("ladder worker panicked"));
        }
    });
    rows.into_iter().collect()
}

/// Simulates one scenario and returns its graph and profile.
pub fn run_scenario(
    name: &str,
    dims: GridDims,
    iterations: u64,
    seed: u64,
) -> Result<(PipelineGraph, SimProfile)> {
    let sc = scenario(name)?;
    let graph = build_himeno_graph(&sc.config, dims)?;
    let profile = simulate_iterations(&graph, dims.interior_cells(), iterations, seed)?;
    Ok((graph, profile))
}
