//! Declarative description of a dataflow kernel — stages, bounded streams,
//! memory ports, clock and memory system — plus the closed-form analytic
//! bottleneck calculations the cycle simulator is checked against.
//!
//! All types here are pure values; they serialize to and from JSON (one
//! document per graph, see `docs/graph_schema.md`).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Reference clock at which `per_channel_bytes_per_cycle` is measured.
///
/// Channel bandwidth is an absolute quantity (bytes per second); expressing
/// it per cycle needs a fixed reference so that changing the kernel clock
/// does not silently change memory bandwidth.
pub const MEMORY_REFERENCE_CLOCK_HZ: f64 = 300.0e6;

/// One concurrently running pipeline section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub name: String,
    /// Cycles per item when unconstrained (>= 1).
    pub base_ii: u64,
    /// Fill depth of the stage's internal pipeline (>= 1).
    pub pipeline_latency: u64,
    /// Work items processed per kernel invocation.
    pub items: u64,
}

/// Bounded FIFO between two stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub name: String,
    pub producer: String,
    pub consumer: String,
    /// Bits transferred per cycle (one word).
    pub width_bits: u32,
    /// Buffer capacity in words.
    pub depth: usize,
    /// Words the consumer must receive to process one item.
    pub words_per_item: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDirection {
    Read,
    Write,
}

/// A field (buffer) mapped onto a kernel port.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalBuffer {
    pub name: String,
    /// Bytes this buffer moves per work item.
    pub bytes_per_item: u64,
}

/// An AXI-style kernel port: at most one access per cycle, shared across all
/// of its logical buffers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortSpec {
    pub name: String,
    /// Stage this port is bound to.
    pub stage: String,
    pub direction: PortDirection,
    /// Data-path width; one beat of width_bits/8 bytes per cycle.
    pub width_bits: u32,
    /// Beats per burst transaction.
    pub max_burst_beats: u64,
    /// Maximum in-flight bursts before issue stalls.
    pub outstanding: u64,
    /// HBM channel index this port is mapped to.
    pub channel: usize,
    pub logical_buffers: Vec<LogicalBuffer>,
}

pub const VALID_PORT_WIDTHS: [u32; 5] = [32, 64, 128, 256, 512];

/// The memory system behind the channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySystemSpec {
    pub channel_count: usize,
    /// Capacity of one chunk (one channel's backing storage).
    pub chunk_bytes: u64,
    /// Peak bytes per cycle per channel, measured at
    /// [`MEMORY_REFERENCE_CLOCK_HZ`].
    pub per_channel_bytes_per_cycle: f64,
    /// Round-trip latency of one burst issue, in kernel cycles.
    pub access_latency_cycles: u64,
}

impl Default for MemorySystemSpec {
    /// 32 chunks of 256 MB; 460 GB/s aggregate split evenly; 64-cycle
    /// access latency. Calibration inputs, not claims.
    fn default() -> Self {
        MemorySystemSpec {
            channel_count: 32,
            chunk_bytes: 256 * 1024 * 1024,
            per_channel_bytes_per_cycle: 460.0e9 / 32.0 / MEMORY_REFERENCE_CLOCK_HZ,
            access_latency_cycles: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub freq_hz: f64,
}

impl Default for ClockSpec {
    fn default() -> Self {
        ClockSpec { freq_hz: 300.0e6 }
    }
}

/// Calibration knobs that shape the memory and steady-state model without
/// changing any structural invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    /// Fixed per-burst overhead charged to the channel, in beats.
    #[serde(default = "Tuning::default_overhead_beats")]
    pub overhead_beats: u64,
    /// Average cycles per item the compute stage spends beyond its
    /// effective II; expresses unexplained steady-state slack.
    #[serde(default = "Tuning::default_steady_cycles_per_item")]
    pub steady_cycles_per_item: f64,
}

impl Tuning {
    fn default_overhead_beats() -> u64 {
        1
    }
    fn default_steady_cycles_per_item() -> f64 {
        1.0
    }
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning {
            overhead_beats: 1,
            steady_cycles_per_item: 1.0,
        }
    }
}

/// A complete kernel configuration: the unit of validation, simulation and
/// analytic bottleneck analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineGraph {
    pub stages: Vec<StageSpec>,
    pub streams: Vec<StreamSpec>,
    pub ports: Vec<PortSpec>,
    pub memory: MemorySystemSpec,
    pub clock: ClockSpec,
    /// Floating-point work per item, attributed to `compute_stage`.
    pub flops_per_item: f64,
    pub compute_stage: String,
    #[serde(default)]
    pub tuning: Tuning,
}

/// A named rule violation; violations are data, not exceptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

impl PipelineGraph {
    pub fn stage(&self, name: &str) -> Option<&StageSpec> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn incoming_streams(&self, stage: &str) -> Vec<&StreamSpec> {
        self.streams.iter().filter(|s| s.consumer == stage).collect()
    }

    pub fn outgoing_streams(&self, stage: &str) -> Vec<&StreamSpec> {
        self.streams.iter().filter(|s| s.producer == stage).collect()
    }

    /// Effective initiation interval of a named stage within this graph.
    pub fn effective_ii_of(&self, stage: &str) -> u64 {
        match self.stage(stage) {
            Some(spec) => effective_ii(spec, &self.incoming_streams(stage)),
            None => 1,
        }
    }

    /// Stage indices in topological order (producers before consumers).
    /// Fails when the stream graph has a cycle.
    pub fn topo_order(&self) -> std::result::Result<Vec<usize>, Vec<String>> {
        let index: HashMap<&str, usize> = self
            .stages
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i))
            .collect();
        let mut indegree = vec![0usize; self.stages.len()];
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); self.stages.len()];
        for stream in &self.streams {
            if let (Some(&p), Some(&c)) = (
                index.get(stream.producer.as_str()),
                index.get(stream.consumer.as_str()),
            ) {
                adjacency[p].push(c);
                indegree[c] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..self.stages.len()).filter(|&i| indegree[i] == 0).collect();
        ready.sort_unstable();
        let mut order = Vec::with_capacity(self.stages.len());
        while let Some(node) = ready.first().copied() {
            ready.remove(0);
            order.push(node);
            for &next in &adjacency[node] {
                indegree[next] -= 1;
                if indegree[next] == 0 {
                    ready.push(next);
                    ready.sort_unstable();
                }
            }
        }
        if order.len() == self.stages.len() {
            Ok(order)
        } else {
            let stuck: Vec<String> = (0..self.stages.len())
                .filter(|i| !order.contains(i))
                .map(|i| self.stages[i].name.clone())
                .collect();
            Err(stuck)
        }
    }
}

/// Checks every type and graph invariant; the empty list means well-formed.
pub fn validate_graph(graph: &PipelineGraph) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut push = |entity: &str, message: String| {
        violations.push(Violation {
            entity: entity.to_string(),
            message,
        });
    };

    let mut stage_names = HashSet::new();
    for stage in &graph.stages {
        if !stage_names.insert(stage.name.as_str()) {
            push(&stage.name, "duplicate stage name".into());
        }
        if stage.base_ii < 1 {
            push(&stage.name, "base_ii must be >= 1".into());
        }
        if stage.pipeline_latency < 1 {
            push(&stage.name, "pipeline_latency must be >= 1".into());
        }
    }

    for stream in &graph.streams {
        if stream.width_bits == 0 {
            push(&stream.name, "width_bits must be positive".into());
        }
        if stream.depth < 1 {
            push(&stream.name, "depth must be >= 1".into());
        }
        if stream.words_per_item < 1 {
            push(&stream.name, "words_per_item must be >= 1".into());
        }
        if stream.producer == stream.consumer {
            push(&stream.name, "producer and consumer must differ".into());
        }
        if !stage_names.contains(stream.producer.as_str()) {
            push(
                &stream.name,
                format!("unknown producer stage '{}'", stream.producer),
            );
        }
        if !stage_names.contains(stream.consumer.as_str()) {
            push(
                &stream.name,
                format!("unknown consumer stage '{}'", stream.consumer),
            );
        }
    }

    let mut port_names = HashSet::new();
    for port in &graph.ports {
        if !port_names.insert(port.name.as_str()) {
            push(&port.name, "duplicate port name".into());
        }
        if !VALID_PORT_WIDTHS.contains(&port.width_bits) {
            push(
                &port.name,
                format!("width_bits {} not in {:?}", port.width_bits, VALID_PORT_WIDTHS),
            );
        }
        if port.max_burst_beats < 1 {
            push(&port.name, "max_burst_beats must be >= 1".into());
        }
        if port.outstanding < 1 {
            push(&port.name, "outstanding must be >= 1".into());
        }
        if port.logical_buffers.is_empty() {
            push(&port.name, "port needs at least one logical buffer".into());
        }
        if port.channel >= graph.memory.channel_count {
            push(
                &port.name,
                format!(
                    "channel {} out of range (memory has {})",
                    port.channel, graph.memory.channel_count
                ),
            );
        }
        if !stage_names.contains(port.stage.as_str()) {
            push(&port.name, format!("unknown stage '{}'", port.stage));
        }
        for buffer in &port.logical_buffers {
            let stage_items = graph.stage(&port.stage).map(|s| s.items).unwrap_or(0);
            let footprint = buffer.bytes_per_item.saturating_mul(stage_items);
            if footprint > graph.memory.chunk_bytes {
                push(
                    &port.name,
                    format!(
                        "buffer '{}' footprint {} bytes exceeds chunk capacity {} bytes",
                        buffer.name, footprint, graph.memory.chunk_bytes
                    ),
                );
            }
        }
    }

    if graph.memory.channel_count < 1 {
        push("memory", "channel_count must be >= 1".into());
    }
    if graph.memory.chunk_bytes == 0
        || graph.memory.per_channel_bytes_per_cycle <= 0.0
        || graph.memory.access_latency_cycles == 0
    {
        push("memory", "all memory quantities must be positive".into());
    }
    if graph.clock.freq_hz <= 0.0 {
        push("clock", "freq_hz must be positive".into());
    }
    if graph.stage(&graph.compute_stage).is_none() {
        push(
            &graph.compute_stage,
            "compute_stage does not name a stage".into(),
        );
    }

    if let Err(stuck) = graph.topo_order() {
        push(
            "graph",
            format!("stream graph has a cycle involving: {}", stuck.join(", ")),
        );
    }

    violations
}

/// Cycles per item a stage needs given its incoming streams: one word per
/// stream per cycle, so a stream delivering n words per item imposes an II
/// of n. Chunked streams (words_per_item = 1) impose no inflation.
pub fn effective_ii(stage: &StageSpec, incoming: &[&StreamSpec]) -> u64 {
    let stream_ii = incoming
        .iter()
        .map(|s| s.words_per_item as u64)
        .max()
        .unwrap_or(1);
    stage.base_ii.max(stream_ii)
}

/// Bytes moved by one full burst on this port.
pub fn burst_bytes(port: &PortSpec) -> u64 {
    (port.width_bits as u64 / 8) * port.max_burst_beats
}

/// Bytes carried by a single beat.
pub fn beat_bytes(port: &PortSpec) -> u64 {
    port.width_bits as u64 / 8
}

/// Fraction of channel time a burst spends on payload:
/// burst / (burst + overhead_beats * beat).
pub fn burst_efficiency(port: &PortSpec, tuning: &Tuning) -> f64 {
    let payload = burst_bytes(port) as f64;
    let overhead = (tuning.overhead_beats * beat_bytes(port)) as f64;
    payload / (payload + overhead)
}

/// Peak MFLOPs for a flop count, clock and initiation interval.
pub fn peak_mflops(flops_per_item: f64, freq_hz: f64, ii: u64) -> f64 {
    flops_per_item * freq_hz / ii.max(1) as f64 / 1.0e6
}

/// Peak MFLOPs of the graph's compute stage under perfect conditions.
pub fn theoretical_peak_mflops(graph: &PipelineGraph) -> f64 {
    let ii = graph.effective_ii_of(&graph.compute_stage);
    peak_mflops(graph.flops_per_item, graph.clock.freq_hz, ii)
}

/// Channel bandwidth in bytes per kernel cycle at the graph's clock.
pub fn channel_bytes_per_kernel_cycle(graph: &PipelineGraph) -> f64 {
    graph.memory.per_channel_bytes_per_cycle * MEMORY_REFERENCE_CLOCK_HZ / graph.clock.freq_hz
}

/// Cycles one burst of `payload` bytes occupies its channel, including the
/// per-burst overhead beats.
fn burst_transfer_cycles(graph: &PipelineGraph, port: &PortSpec, payload: u64) -> f64 {
    let charged = payload + graph.tuning.overhead_beats * beat_bytes(port);
    charged as f64 / channel_bytes_per_kernel_cycle(graph)
}

/// Kernel cycles per item a port needs in steady state: the maximum of its
/// data-path occupancy (one beat per cycle across every logical buffer — the
/// sharing serialization) and its latency exposure (bursts per item times
/// round trip, divided by the outstanding depth).
pub fn port_cycles_per_item(graph: &PipelineGraph, port: &PortSpec) -> f64 {
    let beat = beat_bytes(port) as f64;
    let burst = burst_bytes(port) as f64;
    let round_trip = graph.memory.access_latency_cycles as f64
        + burst_transfer_cycles(graph, port, burst_bytes(port));
    let mut datapath = 0.0;
    let mut latency = 0.0;
    for buffer in &port.logical_buffers {
        let bytes = buffer.bytes_per_item as f64;
        datapath += bytes / beat;
        latency += bytes / burst * round_trip / port.outstanding as f64;
    }
    datapath.max(latency)
}

/// Steady-state throughput of a validated feed-forward graph: the minimum
/// service rate over stages, ports and memory channels, with the limiting
/// entity's name.
pub fn analytic_throughput(graph: &PipelineGraph) -> Result<(f64, String)> {
    let violations = validate_graph(graph);
    if !violations.is_empty() {
        let joined: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidGraph(joined.join("; ")));
    }

    let freq = graph.clock.freq_hz;
    let mut best_rate = f64::INFINITY;
    let mut bottleneck = String::from("none");
    let mut consider = |rate: f64, entity: &str| {
        if rate < best_rate {
            best_rate = rate;
            bottleneck = entity.to_string();
        }
    };

    // The compute stage goes first so rate ties resolve to it.
    let mut stage_order: Vec<&StageSpec> = graph.stages.iter().collect();
    stage_order.sort_by_key(|s| s.name != graph.compute_stage);
    for stage in stage_order {
        let ii = effective_ii(stage, &graph.incoming_streams(&stage.name));
        consider(freq / ii as f64, &stage.name);
    }

    let mut channel_charged: HashMap<usize, f64> = HashMap::new();
    for port in &graph.ports {
        let cpi = port_cycles_per_item(graph, port);
        if cpi > 0.0 {
            consider(freq / cpi, &port.name);
        }
        let efficiency = burst_efficiency(port, &graph.tuning);
        let bytes_per_item: u64 = port.logical_buffers.iter().map(|b| b.bytes_per_item).sum();
        *channel_charged.entry(port.channel).or_insert(0.0) +=
            bytes_per_item as f64 / efficiency;
    }

    let channel_bytes_per_second =
        graph.memory.per_channel_bytes_per_cycle * MEMORY_REFERENCE_CLOCK_HZ;
    let mut channels: Vec<(usize, f64)> = channel_charged.into_iter().collect();
    channels.sort_unstable_by_key(|(c, _)| *c);
    for (channel, charged_per_item) in channels {
        if charged_per_item > 0.0 {
            consider(
                channel_bytes_per_second / charged_per_item,
                &format!("channel{channel}"),
            );
        }
    }

    Ok((best_rate, bottleneck))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stage(name: &str, base_ii: u64, latency: u64) -> StageSpec {
        StageSpec {
            name: name.into(),
            base_ii,
            pipeline_latency: latency,
            items: 0,
        }
    }

    fn stream(name: &str, producer: &str, consumer: &str, wpi: u32) -> StreamSpec {
        StreamSpec {
            name: name.into(),
            producer: producer.into(),
            consumer: consumer.into(),
            width_bits: 32,
            depth: 16,
            words_per_item: wpi,
        }
    }

    fn two_stage_graph(ii_a: u64, ii_b: u64) -> PipelineGraph {
        PipelineGraph {
            stages: vec![stage("feed", ii_a, 4), stage("work", ii_b, 4)],
            streams: vec![stream("link", "feed", "work", 1)],
            ports: vec![],
            memory: MemorySystemSpec::default(),
            clock: ClockSpec::default(),
            flops_per_item: 34.0,
            compute_stage: "work".into(),
            tuning: Tuning::default(),
        }
    }

    #[test]
    fn effective_ii_examples() {
        let s = stage("work", 1, 4);
        let four = stream("a", "feed", "work", 4);
        let three = stream("b", "feed", "work", 3);
        let one = stream("c", "feed", "work", 1);
        assert_eq!(effective_ii(&s, &[&four]), 4);
        assert_eq!(effective_ii(&s, &[&three]), 3);
        assert_eq!(effective_ii(&s, &[&one]), 1);
        assert_eq!(effective_ii(&s, &[&four, &three, &one]), 4);
        assert_eq!(effective_ii(&s, &[]), 1);
        let slow = stage("work", 6, 4);
        assert_eq!(effective_ii(&slow, &[&four]), 6);
    }

    #[test]
    fn effective_ii_monotone_in_chunking() {
        let s = stage("work", 1, 4);
        for wide in 1..8u32 {
            for narrow in wide..9u32 {
                let a = stream("s", "feed", "work", wide);
                let b = stream("s", "feed", "work", narrow);
                assert!(effective_ii(&s, &[&a]) <= effective_ii(&s, &[&b]));
            }
        }
    }

    fn port(width: u32, beats: u64) -> PortSpec {
        PortSpec {
            name: "port".into(),
            stage: "feed".into(),
            direction: PortDirection::Read,
            width_bits: width,
            max_burst_beats: beats,
            outstanding: 1,
            channel: 0,
            logical_buffers: vec![LogicalBuffer {
                name: "x".into(),
                bytes_per_item: 4,
            }],
        }
    }

    #[test]
    fn burst_bytes_examples() {
        assert_eq!(burst_bytes(&port(512, 16)), 1024);
        assert_eq!(burst_bytes(&port(32, 1)), 4);
        assert_eq!(burst_bytes(&port(512, 1)), 64);
    }

    #[test]
    fn burst_bytes_linear() {
        for &width in &VALID_PORT_WIDTHS {
            for beats in 1..=32u64 {
                assert_eq!(burst_bytes(&port(width, beats)), (width as u64 / 8) * beats);
                assert_eq!(
                    burst_bytes(&port(width, 2 * beats)),
                    2 * burst_bytes(&port(width, beats))
                );
            }
        }
    }

    #[test]
    fn peak_examples() {
        assert_eq!(peak_mflops(34.0, 300.0e6, 1), 10200.0);
        assert_eq!(peak_mflops(34.0, 450.0e6, 1), 15300.0);
        assert_eq!(peak_mflops(34.0, 300.0e6, 4), 2550.0);
        // Consistent with the rounded "around 10000" figure within 5%.
        assert!((peak_mflops(34.0, 300.0e6, 1) - 10000.0).abs() / 10000.0 < 0.05);
    }

    #[test]
    fn validate_well_formed() {
        assert!(validate_graph(&two_stage_graph(1, 2)).is_empty());
    }

    #[test]
    fn validate_unknown_consumer() {
        let mut graph = two_stage_graph(1, 1);
        graph.streams[0].consumer = "nowhere".into();
        let violations = validate_graph(&graph);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].entity, "link");
    }

    #[test]
    fn validate_cycle() {
        let mut graph = two_stage_graph(1, 1);
        graph.streams.push(stream("back", "work", "feed", 1));
        let violations = validate_graph(&graph);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("cycle"));
    }

    #[test]
    fn analytic_slow_stage_wins() {
        let graph = two_stage_graph(1, 2);
        let (rate, who) = analytic_throughput(&graph).unwrap();
        assert_eq!(rate, 150.0e6);
        assert_eq!(who, "work");
    }

    #[test]
    fn analytic_rejects_invalid() {
        let mut graph = two_stage_graph(1, 1);
        graph.streams[0].consumer = "nowhere".into();
        assert!(matches!(
            analytic_throughput(&graph),
            Err(Error::InvalidGraph(_))
        ));
    }

    fn bandwidth_bound_graph(channels: [usize; 2]) -> PipelineGraph {
        let mut graph = two_stage_graph(1, 1);
        for (idx, channel) in channels.iter().enumerate() {
            graph.ports.push(PortSpec {
                name: format!("port{idx}"),
                stage: "feed".into(),
                direction: PortDirection::Read,
                width_bits: 512,
                max_burst_beats: 16,
                outstanding: 64,
                channel: *channel,
                logical_buffers: vec![LogicalBuffer {
                    name: format!("buf{idx}"),
                    bytes_per_item: 4096,
                }],
            });
        }
        graph
    }

    #[test]
    fn analytic_split_channels_not_worse_than_shared() {
        let (shared, _) = analytic_throughput(&bandwidth_bound_graph([0, 0])).unwrap();
        let (split, _) = analytic_throughput(&bandwidth_bound_graph([0, 1])).unwrap();
        assert!(split >= shared);
        assert!(split > shared * 1.5, "demand here is channel-bound");
    }

    #[test]
    fn analytic_argmax_stability_under_frequency() {
        // Stage-bound graph: throughput scales with the clock.
        let mut graph = two_stage_graph(1, 2);
        let (base, _) = analytic_throughput(&graph).unwrap();
        graph.clock.freq_hz *= 2.0;
        let (doubled, _) = analytic_throughput(&graph).unwrap();
        assert!((doubled / base - 2.0).abs() < 1e-12);

        // Channel-bound graph: throughput ignores the clock.
        let mut graph = bandwidth_bound_graph([0, 0]);
        let (base, who) = analytic_throughput(&graph).unwrap();
        assert!(who.starts_with("channel"));
        graph.clock.freq_hz *= 2.0;
        let (same, _) = analytic_throughput(&graph).unwrap();
        assert!((same / base - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_never_exceeds_clock_over_min_ii() {
        let graph = two_stage_graph(2, 3);
        let (rate, _) = analytic_throughput(&graph).unwrap();
        assert!(rate <= graph.clock.freq_hz / 2.0 + 1e-9);
    }

    #[test]
    fn analytic_never_exceeds_channel_bandwidth_per_item() {
        let graph = bandwidth_bound_graph([0, 0]);
        let (rate, _) = analytic_throughput(&graph).unwrap();
        let channel_bytes_per_second =
            graph.memory.per_channel_bytes_per_cycle * MEMORY_REFERENCE_CLOCK_HZ;
        let bytes_per_item: u64 = graph
            .ports
            .iter()
            .flat_map(|p| p.logical_buffers.iter().map(|b| b.bytes_per_item))
            .sum();
        assert!(rate <= channel_bytes_per_second / bytes_per_item as f64 + 1e-9);
    }

    #[test]
    fn graph_round_trips_through_json() {
        let graph = bandwidth_bound_graph([0, 1]);
        let text = serde_json::to_string_pretty(&graph).unwrap();
        let back: PipelineGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(back, graph);
    }
}
