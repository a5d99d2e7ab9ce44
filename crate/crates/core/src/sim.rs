//! Deterministic cycle-stepped simulation of a [`PipelineGraph`] with
//! backpressure, producing profiler-style counters.
//!
//! Semantics per cycle, in a fixed order:
//!
//! 1. memory completions land at the ports that issued them;
//! 2. each channel finishes its active transfer (if due) and starts the next
//!    one, round-robin across the ports mapped to it;
//! 3. stages run in topological order (producer before consumer): drain the
//!    output latch (at most one word per stream per cycle), retire the
//!    pipeline head, gather input words (one per incoming stream per cycle)
//!    and start a new item when the initiation interval allows;
//! 4. ports issue new bursts, bounded by their outstanding depth, staging
//!    capacity and one-beat-per-cycle data path.
//!
//! Cycles in which nothing can happen are skipped in one jump to the next
//! scheduled event; the skip is exact, so counters and totals are identical
//! to stepping every cycle. If no progress is possible and no event is
//! pending, the run reports a deadlock naming the blocked entities.

use crate::error::{Error, Result};
use crate::model::{
    beat_bytes, burst_bytes, channel_bytes_per_kernel_cycle, validate_graph, PipelineGraph,
    PortDirection,
};
use crate::profile::{PortCounters, SimProfile, StageCounters, StreamCounters};
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Idle,
    Active,
    WaitInput,
    WaitOutput,
}

struct StreamRt {
    depth: usize,
    word_bytes: u64,
    producer: usize,
    consumer: usize,
    occupancy: usize,
    pushed_this_cycle: bool,
    words: u64,
    bytes: u64,
    empty_stall: u64,
    full_stall: u64,
}

/// Static wiring of one stage, separated from its mutable state so the hot
/// loop can borrow both sides at once.
struct StageWiring {
    /// (stream index, words per item) for streams this stage consumes.
    incoming: Vec<(usize, u32)>,
    /// Same for streams this stage produces.
    outgoing: Vec<(usize, u32)>,
    read_ports: Vec<usize>,
    write_ports: Vec<usize>,
}

struct StageRt {
    name: String,
    base_ii: u64,
    latency: u64,
    target: u64,
    is_compute: bool,

    started: u64,
    retired: u64,
    gather_active: bool,
    gather_owed: Vec<u32>,
    ports_taken: bool,
    next_start: u64,
    steady_debt: f64,
    pipe: VecDeque<u64>,
    latch: Vec<u32>,
    latch_active: bool,

    active: u64,
    empty: u64,
    full: u64,

    // Per-cycle evaluation, used for stall attribution and event skipping.
    status: Status,
    blocked_in: Vec<usize>,
    blocked_out: Vec<usize>,
    waiting_port: bool,
    deposit_blocked: bool,
}

struct BufferRt {
    bytes_per_item: u64,
    total_bytes: u64,
    issued: u64,
    landed: u64,
    consumed: u64,
    /// Write side: bytes deposited by the stage, not yet issued.
    pending: u64,
    staging_cap: u64,
}

struct PortRt {
    name: String,
    stage: usize,
    is_read: bool,
    beat: u64,
    burst: u64,
    outstanding: u64,
    channel: usize,
    buffers: Vec<BufferRt>,
    inflight: u64,
    issue_free_at: u64,
    rr: usize,
    busy: u64,
    bytes_moved: u64,
}

#[derive(Debug, Clone, Copy)]
struct BurstReq {
    port: usize,
    buffer: usize,
    payload: u64,
}

struct ChannelRt {
    ports: Vec<usize>,
    queues: Vec<VecDeque<BurstReq>>,
    rr: usize,
    active: Option<(BurstReq, u64)>,
}

struct Engine<'g> {
    graph: &'g PipelineGraph,
    topo: Vec<usize>,
    compute_idx: usize,
    freq: f64,
    channel_rate: f64,
    access_latency: u64,
    overhead_beats: u64,
    steady_cycles_per_item: f64,

    cycle: u64,
    stages: Vec<StageRt>,
    wiring: Vec<StageWiring>,
    streams: Vec<StreamRt>,
    ports: Vec<PortRt>,
    channels: Vec<ChannelRt>,
    landings: BTreeMap<u64, Vec<BurstReq>>,
    /// Outstanding one-off transaction (the inter-iteration residual write).
    pending_transaction: bool,

    memory_stall_cycles: u64,
    progressed: bool,
}

/// Drains the stage's per-stream output debts: at most one word per stream
/// per cycle. Each outgoing stream drains independently, so a full sibling
/// stream does not hold back the others.
fn drain_output(
    stage: &mut StageRt,
    wiring: &StageWiring,
    streams: &mut [StreamRt],
    progressed: &mut bool,
) {
    if !stage.latch_active {
        return;
    }
    let mut remaining = false;
    for (oi, &(stream_idx, _)) in wiring.outgoing.iter().enumerate() {
        if stage.latch[oi] == 0 {
            continue;
        }
        let stream = &mut streams[stream_idx];
        if stream.occupancy < stream.depth && !stream.pushed_this_cycle {
            stream.occupancy += 1;
            stream.pushed_this_cycle = true;
            stream.words += 1;
            stream.bytes += stream.word_bytes;
            stage.latch[oi] -= 1;
            *progressed = true;
            stage.status = Status::Active;
        } else if stream.occupancy >= stream.depth && !stage.blocked_out.contains(&stream_idx) {
            stream.full_stall += 1;
            stage.blocked_out.push(stream_idx);
        }
        if stage.latch[oi] > 0 {
            remaining = true;
        }
    }
    stage.latch_active = remaining;
}

/// Writes one item's bytes into the write-port staging buffers, if every
/// buffer has room.
fn try_deposit(wiring: &StageWiring, ports: &mut [PortRt]) -> bool {
    for &pi in &wiring.write_ports {
        for buffer in &ports[pi].buffers {
            if buffer.pending + buffer.bytes_per_item > buffer.staging_cap {
                return false;
            }
        }
    }
    for &pi in &wiring.write_ports {
        for buffer in &mut ports[pi].buffers {
            buffer.pending += buffer.bytes_per_item;
        }
    }
    true
}

/// Retires the pipeline head once its latency has elapsed: straight to done,
/// through the write ports, or into the per-stream output debts (draining
/// them in the same cycle where possible). A stream accepts a new item's
/// debt while at most one previous item's words are still unsent, which
/// gives every output a one-item skid buffer.
fn try_retire(
    cycle: u64,
    stage: &mut StageRt,
    wiring: &StageWiring,
    streams: &mut [StreamRt],
    ports: &mut [PortRt],
    progressed: &mut bool,
) {
    let Some(&head) = stage.pipe.front() else {
        return;
    };
    if head > cycle {
        return;
    }
    if wiring.outgoing.is_empty() {
        if !wiring.write_ports.is_empty() && !try_deposit(wiring, ports) {
            stage.deposit_blocked = true;
            return;
        }
        stage.pipe.pop_front();
        stage.retired += 1;
        *progressed = true;
        stage.status = Status::Active;
    } else {
        for (oi, &(_, wpi)) in wiring.outgoing.iter().enumerate() {
            if stage.latch[oi] > wpi {
                return; // skid full: previous item's words still queued
            }
        }
        stage.pipe.pop_front();
        for (oi, &(_, wpi)) in wiring.outgoing.iter().enumerate() {
            stage.latch[oi] += wpi;
        }
        stage.latch_active = true;
        stage.retired += 1;
        *progressed = true;
        stage.status = Status::Active;
        drain_output(stage, wiring, streams, progressed);
    }
}

struct GatherOutcome {
    started: bool,
}

/// Pops one word per owing incoming stream, claims port bytes, and starts a
/// new item when everything for it has arrived and the II allows.
#[allow(clippy::too_many_arguments)]
fn try_gather_start(
    cycle: u64,
    stage: &mut StageRt,
    wiring: &StageWiring,
    streams: &mut [StreamRt],
    ports: &mut [PortRt],
    steady_cycles_per_item: f64,
    progressed: &mut bool,
) -> GatherOutcome {
    let none = GatherOutcome { started: false };
    if stage.started >= stage.target {
        return none;
    }
    if !stage.gather_active {
        stage.gather_active = true;
        stage.ports_taken = false;
        stage.gather_owed.clear();
        stage
            .gather_owed
            .extend(wiring.incoming.iter().map(|&(_, w)| w));
    }

    for (ii, &(stream_idx, _)) in wiring.incoming.iter().enumerate() {
        if stage.gather_owed[ii] == 0 {
            continue;
        }
        let stream = &mut streams[stream_idx];
        if stream.occupancy > 0 {
            stream.occupancy -= 1;
            stage.gather_owed[ii] -= 1;
            *progressed = true;
            stage.status = Status::Active;
        } else {
            stream.empty_stall += 1;
            stage.blocked_in.push(stream_idx);
        }
    }
    if !stage.gather_owed.iter().all(|&w| w == 0) {
        return none;
    }

    if !stage.ports_taken && !wiring.read_ports.is_empty() {
        let available = wiring.read_ports.iter().all(|&pi| {
            ports[pi]
                .buffers
                .iter()
                .all(|b| b.landed - b.consumed >= b.bytes_per_item)
        });
        if !available {
            stage.waiting_port = true;
            return none;
        }
        for &pi in &wiring.read_ports {
            for buffer in &mut ports[pi].buffers {
                buffer.consumed += buffer.bytes_per_item;
            }
        }
        stage.ports_taken = true;
        *progressed = true;
        stage.status = Status::Active;
    }

    if cycle < stage.next_start || stage.pipe.len() >= stage.latency.max(1) as usize {
        return none;
    }

    stage.pipe.push_back(cycle + stage.latency - 1);
    stage.started += 1;
    let stride = if stage.is_compute && steady_cycles_per_item != 1.0 {
        stage.steady_debt += stage.base_ii as f64 * steady_cycles_per_item;
        let take = stage.steady_debt.floor().max(1.0);
        stage.steady_debt -= take;
        take as u64
    } else {
        stage.base_ii
    };
    stage.next_start = cycle + stride;
    stage.gather_active = false;
    stage.ports_taken = false;
    *progressed = true;
    stage.status = Status::Active;
    GatherOutcome { started: true }
}

impl<'g> Engine<'g> {
    fn new(graph: &'g PipelineGraph, targets: &[u64], seed: u64) -> Result<Self> {
        let violations = validate_graph(graph);
        if !violations.is_empty() {
            let joined: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidGraph(joined.join("; ")));
        }
        let topo = graph
            .topo_order()
            .map_err(|stuck| Error::InvalidGraph(format!("cycle: {}", stuck.join(", "))))?;

        let stage_index = |name: &str| graph.stages.iter().position(|s| s.name == name).unwrap();
        let compute_idx = stage_index(&graph.compute_stage);

        let streams: Vec<StreamRt> = graph
            .streams
            .iter()
            .map(|s| StreamRt {
                depth: s.depth,
                word_bytes: (s.width_bits as u64).div_ceil(8),
                producer: stage_index(&s.producer),
                consumer: stage_index(&s.consumer),
                occupancy: 0,
                pushed_this_cycle: false,
                words: 0,
                bytes: 0,
                empty_stall: 0,
                full_stall: 0,
            })
            .collect();

        let mix =
            |i: usize| (seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(i as u32 % 63)) as usize;

        let ports: Vec<PortRt> = graph
            .ports
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                let stage = stage_index(&p.stage);
                let target = targets[stage];
                let beat = beat_bytes(p);
                let burst = burst_bytes(p);
                let buffers = p
                    .logical_buffers
                    .iter()
                    .map(|b| BufferRt {
                        bytes_per_item: b.bytes_per_item,
                        total_bytes: b.bytes_per_item * target,
                        issued: 0,
                        landed: 0,
                        consumed: 0,
                        pending: 0,
                        // One item's worth beyond the burst pipeline: keeps
                        // the port issueable whenever its stage is starved,
                        // even when bursts straddle item boundaries.
                        staging_cap: burst * p.outstanding + b.bytes_per_item,
                    })
                    .collect::<Vec<_>>();
                let rr = if buffers.is_empty() {
                    0
                } else {
                    mix(pi) % buffers.len()
                };
                PortRt {
                    name: p.name.clone(),
                    stage,
                    is_read: p.direction == PortDirection::Read,
                    beat,
                    burst,
                    outstanding: p.outstanding,
                    channel: p.channel,
                    buffers,
                    inflight: 0,
                    issue_free_at: 0,
                    rr,
                    busy: 0,
                    bytes_moved: 0,
                }
            })
            .collect();

        let mut channels: Vec<ChannelRt> = (0..graph.memory.channel_count)
            .map(|_| ChannelRt {
                ports: Vec::new(),
                queues: Vec::new(),
                rr: 0,
                active: None,
            })
            .collect();
        for (pi, p) in ports.iter().enumerate() {
            channels[p.channel].ports.push(pi);
            channels[p.channel].queues.push(VecDeque::new());
        }
        for (ci, channel) in channels.iter_mut().enumerate() {
            if !channel.ports.is_empty() {
                channel.rr = mix(ci + 101) % channel.ports.len();
            }
        }

        let mut stages = Vec::with_capacity(graph.stages.len());
        let mut wiring = Vec::with_capacity(graph.stages.len());
        for (si, s) in graph.stages.iter().enumerate() {
            let incoming: Vec<(usize, u32)> = streams
                .iter()
                .enumerate()
                .filter(|(_, st)| st.consumer == si)
                .map(|(idx, _)| (idx, graph.streams[idx].words_per_item))
                .collect();
            let outgoing: Vec<(usize, u32)> = streams
                .iter()
                .enumerate()
                .filter(|(_, st)| st.producer == si)
                .map(|(idx, _)| (idx, graph.streams[idx].words_per_item))
                .collect();
            let read_ports: Vec<usize> = ports
                .iter()
                .enumerate()
                .filter(|(_, p)| p.stage == si && p.is_read)
                .map(|(idx, _)| idx)
                .collect();
            let write_ports: Vec<usize> = ports
                .iter()
                .enumerate()
                .filter(|(_, p)| p.stage == si && !p.is_read)
                .map(|(idx, _)| idx)
                .collect();
            stages.push(StageRt {
                name: s.name.clone(),
                base_ii: s.base_ii,
                latency: s.pipeline_latency,
                target: targets[si],
                is_compute: si == compute_idx,
                started: 0,
                retired: 0,
                gather_active: false,
                gather_owed: Vec::with_capacity(incoming.len()),
                ports_taken: false,
                next_start: 0,
                steady_debt: 0.0,
                pipe: VecDeque::new(),
                latch: vec![0; outgoing.len()],
                latch_active: false,
                active: 0,
                empty: 0,
                full: 0,
                status: Status::Idle,
                blocked_in: Vec::new(),
                blocked_out: Vec::new(),
                waiting_port: false,
                deposit_blocked: false,
            });
            wiring.push(StageWiring {
                incoming,
                outgoing,
                read_ports,
                write_ports,
            });
        }

        Ok(Engine {
            graph,
            topo,
            compute_idx,
            freq: graph.clock.freq_hz,
            channel_rate: channel_bytes_per_kernel_cycle(graph),
            access_latency: graph.memory.access_latency_cycles,
            overhead_beats: graph.tuning.overhead_beats,
            steady_cycles_per_item: graph.tuning.steady_cycles_per_item,
            cycle: 0,
            stages,
            wiring,
            streams,
            ports,
            channels,
            landings: BTreeMap::new(),
            pending_transaction: false,
            memory_stall_cycles: 0,
            progressed: false,
        })
    }

    fn apply_landings(&mut self) {
        if let Some(entry) = self.landings.remove(&self.cycle) {
            for req in entry {
                let port = &mut self.ports[req.port];
                port.inflight -= 1;
                port.bytes_moved += req.payload;
                if port.is_read {
                    port.buffers[req.buffer].landed += req.payload;
                }
                self.progressed = true;
            }
        }
    }

    fn step_channels(&mut self) {
        for ci in 0..self.channels.len() {
            if let Some((req, done_at)) = self.channels[ci].active {
                if done_at <= self.cycle {
                    let land_at = self.cycle + self.access_latency;
                    self.landings.entry(land_at).or_default().push(req);
                    self.channels[ci].active = None;
                    self.progressed = true;
                }
            }
            if self.channels[ci].active.is_none() {
                let slots = self.channels[ci].ports.len();
                for step in 0..slots {
                    let slot = (self.channels[ci].rr + step) % slots;
                    if let Some(req) = self.channels[ci].queues[slot].pop_front() {
                        let charged =
                            (req.payload + self.overhead_beats * self.ports[req.port].beat) as f64;
                        let duration = (charged / self.channel_rate).ceil().max(1.0) as u64;
                        self.channels[ci].active = Some((req, self.cycle + duration));
                        self.channels[ci].rr = (slot + 1) % slots;
                        self.progressed = true;
                        break;
                    }
                }
            }
        }
    }

    fn step_stage(&mut self, si: usize) {
        let stage = &mut self.stages[si];
        let wiring = &self.wiring[si];
        stage.status = Status::Idle;
        stage.blocked_in.clear();
        stage.blocked_out.clear();
        stage.waiting_port = false;
        stage.deposit_blocked = false;

        drain_output(stage, wiring, &mut self.streams, &mut self.progressed);
        try_retire(
            self.cycle,
            stage,
            wiring,
            &mut self.streams,
            &mut self.ports,
            &mut self.progressed,
        );
        let outcome = try_gather_start(
            self.cycle,
            stage,
            wiring,
            &mut self.streams,
            &mut self.ports,
            self.steady_cycles_per_item,
            &mut self.progressed,
        );
        if outcome.started {
            // A latency-1 item completes in the cycle it starts.
            try_retire(
                self.cycle,
                stage,
                wiring,
                &mut self.streams,
                &mut self.ports,
                &mut self.progressed,
            );
        }

        if stage.status != Status::Active {
            if stage.deposit_blocked || !stage.blocked_out.is_empty() {
                stage.status = Status::WaitOutput;
            } else if stage.waiting_port || !stage.blocked_in.is_empty() {
                stage.status = Status::WaitInput;
            } else if !stage.pipe.is_empty() || stage.latch_active {
                stage.status = Status::Active;
            }
        }
        match stage.status {
            Status::Active => stage.active += 1,
            Status::WaitInput => stage.empty += 1,
            Status::WaitOutput => stage.full += 1,
            Status::Idle => {}
        }
    }

    fn step_ports(&mut self) {
        for pi in 0..self.ports.len() {
            self.try_issue(pi);
            if self.ports[pi].inflight > 0 {
                self.ports[pi].busy += 1;
            }
        }
    }

    fn try_issue(&mut self, pi: usize) {
        let stage_done = {
            let stage = &self.stages[self.ports[pi].stage];
            stage.retired >= stage.target
        };
        let port = &mut self.ports[pi];
        if self.cycle < port.issue_free_at || port.inflight >= port.outstanding {
            return;
        }
        let n = port.buffers.len();
        for step in 0..n {
            let bi = (port.rr + step) % n;
            let payload = {
                let buffer = &port.buffers[bi];
                if port.is_read {
                    if buffer.issued >= buffer.total_bytes {
                        continue;
                    }
                    let payload = port.burst.min(buffer.total_bytes - buffer.issued);
                    if buffer.issued - buffer.consumed + payload > buffer.staging_cap {
                        continue;
                    }
                    payload
                } else if buffer.pending >= port.burst {
                    port.burst
                } else if stage_done && buffer.pending > 0 {
                    buffer.pending
                } else {
                    continue;
                }
            };
            if port.is_read {
                port.buffers[bi].issued += payload;
            } else {
                port.buffers[bi].pending -= payload;
            }
            port.inflight += 1;
            port.issue_free_at = self.cycle + payload.div_ceil(port.beat).max(1);
            port.rr = (bi + 1) % n;
            let req = BurstReq {
                port: pi,
                buffer: bi,
                payload,
            };
            let channel = &mut self.channels[port.channel];
            let slot = channel.ports.iter().position(|&p| p == pi).unwrap();
            channel.queues[slot].push_back(req);
            self.progressed = true;
            return;
        }
    }

    /// True when the compute stage's stall this cycle chains to a memory port.
    fn compute_blocked_on_memory(&self) -> bool {
        let mut visited = Vec::with_capacity(self.stages.len());
        match self.stages[self.compute_idx].status {
            Status::WaitInput => self.upstream_is_memory(self.compute_idx, &mut visited),
            Status::WaitOutput => self.downstream_is_memory(self.compute_idx, &mut visited),
            _ => false,
        }
    }

    fn upstream_is_memory(&self, si: usize, visited: &mut Vec<usize>) -> bool {
        if visited.contains(&si) {
            return false;
        }
        visited.push(si);
        let stage = &self.stages[si];
        if stage.waiting_port {
            return true;
        }
        stage.blocked_in.iter().any(|&stream_idx| {
            let producer = self.streams[stream_idx].producer;
            self.stages[producer].status == Status::WaitInput
                && self.upstream_is_memory(producer, visited)
        })
    }

    fn downstream_is_memory(&self, si: usize, visited: &mut Vec<usize>) -> bool {
        if visited.contains(&si) {
            return false;
        }
        visited.push(si);
        let stage = &self.stages[si];
        if stage.deposit_blocked {
            return true;
        }
        stage.blocked_out.iter().any(|&stream_idx| {
            let consumer = self.streams[stream_idx].consumer;
            let downstream = &self.stages[consumer];
            downstream.deposit_blocked
                || (downstream.status == Status::WaitOutput
                    && self.downstream_is_memory(consumer, visited))
        })
    }

    fn finished(&self) -> bool {
        self.stages
            .iter()
            .all(|s| s.retired >= s.target && !s.latch_active && s.pipe.is_empty())
            && self
                .ports
                .iter()
                .all(|p| p.inflight == 0 && p.buffers.iter().all(|b| b.pending == 0))
            && !self.pending_transaction
    }

    /// Earliest cycle strictly after the current one at which state can
    /// change. `None` means no event is pending (deadlock when unfinished).
    fn next_event(&self) -> Option<u64> {
        let mut best: Option<u64> = None;
        let mut consider = |t: u64| {
            if t > self.cycle {
                best = Some(best.map_or(t, |b| b.min(t)));
            }
        };
        for stage in &self.stages {
            if let Some(&head) = stage.pipe.front() {
                // A head already due but blocked will be retried by whatever
                // unblocks it; only future completions are events.
                if head > self.cycle {
                    consider(head);
                }
            }
            if stage.started < stage.target {
                consider(stage.next_start);
            }
        }
        for port in &self.ports {
            consider(port.issue_free_at);
        }
        if let Some((&t, _)) = self.landings.iter().next() {
            consider(t.max(self.cycle + 1));
        }
        for channel in &self.channels {
            if let Some((_, done_at)) = channel.active {
                consider(done_at.max(self.cycle + 1));
            }
        }
        best
    }

    /// Accrue the current cycle's stall picture over `extra` skipped cycles.
    fn accrue(&mut self, extra: u64) {
        for si in 0..self.stages.len() {
            match self.stages[si].status {
                Status::Active => self.stages[si].active += extra,
                Status::WaitInput => self.stages[si].empty += extra,
                Status::WaitOutput => self.stages[si].full += extra,
                Status::Idle => {}
            }
            for bi in 0..self.stages[si].blocked_in.len() {
                let s = self.stages[si].blocked_in[bi];
                self.streams[s].empty_stall += extra;
            }
            for bo in 0..self.stages[si].blocked_out.len() {
                let s = self.stages[si].blocked_out[bo];
                self.streams[s].full_stall += extra;
            }
        }
        for port in &mut self.ports {
            if port.inflight > 0 {
                port.busy += extra;
            }
        }
    }

    /// Executes one cycle (or jumps over a provably idle span).
    fn step_cycle(&mut self) -> Result<()> {
        self.progressed = false;
        for stream in &mut self.streams {
            stream.pushed_this_cycle = false;
        }
        self.apply_landings();
        self.step_channels();
        for t in 0..self.topo.len() {
            let si = self.topo[t];
            self.step_stage(si);
        }
        self.step_ports();

        let memory_blocked = self.compute_blocked_on_memory();
        if memory_blocked {
            self.memory_stall_cycles += 1;
        }

        if self.progressed {
            self.cycle += 1;
            return Ok(());
        }
        match self.next_event() {
            Some(t) => {
                let extra = t - self.cycle - 1;
                if extra > 0 {
                    self.accrue(extra);
                    if memory_blocked {
                        self.memory_stall_cycles += extra;
                    }
                }
                self.cycle = t;
                Ok(())
            }
            None => Err(Error::Deadlock {
                cycle: self.cycle,
                blocked: self.describe_blocked(),
            }),
        }
    }

    fn describe_blocked(&self) -> String {
        let mut parts = Vec::new();
        for stage in &self.stages {
            if stage.retired < stage.target {
                let reason = match stage.status {
                    Status::WaitInput => "waiting on input",
                    Status::WaitOutput => "waiting on output",
                    _ => "incomplete",
                };
                parts.push(format!(
                    "stage {} ({}, {}/{} items)",
                    stage.name, reason, stage.retired, stage.target
                ));
            }
        }
        for (idx, stream) in self.streams.iter().enumerate() {
            if stream.occupancy > 0 {
                parts.push(format!(
                    "stream {} holds {} words",
                    self.graph.streams[idx].name, stream.occupancy
                ));
            }
        }
        if parts.is_empty() {
            parts.push("none".into());
        }
        parts.join("; ")
    }

    fn run_invocation(&mut self) -> Result<()> {
        while !self.finished() {
            self.step_cycle()?;
        }
        Ok(())
    }

    /// One 4-byte transaction on the first write port (the per-iteration
    /// residual write-back).
    fn run_transaction(&mut self) -> Result<()> {
        let Some(pi) = self.ports.iter().position(|p| !p.is_read) else {
            return Ok(());
        };
        self.ports[pi].inflight += 1;
        let req = BurstReq {
            port: pi,
            buffer: 0,
            payload: 4,
        };
        let channel = &mut self.channels[self.ports[pi].channel];
        let slot = channel.ports.iter().position(|&p| p == pi).unwrap();
        channel.queues[slot].push_back(req);
        self.pending_transaction = true;
        while self.ports[pi].inflight > 0 {
            self.step_cycle()?;
        }
        self.pending_transaction = false;
        Ok(())
    }

    fn reset_for_next_iteration(&mut self) {
        for stage in &mut self.stages {
            stage.started = 0;
            stage.retired = 0;
            stage.gather_active = false;
            stage.ports_taken = false;
            stage.next_start = self.cycle;
            stage.steady_debt = 0.0;
        }
        for port in &mut self.ports {
            for buffer in &mut port.buffers {
                buffer.issued = 0;
                buffer.landed = 0;
                buffer.consumed = 0;
            }
            port.issue_free_at = port.issue_free_at.max(self.cycle);
        }
    }

    fn into_profile(self, items_processed: u64) -> SimProfile {
        let total = self.cycle;
        let seconds = if total > 0 {
            total as f64 / self.freq
        } else {
            0.0
        };
        let achieved_mflops = if seconds > 0.0 {
            self.graph.flops_per_item * items_processed as f64 / seconds / 1.0e6
        } else {
            0.0
        };
        let stages = self
            .stages
            .iter()
            .map(|s| {
                (
                    s.name.clone(),
                    StageCounters {
                        active_cycles: s.active,
                        stall_empty_cycles: s.empty,
                        stall_full_cycles: s.full,
                        items_completed: s.retired,
                    },
                )
            })
            .collect();
        let streams = self
            .streams
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                let stall_rate = if total > 0 {
                    (s.empty_stall + s.full_stall) as f64 / total as f64
                } else {
                    0.0
                };
                (
                    self.graph.streams[idx].name.clone(),
                    StreamCounters {
                        words_transferred: s.words,
                        bytes_moved: s.bytes,
                        empty_stall_cycles: s.empty_stall,
                        full_stall_cycles: s.full_stall,
                        stall_rate,
                        bandwidth_bps: if seconds > 0.0 {
                            s.bytes as f64 / seconds
                        } else {
                            0.0
                        },
                    },
                )
            })
            .collect();
        let ports = self
            .ports
            .iter()
            .map(|p| {
                let utilization = if total > 0 {
                    p.bytes_moved as f64 / (total as f64 * p.beat as f64)
                } else {
                    0.0
                };
                (
                    p.name.clone(),
                    PortCounters {
                        busy_cycles: p.busy,
                        bytes_moved: p.bytes_moved,
                        achieved_bandwidth_bps: if seconds > 0.0 {
                            p.bytes_moved as f64 / seconds
                        } else {
                            0.0
                        },
                        utilization,
                    },
                )
            })
            .collect();
        SimProfile {
            total_cycles: total,
            items_processed,
            achieved_mflops,
            memory_stall_fraction: if total > 0 {
                self.memory_stall_cycles as f64 / total as f64
            } else {
                0.0
            },
            stages,
            streams,
            ports,
        }
    }
}

/// Simulates one kernel invocation with every stage processing `n_items`
/// work items. Bit-deterministic given `(graph, n_items, seed)`.
pub fn simulate(graph: &PipelineGraph, n_items: u64, seed: u64) -> Result<SimProfile> {
    let targets = vec![n_items; graph.stages.len()];
    let mut engine = Engine::new(graph, &targets, seed)?;
    if n_items > 0 {
        engine.run_invocation()?;
    }
    Ok(engine.into_profile(n_items))
}

/// Simulates one invocation using each stage's own `items` count. Unequal
/// counts can starve a consumer, which is reported as a deadlock.
pub fn simulate_stage_items(graph: &PipelineGraph, seed: u64) -> Result<SimProfile> {
    let targets: Vec<u64> = graph.stages.iter().map(|s| s.items).collect();
    let items = targets.iter().copied().max().unwrap_or(0);
    let mut engine = Engine::new(graph, &targets, seed)?;
    if items > 0 {
        engine.run_invocation()?;
    }
    Ok(engine.into_profile(items))
}

/// Runs `iterations` back-to-back invocations with a full pipeline drain and
/// one 4-byte residual write transaction between consecutive iterations.
/// A single iteration is exactly [`simulate`].
pub fn simulate_iterations(
    graph: &PipelineGraph,
    items_per_iteration: u64,
    iterations: u64,
    seed: u64,
) -> Result<SimProfile> {
    let targets = vec![items_per_iteration; graph.stages.len()];
    let mut engine = Engine::new(graph, &targets, seed)?;
    if items_per_iteration > 0 {
        for iteration in 0..iterations {
            if iteration > 0 {
                engine.run_transaction()?;
                engine.reset_for_next_iteration();
            }
            engine.run_invocation()?;
        }
    }
    Ok(engine.into_profile(items_per_iteration * iterations))
}
