//! Rule engine over a (graph, profile) pair that mirrors a profiler guidance
//! pane: each rule flags a configuration or runtime symptom with a severity.
//! Thresholds are data, not code; the defaults come from the reported
//! healthy/problematic examples this reconstruction is based on.

use crate::error::{Error, Result};
use crate::model::{burst_bytes, effective_ii, PipelineGraph};
use crate::profile::SimProfile;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Healthy,
    Advice,
    Warning,
    Critical,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Severity::Healthy => "HEALTHY",
            Severity::Advice => "ADVICE",
            Severity::Warning => "WARNING",
            Severity::Critical => "CRITICAL",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    #[serde(rename = "R1")]
    SharedPort,
    #[serde(rename = "R2")]
    SingleChannel,
    #[serde(rename = "R3")]
    SmallBurst,
    #[serde(rename = "R4")]
    NarrowPort,
    #[serde(rename = "R5")]
    LowBandwidthUtilization,
    #[serde(rename = "R6")]
    StreamStall,
    #[serde(rename = "R7")]
    IiInflation,
    #[serde(rename = "R8")]
    MemoryStall,
}

impl RuleId {
    pub fn code(self) -> &'static str {
        match self {
            RuleId::SharedPort => "R1",
            RuleId::SingleChannel => "R2",
            RuleId::SmallBurst => "R3",
            RuleId::NarrowPort => "R4",
            RuleId::LowBandwidthUtilization => "R5",
            RuleId::StreamStall => "R6",
            RuleId::IiInflation => "R7",
            RuleId::MemoryStall => "R8",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: RuleId,
    pub severity: Severity,
    pub entity: String,
    pub message: String,
    pub metric: Option<f64>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.severity, self.rule_id, self.entity, self.message
        )?;
        if let Some(metric) = self.metric {
            write!(f, " [{metric}]")?;
        }
        Ok(())
    }
}

/// Tunable rule thresholds; defaults follow the reported healthy and
/// problematic values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceThresholds {
    /// Bursts below this are an advice finding (healthy example: 1.024 KB).
    pub small_burst_advice_bytes: u64,
    /// Bursts below this are a warning (problematic example: 0.004 KB).
    pub small_burst_warning_bytes: u64,
    /// Ports narrower than this earn width advice.
    pub narrow_port_bits: u32,
    pub low_utilization_advice: f64,
    pub low_utilization_critical: f64,
    pub stream_stall_warning: f64,
    pub memory_stall_critical: f64,
}

impl Default for GuidanceThresholds {
    fn default() -> Self {
        GuidanceThresholds {
            small_burst_advice_bytes: 1024,
            small_burst_warning_bytes: 64,
            narrow_port_bits: 512,
            low_utilization_advice: 0.5,
            low_utilization_critical: 0.01,
            stream_stall_warning: 0.19,
            memory_stall_critical: 0.5,
        }
    }
}

fn check_profile_matches(graph: &PipelineGraph, profile: &SimProfile) -> Result<()> {
    let graph_stages: BTreeSet<&str> = graph.stages.iter().map(|s| s.name.as_str()).collect();
    let profile_stages: BTreeSet<&str> = profile.stages.iter().map(|(n, _)| n.as_str()).collect();
    if graph_stages != profile_stages {
        return Err(Error::ProfileMismatch(format!(
            "stages differ (graph {:?} vs profile {:?})",
            graph_stages, profile_stages
        )));
    }
    let graph_streams: BTreeSet<&str> = graph.streams.iter().map(|s| s.name.as_str()).collect();
    let profile_streams: BTreeSet<&str> =
        profile.streams.iter().map(|(n, _)| n.as_str()).collect();
    if graph_streams != profile_streams {
        return Err(Error::ProfileMismatch("streams differ".into()));
    }
    let graph_ports: BTreeSet<&str> = graph.ports.iter().map(|p| p.name.as_str()).collect();
    let profile_ports: BTreeSet<&str> = profile.ports.iter().map(|(n, _)| n.as_str()).collect();
    if graph_ports != profile_ports {
        return Err(Error::ProfileMismatch("ports differ".into()));
    }
    Ok(())
}

/// Runs every rule and returns findings ordered by severity (most severe
/// first), then entity, then rule id. Deterministic for identical inputs.
pub fn run_rules(
    graph: &PipelineGraph,
    profile: &SimProfile,
    thresholds: &GuidanceThresholds,
) -> Result<Vec<Finding>> {
    check_profile_matches(graph, profile)?;
    let mut findings = Vec::new();

    // R1 shared-port: several logical buffers serialize on one issue slot.
    for port in &graph.ports {
        if port.logical_buffers.len() > 1 {
            findings.push(Finding {
                rule_id: RuleId::SharedPort,
                severity: Severity::Warning,
                entity: port.name.clone(),
                message: format!(
                    "{} buffers share this port; one access per cycle serializes them",
                    port.logical_buffers.len()
                ),
                metric: Some(port.logical_buffers.len() as f64),
            });
        }
    }

    // R2 single-channel: every port funnels through one memory channel.
    let channels_used: BTreeSet<usize> = graph.ports.iter().map(|p| p.channel).collect();
    if !graph.ports.is_empty() && channels_used.len() == 1 && graph.memory.channel_count > 1 {
        let channel = *channels_used.iter().next().unwrap();
        findings.push(Finding {
            rule_id: RuleId::SingleChannel,
            severity: Severity::Warning,
            entity: format!("channel{channel}"),
            message: format!(
                "all {} ports map to one channel of {}; spreading them multiplies available bandwidth",
                graph.ports.len(),
                graph.memory.channel_count
            ),
            metric: Some(graph.ports.len() as f64),
        });
    }

    // R3 small-burst.
    for port in &graph.ports {
        let bytes = burst_bytes(port);
        if bytes < thresholds.small_burst_warning_bytes {
            findings.push(Finding {
                rule_id: RuleId::SmallBurst,
                severity: Severity::Warning,
                entity: port.name.clone(),
                message: format!("burst size is only {bytes} bytes"),
                metric: Some(bytes as f64),
            });
        } else if bytes < thresholds.small_burst_advice_bytes {
            findings.push(Finding {
                rule_id: RuleId::SmallBurst,
                severity: Severity::Advice,
                entity: port.name.clone(),
                message: format!("burst size {bytes} bytes; longer bursts amortize latency"),
                metric: Some(bytes as f64),
            });
        }
    }

    // R4 narrow-port.
    for port in &graph.ports {
        if port.width_bits < thresholds.narrow_port_bits {
            findings.push(Finding {
                rule_id: RuleId::NarrowPort,
                severity: Severity::Advice,
                entity: port.name.clone(),
                message: format!(
                    "port is {} bits wide; widening toward {} bits raises peak transfer",
                    port.width_bits, thresholds.narrow_port_bits
                ),
                metric: Some(port.width_bits as f64),
            });
        }
    }

    // R5 low bandwidth utilization, from the measured profile.
    for (name, counters) in &profile.ports {
        if counters.utilization < thresholds.low_utilization_critical {
            findings.push(Finding {
                rule_id: RuleId::LowBandwidthUtilization,
                severity: Severity::Critical,
                entity: name.clone(),
                message: format!(
                    "port moved data at {:.2}% of its width",
                    counters.utilization * 100.0
                ),
                metric: Some(counters.utilization),
            });
        } else if counters.utilization < thresholds.low_utilization_advice {
            findings.push(Finding {
                rule_id: RuleId::LowBandwidthUtilization,
                severity: Severity::Advice,
                entity: name.clone(),
                message: format!(
                    "port utilization {:.1}% leaves bandwidth on the table",
                    counters.utilization * 100.0
                ),
                metric: Some(counters.utilization),
            });
        }
    }

    // R6 stream-stall.
    for (name, counters) in &profile.streams {
        if counters.stall_rate >= thresholds.stream_stall_warning {
            findings.push(Finding {
                rule_id: RuleId::StreamStall,
                severity: Severity::Warning,
                entity: name.clone(),
                message: format!("stream stalled {:.0}% of cycles", counters.stall_rate * 100.0),
                metric: Some(counters.stall_rate),
            });
        }
    }

    // R7 ii-inflation: name each stream forcing a stage above its base II.
    for stage in &graph.stages {
        let incoming = graph.incoming_streams(&stage.name);
        let eff = effective_ii(stage, &incoming);
        if eff > stage.base_ii {
            for stream in incoming {
                if stream.words_per_item as u64 > stage.base_ii {
                    findings.push(Finding {
                        rule_id: RuleId::IiInflation,
                        severity: Severity::Warning,
                        entity: stream.name.clone(),
                        message: format!(
                            "stage {} consumes {} words per item from this stream, inflating II from {} to {}",
                            stage.name, stream.words_per_item, stage.base_ii, stream.words_per_item
                        ),
                        metric: Some(stream.words_per_item as f64),
                    });
                }
            }
        }
    }

    // R8 memory-stall.
    if profile.memory_stall_fraction > thresholds.memory_stall_critical {
        findings.push(Finding {
            rule_id: RuleId::MemoryStall,
            severity: Severity::Critical,
            entity: graph.compute_stage.clone(),
            message: format!(
                "compute stalled on external memory {:.1}% of the runtime",
                profile.memory_stall_fraction * 100.0
            ),
            metric: Some(profile.memory_stall_fraction),
        });
    }

    findings.sort_by(|a, b| {
        b.severity
            .cmp(&a.severity)
            .then_with(|| a.entity.cmp(&b.entity))
            .then_with(|| a.rule_id.cmp(&b.rule_id))
    });
    Ok(findings)
}

/// One finding per line; an explicit all-clear when nothing fired.
pub fn render_text(findings: &[Finding]) -> String {
    if findings.is_empty() {
        return "HEALTHY - no findings\n".to_string();
    }
    let mut out = String::new();
    for finding in findings {
        out.push_str(&finding.to_string());
        out.push('\n');
    }
    out
}

/// True when any finding is a warning or worse.
pub fn has_problems(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity >= Severity::Warning)
}
