//! Profiler-style counters produced by a simulation run, and their fixed CSV
//! serialization.
//!
//! CSV layout (one row per entity, then a summary row):
//!
//! ```text
//! entity_type,name,total_cycles,active_cycles,stall_empty,stall_full,words,bytes,bandwidth_Bps,utilization
//! ```
//!
//! * `stage` rows: `words` holds items completed; `bytes`/`bandwidth_Bps` are 0;
//!   `utilization` is active/total.
//! * `stream` rows: `active_cycles` is 0; `utilization` carries the stream's
//!   stall rate.
//! * `port` rows: `active_cycles` holds busy cycles; stall columns are 0.
//! * the final `summary,overall` row reuses `words` for items processed,
//!   `bandwidth_Bps` for achieved MFLOPs and `utilization` for the memory
//!   stall fraction.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so a parsed
//! profile compares equal to the one that wrote it.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageCounters {
    pub active_cycles: u64,
    pub stall_empty_cycles: u64,
    pub stall_full_cycles: u64,
    pub items_completed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamCounters {
    pub words_transferred: u64,
    pub bytes_moved: u64,
    pub empty_stall_cycles: u64,
    pub full_stall_cycles: u64,
    /// (empty + full stall cycles) / total cycles.
    pub stall_rate: f64,
    pub bandwidth_bps: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PortCounters {
    pub busy_cycles: u64,
    pub bytes_moved: u64,
    pub achieved_bandwidth_bps: f64,
    /// bytes moved / (total cycles x beat bytes).
    pub utilization: f64,
}

/// Per-entity counters mirroring a profiler summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    pub total_cycles: u64,
    pub items_processed: u64,
    pub achieved_mflops: f64,
    /// Fraction of total cycles the compute stage was blocked, transitively,
    /// on a memory port.
    pub memory_stall_fraction: f64,
    pub stages: Vec<(String, StageCounters)>,
    pub streams: Vec<(String, StreamCounters)>,
    pub ports: Vec<(String, PortCounters)>,
}

pub const CSV_HEADER: &str =
    "entity_type,name,total_cycles,active_cycles,stall_empty,stall_full,words,bytes,bandwidth_Bps,utilization";

impl SimProfile {
    pub fn stage(&self, name: &str) -> Option<&StageCounters> {
        self.stages.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn stream(&self, name: &str) -> Option<&StreamCounters> {
        self.streams.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn port(&self, name: &str) -> Option<&PortCounters> {
        self.ports.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    /// Renders the fixed-format CSV document.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        let total = self.total_cycles;
        for (name, c) in &self.stages {
            let utilization = if total > 0 {
                c.active_cycles as f64 / total as f64
            } else {
                0.0
            };
            out.push_str(&format!(
                "stage,{},{},{},{},{},{},0,0,{}\n",
                name,
                total,
                c.active_cycles,
                c.stall_empty_cycles,
                c.stall_full_cycles,
                c.items_completed,
                utilization
            ));
        }
        for (name, c) in &self.streams {
            out.push_str(&format!(
                "stream,{},{},0,{},{},{},{},{},{}\n",
                name,
                total,
                c.empty_stall_cycles,
                c.full_stall_cycles,
                c.words_transferred,
                c.bytes_moved,
                c.bandwidth_bps,
                c.stall_rate
            ));
        }
        for (name, c) in &self.ports {
            out.push_str(&format!(
                "port,{},{},{},0,0,0,{},{},{}\n",
                name, total, c.busy_cycles, c.bytes_moved, c.achieved_bandwidth_bps, c.utilization
            ));
        }
        out.push_str(&format!(
            "summary,overall,{},0,0,0,{},0,{},{}\n",
            total, self.items_processed, self.achieved_mflops, self.memory_stall_fraction
        ));
        out
    }

    /// Parses a document produced by [`SimProfile::to_csv`].
    pub fn from_csv(text: &str) -> Result<SimProfile> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            other => {
                return Err(Error::ProfileParse(format!(
                    "bad header: {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut profile = SimProfile::default();
        let mut saw_summary = false;
        for (line_no, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 10 {
                return Err(Error::ProfileParse(format!(
                    "line {}: expected 10 columns, got {}",
                    line_no + 2,
                    cols.len()
                )));
            }
            let int = |s: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| Error::ProfileParse(format!("bad integer '{s}'")))
            };
            let float = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::ProfileParse(format!("bad float '{s}'")))
            };
            let name = cols[1].to_string();
            match cols[0] {
                "stage" => {
                    profile.total_cycles = int(cols[2])?;
                    profile.stages.push((
                        name,
                        StageCounters {
                            active_cycles: int(cols[3])?,
                            stall_empty_cycles: int(cols[4])?,
                            stall_full_cycles: int(cols[5])?,
                            items_completed: int(cols[6])?,
                        },
                    ));
                }
                "stream" => {
                    profile.total_cycles = int(cols[2])?;
                    profile.streams.push((
                        name,
                        StreamCounters {
                            empty_stall_cycles: int(cols[4])?,
                            full_stall_cycles: int(cols[5])?,
                            words_transferred: int(cols[6])?,
                            bytes_moved: int(cols[7])?,
                            bandwidth_bps: float(cols[8])?,
                            stall_rate: float(cols[9])?,
                        },
                    ));
                }
                "port" => {
                    profile.total_cycles = int(cols[2])?;
                    profile.ports.push((
                        name,
                        PortCounters {
                            busy_cycles: int(cols[3])?,
                            bytes_moved: int(cols[7])?,
                            achieved_bandwidth_bps: float(cols[8])?,
                            utilization: float(cols[9])?,
                        },
                    ));
                }
                "summary" => {
                    profile.total_cycles = int(cols[2])?;
                    profile.items_processed = int(cols[6])?;
                    profile.achieved_mflops = float(cols[8])?;
                    profile.memory_stall_fraction = float(cols[9])?;
                    saw_summary = true;
                }
                other => {
                    return Err(Error::ProfileParse(format!(
                        "unknown entity_type '{other}'"
                    )))
                }
            }
        }
        if !saw_summary {
            return Err(Error::ProfileParse("missing summary row".into()));
        }
        Ok(profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimProfile {
        SimProfile {
            total_cycles: 1234,
            items_processed: 1000,
            achieved_mflops: 8271.125,
            memory_stall_fraction: 0.031,
            stages: vec![(
                "jacobi".into(),
                StageCounters {
                    active_cycles: 1000,
                    stall_empty_cycles: 200,
                    stall_full_cycles: 34,
                    items_completed: 1000,
                },
            )],
            streams: vec![(
                "a".into(),
                StreamCounters {
                    words_transferred: 4000,
                    bytes_moved: 16000,
                    empty_stall_cycles: 7,
                    full_stall_cycles: 9,
                    stall_rate: 16.0 / 1234.0,
                    bandwidth_bps: 3.9e9,
                },
            )],
            ports: vec![(
                "port_a".into(),
                PortCounters {
                    busy_cycles: 900,
                    bytes_moved: 16000,
                    achieved_bandwidth_bps: 3.9e9,
                    utilization: 0.203,
                },
            )],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let profile = sample();
        let text = profile.to_csv();
        let back = SimProfile::from_csv(&text).unwrap();
        assert_eq!(back, profile);
        // And the rendering itself is stable.
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(SimProfile::from_csv("nope").is_err());
        let mut text = sample().to_csv();
        text.push_str("widget,x,1,2,3,4,5,6,7,8\n");
        assert!(SimProfile::from_csv(&text).is_err());
        let truncated = CSV_HEADER.to_string() + "\nstage,s,1,2\n";
        assert!(SimProfile::from_csv(&truncated).is_err());
    }

    #[test]
    fn csv_requires_summary() {
        let text = format!("{CSV_HEADER}\nstage,s,10,5,3,2,4,0,0,0.5\n");
        assert!(SimProfile::from_csv(&text).is_err());
    }
}
