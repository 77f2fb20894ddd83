//! Per-master timing metrics and CSV reports.

use std::fmt::Write as _;

use thiserror::Error;

use crate::interconnect::{AccessKind, Transaction, TxnId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Victim,
    Injector,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Victim => "victim",
            Role::Injector => "injector",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxnSample {
    pub id: TxnId,
    pub kind: AccessKind,
    pub address: u32,
    pub bytes: u32,
    pub beats: u32,
    pub request: u64,
    pub grant: u64,
    pub complete: u64,
}

impl TxnSample {
    pub fn latency(&self) -> u64 {
        self.complete - self.request
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterMetrics {
    pub name: String,
    pub role: Role,
    pub samples: Vec<TxnSample>,
    /// Victims: completion of their final access. Injectors: cycle DONE was
    /// raised. `None` when the master did not finish.
    pub completion_cycle: Option<u64>,
    pub slowdown: Option<f64>,
}

impl MasterMetrics {
    pub fn new(name: impl Into<String>, role: Role) -> Self {
        MasterMetrics {
            name: name.into(),
            role,
            samples: Vec::new(),
            completion_cycle: None,
            slowdown: None,
        }
    }

    pub fn record(&mut self, txn: &Transaction) {
        let complete = txn
            .complete_cycle
            .expect("only completed transactions are recorded");
        self.samples.push(TxnSample {
            id: txn.id,
            kind: txn.kind,
            address: txn.address,
            bytes: txn.size_bytes,
            beats: txn.beats,
            request: txn.request_cycle,
            grant: txn.grant_cycle.unwrap_or(complete),
            complete,
        });
    }

    pub fn txn_count(&self) -> usize {
        self.samples.len()
    }

    pub fn total_bytes(&self) -> u64 {
        self.samples.iter().map(|s| s.bytes as u64).sum()
    }

    pub fn latencies(&self) -> Vec<u64> {
        self.samples.iter().map(TxnSample::latency).collect()
    }

    pub fn avg_latency(&self) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        let sum: u64 = self.samples.iter().map(TxnSample::latency).sum();
        Some(sum as f64 / self.samples.len() as f64)
    }

    pub fn percentile(&self, q: f64) -> Option<u64> {
        percentile(&self.latencies(), q).ok()
    }

    pub fn max_latency(&self) -> Option<u64> {
        self.samples.iter().map(TxnSample::latency).max()
    }

    pub fn first_request(&self) -> Option<u64> {
        self.samples.iter().map(|s| s.request).min()
    }

    pub fn last_complete(&self) -> Option<u64> {
        self.samples.iter().map(|s| s.complete).max()
    }

    /// Bytes per cycle over the master's own active interval.
    pub fn bandwidth(&self) -> f64 {
        match (self.first_request(), self.last_complete()) {
            (Some(first), Some(last)) if last > first => {
                self.total_bytes() as f64 / (last - first) as f64
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunMeta {
    pub topology_hash: String,
    pub seed: u64,
    /// Cycles simulated.
    pub cycles: u64,
    /// The run hit its cycle cap.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub scenario: String,
    pub masters: Vec<MasterMetrics>,
    pub meta: RunMeta,
}

impl MetricsRecord {
    pub fn master(&self, name: &str) -> Option<&MasterMetrics> {
        self.masters.iter().find(|m| m.name == name)
    }

    pub fn master_mut(&mut self, name: &str) -> Option<&mut MasterMetrics> {
        self.masters.iter_mut().find(|m| m.name == name)
    }

    pub fn total_transactions(&self) -> usize {
        self.masters.iter().map(MasterMetrics::txn_count).sum()
    }

    pub fn victims(&self) -> impl Iterator<Item = &MasterMetrics> {
        self.masters.iter().filter(|m| m.role == Role::Victim)
    }

    fn scenario_label(&self) -> String {
        if self.meta.partial {
            format!("{}:partial", self.scenario)
        } else {
            self.scenario.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no samples")]
    EmptySamples,
    #[error("quantile must lie in [0, 100]")]
    QuantileOutOfRange,
}

/// Nearest-rank percentile: the `ceil(q/100 * n)`-th smallest sample
/// (1-based, at least the first).
pub fn percentile(samples: &[u64], q: f64) -> Result<u64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(MetricsError::QuantileOutOfRange);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

pub const METRICS_CSV_HEADER: &str = "scenario,master,role,txn_count,bytes,avg_latency,p50,p95,max_latency,bandwidth,completion_cycle,slowdown";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_f(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Metrics CSV, one row per master, sorted by (scenario, master).
pub fn emit_csv(records: &[MetricsRecord]) -> Vec<u8> {
    let mut rows: Vec<(String, &MasterMetrics)> = records
        .iter()
        .flat_map(|r| {
            let label = r.scenario_label();
            r.masters.iter().map(move |m| (label.clone(), m))
        })
        .collect();
    rows.sort_by(|a, b| (&a.0, &a.1.name).cmp(&(&b.0, &b.1.name)));

    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for (scenario, m) in rows {
        let slowdown = match m.role {
            Role::Victim => opt_f(m.slowdown),
            Role::Injector => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.6},{},{}",
            scenario,
            m.name,
            m.role.as_str(),
            m.txn_count(),
            m.total_bytes(),
            opt_f(m.avg_latency()),
            opt(m.percentile(50.0)),
            opt(m.percentile(95.0)),
            opt(m.max_latency()),
            m.bandwidth(),
            opt(m.completion_cycle),
            slowdown,
        );
    }
    out.into_bytes()
}

pub const TXN_CSV_HEADER: &str = "scenario,master,txn_id,kind,address,beats,request,grant,complete";

/// Per-transaction dump in completion order per master.
pub fn emit_txn_csv(records: &[MetricsRecord]) -> Vec<u8> {
    let mut out = String::from(TXN_CSV_HEADER);
    out.push('\n');
    for r in records {
        let label = r.scenario_label();
        for m in &r.masters {
            for s in &m.samples {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:#010x},{},{},{},{}",
                    label,
                    m.name,
                    s.id,
                    s.kind.as_str(),
                    s.address,
                    s.beats,
                    s.request,
                    s.grant,
                    s.complete
                );
            }
        }
    }
    out.into_bytes()
}
