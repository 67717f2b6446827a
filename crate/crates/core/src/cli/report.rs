//! JSON report shapes. Key names are part of the command-line contract.

use serde::Serialize;

use crate::anomaly::{AnomalyReport, EdgeVerdict, GuardVerdict, PopulationStats, TruncationInfo};

#[derive(Debug, Serialize)]
pub struct FlagJson {
    pub index: usize,
    pub deviation: f64,
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct StatsJson {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

impl From<PopulationStats> for StatsJson {
    fn from(s: PopulationStats) -> Self {
        Self {
            mu: s.mu,
            sigma: s.sigma,
            n: s.n,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TruncationJson {
    pub applied: bool,
    pub iterations: usize,
    pub kept_from_index: usize,
    pub final_ratio: Option<f64>,
}

impl From<Option<TruncationInfo>> for TruncationJson {
    fn from(info: Option<TruncationInfo>) -> Self {
        match info {
            Some(t) => Self {
                applied: true,
                iterations: t.iterations,
                kept_from_index: t.kept_from,
                final_ratio: Some(t.final_ratio),
            },
            None => Self {
                applied: false,
                iterations: 0,
                kept_from_index: 0,
                final_ratio: None,
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct InternalMitigationsJson {
    pub volatility_truncation: TruncationJson,
}

#[derive(Debug, Serialize)]
pub struct InternalReportJson {
    pub mode: &'static str,
    pub flags: Vec<FlagJson>,
    pub stats: Option<StatsJson>,
    pub mitigations: InternalMitigationsJson,
}

impl From<&AnomalyReport> for InternalReportJson {
    fn from(r: &AnomalyReport) -> Self {
        Self {
            mode: "internal",
            flags: flags(r),
            stats: r.stats.map(StatsJson::from),
            mitigations: InternalMitigationsJson {
                volatility_truncation: r.mitigations.volatility.into(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ScreeningJson {
    pub applied: bool,
    pub stats_before: Option<StatsJson>,
}

#[derive(Debug, Serialize)]
pub struct EdgeMitigationsJson {
    pub guards: Option<&'static str>,
    pub internal_screening: ScreeningJson,
    pub volatility_truncation: TruncationJson,
}

#[derive(Debug, Serialize)]
pub struct EdgeReportJson {
    pub mode: &'static str,
    pub which: &'static str,
    pub index: Option<usize>,
    pub verdict: &'static str,
    pub reason: Option<String>,
    pub sample_s: Option<f64>,
    pub stats: Option<StatsJson>,
    pub excluded_internal: Vec<usize>,
    pub mitigations: EdgeMitigationsJson,
}

impl EdgeReportJson {
    pub fn new(r: &AnomalyReport, which: &'static str) -> Self {
        let verdict = r.verdict.unwrap_or(EdgeVerdict::Normal);
        let reason = match verdict {
            EdgeVerdict::Skipped(reason) => Some(reason.to_string()),
            _ => None,
        };
        let screening = r.mitigations.screening.as_ref();
        Self {
            mode: "edge",
            which,
            index: r.edge_index,
            verdict: verdict.as_str(),
            reason,
            sample_s: r.edge_sample,
            stats: r.stats.map(StatsJson::from),
            excluded_internal: screening.map(|s| s.excluded.clone()).unwrap_or_default(),
            mitigations: EdgeMitigationsJson {
                guards: r.mitigations.guards.map(|g| match g {
                    GuardVerdict::Run => "run",
                    GuardVerdict::Skip(_) => "skip",
                }),
                internal_screening: ScreeningJson {
                    applied: screening.is_some(),
                    stats_before: screening.map(|s| s.before.into()),
                },
                volatility_truncation: r.mitigations.volatility.into(),
            },
        }
    }
}

fn flags(r: &AnomalyReport) -> Vec<FlagJson> {
    r.flagged
        .iter()
        .map(|f| FlagJson {
            index: f.index,
            deviation: f.deviation,
            score: f.score,
        })
        .collect()
}
