//! Summary files written next to each run's CSV output.

use proxy_dynamics::analysis::{ConditionReport, SweepTable};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub scenario: String,
    pub robot: String,
    pub termination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stuck_reason: Option<String>,
    pub exit_code: i32,
    pub t_final: f64,
    pub final_state: Vec<f64>,
    pub u_initial: f64,
    pub u_final: f64,
    pub u_min: f64,
    pub constraint_final: f64,
    /// First time `U` fell below `U(s0)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossing_time: Option<f64>,
    /// Largest `|U - proxy U|` over samples carrying a proxy.
    pub max_proxy_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    pub conditions: ConditionReport,
    pub segments: Vec<SegmentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub u_star: f64,
    pub state: Vec<f64>,
    /// `U* - final U`.
    pub gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kkt_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub round: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub delta_u: f64,
    /// One-based.
    pub proxy: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub scenario: String,
    pub proxy_size: usize,
    /// Every curve rose above zero and ended below it.
    pub all_eventually_negative: bool,
    pub curves: Vec<CurveSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    /// One-based, `;`-separated.
    pub subset: String,
    pub termination: String,
    pub peak_gain: f64,
    pub peak_time: f64,
    pub final_gain: f64,
    pub min_gain: f64,
    pub eventually_negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub scenario: String,
    pub sweep: SweepTable,
}

pub fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string_pretty(value).expect("reports serialize to TOML")
}
