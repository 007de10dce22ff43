//! Compression ratio, memory score and the per-run report record.

use serde::Serialize;

use crate::search::{SearchResult, SearchStatus};

pub const MIB: u64 = 1 << 20;
pub const GIB: u64 = 1 << 30;

/// Usage at or below this scores 1.
pub const SCORE_FLOOR: u64 = 2 * MIB;
/// Default memory limit `U`.
pub const DEFAULT_LIMIT: u64 = 8 * GIB;

/// `baseline / compressed`.
///
/// # Panics
///
/// If `compressed` is zero.
pub fn compression_ratio(baseline: u64, compressed: u64) -> f64 {
    assert!(compressed > 0, "compression ratio with zero-sized representation");
    baseline as f64 / compressed as f64
}

/// Logarithmic score between 1 at 2 MiB and 0 at `limit`.
pub fn memory_score(bytes: u64, limit: u64) -> f64 {
    assert!(limit > SCORE_FLOOR, "memory limit must exceed 2 MiB");
    if bytes <= SCORE_FLOOR {
        return 1.0;
    }
    if bytes >= limit {
        return 0.0;
    }
    let floor = SCORE_FLOOR as f64;
    1.0 - (bytes as f64 / floor).ln() / (limit as f64 / floor).ln()
}

/// `1 − ln(m)/ln(U)` with `m` in bytes, clamped to [0, 1].
pub fn memory_score_raw(bytes: u64, limit: u64) -> f64 {
    if bytes <= 1 {
        return 1.0;
    }
    (1.0 - (bytes as f64).ln() / (limit as f64).ln()).clamp(0.0, 1.0)
}

/// One search run, in report column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub task: String,
    pub backend: String,
    pub ordering: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub status: SearchStatus,
    pub plan_cost: Option<u64>,
    pub plan_length: usize,
    pub expanded: u64,
    pub generated: u64,
    pub unique_states: u64,
    pub peak_open_size: u64,
    pub rep_bytes: u64,
    pub peak_rep_bytes: u64,
    pub node_count: usize,
    /// Backend the ratio is measured against.
    pub baseline: String,
    pub compression_ratio: f64,
    pub memory_score: f64,
    pub memory_score_raw: f64,
    /// Action names separated by single spaces.
    pub plan: String,
}

/// Size figures of the state set after a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RepSizes {
    pub rep_bytes: u64,
    pub peak_rep_bytes: u64,
    pub node_count: usize,
}

impl RunRecord {
    /// A record measured against itself.
    pub fn new(
        task: impl Into<String>,
        backend: impl Into<String>,
        ordering: impl Into<String>,
        seed: u64,
        wall_time_s: f64,
        result: &SearchResult,
        sizes: RepSizes,
    ) -> Self {
        let backend = backend.into();
        Self {
            task: task.into(),
            baseline: backend.clone(),
            backend,
            ordering: ordering.into(),
            seed,
            wall_time_s,
            status: result.status,
            plan_cost: result.plan_cost,
            plan_length: result.plan.len(),
            expanded: result.expanded,
            generated: result.generated,
            unique_states: result.unique_states,
            peak_open_size: result.peak_open_size,
            rep_bytes: sizes.rep_bytes,
            peak_rep_bytes: sizes.peak_rep_bytes,
            node_count: sizes.node_count,
            compression_ratio: 1.0,
            memory_score: memory_score(sizes.peak_rep_bytes.max(1), DEFAULT_LIMIT),
            memory_score_raw: memory_score_raw(sizes.peak_rep_bytes, DEFAULT_LIMIT),
            plan: result.plan.join(" "),
        }
    }

    pub fn against(&mut self, baseline: &RunRecord) {
        self.baseline = baseline.backend.clone();
        self.compression_ratio = compression_ratio(baseline.rep_bytes, self.rep_bytes.max(1));
    }

    /// True if both runs searched identically.
    pub fn same_search(&self, other: &RunRecord) -> bool {
        (self.status, self.plan_cost, &self.plan, self.expanded, self.generated)
            == (other.status, other.plan_cost, &other.plan, other.expanded, other.generated)
            && (self.unique_states, self.peak_open_size) == (other.unique_states, other.peak_open_size)
    }
}
