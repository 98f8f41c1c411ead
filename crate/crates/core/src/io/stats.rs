//! Case breakdown and timing summary of a query batch.

use std::fmt::Write as _;

use super::query::OutputRecord;
use crate::winding3d::CaseCategory;

/// Row labels of the summary table, in order.
pub const TABLE_ROWS: [&str; 7] = [
    "% Far-field Cases",
    "% Near-field Cases",
    "% Edge Cases",
    "Avg. Time per Query (ms)",
    "Avg. Far-field Case Time (ms)",
    "Avg. Near-field Case Time (ms)",
    "Avg. Edge Case Time (ms)",
];

/// Counts are over patch-level evaluations (one per query and patch);
/// failed patch evaluations are counted separately.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsReport {
    pub queries: usize,
    pub far: usize,
    pub near: usize,
    pub edge: usize,
    pub failed: usize,
    pub query_nanos: u128,
    pub far_nanos: u128,
    pub near_nanos: u128,
    pub edge_nanos: u128,
}

impl StatsReport {
    pub fn from_records(records: &[OutputRecord]) -> Self {
        let mut s = StatsReport {
            queries: records.len(),
            ..Default::default()
        };
        for r in records {
            s.query_nanos += r.nanos as u128;
            for p in &r.patches {
                let n = p.nanos as u128;
                match p.case.map(|c| c.category()) {
                    Some(CaseCategory::FarField) => {
                        s.far += 1;
                        s.far_nanos += n;
                    }
                    Some(CaseCategory::NearField) => {
                        s.near += 1;
                        s.near_nanos += n;
                    }
                    Some(CaseCategory::Edge) => {
                        s.edge += 1;
                        s.edge_nanos += n;
                    }
                    None => s.failed += 1,
                }
            }
        }
        s
    }

    /// Patch-level evaluations that produced a case.
    pub fn evaluations(&self) -> usize {
        self.far + self.near + self.edge
    }

    /// Values in [`TABLE_ROWS`] order.
    pub fn rows(&self) -> [f64; 7] {
        let pct = |n: usize| {
            if self.evaluations() == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.evaluations() as f64
            }
        };
        let ms = |t: u128, n: usize| {
            if n == 0 {
                0.0
            } else {
                t as f64 / n as f64 / 1e6
            }
        };
        [
            pct(self.far),
            pct(self.near),
            pct(self.edge),
            ms(self.query_nanos, self.queries),
            ms(self.far_nanos, self.far),
            ms(self.near_nanos, self.near),
            ms(self.edge_nanos, self.edge),
        ]
    }

    /// Comma-separated `metric,value` table. Comment lines carry raw counts
    /// and the per-query normalization of case times; timings depend on the
    /// machine and are informative only.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# timings are machine dependent and informative only");
        let _ = writeln!(
            out,
            "# queries={} patch_evaluations={} far={} near={} edge={} failed={}",
            self.queries,
            self.evaluations(),
            self.far,
            self.near,
            self.edge,
            self.failed
        );
        let per_query = |t: u128| {
            if self.queries == 0 {
                0.0
            } else {
                t as f64 / self.queries as f64 / 1e6
            }
        };
        let _ = writeln!(
            out,
            "# case times per patch evaluation; per query: far={:.6} near={:.6} edge={:.6} ms",
            per_query(self.far_nanos),
            per_query(self.near_nanos),
            per_query(self.edge_nanos)
        );
        out.push_str("metric,value\n");
        for (label, v) in TABLE_ROWS.iter().zip(self.rows()) {
            let _ = writeln!(out, "{label},{v:.6}");
        }
        out
    }
}
