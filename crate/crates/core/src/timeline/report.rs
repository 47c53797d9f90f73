use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use super::{Milestone, OffsetTable, ReferenceTimeline};
use crate::ingest::render_offset;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridReport {
    pub step: u64,
    pub boundaries: Vec<i64>,
    pub assignments: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimelineReport {
    pub offsets: BTreeMap<String, i64>,
    pub renderings: BTreeMap<String, String>,
    pub grid: Option<GridReport>,
}

impl TimelineReport {
    pub fn new(table: &OffsetTable, grid: Option<&ReferenceTimeline>) -> Self {
        TimelineReport {
            offsets: table.offsets.clone(),
            renderings: table.offsets.iter().map(|(id, &off)| (id.clone(), render_offset(off))).collect(),
            grid: grid.map(|g| GridReport {
                step: g.step.days,
                boundaries: g.boundaries.clone(),
                assignments: g.assignment.clone(),
            }),
        }
    }

    /// Aligned text table ordered by offset, then id.
    pub fn to_text(&self, milestones: &[Milestone]) -> String {
        let names: BTreeMap<&str, &str> =
            milestones.iter().map(|m| (m.milestone_id.as_str(), m.name.as_str())).collect();
        let mut rows: Vec<(&String, &i64)> = self.offsets.iter().collect();
        rows.sort_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)));
        let id_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("milestone".len());
        let name_w =
            rows.iter().map(|r| names.get(r.0.as_str()).map_or(0, |n| n.len())).max().unwrap_or(0).max("name".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<id_w$}  {:<name_w$}  {:>6}  {:>4}  rendering", "milestone", "name", "days", "slot");
        for (id, off) in rows {
            let slot =
                self.grid.as_ref().and_then(|g| g.assignments.get(id)).map_or("-".to_string(), |s| s.to_string());
            let _ = writeln!(
                out,
                "{:<id_w$}  {:<name_w$}  {:>6}  {:>4}  {}",
                id,
                names.get(id.as_str()).copied().unwrap_or(""),
                off,
                slot,
                self.renderings[id]
            );
        }
        out
    }
}
