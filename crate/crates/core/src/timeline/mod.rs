//! SOP-relative milestone offsets, golden-question completeness, the
//! fixed-step reference timeline and cross-level alignment.

mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::TimelineReport;

use crate::finding::{codes, Finding};
use crate::ingest::anchor::{resolve_anchor, AnchorResolution};
use crate::ingest::{render_offset, Duration, FlowGraph};
use crate::pyramid::Pyramid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MilestoneKind {
    Start,
    Intermediate,
    End,
}

/// Answers to the eight golden questions. Data-object ids are namespaced
/// by model (`model/object`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GqRecord {
    pub gq1_process: Option<String>,
    pub gq2_role: Option<String>,
    pub gq3_tools: BTreeSet<String>,
    pub gq4_duration: Option<Duration>,
    pub gq5_inputs: BTreeSet<String>,
    pub gq6_outputs: BTreeSet<String>,
    pub gq7_consumers: BTreeSet<String>,
    pub gq8_storage: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Milestone {
    pub milestone_id: String,
    pub name: String,
    pub kind: MilestoneKind,
    pub model_id: String,
    pub event_node: String,
    /// Annotated offset in signed days (negative is before SOP).
    pub declared_offset: Option<i64>,
    pub gq: GqRecord,
    /// No downstream consumer is expected.
    pub terminal: bool,
    pub aligns_with: BTreeSet<String>,
    /// Display names of every data object referenced in `gq`.
    pub objects: BTreeMap<String, String>,
}

impl Milestone {
    pub fn subject(&self) -> String {
        format!("{}/{}", self.model_id, self.milestone_id)
    }

    pub fn object_name<'a>(&'a self, object_id: &'a str) -> &'a str {
        self.objects.get(object_id).map_or(object_id, String::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetTable {
    pub offsets: BTreeMap<String, i64>,
    pub provenance: BTreeMap<String, String>,
}

impl OffsetTable {
    pub fn get(&self, milestone_id: &str) -> Option<i64> {
        self.offsets.get(milestone_id).copied()
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceTimeline {
    pub step: Duration,
    /// Slot boundaries; slot `i` spans `[boundaries[i], boundaries[i + 1])`,
    /// the last slot also contains its right boundary.
    pub boundaries: Vec<i64>,
    pub assignment: BTreeMap<String, usize>,
}

impl ReferenceTimeline {
    pub fn slot_count(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimelineError {
    #[error("EMPTY-TIMELINE: no milestone has a resolved offset")]
    EmptyTimeline,
    #[error("reference step must be positive")]
    InvalidStep,
}

/// Reports every milestone id that occurs more than once in the bundle.
pub fn check_milestone_ids(milestones: &[Milestone]) -> Vec<Finding> {
    let mut owners: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for m in milestones {
        owners.entry(m.milestone_id.as_str()).or_default().push(m.model_id.as_str());
    }
    owners
        .into_iter()
        .filter(|(_, models)| models.len() > 1)
        .map(|(id, models)| {
            Finding::error(
                codes::DUPLICATE_MILESTONE,
                id,
                format!("milestone id used by several events in models {}", models.join(", ")),
            )
        })
        .collect()
}

/// Offset of each milestone: minus the nearest anchor amount plus the
/// longest path of durations from that anchor.
pub fn resolve_offsets(pyramid: &Pyramid, milestones: &[Milestone]) -> (OffsetTable, Vec<Finding>) {
    let mut table = OffsetTable::default();
    let mut findings = Vec::new();
    let mut graphs: HashMap<&str, FlowGraph> = HashMap::new();

    for m in milestones {
        let Some(model) = pyramid.model(&m.model_id) else {
            findings.push(Finding::warning(
                codes::NO_ANCHOR,
                m.subject(),
                format!("owning model {:?} is not in the pyramid", m.model_id),
            ));
            continue;
        };
        let graph = graphs.entry(model.model_id.as_str()).or_insert_with(|| model.graph());
        let Some(&idx) = graph.index.get(&m.event_node) else {
            findings.push(Finding::warning(codes::NO_ANCHOR, m.subject(), "event node not found in model"));
            continue;
        };
        match resolve_anchor(model, graph, idx) {
            AnchorResolution::Resolved(r) => {
                table.offsets.insert(m.milestone_id.clone(), r.offset);
                table.provenance.insert(
                    m.milestone_id.clone(),
                    format!(
                        "anchor {} ({}) + {} days along the longest path",
                        r.anchor_node,
                        render_offset(-(r.anchor_days as i64)),
                        r.path_days
                    ),
                );
            }
            AnchorResolution::Unanchored => findings.push(Finding::warning(
                codes::NO_ANCHOR,
                m.subject(),
                "no anchor timer upstream; offset unknown",
            )),
            AnchorResolution::Cycle { through } => findings.push(Finding::error(
                codes::FLOW_CYCLE,
                m.subject(),
                format!("flow cycle between anchor and milestone through {}", through.join(" -> ")),
            )),
            // Reported by extract_milestones.
            AnchorResolution::Ambiguous { .. } => {}
        }
    }

    let sop = pyramid.settings.sop_label.as_str();
    for m in milestones.iter().filter(|m| m.milestone_id == sop || m.name == sop) {
        if let Some(offset) = table.get(&m.milestone_id) {
            if offset != 0 {
                findings.push(Finding::error(
                    codes::SOP_NOT_ZERO,
                    m.subject(),
                    format!("SOP milestone resolves to {offset} days instead of 0"),
                ));
            }
        }
    }
    (table, findings)
}

/// `OFFSET-MISMATCH` wherever an annotated offset differs from the computed one.
pub fn reconcile_declared(table: &OffsetTable, milestones: &[Milestone]) -> Vec<Finding> {
    milestones
        .iter()
        .filter_map(|m| {
            let declared = m.declared_offset?;
            let computed = table.get(&m.milestone_id)?;
            (declared != computed).then(|| {
                Finding::error(
                    codes::OFFSET_MISMATCH,
                    m.subject(),
                    format!(
                        "declared {declared} days, computed {computed} days (delta {})",
                        (declared - computed).abs()
                    ),
                )
            })
        })
        .collect()
}

/// One `GQk-UNANSWERED` per missing answer; GQ7 is waived for terminal
/// milestones. `GQ8-INCOMPLETE` when storage is given for some but not all
/// inputs and outputs.
pub fn check_gq(milestone: &Milestone) -> Vec<Finding> {
    let gq = &milestone.gq;
    let blank = |s: &Option<String>| s.as_deref().is_none_or(|v| v.trim().is_empty());
    let unanswered = [
        blank(&gq.gq1_process),
        blank(&gq.gq2_role),
        gq.gq3_tools.is_empty(),
        gq.gq4_duration.is_none(),
        gq.gq5_inputs.is_empty(),
        gq.gq6_outputs.is_empty(),
        gq.gq7_consumers.is_empty() && !milestone.terminal,
        gq.gq8_storage.is_empty(),
    ];
    let mut findings: Vec<Finding> = unanswered
        .iter()
        .enumerate()
        .filter(|(_, &missing)| missing)
        .map(|(k, _)| {
            let question = k as u8 + 1;
            Finding::warning(
                &codes::gq_unanswered(question),
                milestone.subject(),
                format!("golden question {question} is not answered"),
            )
        })
        .collect();
    if !gq.gq8_storage.is_empty() {
        let uncovered: Vec<&str> = gq
            .gq5_inputs
            .iter()
            .chain(&gq.gq6_outputs)
            .filter(|id| !gq.gq8_storage.contains_key(*id))
            .map(String::as_str)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !uncovered.is_empty() {
            findings.push(Finding::warning(
                codes::GQ8_INCOMPLETE,
                milestone.subject(),
                format!("no storage location for {}", uncovered.join(", ")),
            ));
        }
    }
    findings
}

/// Fixed-step grid from `floor(min/step)*step` to `ceil(max/step)*step`.
/// A table whose span collapses to one boundary gets a single slot.
pub fn build_reference_timeline(table: &OffsetTable, step: Duration) -> Result<ReferenceTimeline, TimelineError> {
    if step.days == 0 {
        return Err(TimelineError::InvalidStep);
    }
    let step_days = step.as_signed();
    let min = *table.offsets.values().min().ok_or(TimelineError::EmptyTimeline)?;
    let max = *table.offsets.values().max().ok_or(TimelineError::EmptyTimeline)?;
    let lo = min.div_euclid(step_days) * step_days;
    let mut hi = -((-max).div_euclid(step_days)) * step_days;
    if hi == lo {
        hi = lo + step_days;
    }
    let boundaries: Vec<i64> = (0..=((hi - lo) / step_days)).map(|i| lo + i * step_days).collect();
    let last_slot = boundaries.len() - 2;
    let assignment = table
        .offsets
        .iter()
        .map(|(id, &off)| (id.clone(), (((off - lo) / step_days) as usize).min(last_slot)))
        .collect();
    Ok(ReferenceTimeline { step, boundaries, assignment })
}

/// Compares offsets of milestones linked across levels (GQ7 consumers in a
/// different level, or `alignsWith`) against the alignment tolerance.
pub fn check_alignment(pyramid: &Pyramid, table: &OffsetTable, milestones: &[Milestone]) -> Vec<Finding> {
    let by_id: BTreeMap<&str, &Milestone> = milestones.iter().map(|m| (m.milestone_id.as_str(), m)).collect();
    let tolerance = pyramid.settings.alignment_tolerance.as_signed();
    let mut findings = Vec::new();
    let mut checked: BTreeSet<(String, String)> = BTreeSet::new();

    for m in milestones {
        let level = pyramid.level_of(&m.model_id);
        let targets = m.gq.gq7_consumers.iter().map(|t| (t, false)).chain(m.aligns_with.iter().map(|t| (t, true)));
        for (target, explicit) in targets {
            let Some(other) = by_id.get(target.as_str()) else {
                findings.push(Finding::error(
                    codes::DANGLING_ALIGNMENT,
                    m.subject(),
                    format!("links to unknown milestone {target:?}"),
                ));
                continue;
            };
            let other_level = pyramid.level_of(&other.model_id);
            if !explicit && other_level == level {
                continue;
            }
            let (high, low) = if other_level < level { (*other, m) } else { (m, *other) };
            let key = if m.milestone_id <= other.milestone_id {
                (m.milestone_id.clone(), other.milestone_id.clone())
            } else {
                (other.milestone_id.clone(), m.milestone_id.clone())
            };
            if !checked.insert(key) {
                continue;
            }
            let (Some(oh), Some(ol)) = (table.get(&high.milestone_id), table.get(&low.milestone_id)) else {
                continue;
            };
            let delta = (oh - ol).abs();
            if delta > tolerance {
                findings.push(Finding::error(
                    codes::MISALIGNED,
                    high.subject(),
                    format!(
                        "{} at {oh} days and {} at {ol} days differ by {delta} days (tolerance {tolerance})",
                        high.milestone_id, low.milestone_id
                    ),
                ));
            }
        }
    }
    findings
}
