//! Comparison of pyramid processes with V-model reference templates over
//! steps, roles, methods and tools, plus verification/validation linking
//! and milestone retention between revisions.

mod lcs;
mod template;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use lcs::lcs_pairs;
pub use template::{
    load_reference, parse_templates, validate_templates, Binding, ReferenceProcess, Side, TemplateError,
};

use crate::dependency::DependencyGraph;
use crate::finding::{codes, Finding};
use crate::ingest::{NodeKind, ProcessModel};
use crate::names::AliasTable;
use crate::pyramid::Pyramid;
use crate::timeline::{Milestone, MilestoneKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Steps,
    Roles,
    Methods,
    Tools,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AspectDiff {
    pub aspect: Aspect,
    /// In the reference, not matched in the model.
    pub missing: Vec<String>,
    /// In the model, not matched in the reference.
    pub extra: Vec<String>,
    /// Step pairs whose relative order differs (reference order).
    pub reordered: Vec<(String, String)>,
    pub matched: usize,
    pub reference_total: usize,
    pub model_total: usize,
    pub match_ratio: f64,
}

impl AspectDiff {
    pub fn is_full_match(&self) -> bool {
        self.matched == self.reference_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Conforming,
    MinorDeviation,
    MajorDeviation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Any ratio strictly below this is a major deviation.
    pub major_below: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { major_below: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub model_id: String,
    pub ref_id: String,
    pub diffs: Vec<AspectDiff>,
    pub verdict: Verdict,
}

impl DeviationReport {
    pub fn diff(&self, aspect: Aspect) -> &AspectDiff {
        self.diffs.iter().find(|d| d.aspect == aspect).expect("all four aspects are present")
    }

    pub fn to_finding(&self) -> Option<Finding> {
        let subject = format!("{}/{}", self.model_id, self.ref_id);
        let summary: Vec<String> = self
            .diffs
            .iter()
            .map(|d| format!("{:?} {}/{}", d.aspect, d.matched, d.reference_total).to_lowercase())
            .collect();
        let message = format!("deviates from template {}: {}", self.ref_id, summary.join(", "));
        match self.verdict {
            Verdict::Conforming => None,
            Verdict::MinorDeviation => Some(Finding::warning(codes::DEVIATION, subject, message)),
            Verdict::MajorDeviation => Some(Finding::error(codes::DEVIATION, subject, message)),
        }
    }
}

/// Task and call-activity names in flow order: Kahn's algorithm with ties
/// broken by document position, cyclic remainders appended in document order.
pub fn model_steps(model: &ProcessModel) -> Vec<String> {
    let graph = model.graph();
    let mut indegree: Vec<usize> = graph.pred.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..graph.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(graph.len());
    let mut placed = vec![false; graph.len()];
    loop {
        while let Some(n) = ready.pop_first() {
            placed[n] = true;
            order.push(n);
            for &s in &graph.succ[n] {
                if placed[s] {
                    continue;
                }
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        // Break a cycle at its first unplaced node in document order.
        match (0..graph.len()).find(|&i| !placed[i]) {
            Some(n) => {
                indegree[n] = 0;
                ready.insert(n);
            }
            None => break,
        }
    }
    order
        .into_iter()
        .map(|i| &model.nodes[i])
        .filter(|n| matches!(n.kind, NodeKind::Task | NodeKind::CallActivity))
        .map(|n| if n.name.trim().is_empty() { n.node_id.clone() } else { n.name.clone() })
        .collect()
}

fn ratio(matched: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        matched as f64 / total as f64
    }
}

fn diff_steps(reference: &[String], model: &[String], aliases: &AliasTable) -> AspectDiff {
    let r: Vec<String> = reference.iter().map(|s| aliases.canonical(s)).collect();
    let m: Vec<String> = model.iter().map(|s| aliases.canonical(s)).collect();
    let pairs = lcs_pairs(&r, &m);
    let matched_r: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
    let matched_m: BTreeSet<usize> = pairs.iter().map(|p| p.1).collect();
    let missing_idx: Vec<usize> = (0..r.len()).filter(|i| !matched_r.contains(i)).collect();
    let extra_idx: Vec<usize> = (0..m.len()).filter(|j| !matched_m.contains(j)).collect();

    // An unmatched reference step that also appears unmatched in the model
    // was moved; pair it with every matched step it crossed.
    let mut reordered = Vec::new();
    let mut used_extra = BTreeSet::new();
    for &i in &missing_idx {
        let Some(&j) = extra_idx.iter().find(|&&j| m[j] == r[i] && !used_extra.contains(&j)) else {
            continue;
        };
        used_extra.insert(j);
        for &(pi, pj) in &pairs {
            if (pi < i) != (pj < j) {
                let (a, b) = if pi < i { (pi, i) } else { (i, pi) };
                reordered.push((reference[a].clone(), reference[b].clone()));
            }
        }
    }
    reordered.sort();
    reordered.dedup();

    AspectDiff {
        aspect: Aspect::Steps,
        missing: missing_idx.iter().map(|&i| reference[i].clone()).collect(),
        extra: extra_idx.iter().map(|&j| model[j].clone()).collect(),
        reordered,
        matched: pairs.len(),
        reference_total: r.len(),
        model_total: m.len(),
        match_ratio: ratio(pairs.len(), r.len()),
    }
}

fn diff_set(
    aspect: Aspect,
    reference: &BTreeSet<String>,
    model: &BTreeSet<String>,
    aliases: &AliasTable,
) -> AspectDiff {
    let canon = |set: &BTreeSet<String>| -> BTreeMap<String, String> {
        set.iter().map(|s| (aliases.canonical(s), s.clone())).collect()
    };
    let r = canon(reference);
    let m = canon(model);
    let matched = r.keys().filter(|k| m.contains_key(*k)).count();
    AspectDiff {
        aspect,
        missing: r.iter().filter(|(k, _)| !m.contains_key(*k)).map(|(_, v)| v.clone()).collect(),
        extra: m.iter().filter(|(k, _)| !r.contains_key(*k)).map(|(_, v)| v.clone()).collect(),
        reordered: Vec::new(),
        matched,
        reference_total: r.len(),
        model_total: m.len(),
        match_ratio: ratio(matched, r.len()),
    }
}

/// Four-aspect comparison of one model against one template. Roles come
/// from lanes; tools from GQ3 answers on nodes and milestones; methods from
/// `methods` metadata.
pub fn diff(
    model: &ProcessModel,
    milestones: &[Milestone],
    reference: &ReferenceProcess,
    aliases: &AliasTable,
    thresholds: Thresholds,
) -> DeviationReport {
    let roles: BTreeSet<String> =
        model.lanes.iter().map(|l| l.role_name.trim().to_string()).filter(|r| !r.is_empty()).collect();
    let methods: BTreeSet<String> = model.nodes.iter().flat_map(|n| n.meta.methods.iter().cloned()).collect();
    let tools: BTreeSet<String> = model
        .nodes
        .iter()
        .flat_map(|n| n.meta.gq3.iter().cloned())
        .chain(milestones.iter().filter(|m| m.model_id == model.model_id).flat_map(|m| m.gq.gq3_tools.iter().cloned()))
        .collect();

    let diffs = vec![
        diff_steps(&reference.steps, &model_steps(model), aliases),
        diff_set(Aspect::Roles, &reference.roles, &roles, aliases),
        diff_set(Aspect::Methods, &reference.methods, &methods, aliases),
        diff_set(Aspect::Tools, &reference.tools, &tools, aliases),
    ];
    let verdict = if diffs.iter().all(AspectDiff::is_full_match) {
        Verdict::Conforming
    } else if diffs.iter().any(|d| d.match_ratio < thresholds.major_below) {
        Verdict::MajorDeviation
    } else {
        Verdict::MinorDeviation
    };
    DeviationReport { model_id: model.model_id.clone(), ref_id: reference.ref_id.clone(), diffs, verdict }
}

/// Diffs every (model, template) pair the bindings select, ordered by
/// model id then template id.
pub fn diff_all(
    pyramid: &Pyramid,
    milestones: &[Milestone],
    references: &[ReferenceProcess],
    thresholds: Thresholds,
) -> Vec<DeviationReport> {
    let mut reports: Vec<DeviationReport> = pyramid
        .models()
        .flat_map(|model| {
            references
                .iter()
                .filter(|r| r.binding.matches(model))
                .map(move |r| diff(model, milestones, r, &pyramid.settings.alias_table, thresholds))
        })
        .collect();
    reports.sort_by(|a, b| (&a.model_id, &a.ref_id).cmp(&(&b.model_id, &b.ref_id)));
    reports
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VvLink {
    pub right_model: String,
    pub left_model: String,
    pub right_template: String,
    pub left_template: String,
    /// Pairs (right milestone, output-bearing left milestone) joined by an
    /// upstream data path.
    pub iterations: usize,
}

/// Each model bound to a right-side template must reach, upstream through
/// data edges, an output-bearing milestone of a model bound to its
/// counterpart.
pub fn check_vv_links(
    pyramid: &Pyramid,
    graph: &DependencyGraph,
    milestones: &[Milestone],
    references: &[ReferenceProcess],
) -> (Vec<Finding>, Vec<VvLink>) {
    let mut backward: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in graph.edges.iter().filter(|e| e.status.carries_data()) {
        backward.entry(e.consumer.as_str()).or_default().push(e.producer.as_str());
    }
    let upstream = |start: &str| -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.to_string()];
        while let Some(n) = stack.pop() {
            for &p in backward.get(n.as_str()).into_iter().flatten() {
                if seen.insert(p.to_string()) {
                    stack.push(p.to_string());
                }
            }
        }
        seen
    };
    let bound =
        |r: &ReferenceProcess| -> Vec<&ProcessModel> { pyramid.models().filter(|m| r.binding.matches(m)).collect() };
    let by_id: BTreeMap<&str, &ReferenceProcess> = references.iter().map(|r| (r.ref_id.as_str(), r)).collect();

    let mut findings = Vec::new();
    let mut links = Vec::new();
    for right in references.iter().filter(|r| r.side == Side::Right) {
        let Some(left) = right.counterpart.as_deref().and_then(|c| by_id.get(c)) else { continue };
        let lefts = bound(left);
        let rights = bound(right);
        if lefts.is_empty() && !rights.is_empty() {
            findings.push(Finding::info(
                codes::VV_UNBOUND,
                &right.ref_id,
                format!("counterpart template {} binds no model", left.ref_id),
            ));
            continue;
        }
        for r_model in &rights {
            let r_upstream: Vec<BTreeSet<String>> = milestones
                .iter()
                .filter(|m| m.model_id == r_model.model_id)
                .map(|m| upstream(&m.milestone_id))
                .collect();
            for l_model in &lefts {
                let sources: Vec<&str> = milestones
                    .iter()
                    .filter(|m| m.model_id == l_model.model_id && !m.gq.gq6_outputs.is_empty())
                    .map(|m| m.milestone_id.as_str())
                    .collect();
                let iterations = r_upstream.iter().map(|up| sources.iter().filter(|s| up.contains(**s)).count()).sum();
                if iterations == 0 {
                    findings.push(Finding::error(
                        codes::VV_UNLINKED,
                        &r_model.model_id,
                        format!(
                            "{} ({}) consumes nothing produced by its design counterpart {} ({})",
                            r_model.model_id, right.ref_id, l_model.model_id, left.ref_id
                        ),
                    ));
                }
                links.push(VvLink {
                    right_model: r_model.model_id.clone(),
                    left_model: l_model.model_id.clone(),
                    right_template: right.ref_id.clone(),
                    left_template: left.ref_id.clone(),
                    iterations,
                });
            }
        }
    }
    (findings, links)
}

/// Milestones must survive a revision; new intermediate milestones are fine.
pub fn check_milestone_retention(before: &[Milestone], after: &[Milestone]) -> Vec<Finding> {
    let before_ids: BTreeMap<&str, &Milestone> = before.iter().map(|m| (m.milestone_id.as_str(), m)).collect();
    let after_ids: BTreeMap<&str, &Milestone> = after.iter().map(|m| (m.milestone_id.as_str(), m)).collect();
    let mut findings = Vec::new();
    for (id, m) in &before_ids {
        if !after_ids.contains_key(id) {
            findings.push(Finding::error(
                codes::MILESTONE_DROPPED,
                m.subject(),
                format!("milestone {:?} was removed by the revision", m.name),
            ));
        }
    }
    for (id, m) in &after_ids {
        if before_ids.contains_key(id) {
            continue;
        }
        findings.push(if m.kind == MilestoneKind::Intermediate {
            Finding::info(codes::ADDED_INTERMEDIATE, m.subject(), format!("new intermediate milestone {:?}", m.name))
        } else {
            Finding::warning(codes::ADDED_BOUNDARY, m.subject(), format!("new {:?} milestone {:?}", m.kind, m.name))
        });
    }
    findings
}
