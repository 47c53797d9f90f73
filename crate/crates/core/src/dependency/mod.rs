//! Milestone dependency graph inferred from data-object flow.
//!
//! An edge `p -> c` exists when something `p` outputs (GQ6) is an input of
//! `c` (GQ5), comparing data objects by normalized, alias-resolved name.
//! Declared consumers (GQ7) are cross-checked against these edges.

mod export;

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{to_dot, to_json_edges, JsonEdge};

use crate::finding::{codes, Finding};
use crate::names::AliasTable;
use crate::pyramid::Pyramid;
use crate::timeline::{Milestone, OffsetTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeStatus {
    DeclaredAndMatched,
    InferredUndeclared,
    DeclaredUnmatched,
}

impl EdgeStatus {
    pub fn carries_data(self) -> bool {
        !matches!(self, EdgeStatus::DeclaredUnmatched)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub producer: String,
    pub consumer: String,
    /// Canonical data-object names shared by producer and consumer; empty
    /// only for `DeclaredUnmatched`.
    pub via: BTreeSet<String>,
    pub status: EdgeStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<String>,
    /// Sorted by (producer, consumer).
    pub edges: Vec<DependencyEdge>,
    /// Owning model of each milestone.
    pub owners: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactSet {
    pub seed: String,
    /// Transitive consumers, by BFS layer then id.
    pub downstream: Vec<String>,
    /// Transitive producers, by BFS layer then id.
    pub upstream: Vec<String>,
    pub crossed_levels: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DependencyError {
    #[error("UNKNOWN-SEED: {0:?} is neither a milestone nor a model id")]
    UnknownSeed(String),
}

fn canonical_names<'a>(
    m: &'a Milestone,
    ids: &'a BTreeSet<String>,
    aliases: &'a AliasTable,
) -> impl Iterator<Item = String> + 'a {
    ids.iter().map(move |id| aliases.canonical(m.object_name(id)))
}

pub fn infer_edges(milestones: &[Milestone], aliases: &AliasTable) -> DependencyGraph {
    let mut graph = DependencyGraph::default();
    let mut declared: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut consumers_of: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for m in milestones {
        graph.nodes.insert(m.milestone_id.clone());
        graph.owners.entry(m.milestone_id.clone()).or_insert_with(|| m.model_id.clone());
        declared.entry(m.milestone_id.as_str()).or_default().extend(m.gq.gq7_consumers.iter().map(String::as_str));
        for key in canonical_names(m, &m.gq.gq5_inputs, aliases) {
            consumers_of.entry(key).or_default().insert(m.milestone_id.as_str());
        }
    }

    let mut via: BTreeMap<(&str, &str), BTreeSet<String>> = BTreeMap::new();
    for p in milestones {
        for key in canonical_names(p, &p.gq.gq6_outputs, aliases) {
            for &c in consumers_of.get(&key).into_iter().flatten() {
                if c != p.milestone_id {
                    via.entry((p.milestone_id.as_str(), c)).or_default().insert(key.clone());
                }
            }
        }
    }
    for (&producer, consumers) in &declared {
        for &c in consumers {
            if c != producer && graph.nodes.contains(c) {
                via.entry((producer, c)).or_default();
            }
        }
    }

    graph.edges = via
        .into_iter()
        .map(|((p, c), objects)| {
            let is_declared = declared.get(p).is_some_and(|d| d.contains(c));
            let status = match (objects.is_empty(), is_declared) {
                (true, _) => EdgeStatus::DeclaredUnmatched,
                (false, true) => EdgeStatus::DeclaredAndMatched,
                (false, false) => EdgeStatus::InferredUndeclared,
            };
            DependencyEdge { producer: p.to_string(), consumer: c.to_string(), via: objects, status }
        })
        .collect();
    graph
}

pub fn cross_check_declared(graph: &DependencyGraph) -> Vec<Finding> {
    graph
        .edges
        .iter()
        .filter_map(|e| match e.status {
            EdgeStatus::DeclaredAndMatched => None,
            EdgeStatus::InferredUndeclared => Some(Finding::warning(
                codes::UNDECLARED_DEPENDENCY,
                &e.producer,
                format!(
                    "{} consumes {} from {} but is not declared in GQ7",
                    e.consumer,
                    e.via.iter().cloned().collect::<Vec<_>>().join(", "),
                    e.producer
                ),
            )),
            EdgeStatus::DeclaredUnmatched => Some(Finding::error(
                codes::DECLARED_UNMATCHED,
                &e.producer,
                format!("GQ7 names {} as consumer but no output of {} is its input", e.consumer, e.producer),
            )),
        })
        .collect()
}

/// Strongly connected components with more than one member, each sorted,
/// in lexicographic order.
pub fn cycles(graph: &DependencyGraph) -> Vec<Vec<String>> {
    let mut g: DiGraph<&str, ()> = DiGraph::new();
    let index: BTreeMap<&str, _> = graph.nodes.iter().map(|n| (n.as_str(), g.add_node(n.as_str()))).collect();
    for e in &graph.edges {
        if let (Some(&a), Some(&b)) = (index.get(e.producer.as_str()), index.get(e.consumer.as_str())) {
            g.add_edge(a, b, ());
        }
    }
    let mut out: Vec<Vec<String>> = tarjan_scc(&g)
        .into_iter()
        .filter(|scc| scc.len() > 1)
        .map(|scc| {
            let mut members: Vec<String> = scc.into_iter().map(|i| g[i].to_string()).collect();
            members.sort();
            members
        })
        .collect();
    out.sort();
    out
}

/// Producers must not be scheduled after their consumers; equal offsets are
/// allowed. Cycles are reported once per strongly connected component.
pub fn check_temporal(graph: &DependencyGraph, table: &OffsetTable) -> Vec<Finding> {
    let mut findings = Vec::new();
    for n in &graph.nodes {
        if table.get(n).is_none() {
            findings.push(Finding::info(codes::NOT_TIMED, n, "no resolved offset; temporal checks skipped"));
        }
    }
    for e in &graph.edges {
        if let (Some(p), Some(c)) = (table.get(&e.producer), table.get(&e.consumer)) {
            if p > c {
                findings.push(Finding::error(
                    codes::TEMPORAL_VIOLATION,
                    &e.producer,
                    format!("producer {} at {p} days is later than consumer {} at {c} days", e.producer, e.consumer),
                ));
            }
        }
    }
    for scc in cycles(graph) {
        findings.push(Finding::error(codes::CYCLE, &scc[0], format!("dependency cycle among {{{}}}", scc.join(", "))));
    }
    findings
}

fn layered_bfs(seeds: &BTreeSet<String>, adjacency: &BTreeMap<&str, BTreeSet<&str>>) -> Vec<String> {
    let mut visited: BTreeSet<&str> = seeds.iter().map(String::as_str).collect();
    let mut layer: BTreeSet<&str> = visited.clone();
    let mut out = Vec::new();
    while !layer.is_empty() {
        let mut next = BTreeSet::new();
        for n in &layer {
            for &m in adjacency.get(n).into_iter().flatten() {
                if !visited.contains(m) {
                    next.insert(m);
                }
            }
        }
        visited.extend(next.iter().copied());
        out.extend(next.iter().map(|s| s.to_string()));
        layer = next;
    }
    out
}

/// Transitive consumers and producers of a milestone, or of every milestone
/// of a model. Only data-carrying edges propagate.
pub fn impact(graph: &DependencyGraph, pyramid: &Pyramid, seed: &str) -> Result<ImpactSet, DependencyError> {
    let seeds: BTreeSet<String> = if graph.nodes.contains(seed) {
        BTreeSet::from([seed.to_string()])
    } else if pyramid.model(seed).is_some() {
        graph.owners.iter().filter(|(_, model)| *model == seed).map(|(m, _)| m.clone()).collect()
    } else {
        return Err(DependencyError::UnknownSeed(seed.to_string()));
    };
    let mut forward: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut backward: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in graph.edges.iter().filter(|e| e.status.carries_data()) {
        forward.entry(e.producer.as_str()).or_default().insert(e.consumer.as_str());
        backward.entry(e.consumer.as_str()).or_default().insert(e.producer.as_str());
    }
    let downstream = layered_bfs(&seeds, &forward);
    let upstream = layered_bfs(&seeds, &backward);
    let mut crossed_levels: BTreeSet<u32> = seeds
        .iter()
        .chain(&downstream)
        .chain(&upstream)
        .filter_map(|m| graph.owners.get(m))
        .filter_map(|model| pyramid.level_of(model))
        .collect();
    if seeds.is_empty() {
        crossed_levels.extend(pyramid.level_of(seed));
    }
    Ok(ImpactSet { seed: seed.to_string(), downstream, upstream, crossed_levels })
}

/// Data objects produced by milestones of more than one model.
pub fn find_redundant(milestones: &[Milestone], aliases: &AliasTable) -> Vec<Finding> {
    let mut producers: BTreeMap<String, BTreeSet<(&str, &str)>> = BTreeMap::new();
    for m in milestones {
        for key in canonical_names(m, &m.gq.gq6_outputs, aliases) {
            producers.entry(key).or_default().insert((m.model_id.as_str(), m.milestone_id.as_str()));
        }
    }
    producers
        .into_iter()
        .filter(|(_, ps)| ps.iter().map(|(model, _)| model).collect::<BTreeSet<_>>().len() > 1)
        .map(|(object, ps)| {
            let listed: Vec<String> = ps.iter().map(|(model, m)| format!("{model}/{m}")).collect();
            Finding::warning(
                codes::REDUNDANT_OUTPUT,
                &object,
                format!("{object:?} is produced in several models by {}", listed.join(", ")),
            )
        })
        .collect()
}
