use std::fmt::Write;

use serde::Serialize;

use super::{DependencyGraph, EdgeStatus};
use crate::pyramid::Pyramid;
use crate::timeline::{Milestone, OffsetTable};

fn quote(text: &str) -> String {
    format!("\"{}\"", text.replace('\\', "\\\\").replace('"', "\\\""))
}

fn edge_style(status: EdgeStatus) -> &'static str {
    match status {
        EdgeStatus::DeclaredAndMatched => "style=solid",
        EdgeStatus::InferredUndeclared => "style=dashed",
        EdgeStatus::DeclaredUnmatched => "style=dotted, color=red",
    }
}

/// GraphViz rendering: nodes labeled `name@offset`, edges labeled with the
/// shared data objects and styled by status.
pub fn to_dot(graph: &DependencyGraph, milestones: &[Milestone], table: &OffsetTable) -> String {
    let mut out = String::from("digraph dependencies {\n  rankdir=LR;\n  node [shape=invtriangle];\n");
    for id in &graph.nodes {
        let name = milestones.iter().find(|m| &m.milestone_id == id).map_or(id.as_str(), |m| m.name.as_str());
        let offset = table.get(id).map_or("?".to_string(), |o| o.to_string());
        let _ = writeln!(out, "  {} [label={}];", quote(id), quote(&format!("{name}@{offset}")));
    }
    for e in &graph.edges {
        let label = e.via.iter().cloned().collect::<Vec<_>>().join(", ");
        let _ = writeln!(
            out,
            "  {} -> {} [label={}, {}];",
            quote(&e.producer),
            quote(&e.consumer),
            quote(&label),
            edge_style(e.status)
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonEdge {
    pub producer: String,
    pub consumer: String,
    pub via: Vec<String>,
    pub status: EdgeStatus,
    pub producer_level: Option<u32>,
    pub consumer_level: Option<u32>,
    /// Producer and consumer sit at the same pyramid level.
    pub same_level: bool,
}

pub fn to_json_edges(graph: &DependencyGraph, pyramid: &Pyramid) -> Vec<JsonEdge> {
    let level = |m: &str| graph.owners.get(m).and_then(|model| pyramid.level_of(model));
    graph
        .edges
        .iter()
        .map(|e| {
            let producer_level = level(&e.producer);
            let consumer_level = level(&e.consumer);
            JsonEdge {
                producer: e.producer.clone(),
                consumer: e.consumer.clone(),
                via: e.via.iter().cloned().collect(),
                status: e.status,
                producer_level,
                consumer_level,
                same_level: producer_level.is_some() && producer_level == consumer_level,
            }
        })
        .collect()
}
