use std::collections::{BTreeMap, BTreeSet};

use super::anchor::{incoming_chain, is_milestone_event, node_weight, resolve_anchor, AnchorResolution};
use super::model::{FlowGraph, NodeKind, ProcessModel};
use crate::finding::{codes, Finding};
use crate::ingest::duration::Duration;
use crate::timeline::{GqRecord, Milestone, MilestoneKind};

/// Bundle-wide id of a model-local data object.
pub fn namespaced_object(model_id: &str, object_id: &str) -> String {
    format!("{model_id}/{object_id}")
}

/// Extracts every milestone event of `model` with its golden-question record
/// merged from metadata, lanes, durations and data associations.
///
/// Events reached from anchor timers that disagree produce an
/// `AMBIGUOUS-ANCHOR` error; the milestone is still returned.
pub fn extract_milestones(model: &ProcessModel) -> (Vec<Milestone>, Vec<Finding>) {
    let graph = model.graph();
    let mut milestones = Vec::new();
    let mut findings = Vec::new();

    for (idx, node) in model.nodes.iter().enumerate() {
        if !is_milestone_event(model, &graph, idx) {
            continue;
        }
        let kind = match node.kind {
            NodeKind::StartEvent => MilestoneKind::Start,
            NodeKind::IntermediateEvent => MilestoneKind::Intermediate,
            NodeKind::EndEvent => MilestoneKind::End,
            _ => unreachable!("milestones are events"),
        };
        if let AnchorResolution::Ambiguous { candidates } = resolve_anchor(model, &graph, idx) {
            let listed: Vec<String> = candidates.iter().map(|(a, off)| format!("{a} => {off} days")).collect();
            findings.push(Finding::error(
                codes::AMBIGUOUS_ANCHOR,
                model.subject(&node.node_id),
                format!("converging paths imply conflicting offsets: {}", listed.join(", ")),
            ));
        }
        milestones.push(build_milestone(model, &graph, idx, kind));
    }
    (milestones, findings)
}

fn build_milestone(model: &ProcessModel, graph: &FlowGraph, idx: usize, kind: MilestoneKind) -> Milestone {
    let node = &model.nodes[idx];
    let (chain, _) = incoming_chain(model, graph, idx);
    let mut objects: BTreeMap<String, String> = BTreeMap::new();

    let mut gq5 = BTreeSet::new();
    let mut gq6 = BTreeSet::new();
    let mut tools = node.meta.gq3.clone();
    for &c in chain.iter().chain(std::iter::once(&idx)) {
        let n = &model.nodes[c];
        gq5.extend(n.inputs.iter().map(|o| record_local(model, &mut objects, o)));
        gq6.extend(n.outputs.iter().map(|o| record_local(model, &mut objects, o)));
        tools.extend(n.meta.gq3.iter().cloned());
    }
    gq5.extend(node.meta.gq5.iter().map(|r| resolve_explicit(model, &mut objects, r)));
    gq6.extend(node.meta.gq6.iter().map(|r| resolve_explicit(model, &mut objects, r)));
    let mut gq8 = BTreeMap::new();
    for (reference, storage) in &node.meta.gq8 {
        gq8.insert(resolve_explicit(model, &mut objects, reference), storage.clone());
    }
    for d in &model.data_objects {
        let id = namespaced_object(&model.model_id, &d.object_id);
        if let Some(storage) = &d.storage_ref {
            if gq5.contains(&id) || gq6.contains(&id) {
                gq8.entry(id).or_insert_with(|| storage.clone());
            }
        }
    }

    let gq4 = node.duration.or_else(|| chain_duration(model, graph, &chain, idx));
    let gq2 = node.meta.gq2.clone().or_else(|| model.role_of(&node.node_id).map(str::to_string));

    Milestone {
        milestone_id: node.node_id.clone(),
        name: if node.name.trim().is_empty() { node.node_id.clone() } else { node.name.clone() },
        kind,
        model_id: model.model_id.clone(),
        event_node: node.node_id.clone(),
        declared_offset: node.meta.declared_offset,
        terminal: node.meta.terminal.unwrap_or(false),
        aligns_with: node.meta.aligns_with.clone(),
        gq: GqRecord {
            gq1_process: Some(node.meta.gq1.clone().unwrap_or_else(|| model.model_id.clone())),
            gq2_role: gq2,
            gq3_tools: tools,
            gq4_duration: gq4,
            gq5_inputs: gq5,
            gq6_outputs: gq6,
            gq7_consumers: node.meta.gq7.clone(),
            gq8_storage: gq8,
        },
        objects,
    }
}

fn record_local(model: &ProcessModel, objects: &mut BTreeMap<String, String>, object_id: &str) -> String {
    let id = namespaced_object(&model.model_id, object_id);
    let name = model.data_object(object_id).map_or(object_id, |d| d.name.as_str());
    objects.insert(id.clone(), name.to_string());
    id
}

/// Explicit references: local id, then local name, else an external name.
fn resolve_explicit(model: &ProcessModel, objects: &mut BTreeMap<String, String>, reference: &str) -> String {
    if model.data_object(reference).is_some() {
        return record_local(model, objects, reference);
    }
    if let Some(d) = model.data_objects.iter().find(|d| d.name == reference) {
        return record_local(model, objects, &d.object_id);
    }
    let id = namespaced_object(&model.model_id, reference);
    objects.insert(id.clone(), reference.to_string());
    id
}

/// Longest path of node weights through the incoming chain into `target`.
/// `None` when the chain carries no time or is cyclic.
fn chain_duration(model: &ProcessModel, graph: &FlowGraph, chain: &[usize], target: usize) -> Option<Duration> {
    if chain.is_empty() {
        return None;
    }
    let mut in_chain = vec![false; graph.len()];
    for &c in chain {
        in_chain[c] = true;
    }
    // Kahn order over the chain subgraph.
    let mut indegree = vec![0usize; graph.len()];
    for &c in chain {
        indegree[c] = graph.pred[c].iter().filter(|&&p| in_chain[p]).count();
    }
    let mut ready: Vec<usize> = chain.iter().copied().filter(|&c| indegree[c] == 0).collect();
    let mut best = vec![0u64; graph.len()];
    let mut visited = 0;
    while let Some(n) = ready.pop() {
        visited += 1;
        let reach = best[n] + node_weight(&model.nodes[n]);
        for &s in &graph.succ[n] {
            if in_chain[s] {
                best[s] = best[s].max(reach);
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    ready.push(s);
                }
            }
        }
    }
    if visited != chain.len() {
        return None;
    }
    let total =
        graph.pred[target].iter().filter(|&&p| in_chain[p]).map(|&p| best[p] + node_weight(&model.nodes[p])).max()?;
    (total > 0).then(|| Duration::days(total))
}
