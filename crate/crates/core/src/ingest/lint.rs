//! Well-formedness rules R1 to R4 for a single process model.

use super::anchor::is_milestone_event;
use super::model::{NodeKind, ProcessModel};
use crate::finding::{codes, Finding};

/// Returns one finding per rule violation. Never fails.
///
/// * R1: node not reachable from the start event.
/// * R2: task without duration, input or output.
/// * R3: node outside every lane that names a role.
/// * R4: intermediate or end event that neither carries a timer nor follows
///   one. An untimed start event is simply not a milestone.
pub fn check_wellformed(model: &ProcessModel) -> Vec<Finding> {
    let graph = model.graph();
    let mut findings = Vec::new();

    if let Some(start) = model.start_node() {
        let reach = graph.reachable_from(graph.index[&start.node_id]);
        for (i, node) in model.nodes.iter().enumerate() {
            if !reach[i] {
                findings.push(Finding::warning(
                    codes::R1_UNREACHABLE,
                    model.subject(&node.node_id),
                    format!("{:?} is not reachable from the start event and looks unnecessary", node.name),
                ));
            }
        }
    }

    for node in model.nodes.iter().filter(|n| n.kind == NodeKind::Task) {
        let subject = model.subject(&node.node_id);
        if node.duration.is_none() {
            findings.push(Finding::error(codes::R2_NO_DURATION, &subject, "task has no execution time (gq4)"));
        }
        if node.inputs.is_empty() {
            findings.push(Finding::error(codes::R2_NO_INPUT, &subject, "task has no input data object"));
        }
        if node.outputs.is_empty() {
            findings.push(Finding::error(codes::R2_NO_OUTPUT, &subject, "task has no output data object"));
        }
    }

    for node in &model.nodes {
        if model.role_of(&node.node_id).is_none() {
            findings.push(Finding::error(
                codes::R3_NO_ROLE,
                model.subject(&node.node_id),
                "node is not assigned to a lane with a role",
            ));
        }
    }

    for (i, node) in model.nodes.iter().enumerate() {
        if matches!(node.kind, NodeKind::IntermediateEvent | NodeKind::EndEvent)
            && !node.is_time_symbol()
            && !is_milestone_event(model, &graph, i)
        {
            findings.push(Finding::warning(
                codes::R4_NO_TIMER,
                model.subject(&node.node_id),
                "event has no accompanying time symbol on its incoming chain",
            ));
        }
    }

    findings
}
