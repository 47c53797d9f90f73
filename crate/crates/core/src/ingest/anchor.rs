//! Anchor-timer resolution and the incoming-chain rules that decide which
//! events count as milestones.

use super::model::{FlowGraph, FlowNode, NodeKind, ProcessModel, TimerMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnchorResolution {
    Resolved(ResolvedAnchor),
    /// No anchor timer upstream.
    Unanchored,
    /// The flow between an anchor and the event contains a cycle.
    Cycle {
        through: Vec<String>,
    },
    /// Several nearest anchors imply different offsets.
    Ambiguous {
        candidates: Vec<(String, i64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedAnchor {
    pub anchor_node: String,
    pub anchor_days: u64,
    /// Longest sum of task durations and elapsed waits from anchor to event.
    pub path_days: u64,
    /// Signed days relative to SOP.
    pub offset: i64,
}

/// Time a node adds to a path passing through it.
pub fn node_weight(node: &FlowNode) -> u64 {
    match node.kind {
        NodeKind::Task | NodeKind::CallActivity => node.duration.map_or(0, |d| d.days),
        k if k.is_event() => match node.timer {
            Some(t) if t.mode == TimerMode::Elapsed => t.amount.days,
            _ => 0,
        },
        _ => 0,
    }
}

/// Non-event nodes feeding `target` without passing another event
/// (the "incoming chain"), plus the events where that walk stops.
pub fn incoming_chain(model: &ProcessModel, graph: &FlowGraph, target: usize) -> (Vec<usize>, Vec<usize>) {
    let mut seen = vec![false; graph.len()];
    let mut chain = Vec::new();
    let mut boundary = Vec::new();
    let mut stack: Vec<usize> = graph.pred[target].clone();
    seen[target] = true;
    while let Some(n) = stack.pop() {
        if seen[n] {
            continue;
        }
        seen[n] = true;
        if model.nodes[n].kind.is_event() {
            boundary.push(n);
        } else {
            chain.push(n);
            stack.extend(graph.pred[n].iter().copied().filter(|&p| !seen[p]));
        }
    }
    chain.sort_unstable();
    boundary.sort_unstable();
    (chain, boundary)
}

/// Whether the event at `idx` is a milestone: a start/intermediate/end event
/// (not itself a bare time symbol) that carries a timer or whose incoming
/// chain starts at a timer-bearing event.
pub fn is_milestone_event(model: &ProcessModel, graph: &FlowGraph, idx: usize) -> bool {
    let node = &model.nodes[idx];
    if !node.kind.is_event() || node.is_time_symbol() {
        return false;
    }
    if node.timer.is_some() {
        return true;
    }
    let (_, boundary) = incoming_chain(model, graph, idx);
    boundary.iter().any(|&b| model.nodes[b].timer.is_some())
}

/// Resolves the SOP offset of the event at `target` from its nearest
/// upstream anchor timers, taking the longest path when branches diverge.
pub fn resolve_anchor(model: &ProcessModel, graph: &FlowGraph, target: usize) -> AnchorResolution {
    let target_node = &model.nodes[target];
    if let Some(timer) = target_node.timer.filter(|_| target_node.is_anchor()) {
        return AnchorResolution::Resolved(ResolvedAnchor {
            anchor_node: target_node.node_id.clone(),
            anchor_days: timer.amount.days,
            path_days: 0,
            offset: -timer.amount.as_signed(),
        });
    }

    // Backward region from the target, not expanding past anchors.
    let mut in_region = vec![false; graph.len()];
    let mut anchors = Vec::new();
    let mut stack = vec![target];
    in_region[target] = true;
    while let Some(n) = stack.pop() {
        for &p in &graph.pred[n] {
            if in_region[p] {
                continue;
            }
            if model.nodes[p].is_anchor() {
                if !anchors.contains(&p) {
                    anchors.push(p);
                }
            } else {
                in_region[p] = true;
                stack.push(p);
            }
        }
    }
    if anchors.is_empty() {
        return AnchorResolution::Unanchored;
    }
    anchors.sort_unstable();

    let weights: Vec<u64> = model.nodes.iter().map(node_weight).collect();
    let mut memo: Vec<Option<u64>> = vec![None; graph.len()];
    memo[target] = Some(0);
    let mut candidates = Vec::new();
    for &a in &anchors {
        match longest_to_target(graph, &weights, &in_region, &mut memo, a) {
            Ok(days) => {
                let amount = model.nodes[a].timer.map_or(0, |t| t.amount.as_signed());
                candidates.push((a, days, -amount + days as i64));
            }
            Err(cycle) => {
                return AnchorResolution::Cycle {
                    through: cycle.into_iter().map(|i| model.nodes[i].node_id.clone()).collect(),
                }
            }
        }
    }
    let first = candidates[0];
    if candidates.iter().all(|c| c.2 == first.2) {
        AnchorResolution::Resolved(ResolvedAnchor {
            anchor_node: model.nodes[first.0].node_id.clone(),
            anchor_days: model.nodes[first.0].timer.map_or(0, |t| t.amount.days),
            path_days: first.1,
            offset: first.2,
        })
    } else {
        AnchorResolution::Ambiguous {
            candidates: candidates.into_iter().map(|(a, _, off)| (model.nodes[a].node_id.clone(), off)).collect(),
        }
    }
}

/// Longest weighted path from `start` to the memoized target, moving only
/// through region nodes. Iterative DFS; returns the nodes of a cycle if one
/// is met.
fn longest_to_target(
    graph: &FlowGraph,
    weights: &[u64],
    in_region: &[bool],
    memo: &mut [Option<u64>],
    start: usize,
) -> Result<u64, Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; graph.len()];
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    mark[start] = Mark::Active;
    while let Some(&mut (node, ref mut next)) = stack.last_mut() {
        if memo[node].is_some() && node != start {
            mark[node] = Mark::Done;
            stack.pop();
            continue;
        }
        let succ = &graph.succ[node];
        if *next < succ.len() {
            let s = succ[*next];
            *next += 1;
            if !in_region[s] {
                continue;
            }
            match mark[s] {
                Mark::Active => {
                    let pos = stack.iter().position(|&(n, _)| n == s).unwrap_or(0);
                    return Err(stack[pos..].iter().map(|&(n, _)| n).collect());
                }
                Mark::Done => {}
                Mark::New => {
                    if memo[s].is_none() {
                        mark[s] = Mark::Active;
                        stack.push((s, 0));
                    }
                }
            }
        } else {
            let best = succ.iter().filter(|&&s| in_region[s]).filter_map(|&s| memo[s].map(|b| b + weights[s])).max();
            if memo[node].is_none() {
                memo[node] = best;
            }
            mark[node] = Mark::Done;
            stack.pop();
        }
    }
    Ok(memo[start].unwrap_or(0))
}
