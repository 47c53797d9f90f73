use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::duration::Duration;
use crate::finding::Finding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatewayKind {
    Exclusive,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Task,
    StartEvent,
    IntermediateEvent,
    EndEvent,
    CallActivity,
    Gateway(GatewayKind),
}

impl NodeKind {
    pub fn is_event(self) -> bool {
        matches!(self, NodeKind::StartEvent | NodeKind::IntermediateEvent | NodeKind::EndEvent)
    }

    /// BPMN element name used when writing the node back out.
    pub fn element_name(self) -> &'static str {
        match self {
            NodeKind::Task => "task",
            NodeKind::StartEvent => "startEvent",
            NodeKind::IntermediateEvent => "intermediateCatchEvent",
            NodeKind::EndEvent => "endEvent",
            NodeKind::CallActivity => "callActivity",
            NodeKind::Gateway(GatewayKind::Exclusive) => "exclusiveGateway",
            NodeKind::Gateway(GatewayKind::Parallel) => "parallelGateway",
        }
    }

    pub fn from_element_name(name: &str) -> Option<Self> {
        Some(match name {
            "task" => NodeKind::Task,
            "startEvent" => NodeKind::StartEvent,
            "intermediateCatchEvent" => NodeKind::IntermediateEvent,
            "endEvent" => NodeKind::EndEvent,
            "callActivity" => NodeKind::CallActivity,
            "exclusiveGateway" => NodeKind::Gateway(GatewayKind::Exclusive),
            "parallelGateway" => NodeKind::Gateway(GatewayKind::Parallel),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimerMode {
    /// The timer states how long before SOP it fires.
    AnchorBeforeSop,
    /// The timer is an in-flow wait of the given length.
    Elapsed,
}

impl TimerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TimerMode::AnchorBeforeSop => "anchor-before-sop",
            TimerMode::Elapsed => "elapsed",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "anchor-before-sop" => Some(TimerMode::AnchorBeforeSop),
            "elapsed" => Some(TimerMode::Elapsed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimerDef {
    pub mode: TimerMode,
    pub amount: Duration,
}

/// Golden-question answers and related annotations read from a node's
/// `extensionElements` block. Data-object references are kept as written.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub gq1: Option<String>,
    pub gq2: Option<String>,
    pub gq3: BTreeSet<String>,
    pub gq5: BTreeSet<String>,
    pub gq6: BTreeSet<String>,
    pub gq7: BTreeSet<String>,
    pub gq8: BTreeMap<String, String>,
    pub terminal: Option<bool>,
    pub declared_offset: Option<i64>,
    pub aligns_with: BTreeSet<String>,
    pub methods: BTreeSet<String>,
}

impl NodeMeta {
    pub fn is_empty(&self) -> bool {
        *self == NodeMeta::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowNode {
    pub node_id: String,
    pub kind: NodeKind,
    pub name: String,
    pub duration: Option<Duration>,
    pub timer: Option<TimerDef>,
    pub lane_ref: Option<String>,
    pub inputs: BTreeSet<String>,
    pub outputs: BTreeSet<String>,
    pub meta: NodeMeta,
}

impl FlowNode {
    pub fn new(node_id: impl Into<String>, kind: NodeKind, name: impl Into<String>) -> Self {
        FlowNode {
            node_id: node_id.into(),
            kind,
            name: name.into(),
            duration: None,
            timer: None,
            lane_ref: None,
            inputs: BTreeSet::new(),
            outputs: BTreeSet::new(),
            meta: NodeMeta::default(),
        }
    }

    /// An intermediate event whose only role is the time symbol.
    pub fn is_time_symbol(&self) -> bool {
        self.kind == NodeKind::IntermediateEvent && self.timer.is_some()
    }

    pub fn is_anchor(&self) -> bool {
        matches!(self.timer, Some(TimerDef { mode: TimerMode::AnchorBeforeSop, .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFlow {
    pub flow_id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub lane_id: String,
    pub role_name: String,
    pub member_nodes: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataObject {
    pub object_id: String,
    pub name: String,
    pub storage_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub model_id: String,
    pub name: String,
    pub nodes: Vec<FlowNode>,
    pub flows: Vec<SequenceFlow>,
    pub lanes: Vec<Lane>,
    pub data_objects: Vec<DataObject>,
    pub call_targets: BTreeMap<String, String>,
    pub source_path: String,
    /// Info findings raised while parsing (ignored elements and keys).
    pub parse_notes: Vec<Finding>,
}

impl ProcessModel {
    pub fn node(&self, node_id: &str) -> Option<&FlowNode> {
        self.nodes.iter().find(|n| n.node_id == node_id)
    }

    pub fn data_object(&self, object_id: &str) -> Option<&DataObject> {
        self.data_objects.iter().find(|d| d.object_id == object_id)
    }

    pub fn start_node(&self) -> Option<&FlowNode> {
        self.nodes.iter().find(|n| n.kind == NodeKind::StartEvent)
    }

    pub fn lane(&self, lane_id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.lane_id == lane_id)
    }

    /// Role of the lane a node sits in, if that lane has a non-empty role.
    pub fn role_of(&self, node_id: &str) -> Option<&str> {
        self.lanes
            .iter()
            .filter(|l| l.member_nodes.contains(node_id))
            .map(|l| l.role_name.trim())
            .find(|r| !r.is_empty())
    }

    pub fn subject(&self, node_id: &str) -> String {
        format!("{}/{}", self.model_id, node_id)
    }

    pub fn graph(&self) -> FlowGraph {
        FlowGraph::new(self)
    }
}

/// Index-based adjacency over a model's sequence flows.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    pub index: HashMap<String, usize>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub fn new(model: &ProcessModel) -> Self {
        let index: HashMap<String, usize> =
            model.nodes.iter().enumerate().map(|(i, n)| (n.node_id.clone(), i)).collect();
        let mut succ = vec![Vec::new(); model.nodes.len()];
        let mut pred = vec![Vec::new(); model.nodes.len()];
        for flow in &model.flows {
            if let (Some(&s), Some(&t)) = (index.get(&flow.source), index.get(&flow.target)) {
                succ[s].push(t);
                pred[t].push(s);
            }
        }
        for list in succ.iter_mut().chain(pred.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        FlowGraph { index, succ, pred }
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    /// Forward reachability from `from`, including `from`.
    pub fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(n) = stack.pop() {
            for &s in &self.succ[n] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }
}
