//! Reader for the supported BPMN 2.0 subset.
//!
//! Elements are matched by local name so any namespace prefix works.
//! Anything outside the subset becomes an `UNSUPPORTED-ELEMENT` info note on
//! the returned model.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use roxmltree::{Document, Node};
use thiserror::Error;

use super::duration::{Duration, DurationError};
use super::model::{DataObject, FlowNode, Lane, NodeKind, ProcessModel, SequenceFlow, TimerDef, TimerMode};
use crate::finding::{codes, Finding};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml { line: u32, column: u32, message: String },
    #[error("document contains no <process> element")]
    NoProcess,
    #[error("<{element}> at line {line}, column {column} has no id attribute")]
    MissingId { element: String, line: u32, column: u32 },
    #[error("duplicate id {id:?}: first at line {first_line}:{first_column}, again at line {line}:{column}")]
    DuplicateId { id: String, first_line: u32, first_column: u32, line: u32, column: u32 },
    #[error("sequence flow {flow_id:?} references unknown node {missing:?}")]
    DanglingFlow { flow_id: String, missing: String },
    #[error("{context} references unknown id {reference:?}")]
    DanglingReference { context: String, reference: String },
    #[error("process has no start event")]
    MissingStartEvent,
    #[error("process has more than one start event: {}", ids.join(", "))]
    MultipleStartEvents { ids: Vec<String> },
    #[error("process has no end event")]
    MissingEndEvent,
    #[error("call activity {node_id:?} has no calledElement")]
    MissingCallTarget { node_id: String },
    #[error("node {node_id:?}: {source}")]
    InvalidDuration { node_id: String, source: DurationError },
    #[error("node {node_id:?}: metadata key {key:?} has invalid value {value:?}")]
    InvalidMetadata { node_id: String, key: String, value: String },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Xml { .. } => "XML",
            ParseError::NoProcess => "NO-PROCESS",
            ParseError::MissingId { .. } => "MISSING-ID",
            ParseError::DuplicateId { .. } => "DUPLICATE-ID",
            ParseError::DanglingFlow { .. } => "DANGLING-FLOW",
            ParseError::DanglingReference { .. } => "DANGLING-REFERENCE",
            ParseError::MissingStartEvent => "NO-START-EVENT",
            ParseError::MultipleStartEvents { .. } => "MULTIPLE-START-EVENTS",
            ParseError::MissingEndEvent => "NO-END-EVENT",
            ParseError::MissingCallTarget { .. } => "NO-CALL-TARGET",
            ParseError::InvalidDuration { .. } => "INVALID-DURATION",
            ParseError::InvalidMetadata { .. } => "INVALID-METADATA",
        }
    }
}

/// Metadata keys understood inside `extensionElements`.
pub mod keys {
    pub const GQ: [&str; 8] = ["gq1", "gq2", "gq3", "gq4", "gq5", "gq6", "gq7", "gq8"];
    pub const TERMINAL: &str = "terminal";
    pub const DECLARED_OFFSET: &str = "declaredOffset";
    pub const TIMER_MODE: &str = "timerMode";
    pub const ALIGNS_WITH: &str = "alignsWith";
    pub const METHODS: &str = "methods";
}

/// Separator for multi-valued metadata entries.
pub const LIST_SEPARATOR: char = ';';

struct Reader<'a, 'input> {
    doc: &'a Document<'input>,
    model_id: String,
    notes: Vec<Finding>,
    ids: HashMap<String, (u32, u32)>,
}

impl<'a, 'input> Reader<'a, 'input> {
    fn pos(&self, node: Node) -> (u32, u32) {
        let p = self.doc.text_pos_at(node.range().start);
        (p.row, p.col)
    }

    fn unsupported(&mut self, node: Node, context: &str) {
        let (line, column) = self.pos(node);
        self.notes.push(Finding::info(
            codes::UNSUPPORTED_ELEMENT,
            format!("{}/{}", self.model_id, context),
            format!("ignored <{}> at line {line}, column {column}", node.tag_name().name()),
        ));
    }

    fn claim_id(&mut self, node: Node) -> Result<String, ParseError> {
        let (line, column) = self.pos(node);
        let id = node
            .attribute("id")
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| ParseError::MissingId { element: node.tag_name().name().to_string(), line, column })?
            .to_string();
        if let Some(&(first_line, first_column)) = self.ids.get(&id) {
            return Err(ParseError::DuplicateId { id, first_line, first_column, line, column });
        }
        self.ids.insert(id.clone(), (line, column));
        Ok(id)
    }
}

fn child_texts<'a>(node: Node<'a, '_>, local: &'a str) -> impl Iterator<Item = String> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == local)
        .filter_map(|c| c.text().map(|t| t.trim().to_string()))
        .filter(|t| !t.is_empty())
}

fn split_list(value: &str) -> impl Iterator<Item = String> + '_ {
    value.split(LIST_SEPARATOR).map(str::trim).filter(|s| !s.is_empty()).map(String::from)
}

/// Key/value pairs from an `extensionElements` block. Any child element with
/// a `key` attribute counts; the value is the `value` attribute or the text.
fn extension_entries(node: Node) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for ext in node.children().filter(|c| c.is_element() && c.tag_name().name() == "extensionElements") {
        for entry in ext.descendants().filter(|c| c.is_element()) {
            if let Some(key) = entry.attribute("key") {
                let value = entry
                    .attribute("value")
                    .map(str::to_string)
                    .or_else(|| entry.text().map(str::to_string))
                    .unwrap_or_default();
                out.push((key.trim().to_string(), value.trim().to_string()));
            }
        }
    }
    out
}

fn parse_bool(text: &str) -> Option<bool> {
    match text.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// Signed day count: plain integer (`-60`) or signed ISO duration (`-P2M`).
pub fn parse_signed_days(text: &str) -> Option<i64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<i64>() {
        return Some(v);
    }
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, t.strip_prefix('+').unwrap_or(t)),
    };
    Duration::parse_iso(body).ok().map(|d| sign * d.as_signed())
}

struct RawNode {
    node: FlowNode,
    input_refs: Vec<String>,
    output_refs: Vec<String>,
    timer_amount: Option<String>,
    timer_mode: Option<String>,
    called: Option<String>,
}

/// Parses one BPMN file. `model_id` is the identity assigned by the manifest;
/// the process element's own id is not used.
pub fn parse_model(xml_text: &str, model_id: &str) -> Result<ProcessModel, ParseError> {
    let doc = Document::parse(xml_text).map_err(|e| {
        let p = e.pos();
        ParseError::Xml { line: p.row, column: p.col, message: e.to_string() }
    })?;
    let mut reader = Reader { doc: &doc, model_id: model_id.to_string(), notes: Vec::new(), ids: HashMap::new() };

    let root = doc.root_element();
    let process = if root.tag_name().name() == "process" {
        root
    } else {
        let mut found = None;
        for child in root.children().filter(|c| c.is_element()) {
            match child.tag_name().name() {
                "process" if found.is_none() => found = Some(child),
                "BPMNDiagram" => {}
                _ => reader.unsupported(child, "definitions"),
            }
        }
        found.ok_or(ParseError::NoProcess)?
    };

    let name = process.attribute("name").unwrap_or_default().to_string();
    let mut raw_nodes: Vec<RawNode> = Vec::new();
    let mut flows = Vec::new();
    let mut lanes = Vec::new();
    let mut data_objects = Vec::new();
    let mut object_refs: HashMap<String, String> = HashMap::new();

    for child in process.children().filter(|c| c.is_element()) {
        let tag = child.tag_name().name();
        if let Some(kind) = NodeKind::from_element_name(tag) {
            raw_nodes.push(read_node(&mut reader, child, kind)?);
            continue;
        }
        match tag {
            "sequenceFlow" => {
                let flow_id = reader.claim_id(child)?;
                flows.push(SequenceFlow {
                    source: child.attribute("sourceRef").unwrap_or_default().to_string(),
                    target: child.attribute("targetRef").unwrap_or_default().to_string(),
                    flow_id,
                });
            }
            "laneSet" => {
                for lane in child.children().filter(|c| c.is_element()) {
                    if lane.tag_name().name() != "lane" {
                        reader.unsupported(lane, "laneSet");
                        continue;
                    }
                    let lane_id = reader.claim_id(lane)?;
                    for nested in lane
                        .children()
                        .filter(|c| c.is_element() && !matches!(c.tag_name().name(), "flowNodeRef" | "documentation"))
                    {
                        reader.unsupported(nested, &lane_id);
                    }
                    lanes.push(Lane {
                        role_name: lane.attribute("name").unwrap_or_default().trim().to_string(),
                        member_nodes: child_texts(lane, "flowNodeRef").collect(),
                        lane_id,
                    });
                }
            }
            "dataObject" => {
                let object_id = reader.claim_id(child)?;
                let storage_ref = extension_entries(child)
                    .into_iter()
                    .rev()
                    .filter(|(k, _)| k == "gq8")
                    .map(|(_, v)| v)
                    .find(|v| !v.is_empty());
                data_objects.push(DataObject {
                    name: child.attribute("name").unwrap_or_default().to_string(),
                    storage_ref,
                    object_id,
                });
            }
            "dataObjectReference" => {
                let ref_id = reader.claim_id(child)?;
                let target = child.attribute("dataObjectRef").unwrap_or_default().to_string();
                object_refs.insert(ref_id, target);
            }
            "documentation" => {}
            _ => {
                let context = child.attribute("id").unwrap_or("process").to_string();
                reader.unsupported(child, &context);
            }
        }
    }

    let object_ids: BTreeSet<String> = data_objects.iter().map(|d| d.object_id.clone()).collect();
    for (ref_id, target) in &object_refs {
        if !object_ids.contains(target) {
            return Err(ParseError::DanglingReference {
                context: format!("dataObjectReference {ref_id:?}"),
                reference: target.clone(),
            });
        }
    }
    let resolve_object = |reference: &str, node_id: &str| -> Result<String, ParseError> {
        if object_ids.contains(reference) {
            Ok(reference.to_string())
        } else if let Some(target) = object_refs.get(reference) {
            Ok(target.clone())
        } else {
            Err(ParseError::DanglingReference {
                context: format!("data association of node {node_id:?}"),
                reference: reference.to_string(),
            })
        }
    };

    let mut nodes = Vec::with_capacity(raw_nodes.len());
    let mut call_targets = BTreeMap::new();
    for raw in raw_nodes {
        let mut node = raw.node;
        for r in &raw.input_refs {
            node.inputs.insert(resolve_object(r, &node.node_id)?);
        }
        for r in &raw.output_refs {
            node.outputs.insert(resolve_object(r, &node.node_id)?);
        }
        if let Some(amount) = raw.timer_amount {
            let amount = Duration::parse_iso(&amount)
                .map_err(|source| ParseError::InvalidDuration { node_id: node.node_id.clone(), source })?;
            let mode = match raw.timer_mode {
                None => TimerMode::AnchorBeforeSop,
                Some(text) => TimerMode::parse(&text).ok_or_else(|| ParseError::InvalidMetadata {
                    node_id: node.node_id.clone(),
                    key: keys::TIMER_MODE.to_string(),
                    value: text,
                })?,
            };
            node.timer = Some(TimerDef { mode, amount });
        }
        if node.kind == NodeKind::CallActivity {
            let target = raw
                .called
                .filter(|t| !t.is_empty())
                .ok_or_else(|| ParseError::MissingCallTarget { node_id: node.node_id.clone() })?;
            call_targets.insert(node.node_id.clone(), target);
        }
        nodes.push(node);
    }

    let node_ids: BTreeSet<&str> = nodes.iter().map(|n| n.node_id.as_str()).collect();
    for flow in &flows {
        for end in [&flow.source, &flow.target] {
            if !node_ids.contains(end.as_str()) {
                return Err(ParseError::DanglingFlow { flow_id: flow.flow_id.clone(), missing: end.clone() });
            }
        }
    }
    for lane in &lanes {
        for member in &lane.member_nodes {
            if !node_ids.contains(member.as_str()) {
                return Err(ParseError::DanglingReference {
                    context: format!("lane {:?}", lane.lane_id),
                    reference: member.clone(),
                });
            }
        }
    }
    for node in &mut nodes {
        node.lane_ref = lanes.iter().find(|l| l.member_nodes.contains(&node.node_id)).map(|l| l.lane_id.clone());
    }

    let starts: Vec<String> =
        nodes.iter().filter(|n| n.kind == NodeKind::StartEvent).map(|n| n.node_id.clone()).collect();
    match starts.len() {
        0 => return Err(ParseError::MissingStartEvent),
        1 => {}
        _ => return Err(ParseError::MultipleStartEvents { ids: starts }),
    }
    if !nodes.iter().any(|n| n.kind == NodeKind::EndEvent) {
        return Err(ParseError::MissingEndEvent);
    }

    Ok(ProcessModel {
        model_id: model_id.to_string(),
        name,
        nodes,
        flows,
        lanes,
        data_objects,
        call_targets,
        source_path: String::new(),
        parse_notes: reader.notes,
    })
}

fn read_node(reader: &mut Reader, xml: Node, kind: NodeKind) -> Result<RawNode, ParseError> {
    let node_id = reader.claim_id(xml)?;
    let mut node = FlowNode::new(node_id.clone(), kind, xml.attribute("name").unwrap_or_default());
    let mut raw = RawNode {
        input_refs: Vec::new(),
        output_refs: Vec::new(),
        timer_amount: None,
        timer_mode: None,
        called: xml.attribute("calledElement").map(|s| s.trim().to_string()),
        node: FlowNode::new("", kind, ""),
    };

    for child in xml.children().filter(|c| c.is_element()) {
        match child.tag_name().name() {
            "dataInputAssociation" => raw.input_refs.extend(child_texts(child, "sourceRef")),
            "dataOutputAssociation" => raw.output_refs.extend(child_texts(child, "targetRef")),
            "timerEventDefinition" if kind.is_event() => match child_texts(child, "timeDuration").next() {
                Some(text) => raw.timer_amount = Some(text),
                None => reader.unsupported(child, &node_id),
            },
            "extensionElements" | "incoming" | "outgoing" | "documentation" => {}
            _ => reader.unsupported(child, &node_id),
        }
    }

    let meta = &mut node.meta;
    for (key, value) in extension_entries(xml) {
        let invalid =
            || ParseError::InvalidMetadata { node_id: node_id.clone(), key: key.clone(), value: value.clone() };
        match key.as_str() {
            "gq1" => meta.gq1 = Some(value.clone()).filter(|v| !v.is_empty()),
            "gq2" => meta.gq2 = Some(value.clone()).filter(|v| !v.is_empty()),
            "gq3" => meta.gq3.extend(split_list(&value)),
            "gq4" => {
                node.duration = Some(
                    Duration::parse_iso(&value)
                        .map_err(|source| ParseError::InvalidDuration { node_id: node_id.clone(), source })?,
                )
            }
            "gq5" => meta.gq5.extend(split_list(&value)),
            "gq6" => meta.gq6.extend(split_list(&value)),
            "gq7" => meta.gq7.extend(split_list(&value)),
            "gq8" => {
                for pair in split_list(&value) {
                    let (object, storage) = pair.split_once('=').ok_or_else(invalid)?;
                    meta.gq8.insert(object.trim().to_string(), storage.trim().to_string());
                }
            }
            keys::TERMINAL => meta.terminal = Some(parse_bool(&value).ok_or_else(invalid)?),
            keys::DECLARED_OFFSET => meta.declared_offset = Some(parse_signed_days(&value).ok_or_else(invalid)?),
            keys::TIMER_MODE => raw.timer_mode = Some(value.clone()),
            keys::ALIGNS_WITH => meta.aligns_with.extend(split_list(&value)),
            keys::METHODS => meta.methods.extend(split_list(&value)),
            _ => reader.notes.push(Finding::info(
                codes::UNSUPPORTED_ELEMENT,
                format!("{}/{}", reader.model_id, node_id),
                format!("ignored metadata key {key:?}"),
            )),
        }
    }
    raw.node = node;
    Ok(raw)
}
