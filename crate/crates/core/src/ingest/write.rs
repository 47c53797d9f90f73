//! Writes a `ProcessModel` back out as BPMN XML restricted to the supported
//! subset. Parsing the output yields the same model.

use std::fmt::Write;

use super::model::{FlowNode, ProcessModel};
use super::parse::{keys, LIST_SEPARATOR};

pub const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn join<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    let sep = format!("{LIST_SEPARATOR}");
    items.into_iter().map(String::as_str).collect::<Vec<_>>().join(&sep)
}

fn meta_entries(node: &FlowNode) -> Vec<(&'static str, String)> {
    let m = &node.meta;
    let mut out = Vec::new();
    if let Some(v) = &m.gq1 {
        out.push(("gq1", v.clone()));
    }
    if let Some(v) = &m.gq2 {
        out.push(("gq2", v.clone()));
    }
    if !m.gq3.is_empty() {
        out.push(("gq3", join(&m.gq3)));
    }
    if let Some(d) = node.duration {
        out.push(("gq4", d.to_iso()));
    }
    if !m.gq5.is_empty() {
        out.push(("gq5", join(&m.gq5)));
    }
    if !m.gq6.is_empty() {
        out.push(("gq6", join(&m.gq6)));
    }
    if !m.gq7.is_empty() {
        out.push(("gq7", join(&m.gq7)));
    }
    if !m.gq8.is_empty() {
        let pairs: Vec<String> = m.gq8.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push(("gq8", pairs.join(&LIST_SEPARATOR.to_string())));
    }
    if let Some(t) = m.terminal {
        out.push((keys::TERMINAL, t.to_string()));
    }
    if let Some(o) = m.declared_offset {
        out.push((keys::DECLARED_OFFSET, o.to_string()));
    }
    if let Some(timer) = node.timer {
        out.push((keys::TIMER_MODE, timer.mode.as_str().to_string()));
    }
    if !m.aligns_with.is_empty() {
        out.push((keys::ALIGNS_WITH, join(&m.aligns_with)));
    }
    if !m.methods.is_empty() {
        out.push((keys::METHODS, join(&m.methods)));
    }
    out
}

pub fn write_model(model: &ProcessModel) -> String {
    let mut x = String::new();
    let _ = writeln!(x, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(x, r#"<definitions xmlns="{BPMN_NS}">"#);
    let _ = writeln!(x, r#"  <process id="{}" name="{}">"#, escape(&model.model_id), escape(&model.name));
    if !model.lanes.is_empty() {
        x.push_str("    <laneSet>\n");
        for lane in &model.lanes {
            let _ = writeln!(x, r#"      <lane id="{}" name="{}">"#, escape(&lane.lane_id), escape(&lane.role_name));
            for member in &lane.member_nodes {
                let _ = writeln!(x, "        <flowNodeRef>{}</flowNodeRef>", escape(member));
            }
            x.push_str("      </lane>\n");
        }
        x.push_str("    </laneSet>\n");
    }
    for node in &model.nodes {
        let tag = node.kind.element_name();
        let _ = write!(x, r#"    <{tag} id="{}" name="{}""#, escape(&node.node_id), escape(&node.name));
        if let Some(target) = model.call_targets.get(&node.node_id) {
            let _ = write!(x, r#" calledElement="{}""#, escape(target));
        }
        x.push_str(">\n");
        let entries = meta_entries(node);
        if !entries.is_empty() {
            x.push_str("      <extensionElements>\n");
            for (k, v) in entries {
                let _ = writeln!(x, r#"        <meta key="{k}" value="{}"/>"#, escape(&v));
            }
            x.push_str("      </extensionElements>\n");
        }
        for input in &node.inputs {
            let _ = writeln!(
                x,
                "      <dataInputAssociation><sourceRef>{}</sourceRef></dataInputAssociation>",
                escape(input)
            );
        }
        for output in &node.outputs {
            let _ = writeln!(
                x,
                "      <dataOutputAssociation><targetRef>{}</targetRef></dataOutputAssociation>",
                escape(output)
            );
        }
        if let Some(timer) = node.timer {
            let _ = writeln!(
                x,
                "      <timerEventDefinition><timeDuration>{}</timeDuration></timerEventDefinition>",
                timer.amount.to_iso()
            );
        }
        let _ = writeln!(x, "    </{tag}>");
    }
    for obj in &model.data_objects {
        let _ = write!(x, r#"    <dataObject id="{}" name="{}""#, escape(&obj.object_id), escape(&obj.name));
        match &obj.storage_ref {
            Some(storage) => {
                let _ = writeln!(
                    x,
                    ">\n      <extensionElements><meta key=\"gq8\" value=\"{}\"/></extensionElements>\n    </dataObject>",
                    escape(storage)
                );
            }
            None => x.push_str("/>\n"),
        }
    }
    for flow in &model.flows {
        let _ = writeln!(
            x,
            r#"    <sequenceFlow id="{}" sourceRef="{}" targetRef="{}"/>"#,
            escape(&flow.flow_id),
            escape(&flow.source),
            escape(&flow.target)
        );
    }
    x.push_str("  </process>\n</definitions>\n");
    x
}
