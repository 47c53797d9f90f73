#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use procpyramid_core::ingest::{
    DataObject, Duration, FlowNode, GatewayKind, Lane, NodeKind, ProcessModel, SequenceFlow, TimerDef, TimerMode,
};
use procpyramid_core::pyramid::{build_pyramid, load_manifest, Manifest, Pyramid};
use procpyramid_core::timeline::{GqRecord, Milestone, MilestoneKind};

const NAMES: &[&str] = &["Review", "A & B", "x < y", "say \"hi\"", "it's", "Plan", "Build", "Ünïcode"];
const WORDS: &[&str] = &["DOORS", "CANoe", "PLM", "Excel", "Jira", "R&D share"];

pub fn manifest(root: &str, entries: &[(&str, u32)]) -> Manifest {
    let models: Vec<serde_json::Value> = entries
        .iter()
        .map(|(id, level)| serde_json::json!({ "id": id, "file": format!("{id}.bpmn"), "level": level }))
        .collect();
    let text = serde_json::json!({ "root": root, "models": models }).to_string();
    load_manifest(&text).expect("test manifest is valid")
}

/// Start, optional call activities, end; all in one lane.
pub fn stub_model(id: &str, calls: &[&str]) -> ProcessModel {
    let mut nodes = vec![FlowNode::new("s", NodeKind::StartEvent, "start")];
    let mut call_targets = BTreeMap::new();
    for (i, target) in calls.iter().enumerate() {
        let node_id = format!("call{i}");
        nodes.push(FlowNode::new(&node_id, NodeKind::CallActivity, *target));
        call_targets.insert(node_id, target.to_string());
    }
    nodes.push(FlowNode::new("e", NodeKind::EndEvent, "end"));
    let flows = nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| SequenceFlow {
            flow_id: format!("f{i}"),
            source: w[0].node_id.clone(),
            target: w[1].node_id.clone(),
        })
        .collect();
    let lane = Lane {
        lane_id: "lane".into(),
        role_name: "Engineer".into(),
        member_nodes: nodes.iter().map(|n| n.node_id.clone()).collect(),
    };
    for n in &mut nodes {
        n.lane_ref = Some("lane".into());
    }
    ProcessModel {
        model_id: id.into(),
        name: id.into(),
        nodes,
        flows,
        lanes: vec![lane],
        data_objects: Vec::new(),
        call_targets,
        source_path: String::new(),
        parse_notes: Vec::new(),
    }
}

/// Pyramid over the given models; the first entry is the root.
pub fn pyramid_of(models: Vec<ProcessModel>, levels: &[(&str, u32)]) -> Pyramid {
    let m = manifest(levels[0].0, levels);
    let (mut pyramid, _) = build_pyramid(&m, models).expect("root present");
    pyramid.link_levels();
    pyramid
}

pub fn milestone(id: &str, model: &str, inputs: &[&str], outputs: &[&str], gq7: &[&str]) -> Milestone {
    let mut objects = BTreeMap::new();
    let mut ids = |names: &[&str]| -> BTreeSet<String> {
        names
            .iter()
            .map(|n| {
                let id = format!("{model}/{n}");
                objects.insert(id.clone(), n.to_string());
                id
            })
            .collect()
    };
    let gq5_inputs = ids(inputs);
    let gq6_outputs = ids(outputs);
    Milestone {
        milestone_id: id.into(),
        name: id.into(),
        kind: MilestoneKind::Intermediate,
        model_id: model.into(),
        event_node: id.into(),
        declared_offset: None,
        gq: GqRecord {
            gq5_inputs,
            gq6_outputs,
            gq7_consumers: gq7.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        },
        terminal: false,
        aligns_with: BTreeSet::new(),
        objects,
    }
}

/// A milestone answering all eight questions.
pub fn answered_milestone() -> Milestone {
    let mut m = milestone("M", "PEP", &["spec"], &["report"], &["N"]);
    m.gq.gq1_process = Some("PEP".into());
    m.gq.gq2_role = Some("Engineer".into());
    m.gq.gq3_tools = ["DOORS".to_string()].into();
    m.gq.gq4_duration = Some(Duration::months(1));
    m.gq.gq8_storage =
        [("PEP/spec".to_string(), "plm://spec".to_string()), ("PEP/report".to_string(), "plm://r".to_string())].into();
    m
}

fn pick<'a>(rng: &mut StdRng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

fn pick_set(rng: &mut StdRng, pool: &[&str], max: usize) -> BTreeSet<String> {
    (0..rng.gen_range(0..=max)).map(|_| pick(rng, pool).to_string()).collect()
}

/// Arbitrary structurally valid model: one start event, at least one end
/// event, random flows (cycles allowed), lanes, data and metadata.
pub fn random_model(rng: &mut StdRng, model_id: &str, size: usize) -> ProcessModel {
    let objects: Vec<DataObject> = (0..rng.gen_range(0..5))
        .map(|i| DataObject {
            object_id: format!("d{i}"),
            name: pick(rng, NAMES).to_string(),
            storage_ref: rng.gen_bool(0.5).then(|| format!("store/{i}")),
        })
        .collect();
    let object_ids: Vec<&str> = objects.iter().map(|o| o.object_id.as_str()).collect();

    let mut nodes = Vec::new();
    let mut call_targets = BTreeMap::new();
    for i in 0..size.max(2) {
        let kind = if i == 0 {
            NodeKind::StartEvent
        } else if i == size.max(2) - 1 {
            NodeKind::EndEvent
        } else {
            *[
                NodeKind::Task,
                NodeKind::Task,
                NodeKind::IntermediateEvent,
                NodeKind::EndEvent,
                NodeKind::CallActivity,
                NodeKind::Gateway(GatewayKind::Exclusive),
                NodeKind::Gateway(GatewayKind::Parallel),
            ]
            .choose(rng)
            .unwrap()
        };
        let id = format!("n{i}");
        let mut node = FlowNode::new(&id, kind, pick(rng, NAMES));
        if rng.gen_bool(0.6) {
            node.duration = Some(Duration::days(rng.gen_range(0..400)));
        }
        if kind.is_event() && rng.gen_bool(0.4) {
            let mode = if rng.gen_bool(0.7) { TimerMode::AnchorBeforeSop } else { TimerMode::Elapsed };
            node.timer = Some(TimerDef { mode, amount: Duration::days(rng.gen_range(0..1200)) });
        }
        if !object_ids.is_empty() {
            node.inputs = pick_set(rng, &object_ids, 2);
            node.outputs = pick_set(rng, &object_ids, 2);
        }
        if kind == NodeKind::CallActivity {
            call_targets.insert(id.clone(), format!("Child{}", rng.gen_range(0..3)));
        }
        let m = &mut node.meta;
        m.gq1 = rng.gen_bool(0.3).then(|| pick(rng, WORDS).to_string());
        m.gq2 = rng.gen_bool(0.3).then(|| pick(rng, WORDS).to_string());
        m.gq3 = pick_set(rng, WORDS, 2);
        m.gq5 = pick_set(rng, NAMES, 2);
        m.gq6 = pick_set(rng, NAMES, 2);
        m.gq7 = pick_set(rng, &["n1", "n2", "ext"], 2);
        if rng.gen_bool(0.3) {
            m.gq8.insert(pick(rng, NAMES).to_string(), "share/x".into());
        }
        m.terminal = rng.gen_bool(0.2).then(|| rng.gen_bool(0.5));
        m.declared_offset = rng.gen_bool(0.2).then(|| rng.gen_range(-900..100));
        m.aligns_with = pick_set(rng, &["n1", "other"], 1);
        m.methods = pick_set(rng, &["HIL", "Review"], 2);
        nodes.push(node);
    }

    let n = nodes.len();
    let flows: Vec<SequenceFlow> = (0..rng.gen_range(0..2 * n))
        .map(|i| SequenceFlow {
            flow_id: format!("f{i}"),
            source: format!("n{}", rng.gen_range(0..n)),
            target: format!("n{}", rng.gen_range(0..n)),
        })
        .collect();

    let lanes: Vec<Lane> = (0..rng.gen_range(0..3))
        .map(|i| Lane {
            lane_id: format!("lane{i}"),
            role_name: if rng.gen_bool(0.8) { pick(rng, WORDS).to_string() } else { String::new() },
            member_nodes: nodes.iter().filter(|_| rng.gen_bool(0.5)).map(|n| n.node_id.clone()).collect(),
        })
        .collect();
    for node in &mut nodes {
        node.lane_ref = lanes.iter().find(|l| l.member_nodes.contains(&node.node_id)).map(|l| l.lane_id.clone());
    }

    ProcessModel {
        model_id: model_id.into(),
        name: pick(rng, NAMES).to_string(),
        nodes,
        flows,
        lanes,
        data_objects: objects,
        call_targets,
        source_path: String::new(),
        parse_notes: Vec::new(),
    }
}
