#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use procpyramid_core::ingest::{
    write_model, DataObject, Duration, FlowNode, Lane, NodeKind, ProcessModel, SequenceFlow, TimerDef, TimerMode,
};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn manifest_of(name: &str) -> String {
    fixture(name).join("manifest.json").display().to_string()
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

pub fn run(args: &[&str]) -> Output {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("procpyramid").chain(args.iter().copied());
    let status = procpyramid::run_with(argv, &mut stdout, &mut stderr);
    Output { code: status.code, stdout: String::from_utf8(stdout).unwrap(), stderr: String::from_utf8(stderr).unwrap() }
}

/// Copies a fixture into a fresh directory so tests can edit it.
pub fn copy_fixture(name: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    for entry in fs::read_dir(fixture(name)).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}

pub fn edit(path: &Path, from: &str, to: &str) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.contains(from), "{from:?} not in {}", path.display());
    fs::write(path, text.replace(from, to)).unwrap();
}

/// Breaks the park-pilot V&V chain: the test plan no longer imports the
/// function architecture.
pub fn sever_park_pilot(dir: &Path) {
    edit(&dir.join("TestPlan.bpmn"), "Function architecture", "Unrelated input");
}

fn node(id: String, kind: NodeKind, name: String) -> FlowNode {
    let mut n = FlowNode::new(id, kind, name);
    n.lane_ref = Some("lane".into());
    n
}

/// Parent of model `i` in a tree with the given fan-out.
pub fn synthetic_parent(i: usize, fan_out: usize) -> Option<usize> {
    (i > 0).then(|| (i - 1) / fan_out)
}

fn synthetic_level(i: usize, fan_out: usize) -> u32 {
    synthetic_parent(i, fan_out).map_or(0, |p| synthetic_level(p, fan_out) + 1)
}

/// One synthetic model: an anchored start, then time symbol, task and
/// milestone triples threading a document chain, call activities to its
/// children and an anchored end. The first task imports the parent's first
/// document.
pub fn synthetic_model(i: usize, model_count: usize, fan_out: usize, nodes_per_model: usize) -> ProcessModel {
    let id = format!("S{i}");
    let children: Vec<usize> = (1..model_count).filter(|&c| synthetic_parent(c, fan_out) == Some(i)).collect();
    let mut nodes = Vec::new();
    let mut objects = Vec::new();
    let mut call_targets = std::collections::BTreeMap::new();

    let mut start = node(format!("{id}_start"), NodeKind::StartEvent, format!("{id} start"));
    start.timer = Some(TimerDef { mode: TimerMode::AnchorBeforeSop, amount: Duration::days(1500) });
    nodes.push(start);

    let doc = |k: usize| format!("S{i} doc {k}");
    match synthetic_parent(i, fan_out) {
        Some(p) => objects.push(DataObject {
            object_id: "import".into(),
            name: format!("S{p} doc 0"),
            storage_ref: Some("plm://x".into()),
        }),
        None => objects.push(DataObject {
            object_id: "brief".into(),
            name: "Brief".into(),
            storage_ref: Some("plm://brief".into()),
        }),
    }
    let body = nodes_per_model - 2 - children.len();
    let mut k = 0;
    while nodes.len() < body + 1 {
        if k > 0 && body + 1 - nodes.len() >= 3 {
            let mut wait = node(format!("{id}_w{k}"), NodeKind::IntermediateEvent, format!("Wait {k}"));
            wait.timer = Some(TimerDef { mode: TimerMode::Elapsed, amount: Duration::days(1) });
            nodes.push(wait);
        }
        let mut task = node(format!("{id}_t{k}"), NodeKind::Task, format!("Work {k}"));
        task.duration = Some(Duration::days(2));
        match k {
            0 if i > 0 => task.inputs.insert("import".into()),
            0 => task.inputs.insert("brief".into()),
            _ => task.inputs.insert(format!("o{}", k - 1)),
        };
        task.outputs.insert(format!("o{k}"));
        objects.push(DataObject {
            object_id: format!("o{k}"),
            name: doc(k),
            storage_ref: Some(format!("plm://{id}/{k}")),
        });
        nodes.push(task);
        if nodes.len() < body + 1 {
            let mut gate = node(format!("{id}_m{k}"), NodeKind::IntermediateEvent, format!("Gate {k}"));
            gate.meta.gq3.insert("PLM".into());
            gate.meta.gq7.insert(format!("{id}_m{}", k + 1));
            nodes.push(gate);
        }
        k += 1;
    }
    for (n, c) in children.iter().enumerate() {
        let call_id = format!("{id}_call{n}");
        let mut call = node(call_id.clone(), NodeKind::CallActivity, format!("Refine S{c}"));
        call.duration = Some(Duration::days(1));
        call_targets.insert(call_id, format!("S{c}"));
        nodes.push(call);
    }
    let mut end = node(format!("{id}_end"), NodeKind::EndEvent, format!("{id} end"));
    end.timer = Some(TimerDef { mode: TimerMode::AnchorBeforeSop, amount: Duration::days(0) });
    end.meta.terminal = Some(true);
    nodes.push(end);
    let ids: std::collections::BTreeSet<String> = nodes.iter().map(|n| n.node_id.clone()).collect();
    for n in &mut nodes {
        n.meta.gq7.retain(|c| ids.contains(c));
    }

    let flows = nodes
        .windows(2)
        .enumerate()
        .map(|(n, w)| SequenceFlow {
            flow_id: format!("{id}_f{n}"),
            source: w[0].node_id.clone(),
            target: w[1].node_id.clone(),
        })
        .collect();
    let lane = Lane {
        lane_id: "lane".into(),
        role_name: "Engineer".into(),
        member_nodes: nodes.iter().map(|n| n.node_id.clone()).collect(),
    };
    ProcessModel {
        model_id: id.clone(),
        name: id,
        nodes,
        flows,
        lanes: vec![lane],
        data_objects: objects,
        call_targets,
        source_path: String::new(),
        parse_notes: Vec::new(),
    }
}

/// Writes a tree-shaped bundle of `model_count` models with
/// `nodes_per_model` flow nodes each; returns the manifest path and the
/// total node count.
pub fn write_synthetic_bundle(dir: &Path, model_count: usize, nodes_per_model: usize) -> (PathBuf, usize) {
    let fan_out = 6;
    let mut entries = Vec::new();
    let mut node_count = 0;
    for i in 0..model_count {
        let model = synthetic_model(i, model_count, fan_out, nodes_per_model);
        node_count += model.nodes.len();
        let file = format!("S{i}.bpmn");
        fs::write(dir.join(&file), write_model(&model)).unwrap();
        entries.push(serde_json::json!({ "id": model.model_id, "file": file, "level": synthetic_level(i, fan_out) }));
    }
    let manifest = serde_json::json!({ "root": "S0", "models": entries });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    (path, node_count)
}
