//! The leveled process pyramid: placement of models by manifest level,
//! vertical call-activity links and top-down connectivity.

mod manifest;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{
    load_manifest, DocumentRef, LevelEntry, Manifest, ManifestError, ParentHint, DEFAULT_REFERENCE_STEP_DAYS,
    DEFAULT_SOP_LABEL,
};

use crate::finding::{codes, Finding};
use crate::ingest::{Duration, NodeKind, ProcessModel};
use crate::names::AliasTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PyramidError {
    #[error("root model {0:?} has no parsed process model")]
    MissingRoot(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VerticalLink {
    pub parent_model: String,
    pub call_node: String,
    pub child_model: String,
}

/// Bundle-wide settings carried over from the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PyramidSettings {
    pub root_model: String,
    pub sop_label: String,
    pub reference_step: Duration,
    pub alignment_tolerance: Duration,
    pub alias_table: AliasTable,
}

#[derive(Debug, Clone)]
pub struct Pyramid {
    /// Models per level, each level sorted by model id.
    pub levels: BTreeMap<u32, Vec<ProcessModel>>,
    pub vertical_links: Vec<VerticalLink>,
    pub documents: BTreeMap<String, Vec<DocumentRef>>,
    pub parent_hints: BTreeMap<String, ParentHint>,
    pub settings: PyramidSettings,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pub findings: Vec<Finding>,
    /// Deepest level reached from the root through vertical links.
    pub max_depth: u32,
    pub reachable: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coordinate {
    pub depth: u32,
    pub position: usize,
    pub complexity: usize,
}

/// Places models at their manifest levels.
///
/// Models without a manifest entry are dropped with `ORPHAN-MODEL`; entries
/// without a model get `MISSING-MODEL`. A missing root model is fatal.
pub fn build_pyramid(manifest: &Manifest, models: Vec<ProcessModel>) -> Result<(Pyramid, Vec<Finding>), PyramidError> {
    let mut findings = Vec::new();
    let mut by_id: BTreeMap<String, ProcessModel> = BTreeMap::new();
    for model in models {
        if manifest.entry(&model.model_id).is_none() {
            findings.push(Finding::warning(
                codes::ORPHAN_MODEL,
                &model.model_id,
                format!("model file {:?} is not listed in the manifest", model.source_path),
            ));
            continue;
        }
        by_id.entry(model.model_id.clone()).or_insert(model);
    }
    if !by_id.contains_key(&manifest.root_model) {
        return Err(PyramidError::MissingRoot(manifest.root_model.clone()));
    }

    let mut levels: BTreeMap<u32, Vec<ProcessModel>> = BTreeMap::new();
    let mut documents = BTreeMap::new();
    let mut parent_hints = BTreeMap::new();
    for entry in &manifest.entries {
        match by_id.remove(&entry.model_id) {
            Some(model) => {
                levels.entry(entry.level).or_default().push(model);
                documents.insert(entry.model_id.clone(), entry.documents.clone());
                if let Some(hint) = &entry.parent_hint {
                    parent_hints.insert(entry.model_id.clone(), hint.clone());
                }
            }
            None => findings.push(Finding::error(
                codes::MISSING_MODEL,
                &entry.model_id,
                format!("no process model available for level {} entry {:?}", entry.level, entry.file),
            )),
        }
    }
    for models in levels.values_mut() {
        models.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    }

    let pyramid = Pyramid {
        levels,
        vertical_links: Vec::new(),
        documents,
        parent_hints,
        settings: PyramidSettings {
            root_model: manifest.root_model.clone(),
            sop_label: manifest.sop_label.clone(),
            reference_step: manifest.reference_step,
            alignment_tolerance: manifest.alignment_tolerance,
            alias_table: manifest.alias_table.clone(),
        },
    };
    Ok((pyramid, findings))
}

impl Pyramid {
    pub fn models(&self) -> impl Iterator<Item = &ProcessModel> {
        self.levels.values().flatten()
    }

    pub fn model(&self, model_id: &str) -> Option<&ProcessModel> {
        self.models().find(|m| m.model_id == model_id)
    }

    pub fn level_of(&self, model_id: &str) -> Option<u32> {
        self.levels.iter().find(|(_, ms)| ms.iter().any(|m| m.model_id == model_id)).map(|(&l, _)| l)
    }

    pub fn model_count(&self) -> usize {
        self.levels.values().map(Vec::len).sum()
    }

    fn level_index(&self) -> BTreeMap<&str, u32> {
        self.levels.iter().flat_map(|(&l, ms)| ms.iter().map(move |m| (m.model_id.as_str(), l))).collect()
    }

    /// Recomputes `vertical_links` from call activities and cross-checks them
    /// against the manifest levels.
    pub fn link_levels(&mut self) -> Vec<Finding> {
        let level_of = self.level_index();
        let mut links = Vec::new();
        let mut findings = Vec::new();
        for (&level, models) in &self.levels {
            for model in models {
                for node in model.nodes.iter().filter(|n| n.kind == NodeKind::CallActivity) {
                    let Some(target) = model.call_targets.get(&node.node_id) else { continue };
                    let subject = model.subject(&node.node_id);
                    match level_of.get(target.as_str()) {
                        None => findings.push(Finding::error(
                            codes::UNRESOLVED_CALL,
                            subject,
                            format!("call target {target:?} is not part of the pyramid"),
                        )),
                        Some(&child_level) if child_level == level + 1 => links.push(VerticalLink {
                            parent_model: model.model_id.clone(),
                            call_node: node.node_id.clone(),
                            child_model: target.clone(),
                        }),
                        Some(&child_level) => findings.push(Finding::error(
                            codes::LEVEL_SKIP,
                            subject,
                            format!(
                                "call from level {level} targets {target:?} at level {child_level}, expected level {}",
                                level + 1
                            ),
                        )),
                    }
                }
            }
        }
        links.sort();

        let mut parents: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for link in &links {
            parents.entry(link.child_model.as_str()).or_default().insert(link.parent_model.as_str());
        }
        for (child, ps) in &parents {
            if ps.len() > 1 {
                findings.push(Finding::info(
                    codes::MULTI_PARENT,
                    *child,
                    format!("called from several parents: {}", ps.iter().copied().collect::<Vec<_>>().join(", ")),
                ));
            }
        }
        for (&level, models) in &self.levels {
            if level == 0 {
                continue;
            }
            for model in models {
                if !parents.contains_key(model.model_id.as_str()) {
                    findings.push(Finding::warning(
                        codes::UNLINKED_CHILD,
                        &model.model_id,
                        format!("no call activity at level {} expands into this model", level - 1),
                    ));
                }
            }
        }
        for (child, hint) in &self.parent_hints {
            let matched = links
                .iter()
                .any(|l| &l.child_model == child && l.parent_model == hint.model && l.call_node == hint.node);
            if !matched {
                findings.push(Finding::warning(
                    codes::PARENT_HINT_UNMATCHED,
                    child,
                    format!("manifest names {}/{} as parent but no such call links here", hint.model, hint.node),
                ));
            }
        }
        self.vertical_links = links;
        findings
    }

    /// Breadth-first reachability from the root over vertical links.
    pub fn check_connectivity(&self) -> Connectivity {
        let level_of = self.level_index();
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for link in &self.vertical_links {
            children.entry(link.parent_model.as_str()).or_default().push(link.child_model.as_str());
        }
        let root = self.settings.root_model.as_str();
        let mut reachable: BTreeSet<String> = BTreeSet::new();
        let mut queue = VecDeque::new();
        if level_of.contains_key(root) {
            reachable.insert(root.to_string());
            queue.push_back(root);
        }
        while let Some(m) = queue.pop_front() {
            for &c in children.get(m).into_iter().flatten() {
                if reachable.insert(c.to_string()) {
                    queue.push_back(c);
                }
            }
        }
        let max_depth = reachable.iter().filter_map(|m| level_of.get(m.as_str())).copied().max().unwrap_or(0);
        let findings = self
            .models()
            .filter(|m| !reachable.contains(&m.model_id))
            .map(|m| {
                Finding::error(
                    codes::DISCONNECTED,
                    &m.model_id,
                    format!("not reachable from root {root:?} through vertical links"),
                )
            })
            .collect();
        Connectivity { findings, max_depth, reachable }
    }

    /// Depth is the level, position the pre-order rank of a depth-first walk
    /// over vertical links (children by id; unreachable models follow in
    /// level then id order), complexity the flow-node count.
    pub fn assign_coordinates(&self) -> BTreeMap<String, Coordinate> {
        let level_of = self.level_index();
        let mut children: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for link in &self.vertical_links {
            children.entry(link.parent_model.as_str()).or_default().insert(link.child_model.as_str());
        }
        let mut order: Vec<&str> = Vec::new();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let root = self.settings.root_model.as_str();
        if level_of.contains_key(root) {
            let mut stack = vec![root];
            while let Some(m) = stack.pop() {
                if !seen.insert(m) {
                    continue;
                }
                order.push(m);
                if let Some(cs) = children.get(m) {
                    stack.extend(cs.iter().rev().filter(|c| !seen.contains(*c)));
                }
            }
        }
        for model in self.models() {
            if seen.insert(model.model_id.as_str()) {
                order.push(model.model_id.as_str());
            }
        }
        order
            .into_iter()
            .enumerate()
            .map(|(position, id)| {
                let model = self.model(id).expect("ordered ids come from the pyramid");
                (id.to_string(), Coordinate { depth: level_of[id], position, complexity: model.nodes.len() })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FlowNode, SequenceFlow};

    pub(crate) fn chain_model(id: &str, call: Option<&str>) -> ProcessModel {
        let mut nodes = vec![FlowNode::new("s", NodeKind::StartEvent, "start")];
        let mut call_targets = BTreeMap::new();
        if let Some(target) = call {
            nodes.push(FlowNode::new("call", NodeKind::CallActivity, "sub"));
            call_targets.insert("call".to_string(), target.to_string());
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
        ProcessModel {
            model_id: id.to_string(),
            name: id.to_string(),
            nodes,
            flows,
            lanes: Vec::new(),
            data_objects: Vec::new(),
            call_targets,
            source_path: format!("{id}.bpmn"),
            parse_notes: Vec::new(),
        }
    }

    fn manifest(levels: &[(&str, u32)]) -> Manifest {
        let models: Vec<String> =
            levels.iter().map(|(id, level)| format!(r#"{{"id":"{id}","file":"{id}.bpmn","level":{level}}}"#)).collect();
        load_manifest(&format!(r#"{{"root":"{}","models":[{}]}}"#, levels[0].0, models.join(","))).unwrap()
    }

    const CHAIN: [(&str, u32); 5] =
        [("PP", 0), ("PEP", 1), ("FunctionChart", 2), ("TestPlan", 3), ("ParkPilotTest", 4)];

    fn chain_models() -> Vec<ProcessModel> {
        (0..CHAIN.len()).map(|i| chain_model(CHAIN[i].0, CHAIN.get(i + 1).map(|c| c.0))).collect()
    }

    #[test]
    fn exact_match_has_no_findings() {
        let (mut p, findings) = build_pyramid(&manifest(&CHAIN), chain_models()).unwrap();
        assert!(findings.is_empty());
        assert_eq!(p.levels.len(), 5);
        assert!(p.link_levels().is_empty());
        assert_eq!(p.vertical_links.len(), 4);
        let c = p.check_connectivity();
        assert!(c.findings.is_empty());
        assert_eq!(c.max_depth, 4);
        let coords = p.assign_coordinates();
        assert_eq!(coords["PP"], Coordinate { depth: 0, position: 0, complexity: 3 });
        let mut by_depth: Vec<_> = coords.values().collect();
        by_depth.sort();
        assert!(by_depth.windows(2).all(|w| w[0].position < w[1].position));
    }

    #[test]
    fn orphan_and_missing_models() {
        let mut models = chain_models();
        models.push(chain_model("Extra", None));
        let (_, findings) = build_pyramid(&manifest(&CHAIN), models).unwrap();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, codes::ORPHAN_MODEL);

        let mut models = chain_models();
        models.retain(|m| m.model_id != "TestPlan");
        let (_, findings) = build_pyramid(&manifest(&CHAIN), models).unwrap();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, codes::MISSING_MODEL);
        assert_eq!(findings[0].subject, "TestPlan");

        let mut models = chain_models();
        models.remove(0);
        assert_eq!(build_pyramid(&manifest(&CHAIN), models).unwrap_err(), PyramidError::MissingRoot("PP".into()));
    }

    #[test]
    fn level_skip_unresolved_and_unlinked() {
        let models = vec![chain_model("A", Some("C")), chain_model("B", Some("nowhere")), chain_model("C", None)];
        let (mut p, _) = build_pyramid(&manifest(&[("A", 0), ("B", 1), ("C", 2)]), models).unwrap();
        let findings = p.link_levels();
        let codes_found: BTreeSet<&str> = findings.iter().map(|f| f.code.as_str()).collect();
        assert!(codes_found.contains(codes::LEVEL_SKIP));
        assert!(codes_found.contains(codes::UNRESOLVED_CALL));
        let unlinked: BTreeSet<&str> =
            findings.iter().filter(|f| f.code == codes::UNLINKED_CHILD).map(|f| f.subject.as_str()).collect();
        assert_eq!(unlinked, BTreeSet::from(["B", "C"]));
        assert!(p.vertical_links.is_empty());
    }

    #[test]
    fn removed_link_disconnects_subtree() {
        let (mut p, _) = build_pyramid(&manifest(&CHAIN), chain_models()).unwrap();
        p.link_levels();
        p.vertical_links.retain(|l| l.parent_model != "FunctionChart");
        let c = p.check_connectivity();
        let subjects: Vec<&str> = c.findings.iter().map(|f| f.subject.as_str()).collect();
        assert_eq!(subjects, ["TestPlan", "ParkPilotTest"]);
        assert_eq!(c.max_depth, 2);
    }

    #[test]
    fn single_model_pyramid() {
        let (mut p, _) = build_pyramid(&manifest(&[("PP", 0)]), vec![chain_model("PP", None)]).unwrap();
        assert!(p.link_levels().is_empty());
        let c = p.check_connectivity();
        assert!(c.findings.is_empty());
        assert_eq!(c.max_depth, 0);
    }

    #[test]
    fn siblings_get_distinct_positions_and_multi_parent_is_info() {
        let mut root = chain_model("R", Some("A"));
        root.nodes.push(FlowNode::new("call2", NodeKind::CallActivity, "sub2"));
        root.call_targets.insert("call2".into(), "B".into());
        let mut b = chain_model("B", None);
        b.nodes.push(FlowNode::new("x", NodeKind::Task, "x"));
        let models = vec![b, chain_model("A", None), root];
        let m = manifest(&[("R", 0), ("A", 1), ("B", 1)]);
        let (mut p, _) = build_pyramid(&m, models.clone()).unwrap();
        p.link_levels();
        let first = p.assign_coordinates();
        assert_eq!(first["A"].depth, first["B"].depth);
        assert_ne!(first["A"].position, first["B"].position);
        let mut reversed = models;
        reversed.reverse();
        let (mut p2, _) = build_pyramid(&m, reversed).unwrap();
        p2.link_levels();
        assert_eq!(first, p2.assign_coordinates());
    }

    #[test]
    fn multi_parent_reported_as_info() {
        let m = manifest(&[("R", 0), ("P1", 1), ("P2", 1), ("C", 2)]);
        let mut root = chain_model("R", Some("P1"));
        root.nodes.push(FlowNode::new("call2", NodeKind::CallActivity, "p2"));
        root.call_targets.insert("call2".into(), "P2".into());
        let models = vec![root, chain_model("P1", Some("C")), chain_model("P2", Some("C")), chain_model("C", None)];
        let (mut p, _) = build_pyramid(&m, models).unwrap();
        let findings = p.link_levels();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, codes::MULTI_PARENT);
        assert_eq!(findings[0].severity, crate::finding::Severity::Info);
    }
}
