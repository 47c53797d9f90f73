mod common;

use std::collections::{BTreeSet, HashMap, VecDeque};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use procpyramid_core::finding::codes;
use procpyramid_core::ingest::{
    check_wellformed, extract_milestones, parse_model, write_model, Duration, NodeKind, ParseError, ProcessModel,
};
use procpyramid_core::timeline::MilestoneKind;

const FIG7: &str = r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL">
  <process id="p" name="Fragment">
    <laneSet><lane id="l" name="Engineer">
      <flowNodeRef>s</flowNodeRef><flowNodeRef>t3</flowNodeRef><flowNodeRef>a</flowNodeRef>
      <flowNodeRef>b</flowNodeRef><flowNodeRef>PS</flowNodeRef><flowNodeRef>e</flowNodeRef>
    </lane></laneSet>
    <startEvent id="s"/>
    <intermediateCatchEvent id="t3">
      <timerEventDefinition><timeDuration>P3M</timeDuration></timerEventDefinition>
    </intermediateCatchEvent>
    <task id="a" name="A"><extensionElements><meta key="gq4" value="P2W"/></extensionElements>
      <dataInputAssociation><sourceRef>d0</sourceRef></dataInputAssociation>
      <dataOutputAssociation><targetRef>d1</targetRef></dataOutputAssociation></task>
    <task id="b" name="B"><extensionElements><meta key="gq4" value="P16D"/></extensionElements>
      <dataInputAssociation><sourceRef>d1</sourceRef></dataInputAssociation>
      <dataOutputAssociation><targetRef>d2</targetRef></dataOutputAssociation></task>
    <intermediateCatchEvent id="PS" name="PS"/>
    <endEvent id="e"><timerEventDefinition><timeDuration>P0D</timeDuration></timerEventDefinition></endEvent>
    <dataObject id="d0" name="Plan"/><dataObject id="d1" name="Draft"/><dataObject id="d2" name="Release"/>
    <sequenceFlow id="f1" sourceRef="s" targetRef="t3"/>
    <sequenceFlow id="f2" sourceRef="t3" targetRef="a"/>
    <sequenceFlow id="f3" sourceRef="a" targetRef="b"/>
    <sequenceFlow id="f4" sourceRef="b" targetRef="PS"/>
    <sequenceFlow id="f5" sourceRef="PS" targetRef="e"/>
  </process>
</definitions>"#;

fn canonical(mut m: ProcessModel) -> ProcessModel {
    m.parse_notes.clear();
    m.source_path.clear();
    m
}

#[test]
fn fragment_yields_intermediate_ps() {
    let model = parse_model(FIG7, "F").unwrap();
    let (milestones, findings) = extract_milestones(&model);
    assert!(findings.is_empty());
    let ps = milestones.iter().find(|m| m.milestone_id == "PS").unwrap();
    assert_eq!(ps.kind, MilestoneKind::Intermediate);
    assert_eq!(ps.gq.gq4_duration, Some(Duration::days(30)));
    assert!(milestones.iter().all(|m| m.milestone_id != "t3"), "time symbols are not milestones");
    assert!(check_wellformed(&model).is_empty());
}

#[test]
fn three_anchored_events_give_one_milestone_of_each_kind() {
    let xml = r#"<process id="p">
      <laneSet><lane id="l" name="R"><flowNodeRef>s</flowNodeRef><flowNodeRef>m</flowNodeRef><flowNodeRef>e</flowNodeRef></lane></laneSet>
      <startEvent id="s"><timerEventDefinition><timeDuration>P2M</timeDuration></timerEventDefinition></startEvent>
      <intermediateCatchEvent id="m"/>
      <endEvent id="e"><timerEventDefinition><timeDuration>P1M</timeDuration></timerEventDefinition></endEvent>
      <sequenceFlow id="f1" sourceRef="s" targetRef="m"/><sequenceFlow id="f2" sourceRef="m" targetRef="e"/>
    </process>"#;
    let model = parse_model(xml, "K").unwrap();
    let kinds: Vec<MilestoneKind> = extract_milestones(&model).0.iter().map(|m| m.kind).collect();
    assert_eq!(kinds, [MilestoneKind::Start, MilestoneKind::Intermediate, MilestoneKind::End]);
}

#[test]
fn model_without_timers_has_no_milestones() {
    let xml = r#"<process id="p">
      <laneSet><lane id="l" name="R"><flowNodeRef>s</flowNodeRef><flowNodeRef>m</flowNodeRef><flowNodeRef>e</flowNodeRef></lane></laneSet>
      <startEvent id="s"/><intermediateCatchEvent id="m"/><endEvent id="e"/>
      <sequenceFlow id="f1" sourceRef="s" targetRef="m"/><sequenceFlow id="f2" sourceRef="m" targetRef="e"/>
    </process>"#;
    let model = parse_model(xml, "K").unwrap();
    assert!(extract_milestones(&model).0.is_empty());
    let r4: Vec<String> =
        check_wellformed(&model).into_iter().filter(|f| f.code == codes::R4_NO_TIMER).map(|f| f.subject).collect();
    assert_eq!(r4, ["K/m", "K/e"]);
}

#[test]
fn single_missing_duration_is_one_finding() {
    let xml = FIG7.replace(r#"<meta key="gq4" value="P16D"/>"#, "");
    let model = parse_model(&xml, "F").unwrap();
    let findings = check_wellformed(&model);
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0].code, codes::R2_NO_DURATION);
    assert_eq!(findings[0].subject, "F/b");
}

#[test]
fn unsupported_elements_are_info_notes() {
    let xml = FIG7.replace(
        r#"<dataObject id="d0""#,
        r#"<boundaryEvent id="x" attachedToRef="a"/><messageFlow id="mf"/><dataObject id="d0""#,
    );
    let model = parse_model(&xml, "F").unwrap();
    assert_eq!(model.parse_notes.len(), 2);
    assert!(model.parse_notes.iter().all(|f| f.code == codes::UNSUPPORTED_ELEMENT));
}

#[test]
fn malformed_xml_reports_position() {
    match parse_model("<process id=\"p\">\n  <task id=\"t\">\n</process>", "X") {
        Err(e @ ParseError::Xml { line, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(e.code(), "XML");
        }
        other => panic!("unexpected {other:?}"),
    }
}

/// Nodes reachable from the start event by a breadth-first walk over the
/// raw flow list.
fn reachable_oracle(model: &ProcessModel) -> BTreeSet<String> {
    let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
    for f in &model.flows {
        adjacency.entry(f.source.as_str()).or_default().push(f.target.as_str());
    }
    let start = model.nodes.iter().find(|n| n.kind == NodeKind::StartEvent).unwrap();
    let mut seen = BTreeSet::from([start.node_id.clone()]);
    let mut queue = VecDeque::from([start.node_id.as_str()]);
    while let Some(n) = queue.pop_front() {
        for &t in adjacency.get(n).into_iter().flatten() {
            if seen.insert(t.to_string()) {
                queue.push_back(t);
            }
        }
    }
    seen
}

fn finding_multiset(model: &ProcessModel) -> Vec<String> {
    let mut v: Vec<String> = check_wellformed(model).iter().map(|f| format!("{}|{}", f.code, f.subject)).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn write_then_parse_is_identity(seed in any::<u64>(), size in 2usize..40) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, "RT", size);
        let text = write_model(&model);
        let parsed = parse_model(&text, "RT").map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(canonical(parsed.clone()), model);
        prop_assert_eq!(write_model(&parsed), text);
    }

    #[test]
    fn sibling_order_does_not_change_findings(seed in any::<u64>(), size in 2usize..40) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, "P", size);
        let mut shuffled = model.clone();
        shuffled.nodes.shuffle(&mut rng);
        shuffled.flows.shuffle(&mut rng);
        shuffled.lanes.shuffle(&mut rng);
        shuffled.data_objects.shuffle(&mut rng);
        let a = parse_model(&write_model(&model), "P").unwrap();
        let b = parse_model(&write_model(&shuffled), "P").unwrap();
        prop_assert_eq!(finding_multiset(&a), finding_multiset(&b));
    }

    #[test]
    fn unreachable_findings_are_the_reachability_complement(seed in any::<u64>(), size in 2usize..200) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, "R", size);
        let reach = reachable_oracle(&model);
        let expected: BTreeSet<String> = model
            .nodes
            .iter()
            .filter(|n| !reach.contains(&n.node_id))
            .map(|n| format!("R/{}", n.node_id))
            .collect();
        let flagged: BTreeSet<String> = check_wellformed(&model)
            .into_iter()
            .filter(|f| f.code == codes::R1_UNREACHABLE)
            .map(|f| f.subject)
            .collect();
        prop_assert_eq!(flagged, expected);
    }

    #[test]
    fn one_milestone_per_timer_chained_event(seed in any::<u64>(), size in 2usize..60) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, "M", size);
        // Oracle: walk predecessors through non-events; count events that
        // carry a timer (other than time symbols) or meet one.
        let mut pred: HashMap<&str, Vec<&str>> = HashMap::new();
        for f in &model.flows {
            pred.entry(f.target.as_str()).or_default().push(f.source.as_str());
        }
        let by_id: HashMap<&str, _> = model.nodes.iter().map(|n| (n.node_id.as_str(), n)).collect();
        let expected = model
            .nodes
            .iter()
            .filter(|n| n.kind.is_event() && !(n.kind == NodeKind::IntermediateEvent && n.timer.is_some()))
            .filter(|n| {
                if n.timer.is_some() {
                    return true;
                }
                let mut seen = BTreeSet::from([n.node_id.as_str()]);
                let mut stack: Vec<&str> = pred.get(n.node_id.as_str()).cloned().unwrap_or_default();
                while let Some(p) = stack.pop() {
                    if !seen.insert(p) {
                        continue;
                    }
                    let node = by_id[p];
                    if node.kind.is_event() {
                        if node.timer.is_some() {
                            return true;
                        }
                    } else {
                        stack.extend(pred.get(p).into_iter().flatten());
                    }
                }
                false
            })
            .count();
        prop_assert_eq!(extract_milestones(&model).0.len(), expected);
    }
}
