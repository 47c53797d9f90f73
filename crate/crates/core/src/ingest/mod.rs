//! BPMN ingestion: parsing, well-formedness linting and milestone extraction.

pub mod anchor;
pub mod duration;
mod lint;
mod milestones;
pub mod model;
mod parse;
mod write;

pub use duration::{render_offset, Duration, DurationError};
pub use lint::check_wellformed;
pub use milestones::{extract_milestones, namespaced_object};
pub use model::{
    DataObject, FlowGraph, FlowNode, GatewayKind, Lane, NodeKind, NodeMeta, ProcessModel, SequenceFlow, TimerDef,
    TimerMode,
};
pub use parse::{keys, parse_model, parse_signed_days, ParseError, LIST_SEPARATOR};
pub use write::write_model;
