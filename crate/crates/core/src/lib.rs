//! Process pyramids: multi-level BPMN process models tied together by
//! milestones on a common SOP-relative timeline.

pub mod bundle;
pub mod conformance;
pub mod dependency;
pub mod finding;
pub mod ingest;
pub mod names;
pub mod pyramid;
pub mod timeline;

pub use bundle::{Bundle, BundleError, Stage};
pub use finding::{Finding, Severity};
