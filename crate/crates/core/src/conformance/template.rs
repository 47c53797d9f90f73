use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ProcessModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    ModelId(String),
    /// Case-insensitive glob over the model's process name (its id when the
    /// name is empty).
    NamePattern(String),
}

impl Binding {
    pub fn matches(&self, model: &ProcessModel) -> bool {
        match self {
            Binding::ModelId(id) => &model.model_id == id,
            Binding::NamePattern(pattern) => {
                let subject = if model.name.trim().is_empty() { &model.model_id } else { &model.name };
                let options = glob::MatchOptions { case_sensitive: false, ..Default::default() };
                glob::Pattern::new(pattern).is_ok_and(|p| p.matches_with(subject, options))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceProcess {
    pub ref_id: String,
    pub name: String,
    pub side: Side,
    pub counterpart: Option<String>,
    pub steps: Vec<String>,
    pub roles: BTreeSet<String>,
    pub methods: BTreeSet<String>,
    pub tools: BTreeSet<String>,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template file is not valid JSON: {0}")]
    Json(String),
    #[error("template {0:?} has no steps")]
    EmptySteps(String),
    #[error("right-side template {0:?} has no counterpart")]
    MissingCounterpart(String),
    #[error("template {id:?} names unknown counterpart {counterpart:?}")]
    DanglingCounterpart { id: String, counterpart: String },
    #[error("template id {0:?} is defined twice")]
    DuplicateTemplate(String),
    #[error("template {0:?} needs a binding with exactly one of modelId or namePattern")]
    InvalidBinding(String),
    #[error("template {id:?} has an invalid name pattern: {reason}")]
    InvalidPattern { id: String, reason: String },
}

impl TemplateError {
    pub fn code(&self) -> &'static str {
        match self {
            TemplateError::Json(_) => "TEMPLATE-JSON",
            TemplateError::EmptySteps(_) => "EMPTY-STEPS",
            TemplateError::MissingCounterpart(_) => "MISSING-COUNTERPART",
            TemplateError::DanglingCounterpart { .. } => "DANGLING-COUNTERPART",
            TemplateError::DuplicateTemplate(_) => "DUPLICATE-TEMPLATE",
            TemplateError::InvalidBinding(_) => "INVALID-BINDING",
            TemplateError::InvalidPattern { .. } => "INVALID-PATTERN",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct BindingFile {
    model_id: Option<String>,
    name_pattern: Option<String>,
}

#[derive(Debug, Deserialize)]
struct TemplateFile {
    id: String,
    #[serde(default)]
    name: String,
    side: Side,
    counterpart: Option<String>,
    #[serde(default)]
    steps: Vec<String>,
    #[serde(default)]
    roles: Vec<String>,
    #[serde(default)]
    methods: Vec<String>,
    #[serde(default)]
    tools: Vec<String>,
    binding: BindingFile,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    Many(Vec<TemplateFile>),
    One(TemplateFile),
}

/// Parses a template file (one object or an array) and checks each template
/// on its own; counterpart references are checked by [`validate_templates`].
pub fn parse_templates(text: &str) -> Result<Vec<ReferenceProcess>, TemplateError> {
    let parsed: OneOrMany = serde_json::from_str(text).map_err(|e| TemplateError::Json(e.to_string()))?;
    let files = match parsed {
        OneOrMany::Many(v) => v,
        OneOrMany::One(t) => vec![t],
    };
    files
        .into_iter()
        .map(|t| {
            if t.steps.is_empty() {
                return Err(TemplateError::EmptySteps(t.id));
            }
            let binding = match (t.binding.model_id, t.binding.name_pattern) {
                (Some(id), None) => Binding::ModelId(id),
                (None, Some(pattern)) => {
                    glob::Pattern::new(&pattern)
                        .map_err(|e| TemplateError::InvalidPattern { id: t.id.clone(), reason: e.to_string() })?;
                    Binding::NamePattern(pattern)
                }
                _ => return Err(TemplateError::InvalidBinding(t.id)),
            };
            if t.side == Side::Right && t.counterpart.is_none() {
                return Err(TemplateError::MissingCounterpart(t.id));
            }
            Ok(ReferenceProcess {
                ref_id: t.id,
                name: t.name,
                side: t.side,
                counterpart: t.counterpart,
                steps: t.steps,
                roles: t.roles.into_iter().collect(),
                methods: t.methods.into_iter().collect(),
                tools: t.tools.into_iter().collect(),
                binding,
            })
        })
        .collect()
}

/// Checks id uniqueness and that every counterpart resolves.
pub fn validate_templates(templates: &[ReferenceProcess]) -> Result<(), TemplateError> {
    let mut ids: BTreeMap<&str, &ReferenceProcess> = BTreeMap::new();
    for t in templates {
        if ids.insert(t.ref_id.as_str(), t).is_some() {
            return Err(TemplateError::DuplicateTemplate(t.ref_id.clone()));
        }
    }
    for t in templates {
        if let Some(c) = &t.counterpart {
            if !ids.contains_key(c.as_str()) {
                return Err(TemplateError::DanglingCounterpart { id: t.ref_id.clone(), counterpart: c.clone() });
            }
        }
    }
    Ok(())
}

pub fn load_reference(text: &str) -> Result<Vec<ReferenceProcess>, TemplateError> {
    let templates = parse_templates(text)?;
    validate_templates(&templates)?;
    Ok(templates)
}
