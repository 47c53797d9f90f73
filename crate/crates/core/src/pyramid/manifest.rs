use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Duration;
use crate::names::AliasTable;

pub const DEFAULT_SOP_LABEL: &str = "SOP";
pub const DEFAULT_REFERENCE_STEP_DAYS: u64 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("manifest is not valid JSON: {0}")]
    Json(String),
    #[error("root: model {0:?} is not listed under models")]
    MissingRoot(String),
    #[error("models: level 0 must hold exactly the root model {root:?}, found {found:?}")]
    RootLevel { root: String, found: Vec<String> },
    #[error("models: levels must be contiguous from 0, found {0:?}")]
    NonContiguousLevels(Vec<u32>),
    #[error("models: model id {0:?} is listed twice")]
    DuplicateModel(String),
    #[error("models[{model}].parent: {reason}")]
    InvalidParent { model: String, reason: String },
    #[error("models[{0}].documents: document path is empty")]
    EmptyDocumentPath(String),
    #[error("referenceStepDays: step must be positive")]
    InvalidStep,
}

impl ManifestError {
    pub fn code(&self) -> &'static str {
        match self {
            ManifestError::Json(_) => "MANIFEST-JSON",
            ManifestError::MissingRoot(_) => "MISSING-ROOT",
            ManifestError::RootLevel { .. } => "ROOT-LEVEL",
            ManifestError::NonContiguousLevels(_) => "NON-CONTIGUOUS-LEVELS",
            ManifestError::DuplicateModel(_) => "DUPLICATE-MODEL",
            ManifestError::InvalidParent { .. } => "INVALID-PARENT",
            ManifestError::EmptyDocumentPath(_) => "EMPTY-DOCUMENT-PATH",
            ManifestError::InvalidStep => "INVALID-STEP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRef {
    pub path: String,
    #[serde(default)]
    pub kind: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentHint {
    pub model: String,
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelEntry {
    #[serde(rename = "id")]
    pub model_id: String,
    pub file: String,
    pub level: u32,
    #[serde(default, rename = "parent", skip_serializing_if = "Option::is_none")]
    pub parent_hint: Option<ParentHint>,
    #[serde(default)]
    pub documents: Vec<DocumentRef>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ManifestFile {
    root: String,
    sop_label: Option<String>,
    reference_step_days: Option<u64>,
    alignment_tolerance_days: Option<u64>,
    #[serde(default)]
    aliases: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    reference_templates: Vec<String>,
    #[serde(default)]
    models: Vec<LevelEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<LevelEntry>,
    pub root_model: String,
    pub sop_label: String,
    pub reference_step: Duration,
    pub alignment_tolerance: Duration,
    pub alias_table: AliasTable,
    pub reference_templates: Vec<String>,
}

impl Manifest {
    pub fn entry(&self, model_id: &str) -> Option<&LevelEntry> {
        self.entries.iter().find(|e| e.model_id == model_id)
    }

    pub fn depth(&self) -> u32 {
        self.entries.iter().map(|e| e.level).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.model_id.as_str()) {
                return Err(ManifestError::DuplicateModel(e.model_id.clone()));
            }
        }
        if self.entry(&self.root_model).is_none() {
            return Err(ManifestError::MissingRoot(self.root_model.clone()));
        }
        let level0: Vec<String> = self.entries.iter().filter(|e| e.level == 0).map(|e| e.model_id.clone()).collect();
        if level0 != [self.root_model.clone()] {
            return Err(ManifestError::RootLevel { root: self.root_model.clone(), found: level0 });
        }
        let levels: BTreeSet<u32> = self.entries.iter().map(|e| e.level).collect();
        if levels.iter().enumerate().any(|(i, &l)| l as usize != i) {
            return Err(ManifestError::NonContiguousLevels(levels.into_iter().collect()));
        }
        for e in &self.entries {
            if let Some(parent) = &e.parent_hint {
                let invalid = |reason: String| ManifestError::InvalidParent { model: e.model_id.clone(), reason };
                if e.level == 0 {
                    return Err(invalid("the root level has no parent".into()));
                }
                match self.entry(&parent.model) {
                    None => return Err(invalid(format!("unknown parent model {:?}", parent.model))),
                    Some(p) if p.level + 1 != e.level => {
                        return Err(invalid(format!(
                            "parent {:?} sits at level {}, expected {}",
                            parent.model,
                            p.level,
                            e.level - 1
                        )))
                    }
                    Some(_) => {}
                }
            }
            if e.documents.iter().any(|d| d.path.trim().is_empty()) {
                return Err(ManifestError::EmptyDocumentPath(e.model_id.clone()));
            }
        }
        if self.reference_step.days == 0 {
            return Err(ManifestError::InvalidStep);
        }
        Ok(())
    }
}

/// Parses and validates the JSON manifest, applying defaults for the SOP
/// label (`SOP`), reference step (30 days) and alignment tolerance (0 days).
pub fn load_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let file: ManifestFile = serde_json::from_str(text).map_err(|e| ManifestError::Json(e.to_string()))?;
    let manifest = Manifest {
        entries: file.models,
        root_model: file.root,
        sop_label: file.sop_label.unwrap_or_else(|| DEFAULT_SOP_LABEL.to_string()),
        reference_step: Duration::days(file.reference_step_days.unwrap_or(DEFAULT_REFERENCE_STEP_DAYS)),
        alignment_tolerance: Duration::days(file.alignment_tolerance_days.unwrap_or(0)),
        alias_table: AliasTable::from(file.aliases),
        reference_templates: file.reference_templates,
    };
    manifest.validate()?;
    Ok(manifest)
}
