//! A manifest with its model files and reference templates, loaded once and
//! analyzed stage by stage.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformance::{check_vv_links, diff_all, load_reference, validate_templates, ReferenceProcess, Thresholds};
use crate::dependency::{check_temporal, cross_check_declared, find_redundant, infer_edges, DependencyGraph};
use crate::finding::{codes, Finding};
use crate::ingest::{check_wellformed, extract_milestones, parse_model, ParseError, ProcessModel};
use crate::pyramid::{build_pyramid, load_manifest, Manifest, ManifestError, Pyramid, PyramidError};
use crate::timeline::{
    check_alignment, check_gq, check_milestone_ids, reconcile_declared, resolve_offsets, Milestone, OffsetTable,
};

pub const MODEL_EXTENSION: &str = "bpmn";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Manifest { path: PathBuf, source: ManifestError },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Template { path: PathBuf, source: crate::conformance::TemplateError },
    #[error(transparent)]
    Pyramid(#[from] PyramidError),
}

impl BundleError {
    pub fn code(&self) -> &'static str {
        match self {
            BundleError::Io { .. } => "IO",
            BundleError::Manifest { source, .. } => source.code(),
            BundleError::Parse { source, .. } => source.code(),
            BundleError::Template { source, .. } => source.code(),
            BundleError::Pyramid(_) => "MISSING-ROOT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Pyramid,
    Timeline,
    Dependency,
    Conformance,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Ingest, Stage::Pyramid, Stage::Timeline, Stage::Dependency, Stage::Conformance];
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub manifest: Manifest,
    pub pyramid: Pyramid,
    pub milestones: Vec<Milestone>,
    pub references: Vec<ReferenceProcess>,
    ingest_findings: Vec<Finding>,
    pyramid_findings: Vec<Finding>,
}

fn read(path: &Path) -> Result<String, BundleError> {
    fs::read_to_string(path).map_err(|e| BundleError::Io { path: path.to_path_buf(), message: e.to_string() })
}

impl Bundle {
    /// Reads the manifest, every listed model file and every template file.
    /// Paths are relative to the manifest's directory. Unreadable model
    /// files become `MISSING-MODEL`; unlisted `.bpmn` files next to the
    /// manifest become `ORPHAN-MODEL`.
    pub fn load(manifest_path: &Path) -> Result<Bundle, BundleError> {
        let dir = manifest_path.parent().unwrap_or(Path::new("")).to_path_buf();
        let manifest = load_manifest(&read(manifest_path)?)
            .map_err(|source| BundleError::Manifest { path: manifest_path.to_path_buf(), source })?;

        let mut models = Vec::new();
        let mut extra = Vec::new();
        let mut listed = BTreeSet::new();
        for entry in &manifest.entries {
            let path = dir.join(&entry.file);
            listed.insert(path.canonicalize().unwrap_or_else(|_| path.clone()));
            let text = match fs::read_to_string(&path) {
                Ok(text) => text,
                // build_pyramid reports the absent model.
                Err(_) => continue,
            };
            let mut model = parse_model(&text, &entry.model_id)
                .map_err(|source| BundleError::Parse { path: path.clone(), source })?;
            model.source_path = entry.file.clone();
            models.push(model);
        }
        if let Ok(listing) = fs::read_dir(&dir) {
            let mut orphans: Vec<PathBuf> = listing
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == MODEL_EXTENSION))
                .filter(|p| !listed.contains(&p.canonicalize().unwrap_or_else(|_| p.clone())))
                .collect();
            orphans.sort();
            for p in orphans {
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                extra.push(Finding::warning(codes::ORPHAN_MODEL, &name, "model file is not listed in the manifest"));
            }
        }

        let mut references = Vec::new();
        for file in &manifest.reference_templates {
            let path = dir.join(file);
            let loaded =
                load_reference(&read(&path)?).map_err(|source| BundleError::Template { path: path.clone(), source })?;
            references.extend(loaded);
        }
        validate_templates(&references)
            .map_err(|source| BundleError::Template { path: manifest_path.to_path_buf(), source })?;

        let mut bundle = Bundle::from_parts(manifest, models, references)?;
        bundle.pyramid_findings.extend(extra);
        Ok(bundle)
    }

    /// Assembles a bundle from already parsed parts.
    pub fn from_parts(
        manifest: Manifest,
        models: Vec<ProcessModel>,
        references: Vec<ReferenceProcess>,
    ) -> Result<Bundle, BundleError> {
        let mut ingest_findings = Vec::new();
        let mut milestones = Vec::new();
        for model in &models {
            ingest_findings.extend(model.parse_notes.iter().cloned());
            ingest_findings.extend(check_wellformed(model));
            let (found, notes) = extract_milestones(model);
            ingest_findings.extend(notes);
            milestones.extend(found);
        }
        ingest_findings.extend(check_milestone_ids(&milestones));

        let (mut pyramid, mut pyramid_findings) = build_pyramid(&manifest, models)?;
        pyramid_findings.extend(pyramid.link_levels());
        pyramid_findings.extend(pyramid.check_connectivity().findings);
        // Milestones of models dropped from the pyramid take no further part.
        milestones.retain(|m| pyramid.model(&m.model_id).is_some());

        Ok(Bundle { manifest, pyramid, milestones, references, ingest_findings, pyramid_findings })
    }

    pub fn offsets(&self) -> (OffsetTable, Vec<Finding>) {
        resolve_offsets(&self.pyramid, &self.milestones)
    }

    pub fn dependency_graph(&self) -> DependencyGraph {
        infer_edges(&self.milestones, &self.pyramid.settings.alias_table)
    }

    pub fn stage_findings(&self, stage: Stage) -> Vec<Finding> {
        let mut out = match stage {
            Stage::Ingest => self.ingest_findings.clone(),
            Stage::Pyramid => self.pyramid_findings.clone(),
            Stage::Timeline => {
                let (table, mut findings) = self.offsets();
                findings.extend(reconcile_declared(&table, &self.milestones));
                findings.extend(self.milestones.iter().flat_map(check_gq));
                findings.extend(check_alignment(&self.pyramid, &table, &self.milestones));
                findings
            }
            Stage::Dependency => {
                let (table, _) = self.offsets();
                let graph = self.dependency_graph();
                let mut findings = cross_check_declared(&graph);
                findings.extend(check_temporal(&graph, &table));
                findings.extend(find_redundant(&self.milestones, &self.pyramid.settings.alias_table));
                findings
            }
            Stage::Conformance => {
                let mut findings: Vec<Finding> =
                    diff_all(&self.pyramid, &self.milestones, &self.references, Thresholds::default())
                        .iter()
                        .filter_map(|r| r.to_finding())
                        .collect();
                let graph = self.dependency_graph();
                findings.extend(check_vv_links(&self.pyramid, &graph, &self.milestones, &self.references).0);
                findings
            }
        };
        sort_findings(&mut out);
        out
    }

    /// Deduplicated union over the given stages.
    pub fn findings(&self, stages: &[Stage]) -> Vec<Finding> {
        let mut out: Vec<Finding> = stages.iter().flat_map(|&s| self.stage_findings(s)).collect();
        sort_findings(&mut out);
        out
    }
}

/// Severity, then code, subject and message; exact duplicates removed.
pub fn sort_findings(findings: &mut Vec<Finding>) {
    findings.sort_by(|a, b| {
        (a.severity, &a.code, &a.subject, &a.message).cmp(&(b.severity, &b.code, &b.subject, &b.message))
    });
    findings.dedup();
}
