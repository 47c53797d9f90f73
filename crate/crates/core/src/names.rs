//! Name normalization and the manifest alias table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Case-folds, trims and collapses internal whitespace.
pub fn normalize(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Synonym groups keyed by canonical name. Lookups are on normalized names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, Vec<String>>", into = "BTreeMap<String, Vec<String>>")]
pub struct AliasTable {
    groups: BTreeMap<String, Vec<String>>,
    lookup: BTreeMap<String, String>,
}

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `synonym` as another spelling of `canonical`.
    /// The first group a name is declared in wins.
    pub fn add(&mut self, canonical: &str, synonym: &str) {
        let canon = normalize(canonical);
        self.groups.entry(canonical.to_string()).or_default().push(synonym.to_string());
        let target = self.lookup.get(&canon).cloned().unwrap_or_else(|| canon.clone());
        self.lookup.entry(canon).or_insert_with(|| target.clone());
        self.lookup.entry(normalize(synonym)).or_insert(target);
    }

    /// Normalized canonical form of `name`.
    pub fn canonical(&self, name: &str) -> String {
        let n = normalize(name);
        self.lookup.get(&n).cloned().unwrap_or(n)
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

impl From<BTreeMap<String, Vec<String>>> for AliasTable {
    fn from(groups: BTreeMap<String, Vec<String>>) -> Self {
        let mut table = AliasTable::new();
        for (canonical, synonyms) in &groups {
            table.groups.entry(canonical.clone()).or_default();
            let canon = normalize(canonical);
            table.lookup.entry(canon.clone()).or_insert(canon);
            for s in synonyms {
                table.add(canonical, s);
            }
        }
        table
    }
}

impl From<AliasTable> for BTreeMap<String, Vec<String>> {
    fn from(table: AliasTable) -> Self {
        table.groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize("  Test   Engineer "), "test engineer");
        assert_eq!(normalize("CRASH\tLoad\nSpec"), "crash load spec");
    }

    #[test]
    fn aliases_map_to_canonical() {
        let mut groups = BTreeMap::new();
        groups.insert("Crash Load Spec".to_string(), vec!["CLS".to_string(), "crash-load-spec".to_string()]);
        let table = AliasTable::from(groups);
        assert_eq!(table.canonical("cls"), "crash load spec");
        assert_eq!(table.canonical("Crash-Load-Spec"), "crash load spec");
        assert_eq!(table.canonical("crash load  spec"), "crash load spec");
        assert_eq!(table.canonical("other"), "other");
    }
}
