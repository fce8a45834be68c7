//! Model validation and detection of many-to-many relaxations.
//!
//! [`validate_model`] checks every type invariant and referential rule and
//! reports them as data. Hard violations are never allowed into a committed
//! store state; warnings (orphan concepts, enumerated domains still waiting for
//! their first value) are tolerated to permit staged ingest.
//!
//! [`strict_iso_check`] reports where a model relies on the three relaxed
//! relations, i.e. where the original one-to-many model could not hold it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Datatype, Item, ItemId, ItemKind, Model, OntologyRef, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    EmptyOntologyRef,
    DuplicateOntologyKey,
    EmptyLabel,
    DuplicateSynonym,
    InvalidRange,
    ValuesOnNonEnumerated,
    EmptyRegistryName,
    DuplicateRegistryName,
    EmptyStoragePath,
    DuplicateStoragePath,
    DanglingReference,
    EnumeratedWithoutValues,
    OrphanConcept,
}

impl Rule {
    pub fn severity(self) -> Severity {
        match self {
            Rule::EnumeratedWithoutValues | Rule::OrphanConcept => Severity::Warning,
            _ => Severity::Violation,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Rule::EmptyOntologyRef => "empty ontology name or id",
            Rule::DuplicateOntologyKey => "duplicate ontology key",
            Rule::EmptyLabel => "empty label",
            Rule::DuplicateSynonym => "duplicate synonym",
            Rule::InvalidRange => "invalid range",
            Rule::ValuesOnNonEnumerated => "permissible values on non-enumerated domain",
            Rule::EmptyRegistryName => "empty registry name",
            Rule::DuplicateRegistryName => "duplicate registry name",
            Rule::EmptyStoragePath => "empty storage path",
            Rule::DuplicateStoragePath => "duplicate storage path",
            Rule::DanglingReference => "dangling reference",
            Rule::EnumeratedWithoutValues => "enumerated domain without values",
            Rule::OrphanConcept => "orphan data element concept",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.description())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub rule: Rule,
    /// Item kind, or `link:<relation>` for link pairs.
    pub entity_kind: String,
    pub entity_id: String,
    pub message: String,
}

impl Finding {
    fn new(rule: Rule, entity_kind: impl Into<String>, entity_id: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: rule.severity(),
            rule,
            entity_kind: entity_kind.into(),
            entity_id: entity_id.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Violation => "violation",
        };
        write!(f, "{sev}: {} {}: {} ({})", self.entity_kind, self.entity_id, self.rule, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn violations(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Violation)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_violations(&self) -> bool {
        self.violations().next().is_some()
    }

    /// 0 clean, 1 warnings only, 2 hard violations.
    pub fn exit_code(&self) -> i32 {
        if self.has_violations() {
            2
        } else if self.findings.is_empty() {
            0
        } else {
            1
        }
    }
}

fn has_duplicate_ci(values: &[String]) -> Option<&str> {
    let mut seen = BTreeSet::new();
    values.iter().find(|s| !seen.insert(s.to_lowercase())).map(String::as_str)
}

/// Invariants that can be checked on a single payload without the rest of the model.
pub fn check_item(item: &Item) -> Vec<(Rule, String)> {
    let mut out = Vec::new();
    if let Some(c) = item.as_catalogued() {
        if !c.ontology_ref().is_well_formed() {
            out.push((Rule::EmptyOntologyRef, format!("ref `{}`", c.ontology_ref())));
        }
        if c.label().trim().is_empty() {
            out.push((Rule::EmptyLabel, "label must not be empty".to_owned()));
        }
        if let Some(dup) = has_duplicate_ci(c.synonyms()) {
            out.push((Rule::DuplicateSynonym, format!("synonym `{dup}` appears twice")));
        }
    }
    match item {
        Item::ValueDomain(vd) => {
            if let Some(range) = &vd.range {
                if !vd.datatype.is_numeric() {
                    out.push((Rule::InvalidRange, format!("range not allowed for {:?} datatype", vd.datatype)));
                } else if !range.is_valid() {
                    out.push((Rule::InvalidRange, format!("lo {} > hi {}", range.lo, range.hi)));
                }
            }
        }
        Item::Registry(r) => {
            if r.name.trim().is_empty() {
                out.push((Rule::EmptyRegistryName, "registry name must not be empty".to_owned()));
            }
        }
        Item::DataElement(de) => {
            if de.storage_path.trim().is_empty() {
                out.push((Rule::EmptyStoragePath, "storage path must not be empty".to_owned()));
            }
        }
        _ => {}
    }
    out
}

/// Reports every broken invariant of `model`. Pure; calling it twice yields equal reports.
pub fn validate_model(model: &Model) -> ValidationReport {
    let mut findings = Vec::new();

    let mut push_local = |kind: ItemKind, id: &ItemId, item: Item| {
        for (rule, msg) in check_item(&item) {
            findings.push(Finding::new(rule, kind.as_str(), id.as_str(), msg));
        }
    };
    for kind in ItemKind::ALL {
        for id in model.ids(kind) {
            let item = model.get(kind, &id).expect("id listed by model");
            push_local(kind, &id, item);
        }
    }

    for kind in ItemKind::CATALOGUED {
        let mut seen: BTreeMap<&OntologyRef, &ItemId> = BTreeMap::new();
        for (id, item) in model.catalogued(kind) {
            if let Some(first) = seen.get(item.ontology_ref()) {
                findings.push(Finding::new(
                    Rule::DuplicateOntologyKey,
                    kind.as_str(),
                    id.as_str(),
                    format!("ref `{}` already used by {first}", item.ontology_ref()),
                ));
            } else {
                seen.insert(item.ontology_ref(), id);
            }
        }
    }

    let mut names: BTreeMap<String, &ItemId> = BTreeMap::new();
    for (id, reg) in &model.registries {
        if let Some(first) = names.get(&reg.name.to_lowercase()) {
            findings.push(Finding::new(
                Rule::DuplicateRegistryName,
                ItemKind::Registry.as_str(),
                id.as_str(),
                format!("name `{}` already used by {first}", reg.name),
            ));
        } else {
            names.insert(reg.name.to_lowercase(), id);
        }
    }

    let mut paths: BTreeMap<(&ItemId, &str), &ItemId> = BTreeMap::new();
    for (id, de) in &model.data_elements {
        let kind = ItemKind::DataElement.as_str();
        if let Some(first) = paths.get(&(&de.registry_id, de.storage_path.as_str())) {
            findings.push(Finding::new(
                Rule::DuplicateStoragePath,
                kind,
                id.as_str(),
                format!("path `{}` already used by {first}", de.storage_path),
            ));
        } else {
            paths.insert((&de.registry_id, de.storage_path.as_str()), id);
        }
        for (target_kind, target) in [
            (ItemKind::Registry, &de.registry_id),
            (ItemKind::DataElementConcept, &de.expresses),
            (ItemKind::ValueDomain, &de.value_domain),
        ] {
            if !model.contains(target_kind, target) {
                findings.push(Finding::new(
                    Rule::DanglingReference,
                    kind,
                    id.as_str(),
                    format!("{target_kind} {target} does not exist"),
                ));
            }
        }
    }

    for rel in Relation::ALL {
        for (left, right) in model.links.pairs(rel) {
            let ok_left = model.contains(rel.left_kind(), left);
            let ok_right = model.contains(rel.right_kind(), right);
            if !(ok_left && ok_right) {
                findings.push(Finding::new(
                    Rule::DanglingReference,
                    format!("link:{rel}"),
                    format!("{left}->{right}"),
                    format!("endpoint missing (left present: {ok_left}, right present: {ok_right})"),
                ));
            }
        }
    }

    for (id, vd) in &model.value_domains {
        let has_values = model.links.children(Relation::VdPv, id).next().is_some();
        let kind = ItemKind::ValueDomain.as_str();
        match (vd.datatype == Datatype::Enumerated, has_values) {
            (true, false) => findings.push(Finding::new(
                Rule::EnumeratedWithoutValues,
                kind,
                id.as_str(),
                "no permissible value linked yet",
            )),
            (false, true) => findings.push(Finding::new(
                Rule::ValuesOnNonEnumerated,
                kind,
                id.as_str(),
                format!("{:?} domain has permissible values", vd.datatype),
            )),
            _ => {}
        }
    }

    let with_parent: BTreeSet<&ItemId> = model.links.cd_dec.iter().map(|(_, dec)| dec).collect();
    for id in model.data_element_concepts.keys() {
        if !with_parent.contains(id) {
            findings.push(Finding::new(
                Rule::OrphanConcept,
                ItemKind::DataElementConcept.as_str(),
                id.as_str(),
                "not linked to any conceptual domain",
            ));
        }
    }

    ValidationReport { findings }
}

/// One entity that needs a relaxed many-to-many relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelaxationUsage {
    pub relation: Relation,
    pub child_kind: ItemKind,
    pub child_id: ItemId,
    #[serde(rename = "child_ref")]
    pub child_ref: OntologyRef,
    pub label: String,
    pub parents: Vec<ItemId>,
}

impl fmt::Display for RelaxationUsage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} \"{}\" ({}) has {} parents via {}",
            self.child_kind,
            self.label,
            self.child_ref,
            self.parents.len(),
            self.relation
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StrictIsoOptions {
    /// Count links of temporary value domains as parents.
    pub include_temporary: bool,
}

/// Entities with more than one parent in any of the three relations.
///
/// An empty result means the model fits the unmodified one-to-many layout.
pub fn strict_iso_check(model: &Model, options: StrictIsoOptions) -> Vec<RelaxationUsage> {
    let is_temp = |vd: &ItemId| model.value_domains.get(vd).is_some_and(|v| v.temporary);
    let mut out = Vec::new();
    for rel in Relation::ALL {
        let mut parents: BTreeMap<&ItemId, Vec<ItemId>> = BTreeMap::new();
        for (left, right) in model.links.pairs(rel) {
            if !options.include_temporary {
                let vd_side = match rel {
                    Relation::CdDec => None,
                    Relation::CdVd => Some(right),
                    Relation::VdPv => Some(left),
                };
                if vd_side.is_some_and(is_temp) {
                    continue;
                }
            }
            parents.entry(right).or_default().push(left.clone());
        }
        for (child, parents) in parents {
            if parents.len() < 2 {
                continue;
            }
            let kind = rel.right_kind();
            let (child_ref, label) = match model.get(kind, child).as_ref().and_then(Item::as_catalogued) {
                Some(c) => (c.ontology_ref().clone(), c.label().to_owned()),
                None => continue,
            };
            out.push(RelaxationUsage {
                relation: rel,
                child_kind: kind,
                child_id: child.clone(),
                child_ref,
                label,
                parents,
            });
        }
    }
    out
}

/// Validator for the original one-to-many model: rejects any relaxation usage.
pub fn strict_one_to_many(model: &Model) -> Result<(), Vec<RelaxationUsage>> {
    let usages = strict_iso_check(model, StrictIsoOptions { include_temporary: true });
    if usages.is_empty() {
        Ok(())
    } else {
        Err(usages)
    }
}
