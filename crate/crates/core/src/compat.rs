//! Compatibility of data elements across registries.
//!
//! Two data elements are only comparable when they express the same data
//! element concept (after collapsing cross-ontology synonyms). Their value
//! domains then decide the verdict:
//!
//! | value domains                                   | verdict                 |
//! |-------------------------------------------------|-------------------------|
//! | equal datatype and equal value set / unit+range | `fully_compatible`      |
//! | shared values, or overlapping ranges (same unit)| `partially_compatible`  |
//! | anything else                                   | `incompatible`          |
//!
//! Value domain equality does not require the same row: two registries that
//! independently register the same answer list are fully compatible.
//! Permissible values are compared by ontology ref, with refs in one mapping
//! component counting as the same value.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::SynonymIndex;
use crate::model::{Datatype, Item, ItemId, ItemKind, Model, OntologyRef, Relation, ValueDomain};
use crate::store::{Store, StoreError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompatError {
    #[error("unknown {kind} {id}")]
    UnknownEntity { kind: ItemKind, id: ItemId },
    #[error("elements are {verdict:?}, not partially compatible")]
    NotPartiallyCompatible { verdict: Verdict },
    #[error("common domain would have no values")]
    EmptyIntersection,
    #[error("at least two distinct registries are required")]
    NeedTwoRegistries,
    #[error("a registry cannot be summarised against itself")]
    SameRegistry,
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub type Result<T, E = CompatError> = std::result::Result<T, E>;

/// Ordered weakest first, so `min` over pair verdicts gives the weakest link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NotComparable,
    Incompatible,
    PartiallyCompatible,
    FullyCompatible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    DifferentConcept,
    DatatypeMismatch,
    ValueSetsEqual,
    ValueSetsOverlap,
    ValueSetsDisjoint,
    UnitMismatch,
    RangesEqual,
    RangesOverlap,
    RangesDisjoint,
    FormatEqual,
    FormatMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub left: ItemId,
    pub right: ItemId,
    /// Concept both elements express; `None` when not comparable.
    pub concept: Option<OntologyRef>,
    pub verdict: Verdict,
    pub shared_values: BTreeSet<OntologyRef>,
    pub detail: Reason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinLevel {
    Full,
    Partial,
}

impl MinLevel {
    pub fn admits(self, verdict: Verdict) -> bool {
        match self {
            MinLevel::Full => verdict == Verdict::FullyCompatible,
            MinLevel::Partial => verdict >= Verdict::PartiallyCompatible,
        }
    }
}

impl std::str::FromStr for MinLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(MinLevel::Full),
            "partial" => Ok(MinLevel::Partial),
            other => Err(format!("min level must be `full` or `partial`, got `{other}`")),
        }
    }
}

/// Intersection domain for a partially compatible pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporaryValueDomain {
    pub id: ItemId,
    pub derived_from: [ItemId; 2],
    pub values: BTreeSet<OntologyRef>,
    pub datatype: Datatype,
    pub persisted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryPairSummary {
    pub registry_a: ItemId,
    pub registry_b: ItemId,
    pub shared_concept_count: usize,
    pub shared_concepts: Vec<OntologyRef>,
    /// Cross-registry element pairs, counted per pair.
    pub fully_compatible_pairs: usize,
    pub partially_compatible_pairs: usize,
    pub incompatible_pairs: usize,
    /// Distinct elements (either registry) in at least one pair of that level.
    pub fully_compatible_elements: usize,
    pub partially_compatible_elements: usize,
}

impl RegistryPairSummary {
    /// The same summary seen from the other registry.
    pub fn swapped(&self) -> Self {
        Self {
            registry_a: self.registry_b.clone(),
            registry_b: self.registry_a.clone(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub concept: OntologyRef,
    pub label: String,
    pub elements: BTreeMap<ItemId, Vec<ItemId>>,
    pub level: Verdict,
}

/// Compatibility queries over one immutable snapshot.
pub struct CompatEngine<'a> {
    model: &'a Model,
    synonyms: &'a dyn SynonymIndex,
}

impl<'a> CompatEngine<'a> {
    pub fn new(model: &'a Model, synonyms: &'a dyn SynonymIndex) -> Self {
        Self { model, synonyms }
    }

    fn value_domain(&self, id: &ItemId) -> Result<&'a ValueDomain> {
        self.model
            .value_domains
            .get(id)
            .ok_or_else(|| CompatError::UnknownEntity { kind: ItemKind::ValueDomain, id: id.clone() })
    }

    fn element(&self, id: &ItemId) -> Result<&'a crate::model::DataElement> {
        self.model
            .data_elements
            .get(id)
            .ok_or_else(|| CompatError::UnknownEntity { kind: ItemKind::DataElement, id: id.clone() })
    }

    /// Permissible value refs of a domain, each paired with its canonical synonym.
    fn values(&self, vd: &ItemId) -> BTreeMap<OntologyRef, OntologyRef> {
        self.model
            .links
            .children(Relation::VdPv, vd)
            .filter_map(|pv| self.model.permissible_values.get(pv))
            .map(|pv| (pv.ontology_ref.clone(), self.synonyms.canonical(&pv.ontology_ref)))
            .collect()
    }

    fn canonical_values(&self, vd: &ItemId) -> BTreeSet<OntologyRef> {
        self.values(vd).into_values().collect()
    }

    fn concept_class(&self, de: &crate::model::DataElement) -> Option<OntologyRef> {
        self.model
            .data_element_concepts
            .get(&de.expresses)
            .map(|c| self.synonyms.canonical(&c.ontology_ref))
    }

    pub fn value_domains_equal(&self, a: &ItemId, b: &ItemId) -> Result<bool> {
        let (va, vb) = (self.value_domain(a)?, self.value_domain(b)?);
        if a == b {
            return Ok(true);
        }
        if va.datatype != vb.datatype {
            return Ok(false);
        }
        Ok(match va.datatype {
            Datatype::Enumerated => self.canonical_values(a) == self.canonical_values(b),
            Datatype::Integer | Datatype::Decimal => va.format == vb.format && va.range == vb.range,
            Datatype::String | Datatype::Date | Datatype::Boolean => va.format == vb.format,
        })
    }

    /// Verdict and shared values for two value domains, assuming the concepts match.
    fn compare_domains(&self, a: &ItemId, b: &ItemId) -> Result<(Verdict, Reason, BTreeSet<OntologyRef>)> {
        let (va, vb) = (self.value_domain(a)?, self.value_domain(b)?);
        if va.datatype != vb.datatype {
            return Ok((Verdict::Incompatible, Reason::DatatypeMismatch, BTreeSet::new()));
        }
        let out = match va.datatype {
            Datatype::Enumerated => {
                let (left, right) = (self.values(a), self.values(b));
                let lc: BTreeSet<&OntologyRef> = left.values().collect();
                let rc: BTreeSet<&OntologyRef> = right.values().collect();
                let common: BTreeSet<&OntologyRef> = lc.intersection(&rc).copied().collect();
                // Actual refs from either side whose synonym class is shared.
                let shared: BTreeSet<OntologyRef> = left
                    .iter()
                    .chain(right.iter())
                    .filter(|(_, canon)| common.contains(canon))
                    .map(|(r, _)| r.clone())
                    .collect();
                if lc == rc {
                    (Verdict::FullyCompatible, Reason::ValueSetsEqual, shared)
                } else if !common.is_empty() {
                    (Verdict::PartiallyCompatible, Reason::ValueSetsOverlap, shared)
                } else {
                    (Verdict::Incompatible, Reason::ValueSetsDisjoint, BTreeSet::new())
                }
            }
            Datatype::Integer | Datatype::Decimal => {
                if va.format != vb.format {
                    (Verdict::Incompatible, Reason::UnitMismatch, BTreeSet::new())
                } else {
                    match (&va.range, &vb.range) {
                        _ if va.range == vb.range => (Verdict::FullyCompatible, Reason::RangesEqual, BTreeSet::new()),
                        (Some(ra), Some(rb)) if !ra.overlaps(rb) => {
                            (Verdict::Incompatible, Reason::RangesDisjoint, BTreeSet::new())
                        }
                        // An absent range is unbounded and overlaps any valid one.
                        _ => (Verdict::PartiallyCompatible, Reason::RangesOverlap, BTreeSet::new()),
                    }
                }
            }
            Datatype::String | Datatype::Date | Datatype::Boolean => {
                if va.format == vb.format {
                    (Verdict::FullyCompatible, Reason::FormatEqual, BTreeSet::new())
                } else {
                    (Verdict::Incompatible, Reason::FormatMismatch, BTreeSet::new())
                }
            }
        };
        Ok(out)
    }

    pub fn compare_elements(&self, a: &ItemId, b: &ItemId) -> Result<CompatibilityReport> {
        let (ea, eb) = (self.element(a)?, self.element(b)?);
        let (ca, cb) = (self.concept_class(ea), self.concept_class(eb));
        let same_concept = ca.is_some() && ca == cb;
        if !same_concept {
            return Ok(CompatibilityReport {
                left: a.clone(),
                right: b.clone(),
                concept: None,
                verdict: Verdict::NotComparable,
                shared_values: BTreeSet::new(),
                detail: Reason::DifferentConcept,
            });
        }
        let concept = [&ea.expresses, &eb.expresses]
            .into_iter()
            .filter_map(|id| self.model.data_element_concepts.get(id))
            .map(|c| c.ontology_ref.clone())
            .min();
        let (verdict, detail, shared_values) = self.compare_domains(&ea.value_domain, &eb.value_domain)?;
        Ok(CompatibilityReport {
            left: a.clone(),
            right: b.clone(),
            concept,
            verdict,
            shared_values,
            detail,
        })
    }

    /// Intersection domain for a partially compatible enumerated pair (not stored).
    pub fn make_temporary_common_domain(&self, a: &ItemId, b: &ItemId) -> Result<TemporaryValueDomain> {
        let report = self.compare_elements(a, b)?;
        if report.verdict != Verdict::PartiallyCompatible {
            return Err(CompatError::NotPartiallyCompatible { verdict: report.verdict });
        }
        let (ea, eb) = (self.element(a)?, self.element(b)?);
        let datatype = self.value_domain(&ea.value_domain)?.datatype;
        if datatype != Datatype::Enumerated {
            return Err(CompatError::NotPartiallyCompatible { verdict: report.verdict });
        }
        if report.shared_values.is_empty() {
            return Err(CompatError::EmptyIntersection);
        }
        Ok(TemporaryValueDomain {
            id: ItemId::from(format!("tmp-{}", ItemId::generate())),
            derived_from: [ea.value_domain.clone(), eb.value_domain.clone()],
            values: report.shared_values,
            datatype,
            persisted: false,
        })
    }

    /// Elements grouped by canonical concept for one registry.
    fn elements_by_concept(&self, registry: &ItemId) -> BTreeMap<OntologyRef, Vec<ItemId>> {
        let mut out: BTreeMap<OntologyRef, Vec<ItemId>> = BTreeMap::new();
        for (id, de) in &self.model.data_elements {
            if &de.registry_id != registry {
                continue;
            }
            if let Some(class) = self.concept_class(de) {
                out.entry(class).or_default().push(id.clone());
            }
        }
        out
    }

    fn require_registry(&self, id: &ItemId) -> Result<()> {
        if self.model.registries.contains_key(id) {
            Ok(())
        } else {
            Err(CompatError::UnknownEntity { kind: ItemKind::Registry, id: id.clone() })
        }
    }

    /// Smallest concept ref expressed by any of `elements` (the class representative shown to users).
    fn representative(&self, elements: impl IntoIterator<Item = ItemId>) -> Option<(OntologyRef, String)> {
        elements
            .into_iter()
            .filter_map(|e| self.model.data_elements.get(&e))
            .filter_map(|de| self.model.data_element_concepts.get(&de.expresses))
            .map(|c| (c.ontology_ref.clone(), c.label.clone()))
            .min()
    }

    pub fn registry_pair_summary(&self, a: &ItemId, b: &ItemId) -> Result<RegistryPairSummary> {
        self.require_registry(a)?;
        self.require_registry(b)?;
        if a == b {
            return Err(CompatError::SameRegistry);
        }
        let (ga, gb) = (self.elements_by_concept(a), self.elements_by_concept(b));
        let mut shared_concepts = Vec::new();
        let (mut full, mut partial, mut incompatible) = (0, 0, 0);
        let mut full_elems = BTreeSet::new();
        let mut partial_elems = BTreeSet::new();
        for (class, left) in &ga {
            let Some(right) = gb.get(class) else { continue };
            let members = left.iter().chain(right.iter()).cloned();
            if let Some((r, _)) = self.representative(members) {
                shared_concepts.push(r);
            }
            for x in left {
                for y in right {
                    match self.compare_elements(x, y)?.verdict {
                        Verdict::FullyCompatible => {
                            full += 1;
                            full_elems.extend([x.clone(), y.clone()]);
                        }
                        Verdict::PartiallyCompatible => {
                            partial += 1;
                            partial_elems.extend([x.clone(), y.clone()]);
                        }
                        Verdict::Incompatible => incompatible += 1,
                        Verdict::NotComparable => {}
                    }
                }
            }
        }
        shared_concepts.sort();
        Ok(RegistryPairSummary {
            registry_a: a.clone(),
            registry_b: b.clone(),
            shared_concept_count: shared_concepts.len(),
            shared_concepts,
            fully_compatible_pairs: full,
            partially_compatible_pairs: partial,
            incompatible_pairs: incompatible,
            fully_compatible_elements: full_elems.len(),
            partially_compatible_elements: partial_elems.len(),
        })
    }

    /// Concepts expressed in every registry whose cross-registry pairs all reach `min`.
    pub fn discover_features(&self, registries: &BTreeSet<ItemId>, min: MinLevel) -> Result<Vec<Feature>> {
        if registries.len() < 2 {
            return Err(CompatError::NeedTwoRegistries);
        }
        let mut groups = Vec::with_capacity(registries.len());
        for r in registries {
            self.require_registry(r)?;
            groups.push((r, self.elements_by_concept(r)));
        }
        let (_, first) = &groups[0];
        let mut features = Vec::new();
        'concepts: for class in first.keys() {
            let mut per_registry = BTreeMap::new();
            for (reg, g) in &groups {
                match g.get(class) {
                    Some(els) => {
                        per_registry.insert((*reg).clone(), els.clone());
                    }
                    None => continue 'concepts,
                }
            }
            let mut level = Verdict::FullyCompatible;
            for (i, (_, xs)) in per_registry.iter().enumerate() {
                for (_, ys) in per_registry.iter().skip(i + 1) {
                    for x in xs {
                        for y in ys {
                            level = level.min(self.compare_elements(x, y)?.verdict);
                            if !min.admits(level) {
                                continue 'concepts;
                            }
                        }
                    }
                }
            }
            let members = per_registry.values().flatten().cloned();
            let (concept, label) = self.representative(members).expect("every group has elements with concepts");
            features.push(Feature { concept, label, elements: per_registry, level });
        }
        features.sort_by(|x, y| {
            (x.label.to_lowercase(), &x.label, &x.concept).cmp(&(y.label.to_lowercase(), &y.label, &y.concept))
        });
        Ok(features)
    }
}

/// Stores a temporary common domain flagged `temporary` under a `LOCAL` ref
/// and links it to the permissible values held in the store.
pub fn persist_temporary_domain(store: &Store, actor: &str, domain: &TemporaryValueDomain) -> Result<TemporaryValueDomain> {
    let committed = store.write(actor, |tx| -> Result<ItemId> {
        let model = tx.model();
        let labels: Vec<String> = domain
            .derived_from
            .iter()
            .map(|id| {
                model
                    .value_domains
                    .get(id)
                    .map(|vd| vd.label.clone())
                    .ok_or_else(|| CompatError::UnknownEntity { kind: ItemKind::ValueDomain, id: id.clone() })
            })
            .collect::<Result<_>>()?;
        let pv_ids: Vec<ItemId> = domain
            .values
            .iter()
            .filter_map(|r| model.find_by_ref(ItemKind::PermissibleValue, r))
            .collect();
        if pv_ids.is_empty() {
            return Err(CompatError::EmptyIntersection);
        }
        let mut vd = ValueDomain::new(
            OntologyRef::generate_local(),
            format!("Common values of {} and {}", labels[0], labels[1]),
            domain.datatype,
        );
        vd.temporary = true;
        vd.derived_from = Some(domain.derived_from.clone());
        let id = tx.create(Item::ValueDomain(vd))?;
        for pv in &pv_ids {
            tx.link(Relation::VdPv, &id, pv)?;
        }
        Ok(id)
    })?;
    Ok(TemporaryValueDomain {
        id: committed.value,
        persisted: true,
        ..domain.clone()
    })
}
