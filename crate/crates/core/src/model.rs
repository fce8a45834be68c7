//! The six metadata classes and their link structure.
//!
//! The conceptual layer (conceptual domains and data element concepts) and the
//! representational layer (value domains and permissible values) are bound
//! together by three many-to-many relations held in a [`LinkSet`]. Data
//! elements sit in a named registry and point at exactly one concept and one
//! value domain.
//!
//! Every catalogued item carries an [`OntologyRef`], the semantic key that is
//! unique per kind. Items are addressed internally by an opaque [`ItemId`] so
//! that links stay stable when a ref is corrected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Ontology name reserved for items created inside the repository.
pub const LOCAL_ONTOLOGY: &str = "LOCAL";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OntologyRef {
    pub ontology_name: String,
    pub ontology_id: String,
}

impl OntologyRef {
    pub fn new(ontology_name: impl Into<String>, ontology_id: impl Into<String>) -> Self {
        Self {
            ontology_name: ontology_name.into(),
            ontology_id: ontology_id.into(),
        }
    }

    /// A fresh `LOCAL` ref with a repository-generated id.
    pub fn generate_local() -> Self {
        Self::new(LOCAL_ONTOLOGY, uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn is_local(&self) -> bool {
        self.ontology_name == LOCAL_ONTOLOGY
    }

    pub fn is_well_formed(&self) -> bool {
        !self.ontology_name.is_empty() && !self.ontology_id.is_empty()
    }
}

impl fmt::Display for OntologyRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ontology_name, self.ontology_id)
    }
}

/// Opaque repository identifier (128 random bits, hex encoded).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn generate() -> Self {
        Self(uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ItemId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Registry,
    ConceptualDomain,
    DataElementConcept,
    ValueDomain,
    PermissibleValue,
    DataElement,
}

impl ItemKind {
    pub const ALL: [ItemKind; 6] = [
        ItemKind::Registry,
        ItemKind::ConceptualDomain,
        ItemKind::DataElementConcept,
        ItemKind::ValueDomain,
        ItemKind::PermissibleValue,
        ItemKind::DataElement,
    ];

    /// Kinds keyed by an [`OntologyRef`].
    pub const CATALOGUED: [ItemKind; 4] = [
        ItemKind::ConceptualDomain,
        ItemKind::DataElementConcept,
        ItemKind::ValueDomain,
        ItemKind::PermissibleValue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::Registry => "registry",
            ItemKind::ConceptualDomain => "conceptual_domain",
            ItemKind::DataElementConcept => "data_element_concept",
            ItemKind::ValueDomain => "value_domain",
            ItemKind::PermissibleValue => "permissible_value",
            ItemKind::DataElement => "data_element",
        }
    }

    pub fn is_catalogued(self) -> bool {
        Self::CATALOGUED.contains(&self)
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown item kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for ItemKind {
    type Err = UnknownKind;

    /// Accepts both `snake_case` names and the dashed plural route segments.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s {
            "registry" | "registries" => ItemKind::Registry,
            "conceptual_domain" | "conceptual-domains" => ItemKind::ConceptualDomain,
            "data_element_concept" | "data-element-concepts" => ItemKind::DataElementConcept,
            "value_domain" | "value-domains" => ItemKind::ValueDomain,
            "permissible_value" | "permissible-values" => ItemKind::PermissibleValue,
            "data_element" | "data-elements" => ItemKind::DataElement,
            other => return Err(UnknownKind(other.to_owned())),
        };
        Ok(kind)
    }
}

/// Common view over the four kinds that carry an ontology key.
pub trait Catalogued {
    fn ontology_ref(&self) -> &OntologyRef;
    fn label(&self) -> &str;
    fn synonyms(&self) -> &[String] {
        &[]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptualDomain {
    #[serde(rename = "ref")]
    pub ontology_ref: OntologyRef,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    #[serde(default)]
    pub synonyms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataElementConcept {
    #[serde(rename = "ref")]
    pub ontology_ref: OntologyRef,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    #[serde(default)]
    pub synonyms: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Datatype {
    Enumerated,
    Integer,
    Decimal,
    String,
    Date,
    Boolean,
}

impl Datatype {
    pub fn is_numeric(self) -> bool {
        matches!(self, Datatype::Integer | Datatype::Decimal)
    }
}

fn closed() -> bool {
    true
}

/// Numeric interval; each end may be open or closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericRange {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "closed")]
    pub lo_closed: bool,
    #[serde(default = "closed")]
    pub hi_closed: bool,
}

impl NumericRange {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.lo.is_nan() && !self.hi.is_nan() && self.lo <= self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// True when some real number lies in both intervals.
    pub fn overlaps(&self, other: &NumericRange) -> bool {
        // Pick the tighter lower bound and the tighter upper bound.
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        lo < hi || (lo == hi && lo_closed && hi_closed)
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDomain {
    #[serde(rename = "ref")]
    pub ontology_ref: OntologyRef,
    pub label: String,
    pub datatype: Datatype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<NumericRange>,
    /// Set on intersection domains materialized for a partially compatible pair.
    #[serde(default, skip_serializing_if = "is_false")]
    pub temporary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<[ItemId; 2]>,
}

impl ValueDomain {
    pub fn new(ontology_ref: OntologyRef, label: impl Into<String>, datatype: Datatype) -> Self {
        Self {
            ontology_ref,
            label: label.into(),
            datatype,
            format: None,
            range: None,
            temporary: false,
            derived_from: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermissibleValue {
    #[serde(rename = "ref")]
    pub ontology_ref: OntologyRef,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub organisation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataElement {
    pub registry_id: ItemId,
    pub storage_path: String,
    pub expresses: ItemId,
    pub value_domain: ItemId,
}

macro_rules! impl_catalogued {
    ($ty:ty, synonyms) => {
        impl Catalogued for $ty {
            fn ontology_ref(&self) -> &OntologyRef {
                &self.ontology_ref
            }
            fn label(&self) -> &str {
                &self.label
            }
            fn synonyms(&self) -> &[String] {
                &self.synonyms
            }
        }
    };
    ($ty:ty) => {
        impl Catalogued for $ty {
            fn ontology_ref(&self) -> &OntologyRef {
                &self.ontology_ref
            }
            fn label(&self) -> &str {
                &self.label
            }
        }
    };
}

impl_catalogued!(ConceptualDomain, synonyms);
impl_catalogued!(DataElementConcept, synonyms);
impl_catalogued!(ValueDomain);
impl_catalogued!(PermissibleValue);

/// Any one of the six payload types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Item {
    Registry(Registry),
    ConceptualDomain(ConceptualDomain),
    DataElementConcept(DataElementConcept),
    ValueDomain(ValueDomain),
    PermissibleValue(PermissibleValue),
    DataElement(DataElement),
}

impl Item {
    pub fn kind(&self) -> ItemKind {
        match self {
            Item::Registry(_) => ItemKind::Registry,
            Item::ConceptualDomain(_) => ItemKind::ConceptualDomain,
            Item::DataElementConcept(_) => ItemKind::DataElementConcept,
            Item::ValueDomain(_) => ItemKind::ValueDomain,
            Item::PermissibleValue(_) => ItemKind::PermissibleValue,
            Item::DataElement(_) => ItemKind::DataElement,
        }
    }

    pub fn ontology_ref(&self) -> Option<&OntologyRef> {
        self.as_catalogued().map(Catalogued::ontology_ref)
    }

    pub fn as_catalogued(&self) -> Option<&dyn Catalogued> {
        match self {
            Item::ConceptualDomain(x) => Some(x),
            Item::DataElementConcept(x) => Some(x),
            Item::ValueDomain(x) => Some(x),
            Item::PermissibleValue(x) => Some(x),
            Item::Registry(_) | Item::DataElement(_) => None,
        }
    }

    /// Parses a kind-specific JSON payload (without the `kind` tag).
    pub fn from_json(kind: ItemKind, value: serde_json::Value) -> Result<Self, serde_json::Error> {
        Ok(match kind {
            ItemKind::Registry => Item::Registry(serde_json::from_value(value)?),
            ItemKind::ConceptualDomain => Item::ConceptualDomain(serde_json::from_value(value)?),
            ItemKind::DataElementConcept => Item::DataElementConcept(serde_json::from_value(value)?),
            ItemKind::ValueDomain => Item::ValueDomain(serde_json::from_value(value)?),
            ItemKind::PermissibleValue => Item::PermissibleValue(serde_json::from_value(value)?),
            ItemKind::DataElement => Item::DataElement(serde_json::from_value(value)?),
        })
    }

    /// The kind-specific JSON payload (without the `kind` tag).
    pub fn to_json(&self) -> serde_json::Value {
        let value = match self {
            Item::Registry(x) => serde_json::to_value(x),
            Item::ConceptualDomain(x) => serde_json::to_value(x),
            Item::DataElementConcept(x) => serde_json::to_value(x),
            Item::ValueDomain(x) => serde_json::to_value(x),
            Item::PermissibleValue(x) => serde_json::to_value(x),
            Item::DataElement(x) => serde_json::to_value(x),
        };
        value.expect("model payloads always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    CdDec,
    CdVd,
    VdPv,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::CdDec, Relation::CdVd, Relation::VdPv];

    pub fn left_kind(self) -> ItemKind {
        match self {
            Relation::CdDec | Relation::CdVd => ItemKind::ConceptualDomain,
            Relation::VdPv => ItemKind::ValueDomain,
        }
    }

    pub fn right_kind(self) -> ItemKind {
        match self {
            Relation::CdDec => ItemKind::DataElementConcept,
            Relation::CdVd => ItemKind::ValueDomain,
            Relation::VdPv => ItemKind::PermissibleValue,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::CdDec => "cd_dec",
            Relation::CdVd => "cd_vd",
            Relation::VdPv => "vd_pv",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cd_dec" | "cd-dec" => Ok(Relation::CdDec),
            "cd_vd" | "cd-vd" => Ok(Relation::CdVd),
            "vd_pv" | "vd-pv" => Ok(Relation::VdPv),
            other => Err(UnknownKind(other.to_owned())),
        }
    }
}

pub type LinkPairs = BTreeSet<(ItemId, ItemId)>;

/// The three many-to-many relations, stored as (left, right) pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkSet {
    pub cd_dec: LinkPairs,
    pub cd_vd: LinkPairs,
    pub vd_pv: LinkPairs,
}

impl LinkSet {
    pub fn pairs(&self, relation: Relation) -> &LinkPairs {
        match relation {
            Relation::CdDec => &self.cd_dec,
            Relation::CdVd => &self.cd_vd,
            Relation::VdPv => &self.vd_pv,
        }
    }

    pub fn pairs_mut(&mut self, relation: Relation) -> &mut LinkPairs {
        match relation {
            Relation::CdDec => &mut self.cd_dec,
            Relation::CdVd => &mut self.cd_vd,
            Relation::VdPv => &mut self.vd_pv,
        }
    }

    pub fn contains(&self, relation: Relation, left: &ItemId, right: &ItemId) -> bool {
        self.pairs(relation).contains(&(left.clone(), right.clone()))
    }

    /// Right-hand partners of `left`.
    pub fn children<'a>(&'a self, relation: Relation, left: &'a ItemId) -> impl Iterator<Item = &'a ItemId> + 'a {
        self.pairs(relation)
            .iter()
            .skip_while(move |(l, _)| l < left)
            .take_while(move |(l, _)| l == left)
            .map(|(_, r)| r)
    }

    /// Left-hand partners of `right`.
    pub fn parents<'a>(&'a self, relation: Relation, right: &'a ItemId) -> impl Iterator<Item = &'a ItemId> + 'a {
        self.pairs(relation)
            .iter()
            .filter(move |(_, r)| r == right)
            .map(|(l, _)| l)
    }

    /// Every pair touching `id` on either side.
    pub fn touching(&self, id: &ItemId) -> Vec<(Relation, ItemId, ItemId)> {
        Relation::ALL
            .iter()
            .flat_map(|&rel| {
                self.pairs(rel)
                    .iter()
                    .filter(|(l, r)| l == id || r == id)
                    .map(move |(l, r)| (rel, l.clone(), r.clone()))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.cd_dec.len() + self.cd_vd.len() + self.vd_pv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Full model state at one committed version.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub version: u64,
    pub registries: BTreeMap<ItemId, Registry>,
    pub conceptual_domains: BTreeMap<ItemId, ConceptualDomain>,
    pub data_element_concepts: BTreeMap<ItemId, DataElementConcept>,
    pub value_domains: BTreeMap<ItemId, ValueDomain>,
    pub permissible_values: BTreeMap<ItemId, PermissibleValue>,
    pub data_elements: BTreeMap<ItemId, DataElement>,
    pub links: LinkSet,
}

impl Model {
    pub fn get(&self, kind: ItemKind, id: &ItemId) -> Option<Item> {
        match kind {
            ItemKind::Registry => self.registries.get(id).cloned().map(Item::Registry),
            ItemKind::ConceptualDomain => self.conceptual_domains.get(id).cloned().map(Item::ConceptualDomain),
            ItemKind::DataElementConcept => self
                .data_element_concepts
                .get(id)
                .cloned()
                .map(Item::DataElementConcept),
            ItemKind::ValueDomain => self.value_domains.get(id).cloned().map(Item::ValueDomain),
            ItemKind::PermissibleValue => self.permissible_values.get(id).cloned().map(Item::PermissibleValue),
            ItemKind::DataElement => self.data_elements.get(id).cloned().map(Item::DataElement),
        }
    }

    pub fn contains(&self, kind: ItemKind, id: &ItemId) -> bool {
        match kind {
            ItemKind::Registry => self.registries.contains_key(id),
            ItemKind::ConceptualDomain => self.conceptual_domains.contains_key(id),
            ItemKind::DataElementConcept => self.data_element_concepts.contains_key(id),
            ItemKind::ValueDomain => self.value_domains.contains_key(id),
            ItemKind::PermissibleValue => self.permissible_values.contains_key(id),
            ItemKind::DataElement => self.data_elements.contains_key(id),
        }
    }

    pub fn ids(&self, kind: ItemKind) -> Vec<ItemId> {
        match kind {
            ItemKind::Registry => self.registries.keys().cloned().collect(),
            ItemKind::ConceptualDomain => self.conceptual_domains.keys().cloned().collect(),
            ItemKind::DataElementConcept => self.data_element_concepts.keys().cloned().collect(),
            ItemKind::ValueDomain => self.value_domains.keys().cloned().collect(),
            ItemKind::PermissibleValue => self.permissible_values.keys().cloned().collect(),
            ItemKind::DataElement => self.data_elements.keys().cloned().collect(),
        }
    }

    pub fn count(&self, kind: ItemKind) -> usize {
        match kind {
            ItemKind::Registry => self.registries.len(),
            ItemKind::ConceptualDomain => self.conceptual_domains.len(),
            ItemKind::DataElementConcept => self.data_element_concepts.len(),
            ItemKind::ValueDomain => self.value_domains.len(),
            ItemKind::PermissibleValue => self.permissible_values.len(),
            ItemKind::DataElement => self.data_elements.len(),
        }
    }

    pub fn item_count(&self) -> usize {
        ItemKind::ALL.iter().map(|&k| self.count(k)).sum()
    }

    /// Catalogued items of one kind as (id, view) pairs.
    pub fn catalogued(&self, kind: ItemKind) -> Vec<(&ItemId, &dyn Catalogued)> {
        fn erase<T: Catalogued>(map: &BTreeMap<ItemId, T>) -> Vec<(&ItemId, &dyn Catalogued)> {
            map.iter().map(|(id, x)| (id, x as &dyn Catalogued)).collect()
        }
        match kind {
            ItemKind::ConceptualDomain => erase(&self.conceptual_domains),
            ItemKind::DataElementConcept => erase(&self.data_element_concepts),
            ItemKind::ValueDomain => erase(&self.value_domains),
            ItemKind::PermissibleValue => erase(&self.permissible_values),
            ItemKind::Registry | ItemKind::DataElement => Vec::new(),
        }
    }

    pub fn find_by_ref(&self, kind: ItemKind, key: &OntologyRef) -> Option<ItemId> {
        self.catalogued(kind)
            .into_iter()
            .find(|(_, x)| x.ontology_ref() == key)
            .map(|(id, _)| id.clone())
    }

    pub fn find_registry_by_name(&self, name: &str) -> Option<ItemId> {
        let wanted = name.to_lowercase();
        self.registries
            .iter()
            .find(|(_, r)| r.name.to_lowercase() == wanted)
            .map(|(id, _)| id.clone())
    }

    pub fn find_data_element(&self, registry_id: &ItemId, storage_path: &str) -> Option<ItemId> {
        self.data_elements
            .iter()
            .find(|(_, de)| &de.registry_id == registry_id && de.storage_path == storage_path)
            .map(|(id, _)| id.clone())
    }

    /// Ids of the permissible values attached to a value domain.
    pub fn value_set(&self, value_domain: &ItemId) -> BTreeSet<ItemId> {
        self.links.children(Relation::VdPv, value_domain).cloned().collect()
    }

    /// Places `item` under `id`, replacing any previous payload of that kind.
    pub fn put(&mut self, id: ItemId, item: Item) {
        match item {
            Item::Registry(x) => {
                self.registries.insert(id, x);
            }
            Item::ConceptualDomain(x) => {
                self.conceptual_domains.insert(id, x);
            }
            Item::DataElementConcept(x) => {
                self.data_element_concepts.insert(id, x);
            }
            Item::ValueDomain(x) => {
                self.value_domains.insert(id, x);
            }
            Item::PermissibleValue(x) => {
                self.permissible_values.insert(id, x);
            }
            Item::DataElement(x) => {
                self.data_elements.insert(id, x);
            }
        }
    }

    pub fn remove(&mut self, kind: ItemKind, id: &ItemId) -> bool {
        match kind {
            ItemKind::Registry => self.registries.remove(id).is_some(),
            ItemKind::ConceptualDomain => self.conceptual_domains.remove(id).is_some(),
            ItemKind::DataElementConcept => self.data_element_concepts.remove(id).is_some(),
            ItemKind::ValueDomain => self.value_domains.remove(id).is_some(),
            ItemKind::PermissibleValue => self.permissible_values.remove(id).is_some(),
            ItemKind::DataElement => self.data_elements.remove(id).is_some(),
        }
    }

    /// Kind of the item stored under `id`, if any.
    pub fn kind_of(&self, id: &ItemId) -> Option<ItemKind> {
        ItemKind::ALL.into_iter().find(|&k| self.contains(k, id))
    }

    /// Data elements referencing `id` as registry, concept or value domain.
    pub fn referencing_elements(&self, id: &ItemId) -> Vec<ItemId> {
        self.data_elements
            .iter()
            .filter(|(_, de)| &de.registry_id == id || &de.expresses == id || &de.value_domain == id)
            .map(|(de_id, _)| de_id.clone())
            .collect()
    }
}
