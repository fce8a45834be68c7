//! Data dictionary documents: the JSON interchange format for bulk import and export.
//!
//! Documents never carry repository ids. Catalogued items are identified by
//! their ontology ref, registries by name and data elements by
//! (registry name, storage path); links and references use those keys.
//! Export orders everything by its natural key, so exporting the same model
//! twice gives the same bytes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    ConceptualDomain, DataElement, DataElementConcept, Datatype, Item, ItemId, ItemKind, Model, NumericRange,
    OntologyRef, PermissibleValue, Registry, Relation, ValueDomain,
};
use crate::store::{Store, StoreError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DocumentError {
    #[error("cannot parse document: {0}")]
    Parse(String),
    #[error("unsupported format_version {0}")]
    UnsupportedFormat(u32),
    #[error("referential gap: {0}")]
    ReferentialGap(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocValueDomain {
    #[serde(rename = "ref")]
    pub ontology_ref: OntologyRef,
    pub label: String,
    pub datatype: Datatype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<NumericRange>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub temporary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<[OntologyRef; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocDataElement {
    pub registry: String,
    pub storage_path: String,
    pub concept: OntologyRef,
    pub value_domain: OntologyRef,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocLinks {
    #[serde(default)]
    pub cd_dec: Vec<[OntologyRef; 2]>,
    #[serde(default)]
    pub cd_vd: Vec<[OntologyRef; 2]>,
    #[serde(default)]
    pub vd_pv: Vec<[OntologyRef; 2]>,
}

impl DocLinks {
    pub fn get(&self, relation: Relation) -> &Vec<[OntologyRef; 2]> {
        match relation {
            Relation::CdDec => &self.cd_dec,
            Relation::CdVd => &self.cd_vd,
            Relation::VdPv => &self.vd_pv,
        }
    }

    fn get_mut(&mut self, relation: Relation) -> &mut Vec<[OntologyRef; 2]> {
        match relation {
            Relation::CdDec => &mut self.cd_dec,
            Relation::CdVd => &mut self.cd_vd,
            Relation::VdPv => &mut self.vd_pv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataDictionaryDocument {
    pub format_version: u32,
    #[serde(default)]
    pub registries: Vec<Registry>,
    #[serde(default)]
    pub conceptual_domains: Vec<ConceptualDomain>,
    #[serde(default)]
    pub data_element_concepts: Vec<DataElementConcept>,
    #[serde(default)]
    pub value_domains: Vec<DocValueDomain>,
    #[serde(default)]
    pub permissible_values: Vec<PermissibleValue>,
    #[serde(default)]
    pub data_elements: Vec<DocDataElement>,
    #[serde(default)]
    pub links: DocLinks,
}

impl Default for DataDictionaryDocument {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            registries: Vec::new(),
            conceptual_domains: Vec::new(),
            data_element_concepts: Vec::new(),
            value_domains: Vec::new(),
            permissible_values: Vec::new(),
            data_elements: Vec::new(),
            links: DocLinks::default(),
        }
    }
}

impl DataDictionaryDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let doc: Self = serde_json::from_str(text).map_err(|e| DocumentError::Parse(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(DocumentError::UnsupportedFormat(doc.format_version));
        }
        Ok(doc)
    }

    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("documents always serialize");
        out.push('\n');
        out
    }
}

/// Ref of the item under `id`, for the catalogued kinds.
fn ref_of(model: &Model, id: &ItemId) -> Option<OntologyRef> {
    let kind = model.kind_of(id)?;
    model.get(kind, id)?.ontology_ref().cloned()
}

pub fn export(model: &Model) -> DataDictionaryDocument {
    let mut doc = DataDictionaryDocument {
        registries: model.registries.values().cloned().collect(),
        conceptual_domains: model.conceptual_domains.values().cloned().collect(),
        data_element_concepts: model.data_element_concepts.values().cloned().collect(),
        permissible_values: model.permissible_values.values().cloned().collect(),
        ..Default::default()
    };
    doc.registries.sort_by(|a, b| (a.name.to_lowercase(), &a.name).cmp(&(b.name.to_lowercase(), &b.name)));
    doc.conceptual_domains.sort_by(|a, b| a.ontology_ref.cmp(&b.ontology_ref));
    doc.data_element_concepts.sort_by(|a, b| a.ontology_ref.cmp(&b.ontology_ref));
    doc.permissible_values.sort_by(|a, b| a.ontology_ref.cmp(&b.ontology_ref));

    doc.value_domains = model
        .value_domains
        .values()
        .map(|vd| DocValueDomain {
            ontology_ref: vd.ontology_ref.clone(),
            label: vd.label.clone(),
            datatype: vd.datatype,
            format: vd.format.clone(),
            range: vd.range,
            temporary: vd.temporary,
            derived_from: vd.derived_from.as_ref().and_then(|[a, b]| {
                let a = model.value_domains.get(a)?.ontology_ref.clone();
                let b = model.value_domains.get(b)?.ontology_ref.clone();
                Some([a, b])
            }),
        })
        .collect();
    doc.value_domains.sort_by(|a, b| a.ontology_ref.cmp(&b.ontology_ref));

    doc.data_elements = model
        .data_elements
        .values()
        .filter_map(|de| {
            Some(DocDataElement {
                registry: model.registries.get(&de.registry_id)?.name.clone(),
                storage_path: de.storage_path.clone(),
                concept: model.data_element_concepts.get(&de.expresses)?.ontology_ref.clone(),
                value_domain: model.value_domains.get(&de.value_domain)?.ontology_ref.clone(),
            })
        })
        .collect();
    doc.data_elements.sort_by(|a, b| {
        (a.registry.to_lowercase(), &a.registry, &a.storage_path).cmp(&(b.registry.to_lowercase(), &b.registry, &b.storage_path))
    });

    for relation in Relation::ALL {
        let mut pairs: Vec<[OntologyRef; 2]> = model
            .links
            .pairs(relation)
            .iter()
            .filter_map(|(l, r)| Some([ref_of(model, l)?, ref_of(model, r)?]))
            .collect();
        pairs.sort();
        *doc.links.get_mut(relation) = pairs;
    }
    doc
}

pub fn export_string(model: &Model) -> String {
    export(model).to_json_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportMode {
    /// Any key already in the store aborts the import.
    Strict,
    /// Items whose key already exists are reused.
    Merge,
}

impl std::str::FromStr for ImportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "merge" => Ok(Self::Merge),
            other => Err(format!("import mode must be strict or merge, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub created: usize,
    pub merged: usize,
    pub skipped: usize,
}

impl KindCounts {
    fn add(&mut self, other: &KindCounts) {
        self.created += other.created;
        self.merged += other.merged;
        self.skipped += other.skipped;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub per_kind: BTreeMap<ItemKind, KindCounts>,
    pub total: KindCounts,
    pub links_created: usize,
    pub links_existing: usize,
    pub version: u64,
}

impl ImportReport {
    fn bump(&mut self, kind: ItemKind, f: impl FnOnce(&mut KindCounts)) {
        f(self.per_kind.entry(kind).or_default());
    }

    fn finish(&mut self) {
        let mut total = KindCounts::default();
        for c in self.per_kind.values() {
            total.add(c);
        }
        self.total = total;
    }
}

enum Outcome {
    Created,
    Merged,
}

/// Looks up an existing key; in strict mode any hit is an error.
fn reuse(mode: ImportMode, existing: Option<ItemId>, err: impl FnOnce() -> StoreError) -> Result<Option<ItemId>, DocumentError> {
    match (existing, mode) {
        (Some(_), ImportMode::Strict) => Err(err().into()),
        (found, _) => Ok(found),
    }
}

/// Imports `doc` as one transaction: on any error nothing is written.
pub fn import(store: &Store, actor: &str, doc: &DataDictionaryDocument, mode: ImportMode) -> Result<ImportReport, DocumentError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(DocumentError::UnsupportedFormat(doc.format_version));
    }
    let committed = store.write(actor, |tx| -> Result<ImportReport, DocumentError> {
        let mut report = ImportReport::default();
        let mut registries: BTreeMap<String, ItemId> = BTreeMap::new();
        let mut refs: BTreeMap<(ItemKind, OntologyRef), ItemId> = BTreeMap::new();

        for reg in &doc.registries {
            let key = reg.name.to_lowercase();
            if registries.contains_key(&key) {
                report.bump(ItemKind::Registry, |c| c.skipped += 1);
                continue;
            }
            let existing = reuse(mode, tx.model().find_registry_by_name(&reg.name), || StoreError::DuplicateKey {
                kind: ItemKind::Registry,
                key: reg.name.clone(),
            })?;
            let (id, outcome) = match existing {
                Some(id) => (id, Outcome::Merged),
                None => (tx.create(Item::Registry(reg.clone()))?, Outcome::Created),
            };
            registries.insert(key, id);
            report.bump(ItemKind::Registry, |c| match outcome {
                Outcome::Created => c.created += 1,
                Outcome::Merged => c.merged += 1,
            });
        }

        let mut put_catalogued = |tx: &mut crate::store::WriteTxn, item: Item, report: &mut ImportReport| -> Result<(), DocumentError> {
            let kind = item.kind();
            let key = item.ontology_ref().expect("catalogued kind").clone();
            if refs.contains_key(&(kind, key.clone())) {
                report.bump(kind, |c| c.skipped += 1);
                return Ok(());
            }
            let existing = reuse(mode, tx.model().find_by_ref(kind, &key), || StoreError::DuplicateOntologyKey {
                kind,
                key: key.clone(),
            })?;
            let id = match existing {
                Some(id) => {
                    report.bump(kind, |c| c.merged += 1);
                    id
                }
                None => {
                    let id = tx.create(item)?;
                    report.bump(kind, |c| c.created += 1);
                    id
                }
            };
            refs.insert((kind, key), id);
            Ok(())
        };
        for x in &doc.conceptual_domains {
            put_catalogued(tx, Item::ConceptualDomain(x.clone()), &mut report)?;
        }
        for x in &doc.data_element_concepts {
            put_catalogued(tx, Item::DataElementConcept(x.clone()), &mut report)?;
        }
        for x in &doc.permissible_values {
            put_catalogued(tx, Item::PermissibleValue(x.clone()), &mut report)?;
        }
        // Value domains first without provenance; it may point at domains later in the list.
        for x in &doc.value_domains {
            let mut vd = ValueDomain::new(x.ontology_ref.clone(), x.label.clone(), x.datatype);
            vd.format = x.format.clone();
            vd.range = x.range;
            vd.temporary = x.temporary;
            put_catalogued(tx, Item::ValueDomain(vd), &mut report)?;
        }

        let resolve = |model: &Model, refs: &BTreeMap<(ItemKind, OntologyRef), ItemId>, kind: ItemKind, key: &OntologyRef| {
            refs.get(&(kind, key.clone())).cloned().or_else(|| model.find_by_ref(kind, key))
        };
        let gap = |what: &str, key: &OntologyRef| DocumentError::ReferentialGap(format!("{what} {key} is neither in the document nor in the store"));

        let mut provenance_seen = BTreeSet::new();
        for x in &doc.value_domains {
            let Some([a, b]) = &x.derived_from else { continue };
            if !provenance_seen.insert(x.ontology_ref.clone()) {
                continue;
            }
            let id = resolve(tx.model(), &refs, ItemKind::ValueDomain, &x.ontology_ref).expect("inserted above");
            let Item::ValueDomain(mut vd) = tx.read(ItemKind::ValueDomain, &id)? else { unreachable!() };
            if vd.derived_from.is_some() {
                continue;
            }
            let pa = resolve(tx.model(), &refs, ItemKind::ValueDomain, a).ok_or_else(|| gap("value domain", a))?;
            let pb = resolve(tx.model(), &refs, ItemKind::ValueDomain, b).ok_or_else(|| gap("value domain", b))?;
            vd.derived_from = Some([pa, pb]);
            tx.replace(&id, Item::ValueDomain(vd))?;
        }

        let mut paths = BTreeSet::new();
        for x in &doc.data_elements {
            let registry_id = registries
                .get(&x.registry.to_lowercase())
                .cloned()
                .or_else(|| tx.model().find_registry_by_name(&x.registry))
                .ok_or_else(|| DocumentError::ReferentialGap(format!("registry `{}` is neither in the document nor in the store", x.registry)))?;
            if !paths.insert((registry_id.clone(), x.storage_path.clone())) {
                report.bump(ItemKind::DataElement, |c| c.skipped += 1);
                continue;
            }
            let expresses =
                resolve(tx.model(), &refs, ItemKind::DataElementConcept, &x.concept).ok_or_else(|| gap("concept", &x.concept))?;
            let value_domain = resolve(tx.model(), &refs, ItemKind::ValueDomain, &x.value_domain)
                .ok_or_else(|| gap("value domain", &x.value_domain))?;
            let existing = reuse(mode, tx.model().find_data_element(&registry_id, &x.storage_path), || StoreError::DuplicateKey {
                kind: ItemKind::DataElement,
                key: x.storage_path.clone(),
            })?;
            if existing.is_some() {
                report.bump(ItemKind::DataElement, |c| c.merged += 1);
                continue;
            }
            tx.create(Item::DataElement(DataElement { registry_id, storage_path: x.storage_path.clone(), expresses, value_domain }))?;
            report.bump(ItemKind::DataElement, |c| c.created += 1);
        }

        for relation in Relation::ALL {
            let (lk, rk) = (relation.left_kind(), relation.right_kind());
            for [l, r] in doc.links.get(relation) {
                let left = resolve(tx.model(), &refs, lk, l).ok_or_else(|| gap(lk.as_str(), l))?;
                let right = resolve(tx.model(), &refs, rk, r).ok_or_else(|| gap(rk.as_str(), r))?;
                if tx.model().links.contains(relation, &left, &right) {
                    report.links_existing += 1;
                } else {
                    tx.link(relation, &left, &right)?;
                    report.links_created += 1;
                }
            }
        }
        report.finish();
        Ok(report)
    })?;
    let mut report = committed.value;
    report.version = committed.version;
    Ok(report)
}

/// Builds a model straight from a document, without any store checks, so
/// that validation can report every problem in the file. Unresolvable
/// references become placeholder ids, which validation flags as dangling.
pub fn to_model(doc: &DataDictionaryDocument) -> Model {
    let mut model = Model::default();
    let mut refs: BTreeMap<(ItemKind, OntologyRef), ItemId> = BTreeMap::new();
    let mut registries: BTreeMap<String, ItemId> = BTreeMap::new();
    let put = |model: &mut Model, refs: &mut BTreeMap<(ItemKind, OntologyRef), ItemId>, i: usize, item: Item| {
        let kind = item.kind();
        let id = ItemId::from(format!("{}#{i}", kind.as_str()));
        if let Some(key) = item.ontology_ref() {
            refs.entry((kind, key.clone())).or_insert_with(|| id.clone());
        }
        model.put(id, item);
    };
    for (i, x) in doc.registries.iter().enumerate() {
        let id = ItemId::from(format!("registry#{i}"));
        registries.entry(x.name.to_lowercase()).or_insert_with(|| id.clone());
        model.put(id, Item::Registry(x.clone()));
    }
    for (i, x) in doc.conceptual_domains.iter().enumerate() {
        put(&mut model, &mut refs, i, Item::ConceptualDomain(x.clone()));
    }
    for (i, x) in doc.data_element_concepts.iter().enumerate() {
        put(&mut model, &mut refs, i, Item::DataElementConcept(x.clone()));
    }
    for (i, x) in doc.permissible_values.iter().enumerate() {
        put(&mut model, &mut refs, i, Item::PermissibleValue(x.clone()));
    }
    for (i, x) in doc.value_domains.iter().enumerate() {
        let mut vd = ValueDomain::new(x.ontology_ref.clone(), x.label.clone(), x.datatype);
        vd.format = x.format.clone();
        vd.range = x.range;
        vd.temporary = x.temporary;
        put(&mut model, &mut refs, i, Item::ValueDomain(vd));
    }
    let lookup = |refs: &BTreeMap<(ItemKind, OntologyRef), ItemId>, kind: ItemKind, key: &OntologyRef| {
        refs.get(&(kind, key.clone()))
            .cloned()
            .unwrap_or_else(|| ItemId::from(format!("unresolved:{kind}:{key}")))
    };
    for (i, x) in doc.value_domains.iter().enumerate() {
        if let Some([a, b]) = &x.derived_from {
            let id = ItemId::from(format!("value_domain#{i}"));
            let derived = [lookup(&refs, ItemKind::ValueDomain, a), lookup(&refs, ItemKind::ValueDomain, b)];
            if let Some(vd) = model.value_domains.get_mut(&id) {
                vd.derived_from = Some(derived);
            }
        }
    }
    for (i, x) in doc.data_elements.iter().enumerate() {
        let registry_id = registries
            .get(&x.registry.to_lowercase())
            .cloned()
            .unwrap_or_else(|| ItemId::from(format!("unresolved:registry:{}", x.registry)));
        let de = DataElement {
            registry_id,
            storage_path: x.storage_path.clone(),
            expresses: lookup(&refs, ItemKind::DataElementConcept, &x.concept),
            value_domain: lookup(&refs, ItemKind::ValueDomain, &x.value_domain),
        };
        model.put(ItemId::from(format!("data_element#{i}")), Item::DataElement(de));
    }
    for relation in Relation::ALL {
        for [l, r] in doc.links.get(relation) {
            let pair = (lookup(&refs, relation.left_kind(), l), lookup(&refs, relation.right_kind(), r));
            model.links.pairs_mut(relation).insert(pair);
        }
    }
    model
}
