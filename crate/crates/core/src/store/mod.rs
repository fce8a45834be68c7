//! Transactional store for the metadata model.
//!
//! Readers take an immutable [`Model`] snapshot that reflects exactly one
//! committed version. Writers are serialized by a single writer lock; each
//! write transaction works on a private copy, is validated for hard
//! violations, journaled, and only then published. A failed transaction
//! leaves no trace.

mod backend;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

pub use backend::{FileBackend, JournalEntry, MemoryBackend, PersistedState, StorageBackend, DATA_FILE, JOURNAL_FILE};

use crate::model::{Catalogued, Datatype, Item, ItemId, ItemKind, Model, OntologyRef, Relation};
use crate::validate::{check_item, validate_model};

/// Journal entries accumulated before the data file is rewritten.
const CHECKPOINT_EVERY: usize = 512;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("{kind} {id} not found")]
    NotFound { kind: ItemKind, id: ItemId },
    #[error("unknown {kind} {id}")]
    UnknownEntity { kind: ItemKind, id: ItemId },
    #[error("{kind} with ontology key {key} already exists")]
    DuplicateOntologyKey { kind: ItemKind, key: OntologyRef },
    #[error("{kind} with key `{key}` already exists")]
    DuplicateKey { kind: ItemKind, key: String },
    #[error("{relation} link {left} -> {right} already exists")]
    DuplicateLink { relation: Relation, left: ItemId, right: ItemId },
    #[error("{relation} link {left} -> {right} does not exist")]
    NotLinked { relation: Relation, left: ItemId, right: ItemId },
    #[error("{kind} {id} is still referenced ({count} references)")]
    HasReferences { kind: ItemKind, id: ItemId, count: usize },
    #[error("validation failed: {}", .0.join("; "))]
    ValidationFailed(Vec<String>),
    #[error("storage i/o: {0}")]
    Io(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Io(e.to_string())
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxnMode {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: u64,
    pub mode: TxnMode,
    pub base_version: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeOp {
    Create,
    Update,
    Delete,
    Link,
    Unlink,
}

/// Audit record; exactly one per successful mutating call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRecord {
    pub seq: u64,
    pub version: u64,
    /// Item kind, or `link:<relation>`.
    pub entity_kind: String,
    pub entity_id: String,
    pub operation: ChangeOp,
    pub actor: String,
    pub timestamp_ms: u64,
}

/// Low-level state change replayed from the journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    Put { id: ItemId, item: Item },
    Remove { kind: ItemKind, id: ItemId },
    Link { relation: Relation, left: ItemId, right: ItemId },
    Unlink { relation: Relation, left: ItemId, right: ItemId },
}

impl Mutation {
    pub fn apply(&self, model: &mut Model) {
        match self {
            Mutation::Put { id, item } => model.put(id.clone(), item.clone()),
            Mutation::Remove { kind, id } => {
                model.remove(*kind, id);
            }
            Mutation::Link { relation, left, right } => {
                model.links.pairs_mut(*relation).insert((left.clone(), right.clone()));
            }
            Mutation::Unlink { relation, left, right } => {
                model.links.pairs_mut(*relation).remove(&(left.clone(), right.clone()));
            }
        }
    }
}

/// Value returned by a committed write together with the version it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Committed<T> {
    pub value: T,
    pub version: u64,
}

/// A snapshot pinned to one committed version.
#[derive(Debug, Clone)]
pub struct ReadTxn {
    pub txn: Transaction,
    pub model: Arc<Model>,
}

struct Writer {
    backend: Box<dyn StorageBackend>,
    changes: Vec<ChangeRecord>,
    journal_len: usize,
}

pub struct Store {
    published: RwLock<Arc<Model>>,
    writer: Mutex<Writer>,
    next_txn: AtomicU64,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("version", &self.version()).finish()
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Store {
    pub fn in_memory() -> Self {
        Self::open(Box::new(MemoryBackend)).expect("memory backend never fails to load")
    }

    /// Opens (or creates) a file-backed store in `dir`.
    pub fn open_dir(dir: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::open(Box::new(FileBackend::open(dir)?))
    }

    pub fn open(mut backend: Box<dyn StorageBackend>) -> Result<Self> {
        let (base, entries) = backend.load()?;
        let PersistedState { mut model, mut changes } = base.unwrap_or_default();
        let mut journal_len = 0;
        for entry in entries {
            if entry.version <= model.version {
                continue;
            }
            if entry.version != model.version + 1 {
                return Err(StoreError::Corrupt(format!(
                    "journal jumps from version {} to {}",
                    model.version, entry.version
                )));
            }
            for m in &entry.mutations {
                m.apply(&mut model);
            }
            model.version = entry.version;
            changes.extend(entry.changes);
            journal_len += 1;
        }
        Ok(Self {
            published: RwLock::new(Arc::new(model)),
            writer: Mutex::new(Writer { backend, changes, journal_len }),
            next_txn: AtomicU64::new(1),
        })
    }

    pub fn version(&self) -> u64 {
        self.published.read().version
    }

    /// The current committed state. Repeated calls without a commit in between return equal states.
    pub fn snapshot(&self) -> Arc<Model> {
        Arc::clone(&self.published.read())
    }

    pub fn begin_read(&self) -> ReadTxn {
        let model = self.snapshot();
        ReadTxn {
            txn: Transaction {
                id: self.next_txn.fetch_add(1, Ordering::Relaxed),
                mode: TxnMode::Read,
                base_version: model.version,
            },
            model,
        }
    }

    /// All change records, oldest first.
    pub fn changes(&self) -> Vec<ChangeRecord> {
        self.writer.lock().changes.clone()
    }

    pub fn change_count(&self) -> usize {
        self.writer.lock().changes.len()
    }

    /// Runs `f` as one write transaction: all of its mutations commit together or not at all.
    pub fn write<T, E>(&self, actor: &str, f: impl FnOnce(&mut WriteTxn) -> Result<T, E>) -> Result<Committed<T>, E>
    where
        E: From<StoreError>,
    {
        let mut writer = self.writer.lock();
        let base = self.snapshot();
        let mut tx = WriteTxn {
            txn: Transaction {
                id: self.next_txn.fetch_add(1, Ordering::Relaxed),
                mode: TxnMode::Write,
                base_version: base.version,
            },
            actor: actor.to_owned(),
            model: (*base).clone(),
            mutations: Vec::new(),
            changes: Vec::new(),
        };
        let value = f(&mut tx)?;
        if tx.mutations.is_empty() {
            return Ok(Committed { value, version: base.version });
        }

        let version = base.version + 1;
        tx.model.version = version;
        let report = validate_model(&tx.model);
        if report.has_violations() {
            let msgs = report.violations().map(ToString::to_string).collect();
            return Err(StoreError::ValidationFailed(msgs).into());
        }

        let first_seq = writer.changes.len() as u64 + 1;
        let timestamp_ms = now_ms();
        let changes: Vec<ChangeRecord> = tx
            .changes
            .into_iter()
            .enumerate()
            .map(|(i, c)| ChangeRecord {
                seq: first_seq + i as u64,
                version,
                entity_kind: c.entity_kind,
                entity_id: c.entity_id,
                operation: c.operation,
                actor: tx.actor.clone(),
                timestamp_ms,
            })
            .collect();
        let entry = JournalEntry {
            version,
            txn: tx.txn.id,
            mutations: tx.mutations,
            changes,
        };
        writer.backend.append(&entry)?;
        writer.changes.extend(entry.changes);
        writer.journal_len += 1;

        let model = Arc::new(tx.model);
        *self.published.write() = Arc::clone(&model);

        if writer.journal_len >= CHECKPOINT_EVERY {
            Self::checkpoint_locked(&mut writer, &model)?;
        }
        Ok(Committed { value, version })
    }

    /// Rewrites the data file from the current state and clears the journal.
    pub fn checkpoint(&self) -> Result<()> {
        let mut writer = self.writer.lock();
        let model = self.snapshot();
        Self::checkpoint_locked(&mut writer, &model)
    }

    fn checkpoint_locked(writer: &mut Writer, model: &Model) -> Result<()> {
        let state = PersistedState {
            model: model.clone(),
            changes: writer.changes.clone(),
        };
        writer.backend.checkpoint(&state)?;
        writer.journal_len = 0;
        Ok(())
    }

    pub fn create_item(&self, actor: &str, item: Item) -> Result<ItemId> {
        self.write(actor, |tx| tx.create(item)).map(|c| c.value)
    }

    pub fn read_item(&self, kind: ItemKind, id: &ItemId) -> Result<Item> {
        self.snapshot()
            .get(kind, id)
            .ok_or_else(|| StoreError::NotFound { kind, id: id.clone() })
    }

    pub fn update_item(&self, actor: &str, kind: ItemKind, id: &ItemId, patch: &serde_json::Value) -> Result<()> {
        self.write(actor, |tx| tx.update(kind, id, patch)).map(|_| ())
    }

    pub fn delete_item(&self, actor: &str, kind: ItemKind, id: &ItemId, cascade: bool) -> Result<()> {
        self.write(actor, |tx| tx.delete(kind, id, cascade)).map(|_| ())
    }

    pub fn link(&self, actor: &str, relation: Relation, left: &ItemId, right: &ItemId) -> Result<()> {
        self.write(actor, |tx| tx.link(relation, left, right)).map(|_| ())
    }

    pub fn unlink(&self, actor: &str, relation: Relation, left: &ItemId, right: &ItemId) -> Result<()> {
        self.write(actor, |tx| tx.unlink(relation, left, right)).map(|_| ())
    }
}

struct PendingChange {
    entity_kind: String,
    entity_id: String,
    operation: ChangeOp,
}

/// Private working copy of the model for one write transaction.
pub struct WriteTxn {
    pub txn: Transaction,
    actor: String,
    model: Model,
    mutations: Vec<Mutation>,
    changes: Vec<PendingChange>,
}

/// RFC 7386 JSON merge patch.
fn merge_patch(target: &mut serde_json::Value, patch: &serde_json::Value) {
    use serde_json::Value;
    match patch {
        Value::Object(fields) => {
            if !target.is_object() {
                *target = Value::Object(Default::default());
            }
            let obj = target.as_object_mut().expect("just ensured object");
            for (k, v) in fields {
                if v.is_null() {
                    obj.remove(k);
                } else {
                    merge_patch(obj.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        other => *target = other.clone(),
    }
}

impl WriteTxn {
    pub fn model(&self) -> &Model {
        &self.model
    }

    fn record(&mut self, mutation: Mutation, entity_kind: String, entity_id: String, operation: ChangeOp) {
        mutation.apply(&mut self.model);
        self.mutations.push(mutation);
        self.changes.push(PendingChange { entity_kind, entity_id, operation });
    }

    fn require(&self, kind: ItemKind, id: &ItemId) -> Result<()> {
        if self.model.contains(kind, id) {
            Ok(())
        } else {
            Err(StoreError::UnknownEntity { kind, id: id.clone() })
        }
    }

    /// Uniqueness and reference checks for `item` about to be stored under `id`.
    fn check_keys(&self, id: &ItemId, item: &Item) -> Result<()> {
        let local: Vec<String> = check_item(item).into_iter().map(|(rule, msg)| format!("{rule}: {msg}")).collect();
        if !local.is_empty() {
            return Err(StoreError::ValidationFailed(local));
        }
        let kind = item.kind();
        if let Some(key) = item.ontology_ref() {
            if let Some(existing) = self.model.find_by_ref(kind, key) {
                if &existing != id {
                    return Err(StoreError::DuplicateOntologyKey { kind, key: key.clone() });
                }
            }
        }
        match item {
            Item::Registry(reg) => {
                if let Some(existing) = self.model.find_registry_by_name(&reg.name) {
                    if &existing != id {
                        return Err(StoreError::DuplicateKey { kind, key: reg.name.clone() });
                    }
                }
            }
            Item::DataElement(de) => {
                self.require(ItemKind::Registry, &de.registry_id)?;
                self.require(ItemKind::DataElementConcept, &de.expresses)?;
                self.require(ItemKind::ValueDomain, &de.value_domain)?;
                if let Some(existing) = self.model.find_data_element(&de.registry_id, &de.storage_path) {
                    if &existing != id {
                        return Err(StoreError::DuplicateKey { kind, key: de.storage_path.clone() });
                    }
                }
            }
            Item::ValueDomain(vd) => {
                if vd.datatype != Datatype::Enumerated && self.model.links.children(Relation::VdPv, id).next().is_some() {
                    return Err(StoreError::ValidationFailed(vec![format!(
                        "{:?} domain cannot keep its permissible values",
                        vd.datatype
                    )]));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn create(&mut self, item: Item) -> Result<ItemId> {
        let id = ItemId::generate();
        self.check_keys(&id, &item)?;
        let kind = item.kind();
        self.record(
            Mutation::Put { id: id.clone(), item },
            kind.as_str().to_owned(),
            id.to_string(),
            ChangeOp::Create,
        );
        Ok(id)
    }

    pub fn read(&self, kind: ItemKind, id: &ItemId) -> Result<Item> {
        self.model
            .get(kind, id)
            .ok_or_else(|| StoreError::NotFound { kind, id: id.clone() })
    }

    /// Applies a JSON merge patch to the stored payload.
    pub fn update(&mut self, kind: ItemKind, id: &ItemId, patch: &serde_json::Value) -> Result<()> {
        let current = self.read(kind, id)?;
        let mut json = current.to_json();
        merge_patch(&mut json, patch);
        let updated = Item::from_json(kind, json).map_err(|e| StoreError::ValidationFailed(vec![e.to_string()]))?;
        self.replace(id, updated)
    }

    /// Replaces the payload stored under `id` (kind must match).
    pub fn replace(&mut self, id: &ItemId, item: Item) -> Result<()> {
        let kind = item.kind();
        let current = self.read(kind, id)?;
        if current == item {
            return Ok(());
        }
        self.check_keys(id, &item)?;
        self.record(
            Mutation::Put { id: id.clone(), item },
            kind.as_str().to_owned(),
            id.to_string(),
            ChangeOp::Update,
        );
        Ok(())
    }

    /// Deletes an item. With `cascade`, its link pairs go too; partner items always survive.
    pub fn delete(&mut self, kind: ItemKind, id: &ItemId, cascade: bool) -> Result<()> {
        self.read(kind, id)?;
        let elements = self.model.referencing_elements(id);
        if !elements.is_empty() {
            return Err(StoreError::HasReferences { kind, id: id.clone(), count: elements.len() });
        }
        let pairs = self.model.links.touching(id);
        if !pairs.is_empty() && !cascade {
            return Err(StoreError::HasReferences { kind, id: id.clone(), count: pairs.len() });
        }
        for (relation, left, right) in pairs {
            let m = Mutation::Unlink { relation, left, right };
            m.apply(&mut self.model);
            self.mutations.push(m);
        }
        self.record(
            Mutation::Remove { kind, id: id.clone() },
            kind.as_str().to_owned(),
            id.to_string(),
            ChangeOp::Delete,
        );
        Ok(())
    }

    pub fn link(&mut self, relation: Relation, left: &ItemId, right: &ItemId) -> Result<()> {
        self.require(relation.left_kind(), left)?;
        self.require(relation.right_kind(), right)?;
        if self.model.links.contains(relation, left, right) {
            return Err(StoreError::DuplicateLink { relation, left: left.clone(), right: right.clone() });
        }
        if relation == Relation::VdPv {
            let vd = &self.model.value_domains[left];
            if vd.datatype != Datatype::Enumerated {
                return Err(StoreError::ValidationFailed(vec![format!(
                    "value domain {} ({}) is {:?}, not enumerated",
                    left,
                    vd.label(),
                    vd.datatype
                )]));
            }
        }
        self.record(
            Mutation::Link { relation, left: left.clone(), right: right.clone() },
            format!("link:{relation}"),
            format!("{left}->{right}"),
            ChangeOp::Link,
        );
        Ok(())
    }

    pub fn unlink(&mut self, relation: Relation, left: &ItemId, right: &ItemId) -> Result<()> {
        if !self.model.links.contains(relation, left, right) {
            return Err(StoreError::NotLinked { relation, left: left.clone(), right: right.clone() });
        }
        self.record(
            Mutation::Unlink { relation, left: left.clone(), right: right.clone() },
            format!("link:{relation}"),
            format!("{left}->{right}"),
            ChangeOp::Unlink,
        );
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConceptualDomain, DataElementConcept, PermissibleValue, ValueDomain};
    use crate::validate::Rule;
    use serde_json::json;

    fn cd(id: &str, label: &str) -> Item {
        Item::ConceptualDomain(ConceptualDomain {
            ontology_ref: OntologyRef::new("NCIT", id),
            label: label.into(),
            definition: None,
            synonyms: vec![],
        })
    }

    fn dec(id: &str, label: &str) -> Item {
        Item::DataElementConcept(DataElementConcept {
            ontology_ref: OntologyRef::new("NCIT", id),
            label: label.into(),
            definition: None,
            synonyms: vec![],
        })
    }

    fn enum_vd(name: &str, id: &str, label: &str) -> Item {
        Item::ValueDomain(ValueDomain::new(OntologyRef::new(name, id), label, Datatype::Enumerated))
    }

    fn pv(id: &str, label: &str) -> Item {
        Item::PermissibleValue(PermissibleValue { ontology_ref: OntologyRef::new("HP", id), label: label.into(), code: None })
    }

    #[test]
    fn empty_store_is_version_zero() {
        let store = Store::in_memory();
        let snap = store.snapshot();
        assert_eq!(snap.version, 0);
        assert_eq!(snap.item_count(), 0);
        assert!(snap.links.is_empty());
    }

    #[test]
    fn create_bumps_version_by_one_and_appends_a_record() {
        let store = Store::in_memory();
        let before = store.snapshot();
        let id = store.create_item("alice", cd("C61250", "Lysosomal Storage Disease")).unwrap();
        let after = store.snapshot();
        assert_eq!(after.version, before.version + 1);
        assert!(after.conceptual_domains.contains_key(&id));
        let changes = store.changes();
        assert_eq!(changes.len(), 1);
        assert_eq!(changes[0].operation, ChangeOp::Create);
        assert_eq!(changes[0].actor, "alice");
        assert_eq!(store.snapshot(), after);
    }

    #[test]
    fn duplicate_ontology_key_is_rejected() {
        let store = Store::in_memory();
        store.create_item("a", cd("C61250", "Lysosomal Storage Disease")).unwrap();
        let err = store.create_item("a", cd("C61250", "Other label")).unwrap_err();
        assert!(matches!(err, StoreError::DuplicateOntologyKey { kind: ItemKind::ConceptualDomain, .. }));
        assert_eq!(store.version(), 1);
        assert_eq!(store.change_count(), 1);
    }

    #[test]
    fn enumerated_domain_is_a_warning_until_first_value() {
        let store = Store::in_memory();
        let vd = store.create_item("a", enum_vd("LOINC", "LL1055-4", "Clinical nucleic acid test")).unwrap();
        let report = validate_model(&store.snapshot());
        assert_eq!(report.exit_code(), 1);
        assert_eq!(report.findings[0].rule, Rule::EnumeratedWithoutValues);
        let value = store
            .create_item("a", Item::PermissibleValue(PermissibleValue {
                ontology_ref: OntologyRef::new("LOINC", "LA11882-0"),
                label: "Detected".into(),
                code: None,
            }))
            .unwrap();
        store.link("a", Relation::VdPv, &vd, &value).unwrap();
        assert!(validate_model(&store.snapshot()).is_clean());
    }

    #[test]
    fn links_are_many_to_many_and_visible_from_both_sides() {
        let store = Store::in_memory();
        let lsd = store.create_item("a", cd("C61250", "Lysosomal Storage Disease")).unwrap();
        let sph = store.create_item("a", cd("C117254", "Sphingolipidosis")).unwrap();
        let gaucher = store.create_item("a", dec("C61263", "Gaucher's Disease")).unwrap();
        store.link("a", Relation::CdDec, &lsd, &gaucher).unwrap();
        store.link("a", Relation::CdDec, &sph, &gaucher).unwrap();
        let snap = store.snapshot();
        assert_eq!(snap.links.parents(Relation::CdDec, &gaucher).count(), 2);
        assert_eq!(snap.links.children(Relation::CdDec, &lsd).collect::<Vec<_>>(), vec![&gaucher]);
        let err = store.link("a", Relation::CdDec, &lsd, &gaucher).unwrap_err();
        assert!(matches!(err, StoreError::DuplicateLink { .. }));
        let err = store.link("a", Relation::CdDec, &gaucher, &lsd).unwrap_err();
        assert!(matches!(err, StoreError::UnknownEntity { .. }));
    }

    #[test]
    fn cascade_delete_removes_pairs_but_keeps_partners() {
        let store = Store::in_memory();
        let snomed = store.create_item("a", enum_vd("SNOMEDCT", "367506006", "Polydactyly (disorder)")).unwrap();
        let hpo = store.create_item("a", enum_vd("HP", "HP:0010442", "Polydactyly")).unwrap();
        let hand = store.create_item("a", pv("HP:0001161", "Hand Polydactyly")).unwrap();
        store.link("a", Relation::VdPv, &snomed, &hand).unwrap();
        store.link("a", Relation::VdPv, &hpo, &hand).unwrap();

        let err = store.delete_item("a", ItemKind::PermissibleValue, &hand, false).unwrap_err();
        assert!(matches!(err, StoreError::HasReferences { count: 2, .. }));

        let before = store.snapshot().links.vd_pv.len();
        store.delete_item("a", ItemKind::PermissibleValue, &hand, true).unwrap();
        let snap = store.snapshot();
        assert_eq!(before - snap.links.vd_pv.len(), 2);
        assert!(snap.value_domains.contains_key(&snomed));
        assert!(snap.value_domains.contains_key(&hpo));
        assert!(!snap.permissible_values.contains_key(&hand));
    }

    #[test]
    fn update_label_keeps_ref() {
        let store = Store::in_memory();
        let id = store.create_item("a", dec("C61263", "Gaucher Disease")).unwrap();
        store
            .update_item("a", ItemKind::DataElementConcept, &id, &json!({"label": "Gaucher's Disease"}))
            .unwrap();
        let Item::DataElementConcept(updated) = store.read_item(ItemKind::DataElementConcept, &id).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(updated.label, "Gaucher's Disease");
        assert_eq!(updated.ontology_ref, OntologyRef::new("NCIT", "C61263"));
    }

    #[test]
    fn update_to_duplicate_ref_is_rejected() {
        let store = Store::in_memory();
        store.create_item("a", cd("C1", "One")).unwrap();
        let two = store.create_item("a", cd("C2", "Two")).unwrap();
        let err = store
            .update_item("a", ItemKind::ConceptualDomain, &two, &json!({"ref": {"ontology_id": "C1"}}))
            .unwrap_err();
        assert!(matches!(err, StoreError::DuplicateOntologyKey { .. }));
    }

    #[test]
    fn not_found_paths() {
        let store = Store::in_memory();
        let ghost = ItemId::from("ghost");
        assert!(matches!(store.read_item(ItemKind::Registry, &ghost), Err(StoreError::NotFound { .. })));
        assert!(matches!(
            store.delete_item("a", ItemKind::Registry, &ghost, true),
            Err(StoreError::NotFound { .. })
        ));
        assert!(matches!(
            store.unlink("a", Relation::CdDec, &ghost, &ghost),
            Err(StoreError::NotLinked { .. })
        ));
    }

    #[test]
    fn failed_transaction_leaves_no_trace() {
        let store = Store::in_memory();
        let res: Result<()> = store
            .write("a", |tx| {
                tx.create(cd("C1", "One"))?;
                tx.create(cd("C1", "Again"))?;
                Ok(())
            })
            .map(|c| c.value);
        assert!(res.is_err());
        assert_eq!(store.version(), 0);
        assert_eq!(store.snapshot().item_count(), 0);
        assert_eq!(store.change_count(), 0);
    }

    #[test]
    fn non_enumerated_domain_rejects_values() {
        let store = Store::in_memory();
        let vd = store
            .create_item("a", Item::ValueDomain(ValueDomain::new(OntologyRef::new("LOCAL", "age"), "Age", Datatype::Integer)))
            .unwrap();
        let value = store.create_item("a", pv("HP:1", "x")).unwrap();
        assert!(matches!(
            store.link("a", Relation::VdPv, &vd, &value),
            Err(StoreError::ValidationFailed(_))
        ));
    }

    #[test]
    fn merge_patch_semantics() {
        let mut doc = json!({"a": 1, "b": {"c": 2, "d": 3}});
        merge_patch(&mut doc, &json!({"b": {"c": null, "e": 4}, "f": "x"}));
        assert_eq!(doc, json!({"a": 1, "b": {"d": 3, "e": 4}, "f": "x"}));
    }
}
