//! Local ontology snapshots.
//!
//! A catalog holds ontology classes with their labels, synonyms, intra-ontology
//! parent edges (which must stay acyclic) and cross-ontology mappings. Mappings
//! are treated as synonymy: they are kept symmetric and collapsed transitively
//! into equivalence classes, which the compatibility engine uses to compare
//! refs from different ontologies.
//!
//! Loads build a fresh [`CatalogIndex`] and swap it in atomically; searches
//! read the published index without blocking each other.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::model::OntologyRef;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cycle detected through parent edge {child} -> {parent}")]
    CycleDetected { child: OntologyRef, parent: OntologyRef },
    #[error("unknown ontology class {0}")]
    UnknownRef(OntologyRef),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyClass {
    #[serde(rename = "ref")]
    pub ontology_ref: OntologyRef,
    pub label: String,
    pub synonyms: BTreeSet<String>,
    pub parents: BTreeSet<OntologyRef>,
    pub mappings: BTreeSet<OntologyRef>,
}

/// One line of an ontology snapshot file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotRecord {
    pub ontology: String,
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub mappings: Vec<MappingRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRecord {
    pub ontology: String,
    pub id: String,
}

/// Parses a line-delimited snapshot. Blank lines are ignored.
pub fn parse_snapshot(text: &str) -> Result<Vec<SnapshotRecord>, CatalogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let rec: SnapshotRecord = serde_json::from_str(l).map_err(|e| CatalogError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if rec.ontology.is_empty() || rec.id.is_empty() || rec.label.trim().is_empty() {
                return Err(CatalogError::Parse {
                    line: i + 1,
                    message: "ontology, id and label must be non-empty".to_owned(),
                });
            }
            Ok(rec)
        })
        .collect()
}

/// Collapses refs to a representative of their synonym class.
pub trait SynonymIndex {
    fn canonical(&self, r: &OntologyRef) -> OntologyRef;
}

/// Every ref is only equivalent to itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoSynonyms;

impl SynonymIndex for NoSynonyms {
    fn canonical(&self, r: &OntologyRef) -> OntologyRef {
        r.clone()
    }
}

/// Immutable, published view of the catalog.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CatalogIndex {
    classes: BTreeMap<OntologyRef, OntologyClass>,
    /// Undirected mapping adjacency, including endpoints not (yet) loaded as classes.
    mapping_edges: BTreeMap<OntologyRef, BTreeSet<OntologyRef>>,
    /// Smallest ref of each mapping component, for every ref that has a mapping.
    canonical: BTreeMap<OntologyRef, OntologyRef>,
}

impl CatalogIndex {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, r: &OntologyRef) -> Option<&OntologyClass> {
        self.classes.get(r)
    }

    pub fn classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.classes.values()
    }

    /// Merges `records` into a copy of this index. Fails without side effects on a cycle.
    pub fn merged(&self, records: &[SnapshotRecord]) -> Result<(CatalogIndex, usize), CatalogError> {
        let mut next = self.clone();
        let mut new_classes = 0;
        for rec in records {
            let r = OntologyRef::new(rec.ontology.clone(), rec.id.clone());
            let class = next.classes.entry(r.clone()).or_insert_with(|| {
                new_classes += 1;
                OntologyClass {
                    ontology_ref: r.clone(),
                    label: rec.label.clone(),
                    synonyms: BTreeSet::new(),
                    parents: BTreeSet::new(),
                    mappings: BTreeSet::new(),
                }
            });
            class.synonyms.extend(rec.synonyms.iter().cloned());
            class
                .parents
                .extend(rec.parents.iter().map(|p| OntologyRef::new(rec.ontology.clone(), p.clone())));
            for m in &rec.mappings {
                let other = OntologyRef::new(m.ontology.clone(), m.id.clone());
                if other == r {
                    continue;
                }
                next.mapping_edges.entry(r.clone()).or_default().insert(other.clone());
                next.mapping_edges.entry(other).or_default().insert(r.clone());
            }
        }
        next.check_acyclic()?;
        next.rebuild_mappings();
        Ok((next, new_classes))
    }

    /// Depth-first search over child -> parent edges; reports the first back edge.
    fn check_acyclic(&self) -> Result<(), CatalogError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        let mut marks: BTreeMap<&OntologyRef, Mark> = BTreeMap::new();
        let empty = BTreeSet::new();
        let parents_of = |r: &OntologyRef| self.classes.get(r).map_or(&empty, |c| &c.parents);

        for start in self.classes.keys() {
            if marks.contains_key(start) {
                continue;
            }
            // Stack of (node, iterator over its parents).
            let mut stack = vec![(start, parents_of(start).iter())];
            marks.insert(start, Mark::Active);
            while let Some((node, iter)) = stack.last_mut() {
                let node = *node;
                match iter.next() {
                    Some(parent) => match marks.get(parent) {
                        Some(Mark::Active) => {
                            return Err(CatalogError::CycleDetected {
                                child: node.clone(),
                                parent: parent.clone(),
                            })
                        }
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(parent, Mark::Active);
                            stack.push((parent, parents_of(parent).iter()));
                        }
                    },
                    None => {
                        marks.insert(node, Mark::Done);
                        stack.pop();
                    }
                }
            }
        }
        Ok(())
    }

    fn rebuild_mappings(&mut self) {
        for class in self.classes.values_mut() {
            class.mappings = self.mapping_edges.get(&class.ontology_ref).cloned().unwrap_or_default();
        }
        self.canonical.clear();
        let mut seen = BTreeSet::new();
        for start in self.mapping_edges.keys() {
            if seen.contains(start) {
                continue;
            }
            let component = component_of(&self.mapping_edges, start);
            let rep = component.iter().next().expect("component contains start").clone();
            for member in component {
                seen.insert(member.clone());
                self.canonical.insert(member, rep.clone());
            }
        }
    }

    /// Connected component of `r` under the symmetric mapping relation, `r` included.
    pub fn synonym_closure(&self, r: &OntologyRef) -> Result<BTreeSet<OntologyRef>, CatalogError> {
        if !self.classes.contains_key(r) {
            return Err(CatalogError::UnknownRef(r.clone()));
        }
        Ok(component_of(&self.mapping_edges, r))
    }

    /// Parent edges grouped by ontology in a topological order (parents first).
    pub fn topological_order(&self, ontology: &str) -> Result<Vec<OntologyRef>, CatalogError> {
        let nodes: Vec<&OntologyClass> = self.classes.values().filter(|c| c.ontology_ref.ontology_name == ontology).collect();
        let mut indegree: BTreeMap<&OntologyRef, usize> = nodes.iter().map(|c| (&c.ontology_ref, 0)).collect();
        let mut children: BTreeMap<&OntologyRef, Vec<&OntologyRef>> = BTreeMap::new();
        for c in &nodes {
            for p in &c.parents {
                if indegree.contains_key(p) {
                    *indegree.get_mut(&c.ontology_ref).expect("node present") += 1;
                    children.entry(p).or_default().push(&c.ontology_ref);
                }
            }
        }
        let mut ready: VecDeque<&OntologyRef> = indegree.iter().filter(|(_, &d)| d == 0).map(|(r, _)| *r).collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(r) = ready.pop_front() {
            order.push(r.clone());
            for child in children.get(r).into_iter().flatten() {
                let d = indegree.get_mut(child).expect("node present");
                *d -= 1;
                if *d == 0 {
                    ready.push_back(child);
                }
            }
        }
        if order.len() != nodes.len() {
            let stuck = indegree.iter().find(|(_, &d)| d > 0).map(|(r, _)| (*r).clone()).expect("some node stuck");
            let parent = self.classes[&stuck].parents.iter().next().cloned().expect("stuck node has parents");
            return Err(CatalogError::CycleDetected { child: stuck, parent });
        }
        Ok(order)
    }

    pub fn ontologies(&self) -> BTreeSet<&str> {
        self.classes.keys().map(|r| r.ontology_name.as_str()).collect()
    }
}

fn component_of(edges: &BTreeMap<OntologyRef, BTreeSet<OntologyRef>>, start: &OntologyRef) -> BTreeSet<OntologyRef> {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(r) = queue.pop_front() {
        for next in edges.get(&r).into_iter().flatten() {
            if seen.insert(next.clone()) {
                queue.push_back(next.clone());
            }
        }
    }
    seen
}

impl SynonymIndex for CatalogIndex {
    fn canonical(&self, r: &OntologyRef) -> OntologyRef {
        self.canonical.get(r).cloned().unwrap_or_else(|| r.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOutcome {
    pub new_classes: usize,
    pub total_classes: usize,
}

/// Read-mostly catalog handle, shareable across threads.
#[derive(Debug, Default)]
pub struct Catalog {
    published: RwLock<Arc<CatalogIndex>>,
    loading: Mutex<()>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn index(&self) -> Arc<CatalogIndex> {
        Arc::clone(&self.published.read())
    }

    /// Merges a snapshot text; returns how many classes were new.
    pub fn load_snapshot(&self, text: &str) -> Result<LoadOutcome, CatalogError> {
        let records = parse_snapshot(text)?;
        let _guard = self.loading.lock();
        let (next, new_classes) = self.index().merged(&records)?;
        let total_classes = next.len();
        *self.published.write() = Arc::new(next);
        Ok(LoadOutcome { new_classes, total_classes })
    }

    pub fn load_file(&self, path: impl AsRef<Path>) -> Result<LoadOutcome, CatalogError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| CatalogError::Io(format!("{}: {e}", path.as_ref().display())))?;
        self.load_snapshot(&text)
    }

    pub fn synonym_closure(&self, r: &OntologyRef) -> Result<BTreeSet<OntologyRef>, CatalogError> {
        self.index().synonym_closure(r)
    }
}
