//! Metadata repository for clinical data dictionaries.
//!
//! The model follows ISO 11179-3 with three relations relaxed to
//! many-to-many (conceptual domain to concept, conceptual domain to value
//! domain, value domain to permissible value) so that ontology DAGs and
//! shared answer lists can be stored as they are. Every catalogued item is
//! keyed by an ontology ref, which keeps duplicates out.

pub mod catalog;
pub mod compat;
pub mod config;
pub mod document;
pub mod fixtures;
pub mod model;
pub mod portal;
pub mod store;
pub mod suggest;
pub mod validate;

pub use catalog::{Catalog, CatalogIndex, NoSynonyms, SynonymIndex};
pub use compat::{CompatEngine, MinLevel, Verdict};
pub use model::{Datatype, Item, ItemId, ItemKind, Model, OntologyRef, Relation};
pub use store::{Store, StoreError};
pub use validate::{strict_iso_check, validate_model, StrictIsoOptions};
