//! Ranked suggestions of existing metadata items and ontology classes.
//!
//! Candidates come from three sources, in priority order: items already in
//! the repository (of the requested kind), the local ontology catalog, and
//! the external portal. A ref offered by several sources is kept once, under
//! the highest-priority source.
//!
//! Within a source, matches rank exact > prefix > substring > synonym
//! (case-insensitive), then by score = query length / matched text length,
//! then label and ontology id.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::CatalogIndex;
use crate::model::{ItemId, ItemKind, Model, OntologyRef};
use crate::portal::PortalClient;

pub const MIN_QUERY_CHARS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SuggestError {
    #[error("query must have at least {MIN_QUERY_CHARS} characters")]
    QueryTooShort,
    #[error("limit must be positive")]
    InvalidLimit,
    #[error("{0} items carry no ontology ref")]
    KindNotCatalogued(ItemKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Repository,
    LocalCatalog,
    ExternalPortal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Exact,
    Prefix,
    Substring,
    Synonym,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    #[serde(rename = "ref")]
    pub ontology_ref: OntologyRef,
    pub label: String,
    pub source: Source,
    pub match_kind: MatchKind,
    pub score: f64,
    /// Repository id, when the suggestion is an existing item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<ItemId>,
    #[serde(skip)]
    ratio: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub suggestions: Vec<Suggestion>,
    pub portal_reached: bool,
}

/// Best match of `query` (already lowercased) against a label and its synonyms.
fn match_text<'s>(query: &str, label: &str, synonyms: impl IntoIterator<Item = &'s str>) -> Option<(MatchKind, (usize, usize))> {
    let q = query.chars().count();
    let ratio = |text: &str| (q, text.chars().count().max(q));
    let l = label.to_lowercase();
    if l == query {
        return Some((MatchKind::Exact, ratio(&l)));
    }
    if l.starts_with(query) {
        return Some((MatchKind::Prefix, ratio(&l)));
    }
    if l.contains(query) {
        return Some((MatchKind::Substring, ratio(&l)));
    }
    // Best synonym: the one the query covers most.
    synonyms
        .into_iter()
        .map(str::to_lowercase)
        .filter(|s| s.contains(query))
        .map(|s| ratio(&s))
        .max_by(|a, b| cmp_ratio(*a, *b))
        .map(|r| (MatchKind::Synonym, r))
}

fn cmp_ratio(a: (usize, usize), b: (usize, usize)) -> Ordering {
    (a.0 * b.1).cmp(&(b.0 * a.1))
}

fn rank(a: &Suggestion, b: &Suggestion) -> Ordering {
    a.source
        .cmp(&b.source)
        .then(a.match_kind.cmp(&b.match_kind))
        .then(cmp_ratio(b.ratio, a.ratio))
        .then_with(|| a.label.to_lowercase().cmp(&b.label.to_lowercase()))
        .then_with(|| a.label.cmp(&b.label))
        .then_with(|| a.ontology_ref.ontology_id.cmp(&b.ontology_ref.ontology_id))
        .then_with(|| a.ontology_ref.ontology_name.cmp(&b.ontology_ref.ontology_name))
}

pub struct Suggester<'a> {
    model: &'a Model,
    catalog: &'a CatalogIndex,
    portal: Option<&'a dyn PortalClient>,
    portal_ontologies: Option<Vec<String>>,
}

impl<'a> Suggester<'a> {
    pub fn new(model: &'a Model, catalog: &'a CatalogIndex) -> Self {
        Self { model, catalog, portal: None, portal_ontologies: None }
    }

    pub fn with_portal(mut self, portal: &'a dyn PortalClient) -> Self {
        self.portal = Some(portal);
        self
    }

    pub fn restrict_portal(mut self, ontologies: Vec<String>) -> Self {
        self.portal_ontologies = Some(ontologies);
        self
    }

    pub fn suggest(&self, query: &str, kind: ItemKind, limit: usize) -> Result<SuggestResponse, SuggestError> {
        let trimmed = query.trim();
        if trimmed.chars().count() < MIN_QUERY_CHARS {
            return Err(SuggestError::QueryTooShort);
        }
        if limit == 0 {
            return Err(SuggestError::InvalidLimit);
        }
        if !kind.is_catalogued() {
            return Err(SuggestError::KindNotCatalogued(kind));
        }
        let q = trimmed.to_lowercase();
        let mut found = Vec::new();

        for (id, item) in self.model.catalogued(kind) {
            if let Some((match_kind, ratio)) = match_text(&q, item.label(), item.synonyms().iter().map(String::as_str)) {
                found.push(Suggestion::new(item.ontology_ref().clone(), item.label(), Source::Repository, match_kind, ratio, Some(id.clone())));
            }
        }
        for class in self.catalog.classes() {
            if let Some((match_kind, ratio)) = match_text(&q, &class.label, class.synonyms.iter().map(String::as_str)) {
                found.push(Suggestion::new(class.ontology_ref.clone(), &class.label, Source::LocalCatalog, match_kind, ratio, None));
            }
        }
        let mut portal_reached = false;
        if let Some(portal) = self.portal {
            if let Ok(candidates) = portal.search(trimmed, self.portal_ontologies.as_deref()) {
                portal_reached = true;
                for c in candidates {
                    // The portal's own relevance judgement stands even if our rules see no match.
                    let (match_kind, ratio) = match_text(&q, &c.label, c.synonyms.iter().map(String::as_str))
                        .unwrap_or((MatchKind::Synonym, (0, 1)));
                    found.push(Suggestion::new(c.ontology_ref, &c.label, Source::ExternalPortal, match_kind, ratio, None));
                }
            }
        }

        found.sort_by(rank);
        let mut seen = BTreeSet::new();
        found.retain(|s| seen.insert(s.ontology_ref.clone()));
        found.truncate(limit);
        Ok(SuggestResponse { suggestions: found, portal_reached })
    }
}

impl Suggestion {
    fn new(
        ontology_ref: OntologyRef,
        label: &str,
        source: Source,
        match_kind: MatchKind,
        ratio: (usize, usize),
        item_id: Option<ItemId>,
    ) -> Self {
        let score = if ratio.1 == 0 { 0.0 } else { (ratio.0 as f64 / ratio.1 as f64).clamp(0.0, 1.0) };
        Self { ontology_ref, label: label.to_string(), source, match_kind, score, item_id, ratio }
    }
}
