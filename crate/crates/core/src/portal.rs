//! External ontology portal client.
//!
//! The portal is queried over HTTP with an API key. For offline use and for
//! tests, a fixture file maps normalized queries to recorded candidate lists
//! and replays them verbatim.
//!
//! Wire format of one candidate (the live endpoint wraps them in
//! `{"collection": [...]}`, fixtures store the bare array):
//!
//! ```json
//! {"ontology": "NCIT", "id": "C61263", "label": "Gaucher's Disease", "parents": ["C61250"]}
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::OntologyRef;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PortalError {
    #[error("ontology portal unavailable: {0}")]
    PortalUnavailable(String),
    #[error("malformed portal response: {0}")]
    MalformedPortalResponse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortalClass {
    #[serde(rename = "ref")]
    pub ontology_ref: OntologyRef,
    pub label: String,
    pub parents: Vec<OntologyRef>,
    pub synonyms: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireCandidate {
    ontology: String,
    id: String,
    label: String,
    #[serde(default)]
    parents: Vec<String>,
    #[serde(default)]
    synonyms: Vec<String>,
}

impl WireCandidate {
    fn normalize(self) -> Result<PortalClass, PortalError> {
        if self.ontology.is_empty() || self.id.is_empty() {
            return Err(PortalError::MalformedPortalResponse("candidate without ontology or id".into()));
        }
        let parents = self.parents.into_iter().map(|p| OntologyRef::new(self.ontology.clone(), p)).collect();
        Ok(PortalClass {
            ontology_ref: OntologyRef::new(self.ontology, self.id),
            label: self.label,
            parents,
            synonyms: self.synonyms,
        })
    }
}

fn parse_candidates(value: serde_json::Value) -> Result<Vec<PortalClass>, PortalError> {
    let wire: Vec<WireCandidate> =
        serde_json::from_value(value).map_err(|e| PortalError::MalformedPortalResponse(e.to_string()))?;
    wire.into_iter().map(WireCandidate::normalize).collect()
}

pub trait PortalClient: Send + Sync {
    fn search(&self, query: &str, ontologies: Option<&[String]>) -> Result<Vec<PortalClass>, PortalError>;
}

/// Key under which a query is recorded: trimmed, lowercased, whitespace
/// collapsed, with `|A,B` appended for an ontology filter (sorted).
pub fn fixture_key(query: &str, ontologies: Option<&[String]>) -> String {
    let mut key = query.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if let Some(list) = ontologies.filter(|l| !l.is_empty()) {
        let mut list: Vec<&str> = list.iter().map(String::as_str).collect();
        list.sort_unstable();
        list.dedup();
        key.push('|');
        key.push_str(&list.join(","));
    }
    key
}

/// Replays recorded responses. Queries that were never recorded yield no candidates.
#[derive(Debug, Clone, Default)]
pub struct FixturePortal {
    recorded: BTreeMap<String, serde_json::Value>,
}

impl FixturePortal {
    pub fn from_json(text: &str) -> Result<Self, PortalError> {
        let recorded: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| PortalError::MalformedPortalResponse(e.to_string()))?;
        Ok(Self { recorded })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, PortalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PortalError::PortalUnavailable(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl PortalClient for FixturePortal {
    fn search(&self, query: &str, ontologies: Option<&[String]>) -> Result<Vec<PortalClass>, PortalError> {
        match self.recorded.get(&fixture_key(query, ontologies)) {
            Some(v) => parse_candidates(v.clone()),
            None => Ok(Vec::new()),
        }
    }
}

#[derive(Debug)]
pub struct LivePortal {
    endpoint: String,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl LivePortal {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Result<Self, PortalError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()
            .map_err(|e| PortalError::PortalUnavailable(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            http,
        })
    }
}

#[derive(Deserialize)]
struct Collection {
    collection: serde_json::Value,
}

impl PortalClient for LivePortal {
    fn search(&self, query: &str, ontologies: Option<&[String]>) -> Result<Vec<PortalClass>, PortalError> {
        let mut params = vec![("q", query.to_string())];
        if let Some(list) = ontologies.filter(|l| !l.is_empty()) {
            params.push(("ontologies", list.join(",")));
        }
        let response = self
            .http
            .get(format!("{}/search", self.endpoint))
            .query(&params)
            .header("Authorization", format!("apikey token={}", self.api_key))
            .send()
            .map_err(|e| PortalError::PortalUnavailable(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(PortalError::PortalUnavailable(format!("portal answered {status}")));
        }
        let body = response.text().map_err(|e| PortalError::PortalUnavailable(e.to_string()))?;
        let wrapped: Collection =
            serde_json::from_str(&body).map_err(|e| PortalError::MalformedPortalResponse(e.to_string()))?;
        parse_candidates(wrapped.collection)
    }
}

/// Used when the portal is switched off or has no endpoint configured.
#[derive(Debug, Clone, Default)]
pub struct DisabledPortal;

impl PortalClient for DisabledPortal {
    fn search(&self, _query: &str, _ontologies: Option<&[String]>) -> Result<Vec<PortalClass>, PortalError> {
        Err(PortalError::PortalUnavailable("portal is disabled".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortalMode {
    Live,
    Fixture,
    #[default]
    Off,
}

impl std::str::FromStr for PortalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Self::Live),
            "fixture" => Ok(Self::Fixture),
            "off" => Ok(Self::Off),
            other => Err(format!("portal mode must be live, fixture or off, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PortalConfig {
    pub mode: PortalMode,
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub fixture_path: Option<String>,
}

impl PortalConfig {
    pub fn build(&self) -> Result<Box<dyn PortalClient>, PortalError> {
        match self.mode {
            PortalMode::Off => Ok(Box::new(DisabledPortal)),
            PortalMode::Live => match &self.endpoint {
                Some(endpoint) => Ok(Box::new(LivePortal::new(endpoint, self.api_key.clone().unwrap_or_default())?)),
                None => Ok(Box::new(DisabledPortal)),
            },
            PortalMode::Fixture => match &self.fixture_path {
                Some(path) => Ok(Box::new(FixturePortal::from_file(path)?)),
                None => Err(PortalError::PortalUnavailable("fixture mode needs portal.fixture_path".into())),
            },
        }
    }
}
