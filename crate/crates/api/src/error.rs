use mdr_core::catalog::CatalogError;
use mdr_core::compat::CompatError;
use mdr_core::document::DocumentError;
use mdr_core::suggest::SuggestError;
use mdr_core::StoreError;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "bad_request", message)
    }

    pub fn unauthenticated() -> Self {
        Self::new(401, "unauthenticated", "a valid bearer token is required")
    }

    pub fn forbidden(role: &str) -> Self {
        Self::new(403, "forbidden", format!("requires role {role}"))
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(404, "not_found", message)
    }

    pub fn method_not_allowed() -> Self {
        Self::new(405, "method_not_allowed", "method not allowed on this path")
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        let (status, code) = match e {
            StoreError::NotFound { .. } => (404, "not_found"),
            StoreError::UnknownEntity { .. } => (404, "unknown_entity"),
            StoreError::NotLinked { .. } => (404, "not_linked"),
            StoreError::DuplicateOntologyKey { .. } => (409, "duplicate_ontology_key"),
            StoreError::DuplicateKey { .. } => (409, "duplicate_key"),
            StoreError::DuplicateLink { .. } => (409, "duplicate_link"),
            StoreError::HasReferences { .. } => (409, "has_references"),
            StoreError::ValidationFailed(_) => (400, "validation_failed"),
            StoreError::Io(_) => (500, "storage_io"),
            StoreError::Corrupt(_) => (500, "storage_corrupt"),
        };
        Self::new(status, code, message)
    }
}

impl From<CompatError> for ApiError {
    fn from(e: CompatError) -> Self {
        let message = e.to_string();
        let (status, code) = match e {
            CompatError::Store(inner) => return inner.into(),
            CompatError::UnknownEntity { .. } => (404, "unknown_entity"),
            CompatError::NotPartiallyCompatible { .. } => (422, "not_partially_compatible"),
            CompatError::EmptyIntersection => (422, "empty_intersection"),
            CompatError::NeedTwoRegistries => (422, "need_two_registries"),
            CompatError::SameRegistry => (422, "same_registry"),
        };
        Self::new(status, code, message)
    }
}

impl From<SuggestError> for ApiError {
    fn from(e: SuggestError) -> Self {
        let code = match e {
            SuggestError::QueryTooShort => "query_too_short",
            SuggestError::InvalidLimit => "invalid_limit",
            SuggestError::KindNotCatalogued(_) => "kind_not_catalogued",
        };
        Self::new(400, code, e.to_string())
    }
}

impl From<DocumentError> for ApiError {
    fn from(e: DocumentError) -> Self {
        let message = e.to_string();
        let (status, code) = match e {
            DocumentError::Store(inner) => return inner.into(),
            DocumentError::Parse(_) => (400, "parse_error"),
            DocumentError::UnsupportedFormat(_) => (400, "unsupported_format"),
            DocumentError::ReferentialGap(_) => (422, "referential_gap"),
        };
        Self::new(status, code, message)
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let message = e.to_string();
        let (status, code) = match e {
            CatalogError::Parse { .. } => (400, "parse_error"),
            CatalogError::CycleDetected { .. } => (422, "cycle_detected"),
            CatalogError::UnknownRef(_) => (404, "unknown_ref"),
            CatalogError::Io(_) => (500, "catalog_io"),
        };
        Self::new(status, code, message)
    }
}
