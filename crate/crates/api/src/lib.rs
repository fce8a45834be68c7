//! HTTP service for the metadata repository.

pub mod auth;
pub mod error;
pub mod routes;
pub mod server;
pub mod service;

pub use auth::{Principal, Role, TokenSigner, TokenVerifier, Users};
pub use error::ApiError;
pub use service::{Api, ApiRequest, ApiResponse};
