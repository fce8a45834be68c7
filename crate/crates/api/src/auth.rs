//! Bearer tokens, roles and the built-in user file.
//!
//! A token is `base64url(payload) "." base64url(HMAC-SHA256(secret, payload))`
//! where the payload is `{"sub": .., "roles": [..], "exp": unix-seconds}`.
//! Deployments with an external identity provider plug in their own
//! [`TokenVerifier`] instead.

use std::collections::BTreeSet;
use std::path::Path;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Roles are ordered: each one includes every permission of the ones below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Reader,
    Curator,
    Admin,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Reader, Role::Curator, Role::Admin];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Reader => "reader",
            Role::Curator => "curator",
            Role::Admin => "admin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub user_id: String,
    pub roles: BTreeSet<Role>,
    pub token_expiry: u64,
}

impl Principal {
    pub fn has(&self, role: Role) -> bool {
        self.roles.iter().any(|&r| r >= role)
    }
}

pub trait TokenVerifier: Send + Sync {
    /// `None` for anything that is not a valid, unexpired token.
    fn verify(&self, token: &str, now: u64) -> Option<Principal>;
}

#[derive(Serialize, Deserialize)]
struct Claims {
    sub: String,
    roles: BTreeSet<Role>,
    exp: u64,
}

type HmacSha256 = Hmac<Sha256>;

#[derive(Clone)]
pub struct TokenSigner {
    secret: Vec<u8>,
}

impl std::fmt::Debug for TokenSigner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TokenSigner(..)")
    }
}

impl TokenSigner {
    pub fn new(secret: impl AsRef<[u8]>) -> Self {
        Self { secret: secret.as_ref().to_vec() }
    }

    fn mac(&self) -> HmacSha256 {
        <HmacSha256 as KeyInit>::new_from_slice(&self.secret).expect("hmac accepts any key length")
    }

    pub fn issue(&self, user_id: &str, roles: &BTreeSet<Role>, expires_at: u64) -> String {
        let claims = Claims { sub: user_id.to_string(), roles: roles.clone(), exp: expires_at };
        let payload = URL_SAFE_NO_PAD.encode(serde_json::to_vec(&claims).expect("claims serialize"));
        let mut mac = self.mac();
        mac.update(payload.as_bytes());
        let sig = URL_SAFE_NO_PAD.encode(mac.finalize().into_bytes());
        format!("{payload}.{sig}")
    }
}

impl TokenVerifier for TokenSigner {
    fn verify(&self, token: &str, now: u64) -> Option<Principal> {
        let (payload, sig) = token.split_once('.')?;
        let sig = URL_SAFE_NO_PAD.decode(sig).ok()?;
        let mut mac = self.mac();
        mac.update(payload.as_bytes());
        mac.verify_slice(&sig).ok()?;
        let claims: Claims = serde_json::from_slice(&URL_SAFE_NO_PAD.decode(payload).ok()?).ok()?;
        if claims.exp <= now || claims.roles.is_empty() {
            return None;
        }
        Some(Principal { user_id: claims.sub, roles: claims.roles, token_expiry: claims.exp })
    }
}

/// Rejects every token; used when no secret is configured.
#[derive(Debug, Default)]
pub struct DenyAll;

impl TokenVerifier for DenyAll {
    fn verify(&self, _token: &str, _now: u64) -> Option<Principal> {
        None
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub username: String,
    /// Lowercase hex SHA-256 of the password.
    pub password_sha256: String,
    pub roles: BTreeSet<Role>,
}

#[derive(Debug, Clone, Default)]
pub struct Users {
    entries: Vec<UserEntry>,
}

impl Users {
    pub fn new(entries: Vec<UserEntry>) -> Self {
        Self { entries }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map(Self::new).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn authenticate(&self, username: &str, password: &str) -> Option<&UserEntry> {
        let digest = sha256_hex(password.as_bytes());
        self.entries
            .iter()
            .find(|u| u.username == username && u.password_sha256.eq_ignore_ascii_case(&digest) && !u.roles.is_empty())
    }
}

/// The value of an `Authorization: Bearer ...` header.
pub fn bearer(header: Option<&str>) -> Option<&str> {
    let header = header?.trim();
    let (scheme, token) = header.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}
