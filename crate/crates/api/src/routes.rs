//! The route table. Every endpoint the service answers is listed here once,
//! together with the access rule the dispatcher enforces before any handler runs.

use mdr_core::model::{ItemKind, Relation};

use crate::auth::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Anonymous,
    Role(Role),
    /// Reader to compute, curator when the body asks to persist.
    CommonDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handler {
    Health,
    Token,
    List(ItemKind),
    Create(ItemKind),
    Get(ItemKind),
    Replace(ItemKind),
    Delete(ItemKind),
    ListLinks(Relation),
    Link(Relation),
    Unlink(Relation),
    Suggest,
    CompareElements,
    CommonDomain,
    RegistrySummary,
    Discover,
    Validate,
    Export,
    Import,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub method: &'static str,
    pub pattern: String,
    pub access: Access,
    pub handler: Handler,
}

pub fn kind_segment(kind: ItemKind) -> &'static str {
    match kind {
        ItemKind::Registry => "registries",
        ItemKind::ConceptualDomain => "conceptual-domains",
        ItemKind::DataElementConcept => "data-element-concepts",
        ItemKind::ValueDomain => "value-domains",
        ItemKind::PermissibleValue => "permissible-values",
        ItemKind::DataElement => "data-elements",
    }
}

pub fn relation_segment(relation: Relation) -> &'static str {
    match relation {
        Relation::CdDec => "cd-dec",
        Relation::CdVd => "cd-vd",
        Relation::VdPv => "vd-pv",
    }
}

fn route(method: &'static str, pattern: impl Into<String>, access: Access, handler: Handler) -> Route {
    Route { method, pattern: pattern.into(), access, handler }
}

pub fn table() -> Vec<Route> {
    use Access::Anonymous;
    const READ: Access = Access::Role(Role::Reader);
    const WRITE: Access = Access::Role(Role::Curator);
    const ADMIN: Access = Access::Role(Role::Admin);

    let mut t = vec![
        route("GET", "/api/health", Anonymous, Handler::Health),
        route("POST", "/api/auth/token", Anonymous, Handler::Token),
    ];
    for kind in ItemKind::ALL {
        let base = format!("/api/{}", kind_segment(kind));
        t.push(route("GET", base.clone(), READ, Handler::List(kind)));
        t.push(route("POST", base.clone(), WRITE, Handler::Create(kind)));
        t.push(route("GET", format!("{base}/{{id}}"), READ, Handler::Get(kind)));
        t.push(route("PUT", format!("{base}/{{id}}"), WRITE, Handler::Replace(kind)));
        t.push(route("DELETE", format!("{base}/{{id}}"), WRITE, Handler::Delete(kind)));
    }
    for relation in Relation::ALL {
        let base = format!("/api/links/{}", relation_segment(relation));
        t.push(route("GET", base.clone(), READ, Handler::ListLinks(relation)));
        t.push(route("POST", base.clone(), WRITE, Handler::Link(relation)));
        t.push(route("DELETE", base, WRITE, Handler::Unlink(relation)));
    }
    t.extend([
        route("GET", "/api/suggest", READ, Handler::Suggest),
        route("GET", "/api/compat/elements", READ, Handler::CompareElements),
        route("POST", "/api/compat/common-domain", Access::CommonDomain, Handler::CommonDomain),
        route("GET", "/api/registries/{id}/summary", READ, Handler::RegistrySummary),
        route("GET", "/api/discover", READ, Handler::Discover),
        route("GET", "/api/validate", READ, Handler::Validate),
        route("GET", "/api/export", ADMIN, Handler::Export),
        route("POST", "/api/import", ADMIN, Handler::Import),
    ]);
    t
}

#[derive(Debug, PartialEq, Eq)]
pub enum Matched<'a> {
    Found(&'a Route, Vec<String>),
    MethodNotAllowed,
    NotFound,
}

fn match_pattern(pattern: &str, path: &str) -> Option<Vec<String>> {
    let mut params = Vec::new();
    let mut want = pattern.split('/');
    let mut got = path.split('/');
    loop {
        match (want.next(), got.next()) {
            (None, None) => return Some(params),
            (Some(w), Some(g)) if w.starts_with('{') => {
                if g.is_empty() {
                    return None;
                }
                params.push(g.to_string());
            }
            (Some(w), Some(g)) if w == g => {}
            _ => return None,
        }
    }
}

pub fn resolve<'a>(table: &'a [Route], method: &str, path: &str) -> Matched<'a> {
    let path = if path.len() > 1 { path.trim_end_matches('/') } else { path };
    let mut path_known = false;
    for r in table {
        if let Some(params) = match_pattern(&r.pattern, path) {
            if r.method.eq_ignore_ascii_case(method) {
                return Matched::Found(r, params);
            }
            path_known = true;
        }
    }
    if path_known {
        Matched::MethodNotAllowed
    } else {
        Matched::NotFound
    }
}

/// A concrete path for `route`, with every placeholder replaced by `id`.
pub fn sample_path(route: &Route, id: &str) -> String {
    route.pattern.replace("{id}", id)
}
