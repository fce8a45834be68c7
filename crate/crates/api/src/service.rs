//! Transport-independent request handling. [`Api::handle`] takes a plain
//! request value and returns a plain response, so the whole surface can be
//! exercised in tests without a socket.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use mdr_core::compat::{persist_temporary_domain, CompatEngine, MinLevel};
use mdr_core::config::Config;
use mdr_core::document::{export_string, import, DataDictionaryDocument, ImportMode};
use mdr_core::model::{Catalogued, Item, ItemId, ItemKind, Model, OntologyRef, Relation};
use mdr_core::portal::PortalClient;
use mdr_core::suggest::Suggester;
use mdr_core::validate::{strict_iso_check, validate_model, StrictIsoOptions};
use mdr_core::{Catalog, Store, StoreError};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::auth::{bearer, DenyAll, Principal, Role, TokenSigner, TokenVerifier, Users};
use crate::error::ApiError;
use crate::routes::{self, Access, Handler, Matched, Route};

pub const DEFAULT_PAGE: usize = 50;
pub const MAX_PAGE: usize = 500;
pub const DEFAULT_SUGGESTIONS: usize = 10;
pub const MAX_SUGGESTIONS: usize = 100;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApiRequest {
    pub method: String,
    pub path: String,
    /// Raw query string without the leading `?`.
    pub query: String,
    pub authorization: Option<String>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    pub fn new(method: &str, path: &str) -> Self {
        let (path, query) = path.split_once('?').unwrap_or((path, ""));
        Self { method: method.to_string(), path: path.to_string(), query: query.to_string(), ..Default::default() }
    }

    pub fn get(path: &str) -> Self {
        Self::new("GET", path)
    }

    pub fn bearer(mut self, token: &str) -> Self {
        self.authorization = Some(format!("Bearer {token}"));
        self
    }

    pub fn json(mut self, body: &Value) -> Self {
        self.body = serde_json::to_vec(body).expect("json value serializes");
        self
    }

    pub fn text(mut self, body: impl Into<Vec<u8>>) -> Self {
        self.body = body.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl ApiResponse {
    fn json(status: u16, value: &Value) -> Self {
        Self { status, content_type: "application/json", body: serde_json::to_vec(value).expect("json value serializes") }
    }

    fn error(e: &ApiError) -> Self {
        Self::json(e.status, &json!({ "error": e }))
    }

    /// The body parsed as JSON; `Value::Null` if it is not JSON.
    pub fn value(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or(Value::Null)
    }
}

type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;
type Outcome = Result<ApiResponse, ApiError>;

pub struct Api {
    store: Arc<Store>,
    catalog: Arc<Catalog>,
    portal: Option<Arc<dyn PortalClient>>,
    verifier: Arc<dyn TokenVerifier>,
    signer: Option<TokenSigner>,
    users: Users,
    token_ttl: u64,
    clock: Clock,
    routes: Vec<Route>,
}

fn system_clock() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Api {
    /// A service that rejects every token until a signer or verifier is set.
    pub fn new(store: Arc<Store>) -> Self {
        Self {
            store,
            catalog: Arc::new(Catalog::new()),
            portal: None,
            verifier: Arc::new(DenyAll),
            signer: None,
            users: Users::default(),
            token_ttl: 3600,
            clock: Arc::new(system_clock),
            routes: routes::table(),
        }
    }

    pub fn with_catalog(mut self, catalog: Arc<Catalog>) -> Self {
        self.catalog = catalog;
        self
    }

    pub fn with_portal(mut self, portal: Arc<dyn PortalClient>) -> Self {
        self.portal = Some(portal);
        self
    }

    /// Issues and verifies HMAC tokens with `secret`.
    pub fn with_secret(mut self, secret: &str, ttl: u64) -> Self {
        let signer = TokenSigner::new(secret);
        self.verifier = Arc::new(signer.clone());
        self.signer = Some(signer);
        self.token_ttl = ttl;
        self
    }

    /// Accepts tokens from an external verifier; `/api/auth/token` is then unavailable.
    pub fn with_verifier(mut self, verifier: Arc<dyn TokenVerifier>) -> Self {
        self.verifier = verifier;
        self.signer = None;
        self
    }

    pub fn with_users(mut self, users: Users) -> Self {
        self.users = users;
        self
    }

    pub fn with_clock(mut self, clock: impl Fn() -> u64 + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    /// Builds the service described by a configuration file: store under
    /// `data_dir`, ontology snapshots from `data_dir/ontologies`.
    pub fn from_config(config: &Config) -> Result<Self, String> {
        let store = Store::open_dir(&config.data_dir).map_err(|e| e.to_string())?;
        let catalog = Catalog::new();
        load_ontology_dir(&catalog, &config.data_dir.join("ontologies"))?;
        let mut api = Api::new(Arc::new(store)).with_catalog(Arc::new(catalog));
        if let Some(secret) = &config.token_secret {
            api = api.with_secret(secret, config.token_ttl);
        }
        if let Some(path) = &config.users_file {
            api = api.with_users(Users::load(path)?);
        }
        let portal = config.portal.build().map_err(|e| e.to_string())?;
        Ok(api.with_portal(Arc::from(portal)))
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    /// Signs a token directly, bypassing the users file.
    pub fn issue_token(&self, user: &str, roles: &[Role]) -> Option<String> {
        let roles: BTreeSet<Role> = roles.iter().copied().collect();
        Some(self.signer.as_ref()?.issue(user, &roles, (self.clock)() + self.token_ttl))
    }

    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        match self.dispatch(req) {
            Ok(resp) => resp,
            Err(e) => ApiResponse::error(&e),
        }
    }

    fn dispatch(&self, req: &ApiRequest) -> Outcome {
        // Invalid or expired tokens leave the caller anonymous; the route decides.
        let principal = bearer(req.authorization.as_deref()).and_then(|t| self.verifier.verify(t, (self.clock)()));
        let (route, params) = match routes::resolve(&self.routes, &req.method, &req.path) {
            Matched::Found(route, params) => (route, params),
            // Anonymous callers learn nothing about which paths exist.
            _ if principal.is_none() => return Err(ApiError::unauthenticated()),
            Matched::MethodNotAllowed => return Err(ApiError::method_not_allowed()),
            Matched::NotFound => return Err(ApiError::not_found(format!("no route for {}", req.path))),
        };
        let required = match route.access {
            Access::Anonymous => None,
            Access::Role(role) => Some(role),
            Access::CommonDomain => Some(if wants_persist(&req.body) { Role::Curator } else { Role::Reader }),
        };
        let principal = match (required, principal) {
            (None, p) => p,
            (Some(_), None) => return Err(ApiError::unauthenticated()),
            (Some(role), Some(p)) if !p.has(role) => return Err(ApiError::forbidden(role.as_str())),
            (Some(_), p) => p,
        };
        let ctx = Ctx { req, query: parse_query(&req.query), params, principal };
        self.run(route.handler, &ctx)
    }

    fn run(&self, handler: Handler, ctx: &Ctx) -> Outcome {
        match handler {
            Handler::Health => Ok(ok(json!({ "status": "ok", "version": self.store.version() }))),
            Handler::Token => self.token(ctx),
            Handler::List(kind) => self.list(kind, ctx),
            Handler::Create(kind) => self.create(kind, ctx),
            Handler::Get(kind) => self.get(kind, ctx),
            Handler::Replace(kind) => self.replace(kind, ctx),
            Handler::Delete(kind) => self.delete(kind, ctx),
            Handler::ListLinks(rel) => self.list_links(rel, ctx),
            Handler::Link(rel) => self.link(rel, ctx),
            Handler::Unlink(rel) => self.unlink(rel, ctx),
            Handler::Suggest => self.suggest(ctx),
            Handler::CompareElements => self.compare(ctx),
            Handler::CommonDomain => self.common_domain(ctx),
            Handler::RegistrySummary => self.summary(ctx),
            Handler::Discover => self.discover(ctx),
            Handler::Validate => self.validate(),
            Handler::Export => Ok(ApiResponse {
                status: 200,
                content_type: "application/json",
                body: export_string(&self.store.snapshot()).into_bytes(),
            }),
            Handler::Import => self.import(ctx),
        }
    }

    fn token(&self, ctx: &Ctx) -> Outcome {
        #[derive(Deserialize)]
        struct Login {
            username: String,
            password: String,
        }
        let signer = self
            .signer
            .as_ref()
            .ok_or_else(|| ApiError::new(503, "auth_unconfigured", "no token secret is configured"))?;
        let login: Login = ctx.body()?;
        let user = self
            .users
            .authenticate(&login.username, &login.password)
            .ok_or_else(|| ApiError::new(401, "invalid_credentials", "unknown user or wrong password"))?;
        let expires_at = (self.clock)() + self.token_ttl;
        let token = signer.issue(&user.username, &user.roles, expires_at);
        Ok(ok(json!({ "token": token, "token_type": "Bearer", "expires_at": expires_at, "roles": user.roles })))
    }

    fn list(&self, kind: ItemKind, ctx: &Ctx) -> Outcome {
        let model = self.store.snapshot();
        let (limit, offset) = ctx.page()?;
        let registry = ctx.query.get("registry").map(|s| ItemId::from(s.as_str()));
        let ontology = ctx.query.get("ontology");
        let mut rows: Vec<(SortKey, ItemId, Item)> = model
            .ids(kind)
            .into_iter()
            .filter_map(|id| model.get(kind, &id).map(|item| (id, item)))
            .filter(|(_, item)| match (item, &registry) {
                (Item::DataElement(de), Some(r)) => &de.registry_id == r,
                _ => true,
            })
            .filter(|(_, item)| match (item.ontology_ref(), ontology) {
                (Some(r), Some(o)) => &r.ontology_name == o,
                _ => true,
            })
            .map(|(id, item)| (natural_key(&model, &id, &item), id, item))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let total = rows.len();
        let items: Vec<Value> = rows.into_iter().skip(offset).take(limit).map(|(_, id, item)| item_view(&id, &item)).collect();
        Ok(ok(json!({ "items": items, "total": total, "limit": limit, "offset": offset, "version": model.version })))
    }

    fn get(&self, kind: ItemKind, ctx: &Ctx) -> Outcome {
        let id = ctx.id();
        let item = self.store.read_item(kind, &id)?;
        let mut view = item_view(&id, &item);
        view["version"] = json!(self.store.version());
        Ok(ok(view))
    }

    fn create(&self, kind: ItemKind, ctx: &Ctx) -> Outcome {
        let mut payload = ctx.object()?;
        payload.remove("id");
        if kind.is_catalogued() && !payload.contains_key("ref") {
            payload.insert("ref".into(), serde_json::to_value(OntologyRef::generate_local()).expect("ref serializes"));
        }
        let item = parse_item(kind, payload)?;
        let committed = self
            .store
            .write(ctx.actor(), |tx| tx.create(item.clone()))
            .map_err(|e| self.conflict(e, &item))?;
        let id = committed.value;
        Ok(ApiResponse::json(201, &json!({ "id": id, "version": committed.version, "item": item_view(&id, &item) })))
    }

    /// PUT replaces the whole payload; fields left out take their defaults.
    fn replace(&self, kind: ItemKind, ctx: &Ctx) -> Outcome {
        let id = ctx.id();
        let mut payload = ctx.object()?;
        if let Some(body_id) = payload.remove("id") {
            if body_id != json!(id) {
                return Err(ApiError::bad_request("body id does not match the path"));
            }
        }
        let item = parse_item(kind, payload)?;
        let committed = self
            .store
            .write(ctx.actor(), |tx| {
                tx.read(kind, &id)?;
                tx.replace(&id, item.clone())
            })
            .map_err(|e| self.conflict(e, &item))?;
        Ok(ok(json!({ "id": id, "version": committed.version, "item": item_view(&id, &item) })))
    }

    fn delete(&self, kind: ItemKind, ctx: &Ctx) -> Outcome {
        let id = ctx.id();
        let cascade = ctx.flag("cascade")?;
        let committed = self.store.write(ctx.actor(), |tx| tx.delete(kind, &id, cascade))?;
        Ok(ok(json!({ "deleted": id, "version": committed.version })))
    }

    /// Adds `existing_id` to duplicate-key conflicts.
    fn conflict(&self, e: StoreError, item: &Item) -> ApiError {
        let existing = match (&e, item) {
            (StoreError::DuplicateOntologyKey { kind, key }, _) => self.store.snapshot().find_by_ref(*kind, key),
            (StoreError::DuplicateKey { .. }, Item::Registry(r)) => self.store.snapshot().find_registry_by_name(&r.name),
            (StoreError::DuplicateKey { .. }, Item::DataElement(de)) => {
                self.store.snapshot().find_data_element(&de.registry_id, &de.storage_path)
            }
            _ => None,
        };
        let err = ApiError::from(e);
        match existing {
            Some(id) => err.with_details(json!({ "existing_id": id })),
            None => err,
        }
    }

    fn list_links(&self, relation: Relation, ctx: &Ctx) -> Outcome {
        let model = self.store.snapshot();
        let (limit, offset) = ctx.page()?;
        let left = ctx.query.get("left");
        let right = ctx.query.get("right");
        let pairs: Vec<(&ItemId, &ItemId)> = model
            .links
            .pairs(relation)
            .iter()
            .map(|(l, r)| (l, r))
            .filter(|(l, r)| left.is_none_or(|x| l.as_str() == x) && right.is_none_or(|x| r.as_str() == x))
            .collect();
        let total = pairs.len();
        let items: Vec<Value> = pairs
            .into_iter()
            .skip(offset)
            .take(limit)
            .map(|(l, r)| json!({ "left": l, "right": r }))
            .collect();
        Ok(ok(json!({ "relation": relation, "items": items, "total": total, "limit": limit, "offset": offset, "version": model.version })))
    }

    fn link_ends(ctx: &Ctx) -> Result<(ItemId, ItemId), ApiError> {
        #[derive(Deserialize)]
        struct Pair {
            left: ItemId,
            right: ItemId,
        }
        if let (Some(l), Some(r)) = (ctx.query.get("left"), ctx.query.get("right")) {
            return Ok((l.as_str().into(), r.as_str().into()));
        }
        let p: Pair = ctx.body()?;
        Ok((p.left, p.right))
    }

    fn link(&self, relation: Relation, ctx: &Ctx) -> Outcome {
        let (left, right) = Self::link_ends(ctx)?;
        let committed = self.store.write(ctx.actor(), |tx| tx.link(relation, &left, &right))?;
        Ok(ApiResponse::json(201, &json!({ "relation": relation, "left": left, "right": right, "version": committed.version })))
    }

    fn unlink(&self, relation: Relation, ctx: &Ctx) -> Outcome {
        let (left, right) = Self::link_ends(ctx)?;
        let committed = self.store.write(ctx.actor(), |tx| tx.unlink(relation, &left, &right))?;
        Ok(ok(json!({ "relation": relation, "left": left, "right": right, "version": committed.version })))
    }

    fn suggest(&self, ctx: &Ctx) -> Outcome {
        let q = ctx.required("q")?;
        let kind: ItemKind = ctx.parsed("kind")?.unwrap_or(ItemKind::DataElementConcept);
        let limit = ctx.parsed::<usize>("limit")?.unwrap_or(DEFAULT_SUGGESTIONS).min(MAX_SUGGESTIONS);
        let model = self.store.snapshot();
        let index = self.catalog.index();
        let mut suggester = Suggester::new(&model, &index);
        if let Some(portal) = &self.portal {
            suggester = suggester.with_portal(portal.as_ref());
        }
        if let Some(onts) = ctx.query.get("ontologies") {
            suggester = suggester.restrict_portal(split_list(onts).map(str::to_string).collect());
        }
        let resp = suggester.suggest(q, kind, limit)?;
        Ok(ok(json!({ "suggestions": resp.suggestions, "portal_reached": resp.portal_reached, "version": model.version })))
    }

    fn compare(&self, ctx: &Ctx) -> Outcome {
        let left = ItemId::from(ctx.required("left")?);
        let right = ItemId::from(ctx.required("right")?);
        let model = self.store.snapshot();
        let index = self.catalog.index();
        let report = CompatEngine::new(&model, &*index).compare_elements(&left, &right)?;
        let mut view = serde_json::to_value(&report).expect("report serializes");
        view["version"] = json!(model.version);
        Ok(ok(view))
    }

    fn common_domain(&self, ctx: &Ctx) -> Outcome {
        #[derive(Deserialize)]
        struct Body {
            left: ItemId,
            right: ItemId,
            #[serde(default)]
            persist: bool,
        }
        let body: Body = ctx.body()?;
        let domain = {
            let model = self.store.snapshot();
            let index = self.catalog.index();
            CompatEngine::new(&model, &*index).make_temporary_common_domain(&body.left, &body.right)?
        };
        if body.persist {
            let stored = persist_temporary_domain(&self.store, ctx.actor(), &domain)?;
            let mut view = serde_json::to_value(&stored).expect("domain serializes");
            view["version"] = json!(self.store.version());
            Ok(ApiResponse::json(201, &view))
        } else {
            Ok(ok(serde_json::to_value(&domain).expect("domain serializes")))
        }
    }

    fn summary(&self, ctx: &Ctx) -> Outcome {
        let id = ctx.id();
        let model = self.store.snapshot();
        let registry = model
            .registries
            .get(&id)
            .ok_or_else(|| ApiError::from(StoreError::NotFound { kind: ItemKind::Registry, id: id.clone() }))?;
        let index = self.catalog.index();
        let engine = CompatEngine::new(&model, &*index);

        let mut elements: Vec<(&ItemId, &mdr_core::model::DataElement)> =
            model.data_elements.iter().filter(|(_, de)| de.registry_id == id).collect();
        elements.sort_by(|a, b| a.1.storage_path.cmp(&b.1.storage_path).then_with(|| a.0.cmp(b.0)));
        let mut concepts: BTreeMap<OntologyRef, (ItemId, String, usize)> = BTreeMap::new();
        let element_views: Vec<Value> = elements
            .iter()
            .map(|(eid, de)| {
                let dec = model.data_element_concepts.get(&de.expresses);
                let vd = model.value_domains.get(&de.value_domain);
                if let Some(dec) = dec {
                    concepts
                        .entry(dec.ontology_ref.clone())
                        .or_insert_with(|| (de.expresses.clone(), dec.label.clone(), 0))
                        .2 += 1;
                }
                json!({
                    "id": eid,
                    "storage_path": de.storage_path,
                    "concept": dec.map(|d| json!({ "id": de.expresses, "ref": d.ontology_ref, "label": d.label })),
                    "value_domain": vd.map(|v| json!({ "id": de.value_domain, "ref": v.ontology_ref, "label": v.label, "datatype": v.datatype })),
                })
            })
            .collect();
        let concept_views: Vec<Value> = concepts
            .into_iter()
            .map(|(r, (cid, label, n))| json!({ "id": cid, "ref": r, "label": label, "elements": n }))
            .collect();

        let mut others: Vec<(&ItemId, &mdr_core::model::Registry)> = model.registries.iter().filter(|(rid, _)| **rid != id).collect();
        others.sort_by(|a, b| registry_order(a.1, b.1).then_with(|| a.0.cmp(b.0)));
        let mut comparisons = Vec::new();
        for (rid, other) in others {
            let s = engine.registry_pair_summary(&id, rid)?;
            comparisons.push(json!({ "registry": { "id": rid, "name": other.name }, "summary": s }));
        }
        Ok(ok(json!({
            "registry": item_view(&id, &Item::Registry(registry.clone())),
            "elements": element_views,
            "concepts": concept_views,
            "comparisons": comparisons,
            "version": model.version,
        })))
    }

    fn discover(&self, ctx: &Ctx) -> Outcome {
        let registries: BTreeSet<ItemId> = split_list(ctx.required("registries")?).map(ItemId::from).collect();
        let min: MinLevel = ctx.parsed("min")?.unwrap_or(MinLevel::Partial);
        let model = self.store.snapshot();
        let index = self.catalog.index();
        let features = CompatEngine::new(&model, &*index).discover_features(&registries, min)?;
        Ok(ok(json!({ "min": min, "registries": registries, "features": features, "version": model.version })))
    }

    fn validate(&self) -> Outcome {
        let model = self.store.snapshot();
        let report = validate_model(&model);
        let relaxations = strict_iso_check(&model, StrictIsoOptions::default());
        Ok(ok(json!({
            "exit_code": report.exit_code(),
            "findings": report.findings,
            "relaxations": relaxations,
            "version": model.version,
        })))
    }

    fn import(&self, ctx: &Ctx) -> Outcome {
        let mode: ImportMode = ctx.parsed("mode")?.unwrap_or(ImportMode::Strict);
        let text = std::str::from_utf8(&ctx.req.body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
        let doc = DataDictionaryDocument::parse(text)?;
        let report = import(&self.store, ctx.actor(), &doc, mode)?;
        Ok(ok(serde_json::to_value(&report).expect("report serializes")))
    }
}

/// Loads every `*.jsonl` snapshot in `dir`, in file-name order. A missing directory is empty.
pub fn load_ontology_dir(catalog: &Catalog, dir: &Path) -> Result<usize, String> {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(format!("{}: {e}", dir.display())),
    };
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    for f in &files {
        catalog.load_file(f).map_err(|e| format!("{}: {e}", f.display()))?;
    }
    Ok(files.len())
}

fn ok(value: Value) -> ApiResponse {
    ApiResponse::json(200, &value)
}

fn wants_persist(body: &[u8]) -> bool {
    serde_json::from_slice::<Value>(body).ok().and_then(|v| v.get("persist").and_then(Value::as_bool)).unwrap_or(false)
}

fn parse_query(raw: &str) -> HashMap<String, String> {
    form_urlencoded::parse(raw.as_bytes()).into_owned().collect()
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn parse_item(kind: ItemKind, payload: Map<String, Value>) -> Result<Item, ApiError> {
    Item::from_json(kind, Value::Object(payload))
        .map_err(|e| ApiError::new(400, "invalid_payload", format!("invalid {kind}: {e}")))
}

fn item_view(id: &ItemId, item: &Item) -> Value {
    let mut v = item.to_json();
    v["id"] = json!(id);
    v
}

fn registry_order(a: &mdr_core::model::Registry, b: &mdr_core::model::Registry) -> std::cmp::Ordering {
    a.name.to_lowercase().cmp(&b.name.to_lowercase()).then_with(|| a.name.cmp(&b.name))
}

type SortKey = (String, String, String);

/// Lists are ordered by the natural key of each kind, not by id.
fn natural_key(model: &Model, _id: &ItemId, item: &Item) -> SortKey {
    match item {
        Item::Registry(r) => (r.name.to_lowercase(), r.name.clone(), String::new()),
        Item::DataElement(de) => {
            let reg = model.registries.get(&de.registry_id).map(|r| r.name.clone()).unwrap_or_default();
            (reg.to_lowercase(), reg, de.storage_path.clone())
        }
        other => {
            let c: &dyn Catalogued = other.as_catalogued().expect("remaining kinds are catalogued");
            let r = c.ontology_ref();
            (r.ontology_name.clone(), r.ontology_id.clone(), String::new())
        }
    }
}

struct Ctx<'a> {
    req: &'a ApiRequest,
    query: HashMap<String, String>,
    params: Vec<String>,
    principal: Option<Principal>,
}

impl Ctx<'_> {
    fn id(&self) -> ItemId {
        ItemId::from(self.params[0].as_str())
    }

    fn actor(&self) -> &str {
        self.principal.as_ref().map_or("anonymous", |p| p.user_id.as_str())
    }

    fn body<T: serde::de::DeserializeOwned>(&self) -> Result<T, ApiError> {
        serde_json::from_slice(&self.req.body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
    }

    fn object(&self) -> Result<Map<String, Value>, ApiError> {
        match self.body::<Value>()? {
            Value::Object(m) => Ok(m),
            _ => Err(ApiError::bad_request("request body must be a JSON object")),
        }
    }

    fn required(&self, key: &str) -> Result<&str, ApiError> {
        self.query
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| ApiError::bad_request(format!("missing query parameter `{key}`")))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ApiError>
    where
        T::Err: std::fmt::Display,
    {
        self.query
            .get(key)
            .map(|v| v.parse().map_err(|e| ApiError::bad_request(format!("bad `{key}`: {e}"))))
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, ApiError> {
        Ok(self.parsed::<bool>(key)?.unwrap_or(false))
    }

    /// `limit` is clamped to [`MAX_PAGE`].
    fn page(&self) -> Result<(usize, usize), ApiError> {
        let limit = self.parsed::<usize>("limit")?.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
        let offset = self.parsed::<usize>("offset")?.unwrap_or(0);
        Ok((limit, offset))
    }
}
