use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Barrier};

use mdr_api::auth::{sha256_hex, UserEntry};
use mdr_api::routes::{sample_path, Access};
use mdr_api::{Api, ApiRequest, Role, Users};
use mdr_core::compat::CompatEngine;
use mdr_core::document::{export_string, import, DataDictionaryDocument, ImportMode};
use mdr_core::{fixtures, Catalog, Store};
use serde_json::{json, Value};

const SECRET: &str = "test-secret";
const NOW: u64 = 1_700_000_000;

fn demo_store() -> Arc<Store> {
    let store = Store::in_memory();
    import(&store, "seed", &DataDictionaryDocument::parse(fixtures::DEMO_DOCUMENT).unwrap(), ImportMode::Strict).unwrap();
    Arc::new(store)
}

fn api_with_clock(store: Arc<Store>, clock: Arc<AtomicU64>) -> Api {
    let catalog = Catalog::new();
    catalog.load_snapshot(fixtures::POLYDACTYLY_SNAPSHOT).unwrap();
    let users = Users::new(vec![UserEntry {
        username: "cura".into(),
        password_sha256: sha256_hex(b"pw"),
        roles: [Role::Curator].into(),
    }]);
    Api::new(store)
        .with_catalog(Arc::new(catalog))
        .with_secret(SECRET, 600)
        .with_users(users)
        .with_clock(move || clock.load(Ordering::SeqCst))
}

fn api(store: Arc<Store>) -> Api {
    api_with_clock(store, Arc::new(AtomicU64::new(NOW)))
}

fn token(api: &Api, role: Role) -> String {
    api.issue_token(role.as_str(), &[role]).unwrap()
}

fn registry_id(store: &Store, name: &str) -> String {
    store.snapshot().find_registry_by_name(name).unwrap().to_string()
}

fn element_id(store: &Store, registry: &str, path: &str) -> String {
    let model = store.snapshot();
    model.find_data_element(&model.find_registry_by_name(registry).unwrap(), path).unwrap().to_string()
}

#[test]
fn anonymous_requests_are_denied_by_default() {
    let api = api(demo_store());
    let resp = api.handle(&ApiRequest::get("/api/registries"));
    assert_eq!(resp.status, 401);
    assert_eq!(resp.value()["error"]["code"], "unauthenticated");
    for route in api.routes() {
        let resp = api.handle(&ApiRequest::new(route.method, &sample_path(route, "x")));
        if route.access == Access::Anonymous {
            assert_ne!(resp.status, 401, "{} {}", route.method, route.pattern);
        } else {
            assert_eq!(resp.status, 401, "{} {}", route.method, route.pattern);
        }
    }
    // Unknown paths do not reveal themselves to anonymous callers.
    assert_eq!(api.handle(&ApiRequest::get("/api/secret-admin")).status, 401);
    assert_eq!(api.handle(&ApiRequest::get("/api/health")).status, 200);
}

fn rank(access: Access, persist: bool) -> Option<Role> {
    match access {
        Access::Anonymous => None,
        Access::Role(r) => Some(r),
        Access::CommonDomain => Some(if persist { Role::Curator } else { Role::Reader }),
    }
}

#[test]
fn role_monotonicity_over_every_route() {
    let bodies = [json!({}), json!({ "left": "a", "right": "b", "persist": true })];
    let routes = Api::new(Arc::new(Store::in_memory())).routes().to_vec();
    for route in &routes {
        for body in &bodies {
            let persist = body.get("persist").is_some();
            let mut allowed_before = false;
            for role in Role::ALL {
                // A fresh service per call, so one call's writes cannot affect the next.
                let api = api(demo_store());
                let req = ApiRequest::new(route.method, &sample_path(route, "missing")).json(body).bearer(&token(&api, role));
                let status = api.handle(&req).status;
                assert_ne!(status, 401, "{} {} as {:?}", route.method, route.pattern, role);
                let allowed = status != 403;
                let should = rank(route.access, persist).is_none_or(|need| role >= need);
                assert_eq!(allowed, should, "{} {} as {:?}: {status}", route.method, route.pattern, role);
                assert!(!allowed_before || allowed, "{} {}: {:?} lost access", route.method, route.pattern, role);
                allowed_before = allowed;
            }
        }
    }
}

#[test]
fn tampered_expired_and_foreign_tokens_are_rejected() {
    let clock = Arc::new(AtomicU64::new(NOW));
    let api = api_with_clock(demo_store(), clock.clone());
    let good = token(&api, Role::Admin);
    assert_eq!(api.handle(&ApiRequest::get("/api/registries").bearer(&good)).status, 200);

    let (payload, sig) = good.split_once('.').unwrap();
    let mut flipped = sig.as_bytes().to_vec();
    flipped[0] = if flipped[0] == b'A' { b'B' } else { b'A' };
    let tampered_sig = format!("{payload}.{}", String::from_utf8(flipped).unwrap());
    let forged_payload = {
        use base64::Engine;
        let e = base64::engine::general_purpose::URL_SAFE_NO_PAD;
        let claims = json!({ "sub": "mallory", "roles": ["admin"], "exp": NOW + 10_000 });
        format!("{}.{sig}", e.encode(serde_json::to_vec(&claims).unwrap()))
    };
    let foreign = Api::new(demo_store()).with_secret("other", 600).issue_token("x", &[Role::Admin]).unwrap();
    for bad in [tampered_sig.as_str(), forged_payload.as_str(), foreign.as_str(), "nonsense", ""] {
        let resp = api.handle(&ApiRequest::get("/api/registries").bearer(bad));
        assert_eq!(resp.status, 401, "{bad}");
    }
    // A bad token makes the caller anonymous: public routes still answer, writes do not.
    assert_eq!(api.handle(&ApiRequest::get("/api/health").bearer("nonsense")).status, 200);
    let write = ApiRequest::new("POST", "/api/registries").json(&json!({ "name": "X" })).bearer(&tampered_sig);
    assert_eq!(api.handle(&write).status, 401);

    clock.store(NOW + 600, Ordering::SeqCst);
    assert_eq!(api.handle(&ApiRequest::get("/api/registries").bearer(&good)).status, 401);
}

#[test]
fn token_endpoint_checks_users_file() {
    let api = api(demo_store());
    let resp = api.handle(&ApiRequest::new("POST", "/api/auth/token").json(&json!({ "username": "cura", "password": "pw" })));
    assert_eq!(resp.status, 200);
    let body = resp.value();
    assert_eq!(body["roles"], json!(["curator"]));
    assert_eq!(body["expires_at"], json!(NOW + 600));
    let t = body["token"].as_str().unwrap();
    assert_eq!(api.handle(&ApiRequest::get("/api/registries").bearer(t)).status, 200);
    assert_eq!(api.handle(&ApiRequest::get("/api/export").bearer(t)).status, 403);

    let wrong = api.handle(&ApiRequest::new("POST", "/api/auth/token").json(&json!({ "username": "cura", "password": "no" })));
    assert_eq!(wrong.status, 401);
    let unconfigured = Api::new(demo_store()).handle(&ApiRequest::new("POST", "/api/auth/token").json(&json!({ "username": "cura", "password": "pw" })));
    assert_eq!(unconfigured.status, 503);
}

#[test]
fn duplicate_create_returns_conflict_with_existing_id() {
    let api = api(demo_store());
    let t = token(&api, Role::Curator);
    let body = json!({ "ref": { "ontology_name": "NCIT", "ontology_id": "C2020" }, "label": "Fabry Disease" });
    let first = api.handle(&ApiRequest::new("POST", "/api/data-element-concepts").json(&body).bearer(&t));
    assert_eq!(first.status, 201, "{:?}", first.value());
    let id = first.value()["id"].clone();
    let second = api.handle(&ApiRequest::new("POST", "/api/data-element-concepts").json(&body).bearer(&t));
    assert_eq!(second.status, 409);
    assert_eq!(second.value()["error"]["code"], "duplicate_ontology_key");
    assert_eq!(second.value()["error"]["details"]["existing_id"], id);

    let reg = json!({ "name": fixtures::DEMO_REGISTRY_VIENNA });
    let dup = api.handle(&ApiRequest::new("POST", "/api/registries").json(&reg).bearer(&t));
    assert_eq!(dup.status, 409);
    assert_eq!(dup.value()["error"]["details"]["existing_id"], json!(registry_id(api.store(), fixtures::DEMO_REGISTRY_VIENNA)));
}

#[test]
fn concurrent_api_creates_yield_one_success() {
    let api = api(Arc::new(Store::in_memory()));
    let t = token(&api, Role::Curator);
    let body = json!({ "ref": { "ontology_name": "NCIT", "ontology_id": "C61263" }, "label": "Gaucher's Disease" });
    let n = 200;
    let barrier = Barrier::new(n);
    let statuses: Vec<u16> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n)
            .map(|_| {
                s.spawn(|| {
                    let req = ApiRequest::new("POST", "/api/data-element-concepts").json(&body).bearer(&t);
                    barrier.wait();
                    api.handle(&req).status
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(statuses.iter().filter(|&&s| s == 201).count(), 1);
    assert_eq!(statuses.iter().filter(|&&s| s == 409).count(), n - 1);
    assert_eq!(api.store().version(), 1);
}

#[test]
fn create_without_ref_gets_local_ref_and_crud_round_trip() {
    let api = api(demo_store());
    let t = token(&api, Role::Curator);
    let created = api.handle(
        &ApiRequest::new("POST", "/api/permissible-values").json(&json!({ "label": "Maybe" })).bearer(&t),
    );
    assert_eq!(created.status, 201);
    let v = created.value();
    assert_eq!(v["item"]["ref"]["ontology_name"], "LOCAL");
    let id = v["id"].as_str().unwrap().to_string();
    let path = format!("/api/permissible-values/{id}");

    let got = api.handle(&ApiRequest::get(&path).bearer(&t)).value();
    assert_eq!(got["label"], "Maybe");
    let mut replacement = got.clone();
    replacement["label"] = json!("Perhaps");
    replacement.as_object_mut().unwrap().remove("version");
    let put = api.handle(&ApiRequest::new("PUT", &path).json(&replacement).bearer(&t));
    assert_eq!(put.status, 200, "{:?}", put.value());
    assert_eq!(api.handle(&ApiRequest::get(&path).bearer(&t)).value()["label"], "Perhaps");

    let del = api.handle(&ApiRequest::new("DELETE", &path).bearer(&t));
    assert_eq!(del.status, 200);
    assert_eq!(api.handle(&ApiRequest::get(&path).bearer(&t)).status, 404);
    assert_eq!(api.handle(&ApiRequest::new("PUT", &path).json(&replacement).bearer(&t)).status, 404);
}

#[test]
fn reads_never_change_the_version() {
    let store = demo_store();
    let api = api(store.clone());
    let t = token(&api, Role::Admin);
    let before = store.version();
    let changes = store.change_count();
    let x = element_id(&store, fixtures::DEMO_REGISTRY_CHARITE, "phenotype.polydactyly");
    let y = element_id(&store, fixtures::DEMO_REGISTRY_SYDDANSK, "hpo/polydactyly");
    let charite = registry_id(&store, fixtures::DEMO_REGISTRY_CHARITE);
    let mut paths = vec![
        format!("/api/compat/elements?left={x}&right={y}"),
        format!("/api/registries/{charite}/summary"),
        format!("/api/discover?registries={charite},{}&min=full", registry_id(&store, fixtures::DEMO_REGISTRY_VIENNA)),
        "/api/suggest?q=poly&kind=data_element_concept".into(),
        "/api/validate".into(),
        "/api/export".into(),
        "/api/links/vd-pv".into(),
    ];
    for route in api.routes().iter().filter(|r| r.method == "GET") {
        paths.push(sample_path(route, &charite));
    }
    for p in &paths {
        let resp = api.handle(&ApiRequest::get(p).bearer(&t));
        assert!(resp.status < 500, "{p}: {}", resp.status);
    }
    // Computing a common domain without persisting is a read too.
    let resp = api.handle(&ApiRequest::new("POST", "/api/compat/common-domain").json(&json!({ "left": x, "right": y })).bearer(&t));
    assert_eq!(resp.status, 200);
    assert_eq!((store.version(), store.change_count()), (before, changes));
}

#[test]
fn lists_are_paged_in_natural_key_order() {
    let api = api(demo_store());
    let t = token(&api, Role::Reader);
    let all = api.handle(&ApiRequest::get("/api/registries").bearer(&t)).value();
    let names: Vec<&str> = all["items"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names, [fixtures::DEMO_REGISTRY_CHARITE, fixtures::DEMO_REGISTRY_SYDDANSK, fixtures::DEMO_REGISTRY_VIENNA]);
    assert_eq!(all["total"], 3);
    let page = api.handle(&ApiRequest::get("/api/registries?limit=1&offset=1").bearer(&t)).value();
    assert_eq!(page["items"][0]["name"], fixtures::DEMO_REGISTRY_SYDDANSK);
    assert_eq!((page["limit"].clone(), page["total"].clone()), (json!(1), json!(3)));
    let clamped = api.handle(&ApiRequest::get("/api/permissible-values?limit=100000").bearer(&t)).value();
    assert_eq!(clamped["limit"], 500);
    assert_eq!(api.handle(&ApiRequest::get("/api/registries?limit=ten").bearer(&t)).status, 400);

    let charite = registry_id(api.store(), fixtures::DEMO_REGISTRY_CHARITE);
    let des = api.handle(&ApiRequest::get(&format!("/api/data-elements?registry={charite}")).bearer(&t)).value();
    let paths: Vec<&str> = des["items"].as_array().unwrap().iter().map(|d| d["storage_path"].as_str().unwrap()).collect();
    let mut sorted = paths.clone();
    sorted.sort();
    assert_eq!(paths.len(), 4);
    assert_eq!(paths, sorted);
}

#[test]
fn charite_summary_matches_engine() {
    let store = demo_store();
    let api = api(store.clone());
    let t = token(&api, Role::Reader);
    let charite = registry_id(&store, fixtures::DEMO_REGISTRY_CHARITE);
    let resp = api.handle(&ApiRequest::get(&format!("/api/registries/{charite}/summary")).bearer(&t));
    assert_eq!(resp.status, 200);
    let body = resp.value();
    assert_eq!(body["registry"]["name"], fixtures::DEMO_REGISTRY_CHARITE);
    assert_eq!(body["elements"].as_array().unwrap().len(), 4);

    let model = store.snapshot();
    let catalog = api.catalog().index();
    let engine = CompatEngine::new(&model, &*catalog);
    let comparisons = body["comparisons"].as_array().unwrap();
    assert_eq!(comparisons.len(), 2);
    for c in comparisons {
        let other = c["registry"]["id"].as_str().unwrap();
        let expected = engine.registry_pair_summary(&charite.as_str().into(), &other.into()).unwrap();
        assert_eq!(c["summary"], serde_json::to_value(&expected).unwrap());
    }
    assert_eq!(api.handle(&ApiRequest::get("/api/registries/nope/summary").bearer(&t)).status, 404);
}

#[test]
fn compat_endpoints() {
    let store = demo_store();
    let api = api(store.clone());
    let reader = token(&api, Role::Reader);
    let curator = token(&api, Role::Curator);
    let x = element_id(&store, fixtures::DEMO_REGISTRY_CHARITE, "phenotype.polydactyly");
    let y = element_id(&store, fixtures::DEMO_REGISTRY_SYDDANSK, "hpo/polydactyly");
    let cmp = api.handle(&ApiRequest::get(&format!("/api/compat/elements?left={x}&right={y}")).bearer(&reader)).value();
    assert_eq!(cmp["verdict"], "partially_compatible");
    assert_eq!(cmp["shared_values"], json!([{ "ontology_name": "HP", "ontology_id": "HP:0001161" }]));
    assert_eq!(api.handle(&ApiRequest::get("/api/compat/elements?left=a").bearer(&reader)).status, 400);
    assert_eq!(api.handle(&ApiRequest::get("/api/compat/elements?left=a&right=b").bearer(&reader)).status, 404);

    let persist = json!({ "left": x, "right": y, "persist": true });
    let req = ApiRequest::new("POST", "/api/compat/common-domain").json(&persist);
    assert_eq!(api.handle(&req.clone().bearer(&reader)).status, 403);
    let made = api.handle(&req.bearer(&curator));
    assert_eq!(made.status, 201);
    assert_eq!(made.value()["persisted"], true);

    let lab_x = element_id(&store, fixtures::DEMO_REGISTRY_CHARITE, "lab.nat_result");
    let lab_y = element_id(&store, fixtures::DEMO_REGISTRY_SYDDANSK, "lab/nucleic_acid");
    let full = api.handle(
        &ApiRequest::new("POST", "/api/compat/common-domain").json(&json!({ "left": lab_x, "right": lab_y })).bearer(&reader),
    );
    assert_eq!(full.status, 422);
    assert_eq!(full.value()["error"]["code"], "not_partially_compatible");

    let charite = registry_id(&store, fixtures::DEMO_REGISTRY_CHARITE);
    let syddansk = registry_id(&store, fixtures::DEMO_REGISTRY_SYDDANSK);
    let disc = api.handle(&ApiRequest::get(&format!("/api/discover?registries={charite},{syddansk}&min=full")).bearer(&reader)).value();
    assert!(disc["features"].as_array().unwrap().iter().all(|f| f["label"] != "Polydactyly"));
    let one = api.handle(&ApiRequest::get(&format!("/api/discover?registries={charite}")).bearer(&reader));
    assert_eq!(one.status, 422);
    assert_eq!(api.handle(&ApiRequest::get(&format!("/api/discover?registries={charite},{syddansk}&min=most")).bearer(&reader)).status, 400);
}

#[test]
fn suggestions_are_deterministic_and_exact_first() {
    let api = api(demo_store());
    let t = token(&api, Role::Reader);
    let req = ApiRequest::get("/api/suggest?q=Polydactyly&kind=data_element_concept").bearer(&t);
    let first = api.handle(&req);
    assert_eq!(first.status, 200);
    assert_eq!(first.value()["suggestions"][0]["label"], "Polydactyly");
    for _ in 0..5 {
        assert_eq!(api.handle(&req).body, first.body);
    }
    assert_eq!(api.handle(&ApiRequest::get("/api/suggest?q=p").bearer(&t)).status, 400);
    assert_eq!(api.handle(&ApiRequest::get("/api/suggest?q=poly&kind=registry").bearer(&t)).status, 400);
    assert_eq!(api.handle(&ApiRequest::get("/api/suggest?q=poly&limit=0").bearer(&t)).status, 400);
}

#[test]
fn links_can_be_listed_created_and_removed() {
    let store = demo_store();
    let api = api(store.clone());
    let t = token(&api, Role::Curator);
    let pv = api
        .handle(&ApiRequest::new("POST", "/api/permissible-values").json(&json!({ "label": "Maybe" })).bearer(&t))
        .value()["id"]
        .clone();
    let model = store.snapshot();
    let answers = model
        .value_domains
        .iter()
        .find(|(_, vd)| vd.ontology_ref.ontology_id == "vd-nucleic-acid-answers")
        .map(|(id, _)| id.to_string())
        .unwrap();
    let pair = json!({ "left": answers, "right": pv });
    assert_eq!(api.handle(&ApiRequest::new("POST", "/api/links/vd-pv").json(&pair).bearer(&t)).status, 201);
    assert_eq!(api.handle(&ApiRequest::new("POST", "/api/links/vd-pv").json(&pair).bearer(&t)).status, 409);
    let listed = api.handle(&ApiRequest::get(&format!("/api/links/vd-pv?left={answers}")).bearer(&t)).value();
    assert!(listed["items"].as_array().unwrap().contains(&pair));
    let pv_path = format!("/api/permissible-values/{}", pv.as_str().unwrap());
    assert_eq!(api.handle(&ApiRequest::new("DELETE", &pv_path).bearer(&t)).status, 409);
    assert_eq!(api.handle(&ApiRequest::new("DELETE", "/api/links/vd-pv").json(&pair).bearer(&t)).status, 200);
    assert_eq!(api.handle(&ApiRequest::new("DELETE", "/api/links/vd-pv").json(&pair).bearer(&t)).status, 404);
    assert_eq!(api.handle(&ApiRequest::new("DELETE", &pv_path).bearer(&t)).status, 200);
}

#[test]
fn export_import_round_trip_through_the_api() {
    let store = demo_store();
    let api = api(store.clone());
    let admin = token(&api, Role::Admin);
    let exported = api.handle(&ApiRequest::get("/api/export").bearer(&admin));
    assert_eq!(exported.status, 200);
    assert_eq!(exported.body, export_string(&store.snapshot()).into_bytes());

    let fresh = api_fresh();
    let t = token(&fresh, Role::Admin);
    let imported = fresh.handle(&ApiRequest::new("POST", "/api/import").text(exported.body.clone()).bearer(&t));
    assert_eq!(imported.status, 200, "{:?}", imported.value());
    assert_eq!(fresh.handle(&ApiRequest::get("/api/export").bearer(&t)).body, exported.body);
    let again = fresh.handle(&ApiRequest::new("POST", "/api/import").text(exported.body.clone()).bearer(&t));
    assert_eq!(again.status, 409);
    let merged = fresh.handle(&ApiRequest::new("POST", "/api/import?mode=merge").text(exported.body).bearer(&t));
    assert_eq!(merged.status, 200);
    assert_eq!(merged.value()["total"]["created"], 0);
    assert_eq!(fresh.handle(&ApiRequest::new("POST", "/api/import").text("{").bearer(&t)).status, 400);

    let report = fresh.handle(&ApiRequest::get("/api/validate").bearer(&t)).value();
    assert_eq!(report["exit_code"], 0);
    assert!(report["relaxations"].as_array().unwrap().len() >= 3);
}

fn api_fresh() -> Api {
    api(Arc::new(Store::in_memory()))
}

#[test]
fn error_bodies_are_structured() {
    let api = api(demo_store());
    let t = token(&api, Role::Reader);
    let resp = api.handle(&ApiRequest::new("PATCH", "/api/registries").bearer(&t));
    assert_eq!(resp.status, 405);
    let nf = api.handle(&ApiRequest::get("/api/nothing").bearer(&t));
    assert_eq!(nf.status, 404);
    let v: Value = nf.value();
    assert_eq!(v["error"]["code"], "not_found");
    assert!(v["error"]["message"].is_string());
    let c = token(&api, Role::Curator);
    let bad = api.handle(&ApiRequest::new("POST", "/api/value-domains").json(&json!({ "label": "x" })).bearer(&c));
    assert_eq!(bad.status, 400);
    assert_eq!(bad.value()["error"]["code"], "invalid_payload");
}

#[test]
fn editor_flow_suggest_then_create_then_conflict() {
    let catalog = Catalog::new();
    catalog.load_snapshot(fixtures::NCIT_LYSOSOMAL_SNAPSHOT).unwrap();
    let api = Api::new(Arc::new(Store::in_memory())).with_catalog(Arc::new(catalog)).with_secret(SECRET, 600);
    let t = token(&api, Role::Curator);
    let found = api.handle(&ApiRequest::get("/api/suggest?q=Gauch&kind=data-element-concepts").bearer(&t)).value();
    let pick = found["suggestions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["label"] == "Gaucher's Disease")
        .cloned()
        .expect("Gaucher's Disease suggested");
    let body = json!({ "ref": pick["ref"], "label": pick["label"] });
    let created = api.handle(&ApiRequest::new("POST", "/api/data-element-concepts").json(&body).bearer(&t));
    assert_eq!(created.status, 201);
    assert_eq!(created.value()["item"]["ref"], pick["ref"]);
    let again = api.handle(&ApiRequest::new("POST", "/api/data-element-concepts").json(&body).bearer(&t));
    assert_eq!(again.status, 409);
    assert_eq!(again.value()["error"]["details"]["existing_id"], created.value()["id"]);
    // Once stored, the repository entry replaces the catalog one.
    let found = api.handle(&ApiRequest::get("/api/suggest?q=Gauch&kind=data_element_concept").bearer(&t)).value();
    let refs: Vec<&Value> = found["suggestions"].as_array().unwrap().iter().map(|s| &s["ref"]).collect();
    assert_eq!(refs.iter().filter(|r| ***r == pick["ref"]).count(), 1);
    assert_eq!(found["suggestions"][0]["source"], "repository");
}

#[test]
fn explorer_flow_min_level_toggles_polydactyly_feature() {
    let mut doc = DataDictionaryDocument::parse(fixtures::DEMO_DOCUMENT).unwrap();
    doc.data_elements.retain(|d| d.storage_path.contains("polydactyly"));
    let store = Store::in_memory();
    import(&store, "t", &doc, ImportMode::Strict).unwrap();
    let store = Arc::new(store);
    let api = api(store.clone());
    let t = token(&api, Role::Reader);
    let a = registry_id(&store, fixtures::DEMO_REGISTRY_CHARITE);
    let b = registry_id(&store, fixtures::DEMO_REGISTRY_SYDDANSK);
    let rows = |min: &str| {
        let v = api.handle(&ApiRequest::get(&format!("/api/discover?registries={a},{b}&min={min}")).bearer(&t)).value();
        v["features"].as_array().unwrap().len()
    };
    assert_eq!(rows("full"), 0);
    assert_eq!(rows("partial"), 1);
}
