//! Random snapshot generator and a brute-force reference implementation of
//! the compatibility rules, written without touching the engine's code paths
//! (no canonical representatives, no grouping: only pairwise reachability
//! and nested loops).

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use mdr_core::catalog::CatalogIndex;
use mdr_core::compat::{Feature, MinLevel, RegistryPairSummary, Verdict};
use mdr_core::model::{
    DataElement, DataElementConcept, Datatype, ItemId, Model, NumericRange, OntologyRef, PermissibleValue, Registry,
    ValueDomain,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct Snapshot {
    pub model: Model,
    pub mappings: Vec<(OntologyRef, OntologyRef)>,
    pub catalog: CatalogIndex,
}

const ONTOLOGIES: [&str; 3] = ["HP", "SNOMEDCT", "NCIT"];

fn random_ref(rng: &mut StdRng, prefix: &str, i: usize) -> OntologyRef {
    let ont = ONTOLOGIES[rng.random_range(0..ONTOLOGIES.len())];
    OntologyRef::new(ont, format!("{prefix}{i}"))
}

/// Snapshot text declaring every mapped ref as a class with its mappings.
pub fn catalog_text(mappings: &[(OntologyRef, OntologyRef)]) -> String {
    let mut by_ref: BTreeMap<&OntologyRef, Vec<&OntologyRef>> = BTreeMap::new();
    for (a, b) in mappings {
        by_ref.entry(a).or_default().push(b);
        by_ref.entry(b).or_default();
    }
    let mut out = String::new();
    for (r, targets) in by_ref {
        let maps: Vec<_> = targets
            .iter()
            .map(|t| serde_json::json!({"ontology": t.ontology_name, "id": t.ontology_id}))
            .collect();
        let line = serde_json::json!({"ontology": r.ontology_name, "id": r.ontology_id, "label": format!("class {r}"), "mappings": maps});
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

pub fn build_catalog(mappings: &[(OntologyRef, OntologyRef)]) -> CatalogIndex {
    let catalog = mdr_core::Catalog::new();
    if !mappings.is_empty() {
        catalog.load_snapshot(&catalog_text(mappings)).expect("mappings carry no parent edges");
    }
    (*catalog.index()).clone()
}

pub fn random_snapshot(seed: u64) -> Snapshot {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut model = Model::default();

    let n_reg = rng.random_range(1..=10);
    let n_dec = rng.random_range(1..=8);
    let n_pv = rng.random_range(1..=12);
    let n_vd = rng.random_range(1..=14);
    let n_de = rng.random_range(0..=50);

    let regs: Vec<ItemId> = (0..n_reg).map(|i| ItemId::from(format!("r{i:02}"))).collect();
    for (i, id) in regs.iter().enumerate() {
        model.registries.insert(id.clone(), Registry { name: format!("Registry {i}"), organisation: None, contact: None });
    }

    let mut dec_refs = Vec::new();
    let decs: Vec<ItemId> = (0..n_dec)
        .map(|i| {
            let id = ItemId::from(format!("dec{i:02}"));
            let r = random_ref(&mut rng, "D", i);
            let label = ["Polydactyly", "Gaucher", "age", "Age", "cholesterol"][rng.random_range(0..5)];
            dec_refs.push(r.clone());
            model.data_element_concepts.insert(
                id.clone(),
                DataElementConcept { ontology_ref: r, label: label.into(), definition: None, synonyms: vec![] },
            );
            id
        })
        .collect();

    let mut pv_refs = Vec::new();
    let pvs: Vec<ItemId> = (0..n_pv)
        .map(|i| {
            let id = ItemId::from(format!("pv{i:02}"));
            let r = random_ref(&mut rng, "P", i);
            pv_refs.push(r.clone());
            model.permissible_values.insert(id.clone(), PermissibleValue { ontology_ref: r, label: format!("value {i}"), code: None });
            id
        })
        .collect();

    let vds: Vec<ItemId> = (0..n_vd)
        .map(|i| {
            let id = ItemId::from(format!("vd{i:02}"));
            let datatype = match rng.random_range(0..10) {
                0..=5 => Datatype::Enumerated,
                6 => Datatype::Integer,
                7 => Datatype::Decimal,
                8 => Datatype::Boolean,
                _ => Datatype::String,
            };
            let mut vd = ValueDomain::new(OntologyRef::new("LOCAL", format!("vd{i}")), format!("domain {i}"), datatype);
            match datatype {
                Datatype::Enumerated => {
                    for pv in &pvs {
                        if rng.random_bool(0.3) {
                            model.links.vd_pv.insert((id.clone(), pv.clone()));
                        }
                    }
                }
                Datatype::Integer | Datatype::Decimal => {
                    vd.format = Some(["mg/dL", "mmol/L"][rng.random_range(0..2)].into());
                    if rng.random_bool(0.8) {
                        let lo = rng.random_range(0..6) as f64;
                        let hi = lo + rng.random_range(0..6) as f64;
                        vd.range = Some(NumericRange { lo, hi, lo_closed: rng.random_bool(0.7), hi_closed: rng.random_bool(0.7) });
                    }
                }
                _ => {
                    if rng.random_bool(0.5) {
                        vd.format = Some("free text".into());
                    }
                }
            }
            model.value_domains.insert(id.clone(), vd);
            id
        })
        .collect();

    for i in 0..n_de {
        let id = ItemId::from(format!("de{i:02}"));
        let de = DataElement {
            registry_id: regs[rng.random_range(0..regs.len())].clone(),
            storage_path: format!("path/{i}"),
            expresses: decs[rng.random_range(0..decs.len())].clone(),
            value_domain: vds[rng.random_range(0..vds.len())].clone(),
        };
        model.data_elements.insert(id, de);
    }

    let mut mappings = Vec::new();
    for pool in [&dec_refs, &pv_refs] {
        for _ in 0..rng.random_range(0..=pool.len()) {
            let a = &pool[rng.random_range(0..pool.len())];
            let b = &pool[rng.random_range(0..pool.len())];
            if a != b {
                mappings.push((a.clone(), b.clone()));
            }
        }
    }
    let catalog = build_catalog(&mappings);
    Snapshot { model, mappings, catalog }
}

/// Naive reference implementation.
pub struct Oracle<'a> {
    pub model: &'a Model,
    adjacency: BTreeMap<OntologyRef, BTreeSet<OntologyRef>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub verdict: Verdict,
    pub concept: Option<OntologyRef>,
    pub shared_values: BTreeSet<OntologyRef>,
}

impl<'a> Oracle<'a> {
    pub fn new(model: &'a Model, mappings: &[(OntologyRef, OntologyRef)]) -> Self {
        let mut adjacency: BTreeMap<OntologyRef, BTreeSet<OntologyRef>> = BTreeMap::new();
        for (a, b) in mappings {
            adjacency.entry(a.clone()).or_default().insert(b.clone());
            adjacency.entry(b.clone()).or_default().insert(a.clone());
        }
        Self { model, adjacency }
    }

    /// Breadth-first reachability over undirected mapping edges.
    pub fn synonymous(&self, a: &OntologyRef, b: &OntologyRef) -> bool {
        if a == b {
            return true;
        }
        let mut seen = BTreeSet::from([a.clone()]);
        let mut queue = VecDeque::from([a.clone()]);
        while let Some(x) = queue.pop_front() {
            for y in self.adjacency.get(&x).into_iter().flatten() {
                if y == b {
                    return true;
                }
                if seen.insert(y.clone()) {
                    queue.push_back(y.clone());
                }
            }
        }
        false
    }

    pub fn closure(&self, a: &OntologyRef) -> BTreeSet<OntologyRef> {
        let mut nodes: BTreeSet<OntologyRef> = self.adjacency.keys().cloned().collect();
        nodes.insert(a.clone());
        nodes.into_iter().filter(|n| self.synonymous(a, n)).collect()
    }

    fn value_refs(&self, vd: &ItemId) -> Vec<OntologyRef> {
        self.model
            .links
            .vd_pv
            .iter()
            .filter(|(v, _)| v == vd)
            .map(|(_, pv)| self.model.permissible_values[pv].ontology_ref.clone())
            .collect()
    }

    fn concept_ref(&self, de: &ItemId) -> OntologyRef {
        let de = &self.model.data_elements[de];
        self.model.data_element_concepts[&de.expresses].ontology_ref.clone()
    }

    fn ranges_overlap(a: &NumericRange, b: &NumericRange) -> bool {
        // Sample-free check: compare the larger lower bound with the smaller upper bound.
        let (lo, lo_closed) = if a.lo > b.lo {
            (a.lo, a.lo_closed)
        } else if b.lo > a.lo {
            (b.lo, b.lo_closed)
        } else {
            (a.lo, a.lo_closed && b.lo_closed)
        };
        let (hi, hi_closed) = if a.hi < b.hi {
            (a.hi, a.hi_closed)
        } else if b.hi < a.hi {
            (b.hi, b.hi_closed)
        } else {
            (a.hi, a.hi_closed && b.hi_closed)
        };
        lo < hi || (lo == hi && lo_closed && hi_closed)
    }

    pub fn compare(&self, x: &ItemId, y: &ItemId) -> OracleReport {
        let (cx, cy) = (self.concept_ref(x), self.concept_ref(y));
        if !self.synonymous(&cx, &cy) {
            return OracleReport { verdict: Verdict::NotComparable, concept: None, shared_values: BTreeSet::new() };
        }
        let concept = Some(if cx < cy { cx } else { cy });
        let (dx, dy) = (&self.model.data_elements[x], &self.model.data_elements[y]);
        let (vx, vy) = (&self.model.value_domains[&dx.value_domain], &self.model.value_domains[&dy.value_domain]);
        let none = BTreeSet::new();
        let verdict = if vx.datatype != vy.datatype {
            Verdict::Incompatible
        } else {
            match vx.datatype {
                Datatype::Enumerated => {
                    let (a, b) = (self.value_refs(&dx.value_domain), self.value_refs(&dy.value_domain));
                    let covered = |from: &[OntologyRef], to: &[OntologyRef]| from.iter().all(|p| to.iter().any(|q| self.synonymous(p, q)));
                    let shared: BTreeSet<OntologyRef> = a
                        .iter()
                        .filter(|p| b.iter().any(|q| self.synonymous(p, q)))
                        .chain(b.iter().filter(|q| a.iter().any(|p| self.synonymous(p, q))))
                        .cloned()
                        .collect();
                    let verdict = if covered(&a, &b) && covered(&b, &a) {
                        Verdict::FullyCompatible
                    } else if !shared.is_empty() {
                        Verdict::PartiallyCompatible
                    } else {
                        Verdict::Incompatible
                    };
                    let shared_values = if verdict == Verdict::Incompatible { none } else { shared };
                    return OracleReport { verdict, concept, shared_values };
                }
                Datatype::Integer | Datatype::Decimal => {
                    if vx.format != vy.format {
                        Verdict::Incompatible
                    } else {
                        match (&vx.range, &vy.range) {
                            (None, None) => Verdict::FullyCompatible,
                            (Some(a), Some(b)) if a == b => Verdict::FullyCompatible,
                            (Some(a), Some(b)) if !Self::ranges_overlap(a, b) => Verdict::Incompatible,
                            _ => Verdict::PartiallyCompatible,
                        }
                    }
                }
                _ => {
                    if vx.format == vy.format {
                        Verdict::FullyCompatible
                    } else {
                        Verdict::Incompatible
                    }
                }
            }
        };
        OracleReport { verdict, concept, shared_values: none }
    }

    fn elements_of(&self, registry: &ItemId) -> Vec<ItemId> {
        self.model
            .data_elements
            .iter()
            .filter(|(_, de)| &de.registry_id == registry)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn summary(&self, a: &ItemId, b: &ItemId) -> RegistryPairSummary {
        let (ea, eb) = (self.elements_of(a), self.elements_of(b));
        let (mut full, mut partial, mut incompatible) = (0, 0, 0);
        let mut full_e = BTreeSet::new();
        let mut partial_e = BTreeSet::new();
        let mut matched_refs = BTreeSet::new();
        for x in &ea {
            for y in &eb {
                let r = self.compare(x, y);
                match r.verdict {
                    Verdict::NotComparable => continue,
                    Verdict::FullyCompatible => {
                        full += 1;
                        full_e.insert(x.clone());
                        full_e.insert(y.clone());
                    }
                    Verdict::PartiallyCompatible => {
                        partial += 1;
                        partial_e.insert(x.clone());
                        partial_e.insert(y.clone());
                    }
                    Verdict::Incompatible => incompatible += 1,
                }
                matched_refs.insert(self.concept_ref(x));
                matched_refs.insert(self.concept_ref(y));
            }
        }
        // One entry per synonym class: keep a ref only if no smaller synonym was matched.
        let shared: Vec<OntologyRef> = matched_refs
            .iter()
            .filter(|r| !matched_refs.iter().any(|s| s < r && self.synonymous(r, s)))
            .cloned()
            .collect();
        RegistryPairSummary {
            registry_a: a.clone(),
            registry_b: b.clone(),
            shared_concept_count: shared.len(),
            shared_concepts: shared,
            fully_compatible_pairs: full,
            partially_compatible_pairs: partial,
            incompatible_pairs: incompatible,
            fully_compatible_elements: full_e.len(),
            partially_compatible_elements: partial_e.len(),
        }
    }

    pub fn discover(&self, registries: &BTreeSet<ItemId>, min: MinLevel) -> Vec<Feature> {
        let all_refs: BTreeSet<OntologyRef> = self
            .model
            .data_elements
            .iter()
            .filter(|(_, de)| registries.contains(&de.registry_id))
            .map(|(id, _)| self.concept_ref(id))
            .collect();
        let mut features = Vec::new();
        for concept in &all_refs {
            // Visit each synonym class once, through its smallest expressed ref.
            if all_refs.iter().any(|s| s < concept && self.synonymous(s, concept)) {
                continue;
            }
            let mut elements = BTreeMap::new();
            for reg in registries {
                let els: Vec<ItemId> = self
                    .elements_of(reg)
                    .into_iter()
                    .filter(|e| self.synonymous(&self.concept_ref(e), concept))
                    .collect();
                elements.insert(reg.clone(), els);
            }
            if elements.values().any(Vec::is_empty) {
                continue;
            }
            let mut level = Verdict::FullyCompatible;
            for (ra, xs) in &elements {
                for (rb, ys) in &elements {
                    if ra >= rb {
                        continue;
                    }
                    for x in xs {
                        for y in ys {
                            let v = self.compare(x, y).verdict;
                            if v < level {
                                level = v;
                            }
                        }
                    }
                }
            }
            let ok = match min {
                MinLevel::Full => level == Verdict::FullyCompatible,
                MinLevel::Partial => level == Verdict::FullyCompatible || level == Verdict::PartiallyCompatible,
            };
            if !ok {
                continue;
            }
            let label = self
                .model
                .data_element_concepts
                .values()
                .find(|d| &d.ontology_ref == concept)
                .map(|d| d.label.clone())
                .unwrap();
            features.push(Feature { concept: concept.clone(), label, elements, level });
        }
        features.sort_by(|a, b| {
            let ka = (a.label.to_lowercase(), a.label.clone(), a.concept.clone());
            let kb = (b.label.to_lowercase(), b.label.clone(), b.concept.clone());
            ka.cmp(&kb)
        });
        features
    }
}

/// Runs engine and oracle over one snapshot; returns a description of the first mismatch.
pub fn check_snapshot(snap: &Snapshot, seed: u64) -> Result<usize, String> {
    use mdr_core::compat::CompatEngine;
    let engine = CompatEngine::new(&snap.model, &snap.catalog);
    let oracle = Oracle::new(&snap.model, &snap.mappings);
    let mut checks = 0;
    let des: Vec<&ItemId> = snap.model.data_elements.keys().collect();
    for x in &des {
        for y in &des {
            let got = engine.compare_elements(x, y).map_err(|e| format!("seed {seed}: {e}"))?;
            let want = oracle.compare(x, y);
            if (got.verdict, &got.concept, &got.shared_values) != (want.verdict, &want.concept, &want.shared_values) {
                return Err(format!("seed {seed}: compare {x} {y}: engine {got:?} oracle {want:?}"));
            }
            checks += 1;
        }
    }
    let regs: Vec<&ItemId> = snap.model.registries.keys().collect();
    for a in &regs {
        for b in &regs {
            if a == b {
                continue;
            }
            let got = engine.registry_pair_summary(a, b).map_err(|e| format!("seed {seed}: {e}"))?;
            let want = oracle.summary(a, b);
            if got != want {
                return Err(format!("seed {seed}: summary {a} {b}: engine {got:?} oracle {want:?}"));
            }
            checks += 1;
        }
    }
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    for _ in 0..4 {
        let set: BTreeSet<ItemId> = regs.iter().filter(|_| rng.random_bool(0.5)).map(|r| (*r).clone()).collect();
        if set.len() < 2 {
            continue;
        }
        for min in [MinLevel::Full, MinLevel::Partial] {
            let got = engine.discover_features(&set, min).map_err(|e| format!("seed {seed}: {e}"))?;
            let want = oracle.discover(&set, min);
            if got != want {
                return Err(format!("seed {seed}: discover {set:?} {min:?}: engine {got:?} oracle {want:?}"));
            }
            checks += 1;
        }
    }
    Ok(checks)
}
