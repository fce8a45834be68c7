//! Bundled example data: ontology snapshots, data dictionary documents and
//! recorded portal responses. Used by the tests, the CLI `--demo` paths and
//! as starting material for new deployments.

/// NCIt lysosomal storage diseases; Gaucher's Disease has two parents.
pub const NCIT_LYSOSOMAL_SNAPSHOT: &str = include_str!("../fixtures/ncit_lysosomal.jsonl");
/// HPO polydactyly terms, with HPO "Polydactyly" mapped to its SNOMED CT twin.
pub const POLYDACTYLY_SNAPSHOT: &str = include_str!("../fixtures/polydactyly.jsonl");
/// LOINC answer list LL1055-4 and its answers.
pub const LOINC_LL1055_SNAPSHOT: &str = include_str!("../fixtures/loinc_ll1055.jsonl");

/// One concept under two conceptual domains.
pub const GAUCHER_DOCUMENT: &str = include_str!("../fixtures/gaucher.json");
/// One permissible value shared by two value domains.
pub const POLYDACTYLY_DOCUMENT: &str = include_str!("../fixtures/polydactyly.json");
/// One value domain shared by two conceptual domains.
pub const LL1055_DOCUMENT: &str = include_str!("../fixtures/ll1055.json");
/// Three registries built from the documents above.
pub const DEMO_DOCUMENT: &str = include_str!("../fixtures/demo.json");

pub const PORTAL_FIXTURE: &str = include_str!("../fixtures/portal.json");

pub const DEMO_REGISTRY_CHARITE: &str = "Charité – Universitätsmedizin Berlin";
pub const DEMO_REGISTRY_SYDDANSK: &str = "Syddansk Rare Disease Registry";
pub const DEMO_REGISTRY_VIENNA: &str = "Vienna Lysosomal Registry";

pub const SNAPSHOTS: [&str; 3] = [NCIT_LYSOSOMAL_SNAPSHOT, POLYDACTYLY_SNAPSHOT, LOINC_LL1055_SNAPSHOT];
