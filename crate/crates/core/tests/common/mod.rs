#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use permap_core::extract::{api_id, ApiRecord, ExtractionSource, Location, MethodSignature, Modifier, SourceCorpus};
use permap_core::{canonicalize_permission, MappingStore, Permission, PermissionSet, Provenance};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_corpus() -> SourceCorpus {
    SourceCorpus::from_manifest(&fixtures().join("sdk-mini/corpus.json")).expect("fixture manifest loads")
}

pub fn perm(name: &str) -> Permission {
    canonicalize_permission(name).expect("valid permission")
}

pub fn perms(names: &[&str]) -> PermissionSet {
    names.iter().map(|n| perm(n)).collect()
}

/// A record as extraction would produce it, minus source text.
pub fn record(corpus_id: &str, sdk: u32, fq_class: &str, name: &str, params: &[&str]) -> ApiRecord {
    let param_types: Vec<String> = params.iter().map(|p| p.to_string()).collect();
    ApiRecord {
        api_id: api_id(corpus_id, fq_class, name, &param_types),
        signature: MethodSignature {
            fq_class: fq_class.into(),
            name: name.into(),
            param_types,
            return_type: "void".into(),
            modifiers: BTreeSet::from([Modifier::Public]),
        },
        location: Location { path: format!("{}.java", fq_class.replace('.', "/")), line: 1 },
        top_package: fq_class.split('.').next().unwrap().into(),
        api_level: sdk,
        deprecated: false,
        doc_comment: String::new(),
        body_text: String::new(),
        declared_permissions: PermissionSet::new(),
        is_jni: false,
        extraction_source: ExtractionSource::Parser,
    }
}

/// Inserts `rec` and gives it a one-permission analyst mapping.
pub fn add_mapped(store: &mut MappingStore, rec: ApiRecord, permission: &str) -> String {
    let id = rec.api_id.clone();
    store.insert_record(rec);
    store.upsert_mapping(&id, &perms(&[permission]), Provenance::Analyst).unwrap();
    id
}

/// `count` distinct mapped methods spread over a few classes of `package`.
pub fn fill_package(store: &mut MappingStore, package: &str, count: usize, tag: &str) -> Vec<String> {
    let (id, sdk) = (store.corpus_id.clone(), store.sdk_version);
    (0..count)
        .map(|i| {
            let class = format!("{package}.sub{}.Class{}", i % 3, i % 17);
            add_mapped(store, record(&id, sdk, &class, &format!("{tag}{i}"), &[]), "READ_PHONE_STATE")
        })
        .collect()
}

/// Package rows of the per-version distribution table, 7 / 10 / 15.
pub const DISTRIBUTION: [(&str, [usize; 3]); 11] = [
    ("android", [1905, 2075, 1631]),
    ("com", [1391, 2097, 1116]),
    ("java", [212, 360, 328]),
    ("org", [3, 6, 56]),
    ("javax", [37, 25, 24]),
    ("sun", [0, 0, 67]),
    ("jdk", [0, 6, 7]),
    ("libcore", [0, 0, 12]),
    ("gov", [0, 0, 24]),
    ("jsr166", [4, 4, 0]),
    ("androidx", [0, 3, 0]),
];

pub const SDK_VERSIONS: [u32; 3] = [7, 10, 15];

/// A store for one column of the distribution table, padded with
/// permission-free records that must not be counted.
pub fn distribution_store(column: usize) -> MappingStore {
    let sdk = SDK_VERSIONS[column];
    let mut store = MappingStore::new(format!("android-{sdk}"), sdk);
    for (package, counts) in DISTRIBUTION {
        fill_package(&mut store, package, counts[column], "m");
        for i in 0..5 {
            store.insert_record(record(&store.corpus_id.clone(), sdk, &format!("{package}.free.Util"), &format!("free{i}"), &[]));
        }
    }
    store
}
