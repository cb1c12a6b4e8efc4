mod common;

use common::*;
use permap_core::docaudit::{annotation_gap, doc_gap, ingest_doc_dump, DeclarationKind, DocKey, DocRecord, GapStatus};
use permap_core::MappingStore;
use proptest::prelude::*;

proptest! {
    #[test]
    fn gap_counts_partition(
        flags in prop::collection::vec((any::<bool>(), any::<bool>(), 0u8..3), 0..60),
    ) {
        let mut store = MappingStore::new("g", 10);
        let mut docs = Vec::new();
        for (i, (discovered, annotated, doc)) in flags.iter().enumerate() {
            let mut rec = record("g", 10, "android.app.Gap", &format!("m{i}"), &[]);
            if *annotated {
                rec.declared_permissions = perms(&["CAMERA"]);
            }
            let id = rec.api_id.clone();
            store.insert_record(rec);
            if *discovered {
                store.upsert_mapping(&id, &perms(&["CAMERA"]), permap_core::Provenance::Analyst).unwrap();
            }
            let kind = [DeclarationKind::Standardized, DeclarationKind::NonStandardized, DeclarationKind::Absent][*doc as usize];
            docs.push(DocRecord {
                signature_key: DocKey { fq_class: "android.app.Gap".into(), name: format!("m{i}"), arity: 0 },
                declaration_kind: kind,
                permissions_mentioned: perms(&["CAMERA"]),
                source_page: "Gap.html".into(),
            });
        }
        let d = flags.iter().filter(|f| f.0).count();
        for (report, a) in [
            (annotation_gap(&store), flags.iter().filter(|f| f.1).count()),
            (doc_gap(&store, &docs), flags.iter().filter(|f| f.2 == 0).count()),
        ] {
            prop_assert_eq!(report.discovered_total, d);
            prop_assert_eq!(report.annotated_total, a);
            prop_assert_eq!(report.annotated_and_discovered + report.new_discoveries, d);
            prop_assert_eq!(report.annotated_and_discovered + report.annotated_only, a);
            let new = report.itemized.iter().filter(|i| i.status == GapStatus::NewDiscovery).count();
            prop_assert_eq!(new, report.new_discoveries);
        }
    }
}

#[test]
fn overloads_make_doc_joins_ambiguous() {
    let mut store = MappingStore::new("g", 10);
    add_mapped(&mut store, record("g", 10, "android.app.A", "f", &["int"]), "CAMERA");
    add_mapped(&mut store, record("g", 10, "android.app.A", "f", &["long"]), "CAMERA");
    let docs = vec![DocRecord {
        signature_key: DocKey { fq_class: "android.app.A".into(), name: "f".into(), arity: 1 },
        declaration_kind: DeclarationKind::Standardized,
        permissions_mentioned: perms(&["CAMERA"]),
        source_page: "A.html".into(),
    }];
    let gap = doc_gap(&store, &docs);
    assert_eq!(gap.ambiguous, 1);
    assert_eq!(gap.annotated_total, 0);
    assert_eq!(gap.new_discoveries, 2);
}

#[test]
fn fixture_doc_dump_ingests() {
    let ingest = ingest_doc_dump(&fixtures().join("docs")).unwrap();
    assert_eq!(ingest.warnings.len(), 1);
    let find = |name: &str| ingest.records.iter().find(|r| r.signature_key.name == name).unwrap();
    assert_eq!(find("startRecording").declaration_kind, DeclarationKind::Standardized);
    assert_eq!(find("startRecording").permissions_mentioned, perms(&["CAMERA"]));
    assert_eq!(find("getLastKnownLocation").permissions_mentioned, perms(&["ACCESS_COARSE_LOCATION", "ACCESS_FINE_LOCATION"]));
    assert_eq!(find("isGPSEnabled").declaration_kind, DeclarationKind::NonStandardized);
    assert_eq!(find("hasLocationPermission").declaration_kind, DeclarationKind::Absent);
    assert_eq!(find("isInternetConnected").declaration_kind, DeclarationKind::Standardized);
    assert_eq!(ingest.records.len(), 7);
}
