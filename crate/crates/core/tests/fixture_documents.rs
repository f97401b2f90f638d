//! The stored operator documents under fixtures/ match the in-code catalog and
//! pass every check. Regenerate with STEIN_BLESS=1.

use std::path::PathBuf;

use stein_control::document::{verify_operator, OperatorDocument};
use stein_control::fixtures::CATALOG;
use stein_control::malliavin::GammaVariant;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn document(f: &stein_control::fixtures::Fixture) -> OperatorDocument {
    OperatorDocument::from_operator(&f.operator(), f.mode.label(), GammaVariant::Standard).with_name(f.name)
}

#[test]
fn stored_documents_match_catalog() {
    let bless = std::env::var_os("STEIN_BLESS").is_some();
    for f in CATALOG {
        let path = dir().join(format!("{}.json", f.name));
        let doc = document(f);
        if bless {
            std::fs::write(&path, doc.to_json() + "\n").unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let stored = OperatorDocument::from_json(&text).unwrap();
        assert_eq!(stored, doc, "{}", f.name);
        assert_eq!(stored.to_json() + "\n", text, "{} is not in canonical form", f.name);
        assert_eq!(stored.to_operator().unwrap(), f.operator());
    }
    let count = std::fs::read_dir(dir()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "json")).count();
    assert_eq!(count, CATALOG.len());
}

#[test]
fn stored_documents_verify() {
    for f in CATALOG {
        let text = std::fs::read_to_string(dir().join(format!("{}.json", f.name))).unwrap();
        let doc = OperatorDocument::from_json(&text).unwrap();
        let report = verify_operator(&doc.to_operator().unwrap(), doc.variant);
        assert!(report.summary.ok(), "{}: {:?}", f.name, report);
        assert_eq!(report.summary, doc.verification);
        assert_eq!((doc.t, doc.m), (f.order(), f.degree()), "{}", f.name);
    }
}
