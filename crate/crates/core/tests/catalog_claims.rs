use orbispec::catalog::{catalog, catalog_entry, catalog_names, make_ok_mk, verify_entry, Claim};
use orbispec::lattice::DEFAULT_ENUM_CAP;
use orbispec::Error;

#[test]
fn every_claim_holds() {
    for entry in catalog() {
        let results = verify_entry(&entry, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(results.len(), entry.claims.len());
        for r in results {
            assert!(r.passed, "{}: {} ({})", r.entry, r.claim, r.detail);
        }
    }
}

#[test]
fn names_resolve() {
    for name in catalog_names() {
        assert_eq!(catalog_entry(&name).unwrap().name, name);
    }
    assert_eq!(catalog_entry("torus-d5").unwrap().group.dim(), 5);
    assert_eq!(catalog_entry("O2-d7").unwrap().group.order(), 2);
    assert!(matches!(catalog_entry("pillowcase"), Err(Error::UnknownCatalogEntry(_))));
}

#[test]
fn ok_mk_arguments() {
    assert!(matches!(make_ok_mk(3, 3, 0), Err(Error::InvalidCodim { .. })));
    assert!(matches!(make_ok_mk(3, 0, 0), Err(Error::InvalidCodim { .. })));
    let (o, m, warning) = make_ok_mk(4, 2, 1).unwrap();
    assert!(warning.is_none());
    assert_eq!((o.name.as_str(), m.name.as_str()), ("O2-d4", "M2-d4"));
    // K_0 never vanishes, so p = 0 comes with a warning
    let (_, _, warning) = make_ok_mk(4, 2, 0).unwrap();
    assert!(warning.is_some());
}

#[test]
fn orbifold_claims_are_strata_counts() {
    let o = catalog_entry("O3-d6").unwrap();
    assert!(o.claims.iter().any(|c| matches!(
        c,
        Claim::UniformStrata { count: 8, codim: 3, isotropy_order: 2, .. }
    )));
}
