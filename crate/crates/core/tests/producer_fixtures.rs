use std::path::PathBuf;

use jcoupling::orca::{parse_producer_output, read_canonical, write_canonical, AdapterError, IndexOrigin};
use jcoupling::tensor::{bond_frame_rotation, Mat3, Mechanism, Vec3, SUM_TOLERANCE_HZ};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

const PRINTED_TOTAL: [[f64; 3]; 3] = [
    [33.8736, 0.0, -0.0008],
    [0.0, 33.5480, -0.0793],
    [-0.0008, 0.0064, 21.9747],
];

#[test]
fn lab_frame_output_yields_one_pair() {
    let (doc, report) = parse_producer_output(&read("c1c2_lab.out")).unwrap();
    assert_eq!(report.pairs_found, 1);
    assert_eq!(report.index_origin, IndexOrigin::ZeroBased);
    assert_eq!(report.totals_recomputed, 0);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);

    let c = &doc.couplings()[0];
    assert_eq!((c.a, c.b), (1, 2));
    assert!(c.mechanisms.declared_total().is_some());
    assert_eq!(doc.atoms().unwrap().len(), 2);

    let r = bond_frame_rotation(&Vec3::x()).unwrap();
    let bond = c.total().rotate(&r, "bond:C1-C2").unwrap();
    let printed = Mat3::from_fn(|i, j| PRINTED_TOTAL[i][j]);
    assert!((bond.values() - printed).amax() <= SUM_TOLERANCE_HZ);
}

#[test]
fn missing_total_is_synthesized_with_a_warning() {
    let text = read("c1c2_lab.out");
    let start = text.find(" Total spin-spin").unwrap();
    let end = text.find(" Isotropic coupling").unwrap();
    let trimmed = format!("{}{}", &text[..start], &text[end..]);
    let (doc, report) = parse_producer_output(&trimmed).unwrap();
    assert_eq!(report.totals_recomputed, 1);
    assert_eq!(report.warnings.len(), 1);
    let total = doc.couplings()[0].total();
    assert!((total.get(jcoupling::tensor::Axis::Z, jcoupling::tensor::Axis::Z) - 33.8736).abs() <= SUM_TOLERANCE_HZ);
}

#[test]
fn deleted_fermi_block_names_pair_and_mechanism() {
    let text = read("c1c2_lab.out");
    let start = text.find(" Fermi-contact").unwrap();
    let end = text.find(" Spin-dipolar contribution").unwrap();
    let trimmed = format!("{}{}", &text[..start], &text[end..]);
    let err = parse_producer_output(&trimmed).unwrap_err();
    assert!(matches!(
        err,
        AdapterError::MissingMechanism {
            a: 1,
            b: 2,
            mechanism: Mechanism::Fc,
            ..
        }
    ));
    let message = err.to_string();
    assert!(message.contains("(1, 2)") && message.contains("fc"), "{message}");
}

#[test]
fn short_block_reports_line() {
    let text = read("c1c2_lab.out").replacen("       28.9120      0.0000      0.0000\n", "", 1);
    let err = parse_producer_output(&text).unwrap_err();
    assert!(matches!(err, AdapterError::BlockArity { found: 6, .. }), "{err}");
    assert!(err.to_string().starts_with("line "));
}

#[test]
fn duplicate_pair_is_fatal() {
    let text = read("c1c2_lab.out");
    let start = text.find(" NUCLEUS A").unwrap();
    let end = text.find(" Isotropic coupling").unwrap();
    let doubled = format!("{}{}{}", &text[..end], &text[start..end], &text[end..]);
    assert!(matches!(
        parse_producer_output(&doubled),
        Err(AdapterError::DuplicatePair { a: 1, b: 2, .. })
    ));
}

#[test]
fn foreign_units_are_fatal() {
    let text = read("c1c2_lab.out").replace("Paramagnetic contribution (Hz)", "Paramagnetic contribution (MHz)");
    assert!(matches!(parse_producer_output(&text), Err(AdapterError::Units { .. })));
}

#[test]
fn one_based_indices_are_detected() {
    let text = read("c1c2_lab.out").replace(
        "NUCLEUS A = C    0 NUCLEUS B = C    1",
        "NUCLEUS A = C    1 NUCLEUS B = C    2",
    );
    let (doc, report) = parse_producer_output(&text).unwrap();
    assert_eq!(report.index_origin, IndexOrigin::OneBased);
    assert_eq!((doc.couplings()[0].a, doc.couplings()[0].b), (1, 2));
}

#[test]
fn reversed_pair_is_transposed() {
    let text = read("c1c2_lab.out");
    let (straight, _) = parse_producer_output(&text).unwrap();
    let swapped = text.replace(
        "NUCLEUS A = C    0 NUCLEUS B = C    1",
        "NUCLEUS A = C    1 NUCLEUS B = C    0",
    );
    let (doc, report) = parse_producer_output(&swapped).unwrap();
    assert_eq!(report.warnings.len(), 1);
    let a = straight.couplings()[0].mechanisms.get(Mechanism::Dso).values();
    let b = doc.couplings()[0].mechanisms.get(Mechanism::Dso).values();
    assert_eq!(a.transpose(), *b);
}

#[test]
fn no_atom_list_defaults_to_zero_based() {
    let text = read("c1c2_lab.out");
    let start = text.find("---------------------------------\nCARTESIAN").unwrap();
    let end = text
        .find("----------------------------------------------------------")
        .unwrap();
    let stripped = format!("{}{}", &text[..start], &text[end..]);
    let (doc, report) = parse_producer_output(&stripped).unwrap();
    assert!(doc.atoms().is_none());
    assert_eq!(report.index_origin, IndexOrigin::ZeroBased);
    assert_eq!(report.warnings.len(), 1);
    assert_eq!((doc.couplings()[0].a, doc.couplings()[0].b), (1, 2));
}

#[test]
fn canonical_golden_file() {
    let (doc, _) = parse_producer_output(&read("c1c2_lab.out")).unwrap();
    let written = write_canonical(&doc);
    let path = fixture("c1c2_lab.json");
    if std::env::var_os("JCOUPLING_BLESS").is_some() {
        std::fs::write(&path, &written).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, golden);
    let back = read_canonical(&golden).unwrap();
    assert_eq!(back.couplings()[0].mechanisms, doc.couplings()[0].mechanisms);
    assert_eq!(write_canonical(&back), golden);
}
