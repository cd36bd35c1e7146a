use std::collections::HashSet;
use std::path::Path;

use hypercells::fixtures;
use hypercells::io::emit::{drawing, report_out, to_json, to_svg, ReportOut};
use hypercells::io::run::run;
use hypercells::io::spec::{load_spec, Algorithm};

#[test]
fn shipped_fixtures_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for f in fixtures::all() {
        let spec = load_spec(&dir.join(format!("{}.json", f.name))).unwrap();
        assert_eq!(spec, f, "{} is out of date", f.name);
    }
    let tps = load_spec(&dir.join("thrice-punctured-sphere.json")).unwrap();
    assert_eq!(tps.dimension, 2);
    assert_eq!(tps.group().unwrap().cusps.len(), 3);
}

#[test]
fn figure_three_svg_segments() {
    let r = run(&fixtures::figure_three_double()).unwrap();
    assert!(r.passed());
    let q = r.quotient.as_ref().unwrap();
    // distinct segments from the cell data: every internal facet is a
    // segment; shared ones count once
    let mut segments = HashSet::new();
    let d = drawing(&r).unwrap();
    let key = |a: &[f64], b: &[f64]| {
        let k = |p: &[f64]| [(p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64];
        let (x, y) = (k(a), k(b));
        if x <= y { (x, y) } else { (y, x) }
    };
    for [a, b] in &d.edges {
        segments.insert(key(a, b));
    }
    let per_cell: usize = q.cells.iter().map(|c| c.internal_facets.len()).sum();
    let shared = per_cell - segments.len();
    assert_eq!(d.edges.len(), segments.len());
    assert_eq!(per_cell, 6);
    assert_eq!(shared, 1);
    let svg = to_svg(&r).unwrap();
    assert_eq!(svg.matches(r#"<line class="edge""#).count(), per_cell - shared);
    assert_eq!(svg.matches(r#"<line class="external""#).count(), q.cells.len());
}

#[test]
fn json_round_trip_keeps_cells() {
    let r = run(&fixtures::figure_three_double()).unwrap();
    let text = to_json(&r);
    let back: ReportOut = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report_out(&r));
    let q = back.quotient.unwrap();
    assert!(q.cells.iter().all(|c| c.hyperideal_vertex.is_some() && c.external_face.is_some()));
}

#[test]
fn options_are_recorded() {
    let mut spec = fixtures::once_punctured_torus();
    spec.options.algorithm = Algorithm::Both;
    spec.options.tol = 2e-9;
    let r = run(&spec).unwrap();
    let doc = report_out(&r);
    assert_eq!(doc.options.tol, 2e-9);
    assert_eq!(doc.options.word_bound, spec.options.word_bound);
    assert!(doc.cut_locus.unwrap().length_bound >= spec.options.length_bound);
}
