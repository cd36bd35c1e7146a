//! Reference manifolds used by the tests and shipped as JSON inputs.

use num_complex::Complex64;

use crate::io::spec::{MatrixSpec, ManifoldSpec, RunOptions, SCHEMA_VERSION};
use crate::minkowski::Psl2;

fn real(a: f64, b: f64, c: f64, d: f64) -> MatrixSpec {
    MatrixSpec::Psl2 { psl2: Psl2::Real([[a, b], [c, d]]) }
}

fn mirror(u: [f64; 3]) -> MatrixSpec {
    MatrixSpec::Mirror { mirror: u.to_vec() }
}

fn product(fs: Vec<MatrixSpec>) -> MatrixSpec {
    MatrixSpec::Product { product: fs }
}

/// The sphere with three punctures, as the principal congruence subgroup of
/// level two, with equal decorations at infinity, 0 and 1.
pub fn thrice_punctured_sphere() -> ManifoldSpec {
    ManifoldSpec {
        schema: SCHEMA_VERSION,
        name: "thrice-punctured-sphere".into(),
        dimension: 2,
        generators: vec![real(1.0, 2.0, 0.0, 1.0), real(1.0, 0.0, 2.0, 1.0)],
        reflections: vec![],
        cusps: vec![vec![2.0, 2.0, 0.0], vec![2.0, -2.0, 0.0], vec![4.0, 0.0, 4.0]],
        options: RunOptions { word_bound: 5, height_bound: 40.0, length_bound: 3.0, ..RunOptions::default() },
    }
}

/// A once-punctured torus given by two hyperbolic generators whose
/// commutator is parabolic at infinity.
pub fn once_punctured_torus() -> ManifoldSpec {
    ManifoldSpec {
        schema: SCHEMA_VERSION,
        name: "once-punctured-torus".into(),
        dimension: 2,
        generators: vec![real(1.0, 1.0, 1.0, 2.0), real(1.0, -1.0, -1.0, 2.0)],
        reflections: vec![],
        cusps: vec![vec![1.0, 1.0, 0.0]],
        options: RunOptions { word_bound: 7, height_bound: 40.0, length_bound: 3.0, ..RunOptions::default() },
    }
}

/// The figure-eight knot complement, with the cusp horoball at height 1.5.
pub fn figure_eight() -> ManifoldSpec {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    ManifoldSpec {
        schema: SCHEMA_VERSION,
        name: "figure-eight".into(),
        dimension: 3,
        generators: vec![
            MatrixSpec::Psl2 { psl2: Psl2::Complex([[one, one], [o, one]]) },
            MatrixSpec::Psl2 { psl2: Psl2::Complex([[one, o], [-omega, one]]) },
        ],
        reflections: vec![],
        cusps: vec![vec![1.5, 1.5, 0.0, 0.0]],
        options: RunOptions { word_bound: 7, height_bound: 15.0, length_bound: 3.0, ..RunOptions::default() },
    }
}

/// Double of a surface with one cusp and totally geodesic boundary, glued
/// from the right-angled pentagon with one ideal vertex. The sides are the
/// lines `x = -1`, `x = 1`, the circle `|z| = 1/2` and the two boundary
/// circles of radius `sqrt(3)/2` centred at `±1`; the reflections in the
/// latter two are the walls.
pub fn figure_three_double() -> ManifoldSpec {
    let s1 = mirror([-1.0, -1.0, 1.0]);
    let s2 = mirror([1.0, 1.0, 1.0]);
    let s3 = mirror([-0.75, 1.25, 0.0]);
    let a1 = mirror([-1.25, 0.75, -2.0]);
    let a2 = mirror([-1.25, 0.75, 2.0]);
    ManifoldSpec {
        schema: SCHEMA_VERSION,
        name: "figure-three-double".into(),
        dimension: 2,
        generators: vec![
            product(vec![s1.clone(), s2.clone()]),
            product(vec![s1.clone(), s3]),
            product(vec![a1.clone(), a2.clone()]),
            product(vec![a1.clone(), s1.clone(), a1.clone(), s1]),
            product(vec![a2.clone(), s2.clone(), a2.clone(), s2]),
        ],
        reflections: vec![a1, a2],
        cusps: vec![vec![3.0, 3.0, 0.0], vec![8.0, 0.0, 8.0]],
        options: RunOptions { word_bound: 6, height_bound: 160.0, length_bound: 6.0, ..RunOptions::default() },
    }
}

pub fn all() -> Vec<ManifoldSpec> {
    vec![thrice_punctured_sphere(), once_punctured_torus(), figure_eight(), figure_three_double()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::validate_reflection;

    #[test]
    fn fixtures_are_valid_groups() {
        for f in all() {
            let g = f.group().unwrap_or_else(|e| panic!("{}: {e}", f.name));
            for t in &g.reflections {
                assert!(validate_reflection(t, &g, 4).unwrap().certified, "{}", f.name);
            }
        }
    }

    #[test]
    fn shipped_json_matches_builders() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        for f in all() {
            let text = std::fs::read_to_string(dir.join(format!("{}.json", f.name))).unwrap();
            assert_eq!(ManifoldSpec::from_json(&text).unwrap(), f);
        }
    }
}
