//! JSON description of a manifold: group generators, reflections, cusp
//! decorations and run options.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{validate_group, GroupSpec};
use crate::minkowski::{psl2_to_lorentz, reflection_in_hyperplane, Isometry, MVector, Psl2};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("unsupported dimension n = {0}")]
    Dimension(usize),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

/// A Lorentz matrix given directly, as a PSL(2) matrix, as the reflection in
/// a hyperplane with given normal, or as a product of such.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<f64>>),
    Psl2 { psl2: Psl2 },
    Mirror { mirror: Vec<f64> },
    Product { product: Vec<MatrixSpec> },
}

impl MatrixSpec {
    pub fn resolve(&self, n: usize) -> Result<Isometry, String> {
        let m = match self {
            MatrixSpec::Rows(r) => Isometry::from_rows(r).map_err(|e| e.to_string())?,
            MatrixSpec::Psl2 { psl2 } => psl2_to_lorentz(psl2).map_err(|e| e.to_string())?,
            MatrixSpec::Mirror { mirror } => {
                reflection_in_hyperplane(&MVector(mirror.clone())).map_err(|e| e.to_string())?
            }
            MatrixSpec::Product { product } => {
                let mut acc = Isometry::identity(n);
                for f in product {
                    acc = acc.compose(&f.resolve(n)?);
                }
                acc
            }
        };
        if m.n != n {
            return Err(format!("matrix acts on R^{},1 but the manifold has dimension {n}", m.n));
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ep,
    Cutlocus,
    #[default]
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub algorithm: Algorithm,
    pub word_bound: usize,
    pub height_bound: f64,
    pub length_bound: f64,
    pub margin: f64,
    pub tol: f64,
    pub exact: bool,
    /// Word length used to certify that each reflection normalises Γ.
    pub reflection_word_bound: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            algorithm: Algorithm::Both,
            word_bound: 6,
            height_bound: 40.0,
            length_bound: 3.0,
            margin: 1.0,
            tol: 1e-9,
            exact: false,
            reflection_word_bound: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub schema: u32,
    pub name: String,
    pub dimension: usize,
    pub generators: Vec<MatrixSpec>,
    #[serde(default)]
    pub reflections: Vec<MatrixSpec>,
    /// Future lightlike vectors, one decorated horoball per cusp.
    pub cusps: Vec<Vec<f64>>,
    #[serde(default)]
    pub options: RunOptions,
}

impl ManifoldSpec {
    /// Resolves all matrices and validates the resulting group.
    pub fn group(&self) -> Result<GroupSpec, SpecError> {
        let n = self.dimension;
        if !(2..=3).contains(&n) {
            return Err(SpecError::Dimension(n));
        }
        let resolve = |list: &[MatrixSpec], what: &str| -> Result<Vec<Isometry>, SpecError> {
            list.iter()
                .enumerate()
                .map(|(i, m)| m.resolve(n).map_err(|message| SpecError::Invalid { field: format!("{what}[{i}]"), message }))
                .collect()
        };
        let generators = resolve(&self.generators, "generators")?;
        let reflections = resolve(&self.reflections, "reflections")?;
        for (i, c) in self.cusps.iter().enumerate() {
            if c.len() != n + 1 {
                return Err(SpecError::Invalid {
                    field: format!("cusps[{i}]"),
                    message: format!("expected {} coordinates, got {}", n + 1, c.len()),
                });
            }
        }
        let g = GroupSpec { n, generators, reflections, cusps: self.cusps.iter().cloned().map(MVector).collect() };
        let report = validate_group(&g, self.options.tol.max(1e-9));
        if let Some(first) = report.failures.first() {
            let (field, message) = first.split_once(": ").unwrap_or(("group", first.as_str()));
            return Err(SpecError::Invalid { field: field.to_string(), message: message.to_string() });
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<ManifoldSpec, SpecError> {
        let spec: ManifoldSpec = serde_json::from_str(text).map_err(|e| SpecError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if spec.schema != SCHEMA_VERSION {
            return Err(SpecError::Schema(spec.schema));
        }
        if !(2..=3).contains(&spec.dimension) {
            return Err(SpecError::Dimension(spec.dimension));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises") + "\n"
    }
}

/// Reads and checks a manifold description.
pub fn load_spec(path: &Path) -> Result<ManifoldSpec, SpecError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    let spec = ManifoldSpec::from_json(&text)?;
    spec.group()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
  "schema": 1,
  "name": "test",
  "dimension": 2,
  "generators": [{"psl2": {"real": [[1, 2], [0, 1]]}}, [[1,0,0],[0,1,0],[0,0,1]]],
  "reflections": [{"mirror": [0, 0, 1]}],
  "cusps": [[2, 2, 0]]
}"#;

    #[test]
    fn parses_and_resolves() {
        let s = ManifoldSpec::from_json(GOOD).unwrap();
        let g = s.group().unwrap();
        assert_eq!(g.generators.len(), 2);
        assert_eq!(g.reflections.len(), 1);
        assert_eq!(s.options, RunOptions::default());
        let again = ManifoldSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn reports_position_of_syntax_errors() {
        let bad = GOOD.replace("\"dimension\": 2,", "\"dimension\": 2");
        match ManifoldSpec::from_json(&bad) {
            Err(SpecError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_dimension_and_reflection() {
        let s = GOOD.replace("\"dimension\": 2", "\"dimension\": 4");
        assert!(matches!(ManifoldSpec::from_json(&s), Err(SpecError::Dimension(4))));
        let s = GOOD.replace("{\"mirror\": [0, 0, 1]}", "[[1,0,0],[0,1,0],[0,0,2]]");
        match ManifoldSpec::from_json(&s).unwrap().group() {
            Err(SpecError::Invalid { field, .. }) => assert_eq!(field, "reflections[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
