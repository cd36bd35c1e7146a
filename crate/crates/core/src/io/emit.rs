//! JSON and SVG output.
//!
//! JSON documents are written with sorted keys and every float in
//! exponent form with 17 significant digits, so identical reports give
//! identical bytes and floats survive a round trip exactly.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::cutlocus::CrossReport;
use crate::doubling::{CellKind, MixedDecomposition};
use crate::ep_hull::Decomposition;
use crate::io::run::{Certificate, RunReport};
use crate::io::spec::RunOptions;
use crate::minkowski::MVector;

pub const OUTPUT_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("svg output needs dimension 2, got {0}")]
    SvgDimension(usize),
    #[error("report has no decomposition to draw")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOut {
    pub kind: CellKind,
    /// Klein coordinates of the ideal vertices.
    pub vertices: Vec<Vec<f64>>,
    pub cusps: Vec<usize>,
    /// Facets as lists of vertex indices. A facet of a truncated cell that
    /// runs into the hyperideal vertex lists only its ideal vertices.
    pub facets: Vec<Vec<usize>>,
    /// Projective coordinates, unit length.
    pub hyperideal_vertex: Option<Vec<f64>>,
    /// Klein coordinates of the vertices of the external face.
    pub external_face: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingOut {
    pub cell_a: usize,
    pub facet_a: usize,
    pub cell_b: usize,
    pub facet_b: usize,
    /// Row-major.
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionOut {
    pub cells: Vec<CellOut>,
    pub pairings: Vec<PairingOut>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutLocusOut {
    pub length_bound: f64,
    pub path_lengths: Vec<f64>,
    /// Cell orbits by dimension, starting at 0.
    pub cells_by_dim: Vec<usize>,
    pub incidences: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOut {
    pub schema: u32,
    pub name: String,
    pub dimension: usize,
    pub options: RunOptions,
    /// Cusp representatives after symmetrization.
    pub cusps: Vec<Vec<f64>>,
    pub ep: Option<DecompositionOut>,
    pub quotient: Option<DecompositionOut>,
    pub cut_locus: Option<CutLocusOut>,
    pub dual: Option<DecompositionOut>,
    pub cross_validation: Option<CrossReport>,
    pub certificates: Vec<Certificate>,
    pub passed: bool,
}

pub fn decomposition_out(d: &Decomposition) -> DecompositionOut {
    DecompositionOut {
        cells: d
            .cells
            .iter()
            .map(|c| CellOut {
                kind: CellKind::Ideal,
                vertices: c.klein.clone(),
                cusps: c.vertices.iter().map(|v| v.cusp).collect(),
                facets: c.facets.clone(),
                hyperideal_vertex: None,
                external_face: None,
            })
            .collect(),
        pairings: d
            .pairings
            .iter()
            .map(|p| PairingOut {
                cell_a: p.cell_a,
                facet_a: p.facet_a,
                cell_b: p.cell_b,
                facet_b: p.facet_b,
                matrix: p.isometry.rows(),
            })
            .collect(),
    }
}

pub fn quotient_out(q: &MixedDecomposition) -> DecompositionOut {
    DecompositionOut {
        cells: q
            .cells
            .iter()
            .map(|c| CellOut {
                kind: c.kind,
                vertices: c.ideal_vertices.iter().map(|v| v.point.klein()).collect(),
                cusps: c.ideal_vertices.iter().map(|v| v.cusp).collect(),
                facets: c.internal_facets.iter().map(|f| f.vertices.clone()).collect(),
                hyperideal_vertex: c.hyperideal_vertex.as_ref().map(|h| h.coords.clone()),
                external_face: c.external_face.as_ref().map(|e| e.vertices.clone()),
            })
            .collect(),
        pairings: q
            .pairings
            .iter()
            .map(|p| PairingOut {
                cell_a: p.cell_a,
                facet_a: p.facet_a,
                cell_b: p.cell_b,
                facet_b: p.facet_b,
                matrix: p.isometry.rows(),
            })
            .collect(),
    }
}

pub fn report_out(r: &RunReport) -> ReportOut {
    ReportOut {
        schema: OUTPUT_SCHEMA,
        name: r.name.clone(),
        dimension: r.n,
        options: r.options.clone(),
        cusps: r.group.cusps.iter().map(|p| p.0.clone()).collect(),
        ep: r.ep.as_ref().map(decomposition_out),
        quotient: r.quotient.as_ref().map(quotient_out),
        cut_locus: r.cut_locus.as_ref().map(|cl| CutLocusOut {
            length_bound: cl.options.length_bound,
            path_lengths: cl.paths.iter().map(|p| p.length).collect(),
            cells_by_dim: (0..cl.complex.n).map(|d| cl.complex.count(d)).collect(),
            incidences: cl.complex.incidences.clone(),
        }),
        dual: r.dual.as_ref().map(|d| decomposition_out(&d.decomposition)),
        cross_validation: r.cross.clone(),
        certificates: r.certificates.clone(),
        passed: r.passed(),
    }
}

/// Exponent form with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent + 1);
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => out.push_str(&format_float(x)),
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(x, indent, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad);
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn to_json_string<T: Serialize>(doc: &T) -> String {
    let v = serde_json::to_value(doc).expect("report serialises");
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

pub fn to_json(r: &RunReport) -> String {
    to_json_string(&report_out(r))
}

const SIZE: f64 = 600.0;
const RADIUS: f64 = 280.0;

fn screen(p: &[f64]) -> (f64, f64) {
    (SIZE / 2.0 + RADIUS * p[0], SIZE / 2.0 - RADIUS * p[1])
}

fn segment_key(a: &[f64], b: &[f64]) -> [i64; 4] {
    let q = |x: f64| (x * 1e9).round() as i64;
    let (ka, kb) = ([q(a[0]), q(a[1])], [q(b[0]), q(b[1])]);
    let (lo, hi) = if ka <= kb { (ka, kb) } else { (kb, ka) };
    [lo[0], lo[1], hi[0], hi[1]]
}

/// Segments of the drawing: cell edges, then wall chords, then external
/// faces. Edges shared by two drawn cells appear once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Drawing {
    pub edges: Vec<[Vec<f64>; 2]>,
    pub walls: Vec<[Vec<f64>; 2]>,
    pub external: Vec<[Vec<f64>; 2]>,
}

/// Chord of the unit disk cut out by the line `<(1,x,y), u> = 0`.
fn wall_chord(u: &MVector) -> Option<[Vec<f64>; 2]> {
    let (a, b, c) = (u.0[1], u.0[2], u.0[0]);
    let nn = a * a + b * b;
    let d2 = c * c / nn;
    if d2 >= 1.0 {
        return None;
    }
    let foot = [a * c / nn, b * c / nn];
    let h = ((1.0 - d2) / nn).sqrt();
    Some([vec![foot[0] - b * h, foot[1] + a * h], vec![foot[0] + b * h, foot[1] - a * h]])
}

pub fn drawing(r: &RunReport) -> Result<Drawing, EmitError> {
    if r.n != 2 {
        return Err(EmitError::SvgDimension(r.n));
    }
    let mut d = Drawing::default();
    let mut seen = std::collections::HashSet::new();
    let mut push = |list: &mut Vec<[Vec<f64>; 2]>, a: Vec<f64>, b: Vec<f64>| {
        if seen.insert(segment_key(&a, &b)) {
            list.push([a, b]);
        }
    };
    if let Some(q) = &r.quotient {
        for c in &q.cells {
            let verts: Vec<Vec<f64>> = c.ideal_vertices.iter().map(|v| v.point.klein()).collect();
            for f in &c.internal_facets {
                if f.vertices.len() == 2 {
                    push(&mut d.edges, verts[f.vertices[0]].clone(), verts[f.vertices[1]].clone());
                } else if let (Some(ext), Some(&i)) = (&c.external_face, f.vertices.first()) {
                    // the facet ends on the external face
                    let end = ext
                        .vertices
                        .iter()
                        .min_by(|a, b| {
                            let s = |p: &Vec<f64>| MVector(vec![1.0, p[0], p[1]]).lorentz(&f.normal).abs();
                            s(a).total_cmp(&s(b))
                        })
                        .cloned();
                    if let Some(e) = end {
                        push(&mut d.edges, verts[i].clone(), e);
                    }
                }
            }
            if let Some(ext) = &c.external_face {
                if let Some(ch) = wall_chord(&ext.normal) {
                    let [a, b] = ch;
                    push(&mut d.walls, a, b);
                }
                if ext.vertices.len() == 2 {
                    push(&mut d.external, ext.vertices[0].clone(), ext.vertices[1].clone());
                }
            }
        }
        return Ok(d);
    }
    let dec = r.ep.as_ref().or(r.dual.as_ref().map(|x| &x.decomposition)).ok_or(EmitError::Empty)?;
    for c in &dec.cells {
        for f in &c.facets {
            push(&mut d.edges, c.klein[f[0]].clone(), c.klein[f[1]].clone());
        }
    }
    Ok(d)
}

pub fn to_svg(r: &RunReport) -> Result<String, EmitError> {
    let d = drawing(r)?;
    let mut s = String::new();
    let c = SIZE / 2.0;
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">
<style>.disk {{ fill: none; stroke: #444; stroke-width: 1 }} .edge {{ stroke: #1f4e9c; stroke-width: 1.5 }} .wall {{ stroke: #c0392b; stroke-width: 1; stroke-dasharray: 4 3 }} .external {{ stroke: #c0392b; stroke-width: 3 }}</style>
<title>{}</title>
<circle class="disk" cx="{c}" cy="{c}" r="{RADIUS}"/>"#,
        r.name
    );
    for (class, list) in [("edge", &d.edges), ("wall", &d.walls), ("external", &d.external)] {
        for [a, b] in list {
            let ((x1, y1), (x2, y2)) = (screen(a), screen(b));
            let _ = writeln!(s, r#"<line class="{class}" x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}"/>"#);
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
