//! Manifolds with totally geodesic boundary, handled through their double.
//!
//! The double is described by a torsion-free group Γ together with reflections
//! normalising Γ. This module makes the decorations mirror symmetric, checks
//! that the hull inherits the symmetry and cuts the decomposition of the
//! double down to a decomposition of the manifold into ideal and truncated
//! cells.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decorations::horoball_distance;
use crate::ep_hull::{Decomposition, HullFace, IdealCell};
use crate::frames::{DecoratedVertex, Frames};
use crate::group::{elements, orbit, wall_normal, GroupSpec, OrbitPoint, Word};
use crate::minkowski::{CausalClass, Isometry, MVector};
use crate::{Error, Result};

const RAY_TOL: f64 = 1e-9;
const SCALE_TOL: f64 = 1e-8;
const ORTHO_TOL: f64 = 1e-8;

/// `τ p_cusp = eta p_image`, with `eta` in Γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspPairing {
    pub cusp: usize,
    pub image: usize,
    pub eta: Isometry,
}

fn same_ray(a: &MVector, b: &MVector) -> bool {
    let s = b.0[0] / a.0[0];
    s > 0.0 && a.scale(s).sub(b).euclid_norm() <= RAY_TOL * b.euclid_norm()
}

fn same_vector(a: &MVector, b: &MVector, tol: f64) -> bool {
    a.sub(b).euclid_norm() <= tol * b.euclid_norm()
}

/// First `(cusp, γ)` in shortlex order with `γ p_cusp` on the ray of `q`.
fn find_ray(cusps: &[MVector], q: &MVector, elems: &[(Word, Isometry)]) -> Option<(usize, Isometry)> {
    elems.iter().find_map(|(_, m)| {
        cusps.iter().enumerate().find_map(|(j, p)| same_ray(&m.apply(p), q).then(|| (j, m.clone())))
    })
}

/// How a reflection permutes the cusps, searching Γ up to `word_bound`.
pub fn cusp_pairings(g: &GroupSpec, tau: &Isometry, word_bound: usize) -> Result<Vec<CuspPairing>> {
    let elems = elements(g, word_bound);
    g.cusps
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let q = tau.apply(p);
            let (j, eta) = find_ray(&g.cusps, &q, &elems).ok_or_else(|| {
                Error::PairingImpossible(format!("the mirror image of cusp {i} is not in any cusp orbit"))
            })?;
            let img = eta.apply(&g.cusps[j]);
            if !same_vector(&img, &q, SCALE_TOL) {
                return Err(Error::ScaleConflict(format!(
                    "cusp {i} reflects to cusp {j} with scale ratio {}",
                    q.0[0] / img.0[0]
                )));
            }
            Ok(CuspPairing { cusp: i, image: j, eta })
        })
        .collect()
}

/// Mirror image of a decorated vertex, expressed in terms of its own cusp.
pub fn mirror_vertex(v: &DecoratedVertex, tau: &Isometry, pairings: &[CuspPairing]) -> DecoratedVertex {
    let pr = &pairings[v.cusp];
    DecoratedVertex {
        point: tau.apply(&v.point),
        cusp: pr.image,
        transform: tau.compose(&v.transform).compose(tau).compose(&pr.eta),
    }
}

/// Overwrites the reps reached from each unvisited cusp so that mirror
/// images are carried exactly.
fn propagate(g: &GroupSpec, elems: &[(Word, Isometry)], cusps: &mut [MVector]) -> Result<()> {
    let mut fixed = vec![false; cusps.len()];
    for start in 0..cusps.len() {
        if fixed[start] {
            continue;
        }
        fixed[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for tau in &g.reflections {
                let q = tau.apply(&cusps[i]);
                let (j, gamma) = find_ray(cusps, &q, elems).ok_or_else(|| {
                    Error::PairingImpossible(format!("the mirror image of cusp {i} is not in any cusp orbit"))
                })?;
                let target = if gamma.approx_eq(&Isometry::identity(g.n), 0.0) {
                    q
                } else {
                    gamma.inverse().apply(&q)
                };
                if !fixed[j] {
                    cusps[j] = target;
                    fixed[j] = true;
                    queue.push_back(j);
                } else if !same_vector(&cusps[j], &target, SCALE_TOL) {
                    return Err(Error::ScaleConflict(format!(
                        "cusp {i} reflects onto cusp {j} with scale ratio {}",
                        target.0[0] / cusps[j].0[0]
                    )));
                }
            }
        }
    }
    Ok(())
}

fn straddles(p: &MVector, u: &MVector) -> bool {
    p.lorentz(u).abs() <= 1e-9 * p.euclid_norm() * u.euclid_norm()
}

/// Smallest horoball distance and smallest horoball-to-wall distance over
/// the orbit within the bounds, with the pairs attaining them.
fn clearances(g: &GroupSpec, walls: &[MVector], word_bound: usize, height_bound: f64) -> Result<(f64, String, f64, String)> {
    let orb = orbit(g, word_bound, height_bound);
    if orb.points.is_empty() {
        return Err(Error::Input("no horoball lies below the height bound".into()));
    }
    let pts: &[OrbitPoint] = &orb.points;
    let mut dmin = (f64::INFINITY, String::new());
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let d = horoball_distance(&pts[a].point, &pts[b].point)?;
            if d < dmin.0 {
                dmin = (d, format!("horoballs {:?} and {:?}", pts[a].point.0, pts[b].point.0));
            }
        }
    }
    let mut wmin = (f64::INFINITY, String::new());
    for p in pts {
        for (k, u) in walls.iter().enumerate() {
            if straddles(&p.point, u) {
                continue;
            }
            let d = p.point.lorentz(u).abs().ln();
            if d < wmin.0 {
                wmin = (d, format!("horoball {:?} and wall {k}", p.point.0));
            }
        }
    }
    Ok((dmin.0, dmin.1, wmin.0, wmin.1))
}

/// Rescales the cusp representatives so that mirror images are carried
/// exactly, horoballs are pairwise disjoint and every horoball keeps
/// distance `margin` from the walls it is not centred on.
pub fn symmetrize_decorations(g: &GroupSpec, margin: f64, word_bound: usize, height_bound: f64) -> Result<GroupSpec> {
    let elems = if g.reflections.is_empty() { Vec::new() } else { elements(g, word_bound) };
    let walls: Vec<MVector> = g.reflections.iter().map(wall_normal).collect::<Result<_>>()?;
    let mut cusps = g.cusps.clone();
    propagate(g, &elems, &mut cusps)?;

    let (d, _, w, _) = clearances(&g.with_cusps(cusps.clone()), &walls, word_bound, height_bound)?;
    let mut log_scale: f64 = 0.0;
    if d < 0.0 {
        log_scale = log_scale.max(-d / 2.0);
    }
    if w.is_finite() && w < margin {
        log_scale = log_scale.max(margin - w);
    }
    if log_scale > 0.0 {
        let s = log_scale.exp();
        cusps = cusps.iter().map(|p| p.scale(s)).collect();
        propagate(g, &elems, &mut cusps)?;
    }

    let out = g.with_cusps(cusps);
    let (d, dpair, w, wpair) = clearances(&out, &walls, word_bound, height_bound)?;
    if d < -1e-12 {
        return Err(Error::Input(format!("horoballs overlap (distance {d}): {dpair}")));
    }
    if w.is_finite() && w < margin - 1e-12 {
        return Err(Error::Input(format!("wall clearance {w} below margin {margin}: {wpair}")));
    }
    Ok(out)
}

/// Direction `p - τp` for a fixed reference lightlike `p` moved by `τ`.
pub fn reflection_direction(tau: &Isometry) -> Result<MVector> {
    let d = tau.n + 1;
    for k in 1..d {
        for s in [1.0, -1.0] {
            let mut p = vec![0.0; d];
            p[0] = 1.0;
            p[k] = s;
            let p = MVector(p);
            let v = p.sub(&tau.apply(&p));
            if v.euclid_norm() > 1e-6 {
                return Ok(v);
            }
        }
    }
    Err(Error::Degenerate("reflection fixes every reference point".into()))
}

/// Whether `p1 - p2` is parallel to the direction of `τ`.
pub fn symmetry_direction_check(p1: &MVector, p2: &MVector, tau: &Isometry) -> Result<bool> {
    let diff = p1.sub(p2);
    let dn = diff.euclid_norm();
    if dn <= 1e-12 * p1.euclid_norm().max(1.0) {
        return Err(Error::Degenerate("point is fixed by the reflection".into()));
    }
    let v = reflection_direction(tau)?;
    let v = v.scale(1.0 / v.euclid_norm());
    let along: f64 = diff.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    let reject = diff.sub(&v.scale(along)).euclid_norm();
    Ok(reject < 1e-9 * dn)
}

/// Faces whose mirror image lies below the cut but is not a face.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub checked: usize,
    pub unmatched: Vec<usize>,
}

impl SymmetryReport {
    pub fn symmetric(&self) -> bool {
        self.unmatched.is_empty()
    }
}

fn match_sets(a: &[MVector], b: &[MVector]) -> bool {
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| same_vector(p, q, 1e-8)))
}

/// Checks that `τ` maps the certified faces below `cut` onto themselves.
pub fn check_hull_symmetry(faces: &[HullFace], points: &[OrbitPoint], tau: &Isometry, cut: f64) -> SymmetryReport {
    let sets: Vec<Vec<MVector>> =
        faces.iter().map(|f| f.vertices.iter().map(|&v| points[v].point.clone()).collect()).collect();
    let mut report = SymmetryReport::default();
    for (i, s) in sets.iter().enumerate() {
        let img: Vec<MVector> = s.iter().map(|p| tau.apply(p)).collect();
        if img.iter().any(|p| p.0[0] > cut * (1.0 - 1e-9)) {
            continue;
        }
        report.checked += 1;
        if !sets.iter().any(|t| match_sets(&img, t)) {
            report.unmatched.push(i);
        }
    }
    report
}

/// A point of projective space, stored as a unit vector whose first
/// non-zero coordinate is positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    pub coords: Vec<f64>,
}

impl ProjectivePoint {
    /// Affine Klein chart coordinates, or `None` for a point at infinity.
    pub fn klein(&self) -> Option<Vec<f64>> {
        let c0 = self.coords[0];
        (c0.abs() > 1e-12).then(|| self.coords[1..].iter().map(|v| v / c0).collect())
    }
}

/// The point `[u]` whose polar hyperplane is the wall `<x,u> = 0`.
pub fn polar_vertex(u: &MVector) -> Result<ProjectivePoint> {
    if u.classify(1e-12) != CausalClass::Spacelike {
        return Err(Error::NotSpacelike(u.lorentz(u)));
    }
    let nrm = u.euclid_norm();
    let sign = u.0.iter().find(|v| v.abs() > 1e-12 * nrm).map_or(1.0, |v| v.signum());
    Ok(ProjectivePoint { coords: u.0.iter().map(|v| sign * v / nrm).collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Ideal,
    Truncated,
}

/// A facet of a quotient cell other than its external face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InternalFacet {
    /// Indices into the cell's ideal vertices.
    pub vertices: Vec<usize>,
    /// Whether the facet was cut by the wall, i.e. passes through the
    /// hyperideal vertex.
    pub through_hyperideal: bool,
    /// Outward unit normal.
    pub normal: MVector,
}

/// Cross-section of a cell by the wall it meets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalFace {
    /// Index of the reflection whose wall orbit this is.
    pub reflection: usize,
    /// The reflection of the double fixing the cell.
    pub isometry: Isometry,
    /// Unit normal pointing out of the cell.
    pub normal: MVector,
    /// Klein coordinates of the vertices of the cross-section.
    pub vertices: Vec<Vec<f64>>,
}

/// A cell of the manifold: ideal, or truncated at one hyperideal vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedCell {
    pub kind: CellKind,
    /// Cell of the double it comes from.
    pub source: usize,
    pub ideal_vertices: Vec<DecoratedVertex>,
    pub internal_facets: Vec<InternalFacet>,
    pub hyperideal_vertex: Option<ProjectivePoint>,
    pub external_face: Option<ExternalFace>,
}

impl MixedCell {
    /// Interior angles between the external face and the facets cut by it.
    pub fn external_angles(&self) -> Vec<f64> {
        let Some(ext) = &self.external_face else { return Vec::new() };
        self.internal_facets
            .iter()
            .filter(|f| f.through_hyperideal)
            .map(|f| (-f.normal.lorentz(&ext.normal)).clamp(-1.0, 1.0).acos())
            .collect()
    }

    /// Ideal vertices of the cell glued to its mirror image across the
    /// external face.
    pub fn doubled_vertices(&self) -> Vec<MVector> {
        let mut out: Vec<MVector> = self.ideal_vertices.iter().map(|v| v.point.clone()).collect();
        if let Some(ext) = &self.external_face {
            out.extend(self.ideal_vertices.iter().map(|v| ext.isometry.apply(&v.point)));
        }
        out
    }
}

/// Gluing of two internal facets by an element of Γ extended by the
/// reflections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientPairing {
    pub cell_a: usize,
    pub facet_a: usize,
    pub cell_b: usize,
    pub facet_b: usize,
    pub isometry: Isometry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedDecomposition {
    pub n: usize,
    pub cells: Vec<MixedCell>,
    pub pairings: Vec<QuotientPairing>,
    /// `(cell, reflection)` for every external face.
    pub walls: Vec<(usize, usize)>,
}

/// How a cell of the double relates to the quotient.
#[derive(Clone, Debug)]
enum Role {
    /// Kept as quotient cell `q`.
    Kept(usize),
    /// Mapped onto a kept cell by `h`.
    Mirrored { q: usize, h: Isometry },
    /// Cut by its own reflection `sigma`; the half with `<x,u> < 0` is
    /// quotient cell `q`.
    Cut { q: usize, sigma: Isometry, u: MVector },
}

/// Mirror relation of a cell found through one reflection.
enum Relation {
    SelfMap(usize, Isometry),
    Partner(usize, Isometry),
}

/// Normals of wall lifts `γ u` for words up to `word_bound`, oriented so the
/// base cusp lies on the negative side.
fn wall_lifts(g: &GroupSpec, word_bound: usize) -> Result<Vec<MVector>> {
    let base = &g.cusps[0];
    let normals: Vec<MVector> = g.reflections.iter().map(wall_normal).collect::<Result<_>>()?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (_, m) in elements(g, word_bound) {
        if m.max_abs() > 1e6 {
            continue;
        }
        for u in &normals {
            let mut w = m.apply(u);
            if w.lorentz(base) > 0.0 {
                w = w.scale(-1.0);
            }
            let key: Vec<i64> = w.0.iter().map(|v| (v * 1e6).round() as i64).collect();
            if seen.insert(key) {
                out.push(w);
            }
        }
    }
    Ok(out)
}

/// Whether `x` is separated from the base cusp by an even number of walls.
fn on_base_side(walls: &[MVector], x: &MVector) -> bool {
    walls.iter().filter(|w| x.lorentz(w) > 0.0).count() % 2 == 0
}

fn centroid(points: &[&MVector]) -> MVector {
    let mut s = MVector::zeros(points[0].dim());
    for p in points {
        s = s.add(&p.scale(1.0 / p.0[0]));
    }
    s.scale(1.0 / points.len() as f64)
}

fn relations(
    cell: &IdealCell,
    own: &Isometry,
    d: &Decomposition,
    frames: &Frames,
    taus: &[Isometry],
    pairings: &[Vec<CuspPairing>],
) -> Result<Vec<Relation>> {
    let key = cell.key.clone().unwrap_or_default();
    let mut out = Vec::new();
    for (k, tau) in taus.iter().enumerate() {
        let img: Vec<DecoratedVertex> = cell.vertices.iter().map(|v| mirror_vertex(v, tau, &pairings[k])).collect();
        let c = frames.canonical(&img)?;
        let to_img = c.map.compose(tau);
        if c.key == key {
            out.push(Relation::SelfMap(k, own.inverse().compose(&to_img)));
            continue;
        }
        let j = d.cells.iter().position(|o| o.key.as_ref() == Some(&c.key)).ok_or_else(|| {
            Error::Degenerate(format!("the mirror image of a cell under reflection {k} is not a cell"))
        })?;
        let other = frames.canonical(&d.cells[j].vertices)?;
        out.push(Relation::Partner(j, other.map.inverse().compose(&to_img)));
    }
    Ok(out)
}

fn sets_match(a: &[MVector], b: &[MVector]) -> bool {
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| same_ray(p, q)))
}

/// Builds the truncated half of a cell fixed by the reflection `sigma`.
fn truncate(
    ci: usize,
    cell: &IdealCell,
    reflection: usize,
    sigma: &Isometry,
    walls: &[MVector],
) -> Result<(MixedCell, MVector)> {
    let pts: Vec<MVector> = cell.vertices.iter().map(|v| v.point.clone()).collect();
    let img: Vec<MVector> = pts.iter().map(|p| sigma.apply(p)).collect();
    if !sets_match(&img, &pts) {
        return Err(Error::Degenerate(format!("cell {ci} is not fixed by its wall reflection")));
    }
    let mut u = wall_normal(sigma)?;
    let side: Vec<f64> = pts.iter().map(|p| p.lorentz(&u) / p.euclid_norm()).collect();
    if side.iter().any(|s| s.abs() < 1e-9) {
        return Err(Error::Degenerate(format!("cell {ci} has an ideal vertex on a wall")));
    }
    let pos: Vec<&MVector> = pts.iter().zip(&side).filter(|(_, s)| **s > 0.0).map(|(p, _)| p).collect();
    if on_base_side(walls, &centroid(&pos)) {
        u = u.scale(-1.0);
    }
    let kept: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].lorentz(&u) < 0.0).collect();
    let local = |i: usize| kept.iter().position(|&k| k == i);

    let n = cell.dim();
    let mut internal = Vec::new();
    for (f, verts) in cell.facets.iter().enumerate() {
        let ks: Vec<usize> = verts.iter().filter_map(|&i| local(i)).collect();
        if ks.is_empty() {
            continue;
        }
        let normal = cell.facet_normal(f)?;
        let crossing = ks.len() < verts.len();
        if crossing {
            let dot = normal.lorentz(&u);
            if dot.abs() > ORTHO_TOL {
                return Err(Error::NotOrthogonal { cell: ci, facet: f, dot });
            }
        }
        internal.push(InternalFacet { vertices: ks, through_hyperideal: crossing, normal });
    }

    let mut section = Vec::new();
    for &a in &kept {
        for b in (0..pts.len()).filter(|b| !kept.contains(b)) {
            let shared = cell.facets.iter().filter(|f| f.contains(&a) && f.contains(&b)).count();
            if shared + 1 >= n {
                let (ua, ub) = (pts[a].lorentz(&u), pts[b].lorentz(&u));
                section.push(pts[a].scale(ub).sub(&pts[b].scale(ua)).klein());
            }
        }
    }
    let mixed = MixedCell {
        kind: CellKind::Truncated,
        source: ci,
        ideal_vertices: kept.iter().map(|&i| cell.vertices[i].clone()).collect(),
        internal_facets: internal,
        hyperideal_vertex: Some(polar_vertex(&u)?),
        external_face: Some(ExternalFace { reflection, isometry: sigma.clone(), normal: u.clone(), vertices: section }),
    };
    Ok((mixed, u))
}

fn ideal_cell(ci: usize, cell: &IdealCell) -> Result<MixedCell> {
    let internal = (0..cell.facets.len())
        .map(|f| {
            Ok(InternalFacet { vertices: cell.facets[f].clone(), through_hyperideal: false, normal: cell.facet_normal(f)? })
        })
        .collect::<Result<_>>()?;
    Ok(MixedCell {
        kind: CellKind::Ideal,
        source: ci,
        ideal_vertices: cell.vertices.clone(),
        internal_facets: internal,
        hyperideal_vertex: None,
        external_face: None,
    })
}

/// Quotient cell and the isometry carrying `x`, a point of cell `c`, into it.
fn locate(roles: &[Role], c: usize, x: &MVector) -> (usize, Isometry, MVector) {
    match &roles[c] {
        Role::Kept(q) => (*q, Isometry::identity(x.dim()), x.clone()),
        Role::Mirrored { q, h } => (*q, h.clone(), h.apply(x)),
        Role::Cut { q, sigma, u } => {
            if x.lorentz(u) <= 0.0 {
                (*q, Isometry::identity(x.dim()), x.clone())
            } else {
                (*q, sigma.clone(), sigma.apply(x))
            }
        }
    }
}

/// Internal facet of `cell` whose hyperplane contains `x`.
fn facet_containing(cell: &MixedCell, x: &MVector) -> Result<usize> {
    let y = x.scale(1.0 / x.0[0]);
    let (f, v) = cell
        .internal_facets
        .iter()
        .enumerate()
        .map(|(i, f)| (i, f.normal.lorentz(&y).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Degenerate("cell without facets".into()))?;
    if v > 1e-6 {
        return Err(Error::Degenerate(format!("point is off every facet (residual {v})")));
    }
    Ok(f)
}

/// Cuts the decomposition of the double down to the manifold: cells meeting
/// a wall are halved, the other cells are kept once per mirror pair.
pub fn quotient_classify(d: &Decomposition, g: &GroupSpec, frames: &Frames, word_bound: usize) -> Result<MixedDecomposition> {
    let taus = &g.reflections;
    let pairings: Vec<Vec<CuspPairing>> =
        taus.iter().map(|t| cusp_pairings(g, t, word_bound)).collect::<Result<_>>()?;
    let walls = if taus.is_empty() { Vec::new() } else { wall_lifts(g, word_bound)? };

    let rel: Vec<Vec<Relation>> = d
        .cells
        .par_iter()
        .map(|c| {
            let own = frames.canonical(&c.vertices)?.map;
            relations(c, &own, d, frames, taus, &pairings)
        })
        .collect::<Result<_>>()?;

    let mut roles: Vec<Option<Role>> = vec![None; d.cells.len()];
    let mut cells = Vec::new();
    let mut wall_list = Vec::new();
    for (ci, cell) in d.cells.iter().enumerate() {
        let mut selfs: Vec<(usize, Isometry)> = Vec::new();
        for r in &rel[ci] {
            if let Relation::SelfMap(k, s) = r {
                if !selfs.iter().any(|(_, t)| t.approx_eq(s, 1e-7)) {
                    selfs.push((*k, s.clone()));
                }
            }
        }
        if selfs.len() > 1 {
            return Err(Error::MultipleWalls(ci));
        }
        if let Some((k, sigma)) = selfs.pop() {
            let (mixed, u) = truncate(ci, cell, k, &sigma, &walls)?;
            roles[ci] = Some(Role::Cut { q: cells.len(), sigma, u });
            wall_list.push((cells.len(), k));
            cells.push(mixed);
        }
    }
    for ci in 0..d.cells.len() {
        if roles[ci].is_some() {
            continue;
        }
        let partner = rel[ci].iter().find_map(|r| match r {
            Relation::Partner(j, h) => Some((*j, h.clone())),
            Relation::SelfMap(..) => None,
        });
        match partner {
            None => {
                roles[ci] = Some(Role::Kept(cells.len()));
                cells.push(ideal_cell(ci, &d.cells[ci])?);
            }
            Some((j, h)) => {
                if roles[j].is_some() {
                    return Err(Error::Degenerate(format!("cells {ci} and {j} are not mirror pairs")));
                }
                let keep_self = on_base_side(&walls, &d.cells[ci].sample_point());
                let (keep, drop, h) = if keep_self { (ci, j, h.inverse()) } else { (j, ci, h) };
                let q = cells.len();
                cells.push(ideal_cell(keep, &d.cells[keep])?);
                roles[keep] = Some(Role::Kept(q));
                roles[drop] = Some(Role::Mirrored { q, h });
            }
        }
    }
    let roles: Vec<Role> = roles.into_iter().map(|r| r.expect("every cell was assigned")).collect();

    let mut out: Vec<QuotientPairing> = Vec::new();
    let mut seen = HashSet::new();
    let directed = d.pairings.iter().flat_map(|p| {
        [
            (p.cell_a, p.facet_a, p.cell_b, p.isometry.clone()),
            (p.cell_b, p.facet_b, p.cell_a, p.isometry.inverse()),
        ]
    });
    for (a, fa, b, iso) in directed {
        let cell = &d.cells[a];
        let verts: Vec<&MVector> = cell.facets[fa].iter().map(|&i| &cell.vertices[i].point).collect();
        let mut x = centroid(&verts);
        if let Role::Cut { u, .. } = &roles[a] {
            let kept: Vec<&MVector> = verts.iter().copied().filter(|p| p.lorentz(u) < 0.0).collect();
            if kept.is_empty() {
                continue;
            }
            if kept.len() < verts.len() {
                x = x.add(&centroid(&kept)).scale(0.5);
            }
        }
        let (qa, ma, xa) = locate(&roles, a, &x);
        let (qb, mb, xb) = locate(&roles, b, &iso.apply(&x));
        let facet_a = facet_containing(&cells[qa], &xa)?;
        let facet_b = facet_containing(&cells[qb], &xb)?;
        let (lo, hi) = ((qa, facet_a), (qb, facet_b));
        if !seen.insert((lo.min(hi), lo.max(hi))) {
            continue;
        }
        let isometry = mb.compose(&iso).compose(&ma.inverse());
        out.push(QuotientPairing { cell_a: qa, facet_a, cell_b: qb, facet_b, isometry });
    }
    for (qi, c) in cells.iter().enumerate() {
        for f in 0..c.internal_facets.len() {
            if !seen.iter().any(|(x, y)| *x == (qi, f) || *y == (qi, f)) {
                return Err(Error::UnpairedFacet { cell: qi, facet: f });
            }
        }
    }
    Ok(MixedDecomposition { n: d.n, cells, pairings: out, walls: wall_list })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ep_hull::ep_decomposition;
    use crate::fixtures;
    use crate::hull::HullOptions;
    use crate::minkowski::reflection_in_hyperplane;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coord_flip() -> Isometry {
        Isometry::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap()
    }

    fn figure_three() -> (GroupSpec, usize, f64) {
        let f = fixtures::figure_three_double();
        let g = f.group().unwrap();
        let (l, h) = (f.options.word_bound, f.options.height_bound);
        (symmetrize_decorations(&g, 1.0, l, h).unwrap(), l, h)
    }

    #[test]
    fn coordinate_reflection_direction() {
        let p1 = MVector(vec![1.0, 1.0, 0.0]);
        let p2 = coord_flip().apply(&p1);
        assert_eq!(p2.0, vec![1.0, -1.0, 0.0]);
        assert!(symmetry_direction_check(&p1, &p2, &coord_flip()).unwrap());
        let on_wall = MVector(vec![1.0, 0.0, 1.0]);
        assert!(symmetry_direction_check(&on_wall, &on_wall, &coord_flip()).is_err());
    }

    #[test]
    fn random_conjugated_reflections_move_points_in_parallel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..=3);
            let mut u: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            u[1] += 3.0;
            let tau = reflection_in_hyperplane(&MVector(u)).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut p = vec![r];
            p.extend(v);
            let p1 = MVector(p);
            let p2 = tau.apply(&p1);
            assert!(symmetry_direction_check(&p1, &p2, &tau).unwrap());
        }
    }

    #[test]
    fn non_mirror_pair_is_not_parallel() {
        let p1 = MVector(vec![1.0, 1.0, 0.0]);
        let p2 = MVector(vec![1.0, 0.0, 1.0]);
        assert!(!symmetry_direction_check(&p1, &p2, &coord_flip()).unwrap());
    }

    #[test]
    fn polar_of_wall_off_the_origin() {
        let pv = polar_vertex(&MVector(vec![1.0, 2.0, 0.0])).unwrap();
        let k = pv.klein().unwrap();
        assert!((k[0] - 2.0).abs() < 1e-15 && k[1].abs() < 1e-15);
        // Tangency points T from P = (2,0): |T| = 1 and T.(P - T) = 0.
        let (px, py) = (k[0], k[1]);
        let d2 = px * px + py * py;
        let h = (d2 - 1.0).sqrt();
        for s in [1.0, -1.0] {
            let t = [(px - s * py * h) / d2, (py + s * px * h) / d2];
            assert!((t[0] * t[0] + t[1] * t[1] - 1.0).abs() < 1e-12);
            assert!((t[0] - 0.5).abs() < 1e-12);
            let x = MVector(vec![1.0, t[0], t[1]]);
            assert!(x.lorentz(&MVector(pv.coords.clone())).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_of_wall_through_the_origin() {
        let pv = polar_vertex(&MVector(vec![0.0, 1.0, 0.0])).unwrap();
        assert_eq!(pv.coords, vec![0.0, 1.0, 0.0]);
        assert!(pv.klein().is_none());
        assert!(polar_vertex(&MVector(vec![1.0, 0.5, 0.0])).is_err());
    }

    proptest! {
        #[test]
        fn polar_vertex_is_projective(a in -1.0f64..1.0, b in 1.5f64..4.0, c in -1.0f64..1.0, l in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
            let u = MVector(vec![a, b, c]);
            let p = polar_vertex(&u).unwrap();
            let q = polar_vertex(&u.scale(l)).unwrap();
            for (x, y) in p.coords.iter().zip(&q.coords) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            if let Some(k) = p.klein() {
                prop_assert!(k.iter().map(|v| v * v).sum::<f64>() > 1.0);
            }
        }
    }

    #[test]
    fn symmetrized_partner_is_exact_mirror() {
        let (g, _, _) = figure_three();
        assert_eq!(g.reflections[0].apply(&g.cusps[0]).0, g.cusps[1].0);
        for tau in &g.reflections {
            let pr = cusp_pairings(&g, tau, 4).unwrap();
            assert_eq!(pr.iter().map(|p| p.image).collect::<Vec<_>>(), vec![1, 0]);
        }
    }

    #[test]
    fn missing_partner_cusp_is_an_error() {
        let f = fixtures::figure_three_double();
        let g = f.group().unwrap();
        let one = g.with_cusps(vec![g.cusps[0].clone()]);
        assert!(matches!(symmetrize_decorations(&one, 1.0, 4, 160.0), Err(Error::PairingImpossible(_))));
    }

    #[test]
    fn without_reflections_only_disjointness_is_enforced() {
        let f = fixtures::thrice_punctured_sphere();
        let g = f.group().unwrap();
        let small: Vec<MVector> = g.cusps.iter().map(|p| p.scale(0.25)).collect();
        let out = symmetrize_decorations(&g.with_cusps(small), 1.0, 4, 40.0).unwrap();
        let orb = orbit(&out, 4, 40.0);
        for a in 0..orb.points.len() {
            for b in a + 1..orb.points.len() {
                assert!(horoball_distance(&orb.points[a].point, &orb.points[b].point).unwrap() >= -1e-12);
            }
        }
        let untouched = symmetrize_decorations(&g, 1.0, 4, 40.0).unwrap();
        assert_eq!(untouched.cusps, g.cusps);
    }

    #[test]
    fn hull_of_the_double_is_mirror_symmetric() {
        assert!(check_hull_symmetry(&[], &[], &coord_flip(), 10.0).symmetric());
        let (g, l, h) = figure_three();
        let r = ep_decomposition(&g, l, h, HullOptions::default()).unwrap();
        let cert = &r.certificate;
        for tau in &g.reflections {
            let rep = check_hull_symmetry(&cert.faces, &cert.orbit.points, tau, cert.cut_height);
            assert!(rep.checked > 0);
            assert!(rep.symmetric(), "{rep:?}");
        }
        let tau = &g.reflections[0];
        let pts = &cert.orbit.points;
        let victim = (0..cert.faces.len())
            .find(|&i| {
                let img: Vec<MVector> = cert.faces[i].vertices.iter().map(|&v| tau.apply(&pts[v].point)).collect();
                img.iter().all(|p| p.0[0] < cert.cut_height)
                    && !match_sets(&img, &cert.faces[i].vertices.iter().map(|&v| pts[v].point.clone()).collect::<Vec<_>>())
            })
            .expect("a face with a distinct mirror below the cut");
        let img: Vec<MVector> = cert.faces[victim].vertices.iter().map(|&v| tau.apply(&pts[v].point)).collect();
        let mirror = (0..cert.faces.len())
            .find(|&j| match_sets(&img, &cert.faces[j].vertices.iter().map(|&v| pts[v].point.clone()).collect::<Vec<_>>()))
            .unwrap();
        let mut faces = cert.faces.clone();
        faces.remove(victim);
        let rep = check_hull_symmetry(&faces, pts, tau, cert.cut_height);
        let expected = if mirror > victim { mirror - 1 } else { mirror };
        assert_eq!(rep.unmatched, vec![expected]);
    }

    #[test]
    fn double_of_the_surface_cuts_into_truncated_triangles() {
        let (g, l, h) = figure_three();
        let r = ep_decomposition(&g, l, h, HullOptions::default()).unwrap();
        let m = quotient_classify(&r.decomposition, &g, &r.frames, 4).unwrap();
        assert_eq!(m.cells.len(), 2);
        assert_eq!(m.pairings.len(), 3);
        for c in &m.cells {
            assert_eq!(c.kind, CellKind::Truncated);
            assert_eq!(c.ideal_vertices.len(), 2);
            let ext = c.external_face.as_ref().unwrap();
            let angles = c.external_angles();
            assert_eq!(angles.len(), 2);
            for a in angles {
                assert!((a - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
            }
            let v = c.hyperideal_vertex.as_ref().unwrap();
            let k = v.klein().unwrap();
            assert!(k.iter().map(|x| x * x).sum::<f64>() > 1.0);
            let polar = MVector(v.coords.clone());
            for s in &ext.vertices {
                let mut x = vec![1.0];
                x.extend(s);
                assert!(MVector(x).lorentz(&polar).abs() < 1e-9);
            }
            let src: Vec<MVector> = r.decomposition.cells[c.source].vertices.iter().map(|v| v.point.clone()).collect();
            let doubled = c.doubled_vertices();
            assert_eq!(doubled.len(), src.len());
            for p in &doubled {
                assert!(src.iter().any(|q| p.sub(q).euclid_norm() <= 1e-8 * q.euclid_norm()));
            }
            let img: Vec<MVector> = src.iter().map(|p| ext.isometry.apply(p)).collect();
            assert!(sets_match(&img, &src));
        }
    }

    #[test]
    fn cells_away_from_walls_are_kept_once_per_mirror_pair() {
        let f = fixtures::thrice_punctured_sphere();
        let mut g = f.group().unwrap();
        g.reflections = vec![Isometry::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, -1.0]]).unwrap()];
        let r = ep_decomposition(&g, f.options.word_bound, f.options.height_bound, HullOptions::default()).unwrap();
        let m = quotient_classify(&r.decomposition, &g, &r.frames, 4).unwrap();
        assert_eq!(r.decomposition.cells.len(), 2);
        assert_eq!(m.cells.len(), 1);
        assert!(m.cells.iter().all(|c| c.kind == CellKind::Ideal));
        assert!(m.walls.is_empty());
    }
}
