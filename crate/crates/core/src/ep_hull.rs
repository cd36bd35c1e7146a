//! The light-cone convex hull of a cusp orbit and the ideal cell
//! decomposition obtained by projecting its lower faces.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{DecoratedVertex, Frames};
use crate::group::{orbit, GroupSpec, Orbit, OrbitPoint};
use crate::hull::{convex_hull, HullOptions};
use crate::linalg;
use crate::minkowski::{Isometry, MVector};

/// Solves `<p_i, w> = -1` for the vector `w` supporting the affine
/// hyperplane through the given points.
pub fn support_vector(points: &[MVector]) -> Result<MVector> {
    let Some(first) = points.first() else {
        return Err(Error::Degenerate("no points".into()));
    };
    let d = first.0.len();
    if points.len() < d {
        return Err(Error::Degenerate(format!("{} points cannot fix a hyperplane in R^{d}", points.len())));
    }
    let scale = points.iter().map(|p| p.euclid_norm()).fold(0.0, f64::max);
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.0.iter().enumerate().map(|(i, v)| if i == 0 { -v / scale } else { v / scale }).collect())
        .collect();
    let b = vec![-1.0 / scale; points.len()];
    let (w, rank) = linalg::lstsq(&rows, &b, 1e-10);
    if rank < d {
        return Err(Error::Degenerate("points are affinely dependent or on a hyperplane through 0".into()));
    }
    let w = MVector(w);
    for p in points {
        let r = p.lorentz(&w) + 1.0;
        if r.abs() > 1e-7 {
            return Err(Error::Degenerate(format!("points are not coplanar (residual {r:.3e})")));
        }
    }
    Ok(w)
}

/// A face of the light-cone hull with a future timelike support vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullFace {
    /// Indices into the orbit, in lexicographic Klein order.
    pub vertices: Vec<usize>,
    pub support: MVector,
    /// Codimension-one faces of the projected cell, as sorted orbit indices.
    pub facets: Vec<Vec<usize>>,
}

impl HullFace {
    pub fn max_height(&self, points: &[OrbitPoint]) -> f64 {
        self.vertices.iter().map(|&v| points[v].point.0[0]).fold(0.0, f64::max)
    }
}

fn klein_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Facets of the convex hull of Klein points, as local index sets.
pub(crate) fn klein_facets(klein: &[Vec<f64>], opts: HullOptions) -> Result<Vec<Vec<usize>>> {
    let faces = convex_hull(klein, opts)?;
    let mut out: Vec<Vec<usize>> = faces.into_iter().map(|f| f.vertices).collect();
    out.sort();
    Ok(out)
}

/// Faces of the convex hull of the orbit whose support vectors are future
/// timelike, i.e. the faces seen from the origin.
pub fn hull_faces(points: &[OrbitPoint], opts: HullOptions) -> Result<Vec<HullFace>> {
    let n = points.first().map_or(0, |p| p.point.dim());
    if points.len() < n + 2 {
        return Err(Error::Degenerate(format!("{} orbit points are too few", points.len())));
    }
    let coords: Vec<Vec<f64>> = points.iter().map(|p| p.point.0.clone()).collect();
    let faces = convex_hull(&coords, opts)?;
    let mut out = Vec::new();
    for f in faces {
        if f.offset >= 0.0 {
            continue;
        }
        let a = &f.normal;
        let mut w: Vec<f64> = a.iter().map(|v| -v / f.offset).collect();
        w[0] = -w[0];
        let w = MVector(w);
        if w.lorentz(&w) >= 0.0 || w.0[0] <= 0.0 {
            continue;
        }
        let mut verts = f.vertices.clone();
        verts.sort_by(|&x, &y| klein_cmp(&points[x].point.klein(), &points[y].point.klein()));
        let vpts: Vec<MVector> = verts.iter().map(|&v| points[v].point.clone()).collect();
        let support = support_vector(&vpts).unwrap_or(w);
        let klein: Vec<Vec<f64>> = vpts.iter().map(|p| p.klein()).collect();
        let facets = klein_facets(&klein, opts)?
            .into_iter()
            .map(|loc| {
                let mut s: Vec<usize> = loc.iter().map(|&i| verts[i]).collect();
                s.sort_unstable();
                s
            })
            .collect();
        out.push(HullFace { vertices: verts, support, facets });
    }
    out.sort_by(|a, b| {
        a.max_height(points)
            .total_cmp(&b.max_height(points))
            .then_with(|| klein_cmp(&points[a.vertices[0]].point.klein(), &points[b.vertices[0]].point.klein()))
    });
    Ok(out)
}

/// Quantised coordinates used to identify points across runs.
pub(crate) fn point_key(p: &MVector) -> Vec<i64> {
    p.0.iter().map(|v| (v * 1e6).round() as i64).collect()
}

pub(crate) fn face_key(points: &[MVector]) -> Vec<Vec<i64>> {
    let mut k: Vec<Vec<i64>> = points.iter().map(point_key).collect();
    k.sort();
    k
}

/// Result of comparing the certified faces of two enumerations.
#[derive(Clone, Debug)]
pub struct StabilityCertificate {
    pub stable: bool,
    pub word_bound: usize,
    pub height_bound: f64,
    /// Faces with every vertex at height at most `cut_height`.
    pub cut_height: f64,
    pub orbit: Orbit,
    pub faces: Vec<HullFace>,
    pub mismatches: usize,
}

fn certified_keys(points: &[OrbitPoint], faces: &[HullFace], cut: f64) -> Vec<Vec<Vec<i64>>> {
    let mut keys: Vec<Vec<Vec<i64>>> = faces
        .iter()
        .filter(|f| f.max_height(points) <= cut)
        .map(|f| face_key(&f.vertices.iter().map(|&v| points[v].point.clone()).collect::<Vec<_>>()))
        .collect();
    keys.sort();
    keys
}

/// Computes the hull for `(L, H)` and `(L+1, 2H)` and compares the faces
/// whose vertices all lie below `H/2`.
pub fn stability_certificate(
    g: &GroupSpec,
    word_bound: usize,
    height_bound: f64,
    opts: HullOptions,
) -> Result<StabilityCertificate> {
    let cut = height_bound / 2.0;
    let base = orbit(g, word_bound, height_bound);
    let faces = hull_faces(&base.points, opts)?;
    let bigger = orbit(g, word_bound + 1, 2.0 * height_bound);
    let faces2 = hull_faces(&bigger.points, opts)?;
    let k1 = certified_keys(&base.points, &faces, cut);
    let k2 = certified_keys(&bigger.points, &faces2, cut);
    let mismatches = k1.iter().filter(|k| k2.binary_search(k).is_err()).count()
        + k2.iter().filter(|k| k1.binary_search(k).is_err()).count();
    let certified: Vec<HullFace> = faces.into_iter().filter(|f| f.max_height(&base.points) <= cut).collect();
    Ok(StabilityCertificate {
        stable: mismatches == 0 && !certified.is_empty(),
        word_bound,
        height_bound,
        cut_height: cut,
        orbit: base,
        faces: certified,
        mismatches,
    })
}

/// Number of certified faces whose image under one of `isometries` lies
/// below the cut but is not itself a certified face.
pub fn invariance_defects(cert: &StabilityCertificate, isometries: &[Isometry]) -> usize {
    let pts = &cert.orbit.points;
    let keys = certified_keys(pts, &cert.faces, cert.cut_height);
    let mut bad = 0;
    for f in &cert.faces {
        for g in isometries {
            let img: Vec<MVector> = f.vertices.iter().map(|&v| g.apply(&pts[v].point)).collect();
            if img.iter().any(|p| p.0[0] > cert.cut_height * (1.0 - 1e-9)) {
                continue;
            }
            if keys.binary_search(&face_key(&img)).is_err() {
                bad += 1;
            }
        }
    }
    bad
}

/// An ideal polytope given by decorated vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealCell {
    pub vertices: Vec<DecoratedVertex>,
    /// Klein coordinates of the ideal vertices.
    pub klein: Vec<Vec<f64>>,
    /// Codimension-one faces as sorted local vertex indices.
    pub facets: Vec<Vec<usize>>,
    /// Canonical Γ-orbit key, once assigned.
    pub key: Option<Vec<i64>>,
}

impl IdealCell {
    pub fn new(vertices: Vec<DecoratedVertex>, opts: HullOptions) -> Result<IdealCell> {
        let klein: Vec<Vec<f64>> = vertices.iter().map(|v| v.point.klein()).collect();
        let facets = klein_facets(&klein, opts)?;
        Ok(IdealCell { vertices, klein, facets, key: None })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].point.dim()
    }

    pub fn max_height(&self) -> f64 {
        self.vertices.iter().map(|v| v.point.0[0]).fold(0.0, f64::max)
    }

    /// Outward unit normal of a facet: Lorentz-orthogonal to the facet's
    /// vertices, negative on the remaining ones.
    pub fn facet_normal(&self, k: usize) -> Result<MVector> {
        let rows: Vec<Vec<f64>> = self.facets[k]
            .iter()
            .map(|&i| {
                let p = &self.vertices[i].point;
                let s = 1.0 / p.euclid_norm();
                p.0.iter().enumerate().map(|(j, v)| if j == 0 { -v * s } else { v * s }).collect()
            })
            .collect();
        let u = MVector(linalg::null_vector(&rows)).normalize_spacelike()?;
        let other = (0..self.vertices.len()).find(|i| !self.facets[k].contains(i));
        let Some(o) = other else {
            return Err(Error::Degenerate("cell has no vertex off the facet".into()));
        };
        Ok(if u.lorentz(&self.vertices[o].point) > 0.0 { u.scale(-1.0) } else { u })
    }

    /// Interior dihedral angles between facets sharing a codimension-two face.
    pub fn dihedral_angles(&self) -> Result<Vec<((usize, usize), f64)>> {
        let n = self.dim();
        let normals: Vec<MVector> = (0..self.facets.len()).map(|k| self.facet_normal(k)).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for a in 0..self.facets.len() {
            for b in a + 1..self.facets.len() {
                let shared = self.facets[a].iter().filter(|v| self.facets[b].contains(v)).count();
                if shared >= n - 1 {
                    let c = (-normals[a].lorentz(&normals[b])).clamp(-1.0, 1.0);
                    out.push(((a, b), c.acos()));
                }
            }
        }
        Ok(out)
    }

    /// Normalised barycentre of the vertex rays, an interior point.
    pub fn sample_point(&self) -> MVector {
        let n = self.dim();
        let mut s = MVector::zeros(n);
        for v in &self.vertices {
            s = s.add(&v.point.scale(1.0 / v.point.0[0]));
        }
        s.normalize_timelike().expect("sum of future lightlike vectors is timelike")
    }
}

/// Ideal cell obtained by projecting a hull face to the Klein model.
pub fn project_face(face: &HullFace, points: &[OrbitPoint], opts: HullOptions) -> Result<IdealCell> {
    let verts: Vec<DecoratedVertex> = face
        .vertices
        .iter()
        .map(|&v| DecoratedVertex {
            point: points[v].point.clone(),
            cusp: points[v].cusp,
            transform: points[v].transform.clone(),
        })
        .collect();
    IdealCell::new(verts, opts)
}

/// Identification of facet `facet_a` of cell `cell_a` with facet `facet_b`
/// of cell `cell_b` by an element of Γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacetPairing {
    pub cell_a: usize,
    pub facet_a: usize,
    pub cell_b: usize,
    pub facet_b: usize,
    /// Maps facet `a` onto facet `b`.
    pub isometry: Isometry,
}

/// One representative cell per Γ-orbit and the gluing of their facets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub n: usize,
    pub cells: Vec<IdealCell>,
    pub pairings: Vec<FacetPairing>,
    /// Canonical boundary data of each cell, for geometric comparison.
    pub canonical_coords: Vec<Vec<Vec<f64>>>,
}

impl Decomposition {
    pub fn keys(&self) -> Vec<Vec<i64>> {
        self.cells.iter().map(|c| c.key.clone().unwrap_or_default()).collect()
    }
}

fn facet_points(cell: &IdealCell, k: usize) -> Vec<MVector> {
    cell.facets[k].iter().map(|&i| cell.vertices[i].point.clone()).collect()
}

fn match_points(a: &[MVector], b: &[MVector], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|p| {
            b.iter().any(|q| p.sub(q).euclid_norm() <= tol * p.euclid_norm().max(q.euclid_norm()).max(1.0))
        })
}

/// Integer vectors of length `k` with entries in `-r..=r`, zero first.
fn lattice_shifts(k: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..k {
        out = out.into_iter().flat_map(|s| (-r..=r).map(move |o| [s.clone(), vec![o]].concat())).collect();
    }
    out.sort_by_key(|s| s.iter().map(|x| x.abs()).sum::<i64>());
    out
}

/// Groups a patch of cells into Γ-orbits, picks the lowest cell of each orbit
/// as representative and pairs every facet of every representative.
pub fn assemble_decomposition(mut patch: Vec<IdealCell>, frames: &Frames) -> Result<Decomposition> {
    let n = frames.n;
    let canon: Vec<_> = patch.iter().map(|c| frames.canonical(&c.vertices)).collect::<Result<_>>()?;
    for (c, k) in patch.iter_mut().zip(&canon) {
        c.key = Some(k.key.clone());
    }
    // representatives
    let mut reps: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for (i, c) in patch.iter().enumerate() {
        let key = canon[i].key.clone();
        match reps.get(&key) {
            Some(&j) => {
                let better = c.max_height().total_cmp(&patch[j].max_height()).then_with(|| {
                    let mut a = c.klein.clone();
                    let mut b = patch[j].klein.clone();
                    a.sort_by(|x, y| klein_cmp(x, y));
                    b.sort_by(|x, y| klein_cmp(x, y));
                    a.iter().zip(&b).map(|(x, y)| klein_cmp(x, y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
                });
                if better.is_lt() {
                    reps.insert(key, i);
                }
            }
            None => {
                reps.insert(key, i);
            }
        }
    }
    let rep_ids: Vec<usize> = reps.values().copied().collect();
    let rep_of_key: HashMap<Vec<i64>, usize> = reps.keys().cloned().enumerate().map(|(i, k)| (k, i)).collect();

    // facet index over the whole patch
    let mut by_facet: HashMap<Vec<Vec<i64>>, Vec<(usize, usize)>> = HashMap::new();
    for (ci, c) in patch.iter().enumerate() {
        for k in 0..c.facets.len() {
            by_facet.entry(face_key(&facet_points(c, k))).or_default().push((ci, k));
        }
    }

    let cell_keys: Vec<Vec<Vec<i64>>> =
        patch.iter().map(|c| face_key(&c.vertices.iter().map(|v| v.point.clone()).collect::<Vec<_>>())).collect();
    let mut pairings = Vec::new();
    for (ri, &ci) in rep_ids.iter().enumerate() {
        let cell = &patch[ci];
        for k in 0..cell.facets.len() {
            let e = facet_points(cell, k);
            // neighbour D with its canonical map G_D
            let mut found: Option<(usize, Isometry)> = None;
            if let Some(list) = by_facet.get(&face_key(&e)) {
                if let Some(&(d, _)) = list.iter().find(|&&(d, _)| cell_keys[d] != cell_keys[ci]) {
                    found = Some((d, canon[d].map.clone()));
                }
            }
            if found.is_none() {
                'search: for &vi in &cell.facets[k] {
                    let v = &cell.vertices[vi];
                    let frame = &frames.frames[v.cusp];
                    let m = &frame.to_standard;
                    let back = v.transform.inverse();
                    for s in lattice_shifts(frame.lattice.len(), 2) {
                        let ginv = m.inverse().compose(&frame.translation_by(&s)).compose(m).compose(&back);
                        let moved: Vec<MVector> = e.iter().map(|p| ginv.apply(p)).collect();
                        let moved_cell =
                            face_key(&cell.vertices.iter().map(|v| ginv.apply(&v.point)).collect::<Vec<_>>());
                        if let Some(list) = by_facet.get(&face_key(&moved)) {
                            let hit = list.iter().find(|&&(d, _)| cell_keys[d] != moved_cell);
                            if let Some(&(d, _)) = hit {
                                found = Some((d, canon[d].map.compose(&ginv)));
                                break 'search;
                            }
                        }
                    }
                }
            }
            let Some((d, g_d)) = found else {
                return Err(Error::UnpairedFacet { cell: ri, facet: k });
            };
            let key_d = &canon[d].key;
            let rj = rep_of_key[key_d];
            let cprime = rep_ids[rj];
            // gamma maps C' onto D
            let gamma = g_d.inverse().compose(&canon[cprime].map);
            let ginv = gamma.inverse();
            let image: Vec<MVector> = e.iter().map(|p| ginv.apply(p)).collect();
            let target = &patch[cprime];
            let kb = (0..target.facets.len())
                .find(|&kk| match_points(&image, &facet_points(target, kk), 1e-7))
                .ok_or(Error::UnpairedFacet { cell: ri, facet: k })?;
            if (ri, k) <= (rj, kb) {
                pairings.push(FacetPairing { cell_a: ri, facet_a: k, cell_b: rj, facet_b: kb, isometry: ginv });
            }
        }
    }
    let cells: Vec<IdealCell> = rep_ids.iter().map(|&i| patch[i].clone()).collect();
    let canonical_coords = rep_ids.iter().map(|&i| canon[i].coords.clone()).collect();
    let d = Decomposition { n, cells, pairings, canonical_coords };
    check_pairing_complete(&d)?;
    Ok(d)
}

/// Every facet of every representative appears in exactly one pairing.
pub fn check_pairing_complete(d: &Decomposition) -> Result<()> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for p in &d.pairings {
        *count.entry((p.cell_a, p.facet_a)).or_default() += 1;
        if (p.cell_a, p.facet_a) != (p.cell_b, p.facet_b) {
            *count.entry((p.cell_b, p.facet_b)).or_default() += 1;
        }
    }
    for (ci, c) in d.cells.iter().enumerate() {
        for k in 0..c.facets.len() {
            if count.get(&(ci, k)).copied().unwrap_or(0) != 1 {
                return Err(Error::UnpairedFacet { cell: ci, facet: k });
            }
        }
    }
    Ok(())
}

/// Output of the convex hull pipeline for one group.
#[derive(Clone, Debug)]
pub struct EpResult {
    pub certificate: StabilityCertificate,
    pub frames: Frames,
    pub decomposition: Decomposition,
}

/// Stability check, cusp frames and assembled decomposition. The
/// decomposition is built even when the certificate is not stable.
pub fn ep_decomposition(g: &GroupSpec, word_bound: usize, height_bound: f64, opts: HullOptions) -> Result<EpResult> {
    let certificate = stability_certificate(g, word_bound, height_bound, opts)?;
    let frames = Frames::new(g, &certificate.orbit)?;
    let cells = certificate
        .faces
        .iter()
        .map(|f| project_face(f, &certificate.orbit.points, opts))
        .collect::<Result<Vec<_>>>()?;
    let decomposition = assemble_decomposition(cells, &frames)?;
    Ok(EpResult { certificate, frames, decomposition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{psl2_to_lorentz, Psl2};

    #[test]
    fn support_vector_of_simplex() {
        let pts = vec![MVector(vec![1.0, 1.0, 0.0]), MVector(vec![1.0, -1.0, 0.0]), MVector(vec![1.0, 0.0, 1.0])];
        let w = support_vector(&pts).unwrap();
        for p in &pts {
            assert!((p.lorentz(&w) + 1.0).abs() < 1e-12);
        }
        assert!(support_vector(&pts[..1]).is_err());
        let through_origin = vec![MVector(vec![1.0, 1.0, 0.0]), MVector(vec![2.0, 2.0, 0.0]), MVector(vec![3.0, 3.0, 0.0])];
        assert!(support_vector(&through_origin).is_err());
    }

    #[test]
    fn regular_ideal_tetrahedron_angles() {
        // vertices of a regular tetrahedron on the sphere
        let s = 1.0 / 3f64.sqrt();
        let dirs = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        let verts: Vec<DecoratedVertex> = dirs
            .iter()
            .map(|d| DecoratedVertex {
                point: MVector(vec![1.0, d[0], d[1], d[2]]),
                cusp: 0,
                transform: Isometry::identity(3),
            })
            .collect();
        let cell = IdealCell::new(verts, HullOptions::default()).unwrap();
        assert_eq!(cell.facets.len(), 4);
        let angles = cell.dihedral_angles().unwrap();
        assert_eq!(angles.len(), 6);
        for (_, a) in angles {
            assert!((a - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
        }
    }

    #[test]
    fn thrice_punctured_sphere_faces() {
        let a = psl2_to_lorentz(&Psl2::Real([[1.0, 2.0], [0.0, 1.0]])).unwrap();
        let b = psl2_to_lorentz(&Psl2::Real([[1.0, 0.0], [2.0, 1.0]])).unwrap();
        let cusps = vec![MVector(vec![2.0, 2.0, 0.0]), MVector(vec![2.0, -2.0, 0.0]), MVector(vec![4.0, 0.0, 4.0])];
        let g = GroupSpec { n: 2, generators: vec![a, b], reflections: vec![], cusps };
        let cert = stability_certificate(&g, 5, 40.0, HullOptions::default()).unwrap();
        assert!(cert.stable);
        for f in &cert.faces {
            assert!(f.support.0[0] > 0.0 && f.support.lorentz(&f.support) < 0.0);
            for p in &cert.orbit.points {
                assert!(p.point.lorentz(&f.support) <= -1.0 + 1e-9);
            }
            assert_eq!(f.vertices.len(), 3);
        }
        let inv: Vec<Isometry> = g.generators.iter().flat_map(|m| [m.clone(), m.inverse()]).collect();
        assert_eq!(invariance_defects(&cert, &inv), 0);
    }
}
