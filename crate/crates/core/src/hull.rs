//! Incremental (beneath-beyond) convex hull in R^d for small d, followed by
//! merging of coplanar simplicial facets into polytope faces.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exact;
use crate::linalg;

#[derive(Clone, Copy, Debug)]
pub struct HullOptions {
    /// Visibility threshold, relative to the largest coordinate.
    pub eps: f64,
    /// Tolerance for calling two adjacent facets coplanar.
    pub merge: f64,
    /// Decide near-degenerate orientations with rational arithmetic.
    pub exact: bool,
}

impl Default for HullOptions {
    fn default() -> Self {
        HullOptions { eps: 1e-11, merge: 1e-9, exact: false }
    }
}

/// A face of the hull: `normal . x <= offset` for every input point, with
/// equality exactly on `vertices` (up to tolerance). `normal` is a unit vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeFace {
    pub vertices: Vec<usize>,
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug)]
struct Facet {
    vertices: Vec<usize>,
    neighbors: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    alive: bool,
}

struct Builder<'a> {
    pts: &'a [Vec<f64>],
    d: usize,
    eps: f64,
    exact: bool,
    interior: Vec<f64>,
    facets: Vec<Facet>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Builder<'a> {
    fn plane(&self, verts: &[usize]) -> (Vec<f64>, f64) {
        let v0 = &self.pts[verts[0]];
        let rows: Vec<Vec<f64>> = verts[1..]
            .iter()
            .map(|&v| self.pts[v].iter().zip(v0).map(|(a, b)| a - b).collect())
            .collect();
        let mut normal = linalg::null_vector(&rows);
        let norm = dot(&normal, &normal).sqrt();
        normal.iter_mut().for_each(|x| *x /= norm);
        let mut offset = verts.iter().map(|&v| dot(&normal, &self.pts[v])).sum::<f64>() / verts.len() as f64;
        if dot(&normal, &self.interior) > offset {
            normal.iter_mut().for_each(|x| *x = -*x);
            offset = -offset;
        }
        (normal, offset)
    }

    fn exact_side(&self, f: &Facet, p: &[f64]) -> Ordering {
        let row = |x: &[f64]| {
            let mut r = vec![1.0];
            r.extend_from_slice(x);
            r
        };
        let mut rows: Vec<Vec<f64>> = f.vertices.iter().map(|&v| row(&self.pts[v])).collect();
        rows.push(row(p));
        let sp = exact::det_sign(&rows);
        rows.pop();
        rows.push(row(&self.interior));
        let sc = exact::det_sign(&rows);
        if sp == Ordering::Equal {
            Ordering::Equal
        } else if sp == sc {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    fn visible(&self, f: &Facet, p: &[f64]) -> bool {
        let s = dot(&f.normal, p) - f.offset;
        if self.exact && s.abs() <= 1e3 * self.eps {
            return self.exact_side(f, p) == Ordering::Greater;
        }
        s > self.eps
    }

    fn add_facet(&mut self, vertices: Vec<usize>) -> usize {
        let (normal, offset) = self.plane(&vertices);
        let k = vertices.len();
        self.facets.push(Facet { vertices, neighbors: vec![usize::MAX; k], normal, offset, alive: true });
        self.facets.len() - 1
    }

    fn initial_simplex(&self) -> Result<Vec<usize>> {
        let d = self.d;
        let first = (0..self.pts.len())
            .min_by(|&a, &b| {
                self.pts[a].iter().zip(&self.pts[b]).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
            })
            .unwrap();
        let mut chosen = vec![first];
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for _ in 0..d {
            let o = &self.pts[first];
            let mut best = (0.0, usize::MAX);
            for (i, p) in self.pts.iter().enumerate() {
                let mut r: Vec<f64> = p.iter().zip(o).map(|(a, b)| a - b).collect();
                for b in &basis {
                    let c = dot(&r, b);
                    r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
                let n = dot(&r, &r).sqrt();
                if n > best.0 {
                    best = (n, i);
                }
            }
            if best.0 <= self.eps {
                return Err(Error::Degenerate(format!("points span fewer than {d} dimensions")));
            }
            let mut r: Vec<f64> = self.pts[best.1].iter().zip(o).map(|(a, b)| a - b).collect();
            for b in &basis {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = dot(&r, &r).sqrt();
            basis.push(r.iter().map(|x| x / n).collect());
            chosen.push(best.1);
        }
        Ok(chosen)
    }

    fn link(&mut self, new: &[usize]) {
        let mut ridges: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for &f in new {
            for k in 0..self.facets[f].vertices.len() {
                if self.facets[f].neighbors[k] != usize::MAX {
                    continue;
                }
                let mut key: Vec<usize> = self.facets[f]
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k)
                    .map(|(_, &v)| v)
                    .collect();
                key.sort_unstable();
                if let Some((g, j)) = ridges.remove(&key) {
                    self.facets[f].neighbors[k] = g;
                    self.facets[g].neighbors[j] = f;
                } else {
                    ridges.insert(key, (f, k));
                }
            }
        }
    }

    fn insert(&mut self, p: usize) {
        let point = self.pts[p].clone();
        let visible: Vec<usize> =
            (0..self.facets.len()).filter(|&f| self.facets[f].alive && self.visible(&self.facets[f], &point)).collect();
        if visible.is_empty() {
            return;
        }
        let mut is_vis = vec![false; self.facets.len()];
        for &f in &visible {
            is_vis[f] = true;
        }
        let mut new = Vec::new();
        for &f in &visible {
            for k in 0..self.facets[f].vertices.len() {
                let nb = self.facets[f].neighbors[k];
                if is_vis[nb] {
                    continue;
                }
                let mut verts: Vec<usize> = self.facets[f]
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k)
                    .map(|(_, &v)| v)
                    .collect();
                verts.push(p);
                let g = self.add_facet(verts);
                let last = self.facets[g].vertices.len() - 1;
                self.facets[g].neighbors[last] = nb;
                let slot = self.facets[nb].neighbors.iter().position(|&x| x == f).unwrap();
                self.facets[nb].neighbors[slot] = g;
                new.push(g);
            }
        }
        for &f in &visible {
            self.facets[f].alive = false;
        }
        self.link(&new);
    }
}

/// Simplicial facets of the convex hull of `points` (all of dimension `d`).
fn simplicial_hull(points: &[Vec<f64>], opts: HullOptions) -> Result<(Vec<Facet>, f64)> {
    let d = points.first().map_or(0, |p| p.len());
    if points.len() < d + 1 || d < 2 {
        return Err(Error::Degenerate(format!("{} points do not span R^{d}", points.len())));
    }
    let scale = points.iter().flatten().fold(1e-300f64, |m, v| m.max(v.abs()));
    let mut b = Builder { pts: points, d, eps: opts.eps * scale, exact: opts.exact, interior: vec![], facets: vec![] };
    let simplex = b.initial_simplex()?;
    b.interior = (0..d).map(|j| simplex.iter().map(|&v| points[v][j]).sum::<f64>() / (d + 1) as f64).collect();
    let mut new = Vec::new();
    for skip in 0..=d {
        let verts: Vec<usize> = simplex.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
        new.push(b.add_facet(verts));
    }
    b.link(&new);
    for p in 0..points.len() {
        if !simplex.contains(&p) {
            b.insert(p);
        }
    }
    let eps = b.eps;
    Ok((b.facets.into_iter().filter(|f| f.alive).collect(), eps))
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Faces of the convex hull of `points`, with coplanar simplices merged and
/// every input point lying on a face's hyperplane added to it.
pub fn convex_hull(points: &[Vec<f64>], opts: HullOptions) -> Result<Vec<PolytopeFace>> {
    let (facets, eps) = simplicial_hull(points, opts)?;
    let mut sorted_keys: Vec<Vec<usize>> = Vec::new();
    for f in &facets {
        let mut k = f.vertices.clone();
        k.sort_unstable();
        sorted_keys.push(k);
    }
    let mut parent: Vec<usize> = (0..facets.len()).collect();
    // adjacency through shared ridges
    let mut ridge_owner: HashMap<Vec<usize>, usize> = HashMap::new();
    for (i, key) in sorted_keys.iter().enumerate() {
        for k in 0..key.len() {
            let mut r = key.clone();
            r.remove(k);
            if let Some(&j) = ridge_owner.get(&r) {
                let (a, b) = (&facets[i], &facets[j]);
                let dn = a.normal.iter().zip(&b.normal).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                if dn <= opts.merge && (a.offset - b.offset).abs() <= opts.merge.max(eps) * (1.0 + a.offset.abs()) {
                    let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            } else {
                ridge_owner.insert(r, i);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..facets.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut roots: Vec<usize> = groups.keys().copied().collect();
    roots.sort_unstable();
    let mut faces = Vec::new();
    for r in roots {
        let members = &groups[&r];
        let d = points[0].len();
        let mut normal = vec![0.0; d];
        for &m in members {
            normal.iter_mut().zip(&facets[m].normal).for_each(|(a, b)| *a += b);
        }
        let nn = dot(&normal, &normal).sqrt();
        normal.iter_mut().for_each(|x| *x /= nn);
        let mut verts: Vec<usize> = members.iter().flat_map(|&m| facets[m].vertices.iter().copied()).collect();
        let offset = verts.iter().map(|&v| dot(&normal, &points[v])).sum::<f64>() / verts.len() as f64;
        for (i, p) in points.iter().enumerate() {
            if (dot(&normal, p) - offset).abs() <= eps {
                verts.push(i);
            }
        }
        verts.sort_unstable();
        verts.dedup();
        faces.push(PolytopeFace { vertices: verts, normal, offset });
    }
    Ok(faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        pts.push(vec![0.5, 0.5, 0.5]);
        pts
    }

    #[test]
    fn cube_has_six_square_faces() {
        let faces = convex_hull(&cube(), HullOptions::default()).unwrap();
        assert_eq!(faces.len(), 6);
        assert!(faces.iter().all(|f| f.vertices.len() == 4 && !f.vertices.contains(&8)));
        let exact = convex_hull(&cube(), HullOptions { exact: true, ..Default::default() }).unwrap();
        assert_eq!(exact.len(), 6);
    }

    #[test]
    fn tesseract_and_square() {
        let mut pts = Vec::new();
        for i in 0..16 {
            pts.push((0..4).map(|k| ((i >> k) & 1) as f64).collect());
        }
        let faces = convex_hull(&pts, HullOptions::default()).unwrap();
        assert_eq!(faces.len(), 8);
        assert!(faces.iter().all(|f| f.vertices.len() == 8));
        let sq = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![0.5, 0.0]];
        let faces = convex_hull(&sq, HullOptions::default()).unwrap();
        assert_eq!(faces.len(), 4);
        assert!(faces.iter().any(|f| f.vertices == vec![0, 1, 4]));
    }

    #[test]
    fn flat_input_is_rejected() {
        let pts = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert!(convex_hull(&pts, HullOptions::default()).is_err());
        assert!(convex_hull(&pts[..2], HullOptions::default()).is_err());
    }

    proptest! {
        #[test]
        fn every_point_is_inside_every_face(pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 5..40)) {
            let faces = match convex_hull(&pts, HullOptions::default()) {
                Ok(f) => f,
                Err(_) => return Ok(()),
            };
            for f in &faces {
                for p in &pts {
                    prop_assert!(dot(&f.normal, p) <= f.offset + 1e-9);
                }
                prop_assert!(f.vertices.len() >= 3);
            }
            // Euler characteristic of a simplicial 2-sphere: V - E + F = 2
            let simplicial = faces.iter().all(|f| f.vertices.len() == 3);
            if simplicial {
                let mut verts: Vec<usize> = faces.iter().flat_map(|f| f.vertices.clone()).collect();
                verts.sort_unstable();
                verts.dedup();
                let e = faces.len() * 3 / 2;
                prop_assert_eq!(verts.len() as i64 - e as i64 + faces.len() as i64, 2);
            }
        }
    }
}
