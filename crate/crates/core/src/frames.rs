//! Cusp frames and canonical keys for Γ-orbits of decorated vertex sets.
//!
//! The frame of cusp `i` is an isometry `M_i` sending its horoball to the
//! height-one horoball `(1,1,0,...)` centred at infinity of the upper
//! half-space. There the cusp stabilizer acts by Euclidean translations of
//! the boundary `R^{n-1}`, forming a lattice. A finite set of decorated
//! horoballs is keyed by putting each of its vertices at infinity in turn,
//! reducing the remaining boundary positions modulo the lattice, quantising,
//! and keeping the smallest result.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupSpec, Orbit};
use crate::minkowski::{psl2_to_lorentz, Isometry, MVector, Psl2};

const QUANTUM: f64 = 1e6;

/// A horoball together with its cusp and an element `γ` with `γ p_cusp = point`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoratedVertex {
    pub point: MVector,
    pub cusp: usize,
    pub transform: Isometry,
}

impl DecoratedVertex {
    pub fn apply(&self, g: &Isometry) -> DecoratedVertex {
        DecoratedVertex { point: g.apply(&self.point), cusp: self.cusp, transform: g.compose(&self.transform) }
    }
}

/// Boundary position and Euclidean diameter of a horoball seen from the
/// standard frame. The horoball at infinity has no position.
pub fn boundary_data(q: &MVector) -> (Vec<f64>, f64) {
    let denom = q.0[0] - q.0[1];
    let z = q.0[2..].iter().map(|v| v / denom).collect();
    (z, 2.0 / denom)
}

/// The horoball of diameter `diam` touching the boundary at `z`.
pub fn horoball_at(z: &[f64], diam: f64) -> MVector {
    let r2: f64 = z.iter().map(|v| v * v).sum();
    let b = 2.0 / diam;
    let mut x = vec![b * 0.5 * (r2 + 1.0), b * 0.5 * (r2 - 1.0)];
    x.extend(z.iter().map(|v| b * v));
    MVector(x)
}

/// Hyperboloid point above boundary point `z` at height `t`.
pub fn half_space_point(z: &[f64], t: f64) -> MVector {
    let r2: f64 = z.iter().map(|v| v * v).sum();
    let a = (r2 + t * t) / t;
    let c = 1.0 / t;
    let mut x = vec![0.5 * (a + c), 0.5 * (a - c)];
    x.extend(z.iter().map(|v| v / t));
    MVector(x)
}

/// Inverse of [`half_space_point`].
pub fn half_space_coords(x: &MVector) -> (Vec<f64>, f64) {
    let t = 1.0 / (x.0[0] - x.0[1]);
    (x.0[2..].iter().map(|v| v * t).collect(), t)
}

/// Parabolic translation of the boundary by `t` in the standard frame.
pub fn translation(n: usize, t: &[f64]) -> Isometry {
    let g = if n == 2 {
        Psl2::Real([[1.0, t[0]], [0.0, 1.0]])
    } else {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        Psl2::Complex([[one, Complex64::new(t[0], t[1])], [o, one]])
    };
    psl2_to_lorentz(&g).expect("unimodular")
}

/// Isometry mapping the future lightlike vector `p` to `(1,1,0,...)`.
pub fn standardizing_map(p: &MVector) -> Isometry {
    let n = p.dim();
    let d = n + 1;
    let spatial: Vec<f64> = p.0[1..].to_vec();
    let r = spatial.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rhat: Vec<f64> = spatial.iter().map(|v| v / r).collect();
    // Householder reflection of the spatial part taking rhat to e1
    let mut h = Isometry::identity(n);
    let v: Vec<f64> = rhat.iter().enumerate().map(|(i, x)| x - if i == 0 { 1.0 } else { 0.0 }).collect();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv > 1e-24 {
        for i in 0..n {
            for j in 0..n {
                h.m[(i + 1) * d + j + 1] -= 2.0 * v[i] * v[j] / vv;
            }
        }
    }
    let s = -r.ln();
    let mut b = Isometry::identity(n);
    b.m[0] = s.cosh();
    b.m[1] = s.sinh();
    b.m[d] = s.sinh();
    b.m[d + 1] = s.cosh();
    b.compose(&h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspFrame {
    pub cusp: usize,
    pub to_standard: Isometry,
    /// Basis of the stabilizer translation lattice in R^{n-1}.
    pub lattice: Vec<Vec<f64>>,
}

impl CuspFrame {
    fn full_rank(&self) -> bool {
        self.lattice.len() == self.to_standard.n - 1
    }

    /// Lattice coordinates of a boundary vector (raw coordinates when the
    /// lattice is not of full rank).
    pub fn lattice_coords(&self, z: &[f64]) -> Vec<f64> {
        if !self.full_rank() {
            return z.to_vec();
        }
        match self.lattice.len() {
            1 => vec![z[0] / self.lattice[0][0]],
            _ => {
                let (a, b) = (&self.lattice[0], &self.lattice[1]);
                let det = a[0] * b[1] - a[1] * b[0];
                vec![(z[0] * b[1] - z[1] * b[0]) / det, (a[0] * z[1] - a[1] * z[0]) / det]
            }
        }
    }

    pub fn from_lattice_coords(&self, c: &[f64]) -> Vec<f64> {
        if !self.full_rank() {
            return c.to_vec();
        }
        let m = self.to_standard.n - 1;
        (0..m).map(|j| self.lattice.iter().zip(c).map(|(b, x)| b[j] * x).sum()).collect()
    }

    /// Reduces `z` into the fundamental parallelotope `[0,1)^{n-1}`, returning
    /// the reduced point and the integer shift that was subtracted.
    pub fn reduce(&self, z: &[f64]) -> (Vec<f64>, Vec<i64>) {
        if !self.full_rank() {
            return (z.to_vec(), vec![0; z.len()]);
        }
        let c = self.lattice_coords(z);
        let shift: Vec<i64> = c.iter().map(|x| quantize(*x).div_euclid(QUANTUM as i64)).collect();
        let red: Vec<f64> = c.iter().zip(&shift).map(|(x, s)| x - *s as f64).collect();
        (self.from_lattice_coords(&red), shift)
    }

    pub fn translation_by(&self, shift: &[i64]) -> Isometry {
        let c: Vec<f64> = shift.iter().map(|&s| s as f64).collect();
        translation(self.to_standard.n, &self.from_lattice_coords(&c))
    }
}

fn quantize(x: f64) -> i64 {
    (x * QUANTUM).round() as i64
}

// Real gcd of lengths along a line.
fn real_gcd(mut a: f64, mut b: f64, tol: f64) -> f64 {
    while b > tol {
        let r = a.rem_euclid(b);
        let r = r.min(b - r);
        a = b;
        b = r;
    }
    a
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gauss_reduce(mut a: Vec<f64>, mut b: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    loop {
        if norm(&a) > norm(&b) {
            std::mem::swap(&mut a, &mut b);
        }
        let mu = ((a[0] * b[0] + a[1] * b[1]) / (a[0] * a[0] + a[1] * a[1])).round();
        if mu == 0.0 {
            return (a, b);
        }
        b = vec![b[0] - mu * a[0], b[1] - mu * a[1]];
        if norm(&b) >= norm(&a) {
            return (a, b);
        }
    }
}

fn in_lattice(basis: &[Vec<f64>], v: &[f64], dim: usize, tol: f64) -> bool {
    let near_int = |x: f64| (x - x.round()).abs() <= 1e-6;
    match (basis.len(), dim) {
        (0, _) => false,
        (1, 1) => near_int(v[0] / basis[0][0]),
        (1, _) => {
            let b = &basis[0];
            let c = (v[0] * b[0] + v[1] * b[1]) / (b[0] * b[0] + b[1] * b[1]);
            let r = [v[0] - c * b[0], v[1] - c * b[1]];
            norm(&r) <= tol && near_int(c)
        }
        _ => {
            let (a, b) = (&basis[0], &basis[1]);
            let det = a[0] * b[1] - a[1] * b[0];
            near_int((v[0] * b[1] - v[1] * b[0]) / det) && near_int((a[0] * v[1] - a[1] * v[0]) / det)
        }
    }
}

fn reduce_set(mut vs: Vec<Vec<f64>>, dim: usize, tol: f64) -> Vec<Vec<f64>> {
    if dim == 1 {
        let g = vs.iter().fold(0.0, |g, v| if g == 0.0 { v[0].abs() } else { real_gcd(g, v[0].abs(), tol) });
        return vec![vec![g]];
    }
    vs.sort_by(|a, b| norm(a).total_cmp(&norm(b)));
    let cross = |a: &[f64], b: &[f64]| a[0] * b[1] - a[1] * b[0];
    for _ in 0..200 {
        let b1 = vs[0].clone();
        let Some(j) = (1..vs.len()).find(|&j| cross(&b1, &vs[j]).abs() > 1e-7 * norm(&b1) * norm(&vs[j])) else {
            // all parallel: a rank-one lattice along b1
            let dir: Vec<f64> = b1.iter().map(|x| x / norm(&b1)).collect();
            let lens: Vec<Vec<f64>> = vs.iter().map(|v| vec![v[0] * dir[0] + v[1] * dir[1]]).collect();
            let g = reduce_set(lens, 1, tol)[0][0];
            return vec![dir.iter().map(|x| x * g).collect()];
        };
        let (a, b) = gauss_reduce(b1, vs[j].clone());
        let det = cross(&a, &b);
        let mut rest = Vec::new();
        for (k, v) in vs.iter().enumerate() {
            if k == 0 || k == j {
                continue;
            }
            let c0 = ((v[0] * b[1] - v[1] * b[0]) / det).round();
            let c1 = ((a[0] * v[1] - a[1] * v[0]) / det).round();
            let r = vec![v[0] - c0 * a[0] - c1 * b[0], v[1] - c0 * a[1] - c1 * b[1]];
            if norm(&r) > tol {
                rest.push(r);
            }
        }
        if rest.is_empty() {
            return vec![a, b];
        }
        vs = vec![a, b];
        vs.extend(rest);
        vs.sort_by(|a, b| norm(a).total_cmp(&norm(b)));
    }
    vs.truncate(2);
    vs
}

/// Basis of the lattice generated by `vectors` (dimension 1 or 2). Vectors
/// are taken in the given order and only added when not already in the
/// lattice, so accurate vectors should come first.
pub fn lattice_basis(vectors: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let tol = 1e-7 * scale;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if norm(v) <= tol || in_lattice(&basis, v, dim, tol) {
            continue;
        }
        let mut set = basis.clone();
        set.push(v.clone());
        basis = reduce_set(set, dim, tol);
    }
    basis
}

/// Frames of all cusps of a group, with stabilizer lattices recovered from
/// an orbit enumeration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frames {
    pub n: usize,
    pub frames: Vec<CuspFrame>,
}

/// Canonical form of a decorated vertex set under Γ.
#[derive(Clone, Debug, PartialEq)]
pub struct Canonical {
    pub key: Vec<i64>,
    /// Isometry (an element of Γ composed with a cusp frame) placing the set
    /// in canonical position.
    pub map: Isometry,
    /// Index of the vertex sent to infinity, then the others in key order.
    pub order: Vec<usize>,
    /// Boundary position and diameter of each non-base vertex, in key order.
    pub coords: Vec<Vec<f64>>,
}

impl Frames {
    pub fn new(g: &GroupSpec, orbit: &Orbit) -> Result<Frames> {
        let n = g.n;
        let mut frames = Vec::new();
        for (i, p) in g.cusps.iter().enumerate() {
            let m = standardizing_map(p);
            let minv = m.inverse();
            let inf = MVector({
                let mut v = vec![1.0, 1.0];
                v.extend(std::iter::repeat_n(0.0, n - 1));
                v
            });
            let probes: Vec<Vec<f64>> = std::iter::once(vec![0.0; n - 1])
                .chain((0..n - 1).map(|k| (0..n - 1).map(|j| if j == k { 1.0 } else { 0.0 }).collect()))
                .collect();
            let mut stab: Vec<&Isometry> = orbit.stabilizers[i].iter().collect();
            stab.sort_by(|a, b| a.max_abs().total_cmp(&b.max_abs()));
            let mut ts = Vec::new();
            for s in stab {
                let sc = m.compose(s).compose(&minv);
                let img = sc.apply(&inf);
                if img.sub(&inf).euclid_norm() > 1e-8 * img.euclid_norm() {
                    continue;
                }
                let images: Vec<Vec<f64>> =
                    probes.iter().map(|z| boundary_data(&sc.apply(&horoball_at(z, 1.0))).0).collect();
                let t = images[0].clone();
                let pure = probes.iter().zip(&images).all(|(z, w)| {
                    z.iter().zip(w).zip(&t).all(|((a, b), c)| (a + c - b).abs() <= 1e-7 * (1.0 + c.abs()))
                });
                if pure {
                    ts.push(t);
                }
            }
            let lattice = lattice_basis(&ts, n - 1);
            frames.push(CuspFrame { cusp: i, to_standard: m, lattice });
        }
        Ok(Frames { n, frames })
    }

    /// Frame map `M_i γ^{-1}` putting the given vertex at infinity.
    pub fn frame_of(&self, v: &DecoratedVertex) -> Isometry {
        self.frames[v.cusp].to_standard.compose(&v.transform.inverse())
    }

    /// Canonical key and placement of a set of at least two vertices.
    pub fn canonical(&self, verts: &[DecoratedVertex]) -> Result<Canonical> {
        if verts.len() < 2 {
            return Err(Error::Degenerate("canonical key needs two vertices".into()));
        }
        let mut best: Option<(Vec<i64>, Isometry, Vec<usize>, Vec<Vec<f64>>)> = None;
        for (vi, v) in verts.iter().enumerate() {
            let frame = &self.frames[v.cusp];
            let f = self.frame_of(v);
            let data: Vec<(usize, Vec<f64>, f64)> = verts
                .iter()
                .enumerate()
                .filter(|&(ui, _)| ui != vi)
                .map(|(ui, u)| {
                    let (z, diam) = boundary_data(&f.apply(&u.point));
                    (ui, frame.lattice_coords(&z), diam)
                })
                .collect();
            for anchor in &data {
                let shift: Vec<i64> = if frame.full_rank() {
                    anchor.1.iter().map(|x| quantize(*x).div_euclid(QUANTUM as i64)).collect()
                } else {
                    vec![0; anchor.1.len()]
                };
                let mut entries: Vec<(Vec<i64>, usize)> = data
                    .iter()
                    .map(|(ui, c, diam)| {
                        let mut e = vec![verts[*ui].cusp as i64];
                        e.extend(c.iter().zip(&shift).map(|(x, s)| quantize(*x) - s * QUANTUM as i64));
                        e.push(quantize(diam.ln()));
                        (e, *ui)
                    })
                    .collect();
                entries.sort();
                let mut key = vec![v.cusp as i64];
                for (e, _) in &entries {
                    key.extend(e);
                }
                if best.as_ref().is_none_or(|b| key < b.0) {
                    let t = frame.translation_by(&shift.iter().map(|s| -s).collect::<Vec<_>>());
                    let map = t.compose(&f);
                    let mut order = vec![vi];
                    order.extend(entries.iter().map(|(_, ui)| *ui));
                    let coords = order[1..]
                        .iter()
                        .map(|&ui| {
                            let (z, diam) = boundary_data(&map.apply(&verts[ui].point));
                            let mut c = z;
                            c.push(diam);
                            c
                        })
                        .collect();
                    best = Some((key, map, order, coords));
                }
            }
        }
        let (key, map, order, coords) = best.expect("at least one candidate");
        Ok(Canonical { key, map, order, coords })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::orbit;

    fn tps() -> GroupSpec {
        let a = psl2_to_lorentz(&Psl2::Real([[1.0, 2.0], [0.0, 1.0]])).unwrap();
        let b = psl2_to_lorentz(&Psl2::Real([[1.0, 0.0], [2.0, 1.0]])).unwrap();
        GroupSpec { n: 2, generators: vec![a, b], reflections: vec![], cusps: vec![MVector(vec![2.0, 2.0, 0.0])] }
    }

    #[test]
    fn standardizing_map_sends_to_infinity() {
        for p in [vec![3.0, 0.0, 3.0], vec![2.0, -2.0, 0.0], vec![1.0, 0.6, 0.8], vec![5.0, 3.0, 0.0, 4.0]] {
            let p = MVector(p);
            let m = standardizing_map(&p);
            assert!(m.is_isometry(1e-12));
            let img = m.apply(&p);
            assert!((img.0[0] - 1.0).abs() < 1e-12 && (img.0[1] - 1.0).abs() < 1e-12);
            assert!(img.0[2..].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn chart_helpers_agree() {
        let x = half_space_point(&[0.3, -1.2], 0.7);
        assert!((x.lorentz(&x) + 1.0).abs() < 1e-12);
        let (z, t) = half_space_coords(&x);
        assert!((z[0] - 0.3).abs() < 1e-12 && (z[1] + 1.2).abs() < 1e-12 && (t - 0.7).abs() < 1e-12);
        let q = horoball_at(&[0.5, 0.25], 0.4);
        assert!(q.lorentz(&q).abs() < 1e-12);
        let (z, d) = boundary_data(&q);
        assert!((z[0] - 0.5).abs() < 1e-12 && (d - 0.4).abs() < 1e-12);
        let tr = translation(3, &[1.0, 2.0]);
        let (z2, d2) = boundary_data(&tr.apply(&q));
        assert!((z2[0] - 1.5).abs() < 1e-12 && (z2[1] - 2.25).abs() < 1e-12 && (d2 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn lattice_bases() {
        let b = lattice_basis(&[vec![4.0], vec![6.0], vec![-10.0]], 1);
        assert!((b[0][0] - 2.0).abs() < 1e-9);
        let b = lattice_basis(&[vec![2.0, 0.0], vec![0.0, 3.0], vec![1.0, 1.5], vec![4.0, 3.0]], 2);
        let area = (b[0][0] * b[1][1] - b[0][1] * b[1][0]).abs();
        assert!((area - 3.0).abs() < 1e-9);
    }

    #[test]
    fn stabilizer_lattice_of_thrice_punctured_sphere() {
        let g = tps();
        let o = orbit(&g, 4, 40.0);
        let f = Frames::new(&g, &o).unwrap();
        // translation by 2 in a frame where the horoball has height one:
        // the frame rescales the boundary by the decoration height 2
        let b = f.frames[0].lattice[0][0].abs();
        assert!((b - 1.0).abs() < 1e-9, "lattice {b}");
    }

    #[test]
    fn keys_are_orbit_invariant() {
        let g = tps();
        let o = orbit(&g, 4, 60.0);
        let f = Frames::new(&g, &o).unwrap();
        let pts: Vec<DecoratedVertex> = o
            .points
            .iter()
            .take(6)
            .map(|p| DecoratedVertex { point: p.point.clone(), cusp: p.cusp, transform: p.transform.clone() })
            .collect();
        let set = vec![pts[0].clone(), pts[3].clone(), pts[5].clone()];
        let k = f.canonical(&set).unwrap();
        for gamma in [&g.generators[0], &g.generators[1], &g.generators[1].compose(&g.generators[0].inverse())] {
            let moved: Vec<DecoratedVertex> = set.iter().rev().map(|v| v.apply(gamma)).collect();
            let k2 = f.canonical(&moved).unwrap();
            assert_eq!(k.key, k2.key);
            for (a, b) in k.coords.iter().zip(&k2.coords) {
                for (x, y) in a.iter().zip(b) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
        // the canonical map places the base vertex at infinity with height one
        let base = k.map.apply(&set[k.order[0]].point);
        assert!((base.0[0] - 1.0).abs() < 1e-9 && (base.0[1] - 1.0).abs() < 1e-9);
    }
}
