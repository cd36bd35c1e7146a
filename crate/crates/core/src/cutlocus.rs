//! The cut locus of the decorated horoballs and its dual decomposition.
//!
//! Everything is computed cusp by cusp. In the frame of a cusp, with its
//! horoball at height 1 above the boundary, a horoball of diameter `D` at `z`
//! is equidistant from the base along the hemisphere of radius `sqrt(D)`
//! about `z`. The cut locus seen from the base cusp is the upper envelope of
//! these hemispheres, whose combinatorics is the power diagram of the sites
//! `(z, D)` on the boundary plane.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::decorations::{short_cut, ShortCut};
use crate::ep_hull::{assemble_decomposition, Decomposition, IdealCell};
use crate::frames::{boundary_data, half_space_point, DecoratedVertex, Frames};
use crate::group::{orbit, orbit_where, GroupSpec};
use crate::hull::HullOptions;
use crate::linalg;
use crate::minkowski::{Isometry, MVector};
use crate::{Error, Result};

/// Relative tolerance on `<x,p>` differences deciding equidistance.
const TIE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutLocusOptions {
    pub word_bound: usize,
    pub height_bound: f64,
    pub length_bound: f64,
}

/// The shortest geodesic between two horoballs, one per Γ-orbit of pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnPath {
    pub ends: [DecoratedVertex; 2],
    pub cut: ShortCut,
    pub length: f64,
    /// Canonical key of the pair.
    pub key: Vec<i64>,
}

fn base_vertex(g: &GroupSpec, c: usize) -> DecoratedVertex {
    DecoratedVertex { point: g.cusps[c].clone(), cusp: c, transform: Isometry::identity(g.n) }
}

/// A horoball seen from a base cusp: boundary position and diameter.
#[derive(Clone, Debug)]
struct Site {
    z: Vec<f64>,
    d: f64,
    vertex: DecoratedVertex,
}

impl Site {
    /// Lifted power function `D - |z - z_i|^2`, the squared height of the
    /// hemisphere over `z`.
    fn lift(&self, z: &[f64]) -> f64 {
        self.d - self.z.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    /// Affine part of the lift after dropping the common `-|z|^2`.
    fn affine(&self, z: &[f64]) -> f64 {
        let zz: f64 = self.z.iter().map(|v| v * v).sum();
        self.d - zz + 2.0 * self.z.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn site_key(z: &[f64], d: f64) -> Vec<i64> {
    let mut k: Vec<i64> = z.iter().map(|v| (v * 1e7).round() as i64).collect();
    k.push((d.ln() * 1e7).round() as i64);
    k
}

/// Window of the local diagram, in lattice coordinates when the cusp has a
/// full-rank lattice.
const WINDOW: (f64, f64) = (-1.0, 2.0);

struct Local {
    frame: Isometry,
    lattice: bool,
    sites: Vec<Site>,
}

impl Local {
    fn new(g: &GroupSpec, frames: &Frames, c: usize) -> Local {
        let f = &frames.frames[c];
        Local { frame: f.to_standard.clone(), lattice: f.lattice.len() == g.n - 1 && g.n > 1, sites: Vec::new() }
    }

    /// Adds the horoball `v` and, with a lattice, all its translates whose
    /// disks reach the window.
    fn add(&mut self, frames: &Frames, c: usize, v: &DecoratedVertex, seen: &mut HashMap<Vec<i64>, ()>) {
        let q = self.frame.apply(&v.point);
        let denom = q.0[0] - q.0[1];
        if denom <= 1e-12 * q.0[0].abs() {
            return;
        }
        let (z, d) = boundary_data(&q);
        let cf = &frames.frames[c];
        let finv = self.frame.inverse();
        let mut push = |z: Vec<f64>, t: Option<Isometry>, seen: &mut HashMap<Vec<i64>, ()>| {
            if seen.insert(site_key(&z, d), ()).is_some() {
                return;
            }
            let vertex = match t {
                None => v.clone(),
                Some(t) => v.apply(&finv.compose(&t).compose(&self.frame)),
            };
            self.sites.push(Site { z, d, vertex });
        };
        if !self.lattice {
            push(z, None, seen);
            return;
        }
        let k = z.len();
        let lc = cf.lattice_coords(&z);
        let r = d.sqrt();
        let reach: Vec<f64> = (0..k)
            .map(|j| {
                let mut e = vec![0.0; k];
                (0..k)
                    .map(|i| {
                        e.iter_mut().for_each(|x| *x = 0.0);
                        e[i] = 1.0;
                        cf.lattice_coords(&e)[j].powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
                    * r
            })
            .collect();
        let ranges: Vec<(i64, i64)> = (0..k)
            .map(|j| ((WINDOW.0 - reach[j] - lc[j]).floor() as i64, (WINDOW.1 + reach[j] - lc[j]).ceil() as i64))
            .collect();
        let mut shifts: Vec<Vec<i64>> = vec![Vec::new()];
        for &(lo, hi) in &ranges {
            shifts = shifts.into_iter().flat_map(|s| (lo..=hi).map(move |o| [s.clone(), vec![o]].concat())).collect();
        }
        for s in shifts {
            let c2: Vec<f64> = lc.iter().zip(&s).map(|(x, o)| x + *o as f64).collect();
            if c2.iter().enumerate().any(|(j, x)| *x < WINDOW.0 - reach[j] || *x > WINDOW.1 + reach[j]) {
                continue;
            }
            let z2 = cf.from_lattice_coords(&c2);
            let t = cf.translation_by(&s);
            push(z2, Some(t), seen);
        }
    }
}

/// Horoballs at distance at most `length_bound` from the base horoball of
/// cusp `c`, in its frame.
fn local_orbit(g: &GroupSpec, frames: &Frames, c: usize, opts: &CutLocusOptions) -> Local {
    let mut local = Local::new(g, frames, c);
    let dmin = (-opts.length_bound).exp() * (1.0 - 1e-12);
    // With a lattice every horoball near enough has a translate over the
    // window, so the orbit is cut by diameter in the cusp frame rather than
    // by height.
    let f = local.frame.clone();
    let near = |p: &MVector| {
        let q = f.apply(p);
        let denom = q.0[0] - q.0[1];
        denom > 1e-12 * q.0[0] && 2.0 / denom >= dmin
    };
    let orb = if local.lattice { orbit_where(g, opts.word_bound, &near) } else { orbit(g, opts.word_bound, opts.height_bound) };
    let mut seen = HashMap::new();
    for p in &orb.points {
        if near(&p.point) {
            let v = DecoratedVertex { point: p.point.clone(), cusp: p.cusp, transform: p.transform.clone() };
            local.add(frames, c, &v, &mut seen);
        }
    }
    local
}

/// All Γ-orbits of horoball pairs at distance at most `length_bound`,
/// sorted by length.
pub fn enumerate_return_paths(g: &GroupSpec, frames: &Frames, opts: &CutLocusOptions) -> Result<Vec<ReturnPath>> {
    let mut found: BTreeMap<Vec<i64>, ReturnPath> = BTreeMap::new();
    for c in 0..g.cusps.len() {
        let local = local_orbit(g, frames, c, opts);
        let base = base_vertex(g, c);
        for s in &local.sites {
            let ends = [base.clone(), s.vertex.clone()];
            let key = frames.canonical(&ends)?.key;
            if found.contains_key(&key) {
                continue;
            }
            let cut = short_cut(&ends[0].point, &ends[1].point)?;
            let length = cut.length;
            found.insert(key.clone(), ReturnPath { ends, cut, length, key });
        }
    }
    let mut out: Vec<ReturnPath> = found.into_values().collect();
    out.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.key.cmp(&b.key)));
    Ok(out)
}

/// A face of a local power diagram: the sites tied with the base cusp and
/// a sample point `(z, t^2)` on the envelope.
#[derive(Clone, Debug)]
struct LocalCell {
    dim: usize,
    sites: Vec<usize>,
    z: Vec<f64>,
    t2: f64,
    bounding: Vec<usize>,
}

fn ties(sites: &[Site], z: &[f64]) -> (f64, Vec<usize>) {
    let t2 = sites.iter().map(|s| s.lift(z)).fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<usize> = (0..sites.len()).filter(|&i| (t2 - sites[i].lift(z)).abs() <= TIE_TOL * sites[i].d).collect();
    tied.sort();
    (t2, tied)
}

/// Upper envelope of the lifted power functions on an interval.
fn diagram_1d(sites: &[Site], lo: f64, hi: f64) -> Vec<LocalCell> {
    let slope = |i: usize| sites[i].z[0];
    let best_at = |z: f64| {
        let (_, tied) = ties(sites, &[z]);
        tied.into_iter().max_by(|&a, &b| slope(a).total_cmp(&slope(b))).expect("non-empty site list")
    };
    let mut out = Vec::new();
    let mut z = lo;
    let mut cur = best_at(lo);
    let mut prev: Option<usize> = None;
    loop {
        let next = (0..sites.len())
            .filter(|&j| slope(j) > slope(cur))
            .map(|j| {
                let x = (sites[cur].affine(&[0.0]) - sites[j].affine(&[0.0])) / (2.0 * (slope(j) - slope(cur)));
                (x, j)
            })
            .filter(|(x, _)| *x > z)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let end = next.map_or(hi, |(x, _)| x.min(hi));
        let mut bounding: Vec<usize> = prev.into_iter().collect();
        let crossing = next.filter(|(x, _)| *x < hi);
        let (t2v, tied) = crossing.map(|(x, _)| ties(sites, &[x])).unwrap_or((0.0, Vec::new()));
        let after = tied.iter().copied().filter(|&j| j != cur).max_by(|&a, &b| slope(a).total_cmp(&slope(b)));
        bounding.extend(after);
        let mid = sites[cur].z[0].clamp(z, end);
        let mid = if mid == z || mid == end { 0.5 * (z + end) } else { mid };
        out.push(LocalCell { dim: 1, sites: vec![cur], z: vec![mid], t2: sites[cur].lift(&[mid]), bounding });
        let Some((x, _)) = crossing else { break };
        out.push(LocalCell { dim: 0, sites: tied.clone(), z: vec![x], t2: t2v, bounding: Vec::new() });
        prev = Some(cur);
        cur = after.expect("a tie at a breakpoint involves two sites");
        z = x;
    }
    // Interval ends touching the window are marked by an empty side.
    if let Some(first) = out.first_mut() {
        first.bounding.insert(0, usize::MAX);
    }
    if let Some(last) = out.iter_mut().rev().find(|c| c.dim == 1) {
        last.bounding.push(usize::MAX);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Edge {
    Window,
    Site(usize),
}

/// Clips a convex polygon (vertices with the label of their outgoing edge)
/// to `a.z >= b`.
fn clip(poly: &[([f64; 2], Edge)], a: [f64; 2], b: f64, label: Edge, eps: f64) -> Vec<([f64; 2], Edge)> {
    let side = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
    let mut out = Vec::new();
    for k in 0..poly.len() {
        let (p, l) = poly[k];
        let q = poly[(k + 1) % poly.len()].0;
        let (sp, sq) = (side(&p), side(&q));
        let cut = |s: f64, t: f64| {
            let u = s / (s - t);
            [p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1])]
        };
        match (sp >= -eps, sq >= -eps) {
            (true, true) => out.push((p, l)),
            (true, false) => {
                out.push((p, l));
                out.push((cut(sp, sq), label));
            }
            (false, true) => out.push((cut(sp, sq), l)),
            (false, false) => {}
        }
    }
    let mut clean: Vec<([f64; 2], Edge)> = Vec::new();
    for v in out {
        if let Some(last) = clean.last() {
            if (last.0[0] - v.0[0]).hypot(last.0[1] - v.0[1]) <= eps {
                clean.pop();
            }
        }
        clean.push(v);
    }
    while clean.len() > 1 {
        let (f, l) = (clean[0].0, clean[clean.len() - 1].0);
        if (f[0] - l[0]).hypot(f[1] - l[1]) <= eps {
            clean.pop();
        } else {
            break;
        }
    }
    if clean.len() < 3 {
        clean.clear();
    }
    clean
}

/// Power cells of all sites inside a convex window.
fn diagram_2d(sites: &[Site], window: &[[f64; 2]], scale: f64) -> Vec<LocalCell> {
    let eps = 1e-10 * scale;
    let mut out = Vec::new();
    for i in 0..sites.len() {
        let mut poly: Vec<([f64; 2], Edge)> = window.iter().map(|p| (*p, Edge::Window)).collect();
        let (zi, ci) = (&sites[i].z, sites[i].affine(&[0.0, 0.0]));
        for j in 0..sites.len() {
            if j == i || poly.is_empty() {
                continue;
            }
            let zj = &sites[j].z;
            if (zi[0] - zj[0]).hypot(zi[1] - zj[1]) <= eps {
                continue;
            }
            let a = [2.0 * (zi[0] - zj[0]), 2.0 * (zi[1] - zj[1])];
            poly = clip(&poly, a, sites[j].affine(&[0.0, 0.0]) - ci, Edge::Site(j), eps);
        }
        if poly.is_empty() {
            continue;
        }
        let m = poly.len();
        let bounding: Vec<usize> = poly
            .iter()
            .map(|(_, l)| match l {
                Edge::Site(j) => *j,
                Edge::Window => usize::MAX,
            })
            .collect();
        let cx = poly.iter().map(|(p, _)| p[0]).sum::<f64>() / m as f64;
        let cy = poly.iter().map(|(p, _)| p[1]).sum::<f64>() / m as f64;
        let mut sample = vec![cx, cy];
        if sites[i].lift(&sample) <= 0.0 {
            sample = zi.clone();
        }
        out.push(LocalCell { dim: 2, sites: vec![i], z: sample.clone(), t2: sites[i].lift(&sample), bounding: bounding.clone() });
        for k in 0..m {
            let (p, l) = poly[k];
            let (q, _) = poly[(k + 1) % m];
            let (_, lin) = poly[(k + m - 1) % m];
            if let Edge::Site(j) = l {
                let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                let mut s = vec![i, j];
                s.sort();
                let ends = [lin, poly[(k + 1) % m].1];
                let bounding = ends.iter().map(|e| if let Edge::Site(x) = e { *x } else { usize::MAX }).collect();
                out.push(LocalCell { dim: 1, sites: s, z: mid.to_vec(), t2: sites[i].lift(&mid), bounding });
            }
            if let (Edge::Site(_), Edge::Site(_)) = (lin, l) {
                let (t2, tied) = ties(sites, &p);
                out.push(LocalCell { dim: 0, sites: tied, z: p.to_vec(), t2, bounding: Vec::new() });
            }
        }
    }
    out
}

/// A cell of the cut locus, one per Γ-orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutCell {
    pub dim: usize,
    /// The equidistant horoballs, base cusp first.
    pub horoballs: Vec<DecoratedVertex>,
    /// Fence normals `p - q` for the base `p` and each other horoball `q`.
    pub fences: Vec<MVector>,
    /// Fence normals of neighbouring horoballs; the cell satisfies
    /// `<x, u> >= 0` for each.
    pub inequalities: Vec<MVector>,
    pub sample: MVector,
    pub key: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutComplex {
    pub n: usize,
    pub cells: Vec<CutCell>,
    /// `(face, cell)` pairs with `face` of dimension one less than `cell`.
    pub incidences: Vec<(usize, usize)>,
    pub length_bound: f64,
    /// Every occurrence of a vertex of the complex found around the cusps,
    /// as its set of equidistant horoballs.
    #[serde(skip)]
    pub vertex_patch: Vec<Vec<DecoratedVertex>>,
}

impl CutComplex {
    pub fn count(&self, dim: usize) -> usize {
        self.cells.iter().filter(|c| c.dim == dim).count()
    }
}

/// Signals that the lowest point of some envelope is not certified by the
/// current length bound.
fn horizon_error(t2: f64, bound: f64) -> Error {
    Error::IncompleteCutLocus(format!("envelope height^2 {t2:.6e} is below exp(-length bound) = {:.6e}", (-bound).exp()))
}

fn local_window(local: &Local, frames: &Frames, c: usize, k: usize) -> Vec<Vec<f64>> {
    let cf = &frames.frames[c];
    if local.lattice {
        let (a, b) = WINDOW;
        let corners: Vec<Vec<f64>> = if k == 1 {
            vec![vec![a], vec![b]]
        } else {
            vec![vec![a, a], vec![b, a], vec![b, b], vec![a, b]]
        };
        return corners.iter().map(|p| cf.from_lattice_coords(p)).collect();
    }
    let r = local.sites.iter().map(|s| s.d.sqrt()).fold(0.0, f64::max) + 1.0;
    let lo: Vec<f64> = (0..k).map(|j| local.sites.iter().map(|s| s.z[j]).fold(f64::INFINITY, f64::min) - r).collect();
    let hi: Vec<f64> = (0..k).map(|j| local.sites.iter().map(|s| s.z[j]).fold(f64::NEG_INFINITY, f64::max) + r).collect();
    if k == 1 {
        vec![lo, hi]
    } else {
        vec![vec![lo[0], lo[1]], vec![hi[0], lo[1]], vec![hi[0], hi[1]], vec![lo[0], hi[1]]]
    }
}

/// Builds the cut locus from the return paths: each path contributes its
/// far end as a site around the cusp of its near end, and vice versa.
pub fn cut_locus_complex(g: &GroupSpec, frames: &Frames, paths: &[ReturnPath], length_bound: f64) -> Result<CutComplex> {
    if paths.is_empty() {
        return Err(Error::IncompleteCutLocus("no return paths".into()));
    }
    let n = g.n;
    let k = n - 1;
    let mut cells: Vec<CutCell> = Vec::new();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut incid: Vec<(usize, usize)> = Vec::new();
    let mut patch = Vec::new();
    for c in 0..g.cusps.len() {
        let mut local = Local::new(g, frames, c);
        let mut seen = HashMap::new();
        for p in paths {
            for (a, b) in [(0, 1), (1, 0)] {
                let (near, far) = (&p.ends[a], &p.ends[b]);
                if near.cusp != c {
                    continue;
                }
                let back = near.transform.inverse();
                local.add(frames, c, &far.apply(&back), &mut seen);
            }
        }
        if local.sites.is_empty() {
            continue;
        }
        let base = base_vertex(g, c);
        let window = local_window(&local, frames, c, k);
        let scale = window.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut lc = if k == 1 {
            let (lo, hi) = (window[0][0].min(window[1][0]), window[0][0].max(window[1][0]));
            diagram_1d(&local.sites, lo, hi)
        } else {
            let mut w: Vec<[f64; 2]> = window.iter().map(|p| [p[0], p[1]]).collect();
            let area: f64 = (0..4).map(|i| w[i][0] * w[(i + 1) % 4][1] - w[(i + 1) % 4][0] * w[i][1]).sum();
            if area < 0.0 {
                w.reverse();
            }
            diagram_2d(&local.sites, &w, scale)
        };
        if local.lattice {
            lc.retain(|cell| !cell.bounding.contains(&usize::MAX));
        } else {
            lc.retain(|cell| cell.t2 > 0.0);
        }
        let finv = local.frame.inverse();
        let mut ids = Vec::with_capacity(lc.len());
        for cell in &lc {
            if cell.t2 <= (-length_bound).exp() {
                return Err(horizon_error(cell.t2, length_bound));
            }
            let (t2, tied) = ties(&local.sites, &cell.z);
            let consistent = if cell.dim == 0 {
                cell.sites.iter().all(|s| tied.contains(s)) && tied.len() >= n
            } else {
                tied == cell.sites && tied.len() == n - cell.dim
            };
            if !consistent || (t2 - cell.t2).abs() > TIE_TOL * t2.abs() {
                return Err(Error::IncompleteCutLocus(format!(
                    "a {}-cell sample has {} nearest horoballs, expected {}",
                    cell.dim,
                    tied.len() + 1,
                    n - cell.dim + 1
                )));
            }
            let mut hs = vec![base.clone()];
            hs.extend(cell.sites.iter().map(|&i| local.sites[i].vertex.clone()));
            if cell.dim == 0 {
                patch.push(hs.clone());
            }
            let key = frames.canonical(&hs)?.key;
            let id = *index.entry(key.clone()).or_insert_with(|| {
                let fences = hs[1..].iter().map(|h| base.point.sub(&h.point)).collect();
                let inequalities = cell
                    .bounding
                    .iter()
                    .filter(|&&j| j != usize::MAX)
                    .map(|&j| base.point.sub(&local.sites[j].vertex.point))
                    .collect();
                let sample = finv.apply(&half_space_point(&cell.z, cell.t2.sqrt()));
                cells.push(CutCell { dim: cell.dim, horoballs: hs.clone(), fences, inequalities, sample, key });
                cells.len() - 1
            });
            ids.push(id);
        }
        for (a, fa) in lc.iter().enumerate() {
            for (b, cb) in lc.iter().enumerate() {
                if fa.dim + 1 == cb.dim && cb.sites.iter().all(|s| fa.sites.contains(s)) {
                    incid.push((ids[a], ids[b]));
                }
            }
        }
    }
    incid.sort();
    incid.dedup();
    Ok(CutComplex { n, cells, incidences: incid, length_bound, vertex_patch: patch })
}

/// Ideal cells dual to the vertices of the cut locus, with the counts of
/// the dual strata.
#[derive(Clone, Debug)]
pub struct DualDecomposition {
    /// Dual to the (n-1)-cells.
    pub edges: usize,
    /// Dual to the 1-cells; equal to `edges` when n = 2.
    pub faces: usize,
    /// Dual to the 0-cells.
    pub regions: usize,
    pub decomposition: Decomposition,
}

/// Residual of the best plane through a set of Klein points; zero when the
/// ideal points lie on a common circle of the sphere at infinity.
fn circle_residual(points: &[MVector]) -> f64 {
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut r = vec![1.0];
            r.extend(p.klein());
            r
        })
        .collect();
    let v = linalg::null_vector(&rows);
    rows.iter().map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs()).fold(0.0, f64::max)
}

/// Edges, faces and regions dual to the cut locus, with the regions
/// assembled into a decomposition of the manifold.
pub fn dual_decomposition(c: &CutComplex, g: &GroupSpec, frames: &Frames, opts: HullOptions) -> Result<DualDecomposition> {
    if c.n == 3 {
        for cell in c.cells.iter().filter(|x| x.dim == 1 && x.horoballs.len() > 3) {
            let pts: Vec<MVector> = cell.horoballs.iter().map(|h| h.point.clone()).collect();
            let r = circle_residual(&pts);
            if r > 1e-7 {
                return Err(Error::Degenerate(format!("ideal points around a 1-cell are not concyclic (residual {r:.3e})")));
            }
        }
    }
    let mut patch = Vec::with_capacity(c.vertex_patch.len());
    for hs in &c.vertex_patch {
        let cell = IdealCell::new(hs.clone(), opts)?;
        let used: Vec<bool> = (0..hs.len()).map(|i| cell.facets.iter().any(|f| f.contains(&i))).collect();
        if used.iter().any(|u| !u) {
            return Err(Error::Degenerate("dual region is not strictly convex".into()));
        }
        patch.push(cell);
    }
    let decomposition = if g.generators.is_empty() {
        let mut cells: Vec<IdealCell> = Vec::new();
        for mut cell in patch {
            let key = frames.canonical(&cell.vertices)?.key;
            if cells.iter().all(|x| x.key.as_ref() != Some(&key)) {
                cell.key = Some(key);
                cells.push(cell);
            }
        }
        let canonical_coords =
            cells.iter().map(|x| frames.canonical(&x.vertices).map(|k| k.coords)).collect::<Result<_>>()?;
        Decomposition { n: c.n, cells, pairings: Vec::new(), canonical_coords }
    } else {
        assemble_decomposition(patch, frames)?
    };
    Ok(DualDecomposition {
        edges: c.count(c.n - 1),
        faces: c.count(1),
        regions: c.count(0),
        decomposition,
    })
}

/// Outcome of matching two decompositions cell by cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    pub matched: bool,
    pub cells: usize,
    pub first_mismatch: Option<String>,
}

/// Matches cells by canonical key, then compares their canonical boundary
/// data within `1e-7`.
pub fn cross_validate(a: &Decomposition, b: &Decomposition) -> CrossReport {
    let fail = |m: String| CrossReport { matched: false, cells: a.cells.len(), first_mismatch: Some(m) };
    if a.cells.len() != b.cells.len() {
        return fail(format!("{} cells against {}", a.cells.len(), b.cells.len()));
    }
    let bkeys = b.keys();
    for (i, ka) in a.keys().iter().enumerate() {
        let Some(j) = bkeys.iter().position(|kb| kb == ka) else {
            return fail(format!("cell {i} has no counterpart"));
        };
        let (ca, cb) = (&a.canonical_coords[i], &b.canonical_coords[j]);
        let close = ca.len() == cb.len()
            && ca.iter().zip(cb).all(|(x, y)| x.iter().zip(y).all(|(u, v)| (u - v).abs() <= 1e-7 * (1.0 + u.abs())));
        if !close {
            return fail(format!("cell {i} differs geometrically from cell {j}"));
        }
    }
    CrossReport { matched: true, cells: a.cells.len(), first_mismatch: None }
}

/// Return paths and cut locus, doubling the length bound until every
/// vertex of the envelope is certified.
#[derive(Clone, Debug)]
pub struct CutLocus {
    pub paths: Vec<ReturnPath>,
    pub complex: CutComplex,
    pub options: CutLocusOptions,
}

pub fn cut_locus(g: &GroupSpec, frames: &Frames, opts: CutLocusOptions) -> Result<CutLocus> {
    let mut opts = opts;
    let mut last = None;
    for _ in 0..5 {
        let paths = enumerate_return_paths(g, frames, &opts)?;
        match cut_locus_complex(g, frames, &paths, opts.length_bound) {
            Ok(complex) => return Ok(CutLocus { paths, complex, options: opts }),
            Err(e @ Error::IncompleteCutLocus(_)) => {
                last = Some(e);
                opts.length_bound *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}
