//! Finitely generated discrete groups of Lorentz isometries and their cusp
//! orbits.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{CausalClass, Isometry, MVector};

/// A generator or its inverse: `+(k+1)` is generator `k`, `-(k+1)` its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(pub i32);

impl Letter {
    fn from_index(k: usize) -> Letter {
        let g = (k / 2) as i32 + 1;
        Letter(if k.is_multiple_of(2) { g } else { -g })
    }
}

pub type Word = Vec<Letter>;

/// Generators of a torsion-free group Γ, optional reflections τ normalising
/// Γ, and one decorated horoball (future lightlike vector) per cusp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub n: usize,
    pub generators: Vec<Isometry>,
    pub reflections: Vec<Isometry>,
    pub cusps: Vec<MVector>,
}

impl GroupSpec {
    /// Generators and inverses, interleaved as `g0, g0^-1, g1, g1^-1, ...`.
    pub fn letter_matrices(&self) -> Vec<Isometry> {
        self.generators.iter().flat_map(|g| [g.clone(), g.inverse()]).collect()
    }

    pub fn evaluate(&self, word: &[Letter]) -> Isometry {
        let mut m = Isometry::identity(self.n);
        for l in word {
            let g = &self.generators[(l.0.unsigned_abs() - 1) as usize];
            m = if l.0 > 0 { m.compose(g) } else { m.compose(&g.inverse()) };
        }
        m
    }

    pub fn with_cusps(&self, cusps: Vec<MVector>) -> GroupSpec {
        GroupSpec { cusps, ..self.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Structural checks on a group specification.
pub fn validate_group(g: &GroupSpec, tol: f64) -> ValidationReport {
    let mut failures = Vec::new();
    if !(2..=3).contains(&g.n) {
        failures.push(format!("unsupported dimension n = {}", g.n));
    }
    if g.generators.is_empty() {
        failures.push("no generators".into());
    }
    if g.cusps.is_empty() {
        failures.push("no cusp representatives".into());
    }
    for (i, m) in g.generators.iter().enumerate() {
        if m.n != g.n {
            failures.push(format!("generators[{i}]: dimension {} differs from {}", m.n, g.n));
        } else if !m.is_isometry(tol) {
            failures.push(format!("generators[{i}]: not in O+(n,1), defect {:.3e}", m.isometry_defect()));
        }
    }
    for (i, r) in g.reflections.iter().enumerate() {
        if r.n != g.n {
            failures.push(format!("reflections[{i}]: dimension {} differs from {}", r.n, g.n));
            continue;
        }
        if !r.is_isometry(tol) {
            failures.push(format!("reflections[{i}]: not in O+(n,1)"));
        }
        if !r.compose(r).approx_eq(&Isometry::identity(g.n), 1e-8) {
            failures.push(format!("reflections[{i}]: not an involution"));
        } else if let Err(e) = wall_normal(r) {
            failures.push(format!("reflections[{i}]: {e}"));
        }
    }
    for (i, p) in g.cusps.iter().enumerate() {
        if p.dim() != g.n {
            failures.push(format!("cusps[{i}]: dimension {} differs from {}", p.dim(), g.n));
        } else if p.classify(tol) != CausalClass::Lightlike || !p.is_future() {
            failures.push(format!("cusps[{i}]: not a future lightlike vector"));
        }
    }
    ValidationReport { failures }
}

/// Unit spacelike normal of the mirror of a hyperplane reflection, read off
/// the largest column of `I - R`.
pub fn wall_normal(r: &Isometry) -> Result<MVector> {
    let d = r.n + 1;
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for j in 0..d {
        let col: Vec<f64> =
            (0..d).map(|i| if i == j { 1.0 } else { 0.0 } - r.get(i, j)).collect();
        let nrm: f64 = col.iter().map(|v| v * v).sum();
        if nrm > best_norm {
            best_norm = nrm;
            best = Some(col);
        }
    }
    let u = MVector(best.ok_or_else(|| Error::Degenerate("empty matrix".into()))?);
    if best_norm < 1e-18 {
        return Err(Error::NotInvolution("identity is not a reflection".into()));
    }
    u.normalize_spacelike()
}

/// A decorated horoball `γ p_i` reached by a reduced word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub point: MVector,
    pub cusp: usize,
    pub word: Word,
    pub transform: Isometry,
}

/// Orbit of the cusp representatives, cut off at a word length and a height.
#[derive(Clone, Debug)]
pub struct Orbit {
    pub points: Vec<OrbitPoint>,
    /// Non-trivial elements found to fix each cusp representative.
    pub stabilizers: Vec<Vec<Isometry>>,
    /// Rays hit twice with different scale or cusp label.
    pub scale_conflicts: usize,
    pub word_bound: usize,
    pub height_bound: f64,
}

const KLEIN_CELL: f64 = 1e-6;
const RAY_TOL: f64 = 1e-9;
const SCALE_TOL: f64 = 1e-9;
const MAX_STABILIZERS: usize = 4000;
// Forward rounding error is tracked along each word, since a short product
// can pass through huge prefixes. Hits noisier than MAX_NOISE (in Klein
// units) are dropped, and only clean coincidences feed the stabilizers.
const EPS: f64 = f64::EPSILON;
const MAX_NOISE: f64 = 1e-9;
const MAX_STABILIZER_NOISE: f64 = 1e-11;

fn klein_noise(h: &Hit) -> f64 {
    let d = h.point.dim() as f64;
    let pmax = h.point.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    4.0 * d * (h.err + EPS * h.transform.max_abs()) * pmax.max(1.0) / h.point.0[0].abs()
}

fn cell_of(k: &[f64]) -> Vec<i64> {
    k.iter().map(|v| (v / KLEIN_CELL).floor() as i64).collect()
}

fn neighbour_cells(c: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &v in c {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-1..=1).map(move |o| {
                    let mut q = p.clone();
                    q.push(v + o);
                    q
                })
            })
            .collect();
    }
    out
}

#[derive(Clone)]
struct Hit {
    point: MVector,
    cusp: usize,
    word: Vec<u8>,
    transform: Isometry,
    /// Bound on the entrywise error of `transform`.
    err: f64,
}

fn word_order(a: &[u8], b: &[u8]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn inverse_letter(k: u8) -> u8 {
    k ^ 1
}

/// Spatial hash of orbit points keyed by Klein coordinates.
struct PointSet {
    cells: HashMap<Vec<i64>, Vec<usize>>,
    hits: Vec<Hit>,
    stabilizers: Vec<Vec<Isometry>>,
    conflicts: usize,
}

enum Match {
    Same(usize),
    Conflict,
    New,
}

impl PointSet {
    fn new(ncusps: usize) -> Self {
        PointSet { cells: HashMap::new(), hits: Vec::new(), stabilizers: vec![Vec::new(); ncusps], conflicts: 0 }
    }

    fn find(&self, p: &MVector, cusp: usize, slack: f64) -> Match {
        let k = p.klein();
        for c in neighbour_cells(&cell_of(&k)) {
            if let Some(ids) = self.cells.get(&c) {
                for &id in ids {
                    let q = &self.hits[id];
                    let kq = q.point.klein();
                    let dk = k.iter().zip(&kq).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    let tol = RAY_TOL + slack + klein_noise(q);
                    if dk > tol {
                        continue;
                    }
                    let rel = (p.0[0] - q.point.0[0]).abs() / p.0[0];
                    if rel <= SCALE_TOL + tol && q.cusp == cusp {
                        return Match::Same(id);
                    }
                    return Match::Conflict;
                }
            }
        }
        Match::New
    }

    fn record_stabilizer(&mut self, cusp: usize, s: Isometry) {
        let list = &mut self.stabilizers[cusp];
        if list.len() >= MAX_STABILIZERS || s.approx_eq(&Isometry::identity(s.n), 1e-9) {
            return;
        }
        if list.iter().any(|t| t.approx_eq(&s, 1e-9)) {
            return;
        }
        list.push(s);
    }

    fn insert(&mut self, h: Hit) {
        let slack = klein_noise(&h);
        if slack > MAX_NOISE {
            return;
        }
        match self.find(&h.point, h.cusp, slack) {
            Match::Same(id) => {
                let old = &self.hits[id];
                if slack + klein_noise(old) <= MAX_STABILIZER_NOISE {
                    let s = old.transform.inverse().compose(&h.transform);
                    self.record_stabilizer(h.cusp, s);
                }
                if word_order(&h.word, &self.hits[id].word).is_lt() {
                    self.hits[id] = h;
                }
            }
            Match::Conflict => self.conflicts += 1,
            Match::New => {
                let c = cell_of(&h.point.klein());
                self.cells.entry(c).or_default().push(self.hits.len());
                self.hits.push(h);
            }
        }
    }
}

fn dfs(
    letters: &[Isometry],
    cusps: &[MVector],
    word_bound: usize,
    keep: &(dyn Fn(&MVector) -> bool + Sync),
    word: &mut Vec<u8>,
    m: &Isometry,
    err: f64,
    out: &mut Vec<Hit>,
) {
    for (ci, p) in cusps.iter().enumerate() {
        let q = m.apply(p);
        if keep(&q) {
            out.push(Hit { point: q, cusp: ci, word: word.clone(), transform: m.clone(), err });
        }
    }
    if word.len() == word_bound {
        return;
    }
    for (k, x) in letters.iter().enumerate() {
        let k = k as u8;
        if word.last().is_some_and(|&l| l == inverse_letter(k)) {
            continue;
        }
        word.push(k);
        let d = (m.n + 1) as f64;
        let next = d * (err + EPS * m.max_abs()) * x.max_abs();
        dfs(letters, cusps, word_bound, keep, word, &m.compose(x), next, out);
        word.pop();
    }
}

/// Enumerates `γ p_i` over reduced words of length at most `word_bound`,
/// keeping points with `x0 <= height_bound`. Duplicates keep the shortest
/// word (then the lexicographically smallest one); the elements relating
/// duplicates are collected as cusp stabilizers.
pub fn orbit(g: &GroupSpec, word_bound: usize, height_bound: f64) -> Orbit {
    let mut o = orbit_where(g, word_bound, &|p: &MVector| p.0[0] <= height_bound);
    o.height_bound = height_bound;
    o
}

/// Like [`orbit`], keeping the points accepted by `keep` instead of those
/// below a height. The returned height bound is infinite.
pub fn orbit_where(g: &GroupSpec, word_bound: usize, keep: &(dyn Fn(&MVector) -> bool + Sync)) -> Orbit {
    let letters = g.letter_matrices();
    let id = Isometry::identity(g.n);
    let mut roots: Vec<Vec<Hit>> = (0..letters.len())
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            if word_bound > 0 {
                let mut w = vec![k as u8];
                let err = EPS * letters[k].max_abs();
                dfs(&letters, &g.cusps, word_bound, keep, &mut w, &letters[k], err, &mut out);
            }
            out
        })
        .collect();
    let mut base = Vec::new();
    for (ci, p) in g.cusps.iter().enumerate() {
        if keep(p) {
            base.push(Hit { point: p.clone(), cusp: ci, word: Vec::new(), transform: id.clone(), err: 0.0 });
        }
    }
    roots.insert(0, base);

    let mut all: Vec<Hit> = roots.into_iter().flatten().collect();
    all.sort_by(|a, b| word_order(&a.word, &b.word).then(a.cusp.cmp(&b.cusp)));
    let mut set = PointSet::new(g.cusps.len());
    for h in all {
        set.insert(h);
    }

    let mut points: Vec<OrbitPoint> = set
        .hits
        .into_iter()
        .map(|h| OrbitPoint {
            word: h.word.iter().map(|&k| Letter::from_index(k as usize)).collect(),
            point: h.point,
            cusp: h.cusp,
            transform: h.transform,
        })
        .collect();
    points.sort_by(|a, b| {
        a.point.0[0]
            .total_cmp(&b.point.0[0])
            .then_with(|| {
                let (ka, kb) = (a.point.klein(), b.point.klein());
                ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(a.cusp.cmp(&b.cusp))
    });
    Orbit {
        points,
        stabilizers: set.stabilizers,
        scale_conflicts: set.conflicts,
        word_bound,
        height_bound: f64::INFINITY,
    }
}

/// All reduced words of length at most `max_len` with their matrices, in
/// shortlex order.
pub fn elements(g: &GroupSpec, max_len: usize) -> Vec<(Word, Isometry)> {
    let letters = g.letter_matrices();
    let mut out: Vec<(Vec<u8>, Isometry)> = vec![(Vec::new(), Isometry::identity(g.n))];
    let mut frontier = 0;
    for _ in 0..max_len {
        let end = out.len();
        for i in frontier..end {
            let (w, m) = out[i].clone();
            for (k, x) in letters.iter().enumerate() {
                let k = k as u8;
                if w.last().is_some_and(|&l| l == inverse_letter(k)) {
                    continue;
                }
                let mut w2 = w.clone();
                w2.push(k);
                out.push((w2, m.compose(x)));
            }
        }
        frontier = end;
    }
    out.into_iter()
        .map(|(w, m)| (w.iter().map(|&k| Letter::from_index(k as usize)).collect(), m))
        .collect()
}

/// Outcome of checking that a reflection normalises the group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionCertificate {
    pub certified: bool,
    /// For each generator `γ`, a word equal to `τ γ τ`, if one was found.
    pub conjugates: Vec<Option<Word>>,
}

/// Checks that `τ^2 = I` and that every `τ γ τ^{-1}` is a word of length at
/// most `max_len` in the generators.
pub fn validate_reflection(tau: &Isometry, g: &GroupSpec, max_len: usize) -> Result<ReflectionCertificate> {
    if tau.n != g.n {
        return Err(Error::DimensionMismatch { expected: g.n, got: tau.n });
    }
    if !tau.compose(tau).approx_eq(&Isometry::identity(g.n), 1e-8) {
        return Err(Error::NotInvolution(format!(
            "|τ² - I| = {:.3e}",
            tau.compose(tau).max_abs_diff(&Isometry::identity(g.n))
        )));
    }
    let words = elements(g, max_len);
    let conjugates: Vec<Option<Word>> = g
        .generators
        .iter()
        .map(|gamma| {
            let target = tau.compose(gamma).compose(tau);
            words.iter().find(|(_, m)| m.approx_eq(&target, 1e-9)).map(|(w, _)| w.clone())
        })
        .collect();
    Ok(ReflectionCertificate { certified: conjugates.iter().all(Option::is_some), conjugates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{psl2_to_lorentz, Psl2};

    fn thrice_punctured() -> GroupSpec {
        let a = psl2_to_lorentz(&Psl2::Real([[1.0, 2.0], [0.0, 1.0]])).unwrap();
        let b = psl2_to_lorentz(&Psl2::Real([[1.0, 0.0], [2.0, 1.0]])).unwrap();
        GroupSpec {
            n: 2,
            generators: vec![a, b],
            reflections: vec![],
            cusps: vec![MVector(vec![2.0, 2.0, 0.0])],
        }
    }

    #[test]
    fn evaluate_matches_products() {
        let g = thrice_punctured();
        let w = vec![Letter(1), Letter(-2), Letter(1)];
        let m = g.generators[0].compose(&g.generators[1].inverse()).compose(&g.generators[0]);
        assert!(g.evaluate(&w).approx_eq(&m, 1e-14));
    }

    #[test]
    fn orbit_words_reproduce_points() {
        let g = thrice_punctured();
        let o = orbit(&g, 4, 50.0);
        assert!(o.points.len() > 5);
        assert_eq!(o.scale_conflicts, 0);
        for p in &o.points {
            let q = g.evaluate(&p.word).apply(&g.cusps[p.cusp]);
            for (a, b) in q.0.iter().zip(&p.point.0) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
            assert!(p.point.0[0] <= 50.0);
        }
        // the parabolic generator fixes the cusp at infinity
        assert!(o.stabilizers[0].iter().any(|s| s.approx_eq(&g.generators[0], 1e-9)
            || s.approx_eq(&g.generators[0].inverse(), 1e-9)));
    }

    #[test]
    fn orbit_has_no_duplicates() {
        let g = thrice_punctured();
        let o = orbit(&g, 5, 30.0);
        for (i, a) in o.points.iter().enumerate() {
            for b in &o.points[i + 1..] {
                let d = a.point.klein().iter().zip(b.point.klein()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(d > 1e-9);
            }
        }
    }

    #[test]
    fn validation_flags_bad_input() {
        let mut g = thrice_punctured();
        assert!(validate_group(&g, 1e-9).ok());
        g.cusps.push(MVector(vec![1.0, 0.5, 0.0]));
        g.generators[1].m[0] += 0.1;
        let r = validate_group(&g, 1e-9);
        assert_eq!(r.failures.len(), 2);
    }

    #[test]
    fn reflection_certificate() {
        let g = thrice_punctured();
        // z -> -conj(z) normalises the group
        let tau = Isometry::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, -1.0],
        ])
        .unwrap();
        let c = validate_reflection(&tau, &g, 2).unwrap();
        assert!(c.certified);
        let not_inv = g.generators[0].clone();
        assert!(validate_reflection(&not_inv, &g, 2).is_err());
        let u = wall_normal(&tau).unwrap();
        assert!((u.0[2].abs() - 1.0).abs() < 1e-12);
    }
}
