//! Horoball decorations: distances, short cuts and middle fences.
//!
//! A horoball is a future lightlike vector `p`; its horosphere is
//! `{x : <x,p> = -1}` and its interior `{x : -1 < <x,p> < 0}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{CausalClass, MVector, ModelPoint};

const LIGHT_TOL: f64 = 1e-9;

fn check_horoball(p: &MVector) -> Result<()> {
    if p.classify(LIGHT_TOL) != CausalClass::Lightlike || !p.is_future() {
        return Err(Error::NotLightlike(p.lorentz(p)));
    }
    Ok(())
}

fn check_pair(p: &MVector, q: &MVector) -> Result<f64> {
    check_horoball(p)?;
    check_horoball(q)?;
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let m = -p.lorentz(q);
    if m <= 1e-12 * p.0[0] * q.0[0] {
        return Err(Error::SameIdealPoint);
    }
    Ok(m)
}

/// Signed distance between two horoballs, `log(-<p,q>/2)`. Negative when
/// they overlap.
pub fn horoball_distance(p: &MVector, q: &MVector) -> Result<f64> {
    Ok((check_pair(p, q)? / 2.0).ln())
}

/// The geodesic segment orthogonal to both horospheres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortCut {
    pub p: MVector,
    pub q: MVector,
    /// Foot points on the horospheres of `p` and `q`.
    pub endpoints: [ModelPoint; 2],
    pub length: f64,
}

impl ShortCut {
    /// Hyperboloid point at the midpoint of the segment.
    pub fn midpoint(&self) -> MVector {
        let m = -self.p.lorentz(&self.q);
        self.p.add(&self.q).scale(1.0 / (2.0 * m).sqrt())
    }
}

/// Short cut between two disjoint horoballs. The foot point on the
/// horosphere of `p` is `p/2 + q/m` with `m = -<p,q>`.
pub fn short_cut(p: &MVector, q: &MVector) -> Result<ShortCut> {
    let m = check_pair(p, q)?;
    let length = (m / 2.0).ln();
    if length < -1e-12 {
        return Err(Error::Overlapping(length));
    }
    let ep = p.scale(0.5).add(&q.scale(1.0 / m));
    let eq = q.scale(0.5).add(&p.scale(1.0 / m));
    Ok(ShortCut {
        p: p.clone(),
        q: q.clone(),
        endpoints: [ModelPoint::hyperboloid(&ep), ModelPoint::hyperboloid(&eq)],
        length: length.max(0.0),
    })
}

/// The hyperplane of points equidistant from two horoballs, `(p - q)^perp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiddleFence {
    pub p: MVector,
    pub q: MVector,
    /// Spacelike normal `p - q`; `<x, normal> > 0` on the side nearer to `p`.
    pub normal: MVector,
}

impl MiddleFence {
    /// Positive on the side closer to `p`.
    pub fn side(&self, x: &MVector) -> f64 {
        x.lorentz(&self.normal)
    }

    pub fn contains(&self, x: &MVector, tol: f64) -> bool {
        self.side(x).abs() <= tol * x.euclid_norm() * self.normal.euclid_norm()
    }
}

pub fn middle_fence(p: &MVector, q: &MVector) -> Result<MiddleFence> {
    check_pair(p, q)?;
    Ok(MiddleFence { p: p.clone(), q: q.clone(), normal: p.sub(q) })
}

/// Radius `½·sqrt(1 + 2e^{-d})` of the shadow of a horoball at distance `d`
/// from the height-one horoball at infinity.
pub fn shadow_radius(d: f64) -> Result<f64> {
    if d < 0.0 || d.is_nan() {
        return Err(Error::NegativeDistance(d));
    }
    Ok(0.5 * (1.0 + 2.0 * (-d).exp()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ideal(dir: &[f64], scale: f64) -> MVector {
        let r = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![scale];
        x.extend(dir.iter().map(|v| scale * v / r));
        MVector(x)
    }

    // horoball at infinity of height h and one tangent to the boundary at 0
    // with Euclidean diameter D, in the Hermitian half-space chart
    fn at_infinity(h: f64) -> MVector {
        MVector(vec![h, h, 0.0])
    }
    fn at_zero(diam: f64) -> MVector {
        MVector(vec![1.0 / diam, -1.0 / diam, 0.0])
    }

    #[test]
    fn distance_against_euclidean_picture() {
        // gap between height h and top of a ball of diameter D is log(h/D)
        for (h, dd) in [(1.0, 0.5), (2.0, 0.1), (3.0, 3.0)] {
            let d = horoball_distance(&at_infinity(h), &at_zero(dd)).unwrap();
            assert!((d - (h / dd).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn same_point_rejected() {
        let p = at_infinity(1.0);
        assert!(matches!(horoball_distance(&p, &p.scale(2.0)), Err(Error::SameIdealPoint)));
        assert!(horoball_distance(&p, &MVector(vec![1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn short_cut_endpoints_on_horospheres() {
        let p = at_infinity(2.0);
        let q = at_zero(0.5);
        let s = short_cut(&p, &q).unwrap();
        let a = MVector(s.endpoints[0].coords.clone());
        let b = MVector(s.endpoints[1].coords.clone());
        assert!((a.lorentz(&p) + 1.0).abs() < 1e-14);
        assert!((b.lorentz(&q) + 1.0).abs() < 1e-14);
        assert!((a.lorentz(&a) + 1.0).abs() < 1e-14);
        assert!(((-a.lorentz(&b)).acosh() - s.length).abs() < 1e-12);
        assert!((s.length - 4.0f64.ln()).abs() < 1e-14);
        assert!(short_cut(&at_infinity(1.0), &at_zero(2.0)).is_err());
    }

    #[test]
    fn fence_contains_midpoint() {
        let p = at_infinity(1.5);
        let q = at_zero(0.3);
        let f = middle_fence(&p, &q).unwrap();
        let mid = short_cut(&p, &q).unwrap().midpoint();
        assert!(f.contains(&mid, 1e-12));
        assert!((mid.lorentz(&mid) + 1.0).abs() < 1e-12);
        // a point deep in the horoball at infinity is on p's side
        assert!(f.side(&MVector(vec![50.005, 49.995, 0.0])) > 0.0);
    }

    #[test]
    fn shadow_formula_values() {
        assert!((shadow_radius(0.0).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((shadow_radius(1.0).unwrap() - 0.658_741_0).abs() < 1e-7);
        assert!(shadow_radius(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn short_cut_is_orthogonal(a in prop::collection::vec(-1.0f64..1.0, 3),
                                   b in prop::collection::vec(-1.0f64..1.0, 3),
                                   sa in 0.5f64..3.0, sb in 0.5f64..3.0) {
            let p = ideal(&a, sa);
            let q = ideal(&b, sb);
            prop_assume!(p.0.iter().all(|v| v.is_finite()) && q.0.iter().all(|v| v.is_finite()));
            prop_assume!(horoball_distance(&p, &q).map(|d| d > 0.05).unwrap_or(false));
            let s = short_cut(&p, &q).unwrap();
            let e = MVector(s.endpoints[0].coords.clone());
            // tangent of the geodesic at e is parallel to the horosphere
            // normal p + <p,e> e
            let f = MVector(s.endpoints[1].coords.clone());
            let c = -e.lorentz(&f);
            let tangent = f.sub(&e.scale(c));
            let normal = p.add(&e.scale(p.lorentz(&e)));
            let tt = tangent.lorentz(&tangent);
            let nn = normal.lorentz(&normal);
            let tn = tangent.lorentz(&normal);
            prop_assert!((tn * tn - tt * nn).abs() <= 1e-8 * tt * nn);
        }

        #[test]
        fn distance_is_isometry_invariant(s in -2.0f64..2.0, h in 0.3f64..3.0, dd in 0.1f64..2.0) {
            let p = at_infinity(h);
            let q = at_zero(dd);
            let b = crate::minkowski::Isometry::from_rows(&[
                vec![s.cosh(), 0.0, s.sinh()],
                vec![0.0, 1.0, 0.0],
                vec![s.sinh(), 0.0, s.cosh()],
            ]).unwrap();
            let d1 = horoball_distance(&p, &q).unwrap();
            let d2 = horoball_distance(&b.apply(&p), &b.apply(&q)).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-10);
        }
    }
}
