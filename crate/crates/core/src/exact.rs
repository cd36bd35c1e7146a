//! Rational arithmetic on floating point inputs.
//!
//! Every finite `f64` is a dyadic rational, so converting it to a
//! `BigRational` is exact. Signs of products and determinants computed here
//! are therefore exact for the given inputs.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// Exact Lorentz product.
pub fn lorentz_exact(x: &[f64], y: &[f64]) -> BigRational {
    let mut s = -(rational(x[0]) * rational(y[0]));
    for i in 1..x.len() {
        s += rational(x[i]) * rational(y[i]);
    }
    s
}

/// Exact determinant of a square matrix given by rows.
pub fn det_exact(rows: &[Vec<f64>]) -> BigRational {
    let d = rows.len();
    let mut a: Vec<Vec<BigRational>> =
        rows.iter().map(|r| r.iter().map(|&v| rational(v)).collect()).collect();
    let mut det = BigRational::from_integer(1.into());
    for c in 0..d {
        let Some(p) = (c..d).find(|&r| !a[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det *= piv.clone();
        for r in (c + 1)..d {
            if a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone() / piv.clone();
            for k in c..d {
                let t = f.clone() * a[c][k].clone();
                a[r][k] -= t;
            }
        }
    }
    det
}

/// Exact sign of a determinant.
pub fn det_sign(rows: &[Vec<f64>]) -> Ordering {
    let d = det_exact(rows);
    if d.is_zero() {
        Ordering::Equal
    } else if d.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}
