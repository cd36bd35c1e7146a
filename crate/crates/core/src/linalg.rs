//! Small dense solves on top of nalgebra.

use nalgebra::DMatrix;

fn to_matrix(rows: &[Vec<f64>], pad_to: usize) -> DMatrix<f64> {
    let cols = rows.first().map_or(0, |r| r.len());
    let nrows = rows.len().max(pad_to);
    DMatrix::from_fn(nrows, cols, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 })
}

/// Least-squares solution of `A x = b`, with the numerical rank of `A`.
pub fn lstsq(rows: &[Vec<f64>], b: &[f64], rel_tol: f64) -> (Vec<f64>, usize) {
    let a = to_matrix(rows, 0);
    let bv = nalgebra::DVector::from_column_slice(b);
    let svd = a.svd(true, true);
    let top = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let r = svd.singular_values.iter().filter(|&&v| v > rel_tol * top).count();
    let x = svd.solve(&bv, rel_tol * top).expect("u and v were computed");
    (x.iter().copied().collect(), r)
}

/// Unit vector spanning the (approximate) kernel of `A`, taken as the right
/// singular vector of the smallest singular value.
pub fn null_vector(rows: &[Vec<f64>]) -> Vec<f64> {
    let cols = rows[0].len();
    let a = to_matrix(rows, cols);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v was computed");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    vt.row(k).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        let rows = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let (x, r) = lstsq(&rows, &[3.0, 5.0], 1e-12);
        assert_eq!(r, 2);
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn kernel_of_wide_matrix() {
        let rows = vec![vec![1.0, 0.0, -1.0], vec![0.0, 1.0, -1.0]];
        let v = null_vector(&rows);
        assert!((v[0] - v[2]).abs() < 1e-12 && (v[1] - v[2]).abs() < 1e-12);
    }
}
