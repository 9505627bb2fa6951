//! Tiny dense solvers for the 2×2 and 3×3 normal equations used by the fits.

use crate::num::Scalar;

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes relative to the matrix scale.
pub(crate) fn solve3<T: Scalar>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if !(scale > T::zero()) {
        return None;
    }
    let tiny = scale * T::epsilon() * T::lit(16.0);
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if !(a[piv][col].abs() > tiny) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let pivot = a[col];
            let f = a[row][col] / pivot[col];
            for (v, &p) in a[row].iter_mut().zip(&pivot).skip(col) {
                *v = *v - f * p;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s = s - a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Inverse of a symmetric 2×2 matrix; `None` if it is numerically singular.
pub(crate) fn inverse_sym2<T: Scalar>(m: [[T; 2]; 2], rel_tol: T) -> Option<[[T; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = (m[0][0] * m[1][1]).abs();
    if !(scale > T::zero()) || !(det.abs() > rel_tol * scale) {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve3_recovers_known_solution() {
        let a: [[f64; 3]; 3] = [[0.0, 2.0, 1.0], [1.0, 1.0, 1.0], [2.0, 1.0, 3.0]];
        let x = [1.0, -2.0, 0.5];
        let b = [
            a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2],
            a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
            a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2],
        ];
        let got = solve3(a, b).unwrap();
        for i in 0..3 {
            assert!((got[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_systems_are_rejected() {
        assert!(solve3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]], [1.0; 3]).is_none());
        assert!(inverse_sym2([[1.0, 2.0], [2.0, 4.0]], 1e-12).is_none());
        let inv = inverse_sym2([[2.0f64, 1.0], [1.0, 2.0]], 1e-12).unwrap();
        assert!((inv[0][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((inv[0][1] + 1.0 / 3.0).abs() < 1e-15);
    }
}
