//! Small dense-tensor helpers used in the per-bond hot loop.

use nalgebra::{Matrix3, Vector3};

/// Eigenvalues of a symmetric 3×3 matrix in descending order.
///
/// Closed-form trigonometric solution of the characteristic cubic; only the
/// upper triangle of `a` is read.
#[inline]
pub fn sym_eigenvalues(a: &Matrix3<f64>) -> [f64; 3] {
    let (a11, a22, a33) = (a[(0, 0)], a[(1, 1)], a[(2, 2)]);
    let (a12, a13, a23) = (a[(0, 1)], a[(0, 2)], a[(1, 2)]);
    let p1 = a12 * a12 + a13 * a13 + a23 * a23;
    if p1 == 0.0 {
        let mut e = [a11, a22, a33];
        e.sort_by(|x, y| y.total_cmp(x));
        return e;
    }
    let q = (a11 + a22 + a33) / 3.0;
    let (b11, b22, b33) = (a11 - q, a22 - q, a33 - q);
    let p2 = b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q, q, q];
    }
    let inv = 1.0 / p;
    let (c11, c22, c33) = (b11 * inv, b22 * inv, b33 * inv);
    let (c12, c13, c23) = (a12 * inv, a13 * inv, a23 * inv);
    let det = c11 * (c22 * c33 - c23 * c23) - c12 * (c12 * c33 - c23 * c13) + c13 * (c12 * c23 - c22 * c13);
    let r = (0.5 * det).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

/// `a ⊗ b`.
#[inline]
pub fn outer(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    a * b.transpose()
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    #[test]
    fn diagonal_and_repeated() {
        let d = Matrix3::from_diagonal(&Vector3::new(1.0, -3.0, 2.0));
        assert_eq!(sym_eigenvalues(&d), [2.0, 1.0, -3.0]);
        let i = Matrix3::identity() * 4.0;
        assert_eq!(sym_eigenvalues(&i), [4.0, 4.0, 4.0]);
    }

    proptest! {
        #[test]
        fn matches_iterative_solver(v in proptest::collection::vec(-2.0f64..2.0, 6)) {
            let m = Matrix3::new(v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5]);
            let mut reference: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
            reference.sort_by(|a, b| b.total_cmp(a));
            let ours = sym_eigenvalues(&m);
            for k in 0..3 {
                prop_assert!((ours[k] - reference[k]).abs() < 1e-12);
            }
        }
    }
}
