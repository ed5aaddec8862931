//! Small dense linear-algebra helpers on complex matrices.

use nalgebra::SVD;

use crate::{CMat, CVec, C64};

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// 2-norm condition number; `f64::INFINITY` for an exactly singular matrix.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = singular_values(m);
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Conjugate transpose.
pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

/// Matrix exponential (scaling and squaring with a degree-13 Padé approximant).
pub fn expm(m: &CMat) -> CMat {
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return identity(m.nrows());
    }
    m.exp()
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

/// Extract the `(bi, bj)` block of size `s × s`.
pub fn block(m: &CMat, s: usize, bi: usize, bj: usize) -> CMat {
    m.view((bi * s, bj * s), (s, s)).into_owned()
}

/// Assemble a `2s × 2s` matrix from four `s × s` blocks.
pub fn from_blocks(b11: &CMat, b12: &CMat, b21: &CMat, b22: &CMat) -> CMat {
    let s = b11.nrows();
    let mut out = CMat::zeros(2 * s, 2 * s);
    out.view_mut((0, 0), (s, s)).copy_from(b11);
    out.view_mut((0, s), (s, s)).copy_from(b12);
    out.view_mut((s, 0), (s, s)).copy_from(b21);
    out.view_mut((s, s), (s, s)).copy_from(b22);
    out
}

/// `Σ x_i · conj(y_i)`, the bilinear pairing `x · ȳ`.
pub fn dot_conj(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Orthonormal basis of the numerical null space: right singular vectors whose
/// singular value is at most `threshold`. Sorted by increasing singular value.
pub fn null_space(m: &CMat, threshold: f64) -> Vec<CVec> {
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("requested V");
    let n = svd.singular_values.len();
    let mut out = Vec::new();
    for i in (0..n).rev() {
        if svd.singular_values[i] <= threshold {
            out.push(v_t.row(i).adjoint().into_owned());
        }
    }
    out
}

/// Right singular vector for the smallest singular value.
pub fn smallest_right_singular_vector(m: &CMat) -> (f64, CVec) {
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("requested V");
    let n = svd.singular_values.len();
    (
        svd.singular_values[n - 1],
        v_t.row(n - 1).adjoint().into_owned(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_nilpotent() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = C64::new(1.0, 0.0);
        let e = expm(&(a * C64::new(0.5, 0.0)));
        assert!((e[(0, 1)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((e[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.len(), 1);
        assert!((&m * &ns[0]).norm() < 1e-14);
    }

    #[test]
    fn singular_values_sorted() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(0.5, 0.0),
            C64::new(3.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        assert_eq!(singular_values(&m), vec![3.0, 1.0, 0.5]);
        assert!((condition_number(&m) - 6.0).abs() < 1e-14);
    }
}
