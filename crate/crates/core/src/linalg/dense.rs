//! Dense complex helpers on top of nalgebra: sorted Hermitian
//! eigendecomposition and matrix exponentials.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest entry magnitude; zero for empty matrices.
pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ‖M − M†‖_max.
pub fn hermiticity_residual(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// ascending and eigenvectors as the matching columns.
///
/// The input is symmetrized as (M + M†)/2 first so that callers may pass
/// matrices carrying roundoff-level asymmetry.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigen needs a square matrix");
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps degenerate eigenvector order deterministic.
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_hermitian(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    hermitian_eigen(m).0[0]
}

/// e^{M} for Hermitian M scaled by a real factor: e^{scale·M} = V e^{scale·λ} V†.
pub fn expm_hermitian(m: &CMat, scale: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut d = CVec::zeros(n);
    for k in 0..n {
        d[k] = C64::new((scale * vals[k]).exp(), 0.0);
    }
    &vecs * CMat::from_diagonal(&d) * vecs.adjoint()
}

/// General matrix exponential by scaling-and-squaring with a Padé(13)
/// approximant. Used for non-normal integrands (ordered product integrals);
/// Hermitian callers should prefer [`expm_hermitian`].
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm: f64 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    // theta_13 for double precision per Higham (2005).
    let theta = 5.371920351148152;
    let squarings = if norm > theta {
        (norm / theta).log2().ceil() as u32
    } else {
        0
    };
    let a = a.scale((0.5f64).powi(squarings as i32));

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id = CMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6.scale(B[13]) + &a4.scale(B[11]) + &a2.scale(B[9]))
        + &a6.scale(B[7])
        + &a4.scale(B[5])
        + &a2.scale(B[3])
        + &id.scale(B[1]);
    let u = &a * u_inner;
    let v = &a6 * (&a6.scale(B[12]) + &a4.scale(B[10]) + &a2.scale(B[8]))
        + &a6.scale(B[6])
        + &a4.scale(B[4])
        + &a2.scale(B[2])
        + &id.scale(B[0]);
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut result = lhs
        .lu()
        .solve(&rhs)
        .expect("Pade denominator is singular: input norm too extreme");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigen_sorts_and_reconstructs() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.0, -1.0),
                c(0.5, 0.0),
                c(0.0, 1.0),
                c(-1.0, 0.0),
                c(0.0, 0.0),
                c(0.5, 0.0),
                c(0.0, 0.0),
                c(0.3, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let mut d = CVec::zeros(3);
        for k in 0..3 {
            d[k] = c(vals[k], 0.0);
        }
        let rebuilt = &vecs * CMat::from_diagonal(&d) * vecs.adjoint();
        assert!(max_abs_entry(&(&rebuilt - &m)) < 1e-12);
    }

    #[test]
    fn expm_hermitian_matches_scalar() {
        let m = CMat::from_row_slice(1, 1, &[c(-0.7, 0.0)]);
        let e = expm_hermitian(&m, 2.0);
        assert_abs_diff_eq!(e[(0, 0)].re, (-1.4f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn expm_matches_hermitian_route() {
        // Oracle: independent eigendecomposition route on a random Hermitian.
        let m = CMat::from_row_slice(
            2,
            2,
            &[c(0.3, 0.0), c(0.2, 0.4), c(0.2, -0.4), c(-1.1, 0.0)],
        );
        let a = expm(&m);
        let b = expm_hermitian(&m, 1.0);
        assert!(max_abs_entry(&(&a - &b)) < 1e-12);
    }

    #[test]
    fn expm_nilpotent_is_polynomial() {
        // N² = 0 so e^N = I + N exactly.
        let n = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(3.0, -1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = expm(&n);
        let expect = CMat::identity(2, 2) + &n;
        assert!(max_abs_entry(&(&e - &expect)) < 1e-13);
    }

    #[test]
    fn expm_handles_large_norm_by_squaring() {
        let m = CMat::from_row_slice(1, 1, &[c(40.0, 0.0)]);
        let e = expm(&m);
        assert!((e[(0, 0)].re / 40f64.exp() - 1.0).abs() < 1e-10);
    }
}
