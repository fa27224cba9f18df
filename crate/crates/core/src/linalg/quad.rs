//! One-dimensional quadrature: Gauss-Legendre and Gauss-Hermite rules,
//! adaptive Simpson, and Romberg-extrapolated trapezoids.

use nalgebra::DMatrix;

/// Gauss-Legendre nodes (ascending, inside (-1,1)) and weights for n points.
/// Exact for polynomials of degree 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    // Newton on P_n from the Chebyshev-like initial guess; roots come out
    // descending in i, so fill from the back to keep the result ascending.
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Enforce the exact ± symmetry of the rule.
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Hermite nodes (ascending) and weights for ∫ e^{-x²} f(x) dx with n
/// points, via the Golub-Welsch eigenproblem of the Jacobi matrix. Exact for
/// polynomials of degree 2n-1.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = j.symmetric_eigen();
    let mu0 = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let first = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * first * first)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    // The rule is symmetric about zero; enforce it exactly.
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Adaptive Simpson with Richardson correction. `tol` is an absolute target
/// for the whole interval.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
    }
}

/// Composite trapezoid values for 2^k panels, k = 0..levels, computed
/// incrementally so level k reuses all prior evaluations.
pub fn trapezoid_sequence<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, levels: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(levels + 1);
    let mut t = 0.5 * (b - a) * (f(a) + f(b));
    out.push(t);
    let mut panels = 1usize;
    for _ in 0..levels {
        let h = (b - a) / panels as f64;
        let mut sum = 0.0;
        for i in 0..panels {
            sum += f(a + (i as f64 + 0.5) * h);
        }
        t = 0.5 * t + 0.5 * h * sum;
        panels *= 2;
        out.push(t);
    }
    out
}

/// Romberg extrapolation of the trapezoid sequence until two diagonal
/// entries agree within `tol` (absolute). Panics if 2^16 panels are not
/// enough; callers are expected to have smoothed out singularities first.
pub fn richardson_trapezoid<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    const MAX_LEVEL: usize = 16;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut t = 0.5 * (b - a) * (f(a) + f(b));
    rows.push(vec![t]);
    let mut panels = 1usize;
    for level in 1..=MAX_LEVEL {
        let h = (b - a) / panels as f64;
        let mut sum = 0.0;
        for i in 0..panels {
            sum += f(a + (i as f64 + 0.5) * h);
        }
        t = 0.5 * t + 0.5 * h * sum;
        panels *= 2;
        let mut row = vec![t];
        let prev = &rows[level - 1];
        let mut pow4 = 1.0;
        for k in 0..prev.len() {
            pow4 *= 4.0;
            let v = row[k] + (row[k] - prev[k]) / (pow4 - 1.0);
            row.push(v);
        }
        let best = *row.last().unwrap();
        let prev_best = *prev.last().unwrap();
        if level >= 3 && (best - prev_best).abs() <= tol {
            return best;
        }
        rows.push(row);
    }
    panic!("richardson_trapezoid failed to reach tol={tol} within 2^16 panels");
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn legendre_two_point_rule_is_closed_form() {
        let (nodes, weights) = gauss_legendre(2);
        assert_abs_diff_eq!(nodes[0], -1.0 / 3.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(nodes[1], 1.0 / 3.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(weights[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(weights[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_integrates_high_degree_monomials() {
        let (nodes, weights) = gauss_legendre(5);
        // Degree 8 <= 2n-1 = 9, so the rule is exact: integral is 2/9.
        let got: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * x.powi(8))
            .sum();
        assert_abs_diff_eq!(got, 2.0 / 9.0, epsilon = 1e-13);
        // Odd monomials vanish by symmetry.
        let odd: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * x.powi(7))
            .sum();
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn hermite_moments_match_closed_forms() {
        let (nodes, weights) = gauss_hermite(4);
        let sqrt_pi = PI.sqrt();
        let m0: f64 = weights.iter().sum();
        assert_abs_diff_eq!(m0, sqrt_pi, epsilon = 1e-13);
        let m2: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
        assert_abs_diff_eq!(m2, 0.5 * sqrt_pi, epsilon = 1e-13);
        let m4: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(4)).sum();
        assert_abs_diff_eq!(m4, 0.75 * sqrt_pi, epsilon = 1e-13);
        let m6: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(6)).sum();
        // Degree 6 <= 2n-1 = 7: still exact, value 15/8 √π.
        assert_abs_diff_eq!(m6, 15.0 / 8.0 * sqrt_pi, epsilon = 1e-12);
    }

    #[test]
    fn hermite_nodes_are_symmetric_and_sorted() {
        let (nodes, weights) = gauss_hermite(5);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(nodes[2], 0.0);
        for i in 0..2 {
            assert_eq!(nodes[i], -nodes[4 - i]);
            assert_eq!(weights[i], weights[4 - i]);
        }
    }

    #[test]
    fn hermite_weights_orthonormalize_hermite_functions() {
        // ψ_n on the 5-node grid with weights w·e^{x²} resolve the identity
        // for n,m <= 4.
        let n = 5;
        let (nodes, weights) = gauss_hermite(n);
        let psi = |order: usize, x: f64| -> f64 {
            let mut p0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
            if order == 0 {
                return p0;
            }
            let mut p1 = x * 2.0f64.sqrt() * p0;
            for k in 2..=order {
                let kf = k as f64;
                let p2 = x * (2.0 / kf).sqrt() * p1 - ((kf - 1.0) / kf).sqrt() * p0;
                p0 = p1;
                p1 = p2;
            }
            p1
        };
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    let wt = weights[k] * (nodes[k] * nodes[k]).exp();
                    s += wt * psi(a, nodes[k]) * psi(b, nodes[k]);
                }
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(s, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn simpson_hits_pi() {
        let f = |x: f64| 4.0 / (1.0 + x * x);
        let got = adaptive_simpson(&f, 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(got, PI, epsilon = 1e-10);
    }

    #[test]
    fn romberg_matches_simpson_on_smooth_integrand() {
        let f = |x: f64| (x.sin() + 0.2 * (3.0 * x).cos()).exp();
        let a = adaptive_simpson(&f, 0.0, 2.0, 1e-12);
        let b = richardson_trapezoid(&f, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn trapezoid_sequence_converges_at_order_two() {
        let f = |x: f64| x.exp();
        let seq = trapezoid_sequence(&f, 0.0, 1.0, 10);
        let exact = 1.0f64.exp() - 1.0;
        let e1 = (seq[8] - exact).abs();
        let e2 = (seq[9] - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.05, "order {order}");
    }
}
