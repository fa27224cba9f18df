//! Matrix-free Krylov solvers for Hermitian operators: lowest eigenpairs by
//! thick-restart Lanczos, heat-kernel application by Lanczos exponentials,
//! and pseudoinverse application by deflated conjugate gradients.
//!
//! Determinism contract: every reduction here is either sequential or a
//! fixed-size chunked sum whose partials are combined in order, so results
//! are bitwise reproducible for a given seed regardless of thread count.

use super::dense::{hermitian_eigen, CMat, CVec, C64};
use super::sparse::CsMat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Hermitian linear operator given by its action on a vector.
pub trait LinOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

impl LinOp for CsMat {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y);
    }
}

impl LinOp for CMat {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let xv = CVec::from_column_slice(x);
        let yv = self * xv;
        y.copy_from_slice(yv.as_slice());
    }
}

const DOT_CHUNK: usize = 8192;

/// ⟨x|y⟩ with the left argument conjugated. Chunked in fixed blocks so the
/// value does not depend on the rayon thread count.
pub fn vdot(x: &[C64], y: &[C64]) -> C64 {
    assert_eq!(x.len(), y.len());
    let seq = |a: &[C64], b: &[C64]| {
        let mut acc = C64::new(0.0, 0.0);
        for (xi, yi) in a.iter().zip(b) {
            acc += xi.conj() * yi;
        }
        acc
    };
    if x.len() <= DOT_CHUNK {
        return seq(x, y);
    }
    let partials: Vec<C64> = x
        .par_chunks(DOT_CHUNK)
        .zip(y.par_chunks(DOT_CHUNK))
        .map(|(a, b)| seq(a, b))
        .collect();
    let mut acc = C64::new(0.0, 0.0);
    for p in partials {
        acc += p;
    }
    acc
}

pub fn vnorm(x: &[C64]) -> f64 {
    vdot(x, x).re.max(0.0).sqrt()
}

/// y += a·x.
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    y.par_chunks_mut(DOT_CHUNK)
        .zip(x.par_chunks(DOT_CHUNK))
        .for_each(|(yc, xc)| {
            for (yi, xi) in yc.iter_mut().zip(xc) {
                *yi += a * xi;
            }
        });
}

fn vscale(x: &[C64], s: f64) -> Vec<C64> {
    x.iter().map(|z| z * s).collect()
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let nn = vnorm(&v);
    for z in &mut v {
        *z /= nn;
    }
    v
}

/// Orthogonalize `v` against `basis` twice; returns None if nothing is left.
fn orthogonalize(v: &mut Vec<C64>, basis: &[Vec<C64>]) -> Option<f64> {
    for _ in 0..2 {
        for q in basis {
            let h = vdot(q, v);
            axpy(-h, q, v);
        }
    }
    let nn = vnorm(v);
    if nn < 1e-10 {
        None
    } else {
        for z in v.iter_mut() {
            *z /= nn;
        }
        Some(nn)
    }
}

fn linear_combo(basis: &[Vec<C64>], coeffs: &[C64]) -> Vec<C64> {
    let n = basis[0].len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    out.par_iter_mut().enumerate().for_each(|(t, o)| {
        let mut acc = C64::new(0.0, 0.0);
        for (c, q) in coeffs.iter().zip(basis) {
            acc += c * q[t];
        }
        *o = acc;
    });
    out
}

/// Result of an eigenpair search. `residuals[i] = ‖A x_i − λ_i x_i‖` is the
/// verified residual of the returned pair, not an internal estimate.
pub struct LanczosOutcome {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    pub converged: bool,
}

const DENSE_CUTOFF: usize = 400;

/// Lowest `nev` eigenpairs of a Hermitian operator.
///
/// Small problems (dim ≤ 400) are solved densely and exactly. Larger ones run
/// thick-restart Lanczos with full reorthogonalization; `tol` is relative to
/// the Ritz estimate of the spectral radius. The basis is capped so memory
/// stays bounded for dimensions in the few-hundred-thousand range.
pub fn lanczos_lowest<A: LinOp + ?Sized>(op: &A, nev: usize, seed: u64, tol: f64) -> LanczosOutcome {
    let n = op.dim();
    assert!(nev >= 1 && nev <= n, "need 1 <= nev <= dim");
    if n <= DENSE_CUTOFF {
        return dense_lowest(op, nev);
    }

    let max_basis = n.min((6 * nev + 44).min(80)).max(nev + 2);
    let keep = (nev + 8).min(max_basis - 8).max(nev);
    let max_restarts = 600;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_basis);
    let mut proj = CMat::zeros(max_basis, max_basis);
    let mut pending = random_unit(&mut rng, n);
    let mut beta_last = 0.0f64;
    let mut anorm = 1e-300f64;
    let mut matvecs = 0usize;

    for _restart in 0..max_restarts {
        // Grow the basis, keeping proj = Q†AQ exact column by column.
        while basis.len() < max_basis {
            basis.push(std::mem::take(&mut pending));
            let j = basis.len() - 1;
            let mut w = vec![C64::new(0.0, 0.0); n];
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            anorm = anorm.max(vnorm(&w));
            for i in 0..=j {
                let h = vdot(&basis[i], &w);
                proj[(i, j)] = h;
                proj[(j, i)] = h.conj();
                axpy(-h, &basis[i], &mut w);
            }
            // Second orthogonalization pass; corrections are roundoff-level
            // and are deliberately not folded into proj.
            for q in &basis {
                let h = vdot(q, &w);
                axpy(-h, q, &mut w);
            }
            beta_last = vnorm(&w);
            if beta_last > 1e-12 * anorm {
                pending = vscale(&w, 1.0 / beta_last);
            } else {
                beta_last = 0.0;
                if basis.len() == n {
                    break;
                }
                let mut fresh = random_unit(&mut rng, n);
                match orthogonalize(&mut fresh, &basis) {
                    Some(_) => pending = fresh,
                    None => break,
                }
            }
        }

        let m = basis.len();
        let pm = proj.view((0, 0), (m, m)).into_owned();
        let (theta, s) = hermitian_eigen(&pm);
        let scale = theta
            .iter()
            .fold(0.0f64, |acc, t| acc.max(t.abs()))
            .max(1e-300);
        let estimates: Vec<f64> = (0..nev.min(m))
            .map(|i| beta_last * s[(m - 1, i)].norm())
            .collect();
        let est_ok = m >= nev && estimates.iter().all(|r| *r <= tol * scale);

        if est_ok || m == n {
            let mut eigenvalues = Vec::with_capacity(nev);
            let mut eigenvectors = Vec::with_capacity(nev);
            let mut residuals = Vec::with_capacity(nev);
            let mut all_ok = true;
            for i in 0..nev {
                let coeffs: Vec<C64> = (0..m).map(|j| s[(j, i)]).collect();
                let x = linear_combo(&basis, &coeffs);
                let mut ax = vec![C64::new(0.0, 0.0); n];
                op.apply(&x, &mut ax);
                matvecs += 1;
                axpy(C64::new(-theta[i], 0.0), &x, &mut ax);
                let res = vnorm(&ax);
                if res > 10.0 * tol * scale {
                    all_ok = false;
                }
                eigenvalues.push(theta[i]);
                eigenvectors.push(x);
                residuals.push(res);
            }
            if all_ok || m == n {
                return LanczosOutcome {
                    eigenvalues,
                    eigenvectors,
                    residuals,
                    matvecs,
                    converged: all_ok,
                };
            }
            // Estimates lied (heavy roundoff); fall through and restart.
        }

        // Thick restart: keep the lowest Ritz vectors plus the residual
        // direction already sitting in `pending`.
        let k = keep.min(m.saturating_sub(1)).max(1);
        let mut new_basis = Vec::with_capacity(max_basis);
        for i in 0..k {
            let coeffs: Vec<C64> = (0..m).map(|j| s[(j, i)]).collect();
            new_basis.push(linear_combo(&basis, &coeffs));
        }
        basis = new_basis;
        proj.fill(C64::new(0.0, 0.0));
        for i in 0..k {
            proj[(i, i)] = C64::new(theta[i], 0.0);
        }
        if pending.len() != n {
            pending = random_unit(&mut rng, n);
        }
        while orthogonalize(&mut pending, &basis).is_none() {
            pending = random_unit(&mut rng, n);
        }
    }

    // Restart budget exhausted: report the best pairs with honest residuals.
    let m = basis.len();
    let pm = proj.view((0, 0), (m, m)).into_owned();
    let (theta, s) = hermitian_eigen(&pm);
    let mut eigenvalues = Vec::new();
    let mut eigenvectors = Vec::new();
    let mut residuals = Vec::new();
    for i in 0..nev.min(m) {
        let coeffs: Vec<C64> = (0..m).map(|j| s[(j, i)]).collect();
        let x = linear_combo(&basis, &coeffs);
        let mut ax = vec![C64::new(0.0, 0.0); n];
        op.apply(&x, &mut ax);
        axpy(C64::new(-theta[i], 0.0), &x, &mut ax);
        eigenvalues.push(theta[i]);
        residuals.push(vnorm(&ax));
        eigenvectors.push(x);
    }
    LanczosOutcome {
        eigenvalues,
        eigenvectors,
        residuals,
        matvecs,
        converged: false,
    }
}

fn dense_lowest<A: LinOp + ?Sized>(op: &A, nev: usize) -> LanczosOutcome {
    let n = op.dim();
    let mut mat = CMat::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        op.apply(&e, &mut col);
        e[j] = C64::new(0.0, 0.0);
        for i in 0..n {
            mat[(i, j)] = col[i];
        }
    }
    let (vals, vecs) = hermitian_eigen(&mat);
    let mut eigenvalues = Vec::with_capacity(nev);
    let mut eigenvectors = Vec::with_capacity(nev);
    let mut residuals = Vec::with_capacity(nev);
    for i in 0..nev {
        let x: Vec<C64> = (0..n).map(|r| vecs[(r, i)]).collect();
        let mut ax = vec![C64::new(0.0, 0.0); n];
        op.apply(&x, &mut ax);
        axpy(C64::new(-vals[i], 0.0), &x, &mut ax);
        eigenvalues.push(vals[i]);
        residuals.push(vnorm(&ax));
        eigenvectors.push(x);
    }
    LanczosOutcome {
        eigenvalues,
        eigenvectors,
        residuals,
        matvecs: n + nev,
        converged: true,
    }
}

/// y ≈ e^{t·A} x for Hermitian A, with adaptive time substepping.
///
/// The local error estimate per substep is the classical last-component
/// bound; a substep is accepted when the estimate is below `tol` relative to
/// the current vector norm. Panics if the step size underflows, since a
/// silently inaccurate heat kernel would poison every downstream check.
pub fn expv<A: LinOp + ?Sized>(op: &A, t: f64, x: &[C64], tol: f64) -> Vec<C64> {
    let n = op.dim();
    assert_eq!(x.len(), n);
    if t == 0.0 || vnorm(x) == 0.0 {
        return x.to_vec();
    }
    let m_max = 48.min(n);
    let mut y = x.to_vec();
    let mut done = 0.0f64;
    let mut dt = t;
    let mut guard = 0usize;
    while (t - done).abs() > 1e-14 * t.abs() {
        if dt.abs() > (t - done).abs() {
            dt = t - done;
        }
        let (y_next, err, exact) = exp_step(op, dt, &y, m_max);
        let ynorm = vnorm(&y_next).max(1e-300);
        if exact || err <= tol * ynorm {
            y = y_next;
            done += dt;
            dt *= 1.5;
        } else {
            dt *= 0.5;
            guard += 1;
            assert!(
                guard < 200 && dt.abs() > 1e-12 * t.abs(),
                "expv step size underflow: operator too rough for requested tolerance"
            );
        }
    }
    y
}

fn exp_step<A: LinOp + ?Sized>(op: &A, dt: f64, y: &[C64], m_max: usize) -> (Vec<C64>, f64, bool) {
    let n = op.dim();
    let ynorm = vnorm(y);
    let mut basis: Vec<Vec<C64>> = vec![vscale(y, 1.0 / ynorm)];
    let mut proj = CMat::zeros(m_max, m_max);
    let mut beta_last = 0.0f64;
    let mut exact = false;
    let mut anorm = 1e-300f64;
    while basis.len() <= m_max {
        let j = basis.len() - 1;
        let mut w = vec![C64::new(0.0, 0.0); n];
        op.apply(&basis[j], &mut w);
        anorm = anorm.max(vnorm(&w));
        for i in 0..=j {
            let h = vdot(&basis[i], &w);
            proj[(i, j)] = h;
            proj[(j, i)] = h.conj();
            axpy(-h, &basis[i], &mut w);
        }
        for q in &basis {
            let h = vdot(q, &w);
            axpy(-h, q, &mut w);
        }
        beta_last = vnorm(&w);
        if beta_last <= 1e-13 * anorm {
            // Invariant subspace: the Krylov exponential is exact here.
            exact = true;
            break;
        }
        if basis.len() == m_max {
            break;
        }
        basis.push(vscale(&w, 1.0 / beta_last));
    }
    let m = basis.len();
    let pm = proj.view((0, 0), (m, m)).into_owned();
    let (vals, vecs) = hermitian_eigen(&pm);
    // u = e^{dt·T} e_1 assembled through the small eigenbasis.
    let mut u = vec![C64::new(0.0, 0.0); m];
    for k in 0..m {
        let w_k = vecs[(0, k)].conj() * (dt * vals[k]).exp();
        for r in 0..m {
            u[r] += vecs[(r, k)] * w_k;
        }
    }
    let mut out = linear_combo(&basis, &u);
    for z in &mut out {
        *z *= ynorm;
    }
    let err = if exact {
        0.0
    } else {
        ynorm * beta_last * u[m - 1].norm()
    };
    (out, err, exact)
}

/// Outcome of a pseudoinverse application; `rel_residual` is measured against
/// the deflated right-hand side.
pub struct PinvOutcome {
    pub x: Vec<C64>,
    pub rel_residual: f64,
    pub iterations: usize,
}

/// x = (A − shift)⁺ b for Hermitian A − shift that is positive semidefinite
/// with kernel spanned by the orthonormal vectors in `kernel`.
///
/// Conjugate gradients on the deflated subspace; every iterate is re-projected
/// off the kernel so roundoff cannot reintroduce the singular direction.
pub fn pinv_apply<A: LinOp + ?Sized>(
    op: &A,
    shift: f64,
    kernel: &[Vec<C64>],
    b: &[C64],
    tol: f64,
    max_iter: usize,
) -> PinvOutcome {
    let n = op.dim();
    assert_eq!(b.len(), n);
    let deflate = |v: &mut Vec<C64>| {
        for k in kernel {
            let h = vdot(k, v);
            axpy(-h, k, v);
        }
    };
    let mut r = b.to_vec();
    deflate(&mut r);
    let bnorm = vnorm(&r).max(1e-300);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut p = r.clone();
    let mut rs = vdot(&r, &r).re;
    let mut iterations = 0usize;
    let mut ap = vec![C64::new(0.0, 0.0); n];
    while rs.sqrt() > tol * bnorm && iterations < max_iter {
        op.apply(&p, &mut ap);
        axpy(C64::new(-shift, 0.0), &p, &mut ap);
        deflate(&mut ap);
        let pap = vdot(&p, &ap).re;
        assert!(
            pap > 0.0,
            "pinv_apply: operator not positive definite on the deflated subspace"
        );
        let alpha = rs / pap;
        axpy(C64::new(alpha, 0.0), &p, &mut x);
        axpy(C64::new(-alpha, 0.0), &ap, &mut r);
        deflate(&mut r);
        let rs_new = vdot(&r, &r).re;
        let beta = rs_new / rs;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + *pi * beta;
        }
        rs = rs_new;
        iterations += 1;
    }
    deflate(&mut x);
    PinvOutcome {
        x,
        rel_residual: rs.sqrt() / bnorm,
        iterations,
    }
}
