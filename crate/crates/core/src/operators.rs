//! Second-quantized operators as explicit sparse matrices.
//!
//! Every fermion sign in the crate originates in [`full_annihilator`]: the
//! Jordan-Wigner string is counted once, on the full 2^{2ℓ} occupation space,
//! in the canonical site order −ℓ < … < ℓ−1. Everything else (number
//! operators, hopping, pair terms, the periodic seam) is a matrix product of
//! those, so boundary signs are never coded by hand. Sector matrices come out
//! of [`restrict_fermion_op`], which refuses to silently drop amplitude that
//! leaks out of the sector.
//!
//! Phonons live on one d-dimensional factor per site, embedded by index
//! arithmetic. In the grid representation the stored components carry the
//! square root of the quadrature weight; the node-to-occupation change of
//! basis is then orthogonal, position operators stay exactly diagonal, and
//! Hermitian blocks stay Hermitian on the nose.

use std::sync::Arc;

use crate::fock::{
    hermite_position_transform, pos_to_site, site_to_pos, CompositeBasis, FermionSector,
    PhononBasisSpec, PhononRep,
};
use crate::linalg::{hermitian_eigen, CMat, CVec, CooBuilder, CsMat, C64};
use crate::model::{lambda, reflect, InteractionSpec, ModelError, ModelParams};

/// A sparse operator bound to the basis it was assembled on.
#[derive(Clone)]
pub struct OperatorMatrix {
    pub basis: Arc<CompositeBasis>,
    pub matrix: CsMat,
    pub hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps a matrix; a `hermitian: true` flag is verified, not trusted.
    pub fn new(basis: Arc<CompositeBasis>, matrix: CsMat, hermitian: bool) -> Self {
        assert_eq!(matrix.nrows(), basis.dim());
        assert_eq!(matrix.ncols(), basis.dim());
        if hermitian {
            let scale = matrix.max_abs();
            let defect = matrix.sub(&matrix.adjoint()).max_abs();
            assert!(
                defect <= 1e-13 * scale,
                "hermitian flag violated: defect {defect:.3e} on scale {scale:.3e}"
            );
        }
        OperatorMatrix {
            basis,
            matrix,
            hermitian,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// ⟨x|M|x⟩.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        let y = self.matrix.matvec_alloc(x);
        x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }

    /// Coordinate-format dump, one `row col re im` line per stored entry.
    pub fn to_coord_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.matrix.nrows() {
            let (cols, vals) = self.matrix.row(i);
            for (c, v) in cols.iter().zip(vals) {
                out.push_str(&format!("{} {} {:.17e} {:.17e}\n", i, c, v.re, v.im));
            }
        }
        out
    }
}

/// Site index wrapped back into Λ; realizes c_ℓ = c_{−ℓ}.
pub fn wrap_site(ell: u32, j: i64) -> i64 {
    let l = ell as i64;
    if j >= l {
        j - 2 * l
    } else if j < -l {
        j + 2 * l
    } else {
        j
    }
}

/// c at bit `pos` on a 2^{n_bits} occupation space.
///
/// The single place a Jordan-Wigner string is ever counted: the sign is the
/// parity of the occupied positions below `pos`. Entries are exactly 0 or ±1.
pub(crate) fn annihilator_bits(n_bits: u32, pos: u32) -> CsMat {
    assert!(n_bits >= 1 && n_bits <= 30, "bit count out of range");
    assert!(pos < n_bits);
    let dim = 1usize << n_bits;
    let bit = 1u32 << pos;
    let mut b = CooBuilder::with_capacity(dim, dim, dim / 2);
    for mask in 0..dim as u32 {
        if mask & bit != 0 {
            let below = (mask & (bit - 1)).count_ones();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            b.push((mask ^ bit) as usize, mask as usize, C64::new(sign, 0.0));
        }
    }
    b.build()
}

/// c_j on the full 2^{2ℓ} occupation space, canonical site order.
pub fn full_annihilator(ell: u32, j: i64) -> CsMat {
    assert!(ell >= 1 && 2 * ell <= 30, "chain size out of range");
    annihilator_bits(2 * ell, site_to_pos(ell, j))
}

fn full_number_site(ell: u32, j: i64) -> CsMat {
    let c = full_annihilator(ell, j);
    c.adjoint().matmul(&c)
}

pub(crate) fn full_delta_site(ell: u32, j: i64) -> CsMat {
    let dim = 1usize << (2 * ell);
    full_number_site(ell, j).add(&CsMat::identity(dim).scale(C64::new(-0.5, 0.0)))
}

/// Projects a full-space fermion operator onto the rows and columns of the
/// basis sector. Panics if the operator has amplitude leaving the sector;
/// callers restrict only operators that genuinely preserve it.
pub fn restrict_fermion_op(basis: &CompositeBasis, full: &CsMat) -> CsMat {
    let full_dim = 1usize << (2 * basis.ell);
    assert_eq!(full.nrows(), full_dim);
    assert_eq!(full.ncols(), full_dim);
    let fdim = basis.fermion_dim();
    let adj = full.adjoint();
    let mut b = CooBuilder::new(fdim, fdim);
    for (col, cfg) in basis.configs.iter().enumerate() {
        let (rows, vals) = adj.row(cfg.mask as usize);
        for (r, v) in rows.iter().zip(vals) {
            let val = v.conj();
            if val.norm() == 0.0 {
                continue;
            }
            match basis.config_index(*r) {
                Some(row) => b.push(row, col, val),
                None => panic!(
                    "operator leaks out of the {:?} sector: {:#08b} -> {:#08b}",
                    basis.sector, cfg.mask, r
                ),
            }
        }
    }
    b.build()
}

fn real_to_cmat(m: &nalgebra::DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Truncated ladder operator a in the occupation basis: a[(n−1, n)] = √n.
pub fn ladder_fock_block(d: usize) -> CMat {
    let mut a = CMat::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Weighted node-to-occupation change of basis, S[n][k] = ψ_n(x_k)·√w̃_k.
/// Orthogonal for a square grid, which is the only case used internally.
pub fn grid_s_matrix(phonon: &PhononBasisSpec) -> CMat {
    assert_eq!(phonon.rep, PhononRep::Grid);
    let d = phonon.d;
    let ht = hermite_position_transform(d - 1, d).expect("square grid is always large enough");
    let mut s = ht.matrix.clone();
    for k in 0..d {
        let root = phonon.weights[k].sqrt();
        for n in 0..d {
            s[(n, k)] *= root;
        }
    }
    real_to_cmat(&s)
}

/// a in the active representation.
pub fn ladder_block(phonon: &PhononBasisSpec) -> CMat {
    let a = ladder_fock_block(phonon.d);
    match phonon.rep {
        PhononRep::Fock => a,
        PhononRep::Grid => {
            let s = grid_s_matrix(phonon);
            s.adjoint() * a * s
        }
    }
}

/// a + a*; exactly √2·diag(node) on a grid.
pub fn displacement_block(phonon: &PhononBasisSpec) -> CMat {
    match phonon.rep {
        PhononRep::Fock => {
            let a = ladder_fock_block(phonon.d);
            let ad = a.adjoint();
            a + ad
        }
        PhononRep::Grid => {
            let mut m = CMat::zeros(phonon.d, phonon.d);
            for k in 0..phonon.d {
                m[(k, k)] = C64::new(2f64.sqrt() * phonon.nodes[k], 0.0);
            }
            m
        }
    }
}

/// a*a; conjugated to the node basis and re-symmetrized on a grid.
pub fn number_block(phonon: &PhononBasisSpec) -> CMat {
    let mut n = CMat::zeros(phonon.d, phonon.d);
    for k in 0..phonon.d {
        n[(k, k)] = C64::new(k as f64, 0.0);
    }
    match phonon.rep {
        PhononRep::Fock => n,
        PhononRep::Grid => {
            let s = grid_s_matrix(phonon);
            let m = s.adjoint() * n * s;
            let ma = m.adjoint();
            (m + ma).scale(0.5)
        }
    }
}

/// φ = (2ω)^{−1/2}(a + a*).
pub fn phi_block(phonon: &PhononBasisSpec, omega: f64) -> CMat {
    displacement_block(phonon).scale(1.0 / (2.0 * omega).sqrt())
}

/// π = i√(ω/2)(a* − a).
pub fn pi_block(phonon: &PhononBasisSpec, omega: f64) -> CMat {
    let a = ladder_fock_block(phonon.d);
    let scale = C64::new(0.0, (omega / 2.0).sqrt());
    let fock = (a.adjoint() - &a).map(|v| v * scale);
    match phonon.rep {
        PhononRep::Fock => fock,
        PhononRep::Grid => {
            let s = grid_s_matrix(phonon);
            s.adjoint() * fock * s
        }
    }
}

/// Unitary e^{−iαφ} on one phonon factor.
///
/// Diagonal exponentiation of the node values on a grid; spectral
/// exponentiation of the truncated φ in the occupation basis. The two agree
/// exactly on a square grid because the weighted transform is orthogonal.
pub fn phase_block(phonon: &PhononBasisSpec, omega: f64, alpha: f64) -> CMat {
    match phonon.rep {
        PhononRep::Grid => {
            let root = omega.sqrt();
            let mut m = CMat::zeros(phonon.d, phonon.d);
            for k in 0..phonon.d {
                m[(k, k)] = C64::from_polar(1.0, -alpha * phonon.nodes[k] / root);
            }
            m
        }
        PhononRep::Fock => {
            let (vals, vecs) = hermitian_eigen(&phi_block(phonon, omega));
            let mut d = CVec::zeros(phonon.d);
            for k in 0..phonon.d {
                d[k] = C64::from_polar(1.0, -alpha * vals[k]);
            }
            &vecs * CMat::from_diagonal(&d) * vecs.adjoint()
        }
    }
}

/// Frobenius norm of [a, a*] − I on one truncated phonon factor. The defect
/// is the rank-one projector −d·|d−1⟩⟨d−1|, so the value equals the factor
/// dimension in either representation (max-norm would not be comparable: the
/// node basis spreads the same defect evenly over the grid).
pub fn ladder_defect(phonon: &PhononBasisSpec) -> f64 {
    let a = ladder_block(phonon);
    let ad = a.adjoint();
    let comm = &a * &ad - &ad * &a;
    let eye = CMat::identity(phonon.d, phonon.d);
    (comm - eye).norm()
}

/// Embeds a d×d single-site block at phonon position `pos` among `n_sites`
/// factors, little-endian digit order (stride d^pos).
pub fn phonon_site_block(d: usize, n_sites: u32, pos: u32, block: &CMat) -> CsMat {
    assert_eq!(block.nrows(), d);
    assert_eq!(block.ncols(), d);
    assert!(pos < n_sites);
    let total = d
        .checked_pow(n_sites)
        .expect("phonon space dimension overflow");
    let stride = d.pow(pos);
    let mut b = CooBuilder::with_capacity(total, total, total * d);
    for ph in 0..total {
        let digit = (ph / stride) % d;
        let base = ph - digit * stride;
        for k in 0..d {
            let v = block[(k, digit)];
            if v.norm() == 0.0 {
                continue;
            }
            b.push(base + k * stride, ph, v);
        }
    }
    b.build()
}

/// Single-site phonon block lifted to the whole phonon space of `basis`.
pub fn phonon_site_matrix(basis: &CompositeBasis, pos: u32, block: &CMat) -> CsMat {
    phonon_site_block(basis.phonon.d, basis.site_count(), pos, block)
}

/// Fermion-sector operator tensored with the phonon identity.
pub fn embed_fermion(basis: &CompositeBasis, f: &CsMat) -> CsMat {
    f.kron(&CsMat::identity(basis.phonon_dim()))
}

/// Phonon-space operator tensored with the fermion identity.
pub fn embed_phonon(basis: &CompositeBasis, p: &CsMat) -> CsMat {
    CsMat::identity(basis.fermion_dim()).kron(p)
}

/// c_j on the composite space. Particle number changes, so this is only
/// available on the full occupation basis.
pub fn annihilator(basis: &Arc<CompositeBasis>, j: i64) -> Result<OperatorMatrix, ModelError> {
    let l = basis.ell as i64;
    if !(-l..l).contains(&j) {
        return Err(ModelError::SiteOutOfRange(j, basis.ell));
    }
    assert_eq!(
        basis.sector,
        FermionSector::Full,
        "annihilator changes particle number and needs the full sector"
    );
    let full = full_annihilator(basis.ell, j);
    let m = embed_fermion(basis, &restrict_fermion_op(basis, &full));
    Ok(OperatorMatrix::new(Arc::clone(basis), m, false))
}

/// The diagonal families n̂_j and δn̂_j = n̂_j − 1/2, indexed by position.
pub struct NumberOps {
    pub n: Vec<OperatorMatrix>,
    pub delta: Vec<OperatorMatrix>,
}

pub fn number_ops(basis: &Arc<CompositeBasis>) -> NumberOps {
    let ell = basis.ell;
    let mut n = Vec::new();
    let mut delta = Vec::new();
    for pos in 0..basis.site_count() {
        let j = pos_to_site(ell, pos);
        let nf = restrict_fermion_op(basis, &full_number_site(ell, j));
        let df = restrict_fermion_op(basis, &full_delta_site(ell, j));
        n.push(OperatorMatrix::new(
            Arc::clone(basis),
            embed_fermion(basis, &nf),
            true,
        ));
        delta.push(OperatorMatrix::new(
            Arc::clone(basis),
            embed_fermion(basis, &df),
            true,
        ));
    }
    NumberOps { n, delta }
}

/// N̂ = Σ_j n̂_j.
pub fn total_number(basis: &Arc<CompositeBasis>) -> OperatorMatrix {
    let ell = basis.ell;
    let full_dim = 1usize << (2 * ell);
    let mut acc = CsMat::zeros(full_dim, full_dim);
    for j in lambda(ell) {
        acc = acc.add(&full_number_site(ell, j));
    }
    let f = restrict_fermion_op(basis, &acc);
    OperatorMatrix::new(Arc::clone(basis), embed_fermion(basis, &f), true)
}

/// Ladder and field operators on the phonon factor of site j.
pub struct BosonOps {
    pub a: OperatorMatrix,
    pub a_dag: OperatorMatrix,
    pub phi: OperatorMatrix,
    pub pi: OperatorMatrix,
}

pub fn boson_ops(basis: &Arc<CompositeBasis>, j: i64, omega: f64) -> Result<BosonOps, ModelError> {
    let l = basis.ell as i64;
    if !(-l..l).contains(&j) {
        return Err(ModelError::SiteOutOfRange(j, basis.ell));
    }
    let pos = site_to_pos(basis.ell, j);
    let lift = |block: &CMat, herm: bool| {
        let m = embed_phonon(basis, &phonon_site_matrix(basis, pos, block));
        OperatorMatrix::new(Arc::clone(basis), m, herm)
    };
    let a = ladder_block(&basis.phonon);
    Ok(BosonOps {
        a: lift(&a, false),
        a_dag: lift(&a.adjoint(), false),
        phi: lift(&phi_block(&basis.phonon, omega), true),
        pi: lift(&pi_block(&basis.phonon, omega), true),
    })
}

/// A Hamiltonian together with the quantified truncation artifact of the
/// phonon cutoff it was built at.
pub struct HamiltonianBuild {
    pub op: OperatorMatrix,
    /// ‖[a, a*] − I‖_max on one retained phonon factor.
    pub ladder_defect: f64,
}

fn hop_full(ell: u32, t: f64) -> CsMat {
    let dim = 1usize << (2 * ell);
    let mut acc = CsMat::zeros(dim, dim);
    for j in lambda(ell) {
        let k = wrap_site(ell, j + 1);
        let cj = full_annihilator(ell, j);
        let ck = full_annihilator(ell, k);
        let term = cj.adjoint().matmul(&ck);
        acc = acc.add(&term).add(&term.adjoint());
    }
    acc.scale(C64::new(-t, 0.0))
}

/// Σ over ordered pairs i≠j of coeff(i−j)·δn̂_iδn̂_j, with coeff either the
/// bare interaction or its sign-alternating counterpart.
fn interaction_full(ell: u32, spec: &InteractionSpec, alternating: bool) -> CsMat {
    let dim = 1usize << (2 * ell);
    let sites = lambda(ell);
    let deltas: Vec<CsMat> = sites.iter().map(|&j| full_delta_site(ell, j)).collect();
    let mut acc = CsMat::zeros(dim, dim);
    for (ii, &i) in sites.iter().enumerate() {
        for (jj, &j) in sites.iter().enumerate() {
            if i == j {
                continue;
            }
            let coeff = if alternating {
                spec.w_of(i - j)
            } else {
                spec.u_of(i - j)
            };
            if coeff == 0.0 {
                continue;
            }
            acc = acc.add(&deltas[ii].matmul(&deltas[jj]).scale(C64::new(coeff, 0.0)));
        }
    }
    acc
}

fn phonon_number_sum(basis: &CompositeBasis) -> CsMat {
    let pd = basis.phonon_dim();
    let num = number_block(&basis.phonon);
    let mut acc = CsMat::zeros(pd, pd);
    for pos in 0..basis.site_count() {
        acc = acc.add(&phonon_site_matrix(basis, pos, &num));
    }
    acc
}

/// H = −t Σ_j (c*_j c_{j+1} + h.c.) + Σ_{ij} U(i−j) δn̂_iδn̂_j
///     + g Σ_j δn̂_j (a_j + a*_j) + ω Σ_j a*_j a_j,
/// with the j = ℓ−1 bond closed through the wrapped annihilator.
pub fn build_hamiltonian(params: &ModelParams, basis: &Arc<CompositeBasis>) -> HamiltonianBuild {
    assert_eq!(basis.ell, params.ell);
    assert!(
        matches!(
            basis.sector,
            FermionSector::Full | FermionSector::HalfFilled
        ),
        "plain Hamiltonian needs an occupation basis, not the paired sector"
    );
    let ell = params.ell;
    let hop = hop_full(ell, params.t);
    let pot = interaction_full(ell, &params.interaction, false);
    let fermion = restrict_fermion_op(basis, &hop.add(&pot));
    let mut h = embed_fermion(basis, &fermion);

    let disp = displacement_block(&basis.phonon);
    for pos in 0..basis.site_count() {
        let j = pos_to_site(ell, pos);
        let df = restrict_fermion_op(basis, &full_delta_site(ell, j));
        let site = phonon_site_matrix(basis, pos, &disp);
        h = h.add(&df.kron(&site).scale(C64::new(params.g, 0.0)));
    }

    h = h.add(&embed_phonon(basis, &phonon_number_sum(basis)).scale(C64::new(params.omega, 0.0)));
    HamiltonianBuild {
        op: OperatorMatrix::new(Arc::clone(basis), h, true),
        ladder_defect: ladder_defect(&basis.phonon),
    }
}

/// The transformed Hamiltonian 𝕋 − 𝕎 + K on the paired sector basis:
/// pair creation and annihilation across each even-site bond, dressed with
/// phonon phases e^{∓iα(φ_j − φ_{j+ε})}, α = √2 ω^{−1/2} g, minus the
/// sign-alternating density-density sum, plus the free phonon term.
pub fn build_transformed(params: &ModelParams, basis: &Arc<CompositeBasis>) -> HamiltonianBuild {
    transformed_with_field(params, None, basis)
}

/// Same kinetic and phonon terms as [`build_transformed`], with the
/// density-density part replaced by its external-field version: minus a
/// quarter of the two reflected-field squares plus the constant V|Λ|/4.
/// A zero field returns through the plain assembly path, so the matrices are
/// bit-identical.
pub fn build_field_hamiltonian(
    params: &ModelParams,
    h: &[f64],
    basis: &Arc<CompositeBasis>,
) -> HamiltonianBuild {
    assert_eq!(
        h.len(),
        basis.site_count() as usize,
        "field needs one real entry per site"
    );
    if h.iter().all(|&x| x == 0.0) {
        return build_transformed(params, basis);
    }
    transformed_with_field(params, Some(h), basis)
}

/// The pair kinetic term 𝕋 alone, on the paired sector basis. Both ε signs
/// are summed even when they name the same bond (wraps at ℓ = 1 double it,
/// matching the plain Hamiltonian).
pub(crate) fn transformed_hopping(params: &ModelParams, basis: &CompositeBasis) -> CsMat {
    let ell = params.ell;
    let alpha = 2f64.sqrt() * params.g / params.omega.sqrt();
    let dim = basis.dim();
    let phase_minus = phase_block(&basis.phonon, params.omega, alpha);
    let phase_plus = phase_block(&basis.phonon, params.omega, -alpha);
    let mut t_sum = CsMat::zeros(dim, dim);
    for j in lambda(ell).into_iter().filter(|j| j.rem_euclid(2) == 0) {
        for eps in [1i64, -1] {
            let k = wrap_site(ell, j + eps);
            let cj = full_annihilator(ell, j);
            let ck = full_annihilator(ell, k);
            let pair = restrict_fermion_op(basis, &cj.adjoint().matmul(&ck.adjoint()));
            let ph = phonon_site_matrix(basis, site_to_pos(ell, j), &phase_minus)
                .matmul(&phonon_site_matrix(basis, site_to_pos(ell, k), &phase_plus));
            let term = pair.kron(&ph).scale(C64::new(-params.t, 0.0));
            t_sum = t_sum.add(&term).add(&term.adjoint());
        }
    }
    t_sum
}

/// The sign-alternating density-density sum 𝕎 embedded on the paired basis.
pub(crate) fn transformed_w_matrix(params: &ModelParams, basis: &CompositeBasis) -> CsMat {
    embed_fermion(
        basis,
        &restrict_fermion_op(
            basis,
            &interaction_full(params.ell, &params.interaction, true),
        ),
    )
}

fn transformed_with_field(
    params: &ModelParams,
    field: Option<&[f64]>,
    basis: &Arc<CompositeBasis>,
) -> HamiltonianBuild {
    assert_eq!(basis.ell, params.ell);
    assert_eq!(
        basis.sector,
        FermionSector::Balanced,
        "transformed Hamiltonian lives on the paired half-chain sectors"
    );
    let t_sum = transformed_hopping(params, basis);

    let w_embedded = match field {
        None => transformed_w_matrix(params, basis),
        Some(h) => embed_fermion(basis, &field_interaction(params, h, basis)),
    };

    let mut htot = t_sum.sub(&w_embedded);
    htot = htot
        .add(&embed_phonon(basis, &phonon_number_sum(basis)).scale(C64::new(params.omega, 0.0)));
    HamiltonianBuild {
        op: OperatorMatrix::new(Arc::clone(basis), htot, true),
        ladder_defect: ladder_defect(&basis.phonon),
    }
}

/// −(1/4) Σ_{i≠j} W(i−j) [(δn̂_i − h_i − δn̂_j + h_j)²
///                        + (δn̂_i − h_{r(i)} − δn̂_j + h_{r(j)})²] + V|Λ|/4,
/// with V the finite-chain average (1/|Λ|) Σ_{i≠j} W(i−j), which is what
/// makes the zero-field value coincide with the plain density-density sum.
fn field_interaction(params: &ModelParams, h: &[f64], basis: &CompositeBasis) -> CsMat {
    let ell = params.ell;
    let sites = lambda(ell);
    let deltas: Vec<CsMat> = sites
        .iter()
        .map(|&j| restrict_fermion_op(basis, &full_delta_site(ell, j)))
        .collect();
    let fdim = basis.fermion_dim();
    let ident = CsMat::identity(fdim);
    let mut acc = CsMat::zeros(fdim, fdim);
    let mut v_sum = 0.0;
    for (ii, &i) in sites.iter().enumerate() {
        for (jj, &j) in sites.iter().enumerate() {
            if i == j {
                continue;
            }
            let w = params.interaction.w_of(i - j);
            v_sum += w;
            if w == 0.0 {
                continue;
            }
            let at = |s: i64| h[site_to_pos(ell, s) as usize];
            let direct = deltas[ii]
                .sub(&deltas[jj])
                .add(&ident.scale(C64::new(-(at(i) - at(j)), 0.0)));
            let mirrored = deltas[ii]
                .sub(&deltas[jj])
                .add(&ident.scale(C64::new(-(at(reflect(i)) - at(reflect(j))), 0.0)));
            acc = acc
                .add(&direct.matmul(&direct).scale(C64::new(-0.25 * w, 0.0)))
                .add(&mirrored.matmul(&mirrored).scale(C64::new(-0.25 * w, 0.0)));
        }
    }
    acc.add(&ident.scale(C64::new(v_sum / 4.0, 0.0)))
}

/// The diagonal string δn̂_{i_m}···δn̂_{i_1}·δn̂_{r(i_1)}···δn̂_{r(i_m)} for
/// left-half sites i_1..i_m and the center reflection r. m = 0 is the
/// identity.
pub fn delta_n_string(basis: &Arc<CompositeBasis>, sites: &[i64]) -> OperatorMatrix {
    let ell = basis.ell;
    for &i in sites {
        assert!(
            -(ell as i64) <= i && i < 0,
            "string sites must lie in the left half-chain, got {i}"
        );
    }
    let fdim = basis.fermion_dim();
    let mut acc = CsMat::identity(fdim);
    for &i in sites.iter().rev() {
        acc = acc.matmul(&restrict_fermion_op(basis, &full_delta_site(ell, i)));
    }
    for &i in sites.iter() {
        acc = acc.matmul(&restrict_fermion_op(basis, &full_delta_site(ell, reflect(i))));
    }
    OperatorMatrix::new(Arc::clone(basis), embed_fermion(basis, &acc), true)
}

/// Signed permutation for the one-site shift j ↦ j+1 (wrapping), fermion
/// reordering parity included, phonon digits rotated along. Occupation
/// sectors only: the paired sector is not translation closed.
pub fn translation_permutation(basis: &CompositeBasis) -> CsMat {
    let n = basis.site_count() as usize;
    let pd = basis.phonon_dim();
    let mut b = CooBuilder::with_capacity(basis.dim(), basis.dim(), basis.dim());
    let mut digits = vec![0usize; n];
    let mut moved = vec![0usize; n];
    for (f_idx, cfg) in basis.configs.iter().enumerate() {
        let sites = cfg.sites();
        let mapped: Vec<i64> = sites.iter().map(|&s| wrap_site(basis.ell, s + 1)).collect();
        let mut inversions = 0usize;
        for a in 0..mapped.len() {
            for c in (a + 1)..mapped.len() {
                if mapped[a] > mapped[c] {
                    inversions += 1;
                }
            }
        }
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        let image = crate::fock::FermionConfig::from_sites(basis.ell, &mapped);
        let fi = basis
            .config_index(image.mask)
            .expect("translation must stay inside the sector");
        for ph in 0..pd {
            basis.phonon_unpack(ph, &mut digits);
            for p in 0..n {
                moved[(p + 1) % n] = digits[p];
            }
            let ph2 = basis.phonon_pack(&moved);
            b.push(basis.flat(fi, ph2), basis.flat(f_idx, ph), C64::new(sign, 0.0));
        }
    }
    b.build()
}

/// The signed permutation implementing c_j ↦ (−1)^j c*_j together with
/// a_j ↦ −a_j: the fermion factor is the ordered product of (c*_j + (−1)^j
/// c_j), the phonon factor is the per-site parity (occupation basis) or node
/// mirror (grid). Commutes with every chain Hamiltonian at half filling and
/// conjugates each δn̂_j to −δn̂_j.
pub fn half_filling_symmetry(basis: &CompositeBasis) -> CsMat {
    let ell = basis.ell;
    let dim_full = 1usize << (2 * ell);
    let mut f_full = CsMat::identity(dim_full);
    for j in lambda(ell) {
        let c = full_annihilator(ell, j);
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let gen = c.adjoint().add(&c.scale(C64::new(sign, 0.0)));
        f_full = f_full.matmul(&gen);
    }
    let f = restrict_fermion_op(basis, &f_full);

    let pd = basis.phonon_dim();
    let n = basis.site_count() as usize;
    let d = basis.phonon.d;
    let mut digits = vec![0usize; n];
    let mut b = CooBuilder::with_capacity(pd, pd, pd);
    for ph in 0..pd {
        basis.phonon_unpack(ph, &mut digits);
        match basis.phonon.rep {
            PhononRep::Fock => {
                let parity: usize = digits.iter().sum();
                let s = if parity % 2 == 0 { 1.0 } else { -1.0 };
                b.push(ph, ph, C64::new(s, 0.0));
            }
            PhononRep::Grid => {
                let mirrored: Vec<usize> = digits.iter().map(|&k| d - 1 - k).collect();
                let ph2 = basis.phonon_pack(&mirrored);
                b.push(ph2, ph, C64::new(1.0, 0.0));
            }
        }
    }
    f.kron(&b.build())
}
