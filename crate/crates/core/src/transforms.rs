//! Changes of picture and the matrix coordinates of the paired sector.
//!
//! Four maps live here: the alternating-site hole-particle unitary built
//! from the on-site factors u_j = (−1)^{N̂−n̂_j}(c*_j + c_j) over odd sites,
//! the phonon displacement unitary V = e^{−iπN_p/2}e^{L} that trades the
//! linear fermion-phonon coupling for hopping phases, the antiunitary
//! reflection ϑ carrying the left half space onto the right one, and the
//! vectorization that rewrites a charge-matched state as one matrix per
//! shared charge value. Positive semidefiniteness of those matrices is the
//! membership test for the reflection cone, so every sign here is
//! load-bearing: ordered-product conventions are spelled out next to each
//! builder and pinned by the tests.
//!
//! Half-chain operators act on 2^ℓ·d^ℓ product spaces with
//! flat = mask·d^ℓ + phonon index, local bit b meaning site −ℓ+b on the left
//! and site b on the right. The identification with the whole chain is the
//! plain Kronecker one, |x⟩_L ⊗ |y⟩_R ↦ |combine(x, y)⟩, so operators that
//! cross the cut carry their fermion parity strings explicitly.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::fock::{
    enumerate_half_filled, sector_decompose, site_to_pos, ChargeSectorTable, CompositeBasis,
    FermionConfig, FermionSector, PhononBasisSpec, PhononRep,
};
use crate::linalg::{hermitian_eigen, CMat, CVec, CooBuilder, CsMat, C64};
use crate::model::{lambda, lambda_left, lambda_right, reflect, ModelError, ModelParams};
use crate::operators::{
    annihilator_bits, embed_fermion, full_annihilator, full_delta_site, ladder_fock_block,
    number_block, phase_block, phonon_site_block, phonon_site_matrix, restrict_fermion_op,
    OperatorMatrix,
};

/// Flips bit `pos` of `mask` (creation or annihilation), returning the new
/// mask and the Jordan-Wigner sign, the parity of the occupation below.
fn flip_bit(mask: u32, pos: u32) -> (u32, f64) {
    let below = (mask & ((1 << pos) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    (mask ^ (1 << pos), sign)
}

/// Diagonal (−1)^{N̂ − n̂_j} on the full occupation space: the parity string
/// of every site except `j`.
fn parity_except_full(ell: u32, j: i64) -> CsMat {
    let dim = 1usize << (2 * ell);
    let bit = 1u32 << site_to_pos(ell, j);
    let mut b = CooBuilder::with_capacity(dim, dim, dim);
    for mask in 0..dim as u32 {
        let n = (mask & !bit).count_ones();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        b.push(mask as usize, mask as usize, C64::new(sign, 0.0));
    }
    b.build()
}

/// The fermion part of the hole-particle unitary: the product of
/// u_j = (−1)^{N̂−n̂_j}(c*_j + c_j) over the odd sites, the factor at the
/// lowest site acting first. Each factor is Hermitian and factors at
/// distinct sites anticommute, so with ℓ odd factors the product obeys
/// U* = U^{−1} = (−1)^{ℓ(ℓ−1)/2} U. The fermion vacuum maps to the plus
/// unit vector of the staggered configuration in this order.
pub(crate) fn hole_particle_fermion(ell: u32) -> CsMat {
    let dim = 1usize << (2 * ell);
    let mut acc = CsMat::identity(dim);
    for j in lambda(ell) {
        if j.rem_euclid(2) == 0 {
            continue;
        }
        let c = full_annihilator(ell, j);
        let u = parity_except_full(ell, j).matmul(&c.adjoint().add(&c));
        acc = u.matmul(&acc);
    }
    acc
}

/// The hole-particle unitary on a full-chain basis, phonons untouched.
/// Conjugation swaps c_j with c*_j on odd sites, leaves even sites alone,
/// and therefore flips the sign of every odd-site density.
pub fn hole_particle(basis: &Arc<CompositeBasis>) -> OperatorMatrix {
    assert_eq!(
        basis.sector,
        FermionSector::Full,
        "hole-particle changes particle number; build it on the full basis"
    );
    let u = embed_fermion(basis, &hole_particle_fermion(basis.ell));
    OperatorMatrix::new(Arc::clone(basis), u, false)
}

/// Applies the u_j product to one configuration, tracking the sign.
fn hole_particle_walk(ell: u32, start: u32) -> (u32, f64) {
    let mut mask = start;
    let mut sign = 1.0;
    for j in lambda(ell) {
        if j.rem_euclid(2) == 0 {
            continue;
        }
        let pos = site_to_pos(ell, j);
        let (next, s) = flip_bit(mask, pos);
        mask = next;
        sign *= s;
        if (mask & !(1 << pos)).count_ones() % 2 == 1 {
            sign = -sign;
        }
    }
    (mask, sign)
}

/// The hole-particle map restricted to fermion sectors: a signed permutation
/// from the half-filled configurations onto the charge-matched ones. Rows
/// follow the charge-matched order, columns the half-filled one; tensoring
/// with the phonon identity lifts it to the composite spaces.
pub fn hole_particle_sector_map(ell: u32) -> Result<CsMat, ModelError> {
    let half = enumerate_half_filled(ell)?;
    let table = sector_decompose(ell)?;
    let dim = half.len();
    let mut b = CooBuilder::with_capacity(dim, dim, dim);
    for (col, cfg) in half.iter().enumerate() {
        let (mask, sign) = hole_particle_walk(ell, cfg.mask);
        let (q, xi, yi) = table
            .sector_of(FermionConfig { mask, ell })
            .expect("hole-particle image must be charge-matched");
        b.push(table.balanced_index(q, xi, yi), col, C64::new(sign, 0.0));
    }
    Ok(b.build())
}

/// The staggered configuration: every odd site filled, even sites empty.
pub fn cdw_configuration(ell: u32) -> FermionConfig {
    let sites: Vec<i64> = lambda(ell)
        .into_iter()
        .filter(|j| j.rem_euclid(2) == 1)
        .collect();
    FermionConfig::from_sites(ell, &sites)
}

/// Ground state of one phonon factor: the unit occupation vector, or the
/// weighted Gaussian on the grid, exactly normalized because the quadrature
/// integrates degree-zero polynomials without error.
fn phonon_factor_vacuum(phonon: &PhononBasisSpec) -> Vec<f64> {
    match phonon.rep {
        PhononRep::Fock => {
            let mut v = vec![0.0; phonon.d];
            v[0] = 1.0;
            v
        }
        PhononRep::Grid => phonon
            .nodes
            .iter()
            .zip(&phonon.weights)
            .map(|(&x, &w)| std::f64::consts::PI.powf(-0.25) * (-(x * x) / 2.0).exp() * w.sqrt())
            .collect(),
    }
}

/// Product phonon vacuum over `n_sites` factors, little-endian digits.
pub fn phonon_vacuum(phonon: &PhononBasisSpec, n_sites: u32) -> Vec<f64> {
    let single = phonon_factor_vacuum(phonon);
    let total = phonon.d.pow(n_sites);
    let mut out = Vec::with_capacity(total);
    for ph in 0..total {
        let mut v = 1.0;
        let mut rest = ph;
        for _ in 0..n_sites {
            v *= single[rest % phonon.d];
            rest /= phonon.d;
        }
        out.push(v);
    }
    out
}

/// The staggered state tensored with the phonon vacuum, plus sign, on a
/// half-filled basis. Equals the hole-particle image of the whole-chain
/// vacuum under the ascending factor order used throughout this module.
pub fn cdw_state(basis: &CompositeBasis) -> Vec<C64> {
    assert_eq!(
        basis.sector,
        FermionSector::HalfFilled,
        "the staggered state lives on the half-filled basis"
    );
    let f = basis
        .config_index(cdw_configuration(basis.ell).mask)
        .expect("staggered configuration missing");
    let vac = phonon_vacuum(&basis.phonon, basis.site_count());
    let mut out = vec![C64::new(0.0, 0.0); basis.dim()];
    for (ph, &v) in vac.iter().enumerate() {
        out[basis.flat(f, ph)] = C64::new(v, 0.0);
    }
    out
}

/// The inverse hole-particle image of the whole-chain vacuum: the staggered
/// state with the sign that makes it a member of the reflection cone by
/// construction. The sign is read off the sector map rather than derived,
/// so it stays correct under any change of the factor order convention.
pub fn reflection_positive_cdw(basis: &CompositeBasis) -> Result<Vec<C64>, ModelError> {
    assert_eq!(
        basis.sector,
        FermionSector::HalfFilled,
        "the cone anchor lives on the half-filled basis"
    );
    let ell = basis.ell;
    let map = hole_particle_sector_map(ell)?;
    let table = sector_decompose(ell)?;
    let (q, xi, yi) = table
        .sector_of(FermionConfig::empty(ell))
        .expect("empty configuration is charge-matched");
    let row = table.balanced_index(q, xi, yi);
    let (cols, vals) = map.row(row);
    assert_eq!(cols.len(), 1, "vacuum preimage must be a single configuration");
    let col = cols[0] as usize;
    let sign = vals[0];
    let vac = phonon_vacuum(&basis.phonon, basis.site_count());
    let mut out = vec![C64::new(0.0, 0.0); basis.dim()];
    for (ph, &v) in vac.iter().enumerate() {
        out[basis.flat(col, ph)] = sign * v;
    }
    Ok(out)
}

fn digit_sum(mut ph: usize, d: usize, n_sites: u32) -> usize {
    let mut s = 0;
    for _ in 0..n_sites {
        s += ph % d;
        ph /= d;
    }
    s
}

fn quarter_turn(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// The displacement unitary V = e^{−iπN_p/2}·e^{L} with
/// L = (g/ω) Σ_j δn̂_j (a*_j − a_j). The antihermitian L is exponentiated
/// through the spectral decomposition of iL, so V is unitary to rounding at
/// any phonon cutoff. V c V^{−1} = e^{iαφ}c holds exactly even truncated,
/// both sides being functions of one and the same cut matrix, while
/// V a V^{−1} = ia − (g/ω)δn̂ and the Hamiltonian intertwining pick up
/// corner corrections that fade as the cutoff grows. N_p is diagonal only
/// in the occupation representation, so the grid is rejected.
pub fn lang_firsov(
    params: &ModelParams,
    basis: &Arc<CompositeBasis>,
) -> Result<OperatorMatrix, ModelError> {
    if basis.phonon.rep == PhononRep::Grid {
        return Err(ModelError::FockRepRequired("lang_firsov"));
    }
    assert_eq!(basis.ell, params.ell);
    assert_ne!(
        basis.sector,
        FermionSector::Balanced,
        "the displacement frame needs site occupation numbers"
    );
    let dim = basis.dim();
    let a = ladder_fock_block(basis.phonon.d);
    let raise_minus_lower = a.adjoint() - &a;
    let mut l = CsMat::zeros(dim, dim);
    for j in lambda(params.ell) {
        let df = restrict_fermion_op(basis, &full_delta_site(params.ell, j));
        let ph = phonon_site_matrix(basis, site_to_pos(params.ell, j), &raise_minus_lower);
        l = l.add(&df.kron(&ph));
    }
    let il = l.scale(C64::new(0.0, params.g / params.omega)).to_dense();
    let (vals, vecs) = hermitian_eigen(&il);
    let mut diag = CVec::zeros(dim);
    for k in 0..dim {
        diag[k] = C64::from_polar(1.0, -vals[k]);
    }
    let mut v = &vecs * CMat::from_diagonal(&diag) * vecs.adjoint();
    // Quarter turn e^{−iπN_p/2}: rows scale by (−i)^{total occupation}.
    for r in 0..dim {
        let (_, ph) = basis.split(r);
        let f = quarter_turn(digit_sum(ph, basis.phonon.d, basis.site_count()));
        for c in 0..dim {
            v[(r, c)] *= f;
        }
    }
    Ok(OperatorMatrix::new(
        Arc::clone(basis),
        CsMat::from_dense(&v),
        false,
    ))
}

fn left_site(ell: u32, p: u32) -> i64 {
    p as i64 - ell as i64
}

/// Reverses the low ℓ bits of a half-chain mask: the mirror image of a
/// configuration in local coordinates of the other half.
fn rev_bits(mask: u32, ell: u32) -> u32 {
    let mut out = 0;
    for p in 0..ell {
        if mask >> p & 1 == 1 {
            out |= 1 << (ell - 1 - p);
        }
    }
    out
}

/// Digit-reversal table for d^ℓ phonon indices.
fn phonon_reversal(d: usize, ell: u32) -> Vec<usize> {
    let total = d.pow(ell);
    let mut out = Vec::with_capacity(total);
    for ph in 0..total {
        let mut rest = ph;
        let mut rev = 0usize;
        for p in 0..ell {
            rev += (rest % d) * d.pow(ell - 1 - p);
            rest /= d;
        }
        out.push(rev);
    }
    out
}

/// b*_j applied to a left-half configuration: the half-chain parity string
/// multiplies before the raw creation on even sites and after it on odd
/// ones. Returns the accumulated sign; `mask` gains bit `p`.
fn b_create(mask: &mut u32, p: u32, odd: bool) -> f64 {
    let mut sign = 1.0;
    if !odd && mask.count_ones() % 2 == 1 {
        sign = -sign;
    }
    let (next, s) = flip_bit(*mask, p);
    debug_assert!(next & (1 << p) != 0, "duplicate creation");
    sign *= s;
    *mask = next;
    if odd && mask.count_ones() % 2 == 1 {
        sign = -sign;
    }
    sign
}

/// Sign of the ordered b*-product for one configuration: the odd-site block
/// acts first, and inside each block the factor at the highest site acts
/// first.
fn b_sign_walk(ell: u32, target: u32) -> f64 {
    let mut mask = 0u32;
    let mut sign = 1.0;
    for odd_block in [true, false] {
        for p in (0..ell).rev() {
            if target >> p & 1 == 0 {
                continue;
            }
            let odd = left_site(ell, p).rem_euclid(2) == 1;
            if odd != odd_block {
                continue;
            }
            sign *= b_create(&mut mask, p, odd);
        }
    }
    debug_assert_eq!(mask, target);
    sign
}

/// Sign of the reflected product: the same factor order as the b*-walk, each
/// creation carried to the mirror site and weighted by the parity of that
/// site. The resulting configuration is the bit reversal of the input.
fn theta_eps_walk(ell: u32, target: u32) -> f64 {
    let mut mask = 0u32;
    let mut sign = 1.0;
    for odd_block in [true, false] {
        for p in (0..ell).rev() {
            if target >> p & 1 == 0 {
                continue;
            }
            let i = left_site(ell, p);
            let odd = i.rem_euclid(2) == 1;
            if odd != odd_block {
                continue;
            }
            let r = reflect(i);
            if r.rem_euclid(2) == 1 {
                sign = -sign;
            }
            let (next, s) = flip_bit(mask, r as u32);
            mask = next;
            sign *= s;
        }
    }
    debug_assert_eq!(mask, rev_bits(target, ell));
    sign
}

static B_SIGN_CACHE: OnceLock<Mutex<BTreeMap<u32, Arc<Vec<f64>>>>> = OnceLock::new();

/// Signs relating the ordered b*-product basis of the left half chain to the
/// occupation basis, e_X = s(X)|X⟩, indexed by local mask and cached per ℓ.
/// Single fermions carry s = +1 on even sites and s = −1 on odd ones.
pub fn b_basis_signs(ell: u32) -> Arc<Vec<f64>> {
    let cache = B_SIGN_CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(v) = guard.get(&ell) {
        return Arc::clone(v);
    }
    let signs: Vec<f64> = (0..1u32 << ell).map(|m| b_sign_walk(ell, m)).collect();
    let out = Arc::new(signs);
    guard.insert(ell, Arc::clone(&out));
    out
}

/// An antiunitary map between product spaces of equal dimension, stored as
/// the signed permutation applied after complex conjugation:
/// (Rv)[perm[i]] = sign[i]·conj(v[i]). With `conjugates` false the same data
/// acts linearly.
#[derive(Clone, Debug)]
pub struct AntiunitaryRep {
    pub perm: Vec<usize>,
    pub sign: Vec<f64>,
    pub conjugates: bool,
}

impl AntiunitaryRep {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.perm.len());
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            let x = if self.conjugates { v[i].conj() } else { v[i] };
            out[p] = x * self.sign[i];
        }
        out
    }

    pub fn apply_inverse(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.perm.len());
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            let x = if self.conjugates { v[p].conj() } else { v[p] };
            out[i] = x * self.sign[i];
        }
        out
    }

    /// The linear factor P with P[perm[i], i] = sign[i]; orthogonal, so its
    /// adjoint is its inverse.
    pub fn linear_part(&self) -> CsMat {
        let n = self.dim();
        let mut b = CooBuilder::with_capacity(n, n, n);
        for (i, &p) in self.perm.iter().enumerate() {
            b.push(p, i, C64::new(self.sign[i], 0.0));
        }
        b.build()
    }

    /// R A R^{−1}, entrywise B[perm[r], perm[c]] = sign_r·sign_c·conj(A[r,c]).
    pub fn conjugate_op(&self, a: &CsMat) -> CsMat {
        assert_eq!(a.nrows(), self.dim());
        assert_eq!(a.ncols(), self.dim());
        let n = self.dim();
        let mut b = CooBuilder::with_capacity(n, n, a.nnz());
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let x = if self.conjugates { v.conj() } else { v };
                b.push(
                    self.perm[r],
                    self.perm[c as usize],
                    x * (self.sign[r] * self.sign[c as usize]),
                );
            }
        }
        b.build()
    }

    /// R^{−1} A R.
    pub fn conjugate_op_inverse(&self, a: &CsMat) -> CsMat {
        assert_eq!(a.nrows(), self.dim());
        let n = self.dim();
        let mut inv = vec![0usize; n];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        let mut b = CooBuilder::with_capacity(n, n, a.nnz());
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let (ri, ci) = (inv[r], inv[c as usize]);
                let x = if self.conjugates { v.conj() } else { v };
                b.push(ri, ci, x * (self.sign[ri] * self.sign[ci]));
            }
        }
        b.build()
    }
}

/// The antiunitary reflection from the left half space onto the right one:
/// configurations map to their mirror images with the ordered-product signs,
/// phonon digits reverse across the center, coefficients conjugate. Defined
/// for odd half-lengths, where the mirror always flips site parity in step
/// with the staggered structure.
pub fn reflection_antiunitary(
    ell: u32,
    phonon: &PhononBasisSpec,
) -> Result<AntiunitaryRep, ModelError> {
    if ell % 2 == 0 {
        return Err(ModelError::EllMustBeOdd("reflection_antiunitary", ell));
    }
    let s = b_basis_signs(ell);
    let fdim = 1usize << ell;
    let pdim = phonon.d.pow(ell);
    let prev = phonon_reversal(phonon.d, ell);
    let mut perm = Vec::with_capacity(fdim * pdim);
    let mut sign = Vec::with_capacity(fdim * pdim);
    for mask in 0..fdim as u32 {
        let sigma = s[mask as usize] * theta_eps_walk(ell, mask);
        let rmask = rev_bits(mask, ell) as usize;
        for ph in 0..pdim {
            perm.push(rmask * pdim + prev[ph]);
            sign.push(sigma);
        }
    }
    Ok(AntiunitaryRep {
        perm,
        sign,
        conjugates: true,
    })
}

/// u-product walk on one half space over the given odd local positions in
/// ascending site order, parity strings counted within the half.
fn half_hole_particle_walk(odd_pos: &[u32], start: u32) -> (u32, f64) {
    let mut mask = start;
    let mut sign = 1.0;
    for &p in odd_pos {
        let (next, s) = flip_bit(mask, p);
        mask = next;
        sign *= s;
        if (mask & !(1 << p)).count_ones() % 2 == 1 {
            sign = -sign;
        }
    }
    (mask, sign)
}

/// The reflection with both half-chain hole-particle maps absorbed,
/// τ = U_R^{−1} ∘ ϑ ∘ U_L: an antiunitary from the left to the right half
/// space that flips the sign of every density while carrying ladder
/// operators straight across the center.
pub fn tau(ell: u32, phonon: &PhononBasisSpec) -> Result<AntiunitaryRep, ModelError> {
    if ell % 2 == 0 {
        return Err(ModelError::EllMustBeOdd("tau", ell));
    }
    let fdim = 1usize << ell;
    let pdim = phonon.d.pow(ell);
    let s = b_basis_signs(ell);
    let prev = phonon_reversal(phonon.d, ell);
    let left_odd: Vec<u32> = (0..ell).filter(|&p| left_site(ell, p).rem_euclid(2) == 1).collect();
    let right_odd: Vec<u32> = (0..ell).filter(|&p| p % 2 == 1).collect();
    // Forward right walk, then inverted: the factors are involutions, so the
    // inverse permutation carries the same real signs.
    let mut rperm = vec![0usize; fdim];
    let mut rsign = vec![1.0; fdim];
    for m in 0..fdim as u32 {
        let (out, sg) = half_hole_particle_walk(&right_odd, m);
        rperm[m as usize] = out as usize;
        rsign[m as usize] = sg;
    }
    let mut rinv_perm = vec![0usize; fdim];
    let mut rinv_sign = vec![1.0; fdim];
    for m in 0..fdim {
        rinv_perm[rperm[m]] = m;
        rinv_sign[rperm[m]] = rsign[m];
    }
    let mut perm = Vec::with_capacity(fdim * pdim);
    let mut sign = Vec::with_capacity(fdim * pdim);
    for mask in 0..fdim as u32 {
        let (m1, s1) = half_hole_particle_walk(&left_odd, mask);
        let sigma = s[m1 as usize] * theta_eps_walk(ell, m1);
        let m2 = rev_bits(m1, ell) as usize;
        let (m3, s3) = (rinv_perm[m2], rinv_sign[m2]);
        for ph in 0..pdim {
            perm.push(m3 * pdim + prev[ph]);
            sign.push(s1 * sigma * s3);
        }
    }
    Ok(AntiunitaryRep {
        perm,
        sign,
        conjugates: true,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Left,
    Right,
}

/// One half of the chain with its own fermion ⊗ phonon product space.
pub struct HalfSpace {
    pub ell: u32,
    pub side: Side,
    pub phonon: PhononBasisSpec,
}

impl HalfSpace {
    pub fn new(ell: u32, side: Side, phonon: PhononBasisSpec) -> Self {
        assert!(ell >= 1 && 2 * ell <= 30, "half-chain size out of range");
        HalfSpace { ell, side, phonon }
    }

    pub fn sites(&self) -> Vec<i64> {
        match self.side {
            Side::Left => lambda_left(self.ell),
            Side::Right => lambda_right(self.ell),
        }
    }

    pub fn local_pos(&self, j: i64) -> u32 {
        let l = self.ell as i64;
        let p = match self.side {
            Side::Left => {
                assert!(-l <= j && j < 0, "site {j} outside the left half");
                j + l
            }
            Side::Right => {
                assert!(0 <= j && j < l, "site {j} outside the right half");
                j
            }
        };
        p as u32
    }

    pub fn fermion_dim(&self) -> usize {
        1 << self.ell
    }

    pub fn phonon_dim(&self) -> usize {
        self.phonon.d.pow(self.ell)
    }

    pub fn dim(&self) -> usize {
        self.fermion_dim() * self.phonon_dim()
    }

    fn lift_fermion(&self, f: &CsMat) -> CsMat {
        f.kron(&CsMat::identity(self.phonon_dim()))
    }

    fn lift_phonon(&self, p: &CsMat) -> CsMat {
        CsMat::identity(self.fermion_dim()).kron(p)
    }

    fn fermion_diag(&self, f: impl Fn(u32) -> f64) -> CsMat {
        let pdim = self.phonon_dim();
        let dim = self.dim();
        let mut b = CooBuilder::with_capacity(dim, dim, dim);
        for mask in 0..self.fermion_dim() as u32 {
            let v = f(mask);
            if v == 0.0 {
                continue;
            }
            for ph in 0..pdim {
                let flat = mask as usize * pdim + ph;
                b.push(flat, flat, C64::new(v, 0.0));
            }
        }
        b.build()
    }

    pub fn annihilator(&self, j: i64) -> CsMat {
        self.lift_fermion(&annihilator_bits(self.ell, self.local_pos(j)))
    }

    /// (−1)^{N̂} over the half.
    pub fn parity(&self) -> CsMat {
        self.fermion_diag(|m| if m.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// b_j: the annihilator dressed with the half-chain parity string, the
    /// string acting after c_j on even sites and before it on odd ones.
    /// The reflection carries b_j to (−1)^{r(j)} c_{r(j)}; the seam bonds
    /// only ever reflect odd sites, where the weight is one.
    pub fn b_annihilator(&self, j: i64) -> CsMat {
        let c = self.annihilator(j);
        let p = self.parity();
        if j.rem_euclid(2) == 0 {
            p.matmul(&c)
        } else {
            c.matmul(&p)
        }
    }

    /// n̂_j − 1/2.
    pub fn delta_number(&self, j: i64) -> CsMat {
        let pos = self.local_pos(j);
        self.fermion_diag(|m| if m >> pos & 1 == 1 { 0.5 } else { -0.5 })
    }

    pub fn phonon_site(&self, j: i64, block: &CMat) -> CsMat {
        self.lift_phonon(&phonon_site_block(
            self.phonon.d,
            self.ell,
            self.local_pos(j),
            block,
        ))
    }

    /// e^{−iαφ_j}; pass −α for the opposite phase.
    pub fn phase(&self, j: i64, omega: f64, alpha: f64) -> CsMat {
        self.phonon_site(j, &phase_block(&self.phonon, omega, alpha))
    }

    /// Kinetic part with both bond ends inside the half: pair creation plus
    /// pair annihilation across every even-to-odd bond, dressed with the
    /// displacement phases, mirroring the whole-chain assembly term for term.
    pub fn kinetic(&self, params: &ModelParams) -> CsMat {
        assert_eq!(self.ell, params.ell);
        let alpha = 2f64.sqrt() * params.g / params.omega.sqrt();
        let phase_minus = phase_block(&self.phonon, params.omega, alpha);
        let phase_plus = phase_block(&self.phonon, params.omega, -alpha);
        let sites = self.sites();
        let mut acc = CsMat::zeros(self.dim(), self.dim());
        for &j in sites.iter().filter(|j| j.rem_euclid(2) == 0) {
            for eps in [1i64, -1] {
                let k = j + eps;
                if !sites.contains(&k) {
                    continue;
                }
                let cj = annihilator_bits(self.ell, self.local_pos(j));
                let ck = annihilator_bits(self.ell, self.local_pos(k));
                let pair = cj.adjoint().matmul(&ck.adjoint());
                let ph = phonon_site_block(self.phonon.d, self.ell, self.local_pos(j), &phase_minus)
                    .matmul(&phonon_site_block(
                        self.phonon.d,
                        self.ell,
                        self.local_pos(k),
                        &phase_plus,
                    ));
                let term = pair.kron(&ph).scale(C64::new(-params.t, 0.0));
                acc = acc.add(&term).add(&term.adjoint());
            }
        }
        acc
    }

    /// Σ over ordered pairs i ≠ j inside the half of the sign-alternating
    /// coupling times δn̂_iδn̂_j.
    pub fn interaction(&self, params: &ModelParams) -> CsMat {
        assert_eq!(self.ell, params.ell);
        let sites = self.sites();
        let positions: Vec<u32> = sites.iter().map(|&j| self.local_pos(j)).collect();
        self.fermion_diag(|mask| {
            let mut acc = 0.0;
            for (ii, &i) in sites.iter().enumerate() {
                for (jj, &j) in sites.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let w = params.interaction.w_of(i - j);
                    if w == 0.0 {
                        continue;
                    }
                    let di = if mask >> positions[ii] & 1 == 1 { 0.5 } else { -0.5 };
                    let dj = if mask >> positions[jj] & 1 == 1 { 0.5 } else { -0.5 };
                    acc += w * di * dj;
                }
            }
            acc
        })
    }

    /// ω Σ_j a*_j a_j over the half. This is the number form without the
    /// zero-point shift, the split that makes the two halves sum exactly to
    /// the whole-chain phonon term.
    pub fn phonon_energy(&self, omega: f64) -> CsMat {
        let num = number_block(&self.phonon);
        let pdim = self.phonon_dim();
        let mut acc = CsMat::zeros(pdim, pdim);
        for p in 0..self.ell {
            acc = acc.add(&phonon_site_block(self.phonon.d, self.ell, p, &num));
        }
        self.lift_phonon(&acc.scale(C64::new(omega, 0.0)))
    }

    /// Kinetic − interaction + phonon energy: the half-chain block whose two
    /// reflected copies bracket the seam terms.
    pub fn half_hamiltonian(&self, params: &ModelParams) -> CsMat {
        self.kinetic(params)
            .sub(&self.interaction(params))
            .add(&self.phonon_energy(params.omega))
    }
}

fn column_lists(m: &CsMat) -> Vec<Vec<(usize, C64)>> {
    let mut cols = vec![Vec::new(); m.ncols()];
    for r in 0..m.nrows() {
        let (cs, vs) = m.row(r);
        for (&c, &v) in cs.iter().zip(vs) {
            cols[c as usize].push((r, v));
        }
    }
    cols
}

/// A ⊗ B on the charge-matched basis, A acting on the left half space and B
/// on the right one, both in local (mask, phonon) coordinates. The
/// identification with whole-chain configurations is the plain Kronecker
/// one; a product that carries a matched configuration to an unmatched one
/// is a caller bug and panics.
pub fn balanced_kron(basis: &CompositeBasis, a: &CsMat, b: &CsMat) -> CsMat {
    assert_eq!(
        basis.sector,
        FermionSector::Balanced,
        "seam products live on the charge-matched basis"
    );
    let ell = basis.ell;
    let dl = basis.phonon.d.pow(ell);
    let half = (1usize << ell) * dl;
    assert_eq!(a.nrows(), half);
    assert_eq!(a.ncols(), half);
    assert_eq!(b.nrows(), half);
    assert_eq!(b.ncols(), half);
    let cols_a = column_lists(a);
    let cols_b = column_lists(b);
    let pdim = basis.phonon_dim();
    let mut out = CooBuilder::new(basis.dim(), basis.dim());
    for (fi, cfg) in basis.configs.iter().enumerate() {
        let x = cfg.left_mask() as usize;
        let y = cfg.right_mask() as usize;
        for ph in 0..pdim {
            let (pl, pr) = (ph % dl, ph / dl);
            let col_flat = fi * pdim + ph;
            for &(ra, va) in &cols_a[x * dl + pl] {
                let (x2, pl2) = (ra / dl, ra % dl);
                for &(rb, vb) in &cols_b[y * dl + pr] {
                    let (y2, pr2) = (rb / dl, rb % dl);
                    let cfg2 = FermionConfig::combine(ell, x2 as u32, y2 as u32);
                    let fi2 = basis
                        .config_index(cfg2.mask)
                        .expect("half-chain product leaks out of the charge-matched sector");
                    out.push(fi2 * pdim + (pl2 + dl * pr2), col_flat, va * vb);
                }
            }
        }
    }
    out.build()
}

/// The seam kinetic term in left ⊗ right product form: the pair terms
/// joining site −1 to 0 and site −ℓ to ℓ−1 through the wrap. At ℓ = 1 both
/// bonds name the same pair of sites and the sum doubles, matching the
/// whole-chain convention.
pub fn t_cross(params: &ModelParams, basis: &CompositeBasis) -> CsMat {
    let alpha = 2f64.sqrt() * params.g / params.omega.sqrt();
    let left = HalfSpace::new(params.ell, Side::Left, basis.phonon.clone());
    let right = HalfSpace::new(params.ell, Side::Right, basis.phonon.clone());
    let l = params.ell as i64;
    let mut acc = CsMat::zeros(basis.dim(), basis.dim());
    for (lj, rj) in [(-1i64, 0i64), (-l, l - 1)] {
        // e^{+iαφ_{lj}} b*_{lj} ⊗ e^{−iαφ_{rj}} c*_{rj} plus its adjoint.
        let xa = left
            .phase(lj, params.omega, -alpha)
            .matmul(&left.b_annihilator(lj).adjoint());
        let xb = right
            .phase(rj, params.omega, alpha)
            .matmul(&right.annihilator(rj).adjoint());
        let term = balanced_kron(basis, &xa, &xb).scale(C64::new(-params.t, 0.0));
        acc = acc.add(&term).add(&term.adjoint());
    }
    acc
}

/// The seam density coupling: twice the sign-alternating interaction between
/// every left site and every right site, each unordered cross pair appearing
/// twice in the whole-chain double sum.
pub fn w_cross(params: &ModelParams, basis: &CompositeBasis) -> CsMat {
    let left = HalfSpace::new(params.ell, Side::Left, basis.phonon.clone());
    let right = HalfSpace::new(params.ell, Side::Right, basis.phonon.clone());
    let mut acc = CsMat::zeros(basis.dim(), basis.dim());
    for i in lambda_left(params.ell) {
        for k in lambda_right(params.ell) {
            let w = params.interaction.w_of(i - k);
            if w == 0.0 {
                continue;
            }
            let term = balanced_kron(basis, &left.delta_number(i), &right.delta_number(k));
            acc = acc.add(&term.scale(C64::new(2.0 * w, 0.0)));
        }
    }
    acc
}

/// One matrix per shared half-chain charge: the coordinates of a
/// charge-matched state in the ordered-product basis of the left half,
/// columns taken against the reflected copies of the same basis.
#[derive(Clone, Debug)]
pub struct SectorMatrices {
    pub q_values: Vec<i64>,
    pub mats: Vec<CMat>,
}

impl SectorMatrices {
    /// Σ_q ‖M_q‖²_F; equals the squared norm of the underlying state.
    pub fn norm_sq(&self) -> f64 {
        self.mats.iter().map(|m| m.norm_squared()).sum()
    }

    /// Blockwise conjugate transpose, the coordinate form of the modular
    /// conjugation: a state is reflection-real iff this fixes it.
    pub fn adjoint(&self) -> SectorMatrices {
        SectorMatrices {
            q_values: self.q_values.clone(),
            mats: self.mats.iter().map(|m| m.adjoint()).collect(),
        }
    }
}

/// Translates between flat coordinates on the charge-matched basis and the
/// per-charge matrices. A state belongs to the reflection cone exactly when
/// every block comes out Hermitian positive semidefinite, and the map is an
/// isometry: Σ_q ‖M_q‖²_F = ‖ψ‖².
pub struct Vectorizer {
    pub ell: u32,
    pub table: ChargeSectorTable,
    dl: usize,
    s_signs: Arc<Vec<f64>>,
    eps_signs: Vec<f64>,
    prev: Vec<usize>,
    bal_masks: Vec<u32>,
}

impl Vectorizer {
    pub fn new(basis: &CompositeBasis) -> Result<Vectorizer, ModelError> {
        if basis.ell % 2 == 0 {
            return Err(ModelError::EllMustBeOdd("vectorize", basis.ell));
        }
        let table = sector_decompose(basis.ell)?;
        let eps_signs = (0..1u32 << basis.ell)
            .map(|m| theta_eps_walk(basis.ell, m))
            .collect();
        let bal_masks = table.balanced_configs().iter().map(|c| c.mask).collect();
        Ok(Vectorizer {
            ell: basis.ell,
            dl: basis.phonon.d.pow(basis.ell),
            s_signs: b_basis_signs(basis.ell),
            eps_signs,
            prev: phonon_reversal(basis.phonon.d, basis.ell),
            table,
            bal_masks,
        })
    }

    pub fn balanced_len(&self) -> usize {
        self.bal_masks.len() * self.dl * self.dl
    }

    fn full_len(&self) -> usize {
        (1usize << (2 * self.ell)) * self.dl * self.dl
    }

    /// Coordinates on the charge-matched basis; a full-basis vector is
    /// folded after checking that no weight lives outside the matched
    /// configurations.
    fn matched_coords<'a>(&self, psi: &'a [C64]) -> Result<Cow<'a, [C64]>, ModelError> {
        if psi.len() == self.balanced_len() {
            return Ok(Cow::Borrowed(psi));
        }
        assert_eq!(
            psi.len(),
            self.full_len(),
            "state length matches neither the matched nor the full basis"
        );
        let d2 = self.dl * self.dl;
        let mut out = Vec::with_capacity(self.balanced_len());
        let mut captured = 0.0;
        for &mask in &self.bal_masks {
            let base = mask as usize * d2;
            for ph in 0..d2 {
                let v = psi[base + ph];
                captured += v.norm_sqr();
                out.push(v);
            }
        }
        let total: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        let leak = (total - captured).max(0.0);
        if leak > 1e-12 * total.max(1.0) {
            return Err(ModelError::UnbalancedSupport(leak));
        }
        Ok(Cow::Owned(out))
    }

    pub fn vectorize(&self, psi: &[C64]) -> Result<SectorMatrices, ModelError> {
        let bal = self.matched_coords(psi)?;
        let d2 = self.dl * self.dl;
        let mut mats = Vec::with_capacity(self.table.sector_count());
        for q in 0..self.table.sector_count() {
            let labels = &self.table.left_labels[q];
            let rows = labels.len() * self.dl;
            let mut m = CMat::zeros(rows, rows);
            for (xi, &mx) in labels.iter().enumerate() {
                let sx = self.s_signs[mx as usize];
                for (yj, &my) in labels.iter().enumerate() {
                    let sgn = sx * self.eps_signs[my as usize];
                    let ry = rev_bits(my, self.ell);
                    let yi = self.table.right_labels[q]
                        .binary_search(&ry)
                        .expect("mirrored label missing from its sector");
                    let base = self.table.balanced_index(q, xi, yi) * d2;
                    for mm in 0..self.dl {
                        for nn in 0..self.dl {
                            m[(xi * self.dl + mm, yj * self.dl + nn)] =
                                bal[base + mm + self.dl * self.prev[nn]] * sgn;
                        }
                    }
                }
            }
            mats.push(m);
        }
        Ok(SectorMatrices {
            q_values: self.table.q_values.clone(),
            mats,
        })
    }

    /// Inverse of [`Vectorizer::vectorize`], returning charge-matched
    /// coordinates.
    pub fn devectorize(&self, m: &SectorMatrices) -> Vec<C64> {
        assert_eq!(m.q_values, self.table.q_values);
        let d2 = self.dl * self.dl;
        let mut out = vec![C64::new(0.0, 0.0); self.balanced_len()];
        for q in 0..self.table.sector_count() {
            let labels = &self.table.left_labels[q];
            for (xi, &mx) in labels.iter().enumerate() {
                let sx = self.s_signs[mx as usize];
                for (yj, &my) in labels.iter().enumerate() {
                    let sgn = sx * self.eps_signs[my as usize];
                    let ry = rev_bits(my, self.ell);
                    let yi = self.table.right_labels[q]
                        .binary_search(&ry)
                        .expect("mirrored label missing from its sector");
                    let base = self.table.balanced_index(q, xi, yi) * d2;
                    for mm in 0..self.dl {
                        for nn in 0..self.dl {
                            out[base + mm + self.dl * self.prev[nn]] =
                                m.mats[q][(xi * self.dl + mm, yj * self.dl + nn)] * sgn;
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractionSpec;
    use crate::operators::{
        boson_ops, build_hamiltonian, build_transformed, embed_phonon, ladder_block, phi_block,
        pi_block, transformed_hopping, transformed_w_matrix,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pars(ell: u32, t: f64, g: f64, omega: f64, spec: InteractionSpec, n_max: usize) -> ModelParams {
        ModelParams::new(ell, t, g, omega, spec, n_max, n_max + 1).unwrap()
    }

    fn power(ell: u32, n_max: usize) -> ModelParams {
        pars(
            ell,
            0.7,
            0.35,
            1.3,
            InteractionSpec::power_law(1.5, 0.9).unwrap(),
            n_max,
        )
    }

    fn fock(n_max: usize) -> PhononBasisSpec {
        PhononBasisSpec::fock(n_max)
    }

    fn diff(a: &CsMat, b: &CsMat) -> f64 {
        a.sub(b).max_abs()
    }

    fn ident_defect(m: &CsMat) -> f64 {
        m.sub(&CsMat::identity(m.nrows())).max_abs()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn hole_particle_conjugation_identities() {
        for ell in [1u32, 3] {
            let basis = Arc::new(CompositeBasis::full(ell, fock(0)).unwrap());
            let u = hole_particle(&basis).matrix;
            let ud = u.adjoint();
            assert!(ident_defect(&u.matmul(&ud)) <= 1e-12);
            assert!(ident_defect(&ud.matmul(&u)) <= 1e-12);

            let mut staggered_number = CsMat::zeros(basis.dim(), basis.dim());
            let mut number = CsMat::zeros(basis.dim(), basis.dim());
            for j in lambda(ell) {
                let c = embed_fermion(&basis, &full_annihilator(ell, j));
                let conj = u.matmul(&c).matmul(&ud);
                if j.rem_euclid(2) == 1 {
                    assert!(diff(&conj, &c.adjoint()) <= 1e-12, "odd site {j}");
                } else {
                    assert!(diff(&conj, &c) <= 1e-12, "even site {j}");
                }

                let d = embed_fermion(&basis, &full_delta_site(ell, j));
                let dconj = u.matmul(&d).matmul(&ud);
                let sgn = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                assert!(diff(&dconj, &d.scale(C64::new(sgn, 0.0))) <= 1e-12);

                let n = c.adjoint().matmul(&c);
                number = number.add(&n);
                staggered_number = staggered_number.add(&n.scale(C64::new(sgn, 0.0)));
            }
            // N̂ conjugates to the staggered charge plus the half count.
            let lhs = u.matmul(&number).matmul(&ud);
            let rhs = staggered_number
                .add(&CsMat::identity(basis.dim()).scale(C64::new(ell as f64, 0.0)));
            assert!(diff(&lhs, &rhs) <= 1e-12);
        }
    }

    #[test]
    fn hole_particle_sends_vacuum_to_staggered_state() {
        for ell in [1u32, 3] {
            let basis = Arc::new(CompositeBasis::full(ell, fock(1)).unwrap());
            let u = hole_particle(&basis).matrix;
            let ph = 1usize; // one phonon somewhere: the map must not touch it
            let mut vac = vec![C64::new(0.0, 0.0); basis.dim()];
            vac[basis.flat(0, ph)] = C64::new(1.0, 0.0);
            let image = u.matvec_alloc(&vac);
            let target = basis
                .config_index(cdw_configuration(ell).mask)
                .unwrap();
            for (i, v) in image.iter().enumerate() {
                // Ascending factor order gives the plus sign at every odd ℓ.
                let want = if i == basis.flat(target, ph) { 1.0 } else { 0.0 };
                assert!((v - C64::new(want, 0.0)).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn cone_anchor_sign_is_measured_not_assumed() {
        // U^{−1} = (−1)^{ℓ(ℓ−1)/2} U for ℓ anticommuting involutions, so the
        // anchor flips sign relative to the staggered state exactly at ℓ = 3.
        for (ell, sgn) in [(1u32, 1.0), (3, -1.0)] {
            let basis = CompositeBasis::half_filled(ell, fock(1)).unwrap();
            let anchor = reflection_positive_cdw(&basis).unwrap();
            let staggered = cdw_state(&basis);
            let d: f64 = anchor
                .iter()
                .zip(&staggered)
                .map(|(a, s)| (*a - *s * sgn).norm())
                .fold(0.0, f64::max);
            assert!(d <= 1e-14, "ell = {ell}");
        }
    }

    #[test]
    fn sector_map_matches_full_conjugation() {
        let ell = 3u32;
        let map = hole_particle_sector_map(ell).unwrap();
        assert!(ident_defect(&map.adjoint().matmul(&map)) <= 1e-14);

        let table = sector_decompose(ell).unwrap();
        let half = enumerate_half_filled(ell).unwrap();
        let ufull = hole_particle_fermion(ell);
        let bal = table.balanced_configs();
        for (col, cfg) in half.iter().enumerate() {
            let mut e = vec![C64::new(0.0, 0.0); 1 << (2 * ell)];
            e[cfg.mask as usize] = C64::new(1.0, 0.0);
            let image = ufull.matvec_alloc(&e);
            for (row, bcfg) in bal.iter().enumerate() {
                let dense = image[bcfg.mask as usize];
                let (cols, vals) = map.row(row);
                let sparse = cols
                    .iter()
                    .zip(vals)
                    .find(|(c, _)| **c as usize == col)
                    .map(|(_, v)| *v)
                    .unwrap_or(C64::new(0.0, 0.0));
                assert!((dense - sparse).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn lang_firsov_rejects_grid_and_reduces_to_quarter_turn() {
        let p = pars(1, 1.0, 0.0, 1.0, InteractionSpec::nearest(1.0).unwrap(), 3);
        let grid_basis = Arc::new(
            CompositeBasis::full(1, PhononBasisSpec::grid(4)).unwrap(),
        );
        match lang_firsov(&p, &grid_basis) {
            Err(ModelError::FockRepRequired(_)) => {}
            _ => panic!("grid representation must be rejected"),
        }

        let basis = Arc::new(CompositeBasis::full(1, fock(3)).unwrap());
        let v = lang_firsov(&p, &basis).unwrap().matrix;
        assert!(ident_defect(&v.adjoint().matmul(&v)) <= 1e-12);
        // g = 0: V is the bare quarter turn and conjugates a to ia exactly.
        let mut b = CooBuilder::new(basis.dim(), basis.dim());
        for r in 0..basis.dim() {
            let (_, ph) = basis.split(r);
            b.push(r, r, quarter_turn(digit_sum(ph, basis.phonon.d, 2)));
        }
        let q = b.build();
        assert!(diff(&v, &q) <= 1e-13);
        let a = boson_ops(&basis, -1, p.omega).unwrap().a.matrix;
        let lhs = v.matmul(&a).matmul(&v.adjoint());
        assert!(diff(&lhs, &a.scale(C64::new(0.0, 1.0))) <= 1e-12);
    }

    fn low_occupation_probes(basis: &CompositeBasis, max_occ: usize) -> Vec<usize> {
        (0..basis.dim())
            .filter(|&r| {
                let (_, ph) = basis.split(r);
                digit_sum(ph, basis.phonon.d, basis.site_count()) <= max_occ
            })
            .collect()
    }

    /// √Σ over probe columns of ‖(V A V* − R) e‖².
    fn conjugation_defect(
        v: &CsMat,
        vd: &CsMat,
        a: &CsMat,
        r: &CsMat,
        probes: &[usize],
    ) -> f64 {
        let dim = v.nrows();
        let mut acc = 0.0;
        for &p in probes {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[p] = C64::new(1.0, 0.0);
            let x = v.matvec_alloc(&a.matvec_alloc(&vd.matvec_alloc(&e)));
            let want = r.matvec_alloc(&e);
            acc += x
                .iter()
                .zip(&want)
                .map(|(u, w)| (u - w).norm_sqr())
                .sum::<f64>();
        }
        acc.sqrt()
    }

    #[test]
    fn displacement_frame_defects_shrink_with_cutoff() {
        let spec = InteractionSpec::nearest(0.9).unwrap();
        let (t, g, omega) = (0.8, 0.4, 1.1f64);
        let alpha = 2f64.sqrt() * g / omega.sqrt();
        let mut c_defects = Vec::new();
        let mut a_defects = Vec::new();
        let mut h_defects = Vec::new();
        for n_max in [2usize, 4, 6] {
            let p = pars(1, t, g, omega, spec.clone(), n_max);
            let basis = Arc::new(CompositeBasis::full(1, fock(n_max)).unwrap());
            let v = lang_firsov(&p, &basis).unwrap().matrix;
            let vd = v.adjoint();
            assert!(ident_defect(&vd.matmul(&v)) <= 1e-12);
            let probes = low_occupation_probes(&basis, n_max / 2);

            let c = embed_fermion(&basis, &full_annihilator(1, -1));
            let dressed = c.matmul(&embed_phonon(
                &basis,
                &phonon_site_matrix(&basis, 0, &phase_block(&basis.phonon, omega, -alpha)),
            ));
            c_defects.push(conjugation_defect(&v, &vd, &c, &dressed, &probes));

            let a = embed_phonon(
                &basis,
                &phonon_site_matrix(&basis, 0, &ladder_block(&basis.phonon)),
            );
            let delta = embed_fermion(&basis, &full_delta_site(1, -1));
            let rhs = a
                .scale(C64::new(0.0, 1.0))
                .sub(&delta.scale(C64::new(g / omega, 0.0)));
            a_defects.push(conjugation_defect(&v, &vd, &a, &rhs, &probes));

            // Whole-Hamiltonian form: V H V* + g²|Λ|/4ω equals the
            // phase-dressed hopping plus interaction plus phonon energy.
            let h = build_hamiltonian(&p, &basis).op.matrix;
            let mut dressed_hop = CsMat::zeros(basis.dim(), basis.dim());
            for j in lambda(1) {
                let k = crate::operators::wrap_site(1, j + 1);
                let cj = embed_fermion(&basis, &full_annihilator(1, j));
                let ck = embed_fermion(&basis, &full_annihilator(1, k));
                let term = cj
                    .adjoint()
                    .matmul(&ck)
                    .matmul(&embed_phonon(
                        &basis,
                        &phonon_site_matrix(
                            &basis,
                            site_to_pos(1, j),
                            &phase_block(&basis.phonon, omega, alpha),
                        ),
                    ))
                    .matmul(&embed_phonon(
                        &basis,
                        &phonon_site_matrix(
                            &basis,
                            site_to_pos(1, k),
                            &phase_block(&basis.phonon, omega, -alpha),
                        ),
                    ))
                    .scale(C64::new(-t, 0.0));
                dressed_hop = dressed_hop.add(&term).add(&term.adjoint());
            }
            let mut pot = CsMat::zeros(basis.dim(), basis.dim());
            for i in lambda(1) {
                for j in lambda(1) {
                    if i == j {
                        continue;
                    }
                    let di = embed_fermion(&basis, &full_delta_site(1, i));
                    let dj = embed_fermion(&basis, &full_delta_site(1, j));
                    pot = pot.add(
                        &di.matmul(&dj)
                            .scale(C64::new(spec.u_of(i - j), 0.0)),
                    );
                }
            }
            let num = number_block(&basis.phonon);
            let mut ph_sum = CsMat::zeros(basis.phonon_dim(), basis.phonon_dim());
            for pos in 0..2 {
                ph_sum = ph_sum.add(&phonon_site_block(basis.phonon.d, 2, pos, &num));
            }
            let k_term = embed_phonon(&basis, &ph_sum).scale(C64::new(omega, 0.0));
            let target = dressed_hop.add(&pot).add(&k_term);
            let shift = g * g * 2.0 / (4.0 * omega);
            let shifted =
                target.sub(&CsMat::identity(basis.dim()).scale(C64::new(shift, 0.0)));
            h_defects.push(conjugation_defect(&v, &vd, &h, &shifted, &probes));
        }
        // Phase dressing of c is exact at every cutoff; the ladder and
        // Hamiltonian relations carry corner corrections that shrink.
        for d in &c_defects {
            assert!(*d <= 1e-12, "c dressing must be exact: {c_defects:?}");
        }
        // Measured at these parameters: a 0.139, 0.034, 0.0069 and
        // h 0.053, 0.015, 0.0031, a factor of 4 to 5 per cutoff step.
        for d in [&a_defects, &h_defects] {
            assert!(d[0] > d[1] && d[1] > d[2], "defects must shrink: {d:?}");
            assert!(d[2] < 1e-2, "final defect too large: {d:?}");
        }
    }

    #[test]
    fn displacement_spectra_converge_to_shifted_agreement() {
        let spec = InteractionSpec::nearest(1.0).unwrap();
        let (t, g, omega) = (1.0, 0.5, 1.0);
        let shift = g * g * 2.0 / (4.0 * omega);
        let mut gaps = Vec::new();
        for n_max in [2usize, 4, 6, 8] {
            let p = pars(1, t, g, omega, spec.clone(), n_max);
            let plain = Arc::new(CompositeBasis::half_filled(1, fock(n_max)).unwrap());
            let paired = Arc::new(CompositeBasis::balanced(1, fock(n_max)).unwrap());
            let e_plain = hermitian_eigen(&build_hamiltonian(&p, &plain).op.matrix.to_dense()).0[0];
            let e_paired =
                hermitian_eigen(&build_transformed(&p, &paired).op.matrix.to_dense()).0[0];
            gaps.push((e_paired - e_plain - shift).abs());
        }
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "gap sequence must decrease: {gaps:?}");
        }
        assert!(gaps[3] <= 1e-3, "final gap too large: {gaps:?}");
    }

    #[test]
    fn b_signs_match_matrix_oracle() {
        // Independent route: multiply b* matrices in the definition order
        // and read the coefficient; the bit walk must agree mask by mask.
        for ell in [1u32, 2, 3, 4] {
            let hs = HalfSpace::new(ell, Side::Left, fock(0));
            let signs = b_basis_signs(ell);
            for mask in 0..1u32 << ell {
                let mut state = vec![C64::new(0.0, 0.0); hs.dim()];
                state[0] = C64::new(1.0, 0.0);
                for odd_block in [true, false] {
                    for p in (0..ell).rev() {
                        if mask >> p & 1 == 0 {
                            continue;
                        }
                        let site = left_site(ell, p);
                        if (site.rem_euclid(2) == 1) != odd_block {
                            continue;
                        }
                        state = hs.b_annihilator(site).adjoint().matvec_alloc(&state);
                    }
                }
                for (i, v) in state.iter().enumerate() {
                    let want = if i == mask as usize { signs[mask as usize] } else { 0.0 };
                    assert!((v - C64::new(want, 0.0)).norm() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn b_operators_satisfy_car_and_drop_strings_in_pairs() {
        let hs = HalfSpace::new(3, Side::Left, fock(0));
        let sites = hs.sites();
        let eye = CsMat::identity(hs.dim());
        for &i in &sites {
            for &j in &sites {
                let bi = hs.b_annihilator(i);
                let bj = hs.b_annihilator(j);
                let anti = bi.matmul(&bj).add(&bj.matmul(&bi));
                assert!(anti.max_abs() <= 1e-14, "{{b_{i}, b_{j}}}");
                let cross = bi
                    .matmul(&bj.adjoint())
                    .add(&bj.adjoint().matmul(&bi));
                let want = if i == j { eye.clone() } else { CsMat::zeros(hs.dim(), hs.dim()) };
                assert!(diff(&cross, &want) <= 1e-14, "{{b_{i}, b*_{j}}}");
            }
        }
        // Even-odd creation pairs shed their parity strings.
        for k in [-3i64, -1] {
            let lhs = hs.b_annihilator(-2).adjoint().matmul(&hs.b_annihilator(k).adjoint());
            let rhs = hs.annihilator(-2).adjoint().matmul(&hs.annihilator(k).adjoint());
            assert!(diff(&lhs, &rhs) <= 1e-14);
        }
    }

    #[test]
    fn reflection_maps_left_operators_to_right() {
        assert!(matches!(
            reflection_antiunitary(2, &fock(1)),
            Err(ModelError::EllMustBeOdd(_, 2))
        ));
        for ell in [1u32, 3] {
            let phonon = fock(1);
            let th = reflection_antiunitary(ell, &phonon).unwrap();
            let left = HalfSpace::new(ell, Side::Left, phonon.clone());
            let right = HalfSpace::new(ell, Side::Right, phonon.clone());

            let p = th.linear_part();
            assert!(ident_defect(&p.matmul(&p.adjoint())) <= 1e-14);

            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let psi = random_state(&mut rng, left.dim());
            let back = th.apply_inverse(&th.apply(&psi));
            let roundtrip: f64 = psi
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(roundtrip <= 1e-14);

            // Vacuum to vacuum with a plus sign.
            let mut vac = vec![C64::new(0.0, 0.0); left.dim()];
            vac[0] = C64::new(1.0, 0.0);
            let image = th.apply(&vac);
            assert!((image[0] - C64::new(1.0, 0.0)).norm() <= 1e-14);

            let omega = 1.3;
            for j in lambda_left(ell) {
                let r = reflect(j);
                // ϑ b_j ϑ^{−1} = (−1)^{r(j)} c_{r(j)}: the site-parity weight
                // of the reflected product survives on even sites.
                let sgn = if r.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                assert!(
                    diff(
                        &th.conjugate_op(&left.b_annihilator(j)),
                        &right.annihilator(r).scale(C64::new(sgn, 0.0))
                    ) <= 1e-13
                );
                let a_l = left.phonon_site(j, &ladder_block(&phonon));
                let a_r = right.phonon_site(r, &ladder_block(&phonon));
                assert!(diff(&th.conjugate_op(&a_l), &a_r) <= 1e-13);
                let phi_l = left.phonon_site(j, &phi_block(&phonon, omega));
                let phi_r = right.phonon_site(r, &phi_block(&phonon, omega));
                assert!(diff(&th.conjugate_op(&phi_l), &phi_r) <= 1e-13);
                // Antilinearity flips the momentum.
                let pi_l = left.phonon_site(j, &pi_block(&phonon, omega));
                let pi_r = right.phonon_site(r, &pi_block(&phonon, omega));
                assert!(diff(&th.conjugate_op(&pi_l), &pi_r.scale(C64::new(-1.0, 0.0))) <= 1e-13);
                // Densities cross unchanged.
                assert!(diff(&th.conjugate_op(&left.delta_number(j)), &right.delta_number(r)) <= 1e-13);
            }
        }
    }

    #[test]
    fn tau_flips_densities_and_carries_ladders() {
        assert!(matches!(tau(2, &fock(1)), Err(ModelError::EllMustBeOdd(_, 2))));
        for ell in [1u32, 3] {
            let phonon = fock(1);
            let tt = tau(ell, &phonon).unwrap();
            let left = HalfSpace::new(ell, Side::Left, phonon.clone());
            let right = HalfSpace::new(ell, Side::Right, phonon.clone());
            let p = tt.linear_part();
            assert!(ident_defect(&p.matmul(&p.adjoint())) <= 1e-14);
            for j in lambda_left(ell) {
                let r = reflect(j);
                let lhs = tt.conjugate_op(&left.delta_number(j));
                assert!(diff(&lhs, &right.delta_number(r).scale(C64::new(-1.0, 0.0))) <= 1e-13);
                let a_l = left.phonon_site(j, &ladder_block(&phonon));
                let a_r = right.phonon_site(r, &ladder_block(&phonon));
                assert!(diff(&tt.conjugate_op(&a_l), &a_r) <= 1e-13);
            }
        }
    }

    #[test]
    fn half_chain_split_reassembles_whole_chain() {
        for ell in [1u32, 3] {
            let p = power(ell, 1);
            let phonon = fock(1);
            let basis = Arc::new(CompositeBasis::balanced(ell, phonon.clone()).unwrap());
            let left = HalfSpace::new(ell, Side::Left, phonon.clone());
            let right = HalfSpace::new(ell, Side::Right, phonon.clone());
            let th = reflection_antiunitary(ell, &phonon).unwrap();
            let eye = CsMat::identity(left.dim());

            // Reflection carries each left block onto its right counterpart.
            let tl = left.kinetic(&p);
            let tr = right.kinetic(&p);
            assert!(diff(&th.conjugate_op(&tl), &tr) <= 1e-12);
            let wl = left.interaction(&p);
            let wr = right.interaction(&p);
            assert!(diff(&th.conjugate_op(&wl), &wr) <= 1e-12);
            let kl = left.phonon_energy(p.omega);
            let kr = right.phonon_energy(p.omega);
            assert!(diff(&th.conjugate_op(&kl), &kr) <= 1e-12);

            // Kinetic split: interior blocks plus the seam.
            let t_full = transformed_hopping(&p, &basis);
            let t_split = balanced_kron(&basis, &tl, &eye)
                .add(&balanced_kron(&basis, &eye, &tr))
                .add(&t_cross(&p, &basis));
            assert!(diff(&t_full, &t_split) <= 1e-12);

            // Interaction split.
            let w_full = transformed_w_matrix(&p, &basis);
            let w_split = balanced_kron(&basis, &wl, &eye)
                .add(&balanced_kron(&basis, &eye, &wr))
                .add(&w_cross(&p, &basis));
            assert!(diff(&w_full, &w_split) <= 1e-12);

            // Phonon split is exact: integer diagonals scaled once by ω.
            let num = number_block(&phonon);
            let mut ph_sum = CsMat::zeros(basis.phonon_dim(), basis.phonon_dim());
            for pos in 0..basis.site_count() {
                ph_sum = ph_sum.add(&phonon_site_matrix(&basis, pos, &num));
            }
            let k_full = embed_phonon(&basis, &ph_sum).scale(C64::new(p.omega, 0.0));
            let k_split =
                balanced_kron(&basis, &kl, &eye).add(&balanced_kron(&basis, &eye, &kr));
            assert!(diff(&k_full, &k_split) <= 1e-13);

            // Seam kinetic term in reflected product form.
            let alpha = 2f64.sqrt() * p.g / p.omega.sqrt();
            let l = ell as i64;
            let mut seam = CsMat::zeros(basis.dim(), basis.dim());
            for lj in [-1i64, -l] {
                let x = left
                    .phase(lj, p.omega, -alpha)
                    .matmul(&left.b_annihilator(lj).adjoint());
                let xd = x.adjoint();
                let term = balanced_kron(&basis, &x, &th.conjugate_op(&x))
                    .add(&balanced_kron(&basis, &xd, &th.conjugate_op(&xd)));
                seam = seam.add(&term.scale(C64::new(-p.t, 0.0)));
            }
            assert!(diff(&seam, &t_cross(&p, &basis)) <= 1e-12);

            // Seam interaction in reflected product form.
            let mut wseam = CsMat::zeros(basis.dim(), basis.dim());
            for i in lambda_left(ell) {
                for j in lambda_left(ell) {
                    let w = p.interaction.w_of(i + j + 1);
                    if w == 0.0 {
                        continue;
                    }
                    let term = balanced_kron(
                        &basis,
                        &left.delta_number(i),
                        &th.conjugate_op(&left.delta_number(j)),
                    );
                    wseam = wseam.add(&term.scale(C64::new(2.0 * w, 0.0)));
                }
            }
            assert!(diff(&wseam, &w_cross(&p, &basis)) <= 1e-12);

            // Whole transformed Hamiltonian from one half-chain block.
            let hl = left.half_hamiltonian(&p);
            let assembled = balanced_kron(&basis, &hl, &eye)
                .add(&balanced_kron(&basis, &eye, &th.conjugate_op(&hl)))
                .add(&t_cross(&p, &basis))
                .sub(&w_cross(&p, &basis));
            let built = build_transformed(&p, &basis).op.matrix;
            assert!(diff(&assembled, &built) <= 1e-12);
        }
    }

    #[test]
    fn vectorizer_is_an_isometry_with_exact_inverse() {
        assert!(matches!(
            Vectorizer::new(&CompositeBasis::balanced(2, fock(0)).unwrap()),
            Err(ModelError::EllMustBeOdd(_, 2))
        ));
        let basis = CompositeBasis::balanced(3, fock(1)).unwrap();
        let vz = Vectorizer::new(&basis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = random_state(&mut rng, basis.dim());
        let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        let m = vz.vectorize(&psi).unwrap();
        assert!((m.norm_sq() - norm).abs() <= 1e-12 * norm);
        let back = vz.devectorize(&m);
        let d: f64 = psi
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d <= 1e-14);

        // A full-basis vector folds to the same matrices.
        let full = CompositeBasis::full(3, fock(1)).unwrap();
        let mut wide = vec![C64::new(0.0, 0.0); full.dim()];
        for (fi, cfg) in basis.configs.iter().enumerate() {
            for ph in 0..basis.phonon_dim() {
                wide[full.flat(cfg.mask as usize, ph)] = psi[basis.flat(fi, ph)];
            }
        }
        let m2 = vz.vectorize(&wide).unwrap();
        for (a, b) in m.mats.iter().zip(&m2.mats) {
            assert!((a - b).map(|v| v.norm()).max() <= 1e-14);
        }

        // Weight outside the matched configurations is rejected, weighted.
        let stray = FermionConfig::from_sites(3, &[-3]);
        wide[full.flat(stray.mask as usize, 0)] = C64::new(0.5, 0.0);
        match vz.vectorize(&wide) {
            Err(ModelError::UnbalancedSupport(w)) => assert!((w - 0.25).abs() <= 1e-12),
            _ => panic!("unmatched support must be rejected"),
        }
    }

    #[test]
    fn vectorizer_matrix_units_and_cone_anchor() {
        let ell = 3u32;
        let basis = CompositeBasis::balanced(ell, fock(1)).unwrap();
        let vz = Vectorizer::new(&basis).unwrap();
        let table = sector_decompose(ell).unwrap();
        let s = b_basis_signs(ell);
        let dl = 8usize;

        // One ordered-product basis pair at a time: its coordinate vector
        // must vectorize to a single matrix unit in its own sector.
        for (q, xi, yj, mm, nn) in [(0usize, 0usize, 0usize, 3usize, 5usize), (1, 2, 0, 0, 7)] {
            let mx = table.left_labels[q][xi];
            let my = table.left_labels[q][yj];
            let ry = rev_bits(my, ell);
            let yi = table.right_labels[q].binary_search(&ry).unwrap();
            let fi = table.balanced_index(q, xi, yi);
            let sgn = s[mx as usize] * theta_eps_walk(ell, my);
            let prev = phonon_reversal(2, ell);
            let mut psi = vec![C64::new(0.0, 0.0); basis.dim()];
            psi[fi * 64 + mm + dl * prev[nn]] = C64::new(sgn, 0.0);
            let m = vz.vectorize(&psi).unwrap();
            for (k, blk) in m.mats.iter().enumerate() {
                for r in 0..blk.nrows() {
                    for c in 0..blk.ncols() {
                        let want = if k == q && r == xi * dl + mm && c == yj * dl + nn {
                            1.0
                        } else {
                            0.0
                        };
                        assert!((blk[(r, c)] - C64::new(want, 0.0)).norm() <= 1e-14);
                    }
                }
            }
        }

        // The cone anchor maps forward to the whole-chain vacuum, whose
        // matrices are one rank-one unit in the neutral sector: positive
        // semidefinite with no sign left to choose.
        let half = CompositeBasis::half_filled(ell, fock(1)).unwrap();
        let anchor = reflection_positive_cdw(&half).unwrap();
        let map = hole_particle_sector_map(ell)
            .unwrap()
            .kron(&CsMat::identity(half.phonon_dim()));
        let forward = map.matvec_alloc(&anchor);
        let m = vz.vectorize(&forward).unwrap();
        for (k, blk) in m.mats.iter().enumerate() {
            let hermit = (blk - blk.adjoint()).map(|v| v.norm()).max();
            assert!(hermit <= 1e-14);
            let expect_unit = vz.table.q_values[k] == 0;
            for r in 0..blk.nrows() {
                for c in 0..blk.ncols() {
                    let want = if expect_unit && r == 0 && c == 0 { 1.0 } else { 0.0 };
                    assert!((blk[(r, c)] - C64::new(want, 0.0)).norm() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn vectorizer_carries_reflected_products_to_congruence() {
        let ell = 3u32;
        let phonon = fock(1);
        let basis = CompositeBasis::balanced(ell, phonon.clone()).unwrap();
        let vz = Vectorizer::new(&basis).unwrap();
        let th = reflection_antiunitary(ell, &phonon).unwrap();
        let table = sector_decompose(ell).unwrap();
        let s = b_basis_signs(ell);
        let left = HalfSpace::new(ell, Side::Left, phonon.clone());
        let dl = left.phonon_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(23);

        // A random charge-preserving left operator, dense within sectors.
        let mut a_dense = CMat::zeros(left.dim(), left.dim());
        for q in 0..table.sector_count() {
            for &mr in &table.left_labels[q] {
                for &mc in &table.left_labels[q] {
                    for pr in 0..dl {
                        for pc in 0..dl {
                            a_dense[(mr as usize * dl + pr, mc as usize * dl + pc)] = C64::new(
                                rng.random::<f64>() - 0.5,
                                rng.random::<f64>() - 0.5,
                            );
                        }
                    }
                }
            }
        }
        let a = CsMat::from_dense(&a_dense);
        let b = th.conjugate_op(&a);
        let product = balanced_kron(&basis, &a, &b);
        let psi = random_state(&mut rng, basis.dim());
        let lhs = vz.vectorize(&product.matvec_alloc(&psi)).unwrap();
        let m = vz.vectorize(&psi).unwrap();
        for q in 0..table.sector_count() {
            let labels = &table.left_labels[q];
            let rows = labels.len() * dl;
            // A in the ordered-product basis of this sector.
            let mut a_q = CMat::zeros(rows, rows);
            for (xi, &mx) in labels.iter().enumerate() {
                for (yj, &my) in labels.iter().enumerate() {
                    let sgn = s[mx as usize] * s[my as usize];
                    for pr in 0..dl {
                        for pc in 0..dl {
                            a_q[(xi * dl + pr, yj * dl + pc)] =
                                a_dense[(mx as usize * dl + pr, my as usize * dl + pc)] * sgn;
                        }
                    }
                }
            }
            let rhs = &a_q * &m.mats[q] * a_q.adjoint();
            let d = (&lhs.mats[q] - rhs).map(|v| v.norm()).max();
            assert!(d <= 1e-11, "sector {q}: {d:.3e}");
        }
    }

    #[test]
    fn transformed_hamiltonian_commutes_with_modular_conjugation() {
        let ell = 3u32;
        let p = power(ell, 1);
        let basis = Arc::new(CompositeBasis::balanced(ell, fock(1)).unwrap());
        let vz = Vectorizer::new(&basis).unwrap();
        let h = build_transformed(&p, &basis).op.matrix;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let psi = random_state(&mut rng, basis.dim());
        let conj = |v: &[C64]| -> Vec<C64> {
            vz.devectorize(&vz.vectorize(v).unwrap().adjoint())
        };
        let lhs = conj(&h.matvec_alloc(&conj(&psi)));
        let rhs = h.matvec_alloc(&psi);
        let d: f64 = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d <= 1e-11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn vectorize_roundtrips_any_state(
            re in prop::collection::vec(-1.0f64..1.0, 8),
            im in prop::collection::vec(-1.0f64..1.0, 8),
        ) {
            let basis = CompositeBasis::balanced(1, fock(1)).unwrap();
            let vz = Vectorizer::new(&basis).unwrap();
            let psi: Vec<C64> = re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect();
            let m = vz.vectorize(&psi).unwrap();
            let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((m.norm_sq() - norm).abs() <= 1e-12 * norm.max(1.0));
            let back = vz.devectorize(&m);
            for (a, b) in psi.iter().zip(&back) {
                prop_assert!((a - b).norm() <= 1e-14);
            }
        }
    }
}
