//! Self-dual cone membership and operator-inequality testing.
//!
//! Two cones are realized concretely. The background cone holds the states
//! whose phonon wavefunction is pointwise nonnegative over every half-filled
//! fermion configuration; membership is tested on the Gauss-Hermite position
//! grid. The reflection cone holds the states whose charge-sector matrices
//! are positive semidefinite after the hole-particle map; operators preserve
//! it exactly when they act by congruence on those matrices.
//!
//! Membership is a ray property here: vectors are gauge-fixed by the global
//! phase of their largest coefficient before testing, so a state and any
//! phase multiple of it receive the same verdict.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::fock::{CompositeBasis, FermionSector, PhononBasisSpec, PhononRep};
use crate::linalg::{
    expm_hermitian, hermitian_eigen, max_abs_entry, min_eig_hermitian, vdot, vnorm, CMat, CsMat,
    C64,
};
use crate::model::ModelError;
use crate::operators::{grid_s_matrix, OperatorMatrix};
use crate::spectral::{ground_state, semigroup_apply, spectral_scale, EigMethod, SemigroupMethod};
use crate::transforms::{hole_particle_sector_map, SectorMatrices, Vectorizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum ConeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error("no global phase makes the state real: imaginary residual {residual:.3e}")]
    NotJReal { residual: f64 },
    #[error("{cone} membership needs the {expected} sector, got {got}")]
    WrongSector {
        cone: &'static str,
        expected: &'static str,
        got: &'static str,
    },
    #[error("ground space holds no cone element: best margin {margin:.3e}")]
    NoConeElement { margin: f64 },
}

fn sector_name(s: FermionSector) -> &'static str {
    match s {
        FermionSector::Full => "full",
        FermionSector::HalfFilled => "half-filled",
        FermionSector::Balanced => "balanced",
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum ConeKind {
    Background,
    Reflection,
}

/// Where the worst margin was attained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "id")]
pub enum ConeWitness {
    /// Flat coefficient index in the position-grid representation.
    Component(usize),
    /// Half-chain charge sector.
    Sector(i64),
    /// Index of a sampled generator or generator pair.
    Sample(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeVerdict {
    pub member: bool,
    pub strict: bool,
    /// Min grid component or min sector eigenvalue; for sampled operator
    /// tests, the worst such value over all images.
    pub worst_margin: f64,
    pub witness: ConeWitness,
    pub tol: f64,
    /// Present for sampled verdicts.
    pub seed: Option<u64>,
}

impl ConeVerdict {
    fn from_margin(margin: f64, tol: f64, witness: ConeWitness) -> ConeVerdict {
        assert!(tol >= 0.0, "tolerances are magnitudes");
        ConeVerdict {
            member: margin >= -tol,
            strict: margin > tol,
            worst_margin: margin,
            witness,
            tol,
            seed: None,
        }
    }

    fn seeded(mut self, seed: u64) -> ConeVerdict {
        self.seed = Some(seed);
        self
    }
}

/// Multiplies by the conjugate phase of the largest-magnitude entry and
/// returns (scale, imaginary residual) where scale is that largest magnitude.
fn phase_fix(v: &mut [C64]) -> (f64, f64) {
    let mut best = 0.0f64;
    let mut phase = C64::new(1.0, 0.0);
    for z in v.iter() {
        let a = z.norm();
        if a > best {
            best = a;
            phase = z / a;
        }
    }
    if best == 0.0 {
        return (0.0, 0.0);
    }
    let rot = phase.conj();
    let mut imag = 0.0f64;
    for z in v.iter_mut() {
        *z *= rot;
        imag = imag.max(z.im.abs());
    }
    (best, imag)
}

/// Coefficients of a half-filled state with the phonon factor rotated to the
/// position grid, where the background cone is the nonnegative orthant. The
/// rotation is the per-site Hermite-to-node isometry; a grid-represented
/// state is already positional and is returned as stored.
pub fn position_components(psi: &[C64], basis: &CompositeBasis) -> Vec<C64> {
    assert_eq!(psi.len(), basis.dim());
    if basis.phonon.rep == PhononRep::Grid {
        return psi.to_vec();
    }
    let s = grid_s_matrix(&basis.phonon);
    let d = basis.phonon.d;
    let sites = basis.site_count() as usize;
    let pdim = basis.phonon_dim();
    let mut out = psi.to_vec();
    let mut scratch = vec![C64::new(0.0, 0.0); d];
    for block in 0..basis.configs.len() {
        let base = block * pdim;
        for axis in 0..sites {
            let stride = d.pow(axis as u32);
            let outer = pdim / (stride * d);
            for hi in 0..outer {
                for lo in 0..stride {
                    let start = base + hi * stride * d + lo;
                    for (k, slot) in scratch.iter_mut().enumerate() {
                        let mut acc = C64::new(0.0, 0.0);
                        for n in 0..d {
                            acc += s[(k, n)] * out[start + n * stride];
                        }
                        *slot = acc;
                    }
                    for (k, val) in scratch.iter().enumerate() {
                        out[start + k * stride] = *val;
                    }
                }
            }
        }
    }
    out
}

/// Pointwise nonnegativity of the phonon wavefunction over every half-filled
/// configuration, tested on the position grid after gauge fixing.
pub fn background_membership(
    psi: &[C64],
    basis: &CompositeBasis,
    tol: f64,
) -> Result<ConeVerdict, ConeError> {
    if basis.sector != FermionSector::HalfFilled {
        return Err(ConeError::WrongSector {
            cone: "background",
            expected: "half-filled",
            got: sector_name(basis.sector),
        });
    }
    let mut grid = position_components(psi, basis);
    let (scale, imag) = phase_fix(&mut grid);
    if scale == 0.0 {
        return Ok(ConeVerdict::from_margin(0.0, tol, ConeWitness::Component(0)));
    }
    if imag > 1e-8 * scale {
        return Err(ConeError::NotJReal {
            residual: imag / scale,
        });
    }
    let mut margin = f64::INFINITY;
    let mut witness = 0usize;
    for (k, z) in grid.iter().enumerate() {
        if z.re < margin {
            margin = z.re;
            witness = k;
        }
    }
    Ok(ConeVerdict::from_margin(
        margin,
        tol,
        ConeWitness::Component(witness),
    ))
}

/// Gauge phase read from the sector-matrix diagonals, which are real and
/// nonnegative for any cone element; the largest one carries the phase of a
/// rotated member most reliably.
fn diagonal_phase(mats: &[CMat]) -> Option<C64> {
    let mut best = 0.0f64;
    let mut phase = None;
    for m in mats {
        for r in 0..m.nrows() {
            let z = m[(r, r)];
            if z.norm() > best {
                best = z.norm();
                phase = Some(z / z.norm());
            }
        }
    }
    phase
}

/// Min eigenvalue across the Hermitian parts of the sector matrices after
/// gauge fixing, the Hermiticity defect, and the sector attaining the min.
fn sector_margin(sm: &SectorMatrices) -> (f64, f64, i64) {
    let phase = diagonal_phase(&sm.mats);
    let rot = phase.map(|p| p.conj()).unwrap_or(C64::new(1.0, 0.0));
    let mut margin = f64::INFINITY;
    let mut herm = 0.0f64;
    let mut witness = sm.q_values[0];
    for (q, m) in sm.q_values.iter().zip(&sm.mats) {
        if m.nrows() == 0 {
            continue;
        }
        let fixed = m.scale_complex(rot);
        let adj = fixed.adjoint();
        herm = herm.max(max_abs_entry(&(&fixed - &adj)));
        let low = min_eig_hermitian(&(&fixed + &adj).scale(0.5));
        if low < margin {
            margin = low;
            witness = *q;
        }
    }
    if margin == f64::INFINITY {
        margin = 0.0;
    }
    (margin, herm, witness)
}

trait ScaleComplex {
    fn scale_complex(&self, z: C64) -> CMat;
}

impl ScaleComplex for CMat {
    fn scale_complex(&self, z: C64) -> CMat {
        let mut out = self.clone();
        for v in out.iter_mut() {
            *v *= z;
        }
        out
    }
}

fn verdict_from_sectors(sm: &SectorMatrices, tol: f64) -> ConeVerdict {
    let (margin, herm, witness) = sector_margin(sm);
    let mut v = ConeVerdict::from_margin(margin, tol, ConeWitness::Sector(witness));
    if herm > tol.max(1e-12) {
        // A non-Hermitian block cannot be positive under any gauge.
        v.member = false;
        v.strict = false;
    }
    v
}

/// Half-filled coordinates to charge-matched coordinates through the
/// hole-particle map (fermion part only; the phonon factor rides along).
pub fn to_balanced(psi: &[C64], basis: &CompositeBasis) -> Result<Vec<C64>, ConeError> {
    let map = hole_particle_sector_map(basis.ell)?;
    let pdim = basis.phonon_dim();
    assert_eq!(psi.len(), map.ncols() * pdim);
    let mut out = vec![C64::new(0.0, 0.0); map.nrows() * pdim];
    for r in 0..map.nrows() {
        let (cols, vals) = map.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            let src = c as usize * pdim;
            let dst = r * pdim;
            for ph in 0..pdim {
                out[dst + ph] += v * psi[src + ph];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`to_balanced`]; the map is a signed permutation, so the
/// transpose inverts it.
pub fn from_balanced(bal: &[C64], ell: u32, pdim: usize) -> Result<Vec<C64>, ConeError> {
    let map = hole_particle_sector_map(ell)?;
    assert_eq!(bal.len(), map.nrows() * pdim);
    let mut out = vec![C64::new(0.0, 0.0); map.ncols() * pdim];
    for r in 0..map.nrows() {
        let (cols, vals) = map.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            let src = r * pdim;
            let dst = c as usize * pdim;
            for ph in 0..pdim {
                out[dst + ph] += v * bal[src + ph];
            }
        }
    }
    Ok(out)
}

/// Reflection-cone membership of a physical half-filled state: applies the
/// hole-particle map, splits into charge sectors, and requires every sector
/// matrix to be positive semidefinite.
pub fn reflection_membership(
    psi: &[C64],
    basis: &CompositeBasis,
    tol: f64,
) -> Result<ConeVerdict, ConeError> {
    if basis.sector != FermionSector::HalfFilled {
        return Err(ConeError::WrongSector {
            cone: "reflection",
            expected: "half-filled",
            got: sector_name(basis.sector),
        });
    }
    let bal = to_balanced(psi, basis)?;
    let vz = Vectorizer::new(basis)?;
    let sm = vz.vectorize(&bal)?;
    Ok(verdict_from_sectors(&sm, tol))
}

/// Same test for a state already living on the charge-matched basis (the
/// picture in which the transformed Hamiltonian acts).
pub fn reflection_membership_transformed(
    psi: &[C64],
    basis: &CompositeBasis,
    tol: f64,
) -> Result<ConeVerdict, ConeError> {
    if basis.sector != FermionSector::Balanced {
        return Err(ConeError::WrongSector {
            cone: "reflection",
            expected: "balanced",
            got: sector_name(basis.sector),
        });
    }
    let vz = Vectorizer::new(basis)?;
    let sm = vz.vectorize(psi)?;
    Ok(verdict_from_sectors(&sm, tol))
}

fn membership_for(
    psi: &[C64],
    basis: &CompositeBasis,
    cone: ConeKind,
    tol: f64,
) -> Result<ConeVerdict, ConeError> {
    match (cone, basis.sector) {
        (ConeKind::Background, _) => background_membership(psi, basis, tol),
        (ConeKind::Reflection, FermionSector::Balanced) => {
            reflection_membership_transformed(psi, basis, tol)
        }
        (ConeKind::Reflection, _) => reflection_membership(psi, basis, tol),
    }
}

/// Differentiable surrogate of the membership margin, finite on the whole
/// sphere: gauge defects count against the margin instead of erroring, so a
/// search can climb out of them.
fn smooth_margin(psi: &[C64], basis: &CompositeBasis, cone: ConeKind) -> f64 {
    match cone {
        ConeKind::Background => {
            if basis.sector != FermionSector::HalfFilled {
                return f64::NEG_INFINITY;
            }
            let mut grid = position_components(psi, basis);
            let (scale, _) = phase_fix(&mut grid);
            if scale == 0.0 {
                return f64::NEG_INFINITY;
            }
            grid.iter()
                .map(|z| z.re - z.im.abs())
                .fold(f64::INFINITY, f64::min)
        }
        ConeKind::Reflection => match sector_matrices_of(psi, basis) {
            Ok(sm) => {
                let (margin, herm, _) = sector_margin(&sm);
                margin - herm
            }
            Err(_) => f64::NEG_INFINITY,
        },
    }
}

fn sector_matrices_of(psi: &[C64], basis: &CompositeBasis) -> Result<SectorMatrices, ConeError> {
    let vz = Vectorizer::new(basis)?;
    match basis.sector {
        FermionSector::Balanced => Ok(vz.vectorize(psi)?),
        FermionSector::HalfFilled => {
            let bal = to_balanced(psi, basis)?;
            Ok(vz.vectorize(&bal)?)
        }
        FermionSector::Full => Err(ConeError::WrongSector {
            cone: "reflection",
            expected: "half-filled",
            got: "full",
        }),
    }
}

/// Projection onto the fixed space of the cone's modular conjugation:
/// componentwise conjugation on the position grid for the background cone
/// (the grid isometry is real, so this is plain conjugation), blockwise
/// conjugate transpose of the sector matrices for the reflection cone.
fn j_symmetrize(psi: &[C64], basis: &CompositeBasis, cone: ConeKind) -> Vec<C64> {
    match cone {
        ConeKind::Background => psi
            .iter()
            .map(|z| C64::new(z.re, 0.0))
            .collect(),
        ConeKind::Reflection => {
            let vz = match Vectorizer::new(basis) {
                Ok(v) => v,
                Err(_) => return psi.to_vec(),
            };
            let conj = |bal: &[C64]| -> Option<Vec<C64>> {
                let sm = vz.vectorize(bal).ok()?;
                Some(vz.devectorize(&sm.adjoint()))
            };
            match basis.sector {
                FermionSector::Balanced => match conj(psi) {
                    Some(j) => psi.iter().zip(&j).map(|(a, b)| (a + b) * 0.5).collect(),
                    None => psi.to_vec(),
                },
                FermionSector::HalfFilled => {
                    let bal = match to_balanced(psi, basis) {
                        Ok(b) => b,
                        Err(_) => return psi.to_vec(),
                    };
                    match conj(&bal) {
                        Some(j) => {
                            let avg: Vec<C64> =
                                bal.iter().zip(&j).map(|(a, b)| (a + b) * 0.5).collect();
                            from_balanced(&avg, basis.ell, basis.phonon_dim())
                                .unwrap_or_else(|_| psi.to_vec())
                        }
                        None => psi.to_vec(),
                    }
                }
                FermionSector::Full => psi.to_vec(),
            }
        }
    }
}

/// One rank-1 positive generator of the reflection cone, in the coordinates
/// of `basis` (charge-matched directly, or pulled back through the
/// hole-particle map for the physical sector). Unit norm.
fn cone_generator(
    vz: &Vectorizer,
    basis: &CompositeBasis,
    rng: &mut ChaCha8Rng,
    q_idx: usize,
) -> Result<Vec<C64>, ConeError> {
    let rows = vz.table.left_labels[q_idx].len() * basis.phonon.d.pow(basis.ell);
    let mut u = vec![C64::new(0.0, 0.0); rows];
    let mut nrm = 0.0;
    while nrm < 1e-12 {
        for z in u.iter_mut() {
            *z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        nrm = vnorm(&u);
    }
    for z in u.iter_mut() {
        *z /= nrm;
    }
    generator_from_vector(vz, basis, q_idx, &u)
}

fn generator_from_vector(
    vz: &Vectorizer,
    basis: &CompositeBasis,
    q_idx: usize,
    u: &[C64],
) -> Result<Vec<C64>, ConeError> {
    let dl = basis.phonon.d.pow(basis.ell);
    let mut mats: Vec<CMat> = vz
        .table
        .left_labels
        .iter()
        .map(|labels| CMat::zeros(labels.len() * dl, labels.len() * dl))
        .collect();
    let m = &mut mats[q_idx];
    for r in 0..u.len() {
        for c in 0..u.len() {
            m[(r, c)] = u[r] * u[c].conj();
        }
    }
    let sm = SectorMatrices {
        q_values: vz.table.q_values.clone(),
        mats,
    };
    let bal = vz.devectorize(&sm);
    match basis.sector {
        FermionSector::Balanced => Ok(bal),
        FermionSector::HalfFilled => from_balanced(&bal, basis.ell, basis.phonon_dim()),
        FermionSector::Full => unreachable!("cone generators live at half filling"),
    }
}

/// The complete rank-1 generator family over the matrix-unit directions:
/// e_i, (e_i+e_j)/√2, (e_i+ie_j)/√2 per sector. Exhausts the extreme-ray
/// test directions of a finite PSD cone; used where the dimension allows.
fn matrix_unit_generators(
    vz: &Vectorizer,
    basis: &CompositeBasis,
) -> Result<Vec<Vec<C64>>, ConeError> {
    let dl = basis.phonon.d.pow(basis.ell);
    let mut out = Vec::new();
    for q_idx in 0..vz.table.q_values.len() {
        let rows = vz.table.left_labels[q_idx].len() * dl;
        let half = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..rows {
            let mut u = vec![C64::new(0.0, 0.0); rows];
            u[i] = C64::new(1.0, 0.0);
            out.push(generator_from_vector(vz, basis, q_idx, &u)?);
            for j in i + 1..rows {
                let mut u = vec![C64::new(0.0, 0.0); rows];
                u[i] = C64::new(half, 0.0);
                u[j] = C64::new(half, 0.0);
                out.push(generator_from_vector(vz, basis, q_idx, &u)?);
                let mut u = vec![C64::new(0.0, 0.0); rows];
                u[i] = C64::new(half, 0.0);
                u[j] = C64::new(0.0, half);
                out.push(generator_from_vector(vz, basis, q_idx, &u)?);
            }
        }
    }
    Ok(out)
}

/// Nonnegative random grid vector, the sampled generator of the background
/// cone. Unit norm.
fn background_generator(basis: &CompositeBasis, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..basis.dim())
        .map(|_| C64::new(rng.random::<f64>(), 0.0))
        .collect();
    let n = vnorm(&v);
    for z in v.iter_mut() {
        *z /= n;
    }
    v
}

fn reflection_samples(
    basis: &CompositeBasis,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<C64>>, ConeError> {
    let vz = Vectorizer::new(basis)?;
    let nq = vz.table.q_values.len();
    let mut out = if basis.ell == 1 {
        matrix_unit_generators(&vz, basis)?
    } else {
        Vec::new()
    };
    for s in 0..n_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        out.push(cone_generator(&vz, basis, &mut rng, s % nq)?);
    }
    Ok(out)
}

fn sampled_generators(
    basis: &CompositeBasis,
    cone: ConeKind,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<C64>>, ConeError> {
    match cone {
        ConeKind::Reflection => reflection_samples(basis, n_samples, seed),
        ConeKind::Background => {
            if basis.sector != FermionSector::HalfFilled {
                return Err(ConeError::WrongSector {
                    cone: "background",
                    expected: "half-filled",
                    got: sector_name(basis.sector),
                });
            }
            Ok((0..n_samples)
                .map(|s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(s as u64);
                    background_generator(basis, &mut rng)
                })
                .collect())
        }
    }
}

/// Margin of one image vector: zero images are in every cone.
fn image_margin(
    w: &[C64],
    basis: &CompositeBasis,
    cone: ConeKind,
    tol: f64,
) -> Result<f64, ConeError> {
    let n = vnorm(w);
    if n <= 1e-14 {
        return Ok(0.0);
    }
    let unit: Vec<C64> = w.iter().map(|z| z / n).collect();
    match membership_for(&unit, basis, cone, tol) {
        Ok(v) => Ok(v.worst_margin),
        // A visibly complex image is outside the real part the cone spans.
        Err(ConeError::NotJReal { residual }) => Ok(-residual),
        Err(e) => Err(e),
    }
}

const DENSE_ENTRYWISE: usize = 4096;

/// Checks that `a` maps cone elements into the cone. Background: all matrix
/// elements of the grid-basis representation are nonnegative (dense,
/// exhaustive). Reflection: sampled rank-1 sector generators, plus the full
/// matrix-unit family at ℓ = 1, are mapped and re-tested; the worst image
/// margin decides.
pub fn operator_preserves(
    a: &OperatorMatrix,
    cone: ConeKind,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ConeVerdict, ConeError> {
    let basis = &a.basis;
    match cone {
        ConeKind::Background => {
            let (margin, witness) = grid_entry_margin(&a.matrix, basis)?;
            Ok(ConeVerdict::from_margin(margin, tol, witness).seeded(seed))
        }
        ConeKind::Reflection => {
            let gens = sampled_generators(basis, cone, n_samples, seed)?;
            let mut worst = f64::INFINITY;
            let mut witness = ConeWitness::Sample(0);
            for (s, x) in gens.iter().enumerate() {
                let w = a.matrix.matvec_alloc(x);
                let m = image_margin(&w, basis, cone, tol)?;
                if m < worst {
                    worst = m;
                    witness = ConeWitness::Sample(s);
                }
            }
            if worst == f64::INFINITY {
                worst = 0.0;
            }
            Ok(ConeVerdict::from_margin(worst, tol, witness).seeded(seed))
        }
    }
}

/// Min real part over all entries of the grid-basis representation of `a`,
/// with the entry index as witness. Imaginary residue counts against the
/// margin.
fn grid_entry_margin(a: &CsMat, basis: &CompositeBasis) -> Result<(f64, ConeWitness), ConeError> {
    if basis.sector != FermionSector::HalfFilled {
        return Err(ConeError::WrongSector {
            cone: "background",
            expected: "half-filled",
            got: sector_name(basis.sector),
        });
    }
    let dim = basis.dim();
    assert!(
        dim <= DENSE_ENTRYWISE,
        "entrywise background check is dense; dimension {dim} exceeds {DENSE_ENTRYWISE}"
    );
    let dense = a.to_dense();
    let grid = if basis.phonon.rep == PhononRep::Grid {
        dense
    } else {
        let g = full_grid_isometry(basis);
        &(&g * dense) * g.adjoint()
    };
    let mut margin = f64::INFINITY;
    let mut witness = ConeWitness::Component(0);
    for c in 0..dim {
        for r in 0..dim {
            let z = grid[(r, c)];
            let val = z.re - z.im.abs();
            if val < margin {
                margin = val;
                witness = ConeWitness::Component(r * dim + c);
            }
        }
    }
    Ok((margin, witness))
}

/// I_fermion ⊗ S ⊗ … ⊗ S as a dense matrix; small dimensions only.
fn full_grid_isometry(basis: &CompositeBasis) -> CMat {
    let s = grid_s_matrix(&basis.phonon);
    let d = basis.phonon.d;
    let pdim = basis.phonon_dim();
    let mut sp = CMat::identity(1, 1);
    for _ in 0..basis.site_count() {
        // Little-endian site digits: each new site multiplies on the left.
        sp = s.kronecker(&sp);
        let _ = d;
    }
    CMat::identity(basis.configs.len(), basis.configs.len()).kronecker(&sp)
}

fn dense_propagator(h: &CsMat, beta: f64) -> CMat {
    expm_hermitian(&h.to_dense(), -beta)
}

const DENSE_PROPAGATOR: usize = 1500;

fn apply_semigroup(h: &CsMat, prop: Option<&CMat>, beta: f64, x: &[C64]) -> Vec<C64> {
    match prop {
        Some(k) => {
            let v = k * crate::linalg::CVec::from_column_slice(x);
            v.as_slice().to_vec()
        }
        None => semigroup_apply(h, beta, x, SemigroupMethod::Krylov),
    }
}

/// Strict positivity of the heat kernel on the cone: every sampled generator
/// must land strictly inside at every β. For the background cone the test is
/// entrywise positivity of the dense kernel, which is exhaustive.
pub fn operator_improves(
    h: &OperatorMatrix,
    cone: ConeKind,
    beta_list: &[f64],
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ConeVerdict, ConeError> {
    assert!(beta_list.iter().all(|&b| b > 0.0), "improvement needs β > 0");
    let basis = &h.basis;
    let mut worst = f64::INFINITY;
    let mut witness = ConeWitness::Sample(0);
    match cone {
        ConeKind::Background => {
            for &beta in beta_list {
                let k = dense_propagator(&h.matrix, beta);
                let op = OperatorMatrix::new(Arc::clone(basis), CsMat::from_dense(&k), true);
                let (m, w) = grid_entry_margin(&op.matrix, basis)?;
                if m < worst {
                    worst = m;
                    witness = w;
                }
            }
        }
        ConeKind::Reflection => {
            let gens = sampled_generators(basis, cone, n_samples, seed)?;
            for &beta in beta_list {
                let prop = (basis.dim() <= DENSE_PROPAGATOR)
                    .then(|| dense_propagator(&h.matrix, beta));
                for (s, x) in gens.iter().enumerate() {
                    let w = apply_semigroup(&h.matrix, prop.as_ref(), beta, x);
                    let m = image_margin(&w, basis, cone, tol)?;
                    if m < worst {
                        worst = m;
                        witness = ConeWitness::Sample(s);
                    }
                }
            }
        }
    }
    Ok(ConeVerdict::from_margin(worst, tol, witness).seeded(seed))
}

/// Ergodicity surrogate: every sampled pair of generators must develop a
/// strictly positive overlap under the semigroup at some β in the list. For
/// the background cone at dense sizes the pairs are exhaustive (grid matrix
/// entries); otherwise pairs are sampled. The reported margin is the worst
/// over pairs of the best overlap over β.
pub fn ergodicity_check(
    h: &OperatorMatrix,
    cone: ConeKind,
    beta_list: &[f64],
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ConeVerdict, ConeError> {
    assert!(!beta_list.is_empty());
    let basis = &h.basis;
    if cone == ConeKind::Background && basis.dim() <= DENSE_ENTRYWISE {
        let mut best = vec![f64::NEG_INFINITY; basis.dim() * basis.dim()];
        for &beta in beta_list {
            let k = dense_propagator(&h.matrix, beta);
            let op = CsMat::from_dense(&k);
            let grid = grid_dense(&op, basis);
            for (slot, z) in best.iter_mut().zip(grid.iter()) {
                *slot = slot.max(z.re - z.im.abs());
            }
        }
        let mut margin = f64::INFINITY;
        let mut witness = ConeWitness::Component(0);
        for (idx, &v) in best.iter().enumerate() {
            if v < margin {
                margin = v;
                witness = ConeWitness::Component(idx);
            }
        }
        return Ok(ergodic_verdict(margin, tol, witness).seeded(seed));
    }

    let xs = sampled_generators(basis, cone, n_samples, seed)?;
    let ys = sampled_generators(basis, cone, n_samples, seed ^ 0x5157_9A7B)?;
    let mut worst = f64::INFINITY;
    let mut witness = ConeWitness::Sample(0);
    for (pair, (x, y)) in xs.iter().zip(&ys).enumerate() {
        let mut best = f64::NEG_INFINITY;
        for &beta in beta_list {
            let w = semigroup_apply(&h.matrix, beta, y, SemigroupMethod::Krylov);
            best = best.max(vdot(x, &w).re);
        }
        if best < worst {
            worst = best;
            witness = ConeWitness::Sample(pair);
        }
    }
    Ok(ergodic_verdict(worst, tol, witness).seeded(seed))
}

/// Ergodicity is a strict property: a vanishing best overlap means two cone
/// directions never connect, so membership and strictness coincide.
fn ergodic_verdict(margin: f64, tol: f64, witness: ConeWitness) -> ConeVerdict {
    let mut v = ConeVerdict::from_margin(margin, tol, witness);
    v.member = margin > tol;
    v.strict = v.member;
    v
}

fn grid_dense(a: &CsMat, basis: &CompositeBasis) -> CMat {
    let dense = a.to_dense();
    if basis.phonon.rep == PhononRep::Grid {
        dense
    } else {
        let g = full_grid_isometry(basis);
        &(&g * dense) * g.adjoint()
    }
}

const DEGENERATE_RESTARTS: usize = 100;

/// A ground-space vector inside the cone. Nondegenerate ground states are
/// gauge-fixed and tested directly; a degenerate ground space is searched by
/// margin ascent over the eigenspace sphere, which is a declared heuristic:
/// failure is reported, never silently passed.
pub fn positive_ground_section(
    h: &OperatorMatrix,
    cone: ConeKind,
    tol: f64,
) -> Result<Vec<C64>, ConeError> {
    let scale = spectral_scale(&h.matrix);
    let deg_tol = 1e-8 * scale;
    let g = if h.dim() <= 4000 {
        ground_state(&h.matrix, EigMethod::Dense)?
    } else {
        ground_state(&h.matrix, EigMethod::Lanczos)?
    };
    if g.gap > deg_tol {
        let v = membership_for(&g.psi, &h.basis, cone, tol)?;
        if v.member {
            return Ok(g.psi);
        }
        return Err(ConeError::NoConeElement {
            margin: v.worst_margin,
        });
    }

    // Collect a basis of the near-ground space.
    let vecs: Vec<Vec<C64>> = if h.dim() <= 4000 {
        let (vals, m) = hermitian_eigen(&h.matrix.to_dense());
        (0..h.dim())
            .filter(|&k| vals[k] - vals[0] <= deg_tol)
            .take(8)
            .map(|k| (0..h.dim()).map(|r| m[(r, k)]).collect())
            .collect()
    } else {
        let out = crate::linalg::lanczos_lowest(&h.matrix, 6, 7, 1e-9);
        out.eigenvectors
            .into_iter()
            .zip(out.eigenvalues.iter())
            .filter(|(_, &lam)| lam - g.energy <= deg_tol)
            .map(|(v, _)| v)
            .collect()
    };
    let k = vecs.len();
    let combine = |c: &[C64]| -> Option<Vec<C64>> {
        let mut psi = vec![C64::new(0.0, 0.0); h.dim()];
        for (ci, vi) in c.iter().zip(&vecs) {
            for (p, w) in psi.iter_mut().zip(vi) {
                *p += ci * w;
            }
        }
        let n = vnorm(&psi);
        if n < 1e-14 {
            return None;
        }
        for z in psi.iter_mut() {
            *z /= n;
        }
        Some(psi)
    };
    let margin_of = |c: &[C64]| -> f64 {
        match combine(c) {
            Some(psi) => smooth_margin(&psi, &h.basis, cone),
            None => f64::NEG_INFINITY,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut best_c = vec![C64::new(0.0, 0.0); k];
    let mut best = f64::NEG_INFINITY;
    for _ in 0..DEGENERATE_RESTARTS {
        let mut c: Vec<C64> = (0..k)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n = vnorm(&c);
        for z in c.iter_mut() {
            *z /= n;
        }
        let mut cur = margin_of(&c);
        let mut step = 0.5f64;
        while step > 1e-5 {
            let mut improved = false;
            for _ in 0..12 {
                let cand: Vec<C64> = c
                    .iter()
                    .map(|z| {
                        z + C64::new(
                            step * (rng.random::<f64>() - 0.5),
                            step * (rng.random::<f64>() - 0.5),
                        )
                    })
                    .collect();
                let n = vnorm(&cand);
                if n < 1e-14 {
                    continue;
                }
                let cand: Vec<C64> = cand.into_iter().map(|z| z / n).collect();
                let m = margin_of(&cand);
                if m > cur {
                    cur = m;
                    c = cand;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if cur > best {
            best = cur;
            best_c = c;
        }
    }
    if best < -tol {
        return Err(ConeError::NoConeElement { margin: best });
    }
    // Polish: fix the gauge, project onto the modular-conjugation-fixed
    // space, and return to the ground space; then verify for real.
    let mut psi = combine(&best_c).expect("the best climb point is normalized");
    phase_fix(&mut psi);
    let sym = j_symmetrize(&psi, &h.basis, cone);
    let mut proj = vec![C64::new(0.0, 0.0); h.dim()];
    for vi in &vecs {
        let amp = vdot(vi, &sym);
        for (p, w) in proj.iter_mut().zip(vi) {
            *p += amp * w;
        }
    }
    let n = vnorm(&proj);
    let final_psi = if n > 1e-10 {
        proj.iter().map(|z| z / n).collect()
    } else {
        psi
    };
    match membership_for(&final_psi, &h.basis, cone, tol) {
        Ok(v) if v.member => Ok(final_psi),
        Ok(v) => Err(ConeError::NoConeElement {
            margin: v.worst_margin,
        }),
        Err(ConeError::NotJReal { residual }) => {
            Err(ConeError::NoConeElement { margin: -residual })
        }
        Err(e) => Err(e),
    }
}

/// Outcome of the heat-kernel domination check e^{−t(A−B)} ⊵ e^{−tA}.
pub struct TrotterCheck {
    /// Cone verdict on the difference of the two kernels.
    pub verdict: ConeVerdict,
    /// Operator-norm distance of the n-step Trotter product from
    /// e^{−t(A−B)}, and the same at 2n steps; first-order convergence means
    /// the ratio sits near two.
    pub error_coarse: f64,
    pub error_fine: f64,
}

/// Verifies that e^{−t(A−B)} − e^{−tA} maps sampled generators into the
/// cone, and measures the Trotter approximation (e^{−tA/n} e^{tB/n})^n
/// against e^{−t(A−B)} at n and 2n steps. Dense; both operators must share
/// the basis.
pub fn trotter_domination_check(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    cone: ConeKind,
    t: f64,
    trotter_steps: usize,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<TrotterCheck, ConeError> {
    assert!(t > 0.0 && trotter_steps >= 1);
    assert!(Arc::ptr_eq(&a.basis, &b.basis), "operands share one basis");
    let basis = &a.basis;
    let dim = basis.dim();
    assert!(dim <= DENSE_ENTRYWISE, "domination check is dense");
    let ad = a.matrix.to_dense();
    let bd = b.matrix.to_dense();
    let full = expm_hermitian(&(&ad - &bd), -t);
    let plain = expm_hermitian(&ad, -t);
    let diff = &full - &plain;

    let gens = sampled_generators(basis, cone, n_samples, seed)?;
    let mut worst = f64::INFINITY;
    let mut witness = ConeWitness::Sample(0);
    for (s, x) in gens.iter().enumerate() {
        let w = &diff * crate::linalg::CVec::from_column_slice(x);
        let m = image_margin(w.as_slice(), basis, cone, tol)?;
        if m < worst {
            worst = m;
            witness = ConeWitness::Sample(s);
        }
    }
    if worst == f64::INFINITY {
        worst = 0.0;
    }

    let trotter = |n: usize| -> f64 {
        let fa = expm_hermitian(&ad, -t / n as f64);
        let fb = expm_hermitian(&bd, t / n as f64);
        let step = &fa * &fb;
        let mut acc = CMat::identity(dim, dim);
        for _ in 0..n {
            acc = &acc * &step;
        }
        let d = &acc - &full;
        d.singular_values().iter().fold(0.0f64, |m, &s| m.max(s))
    };
    Ok(TrotterCheck {
        verdict: ConeVerdict::from_margin(worst, tol, witness).seeded(seed),
        error_coarse: trotter(trotter_steps),
        error_fine: trotter(2 * trotter_steps),
    })
}
