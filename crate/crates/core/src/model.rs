//! Physical parameters of the fermion-phonon chain and the hypothesis checks
//! on the density-density interaction.
//!
//! The chain lives on Λ = {−ℓ, …, ℓ−1}. An interaction is specified by the
//! even function U(j) of the site difference; W(j) = (−1)^{j+1} U(j) is its
//! sign-flattened companion. Three hypotheses are checked numerically:
//! (A) ℓ odd, U(0) = 0, U symmetric; (B) the alternating-sign moment matrix
//! M_{ij} = (−1)^{i+j} U(i+j+1) on the left half-chain is positive
//! semidefinite (B.1) or definite (B.2); (C) W is summable (C.1) and the
//! momentum function R̂(p) has an integrable inverse square root (C.2).

use crate::irbound;
use nalgebra::DMatrix;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("ell must be >= 1, got {0}")]
    BadEll(u32),
    #[error("hopping t must be > 0, got {0}")]
    BadHopping(f64),
    #[error("phonon energy omega must be > 0, got {0}")]
    BadOmega(f64),
    #[error("nearest-neighbour interaction strength must be >= 0, got {0}")]
    BadNearest(f64),
    #[error("power-law interaction needs alpha > 0, got {0}")]
    BadAlpha(f64),
    #[error("power-law interaction needs amplitude > 0, got {0}")]
    BadAmplitude(f64),
    #[error("R̂ series needs a summable W, power-law alpha {0} <= 1 diverges")]
    RhatDivergent(f64),
    #[error("chain with 2*ell = {0} sites exceeds the 30-bit enumeration guard")]
    ChainTooLarge(u32),
    #[error("composite basis dimension overflows usize ({0})")]
    BasisTooLarge(String),
    #[error("interaction table must have U(0) = 0, got {0}")]
    TableOrigin(f64),
    #[error("interaction table asymmetric at j = {0}: U(j) = {1}, U(-j) = {2}")]
    TableAsymmetric(i64, f64, f64),
    #[error("grid_nodes must be >= n_max + 1 ({0} < {1})")]
    GridTooSmall(usize, usize),
    #[error("site {0} lies outside the chain [-{1}, {1})")]
    SiteOutOfRange(i64, u32),
    #[error("{0} requires ell odd, got ell = {1}")]
    EllMustBeOdd(&'static str, u32),
    #[error("{0} requires the occupation phonon representation, not the grid")]
    FockRepRequired(&'static str),
    #[error("state carries weight {0:.3e} outside the charge-balanced sectors")]
    UnbalancedSupport(f64),
}

/// Density-density interaction U(j), always even with U(0) = 0.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionSpec {
    /// No interaction.
    None,
    /// U(±1) = u, zero otherwise.
    Nearest { u: f64 },
    /// U(j) = amplitude · (−1)^{j+1} |j|^{−alpha} for j ≠ 0.
    PowerLaw { alpha: f64, amplitude: f64 },
    /// Explicit finite symmetric table; zero outside its support.
    Table { values: BTreeMap<i64, f64> },
}

impl InteractionSpec {
    pub fn nearest(u: f64) -> Result<Self, ModelError> {
        if !(u >= 0.0) {
            return Err(ModelError::BadNearest(u));
        }
        Ok(InteractionSpec::Nearest { u })
    }

    pub fn power_law(alpha: f64, amplitude: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0) {
            return Err(ModelError::BadAlpha(alpha));
        }
        if !(amplitude > 0.0) {
            return Err(ModelError::BadAmplitude(amplitude));
        }
        Ok(InteractionSpec::PowerLaw { alpha, amplitude })
    }

    /// Builds a table interaction, rejecting asymmetric input instead of
    /// symmetrizing it silently.
    pub fn table(values: BTreeMap<i64, f64>) -> Result<Self, ModelError> {
        if let Some(&v0) = values.get(&0) {
            if v0 != 0.0 {
                return Err(ModelError::TableOrigin(v0));
            }
        }
        for (&j, &v) in &values {
            let mirrored = values.get(&-j).copied().unwrap_or(0.0);
            if mirrored != v {
                return Err(ModelError::TableAsymmetric(j, v, mirrored));
            }
        }
        Ok(InteractionSpec::Table { values })
    }

    /// U(j).
    pub fn u_of(&self, j: i64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match self {
            InteractionSpec::None => 0.0,
            InteractionSpec::Nearest { u } => {
                if j.abs() == 1 {
                    *u
                } else {
                    0.0
                }
            }
            InteractionSpec::PowerLaw { alpha, amplitude } => {
                let sign = if j.rem_euclid(2) == 0 { -1.0 } else { 1.0 };
                amplitude * sign * (j.abs() as f64).powf(-alpha)
            }
            InteractionSpec::Table { values } => values.get(&j).copied().unwrap_or(0.0),
        }
    }

    /// W(j) = (−1)^{j+1} U(j); even because U is even and (−1)^j = (−1)^{−j}.
    pub fn w_of(&self, j: i64) -> f64 {
        let sign = if j.rem_euclid(2) == 0 { -1.0 } else { 1.0 };
        sign * self.u_of(j)
    }
}

/// Tolerances shared by the verification routines.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    /// Relative slack (times the matrix 1-norm) below zero still counted as
    /// positive semidefinite.
    pub psd: f64,
    /// Absolute margin a smallest eigenvalue must exceed to count as
    /// positive definite.
    pub strict: f64,
    /// Spectral gaps below this are treated as degenerate.
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd: 1e-10,
            strict: 1e-12,
            gap: 1e-8,
        }
    }
}

/// Full parameter set for one chain.
#[derive(Clone, Debug, Serialize)]
pub struct ModelParams {
    /// Half chain length; sites are −ℓ..ℓ−1.
    pub ell: u32,
    /// Hopping amplitude, > 0.
    pub t: f64,
    /// Fermion-phonon coupling.
    pub g: f64,
    /// Phonon energy, > 0.
    pub omega: f64,
    pub interaction: InteractionSpec,
    /// Per-site phonon occupation cutoff.
    pub n_max: usize,
    /// Gauss-Hermite nodes per site for position-space checks.
    pub grid_nodes: usize,
    pub tol: Tolerances,
}

impl ModelParams {
    pub fn new(
        ell: u32,
        t: f64,
        g: f64,
        omega: f64,
        interaction: InteractionSpec,
        n_max: usize,
        grid_nodes: usize,
    ) -> Result<Self, ModelError> {
        if ell < 1 {
            return Err(ModelError::BadEll(ell));
        }
        if !(t > 0.0) {
            return Err(ModelError::BadHopping(t));
        }
        if !(omega > 0.0) {
            return Err(ModelError::BadOmega(omega));
        }
        if grid_nodes < n_max + 1 {
            return Err(ModelError::GridTooSmall(grid_nodes, n_max + 1));
        }
        Ok(ModelParams {
            ell,
            t,
            g,
            omega,
            interaction,
            n_max,
            grid_nodes,
            tol: Tolerances::default(),
        })
    }

    pub fn num_sites(&self) -> usize {
        2 * self.ell as usize
    }

    /// Guard for routines that only make sense on reflection-symmetric odd
    /// half-lengths.
    pub fn require_odd_ell(&self, what: &'static str) -> Result<(), ModelError> {
        if self.ell % 2 == 1 {
            Ok(())
        } else {
            Err(ModelError::EllMustBeOdd(what, self.ell))
        }
    }
}

/// All sites −ℓ..ℓ−1 in ascending order.
pub fn lambda(ell: u32) -> Vec<i64> {
    let l = ell as i64;
    (-l..l).collect()
}

/// Left half −ℓ..−1.
pub fn lambda_left(ell: u32) -> Vec<i64> {
    let l = ell as i64;
    (-l..0).collect()
}

/// Right half 0..ℓ−1.
pub fn lambda_right(ell: u32) -> Vec<i64> {
    let l = ell as i64;
    (0..l).collect()
}

/// The reflection across the chain center pairing the two halves.
pub fn reflect(j: i64) -> i64 {
    -1 - j
}

/// Verdict on hypothesis (A): odd half-length, U vanishing at the origin,
/// U even under j ↦ −j.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConditionA {
    pub ell_odd: bool,
    pub origin_vanishes: bool,
    pub symmetric: bool,
}

impl ConditionA {
    pub fn holds(&self) -> bool {
        self.ell_odd && self.origin_vanishes && self.symmetric
    }
}

pub fn check_condition_a(spec: &InteractionSpec, ell: u32) -> ConditionA {
    let reach = 4 * ell as i64;
    let symmetric = (1..=reach).all(|j| spec.u_of(j) == spec.u_of(-j));
    ConditionA {
        ell_odd: ell % 2 == 1,
        origin_vanishes: spec.u_of(0) == 0.0,
        symmetric,
    }
}

/// Verdict on hypothesis (B): spectrum of the alternating-sign moment matrix
/// on the left half-chain.
#[derive(Clone, Debug)]
pub struct ConditionB {
    /// M_{ij} = (−1)^{i+j} U(i+j+1), i,j ∈ {−ℓ,…,−1}, stored with row/col
    /// index ℓ+i.
    pub matrix: DMatrix<f64>,
    pub min_eig: f64,
    /// min_eig ≥ −psd_tol·‖M‖₁.
    pub psd: bool,
    /// min_eig > strict_tol.
    pub positive_definite: bool,
}

pub fn check_condition_b(spec: &InteractionSpec, ell: u32, tol: &Tolerances) -> ConditionB {
    let left = lambda_left(ell);
    let n = left.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (a, &i) in left.iter().enumerate() {
        for (b, &j) in left.iter().enumerate().take(a + 1) {
            let sign = if (i + j).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let v = sign * spec.u_of(i + j + 1);
            // i+j is symmetric in (a,b): mirroring keeps entries bit-identical.
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    let one_norm = (0..n)
        .map(|c| (0..n).map(|r| m[(r, c)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let min_eig = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v));
    let psd = min_eig >= -tol.psd * one_norm.max(1.0);
    let positive_definite = min_eig > tol.strict;
    // Definiteness is strictly stronger; the verdicts may never cross.
    assert!(!positive_definite || psd);
    ConditionB {
        matrix: m,
        min_eig,
        psd,
        positive_definite,
    }
}

/// Verdict on hypothesis (C): summability of W and integrability of R̂^{−1/2}.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionC {
    /// Σ_{j≥1} |W(j)|, None when the series diverges.
    pub c1_sum: Option<f64>,
    pub c1_holds: bool,
    pub c2_holds: bool,
    /// Fitted small-p exponent κ of R̂ ~ C·p^κ, when meaningful.
    pub c2_exponent: Option<f64>,
    /// Estimate of ∫ R̂^{−1/2} dp when convergent.
    pub c2_integral: Option<f64>,
}

pub fn check_condition_c(spec: &InteractionSpec, tail_tol: f64) -> ConditionC {
    let (c1_sum, c1_holds) = match spec {
        InteractionSpec::None => (Some(0.0), true),
        InteractionSpec::Nearest { u } => (Some(*u), true),
        InteractionSpec::Table { values } => {
            let s: f64 = values
                .iter()
                .filter(|(&j, _)| j > 0)
                .map(|(_, &v)| v.abs())
                .sum();
            (Some(s), true)
        }
        InteractionSpec::PowerLaw { alpha, amplitude } => {
            if *alpha <= 1.0 {
                (None, false)
            } else {
                (Some(amplitude * p_series(*alpha, tail_tol)), true)
            }
        }
    };
    let c2 = irbound::c2_diagnostic(spec, tail_tol);
    ConditionC {
        c1_sum,
        c1_holds,
        c2_holds: c2.holds,
        c2_exponent: c2.fitted_exponent,
        c2_integral: c2.integral_estimate,
    }
}

/// Σ_{j≥1} j^{−α} for α > 1 by partial sum plus Euler-Maclaurin tail.
fn p_series(alpha: f64, tol: f64) -> f64 {
    let j_max = 2000usize.max((alpha / (12.0 * tol.max(1e-15))).powf(1.0 / (alpha + 1.0)) as usize);
    let mut s = 0.0;
    for j in 1..=j_max {
        s += (j as f64).powf(-alpha);
    }
    let jf = j_max as f64;
    // Tail Σ_{j>J} j^{−α} = J^{1−α}/(α−1) − J^{−α}/2 + αJ^{−α−1}/12 − O(J^{−α−3}).
    s += jf.powf(1.0 - alpha) / (alpha - 1.0) - 0.5 * jf.powf(-alpha)
        + alpha / 12.0 * jf.powf(-alpha - 1.0);
    s
}
