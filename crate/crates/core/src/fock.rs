//! Basis bookkeeping: fermion configurations as bitmasks, the charge-sector
//! decomposition of the half-filled space, truncated and position-grid phonon
//! bases, and flat indexing of the fermion ⊗ phonon product space.
//!
//! Site order is global and canonical: −ℓ < −ℓ+1 < … < ℓ−1, realized as bit
//! positions 0..2ℓ via pos = j + ℓ. Every Jordan-Wigner sign and every
//! ordered product ∏ c*_j in the crate derives from this one order.

use crate::linalg::gauss_hermite;
use crate::model::ModelError;
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Enumeration guard: masks live in u32 and full-Fock scratch matrices in
/// dense-ish sparse structures, so 2ℓ bits are capped well below that.
pub const MAX_CHAIN_BITS: u32 = 30;

/// Occupation pattern of the full chain, one bit per site.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FermionConfig {
    pub mask: u32,
    pub ell: u32,
}

/// pos = j + ℓ; panics outside Λ.
pub fn site_to_pos(ell: u32, j: i64) -> u32 {
    let l = ell as i64;
    assert!(-l <= j && j < l, "site {j} outside Λ with ell = {ell}");
    (j + l) as u32
}

pub fn pos_to_site(ell: u32, pos: u32) -> i64 {
    assert!(pos < 2 * ell);
    pos as i64 - ell as i64
}

impl FermionConfig {
    pub fn empty(ell: u32) -> Self {
        FermionConfig { mask: 0, ell }
    }

    pub fn from_sites(ell: u32, sites: &[i64]) -> Self {
        let mut mask = 0u32;
        for &j in sites {
            let bit = 1u32 << site_to_pos(ell, j);
            assert!(mask & bit == 0, "duplicate site {j}");
            mask |= bit;
        }
        FermionConfig { mask, ell }
    }

    pub fn contains(&self, j: i64) -> bool {
        self.mask >> site_to_pos(self.ell, j) & 1 == 1
    }

    pub fn occupancy(&self) -> u32 {
        self.mask.count_ones()
    }

    /// Occupied sites in ascending canonical order.
    pub fn sites(&self) -> Vec<i64> {
        (0..2 * self.ell)
            .filter(|&p| self.mask >> p & 1 == 1)
            .map(|p| pos_to_site(self.ell, p))
            .collect()
    }

    /// Bits of Λ_L = {−ℓ..−1} as a local mask: local bit b ↔ site −ℓ+b.
    pub fn left_mask(&self) -> u32 {
        self.mask & ((1 << self.ell) - 1)
    }

    /// Bits of Λ_R = {0..ℓ−1} as a local mask: local bit b ↔ site b.
    pub fn right_mask(&self) -> u32 {
        self.mask >> self.ell
    }

    pub fn combine(ell: u32, left: u32, right: u32) -> Self {
        debug_assert!(left < 1 << ell && right < 1 << ell);
        FermionConfig {
            mask: left | right << ell,
            ell,
        }
    }
}

fn check_chain(ell: u32) -> Result<(), ModelError> {
    if ell < 1 {
        return Err(ModelError::BadEll(ell));
    }
    if 2 * ell > MAX_CHAIN_BITS {
        return Err(ModelError::ChainTooLarge(2 * ell));
    }
    Ok(())
}

/// All C(2ℓ, ℓ) half-filled configurations, ordered lexicographically by
/// their ascending site tuples.
pub fn enumerate_half_filled(ell: u32) -> Result<Vec<FermionConfig>, ModelError> {
    check_chain(ell)?;
    let n = 2 * ell as usize;
    let k = ell as usize;
    let mut idx: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    loop {
        let mut mask = 0u32;
        for &p in &idx {
            mask |= 1 << p;
        }
        out.push(FermionConfig { mask, ell });
        // Next k-combination of {0..n} in lexicographic order.
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(out)
}

/// Q̂^{(L)} = (#even-occupied − #odd-occupied) over Λ_L; local bit b is site
/// −ℓ+b.
pub fn charge_left(ell: u32, left_local: u32) -> i64 {
    let mut q = 0i64;
    for b in 0..ell {
        if left_local >> b & 1 == 1 {
            let site = b as i64 - ell as i64;
            q += if site.rem_euclid(2) == 0 { 1 } else { -1 };
        }
    }
    q
}

/// Q̂^{(R)} = −(#even-occupied − #odd-occupied) over Λ_R; local bit b is
/// site b.
pub fn charge_right(ell: u32, right_local: u32) -> i64 {
    let mut q = 0i64;
    for b in 0..ell {
        if right_local >> b & 1 == 1 {
            q -= if (b as i64).rem_euclid(2) == 0 { 1 } else { -1 };
        }
    }
    q
}

/// Decomposition of both half-chain Fock spaces by the charges Q̂^{(L)} and
/// Q̂^{(R)}, and the induced "balanced" basis of charge-matched pairs whose
/// size equals the half-filled dimension C(2ℓ, ℓ).
#[derive(Clone, Debug)]
pub struct ChargeSectorTable {
    pub ell: u32,
    /// Shared charge values, ascending.
    pub q_values: Vec<i64>,
    /// Local left masks per charge, ascending integer order within a sector.
    pub left_labels: Vec<Vec<u32>>,
    /// Local right masks per charge, ascending integer order within a sector.
    pub right_labels: Vec<Vec<u32>>,
    /// offsets[k] = first balanced index of sector k; a final entry holds the
    /// total balanced dimension.
    pub offsets: Vec<usize>,
}

pub fn sector_decompose(ell: u32) -> Result<ChargeSectorTable, ModelError> {
    check_chain(ell)?;
    let mut left: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
    let mut right: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
    for m in 0..1u32 << ell {
        left.entry(charge_left(ell, m)).or_default().push(m);
        right.entry(charge_right(ell, m)).or_default().push(m);
    }
    let q_values: Vec<i64> = left
        .keys()
        .filter(|q| right.contains_key(q))
        .copied()
        .collect();
    let left_labels: Vec<Vec<u32>> = q_values.iter().map(|q| left[q].clone()).collect();
    let right_labels: Vec<Vec<u32>> = q_values.iter().map(|q| right[q].clone()).collect();
    let mut offsets = Vec::with_capacity(q_values.len() + 1);
    let mut acc = 0usize;
    for k in 0..q_values.len() {
        offsets.push(acc);
        acc += left_labels[k].len() * right_labels[k].len();
    }
    offsets.push(acc);
    Ok(ChargeSectorTable {
        ell,
        q_values,
        left_labels,
        right_labels,
        offsets,
    })
}

impl ChargeSectorTable {
    pub fn balanced_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn sector_count(&self) -> usize {
        self.q_values.len()
    }

    /// flat = offset[q] + xi·|right(q)| + yi.
    pub fn balanced_index(&self, q_idx: usize, xi: usize, yi: usize) -> usize {
        debug_assert!(xi < self.left_labels[q_idx].len());
        debug_assert!(yi < self.right_labels[q_idx].len());
        self.offsets[q_idx] + xi * self.right_labels[q_idx].len() + yi
    }

    /// Inverse of `balanced_index` for a full-chain config; None when the
    /// halves carry different charges.
    pub fn sector_of(&self, cfg: FermionConfig) -> Option<(usize, usize, usize)> {
        debug_assert_eq!(cfg.ell, self.ell);
        let ql = charge_left(self.ell, cfg.left_mask());
        let qr = charge_right(self.ell, cfg.right_mask());
        if ql != qr {
            return None;
        }
        let q_idx = self.q_values.binary_search(&ql).ok()?;
        let xi = self.left_labels[q_idx].binary_search(&cfg.left_mask()).ok()?;
        let yi = self.right_labels[q_idx]
            .binary_search(&cfg.right_mask())
            .ok()?;
        Some((q_idx, xi, yi))
    }

    /// Charge-matched full-chain configs in balanced order (sector ascending,
    /// left label major, right label minor).
    pub fn balanced_configs(&self) -> Vec<FermionConfig> {
        let mut out = Vec::with_capacity(self.balanced_dim());
        for k in 0..self.q_values.len() {
            for &x in &self.left_labels[k] {
                for &y in &self.right_labels[k] {
                    out.push(FermionConfig::combine(self.ell, x, y));
                }
            }
        }
        out
    }
}

/// ψ_n rows evaluated at Gauss-Hermite nodes, with the weights premultiplied
/// by e^{x_k²} so that T·diag(weights)·Tᵀ = I holds by quadrature exactness.
#[derive(Clone, Debug)]
pub struct HermiteTransform {
    /// (n_max+1) × grid_nodes, entry [n, k] = ψ_n(x_k).
    pub matrix: DMatrix<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn hermite_position_transform(
    n_max: usize,
    grid_nodes: usize,
) -> Result<HermiteTransform, ModelError> {
    if grid_nodes < n_max + 1 {
        return Err(ModelError::GridTooSmall(grid_nodes, n_max + 1));
    }
    let (nodes, w) = gauss_hermite(grid_nodes);
    let weights: Vec<f64> = nodes
        .iter()
        .zip(&w)
        .map(|(&x, &wk)| wk * (x * x).exp())
        .collect();
    let mut matrix = DMatrix::zeros(n_max + 1, grid_nodes);
    for (k, &x) in nodes.iter().enumerate() {
        let mut prev = 0.0f64;
        let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
        for n in 0..=n_max {
            matrix[(n, k)] = cur;
            let nf = (n + 1) as f64;
            let next = x * (2.0 / nf).sqrt() * cur - ((nf - 1.0) / nf).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    Ok(HermiteTransform {
        matrix,
        nodes,
        weights,
    })
}

/// Per-site phonon basis: either the occupation cutoff or the position grid.
#[derive(Clone, Debug, PartialEq)]
pub enum PhononRep {
    Fock,
    Grid,
}

#[derive(Clone, Debug)]
pub struct PhononBasisSpec {
    pub rep: PhononRep,
    /// Per-site dimension: n_max+1 or grid_nodes.
    pub d: usize,
    /// Gauss-Hermite nodes (grid only).
    pub nodes: Vec<f64>,
    /// Modified weights w_k e^{x_k²} (grid only).
    pub weights: Vec<f64>,
}

impl PhononBasisSpec {
    pub fn fock(n_max: usize) -> Self {
        PhononBasisSpec {
            rep: PhononRep::Fock,
            d: n_max + 1,
            nodes: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn grid(grid_nodes: usize) -> Self {
        assert!(grid_nodes >= 1);
        let (nodes, w) = gauss_hermite(grid_nodes);
        let weights = nodes
            .iter()
            .zip(&w)
            .map(|(&x, &wk)| wk * (x * x).exp())
            .collect();
        PhononBasisSpec {
            rep: PhononRep::Grid,
            d: grid_nodes,
            nodes,
            weights,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FermionSector {
    /// All 2^{2ℓ} occupation patterns, ascending mask order (scratch space
    /// for operator construction).
    Full,
    /// popcount = ℓ, site-tuple lexicographic order.
    HalfFilled,
    /// Charge-matched pairs in sector order (image of the half-filled space
    /// under the hole-particle map).
    Balanced,
}

/// Fermion sector ⊗ phonon product basis with flat row indexing
/// flat = fermion_index · d^{2ℓ} + phonon_index, phonon digits little-endian
/// in the site position (digit at pos p has stride d^p).
pub struct CompositeBasis {
    pub ell: u32,
    pub sector: FermionSector,
    pub configs: Vec<FermionConfig>,
    pub phonon: PhononBasisSpec,
    index: BTreeMap<u32, usize>,
    phonon_dim: usize,
}

impl CompositeBasis {
    fn build(
        ell: u32,
        sector: FermionSector,
        configs: Vec<FermionConfig>,
        phonon: PhononBasisSpec,
    ) -> Result<Self, ModelError> {
        let sites = 2 * ell;
        let phonon_dim = phonon
            .d
            .checked_pow(sites)
            .ok_or_else(|| ModelError::BasisTooLarge(format!("{}^{}", phonon.d, sites)))?;
        configs
            .len()
            .checked_mul(phonon_dim)
            .ok_or_else(|| {
                ModelError::BasisTooLarge(format!("{} * {}", configs.len(), phonon_dim))
            })?;
        let index = configs
            .iter()
            .enumerate()
            .map(|(i, c)| (c.mask, i))
            .collect();
        Ok(CompositeBasis {
            ell,
            sector,
            configs,
            phonon,
            index,
            phonon_dim,
        })
    }

    pub fn full(ell: u32, phonon: PhononBasisSpec) -> Result<Self, ModelError> {
        check_chain(ell)?;
        let configs = (0..1u32 << (2 * ell))
            .map(|mask| FermionConfig { mask, ell })
            .collect();
        Self::build(ell, FermionSector::Full, configs, phonon)
    }

    pub fn half_filled(ell: u32, phonon: PhononBasisSpec) -> Result<Self, ModelError> {
        let configs = enumerate_half_filled(ell)?;
        Self::build(ell, FermionSector::HalfFilled, configs, phonon)
    }

    pub fn balanced(ell: u32, phonon: PhononBasisSpec) -> Result<Self, ModelError> {
        let table = sector_decompose(ell)?;
        Self::build(ell, FermionSector::Balanced, table.balanced_configs(), phonon)
    }

    pub fn site_count(&self) -> u32 {
        2 * self.ell
    }

    pub fn fermion_dim(&self) -> usize {
        self.configs.len()
    }

    pub fn phonon_dim(&self) -> usize {
        self.phonon_dim
    }

    pub fn dim(&self) -> usize {
        self.configs.len() * self.phonon_dim
    }

    pub fn config_index(&self, mask: u32) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    pub fn flat(&self, f_idx: usize, ph_idx: usize) -> usize {
        debug_assert!(f_idx < self.fermion_dim() && ph_idx < self.phonon_dim);
        f_idx * self.phonon_dim + ph_idx
    }

    pub fn split(&self, flat: usize) -> (usize, usize) {
        debug_assert!(flat < self.dim());
        (flat / self.phonon_dim, flat % self.phonon_dim)
    }

    /// Occupation digit of site position `pos` inside a phonon index.
    pub fn phonon_digit(&self, ph_idx: usize, pos: u32) -> usize {
        ph_idx / self.phonon.d.pow(pos) % self.phonon.d
    }

    pub fn phonon_pack(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.site_count() as usize);
        let mut ph = 0usize;
        for (p, &dig) in digits.iter().enumerate() {
            debug_assert!(dig < self.phonon.d);
            ph += dig * self.phonon.d.pow(p as u32);
        }
        ph
    }

    pub fn phonon_unpack(&self, ph_idx: usize, digits: &mut [usize]) {
        debug_assert_eq!(digits.len(), self.site_count() as usize);
        let mut rest = ph_idx;
        for d in digits.iter_mut() {
            *d = rest % self.phonon.d;
            rest /= self.phonon.d;
        }
        debug_assert_eq!(rest, 0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binomial(n: u64, k: u64) -> u64 {
        let mut v = 1u64;
        for i in 0..k {
            v = v * (n - i) / (i + 1);
        }
        v
    }

    #[test]
    fn half_filled_counts_and_first_elements() {
        let e1 = enumerate_half_filled(1).unwrap();
        assert_eq!(e1.len(), 2);
        assert_eq!(e1[0].sites(), vec![-1]);
        assert_eq!(e1[1].sites(), vec![0]);

        let e3 = enumerate_half_filled(3).unwrap();
        assert_eq!(e3.len(), 20);
        assert!(e3.iter().all(|c| c.occupancy() == 3));

        let e2 = enumerate_half_filled(2).unwrap();
        assert_eq!(e2.len(), 6);
        assert_eq!(e2[0].sites(), vec![-2, -1]);
    }

    #[test]
    fn half_filled_order_matches_brute_force_lex_sort() {
        // Oracle: collect every popcount-2 mask at ℓ=2, sort by site tuple.
        let ell = 2u32;
        let mut brute: Vec<Vec<i64>> = (0..1u32 << 4)
            .filter(|m| m.count_ones() == 2)
            .map(|mask| FermionConfig { mask, ell }.sites())
            .collect();
        brute.sort();
        let got: Vec<Vec<i64>> = enumerate_half_filled(ell)
            .unwrap()
            .iter()
            .map(|c| c.sites())
            .collect();
        assert_eq!(got, brute);
    }

    #[test]
    fn chain_size_guard_rejects() {
        assert!(enumerate_half_filled(16).is_err());
        assert!(enumerate_half_filled(0).is_err());
    }

    #[test]
    fn sector_table_ell3_matches_hand_enumeration() {
        // Λ_L = {−3,−2,−1}: even occupied counts +1 (site −2), odd −1.
        // Local left bit b ↔ site −3+b, local right bit b ↔ site b.
        let t = sector_decompose(3).unwrap();
        assert_eq!(t.q_values, vec![-2, -1, 0, 1]);
        assert_eq!(t.left_labels[0], vec![0b101]); // {−3,−1}
        assert_eq!(t.left_labels[1], vec![0b001, 0b100, 0b111]); // {−3},{−1},{−3,−2,−1}
        assert_eq!(t.left_labels[2], vec![0b000, 0b011, 0b110]); // ∅,{−3,−2},{−2,−1}
        assert_eq!(t.left_labels[3], vec![0b010]); // {−2}
        assert_eq!(t.right_labels[0], vec![0b101]); // {0,2}
        assert_eq!(t.right_labels[1], vec![0b001, 0b100, 0b111]); // {0},{2},{0,1,2}
        assert_eq!(t.right_labels[2], vec![0b000, 0b011, 0b110]); // ∅,{0,1},{1,2}
        assert_eq!(t.right_labels[3], vec![0b010]); // {1}
        assert_eq!(t.balanced_dim(), 20);
        assert_eq!(t.offsets, vec![0, 1, 10, 19, 20]);
    }

    #[test]
    fn sector_table_ell1() {
        let t = sector_decompose(1).unwrap();
        assert_eq!(t.q_values, vec![-1, 0]);
        assert_eq!(t.left_labels, vec![vec![1], vec![0]]);
        assert_eq!(t.right_labels, vec![vec![1], vec![0]]);
        assert_eq!(t.balanced_dim(), 2);
    }

    #[test]
    fn balanced_configs_are_charge_matched_and_indexed() {
        let t = sector_decompose(3).unwrap();
        let configs = t.balanced_configs();
        assert_eq!(configs.len(), 20);
        // The empty chain is balanced (q = 0) but not half-filled.
        assert!(configs.iter().any(|c| c.mask == 0));
        for (i, c) in configs.iter().enumerate() {
            assert_eq!(
                charge_left(3, c.left_mask()),
                charge_right(3, c.right_mask())
            );
            let (q, xi, yi) = t.sector_of(*c).unwrap();
            assert_eq!(t.balanced_index(q, xi, yi), i);
        }
        // An unbalanced config is rejected.
        let unbalanced = FermionConfig::from_sites(3, &[-2, -3, -1]);
        assert_eq!(t.sector_of(unbalanced), None);
    }

    proptest! {
        #[test]
        fn sector_partition_is_complete(ell in 1u32..=5) {
            let t = sector_decompose(ell).unwrap();
            let total_left: usize = t.left_labels.iter().map(|v| v.len()).sum();
            let total_right: usize = t.right_labels.iter().map(|v| v.len()).sum();
            prop_assert_eq!(total_left, 1usize << ell);
            prop_assert_eq!(total_right, 1usize << ell);
            let pairs: usize = t
                .left_labels
                .iter()
                .zip(&t.right_labels)
                .map(|(l, r)| l.len() * r.len())
                .sum();
            prop_assert_eq!(pairs as u64, binomial(2 * ell as u64, ell as u64));
            for (k, q) in t.q_values.iter().enumerate() {
                for &x in &t.left_labels[k] {
                    prop_assert_eq!(charge_left(ell, x), *q);
                }
                for &y in &t.right_labels[k] {
                    prop_assert_eq!(charge_right(ell, y), *q);
                }
            }
        }

        #[test]
        fn split_and_combine_roundtrip(ell in 1u32..=5, seed in 0u32..u32::MAX) {
            let mask = seed & ((1u32 << (2 * ell)) - 1);
            let cfg = FermionConfig { mask, ell };
            let back = FermionConfig::combine(ell, cfg.left_mask(), cfg.right_mask());
            prop_assert_eq!(cfg, back);
        }
    }

    #[test]
    fn hermite_transform_is_orthonormal() {
        let t = hermite_position_transform(0, 1).unwrap();
        let g = &t.matrix * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(t.weights.clone()))
            * t.matrix.transpose();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-12);

        for (n_max, nodes) in [(3usize, 8usize), (4, 5), (2, 5)] {
            let t = hermite_position_transform(n_max, nodes).unwrap();
            let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(t.weights.clone()));
            let g = &t.matrix * w * t.matrix.transpose();
            let mut resid = 0.0f64;
            for i in 0..=n_max {
                for j in 0..=n_max {
                    let want = if i == j { 1.0 } else { 0.0 };
                    resid = resid.max((g[(i, j)] - want).abs());
                }
            }
            assert!(resid <= 1e-10, "({n_max},{nodes}) residual {resid}");
        }

        assert!(hermite_position_transform(3, 3).is_err());
    }

    #[test]
    fn hermite_vacuum_row_is_positive_gaussian() {
        let t = hermite_position_transform(4, 7).unwrap();
        let norm = std::f64::consts::PI.powf(-0.25);
        assert!((norm - 0.7511255444649425).abs() < 1e-15);
        for (k, &x) in t.nodes.iter().enumerate() {
            let want = norm * (-0.5 * x * x).exp();
            assert!((t.matrix[(0, k)] - want).abs() < 1e-14);
            assert!(t.matrix[(0, k)] > 0.0);
        }
    }

    #[test]
    fn composite_roundtrip_and_strides() {
        let basis = CompositeBasis::half_filled(2, PhononBasisSpec::fock(1)).unwrap();
        assert_eq!(basis.dim(), 6 * 16);
        for flat in 0..basis.dim() {
            let (f, ph) = basis.split(flat);
            assert_eq!(basis.flat(f, ph), flat);
        }
        let mut digits = vec![0usize; 4];
        for ph in 0..basis.phonon_dim() {
            basis.phonon_unpack(ph, &mut digits);
            assert_eq!(basis.phonon_pack(&digits), ph);
            for (p, &d) in digits.iter().enumerate() {
                assert_eq!(basis.phonon_digit(ph, p as u32), d);
            }
        }
        // Little-endian: raising the digit at pos 2 moves the index by d².
        let lo = basis.phonon_pack(&[0, 0, 0, 0]);
        let hi = basis.phonon_pack(&[0, 0, 1, 0]);
        assert_eq!(hi - lo, 4);
    }

    #[test]
    fn composite_dimensions() {
        let b = CompositeBasis::half_filled(3, PhononBasisSpec::fock(2)).unwrap();
        assert_eq!(b.fermion_dim(), 20);
        assert_eq!(b.phonon_dim(), 729);
        assert_eq!(b.dim(), 14580);

        let f = CompositeBasis::full(2, PhononBasisSpec::fock(0)).unwrap();
        assert_eq!(f.dim(), 16);
        assert_eq!(f.config_index(0b0101), Some(5));

        let bal = CompositeBasis::balanced(3, PhononBasisSpec::fock(0)).unwrap();
        assert_eq!(bal.fermion_dim(), 20);

        assert!(CompositeBasis::full(5, PhononBasisSpec::grid(100)).is_err());
    }
}
