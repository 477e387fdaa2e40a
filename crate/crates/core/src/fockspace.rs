//! Fixed-particle-number fermionic Fock bases on an open chain of `L` sites.
//!
//! Sites are labelled `1..=L` and site `j` is stored in bit `j` of the
//! occupation word, so bit 0 is always clear. A basis state is the ordered
//! product `c†_{j1} ... c†_{jN} |0>` with `j1 < ... < jN`; every fermionic
//! sign below follows from anticommuting operators into that order.

use std::fmt;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest chain length representable in a 64-bit occupation word.
pub const MAX_SITES: usize = 63;

/// Occupation-number basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockState {
    occ: u64,
    sites: usize,
}

impl FockState {
    /// Builds a state from a list of occupied sites (1-based, any order).
    pub fn from_sites(sites: usize, occupied: &[usize]) -> Result<Self> {
        check_sites(sites)?;
        let mut occ = 0u64;
        for &j in occupied {
            if j == 0 || j > sites {
                return domain(format!("site {j} outside 1..={sites}"));
            }
            if occ & (1 << j) != 0 {
                return domain(format!("site {j} listed twice"));
            }
            occ |= 1 << j;
        }
        Ok(Self { occ, sites })
    }

    pub fn from_bits(sites: usize, occ: u64) -> Result<Self> {
        check_sites(sites)?;
        let allowed = site_mask(sites);
        if occ & !allowed != 0 {
            return domain(format!("occupation word {occ:#b} sets bits outside 1..={sites}"));
        }
        Ok(Self { occ, sites })
    }

    pub fn vacuum(sites: usize) -> Self {
        Self { occ: 0, sites }
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.occ
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.sites
    }

    #[inline]
    pub fn particles(&self) -> usize {
        self.occ.count_ones() as usize
    }

    #[inline]
    pub fn is_occupied(&self, site: usize) -> bool {
        site >= 1 && site <= self.sites && self.occ & (1 << site) != 0
    }

    /// Occupied sites in ascending order.
    pub fn occupied_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.sites).filter(move |&j| self.occ & (1 << j) != 0)
    }

    /// Sum of the labels of the occupied sites.
    pub fn site_sum(&self) -> usize {
        self.occupied_sites().sum()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.sites {
            return domain(format!("site {site} outside 1..={}", self.sites));
        }
        Ok(())
    }

    /// Number of occupied sites strictly between `a` and `b`.
    fn occupied_between(&self, a: usize, b: usize) -> u32 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi <= lo + 1 {
            return 0;
        }
        let mask = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
        (self.occ & mask).count_ones()
    }

    /// Applies `c_j`. Returns `None` when site `j` is empty.
    pub fn annihilate(&self, j: usize) -> Result<Option<(FockState, f64)>> {
        self.check_site(j)?;
        if !self.is_occupied(j) {
            return Ok(None);
        }
        let below = (self.occ & ((1u64 << j) - 1)).count_ones();
        let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(Some((
            FockState {
                occ: self.occ & !(1 << j),
                sites: self.sites,
            },
            sign,
        )))
    }

    /// Applies `c†_j`. Returns `None` when site `j` is already occupied.
    pub fn create(&self, j: usize) -> Result<Option<(FockState, f64)>> {
        self.check_site(j)?;
        if self.is_occupied(j) {
            return Ok(None);
        }
        let below = (self.occ & ((1u64 << j) - 1)).count_ones();
        let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(Some((
            FockState {
                occ: self.occ | (1 << j),
                sites: self.sites,
            },
            sign,
        )))
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 1..=self.sites {
            f.write_str(if self.is_occupied(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 || sites > MAX_SITES {
        return domain(format!("site count {sites} outside 1..={MAX_SITES}"));
    }
    Ok(())
}

fn site_mask(sites: usize) -> u64 {
    (((1u128 << (sites + 1)) - 1) as u64) & !1
}

/// Image of `state` under `c†_i c_j`, with its fermionic sign.
///
/// The sign is `(-1)^k` with `k` the number of occupied sites strictly
/// between `i` and `j`. For `i == j` this is the number operator.
pub fn hop_element(state: &FockState, i: usize, j: usize) -> Result<Option<(FockState, f64)>> {
    state.check_site(i)?;
    state.check_site(j)?;
    if !state.is_occupied(j) {
        return Ok(None);
    }
    if i == j {
        return Ok(Some((*state, 1.0)));
    }
    if state.is_occupied(i) {
        return Ok(None);
    }
    let k = state.occupied_between(i, j);
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let occ = (state.occ & !(1 << j)) | (1 << i);
    Ok(Some((
        FockState {
            occ,
            sites: state.sites,
        },
        sign,
    )))
}

/// `C(n, k)` with overflow detection.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// The `N`-particle sector on `L` sites together with a display ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockBasis {
    sites: usize,
    particles: usize,
    states: Vec<FockState>,
    /// `perm[k]` is the canonical index of the state shown at display slot `k`.
    perm: Vec<usize>,
}

impl FockBasis {
    #[inline]
    pub fn num_sites(&self) -> usize {
        self.sites
    }

    #[inline]
    pub fn particles(&self) -> usize {
        self.particles
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// States in canonical (ascending bitmask) order.
    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, canonical: usize) -> &FockState {
        &self.states[canonical]
    }

    /// Display slot -> canonical index.
    pub fn order(&self) -> &[usize] {
        &self.perm
    }

    pub fn is_canonical_order(&self) -> bool {
        self.perm.iter().enumerate().all(|(k, &p)| k == p)
    }

    /// Canonical index of a state, if it belongs to this sector.
    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        if state.sites != self.sites {
            return None;
        }
        self.states.binary_search(state).ok()
    }

    /// Same states with a caller-supplied display order.
    pub fn with_order(&self, perm: Vec<usize>) -> Result<FockBasis> {
        check_permutation(&perm, self.dim())?;
        Ok(FockBasis { perm, ..self.clone() })
    }
}

pub(crate) fn check_permutation(perm: &[usize], dim: usize) -> Result<()> {
    if perm.len() != dim {
        return domain(format!("ordering has length {}, expected {dim}", perm.len()));
    }
    let mut seen = vec![false; dim];
    for &p in perm {
        if p >= dim || seen[p] {
            return domain("ordering is not a permutation");
        }
        seen[p] = true;
    }
    Ok(())
}

/// All `C(L, N)` states of the `N`-particle sector, ascending by bitmask.
pub fn enumerate_basis(sites: usize, particles: usize) -> Result<FockBasis> {
    check_sites(sites)?;
    if particles > sites {
        return domain(format!("particle number {particles} exceeds site count {sites}"));
    }
    let dim = match binomial(sites, particles) {
        Some(d) => d,
        None => return domain(format!("C({sites}, {particles}) overflows")),
    };
    let mut states = Vec::with_capacity(dim);
    if particles == 0 {
        states.push(FockState::vacuum(sites));
    } else {
        // Gosper's hack on the unshifted word; site j lives in bit j.
        let limit = site_mask(sites);
        let mut w: u64 = (1u64 << particles) - 1;
        loop {
            let occ = w << 1;
            debug_assert!(occ & !limit == 0);
            states.push(FockState { occ, sites });
            if states.len() == dim {
                break;
            }
            let c = w & w.wrapping_neg();
            let r = w + c;
            w = (((r ^ w) >> 2) / c) | r;
        }
    }
    Ok(FockBasis {
        sites,
        particles,
        perm: (0..dim).collect(),
        states,
    })
}

/// Reorders the display slots so that the reference amplitudes are
/// non-increasing in modulus. Ties keep canonical order.
pub fn reorder_by_reference(basis: &FockBasis, amplitudes: &[c64]) -> Result<FockBasis> {
    if amplitudes.len() != basis.dim() {
        return domain(format!(
            "reference vector has length {}, basis dimension is {}",
            amplitudes.len(),
            basis.dim()
        ));
    }
    let perm = descending_order(amplitudes.iter().map(|a| a.norm()));
    Ok(FockBasis { perm, ..basis.clone() })
}

/// Indices sorted by non-increasing value, stable on ties.
pub(crate) fn descending_order(values: impl Iterator<Item = f64>) -> Vec<usize> {
    let mags: Vec<f64> = values.collect();
    let mut perm: Vec<usize> = (0..mags.len()).collect();
    perm.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]));
    perm
}

/// Several particle-number sectors of the same chain stacked into one
/// Hilbert space, in descending particle number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorLayout {
    sites: usize,
    sectors: Vec<FockBasis>,
    offsets: Vec<usize>,
}

impl SectorLayout {
    /// Sectors `top, top-1, ..., 0`.
    pub fn descending_from(sites: usize, top: usize) -> Result<Self> {
        if top > sites {
            return domain(format!("top sector {top} exceeds site count {sites}"));
        }
        let mut sectors = Vec::with_capacity(top + 1);
        let mut offsets = Vec::with_capacity(top + 1);
        let mut offset = 0;
        for n in (0..=top).rev() {
            let b = enumerate_basis(sites, n)?;
            offsets.push(offset);
            offset += b.dim();
            sectors.push(b);
        }
        Ok(Self {
            sites,
            sectors,
            offsets,
        })
    }

    /// The full `2^L`-dimensional Fock space.
    pub fn full(sites: usize) -> Result<Self> {
        Self::descending_from(sites, sites)
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn top(&self) -> usize {
        self.sectors[0].particles()
    }

    pub fn dim(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.sectors.last().map_or(0, |b| b.dim())
    }

    pub fn sectors(&self) -> &[FockBasis] {
        &self.sectors
    }

    /// Basis and offset of the `n`-particle block.
    pub fn sector(&self, n: usize) -> Result<(&FockBasis, usize)> {
        let top = self.top();
        if n > top {
            return domain(format!("sector {n} not present (layout spans 0..={top})"));
        }
        let k = top - n;
        Ok((&self.sectors[k], self.offsets[k]))
    }

    /// Position of a state in the stacked basis.
    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        let n = state.particles();
        let (b, off) = self.sector(n).ok()?;
        b.index_of(state).map(|i| off + i)
    }

    /// Iterates `(global index, state)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &FockState)> + '_ {
        self.sectors
            .iter()
            .zip(&self.offsets)
            .flat_map(|(b, &off)| b.states().iter().enumerate().map(move |(i, s)| (off + i, s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pascal(n: usize, k: usize) -> usize {
        if k == 0 || k == n {
            1
        } else {
            pascal(n - 1, k - 1) + pascal(n - 1, k)
        }
    }

    /// Sign of `c†_i c_j` by literally moving operators through the ordered
    /// creation string.
    fn brute_hop(occupied: &[usize], i: usize, j: usize) -> Option<(Vec<usize>, f64)> {
        let mut ops: Vec<usize> = occupied.to_vec();
        ops.sort_unstable();
        let pos = ops.iter().position(|&s| s == j)?;
        // c_j anticommutes past `pos` creators to annihilate its partner.
        let mut sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
        ops.remove(pos);
        if ops.contains(&i) {
            return None;
        }
        // c†_i enters at the front, then bubbles into ascending position.
        let swaps = ops.iter().filter(|&&s| s < i).count();
        if swaps % 2 == 1 {
            sign = -sign;
        }
        ops.push(i);
        ops.sort_unstable();
        Some((ops, sign))
    }

    #[test]
    fn dimensions_match_pascal_triangle() {
        for l in 1..=14 {
            for n in 0..=l {
                let b = enumerate_basis(l, n).unwrap();
                assert_eq!(b.dim(), pascal(l, n), "L={l} N={n}");
                assert!(b.states().windows(2).all(|w| w[0].bits() < w[1].bits()));
                assert!(b.states().iter().all(|s| s.particles() == n && s.bits() & 1 == 0));
            }
        }
    }

    #[test]
    fn documented_dimensions() {
        assert_eq!(enumerate_basis(12, 6).unwrap().dim(), 924);
        assert_eq!(enumerate_basis(5, 2).unwrap().dim(), 10);
        let vac = enumerate_basis(7, 0).unwrap();
        assert_eq!(vac.dim(), 1);
        assert_eq!(vac.state(0).bits(), 0);
        assert!(enumerate_basis(3, 4).is_err());
        assert!(enumerate_basis(0, 0).is_err());
        assert!(enumerate_basis(64, 1).is_err());
    }

    #[test]
    fn canonical_order_starts_with_leftmost_filling() {
        let b = enumerate_basis(4, 2).unwrap();
        let first: Vec<usize> = b.state(0).occupied_sites().collect();
        let last: Vec<usize> = b.state(b.dim() - 1).occupied_sites().collect();
        assert_eq!(first, vec![1, 2]);
        assert_eq!(last, vec![3, 4]);
        assert!(b.is_canonical_order());
    }

    #[test]
    fn hop_signs_match_brute_force() {
        for l in 2..=7 {
            for n in 0..=l {
                for s in enumerate_basis(l, n).unwrap().states() {
                    let occ: Vec<usize> = s.occupied_sites().collect();
                    for i in 1..=l {
                        for j in 1..=l {
                            let got = hop_element(s, i, j).unwrap();
                            let want = if i == j {
                                occ.contains(&j).then(|| (occ.clone(), 1.0))
                            } else {
                                brute_hop(&occ, i, j)
                            };
                            match (got, want) {
                                (None, None) => {}
                                (Some((t, sg)), Some((sites, sw))) => {
                                    assert_eq!(t.occupied_sites().collect::<Vec<_>>(), sites);
                                    assert_eq!(sg, sw, "{s} i={i} j={j}");
                                }
                                (g, w) => panic!("{s} i={i} j={j}: {g:?} vs {w:?}"),
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn nearest_neighbour_hop_is_sign_free() {
        let s = FockState::from_sites(6, &[1, 3, 5]).unwrap();
        let (t, sign) = hop_element(&s, 4, 3).unwrap().unwrap();
        assert_eq!(sign, 1.0);
        assert_eq!(t.occupied_sites().collect::<Vec<_>>(), vec![1, 4, 5]);
        assert!(hop_element(&s, 3, 2).unwrap().is_none());
        assert!(hop_element(&s, 7, 1).is_err());
    }

    #[test]
    fn boundary_hop_sign() {
        for n in 1..=5 {
            let l = 7;
            let mut occ: Vec<usize> = (2..=n).collect();
            occ.push(l);
            let s = FockState::from_sites(l, &occ).unwrap();
            let (_, sign) = hop_element(&s, 1, l).unwrap().unwrap();
            assert_eq!(sign, if (n - 1) % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn hop_round_trip_sign_is_positive() {
        for s in enumerate_basis(6, 3).unwrap().states() {
            for i in 1..=6 {
                for j in 1..=6 {
                    if let Some((t, a)) = hop_element(s, i, j).unwrap() {
                        let (u, b) = hop_element(&t, j, i).unwrap().unwrap();
                        assert_eq!(u, *s);
                        assert_eq!(a * b, 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn annihilate_then_create_restores_sign() {
        for s in enumerate_basis(5, 3).unwrap().states() {
            for j in s.occupied_sites() {
                let (t, a) = s.annihilate(j).unwrap().unwrap();
                let (u, b) = t.create(j).unwrap().unwrap();
                assert_eq!(u, *s);
                assert_eq!(a * b, 1.0);
                // c†_i c_j composed from the two halves equals hop_element.
                for i in 1..=5 {
                    let via = t.create(i).unwrap().map(|(v, c)| (v, a * c));
                    assert_eq!(via, hop_element(s, i, j).unwrap());
                }
            }
        }
    }

    #[test]
    fn reorder_examples() {
        let b = enumerate_basis(3, 1).unwrap();
        let amps = [c64::new(0.1, 0.0), c64::new(0.9, 0.0), c64::new(0.0, -0.5)];
        assert_eq!(reorder_by_reference(&b, &amps).unwrap().order(), &[1, 2, 0]);

        let desc = [c64::new(0.9, 0.0), c64::new(0.5, 0.0), c64::new(0.1, 0.0)];
        assert!(reorder_by_reference(&b, &desc).unwrap().is_canonical_order());

        let flat = [c64::new(0.5, 0.0); 3];
        assert!(reorder_by_reference(&b, &flat).unwrap().is_canonical_order());

        assert!(reorder_by_reference(&b, &flat[..2]).is_err());
    }

    #[test]
    fn sector_layout_offsets() {
        let lay = SectorLayout::full(3).unwrap();
        assert_eq!(lay.dim(), 8);
        assert_eq!(lay.sector(3).unwrap().1, 0);
        assert_eq!(lay.sector(2).unwrap().1, 1);
        assert_eq!(lay.sector(1).unwrap().1, 4);
        assert_eq!(lay.sector(0).unwrap().1, 7);
        for (g, s) in lay.iter() {
            assert_eq!(lay.index_of(s), Some(g));
        }
        assert!(lay.sector(4).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reorder_is_monotone(vals in proptest::collection::vec((0.0f64..1.0, -1.0f64..1.0), 1..60)) {
                let l = vals.len();
                prop_assume!(l <= MAX_SITES);
                let b = enumerate_basis(l, 1).unwrap();
                let amps: Vec<c64> = vals.iter().map(|&(r, i)| c64::new(r, i)).collect();
                let r = reorder_by_reference(&b, &amps).unwrap();
                let ord = r.order();
                for w in ord.windows(2) {
                    prop_assert!(amps[w[0]].norm() >= amps[w[1]].norm());
                    if amps[w[0]].norm() == amps[w[1]].norm() {
                        prop_assert!(w[0] < w[1]);
                    }
                }
            }
        }
    }
}
