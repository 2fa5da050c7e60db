use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies the Hilbert space an operator or state lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisTag {
    /// Hard-core (spin-1/2) product space of dimension 2^L.
    Full { n_sites: usize },
    /// Fixed total excitation number within the hard-core space.
    Sector { n_sites: usize, n_excitations: usize },
    /// Bosonic product space with occupations 0..cutoff−1 per site.
    Bosonic { n_sites: usize, cutoff: usize },
}

impl BasisTag {
    pub fn n_sites(&self) -> usize {
        match *self {
            BasisTag::Full { n_sites }
            | BasisTag::Sector { n_sites, .. }
            | BasisTag::Bosonic { n_sites, .. } => n_sites,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            BasisTag::Full { n_sites } => 1usize << n_sites,
            BasisTag::Sector {
                n_sites,
                n_excitations,
            } => binomial(n_sites, n_excitations),
            BasisTag::Bosonic { n_sites, cutoff } => cutoff.pow(n_sites as u32),
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BasisTag::Full { n_sites } => write!(f, "full(L={n_sites})"),
            BasisTag::Sector {
                n_sites,
                n_excitations,
            } => write!(f, "sector(L={n_sites}, N={n_excitations})"),
            BasisTag::Bosonic { n_sites, cutoff } => {
                write!(f, "bosonic(L={n_sites}, cutoff={cutoff})")
            }
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Occupation basis of the hard-core sector with a fixed number of
/// excitations.
///
/// States are bit masks with site 1 in the most significant position
/// (bit `n_sites − 1`). They are ordered lexicographically on the bit string
/// read from site 1 with `1` sorting before `0`, i.e. by decreasing integer
/// value: for two sites and one excitation the order is `10, 01`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    n_excitations: usize,
    states: Vec<u64>,
    index: HashMap<u64, usize>,
}

/// Enumerates the canonical basis of the `n_excitations` sector on
/// `n_sites` hard-core sites.
pub fn build_sector_basis(n_sites: usize, n_excitations: usize) -> Result<SectorBasis> {
    if n_excitations > n_sites {
        return Err(Error::domain(format!(
            "excitation number {n_excitations} exceeds site count {n_sites}"
        )));
    }
    if n_sites > 63 {
        return Err(Error::domain("at most 63 sites fit in a hard-core bit mask"));
    }
    let mut states = Vec::with_capacity(binomial(n_sites, n_excitations));
    let mut chosen = Vec::with_capacity(n_excitations);
    enumerate(n_sites, n_excitations, 0, &mut chosen, &mut states);
    let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    Ok(SectorBasis {
        n_sites,
        n_excitations,
        states,
        index,
    })
}

// Site positions in increasing order give decreasing masks.
fn enumerate(n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, out: &mut Vec<u64>) {
    if chosen.len() == k {
        let mask = chosen.iter().fold(0u64, |m, &s| m | 1u64 << (n - 1 - s));
        out.push(mask);
        return;
    }
    let remaining = k - chosen.len();
    for s in start..=(n - remaining) {
        chosen.push(s);
        enumerate(n, k, s + 1, chosen, out);
        chosen.pop();
    }
}

impl SectorBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    /// Bit string of state `i`, site 1 first.
    pub fn label(&self, i: usize) -> String {
        mask_to_string(self.states[i], self.n_sites)
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::Sector {
            n_sites: self.n_sites,
            n_excitations: self.n_excitations,
        }
    }
}

pub(crate) fn mask_to_string(mask: u64, n_sites: usize) -> String {
    (0..n_sites)
        .map(|s| if mask >> (n_sites - 1 - s) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Any of the occupation bases operators can be built on.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeBasis {
    /// Hard-core product space; index = integer value of the bit string with
    /// site 1 most significant.
    Full { n_sites: usize },
    Sector(SectorBasis),
    /// Mixed-radix index with site 1 most significant.
    Bosonic { n_sites: usize, cutoff: usize },
}

impl From<SectorBasis> for LatticeBasis {
    fn from(b: SectorBasis) -> Self {
        LatticeBasis::Sector(b)
    }
}

impl LatticeBasis {
    pub fn full(n_sites: usize) -> Self {
        LatticeBasis::Full { n_sites }
    }

    pub fn sector(n_sites: usize, n_excitations: usize) -> Result<Self> {
        build_sector_basis(n_sites, n_excitations).map(LatticeBasis::Sector)
    }

    pub fn bosonic(n_sites: usize, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::domain(format!("fock cutoff {cutoff} < 2")));
        }
        Ok(LatticeBasis::Bosonic { n_sites, cutoff })
    }

    pub fn tag(&self) -> BasisTag {
        match self {
            LatticeBasis::Full { n_sites } => BasisTag::Full { n_sites: *n_sites },
            LatticeBasis::Sector(b) => b.tag(),
            LatticeBasis::Bosonic { n_sites, cutoff } => BasisTag::Bosonic {
                n_sites: *n_sites,
                cutoff: *cutoff,
            },
        }
    }

    pub fn n_sites(&self) -> usize {
        self.tag().n_sites()
    }

    pub fn dim(&self) -> usize {
        match self {
            LatticeBasis::Sector(b) => b.len(),
            other => other.tag().dim(),
        }
    }

    /// Number of levels kept per site.
    pub fn local_dim(&self) -> usize {
        match self {
            LatticeBasis::Bosonic { cutoff, .. } => *cutoff,
            _ => 2,
        }
    }

    pub fn is_hard_core(&self) -> bool {
        self.local_dim() == 2
    }

    /// Occupation numbers of basis state `i`, site 1 first.
    pub fn occupations(&self, i: usize) -> Vec<u8> {
        match self {
            LatticeBasis::Full { n_sites } => {
                let n = *n_sites;
                (0..n).map(|s| (i >> (n - 1 - s) & 1) as u8).collect()
            }
            LatticeBasis::Sector(b) => {
                let n = b.n_sites;
                let m = b.states[i];
                (0..n).map(|s| (m >> (n - 1 - s) & 1) as u8).collect()
            }
            LatticeBasis::Bosonic { n_sites, cutoff } => {
                let mut occ = vec![0u8; *n_sites];
                let mut rest = i;
                for s in (0..*n_sites).rev() {
                    occ[s] = (rest % cutoff) as u8;
                    rest /= cutoff;
                }
                occ
            }
        }
    }

    /// Inverse of [`occupations`](Self::occupations); `None` when the
    /// configuration is not part of this basis.
    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.n_sites() || occ.iter().any(|&n| n as usize >= self.local_dim()) {
            return None;
        }
        match self {
            LatticeBasis::Full { .. } => Some(occ.iter().fold(0usize, |a, &n| a << 1 | n as usize)),
            LatticeBasis::Sector(b) => {
                let mask = occ.iter().fold(0u64, |a, &n| a << 1 | n as u64);
                b.index_of(mask)
            }
            LatticeBasis::Bosonic { cutoff, .. } => {
                Some(occ.iter().fold(0usize, |a, &n| a * cutoff + n as usize))
            }
        }
    }

    pub fn label(&self, i: usize) -> String {
        self.occupations(i)
            .iter()
            .map(|&n| char::from_digit(n as u32, 36).unwrap_or('?'))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_excitation_order() {
        let b = build_sector_basis(5, 1).unwrap();
        let labels: Vec<_> = (0..b.len()).map(|i| b.label(i)).collect();
        assert_eq!(labels, ["10000", "01000", "00100", "00010", "00001"]);
    }

    #[test]
    fn two_excitation_count_and_order() {
        let b = build_sector_basis(5, 2).unwrap();
        assert_eq!(b.len(), 10);
        assert_eq!(b.label(0), "11000");
        assert_eq!(b.label(1), "10100");
        assert_eq!(b.label(9), "00011");
        assert!(b.states().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn vacuum_sector() {
        let b = build_sector_basis(3, 0).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.label(0), "000");
    }

    #[test]
    fn out_of_range_excitations() {
        assert!(matches!(build_sector_basis(3, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn index_inverts_states() {
        for k in 0..=6 {
            let b = build_sector_basis(6, k).unwrap();
            assert_eq!(b.len(), binomial(6, k));
            for (i, &s) in b.states().iter().enumerate() {
                assert_eq!(b.index_of(s), Some(i));
            }
        }
    }

    #[test]
    fn lattice_bases_round_trip() {
        let bases = [
            LatticeBasis::full(4),
            LatticeBasis::sector(4, 2).unwrap(),
            LatticeBasis::bosonic(3, 3).unwrap(),
        ];
        for b in &bases {
            for i in 0..b.dim() {
                assert_eq!(b.index_of(&b.occupations(i)), Some(i), "{:?}", b.tag());
            }
        }
    }

    #[test]
    fn full_index_is_msb_first() {
        let b = LatticeBasis::full(5);
        assert_eq!(b.index_of(&[1, 0, 0, 0, 0]), Some(16));
        assert_eq!(b.label(3), "00011");
    }

    #[test]
    fn tag_dimensions() {
        assert_eq!(BasisTag::Full { n_sites: 5 }.dim(), 32);
        assert_eq!(BasisTag::Bosonic { n_sites: 5, cutoff: 3 }.dim(), 243);
        assert_eq!(LatticeBasis::sector(5, 2).unwrap().dim(), 10);
    }
}
