//! Finite boxes in Z^d, bipartitions and l1 geometry.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::error::{Error, Result};

/// A lattice site, one integer coordinate per axis.
pub type Site = Vec<i64>;

/// A finite box `{0..L_1} x ... x {0..L_d}` with lexicographic site order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    lengths: Vec<usize>,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl Lattice {
    /// Builds the box with the given side lengths.
    pub fn build_box(dim: usize, lengths: &[usize]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("lattice dimension must be >= 1".into()));
        }
        if lengths.len() != dim {
            return Err(Error::InvalidArgument(format!("expected {dim} side lengths, got {}", lengths.len())));
        }
        if let Some(pos) = lengths.iter().position(|&l| l == 0) {
            return Err(Error::InvalidArgument(format!("side length along axis {pos} is zero")));
        }
        let total = lengths
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .ok_or_else(|| Error::InvalidArgument("lattice volume overflows".into()))?;

        let mut sites = Vec::with_capacity(total);
        let mut cur = vec![0i64; dim];
        for _ in 0..total {
            sites.push(cur.clone());
            // odometer increment, last axis fastest
            for ax in (0..dim).rev() {
                cur[ax] += 1;
                if (cur[ax] as usize) < lengths[ax] {
                    break;
                }
                cur[ax] = 0;
            }
        }
        let index = sites.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Lattice { dim, lengths: lengths.to_vec(), sites, index })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    /// Number of sites |Λ|.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        self.index.get(site).copied()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.index.contains_key(site)
    }

    /// Indices of the nearest neighbours of site `i` that lie inside the box.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let s = &self.sites[i];
        let mut out = Vec::with_capacity(2 * self.dim);
        let mut probe = s.clone();
        for ax in 0..self.dim {
            for delta in [-1i64, 1] {
                probe[ax] = s[ax] + delta;
                if let Some(j) = self.index_of(&probe) {
                    out.push(j);
                }
            }
            probe[ax] = s[ax];
        }
        out
    }

    /// All nearest-neighbour pairs `(i, j)` with `i < j`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in self.neighbors(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// `Σ_i |a_i - b_i|`.
pub fn l1_distance(a: &[i64], b: &[i64]) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("sites have dimensions {} and {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum())
}

/// A bipartition Λ = Λ₀ ∪ Λ₀ᶜ of a lattice.
///
/// Both index lists are kept in parent-lattice order.
#[derive(Debug, Clone)]
pub struct Region {
    lattice: Arc<Lattice>,
    inside: Vec<usize>,
    outside: Vec<usize>,
    mask: Vec<bool>,
}

impl Region {
    /// Region from parent-lattice indices. Duplicates are rejected.
    pub fn from_indices(lattice: Arc<Lattice>, indices: &[usize]) -> Result<Self> {
        let n = lattice.len();
        let mut mask = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, size: n });
            }
            if mask[i] {
                return Err(Error::InvalidArgument(format!("site index {i} listed twice")));
            }
            mask[i] = true;
        }
        let inside = (0..n).filter(|&i| mask[i]).collect();
        let outside = (0..n).filter(|&i| !mask[i]).collect();
        Ok(Region { lattice, inside, outside, mask })
    }

    /// Region from explicit site coordinates.
    pub fn from_sites(lattice: Arc<Lattice>, sites: &[Site]) -> Result<Self> {
        let mut idx = Vec::with_capacity(sites.len());
        for s in sites {
            if s.len() != lattice.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "site {s:?} has dimension {}, lattice has {}",
                    s.len(),
                    lattice.dim()
                )));
            }
            let i = lattice
                .index_of(s)
                .ok_or_else(|| Error::InvalidArgument(format!("site {s:?} is not in the lattice")))?;
            idx.push(i);
        }
        Self::from_indices(lattice, &idx)
    }

    /// Sub-box with the given corner and side lengths; must fit inside the lattice.
    pub fn sub_box(lattice: Arc<Lattice>, corner: &[i64], lengths: &[usize]) -> Result<Self> {
        let d = lattice.dim();
        if corner.len() != d || lengths.len() != d {
            return Err(Error::DimensionMismatch(format!("sub-box corner/lengths must have {d} entries")));
        }
        for ax in 0..d {
            if lengths[ax] == 0 {
                return Err(Error::InvalidArgument("sub-box side length is zero".into()));
            }
            let hi = corner[ax] + lengths[ax] as i64;
            if corner[ax] < 0 || hi > lattice.lengths()[ax] as i64 {
                return Err(Error::InvalidArgument(format!("sub-box exceeds the lattice along axis {ax}")));
            }
        }
        let idx: Vec<usize> = (0..lattice.len())
            .filter(|&i| {
                let s = lattice.site(i);
                (0..d).all(|ax| s[ax] >= corner[ax] && s[ax] < corner[ax] + lengths[ax] as i64)
            })
            .collect();
        Self::from_indices(lattice, &idx)
    }

    /// Centered window of length `ell` in a 1D chain.
    pub fn centered_interval(lattice: Arc<Lattice>, ell: usize) -> Result<Self> {
        if lattice.dim() != 1 {
            return Err(Error::InvalidArgument("centered_interval needs a 1D lattice".into()));
        }
        let n = lattice.len();
        if ell == 0 || ell > n {
            return Err(Error::InvalidArgument(format!("window length {ell} does not fit in {n} sites")));
        }
        let start = ((n - ell) / 2) as i64;
        Self::sub_box(lattice, &[start], &[ell])
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Indices of Λ₀ in the parent lattice.
    pub fn inside(&self) -> &[usize] {
        &self.inside
    }

    /// Indices of Λ₀ᶜ in the parent lattice.
    pub fn outside(&self) -> &[usize] {
        &self.outside
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn inside_len(&self) -> usize {
        self.inside.len()
    }

    pub fn outside_len(&self) -> usize {
        self.outside.len()
    }

    /// Sites of Λ₀ with a nearest neighbour in Λ₀ᶜ (complement taken within Λ).
    pub fn inner_boundary(&self) -> Vec<Site> {
        self.inner_boundary_indices().into_iter().map(|i| self.lattice.site(i).clone()).collect()
    }

    pub fn inner_boundary_indices(&self) -> Vec<usize> {
        self.inside.iter().copied().filter(|&i| self.lattice.neighbors(i).into_iter().any(|j| !self.mask[j])).collect()
    }

    /// Whether Λ₀ is nearest-neighbour connected. Only used as an optional check.
    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.inside.first() else {
            return true;
        };
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in self.lattice.neighbors(i) {
                if self.mask[j] && seen.insert(j) {
                    queue.push_back(j);
                }
            }
        }
        seen.len() == self.inside.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain(n: usize) -> Arc<Lattice> {
        Arc::new(Lattice::build_box(1, &[n]).unwrap())
    }

    #[test]
    fn box_enumeration() {
        let l = Lattice::build_box(1, &[4]).unwrap();
        assert_eq!(l.sites(), &[vec![0], vec![1], vec![2], vec![3]]);
        let l = Lattice::build_box(2, &[2, 2]).unwrap();
        assert_eq!(l.sites(), &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        for (i, s) in l.sites().iter().enumerate() {
            assert_eq!(l.index_of(s), Some(i));
        }
        let l = Lattice::build_box(3, &[2, 3, 4]).unwrap();
        assert_eq!(l.len(), 24);
    }

    #[test]
    fn box_rejects_bad_input() {
        assert!(Lattice::build_box(0, &[]).is_err());
        assert!(Lattice::build_box(2, &[3]).is_err());
        assert!(Lattice::build_box(1, &[0]).is_err());
    }

    #[test]
    fn distances() {
        assert_eq!(l1_distance(&[0, 0], &[1, 2]).unwrap(), 3);
        assert_eq!(l1_distance(&[5], &[5]).unwrap(), 0);
        assert_eq!(l1_distance(&[1, 1, 1], &[0, 0, 0]).unwrap(), 3);
        assert!(l1_distance(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn neighbor_counts() {
        let l = Lattice::build_box(2, &[3, 3]).unwrap();
        let center = l.index_of(&[1, 1]).unwrap();
        assert_eq!(l.neighbors(center).len(), 4);
        assert_eq!(l.neighbors(0).len(), 2);
        assert_eq!(l.bonds().len(), 12);
    }

    #[test]
    fn boundary_examples() {
        let lat = chain(6);
        let r = Region::from_indices(lat.clone(), &[0, 1, 2]).unwrap();
        assert_eq!(r.inner_boundary(), vec![vec![2]]);

        let all: Vec<usize> = (0..6).collect();
        let r = Region::from_indices(lat, &all).unwrap();
        assert!(r.inner_boundary().is_empty());

        let sq = Arc::new(Lattice::build_box(2, &[3, 3]).unwrap());
        let col = vec![vec![0, 0], vec![1, 0], vec![2, 0]];
        let r = Region::from_sites(sq, &col).unwrap();
        assert_eq!(r.inner_boundary(), col);
    }

    #[test]
    fn sub_box_and_window() {
        let sq = Arc::new(Lattice::build_box(2, &[4, 4]).unwrap());
        let r = Region::sub_box(sq.clone(), &[1, 1], &[2, 2]).unwrap();
        assert_eq!(r.inside_len(), 4);
        assert_eq!(r.inner_boundary().len(), 4);
        assert!(Region::sub_box(sq, &[3, 3], &[2, 2]).is_err());

        let r = Region::centered_interval(chain(10), 4).unwrap();
        assert_eq!(r.inside(), &[3, 4, 5, 6]);
        assert_eq!(r.inner_boundary_indices(), vec![3, 6]);
    }

    #[test]
    fn region_rejects_bad_sites() {
        let lat = chain(3);
        assert!(Region::from_indices(lat.clone(), &[3]).is_err());
        assert!(Region::from_indices(lat.clone(), &[1, 1]).is_err());
        assert!(Region::from_sites(lat, &[vec![0, 0]]).is_err());
    }

    #[test]
    fn connectivity() {
        let lat = chain(6);
        assert!(Region::from_indices(lat.clone(), &[1, 2, 3]).unwrap().is_connected());
        assert!(!Region::from_indices(lat, &[1, 3]).unwrap().is_connected());
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(a in prop::collection::vec(-50i64..50, 3),
                          b in prop::collection::vec(-50i64..50, 3),
                          c in prop::collection::vec(-50i64..50, 3)) {
            let ab = l1_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, l1_distance(&b, &a).unwrap());
            prop_assert!(ab <= l1_distance(&a, &c).unwrap() + l1_distance(&c, &b).unwrap());
            prop_assert_eq!(l1_distance(&a, &a).unwrap(), 0);
        }

        #[test]
        fn boundary_within_region(lx in 1usize..6, ly in 1usize..6, mask in prop::collection::vec(any::<bool>(), 36)) {
            let lat = Arc::new(Lattice::build_box(2, &[lx, ly]).unwrap());
            let idx: Vec<usize> = (0..lat.len()).filter(|&i| mask[i]).collect();
            let r = Region::from_indices(lat.clone(), &idx).unwrap();
            let b = r.inner_boundary_indices();
            prop_assert!(b.len() <= r.inside_len());
            prop_assert!(b.iter().all(|&i| r.contains_index(i)));
            prop_assert_eq!(r.inside_len() + r.outside_len(), lat.len());
        }
    }
}
