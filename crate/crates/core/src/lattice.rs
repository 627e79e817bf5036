//! Finite truncations of `Z^d` and the region algebra on them.
//!
//! Sites are indexed row-major with axis 0 fastest. The metric is the
//! max-coordinate (ℓ∞) distance, with coordinate differences taken modulo the
//! extent on periodic axes. Regions are explicit site sets; every coarse
//! construction (thickening, boundary strips, transversality) is computed by
//! enumeration.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Axis {
    pub extent: usize,
    pub boundary: Boundary,
}

impl Axis {
    pub fn open(extent: usize) -> Self {
        Axis { extent, boundary: Boundary::Open }
    }

    pub fn periodic(extent: usize) -> Self {
        Axis { extent, boundary: Boundary::Periodic }
    }
}

/// A box `[0, L_1) x ... x [0, L_d)` with per-axis boundary conditions and
/// `orbitals` internal degrees of freedom per site.
#[derive(Clone, PartialEq, Eq)]
pub struct Lattice {
    axes: Vec<Axis>,
    orbitals: usize,
    strides: Vec<usize>,
    sites: usize,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axes: Vec<String> = self
            .axes
            .iter()
            .map(|a| match a.boundary {
                Boundary::Periodic => format!("{}p", a.extent),
                Boundary::Open => format!("{}o", a.extent),
            })
            .collect();
        write!(f, "Lattice[{} x{}]", axes.join("x"), self.orbitals)
    }
}

impl Lattice {
    pub fn new(axes: Vec<Axis>, orbitals: usize) -> Result<Arc<Self>> {
        if axes.is_empty() {
            return Err(Error::UnsupportedDimension("lattice needs at least one axis".into()));
        }
        if let Some(a) = axes.iter().position(|a| a.extent == 0) {
            return Err(Error::UnsupportedGeometry(format!("axis {a} has zero extent")));
        }
        if orbitals == 0 {
            return Err(Error::UnsupportedDimension("orbital count must be positive".into()));
        }
        let mut strides = Vec::with_capacity(axes.len());
        let mut sites = 1usize;
        for a in &axes {
            strides.push(sites);
            sites = sites
                .checked_mul(a.extent)
                .ok_or_else(|| Error::UnsupportedGeometry("site count overflows".into()))?;
        }
        Ok(Arc::new(Lattice { axes, orbitals, strides, sites }))
    }

    /// Fully periodic lattice (a discrete torus).
    pub fn torus(extents: &[usize], orbitals: usize) -> Result<Arc<Self>> {
        Self::new(extents.iter().map(|&e| Axis::periodic(e)).collect(), orbitals)
    }

    /// Fully open lattice (a box with hard walls).
    pub fn open_box(extents: &[usize], orbitals: usize) -> Result<Arc<Self>> {
        Self::new(extents.iter().map(|&e| Axis::open(e)).collect(), orbitals)
    }

    /// Same extents and orbitals, every axis set to `boundary`.
    pub fn with_boundary(&self, boundary: Boundary) -> Arc<Self> {
        let axes = self.axes.iter().map(|a| Axis { extent: a.extent, boundary }).collect();
        Self::new(axes, self.orbitals).expect("extents already validated")
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.axes[axis].extent
    }

    pub fn boundary(&self, axis: usize) -> Boundary {
        self.axes[axis].boundary
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Dimension of `l^2(sites) ⊗ C^orbitals`.
    pub fn hilbert_dim(&self) -> usize {
        self.sites * self.orbitals
    }

    /// Flattened Hilbert-space index of `(site, orbital)`.
    #[inline]
    pub fn flat_index(&self, site: usize, orbital: usize) -> usize {
        site * self.orbitals + orbital
    }

    #[inline]
    pub fn site_of(&self, flat: usize) -> usize {
        flat / self.orbitals
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site < self.sites {
            Ok(())
        } else {
            Err(Error::InvalidSite { site, sites: self.sites })
        }
    }

    /// Site index of a coordinate tuple. Periodic axes wrap; open axes reject
    /// out-of-range coordinates.
    pub fn site_index(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim() {
            return None;
        }
        let mut idx = 0;
        for (a, (&c, axis)) in coords.iter().zip(&self.axes).enumerate() {
            let l = axis.extent as i64;
            let c = match axis.boundary {
                Boundary::Periodic => c.rem_euclid(l),
                Boundary::Open if (0..l).contains(&c) => c,
                Boundary::Open => return None,
            };
            idx += c as usize * self.strides[a];
        }
        Some(idx)
    }

    #[inline]
    pub fn coord(&self, site: usize, axis: usize) -> i64 {
        ((site / self.strides[axis]) % self.axes[axis].extent) as i64
    }

    pub fn coords(&self, site: usize) -> Vec<i64> {
        (0..self.dim()).map(|a| self.coord(site, a)).collect()
    }

    /// Signed displacement `to - from` along `axis`, reduced to the shortest
    /// representative on periodic axes.
    #[inline]
    pub fn axis_displacement(&self, from: usize, to: usize, axis: usize) -> i64 {
        let d = self.coord(to, axis) - self.coord(from, axis);
        match self.axes[axis].boundary {
            Boundary::Open => d,
            Boundary::Periodic => {
                let l = self.axes[axis].extent as i64;
                let d = d.rem_euclid(l);
                if 2 * d > l {
                    d - l
                } else {
                    d
                }
            }
        }
    }

    /// ℓ∞ distance without bounds checks; callers guarantee valid sites.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> usize {
        (0..self.dim())
            .map(|a| self.axis_displacement(i, j, a).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Checked ℓ∞ (torus-wrapped) distance between two sites.
    pub fn site_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_site(i)?;
        self.check_site(j)?;
        Ok(self.distance(i, j) as f64)
    }

    /// Neighbor reached by one step of `step` (±1) along `axis`, if any.
    #[inline]
    pub fn step(&self, site: usize, axis: usize, step: i64) -> Option<usize> {
        let l = self.axes[axis].extent as i64;
        let c = self.coord(site, axis);
        let n = c + step;
        let n = match self.axes[axis].boundary {
            Boundary::Periodic => n.rem_euclid(l),
            Boundary::Open if (0..l).contains(&n) => n,
            Boundary::Open => return None,
        };
        Some((site as i64 + (n - c) * self.strides[axis] as i64) as usize)
    }

    /// All sites at ℓ∞ distance exactly one (king moves), deduplicated.
    fn king_neighbors(&self, site: usize, out: &mut Vec<usize>) {
        out.clear();
        out.push(site);
        for axis in 0..self.dim() {
            let len = out.len();
            for k in 0..len {
                for s in [-1, 1] {
                    if let Some(n) = self.step(out[k], axis, s) {
                        out.push(n);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out.retain(|&n| n != site);
    }

    /// Distance from every site to the nearest site of `sources`
    /// (`usize::MAX` when `sources` is empty).
    pub(crate) fn distance_field(&self, sources: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.sites];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        let mut nbrs = Vec::new();
        while let Some(s) = queue.pop_front() {
            self.king_neighbors(s, &mut nbrs);
            for &n in &nbrs {
                if dist[n] == usize::MAX {
                    dist[n] = dist[s] + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Coordinate `>= cut`.
    #[serde(rename = "+")]
    Upper,
    /// Coordinate `< cut`.
    #[serde(rename = "-")]
    Lower,
}

/// Descriptor of a standard half-space `{x_axis >= cut}` or `{x_axis < cut}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub axis: usize,
    pub cut: i64,
    pub side: Side,
}

impl HalfSpace {
    pub fn new(axis: usize, cut: i64, side: Side) -> Self {
        HalfSpace { axis, cut, side }
    }

    fn check(&self, lattice: &Lattice) -> Result<()> {
        if self.axis >= lattice.dim() {
            return Err(Error::UnsupportedGeometry(format!(
                "half-space axis {} out of range for dimension {}",
                self.axis,
                lattice.dim()
            )));
        }
        if lattice.boundary(self.axis) == Boundary::Periodic {
            return Err(Error::UnsupportedGeometry(format!(
                "half-space along periodic axis {}",
                self.axis
            )));
        }
        Ok(())
    }

    pub fn region(&self, lattice: &Arc<Lattice>) -> Result<Region> {
        self.perturbed(lattice, &[], 0)
    }

    /// Number of boundary columns, i.e. the product of the transverse extents.
    pub fn columns(&self, lattice: &Lattice) -> usize {
        (0..lattice.dim()).filter(|&a| a != self.axis).map(|a| lattice.extent(a)).product()
    }

    /// Transverse (column) index of a site: its coordinates on the other axes,
    /// flattened in axis order.
    fn column_of(&self, lattice: &Lattice, site: usize) -> usize {
        let mut col = 0;
        let mut stride = 1;
        for a in (0..lattice.dim()).filter(|&a| a != self.axis) {
            col += lattice.coord(site, a) as usize * stride;
            stride *= lattice.extent(a);
        }
        col
    }

    /// The half-space with its cut moved by `profile[column]` in each boundary
    /// column. An empty profile means no displacement. Every displacement must
    /// satisfy `|profile| <= amplitude`.
    pub fn perturbed(&self, lattice: &Arc<Lattice>, profile: &[i64], amplitude: i64) -> Result<Region> {
        self.check(lattice)?;
        if !profile.is_empty() && profile.len() != self.columns(lattice) {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} entries, half-space has {} boundary columns",
                profile.len(),
                self.columns(lattice)
            )));
        }
        if let Some((column, &value)) = profile.iter().enumerate().find(|(_, v)| v.abs() > amplitude) {
            return Err(Error::AmplitudeViolation { column, value, bound: amplitude });
        }
        let mask = (0..lattice.sites())
            .map(|s| {
                let shift = if profile.is_empty() { 0 } else { profile[self.column_of(lattice, s)] };
                let c = lattice.coord(s, self.axis);
                match self.side {
                    Side::Upper => c >= self.cut + shift,
                    Side::Lower => c < self.cut + shift,
                }
            })
            .collect();
        Ok(Region::from_mask(lattice.clone(), mask))
    }
}

/// An explicit set of sites of a lattice.
#[derive(Clone, PartialEq, Eq)]
pub struct Region {
    lattice: Arc<Lattice>,
    mask: Vec<bool>,
    count: usize,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region({} of {} sites)", self.count, self.lattice.sites())
    }
}

impl Region {
    fn from_mask(lattice: Arc<Lattice>, mask: Vec<bool>) -> Self {
        let count = mask.iter().filter(|&&b| b).count();
        Region { lattice, mask, count }
    }

    pub fn empty(lattice: &Arc<Lattice>) -> Self {
        Self::from_mask(lattice.clone(), vec![false; lattice.sites()])
    }

    pub fn full(lattice: &Arc<Lattice>) -> Self {
        Self::from_mask(lattice.clone(), vec![true; lattice.sites()])
    }

    pub fn from_sites(lattice: &Arc<Lattice>, sites: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; lattice.sites()];
        for s in sites {
            lattice.check_site(s)?;
            mask[s] = true;
        }
        Ok(Self::from_mask(lattice.clone(), mask))
    }

    pub fn from_predicate(lattice: &Arc<Lattice>, pred: impl Fn(&[i64]) -> bool) -> Self {
        let mask = (0..lattice.sites()).map(|s| pred(&lattice.coords(s))).collect();
        Self::from_mask(lattice.clone(), mask)
    }

    pub fn half_space(lattice: &Arc<Lattice>, axis: usize, cut: i64, side: Side) -> Result<Self> {
        HalfSpace::new(axis, cut, side).region(lattice)
    }

    /// Closed ℓ∞ ball of radius `r` around `center`.
    pub fn ball(lattice: &Arc<Lattice>, center: usize, r: f64) -> Result<Self> {
        lattice.check_site(center)?;
        Ok(Self::from_sites(lattice, [center])?.thicken(r))
    }

    /// Sites on the outermost layer of some open axis: the coarse boundary of
    /// the box seen as a subset of the infinite lattice.
    pub fn open_boundary_layer(lattice: &Arc<Lattice>) -> Self {
        let mask = (0..lattice.sites())
            .map(|s| {
                (0..lattice.dim()).any(|a| {
                    lattice.boundary(a) == Boundary::Open && {
                        let c = lattice.coord(s, a);
                        c == 0 || c == lattice.extent(a) as i64 - 1
                    }
                })
            })
            .collect();
        Self::from_mask(lattice.clone(), mask)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    #[inline]
    pub fn contains(&self, site: usize) -> bool {
        self.mask[site]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(s, &b)| b.then_some(s))
    }

    fn zip_with(&self, other: &Region, op: impl Fn(bool, bool) -> bool) -> Region {
        assert_eq!(self.lattice, other.lattice, "regions on different lattices");
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| op(a, b)).collect();
        Self::from_mask(self.lattice.clone(), mask)
    }

    pub fn union(&self, other: &Region) -> Region {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Region) -> Region {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &Region) -> Region {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn complement(&self) -> Region {
        Self::from_mask(self.lattice.clone(), self.mask.iter().map(|b| !b).collect())
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// Distance from each site to this region (`usize::MAX` if empty).
    pub fn distance_field(&self) -> Vec<usize> {
        self.lattice.distance_field(self.sites())
    }

    /// `B_r(R)`: all sites within distance `r` of the region.
    pub fn thicken(&self, r: f64) -> Region {
        if r < 1.0 || self.is_empty() {
            return self.clone();
        }
        let radius = r.floor() as usize;
        let dist = self.distance_field();
        Self::from_mask(self.lattice.clone(), dist.iter().map(|&d| d <= radius).collect())
    }

    /// `thicken(Y, r) ∩ thicken(X \ Y, r)`, the finite stand-in for the coarse
    /// boundary of `Y`.
    pub fn coarse_boundary_strip(&self, r: f64) -> Region {
        self.thicken(r).intersection(&self.complement().thicken(r))
    }

    /// Largest pairwise distance, `None` for the empty region.
    pub fn diameter(&self) -> Option<usize> {
        let sites: Vec<usize> = self.sites().collect();
        if sites.is_empty() {
            return None;
        }
        let mut best = 0;
        for (k, &i) in sites.iter().enumerate() {
            for &j in &sites[k + 1..] {
                best = best.max(self.lattice.distance(i, j));
            }
        }
        Some(best)
    }

    /// Connected components under ℓ∞ adjacency, ordered by smallest site.
    pub fn components(&self) -> Vec<Region> {
        let mut seen = vec![false; self.mask.len()];
        let mut out = Vec::new();
        let mut nbrs = Vec::new();
        for start in self.sites() {
            if seen[start] {
                continue;
            }
            let mut mask = vec![false; self.mask.len()];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(s) = stack.pop() {
                mask[s] = true;
                self.lattice.king_neighbors(s, &mut nbrs);
                for &n in &nbrs {
                    if self.mask[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
            out.push(Self::from_mask(self.lattice.clone(), mask));
        }
        out
    }
}

/// Intersection of two coarse boundary strips at a common scale.
#[derive(Clone, Debug)]
pub struct StripIntersection {
    pub sites: Region,
    /// `None` when the strips do not meet.
    pub diameter: Option<usize>,
}

impl StripIntersection {
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Diameter as a real number; an empty intersection reports 0.
    pub fn diameter_value(&self) -> f64 {
        self.diameter.unwrap_or(0) as f64
    }
}

/// Diameter of `strip(Y, r) ∩ strip(W, r)`. A small finite value certifies
/// that the partitions `Y` and `W` are transversal at scale `r`.
pub fn transversality_diameter(y: &Region, w: &Region, r: f64) -> StripIntersection {
    let sites = y.coarse_boundary_strip(r).intersection(&w.coarse_boundary_strip(r));
    let diameter = sites.diameter();
    StripIntersection { sites, diameter }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sq(l: usize, b: Boundary) -> Arc<Lattice> {
        Lattice::new(vec![Axis { extent: l, boundary: b }; 2], 1).unwrap()
    }

    #[test]
    fn indexing_is_bijective() {
        let lat = Lattice::new(vec![Axis::open(3), Axis::periodic(4), Axis::open(2)], 2).unwrap();
        assert_eq!(lat.sites(), 24);
        assert_eq!(lat.hilbert_dim(), 48);
        for s in 0..lat.sites() {
            assert_eq!(lat.site_index(&lat.coords(s)), Some(s));
        }
        assert_eq!(lat.site_index(&[0, -1, 0]), lat.site_index(&[0, 3, 0]));
        assert_eq!(lat.site_index(&[-1, 0, 0]), None);
    }

    #[test]
    fn distance_examples() {
        let lat = sq(8, Boundary::Open);
        let i = lat.site_index(&[0, 0]).unwrap();
        let j = lat.site_index(&[3, 4]).unwrap();
        assert_eq!(lat.site_distance(i, j).unwrap(), 4.0);
        assert_eq!(lat.site_distance(j, j).unwrap(), 0.0);

        let ring = Lattice::torus(&[10], 1).unwrap();
        assert_eq!(ring.site_distance(0, 9).unwrap(), 1.0);

        assert!(matches!(lat.site_distance(0, 64), Err(Error::InvalidSite { site: 64, .. })));
    }

    #[test]
    fn half_spaces() {
        let lat = sq(8, Boundary::Open);
        let up = Region::half_space(&lat, 0, 4, Side::Upper).unwrap();
        let down = Region::half_space(&lat, 0, 4, Side::Lower).unwrap();
        assert_eq!(up.len(), 32);
        assert_eq!(up.complement(), down);
        assert_eq!(Region::half_space(&lat, 0, 0, Side::Upper).unwrap(), Region::full(&lat));

        let torus = sq(8, Boundary::Periodic);
        assert!(matches!(
            Region::half_space(&torus, 0, 4, Side::Upper),
            Err(Error::UnsupportedGeometry(_))
        ));
    }

    #[test]
    fn perturbed_half_space_stays_near_the_cut() {
        let lat = sq(16, Boundary::Open);
        let hs = HalfSpace::new(0, 8, Side::Upper);
        let base = hs.region(&lat).unwrap();
        assert_eq!(hs.perturbed(&lat, &[0; 16], 0).unwrap(), base);

        let profile: Vec<i64> = (0..16).map(|y| if y % 2 == 0 { 3 } else { -3 }).collect();
        let wiggled = hs.perturbed(&lat, &profile, 3).unwrap();
        let line = Region::from_predicate(&lat, |c| c[0] == 8);
        assert!(base.symmetric_difference(&wiggled).is_subset(&line.thicken(3.0)));

        assert!(matches!(
            hs.perturbed(&lat, &profile, 2),
            Err(Error::AmplitudeViolation { bound: 2, .. })
        ));

        // transversal to an orthogonal half-space
        let other = Region::half_space(&lat, 1, 8, Side::Upper).unwrap();
        let t = transversality_diameter(&other, &wiggled, 1.0);
        assert!(!t.is_empty());
        assert!(t.diameter.unwrap() <= 8);
    }

    #[test]
    fn thicken_examples() {
        let lat = sq(12, Boundary::Open);
        let c = lat.site_index(&[5, 5]).unwrap();
        let single = Region::from_sites(&lat, [c]).unwrap();
        assert_eq!(single.thicken(0.0), single);
        assert_eq!(single.thicken(1.0).len(), 9);
        assert_eq!(single.thicken(1.5).len(), 9);

        // thicken(thicken(R,1),1) = thicken(R,2), checked against direct enumeration
        let r = Region::from_sites(&lat, [c, lat.site_index(&[6, 8]).unwrap()]).unwrap();
        let twice = r.thicken(1.0).thicken(1.0);
        let brute = Region::from_predicate(&lat, |x| {
            let s = lat.site_index(x).unwrap();
            r.sites().any(|t| lat.distance(s, t) <= 2)
        });
        assert_eq!(twice, brute);
        assert_eq!(r.thicken(2.0), brute);
    }

    #[test]
    fn strip_of_half_space() {
        let lat = sq(8, Boundary::Open);
        let y = Region::half_space(&lat, 0, 4, Side::Upper).unwrap();
        let strip = y.coarse_boundary_strip(1.0);
        let cols = Region::from_predicate(&lat, |c| c[0] == 3 || c[0] == 4);
        assert_eq!(strip, cols);
        assert_eq!(strip, y.complement().coarse_boundary_strip(1.0));
        assert!(Region::full(&lat).coarse_boundary_strip(3.0).is_empty());
    }

    #[test]
    fn transversality_examples() {
        let lat = sq(32, Boundary::Open);
        let y = Region::half_space(&lat, 1, 16, Side::Upper).unwrap();
        let w = Region::half_space(&lat, 0, 16, Side::Upper).unwrap();
        let t = transversality_diameter(&y, &w, 1.0);
        assert_eq!(t.sites.len(), 4);
        assert!(t.diameter.unwrap() <= 4);

        let same = transversality_diameter(&y, &y, 1.0);
        assert_eq!(same.diameter, y.coarse_boundary_strip(1.0).diameter());

        let a = Region::from_predicate(&lat, |c| c[0] == 2);
        let b = Region::from_predicate(&lat, |c| c[0] == 20);
        let t = transversality_diameter(&a, &b, 1.0);
        assert!(t.is_empty());
        assert_eq!(t.diameter_value(), 0.0);
    }

    #[test]
    fn components_split_disjoint_blobs() {
        let lat = sq(10, Boundary::Open);
        let r = Region::from_predicate(&lat, |c| (c[0] < 2 && c[1] < 2) || (c[0] > 6 && c[1] > 6));
        let comps = r.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].len() + comps[1].len(), r.len());
    }

    /// Strip intersection agrees with an enumeration straight from the
    /// definition `{x : d(x,Y) <= r, d(x,X\Y) <= r}`.
    #[test]
    fn strip_intersection_matches_enumeration() {
        for l in [6usize, 11, 16] {
            for b in [Boundary::Open, Boundary::Periodic] {
                let lat = sq(l, b);
                let y = Region::from_predicate(&lat, |c| c[0] + 2 * c[1] >= l as i64);
                let w = Region::from_predicate(&lat, |c| (c[0] - c[1]).abs() <= 2);
                for r in [1.0, 2.0] {
                    let near = |region: &Region, s: usize| region.sites().any(|t| lat.distance(s, t) as f64 <= r);
                    let brute = Region::from_predicate(&lat, |c| {
                        let s = lat.site_index(c).unwrap();
                        near(&y, s) && near(&y.complement(), s) && near(&w, s) && near(&w.complement(), s)
                    });
                    assert_eq!(transversality_diameter(&y, &w, r).sites, brute);
                }
            }
        }
    }

    fn region_strategy(lat: Arc<Lattice>) -> impl Strategy<Value = Region> {
        proptest::collection::vec(any::<bool>(), lat.sites())
            .prop_map(move |mask| Region::from_mask(lat.clone(), mask))
    }

    proptest! {
        #[test]
        fn torus_metric_triangle(i in 0usize..80, j in 0usize..80, k in 0usize..80) {
            let lat = Lattice::new(vec![Axis::periodic(8), Axis::open(10)], 1).unwrap();
            prop_assert!(lat.distance(i, k) <= lat.distance(i, j) + lat.distance(j, k));
            prop_assert_eq!(lat.distance(i, j), lat.distance(j, i));
        }

        #[test]
        fn region_laws(r in region_strategy(sq(7, Boundary::Periodic)),
                       s in region_strategy(sq(7, Boundary::Periodic)),
                       t in 0.0f64..3.0) {
            prop_assert_eq!(r.complement().complement(), r.clone());
            prop_assert_eq!(r.union(&r.complement()).len(), 49);
            prop_assert!(r.intersection(&r.complement()).is_empty());
            prop_assert!(r.is_subset(&r.thicken(t)));
            prop_assert!(r.thicken(t).is_subset(&r.thicken(t + 1.0)));
            prop_assert_eq!(r.union(&s).thicken(t), r.thicken(t).union(&s.thicken(t)));
        }
    }
}
