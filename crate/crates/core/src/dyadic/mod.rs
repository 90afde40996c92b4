//! Dyadic cube arithmetic, rasterized domains with boundary distance
//! fields, Whitney decompositions and the boundary integral probe.
//!
//! All geometry lives in absolute coordinates: a dyadic cube of level `j`
//! and anchor `k` is the closed cube `prod_i [k_i 2^-j, (k_i + 1) 2^-j]`, and
//! a raster of resolution `J` is made of the level-`J` dyadic cells.

mod aikawa;
mod pyramid;
mod overlap;
mod raster;
mod whitney;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use aikawa::{aikawa_probe, AikawaReport, AikawaTrial};
pub use overlap::max_overlap;
pub use raster::{rasterize, RasterDomain, Shape};
pub(crate) use raster::neighborhood_offsets;
pub(crate) use pyramid::level_grids;
pub use whitney::{
    whitney, DistanceBoundWitness, WhitneyDecomposition, WhitneyReport, STAR_OVERLAP_BOUND_2D,
};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// Dilation factor of a Whitney star, `Q* = (9/8) Q`.
pub const STAR_DILATION: f64 = 9.0 / 8.0;

pub(crate) type Coords = [i64; MAX_DIM];
pub(crate) type Point = [f64; MAX_DIM];

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        Err(Error::UnsupportedDimension(dim))
    } else {
        Ok(())
    }
}

/// `2^e` for any integer exponent, exact in binary floating point.
#[inline]
pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Closed dyadic cube `(j, k)`. Equality is componentwise on level and anchor.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    level: i32,
    dim: u8,
    anchor: Coords,
}

impl DyadicCube {
    pub fn new(level: i32, anchor: &[i64]) -> Result<Self> {
        check_dim(anchor.len())?;
        let mut a = [0; MAX_DIM];
        a[..anchor.len()].copy_from_slice(anchor);
        Ok(Self {
            level,
            dim: anchor.len() as u8,
            anchor: a,
        })
    }

    pub(crate) fn from_coords(level: i32, dim: usize, anchor: Coords) -> Self {
        Self {
            level,
            dim: dim as u8,
            anchor,
        }
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn anchor(&self) -> &[i64] {
        &self.anchor[..self.dim()]
    }

    pub(crate) fn coords(&self) -> Coords {
        self.anchor
    }

    /// Side length `2^-j`.
    pub fn side(&self) -> f64 {
        pow2(-self.level)
    }

    pub fn measure(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn diam(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.side()
    }

    pub fn lower(&self) -> Vec<f64> {
        let s = self.side();
        self.anchor().iter().map(|&k| k as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.anchor().iter().map(|&k| (k as f64 + 0.5) * s).collect()
    }

    /// The `2^n` children at level `j + 1`, in lexicographic anchor order
    /// with axis 0 varying fastest.
    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        (0..1usize << n)
            .map(|bits| {
                let mut a = [0; MAX_DIM];
                for i in 0..n {
                    a[i] = 2 * self.anchor[i] + ((bits >> i) & 1) as i64;
                }
                DyadicCube::from_coords(self.level + 1, n, a)
            })
            .collect()
    }

    pub fn parent(&self) -> DyadicCube {
        let mut a = [0; MAX_DIM];
        for i in 0..self.dim() {
            a[i] = self.anchor[i].div_euclid(2);
        }
        DyadicCube::from_coords(self.level - 1, self.dim(), a)
    }

    /// Ancestor at a coarser `level`. Panics if `level > self.level()`.
    pub fn ancestor(&self, level: i32) -> DyadicCube {
        assert!(level <= self.level);
        let shift = (self.level - level) as u32;
        let mut a = [0; MAX_DIM];
        for i in 0..self.dim() {
            a[i] = self.anchor[i] >> shift;
        }
        DyadicCube::from_coords(level, self.dim(), a)
    }

    /// True when `other` is this cube or one of its descendants.
    pub fn contains_dyadic(&self, other: &DyadicCube) -> bool {
        other.dim == self.dim && other.level >= self.level && other.ancestor(self.level) == *self
    }

    /// Half-open index range `[start, end)` per axis of the level-`resolution`
    /// cells making up this cube. Requires `resolution >= level`.
    pub(crate) fn cell_range(&self, resolution: i32) -> (Coords, Coords) {
        debug_assert!(resolution >= self.level);
        let w = 1i64 << (resolution - self.level);
        let mut lo = [0; MAX_DIM];
        let mut hi = [1; MAX_DIM];
        for i in 0..self.dim() {
            lo[i] = self.anchor[i] * w;
            hi[i] = lo[i] + w;
        }
        (lo, hi)
    }

    pub fn to_cube(&self) -> Cube {
        Cube::new(&self.center(), self.side()).expect("dyadic cube has a valid dimension")
    }

    /// Translate by whole level-`resolution` cells, used for shifted grids.
    pub fn to_cube_shifted(&self, resolution: i32, shift: &[i64]) -> Cube {
        let h = pow2(-resolution);
        let c: Vec<f64> = self
            .center()
            .iter()
            .enumerate()
            .map(|(i, x)| x + shift.get(i).copied().unwrap_or(0) as f64 * h)
            .collect();
        Cube::new(&c, self.side()).expect("dyadic cube has a valid dimension")
    }
}

impl fmt::Debug for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}{:?}", self.level, self.anchor())
    }
}

#[derive(Serialize, Deserialize)]
struct DyadicCubeRepr {
    level: i32,
    anchor: Vec<i64>,
}

impl Serialize for DyadicCube {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DyadicCubeRepr {
            level: self.level,
            anchor: self.anchor().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicCube {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = DyadicCubeRepr::deserialize(d)?;
        DyadicCube::new(r.level, &r.anchor).map_err(serde::de::Error::custom)
    }
}

/// Axis-parallel closed cube given by center and side length.
#[derive(Clone, Copy, PartialEq)]
pub struct Cube {
    dim: u8,
    center: Point,
    side: f64,
}

impl Cube {
    pub fn new(center: &[f64], side: f64) -> Result<Self> {
        check_dim(center.len())?;
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cube side must be positive, got {side}"
            )));
        }
        let mut c = [0.0; MAX_DIM];
        c[..center.len()].copy_from_slice(center);
        Ok(Self {
            dim: center.len() as u8,
            center: c,
            side,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.dim()]
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn measure(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn diam(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.side
    }

    /// `lambda Q`: same center, side `lambda * side`.
    pub fn dilate(&self, lambda: f64) -> Cube {
        Cube {
            side: self.side * lambda,
            ..*self
        }
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.center[axis] - 0.5 * self.side
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.center[axis] + 0.5 * self.side
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lo(i) && x[i] <= self.hi(i))
    }

    /// Lebesgue measure of the intersection.
    pub fn intersection_measure(&self, other: &Cube) -> f64 {
        (0..self.dim())
            .map(|i| (self.hi(i).min(other.hi(i)) - self.lo(i).max(other.lo(i))).max(0.0))
            .product()
    }

    /// Farthest distance from `x` to a point of the cube (attained at a corner).
    pub fn max_distance_from(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| {
                let d = (x[i] - self.lo(i)).abs().max((x[i] - self.hi(i)).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cube(c={:?}, side={})", self.center(), self.side)
    }
}

/// The Whitney star `Q* = (9/8) Q`.
pub fn star(q: &DyadicCube) -> Cube {
    q.to_cube().dilate(STAR_DILATION)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_side_of_eighth_cube() {
        let q = DyadicCube::new(3, &[2, 5]).unwrap();
        let s = star(&q);
        assert_eq!(s.side(), 9.0 / 64.0);
        assert_eq!(s.center(), q.center().as_slice());
    }

    #[test]
    fn star_of_star_and_measure_scaling() {
        let q = DyadicCube::new(0, &[0, 0]).unwrap();
        assert_eq!(star(&q).dilate(STAR_DILATION).side(), 81.0 / 64.0);
        assert_eq!(star(&q).measure() / q.measure(), 81.0 / 64.0);
        let q3 = DyadicCube::new(2, &[1, 1, 1]).unwrap();
        assert!((star(&q3).measure() / q3.measure() - STAR_DILATION.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn dilate_by_one_is_identity() {
        let c = Cube::new(&[0.3, -0.2], 0.7).unwrap();
        assert_eq!(c.dilate(1.0), c);
    }

    #[test]
    fn children_partition_parent() {
        let q = DyadicCube::new(1, &[1, -1]).unwrap();
        let kids = q.children();
        assert_eq!(kids.len(), 4);
        let total: f64 = kids.iter().map(|c| c.measure()).sum();
        assert_eq!(total, q.measure());
        for k in &kids {
            assert_eq!(k.parent(), q);
            assert!(q.contains_dyadic(k));
            assert_eq!(q.to_cube().intersection_measure(&k.to_cube()), k.measure());
        }
        for (i, a) in kids.iter().enumerate() {
            for b in &kids[i + 1..] {
                assert_eq!(a.to_cube().intersection_measure(&b.to_cube()), 0.0);
            }
        }
    }

    #[test]
    fn canonical_equality() {
        let a = DyadicCube::new(4, &[3, 7]).unwrap();
        let b = DyadicCube::new(4, &[3, 7]).unwrap();
        let c = DyadicCube::new(5, &[6, 14]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(c.parent(), a);
    }

    #[test]
    fn negative_anchor_parent_rounds_down() {
        let q = DyadicCube::new(2, &[-1, -3]).unwrap();
        assert_eq!(q.parent().anchor(), &[-1, -2]);
        assert_eq!(q.ancestor(0).anchor(), &[-1, -1]);
    }

    #[test]
    fn serde_round_trip_keeps_dimension() {
        let q = DyadicCube::new(3, &[1, 2, 3]).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"level":3,"anchor":[1,2,3]}"#);
        let back: DyadicCube = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
