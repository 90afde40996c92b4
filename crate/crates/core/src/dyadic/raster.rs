use std::collections::VecDeque;

use super::{check_dim, pow2, Coords, DyadicCube, Point, MAX_DIM};
use crate::error::{Error, Result};

/// A membership predicate with a bounding box.
///
/// `bounds` must return a box that strictly contains the closure of the
/// set; cells of the box whose centers fail the predicate form the
/// complement seen by the distance field.
pub trait Shape {
    fn dim(&self) -> usize;
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn contains(&self, x: &[f64]) -> bool;
}

/// A proper open set approximated by level-`J` dyadic cells.
///
/// The grid is the bounding box of the shape plus one layer of complement
/// cells; everything outside the grid is complement as well. `distance`
/// holds the exact Euclidean distance from each occupied cell center to the
/// union of complement cells, which is `dist(c, dG)` for the rasterized set.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterDomain {
    dim: usize,
    resolution: i32,
    h: f64,
    lo: Coords,
    shape: [usize; MAX_DIM],
    strides: [usize; MAX_DIM],
    occupied: Vec<bool>,
    distance: Vec<f64>,
    occupied_cells: Vec<usize>,
    boundary_complement: Vec<usize>,
    components: usize,
    diameter: f64,
}

/// Rasterize `shape` at resolution `J`: a level-`J` cell is occupied iff its
/// center satisfies the predicate.
pub fn rasterize(shape: &dyn Shape, resolution: i32) -> Result<RasterDomain> {
    let dim = shape.dim();
    check_dim(dim)?;
    if resolution < 1 {
        return Err(Error::InvalidResolution(resolution));
    }
    let (blo, bhi) = shape.bounds();
    if blo.len() != dim || bhi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: blo.len().min(bhi.len()),
        });
    }
    let h = pow2(-resolution);
    let mut lo = [0i64; MAX_DIM];
    let mut extent = [1usize; MAX_DIM];
    for i in 0..dim {
        lo[i] = (blo[i] / h).floor() as i64;
        let hi = (bhi[i] / h).ceil() as i64;
        extent[i] = (hi - lo[i]).max(1) as usize;
    }
    let total: usize = extent.iter().product();
    let mut occupied = vec![false; total];
    let mut count = 0usize;
    let mut x = vec![0.0; dim];
    for (idx, occ) in occupied.iter_mut().enumerate() {
        let mut rem = idx;
        for i in 0..dim {
            let c = rem % extent[i];
            rem /= extent[i];
            x[i] = (lo[i] + c as i64) as f64 * h + 0.5 * h;
        }
        if shape.contains(&x) {
            *occ = true;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyDomain);
    }
    if count == total {
        return Err(Error::NotProperSubset);
    }
    RasterDomain::from_occupancy(dim, resolution, &lo[..dim], &extent[..dim], &occupied)
}

impl RasterDomain {
    /// Build a domain from an explicit occupancy grid whose first cell has
    /// absolute index `lo`. A layer of complement cells is added around it.
    pub fn from_occupancy(
        dim: usize,
        resolution: i32,
        lo: &[i64],
        extent: &[usize],
        occupancy: &[bool],
    ) -> Result<Self> {
        check_dim(dim)?;
        if resolution < 1 {
            return Err(Error::InvalidResolution(resolution));
        }
        if lo.len() != dim || extent.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: lo.len().min(extent.len()),
            });
        }
        if extent.iter().product::<usize>() != occupancy.len() {
            return Err(Error::InvalidParameter(
                "occupancy length does not match extent".into(),
            ));
        }
        if !occupancy.iter().any(|&o| o) {
            return Err(Error::EmptyDomain);
        }
        let mut glo = [0i64; MAX_DIM];
        let mut shape = [1usize; MAX_DIM];
        for i in 0..dim {
            glo[i] = lo[i] - 1;
            shape[i] = extent[i] + 2;
        }
        let mut strides = [0usize; MAX_DIM];
        let mut s = 1;
        for i in 0..MAX_DIM {
            strides[i] = s;
            s *= shape[i];
        }
        let total = s;
        let mut occupied = vec![false; total];
        for (src, &occ) in occupancy.iter().enumerate() {
            if occ {
                let mut rem = src;
                let mut dst = 0;
                for i in 0..dim {
                    let c = rem % extent[i];
                    rem /= extent[i];
                    dst += (c + 1) * strides[i];
                }
                occupied[dst] = true;
            }
        }
        let h = pow2(-resolution);
        let mut dom = RasterDomain {
            dim,
            resolution,
            h,
            lo: glo,
            shape,
            strides,
            occupied,
            distance: Vec::new(),
            occupied_cells: Vec::new(),
            boundary_complement: Vec::new(),
            components: 0,
            diameter: 0.0,
        };
        dom.occupied_cells = (0..total).filter(|&i| dom.occupied[i]).collect();
        dom.distance = distance_transform(dim, &shape, &strides, &dom.occupied)
            .into_iter()
            .map(|d2| d2.sqrt() * h)
            .collect();
        for (d, &o) in dom.distance.iter_mut().zip(&dom.occupied) {
            if !o {
                *d = 0.0;
            }
        }
        dom.enforce_lipschitz();
        dom.boundary_complement = dom.find_boundary_complement();
        dom.components = dom.count_components();
        dom.diameter = dom.compute_diameter();
        Ok(dom)
    }

    /// The interior of a single dyadic cube, rasterized at `resolution`.
    pub fn from_dyadic_cube(q: &DyadicCube, resolution: i32) -> Result<Self> {
        if resolution < q.level() {
            return Err(Error::InvalidParameter(format!(
                "cube level {} is finer than resolution {resolution}",
                q.level()
            )));
        }
        let (lo, hi) = q.cell_range(resolution);
        let n = q.dim();
        let extent: Vec<usize> = (0..n).map(|i| (hi[i] - lo[i]) as usize).collect();
        let total = extent.iter().product();
        Self::from_occupancy(n, resolution, &lo[..n], &extent, &vec![true; total])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The raster level `J`.
    pub fn resolution(&self) -> i32 {
        self.resolution
    }

    pub fn cell_side(&self) -> f64 {
        self.h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Number of grid cells, occupied or not.
    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied_cells.is_empty()
    }

    pub fn grid_origin(&self) -> &[i64] {
        &self.lo[..self.dim]
    }

    pub fn grid_extent(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub(crate) fn origin_coords(&self) -> Coords {
        self.lo
    }

    pub(crate) fn extent_array(&self) -> [usize; MAX_DIM] {
        self.shape
    }

    pub fn occupied_cells(&self) -> &[usize] {
        &self.occupied_cells
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied_cells.len()
    }

    pub fn measure(&self) -> f64 {
        self.occupied_count() as f64 * self.cell_volume()
    }

    pub fn is_occupied(&self, idx: usize) -> bool {
        self.occupied[idx]
    }

    pub(crate) fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    /// `dist(c, dG)` at the center of cell `idx` (zero on complement cells).
    pub fn distance(&self, idx: usize) -> f64 {
        self.distance[idx]
    }

    pub fn distances(&self) -> &[f64] {
        &self.distance
    }

    /// Replace the distance field on occupied cells by a constant. Only
    /// meant for probing the integrand of [`super::aikawa_probe`]; the
    /// distance invariants no longer hold afterwards.
    pub fn set_uniform_distance(&mut self, value: f64) {
        for &i in &self.occupied_cells {
            self.distance[i] = value;
        }
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    /// Number of face-connected components of the occupied cells.
    pub fn components(&self) -> usize {
        self.components
    }

    /// Diameter of the union of occupied cells.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Complement cells sharing at least a corner with an occupied cell.
    pub fn boundary_complement_cells(&self) -> &[usize] {
        &self.boundary_complement
    }

    /// Absolute level-`J` index of a grid cell.
    pub(crate) fn coords(&self, idx: usize) -> Coords {
        let mut c = [0i64; MAX_DIM];
        let mut rem = idx;
        for i in 0..self.dim {
            c[i] = self.lo[i] + (rem % self.shape[i]) as i64;
            rem /= self.shape[i];
        }
        c
    }

    pub fn cell_coords(&self, idx: usize) -> Vec<i64> {
        self.coords(idx)[..self.dim].to_vec()
    }

    pub(crate) fn index(&self, abs: &Coords) -> Option<usize> {
        let mut idx = 0;
        for i in 0..self.dim {
            let r = abs[i] - self.lo[i];
            if r < 0 || r >= self.shape[i] as i64 {
                return None;
            }
            idx += r as usize * self.strides[i];
        }
        Some(idx)
    }

    pub(crate) fn occupied_abs(&self, abs: &Coords) -> bool {
        self.index(abs).is_some_and(|i| self.occupied[i])
    }

    pub(crate) fn center_point(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut p = [0.0; MAX_DIM];
        for i in 0..self.dim {
            p[i] = (c[i] as f64 + 0.5) * self.h;
        }
        p
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        self.center_point(idx)[..self.dim].to_vec()
    }

    /// The grid cell containing `x`, if `x` lies in the grid.
    pub fn cell_of_point(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let mut c = [0i64; MAX_DIM];
        for i in 0..self.dim {
            c[i] = (x[i] / self.h).floor() as i64;
        }
        self.index(&c)
    }

    /// Exact Euclidean distance from an arbitrary point of `G` to the
    /// complement of the rasterized set.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for &b in &self.boundary_complement {
            let c = self.coords(b);
            let mut d2 = 0.0;
            for i in 0..self.dim {
                let lo = c[i] as f64 * self.h;
                let gap = (lo - x[i]).max(x[i] - lo - self.h).max(0.0);
                d2 += gap * gap;
            }
            best = best.min(d2);
        }
        best.sqrt()
    }

    /// Nearest complement cell center to `x`; ties go to the smaller grid index.
    pub fn nearest_complement_center(&self, x: &[f64]) -> (usize, Vec<f64>) {
        let mut best = (f64::INFINITY, usize::MAX);
        for &b in &self.boundary_complement {
            let c = self.center_point(b);
            let d2: f64 = (0..self.dim).map(|i| (c[i] - x[i]).powi(2)).sum();
            if d2 < best.0 || (d2 == best.0 && b < best.1) {
                best = (d2, b);
            }
        }
        (best.1, self.cell_center(best.1))
    }

    /// Face neighbors (2n-adjacency) of a grid cell that lie in the grid.
    pub(crate) fn face_neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.coords(idx);
        (0..self.dim).flat_map(move |axis| {
            [-1i64, 1].into_iter().filter_map(move |d| {
                let mut n = c;
                n[axis] += d;
                self.index(&n)
            })
        })
    }

    fn enforce_lipschitz(&mut self) {
        let h = self.h;
        for axis in 0..self.dim {
            let stride = self.strides[axis];
            let len = self.shape[axis];
            for start in 0..self.len() {
                if !(start / stride).is_multiple_of(len) {
                    continue;
                }
                for x in 1..len {
                    let (a, b) = (start + (x - 1) * stride, start + x * stride);
                    if self.occupied[a] && self.occupied[b] {
                        self.distance[b] = self.distance[b].min(self.distance[a] + h);
                    }
                }
                for x in (0..len - 1).rev() {
                    let (a, b) = (start + (x + 1) * stride, start + x * stride);
                    if self.occupied[a] && self.occupied[b] {
                        self.distance[b] = self.distance[b].min(self.distance[a] + h);
                    }
                }
            }
        }
    }

    fn find_boundary_complement(&self) -> Vec<usize> {
        let offsets = neighborhood_offsets(self.dim);
        (0..self.len())
            .filter(|&i| {
                !self.occupied[i] && {
                    let c = self.coords(i);
                    offsets.iter().any(|o| {
                        let mut n = c;
                        for k in 0..self.dim {
                            n[k] += o[k];
                        }
                        self.occupied_abs(&n)
                    })
                }
            })
            .collect()
    }

    fn count_components(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut comps = 0;
        let mut queue = VecDeque::new();
        for &s in &self.occupied_cells {
            if seen[s] {
                continue;
            }
            comps += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(c) = queue.pop_front() {
                for n in self.face_neighbors(c) {
                    if self.occupied[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        comps
    }

    fn compute_diameter(&self) -> f64 {
        // Convex hull vertices of a union of cells are corners of the first or
        // last occupied cell of some grid line along axis 0.
        let n = self.dim;
        let len0 = self.shape[0];
        let mut pts: Vec<Point> = Vec::new();
        for start in (0..self.len()).step_by(len0) {
            let first = (0..len0).find(|&x| self.occupied[start + x]);
            let last = (0..len0).rev().find(|&x| self.occupied[start + x]);
            let (Some(first), Some(last)) = (first, last) else {
                continue;
            };
            for (cell, side) in [(start + first, 0i64), (start + last, 1)] {
                let c = self.coords(cell);
                for bits in 0..1usize << (n - 1) {
                    let mut p = [0.0; MAX_DIM];
                    p[0] = (c[0] + side) as f64 * self.h;
                    for k in 1..n {
                        p[k] = (c[k] + ((bits >> (k - 1)) & 1) as i64) as f64 * self.h;
                    }
                    pts.push(p);
                }
            }
        }
        let mut best = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let d2: f64 = (0..n).map(|k| (a[k] - b[k]).powi(2)).sum();
                best = best.max(d2);
            }
        }
        best.sqrt()
    }
}

/// All offsets in `{-1, 0, 1}^n` except the origin.
pub(crate) fn neighborhood_offsets(dim: usize) -> Vec<Coords> {
    let mut out = Vec::new();
    for code in 0..3usize.pow(dim as u32) {
        let mut o = [0i64; MAX_DIM];
        let mut rem = code;
        for k in 0..dim {
            o[k] = (rem % 3) as i64 - 1;
            rem /= 3;
        }
        if o.iter().any(|&v| v != 0) {
            out.push(o);
        }
    }
    out
}

/// Squared distance, in cell units, from a cell center to a closed cell `d`
/// cells away along one axis.
#[inline]
fn gap2(d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        let t = d as f64 - 0.5;
        t * t
    }
}

/// Separable exact transform of the squared point-to-cell distance. Cells
/// just outside the grid count as complement.
fn distance_transform(
    dim: usize,
    shape: &[usize; MAX_DIM],
    strides: &[usize; MAX_DIM],
    occupied: &[bool],
) -> Vec<f64> {
    let mut f: Vec<f64> = occupied
        .iter()
        .map(|&o| if o { f64::INFINITY } else { 0.0 })
        .collect();
    let mut buf = Vec::new();
    let mut out = Vec::new();
    for axis in 0..dim {
        let len = shape[axis];
        let stride = strides[axis];
        for start in 0..f.len() {
            if !(start / stride).is_multiple_of(len) {
                continue;
            }
            buf.clear();
            buf.extend((0..len).map(|x| f[start + x * stride]));
            min_convolve(&buf, &mut out);
            for (x, &v) in out.iter().enumerate() {
                f[start + x * stride] = v;
            }
        }
    }
    f
}

fn min_convolve(buf: &[f64], out: &mut Vec<f64>) {
    let len = buf.len();
    out.clear();
    for x in 0..len {
        let mut best = gap2(x + 1).min(gap2(len - x));
        let mut d = 0;
        loop {
            let g = gap2(d);
            if g >= best {
                break;
            }
            if x >= d {
                best = best.min(g + buf[x - d]);
            }
            if x + d < len {
                best = best.min(g + buf[x + d]);
            }
            d += 1;
        }
        out.push(best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Pred<F: Fn(&[f64]) -> bool> {
        dim: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        f: F,
    }

    impl<F: Fn(&[f64]) -> bool> Shape for Pred<F> {
        fn dim(&self) -> usize {
            self.dim
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (self.lo.clone(), self.hi.clone())
        }
        fn contains(&self, x: &[f64]) -> bool {
            (self.f)(x)
        }
    }

    fn unit_square() -> Pred<impl Fn(&[f64]) -> bool> {
        Pred {
            dim: 2,
            lo: vec![-0.1, -0.1],
            hi: vec![1.1, 1.1],
            f: |x: &[f64]| x.iter().all(|&t| t > 0.0 && t < 1.0),
        }
    }

    #[test]
    fn unit_square_at_level_three() {
        let d = rasterize(&unit_square(), 3).unwrap();
        assert_eq!(d.occupied_count(), 64);
        let c = d.cell_of_point(&[0.45, 0.45]).unwrap();
        let dist = d.distance(c);
        assert!((0.4375..=0.5).contains(&dist), "{dist}");
        assert!(d.is_connected());
        assert!((d.diameter() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_predicate_is_an_error() {
        let s = Pred {
            dim: 2,
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            f: |_: &[f64]| false,
        };
        assert_eq!(rasterize(&s, 3).unwrap_err(), Error::EmptyDomain);
        assert_eq!(rasterize(&s, 3).unwrap_err().to_string(), "empty domain");
    }

    #[test]
    fn full_box_is_not_proper() {
        let s = Pred {
            dim: 2,
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            f: |_: &[f64]| true,
        };
        assert_eq!(rasterize(&s, 2).unwrap_err(), Error::NotProperSubset);
    }

    #[test]
    fn lshape_cell_count_matches_direct_count() {
        let s = Pred {
            dim: 2,
            lo: vec![-0.1, -0.1],
            hi: vec![1.1, 1.1],
            f: |x: &[f64]| {
                x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0 && !(x[0] > 0.5 && x[1] > 0.5)
            },
        };
        let d = rasterize(&s, 6).unwrap();
        // direct count over the 64 x 64 cells of the unit square
        let mut oracle = 0;
        for a in 0..64 {
            for b in 0..64 {
                if !(a >= 32 && b >= 32) {
                    oracle += 1;
                }
            }
        }
        assert_eq!(oracle, 3 << 10);
        assert_eq!(d.occupied_count(), oracle);
    }

    #[test]
    fn distance_matches_brute_force_on_a_blob() {
        let s = Pred {
            dim: 2,
            lo: vec![-1.1, -1.1],
            hi: vec![1.1, 1.1],
            f: |x: &[f64]| {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                r < 0.9 && !(x[0] > 0.2 && x[1].abs() < 0.15)
            },
        };
        let d = rasterize(&s, 4).unwrap();
        let h = d.cell_side();
        let comp: Vec<usize> = (0..d.len()).filter(|&i| !d.is_occupied(i)).collect();
        for &c in d.occupied_cells() {
            let p = d.cell_center(c);
            let mut best = f64::INFINITY;
            for &q in &comp {
                let lo = d.cell_coords(q);
                let mut s2 = 0.0;
                for k in 0..2 {
                    let a = lo[k] as f64 * h;
                    let g = (a - p[k]).max(p[k] - a - h).max(0.0);
                    s2 += g * g;
                }
                best = best.min(s2);
            }
            assert!((d.distance(c) - best.sqrt()).abs() < 1e-12);
            assert!((d.boundary_distance(&p) - best.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_interval() {
        let s = Pred {
            dim: 1,
            lo: vec![-0.25],
            hi: vec![1.25],
            f: |x: &[f64]| x[0] > 0.0 && x[0] < 1.0,
        };
        let d = rasterize(&s, 3).unwrap();
        assert_eq!(d.occupied_count(), 8);
        let mid = d.cell_of_point(&[0.45]).unwrap();
        assert!((d.distance(mid) - 0.4375).abs() < 1e-15);
    }

    #[test]
    fn single_cube_domain_has_face_distances() {
        let q = DyadicCube::new(2, &[1, 2]).unwrap();
        let d = RasterDomain::from_dyadic_cube(&q, 5).unwrap();
        assert_eq!(d.occupied_count(), 64);
        let lo = q.lower();
        for &c in d.occupied_cells() {
            let p = d.cell_center(c);
            let exact = (0..2)
                .map(|k| (p[k] - lo[k]).min(lo[k] + q.side() - p[k]))
                .fold(f64::INFINITY, f64::min);
            assert!((d.distance(c) - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn disconnected_domain_is_detected() {
        let s = Pred {
            dim: 2,
            lo: vec![-0.1, -0.1],
            hi: vec![2.1, 1.1],
            f: |x: &[f64]| x[1] > 0.0 && x[1] < 1.0 && ((x[0] > 0.0 && x[0] < 0.9) || (x[0] > 1.1 && x[0] < 2.0)),
        };
        let d = rasterize(&s, 3).unwrap();
        assert_eq!(d.components(), 2);
        assert!(!d.is_connected());
    }
}
