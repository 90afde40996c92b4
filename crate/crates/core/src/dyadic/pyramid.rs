use super::{Coords, RasterDomain, MAX_DIM};

/// Index space of the dyadic cubes of one level that meet the raster grid,
/// possibly on a grid translated by a whole number of cells.
#[derive(Clone, Debug)]
pub(crate) struct LevelGrid {
    pub level: i32,
    pub dim: usize,
    pub lo: Coords,
    pub extent: [usize; MAX_DIM],
    pub strides: [usize; MAX_DIM],
}

impl LevelGrid {
    fn new(level: i32, dim: usize, lo: Coords, extent: [usize; MAX_DIM]) -> Self {
        let mut strides = [0; MAX_DIM];
        let mut s = 1;
        for i in 0..MAX_DIM {
            strides[i] = s;
            s *= extent[i];
        }
        Self {
            level,
            dim,
            lo,
            extent,
            strides,
        }
    }

    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn anchor(&self, idx: usize) -> Coords {
        let mut c = [0i64; MAX_DIM];
        let mut rem = idx;
        for i in 0..self.dim {
            c[i] = self.lo[i] + (rem % self.extent[i]) as i64;
            rem /= self.extent[i];
        }
        c
    }

    pub fn index(&self, anchor: &Coords) -> Option<usize> {
        let mut idx = 0;
        for i in 0..self.dim {
            let r = anchor[i] - self.lo[i];
            if r < 0 || r >= self.extent[i] as i64 {
                return None;
            }
            idx += r as usize * self.strides[i];
        }
        Some(idx)
    }

    /// Index in the next coarser level of the parent of cube `idx`.
    pub fn parent_index(&self, idx: usize, coarser: &LevelGrid) -> usize {
        let a = self.anchor(idx);
        let mut p = [0i64; MAX_DIM];
        for i in 0..self.dim {
            p[i] = a[i].div_euclid(2);
        }
        coarser.index(&p).expect("parent lies in the coarser grid")
    }

    /// Indices of the children of cube `idx` present in the finer grid.
    pub fn children<'a>(
        &self,
        idx: usize,
        finer: &'a LevelGrid,
    ) -> impl Iterator<Item = usize> + 'a {
        let a = self.anchor(idx);
        let dim = self.dim;
        (0..1usize << dim).filter_map(move |bits| {
            let mut c = [0i64; MAX_DIM];
            for i in 0..dim {
                c[i] = 2 * a[i] + ((bits >> i) & 1) as i64;
            }
            finer.index(&c)
        })
    }

    fn coarser(&self) -> LevelGrid {
        let mut lo = [0i64; MAX_DIM];
        let mut extent = [1usize; MAX_DIM];
        for i in 0..self.dim {
            lo[i] = self.lo[i].div_euclid(2);
            let hi = (self.lo[i] + self.extent[i] as i64 - 1).div_euclid(2);
            extent[i] = (hi - lo[i] + 1) as usize;
        }
        LevelGrid::new(self.level - 1, self.dim, lo, extent)
    }
}

/// Level grids from the raster level (index 0) up to the first level whose
/// cubes are at least as wide as the grid. No cube of that level can lie in
/// the domain since each meets the complement layer around the grid.
///
/// `shift` translates the dyadic lattice by whole cells: level-`J` cube
/// `m - shift` is grid cell `m`, so index `i` of level 0 is grid cell `i`.
pub(crate) fn level_grids(domain: &RasterDomain, shift: &Coords) -> Vec<LevelGrid> {
    let dim = domain.dim();
    let mut lo = domain.origin_coords();
    for i in 0..dim {
        lo[i] -= shift[i];
    }
    let extent = domain.extent_array();
    let widest = extent[..dim].iter().copied().max().unwrap_or(1) as i64;
    let mut grids = vec![LevelGrid::new(domain.resolution(), dim, lo, extent)];
    let mut width = 1i64;
    while width < widest {
        let next = grids.last().unwrap().coarser();
        grids.push(next);
        width *= 2;
    }
    grids
}
