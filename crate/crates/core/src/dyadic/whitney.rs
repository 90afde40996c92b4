use std::collections::BTreeMap;

use serde::Serialize;

use super::overlap::max_overlap;
use super::pyramid::level_grids;
use super::{pow2, star, Coords, DyadicCube, RasterDomain, MAX_DIM};

/// Observed star overlap must not exceed this in the plane.
pub const STAR_OVERLAP_BOUND_2D: usize = 12;

/// Whitney cubes of a rasterized domain.
///
/// A dyadic cube `Q` (level at most `J`) is selected when all its cells are
/// occupied, `diam(Q) <= L(Q)` and no ancestor was selected, where `L(Q)` is
/// the smallest cell-center distance in `Q` minus the cell half-diagonal, a
/// lower bound for `dist(Q, dG)`. Maximality bounds `dist(Q, dG)` by about
/// `4 diam(Q)` from above.
#[derive(Clone, Debug, Serialize)]
pub struct WhitneyDecomposition {
    dim: usize,
    resolution: i32,
    cubes: Vec<DyadicCube>,
    covered: f64,
    residual: f64,
}

/// Geometric checks of a decomposition against its domain.
#[derive(Clone, Debug, Serialize)]
pub struct WhitneyReport {
    pub cube_count: usize,
    pub residual: f64,
    pub disjoint: bool,
    pub contained: bool,
    /// Smallest and largest `dist(x, dG) / diam(Q)` over all star samples.
    pub min_distance_ratio: f64,
    pub max_distance_ratio: f64,
    pub sample_points: usize,
    pub violations: Vec<DistanceBoundWitness>,
    pub max_star_overlap: usize,
}

impl WhitneyReport {
    /// `3/4 diam(Q) <= dist(x, dG) <= 6 diam(Q)` at every star sample, with
    /// disjoint interiors and containment.
    pub fn passes(&self) -> bool {
        self.disjoint && self.contained && self.violations.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceBoundWitness {
    pub cube: DyadicCube,
    pub point: Vec<f64>,
    pub distance: f64,
    pub diam: f64,
}

/// Selection test shared by the top-down construction.
pub(crate) fn admits(dim: usize, level: i32, resolution: i32, min_center_distance: f64) -> bool {
    let rn = (dim as f64).sqrt();
    let diam = rn * pow2(-level);
    let lower = min_center_distance - 0.5 * rn * pow2(-resolution);
    diam <= lower
}

/// Top-down greedy Whitney selection on the dyadic tree down to level `J`.
pub fn whitney(domain: &RasterDomain) -> WhitneyDecomposition {
    let dim = domain.dim();
    let resolution = domain.resolution();
    let grids = level_grids(domain, &[0; MAX_DIM]);

    // bottom-up: fully occupied flag and minimum center distance per cube
    let mut full: Vec<Vec<bool>> = Vec::with_capacity(grids.len());
    let mut mind: Vec<Vec<f64>> = Vec::with_capacity(grids.len());
    full.push(domain.occupancy().to_vec());
    mind.push(
        domain
            .distances()
            .iter()
            .zip(domain.occupancy())
            .map(|(&d, &o)| if o { d } else { 0.0 })
            .collect(),
    );
    for l in 1..grids.len() {
        let (fine, coarse) = (&grids[l - 1], &grids[l]);
        let mut f = vec![true; coarse.len()];
        let mut m = vec![f64::INFINITY; coarse.len()];
        let mut kids = vec![0u8; coarse.len()];
        for i in 0..fine.len() {
            let p = fine.parent_index(i, coarse);
            f[p] &= full[l - 1][i];
            m[p] = m[p].min(mind[l - 1][i]);
            kids[p] += 1;
        }
        for (p, k) in kids.iter().enumerate() {
            if *k as usize != 1 << dim {
                f[p] = false;
            }
        }
        full.push(f);
        mind.push(m);
    }

    // top-down: a cube is blocked once it or an ancestor is selected
    let mut cubes = Vec::new();
    let mut blocked_above: Vec<bool> = vec![false; grids.last().unwrap().len()];
    for l in (0..grids.len()).rev() {
        let g = &grids[l];
        let mut blocked = vec![false; g.len()];
        for i in 0..g.len() {
            let inherited = if l + 1 < grids.len() {
                blocked_above[g.parent_index(i, &grids[l + 1])]
            } else {
                false
            };
            if inherited {
                blocked[i] = true;
            } else if full[l][i] && admits(dim, g.level, resolution, mind[l][i]) {
                blocked[i] = true;
                cubes.push(DyadicCube::from_coords(g.level, dim, g.anchor(i)));
            }
        }
        blocked_above = blocked;
    }
    cubes.sort();
    let covered: f64 = cubes.iter().map(DyadicCube::measure).sum();
    WhitneyDecomposition {
        dim,
        resolution,
        residual: (domain.measure() - covered).max(0.0),
        covered,
        cubes,
    }
}

impl WhitneyDecomposition {
    /// Wrap an arbitrary disjoint family of cubes of `domain` (no Whitney
    /// property is checked; `verify` reports on it).
    pub fn from_cubes(domain: &RasterDomain, mut cubes: Vec<DyadicCube>) -> Self {
        cubes.sort();
        cubes.dedup();
        let covered: f64 = cubes.iter().map(DyadicCube::measure).sum();
        Self {
            dim: domain.dim(),
            resolution: domain.resolution(),
            residual: (domain.measure() - covered).max(0.0),
            covered,
            cubes,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> i32 {
        self.resolution
    }

    /// Cubes sorted by level, then anchor.
    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Measure of occupied cells not covered by any Whitney cube.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn covered_measure(&self) -> f64 {
        self.covered
    }

    /// `W_j`: indices into [`Self::cubes`] grouped by level.
    pub fn by_level(&self) -> BTreeMap<i32, Vec<usize>> {
        let mut m: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, q) in self.cubes.iter().enumerate() {
            m.entry(q.level()).or_default().push(i);
        }
        m
    }

    pub fn index_of(&self, q: &DyadicCube) -> Option<usize> {
        self.cubes.binary_search(q).ok()
    }

    /// Whitney cube index owning each grid cell of `domain`.
    pub fn cell_owners(&self, domain: &RasterDomain) -> Vec<Option<u32>> {
        let mut owner = vec![None; domain.len()];
        for (qi, q) in self.cubes.iter().enumerate() {
            for_each_cell(q, self.resolution, |c| {
                if let Some(idx) = domain.index(c) {
                    owner[idx] = Some(qi as u32);
                }
            });
        }
        owner
    }

    /// Translate every cube by `offset` cells of its own level scaled from
    /// a cube of level `level` (used to reuse decompositions of congruent
    /// dyadic cubes).
    pub(crate) fn translated(&self, level: i32, offset: &Coords) -> Vec<DyadicCube> {
        self.cubes
            .iter()
            .map(|q| {
                let scale = 1i64 << (q.level() - level);
                let mut a = q.coords();
                for i in 0..self.dim {
                    a[i] += offset[i] * scale;
                }
                DyadicCube::from_coords(q.level(), self.dim, a)
            })
            .collect()
    }

    pub fn verify(&self, domain: &RasterDomain) -> WhitneyReport {
        let mut hits = vec![0u8; domain.len()];
        let mut contained = true;
        for q in &self.cubes {
            for_each_cell(q, self.resolution, |c| match domain.index(c) {
                Some(i) if domain.is_occupied(i) => hits[i] = hits[i].saturating_add(1),
                _ => contained = false,
            });
        }
        let disjoint = hits.iter().all(|&h| h <= 1);

        let mut violations = Vec::new();
        let mut lo_ratio = f64::INFINITY;
        let mut hi_ratio: f64 = 0.0;
        let mut samples = 0;
        let n = self.dim;
        let lattice = 3usize.pow(n as u32);
        for q in &self.cubes {
            let s = star(q);
            let diam = q.diam();
            for code in 0..lattice {
                let mut rem = code;
                let mut x = vec![0.0; n];
                for (k, xk) in x.iter_mut().enumerate() {
                    *xk = s.lo(k) + 0.5 * (rem % 3) as f64 * s.side();
                    rem /= 3;
                }
                let d = domain.boundary_distance(&x);
                samples += 1;
                let r = d / diam;
                lo_ratio = lo_ratio.min(r);
                hi_ratio = hi_ratio.max(r);
                if !(0.75 * diam <= d && d <= 6.0 * diam) {
                    violations.push(DistanceBoundWitness {
                        cube: *q,
                        point: x,
                        distance: d,
                        diam,
                    });
                }
            }
        }
        let stars: Vec<_> = self.cubes.iter().map(star).collect();
        WhitneyReport {
            cube_count: self.cubes.len(),
            residual: self.residual,
            disjoint,
            contained,
            min_distance_ratio: lo_ratio,
            max_distance_ratio: hi_ratio,
            sample_points: samples,
            violations,
            max_star_overlap: max_overlap(&stars),
        }
    }
}

/// Visit the absolute level-`resolution` cell coordinates of `q`.
pub(crate) fn for_each_cell(q: &DyadicCube, resolution: i32, mut f: impl FnMut(&Coords)) {
    let (lo, hi) = q.cell_range(resolution);
    let n = q.dim();
    let mut c = lo;
    loop {
        f(&c);
        let mut axis = 0;
        loop {
            if axis == n {
                return;
            }
            c[axis] += 1;
            if c[axis] < hi[axis] {
                break;
            }
            c[axis] = lo[axis];
            axis += 1;
        }
    }
}
