use std::sync::Arc;

use crate::dyadic::{Cube, RasterDomain, MAX_DIM};
use crate::error::{Error, Result};

/// Overlaps thinner than this fraction of a cell are treated as touching.
const SLIVER: f64 = 1e-9;

/// A function constant on each occupied cell of a raster domain.
#[derive(Clone, Debug)]
pub struct GridFunction {
    domain: Arc<RasterDomain>,
    /// One value per grid cell, zero off the domain.
    values: Vec<f64>,
}

impl GridFunction {
    /// Values listed in the order of `domain.occupied_cells()`.
    pub fn new(domain: Arc<RasterDomain>, values: &[f64]) -> Result<Self> {
        if values.len() != domain.occupied_count() {
            return Err(Error::DimensionMismatch {
                expected: domain.occupied_count(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value {v}")));
        }
        let mut full = vec![0.0; domain.len()];
        for (&c, &v) in domain.occupied_cells().iter().zip(values) {
            full[c] = v;
        }
        Ok(Self {
            domain,
            values: full,
        })
    }

    /// Sample `f` at every occupied cell center.
    pub fn from_fn(domain: Arc<RasterDomain>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let vals: Vec<f64> = domain
            .occupied_cells()
            .iter()
            .map(|&c| f(&domain.cell_center(c)))
            .collect();
        Self::new(domain, &vals)
    }

    /// Build from a function of the grid cell index.
    pub fn from_cells(domain: Arc<RasterDomain>, f: impl Fn(usize) -> f64) -> Result<Self> {
        let vals: Vec<f64> = domain.occupied_cells().iter().map(|&c| f(c)).collect();
        Self::new(domain, &vals)
    }

    pub fn domain(&self) -> &Arc<RasterDomain> {
        &self.domain
    }

    /// Value on grid cell `idx` (zero off the domain).
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub(crate) fn grid_values(&self) -> &[f64] {
        &self.values
    }

    /// Values in the order of `domain().occupied_cells()`.
    pub fn values(&self) -> Vec<f64> {
        self.domain.occupied_cells().iter().map(|&c| self.values[c]).collect()
    }

    /// `a f + b`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        let vals: Vec<f64> = self.values().iter().map(|v| a * v + b).collect();
        Self::new(self.domain.clone(), &vals)
    }

    pub fn integral(&self) -> f64 {
        let s: f64 = self.domain.occupied_cells().iter().map(|&c| self.values[c]).sum();
        s * self.domain.cell_volume()
    }

    /// Any value of the function; averages are accumulated relative to it
    /// so that constants average exactly.
    pub(crate) fn reference(&self) -> f64 {
        self.values[self.domain.occupied_cells()[0]]
    }

    /// `f_G`, the average over the whole domain.
    pub fn mean(&self) -> f64 {
        let r = self.reference();
        let s: f64 = self
            .domain
            .occupied_cells()
            .iter()
            .map(|&c| self.values[c] - r)
            .sum();
        r + s / self.domain.occupied_count() as f64
    }

    /// `(f_Q, avg_Q |f - f_Q|)` for an arbitrary axis-parallel cube, with
    /// exact partial-cell weights.
    pub fn mean_and_oscillation(&self, q: &Cube) -> Result<(f64, f64)> {
        let w = self.weights(q)?;
        let vol = q.measure();
        let r = self.reference();
        let mut sum = 0.0;
        w.for_each(|i, wt| sum += wt * (self.values[i] - r));
        let mean = r + sum / vol;
        let mut osc = 0.0;
        w.for_each(|i, wt| osc += wt * (self.values[i] - mean).abs());
        Ok((mean, osc / vol))
    }

    /// Whether every cell meeting the interior of `q` is occupied.
    pub fn contains_cube(&self, q: &Cube) -> bool {
        self.weights(q).is_ok()
    }

    /// Average of `|f - c|` over a cube.
    pub fn deviation(&self, q: &Cube, c: f64) -> Result<f64> {
        let w = self.weights(q)?;
        let mut s = 0.0;
        w.for_each(|i, wt| s += wt * (self.values[i] - c).abs());
        Ok(s / q.measure())
    }

    fn weights(&self, q: &Cube) -> Result<CellWeights> {
        let d = &*self.domain;
        let n = d.dim();
        if q.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.dim(),
            });
        }
        let h = d.cell_side();
        let origin = d.grid_origin();
        let extent = d.grid_extent();
        let mut axes: [Vec<(usize, f64)>; MAX_DIM] = Default::default();
        for k in 0..n {
            let (lo, hi) = (q.lo(k) / h, q.hi(k) / h);
            let first = lo.floor() as i64;
            let last = hi.ceil() as i64;
            for m in first..last {
                let w = (hi.min((m + 1) as f64) - lo.max(m as f64)).max(0.0);
                if w <= SLIVER {
                    continue;
                }
                let r = m - origin[k];
                if r < 0 || r >= extent[k] as i64 {
                    return Err(Error::CubeNotContained);
                }
                axes[k].push((r as usize, w * h));
            }
        }
        for a in axes.iter_mut().skip(n) {
            a.push((0, 1.0));
        }
        let w = CellWeights {
            axes,
            strides: grid_strides(extent),
        };
        let mut inside = true;
        w.for_each(|i, _| inside &= d.is_occupied(i));
        if !inside {
            return Err(Error::CubeNotContained);
        }
        Ok(w)
    }
}

fn grid_strides(extent: &[usize]) -> [usize; MAX_DIM] {
    let mut s = [0usize; MAX_DIM];
    let mut acc = 1;
    for k in 0..MAX_DIM {
        s[k] = acc;
        acc *= extent.get(k).copied().unwrap_or(1);
    }
    s
}

/// Grid cells meeting a box, with the measure of each intersection.
struct CellWeights {
    axes: [Vec<(usize, f64)>; MAX_DIM],
    strides: [usize; MAX_DIM],
}

impl CellWeights {
    fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        let s = &self.strides;
        for &(i2, w2) in &self.axes[2] {
            for &(i1, w1) in &self.axes[1] {
                for &(i0, w0) in &self.axes[0] {
                    f(i0 * s[0] + i1 * s[1] + i2 * s[2], w0 * w1 * w2);
                }
            }
        }
    }
}
