use serde::Serialize;

use super::GridFunction;
use crate::dyadic::{level_grids, Coords, Cube, DyadicCube, MAX_DIM};
use crate::error::{Error, Result};

/// Default local dilation, just below the `10/9` limit for Whitney stars.
pub const DEFAULT_LAMBDA: f64 = 10.0 / 9.0 - 1e-6;

/// Default bound on the pointwise overlap of a local family.
pub const DEFAULT_OVERLAP_BOUND: usize = 8;

/// Relative slack under which a cube is preferred to its children.
const TIE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JNParams {
    pub p: f64,
    /// Dilation `lambda` with `lambda R ⊂ G` required of local cubes.
    pub lambda: f64,
    /// Largest allowed pointwise overlap of a local family.
    pub overlap_bound: usize,
    /// Finest cube level allowed in partitions; `None` means the raster level.
    pub max_level: Option<i32>,
    /// Extra translations of the dyadic lattice, in cells. The unshifted
    /// lattice is always searched first.
    pub shifts: Vec<Vec<i64>>,
}

impl JNParams {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            lambda: DEFAULT_LAMBDA,
            overlap_bound: DEFAULT_OVERLAP_BOUND,
            max_level: None,
            shifts: Vec::new(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 1, got {}",
                self.lambda
            )));
        }
        if self.overlap_bound == 0 {
            return Err(Error::InvalidParameter("overlap bound must be at least 1".into()));
        }
        Ok(())
    }

    /// The searched lattice translations, zero first.
    pub(crate) fn lattice_shifts(&self, dim: usize) -> Result<Vec<Coords>> {
        let mut out = vec![[0i64; MAX_DIM]];
        for s in &self.shifts {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            let mut c = [0i64; MAX_DIM];
            c[..dim].copy_from_slice(s);
            if !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::ExponentOutOfRange(p))
    }
}

/// Which family a result was taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Disjoint dyadic cubes from the partition dynamic program.
    DyadicPartition,
    /// Stars of the Whitney cubes of the domain.
    WhitneyStars,
    /// Stars of the Whitney cubes of each piece of a dyadic partition.
    PieceStars,
}

#[derive(Clone, Debug, Serialize)]
pub struct DPResult {
    pub value: f64,
    /// Dyadic cubes of the (possibly translated) lattice; the family is
    /// these cubes dilated by `dilation`.
    pub partition: Vec<DyadicCube>,
    pub shift: Vec<i64>,
    pub resolution: i32,
    pub dilation: f64,
    /// Measure of the domain not covered by `partition`.
    pub residual_measure: f64,
    pub family: FamilyKind,
    pub max_overlap: usize,
}

impl DPResult {
    /// The cubes of the family in absolute coordinates.
    pub fn cubes(&self) -> Vec<Cube> {
        self.partition
            .iter()
            .map(|q| q.to_cube_shifted(self.resolution, &self.shift).dilate(self.dilation))
            .collect()
    }

    /// `sum |Q| (avg_Q |f - f_Q|)^p` over the family, computed directly.
    pub fn recompute(&self, f: &GridFunction, p: f64) -> Result<f64> {
        self.cubes()
            .iter()
            .map(|c| Ok(c.measure() * mean_oscillation(f, c)?.powf(p)))
            .sum()
    }
}

/// `avg_Q |f - f_Q|` with exact cell sums.
pub fn mean_oscillation(f: &GridFunction, q: &Cube) -> Result<f64> {
    Ok(f.mean_and_oscillation(q)?.1)
}

/// Exact maximum of `sum |Q| (avg_Q |f - f_Q|)^p` over partitions of the
/// domain into dyadic cubes of level at most `max_level`, by dynamic
/// programming on the dyadic tree. Each lattice shift in `params` is
/// searched and the best value is returned (the first shift on ties).
pub fn jn_global_dyadic(f: &GridFunction, params: &JNParams) -> Result<DPResult> {
    check_p(params.p)?;
    let shifts = params.lattice_shifts(f.domain().dim())?;
    let mut best: Option<DPResult> = None;
    for s in &shifts {
        let r = dyadic_dp(f, params, s);
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least the zero shift"))
}

/// One dynamic program on the lattice translated by `shift`.
pub(crate) fn dyadic_dp(f: &GridFunction, params: &JNParams, shift: &Coords) -> DPResult {
    let domain = f.domain();
    let n = domain.dim();
    let p = params.p;
    let resolution = domain.resolution();
    let grids = level_grids(domain, shift);
    let levels = grids.len();
    // levels below `min_l` (finer than max_level) are not admissible
    let min_l = params
        .max_level
        .map_or(0, |m| (resolution - m).max(0) as usize);
    let cell_vol = domain.cell_volume();
    // shifted by a reference value so that constants have zero oscillation
    let r = f.reference();
    let values: Vec<f64> = f.grid_values().iter().map(|v| v - r).collect();
    let values = &values[..];
    let ncells = domain.len();

    let mut parent: Vec<Vec<u32>> = Vec::with_capacity(levels);
    let mut full: Vec<Vec<bool>> = vec![domain.occupancy().to_vec()];
    let mut sums: Vec<Vec<f64>> = vec![values.to_vec()];
    for l in 1..levels {
        let (fine, coarse) = (&grids[l - 1], &grids[l]);
        let par: Vec<u32> = (0..fine.len())
            .map(|i| fine.parent_index(i, coarse) as u32)
            .collect();
        let mut fl = vec![true; coarse.len()];
        let mut sm = vec![0.0; coarse.len()];
        let mut kids = vec![0u32; coarse.len()];
        for (i, &pi) in par.iter().enumerate() {
            let pi = pi as usize;
            fl[pi] &= full[l - 1][i];
            sm[pi] += sums[l - 1][i];
            kids[pi] += 1;
        }
        for (f, &k) in fl.iter_mut().zip(&kids) {
            *f &= k == 1 << n;
        }
        parent.push(par);
        full.push(fl);
        sums.push(sm);
    }

    // sum of |f - f_Q| over the cells of every full cube, via cell ancestors
    let mut osc: Vec<Vec<f64>> = vec![vec![0.0; ncells]];
    let mut anc: Vec<u32> = (0..ncells as u32).collect();
    for l in 1..levels {
        let cells_per = (1usize << (n * l)) as f64;
        let mut o = vec![0.0; grids[l].len()];
        for &c in domain.occupied_cells() {
            anc[c] = parent[l - 1][anc[c] as usize];
            let a = anc[c] as usize;
            if full[l][a] {
                o[a] += (values[c] - sums[l][a] / cells_per).abs();
            }
        }
        osc.push(o);
    }

    // bottom-up values and choices
    let mut val: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut take: Vec<Vec<bool>> = Vec::with_capacity(levels);
    val.push(vec![0.0; ncells]);
    take.push(if min_l == 0 {
        domain.occupancy().to_vec()
    } else {
        vec![false; ncells]
    });
    for l in 1..levels {
        let len = grids[l].len();
        let mut children = vec![0.0; len];
        for (i, &pi) in parent[l - 1].iter().enumerate() {
            children[pi as usize] += val[l - 1][i];
        }
        let measure = (1usize << (n * l)) as f64 * cell_vol;
        let mut v = vec![0.0; len];
        let mut t = vec![false; len];
        for i in 0..len {
            v[i] = children[i];
            if l >= min_l && full[l][i] {
                let term = measure * (osc[l][i] * cell_vol / measure).powf(p);
                if term >= children[i] * (1.0 - TIE) {
                    v[i] = term;
                    t[i] = true;
                }
            }
        }
        val.push(v);
        take.push(t);
    }

    // top-down reconstruction
    let top = levels - 1;
    let mut partition = Vec::new();
    let mut stack: Vec<(usize, usize)> = (0..grids[top].len()).map(|i| (top, i)).collect();
    while let Some((l, i)) = stack.pop() {
        if take[l][i] {
            partition.push(DyadicCube::from_coords(grids[l].level, n, grids[l].anchor(i)));
        } else if l > 0 {
            stack.extend(grids[l].children(i, &grids[l - 1]).map(|c| (l - 1, c)));
        }
    }
    partition.sort();
    let value: f64 = val[top].iter().sum();
    let covered: f64 = partition.iter().map(DyadicCube::measure).sum();
    DPResult {
        value,
        partition,
        shift: shift[..n].to_vec(),
        resolution,
        dilation: 1.0,
        residual_measure: (domain.measure() - covered).max(0.0),
        family: FamilyKind::DyadicPartition,
        max_overlap: 1,
    }
}
