use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::{Coords, RasterDomain, MAX_DIM};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Step {
    offset: Coords,
    /// Cells that must be occupied for the step not to cut a corner.
    through: Vec<Coords>,
    length: f64,
}

fn steps(dim: usize) -> Vec<Step> {
    crate::dyadic::neighborhood_offsets(dim)
        .into_iter()
        .map(|o| {
            let axes: Vec<usize> = (0..dim).filter(|&k| o[k] != 0).collect();
            let mut through = Vec::new();
            for mask in 1..(1usize << axes.len()) - 1 {
                let mut t = [0i64; MAX_DIM];
                for (b, &k) in axes.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        t[k] = o[k];
                    }
                }
                through.push(t);
            }
            Step {
                offset: o,
                through,
                length: (axes.len() as f64).sqrt(),
            }
        })
        .collect()
}

/// Shortest-path tree towards a root cell on the occupied cells, with
/// steps to any of the `3^n - 1` neighbors that do not cut a corner and
/// cost `|step| * (1/dist(a) + 1/dist(b)) / 2`. Cheap paths stay far from
/// the boundary. Ties keep the first relaxation in (cost, index) order.
#[derive(Clone, Debug)]
pub struct CurveTree {
    root: usize,
    parent: Vec<usize>,
}

impl CurveTree {
    pub fn new(domain: &RasterDomain, root: usize) -> Self {
        let h = domain.cell_side();
        let steps = steps(domain.dim());
        let mut cost = vec![f64::INFINITY; domain.len()];
        let mut parent = vec![NONE; domain.len()];
        let mut done = vec![false; domain.len()];
        let mut heap = BinaryHeap::new();
        cost[root] = 0.0;
        heap.push(Reverse((Cost(0.0), root)));
        while let Some(Reverse((Cost(c), u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let base = domain.coords(u);
            let inv_u = 1.0 / domain.distance(u);
            for s in &steps {
                let mut nb = base;
                for k in 0..MAX_DIM {
                    nb[k] += s.offset[k];
                }
                let Some(v) = domain.index(&nb) else { continue };
                if !domain.is_occupied(v) || done[v] {
                    continue;
                }
                let clear = s.through.iter().all(|t| {
                    let mut m = base;
                    for k in 0..MAX_DIM {
                        m[k] += t[k];
                    }
                    domain.occupied_abs(&m)
                });
                if !clear {
                    continue;
                }
                let w = s.length * h * 0.5 * (inv_u + 1.0 / domain.distance(v));
                if c + w < cost[v] {
                    cost[v] = c + w;
                    parent[v] = u;
                    heap.push(Reverse((Cost(cost[v]), v)));
                }
            }
        }
        Self { root, parent }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Cells from `from` to the root, or `None` when unreachable.
    pub fn path(&self, from: usize) -> Option<Vec<usize>> {
        let mut out = vec![from];
        let mut c = from;
        while c != self.root {
            c = self.parent[c];
            if c == NONE {
                return None;
            }
            out.push(c);
        }
        Some(out)
    }
}

/// Arc length of a cell path and the largest `t / dist(gamma(t), dG)`
/// along it, `t` measured from the first cell.
pub(crate) fn curve_profile(domain: &RasterDomain, path: &[usize]) -> (f64, f64) {
    let n = domain.dim();
    let mut t = 0.0;
    let mut worst: f64 = 0.0;
    let mut prev = domain.center_point(path[0]);
    for &c in path {
        let p = domain.center_point(c);
        t += (0..n).map(|k| (p[k] - prev[k]).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(t / domain.distance(c));
        prev = p;
    }
    (t, worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct JohnSample {
    pub point: Vec<f64>,
    pub length: f64,
    pub worst_ratio: f64,
}

/// Upper estimate of the John constant: each sample carries a certificate
/// curve to the center.
#[derive(Clone, Debug, Serialize)]
pub struct JohnReport {
    pub center: Vec<f64>,
    pub beta_estimate: f64,
    pub samples: Vec<JohnSample>,
    pub length_bound_ratio: f64,
}

/// Probe with `samples` cells drawn without replacement (all cells when
/// `samples` reaches the cell count).
pub fn john_probe(domain: &RasterDomain, x0: &[f64], samples: usize, seed: u64) -> Result<JohnReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let cells = domain.occupied_cells();
    let chosen: Vec<usize> = if samples >= cells.len() {
        cells.to_vec()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, cells.len(), samples).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| cells[i]).collect()
    };
    john_probe_cells(domain, x0, &chosen)
}

/// Probe the given grid cells.
pub fn john_probe_cells(domain: &RasterDomain, x0: &[f64], cells: &[usize]) -> Result<JohnReport> {
    if x0.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: x0.len(),
        });
    }
    let root = domain
        .cell_of_point(x0)
        .filter(|&c| domain.is_occupied(c))
        .ok_or(Error::CenterOutsideDomain)?;
    let tree = CurveTree::new(domain, root);
    let diam = domain.diameter();
    let mut out = Vec::with_capacity(cells.len());
    let mut beta: f64 = 1.0;
    let mut len_ratio: f64 = 0.0;
    for &c in cells {
        if !domain.is_occupied(c) {
            return Err(Error::InvalidParameter(format!("cell {c} is not occupied")));
        }
        let path = tree.path(c).ok_or(Error::SampleUnreachable(c))?;
        let (length, worst) = curve_profile(domain, &path);
        len_ratio = len_ratio.max(length / diam);
        beta = beta.max(worst).max(length / diam);
        out.push(JohnSample {
            point: domain.cell_center(c),
            length,
            worst_ratio: worst,
        });
    }
    Ok(JohnReport {
        center: domain.cell_center(root),
        beta_estimate: beta,
        samples: out,
        length_bound_ratio: len_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{rasterize, Shape};

    struct Disk;
    impl Shape for Disk {
        fn dim(&self) -> usize {
            2
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-1.0625, -1.0625], vec![1.0625, 1.0625])
        }
        fn contains(&self, x: &[f64]) -> bool {
            x[0] * x[0] + x[1] * x[1] < 1.0
        }
    }

    struct TwoBlocks;
    impl Shape for TwoBlocks {
        fn dim(&self) -> usize {
            2
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-0.1, -0.1], vec![2.1, 1.1])
        }
        fn contains(&self, x: &[f64]) -> bool {
            x[1] > 0.0 && x[1] < 1.0 && ((x[0] > 0.0 && x[0] < 0.9) || (x[0] > 1.1 && x[0] < 2.0))
        }
    }

    #[test]
    fn disk_from_center_is_nearly_radial() {
        let d = rasterize(&Disk, 6).unwrap();
        let r = john_probe(&d, &[0.0, 0.0], 400, 11).unwrap();
        assert!(r.beta_estimate <= 1.3, "{}", r.beta_estimate);
        assert!(r.beta_estimate >= 1.0);
    }

    #[test]
    fn center_must_be_occupied() {
        let d = rasterize(&Disk, 4).unwrap();
        assert_eq!(
            john_probe(&d, &[0.99, 0.99], 10, 1).unwrap_err(),
            Error::CenterOutsideDomain
        );
    }

    #[test]
    fn unreachable_samples_are_reported() {
        let d = rasterize(&TwoBlocks, 4).unwrap();
        let err = john_probe(&d, &[0.5, 0.5], usize::MAX, 0).unwrap_err();
        assert!(matches!(err, Error::SampleUnreachable(_)));
    }

    #[test]
    fn paths_end_at_root_and_move_one_cell_at_a_time() {
        let d = rasterize(&Disk, 5).unwrap();
        let root = d.cell_of_point(&[0.01, 0.01]).unwrap();
        let tree = CurveTree::new(&d, root);
        for &c in d.occupied_cells() {
            let p = tree.path(c).unwrap();
            assert_eq!(*p.last().unwrap(), root);
            for w in p.windows(2) {
                let (a, b) = (d.cell_coords(w[0]), d.cell_coords(w[1]));
                assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1));
                assert!(d.is_occupied(w[1]));
            }
        }
    }
}
