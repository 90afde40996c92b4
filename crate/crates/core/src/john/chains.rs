use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use super::probe::{curve_profile, CurveTree};
use crate::dyadic::{star, DyadicCube, RasterDomain, WhitneyDecomposition, MAX_DIM};
use crate::error::{Error, Result};

/// Smallest consecutive star overlap ratio a chain may have. A cube next to
/// a face of one four times wider still gets `1/57.6`; only corner or edge
/// contact falls below.
pub const CHAIN_OVERLAP_FLOOR: f64 = 1.0 / 64.0;

/// Whitney cube indices from the center cube to the terminal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Chain {
    pub terminal: u32,
    pub cubes: Vec<u32>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// `|Q* ∩ R*| / max(|Q*|, |R*|)`.
pub fn star_overlap_ratio(q: &DyadicCube, r: &DyadicCube) -> f64 {
    let (a, b) = (star(q), star(r));
    a.intersection_measure(&b) / a.measure().max(b.measure())
}

#[derive(Clone, Debug)]
pub struct ChainDecomposition {
    domain: Arc<RasterDomain>,
    whitney: WhitneyDecomposition,
    center: Vec<f64>,
    q0: u32,
    chains: Vec<Chain>,
    shadows: Vec<Vec<u32>>,
    rho: f64,
}

impl ChainDecomposition {
    pub fn domain(&self) -> &Arc<RasterDomain> {
        &self.domain
    }

    pub fn whitney(&self) -> &WhitneyDecomposition {
        &self.whitney
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn center_index(&self) -> u32 {
        self.q0
    }

    pub fn center_cube(&self) -> DyadicCube {
        self.cube(self.q0)
    }

    pub fn cube(&self, idx: u32) -> DyadicCube {
        self.whitney.cubes()[idx as usize]
    }

    /// Chain of every Whitney cube, indexed like `whitney().cubes()`.
    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn chain_cubes(&self, terminal: u32) -> Vec<DyadicCube> {
        self.chains[terminal as usize].cubes.iter().map(|&i| self.cube(i)).collect()
    }

    /// Terminals whose chain passes through cube `r`, ascending.
    pub fn shadow(&self, r: u32) -> &[u32] {
        &self.shadows[r as usize]
    }

    pub fn shadows(&self) -> &[Vec<u32>] {
        &self.shadows
    }

    /// Largest `t / dist(gamma_Q(t), dG)` over all chain curves (at least 1).
    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Read the chain of every Whitney cube off the discrete curve from its
/// midpoint to the midpoint of the center cube. Cells left uncovered by `W`
/// are skipped, diagonal steps are split into axis steps, and loops in the
/// cube sequence are erased so the chain has no repeats.
pub fn build_chains(
    domain: Arc<RasterDomain>,
    whitney: WhitneyDecomposition,
    x0: &[f64],
) -> Result<ChainDecomposition> {
    let n = domain.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let x0_cell = domain
        .cell_of_point(x0)
        .filter(|&c| domain.is_occupied(c))
        .ok_or(Error::CenterOutsideDomain)?;
    let owners = whitney.cell_owners(&domain);
    let q0 = owners[x0_cell].ok_or(Error::CenterCubeMissing)?;
    let cubes = whitney.cubes();
    let mid_cell = |q: &DyadicCube| {
        domain
            .cell_of_point(&q.center())
            .expect("Whitney cubes lie in the grid")
    };
    let tree = CurveTree::new(&domain, mid_cell(&cubes[q0 as usize]));

    let mut chains = Vec::with_capacity(cubes.len());
    let mut rho: f64 = 1.0;
    for (qi, q) in cubes.iter().enumerate() {
        let path = tree
            .path(mid_cell(q))
            .ok_or(Error::SampleUnreachable(mid_cell(q)))?;
        rho = rho.max(curve_profile(&domain, &path).1);

        let mut seq: Vec<u32> = vec![qi as u32];
        let mut pos: HashMap<u32, usize> = HashMap::from([(qi as u32, 0)]);
        let mut visit = |cell: usize| {
            let Some(o) = owners[cell] else { return };
            if let Some(&i) = pos.get(&o) {
                for r in seq.drain(i + 1..) {
                    pos.remove(&r);
                }
            } else {
                pos.insert(o, seq.len());
                seq.push(o);
            }
        };
        for w in path.windows(2) {
            let mut c = domain.coords(w[0]);
            let b = domain.coords(w[1]);
            for k in 0..MAX_DIM {
                if c[k] != b[k] {
                    c[k] = b[k];
                    visit(domain.index(&c).expect("curve stays in the grid"));
                }
            }
        }
        seq.reverse();
        debug_assert_eq!(seq[0], q0);
        for w in seq.windows(2) {
            let (a, b) = (cubes[w[0] as usize], cubes[w[1] as usize]);
            let ratio = star_overlap_ratio(&a, &b);
            if ratio < CHAIN_OVERLAP_FLOOR {
                return Err(Error::ChainConstructionFailed {
                    terminal: *q,
                    from: a,
                    to: b,
                    ratio,
                });
            }
        }
        chains.push(Chain {
            terminal: qi as u32,
            cubes: seq,
        });
    }

    let mut shadows = vec![Vec::new(); cubes.len()];
    for ch in &chains {
        for &r in &ch.cubes {
            shadows[r as usize].push(ch.terminal);
        }
    }
    Ok(ChainDecomposition {
        center: x0.to_vec(),
        domain,
        whitney,
        q0,
        chains,
        shadows,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{rasterize, whitney, Shape};
    use std::collections::HashSet;

    struct Square;
    impl Shape for Square {
        fn dim(&self) -> usize {
            2
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-0.0625, -0.0625], vec![1.0625, 1.0625])
        }
        fn contains(&self, x: &[f64]) -> bool {
            x.iter().all(|&t| t > 0.0 && t < 1.0)
        }
    }

    struct Lshape;
    impl Shape for Lshape {
        fn dim(&self) -> usize {
            2
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-0.0625, -0.0625], vec![1.0625, 1.0625])
        }
        fn contains(&self, x: &[f64]) -> bool {
            x.iter().all(|&t| t > 0.0 && t < 1.0) && (x[0] < 0.5 || x[1] < 0.5)
        }
    }

    fn decompose(shape: &dyn Shape, j: i32, x0: &[f64]) -> ChainDecomposition {
        let d = Arc::new(rasterize(shape, j).unwrap());
        let w = whitney(&d);
        build_chains(d, w, x0).unwrap()
    }

    #[test]
    fn center_chain_is_trivial() {
        let cd = decompose(&Square, 6, &[0.5, 0.5]);
        let q0 = cd.center_index();
        assert_eq!(cd.chains()[q0 as usize].cubes, vec![q0]);
    }

    #[test]
    fn square_chains_overlap_and_have_no_repeats() {
        let cd = decompose(&Square, 7, &[0.5, 0.5]);
        assert_eq!(cd.chains().len(), cd.whitney().len());
        for ch in cd.chains() {
            assert_eq!(ch.cubes[0], cd.center_index());
            assert_eq!(*ch.cubes.last().unwrap(), ch.terminal);
            let set: HashSet<_> = ch.cubes.iter().collect();
            assert_eq!(set.len(), ch.len());
            for w in ch.cubes.windows(2) {
                let r = star_overlap_ratio(&cd.cube(w[0]), &cd.cube(w[1]));
                assert!(r >= CHAIN_OVERLAP_FLOOR, "{r}");
            }
        }
    }

    #[test]
    fn shadows_transpose_chains() {
        let cd = decompose(&Lshape, 7, &[0.25, 0.25]);
        let total_chain: usize = cd.chains().iter().map(Chain::len).sum();
        let total_shadow: usize = cd.shadows().iter().map(Vec::len).sum();
        assert_eq!(total_chain, total_shadow);
        for (r, s) in cd.shadows().iter().enumerate() {
            for &q in s {
                assert!(cd.chains()[q as usize].cubes.contains(&(r as u32)));
            }
        }
        assert!(cd.rho() >= 1.0);
    }

    #[test]
    fn overlap_ratio_of_face_neighbors() {
        let big = DyadicCube::new(2, &[1, 1]).unwrap();
        let small = DyadicCube::new(4, &[8, 4]).unwrap();
        let r = star_overlap_ratio(&big, &small);
        assert!((r - 1.0 / 57.6).abs() < 1e-12, "{r}");
        let corner = DyadicCube::new(4, &[8, 8]).unwrap();
        assert!(star_overlap_ratio(&big, &corner) < CHAIN_OVERLAP_FLOOR);
    }
}
