use std::collections::HashMap;

use super::dp::{dyadic_dp, FamilyKind};
use super::{DPResult, GridFunction, JNParams};
use crate::dyadic::{max_overlap, whitney, Cube, DyadicCube, RasterDomain, WhitneyDecomposition, STAR_DILATION};
use crate::error::{Error, Result};

/// Best value of `sum |R*| (avg_{R*} |f - f_{R*}|)^p` over the candidate
/// local families:
///
/// 1. the stars of `w`, normally the Whitney decomposition of the domain;
/// 2. for each lattice shift, the stars of the Whitney cubes of every piece
///    of the optimal dyadic partition.
///
/// A family is kept only when it is nonempty, every cube satisfies
/// `lambda R* ⊂ G`, and its pointwise overlap is at most the bound.
pub fn jn_local(f: &GridFunction, w: &WhitneyDecomposition, params: &JNParams) -> Result<DPResult> {
    params.validate()?;
    let domain = f.domain();
    if w.dim() != domain.dim() || w.resolution() != domain.resolution() {
        return Err(Error::InvalidParameter(
            "Whitney decomposition does not match the domain".into(),
        ));
    }
    let n = domain.dim();
    let resolution = domain.resolution();

    let mut candidates = vec![(FamilyKind::WhitneyStars, vec![0i64; n], w.cubes().to_vec())];
    let mut piece_whitney: HashMap<i32, WhitneyDecomposition> = HashMap::new();
    for shift in params.lattice_shifts(n)? {
        let dp = dyadic_dp(f, params, &shift);
        let mut cubes = Vec::new();
        for q in &dp.partition {
            let wq = match piece_whitney.get(&q.level()) {
                Some(wq) => wq,
                None => {
                    let origin = DyadicCube::new(q.level(), &vec![0; n])?;
                    let wq = whitney(&RasterDomain::from_dyadic_cube(&origin, resolution)?);
                    piece_whitney.entry(q.level()).or_insert(wq)
                }
            };
            cubes.extend(wq.translated(q.level(), &q.coords()));
        }
        candidates.push((FamilyKind::PieceStars, shift[..n].to_vec(), cubes));
    }

    let mut best: Option<DPResult> = None;
    for (family, shift, mut cubes) in candidates {
        if cubes.is_empty() {
            continue;
        }
        cubes.sort();
        let stars: Vec<Cube> = cubes
            .iter()
            .map(|q| q.to_cube_shifted(resolution, &shift).dilate(STAR_DILATION))
            .collect();
        if !stars.iter().all(|s| f.contains_cube(&s.dilate(params.lambda))) {
            continue;
        }
        let overlap = max_overlap(&stars);
        if overlap > params.overlap_bound {
            continue;
        }
        let mut value = 0.0;
        for s in &stars {
            value += s.measure() * f.mean_and_oscillation(s)?.1.powf(params.p);
        }
        if best.as_ref().is_none_or(|b| value > b.value) {
            let covered: f64 = cubes.iter().map(DyadicCube::measure).sum();
            best = Some(DPResult {
                value,
                partition: cubes,
                shift,
                resolution,
                dilation: STAR_DILATION,
                residual_measure: (domain.measure() - covered).max(0.0),
                family,
                max_overlap: overlap,
            });
        }
    }
    best.ok_or(Error::NoLocalPartition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{rasterize, Shape};
    use crate::jnp::{jn_global_dyadic, DEFAULT_LAMBDA};
    use std::sync::Arc;

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

    struct Strip;
    impl Shape for Strip {
        fn dim(&self) -> usize {
            2
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-0.1, -0.1], vec![1.1, 0.2])
        }
        fn contains(&self, x: &[f64]) -> bool {
            x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0 / 16.0
        }
    }

    fn quadrant(x: &[f64]) -> f64 {
        if (x[0] < 0.5) == (x[1] < 0.5) {
            1.0
        } else {
            -1.0
        }
    }

    /// Average of `|f - f_C|` over `C` from a 16x finer sampling of each cell.
    fn sampled_oscillation(f: &GridFunction, c: &Cube) -> f64 {
        let d = f.domain();
        let h = d.cell_side() / 16.0;
        let (x0, y0) = (c.lo(0), c.lo(1));
        let m = (c.side() / h).round() as usize;
        let mut vals = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                let x = [x0 + (a as f64 + 0.5) * h, y0 + (b as f64 + 0.5) * h];
                vals.push(f.value(d.cell_of_point(&x).unwrap()));
            }
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().map(|v| (v - mean).abs()).sum::<f64>() / vals.len() as f64
    }

    #[test]
    fn constant_function_gives_zero() {
        let d = Arc::new(rasterize(&Square, 5).unwrap());
        let f = GridFunction::from_fn(d.clone(), |_| 1.5).unwrap();
        let r = jn_local(&f, &whitney(&d), &JNParams::new(2.0)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn square_stars_fit_after_dilation() {
        let d = Arc::new(rasterize(&Square, 7).unwrap());
        let f = GridFunction::from_fn(d.clone(), |_| 0.0).unwrap();
        let w = whitney(&d);
        for q in w.cubes() {
            let s = q.to_cube().dilate(STAR_DILATION).dilate(DEFAULT_LAMBDA);
            assert!(f.contains_cube(&s), "{q:?}");
            assert!((0..2).all(|k| s.lo(k) >= 0.0 && s.hi(k) <= 1.0));
        }
    }

    #[test]
    fn quadrant_matches_family_enumeration() {
        let d = Arc::new(rasterize(&Square, 5).unwrap());
        let f = GridFunction::from_fn(d.clone(), quadrant).unwrap();
        let w = whitney(&d);
        let params = JNParams::new(2.0);
        let r = jn_local(&f, &w, &params).unwrap();

        // independent candidates: stars of W(G), and of W(Q) for each
        // piece Q of the optimal dyadic partition
        let value = |cubes: &[DyadicCube]| -> f64 {
            cubes
                .iter()
                .map(|q| {
                    let s = q.to_cube().dilate(STAR_DILATION);
                    s.measure() * sampled_oscillation(&f, &s).powi(2)
                })
                .sum()
        };
        let mut best = value(w.cubes());
        let dp = jn_global_dyadic(&f, &params).unwrap();
        let mut pieces = Vec::new();
        for q in &dp.partition {
            let dq = RasterDomain::from_dyadic_cube(q, 5).unwrap();
            pieces.extend_from_slice(whitney(&dq).cubes());
        }
        best = best.max(value(&pieces));
        assert!((r.value - best).abs() < 1e-10, "{} vs {best}", r.value);
        assert!((r.recompute(&f, 2.0).unwrap() - r.value).abs() < 1e-10);
    }

    #[test]
    fn thin_domain_has_no_local_family() {
        let d = Arc::new(rasterize(&Strip, 4).unwrap());
        let f = GridFunction::from_fn(d.clone(), |x| x[0]).unwrap();
        let err = jn_local(&f, &whitney(&d), &JNParams::new(2.0)).unwrap_err();
        assert_eq!(err, Error::NoLocalPartition);
    }
}
