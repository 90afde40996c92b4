use std::sync::Arc;

use serde::Serialize;

use super::dp::check_p;
use super::{distribution, jn_global_dyadic, jn_local, GridFunction, JNParams};
use crate::dyadic::{star, WhitneyDecomposition};
use crate::error::{Error, Result};
use crate::john::ChainDecomposition;

/// `numerator / denominator` with `0/0 = 0`; `x/0` for `x > 0` is flagged
/// as infinite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub infinite: bool,
    /// Measure of the domain left uncovered by the denominator's family.
    pub residual_measure: f64,
}

impl RatioReport {
    pub fn new(numerator: f64, denominator: f64, residual_measure: f64) -> Self {
        let (ratio, infinite) = if denominator > 0.0 {
            (numerator / denominator, false)
        } else if numerator == 0.0 {
            (0.0, false)
        } else {
            (f64::INFINITY, true)
        };
        Self {
            numerator,
            denominator,
            ratio,
            infinite,
            residual_measure,
        }
    }

    pub fn is_finite(&self) -> bool {
        !self.infinite
    }
}

/// `sup_sigma sigma^p |{|f - f_G| > sigma}|` over the localized functional
/// of `f` (see [`jn_local`]).
pub fn weak_type_ratio(f: &GridFunction, w: &WhitneyDecomposition, params: &JNParams) -> Result<RatioReport> {
    params.validate()?;
    if !f.domain().is_connected() {
        return Err(Error::DisconnectedDomain);
    }
    let num = distribution(f, f.mean()).weak_norm(params.p);
    let local = jn_local(f, w, params)?;
    Ok(RatioReport::new(num, local.value, local.residual_measure))
}

/// Dyadic partition functional over the localized functional.
pub fn local_to_global_ratio(f: &GridFunction, w: &WhitneyDecomposition, params: &JNParams) -> Result<RatioReport> {
    params.validate()?;
    let global = jn_global_dyadic(f, params)?;
    let local = jn_local(f, w, params)?;
    Ok(RatioReport::new(global.value, local.value, local.residual_measure))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub infinite: bool,
}

/// Compare `(avg_G |f - f_{Q0*}|)^p + (avg_G |f - f_G|)^p` with
/// `|G|^-1 sum_{Q in W(G)} |Q*| (avg_{Q*} |f - f_{Q*}|)^p`, where `Q0` is the
/// center cube of the chain decomposition.
pub fn lemma_chain_bound(
    f: &GridFunction,
    cd: Option<&ChainDecomposition>,
    p: f64,
) -> Result<ChainBoundReport> {
    check_p(p)?;
    let cd = cd.ok_or(Error::ChainsMissing)?;
    let domain = f.domain();
    if !Arc::ptr_eq(domain, cd.domain()) && **domain != **cd.domain() {
        return Err(Error::InvalidParameter(
            "chain decomposition belongs to another domain".into(),
        ));
    }
    let (q0_mean, _) = f.mean_and_oscillation(&star(&cd.center_cube()))?;
    let f_g = f.mean();
    let vals = f.values();
    let count = vals.len() as f64;
    let dev0: f64 = vals.iter().map(|v| (v - q0_mean).abs()).sum::<f64>() / count;
    let dev_g: f64 = vals.iter().map(|v| (v - f_g).abs()).sum::<f64>() / count;
    let lhs = dev0.powf(p) + dev_g.powf(p);
    let mut rhs = 0.0;
    for q in cd.whitney().cubes() {
        let s = star(q);
        rhs += s.measure() * f.mean_and_oscillation(&s)?.1.powf(p);
    }
    rhs /= domain.measure();
    let r = RatioReport::new(lhs, rhs, 0.0);
    Ok(ChainBoundReport {
        lhs,
        rhs,
        ratio: r.ratio,
        infinite: r.infinite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{rasterize, whitney, Shape};
    use crate::john::build_chains;

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

    struct TwoSquares;
    impl Shape for TwoSquares {
        fn dim(&self) -> usize {
            2
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-0.1, -0.1], vec![2.6, 1.1])
        }
        fn contains(&self, x: &[f64]) -> bool {
            x[1] > 0.0 && x[1] < 1.0 && ((x[0] > 0.0 && x[0] < 1.0) || (x[0] > 1.5 && x[0] < 2.5))
        }
    }

    fn quadrant(x: &[f64]) -> f64 {
        if (x[0] < 0.5) == (x[1] < 0.5) {
            1.0
        } else {
            -1.0
        }
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(RatioReport::new(0.0, 0.0, 0.0).ratio, 0.0);
        let r = RatioReport::new(1.0, 0.0, 0.0);
        assert!(r.infinite && r.ratio.is_infinite());
        assert_eq!(RatioReport::new(1.0, 4.0, 0.0).ratio, 0.25);
    }

    #[test]
    fn constant_function_has_zero_ratios() {
        let d = Arc::new(rasterize(&Square, 5).unwrap());
        let f = GridFunction::from_fn(d.clone(), |_| 0.3).unwrap();
        let w = whitney(&d);
        let p = JNParams::new(2.0);
        assert_eq!(weak_type_ratio(&f, &w, &p).unwrap().ratio, 0.0);
        assert_eq!(local_to_global_ratio(&f, &w, &p).unwrap().ratio, 0.0);
        let cd = build_chains(d, w, &[0.5, 0.5]).unwrap();
        let b = lemma_chain_bound(&f, Some(&cd), 2.0).unwrap();
        assert_eq!((b.lhs, b.rhs, b.ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn half_indicator_numerator_is_one_quarter() {
        let d = Arc::new(rasterize(&Square, 6).unwrap());
        let f = GridFunction::from_fn(d.clone(), |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let r = weak_type_ratio(&f, &whitney(&d), &JNParams::new(2.0)).unwrap();
        assert!((r.numerator - 0.25).abs() < 1e-15);
        assert!(r.denominator > 0.0 && r.ratio.is_finite());
    }

    #[test]
    fn disconnected_domain_is_rejected() {
        let d = Arc::new(rasterize(&TwoSquares, 4).unwrap());
        let f = GridFunction::from_fn(d.clone(), |x| x[0]).unwrap();
        let err = weak_type_ratio(&f, &whitney(&d), &JNParams::new(2.0)).unwrap_err();
        assert_eq!(err, Error::DisconnectedDomain);
    }

    #[test]
    fn chain_bound_needs_chains_and_is_finite() {
        let d = Arc::new(rasterize(&Square, 6).unwrap());
        let f = GridFunction::from_fn(d.clone(), quadrant).unwrap();
        assert_eq!(lemma_chain_bound(&f, None, 2.0).unwrap_err(), Error::ChainsMissing);
        let cd = build_chains(d.clone(), whitney(&d), &[0.5, 0.5]).unwrap();
        let b = lemma_chain_bound(&f, Some(&cd), 2.0).unwrap();
        assert!(b.rhs > 0.0 && b.ratio.is_finite() && !b.infinite);
    }
}
