//! Gradients and Poincaré-type quotients on raster functions.
//!
//! For `1 <= q < n` the Sobolev exponent is `q* = nq / (n - q)`; the
//! fractional variant with smoothness `delta` uses `nq / (n - delta q)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::MAX_DIM;
use crate::error::{Error, Result};
use crate::jnp::{weak_norm_opt_c, GridFunction, RatioReport};

/// Parameters closer than this fraction to an exponent limit are flagged.
const BOUNDARY_MARGIN: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuotientReport {
    pub q: f64,
    /// The left-hand exponent: `q*` or, with `delta`, `nq / (n - delta q)`.
    pub q_star: f64,
    pub delta: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub quotient: f64,
    pub infinite: bool,
    /// Within 5% of an end of the admissible exponent range.
    pub near_exponent_boundary: bool,
    /// Ordered cell pairs evaluated for the fractional double sum.
    pub pairs_evaluated: Option<u64>,
    pub pairs_exact: Option<bool>,
}

/// `nq / (n - q)` for `1 <= q < n`.
pub fn sobolev_exponent(q: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if !(q >= 1.0 && q < nf) {
        return Err(Error::SobolevExponentUndefined { q, n });
    }
    Ok(nf * q / (nf - q))
}

/// Per-axis difference quotients on occupied cells, listed like
/// `occupied_cells()`: forward where the next cell is occupied, backward
/// where only the previous one is, zero otherwise.
pub fn gradient(f: &GridFunction) -> Vec<Vec<f64>> {
    let d = f.domain();
    let n = d.dim();
    let h = d.cell_side();
    d.occupied_cells()
        .iter()
        .map(|&c| {
            let base = d.cell_coords(c);
            (0..n)
                .map(|k| {
                    let nb = |delta: i64| {
                        let mut a = [0i64; MAX_DIM];
                        a[..n].copy_from_slice(&base);
                        a[k] += delta;
                        d.index(&a).filter(|&i| d.is_occupied(i))
                    };
                    if let Some(i) = nb(1) {
                        (f.value(i) - f.value(c)) / h
                    } else if let Some(i) = nb(-1) {
                        (f.value(c) - f.value(i)) / h
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// `(int |grad f|^q)^(exponent / q)`.
fn gradient_term(f: &GridFunction, q: f64, exponent: f64) -> f64 {
    let vol = f.domain().cell_volume();
    let s: f64 = gradient(f)
        .iter()
        .map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt().powf(q))
        .sum();
    (s * vol).powf(exponent / q)
}

fn report(q: f64, q_star: f64, delta: Option<f64>, lhs: f64, rhs: f64, near: bool) -> QuotientReport {
    let r = RatioReport::new(lhs, rhs, 0.0);
    QuotientReport {
        q,
        q_star,
        delta,
        lhs,
        rhs,
        quotient: r.ratio,
        infinite: r.infinite,
        near_exponent_boundary: near,
        pairs_evaluated: None,
        pairs_exact: None,
    }
}

/// `int |f - f_G|^{q*}` over `(int |grad f|^q)^{q*/q}`.
pub fn poincare_quotient(f: &GridFunction, q: f64) -> Result<QuotientReport> {
    let n = f.domain().dim();
    let qs = sobolev_exponent(q, n)?;
    let mean = f.mean();
    let vol = f.domain().cell_volume();
    let lhs: f64 = f.values().iter().map(|v| (v - mean).abs().powf(qs)).sum::<f64>() * vol;
    let rhs = gradient_term(f, q, qs);
    let near = q >= (1.0 - BOUNDARY_MARGIN) * n as f64;
    Ok(report(q, qs, None, lhs, rhs, near))
}

/// Weak norm of exponent `q*` (optimally centered) over
/// `(int |grad f|^q)^{q*/q}`.
pub fn weak_poincare_quotient(f: &GridFunction, q: f64) -> Result<QuotientReport> {
    let n = f.domain().dim();
    let qs = sobolev_exponent(q, n)?;
    let lhs = weak_norm_opt_c(f, qs)?.weak_norm;
    let rhs = gradient_term(f, q, qs);
    let near = q >= (1.0 - BOUNDARY_MARGIN) * n as f64;
    Ok(report(q, qs, None, lhs, rhs, near))
}

/// Weak norm of exponent `p = nq / (n - delta q)` over
/// `(sum_{x != y} |f(x) - f(y)|^q / |x - y|^{n + delta q} |cell|^2)^{p/q}`.
///
/// The double sum over ordered pairs of distinct cells is exact when the
/// squared cell count fits in `pair_budget`; otherwise `pair_budget` pairs
/// are drawn uniformly with replacement and the mean is scaled up, which is
/// unbiased.
pub fn fractional_weak_quotient(
    f: &GridFunction,
    q: f64,
    delta: f64,
    pair_budget: u64,
    seed: u64,
) -> Result<QuotientReport> {
    let d = f.domain();
    let n = d.dim();
    let nf = n as f64;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(q > 1.0 && q < nf / delta) {
        return Err(Error::InvalidParameter(format!(
            "q must satisfy 1 < q < n/delta = {}, got {q}",
            nf / delta
        )));
    }
    if pair_budget == 0 {
        return Err(Error::InvalidParameter("pair budget must be positive".into()));
    }
    let p = nf * q / (nf - delta * q);
    let (base, pairs, exact) = fractional_double_sum(f, q, delta, pair_budget, seed);
    let lhs = weak_norm_opt_c(f, p)?.weak_norm;
    let rhs = base.powf(p / q);
    let near = q <= 1.0 + BOUNDARY_MARGIN || q >= (1.0 - BOUNDARY_MARGIN) * nf / delta;
    let mut r = report(q, p, Some(delta), lhs, rhs, near);
    r.pairs_evaluated = Some(pairs);
    r.pairs_exact = Some(exact);
    Ok(r)
}

/// The double sum of the fractional seminorm, its pair count, and whether it
/// is exact.
pub fn fractional_double_sum(
    f: &GridFunction,
    q: f64,
    delta: f64,
    pair_budget: u64,
    seed: u64,
) -> (f64, u64, bool) {
    let d = f.domain();
    let n = d.dim();
    let vol = d.cell_volume();
    let s = n as f64 + delta * q;
    let cells = d.occupied_cells();
    let centers: Vec<Vec<f64>> = cells.iter().map(|&c| d.cell_center(c)).collect();
    let vals = f.values();
    let term = |i: usize, j: usize| {
        let r2: f64 = (0..n).map(|k| (centers[i][k] - centers[j][k]).powi(2)).sum();
        (vals[i] - vals[j]).abs().powf(q) / r2.powf(0.5 * s)
    };
    let m = cells.len() as u64;
    if m < 2 {
        return (0.0, 0, true);
    }
    if m * m <= pair_budget {
        let mut sum = 0.0;
        for i in 0..cells.len() {
            for j in 0..cells.len() {
                if i != j {
                    sum += term(i, j);
                }
            }
        }
        return (sum * vol * vol, m * (m - 1), true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..pair_budget {
        let i = rng.gen_range(0..cells.len());
        let mut j = rng.gen_range(0..cells.len() - 1);
        if j >= i {
            j += 1;
        }
        sum += term(i, j);
    }
    let scale = (m * (m - 1)) as f64 / pair_budget as f64;
    (sum * scale * vol * vol, pair_budget, false)
}
