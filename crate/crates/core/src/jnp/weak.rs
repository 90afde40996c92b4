use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::dp::check_p;
use super::GridFunction;
use crate::error::Result;

/// Distribution of `|f - c|` on the raster.
#[derive(Clone, Debug, Serialize)]
pub struct DistributionProfile {
    pub c: f64,
    /// Distinct positive values of `|f - c|`, ascending.
    pub sigmas: Vec<f64>,
    /// `|{|f - c| > sigma_i}|`.
    pub measures: Vec<f64>,
    /// `|{|f - c| >= sigma_i}|`, the measure just below the jump at `sigma_i`.
    pub tail_measures: Vec<f64>,
}

impl DistributionProfile {
    /// `sup_{sigma > 0} sigma^p |{|f - c| > sigma}|`, attained as
    /// `sigma -> sigma_i` from below for some jump `sigma_i`.
    pub fn weak_norm(&self, p: f64) -> f64 {
        self.sigmas
            .iter()
            .zip(&self.tail_measures)
            .map(|(s, m)| s.powf(p) * m)
            .fold(0.0, f64::max)
    }

    /// `|{|f - c| > sigma}|` for any `sigma >= 0`.
    pub fn measure_above(&self, sigma: f64) -> f64 {
        match self.sigmas.iter().position(|&s| s > sigma) {
            Some(i) => self.tail_measures[i],
            None => 0.0,
        }
    }
}

pub fn distribution(f: &GridFunction, c: f64) -> DistributionProfile {
    let vol = f.domain().cell_volume();
    let mut dev: Vec<f64> = f.values().iter().map(|v| (v - c).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let total = dev.len();
    let mut sigmas = Vec::new();
    let mut measures = Vec::new();
    let mut tail_measures = Vec::new();
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j < total && dev[j] == dev[i] {
            j += 1;
        }
        if dev[i] > 0.0 {
            sigmas.push(dev[i]);
            tail_measures.push((total - i) as f64 * vol);
            measures.push((total - j) as f64 * vol);
        }
        i = j;
    }
    DistributionProfile {
        c,
        sigmas,
        measures,
        tail_measures,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakOptimum {
    pub c: f64,
    pub weak_norm: f64,
    /// Certified lower bound on `inf_c` of the weak norm.
    pub lower_bound: f64,
}

/// Distinct sorted values with their measures.
struct Levels {
    v: Vec<f64>,
    m: Vec<f64>,
}

impl Levels {
    fn new(f: &GridFunction) -> Self {
        let vol = f.domain().cell_volume();
        let mut vals = f.values();
        vals.sort_by(f64::total_cmp);
        let mut v: Vec<f64> = Vec::new();
        let mut m: Vec<f64> = Vec::new();
        for x in vals {
            if v.last() == Some(&x) {
                *m.last_mut().unwrap() += vol;
            } else {
                v.push(x);
                m.push(vol);
            }
        }
        Self { v, m }
    }

    /// `sup_sigma sigma^p (|{f <= a - sigma}| + |{f >= b + sigma}|)` for
    /// `a <= b`. This is the weak norm at `c` when `a = b = c`, and a lower
    /// bound for it at every `c` in `[a, b]`.
    fn bound(&self, a: f64, b: f64, p: f64) -> f64 {
        let (v, m) = (&self.v, &self.m);
        let (mut l, mut r) = (0usize, v.len());
        let mut acc = 0.0;
        let mut best: f64 = 0.0;
        while l < r {
            let dl = a - v[l];
            let dr = v[r - 1] - b;
            let d = dl.max(dr);
            if d <= 0.0 {
                break;
            }
            if dl == d {
                acc += m[l];
                l += 1;
            }
            if dr == d && l < r {
                acc += m[r - 1];
                r -= 1;
            }
            best = best.max(d.powf(p) * acc);
        }
        best
    }
}

struct Node {
    lb: f64,
    a: f64,
    b: f64,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // reversed: the heap pops the smallest bound, then the leftmost interval
    fn cmp(&self, o: &Self) -> Ordering {
        o.lb.total_cmp(&self.lb).then(o.a.total_cmp(&self.a))
    }
}

/// Relative gap at which the search stops.
const REL_TOL: f64 = 1e-12;
const MAX_NODES: usize = 200_000;

/// Minimize the weak norm over the centering constant `c`.
///
/// The minimizer is in general not a data value or a midpoint of two (for
/// `f = 1_E` with `|E| = |G|/2` it is `1/(1 + 2^(1/p))`), so the search is a
/// branch and bound over `[min f, max f]` with the interval bound above.
pub fn weak_norm_opt_c(f: &GridFunction, p: f64) -> Result<WeakOptimum> {
    check_p(p)?;
    let lv = Levels::new(f);
    let (lo, hi) = (lv.v[0], *lv.v.last().unwrap());
    if lo == hi {
        return Ok(WeakOptimum {
            c: lo,
            weak_norm: 0.0,
            lower_bound: 0.0,
        });
    }
    let mut best_c = lo;
    let mut best = lv.bound(lo, lo, p);
    let consider = |c: f64, best_c: &mut f64, best: &mut f64| {
        let w = lv.bound(c, c, p);
        if w < *best {
            *best = w;
            *best_c = c;
        }
    };
    for c in [hi, 0.5 * (lo + hi), f.mean()] {
        consider(c, &mut best_c, &mut best);
    }
    let min_width = (hi - lo) * 1e-15;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        lb: lv.bound(lo, hi, p),
        a: lo,
        b: hi,
    });
    // smallest bound among intervals left unexplored
    let mut lower = f64::INFINITY;
    let mut nodes = 0;
    while let Some(node) = heap.pop() {
        if node.lb >= best * (1.0 - REL_TOL) || nodes >= MAX_NODES {
            lower = lower.min(node.lb);
            break;
        }
        nodes += 1;
        let mid = 0.5 * (node.a + node.b);
        consider(mid, &mut best_c, &mut best);
        if node.b - node.a <= min_width {
            lower = lower.min(node.lb);
            continue;
        }
        for (a, b) in [(node.a, mid), (mid, node.b)] {
            let lb = lv.bound(a, b, p);
            if lb < best * (1.0 - REL_TOL) {
                heap.push(Node { lb, a, b });
            }
        }
    }
    Ok(WeakOptimum {
        c: best_c,
        weak_norm: best,
        lower_bound: lower.min(best),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{rasterize, RasterDomain, Shape};
    use crate::error::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
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

    fn unit_square(j: i32) -> Arc<RasterDomain> {
        Arc::new(rasterize(&Square, j).unwrap())
    }

    /// Weak norm from the definition, scanning sigma just below each value.
    fn weak_brute(f: &GridFunction, c: f64, p: f64) -> f64 {
        let vol = f.domain().cell_volume();
        let vals = f.values();
        vals.iter()
            .map(|v| {
                let s = (v - c).abs();
                let m = vals.iter().filter(|w| (*w - c).abs() >= s).count() as f64 * vol;
                s.powf(p) * m
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn indicator_weak_norm_is_its_measure() {
        let d = unit_square(5);
        let f = GridFunction::from_fn(d, |x| if x[0] < 0.25 && x[1] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        for p in [1.5, 2.0, 4.0] {
            let prof = distribution(&f, 0.0);
            assert_eq!(prof.sigmas, vec![1.0]);
            assert!((prof.weak_norm(p) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_profile_is_empty() {
        let d = unit_square(4);
        let f = GridFunction::from_fn(d, |_| 2.5).unwrap();
        let prof = distribution(&f, 2.5);
        assert!(prof.sigmas.is_empty());
        assert_eq!(prof.weak_norm(2.0), 0.0);
        let opt = weak_norm_opt_c(&f, 2.0).unwrap();
        assert_eq!((opt.c, opt.weak_norm), (2.5, 0.0));
    }

    #[test]
    fn linear_function_weak_norm_near_one_over_27() {
        let d = unit_square(8);
        let f = GridFunction::from_fn(d, |x| x[0]).unwrap();
        let w = distribution(&f, 0.5).weak_norm(2.0);
        assert!((w - 1.0 / 27.0).abs() < 0.02 / 27.0, "{w}");
    }

    #[test]
    fn profile_is_monotone_and_matches_definition() {
        let d = unit_square(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..256).map(|_| (rng.gen_range(0..9) as f64) * 0.5).collect();
        let f = GridFunction::new(d, &vals).unwrap();
        let prof = distribution(&f, 1.3);
        assert!(prof.measures.windows(2).all(|w| w[0] >= w[1]));
        assert!(prof.measures.iter().all(|&m| (0.0..=1.0).contains(&m)));
        for p in [1.5, 3.0] {
            assert!((prof.weak_norm(p) - weak_brute(&f, 1.3, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn half_indicator_optimum_is_not_in_the_finite_set() {
        let d = unit_square(4);
        let f = GridFunction::from_fn(d, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let opt = weak_norm_opt_c(&f, p).unwrap();
            let c = 1.0 / (1.0 + 2f64.powf(1.0 / p));
            let w = c.powf(p);
            assert!((opt.c - c).abs() < 1e-6, "p={p}: {} vs {c}", opt.c);
            assert!((opt.weak_norm - w).abs() < 1e-10 * w);
            // the values and their midpoint all do worse
            for c in [0.0, 0.5, 1.0] {
                assert!(weak_brute(&f, c, p) > opt.weak_norm);
            }
            assert!((weak_brute(&f, 0.5, p) - 0.5f64.powf(p)).abs() < 1e-15);
        }
    }

    #[test]
    fn random_function_beats_dense_sweep() {
        let d = unit_square(4);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let vals: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = GridFunction::new(d, &vals).unwrap();
        let opt = weak_norm_opt_c(&f, 2.0).unwrap();
        let lo = vals.iter().copied().fold(f64::MAX, f64::min);
        let hi = vals.iter().copied().fold(f64::MIN, f64::max);
        let mut sweep = f64::MAX;
        for i in 0..=10_000 {
            let c = lo + (hi - lo) * i as f64 / 10_000.0;
            sweep = sweep.min(distribution(&f, c).weak_norm(2.0));
        }
        assert!(opt.weak_norm <= sweep + 1e-15);
        assert!(sweep - opt.weak_norm < 1e-3 * sweep);
        assert!(opt.lower_bound <= opt.weak_norm);
        assert!(opt.weak_norm - opt.lower_bound <= 1e-10 * opt.weak_norm);
        assert!((distribution(&f, opt.c).weak_norm(2.0) - opt.weak_norm).abs() < 1e-15);
    }

    #[test]
    fn p_is_checked() {
        let d = unit_square(3);
        let f = GridFunction::from_fn(d, |x| x[0]).unwrap();
        assert_eq!(weak_norm_opt_c(&f, 0.5).unwrap_err(), Error::ExponentOutOfRange(0.5));
    }
}
