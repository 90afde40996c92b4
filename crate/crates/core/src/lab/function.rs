use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::RasterDomain;
use crate::error::{Error, Result};
use crate::jnp::GridFunction;

/// A member of the test function corpus, evaluated at cell centers.
///
/// Text form: `constant:v`, `halfIndicator:axis`, `quadrant`, `linear:axis`,
/// `logDist`, `distPow:alpha`, `radialPow:beta[@x,y,..]`,
/// `haarSum:depth[,seed]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum FunctionSpec {
    Constant { value: f64 },
    /// 1 below the midpoint of the domain's extent along `axis`, 0 above.
    HalfIndicator { axis: usize },
    /// +1 on the lower-left and upper-right quadrants about the center of the
    /// domain's extent, -1 on the other two (first two axes).
    Quadrant,
    Linear { axis: usize },
    /// `log(1 / dist(x, dG))`.
    LogDist,
    /// `dist(x, dG)^-alpha`.
    DistPow { alpha: f64 },
    /// `max(|x - center|, h)^-beta`; `center` defaults to the origin.
    RadialPow {
        beta: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// Random Haar expansion down to `depth` dyadic generations of the
    /// domain's bounding cube.
    HaarSum {
        depth: u32,
        #[serde(default)]
        seed: u64,
    },
}

impl FunctionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            FunctionSpec::Constant { value } if !value.is_finite() => bad(format!("constant must be finite, got {value}")),
            FunctionSpec::HalfIndicator { axis } | FunctionSpec::Linear { axis } if *axis >= crate::dyadic::MAX_DIM => {
                bad(format!("axis {axis} out of range"))
            }
            FunctionSpec::DistPow { alpha } if !(alpha.is_finite() && *alpha >= 0.0) => {
                bad(format!("distPow exponent must be finite and >= 0, got {alpha}"))
            }
            FunctionSpec::RadialPow { beta, center } => {
                if !(beta.is_finite() && *beta >= 0.0) {
                    bad(format!("radialPow exponent must be finite and >= 0, got {beta}"))
                } else if center.as_ref().is_some_and(|c| c.iter().any(|t| !t.is_finite())) {
                    bad("radialPow center must be finite".into())
                } else {
                    Ok(())
                }
            }
            FunctionSpec::HaarSum { depth, .. } if *depth > 12 => bad(format!("haarSum depth must be at most 12, got {depth}")),
            _ => Ok(()),
        }
    }

    /// Evaluate on `domain`. Singular kinds are finite on every occupied
    /// cell: the distance field is at least half a cell there, and
    /// `radialPow` is clamped at one cell side.
    pub fn generate(&self, domain: Arc<RasterDomain>) -> Result<GridFunction> {
        self.validate()?;
        let n = domain.dim();
        let axis_ok = |axis: usize| {
            if axis < n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("axis {axis} out of range for dimension {n}")))
            }
        };
        let (lo, hi) = occupied_extent(&domain);
        let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let d = domain.clone();
        match self {
            FunctionSpec::Constant { value } => GridFunction::from_cells(domain, |_| *value),
            FunctionSpec::HalfIndicator { axis } => {
                axis_ok(*axis)?;
                GridFunction::from_fn(domain, |x| if x[*axis] < mid[*axis] { 1.0 } else { 0.0 })
            }
            FunctionSpec::Quadrant => {
                if n < 2 {
                    return Err(Error::UnsupportedDimension(n));
                }
                GridFunction::from_fn(domain, |x| {
                    if (x[0] < mid[0]) == (x[1] < mid[1]) {
                        1.0
                    } else {
                        -1.0
                    }
                })
            }
            FunctionSpec::Linear { axis } => {
                axis_ok(*axis)?;
                GridFunction::from_fn(domain, |x| x[*axis])
            }
            FunctionSpec::LogDist => GridFunction::from_cells(domain, |c| -d.distance(c).ln()),
            FunctionSpec::DistPow { alpha } => GridFunction::from_cells(domain, |c| d.distance(c).powf(-alpha)),
            FunctionSpec::RadialPow { beta, center } => {
                let x0 = center.clone().unwrap_or_else(|| vec![0.0; n]);
                if x0.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: x0.len(),
                    });
                }
                let h = domain.cell_side();
                GridFunction::from_fn(domain, |x| {
                    let r = x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    r.max(h).powf(-beta)
                })
            }
            FunctionSpec::HaarSum { depth, seed } => {
                if *depth as usize * n > 18 {
                    return Err(Error::InvalidParameter(format!(
                        "haarSum depth {depth} too large for dimension {n}"
                    )));
                }
                let haar = HaarSum::new(&lo, &hi, *depth, *seed);
                GridFunction::from_fn(domain, |x| haar.eval(x))
            }
        }
    }
}

pub fn gen_function(spec: &FunctionSpec, domain: Arc<RasterDomain>) -> Result<GridFunction> {
    spec.generate(domain)
}

/// Bounding box of the occupied cells.
fn occupied_extent(domain: &RasterDomain) -> (Vec<f64>, Vec<f64>) {
    let n = domain.dim();
    let h = domain.cell_side();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for &c in domain.occupied_cells() {
        let x = domain.cell_center(c);
        for k in 0..n {
            lo[k] = lo[k].min(x[k] - 0.5 * h);
            hi[k] = hi[k].max(x[k] + 0.5 * h);
        }
    }
    (lo, hi)
}

/// `sum_Q sum_k a_{Q,k} h_{Q,k}` over dyadic subcubes `Q` of the bounding
/// cube down to the given depth, with `h_{Q,k}` equal to +1 on the lower half
/// of `Q` along axis `k` and -1 on the upper half. Coefficients are uniform
/// on [-1, 1] and drawn in a fixed order.
struct HaarSum {
    lo: Vec<f64>,
    side: f64,
    depth: u32,
    coeffs: Vec<Vec<f64>>,
}

impl HaarSum {
    fn new(lo: &[f64], hi: &[f64], depth: u32, seed: u64) -> Self {
        let n = lo.len();
        let side = lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..depth)
            .map(|j| {
                let cubes = 1usize << (j as usize * n);
                (0..cubes * n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
            })
            .collect();
        Self {
            lo: lo.to_vec(),
            side,
            depth,
            coeffs,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let n = self.lo.len();
        let u: Vec<f64> = x
            .iter()
            .zip(&self.lo)
            .map(|(t, l)| ((t - l) / self.side).clamp(0.0, 1.0 - 1e-15))
            .collect();
        let mut total = 0.0;
        for j in 0..self.depth {
            let m = (1u64 << j) as f64;
            let mut index = 0usize;
            for &t in &u {
                index = index * (1 << j) + (t * m).floor() as usize;
            }
            for (k, &t) in u.iter().enumerate() {
                let sign = if (t * m).fract() < 0.5 { 1.0 } else { -1.0 };
                total += self.coeffs[j as usize][index * n + k] * sign;
            }
        }
        total
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Constant { value } => write!(f, "constant:{value}"),
            FunctionSpec::HalfIndicator { axis } => write!(f, "halfIndicator:{axis}"),
            FunctionSpec::Quadrant => write!(f, "quadrant"),
            FunctionSpec::Linear { axis } => write!(f, "linear:{axis}"),
            FunctionSpec::LogDist => write!(f, "logDist"),
            FunctionSpec::DistPow { alpha } => write!(f, "distPow:{alpha}"),
            FunctionSpec::RadialPow { beta, center: None } => write!(f, "radialPow:{beta}"),
            FunctionSpec::RadialPow {
                beta,
                center: Some(c),
            } => {
                let c: Vec<String> = c.iter().map(|t| t.to_string()).collect();
                write!(f, "radialPow:{beta}@{}", c.join(","))
            }
            FunctionSpec::HaarSum { depth, seed } => write!(f, "haarSum:{depth},{seed}"),
        }
    }
}

fn num<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad function parameter {s:?}")))
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let arg = || args.ok_or_else(|| Error::InvalidParameter(format!("function {kind:?} needs a parameter")));
        let spec = match kind {
            "constant" => FunctionSpec::Constant { value: num(arg()?)? },
            "halfIndicator" => FunctionSpec::HalfIndicator {
                axis: args.map_or(Ok(0), num)?,
            },
            "quadrant" if args.is_none() => FunctionSpec::Quadrant,
            "linear" => FunctionSpec::Linear {
                axis: args.map_or(Ok(0), num)?,
            },
            "logDist" if args.is_none() => FunctionSpec::LogDist,
            "distPow" => FunctionSpec::DistPow { alpha: num(arg()?)? },
            "radialPow" => {
                let a = arg()?;
                let (beta, center) = match a.split_once('@') {
                    Some((b, c)) => (num(b)?, Some(c.split(',').map(num).collect::<Result<Vec<f64>>>()?)),
                    None => (num(a)?, None),
                };
                FunctionSpec::RadialPow { beta, center }
            }
            "haarSum" => {
                let a = arg()?;
                let (depth, seed) = match a.split_once(',') {
                    Some((d, s)) => (num(d)?, num(s)?),
                    None => (num(a)?, 0),
                };
                FunctionSpec::HaarSum { depth, seed }
            }
            _ => return Err(Error::InvalidParameter(format!("unknown function {s:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FunctionEntry {
    Text(String),
    Spec(FunctionSpec),
}

impl FunctionEntry {
    pub fn resolve(self) -> Result<FunctionSpec> {
        match self {
            FunctionEntry::Text(s) => s.parse(),
            FunctionEntry::Spec(f) => {
                f.validate()?;
                Ok(f)
            }
        }
    }
}
