use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dyadic::{rasterize, RasterDomain, Shape};
use crate::error::{Error, Result};

/// Gap between consecutive rooms of `rooms(m, w)`.
pub const ROOM_GAP: f64 = 0.25;

/// A member of the domain corpus.
///
/// Text form: `square`, `rect:a,b`, `lshape`, `koch:d`, `cusp:k`,
/// `rooms:m,w`, `ball[:n]`, `cube:n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    /// `(0,1)^2`.
    Square,
    /// `(0,a) x (0,b)`.
    Rect { a: f64, b: f64 },
    /// The unit square without its upper right quarter.
    Lshape,
    /// Koch snowflake polygon after `depth` refinements, scaled into the unit box.
    Koch { depth: u32 },
    /// `{0 < x < 1, |y| < x^k}`: an outward cusp at the origin.
    Cusp { k: f64 },
    /// `count` unit rooms in a row joined at mid height by necks of width `neck_width`.
    Rooms { count: u32, neck_width: f64 },
    /// Unit ball centered at the origin.
    Ball {
        #[serde(default = "two")]
        dim: usize,
    },
    /// `(0,1)^n`.
    Cube { dim: usize },
}

fn two() -> usize {
    2
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            DomainSpec::Rect { a, b } if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) => {
                bad(format!("rect sides must be positive, got {a}, {b}"))
            }
            DomainSpec::Koch { depth } if depth > 6 => bad(format!("koch depth must be at most 6, got {depth}")),
            DomainSpec::Cusp { k } if !(1.0..=16.0).contains(&k) => bad(format!("cusp exponent must lie in [1, 16], got {k}")),
            DomainSpec::Rooms { count, neck_width }
                if count == 0 || !(neck_width > 0.0 && neck_width < 1.0) =>
            {
                bad(format!(
                    "rooms needs count >= 1 and neck width in (0, 1), got {count}, {neck_width}"
                ))
            }
            DomainSpec::Ball { dim } | DomainSpec::Cube { dim } if !(1..=3).contains(&dim) => {
                Err(Error::UnsupportedDimension(dim))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            DomainSpec::Ball { dim } | DomainSpec::Cube { dim } => dim,
            _ => 2,
        }
    }

    /// Whether the domain is a John domain (the ones without are the cusps
    /// and the rooms).
    pub fn is_john(&self) -> bool {
        !matches!(self, DomainSpec::Cusp { .. } | DomainSpec::Rooms { .. })
    }

    /// The John center used for curves and chains.
    pub fn john_center(&self) -> Vec<f64> {
        match *self {
            DomainSpec::Square | DomainSpec::Koch { .. } => vec![0.5, 0.5],
            DomainSpec::Rect { a, b } => vec![0.5 * a, 0.5 * b],
            DomainSpec::Lshape => vec![0.25, 0.25],
            DomainSpec::Cusp { .. } => vec![0.75, 0.0],
            DomainSpec::Rooms { count, .. } => {
                let mid = (count / 2) as f64 * (1.0 + ROOM_GAP);
                vec![mid + 0.5, 0.5]
            }
            DomainSpec::Ball { dim } => vec![0.0; dim],
            DomainSpec::Cube { dim } => vec![0.5; dim],
        }
    }

    /// Rasterize at resolution `J`.
    pub fn generate(&self, resolution: i32) -> Result<RasterDomain> {
        self.validate()?;
        let shape = self.shape();
        rasterize(shape.as_ref(), resolution)
    }

    pub fn shape(&self) -> Box<dyn Shape> {
        match *self {
            DomainSpec::Square => Box::new(BoxShape::unit(2)),
            DomainSpec::Cube { dim } => Box::new(BoxShape::unit(dim)),
            DomainSpec::Rect { a, b } => Box::new(BoxShape {
                hi: vec![a, b],
            }),
            DomainSpec::Lshape => Box::new(Lshape),
            DomainSpec::Koch { depth } => Box::new(Polygon::koch(depth)),
            DomainSpec::Cusp { k } => Box::new(Cusp { k }),
            DomainSpec::Rooms { count, neck_width } => Box::new(Rooms {
                count,
                neck: neck_width,
            }),
            DomainSpec::Ball { dim } => Box::new(Ball { dim }),
        }
    }
}

pub fn gen_domain(spec: &DomainSpec, resolution: i32) -> Result<RasterDomain> {
    spec.generate(resolution)
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Square => write!(f, "square"),
            DomainSpec::Rect { a, b } => write!(f, "rect:{a},{b}"),
            DomainSpec::Lshape => write!(f, "lshape"),
            DomainSpec::Koch { depth } => write!(f, "koch:{depth}"),
            DomainSpec::Cusp { k } => write!(f, "cusp:{k}"),
            DomainSpec::Rooms { count, neck_width } => write!(f, "rooms:{count},{neck_width}"),
            DomainSpec::Ball { dim } => write!(f, "ball:{dim}"),
            DomainSpec::Cube { dim } => write!(f, "cube:{dim}"),
        }
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad {what} parameter {t:?}")))
        })
        .collect()
}

impl FromStr for DomainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let need = |n: usize| -> Result<&str> {
            match args {
                Some(a) if a.split(',').count() == n => Ok(a),
                _ => Err(Error::InvalidParameter(format!(
                    "domain {kind:?} takes {n} parameter(s)"
                ))),
            }
        };
        let spec = match kind {
            "square" if args.is_none() => DomainSpec::Square,
            "lshape" if args.is_none() => DomainSpec::Lshape,
            "rect" => {
                let v: Vec<f64> = parse_list(need(2)?, "rect")?;
                DomainSpec::Rect { a: v[0], b: v[1] }
            }
            "koch" => DomainSpec::Koch {
                depth: parse_list(need(1)?, "koch")?[0],
            },
            "cusp" => DomainSpec::Cusp {
                k: parse_list(need(1)?, "cusp")?[0],
            },
            "rooms" => {
                let a = need(2)?;
                let (m, w) = a.split_once(',').expect("two parameters");
                DomainSpec::Rooms {
                    count: parse_list(m, "rooms")?[0],
                    neck_width: parse_list(w, "rooms")?[0],
                }
            }
            "ball" => DomainSpec::Ball {
                dim: match args {
                    None => 2,
                    Some(_) => parse_list(need(1)?, "ball")?[0],
                },
            },
            "cube" => DomainSpec::Cube {
                dim: parse_list(need(1)?, "cube")?[0],
            },
            _ => return Err(Error::InvalidParameter(format!("unknown domain {s:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Either the text form or the keyed form, for config documents.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum DomainEntry {
    Text(String),
    Spec(DomainSpec),
}

impl DomainEntry {
    pub fn resolve(self) -> Result<DomainSpec> {
        match self {
            DomainEntry::Text(s) => s.parse(),
            DomainEntry::Spec(d) => {
                d.validate()?;
                Ok(d)
            }
        }
    }
}

/// Margin added around each shape's closure for the raster bounding box.
const MARGIN: f64 = 1.0 / 16.0;

fn padded(lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ext = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| b - a)
        .fold(0.0, f64::max);
    let m = MARGIN * ext;
    (
        lo.iter().map(|v| v - m).collect(),
        hi.iter().map(|v| v + m).collect(),
    )
}

struct BoxShape {
    hi: Vec<f64>,
}

impl BoxShape {
    fn unit(dim: usize) -> Self {
        Self { hi: vec![1.0; dim] }
    }
}

impl Shape for BoxShape {
    fn dim(&self) -> usize {
        self.hi.len()
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        padded(&vec![0.0; self.hi.len()], &self.hi)
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.hi).all(|(&t, &h)| t > 0.0 && t < h)
    }
}

struct Lshape;

impl Shape for Lshape {
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        padded(&[0.0, 0.0], &[1.0, 1.0])
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&t| t > 0.0 && t < 1.0) && (x[0] < 0.5 || x[1] < 0.5)
    }
}

struct Cusp {
    k: f64,
}

impl Shape for Cusp {
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        padded(&[0.0, -1.0], &[1.0, 1.0])
    }
    fn contains(&self, x: &[f64]) -> bool {
        x[0] > 0.0 && x[0] < 1.0 && x[1].abs() < x[0].powf(self.k)
    }
}

struct Rooms {
    count: u32,
    neck: f64,
}

impl Shape for Rooms {
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let len = self.count as f64 * (1.0 + ROOM_GAP) - ROOM_GAP;
        padded(&[0.0, 0.0], &[len, 1.0])
    }
    fn contains(&self, x: &[f64]) -> bool {
        let (px, py) = (x[0], x[1]);
        if !(py > 0.0 && py < 1.0 && px > 0.0) {
            return false;
        }
        let period = 1.0 + ROOM_GAP;
        let i = (px / period).floor();
        if i >= self.count as f64 {
            return false;
        }
        let local = px - i * period;
        if local < 1.0 {
            return true;
        }
        // in the gap after room i: only the neck, and only between rooms
        i + 1.0 < self.count as f64 && (py - 0.5).abs() < 0.5 * self.neck
    }
}

struct Ball {
    dim: usize,
}

impl Shape for Ball {
    fn dim(&self) -> usize {
        self.dim
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        padded(&vec![-1.0; self.dim], &vec![1.0; self.dim])
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().map(|t| t * t).sum::<f64>() < 1.0
    }
}

/// A simple closed polygon, membership by the even-odd rule.
struct Polygon {
    vertices: Vec<[f64; 2]>,
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Polygon {
    fn new(vertices: Vec<[f64; 2]>) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        Self { vertices, lo, hi }
    }

    /// Koch snowflake after `depth` refinements, scaled so that its bounding
    /// box is centered in the unit square with longest side 1.
    fn koch(depth: u32) -> Self {
        let h = 3f64.sqrt() / 2.0;
        let mut pts = vec![[0.0, 0.0], [0.5, h], [1.0, 0.0]];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(pts.len() * 4);
            for i in 0..pts.len() {
                let a = pts[i];
                let b = pts[(i + 1) % pts.len()];
                let d = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
                let p1 = [a[0] + d[0], a[1] + d[1]];
                let p2 = [a[0] + 2.0 * d[0], a[1] + 2.0 * d[1]];
                // bump pointing outward (vertices run clockwise)
                let tip = [
                    p1[0] + 0.5 * d[0] - h * d[1],
                    p1[1] + 0.5 * d[1] + h * d[0],
                ];
                next.extend_from_slice(&[a, p1, tip, p2]);
            }
            pts = next;
        }
        let raw = Polygon::new(pts);
        let ext = (raw.hi[0] - raw.lo[0]).max(raw.hi[1] - raw.lo[1]);
        let off = [
            0.5 - 0.5 * (raw.hi[0] - raw.lo[0]) / ext,
            0.5 - 0.5 * (raw.hi[1] - raw.lo[1]) / ext,
        ];
        Polygon::new(
            raw.vertices
                .iter()
                .map(|v| {
                    [
                        (v[0] - raw.lo[0]) / ext + off[0],
                        (v[1] - raw.lo[1]) / ext + off[1],
                    ]
                })
                .collect(),
        )
    }
}

impl Shape for Polygon {
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        padded(&self.lo, &self.hi)
    }
    fn contains(&self, x: &[f64]) -> bool {
        let (px, py) = (x[0], x[1]);
        if px <= self.lo[0] || px >= self.hi[0] || py <= self.lo[1] || py >= self.hi[1] {
            return false;
        }
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[j]);
            if (a[1] > py) != (b[1] > py) {
                let t = (py - a[1]) / (b[1] - a[1]);
                if px < a[0] + t * (b[0] - a[0]) {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }
}
