use serde::Serialize;

use super::chains::{star_overlap_ratio, ChainDecomposition, CHAIN_OVERLAP_FLOOR};
use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};

/// Extremal instance of a measured quantity.
#[derive(Clone, Debug, Serialize)]
pub struct ChainWitness {
    /// Terminal cube of the chain involved, when there is one.
    pub terminal: Option<DyadicCube>,
    pub cube: DyadicCube,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub condition: &'static str,
    pub passed: bool,
    pub witness: Option<ChainWitness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainConditionReport {
    pub p: f64,
    pub tau: u32,
    /// Smallest `tau` for the size condition alone.
    pub tau_size: u32,
    /// Smallest `tau` for the per-level count condition alone.
    pub tau_count: u32,
    pub sigma: f64,
    pub shadow_radius_constant: f64,
    pub overlap_constant: f64,
    pub rho: f64,
    pub conditions: Vec<ConditionCheck>,
}

impl ChainConditionReport {
    pub fn passes(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

/// Measure the chain constants: `tau` from the size and per-level count
/// conditions, `sigma` as the largest shadow sum
/// `|R|^-1 sum_{Q in S(R)} |Q| (tau + 1 + k - j)^p`, the shadow radius
/// constant `C` around the nearest complement point `y_R`, and the worst
/// consecutive star overlap.
pub fn verify_chains(cd: &ChainDecomposition, p: f64) -> Result<ChainConditionReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::ExponentOutOfRange(p));
    }
    let cubes = cd.whitney().cubes();
    let domain = cd.domain();

    let mut tau_size = 0i32;
    let mut size_w: Option<ChainWitness> = None;
    let mut max_count = 1usize;
    let mut count_w: Option<ChainWitness> = None;
    let mut overlap = 1.0f64;
    let mut overlap_w: Option<ChainWitness> = None;
    for ch in cd.chains() {
        let q = cubes[ch.terminal as usize];
        let mut levels: Vec<i32> = Vec::with_capacity(ch.len());
        for &r in &ch.cubes {
            let r = cubes[r as usize];
            let gap = r.level() - q.level();
            if gap > tau_size || size_w.is_none() {
                tau_size = tau_size.max(gap);
                size_w = Some(ChainWitness {
                    terminal: Some(q),
                    cube: r,
                    value: gap as f64,
                });
            }
            levels.push(r.level());
        }
        levels.sort_unstable();
        for run in levels.chunk_by(|a, b| a == b) {
            if run.len() > max_count || count_w.is_none() {
                max_count = max_count.max(run.len());
                let cube = ch
                    .cubes
                    .iter()
                    .map(|&r| cubes[r as usize])
                    .find(|r| r.level() == run[0])
                    .expect("level taken from the chain");
                count_w = Some(ChainWitness {
                    terminal: Some(q),
                    cube,
                    value: run.len() as f64,
                });
            }
        }
        for w in ch.cubes.windows(2) {
            let (a, b) = (cubes[w[0] as usize], cubes[w[1] as usize]);
            let r = star_overlap_ratio(&a, &b);
            if r < overlap {
                overlap = r;
                overlap_w = Some(ChainWitness {
                    terminal: Some(q),
                    cube: b,
                    value: r,
                });
            }
        }
    }
    let tau_size = tau_size.max(0) as u32;
    let tau_count = (max_count as f64).log2().ceil() as u32;
    let tau = tau_size.max(tau_count);

    let mut sigma = 0.0f64;
    let mut sigma_w: Option<ChainWitness> = None;
    let mut radius = 0.0f64;
    let mut radius_w: Option<ChainWitness> = None;
    for (ri, shadow) in cd.shadows().iter().enumerate() {
        let r = cubes[ri];
        let j = r.level();
        let sum: f64 = shadow
            .iter()
            .map(|&q| {
                let q = cubes[q as usize];
                q.measure() * (tau as f64 + 1.0 + (q.level() - j) as f64).powf(p)
            })
            .sum::<f64>()
            / r.measure();
        if sum > sigma {
            sigma = sum;
            sigma_w = Some(ChainWitness {
                terminal: None,
                cube: r,
                value: sum,
            });
        }
        let (_, y) = domain.nearest_complement_center(&r.center());
        for &q in shadow {
            let q = cubes[q as usize];
            let c = q.to_cube().max_distance_from(&y) / r.side();
            if c > radius {
                radius = c;
                radius_w = Some(ChainWitness {
                    terminal: Some(q),
                    cube: r,
                    value: c,
                });
            }
        }
    }

    let conditions = vec![
        ConditionCheck {
            condition: "size",
            passed: true,
            witness: size_w,
        },
        ConditionCheck {
            condition: "count",
            passed: max_count as f64 <= 2f64.powi(tau as i32),
            witness: count_w,
        },
        ConditionCheck {
            condition: "shadow_sum",
            passed: cd.chains().is_empty() || (sigma.is_finite() && sigma > 0.0),
            witness: sigma_w,
        },
        ConditionCheck {
            condition: "shadow_radius",
            passed: radius.is_finite(),
            witness: radius_w,
        },
        ConditionCheck {
            condition: "star_overlap",
            passed: overlap >= CHAIN_OVERLAP_FLOOR,
            witness: overlap_w,
        },
    ];
    Ok(ChainConditionReport {
        p,
        tau,
        tau_size,
        tau_count,
        sigma,
        shadow_radius_constant: radius,
        overlap_constant: overlap,
        rho: cd.rho(),
        conditions,
    })
}
