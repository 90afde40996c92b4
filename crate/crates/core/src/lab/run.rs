use std::sync::Arc;

use serde_json::{json, Value};

use super::config::{ExperimentConfig, Pipeline};
use super::domain::DomainSpec;
use super::report::{Aggregate, ExperimentReport, InvariantFailure, ReportItem, REPORT_SCHEMA, REPORT_SCHEMA_VERSION};
use super::LabError;
use crate::dyadic::{whitney, RasterDomain, WhitneyDecomposition};
use crate::error::Error;
use crate::jnp::{
    jn_global_dyadic, local_to_global_ratio, weak_norm_opt_c, weak_type_ratio, DPResult, GridFunction, JNParams,
};
use crate::john::{build_chains, john_probe, verify_chains};
use crate::sobolev::{fractional_weak_quotient, poincare_quotient, weak_poincare_quotient};

/// Relative tolerance for re-evaluating a DP optimum from its partition.
const RECOMPUTE_TOL: f64 = 1e-10;

/// Errors that come from the configuration rather than from the geometry of
/// a particular item.
fn is_parameter_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_)
            | Error::ExponentOutOfRange(_)
            | Error::ExponentNotPositive(_)
            | Error::ExponentNotBelowDimension { .. }
            | Error::SobolevExponentUndefined { .. }
            | Error::UnsupportedDimension(_)
            | Error::InvalidResolution(_)
            | Error::DimensionMismatch { .. }
            | Error::DisconnectedDomain
            | Error::EmptyDomain
            | Error::NotProperSubset
            | Error::CenterOutsideDomain
    )
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    items: Vec<ReportItem>,
    failures: Vec<InvariantFailure>,
}

struct Cell {
    spec_index: usize,
    spec: DomainSpec,
    resolution: i32,
    domain: Arc<RasterDomain>,
    whitney: WhitneyDecomposition,
}

fn dp_summary(r: &DPResult) -> Value {
    json!({
        "value": r.value,
        "family": r.family,
        "cubes": r.partition.len(),
        "shift": r.shift,
        "dilation": r.dilation,
        "residual_measure": r.residual_measure,
        "max_overlap": r.max_overlap,
    })
}

impl<'a> Runner<'a> {
    fn params(&self, p: f64) -> JNParams {
        JNParams {
            p,
            lambda: self.cfg.lambda,
            overlap_bound: self.cfg.overlap_bound,
            max_level: None,
            shifts: self.cfg.shifts.clone(),
        }
    }

    /// Turn a computation error into either a config error (returned) or an
    /// item error plus invariant failure.
    fn absorb(&mut self, mut item: ReportItem, path: &str, e: Error) -> Result<(), LabError> {
        if is_parameter_error(&e) {
            return Err(LabError::config(path, e.to_string()));
        }
        item.error = Some(e.to_string());
        self.fail("computation", vec![self.items.len()], json!({ "error": e.to_string() }));
        self.items.push(item);
        Ok(())
    }

    fn fail(&mut self, check: &str, items: Vec<usize>, witness: Value) {
        self.failures.push(InvariantFailure {
            check: check.to_string(),
            items,
            witness,
        });
    }

    fn push(&mut self, item: ReportItem) -> usize {
        self.items.push(item);
        self.items.len() - 1
    }

    fn cells(&self) -> Result<Vec<Cell>, LabError> {
        let mut out = Vec::new();
        for (i, spec) in self.cfg.domains.iter().enumerate() {
            for &j in &self.cfg.resolutions {
                let domain = spec
                    .generate(j)
                    .map_err(|e| LabError::config(&format!("domains[{i}]"), format!("{spec} at J={j}: {e}")))?;
                let whitney = whitney(&domain);
                out.push(Cell {
                    spec_index: i,
                    spec: spec.clone(),
                    resolution: j,
                    domain: Arc::new(domain),
                    whitney,
                });
            }
        }
        Ok(out)
    }

    fn item(&self, cell: &Cell) -> ReportItem {
        ReportItem::new(cell.spec.to_string(), cell.spec.is_john(), cell.resolution)
    }

    fn functions(&self, cell: &Cell) -> Result<Vec<(usize, GridFunction)>, LabError> {
        self.cfg
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.generate(cell.domain.clone())
                    .map(|g| (i, g))
                    .map_err(|e| LabError::config(&format!("functions[{i}]"), format!("{f} on {}: {e}", cell.spec)))
            })
            .collect()
    }

    fn run_whitney(&mut self) -> Result<(), LabError> {
        let mut by_domain: Vec<Vec<(i32, f64, usize)>> = vec![Vec::new(); self.cfg.domains.len()];
        for cell in self.cells()? {
            let report = cell.whitney.verify(&cell.domain);
            let mut item = self.item(&cell);
            item.residual = Some(report.residual);
            let passes = report.passes();
            item.detail = serde_json::to_value(&report).expect("serializes");
            let idx = self.push(item);
            if !passes {
                self.fail(
                    "whitney_validity",
                    vec![idx],
                    json!({ "violations": report.violations.iter().take(8).collect::<Vec<_>>(),
                            "disjoint": report.disjoint, "contained": report.contained }),
                );
            }
            by_domain[cell.spec_index].push((cell.resolution, report.residual, idx));
        }
        for mut runs in by_domain {
            runs.sort_by_key(|r| r.0);
            for w in runs.windows(2) {
                let ((j0, r0, i0), (j1, r1, i1)) = (w[0], w[1]);
                if j1 > j0 && r0 > 0.0 && r1 >= r0 {
                    self.fail(
                        "residual_decreasing",
                        vec![i0, i1],
                        json!({ "J": [j0, j1], "residual": [r0, r1] }),
                    );
                }
            }
        }
        Ok(())
    }

    fn run_chains(&mut self) -> Result<(), LabError> {
        for cell in self.cells()? {
            let center = cell.spec.john_center();
            let path = format!("domains[{}]", cell.spec_index);
            let probe = match john_probe(&cell.domain, &center, self.cfg.john_samples, self.cfg.seed) {
                Ok(p) => p,
                Err(e) => {
                    self.absorb(self.item(&cell), &path, e)?;
                    continue;
                }
            };
            let beta = probe.beta_estimate;
            let cd = match build_chains(cell.domain.clone(), cell.whitney.clone(), &center) {
                Ok(cd) => cd,
                Err(e) => {
                    let mut item = self.item(&cell);
                    item.detail = json!({ "beta_estimate": beta });
                    self.absorb(item, &path, e)?;
                    continue;
                }
            };
            for &p in &self.cfg.p {
                let mut item = self.item(&cell);
                item.p = Some(p);
                let r = verify_chains(&cd, p).map_err(|e| LabError::config("p", e.to_string()))?;
                item.tau = Some(r.tau);
                item.sigma = Some(r.sigma);
                item.residual = Some(cell.whitney.residual());
                let passes = r.passes();
                item.detail = json!({ "beta_estimate": beta, "conditions": r });
                let idx = self.push(item);
                if cell.spec.is_john() && !passes {
                    let failed: Vec<_> = r.conditions.iter().filter(|c| !c.passed).collect();
                    self.fail("chain_conditions", vec![idx], serde_json::to_value(failed).expect("serializes"));
                }
            }
        }
        Ok(())
    }

    /// Runs `body` over every (domain, J, function, p) cell.
    fn for_each_function_p(
        &mut self,
        mut body: impl FnMut(&mut Self, &Cell, &GridFunction, f64) -> Result<ReportItem, Error>,
        with_p: bool,
    ) -> Result<(), LabError> {
        let ps: Vec<Option<f64>> = if with_p {
            self.cfg.p.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for cell in self.cells()? {
            for (fi, f) in self.functions(&cell)? {
                for &p in &ps {
                    let mut base = self.item(&cell);
                    base.function = Some(self.cfg.functions[fi].to_string());
                    base.p = p;
                    match body(self, &cell, &f, p.unwrap_or(f64::NAN)) {
                        Ok(mut item) => {
                            item.domain = base.domain;
                            item.john = base.john;
                            item.resolution = base.resolution;
                            item.function = base.function;
                            item.p = base.p;
                            let idx = self.push(item);
                            let it = &self.items[idx];
                            if it.john && it.infinite && self.cfg.pipeline != Pipeline::Jn {
                                let w = json!({ "numerator": it.numerator, "denominator": it.denominator });
                                self.fail("finite_on_john_domain", vec![idx], w);
                            }
                        }
                        Err(e) => {
                            let path = if matches!(e, Error::SobolevExponentUndefined { .. }) {
                                "q".to_string()
                            } else {
                                format!("domains[{}]", cell.spec_index)
                            };
                            self.absorb(base, &path, e)?
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn blank() -> ReportItem {
        ReportItem::new(String::new(), false, 0)
    }

    fn run_jn(&mut self) -> Result<(), LabError> {
        self.for_each_function_p(
            |r, _cell, f, p| {
                let res = jn_global_dyadic(f, &r.params(p))?;
                let again = res.recompute(f, p)?;
                let mut item = Self::blank();
                item.numerator = Some(res.value);
                item.residual = Some(res.residual_measure);
                item.detail = json!({ "global": dp_summary(&res), "recomputed": again });
                if (again - res.value).abs() > RECOMPUTE_TOL * res.value.abs().max(1.0) {
                    let idx = r.items.len();
                    r.fail("dp_recompute", vec![idx], json!({ "value": res.value, "recomputed": again }));
                }
                Ok(item)
            },
            true,
        )
    }

    fn run_weak(&mut self) -> Result<(), LabError> {
        self.for_each_function_p(
            |r, cell, f, p| {
                let ratio = weak_type_ratio(f, &cell.whitney, &r.params(p))?;
                let opt = weak_norm_opt_c(f, p)?;
                let mut item = Self::blank();
                item.set_ratio(ratio.numerator, ratio.denominator, ratio.ratio, ratio.infinite);
                item.residual = Some(ratio.residual_measure);
                item.detail = json!({ "mean": f.mean(), "optimal_c": opt });
                Ok(item)
            },
            true,
        )
    }

    fn run_l2g(&mut self) -> Result<(), LabError> {
        self.for_each_function_p(
            |r, cell, f, p| {
                let ratio = local_to_global_ratio(f, &cell.whitney, &r.params(p))?;
                let mut item = Self::blank();
                item.set_ratio(ratio.numerator, ratio.denominator, ratio.ratio, ratio.infinite);
                item.residual = Some(ratio.residual_measure);
                Ok(item)
            },
            true,
        )
    }

    fn run_poincare(&mut self) -> Result<(), LabError> {
        let q = self.cfg.q;
        self.for_each_function_p(
            |_, _, f, _| {
                let strong = poincare_quotient(f, q)?;
                let weak = weak_poincare_quotient(f, q)?;
                let mut item = Self::blank();
                item.set_ratio(strong.lhs, strong.rhs, strong.quotient, strong.infinite);
                item.detail = json!({ "strong": strong, "weak": weak });
                Ok(item)
            },
            false,
        )
    }

    fn run_fractional(&mut self) -> Result<(), LabError> {
        let (q, delta, budget, seed) = (self.cfg.q, self.cfg.delta, self.cfg.pair_budget, self.cfg.seed);
        self.for_each_function_p(
            |_, _, f, _| {
                let r = fractional_weak_quotient(f, q, delta, budget, seed)?;
                let mut item = Self::blank();
                item.set_ratio(r.lhs, r.rhs, r.quotient, r.infinite);
                item.detail = serde_json::to_value(&r).expect("serializes");
                Ok(item)
            },
            false,
        )
    }

    fn run_necessity(&mut self) -> Result<(), LabError> {
        let mut cells = self.cells()?;
        let k_of = |c: &Cell| match c.spec {
            DomainSpec::Cusp { k } => k,
            _ => unreachable!("validated"),
        };
        cells.sort_by(|a, b| a.resolution.cmp(&b.resolution).then(k_of(a).total_cmp(&k_of(b))));
        let mut betas: Vec<(i32, f64, f64, usize)> = Vec::new();
        // (J, function, p) -> [(k, ratio, item)]
        let mut series: Vec<((i32, usize, usize), Vec<(f64, Option<f64>, usize)>)> = Vec::new();
        for cell in &cells {
            let path = format!("domains[{}]", cell.spec_index);
            let probe = john_probe(&cell.domain, &cell.spec.john_center(), self.cfg.john_samples, self.cfg.seed)
                .map_err(|e| LabError::config(&path, e.to_string()))?;
            let k = k_of(cell);
            for (fi, f) in self.functions(cell)? {
                for (pi, &p) in self.cfg.p.iter().enumerate() {
                    let mut item = self.item(cell);
                    item.function = Some(self.cfg.functions[fi].to_string());
                    item.p = Some(p);
                    item.detail = json!({ "k": k, "beta_estimate": probe.beta_estimate });
                    let r = match weak_type_ratio(&f, &cell.whitney, &self.params(p)) {
                        Ok(r) => r,
                        Err(e) => {
                            self.absorb(item, &path, e)?;
                            continue;
                        }
                    };
                    item.set_ratio(r.numerator, r.denominator, r.ratio, r.infinite);
                    item.residual = Some(r.residual_measure);
                    let idx = self.push(item);
                    let ratio = if r.infinite { Some(f64::INFINITY) } else { Some(r.ratio) };
                    let key = (cell.resolution, fi, pi);
                    match series.iter_mut().find(|s| s.0 == key) {
                        Some(s) => s.1.push((k, ratio, idx)),
                        None => series.push((key, vec![(k, ratio, idx)])),
                    }
                    if fi == 0 && pi == 0 {
                        betas.push((cell.resolution, k, probe.beta_estimate, idx));
                    }
                }
            }
        }
        for ((j, fi, pi), s) in series {
            for w in s.windows(2) {
                let (k0, r0, i0) = w[0];
                let (k1, r1, i1) = w[1];
                if !(r1 > r0) {
                    self.fail(
                        "weak_ratio_increasing_in_k",
                        vec![i0, i1],
                        json!({ "J": j, "function": self.cfg.functions[fi].to_string(), "p": self.cfg.p[pi],
                                "k": [k0, k1], "ratio": [r0, r1] }),
                    );
                }
            }
        }
        for w in betas.windows(2) {
            let (j0, k0, b0, i0) = w[0];
            let (j1, k1, b1, i1) = w[1];
            if j0 == j1 && !(b1 > b0) {
                self.fail(
                    "beta_increasing_in_k",
                    vec![i0, i1],
                    json!({ "J": j0, "k": [k0, k1], "beta_estimate": [b0, b1] }),
                );
            }
        }
        Ok(())
    }
}

/// Execute the configured pipeline over the (domain x J x function x p)
/// grid, in that nesting order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, LabError> {
    cfg.validate()?;
    let mut r = Runner {
        cfg,
        items: Vec::new(),
        failures: Vec::new(),
    };
    match cfg.pipeline {
        Pipeline::Whitney => r.run_whitney()?,
        Pipeline::Chains => r.run_chains()?,
        Pipeline::Jn => r.run_jn()?,
        Pipeline::Weak => r.run_weak()?,
        Pipeline::L2g => r.run_l2g()?,
        Pipeline::Poincare => r.run_poincare()?,
        Pipeline::Fractional => r.run_fractional()?,
        Pipeline::NecessitySweep => r.run_necessity()?,
    }
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA,
        schema_version: REPORT_SCHEMA_VERSION,
        toolkit_version: crate::VERSION,
        pipeline: cfg.pipeline,
        seed: cfg.seed,
        params: cfg.clone(),
        aggregate: Aggregate::of(&r.items),
        items: r.items,
        invariant_failures: r.failures,
        wall_clock_seconds: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{validate_report_json, FunctionSpec};

    fn cfg(pipeline: Pipeline) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(pipeline);
        c.resolutions = vec![4];
        c
    }

    #[test]
    fn jn_of_constant_is_zero() {
        let mut c = cfg(Pipeline::Jn);
        c.functions = vec![FunctionSpec::Constant { value: 3.0 }];
        c.p = vec![1.5, 2.0, 3.0];
        let r = run_experiment(&c).unwrap();
        assert!(r.passes());
        assert_eq!(r.items.len(), 3);
        assert!(r.items.iter().all(|i| i.numerator == Some(0.0)));
    }

    #[test]
    fn every_pipeline_runs_and_validates() {
        for p in Pipeline::ALL {
            let mut c = cfg(p);
            if p == Pipeline::NecessitySweep {
                c.resolutions = vec![5];
                c.domains.truncate(2);
            }
            let r = run_experiment(&c).unwrap();
            assert!(!r.items.is_empty(), "{p}");
            let v: Value = serde_json::from_str(&r.to_json()).unwrap();
            validate_report_json(&v).unwrap_or_else(|e| panic!("{p}: {e}"));
            let mut csv = Vec::new();
            r.write_csv(&mut csv).unwrap();
            let text = String::from_utf8(csv).unwrap();
            assert!(text.starts_with("domain,J,function,p,numerator,denominator,ratio,residual,tau,sigma"));
            assert_eq!(text.lines().count(), r.items.len() + 1);
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let mut c = cfg(Pipeline::Weak);
        c.functions = vec![FunctionSpec::HaarSum { depth: 3, seed: 5 }, FunctionSpec::LogDist];
        c.domains = vec![DomainSpec::Lshape];
        c.seed = 17;
        let a = run_experiment(&c).unwrap().to_json();
        let b = run_experiment(&c).unwrap().to_json();
        assert_eq!(a, b);
        assert!(!a.contains("wall_clock"));
    }

    #[test]
    fn poincare_q_outside_range_is_a_config_error() {
        let mut c = cfg(Pipeline::Poincare);
        c.q = 2.0;
        match run_experiment(&c).unwrap_err() {
            LabError::Config { path, .. } => assert_eq!(path, "q"),
            e => panic!("{e}"),
        }
    }
}
