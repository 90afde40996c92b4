//! C ABI over `jnp-core`.
//!
//! Objects cross the boundary as opaque handles (`JnpDomain`,
//! `JnpFunction`) created by `jnp_*_new*` / `jnp_*_from_*` and released by
//! the matching `*_free`. Every fallible call returns a [`JnpStatus`]; on
//! failure a message is available from [`jnp_last_error_message`] on the same
//! thread. Panics never unwind into C: they are caught and reported as
//! `JNP_STATUS_PANIC`.
//!
//! Strings returned by the library are owned by the caller and must be
//! released with [`jnp_string_free`].

// The entry points are called from C, where `unsafe` has no meaning; the
// pointer contract is documented on each function instead.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::{Arc, OnceLock};

use jnp_core::dyadic::{whitney, RasterDomain, WhitneyDecomposition};
use jnp_core::jnp::{
    distribution, jn_global_dyadic, jn_local, local_to_global_ratio, weak_norm_opt_c, weak_type_ratio,
    GridFunction, JNParams, RatioReport,
};
use jnp_core::john::john_probe;
use jnp_core::lab::{run_experiment, ConfigDocument, DomainSpec, FunctionSpec, LabError};
use jnp_core::sobolev::{poincare_quotient, QuotientReport};
use jnp_core::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JnpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    EmptyDomain = 4,
    UnsupportedDimension = 5,
    ExponentOutOfRange = 6,
    CenterOutsideDomain = 7,
    ChainConstructionFailed = 8,
    CubeNotContained = 9,
    NoLocalPartition = 10,
    DisconnectedDomain = 11,
    DomainMismatch = 12,
    InvalidConfig = 13,
    /// The experiment ran but an invariant failed; the report is still
    /// returned.
    InvariantFailed = 14,
    Io = 15,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(JnpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::EmptyDomain | Error::NotProperSubset => JnpStatus::EmptyDomain,
            Error::UnsupportedDimension(_) => JnpStatus::UnsupportedDimension,
            Error::ExponentOutOfRange(_)
            | Error::ExponentNotPositive(_)
            | Error::ExponentNotBelowDimension { .. }
            | Error::SobolevExponentUndefined { .. } => JnpStatus::ExponentOutOfRange,
            Error::CenterOutsideDomain | Error::CenterCubeMissing | Error::SampleUnreachable(_) => {
                JnpStatus::CenterOutsideDomain
            }
            Error::ChainConstructionFailed { .. } | Error::ChainsMissing => JnpStatus::ChainConstructionFailed,
            Error::CubeNotContained => JnpStatus::CubeNotContained,
            Error::NoLocalPartition => JnpStatus::NoLocalPartition,
            Error::DisconnectedDomain => JnpStatus::DisconnectedDomain,
            Error::InvalidResolution(_) | Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => {
                JnpStatus::InvalidArgument
            }
        };
        Failure(status, e.to_string())
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        let status = match e {
            LabError::Config { .. } => JnpStatus::InvalidConfig,
            LabError::Io { .. } | LabError::Output(_) => JnpStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: JnpStatus, msg: &str) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

/// Run `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> JnpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => JnpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            JnpStatus::Panic
        }
    }
}

fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass either null or a pointer obtained from this library
    unsafe { p.as_ref() }.ok_or_else(|| Failure(JnpStatus::NullPointer, format!("{what} is null")))
}

fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a valid, writable pointer
    unsafe { p.as_mut() }.ok_or_else(|| Failure(JnpStatus::NullPointer, format!("{what} is null")))
}

fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(JnpStatus::NullPointer, &format!("{what} is null"));
    }
    // SAFETY: non-null, and callers pass a nul-terminated string
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(JnpStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(JnpStatus::NullPointer, &format!("{what} is null"));
    }
    // SAFETY: non-null, and callers guarantee `len` readable elements
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// A rasterized domain together with its lazily computed Whitney
/// decomposition.
pub struct JnpDomain {
    domain: Arc<RasterDomain>,
    whitney: OnceLock<WhitneyDecomposition>,
}

impl JnpDomain {
    fn new(domain: RasterDomain) -> Self {
        Self {
            domain: Arc::new(domain),
            whitney: OnceLock::new(),
        }
    }

    fn whitney(&self) -> &WhitneyDecomposition {
        self.whitney.get_or_init(|| whitney(&self.domain))
    }
}

/// A function on the cells of a domain.
pub struct JnpFunction {
    f: GridFunction,
}

fn same_domain(d: &JnpDomain, f: &JnpFunction) -> Result<(), Failure> {
    if Arc::ptr_eq(&d.domain, f.f.domain()) || *d.domain == **f.f.domain() {
        Ok(())
    } else {
        fail(JnpStatus::DomainMismatch, "function was built on another domain")
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Version string of the library; static, do not free.
#[no_mangle]
pub extern "C" fn jnp_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(jnp_core::VERSION).expect("no nul"))
        .as_ptr()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn jnp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Rasterize a corpus domain such as `"square"`, `"cusp:3"` or
/// `"rooms:3,0.1"` at resolution `resolution`.
#[no_mangle]
pub extern "C" fn jnp_domain_from_spec(
    spec: *const c_char,
    resolution: i32,
    out_domain: *mut *mut JnpDomain,
) -> JnpStatus {
    guard(|| {
        let slot = out(out_domain, "out_domain")?;
        *slot = ptr::null_mut();
        let spec: DomainSpec = text(spec, "spec")?.parse()?;
        *slot = boxed(JnpDomain::new(spec.generate(resolution)?));
        Ok(())
    })
}

/// Build a domain from an occupancy grid of `extent[0] * .. * extent[dim-1]`
/// bytes (nonzero = inside), axis 0 varying fastest, whose first cell has
/// level-`resolution` index `origin`.
#[no_mangle]
pub extern "C" fn jnp_domain_from_occupancy(
    dim: usize,
    resolution: i32,
    origin: *const i64,
    extent: *const usize,
    occupancy: *const u8,
    out_domain: *mut *mut JnpDomain,
) -> JnpStatus {
    guard(|| {
        let slot = out(out_domain, "out_domain")?;
        *slot = ptr::null_mut();
        if dim == 0 || dim > jnp_core::dyadic::MAX_DIM {
            return Err(Error::UnsupportedDimension(dim).into());
        }
        let origin = slice(origin, dim, "origin")?;
        let extent = slice(extent, dim, "extent")?;
        let total = extent
            .iter()
            .try_fold(1usize, |a, &e| a.checked_mul(e))
            .ok_or_else(|| Failure(JnpStatus::InvalidArgument, "extent overflows".into()))?;
        let occ: Vec<bool> = slice(occupancy, total, "occupancy")?.iter().map(|&b| b != 0).collect();
        let d = RasterDomain::from_occupancy(dim, resolution, origin, extent, &occ)?;
        *slot = boxed(JnpDomain::new(d));
        Ok(())
    })
}

/// Release a domain; null is ignored.
#[no_mangle]
pub extern "C" fn jnp_domain_free(domain: *mut JnpDomain) {
    if !domain.is_null() {
        // SAFETY: the pointer came from Box::into_raw in this library
        drop(unsafe { Box::from_raw(domain) });
    }
}

#[no_mangle]
pub extern "C" fn jnp_domain_dim(domain: *const JnpDomain, out_dim: *mut usize) -> JnpStatus {
    guard(|| {
        *out(out_dim, "out_dim")? = deref(domain, "domain")?.domain.dim();
        Ok(())
    })
}

/// Number of occupied cells.
#[no_mangle]
pub extern "C" fn jnp_domain_cell_count(domain: *const JnpDomain, out_count: *mut usize) -> JnpStatus {
    guard(|| {
        *out(out_count, "out_count")? = deref(domain, "domain")?.domain.occupied_count();
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn jnp_domain_measure(domain: *const JnpDomain, out_measure: *mut f64) -> JnpStatus {
    guard(|| {
        *out(out_measure, "out_measure")? = deref(domain, "domain")?.domain.measure();
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct JnpWhitneySummary {
    pub cube_count: usize,
    pub coarsest_level: i32,
    pub finest_level: i32,
    pub covered_measure: f64,
    pub residual: f64,
    /// Disjointness, containment and the distance bounds all hold.
    pub valid: bool,
}

#[no_mangle]
pub extern "C" fn jnp_whitney_summary(domain: *const JnpDomain, out_summary: *mut JnpWhitneySummary) -> JnpStatus {
    guard(|| {
        let slot = out(out_summary, "out_summary")?;
        let d = deref(domain, "domain")?;
        let w = d.whitney();
        let levels = w.by_level();
        *slot = JnpWhitneySummary {
            cube_count: w.len(),
            coarsest_level: levels.keys().next().copied().unwrap_or(0),
            finest_level: levels.keys().next_back().copied().unwrap_or(0),
            covered_measure: w.covered_measure(),
            residual: w.residual(),
            valid: w.verify(&d.domain).passes(),
        };
        Ok(())
    })
}

/// Upper estimate of the John constant about `center` from `samples`
/// random cells (all cells when `samples` reaches the cell count).
#[no_mangle]
pub extern "C" fn jnp_john_beta(
    domain: *const JnpDomain,
    center: *const f64,
    center_len: usize,
    samples: usize,
    seed: u64,
    out_beta: *mut f64,
) -> JnpStatus {
    guard(|| {
        let slot = out(out_beta, "out_beta")?;
        let d = deref(domain, "domain")?;
        let x0 = slice(center, center_len, "center")?;
        *slot = john_probe(&d.domain, x0, samples, seed)?.beta_estimate;
        Ok(())
    })
}

/// Function from a corpus spec such as `"quadrant"`, `"logDist"` or
/// `"haarSum:3,7"`.
#[no_mangle]
pub extern "C" fn jnp_function_from_spec(
    domain: *const JnpDomain,
    spec: *const c_char,
    out_function: *mut *mut JnpFunction,
) -> JnpStatus {
    guard(|| {
        let slot = out(out_function, "out_function")?;
        *slot = ptr::null_mut();
        let d = deref(domain, "domain")?;
        let spec: FunctionSpec = text(spec, "spec")?.parse()?;
        *slot = boxed(JnpFunction {
            f: spec.generate(d.domain.clone())?,
        });
        Ok(())
    })
}

/// Function from one value per occupied cell, in the domain's cell order
/// (axis 0 varying fastest).
#[no_mangle]
pub extern "C" fn jnp_function_from_values(
    domain: *const JnpDomain,
    values: *const f64,
    len: usize,
    out_function: *mut *mut JnpFunction,
) -> JnpStatus {
    guard(|| {
        let slot = out(out_function, "out_function")?;
        *slot = ptr::null_mut();
        let d = deref(domain, "domain")?;
        let v = slice(values, len, "values")?;
        *slot = boxed(JnpFunction {
            f: GridFunction::new(d.domain.clone(), v)?,
        });
        Ok(())
    })
}

/// Release a function; null is ignored.
#[no_mangle]
pub extern "C" fn jnp_function_free(function: *mut JnpFunction) {
    if !function.is_null() {
        // SAFETY: the pointer came from Box::into_raw in this library
        drop(unsafe { Box::from_raw(function) });
    }
}

/// Copy the values into `buffer` (in cell order); `len` must equal the
/// cell count.
#[no_mangle]
pub extern "C" fn jnp_function_values(function: *const JnpFunction, buffer: *mut f64, len: usize) -> JnpStatus {
    guard(|| {
        let f = &deref(function, "function")?.f;
        let v = f.values();
        if v.len() != len {
            return fail(JnpStatus::InvalidArgument, &format!("buffer holds {len} values, need {}", v.len()));
        }
        if len > 0 {
            if buffer.is_null() {
                return fail(JnpStatus::NullPointer, "buffer is null");
            }
            // SAFETY: non-null with room for `len` values, checked above
            unsafe { std::slice::from_raw_parts_mut(buffer, len) }.copy_from_slice(&v);
        }
        Ok(())
    })
}

fn params(p: f64, lambda: f64) -> JNParams {
    let mut params = JNParams::new(p);
    if lambda > 0.0 {
        params.lambda = lambda;
    }
    params
}

/// Dyadic partition functional `sup_P sum |Q| (avg_Q |f - f_Q|)^p`.
#[no_mangle]
pub extern "C" fn jnp_jn_global(function: *const JnpFunction, p: f64, out_value: *mut f64) -> JnpStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = jn_global_dyadic(&deref(function, "function")?.f, &JNParams::new(p))?.value;
        Ok(())
    })
}

/// Localized functional over the local families of the domain. `lambda <= 0`
/// selects the default dilation. `out_residual` may be null.
#[no_mangle]
pub extern "C" fn jnp_jn_local(
    domain: *const JnpDomain,
    function: *const JnpFunction,
    p: f64,
    lambda: f64,
    out_value: *mut f64,
    out_residual: *mut f64,
) -> JnpStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let d = deref(domain, "domain")?;
        let f = deref(function, "function")?;
        same_domain(d, f)?;
        let r = jn_local(&f.f, d.whitney(), &params(p, lambda))?;
        *slot = r.value;
        // SAFETY: null or writable
        if let Some(res) = unsafe { out_residual.as_mut() } {
            *res = r.residual_measure;
        }
        Ok(())
    })
}

/// `sup_sigma sigma^p |{|f - c| > sigma}|`.
#[no_mangle]
pub extern "C" fn jnp_weak_norm(function: *const JnpFunction, c: f64, p: f64, out_value: *mut f64) -> JnpStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        if !(p > 0.0 && p.is_finite() && c.is_finite()) {
            return fail(JnpStatus::InvalidArgument, "need finite c and p > 0");
        }
        *slot = distribution(&deref(function, "function")?.f, c).weak_norm(p);
        Ok(())
    })
}

/// Weak norm minimized over the center `c`. `out_c` may be null.
#[no_mangle]
pub extern "C" fn jnp_weak_norm_opt(
    function: *const JnpFunction,
    p: f64,
    out_value: *mut f64,
    out_c: *mut f64,
) -> JnpStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let r = weak_norm_opt_c(&deref(function, "function")?.f, p)?;
        *slot = r.weak_norm;
        // SAFETY: null or writable
        if let Some(c) = unsafe { out_c.as_mut() } {
            *c = r.c;
        }
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct JnpRatio {
    pub numerator: f64,
    pub denominator: f64,
    /// `0` for `0/0`; infinite (with `infinite` set) for `x/0`, `x > 0`.
    pub ratio: f64,
    pub infinite: bool,
    pub residual: f64,
}

impl From<RatioReport> for JnpRatio {
    fn from(r: RatioReport) -> Self {
        Self {
            numerator: r.numerator,
            denominator: r.denominator,
            ratio: r.ratio,
            infinite: r.infinite,
            residual: r.residual_measure,
        }
    }
}

type RatioFn = fn(&GridFunction, &WhitneyDecomposition, &JNParams) -> jnp_core::Result<RatioReport>;

fn ratio(
    domain: *const JnpDomain,
    function: *const JnpFunction,
    p: f64,
    lambda: f64,
    out_ratio: *mut JnpRatio,
    which: RatioFn,
) -> JnpStatus {
    guard(|| {
        let slot = out(out_ratio, "out_ratio")?;
        let d = deref(domain, "domain")?;
        let f = deref(function, "function")?;
        same_domain(d, f)?;
        *slot = which(&f.f, d.whitney(), &params(p, lambda))?.into();
        Ok(())
    })
}

/// Weak norm about the mean over the localized functional.
#[no_mangle]
pub extern "C" fn jnp_weak_type_ratio(
    domain: *const JnpDomain,
    function: *const JnpFunction,
    p: f64,
    lambda: f64,
    out_ratio: *mut JnpRatio,
) -> JnpStatus {
    ratio(domain, function, p, lambda, out_ratio, weak_type_ratio)
}

/// Dyadic partition functional over the localized functional.
#[no_mangle]
pub extern "C" fn jnp_local_to_global_ratio(
    domain: *const JnpDomain,
    function: *const JnpFunction,
    p: f64,
    lambda: f64,
    out_ratio: *mut JnpRatio,
) -> JnpStatus {
    ratio(domain, function, p, lambda, out_ratio, local_to_global_ratio)
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct JnpQuotient {
    pub q_star: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub quotient: f64,
    pub infinite: bool,
    pub near_exponent_boundary: bool,
}

impl From<QuotientReport> for JnpQuotient {
    fn from(r: QuotientReport) -> Self {
        Self {
            q_star: r.q_star,
            lhs: r.lhs,
            rhs: r.rhs,
            quotient: r.quotient,
            infinite: r.infinite,
            near_exponent_boundary: r.near_exponent_boundary,
        }
    }
}

/// `int |f - f_G|^{q*}` over `(int |grad f|^q)^{q*/q}` for `1 <= q < n`.
#[no_mangle]
pub extern "C" fn jnp_poincare_quotient(function: *const JnpFunction, q: f64, out_quotient: *mut JnpQuotient) -> JnpStatus {
    guard(|| {
        let slot = out(out_quotient, "out_quotient")?;
        *slot = poincare_quotient(&deref(function, "function")?.f, q)?.into();
        Ok(())
    })
}

/// Run an experiment described by a TOML configuration document and return
/// the JSON report through `out_json` (free it with [`jnp_string_free`]).
/// When an invariant fails the report is still returned, together with
/// `JNP_STATUS_INVARIANT_FAILED`.
#[no_mangle]
pub extern "C" fn jnp_run_experiment_json(config_toml: *const c_char, out_json: *mut *mut c_char) -> JnpStatus {
    let mut invariant_failed = false;
    let status = guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        let cfg = ConfigDocument::from_toml_str(text(config_toml, "config_toml")?)?.resolve()?;
        let report = run_experiment(&cfg)?;
        invariant_failed = !report.passes();
        let json = CString::new(report.to_json()).expect("JSON has no nul bytes");
        *slot = json.into_raw();
        Ok(())
    });
    if status == JnpStatus::Ok && invariant_failed {
        set_last_error("an experiment invariant failed; see invariant_failures in the report".into());
        JnpStatus::InvariantFailed
    } else {
        status
    }
}

/// Release a string returned by this library; null is ignored.
#[no_mangle]
pub extern "C" fn jnp_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the pointer came from CString::into_raw in this library
        drop(unsafe { CString::from_raw(s) });
    }
}
