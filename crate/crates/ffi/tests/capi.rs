use std::ffi::{CStr, CString};
use std::ptr;

use jnp_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = jnp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn domain(spec: &str, j: i32) -> *mut JnpDomain {
    let mut d = ptr::null_mut();
    assert_eq!(jnp_domain_from_spec(cstr(spec).as_ptr(), j, &mut d), JnpStatus::Ok);
    assert!(!d.is_null());
    d
}

fn function(d: *const JnpDomain, spec: &str) -> *mut JnpFunction {
    let mut f = ptr::null_mut();
    assert_eq!(jnp_function_from_spec(d, cstr(spec).as_ptr(), &mut f), JnpStatus::Ok);
    f
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(jnp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn domain_queries_and_whitney_summary() {
    let d = domain("square", 3);
    let mut n = 0usize;
    assert_eq!(jnp_domain_cell_count(d, &mut n), JnpStatus::Ok);
    assert_eq!(n, 64);
    let mut dim = 0usize;
    assert_eq!(jnp_domain_dim(d, &mut dim), JnpStatus::Ok);
    assert_eq!(dim, 2);
    let mut m = 0.0;
    assert_eq!(jnp_domain_measure(d, &mut m), JnpStatus::Ok);
    assert_eq!(m, 1.0);
    let mut w = JnpWhitneySummary::default();
    assert_eq!(jnp_whitney_summary(d, &mut w), JnpStatus::Ok);
    assert!(w.valid && w.cube_count > 0);
    assert!((w.covered_measure + w.residual - 1.0).abs() < 1e-12);
    assert!(w.coarsest_level <= w.finest_level);
    jnp_domain_free(d);
}

#[test]
fn occupancy_constructor_matches_spec() {
    let occ = [1u8; 8 * 8];
    let (origin, extent) = ([0i64, 0], [8usize, 8]);
    let mut d = ptr::null_mut();
    let st = jnp_domain_from_occupancy(2, 3, origin.as_ptr(), extent.as_ptr(), occ.as_ptr(), &mut d);
    assert_eq!(st, JnpStatus::Ok);
    let mut n = 0usize;
    jnp_domain_cell_count(d, &mut n);
    assert_eq!(n, 64);
    jnp_domain_free(d);

    let empty = [0u8; 4];
    let st = jnp_domain_from_occupancy(2, 3, origin.as_ptr(), [2usize, 2].as_ptr(), empty.as_ptr(), &mut d);
    assert_eq!(st, JnpStatus::EmptyDomain);
    assert!(d.is_null());
}

#[test]
fn functionals_through_handles() {
    let d = domain("square", 5);
    let f = function(d, "quadrant");
    let mut g = 0.0;
    assert_eq!(jnp_jn_global(f, 2.0, &mut g), JnpStatus::Ok);
    assert!((g - 1.0).abs() < 1e-12);
    let (mut loc, mut res) = (0.0, -1.0);
    assert_eq!(jnp_jn_local(d, f, 2.0, 0.0, &mut loc, &mut res), JnpStatus::Ok);
    assert!(loc > 0.0 && res >= 0.0);
    let mut r = JnpRatio::default();
    assert_eq!(jnp_weak_type_ratio(d, f, 2.0, 0.0, &mut r), JnpStatus::Ok);
    assert!(!r.infinite && r.ratio > 0.0);
    assert_eq!(jnp_local_to_global_ratio(d, f, 2.0, 0.0, &mut r), JnpStatus::Ok);
    assert!((r.numerator - g).abs() < 1e-12);
    let (mut w, mut c) = (0.0, f64::NAN);
    assert_eq!(jnp_weak_norm_opt(f, 2.0, &mut w, &mut c), JnpStatus::Ok);
    assert!(w > 0.0 && c.is_finite());
    let mut w0 = 0.0;
    assert_eq!(jnp_weak_norm(f, 0.0, 2.0, &mut w0), JnpStatus::Ok);
    assert_eq!(w0, 1.0);
    let mut beta = 0.0;
    let center = [0.5, 0.5];
    assert_eq!(jnp_john_beta(d, center.as_ptr(), 2, 64, 1, &mut beta), JnpStatus::Ok);
    assert!(beta.is_finite() && beta >= 1.0);
    jnp_function_free(f);

    let lin = function(d, "linear:0");
    let mut q = JnpQuotient::default();
    assert_eq!(jnp_poincare_quotient(lin, 1.0, &mut q), JnpStatus::Ok);
    assert_eq!(q.q_star, 2.0);
    assert!((q.quotient - 1.0 / 12.0).abs() < 0.01);
    jnp_function_free(lin);
    jnp_domain_free(d);
}

#[test]
fn values_round_trip() {
    let d = domain("lshape", 3);
    let mut n = 0usize;
    jnp_domain_cell_count(d, &mut n);
    let vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
    let mut f = ptr::null_mut();
    assert_eq!(jnp_function_from_values(d, vals.as_ptr(), n, &mut f), JnpStatus::Ok);
    let mut back = vec![0.0; n];
    assert_eq!(jnp_function_values(f, back.as_mut_ptr(), n), JnpStatus::Ok);
    assert_eq!(back, vals);
    assert_eq!(jnp_function_values(f, back.as_mut_ptr(), n - 1), JnpStatus::InvalidArgument);
    let mut g = ptr::null_mut();
    assert_eq!(jnp_function_from_values(d, vals.as_ptr(), n - 1, &mut g), JnpStatus::InvalidArgument);
    jnp_function_free(f);
    jnp_domain_free(d);
}

#[test]
fn errors_set_status_and_message() {
    let mut d = ptr::null_mut();
    assert_eq!(jnp_domain_from_spec(cstr("blob").as_ptr(), 4, &mut d), JnpStatus::InvalidArgument);
    assert!(last_error().contains("unknown domain"));
    assert_eq!(jnp_domain_from_spec(ptr::null(), 4, &mut d), JnpStatus::NullPointer);
    assert_eq!(jnp_domain_from_spec(cstr("square").as_ptr(), 4, ptr::null_mut()), JnpStatus::NullPointer);
    let bad = [0xffu8, 0];
    assert_eq!(jnp_domain_from_spec(bad.as_ptr().cast(), 4, &mut d), JnpStatus::InvalidUtf8);

    let sq = domain("square", 4);
    let f = function(sq, "quadrant");
    let mut v = 0.0;
    assert_eq!(jnp_jn_global(f, 1.0, &mut v), JnpStatus::ExponentOutOfRange);
    assert_eq!(jnp_jn_global(ptr::null(), 2.0, &mut v), JnpStatus::NullPointer);
    let mut q = JnpQuotient::default();
    assert_eq!(jnp_poincare_quotient(f, 2.0, &mut q), JnpStatus::ExponentOutOfRange);

    let other = domain("lshape", 4);
    let mut r = JnpRatio::default();
    assert_eq!(jnp_weak_type_ratio(other, f, 2.0, 0.0, &mut r), JnpStatus::DomainMismatch);
    let mut beta = 0.0;
    let outside = [5.0, 5.0];
    assert_eq!(jnp_john_beta(sq, outside.as_ptr(), 2, 8, 0, &mut beta), JnpStatus::CenterOutsideDomain);

    let strip = domain("rect:1,0.0625", 6);
    let g = function(strip, "linear:0");
    let mut loc = 0.0;
    assert_eq!(jnp_jn_local(strip, g, 2.0, 0.0, &mut loc, ptr::null_mut()), JnpStatus::NoLocalPartition);

    jnp_function_free(g);
    jnp_function_free(f);
    jnp_domain_free(strip);
    jnp_domain_free(other);
    jnp_domain_free(sq);
    jnp_domain_free(ptr::null_mut());
    jnp_function_free(ptr::null_mut());
    jnp_string_free(ptr::null_mut());
}

#[test]
fn experiment_json_round_trip() {
    let cfg = cstr("pipeline = \"jn\"\ndomain = \"square\"\nfunction = \"constant:2\"\nJ = 4\n");
    let mut json = ptr::null_mut();
    assert_eq!(jnp_run_experiment_json(cfg.as_ptr(), &mut json), JnpStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    jnp_string_free(json);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["items"][0]["numerator"], 0.0);
    jnp_core::lab::validate_report_json(&v).unwrap();

    let bad = cstr("pipeline = \"jn\"\np = 0.5\n");
    assert_eq!(jnp_run_experiment_json(bad.as_ptr(), &mut json), JnpStatus::InvalidConfig);
    assert!(json.is_null());
    assert!(last_error().starts_with("p[0]"));
}

#[test]
fn invariant_failure_still_returns_the_report() {
    // two identical cusps cannot give a strictly increasing trend
    let cfg = cstr("pipeline = \"necessity-sweep\"\nJ = 5\ndomains = [\"cusp:2\", \"cusp:2\"]\n");
    let mut json = ptr::null_mut();
    assert_eq!(jnp_run_experiment_json(cfg.as_ptr(), &mut json), JnpStatus::InvariantFailed);
    assert!(!json.is_null());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    jnp_string_free(json);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["invariant_failures"][0]["check"], "weak_ratio_increasing_in_k");
    assert!(last_error().contains("invariant"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/jnp.h")).unwrap();
    for name in [
        "typedef struct JnpDomain JnpDomain",
        "typedef struct JnpFunction JnpFunction",
        "JNP_STATUS_OK = 0",
        "JNP_STATUS_PANIC = 99",
        "jnp_domain_from_spec",
        "jnp_domain_from_occupancy",
        "jnp_domain_free",
        "jnp_function_from_spec",
        "jnp_function_from_values",
        "jnp_function_free",
        "jnp_jn_global",
        "jnp_jn_local",
        "jnp_weak_norm_opt",
        "jnp_weak_type_ratio",
        "jnp_local_to_global_ratio",
        "jnp_whitney_summary",
        "jnp_john_beta",
        "jnp_poincare_quotient",
        "jnp_run_experiment_json",
        "jnp_string_free",
        "jnp_last_error_message",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// The header compiles as both C and C++ when a compiler is available.
#[test]
fn header_compiles() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"jnp.h\"\nint main(void) { JnpDomain *d = 0; JnpStatus s = jnp_domain_from_spec(\"square\", 3, &d); return s == JNP_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I", include])
            .arg(&src)
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(e) => eprintln!("skipping {compiler}: {e}"),
        }
    }
}
