//! C ABI for the tentspace toolkit.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`TspStatus`]; results come back
//!   through out-pointers, which are written only on `TSP_STATUS_OK`.
//! * Grid functions are opaque handles created by `tsp_grid_*` constructors
//!   and released with [`tsp_grid_free`]. Handles are not thread-safe;
//!   share them only behind external synchronization.
//! * On failure, [`tsp_last_error_message`] returns a NUL-terminated,
//!   thread-local description that stays valid until the next failing call
//!   on the same thread.
//! * Every entry point catches panics and reports `TSP_STATUS_PANIC`
//!   instead of unwinding across the FFI boundary.
//!
//! The generated header lands in `include/tentspace.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tentspace::config::parse_config;
use tentspace::error::Error;
use tentspace::functionals::{pairing, tent_norm, NormSpec};
use tentspace::generators::Field;
use tentspace::grid::{read_grid_file, write_grid_file, GridFunction, GridSpec};
use tentspace::suites::run_suite;

/// Status code returned by every fallible ABI function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TspStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments were structurally invalid (bad spec text, bad grid
    /// parameters, mismatched grids, non-UTF-8 strings, ...).
    InvalidArgument = 2,
    /// The filesystem refused a read or write.
    Io = 3,
    /// A verification run completed but at least one check failed.
    CheckFailed = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Opaque handle to a sampled grid function.
pub struct TspGrid(GridFunction);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&ch| ch != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_of(e: &Error) -> TspStatus {
    match e {
        Error::Io(_) => TspStatus::Io,
        _ => TspStatus::InvalidArgument,
    }
}

fn fail(e: &Error) -> TspStatus {
    set_error(&e.to_string());
    status_of(e)
}

fn guarded(body: impl FnOnce() -> TspStatus) -> TspStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(&format!("internal panic: {msg}"));
            TspStatus::Panic
        }
    }
}

/// Reads a UTF-8 string argument; null or invalid bytes become errors.
unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, TspStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} must not be null"));
        return Err(TspStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{what} must be valid UTF-8"));
        TspStatus::InvalidArgument
    })
}

unsafe fn grid_arg<'a>(ptr: *const TspGrid, what: &str) -> Result<&'a GridFunction, TspStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} must not be null"));
        return Err(TspStatus::NullArgument);
    }
    Ok(&(*ptr).0)
}

/// Version of the underlying library as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tsp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread. Never null;
/// empty before the first failure. Valid until the next failing call on
/// the same thread.
#[no_mangle]
pub extern "C" fn tsp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Reads a grid function from a file written by `tsp_grid_write` or the
/// command-line tool. On success, `*out` owns the new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsp_grid_read(path: *const c_char, out: *mut *mut TspGrid) -> TspStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out must not be null");
            return TspStatus::NullArgument;
        }
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match read_grid_file(Path::new(path)) {
            Ok(grid) => {
                *out = Box::into_raw(Box::new(TspGrid(grid)));
                TspStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes a grid function to a file in the toolkit's text format.
///
/// # Safety
/// `grid` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tsp_grid_write(grid: *const TspGrid, path: *const c_char) -> TspStatus {
    guarded(|| {
        let g = match grid_arg(grid, "grid") {
            Ok(g) => g,
            Err(status) => return status,
        };
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match write_grid_file(g, Path::new(path)) {
            Ok(()) => TspStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Samples the indicator of the height band (band_lo, band_hi) on the grid
/// with the given shape — the same family as the bundled slab fixture. On
/// success, `*out` owns the new handle.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsp_grid_slab(
    n: usize,
    ny: usize,
    t_levels: usize,
    t_min: f64,
    t_max: f64,
    band_lo: f64,
    band_hi: f64,
    out: *mut *mut TspGrid,
) -> TspStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out must not be null");
            return TspStatus::NullArgument;
        }
        let spec = match GridSpec::new(n, ny, t_levels, t_min, t_max) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        if !(band_lo.is_finite() && band_hi.is_finite() && 0.0 < band_lo && band_lo < band_hi) {
            set_error(&format!(
                "invalid height band ({band_lo}, {band_hi}): need 0 < lo < hi"
            ));
            return TspStatus::InvalidArgument;
        }
        let grid = Field::slab(band_lo, band_hi).sample(spec);
        *out = Box::into_raw(Box::new(TspGrid(grid)));
        TspStatus::Ok
    })
}

/// Reports the grid shape behind a handle.
///
/// # Safety
/// `grid` must be a live handle; out-pointers may be null to skip a field.
#[no_mangle]
pub unsafe extern "C" fn tsp_grid_dims(
    grid: *const TspGrid,
    n: *mut usize,
    ny: *mut usize,
    t_levels: *mut usize,
) -> TspStatus {
    guarded(|| {
        let g = match grid_arg(grid, "grid") {
            Ok(g) => g,
            Err(status) => return status,
        };
        let spec = g.spec();
        if !n.is_null() {
            *n = spec.n;
        }
        if !ny.is_null() {
            *ny = spec.ny;
        }
        if !t_levels.is_null() {
            *t_levels = spec.t_levels;
        }
        TspStatus::Ok
    })
}

/// Releases a handle. Null is a no-op.
///
/// # Safety
/// `grid` must be a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn tsp_grid_free(grid: *mut TspGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Evaluates the quasi-norm described by `spec` — the text form
/// `p:q:r:beta[:aperture]`, e.g. `"2:2:2:0"` or `"inf:2:none:-0.5"` — on
/// the grid function.
///
/// # Safety
/// `grid` must be a live handle, `spec` a NUL-terminated string, and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsp_tent_norm(
    grid: *const TspGrid,
    spec: *const c_char,
    out: *mut f64,
) -> TspStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out must not be null");
            return TspStatus::NullArgument;
        }
        let g = match grid_arg(grid, "grid") {
            Ok(g) => g,
            Err(status) => return status,
        };
        let spec_text = match str_arg(spec, "spec") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let parsed: NormSpec = match spec_text.parse() {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        match tent_norm(g, &parsed) {
            Ok(v) => {
                *out = v;
                TspStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Evaluates the weighted pairing of two grid functions on the same grid:
/// the integral of `f h` against the cell measure carrying the weight
/// `t^beta0`.
///
/// # Safety
/// `f` and `h` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsp_pairing(
    f: *const TspGrid,
    h: *const TspGrid,
    beta0: f64,
    out: *mut f64,
) -> TspStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out must not be null");
            return TspStatus::NullArgument;
        }
        let fg = match grid_arg(f, "f") {
            Ok(g) => g,
            Err(status) => return status,
        };
        let hg = match grid_arg(h, "h") {
            Ok(g) => g,
            Err(status) => return status,
        };
        match pairing(fg, hg, beta0) {
            Ok(v) => {
                *out = v;
                TspStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Runs the verification suites described by `config_text` (same `key =
/// value` grammar as the command-line config file) and writes the CSV and
/// JSON reports next to the configured output prefix. Returns
/// `TSP_STATUS_OK` when every check passed and `TSP_STATUS_CHECK_FAILED`
/// when the run completed with failures (the report files are written
/// either way).
///
/// # Safety
/// `config_text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tsp_verify_run(config_text: *const c_char) -> TspStatus {
    guarded(|| {
        let text = match str_arg(config_text, "config_text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let cfg = match parse_config(text) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        let report = match run_suite(&cfg) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        if let Err(e) = report.write_files(&cfg.output) {
            return fail(&e);
        }
        if report.all_passed() {
            TspStatus::Ok
        } else {
            let mut lines: Vec<String> = report
                .failures()
                .map(|r| format!("{}/{}", r.suite, r.check))
                .collect();
            lines.truncate(8);
            set_error(&format!("checks failed: {}", lines.join(", ")));
            TspStatus::CheckFailed
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn cstring(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn last_error() -> String {
        unsafe {
            CStr::from_ptr(tsp_last_error_message())
                .to_string_lossy()
                .into_owned()
        }
    }

    #[test]
    fn slab_handle_norms_and_roundtrips_through_files() {
        unsafe {
            let mut g: *mut TspGrid = ptr::null_mut();
            let st = tsp_grid_slab(1, 256, 96, 0.012, 0.4, 0.05, 0.1, &mut g);
            assert_eq!(st, TspStatus::Ok);

            let mut n = 0;
            let mut ny = 0;
            let mut k = 0;
            assert_eq!(tsp_grid_dims(g, &mut n, &mut ny, &mut k), TspStatus::Ok);
            assert_eq!((n, ny, k), (1, 256, 96));

            let spec = cstring("2:2:2:0");
            let mut v = 0.0;
            assert_eq!(tsp_tent_norm(g, spec.as_ptr(), &mut v), TspStatus::Ok);
            let closed_form = (2.0f64 * 2.0f64.ln()).sqrt();
            assert!(
                (v - closed_form).abs() / closed_form < 0.03,
                "norm {v} vs {closed_form}"
            );

            let dir = tempfile::tempdir().unwrap();
            let path = cstring(dir.path().join("slab.grid").to_str().unwrap());
            assert_eq!(tsp_grid_write(g, path.as_ptr()), TspStatus::Ok);
            let mut g2: *mut TspGrid = ptr::null_mut();
            assert_eq!(tsp_grid_read(path.as_ptr(), &mut g2), TspStatus::Ok);
            let mut v2 = 0.0;
            assert_eq!(tsp_tent_norm(g2, spec.as_ptr(), &mut v2), TspStatus::Ok);
            assert_eq!(v, v2, "file roundtrip must preserve the norm exactly");

            let mut inner = 0.0;
            assert_eq!(tsp_pairing(g, g2, 0.0, &mut inner), TspStatus::Ok);
            assert!(inner > 0.0);

            tsp_grid_free(g);
            tsp_grid_free(g2);
        }
    }

    #[test]
    fn null_and_invalid_arguments_come_back_as_codes_with_messages() {
        unsafe {
            let mut out = 0.0;
            assert_eq!(
                tsp_tent_norm(ptr::null(), cstring("2:2:2:0").as_ptr(), &mut out),
                TspStatus::NullArgument
            );
            assert!(last_error().contains("grid"));

            let mut g: *mut TspGrid = ptr::null_mut();
            assert_eq!(
                tsp_grid_slab(1, 256, 16, 0.05, 0.4, 0.1, 0.2, &mut g),
                TspStatus::Ok
            );
            assert_eq!(
                tsp_tent_norm(g, cstring("0:2:2:0").as_ptr(), &mut out),
                TspStatus::InvalidArgument
            );
            assert!(!last_error().is_empty());

            assert_eq!(
                tsp_grid_read(cstring("/nonexistent/q.grid").as_ptr(), &mut g),
                TspStatus::Io
            );

            let mut bad: *mut TspGrid = ptr::null_mut();
            assert_eq!(
                tsp_grid_slab(3, 256, 16, 0.05, 0.4, 0.1, 0.2, &mut bad),
                TspStatus::InvalidArgument
            );
            assert!(bad.is_null());

            tsp_grid_free(g);
            tsp_grid_free(ptr::null_mut());
        }
    }

    #[test]
    fn verify_run_writes_reports_and_reports_config_errors() {
        unsafe {
            let dir = tempfile::tempdir().unwrap();
            let out = dir.path().join("rep");
            let cfg = cstring(&format!(
                "suites = geometry\ntrials = 300\noutput = {}\n",
                out.display()
            ));
            assert_eq!(tsp_verify_run(cfg.as_ptr()), TspStatus::Ok);
            assert!(out.with_extension("csv").exists() || {
                // the writer appends, not replaces, the suffix
                std::path::Path::new(&format!("{}.csv", out.display())).exists()
            });

            let bad = cstring("trials = soon\n");
            assert_eq!(tsp_verify_run(bad.as_ptr()), TspStatus::InvalidArgument);
            assert!(last_error().contains("trials"));
        }
    }

    #[test]
    fn generated_header_exposes_the_expected_symbols() {
        let header = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/include/tentspace.h"
        ))
        .expect("build script generates include/tentspace.h");
        for symbol in [
            "tsp_version",
            "tsp_last_error_message",
            "tsp_grid_read",
            "tsp_grid_write",
            "tsp_grid_slab",
            "tsp_grid_dims",
            "tsp_grid_free",
            "tsp_tent_norm",
            "tsp_pairing",
            "tsp_verify_run",
            "TSP_STATUS_OK",
            "TSP_STATUS_CHECK_FAILED",
            "struct TspGrid TspGrid",
        ] {
            assert!(header.contains(symbol), "header is missing `{symbol}`");
        }
    }
}
