//! C ABI over the renormalab library.
//!
//! Every function returns an [`RlStatus`]; results come back through out
//! pointers. Objects are opaque handles owned by the caller and released
//! with their `_free` function. After a failure, [`rl_last_error`] holds a
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use renormalab::families::{family_cascade, UnimodalFamily};
use renormalab::hdim::{build_hierarchy, dim_estimate};
use renormalab::kneading::{CopyLabel, Word};
use renormalab::mandelplane::{gap_radius, render_grid_with, MembershipGrid, Sampling};
use renormalab::paramspace::{center_of_period, tuned_cascade, CascadeTable};
use renormalab::solver::{fixed_point, FixedPointResult, SolverConfig};
use renormalab::spectrum::{analyze_fixed_point, SpectrumReport};
use renormalab::{ComplexScalar, Error, PowerGerm, Scalar, SeriesConfig};

/// Result code of every `rl_*` call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    /// The requested value does not exist, e.g. no unstable eigenvalue.
    NotAvailable = 5,
    NewtonDiverged = 10,
    NotFixedPoint = 11,
    NotRenormalizable = 12,
    PrecisionExhausted = 13,
    DegenerateJacobian = 14,
    KneadingTie = 15,
    DegenerateRatios = 16,
    /// Any other failed numerical contract.
    Numeric = 19,
    Panic = 99,
}

/// A double-double value `hi + lo`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RlScalar {
    pub hi: f64,
    pub lo: f64,
}

impl From<Scalar> for RlScalar {
    fn from(s: Scalar) -> Self {
        RlScalar { hi: s.hi(), lo: s.lo() }
    }
}

impl From<RlScalar> for Scalar {
    fn from(s: RlScalar) -> Self {
        Scalar::from_parts(s.hi, s.lo)
    }
}

pub struct RlGerm(PowerGerm);
pub struct RlFixedPoint(FixedPointResult);
pub struct RlSpectrum(SpectrumReport);
pub struct RlCascade(CascadeTable);
pub struct RlGrid(MembershipGrid);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::InvalidArgument(_) | Error::ConfigParse(_) | Error::UnknownKey(_) => RlStatus::InvalidArgument,
        Error::Parse(_) | Error::Json(_) => RlStatus::Parse,
        Error::Io { .. } => RlStatus::Io,
        Error::NewtonDiverged { .. } => RlStatus::NewtonDiverged,
        Error::NotFixedPoint { .. } => RlStatus::NotFixedPoint,
        Error::NotRenormalizable { .. } => RlStatus::NotRenormalizable,
        Error::PrecisionExhausted(_) => RlStatus::PrecisionExhausted,
        Error::DegenerateJacobian { .. } => RlStatus::DegenerateJacobian,
        Error::KneadingTieAtDepthK { .. } => RlStatus::KneadingTie,
        Error::DegenerateRatios(_) => RlStatus::DegenerateRatios,
        _ => RlStatus::Numeric,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), RlStatus>>(f: F) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            RlStatus::Panic
        }
    }
}

fn fail(e: Error) -> RlStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> RlStatus {
    set_error(format!("{what} is null"));
    RlStatus::NullPointer
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, RlStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        RlStatus::Parse
    })
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), RlStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, v: T) -> Result<(), RlStatus> {
    put(out, Box::into_raw(Box::new(v)))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, RlStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

fn solver_config(tol: f64) -> Result<SolverConfig, RlStatus> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(fail(Error::InvalidArgument(format!("tolerance {tol} must be positive"))));
    }
    Ok(SolverConfig {
        tol,
        ..SolverConfig::default()
    })
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from an `rl_*` function returning an owned string, or be null.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a decimal literal into a double-double.
///
/// # Safety
/// `literal` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_scalar_parse(literal: *const c_char, out: *mut RlScalar) -> RlStatus {
    guard(|| {
        let v: Scalar = text(literal, "literal")?.parse().map_err(fail)?;
        put(out, v.into())
    })
}

/// The germ `c + z^2` truncated at `degree` on the disk of `radius`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_germ_quadratic(c: RlScalar, degree: usize, radius: f64, out: *mut *mut RlGerm) -> RlStatus {
    guard(|| {
        let g = PowerGerm::quadratic(c.into(), degree, Scalar::from_f64(radius)).map_err(fail)?;
        put_box(out, RlGerm(g))
    })
}

/// # Safety
/// `g` must be a live germ handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_germ_degree(g: *const RlGerm, out: *mut usize) -> RlStatus {
    guard(|| put(out, get(g, "germ")?.0.degree()))
}

/// Coefficient `a_k`; `k` above the degree is an invalid argument.
///
/// # Safety
/// `g` must be a live germ handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_germ_coefficient(g: *const RlGerm, k: usize, out: *mut RlScalar) -> RlStatus {
    guard(|| {
        let g = &get(g, "germ")?.0;
        if k > g.degree() {
            return Err(fail(Error::InvalidArgument(format!("index {k} above degree {}", g.degree()))));
        }
        put(out, g.coeff(k).into())
    })
}

/// Value at a real point of the trust disk.
///
/// # Safety
/// `g` must be a live germ handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_germ_eval(g: *const RlGerm, x: RlScalar, out: *mut RlScalar) -> RlStatus {
    guard(|| {
        let v = get(g, "germ")?.0.eval(x.into()).map_err(fail)?;
        put(out, v.into())
    })
}

/// JSON document of the germ; release with [`rl_string_free`].
///
/// # Safety
/// `g` must be a live germ handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_germ_to_json(g: *const RlGerm, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let s = get(g, "germ")?.0.to_json().map_err(fail)?;
        put(out, CString::new(s).unwrap_or_default().into_raw())
    })
}

/// # Safety
/// `g` must be a germ handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rl_germ_free(g: *mut RlGerm) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Solves for the fixed point of renormalization with combinatorics `word`
/// (e.g. `"2"` or `"3"`) at truncation `degree`, seeded after `depth`
/// renormalizations of the cascade limit.
///
/// # Safety
/// `word` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_fixed_point_solve(
    word: *const c_char,
    degree: usize,
    depth: usize,
    tol: f64,
    out: *mut *mut RlFixedPoint,
) -> RlStatus {
    guard(|| {
        let w: Word = text(word, "word")?.parse().map_err(fail)?;
        let fp = fixed_point(&w, degree, depth, &solver_config(tol)?).map_err(fail)?;
        put_box(out, RlFixedPoint(fp))
    })
}

/// Copy of the fixed-point germ as a new handle.
///
/// # Safety
/// `fp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_fixed_point_germ(fp: *const RlFixedPoint, out: *mut *mut RlGerm) -> RlStatus {
    guard(|| {
        let g = get(fp, "fixed point")?.0.germ.clone();
        put_box(out, RlGerm(g))
    })
}

/// Spatial rescaling of the fixed point.
///
/// # Safety
/// `fp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_fixed_point_scaling(fp: *const RlFixedPoint, out: *mut RlScalar) -> RlStatus {
    guard(|| put(out, get(fp, "fixed point")?.0.lambda.into()))
}

/// # Safety
/// `fp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_fixed_point_residual(fp: *const RlFixedPoint, out: *mut RlScalar) -> RlStatus {
    guard(|| put(out, get(fp, "fixed point")?.0.residual.into()))
}

/// JSON document of the result; release with [`rl_string_free`].
///
/// # Safety
/// `fp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_fixed_point_to_json(fp: *const RlFixedPoint, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let s = serde_json::to_string_pretty(&get(fp, "fixed point")?.0).map_err(|e| fail(e.into()))?;
        put(out, CString::new(s).unwrap_or_default().into_raw())
    })
}

/// # Safety
/// `fp` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rl_fixed_point_free(fp: *mut RlFixedPoint) {
    if !fp.is_null() {
        drop(Box::from_raw(fp));
    }
}

/// Fixed point plus spectrum with the truncation drift filter.
///
/// # Safety
/// `word` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_analyze(
    word: *const c_char,
    degree: usize,
    depth: usize,
    out: *mut *mut RlSpectrum,
) -> RlStatus {
    guard(|| {
        let w: Word = text(word, "word")?.parse().map_err(fail)?;
        let (_, report) = analyze_fixed_point(&w, degree, depth, &SolverConfig::default()).map_err(fail)?;
        put_box(out, RlSpectrum(report))
    })
}

/// Number of eigenvalues.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_len(s: *const RlSpectrum, out: *mut usize) -> RlStatus {
    guard(|| put(out, get(s, "spectrum")?.0.eigenvalues.len()))
}

/// Eigenvalue `i` in order of decreasing modulus, with its drift flag.
///
/// # Safety
/// `s` must be a live handle; `re`, `im` and `converged` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_eigenvalue(
    s: *const RlSpectrum,
    i: usize,
    re: *mut RlScalar,
    im: *mut RlScalar,
    converged: *mut bool,
) -> RlStatus {
    guard(|| {
        let e = get(s, "spectrum")?
            .0
            .eigenvalues
            .get(i)
            .ok_or_else(|| fail(Error::InvalidArgument(format!("eigenvalue index {i} out of range"))))?;
        put(re, e.re.into())?;
        put(im, e.im.into())?;
        put(converged, e.converged)
    })
}

/// The real unstable eigenvalue; `NotAvailable` if there is none.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_lambda_star(s: *const RlSpectrum, out: *mut RlScalar) -> RlStatus {
    guard(|| match get(s, "spectrum")?.0.lambda_star {
        Some(l) => put(out, l.into()),
        None => {
            set_error("no real unstable eigenvalue".into());
            Err(RlStatus::NotAvailable)
        }
    })
}

/// Unstable eigenvalues that survive the drift filter.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_unstable_count(s: *const RlSpectrum, out: *mut usize) -> RlStatus {
    guard(|| put(out, get(s, "spectrum")?.0.converged_unstable_count))
}

/// # Safety
/// `s` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rl_spectrum_free(s: *mut RlSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Superattracting center of a word such as `"2,3"`.
///
/// # Safety
/// `word` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_center_of_period(word: *const c_char, out: *mut RlScalar) -> RlStatus {
    guard(|| {
        let w: Word = text(word, "word")?.parse().map_err(fail)?;
        put(out, center_of_period(&w).map_err(fail)?.into())
    })
}

/// Centers of `letter^n` for `n = 1..=n_max`.
///
/// # Safety
/// `letter` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_cascade_new(letter: *const c_char, n_max: usize, out: *mut *mut RlCascade) -> RlStatus {
    guard(|| {
        let l: CopyLabel = text(letter, "letter")?.parse().map_err(fail)?;
        put_box(out, RlCascade(tuned_cascade(&l, n_max).map_err(fail)?))
    })
}

/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_cascade_len(t: *const RlCascade, out: *mut usize) -> RlStatus {
    guard(|| put(out, get(t, "cascade")?.0.rows.len()))
}

/// Parameter `c_{i+1}`.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_cascade_parameter(t: *const RlCascade, i: usize, out: *mut RlScalar) -> RlStatus {
    guard(|| {
        let row = get(t, "cascade")?
            .0
            .rows
            .get(i)
            .ok_or_else(|| fail(Error::InvalidArgument(format!("row {i} out of range"))))?;
        put(out, row.c.into())
    })
}

/// Extrapolated ratio of consecutive gaps; `NotAvailable` for short tables.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_cascade_delta(t: *const RlCascade, out: *mut RlScalar) -> RlStatus {
    guard(|| match get(t, "cascade")?.0.delta_extrapolated {
        Some(d) => put(out, d.into()),
        None => {
            set_error("table too short for a ratio".into());
            Err(RlStatus::NotAvailable)
        }
    })
}

/// # Safety
/// `t` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rl_cascade_free(t: *mut RlCascade) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Fitted scaling ratio of the cascade of `letter` in a built-in family
/// (`quadratic`, `logistic` or `sine`).
///
/// # Safety
/// `family` and `letter` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_family_delta(
    family: *const c_char,
    letter: *const c_char,
    n_max: usize,
    out: *mut RlScalar,
) -> RlStatus {
    guard(|| {
        let f: UnimodalFamily = text(family, "family")?.parse().map_err(fail)?;
        let l: CopyLabel = text(letter, "letter")?.parse().map_err(fail)?;
        let c = family_cascade(&f, &l, n_max).map_err(fail)?;
        put(out, c.report.delta_estimate.into())
    })
}

/// Membership grid of the square window of half-width `scale`.
/// `distance_estimate` also marks pixels within half a pitch of the set.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_grid_render(
    center_re: RlScalar,
    center_im: RlScalar,
    scale: f64,
    resolution: usize,
    max_iter: usize,
    distance_estimate: bool,
    out: *mut *mut RlGrid,
) -> RlStatus {
    guard(|| {
        let sampling = if distance_estimate {
            Sampling::DistanceEstimate
        } else {
            Sampling::PixelCenter
        };
        let c = ComplexScalar::new(center_re.into(), center_im.into());
        let g = render_grid_with(c, Scalar::from_f64(scale), resolution, max_iter, sampling).map_err(fail)?;
        put_box(out, RlGrid(g))
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_grid_member(g: *const RlGrid, row: usize, col: usize, out: *mut bool) -> RlStatus {
    guard(|| {
        let g = &get(g, "grid")?.0;
        if row >= g.resolution || col >= g.resolution {
            return Err(fail(Error::InvalidArgument(format!("pixel ({row}, {col}) outside the grid"))));
        }
        put(out, g.get(row, col))
    })
}

/// Gap statistic `r` of the grid.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_grid_gap_radius(g: *const RlGrid, out: *mut RlScalar) -> RlStatus {
    guard(|| {
        let r = gap_radius(&get(g, "grid")?.0).map_err(fail)?;
        put(out, r.r_estimate.into())
    })
}

/// Copies the binary PGM image into `buf`. With `buf` null, only the size
/// is reported; otherwise `capacity` must be at least that size.
///
/// # Safety
/// `g` must be a live handle; `size` must be writable; `buf` must be null
/// or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn rl_grid_pgm(g: *const RlGrid, buf: *mut u8, capacity: usize, size: *mut usize) -> RlStatus {
    guard(|| {
        let bytes = get(g, "grid")?.0.to_pgm();
        put(size, bytes.len())?;
        if buf.is_null() {
            return Ok(());
        }
        if capacity < bytes.len() {
            return Err(fail(Error::InvalidArgument(format!(
                "buffer of {capacity} bytes, need {}",
                bytes.len()
            ))));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// # Safety
/// `g` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rl_grid_free(g: *mut RlGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Dimension estimate of the Cantor set of the comma-separated `letters`
/// refined `depth` times.
///
/// # Safety
/// `letters` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_hdim_estimate(letters: *const c_char, depth: usize, out: *mut RlScalar) -> RlStatus {
    guard(|| {
        let ls = text(letters, "letters")?
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<CopyLabel>, _>>()
            .map_err(fail)?;
        let tree = build_hierarchy(&ls, depth).map_err(fail)?;
        put(out, dim_estimate(&tree).map_err(fail)?.d.into())
    })
}

/// Default series policy radius, exposed so callers can build matching germs.
#[no_mangle]
pub extern "C" fn rl_default_radius() -> f64 {
    SeriesConfig::default().reference_radius.to_f64()
}
