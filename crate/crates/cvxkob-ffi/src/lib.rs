//! C ABI over `cvxkob`.
//!
//! Domains and automorphisms are opaque handles created by `cvxkob_*_new*` functions and released
//! with the matching `*_free`. Points of C^d are passed as `2 d` doubles, interleaved re, im.
//! Every fallible call returns a [`CvxkobStatus`]; the message of the last failure on the calling
//! thread is available from [`cvxkob_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cvxkob::automorphism_dynamics::{classify, Automorphism, MapType};
use cvxkob::cli_harness::{build_domain, DomainSpec};
use cvxkob::kobayashi_metric::distance;
use cvxkob::linalg::{c, identity, CMat, CVec};
use cvxkob::{ConvexDomain, Error};

/// Opaque domain handle.
pub struct CvxkobDomain(ConvexDomain);

/// Opaque automorphism handle.
pub struct CvxkobAutomorphism(Automorphism);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvxkobStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotInDomain = 4,
    NonConvergence = 5,
    Inconclusive = 6,
    Precondition = 7,
    Degenerate = 8,
    Internal = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvxkobMapType {
    Elliptic = 0,
    Parabolic = 1,
    Hyperbolic = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let s = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &Error) -> CvxkobStatus {
    match e {
        Error::DimensionMismatch { .. } => CvxkobStatus::DimensionMismatch,
        Error::NotInDomain(_) => CvxkobStatus::NotInDomain,
        Error::NonConvergence(_) => CvxkobStatus::NonConvergence,
        Error::Inconclusive(_) => CvxkobStatus::Inconclusive,
        Error::Precondition(_) => CvxkobStatus::Precondition,
        Error::Degenerate(_) | Error::BranchJump(_) => CvxkobStatus::Degenerate,
        Error::Invalid { .. } | Error::Spec(_) => CvxkobStatus::InvalidArgument,
        Error::Inconsistent(_) | Error::Io(_) => CvxkobStatus::Internal,
    }
}

struct Fail(CvxkobStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CvxkobStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CvxkobStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvxkobStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            set_error(format!("panic: {}", m.unwrap_or_default()));
            CvxkobStatus::Panic
        }
    }
}

unsafe fn read_point(p: *const f64, dim: usize, what: &str) -> Result<CVec, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let xs = std::slice::from_raw_parts(p, 2 * dim);
    Ok(CVec::from_iterator(dim, xs.chunks(2).map(|q| c(q[0], q[1]))))
}

unsafe fn write_point(out: *mut f64, z: &CVec) {
    let xs = std::slice::from_raw_parts_mut(out, 2 * z.len());
    for (i, v) in z.iter().enumerate() {
        xs[2 * i] = v.re;
        xs[2 * i + 1] = v.im;
    }
}

/// Number of coordinates outside the exponent-one block.
fn rest_dim(d: &ConvexDomain) -> usize {
    d.exponents().map(|e| e.iter().filter(|&&m| m != 1).count()).unwrap_or(0)
}

unsafe fn domain<'a>(d: *const CvxkobDomain) -> Result<&'a ConvexDomain, Fail> {
    d.as_ref().map(|d| &d.0).ok_or_else(|| null("domain"))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn cvxkob_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map(|s| s.as_ptr()).unwrap_or(std::ptr::null()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cvxkob_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Ball of the given radius around `center` (2 `dim` doubles).
///
/// # Safety
/// `center` must point to 2 `dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_domain_new_ball(dim: usize, center: *const f64, radius: f64, out: *mut *mut CvxkobDomain) -> CvxkobStatus {
    guard(|| {
        let z = read_point(center, dim, "center")?;
        put(out, CvxkobDomain(ConvexDomain::ball(z, radius)?))
    })
}

/// Generalized ellipsoid sum |z_i|^{2 m_i} < 1.
///
/// # Safety
/// `exponents` must point to `dim` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_domain_new_ellipsoid(dim: usize, exponents: *const u32, out: *mut *mut CvxkobDomain) -> CvxkobStatus {
    guard(|| {
        if exponents.is_null() {
            return Err(null("exponents"));
        }
        let e = std::slice::from_raw_parts(exponents, dim);
        put(out, CvxkobDomain(ConvexDomain::ellipsoid(e)?))
    })
}

/// Domain from the JSON domain description used by experiment specs.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_domain_new_json(json: *const c_char, out: *mut *mut CvxkobDomain) -> CvxkobStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Fail(CvxkobStatus::InvalidArgument, e.to_string()))?;
        let spec: DomainSpec = serde_json::from_str(text).map_err(|e| Fail(CvxkobStatus::InvalidArgument, e.to_string()))?;
        let d = build_domain(&spec, "domain").map_err(|e| Fail(CvxkobStatus::InvalidArgument, e.to_string()))?;
        put(out, CvxkobDomain(d))
    })
}

/// # Safety
/// `d` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_domain_free(d: *mut CvxkobDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Complex dimension, or 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_domain_dim(d: *const CvxkobDomain) -> usize {
    d.as_ref().map(|d| d.0.dim()).unwrap_or(0)
}

/// Writes 1 to `inside` for interior points and 0 otherwise.
///
/// # Safety
/// `z` must point to 2 dim doubles and `inside` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_domain_contains(d: *const CvxkobDomain, z: *const f64, inside: *mut i32) -> CvxkobStatus {
    guard(|| {
        let d = domain(d)?;
        let z = read_point(z, d.dim(), "z")?;
        if inside.is_null() {
            return Err(null("inside"));
        }
        *inside = d.is_inside(&z) as i32;
        Ok(())
    })
}

/// Certified bracket lower <= K(z, w) <= upper for the Kobayashi distance.
///
/// # Safety
/// `z` and `w` must point to 2 dim doubles; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_distance(d: *const CvxkobDomain, z: *const f64, w: *const f64, lower: *mut f64, upper: *mut f64) -> CvxkobStatus {
    guard(|| {
        let d = domain(d)?;
        let (z, w) = (read_point(z, d.dim(), "z")?, read_point(w, d.dim(), "w")?);
        if lower.is_null() || upper.is_null() {
            return Err(null("lower/upper"));
        }
        let b = distance(d, &z, &w)?;
        *lower = b.lower;
        *upper = b.upper;
        Ok(())
    })
}

/// Automorphism from an n x n group matrix given row-major as 2 n^2 interleaved doubles. On a
/// ball n = dim + 1; on a generalized ellipsoid the matrix acts on the exponent-one block and
/// the remaining coordinates are left untwisted.
///
/// # Safety
/// `matrix` must point to 2 n^2 doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_automorphism_new_matrix(
    d: *const CvxkobDomain,
    n: usize,
    matrix: *const f64,
    out: *mut *mut CvxkobAutomorphism,
) -> CvxkobStatus {
    guard(|| {
        let dom = domain(d)?;
        if matrix.is_null() {
            return Err(null("matrix"));
        }
        if n == 0 || n > dom.dim() + 1 {
            return Err(Fail(CvxkobStatus::InvalidArgument, format!("matrix size must be between 1 and {}", dom.dim() + 1)));
        }
        let xs = std::slice::from_raw_parts(matrix, 2 * n * n);
        let m = CMat::from_fn(n, n, |i, j| c(xs[2 * (i * n + j)], xs[2 * (i * n + j) + 1]));
        let a = if dom.exponents().is_none() {
            Automorphism::ball_mobius(dom, m)?
        } else {
            Automorphism::ellipsoid_lift(dom, m, identity(rest_dim(dom)))?
        };
        put(out, CvxkobAutomorphism(a))
    })
}

/// Disc automorphism z -> e^{i theta} (z - a) / (1 - conj(a) z) lifted to a generalized ellipsoid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_automorphism_new_disc_lift(
    d: *const CvxkobDomain,
    a_re: f64,
    a_im: f64,
    theta: f64,
    out: *mut *mut CvxkobAutomorphism,
) -> CvxkobStatus {
    guard(|| {
        let dom = domain(d)?;
        put(out, CvxkobAutomorphism(Automorphism::disc_lift(dom, c(a_re, a_im), theta, identity(rest_dim(dom)))?))
    })
}

/// # Safety
/// `a` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_automorphism_free(a: *mut CvxkobAutomorphism) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Image of z, written to `out` (2 dim doubles).
///
/// # Safety
/// `z` and `out` must point to 2 dim doubles.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_automorphism_apply(a: *const CvxkobAutomorphism, z: *const f64, out: *mut f64) -> CvxkobStatus {
    guard(|| {
        let a = &a.as_ref().ok_or_else(|| null("automorphism"))?.0;
        let z = read_point(z, a.dim(), "z")?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_point(out, &a.try_apply(&z)?);
        Ok(())
    })
}

/// Wolff-Denjoy type of the automorphism, starting the orbit at z0. For parabolic and hyperbolic
/// maps the attracting boundary point is written to `x_plus` when it is non-null, and the fixed
/// point for elliptic maps.
///
/// # Safety
/// `z0` must point to 2 dim doubles, `kind` must be writable and `x_plus` null or 2 dim doubles.
#[no_mangle]
pub unsafe extern "C" fn cvxkob_classify(
    d: *const CvxkobDomain,
    a: *const CvxkobAutomorphism,
    z0: *const f64,
    kind: *mut CvxkobMapType,
    x_plus: *mut f64,
) -> CvxkobStatus {
    guard(|| {
        let dom = domain(d)?;
        let a = &a.as_ref().ok_or_else(|| null("automorphism"))?.0;
        let z0 = read_point(z0, dom.dim(), "z0")?;
        if kind.is_null() {
            return Err(null("kind"));
        }
        let r = classify(dom, a, &z0)?;
        *kind = match r.tag {
            MapType::Elliptic => CvxkobMapType::Elliptic,
            MapType::Parabolic => CvxkobMapType::Parabolic,
            MapType::Hyperbolic => CvxkobMapType::Hyperbolic,
        };
        if !x_plus.is_null() {
            if let Some(p) = r.x_plus().or(r.fixed_point.as_ref()) {
                write_point(x_plus, p);
            }
        }
        Ok(())
    })
}
