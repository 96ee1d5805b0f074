//! C interface.
//!
//! Objects are opaque handles created by the `arch_*_compute` and
//! `arch_*_from_json` calls and released with the matching `arch_*_free`.
//! Every fallible call returns an [`ArchStatus`]; on failure a message is
//! available from [`arch_last_error`] on the same thread until the next
//! failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use archipelago::basis::basis_for_archipelago;
use archipelago::christoffel::lambda_n;
use archipelago::{ArchipelagoSpec, BergmanBasis, Error, Precision, C64};

/// Status codes. The numeric values of the error kinds match the exit codes
/// of the command-line tool.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchStatus {
    Ok = 0,
    Input = 2,
    Numerical = 3,
    Precondition = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Opaque archipelago description.
pub struct ArchArchipelago(ArchipelagoSpec);

/// Opaque orthonormal basis.
pub struct ArchBasis(BergmanBasis);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ArchStatus {
    match e.exit_code() {
        2 => ArchStatus::Input,
        3 => ArchStatus::Numerical,
        _ => ArchStatus::Precondition,
    }
}

fn guard(f: impl FnOnce() -> Result<(), ArchStatus>) -> ArchStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArchStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            ArchStatus::Panic
        }
    }
}

fn fail(e: Error) -> ArchStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn lift<T>(r: archipelago::Result<T>) -> Result<T, ArchStatus> {
    r.map_err(fail)
}

fn null() -> ArchStatus {
    set_error("null pointer argument".into());
    ArchStatus::NullPointer
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, ArchStatus> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string is not valid UTF-8".into());
        ArchStatus::Input
    })
}

/// Message describing the most recent failure on this thread, or NULL. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn arch_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parse an archipelago from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn arch_archipelago_from_json(json: *const c_char, out: *mut *mut ArchArchipelago) -> ArchStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let spec = lift(ArchipelagoSpec::from_json(read_str(json)?))?;
        *out = Box::into_raw(Box::new(ArchArchipelago(spec)));
        Ok(())
    })
}

/// # Safety
/// `a` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arch_archipelago_free(a: *mut ArchArchipelago) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Orthonormal polynomials `P_0..P_n`. `precision_bits` of 0 selects the
/// precision from `n`; otherwise it is the starting precision, raised as
/// needed.
///
/// # Safety
/// `a` must be a live archipelago handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn arch_basis_compute(
    a: *const ArchArchipelago,
    n: usize,
    precision_bits: u32,
    out: *mut *mut ArchBasis,
) -> ArchStatus {
    guard(|| {
        if a.is_null() || out.is_null() {
            return Err(null());
        }
        let start = if precision_bits == 0 { None } else { Some(lift(Precision::new(precision_bits))?) };
        let (_, b) = lift(basis_for_archipelago(&(*a).0, n, start))?;
        *out = Box::into_raw(Box::new(ArchBasis(b)));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn arch_basis_from_json(json: *const c_char, out: *mut *mut ArchBasis) -> ArchStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let b = lift(BergmanBasis::from_json(read_str(json)?))?;
        *out = Box::into_raw(Box::new(ArchBasis(b)));
        Ok(())
    })
}

/// Serialize a basis; release the string with [`arch_string_free`].
///
/// # Safety
/// `b` must be a live basis handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn arch_basis_to_json(b: *const ArchBasis, out: *mut *mut c_char) -> ArchStatus {
    guard(|| {
        if b.is_null() || out.is_null() {
            return Err(null());
        }
        let s = CString::new((*b).0.to_json()).map_err(|_| {
            set_error("serialized basis contains NUL".into());
            ArchStatus::Numerical
        })?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `b` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arch_basis_free(b: *mut ArchBasis) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Highest degree held by the basis; 0 for a NULL handle.
///
/// # Safety
/// `b` must be NULL or a live basis handle.
#[no_mangle]
pub unsafe extern "C" fn arch_basis_degree(b: *const ArchBasis) -> usize {
    if b.is_null() {
        0
    } else {
        (*b).0.degree()
    }
}

/// Leading coefficient of `P_k`, rounded to double.
///
/// # Safety
/// `b` must be a live basis handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn arch_basis_lambda(b: *const ArchBasis, k: usize, out: *mut f64) -> ArchStatus {
    guard(|| {
        if b.is_null() || out.is_null() {
            return Err(null());
        }
        let b = &(*b).0;
        if k > b.degree() {
            return Err(fail(Error::Precondition(format!("k = {k} exceeds degree {}", b.degree()))));
        }
        *out = b.lambda(k).to_f64();
        Ok(())
    })
}

/// Zeros of `P_n` written to `re[0..n]`, `im[0..n]`; `cap` is the length of
/// both arrays and must be at least `n`.
///
/// # Safety
/// `b` must be a live basis handle; `re` and `im` must each point to `cap`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn arch_basis_zeros(
    b: *const ArchBasis,
    n: usize,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> ArchStatus {
    guard(|| {
        if b.is_null() || re.is_null() || im.is_null() {
            return Err(null());
        }
        if cap < n {
            set_error(format!("output arrays hold {cap} values, {n} needed"));
            return Err(ArchStatus::Input);
        }
        let zs = lift(archipelago::zeros::zeros(&(*b).0, n))?;
        let re = std::slice::from_raw_parts_mut(re, n);
        let im = std::slice::from_raw_parts_mut(im, n);
        for (i, z) in zs.zeros.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Christoffel function `Λ_n(x + iy)`.
///
/// # Safety
/// `b` must be a live basis handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn arch_christoffel(b: *const ArchBasis, n: usize, x: f64, y: f64, out: *mut f64) -> ArchStatus {
    guard(|| {
        if b.is_null() || out.is_null() {
            return Err(null());
        }
        let b = &(*b).0;
        if n > b.degree() {
            return Err(fail(Error::Precondition(format!("n = {n} exceeds degree {}", b.degree()))));
        }
        *out = lambda_n(b, C64::new(x, y), n);
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arch_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
