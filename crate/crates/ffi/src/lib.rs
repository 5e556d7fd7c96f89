//! C ABI over `genquot`.
//!
//! Every fallible function returns a [`GqStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! can be read with [`gq_last_error_message`]. Panics are caught at the
//! boundary and reported as `GQ_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use genquot::body::RandomQuotientBody;
use genquot::experiments::{run_suite, SuiteConfig, SuiteId, Thresholds};
use genquot::linalg::Matrix;
use genquot::sampler::SeedSpec;
use genquot::Error;

/// Status codes. The first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GqStatus {
    Ok = 0,
    ConditionFailed = 1,
    Usage = 2,
    Numeric = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Opaque handle to a quotient body.
pub struct GqBody {
    inner: RandomQuotientBody,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GqStatus {
    match e.exit_code() {
        1 => GqStatus::ConditionFailed,
        2 => GqStatus::Usage,
        _ => GqStatus::Numeric,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> GqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GqStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            GqStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GqStatus::Panic
        }
    }
}

unsafe fn body_ref<'a>(body: *const GqBody) -> Result<&'a RandomQuotientBody, Fail> {
    body.as_ref().map(|b| &b.inner).ok_or(Fail::Null("body"))
}

unsafe fn out_ref<'a, T>(out: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    out.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn string<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail::Lib(Error::usage(format!("{what} is not valid UTF-8"))))
}

fn boxed_body(b: RandomQuotientBody) -> *mut GqBody {
    Box::into_raw(Box::new(GqBody { inner: b }))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples an `n x big_n` Gaussian body from `(master_seed, stream_index)`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to be
/// released with [`gq_body_free`].
#[no_mangle]
pub unsafe extern "C" fn gq_body_sample(
    n: usize,
    big_n: usize,
    master_seed: u64,
    stream_index: u64,
    out: *mut *mut GqBody,
) -> GqStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let b = RandomQuotientBody::sample(n, big_n, SeedSpec::new(master_seed, stream_index))?;
        *out = boxed_body(b);
        Ok(())
    })
}

/// Body from an `n x big_n` row-major matrix whose columns span `R^n`.
///
/// # Safety
/// `data` must point to `n * big_n` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gq_body_from_matrix(
    data: *const f64,
    n: usize,
    big_n: usize,
    out: *mut *mut GqBody,
) -> GqStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let len = n.checked_mul(big_n).ok_or_else(|| Error::usage("matrix size overflows"))?;
        let m = Matrix::from_vec(n, big_n, slice(data, len, "data")?.to_vec())?;
        *out = boxed_body(RandomQuotientBody::from_matrix(m)?);
        Ok(())
    })
}

/// Body from its text serialization.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gq_body_from_text(text: *const c_char, out: *mut *mut GqBody) -> GqStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = boxed_body(RandomQuotientBody::from_text(string(text, "text")?)?);
        Ok(())
    })
}

/// Text serialization of a body. Release with [`gq_string_free`].
///
/// # Safety
/// `body` must be a live handle and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gq_body_to_text(body: *const GqBody, out: *mut *mut c_char) -> GqStatus {
    guard(|| {
        let b = body_ref(body)?;
        let out = out_ref(out, "out")?;
        *out = c_string(b.to_text());
        Ok(())
    })
}

/// # Safety
/// `body` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gq_body_free(body: *mut GqBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// # Safety
/// `body` must be a live handle; `n` and `big_n` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gq_body_dims(body: *const GqBody, n: *mut usize, big_n: *mut usize) -> GqStatus {
    guard(|| {
        let b = body_ref(body)?;
        *out_ref(n, "n")? = b.n();
        *out_ref(big_n, "big_n")? = b.num_columns();
        Ok(())
    })
}

/// Gauge of `x` in the body; `len` must equal the body dimension.
///
/// # Safety
/// `body` must be a live handle, `x` must point to `len` doubles and `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn gq_body_norm(body: *const GqBody, x: *const f64, len: usize, out: *mut f64) -> GqStatus {
    guard(|| {
        let b = body_ref(body)?;
        let out = out_ref(out, "out")?;
        *out = b.norm(slice(x, len, "x")?)?;
        Ok(())
    })
}

/// Dual norm `max_j |<g_j, u>|`.
///
/// # Safety
/// As for [`gq_body_norm`].
#[no_mangle]
pub unsafe extern "C" fn gq_body_dual_norm(
    body: *const GqBody,
    u: *const f64,
    len: usize,
    out: *mut f64,
) -> GqStatus {
    guard(|| {
        let b = body_ref(body)?;
        let out = out_ref(out, "out")?;
        *out = b.dual_norm(slice(u, len, "u")?)?;
        Ok(())
    })
}

/// Norm of the `n x n` row-major operator `t` acting on the body's space.
///
/// # Safety
/// `t` must point to `n * n` doubles where `n` is the body dimension.
#[no_mangle]
pub unsafe extern "C" fn gq_body_operator_norm(
    body: *const GqBody,
    t: *const f64,
    n: usize,
    out: *mut f64,
) -> GqStatus {
    guard(|| {
        let b = body_ref(body)?;
        let out = out_ref(out, "out")?;
        let len = n.checked_mul(n).ok_or_else(|| Error::usage("matrix size overflows"))?;
        let m = Matrix::from_vec(n, n, slice(t, len, "t")?.to_vec())?;
        *out = b.operator_norm(&m)?;
        Ok(())
    })
}

/// Runs a verification suite with its default configuration and the
/// built-in thresholds; `trials == 0` keeps the default trial count.
/// Writes the JSON report (release with [`gq_string_free`]) and whether
/// all checks passed.
///
/// # Safety
/// `suite` must be a NUL-terminated string; `report_json` and `pass` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn gq_verify_suite(
    suite: *const c_char,
    master_seed: u64,
    trials: usize,
    report_json: *mut *mut c_char,
    pass: *mut bool,
) -> GqStatus {
    guard(|| {
        let id: SuiteId = string(suite, "suite")?.parse()?;
        let out = out_ref(report_json, "report_json")?;
        let pass = out_ref(pass, "pass")?;
        let mut config = SuiteConfig::default_for(id, master_seed, &Thresholds::builtin());
        if trials > 0 {
            config.trials = trials;
        }
        let report = run_suite(&config)?;
        *pass = report.pass;
        *out = c_string(report.to_json());
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
