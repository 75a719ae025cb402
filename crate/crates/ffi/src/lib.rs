//! C ABI for `smim`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_generate`
//! style constructors and released with the matching `*_free`. Every fallible
//! call returns an [`SmimStatus`]; on failure [`smim_last_error`] describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use smim::complexity::{estimate_xi_norm, XiOptions};
use smim::estimator::{one_step, oracle_kernel, Kernel, OracleOptions, RankRule, UnfoldConfig};
use smim::models::{io, random_frame, sample_mim, Dataset, LinkSpec};
use smim::tensor_core::{frame_distance, Frame};
use smim::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Degenerate = 4,
    Stall = 5,
    Io = 6,
    Format = 7,
    Config = 8,
    Budget = 9,
    Panic = 10,
}

/// Link function description.
pub struct SmimLink(LinkSpec);
/// Orthonormal `d x s` frame.
pub struct SmimFrame(Frame);
/// Labelled samples.
pub struct SmimDataset(Dataset);
/// Kernel feature map.
pub struct SmimKernel(Kernel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> SmimStatus {
    match err {
        Error::InvalidArgument(_) | Error::OrderCap { .. } => SmimStatus::InvalidArgument,
        Error::Shape(_) => SmimStatus::Shape,
        Error::Budget(_) => SmimStatus::Budget,
        Error::Degenerate(_) => SmimStatus::Degenerate,
        Error::Stall(_) => SmimStatus::Stall,
        Error::Config(_) => SmimStatus::Config,
        Error::Io(_) => SmimStatus::Io,
        Error::Format(_) => SmimStatus::Format,
    }
}

/// Run `f`, mapping errors and panics to a status and the last-error message.
fn guard(f: impl FnOnce() -> Result<(), SmimStatusError>) -> SmimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmimStatus::Ok,
        Ok(Err(SmimStatusError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SmimStatus::Panic
        }
    }
}

struct SmimStatusError(SmimStatus, String);

impl From<Error> for SmimStatusError {
    fn from(e: Error) -> Self {
        SmimStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> SmimStatusError {
    SmimStatusError(SmimStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> SmimStatusError {
    SmimStatusError(SmimStatus::InvalidArgument, msg.into())
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, SmimStatusError> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SmimStatusError> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{what}` is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), SmimStatusError> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn smim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn smim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a link from JSON, e.g. `{"kind":"parity","s":2,"sigma":0.1}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_link_from_json(json: *const c_char, out: *mut *mut SmimLink) -> SmimStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let link: LinkSpec =
            serde_json::from_str(text).map_err(|e| SmimStatusError(SmimStatus::Config, e.to_string()))?;
        link.validate()?;
        put(out, SmimLink(link))
    })
}

/// Index rank `s` of the link.
///
/// # Safety
/// `link` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn smim_link_rank(link: *const SmimLink) -> usize {
    link.as_ref().map_or(0, |l| l.0.s())
}

/// # Safety
/// `link` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn smim_link_free(link: *mut SmimLink) {
    free(link)
}

/// Haar-random orthonormal `d x s` frame from `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_frame_random(d: usize, s: usize, seed: u64, out: *mut *mut SmimFrame) -> SmimStatus {
    guard(|| {
        let mut rng = smim::rng::stream(seed, &[smim::rng::tag::FRAME]);
        put(out, SmimFrame(random_frame(d, s, &mut rng)?))
    })
}

/// Frame from `d * s` column-major entries; the columns must be orthonormal.
///
/// # Safety
/// `data` must point to `d * s` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_frame_from_matrix(
    d: usize,
    s: usize,
    data: *const f64,
    out: *mut *mut SmimFrame,
) -> SmimStatus {
    guard(|| {
        if data.is_null() && d * s > 0 {
            return Err(null("data"));
        }
        let slice = if d * s == 0 { &[][..] } else { std::slice::from_raw_parts(data, d * s) };
        let m = nalgebra::DMatrix::from_column_slice(d, s, slice);
        put(out, SmimFrame(Frame::new(m)?))
    })
}

/// # Safety
/// `frame` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn smim_frame_dim(frame: *const SmimFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.0.dim())
}

/// # Safety
/// `frame` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn smim_frame_rank(frame: *const SmimFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.0.rank())
}

/// Copy the column-major entries into `buf`, which holds `len` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn smim_frame_copy(frame: *const SmimFrame, buf: *mut f64, len: usize) -> SmimStatus {
    guard(|| {
        let f = borrow(frame, "frame")?;
        let src = f.0.matrix().as_slice();
        if len < src.len() {
            return Err(SmimStatusError(SmimStatus::Shape, format!("buffer holds {len} values, need {}", src.len())));
        }
        if !src.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        }
        Ok(())
    })
}

/// Operator-norm distance between the projectors onto two frames.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_frame_distance(a: *const SmimFrame, b: *const SmimFrame, out: *mut f64) -> SmimStatus {
    guard(|| {
        let v = frame_distance(&borrow(a, "a")?.0, &borrow(b, "b")?.0)?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// # Safety
/// `frame` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn smim_frame_free(frame: *mut SmimFrame) {
    free(frame)
}

/// Sample `n` points of the model with planted frame `frame`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_dataset_generate(
    link: *const SmimLink,
    frame: *const SmimFrame,
    n: usize,
    seed: u64,
    out: *mut *mut SmimDataset,
) -> SmimStatus {
    guard(|| {
        let data = sample_mim(&borrow(link, "link")?.0, &borrow(frame, "frame")?.0, n, seed)?;
        put(out, SmimDataset(data))
    })
}

/// Read a text or binary dataset file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_dataset_read(path: *const c_char, out: *mut *mut SmimDataset) -> SmimStatus {
    guard(|| put(out, SmimDataset(io::read_dataset(Path::new(str_arg(path, "path")?))?)))
}

/// Write a dataset; `binary != 0` selects the binary variant.
///
/// # Safety
/// `data` must be live; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn smim_dataset_write(data: *const SmimDataset, path: *const c_char, binary: i32) -> SmimStatus {
    guard(|| {
        io::write_dataset(Path::new(str_arg(path, "path")?), &borrow(data, "data")?.0, binary != 0)?;
        Ok(())
    })
}

/// # Safety
/// `data` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn smim_dataset_len(data: *const SmimDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `data` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn smim_dataset_dim(data: *const SmimDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `data` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn smim_dataset_free(data: *mut SmimDataset) {
    free(data)
}

/// Oracle kernel for degree `l` calibrated on `n_cal` planted samples.
///
/// # Safety
/// `link` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_kernel_oracle(
    link: *const SmimLink,
    d: usize,
    l: usize,
    n_cal: usize,
    seed: u64,
    out: *mut *mut SmimKernel,
) -> SmimStatus {
    guard(|| {
        let opts = OracleOptions { n_cal, ..OracleOptions::default() };
        put(out, SmimKernel(oracle_kernel(&borrow(link, "link")?.0, d, l, &opts, seed)?))
    })
}

/// Kernel from its JSON serialisation.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_kernel_from_json(json: *const c_char, out: *mut *mut SmimKernel) -> SmimStatus {
    guard(|| put(out, SmimKernel(Kernel::from_json(str_arg(json, "json")?)?)))
}

/// Number of kernel features.
///
/// # Safety
/// `kernel` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn smim_kernel_rank(kernel: *const SmimKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.0.rank())
}

/// # Safety
/// `kernel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn smim_kernel_free(kernel: *mut SmimKernel) {
    free(kernel)
}

/// One unfolding step at degree `l`. `t = s0 = 0` selects adaptive ranks.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_one_step(
    data: *const SmimDataset,
    kernel: *const SmimKernel,
    l: usize,
    t: usize,
    s0: usize,
    seed: u64,
    out: *mut *mut SmimFrame,
) -> SmimStatus {
    guard(|| {
        let data = &borrow(data, "data")?.0;
        let ranks = match (t, s0) {
            (0, 0) => RankRule::Adaptive,
            (0, _) | (_, 0) => return Err(invalid("t and s0 must both be zero or both positive")),
            _ => RankRule::Fixed { t, s0 },
        };
        let mut cfg = UnfoldConfig::new(l, data.dim(), ranks);
        cfg.seed = seed;
        let res = one_step(data, &cfg, &borrow(kernel, "kernel")?.0)?;
        put(out, SmimFrame(res.frame))
    })
}

/// Monte Carlo estimate of the squared degree-`l` coefficient norm of the
/// unconditioned model at dimension `d`, with its standard error.
///
/// # Safety
/// `link` must be live; `estimate` and `std_error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smim_xi_norm(
    link: *const SmimLink,
    d: usize,
    l: usize,
    n_mc: usize,
    seed: u64,
    estimate: *mut f64,
    std_error: *mut f64,
) -> SmimStatus {
    guard(|| {
        let link = &borrow(link, "link")?.0;
        if d <= link.s() {
            return Err(invalid("d must exceed the link rank"));
        }
        let w = Frame::canonical(d, link.s());
        let opts = XiOptions { n_mc, ..XiOptions::default() };
        let e = estimate_xi_norm(link, &w, &Frame::empty(d), l, &opts, seed)?;
        *estimate.as_mut().ok_or_else(|| null("estimate"))? = e.estimate;
        *std_error.as_mut().ok_or_else(|| null("std_error"))? = e.std_error;
        Ok(())
    })
}
