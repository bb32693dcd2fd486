//! C ABI over the rangent library.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call
//! returns a [`RangentStatus`]; on failure the message is available from
//! [`rangent_last_error`] on the same thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rangent::entropy::{fit_anchors, h_diff, AnchorInit, AnchorSet, FitConfig, ScaleMode};
use rangent::geometry::{chans_hull, monotone_chain_hull, partition_merge_hull, HullResult};
use rangent::oracle::min_entropy_partition;
use rangent::restructure::{restructure, RestructureConfig};
use rangent::{Error, HardPartition, PointSet};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangentStatus {
    Ok = 0,
    NullPointer = 1,
    Invalid = 2,
    Numerical = 3,
    SizeGuard = 4,
    Io = 5,
    Panic = 6,
}

/// Hull algorithm selector for [`rangent_hull`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangentHullMethod {
    MonotoneChain = 0,
    Chan = 1,
    PartitionMerge = 2,
}

/// Opaque point set.
pub struct RangentPoints(PointSet);

/// Opaque anchor set of the ball estimator.
pub struct RangentAnchors(AnchorSet);

/// Opaque hull result.
pub struct RangentHull(HullResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RangentStatus {
    match e {
        Error::NonFinite { .. } | Error::Divergence { .. } | Error::DegenerateScale | Error::DegenerateCovariance => {
            RangentStatus::Numerical
        }
        Error::SizeGuard { .. } => RangentStatus::SizeGuard,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => RangentStatus::Io,
        _ => RangentStatus::Invalid,
    }
}

/// Runs `f`, mapping errors and panics to a status and the thread's last
/// error message.
fn guard(f: impl FnOnce() -> Result<(), (RangentStatus, String)>) -> RangentStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RangentStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RangentStatus::Panic
        }
    }
}

fn lib<T>(r: rangent::Result<T>) -> Result<T, (RangentStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (RangentStatus, String) {
    (RangentStatus::NullPointer, format!("null pointer: {what}"))
}

fn invalid(msg: &str) -> (RangentStatus, String) {
    (RangentStatus::Invalid, msg.to_string())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RangentStatus, String)> {
    // SAFETY: caller guarantees `p` is null or a live handle.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], (RangentStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `len` writable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), (RangentStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is a valid location for a pointer.
    unsafe { *out = Box::into_raw(Box::new(v)) };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn rangent_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rangent_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `n * d` row-major coordinates into a new point set.
///
/// # Safety
/// `data` must point to `n * d` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rangent_points_new(
    data: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut RangentPoints,
) -> RangentStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let len = n.checked_mul(d).ok_or_else(|| invalid("n * d overflows"))?;
        // SAFETY: caller guarantees `len` readable doubles.
        let flat = unsafe { std::slice::from_raw_parts(data, len) }.to_vec();
        let s = lib(PointSet::from_flat(flat, d))?;
        unsafe { put(out, RangentPoints(s)) }
    })
}

/// # Safety
/// `p` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rangent_points_free(p: *mut RangentPoints) {
    if !p.is_null() {
        // SAFETY: handle created by `Box::into_raw`.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Number of points, 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rangent_points_len(p: *const RangentPoints) -> usize {
    unsafe { p.as_ref() }.map_or(0, |p| p.0.len())
}

/// Dimension, 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rangent_points_dim(p: *const RangentPoints) -> usize {
    unsafe { p.as_ref() }.map_or(0, |p| p.0.dim())
}

/// Copies the coordinates into `buf`, which must hold exactly `len * dim`
/// doubles.
///
/// # Safety
/// `p` must be a live handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rangent_points_copy(p: *const RangentPoints, buf: *mut f64, len: usize) -> RangentStatus {
    guard(|| {
        let p = unsafe { deref(p, "points") }?;
        let flat = p.0.as_flat();
        if len != flat.len() {
            return Err(invalid("buffer length must equal len * dim"));
        }
        unsafe { out_slice(buf, len, "buf") }?.copy_from_slice(flat);
        Ok(())
    })
}

/// Fits `k` anchors by descending the ball estimator from a k-means++
/// initialization; `normalized` selects the scale-invariant temperature.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rangent_fit_anchors(
    p: *const RangentPoints,
    k: usize,
    alpha: f64,
    normalized: bool,
    steps: usize,
    lr: f64,
    seed: u64,
    out: *mut *mut RangentAnchors,
) -> RangentStatus {
    guard(|| {
        let p = unsafe { deref(p, "points") }?;
        let cfg = FitConfig {
            scale_mode: if normalized { ScaleMode::Normalized } else { ScaleMode::Raw },
            init: AnchorInit::Kmeanspp,
            steps,
            lr,
            seed,
            ..FitConfig::new(k, alpha)
        };
        let r = lib(fit_anchors(&p.0, &cfg))?;
        unsafe { put(out, RangentAnchors(r.anchors)) }
    })
}

/// # Safety
/// `a` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rangent_anchors_free(a: *mut RangentAnchors) {
    if !a.is_null() {
        // SAFETY: handle created by `Box::into_raw`.
        drop(unsafe { Box::from_raw(a) });
    }
}

/// Number of anchors, 0 for NULL.
///
/// # Safety
/// `a` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rangent_anchors_k(a: *const RangentAnchors) -> usize {
    unsafe { a.as_ref() }.map_or(0, |a| a.0.k())
}

/// Evaluates the ball entropy estimator. When `grad` is non-NULL it
/// receives the gradient with respect to the points (`grad_len` must be
/// `n * d`).
///
/// # Safety
/// Handles must be live; `value` writable; `grad` NULL or `grad_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rangent_h_diff(
    p: *const RangentPoints,
    a: *const RangentAnchors,
    value: *mut f64,
    grad: *mut f64,
    grad_len: usize,
) -> RangentStatus {
    guard(|| {
        let p = unsafe { deref(p, "points") }?;
        let a = unsafe { deref(a, "anchors") }?;
        if value.is_null() {
            return Err(null("value"));
        }
        let want_grad = !grad.is_null();
        if want_grad && grad_len != p.0.as_flat().len() {
            return Err(invalid("gradient buffer length must equal n * d"));
        }
        let rep = lib(h_diff(&p.0, &a.0, want_grad))?;
        // SAFETY: checked non-null above.
        unsafe { *value = rep.value };
        if want_grad {
            let g = rep.grad_points.expect("gradient requested");
            unsafe { out_slice(grad, grad_len, "grad") }?.copy_from_slice(&g);
        }
        Ok(())
    })
}

/// Computes the 2-D convex hull. `labels` (one per point) is required for
/// [`RangentHullMethod::PartitionMerge`] and ignored otherwise.
///
/// # Safety
/// `p` must be a live handle; `labels` NULL or `len(p)` readable values;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rangent_hull(
    p: *const RangentPoints,
    method: RangentHullMethod,
    labels: *const usize,
    out: *mut *mut RangentHull,
) -> RangentStatus {
    guard(|| {
        let p = unsafe { deref(p, "points") }?;
        let h = match method {
            RangentHullMethod::MonotoneChain => lib(monotone_chain_hull(&p.0))?,
            RangentHullMethod::Chan => lib(chans_hull(&p.0))?,
            RangentHullMethod::PartitionMerge => {
                if labels.is_null() {
                    return Err(null("labels"));
                }
                // SAFETY: caller guarantees one label per point.
                let raw = unsafe { std::slice::from_raw_parts(labels, p.0.len()) };
                let part = lib(HardPartition::from_labels(raw))?;
                lib(partition_merge_hull(&p.0, &part))?
            }
        };
        unsafe { put(out, RangentHull(h)) }
    })
}

/// # Safety
/// `h` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rangent_hull_free(h: *mut RangentHull) {
    if !h.is_null() {
        // SAFETY: handle created by `Box::into_raw`.
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Number of hull vertices, 0 for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rangent_hull_len(h: *const RangentHull) -> usize {
    unsafe { h.as_ref() }.map_or(0, |h| h.0.vertices.len())
}

/// Hull area, NaN for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rangent_hull_area(h: *const RangentHull) -> f64 {
    unsafe { h.as_ref() }.map_or(f64::NAN, |h| h.0.area)
}

/// Primitive operation count, 0 for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rangent_hull_op_count(h: *const RangentHull) -> u64 {
    unsafe { h.as_ref() }.map_or(0, |h| h.0.op_count)
}

/// Copies the counter-clockwise vertices as `x, y` pairs; `len` must be
/// `2 * rangent_hull_len(h)`.
///
/// # Safety
/// `h` must be a live handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rangent_hull_vertices(h: *const RangentHull, buf: *mut f64, len: usize) -> RangentStatus {
    guard(|| {
        let h = unsafe { deref(h, "hull") }?;
        if len != 2 * h.0.vertices.len() {
            return Err(invalid("buffer length must equal 2 * vertex count"));
        }
        let dst = unsafe { out_slice(buf, len, "buf") }?;
        for (c, v) in dst.chunks_exact_mut(2).zip(&h.0.vertices) {
            c.copy_from_slice(v);
        }
        Ok(())
    })
}

/// Exact minimum-entropy partition into at least `parts_min` realizable
/// parts. Writes the normalized entropy and, when `labels` is non-NULL,
/// one part label per point (`labels_len` must equal the point count).
///
/// # Safety
/// `p` must be a live handle; `entropy` writable; `labels` NULL or
/// `labels_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn rangent_min_entropy_partition(
    p: *const RangentPoints,
    parts_min: usize,
    entropy: *mut f64,
    labels: *mut usize,
    labels_len: usize,
) -> RangentStatus {
    guard(|| {
        let p = unsafe { deref(p, "points") }?;
        if entropy.is_null() {
            return Err(null("entropy"));
        }
        if !labels.is_null() && labels_len != p.0.len() {
            return Err(invalid("label buffer length must equal the point count"));
        }
        let r = lib(min_entropy_partition(&p.0, parts_min))?;
        // SAFETY: checked non-null above.
        unsafe { *entropy = r.entropy_normalized };
        if !labels.is_null() {
            unsafe { out_slice(labels, labels_len, "labels") }?.copy_from_slice(&r.partition.labels);
        }
        Ok(())
    })
}

/// Restructures the points with the ball estimator and default estimator
/// settings, returning the displaced set.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rangent_restructure(
    p: *const RangentPoints,
    lambda: f64,
    mu: f64,
    steps: usize,
    lr: f64,
    seed: u64,
    out: *mut *mut RangentPoints,
) -> RangentStatus {
    guard(|| {
        let p = unsafe { deref(p, "points") }?;
        let cfg = RestructureConfig {
            lambda,
            mu,
            steps,
            lr,
            seed,
            ..Default::default()
        };
        let r = lib(restructure(&p.0, &cfg))?;
        unsafe { put(out, RangentPoints(r.output)) }
    })
}

/// Reads a point set from a CSV (header row) or JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rangent_points_load(path: *const c_char, out: *mut *mut RangentPoints) -> RangentStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let s = lib(PointSet::load(path.as_ref()))?;
        unsafe { put(out, RangentPoints(s)) }
    })
}
