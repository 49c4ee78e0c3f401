//! C ABI over the `wavepack` core.
//!
//! Every function returns a [`WpStatus`]; on failure the message is kept
//! per thread and read back with [`wp_last_error`]. Filters and operators
//! are opaque heap handles released with their `_free` function. Buffers
//! are caller-owned; images are channel-major row-major, packet tensors are
//! laid out packet, channel, row, column.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use wavepack::filterbank::{verify_alias, verify_pr, BUILTIN_TOLERANCE};
use wavepack::packets::{iwpt_2d, packet_label, wpt_2d};
use wavepack::sparse_transform::{analysis_matrix_1d, analysis_matrix_2d, synthesis_matrix_1d, synthesis_matrix_2d};
use wavepack::{builtin_filter, BoundaryMode, Error, Image, Ordering, PacketTensor, SparseOperator, WaveletFilter};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NotInvertible = 4,
    BufferTooSmall = 5,
    NumericalFailure = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpBoundaryMode {
    Truncated = 0,
    GramSchmidt = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpOrdering {
    Natural = 0,
    Frequency = 1,
}

/// Which of the four filters [`wp_filter_coefficients`] copies out.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpFilterKind {
    DecLo = 0,
    DecHi = 1,
    RecLo = 2,
    RecHi = 3,
}

/// Opaque filter bank handle.
pub struct WpFilter(WaveletFilter);

/// Opaque sparse operator handle.
pub struct WpOperator(SparseOperator);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: WpStatus, msg: impl Into<String>) -> WpStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> WpStatus {
    match e {
        Error::ShapeMismatch(_) | Error::NotDivisible { .. } | Error::SignalTooShort { .. } | Error::LevelTooDeep { .. } => {
            WpStatus::ShapeMismatch
        }
        Error::LossyInverse(_) => WpStatus::NotInvertible,
        Error::RankDeficient { .. } | Error::NonFinite { .. } => WpStatus::NumericalFailure,
        _ => WpStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), WpStatus>) -> WpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WpStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(WpStatus::Panic, "internal panic"),
    }
}

fn core<T>(r: wavepack::Result<T>) -> Result<T, WpStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, WpStatus> {
    p.as_ref().ok_or_else(|| fail(WpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn in_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], WpStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(WpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], WpStatus> {
    if len < need {
        return Err(fail(
            WpStatus::BufferTooSmall,
            format!("{what} holds {len} values, {need} needed"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(WpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), WpStatus> {
    if p.is_null() {
        return Err(fail(WpStatus::NullPointer, format!("{what} is null")));
    }
    p.write(v);
    Ok(())
}

fn mode_of(m: WpBoundaryMode) -> BoundaryMode {
    match m {
        WpBoundaryMode::Truncated => BoundaryMode::Truncated,
        WpBoundaryMode::GramSchmidt => BoundaryMode::GramSchmidt,
    }
}

fn ordering_of(o: WpOrdering) -> Ordering {
    match o {
        WpOrdering::Natural => Ordering::Natural,
        WpOrdering::Frequency => Ordering::Frequency,
    }
}

/// Copies the last error of this thread as a NUL-terminated string into
/// `buf` (truncating) and returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn wp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Looks up a builtin filter bank (`haar`, `db1`..`db5`, `sym4`, `sym5`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_filter_new(name: *const c_char, out: *mut *mut WpFilter) -> WpStatus {
    guard(|| {
        if name.is_null() {
            return Err(fail(WpStatus::NullPointer, "name is null"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| fail(WpStatus::InvalidArgument, "name is not UTF-8"))?;
        let filter = core(builtin_filter(name))?;
        put(out, Box::into_raw(Box::new(WpFilter(filter))), "out")
    })
}

/// # Safety
/// `filter` must be null or a handle from [`wp_filter_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wp_filter_free(filter: *mut WpFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Number of taps.
///
/// # Safety
/// `filter` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_filter_length(filter: *const WpFilter, out: *mut usize) -> WpStatus {
    guard(|| put(out, as_ref(filter, "filter")?.0.len(), "out"))
}

/// Copies one of the four filters into `out` (at least the filter length).
///
/// # Safety
/// `filter` must be a live handle; `out` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn wp_filter_coefficients(
    filter: *const WpFilter,
    kind: WpFilterKind,
    out: *mut f64,
    len: usize,
) -> WpStatus {
    guard(|| {
        let f = &as_ref(filter, "filter")?.0;
        let taps = match kind {
            WpFilterKind::DecLo => &f.dec_lo,
            WpFilterKind::DecHi => &f.dec_hi,
            WpFilterKind::RecLo => &f.rec_lo,
            WpFilterKind::RecHi => &f.rec_hi,
        };
        out_slice(out, len, taps.len(), "out")?[..taps.len()].copy_from_slice(taps);
        Ok(())
    })
}

/// Largest perfect-reconstruction and alias residuals; `passes` is set to 1
/// when both are below 1e-10.
///
/// # Safety
/// `filter` must be a live handle; the outputs must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn wp_filter_verify(
    filter: *const WpFilter,
    pr_residual: *mut f64,
    alias_residual: *mut f64,
    passes: *mut i32,
) -> WpStatus {
    guard(|| {
        let f = &as_ref(filter, "filter")?.0;
        let pr = verify_pr(f, BUILTIN_TOLERANCE).max_residual;
        let alias = verify_alias(f, BUILTIN_TOLERANCE);
        if !pr_residual.is_null() {
            *pr_residual = pr;
        }
        if !alias_residual.is_null() {
            *alias_residual = alias;
        }
        if !passes.is_null() {
            *passes = i32::from(pr < BUILTIN_TOLERANCE && alias < BUILTIN_TOLERANCE);
        }
        Ok(())
    })
}

unsafe fn new_operator(
    filter: *const WpFilter,
    out: *mut *mut WpOperator,
    build: impl FnOnce(&WaveletFilter) -> wavepack::Result<SparseOperator>,
) -> WpStatus {
    guard(|| {
        let op = core(build(&as_ref(filter, "filter")?.0))?;
        put(out, Box::into_raw(Box::new(WpOperator(op))), "out")
    })
}

/// Multi-level 1D analysis operator for signals of length `len`.
///
/// # Safety
/// `filter` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_operator_analysis_1d(
    filter: *const WpFilter,
    len: usize,
    levels: usize,
    mode: WpBoundaryMode,
    out: *mut *mut WpOperator,
) -> WpStatus {
    new_operator(filter, out, |f| analysis_matrix_1d(f, len, levels, mode_of(mode)))
}

/// Multi-level 1D synthesis operator.
///
/// # Safety
/// As [`wp_operator_analysis_1d`].
#[no_mangle]
pub unsafe extern "C" fn wp_operator_synthesis_1d(
    filter: *const WpFilter,
    len: usize,
    levels: usize,
    mode: WpBoundaryMode,
    out: *mut *mut WpOperator,
) -> WpStatus {
    new_operator(filter, out, |f| synthesis_matrix_1d(f, len, levels, mode_of(mode)))
}

/// Multi-level 2D analysis operator on row-major `height × width` planes.
///
/// # Safety
/// As [`wp_operator_analysis_1d`].
#[no_mangle]
pub unsafe extern "C" fn wp_operator_analysis_2d(
    filter: *const WpFilter,
    height: usize,
    width: usize,
    levels: usize,
    mode: WpBoundaryMode,
    out: *mut *mut WpOperator,
) -> WpStatus {
    new_operator(filter, out, |f| analysis_matrix_2d(f, height, width, levels, mode_of(mode)))
}

/// Multi-level 2D synthesis operator.
///
/// # Safety
/// As [`wp_operator_analysis_1d`].
#[no_mangle]
pub unsafe extern "C" fn wp_operator_synthesis_2d(
    filter: *const WpFilter,
    height: usize,
    width: usize,
    levels: usize,
    mode: WpBoundaryMode,
    out: *mut *mut WpOperator,
) -> WpStatus {
    new_operator(filter, out, |f| synthesis_matrix_2d(f, height, width, levels, mode_of(mode)))
}

/// # Safety
/// `op` must be null or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn wp_operator_free(op: *mut WpOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Rows, columns and stored nonzeros; any output may be null.
///
/// # Safety
/// `op` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wp_operator_shape(
    op: *const WpOperator,
    rows: *mut usize,
    cols: *mut usize,
    nnz: *mut usize,
) -> WpStatus {
    guard(|| {
        let op = &as_ref(op, "op")?.0;
        for (p, v) in [(rows, op.rows()), (cols, op.cols()), (nnz, op.nnz())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies the nonzeros in row-major order into three arrays of length
/// `cap` (at least nnz).
///
/// # Safety
/// `op` must be a live handle; each array must be valid for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn wp_operator_triplets(
    op: *const WpOperator,
    rows: *mut usize,
    cols: *mut usize,
    values: *mut f64,
    cap: usize,
) -> WpStatus {
    guard(|| {
        let op = &as_ref(op, "op")?.0;
        let n = op.nnz();
        let r = out_slice(rows, cap, n, "rows")?;
        let c = out_slice(cols, cap, n, "cols")?;
        let v = out_slice(values, cap, n, "values")?;
        for (k, &(i, j, x)) in op.entries().iter().enumerate() {
            r[k] = i;
            c[k] = j;
            v[k] = x;
        }
        Ok(())
    })
}

/// `y = op · x`.
///
/// # Safety
/// `op` must be a live handle; `x` valid for `x_len`, `y` for `y_len` values.
#[no_mangle]
pub unsafe extern "C" fn wp_operator_apply(
    op: *const WpOperator,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> WpStatus {
    guard(|| {
        let op = &as_ref(op, "op")?.0;
        let result = core(op.matvec(in_slice(x, x_len, "x")?))?;
        out_slice(y, y_len, result.len(), "y")?[..result.len()].copy_from_slice(&result);
        Ok(())
    })
}

/// Level-`level` packet transform of a `channels × height × width` image.
/// `out` receives `channels · height · width` values.
///
/// # Safety
/// `filter` must be a live handle; `image` and `out` valid for their lengths.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wp_wpt2d(
    filter: *const WpFilter,
    image: *const f64,
    channels: usize,
    height: usize,
    width: usize,
    level: usize,
    mode: WpBoundaryMode,
    ordering: WpOrdering,
    out: *mut f64,
    out_len: usize,
) -> WpStatus {
    guard(|| {
        let f = &as_ref(filter, "filter")?.0;
        let n = channels * height * width;
        let img = core(Image::new(channels, height, width, in_slice(image, n, "image")?.to_vec()))?;
        let packets = core(wpt_2d(&img, f, level, mode_of(mode), ordering_of(ordering)))?;
        out_slice(out, out_len, n, "out")?[..n].copy_from_slice(packets.data());
        Ok(())
    })
}

/// Inverse of [`wp_wpt2d`] with the same shape arguments.
///
/// # Safety
/// As [`wp_wpt2d`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wp_iwpt2d(
    filter: *const WpFilter,
    packets: *const f64,
    channels: usize,
    height: usize,
    width: usize,
    level: usize,
    mode: WpBoundaryMode,
    ordering: WpOrdering,
    out: *mut f64,
    out_len: usize,
) -> WpStatus {
    guard(|| {
        let f = &as_ref(filter, "filter")?.0;
        let n = channels * height * width;
        if level == 0 || level >= usize::BITS as usize || !height.is_multiple_of(1 << level) || !width.is_multiple_of(1 << level) {
            return Err(fail(
                WpStatus::ShapeMismatch,
                format!("{height}x{width} is not divisible by 2^{level}"),
            ));
        }
        let tensor = core(PacketTensor::new(
            level,
            channels,
            height >> level,
            width >> level,
            ordering_of(ordering),
            in_slice(packets, n, "packets")?.to_vec(),
        ))?;
        let img = core(iwpt_2d(&tensor, f, mode_of(mode)))?;
        out_slice(out, out_len, n, "out")?[..n].copy_from_slice(&img.data);
        Ok(())
    })
}

/// Writes the label of packet `index` as a NUL-terminated string; `len`
/// must exceed the level.
///
/// # Safety
/// `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn wp_packet_label(
    index: usize,
    level: usize,
    ordering: WpOrdering,
    buf: *mut c_char,
    len: usize,
) -> WpStatus {
    guard(|| {
        let label = core(packet_label(index, level, ordering_of(ordering)))?;
        let dst = out_slice(buf, len, label.len() + 1, "buf")?;
        for (d, b) in dst.iter_mut().zip(label.bytes()) {
            *d = b as c_char;
        }
        dst[label.len()] = 0;
        Ok(())
    })
}
