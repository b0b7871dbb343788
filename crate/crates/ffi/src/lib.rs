//! C ABI over the `burns` library.
//!
//! Every fallible call returns a [`BurnsStatus`]; on failure the message is
//! kept per thread and read with [`burns_last_error_message`]. Objects are
//! opaque handles created by `*_new` and released by the matching `*_free`.
//! Buffers are caller-owned; calls that fill one take its length and report
//! [`BurnsStatus::BufferTooSmall`] if it is short.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use burns::spectral::{self, SpectrumBundle};
use burns::urnsim::{stream_rng, StreamRng, UrnState};
use burns::wlimit::{self, Variant};
use burns::{make_rule, Algorithm, Error};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurnsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidInput = 3,
    InvalidState = 4,
    NumericFailure = 5,
    NonContractive = 6,
    Resource = 7,
    PhaseMismatch = 8,
    Invariant = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

pub const BURNS_ALGORITHM_OPTIMISTIC: u32 = 0;
pub const BURNS_ALGORITHM_PRUDENT: u32 = 1;

pub const BURNS_VARIANT_CT: u32 = 0;
pub const BURNS_VARIANT_DT: u32 = 1;

/// Scalar spectral data; `sigma3` is NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurnsSpectrumInfo {
    pub m: usize,
    pub lambda2_re: f64,
    pub lambda2_im: f64,
    pub sigma2: f64,
    pub tau2: f64,
    pub sigma3: f64,
    pub residuals: f64,
    pub eigen_residual: f64,
}

/// Opaque spectrum handle.
pub struct BurnsSpectrum {
    inner: SpectrumBundle,
}

/// Opaque urn handle: chain state plus its generator.
pub struct BurnsUrn {
    state: UrnState,
    rng: StreamRng,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BurnsStatus {
    match e {
        Error::InvalidParameter(_) => BurnsStatus::InvalidParameter,
        Error::InvalidInput(_) => BurnsStatus::InvalidInput,
        Error::InvalidState(_) => BurnsStatus::InvalidState,
        Error::NumericFailure { .. } | Error::DegenerateCoefficient { .. } => BurnsStatus::NumericFailure,
        Error::NonContractive(_) => BurnsStatus::NonContractive,
        Error::Resource(_) => BurnsStatus::Resource,
        Error::PhaseMismatch(_) => BurnsStatus::PhaseMismatch,
        Error::Invariant(_) => BurnsStatus::Invariant,
    }
}

fn fail(status: BurnsStatus, msg: impl Into<String>) -> BurnsStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), BurnsStatus>) -> BurnsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BurnsStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(BurnsStatus::Panic, msg)
        }
    }
}

fn lib<T>(r: burns::Result<T>) -> Result<T, BurnsStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), BurnsStatus> {
    if p.is_null() {
        Err(fail(BurnsStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn room(have: usize, need: usize) -> Result<(), BurnsStatus> {
    if have < need {
        Err(fail(BurnsStatus::BufferTooSmall, format!("buffer holds {have}, need {need}")))
    } else {
        Ok(())
    }
}

// selectors are plain integers so that out-of-range values from C are
// rejected rather than undefined
fn algorithm_of(a: u32) -> Result<Algorithm, BurnsStatus> {
    match a {
        BURNS_ALGORITHM_OPTIMISTIC => Ok(Algorithm::Optimistic),
        BURNS_ALGORITHM_PRUDENT => Ok(Algorithm::Prudent),
        x => Err(fail(BurnsStatus::InvalidParameter, format!("unknown algorithm {x}"))),
    }
}

fn variant_of(v: u32) -> Result<Variant, BurnsStatus> {
    match v {
        BURNS_VARIANT_CT => Ok(Variant::Ct),
        BURNS_VARIANT_DT => Ok(Variant::Dt),
        x => Err(fail(BurnsStatus::InvalidParameter, format!("unknown variant {x}"))),
    }
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn burns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the last error message on this thread, without the
/// terminating NUL; 0 if none.
#[no_mangle]
pub extern "C" fn burns_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copies the last error message (NUL-terminated, truncated to fit) into
/// `buf`. Returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn burns_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Normalized characteristic polynomial at `x`.
#[no_mangle]
pub unsafe extern "C" fn burns_char_poly_eval(m: usize, re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> BurnsStatus {
    guard(|| {
        non_null(out_re, "out_re")?;
        non_null(out_im, "out_im")?;
        if m < 2 {
            return Err(fail(BurnsStatus::InvalidParameter, format!("m must be at least 2, got {m}")));
        }
        let v = spectral::char_poly_eval(m, Complex64::new(re, im));
        *out_re = v.re;
        *out_im = v.im;
        Ok(())
    })
}

/// Computes the spectrum for parameter `m`; `*out` receives the handle.
#[no_mangle]
pub unsafe extern "C" fn burns_spectrum_new(m: usize, out: *mut *mut BurnsSpectrum) -> BurnsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = std::ptr::null_mut();
        let inner = lib(spectral::compute_spectrum(m))?;
        *out = Box::into_raw(Box::new(BurnsSpectrum { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn burns_spectrum_free(h: *mut BurnsSpectrum) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[no_mangle]
pub unsafe extern "C" fn burns_spectrum_info(h: *const BurnsSpectrum, out: *mut BurnsSpectrumInfo) -> BurnsStatus {
    guard(|| {
        non_null(h, "spectrum")?;
        non_null(out, "out")?;
        let s = &(*h).inner;
        *out = BurnsSpectrumInfo {
            m: s.m,
            lambda2_re: s.lambda2.re,
            lambda2_im: s.lambda2.im,
            sigma2: s.sigma2,
            tau2: s.tau2,
            sigma3: s.sigma3.unwrap_or(f64::NAN),
            residuals: s.residuals,
            eigen_residual: s.eigen_residual,
        };
        Ok(())
    })
}

/// Number of roots held (equals `m`); 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn burns_spectrum_root_count(h: *const BurnsSpectrum) -> usize {
    if h.is_null() {
        0
    } else {
        (*h).inner.roots.len()
    }
}

/// Roots in decreasing real part, into two parallel buffers of length `len`.
#[no_mangle]
pub unsafe extern "C" fn burns_spectrum_roots(h: *const BurnsSpectrum, re: *mut f64, im: *mut f64, len: usize) -> BurnsStatus {
    guard(|| {
        non_null(h, "spectrum")?;
        non_null(re, "re")?;
        non_null(im, "im")?;
        let roots = &(*h).inner.roots;
        room(len, roots.len())?;
        for (i, r) in roots.iter().enumerate() {
            *re.add(i) = r.re;
            *im.add(i) = r.im;
        }
        Ok(())
    })
}

/// Stationary proportions `v1` (length `m`).
#[no_mangle]
pub unsafe extern "C" fn burns_spectrum_v1(h: *const BurnsSpectrum, buf: *mut f64, len: usize) -> BurnsStatus {
    guard(|| {
        non_null(h, "spectrum")?;
        non_null(buf, "buf")?;
        let v = &(*h).inner.v1;
        room(len, v.len())?;
        std::ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// Urn chain from the B-tree start on stream `(seed, stream)`; `algorithm`
/// is one of the `BURNS_ALGORITHM_*` constants.
#[no_mangle]
pub unsafe extern "C" fn burns_urn_new(
    m: usize,
    algorithm: u32,
    seed: u64,
    stream: u64,
    out: *mut *mut BurnsUrn,
) -> BurnsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = std::ptr::null_mut();
        let rule = Arc::new(lib(make_rule(m, algorithm_of(algorithm)?))?);
        let start = rule.btree_start();
        let state = lib(UrnState::new(rule, &start))?;
        *out = Box::into_raw(Box::new(BurnsUrn {
            state,
            rng: stream_rng(seed, stream),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn burns_urn_free(h: *mut BurnsUrn) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Advances the chain by `steps` insertions.
#[no_mangle]
pub unsafe extern "C" fn burns_urn_step(h: *mut BurnsUrn, steps: u64) -> BurnsStatus {
    guard(|| {
        non_null(h, "urn")?;
        let u = &mut *h;
        for _ in 0..steps {
            lib(u.state.step(&mut u.rng))?;
        }
        Ok(())
    })
}

/// Number of node types; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn burns_urn_dim(h: *const BurnsUrn) -> usize {
    if h.is_null() {
        0
    } else {
        (*h).state.counts().len()
    }
}

/// Insertions performed so far; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn burns_urn_steps(h: *const BurnsUrn) -> u64 {
    if h.is_null() {
        0
    } else {
        (*h).state.n()
    }
}

/// Current gap counts per type.
#[no_mangle]
pub unsafe extern "C" fn burns_urn_counts(h: *const BurnsUrn, buf: *mut u64, len: usize) -> BurnsStatus {
    guard(|| {
        non_null(h, "urn")?;
        non_null(buf, "buf")?;
        let c = (*h).state.counts();
        room(len, c.len())?;
        std::ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len());
        Ok(())
    })
}

/// `count` samples (`variant` one of `BURNS_VARIANT_*`) of the depth-`depth` cascade approximation of `W` at the
/// B-tree anchor, into parallel buffers of length `len`.
#[no_mangle]
pub unsafe extern "C" fn burns_cascade_sample(
    variant: u32,
    m: usize,
    depth: u32,
    count: usize,
    seed: u64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> BurnsStatus {
    guard(|| {
        non_null(re, "re")?;
        non_null(im, "im")?;
        room(len, count)?;
        let lambda = lib(spectral::lambda2(m))?;
        let v = variant_of(variant)?;
        let anchor = wlimit::btree_anchor(v, m, lambda);
        let set = lib(wlimit::cascade_sample(v, m, lambda, anchor, depth, count, seed))?;
        for (i, w) in set.samples.iter().enumerate() {
            *re.add(i) = w.re;
            *im.add(i) = w.im;
        }
        Ok(())
    })
}

/// Exact moments `E W^p`, `p = 0..=pmax`, at the B-tree anchor, into
/// parallel buffers of length `len >= pmax + 1`.
#[no_mangle]
pub unsafe extern "C" fn burns_moments(
    variant: u32,
    m: usize,
    pmax: usize,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> BurnsStatus {
    guard(|| {
        non_null(re, "re")?;
        non_null(im, "im")?;
        room(len, pmax + 1)?;
        let lambda = lib(spectral::lambda2(m))?;
        let v = variant_of(variant)?;
        let table = lib(wlimit::moments_w(v, m, lambda, wlimit::btree_anchor(v, m, lambda), pmax))?;
        for (i, mu) in table.moments.iter().enumerate() {
            *re.add(i) = mu.re;
            *im.add(i) = mu.im;
        }
        Ok(())
    })
}
