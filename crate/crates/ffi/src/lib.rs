//! C ABI for pathslice.
//!
//! Objects are opaque handles created by `ps_*_new`-style constructors and
//! released with the matching `ps_*_free`. Every fallible call returns a
//! [`PsStatus`]; on failure the message is kept per thread and can be read
//! with [`ps_last_error`]. Complex values cross the boundary as separate real
//! and imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use pathslice::action::ActionExpansion;
use pathslice::grid::{gaussian_packet, l2_distance, Grid, WaveFunction};
use pathslice::oio::{apply_short_time_propagator_with_window, DEFAULT_WINDOW};
use pathslice::potential::{make_low_regularity_potential, PotentialModel};
use pathslice::reference::{reference_propagate, ReferenceConfig};
use pathslice::slicing::{apply_time_sliced_with, make_subdivision, Scheme};
use pathslice::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Shape = 3,
    DerivativeBudget = 4,
    Index = 5,
    TimeOrder = 6,
    Window = 7,
    DegenerateFit = 8,
    OracleResolution = 9,
    Singular = 10,
    Support = 11,
    Lattice = 12,
    Io = 13,
    Validation = 14,
    Panic = 15,
}

impl From<&Error> for PsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) => PsStatus::Config,
            Error::Shape(_) => PsStatus::Shape,
            Error::DerivativeBudget { .. } => PsStatus::DerivativeBudget,
            Error::Index(_) => PsStatus::Index,
            Error::TimeOrder { .. } => PsStatus::TimeOrder,
            Error::Window { .. } => PsStatus::Window,
            Error::DegenerateFit(_) => PsStatus::DegenerateFit,
            Error::OracleResolution(_) => PsStatus::OracleResolution,
            Error::Singular(_) => PsStatus::Singular,
            Error::Support(_) => PsStatus::Support,
            Error::Lattice(_) => PsStatus::Lattice,
            Error::Io(_) => PsStatus::Io,
            Error::Validation { .. } => PsStatus::Validation,
        }
    }
}

/// Uniform grid on `[-L, L)`.
pub struct PsGrid(Grid);

/// Potential model.
pub struct PsPotential(PotentialModel);

/// Short-time action expansion `S^(N)` for one potential, order, start time and grid.
pub struct PsExpansion(ActionExpansion);

/// Sampled wave function.
pub struct PsWave(WaveFunction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> PsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(e)) => {
            let status = PsStatus::from(&e);
            set_error(e.to_string());
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PsStatus::Panic
        }
    }
}

/// Null checks report `PsStatus::NullPointer` rather than a validation error.
fn guard_ptrs(ok: bool, f: impl FnOnce() -> Result<(), Error>) -> PsStatus {
    if !ok {
        clear_error();
        set_error("null pointer argument".into());
        return PsStatus::NullPointer;
    }
    guard(f)
}

unsafe fn emit<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (nul-terminated,
/// truncated to `len - 1` bytes) and returns the full message length, or 0
/// when the last call succeeded. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ps_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// # Safety
/// `out` must be a valid pointer to write the handle into.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_new(half_width: f64, points: usize, out: *mut *mut PsGrid) -> PsStatus {
    guard_ptrs(!out.is_null(), || {
        emit(out, PsGrid(Grid::new(half_width, points)?));
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from [`ps_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_free(grid: *mut PsGrid) {
    free(grid)
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_len(grid: *const PsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_potential_zero(out: *mut *mut PsPotential) -> PsStatus {
    guard_ptrs(!out.is_null(), || {
        emit(out, PsPotential(PotentialModel::zero()));
        Ok(())
    })
}

/// `V(x) = a x`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_potential_linear(a: f64, out: *mut *mut PsPotential) -> PsStatus {
    guard_ptrs(!out.is_null(), || {
        emit(out, PsPotential(PotentialModel::linear(a)));
        Ok(())
    })
}

/// `V(x) = kappa x^2 / 2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_potential_harmonic(kappa: f64, out: *mut *mut PsPotential) -> PsStatus {
    guard_ptrs(!out.is_null(), || {
        emit(out, PsPotential(PotentialModel::harmonic(kappa)));
        Ok(())
    })
}

/// `V(x) = a cos(b x)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_potential_cosine(a: f64, b: f64, out: *mut *mut PsPotential) -> PsStatus {
    guard_ptrs(!out.is_null(), || {
        emit(out, PsPotential(PotentialModel::cosine(a, b)));
        Ok(())
    })
}

/// `sum_j j^{-(2N+2)} cos(j x)` for `j = 1..=terms`, with derivative budget `2N`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_potential_low_regularity(order: usize, terms: usize, out: *mut *mut PsPotential) -> PsStatus {
    guard_ptrs(!out.is_null(), || {
        emit(out, PsPotential(make_low_regularity_potential(order, terms)?));
        Ok(())
    })
}

/// `e(t) V(x)` with `e` the polynomial whose `n` coefficients (increasing
/// degree) are at `envelope`. `base` is not consumed.
///
/// # Safety
/// `base` must be a live handle, `envelope` must point to `n` doubles and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_potential_time_modulated(
    base: *const PsPotential,
    envelope: *const f64,
    n: usize,
    out: *mut *mut PsPotential,
) -> PsStatus {
    guard_ptrs(!base.is_null() && !envelope.is_null() && !out.is_null(), || {
        let e = std::slice::from_raw_parts(envelope, n).to_vec();
        emit(out, PsPotential(PotentialModel::time_modulated((*base).0.clone(), e)?));
        Ok(())
    })
}

/// `d_t^k d_x^alpha V(t, x)`.
///
/// # Safety
/// `potential` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_potential_derivative(
    potential: *const PsPotential,
    k: usize,
    alpha: usize,
    t: f64,
    x: f64,
    out: *mut f64,
) -> PsStatus {
    guard_ptrs(!potential.is_null() && !out.is_null(), || {
        *out = (*potential).0.derivative(k, alpha, t, x)?;
        Ok(())
    })
}

/// # Safety
/// `potential` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_potential_free(potential: *mut PsPotential) {
    free(potential)
}

/// Action expansion of order `order` at start time `s`.
///
/// # Safety
/// `potential` and `grid` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_expansion_new(
    potential: *const PsPotential,
    order: usize,
    s: f64,
    hbar: f64,
    grid: *const PsGrid,
    out: *mut *mut PsExpansion,
) -> PsStatus {
    guard_ptrs(!potential.is_null() && !grid.is_null() && !out.is_null(), || {
        let e = ActionExpansion::new((*potential).0.clone(), order, s, hbar, (*grid).0)?;
        emit(out, PsExpansion(e));
        Ok(())
    })
}

/// `d_x^alpha W_k(x, y)`.
///
/// # Safety
/// `expansion` must be a live handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ps_expansion_eval_w(
    expansion: *const PsExpansion,
    k: usize,
    alpha: usize,
    x: f64,
    y: f64,
    re: *mut f64,
    im: *mut f64,
) -> PsStatus {
    guard_ptrs(!expansion.is_null() && !re.is_null() && !im.is_null(), || {
        let w = (*expansion).0.eval_w_derivative(k, alpha, x, y)?;
        *re = w.re;
        *im = w.im;
        Ok(())
    })
}

/// `S^(N)(t, s, x, y)`.
///
/// # Safety
/// `expansion` must be a live handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ps_expansion_eval_action(
    expansion: *const PsExpansion,
    t: f64,
    x: f64,
    y: f64,
    re: *mut f64,
    im: *mut f64,
) -> PsStatus {
    guard_ptrs(!expansion.is_null() && !re.is_null() && !im.is_null(), || {
        let v = (*expansion).0.eval_s_n(t, x, y)?;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// # Safety
/// `expansion` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_expansion_free(expansion: *mut PsExpansion) {
    free(expansion)
}

/// L²-normalized Gaussian packet.
///
/// # Safety
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_gaussian(
    grid: *const PsGrid,
    center: f64,
    momentum: f64,
    width: f64,
    hbar: f64,
    out: *mut *mut PsWave,
) -> PsStatus {
    guard_ptrs(!grid.is_null() && !out.is_null(), || {
        emit(out, PsWave(gaussian_packet(&(*grid).0, center, momentum, width, hbar)?));
        Ok(())
    })
}

/// Wave function from `n` samples; `n` must equal the grid size.
///
/// # Safety
/// `grid` must be a live handle, `re` and `im` must point to `n` doubles and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_from_samples(
    grid: *const PsGrid,
    re: *const f64,
    im: *const f64,
    n: usize,
    out: *mut *mut PsWave,
) -> PsStatus {
    guard_ptrs(!grid.is_null() && !re.is_null() && !im.is_null() && !out.is_null(), || {
        let (re, im) = (std::slice::from_raw_parts(re, n), std::slice::from_raw_parts(im, n));
        let values = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        emit(out, PsWave(WaveFunction::new((*grid).0, values)?));
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `wave` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_len(wave: *const PsWave) -> usize {
    wave.as_ref().map_or(0, |w| w.0.values().len())
}

/// Copies the samples into `re` and `im`, each of length `n` (the wave length).
///
/// # Safety
/// `wave` must be a live handle; `re` and `im` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_values(wave: *const PsWave, re: *mut f64, im: *mut f64, n: usize) -> PsStatus {
    guard_ptrs(!wave.is_null() && !re.is_null() && !im.is_null(), || {
        let v = (*wave).0.values();
        if n != v.len() {
            return Err(Error::Shape(format!("buffer holds {n} samples, wave has {}", v.len())));
        }
        for (j, c) in v.iter().enumerate() {
            *re.add(j) = c.re;
            *im.add(j) = c.im;
        }
        Ok(())
    })
}

/// Discrete L² norm.
///
/// # Safety
/// `wave` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_norm(wave: *const PsWave, out: *mut f64) -> PsStatus {
    guard_ptrs(!wave.is_null() && !out.is_null(), || {
        *out = (*wave).0.norm();
        Ok(())
    })
}

/// Number of resolution warnings attached to the wave.
///
/// # Safety
/// `wave` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_warning_count(wave: *const PsWave) -> usize {
    wave.as_ref().map_or(0, |w| w.0.warnings.len())
}

/// `||a - b||_2`.
///
/// # Safety
/// `a`, `b` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_distance(a: *const PsWave, b: *const PsWave, out: *mut f64) -> PsStatus {
    guard_ptrs(!a.is_null() && !b.is_null() && !out.is_null(), || {
        *out = l2_distance(&(*a).0, &(*b).0)?;
        Ok(())
    })
}

/// # Safety
/// `wave` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_free(wave: *mut PsWave) {
    free(wave)
}

/// One step `E^(N)(t, s) f`; `window <= 0` selects the default window.
///
/// # Safety
/// `expansion`, `wave` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_propagate_short_time(
    expansion: *const PsExpansion,
    wave: *const PsWave,
    t: f64,
    s: f64,
    window: f64,
    out: *mut *mut PsWave,
) -> PsStatus {
    guard_ptrs(!expansion.is_null() && !wave.is_null() && !out.is_null(), || {
        let w = if window > 0.0 { window } else { DEFAULT_WINDOW };
        let u = apply_short_time_propagator_with_window(&(*expansion).0, &(*wave).0, t, s, w)?;
        emit(out, PsWave(u));
        Ok(())
    })
}

/// `E^(N)(Omega) f` over `slices` uniform slices of `[s, t]`, where `s` is
/// the expansion's start time.
///
/// # Safety
/// `expansion`, `wave` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_propagate_time_sliced(
    expansion: *const PsExpansion,
    wave: *const PsWave,
    t: f64,
    slices: usize,
    out: *mut *mut PsWave,
) -> PsStatus {
    guard_ptrs(!expansion.is_null() && !wave.is_null() && !out.is_null(), || {
        let exp = &(*expansion).0;
        let omega = make_subdivision(exp.s(), t, slices, Scheme::Uniform)?;
        emit(out, PsWave(apply_time_sliced_with(exp, &(*wave).0, &omega, DEFAULT_WINDOW)?));
        Ok(())
    })
}

/// Strang-split reference `U(t, s) f` with `substeps` per unit time.
///
/// # Safety
/// `potential`, `wave` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_propagate_reference(
    potential: *const PsPotential,
    wave: *const PsWave,
    s: f64,
    t: f64,
    substeps: usize,
    hbar: f64,
    out: *mut *mut PsWave,
) -> PsStatus {
    guard_ptrs(!potential.is_null() && !wave.is_null() && !out.is_null(), || {
        let cfg = ReferenceConfig::new(substeps, hbar)?;
        emit(out, PsWave(reference_propagate(&(*potential).0, &(*wave).0, s, t, &cfg)?));
        Ok(())
    })
}
