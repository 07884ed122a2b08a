//! C ABI over `pffiber`.
//!
//! Every entry point returns a [`PfStatus`]. Results go through out-pointers
//! and are left untouched on failure; the message of the last failure on the
//! calling thread is available from [`pf_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use pffiber::kernels::{d12, QuadratureSpec};
use pffiber::model::{z0, Momentum, ModelParams};
use pffiber::spectrum::{effective_mass, effective_mass_sigma0, secular_f, solve_ground};
use pffiber::Error;

/// Status code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    InvalidParams = 1,
    Domain = 2,
    OnEssentialSpectrum = 3,
    Pole = 4,
    Singular = 5,
    NoConvergence = 6,
    GridMismatch = 7,
    Io = 8,
    Parse = 9,
    NullPointer = 10,
    Panic = 11,
}

impl From<&Error> for PfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParams(_) => PfStatus::InvalidParams,
            Error::Domain(_) => PfStatus::Domain,
            Error::OnEssentialSpectrum { .. } => PfStatus::OnEssentialSpectrum,
            Error::Pole(_) => PfStatus::Pole,
            Error::Singular { .. } => PfStatus::Singular,
            Error::NoConvergence { .. } => PfStatus::NoConvergence,
            Error::GridMismatch(_) => PfStatus::GridMismatch,
            Error::Io(_) => PfStatus::Io,
            Error::Parse(_) => PfStatus::Parse,
        }
    }
}

/// Opaque model handle: parameters plus radial quadrature settings.
pub struct PfModel {
    params: ModelParams,
    quad: QuadratureSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PfStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            PfStatus::from(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed as `{name}`"));
            PfStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            PfStatus::Panic
        }
    }
}

unsafe fn handle<'a>(m: *const PfModel) -> Result<&'a PfModel, Failure> {
    m.as_ref().ok_or(Failure::Null("model"))
}

unsafe fn write<T>(out: *mut T, name: &'static str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

/// Create a model. A NaN `gamma0` selects the default
/// `pi e^2 R^(2+2 sigma)/(1+sigma)`. Free with [`pf_model_free`].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn pf_model_new(
    e: f64,
    cutoff: f64,
    sigma: f64,
    gamma0: f64,
    out: *mut *mut PfModel,
) -> PfStatus {
    guard(|| {
        let params = if gamma0.is_nan() {
            ModelParams::with_default_gamma0(e, cutoff, sigma)?
        } else {
            ModelParams::new(e, cutoff, sigma, gamma0)?
        };
        let handle = Box::into_raw(Box::new(PfModel {
            params,
            quad: QuadratureSpec::default(),
        }));
        write(out, "out", handle).inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Release a handle from [`pf_model_new`]. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_model_free(model: *mut PfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Override the radial quadrature: Gauss-Legendre order per panel,
/// absolute tolerance and panel cap.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_model_set_quadrature(
    model: *mut PfModel,
    n_rho: usize,
    abs_tol: f64,
    max_refine: usize,
) -> PfStatus {
    guard(|| {
        let m = model.as_mut().ok_or(Failure::Null("model"))?;
        let quad = QuadratureSpec {
            n_rho,
            abs_tol,
            max_refine,
            ..m.quad
        };
        quad.validate()?;
        m.quad = quad;
        Ok(())
    })
}

/// The `gamma0` in effect.
///
/// # Safety
/// `model` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_model_gamma0(model: *const PfModel, out: *mut f64) -> PfStatus {
    guard(|| write(out, "out", handle(model)?.params.gamma0))
}

/// Bottom of the essential spectrum at `|p|`.
///
/// # Safety
/// `model` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_z0(model: *const PfModel, p_abs: f64, out: *mut f64) -> PfStatus {
    guard(|| {
        let m = handle(model)?;
        if !(p_abs >= 0.0 && p_abs.is_finite()) {
            return Err(Error::Domain(format!("|p| = {p_abs} must be finite and >= 0")).into());
        }
        write(out, "out", z0(p_abs, &m.params))
    })
}

/// `D12(p, z)` for complex `z` off the essential spectrum.
///
/// # Safety
/// `model` must be a live handle, both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn pf_d12(
    model: *const PfModel,
    p_abs: f64,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PfStatus {
    guard(|| {
        let m = handle(model)?;
        if out_re.is_null() || out_im.is_null() {
            return Err(Failure::Null("out_re/out_im"));
        }
        let v = d12(p_abs, Complex64::new(z_re, z_im), &m.params, &m.quad)?.value;
        write(out_re, "out_re", v.re)?;
        write(out_im, "out_im", v.im)
    })
}

/// Secular function `F(p, z)` for real `z` below the band edge.
///
/// # Safety
/// `model` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_secular_f(model: *const PfModel, p_abs: f64, z: f64, out: *mut f64) -> PfStatus {
    guard(|| {
        let m = handle(model)?;
        write(out, "out", secular_f(p_abs, z, &m.params, &m.quad)?)
    })
}

/// Ground-state energy at `|p|`. `*out_found` is set to whether an
/// eigenvalue exists below the band; `*out_z` is NaN when it does not.
///
/// # Safety
/// `model` must be a live handle, both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn pf_solve_ground(
    model: *const PfModel,
    p_abs: f64,
    tol: f64,
    out_z: *mut f64,
    out_found: *mut bool,
) -> PfStatus {
    guard(|| {
        let m = handle(model)?;
        if out_z.is_null() || out_found.is_null() {
            return Err(Failure::Null("out_z/out_found"));
        }
        let z = solve_ground(&Momentum::new(0.0, 0.0, p_abs), &m.params, &m.quad, tol)?;
        write(out_z, "out_z", z.unwrap_or(f64::NAN))?;
        write(out_found, "out_found", z.is_some())
    })
}

/// Ground-state energies on `n` momenta; NaN where no eigenvalue exists.
/// Stops at the first failing point and reports its error.
///
/// # Safety
/// `p_abs` and `out_z` must each point to `n` valid `f64`s.
#[no_mangle]
pub unsafe extern "C" fn pf_dispersion(
    model: *const PfModel,
    p_abs: *const f64,
    n: usize,
    tol: f64,
    out_z: *mut f64,
) -> PfStatus {
    guard(|| {
        let m = handle(model)?;
        if n == 0 {
            return Ok(());
        }
        if p_abs.is_null() || out_z.is_null() {
            return Err(Failure::Null("p_abs/out_z"));
        }
        let ps = std::slice::from_raw_parts(p_abs, n);
        let out = std::slice::from_raw_parts_mut(out_z, n);
        for (p, o) in ps.iter().zip(out.iter_mut()) {
            let z = solve_ground(&Momentum::new(0.0, 0.0, *p), &m.params, &m.quad, tol)?;
            *o = z.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Inverse effective mass `1/m` at `p = 0` (may be negative).
///
/// # Safety
/// `model` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_effective_mass(model: *const PfModel, out_inv_mass: *mut f64) -> PfStatus {
    guard(|| {
        let m = handle(model)?;
        write(out_inv_mass, "out_inv_mass", effective_mass(&m.params, &m.quad)?.inv_mass)
    })
}

/// Closed-form inverse effective mass at `sigma = 0`.
///
/// # Safety
/// `out_inv_mass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_effective_mass_sigma0(e: f64, cutoff: f64, out_inv_mass: *mut f64) -> PfStatus {
    guard(|| write(out_inv_mass, "out_inv_mass", effective_mass_sigma0(e, cutoff)?))
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
