//! C ABI over the `beamforge` library.
//!
//! Parameters and error models live behind opaque handles created by the
//! `bf_*_new` functions and released with the matching `bf_*_free`. Every
//! fallible call returns a [`BfStatus`]; on failure the message is kept per
//! thread and can be copied out with [`bf_last_error_message`]. Panics are
//! caught at the boundary and reported as `BF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use beamforge::beampattern::{delta_pav_analytic, mc_beampattern};
use beamforge::sep::{
    kappa_variance, mc_sep, mean_phasor, power_reduction_coefficient, sep_analytic, QuadSpec, SinrMap,
};
use beamforge::{Error, ErrorModel, SystemParams};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Usage = 3,
    Dimension = 4,
    Numeric = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

/// System parameters handle.
pub struct BfParams(SystemParams);

/// Error model handle.
pub struct BfModel(ErrorModel);

/// Powers derived from the parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BfDerivedPowers {
    pub sigma_eta_sq: f64,
    pub sigma_w_sq: f64,
    pub sigma_v_sq: f64,
    /// Collaborator SNR, linear.
    pub gamma1: f64,
    /// Destination SNR, linear.
    pub gamma2: f64,
}

/// Simulated symbol error probability.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BfMcSep {
    pub sep: f64,
    pub std_error: f64,
    pub errors: u64,
    pub symbols: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BfStatus {
    match e {
        Error::Parameter { .. } => BfStatus::InvalidParameter,
        Error::Usage(_) => BfStatus::Usage,
        Error::Dimension(_) => BfStatus::Dimension,
        Error::Numeric(_) => BfStatus::Numeric,
        Error::Config { .. } => BfStatus::Config,
        Error::Io(_) => BfStatus::Io,
    }
}

struct NullArg(&'static str);

enum Failure {
    Lib(Error),
    Null(NullArg),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<NullArg> for Failure {
    fn from(n: NullArg) -> Self {
        Failure::Null(n)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> BfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BfStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(NullArg(name)))) => {
            set_error(format!("null pointer passed for `{name}`"));
            BfStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, NullArg> {
    p.as_ref().ok_or(NullArg(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, NullArg> {
    p.as_mut().ok_or(NullArg(name))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length plus one;
/// 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Creates parameters with unit source and channel powers, `μ = 1/N`,
/// `b = 1`, and noise powers set from the two SNRs in dB.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bf_params_new(
    nodes: usize,
    sources: usize,
    psk_order: usize,
    packet_len: usize,
    r_over_lambda: f64,
    gamma1_db: f64,
    gamma2_db: f64,
    out_params: *mut *mut BfParams,
) -> BfStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        let p = SystemParams::unit(nodes, sources, psk_order, packet_len, r_over_lambda)?
            .derive_powers(gamma1_db, gamma2_db)?;
        *slot = Box::into_raw(Box::new(BfParams(p)));
        Ok(())
    })
}

/// Overrides the amplification factor `μ_m`.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bf_params_set_mu(params: *mut BfParams, mu_m: f64) -> BfStatus {
    guard(|| {
        let p = out(params, "params")?;
        let mut next = p.0;
        next.mu_m = mu_m;
        next.validate()?;
        p.0 = next;
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from [`bf_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bf_params_free(params: *mut BfParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle and `out_powers` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn bf_params_derived(params: *const BfParams, out_powers: *mut BfDerivedPowers) -> BfStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let d = p.derived();
        *out(out_powers, "out_powers")? = BfDerivedPowers {
            sigma_eta_sq: d.sigma_eta_sq,
            sigma_w_sq: p.sigma_w_sq,
            sigma_v_sq: p.sigma_v_sq,
            gamma1: d.gamma1,
            gamma2: d.gamma2,
        };
        Ok(())
    })
}

unsafe fn new_model(model: ErrorModel, out_model: *mut *mut BfModel) -> BfStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        model.validate()?;
        *slot = Box::into_raw(Box::new(BfModel(model)));
        Ok(())
    })
}

/// # Safety
/// `out_model` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bf_model_perfect(out_model: *mut *mut BfModel) -> BfStatus {
    new_model(ErrorModel::Perfect, out_model)
}

/// Channel estimation error with variance `sigma_delta_sq`.
///
/// # Safety
/// `out_model` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bf_model_channel_error(sigma_delta_sq: f64, out_model: *mut *mut BfModel) -> BfStatus {
    new_model(ErrorModel::ChannelError { sigma_delta_sq }, out_model)
}

/// Tikhonov phase jitter with linear loop SNR `rho_tau`.
///
/// # Safety
/// `out_model` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bf_model_closed_loop(rho_tau: f64, out_model: *mut *mut BfModel) -> BfStatus {
    new_model(ErrorModel::ClosedLoopPhase { rho_tau }, out_model)
}

/// Location errors: radius within `±r_max` wavelengths, azimuth within
/// `±psi_max` radians.
///
/// # Safety
/// `out_model` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn bf_model_open_loop(r_max: f64, psi_max: f64, out_model: *mut *mut BfModel) -> BfStatus {
    new_model(ErrorModel::OpenLoopPhase { r_max, psi_max }, out_model)
}

/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn bf_model_free(model: *mut BfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Analytic SEP. `phasor_samples` and `seed` drive the open-loop mean
/// phasor and are ignored by the other models.
///
/// # Safety
/// Handles must be live and `out_sep` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn bf_sep_analytic(
    params: *const BfParams,
    model: *const BfModel,
    phasor_samples: u64,
    seed: u64,
    out_sep: *mut f64,
) -> BfStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let m = &deref(model, "model")?.0;
        let slot = out(out_sep, "out_sep")?;
        let map = SinrMap::for_model(p, m, phasor_samples, seed)?;
        *slot = sep_analytic(&map, &QuadSpec::default())?;
        Ok(())
    })
}

/// Monte Carlo SEP over `trials` packets.
///
/// # Safety
/// Handles must be live and `out_result` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn bf_sep_mc(
    params: *const BfParams,
    model: *const BfModel,
    trials: u64,
    seed: u64,
    out_result: *mut BfMcSep,
) -> BfStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let m = &deref(model, "model")?.0;
        let slot = out(out_result, "out_result")?;
        let r = mc_sep(p, m, trials, seed)?;
        *slot = BfMcSep {
            sep: r.sep,
            std_error: r.stderr,
            errors: r.errors,
            symbols: r.symbols,
        };
        Ok(())
    })
}

/// Sidelobe floor added by channel estimation error of variance
/// `sigma_delta_sq`.
///
/// # Safety
/// `params` must be live and `out_power` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn bf_delta_pav(params: *const BfParams, sigma_delta_sq: f64, out_power: *mut f64) -> BfStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        *out(out_power, "out_power")? = delta_pav_analytic(p, sigma_delta_sq)?;
        Ok(())
    })
}

/// Interference variance given the target channel energy `xi`.
///
/// # Safety
/// `params` must be live and `out_variance` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn bf_kappa_variance(
    params: *const BfParams,
    sigma_delta_sq: f64,
    xi: f64,
    out_variance: *mut f64,
) -> BfStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        ErrorModel::ChannelError { sigma_delta_sq }.validate()?;
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::Parameter {
                field: "xi",
                reason: format!("must be finite and ≥ 0, got {xi}"),
            }
            .into());
        }
        *out(out_variance, "out_variance")? = kappa_variance(p, sigma_delta_sq, xi);
        Ok(())
    })
}

/// `|E e^{jτ}|²` for a phase model, with its standard error.
///
/// # Safety
/// Handles must be live and both outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bf_mean_phasor(
    params: *const BfParams,
    model: *const BfModel,
    samples: u64,
    seed: u64,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> BfStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let m = &deref(model, "model")?.0;
        let v = out(out_value, "out_value")?;
        let s = out(out_stderr, "out_stderr")?;
        let est = mean_phasor(p, m, samples, seed)?;
        *v = est.value;
        *s = est.stderr;
        Ok(())
    })
}

/// Received power ratio with and without phase errors for `nodes` nodes and
/// squared mean phasor `mean_phasor_sq` (clamped to `[0, 1]`).
#[no_mangle]
pub extern "C" fn bf_power_reduction_coefficient(nodes: usize, mean_phasor_sq: f64) -> f64 {
    power_reduction_coefficient(nodes, mean_phasor_sq)
}

/// Monte Carlo beampattern at `len` azimuths (radians), destination at
/// `dest_angle`. Writes `len` values to each output array.
///
/// # Safety
/// `phis`, `out_power` and `out_stderr` must each be valid for `len`
/// elements; handles must be live.
#[no_mangle]
pub unsafe extern "C" fn bf_beampattern(
    params: *const BfParams,
    model: *const BfModel,
    dest_angle: f64,
    phis: *const f64,
    len: usize,
    trials: u64,
    seed: u64,
    out_power: *mut f64,
    out_stderr: *mut f64,
) -> BfStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let m = &deref(model, "model")?.0;
        if phis.is_null() {
            return Err(NullArg("phis").into());
        }
        if out_power.is_null() {
            return Err(NullArg("out_power").into());
        }
        if out_stderr.is_null() {
            return Err(NullArg("out_stderr").into());
        }
        let grid = std::slice::from_raw_parts(phis, len);
        let curve = mc_beampattern(p, m, dest_angle, grid, trials, seed)?;
        std::slice::from_raw_parts_mut(out_power, len).copy_from_slice(&curve.power);
        std::slice::from_raw_parts_mut(out_stderr, len).copy_from_slice(&curve.stderr);
        Ok(())
    })
}
