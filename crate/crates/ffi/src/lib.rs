//! C interface to the thermocode simulator.
//!
//! Instances are opaque handles created by `tc_instance_new` or
//! `tc_instance_from_json` and released with `tc_instance_free`. Every fallible
//! call returns a [`TcStatus`]; on failure `tc_last_error` describes the cause.
//! Strings returned through out-parameters are owned by the caller and must be
//! released with `tc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thermocode::experiment::{verify, Evaluation, ExperimentConfig, InstanceParams, RegisterConfig};
use thermocode::thermal::Hamiltonian;
use thermocode::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidState = 4,
    NotUnitary = 5,
    ThirdLaw = 6,
    Indivisible = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

impl From<&Error> for TcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionMismatch { .. } => Self::DimensionMismatch,
            Error::InvalidState(_) => Self::InvalidState,
            Error::NotUnitary(_) => Self::NotUnitary,
            Error::ThirdLaw(_) => Self::ThirdLaw,
            Error::Indivisible { .. } => Self::Indivisible,
            Error::InvalidInput(_) => Self::InvalidArgument,
        }
    }
}

/// An evaluated protocol instance.
pub struct TcInstance {
    params: InstanceParams,
    eval: Evaluation,
}

/// Heat and entropy bookkeeping of one encoding round, in bits.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TcLedger {
    pub delta_s_system: f64,
    pub delta_s_register: f64,
    pub heat_beta_q: f64,
    pub rel_entropy_d: f64,
    pub holevo_chi: f64,
    pub free_energy_beta_delta_f: f64,
    pub entropy_identity_residual: f64,
    pub heat_identity_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let text = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: TcStatus, msg: impl Into<Vec<u8>>) -> TcStatus {
    set_error(msg);
    status
}

fn from_core(e: Error) -> TcStatus {
    fail(TcStatus::from(&e), e.to_string())
}

/// Runs `f`, turning panics into [`TcStatus::Panic`].
fn guard(f: impl FnOnce() -> TcStatus) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(TcStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, TcStatus> {
    if s.is_null() {
        return Err(fail(TcStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(TcStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn write_string(text: String, out: *mut *mut c_char) -> TcStatus {
    match CString::new(text) {
        Ok(c) => {
            *out = c.into_raw();
            TcStatus::Ok
        }
        Err(_) => fail(TcStatus::InvalidArgument, "output contains a NUL byte"),
    }
}

fn build(params: InstanceParams, out: *mut *mut TcInstance) -> TcStatus {
    match params.evaluate() {
        Ok(eval) => {
            unsafe { *out = Box::into_raw(Box::new(TcInstance { params, eval })) };
            TcStatus::Ok
        }
        Err(e) => from_core(e),
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds and evaluates an instance.
///
/// `energies` holds `n_levels` ascending single-copy energies. When
/// `probabilities` is non-null it holds `n` message probabilities; otherwise
/// the register is a Haar-rotated thermal state drawn from `seed`.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_new(
    energies: *const f64,
    n_levels: usize,
    beta: f64,
    n: usize,
    copies: usize,
    probabilities: *const f64,
    seed: u64,
    out: *mut *mut TcInstance,
) -> TcStatus {
    guard(|| {
        if energies.is_null() || out.is_null() {
            return fail(TcStatus::NullPointer, "energies and out must be non-null");
        }
        let energies = std::slice::from_raw_parts(energies, n_levels).to_vec();
        let hamiltonian = match Hamiltonian::new(energies) {
            Ok(h) => h,
            Err(e) => return from_core(e),
        };
        let register = if probabilities.is_null() {
            RegisterConfig::Haar { seed: Some(seed) }
        } else {
            RegisterConfig::Explicit { probabilities: std::slice::from_raw_parts(probabilities, n).to_vec() }
        };
        build(InstanceParams { hamiltonian, beta, n, copies, register, povm_offset: 0 }, out)
    })
}

/// Builds an instance from its JSON description
/// (`{"hamiltonian": {"energies": [...]}, "beta", "n", "copies", "register": {...}}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_from_json(json: *const c_char, out: *mut *mut TcInstance) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return fail(TcStatus::NullPointer, "out must be non-null");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match InstanceParams::from_json(text) {
            Ok(params) => build(params, out),
            Err(e) => from_core(e),
        }
    })
}

/// Releases an instance; null is ignored.
///
/// # Safety
/// `instance` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_free(instance: *mut TcInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

unsafe fn scalar(instance: *const TcInstance, out: *mut f64, pick: fn(&Evaluation) -> f64) -> TcStatus {
    if instance.is_null() || out.is_null() {
        return fail(TcStatus::NullPointer, "instance and out must be non-null");
    }
    *out = pick(&(*instance).eval);
    TcStatus::Ok
}

/// Number of message letters `n`.
///
/// # Safety
/// `instance` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_letters(instance: *const TcInstance, out: *mut usize) -> TcStatus {
    if instance.is_null() || out.is_null() {
        return fail(TcStatus::NullPointer, "instance and out must be non-null");
    }
    *out = (*instance).params.n;
    TcStatus::Ok
}

/// # Safety
/// `instance` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_c_max(instance: *const TcInstance, out: *mut f64) -> TcStatus {
    scalar(instance, out, |e| e.c_max)
}

/// Success probability of the block-projective decoder.
///
/// # Safety
/// `instance` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_success_probability(
    instance: *const TcInstance,
    out: *mut f64,
) -> TcStatus {
    scalar(instance, out, |e| e.p_succ)
}

/// # Safety
/// `instance` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_holevo(instance: *const TcInstance, out: *mut f64) -> TcStatus {
    scalar(instance, out, |e| e.holevo)
}

/// # Safety
/// `instance` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_mutual_information(
    instance: *const TcInstance,
    out: *mut f64,
) -> TcStatus {
    scalar(instance, out, |e| e.mutual_information)
}

/// # Safety
/// `instance` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_ledger(instance: *const TcInstance, out: *mut TcLedger) -> TcStatus {
    if instance.is_null() || out.is_null() {
        return fail(TcStatus::NullPointer, "instance and out must be non-null");
    }
    let l = &(*instance).eval.ledger;
    *out = TcLedger {
        delta_s_system: l.delta_s_system,
        delta_s_register: l.delta_s_register,
        heat_beta_q: l.heat_beta_q,
        rel_entropy_d: l.rel_entropy_d,
        holevo_chi: l.holevo_chi,
        free_energy_beta_delta_f: l.free_energy_beta_delta_f,
        entropy_identity_residual: l.entropy_identity_residual,
        heat_identity_residual: l.heat_identity_residual,
    };
    TcStatus::Ok
}

/// Copies `p(y|x)` row-major (`buf[y*n + x]`). `required` receives `n*n`
/// even when `buf` is too small, in which case nothing is copied.
///
/// # Safety
/// `buf` must hold `len` doubles (may be null when `len` is 0); `required` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_conditional(
    instance: *const TcInstance,
    buf: *mut f64,
    len: usize,
    required: *mut usize,
) -> TcStatus {
    if instance.is_null() || required.is_null() {
        return fail(TcStatus::NullPointer, "instance and required must be non-null");
    }
    let table = &(*instance).eval.conditional;
    let flat: Vec<f64> = table.iter().flatten().copied().collect();
    *required = flat.len();
    if len < flat.len() || buf.is_null() {
        return fail(TcStatus::BufferTooSmall, format!("need room for {} values", flat.len()));
    }
    ptr::copy_nonoverlapping(flat.as_ptr(), buf, flat.len());
    TcStatus::Ok
}

/// Full evaluation record as JSON.
///
/// # Safety
/// `instance` must be live; `out` writable. Free the result with `tc_string_free`.
#[no_mangle]
pub unsafe extern "C" fn tc_instance_to_json(instance: *const TcInstance, out: *mut *mut c_char) -> TcStatus {
    if instance.is_null() || out.is_null() {
        return fail(TcStatus::NullPointer, "instance and out must be non-null");
    }
    let inst = &*instance;
    let value = serde_json::json!({ "params": inst.params, "result": inst.eval });
    write_string(value.to_string(), out)
}

/// Runs the verification suite on an experiment config (null selects the
/// built-in grid) and returns the JSON report. `passed` receives 1 when every
/// law holds and 0 otherwise.
///
/// # Safety
/// `config_json` is null or NUL-terminated; `report` and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn tc_verify_json(
    config_json: *const c_char,
    report: *mut *mut c_char,
    passed: *mut c_int,
) -> TcStatus {
    guard(|| {
        if report.is_null() || passed.is_null() {
            return fail(TcStatus::NullPointer, "report and passed must be non-null");
        }
        let config = if config_json.is_null() {
            ExperimentConfig::default()
        } else {
            let text = match read_str(config_json) {
                Ok(t) => t,
                Err(s) => return s,
            };
            match ExperimentConfig::from_json(text) {
                Ok(c) => c,
                Err(e) => return from_core(e),
            }
        };
        match verify(&config, None) {
            Ok(r) => {
                *passed = c_int::from(r.pass);
                write_string(r.to_json(), report)
            }
            Err(e) => from_core(e),
        }
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
