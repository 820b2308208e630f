//! C interface to the estimation workbench.
//!
//! Cases and models are opaque handles created by `*_load` and released by
//! the matching `*_free`. Every fallible call returns a [`GnnseStatus`]; the
//! message for the last failure on the calling thread is available through
//! [`gnnse_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use gnnse::grid::build_adjacency;
use gnnse::measurement::place_pmus;
use gnnse::nn::{read_model, Estimator, Model};
use gnnse::powerflow::{solve_power_flow, LoadScenario};
use gnnse::{Error, NetworkCase};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnnseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    NotConverged = 5,
    Topology = 6,
    BufferTooSmall = 7,
    Model = 8,
    Panic = 99,
}

/// Parsed network case.
pub struct GnnseCase {
    case: NetworkCase,
}

/// Trained estimator loaded from a model file.
pub struct GnnseModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> GnnseStatus {
    match err {
        Error::Io(_) => GnnseStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::DuplicateBus(_) | Error::MissingSlack | Error::MultipleSlack(_) => {
            GnnseStatus::Parse
        }
        Error::DanglingEndpoint { .. } | Error::InvalidBranch { .. } | Error::InvalidBus { .. } => GnnseStatus::Parse,
        Error::NotConverged { .. } | Error::Singular(_) => GnnseStatus::NotConverged,
        Error::Disconnected | Error::BranchIndex { .. } | Error::BranchOutOfService(_) => GnnseStatus::Topology,
        Error::Format(_) | Error::Mismatch(_) | Error::Divergence { .. } => GnnseStatus::Model,
        Error::Shape(_) | Error::Config(_) => GnnseStatus::InvalidArgument,
        _ => GnnseStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), GnnseStatus>) -> GnnseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GnnseStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            GnnseStatus::Panic
        }
    }
}

fn fail(err: Error) -> GnnseStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null_check<T>(p: *const T, name: &str) -> Result<(), GnnseStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        return Err(GnnseStatus::NullPointer);
    }
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, GnnseStatus> {
    null_check(p, "path")?;
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(GnnseStatus::InvalidArgument)
        }
    }
}

fn outage_arg(case: &NetworkCase, outage: i64) -> Result<Option<usize>, GnnseStatus> {
    if outage < 0 {
        return Ok(None);
    }
    let k = outage as usize;
    if k >= case.n_branches() {
        set_error(format!("branch index {k} out of range (case has {} branches)", case.n_branches()));
        return Err(GnnseStatus::Topology);
    }
    Ok(Some(k))
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gnnse_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Load a MATPOWER or JSON case file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gnnse_case_load(path: *const c_char, out: *mut *mut GnnseCase) -> GnnseStatus {
    guard(|| {
        null_check(out, "out")?;
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.into()))?;
        let case = gnnse::grid::parse_case(&text).map_err(fail)?;
        *out = Box::into_raw(Box::new(GnnseCase { case }));
        Ok(())
    })
}

/// # Safety
/// `case` must be NULL or a handle from [`gnnse_case_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gnnse_case_free(case: *mut GnnseCase) {
    if !case.is_null() {
        drop(Box::from_raw(case));
    }
}

/// # Safety
/// `case` must be NULL or a live case handle.
#[no_mangle]
pub unsafe extern "C" fn gnnse_case_num_buses(case: *const GnnseCase) -> usize {
    case.as_ref().map_or(0, |c| c.case.n_buses())
}

/// # Safety
/// `case` must be NULL or a live case handle.
#[no_mangle]
pub unsafe extern "C" fn gnnse_case_num_branches(case: *const GnnseCase) -> usize {
    case.as_ref().map_or(0, |c| c.case.n_branches())
}

/// Solve the nominal operating point. `outage` is a branch row index or -1
/// for the intact network. `vm` and `va_deg` receive one value per bus.
///
/// # Safety
/// `vm` and `va_deg` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gnnse_power_flow(
    case: *const GnnseCase,
    outage: i64,
    vm: *mut f64,
    va_deg: *mut f64,
    len: usize,
) -> GnnseStatus {
    guard(|| {
        null_check(case, "case")?;
        null_check(vm, "vm")?;
        null_check(va_deg, "va_deg")?;
        let case = &(*case).case;
        let n = case.n_buses();
        if len < n {
            set_error(format!("buffer holds {len} values, need {n}"));
            return Err(GnnseStatus::BufferTooSmall);
        }
        let outage = outage_arg(case, outage)?;
        let sol = solve_power_flow(case, &LoadScenario::nominal(n), outage).map_err(fail)?;
        let vm = slice::from_raw_parts_mut(vm, n);
        let va = slice::from_raw_parts_mut(va_deg, n);
        vm.copy_from_slice(&sol.vm);
        for (dst, a) in va.iter_mut().zip(&sol.va) {
            *dst = a.to_degrees();
        }
        Ok(())
    })
}

/// Greedy PMU placement. Writes bus ids into `buses` and the count into
/// `count`. When `cap` is too small, `count` still receives the required size.
///
/// # Safety
/// `buses` must point to `cap` writable elements; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gnnse_place_pmus(
    case: *const GnnseCase,
    outage: i64,
    buses: *mut usize,
    cap: usize,
    count: *mut usize,
) -> GnnseStatus {
    guard(|| {
        null_check(case, "case")?;
        null_check(count, "count")?;
        let case = &(*case).case;
        let outage = outage_arg(case, outage)?;
        let adj = build_adjacency(case, outage).map_err(fail)?;
        let ids = place_pmus(&adj).to_ids(case);
        *count = ids.len();
        if cap < ids.len() {
            set_error(format!("buffer holds {cap} ids, need {}", ids.len()));
            return Err(GnnseStatus::BufferTooSmall);
        }
        null_check(buses, "buses")?;
        slice::from_raw_parts_mut(buses, ids.len()).copy_from_slice(&ids);
        Ok(())
    })
}

/// Load a trained model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gnnse_model_load(path: *const c_char, out: *mut *mut GnnseModel) -> GnnseStatus {
    guard(|| {
        null_check(out, "out")?;
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let (model, _) = read_model(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(GnnseModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`gnnse_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gnnse_model_free(model: *mut GnnseModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of buses the model was trained on.
///
/// # Safety
/// `model` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn gnnse_model_num_buses(model: *const GnnseModel) -> usize {
    model.as_ref().map_or(0, |m| {
        let width = match &m.model {
            Model::Gnn(g) => g.normalizer.as_ref().map_or(0, |n| n.width()),
            Model::Mlp(p) => p.width(),
        };
        width / 2
    })
}

/// Estimate bus voltages for `samples` feature rows. Each row holds
/// (vm, va_deg) per bus; the output uses the same layout. Graph models use the
/// case topology with `outage` removed (-1 for none).
///
/// # Safety
/// `features` must hold `samples * 2 * n` readable doubles and `out` as many
/// writable ones, where `n` is the bus count of `case`.
#[no_mangle]
pub unsafe extern "C" fn gnnse_model_predict(
    model: *const GnnseModel,
    case: *const GnnseCase,
    outage: i64,
    features: *const f64,
    samples: usize,
    out: *mut f64,
) -> GnnseStatus {
    guard(|| {
        null_check(model, "model")?;
        null_check(case, "case")?;
        null_check(features, "features")?;
        null_check(out, "out")?;
        let model = &(*model).model;
        let case = &(*case).case;
        let len = samples * 2 * case.n_buses();
        let x = slice::from_raw_parts(features, len);
        let pred = match model {
            Model::Gnn(g) => {
                let outage = outage_arg(case, outage)?;
                let adj = build_adjacency(case, outage).map_err(fail)?;
                g.predict(&g.operator(&adj), x)
            }
            Model::Mlp(m) => m.predict(&(), x),
        }
        .map_err(fail)?;
        if pred.len() != len {
            set_error(format!("model produced {} values, expected {len}", pred.len()));
            return Err(GnnseStatus::InvalidArgument);
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(&pred);
        Ok(())
    })
}
