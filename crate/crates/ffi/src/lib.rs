//! C ABI over the `ksduo` library.
//!
//! Every function returns a [`KsduoStatus`] (or a handle that is null on
//! failure). After a non-`OK` status, [`ksduo_last_error`] holds a message for
//! the calling thread. Handles are opaque and must be released with the
//! matching `_free` function. Panics never cross the boundary.

use ksduo::bifurcation::{compute_k2, BifurcationError, LocalStability};
use ksduo::linear_analysis::{chi_hat, chi_tilde, critical_chi, AnalysisError, Classification, LossType, ModeWavenumber};
use ksduo::model::{compute_equilibrium, Equilibrium, ModelError, ModelParams};
use ksduo::solver::{initial_state, run, Advection, Field, Grid, Scheme, SolverConfig, SolverError, Termination, Trajectory};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsduoStatus {
    Ok = 0,
    NullPointer = 1,
    /// Unknown name, bad index, or a buffer that is too small.
    InvalidArgument = 2,
    /// Parameters violate a model constraint.
    InvalidParams = 3,
    /// Solver settings are invalid.
    InvalidConfig = 4,
    /// A linear system was singular or nearly so.
    Singular = 5,
    /// The time integration blew up.
    BlowUp = 6,
    /// A Rust panic was caught; the library state is otherwise unchanged.
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsduoLossType {
    SteadyState = 0,
    Hopf = 1,
    Degenerate = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsduoStability {
    Stable = 0,
    Unstable = 1,
    NotApplicable = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsduoField {
    U = 0,
    V = 1,
    W = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsduoTermination {
    TEnd = 0,
    Steady = 1,
}

/// Homogeneous steady state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KsduoEquilibrium {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

/// Outcome of the mode scan for the critical taxis strength.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KsduoCritical {
    pub chi0: f64,
    pub argmin_k: u32,
    pub loss_type: KsduoLossType,
    /// Classification of the equilibrium at the handle's `chi`.
    pub stability: KsduoStability,
}

/// Local branch data at the bifurcation point of one mode.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KsduoBranch {
    pub chi_k: f64,
    pub p_k: f64,
    pub q_k: f64,
    pub k2: f64,
    pub lambda_star: f64,
    pub k2_asymptotic_sign: i8,
    pub predicted_stability: KsduoStability,
}

/// Solver settings. Obtain defaults from [`ksduo_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KsduoSolverOptions {
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Nonzero selects the fully explicit scheme.
    pub explicit_scheme: u8,
    /// Nonzero selects upwind face densities for the taxis flux.
    pub upwind: u8,
    pub snapshot_every: usize,
    pub steady_tol: f64,
    pub stop_when_steady: u8,
    /// Initial perturbation `amplitude * cos(wavenumber * pi * x)`.
    pub amplitude: f64,
    pub wavenumber: f64,
}

/// Opaque parameter set.
pub struct KsduoParams {
    inner: ModelParams,
}

/// Opaque simulation result.
pub struct KsduoTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

struct Failure(KsduoStatus, String);

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let status = match e {
            ModelError::Invalid(_) => KsduoStatus::InvalidParams,
            ModelError::SingularCompetition => KsduoStatus::Singular,
        };
        Failure(status, e.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure(KsduoStatus::InvalidArgument, e.to_string())
    }
}

impl From<BifurcationError> for Failure {
    fn from(e: BifurcationError) -> Self {
        let status = match e {
            BifurcationError::Analysis(_) => KsduoStatus::InvalidArgument,
            _ => KsduoStatus::Singular,
        };
        Failure(status, e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let status = match e {
            SolverError::InvalidParams { .. } => KsduoStatus::InvalidParams,
            SolverError::BlowUp { .. } => KsduoStatus::BlowUp,
            SolverError::InvalidConfig { .. } | SolverError::GridMismatch { .. } => KsduoStatus::InvalidConfig,
        };
        Failure(status, e.to_string())
    }
}

fn null() -> Failure {
    Failure(KsduoStatus::NullPointer, "null pointer argument".into())
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(KsduoStatus::InvalidArgument, message.into())
}

/// Runs `f`, converting failures and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KsduoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KsduoStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KsduoStatus::Internal
        }
    }
}

/// # Safety
/// `p` is null or a valid pointer for the duration of the call.
unsafe fn params<'a>(p: *const KsduoParams) -> Result<&'a ModelParams, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(null)
}

/// # Safety
/// `out` is null or valid for one write of `T`.
unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn name<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid("name is not UTF-8"))
}

fn equilibrium(p: &ModelParams) -> Result<Equilibrium, Failure> {
    Ok(compute_equilibrium(p)?)
}

fn stability(s: LocalStability) -> KsduoStability {
    match s {
        LocalStability::Stable => KsduoStability::Stable,
        LocalStability::Unstable => KsduoStability::Unstable,
        LocalStability::NotApplicable => KsduoStability::NotApplicable,
    }
}

/// Message describing the last failure on this thread. Valid until the next
/// failing call on the same thread; empty if none.
#[no_mangle]
pub extern "C" fn ksduo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn ksduo_status_name(status: KsduoStatus) -> *const c_char {
    let s: &'static CStr = match status {
        KsduoStatus::Ok => c"ok",
        KsduoStatus::NullPointer => c"null_pointer",
        KsduoStatus::InvalidArgument => c"invalid_argument",
        KsduoStatus::InvalidParams => c"invalid_params",
        KsduoStatus::InvalidConfig => c"invalid_config",
        KsduoStatus::Singular => c"singular",
        KsduoStatus::BlowUp => c"blow_up",
        KsduoStatus::Internal => c"internal",
    };
    s.as_ptr()
}

/// New parameter set holding the library defaults (`chi = 0`, `L = 0.5`).
#[no_mangle]
pub extern "C" fn ksduo_params_new() -> *mut KsduoParams {
    Box::into_raw(Box::new(KsduoParams {
        inner: ModelParams::default(),
    }))
}

/// Independent copy of `p`, or null if `p` is null.
///
/// # Safety
/// `p` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ksduo_params_clone(p: *const KsduoParams) -> *mut KsduoParams {
    match p.as_ref() {
        Some(h) => Box::into_raw(Box::new(KsduoParams { inner: h.inner })),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `p` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ksduo_params_free(p: *mut KsduoParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Sets one of `d1 d2 chi xi mu1 mu2 a1 a2 lambda L`. Constraints are
/// checked by the calls that use the parameters, not here.
///
/// # Safety
/// `p` is a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ksduo_params_set(p: *mut KsduoParams, key: *const c_char, value: f64) -> KsduoStatus {
    guard(|| {
        let h = p.as_mut().ok_or_else(null)?;
        let key = name(key)?;
        if h.inner.set(key, value) {
            Ok(())
        } else {
            Err(invalid(format!("unknown parameter {key}")))
        }
    })
}

/// # Safety
/// `p` is a live handle, `key` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_params_get(p: *const KsduoParams, key: *const c_char, out: *mut f64) -> KsduoStatus {
    guard(|| {
        let key = name(key)?;
        let v = params(p)?.get(key).ok_or_else(|| invalid(format!("unknown parameter {key}")))?;
        write(out, v)
    })
}

/// Checks every parameter constraint; the message names the first violation.
///
/// # Safety
/// `p` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn ksduo_params_validate(p: *const KsduoParams) -> KsduoStatus {
    guard(|| equilibrium(params(p)?).map(|_| ()))
}

/// # Safety
/// `p` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_equilibrium(p: *const KsduoParams, out: *mut KsduoEquilibrium) -> KsduoStatus {
    guard(|| {
        let eq = equilibrium(params(p)?)?;
        write(
            out,
            KsduoEquilibrium {
                u: eq.u_bar,
                v: eq.v_bar,
                w: eq.w_bar,
            },
        )
    })
}

/// Steady-state threshold of mode `k >= 1`.
///
/// # Safety
/// `p` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_chi_tilde(p: *const KsduoParams, k: u32, out: *mut f64) -> KsduoStatus {
    guard(|| {
        let p = params(p)?;
        let eq = equilibrium(p)?;
        write(out, chi_tilde(ModeWavenumber::new(k, p.length)?, p, &eq))
    })
}

/// Hopf threshold of mode `k >= 1`.
///
/// # Safety
/// `p` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_chi_hat(p: *const KsduoParams, k: u32, out: *mut f64) -> KsduoStatus {
    guard(|| {
        let p = params(p)?;
        let eq = equilibrium(p)?;
        write(out, chi_hat(ModeWavenumber::new(k, p.length)?, p, &eq))
    })
}

/// Scans modes `1..=kmax` for the critical taxis strength and classifies the
/// equilibrium at the handle's `chi`.
///
/// # Safety
/// `p` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_critical_chi(p: *const KsduoParams, kmax: u32, out: *mut KsduoCritical) -> KsduoStatus {
    guard(|| {
        let p = params(p)?;
        let eq = equilibrium(p)?;
        let r = critical_chi(p, &eq, kmax)?;
        write(
            out,
            KsduoCritical {
                chi0: r.chi0,
                argmin_k: r.argmin_k,
                loss_type: match r.loss_type {
                    LossType::SteadyState => KsduoLossType::SteadyState,
                    LossType::Hopf => KsduoLossType::Hopf,
                    LossType::Degenerate => KsduoLossType::Degenerate,
                },
                stability: match r.classification {
                    Classification::Stable => KsduoStability::Stable,
                    Classification::Unstable => KsduoStability::Unstable,
                },
            },
        )
    })
}

/// Branch coefficients of mode `k`. A (near-)singular system returns
/// `KSDUO_STATUS_SINGULAR` and leaves `out` untouched.
///
/// # Safety
/// `p` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_branch(p: *const KsduoParams, k: u32, out: *mut KsduoBranch) -> KsduoStatus {
    guard(|| {
        let p = params(p)?;
        let eq = equilibrium(p)?;
        let b = compute_k2(k, p, &eq)?;
        write(
            out,
            KsduoBranch {
                chi_k: b.chi_k,
                p_k: b.p_k,
                q_k: b.q_k,
                k2: b.k2,
                lambda_star: b.lambda_star,
                k2_asymptotic_sign: b.k2_asymptotic_sign,
                predicted_stability: stability(b.predicted_stability_near_bifurcation),
            },
        )
    })
}

/// Library default solver settings with a 0.01 perturbation of wavenumber 2.4.
#[no_mangle]
pub extern "C" fn ksduo_solver_options_default() -> KsduoSolverOptions {
    let c = SolverConfig::default();
    KsduoSolverOptions {
        dx: c.dx,
        dt: c.dt,
        t_end: c.t_end,
        explicit_scheme: u8::from(c.scheme == Scheme::Explicit),
        upwind: u8::from(c.advection == Advection::Upwind),
        snapshot_every: c.snapshot_every,
        steady_tol: c.steady_tol,
        stop_when_steady: u8::from(c.stop_when_steady),
        amplitude: 0.01,
        wavenumber: 2.4,
    }
}

/// Integrates from the perturbed equilibrium. On success `*out` owns a new
/// trajectory; on failure it is set to null.
///
/// # Safety
/// `p` is a live handle, `opts` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_simulate(
    p: *const KsduoParams,
    opts: *const KsduoSolverOptions,
    out: *mut *mut KsduoTrajectory,
) -> KsduoStatus {
    if !out.is_null() {
        out.write(ptr::null_mut());
    }
    guard(|| {
        let p = params(p)?;
        let o = opts.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let cfg = SolverConfig {
            dx: o.dx,
            dt: o.dt,
            t_end: o.t_end,
            scheme: if o.explicit_scheme != 0 { Scheme::Explicit } else { Scheme::SemiImplicit },
            advection: if o.upwind != 0 { Advection::Upwind } else { Advection::Central },
            snapshot_every: o.snapshot_every,
            steady_tol: o.steady_tol,
            stop_when_steady: o.stop_when_steady != 0,
            ..SolverConfig::default()
        };
        let eq = equilibrium(p)?;
        let grid = Grid::with_spacing(p.length, cfg.dx)?;
        let init = initial_state(&grid, &eq, o.amplitude, o.wavenumber)?;
        let traj = run(init, &grid, p, &cfg, &mut [])?;
        out.write(Box::into_raw(Box::new(KsduoTrajectory { inner: traj })));
        Ok(())
    })
}

/// # Safety
/// `t` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ksduo_trajectory_free(t: *mut KsduoTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of grid cells, or 0 for a null handle.
///
/// # Safety
/// `t` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ksduo_trajectory_cells(t: *const KsduoTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.grid.n)
}

/// Number of stored snapshots (initial and final included), or 0 for null.
///
/// # Safety
/// `t` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ksduo_trajectory_snapshots(t: *const KsduoTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.snapshots.len())
}

/// # Safety
/// `t` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_trajectory_termination(
    t: *const KsduoTrajectory,
    out: *mut KsduoTermination,
) -> KsduoStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(null)?;
        let v = match t.inner.termination {
            Termination::Steady => KsduoTermination::Steady,
            // blow-up surfaces as an error from ksduo_simulate
            Termination::TEnd | Termination::BlowUp => KsduoTermination::TEnd,
        };
        write(out, v)
    })
}

/// Time of snapshot `index`.
///
/// # Safety
/// `t` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksduo_trajectory_time(t: *const KsduoTrajectory, index: usize, out: *mut f64) -> KsduoStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(null)?;
        let s = t.inner.snapshots.get(index).ok_or_else(|| invalid("snapshot index out of range"))?;
        write(out, s.t)
    })
}

/// Copies one field of snapshot `index` into `buf`, which must hold at least
/// `ksduo_trajectory_cells` values.
///
/// # Safety
/// `t` is a live handle and `buf` is writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ksduo_trajectory_field(
    t: *const KsduoTrajectory,
    index: usize,
    field: KsduoField,
    buf: *mut f64,
    len: usize,
) -> KsduoStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(null)?;
        if buf.is_null() {
            return Err(null());
        }
        let s = t.inner.snapshots.get(index).ok_or_else(|| invalid("snapshot index out of range"))?;
        let f = match field {
            KsduoField::U => Field::U,
            KsduoField::V => Field::V,
            KsduoField::W => Field::W,
        };
        let values = s.field(f);
        if len < values.len() {
            return Err(invalid(format!("buffer holds {len} values, need {}", values.len())));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}
