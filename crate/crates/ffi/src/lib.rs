//! C interface to the tailsitter library.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `ts_*_load`/`ts_plan`/`ts_fly` call and released by the matching
//! `ts_*_free`. Functions return a [`TsStatus`]; on failure the message is
//! available from [`ts_last_error`] on the same thread. Panics are caught
//! and reported as `TS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nalgebra::{Vector3, Vector4};
use tailsitter::config::{ControllerFile, MissionFile, VehicleFile};
use tailsitter::control::RotorCommand;
use tailsitter::pipeline::{fly, plan_mission, PlannedMission};
use tailsitter::sim::{FeedforwardMode, SimLog};
use tailsitter::vehicle::{hover_trim, state_derivative, Environment, RigidBodyState, VehicleParams};
use tailsitter::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Infeasible = 4,
    SolverFailed = 5,
    Diverged = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsMode {
    None = 0,
    Optimal = 1,
    Perturbed = 2,
}

impl From<TsMode> for FeedforwardMode {
    fn from(m: TsMode) -> Self {
        match m {
            TsMode::None => FeedforwardMode::None,
            TsMode::Optimal => FeedforwardMode::Optimal,
            TsMode::Perturbed => FeedforwardMode::Perturbed,
        }
    }
}

/// Vehicle parameters.
pub struct TsVehicle(VehicleParams);
/// Parsed mission file: boundary conditions, solver options, tail settings.
pub struct TsMission(MissionFile);
/// Controller gains and loop rates.
pub struct TsController(ControllerFile);
/// Solved mission with its reference trajectory.
pub struct TsPlan(PlannedMission);
/// Closed-loop simulation log.
pub struct TsLog(SimLog);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> TsStatus {
    match e {
        Error::InvalidParameter(_) => TsStatus::InvalidArgument,
        Error::Config { .. } => TsStatus::Config,
        Error::InfeasibleMission(_) => TsStatus::Infeasible,
        Error::SolverFailed(_) => TsStatus::SolverFailed,
        Error::Diverged { .. } => TsStatus::Diverged,
        Error::Io(_) | Error::Csv(_) => TsStatus::Io,
        _ => TsStatus::Numerical,
    }
}

fn fail(e: Error) -> TsStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn guard(f: impl FnOnce() -> TsStatus) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside the tailsitter library");
            TsStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, TsStatus> {
    if p.is_null() {
        set_error("path is null");
        return Err(TsStatus::NullPointer);
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(TsStatus::InvalidArgument)
        }
    }
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, TsStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("handle is null");
        TsStatus::NullPointer
    })
}

fn emit<T>(out: *mut *mut T, value: T) -> TsStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return TsStatus::NullPointer;
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    TsStatus::Ok
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! free_fn {
    ($name:ident, $ty:ty) => {
        /// Releases a handle. Null is ignored.
        ///
        /// # Safety
        /// `h` must come from this library and not have been freed.
        #[no_mangle]
        pub unsafe extern "C" fn $name(h: *mut $ty) {
            if !h.is_null() {
                drop(Box::from_raw(h));
            }
        }
    };
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ts_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Built-in vehicle parameters.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_vehicle_default(out: *mut *mut TsVehicle) -> TsStatus {
    guard(|| emit(out, TsVehicle(VehicleParams::default())))
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_vehicle_load(path: *const c_char, out: *mut *mut TsVehicle) -> TsStatus {
    guard(|| {
        let path = tri!(path_arg(path));
        match VehicleFile::load(&path) {
            Ok(v) => emit(out, TsVehicle(v)),
            Err(e) => fail(e),
        }
    })
}

/// Vehicle mass in kg, or NaN for a null handle.
///
/// # Safety
/// `v` must be null or a live vehicle handle.
#[no_mangle]
pub unsafe extern "C" fn ts_vehicle_mass(v: *const TsVehicle) -> f64 {
    v.as_ref().map_or(f64::NAN, |v| v.0.mass)
}

/// Plant state derivative in still air.
///
/// `state` and `out` hold 12 values: inertial position (z down), Euler
/// attitude, body velocity, body rates. `rotor_speeds` holds 4 values, rad/s.
///
/// # Safety
/// Arrays must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn ts_vehicle_derivative(
    v: *const TsVehicle,
    state: *const f64,
    rotor_speeds: *const f64,
    out: *mut f64,
) -> TsStatus {
    guard(|| {
        let v = tri!(handle(v));
        if state.is_null() || rotor_speeds.is_null() || out.is_null() {
            set_error("array argument is null");
            return TsStatus::NullPointer;
        }
        let s = std::slice::from_raw_parts(state, 12);
        let w = std::slice::from_raw_parts(rotor_speeds, 4);
        let x = RigidBodyState {
            position: Vector3::new(s[0], s[1], s[2]),
            attitude: Vector3::new(s[3], s[4], s[5]),
            velocity: Vector3::new(s[6], s[7], s[8]),
            rates: Vector3::new(s[9], s[10], s[11]),
        };
        let rotors = RotorCommand { speeds: Vector4::new(w[0], w[1], w[2], w[3]), ..Default::default() };
        match state_derivative(&x, &rotors, &Environment::default(), &v.0) {
            Ok(d) => {
                let o = std::slice::from_raw_parts_mut(out, 12);
                for (i, part) in [d.position, d.attitude, d.velocity, d.rates].iter().enumerate() {
                    o[3 * i..3 * i + 3].copy_from_slice(part.as_slice());
                }
                TsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Hover trim at the origin: writes the 12-value state and the thrust, N.
///
/// # Safety
/// `state` must hold 12 values; `thrust` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ts_vehicle_hover_trim(v: *const TsVehicle, state: *mut f64, thrust: *mut f64) -> TsStatus {
    guard(|| {
        let v = tri!(handle(v));
        if state.is_null() || thrust.is_null() {
            set_error("output pointer is null");
            return TsStatus::NullPointer;
        }
        match hover_trim(Vector3::zeros(), &v.0) {
            Ok(h) => {
                std::slice::from_raw_parts_mut(state, 12).copy_from_slice(&h.state.to_array());
                *thrust = h.thrust;
                TsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_mission_load(path: *const c_char, out: *mut *mut TsMission) -> TsStatus {
    guard(|| {
        let path = tri!(path_arg(path));
        match MissionFile::load(&path) {
            Ok(m) => emit(out, TsMission(m)),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_controller_load(path: *const c_char, out: *mut *mut TsController) -> TsStatus {
    guard(|| {
        let path = tri!(path_arg(path));
        match ControllerFile::load(&path) {
            Ok(c) => emit(out, TsController(c)),
            Err(e) => fail(e),
        }
    })
}

/// Solves the minimum-time transition. `nodes` of 0 keeps the mission's node
/// count. No handle is produced on failure.
///
/// # Safety
/// Handles must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_plan(
    v: *const TsVehicle,
    m: *const TsMission,
    nodes: usize,
    out: *mut *mut TsPlan,
) -> TsStatus {
    guard(|| {
        let v = tri!(handle(v));
        let m = tri!(handle(m));
        match plan_mission(&m.0, &v.0, (nodes > 0).then_some(nodes)) {
            Ok(p) => emit(out, TsPlan(p)),
            Err(e) => fail(e),
        }
    })
}

/// Maneuver time, s, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn ts_plan_final_time(p: *const TsPlan) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.final_time())
}

/// Largest collocation defect of the solution.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn ts_plan_max_defect(p: *const TsPlan) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.solution.max_defect)
}

/// Simulated time covering the maneuver and the steady tail, s.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn ts_plan_flight_duration(p: *const TsPlan) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.flight_duration)
}

/// # Safety
/// `p` must be live; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ts_plan_write_csv(p: *const TsPlan, path: *const c_char) -> TsStatus {
    guard(|| {
        let p = tri!(handle(p));
        let path = tri!(path_arg(path));
        let file = match File::create(&path) {
            Ok(f) => f,
            Err(e) => return fail(e.into()),
        };
        match p.0.reference.write_csv(BufWriter::new(file)) {
            Ok(()) => TsStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Flies the plan for its flight duration. On divergence the partial log is
/// still returned through `out` along with `TS_STATUS_DIVERGED`.
///
/// # Safety
/// Handles must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_fly(
    p: *const TsPlan,
    c: *const TsController,
    v: *const TsVehicle,
    mode: TsMode,
    out: *mut *mut TsLog,
) -> TsStatus {
    guard(|| {
        let p = tri!(handle(p));
        let c = tri!(handle(c));
        let v = tri!(handle(v));
        match fly(&p.0.reference, p.0.flight_duration, &c.0, mode.into(), &v.0, None) {
            Ok(log) => emit(out, TsLog(log)),
            Err(Error::Diverged { time, error, log }) => {
                let s = emit(out, TsLog(*log));
                if s != TsStatus::Ok {
                    return s;
                }
                set_error(format!("simulation diverged at t = {time:.3} s (position error {error:.2} m)"));
                TsStatus::Diverged
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of logged samples, 0 for a null handle.
///
/// # Safety
/// `l` must be null or a live log handle.
#[no_mangle]
pub unsafe extern "C" fn ts_log_len(l: *const TsLog) -> usize {
    l.as_ref().map_or(0, |l| l.0.len())
}

/// # Safety
/// `l` must be null or a live log handle.
#[no_mangle]
pub unsafe extern "C" fn ts_log_rms_position_error(l: *const TsLog) -> f64 {
    l.as_ref().map_or(f64::NAN, |l| l.0.rms_position_error())
}

/// # Safety
/// `l` must be null or a live log handle.
#[no_mangle]
pub unsafe extern "C" fn ts_log_max_position_error(l: *const TsLog) -> f64 {
    l.as_ref().map_or(f64::NAN, |l| l.0.max_position_error())
}

/// Time and inertial position error of sample `i`: writes t and 3 values.
///
/// # Safety
/// `l` must be live; `t` valid; `err` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn ts_log_sample(l: *const TsLog, i: usize, t: *mut f64, err: *mut f64) -> TsStatus {
    guard(|| {
        let l = tri!(handle(l));
        if t.is_null() || err.is_null() {
            set_error("output pointer is null");
            return TsStatus::NullPointer;
        }
        if i >= l.0.len() {
            set_error(format!("sample {i} out of range (len {})", l.0.len()));
            return TsStatus::InvalidArgument;
        }
        *t = l.0.time[i];
        std::slice::from_raw_parts_mut(err, 3).copy_from_slice(l.0.position_error[i].as_slice());
        TsStatus::Ok
    })
}

/// # Safety
/// `l` must be live; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ts_log_write_csv(l: *const TsLog, path: *const c_char) -> TsStatus {
    guard(|| {
        let l = tri!(handle(l));
        let path = tri!(path_arg(path));
        let file = match File::create(&path) {
            Ok(f) => f,
            Err(e) => return fail(e.into()),
        };
        match l.0.write_csv(BufWriter::new(file)) {
            Ok(()) => TsStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

free_fn!(ts_vehicle_free, TsVehicle);
free_fn!(ts_mission_free, TsMission);
free_fn!(ts_controller_free, TsController);
free_fn!(ts_plan_free, TsPlan);
free_fn!(ts_log_free, TsLog);
