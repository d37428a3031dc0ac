use std::ffi::{c_char, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use tailsitter_ffi::*;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe { ts_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf.iter().take_while(|c| **c != 0).map(|c| *c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(ts_vehicle_default(ptr::null_mut()), TsStatus::NullPointer);
        let mut v = ptr::null_mut();
        assert_eq!(ts_vehicle_load(ptr::null(), &mut v), TsStatus::NullPointer);
        assert!(v.is_null());
        assert!(ts_vehicle_mass(ptr::null()).is_nan());
        assert_eq!(ts_log_len(ptr::null()), 0);
        ts_vehicle_free(ptr::null_mut());
    }
    assert_eq!(last_error(), "path is null");
}

#[test]
fn missing_file_is_a_config_error() {
    let path = cpath(Path::new("/nonexistent/vehicle.toml"));
    let mut v = ptr::null_mut();
    let status = unsafe { ts_vehicle_load(path.as_ptr(), &mut v) };
    assert_eq!(status, TsStatus::Config);
    assert!(v.is_null());
    assert!(last_error().contains("nonexistent"));
}

#[test]
fn error_buffer_truncates_and_reports_length() {
    let path = cpath(Path::new("/nonexistent/vehicle.toml"));
    let mut v = ptr::null_mut();
    unsafe { ts_vehicle_load(path.as_ptr(), &mut v) };
    let mut small = [1 as c_char; 5];
    let full = unsafe { ts_last_error(small.as_mut_ptr(), small.len()) };
    assert!(full > 5);
    assert_eq!(small[4], 0);
    assert_eq!(unsafe { ts_last_error(ptr::null_mut(), 0) }, full);
}

#[test]
fn derivative_matches_library() {
    use tailsitter::control::RotorCommand;
    use tailsitter::vehicle::{state_derivative, Environment, RigidBodyState, VehicleParams};

    let s = [0.3, -1.0, -10.0, -1.2, 0.05, 0.1, 1.0, 4.0, -0.5, 0.1, -0.2, 0.05];
    let w = [300.0, 310.0, 290.0, 305.0];
    let mut out = [0.0; 12];
    unsafe {
        let mut v = ptr::null_mut();
        assert_eq!(ts_vehicle_default(&mut v), TsStatus::Ok);
        assert_eq!(ts_vehicle_derivative(v, s.as_ptr(), w.as_ptr(), out.as_mut_ptr()), TsStatus::Ok);
        ts_vehicle_free(v);
    }
    let x = RigidBodyState {
        position: s[0..3].try_into().map(|a: [f64; 3]| a.into()).unwrap(),
        attitude: s[3..6].try_into().map(|a: [f64; 3]| a.into()).unwrap(),
        velocity: s[6..9].try_into().map(|a: [f64; 3]| a.into()).unwrap(),
        rates: s[9..12].try_into().map(|a: [f64; 3]| a.into()).unwrap(),
    };
    let r = RotorCommand { speeds: w.into(), ..Default::default() };
    let d = state_derivative(&x, &r, &Environment::default(), &VehicleParams::default()).unwrap();
    let expect: Vec<f64> = [d.position, d.attitude, d.velocity, d.rates].iter().flat_map(|v| v.iter().copied()).collect();
    assert_eq!(out.to_vec(), expect);
}

#[test]
fn negative_rotor_speed_is_invalid() {
    let s = [0.0; 12];
    let w = [-1.0, 0.0, 0.0, 0.0];
    let mut out = [0.0; 12];
    unsafe {
        let mut v = ptr::null_mut();
        ts_vehicle_default(&mut v);
        assert_eq!(ts_vehicle_derivative(v, s.as_ptr(), w.as_ptr(), out.as_mut_ptr()), TsStatus::InvalidArgument);
        ts_vehicle_free(v);
    }
}

#[test]
fn hover_trim_balances_weight() {
    let mut state = [0.0; 12];
    let mut thrust = 0.0;
    unsafe {
        let mut v = ptr::null_mut();
        ts_vehicle_default(&mut v);
        assert_eq!(ts_vehicle_hover_trim(v, state.as_mut_ptr(), &mut thrust), TsStatus::Ok);
        let m = ts_vehicle_mass(v);
        ts_vehicle_free(v);
        // Wake-induced wing drag makes the rotors work harder than the weight alone.
        assert!(thrust > m * 9.8 && thrust < 1.2 * m * 9.81, "thrust {thrust}");
    }
    assert!((state[3] + std::f64::consts::FRAC_PI_2).abs() < 0.3, "phi {}", state[3]);
}

#[test]
fn plan_and_fly_round_trip() {
    let dir = configs();
    let vp = cpath(&dir.join("vehicle.toml"));
    let mp = cpath(&dir.join("hff_mission.toml"));
    let gp = cpath(&dir.join("hff_gains.toml"));
    let tmp = std::env::temp_dir().join(format!("tailsitter_ffi_{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    unsafe {
        let (mut v, mut m, mut c, mut p, mut l) =
            (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(ts_vehicle_load(vp.as_ptr(), &mut v), TsStatus::Ok);
        assert_eq!(ts_mission_load(mp.as_ptr(), &mut m), TsStatus::Ok);
        assert_eq!(ts_controller_load(gp.as_ptr(), &mut c), TsStatus::Ok);
        assert_eq!(ts_plan(v, m, 0, &mut p), TsStatus::Ok, "{}", last_error());
        let tf = ts_plan_final_time(p);
        assert!(tf > 0.5 && tf < 5.0, "t_f {tf}");
        assert!(ts_plan_max_defect(p) < 1e-6);
        assert!(ts_plan_flight_duration(p) > tf);

        let csv = cpath(&tmp.join("trajectory.csv"));
        assert_eq!(ts_plan_write_csv(p, csv.as_ptr()), TsStatus::Ok);

        assert_eq!(ts_fly(p, c, v, TsMode::Optimal, &mut l), TsStatus::Ok, "{}", last_error());
        let n = ts_log_len(l);
        assert!(n > 100);
        let rms = ts_log_rms_position_error(l);
        assert!(rms > 0.0 && rms < ts_log_max_position_error(l) + 1e-12);
        let (mut t, mut e) = (0.0, [0.0; 3]);
        assert_eq!(ts_log_sample(l, n - 1, &mut t, e.as_mut_ptr()), TsStatus::Ok);
        assert!(t > tf);
        assert_eq!(ts_log_sample(l, n, &mut t, e.as_mut_ptr()), TsStatus::InvalidArgument);
        let log_csv = cpath(&tmp.join("log.csv"));
        assert_eq!(ts_log_write_csv(l, log_csv.as_ptr()), TsStatus::Ok);

        ts_log_free(l);
        ts_plan_free(p);
        ts_controller_free(c);
        ts_mission_free(m);
        ts_vehicle_free(v);
    }
    let text = std::fs::read_to_string(tmp.join("trajectory.csv")).unwrap();
    assert!(text.lines().count() > 100);
    std::fs::remove_dir_all(&tmp).unwrap();
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tailsitter.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["ts_plan", "ts_fly", "ts_last_error", "TS_STATUS_DIVERGED", "typedef struct TsPlan TsPlan"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"]).arg(&header).output() else {
        eprintln!("no C compiler; header syntax not checked");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
