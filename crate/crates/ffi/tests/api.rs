use std::ffi::{c_char, CStr};
use std::ptr;

use beamforge_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { bf_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

struct Handles {
    params: *mut BfParams,
    model: *mut BfModel,
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            bf_params_free(self.params);
            bf_model_free(self.model);
        }
    }
}

fn handles(nodes: usize, gamma2_db: f64) -> Handles {
    let mut params = ptr::null_mut();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(bf_params_new(nodes, 4, 2, 16, 10.0, 20.0, gamma2_db, &mut params), BfStatus::Ok);
        assert_eq!(bf_model_perfect(&mut model), BfStatus::Ok);
    }
    Handles { params, model }
}

#[test]
fn derived_powers_at_the_figure_operating_point() {
    let h = handles(100, 20.0);
    let mut d = BfDerivedPowers::default();
    assert_eq!(unsafe { bf_params_derived(h.params, &mut d) }, BfStatus::Ok);
    assert!((d.sigma_w_sq - 0.01).abs() < 1e-15);
    assert!((d.sigma_v_sq - 0.01).abs() < 1e-15);
    assert!((d.sigma_eta_sq - 3.01).abs() < 1e-12);
    assert!((d.gamma1 - 100.0).abs() < 1e-9);
}

#[test]
fn analytic_and_simulated_sep_agree() {
    let h = handles(8, 20.0);
    let mut analytic = 0.0;
    let mut mc = BfMcSep::default();
    unsafe {
        assert_eq!(bf_sep_analytic(h.params, h.model, 0, 0, &mut analytic), BfStatus::Ok);
        assert_eq!(bf_sep_mc(h.params, h.model, 20_000, 1, &mut mc), BfStatus::Ok);
    }
    assert!((analytic - 1.8928e-2).abs() < 1e-5, "{analytic}");
    assert_eq!(mc.symbols, 320_000);
    assert!((mc.sep - analytic).abs() < 3.0 * mc.std_error, "{mc:?} vs {analytic}");
}

#[test]
fn closed_forms() {
    let h = handles(100, 20.0);
    let mut v = 0.0;
    unsafe {
        assert_eq!(bf_delta_pav(h.params, 0.1, &mut v), BfStatus::Ok);
        assert!((v - 0.00401).abs() < 1e-15);
        assert_eq!(bf_kappa_variance(h.params, 0.0, 2.0, &mut v), BfStatus::Ok);
        assert!((v - 1e-4 * 3.01 * 2.0).abs() < 1e-15);
    }
    assert_eq!(bf_power_reduction_coefficient(3, 0.0), 0.5);
    assert_eq!(bf_power_reduction_coefficient(50, 1.0), 1.0);
}

#[test]
fn phase_models() {
    let h = handles(10, 20.0);
    let mut closed = ptr::null_mut();
    let mut open = ptr::null_mut();
    let (mut m, mut se) = (0.0, 0.0);
    unsafe {
        assert_eq!(bf_model_closed_loop(10.0, &mut closed), BfStatus::Ok);
        assert_eq!(bf_mean_phasor(h.params, closed, 0, 0, &mut m, &mut se), BfStatus::Ok);
        assert!((m - 0.899_833).abs() < 1e-5, "{m}");
        assert_eq!(bf_model_open_loop(0.0, 0.0, &mut open), BfStatus::Ok);
        assert_eq!(bf_mean_phasor(h.params, open, 1000, 0, &mut m, &mut se), BfStatus::Ok);
        assert!((m - 1.0).abs() < 1e-12);
        assert_eq!(bf_mean_phasor(h.params, h.model, 10, 0, &mut m, &mut se), BfStatus::Usage);
        bf_model_free(closed);
        bf_model_free(open);
    }
}

#[test]
fn beampattern_fills_outputs() {
    let h = handles(16, 20.0);
    let phis = [-1.0, 0.0, 1.0];
    let mut power = [0.0; 3];
    let mut se = [0.0; 3];
    let status = unsafe {
        bf_beampattern(h.params, h.model, 0.0, phis.as_ptr(), 3, 100, 0, power.as_mut_ptr(), se.as_mut_ptr())
    };
    assert_eq!(status, BfStatus::Ok);
    assert!(power[1] > power[0] && power[1] > power[2]);
    assert!(se.iter().all(|&s| s > 0.0));
}

#[test]
fn errors_are_reported_with_messages() {
    let mut params = ptr::null_mut();
    let status = unsafe { bf_params_new(8, 4, 3, 16, 10.0, 20.0, 20.0, &mut params) };
    assert_eq!(status, BfStatus::InvalidParameter);
    assert!(params.is_null());
    assert!(last_error().contains("PSK order"), "{}", last_error());

    let mut model = ptr::null_mut();
    assert_eq!(unsafe { bf_model_channel_error(-1.0, &mut model) }, BfStatus::InvalidParameter);
    assert_eq!(unsafe { bf_model_perfect(ptr::null_mut()) }, BfStatus::NullPointer);
    assert!(last_error().contains("out_model"));

    let h = handles(8, 20.0);
    let mut out = 0.0;
    assert_eq!(unsafe { bf_sep_analytic(ptr::null(), h.model, 0, 0, &mut out) }, BfStatus::NullPointer);
    let mut mc = BfMcSep::default();
    assert_eq!(unsafe { bf_sep_mc(h.params, h.model, 0, 0, &mut mc) }, BfStatus::InvalidParameter);
}

#[test]
fn truncated_message_is_terminated() {
    let mut model = ptr::null_mut();
    unsafe { bf_model_closed_loop(-5.0, &mut model) };
    let mut buf = [1 as c_char; 8];
    let full = unsafe { bf_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(full > 8);
    assert_eq!(buf[7], 0);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(bf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
