use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use pffiber_ffi::*;

struct Model(*mut PfModel);

impl Model {
    fn new(e: f64, r: f64, s: f64, gamma0: f64) -> Result<Self, PfStatus> {
        let mut h = ptr::null_mut();
        match unsafe { pf_model_new(e, r, s, gamma0, &mut h) } {
            PfStatus::Ok => Ok(Model(h)),
            st => Err(st),
        }
    }
}

impl Drop for Model {
    fn drop(&mut self) {
        unsafe { pf_model_free(self.0) }
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pf_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn default_gamma0_and_ground_state() {
    let m = Model::new(1.0, 1.0, 0.0, f64::NAN).unwrap();
    let mut g = 0.0;
    assert_eq!(unsafe { pf_model_gamma0(m.0, &mut g) }, PfStatus::Ok);
    assert_eq!(g, std::f64::consts::PI);

    let (mut z, mut found) = (0.0, false);
    assert_eq!(unsafe { pf_solve_ground(m.0, 0.5, 1e-12, &mut z, &mut found) }, PfStatus::Ok);
    assert!(found);
    assert!((z - 3.0913360966653225).abs() < 1e-10);
    assert_eq!(last_error(), "");

    let mut edge = 0.0;
    assert_eq!(unsafe { pf_z0(m.0, 0.5, &mut edge) }, PfStatus::Ok);
    assert!(z < edge);
}

#[test]
fn explicit_gamma0_is_kept() {
    let m = Model::new(0.0, 1.0, 0.0, 0.25).unwrap();
    let mut z = 0.0;
    let mut found = false;
    assert_eq!(unsafe { pf_solve_ground(m.0, 0.5, 1e-12, &mut z, &mut found) }, PfStatus::Ok);
    assert!(found);
    assert!((z - 0.375).abs() < 1e-14);
}

#[test]
fn dispersion_marks_missing_roots() {
    let m = Model::new(1.0, 1.0, 0.0, f64::NAN).unwrap();
    let ps = [0.0, 0.5, 1.0, 50.0];
    let mut zs = [0.0; 4];
    assert_eq!(unsafe { pf_dispersion(m.0, ps.as_ptr(), ps.len(), 1e-12, zs.as_mut_ptr()) }, PfStatus::Ok);
    assert_eq!(zs[0], std::f64::consts::PI);
    // negative inverse mass at this coupling: E dips below gamma0
    assert!(zs[1] < zs[0] && zs[2].is_finite());
    assert!(zs[3].is_nan());
    assert_eq!(unsafe { pf_dispersion(m.0, ptr::null(), 0, 1e-12, ptr::null_mut()) }, PfStatus::Ok);
}

#[test]
fn kernels_and_secular_function() {
    let m = Model::new(1.0, 2.0, 0.0, f64::NAN).unwrap();
    let (mut re, mut im) = (0.0, 0.0);
    let g = 4.0 * std::f64::consts::PI;
    // just below the edge the kernel approaches (8/3) ln 2
    assert_eq!(unsafe { pf_d12(m.0, 0.0, g - 1e-12, 0.0, &mut re, &mut im) }, PfStatus::Ok);
    assert!((re - 8.0 / 3.0 * 2f64.ln()).abs() < 1e-6);
    assert_eq!(im, 0.0);
    assert_eq!(unsafe { pf_d12(m.0, 0.3, 1.0, 1.0, &mut re, &mut im) }, PfStatus::Ok);
    assert!(im > 0.0);

    let mut f = 0.0;
    assert_eq!(unsafe { pf_secular_f(m.0, 0.5, g + 10.0, &mut f) }, PfStatus::OnEssentialSpectrum);
    assert!(last_error().contains("essential spectrum"));
    assert_eq!(unsafe { pf_secular_f(m.0, 0.5, 0.0, &mut f) }, PfStatus::Ok);
    assert!(f > 0.0);
}

#[test]
fn effective_masses() {
    let (mut a, mut b) = (0.0, 0.0);
    let m = Model::new(0.3, 2.0, 1e-6, f64::NAN).unwrap();
    assert_eq!(unsafe { pf_effective_mass(m.0, &mut a) }, PfStatus::Ok);
    assert_eq!(unsafe { pf_effective_mass_sigma0(0.3, 2.0, &mut b) }, PfStatus::Ok);
    assert!((a - b).abs() < 1e-4);
    let x = 8.0 / 3.0 * std::f64::consts::PI * 0.09 * 2f64.ln();
    assert!((b - (1.0 - x) / (1.0 + x)).abs() < 1e-14);
}

#[test]
fn errors_and_null_pointers() {
    assert_eq!(Model::new(1.0, 1.0, 0.7, f64::NAN).err(), Some(PfStatus::InvalidParams));
    assert!(last_error().contains("sigma"));
    assert_eq!(
        unsafe { pf_model_new(1.0, 1.0, 0.0, f64::NAN, ptr::null_mut()) },
        PfStatus::NullPointer
    );
    let mut z = 0.0;
    assert_eq!(unsafe { pf_z0(ptr::null(), 0.5, &mut z) }, PfStatus::NullPointer);
    let m = Model::new(1.0, 1.0, 0.0, f64::NAN).unwrap();
    assert_eq!(unsafe { pf_z0(m.0, -1.0, &mut z) }, PfStatus::Domain);
    assert_eq!(unsafe { pf_model_set_quadrature(m.0, 0, 1e-10, 10) }, PfStatus::InvalidParams);
    assert_eq!(unsafe { pf_model_set_quadrature(m.0, 30, 1e-12, 500) }, PfStatus::Ok);
    unsafe { pf_model_free(ptr::null_mut()) };
    let v = unsafe { CStr::from_ptr(pf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = target_dir();
    assert!(lib_dir.join("libpffiber_ffi.so").exists(), "shared library next to the test binary");
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-Wall")
        .arg("-Werror")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lpffiber_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
}
