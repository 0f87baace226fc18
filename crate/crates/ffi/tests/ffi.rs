use std::f64::consts::PI;
use std::ffi::{CStr, CString};
use std::ptr;

use yaglom_ffi::*;

fn last_error() -> String {
    let p = yg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn samples(n: usize, ncomp: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..ncomp * n * n * n)
        .map(|i| {
            let (c, j) = (i / (n * n * n), i % (n * n * n));
            let (x, y, z) = (
                (j % n) as f64 * h,
                ((j / n) % n) as f64 * h,
                (j / (n * n)) as f64 * h,
            );
            match c {
                0 => y.sin() + z.cos(),
                1 => z.sin() + x.cos(),
                _ => x.sin() + y.cos(),
            }
        })
        .collect()
}

unsafe fn field(n: usize, ncomp: usize) -> *mut YgField {
    let s = samples(n, ncomp);
    let mut f = ptr::null_mut();
    assert_eq!(
        yg_field_new(n, 2.0 * PI, ncomp, s.as_ptr(), s.len(), &mut f),
        YgStatus::Ok
    );
    f
}

#[test]
fn fields_round_trip_through_files_and_buffers() {
    unsafe {
        let f = field(8, 3);
        assert_eq!((yg_field_n(f), yg_field_ncomp(f)), (8, 3));
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("v.ygf").to_str().unwrap()).unwrap();
        assert_eq!(yg_field_write(f, path.as_ptr()), YgStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(yg_field_read(path.as_ptr(), &mut g), YgStatus::Ok);
        let mut back = vec![0.0; 3 * 512];
        assert_eq!(
            yg_field_samples(g, back.as_mut_ptr(), back.len()),
            YgStatus::Ok
        );
        assert_eq!(back, samples(8, 3));
        yg_field_free(f);
        yg_field_free(g);
        yg_field_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_codes_and_leave_a_message() {
    unsafe {
        yg_clear_last_error();
        assert!(yg_last_error_message().is_null());
        let mut f = ptr::null_mut();
        let s = samples(8, 1);
        assert_eq!(
            yg_field_new(8, 2.0 * PI, 2, s.as_ptr(), s.len(), &mut f),
            YgStatus::ErrInvalid
        );
        assert!(last_error().contains("components"), "{}", last_error());
        assert!(f.is_null());

        let missing = CString::new("/nonexistent/dir/x.ygf").unwrap();
        assert_eq!(yg_field_read(missing.as_ptr(), &mut f), YgStatus::ErrIo);
        assert_eq!(yg_field_read(ptr::null(), &mut f), YgStatus::ErrNullPointer);
        assert!(last_error().contains("path"));

        let mut set = ptr::null_mut();
        assert_eq!(yg_field_set_new(8, 2.0 * PI, &mut set), YgStatus::Ok);
        let v = field(8, 3);
        let bad = CString::new("velocity").unwrap();
        assert_eq!(
            yg_field_set_insert(set, bad.as_ptr(), v),
            YgStatus::ErrInvalid
        );
        assert!(last_error().contains("velocity"));
        // θ must be scalar.
        let theta = CString::new("theta").unwrap();
        assert_eq!(
            yg_field_set_insert(set, theta.as_ptr(), v),
            YgStatus::ErrInvalid
        );
        let temp = CString::new("TEMP").unwrap();
        let mut out = 0.0;
        assert_eq!(
            yg_mean_dissipation(set, temp.as_ptr(), 0.0, 0.5, &mut out),
            YgStatus::ErrInvalid
        );
        assert!(
            last_error().contains("needs field slot"),
            "{}",
            last_error()
        );
        yg_field_free(v);
        yg_field_set_free(set);
    }
}

#[test]
fn smooth_transfer_vanishes_and_the_moment_constant_holds() {
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(yg_field_set_new(16, 2.0 * PI, &mut set), YgStatus::Ok);
        let (v, th) = (field(16, 3), field(16, 1));
        for (slot, f) in [("v", v), ("theta", th)] {
            let s = CString::new(slot).unwrap();
            assert_eq!(yg_field_set_insert(set, s.as_ptr(), f), YgStatus::Ok);
        }
        let temp = CString::new("TEMP").unwrap();
        let h = 2.0 * PI / 16.0;
        let scales: Vec<f64> = (1..=5).map(|i| (1.0 + 0.5 * i as f64) * h).collect();
        let (mut verdict, mut ratio) = (YgVerdict::Inconclusive, 0.0);
        assert_eq!(
            yg_law_check(
                set,
                temp.as_ptr(),
                0.0,
                scales.as_ptr(),
                scales.len(),
                &mut verdict,
                &mut ratio
            ),
            YgStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(verdict, YgVerdict::Conservative);

        // The pointwise field averages to the exact box mean.
        let eps = 3.0 * h;
        let mut mean = 0.0;
        assert_eq!(
            yg_mean_dissipation(set, temp.as_ptr(), 0.0, eps, &mut mean),
            YgStatus::Ok
        );
        let mut d = vec![0.0; 16 * 16 * 16];
        assert_eq!(
            yg_dissipation_field(set, temp.as_ptr(), 0.0, eps, 6, 24, d.as_mut_ptr(), d.len()),
            YgStatus::Ok
        );
        let pointwise = d.iter().sum::<f64>() / d.len() as f64;
        let scale = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(
            (pointwise - mean).abs() <= 1e-10 * scale.max(1.0),
            "{pointwise} vs {mean}"
        );
        assert_eq!(
            yg_dissipation_field(set, temp.as_ptr(), 0.0, eps, 6, 24, d.as_mut_ptr(), 7),
            YgStatus::ErrInvalid
        );

        let mut g = 0.0;
        assert_eq!(
            yg_mean_structure(set, temp.as_ptr(), 0.0, eps, &mut g),
            YgStatus::Ok
        );
        assert!(g.is_finite());
        yg_field_free(v);
        yg_field_free(th);
        yg_field_set_free(set);

        for p in [YgProfile::Bump, YgProfile::Quartic] {
            let mut m = 0.0;
            assert_eq!(yg_radial_third_moment(p, &mut m), YgStatus::Ok);
            assert!((m + 3.0 / (4.0 * PI)).abs() < 1e-8);
        }
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(yg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/yaglom.h")).unwrap();
    let source = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in &exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from yaglom.h"
        );
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-c", "-o"])
        .arg(std::env::temp_dir().join("yaglom_smoke.o"))
        .arg(format!("-I{dir}/include"))
        .arg(format!("{dir}/tests/c/smoke.c"))
        .status()
    else {
        eprintln!("no C compiler on PATH; header compile check skipped");
        return;
    };
    assert!(status.success());
}
