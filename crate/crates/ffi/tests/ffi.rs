use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use avgopt_ffi::*;

fn last_error() -> String {
    let p = avgopt_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn bilinear(d1: usize, d2: usize, seed: u64) -> *mut AvgoptInstance {
    let mut h = ptr::null_mut();
    let s = unsafe { avgopt_bilinear_instance_new(d1, d2, 1.0, 1.0, seed, &mut h) };
    assert_eq!(s, AvgoptStatus::Ok);
    h
}

#[test]
fn handle_lifecycle_and_accessors() {
    let h = bilinear(3, 5, 1);
    unsafe {
        assert_eq!(avgopt_instance_dim(h), 8);
        let mut a = vec![0.0; 64];
        assert_eq!(avgopt_instance_matrix(h, a.as_mut_ptr(), a.len()), AvgoptStatus::Ok);
        // Column-major skew-symmetric matrix.
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(a[i + 8 * j], -a[j + 8 * i]);
            }
        }
        let mut xs = vec![0.0; 8];
        assert_eq!(avgopt_instance_x_star(h, xs.as_mut_ptr(), 8), AvgoptStatus::Ok);
        let mut f = vec![1.0; 8];
        assert_eq!(avgopt_field(h, xs.as_ptr(), 8, f.as_mut_ptr()), AvgoptStatus::Ok);
        assert!(f.iter().all(|&v| v == 0.0));
        let mut d = -1.0;
        assert_eq!(avgopt_distance(h, xs.as_ptr(), 8, &mut d), AvgoptStatus::Ok);
        assert_eq!(d, 0.0);
        avgopt_instance_free(h);
        avgopt_instance_free(ptr::null_mut());
        assert_eq!(avgopt_instance_dim(ptr::null()), 0);
    }
}

#[test]
fn hamiltonian_field_matches_gram_product() {
    let h = bilinear(4, 4, 9);
    unsafe {
        let mut a = vec![0.0; 64];
        avgopt_instance_matrix(h, a.as_mut_ptr(), 64);
        let mut xs = vec![0.0; 8];
        avgopt_instance_x_star(h, xs.as_mut_ptr(), 8);
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.3 - 1.0).collect();
        let mut g = vec![0.0; 8];
        assert_eq!(avgopt_hamiltonian_field(h, x.as_ptr(), 8, g.as_mut_ptr()), AvgoptStatus::Ok);
        let e: Vec<f64> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
        let ae: Vec<f64> = (0..8).map(|i| (0..8).map(|j| a[i + 8 * j] * e[j]).sum()).collect();
        for (i, gi) in g.iter().enumerate() {
            let expect: f64 = (0..8).map(|k| a[k + 8 * i] * ae[k]).sum();
            assert!((gi - expect).abs() < 1e-12);
        }
        avgopt_instance_free(h);
    }
}

#[test]
fn runs_report_distances() {
    let h = bilinear(10, 10, 2);
    unsafe {
        let mut dist = vec![0.0; 41];
        let (mut written, mut diverged, mut evals) = (0usize, true, 0u64);
        let s = avgopt_run(
            h,
            AvgoptMethod::AvgOptBilinear as u32,
            1.0,
            1.0,
            40,
            dist.as_mut_ptr(),
            dist.len(),
            &mut written,
            &mut diverged,
            &mut evals,
        );
        assert_eq!(s, AvgoptStatus::Ok, "{}", last_error());
        assert_eq!((written, diverged, evals), (41, false, 2));
        assert!(dist.iter().all(|d| d.is_finite() && *d >= 0.0));

        // Absurd step: stops early and says so.
        let s = avgopt_run(
            h,
            AvgoptMethod::Extragradient as u32,
            50.0,
            0.0,
            40,
            dist.as_mut_ptr(),
            dist.len(),
            &mut written,
            &mut diverged,
            ptr::null_mut(),
        );
        assert_eq!(s, AvgoptStatus::Ok);
        assert!(diverged && written < 41);
        avgopt_instance_free(h);
    }
}

#[test]
fn errors_are_codes_with_messages() {
    let h = bilinear(3, 3, 0);
    unsafe {
        let x = [0.0; 5];
        let mut out = [0.0; 5];
        assert_eq!(avgopt_field(h, x.as_ptr(), 5, out.as_mut_ptr()), AvgoptStatus::DimensionMismatch);
        assert!(last_error().contains("expected length 6"));
        assert_eq!(avgopt_field(ptr::null(), x.as_ptr(), 5, out.as_mut_ptr()), AvgoptStatus::NullPointer);
        let (mut w, mut dv) = (0usize, false);
        assert_eq!(
            avgopt_run(h, 99, 0.0, 0.0, 3, out.as_mut_ptr(), 5, &mut w, &mut dv, ptr::null_mut()),
            AvgoptStatus::InvalidArgument
        );
        assert!(last_error().contains("unknown method"));
        let mut hh = ptr::null_mut();
        assert_eq!(avgopt_disk_instance_new(5, 2.0, 1.0, 0, 1.0, 0, &mut hh), AvgoptStatus::InvalidArgument);
        assert!(last_error().contains("even"));
        assert!(hh.is_null());
        // A successful call clears the message.
        let mut d = 0.0;
        assert_eq!(avgopt_limiting_ratio(2.0, 1.0, &mut d), AvgoptStatus::Ok);
        assert!(avgopt_last_error_message().is_null());
        assert_eq!(d, 0.75);
        let msg = CStr::from_ptr(avgopt_status_string(AvgoptStatus::BufferTooSmall as u32));
        assert_eq!(msg.to_str().unwrap(), "buffer too small");
        avgopt_instance_free(h);
    }
}

#[test]
fn coefficient_tables() {
    unsafe {
        let (mut h, mut m) = ([0.0; 4], [0.0; 4]);
        assert_eq!(avgopt_mp_coefficients(1.0, 0.25, 3, h.as_mut_ptr(), m.as_mut_ptr(), 4), AvgoptStatus::Ok);
        assert!((h[1] - 0.8).abs() < 1e-15);
        assert_eq!(avgopt_mp_coefficients(1.0, 0.25, 3, h.as_mut_ptr(), m.as_mut_ptr(), 3), AvgoptStatus::BufferTooSmall);
        let (mut b, mut bb) = ([0.0; 3], [0.0; 3]);
        assert_eq!(avgopt_disk_weights(2.0, 1.0, 2, b.as_mut_ptr(), bb.as_mut_ptr(), 3), AvgoptStatus::Ok);
        for (x, y) in b.iter().zip([1.0, 8.0, 48.0]) {
            assert!((x - y).abs() < 1e-12 * y);
        }
        let mut xi = 0.0;
        assert_eq!(avgopt_disk_rate(AvgoptRate::GradientDescent as u32, 2.0, 1.0, 1, &mut xi), AvgoptStatus::Ok);
        assert!((xi - 0.125).abs() < 1e-15);
        assert_eq!(avgopt_disk_rate(7, 2.0, 1.0, 1, &mut xi), AvgoptStatus::InvalidArgument);
    }
}

/// Compiles a C program against the generated header and the static
/// library, then runs it.
#[test]
fn c_program_links_against_header() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // <target>/<profile>/deps/<this test> → <target>/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libavgopt_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out_dir = tempfile_dir();
    let exe = out_dir.join("smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile/link failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
    let _ = std::fs::remove_dir_all(&out_dir);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("avgopt-ffi-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
