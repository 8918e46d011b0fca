use std::ffi::CStr;
use std::ptr;

use lobmarl::policy::{init_params, Checkpoint, ObsNormalizer};
use lobmarl_ffi::*;

#[test]
fn book_lifecycle_and_matching() {
    unsafe {
        let mut book = ptr::null_mut();
        assert_eq!(lob_book_new(0.5, &mut book), LobStatus::Ok);
        let (mut n, mut vol) = (0u64, 0i64);
        assert_eq!(lob_book_submit(book, 1, -3, 100.5, 0, &mut n, &mut vol), LobStatus::Ok);
        assert_eq!((n, vol), (0, 0));
        assert_eq!(lob_book_submit(book, 2, 2, 101.0, 1, &mut n, &mut vol), LobStatus::Ok);
        assert_eq!((n, vol), (1, 2));
        let (mut bid, mut ask) = (0.0, 0.0);
        assert_eq!(lob_book_best_quotes(book, &mut bid, &mut ask), LobStatus::Ok);
        assert!(bid.is_nan());
        assert_eq!(ask, 100.5);
        assert_eq!(lob_book_order_count(book), 1);
        assert_eq!(lob_book_submit(book, 1, 0, 100.0, 2, ptr::null_mut(), ptr::null_mut()), LobStatus::InvalidArgument);
        lob_book_free(book);
    }
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        assert_eq!(lob_book_new(0.1, ptr::null_mut()), LobStatus::NullPointer);
        assert_eq!(lob_book_submit(ptr::null_mut(), 0, 1, 1.0, 0, ptr::null_mut(), ptr::null_mut()), LobStatus::NullPointer);
        assert_eq!(lob_book_order_count(ptr::null()), 0);
        lob_book_free(ptr::null_mut());
        lob_policy_free(ptr::null_mut());
        let mut out = 0.0;
        assert_eq!(lob_excess_kurtosis(ptr::null(), 5, &mut out), LobStatus::NullPointer);
        let mut book = ptr::null_mut();
        assert_eq!(lob_book_new(0.0, &mut book), LobStatus::InvalidArgument);
        assert!(book.is_null());
    }
}

#[test]
fn statistics_match_the_library() {
    let xs: Vec<f64> = (1..=200).map(|i| 1.0 / (i as f64 / 201.0).powf(1.0 / 3.0)).collect();
    unsafe {
        let mut k = 0.0;
        assert_eq!(lob_excess_kurtosis(xs.as_ptr(), xs.len(), &mut k), LobStatus::Ok);
        assert_eq!(k, lobmarl::stylized::excess_kurtosis(&xs).unwrap());
        let mut h = 0.0;
        assert_eq!(lob_hill_tail_exponent(xs.as_ptr(), xs.len(), 10, &mut h), LobStatus::Ok);
        assert_eq!(h, lobmarl::stylized::hill_tail_exponent(&xs, 10).unwrap());
        assert_eq!(lob_hill_tail_exponent(xs.as_ptr(), xs.len(), 500, &mut h), LobStatus::InvalidArgument);
    }
}

#[test]
fn ot_distance_of_shifted_line() {
    // equal-size 1-D clouds couple in sorted order
    let a = [0.0, 1.0, 2.0];
    let b = [2.5, 0.5, 1.5];
    let mut d = f64::NAN;
    unsafe {
        assert_eq!(lob_ot_distance(a.as_ptr(), 3, b.as_ptr(), 3, 1, &mut d), LobStatus::Ok);
        assert!((d - 0.25).abs() < 1e-12);
        assert_eq!(lob_ot_distance(a.as_ptr(), 0, b.as_ptr(), 3, 1, &mut d), LobStatus::InsufficientData);
        assert_eq!(lob_ot_distance(a.as_ptr(), 3, b.as_ptr(), 3, 0, &mut d), LobStatus::InvalidArgument);
    }
}

#[test]
fn policy_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.bin");
    let ckpt = Checkpoint { params: init_params(4, 9), normalizer: ObsNormalizer::default(), config_hash: "x".into() };
    ckpt.save(&path).unwrap();
    let cpath = std::ffi::CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(lob_policy_load(cpath.as_ptr(), 1, &mut p), LobStatus::Ok);
        assert_eq!(lob_policy_hidden_width(p), 4);
        let obs = [0.1; 11];
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        assert_eq!(lob_policy_act(p, obs.as_ptr(), true, a.as_mut_ptr()), LobStatus::Ok);
        assert_eq!(lob_policy_act(p, obs.as_ptr(), true, b.as_mut_ptr()), LobStatus::Ok);
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.abs() <= 1.0));
        let bad = [f64::NAN; 11];
        assert_eq!(lob_policy_act(p, bad.as_ptr(), false, a.as_mut_ptr()), LobStatus::InvalidArgument);
        lob_policy_free(p);

        let missing = std::ffi::CString::new(dir.path().join("none.bin").to_str().unwrap()).unwrap();
        assert_eq!(lob_policy_load(missing.as_ptr(), 1, &mut p), LobStatus::Io);
        std::fs::write(&path, b"garbage").unwrap();
        assert_eq!(lob_policy_load(cpath.as_ptr(), 1, &mut p), LobStatus::Checkpoint);
    }
}

#[test]
fn status_messages_are_c_strings() {
    for s in [LobStatus::Ok, LobStatus::NullPointer, LobStatus::Checkpoint] {
        let m = unsafe { CStr::from_ptr(lob_status_message(s)) };
        assert!(!m.to_bytes().is_empty());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/lobmarl.h")).unwrap();
    for name in [
        "lob_book_new", "lob_book_free", "lob_book_submit", "lob_book_best_quotes", "lob_book_order_count",
        "lob_policy_load", "lob_policy_free", "lob_policy_hidden_width", "lob_policy_act", "lob_excess_kurtosis",
        "lob_hill_tail_exponent", "lob_ot_distance", "lob_status_message", "typedef struct LobBook LobBook",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, "#include \"lobmarl.h\"\nint main(void) { LobBook *b = 0; return lob_book_new(0.1, &b) == LOB_STATUS_OK ? 0 : 1; }\n").unwrap();
    let status = std::process::Command::new(cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
