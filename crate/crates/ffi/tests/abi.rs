use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use locus_ffi::*;

fn last_error() -> String {
    let p = locus_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn tree_round_trip() {
    unsafe {
        let mut t: *mut LocusTree = ptr::null_mut();
        assert_eq!(locus_tree_new(19, 3.0, 3.0, &mut t), LocusStatus::Ok);
        assert!(!t.is_null());
        let mut n = 0;
        assert_eq!(locus_tree_occupied_count(t, &mut n), LocusStatus::Ok);
        assert_eq!(n, 19);

        let mut root = LocusSlot::default();
        assert_eq!(locus_tree_slot(t, 1, &mut root), LocusStatus::Ok);
        assert_eq!((root.level, root.parent), (0, 0));
        assert!(root.occupied && root.heir != 0);

        let failed = [1u32, root.heir];
        let (mut flights, mut moves) = (0, 0);
        assert_eq!(
            locus_tree_fail(t, failed.as_ptr(), failed.len(), &mut flights, &mut moves),
            LocusStatus::Ok
        );
        assert!(flights >= 1);
        assert_eq!(locus_tree_occupied_count(t, &mut n), LocusStatus::Ok);
        assert_eq!(n, 17);
        let mut spread = 9;
        assert_eq!(locus_tree_height_spread(t, &mut spread), LocusStatus::Ok);
        assert!(spread <= 1);
        locus_tree_free(t);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut t: *mut LocusTree = ptr::null_mut();
        assert_eq!(
            locus_tree_new(5, 4.0, 3.0, &mut t),
            LocusStatus::InvalidArgument
        );
        assert!(t.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(locus_tree_new(5, 3.0, 3.0, ptr::null_mut()), LocusStatus::NullPointer);
        assert!(last_error().contains("null"));

        assert_eq!(locus_tree_new(2, 3.0, 3.0, &mut t), LocusStatus::Ok);
        let all = [1u32, 2];
        assert_eq!(
            locus_tree_fail(t, all.as_ptr(), 2, ptr::null_mut(), ptr::null_mut()),
            LocusStatus::AllFailed
        );
        let bad = [40u32];
        assert_eq!(
            locus_tree_fail(t, bad.as_ptr(), 1, ptr::null_mut(), ptr::null_mut()),
            LocusStatus::InvalidArgument
        );
        let mut slot = LocusSlot::default();
        assert_eq!(locus_tree_slot(t, 0, &mut slot), LocusStatus::InvalidArgument);
        locus_tree_free(t);
        locus_tree_free(ptr::null_mut());

        let mut cfg = locus_trial_config_default(5);
        cfg.algorithm = 99;
        let mut r = LocusTrialResult::default();
        assert_eq!(locus_run_trial(&cfg, 1, &mut r), LocusStatus::InvalidArgument);
        assert!(last_error().contains("99"));
        cfg.algorithm = LocusAlgorithm::Mobs as u32;
        cfg.p_generic = 2.0;
        assert_eq!(locus_run_trial(&cfg, 1, &mut r), LocusStatus::InvalidArgument);
    }
}

#[test]
fn plume_reading() {
    unsafe {
        let mut p: *mut LocusPlume = ptr::null_mut();
        assert_eq!(locus_plume_new(false, 5.0, -2.0, 0.3, &mut p), LocusStatus::Ok);
        let mut v = 0.0;
        assert_eq!(locus_plume_reading(p, 5.0, -2.0, &mut v), LocusStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(locus_plume_reading(p, 500.0, 500.0, &mut v), LocusStatus::Ok);
        assert!(v < 1e-6);
        locus_plume_free(p);
    }
}

#[test]
fn stepping_matches_a_whole_trial() {
    unsafe {
        let mut cfg = locus_trial_config_default(5);
        cfg.algorithm = LocusAlgorithm::Mobs as u32;
        cfg.tick_budget = 20_000;
        let mut whole = LocusTrialResult::default();
        assert_eq!(locus_run_trial(&cfg, 8, &mut whole), LocusStatus::Ok);

        let mut w: *mut LocusWorld = ptr::null_mut();
        assert_eq!(locus_world_new(&cfg, 8, &mut w), LocusStatus::Ok);
        let mut state = LocusTermination::Running;
        while state == LocusTermination::Running {
            assert_eq!(locus_world_step(w, &mut state), LocusStatus::Ok);
        }
        let mut stepped = LocusTrialResult::default();
        assert_eq!(locus_world_result(w, &mut stepped), LocusStatus::Ok);
        assert_eq!(stepped.ticks, whole.ticks);
        assert_eq!(stepped.maxflux_tick, whole.maxflux_tick);
        assert_eq!(stepped.termination, state as i32);
        let mut tick = 0;
        assert_eq!(locus_world_tick(w, &mut tick), LocusStatus::Ok);
        assert_eq!(tick, whole.ticks);

        let mut d = LocusDrone::default();
        assert_eq!(locus_world_drone(w, 4, &mut d), LocusStatus::Ok);
        assert_eq!(locus_world_drone(w, 5, &mut d), LocusStatus::InvalidArgument);
        let (mut x, mut y) = (f64::NAN, f64::NAN);
        assert_eq!(locus_world_peak(w, &mut x, &mut y), LocusStatus::Ok);
        assert!(x.hypot(y) <= 100.0);
        locus_world_free(w);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(locus_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(manifest_dir().join("include/locus.h")).unwrap();
    let src = std::fs::read_to_string(manifest_dir().join("src/lib.rs")).unwrap();
    let mut count = 0;
    for line in src.lines() {
        let Some(rest) = line.split("extern \"C\" fn ").nth(1) else {
            continue;
        };
        let name = rest.split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
        count += 1;
    }
    assert!(count >= 15);
    assert!(header.contains("typedef struct LocusTree LocusTree;"));
}

/// Directory holding the freshly built static library.
fn lib_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?.to_path_buf();
    dir.join("liblocus_ffi.a").is_file().then_some(dir)
}

fn compiler() -> Option<&'static str> {
    ["cc", "clang", "gcc"].into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "locus.h"

int main(void) {
    LocusTree *t = NULL;
    if (locus_tree_new(7, 3.0, 3.0, &t) != LOCUS_STATUS_OK) return 1;
    uint32_t n = 0;
    locus_tree_occupied_count(t, &n);
    uint32_t dead[] = {1};
    uint32_t flights = 0, moves = 0;
    if (locus_tree_fail(t, dead, 1, &flights, &moves) != LOCUS_STATUS_OK) return 2;
    uint32_t after = 0;
    locus_tree_occupied_count(t, &after);
    locus_tree_free(t);

    if (locus_tree_new(3, 5.0, 1.0, &t) != LOCUS_STATUS_INVALID_ARGUMENT) return 3;
    if (locus_last_error_message() == NULL) return 4;

    LocusTrialConfig cfg = locus_trial_config_default(3);
    cfg.algorithm = LOCUS_ALGORITHM_MOBS;
    cfg.tick_budget = 2000;
    LocusTrialResult r;
    if (locus_run_trial(&cfg, 3, &r) != LOCUS_STATUS_OK) return 5;
    printf("%u %u %u %llu\n", n, after, flights, (unsigned long long)r.ticks);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_header() {
    let (Some(cc), Some(lib)) = (compiler(), lib_dir()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = tmp.path().join("main");
    let include = manifest_dir().join("include");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(Path::new(&lib).join("liblocus_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(&fields[..3], ["7", "6", "1"]);
}
