use std::ffi::{c_char, CStr, CString};
use std::ptr;

use algoselect_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(algoselect_last_error()) }
        .to_string_lossy()
        .into_owned()
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    algoselect_string_free(p);
    s
}

#[test]
fn seeding_and_comb_select() {
    unsafe {
        let weights = [1.0, -2.0];
        let mut s = ptr::null_mut();
        assert_eq!(
            algoselect_seeding_new(weights.as_ptr(), 2, 0.0, &mut s),
            AlgoselectStatus::Ok
        );
        let phi = [0.5, 0.25];
        let mut t = 0.0;
        assert_eq!(
            algoselect_seeding_seed(s, phi.as_ptr(), 2, &mut t),
            AlgoselectStatus::Ok
        );
        assert!((t - 0.5).abs() < 1e-15, "{t}");

        let wrong = [1.0];
        assert_eq!(
            algoselect_seeding_seed(s, wrong.as_ptr(), 1, &mut t),
            AlgoselectStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());
        algoselect_seeding_free(s);

        let mut rng = ptr::null_mut();
        assert_eq!(algoselect_rng_new(7, &mut rng), AlgoselectStatus::Ok);
        let mut random = 0;
        for _ in 0..2000 {
            let mut e = AlgoselectEndpoint::Systematic;
            assert_eq!(algoselect_comb_select(0.25, rng, &mut e), AlgoselectStatus::Ok);
            random += (e == AlgoselectEndpoint::Random) as usize;
        }
        assert!((random as f64 / 2000.0 - 0.25).abs() < 0.04, "{random}");
        let mut e = AlgoselectEndpoint::Systematic;
        assert_eq!(
            algoselect_comb_select(1.5, rng, &mut e),
            AlgoselectStatus::InvalidArgument
        );
        algoselect_rng_free(rng);
    }
}

#[test]
fn n_path_matches_sigmoid_for_two_paths() {
    let scores = [0.0, 1.3];
    let mut p = [0.0; 2];
    assert_eq!(
        unsafe { algoselect_n_path(scores.as_ptr(), 2, p.as_mut_ptr()) },
        AlgoselectStatus::Ok
    );
    assert!((p[1] - 1.0 / (1.0 + (-1.3f64).exp())).abs() < 1e-12);
    assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut arm = 0;
        assert_eq!(
            algoselect_fpl_choose(ptr::null(), ptr::null_mut(), &mut arm),
            AlgoselectStatus::NullPointer
        );
        assert_eq!(last_error(), "fpl is null");
        algoselect_fpl_free(ptr::null_mut());
        algoselect_tree_free(ptr::null_mut());
        algoselect_string_free(ptr::null_mut());
    }
}

#[test]
fn tree_route_and_trace_agree() {
    let json = CString::new(
        r#"{"gate": {"weights": [1.0], "bias": 0.0},
            "left": {"leaf": "a"},
            "right": {"gate": {"weights": [-1.0], "bias": 0.0}, "left": {"leaf": "b"}, "right": {"leaf": "c"}}}"#,
    )
    .unwrap();
    unsafe {
        let mut tree = ptr::null_mut();
        assert_eq!(
            algoselect_tree_from_json(json.as_ptr(), &mut tree),
            AlgoselectStatus::Ok
        );
        let mut leaves = 0;
        assert_eq!(algoselect_tree_leaf_count(tree, &mut leaves), AlgoselectStatus::Ok);
        assert_eq!(leaves, 3);

        let phi = [2.0];
        let mut leaf = ptr::null_mut();
        assert_eq!(
            algoselect_tree_route(tree, phi.as_ptr(), 1, true, ptr::null_mut(), &mut leaf),
            AlgoselectStatus::Ok
        );
        assert_eq!(take_string(leaf), "b");

        for seed in 0..20 {
            let (mut r1, mut r2) = (ptr::null_mut(), ptr::null_mut());
            algoselect_rng_new(seed, &mut r1);
            algoselect_rng_new(seed, &mut r2);
            let mut leaf = ptr::null_mut();
            let mut trace = ptr::null_mut();
            assert_eq!(
                algoselect_tree_route(tree, phi.as_ptr(), 1, false, r1, &mut leaf),
                AlgoselectStatus::Ok
            );
            assert_eq!(
                algoselect_tree_trace(tree, phi.as_ptr(), 1, r2, &mut trace),
                AlgoselectStatus::Ok
            );
            let trace: serde_json::Value = serde_json::from_str(&take_string(trace)).unwrap();
            assert_eq!(trace["terminal"], take_string(leaf).as_str());
            algoselect_rng_free(r1);
            algoselect_rng_free(r2);
        }
        algoselect_tree_free(tree);

        let bad = CString::new("{\"gate\": 1}").unwrap();
        let mut tree = ptr::null_mut();
        assert_eq!(
            algoselect_tree_from_json(bad.as_ptr(), &mut tree),
            AlgoselectStatus::Json
        );
        assert!(tree.is_null());
    }
}

#[test]
fn fpl_follows_the_better_arm() {
    unsafe {
        let mut fpl = ptr::null_mut();
        assert_eq!(algoselect_fpl_new_tuned(3, 500, &mut fpl), AlgoselectStatus::Ok);
        let losses = [1.0, 0.0, 1.0];
        for _ in 0..200 {
            assert_eq!(algoselect_fpl_update(fpl, losses.as_ptr(), 3), AlgoselectStatus::Ok);
        }
        let mut p = [0.0; 3];
        assert_eq!(
            algoselect_fpl_probabilities(fpl, p.as_mut_ptr(), 3),
            AlgoselectStatus::Ok
        );
        assert!(p[1] > 0.99, "{p:?}");
        let mut rng = ptr::null_mut();
        algoselect_rng_new(1, &mut rng);
        let mut arm = 9;
        assert_eq!(algoselect_fpl_choose(fpl, rng, &mut arm), AlgoselectStatus::Ok);
        assert!(arm < 3);
        assert_eq!(
            algoselect_fpl_update(fpl, losses.as_ptr(), 2),
            AlgoselectStatus::InvalidArgument
        );
        let out_of_range = [1.0, 2.0, 0.0];
        assert_eq!(
            algoselect_fpl_update(fpl, out_of_range.as_ptr(), 3),
            AlgoselectStatus::InvalidArgument
        );
        algoselect_rng_free(rng);
        algoselect_fpl_free(fpl);
    }
}

#[test]
fn ucb_tree_finds_the_zero_loss_leaf() {
    unsafe {
        let mut tree = ptr::null_mut();
        assert_eq!(algoselect_ucb_tree_new(2, &mut tree), AlgoselectStatus::Ok);
        let mut hits = 0;
        for _ in 0..2000 {
            let mut leaf = 0;
            assert_eq!(algoselect_ucb_tree_select(tree, &mut leaf), AlgoselectStatus::Ok);
            let loss = if leaf == 2 { 0.0 } else { 1.0 };
            hits += (leaf == 2) as usize;
            assert_eq!(algoselect_ucb_tree_update(tree, leaf, loss), AlgoselectStatus::Ok);
        }
        assert!(hits > 1800, "{hits}");
        assert_eq!(
            algoselect_ucb_tree_update(tree, 4, 0.0),
            AlgoselectStatus::InvalidArgument
        );
        algoselect_ucb_tree_free(tree);
    }
}

#[test]
fn threshold_helpers() {
    unsafe {
        let mut r = 0.0;
        assert_eq!(algoselect_log_ratio(0.002, 0.008, &mut r), AlgoselectStatus::Ok);
        assert!((r - 0.25f64.ln()).abs() < 1e-12);
        assert_eq!(
            algoselect_log_ratio(0.0, 1.0, &mut r),
            AlgoselectStatus::InvalidArgument
        );
        let values = [3.0, -1.0, 2.0, 0.0];
        let mut m = 0.0;
        assert_eq!(
            algoselect_threshold_median(values.as_ptr(), 4, &mut m),
            AlgoselectStatus::Ok
        );
        assert_eq!(m, 1.0);
        assert_eq!(
            algoselect_threshold_median(ptr::null(), 0, &mut m),
            AlgoselectStatus::InvalidArgument
        );
    }
}

#[test]
fn derive_seed_matches_library() {
    let labels = [CString::new("sorting").unwrap(), CString::new("3").unwrap()];
    let ptrs: Vec<*const c_char> = labels.iter().map(|l| l.as_ptr()).collect();
    let mut seed = 0;
    assert_eq!(
        unsafe { algoselect_derive_seed(5, ptrs.as_ptr(), 2, &mut seed) },
        AlgoselectStatus::Ok
    );
    assert_eq!(seed, algoselect::rng::derive_seed(5, &["sorting", "3"]));
}

#[test]
fn simulate_and_analyze_return_json() {
    unsafe {
        let config = CString::new(r#"{"simulation": "fpl", "horizon": 300, "K": 4, "seeds": 3}"#).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(
            algoselect_simulate_json(config.as_ptr(), &mut out),
            AlgoselectStatus::Ok
        );
        let summary: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(summary["runs"].as_array().unwrap().len(), 3);

        let unknown = CString::new(r#"{"simulation": "fpl", "horizon": 10, "bogus": 1}"#).unwrap();
        assert_eq!(
            algoselect_simulate_json(unknown.as_ptr(), &mut out),
            AlgoselectStatus::Json
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        let config = algoselect::harness::MatrixConfig {
            problems: vec![
                algoselect::suite::ProblemId::Sorting,
                algoselect::suite::ProblemId::Knapsack,
            ],
            repetitions: 3,
            ..Default::default()
        };
        let records = algoselect::harness::run_matrix(&config, |_| Ok(())).unwrap();
        algoselect::harness::write_jsonl(&records, std::fs::File::create(&path).unwrap()).unwrap();
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(
            algoselect_analyze_jsonl(c_path.as_ptr(), &mut out),
            AlgoselectStatus::Ok
        );
        let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(report["total_observations"], 12);

        std::fs::write(&path, "not json\n").unwrap();
        assert_eq!(
            algoselect_analyze_jsonl(c_path.as_ptr(), &mut out),
            AlgoselectStatus::Data
        );
        assert!(last_error().contains(":1:"), "{}", last_error());
        let missing = CString::new(dir.path().join("none.jsonl").to_str().unwrap()).unwrap();
        assert_eq!(
            algoselect_analyze_jsonl(missing.as_ptr(), &mut out),
            AlgoselectStatus::Io
        );
    }
}
