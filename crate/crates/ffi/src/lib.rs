//! C ABI over `algoselect`.
//!
//! Every fallible function returns an [`AlgoselectStatus`]. On failure the
//! message is kept per thread and read with [`algoselect_last_error`].
//! Objects are opaque handles created by `*_new` functions and released with
//! the matching `*_free`. Strings returned through `char **` out-parameters
//! are owned by the caller and released with [`algoselect_string_free`].
//!
//! Handles are not synchronized; a handle must not be used from two threads
//! at once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use algoselect::comb::{self, CombParameter, Endpoint, FeatureVector, SeedingFunction};
use algoselect::harness::{self, AnalysisConfig, AnalysisReport};
use algoselect::online::sim::{simulate, SimulationConfig};
use algoselect::online::{FplState, LossVector, TreeRoute, UcbTree};
use algoselect::rng::{self, SeededRng};
use algoselect::threshold;
use algoselect::tree::{RoutingMode, TreeCombNode};
use algoselect::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoselectStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Data = 4,
    Io = 5,
    Json = 6,
    Panic = 7,
}

/// Branch taken by a two-path comb.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoselectEndpoint {
    Systematic = 0,
    Random = 1,
}

/// Seeded random source.
pub struct AlgoselectRng(SeededRng);

/// Logistic seeding function.
pub struct AlgoselectSeeding(SeedingFunction);

/// Tree comb network.
pub struct AlgoselectTree(TreeCombNode);

/// Follow-the-perturbed-leader state.
pub struct AlgoselectFpl(FplState);

/// Tree of two-armed UCB1 gates.
pub struct AlgoselectUcbTree(UcbTree);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<Vec<u8>>) {
    let mut bytes = message.into();
    bytes.retain(|&b| b != 0);
    let message = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

struct Failure(AlgoselectStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) => AlgoselectStatus::InvalidArgument,
            Error::Data { .. } => AlgoselectStatus::Data,
            Error::Io(_) => AlgoselectStatus::Io,
            Error::Json(_) => AlgoselectStatus::Json,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(AlgoselectStatus::Json, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(AlgoselectStatus::NullPointer, format!("{name} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(AlgoselectStatus::InvalidArgument, message.into())
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AlgoselectStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AlgoselectStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("panic: {message}"));
            AlgoselectStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn as_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn as_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AlgoselectStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    put(out, Box::into_raw(Box::new(value)), "out")
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let s = CString::new(s).map_err(|_| invalid("string contains a NUL byte"))?;
    put(out, s.into_raw(), "out")
}

unsafe fn features(phi: *const f64, dim: usize) -> Result<FeatureVector, Failure> {
    Ok(FeatureVector::new(as_slice(phi, dim, "phi")?.to_vec())?)
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn algoselect_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn algoselect_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_rng_new(seed: u64, out: *mut *mut AlgoselectRng) -> AlgoselectStatus {
    guard(|| put_handle(out, AlgoselectRng(rng::seeded(seed))))
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_rng_free(rng: *mut AlgoselectRng) {
    free_handle(rng)
}

/// Stable seed derived from `base` and `count` NUL-terminated labels.
#[no_mangle]
pub unsafe extern "C" fn algoselect_derive_seed(
    base: u64,
    labels: *const *const c_char,
    count: usize,
    out: *mut u64,
) -> AlgoselectStatus {
    guard(|| {
        let labels = as_slice(labels, count, "labels")?
            .iter()
            .map(|&l| as_str(l, "label"))
            .collect::<Result<Vec<_>, _>>()?;
        put(out, rng::derive_seed(base, &labels), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_seeding_new(
    weights: *const f64,
    dim: usize,
    bias: f64,
    out: *mut *mut AlgoselectSeeding,
) -> AlgoselectStatus {
    guard(|| {
        let w = as_slice(weights, dim, "weights")?.to_vec();
        put_handle(out, AlgoselectSeeding(SeedingFunction::new(w, bias)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_seeding_free(s: *mut AlgoselectSeeding) {
    free_handle(s)
}

/// Comb parameter `t` in (0, 1) for the feature vector `phi`.
#[no_mangle]
pub unsafe extern "C" fn algoselect_seeding_seed(
    s: *const AlgoselectSeeding,
    phi: *const f64,
    dim: usize,
    out_t: *mut f64,
) -> AlgoselectStatus {
    guard(|| {
        let s = as_ref(s, "seeding")?;
        let t = s.0.seed(&features(phi, dim)?)?;
        put(out_t, t.value(), "out_t")
    })
}

/// Picks the random endpoint with probability `t`.
#[no_mangle]
pub unsafe extern "C" fn algoselect_comb_select(
    t: f64,
    rng: *mut AlgoselectRng,
    out: *mut AlgoselectEndpoint,
) -> AlgoselectStatus {
    guard(|| {
        let t = CombParameter::new(t)?;
        let rng = as_mut(rng, "rng")?;
        let endpoint = match comb::comb_select(t, &mut rng.0) {
            Endpoint::Systematic => AlgoselectEndpoint::Systematic,
            Endpoint::Random => AlgoselectEndpoint::Random,
        };
        put(out, endpoint, "out")
    })
}

/// Writes the softmax of `count` scores into `out_probabilities`.
#[no_mangle]
pub unsafe extern "C" fn algoselect_n_path(
    scores: *const f64,
    count: usize,
    out_probabilities: *mut f64,
) -> AlgoselectStatus {
    guard(|| {
        let p = comb::n_path_distribution(as_slice(scores, count, "scores")?)?;
        if out_probabilities.is_null() {
            return Err(null("out_probabilities"));
        }
        ptr::copy_nonoverlapping(p.probabilities().as_ptr(), out_probabilities, count);
        Ok(())
    })
}

/// `ln(t_sys) - ln(t_ran)`.
#[no_mangle]
pub unsafe extern "C" fn algoselect_log_ratio(t_sys: f64, t_ran: f64, out: *mut f64) -> AlgoselectStatus {
    guard(|| put(out, threshold::log_ratio(t_sys, t_ran)?, "out"))
}

/// Empirical median threshold of `count` log-ratios.
#[no_mangle]
pub unsafe extern "C" fn algoselect_threshold_median(
    values: *const f64,
    count: usize,
    out: *mut f64,
) -> AlgoselectStatus {
    guard(|| {
        let estimate = threshold::median_estimate(as_slice(values, count, "values")?)?;
        put(out, estimate.theta_k, "out")
    })
}

/// Builds a tree from its JSON form: `{"leaf": id}` or
/// `{"gate": {"weights": [...], "bias": b}, "left": ..., "right": ...}`.
#[no_mangle]
pub unsafe extern "C" fn algoselect_tree_from_json(
    json: *const c_char,
    out: *mut *mut AlgoselectTree,
) -> AlgoselectStatus {
    guard(|| {
        let tree: TreeCombNode = serde_json::from_str(as_str(json, "json")?)?;
        put_handle(out, AlgoselectTree(tree))
    })
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_tree_free(tree: *mut AlgoselectTree) {
    free_handle(tree)
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_tree_leaf_count(tree: *const AlgoselectTree, out: *mut usize) -> AlgoselectStatus {
    guard(|| put(out, as_ref(tree, "tree")?.0.leaf_count(), "out"))
}

/// Routes `phi` to a leaf and returns its id. With `deterministic`, gates
/// branch right iff `t > 0.5` and `rng` may be null.
#[no_mangle]
pub unsafe extern "C" fn algoselect_tree_route(
    tree: *const AlgoselectTree,
    phi: *const f64,
    dim: usize,
    deterministic: bool,
    rng: *mut AlgoselectRng,
    out_leaf: *mut *mut c_char,
) -> AlgoselectStatus {
    guard(|| {
        let tree = as_ref(tree, "tree")?;
        let phi = features(phi, dim)?;
        let leaf = if deterministic {
            tree.0
                .route_with(&phi, RoutingMode::Deterministic, &mut rng::seeded(0))?
        } else {
            tree.0.route(&phi, &mut as_mut(rng, "rng")?.0)?
        };
        put_string(out_leaf, leaf.as_str().to_string())
    })
}

/// Like [`algoselect_tree_route`], returning the execution trace as JSON.
#[no_mangle]
pub unsafe extern "C" fn algoselect_tree_trace(
    tree: *const AlgoselectTree,
    phi: *const f64,
    dim: usize,
    rng: *mut AlgoselectRng,
    out_json: *mut *mut c_char,
) -> AlgoselectStatus {
    guard(|| {
        let tree = as_ref(tree, "tree")?;
        let trace = tree.0.trace(&features(phi, dim)?, &mut as_mut(rng, "rng")?.0)?;
        put_string(out_json, serde_json::to_string(&trace)?)
    })
}

/// FPL over `k` arms with perturbation scale `scale`.
#[no_mangle]
pub unsafe extern "C" fn algoselect_fpl_new(k: usize, scale: f64, out: *mut *mut AlgoselectFpl) -> AlgoselectStatus {
    guard(|| put_handle(out, AlgoselectFpl(FplState::with_scale(k, scale)?)))
}

/// FPL over `k` arms with the scale tuned to `horizon` rounds.
#[no_mangle]
pub unsafe extern "C" fn algoselect_fpl_new_tuned(
    k: usize,
    horizon: u64,
    out: *mut *mut AlgoselectFpl,
) -> AlgoselectStatus {
    guard(|| put_handle(out, AlgoselectFpl(FplState::tuned(k, horizon)?)))
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_fpl_free(fpl: *mut AlgoselectFpl) {
    free_handle(fpl)
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_fpl_choose(
    fpl: *const AlgoselectFpl,
    rng: *mut AlgoselectRng,
    out_arm: *mut usize,
) -> AlgoselectStatus {
    guard(|| {
        let fpl = as_ref(fpl, "fpl")?;
        put(out_arm, fpl.0.choose(&mut as_mut(rng, "rng")?.0), "out_arm")
    })
}

/// Adds one round of `k` losses, each in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn algoselect_fpl_update(
    fpl: *mut AlgoselectFpl,
    losses: *const f64,
    k: usize,
) -> AlgoselectStatus {
    guard(|| {
        let fpl = as_mut(fpl, "fpl")?;
        if k != fpl.0.k() {
            return Err(invalid(format!("expected {} losses, got {k}", fpl.0.k())));
        }
        let losses = LossVector::new(as_slice(losses, k, "losses")?.to_vec())?;
        Ok(fpl.0.update(&losses)?)
    })
}

/// Writes the `k` probabilities of choosing each arm next round.
#[no_mangle]
pub unsafe extern "C" fn algoselect_fpl_probabilities(
    fpl: *const AlgoselectFpl,
    out: *mut f64,
    k: usize,
) -> AlgoselectStatus {
    guard(|| {
        let fpl = as_ref(fpl, "fpl")?;
        if k != fpl.0.k() {
            return Err(invalid(format!("buffer holds {k} values, need {}", fpl.0.k())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(fpl.0.choice_probabilities().as_ptr(), out, k);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_ucb_tree_new(depth: u32, out: *mut *mut AlgoselectUcbTree) -> AlgoselectStatus {
    guard(|| put_handle(out, AlgoselectUcbTree(UcbTree::new(depth)?)))
}

#[no_mangle]
pub unsafe extern "C" fn algoselect_ucb_tree_free(tree: *mut AlgoselectUcbTree) {
    free_handle(tree)
}

/// Leaf the gates would route to now, numbered left to right.
#[no_mangle]
pub unsafe extern "C" fn algoselect_ucb_tree_select(
    tree: *const AlgoselectUcbTree,
    out_leaf: *mut usize,
) -> AlgoselectStatus {
    guard(|| put(out_leaf, as_ref(tree, "tree")?.0.select().leaf, "out_leaf"))
}

/// Credits `loss` in [0, 1] to every gate on the path to `leaf`.
#[no_mangle]
pub unsafe extern "C" fn algoselect_ucb_tree_update(
    tree: *mut AlgoselectUcbTree,
    leaf: usize,
    loss: f64,
) -> AlgoselectStatus {
    guard(|| {
        let tree = as_mut(tree, "tree")?;
        if leaf >= tree.0.leaf_count() {
            return Err(invalid(format!("leaf {leaf} out of range")));
        }
        let depth = tree.0.depth();
        let mut node = 0;
        let mut path = Vec::with_capacity(depth as usize);
        for level in (0..depth).rev() {
            let arm = (leaf >> level) & 1;
            path.push((node, arm));
            node = 2 * node + 1 + arm;
        }
        Ok(tree.0.update(&TreeRoute { leaf, path }, loss)?)
    })
}

/// Runs a simulation from its JSON config and returns the summary as JSON.
#[no_mangle]
pub unsafe extern "C" fn algoselect_simulate_json(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> AlgoselectStatus {
    guard(|| {
        let config: SimulationConfig = serde_json::from_str(as_str(config_json, "config_json")?)?;
        let output = simulate(&config)?;
        put_string(out_json, serde_json::to_string(&output.summary)?)
    })
}

/// Analyzes a runs JSONL file with default settings and returns the report
/// as JSON.
#[no_mangle]
pub unsafe extern "C" fn algoselect_analyze_jsonl(path: *const c_char, out_json: *mut *mut c_char) -> AlgoselectStatus {
    guard(|| {
        let records = harness::read_jsonl(Path::new(as_str(path, "path")?))?;
        let report = AnalysisReport::build(&records, &AnalysisConfig::default())?;
        put_string(out_json, serde_json::to_string_pretty(&report)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_out_pointer_is_reported() {
        let status = unsafe { algoselect_rng_new(1, ptr::null_mut()) };
        assert_eq!(status, AlgoselectStatus::NullPointer);
        let message = unsafe { CStr::from_ptr(algoselect_last_error()) };
        assert_eq!(message.to_str().unwrap(), "out is null");
    }

    #[test]
    fn error_messages_drop_interior_nul() {
        set_error("a\0b");
        let message = unsafe { CStr::from_ptr(algoselect_last_error()) };
        assert_eq!(message.to_bytes(), b"ab");
    }

    #[test]
    fn panics_become_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, AlgoselectStatus::Panic);
        let message = unsafe { CStr::from_ptr(algoselect_last_error()) };
        assert_eq!(message.to_str().unwrap(), "panic: boom");
    }

    #[test]
    fn empty_slices_accept_null() {
        let s = unsafe { as_slice::<f64>(ptr::null(), 0, "x") }.ok().unwrap();
        assert!(s.is_empty());
        assert!(unsafe { as_slice::<f64>(ptr::null(), 1, "x") }.is_err());
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { CStr::from_ptr(algoselect_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
