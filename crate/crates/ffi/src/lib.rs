//! C ABI for the path-dependent PDE laboratory.
//!
//! Conventions: every fallible call returns a [`PpdeStatus`] and writes
//! results through out-pointers; `ppde_last_error` retrieves a
//! thread-local message for the most recent failure. Handles returned by
//! `*_new` functions are opaque and must be released with the matching
//! `*_free`. Paths are passed as row-major `(n_steps + 1) × m` sample
//! blocks starting at the origin. The lattice entry points run the scalar
//! (m = 1) control family.

use ppde_core::expectation::{optimize, OptMode};
use ppde_core::lattice::LatticeParams;
use ppde_core::pathspace::{
    backward_metric, hitting_index, sup_metric, Jet, Path, SpaceTimePoint,
};
use ppde_core::registry;
use ppde_core::tol;
use ppde_core::viscosity::{subjet_test, superjet_test};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

/// Status codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PpdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    GridMismatch = 3,
    BudgetExceeded = 4,
    Utf8 = 5,
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &ppde_core::PpdeError) -> PpdeStatus {
    use ppde_core::PpdeError::*;
    set_error(&err.to_string());
    match err {
        GridMismatch(_) => PpdeStatus::GridMismatch,
        BudgetExceeded(_) => PpdeStatus::BudgetExceeded,
        InvalidInput(_) | NonFinitePayoff { .. } | HorizonOverflow(_) | EmptySet(_) | Config(_) => {
            PpdeStatus::InvalidInput
        }
        Io(_) => PpdeStatus::Internal,
    }
}

/// Message attached to the most recent failure on this thread.
#[no_mangle]
pub extern "C" fn ppde_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ppde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque path handle.
pub struct PpdePath {
    inner: Path,
}

/// Build a path from `(n_steps + 1) × m` row-major samples; `values[0..m]`
/// must be the origin.
///
/// # Safety
/// `values` must point to `len * m` readable doubles and `out` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn ppde_path_new(
    values: *const f64,
    len: usize,
    m: usize,
    dt: f64,
    out: *mut *mut PpdePath,
) -> PpdeStatus {
    if values.is_null() || out.is_null() {
        set_error("null pointer");
        return PpdeStatus::NullPointer;
    }
    let raw = std::slice::from_raw_parts(values, len.saturating_mul(m));
    let rows: Vec<Vec<f64>> = raw.chunks(m.max(1)).map(|c| c.to_vec()).collect();
    match Path::new(dt, rows) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(PpdePath { inner: p }));
            PpdeStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Release a path handle.
///
/// # Safety
/// `path` must come from [`ppde_path_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ppde_path_free(path: *mut PpdePath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// First grid index where `s + max|ω| ≥ delta`, clipped at the horizon.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_hitting_index(
    path: *const PpdePath,
    delta: f64,
    out: *mut usize,
) -> PpdeStatus {
    if path.is_null() || out.is_null() {
        set_error("null pointer");
        return PpdeStatus::NullPointer;
    }
    if delta <= 0.0 {
        set_error("delta must be positive");
        return PpdeStatus::InvalidInput;
    }
    *out = hitting_index(delta, &(*path).inner);
    PpdeStatus::Ok
}

/// Quadratic test monomial `α·t + ⟨β, ω_t⟩ + ½⟨γ ω_t, ω_t⟩`.
///
/// # Safety
/// `beta` must hold `m` doubles and `gamma` `m*m` row-major doubles;
/// `path` must be a live handle of dimension `m`.
#[no_mangle]
pub unsafe extern "C" fn ppde_test_monomial(
    alpha: f64,
    beta: *const f64,
    gamma: *const f64,
    m: usize,
    t_index: usize,
    path: *const PpdePath,
    out: *mut f64,
) -> PpdeStatus {
    if beta.is_null() || gamma.is_null() || path.is_null() || out.is_null() {
        set_error("null pointer");
        return PpdeStatus::NullPointer;
    }
    let beta = std::slice::from_raw_parts(beta, m).to_vec();
    let gamma_data = std::slice::from_raw_parts(gamma, m * m).to_vec();
    let gamma = match ppde_core::pathspace::SymMat::new(m, gamma_data) {
        Ok(g) => g,
        Err(e) => return status_of(&e),
    };
    let jet = match Jet::new(alpha, beta, gamma) {
        Ok(j) => j,
        Err(e) => return status_of(&e),
    };
    let theta = match SpaceTimePoint::new(t_index, (*path).inner.clone()) {
        Ok(t) => t,
        Err(e) => return status_of(&e),
    };
    *out = ppde_core::pathspace::test_monomial(&jet, &theta);
    PpdeStatus::Ok
}

/// Uniform pseudo-metric between two stopped points.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_sup_metric(
    t_a: usize,
    path_a: *const PpdePath,
    t_b: usize,
    path_b: *const PpdePath,
    out: *mut f64,
) -> PpdeStatus {
    metric_impl(t_a, path_a, t_b, path_b, out, None)
}

/// Backward p-metric between two points.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_backward_metric(
    p: f64,
    t_a: usize,
    path_a: *const PpdePath,
    t_b: usize,
    path_b: *const PpdePath,
    out: *mut f64,
) -> PpdeStatus {
    metric_impl(t_a, path_a, t_b, path_b, out, Some(p))
}

unsafe fn metric_impl(
    t_a: usize,
    path_a: *const PpdePath,
    t_b: usize,
    path_b: *const PpdePath,
    out: *mut f64,
    p: Option<f64>,
) -> PpdeStatus {
    if path_a.is_null() || path_b.is_null() || out.is_null() {
        set_error("null pointer");
        return PpdeStatus::NullPointer;
    }
    let a = match SpaceTimePoint::new(t_a, (*path_a).inner.clone()) {
        Ok(x) => x,
        Err(e) => return status_of(&e),
    };
    let b = match SpaceTimePoint::new(t_b, (*path_b).inner.clone()) {
        Ok(x) => x,
        Err(e) => return status_of(&e),
    };
    let value = match p {
        None => sup_metric(&a, &b),
        Some(p) => backward_metric(p, &a, &b),
    };
    match value {
        Ok(v) => {
            *out = v;
            PpdeStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Optimization direction for [`ppde_expectation`].
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum PpdeMode {
    Sup = 0,
    Inf = 1,
    PureStop = 2,
}

/// Scalar lattice description for the expectation entry points.
#[repr(C)]
pub struct PpdeLattice {
    pub l_bound: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub drift: *const f64,
    pub drift_len: usize,
    pub var: *const f64,
    pub var_len: usize,
    /// node budget cap; 0 keeps the default
    pub max_nodes: u64,
}

unsafe fn lattice_from(c: *const PpdeLattice) -> Result<LatticeParams, PpdeStatus> {
    if c.is_null() {
        set_error("null lattice");
        return Err(PpdeStatus::NullPointer);
    }
    let c = &*c;
    if c.drift.is_null() || c.var.is_null() {
        set_error("null grid pointer");
        return Err(PpdeStatus::NullPointer);
    }
    let drift = std::slice::from_raw_parts(c.drift, c.drift_len);
    let var = std::slice::from_raw_parts(c.var, c.var_len);
    let mut lat = LatticeParams::scalar(c.l_bound, c.n_steps, c.dt, drift, var);
    if c.max_nodes > 0 {
        lat.budget.max_nodes = c.max_nodes;
    }
    lat.validate().map_err(|e| status_of(&e))?;
    Ok(lat)
}

/// Optimize a named payoff over the scalar lattice control family.
/// `delta < 0` disables the hitting-index clip. The policy digest (65
/// bytes including the terminator) identifies the argmax policy.
///
/// # Safety
/// `payoff_name` must be a NUL-terminated string; `lattice` must describe
/// live grid arrays; `out_value` must be writable; `out_digest`, when
/// non-null, must hold at least 65 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ppde_expectation(
    lattice: *const PpdeLattice,
    payoff_name: *const c_char,
    delta: f64,
    mode: PpdeMode,
    out_value: *mut f64,
    out_digest: *mut c_char,
) -> PpdeStatus {
    if payoff_name.is_null() || out_value.is_null() {
        set_error("null pointer");
        return PpdeStatus::NullPointer;
    }
    let lat = match lattice_from(lattice) {
        Ok(l) => l,
        Err(s) => return s,
    };
    let name = match CStr::from_ptr(payoff_name).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("payoff name is not valid UTF-8");
            return PpdeStatus::Utf8;
        }
    };
    let t_total = lat.n_steps as f64 * lat.dt;
    let clip = if delta < 0.0 { None } else { Some(delta) };
    let payoff = match registry::payoff_by_name(name, t_total, clip) {
        Ok(p) => p,
        Err(e) => return status_of(&e),
    };
    let run = match mode {
        PpdeMode::Sup => optimize(&payoff, &lat, OptMode::Sup, false),
        PpdeMode::Inf => optimize(&payoff, &lat, OptMode::Inf, false),
        PpdeMode::PureStop => ppde_core::expectation::pure_stopping_sup(&payoff, &lat),
    };
    match run {
        Ok(opt) => {
            *out_value = opt.value;
            if !out_digest.is_null() {
                let bytes = opt.policy_digest.as_bytes();
                for (i, b) in bytes.iter().take(64).enumerate() {
                    *out_digest.add(i) = *b as c_char;
                }
                *out_digest.add(bytes.len().min(64)) = 0;
            }
            PpdeStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Membership report of one jet test.
#[repr(C)]
pub struct PpdeJetReport {
    /// 1 when the jet belongs to the tested half-jet
    pub member: u8,
    pub value_gap: f64,
    pub delta_used: f64,
    pub tol_used: f64,
}

/// Test a scalar jet against the subjet (`superjet = 0`) or superjet
/// (`superjet = 1`) of a named functional at the given point.
///
/// # Safety
/// `u_name` must be NUL-terminated; `path` must be a live handle;
/// `out` must point to a writable report.
#[no_mangle]
pub unsafe extern "C" fn ppde_jet_check(
    lattice: *const PpdeLattice,
    u_name: *const c_char,
    t_index: usize,
    path: *const PpdePath,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    superjet: u8,
    out: *mut PpdeJetReport,
) -> PpdeStatus {
    if u_name.is_null() || path.is_null() || out.is_null() {
        set_error("null pointer");
        return PpdeStatus::NullPointer;
    }
    let lat = match lattice_from(lattice) {
        Ok(l) => l,
        Err(s) => return s,
    };
    let name = match CStr::from_ptr(u_name).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("functional name is not valid UTF-8");
            return PpdeStatus::Utf8;
        }
    };
    let t_total = lat.n_steps as f64 * lat.dt;
    let func = match registry::functional_by_name(name, t_total) {
        Ok(f) => f,
        Err(e) => return status_of(&e),
    };
    let theta = match SpaceTimePoint::new(t_index, (*path).inner.clone()) {
        Ok(t) => t,
        Err(e) => return status_of(&e),
    };
    let jet = Jet::scalar(alpha, beta, gamma);
    let tol_used = tol::jet_grid(lat.dt, jet.gamma.spectral_norm());
    let run = if superjet == 0 {
        subjet_test(&func, &theta, &jet, delta, tol_used, &lat)
    } else {
        superjet_test(&func, &theta, &jet, delta, tol_used, &lat)
    };
    match run {
        Ok(r) => {
            *out = PpdeJetReport {
                member: u8::from(r.member),
                value_gap: r.value_gap,
                delta_used: r.delta_used,
                tol_used: r.tol_used,
            };
            PpdeStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Resolvent-weighted norm of a lifted state `(x0, x1)`; `x1` holds
/// `x1_len` samples ending at s = 0 with step `dt` (scalar case).
///
/// # Safety
/// `x1` must hold `x1_len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_resolvent_norm(
    x0: f64,
    x1: *const f64,
    x1_len: usize,
    dt: f64,
    out: *mut f64,
) -> PpdeStatus {
    if x1.is_null() || out.is_null() {
        set_error("null pointer");
        return PpdeStatus::NullPointer;
    }
    let samples: Vec<Vec<f64>> =
        std::slice::from_raw_parts(x1, x1_len).iter().map(|&v| vec![v]).collect();
    match ppde_core::hilbert::HilbertPoint::new(vec![x0], samples, dt) {
        Ok(x) => {
            *out = ppde_core::hilbert::resolvent_norm(&x);
            PpdeStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_path(values: &[f64], dt: f64) -> *mut PpdePath {
        let mut out: *mut PpdePath = std::ptr::null_mut();
        let status = unsafe { ppde_path_new(values.as_ptr(), values.len(), 1, dt, &mut out) };
        assert_eq!(status, PpdeStatus::Ok);
        out
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(ppde_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn path_rejects_nonzero_start() {
        let values = [1.0, 2.0];
        let mut out: *mut PpdePath = std::ptr::null_mut();
        let status = unsafe { ppde_path_new(values.as_ptr(), 2, 1, 0.5, &mut out) };
        assert_eq!(status, PpdeStatus::InvalidInput);
        let msg = unsafe { CStr::from_ptr(ppde_last_error()) };
        assert!(msg.to_str().unwrap().contains("origin"));
    }

    #[test]
    fn hitting_index_through_the_abi() {
        let path = scalar_path(&[0.0; 11], 0.1);
        let mut idx = 0usize;
        let status = unsafe { ppde_hitting_index(path, 0.35, &mut idx) };
        assert_eq!(status, PpdeStatus::Ok);
        assert_eq!(idx, 4);
        unsafe { ppde_path_free(path) };
    }

    #[test]
    fn expectation_of_clipped_time() {
        let drift = [-1.0, 0.0, 1.0];
        let var = [0.0, 1.0];
        let lat = PpdeLattice {
            l_bound: 1.0,
            n_steps: 5,
            dt: 0.1,
            drift: drift.as_ptr(),
            drift_len: 3,
            var: var.as_ptr(),
            var_len: 2,
            max_nodes: 0,
        };
        let name = CString::new("time").unwrap();
        let mut value = 0.0f64;
        let mut digest = [0 as c_char; 65];
        let status = unsafe {
            ppde_expectation(&lat, name.as_ptr(), 0.35, PpdeMode::Sup, &mut value, digest.as_mut_ptr())
        };
        assert_eq!(status, PpdeStatus::Ok);
        assert!((value - 0.4).abs() < 1e-12, "value {value}");
        let digest_str = unsafe { CStr::from_ptr(digest.as_ptr()) };
        assert_eq!(digest_str.to_bytes().len(), 64);
    }

    #[test]
    fn unknown_payoff_sets_error() {
        let drift = [0.0];
        let var = [0.0];
        let lat = PpdeLattice {
            l_bound: 1.0,
            n_steps: 2,
            dt: 0.5,
            drift: drift.as_ptr(),
            drift_len: 1,
            var: var.as_ptr(),
            var_len: 1,
            max_nodes: 0,
        };
        let name = CString::new("nope").unwrap();
        let mut value = 0.0f64;
        let status = unsafe {
            ppde_expectation(&lat, name.as_ptr(), -1.0, PpdeMode::Sup, &mut value, std::ptr::null_mut())
        };
        assert_eq!(status, PpdeStatus::InvalidInput);
        let msg = unsafe { CStr::from_ptr(ppde_last_error()) };
        assert!(msg.to_str().unwrap().contains("unknown functional"));
    }

    #[test]
    fn jet_membership_through_the_abi() {
        let drift = [-1.0, 0.0, 1.0];
        let var = [0.0, 1.0];
        let lat = PpdeLattice {
            l_bound: 1.0,
            n_steps: 8,
            dt: 0.125,
            drift: drift.as_ptr(),
            drift_len: 3,
            var: var.as_ptr(),
            var_len: 2,
            max_nodes: 0,
        };
        let path = scalar_path(&[0.0; 9], 0.125);
        let name = CString::new("heat-ref").unwrap();
        let mut report = PpdeJetReport { member: 0, value_gap: 1.0, delta_used: 0.0, tol_used: 0.0 };
        let status = unsafe {
            ppde_jet_check(&lat, name.as_ptr(), 0, path, -1.0, 0.0, 2.0, 0.3, 0, &mut report)
        };
        assert_eq!(status, PpdeStatus::Ok);
        assert_eq!(report.member, 1);
        assert!(report.value_gap.abs() <= 1e-9);
        unsafe { ppde_path_free(path) };
    }

    #[test]
    fn resolvent_norm_of_pure_head() {
        let x1 = vec![0.0f64; 2049];
        let mut out = 0.0f64;
        let status =
            unsafe { ppde_resolvent_norm(1.0, x1.as_ptr(), x1.len(), 1.0 / 2048.0, &mut out) };
        assert_eq!(status, PpdeStatus::Ok);
        assert!((out - 1.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn metrics_through_the_abi() {
        let a = scalar_path(&[0.0, 0.0, 0.0, 0.0, 0.0], 0.25);
        let b = scalar_path(&[0.0, 0.25, 0.5, 0.75, 1.0], 0.25);
        let mut d = 0.0f64;
        let status = unsafe { ppde_backward_metric(1.0, 4, a, 4, b, &mut d) };
        assert_eq!(status, PpdeStatus::Ok);
        assert!((d - 1.625).abs() < 1e-12, "distance {d}");
        let mut s = 0.0f64;
        let status2 = unsafe { ppde_sup_metric(4, a, 4, b, &mut s) };
        assert_eq!(status2, PpdeStatus::Ok);
        assert!((s - 1.0).abs() < 1e-12);
        unsafe {
            ppde_path_free(a);
            ppde_path_free(b);
        }
    }

    #[test]
    fn null_pointers_are_rejected() {
        let mut out = 0usize;
        let status = unsafe { ppde_hitting_index(std::ptr::null(), 0.5, &mut out) };
        assert_eq!(status, PpdeStatus::NullPointer);
    }
}
