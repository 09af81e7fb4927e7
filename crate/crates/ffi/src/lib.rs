//! C interface to `hypofem`.
//!
//! Every function returns an [`HfStatus`]; on failure the message is kept
//! per thread and can be read with [`hf_last_error_message`]. Objects are
//! opaque handles released with their `_free` function. Panics are caught
//! at the boundary and reported as `HF_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hypofem::analysis::{coercivity_certificate, run_decay_experiment, DecayConfig, Setup};
use hypofem::assembly::AssembledSystem;
use hypofem::evolution::{EvolveConfig, InitialCondition};
use hypofem::hypo::{decay_rate_from, estimate_cpf, HypoMatrix, PenaltyConfig, PenaltyMode, Scheme};
use hypofem::hypo3d::{build_hypo3, check_b3_lower_bound, find_nu};
use hypofem::mesh::Rect;
use hypofem::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshError = 3,
    SolverError = 4,
    CertificateFailed = 5,
    IoError = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfScheme {
    Parabolic = 0,
    Elliptic = 1,
    Baseline = 2,
}

/// Mesh and discretisation parameters. `c_tau <= 0` selects the automatic penalty.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfSetup {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub nx: usize,
    pub ny: usize,
    pub perturb: f64,
    pub seed: u64,
    pub p: usize,
    pub scheme: HfScheme,
    pub alpha: f64,
    pub c_tau: f64,
    pub kappa: f64,
    pub lambda: f64,
}

/// Decay run parameters; `initial_hypoelliptic != 0` starts from the
/// hypoelliptic projection instead of the L2 projection.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfDecayParams {
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub fit_start: f64,
    pub bound_tol: f64,
    pub initial_hypoelliptic: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfDecaySummary {
    pub cpf: f64,
    pub c0: f64,
    pub certified_rate: f64,
    /// NaN when the trajectory is zero.
    pub fitted_rate: f64,
    /// First step breaking the pointwise bound, or -1.
    pub bound_violation_step: i64,
    /// First step where the energy grows, or -1.
    pub energy_increase_step: i64,
    pub steps: usize,
}

/// Assembled discrete system.
pub struct HfSystem {
    inner: AssembledSystem,
}

/// Recorded decay trajectory.
pub struct HfTrajectory {
    times: Vec<f64>,
    energy: Vec<f64>,
    l2: Vec<f64>,
    agrad: Vec<f64>,
    summary: HfDecaySummary,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HfStatus {
    match e {
        Error::InvalidParameter { .. } | Error::Config(_) => HfStatus::InvalidArgument,
        Error::MalformedMesh { .. }
        | Error::DuplicateElement { .. }
        | Error::NonConforming(_)
        | Error::InvertedTriangle { .. }
        | Error::MeshQuality(_)
        | Error::EmptyDirichletBoundary => HfStatus::MeshError,
        Error::Solver(_) | Error::NoConvergence { .. } => HfStatus::SolverError,
        Error::Certificate(_) | Error::Analysis(_) => HfStatus::CertificateFailed,
        Error::Io { .. } => HfStatus::IoError,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), HfStatusError>) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HfStatus::Ok,
        Ok(Err(HfStatusError(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            HfStatus::Panic
        }
    }
}

struct HfStatusError(HfStatus, String);

impl From<Error> for HfStatusError {
    fn from(e: Error) -> Self {
        HfStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> HfStatusError {
    HfStatusError(HfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> HfStatusError {
    HfStatusError(HfStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, HfStatusError> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), HfStatusError> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

fn to_setup(s: &HfSetup) -> Setup {
    Setup {
        rect: Rect { x_lo: s.x_lo, x_hi: s.x_hi, y_lo: s.y_lo, y_hi: s.y_hi },
        nx: s.nx,
        ny: s.ny,
        perturb: s.perturb,
        seed: s.seed,
        p: s.p,
        scheme: to_scheme(s.scheme),
        alpha: s.alpha,
        penalty: PenaltyConfig {
            c_tau: if s.c_tau > 0.0 { PenaltyMode::Fixed(s.c_tau) } else { PenaltyMode::Auto },
            kappa: s.kappa,
            lambda: s.lambda,
        },
    }
}

fn to_scheme(s: HfScheme) -> Scheme {
    match s {
        HfScheme::Parabolic => Scheme::Parabolic,
        HfScheme::Elliptic => Scheme::Elliptic,
        HfScheme::Baseline => Scheme::Baseline,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// without the terminator, 0 when there is no message.
#[no_mangle]
pub unsafe extern "C" fn hf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Fills `out` with the defaults: unit square, 16 x 16, p = 2, parabolic
/// scheme with alpha = 0.3506, automatic penalty.
#[no_mangle]
pub unsafe extern "C" fn hf_setup_default(out: *mut HfSetup) -> HfStatus {
    guard(|| {
        let d = Setup::default();
        let v = HfSetup {
            x_lo: d.rect.x_lo,
            x_hi: d.rect.x_hi,
            y_lo: d.rect.y_lo,
            y_hi: d.rect.y_hi,
            nx: d.nx,
            ny: d.ny,
            perturb: d.perturb,
            seed: d.seed,
            p: d.p,
            scheme: HfScheme::Parabolic,
            alpha: d.alpha,
            c_tau: 0.0,
            kappa: d.penalty.kappa,
            lambda: d.penalty.lambda,
        };
        write(out, v, "out")
    })
}

/// `lambda_min(B - A)` for the given scheme.
#[no_mangle]
pub unsafe extern "C" fn hf_lambda_min(alpha: f64, scheme: HfScheme, out: *mut f64) -> HfStatus {
    guard(|| {
        let h = HypoMatrix::new(alpha, to_scheme(scheme))?;
        write(out, h.lambda_min_b_minus_a, "out")
    })
}

/// `c0 = lambda_min / cpf` and the certified rate `min(1, c0)`.
#[no_mangle]
pub unsafe extern "C" fn hf_decay_rate(lambda_min: f64, cpf: f64, c0: *mut f64, rate: *mut f64) -> HfStatus {
    guard(|| {
        if c0.is_null() || rate.is_null() {
            return Err(null("c0/rate"));
        }
        let r = decay_rate_from(lambda_min, cpf)?;
        write(c0, r.c0, "c0")?;
        write(rate, r.rate, "rate")
    })
}

/// Assembles the system for `setup`. Release with [`hf_system_free`].
#[no_mangle]
pub unsafe extern "C" fn hf_system_new(setup: *const HfSetup, out: *mut *mut HfSystem) -> HfStatus {
    guard(|| {
        let s = deref(setup, "setup")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = to_setup(s).system()?;
        write(out, Box::into_raw(Box::new(HfSystem { inner })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn hf_system_free(system: *mut HfSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of free degrees of freedom.
#[no_mangle]
pub unsafe extern "C" fn hf_system_num_free(system: *const HfSystem, out: *mut usize) -> HfStatus {
    guard(|| write(out, deref(system, "system")?.inner.num_free(), "out"))
}

/// Discrete Poincare-Friedrichs constant of the system's space.
#[no_mangle]
pub unsafe extern "C" fn hf_system_cpf(system: *const HfSystem, out: *mut f64) -> HfStatus {
    guard(|| {
        let s = deref(system, "system")?;
        write(out, estimate_cpf(&s.inner.space)?, "out")
    })
}

/// Sampled coercivity certificate. Writes the minimum ratio and returns
/// `HF_STATUS_CERTIFICATE_FAILED` when it is below one half.
#[no_mangle]
pub unsafe extern "C" fn hf_system_coercivity(
    system: *const HfSystem,
    samples: usize,
    seed: u64,
    min_ratio: *mut f64,
) -> HfStatus {
    guard(|| {
        let s = deref(system, "system")?;
        if min_ratio.is_null() {
            return Err(null("min_ratio"));
        }
        let rep = coercivity_certificate(&s.inner, samples, seed)?;
        write(min_ratio, rep.min_ratio, "min_ratio")?;
        rep.check().map_err(Into::into)
    })
}

/// `y = K x` on the free DOFs; both arrays hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn hf_system_apply_stiffness(
    system: *const HfSystem,
    x: *const f64,
    y: *mut f64,
    len: usize,
) -> HfStatus {
    guard(|| {
        let s = deref(system, "system")?;
        if x.is_null() || y.is_null() {
            return Err(null("x/y"));
        }
        if len != s.inner.num_free() {
            return Err(invalid(format!("len {len} != free DOFs {}", s.inner.num_free())));
        }
        let xs = std::slice::from_raw_parts(x, len);
        let r = s.inner.k.mul_vec(xs);
        std::slice::from_raw_parts_mut(y, len).copy_from_slice(&r);
        Ok(())
    })
}

/// Decay run from the manufactured initial profile with `f = 0`.
/// Release with [`hf_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn hf_decay_run(
    setup: *const HfSetup,
    params: *const HfDecayParams,
    out: *mut *mut HfTrajectory,
) -> HfStatus {
    guard(|| {
        let s = deref(setup, "setup")?;
        let p = deref(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = DecayConfig {
            setup: to_setup(s),
            evolve: EvolveConfig {
                theta: p.theta,
                dt: p.dt,
                t_final: p.t_final,
                initial: if p.initial_hypoelliptic != 0 {
                    InitialCondition::HypoellipticProjection
                } else {
                    InitialCondition::L2Projection
                },
                keep_states: false,
            },
            fit_start: p.fit_start,
            bound_tol: p.bound_tol,
            ..DecayConfig::default()
        };
        let rep = run_decay_experiment(&cfg)?;
        let step = |v: Option<(usize, f64, f64)>| v.map_or(-1, |(n, _, _)| n as i64);
        let tr = rep.trajectory;
        let summary = HfDecaySummary {
            cpf: rep.cpf,
            c0: rep.c0,
            certified_rate: rep.certified_rate,
            fitted_rate: rep.fitted_rate.unwrap_or(f64::NAN),
            bound_violation_step: step(rep.bound_violation),
            energy_increase_step: step(rep.energy_increase),
            steps: tr.len(),
        };
        let h = HfTrajectory { times: tr.times, energy: tr.energy, l2: tr.l2, agrad: tr.agrad, summary };
        write(out, Box::into_raw(Box::new(h)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_free(t: *mut HfTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_summary(t: *const HfTrajectory, out: *mut HfDecaySummary) -> HfStatus {
    guard(|| write(out, deref(t, "trajectory")?.summary, "out"))
}

/// Copies the recorded series. Each non-null array must hold
/// `summary.steps` entries; `len` is checked against that.
#[no_mangle]
pub unsafe extern "C" fn hf_trajectory_copy(
    t: *const HfTrajectory,
    times: *mut f64,
    energy: *mut f64,
    l2: *mut f64,
    agrad: *mut f64,
    len: usize,
) -> HfStatus {
    guard(|| {
        let t = deref(t, "trajectory")?;
        if len < t.times.len() {
            return Err(HfStatusError(
                HfStatus::BufferTooSmall,
                format!("need {} entries, got {len}", t.times.len()),
            ));
        }
        for (dst, src) in [(times, &t.times), (energy, &t.energy), (l2, &t.l2), (agrad, &t.agrad)] {
            if !dst.is_null() {
                std::ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
            }
        }
        Ok(())
    })
}

/// Three-dimensional matrix certificate at one `alpha`: minimum
/// eigenvalue of `sym(B~_3) - B_3`, the balanced `nu` and `c3`.
#[no_mangle]
pub unsafe extern "C" fn hf_hypo3d_check(alpha: f64, min_eigenvalue: *mut f64, nu: *mut f64, c3: *mut f64) -> HfStatus {
    guard(|| {
        if min_eigenvalue.is_null() || nu.is_null() || c3.is_null() {
            return Err(null("output"));
        }
        let m = build_hypo3(alpha)?;
        let chk = check_b3_lower_bound(&m);
        write(min_eigenvalue, chk.min_eigenvalue, "min_eigenvalue")?;
        let s = find_nu(&m)?;
        write(nu, s.nu, "nu")?;
        write(c3, s.c3, "c3")?;
        if chk.passed {
            Ok(())
        } else {
            Err(HfStatusError(
                HfStatus::CertificateFailed,
                format!("sym(B~_3) - B_3 not PSD at alpha = {alpha}"),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn message() -> String {
        let mut buf = [0 as c_char; 256];
        let n = unsafe { hf_last_error_message(buf.as_mut_ptr(), buf.len()) };
        let s = unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
        assert_eq!(n, s.len());
        s
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), HfStatus::Panic);
        assert!(message().contains("boom"));
    }

    #[test]
    fn error_kinds_map_to_codes() {
        assert_eq!(status_of(&Error::Solver("x".into())), HfStatus::SolverError);
        assert_eq!(status_of(&Error::Certificate("x".into())), HfStatus::CertificateFailed);
        assert_eq!(status_of(&Error::EmptyDirichletBoundary), HfStatus::MeshError);
        assert_eq!(status_of(&Error::InvalidParameter { module: "m", param: "p", reason: "r".into() }), HfStatus::InvalidArgument);
    }
}
