//! C ABI over `delisi-core`.
//!
//! Handles are opaque heap objects created by a `*_new` or computing
//! function and released with the matching `*_free`. Every function returns
//! a [`DelisiStatus`]; on failure [`delisi_last_error`] yields the message
//! for the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use delisi::continuation::{self, Branch, ContinuationOptions, PlaneWindow, Tag};
use delisi::equilibria::{self, EquilibriumKind};
use delisi::{loci, lyapunov, Error, ModelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelisiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    Domain = 3,
    Convergence = 4,
    Precondition = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelisiEquilibriumKind {
    TrivialSaddle = 0,
    Saddle = 1,
    StableNode = 2,
    UnstableNode = 3,
    StableFocus = 4,
    UnstableFocus = 5,
    CenterCandidate = 6,
    Degenerate = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelisiTag {
    SaddleNode = 0,
    Hopf = 1,
    TakensBogdanov = 2,
    Bautin = 3,
    Lpc = 4,
    HomApprox = 5,
}

/// One equilibrium as returned by [`delisi_equilibria`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelisiEquilibrium {
    pub x: f64,
    pub y: f64,
    pub trace: f64,
    pub det: f64,
    pub kind: DelisiEquilibriumKind,
}

/// A point of a bifurcation locus.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelisiLocusPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub x0: f64,
    pub y0: f64,
}

/// One accepted point of a branch.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelisiBranchPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub x: f64,
    pub y: f64,
    pub residual: f64,
    pub arclength: f64,
}

/// Opaque model parameter set.
pub struct DelisiParams(ModelParams);

/// Opaque continuation branch.
pub struct DelisiBranch(Branch);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DelisiStatus {
    match e {
        Error::InvalidParams(_) => DelisiStatus::InvalidParams,
        Error::Domain(_) | Error::NotHopf(_) => DelisiStatus::Domain,
        Error::Convergence(_) | Error::StepUnderflow { .. } | Error::SingularTransform(_) => DelisiStatus::Convergence,
        Error::Precondition(_) => DelisiStatus::Precondition,
        _ => DelisiStatus::Other,
    }
}

fn guard<F: FnOnce() -> Result<(), (DelisiStatus, String)>>(f: F) -> DelisiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DelisiStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside delisi".into());
            DelisiStatus::Panic
        }
    }
}

fn core<T>(r: delisi::Result<T>) -> Result<T, (DelisiStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DelisiStatus, String) {
    (DelisiStatus::NullPointer, format!("{what} is null"))
}

fn kind_of(k: EquilibriumKind) -> DelisiEquilibriumKind {
    match k {
        EquilibriumKind::TrivialSaddle => DelisiEquilibriumKind::TrivialSaddle,
        EquilibriumKind::Saddle => DelisiEquilibriumKind::Saddle,
        EquilibriumKind::StableNode => DelisiEquilibriumKind::StableNode,
        EquilibriumKind::UnstableNode => DelisiEquilibriumKind::UnstableNode,
        EquilibriumKind::StableFocus => DelisiEquilibriumKind::StableFocus,
        EquilibriumKind::UnstableFocus => DelisiEquilibriumKind::UnstableFocus,
        EquilibriumKind::CenterCandidate => DelisiEquilibriumKind::CenterCandidate,
        EquilibriumKind::Degenerate => DelisiEquilibriumKind::Degenerate,
    }
}

fn tag_of(t: Tag) -> DelisiTag {
    match t {
        Tag::SaddleNode => DelisiTag::SaddleNode,
        Tag::Hopf => DelisiTag::Hopf,
        Tag::TakensBogdanov => DelisiTag::TakensBogdanov,
        Tag::Bautin => DelisiTag::Bautin,
        Tag::Lpc => DelisiTag::Lpc,
        Tag::HomApprox => DelisiTag::HomApprox,
    }
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn delisi_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Validates and stores a parameter set in `*out`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn delisi_params_new(
    lambda1: f64,
    lambda2: f64,
    alpha1: f64,
    alpha2: f64,
    xc: f64,
    out: *mut *mut DelisiParams,
) -> DelisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = core(ModelParams::new(lambda1, lambda2, alpha1, alpha2, xc))?;
        *out = Box::into_raw(Box::new(DelisiParams(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`delisi_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn delisi_params_free(p: *mut DelisiParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `psi` and `lambda` of a parameter set.
///
/// # Safety
/// `p` must be a live handle; `psi` and `lambda` valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn delisi_params_composites(
    p: *const DelisiParams,
    psi: *mut f64,
    lambda: *mut f64,
) -> DelisiStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("params"))?;
        if psi.is_null() || lambda.is_null() {
            return Err(null("output"));
        }
        *psi = p.0.psi();
        *lambda = p.0.lambda();
        Ok(())
    })
}

/// Writes up to `cap` equilibria into `out` and their total count into
/// `*count`. Returns `BufferTooSmall` (with `*count` set) when `cap` is short.
///
/// # Safety
/// `p` must be a live handle, `out` null or valid for `cap` elements, and
/// `count` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn delisi_equilibria(
    p: *const DelisiParams,
    out: *mut DelisiEquilibrium,
    cap: usize,
    count: *mut usize,
) -> DelisiStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("params"))?;
        if count.is_null() {
            return Err(null("count"));
        }
        let eqs = equilibria::find_equilibria(&p.0);
        *count = eqs.len();
        if eqs.len() > cap || (out.is_null() && !eqs.is_empty()) {
            return Err((
                DelisiStatus::BufferTooSmall,
                format!("{} equilibria, capacity {cap}", eqs.len()),
            ));
        }
        for (i, e) in eqs.iter().enumerate() {
            *out.add(i) = DelisiEquilibrium {
                x: e.state.x,
                y: e.state.y,
                trace: e.trace,
                det: e.det,
                kind: kind_of(e.kind),
            };
        }
        Ok(())
    })
}

fn locus_out(pt: &loci::LocusPoint) -> DelisiLocusPoint {
    DelisiLocusPoint {
        lambda1: pt.params.lambda1,
        lambda2: pt.params.lambda2,
        x0: pt.equilibrium.state.x,
        y0: pt.equilibrium.state.y,
    }
}

/// The Takens-Bogdanov point for the given `alpha1, alpha2, xc`.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn delisi_bt_point(
    alpha1: f64,
    alpha2: f64,
    xc: f64,
    out: *mut DelisiLocusPoint,
) -> DelisiStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        *o = locus_out(&core(loci::bt_point(alpha1, alpha2, xc))?);
        Ok(())
    })
}

/// The Bautin point; `Domain` when `xc <= 3`.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn delisi_bautin_point(
    alpha1: f64,
    alpha2: f64,
    xc: f64,
    out: *mut DelisiLocusPoint,
) -> DelisiStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        *o = locus_out(&core(loci::bautin_point(alpha1, alpha2, xc))?);
        Ok(())
    })
}

/// The saddle-node point at `lambda = lambda2 / lambda1`.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn delisi_saddle_node_point(
    alpha1: f64,
    alpha2: f64,
    xc: f64,
    lambda: f64,
    out: *mut DelisiLocusPoint,
) -> DelisiStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        *o = locus_out(&core(loci::saddle_node_point(alpha1, alpha2, xc, lambda))?);
        Ok(())
    })
}

/// Hopf point at `lambda`, with its frequency and first Lyapunov coefficient.
///
/// # Safety
/// All output pointers must be valid and writable.
#[no_mangle]
pub unsafe extern "C" fn delisi_hopf_point(
    alpha1: f64,
    alpha2: f64,
    xc: f64,
    lambda: f64,
    out: *mut DelisiLocusPoint,
    omega: *mut f64,
    ell1: *mut f64,
) -> DelisiStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        if omega.is_null() || ell1.is_null() {
            return Err(null("output"));
        }
        let (p, eq) = core(loci::hopf_point_at_lambda(alpha1, alpha2, xc, lambda))?;
        let nf = core(lyapunov::first_lyapunov(&p, &eq))?;
        *o = DelisiLocusPoint {
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            x0: eq.state.x,
            y0: eq.state.y,
        };
        *omega = nf.omega;
        *ell1 = nf.ell1;
        Ok(())
    })
}

/// Plane window for two-parameter curves.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelisiPlane {
    pub lambda1_min: f64,
    pub lambda1_max: f64,
    pub lambda2_min: f64,
    pub lambda2_max: f64,
}

impl From<DelisiPlane> for PlaneWindow {
    fn from(w: DelisiPlane) -> Self {
        PlaneWindow {
            lambda1: [w.lambda1_min, w.lambda1_max],
            lambda2: [w.lambda2_min, w.lambda2_max],
            lambda: None,
        }
    }
}

/// Fold curve from the saddle-node point at `lambda`, with default
/// continuation options; `direction > 0` increases `lambda`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn delisi_continue_fold(
    alpha1: f64,
    alpha2: f64,
    xc: f64,
    lambda: f64,
    direction: f64,
    window: DelisiPlane,
    out: *mut *mut DelisiBranch,
) -> DelisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let start = core(loci::saddle_node_point(alpha1, alpha2, xc, lambda))?;
        let b = core(continuation::continue_fold_curve(
            &start,
            direction,
            window.into(),
            &ContinuationOptions::default(),
        ))?;
        *out = Box::into_raw(Box::new(DelisiBranch(b)));
        Ok(())
    })
}

/// Hopf curve from the Takens-Bogdanov point towards decreasing `lambda`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn delisi_continue_hopf_from_bt(
    alpha1: f64,
    alpha2: f64,
    xc: f64,
    window: DelisiPlane,
    out: *mut *mut DelisiBranch,
) -> DelisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bt = core(loci::bt_point(alpha1, alpha2, xc))?;
        let b = core(continuation::continue_hopf_curve(
            &bt,
            -1.0,
            window.into(),
            &ContinuationOptions::default(),
        ))?;
        *out = Box::into_raw(Box::new(DelisiBranch(b)));
        Ok(())
    })
}

/// # Safety
/// `b` must be null or a live branch handle.
#[no_mangle]
pub unsafe extern "C" fn delisi_branch_free(b: *mut DelisiBranch) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `b` must be null or a live branch handle.
#[no_mangle]
pub unsafe extern "C" fn delisi_branch_len(b: *const DelisiBranch) -> usize {
    b.as_ref().map_or(0, |b| b.0.points.len())
}

/// # Safety
/// `b` must be a live branch handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn delisi_branch_point(
    b: *const DelisiBranch,
    index: usize,
    out: *mut DelisiBranchPoint,
) -> DelisiStatus {
    guard(|| {
        let b = b.as_ref().ok_or_else(|| null("branch"))?;
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        let p = b.0.points.get(index).ok_or_else(|| {
            (
                DelisiStatus::OutOfRange,
                format!("index {index} of {}", b.0.points.len()),
            )
        })?;
        *o = DelisiBranchPoint {
            lambda1: p.params.lambda1,
            lambda2: p.params.lambda2,
            x: p.state.x,
            y: p.state.y,
            residual: p.residual,
            arclength: p.arclength,
        };
        Ok(())
    })
}

/// Number of special points; 0 for a null handle.
///
/// # Safety
/// `b` must be null or a live branch handle.
#[no_mangle]
pub unsafe extern "C" fn delisi_branch_special_count(b: *const DelisiBranch) -> usize {
    b.as_ref().map_or(0, |b| b.0.special_points.len())
}

/// The `k`-th special point: its point index and tag.
///
/// # Safety
/// `b` must be a live branch handle; `index` and `tag` valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn delisi_branch_special(
    b: *const DelisiBranch,
    k: usize,
    index: *mut usize,
    tag: *mut DelisiTag,
) -> DelisiStatus {
    guard(|| {
        let b = b.as_ref().ok_or_else(|| null("branch"))?;
        if index.is_null() || tag.is_null() {
            return Err(null("output"));
        }
        let s = b.0.special_points.get(k).ok_or_else(|| {
            (
                DelisiStatus::OutOfRange,
                format!("special point {k} of {}", b.0.special_points.len()),
            )
        })?;
        *index = s.index;
        *tag = tag_of(s.tag);
        Ok(())
    })
}
