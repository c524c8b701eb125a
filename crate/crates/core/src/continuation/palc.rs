//! Pseudo-arclength predictor-corrector on `F(u) = 0`, `F: R^n -> R^(n-1)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_points: usize,
    /// Corrector exit: `||F||_inf` at or below this.
    pub residual_tol: f64,
    /// Corrector exit: last Newton step `||du||_inf` at or below this.
    pub step_tol: f64,
    pub max_newton: usize,
    pub bisect_tol: f64,
    pub bisect_max: usize,
    /// Locate and refine zeros of the test functions.
    pub detect: bool,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            h0: 1e-3,
            h_min: 1e-9,
            h_max: 0.05,
            max_points: 2000,
            residual_tol: 1e-10,
            step_tol: 1e-9,
            max_newton: 12,
            bisect_tol: 1e-10,
            bisect_max: 60,
            detect: true,
        }
    }
}

pub(crate) trait Problem {
    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>>;

    fn jacobian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        fd_jacobian(|v| self.residual(v), u)
    }

    /// Test functions; NaN entries are ignored for sign-change detection.
    fn tests(&self, _u: &DVector<f64>) -> Vec<f64> {
        Vec::new()
    }

    /// `Some(reason)` rejects `u` and ends the branch.
    fn reject(&self, _u: &DVector<f64>) -> Option<String> {
        None
    }

    fn accepted(&mut self, _u: &DVector<f64>) {}
}

pub(crate) fn fd_jacobian<F>(f: F, u: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = u.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let h = 1e-7 * (1.0 + u[k].abs());
        let (mut a, mut b) = (u.clone(), u.clone());
        a[k] += h;
        b[k] -= h;
        cols.push((f(&a)? - f(&b)?) / (2.0 * h));
    }
    Ok(DMatrix::from_columns(&cols))
}

#[derive(Debug, Clone)]
pub(crate) struct Corrected {
    pub u: DVector<f64>,
    pub iters: usize,
    pub residual: f64,
}

fn bordered<P: Problem + ?Sized>(p: &P, v: &DVector<f64>, t: &DVector<f64>) -> Result<DMatrix<f64>> {
    let j = p.jacobian(v)?;
    let n = v.len();
    if j.nrows() + 1 != n || j.ncols() != n {
        return Err(Error::Convergence(format!(
            "jacobian is {}x{}, expected {}x{n}",
            j.nrows(),
            j.ncols(),
            n - 1
        )));
    }
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n - 1, n)).copy_from(&j);
    a.row_mut(n - 1).copy_from(&t.transpose());
    Ok(a)
}

/// Newton on `F(v) = 0, t.(v - pred) = 0`.
pub(crate) fn correct<P: Problem + ?Sized>(
    p: &P,
    pred: &DVector<f64>,
    t: &DVector<f64>,
    opts: &ContinuationOptions,
) -> Result<Corrected> {
    let n = pred.len();
    let mut v = pred.clone();
    let mut last_step = f64::INFINITY;
    for it in 0..=opts.max_newton {
        let f = p.residual(&v)?;
        let res = f.amax();
        if !res.is_finite() {
            return Err(Error::Convergence("non-finite residual in corrector".into()));
        }
        if it > 0 && res <= opts.residual_tol && last_step <= opts.step_tol {
            return Ok(Corrected {
                u: v,
                iters: it,
                residual: res,
            });
        }
        if it == opts.max_newton {
            break;
        }
        let a = bordered(p, &v, t)?;
        let mut rhs = DVector::zeros(n);
        rhs.rows_mut(0, n - 1).copy_from(&(-f));
        rhs[n - 1] = -t.dot(&(&v - pred));
        let du = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Convergence("singular bordered jacobian".into()))?;
        last_step = du.amax();
        v += du;
    }
    Err(Error::Convergence(format!(
        "corrector did not converge in {} iterations",
        opts.max_newton
    )))
}

/// Unit null vector of the Jacobian at `u`, oriented along `hint`.
pub(crate) fn tangent<P: Problem + ?Sized>(p: &P, u: &DVector<f64>, hint: &DVector<f64>) -> Result<DVector<f64>> {
    let n = u.len();
    let a = bordered(p, u, hint)?;
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let t = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Convergence("singular bordered jacobian at tangent".into()))?;
    let t = t.normalize();
    Ok(if t.dot(hint) < 0.0 { -t } else { t })
}

#[derive(Debug, Clone)]
pub(crate) struct RawPoint {
    pub u: DVector<f64>,
    pub tests: Vec<f64>,
    pub residual: f64,
    pub arclength: f64,
    /// Index of the test function whose zero this point refines.
    pub zero_of: Option<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct RawBranch {
    pub points: Vec<RawPoint>,
    pub end: String,
    /// The branch ended because the step size fell below `h_min`.
    pub underflow: bool,
}

fn sign_change(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0))
}

/// Bisection in arclength `s` on the plane family `t.(v - u - s t) = 0`.
fn refine<P: Problem + ?Sized>(
    p: &P,
    u: &DVector<f64>,
    t: &DVector<f64>,
    h: f64,
    k: usize,
    g0: f64,
    opts: &ContinuationOptions,
) -> Result<(f64, Corrected, Vec<f64>)> {
    let (mut lo, mut hi) = (0.0, h);
    let mut best = None;
    for _ in 0..opts.bisect_max {
        let mid = 0.5 * (lo + hi);
        let c = correct(p, &(u + t * mid), t, opts)?;
        let tests = p.tests(&c.u);
        let g = tests.get(k).copied().unwrap_or(f64::NAN);
        if !g.is_finite() {
            return Err(Error::Convergence("test function undefined while bisecting".into()));
        }
        if (g < 0.0) == (g0 < 0.0) && g != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        best = Some((mid, c, tests));
        if g == 0.0 || hi - lo <= opts.bisect_tol {
            break;
        }
    }
    best.ok_or_else(|| Error::Convergence("no bisection iterations".into()))
}

/// Follows the branch from the solution `u0` along the unit tangent `t0`.
pub(crate) fn run<P: Problem + ?Sized>(
    p: &mut P,
    u0: Corrected,
    t0: DVector<f64>,
    opts: &ContinuationOptions,
) -> Result<RawBranch> {
    let mut points = vec![RawPoint {
        tests: p.tests(&u0.u),
        u: u0.u,
        residual: u0.residual,
        arclength: 0.0,
        zero_of: None,
    }];
    p.accepted(&points[0].u);
    let mut t = t0;
    let mut h = opts.h0;
    let mut end = String::from("max_points");
    let mut underflow = false;
    let mut steps = 0;
    while steps + 1 < opts.max_points {
        let last = points.last().expect("non-empty");
        let u = last.u.clone();
        let pred = &u + &t * h;
        let c = match correct(p, &pred, &t, opts) {
            Ok(c) if (&c.u - &pred).norm() <= 2.0 * h => c,
            other => {
                h *= 0.5;
                if h < opts.h_min {
                    end = match other {
                        Err(e) => format!("step underflow: {e}"),
                        Ok(_) => "step underflow: corrector jumped".into(),
                    };
                    underflow = true;
                    break;
                }
                continue;
            }
        };
        if let Some(reason) = p.reject(&c.u) {
            end = reason;
            break;
        }
        let tests = p.tests(&c.u);
        let (s0, g_prev) = (last.arclength, last.tests.clone());
        let mut zeros = Vec::new();
        if opts.detect {
            for k in 0..tests.len().min(g_prev.len()) {
                if sign_change(g_prev[k], tests[k]) {
                    if let Ok((s, z, zt)) = refine(p, &u, &t, h, k, g_prev[k], opts) {
                        if p.reject(&z.u).is_none() {
                            zeros.push((s, k, z, zt));
                        }
                    }
                }
            }
        }
        zeros.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, k, z, zt) in zeros {
            let prev = points.last().expect("non-empty");
            let s = prev.arclength + (&z.u - &prev.u).norm();
            points.push(RawPoint {
                u: z.u,
                tests: zt,
                residual: z.residual,
                arclength: s,
                zero_of: Some(k),
            });
        }
        let prev = points.last().expect("non-empty");
        let s = prev.arclength + (&c.u - &prev.u).norm();
        let secant = (&c.u - &u).normalize();
        points.push(RawPoint {
            u: c.u,
            tests,
            residual: c.residual,
            arclength: s.max(s0),
            zero_of: None,
        });
        p.accepted(&points.last().expect("non-empty").u);
        t = secant;
        if c.iters <= 4 {
            h = (2.0 * h).min(opts.h_max);
        } else if c.iters > 8 {
            h = (0.5 * h).max(opts.h_min);
        }
        steps += 1;
    }
    Ok(RawBranch { points, end, underflow })
}
