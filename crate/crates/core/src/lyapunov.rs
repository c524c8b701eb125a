//! First Lyapunov coefficient at a Hopf equilibrium.
//!
//! With `x1 = x - x0`, the field is `x1' = A x1 + H(x1)`. The change
//! `Y = M x1`, `M = [[b2, -a2], [a1 b2 - a2 b1, 0]]`, brings `A` to the
//! companion form `R = [[0, 1], [-det A, tr A]]`. Writing
//! `Y = z q0 + conj(z) conj(q0)` the complex coordinate obeys
//! `z' = i omega z + G(z, conj z)` with `G = <p0, M H(M^-1 Y)>`, and
//! `g_ij` are the Taylor coefficients of `G`. The nonlinearity is a finite
//! polynomial, so `G` is expanded exactly.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::integrator::{self, Direction, Event, SolverOptions};
use crate::equilibria::{self, Equilibrium, EquilibriumOptions};
use crate::error::{Error, Result};
use crate::model::{taylor_expand, ModelParams, PlanarSystem, State, TaylorCoefficients};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearData {
    pub a: Matrix2<f64>,
    pub m: Matrix2<f64>,
    pub omega: f64,
    pub mu: f64,
    pub q0: [Complex64; 2],
    pub p0: [Complex64; 2],
}

impl LinearData {
    /// `R = M A M^-1`.
    pub fn r(&self) -> Matrix2<f64> {
        self.m * self.a * self.m.try_inverse().expect("M checked invertible")
    }

    pub fn m_inv(&self) -> Matrix2<f64> {
        self.m.try_inverse().expect("M checked invertible")
    }
}

/// `<p, v> = conj(p) . v`.
pub fn inner(p: &[Complex64; 2], v: &[Complex64; 2]) -> Complex64 {
    p[0].conj() * v[0] + p[1].conj() * v[1]
}

/// Normalization for a bare linear part.
pub fn linearize_matrix(a: Matrix2<f64>) -> Result<LinearData> {
    let det = a.determinant();
    if !(det > 0.0) {
        return Err(Error::NotHopf(format!("det A = {det:e} is not positive")));
    }
    let (a1, a2, b1, b2) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let m21 = a1 * b2 - a2 * b1;
    let scale = a.abs().max();
    if a2.abs() <= 1e-14 * scale || m21.abs() <= 1e-14 * scale * scale {
        return Err(Error::SingularTransform(format!(
            "a2 = {a2:e}, a1 b2 - a2 b1 = {m21:e}"
        )));
    }
    let m = Matrix2::new(b2, -a2, m21, 0.0);
    let omega = det.sqrt();
    let q0 = [
        Complex64::new(1.0, 0.0) / (2.0 * I * omega),
        I * omega / (2.0 * I * omega),
    ];
    let p0 = [-I * omega, Complex64::new(1.0, 0.0)];
    Ok(LinearData {
        a,
        m,
        omega,
        mu: a.trace() / 2.0,
        q0,
        p0,
    })
}

/// Normalization at `eq` (the caller is expected to have placed `eq` on the
/// Hopf set first, see [`correct_onto_hopf`]).
pub fn linearize_at_hopf(params: &ModelParams, eq: &Equilibrium) -> Result<LinearData> {
    linearize_matrix(taylor_expand(params, eq.state).linear_part())
}

/// A real planar polynomial vector field, `c[k][i][j]` multiplying
/// `x^i y^j` in component `k`, total degree at most 4.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPolynomial {
    pub c: [[[f64; 5]; 5]; 2],
}

impl PlanarPolynomial {
    /// The part of the expansion above first order.
    pub fn nonlinear_part(t: &TaylorCoefficients) -> Self {
        let mut p = PlanarPolynomial::default();
        let a = &t.a;
        p.c[0][2][0] = a[3];
        p.c[0][0][2] = a[4];
        p.c[0][1][1] = a[5];
        p.c[0][1][2] = a[6];
        p.c[0][2][1] = a[7];
        p.c[0][2][2] = a[8];
        p.c[1][1][1] = t.b[3];
        p
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..5 {
                for j in 0..5 - i {
                    *o += self.c[k][i][j] * x.powi(i as i32) * y.powi(j as i32);
                }
            }
        }
        out
    }
}

/// Truncated polynomial in `(z, conj z)`: `t[i][j]` multiplies `z^i zbar^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ZPoly {
    t: [[Complex64; 5]; 5],
}

impl ZPoly {
    fn zero() -> Self {
        ZPoly {
            t: [[Complex64::new(0.0, 0.0); 5]; 5],
        }
    }

    fn one() -> Self {
        let mut p = ZPoly::zero();
        p.t[0][0] = Complex64::new(1.0, 0.0);
        p
    }

    fn linear(a: Complex64, b: Complex64) -> Self {
        let mut p = ZPoly::zero();
        p.t[1][0] = a;
        p.t[0][1] = b;
        p
    }

    fn mul(&self, o: &ZPoly) -> ZPoly {
        let mut r = ZPoly::zero();
        for i in 0..5 {
            for j in 0..5 - i {
                if self.t[i][j] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..5 - i - j {
                    for l in 0..5 - i - j - k {
                        r.t[i + k][j + l] += self.t[i][j] * o.t[k][l];
                    }
                }
            }
        }
        r
    }

    fn add_scaled(&mut self, o: &ZPoly, s: Complex64) {
        for i in 0..5 {
            for j in 0..5 {
                self.t[i][j] += s * o.t[i][j];
            }
        }
    }

    fn pow(&self, n: usize) -> ZPoly {
        (0..n).fold(ZPoly::one(), |acc, _| acc.mul(self))
    }
}

/// How `c1` is assembled from the `g` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C1Formula {
    /// `g21/2 + g20 g11 i omega/(2 omega^2) - i g11 conj(g11)/omega - i g02 conj(g02)/(6 omega)`.
    #[default]
    Display,
    /// `(i/(2 omega)) (g20 g11 - 2 |g11|^2 - |g02|^2/3) + g21/2`.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormData {
    pub omega: f64,
    pub g20: Complex64,
    pub g11: Complex64,
    pub g02: Complex64,
    pub g21: Complex64,
    pub c1: Complex64,
    /// `c1` by the other formula, for comparison.
    pub c1_alt: Complex64,
    pub ell1: f64,
    pub formula: C1Formula,
}

pub fn c1_display(g20: Complex64, g11: Complex64, g02: Complex64, g21: Complex64, omega: f64) -> Complex64 {
    g21 / 2.0 + g20 * g11 * I * omega / (2.0 * omega * omega)
        - I * g11 * g11.conj() / omega
        - I * g02 * g02.conj() / (6.0 * omega)
}

pub fn c1_standard(g20: Complex64, g11: Complex64, g02: Complex64, g21: Complex64, omega: f64) -> Complex64 {
    I / (2.0 * omega) * (g20 * g11 - 2.0 * g11.norm_sqr() - g02.norm_sqr() / 3.0) + g21 / 2.0
}

/// The complex nonlinearity `G(z, conj z)` of the normalized system as its
/// coefficient table.
fn g_table(h: &PlanarPolynomial, lin: &LinearData) -> [[Complex64; 5]; 5] {
    let minv = lin.m_inv();
    let cm = |r: usize, c: usize| Complex64::new(minv[(r, c)], 0.0);
    // x1 = M^-1 q0 z + conj(M^-1 q0) zbar
    let u = [
        cm(0, 0) * lin.q0[0] + cm(0, 1) * lin.q0[1],
        cm(1, 0) * lin.q0[0] + cm(1, 1) * lin.q0[1],
    ];
    let xs = ZPoly::linear(u[0], u[0].conj());
    let ys = ZPoly::linear(u[1], u[1].conj());
    let xp: Vec<ZPoly> = (0..5).map(|n| xs.pow(n)).collect();
    let yp: Vec<ZPoly> = (0..5).map(|n| ys.pow(n)).collect();
    let mut hz = [ZPoly::zero(), ZPoly::zero()];
    for (k, hk) in hz.iter_mut().enumerate() {
        for i in 0..5 {
            for j in 0..5 - i {
                let c = h.c[k][i][j];
                if c != 0.0 {
                    hk.add_scaled(&xp[i].mul(&yp[j]), Complex64::new(c, 0.0));
                }
            }
        }
    }
    // G = conj(p0) . (M H)
    let mut g = ZPoly::zero();
    for r in 0..2 {
        let w = lin.p0[r].conj();
        for c in 0..2 {
            g.add_scaled(&hz[c], w * lin.m[(r, c)]);
        }
    }
    g.t
}

/// Normal-form coefficients for an arbitrary polynomial nonlinearity.
pub fn normal_form_from_polynomial(h: &PlanarPolynomial, lin: &LinearData, formula: C1Formula) -> NormalFormData {
    let t = g_table(h, lin);
    let g20 = 2.0 * t[2][0];
    let g11 = t[1][1];
    let g02 = 2.0 * t[0][2];
    let g21 = 2.0 * t[2][1];
    let w = lin.omega;
    let (d, s) = (c1_display(g20, g11, g02, g21, w), c1_standard(g20, g11, g02, g21, w));
    let (c1, c1_alt) = match formula {
        C1Formula::Display => (d, s),
        C1Formula::Standard => (s, d),
    };
    NormalFormData {
        omega: w,
        g20,
        g11,
        g02,
        g21,
        c1,
        c1_alt,
        ell1: c1.re / w,
        formula,
    }
}

pub fn normal_form_coeffs(params: &ModelParams, eq: &Equilibrium, lin: &LinearData) -> Result<NormalFormData> {
    normal_form_coeffs_with(params, eq, lin, C1Formula::default())
}

pub fn normal_form_coeffs_with(
    params: &ModelParams,
    eq: &Equilibrium,
    lin: &LinearData,
    formula: C1Formula,
) -> Result<NormalFormData> {
    let t = taylor_expand(params, eq.state);
    Ok(normal_form_from_polynomial(
        &PlanarPolynomial::nonlinear_part(&t),
        lin,
        formula,
    ))
}

/// Linearization and normal form in one call.
pub fn first_lyapunov(params: &ModelParams, eq: &Equilibrium) -> Result<NormalFormData> {
    let lin = linearize_at_hopf(params, eq)?;
    normal_form_coeffs(params, eq, &lin)
}

/// Moves `lambda1` (others fixed) until the equilibrium nearest `x_guess` has
/// `|trace| < tol_rel ||J||`, by secant iteration.
pub fn correct_onto_hopf(params: &ModelParams, x_guess: f64, tol_rel: f64) -> Result<(ModelParams, Equilibrium)> {
    let opts = EquilibriumOptions::strict();
    let pick = |p: &ModelParams, near: f64| -> Option<Equilibrium> {
        equilibria::find_equilibria_with(p, &opts)
            .into_iter()
            .filter(|e| e.state.x > 0.0)
            .min_by(|a, b| (a.state.x - near).abs().total_cmp(&(b.state.x - near).abs()))
    };
    let tr = |p: &ModelParams, near: f64| -> Option<(f64, Equilibrium)> {
        let e = pick(p, near)?;
        Some((e.trace / p.lambda1, e))
    };
    let mut p0 = *params;
    let (mut f0, mut e0) =
        tr(&p0, x_guess).ok_or_else(|| Error::NotHopf("no positive equilibrium at the starting parameters".into()))?;
    let mut p1 = p0.with(crate::ParamId::Lambda1, p0.lambda1 * (1.0 + 1e-6));
    let (mut f1, mut e1) =
        tr(&p1, e0.state.x).ok_or_else(|| Error::NotHopf("equilibrium lost during correction".into()))?;
    for _ in 0..60 {
        let j = p1.jac(e1.state.x, e1.state.y);
        if e1.trace.abs() < tol_rel * j.norm() {
            if e1.det <= 0.0 {
                return Err(Error::NotHopf(format!(
                    "trace vanishes at a saddle (det = {:e})",
                    e1.det
                )));
            }
            return Ok((p1, e1));
        }
        if f1 == f0 {
            break;
        }
        let next = p1.lambda1 - f1 * (p1.lambda1 - p0.lambda1) / (f1 - f0);
        if !(next > 0.0) {
            break;
        }
        p0 = p1;
        f0 = f1;
        e0 = e1;
        p1 = p1.with(crate::ParamId::Lambda1, next);
        match tr(&p1, e0.state.x) {
            Some((f, e)) => {
                f1 = f;
                e1 = e;
            }
            None => break,
        }
    }
    Err(Error::Convergence("Hopf correction in lambda1 did not converge".into()))
}

/// Return-map sampling for [`ell1_sign_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    /// Length unit for the starting radii `{1, 2} * 1e-3 * scale`.
    pub scale: f64,
    pub returns: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            scale: 1.0,
            returns: 200,
            rtol: 1e-13,
            atol: 1e-16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleFit {
    pub sign: i8,
    /// Fitted `c2` in `dlog r = c0 + c2 r^2` per return.
    pub cubic: f64,
    pub linear: f64,
    pub samples: usize,
}

/// Consecutive radii on the upward vertical half-line through `center`.
pub fn return_radii<S: PlanarSystem + ?Sized>(
    sys: &S,
    center: [f64; 2],
    r0: f64,
    returns: usize,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let (cx, cy) = (center[0], center[1]);
    let f = |u: &[f64; 2]| sys.field(*u);
    let ev = [Event::new(move |u: &[f64; 2]| u[0] - cx, Direction::Either, false)];
    // The return time is at most a few periods of the linearization.
    let j = sys.jacobian(center);
    let det = j.determinant();
    if !(det > 0.0) {
        return Err(Error::NotHopf("oracle needs a focus-like equilibrium".into()));
    }
    let period = 2.0 * std::f64::consts::PI / det.sqrt();
    let mut radii = vec![r0];
    let mut u = [cx, cy + r0];
    let o = SolverOptions { record: false, ..*opts };
    for _ in 0..returns {
        let sol = integrator::solve(f, u, 3.0 * period, &o, &ev)?;
        let hit = sol
            .events
            .iter()
            .find(|h| h.state[1] > cy && h.t > 0.25 * period)
            .ok_or_else(|| Error::Inconclusive("no return to the section within three periods".into()))?;
        let mut s = hit.state;
        s[0] = cx;
        let r = s[1] - cy;
        if !(r > 0.0 && r < 50.0 * r0) {
            return Err(Error::Inconclusive(format!(
                "return radius {r:e} left the neighborhood"
            )));
        }
        radii.push(r);
        u = s;
    }
    Ok(radii)
}

/// Sign of the first Lyapunov coefficient from the return map of the
/// vertical half-line: least squares of `log(r_{n+1}/r_n) = c0 + c2 r_n^2`
/// over runs started at radii `1e-3 scale` and `2e-3 scale`; the sign of `c2`.
/// Trajectories leaving the region of interest make the test inconclusive.
pub fn ell1_sign_oracle<S: PlanarSystem + ?Sized>(sys: &S, center: State, opts: &OracleOptions) -> Result<OracleFit> {
    let so = SolverOptions::with_tolerances(opts.rtol, opts.atol);
    let mut rows = Vec::new();
    for k in [1.0, 2.0] {
        let r0 = k * 1e-3 * opts.scale;
        let radii = return_radii(sys, center.to_array(), r0, opts.returns, &so)?;
        for w in radii.windows(2) {
            rows.push((w[0] * w[0], (w[1] / w[0]).ln()));
        }
    }
    let n = rows.len() as f64;
    let (sx, sy) = rows.iter().fold((0.0, 0.0), |a, r| (a.0 + r.0, a.1 + r.1));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = rows.iter().fold((0.0, 0.0), |a, r| {
        (a.0 + (r.0 - mx).powi(2), a.1 + (r.0 - mx) * (r.1 - my))
    });
    if sxx == 0.0 {
        return Err(Error::Inconclusive("degenerate radius spread".into()));
    }
    let c2 = sxy / sxx;
    Ok(OracleFit {
        sign: if c2 > 0.0 {
            1
        } else if c2 < 0.0 {
            -1
        } else {
            0
        },
        cubic: c2,
        linear: my - c2 * mx,
        samples: rows.len(),
    })
}

/// The oracle for the model, refusing to run unless `eq` is a Hopf candidate,
/// and reporting trajectories that leave the region of interest.
pub fn model_oracle(params: &ModelParams, eq: &Equilibrium, opts: &OracleOptions) -> Result<OracleFit> {
    let j = params.jac(eq.state.x, eq.state.y);
    if !(eq.det > 0.0) || eq.trace.abs() > 1e-6 * j.norm() {
        return Err(Error::Precondition(format!(
            "oracle needs a Hopf candidate (trace = {:e}, det = {:e})",
            eq.trace, eq.det
        )));
    }
    let fit = ell1_sign_oracle(params, eq.state, opts)?;
    if 2e-3 * opts.scale >= eq.state.y.min(eq.state.x) {
        return Err(Error::Inconclusive("oracle radii reach the region boundary".into()));
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loci;
    use crate::model::FnSystem;
    use crate::model::REFERENCE_PARAMS;

    const A1: f64 = 0.297312;
    const A2: f64 = 0.00318;
    const XC: f64 = 2500.0;

    #[test]
    fn canonical_matrix_is_its_own_normal_form() {
        let a = Matrix2::new(0.0, 1.0, -1.0, 0.0);
        let lin = linearize_matrix(a).unwrap();
        assert_eq!(lin.omega, 1.0);
        assert_eq!(lin.mu, 0.0);
        assert!((lin.r() - a).abs().max() < 1e-15);
    }

    #[test]
    fn eigenvector_identities() {
        for x0 in [0.1, 0.4, 0.9, 1.5, 1.9] {
            let (p, e) = loci::hopf_point_at_x0(A1, A2, XC, x0).unwrap();
            let lin = linearize_at_hopf(&p, &e).unwrap();
            let r = lin.r();
            let w = lin.omega;
            let want = Matrix2::new(0.0, 1.0, -w * w, 2.0 * lin.mu);
            assert!((r - want).abs().max() <= 1e-10 * want.abs().max().max(1.0));
            let r0 = Matrix2::new(0.0, 1.0, -w * w, 0.0);
            let rq = [
                r0[(0, 0)] * lin.q0[0] + r0[(0, 1)] * lin.q0[1],
                r0[(1, 0)] * lin.q0[0] + r0[(1, 1)] * lin.q0[1],
            ];
            assert!((rq[0] - I * w * lin.q0[0]).norm() < 1e-12 && (rq[1] - I * w * lin.q0[1]).norm() < 1e-12);
            let rtp = [
                r0[(0, 0)] * lin.p0[0] + r0[(1, 0)] * lin.p0[1],
                r0[(0, 1)] * lin.p0[0] + r0[(1, 1)] * lin.p0[1],
            ];
            assert!((rtp[0] + I * w * lin.p0[0]).norm() < 1e-12 && (rtp[1] + I * w * lin.p0[1]).norm() < 1e-12);
            assert!((inner(&lin.p0, &lin.q0) - 1.0).norm() < 1e-12);
            let qb = [lin.q0[0].conj(), lin.q0[1].conj()];
            assert!(inner(&lin.p0, &qb).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_system_has_trivial_normal_form() {
        let lin = linearize_matrix(Matrix2::new(0.3, 2.0, -1.0, -0.3)).unwrap();
        let nf = normal_form_from_polynomial(&PlanarPolynomial::default(), &lin, C1Formula::Display);
        assert_eq!(nf.ell1, 0.0);
        for g in [nf.g20, nf.g11, nf.g02, nf.g21] {
            assert_eq!(g, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rejects_saddles_and_singular_transforms() {
        assert!(matches!(
            linearize_matrix(Matrix2::new(1.0, 0.0, 0.0, -1.0)),
            Err(Error::NotHopf(_))
        ));
        assert!(matches!(
            linearize_matrix(Matrix2::new(0.0, 0.0, -1.0, 0.0)),
            Err(Error::NotHopf(_)) | Err(Error::SingularTransform(_))
        ));
        assert!(matches!(
            linearize_matrix(Matrix2::new(1.0, 0.0, 0.0, 1.0)),
            Err(Error::SingularTransform(_))
        ));
    }

    #[test]
    fn known_normal_form() {
        // x' = -y + x (x^2 + y^2) a, y' = x + y (x^2 + y^2) a has l1 = a (up
        // to the positive normalization of the companion form) and is
        // equivalent to z' = i z + a z |z|^2.
        for a in [-1.0, 0.5] {
            let lin = linearize_matrix(Matrix2::new(0.0, -1.0, 1.0, 0.0)).unwrap();
            let mut h = PlanarPolynomial::default();
            h.c[0][3][0] = a;
            h.c[0][1][2] = a;
            h.c[1][2][1] = a;
            h.c[1][0][3] = a;
            let nf = normal_form_from_polynomial(&h, &lin, C1Formula::Display);
            assert_eq!(nf.ell1.signum(), a.signum());
            assert!((nf.c1 - nf.c1_alt).norm() < 1e-14);
        }
    }

    #[test]
    fn display_and_standard_formulas_agree() {
        let (p, e) = loci::hopf_point_at_x0(A1, A2, XC, 0.8).unwrap();
        let lin = linearize_at_hopf(&p, &e).unwrap();
        let a = normal_form_coeffs_with(&p, &e, &lin, C1Formula::Display).unwrap();
        let b = normal_form_coeffs_with(&p, &e, &lin, C1Formula::Standard).unwrap();
        assert!((a.c1 - b.c1).norm() <= 1e-13 * a.c1.norm());
    }

    #[test]
    fn g_expansion_matches_direct_evaluation() {
        let (p, e) = loci::hopf_point_at_x0(A1, A2, XC, 1.2).unwrap();
        let lin = linearize_at_hopf(&p, &e).unwrap();
        let t = taylor_expand(&p, e.state);
        let h = PlanarPolynomial::nonlinear_part(&t);
        let table = g_table(&h, &lin);
        let minv = lin.m_inv();
        for z in [Complex64::new(0.01, 0.02), Complex64::new(-0.03, 0.005)] {
            let y = [
                (z * lin.q0[0] + z.conj() * lin.q0[0].conj()).re,
                (z * lin.q0[1] + z.conj() * lin.q0[1].conj()).re,
            ];
            let x1 = minv * nalgebra::Vector2::new(y[0], y[1]);
            let hv = t.nonlinear(x1[0], x1[1]);
            let mh = lin.m * nalgebra::Vector2::new(hv[0], hv[1]);
            let direct = lin.p0[0].conj() * mh[0] + lin.p0[1].conj() * mh[1];
            let mut series = Complex64::new(0.0, 0.0);
            for i in 0..5 {
                for j in 0..5 - i {
                    series += table[i][j] * z.powu(i as u32) * z.conj().powu(j as u32);
                }
            }
            assert!((series - direct).norm() <= 1e-12 * direct.norm());
        }
    }

    #[test]
    fn reconstruction_gives_real_states() {
        let (p, e) = loci::hopf_point_at_x0(A1, A2, XC, 0.3).unwrap();
        let lin = linearize_at_hopf(&p, &e).unwrap();
        let z = Complex64::new(0.3, -0.7);
        let y = [
            z * lin.q0[0] + z.conj() * lin.q0[0].conj(),
            z * lin.q0[1] + z.conj() * lin.q0[1].conj(),
        ];
        assert!(y[0].im.abs() < 1e-15 && y[1].im.abs() < 1e-15);
    }

    #[test]
    fn synthetic_oracle_sign() {
        // z' = i z + c z |z|^2 with Re c = -1.
        let sys = FnSystem(|u: [f64; 2]| {
            let r2 = u[0] * u[0] + u[1] * u[1];
            [-u[1] + (-u[0] - 0.3 * u[1]) * r2, u[0] + (-u[1] + 0.3 * u[0]) * r2]
        });
        let o = OracleOptions {
            scale: 10.0,
            returns: 40,
            ..Default::default()
        };
        let fit = ell1_sign_oracle(&sys, State::new(0.0, 0.0), &o).unwrap();
        assert_eq!(fit.sign, -1);
    }

    #[test]
    fn hopf_correction_lands_on_trace_zero() {
        let (p, e) = loci::hopf_point_at_x0(A1, A2, XC, 0.7).unwrap();
        let off = p.with(crate::ParamId::Lambda1, p.lambda1 * 1.01);
        let (q, f) = correct_onto_hopf(&off, e.state.x, 1e-9).unwrap();
        assert!(f.trace.abs() < 1e-9 * q.jac(f.state.x, f.state.y).norm());
        assert!((q.lambda1 - p.lambda1).abs() < 1e-8 * p.lambda1);
    }

    #[test]
    fn reference_point_is_not_a_hopf_candidate() {
        let p = REFERENCE_PARAMS.with(crate::ParamId::Lambda1, 0.008);
        let e = equilibria::find_equilibria(&p)[2];
        assert!(matches!(linearize_at_hopf(&p, &e), Err(Error::NotHopf(_))));
    }
}
