//! Closed-form bifurcation sets: fold, Takens-Bogdanov, Hopf / neutral
//! saddle, Bautin.
//!
//! Every point is produced in composite coordinates `(psi, lambda)` and
//! mapped back to `(lambda1, lambda2)` with `alpha1, alpha2, xc` as gauge.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{self, Equilibrium, EquilibriumOptions};
use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::lyapunov;
use crate::model::{ModelParams, State};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocusKind {
    SaddleNode,
    TakensBogdanov,
    Hopf,
    NeutralSaddle,
    Bautin,
}

impl LocusKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LocusKind::SaddleNode => "saddle_node",
            LocusKind::TakensBogdanov => "takens_bogdanov",
            LocusKind::Hopf => "hopf",
            LocusKind::NeutralSaddle => "neutral_saddle",
            LocusKind::Bautin => "bautin",
        }
    }
}

impl std::str::FromStr for LocusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saddle_node" | "sn" | "fold" => Ok(LocusKind::SaddleNode),
            "takens_bogdanov" | "bt" => Ok(LocusKind::TakensBogdanov),
            "hopf" => Ok(LocusKind::Hopf),
            "neutral_saddle" => Ok(LocusKind::NeutralSaddle),
            "bautin" | "gh" => Ok(LocusKind::Bautin),
            other => Err(Error::Config(format!("unknown locus kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusPoint {
    pub kind: LocusKind,
    pub params: ModelParams,
    pub equilibrium: Equilibrium,
    pub diagnostics: BTreeMap<String, f64>,
}

impl LocusPoint {
    pub fn diag(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }
}

/// `lambda` on the Takens-Bogdanov set, `2 (3 + xc) / (3 (1 + xc))`.
pub fn bt_lambda(xc: f64) -> f64 {
    2.0 * (3.0 + xc) / (3.0 * (1.0 + xc))
}

/// `lambda` at the Bautin point, `(xc - 3) / (3 (1 + xc))`.
pub fn bautin_lambda(xc: f64) -> f64 {
    (xc - 3.0) / (3.0 * (1.0 + xc))
}

/// `psi` at the Bautin point,
/// `sqrt(xc) ((xc - 27) sqrt(xc) + (9 + xc)^(3/2)) / (27 (1 + xc)^2)`.
pub fn bautin_psi(xc: f64) -> f64 {
    let s = xc.sqrt();
    s * ((xc - 27.0) * s + (9.0 + xc).powf(1.5)) / (27.0 * (1.0 + xc) * (1.0 + xc))
}

/// Coefficients `[k3, k2, k1, k0]` of the Hopf / neutral-saddle cubic in
/// `lambda` at given `(psi, xc)`.
pub fn hopf_cubic(psi: f64, xc: f64) -> [f64; 4] {
    [
        (1.0 + xc).powi(3) * psi,
        -(psi * xc.powi(3) + (1.0 - psi) * xc * xc - 5.0 * psi * xc - 3.0 * psi),
        (xc * xc + 4.0 * xc + 3.0) * psi,
        (1.0 + xc).powi(2) * (1.0 + xc * psi) * psi,
    ]
}

/// Hopf cubic residual divided by the sum of the absolute values of its terms.
pub fn hopf_cubic_residual(psi: f64, lambda: f64, xc: f64) -> f64 {
    let k = hopf_cubic(psi, xc);
    let terms = [k[0] * lambda.powi(3), k[1] * lambda.powi(2), k[2] * lambda, k[3]];
    let sum: f64 = terms.iter().sum();
    let mag: f64 = terms.iter().map(|t| t.abs()).sum();
    sum.abs() / mag.max(1e-300)
}

/// `|Delta| / (4 xc^2)`.
pub fn fold_residual(psi: f64, xc: f64) -> f64 {
    equilibria::discriminant_composite(psi, xc).abs() / (4.0 * xc * xc)
}

fn check_gauge(alpha1: f64, alpha2: f64, xc: f64) -> Result<()> {
    ModelParams::new(1.0, 1.0, alpha1, alpha2, xc).map(|_| ())
}

fn state_at(params: &ModelParams, x0: f64) -> State {
    State::new(x0, equilibria::equilibrium_ordinate(params, x0))
}

fn classify_at(params: &ModelParams, x0: f64) -> Equilibrium {
    equilibria::classify(params, state_at(params, x0), &EquilibriumOptions::default())
}

/// The fold point for one `lambda`: `psi` on the discriminant curve,
/// `lambda1 = (psi a1 a2^2 / lambda^2)^(1/3)`, `lambda2 = lambda lambda1`,
/// at the double root `2 xc / (xc + 3)`.
pub fn saddle_node_point(alpha1: f64, alpha2: f64, xc: f64, lambda: f64) -> Result<LocusPoint> {
    check_gauge(alpha1, alpha2, xc)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let psi = equilibria::fold_psi(xc);
    let p = ModelParams::from_composites(psi, lambda, alpha1, alpha2, xc)?;
    let x0 = equilibria::fold_abscissa(xc);
    let eq = classify_at(&p, x0);
    let cubic = equilibria::CubicCoefficients::for_composites(p.psi(), xc);
    let lbt = bt_lambda(xc);
    let kind = if (lambda - lbt).abs() <= 1e-9 * lbt {
        LocusKind::TakensBogdanov
    } else {
        LocusKind::SaddleNode
    };
    let mut d = BTreeMap::new();
    d.insert("delta_rel".into(), fold_residual(p.psi(), xc));
    d.insert("double_root_p".into(), cubic.eval(x0).abs());
    d.insert("double_root_dp".into(), cubic.derivative(x0).abs());
    Ok(LocusPoint {
        kind,
        params: p,
        equilibrium: eq,
        diagnostics: d,
    })
}

/// The fold curve over a `lambda` grid (parallel over the grid).
pub fn saddle_node_curve(alpha1: f64, alpha2: f64, xc: f64, lambda_grid: &[f64]) -> Result<Vec<LocusPoint>> {
    lambda_grid
        .par_iter()
        .map(|&l| saddle_node_point(alpha1, alpha2, xc, l))
        .collect()
}

/// `(lambda1, lambda2)` by the explicit fold parametrization in its
/// common form, with `lambda` in the numerator of `lambda1`. It
/// traces the same curve as [`saddle_node_point`] at `1/lambda`.
pub fn saddle_node_reciprocal_map(alpha1: f64, alpha2: f64, xc: f64, lambda: f64) -> (f64, f64) {
    let k = 4.0 * xc * xc * alpha1 * alpha2 * alpha2 / ((1.0 + xc) * (1.0 + xc));
    ((k * lambda * lambda).cbrt() / 3.0, (k / lambda).cbrt() / 3.0)
}

pub fn bt_point(alpha1: f64, alpha2: f64, xc: f64) -> Result<LocusPoint> {
    let mut p = saddle_node_point(alpha1, alpha2, xc, bt_lambda(xc))?;
    p.kind = LocusKind::TakensBogdanov;
    let j = p.params.jac(p.equilibrium.state.x, p.equilibrium.state.y);
    p.diagnostics.insert("trace".into(), p.equilibrium.trace);
    p.diagnostics.insert("det".into(), p.equilibrium.det);
    p.diagnostics.insert("jac_norm".into(), j.norm());
    Ok(p)
}

/// `lambda` on the trace-zero set as a function of the equilibrium abscissa.
pub fn hopf_lambda_of_x0(x0: f64, xc: f64) -> f64 {
    ((1.0 + 2.0 * x0) - (1.0 + x0) * (1.0 - 2.0 * x0 / xc) / (1.0 - x0 / xc)) / (1.0 + x0)
}

/// `psi` making `x0` an equilibrium, `x0^2 (1 - x0/xc) / (1 + x0)^3`.
pub fn psi_of_x0(x0: f64, xc: f64) -> f64 {
    x0 * x0 * (1.0 - x0 / xc) / (1.0 + x0).powi(3)
}

/// The trace-zero parameter point whose equilibrium sits at `x0`.
pub fn hopf_point_at_x0(alpha1: f64, alpha2: f64, xc: f64, x0: f64) -> Result<(ModelParams, Equilibrium)> {
    check_gauge(alpha1, alpha2, xc)?;
    if !(x0 > 0.0 && x0 < xc) {
        return Err(Error::Domain(format!("x0 = {x0} outside (0, xc)")));
    }
    let lambda = hopf_lambda_of_x0(x0, xc);
    let psi = psi_of_x0(x0, xc);
    let p = ModelParams::from_composites(psi, lambda, alpha1, alpha2, xc)?;
    Ok((p, classify_at(&p, x0)))
}

/// The Hopf point at a given `lambda`, found on the `x0` parametrization
/// between `0` and the fold abscissa (where `det > 0`).
pub fn hopf_point_at_lambda(alpha1: f64, alpha2: f64, xc: f64, lambda: f64) -> Result<(ModelParams, Equilibrium)> {
    let (mut a, mut b) = (1e-12 * xc.min(1.0), equilibria::fold_abscissa(xc));
    let f = |x: f64| hopf_lambda_of_x0(x, xc) - lambda;
    let (mut fa, fb) = (f(a), f(b));
    if !(fa < 0.0 && fb > 0.0) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} is not on the Hopf branch (range {:.6} .. {:.6})",
            fa + lambda,
            fb + lambda
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) <= 4.0 * f64::EPSILON * m {
            a = m;
            b = m;
            break;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    hopf_point_at_x0(alpha1, alpha2, xc, 0.5 * (a + b))
}

/// The Hopf point on the line of fixed `lambda2`. Along the `x0`
/// parametrization `psi lambda = lambda2^3 / (a1 a2^2)` increases up to the
/// fold abscissa, so the root is bracketed there.
pub fn hopf_point_at_lambda2(alpha1: f64, alpha2: f64, xc: f64, lambda2: f64) -> Result<(ModelParams, Equilibrium)> {
    check_gauge(alpha1, alpha2, xc)?;
    let k = lambda2.powi(3) / (alpha1 * alpha2 * alpha2);
    let f = |x: f64| psi_of_x0(x, xc) * hopf_lambda_of_x0(x, xc) - k;
    let (mut a, mut b) = (1e-12 * xc.min(1.0), equilibria::fold_abscissa(xc));
    if !(f(a) < 0.0 && f(b) > 0.0) {
        return Err(Error::Domain(format!(
            "no Hopf point with det > 0 on lambda2 = {lambda2}"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 4.0 * f64::EPSILON * m {
            break;
        }
    }
    let x0 = 0.5 * (a + b);
    let (psi, lambda) = (psi_of_x0(x0, xc), hopf_lambda_of_x0(x0, xc));
    let mut p = ModelParams::from_composites(psi, lambda, alpha1, alpha2, xc)?;
    p.lambda2 = lambda2;
    p.lambda1 = lambda2 / lambda;
    Ok((p, classify_at(&p, x0)))
}

/// One root of the Hopf cubic at fixed `(psi, xc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfRoot {
    pub lambda: f64,
    pub kind: LocusKind,
    /// Abscissa of the equilibrium carrying the trace zero.
    pub x0: f64,
    pub residual: f64,
    /// `|trace| / ||J||` at that equilibrium.
    pub trace_rel: f64,
}

/// Positive real roots in `lambda` of the Hopf cubic, each classified by the
/// sign of det at the equilibrium with the smallest relative trace (ties
/// to the smaller abscissa). Classification uses the unit gauge
/// `alpha1 = alpha2 = 1`; it depends only on `(psi, lambda, xc)`.
pub fn hopf_lambda_roots(psi: f64, xc: f64) -> Result<Vec<HopfRoot>> {
    if !(psi > 0.0) {
        return Err(Error::Domain(format!("psi must be positive, got {psi}")));
    }
    let k = hopf_cubic(psi, xc);
    let mut out = Vec::new();
    for lambda in roots::real_roots(&roots::cubic_roots(k), 1e-9) {
        if lambda <= 0.0 {
            continue;
        }
        let p = ModelParams::from_composites(psi, lambda, 1.0, 1.0, xc)?;
        let best = equilibria::find_equilibria_with(&p, &EquilibriumOptions::strict())
            .into_iter()
            .filter(|e| e.state.x > 0.0)
            .map(|e| {
                let j = p.jac(e.state.x, e.state.y);
                (e.trace.abs() / j.norm(), e)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.state.x.total_cmp(&b.1.state.x)));
        if let Some((trace_rel, e)) = best {
            out.push(HopfRoot {
                lambda,
                kind: if e.det > 0.0 {
                    LocusKind::Hopf
                } else {
                    LocusKind::NeutralSaddle
                },
                x0: e.state.x,
                residual: hopf_cubic_residual(psi, lambda, xc),
                trace_rel,
            });
        }
    }
    Ok(out)
}

pub fn bautin_point(alpha1: f64, alpha2: f64, xc: f64) -> Result<LocusPoint> {
    check_gauge(alpha1, alpha2, xc)?;
    if xc <= 3.0 {
        return Err(Error::Domain(format!(
            "no Bautin point with positive lambda for xc = {xc} <= 3"
        )));
    }
    let (psi, lambda) = (bautin_psi(xc), bautin_lambda(xc));
    let p = ModelParams::from_composites(psi, lambda, alpha1, alpha2, xc)?;
    let eq = equilibria::find_equilibria_with(&p, &EquilibriumOptions::strict())
        .into_iter()
        .filter(|e| e.state.x > 0.0)
        .min_by(|a, b| {
            let ra = a.trace.abs() / p.jac(a.state.x, a.state.y).norm();
            let rb = b.trace.abs() / p.jac(b.state.x, b.state.y).norm();
            ra.total_cmp(&rb).then(a.state.x.total_cmp(&b.state.x))
        })
        .ok_or_else(|| Error::Convergence("no positive equilibrium at the Bautin parameters".into()))?;
    let nf = lyapunov::first_lyapunov(&p, &eq)?;
    let mut d = BTreeMap::new();
    d.insert("omega".into(), nf.omega);
    d.insert("ell1".into(), nf.ell1);
    d.insert("c1_norm".into(), nf.c1.norm());
    d.insert("hopf_residual".into(), hopf_cubic_residual(psi, lambda, xc));
    d.insert(
        "trace_rel".into(),
        eq.trace.abs() / p.jac(eq.state.x, eq.state.y).norm(),
    );
    Ok(LocusPoint {
        kind: LocusKind::Bautin,
        params: p,
        equilibrium: eq,
        diagnostics: d,
    })
}

/// A Hopf locus point at `lambda` with its normal-form diagnostics.
pub fn hopf_locus_point(alpha1: f64, alpha2: f64, xc: f64, lambda: f64) -> Result<LocusPoint> {
    let (p, eq) = hopf_point_at_lambda(alpha1, alpha2, xc, lambda)?;
    let nf = lyapunov::first_lyapunov(&p, &eq)?;
    let mut d = BTreeMap::new();
    d.insert("omega".into(), nf.omega);
    d.insert("ell1".into(), nf.ell1);
    d.insert("hopf_residual".into(), hopf_cubic_residual(p.psi(), p.lambda(), xc));
    Ok(LocusPoint {
        kind: LocusKind::Hopf,
        params: p,
        equilibrium: eq,
        diagnostics: d,
    })
}

pub const LOCI_CSV_HEADER: [&str; 11] = [
    "kind",
    "lambda1",
    "lambda2",
    "psi",
    "lambda",
    "xc",
    "x0",
    "y0",
    "omega",
    "ell1",
    "delta_rel",
];

/// Writes locus rows; absent diagnostics are empty cells.
pub fn write_loci_csv<W: std::io::Write>(w: W, points: &[LocusPoint]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(LOCI_CSV_HEADER)?;
    for pt in points {
        let p = &pt.params;
        let opt = |k: &str| pt.diag(k).map(fmt17).unwrap_or_default();
        wr.write_record([
            pt.kind.as_str().to_string(),
            fmt17(p.lambda1),
            fmt17(p.lambda2),
            fmt17(p.psi()),
            fmt17(p.lambda()),
            fmt17(p.xc),
            fmt17(pt.equilibrium.state.x),
            fmt17(pt.equilibrium.state.y),
            opt("omega"),
            opt("ell1"),
            fmt17(fold_residual(p.psi(), p.xc)),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const A1: f64 = 0.297312;
    const A2: f64 = 0.00318;
    const XC: f64 = 2500.0;

    #[test]
    fn bt_anchor() {
        let bt = bt_point(A1, A2, XC).unwrap();
        assert_eq!(bt.kind, LocusKind::TakensBogdanov);
        assert!((bt.params.lambda1 - 0.01).abs() < 1e-4 * 0.01);
        assert!((bt.params.lambda2 - 0.006672).abs() < 1e-4 * 0.006672);
        assert!((bt_lambda(XC) - 5006.0 / 7503.0).abs() < 1e-15);
        let e = bt.equilibrium;
        assert!((e.state.x - 1.9976).abs() < 1e-3 * 1.9976);
        assert!((e.state.y - 0.317619).abs() < 1e-3 * 0.317619);
        let n = bt.diag("jac_norm").unwrap();
        assert!(e.trace.abs() < 1e-8 * n && e.det.abs() < 1e-8 * n * n);
        assert!(e.trace * e.trace - 4.0 * e.det <= 1e-12 * n * n);
    }

    #[test]
    fn fold_points_are_double_roots() {
        let grid: Vec<f64> = (1..50).map(|k| 0.05 * k as f64).collect();
        for pt in saddle_node_curve(A1, A2, XC, &grid).unwrap() {
            assert!(pt.diag("delta_rel").unwrap() < 1e-10);
            assert!((pt.params.psi() - equilibria::fold_psi(XC)).abs() <= 1e-12 * pt.params.psi());
            assert!(pt.diag("double_root_p").unwrap() < 1e-12);
            assert!(pt.diag("double_root_dp").unwrap() < 1e-12);
            assert_eq!(pt.kind, LocusKind::SaddleNode);
        }
        let p = saddle_node_point(A1, A2, XC, 0.6672).unwrap();
        assert!((p.params.lambda1 - 0.01).abs() < 1e-4 && (p.params.lambda2 - 0.006672).abs() < 1e-4);
    }

    #[test]
    fn reciprocal_fold_parametrization() {
        for l in [0.2, 0.6672, 1.7] {
            let (l1, l2) = saddle_node_reciprocal_map(A1, A2, XC, 1.0 / l);
            let p = saddle_node_point(A1, A2, XC, l).unwrap().params;
            assert!((l1 - p.lambda1).abs() < 1e-14 && (l2 - p.lambda2).abs() < 1e-14);
        }
    }

    #[test]
    fn bt_lambda_on_grid_is_tagged() {
        let pts = saddle_node_curve(A1, A2, XC, &[0.5, bt_lambda(XC), 0.8]).unwrap();
        assert_eq!(pts[1].kind, LocusKind::TakensBogdanov);
        assert_eq!(pts[0].kind, LocusKind::SaddleNode);
    }

    #[test]
    fn bautin_values() {
        assert!((bautin_lambda(XC) - 2497.0 / 7503.0).abs() < 1e-15);
        assert!((bautin_lambda(XC) - 0.332800).abs() < 1e-6);
        assert!((bautin_psi(XC) - 0.073815).abs() < 1e-6);
        assert!(hopf_cubic_residual(bautin_psi(XC), bautin_lambda(XC), XC) < 1e-10);
        assert!(matches!(bautin_point(A1, A2, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bautin_point_has_vanishing_ell1() {
        let b = bautin_point(A1, A2, XC).unwrap();
        let l1 = b.diag("ell1").unwrap();
        assert!(l1.abs() < 1e-6 * b.diag("c1_norm").unwrap().max(1.0), "{l1}");
        assert!(b.diag("trace_rel").unwrap() < 1e-8);
        assert!(b.equilibrium.det > 0.0);
    }

    #[test]
    fn ell1_changes_sign_across_bautin() {
        let lb = bautin_lambda(XC);
        let below = hopf_locus_point(A1, A2, XC, lb - 1e-3).unwrap().diag("ell1").unwrap();
        let above = hopf_locus_point(A1, A2, XC, lb + 1e-3).unwrap().diag("ell1").unwrap();
        assert!(below > 0.0 && above < 0.0, "{below} {above}");
    }

    #[test]
    fn x0_parametrization_satisfies_hopf_cubic() {
        for x0 in [0.05, 0.3, 0.49, 1.0, 1.9, 3.0, 40.0] {
            let (lambda, psi) = (hopf_lambda_of_x0(x0, XC), psi_of_x0(x0, XC));
            if lambda > 0.0 {
                assert!(hopf_cubic_residual(psi, lambda, XC) < 1e-12, "x0 = {x0}");
            }
        }
    }

    #[test]
    fn roots_are_classified_by_det() {
        // Points from the x0 parametrization on both sides of the fold abscissa.
        for (x0, want) in [(0.6, LocusKind::Hopf), (10.0, LocusKind::NeutralSaddle)] {
            let psi = psi_of_x0(x0, XC);
            let lam = hopf_lambda_of_x0(x0, XC);
            let roots = hopf_lambda_roots(psi, XC).unwrap();
            let r = roots
                .iter()
                .min_by(|a, b| (a.lambda - lam).abs().total_cmp(&(b.lambda - lam).abs()))
                .unwrap();
            assert!((r.lambda - lam).abs() < 1e-8 * lam);
            assert_eq!(r.kind, want);
            assert!((r.x0 - x0).abs() < 1e-6 * x0);
            assert!(r.trace_rel < 1e-8);
            assert!(r.residual < 1e-9);
        }
    }

    #[test]
    fn hopf_membership_omega() {
        let (p, e) = hopf_point_at_lambda(A1, A2, XC, 0.45).unwrap();
        let n = p.jac(e.state.x, e.state.y).norm();
        assert!(e.trace.abs() < 1e-8 * n && e.det > 0.0);
        let nf = lyapunov::first_lyapunov(&p, &e).unwrap();
        assert!((nf.omega * nf.omega - e.det).abs() < 1e-12 * e.det);
    }

    #[test]
    fn hopf_on_fixed_lambda2_line() {
        let gh = bautin_point(A1, A2, XC).unwrap();
        let (p, e) = hopf_point_at_lambda2(A1, A2, XC, gh.params.lambda2).unwrap();
        assert!((p.lambda1 / gh.params.lambda1 - 1.0).abs() < 1e-9);
        assert!(e.trace.abs() < 1e-9 * p.jac(e.state.x, e.state.y).norm());
        assert!(hopf_point_at_lambda2(A1, A2, XC, 1.0).is_err());
    }

    #[test]
    fn classification_is_gauge_free() {
        // alpha1 -> alpha1 / k^2 with lambda1, lambda2 fixed multiplies psi by
        // k^2; the classification depends on (psi, lambda, xc) only.
        let (p, _) = hopf_point_at_x0(A1, A2, XC, 0.8).unwrap();
        let k = 1.3;
        let q = ModelParams::new(p.lambda1, p.lambda2, p.alpha1 / (k * k), p.alpha2, p.xc).unwrap();
        assert!((q.psi() / p.psi() - k * k).abs() < 1e-12);
        let r = ModelParams::from_composites(p.psi(), p.lambda(), 1.0, 1.0, XC).unwrap();
        let ep = equilibria::find_equilibria_with(&p, &EquilibriumOptions::strict());
        let er = equilibria::find_equilibria_with(&r, &EquilibriumOptions::strict());
        assert_eq!(ep.len(), er.len());
        for (a, b) in ep.iter().zip(&er) {
            assert!((a.state.x - b.state.x).abs() < 1e-9 * (1.0 + a.state.x));
            assert_eq!(a.det.signum(), b.det.signum());
        }
    }

    #[test]
    fn empty_for_no_positive_roots() {
        // For very large psi no trace-zero equilibrium has lambda > 0.
        let roots = hopf_lambda_roots(10.0, XC).unwrap();
        assert!(roots.iter().all(|r| r.lambda > 0.0));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let pts = vec![bt_point(A1, A2, XC).unwrap(), bautin_point(A1, A2, XC).unwrap()];
        let mut buf = Vec::new();
        write_loci_csv(&mut buf, &pts).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], LOCI_CSV_HEADER.join(","));
        assert!(lines[1].starts_with("takens_bogdanov,") && lines[2].starts_with("bautin,"));
        let mut empty = Vec::new();
        write_loci_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim(), LOCI_CSV_HEADER.join(","));
    }
}
