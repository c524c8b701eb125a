//! Equilibrium branches in one parameter and the fold / Hopf curves in the
//! `(lambda1, lambda2)` plane.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::palc::{self, ContinuationOptions, Problem, RawBranch};
use super::{Branch, BranchKind, BranchPoint, SpecialPoint, Tag};
use crate::equilibria::{self, EquilibriumOptions};
use crate::error::{Error, Result};
use crate::loci::LocusPoint;
use crate::lyapunov;
use crate::model::{ModelParams, ParamId, State};

/// Box in the `(lambda1, lambda2)` plane, with an optional band in `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWindow {
    pub lambda1: [f64; 2],
    pub lambda2: [f64; 2],
    #[serde(default)]
    pub lambda: Option<[f64; 2]>,
}

impl PlaneWindow {
    pub fn contains(&self, l1: f64, l2: f64) -> bool {
        let inside = |v: f64, r: [f64; 2]| v >= r[0] && v <= r[1];
        inside(l1, self.lambda1) && inside(l2, self.lambda2) && self.lambda.map_or(true, |r| inside(l2 / l1, r))
    }

    /// A box a factor `k` wide around `params` in both directions.
    pub fn around(params: &ModelParams, k: f64) -> Self {
        PlaneWindow {
            lambda1: [params.lambda1 / k, params.lambda1 * k],
            lambda2: [params.lambda2 / k, params.lambda2 * k],
            lambda: None,
        }
    }
}

struct EquilibriumProblem {
    base: ModelParams,
    free: ParamId,
    window: [f64; 2],
    scale: [f64; 2],
}

impl EquilibriumProblem {
    fn params(&self, u: &DVector<f64>) -> ModelParams {
        self.base.with(self.free, u[2].exp())
    }
}

impl Problem for EquilibriumProblem {
    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.params(u).field(u[0], u[1]);
        Ok(DVector::from_vec(vec![f[0] / self.scale[0], f[1] / self.scale[1]]))
    }

    fn jacobian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let p = self.params(u);
        let j = p.jac(u[0], u[1]);
        let dp = p.field_param_derivative(self.free, u[0], u[1]);
        let v = u[2].exp();
        let mut m = DMatrix::zeros(2, 3);
        for r in 0..2 {
            m[(r, 0)] = j[(r, 0)] / self.scale[r];
            m[(r, 1)] = j[(r, 1)] / self.scale[r];
            m[(r, 2)] = dp[r] * v / self.scale[r];
        }
        Ok(m)
    }

    fn tests(&self, u: &DVector<f64>) -> Vec<f64> {
        let j = self.params(u).jac(u[0], u[1]);
        let det = j.determinant();
        vec![det, if det > 0.0 { j.trace() } else { f64::NAN }]
    }

    fn reject(&self, u: &DVector<f64>) -> Option<String> {
        let v = u[2].exp();
        if !(v >= self.window[0] && v <= self.window[1]) {
            Some("left the parameter window".into())
        } else if u[0] <= 0.0 {
            Some("reached x = 0".into())
        } else {
            None
        }
    }
}

fn finish(
    raw: RawBranch,
    kind: BranchKind,
    names: &[&str],
    tags: &[Tag],
    point: impl Fn(&DVector<f64>) -> (ModelParams, State),
) -> Branch {
    let mut special = Vec::new();
    let points = raw
        .points
        .iter()
        .enumerate()
        .map(|(i, rp)| {
            if let Some(k) = rp.zero_of {
                special.push(SpecialPoint { index: i, tag: tags[k] });
            }
            let (params, state) = point(&rp.u);
            BranchPoint {
                params,
                state,
                cycle: None,
                tests: rp.tests.clone(),
                residual: rp.residual,
                arclength: rp.arclength,
            }
        })
        .collect();
    Branch {
        kind,
        test_names: names.iter().map(|s| s.to_string()).collect(),
        points,
        special_points: special,
        end: raw.end,
    }
}

/// Equilibrium branch in the parameter `free`, from the equilibrium near
/// `start`, towards increasing (`forward`) or decreasing values. Tags SN at
/// zeros of det J and H at zeros of trace J where det J > 0.
pub fn continue_equilibria(
    params: &ModelParams,
    start_state: State,
    free: ParamId,
    window: [f64; 2],
    forward: bool,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let v0 = params.get(free);
    if !(v0 >= window[0] && v0 <= window[1]) {
        return Err(Error::Precondition(format!(
            "{free:?} = {v0} outside the window {window:?}"
        )));
    }
    let mut prob = EquilibriumProblem {
        base: *params,
        free,
        window,
        scale: [params.lambda1, params.lambda2],
    };
    let u0 = DVector::from_vec(vec![start_state.x, start_state.y, v0.ln()]);
    // Fix the parameter for the first correction, then turn along the branch.
    let c = palc::correct(&prob, &u0, &DVector::from_vec(vec![0.0, 0.0, 1.0]), opts)?;
    let sign = if forward { 1.0 } else { -1.0 };
    let t = palc::tangent(&prob, &c.u, &DVector::from_vec(vec![0.0, 0.0, sign]))?;
    let raw = palc::run(&mut prob, c, t, opts)?;
    let base = *params;
    Ok(finish(
        raw,
        BranchKind::Equilibrium,
        &["det", "trace"],
        &[Tag::SaddleNode, Tag::Hopf],
        |u| (base.with(free, u[2].exp()), State::new(u[0], u[1])),
    ))
}

fn plane_params(base: &ModelParams, u: &DVector<f64>) -> ModelParams {
    ModelParams {
        lambda1: u[2].exp(),
        lambda2: u[3].exp(),
        ..*base
    }
}

struct FoldProblem {
    base: ModelParams,
    window: PlaneWindow,
    scale: [f64; 2],
}

impl Problem for FoldProblem {
    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let p = plane_params(&self.base, u);
        let f = p.field(u[0], u[1]);
        let det = p.jac(u[0], u[1]).determinant();
        Ok(DVector::from_vec(vec![
            f[0] / self.scale[0],
            f[1] / self.scale[1],
            det / (self.scale[0] * self.scale[1]),
        ]))
    }

    fn tests(&self, u: &DVector<f64>) -> Vec<f64> {
        vec![plane_params(&self.base, u).jac(u[0], u[1]).trace()]
    }

    fn reject(&self, u: &DVector<f64>) -> Option<String> {
        (!self.window.contains(u[2].exp(), u[3].exp())).then(|| "left the plane window".into())
    }
}

struct HopfProblem {
    base: ModelParams,
    window: PlaneWindow,
    scale: [f64; 2],
}

impl Problem for HopfProblem {
    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let p = plane_params(&self.base, u);
        let f = p.field(u[0], u[1]);
        let tr = p.jac(u[0], u[1]).trace();
        Ok(DVector::from_vec(vec![
            f[0] / self.scale[0],
            f[1] / self.scale[1],
            tr / (self.scale[0] + self.scale[1]),
        ]))
    }

    fn tests(&self, u: &DVector<f64>) -> Vec<f64> {
        let p = plane_params(&self.base, u);
        let eq = equilibria::classify(&p, State::new(u[0], u[1]), &EquilibriumOptions::strict());
        vec![lyapunov::first_lyapunov(&p, &eq).map(|nf| nf.ell1).unwrap_or(f64::NAN)]
    }

    fn reject(&self, u: &DVector<f64>) -> Option<String> {
        let p = plane_params(&self.base, u);
        if !self.window.contains(p.lambda1, p.lambda2) {
            Some("left the plane window".into())
        } else if p.jac(u[0], u[1]).determinant() <= 0.0 {
            Some("det J crossed zero; neutral saddles beyond".into())
        } else {
            None
        }
    }
}

fn plane_start(start: &LocusPoint) -> DVector<f64> {
    let p = &start.params;
    let s = start.equilibrium.state;
    DVector::from_vec(vec![s.x, s.y, p.lambda1.ln(), p.lambda2.ln()])
}

/// `d(log lambda) > 0` when `direction > 0`.
fn lambda_hint(direction: f64) -> DVector<f64> {
    DVector::from_vec(vec![0.0, 0.0, -direction.signum(), direction.signum()])
}

/// Fold curve from a fold point; `direction > 0` follows increasing lambda.
/// BT is tagged where trace J changes sign.
pub fn continue_fold_curve(
    start: &LocusPoint,
    direction: f64,
    window: PlaneWindow,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let base = start.params;
    let mut prob = FoldProblem {
        base,
        window,
        scale: [base.lambda1, base.lambda2],
    };
    let (c, t) = start_plane(&prob, start, direction, opts)?;
    let raw = palc::run(&mut prob, c, t, opts)?;
    Ok(finish(
        raw,
        BranchKind::FoldCurve,
        &["trace"],
        &[Tag::TakensBogdanov],
        |u| (plane_params(&base, u), State::new(u[0], u[1])),
    ))
}

fn start_plane<P: Problem>(
    p: &P,
    start: &LocusPoint,
    direction: f64,
    opts: &ContinuationOptions,
) -> Result<(palc::Corrected, DVector<f64>)> {
    let u0 = plane_start(start);
    // Hold (log lambda1 + log lambda2) fixed while correcting the start.
    let hold = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]);
    let c = palc::correct(p, &u0, &hold.normalize(), opts)?;
    let t = palc::tangent(p, &c.u, &lambda_hint(direction))?;
    Ok((c, t))
}

/// Hopf curve from a Hopf (or BT) point; GH is tagged where the first
/// Lyapunov coefficient changes sign. Stops where det J reaches zero.
pub fn continue_hopf_curve(
    start: &LocusPoint,
    direction: f64,
    window: PlaneWindow,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let base = start.params;
    let mut prob = HopfProblem {
        base,
        window,
        scale: [base.lambda1, base.lambda2],
    };
    let (c, t) = start_plane(&prob, start, direction, opts)?;
    let raw = palc::run(&mut prob, c, t, opts)?;
    Ok(finish(raw, BranchKind::HopfCurve, &["ell1"], &[Tag::Bautin], |u| {
        (plane_params(&base, u), State::new(u[0], u[1]))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loci;

    const A1: f64 = 0.297312;
    const A2: f64 = 0.00318;
    const XC: f64 = 2500.0;

    fn fold_lambda1(l2: f64) -> f64 {
        equilibria::fold_psi(XC) * A1 * A2 * A2 / (l2 * l2)
    }

    #[test]
    fn equilibrium_branch_through_fold() {
        let l2 = 0.006672 * 0.999;
        let lf = fold_lambda1(l2);
        let p = ModelParams::new(0.9 * lf, l2, A1, A2, XC).unwrap();
        let eqs = equilibria::find_equilibria_with(&p, &EquilibriumOptions::strict());
        let start = eqs[1].state;
        let b = continue_equilibria(
            &p,
            start,
            ParamId::Lambda1,
            [0.5 * lf, 2.0 * lf],
            true,
            &ContinuationOptions::default(),
        )
        .unwrap();
        assert_eq!(b.count(Tag::SaddleNode), 1, "{:?}", b.special_points);
        let sn = b.tagged(Tag::SaddleNode).next().unwrap();
        assert!(
            (sn.params.lambda1 - lf).abs() < 1e-6 * lf,
            "{} vs {lf}",
            sn.params.lambda1
        );
        assert!(b.max_residual() <= 1e-9);
    }

    #[test]
    fn no_special_points_in_quiet_window() {
        let p = ModelParams::new(0.002, 0.0041, A1, A2, XC).unwrap();
        let e = equilibria::find_equilibria(&p)[1].state;
        let b = continue_equilibria(
            &p,
            e,
            ParamId::Lambda1,
            [0.0019, 0.0021],
            true,
            &ContinuationOptions::default(),
        )
        .unwrap();
        assert!(b.special_points.is_empty(), "{:?}", b.special_points);
        assert_eq!(b.end, "left the parameter window");
    }

    #[test]
    fn hopf_tag_at_bautin_parameters() {
        let gh = loci::bautin_point(A1, A2, XC).unwrap();
        let p = gh.params.with(ParamId::Lambda1, gh.params.lambda1 * 0.98);
        let l1 = gh.params.lambda1;
        let b = continue_equilibria(
            &p,
            gh.equilibrium.state,
            ParamId::Lambda1,
            [0.97 * l1, 1.03 * l1],
            true,
            &ContinuationOptions::default(),
        )
        .unwrap();
        let h: Vec<_> = b.tagged(Tag::Hopf).collect();
        assert_eq!(h.len(), 1);
        assert!((h[0].params.lambda1 - l1).abs() < 1e-6 * l1);
    }

    #[test]
    fn fold_curve_carries_one_bt() {
        let lo = loci::saddle_node_point(A1, A2, XC, 0.5).unwrap();
        let psi = equilibria::fold_psi(XC);
        let window = PlaneWindow {
            lambda1: [1e-6, 1.0],
            lambda2: [1e-6, 1.0],
            lambda: Some([0.49, 0.8]),
        };
        let b = continue_fold_curve(&lo, 1.0, window, &ContinuationOptions::default()).unwrap();
        assert_eq!(b.count(Tag::TakensBogdanov), 1);
        let bt = b.tagged(Tag::TakensBogdanov).next().unwrap();
        let want = loci::bt_point(A1, A2, XC).unwrap().params;
        assert!((bt.params.lambda1 / want.lambda1 - 1.0).abs() < 1e-6);
        assert!((bt.params.lambda2 / want.lambda2 - 1.0).abs() < 1e-6);
        for pt in &b.points {
            assert!((pt.params.psi() / psi - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn hopf_curve_from_bt_finds_gh() {
        let bt = loci::bt_point(A1, A2, XC).unwrap();
        let window = PlaneWindow {
            lambda1: [1e-4, 1.0],
            lambda2: [1e-4, 1.0],
            lambda: Some([0.2, 0.7]),
        };
        let b = continue_hopf_curve(&bt, -1.0, window, &ContinuationOptions::default()).unwrap();
        assert_eq!(b.count(Tag::Bautin), 1, "{}", b.end);
        let gh = b.tagged(Tag::Bautin).next().unwrap();
        let want = loci::bautin_point(A1, A2, XC).unwrap().params;
        assert!((gh.params.lambda1 / want.lambda1 - 1.0).abs() < 1e-5);
        assert!((gh.params.lambda2 / want.lambda2 - 1.0).abs() < 1e-5);
        for pt in &b.points {
            assert!(loci::hopf_cubic_residual(pt.params.psi(), pt.params.lambda(), XC) < 1e-8);
        }
    }
}
