mod common;

use common::{hopf_oracle_points, rel, A1, A2, XC};
use delisi::continuation::{
    continue_cycles, continue_equilibria, continue_fold_curve, continue_hopf_curve, lpc_curve, Branch,
    ContinuationOptions, CycleOptions, PlaneWindow, Tag,
};
use delisi::dynamics::integrator::{solve, Direction, Event, SolverOptions};
use delisi::equilibria::{self, find_equilibria};
use delisi::lyapunov::first_lyapunov;
use delisi::{loci, ParamId};

fn plane() -> PlaneWindow {
    PlaneWindow {
        lambda1: [2e-3, 5e-2],
        lambda2: [1e-3, 2e-2],
        lambda: None,
    }
}

fn plane_rel(a: &delisi::ModelParams, b: &delisi::ModelParams) -> f64 {
    rel(a.lambda1, b.lambda1).max(rel(a.lambda2, b.lambda2))
}

fn below_gh() -> f64 {
    loci::bautin_point(A1, A2, XC).unwrap().params.lambda2 * (1.0 - 0.023)
}

#[test]
fn newton_oracle_points_satisfy_hopf_cubic() {
    let (pts, _) = hopf_oracle_points(50, 17);
    assert_eq!(pts.len(), 50);
    for (l2, u) in pts {
        let p = delisi::ModelParams::new(u[2], l2, A1, A2, XC).unwrap();
        assert!(loci::hopf_cubic_residual(p.psi(), p.lambda(), XC) < 1e-10);
        let j = p.jac(u[0], u[1]);
        assert!(j.trace().abs() < 1e-9 * j.amax());
    }
}

#[test]
fn fold_curve_bt_tag_matches_closed_form() {
    let bt = loci::bt_point(A1, A2, XC).unwrap();
    let start = loci::saddle_node_point(A1, A2, XC, 1.25 * loci::bt_lambda(XC)).unwrap();
    let opts = ContinuationOptions::default();
    let tags: Vec<_> = [1.0, -1.0]
        .iter()
        .flat_map(|&d| {
            let b = continue_fold_curve(&start, d, plane(), &opts).unwrap();
            b.tagged(Tag::TakensBogdanov).cloned().collect::<Vec<_>>()
        })
        .collect();
    assert_eq!(tags.len(), 1);
    assert!(plane_rel(&tags[0].params, &bt.params) < 1e-5);
}

#[test]
fn hopf_curve_gh_tag_matches_closed_form() {
    let bt = loci::bt_point(A1, A2, XC).unwrap();
    let gh = loci::bautin_point(A1, A2, XC).unwrap();
    let b = continue_hopf_curve(&bt, -1.0, plane(), &ContinuationOptions::default()).unwrap();
    let tags: Vec<_> = b.tagged(Tag::Bautin).collect();
    assert_eq!(tags.len(), 1);
    assert!(plane_rel(&tags[0].params, &gh.params) < 1e-5);
    assert!(b.max_residual() <= 1e-9);
}

fn equilibrium_branches(l2: f64, l1: f64, window: [f64; 2]) -> Vec<Branch> {
    let p = delisi::model::REFERENCE_PARAMS
        .with(ParamId::Lambda2, l2)
        .with(ParamId::Lambda1, l1);
    let opts = ContinuationOptions::default();
    let mut out = Vec::new();
    for e in find_equilibria(&p).into_iter().filter(|e| e.state.x > 0.0) {
        for fwd in [true, false] {
            out.push(continue_equilibria(&p, e.state, ParamId::Lambda1, window, fwd, &opts).unwrap());
        }
    }
    out
}

#[test]
fn equilibrium_branch_tags_match_loci() {
    let l2 = below_gh();
    let (hp, _) = loci::hopf_point_at_lambda2(A1, A2, XC, l2).unwrap();
    let fold_l1 = equilibria::fold_psi(XC) * A1 * A2 * A2 / (l2 * l2);
    let branches = equilibrium_branches(l2, 0.9 * hp.lambda1, [0.5 * hp.lambda1, 1.2 * fold_l1]);
    let mut hopf = Vec::new();
    let mut folds = Vec::new();
    for b in &branches {
        assert!(b.max_residual() <= 1e-9);
        hopf.extend(b.tagged(Tag::Hopf).map(|p| p.params.lambda1));
        folds.extend(b.tagged(Tag::SaddleNode).map(|p| p.params.lambda1));
    }
    assert!(
        hopf.iter().any(|&l| rel(l, hp.lambda1) < 1e-5),
        "{hopf:?} vs {}",
        hp.lambda1
    );
    assert!(folds.iter().any(|&l| rel(l, fold_l1) < 1e-5), "{folds:?} vs {fold_l1}");
}

#[test]
fn rotation_period_near_hopf() {
    let (p, e) = loci::hopf_point_at_lambda(A1, A2, XC, 0.45).unwrap();
    let nf = first_lyapunov(&p, &e).unwrap();
    let (x0, y0) = (e.state.x, e.state.y);
    let r = 1e-4 * x0.hypot(y0);
    let evs = [Event::new(move |u: &[f64; 2]| u[0] - x0, Direction::Rising, false)];
    let t = 3.0 * 2.0 * std::f64::consts::PI / nf.omega;
    let sol = solve(
        |u: &[f64; 2]| p.field(u[0], u[1]),
        [x0, y0 + r],
        t,
        &SolverOptions::with_tolerances(1e-12, 1e-15),
        &evs,
    )
    .unwrap();
    assert!(sol.events.len() >= 2);
    let period = sol.events[1].t - sol.events[0].t;
    let want = 2.0 * std::f64::consts::PI / nf.omega;
    assert!(rel(period, want) < 1e-3, "{period} vs {want}");
}

#[test]
fn supercritical_amplitude_grows_like_square_root() {
    let (p, e) = loci::hopf_point_at_lambda(A1, A2, XC, 0.45).unwrap();
    let opts = ContinuationOptions {
        max_points: 40,
        h0: 1e-4,
        h_max: 1e-3,
        ..Default::default()
    };
    let b = continue_cycles(
        &p,
        &e,
        ParamId::Lambda1,
        [0.5 * p.lambda1, 2.0 * p.lambda1],
        &CycleOptions::default(),
        &opts,
    )
    .unwrap();
    let pts: Vec<(f64, f64)> = b
        .points
        .iter()
        .map(|q| {
            (
                (q.params.lambda1 - p.lambda1).abs(),
                q.cycle.as_ref().unwrap().amplitude(),
            )
        })
        .filter(|&(d, a)| d > 0.0 && a < 0.05 * e.state.x && a > 1e-4 * e.state.x)
        .map(|(d, a)| (d.ln(), a.ln()))
        .collect();
    assert!(pts.len() >= 5, "{} usable points", pts.len());
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |s, q| (s.0 + q.0 / n, s.1 + q.1 / n));
    let slope =
        pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum::<f64>() / pts.iter().map(|q| (q.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 0.5).abs() < 0.05, "exponent {slope}");
}

#[test]
fn lpc_points_have_unit_multiplier() {
    let (q, e) = loci::hopf_point_at_lambda2(A1, A2, XC, below_gh()).unwrap();
    let copts = CycleOptions::default();
    let opts = ContinuationOptions {
        max_points: 120,
        ..Default::default()
    };
    let fam = continue_cycles(&q, &e, ParamId::Lambda1, plane().lambda1, &copts, &opts).unwrap();
    let lpc = fam.tagged(Tag::Lpc).next().expect("LPC below GH").clone();
    assert!((lpc.cycle.as_ref().unwrap().nontrivial_floquet - 1.0).abs() < 1e-6);
    let curve = lpc_curve(
        &lpc,
        1.0,
        plane(),
        &copts,
        &ContinuationOptions {
            max_points: 30,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(curve.points.len() > 5);
    for pt in &curve.points {
        let c = pt.cycle.as_ref().unwrap();
        assert!((c.nontrivial_floquet - 1.0).abs() < 1e-6);
        assert!(pt.residual <= 1e-9);
    }
    let l2: Vec<f64> = curve.points.iter().map(|p| p.params.lambda2).collect();
    assert!(l2.last().unwrap() > &l2[0]);
}

#[test]
fn bautin_point_has_vanishing_ell1() {
    let gh = loci::bautin_point(A1, A2, XC).unwrap();
    let nf = first_lyapunov(&gh.params, &gh.equilibrium).unwrap();
    let side = |l: f64| {
        let (p, e) = loci::hopf_point_at_lambda(A1, A2, XC, l).unwrap();
        first_lyapunov(&p, &e).unwrap().ell1
    };
    let (lo, hi) = (side(0.99 * gh.params.lambda()), side(1.01 * gh.params.lambda()));
    assert!(lo > 0.0 && hi < 0.0);
    assert!(nf.ell1.abs() < 1e-6 * lo.abs().max(hi.abs()));
}
