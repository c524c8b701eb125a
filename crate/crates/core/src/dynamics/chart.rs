//! The chart `(x, v = x/y)` at `y = +inf` with time `dt/dt' = v^2`, and the
//! polar blow-up of its origin.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinityChartState {
    pub x: f64,
    pub v: f64,
    pub tprime: f64,
}

impl InfinityChartState {
    pub fn new(x: f64, v: f64) -> Self {
        InfinityChartState { x, v, tprime: 0.0 }
    }

    /// Chart coordinates of an affine point with `y != 0`.
    pub fn from_affine(x: f64, y: f64) -> Self {
        InfinityChartState::new(x, x / y)
    }
}

/// The chart field in closed form:
///
/// ```text
/// dx/dt' = -l1 x (1 + x) v^2 + a1 x^3 (1 - x/xc)
/// dv/dt' = v x (a1 x (1 - x/xc) - l2) + a2 v^2 - v^3 (l1 (1 + x) + l2)
/// ```
pub fn infinity_chart_field(params: &ModelParams, c: InfinityChartState) -> [f64; 2] {
    let ModelParams {
        lambda1: l1,
        lambda2: l2,
        alpha1: a1,
        alpha2: a2,
        xc,
    } = *params;
    let (x, v) = (c.x, c.v);
    [
        -l1 * x * (1.0 + x) * v * v + a1 * x.powi(3) * (1.0 - x / xc),
        v * x * (a1 * x * (1.0 - x / xc) - l2) + a2 * v * v - v.powi(3) * (l1 * (1.0 + x) + l2),
    ]
}

/// Exact Jacobian of [`infinity_chart_field`] with respect to `(x, v)`.
pub fn chart_jacobian(params: &ModelParams, x: f64, v: f64) -> Matrix2<f64> {
    let ModelParams {
        lambda1: l1,
        lambda2: l2,
        alpha1: a1,
        alpha2: a2,
        xc,
    } = *params;
    Matrix2::new(
        -l1 * (1.0 + 2.0 * x) * v * v + a1 * (3.0 * x * x - 4.0 * x.powi(3) / xc),
        -2.0 * l1 * x * (1.0 + x) * v,
        v * (2.0 * a1 * x - 3.0 * a1 * x * x / xc - l2) - l1 * v.powi(3),
        x * (a1 * x * (1.0 - x / xc) - l2) + 2.0 * a2 * v - 3.0 * v * v * (l1 * (1.0 + x) + l2),
    )
}

/// The polynomial field carried into the chart directly: with `y = x/v`,
/// `dx/dt' = v^2 x'` and `dv/dt' = v^2 (x'/y - x y'/y^2)`. Needs `x, v != 0`.
pub fn pushed_forward_chart_field(params: &ModelParams, c: InfinityChartState) -> [f64; 2] {
    let (x, v) = (c.x, c.v);
    let y = x / v;
    let f = params.field(x, y);
    [v * v * f[0], v * v * (f[0] / y - x * f[1] / (y * y))]
}

/// Closed form of [`pushed_forward_chart_field`], valid up to `v = 0`:
/// `dv/dt' = a1 x^2 (1 - x/xc) v - (l1 + l2)(1 + x) v^3 + a2 v^4`.
pub fn derived_chart_field(params: &ModelParams, c: InfinityChartState) -> [f64; 2] {
    let ModelParams {
        lambda1: l1,
        lambda2: l2,
        alpha1: a1,
        alpha2: a2,
        xc,
    } = *params;
    let (x, v) = (c.x, c.v);
    [
        -l1 * x * (1.0 + x) * v * v + a1 * x.powi(3) * (1.0 - x / xc),
        a1 * x * x * (1.0 - x / xc) * v - (l1 + l2) * (1.0 + x) * v.powi(3) + a2 * v.powi(4),
    ]
}

pub fn derived_chart_jacobian(params: &ModelParams, x: f64, v: f64) -> Matrix2<f64> {
    let ModelParams {
        lambda1: l1,
        lambda2: l2,
        alpha1: a1,
        alpha2: a2,
        xc,
    } = *params;
    Matrix2::new(
        -l1 * (1.0 + 2.0 * x) * v * v + a1 * (3.0 * x * x - 4.0 * x.powi(3) / xc),
        -2.0 * l1 * x * (1.0 + x) * v,
        a1 * (2.0 * x - 3.0 * x * x / xc) * v - (l1 + l2) * v.powi(3),
        a1 * x * x * (1.0 - x / xc) - 3.0 * (l1 + l2) * (1.0 + x) * v * v + 4.0 * a2 * v.powi(3),
    )
}

/// Relative max-norm mismatch between the closed-form chart field and the
/// pushed-forward polynomial field at `c`.
pub fn chart_consistency(params: &ModelParams, c: InfinityChartState) -> f64 {
    let a = infinity_chart_field(params, c);
    let b = pushed_forward_chart_field(params, c);
    let scale = b[0].abs().max(b[1].abs()).max(1e-300);
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs()) / scale
}

/// Both readings of the flow restricted to `v = 0`: the restriction of the
/// chart field, `a1 x^3 (1 - x/xc)`, and the alternative reduced form `x^3 (1 - x)`.
pub fn reduced_flow_at_infinity(params: &ModelParams, x: f64) -> (f64, f64) {
    (
        infinity_chart_field(params, InfinityChartState::new(x, 0.0))[0],
        x.powi(3) * (1.0 - x),
    )
}

/// `d theta/dt` at `r = 0` of the polar blow-up of the chart origin,
/// `-l2 cos(theta) sin(theta)`.
pub fn origin_sector_flow(params: &ModelParams, theta_grid: &[f64]) -> Vec<f64> {
    theta_grid
        .iter()
        .map(|&th| -params.lambda2 * th.cos() * th.sin())
        .collect()
}

/// Everything the `infinity-check` report prints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfinityReport {
    pub linearization_closed_form: [[f64; 2]; 2],
    pub linearization_pushed_forward: [[f64; 2]; 2],
    pub expected_diagonal: [f64; 2],
    pub max_chart_consistency: f64,
    pub reduced_from_chart: Vec<(f64, f64)>,
    pub reduced_alternative: Vec<(f64, f64)>,
    pub sector_max: f64,
}

fn to_rows(m: Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Builds the report at `xc`, sampling consistency at the given affine points.
pub fn infinity_report(params: &ModelParams, affine_points: &[(f64, f64)]) -> InfinityReport {
    let xc = params.xc;
    let max_chart_consistency = affine_points
        .iter()
        .map(|&(x, y)| chart_consistency(params, InfinityChartState::from_affine(x, y)))
        .fold(0.0f64, f64::max);
    let xs: Vec<f64> = (1..=8).map(|k| xc * k as f64 / 5.0).collect();
    let thetas: Vec<f64> = (1..100)
        .map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / 100.0)
        .collect();
    InfinityReport {
        linearization_closed_form: to_rows(chart_jacobian(params, xc, 0.0)),
        linearization_pushed_forward: to_rows(derived_chart_jacobian(params, xc, 0.0)),
        expected_diagonal: [-xc * xc * params.alpha1, -xc * params.lambda2],
        max_chart_consistency,
        reduced_from_chart: xs.iter().map(|&x| (x, reduced_flow_at_infinity(params, x).0)).collect(),
        reduced_alternative: xs.iter().map(|&x| (x, reduced_flow_at_infinity(params, x).1)).collect(),
        sector_max: origin_sector_flow(params, &thetas)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::REFERENCE_PARAMS;

    #[test]
    fn xc_is_chart_equilibrium() {
        let p = REFERENCE_PARAMS;
        let f = infinity_chart_field(&p, InfinityChartState::new(p.xc, 0.0));
        assert_eq!(f, [0.0, 0.0]);
    }

    #[test]
    fn closed_form_linearization_is_diagonal() {
        let p = REFERENCE_PARAMS;
        let j = chart_jacobian(&p, p.xc, 0.0);
        let want = Matrix2::new(-p.xc * p.xc * p.alpha1, 0.0, 0.0, -p.xc * p.lambda2);
        assert!((j - want).abs().max() <= 1e-10 * want.abs().max());
    }

    #[test]
    fn chart_jacobians_match_differences() {
        let p = REFERENCE_PARAMS;
        for &(x, v) in &[(3.0, 0.2), (1200.0, 0.01), (2400.0, 1.5)] {
            for (field, jac) in [
                (
                    infinity_chart_field as fn(&ModelParams, InfinityChartState) -> [f64; 2],
                    chart_jacobian(&p, x, v),
                ),
                (derived_chart_field, derived_chart_jacobian(&p, x, v)),
            ] {
                for k in 0..2 {
                    let h = 1e-4 * if k == 0 { x } else { v };
                    let (mut a, mut b) = (InfinityChartState::new(x, v), InfinityChartState::new(x, v));
                    if k == 0 {
                        a.x += h;
                        b.x -= h;
                    } else {
                        a.v += h;
                        b.v -= h;
                    }
                    let (fa, fb) = (field(&p, a), field(&p, b));
                    for i in 0..2 {
                        let fd = (fa[i] - fb[i]) / (2.0 * h);
                        assert!(
                            (fd - jac[(i, k)]).abs() <= 1e-6 * jac.abs().max(),
                            "{fd} vs {}",
                            jac[(i, k)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn v_zero_invariant() {
        let p = REFERENCE_PARAMS;
        for &x in &[0.5, 10.0, 3000.0] {
            assert_eq!(infinity_chart_field(&p, InfinityChartState::new(x, 0.0))[1], 0.0);
            assert_eq!(derived_chart_field(&p, InfinityChartState::new(x, 0.0))[1], 0.0);
        }
    }

    #[test]
    fn closed_form_push_forward() {
        let p = REFERENCE_PARAMS;
        for &(x, y) in &[(2.0, 50.0), (1000.0, 1e4), (2400.0, 3e3)] {
            let c = InfinityChartState::from_affine(x, y);
            let a = derived_chart_field(&p, c);
            let b = pushed_forward_chart_field(&p, c);
            for i in 0..2 {
                assert!((a[i] - b[i]).abs() <= 1e-12 * b[i].abs());
            }
        }
    }

    #[test]
    fn first_components_agree() {
        let p = REFERENCE_PARAMS;
        let c = InfinityChartState::from_affine(700.0, 2e4);
        let a = infinity_chart_field(&p, c);
        let b = pushed_forward_chart_field(&p, c);
        assert!((a[0] - b[0]).abs() <= 1e-12 * b[0].abs());
    }

    #[test]
    fn reduced_flow_attracts_to_xc() {
        let p = REFERENCE_PARAMS;
        assert!(reduced_flow_at_infinity(&p, 0.9 * p.xc).0 > 0.0);
        assert!(reduced_flow_at_infinity(&p, 1.1 * p.xc).0 < 0.0);
        // The alternative form has its zero at 1 instead.
        assert!(reduced_flow_at_infinity(&p, 0.9 * p.xc).1 < 0.0);
    }

    #[test]
    fn sector_flow_values() {
        let p = REFERENCE_PARAMS;
        let v = origin_sector_flow(
            &p,
            &[std::f64::consts::FRAC_PI_4, 1e-12, std::f64::consts::FRAC_PI_2 - 1e-12],
        );
        assert!((v[0] + p.lambda2 / 2.0).abs() < 1e-16);
        assert!(v[1].abs() < 1e-13 && v[2].abs() < 1e-13);
        let grid: Vec<f64> = (1..=100)
            .map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / 101.0)
            .collect();
        assert!(origin_sector_flow(&p, &grid).iter().all(|w| *w < 0.0));
    }
}
