//! Equilibria of the polynomial system and the catastrophe surface.
//!
//! A nontrivial equilibrium has `y0 = a2 x0 / (l2 (1 + x0))` with `x0` a root
//! of `x0^2 (1 - x0/xc) - psi (1 + x0)^3`, so everything below depends on the
//! parameters only through `(psi, xc)` except the final `y0`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, State};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    TrivialSaddle,
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    CenterCandidate,
    Degenerate,
}

impl EquilibriumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumKind::TrivialSaddle => "trivial_saddle",
            EquilibriumKind::Saddle => "saddle",
            EquilibriumKind::StableNode => "stable_node",
            EquilibriumKind::UnstableNode => "unstable_node",
            EquilibriumKind::StableFocus => "stable_focus",
            EquilibriumKind::UnstableFocus => "unstable_focus",
            EquilibriumKind::CenterCandidate => "center_candidate",
            EquilibriumKind::Degenerate => "degenerate",
        }
    }

    pub fn is_focus_like(&self) -> bool {
        matches!(
            self,
            EquilibriumKind::StableFocus | EquilibriumKind::UnstableFocus | EquilibriumKind::CenterCandidate
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub state: State,
    pub eigenvalues: [Complex64; 2],
    pub trace: f64,
    pub det: f64,
    pub kind: EquilibriumKind,
}

/// `c3 x^3 + c2 x^2 + c1 x + c0 = x^2 (1 - x/xc) - psi (1 + x)^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoefficients {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CubicCoefficients {
    pub fn for_composites(psi: f64, xc: f64) -> Self {
        CubicCoefficients {
            c3: -(1.0 / xc + psi),
            c2: 1.0 - 3.0 * psi,
            c1: -3.0 * psi,
            c0: -psi,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.c3, self.c2, self.c1, self.c0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        roots::horner(&self.as_array(), x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        roots::horner(&self.as_array(), x).1
    }

    pub fn roots(&self) -> Vec<Complex64> {
        roots::cubic_roots(self.as_array())
    }
}

/// Tolerances for root merging and classification; all relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquilibriumOptions {
    /// `|det| < det_tol * ||J||` marks an equilibrium degenerate.
    pub det_tol: f64,
    /// `|trace| < trace_tol * ||J||` (with `det > 0`) marks a center candidate.
    pub trace_tol: f64,
    /// `|Delta| < fold_tol * 4 xc^2` collapses the two nontrivial roots (or a
    /// nearly real complex pair) into one degenerate equilibrium at the fold
    /// abscissa.
    pub fold_tol: f64,
    /// Also report equilibria with `x0 < 0`.
    pub include_negative: bool,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            det_tol: 1e-8,
            trace_tol: 1e-8,
            fold_tol: 5e-4,
            include_negative: false,
        }
    }
}

impl EquilibriumOptions {
    /// No fold merging beyond exact double roots.
    pub fn strict() -> Self {
        EquilibriumOptions {
            fold_tol: 1e-12,
            ..Default::default()
        }
    }
}

pub fn equilibrium_cubic(params: &ModelParams) -> CubicCoefficients {
    CubicCoefficients::for_composites(params.psi(), params.xc)
}

/// `Delta = 4 xc^2 - 27 (1 + xc)^2 psi`.
pub fn discriminant(params: &ModelParams) -> f64 {
    discriminant_composite(params.psi(), params.xc)
}

pub fn discriminant_composite(psi: f64, xc: f64) -> f64 {
    4.0 * xc * xc - 27.0 * (1.0 + xc) * (1.0 + xc) * psi
}

/// The `psi` value on the fold, `4 xc^2 / (27 (1 + xc)^2)`.
pub fn fold_psi(xc: f64) -> f64 {
    4.0 * xc * xc / (27.0 * (1.0 + xc) * (1.0 + xc))
}

/// Abscissa of the double root on the fold: the maximiser of
/// `x^2 (1 - x/xc) / (1 + x)^3`, which is `2 xc / (xc + 3)`.
pub fn fold_abscissa(xc: f64) -> f64 {
    2.0 * xc / (xc + 3.0)
}

/// `y0` from `x0`.
pub fn equilibrium_ordinate(params: &ModelParams, x0: f64) -> f64 {
    params.alpha2 * x0 / (params.lambda2 * (1.0 + x0))
}

/// Classifies the equilibrium at `state` from the Jacobian spectrum.
pub fn classify(params: &ModelParams, state: State, opts: &EquilibriumOptions) -> Equilibrium {
    let j = params.jac(state.x, state.y);
    let trivial = state.x == 0.0 && state.y == 0.0;
    classify_matrix(&j, state, trivial, opts)
}

pub(crate) fn classify_matrix(j: &Matrix2<f64>, state: State, trivial: bool, opts: &EquilibriumOptions) -> Equilibrium {
    let trace = j.trace();
    let det = j.determinant();
    let scale = j.norm();
    let disc = trace * trace - 4.0 * det;
    let eigenvalues = if disc >= 0.0 {
        let s = disc.sqrt();
        [
            Complex64::new((trace - s) / 2.0, 0.0),
            Complex64::new((trace + s) / 2.0, 0.0),
        ]
    } else {
        let s = (-disc).sqrt();
        [
            Complex64::new(trace / 2.0, -s / 2.0),
            Complex64::new(trace / 2.0, s / 2.0),
        ]
    };
    let kind = if trivial && det < 0.0 {
        EquilibriumKind::TrivialSaddle
    } else if det.abs() < opts.det_tol * scale {
        EquilibriumKind::Degenerate
    } else if det < 0.0 {
        EquilibriumKind::Saddle
    } else if trace.abs() < opts.trace_tol * scale {
        EquilibriumKind::CenterCandidate
    } else if disc >= 0.0 {
        if trace < 0.0 {
            EquilibriumKind::StableNode
        } else {
            EquilibriumKind::UnstableNode
        }
    } else if trace < 0.0 {
        EquilibriumKind::StableFocus
    } else {
        EquilibriumKind::UnstableFocus
    };
    Equilibrium {
        state,
        eigenvalues,
        trace,
        det,
        kind,
    }
}

/// Nontrivial equilibrium abscissae (sorted). Near the fold the two sheet
/// roots are collapsed into the fold abscissa; the returned flag marks that.
pub fn nontrivial_abscissae(psi: f64, xc: f64, opts: &EquilibriumOptions) -> Vec<(f64, bool)> {
    let cubic = CubicCoefficients::for_composites(psi, xc);
    let all = cubic.roots();
    let reals = roots::real_roots(&all, 1e-9);
    let near_fold = discriminant_composite(psi, xc).abs() < opts.fold_tol * 4.0 * xc * xc;
    let mut out = Vec::new();
    for &r in &reals {
        if r < 0.0 && !opts.include_negative {
            continue;
        }
        if r == 0.0 {
            continue;
        }
        if near_fold && r > 0.0 {
            continue;
        }
        out.push((r, false));
    }
    if near_fold {
        out.push((fold_abscissa(xc), true));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// All equilibria with default tolerances.
pub fn find_equilibria(params: &ModelParams) -> Vec<Equilibrium> {
    find_equilibria_with(params, &EquilibriumOptions::default())
}

/// The origin plus every admissible root of the cubic, sorted by `x0`.
pub fn find_equilibria_with(params: &ModelParams, opts: &EquilibriumOptions) -> Vec<Equilibrium> {
    let mut out = vec![classify(params, State::new(0.0, 0.0), opts)];
    for (x0, folded) in nontrivial_abscissae(params.psi(), params.xc, opts) {
        let state = State::new(x0, equilibrium_ordinate(params, x0));
        let mut eq = classify(params, state, opts);
        if folded {
            eq.kind = EquilibriumKind::Degenerate;
        }
        out.push(eq);
    }
    out.sort_by(|a, b| a.state.x.total_cmp(&b.state.x));
    out
}

/// One point of a sheet of the catastrophe surface over `(psi, xc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint {
    pub psi: f64,
    pub x0: f64,
}

/// All nonnegative real roots of the cubic at each `psi`.
pub fn sample_catastrophe_surface(xc: f64, psi_grid: &[f64]) -> crate::Result<Vec<SheetPoint>> {
    if let Some(bad) = psi_grid.iter().find(|p| !(**p >= 0.0)) {
        return Err(crate::Error::Domain(format!("psi grid values must be >= 0, got {bad}")));
    }
    let rows: Vec<Vec<SheetPoint>> = psi_grid
        .par_iter()
        .map(|&psi| {
            let cubic = CubicCoefficients::for_composites(psi, xc);
            roots::real_roots(&cubic.roots(), 1e-7)
                .into_iter()
                .filter(|&r| r >= -1e-12)
                .map(|x0| SheetPoint { psi, x0: x0.max(0.0) })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::REFERENCE_PARAMS;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn count_positive(psi: f64, xc: f64) -> usize {
        nontrivial_abscissae(psi, xc, &EquilibriumOptions::strict())
            .iter()
            .filter(|(x, _)| *x > 0.0)
            .count()
    }

    #[test]
    fn cubic_expansion_matches_definition() {
        let c = CubicCoefficients::for_composites(0.07, 300.0);
        for &x in &[0.0f64, 0.3, 2.0, 17.0] {
            let direct = x * x * (1.0 - x / 300.0) - 0.07 * (1.0 + x).powi(3);
            assert!((c.eval(x) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn psi_zero_limit() {
        let c = CubicCoefficients::for_composites(0.0, 50.0);
        let r = roots::real_roots(&c.roots(), 1e-7);
        assert_eq!(r.len(), 2, "{r:?}");
        assert!(r[0].abs() < 1e-7 && (r[1] - 50.0).abs() < 1e-9);
        let s = sample_catastrophe_surface(50.0, &[0.0]).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn random_root_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let xc: f64 = rng.gen_range(5.0..5000.0);
            let psi = rng.gen_range(0.0..1.0) * fold_psi(xc);
            let c = CubicCoefficients::for_composites(psi, xc);
            for r in roots::real_roots(&c.roots(), 1e-9) {
                let res = r * r * (1.0 - r / xc) - psi * (1.0 + r).powi(3);
                let scale = (r * r).max(psi * (1.0 + r).powi(3)).max(1.0);
                assert!(res.abs() < 1e-9 * scale, "{res} at {r}");
            }
        }
    }

    #[test]
    fn origin_is_trivial_saddle() {
        let eqs = find_equilibria(&REFERENCE_PARAMS);
        let o = eqs[0];
        assert_eq!(o.state, State::new(0.0, 0.0));
        assert_eq!(o.kind, EquilibriumKind::TrivialSaddle);
        assert!((o.eigenvalues[0].re + REFERENCE_PARAMS.lambda1).abs() < 1e-15);
        assert!((o.eigenvalues[1].re - REFERENCE_PARAMS.lambda2).abs() < 1e-15);
    }

    #[test]
    fn reference_values_give_one_degenerate_equilibrium() {
        let eqs = find_equilibria(&REFERENCE_PARAMS);
        assert_eq!(eqs.len(), 2, "{eqs:?}");
        let e = eqs[1];
        assert_eq!(e.kind, EquilibriumKind::Degenerate);
        assert!((e.state.x - 1.9976).abs() < 1e-3 * 1.9976);
        assert!((e.state.y - 0.317619).abs() < 1e-3 * 0.317619);
    }

    #[test]
    fn above_fold_only_origin() {
        let p = REFERENCE_PARAMS;
        let target = 2.0 * fold_psi(p.xc);
        let q = p.with(crate::ParamId::Lambda1, p.lambda1 * target / p.psi());
        assert!(discriminant(&q) < 0.0);
        let eqs = find_equilibria(&q);
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].kind, EquilibriumKind::TrivialSaddle);
    }

    #[test]
    fn discriminant_examples() {
        let p = REFERENCE_PARAMS;
        assert!(discriminant_composite(fold_psi(p.xc), p.xc).abs() < 1e-6);
        assert!(discriminant(&p).abs() / (4.0 * p.xc * p.xc) < 3e-4);
        assert_eq!(discriminant_composite(0.0, p.xc), 4.0 * p.xc * p.xc);
    }

    #[test]
    fn fold_brackets() {
        let xc = 2500.0;
        let f = fold_psi(xc);
        assert_eq!(count_positive(f * (1.0 - 1e-6), xc), 2);
        assert_eq!(count_positive(f * (1.0 + 1e-6), xc), 0);
        let s = sample_catastrophe_surface(xc, &[f * (1.0 - 1e-6), f * (1.0 + 1e-6)]).unwrap();
        assert_eq!(s.iter().filter(|p| p.psi < f).count(), 2);
        assert_eq!(s.iter().filter(|p| p.psi > f).count(), 0);
    }

    #[test]
    fn root_count_parity_along_grid() {
        let xc = 2500.0;
        let f = fold_psi(xc);
        let grid: Vec<f64> = (1..200).map(|i| f * (i as f64 + 0.5) / 100.0).collect();
        let counts: Vec<usize> = grid.iter().map(|&p| count_positive(p, xc)).collect();
        for w in counts.windows(2) {
            assert!(w[0] == w[1] || w[0] == w[1] + 2, "{counts:?}");
        }
        assert_eq!(counts[0], 2);
        assert_eq!(*counts.last().unwrap(), 0);
    }

    #[test]
    fn fold_is_a_double_root() {
        for &xc in &[4.0, 30.0, 2500.0] {
            let c = CubicCoefficients::for_composites(fold_psi(xc), xc);
            let r = fold_abscissa(xc);
            assert!(c.eval(r).abs() < 1e-12);
            assert!(c.derivative(r).abs() < 1e-12);
        }
    }

    #[test]
    fn at_most_two_positive_equilibria() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let xc = rng.gen_range(1.0..3000.0);
            let psi = rng.gen_range(0.0..0.2);
            assert!(count_positive(psi, xc) <= 2);
        }
    }

    #[test]
    fn equilibria_residuals() {
        let p = REFERENCE_PARAMS.with(crate::ParamId::Lambda1, 0.008);
        let eqs = find_equilibria(&p);
        assert_eq!(eqs.len(), 3);
        for e in &eqs {
            let v = p.field(e.state.x, e.state.y);
            assert!(v[0].abs().max(v[1].abs()) < 1e-10, "{v:?}");
        }
        assert_eq!(eqs[2].kind, EquilibriumKind::Saddle);
    }

    #[test]
    fn classification_matches_original_system() {
        // Compare against the linearisation of the original model in (x, ybar)
        // with ybar = y^3; the factor 1 + x > 0 preserves the type.
        // Equilibria coincide for both parameter sets, the spectra only for
        // the equivalent one.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = REFERENCE_PARAMS;
        for _ in 0..50 {
            let p = base.with(crate::ParamId::Lambda1, rng.gen_range(0.004..0.0099));
            for e in find_equilibria_with(&p, &EquilibriumOptions::strict()).iter().skip(1) {
                let xb = e.state.x;
                let yb = e.state.y.powi(3);
                let q = p.original_equivalent();
                let f = |x: f64, y: f64| crate::model::eval_original_field(&q, State::new(x, y)).unwrap();
                let mut j = Matrix2::zeros();
                let hx = 1e-7 * xb;
                let hy = 1e-7 * yb;
                let (fp, fm) = (f(xb + hx, yb), f(xb - hx, yb));
                j[(0, 0)] = (fp[0] - fm[0]) / (2.0 * hx);
                j[(1, 0)] = (fp[1] - fm[1]) / (2.0 * hx);
                let (fp, fm) = (f(xb, yb + hy), f(xb, yb - hy));
                j[(0, 1)] = (fp[0] - fm[0]) / (2.0 * hy);
                j[(1, 1)] = (fp[1] - fm[1]) / (2.0 * hy);
                assert_eq!(j.determinant().signum(), e.det.signum());
                if e.det > 0.0 {
                    assert_eq!(j.trace().signum(), e.trace.signum());
                    let disc_o = j.trace().powi(2) - 4.0 * j.determinant();
                    let disc_p = e.trace.powi(2) - 4.0 * e.det;
                    assert_eq!(disc_o.signum(), disc_p.signum());
                }
            }
        }
    }
}
