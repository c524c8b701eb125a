//! The elimination threshold: the stable manifold of the origin saddle,
//! continued backward in time until it meets `x = xc`.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::integrator::{self, Direction, Event, SolverOptions, Status};
use super::{integrate, EventSpec, Terminal};
use crate::equilibria;
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};

/// Offset of the manifold seed from the origin.
pub const SEED_OFFSET: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    /// `(x, h(x))` with strictly increasing `x`, from the seed out to `xc`.
    pub samples: Vec<(f64, f64)>,
    params: ModelParams,
}

impl ThresholdCurve {
    pub fn x_range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// `y_c = h(xc)`.
    pub fn y_c(&self) -> f64 {
        self.samples[self.samples.len() - 1].1
    }

    fn slope(&self, x: f64, y: f64) -> f64 {
        let f = self.params.field(x, y);
        f[1] / f[0]
    }

    fn bracket(&self, x: f64) -> usize {
        let n = self.samples.len();
        match self.samples.binary_search_by(|s| s.0.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// `h(x)` by cubic Hermite interpolation with slopes `dy/dx` taken from
    /// the field; `None` outside the sampled range.
    pub fn eval(&self, x: f64) -> Option<f64> {
        Some(self.eval_with_slope(x)?.0)
    }

    /// `(h(x), h'(x))` from the interpolant.
    pub fn eval_with_slope(&self, x: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.x_range();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = self.bracket(x);
        let (x0, y0) = self.samples[i];
        let (x1, y1) = self.samples[i + 1];
        let (m0, m1) = (self.slope(x0, y0), self.slope(x1, y1));
        let d = x1 - x0;
        let s = (x - x0) / d;
        let (s2, s3) = (s * s, s * s * s);
        let h = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d * m1;
        let dh = ((6.0 * s2 - 6.0 * s) * y0 + (-6.0 * s2 + 6.0 * s) * y1) / d
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (3.0 * s2 - 2.0 * s) * m1;
        Some((h, dh))
    }

    /// Largest relative residual `|h' f0 - f1| / |f|` of the interpolant,
    /// checked at the midpoint of every sample interval.
    pub fn max_residual(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| {
                let xm = 0.5 * (w[0].0 + w[1].0);
                let (h, dh) = self.eval_with_slope(xm).expect("midpoint in range");
                let f = self.params.field(xm, h);
                (dh * f[0] - f[1]).abs() / f[0].hypot(f[1]).max(1e-300)
            })
            .fold(0.0, f64::max)
    }
}

/// Direction of the stable eigenvector `(l1 + l2, a2)` of the origin.
pub fn stable_direction(params: &ModelParams) -> [f64; 2] {
    let v = [params.lambda1 + params.lambda2, params.alpha2];
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

pub fn threshold_curve(params: &ModelParams) -> Result<ThresholdCurve> {
    threshold_curve_with(params, SEED_OFFSET, &SolverOptions::default())
}

pub fn threshold_curve_with(params: &ModelParams, offset: f64, opts: &SolverOptions) -> Result<ThresholdCurve> {
    let interior: Vec<_> = equilibria::find_equilibria(params)
        .into_iter()
        .filter(|e| e.state.x > 0.0 && e.state.x <= params.xc)
        .collect();
    if !interior.is_empty() {
        return Err(Error::Precondition(format!(
            "{} equilibria inside the closed region; the threshold needs the origin to be the only one",
            interior.len()
        )));
    }
    let p = *params;
    let d = stable_direction(params);
    let seed = [offset * d[0], offset * d[1]];
    let xc = p.xc;
    let events = [
        Event::new(move |u: &[f64; 2]| u[0] - xc, Direction::Rising, true),
        Event::new(|u: &[f64; 2]| u[1] - 1e12, Direction::Rising, true),
    ];
    let o = SolverOptions { record: true, ..*opts };
    let sol = integrator::solve(|u| p.field(u[0], u[1]), seed, -1e9, &o, &events)?;
    match sol.status {
        Status::Terminal(0) => {}
        Status::Terminal(_) => {
            return Err(Error::Convergence(
                "manifold left through large y before reaching xc".into(),
            ))
        }
        Status::Completed => return Err(Error::Convergence("manifold did not reach xc".into())),
    }
    let samples: Vec<(f64, f64)> = sol.states.iter().map(|u| (u[0], u[1])).collect();
    for (k, w) in samples.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::GraphViolation(format!(
                "x stops increasing at sample {k}: {} -> {}",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(ThresholdCurve { samples, params: p })
}

/// Which side of `h` a seed starts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSeed {
    pub x: f64,
    pub y: f64,
    pub side: Side,
    pub terminal: Terminal,
    /// Below exits through `y = 0`, above escapes.
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub seeds: Vec<ClassifiedSeed>,
    pub misclassified: usize,
}

/// `n` seeds on each side of the curve at `y = h(x) (1 -+ rel_offset)`, with
/// `x` geometric between `1e-3 xc` and `0.9 xc`, integrated until they exit.
pub fn classify_sides(
    params: &ModelParams,
    curve: &ThresholdCurve,
    n: usize,
    rel_offset: f64,
) -> Result<Classification> {
    let xc = params.xc;
    let (lo, hi) = (1e-3 * xc, 0.9 * xc);
    let xs: Vec<f64> = (0..n)
        .map(|k| {
            if n == 1 {
                lo
            } else {
                lo * (hi / lo).powf(k as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let spec = EventSpec::classifying(params);
    let opts = SolverOptions::default();
    let jobs: Vec<(f64, Side)> = xs.iter().flat_map(|&x| [(x, Side::Below), (x, Side::Above)]).collect();
    let seeds = jobs
        .par_iter()
        .map(|&(x, side)| {
            let h = curve
                .eval(x)
                .ok_or_else(|| Error::Domain(format!("x = {x} outside the threshold curve")))?;
            let y = match side {
                Side::Below => h * (1.0 - rel_offset),
                Side::Above => h * (1.0 + rel_offset),
            };
            let tr = integrate(params, State::new(x, y), 1e7, &spec, &opts)?;
            let want = match side {
                Side::Below => Terminal::LeftRoiY0,
                Side::Above => Terminal::EscapedY,
            };
            Ok(ClassifiedSeed {
                x,
                y,
                side,
                terminal: tr.terminal,
                correct: tr.terminal == want,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let misclassified = seeds.iter().filter(|s| !s.correct).count();
    Ok(Classification { seeds, misclassified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::REFERENCE_PARAMS;

    fn strong_decay() -> ModelParams {
        REFERENCE_PARAMS.with(crate::ParamId::Lambda1, 0.1)
    }

    #[test]
    fn rejects_interior_equilibria() {
        let p = REFERENCE_PARAMS.with(crate::ParamId::Lambda1, 0.008);
        assert!(matches!(threshold_curve(&p), Err(Error::Precondition(_))));
    }

    #[test]
    fn curve_reaches_xc_and_is_a_graph() {
        let c = threshold_curve(&strong_decay()).unwrap();
        let (lo, hi) = c.x_range();
        assert!(lo < 1e-6);
        assert!((hi - strong_decay().xc).abs() < 1e-9 * hi);
        assert!(c.y_c() > 0.0);
        assert!(c.max_residual() < 1e-6, "{}", c.max_residual());
    }

    #[test]
    fn x_decreases_forward_along_curve() {
        let p = strong_decay();
        let c = threshold_curve(&p).unwrap();
        for &(x, y) in c.samples.iter().skip(1) {
            assert!(p.field(x, y)[0] < 0.0);
        }
    }

    #[test]
    fn seed_offset_halving() {
        let p = strong_decay();
        let a = threshold_curve(&p).unwrap().y_c();
        let b = threshold_curve_with(&p, SEED_OFFSET / 2.0, &SolverOptions::default())
            .unwrap()
            .y_c();
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn forward_from_sample_approaches_origin() {
        let p = strong_decay();
        let c = threshold_curve(&p).unwrap();
        let k = c.samples.iter().position(|s| s.0 > 1.0).unwrap();
        let (x, y) = c.samples[k];
        let tr = integrate(
            &p,
            State::new(x, y),
            2000.0,
            &EventSpec::none(),
            &SolverOptions::default(),
        )
        .unwrap();
        let closest = tr.states.iter().map(|s| s.x.hypot(s.y)).fold(f64::INFINITY, f64::min);
        assert!(closest < 1e-6, "{closest}");
    }

    #[test]
    fn sides_classify() {
        let p = strong_decay();
        let c = threshold_curve(&p).unwrap();
        let spec = EventSpec::classifying(&p);
        for &x in &[10.0, 500.0] {
            let h = c.eval(x).unwrap();
            let below = integrate(&p, State::new(x, h * 0.99), 1e6, &spec, &SolverOptions::default()).unwrap();
            let above = integrate(&p, State::new(x, h * 1.01), 1e6, &spec, &SolverOptions::default()).unwrap();
            assert_eq!(below.terminal, Terminal::LeftRoiY0);
            assert_eq!(above.terminal, Terminal::EscapedY);
        }
    }

    #[test]
    fn two_sided_classification() {
        let p = strong_decay();
        let c = threshold_curve(&p).unwrap();
        let r = classify_sides(&p, &c, 4, 0.01).unwrap();
        assert_eq!(r.seeds.len(), 8);
        assert_eq!(r.misclassified, 0);
    }
}
