//! Bundles of trajectories and overlays for one parameter point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::chart_jacobian;
use super::threshold::ThresholdCurve;
use super::{integrate, EventSpec, SolverOptions, Trajectory};
use crate::equilibria::{self, Equilibrium};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};

/// A closed orbit to draw, with its stability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleOverlay {
    pub samples: Vec<State>,
    pub stable: bool,
}

/// An equilibrium of the chart at `y = +inf`, drawn on the top frame edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinityMarker {
    pub x: f64,
    pub attracting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub params: ModelParams,
    pub trajectories: Vec<Trajectory>,
    pub equilibria: Vec<Equilibrium>,
    pub cycles: Vec<CycleOverlay>,
    pub infinity: Vec<InfinityMarker>,
    pub threshold: Option<ThresholdCurve>,
}

impl PhasePortrait {
    pub fn with_cycles(mut self, cycles: Vec<CycleOverlay>) -> Self {
        self.cycles = cycles;
        self
    }

    pub fn with_threshold(mut self, curve: ThresholdCurve) -> Self {
        self.threshold = Some(curve);
        self
    }
}

/// The chart equilibria on `v = 0`: the degenerate origin (hyperbolic
/// sector) and `x = xc`.
pub fn infinity_markers(params: &ModelParams) -> Vec<InfinityMarker> {
    let j = chart_jacobian(params, params.xc, 0.0);
    vec![
        InfinityMarker {
            x: 0.0,
            attracting: false,
        },
        InfinityMarker {
            x: params.xc,
            attracting: j.trace() < 0.0 && j.determinant() > 0.0,
        },
    ]
}

/// Integrates every seed forward for `t_max` with the classifying events.
/// Seeds outside the closed region of interest are rejected.
pub fn phase_portrait(params: &ModelParams, seeds: &[State], t_max: f64) -> Result<PhasePortrait> {
    if let Some(s) = seeds
        .iter()
        .find(|s| !(s.x >= 0.0 && s.x <= params.xc && s.y >= 0.0 && s.x.is_finite() && s.y.is_finite()))
    {
        return Err(Error::Config(format!(
            "seed ({}, {}) lies outside the region of interest",
            s.x, s.y
        )));
    }
    let spec = EventSpec::classifying(params);
    let opts = SolverOptions::with_tolerances(1e-9, 1e-12);
    let trajectories = seeds
        .par_iter()
        .map(|&s| integrate(params, s, t_max, &spec, &opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhasePortrait {
        params: *params,
        trajectories,
        equilibria: equilibria::find_equilibria(params),
        cycles: Vec::new(),
        infinity: infinity_markers(params),
        threshold: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Terminal;
    use crate::model::REFERENCE_PARAMS;

    #[test]
    fn axis_seeds_exit() {
        let p = REFERENCE_PARAMS;
        let seeds = [State::new(1.0, 0.0), State::new(100.0, 0.0)];
        let pp = phase_portrait(&p, &seeds, 100.0).unwrap();
        assert!(pp.trajectories.iter().all(|t| t.terminal == Terminal::LeftRoiY0));
    }

    #[test]
    fn outside_seed_rejected() {
        let p = REFERENCE_PARAMS;
        assert!(phase_portrait(&p, &[State::new(-1.0, 1.0)], 1.0).is_err());
        assert!(phase_portrait(&p, &[State::new(1.0, -1.0)], 1.0).is_err());
    }

    #[test]
    fn xc_at_infinity_attracts() {
        let m = infinity_markers(&REFERENCE_PARAMS);
        assert!(m[1].attracting && !m[0].attracting);
    }
}
