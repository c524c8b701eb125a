//! Trajectories of the polynomial system, the chart at infinity, the
//! elimination-threshold curve and phase portraits.

pub mod chart;
pub mod integrator;
pub mod portrait;
pub mod threshold;

use serde::{Deserialize, Serialize};

use crate::equilibria;
use crate::error::Result;
use crate::model::{ModelParams, State};
pub use integrator::{Direction, Event, SolverOptions, Status};

pub use chart::{
    chart_jacobian, infinity_chart_field, origin_sector_flow, pushed_forward_chart_field, reduced_flow_at_infinity,
    InfinityChartState,
};
pub use portrait::{phase_portrait, PhasePortrait};
pub use threshold::{classify_sides, threshold_curve, Classification, ThresholdCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    TimeLimit,
    LeftRoiY0,
    LeftRoiXc,
    EscapedY,
    Converged,
}

impl Terminal {
    pub fn as_str(&self) -> &'static str {
        match self {
            Terminal::TimeLimit => "time_limit",
            Terminal::LeftRoiY0 => "left_roi_y0",
            Terminal::LeftRoiXc => "left_roi_xc",
            Terminal::EscapedY => "escaped_y",
            Terminal::Converged => "converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub terminal: Terminal,
}

impl Trajectory {
    pub fn last(&self) -> State {
        *self.states.last().expect("trajectory has at least one state")
    }
}

/// Which boundary events stop an integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventSpec {
    pub y_zero: bool,
    pub x_xc: bool,
    /// Stop once `y` exceeds this value.
    pub escape_y: Option<f64>,
    /// Stop once the speed drops below this value.
    pub converge_speed: Option<f64>,
}

impl Default for EventSpec {
    fn default() -> Self {
        EventSpec {
            y_zero: true,
            x_xc: true,
            escape_y: None,
            converge_speed: None,
        }
    }
}

impl EventSpec {
    pub fn none() -> Self {
        EventSpec {
            y_zero: false,
            x_xc: false,
            escape_y: None,
            converge_speed: None,
        }
    }

    /// Boundary exits plus the default escape bound for `params`.
    pub fn classifying(params: &ModelParams) -> Self {
        EventSpec {
            escape_y: Some(escape_bound(params)),
            ..Default::default()
        }
    }
}

/// `10^3 max(1, max y0)` over the equilibria.
pub fn escape_bound(params: &ModelParams) -> f64 {
    let ys = equilibria::find_equilibria(params)
        .iter()
        .map(|e| e.state.y)
        .fold(1.0f64, f64::max);
    1e3 * ys
}

/// Integrates the polynomial system for signed time `t_max` (negative runs
/// backward) with the requested stopping events.
pub fn integrate(
    params: &ModelParams,
    s0: State,
    t_max: f64,
    events: &EventSpec,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    let p = *params;
    let xc = p.xc;
    let mut evs: Vec<Event<'_, 2>> = Vec::new();
    let mut kinds = Vec::new();
    if events.y_zero {
        evs.push(Event::new(|u: &[f64; 2]| u[1], Direction::Falling, true));
        kinds.push(Terminal::LeftRoiY0);
    }
    if events.x_xc {
        evs.push(Event::new(move |u: &[f64; 2]| u[0] - xc, Direction::Rising, true));
        kinds.push(Terminal::LeftRoiXc);
    }
    if let Some(b) = events.escape_y {
        evs.push(Event::new(move |u: &[f64; 2]| u[1] - b, Direction::Rising, true));
        kinds.push(Terminal::EscapedY);
    }
    if let Some(v) = events.converge_speed {
        evs.push(Event::new(
            move |u: &[f64; 2]| {
                let f = p.field(u[0], u[1]);
                f[0].hypot(f[1]) - v
            },
            Direction::Falling,
            true,
        ));
        kinds.push(Terminal::Converged);
    }
    let sol = integrator::solve(|u| p.field(u[0], u[1]), s0.to_array(), t_max, opts, &evs)?;
    let terminal = match sol.status {
        Status::Completed => Terminal::TimeLimit,
        Status::Terminal(i) => kinds[i],
    };
    let (times, states) = if sol.times.is_empty() {
        (vec![0.0, sol.t_final], vec![s0, State::from_array(sol.final_state)])
    } else {
        (sol.times, sol.states.into_iter().map(State::from_array).collect())
    };
    Ok(Trajectory {
        times,
        states,
        terminal,
    })
}

/// Writes `t, x, y, terminal` rows; the terminal tag is on the last row only.
pub fn write_trajectory_csv<W: std::io::Write>(w: W, traj: &Trajectory) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "x", "y", "terminal"])?;
    let n = traj.states.len();
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let tag = if i + 1 == n { traj.terminal.as_str() } else { "" };
        wr.write_record([
            crate::io::fmt17(*t),
            crate::io::fmt17(s.x),
            crate::io::fmt17(s.y),
            tag.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
