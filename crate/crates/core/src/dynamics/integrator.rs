//! Dormand-Prince 5(4) with step-size control and event location.
//!
//! Works for any autonomous system on `[f64; N]`; the const generic lets the
//! same code drive the planar field and its variational extensions. Event
//! roots are refined by Illinois iteration on genuine RK steps taken from the
//! start of the bracketing step, so located states carry the full order of
//! the method.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Keep every accepted step in the output.
    pub record: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            record: true,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        SolverOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }

    pub fn quiet(mut self) -> Self {
        self.record = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

impl Direction {
    fn matches(self, g0: f64, g1: f64, from_zero: bool) -> bool {
        let z = from_zero && g0 == 0.0;
        match self {
            Direction::Rising => (g0 < 0.0 && g1 >= 0.0) || (z && g1 > 0.0),
            Direction::Falling => (g0 > 0.0 && g1 <= 0.0) || (z && g1 < 0.0),
            Direction::Either => {
                Direction::Rising.matches(g0, g1, from_zero) || Direction::Falling.matches(g0, g1, from_zero)
            }
        }
    }
}

/// A scalar event function `g(u)`; a hit is a sign change in `direction`.
/// For terminal events, starting exactly on `g = 0` and leaving in
/// `direction` also counts, as a hit at the start of the step.
pub struct Event<'a, const N: usize> {
    pub g: Box<dyn Fn(&[f64; N]) -> f64 + 'a>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(g: impl Fn(&[f64; N]) -> f64 + 'a, direction: Direction, terminal: bool) -> Self {
        Event {
            g: Box::new(g),
            direction,
            terminal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub state: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    Terminal(usize),
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub events: Vec<EventHit<N>>,
    pub status: Status,
    pub t_final: f64,
    pub final_state: [f64; N],
    pub steps: usize,
}

#[inline]
fn axpy<const N: usize>(u: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *u;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

/// One DP5 step; returns the fifth-order state, the error vector
/// (times `h`), and the final stage (FSAL).
fn dp_step<const N: usize, F>(f: &F, u: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], [f64; N])
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k2 = f(&axpy(u, h, &[(A21, k1)]));
    let k3 = f(&axpy(u, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(&axpy(u, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(&axpy(u, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(&axpy(
        u,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let u5 = axpy(u, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(&u5);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (u5, err, k7)
}

fn err_norm<const N: usize>(err: &[f64; N], u0: &[f64; N], u1: &[f64; N], o: &SolverOptions) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * u0[i].abs().max(u1[i].abs());
        s += (err[i] / sc).powi(2);
    }
    (s / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(f: &F, u0: &[f64; N], f0: &[f64; N], o: &SolverOptions) -> f64
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * u0[i].abs();
        d0 += (u0[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let u1 = axpy(u0, h0, &[(1.0, f0)]);
    let f1 = f(&u1);
    let mut d2 = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * u0[i].abs();
        d2 += ((f1[i] - f0[i]) / sc).powi(2);
    }
    let d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(o.h_max)
}

/// Integrates `u' = f(u)` from `u0` over `[0, t_end]`; `t_end < 0` runs
/// backward in time.
pub fn solve<const N: usize, F>(
    f: F,
    u0: [f64; N],
    t_end: f64,
    opts: &SolverOptions,
    events: &[Event<'_, N>],
) -> Result<Solution<N>>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    if u0.iter().any(|v| !v.is_finite()) || !t_end.is_finite() {
        return Err(Error::Domain("non-finite initial state or end time".into()));
    }
    let dir = if t_end >= 0.0 { 1.0 } else { -1.0 };
    let mut t = 0.0f64;
    let mut u = u0;
    let mut k1 = f(&u);
    let mut times = Vec::new();
    let mut states = Vec::new();
    if opts.record {
        times.push(t);
        states.push(u);
    }
    let mut hits = Vec::new();
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(&u)).collect();
    let mut h = opts.h0.unwrap_or_else(|| initial_step(&f, &u, &k1, opts)).abs();
    let mut steps = 0usize;

    while dir * (t_end - t) > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::Convergence(format!(
                "step limit {} reached at t = {t}",
                opts.max_steps
            )));
        }
        h = h.min(opts.h_max).min((t_end - t).abs());
        let h_floor = 1e-14 * t.abs().max(1.0);
        if h < h_floor {
            return Err(Error::StepUnderflow {
                t,
                msg: format!("step {h:e} below floor at state {u:?}"),
            });
        }
        let (u_new, err, k7) = dp_step(&f, &u, &k1, dir * h);
        let en = err_norm(&err, &u, &u_new, opts);
        if !en.is_finite() || u_new.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            continue;
        }
        if en > 1.0 {
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            continue;
        }
        steps += 1;
        let t_new = if (t_end - (t + dir * h)).abs() <= 1e-15 * t_end.abs() {
            t_end
        } else {
            t + dir * h
        };

        // Events: take the earliest sign change within this step.
        let g_new: Vec<f64> = events.iter().map(|e| (e.g)(&u_new)).collect();
        let mut first: Option<(usize, f64, [f64; N])> = None;
        for (i, e) in events.iter().enumerate() {
            if e.direction.matches(g_prev[i], g_new[i], e.terminal) {
                let (tau, us) = locate(&f, &u, &k1, dir * h, &*e.g, g_prev[i], g_new[i]);
                if first.map_or(true, |(_, tf, _)| tau.abs() < tf.abs()) {
                    first = Some((i, tau, us));
                }
            }
        }
        if let Some((i, tau, us)) = first {
            let th = t + tau;
            hits.push(EventHit {
                index: i,
                t: th,
                state: us,
            });
            if events[i].terminal {
                if opts.record {
                    times.push(th);
                    states.push(us);
                }
                return Ok(Solution {
                    times,
                    states,
                    events: hits,
                    status: Status::Terminal(i),
                    t_final: th,
                    final_state: us,
                    steps,
                });
            }
        }

        t = t_new;
        u = u_new;
        k1 = k7;
        g_prev = g_new;
        if opts.record {
            times.push(t);
            states.push(u);
        }
        let fac = if en == 0.0 {
            5.0
        } else {
            (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
    }
    Ok(Solution {
        times,
        states,
        events: hits,
        status: Status::Completed,
        t_final: t,
        final_state: u,
        steps,
    })
}

/// Root of `g` inside a step of signed size `h`, as `(tau, state)` with
/// `tau` the signed offset from the step start.
fn locate<const N: usize, F>(
    f: &F,
    u: &[f64; N],
    k1: &[f64; N],
    h: f64,
    g: &dyn Fn(&[f64; N]) -> f64,
    g0: f64,
    g1: f64,
) -> (f64, [f64; N])
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let (mut a, mut ga) = (0.0f64, g0);
    let (mut b, mut gb) = (h, g1);
    let mut ub = dp_step(f, u, k1, h).0;
    if gb == 0.0 {
        return (b, ub);
    }
    let mut side = 0i8;
    for _ in 0..100 {
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !c.is_finite() || (c - a) * (c - b) > 0.0 {
            c = 0.5 * (a + b);
        }
        let uc = dp_step(f, u, k1, c).0;
        let gc = g(&uc);
        if gc == 0.0 {
            return (c, uc);
        }
        if (gc > 0.0) == (gb > 0.0) {
            b = c;
            gb = gc;
            ub = uc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
        if (b - a).abs() <= 1e-12 * h.abs().max(1e-300) + 1e-14 {
            break;
        }
    }
    (b, ub)
}

/// Final state after integrating for signed time `t`.
pub fn flow<const N: usize, F>(f: F, u0: [f64; N], t: f64, opts: &SolverOptions) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let o = SolverOptions { record: false, ..*opts };
    Ok(solve(f, u0, t, &o, &[])?.final_state)
}
