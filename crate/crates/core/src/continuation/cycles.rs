//! Periodic orbits by multiple shooting, their continuation from a Hopf
//! point, and the two-parameter curve of cycle folds.
//!
//! Unknowns are the `N` shooting nodes, `log T` and the log of each free
//! parameter. Segment Jacobians come from the variational equations; the
//! nontrivial multiplier is `exp` of the integrated trace (Liouville).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::equilibrium::PlaneWindow;
use super::palc::{self, ContinuationOptions, Problem, RawBranch};
use super::{Branch, BranchKind, BranchPoint, SpecialPoint, Tag};
use crate::dynamics::integrator::{self, SolverOptions};
use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ParamId, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleOptions {
    pub segments: usize,
    pub rtol: f64,
    pub atol: f64,
    /// First cycle amplitude, relative to the equilibrium's norm.
    pub initial_amplitude: f64,
    /// A family whose period exceeds this ends with HOM_APPROX.
    pub period_cap: f64,
    /// A family that stalls after its period has grown by this factor also
    /// ends with HOM_APPROX.
    pub stall_period_ratio: f64,
    /// The fold-of-cycles curve stops once the node spread in `x` falls
    /// below this, relative to the equilibrium abscissa.
    pub min_amplitude: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            segments: 20,
            rtol: 1e-11,
            atol: 1e-13,
            initial_amplitude: 1e-3,
            period_cap: 1e4,
            stall_period_ratio: 3.0,
            min_amplitude: 2e-2,
        }
    }
}

impl CycleOptions {
    fn solver(&self) -> SolverOptions {
        SolverOptions::with_tolerances(self.rtol, self.atol).quiet()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    /// Dense samples over one period; the last is the flow image of the
    /// last node, so it closes onto the first.
    pub samples: Vec<State>,
    pub nodes: Vec<State>,
    pub period: f64,
    pub nontrivial_floquet: f64,
    pub stability: Stability,
}

impl LimitCycle {
    /// `max x - min x` over the samples.
    pub fn amplitude(&self) -> f64 {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, s| (a.0.min(s.x), a.1.max(s.x)));
        hi - lo
    }

    pub fn closure(&self) -> f64 {
        let (a, b) = (self.samples[0], self.samples[self.samples.len() - 1]);
        (a.x - b.x).hypot(a.y - b.y)
    }

    /// Relative difference between the stored multiplier and `det` of the
    /// monodromy matrix from one integration over the whole period.
    pub fn monodromy_mismatch(&self, params: &ModelParams, opts: &CycleOptions) -> Result<f64> {
        let p = *params;
        let n0 = self.nodes[0];
        let z0 = [n0.x, n0.y, 1.0, 0.0, 0.0, 1.0];
        let z = integrator::flow(
            |z: &[f64; 6]| {
                let f = p.field(z[0], z[1]);
                let j = p.jac(z[0], z[1]);
                [
                    f[0],
                    f[1],
                    j[(0, 0)] * z[2] + j[(0, 1)] * z[3],
                    j[(1, 0)] * z[2] + j[(1, 1)] * z[3],
                    j[(0, 0)] * z[4] + j[(0, 1)] * z[5],
                    j[(1, 0)] * z[4] + j[(1, 1)] * z[5],
                ]
            },
            z0,
            self.period,
            &opts.solver(),
        )?;
        let det = z[2] * z[5] - z[4] * z[3];
        Ok((det - self.nontrivial_floquet).abs() / self.nontrivial_floquet.abs().max(1e-300))
    }
}

pub(crate) fn trace_gradient(p: &ModelParams, x: f64, y: f64) -> [f64; 2] {
    [
        -2.0 * p.lambda1 - 2.0 * p.alpha1 * y * y / p.xc + p.lambda2,
        2.0 * p.alpha1 * (1.0 - 2.0 * x / p.xc) * y,
    ]
}

pub(crate) fn trace_param_derivative(p: &ModelParams, id: ParamId, x: f64, y: f64) -> f64 {
    match id {
        ParamId::Lambda1 => -(1.0 + 2.0 * x),
        ParamId::Lambda2 => 1.0 + x,
        ParamId::Alpha1 => (1.0 - 2.0 * x / p.xc) * y * y,
        ParamId::Alpha2 => 0.0,
        ParamId::Xc => 2.0 * p.alpha1 * x * y * y / (p.xc * p.xc),
    }
}

const NV: usize = 15;

/// State, monodromy columns, two parameter sensitivities, integrated trace
/// and its derivatives with respect to the start point and the parameters.
fn variational(p: &ModelParams, ids: &[ParamId; 2], z: &[f64; NV]) -> [f64; NV] {
    let (x, y) = (z[0], z[1]);
    let f = p.field(x, y);
    let j = p.jac(x, y);
    let gt = trace_gradient(p, x, y);
    let mut d = [0.0; NV];
    d[0] = f[0];
    d[1] = f[1];
    for c in 0..2 {
        let (a, b) = (z[2 + 2 * c], z[3 + 2 * c]);
        d[2 + 2 * c] = j[(0, 0)] * a + j[(0, 1)] * b;
        d[3 + 2 * c] = j[(1, 0)] * a + j[(1, 1)] * b;
        d[11 + c] = gt[0] * a + gt[1] * b;
    }
    for k in 0..2 {
        let (a, b) = (z[6 + 2 * k], z[7 + 2 * k]);
        let fp = p.field_param_derivative(ids[k], x, y);
        d[6 + 2 * k] = j[(0, 0)] * a + j[(0, 1)] * b + fp[0];
        d[7 + 2 * k] = j[(1, 0)] * a + j[(1, 1)] * b + fp[1];
        d[13 + k] = trace_param_derivative(p, ids[k], x, y) + gt[0] * a + gt[1] * b;
    }
    d[10] = j.trace();
    d
}

struct Segment {
    end: [f64; 2],
    phi: Matrix2<f64>,
    sens: [[f64; 2]; 2],
    dlog_dx: [f64; 2],
    dlog_dp: [f64; 2],
}

fn segment_full(p: &ModelParams, ids: &[ParamId; 2], x0: [f64; 2], dt: f64, so: &SolverOptions) -> Result<Segment> {
    let mut z0 = [0.0; NV];
    z0[0] = x0[0];
    z0[1] = x0[1];
    z0[2] = 1.0;
    z0[5] = 1.0;
    let z = integrator::flow(|z: &[f64; NV]| variational(p, ids, z), z0, dt, so)?;
    Ok(Segment {
        end: [z[0], z[1]],
        phi: Matrix2::new(z[2], z[4], z[3], z[5]),
        sens: [[z[6], z[7]], [z[8], z[9]]],
        dlog_dx: [z[11], z[12]],
        dlog_dp: [z[13], z[14]],
    })
}

fn segment_light(p: &ModelParams, x0: [f64; 2], dt: f64, so: &SolverOptions) -> Result<([f64; 2], f64)> {
    let z = integrator::flow(
        |z: &[f64; 3]| {
            let f = p.field(z[0], z[1]);
            [f[0], f[1], p.jac(z[0], z[1]).trace()]
        },
        [x0[0], x0[1], 0.0],
        dt,
        so,
    )?;
    Ok(([z[0], z[1]], z[2]))
}

struct CycleProblem {
    base: ModelParams,
    free: Vec<ParamId>,
    n: usize,
    /// Adds `log mu = 0`, the fold-of-cycles condition.
    lpc: bool,
    ref_node: [f64; 2],
    ref_dir: [f64; 2],
    so: SolverOptions,
    copts: CycleOptions,
    window: Option<[f64; 2]>,
    plane: Option<PlaneWindow>,
    x_scale: f64,
    /// Node spread of the first and the smallest accepted LPC point.
    spread0: f64,
    min_spread: f64,
}

impl CycleProblem {
    fn params(&self, u: &DVector<f64>) -> ModelParams {
        let mut p = self.base;
        for (k, id) in self.free.iter().enumerate() {
            p = p.with(*id, u[2 * self.n + 1 + k].exp());
        }
        p
    }

    fn period(&self, u: &DVector<f64>) -> f64 {
        u[2 * self.n].exp()
    }

    fn node(&self, u: &DVector<f64>, i: usize) -> [f64; 2] {
        [u[2 * i], u[2 * i + 1]]
    }

    fn ids(&self) -> [ParamId; 2] {
        [self.free[0], *self.free.get(1).unwrap_or(&self.free[0])]
    }

    fn light(&self, u: &DVector<f64>) -> Result<Vec<([f64; 2], f64)>> {
        let p = self.params(u);
        let dt = self.period(u) / self.n as f64;
        (0..self.n)
            .into_par_iter()
            .map(|i| segment_light(&p, self.node(u, i), dt, &self.so))
            .collect()
    }

    fn log_mu(&self, u: &DVector<f64>) -> Result<f64> {
        Ok(self.light(u)?.iter().map(|s| s.1).sum())
    }

    fn spread(&self, u: &DVector<f64>) -> f64 {
        let xs = (0..self.n).map(|i| u[2 * i]);
        let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |a, x| (a.0.min(x), a.1.max(x)));
        hi - lo
    }
}

impl Problem for CycleProblem {
    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        let segs = self.light(u)?;
        let mut r = DVector::zeros(2 * n + 1 + self.lpc as usize);
        for (i, (end, _)) in segs.iter().enumerate() {
            let next = self.node(u, (i + 1) % n);
            r[2 * i] = end[0] - next[0];
            r[2 * i + 1] = end[1] - next[1];
        }
        let x0 = self.node(u, 0);
        r[2 * n] = (x0[0] - self.ref_node[0]) * self.ref_dir[0] + (x0[1] - self.ref_node[1]) * self.ref_dir[1];
        if self.lpc {
            r[2 * n + 1] = segs.iter().map(|s| s.1).sum();
        }
        Ok(r)
    }

    fn jacobian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.n;
        let p = self.params(u);
        let t = self.period(u);
        let dt = t / n as f64;
        let ids = self.ids();
        let segs: Vec<Segment> = (0..n)
            .into_par_iter()
            .map(|i| segment_full(&p, &ids, self.node(u, i), dt, &self.so))
            .collect::<Result<_>>()?;
        let nf = self.free.len();
        let cols = 2 * n + 1 + nf;
        let rows = 2 * n + 1 + self.lpc as usize;
        let mut m = DMatrix::zeros(rows, cols);
        let pv: Vec<f64> = self.free.iter().map(|id| p.get(*id)).collect();
        for (i, s) in segs.iter().enumerate() {
            let j = (i + 1) % n;
            for r in 0..2 {
                for c in 0..2 {
                    m[(2 * i + r, 2 * i + c)] += s.phi[(r, c)];
                }
                m[(2 * i + r, 2 * j + r)] -= 1.0;
                let fe = p.field(s.end[0], s.end[1]);
                m[(2 * i + r, 2 * n)] = fe[r] * dt;
                for k in 0..nf {
                    m[(2 * i + r, 2 * n + 1 + k)] = pv[k] * s.sens[k][r];
                }
            }
        }
        m[(2 * n, 0)] = self.ref_dir[0];
        m[(2 * n, 1)] = self.ref_dir[1];
        if self.lpc {
            let row = 2 * n + 1;
            for (i, s) in segs.iter().enumerate() {
                m[(row, 2 * i)] = s.dlog_dx[0];
                m[(row, 2 * i + 1)] = s.dlog_dx[1];
                m[(row, 2 * n)] += p.jac(s.end[0], s.end[1]).trace() * dt;
                for k in 0..nf {
                    m[(row, 2 * n + 1 + k)] += pv[k] * s.dlog_dp[k];
                }
            }
        }
        Ok(m)
    }

    fn tests(&self, u: &DVector<f64>) -> Vec<f64> {
        if self.lpc {
            return Vec::new();
        }
        vec![self.log_mu(u).map(|l| l.exp() - 1.0).unwrap_or(f64::NAN)]
    }

    fn reject(&self, u: &DVector<f64>) -> Option<String> {
        let p = self.params(u);
        if (0..self.n).any(|i| u[2 * i] <= 0.0 || u[2 * i + 1] <= 0.0) {
            return Some("cycle left the region of interest".into());
        }
        if self.period(u) > self.copts.period_cap {
            return Some("period cap".into());
        }
        if let Some(w) = self.window {
            let v = p.get(self.free[0]);
            if !(v >= w[0] && v <= w[1]) {
                return Some("left the parameter window".into());
            }
        }
        if let Some(w) = &self.plane {
            if !w.contains(p.lambda1, p.lambda2) {
                return Some("left the plane window".into());
            }
        }
        if self.lpc && self.spread(u) < self.copts.min_amplitude * self.x_scale {
            return Some("cycle amplitude below the minimum".into());
        }
        if self.lpc && self.min_spread < 0.5 * self.spread0 && self.spread(u) > 1.001 * self.min_spread {
            return Some("cycle amplitude passed its minimum".into());
        }
        None
    }

    fn accepted(&mut self, u: &DVector<f64>) {
        if self.lpc {
            let s = self.spread(u);
            if self.spread0.is_nan() {
                self.spread0 = s;
            }
            self.min_spread = self.min_spread.min(s);
        }
        let x0 = self.node(u, 0);
        let f = self.params(u).field(x0[0], x0[1]);
        let nrm = f[0].hypot(f[1]);
        if nrm > 0.0 {
            self.ref_node = x0;
            self.ref_dir = [f[0] / nrm, f[1] / nrm];
        }
    }
}

fn build_cycle(prob: &CycleProblem, u: &DVector<f64>) -> Result<LimitCycle> {
    let p = prob.params(u);
    let t = prob.period(u);
    let dt = t / prob.n as f64;
    let so = SolverOptions {
        record: true,
        ..prob.so
    };
    let mut samples = Vec::new();
    let mut log_mu = 0.0;
    for i in 0..prob.n {
        let x = prob.node(u, i);
        let sol = integrator::solve(
            |z: &[f64; 3]| {
                let f = p.field(z[0], z[1]);
                [f[0], f[1], p.jac(z[0], z[1]).trace()]
            },
            [x[0], x[1], 0.0],
            dt,
            &so,
            &[],
        )?;
        let skip = usize::from(i > 0);
        samples.extend(sol.states.iter().skip(skip).map(|z| State::new(z[0], z[1])));
        log_mu += sol.final_state[2];
    }
    let mu = log_mu.exp();
    Ok(LimitCycle {
        samples,
        nodes: (0..prob.n).map(|i| State::from_array(prob.node(u, i))).collect(),
        period: t,
        nontrivial_floquet: mu,
        stability: if mu.abs() < 1.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        },
    })
}

fn finish(prob: &CycleProblem, raw: RawBranch, kind: BranchKind, names: &[&str]) -> Result<Branch> {
    let mut special = Vec::new();
    let mut points = Vec::with_capacity(raw.points.len());
    for (i, rp) in raw.points.iter().enumerate() {
        if rp.zero_of.is_some() {
            special.push(SpecialPoint {
                index: i,
                tag: Tag::Lpc,
            });
        }
        let cycle = build_cycle(prob, &rp.u)?;
        points.push(BranchPoint {
            params: prob.params(&rp.u),
            state: cycle.nodes[0],
            cycle: Some(cycle),
            tests: rp.tests.clone(),
            residual: rp.residual,
            arclength: rp.arclength,
        });
    }
    Ok(Branch {
        kind,
        test_names: names.iter().map(|s| s.to_string()).collect(),
        points,
        special_points: special,
        end: raw.end,
    })
}

/// Unit-max eigenvector of `J` for `i omega`.
fn hopf_eigenvector(j: &Matrix2<f64>, omega: f64) -> [Complex64; 2] {
    let q = if j[(0, 1)].abs() >= j[(1, 0)].abs() {
        [Complex64::new(j[(0, 1)], 0.0), Complex64::new(-j[(0, 0)], omega)]
    } else {
        [Complex64::new(-j[(1, 1)], omega), Complex64::new(j[(1, 0)], 0.0)]
    };
    let s = q[0].norm().max(q[1].norm());
    [q[0] / s, q[1] / s]
}

/// Cycle family born at the Hopf equilibrium `eq` of `params`, continued in
/// `free` inside `window`. LPC is tagged where the nontrivial multiplier
/// crosses 1; the family ends with HOM_APPROX when its period passes the
/// cap, or when it stalls after the period has grown by
/// `stall_period_ratio`.
pub fn continue_cycles(
    params: &ModelParams,
    eq: &Equilibrium,
    free: ParamId,
    window: [f64; 2],
    copts: &CycleOptions,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let j = params.jac(eq.state.x, eq.state.y);
    let det = j.determinant();
    if !(det > 0.0) || j.trace().abs() > 1e-6 * j.norm() {
        return Err(Error::Precondition(format!(
            "cycles start from a Hopf point (trace = {:e}, det = {det:e})",
            j.trace()
        )));
    }
    let n = copts.segments;
    let omega = det.sqrt();
    let t0 = 2.0 * PI / omega;
    let q = hopf_eigenvector(&j, omega);
    let eps = copts.initial_amplitude * eq.state.x.hypot(eq.state.y);
    let mut guess = DVector::zeros(2 * n + 2);
    let mut dir = DVector::zeros(2 * n + 2);
    for i in 0..n {
        let ph = Complex64::from_polar(1.0, omega * t0 * i as f64 / n as f64);
        let v = [(q[0] * ph).re, (q[1] * ph).re];
        guess[2 * i] = eq.state.x + eps * v[0];
        guess[2 * i + 1] = eq.state.y + eps * v[1];
        dir[2 * i] = v[0];
        dir[2 * i + 1] = v[1];
    }
    guess[2 * n] = t0.ln();
    guess[2 * n + 1] = params.get(free).ln();
    let dir = dir.normalize();
    let mut prob = CycleProblem {
        base: *params,
        free: vec![free],
        n,
        lpc: false,
        ref_node: [0.0; 2],
        ref_dir: [0.0; 2],
        so: copts.solver(),
        copts: *copts,
        window: Some(window),
        plane: None,
        x_scale: eq.state.x,
        spread0: f64::NAN,
        min_spread: f64::INFINITY,
    };
    prob.accepted(&guess);
    let c = palc::correct(&prob, &guess, &dir, opts)?;
    prob.accepted(&c.u);
    let t = palc::tangent(&prob, &c.u, &dir)?;
    let raw = palc::run(&mut prob, c, t, opts)?;
    let hom = raw.end == "period cap"
        || (raw.underflow
            && raw
                .points
                .last()
                .map_or(false, |p| prob.period(&p.u) >= copts.stall_period_ratio * t0));
    let mut b = finish(&prob, raw, BranchKind::CycleFamily, &["floquet_minus_one"])?;
    if hom {
        b.special_points.push(SpecialPoint {
            index: b.points.len() - 1,
            tag: Tag::HomApprox,
        });
    }
    Ok(b)
}

/// Cycles of `branch` at `free = value`: every crossing of the value by the
/// branch, corrected at exactly that value.
pub fn cycles_at(
    branch: &Branch,
    free: ParamId,
    value: f64,
    copts: &CycleOptions,
    opts: &ContinuationOptions,
) -> Result<Vec<BranchPoint>> {
    let mut out = Vec::new();
    for w in branch.points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (ga, gb) = (a.params.get(free) - value, b.params.get(free) - value);
        if !((ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0)) {
            continue;
        }
        let (ca, cb) = match (&a.cycle, &b.cycle) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::Precondition("branch carries no cycles".into())),
        };
        let s = ga / (ga - gb);
        let n = ca.nodes.len();
        let mut u = DVector::zeros(2 * n + 2);
        for i in 0..n {
            u[2 * i] = ca.nodes[i].x + s * (cb.nodes[i].x - ca.nodes[i].x);
            u[2 * i + 1] = ca.nodes[i].y + s * (cb.nodes[i].y - ca.nodes[i].y);
        }
        u[2 * n] = (ca.period.ln()) + s * (cb.period.ln() - ca.period.ln());
        u[2 * n + 1] = value.ln();
        let mut prob = CycleProblem {
            base: a.params,
            free: vec![free],
            n,
            lpc: false,
            ref_node: [0.0; 2],
            ref_dir: [0.0; 2],
            so: copts.solver(),
            copts: *copts,
            window: None,
            plane: None,
            x_scale: 1.0,
            spread0: f64::NAN,
            min_spread: f64::INFINITY,
        };
        prob.accepted(&u);
        let mut hold = DVector::zeros(2 * n + 2);
        hold[2 * n + 1] = 1.0;
        let c = palc::correct(&prob, &u, &hold, opts)?;
        let cycle = build_cycle(&prob, &c.u)?;
        out.push(BranchPoint {
            params: prob.params(&c.u),
            state: cycle.nodes[0],
            tests: vec![cycle.nontrivial_floquet - 1.0],
            cycle: Some(cycle),
            residual: c.residual,
            arclength: f64::NAN,
        });
    }
    Ok(out)
}

/// Curve of cycle folds in `(lambda1, lambda2)` from an LPC point of a
/// family; `direction > 0` starts towards increasing `lambda2`. Ends when
/// the cycle amplitude, after halving, stops decreasing or drops below
/// `min_amplitude` (the approach to GH), leaves the window, or fails to
/// continue.
pub fn lpc_curve(
    start: &BranchPoint,
    direction: f64,
    window: PlaneWindow,
    copts: &CycleOptions,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let c0 = start
        .cycle
        .as_ref()
        .ok_or_else(|| Error::Precondition("LPC start carries no cycle".into()))?;
    let n = c0.nodes.len();
    let mut u = DVector::zeros(2 * n + 3);
    for (i, s) in c0.nodes.iter().enumerate() {
        u[2 * i] = s.x;
        u[2 * i + 1] = s.y;
    }
    u[2 * n] = c0.period.ln();
    u[2 * n + 1] = start.params.lambda1.ln();
    u[2 * n + 2] = start.params.lambda2.ln();
    let xs = c0.nodes.iter().map(|s| s.x).sum::<f64>() / n as f64;
    let mut prob = CycleProblem {
        base: start.params,
        free: vec![ParamId::Lambda1, ParamId::Lambda2],
        n,
        lpc: true,
        ref_node: [0.0; 2],
        ref_dir: [0.0; 2],
        so: copts.solver(),
        copts: *copts,
        window: None,
        plane: Some(window),
        x_scale: xs,
        spread0: f64::NAN,
        min_spread: f64::INFINITY,
    };
    prob.accepted(&u);
    let mut hold = DVector::zeros(2 * n + 3);
    hold[2 * n + 2] = 1.0;
    let c = palc::correct(&prob, &u, &hold, opts)?;
    prob.accepted(&c.u);
    let t = palc::tangent(&prob, &c.u, &(hold * direction.signum()))?;
    let raw = palc::run(&mut prob, c, t, opts)?;
    finish(&prob, raw, BranchKind::LpcCurve, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loci;

    const A1: f64 = 0.297312;
    const A2: f64 = 0.00318;
    const XC: f64 = 2500.0;

    #[test]
    fn trace_derivatives_match_differences() {
        let p = ModelParams::new(0.0126, 0.0041, A1, A2, 40.0).unwrap();
        let (x, y) = (0.7, 0.3);
        let h = 1e-6;
        let tr = |p: &ModelParams, x: f64, y: f64| p.jac(x, y).trace();
        let g = trace_gradient(&p, x, y);
        assert!(((tr(&p, x + h, y) - tr(&p, x - h, y)) / (2.0 * h) - g[0]).abs() < 1e-8);
        assert!(((tr(&p, x, y + h) - tr(&p, x, y - h)) / (2.0 * h) - g[1]).abs() < 1e-8);
        for id in [
            ParamId::Lambda1,
            ParamId::Lambda2,
            ParamId::Alpha1,
            ParamId::Alpha2,
            ParamId::Xc,
        ] {
            let v = p.get(id);
            let d = 1e-6 * v;
            let fd = (tr(&p.with(id, v + d), x, y) - tr(&p.with(id, v - d), x, y)) / (2.0 * d);
            assert!(
                (fd - trace_param_derivative(&p, id, x, y)).abs() < 1e-6 * (1.0 + fd.abs()),
                "{id:?}"
            );
        }
    }

    fn near_hopf() -> (ModelParams, Equilibrium) {
        loci::hopf_point_at_lambda(A1, A2, XC, 0.45).unwrap()
    }

    #[test]
    fn shooting_jacobian_matches_differences() {
        let (p, e) = near_hopf();
        let n = 8;
        let j = p.jac(e.state.x, e.state.y);
        let omega = j.determinant().sqrt();
        let q = hopf_eigenvector(&j, omega);
        let mut u = DVector::zeros(2 * n + 3);
        for i in 0..n {
            let ph = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64);
            u[2 * i] = e.state.x + 0.01 * (q[0] * ph).re;
            u[2 * i + 1] = e.state.y + 0.01 * (q[1] * ph).re;
        }
        u[2 * n] = (2.0 * PI / omega).ln();
        u[2 * n + 1] = p.lambda1.ln();
        u[2 * n + 2] = p.lambda2.ln();
        let mut prob = CycleProblem {
            base: p,
            free: vec![ParamId::Lambda1, ParamId::Lambda2],
            n,
            lpc: true,
            ref_node: [0.0; 2],
            ref_dir: [0.0; 2],
            so: CycleOptions::default().solver(),
            copts: CycleOptions::default(),
            window: None,
            plane: None,
            x_scale: 1.0,
            spread0: f64::NAN,
            min_spread: f64::INFINITY,
        };
        prob.accepted(&u);
        let a = prob.jacobian(&u).unwrap();
        let fd = palc::fd_jacobian(|v| prob.residual(v), &u).unwrap();
        let scale = a.amax();
        assert!((&a - &fd).amax() < 1e-5 * scale, "{}", (&a - &fd).amax());
    }

    #[test]
    fn supercritical_family_is_stable_and_consistent() {
        let (p, e) = near_hopf();
        let l1 = p.lambda1;
        let opts = ContinuationOptions {
            max_points: 25,
            ..Default::default()
        };
        let b = continue_cycles(
            &p,
            &e,
            ParamId::Lambda1,
            [0.5 * l1, 2.0 * l1],
            &CycleOptions::default(),
            &opts,
        )
        .unwrap();
        assert!(b.points.len() >= 10, "{}", b.end);
        for pt in &b.points {
            let c = pt.cycle.as_ref().unwrap();
            assert_eq!(c.stability, Stability::Stable);
            assert!(c.closure() < 1e-8);
            assert!(pt.residual <= 1e-9);
        }
        let last = b.points.last().unwrap();
        let c = last.cycle.as_ref().unwrap();
        assert!(c.monodromy_mismatch(&last.params, &CycleOptions::default()).unwrap() < 1e-5);
        assert_eq!(b.count(Tag::Lpc), 0);
    }

    #[test]
    fn rejects_non_hopf_start() {
        let p = crate::model::REFERENCE_PARAMS;
        let e = crate::equilibria::find_equilibria(&p)[0];
        let r = continue_cycles(
            &p,
            &e,
            ParamId::Lambda1,
            [0.0, 1.0],
            &CycleOptions::default(),
            &ContinuationOptions::default(),
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
