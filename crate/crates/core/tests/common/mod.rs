#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const A1: f64 = 0.297312;
pub const A2: f64 = 0.00318;
pub const XC: f64 = 2500.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Field and trace written out from the model equations, independent of the
/// library's evaluation code.
fn hopf_system(u: [f64; 3], l2: f64, a1: f64, a2: f64, xc: f64) -> [f64; 3] {
    let (x, y, l1) = (u[0], u[1], u[2].exp());
    let f = -l1 * x * (1.0 + x) + a1 * (1.0 - x / xc) * x * y * y;
    let g = l2 * (1.0 + x) * y - a2 * x;
    let fx = -l1 * (1.0 + 2.0 * x) + a1 * (1.0 - 2.0 * x / xc) * y * y;
    let gy = l2 * (1.0 + x);
    [f, g, fx + gy]
}

/// Newton on `{f = 0, g = 0, trace = 0}` in `(x, y, ln lambda1)` at fixed
/// `lambda2`, with a difference Jacobian. Returns `(x, y, lambda1)`.
pub fn hopf_newton(seed: [f64; 3], l2: f64, a1: f64, a2: f64, xc: f64) -> Option<[f64; 3]> {
    let mut u = [seed[0], seed[1], seed[2].ln()];
    for _ in 0..60 {
        let r = hopf_system(u, l2, a1, a2, xc);
        let mut j = [[0.0; 3]; 3];
        for k in 0..3 {
            let h = 1e-7 * (1.0 + u[k].abs());
            let (mut a, mut b) = (u, u);
            a[k] += h;
            b[k] -= h;
            let (ra, rb) = (hopf_system(a, l2, a1, a2, xc), hopf_system(b, l2, a1, a2, xc));
            for i in 0..3 {
                j[i][k] = (ra[i] - rb[i]) / (2.0 * h);
            }
        }
        let du = solve3(j, [-r[0], -r[1], -r[2]])?;
        let damp = if du[0].abs() > 0.5 * u[0].abs() {
            0.5 * u[0].abs() / du[0].abs()
        } else {
            1.0
        };
        for k in 0..3 {
            u[k] += damp * du[k];
        }
        if !(u[0] > 0.0 && u[0] < xc && u[1] > 0.0) {
            return None;
        }
        let step = du.iter().map(|d| d.abs()).fold(0.0, f64::max);
        if damp == 1.0 && step < 1e-14 * (1.0 + u[0]) {
            return Some([u[0], u[1], u[2].exp()]);
        }
    }
    None
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        out[k] = det(m) / d;
    }
    Some(out)
}

/// Seed on the equilibrium manifold at abscissa `x`: `y` from `g = 0`,
/// `lambda1` from `f = 0`.
pub fn manifold_seed(x: f64, l2: f64, a1: f64, a2: f64, xc: f64) -> [f64; 3] {
    let y = a2 * x / (l2 * (1.0 + x));
    let l1 = a1 * (1.0 - x / xc) * y * y / (1.0 + x);
    [x, y, l1]
}

/// `n` Hopf-surface points from random seeds; also returns the attempt count.
pub fn hopf_oracle_points(n: usize, seed: u64) -> (Vec<(f64, [f64; 3])>, usize) {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < n && attempts < 100 * n {
        attempts += 1;
        let l2 = log_uniform(&mut r, 1e-3, 2e-2);
        let x = log_uniform(&mut r, 0.05, 0.5 * XC);
        let s = manifold_seed(x, l2, A1, A2, XC);
        if let Some(u) = hopf_newton(s, l2, A1, A2, XC) {
            out.push((l2, u));
        }
    }
    (out, attempts)
}
