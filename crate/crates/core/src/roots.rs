//! Real roots of low-degree polynomials via companion-matrix eigenvalues.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;

/// All complex roots of `c[0] x^3 + c[1] x^2 + c[2] x + c[3]`, each real root
/// Newton-polished. Falls back to the quadratic (or linear) when the leading
/// coefficients vanish.
pub fn cubic_roots(c: [f64; 4]) -> Vec<Complex64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    if c[0].abs() <= 1e-14 * scale {
        return quadratic_roots([c[1], c[2], c[3]]);
    }
    let (a, b, d) = (c[1] / c[0], c[2] / c[0], c[3] / c[0]);
    let companion = Matrix3::new(0.0, 0.0, -d, 1.0, 0.0, -b, 0.0, 1.0, -a);
    let roots: Vec<Complex64> = companion.complex_eigenvalues().iter().copied().collect();
    roots
        .into_iter()
        .map(|r| {
            if r.im == 0.0 {
                Complex64::new(polish(&c, r.re), 0.0)
            } else {
                r
            }
        })
        .collect()
}

pub fn quadratic_roots(c: [f64; 3]) -> Vec<Complex64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    if c[0].abs() <= 1e-14 * scale {
        if c[1] == 0.0 {
            return Vec::new();
        }
        return vec![Complex64::new(-c[2] / c[1], 0.0)];
    }
    let m = Matrix2::new(0.0, -c[2] / c[0], 1.0, -c[1] / c[0]);
    m.complex_eigenvalues().iter().copied().collect()
}

/// Horner evaluation of `c[0] x^n + ... + c[n]` and its derivative.
pub fn horner(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &ci in c {
        dp = dp * x + p;
        p = p * x + ci;
    }
    (p, dp)
}

fn polish(c: &[f64], mut x: f64) -> f64 {
    let (mut p, _) = horner(c, x);
    for _ in 0..4 {
        let (_, dp) = horner(c, x);
        if dp == 0.0 {
            break;
        }
        let next = x - p / dp;
        let (pn, _) = horner(c, next);
        if pn.abs() < p.abs() {
            x = next;
            p = pn;
        } else {
            break;
        }
    }
    x
}

/// Real parts of roots whose imaginary part is negligible, sorted and with
/// coincident values merged.
pub fn real_roots(roots: &[Complex64], imag_tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = roots
        .iter()
        .filter(|r| r.im.abs() <= imag_tol * r.re.abs().max(1.0))
        .map(|r| r.re)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= imag_tol * a.abs().max(1.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_real_roots() {
        // (x - 1)(x - 2)(x + 3) = x^3 - 7x + 6
        let r = real_roots(&cubic_roots([1.0, 0.0, -7.0, 6.0]), 1e-9);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_pair() {
        // (x - 1)(x^2 + 1)
        let r = cubic_roots([1.0, -1.0, 1.0, -1.0]);
        assert_eq!(real_roots(&r, 1e-9), vec![1.0]);
        assert_eq!(r.iter().filter(|z| z.im.abs() > 0.5).count(), 2);
    }

    #[test]
    fn degenerate_leading_coefficient() {
        let r = real_roots(&cubic_roots([0.0, 1.0, -3.0, 2.0]), 1e-9);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 1.0).abs() < 1e-13 && (r[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn horner_derivative() {
        let (p, dp) = horner(&[2.0, -1.0, 0.5, 3.0], 1.5);
        assert!((p - (2.0 * 3.375 - 2.25 + 0.75 + 3.0)).abs() < 1e-14);
        assert!((dp - (6.0 * 2.25 - 3.0 + 0.5)).abs() < 1e-14);
    }
}
