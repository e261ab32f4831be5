//! Projected Newton solver for
//! `min_{x >= 0} sum_i (-c_i log x_i + e_i x_i) + x' Q x / 2`.

use nalgebra::{Cholesky, DVector};

use crate::model::Matrix;

pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    /// Coordinates held at zero by the nonnegativity constraint.
    pub clamped: usize,
    /// The Hessian needed a diagonal bump to factor.
    pub bumped: bool,
}

pub(crate) fn objective(c: &[f64], e: &[f64], q: &Matrix, x: &[f64]) -> f64 {
    let mut f = 0.0;
    for i in 0..x.len() {
        if c[i] > 0.0 {
            if x[i] <= 0.0 {
                return f64::INFINITY;
            }
            f -= c[i] * x[i].ln();
        }
        f += e[i] * x[i];
    }
    let xv = DVector::from_column_slice(x);
    f + 0.5 * xv.dot(&(q * &xv))
}

/// Starts from `x0`, which must have a finite objective. Steps must lower
/// the objective, or, once it is flat to rounding, the gradient norm.
pub(crate) fn solve(c: &[f64], e: &[f64], q: &Matrix, x0: &[f64]) -> NewtonOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut f = objective(c, e, q, &x);
    let mut bumped = false;
    let grad = |x: &[f64]| -> Vec<f64> {
        let xv = DVector::from_column_slice(x);
        let qx = q * &xv;
        (0..n)
            .map(|i| e[i] + qx[i] - if c[i] > 0.0 { c[i] / x[i] } else { 0.0 })
            .collect()
    };
    if !f.is_finite() {
        return NewtonOutcome { x, clamped: 0, bumped };
    }
    for _ in 0..100 {
        let g = grad(&x);
        let free: Vec<usize> = (0..n).filter(|&i| !(c[i] <= 0.0 && x[i] <= 0.0 && g[i] > 0.0)).collect();
        if free.is_empty() {
            break;
        }
        let m = free.len();
        let mut h = Matrix::from_fn(m, m, |a, b| q[(free[a], free[b])]);
        for (a, &i) in free.iter().enumerate() {
            if c[i] > 0.0 {
                h[(a, a)] += c[i] / (x[i] * x[i]);
            }
        }
        let rhs = DVector::from_iterator(m, free.iter().map(|&i| -g[i]));
        let scale = (0..m).map(|a| h[(a, a)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut bump = 0.0;
        let dir = loop {
            let mut hb = h.clone();
            for a in 0..m {
                hb[(a, a)] += bump;
            }
            if let Some(ch) = Cholesky::new(hb) {
                break ch.solve(&rhs);
            }
            bump = if bump == 0.0 { 1e-12 * scale } else { bump * 10.0 };
            bumped = true;
            if bump > scale * 1e6 {
                break rhs.clone() / scale;
            }
        };
        let decrement: f64 = -dir.dot(&rhs);
        if decrement.abs() <= 1e-26 * f.abs().max(1.0) {
            break;
        }
        // stay strictly inside for coordinates with a log barrier
        let mut t_max: f64 = 1.0;
        for (a, &i) in free.iter().enumerate() {
            if c[i] > 0.0 && dir[a] < 0.0 {
                t_max = t_max.min(0.99 * -x[i] / dir[a]);
            }
        }
        let mut t = t_max;
        let mut accepted = false;
        for _ in 0..60 {
            let mut y = x.clone();
            for (a, &i) in free.iter().enumerate() {
                y[i] = (x[i] + t * dir[a]).max(0.0);
            }
            let fy = objective(c, e, q, &y);
            let pred: f64 = (0..n).map(|i| g[i] * (y[i] - x[i])).sum();
            let flat = fy.is_finite()
                && fy <= f + 4.0 * f64::EPSILON * f.abs().max(1.0)
                && free_norm(&grad(&y), &free) < free_norm(&g, &free);
            if (fy < f && fy <= f + 1e-4 * pred) || flat {
                x = y;
                f = fy.min(f);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = grad(&x);
    let clamped = (0..n).filter(|&i| x[i] <= 0.0 && g[i] > 0.0).count();
    NewtonOutcome { x, clamped, bumped }
}

fn free_norm(g: &[f64], free: &[usize]) -> f64 {
    free.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_minimum_without_curvature() {
        let q = Matrix::zeros(3, 3);
        let out = solve(&[2.0, 3.0, 1.0], &[1.0, 2.0, 4.0], &q, &[1.0, 1.0, 1.0]);
        for (x, want) in out.x.iter().zip([2.0, 1.5, 0.25]) {
            assert!((x - want).abs() < 1e-9, "{x} vs {want}");
        }
        assert_eq!(out.clamped, 0);
    }

    #[test]
    fn linear_terms_are_clamped_at_zero() {
        let q = Matrix::identity(2, 2) * 0.1;
        let out = solve(&[0.0, 1.0], &[1.0, 1.0], &q, &[0.5, 0.5]);
        assert_eq!(out.x[0], 0.0);
        assert_eq!(out.clamped, 1);
        // 1/x = 1 + 0.1 x
        let want = (-1.0 + (1.0f64 + 0.4).sqrt()) / 0.2;
        assert!((out.x[1] - want).abs() < 1e-9);
    }

    #[test]
    fn never_increases_objective() {
        let q = Matrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]) * 50.0;
        let c = [4.0, 0.0, 9.0];
        let e = [3.0, 2.0, 1.0];
        let x0 = [0.2, 3.0, 0.01];
        let out = solve(&c, &e, &q, &x0);
        assert!(objective(&c, &e, &q, &out.x) <= objective(&c, &e, &q, &x0));
    }
}
