//! Coefficient updates of the penalized M-step.
//!
//! Each update minimizes the EM surrogate
//! `sum (-c log a + e a) + penalty(sum_k a_k)` over nonnegative coefficients,
//! where `c` are expected offspring counts and `e` kernel exposures. All
//! kernel components of a continuous kernel have unit mass, so the branching
//! matrix is the sum of the component matrices.

use super::{Penalty, PenaltyKind};
use crate::model::Matrix;

const BLOCK_ROUNDS: usize = 50;

fn ratio(c: f64, e: f64) -> f64 {
    if c > 0.0 {
        c / e
    } else {
        0.0
    }
}

/// New `n_params x D` coefficients from the statistics `c` (`n_params x D`),
/// exposures `e` (one per parameter row) and the current coefficients.
pub(crate) fn update_coeffs(c: &Matrix, e: &[f64], prev: &Matrix, dim: usize, penalty: &Penalty) -> Matrix {
    let lam = penalty.weight;
    match penalty.effective() {
        PenaltyKind::None => Matrix::from_fn(c.nrows(), dim, |p, u| ratio(c[(p, u)], e[p])),
        PenaltyKind::Sparse => Matrix::from_fn(c.nrows(), dim, |p, u| ratio(c[(p, u)], e[p] + lam)),
        PenaltyKind::GroupSparse | PenaltyKind::LowRank => coupled(c, e, prev, dim, penalty),
    }
}

/// Alternates between the branching matrix `S = sum_k a_k` and the split
/// `a_k = pi_k S`; each block step decreases the surrogate.
fn coupled(c: &Matrix, e: &[f64], prev: &Matrix, d: usize, penalty: &Penalty) -> Matrix {
    let k_count = c.nrows() / d;
    let c_agg = Matrix::from_fn(d, d, |v, u| (0..k_count).map(|k| c[(k * d + v, u)]).sum());
    let mut s = Matrix::from_fn(d, d, |v, u| (0..k_count).map(|k| prev[(k * d + v, u)]).sum());
    let mut pi: Vec<Matrix> = (0..k_count)
        .map(|k| {
            Matrix::from_fn(d, d, |v, u| {
                if s[(v, u)] > 0.0 {
                    prev[(k * d + v, u)] / s[(v, u)]
                } else if c_agg[(v, u)] > 0.0 {
                    c[(k * d + v, u)] / c_agg[(v, u)]
                } else {
                    1.0 / k_count as f64
                }
            })
        })
        .collect();
    for _ in 0..if k_count == 1 { 1 } else { BLOCK_ROUNDS } {
        let e_agg = Matrix::from_fn(d, d, |v, u| (0..k_count).map(|k| e[k * d + v] * pi[k][(v, u)]).sum());
        let s_new = solve_summed(&c_agg, &e_agg, &s, penalty);
        let moved = (&s_new - &s).abs().max();
        s = s_new;
        if k_count == 1 {
            break;
        }
        for v in 0..d {
            for u in 0..d {
                if c_agg[(v, u)] <= 0.0 || s[(v, u)] <= 0.0 {
                    continue;
                }
                let cs: Vec<f64> = (0..k_count).map(|k| c[(k * d + v, u)]).collect();
                let a: Vec<f64> = (0..k_count).map(|k| s[(v, u)] * e[k * d + v]).collect();
                let split = split_step(&cs, &a, c_agg[(v, u)]);
                for k in 0..k_count {
                    pi[k][(v, u)] = split[k];
                }
            }
        }
        if moved <= 1e-12 * s.max().max(1e-300) {
            break;
        }
    }
    Matrix::from_fn(c.nrows(), d, |p, u| pi[p / d][(p % d, u)] * s[(p % d, u)])
}

/// Minimizes `sum_k (-c_k log pi_k + a_k pi_k)` on the simplex:
/// `pi_k = c_k / (a_k + nu)` with `nu` fixed by `sum pi = 1`.
fn split_step(c: &[f64], a: &[f64], c_total: f64) -> Vec<f64> {
    let min_a = c
        .iter()
        .zip(a)
        .filter(|(ck, _)| **ck > 0.0)
        .map(|(_, ak)| *ak)
        .fold(f64::INFINITY, f64::min);
    let total = |nu: f64| -> f64 {
        c.iter()
            .zip(a)
            .filter(|(ck, _)| **ck > 0.0)
            .map(|(ck, ak)| ck / (ak + nu))
            .sum()
    };
    let (mut lo, mut hi) = (-min_a, c_total);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = hi;
    let mut pi: Vec<f64> = c
        .iter()
        .zip(a)
        .map(|(ck, ak)| if *ck > 0.0 { ck / (ak + nu) } else { 0.0 })
        .collect();
    let sum: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= sum);
    pi
}

/// Surrogate in terms of the branching matrix alone.
pub(crate) fn surrogate(c: &Matrix, e: &Matrix, s: &Matrix, penalty: &Penalty) -> f64 {
    let mut f = 0.0;
    for ((ci, ei), si) in c.iter().zip(e.iter()).zip(s.iter()) {
        if *ci > 0.0 {
            if *si <= 0.0 {
                return f64::INFINITY;
            }
            f -= ci * si.ln();
        }
        f += ei * si;
    }
    f + penalty.value(s)
}

fn solve_summed(c: &Matrix, e: &Matrix, start: &Matrix, penalty: &Penalty) -> Matrix {
    match penalty.effective() {
        PenaltyKind::GroupSparse => {
            let d = c.nrows();
            let mut s = Matrix::zeros(d, d);
            for v in 0..d {
                let cr: Vec<f64> = c.row(v).iter().copied().collect();
                let er: Vec<f64> = e.row(v).iter().copied().collect();
                let row = group_row(&cr, &er, penalty.weight);
                for (u, x) in row.into_iter().enumerate() {
                    s[(v, u)] = x;
                }
            }
            s
        }
        PenaltyKind::LowRank => low_rank(c, e, start, penalty),
        _ => c.zip_map(e, ratio),
    }
}

/// Exact minimizer of `sum_u (-c_u log s_u + e_u s_u) + lam * ||s||`.
/// Stationarity gives `s_u(r) = 2 c_u / (e_u + sqrt(e_u^2 + 4 lam c_u / r))`
/// with `r = ||s||`, a scalar fixed point found by bisection.
pub(crate) fn group_row(c: &[f64], e: &[f64], lam: f64) -> Vec<f64> {
    let s_of = |r: f64| -> Vec<f64> {
        c.iter()
            .zip(e)
            .map(|(cu, eu)| {
                if *cu > 0.0 {
                    2.0 * cu / (eu + (eu * eu + 4.0 * lam * cu / r).sqrt())
                } else {
                    0.0
                }
            })
            .collect()
    };
    let norm = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>().sqrt();
    let free: Vec<f64> = c.iter().zip(e).map(|(cu, eu)| ratio(*cu, *eu)).collect();
    let hi0 = norm(&free);
    if hi0 == 0.0 || !hi0.is_finite() {
        return if hi0 == 0.0 { vec![0.0; c.len()] } else { s_of(1.0) };
    }
    let (mut lo, mut hi) = (0.0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm(&s_of(mid)) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    s_of(0.5 * (lo + hi))
}

fn svt(y: &Matrix, tau: f64) -> Matrix {
    let svd = y.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let sig = svd.singular_values.map(|x| (x - tau).max(0.0));
    &u * Matrix::from_diagonal(&sig) * &vt
}

/// Proximal gradient on the nuclear-norm surrogate. A step is kept only when
/// it lowers the surrogate, so the result never exceeds the starting value.
fn low_rank(c: &Matrix, e: &Matrix, start: &Matrix, penalty: &Penalty) -> Matrix {
    let lam = penalty.weight;
    let free = c.zip_map(e, ratio);
    let (mut s, mut f) = {
        let fs = surrogate(c, e, start, penalty);
        let ff = surrogate(c, e, &free, penalty);
        if ff < fs {
            (free, ff)
        } else {
            (start.clone(), fs)
        }
    };
    if !f.is_finite() {
        return s;
    }
    let curv = c
        .iter()
        .zip(s.iter())
        .filter(|(ci, _)| **ci > 0.0)
        .map(|(ci, si)| ci / (si * si))
        .fold(0.0, f64::max);
    let mut step = if curv > 0.0 { 1.0 / curv } else { 1.0 };
    for _ in 0..500 {
        let grad = Matrix::from_fn(s.nrows(), s.ncols(), |i, j| {
            let ci = c[(i, j)];
            e[(i, j)] - if ci > 0.0 { ci / s[(i, j)] } else { 0.0 }
        });
        let mut accepted = None;
        for _ in 0..60 {
            let z = svt(&(&s - &grad * step), step * lam).map(|x| x.max(0.0));
            let fz = surrogate(c, e, &z, penalty);
            if fz < f {
                accepted = Some((z, fz));
                break;
            }
            step *= 0.5;
        }
        let Some((z, fz)) = accepted else { break };
        let gain = (f - fz) / f.abs().max(1.0);
        s = z;
        f = fz;
        step *= 2.0;
        if gain < 1e-14 {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_objective(c: &[f64], e: &[f64], s: &[f64], lam: f64) -> f64 {
        let mut f = 0.0;
        for i in 0..c.len() {
            if c[i] > 0.0 {
                f -= c[i] * s[i].ln();
            }
            f += e[i] * s[i];
        }
        f + lam * s.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn group_row_is_a_minimum() {
        let c = [3.0, 0.5, 0.0, 7.0];
        let e = [10.0, 10.0, 10.0, 12.0];
        let lam = 4.0;
        let s = group_row(&c, &e, lam);
        let f0 = row_objective(&c, &e, &s, lam);
        for i in [0, 1, 3] {
            for h in [1e-4, -1e-4] {
                let mut t = s.clone();
                t[i] += h;
                assert!(row_objective(&c, &e, &t, lam) >= f0 - 1e-12);
            }
        }
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn group_row_without_weight_is_the_ratio() {
        let s = group_row(&[2.0, 4.0], &[4.0, 2.0], 0.0);
        assert!((s[0] - 0.5).abs() < 1e-12 && (s[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn split_step_sums_to_one() {
        let pi = split_step(&[1.0, 2.0, 0.5], &[0.3, 1.0, 0.2], 3.5);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // stationarity: c_k / pi_k - a_k is constant
        let nu: Vec<f64> = [(1.0, 0.3), (2.0, 1.0), (0.5, 0.2)]
            .iter()
            .zip(&pi)
            .map(|((c, a), p)| c / p - a)
            .collect();
        assert!((nu[0] - nu[1]).abs() < 1e-9 && (nu[1] - nu[2]).abs() < 1e-9);
    }

    #[test]
    fn low_rank_does_not_increase_surrogate() {
        let c = Matrix::from_row_slice(2, 2, &[5.0, 1.0, 2.0, 4.0]);
        let e = Matrix::from_element(2, 2, 10.0);
        let pen = Penalty::low_rank(3.0);
        let start = Matrix::from_element(2, 2, 0.05);
        let s = low_rank(&c, &e, &start, &pen);
        let free = c.zip_map(&e, ratio);
        assert!(surrogate(&c, &e, &s, &pen) <= surrogate(&c, &e, &start, &pen));
        assert!(surrogate(&c, &e, &s, &pen) <= surrogate(&c, &e, &free, &pen));
        assert!(s.iter().all(|x| *x >= 0.0));
    }
}
