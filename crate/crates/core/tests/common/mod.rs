#![allow(dead_code)]

use hawkes_core::{Event, EventSequence, HawkesModel, KernelSpec, Matrix};
use proptest::prelude::*;

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Direct history sum, independent of the library's evaluation code.
pub fn brute_intensity(model: &HawkesModel, seq: &EventSequence, u: usize, t: f64) -> f64 {
    let mut lam = model.mu()[u];
    for e in seq.events() {
        if e.time < t {
            lam += model.kernel_value(e.mark, u, t - e.time);
        }
    }
    lam
}

/// Quadrature of the brute-force intensity, split at every kernel
/// discontinuity or kink so each piece is smooth.
pub fn quadrature_compensator(model: &HawkesModel, seq: &EventSequence, u: usize, t0: f64, t1: f64) -> f64 {
    let mut cuts = vec![t0, t1];
    for e in seq.events() {
        cuts.push(e.time);
        match model.kernel() {
            KernelSpec::Discretized { step, len } => {
                for k in 1..=*len {
                    cuts.push(e.time + step * k as f64);
                }
            }
            KernelSpec::Basis { support, centers, .. } => {
                cuts.push(e.time + support);
                for c in centers {
                    cuts.push(e.time + c);
                }
            }
            KernelSpec::Exponential { .. } => {}
        }
    }
    cuts.retain(|&c| c >= t0 && c <= t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let f = |t: f64| brute_intensity(model, seq, u, t);
    cuts.windows(2)
        .map(|w| {
            // evaluate strictly inside the piece so step kernels are continuous there
            let (a, b) = (w[0], w[1]);
            let eps = (b - a) * 1e-12;
            adaptive_simpson(&f, a + eps, b - eps, 1e-12)
        })
        .sum()
}

pub fn arb_kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.3f64..3.0).prop_map(KernelSpec::exponential),
        (prop::collection::vec(0.0f64..4.0, 1..4), 0.3f64..1.5).prop_map(|(mut c, s)| {
            c.sort_by(f64::total_cmp);
            KernelSpec::Basis { centers: c, bandwidth: s, support: 6.0 }
        }),
        (0.2f64..1.0, 1usize..6).prop_map(|(step, len)| KernelSpec::discretized(step, len)),
    ]
}

pub fn arb_model(max_dim: usize) -> impl Strategy<Value = HawkesModel> {
    (1..=max_dim, arb_kernel()).prop_flat_map(|(d, kernel)| {
        let k = kernel.n_components();
        let scale = match &kernel {
            KernelSpec::Discretized { step, len } => 0.6 / (step * *len as f64),
            _ => 0.6 / k as f64,
        } / d as f64;
        (
            prop::collection::vec(0.05f64..1.0, d),
            prop::collection::vec(0.0f64..scale, k * d * d),
            Just(kernel),
        )
            .prop_map(move |(mu, a, kernel)| {
                let coeffs = (0..k)
                    .map(|c| Matrix::from_fn(d, d, |v, u| a[c * d * d + v * d + u]))
                    .collect();
                HawkesModel::new(mu, kernel, coeffs).unwrap()
            })
    })
}

pub fn arb_sequence(dim: usize, max_events: usize) -> impl Strategy<Value = EventSequence> {
    (prop::collection::vec((0.0f64..10.0, 0..dim), 0..=max_events), 10.0f64..12.0).prop_map(
        move |(ev, t_end)| {
            let events = ev.into_iter().map(|(t, m)| Event::new(t, m)).collect();
            EventSequence::from_unsorted("p", dim, 0.0, t_end, events).unwrap()
        },
    )
}

pub fn arb_model_and_sequence(max_dim: usize, max_events: usize) -> impl Strategy<Value = (HawkesModel, EventSequence)> {
    arb_model(max_dim).prop_flat_map(move |m| {
        let d = m.dim();
        (Just(m), arb_sequence(d, max_events))
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic by direct comparison of the two
/// empirical CDFs at every pooled point.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let cdf = |xs: &[f64], t: f64| xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64;
    pooled.iter().map(|&t| (cdf(a, t) - cdf(b, t)).abs()).fold(0.0, f64::max)
}

pub fn exp_model_1d(mu: f64, a: f64, decay: f64) -> HawkesModel {
    HawkesModel::exponential(vec![mu], decay, Matrix::from_element(1, 1, a)).unwrap()
}
