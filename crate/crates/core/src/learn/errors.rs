use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::HawkesModel;
use crate::process::branching_matrix;

/// Parameter recovery errors of a fitted model against the truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationError {
    /// `||mu_hat - mu|| / ||mu||`, or the absolute error when `||mu|| = 0`.
    pub mu_relerr: f64,
    /// `||Phi_hat - Phi||_F / ||Phi||_F`, or absolute when `||Phi|| = 0`.
    pub kernel_relerr: f64,
    /// Relative L2 error of kernel values on the fitted representation,
    /// when the two kernels can be compared cell by cell.
    pub pointwise_relerr: Option<f64>,
    pub mu_absolute: bool,
    pub kernel_absolute: bool,
}

fn rel(diff: f64, base: f64) -> (f64, bool) {
    if base == 0.0 {
        (diff, true)
    } else {
        (diff / base, false)
    }
}

pub fn estimation_error(fitted: &HawkesModel, truth: &HawkesModel) -> Result<EstimationError> {
    let d = truth.dim();
    if fitted.dim() != d {
        return Err(Error::InvalidInput(format!(
            "fitted model has dim {} but truth has dim {d}",
            fitted.dim()
        )));
    }
    let mu_diff = fitted
        .mu()
        .iter()
        .zip(truth.mu())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let mu_norm = truth.mu().iter().map(|m| m * m).sum::<f64>().sqrt();
    let (mu_relerr, mu_absolute) = rel(mu_diff, mu_norm);
    let phi_t = branching_matrix(truth);
    let phi_f = branching_matrix(fitted);
    let (kernel_relerr, kernel_absolute) = rel((&phi_f - &phi_t).norm(), phi_t.norm());
    Ok(EstimationError {
        mu_relerr,
        kernel_relerr,
        pointwise_relerr: pointwise(fitted, truth),
        mu_absolute,
        kernel_absolute,
    })
}

fn pointwise(fitted: &HawkesModel, truth: &HawkesModel) -> Option<f64> {
    let d = truth.dim();
    let (mut num, mut den) = (0.0, 0.0);
    if fitted.kernel() == truth.kernel() {
        for (a, b) in fitted.coeffs().iter().zip(truth.coeffs()) {
            num += (a - b).norm_squared();
            den += b.norm_squared();
        }
    } else if let KernelSpec::Discretized { step, len } = *fitted.kernel() {
        // compare with the truth averaged over each cell
        for l in 0..len {
            let (t0, t1) = (l as f64 * step, (l + 1) as f64 * step);
            for v in 0..d {
                for u in 0..d {
                    let avg = (truth.kernel_integral(v, u, t1) - truth.kernel_integral(v, u, t0)) / step;
                    let got = fitted.coeffs()[l][(v, u)];
                    num += (got - avg).powi(2);
                    den += avg * avg;
                }
            }
        }
    } else {
        return None;
    }
    Some(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}
