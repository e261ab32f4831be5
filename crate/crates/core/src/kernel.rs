//! Impact-function representations.
//!
//! Every kernel is a nonnegative combination of fixed component functions:
//! `phi_vu(t) = sum_k A_k[v][u] * b_k(t)`. The exponential kernel has a single
//! component `w * exp(-w t)`, the basis kernel has one truncated Gaussian per
//! center, and the discretized kernel has one indicator per grid cell
//! `[k*step, (k+1)*step)`. Components of the first two integrate to one, so
//! `A` is the branching matrix; grid cells integrate to `step`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BASIS_SUPPORT: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelSpec {
    Exponential {
        decay: f64,
    },
    Basis {
        centers: Vec<f64>,
        bandwidth: f64,
        #[serde(default = "default_support")]
        support: f64,
    },
    Discretized {
        step: f64,
        len: usize,
    },
}

fn default_support() -> f64 {
    DEFAULT_BASIS_SUPPORT
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

impl KernelSpec {
    pub fn exponential(decay: f64) -> Self {
        KernelSpec::Exponential { decay }
    }

    pub fn basis(centers: Vec<f64>, bandwidth: f64) -> Self {
        KernelSpec::Basis {
            centers,
            bandwidth,
            support: DEFAULT_BASIS_SUPPORT,
        }
    }

    pub fn discretized(step: f64, len: usize) -> Self {
        KernelSpec::Discretized { step, len }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Exponential { decay } => {
                if !(decay.is_finite() && *decay > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "exponential decay must be positive, got {decay}"
                    )));
                }
            }
            KernelSpec::Basis {
                centers,
                bandwidth,
                support,
            } => {
                if centers.is_empty() {
                    return Err(Error::InvalidInput("basis kernel needs at least one center".into()));
                }
                if !(bandwidth.is_finite() && *bandwidth > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "basis bandwidth must be positive, got {bandwidth}"
                    )));
                }
                if !(support.is_finite() && *support > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "basis support must be positive, got {support}"
                    )));
                }
                if centers.iter().any(|c| !c.is_finite() || *c < 0.0) {
                    return Err(Error::InvalidInput("basis centers must be finite and >= 0".into()));
                }
                if centers.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::InvalidInput("basis centers must be sorted".into()));
                }
            }
            KernelSpec::Discretized { step, len } => {
                if !(step.is_finite() && *step > 0.0) {
                    return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
                }
                if *len < 1 {
                    return Err(Error::InvalidInput("grid needs at least one lag".into()));
                }
            }
        }
        Ok(())
    }

    /// Number of component functions (1, centers.len() or len).
    pub fn n_components(&self) -> usize {
        match self {
            KernelSpec::Exponential { .. } => 1,
            KernelSpec::Basis { centers, .. } => centers.len(),
            KernelSpec::Discretized { len, .. } => *len,
        }
    }

    /// Exponential and Gaussian-basis kernels are continuous; grids are not.
    pub fn is_continuous(&self) -> bool {
        !matches!(self, KernelSpec::Discretized { .. })
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            KernelSpec::Exponential { .. } => "exponential",
            KernelSpec::Basis { .. } => "basis",
            KernelSpec::Discretized { .. } => "discretized",
        }
    }

    /// Lags at or beyond this value have zero kernel value.
    pub fn support(&self) -> f64 {
        match self {
            KernelSpec::Exponential { .. } => f64::INFINITY,
            KernelSpec::Basis { support, .. } => *support,
            KernelSpec::Discretized { step, len } => step * *len as f64,
        }
    }

    fn gaussian_norm(center: f64, bandwidth: f64, support: f64) -> f64 {
        std_normal_cdf((support - center) / bandwidth) - std_normal_cdf(-center / bandwidth)
    }

    /// Component `k` evaluated at lag `t`; zero for negative lags.
    pub fn component(&self, k: usize, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            KernelSpec::Exponential { decay } => decay * (-decay * t).exp(),
            KernelSpec::Basis {
                centers,
                bandwidth,
                support,
            } => {
                if t >= *support {
                    return 0.0;
                }
                let c = centers[k];
                let z = (t - c) / bandwidth;
                (-0.5 * z * z).exp()
                    / (bandwidth * (2.0 * PI).sqrt() * Self::gaussian_norm(c, *bandwidth, *support))
            }
            KernelSpec::Discretized { step, .. } => {
                let lo = step * k as f64;
                if t >= lo && t < lo + step {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `int_0^t` of component `k`.
    pub fn component_integral(&self, k: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            KernelSpec::Exponential { decay } => -(-decay * t).exp_m1(),
            KernelSpec::Basis {
                centers,
                bandwidth,
                support,
            } => {
                let c = centers[k];
                if t >= *support {
                    return 1.0;
                }
                let lo = std_normal_cdf(-c / bandwidth);
                (std_normal_cdf((t - c) / bandwidth) - lo) / Self::gaussian_norm(c, *bandwidth, *support)
            }
            KernelSpec::Discretized { step, .. } => (t - step * k as f64).clamp(0.0, *step),
        }
    }

    /// Total integral of component `k`.
    pub fn component_mass(&self, k: usize) -> f64 {
        match self {
            KernelSpec::Discretized { step, .. } => {
                let _ = k;
                *step
            }
            _ => 1.0,
        }
    }

    /// `sup_{s >= t}` of component `k`, used as a thinning bound.
    pub fn component_sup_from(&self, k: usize, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            KernelSpec::Exponential { .. } => self.component(k, t),
            KernelSpec::Basis {
                centers, support, ..
            } => {
                if t >= *support {
                    0.0
                } else {
                    self.component(k, t.max(centers[k]).min(*support))
                }
            }
            KernelSpec::Discretized { step, .. } => {
                if t < step * (k + 1) as f64 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Global supremum of component `k` over all lags.
    pub fn component_max(&self, k: usize) -> f64 {
        self.component_sup_from(k, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        // composite Simpson
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn components_integrate_to_their_mass() {
        let kernels = [
            KernelSpec::exponential(1.7),
            KernelSpec::basis(vec![0.0, 1.0, 4.0], 0.8),
        ];
        for kern in &kernels {
            for k in 0..kern.n_components() {
                let upper = kern.support().min(60.0);
                let q = quad(|t| kern.component(k, t), 0.0, upper, 20_000);
                assert!((q - kern.component_mass(k)).abs() < 1e-6, "{kern:?} k={k}: {q}");
                let half = quad(|t| kern.component(k, t), 0.0, 1.3, 20_000);
                assert!((half - kern.component_integral(k, 1.3)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn grid_cells_are_right_continuous() {
        let kern = KernelSpec::discretized(0.5, 3);
        assert_eq!(kern.component(0, 0.0), 1.0);
        assert_eq!(kern.component(0, 0.5), 0.0);
        assert_eq!(kern.component(1, 0.5), 1.0);
        assert_eq!(kern.component(2, 1.5), 0.0);
        assert_eq!(kern.component_integral(1, 0.75), 0.25);
        assert_eq!(kern.component_integral(1, 10.0), 0.5);
        assert_eq!(kern.support(), 1.5);
    }

    #[test]
    fn sup_bounds_dominate_values() {
        let kern = KernelSpec::basis(vec![0.5, 2.0], 0.4);
        for k in 0..2 {
            for i in 0..200 {
                let t0 = i as f64 * 0.05;
                let bound = kern.component_sup_from(k, t0);
                for j in 0..50 {
                    let t = t0 + j as f64 * 0.03;
                    assert!(kern.component(k, t) <= bound + 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(KernelSpec::exponential(0.0).validate().is_err());
        assert!(KernelSpec::basis(vec![2.0, 1.0], 1.0).validate().is_err());
        assert!(KernelSpec::basis(vec![1.0], -1.0).validate().is_err());
        assert!(KernelSpec::discretized(0.1, 0).validate().is_err());
        assert!(KernelSpec::discretized(0.1, 4).validate().is_ok());
    }
}
