//! Learner options shared by the fitting commands, merged from flags, an
//! optional config file and built-in defaults (in that order).

use std::path::Path;

use clap::{Args, ValueEnum};
use hawkes_core::learn::{LearnConfig, Penalty, PenaltyKind};
use hawkes_core::{Error, KernelSpec, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Mle,
    MleOde,
    Ls,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Exp,
    Basis,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyArg {
    None,
    Sparse,
    Group,
    Lowrank,
}

impl From<PenaltyArg> for PenaltyKind {
    fn from(p: PenaltyArg) -> Self {
        match p {
            PenaltyArg::None => PenaltyKind::None,
            PenaltyArg::Sparse => PenaltyKind::Sparse,
            PenaltyArg::Group => PenaltyKind::GroupSparse,
            PenaltyArg::Lowrank => PenaltyKind::LowRank,
        }
    }
}

/// Every field is optional so that flags and config files can be layered.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FitOptions {
    /// Learning route
    #[arg(long, value_enum)]
    pub learner: Option<LearnerKind>,
    /// Kernel family: exponential, Gaussian basis, or discretized grid
    #[arg(long, value_enum)]
    pub kernel: Option<KernelKind>,
    /// Exponential decay rate [default: 1]
    #[arg(long)]
    pub decay: Option<f64>,
    /// Basis centers, comma separated [default: 0.5,1.5,2.5,3.5,4.5]
    #[arg(long, value_delimiter = ',')]
    pub centers: Option<Vec<f64>>,
    /// Basis bandwidth [default: 0.5]
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Basis truncation point [default: 10]
    #[arg(long)]
    pub support: Option<f64>,
    /// Grid cell width [default: 0.5]
    #[arg(long)]
    pub step: Option<f64>,
    /// Number of grid cells [default: 10]
    #[arg(long)]
    pub len: Option<usize>,
    /// Ridge term of the least-squares learner [default: 0]
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Structural penalty [default: none]
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyArg>,
    /// Penalty weight [default: 0]
    #[arg(long)]
    pub weight: Option<f64>,
    /// Smoothness weight of the grid and time-varying learners [default: 10]
    #[arg(long)]
    pub smoothness: Option<f64>,
    /// Iteration cap [default: 200]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Relative objective tolerance [default: 1e-6]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! layer {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        FitOptions { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl FitOptions {
    /// Fields set here win over those set in `lower`.
    pub fn over(self, lower: FitOptions) -> FitOptions {
        layer!(
            self, lower, learner, kernel, decay, centers, bandwidth, support, step, len, ridge, penalty, weight,
            smoothness, max_iters, tol, seed
        )
    }

    /// Reads a JSON or TOML config file, chosen by extension.
    pub fn from_file(path: &Path) -> Result<FitOptions> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        if is_toml {
            toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        }
    }

    pub fn layered(self, config: Option<&Path>) -> Result<FitOptions> {
        Ok(match config {
            Some(p) => self.over(FitOptions::from_file(p)?),
            None => self,
        })
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let learner = self.learner.unwrap_or(LearnerKind::Mle);
        let kind = self.kernel.unwrap_or(match learner {
            LearnerKind::Mle => KernelKind::Exp,
            _ => KernelKind::Grid,
        });
        let kernel = match kind {
            KernelKind::Exp => KernelSpec::exponential(self.decay.unwrap_or(1.0)),
            KernelKind::Basis => KernelSpec::Basis {
                centers: self.centers.clone().unwrap_or_else(|| vec![0.5, 1.5, 2.5, 3.5, 4.5]),
                bandwidth: self.bandwidth.unwrap_or(0.5),
                support: self.support.unwrap_or(hawkes_core::kernel::DEFAULT_BASIS_SUPPORT),
            },
            KernelKind::Grid => KernelSpec::discretized(self.step.unwrap_or(0.5), self.len.unwrap_or(10)),
        };
        kernel.validate()?;
        if learner != LearnerKind::Mle && kind != KernelKind::Grid {
            return Err(Error::UnsupportedKernel(format!(
                "the {} learner estimates a discretized kernel; use --kernel grid, or --learner mle for {} kernels",
                learner_name(learner),
                kernel.type_name()
            )));
        }
        let defaults = LearnConfig::default();
        let learn = LearnConfig {
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            tol: self.tol.unwrap_or(defaults.tol),
            penalty: Penalty {
                kind: self.penalty.map(PenaltyKind::from).unwrap_or_default(),
                weight: self.weight.unwrap_or(0.0),
            },
            seed: self.seed.unwrap_or(defaults.seed),
            smoothness: self.smoothness.unwrap_or(defaults.smoothness),
        };
        learn.validate()?;
        Ok(Resolved {
            learner,
            kernel,
            ridge: self.ridge.unwrap_or(0.0),
            learn,
        })
    }
}

pub fn learner_name(l: LearnerKind) -> &'static str {
    match l {
        LearnerKind::Mle => "mle",
        LearnerKind::MleOde => "mle-ode",
        LearnerKind::Ls => "ls",
    }
}

/// Fully specified learner settings, echoed into report files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub learner: LearnerKind,
    pub kernel: KernelSpec,
    pub ridge: f64,
    pub learn: LearnConfig,
}

impl Resolved {
    pub fn grid(&self) -> Option<(f64, usize)> {
        match self.kernel {
            KernelSpec::Discretized { step, len } => Some((step, len)),
            _ => None,
        }
    }
}
