//! Kernel functions and SVM hyperparameters.

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Linear,
        KernelKind::Sigmoid,
        KernelKind::Rbf,
        KernelKind::Polynomial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "poly" | "polynomial" => Ok(KernelKind::Polynomial),
            "rbf" => Ok(KernelKind::Rbf),
            "sigmoid" => Ok(KernelKind::Sigmoid),
            other => Err(Error::arg(format!("unknown kernel {other:?}"))),
        }
    }
}

/// How the kernel bandwidth is derived from the training features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GammaMode {
    /// `1 / k`
    Auto,
    /// `1 / (k · Var)` with the variance pooled over all feature entries.
    Scale,
}

impl GammaMode {
    pub fn name(self) -> &'static str {
        match self {
            GammaMode::Auto => "auto",
            GammaMode::Scale => "scale",
        }
    }
}

impl fmt::Display for GammaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GammaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(GammaMode::Auto),
            "scale" => Ok(GammaMode::Scale),
            other => Err(Error::arg(format!("unknown gamma mode {other:?}"))),
        }
    }
}

/// Kernel choice plus the soft-margin penalty `C`. `degree` is only used by
/// the polynomial kernel but is always carried.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub c: f64,
    pub gamma: GammaMode,
    pub degree: u32,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, c: f64, gamma: GammaMode, degree: u32) -> Result<Self> {
        let spec = Self {
            kind,
            c,
            gamma,
            degree,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::arg(format!("C must be positive, got {}", self.c)));
        }
        if self.degree == 0 {
            return Err(Error::arg("degree must be at least 1"));
        }
        Ok(())
    }

    /// The best-performing grid cell: rbf, C = 4, gamma = scale, degree 2.
    pub fn best_reported() -> Self {
        Self {
            kind: KernelKind::Rbf,
            c: 4.0,
            gamma: GammaMode::Scale,
            degree: 2,
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, C={}, gamma={}, degree={}", self.kind, self.c, self.gamma, self.degree)
    }
}

/// `K(x, y)` with zero offset for the polynomial and sigmoid kernels.
pub fn kernel_eval(kind: KernelKind, degree: u32, gamma: f64, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(kernel_unchecked(kind, degree, gamma, x, y))
}

pub(crate) fn kernel_unchecked(kind: KernelKind, degree: u32, gamma: f64, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    match kind {
        KernelKind::Linear => x.dot(&y),
        KernelKind::Polynomial => (gamma * x.dot(&y)).powi(degree as i32),
        KernelKind::Rbf => {
            let sq: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            (-gamma * sq).exp()
        }
        KernelKind::Sigmoid => (gamma * x.dot(&y)).tanh(),
    }
}

/// Resolve the bandwidth for training features `x` (`n × k`).
pub fn resolve_gamma(mode: GammaMode, x: ArrayView2<'_, f64>) -> Result<f64> {
    let (n, k) = x.dim();
    if n == 0 || k == 0 {
        return Err(Error::arg("gamma needs non-empty training features"));
    }
    match mode {
        GammaMode::Auto => Ok(1.0 / k as f64),
        GammaMode::Scale => {
            let count = (n * k) as f64;
            let mean = x.sum() / count;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
            if var <= 0.0 || !var.is_finite() {
                return Err(Error::DegenerateData(
                    "pooled feature variance is zero; gamma=scale undefined".into(),
                ));
            }
            Ok(1.0 / (k as f64 * var))
        }
    }
}
