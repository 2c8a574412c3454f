//! m-arcsinh, the reference activations and kernels, and Gram matrices.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix, rows are samples and columns are features.
pub type Matrix = Array2<f64>;

/// m-arcsinh: `arcsinh(x) * sqrt(|x|) / 12`.
///
/// Odd, strictly increasing, and grows like `sqrt(|x|) * ln|x|`.
pub fn m_arcsinh(x: f64) -> f64 {
    feature_map(x)
}

/// Elementwise map used by the m-arcsinh kernel,
/// `(arcsinh(v) / 3) * (sqrt(|v|) / 4)`. Numerically the same function as
/// [`m_arcsinh`]; both the kernel and the activation go through here so the
/// two uses agree bit for bit.
#[inline]
pub fn feature_map(v: f64) -> f64 {
    (v.asinh() / 3.0) * (v.abs().sqrt() / 4.0)
}

/// First derivative of [`m_arcsinh`]:
/// `sqrt(|x|) / (12 sqrt(x^2 + 1)) + x arcsinh(x) / (24 |x|^(3/2))`.
///
/// The second term is `0/0` at the origin; the limit of both terms is 0 and
/// that is returned.
pub fn m_arcsinh_derivative(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let root = x.abs().sqrt();
    // x * arcsinh(x) / |x|^(3/2) == |arcsinh(x)| / sqrt(|x|)
    root / (12.0 * x.hypot(1.0)) + x.asinh().abs() / (24.0 * root)
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Which point the m-arcsinh derivative is evaluated at during backprop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Evaluate the derivative at the activation *output*, as the reference
    /// in-place derivative routine does.
    #[default]
    PaperFaithful,
    /// Evaluate the derivative at the cached pre-activation, which is the
    /// true chain-rule factor.
    Exact,
}

/// Hidden-layer activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Identity,
    Logistic,
    Tanh,
    Relu,
    MArcsinh { mode: DerivativeMode },
}

impl ActivationKind {
    /// m-arcsinh with the default (output-evaluated) derivative.
    pub const M_ARCSINH: ActivationKind = ActivationKind::MArcsinh {
        mode: DerivativeMode::PaperFaithful,
    };

    pub const ALL_NAMES: [&'static str; 5] = ["identity", "logistic", "tanh", "relu", "m_arcsinh"];

    pub fn from_name(name: &str, mode: DerivativeMode) -> Option<Self> {
        Some(match name {
            "identity" => ActivationKind::Identity,
            "logistic" => ActivationKind::Logistic,
            "tanh" => ActivationKind::Tanh,
            "relu" => ActivationKind::Relu,
            "m_arcsinh" | "m-arcsinh" => ActivationKind::MArcsinh { mode },
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Logistic => "logistic",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::MArcsinh { .. } => "m_arcsinh",
        }
    }

    /// True when [`apply_activation_derivative`] expects pre-activations
    /// rather than the forward-pass output.
    pub fn derivative_takes_pre_activation(&self) -> bool {
        matches!(
            self,
            ActivationKind::MArcsinh {
                mode: DerivativeMode::Exact
            }
        )
    }

    #[inline]
    pub fn forward(&self, z: f64) -> f64 {
        match self {
            ActivationKind::Identity => z,
            ActivationKind::Logistic => logistic(z),
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::MArcsinh { .. } => feature_map(z),
        }
    }

    /// Derivative factor given the value the backward pass sees: the
    /// forward output for every kind except m-arcsinh in `Exact` mode,
    /// where it is the pre-activation.
    #[inline]
    pub fn derivative_factor(&self, z: f64) -> f64 {
        match self {
            ActivationKind::Identity => 1.0,
            ActivationKind::Logistic => z * (1.0 - z),
            ActivationKind::Tanh => 1.0 - z * z,
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::MArcsinh { .. } => m_arcsinh_derivative(z),
        }
    }
}

/// Elementwise forward map; shape is preserved.
pub fn apply_activation(kind: ActivationKind, z: &Matrix) -> Matrix {
    z.mapv(|v| kind.forward(v))
}

pub fn apply_activation_inplace(kind: ActivationKind, z: &mut Matrix) {
    if kind != ActivationKind::Identity {
        z.mapv_inplace(|v| kind.forward(v));
    }
}

/// `delta` multiplied elementwise by the derivative factor at `z`.
///
/// `z` is the forward-pass output, except for m-arcsinh in
/// [`DerivativeMode::Exact`] where the caller passes pre-activations.
pub fn apply_activation_derivative(kind: ActivationKind, z: &Matrix, delta: &Matrix) -> Result<Matrix> {
    let mut out = delta.clone();
    scale_by_derivative(kind, z, &mut out)?;
    Ok(out)
}

/// In-place form of [`apply_activation_derivative`].
pub fn scale_by_derivative(kind: ActivationKind, z: &Matrix, delta: &mut Matrix) -> Result<()> {
    if z.dim() != delta.dim() {
        return Err(Error::DimensionMismatch(format!(
            "activation values are {:?} but delta is {:?}",
            z.dim(),
            delta.dim()
        )));
    }
    if kind == ActivationKind::Identity {
        return Ok(());
    }
    Zip::from(delta).and(z).for_each(|d, &v| *d *= kind.derivative_factor(v));
    Ok(())
}

/// SVM kernel.
///
/// `gamma` must be positive for the kernels that use it. The m-arcsinh
/// kernel takes no coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Poly { gamma: f64, degree: u32, coef0: f64 },
    Rbf { gamma: f64 },
    Sigmoid { gamma: f64, coef0: f64 },
    MArcsinh,
}

impl KernelKind {
    pub const ALL_NAMES: [&'static str; 5] = ["linear", "poly", "rbf", "sigmoid", "m_arcsinh"];

    /// Polynomial kernel with the usual defaults `degree = 3`, `coef0 = 0`.
    pub fn poly(gamma: f64) -> Self {
        KernelKind::Poly {
            gamma,
            degree: 3,
            coef0: 0.0,
        }
    }

    pub fn sigmoid(gamma: f64) -> Self {
        KernelKind::Sigmoid { gamma, coef0: 0.0 }
    }

    /// Kernel by name with the given `gamma` and default `degree`/`coef0`.
    pub fn from_name(name: &str, gamma: f64) -> Option<Self> {
        Some(match name {
            "linear" => KernelKind::Linear,
            "poly" => KernelKind::poly(gamma),
            "rbf" => KernelKind::Rbf { gamma },
            "sigmoid" => KernelKind::sigmoid(gamma),
            "m_arcsinh" | "m-arcsinh" => KernelKind::MArcsinh,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Poly { .. } => "poly",
            KernelKind::Rbf { .. } => "rbf",
            KernelKind::Sigmoid { .. } => "sigmoid",
            KernelKind::MArcsinh => "m_arcsinh",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let gamma = match *self {
            KernelKind::Linear | KernelKind::MArcsinh => return Ok(()),
            KernelKind::Poly { gamma, degree, .. } => {
                if degree < 1 {
                    return Err(Error::InvalidConfig("poly degree must be >= 1".into()));
                }
                gamma
            }
            KernelKind::Rbf { gamma } | KernelKind::Sigmoid { gamma, .. } => gamma,
        };
        if gamma > 0.0 && gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{} kernel needs gamma > 0, got {gamma}",
                self.name()
            )))
        }
    }
}

/// Pairwise kernel evaluations, entry `(i, j) = K(x_i, y_j)`.
///
/// The m-arcsinh Gram matrix is the linear Gram matrix of the feature-mapped
/// inputs, which makes it positive semidefinite by construction.
pub fn gram_matrix(kind: KernelKind, x: &Matrix, y: &Matrix) -> Result<Matrix> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "gram matrix of {} and {} feature columns",
            x.ncols(),
            y.ncols()
        )));
    }
    let gram = match kind {
        KernelKind::Linear => x.dot(&y.t()),
        KernelKind::Poly {
            gamma,
            degree,
            coef0,
        } => {
            let mut k = x.dot(&y.t());
            let degree = degree as i32;
            k.mapv_inplace(|v| (gamma * v + coef0).powi(degree));
            k
        }
        KernelKind::Rbf { gamma } => {
            let mut k = Matrix::zeros((x.nrows(), y.nrows()));
            Zip::from(k.rows_mut()).and(x.rows()).for_each(|mut out, xi| {
                for (o, yj) in out.iter_mut().zip(y.rows()) {
                    let dist: f64 = xi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                    *o = (-gamma * dist).exp();
                }
            });
            k
        }
        KernelKind::Sigmoid { gamma, coef0 } => {
            let mut k = x.dot(&y.t());
            k.mapv_inplace(|v| (gamma * v + coef0).tanh());
            k
        }
        KernelKind::MArcsinh => {
            let fx = x.mapv(feature_map);
            let fy = y.mapv(feature_map);
            fx.dot(&fy.t())
        }
    };
    Ok(gram)
}
