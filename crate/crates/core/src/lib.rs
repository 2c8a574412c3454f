//! Supervised-learning toolkit built around the m-arcsinh function.
//!
//! m-arcsinh, `f(x) = arcsinh(x) * sqrt(|x|) / 12`, is used both as an SVM
//! kernel (through the explicit elementwise feature map) and as an MLP
//! hidden-layer activation. Alongside it live the usual reference kernels
//! (linear, polynomial, RBF, sigmoid) and activations (identity, logistic,
//! tanh, ReLU) so the two families can be compared on the same data.
//!
//! - [`functions`]: scalar maps, derivatives and Gram matrices
//! - [`svm`]: C-SVC trained by SMO, one-vs-one multiclass
//! - [`mlp`]: one-hidden-layer classifier trained by minibatch Adam
//! - [`data`]: dataset manifest, download, parsing and deterministic splits
//! - [`metrics`]: accuracy and support-weighted precision/recall/F1
//! - [`gradcheck`]: finite-difference checks used by the `gradcheck` command

pub mod data;
pub mod error;
pub mod functions;
pub mod gradcheck;
pub mod metrics;
pub mod mlp;
pub mod svm;

pub use data::{split, Dataset, DatasetManifestEntry, Manifest};
pub use error::{Error, Result};
pub use functions::{ActivationKind, DerivativeMode, KernelKind, Matrix};
pub use metrics::{ClassificationReport, EvalReport};
pub use mlp::{MlpConfig, MlpModel};
pub use svm::{ClassWeight, SvmConfig, SvmModel};
