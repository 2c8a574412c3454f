//! Finite-difference checks for the m-arcsinh derivative and MLP backprop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::functions::{m_arcsinh, m_arcsinh_derivative, ActivationKind, DerivativeMode, Matrix};
use crate::mlp::{Network, OutputTransform};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, max_error: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: max error {:.3e} (tolerance {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_error,
            self.tolerance
        )
    }
}

fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Closed-form derivative against central differences on `n` evenly spaced
/// points of `±[0.01, 50]`, absolute error.
pub fn check_m_arcsinh_derivative(n: usize) -> CheckResult {
    let n = n.max(2);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let x = 0.01 + (50.0 - 0.01) * i as f64 / (n - 1) as f64;
        for x in [x, -x] {
            let err = (central(m_arcsinh, x, 1e-6) - m_arcsinh_derivative(x)).abs();
            worst = worst.max(err);
        }
    }
    CheckResult::new("m-arcsinh derivative", worst, 1e-6)
}

/// Relative error with a small floor so near-zero components do not blow up.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

/// Backprop gradients of a 2-3-2 softmax network with exact m-arcsinh
/// derivatives against central differences of the loss.
pub fn check_mlp_gradients(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let act = ActivationKind::MArcsinh {
        mode: DerivativeMode::Exact,
    };
    let mut net = Network::glorot(&[2, 3, 2], act, OutputTransform::Softmax, &mut rng);
    let x = Matrix::from_shape_simple_fn((5, 2), || rng.random_range(-2.0..2.0));
    let y: Vec<usize> = (0..5).map(|_| rng.random_range(0..2)).collect();
    // two softmax outputs, so one-hot over two columns
    let t = Matrix::from_shape_fn((5, 2), |(i, j)| if y[i] == j { 1.0 } else { 0.0 });
    let alpha = 1e-2;
    let h = 1e-5;

    let (_, grads) = net.loss_and_gradients(&x, &t, alpha).expect("shapes agree");
    let mut worst: f64 = 0.0;
    for l in 0..net.layers.len() {
        for idx in 0..net.layers[l].weights.len() {
            let (r, c) = (idx / net.layers[l].weights.ncols(), idx % net.layers[l].weights.ncols());
            let numeric = perturbed(&mut net, &x, &t, alpha, h, |n| &mut n.layers[l].weights[[r, c]]);
            worst = worst.max(rel_err(grads.weights[l][[r, c]], numeric));
        }
        for j in 0..net.layers[l].bias.len() {
            let numeric = perturbed(&mut net, &x, &t, alpha, h, |n| &mut n.layers[l].bias[j]);
            worst = worst.max(rel_err(grads.biases[l][j], numeric));
        }
    }
    CheckResult::new("mlp 2-3-2 backprop", worst, 1e-4)
}

fn perturbed<F>(net: &mut Network, x: &Matrix, t: &Matrix, alpha: f64, h: f64, param: F) -> f64
where
    F: Fn(&mut Network) -> &mut f64,
{
    let orig = *param(net);
    *param(net) = orig + h;
    let plus = net.loss(x, t, alpha);
    *param(net) = orig - h;
    let minus = net.loss(x, t, alpha);
    *param(net) = orig;
    (plus - minus) / (2.0 * h)
}

/// All checks run by the `gradcheck` command.
pub fn run_all() -> Vec<CheckResult> {
    vec![check_m_arcsinh_derivative(2001), check_mlp_gradients(7)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_check_passes() {
        let r = check_m_arcsinh_derivative(501);
        assert!(r.passed, "{r}");
    }

    #[test]
    fn backprop_check_passes() {
        for seed in 0..5 {
            let r = check_mlp_gradients(seed);
            assert!(r.passed, "{r}");
        }
    }
}
