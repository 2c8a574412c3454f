//! C-SVC with any kernel from [`crate::functions`], one-vs-one multiclass.

mod smo;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

pub use smo::{binary_smo_solve, SmoSolution};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::functions::{gram_matrix, KernelKind, Matrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    #[default]
    Uniform,
    /// `C_i = C * N / (k * n_i)`, from the full training set's class counts.
    Balanced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: KernelKind,
    pub c: f64,
    pub class_weight: ClassWeight,
    pub tol: f64,
    pub max_iter: usize,
    /// Kept for parity with the reference configuration; the solver is
    /// deterministic and never draws from it.
    pub seed: u64,
}

impl SvmConfig {
    pub const BENCH_GAMMA: f64 = 0.001;
    pub const BENCH_SEED: u64 = 13;

    /// `C = 1`, balanced class weights, `tol = 1e-3`, at most 100 000 pair
    /// updates per binary problem.
    pub fn new(kernel: KernelKind) -> Self {
        SvmConfig {
            kernel,
            c: 1.0,
            class_weight: ClassWeight::Balanced,
            tol: 1e-3,
            max_iter: 100_000,
            seed: Self::BENCH_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-class penalties `C * N / (k * n_i)`, so `C_i * n_i` is the same for
/// every class.
pub fn balanced_class_weights(class_counts: &[usize], c: f64) -> Result<Vec<f64>> {
    if let Some(empty) = class_counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(empty));
    }
    let total: usize = class_counts.iter().sum();
    let k = class_counts.len() as f64;
    Ok(class_counts
        .iter()
        .map(|&n| c * total as f64 / (k * n as f64))
        .collect())
}

/// Binary machine separating class `positive` (+1) from `negative` (-1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: usize,
    pub negative: usize,
    pub support_vectors: Matrix,
    /// `alpha_k * y_k` for each support vector.
    pub dual_coef: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

impl PairModel {
    pub fn decision_function(&self, kernel: KernelKind, x: &Matrix) -> Result<Vec<f64>> {
        let k = gram_matrix(kernel, x, &self.support_vectors)?;
        Ok(k.rows()
            .into_iter()
            .map(|row| row.iter().zip(&self.dual_coef).map(|(k, c)| k * c).sum::<f64>() + self.intercept)
            .collect())
    }
}

/// Fitted one-vs-one classifier; one [`PairModel`] per class pair `i < j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelKind,
    pub class_names: Vec<String>,
    pub n_features: usize,
    pub pairs: Vec<PairModel>,
}

impl SvmModel {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Largest number of SMO updates any pair needed.
    pub fn max_iterations(&self) -> usize {
        self.pairs.iter().map(|p| p.iterations).max().unwrap_or(0)
    }
}

/// Train one binary machine per class pair on that pair's samples.
///
/// Classes of the table that have no training samples are left out of the
/// pairing. With balanced weighting, the per-class `C` comes from the class
/// counts of the whole training set.
pub fn svc_fit(train: &Dataset, config: &SvmConfig) -> Result<SvmModel> {
    config.validate()?;
    let counts = train.class_counts();
    let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if present.len() < 2 {
        return Err(Error::SingleClass(present.len()));
    }
    let class_c: Vec<f64> = match config.class_weight {
        ClassWeight::Uniform => vec![config.c; counts.len()],
        ClassWeight::Balanced => {
            let present_counts: Vec<usize> = present.iter().map(|&c| counts[c]).collect();
            let weights = balanced_class_weights(&present_counts, config.c)?;
            let mut full = vec![config.c; counts.len()];
            for (&c, w) in present.iter().zip(weights) {
                full[c] = w;
            }
            full
        }
    };

    let mut pairs = Vec::with_capacity(present.len() * (present.len() - 1) / 2);
    for (a, &pos) in present.iter().enumerate() {
        for &neg in &present[a + 1..] {
            pairs.push(fit_pair(train, config, &class_c, pos, neg)?);
        }
    }
    Ok(SvmModel {
        kernel: config.kernel,
        class_names: train.class_names.clone(),
        n_features: train.n_features(),
        pairs,
    })
}

fn fit_pair(train: &Dataset, config: &SvmConfig, class_c: &[f64], pos: usize, neg: usize) -> Result<PairModel> {
    let idx: Vec<usize> = (0..train.n_samples())
        .filter(|&i| train.y[i] == pos || train.y[i] == neg)
        .collect();
    let x = train.x.select(Axis(0), &idx);
    let y: Vec<f64> = idx
        .iter()
        .map(|&i| if train.y[i] == pos { 1.0 } else { -1.0 })
        .collect();
    let c: Vec<f64> = idx.iter().map(|&i| class_c[train.y[i]]).collect();
    let k = gram_matrix(config.kernel, &x, &x)?;
    let sol = binary_smo_solve(&k, &y, &c, config.tol, config.max_iter)?;

    let sv: Vec<usize> = (0..idx.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(PairModel {
        positive: pos,
        negative: neg,
        support_vectors: x.select(Axis(0), &sv),
        dual_coef: sv.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
        intercept: sol.b,
        iterations: sol.iterations,
    })
}

/// Pairwise decision values, `out[p][s]` for pair `p` and sample `s`.
pub fn svc_decision_values(model: &SvmModel, x: &Matrix) -> Result<Vec<Vec<f64>>> {
    if x.ncols() != model.n_features {
        return Err(Error::DimensionMismatch(format!(
            "model has {} features, input has {}",
            model.n_features,
            x.ncols()
        )));
    }
    model
        .pairs
        .iter()
        .map(|p| p.decision_function(model.kernel, x))
        .collect()
}

/// Majority vote over the pair machines.
///
/// A positive decision value votes for the pair's first class. Ties go to
/// the class with the larger sum of |decision value| over the votes it won,
/// then to the lowest class index.
pub fn svc_predict(model: &SvmModel, x: &Matrix) -> Result<Vec<usize>> {
    let decisions = svc_decision_values(model, x)?;
    let k = model.n_classes();
    Ok((0..x.nrows())
        .map(|s| {
            let mut votes = vec![0usize; k];
            let mut strength = vec![0.0f64; k];
            for (pair, dec) in model.pairs.iter().zip(&decisions) {
                let d = dec[s];
                let winner = if d > 0.0 { pair.positive } else { pair.negative };
                votes[winner] += 1;
                strength[winner] += d.abs();
            }
            vote_winner(&votes, &strength)
        })
        .collect())
}

pub(crate) fn vote_winner(votes: &[usize], strength: &[f64]) -> usize {
    let mut best = 0;
    for c in 1..votes.len() {
        if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn toy(x: Matrix, y: Vec<usize>, k: usize) -> Dataset {
        let names = (0..k).map(|c| c.to_string()).collect();
        Dataset::new("toy", x, y, names).unwrap()
    }

    #[test]
    fn balanced_weight_examples() {
        assert_eq!(balanced_class_weights(&[2, 8], 1.0).unwrap(), vec![2.5, 0.625]);
        assert_eq!(balanced_class_weights(&[5, 5], 1.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(balanced_class_weights(&[1, 1, 1], 3.0).unwrap(), vec![3.0, 3.0, 3.0]);
        assert!(matches!(balanced_class_weights(&[3, 0], 1.0), Err(Error::EmptyClass(1))));
    }

    #[test]
    fn balanced_weights_conserve_class_mass() {
        let counts = [7, 31, 2, 100];
        let w = balanced_class_weights(&counts, 0.7).unwrap();
        let mass: Vec<f64> = w.iter().zip(&counts).map(|(w, &n)| w * n as f64).collect();
        for m in &mass {
            assert_relative_eq!(*m, mass[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn pair_count_is_k_choose_2() {
        let x = array![[0.0], [1.0]];
        let m = svc_fit(&toy(x, vec![0, 1], 2), &SvmConfig::new(KernelKind::Linear)).unwrap();
        assert_eq!(m.pairs.len(), 1);

        let x = Matrix::from_shape_fn((20, 2), |(i, j)| ((i % 10) * 3 + j) as f64);
        let y = (0..20).map(|i| i % 10).collect();
        let m = svc_fit(&toy(x, y, 10), &SvmConfig::new(KernelKind::Linear)).unwrap();
        assert_eq!(m.pairs.len(), 45);
    }

    #[test]
    fn separable_training_accuracy_is_one() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [5.0, 5.0], [5.0, 4.0]];
        let d = toy(x.clone(), vec![0, 0, 1, 1], 2);
        let mut cfg = SvmConfig::new(KernelKind::Linear);
        cfg.c = 100.0;
        let m = svc_fit(&d, &cfg).unwrap();
        assert_eq!(svc_predict(&m, &x).unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn dual_coefficients_respect_class_bounds() {
        let x = array![[0.0], [0.2], [0.1], [0.3], [1.0], [-1.0], [0.15]];
        let d = toy(x, vec![0, 1, 1, 0, 0, 1, 1], 2);
        let cfg = SvmConfig::new(KernelKind::Rbf { gamma: 1.0 });
        let m = svc_fit(&d, &cfg).unwrap();
        let w = balanced_class_weights(&d.class_counts(), 1.0).unwrap();
        let pair = &m.pairs[0];
        let sum: f64 = pair.dual_coef.iter().sum();
        assert!(sum.abs() < 1e-8);
        for &coef in &pair.dual_coef {
            let bound = if coef > 0.0 { w[0] } else { w[1] };
            assert!(coef.abs() <= bound && coef != 0.0);
        }
        assert!(pair.support_vectors.nrows() <= 7);
    }

    #[test]
    fn single_class_is_rejected() {
        let d = toy(array![[0.0], [1.0]], vec![1, 1], 2);
        assert!(matches!(
            svc_fit(&d, &SvmConfig::new(KernelKind::Linear)),
            Err(Error::SingleClass(1))
        ));
    }

    #[test]
    fn vote_tie_breaks() {
        // one vote each, decision sums 2.0 / 0.5 / 0.1
        assert_eq!(vote_winner(&[1, 1, 1], &[2.0, 0.5, 0.1]), 0);
        assert_eq!(vote_winner(&[1, 1, 1], &[0.1, 0.5, 2.0]), 2);
        assert_eq!(vote_winner(&[1, 1, 1], &[0.5, 0.5, 0.5]), 0);
        assert_eq!(vote_winner(&[0, 2, 1], &[0.0, 0.1, 9.0]), 1);
    }

    #[test]
    fn binary_sign_rule() {
        let pair = PairModel {
            positive: 0,
            negative: 1,
            support_vectors: array![[1.0]],
            dual_coef: vec![0.0],
            intercept: 0.7,
            iterations: 0,
        };
        let m = SvmModel {
            kernel: KernelKind::Linear,
            class_names: vec!["a".into(), "b".into()],
            n_features: 1,
            pairs: vec![pair],
        };
        assert_eq!(svc_decision_values(&m, &array![[3.0]]).unwrap(), vec![vec![0.7]]);
        assert_eq!(svc_predict(&m, &array![[3.0]]).unwrap(), vec![0]);
        assert!(svc_predict(&m, &array![[3.0, 1.0]]).is_err());
    }

    #[test]
    fn invalid_config() {
        let mut cfg = SvmConfig::new(KernelKind::Linear);
        cfg.c = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = SvmConfig::new(KernelKind::Rbf { gamma: 0.0 });
        assert!(cfg.validate().is_err());
    }
}
