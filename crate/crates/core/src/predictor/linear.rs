//! Multinomial logistic regression with balanced class weights.
//!
//! Used as the cheap screening proxy for proxy-hybrid acquisition, and also
//! available as a standalone (refit-per-call) predictor.

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_inputs, Predictor, ProbabilityMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    /// L2 strength on the non-bias weights.
    pub reg: f64,
    pub max_iter: usize,
    /// Stop once the largest absolute gradient entry drops below this.
    pub tol: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            reg: 1.0,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

/// Class-weighted cross-entropy plus `(reg / 2) * ||W||²` over the non-bias
/// weights, for parameters laid out as one row per observed class with the
/// bias in the last column.
pub struct WeightedLogLoss<'a> {
    x: ArrayView2<'a, f64>,
    /// Row of each sample's class within the parameter matrix.
    targets: Vec<usize>,
    sample_weights: Vec<f64>,
    n_rows: usize,
    reg: f64,
}

/// Observed classes in ascending order, and the balanced weight
/// `n / (k_observed * n_c)` for every class (0 for unobserved ones).
pub fn balanced_class_weights(y: &[usize], n_classes: usize) -> (Vec<usize>, Vec<f64>) {
    let mut counts = vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    let present: Vec<usize> = (0..n_classes).filter(|&c| counts[c] > 0).collect();
    let k = present.len() as f64;
    let n = y.len() as f64;
    let weights = counts
        .iter()
        .map(|&n_c| if n_c == 0 { 0.0 } else { n / (k * n_c as f64) })
        .collect();
    (present, weights)
}

impl<'a> WeightedLogLoss<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &[usize], n_classes: usize, reg: f64) -> Self {
        let (present, class_weights) = balanced_class_weights(y, n_classes);
        let mut row_of = vec![usize::MAX; n_classes];
        for (r, &c) in present.iter().enumerate() {
            row_of[c] = r;
        }
        WeightedLogLoss {
            x,
            targets: y.iter().map(|&c| row_of[c]).collect(),
            sample_weights: y.iter().map(|&c| class_weights[c]).collect(),
            n_rows: present.len(),
            reg,
        }
    }

    /// Parameter shape: (observed classes, features + 1).
    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.x.ncols() + 1)
    }

    fn logits(&self, w: &Array2<f64>) -> Array2<f64> {
        let d = self.x.ncols();
        let mut z = self.x.dot(&w.slice(s![.., ..d]).t());
        z += &w.column(d);
        z
    }

    pub fn value(&self, w: &Array2<f64>) -> f64 {
        self.value_and_gradient_impl(w, false).0
    }

    pub fn value_and_gradient(&self, w: &Array2<f64>) -> (f64, Array2<f64>) {
        self.value_and_gradient_impl(w, true)
    }

    fn value_and_gradient_impl(&self, w: &Array2<f64>, with_grad: bool) -> (f64, Array2<f64>) {
        let d = self.x.ncols();
        let mut z = self.logits(w);
        let mut loss = 0.0;
        for (i, mut row) in z.axis_iter_mut(Axis(0)).enumerate() {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            let t = self.targets[i];
            let sw = self.sample_weights[i];
            loss += sw * (lse - row[t]);
            if with_grad {
                // residual p - e_y, scaled by the sample weight
                row.mapv_inplace(|v| (v - lse).exp());
                row[t] -= 1.0;
                row *= sw;
            }
        }
        let weights = w.slice(s![.., ..d]);
        loss += 0.5 * self.reg * weights.iter().map(|v| v * v).sum::<f64>();
        if !with_grad {
            return (loss, Array2::zeros((0, 0)));
        }
        let mut grad = Array2::zeros(w.raw_dim());
        let gw = z.t().dot(&self.x) + &(&weights * self.reg);
        grad.slice_mut(s![.., ..d]).assign(&gw);
        grad.column_mut(d).assign(&z.sum_axis(Axis(0)));
        (loss, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// One row per class of the full class alphabet, bias in the last column.
    /// Rows of classes absent from the fitting context are zero and unused.
    pub weights: Array2<f64>,
    pub class_weights: Vec<f64>,
    pub reg: f64,
    /// Classes observed in the fitting context.
    pub classes: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearModel {
    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    /// Class probabilities; classes absent from the fitting context get 0.
    /// A single-class context yields the one-hot of that class.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<ProbabilityMatrix> {
        let d = self.weights.ncols() - 1;
        if x.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "model expects {d} features, got {}",
                x.ncols()
            )));
        }
        let mut out = Array2::zeros((x.nrows(), self.n_classes()));
        if let [only] = self.classes[..] {
            out.column_mut(only).fill(1.0);
            return ProbabilityMatrix::new(out);
        }
        for (i, row) in x.rows().into_iter().enumerate() {
            let z: Vec<f64> = self
                .classes
                .iter()
                .map(|&c| self.weights.row(c).slice(s![..d]).dot(&row) + self.weights[[c, d]])
                .collect();
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = z.iter().map(|v| (v - max).exp()).sum();
            for (&c, v) in self.classes.iter().zip(&z) {
                out[[i, c]] = (v - max).exp() / denom;
            }
        }
        ProbabilityMatrix::new(out)
    }
}

/// Fit by full-batch gradient descent from zero, with Barzilai-Borwein trial
/// steps and Armijo backtracking.
pub fn fit_linear(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    n_classes: usize,
    cfg: &LinearConfig,
) -> Result<LinearModel> {
    if x.nrows() == 0 || x.nrows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot fit on {} rows with {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if let Some(&c) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidArgument(format!(
            "label {c} out of range for {n_classes} classes"
        )));
    }
    if !(cfg.reg > 0.0) {
        return Err(Error::InvalidArgument("regularization must be > 0".into()));
    }
    let d = x.ncols();
    let (classes, class_weights) = balanced_class_weights(y, n_classes);
    let mut weights = Array2::zeros((n_classes, d + 1));
    if classes.len() == 1 {
        return Ok(LinearModel {
            weights,
            class_weights,
            reg: cfg.reg,
            classes,
            iterations: 0,
            converged: true,
        });
    }

    let objective = WeightedLogLoss::new(x, y, n_classes, cfg.reg);
    let mut w = Array2::<f64>::zeros(objective.shape());
    let (mut f, mut g) = objective.value_and_gradient(&w);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let g_sq: f64 = g.iter().map(|v| v * v).sum();
        let mut accepted = None;
        while step > 1e-16 {
            let candidate = &w - &(&g * step);
            let fc = objective.value(&candidate);
            if fc <= f - 1e-4 * step * g_sq {
                accepted = Some(candidate);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else { break };
        let (fn_, gn) = objective.value_and_gradient(&next);
        let ds = &next - &w;
        let dg = &gn - &g;
        let sy: f64 = ds.iter().zip(dg.iter()).map(|(a, b)| a * b).sum();
        let ss: f64 = ds.iter().map(|v| v * v).sum();
        step = if sy > 0.0 { ss / sy } else { step * 2.0 };
        w = next;
        f = fn_;
        g = gn;
    }
    if !converged && g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < cfg.tol {
        converged = true;
    }
    for (r, &c) in classes.iter().enumerate() {
        weights.row_mut(c).assign(&w.row(r));
    }
    Ok(LinearModel {
        weights,
        class_weights,
        reg: cfg.reg,
        classes,
        iterations,
        converged,
    })
}

/// Refits a logistic model on the context at every call.
#[derive(Debug, Clone, Default)]
pub struct LinearPredictor {
    cfg: LinearConfig,
}

impl LinearPredictor {
    pub fn new(cfg: LinearConfig) -> Self {
        LinearPredictor { cfg }
    }
}

impl Predictor for LinearPredictor {
    fn name(&self) -> String {
        "linear".into()
    }

    fn predict_proba(
        &mut self,
        context_x: ArrayView2<'_, f64>,
        context_y: &[usize],
        queries: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> Result<ProbabilityMatrix> {
        check_inputs(context_x, context_y, queries, n_classes)?;
        fit_linear(context_x, context_y, n_classes, &self.cfg)?.predict_proba(queries)
    }
}
