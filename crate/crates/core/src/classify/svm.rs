use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    /// Box constraint on the dual variables.
    pub c: f64,
    /// Stopping threshold on the maximal KKT violation.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self { c: 10.0, tolerance: 1e-3, max_iters: 100_000 }
    }
}

impl SvmOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParameter(format!("SVM C must be positive, got {}", self.c)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("SVM tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("SVM max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Binary machine for one class against the rest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinaryMachine {
    /// Dual variables, one per training point.
    pub alpha: Vec<f64>,
    /// `+1` for the class, `-1` for the rest.
    pub y: Vec<f64>,
    pub bias: f64,
    pub kkt_violation: f64,
    pub iterations: usize,
}

impl BinaryMachine {
    fn decision(&self, row: impl Iterator<Item = f64>) -> f64 {
        row.zip(self.alpha.iter().zip(&self.y)).map(|(k, (a, y))| a * y * k).sum::<f64>() + self.bias
    }
}

/// One-vs-rest kernel SVM over a precomputed Gram.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    /// Label value of each machine, ascending.
    pub classes: Vec<usize>,
    pub machines: Vec<BinaryMachine>,
    pub options: SvmOptions,
}

impl SvmModel {
    pub fn num_train(&self) -> usize {
        self.machines.first().map_or(0, |m| m.alpha.len())
    }

    /// Indices of training points with a nonzero dual variable in any machine.
    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.num_train()).filter(|&i| self.machines.iter().any(|m| m.alpha[i] > 0.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    /// `rows × classes` decision values.
    pub scores: DMatrix<f64>,
}

/// Trains one binary machine per distinct label by SMO with second-order
/// working-set selection.
pub fn svm_train<T: Scalar>(gram: &DMatrix<T>, labels: &[usize], options: &SvmOptions) -> Result<SvmModel> {
    options.validate()?;
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(Error::Shape(format!("Gram must be square, got {}x{}", n, gram.ncols())));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    if n == 0 {
        return Err(Error::Empty("no training points"));
    }
    let k = DMatrix::from_fn(n, n, |i, j| gram[(i, j)].as_f64());
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training Gram".into()));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let machines = classes
        .iter()
        .map(|&c| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            smo(&k, y, options)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel { classes, machines, options: *options })
}

/// Predicts from kernel rows of test points against the training set.
/// Ties in the decision value go to the smallest label.
pub fn svm_predict<T: Scalar>(model: &SvmModel, rows: &DMatrix<T>) -> Result<Prediction> {
    if rows.ncols() != model.num_train() {
        return Err(Error::DimensionMismatch { expected: model.num_train(), got: rows.ncols() });
    }
    let mut scores = DMatrix::zeros(rows.nrows(), model.classes.len());
    let mut labels = Vec::with_capacity(rows.nrows());
    for r in 0..rows.nrows() {
        let mut best = 0;
        for (c, machine) in model.machines.iter().enumerate() {
            let s = machine.decision(rows.row(r).iter().map(|v| v.as_f64()));
            if !s.is_finite() {
                return Err(Error::NonFinite(format!("decision value for row {r}")));
            }
            scores[(r, c)] = s;
            if s > scores[(r, best)] {
                best = c;
            }
        }
        labels.push(model.classes[best]);
    }
    Ok(Prediction { labels, scores })
}

fn smo(k: &DMatrix<f64>, y: Vec<f64>, options: &SvmOptions) -> Result<BinaryMachine> {
    let n = y.len();
    let c = options.c;
    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα.
    let mut g = vec![-1.0; n];
    let mut iterations = 0;
    let mut violation;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y[t] * g[t] >= gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !low {
                continue;
            }
            let v = y[t] * g[t];
            gmax2 = gmax2.max(v);
            if i == usize::MAX {
                continue;
            }
            let b = gmax + v;
            if b > 0.0 {
                let mut a = k[(i, i)] + k[(t, t)] - 2.0 * k[(i, t)];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -b * b / a;
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        violation = gmax + gmax2;
        if !violation.is_finite() && (i == usize::MAX || gmax2 == f64::NEG_INFINITY) {
            violation = 0.0;
        }
        if violation < options.tolerance || j == usize::MAX || iterations >= options.max_iters {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k[(i, i)] + k[(j, j)] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[(i, i)] + k[(j, j)] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            g[t] += q(i, t) * di + q(j, t) * dj;
        }
    }
    if alpha.iter().chain(&g).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVM dual iterate".into()));
    }
    Ok(BinaryMachine { bias: -rho(&alpha, &y, &g, c), alpha, y, kkt_violation: violation.max(0.0), iterations })
}

fn rho(alpha: &[f64], y: &[f64], g: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}
