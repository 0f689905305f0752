//! Multi-modal contrastive loss over a bijectively paired set.
//!
//! The affinity kernel is `exp(-||x_i - y_j||^2 / tau)`. `Q^x` normalizes it
//! over `j` (rows sum to one) and `Q^y` over `i` (columns sum to one). The
//! loss is
//!
//! ```text
//! L = -(1/N) * sum_i [ log Q^x(i,i) + log Q^y(i,i) ]
//! ```
//!
//! and its gradient, with `W = (Q^x + Q^y - 2I) / N`, is
//!
//! ```text
//! dL/dx_i = -(2/tau) * sum_j W(i,j) (x_i - y_j)
//! dL/dy_j =  (2/tau) * sum_i W(i,j) (x_i - y_j)
//! ```

use nalgebra::DMatrix;

use crate::embedding::{dot, modality_mean, sq_dist, sub, EmbeddingMatrix, PairedEmbeddings};
use crate::error::{Error, Result};

/// The two soft assignment matrices of a paired set at temperature `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    pub qx: DMatrix<f64>,
    pub qy: DMatrix<f64>,
    pub tau: f64,
}

/// Column and row sums of the soft assignments and their spread.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticityStats {
    /// `S^x_i`: row sums of `Q^y`.
    pub s_x: Vec<f64>,
    /// `S^y_i`: column sums of `Q^x`.
    pub s_y: Vec<f64>,
    pub mean_sx: f64,
    pub mean_sy: f64,
    pub var_sx: f64,
    pub var_sy: f64,
}

/// Partial derivatives of the loss with respect to every embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub dx: EmbeddingMatrix,
    pub dy: EmbeddingMatrix,
}

/// Row-major `N x N` kernel quantities shared by the loss and the gradient.
pub(crate) struct Kernel {
    pub n: usize,
    pub qx: Vec<f64>,
    pub qy: Vec<f64>,
    /// `log Q^x(i,i)` and `log Q^y(i,i)`, kept separately so the loss stays
    /// finite when a diagonal entry underflows.
    pub diag_log_qx: Vec<f64>,
    pub diag_log_qy: Vec<f64>,
}

impl Kernel {
    pub fn compute(x: &[f64], y: &[f64], n: usize, d: usize, tau: f64) -> Kernel {
        let mut logits = vec![0.0; n * n];
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            for j in 0..n {
                logits[i * n + j] = -sq_dist(xi, &y[j * d..(j + 1) * d]) / tau;
            }
        }

        let mut qx = vec![0.0; n * n];
        let mut diag_log_qx = vec![0.0; n];
        for i in 0..n {
            let row = &logits[i * n..(i + 1) * n];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let out = &mut qx[i * n..(i + 1) * n];
            let mut sum = 0.0;
            for (o, &l) in out.iter_mut().zip(row) {
                *o = shifted_exp(l - max);
                sum += *o;
            }
            out.iter_mut().for_each(|o| *o /= sum);
            diag_log_qx[i] = row[i] - max - sum.ln();
        }

        let mut qy = vec![0.0; n * n];
        let mut diag_log_qy = vec![0.0; n];
        for j in 0..n {
            let max = (0..n).map(|i| logits[i * n + j]).fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for i in 0..n {
                let e = shifted_exp(logits[i * n + j] - max);
                qy[i * n + j] = e;
                sum += e;
            }
            for i in 0..n {
                qy[i * n + j] /= sum;
            }
            diag_log_qy[j] = logits[j * n + j] - max - sum.ln();
        }

        Kernel { n, qx, qy, diag_log_qx, diag_log_qy }
    }

    pub fn loss(&self) -> f64 {
        let total: f64 = self.diag_log_qx.iter().zip(&self.diag_log_qy).map(|(a, b)| a + b).sum();
        -total / self.n as f64
    }

    /// Writes the gradient into `dx`, `dy` (both `n x d`, row-major).
    pub fn gradient(&self, x: &[f64], y: &[f64], d: usize, tau: f64, dx: &mut [f64], dy: &mut [f64]) {
        let n = self.n;
        let inv_n = 1.0 / n as f64;
        let scale = 2.0 / tau;
        dx.iter_mut().for_each(|v| *v = 0.0);
        dy.iter_mut().for_each(|v| *v = 0.0);
        let mut col_sums = vec![0.0; n];
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            let dxi = &mut dx[i * d..(i + 1) * d];
            let mut row_sum = 0.0;
            for j in 0..n {
                let k = i * n + j;
                let diag = if i == j { 2.0 } else { 0.0 };
                let wij = (self.qx[k] + self.qy[k] - diag) * inv_n;
                row_sum += wij;
                col_sums[j] += wij;
                let yj = &y[j * d..(j + 1) * d];
                for (acc, &v) in dxi.iter_mut().zip(yj) {
                    *acc += wij * v;
                }
                let dyj = &mut dy[j * d..(j + 1) * d];
                for (acc, &v) in dyj.iter_mut().zip(xi) {
                    *acc += wij * v;
                }
            }
            for (acc, &v) in dxi.iter_mut().zip(xi) {
                *acc = -scale * (row_sum * v - *acc);
            }
        }
        for (j, &c) in col_sums.iter().enumerate() {
            let yj = &y[j * d..(j + 1) * d];
            let dyj = &mut dy[j * d..(j + 1) * d];
            for (acc, &v) in dyj.iter_mut().zip(yj) {
                *acc = scale * (*acc - c * v);
            }
        }
    }

    pub fn soft_assignment(&self, tau: f64) -> SoftAssignment {
        let n = self.n;
        SoftAssignment {
            qx: DMatrix::from_row_slice(n, n, &self.qx),
            qy: DMatrix::from_row_slice(n, n, &self.qy),
            tau,
        }
    }
}

/// `exp(z)` for `z <= 0`, flushed to zero before it turns subnormal.
fn shifted_exp(z: f64) -> f64 {
    if z < -700.0 {
        0.0
    } else {
        z.exp()
    }
}

fn validate(pairs: &PairedEmbeddings, tau: f64) -> Result<usize> {
    if tau.is_nan() || tau <= 0.0 || tau.is_infinite() {
        return Err(Error::NonPositiveTau(tau));
    }
    pairs.require_bijective()
}

fn kernel(pairs: &PairedEmbeddings, tau: f64) -> Result<Kernel> {
    let n = validate(pairs, tau)?;
    Ok(Kernel::compute(pairs.x.as_slice(), pairs.y.as_slice(), n, pairs.d(), tau))
}

pub fn soft_assignments(pairs: &PairedEmbeddings, tau: f64) -> Result<SoftAssignment> {
    Ok(kernel(pairs, tau)?.soft_assignment(tau))
}

pub fn contrastive_loss(pairs: &PairedEmbeddings, tau: f64) -> Result<f64> {
    Ok(kernel(pairs, tau)?.loss())
}

/// Exact gradient of [`contrastive_loss`], including the `1/N` and `2/tau`
/// factors.
pub fn loss_gradient(pairs: &PairedEmbeddings, tau: f64) -> Result<GradientPair> {
    let k = kernel(pairs, tau)?;
    let (n, d) = (k.n, pairs.d());
    let mut dx = vec![0.0; n * d];
    let mut dy = vec![0.0; n * d];
    k.gradient(pairs.x.as_slice(), pairs.y.as_slice(), d, tau, &mut dx, &mut dy);
    Ok(GradientPair {
        dx: EmbeddingMatrix::from_vec(n, d, dx)?,
        dy: EmbeddingMatrix::from_vec(n, d, dy)?,
    })
}

pub fn stochasticity_stats(sa: &SoftAssignment) -> StochasticityStats {
    let s_x: Vec<f64> = sa.qy.row_iter().map(|r| r.sum()).collect();
    let s_y: Vec<f64> = sa.qx.column_iter().map(|c| c.sum()).collect();
    let (mean_sx, var_sx) = mean_var(&s_x);
    let (mean_sy, var_sy) = mean_var(&s_y);
    StochasticityStats { s_x, s_y, mean_sx, mean_sy, var_sx, var_sy }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    (mean, var)
}

/// First-order prediction `1 + (2/tau) (mu_x - mu_y) . (y_i - mu_y)` of the
/// column sums `S^y_i`, valid for tight, well-separated clusters.
pub fn s_linear_approx(pairs: &PairedEmbeddings, tau: f64) -> Result<Vec<f64>> {
    validate(pairs, tau)?;
    let mu_x = modality_mean(&pairs.x);
    let mu_y = modality_mean(&pairs.y);
    let gap = sub(&mu_x, &mu_y);
    Ok(pairs
        .y
        .rows()
        .map(|y| 1.0 + 2.0 / tau * dot(&gap, &sub(y, &mu_y)))
        .collect())
}
