//! Principal components of a modality, computed from the eigendecomposition of
//! its centered Gram matrix, and projection onto their orthogonal complement.

use nalgebra::DMatrix;

use crate::embedding::{dot, modality_mean, EmbeddingMatrix};
use crate::error::{check_dims, Error, Result};

/// Orthonormal principal directions of a point cloud with their variances.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalBasis {
    /// Unit-norm principal directions, ordered by decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalue (population normalization) of each component.
    pub variances: Vec<f64>,
    /// Sum of all `d` covariance eigenvalues, including excluded ones.
    pub total_variance: f64,
    /// Mean subtracted before the decomposition.
    pub mean: Vec<f64>,
}

impl PrincipalBasis {
    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Share of the total variance carried by each kept component.
    pub fn variance_fractions(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.variances.len()];
        }
        self.variances.iter().map(|v| v / self.total_variance).collect()
    }

    /// Keeps only the components whose variance fraction exceeds `threshold`.
    pub fn above_fraction(&self, threshold: f64) -> PrincipalBasis {
        let keep: Vec<usize> = self
            .variance_fractions()
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > threshold)
            .map(|(i, _)| i)
            .collect();
        PrincipalBasis {
            components: keep.iter().map(|&i| self.components[i].clone()).collect(),
            variances: keep.iter().map(|&i| self.variances[i]).collect(),
            total_variance: self.total_variance,
            mean: self.mean.clone(),
        }
    }
}

/// Principal components of `m`, dropping those whose variance is at most
/// `rank_tol * total_variance`.
///
/// Each component is signed so that its largest-magnitude coordinate is
/// positive.
pub fn principal_components(m: &EmbeddingMatrix, rank_tol: f64) -> Result<PrincipalBasis> {
    let (n, d) = (m.n(), m.d());
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "principal components need at least two rows, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&rank_tol) {
        return Err(Error::BadConfig(format!("rank tolerance {rank_tol} outside [0, 1]")));
    }

    let mean = modality_mean(m);
    let centered = DMatrix::from_fn(n, d, |i, j| m.row(i)[j] - mean[j]);
    let mut total_variance = centered.norm_squared() / n as f64;
    // variance indistinguishable from rounding, either in the mean
    // subtraction or in the eigensolver acting on a squared matrix
    let raw_norm = m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = n.max(d) as f64 * f64::EPSILON;
    let floor = (scale * raw_norm).powi(2) / n as f64 + scale * total_variance;
    if total_variance <= (scale * raw_norm).powi(2) / n as f64 {
        total_variance = 0.0;
    }

    // eigendecomposition of the smaller Gram matrix; directions for the
    // n x n case are recovered as normalized C^T u
    let wide = n < d;
    let gram = if wide { &centered * centered.transpose() } else { centered.transpose() * &centered };
    let eig = gram.symmetric_eigen();
    let mut order: Vec<(f64, usize)> = eig.eigenvalues.iter().map(|&l| l / n as f64).zip(0..).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let max_rank = (n - 1).min(d);
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut variances = Vec::new();
    for (variance, k) in order {
        if components.len() == max_rank || variance <= floor || variance <= rank_tol * total_variance {
            break;
        }
        let mut c: Vec<f64> = if wide {
            (centered.transpose() * eig.eigenvectors.column(k)).iter().copied().collect()
        } else {
            eig.eigenvectors.column(k).iter().copied().collect()
        };
        // re-orthogonalize against earlier directions to absorb solver error
        for prev in &components {
            let coef = dot(&c, prev);
            c.iter_mut().zip(prev).for_each(|(v, p)| *v -= coef * p);
        }
        let nrm = dot(&c, &c).sqrt();
        c.iter_mut().for_each(|v| *v /= nrm);
        let pivot = c
            .iter()
            .copied()
            .reduce(|best, v| if v.abs() > best.abs() { v } else { best })
            .unwrap_or(0.0);
        if pivot < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(c);
        variances.push(variance);
    }

    Ok(PrincipalBasis { components, variances, total_variance, mean })
}

/// Removes from `v` its components along every direction of `basis`.
pub fn project_out_subspace(v: &[f64], basis: &PrincipalBasis) -> Result<Vec<f64>> {
    check_dims(basis.dim(), v.len())?;
    let mut out = v.to_vec();
    // modified Gram-Schmidt: project the running residual, not the input
    for c in &basis.components {
        let coef = dot(&out, c);
        out.iter_mut().zip(c).for_each(|(o, ci)| *o -= coef * ci);
    }
    Ok(out)
}
