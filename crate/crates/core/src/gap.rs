//! Gap vectors between two modalities and diagnostics of their geometry.

use nalgebra::DMatrix;

use crate::embedding::{cosine, modality_mean, norm, sq_dist, sub, EmbeddingMatrix, PairedEmbeddings, ZERO_NORM};
use crate::error::{check_dims, Error, Result};

/// Per-row orthogonality diagnostics of a paired set.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// `mu_y - mu_x`
    pub global_gap: Vec<f64>,
    pub gap_norm: f64,
    /// `||x_i - y_i||`, only for bijective pairs.
    pub local_gap_norms: Option<Vec<f64>>,
    /// `cos(x_i - mu_x, g)` per row of X.
    pub cos_x: Vec<f64>,
    /// `cos(y_i - mu_y, g)` per row of Y.
    pub cos_y: Vec<f64>,
    /// `||x_i - mu_x||`
    pub within_x: Vec<f64>,
    /// `||y_i - mu_y||`
    pub within_y: Vec<f64>,
    /// `||mu_x - mu_y||`
    pub cross_mean_dist: f64,
}

impl GapReport {
    /// Mean of `|cos|` over the rows of both modalities.
    pub fn mean_abs_cos(&self) -> f64 {
        let total: f64 = self.cos_x.iter().chain(&self.cos_y).map(|c| c.abs()).sum();
        total / (self.cos_x.len() + self.cos_y.len()) as f64
    }

    pub fn max_abs_cos(&self) -> f64 {
        self.cos_x.iter().chain(&self.cos_y).fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// How strongly the dimensions of a perturbation are correlated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCorrelationScore {
    /// Off-diagonal Frobenius mass of the noise covariance relative to its
    /// full Frobenius norm; 0 for uncorrelated dimensions, 1 for fully
    /// correlated ones.
    pub d_c: f64,
    pub c_frobenius: f64,
}

/// `mu_y - mu_x`. The two sides may have different row counts.
pub fn global_gap(pairs: &PairedEmbeddings) -> Result<Vec<f64>> {
    check_dims(pairs.x.d(), pairs.y.d())?;
    Ok(sub(&modality_mean(&pairs.y), &modality_mean(&pairs.x)))
}

/// Row `i` is `x_i - y_i`.
pub fn local_gaps(pairs: &PairedEmbeddings) -> Result<EmbeddingMatrix> {
    pairs.require_bijective()?;
    pairs.x.sub(&pairs.y)
}

pub fn orthogonality_report(pairs: &PairedEmbeddings) -> Result<GapReport> {
    let global_gap = global_gap(pairs)?;
    let gap_norm = norm(&global_gap);
    if gap_norm <= ZERO_NORM {
        return Err(Error::ZeroGap(gap_norm));
    }
    let mu_x = modality_mean(&pairs.x);
    let mu_y = modality_mean(&pairs.y);

    let deviations = |m: &EmbeddingMatrix, mu: &[f64]| -> (Vec<f64>, Vec<f64>) {
        m.rows()
            .map(|r| {
                let dev = sub(r, mu);
                (cosine(&dev, &global_gap), norm(&dev))
            })
            .unzip()
    };
    let (cos_x, within_x) = deviations(&pairs.x, &mu_x);
    let (cos_y, within_y) = deviations(&pairs.y, &mu_y);

    let local_gap_norms = pairs
        .is_bijective()
        .then(|| pairs.x.rows().zip(pairs.y.rows()).map(|(a, b)| sq_dist(a, b).sqrt()).collect());

    Ok(GapReport {
        cross_mean_dist: gap_norm,
        global_gap,
        gap_norm,
        local_gap_norms,
        cos_x,
        cos_y,
        within_x,
        within_y,
    })
}

/// Correlation score of the perturbation `noisy - clean`.
///
/// With `M` the row-centered perturbation, `C = M^T M` and
/// `d(C) = ||C - diag(C)||_F / ||C||_F`.
pub fn noise_correlation_score(clean: &EmbeddingMatrix, noisy: &EmbeddingMatrix) -> Result<NoiseCorrelationScore> {
    let m = noisy.sub(clean)?;
    let (n, d) = (m.n(), m.d());
    let mu = modality_mean(&m);
    let centered = DMatrix::from_fn(n, d, |i, j| m.row(i)[j] - mu[j]);

    let raw_norm = m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    let centered_norm = centered.norm();
    if centered_norm == 0.0 || centered_norm <= 1e-10 * raw_norm {
        return Err(Error::ZeroCovariance);
    }

    let c = centered.transpose() * &centered;
    let c_frobenius = c.norm();
    let off_sq: f64 = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|ij| c[ij] * c[ij])
        .sum();
    Ok(NoiseCorrelationScore { d_c: (off_sq.sqrt() / c_frobenius).clamp(0.0, 1.0), c_frobenius })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(x: &[&[f64]], y: &[&[f64]]) -> PairedEmbeddings {
        PairedEmbeddings::new(EmbeddingMatrix::from_rows(x).unwrap(), EmbeddingMatrix::from_rows(y).unwrap()).unwrap()
    }

    #[test]
    fn global_gap_examples() {
        let p = pairs(&[&[1.0, 2.0], &[0.0, 1.0]], &[&[1.0, 2.0], &[0.0, 1.0]]);
        assert_eq!(global_gap(&p).unwrap(), vec![0.0, 0.0]);
        let p = pairs(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[0.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(global_gap(&p).unwrap(), vec![0.0, 0.0]);
        let (z, e3): (&[f64], &[f64]) = (&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]);
        let p = pairs(&[z, z, z], &[e3, e3]);
        assert_eq!(global_gap(&p).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn local_gap_examples() {
        let p = pairs(&[&[1.0, 2.0], &[3.0, 4.0]], &[&[1.0, 2.0], &[3.0, 4.0]]);
        assert!(local_gaps(&p).unwrap().as_slice().iter().all(|v| *v == 0.0));
        let p = pairs(&[&[1.0, 2.0], &[3.0, 4.0]], &[&[0.5, 2.0], &[2.5, 4.0]]);
        let g = local_gaps(&p).unwrap();
        assert!(g.rows().all(|r| r == [0.5, 0.0]));
        let p = pairs(&[&[1.0], &[2.0]], &[&[1.0]]);
        assert!(matches!(local_gaps(&p), Err(Error::NotBijective { .. })));
    }

    #[test]
    fn orthogonal_planes() {
        let p = pairs(
            &[&[0.0, 0.0, 0.0], &[1.0, 0.5, 0.0], &[-0.3, 2.0, 0.0]],
            &[&[-0.3, 2.0, 1.0], &[0.0, 0.0, 1.0], &[1.0, 0.5, 1.0]],
        );
        let r = orthogonality_report(&p).unwrap();
        assert!(r.cos_x.iter().chain(&r.cos_y).all(|c| c.abs() < 1e-15));
        assert_eq!(r.local_gap_norms.as_ref().unwrap().len(), 3);
        assert!((r.gap_norm - norm(&r.global_gap)).abs() < 1e-15);
    }

    #[test]
    fn identical_sets_have_no_gap() {
        let p = pairs(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(orthogonality_report(&p), Err(Error::ZeroGap(_))));
    }

    #[test]
    fn zero_deviation_rows_get_zero_cosine() {
        let p = pairs(&[&[0.0, 0.0], &[0.0, 0.0]], &[&[1.0, 1.0], &[1.0, -1.0]]);
        let r = orthogonality_report(&p).unwrap();
        assert_eq!(r.cos_x, vec![0.0, 0.0]);
    }

    #[test]
    fn constant_shift_has_no_covariance() {
        let clean = EmbeddingMatrix::from_rows(&[[0.1, 0.2, 0.3], [1.0, -2.0, 0.7], [0.0, 0.0, 5.0]]).unwrap();
        let noisy = clean.translate(&[0.3, -0.1, 0.25], 1.0).unwrap();
        assert!(matches!(noise_correlation_score(&clean, &noisy), Err(Error::ZeroCovariance)));
        assert!(matches!(noise_correlation_score(&clean, &clean), Err(Error::ZeroCovariance)));
    }

    #[test]
    fn diagonal_covariance_scores_zero() {
        let clean = EmbeddingMatrix::zeros(4, 2).unwrap();
        let noisy = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let s = noise_correlation_score(&clean, &noisy).unwrap();
        assert!(s.d_c.abs() < 1e-15);
        assert!((s.c_frobenius - 8f64.sqrt()).abs() < 1e-12);
    }
}
