//! Synthetic data sets with known geometry, shared by tests, the CLI and
//! the acceptance suite.

use crate::embedding::{EmbeddingMatrix, PairedEmbeddings};
use crate::error::Result;
use crate::rng::{normal, stream_rng, unit_vector};

/// Class embeddings to retrieve from and labeled queries, separated by a
/// gap orthogonal to both.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalFixture {
    /// One row per class; these are the retrieved set.
    pub classes: EmbeddingMatrix,
    pub queries: EmbeddingMatrix,
    /// Class index of each query.
    pub labels: Vec<usize>,
}

impl RetrievalFixture {
    /// Classes as X, queries as Y.
    pub fn pairs(&self) -> PairedEmbeddings {
        PairedEmbeddings { x: self.classes.clone(), y: self.queries.clone() }
    }
}

/// Two classes at `+-separation/2` along a random unit direction of the
/// first `d - 1` coordinates. Queries scatter around their class center
/// with standard deviation `within_std` in those coordinates and sit at
/// height `gap` in the last one, where the classes are at 0.
pub fn two_class_fixture(
    seed: u64,
    d: usize,
    n_queries: usize,
    separation: f64,
    within_std: f64,
    gap: f64,
) -> Result<RetrievalFixture> {
    let k = d - 1;
    let mut rng = stream_rng(seed, 0);
    let u = unit_vector(&mut rng, k);
    let mut classes = vec![0.0; 2 * d];
    for j in 0..k {
        classes[j] = separation / 2.0 * u[j];
        classes[d + j] = -separation / 2.0 * u[j];
    }

    let mut rng = stream_rng(seed, 1);
    let mut labels = Vec::with_capacity(n_queries);
    let mut queries = Vec::with_capacity(n_queries * d);
    for _ in 0..n_queries {
        let label = usize::from(normal(&mut rng) < 0.0);
        for j in 0..k {
            queries.push(classes[label * d + j] + within_std * normal(&mut rng));
        }
        queries.push(gap);
        labels.push(label);
    }
    Ok(RetrievalFixture {
        classes: EmbeddingMatrix::from_vec(2, d, classes)?,
        queries: EmbeddingMatrix::from_vec(n_queries, d, queries)?,
        labels,
    })
}

/// The fixture used for the robustness sweeps: `d = 32`, 500 queries,
/// class separation 0.5, within-class std 0.1, gap 1.0.
pub fn standard_retrieval_fixture() -> Result<RetrievalFixture> {
    two_class_fixture(5, 32, 500, 0.5, 0.1, 1.0)
}

/// X and Y both spread over the first `k` coordinates; Y additionally
/// carries a fixed random offset in the remaining `d - k`, so the gap is
/// orthogonal to every centered row of either side.
pub fn orthogonal_gap_pairs(seed: u64, n_x: usize, n_y: usize, d: usize, k: usize) -> Result<PairedEmbeddings> {
    assert!(k < d, "need at least one coordinate for the gap");
    let mut rng = stream_rng(seed, 0);
    let offset: Vec<f64> = (k..d).map(|_| normal(&mut rng)).collect();
    let mut sample = |n: usize, shift: Option<&[f64]>| {
        let mut v = Vec::with_capacity(n * d);
        for _ in 0..n {
            v.extend((0..k).map(|_| normal(&mut rng)));
            match shift {
                Some(s) => v.extend_from_slice(s),
                None => v.extend(std::iter::repeat_n(0.0, d - k)),
            }
        }
        v
    };
    let x = sample(n_x, None);
    let mut y = sample(n_y, Some(&offset));
    // match the in-subspace means so the gap lies entirely in the offset
    for j in 0..k {
        let mean_x = (0..n_x).map(|i| x[i * d + j]).sum::<f64>() / n_x as f64;
        let mean_y = (0..n_y).map(|i| y[i * d + j]).sum::<f64>() / n_y as f64;
        (0..n_y).for_each(|i| y[i * d + j] += mean_x - mean_y);
    }
    PairedEmbeddings::new(EmbeddingMatrix::from_vec(n_x, d, x)?, EmbeddingMatrix::from_vec(n_y, d, y)?)
}

/// A regular `m`-gon of radius `radius` in the plane `z = 0` as X, and the
/// same polygon rotated in-plane by `angle` and lifted to `z = height` as Y.
///
/// Pairwise kernels depend only on `j - i (mod m)`, so both soft
/// assignments are doubly stochastic and neither modality varies along
/// `e3`.
pub fn lifted_polygon(m: usize, radius: f64, angle: f64, height: f64) -> Result<PairedEmbeddings> {
    let vertex = |i: usize, phase: f64, z: f64| {
        let t = std::f64::consts::TAU * i as f64 / m as f64 + phase;
        [radius * t.cos(), radius * t.sin(), z]
    };
    let x: Vec<[f64; 3]> = (0..m).map(|i| vertex(i, 0.0, 0.0)).collect();
    let y: Vec<[f64; 3]> = (0..m).map(|i| vertex(i, angle, height)).collect();
    PairedEmbeddings::bijective(EmbeddingMatrix::from_rows(&x)?, EmbeddingMatrix::from_rows(&y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{dot, modality_mean, sub};

    #[test]
    fn two_class_geometry() {
        let f = two_class_fixture(5, 8, 50, 0.5, 0.1, 1.0).unwrap();
        assert_eq!((f.classes.n(), f.queries.n(), f.labels.len()), (2, 50, 50));
        assert!(f.queries.rows().all(|r| r[7] == 1.0));
        assert!(f.classes.rows().all(|r| r[7] == 0.0));
        let dist = crate::embedding::sq_dist(f.classes.row(0), f.classes.row(1)).sqrt();
        assert!((dist - 0.5).abs() < 1e-12);
        assert!(f.labels.contains(&0) && f.labels.contains(&1));
    }

    #[test]
    fn orthogonal_gap_is_orthogonal() {
        let p = orthogonal_gap_pairs(1, 6, 9, 5, 3).unwrap();
        let gap = sub(&modality_mean(&p.y), &modality_mean(&p.x));
        for (m, mu) in [(&p.x, modality_mean(&p.x)), (&p.y, modality_mean(&p.y))] {
            for r in m.rows() {
                assert!(dot(&sub(r, &mu), &gap).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polygon_is_doubly_stochastic() {
        let p = lifted_polygon(6, 1.0, 0.2, 0.5).unwrap();
        let sa = crate::contrastive::soft_assignments(&p, 0.5).unwrap();
        for i in 0..6 {
            assert!((sa.qx.column(i).sum() - 1.0).abs() < 1e-12);
            assert!((sa.qy.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }
}
