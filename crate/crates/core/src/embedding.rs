//! Embedding containers and the vector primitives every other module builds on.
//!
//! Matrices are dense, row-major and always `f64`. All retrieval uses squared
//! Euclidean distance; ties between equally distant rows go to the lowest
//! index.

use nalgebra::DMatrix;

use crate::error::{check_dims, Error, Result};

/// Rows with a norm at or below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

/// Tolerance used by [`EmbeddingMatrix::on_unit_sphere`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// An `n x d` matrix holding one embedding per row.
///
/// Invariants: `n >= 1`, `d >= 1`, every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_vec(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::EmptyMatrix { n, d });
        }
        if values.len() != n * d {
            return Err(Error::BadShape { expected: n * d, actual: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / d, col: pos % d });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            check_dims(d, row.len())?;
            values.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), d, values)
    }

    pub fn zeros(n: usize, d: usize) -> Result<Self> {
        Self::from_vec(n, d, vec![0.0; n * d])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Returns `self + alpha * t` with `t` added to every row.
    pub fn translate(&self, t: &[f64], alpha: f64) -> Result<Self> {
        check_dims(self.d, t.len())?;
        let mut out = self.clone();
        for row in out.values.chunks_exact_mut(self.d) {
            axpy(alpha, t, row);
        }
        out.check_finite()?;
        Ok(out)
    }

    /// Element-wise sum with a matrix of the same shape.
    pub fn add(&self, other: &EmbeddingMatrix) -> Result<Self> {
        check_dims(self.n, other.n)?;
        check_dims(self.d, other.d)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self::from_vec(self.n, self.d, values)
    }

    /// Element-wise difference `self - other`.
    pub fn sub(&self, other: &EmbeddingMatrix) -> Result<Self> {
        check_dims(self.n, other.n)?;
        check_dims(self.d, other.d)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self::from_vec(self.n, self.d, values)
    }

    /// Applies `f` to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_vec(self.n, self.d, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Whether every row norm lies within [`UNIT_NORM_TOL`] of one.
    pub fn on_unit_sphere(&self) -> bool {
        self.rows().all(|r| (norm(r) - 1.0).abs() <= UNIT_NORM_TOL)
    }

    pub fn row_norms(&self) -> Vec<f64> {
        self.rows().map(norm).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.values)
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite { row: pos / self.d, col: pos % self.d }),
            None => Ok(()),
        }
    }
}

/// Embeddings with a 0-based class id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddings {
    embeddings: EmbeddingMatrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledEmbeddings {
    pub fn new(embeddings: EmbeddingMatrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        check_dims(embeddings.n(), labels.len())?;
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::LabelOutOfRange { row, label: label as i64, num_classes });
        }
        Ok(Self { embeddings, labels, num_classes })
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.embeddings
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Two modalities living in the same `d`-dimensional space.
///
/// The pairing is bijective when both sides have the same number of rows;
/// row `i` of `x` then corresponds to row `i` of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedEmbeddings {
    pub x: EmbeddingMatrix,
    pub y: EmbeddingMatrix,
}

impl PairedEmbeddings {
    pub fn new(x: EmbeddingMatrix, y: EmbeddingMatrix) -> Result<Self> {
        check_dims(x.d(), y.d())?;
        Ok(Self { x, y })
    }

    /// Pairs whose rows correspond one-to-one.
    pub fn bijective(x: EmbeddingMatrix, y: EmbeddingMatrix) -> Result<Self> {
        let pairs = Self::new(x, y)?;
        pairs.require_bijective()?;
        Ok(pairs)
    }

    pub fn d(&self) -> usize {
        self.x.d()
    }

    pub fn is_bijective(&self) -> bool {
        self.x.n() == self.y.n()
    }

    pub fn require_bijective(&self) -> Result<usize> {
        if self.is_bijective() {
            Ok(self.x.n())
        } else {
            Err(Error::NotBijective { n_x: self.x.n(), n_y: self.y.n() })
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Cosine of the angle between `a` and `b`, or 0 when either is (near) zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na <= ZERO_NORM || nb <= ZERO_NORM {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Scales every row to unit Euclidean norm.
pub fn normalize_rows(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut out = m.clone();
    let d = m.d();
    for (i, row) in out.values.chunks_exact_mut(d).enumerate() {
        let nrm = norm(row);
        if nrm <= ZERO_NORM {
            return Err(Error::ZeroRow { row: i, norm: nrm });
        }
        row.iter_mut().for_each(|v| *v /= nrm);
    }
    Ok(out)
}

/// Arithmetic mean of the rows.
pub fn modality_mean(m: &EmbeddingMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.d()];
    for row in m.rows() {
        axpy(1.0, row, &mut mean);
    }
    let inv = 1.0 / m.n() as f64;
    mean.iter_mut().for_each(|v| *v *= inv);
    mean
}

/// Population variance of the rows projected onto `direction` (not normalized).
pub fn variance_along(m: &EmbeddingMatrix, direction: &[f64]) -> f64 {
    let proj: Vec<f64> = m.rows().map(|r| dot(r, direction)).collect();
    let mean = proj.iter().sum::<f64>() / proj.len() as f64;
    proj.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / proj.len() as f64
}

/// Index of the row of `set` closest to `query` in squared Euclidean distance.
pub fn nearest_neighbor(query: &[f64], set: &EmbeddingMatrix) -> Result<usize> {
    check_dims(set.d(), query.len())?;
    Ok(nn_unchecked(query, set))
}

pub(crate) fn nn_unchecked(query: &[f64], set: &EmbeddingMatrix) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (j, row) in set.rows().enumerate() {
        let dist = sq_dist(query, row);
        if dist < best_dist {
            best = j;
            best_dist = dist;
        }
    }
    best
}

/// Nearest neighbor in `set` of every row of `queries`.
pub fn nearest_neighbors(queries: &EmbeddingMatrix, set: &EmbeddingMatrix) -> Result<Vec<usize>> {
    check_dims(set.d(), queries.d())?;
    Ok(queries.rows().map(|q| nn_unchecked(q, set)).collect())
}

/// Gap between the second-closest and the closest squared distance from
/// `query` to `set`. Infinite when `set` has a single row.
pub fn nn_margin(query: &[f64], set: &EmbeddingMatrix) -> Result<f64> {
    check_dims(set.d(), query.len())?;
    let (mut first, mut second) = (f64::INFINITY, f64::INFINITY);
    for row in set.rows() {
        let dist = sq_dist(query, row);
        if dist < first {
            second = first;
            first = dist;
        } else if dist < second {
            second = dist;
        }
    }
    Ok(second - first)
}

/// Matrix of squared distances, entry `(i, j) = ||a_i - b_j||^2`.
pub fn pairwise_sq_dist(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<DMatrix<f64>> {
    check_dims(a.d(), b.d())?;
    Ok(DMatrix::from_fn(a.n(), b.n(), |i, j| sq_dist(a.row(i), b.row(j))))
}
