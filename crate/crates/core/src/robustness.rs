//! Monte-Carlo robustness of cross-modal retrieval and the accuracy metrics
//! that go with it.
//!
//! Robustness is the fraction of (query, noise sample) pairs whose nearest
//! neighbor in the retrieved set is unchanged once the retrieved set is
//! perturbed. Under a quantization model both sides are quantized and
//! compared against the unquantized nearest neighbor, with a single sample.

use rayon::prelude::*;

use crate::closing::{translate, ClosingPlan, Modality};
use crate::embedding::{nn_unchecked, norm, sub, modality_mean, EmbeddingMatrix, LabeledEmbeddings, PairedEmbeddings};
use crate::error::{check_dims, Error, Result};
use crate::noise::{fill_noise, NoiseModel};

/// One row of a robustness sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessPoint {
    pub lambda: f64,
    pub gap_norm_after: f64,
    pub robustness: f64,
    pub clean_accuracy: Option<f64>,
    pub noisy_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessCurve {
    pub points: Vec<RobustnessPoint>,
}

/// Counts over all (query, sample) pairs.
struct Counts {
    unchanged: u64,
    correct: u64,
    total: u64,
}

fn check_k(k_samples: usize) -> Result<()> {
    if k_samples == 0 {
        return Err(Error::BadConfig("k_samples must be at least 1".into()));
    }
    Ok(())
}

/// Nearest neighbors of `queries` in `retrieved` after perturbing (or, for
/// the quantizer, rounding) according to `model`, compared against `clean`
/// and optionally against labels.
fn perturbed_counts(
    retrieved: &EmbeddingMatrix,
    queries: &EmbeddingMatrix,
    clean: &[usize],
    labels: Option<&[usize]>,
    model: &NoiseModel,
    k_samples: usize,
    seed: u64,
) -> Result<Counts> {
    let score = |nn: &mut dyn Iterator<Item = usize>| {
        let mut c = Counts { unchanged: 0, correct: 0, total: 0 };
        for (i, j) in nn.enumerate() {
            c.total += 1;
            c.unchanged += u64::from(j == clean[i]);
            if let Some(l) = labels {
                c.correct += u64::from(j == l[i]);
            }
        }
        c
    };

    if let Some(q) = model.quantizer() {
        let qr = q.apply_matrix(retrieved);
        let qq = q.apply_matrix(queries);
        return Ok(score(&mut qq.rows().map(|row| nn_unchecked(row, &qr))));
    }

    model.validate()?;
    let (n, d) = (retrieved.n(), retrieved.d());
    let per_sample: Vec<Result<Counts>> = (0..k_samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut noisy = EmbeddingMatrix::zeros(n, d)?;
            fill_noise(model, d, seed, s, noisy.values_mut())?;
            noisy.values_mut().iter_mut().zip(retrieved.as_slice()).for_each(|(e, r)| *e += r);
            Ok(score(&mut queries.rows().map(|row| nn_unchecked(row, &noisy))))
        })
        .collect();

    let mut total = Counts { unchanged: 0, correct: 0, total: 0 };
    for c in per_sample {
        let c = c?;
        total.unchanged += c.unchanged;
        total.correct += c.correct;
        total.total += c.total;
    }
    Ok(total)
}

/// Fraction of (query, sample) pairs whose nearest neighbor survives the
/// perturbation of `retrieved`.
pub fn empirical_robustness(
    retrieved: &EmbeddingMatrix,
    queries: &EmbeddingMatrix,
    model: &NoiseModel,
    k_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_dims(retrieved.d(), queries.d())?;
    check_k(k_samples)?;
    let clean: Vec<usize> = queries.rows().map(|q| nn_unchecked(q, retrieved)).collect();
    let c = perturbed_counts(retrieved, queries, &clean, None, model, k_samples, seed)?;
    Ok(c.unchanged as f64 / c.total as f64)
}

fn check_labels(labels: &[usize], n_queries: usize, n_classes: usize) -> Result<()> {
    if labels.len() != n_queries {
        return Err(Error::BadShape { expected: n_queries, actual: labels.len() });
    }
    match labels.iter().position(|&l| l >= n_classes) {
        Some(row) => Err(Error::LabelOutOfRange { row, label: labels[row] as i64, num_classes: n_classes }),
        None => Ok(()),
    }
}

/// Fraction of rows whose nearest class embedding is their label.
pub fn zero_shot_accuracy(data: &LabeledEmbeddings, class_embeddings: &EmbeddingMatrix) -> Result<f64> {
    let emb = data.embeddings();
    check_dims(class_embeddings.d(), emb.d())?;
    check_labels(data.labels(), emb.n(), class_embeddings.n())?;
    let hits = emb
        .rows()
        .zip(data.labels())
        .filter(|(row, &l)| nn_unchecked(row, class_embeddings) == l)
        .count();
    Ok(hits as f64 / emb.n() as f64)
}

/// Fraction of `i` with `NN(y_i, X) = i`.
pub fn recall_at_1(pairs: &PairedEmbeddings) -> Result<f64> {
    let n = pairs.require_bijective()?;
    let hits = pairs.y.rows().enumerate().filter(|(i, y)| nn_unchecked(y, &pairs.x) == *i).count();
    Ok(hits as f64 / n as f64)
}

/// Robustness and accuracy at every closing fraction in `lambdas`.
///
/// The moved modality of `plan` is the retrieved set; the other modality
/// supplies the queries. `labels` give, per query row, the index of its
/// correct row in the retrieved set. Every `lambda` sees the same noise
/// samples.
pub fn robustness_curve(
    pairs: &PairedEmbeddings,
    plan: &ClosingPlan,
    lambdas: &[f64],
    model: &NoiseModel,
    k_samples: usize,
    seed: u64,
    labels: Option<&[usize]>,
) -> Result<RobustnessCurve> {
    check_dims(pairs.x.d(), pairs.y.d())?;
    check_k(k_samples)?;
    model.validate()?;
    let (retrieved, queries) = match plan.moved {
        Modality::X => (&pairs.x, &pairs.y),
        Modality::Y => (&pairs.y, &pairs.x),
    };
    if let Some(l) = labels {
        check_labels(l, queries.n(), retrieved.n())?;
    }

    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let moved = translate(pairs, plan.moved, &plan.direction, lambda)?;
        let retrieved = match plan.moved {
            Modality::X => &moved.x,
            Modality::Y => &moved.y,
        };
        let clean: Vec<usize> = queries.rows().map(|q| nn_unchecked(q, retrieved)).collect();
        let c = perturbed_counts(retrieved, queries, &clean, labels, model, k_samples, seed)?;
        let clean_accuracy = labels.map(|l| {
            clean.iter().zip(l).filter(|(a, b)| a == b).count() as f64 / clean.len() as f64
        });
        points.push(RobustnessPoint {
            lambda,
            gap_norm_after: norm(&sub(&modality_mean(&moved.y), &modality_mean(&moved.x))),
            robustness: c.unchanged as f64 / c.total as f64,
            clean_accuracy,
            noisy_accuracy: labels.map(|_| c.correct as f64 / c.total as f64),
        });
    }
    Ok(RobustnessCurve { points })
}
