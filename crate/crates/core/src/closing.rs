//! Post-hoc gap closing: translate the retrieved modality along the part of
//! the gap that is orthogonal to its own principal subspace.

use crate::embedding::{modality_mean, norm, sub, PairedEmbeddings};
use crate::error::{check_dims, Error, Result};
use crate::noise::Quantizer;
use crate::pca::{principal_components, project_out_subspace};
use crate::embedding::EmbeddingMatrix;

/// Variance fraction below which a principal component counts as numerical
/// noise and is never projected out.
pub const NOISE_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    X,
    Y,
}

/// How to close the gap.
///
/// `direction` is the projected gap `g'` pointing from the other modality's
/// mean to the moved one's; [`apply_plan`] translates the moved modality by
/// `-lambda * direction`, so `lambda = 1` matches the two means along `g'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosingPlan {
    pub direction: Vec<f64>,
    pub lambda: f64,
    pub moved: Modality,
    pub epsilon: f64,
    /// `||g - g'||`: the part of the gap left in place.
    pub residual_in_subspace_norm: f64,
}

/// `g` with every principal direction of `retrieved` removed.
pub fn exact_orthogonal_direction(gap: &[f64], retrieved: &EmbeddingMatrix) -> Result<Vec<f64>> {
    check_dims(retrieved.d(), gap.len())?;
    let basis = principal_components(retrieved, NOISE_FRACTION)?;
    project_out_subspace(gap, &basis)
}

/// `g` with only the principal directions of `retrieved` whose variance
/// fraction exceeds `epsilon` removed.
pub fn approx_orthogonal_direction(gap: &[f64], retrieved: &EmbeddingMatrix, epsilon: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::BadEpsilon(epsilon));
    }
    check_dims(retrieved.d(), gap.len())?;
    let basis = principal_components(retrieved, epsilon.max(NOISE_FRACTION))?;
    project_out_subspace(gap, &basis)
}

fn split(pairs: &PairedEmbeddings, moved: Modality) -> (&EmbeddingMatrix, &EmbeddingMatrix) {
    match moved {
        Modality::X => (&pairs.x, &pairs.y),
        Modality::Y => (&pairs.y, &pairs.x),
    }
}

/// Builds the plan that moves `moved` toward the other modality.
pub fn plan_closing(pairs: &PairedEmbeddings, moved: Modality, epsilon: f64, lambda: f64) -> Result<ClosingPlan> {
    check_dims(pairs.x.d(), pairs.y.d())?;
    if !lambda.is_finite() {
        return Err(Error::BadConfig(format!("lambda must be finite, got {lambda}")));
    }
    let (m, other) = split(pairs, moved);
    let gap = sub(&modality_mean(m), &modality_mean(other));
    let direction = approx_orthogonal_direction(&gap, m, epsilon)?;
    let residual_in_subspace_norm = norm(&sub(&gap, &direction));
    Ok(ClosingPlan { direction, lambda, moved, epsilon, residual_in_subspace_norm })
}

/// Translates the moved modality by `-lambda * direction`. Rows are not
/// renormalized.
pub fn apply_plan(pairs: &PairedEmbeddings, plan: &ClosingPlan) -> Result<PairedEmbeddings> {
    translate(pairs, plan.moved, &plan.direction, plan.lambda)
}

pub(crate) fn translate(pairs: &PairedEmbeddings, moved: Modality, direction: &[f64], lambda: f64) -> Result<PairedEmbeddings> {
    check_dims(pairs.d(), direction.len())?;
    Ok(match moved {
        Modality::X => PairedEmbeddings { x: pairs.x.translate(direction, -lambda)?, y: pairs.y.clone() },
        Modality::Y => PairedEmbeddings { x: pairs.x.clone(), y: pairs.y.translate(direction, -lambda)? },
    })
}

/// Norm of the gap between the quantized modalities after moving by
/// `lambda`.
pub fn quantized_gap(pairs: &PairedEmbeddings, plan: &ClosingPlan, quantizer: &Quantizer, lambda: f64) -> Result<f64> {
    let moved = translate(pairs, plan.moved, &plan.direction, lambda)?;
    let qx = quantizer.apply_matrix(&moved.x);
    let qy = quantizer.apply_matrix(&moved.y);
    Ok(norm(&sub(&modality_mean(&qx), &modality_mean(&qy))))
}

/// The grid value minimizing [`quantized_gap`]; ties go to the smallest
/// `lambda`.
pub fn quantization_aware_lambda(
    pairs: &PairedEmbeddings,
    plan: &ClosingPlan,
    quantizer: &Quantizer,
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::BadConfig("lambda grid is empty".into()));
    }
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let gap = quantized_gap(pairs, plan, quantizer, lambda)?;
        let better = match best {
            None => true,
            Some((bg, bl)) => gap < bg || (gap == bg && lambda < bl),
        };
        if better {
            best = Some((gap, lambda));
        }
    }
    Ok(best.map(|(_, l)| l).expect("grid is non-empty"))
}
