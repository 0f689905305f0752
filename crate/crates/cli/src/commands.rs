use std::path::Path;

use gapkit_core::closing::exact_orthogonal_direction;
use gapkit_core::embedding::norm;
use gapkit_core::io::{class_indices, read_embeddings_auto, read_labels, write_atomic, write_embeddings, Dtype};
use gapkit_core::{
    apply_plan, global_gap, noise_correlation_score, orthogonality_report, plan_closing, principal_components,
    quantization_aware_lambda, recall_at_1, robustness_curve, run_simulation, soft_assignments, stochasticity_stats,
    contrastive_loss, EmbeddingMatrix, Error, Modality, NoiseModel, PairedEmbeddings, Quantizer,
};

use crate::report::{self, AnalyzeReport, Contrastive, NoiseReport, NoiseResult, Orthogonality, Principal};
use crate::Failure;

/// Largest grid accepted from the command line.
const MAX_GRID: usize = 100_000;

/// Expands `start:stop:step` into `start, start + step, ...` up to and
/// including `stop`. Values are rounded to 12 decimals so that, say,
/// `0:1:0.1` yields `0.3` rather than `0.30000000000000004`.
pub fn parse_lambda_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |why: &str| Failure::Usage(format!("invalid --lambda-grid {spec:?}: {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:stop:step"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("not a number")))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !nums.iter().all(|v| v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if step <= 0.0 {
        return Err(bad("step must be positive"));
    }
    if stop < start {
        return Err(bad("stop is below start"));
    }
    let span = (stop - start) / step;
    if span >= MAX_GRID as f64 {
        return Err(bad("too many grid points"));
    }
    let count = (span + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn load_pair(x: &Path, y: &Path) -> Result<PairedEmbeddings, Failure> {
    let x = read_embeddings_auto(x)?;
    let y = read_embeddings_auto(y)?;
    Ok(PairedEmbeddings::new(x, y)?)
}

fn orthogonal_norm(gap: &[f64], m: &EmbeddingMatrix) -> Result<(usize, f64), Error> {
    if m.n() < 2 {
        return Ok((0, norm(gap)));
    }
    let rank = principal_components(m, gapkit_core::closing::NOISE_FRACTION)?.rank();
    Ok((rank, norm(&exact_orthogonal_direction(gap, m)?)))
}

pub fn analyze(x: &Path, y: &Path, tau: Option<f64>, out: &Path) -> Result<(), Failure> {
    let pairs = load_pair(x, y)?;
    let gap = global_gap(&pairs)?;
    let orthogonality = match orthogonality_report(&pairs) {
        Ok(r) => Some(Orthogonality {
            mean_abs_cos: r.mean_abs_cos(),
            max_abs_cos: r.max_abs_cos(),
            cos_x: r.cos_x,
            cos_y: r.cos_y,
        }),
        Err(Error::ZeroGap(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let (rank_x, orthogonal_gap_norm_x) = orthogonal_norm(&gap, &pairs.x)?;
    let (rank_y, orthogonal_gap_norm_y) = orthogonal_norm(&gap, &pairs.y)?;

    let recall = if pairs.is_bijective() { Some(recall_at_1(&pairs)?) } else { None };
    let contrastive = match tau {
        Some(tau) => {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::NonPositiveTau(tau).into());
            }
            let stats = stochasticity_stats(&soft_assignments(&pairs, tau)?);
            Some(Contrastive {
                tau,
                loss: contrastive_loss(&pairs, tau)?,
                mean_sx: stats.mean_sx,
                var_sx: stats.var_sx,
                mean_sy: stats.mean_sy,
                var_sy: stats.var_sy,
            })
        }
        None => None,
    };

    let report = AnalyzeReport {
        n_x: pairs.x.n(),
        n_y: pairs.y.n(),
        d: pairs.d(),
        gap_norm: norm(&gap),
        gap,
        orthogonality,
        principal: Principal { rank_x, rank_y, orthogonal_gap_norm_x, orthogonal_gap_norm_y },
        recall_at_1: recall,
        contrastive,
    };
    Ok(write_atomic(out, report::json(&report).as_bytes())?)
}

pub fn close(x: &Path, y: &Path, moved: Modality, epsilon: f64, lambda: f64, out: &Path) -> Result<(), Failure> {
    let pairs = load_pair(x, y)?;
    let plan = plan_closing(&pairs, moved, epsilon, lambda)?;
    let closed = apply_plan(&pairs, &plan)?;
    let result = match moved {
        Modality::X => &closed.x,
        Modality::Y => &closed.y,
    };
    Ok(write_embeddings(result, out, Dtype::F64)?)
}

/// X is the retrieved set, perturbed and translated; the rows of Y are the
/// queries.
#[allow(clippy::too_many_arguments)]
pub fn robustness(
    x: &Path,
    y: &Path,
    model: NoiseModel,
    k: usize,
    grid: &[f64],
    seed: u64,
    labels: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    model.validate()?;
    if k == 0 {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let pairs = load_pair(x, y)?;
    let labels = match labels {
        Some(path) => {
            let raw = read_labels(path)?;
            if raw.len() != pairs.y.n() {
                return Err(Failure::Data(format!(
                    "{}: {} labels for {} query rows",
                    path.display(),
                    raw.len(),
                    pairs.y.n()
                )));
            }
            Some(class_indices(&raw, pairs.x.n())?)
        }
        None => None,
    };
    let plan = plan_closing(&pairs, Modality::X, 0.0, 1.0)?;
    let curve = robustness_curve(&pairs, &plan, grid, &model, k, seed, labels.as_deref())?;
    Ok(write_atomic(out, report::curve_csv(&curve).as_bytes())?)
}

/// Writes the curve and returns the closing fraction that minimizes the
/// quantized gap.
pub fn quantize(x: &Path, y: &Path, levels: usize, lo: f64, hi: f64, grid: &[f64], out: &Path) -> Result<f64, Failure> {
    let quantizer = Quantizer::new(levels, lo, hi)?;
    let pairs = load_pair(x, y)?;
    let plan = plan_closing(&pairs, Modality::X, 0.0, 1.0)?;
    let best = quantization_aware_lambda(&pairs, &plan, &quantizer, grid)?;
    let model = NoiseModel::Quantize { levels, lo, hi };
    let curve = robustness_curve(&pairs, &plan, grid, &model, 1, 0, None)?;
    write_atomic(out, report::curve_csv(&curve).as_bytes())?;
    Ok(best)
}

pub fn simulate(config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = crate::config::load(config)?;
    let log = run_simulation(&cfg)?;
    Ok(write_atomic(out, report::trajectory_csv(&log).as_bytes())?)
}

pub fn diagnose_noise(clean: &Path, noisy: &[std::path::PathBuf], out: &Path) -> Result<(), Failure> {
    let base = read_embeddings_auto(clean)?;
    let mut results = Vec::with_capacity(noisy.len());
    for path in noisy {
        let score = noise_correlation_score(&base, &read_embeddings_auto(path)?)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        results.push(NoiseResult { noisy: path.display().to_string(), d_c: score.d_c, c_frobenius: score.c_frobenius });
    }
    let report = NoiseReport { clean: clean.display().to_string(), results };
    Ok(write_atomic(out, report::json(&report).as_bytes())?)
}
