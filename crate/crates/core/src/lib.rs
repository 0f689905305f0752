//! Analysis and closing of the modality gap between two embedding sets.
//!
//! The crate covers the contrastive loss and its exact gradient, a
//! full-batch simulator of its training dynamics, gap and orthogonality
//! diagnostics, post-hoc gap closing by orthogonal projection, and
//! Monte-Carlo robustness of nearest-neighbor retrieval under noise and
//! quantization.

pub mod closing;
pub mod contrastive;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod gap;
pub mod io;
pub mod noise;
pub mod pca;
pub mod rng;
pub mod robustness;
pub mod simulator;

pub use closing::{
    apply_plan, approx_orthogonal_direction, exact_orthogonal_direction, plan_closing, quantization_aware_lambda,
    ClosingPlan, Modality,
};
pub use contrastive::{
    contrastive_loss, loss_gradient, s_linear_approx, soft_assignments, stochasticity_stats, GradientPair,
    SoftAssignment, StochasticityStats,
};
pub use embedding::{
    modality_mean, nearest_neighbor, normalize_rows, pairwise_sq_dist, EmbeddingMatrix, LabeledEmbeddings,
    PairedEmbeddings,
};
pub use error::{Error, Result};
pub use gap::{global_gap, local_gaps, noise_correlation_score, orthogonality_report, GapReport, NoiseCorrelationScore};
pub use noise::{quantize_matrix, sample_noise, NoiseModel, Quantizer};
pub use pca::{principal_components, project_out_subspace, PrincipalBasis};
pub use robustness::{
    empirical_robustness, recall_at_1, robustness_curve, zero_shot_accuracy, RobustnessCurve, RobustnessPoint,
};
pub use simulator::{
    gd_step, init_scenario, run_simulation, temperature_sweep, Scenario, Simulation, SimulationConfig, SweepPoint,
    TrajectoryRecord,
};
