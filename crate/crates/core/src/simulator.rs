//! Full-batch gradient descent on raw embedding coordinates.
//!
//! Each run starts from a seeded [`Scenario`], takes plain gradient steps on
//! the contrastive loss (optionally renormalizing rows to the unit sphere
//! after every step) and logs a [`TrajectoryRecord`] every `log_every`
//! iterations.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::contrastive::{stochasticity_stats, Kernel};
use crate::embedding::{norm, sq_dist, variance_along, EmbeddingMatrix, PairedEmbeddings, ZERO_NORM};
use crate::error::{Error, Result};
use crate::gap::{global_gap, orthogonality_report};
use crate::rng::{normal, stream_rng};

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// Independent Gaussian clouds around `mu_x` and `mu_y`.
    GaussianClusters { mu_x: Vec<f64>, mu_y: Vec<f64>, sigma: f64 },
    /// Both modalities spread only along `axis`, separated by a gap of 1.0
    /// along the next coordinate `(axis + 1) % d`.
    DimCollapse { axis: usize, spread: f64 },
    /// Two rows of X sharing the single row of Y, trained on the
    /// shared-caption objective (see [`shared_caption_loss`]).
    InfoImbalance,
    Explicit { x0: EmbeddingMatrix, y0: EmbeddingMatrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n_per_modality: usize,
    pub d: usize,
    pub scenario: Scenario,
    pub tau: f64,
    pub lr: f64,
    pub iterations: usize,
    pub sphere_constrained: bool,
    pub log_every: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadConfig(msg));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive and finite, got {}", self.tau));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive and finite, got {}", self.lr));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        match &self.scenario {
            Scenario::GaussianClusters { mu_x, mu_y, sigma } => {
                if mu_x.len() != self.d || mu_y.len() != self.d {
                    return bad(format!(
                        "cluster means have lengths {} and {}, expected d = {}",
                        mu_x.len(),
                        mu_y.len(),
                        self.d
                    ));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma must be non-negative, got {sigma}"));
                }
                if mu_x.iter().chain(mu_y).any(|v| !v.is_finite()) {
                    return bad("cluster means must be finite".into());
                }
                if self.n_per_modality == 0 {
                    return bad("n_per_modality must be at least 1".into());
                }
            }
            Scenario::DimCollapse { axis, spread } => {
                if self.d < 2 {
                    return bad("dim_collapse needs d >= 2".into());
                }
                if *axis >= self.d {
                    return bad(format!("axis {axis} out of range for d = {}", self.d));
                }
                if !(*spread >= 0.0 && spread.is_finite()) {
                    return bad(format!("spread must be non-negative, got {spread}"));
                }
                if self.n_per_modality == 0 {
                    return bad("n_per_modality must be at least 1".into());
                }
            }
            Scenario::InfoImbalance => {}
            Scenario::Explicit { x0, y0 } => {
                if x0.d() != self.d || y0.d() != self.d {
                    return bad(format!(
                        "explicit init has dimensions {} and {}, expected d = {}",
                        x0.d(),
                        y0.d(),
                        self.d
                    ));
                }
                if x0.n() != y0.n() {
                    return bad(format!("explicit init has {} rows in X but {} in Y", x0.n(), y0.n()));
                }
            }
        }
        Ok(())
    }
}

/// One logged point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub loss: f64,
    pub gap_norm: f64,
    pub mean_abs_cos: f64,
    pub var_along_gap_x: f64,
    pub var_along_gap_y: f64,
    pub var_along_init_gap_x: f64,
    pub var_along_init_gap_y: f64,
    /// `max(var_sx, var_sy)`
    pub var_s: f64,
    /// Mean `||x_i - y_i||`.
    pub alignment_err: f64,
}

/// Initial embeddings of a scenario. Modality X draws from stream 0 and
/// modality Y from stream 1 of the seed.
pub fn init_scenario(cfg: &SimulationConfig) -> Result<PairedEmbeddings> {
    cfg.validate()?;
    let (n, d) = (cfg.n_per_modality, cfg.d);
    let (x, y) = match &cfg.scenario {
        Scenario::GaussianClusters { mu_x, mu_y, sigma } => (
            gaussian_cloud(n, mu_x, &vec![*sigma; d], cfg.seed, 0),
            gaussian_cloud(n, mu_y, &vec![*sigma; d], cfg.seed, 1),
        ),
        Scenario::DimCollapse { axis, spread } => {
            let gap_axis = (axis + 1) % d;
            let mut std = vec![0.0; d];
            std[*axis] = *spread;
            let mut mu_x = vec![0.0; d];
            let mut mu_y = vec![0.0; d];
            mu_x[gap_axis] = 0.5;
            mu_y[gap_axis] = -0.5;
            (gaussian_cloud(n, &mu_x, &std, cfg.seed, 0), gaussian_cloud(n, &mu_y, &std, cfg.seed, 1))
        }
        Scenario::InfoImbalance => {
            let unit = vec![1.0; d];
            let zero = vec![0.0; d];
            (gaussian_cloud(2, &zero, &unit, cfg.seed, 0), gaussian_cloud(1, &zero, &unit, cfg.seed, 1))
        }
        Scenario::Explicit { x0, y0 } => (x0.as_slice().to_vec(), y0.as_slice().to_vec()),
    };
    let x = EmbeddingMatrix::from_vec(x.len() / d, d, x)?;
    let y = EmbeddingMatrix::from_vec(y.len() / d, d, y)?;
    let (x, y) = if cfg.sphere_constrained {
        (crate::embedding::normalize_rows(&x)?, crate::embedding::normalize_rows(&y)?)
    } else {
        (x, y)
    };
    PairedEmbeddings::new(x, y)
}

fn gaussian_cloud(n: usize, mu: &[f64], std: &[f64], seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut out = Vec::with_capacity(n * mu.len());
    for _ in 0..n {
        for (m, s) in mu.iter().zip(std) {
            out.push(m + s * normal(&mut rng));
        }
    }
    out
}

/// One gradient step on the contrastive loss of a bijective pair set.
pub fn gd_step(pairs: &PairedEmbeddings, tau: f64, lr: f64, sphere_constrained: bool) -> Result<PairedEmbeddings> {
    let n = pairs.require_bijective()?;
    if tau.is_nan() || tau <= 0.0 || tau.is_infinite() {
        return Err(Error::NonPositiveTau(tau));
    }
    let d = pairs.d();
    let mut x = pairs.x.as_slice().to_vec();
    let mut y = pairs.y.as_slice().to_vec();
    let mut dx = vec![0.0; n * d];
    let mut dy = vec![0.0; n * d];
    Kernel::compute(&x, &y, n, d, tau).gradient(&x, &y, d, tau, &mut dx, &mut dy);
    descend(&mut x, &dx, lr);
    descend(&mut y, &dy, lr);
    if sphere_constrained {
        renormalize(&mut x, d)?;
        renormalize(&mut y, d)?;
    }
    PairedEmbeddings::bijective(EmbeddingMatrix::from_vec(n, d, x)?, EmbeddingMatrix::from_vec(n, d, y)?)
}

fn descend(v: &mut [f64], grad: &[f64], lr: f64) {
    v.iter_mut().zip(grad).for_each(|(a, g)| *a -= lr * g);
}

fn renormalize(v: &mut [f64], d: usize) -> Result<()> {
    for (i, row) in v.chunks_exact_mut(d).enumerate() {
        let nrm = norm(row);
        if nrm <= ZERO_NORM {
            return Err(Error::ZeroRow { row: i, norm: nrm });
        }
        row.iter_mut().for_each(|a| *a /= nrm);
    }
    Ok(())
}

/// Objective for rows `x_k` sharing one caption `y`:
///
/// ```text
/// L = ln m + sum_k d_k / tau + ln sum_k exp(-d_k / tau),   d_k = ||x_k - y||^2
/// ```
///
/// With two rows this is the closed form of the two-images-one-caption
/// loss, whose only minimum is `x_1 = x_2 = y`.
pub fn shared_caption_loss(x: &EmbeddingMatrix, y: &[f64], tau: f64) -> Result<f64> {
    crate::error::check_dims(x.d(), y.len())?;
    if tau.is_nan() || tau <= 0.0 || tau.is_infinite() {
        return Err(Error::NonPositiveTau(tau));
    }
    Ok(shared_caption(x.as_slice(), y, x.d(), tau, None))
}

/// Gradient of [`shared_caption_loss`] with respect to the rows of `x` and
/// to `y`.
pub fn shared_caption_gradient(x: &EmbeddingMatrix, y: &[f64], tau: f64) -> Result<(EmbeddingMatrix, Vec<f64>)> {
    crate::error::check_dims(x.d(), y.len())?;
    if tau.is_nan() || tau <= 0.0 || tau.is_infinite() {
        return Err(Error::NonPositiveTau(tau));
    }
    let d = x.d();
    let mut dx = vec![0.0; x.n() * d];
    let mut dy = vec![0.0; d];
    shared_caption(x.as_slice(), y, d, tau, Some((&mut dx, &mut dy)));
    Ok((EmbeddingMatrix::from_vec(x.n(), d, dx)?, dy))
}

fn shared_caption(x: &[f64], y: &[f64], d: usize, tau: f64, grad: Option<(&mut [f64], &mut [f64])>) -> f64 {
    let dists: Vec<f64> = x.chunks_exact(d).map(|r| sq_dist(r, y)).collect();
    let m = dists.len() as f64;
    let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = dists.iter().map(|di| (-(di - min) / tau).exp()).collect();
    let z: f64 = weights.iter().sum();
    let loss = m.ln() + dists.iter().sum::<f64>() / tau + z.ln() - min / tau;

    if let Some((dx, dy)) = grad {
        dy.iter_mut().for_each(|v| *v = 0.0);
        for (k, row) in x.chunks_exact(d).enumerate() {
            let c = 2.0 / tau * (1.0 - weights[k] / z);
            for j in 0..d {
                let g = c * (row[j] - y[j]);
                dx[k * d + j] = g;
                dy[j] -= g;
            }
        }
    }
    loss
}

enum Objective {
    Contrastive,
    SharedCaption,
}

/// A simulation in progress.
pub struct Simulation {
    cfg: SimulationConfig,
    objective: Objective,
    d: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
    init_gap_dir: Option<Vec<f64>>,
    iter: usize,
}

impl Simulation {
    pub fn new(cfg: SimulationConfig) -> Result<Simulation> {
        let init = init_scenario(&cfg)?;
        let objective = match cfg.scenario {
            Scenario::InfoImbalance => Objective::SharedCaption,
            _ => Objective::Contrastive,
        };
        let gap = global_gap(&init)?;
        let gap_norm = norm(&gap);
        let init_gap_dir = (gap_norm > ZERO_NORM).then(|| gap.iter().map(|g| g / gap_norm).collect());
        let d = cfg.d;
        Ok(Simulation {
            cfg,
            objective,
            d,
            dx: vec![0.0; init.x.n() * d],
            dy: vec![0.0; init.y.n() * d],
            x: init.x.into_vec(),
            y: init.y.into_vec(),
            init_gap_dir,
            iter: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    /// Current embeddings. For the shared-caption scenario Y has one row.
    pub fn state(&self) -> Result<PairedEmbeddings> {
        PairedEmbeddings::new(
            EmbeddingMatrix::from_vec(self.x.len() / self.d, self.d, self.x.clone())?,
            EmbeddingMatrix::from_vec(self.y.len() / self.d, self.d, self.y.clone())?,
        )
    }

    pub fn step(&mut self) -> Result<()> {
        let (d, tau) = (self.d, self.cfg.tau);
        match self.objective {
            Objective::Contrastive => {
                let n = self.x.len() / d;
                Kernel::compute(&self.x, &self.y, n, d, tau).gradient(
                    &self.x,
                    &self.y,
                    d,
                    tau,
                    &mut self.dx,
                    &mut self.dy,
                );
            }
            Objective::SharedCaption => {
                shared_caption(&self.x, &self.y, d, tau, Some((&mut self.dx, &mut self.dy)));
            }
        }
        descend(&mut self.x, &self.dx, self.cfg.lr);
        descend(&mut self.y, &self.dy, self.cfg.lr);
        if self.cfg.sphere_constrained {
            renormalize(&mut self.x, d)?;
            renormalize(&mut self.y, d)?;
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput(format!("embeddings diverged at iteration {}", self.iter + 1)));
        }
        self.iter += 1;
        Ok(())
    }

    /// The bijective view used for all diagnostics: the shared caption is
    /// replicated once per row of X.
    fn bijective_view(&self) -> Result<PairedEmbeddings> {
        let state = self.state()?;
        if state.is_bijective() {
            return Ok(state);
        }
        let reps: Vec<f64> = (0..state.x.n()).flat_map(|_| self.y.iter().copied()).collect();
        PairedEmbeddings::bijective(state.x, EmbeddingMatrix::from_vec(reps.len() / self.d, self.d, reps)?)
    }

    pub fn record(&self) -> Result<TrajectoryRecord> {
        let (d, tau) = (self.d, self.cfg.tau);
        let state = self.state()?;
        let view = self.bijective_view()?;
        let n = view.x.n();
        let kernel = Kernel::compute(view.x.as_slice(), view.y.as_slice(), n, d, tau);
        let loss = match self.objective {
            Objective::Contrastive => kernel.loss(),
            Objective::SharedCaption => shared_caption(&self.x, &self.y, d, tau, None),
        };
        let stats = stochasticity_stats(&kernel.soft_assignment(tau));

        let gap = global_gap(&state)?;
        let gap_norm = norm(&gap);
        let (mean_abs_cos, var_along_gap_x, var_along_gap_y) = if gap_norm > ZERO_NORM {
            let unit: Vec<f64> = gap.iter().map(|g| g / gap_norm).collect();
            (
                orthogonality_report(&state)?.mean_abs_cos(),
                variance_along(&state.x, &unit),
                variance_along(&state.y, &unit),
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        let (var_along_init_gap_x, var_along_init_gap_y) = match &self.init_gap_dir {
            Some(u) => (variance_along(&state.x, u), variance_along(&state.y, u)),
            None => (0.0, 0.0),
        };
        let alignment_err =
            view.x.rows().zip(view.y.rows()).map(|(a, b)| sq_dist(a, b).sqrt()).sum::<f64>() / n as f64;

        Ok(TrajectoryRecord {
            iter: self.iter,
            loss,
            gap_norm,
            mean_abs_cos,
            var_along_gap_x,
            var_along_gap_y,
            var_along_init_gap_x,
            var_along_init_gap_y,
            var_s: stats.var_sx.max(stats.var_sy),
            alignment_err,
        })
    }

    /// Steps to the configured iteration count, logging at multiples of
    /// `log_every` and at the final iteration.
    pub fn run(&mut self) -> Result<Vec<TrajectoryRecord>> {
        let mut log = Vec::new();
        if self.iter == 0 {
            log.push(self.record()?);
        }
        while self.iter < self.cfg.iterations {
            self.step()?;
            if self.iter.is_multiple_of(self.cfg.log_every) || self.iter == self.cfg.iterations {
                log.push(self.record()?);
            }
        }
        Ok(log)
    }
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<Vec<TrajectoryRecord>> {
    Simulation::new(cfg.clone())?.run()
}

/// Initial and final records of one member of a temperature sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub tau: f64,
    pub initial: TrajectoryRecord,
    pub last: TrajectoryRecord,
}

/// Runs `base` once per temperature, all from the same initialization.
pub fn temperature_sweep(base: &SimulationConfig, taus: &[f64]) -> Result<Vec<SweepPoint>> {
    taus.par_iter()
        .map(|&tau| {
            let mut sim = Simulation::new(SimulationConfig { tau, ..base.clone() })?;
            let initial = sim.record()?;
            while sim.iteration() < base.iterations {
                sim.step()?;
            }
            Ok(SweepPoint { tau, initial, last: sim.record()? })
        })
        .collect()
}

/// Frozen desk-scale configurations for the documented toy experiments.
pub mod presets {
    use super::*;

    fn axis(d: usize, k: usize, value: f64) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[k] = value;
        v
    }

    fn clusters(n: usize, d: usize, mu_x: Vec<f64>, mu_y: Vec<f64>, sigma: f64) -> SimulationConfig {
        SimulationConfig {
            n_per_modality: n,
            d,
            scenario: Scenario::GaussianClusters { mu_x, mu_y, sigma },
            tau: 0.07,
            lr: 0.01,
            iterations: 1000,
            sphere_constrained: false,
            log_every: 100,
            seed: 0,
        }
    }

    /// Planar clusters at `(0, +-0.5)` with `sigma = 0.01`.
    pub fn planar_clusters() -> SimulationConfig {
        SimulationConfig { tau: 0.1, iterations: 20_000, log_every: 1000, ..clusters(100, 2, axis(2, 1, 0.5), axis(2, 1, -0.5), 0.01) }
    }

    /// Sphere-constrained clusters at `+-e1` in 16 dimensions.
    pub fn sphere_clusters() -> SimulationConfig {
        SimulationConfig {
            iterations: 50_000,
            log_every: 1000,
            sphere_constrained: true,
            ..clusters(100, 16, axis(16, 0, 1.0), axis(16, 0, -1.0), 0.01)
        }
    }

    /// Tight 3-D clusters with a gap of 1.0, for variance shrinkage along
    /// the gap.
    pub fn tight_clusters() -> SimulationConfig {
        SimulationConfig { iterations: 100, log_every: 10, ..clusters(100, 3, axis(3, 1, 0.5), axis(3, 1, -0.5), 0.01) }
    }

    /// Planar clusters with `sigma = 0.1`, used for the soft-assignment
    /// stochasticity trend.
    pub fn wide_clusters() -> SimulationConfig {
        SimulationConfig { iterations: 5000, log_every: 100, ..clusters(100, 2, axis(2, 1, 0.5), axis(2, 1, -0.5), 0.1) }
    }

    pub fn dim_collapse() -> SimulationConfig {
        SimulationConfig {
            n_per_modality: 100,
            d: 2,
            scenario: Scenario::DimCollapse { axis: 0, spread: 0.1 },
            tau: 0.07,
            lr: 1.0,
            iterations: 5000,
            sphere_constrained: false,
            log_every: 100,
            seed: 0,
        }
    }

    pub fn info_imbalance() -> SimulationConfig {
        SimulationConfig {
            n_per_modality: 2,
            d: 2,
            scenario: Scenario::InfoImbalance,
            tau: 1.0,
            lr: 0.01,
            iterations: 50_000,
            sphere_constrained: false,
            log_every: 1000,
            seed: 0,
        }
    }

    /// Sphere-constrained clusters at `+-0.5 e1` in 256 dimensions.
    pub fn temperature_contrast(tau: f64) -> SimulationConfig {
        SimulationConfig {
            tau,
            lr: 0.5,
            iterations: 2000,
            sphere_constrained: true,
            ..clusters(50, 256, axis(256, 0, 0.5), axis(256, 0, -0.5), 0.1)
        }
    }

    /// Like [`temperature_contrast`] but with Y a row permutation of X, so
    /// the two means coincide exactly at initialization.
    pub fn temperature_contrast_zero_gap(tau: f64) -> Result<SimulationConfig> {
        let (n, d, seed) = (50, 256, 0);
        let zero = vec![0.0; d];
        let x0 = EmbeddingMatrix::from_vec(n, d, gaussian_cloud(n, &zero, &vec![0.1; d], seed, 0))?;
        let x0 = crate::embedding::normalize_rows(&x0)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream_rng(seed, 1));
        let y0 = EmbeddingMatrix::from_rows(&order.iter().map(|&i| x0.row(i)).collect::<Vec<_>>())?;
        Ok(SimulationConfig { scenario: Scenario::Explicit { x0, y0 }, seed, ..temperature_contrast(tau) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario, d: usize) -> SimulationConfig {
        SimulationConfig {
            n_per_modality: 5,
            d,
            scenario,
            tau: 0.5,
            lr: 0.01,
            iterations: 20,
            sphere_constrained: false,
            log_every: 7,
            seed: 3,
        }
    }

    #[test]
    fn zero_sigma_clusters_sit_on_their_means() {
        let cfg = small(Scenario::GaussianClusters { mu_x: vec![1.0, 2.0], mu_y: vec![-1.0, 0.5], sigma: 0.0 }, 2);
        let p = init_scenario(&cfg).unwrap();
        assert!(p.x.rows().all(|r| r == [1.0, 2.0]));
        assert!(p.y.rows().all(|r| r == [-1.0, 0.5]));
    }

    #[test]
    fn info_imbalance_shapes() {
        let p = init_scenario(&small(Scenario::InfoImbalance, 4)).unwrap();
        assert_eq!((p.x.n(), p.y.n()), (2, 1));
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = small(Scenario::GaussianClusters { mu_x: vec![0.0; 3], mu_y: vec![1.0; 3], sigma: 0.3 }, 3);
        assert_eq!(init_scenario(&cfg).unwrap(), init_scenario(&cfg).unwrap());
        let other = init_scenario(&SimulationConfig { seed: 4, ..cfg.clone() }).unwrap();
        assert_ne!(other, init_scenario(&cfg).unwrap());
    }

    #[test]
    fn sphere_init_is_normalized() {
        let cfg = SimulationConfig {
            sphere_constrained: true,
            ..small(Scenario::GaussianClusters { mu_x: vec![1.0, 0.0, 0.0], mu_y: vec![-1.0, 0.0, 0.0], sigma: 0.1 }, 3)
        };
        let p = init_scenario(&cfg).unwrap();
        assert!(p.x.on_unit_sphere() && p.y.on_unit_sphere());
    }

    #[test]
    fn rejects_bad_configs() {
        let base = small(Scenario::InfoImbalance, 2);
        for cfg in [
            SimulationConfig { tau: 0.0, ..base.clone() },
            SimulationConfig { lr: -1.0, ..base.clone() },
            SimulationConfig { iterations: 0, ..base.clone() },
            SimulationConfig { log_every: 0, ..base.clone() },
            SimulationConfig { scenario: Scenario::DimCollapse { axis: 2, spread: 0.1 }, ..base.clone() },
            SimulationConfig {
                scenario: Scenario::GaussianClusters { mu_x: vec![0.0], mu_y: vec![0.0, 0.0], sigma: 0.1 },
                ..base.clone()
            },
        ] {
            assert!(matches!(init_scenario(&cfg), Err(Error::BadConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn zero_lr_step_is_identity() {
        let cfg = small(Scenario::GaussianClusters { mu_x: vec![0.0; 3], mu_y: vec![1.0; 3], sigma: 0.3 }, 3);
        let p = init_scenario(&cfg).unwrap();
        assert_eq!(gd_step(&p, 0.5, 0.0, false).unwrap(), p);
    }

    #[test]
    fn log_schedule() {
        let cfg = small(Scenario::GaussianClusters { mu_x: vec![0.0; 2], mu_y: vec![1.0; 2], sigma: 0.3 }, 2);
        let iters: Vec<usize> = run_simulation(&cfg).unwrap().iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![0, 7, 14, 20]);
    }

    #[test]
    fn simulation_step_matches_gd_step() {
        let cfg = small(Scenario::GaussianClusters { mu_x: vec![0.0; 3], mu_y: vec![1.0; 3], sigma: 0.3 }, 3);
        let mut sim = Simulation::new(cfg.clone()).unwrap();
        let expected = gd_step(&sim.state().unwrap(), cfg.tau, cfg.lr, false).unwrap();
        sim.step().unwrap();
        assert_eq!(sim.state().unwrap(), expected);
    }

    #[test]
    fn shared_caption_gradient_matches_finite_differences() {
        let x = EmbeddingMatrix::from_rows(&[[0.3, -0.2], [1.1, 0.4]]).unwrap();
        let y = vec![0.5, 0.9];
        let tau = 0.7;
        let (dx, dy) = shared_caption_gradient(&x, &y, tau).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            let mut plus = x.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (shared_caption_loss(&EmbeddingMatrix::from_vec(2, 2, plus).unwrap(), &y, tau).unwrap()
                - shared_caption_loss(&EmbeddingMatrix::from_vec(2, 2, minus).unwrap(), &y, tau).unwrap())
                / (2.0 * h);
            assert!((fd - dx.as_slice()[k]).abs() < 1e-7);
        }
        for k in 0..2 {
            let mut plus = y.clone();
            let mut minus = y.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (shared_caption_loss(&x, &plus, tau).unwrap() - shared_caption_loss(&x, &minus, tau).unwrap())
                / (2.0 * h);
            assert!((fd - dy[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn shared_caption_value_at_coincidence() {
        let x = EmbeddingMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let at_rest = shared_caption_loss(&x, &[0.5, 0.5], 1.0).unwrap();
        assert!((at_rest - 2.0 * 2f64.ln()).abs() < 1e-15);
        let apart = EmbeddingMatrix::from_rows(&[[0.6, 0.5], [0.4, 0.5]]).unwrap();
        assert!(shared_caption_loss(&apart, &[0.5, 0.5], 1.0).unwrap() > at_rest);
    }
}
