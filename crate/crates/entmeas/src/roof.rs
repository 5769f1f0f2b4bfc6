//! Upper bounds on convex-roof functionals by derivative-free search over
//! ensemble decompositions.
//!
//! Every size-m ensemble of a density matrix is reachable from its
//! eigendecomposition by right-multiplying the weighted state matrix with an
//! isometry, so the search walks that space with random two-column complex
//! Givens rotations, accepting only improvements. The walk leaves the
//! reconstructed density matrix invariant by construction and the invariant
//! is re-certified at every accepted step.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::entropy::subsystem_entropy_sum;
use crate::tensor::{hermitian_eig, ComplexMatrix, HilbertShape, MultiState};
use crate::tolerances::{DECOMPOSITION_RECON_TOL, WEIGHT_FLOOR};
use crate::{Error, Result};

/// A weighted pure-state ensemble for a density matrix.
#[derive(Debug, Clone)]
pub struct Decomposition {
    shape: HilbertShape,
    weights: Vec<f64>,
    members: Vec<MultiState>,
}

impl Decomposition {
    /// Validates and builds an ensemble for `target`: weights nonnegative
    /// and summing to one, members pure on the target's shape, and the
    /// weighted sum of member projectors reconstructing the target's
    /// density matrix within the certification tolerance.
    pub fn new(target: &MultiState, weights: Vec<f64>, members: Vec<MultiState>) -> Result<Self> {
        if weights.len() != members.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} ensemble members",
                weights.len(),
                members.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidParameter(
                "an ensemble needs at least one member".into(),
            ));
        }
        if let Some(&bad) = weights.iter().find(|&&w| w < -1e-15) {
            return Err(Error::InvalidParameter(format!(
                "ensemble weight {bad} is negative"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "ensemble weights sum to {total}, expected 1"
            )));
        }
        for member in &members {
            if !member.is_pure() {
                return Err(Error::PureStateRequired(
                    "ensemble members must be state vectors".into(),
                ));
            }
            if member.shape() != target.shape() {
                return Err(Error::DimensionMismatch(
                    "ensemble member shape differs from the target shape".into(),
                ));
            }
        }
        let decomposition = Self {
            shape: target.shape().clone(),
            weights,
            members,
        };
        let residual = decomposition.reconstruction_residual(target);
        if residual > DECOMPOSITION_RECON_TOL {
            return Err(Error::IdentityViolation { residual });
        }
        Ok(decomposition)
    }

    /// The ensemble weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The pure ensemble members.
    pub fn members(&self) -> &[MultiState] {
        &self.members
    }

    /// Number of members, including zero-weight padding members.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// True when the ensemble has no members (never for validated values).
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The weighted sum of member projectors.
    pub fn reconstruction(&self) -> ComplexMatrix {
        let total = self.shape.total();
        let mut sum = ComplexMatrix::zeros(total, total);
        for (w, member) in self.weights.iter().zip(&self.members) {
            if *w <= 0.0 {
                continue;
            }
            let amps = member.amplitudes().expect("members are pure");
            for r in 0..total {
                for col in 0..total {
                    let add = amps[r] * amps[col].conj() * *w;
                    let current = sum.get(r, col);
                    sum.set(r, col, current + add);
                }
            }
        }
        sum
    }

    /// Frobenius distance between the reconstruction and the target.
    pub fn reconstruction_residual(&self, target: &MultiState) -> f64 {
        self.reconstruction()
            .sub(&target.density_matrix())
            .map(|d| d.frobenius_norm())
            .unwrap_or(f64::INFINITY)
    }
}

/// Outcome of a roof minimization.
#[derive(Debug, Clone)]
pub struct RoofResult {
    /// Best ensemble average found; an upper bound on the infimum.
    pub value: f64,
    /// The ensemble achieving `value`.
    pub decomposition: Decomposition,
    /// Rotation proposals consumed by the winning restart.
    pub iterations: usize,
    /// True when the winning restart stopped on its own (cost floor or
    /// improvement plateau) rather than by exhausting its budget.
    pub converged: bool,
}

/// Search parameters for [`roof_minimize`].
#[derive(Debug, Clone)]
pub struct RoofOptions {
    /// Ensemble size; `None` uses rank + 2.
    pub ensemble_size: Option<usize>,
    /// Maximum rotation proposals per restart.
    pub budget: usize,
    /// Number of independent restarts (run in parallel, merged by minimum).
    pub restarts: usize,
    /// Seed for the deterministic per-restart random streams.
    pub seed: u64,
    /// Initial rotation angle scale.
    pub initial_step: f64,
    /// Multiplicative step decay applied every `decay_interval` proposals.
    pub decay: f64,
    /// Proposals between step decays.
    pub decay_interval: usize,
    /// Smallest rotation angle scale.
    pub min_step: f64,
    /// Proposals without improvement after which a restart stops.
    pub stall_limit: usize,
}

impl Default for RoofOptions {
    fn default() -> Self {
        Self {
            ensemble_size: None,
            budget: 2000,
            restarts: 8,
            seed: 0,
            initial_step: 0.5,
            decay: 0.7,
            decay_interval: 200,
            min_step: 0.02,
            stall_limit: 600,
        }
    }
}

/// Eigen-ensemble columns of `dense`, weighted by the square roots of the
/// eigenvalues, padded with zero columns up to `m`.
fn eigen_columns(dense: &ComplexMatrix, m: usize, total: usize) -> Result<Vec<Vec<Complex64>>> {
    let (values, vectors) = hermitian_eig(dense)?;
    let rank = values.iter().filter(|&&v| v > WEIGHT_FLOOR).count().max(1);
    if m < rank {
        return Err(Error::InvalidParameter(format!(
            "ensemble size {m} is below the state's rank {rank}"
        )));
    }
    let mut columns = Vec::with_capacity(m);
    for (i, &value) in values.iter().enumerate().take(rank) {
        let scale = value.max(0.0).sqrt();
        let column: Vec<Complex64> = (0..total).map(|r| vectors.get(r, i) * scale).collect();
        columns.push(column);
    }
    while columns.len() < m {
        columns.push(vec![Complex64::new(0.0, 0.0); total]);
    }
    Ok(columns)
}

fn columns_to_decomposition(
    target: &MultiState,
    columns: &[Vec<Complex64>],
) -> Result<Decomposition> {
    let total = target.shape().total();
    let mut weights = Vec::with_capacity(columns.len());
    let mut members = Vec::with_capacity(columns.len());
    for column in columns {
        let w: f64 = column.iter().map(|a| a.norm_sqr()).sum();
        if w > WEIGHT_FLOOR {
            let inv = 1.0 / w.sqrt();
            let amps: Vec<Complex64> = column.iter().map(|a| a * inv).collect();
            weights.push(w);
            members.push(MultiState::pure_normalized(target.shape().clone(), amps)?);
        } else {
            let mut amps = vec![Complex64::new(0.0, 0.0); total];
            amps[0] = Complex64::new(1.0, 0.0);
            weights.push(0.0);
            members.push(MultiState::pure(target.shape().clone(), amps)?);
        }
    }
    Decomposition::new(target, weights, members)
}

/// Eigendecomposition ensemble of `rho` padded to `m` members; members
/// beyond the rank carry zero weight.
pub fn seed_decomposition(rho: &MultiState, m: usize) -> Result<Decomposition> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "ensemble size must be at least 1".into(),
        ));
    }
    let dense = rho.density_matrix();
    let columns = eigen_columns(&dense, m, rho.shape().total())?;
    columns_to_decomposition(rho, &columns)
}

struct RestartOutcome {
    columns: Vec<Vec<Complex64>>,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn column_cost<F>(shape: &HilbertShape, column: &[Complex64], functional: &F) -> Result<(f64, f64)>
where
    F: Fn(&MultiState) -> f64 + Sync,
{
    let w: f64 = column.iter().map(|a| a.norm_sqr()).sum();
    if w <= WEIGHT_FLOOR {
        return Ok((w, 0.0));
    }
    let inv = 1.0 / w.sqrt();
    let amps: Vec<Complex64> = column.iter().map(|a| a * inv).collect();
    let member = MultiState::pure_normalized(shape.clone(), amps)?;
    Ok((w, functional(&member)))
}

fn run_restart<F>(
    rho: &MultiState,
    dense: &ComplexMatrix,
    seed_columns: &[Vec<Complex64>],
    functional: &F,
    options: &RoofOptions,
    restart_index: usize,
) -> Result<RestartOutcome>
where
    F: Fn(&MultiState) -> f64 + Sync,
{
    let shape = rho.shape();
    let m = seed_columns.len();
    let mut rng = ChaCha12Rng::seed_from_u64(
        options
            .seed
            .wrapping_add((restart_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)),
    );
    let mut columns: Vec<Vec<Complex64>> = seed_columns.to_vec();
    let mut weights = vec![0.0f64; m];
    let mut costs = vec![0.0f64; m];
    for (i, column) in columns.iter().enumerate() {
        let (w, cost) = column_cost(shape, column, functional)?;
        weights[i] = w;
        costs[i] = cost;
    }
    let mut total: f64 = weights.iter().zip(&costs).map(|(w, c)| w * c).sum();
    let mut step = options.initial_step;
    let mut iterations = 0usize;
    let mut last_improvement = 0usize;
    let mut converged = total < 1e-12;

    while !converged && iterations < options.budget {
        iterations += 1;
        let a = rng.random_range(0..m);
        let mut b = rng.random_range(0..m - 1);
        if b >= a {
            b += 1;
        }
        let theta: f64 = {
            let g: f64 = StandardNormal.sample(&mut rng);
            step * g
        };
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        let (cos_t, sin_t) = (theta.cos(), theta.sin());
        let phase = Complex64::new(phi.cos(), phi.sin());

        let total_dim = shape.total();
        let mut new_a = Vec::with_capacity(total_dim);
        let mut new_b = Vec::with_capacity(total_dim);
        for (&va, &vb) in columns[a].iter().zip(&columns[b]) {
            new_a.push(va * cos_t + vb * phase * sin_t);
            new_b.push(vb * cos_t - va * phase.conj() * sin_t);
        }
        let (w_a, cost_a) = column_cost(shape, &new_a, functional)?;
        let (w_b, cost_b) = column_cost(shape, &new_b, functional)?;
        let candidate =
            total - weights[a] * costs[a] - weights[b] * costs[b] + w_a * cost_a + w_b * cost_b;
        if candidate < total - 1e-15 {
            columns[a] = new_a;
            columns[b] = new_b;
            weights[a] = w_a;
            weights[b] = w_b;
            costs[a] = cost_a;
            costs[b] = cost_b;
            total = candidate;
            last_improvement = iterations;

            let mut reconstruction = ComplexMatrix::zeros(total_dim, total_dim);
            for column in &columns {
                for r in 0..total_dim {
                    for c in 0..total_dim {
                        let add = column[r] * column[c].conj();
                        let current = reconstruction.get(r, c);
                        reconstruction.set(r, c, current + add);
                    }
                }
            }
            let residual = reconstruction.sub(dense)?.frobenius_norm();
            if residual > DECOMPOSITION_RECON_TOL {
                return Err(Error::IdentityViolation { residual });
            }
        }
        if iterations.is_multiple_of(options.decay_interval) {
            step = (step * options.decay).max(options.min_step);
        }
        if total < 1e-12 || iterations - last_improvement >= options.stall_limit {
            converged = true;
        }
    }

    let value = weights.iter().zip(&costs).map(|(w, c)| w * c).sum();
    Ok(RestartOutcome {
        columns,
        value,
        iterations,
        converged,
    })
}

/// Minimizes the ensemble average of `functional` over size-m ensembles of
/// `rho` by greedy random rotations with parallel restarts; the result is
/// an upper bound on the convex-roof infimum and is deterministic for a
/// fixed seed.
pub fn roof_minimize<F>(
    rho: &MultiState,
    functional: F,
    options: &RoofOptions,
) -> Result<RoofResult>
where
    F: Fn(&MultiState) -> f64 + Sync,
{
    let dense = rho.density_matrix();
    let (values, _) = hermitian_eig(&dense)?;
    let rank = values.iter().filter(|&&v| v > WEIGHT_FLOOR).count().max(1);

    if rank == 1 {
        let m = options.ensemble_size.unwrap_or(1).max(1);
        let decomposition = seed_decomposition(rho, m)?;
        let value = functional(&decomposition.members()[0]);
        return Ok(RoofResult {
            value,
            decomposition,
            iterations: 1,
            converged: true,
        });
    }

    let m = options.ensemble_size.unwrap_or(rank + 2).max(rank);
    let seed_columns = eigen_columns(&dense, m, rho.shape().total())?;
    if options.restarts == 0 {
        return Err(Error::InvalidParameter(
            "at least one restart is required".into(),
        ));
    }

    let outcomes: Vec<Result<RestartOutcome>> = (0..options.restarts)
        .into_par_iter()
        .map(|restart| run_restart(rho, &dense, &seed_columns, &functional, options, restart))
        .collect();
    let mut best: Option<RestartOutcome> = None;
    for outcome in outcomes {
        let outcome = outcome?;
        let better = match &best {
            None => true,
            Some(current) => outcome.value < current.value,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart ran");
    let decomposition = columns_to_decomposition(rho, &best.columns)?;
    Ok(RoofResult {
        value: best.value,
        decomposition,
        iterations: best.iterations,
        converged: best.converged,
    })
}

/// Upper bound on the roof of the total marginal entropy: minimizes the
/// ensemble average of the sum of single-factor entropies of each member.
pub fn p_upper(rho: &MultiState, options: &RoofOptions) -> Result<RoofResult> {
    roof_minimize(
        rho,
        |member: &MultiState| subsystem_entropy_sum(member).expect("ensemble members are pure"),
        options,
    )
}
