//! Entropy functionals on density matrices.
//!
//! The canonical entropy used by every measure in this crate is the Renyi
//! entropy of order 2 to base 2, `S(rho) = -log2 Tr(rho^2)`. Linear
//! entropies and general Renyi entropies are provided alongside it, together
//! with the conversion between the two families and a von Neumann diagnostic.

use crate::tensor::{hermitian_eig, pure_single_marginal, ComplexMatrix, MultiState, StateBody};
use crate::{Error, Result};

/// Selector for an entropy functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyKind {
    /// Normalized linear entropy of integer order `r >= 2`.
    Linear { r: u32 },
    /// Renyi entropy of order `alpha` to base `base`.
    Renyi { alpha: f64, base: f64 },
    /// Renyi order 2, base 2 — the entropy behind all measures here.
    Canonical,
}

/// `Tr(rho^2)`; pure states give exactly 1.
pub fn purity(state: &MultiState) -> f64 {
    match state.body() {
        StateBody::Pure(_) => 1.0,
        StateBody::Density(m) => purity_of_matrix(m),
    }
}

/// `Tr(m^2)` for a Hermitian matrix, summed without forming the product.
pub(crate) fn purity_of_matrix(m: &ComplexMatrix) -> f64 {
    m.entries().iter().map(|e| e.norm_sqr()).sum()
}

/// Canonical entropy `-log2 Tr(rho^2)`, clamped at zero.
pub fn canonical_entropy(state: &MultiState) -> f64 {
    canonical_from_purity(purity(state))
}

/// Canonical entropy from a precomputed purity.
pub(crate) fn canonical_from_purity(purity: f64) -> f64 {
    (-purity.log2()).max(0.0)
}

/// Normalized linear entropy `d^(r-1)/(d^(r-1)-1) * (1 - Tr(rho^r))`.
///
/// Ranges over `[0, 1]`: zero exactly for pure states, one for the maximally
/// mixed state.
pub fn linear_entropy(state: &MultiState, r: u32) -> Result<f64> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!(
            "linear entropy order must be at least 2, got {r}"
        )));
    }
    let d = state.shape().total() as f64;
    let trace_power = trace_power(state, r as f64)?;
    let scale = d.powi(r as i32 - 1);
    Ok(scale / (scale - 1.0) * (1.0 - trace_power))
}

/// Renyi entropy `1/(1-alpha) * log_base Tr(rho^alpha)`.
pub fn renyi_entropy(state: &MultiState, alpha: f64, base: f64) -> Result<f64> {
    check_renyi_params(alpha, base)?;
    let trace_power = trace_power(state, alpha)?;
    Ok((trace_power.ln() / base.ln() / (1.0 - alpha)).max(0.0))
}

/// Converts a normalized linear entropy of order `alpha` into the Renyi
/// entropy of the same order for a `d`-dimensional state:
/// `1/(1-alpha) * log_base(1 - (d^(alpha-1)-1)/d^(alpha-1) * s_linear)`.
pub fn renyi_from_linear(s_linear: f64, alpha: f64, base: f64, d: usize) -> Result<f64> {
    check_renyi_params(alpha, base)?;
    let scale = (d as f64).powf(alpha - 1.0);
    let arg = 1.0 - (scale - 1.0) / scale * s_linear;
    if arg <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "logarithm argument {arg:.3e} is not positive; the linear entropy exceeds the \
             maximum for dimension {d}"
        )));
    }
    Ok((arg.ln() / base.ln() / (1.0 - alpha)).max(0.0))
}

/// Evaluates the selected entropy functional.
pub fn entropy(state: &MultiState, kind: EntropyKind) -> Result<f64> {
    match kind {
        EntropyKind::Linear { r } => linear_entropy(state, r),
        EntropyKind::Renyi { alpha, base } => renyi_entropy(state, alpha, base),
        EntropyKind::Canonical => Ok(canonical_entropy(state)),
    }
}

/// Total entanglement of a pure state: the sum of canonical entropies of all
/// single-factor marginals.
pub fn subsystem_entropy_sum(psi: &MultiState) -> Result<f64> {
    let amps = psi.amplitudes().ok_or_else(|| {
        Error::PureStateRequired("the subsystem entropy sum is a pure-state functional".into())
    })?;
    let shape = psi.shape();
    let mut total = 0.0;
    for factor in 1..=shape.factor_count() {
        let marginal = pure_single_marginal(amps, shape, factor);
        total += canonical_from_purity(purity_of_matrix(&marginal));
    }
    Ok(total)
}

/// Von Neumann entropy `-Tr(rho log2 rho)`, provided as a diagnostic only;
/// no measure in this crate consumes it.
pub fn von_neumann_entropy(state: &MultiState) -> Result<f64> {
    let rho = state.density_matrix();
    let (values, _) = hermitian_eig(&rho)?;
    Ok(values
        .iter()
        .filter(|&&v| v > 1e-15)
        .map(|&v| -v * v.log2())
        .sum())
}

fn check_renyi_params(alpha: f64, base: f64) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.0 || alpha == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "Renyi order must be positive and different from 1, got {alpha}"
        )));
    }
    if base.is_nan() || base <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "Renyi base must exceed 1, got {base}"
        )));
    }
    Ok(())
}

/// `Tr(rho^alpha)`; integer orders avoid the eigensolver where possible.
fn trace_power(state: &MultiState, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Ok(1.0);
    }
    if state.is_pure() {
        return Ok(1.0);
    }
    if alpha == 2.0 {
        return Ok(purity(state));
    }
    let rho = state.density_matrix();
    let (values, _) = hermitian_eig(&rho)?;
    Ok(values
        .iter()
        .map(|&v| {
            let clipped = v.max(0.0);
            if clipped == 0.0 {
                0.0
            } else {
                clipped.powf(alpha)
            }
        })
        .sum())
}
