//! Separability and physical entanglement measures assembled from the
//! entropy, concurrence, and convex-roof layers.
//!
//! Pure states get an exact treatment: [`detect_gamma_k`] finds the finest
//! factorization of a state, and [`separability_measure`] distributes the
//! total subsystem entropy over the factor subsets through entropy-gated
//! subtraction. Mixed states get a two-sided treatment instead:
//! [`physical_hierarchy`] scores every reduced state by a concurrence-based
//! lower bound ([`p_lower`]) and/or a convex-roof upper bound and builds the
//! floored subtraction ladder per kind. [`ppt_check`] and
//! [`smolin_closed_form`] provide independent entanglement verdicts used to
//! cross-examine the bounds.

use std::fmt;

use serde::Serialize;

use crate::concurrence::{class_lower_bounds, mixed_lower_bound, BoundOptions};
use crate::entropy::canonical_entropy;
use crate::roof::{p_upper, RoofOptions};
use crate::states::smolin;
use crate::tensor::{min_eigenvalue, partial_trace, partial_transpose, MultiState, SubsystemSet};
use crate::tolerances::{
    DEFAULT_MAX_FACTORS, DEFAULT_MAX_TOTAL_DIM, NPT_THRESHOLD, REPORT_SUM_TOL,
};
use crate::{Error, Result};
use rayon::prelude::*;

/// Partition of the factors `{1, …, n}` into disjoint blocks, stored with
/// the blocks ordered by their least element.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Partition {
    blocks: Vec<SubsystemSet>,
    #[serde(skip)]
    factor_count: usize,
}

impl Partition {
    /// Builds a partition after checking that the blocks cover every factor
    /// exactly once.
    pub fn new(factor_count: usize, mut blocks: Vec<SubsystemSet>) -> Result<Self> {
        if factor_count == 0 {
            return Err(Error::InvalidShape(
                "a partition needs at least one factor".into(),
            ));
        }
        let mut seen = vec![false; factor_count + 1];
        for block in &blocks {
            for &i in block.indices() {
                if i > factor_count {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        factors: factor_count,
                    });
                }
                if seen[i] {
                    return Err(Error::InvalidSubsystemSet(format!(
                        "factor {i} appears in more than one block"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = (1..=factor_count).find(|&i| !seen[i]) {
            return Err(Error::InvalidSubsystemSet(format!(
                "factor {missing} is not covered by any block"
            )));
        }
        blocks.sort_by_key(|b| b.indices()[0]);
        Ok(Self {
            blocks,
            factor_count,
        })
    }

    /// Blocks ordered by least element.
    pub fn blocks(&self) -> &[SubsystemSet] {
        &self.blocks
    }

    /// Number of blocks; the state factorizes into this many groups.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Number of factors covered by the partition.
    pub fn factor_count(&self) -> usize {
        self.factor_count
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.factor_count > 9 { "," } else { "" };
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                b.indices()
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(sep)
            })
            .collect();
        write!(f, "{{{}}}", parts.join("|"))
    }
}

/// How a reported value relates to the true measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    /// Evaluated exactly.
    Exact,
    /// Certified lower bound.
    LowerBound,
    /// Upper bound read off an explicit ensemble.
    UpperBound,
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MeasureKind::Exact => "exact",
            MeasureKind::LowerBound => "lower-bound",
            MeasureKind::UpperBound => "upper-bound",
        };
        write!(f, "{name}")
    }
}

/// One measure entry for one subsystem set.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetMeasure {
    /// The subsystem set the value belongs to.
    pub set: SubsystemSet,
    /// The measure value or bound; never negative.
    pub value: f64,
    /// How `value` relates to the true measure.
    pub kind: MeasureKind,
}

/// Evaluated measure hierarchy for one state.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureReport {
    subsets: Vec<SubsetMeasure>,
    total: f64,
    partition: Option<Partition>,
    notes: Vec<String>,
}

impl MeasureReport {
    /// Per-set entries in subset enumeration order; in `Both` mode each set
    /// carries a lower-bound entry followed by an upper-bound entry.
    pub fn subsets(&self) -> &[SubsetMeasure] {
        &self.subsets
    }

    /// Hierarchy total: the summed single-factor entropy for the
    /// separability measure, the summed ladder for the physical measure.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Detected partition, when one is defined for the input.
    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    /// Diagnostics accumulated during evaluation.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Value for one set and kind, when present.
    pub fn value_of(&self, set: &SubsystemSet, kind: MeasureKind) -> Option<f64> {
        self.subsets
            .iter()
            .find(|e| e.kind == kind && e.set == *set)
            .map(|e| e.value)
    }

    /// Sum of the entries of one kind over all sets of the given size.
    pub fn total_for_size(&self, size: usize, kind: MeasureKind) -> f64 {
        self.subsets
            .iter()
            .filter(|e| e.kind == kind && e.set.len() == size)
            .map(|e| e.value)
            .sum()
    }
}

fn require_pure(state: &MultiState, what: &str) -> Result<()> {
    if state.is_pure() {
        Ok(())
    } else {
        Err(Error::PureStateRequired(format!(
            "{what} is defined on pure states only"
        )))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "entropy gate tolerance must be a nonnegative finite number, got {eps}"
        )))
    }
}

fn check_factor_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::InvalidParameter(format!(
            "subset enumeration over {n} factors exceeds the cap of {cap}"
        )));
    }
    Ok(())
}

fn marginal_entropy(state: &MultiState, set: &SubsystemSet) -> Result<f64> {
    Ok(canonical_entropy(&partial_trace(state, set)?))
}

/// Sum of the canonical marginal entropies over all single factors, defined
/// for pure and mixed inputs alike.
pub fn total_marginal_entropy(state: &MultiState) -> Result<f64> {
    let n = state.shape().factor_count();
    let mut total = 0.0;
    for s in 1..=n {
        total += marginal_entropy(state, &SubsystemSet::singleton(s)?)?;
    }
    Ok(total)
}

/// Finds the finest factorization of a pure state: the partition whose
/// blocks are the smallest factor groups with vanishing marginal entropy.
///
/// Factor subsets are scanned in size-then-lexicographic order; whenever a
/// proper subset of the remaining factors splits off cleanly (marginal
/// entropy at most `eps`), it becomes a block and the scan restarts on the
/// remainder. The state factorizes across the returned partition and every
/// coarsening of it, and across no finer one.
pub fn detect_gamma_k(psi: &MultiState, eps: f64) -> Result<Partition> {
    require_pure(psi, "factorization detection")?;
    check_eps(eps)?;
    let n = psi.shape().factor_count();
    check_factor_cap(n, DEFAULT_MAX_FACTORS)?;
    let all = SubsystemSet::enumerate_all(n);
    let mut remaining: Vec<usize> = (1..=n).collect();
    let mut blocks = Vec::new();
    'split: while remaining.len() > 1 {
        for set in &all {
            let fits =
                set.len() < remaining.len() && set.indices().iter().all(|i| remaining.contains(i));
            if fits && marginal_entropy(psi, set)? <= eps {
                remaining.retain(|i| !set.contains(*i));
                blocks.push(set.clone());
                continue 'split;
            }
        }
        break;
    }
    if !remaining.is_empty() {
        blocks.push(SubsystemSet::new(remaining)?);
    }
    Partition::new(n, blocks)
}

fn note_near_gate(notes: &mut Vec<String>, set: &SubsystemSet, s: f64, eps: f64) {
    if s > eps && s < 100.0 * eps {
        notes.push(format!(
            "marginal entropy {s:.3e} of {set} sits between eps and 100*eps; \
             the zero-entropy gate may be unreliable here"
        ));
    }
}

/// Entropy-gated separability hierarchy of a pure state.
///
/// Every factor subset receives the summed single-factor entropies of its
/// members minus the entries of all its strict subsets, provided its own
/// marginal entropy vanishes within `eps`; otherwise it receives zero.
/// Singletons always score zero. The entries distribute the summed
/// single-factor entropy (the report total) over the blocks of the detected
/// partition, which is attached to the report.
pub fn separability_measure(psi: &MultiState, eps: f64) -> Result<MeasureReport> {
    require_pure(psi, "the separability measure")?;
    check_eps(eps)?;
    let n = psi.shape().factor_count();
    check_factor_cap(n, DEFAULT_MAX_FACTORS)?;

    let singles: Vec<f64> = (1..=n)
        .map(|s| marginal_entropy(psi, &SubsystemSet::singleton(s)?))
        .collect::<Result<_>>()?;
    let total: f64 = singles.iter().sum();

    let all = SubsystemSet::enumerate_all(n);
    let mut notes = Vec::new();
    let mut raw = vec![0.0; all.len()];
    for i in 0..all.len() {
        let set = &all[i];
        let s_alpha = marginal_entropy(psi, set)?;
        note_near_gate(&mut notes, set, s_alpha, eps);
        if set.len() == 1 || s_alpha > eps {
            continue;
        }
        let inner: f64 = all[..i]
            .iter()
            .zip(&raw)
            .filter(|(b, _)| b.is_strict_subset_of(set))
            .map(|(_, v)| v)
            .sum();
        let outer: f64 = set.indices().iter().map(|&s| singles[s - 1]).sum();
        raw[i] = outer - inner;
    }

    let subsets: Vec<SubsetMeasure> = all
        .iter()
        .zip(&raw)
        .map(|(set, &v)| SubsetMeasure {
            set: set.clone(),
            value: v.max(0.0),
            kind: MeasureKind::Exact,
        })
        .collect();
    let reported: f64 = subsets.iter().map(|e| e.value).sum();
    if (reported - total).abs() > REPORT_SUM_TOL {
        return Err(Error::IdentityViolation {
            residual: (reported - total).abs(),
        });
    }

    let partition = detect_gamma_k(psi, eps)?;
    Ok(MeasureReport {
        subsets,
        total,
        partition: Some(partition),
        notes,
    })
}

/// Which bounds the physical ladder evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierarchyMode {
    /// Concurrence-derived lower bounds only.
    Bound,
    /// Convex-roof upper bounds only.
    Roof,
    /// Both ladders, assembled independently.
    Both,
}

impl std::str::FromStr for HierarchyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bound" => Ok(HierarchyMode::Bound),
            "roof" => Ok(HierarchyMode::Roof),
            "both" => Ok(HierarchyMode::Both),
            other => Err(Error::InvalidParameter(format!(
                "unknown hierarchy mode '{other}'; expected bound, roof, or both"
            ))),
        }
    }
}

impl fmt::Display for HierarchyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            HierarchyMode::Bound => "bound",
            HierarchyMode::Roof => "roof",
            HierarchyMode::Both => "both",
        };
        write!(f, "{name}")
    }
}

/// Options for [`physical_hierarchy`].
#[derive(Debug, Clone)]
pub struct HierarchyOptions {
    /// Search parameters for the convex-roof upper bounds.
    pub roof: RoofOptions,
    /// Hard cap on the total dimension passed to the concurrence bounds.
    pub max_total_dim: usize,
    /// Cap on the factor count (the ladder enumerates all subsets).
    pub max_factors: usize,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            roof: RoofOptions::default(),
            max_total_dim: DEFAULT_MAX_TOTAL_DIM,
            max_factors: DEFAULT_MAX_FACTORS,
        }
    }
}

/// Certified lower bound on the ensemble-minimal total subsystem entropy.
///
/// For each factor `s`, the squared per-class concurrence bounds of every
/// subsystem set containing `s` are pooled into one value `x`, which bounds
/// the factor entropy from below through `-log2(1 - x/2)`, clamped to
/// `[0, log2 d_s]`; the factor contributions add up. On pure inputs the
/// pooled value equals twice the marginal impurity of `s`, so the result
/// reproduces the exact entropy total.
pub fn p_lower(rho: &MultiState, max_total_dim: usize) -> Result<f64> {
    let n = rho.shape().factor_count();
    check_factor_cap(n, DEFAULT_MAX_FACTORS)?;
    let all = SubsystemSet::enumerate_all(n);
    let mut total = 0.0;
    for s in 1..=n {
        let mut pooled = 0.0;
        for set in all.iter().filter(|t| t.len() >= 2 && t.contains(s)) {
            pooled += class_lower_bounds(rho, set, s, max_total_dim)?
                .iter()
                .map(|b| b * b)
                .sum::<f64>();
        }
        let cap = (rho.shape().dim_of(s)? as f64).log2();
        let arg = 1.0 - 0.5 * pooled;
        total += if arg <= 0.0 {
            cap
        } else {
            (-arg.log2()).max(0.0).min(cap)
        };
    }
    Ok(total)
}

fn ladder(sets: &[SubsystemSet], p: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; sets.len()];
    for i in 0..sets.len() {
        let inner: f64 = (0..i)
            .filter(|&j| sets[j].is_strict_subset_of(&sets[i]))
            .map(|j| e[j])
            .sum();
        e[i] = (p[i] - inner).max(0.0);
    }
    e
}

/// Physical entanglement ladder over all factor subsets of size at least 2.
///
/// Each subset's reduced state is scored by `P`: a concurrence-derived
/// lower bound ([`Bound`](HierarchyMode::Bound)), a convex-roof upper bound
/// ([`Roof`](HierarchyMode::Roof)), or both. The ladder entry of a subset
/// is `max(0, P - sum of the entries of its strict subsets)`, assembled
/// independently per kind, so entanglement already attributed to a smaller
/// group is not counted again. Singletons carry no weight and are omitted.
/// The report total follows the upper ladder when it is computed and the
/// lower ladder otherwise; in `Both` mode the notes record both totals.
pub fn physical_hierarchy(
    rho: &MultiState,
    mode: HierarchyMode,
    options: &HierarchyOptions,
) -> Result<MeasureReport> {
    let n = rho.shape().factor_count();
    check_factor_cap(n, options.max_factors)?;
    let sets: Vec<SubsystemSet> = SubsystemSet::enumerate_all(n)
        .into_iter()
        .filter(|s| s.len() >= 2)
        .collect();
    let want_lower = mode != HierarchyMode::Roof;
    let want_upper = mode != HierarchyMode::Bound;

    let scored: Vec<(Option<f64>, Option<f64>)> = sets
        .par_iter()
        .map(|set| -> Result<(Option<f64>, Option<f64>)> {
            let reduced = partial_trace(rho, set)?;
            let lower = if want_lower {
                Some(p_lower(&reduced, options.max_total_dim)?)
            } else {
                None
            };
            let upper = if want_upper {
                Some(p_upper(&reduced, &options.roof)?.value)
            } else {
                None
            };
            Ok((lower, upper))
        })
        .collect::<Result<_>>()?;

    let lower_ladder = want_lower.then(|| {
        let p: Vec<f64> = scored.iter().map(|s| s.0.unwrap_or(0.0)).collect();
        ladder(&sets, &p)
    });
    let upper_ladder = want_upper.then(|| {
        let p: Vec<f64> = scored.iter().map(|s| s.1.unwrap_or(0.0)).collect();
        ladder(&sets, &p)
    });

    let mut subsets = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        if let Some(l) = &lower_ladder {
            subsets.push(SubsetMeasure {
                set: set.clone(),
                value: l[i],
                kind: MeasureKind::LowerBound,
            });
        }
        if let Some(u) = &upper_ladder {
            subsets.push(SubsetMeasure {
                set: set.clone(),
                value: u[i],
                kind: MeasureKind::UpperBound,
            });
        }
    }

    let lower_total = lower_ladder.as_ref().map(|l| l.iter().sum::<f64>());
    let upper_total = upper_ladder.as_ref().map(|u| u.iter().sum::<f64>());
    let mut notes = Vec::new();
    if mode == HierarchyMode::Both {
        notes.push(format!(
            "lower-bound ladder total {:.12}",
            lower_total.unwrap_or(0.0)
        ));
        notes.push(format!(
            "upper-bound ladder total {:.12}",
            upper_total.unwrap_or(0.0)
        ));
    }
    Ok(MeasureReport {
        subsets,
        total: upper_total.or(lower_total).unwrap_or(0.0),
        partition: None,
        notes,
    })
}

/// Verdict of a partial-transpose test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PptReport {
    /// Smallest eigenvalue of the partially transposed density matrix.
    pub min_eigenvalue: f64,
    /// True when the spectrum dips below the negativity threshold; a
    /// negative partial transpose certifies entanglement across the cut.
    pub is_npt: bool,
}

/// Transposes the state on the indicated factors and reports the minimum
/// eigenvalue together with the negativity verdict.
pub fn ppt_check(rho: &MultiState, part: &SubsystemSet) -> Result<PptReport> {
    let transposed = partial_transpose(rho, part)?;
    let min = min_eigenvalue(&transposed)?;
    Ok(PptReport {
        min_eigenvalue: min,
        is_npt: min < NPT_THRESHOLD,
    })
}

/// Direction vectors of the Smolin-family sign test.
const SMOLIN_DIRECTIONS: [[f64; 3]; 4] = [
    [-1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0],
];

/// Dual entanglement verdict for a Smolin-family state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmolinReport {
    /// Sign-test verdict: true when `max_i c · n_i` exceeds 1 over the four
    /// direction vectors.
    pub entangled: bool,
    /// Numeric concurrence lower bound over the full factor set.
    pub bound_value: f64,
}

/// Evaluates the Smolin-family sign test alongside the numeric full-set
/// concurrence bound.
///
/// The sign test compares `c` against the four fixed direction vectors;
/// the numeric path runs the spectral concurrence bound on the full factor
/// set of the constructed state. For two qubits the verdicts coincide on
/// every positive input; for `n` divisible by 4 the sign test never fires
/// inside the positivity region while the bound still can, so the two paths
/// genuinely disagree on part of the family.
pub fn smolin_closed_form(n: usize, c: [f64; 3]) -> Result<SmolinReport> {
    let state = smolin(n, c)?;
    let full = SubsystemSet::full(n)?;
    let bound = mixed_lower_bound(&state, &full, 1, &BoundOptions::default())?;
    let max_dot = SMOLIN_DIRECTIONS
        .iter()
        .map(|d| d[0] * c[0] + d[1] * c[1] + d[2] * c[2])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SmolinReport {
        entangled: max_dot > 1.0,
        bound_value: bound.value,
    })
}
