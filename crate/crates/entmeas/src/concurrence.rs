//! Flip-operator families over subsystem sets, exact pure-state
//! concurrences, the target-wise purity sum rule, and spectral lower bounds
//! for mixed states.
//!
//! For a subsystem set and a target factor inside it, the operator family
//! pairs every computational basis label with three flipped partners: all
//! set factors flipped, the target alone flipped, and the non-target set
//! factors flipped. Labels related by those flips produce the same
//! Hermitized operator up to sign, so the family splits into classes of
//! four labels each; enumeration visits one canonical representative per
//! class.

use num_complex::Complex64;
use serde::Serialize;

use crate::tensor::{
    factor_offsets, flip_conjugate_sqrt_eigs, kron_all, pure_single_marginal, ComplexMatrix,
    HilbertShape, MultiState, SubsystemSet,
};
use crate::tolerances::{DECOMPOSITION_IDENTITY_TOL, DEFAULT_MAX_TOTAL_DIM};
use crate::{entropy, Error, Result};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The symmetric flip `|k><l| + |l><k|` on a d-level factor.
pub fn flip_sigma(d: usize, k: usize, l: usize) -> Result<ComplexMatrix> {
    if k >= l || l >= d {
        return Err(Error::InvalidParameter(format!(
            "flip levels need 0 <= k < l < {d}, got k={k}, l={l}"
        )));
    }
    let mut m = ComplexMatrix::zeros(d, d);
    m.set(k, l, c(1.0, 0.0));
    m.set(l, k, c(1.0, 0.0));
    Ok(m)
}

/// One member of the flip-operator family: a subsystem set with a target
/// factor, one flip level pair per set factor, and the basis label the
/// operator is anchored at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipOperatorTerm {
    target: usize,
    index_set: SubsystemSet,
    level_pairs: Vec<(usize, usize)>,
    basis_label: Vec<usize>,
}

impl FlipOperatorTerm {
    /// Validates and builds a term; `level_pairs` is aligned with the sorted
    /// order of `index_set` and `basis_label` covers all factors of `shape`.
    pub fn new(
        shape: &HilbertShape,
        target: usize,
        index_set: SubsystemSet,
        level_pairs: Vec<(usize, usize)>,
        basis_label: Vec<usize>,
    ) -> Result<Self> {
        let term = Self {
            target,
            index_set,
            level_pairs,
            basis_label,
        };
        term.check_against(shape)?;
        Ok(term)
    }

    /// The 1-based target factor.
    pub fn target(&self) -> usize {
        self.target
    }

    /// The subsystem set the flips act on.
    pub fn index_set(&self) -> &SubsystemSet {
        &self.index_set
    }

    /// Flip level pairs, aligned with the sorted set indices.
    pub fn level_pairs(&self) -> &[(usize, usize)] {
        &self.level_pairs
    }

    /// The anchoring basis label over all factors.
    pub fn basis_label(&self) -> &[usize] {
        &self.basis_label
    }

    fn check_against(&self, shape: &HilbertShape) -> Result<()> {
        self.index_set.check_within(shape)?;
        if !self.index_set.contains(self.target) {
            return Err(Error::InvalidSubsystemSet(format!(
                "target {} is not a member of {}",
                self.target, self.index_set
            )));
        }
        if self.level_pairs.len() != self.index_set.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} level pairs for a set of {} factors",
                self.level_pairs.len(),
                self.index_set.len()
            )));
        }
        for (&factor, &(k, l)) in self.index_set.indices().iter().zip(&self.level_pairs) {
            let d = shape.dim_of(factor)?;
            if k >= l || l >= d {
                return Err(Error::InvalidParameter(format!(
                    "level pair ({k},{l}) is not ordered within dimension {d} of factor {factor}"
                )));
            }
        }
        if self.basis_label.len() != shape.factor_count() {
            return Err(Error::DimensionMismatch(format!(
                "basis label has {} digits for {} factors",
                self.basis_label.len(),
                shape.factor_count()
            )));
        }
        for (&digit, &d) in self.basis_label.iter().zip(shape.dims()) {
            if digit >= d {
                return Err(Error::IndexOutOfRange {
                    index: digit,
                    factors: d,
                });
            }
        }
        Ok(())
    }
}

/// Builds the operator `A P - B P A B` for one term, where `P` projects on
/// the term's basis label, `A` flips every set factor, and `B` flips the
/// target factor alone (identity on all other factors).
pub fn build_o_c(term: &FlipOperatorTerm, shape: &HilbertShape) -> Result<ComplexMatrix> {
    term.check_against(shape)?;
    let n = shape.factor_count();
    let mut a_factors = Vec::with_capacity(n);
    let mut b_factors = Vec::with_capacity(n);
    for factor in 1..=n {
        let d = shape.dim_of(factor)?;
        let a = match term.index_set.indices().iter().position(|&f| f == factor) {
            Some(pos) => {
                let (k, l) = term.level_pairs[pos];
                flip_sigma(d, k, l)?
            }
            None => ComplexMatrix::identity(d),
        };
        let b = if factor == term.target {
            a.clone()
        } else {
            ComplexMatrix::identity(d)
        };
        a_factors.push(a);
        b_factors.push(b);
    }
    let a = kron_all(&a_factors);
    let b = kron_all(&b_factors);
    let mut anchor = vec![c(0.0, 0.0); shape.total()];
    anchor[shape.flat_index(&term.basis_label)] = c(1.0, 0.0);
    let p = ComplexMatrix::outer(&anchor, &anchor);
    let first = a.mul(&p)?;
    let second = b.mul(&p)?.mul(&a)?.mul(&b)?;
    first.sub(&second)
}

/// How a concurrence value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcurrenceKind {
    /// Evaluated exactly from a state vector.
    ExactPure,
    /// Spectral lower bound evaluated on a density matrix.
    LowerBound,
}

/// A concurrence associated with one subsystem set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcurrenceValue {
    /// The subsystem set the value belongs to.
    pub index_set: SubsystemSet,
    /// Nonnegative concurrence or bound.
    pub value: f64,
    /// Exact value or lower bound.
    pub kind: ConcurrenceKind,
}

/// One canonical class of four mutually flipped basis labels, stored as
/// flat indices: the representative, all set factors flipped, the target
/// flipped, and the non-target set factors flipped.
struct FlipClass {
    rep: usize,
    all_flipped: usize,
    target_flipped: usize,
    rest_flipped: usize,
}

fn validate_set_target(
    shape: &HilbertShape,
    index_set: &SubsystemSet,
    target: usize,
) -> Result<()> {
    index_set.check_within(shape)?;
    if !index_set.contains(target) {
        return Err(Error::InvalidSubsystemSet(format!(
            "target {target} is not a member of {index_set}"
        )));
    }
    if index_set.len() < 2 {
        return Err(Error::InvalidSubsystemSet(format!(
            "concurrences need sets of at least two factors, got {index_set}"
        )));
    }
    Ok(())
}

/// Enumerates one representative per class: the representative anchors the
/// target and the first non-target set factor at the lower flip level, the
/// remaining set factors range over both levels, and outside factors range
/// over their full dimension.
fn enumerate_classes(
    shape: &HilbertShape,
    index_set: &SubsystemSet,
    target: usize,
) -> Vec<FlipClass> {
    let strides = shape.strides();
    let dims = shape.dims();
    let set0: Vec<usize> = index_set.indices().iter().map(|&f| f - 1).collect();
    let target0 = target - 1;
    let others: Vec<usize> = set0.iter().copied().filter(|&f| f != target0).collect();
    let free = &others[1..];

    let outside: Vec<usize> = (0..shape.factor_count())
        .filter(|f| !set0.contains(f))
        .collect();
    let outside_offsets = factor_offsets(shape, &outside);

    let pairs_per_factor: Vec<Vec<(usize, usize)>> = set0
        .iter()
        .map(|&f| {
            let d = dims[f];
            let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
            for k in 0..d {
                for l in k + 1..d {
                    pairs.push((k, l));
                }
            }
            pairs
        })
        .collect();

    let assignments: usize = pairs_per_factor.iter().map(Vec::len).product();
    let mut classes =
        Vec::with_capacity(assignments * outside_offsets.len() * (1usize << free.len()));
    let mut pair_index = vec![0usize; set0.len()];
    for _ in 0..assignments {
        let pair_of = |factor0: usize| -> (usize, usize) {
            let pos = set0.iter().position(|&f| f == factor0).unwrap();
            pairs_per_factor[pos][pair_index[pos]]
        };
        let (k_t, l_t) = pair_of(target0);
        let target_jump = (l_t - k_t) * strides[target0];
        for &outside_offset in &outside_offsets {
            for bits in 0..(1usize << free.len()) {
                let mut rep_in = k_t * strides[target0];
                let mut flip_in = l_t * strides[target0];
                for (pos, &f) in others.iter().enumerate() {
                    let (k, l) = pair_of(f);
                    let flipped_bit = pos > 0 && (bits >> (pos - 1)) & 1 == 1;
                    let (digit, partner) = if flipped_bit { (l, k) } else { (k, l) };
                    rep_in += digit * strides[f];
                    flip_in += partner * strides[f];
                }
                classes.push(FlipClass {
                    rep: outside_offset + rep_in,
                    all_flipped: outside_offset + flip_in,
                    target_flipped: outside_offset + rep_in + target_jump,
                    rest_flipped: outside_offset + flip_in - target_jump,
                });
            }
        }
        for pos in (0..pair_index.len()).rev() {
            pair_index[pos] += 1;
            if pair_index[pos] < pairs_per_factor[pos].len() {
                break;
            }
            pair_index[pos] = 0;
        }
    }
    classes
}

fn pure_squared_sum(amps: &[Complex64], classes: &[FlipClass]) -> f64 {
    classes
        .iter()
        .map(|cl| {
            let z = amps[cl.all_flipped] * amps[cl.rep]
                - amps[cl.target_flipped] * amps[cl.rest_flipped];
            4.0 * z.norm_sqr()
        })
        .sum()
}

/// Exact concurrence of a pure state for one subsystem set and target: the
/// square root of the squared matrix elements summed over every flip level
/// pair and basis label.
pub fn pure_m_concurrence(
    psi: &MultiState,
    index_set: &SubsystemSet,
    target: usize,
) -> Result<ConcurrenceValue> {
    let amps = psi.amplitudes().ok_or_else(|| {
        Error::PureStateRequired("exact concurrences are defined on state vectors".into())
    })?;
    validate_set_target(psi.shape(), index_set, target)?;
    let classes = enumerate_classes(psi.shape(), index_set, target);
    Ok(ConcurrenceValue {
        index_set: index_set.clone(),
        value: pure_squared_sum(amps, &classes).sqrt(),
        kind: ConcurrenceKind::ExactPure,
    })
}

/// All squared concurrences of a pure state with a fixed target, together
/// with the certified sum rule against the target's marginal purity.
#[derive(Debug, Clone)]
pub struct EntropyDecomposition {
    /// The 1-based target factor.
    pub target: usize,
    /// Squared concurrence per subsystem set containing the target, in
    /// size-then-lexicographic order.
    pub terms: Vec<(SubsystemSet, f64)>,
    /// Sum of all squared concurrences.
    pub total: f64,
    /// Twice the marginal impurity `2 (1 - Tr rho_s^2)` of the target.
    pub expected: f64,
    /// Absolute deviation between `total` and `expected`.
    pub residual: f64,
}

/// Computes every squared concurrence with the given target and certifies
/// that they sum to twice the target's marginal impurity; a violation
/// signals an enumeration bug and is reported as an error.
pub fn entropy_decomposition(psi: &MultiState, target: usize) -> Result<EntropyDecomposition> {
    let amps = psi.amplitudes().ok_or_else(|| {
        Error::PureStateRequired("the concurrence sum rule is defined on state vectors".into())
    })?;
    let shape = psi.shape();
    if target == 0 || target > shape.factor_count() {
        return Err(Error::IndexOutOfRange {
            index: target,
            factors: shape.factor_count(),
        });
    }
    let mut terms = Vec::new();
    let mut total = 0.0;
    for set in SubsystemSet::enumerate_all(shape.factor_count()) {
        if set.len() < 2 || !set.contains(target) {
            continue;
        }
        let classes = enumerate_classes(shape, &set, target);
        let c2 = pure_squared_sum(amps, &classes);
        total += c2;
        terms.push((set, c2));
    }
    let marginal = pure_single_marginal(amps, shape, target);
    let expected = 2.0 * (1.0 - entropy::purity_of_matrix(&marginal));
    let residual = (total - expected).abs();
    if residual > DECOMPOSITION_IDENTITY_TOL {
        return Err(Error::IdentityViolation { residual });
    }
    Ok(EntropyDecomposition {
        target,
        terms,
        total,
        expected,
        residual,
    })
}

/// Conjugates the elementwise-conjugated density matrix by a Hermitized
/// flip: `X rho* X`.
pub fn flipped_density(rho: &MultiState, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dense = rho.density_matrix();
    x.mul(&dense.conj())?.mul(x)
}

/// Accumulation rule combining the per-class spectral bounds into one
/// value per subsystem set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BoundCombination {
    /// Square root of the sum of squared per-class bounds (each floored at
    /// zero first). Exact on pure inputs and on two-qubit inputs, convex in
    /// the state, hence a certified lower bound. Default.
    #[default]
    Norm,
    /// Plain sum of per-class bounds, each floored at zero. Exceeds the
    /// exact pure value whenever more than one class is active.
    PerTermFloorSum,
    /// Plain sum of unfloored per-class terms, flooring only the total.
    /// Exceeds the exact pure value whenever more than one class is active.
    GrandTotalSum,
}

/// Options for the mixed-state bound evaluation.
#[derive(Debug, Clone)]
pub struct BoundOptions {
    /// Accumulation rule across classes.
    pub combination: BoundCombination,
    /// Hard cap on the total dimension, guarding runaway enumerations.
    pub max_total_dim: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            combination: BoundCombination::Norm,
            max_total_dim: DEFAULT_MAX_TOTAL_DIM,
        }
    }
}

/// Spectral values of one class: the descending square roots of the
/// eigenvalues of `rho rho~`, where `rho~` conjugates `rho*` by the class's
/// Hermitized flip. Both matrices are supported on the class's four labels,
/// so the spectrum is computed on that 4x4 block.
fn class_spectrum(rho: &ComplexMatrix, class: &FlipClass) -> Result<[f64; 4]> {
    let support = [
        class.rep,
        class.all_flipped,
        class.target_flipped,
        class.rest_flipped,
    ];
    let rho_block = ComplexMatrix::from_fn(4, 4, |p, q| rho.get(support[p], support[q]));
    let mut flip = ComplexMatrix::zeros(4, 4);
    flip.set(0, 1, c(1.0, 0.0));
    flip.set(1, 0, c(1.0, 0.0));
    flip.set(2, 3, c(-1.0, 0.0));
    flip.set(3, 2, c(-1.0, 0.0));
    let values = flip_conjugate_sqrt_eigs(&rho_block, &flip)?;
    let mut out = [0.0; 4];
    for (slot, &v) in out.iter_mut().zip(&values) {
        *slot = v;
    }
    Ok(out)
}

fn raw_class_bounds(
    rho: &MultiState,
    index_set: &SubsystemSet,
    target: usize,
    max_total_dim: usize,
) -> Result<Vec<f64>> {
    validate_set_target(rho.shape(), index_set, target)?;
    let total = rho.shape().total();
    if total > max_total_dim {
        return Err(Error::DimensionCap {
            total,
            cap: max_total_dim,
        });
    }
    let classes = enumerate_classes(rho.shape(), index_set, target);
    if let Some(amps) = rho.amplitudes() {
        return Ok(classes
            .iter()
            .map(|cl| {
                let z = amps[cl.all_flipped] * amps[cl.rep]
                    - amps[cl.target_flipped] * amps[cl.rest_flipped];
                2.0 * z.norm()
            })
            .collect());
    }
    let dense = rho.density_matrix();
    classes
        .iter()
        .map(|cl| {
            let lambda = class_spectrum(&dense, cl)?;
            Ok(2.0 * lambda[0] - lambda.iter().sum::<f64>())
        })
        .collect()
}

/// Per-class lower bounds `max{0, 2 max(lambda) - sum(lambda)}` for one
/// subsystem set and target, in class enumeration order. Pure inputs use
/// the exact amplitude form of the same quantity, which the spectrum
/// reduces to on rank-one states.
pub fn class_lower_bounds(
    rho: &MultiState,
    index_set: &SubsystemSet,
    target: usize,
    max_total_dim: usize,
) -> Result<Vec<f64>> {
    Ok(raw_class_bounds(rho, index_set, target, max_total_dim)?
        .into_iter()
        .map(|g| g.max(0.0))
        .collect())
}

/// Lower bound on the concurrence of a mixed state for one subsystem set
/// and target, combining the per-class spectral bounds according to the
/// configured rule.
pub fn mixed_lower_bound(
    rho: &MultiState,
    index_set: &SubsystemSet,
    target: usize,
    options: &BoundOptions,
) -> Result<ConcurrenceValue> {
    let raw = raw_class_bounds(rho, index_set, target, options.max_total_dim)?;
    let value = match options.combination {
        BoundCombination::Norm => raw.iter().map(|g| g.max(0.0).powi(2)).sum::<f64>().sqrt(),
        BoundCombination::PerTermFloorSum => raw.iter().map(|g| g.max(0.0)).sum(),
        BoundCombination::GrandTotalSum => raw.iter().sum::<f64>().max(0.0),
    };
    Ok(ConcurrenceValue {
        index_set: index_set.clone(),
        value,
        kind: ConcurrenceKind::LowerBound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{
        bell_phi_plus, generalized_bell, ghz, random_density, random_pure, w_state,
    };
    use crate::tensor::{hermitian_eig, sqrt_eigs_rho_rhotilde};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn qubit_state(n: usize, entries: &[(usize, f64)]) -> MultiState {
        let shape = HilbertShape::qubits(n).unwrap();
        let mut amps = vec![c(0.0, 0.0); shape.total()];
        for &(idx, re) in entries {
            amps[idx] = c(re, 0.0);
        }
        MultiState::pure(shape, amps).unwrap()
    }

    fn sigma_y_sigma_y() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m.set(0, 3, c(-1.0, 0.0));
        m.set(1, 2, c(1.0, 0.0));
        m.set(2, 1, c(1.0, 0.0));
        m.set(3, 0, c(-1.0, 0.0));
        m
    }

    fn werner(p: f64) -> MultiState {
        let inv = 1.0 / 2f64.sqrt();
        let singlet = qubit_state(2, &[(1, inv), (2, -inv)]);
        let proj = singlet.density_matrix().scale(c(p, 0.0));
        let flat = ComplexMatrix::identity(4).scale(c((1.0 - p) / 4.0, 0.0));
        MultiState::density(HilbertShape::qubits(2).unwrap(), proj.add(&flat).unwrap()).unwrap()
    }

    fn wootters_two_qubit(rho: &MultiState) -> f64 {
        let flip = sigma_y_sigma_y();
        let (mu, v) = hermitian_eig(&rho.density_matrix()).unwrap();
        let rank = mu.iter().filter(|&&m| m > 1e-13).count();
        let mut tau = ComplexMatrix::zeros(rank, rank);
        for i in 0..rank {
            for j in 0..rank {
                let mut overlap = c(0.0, 0.0);
                for p in 0..4 {
                    for q in 0..4 {
                        overlap += v.get(p, i) * flip.get(p, q) * v.get(q, j);
                    }
                }
                tau.set(i, j, overlap * (mu[i] * mu[j]).sqrt());
            }
        }
        let mut block = ComplexMatrix::zeros(2 * rank, 2 * rank);
        for i in 0..rank {
            for j in 0..rank {
                block.set(i, rank + j, tau.get(i, j));
                block.set(rank + j, i, tau.get(i, j).conj());
            }
        }
        let (signed, _) = hermitian_eig(&block).unwrap();
        let lambda = &signed[..rank];
        (2.0 * lambda[0] - lambda.iter().sum::<f64>()).max(0.0)
    }

    fn random_unitary(d: usize, rng: &mut ChaCha12Rng) -> ComplexMatrix {
        use rand_distr::{Distribution, StandardNormal};
        let mut columns: Vec<Vec<Complex64>> = (0..d)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        c(re, im)
                    })
                    .collect()
            })
            .collect();
        for i in 0..d {
            for j in 0..i {
                let overlap: Complex64 = columns[j]
                    .iter()
                    .zip(&columns[i])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let prev = columns[j].clone();
                for (x, p) in columns[i].iter_mut().zip(prev) {
                    *x -= overlap * p;
                }
            }
            let norm: f64 = columns[i].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for x in columns[i].iter_mut() {
                *x /= norm;
            }
        }
        ComplexMatrix::from_fn(d, d, |r, cidx| columns[cidx][r])
    }

    fn apply_single_factor(state: &MultiState, factor: usize, u: &ComplexMatrix) -> MultiState {
        let factors: Vec<ComplexMatrix> = (1..=state.shape().factor_count())
            .map(|f| {
                if f == factor {
                    u.clone()
                } else {
                    ComplexMatrix::identity(state.shape().dim_of(f).unwrap())
                }
            })
            .collect();
        let full = kron_all(&factors);
        let amps = full.apply(state.amplitudes().unwrap()).unwrap();
        MultiState::pure(state.shape().clone(), amps).unwrap()
    }

    #[test]
    fn flip_sigma_matches_its_defining_matrix_elements() {
        let sx = flip_sigma(2, 0, 1).unwrap();
        assert_eq!(sx.get(0, 1), c(1.0, 0.0));
        assert_eq!(sx.get(1, 0), c(1.0, 0.0));
        assert_eq!(sx.get(0, 0), c(0.0, 0.0));

        let f02 = flip_sigma(3, 0, 2).unwrap();
        assert_eq!(f02.get(0, 2), c(1.0, 0.0));
        assert_eq!(f02.get(2, 0), c(1.0, 0.0));
        assert_eq!(f02.get(1, 1), c(0.0, 0.0));

        let qutrit_flips = [(0, 1), (0, 2), (1, 2)];
        for &(k, l) in &qutrit_flips {
            assert!(flip_sigma(3, k, l).is_ok());
        }
        assert!(flip_sigma(3, 1, 1).is_err());
        assert!(flip_sigma(3, 0, 3).is_err());
        assert!(flip_sigma(2, 1, 0).is_err());
    }

    #[test]
    fn term_construction_enforces_membership_and_ordering() {
        let shape = HilbertShape::qubits(2).unwrap();
        let set = SubsystemSet::new(vec![1, 2]).unwrap();
        assert!(
            FlipOperatorTerm::new(&shape, 1, set.clone(), vec![(0, 1), (0, 1)], vec![0, 0]).is_ok()
        );
        assert!(
            FlipOperatorTerm::new(&shape, 3, set.clone(), vec![(0, 1), (0, 1)], vec![0, 0])
                .is_err()
        );
        assert!(FlipOperatorTerm::new(&shape, 1, set.clone(), vec![(0, 1)], vec![0, 0]).is_err());
        assert!(
            FlipOperatorTerm::new(&shape, 1, set.clone(), vec![(1, 1), (0, 1)], vec![0, 0])
                .is_err()
        );
        assert!(FlipOperatorTerm::new(&shape, 1, set, vec![(0, 1), (0, 1)], vec![0, 2]).is_err());
    }

    #[test]
    fn two_qubit_operator_expands_symbolically() {
        let shape = HilbertShape::qubits(2).unwrap();
        let set = SubsystemSet::new(vec![1, 2]).unwrap();
        let term = FlipOperatorTerm::new(&shape, 1, set.clone(), vec![(0, 1), (0, 1)], vec![0, 0])
            .unwrap();
        let o = build_o_c(&term, &shape).unwrap();
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected.set(3, 0, c(1.0, 0.0));
        expected.set(2, 1, c(-1.0, 0.0));
        assert!(o.max_abs_diff(&expected) < 1e-15);

        let shifted =
            FlipOperatorTerm::new(&shape, 1, set, vec![(0, 1), (0, 1)], vec![0, 1]).unwrap();
        let o_shifted = build_o_c(&shifted, &shape).unwrap();
        assert!(o_shifted.max_abs_diff(&o.scale(c(-1.0, 0.0))) < 1e-15);

        let hermitized = o.add(&o.dagger()).unwrap();
        assert!(hermitized.max_abs_diff(&sigma_y_sigma_y().scale(c(-1.0, 0.0))) < 1e-15);
    }

    #[test]
    fn singleton_sets_are_rejected_for_values_and_degenerate_for_operators() {
        let shape = HilbertShape::qubits(2).unwrap();
        let single = SubsystemSet::singleton(1).unwrap();
        let term =
            FlipOperatorTerm::new(&shape, 1, single.clone(), vec![(0, 1)], vec![0, 0]).unwrap();
        let o = build_o_c(&term, &shape).unwrap();
        assert!(o.max_abs_diff(&ComplexMatrix::zeros(4, 4)) < 1e-15);

        let bell = bell_phi_plus(2).unwrap();
        assert!(pure_m_concurrence(&bell, &single, 1).is_err());
        assert!(mixed_lower_bound(&bell, &single, 1, &BoundOptions::default()).is_err());
    }

    #[test]
    fn pure_values_match_the_dense_operator_definition() {
        let shapes = [vec![2usize, 2], vec![2, 2, 2], vec![3, 2]];
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        for dims in shapes {
            let shape = HilbertShape::new(dims).unwrap();
            let psi = random_pure(&shape, &mut rng);
            let amps = psi.amplitudes().unwrap();
            let conj_amps: Vec<Complex64> = amps.iter().map(|a| a.conj()).collect();
            let n = shape.factor_count();
            for set in SubsystemSet::enumerate_all(n) {
                if set.len() < 2 {
                    continue;
                }
                for &target in set.indices() {
                    let mut pair_lists: Vec<Vec<(usize, usize)>> = Vec::new();
                    for &f in set.indices() {
                        let d = shape.dim_of(f).unwrap();
                        let mut pairs = Vec::new();
                        for k in 0..d {
                            for l in k + 1..d {
                                pairs.push((k, l));
                            }
                        }
                        pair_lists.push(pairs);
                    }
                    let mut assignment = vec![0usize; pair_lists.len()];
                    let count: usize = pair_lists.iter().map(Vec::len).product();
                    let mut dense_sum = 0.0;
                    for _ in 0..count {
                        let pairs: Vec<(usize, usize)> = assignment
                            .iter()
                            .zip(&pair_lists)
                            .map(|(&i, list)| list[i])
                            .collect();
                        for flat in 0..shape.total() {
                            let label = shape.label_of(flat);
                            let term = FlipOperatorTerm::new(
                                &shape,
                                target,
                                set.clone(),
                                pairs.clone(),
                                label,
                            )
                            .unwrap();
                            let o = build_o_c(&term, &shape).unwrap();
                            let applied = o.apply(&conj_amps).unwrap();
                            let z: Complex64 =
                                amps.iter().zip(&applied).map(|(a, b)| a.conj() * b).sum();
                            dense_sum += z.norm_sqr();
                        }
                        for pos in (0..assignment.len()).rev() {
                            assignment[pos] += 1;
                            if assignment[pos] < pair_lists[pos].len() {
                                break;
                            }
                            assignment[pos] = 0;
                        }
                    }
                    let fast = pure_m_concurrence(&psi, &set, target).unwrap();
                    assert!(
                        (fast.value.powi(2) - dense_sum).abs() < 1e-10,
                        "set {set} target {target}: fast {} vs dense {}",
                        fast.value.powi(2),
                        dense_sum
                    );
                }
            }
        }
    }

    #[test]
    fn reference_pure_states_have_their_known_concurrences() {
        let bell = bell_phi_plus(2).unwrap();
        let pair = SubsystemSet::new(vec![1, 2]).unwrap();
        let value = pure_m_concurrence(&bell, &pair, 1).unwrap().value;
        assert!((value - 1.0).abs() < 1e-12);

        let qutrit_bell = generalized_bell(3, 0, 0).unwrap();
        let value = pure_m_concurrence(&qutrit_bell, &pair, 1).unwrap().value;
        assert!((value.powi(2) - 4.0 / 3.0).abs() < 1e-12);

        let ghz3 = ghz(3, 2).unwrap();
        let triple = SubsystemSet::new(vec![1, 2, 3]).unwrap();
        assert!((pure_m_concurrence(&ghz3, &triple, 1).unwrap().value - 1.0).abs() < 1e-12);
        for other in [vec![1, 2], vec![1, 3]] {
            let set = SubsystemSet::new(other).unwrap();
            assert!(pure_m_concurrence(&ghz3, &set, 1).unwrap().value < 1e-12);
        }

        let w3 = w_state(3).unwrap();
        for other in [vec![1, 2], vec![1, 3]] {
            let set = SubsystemSet::new(other).unwrap();
            let value = pure_m_concurrence(&w3, &set, 1).unwrap().value;
            assert!((value - 2.0 / 3.0).abs() < 1e-12);
        }
        assert!(pure_m_concurrence(&w3, &triple, 1).unwrap().value < 1e-12);

        let product = qubit_state(3, &[(2, 0.5), (3, 0.5), (6, 0.5), (7, 0.5)]);
        for set in SubsystemSet::enumerate_all(3) {
            if set.len() < 2 {
                continue;
            }
            for &target in set.indices() {
                assert!(pure_m_concurrence(&product, &set, target).unwrap().value < 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_certifies_the_sum_rule_on_reference_states() {
        let ghz3 = ghz(3, 2).unwrap();
        let decomposition = entropy_decomposition(&ghz3, 1).unwrap();
        assert!((decomposition.total - 1.0).abs() < 1e-12);
        assert!((decomposition.expected - 1.0).abs() < 1e-12);
        let sets: Vec<String> = decomposition
            .terms
            .iter()
            .map(|(s, _)| s.to_string())
            .collect();
        assert_eq!(sets, vec!["{1,2}", "{1,3}", "{1,2,3}"]);

        let w3 = w_state(3).unwrap();
        let decomposition = entropy_decomposition(&w3, 1).unwrap();
        assert!((decomposition.total - 8.0 / 9.0).abs() < 1e-12);
        assert!((decomposition.terms[0].1 - 4.0 / 9.0).abs() < 1e-12);
        assert!((decomposition.terms[1].1 - 4.0 / 9.0).abs() < 1e-12);
        assert!(decomposition.terms[2].1 < 1e-12);
    }

    #[test]
    fn decomposition_splits_bell_times_plus_by_basis_coherences() {
        let inv = 1.0 / 2.0;
        let state = qubit_state(3, &[(0, inv), (1, inv), (6, inv), (7, inv)]);
        let decomposition = entropy_decomposition(&state, 1).unwrap();
        assert!((decomposition.terms[0].1 - 0.5).abs() < 1e-12);
        assert!(decomposition.terms[1].1 < 1e-12);
        assert!((decomposition.terms[2].1 - 0.5).abs() < 1e-12);
        assert!((decomposition.total - 1.0).abs() < 1e-12);

        let from_third = entropy_decomposition(&state, 3).unwrap();
        assert!(from_third.total < 1e-12);
    }

    #[test]
    fn decomposition_holds_on_random_states_of_mixed_local_dimensions() {
        let shapes = [vec![2usize, 2], vec![2, 2, 2], vec![3, 3], vec![3, 2, 2]];
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for dims in shapes {
            let shape = HilbertShape::new(dims).unwrap();
            for _ in 0..25 {
                let psi = random_pure(&shape, &mut rng);
                for target in 1..=shape.factor_count() {
                    let decomposition = entropy_decomposition(&psi, target).unwrap();
                    assert!(decomposition.residual < DECOMPOSITION_IDENTITY_TOL);
                }
            }
        }
    }

    #[test]
    fn per_target_totals_are_unchanged_by_local_unitaries() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for dims in [vec![2usize, 2, 2], vec![3, 2]] {
            let shape = HilbertShape::new(dims).unwrap();
            let psi = random_pure(&shape, &mut rng);
            for factor in 1..=shape.factor_count() {
                let u = random_unitary(shape.dim_of(factor).unwrap(), &mut rng);
                let rotated = apply_single_factor(&psi, factor, &u);
                for target in 1..=shape.factor_count() {
                    let before = entropy_decomposition(&psi, target).unwrap().total;
                    let after = entropy_decomposition(&rotated, target).unwrap().total;
                    assert!(
                        (before - after).abs() < 1e-9,
                        "total for target {target} drifted under a unitary on factor {factor}"
                    );
                }
            }
        }
    }

    #[test]
    fn two_qubit_concurrence_is_invariant_under_local_unitaries() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let shape = HilbertShape::qubits(2).unwrap();
        let pair = SubsystemSet::new(vec![1, 2]).unwrap();
        for _ in 0..20 {
            let psi = random_pure(&shape, &mut rng);
            let base = pure_m_concurrence(&psi, &pair, 1).unwrap().value;
            for factor in 1..=2 {
                let u = random_unitary(2, &mut rng);
                let rotated = apply_single_factor(&psi, factor, &u);
                let value = pure_m_concurrence(&rotated, &pair, 1).unwrap().value;
                assert!((value - base).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flipped_density_matches_its_reference_points() {
        let x = sigma_y_sigma_y();
        let flat = MultiState::density(
            HilbertShape::qubits(2).unwrap(),
            ComplexMatrix::identity(4).scale(c(0.25, 0.0)),
        )
        .unwrap();
        let tilde = flipped_density(&flat, &x).unwrap();
        assert!(tilde.max_abs_diff(&ComplexMatrix::identity(4).scale(c(0.25, 0.0))) < 1e-15);

        let bell = bell_phi_plus(2).unwrap();
        let tilde = flipped_density(&bell, &x).unwrap();
        assert!(tilde.max_abs_diff(&bell.density_matrix()) < 1e-14);
        assert!((tilde.trace() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn class_spectra_match_the_dense_spectral_path() {
        let mut rng = ChaCha12Rng::seed_from_u64(64);
        for dims in [vec![2usize, 2], vec![2, 2, 2]] {
            let shape = HilbertShape::new(dims).unwrap();
            let rho = random_density(&shape, 3, &mut rng);
            let dense = rho.density_matrix();
            for set in SubsystemSet::enumerate_all(shape.factor_count()) {
                if set.len() < 2 {
                    continue;
                }
                let target = set.indices()[0];
                for class in enumerate_classes(&shape, &set, target) {
                    let fast = class_spectrum(&dense, &class).unwrap();
                    let mut x = ComplexMatrix::zeros(shape.total(), shape.total());
                    x.set(class.all_flipped, class.rep, c(1.0, 0.0));
                    x.set(class.rep, class.all_flipped, c(1.0, 0.0));
                    x.set(class.target_flipped, class.rest_flipped, c(-1.0, 0.0));
                    x.set(class.rest_flipped, class.target_flipped, c(-1.0, 0.0));
                    let tilde = x.mul(&dense.conj()).unwrap().mul(&x).unwrap();
                    let reference = sqrt_eigs_rho_rhotilde(&dense, &tilde).unwrap();
                    for (i, &fast_value) in fast.iter().enumerate() {
                        assert!(
                            (fast_value.powi(2) - reference[i].powi(2)).abs() < 1e-10,
                            "lambda_{i} mismatch: {fast_value} vs {}",
                            reference[i]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn werner_bound_follows_the_closed_form() {
        for p in [0.0, 0.2, 1.0 / 3.0, 0.4, 0.7, 0.9, 1.0] {
            let rho = werner(p);
            let expected = (0.0f64).max((3.0 * p - 1.0) / 2.0);
            let pair = SubsystemSet::new(vec![1, 2]).unwrap();
            for combination in [
                BoundCombination::Norm,
                BoundCombination::PerTermFloorSum,
                BoundCombination::GrandTotalSum,
            ] {
                let options = BoundOptions {
                    combination,
                    ..BoundOptions::default()
                };
                let bound = mixed_lower_bound(&rho, &pair, 1, &options).unwrap();
                assert!(
                    (bound.value - expected).abs() < 1e-10,
                    "p={p}: bound {} vs closed form {expected}",
                    bound.value
                );
            }
        }
    }

    #[test]
    fn two_qubit_bound_equals_the_independent_wootters_oracle() {
        let shape = HilbertShape::qubits(2).unwrap();
        let pair = SubsystemSet::new(vec![1, 2]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let options = BoundOptions::default();
        for trial in 0..300 {
            let rank = 2 + trial % 3;
            let rho = random_density(&shape, rank, &mut rng);
            let bound = mixed_lower_bound(&rho, &pair, 1, &options).unwrap();
            let oracle = wootters_two_qubit(&rho);
            assert!(
                (bound.value - oracle).abs() < 1e-8,
                "trial {trial}: bound {} vs oracle {oracle}",
                bound.value
            );
        }
    }

    #[test]
    fn norm_combination_is_exact_on_pure_inputs() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let options = BoundOptions::default();
        for dims in [vec![2usize, 2], vec![2, 2, 2], vec![3, 2]] {
            let shape = HilbertShape::new(dims).unwrap();
            for _ in 0..10 {
                let psi = random_pure(&shape, &mut rng);
                let projector = MultiState::density(shape.clone(), psi.density_matrix()).unwrap();
                for set in SubsystemSet::enumerate_all(shape.factor_count()) {
                    if set.len() < 2 {
                        continue;
                    }
                    for &target in set.indices() {
                        let exact = pure_m_concurrence(&psi, &set, target).unwrap().value;
                        let bound = mixed_lower_bound(&projector, &set, target, &options)
                            .unwrap()
                            .value;
                        assert!(
                            (bound - exact).abs() < 1e-8,
                            "set {set} target {target}: bound {bound} vs exact {exact}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn additive_combinations_overshoot_on_the_qutrit_pair() {
        let qutrit_bell = generalized_bell(3, 0, 0).unwrap();
        let projector =
            MultiState::density(qutrit_bell.shape().clone(), qutrit_bell.density_matrix()).unwrap();
        let pair = SubsystemSet::new(vec![1, 2]).unwrap();
        let exact = (4.0f64 / 3.0).sqrt();

        let norm = mixed_lower_bound(&projector, &pair, 1, &BoundOptions::default())
            .unwrap()
            .value;
        assert!((norm - exact).abs() < 1e-9);

        for combination in [
            BoundCombination::PerTermFloorSum,
            BoundCombination::GrandTotalSum,
        ] {
            let options = BoundOptions {
                combination,
                ..BoundOptions::default()
            };
            let additive = mixed_lower_bound(&projector, &pair, 1, &options)
                .unwrap()
                .value;
            assert!(
                (additive - 2.0).abs() < 1e-9,
                "additive rule gives {additive}, expected 2 from three classes of 2/3"
            );
            assert!(additive > exact + 0.5);
        }
    }

    #[test]
    fn class_counts_follow_the_product_formula() {
        let cases: [(Vec<usize>, Vec<usize>, usize); 5] = [
            (vec![2, 2], vec![1, 2], 1),
            (vec![2, 2, 2], vec![1, 2], 2),
            (vec![2, 2, 2], vec![1, 2, 3], 2),
            (vec![3, 3], vec![1, 2], 9),
            (vec![3, 2, 2], vec![1, 2], 6),
        ];
        for (dims, set, expected) in cases {
            let shape = HilbertShape::new(dims).unwrap();
            let set = SubsystemSet::new(set).unwrap();
            let classes = enumerate_classes(&shape, &set, set.indices()[0]);
            assert_eq!(classes.len(), expected, "set {set}");
        }
    }

    #[test]
    fn dimension_cap_guards_the_mixed_path() {
        let rho = werner(0.5);
        let pair = SubsystemSet::new(vec![1, 2]).unwrap();
        let options = BoundOptions {
            max_total_dim: 2,
            ..BoundOptions::default()
        };
        assert!(matches!(
            mixed_lower_bound(&rho, &pair, 1, &options),
            Err(Error::DimensionCap { total: 4, cap: 2 })
        ));
    }

    #[test]
    fn bound_is_convex_under_mixing() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let shape = HilbertShape::qubits(2).unwrap();
        let pair = SubsystemSet::new(vec![1, 2]).unwrap();
        let options = BoundOptions::default();
        for _ in 0..40 {
            let rho_a = random_density(&shape, 2, &mut rng);
            let rho_b = random_density(&shape, 3, &mut rng);
            let lambda = 0.3;
            let mixed = MultiState::density(
                shape.clone(),
                rho_a
                    .density_matrix()
                    .scale(c(lambda, 0.0))
                    .add(&rho_b.density_matrix().scale(c(1.0 - lambda, 0.0)))
                    .unwrap(),
            )
            .unwrap();
            let bound_mix = mixed_lower_bound(&mixed, &pair, 1, &options).unwrap().value;
            let bound_a = mixed_lower_bound(&rho_a, &pair, 1, &options).unwrap().value;
            let bound_b = mixed_lower_bound(&rho_b, &pair, 1, &options).unwrap().value;
            assert!(bound_mix <= lambda * bound_a + (1.0 - lambda) * bound_b + 1e-8);
        }
    }
}
