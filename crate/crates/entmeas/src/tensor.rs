//! Dense complex linear algebra over multipartite Hilbert spaces.
//!
//! Provides the shape bookkeeping for tensor-product spaces, a dense complex
//! matrix type, multipartite pure/mixed state containers, partial trace and
//! partial transpose, and spectral routines (cyclic Jacobi eigensolver,
//! PSD matrix square root) sized for desk-scale problems (total dimension up
//! to a few hundred).
//!
//! Factor indices are 1-based in every public signature; all internal
//! arithmetic is 0-based. Basis labels use the convention that factor 1 is
//! the most significant digit, matching the usual Kronecker-product ordering
//! `A_1 ⊗ A_2 ⊗ …`.

use num_complex::Complex64;

use crate::tolerances::{
    EIG_HERMITIAN_TOL, HERMITIAN_TOL, JACOBI_MAX_SWEEPS, JACOBI_REL_OFFDIAG, NORM_TOL, PSD_FLOOR,
    SPECTRUM_SUPPORT_CUTOFF, TRACE_TOL,
};
use crate::{Error, Result};

/// Shape of a tensor-product Hilbert space: the per-factor dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertShape {
    dims: Vec<usize>,
    total: usize,
}

impl HilbertShape {
    /// Builds a shape from per-factor dimensions. Every dimension must be at
    /// least 2 and there must be at least one factor.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("no factors given".into()));
        }
        if let Some(&bad) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidShape(format!(
                "factor dimension {bad} is below the minimum of 2"
            )));
        }
        let total = dims.iter().product();
        Ok(Self { dims, total })
    }

    /// Shape of `n` qubits.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    /// Per-factor dimensions.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Product of all factor dimensions.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Number of tensor factors.
    pub fn factor_count(&self) -> usize {
        self.dims.len()
    }

    /// Dimension of the given 1-based factor.
    pub fn dim_of(&self, factor: usize) -> Result<usize> {
        if factor == 0 || factor > self.dims.len() {
            return Err(Error::IndexOutOfRange {
                index: factor,
                factors: self.dims.len(),
            });
        }
        Ok(self.dims[factor - 1])
    }

    /// Stride of each factor in the flat basis index (factor 1 is the most
    /// significant digit).
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Flat basis index of a per-factor label.
    pub fn flat_index(&self, label: &[usize]) -> usize {
        debug_assert_eq!(label.len(), self.dims.len());
        let mut flat = 0;
        for (k, &l) in label.iter().enumerate() {
            debug_assert!(l < self.dims[k]);
            flat = flat * self.dims[k] + l;
        }
        flat
    }

    /// Per-factor label of a flat basis index.
    pub fn label_of(&self, mut flat: usize) -> Vec<usize> {
        let mut label = vec![0usize; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            label[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        label
    }

    /// Shape of the subsystem selected by `set`, factors in original order.
    pub fn sub_shape(&self, set: &SubsystemSet) -> Result<HilbertShape> {
        set.check_within(self)?;
        let dims = set.indices().iter().map(|&i| self.dims[i - 1]).collect();
        HilbertShape::new(dims)
    }
}

/// Ordered set of 1-based factor indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(transparent)]
pub struct SubsystemSet {
    indices: Vec<usize>,
}

impl SubsystemSet {
    /// Builds a set from 1-based factor indices; the input is sorted and must
    /// be non-empty and duplicate-free.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubsystemSet("empty set".into()));
        }
        if indices.contains(&0) {
            return Err(Error::InvalidSubsystemSet(
                "factor indices are 1-based; 0 is invalid".into(),
            ));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubsystemSet(format!(
                "duplicate factor index in {indices:?}"
            )));
        }
        Ok(Self { indices })
    }

    /// The singleton set `{factor}`.
    pub fn singleton(factor: usize) -> Result<Self> {
        Self::new(vec![factor])
    }

    /// The full set `{1, …, n}`.
    pub fn full(n: usize) -> Result<Self> {
        Self::new((1..=n).collect())
    }

    /// Every non-empty subset of `{1, …, n}`, ordered by size and then
    /// lexicographically.
    pub fn enumerate_all(n: usize) -> Vec<SubsystemSet> {
        let mut all: Vec<Vec<usize>> = (1u64..(1 << n))
            .map(|mask| (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect())
            .collect();
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        all.into_iter()
            .map(|v| SubsystemSet { indices: v })
            .collect()
    }

    /// Sorted 1-based indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of factors in the set.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Whether the set is empty (never true for a constructed set).
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Whether the set contains the 1-based factor index.
    pub fn contains(&self, factor: usize) -> bool {
        self.indices.binary_search(&factor).is_ok()
    }

    /// Whether every index of `self` also lies in `other`.
    pub fn is_subset_of(&self, other: &SubsystemSet) -> bool {
        self.indices.iter().all(|i| other.contains(*i))
    }

    /// Whether `self` is a subset of `other` and strictly smaller.
    pub fn is_strict_subset_of(&self, other: &SubsystemSet) -> bool {
        self.len() < other.len() && self.is_subset_of(other)
    }

    /// The complement within `{1, …, n}`.
    pub fn complement(&self, n: usize) -> Result<SubsystemSet> {
        let rest: Vec<usize> = (1..=n).filter(|i| !self.contains(*i)).collect();
        if rest.is_empty() {
            return Err(Error::InvalidSubsystemSet(format!(
                "complement of the full set over {n} factors is empty"
            )));
        }
        Ok(SubsystemSet { indices: rest })
    }

    pub(crate) fn check_within(&self, shape: &HilbertShape) -> Result<()> {
        let n = shape.factor_count();
        match self.indices.iter().find(|&&i| i > n) {
            Some(&bad) => Err(Error::IndexOutOfRange {
                index: bad,
                factors: n,
            }),
            None => Ok(()),
        }
    }
}

impl std::fmt::Display for SubsystemSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix by evaluating `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a square matrix from real entries in row-major order.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries: data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        })
    }

    /// Rank-one outer product `v · w†`.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        let mut m = Self::zeros(v.len(), w.len());
        for (i, &vi) in v.iter().enumerate() {
            for (j, &wj) in w.iter().enumerate() {
                m.set(i, j, vi * wj.conj());
            }
        }
        m
    }

    /// Row count.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols + col]
    }

    /// Overwrites the entry at `(row, col)`.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.cols + col] = value;
    }

    /// Adds `value` to the entry at `(row, col)`.
    #[inline]
    pub fn add_to(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.cols + col] += value;
    }

    /// Raw row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let src = k * other.cols;
                let dst = i * other.cols;
                for j in 0..other.cols {
                    out.entries[dst + j] += a * other.entries[src + j];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self · v`.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (i, slot) in out.iter_mut().enumerate() {
            let row = i * self.cols;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &amp) in v.iter().enumerate() {
                acc += self.entries[row + j] * amp;
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// Entrywise sum.
    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Scalar multiple.
    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&e| e * factor).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Plain transpose.
    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Entrywise complex conjugate (conjugation in the computational basis).
    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.conj()).collect(),
        }
    }

    /// Trace.
    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise absolute difference to `other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from Hermiticity, `max |M_ij - conj(M_ji)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let dev = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// Whether the matrix is Hermitian within the given tolerance.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols && self.hermiticity_deviation() <= tol
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a.get(i, j);
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out.set(i * b.rows() + k, j * b.cols() + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all(factors: &[ComplexMatrix]) -> ComplexMatrix {
    assert!(!factors.is_empty(), "kron_all needs at least one factor");
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f);
    }
    acc
}

/// State body: either a pure amplitude vector or a density matrix.
#[derive(Debug, Clone)]
pub enum StateBody {
    /// Normalized complex amplitudes over the computational basis.
    Pure(Vec<Complex64>),
    /// Hermitian, unit-trace, positive-semidefinite matrix.
    Density(ComplexMatrix),
}

/// A multipartite quantum state with explicit per-factor dimensions.
#[derive(Debug, Clone)]
pub struct MultiState {
    shape: HilbertShape,
    body: StateBody,
}

impl MultiState {
    /// Builds a pure state, checking normalization.
    pub fn pure(shape: HilbertShape, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != shape.total() {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector of length {} for total dimension {}",
                amplitudes.len(),
                shape.total()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self {
            shape,
            body: StateBody::Pure(amplitudes),
        })
    }

    /// Builds a pure state from unnormalized amplitudes, normalizing them;
    /// fails on the zero vector.
    pub fn pure_normalized(shape: HilbertShape, amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::ZeroNorm);
        }
        let scaled = amplitudes.into_iter().map(|a| a / norm).collect();
        Self::pure(shape, scaled)
    }

    /// Builds a mixed state, checking Hermiticity, trace and positivity.
    pub fn density(shape: HilbertShape, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != shape.total() || matrix.cols() != shape.total() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for total dimension {}",
                matrix.rows(),
                matrix.cols(),
                shape.total()
            )));
        }
        let herm_dev = matrix.hermiticity_deviation();
        if herm_dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                deviation: herm_dev,
            });
        }
        let trace_dev = (matrix.trace() - Complex64::new(1.0, 0.0)).norm();
        if trace_dev > TRACE_TOL {
            return Err(Error::TraceNotOne {
                deviation: trace_dev,
            });
        }
        let (eigs, _) = hermitian_eig(&matrix)?;
        let min_eig = eigs.last().copied().unwrap_or(0.0);
        if min_eig < PSD_FLOOR {
            return Err(Error::NotPositive {
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self {
            shape,
            body: StateBody::Density(matrix),
        })
    }

    /// Builds a mixed state from a matrix whose invariants are guaranteed by
    /// construction (used internally by trace-preserving maps).
    pub(crate) fn density_trusted(shape: HilbertShape, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), shape.total());
        Self {
            shape,
            body: StateBody::Density(matrix),
        }
    }

    /// The state's Hilbert-space shape.
    pub fn shape(&self) -> &HilbertShape {
        &self.shape
    }

    /// The state body.
    pub fn body(&self) -> &StateBody {
        &self.body
    }

    /// Whether the state is stored as a pure amplitude vector.
    pub fn is_pure(&self) -> bool {
        matches!(self.body, StateBody::Pure(_))
    }

    /// The amplitude vector of a pure state.
    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        match &self.body {
            StateBody::Pure(a) => Some(a),
            StateBody::Density(_) => None,
        }
    }

    /// The density matrix; pure states are promoted to projectors.
    pub fn density_matrix(&self) -> ComplexMatrix {
        match &self.body {
            StateBody::Pure(a) => ComplexMatrix::outer(a, a),
            StateBody::Density(m) => m.clone(),
        }
    }
}

/// Offsets of every label combination of the selected (0-based) factors in
/// the flat index, with all other factors held at label 0.
pub(crate) fn factor_offsets(shape: &HilbertShape, factors0: &[usize]) -> Vec<usize> {
    let strides = shape.strides();
    let mut offsets = vec![0usize];
    for &f in factors0 {
        let d = shape.dims()[f];
        let stride = strides[f];
        let mut next = Vec::with_capacity(offsets.len() * d);
        for &base in &offsets {
            for l in 0..d {
                next.push(base + l * stride);
            }
        }
        offsets = next;
    }
    offsets
}

/// Reduced density matrix on the kept factors.
///
/// Pure inputs are reduced directly from their amplitudes; mixed inputs are
/// reduced entrywise. The result's factors keep their original order.
pub fn partial_trace(state: &MultiState, keep: &SubsystemSet) -> Result<MultiState> {
    keep.check_within(state.shape())?;
    let shape = state.shape();
    let kept0: Vec<usize> = keep.indices().iter().map(|i| i - 1).collect();
    let traced0: Vec<usize> = (0..shape.factor_count())
        .filter(|k| !kept0.contains(k))
        .collect();
    let kept_offsets = factor_offsets(shape, &kept0);
    let traced_offsets = factor_offsets(shape, &traced0);
    let dk = kept_offsets.len();
    let out_shape = shape.sub_shape(keep)?;

    let mut out = ComplexMatrix::zeros(dk, dk);
    match state.body() {
        StateBody::Pure(amps) => {
            for (a, &ka) in kept_offsets.iter().enumerate() {
                for (b, &kb) in kept_offsets.iter().enumerate().skip(a) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &e in &traced_offsets {
                        acc += amps[ka + e] * amps[kb + e].conj();
                    }
                    out.set(a, b, acc);
                    if a != b {
                        out.set(b, a, acc.conj());
                    }
                }
            }
        }
        StateBody::Density(m) => {
            for (a, &ka) in kept_offsets.iter().enumerate() {
                for (b, &kb) in kept_offsets.iter().enumerate().skip(a) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &e in &traced_offsets {
                        acc += m.get(ka + e, kb + e);
                    }
                    out.set(a, b, acc);
                    if a != b {
                        out.set(b, a, acc.conj());
                    }
                }
            }
        }
    }
    Ok(MultiState::density_trusted(out_shape, out))
}

/// Partial transpose on the indicated factors.
///
/// The result is Hermitian but in general not positive, so it is returned as
/// a bare matrix rather than a state.
pub fn partial_transpose(state: &MultiState, part: &SubsystemSet) -> Result<ComplexMatrix> {
    part.check_within(state.shape())?;
    let shape = state.shape();
    let rho = state.density_matrix();
    let part0: Vec<usize> = part.indices().iter().map(|i| i - 1).collect();
    let rest0: Vec<usize> = (0..shape.factor_count())
        .filter(|k| !part0.contains(k))
        .collect();
    let part_offsets = factor_offsets(shape, &part0);
    let rest_offsets = factor_offsets(shape, &rest0);

    let n = shape.total();
    let mut out = ComplexMatrix::zeros(n, n);
    for &p1 in &part_offsets {
        for &p2 in &part_offsets {
            for &r1 in &rest_offsets {
                for &r2 in &rest_offsets {
                    out.set(p2 + r1, p1 + r2, rho.get(p1 + r1, p2 + r2));
                }
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching orthonormal
/// eigenvectors as matrix columns. The sweep stops once the off-diagonal
/// Frobenius norm drops below `JACOBI_REL_OFFDIAG` times the matrix norm.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let herm_dev = m.hermiticity_deviation();
    if herm_dev > EIG_HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            deviation: herm_dev,
        });
    }
    let n = m.rows();
    let mut a = m.clone();
    // Symmetrize away sub-tolerance asymmetry so rotations see exact pairs.
    for p in 0..n {
        let app = a.get(p, p).re;
        a.set(p, p, Complex64::new(app, 0.0));
        for q in (p + 1)..n {
            let avg = 0.5 * (a.get(p, q) + a.get(q, p).conj());
            a.set(p, q, avg);
            a.set(q, p, avg.conj());
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let frob = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let target = JACOBI_REL_OFFDIAG * frob;

    let mut converged = n <= 1;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off_sq = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += 2.0 * a.get(p, q).norm_sqr();
            }
        }
        if off_sq.sqrt() <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= target / (n as f64) * 1e-3 {
                    continue;
                }
                let phase = apq / r;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase_conj = phase.conj();

                // Columns p and q of A and of the accumulated basis rotate by
                // the unitary with entries [[c, s], [-s*conj(phase), c*conj(phase)]].
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * phase_conj * akq);
                    a.set(k, q, s * akp + c * phase_conj * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * phase * aqk);
                    a.set(q, k, s * apk + c * phase * aqk);
                }
                a.set(p, q, Complex64::new(0.0, 0.0));
                a.set(q, p, Complex64::new(0.0, 0.0));
                a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
                a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * phase_conj * vkq);
                    v.set(k, q, s * vkp + c * phase_conj * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .re
            .partial_cmp(&a.get(i, i).re)
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, new_col, v.get(k, old_col));
        }
    }
    Ok((values, vectors))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let (values, _) = hermitian_eig(m)?;
    Ok(values.last().copied().unwrap_or(0.0))
}

/// Square root of a positive-semidefinite Hermitian matrix.
///
/// Eigenvalues within `PSD_FLOOR` of zero are clipped to zero; anything more
/// negative is an error.
pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eig(m)?;
    if let Some(&min) = values.last() {
        if min < PSD_FLOOR {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
    }
    let n = m.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (idx, &lambda) in values.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vectors.get(i, idx);
            if vi.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out.add_to(i, j, root * vi * vectors.get(j, idx).conj());
            }
        }
    }
    Ok(out)
}

/// Square roots of the eigenvalues of `rho · rhotilde`, descending.
///
/// Computed through the Hermitian similarity `sqrt(rho) · rhotilde · sqrt(rho)`,
/// which shares the nonzero spectrum of the plain product but keeps the
/// computation symmetric and stable. Slightly negative eigenvalues within
/// `PSD_FLOOR` are clipped to zero.
pub fn sqrt_eigs_rho_rhotilde(rho: &ComplexMatrix, rhotilde: &ComplexMatrix) -> Result<Vec<f64>> {
    let root = matrix_sqrt_psd(rho)?;
    sqrt_eigs_with_sqrt(&root, rhotilde)
}

/// Same as [`sqrt_eigs_rho_rhotilde`] but reusing a precomputed `sqrt(rho)`.
pub(crate) fn sqrt_eigs_with_sqrt(
    sqrt_rho: &ComplexMatrix,
    rhotilde: &ComplexMatrix,
) -> Result<Vec<f64>> {
    let product = sqrt_rho.mul(rhotilde)?.mul(sqrt_rho)?;
    let (values, _) = hermitian_eig(&product)?;
    if let Some(&min) = values.last() {
        if min < PSD_FLOOR {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
    }
    let mut roots: Vec<f64> = values.iter().map(|&x| x.max(0.0).sqrt()).collect();
    roots.sort_by(|a, b| b.partial_cmp(a).expect("roots are finite"));
    Ok(roots)
}

/// Square roots of the eigenvalues of `rho · (flip rho* flip)`, descending,
/// for a real symmetric `flip`.
///
/// Works in the eigenbasis of `rho`: with subnormalized eigencolumns
/// `x_i = sqrt(mu_i) v_i`, the nonzero values are the singular values of the
/// symmetric matrix `tau_ij = x_i^T flip x_j`, read off a Hermitian block
/// embedding whose spectrum is the signed singular values. No square root of
/// a near-zero quantity is ever taken, so exact zeros in the spectrum stay
/// at eigensolver precision instead of inflating to its square root.
pub fn flip_conjugate_sqrt_eigs(rho: &ComplexMatrix, flip: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = rho.rows();
    let (values, vectors) = hermitian_eig(rho)?;
    if let Some(&min) = values.last() {
        if min < PSD_FLOOR {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
    }
    let cutoff = values.iter().sum::<f64>() * SPECTRUM_SUPPORT_CUTOFF;
    let rank = values.iter().filter(|&&v| v > cutoff).count();
    let mut out = vec![0.0; n];
    if rank == 0 {
        return Ok(out);
    }
    let x = ComplexMatrix::from_fn(n, rank, |i, j| values[j].sqrt() * vectors.get(i, j));
    let tau = x.transpose().mul(&flip.mul(&x)?)?;
    let mut block = ComplexMatrix::zeros(2 * rank, 2 * rank);
    for i in 0..rank {
        for j in 0..rank {
            block.set(i, rank + j, tau.get(i, j));
            block.set(rank + j, i, tau.get(i, j).conj());
        }
    }
    let (signed, _) = hermitian_eig(&block)?;
    for (slot, &sigma) in out.iter_mut().take(rank).zip(&signed) {
        *slot = sigma.max(0.0);
    }
    Ok(out)
}

/// Reduced density matrix of a single (1-based) factor of a pure state,
/// computed straight from the amplitudes.
pub(crate) fn pure_single_marginal(
    amps: &[Complex64],
    shape: &HilbertShape,
    factor: usize,
) -> ComplexMatrix {
    let f0 = factor - 1;
    let d = shape.dims()[f0];
    let stride = shape.strides()[f0];
    let total = shape.total();
    let block = stride * d;
    let mut out = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut acc = Complex64::new(0.0, 0.0);
            let base_a = a * stride;
            let base_b = b * stride;
            let mut offset = 0;
            while offset < total {
                for inner in 0..stride {
                    acc += amps[offset + base_a + inner] * amps[offset + base_b + inner].conj();
                }
                offset += block;
            }
            out.set(a, b, acc);
            if a != b {
                out.set(b, a, acc.conj());
            }
        }
    }
    out
}
