//! su(N) generator bases, structure constants and the Lie products on Bloch
//! space.
//!
//! A basis is a list of `N² - 1` Hermitian, traceless matrices with
//! `Tr(λ_k λ_n) = s δ_kn`. Its structure constants are defined by
//! `[λ_i, λ_j] = 2i Σ_k f_ijk λ_k` and give the products
//!
//! ```text
//! (a ⊙ b)_k = -2 Σ_ij f_ijk a_i b_j        a ⊡ b = a ⊙ (a ⊙ b)
//! ```
//!
//! which satisfy `[a·λ, b·λ] = -i (a ⊙ b)·λ`. Indices are zero-based.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Float;

use crate::linalg::{hermitian_residual, max_abs, trace, trace_product};
use crate::{CMatrix, Error, RMatrix, RVector, Result, C64};

const BASIS_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-10;
const DROP_TOL: f64 = 1e-12;

/// Ordering of the generalized Gell-Mann matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GellMannOrder {
    /// All symmetric pairs in lexicographic `(j, k)` order, then all
    /// antisymmetric pairs, then the diagonal ladder.
    #[default]
    Grouped,
    /// Textbook numbering: for each `k`, the pairs `(j, k)` with `j < k`
    /// (symmetric then antisymmetric), followed by the `k`-th diagonal.
    /// For `N = 3` these are λ₁ … λ₈.
    Interleaved,
}

#[derive(Clone, Debug)]
pub struct GeneratorBasis {
    dim: usize,
    matrices: Vec<CMatrix>,
    scale: f64,
}

fn unit(n: usize, r: usize, c: usize, v: C64) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(r, c)] = v;
    m
}

fn symmetric(n: usize, j: usize, k: usize) -> CMatrix {
    let one = C64::new(1.0, 0.0);
    unit(n, j, k, one) + unit(n, k, j, one)
}

fn antisymmetric(n: usize, j: usize, k: usize) -> CMatrix {
    unit(n, j, k, C64::new(0.0, -1.0)) + unit(n, k, j, C64::new(0.0, 1.0))
}

fn diagonal(n: usize, l: usize) -> CMatrix {
    let norm = Float::sqrt(2.0 / (l * (l + 1)) as f64);
    let mut m = CMatrix::zeros(n, n);
    for d in 0..l {
        m[(d, d)] = C64::new(norm, 0.0);
    }
    m[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
    m
}

impl GeneratorBasis {
    /// Generalized Gell-Mann basis with `Tr(λ_k λ_n) = 2 δ_kn`, grouped order.
    /// For `N = 2` this is `(σ_x, σ_y, σ_z)`.
    pub fn gell_mann(n: usize) -> Result<Self> {
        Self::gell_mann_ordered(n, GellMannOrder::Grouped)
    }

    pub fn gell_mann_ordered(n: usize, order: GellMannOrder) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut matrices = Vec::with_capacity(n * n - 1);
        match order {
            GellMannOrder::Grouped => {
                for j in 0..n {
                    for k in j + 1..n {
                        matrices.push(symmetric(n, j, k));
                    }
                }
                for j in 0..n {
                    for k in j + 1..n {
                        matrices.push(antisymmetric(n, j, k));
                    }
                }
                for l in 1..n {
                    matrices.push(diagonal(n, l));
                }
            }
            GellMannOrder::Interleaved => {
                for k in 1..n {
                    for j in 0..k {
                        matrices.push(symmetric(n, j, k));
                        matrices.push(antisymmetric(n, j, k));
                    }
                    matrices.push(diagonal(n, k));
                }
            }
        }
        Self::from_matrices(matrices)
    }

    /// Wraps a user basis after checking Hermiticity, tracelessness and
    /// trace-orthogonality with a common scale `s = Tr(λ_0²)`.
    pub fn from_matrices(matrices: Vec<CMatrix>) -> Result<Self> {
        let first = matrices.first().ok_or(Error::InvalidDimension(0))?;
        let n = first.nrows();
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if matrices.len() != n * n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n * n - 1,
                found: matrices.len(),
            });
        }
        for m in &matrices {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
            let residual = hermitian_residual(m);
            if residual > BASIS_TOL {
                return Err(Error::InvalidBasis {
                    what: "hermiticity",
                    residual,
                });
            }
            let tr = trace(m).norm();
            if tr > BASIS_TOL {
                return Err(Error::InvalidBasis {
                    what: "tracelessness",
                    residual: tr,
                });
            }
        }
        let scale = trace_product(first, first).re;
        if scale <= 0.0 {
            return Err(Error::InvalidBasis {
                what: "positive scale",
                residual: scale,
            });
        }
        for (k, a) in matrices.iter().enumerate() {
            for (m, b) in matrices.iter().enumerate().skip(k) {
                let expected = if k == m { scale } else { 0.0 };
                let residual = (trace_product(a, b) - C64::new(expected, 0.0)).norm();
                if residual > BASIS_TOL {
                    return Err(Error::InvalidBasis {
                        what: "trace orthogonality",
                        residual,
                    });
                }
            }
        }
        Ok(Self {
            dim: n,
            matrices,
            scale,
        })
    }

    /// Hilbert-space dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N² - 1`.
    pub fn bloch_dim(&self) -> usize {
        self.matrices.len()
    }

    /// The `s` in `Tr(λ_k λ_n) = s δ_kn`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    fn check_vector(&self, len: usize) -> Result<()> {
        if len != self.bloch_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.bloch_dim(),
                found: len,
            });
        }
        Ok(())
    }

    fn check_matrix(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows().max(m.ncols()),
            });
        }
        Ok(())
    }

    /// `Σ_k v_k λ_k`.
    pub fn combine(&self, v: &RVector) -> Result<CMatrix> {
        self.check_vector(v.len())?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (c, m) in v.iter().zip(&self.matrices) {
            if *c != 0.0 {
                out += m * C64::new(*c, 0.0);
            }
        }
        Ok(out)
    }

    /// `c₀ I + c·λ`.
    pub fn operator(&self, coeffs: &CoeffVector) -> Result<CMatrix> {
        let mut out = self.combine(&coeffs.vector)?;
        for d in 0..self.dim {
            out[(d, d)] += C64::new(coeffs.scalar, 0.0);
        }
        Ok(out)
    }

    /// Projects a Hermitian matrix onto `(I, λ)`: `c₀ = Tr M / N`,
    /// `c_k = Tr(M λ_k) / s`.
    pub fn decompose_hermitian(&self, m: &CMatrix) -> Result<CoeffVector> {
        self.check_matrix(m)?;
        let residual = hermitian_residual(m);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let scalar = trace(m).re / self.dim as f64;
        let vector = RVector::from_iterator(
            self.bloch_dim(),
            self.matrices
                .iter()
                .map(|l| trace_product(m, l).re / self.scale),
        );
        Ok(CoeffVector { scalar, vector })
    }

    /// Bloch vector `r_k = (N / s) Tr(ρ λ_k)` of a unit-trace Hermitian
    /// matrix. Positivity is not checked.
    pub fn bloch_encode(&self, rho: &CMatrix) -> Result<BlochVector> {
        self.check_matrix(rho)?;
        let residual = hermitian_residual(rho);
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let tr = trace(rho);
        if (tr - C64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
            return Err(Error::TraceNotUnity { trace: tr.re });
        }
        let factor = self.dim as f64 / self.scale;
        Ok(BlochVector(RVector::from_iterator(
            self.bloch_dim(),
            self.matrices
                .iter()
                .map(|l| factor * trace_product(rho, l).re),
        )))
    }

    /// `(I + r·λ) / N` for any real `r`.
    pub fn bloch_decode(&self, r: &BlochVector) -> Result<CMatrix> {
        let mut rho = self.combine(&r.0)?;
        for d in 0..self.dim {
            rho[(d, d)] += C64::new(1.0, 0.0);
        }
        Ok(rho / C64::new(self.dim as f64, 0.0))
    }

    /// Structure constants `f_ijk = Tr([λ_i, λ_j] λ_k) / (2i s)`.
    ///
    /// The trace formula is antisymmetric for any Hermitian triple, so the
    /// extracted constants are checked by rebuilding every commutator as
    /// `2i Σ_k f_ijk λ_k`. A basis that is not trace-orthogonal with a
    /// common scale fails that reconstruction.
    pub fn structure_constants(&self) -> Result<StructureTensor> {
        let d = self.bloch_dim();
        let denom = C64::new(0.0, 2.0 * self.scale);
        let mut entries = BTreeMap::new();
        let mut row = alloc::vec![0.0f64; d];
        for i in 0..d {
            for j in i + 1..d {
                let comm =
                    &self.matrices[i] * &self.matrices[j] - &self.matrices[j] * &self.matrices[i];
                let mut rebuilt = CMatrix::zeros(self.dim, self.dim);
                for (k, f) in row.iter_mut().enumerate() {
                    *f = (trace_product(&comm, &self.matrices[k]) / denom).re;
                    if f.abs() >= DROP_TOL {
                        rebuilt += &self.matrices[k] * C64::new(0.0, 2.0 * *f);
                    }
                }
                let residual = max_abs(&(comm - rebuilt));
                if residual > CONSISTENCY_TOL {
                    return Err(Error::InconsistentStructure { i, j, residual });
                }
                for (k, &f) in row.iter().enumerate().skip(j + 1) {
                    if f.abs() >= DROP_TOL {
                        entries.insert((i, j, k), f);
                    }
                }
            }
        }
        Ok(StructureTensor::from_sorted(d, entries, Some(self.scale)))
    }

    /// Test-only constructor that skips validation.
    #[cfg(test)]
    pub(crate) fn unchecked(matrices: Vec<CMatrix>, scale: f64) -> Self {
        Self {
            dim: matrices[0].nrows(),
            matrices,
            scale,
        }
    }
}

/// Totally antisymmetric structure constants, stored sparsely by sorted
/// index triple `i < j < k`.
#[derive(Clone, Debug)]
pub struct StructureTensor {
    dim: usize,
    entries: BTreeMap<(usize, usize, usize), f64>,
    // all six signed permutations of every stored entry
    expanded: Vec<(usize, usize, usize, f64)>,
    derived_scale: Option<f64>,
}

fn sort_triple(i: usize, j: usize, k: usize) -> ((usize, usize, usize), f64) {
    let mut idx = [i, j, k];
    let mut sign = 1.0;
    for pass in 0..2 {
        for p in 0..2 - pass {
            if idx[p] > idx[p + 1] {
                idx.swap(p, p + 1);
                sign = -sign;
            }
        }
    }
    ((idx[0], idx[1], idx[2]), sign)
}

impl StructureTensor {
    fn from_sorted(
        dim: usize,
        entries: BTreeMap<(usize, usize, usize), f64>,
        derived_scale: Option<f64>,
    ) -> Self {
        let mut expanded = Vec::with_capacity(entries.len() * 6);
        for (&(i, j, k), &f) in &entries {
            expanded.push((i, j, k, f));
            expanded.push((j, k, i, f));
            expanded.push((k, i, j, f));
            expanded.push((j, i, k, -f));
            expanded.push((i, k, j, -f));
            expanded.push((k, j, i, -f));
        }
        Self {
            dim,
            entries,
            expanded,
            derived_scale,
        }
    }

    /// Builds a tensor from user-supplied `f_ijk`, in any index order.
    ///
    /// Each triple is extended by total antisymmetry. Entries with a repeated
    /// index must vanish, and a triple given twice must agree with itself up
    /// to the permutation sign.
    pub fn from_entries<I>(dim: usize, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize, usize), f64)>,
    {
        let mut entries: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for ((i, j, k), f) in values {
            for idx in [i, j, k] {
                if idx >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: idx + 1,
                    });
                }
            }
            if i == j || j == k || i == k {
                if f.abs() >= DROP_TOL {
                    return Err(Error::ConflictingEntry {
                        i,
                        j,
                        k,
                        first: f,
                        second: 0.0,
                    });
                }
                continue;
            }
            let (key, sign) = sort_triple(i, j, k);
            let value = sign * f;
            match entries.get(&key) {
                Some(&prev) if (prev - value).abs() > CONSISTENCY_TOL => {
                    return Err(Error::ConflictingEntry {
                        i,
                        j,
                        k,
                        first: prev,
                        second: value,
                    });
                }
                _ => {
                    entries.insert(key, value);
                }
            }
        }
        entries.retain(|_, f| f.abs() >= DROP_TOL);
        Ok(Self::from_sorted(dim, entries, None))
    }

    /// su(2) constants `f_ijk = value · ε_ijk`.
    pub fn levi_civita(value: f64) -> Self {
        let mut entries = BTreeMap::new();
        if value.abs() >= DROP_TOL {
            entries.insert((0, 1, 2), value);
        }
        Self::from_sorted(3, entries, None)
    }

    /// Bloch-space dimension `N² - 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Hilbert-space dimension inferred from `N² - 1`, if it is a perfect
    /// square minus one.
    pub fn hilbert_dim(&self) -> Option<usize> {
        let n = Float::round(Float::sqrt((self.dim + 1) as f64)) as usize;
        (n * n == self.dim + 1).then_some(n)
    }

    /// Scale of the basis the constants were extracted from, if any.
    pub fn derived_scale(&self) -> Option<f64> {
        self.derived_scale
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        if i == j || j == k || i == k {
            return 0.0;
        }
        let (key, sign) = sort_triple(i, j, k);
        self.entries.get(&key).map_or(0.0, |f| sign * f)
    }

    /// Stored entries, keyed by sorted triple.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `sup |c_ijk| = 2 sup |f_ijk|`.
    pub fn c_max(&self) -> f64 {
        2.0 * self.entries.values().fold(0.0f64, |m, f| m.max(f.abs()))
    }

    /// `(C N)^{1/2}` with `C = sup |c_ijk|`, bounding `‖a ⊙ b‖ / (‖a‖ ‖b‖)`.
    pub fn odot_norm_bound(&self) -> f64 {
        let n = self.hilbert_dim().unwrap_or(self.dim) as f64;
        Float::sqrt(self.c_max() * n)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: len,
            });
        }
        Ok(())
    }

    /// `(a ⊙ b)_k = -2 Σ_ij f_ijk a_i b_j`.
    pub fn odot(&self, a: &RVector, b: &RVector) -> Result<RVector> {
        self.check(a.len())?;
        self.check(b.len())?;
        let mut out = RVector::zeros(self.dim);
        for &(i, j, k, f) in &self.expanded {
            out[k] -= 2.0 * f * a[i] * b[j];
        }
        Ok(out)
    }

    /// `a ⊡ b = a ⊙ (a ⊙ b)`.
    pub fn boxdot(&self, a: &RVector, b: &RVector) -> Result<RVector> {
        let inner = self.odot(a, b)?;
        self.odot(a, &inner)
    }

    /// Matrix of `b ↦ a ⊙ b`: `A_kj = -2 Σ_i f_ijk a_i`. Antisymmetric.
    pub fn adjoint_matrix(&self, a: &RVector) -> Result<RMatrix> {
        self.check(a.len())?;
        let mut m = RMatrix::zeros(self.dim, self.dim);
        for &(i, j, k, f) in &self.expanded {
            m[(k, j)] -= 2.0 * f * a[i];
        }
        Ok(m)
    }

    /// Matrix of `b ↦ a ⊡ b`, the square of [`Self::adjoint_matrix`].
    /// Symmetric and negative semidefinite.
    pub fn boxdot_matrix(&self, a: &RVector) -> Result<RMatrix> {
        let m = self.adjoint_matrix(a)?;
        Ok(&m * &m)
    }

    /// Largest violation of total antisymmetry over the stored entries
    /// (zero by construction, kept as a cheap audit).
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for &(i, j, k, f) in &self.expanded {
            worst = worst.max((self.get(i, j, k) - f).abs());
            worst = worst.max((self.get(j, i, k) + f).abs());
        }
        worst
    }

    /// `max |Σ_m (f_ijm f_mkl + f_jkm f_mil + f_kim f_mjl)|` over all
    /// `i < j < k` and `l`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut dense = alloc::vec![0.0f64; d * d * d];
        let idx = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
        for &(i, j, k, f) in &self.expanded {
            dense[idx(i, j, k)] = f;
        }
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    for l in 0..d {
                        let mut s = 0.0;
                        for m in 0..d {
                            s += dense[idx(i, j, m)] * dense[idx(m, k, l)]
                                + dense[idx(j, k, m)] * dense[idx(m, i, l)]
                                + dense[idx(k, i, m)] * dense[idx(m, j, l)];
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Real Bloch vector `r` of `ρ = (I + r·λ) / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochVector(RVector);

impl BlochVector {
    pub fn new(components: RVector) -> Self {
        Self(components)
    }

    pub fn from_slice(components: &[f64]) -> Self {
        Self(RVector::from_column_slice(components))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(RVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &RVector {
        &self.0
    }

    pub fn into_inner(self) -> RVector {
        self.0
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    /// `Tr ρ²` for a Hilbert dimension `n` and basis scale `s`:
    /// `1/N + s ‖r‖² / N²`.
    pub fn purity(&self, n: usize, scale: f64) -> f64 {
        let n = n as f64;
        1.0 / n + scale * self.norm_squared() / (n * n)
    }
}

impl From<RVector> for BlochVector {
    fn from(v: RVector) -> Self {
        Self(v)
    }
}

/// Decomposition `c₀ I + c·λ` of a Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffVector {
    pub scalar: f64,
    pub vector: RVector,
}

impl CoeffVector {
    pub fn new(scalar: f64, vector: RVector) -> Self {
        Self { scalar, vector }
    }

    pub fn traceless(vector: RVector) -> Self {
        Self {
            scalar: 0.0,
            vector,
        }
    }

    pub fn from_slice(scalar: f64, vector: &[f64]) -> Self {
        Self::new(scalar, RVector::from_column_slice(vector))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::vec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli() -> [CMatrix; 3] {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        [
            CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            CMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
            CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        ]
    }

    fn v(x: &[f64]) -> RVector {
        RVector::from_column_slice(x)
    }

    #[test]
    fn qubit_basis_is_pauli() {
        let b = GeneratorBasis::gell_mann(2).unwrap();
        assert_eq!(b.bloch_dim(), 3);
        assert_eq!(b.scale(), 2.0);
        for (got, want) in b.matrices().iter().zip(pauli().iter()) {
            assert_eq!(got, want);
        }
        assert_eq!(
            trace_product(&b.matrices()[0], &b.matrices()[1]),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn rejects_trivial_dimension() {
        assert_eq!(
            GeneratorBasis::gell_mann(1).unwrap_err(),
            Error::InvalidDimension(1)
        );
        assert_eq!(
            GeneratorBasis::gell_mann(0).unwrap_err(),
            Error::InvalidDimension(0)
        );
    }

    #[test]
    fn basis_invariants_hold_up_to_n6() {
        for n in 2..=6 {
            for order in [GellMannOrder::Grouped, GellMannOrder::Interleaved] {
                let b = GeneratorBasis::gell_mann_ordered(n, order).unwrap();
                assert_eq!(b.bloch_dim(), n * n - 1);
                for m in b.matrices() {
                    assert!(hermitian_residual(m) < 1e-12);
                    assert!(trace(m).norm() < 1e-12);
                    assert!((trace_product(m, m).re - 2.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn grouped_order_for_qutrit() {
        let b = GeneratorBasis::gell_mann(3).unwrap();
        // sym(0,1), sym(0,2), sym(1,2), asym(0,1), asym(0,2), asym(1,2), diag 1, diag 2
        assert_eq!(b.matrices()[1], symmetric(3, 0, 2));
        assert_eq!(b.matrices()[4], antisymmetric(3, 0, 2));
        assert_eq!(b.matrices()[7], diagonal(3, 2));
    }

    #[test]
    fn from_matrices_rejects_non_orthogonal() {
        let [x, y, z] = pauli();
        let skew = &x + &z;
        let err = GeneratorBasis::from_matrices(vec![x, y, skew]).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidBasis {
                what: "trace orthogonality",
                ..
            }
        ));
    }

    #[test]
    fn from_matrices_rejects_wrong_count() {
        let [x, y, _] = pauli();
        assert!(matches!(
            GeneratorBasis::from_matrices(vec![x, y]),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn half_pauli_basis_has_scale_half() {
        let half: Vec<CMatrix> = pauli().iter().map(|m| m * c(0.5, 0.0)).collect();
        let b = GeneratorBasis::from_matrices(half).unwrap();
        assert_eq!(b.scale(), 0.5);
        let f = b.structure_constants().unwrap();
        // [σ/2, σ/2] = i σ/2 ⇒ f = ε/2
        assert_relative_eq!(f.get(0, 1, 2), 0.5, epsilon = 1e-15);
    }

    // Brute force over all 27 triples, straight from the commutator.
    fn brute_force_f(b: &GeneratorBasis) -> Vec<f64> {
        let d = b.bloch_dim();
        let m = b.matrices();
        let mut out = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                let comm = &m[i] * &m[j] - &m[j] * &m[i];
                for k in 0..d {
                    let t = (&comm * &m[k]).trace();
                    out[(i * d + j) * d + k] = (t / c(0.0, 2.0 * b.scale())).re;
                }
            }
        }
        out
    }

    #[test]
    fn pauli_structure_constants() {
        let b = GeneratorBasis::gell_mann(2).unwrap();
        let f = b.structure_constants().unwrap();
        let brute = brute_force_f(&b);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_relative_eq!(
                        f.get(i, j, k),
                        brute[(i * 3 + j) * 3 + k],
                        epsilon = 1e-14
                    );
                }
            }
        }
        assert_relative_eq!(f.get(0, 1, 2), 1.0, epsilon = 1e-15);
        assert_eq!(f.get(0, 0, 1), 0.0);
        assert_eq!(f.nnz(), 1);
        assert_eq!(f.derived_scale(), Some(2.0));
    }

    #[test]
    fn qutrit_structure_constants_textbook_numbering() {
        let b = GeneratorBasis::gell_mann_ordered(3, GellMannOrder::Interleaved).unwrap();
        let f = b.structure_constants().unwrap();
        let brute = brute_force_f(&b);
        let at = |i: usize, j: usize, k: usize| brute[(i * 8 + j) * 8 + k];
        // f_458 = √3/2 in one-based textbook labels
        assert_relative_eq!(at(3, 4, 7), 3f64.sqrt() / 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.get(3, 4, 7), 3f64.sqrt() / 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.get(0, 1, 2), 1.0, epsilon = 1e-14);
        assert_relative_eq!(f.get(0, 3, 6), 0.5, epsilon = 1e-14);
        // e₁ ⊙ e₂ = -2 e₃
        let mut e1 = RVector::zeros(8);
        let mut e2 = RVector::zeros(8);
        e1[0] = 1.0;
        e2[1] = 1.0;
        let mut expected = RVector::zeros(8);
        expected[2] = -2.0;
        assert_relative_eq!(f.odot(&e1, &e2).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn qutrit_structure_constants_grouped_numbering() {
        // textbook λ4, λ5, λ8 sit at grouped positions 1, 4, 7
        let f = GeneratorBasis::gell_mann(3)
            .unwrap()
            .structure_constants()
            .unwrap();
        assert_relative_eq!(f.get(1, 4, 7), 3f64.sqrt() / 2.0, epsilon = 1e-14);
        // textbook λ1, λ2, λ3 sit at grouped positions 0, 3, 6
        assert_relative_eq!(f.get(0, 3, 6), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn inconsistent_basis_is_reported() {
        // σ_x, σ_y and 2σ_z are orthogonal but not equally normalized
        let [x, y, z] = pauli();
        let bad = GeneratorBasis::unchecked(vec![x.clone(), y.clone(), &z * c(2.0, 0.0)], 2.0);
        assert!(matches!(
            bad.structure_constants(),
            Err(Error::InconsistentStructure { i: 0, j: 1, .. })
        ));
        // σ_x, σ_y, σ_x + σ_z is not orthogonal
        let skew = GeneratorBasis::unchecked(vec![x.clone(), y, &x + &z], 2.0);
        assert!(matches!(
            skew.structure_constants(),
            Err(Error::InconsistentStructure { .. })
        ));
    }

    #[test]
    fn from_entries_extends_by_antisymmetry() {
        let f = StructureTensor::from_entries(3, [((1, 0, 2), -0.5)]).unwrap();
        assert_eq!(f.get(0, 1, 2), 0.5);
        assert_eq!(f.get(2, 1, 0), -0.5);
        assert_eq!(f.get(1, 2, 0), 0.5);
        assert_eq!(f.nnz(), 1);
        assert_eq!(f.hilbert_dim(), Some(2));
    }

    #[test]
    fn from_entries_rejects_conflicts() {
        assert!(StructureTensor::from_entries(3, [((0, 1, 2), 0.5), ((1, 0, 2), 0.5)]).is_err());
        assert!(StructureTensor::from_entries(3, [((0, 0, 2), 0.5)]).is_err());
        assert!(StructureTensor::from_entries(3, [((0, 1, 3), 0.5)]).is_err());
        // consistent duplicate is fine
        assert!(StructureTensor::from_entries(3, [((0, 1, 2), 0.5), ((1, 2, 0), 0.5)]).is_ok());
    }

    #[test]
    fn half_epsilon_odot_is_minus_cross() {
        let f = StructureTensor::levi_civita(0.5);
        let out = f.odot(&v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(out, v(&[0.0, 0.0, -1.0]));
        let a = v(&[0.3, -1.2, 2.0]);
        let b = v(&[1.1, 0.4, -0.7]);
        assert_relative_eq!(f.odot(&a, &b).unwrap(), -a.cross(&b), epsilon = 1e-15);
        assert_eq!(f.odot(&a, &a).unwrap(), RVector::zeros(3));
    }

    #[test]
    fn boxdot_dephasing_matrix() {
        let gamma = 0.7f64;
        let f = StructureTensor::levi_civita(0.5);
        let l = v(&[0.0, 0.0, gamma.sqrt()]);
        let r = v(&[0.2, -0.5, 0.9]);
        let m = RMatrix::from_diagonal(&v(&[1.0, 1.0, 0.0]));
        assert_relative_eq!(
            f.boxdot(&l, &r).unwrap(),
            -(m * &r) * gamma,
            epsilon = 1e-15
        );
        // parallel to l is annihilated
        assert_eq!(
            f.boxdot(&l, &v(&[0.0, 0.0, 3.0])).unwrap(),
            RVector::zeros(3)
        );
    }

    #[test]
    fn boxdot_rotating_lindblad_matrix() {
        let (gamma, w0) = (0.3f64, 1.3f64);
        let f = StructureTensor::levi_civita(0.5);
        let r = v(&[0.2, -0.5, 0.9]);
        for t in [0.0, 0.4, 2.2] {
            let (s, co) = (w0 * t).sin_cos();
            let l = v(&[co, -s, 0.0]) * gamma.sqrt();
            let n = RMatrix::from_row_slice(
                3,
                3,
                &[s * s, co * s, 0.0, co * s, co * co, 0.0, 0.0, 0.0, 1.0],
            );
            assert_relative_eq!(
                f.boxdot(&l, &r).unwrap(),
                -(n * &r) * gamma,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn adjoint_matrix_of_precession() {
        let w0 = 1.7;
        let f = StructureTensor::levi_civita(0.5);
        let a = f.adjoint_matrix(&v(&[0.0, 0.0, w0])).unwrap();
        let expected = RMatrix::from_row_slice(3, 3, &[0.0, w0, 0.0, -w0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(a, expected);
        assert_eq!(
            f.adjoint_matrix(&RVector::zeros(3)).unwrap(),
            RMatrix::zeros(3, 3)
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let f = StructureTensor::levi_civita(1.0);
        assert!(matches!(
            f.odot(&RVector::zeros(3), &RVector::zeros(8)),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 8
            })
        ));
        assert!(f.adjoint_matrix(&RVector::zeros(2)).is_err());
        assert!(f.boxdot(&RVector::zeros(4), &RVector::zeros(3)).is_err());
    }

    #[test]
    fn decompose_examples() {
        let b = GeneratorBasis::gell_mann(2).unwrap();
        let [x, _, z] = pauli();
        let w0 = 0.8;
        let cz = b.decompose_hermitian(&(z * c(w0, 0.0))).unwrap();
        assert_eq!(cz, CoeffVector::from_slice(0.0, &[0.0, 0.0, w0]));
        let ci = b.decompose_hermitian(&CMatrix::identity(2, 2)).unwrap();
        assert_eq!(ci, CoeffVector::from_slice(1.0, &[0.0, 0.0, 0.0]));
        let g = 0.36f64;
        let cx = b.decompose_hermitian(&(x * c(g.sqrt(), 0.0))).unwrap();
        assert_relative_eq!(cx.vector, v(&[0.6, 0.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let b = GeneratorBasis::gell_mann(2).unwrap();
        let m =
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        match b.decompose_hermitian(&m) {
            Err(Error::NotHermitian { residual }) => assert_eq!(residual, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn encode_examples() {
        let b = GeneratorBasis::gell_mann(2).unwrap();
        let half = c(0.5, 0.0);
        let mixed = CMatrix::identity(2, 2) * half;
        assert_eq!(b.bloch_encode(&mixed).unwrap(), BlochVector::zeros(3));
        let mut north = CMatrix::zeros(2, 2);
        north[(0, 0)] = c(1.0, 0.0);
        assert_eq!(
            b.bloch_encode(&north).unwrap(),
            BlochVector::from_slice(&[0.0, 0.0, 1.0])
        );
        let rho = (CMatrix::identity(2, 2) + &pauli()[0] * c(0.6, 0.0)) * half;
        assert_relative_eq!(
            *b.bloch_encode(&rho).unwrap().components(),
            v(&[0.6, 0.0, 0.0]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn encode_rejects_bad_trace_and_non_hermitian() {
        let b = GeneratorBasis::gell_mann(2).unwrap();
        assert!(matches!(
            b.bloch_encode(&CMatrix::identity(2, 2)),
            Err(Error::TraceNotUnity { .. })
        ));
        let mut m = CMatrix::identity(2, 2) * c(0.5, 0.0);
        m[(0, 1)] = c(0.3, 0.0);
        assert!(matches!(
            b.bloch_encode(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn decode_does_not_check_positivity() {
        let b = GeneratorBasis::gell_mann(2).unwrap();
        let rho = b
            .bloch_decode(&BlochVector::from_slice(&[3.0, 0.0, 0.0]))
            .unwrap();
        assert!(crate::linalg::min_eigenvalue(&rho) < 0.0);
    }

    #[test]
    fn norm_bound_constant() {
        let f = GeneratorBasis::gell_mann(2)
            .unwrap()
            .structure_constants()
            .unwrap();
        assert_eq!(f.c_max(), 2.0);
        assert_relative_eq!(f.odot_norm_bound(), 2.0, epsilon = 1e-15);
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = RVector> {
        proptest::collection::vec(-2.0f64..2.0, d).prop_map(RVector::from_vec)
    }

    fn case(n: usize) -> impl Strategy<Value = (usize, RVector, RVector, RVector)> {
        let d = n * n - 1;
        (vec_strategy(d), vec_strategy(d), vec_strategy(d)).prop_map(move |(a, b, c)| (n, a, b, c))
    }

    fn any_case() -> impl Strategy<Value = (usize, RVector, RVector, RVector)> {
        prop_oneof![case(2), case(3), case(4)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn odot_antisymmetric_and_jacobi((n, a, b, cc) in any_case()) {
            let f = GeneratorBasis::gell_mann(n).unwrap().structure_constants().unwrap();
            let ab = f.odot(&a, &b).unwrap();
            let ba = f.odot(&b, &a).unwrap();
            prop_assert!((ab + ba).amax() < 1e-12);
            let j = f.odot(&a, &f.odot(&b, &cc).unwrap()).unwrap()
                + f.odot(&b, &f.odot(&cc, &a).unwrap()).unwrap()
                + f.odot(&cc, &f.odot(&a, &b).unwrap()).unwrap();
            prop_assert!(j.amax() < 1e-10);
        }

        #[test]
        fn commutator_bridge((n, a, b, _c) in any_case()) {
            let basis = GeneratorBasis::gell_mann(n).unwrap();
            let f = basis.structure_constants().unwrap();
            let la = basis.combine(&a).unwrap();
            let lb = basis.combine(&b).unwrap();
            let lhs = &la * &lb - &lb * &la;
            let rhs = basis.combine(&f.odot(&a, &b).unwrap()).unwrap() * c(0.0, -1.0);
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-10);
        }

        #[test]
        fn adjoint_matrix_applies_odot((n, a, b, _c) in any_case()) {
            let f = GeneratorBasis::gell_mann(n).unwrap().structure_constants().unwrap();
            let m = f.adjoint_matrix(&a).unwrap();
            prop_assert!((&m * &b - f.odot(&a, &b).unwrap()).amax() < 1e-12);
            prop_assert!((&m + m.transpose()).amax() < 1e-14);
        }

        #[test]
        fn decode_encode_round_trip((n, a, _b, _c) in any_case()) {
            let basis = GeneratorBasis::gell_mann(n).unwrap();
            let r = BlochVector::new(a);
            let back = basis.bloch_encode(&basis.bloch_decode(&r).unwrap()).unwrap();
            prop_assert!((back.components() - r.components()).amax() < 1e-12);
        }

        #[test]
        fn decompose_reconstruct((n, a, _b, _c) in any_case(), s in -3.0f64..3.0) {
            let basis = GeneratorBasis::gell_mann(n).unwrap();
            let m = basis.operator(&CoeffVector::new(s, a)).unwrap();
            let coeffs = basis.decompose_hermitian(&m).unwrap();
            prop_assert!(max_abs(&(basis.operator(&coeffs).unwrap() - m)) < 1e-10);
        }
    }

    #[test]
    fn jacobi_tensor_residual() {
        for n in 2..=4 {
            let f = GeneratorBasis::gell_mann(n)
                .unwrap()
                .structure_constants()
                .unwrap();
            assert!(f.jacobi_residual() < 1e-10);
            assert_eq!(f.antisymmetry_residual(), 0.0);
        }
    }
}
