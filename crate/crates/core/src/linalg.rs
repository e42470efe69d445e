//! Dense matrix helpers: matrix exponential, Hermitian exponentials and a few
//! residual measures used by the invariant checks.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_traits::Float;

use crate::{CMatrix, RMatrix, C64};

// Padé degrees and the 1-norm thresholds below which each one reaches unit
// roundoff in double precision.
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Induced 1-norm (max column sum).
pub fn norm1<T>(m: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64> + Copy,
{
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled<T>(m: &DMatrix<T>, c: f64) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    m * T::from_real(c)
}

fn pade_low<T>(a: &DMatrix<T>, b: &[f64]) -> (DMatrix<T>, DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    let a2 = a * a;
    let mut even = DMatrix::<T>::identity(n, n);
    let mut odd = scaled(&even, b[1]);
    even = scaled(&even, b[0]);
    let mut power = DMatrix::<T>::identity(n, n);
    let mut k = 2;
    while k < b.len() {
        power = &power * &a2;
        even += scaled(&power, b[k]);
        odd += scaled(&power, b[k + 1]);
        k += 2;
    }
    (a * odd, even)
}

fn pade_13<T>(a: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    let id = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = a
        * (&a6 * inner_u
            + scaled(&a6, b[7])
            + scaled(&a4, b[5])
            + scaled(&a2, b[3])
            + scaled(&id, b[1]));
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&id, b[0]);
    (u, v)
}

/// Matrix exponential by Padé approximation with scaling and squaring.
///
/// Degree selection follows the classic 1-norm thresholds (3, 5, 7, 9, 13);
/// only degree 13 scales, by the smallest power of two that brings the norm
/// under its threshold.
pub fn expm<T>(a: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = norm1(a);
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }

    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let s = Float::ceil(Float::log2(norm / THETA_13)).max(0.0) as i32;
        let a = scaled(a, Float::powi(2.0, -s));
        let (u, v) = pade_13(&a);
        (u, v, s)
    };

    let p = &v + &u;
    let q = v - u;
    let mut x = q.lu().solve(&p).expect("Padé denominator is singular");
    for _ in 0..squarings {
        x = &x * &x;
    }
    x
}

/// Exact exponentials `exp(-i t M)` of a fixed Hermitian matrix `M`,
/// precomputed from its eigendecomposition.
#[derive(Clone, Debug)]
pub struct HermitianExp {
    vectors: CMatrix,
    values: DVector<f64>,
}

impl HermitianExp {
    pub fn new(m: &CMatrix) -> Self {
        let eig = m.clone().symmetric_eigen();
        Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        }
    }

    /// Generator of the real rotation group `exp(t A)` for antisymmetric `A`,
    /// stored as the Hermitian matrix `iA`.
    pub fn from_antisymmetric(a: &RMatrix) -> Self {
        Self::new(&a.map(|x| C64::new(0.0, x)))
    }

    /// `exp(-i t M)`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let phases = self.values.map(|e| {
            let (s, c) = Float::sin_cos(-e * t);
            C64::new(c, s)
        });
        let mut scaled = self.vectors.clone();
        for (mut col, ph) in scaled.column_iter_mut().zip(phases.iter()) {
            col *= *ph;
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(t A)` for the antisymmetric `A` this was built from.
    pub fn rotation(&self, t: f64) -> RMatrix {
        self.unitary(t).map(|z| z.re)
    }

    /// Largest `|eigenvalue|`.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().copied().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `max_ij |M_ij - conj(M_ji)|`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral norm of a real symmetric matrix.
pub fn symmetric_norm(m: &RMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0, |acc, e| acc.max(e.abs()))
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}
