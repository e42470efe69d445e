//! Bloch-vector dynamics for Lindblad equations with Hermitian jump operators.
//!
//! A density matrix of an `N`-level system is written as
//! `ρ = (I + r·λ) / N` over a traceless, trace-orthogonal basis `λ` of su(N).
//! For `dρ/dt = -i[H, ρ] - ½ Σ_k γ_k(t)² [L_k, [L_k, ρ]]` the Bloch vector
//! obeys, in the Heisenberg picture,
//!
//! ```text
//! dr/dt = ½ Σ_k γ_k(t)² l_k(t) ⊡ r,    l_k(t) = exp(t h⊙) l_k
//! ```
//!
//! so `r(t)` is a time-ordered exponential of the ⊡ product. This crate
//! evaluates that exponential three independent ways and provides a direct
//! density-matrix integrator to check them against:
//!
//! * [`algebra`]: generator bases, structure constants, the ⊙/⊡ products and
//!   the Bloch encode/decode maps.
//! * [`propagator`]: the time-ordered ⊡ exponential (ODE form), its Dyson
//!   series, the second-order perturbation series and qubit closed forms.
//! * [`unraveling`]: Monte Carlo averages over random unitary trajectories,
//!   both on matrices and directly on Bloch vectors.
//! * [`oracle`]: RK4 integration of the master equation with invariant
//!   monitoring.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod algebra;
mod error;
pub mod grid;
pub mod linalg;
pub mod oracle;
pub mod propagator;
pub mod quadrature;
pub mod unraveling;

pub use error::{Error, Result};
pub use nalgebra;

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix (operators and density matrices).
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense real matrix (linear maps on Bloch space).
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Dense real vector.
pub type RVector = nalgebra::DVector<f64>;

pub use algebra::{BlochVector, CoeffVector, GellMannOrder, GeneratorBasis, StructureTensor};
pub use grid::TimeGrid;
pub use propagator::{Channel, EvolutionProblem, GammaProfile, Picture, Trajectory};
