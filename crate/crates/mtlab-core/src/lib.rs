//! Numerical laboratory for the determinant functionals `A_n` and `B_n` of
//! holomorphic sections of `O(n)` over the Riemann sphere `CP¹ = S²`.
//!
//! For a real conformal factor `φ` the monomial sections `α_i = √((n+1)·C(n,i))·zⁱ`
//! acquire the Gram matrix
//!
//! ```text
//! M_φ[i,j] = ∫ α_i·conj(α_j) · e^φ / (1+|z|²)ⁿ dμ ,
//! ```
//!
//! with `μ` the normalized Fubini-Study (uniform) probability measure, and the
//! two functionals of interest are
//!
//! ```text
//! B_n(φ) = log det M_φ ,
//! A_n(φ) = −½·∫|∇φ|²dμ − (n+1)·∫φ dμ + B_n(φ) .
//! ```
//!
//! `A_0 ≤ 0` is the classical Moser-Trudinger/Onofri inequality; the library
//! exists to compute these quantities accurately, verify every finite-precision
//! statement surrounding them (variational formulas, the `J_n < 1` sequence
//! bound, the determinantal-point-process identity for `exp B_n`, the Szegő
//! circle baseline), and search for counterexamples to the conjectured
//! `A_n(φ) ≤ 0`.
//!
//! Module map:
//! - [`sphere`] — charts, distances, product quadrature for `μ`.
//! - [`funcspace`] — band-limited `φ` in a real orthonormal spherical-harmonic
//!   basis: synthesis/analysis, Dirichlet energy, mean, rearrangement.
//! - [`gram`] — the Gram matrix, `B_n`, `A_n`, and the permutation-product
//!   determinant bound.
//! - [`variation`] — Euler-Lagrange residual, second variation, Hessian
//!   spectrum at `φ = 0`, the kernel identity, and the `J_n` sequence.
//! - [`montecarlo`] — the joint density `K_n`, exact sampling via the
//!   spherical ensemble, and Monte-Carlo estimation of `B_n`.
//! - [`szego`] — Toeplitz determinants on `S¹` and the strong Szegő baseline.
//! - [`harness`] — gradient-ascent searches, ray scans, Toeplitz asymptotics.
//! - [`linalg`], [`quad1d`], [`special`], [`dd`], [`parallel`] — supporting
//!   numerics.
//!
//! Determinism: every operation is deterministic given its seed and inputs.
//! Parallel reductions use a fixed binary tree (see [`parallel`]), so results
//! are bitwise identical for any worker count and with the `parallel` feature
//! disabled.

pub mod dd;
mod error;
pub mod funcspace;
pub mod gram;
pub mod harness;
pub mod linalg;
pub mod montecarlo;
pub mod parallel;
pub mod quad1d;
pub mod special;
pub mod sphere;
pub mod szego;
pub mod variation;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
