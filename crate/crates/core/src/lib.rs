//! Homogeneous cubic Hamiltonians on the symplectic plane.
//!
//! * [`algebra`]: `ψ`, `Γ`, `Δ`, the discriminant and the completeness
//!   classification, generic over exact and float scalars.
//! * [`dynamics`]: integration of the Hamiltonian flow with blow-up detection
//!   and invariant monitoring.
//! * [`elliptic`]: equianharmonic ℘ and pole prediction, independent of the
//!   integrator.
//! * [`cli`]: the `cubicflow` command-line surface.

pub mod algebra;
pub mod cli;
pub mod dynamics;
pub mod elliptic;
pub mod formats;
pub mod identities;
pub mod scalar;

pub use algebra::{
    classify, delta, discriminant, gamma, gamma_w, hamiltonian_field, monomial_cubic,
    monomial_weight, omega, psi_eval, psi_grad, trilinear, AlgebraError, CubicClass, CubicCoeffs,
    CubicKind, Mat2, MonomialWeight, PhasePoint,
};
pub use dynamics::{
    classify_initial, estimate_blowup, f_dot, integrate, residual_report, zero_energy_check,
    DynamicsError, IntegratorConfig, OrbitClass, OrbitReport, Outcome, Termination, Trajectory,
    TrajectorySample,
};
pub use elliptic::{half_period, pole_distance, wp_eval, EllipticError, Weierstrass, WpParams};
pub use scalar::{Rational, Scalar};
