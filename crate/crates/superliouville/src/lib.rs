//! Numerical toolkit for the super-Liouville system on 2D domains.
//!
//! The super-Liouville system couples a Liouville-type equation for a real
//! conformal factor u with a Dirac equation for a 2-component complex
//! spinor ψ. On a background of conformal factor ρ and Gaussian curvature
//! K_g the system reads
//!
//! ```text
//!   -Δu  = 2e^{2u} - e^{u}⟨ψ, ψ⟩ - K_g
//!   D̸ψ  = -e^{u} ψ
//! ```
//!
//! and on the flat plane (ρ ≡ 1, K_g ≡ 0) it is exactly
//!
//! ```text
//!   -Δu  = 2e^{2u} - e^{u}|ψ|²,        D̸ψ = -e^{u} ψ.
//! ```
//!
//! The library provides:
//!
//! * the exact 2D Clifford algebra on spinors ([`clifford2d`]),
//! * uniform grids, flat/sphere backgrounds, conformal and Kelvin
//!   transformations ([`geometry`]),
//! * second-order finite-difference operators, residuals and the energy
//!   functionals ([`operators`]),
//! * the closed-form solution families: scalar bubbles, spinor bubbles and
//!   sphere Killing-spinor solutions ([`solutions`]),
//! * a damped Newton–Krylov solver for the coupled system ([`solver`]),
//! * conserved/asymptotic diagnostics: the holomorphic quadratic
//!   differential T(z), the stress tensor, the total charge α, the spinor
//!   charge ξ₀, asymptotic fits and the Dirac Green-function convolution
//!   ([`diagnostics`]),
//! * a blow-up harness that detects concentration points and classifies
//!   sequences ([`blowup`]).

pub mod blowup;
pub mod clifford2d;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod operators;
pub mod solutions;
pub mod solver;

pub use clifford2d::{Spinor, Vector2};
pub use error::{Error, Result};
pub use geometry::{ConformalMap, Grid, Metric, SolutionPair};
