//! Exact 2D Clifford algebra on 2-component complex spinors.
//!
//! Spinors on the plane are pairs Ψ = (f, g) ∈ ℂ², split into positive and
//! negative half-spinor components. The standard orthonormal frame vectors
//! e₁ = ∂/∂x₁ and e₂ = ∂/∂x₂ act by the matrices
//!
//! ```text
//!   e₁ · (f, g) = ( g, -f)          e₂ · (f, g) = (i·g, i·f)
//! ```
//!
//! which satisfy the Clifford relation v·w·ψ + w·v·ψ = -2(v·w)ψ exactly.
//! The Hermitian inner product is ⟨ψ, φ⟩ = f_ψ·conj(f_φ) + g_ψ·conj(g_φ)
//! (complex-linear in the first slot); Clifford multiplication by real
//! vectors is skew-adjoint with respect to it, so Re⟨v·ψ, ψ⟩ = 0.
//!
//! For the holomorphic quadratic differential T(z) the basis covectors
//! dz = e₁ + i·e₂ and dz̄ = e₁ - i·e₂ must act on spinors as well. Their
//! action is defined by *complex-linear* extension of the frame action:
//!
//! ```text
//!   dz · (f, g) = (0, -2f)          dz̄ · (f, g) = (2g, 0)
//! ```
//!
//! Complex-linear (rather than conjugate-linear) extension is the unique
//! choice under which T(z) vanishes identically on the explicit bubble
//! solutions, which is the invariant the diagnostics are built on.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A point or tangent vector of the plane in the standard frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vector2 {
    /// The origin.
    pub const ZERO: Vector2 = Vector2 { x1: 0.0, x2: 0.0 };

    #[inline(always)]
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Euclidean norm squared |x|² = x₁² + x₂².
    #[inline(always)]
    pub fn norm_sqr(self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    /// Euclidean norm |x|.
    #[inline(always)]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// The inversion x ↦ x / |x|². Caller must exclude x = 0.
    #[inline(always)]
    pub fn invert(self) -> Self {
        let s = self.norm_sqr();
        Self::new(self.x1 / s, self.x2 / s)
    }

    /// The complex coordinate z = x₁ + i·x₂ of the point.
    #[inline(always)]
    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.x1, self.x2)
    }
}

impl std::ops::Add for Vector2 {
    type Output = Vector2;
    #[inline(always)]
    fn add(self, rhs: Vector2) -> Vector2 {
        Vector2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl std::ops::Sub for Vector2 {
    type Output = Vector2;
    #[inline(always)]
    fn sub(self, rhs: Vector2) -> Vector2 {
        Vector2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl std::ops::Mul<f64> for Vector2 {
    type Output = Vector2;
    #[inline(always)]
    fn mul(self, s: f64) -> Vector2 {
        Vector2::new(self.x1 * s, self.x2 * s)
    }
}

/// A 2-component complex spinor (f, g): positive and negative half-spinor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spinor {
    pub f: Complex64,
    pub g: Complex64,
}

impl Spinor {
    pub const ZERO: Spinor = Spinor {
        f: Complex64::new(0.0, 0.0),
        g: Complex64::new(0.0, 0.0),
    };

    #[inline(always)]
    pub const fn new(f: Complex64, g: Complex64) -> Self {
        Self { f, g }
    }

    /// Spinor with real components (f, g) = (fr, gr).
    #[inline(always)]
    pub fn from_reals(fr: f64, gr: f64) -> Self {
        Self::new(Complex64::new(fr, 0.0), Complex64::new(gr, 0.0))
    }

    /// Spinor from the four real degrees of freedom (Re f, Im f, Re g, Im g).
    #[inline(always)]
    pub fn from_reals4(fr: f64, fi: f64, gr: f64, gi: f64) -> Self {
        Self::new(Complex64::new(fr, fi), Complex64::new(gr, gi))
    }

    /// Squared Hermitian norm ⟨ψ, ψ⟩ = |f|² + |g|² (real, nonnegative).
    #[inline(always)]
    pub fn norm_sqr(self) -> f64 {
        self.f.norm_sqr() + self.g.norm_sqr()
    }

    /// Hermitian norm |ψ|.
    #[inline(always)]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Scale by a complex factor.
    #[inline(always)]
    pub fn scale(self, c: Complex64) -> Self {
        Self::new(c * self.f, c * self.g)
    }

    /// Scale by a real factor.
    #[inline(always)]
    pub fn scale_re(self, s: f64) -> Self {
        Self::new(s * self.f, s * self.g)
    }
}

impl std::ops::Add for Spinor {
    type Output = Spinor;
    #[inline(always)]
    fn add(self, rhs: Spinor) -> Spinor {
        Spinor::new(self.f + rhs.f, self.g + rhs.g)
    }
}

impl std::ops::Sub for Spinor {
    type Output = Spinor;
    #[inline(always)]
    fn sub(self, rhs: Spinor) -> Spinor {
        Spinor::new(self.f - rhs.f, self.g - rhs.g)
    }
}

/// Spinors serialize as `{"f": [re, im], "g": [re, im]}` — a fixed layout
/// that keeps JSON reports byte-reproducible.
impl Serialize for Spinor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            f: [f64; 2],
            g: [f64; 2],
        }
        Repr {
            f: [self.f.re, self.f.im],
            g: [self.g.re, self.g.im],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Spinor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            f: [f64; 2],
            g: [f64; 2],
        }
        let r = Repr::deserialize(deserializer)?;
        let s = Spinor::new(
            Complex64::new(r.f[0], r.f[1]),
            Complex64::new(r.g[0], r.g[1]),
        );
        if !(s.f.is_finite() && s.g.is_finite()) {
            return Err(D::Error::custom("spinor components must be finite"));
        }
        Ok(s)
    }
}

/// Clifford multiplication of a real tangent vector with a spinor:
/// (x₁·e₁ + x₂·e₂)·ψ with the frame matrices above. Componentwise,
///
/// ```text
///   v · (f, g) = ((x₁ + i·x₂)·g, -(x₁ - i·x₂)·f)
/// ```
#[inline(always)]
pub fn clifford_mul(v: Vector2, psi: Spinor) -> Spinor {
    let z = Complex64::new(v.x1, v.x2);
    Spinor::new(z * psi.g, -z.conj() * psi.f)
}

/// Clifford multiplication by a complex-coefficient vector a·e₁ + b·e₂,
/// defined by complex-linear extension: a·(e₁·ψ) + b·(e₂·ψ).
///
/// The two covectors needed by the quadratic differential are
/// dz = e₁ + i·e₂ (a = 1, b = i) and dz̄ = e₁ - i·e₂ (a = 1, b = -i).
#[inline(always)]
pub fn clifford_mul_complex(a: Complex64, b: Complex64, psi: Spinor) -> Spinor {
    // e₁·ψ = (g, -f),  e₂·ψ = (i·g, i·f)
    let i = Complex64::I;
    Spinor::new(
        a * psi.g + b * (i * psi.g),
        a * (-psi.f) + b * (i * psi.f),
    )
}

/// dz·ψ = (e₁ + i·e₂)·ψ = (0, -2f).
#[inline(always)]
pub fn dz_mul(psi: Spinor) -> Spinor {
    Spinor::new(Complex64::new(0.0, 0.0), -2.0 * psi.f)
}

/// dz̄·ψ = (e₁ - i·e₂)·ψ = (2g, 0).
#[inline(always)]
pub fn dzbar_mul(psi: Spinor) -> Spinor {
    Spinor::new(2.0 * psi.g, Complex64::new(0.0, 0.0))
}

/// Hermitian inner product ⟨ψ, φ⟩ = f_ψ·conj(f_φ) + g_ψ·conj(g_φ).
///
/// Complex-linear in `psi`, conjugate-linear in `phi`, and conjugate
/// symmetric: ⟨φ, ψ⟩ = conj⟨ψ, φ⟩.
#[inline(always)]
pub fn inner(psi: Spinor, phi: Spinor) -> Complex64 {
    psi.f * phi.f.conj() + psi.g * phi.g.conj()
}

/// Killing spinor of the round sphere in the stereographic chart:
///
/// ```text
///   ψ_v(x) = (v + x·v) / sqrt(1 + |x|²)
/// ```
///
/// For a unit spinor v this has unit norm at every point:
/// ⟨v + x·v, v + x·v⟩ = 1 + |x|² because Re⟨v, x·v⟩ = 0 and
/// ⟨x·v, x·v⟩ = |x|²·|v|².
#[inline]
pub fn killing_spinor(v: Spinor, x: Vector2) -> Spinor {
    let w = v + clifford_mul(x, v);
    w.scale_re(1.0 / (1.0 + x.norm_sqr()).sqrt())
}
