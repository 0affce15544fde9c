//! Grids, conformally flat backgrounds, and the conformal/Kelvin
//! transformation laws for solution pairs.
//!
//! # Backgrounds and chart storage
//!
//! Two preset backgrounds are supported:
//!
//! * `flat`: ρ ≡ 1, K_g ≡ 0 — fields are stored as-is;
//! * `sphere`: the round sphere in the stereographic chart, metric
//!   ρ(x)|dx|² with ρ(x) = 4/(1+|x|²)² and K_g ≡ 1.
//!
//! Sphere pairs are stored in their *flat-chart dressing*: with the chart
//! conformal factor λ(x) = √ρ = 2/(1+|x|²), the stored fields are
//!
//! ```text
//!   u_stored = u_intrinsic + ln λ,     ψ_stored = λ^{1/2} · ψ_intrinsic.
//! ```
//!
//! Under this dressing the curved system turns *exactly* into the flat one
//! for the stored fields: the curvature term is absorbed by the chart
//! identity -Δ ln λ = ρ·K_g, which the sphere factor satisfies in closed
//! form. All finite-difference work therefore happens with flat-coordinate
//! stencils; the metric only enters through area elements and intrinsic
//! renormalizations.
//!
//! # Conformal transformations
//!
//! For a translation or dilation φ(x) = s·x + b of the flat plane the pair
//! transforms with the derivative factor μ = |dφ| = s:
//!
//! ```text
//!   ũ = u∘φ + ln μ,        ψ̃ = μ^{1/2} · (ψ∘φ),
//! ```
//!
//! equivalently ũ = u∘φ - ln λ with λ = 1/μ the conformal factor of the
//! inverse map. This is the unique convention under which the flat system,
//! its energy, and the explicit bubble families are preserved: e.g. the
//! scalar bubble u = log(√2/(1+|x|²)) maps under φ(x) = 2x to
//! log(2√2/(1+4|x|²)), the scale-2 member of the family, with
//! ũ(0) = log √2 + ln 2.
//!
//! # Kelvin transformation
//!
//! The inversion x ↦ x/|x|² acts on pairs by
//!
//! ```text
//!   v(x) = u(x/|x|²) - 2 ln|x|,        φ(x) = |x|^{-1} · ψ(x/|x|²),
//! ```
//!
//! relating behaviour at infinity to behaviour at the puncture. It is an
//! involution, preserves the e^{2u}- and |ψ|⁴-masses between reciprocal
//! annuli, and maps the explicit bubbles to bounded fields near 0.

pub mod interp;

use crate::clifford2d::{Spinor, Vector2};
use crate::error::{Error, Result};
use crate::operators::{ScalarField, SpinorField};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Uniform tensor grid: nodes at origin + (i·h, j·h), 0 ≤ i < nx, 0 ≤ j < ny.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRaw", into = "GridRaw")]
pub struct Grid {
    pub origin: Vector2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRaw {
    origin: [f64; 2],
    h: f64,
    nx: usize,
    ny: usize,
}

impl TryFrom<GridRaw> for Grid {
    type Error = Error;
    fn try_from(r: GridRaw) -> Result<Grid> {
        Grid::new(Vector2::new(r.origin[0], r.origin[1]), r.h, r.nx, r.ny)
    }
}

impl From<Grid> for GridRaw {
    fn from(g: Grid) -> GridRaw {
        GridRaw {
            origin: [g.origin.x1, g.origin.x2],
            h: g.h,
            nx: g.nx,
            ny: g.ny,
        }
    }
}

impl Grid {
    /// Validated constructor: at least 3 nodes per axis and a positive,
    /// finite spacing. All library code builds grids through here, so the
    /// stencil and interpolation kernels can assume these invariants.
    pub fn new(origin: Vector2, h: f64, nx: usize, ny: usize) -> Result<Grid> {
        if nx < 3 || ny < 3 || !(h > 0.0) || !h.is_finite() || !origin.x1.is_finite() || !origin.x2.is_finite() {
            return Err(Error::GridTooSmall { nx, ny });
        }
        Ok(Grid { origin, h, nx, ny })
    }

    /// Square grid over [min, max]² with n nodes per axis.
    pub fn square(min: f64, max: f64, n: usize) -> Result<Grid> {
        if n < 3 || !(max > min) {
            return Err(Error::GridTooSmall { nx: n, ny: n });
        }
        Grid::new(Vector2::new(min, min), (max - min) / (n - 1) as f64, n, n)
    }

    #[inline(always)]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline(always)]
    pub fn is_empty(&self) -> bool {
        false // validated grids always hold at least 3x3 nodes
    }

    /// Row-major node index: x₁ varies fastest.
    #[inline(always)]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline(always)]
    pub fn node(&self, i: usize, j: usize) -> Vector2 {
        Vector2::new(
            self.origin.x1 + i as f64 * self.h,
            self.origin.x2 + j as f64 * self.h,
        )
    }

    /// Far corner of the hull: origin + ((nx-1)h, (ny-1)h).
    pub fn max_corner(&self) -> Vector2 {
        self.node(self.nx - 1, self.ny - 1)
    }

    /// Geometric centre of the hull.
    pub fn center(&self) -> Vector2 {
        let m = self.max_corner();
        Vector2::new(0.5 * (self.origin.x1 + m.x1), 0.5 * (self.origin.x2 + m.x2))
    }

    /// Radius of the largest disk about the hull centre contained in the hull.
    pub fn inscribed_radius(&self) -> f64 {
        let m = self.max_corner();
        (0.5 * (m.x1 - self.origin.x1)).min(0.5 * (m.x2 - self.origin.x2))
    }

    /// Whether `p` lies in the closed hull, with floating-point slack.
    pub fn contains(&self, p: Vector2) -> bool {
        let m = self.max_corner();
        let tol = 1e-9 * self.h;
        p.x1 >= self.origin.x1 - tol
            && p.x1 <= m.x1 + tol
            && p.x2 >= self.origin.x2 - tol
            && p.x2 <= m.x2 + tol
    }
}

/// Background geometry: conformal factor ρ and Gaussian curvature K_g.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// ρ ≡ 1, K_g ≡ 0.
    Flat,
    /// Stereographic chart of the round sphere: ρ = 4/(1+|x|²)², K_g ≡ 1.
    Sphere,
    /// Arbitrary node-sampled background (not constant curvature as far as
    /// the diagnostics are concerned — the constant-curvature gate inspects
    /// the preset, it does not sample K numerically).
    Custom { rho: ScalarField, k: ScalarField },
}

impl Metric {
    /// Conformal factor ρ(x) of a preset. Custom metrics are node-sampled
    /// and queried through their fields instead.
    pub fn rho_at(&self, x: Vector2) -> f64 {
        match self {
            Metric::Flat => 1.0,
            Metric::Sphere => {
                let d = 1.0 + x.norm_sqr();
                4.0 / (d * d)
            }
            Metric::Custom { .. } => {
                panic!("rho_at is defined for preset metrics; sample the custom field instead")
            }
        }
    }

    /// Gaussian curvature of a constant-curvature preset.
    pub fn constant_curvature(&self) -> Option<f64> {
        match self {
            Metric::Flat => Some(0.0),
            Metric::Sphere => Some(1.0),
            Metric::Custom { .. } => None,
        }
    }

    /// Chart conformal factor λ(x) = √ρ(x) used in the sphere dressing.
    pub fn chart_factor(&self, x: Vector2) -> f64 {
        match self {
            Metric::Flat => 1.0,
            Metric::Sphere => 2.0 / (1.0 + x.norm_sqr()),
            Metric::Custom { .. } => {
                panic!("chart_factor is defined for preset metrics")
            }
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let name = match self {
            Metric::Flat => "flat",
            Metric::Sphere => "sphere",
            Metric::Custom { .. } => "custom",
        };
        serializer.serialize_str(name)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        match s.as_str() {
            "flat" => Ok(Metric::Flat),
            "sphere" => Ok(Metric::Sphere),
            other => Err(serde::de::Error::custom(format!(
                "unknown metric preset {other:?}: expected \"flat\" or \"sphere\""
            ))),
        }
    }
}

/// Flat preset: ρ ≡ 1, K_g ≡ 0. Presets are closed forms, independent of
/// the grid they are later evaluated on.
pub fn flat_metric(_grid: &Grid) -> Metric {
    Metric::Flat
}

/// Sphere preset in the stereographic chart: ρ = 4/(1+|x|²)², K_g ≡ 1.
pub fn sphere_metric(_grid: &Grid) -> Metric {
    Metric::Sphere
}

/// A candidate pair (u, ψ) on its grid and background.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub grid: Grid,
    pub metric: Metric,
    pub u: ScalarField,
    pub psi: SpinorField,
}

impl SolutionPair {
    /// Assemble a pair, checking that both fields live on `grid`.
    pub fn new(grid: Grid, metric: Metric, u: ScalarField, psi: SpinorField) -> SolutionPair {
        assert_eq!(u.grid, grid, "u field grid must match the pair grid");
        assert_eq!(psi.grid, grid, "psi field grid must match the pair grid");
        if let Metric::Custom { rho, k } = &metric {
            assert_eq!(rho.grid, grid, "custom rho grid must match the pair grid");
            assert_eq!(k.grid, grid, "custom K grid must match the pair grid");
        }
        SolutionPair { grid, metric, u, psi }
    }
}

/// A conformal self-map of the plane: a translation or a dilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConformalMapRaw", into = "ConformalMapRaw")]
pub enum ConformalMap {
    Translation { shift: Vector2 },
    Dilation { scale: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConformalMapRaw {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

impl TryFrom<ConformalMapRaw> for ConformalMap {
    type Error = String;
    fn try_from(r: ConformalMapRaw) -> std::result::Result<Self, String> {
        match r.kind.as_str() {
            "translation" => {
                let shift = r.shift.ok_or("translation requires a \"shift\"")?;
                if r.scale.is_some() {
                    return Err("translation takes no \"scale\"".into());
                }
                Ok(ConformalMap::Translation {
                    shift: Vector2::new(shift[0], shift[1]),
                })
            }
            "dilation" => {
                let scale = r.scale.ok_or("dilation requires a \"scale\"")?;
                if r.shift.is_some() {
                    return Err("dilation takes no \"shift\"".into());
                }
                if !(scale > 0.0) || !scale.is_finite() {
                    return Err(format!("dilation scale must be positive and finite, got {scale}"));
                }
                Ok(ConformalMap::Dilation { scale })
            }
            other => Err(format!(
                "unknown conformal map kind {other:?}: expected \"translation\" or \"dilation\""
            )),
        }
    }
}

impl From<ConformalMap> for ConformalMapRaw {
    fn from(m: ConformalMap) -> ConformalMapRaw {
        match m {
            ConformalMap::Translation { shift } => ConformalMapRaw {
                kind: "translation".into(),
                shift: Some([shift.x1, shift.x2]),
                scale: None,
            },
            ConformalMap::Dilation { scale } => ConformalMapRaw {
                kind: "dilation".into(),
                shift: None,
                scale: Some(scale),
            },
        }
    }
}

impl ConformalMap {
    /// φ(x).
    #[inline]
    pub fn apply(&self, x: Vector2) -> Vector2 {
        match *self {
            ConformalMap::Translation { shift } => x + shift,
            ConformalMap::Dilation { scale } => x * scale,
        }
    }

    /// The inverse map φ⁻¹.
    pub fn inverse(&self) -> ConformalMap {
        match *self {
            ConformalMap::Translation { shift } => ConformalMap::Translation {
                shift: Vector2::new(-shift.x1, -shift.x2),
            },
            ConformalMap::Dilation { scale } => ConformalMap::Dilation { scale: 1.0 / scale },
        }
    }

    /// Constant derivative factor μ = |dφ| (1 for translations, the scale
    /// for dilations).
    #[inline]
    pub fn derivative_factor(&self) -> f64 {
        match *self {
            ConformalMap::Translation { .. } => 1.0,
            ConformalMap::Dilation { scale } => scale,
        }
    }

    /// The grid whose image under φ is exactly `grid`'s node set, i.e. the
    /// natural target grid for pulling fields back by φ.
    pub fn preimage_grid(&self, grid: Grid) -> Grid {
        match *self {
            ConformalMap::Translation { shift } => Grid {
                origin: grid.origin - shift,
                ..grid
            },
            ConformalMap::Dilation { scale } => Grid {
                origin: grid.origin * (1.0 / scale),
                h: grid.h / scale,
                ..grid
            },
        }
    }
}

/// Pull a pair back by a conformal map onto the natural (preimage) grid:
///
/// ```text
///   ũ(x) = u(φ(x)) + ln μ,     ψ̃(x) = μ^{1/2} · ψ(φ(x)),   μ = |dφ|.
/// ```
///
/// With the preimage target grid every target node maps exactly onto the
/// source hull, so the transform is total; field values are sampled by
/// bicubic interpolation (exact where φ lands on source nodes). The energy
/// satisfies E(ũ; D) = E(u; φ(D)) — truncation domains correspond under φ.
pub fn conformal_transform(pair: &SolutionPair, map: &ConformalMap) -> Result<SolutionPair> {
    let target = map.preimage_grid(pair.grid);
    conformal_transform_to(pair, map, target)
}

/// Same transformation law as [`conformal_transform`] but sampled on an
/// arbitrary caller-provided target grid. Fails with `OutOfDomain` if φ
/// maps any target node outside the source hull.
pub fn conformal_transform_to(
    pair: &SolutionPair,
    map: &ConformalMap,
    target: Grid,
) -> Result<SolutionPair> {
    let mu = map.derivative_factor();
    let ln_mu = mu.ln();
    let sqrt_mu = mu.sqrt();
    let mut u = ScalarField::zeros(target);
    let mut psi = SpinorField::zeros(target);
    for j in 0..target.ny {
        for i in 0..target.nx {
            let y = map.apply(target.node(i, j));
            let idx = target.idx(i, j);
            u.values[idx] = interp::sample_scalar(&pair.u, y)? + ln_mu;
            psi.values[idx] = interp::sample_spinor(&pair.psi, y)?.scale_re(sqrt_mu);
        }
    }
    Ok(SolutionPair::new(target, pair.metric.clone(), u, psi))
}

/// Kelvin transform of the stored fields sampled at a single point
/// (|x| must exceed `r_min` and x/|x|² must lie in the source hull):
///
/// ```text
///   v(x) = u(x/|x|²) - 2 ln|x|,      φ(x) = |x|^{-1} ψ(x/|x|²).
/// ```
///
/// The plain spinor law above (the default) preserves the pointwise norm
/// — and with it the scalar equation, the volume masses, and boundedness —
/// but not the Dirac equation: the inversion is orientation-reversing, so
/// the covariant spinor transformation must swap the half-spinor
/// components. With `clifford_factor` the law is replaced by that
/// Dirac-covariant variant,
///
/// ```text
///   φ(x) = ( g(x/|x|²)/ζ̄ , f(x/|x|²)/ζ ),      ζ = x₁ + i·x₂,
/// ```
///
/// equal to i·(x⊥/|x|²)·ψ(x/|x|²) with x⊥ = (x₂, −x₁), which maps
/// solutions of the coupled system to solutions (the λ = 1 spinor bubble
/// maps to its own negative). Both variants are involutive and have the
/// same pointwise norm.
pub fn kelvin_point(
    pair: &SolutionPair,
    x: Vector2,
    r_min: f64,
    clifford_factor: bool,
) -> Result<(f64, Spinor)> {
    let r = x.norm();
    if r <= r_min.max(0.0) || r == 0.0 {
        return Err(Error::SingularPoint { point: x });
    }
    let y = x.invert();
    let u = interp::sample_scalar(&pair.u, y)?;
    let psi = interp::sample_spinor(&pair.psi, y)?;
    let v = u - 2.0 * r.ln();
    let phi = if clifford_factor {
        // Dirac-covariant chirality swap (g/ζ̄, f/ζ); see the doc comment.
        let zeta = num_complex::Complex64::new(x.x1, x.x2);
        Spinor::new(psi.g / zeta.conj(), psi.f / zeta)
    } else {
        psi.scale_re(1.0 / r)
    };
    Ok((v, phi))
}

/// Kelvin transform of a pair onto an explicit target grid.
///
/// Every target node must stay outside the `r_min`-ball at the origin
/// (`SingularPoint` otherwise) and its inversion must land inside the
/// source hull (`OutOfDomain` otherwise). The result is a flat-metric pair:
/// the transform acts on the stored (flat-chart) fields.
pub fn kelvin_transform(pair: &SolutionPair, target: Grid, r_min: f64) -> Result<SolutionPair> {
    kelvin_transform_with(pair, target, r_min, false)
}

/// [`kelvin_transform`] with the spinor Clifford-rotation variant
/// selectable; see [`kelvin_point`].
pub fn kelvin_transform_with(
    pair: &SolutionPair,
    target: Grid,
    r_min: f64,
    clifford_factor: bool,
) -> Result<SolutionPair> {
    let mut u = ScalarField::zeros(target);
    let mut psi = SpinorField::zeros(target);
    for j in 0..target.ny {
        for i in 0..target.nx {
            let (v, phi) = kelvin_point(pair, target.node(i, j), r_min, clifford_factor)?;
            let idx = target.idx(i, j);
            u.values[idx] = v;
            psi.values[idx] = phi;
        }
    }
    Ok(SolutionPair::new(target, Metric::Flat, u, psi))
}
