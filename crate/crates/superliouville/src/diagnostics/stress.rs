//! The holomorphic quadratic differential T(z) and the stress tensor T_{αβ}.
//!
//! For a solution pair on a constant-curvature background,
//!
//! ```text
//!   T(z) = (∂_z u)² − ∂_z² u + ¼⟨ψ, dz·∂_z̄ψ⟩ + ¼⟨dz̄·∂_z ψ, ψ⟩
//! ```
//!
//! is holomorphic. Expanding the Clifford actions dz·(f,g) = (0, −2f) and
//! dz̄·(f,g) = (2g, 0) collapses the two spinor terms to
//! ½(∂_z g·conj(f) − g·conj(∂_z̄ f)).
//!
//! The real tensor behind it is
//!
//! ```text
//!   T_{αβ} = 2 u_α u_β − δ_{αβ}|∇u|² − 2 u_{αβ} + δ_{αβ}Δu
//!            + 2 Re⟨ψ, e_α·∂_β ψ⟩ + δ_{αβ} e^u|ψ|²
//! ```
//!
//! which on solutions is symmetric, trace-free (the trace equals
//! 2 Re⟨ψ, D̸ψ + e^uψ⟩, i.e. a residual), and divergence-free, with
//! T(z) = ¼(T₁₁ − i T₁₂). The [`StressTensor`] fields store the
//! symmetrized, trace-free projection so those two identities hold by
//! construction; the raw trace is kept as a residual diagnostic.
//!
//! Sphere pairs are stored in chart form (the conformal factor absorbed
//! into u and ψ), so one flat-coordinate evaluation covers both presets;
//! the gate on [`Metric::Custom`] pairs is by preset, not by sampling the
//! curvature.

use crate::clifford2d::{clifford_mul, inner, Spinor, Vector2};
use crate::error::{Error, Result};
use crate::geometry::{Metric, SolutionPair};
use crate::operators::{
    dx_dy_c64, dx_dy_f64, dz, dz_complex, dzbar_complex, exp_u, residual_inf_norms,
    spinor_components, ComplexField, ScalarField, INTERIOR_RING,
};
use num_complex::Complex64;

/// Symmetric trace-free stress tensor on the discrete interior.
///
/// `t22 = −t11` and the single off-diagonal field represent the projected
/// tensor; `trace_residual` holds the raw trace T₁₁ + T₂₂ before
/// projection (O(h²) on solutions, the size of the Dirac residual
/// otherwise).
#[derive(Debug, Clone)]
pub struct StressTensor {
    pub t11: ScalarField,
    pub t12: ScalarField,
    pub t22: ScalarField,
    pub trace_residual: ScalarField,
}

fn require_constant_curvature(pair: &SolutionPair) -> Result<()> {
    match pair.metric {
        Metric::Flat | Metric::Sphere => Ok(()),
        Metric::Custom { .. } => Err(Error::NonConstantCurvature),
    }
}

/// Classical 3-point second derivatives (u_xx, u_yy, u_xy), filled on the
/// ring-2 interior to match the first-derivative stencils.
fn second_derivatives(u: &ScalarField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = u.grid;
    let (nx, ny) = (g.nx, g.ny);
    let inv_h2 = 1.0 / (g.h * g.h);
    let mut uxx = vec![0.0; u.values.len()];
    let mut uyy = vec![0.0; u.values.len()];
    let mut uxy = vec![0.0; u.values.len()];
    if nx < 5 || ny < 5 {
        return (uxx, uyy, uxy);
    }
    let v = &u.values;
    for j in INTERIOR_RING..ny - INTERIOR_RING {
        for i in INTERIOR_RING..nx - INTERIOR_RING {
            let idx = j * nx + i;
            uxx[idx] = (v[idx + 1] - 2.0 * v[idx] + v[idx - 1]) * inv_h2;
            uyy[idx] = (v[idx + nx] - 2.0 * v[idx] + v[idx - nx]) * inv_h2;
            uxy[idx] = (v[idx + nx + 1] - v[idx + nx - 1] - v[idx - nx + 1]
                + v[idx - nx - 1])
                * (0.25 * inv_h2);
        }
    }
    (uxx, uyy, uxy)
}

/// T(z) on the ring-2 interior (zero on the two outer rings).
///
/// Errors with [`Error::NonConstantCurvature`] unless the metric is the
/// flat or sphere preset.
pub fn compute_t(pair: &SolutionPair) -> Result<ComplexField> {
    require_constant_curvature(pair)?;
    let g = pair.grid;
    let du = dz(&pair.u);
    let (uxx, uyy, uxy) = second_derivatives(&pair.u);

    let (f, gg) = spinor_components(&pair.psi);
    let f_field = ComplexField { grid: g, values: f };
    let g_field = ComplexField { grid: g, values: gg };
    let dz_g = dz_complex(&g_field);
    let dzbar_f = dzbar_complex(&f_field);

    let mut out = ComplexField::zeros(g);
    if g.nx < 5 || g.ny < 5 {
        return Ok(out);
    }
    for j in INTERIOR_RING..g.ny - INTERIOR_RING {
        for i in INTERIOR_RING..g.nx - INTERIOR_RING {
            let idx = g.idx(i, j);
            let dzz = Complex64::new(0.25 * (uxx[idx] - uyy[idx]), -0.5 * uxy[idx]);
            let spin = 0.5
                * (dz_g.values[idx] * f_field.values[idx].conj()
                    - g_field.values[idx] * dzbar_f.values[idx].conj());
            out.values[idx] = du.values[idx] * du.values[idx] - dzz + spin;
        }
    }
    Ok(out)
}

/// Max over the deep interior of |∂_z̄ T| (the curvature term ¼∂_z K
/// vanishes for the constant-curvature presets).
///
/// Holomorphy of T only holds on solutions, so the pair must pass a
/// residual gate: [`Error::NotASolution`] if its Liouville residual
/// exceeds `gate`.
pub fn holomorphy_residual(pair: &SolutionPair, gate: f64) -> Result<f64> {
    let (ru, _) = residual_inf_norms(pair);
    if !(ru <= gate) {
        return Err(Error::NotASolution { residual: ru, gate });
    }
    let t = compute_t(pair)?;
    let dt = dzbar_complex(&t);
    // T is valid on ring-2; one more derivative layer pushes the valid
    // region in by another two rings.
    Ok(dt.inf_norm_inset(2 * INTERIOR_RING))
}

/// The tensor T_{αβ} in symmetrized trace-free form, plus the raw-trace
/// residual field. Constant-curvature presets only.
pub fn stress_tensor(pair: &SolutionPair) -> Result<StressTensor> {
    require_constant_curvature(pair)?;
    let g = pair.grid;
    let (ux, uy) = dx_dy_f64(&pair.u);
    let (uxx, uyy, uxy) = second_derivatives(&pair.u);
    let (f, gg) = spinor_components(&pair.psi);
    let (fx, fy) = dx_dy_c64(g, &f);
    let (gx, gy) = dx_dy_c64(g, &gg);

    let mut t11 = ScalarField::zeros(g);
    let mut t12 = ScalarField::zeros(g);
    let mut t22 = ScalarField::zeros(g);
    let mut trace = ScalarField::zeros(g);
    if g.nx < 5 || g.ny < 5 {
        return Ok(StressTensor { t11, t12, t22, trace_residual: trace });
    }

    let e1 = Vector2::new(1.0, 0.0);
    let e2 = Vector2::new(0.0, 1.0);
    for j in INTERIOR_RING..g.ny - INTERIOR_RING {
        for i in INTERIOR_RING..g.nx - INTERIOR_RING {
            let idx = g.idx(i, j);
            let psi = pair.psi.values[idx];
            let dpsi_x = Spinor::new(fx[idx], gx[idx]);
            let dpsi_y = Spinor::new(fy[idx], gy[idx]);
            let p11 = 2.0 * inner(psi, clifford_mul(e1, dpsi_x)).re;
            let p22 = 2.0 * inner(psi, clifford_mul(e2, dpsi_y)).re;
            let p12 = 2.0 * inner(psi, clifford_mul(e1, dpsi_y)).re;
            let p21 = 2.0 * inner(psi, clifford_mul(e2, dpsi_x)).re;
            let metric_term = exp_u(pair.u.values[idx]) * psi.norm_sqr();

            let a11 = ux[idx] * ux[idx] - uy[idx] * uy[idx] - uxx[idx] + uyy[idx]
                + p11
                + metric_term;
            let a22 = uy[idx] * uy[idx] - ux[idx] * ux[idx] - uyy[idx] + uxx[idx]
                + p22
                + metric_term;
            let a12 = 2.0 * ux[idx] * uy[idx] - 2.0 * uxy[idx] + p12;
            let a21 = 2.0 * ux[idx] * uy[idx] - 2.0 * uxy[idx] + p21;

            t11.values[idx] = 0.5 * (a11 - a22);
            t12.values[idx] = 0.5 * (a12 + a21);
            t22.values[idx] = -0.5 * (a11 - a22);
            trace.values[idx] = a11 + a22;
        }
    }
    Ok(StressTensor { t11, t12, t22, trace_residual: trace })
}

/// Max over the deep interior of |Σ_α δ_α T_{αβ}| across both β
/// components (the background term ∂_β K vanishes for the presets).
pub fn divergence_residual(st: &StressTensor) -> f64 {
    let (t11x, t11y) = dx_dy_f64(&st.t11);
    let (t12x, t12y) = dx_dy_f64(&st.t12);
    let g = st.t11.grid;
    let ring = 2 * INTERIOR_RING;
    let mut m = 0.0f64;
    if g.nx < 2 * ring + 1 || g.ny < 2 * ring + 1 {
        return 0.0;
    }
    for j in ring..g.ny - ring {
        for i in ring..g.nx - ring {
            let idx = g.idx(i, j);
            // with T21 = T12 and T22 = −T11:
            let div1 = t11x[idx] + t12y[idx];
            let div2 = t12x[idx] - t11y[idx];
            m = m.max(div1.abs()).max(div2.abs());
        }
    }
    m
}
