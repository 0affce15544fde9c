//! Explicit solution families of the super-Liouville system.
//!
//! # Scalar bubble (flat plane, ψ ≡ 0)
//!
//! ```text
//!   u(x) = log( √2·λ / (1 + λ²|x - x₀|²) ),        λ > 0,
//! ```
//!
//! solving -Δu = 2e^{2u} with total mass ∫_{ℝ²} e^{2u} dx = 2π.
//!
//! # Spinor bubble (flat plane, coupled)
//!
//! ```text
//!   u(x) = log( 2λ / (1 + λ²|x - x₀|²) ),
//!   ψ(x) = √λ·√2 · ( v + λ(x - x₀)·v ) / (1 + λ²|x - x₀|²),
//! ```
//!
//! where v is a constant unit spinor and (x - x₀)·v is Clifford
//! multiplication. The pair satisfies
//!
//! ```text
//!   -Δu = 2e^{2u} - e^{u}|ψ|²,    D̸ψ = -e^{u}ψ,    |ψ|² = e^{u},
//! ```
//!
//! the last identity because ⟨v, x·v⟩ is purely imaginary (Clifford
//! multiplication by a vector is skew-Hermitian), so the cross terms drop
//! out of |v + λ(x-x₀)·v|² = (1 + λ²|x-x₀|²)|v|².
//!
//! # Sphere solution from a Killing spinor
//!
//! On the round sphere (curvature K ≡ 1, stereographic chart
//! ρ = 4/(1+|x|²)², λ_c = √ρ = 2/(1+|x|²)) the intrinsic pair
//!
//! ```text
//!   u_int ≡ 0,    ψ_int(x) = (v + x·v) / √(1+|x|²)
//! ```
//!
//! solves the curved system; ψ_int is the Killing spinor of direction v.
//! Sphere pairs store the chart-dressed fields (see the geometry module),
//!
//! ```text
//!   u = u_int + ln λ_c = log( 2/(1+|x|²) ),
//!   ψ = λ_c^{1/2} ψ_int = √2·(v + x·v)/(1+|x|²),
//! ```
//!
//! which coincide *exactly* with the λ = 1 spinor bubble centered at the
//! origin — the analytic content of "the sphere solution is the conformal
//! image of the flat bubble".

use crate::clifford2d::{clifford_mul, Spinor, Vector2};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Metric, SolutionPair};
use crate::operators::{ScalarField, SpinorField};

/// Tolerance on | |v| - 1 | for spin directions.
const UNIT_SPINOR_TOL: f64 = 1e-12;

fn check_unit_spinor(v: Spinor) -> Result<()> {
    let norm = v.norm();
    if (norm - 1.0).abs() > UNIT_SPINOR_TOL {
        return Err(Error::InvalidSpinDirection { norm });
    }
    Ok(())
}

/// The scalar bubble u = log(√2λ/(1+λ²|x-x₀|²)), ψ ≡ 0, on a flat grid.
///
/// Panics if `lambda` is not strictly positive (programmer error; CLI
/// configuration validates scales before reaching this point).
pub fn scalar_bubble(grid: Grid, lambda: f64, center: Vector2) -> SolutionPair {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "bubble scale must be positive and finite, got {lambda}"
    );
    let u = ScalarField::from_fn(grid, |x| {
        let r2 = (x - center).norm_sqr();
        (std::f64::consts::SQRT_2 * lambda / (1.0 + lambda * lambda * r2)).ln()
    });
    SolutionPair::new(grid, Metric::Flat, u, SpinorField::zeros(grid))
}

/// The coupled spinor bubble with scale `lambda`, center `x₀`, and unit
/// spin direction `v`; see the module docs for the formulas.
///
/// Returns [`Error::InvalidSpinDirection`] when `v` is not a unit spinor.
pub fn spinor_bubble(grid: Grid, lambda: f64, center: Vector2, v: Spinor) -> Result<SolutionPair> {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "bubble scale must be positive and finite, got {lambda}"
    );
    check_unit_spinor(v)?;
    let u = ScalarField::from_fn(grid, |x| {
        let r2 = (x - center).norm_sqr();
        (2.0 * lambda / (1.0 + lambda * lambda * r2)).ln()
    });
    let amp = lambda.sqrt() * std::f64::consts::SQRT_2;
    let psi = SpinorField::from_fn(grid, |x| {
        let y = x - center;
        let denom = 1.0 + lambda * lambda * y.norm_sqr();
        (v + clifford_mul(y * lambda, v)).scale_re(amp / denom)
    });
    Ok(SolutionPair::new(grid, Metric::Flat, u, psi))
}

/// The round-sphere solution generated by the Killing spinor of direction
/// `v`, stored in the stereographic chart (metric preset `sphere`).
///
/// The stored fields equal the λ = 1 spinor bubble centered at the origin;
/// see the module docs.
pub fn sphere_killing_solution(grid: Grid, v: Spinor) -> Result<SolutionPair> {
    check_unit_spinor(v)?;
    let u = ScalarField::from_fn(grid, |x| (2.0 / (1.0 + x.norm_sqr())).ln());
    let psi = SpinorField::from_fn(grid, |x| {
        let denom = 1.0 + x.norm_sqr();
        (v + clifford_mul(x, v)).scale_re(std::f64::consts::SQRT_2 / denom)
    });
    Ok(SolutionPair::new(grid, Metric::Sphere, u, psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{dirac, exp_u};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    const V0: Spinor = Spinor {
        f: Complex64::new(1.0, 0.0),
        g: Complex64::new(0.0, 0.0),
    };

    #[test]
    fn scalar_bubble_profile_values() {
        let g = Grid::square(-2.0, 2.0, 33).unwrap();
        let pair = scalar_bubble(g, 1.0, Vector2::ZERO);
        // u(0) = log √2; u at |x|=1 is log(√2/2) = -½log 2.
        let c = g.idx(16, 16);
        assert_abs_diff_eq!(pair.u.values[c], 2.0_f64.ln() / 2.0, epsilon = 1e-14);
        let e = g.idx(24, 16); // x = (1, 0)
        assert_abs_diff_eq!(pair.u.values[e], -(2.0_f64.ln()) / 2.0, epsilon = 1e-14);
        assert_eq!(pair.psi.inf_norm(), 0.0);
    }

    #[test]
    fn spinor_bubble_norm_identity() {
        // |ψ|² = e^u pointwise, an exact algebraic identity of the family.
        let g = Grid::square(-3.0, 3.0, 41).unwrap();
        let v = Spinor::from_reals(0.6, 0.8);
        let pair = spinor_bubble(g, 2.0, Vector2::new(0.25, -0.5), v).unwrap();
        for idx in 0..g.len() {
            assert_abs_diff_eq!(
                pair.psi.values[idx].norm_sqr(),
                exp_u(pair.u.values[idx]),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn spinor_bubble_center_values() {
        let g = Grid::square(-2.0, 2.0, 33).unwrap();
        let lambda = 4.0;
        let pair = spinor_bubble(g, lambda, Vector2::ZERO, V0).unwrap();
        let c = g.idx(16, 16);
        assert_abs_diff_eq!(pair.u.values[c], (2.0 * lambda).ln(), epsilon = 1e-14);
        // ψ(0) = √(2λ)·v
        let psi0 = pair.psi.values[c];
        assert_abs_diff_eq!(psi0.f.re, (2.0 * lambda).sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(psi0.f.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(psi0.g.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn spinor_bubble_rejects_non_unit_direction() {
        let g = Grid::square(-1.0, 1.0, 9).unwrap();
        let bad = Spinor::from_reals(1.0, 1.0); // |v| = √2
        match spinor_bubble(g, 1.0, Vector2::ZERO, bad) {
            Err(Error::InvalidSpinDirection { norm }) => {
                assert_abs_diff_eq!(norm, 2.0_f64.sqrt(), epsilon = 1e-14)
            }
            other => panic!("expected InvalidSpinDirection, got {other:?}"),
        }
    }

    #[test]
    fn dirac_equation_at_bubble_center() {
        // D̸ψ = -e^u ψ; at the center of the λ=1 bubble the right side is
        // -2√2·v. Verified to stencil accuracy O(h²).
        let g = Grid::square(-1.0, 1.0, 65).unwrap();
        let pair = spinor_bubble(g, 1.0, Vector2::ZERO, V0).unwrap();
        let d = dirac(&pair.psi);
        let c = g.idx(32, 32);
        let expected = -2.0 * std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(d.values[c].f.re, expected, epsilon = 5e-3);
        assert_abs_diff_eq!(d.values[c].f.im, 0.0, epsilon = 5e-3);
        assert_abs_diff_eq!(d.values[c].g.norm(), 0.0, epsilon = 5e-3);
    }

    #[test]
    fn sphere_solution_matches_unit_bubble_chart() {
        // The chart-dressed sphere fields coincide with the λ=1 spinor
        // bubble at the origin, node for node.
        let g = Grid::square(-2.0, 2.0, 33).unwrap();
        let v = Spinor::from_reals(0.0, 1.0);
        let sphere = sphere_killing_solution(g, v).unwrap();
        let bubble = spinor_bubble(g, 1.0, Vector2::ZERO, v).unwrap();
        for idx in 0..g.len() {
            assert_abs_diff_eq!(
                sphere.u.values[idx],
                bubble.u.values[idx],
                epsilon = 1e-15
            );
            let d = sphere.psi.values[idx] - bubble.psi.values[idx];
            assert_abs_diff_eq!(d.norm(), 0.0, epsilon = 1e-15);
        }
        assert!(matches!(sphere.metric, Metric::Sphere));
    }

    #[test]
    fn sphere_solution_rejects_non_unit_direction() {
        let g = Grid::square(-1.0, 1.0, 9).unwrap();
        assert!(matches!(
            sphere_killing_solution(g, Spinor::from_reals(0.3, 0.0)),
            Err(Error::InvalidSpinDirection { .. })
        ));
    }
}
