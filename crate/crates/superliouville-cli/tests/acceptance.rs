//! Desk-scale acceptance checks: one test per quantitative claim the
//! library makes about the coupled Liouville–Dirac system. Each test
//! exercises public API only, asserts the stated tolerance, and prints a
//! single PASS line with the measured numbers.
//!
//! The checks are property-based: explicit solutions must satisfy the
//! discrete equations at the scheme's order, conserved charges must hit
//! their closed-form values, transforms must preserve what they claim to
//! preserve, and negative controls must stay loudly wrong.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use superliouville::blowup::{
    detect_concentration_with, generate_sequence, local_mass, BlowupConfig, Classification,
    Family, ScaleRule, SequenceSpec,
};
use superliouville::diagnostics::{
    asymptotic_fit_u, charge_alpha, compute_t, divergence_residual, green_convolve,
    holomorphy_residual, spinor_asymptotic_check, spinor_charge_xi0, stress_tensor, Tail,
};
use superliouville::geometry::{conformal_transform, kelvin_point, kelvin_transform};
use superliouville::operators::{
    exp_2u, integrate_nodes, residual, residual_inf_norms, ScalarField, SpinorField,
    INTERIOR_RING,
};
use superliouville::solutions::{scalar_bubble, spinor_bubble, sphere_killing_solution};
use superliouville::solver::{linearize, newton_solve, SolverConfig};
use superliouville::{ConformalMap, Grid, Metric, SolutionPair, Spinor, Vector2};

/// Canonical unit spin direction (1, 0).
fn spin() -> Spinor {
    Spinor::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
}

/// Assert that `coarse/fine` sits in the second-order window 4x ± 20%,
/// treating pairs at the rounding floor as vacuously second-order (the
/// scalar bubble has an identically-zero spinor residual).
fn assert_halving_ratio(label: &str, coarse: f64, fine: f64) -> f64 {
    if coarse < 1e-13 && fine < 1e-13 {
        return f64::NAN;
    }
    let ratio = coarse / fine;
    assert!(
        (3.2..=4.8).contains(&ratio),
        "{label}: refinement ratio {ratio:.3} outside 4x ± 20% (coarse {coarse:.3e}, fine {fine:.3e})"
    );
    ratio
}

/// Smooth pseudo-random pair: a fixed-seed superposition of low-frequency
/// modes, nothing close to a solution of the coupled system.
fn random_smooth_pair(grid: Grid, seed: u64) -> SolutionPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for _ in 0..6 {
        modes.push((
            rng.gen_range(-0.6..0.6),
            rng.gen_range(0.5..2.5),
            rng.gen_range(0.5..2.5),
            rng.gen_range(0.0..PI),
        ));
    }
    let spinor_modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-0.8..0.8),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..PI),
            )
        })
        .collect();
    let u = ScalarField::from_fn(grid, |p| {
        modes
            .iter()
            .map(|&(a, kx, ky, ph)| a * (kx * p.x1 + ph).sin() * (ky * p.x2).cos())
            .sum()
    });
    let psi = SpinorField::from_fn(grid, |p| {
        let eval = |m: &(f64, f64, f64, f64), sh: f64| {
            m.0 * (m.1 * p.x1 + m.3 + sh).cos() * (m.2 * p.x2 - sh).sin()
        };
        Spinor::new(
            Complex64::new(eval(&spinor_modes[0], 0.0), eval(&spinor_modes[1], 0.4)),
            Complex64::new(eval(&spinor_modes[2], 0.9), eval(&spinor_modes[3], 1.3)),
        )
    });
    SolutionPair::new(grid, Metric::Flat, u, psi)
}

/// ∫∫ f(x) r dr dθ over the annulus r ∈ (r0, r1): Simpson in r (nr even
/// intervals), uniform periodic rule in θ.
fn annulus_mass_polar(r0: f64, r1: f64, nr: usize, nt: usize, mut f: impl FnMut(Vector2) -> f64) -> f64 {
    assert!(nr % 2 == 0 && nr >= 2 && nt >= 4 && r1 > r0 && r0 > 0.0);
    let hr = (r1 - r0) / nr as f64;
    let ht = 2.0 * PI / nt as f64;
    let mut total = 0.0;
    for k in 0..=nr {
        let r = r0 + k as f64 * hr;
        let wr = if k == 0 || k == nr {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let mut ring = 0.0;
        for m in 0..nt {
            let th = m as f64 * ht;
            ring += f(Vector2::new(r * th.cos(), r * th.sin()));
        }
        total += wr * r * ring;
    }
    total * hr / 3.0 * ht
}

/// Sup over nodes of the spinor distance |a - b|.
fn spinor_sup_diff(a: &SpinorField, b: &SpinorField) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| ((x.f - y.f).norm_sqr() + (x.g - y.g).norm_sqr()).sqrt())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// 1. Exact-solution residuals converge at second order
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_exact_solution_residuals() {
    let t0 = Instant::now();
    let grids: Vec<Grid> = [129usize, 257, 513]
        .iter()
        .map(|&n| Grid::square(-8.0, 8.0, n).unwrap())
        .collect();
    let families: [(&str, Box<dyn Fn(Grid) -> SolutionPair>); 3] = [
        ("scalar bubble", Box::new(|g| scalar_bubble(g, 1.0, Vector2::ZERO))),
        (
            "spinor bubble",
            Box::new(|g| spinor_bubble(g, 1.0, Vector2::ZERO, spin()).unwrap()),
        ),
        (
            "sphere Killing",
            Box::new(|g| sphere_killing_solution(g, spin()).unwrap()),
        ),
    ];

    let mut finest = Vec::new();
    for (name, build) in &families {
        let norms: Vec<(f64, f64)> = grids.iter().map(|&g| residual_inf_norms(&build(g))).collect();
        for k in 0..2 {
            assert_halving_ratio(&format!("{name} r_u"), norms[k].0, norms[k + 1].0);
            assert_halving_ratio(&format!("{name} r_psi"), norms[k].1, norms[k + 1].1);
        }
        let (ru, rp) = norms[2];
        assert!(ru < 1e-3, "{name}: r_u at 513^2 is {ru:.3e}, not < 1e-3");
        assert!(rp < 1e-3, "{name}: r_psi at 513^2 is {rp:.3e}, not < 1e-3");
        finest.push((name, ru, rp));
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 30.0, "residual sweep took {secs:.1} s, budget 30 s");
    println!(
        "criterion 01 (exact-solution residuals): PASS — 513^2 sup-norms {} ; halving ratios all in [3.2, 4.8]; {secs:.1} s",
        finest
            .iter()
            .map(|(n, ru, rp)| format!("{n}: r_u {ru:.2e} r_psi {rp:.2e}"))
            .collect::<Vec<_>>()
            .join(" | ")
    );
}

// ---------------------------------------------------------------------------
// 2. Charge quantization
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_charge_quantization() {
    let t0 = Instant::now();
    let grid = Grid::square(-100.0, 100.0, 1025).unwrap();

    let pair = spinor_bubble(grid, 1.0, Vector2::ZERO, spin()).unwrap();
    let alpha = charge_alpha(&pair, Tail::Fitted);
    let alpha_err = (alpha / (4.0 * PI) - 1.0).abs();
    assert!(
        alpha_err <= 0.01,
        "spinor-bubble alpha {alpha:.6} vs 4π: relative error {alpha_err:.3e} > 1%"
    );

    let scalar = scalar_bubble(grid, 1.0, Vector2::ZERO);
    let curvature_mass = integrate_nodes(grid, |_, _, idx| 2.0 * exp_2u(scalar.u.values[idx]));
    let volume_mass = integrate_nodes(grid, |_, _, idx| exp_2u(scalar.u.values[idx]));
    let cm_err = (curvature_mass / (4.0 * PI) - 1.0).abs();
    let vm_err = (volume_mass / (2.0 * PI) - 1.0).abs();
    assert!(cm_err <= 0.01, "∫2e^2u = {curvature_mass:.6} vs 4π: {cm_err:.3e} > 1%");
    assert!(vm_err <= 0.01, "∫e^2u = {volume_mass:.6} vs 2π: {vm_err:.3e} > 1%");

    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 60.0, "charge sweep took {secs:.1} s, budget 60 s");
    println!(
        "criterion 02 (charge quantization): PASS — alpha {alpha:.6} (err {alpha_err:.2e}), ∫2e^2u {curvature_mass:.6} (err {cm_err:.2e}), ∫e^2u {volume_mass:.6} (err {vm_err:.2e}); {secs:.1} s"
    );
}

// ---------------------------------------------------------------------------
// 3. Conformal invariance of the energy
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_conformal_invariance() {
    use superliouville::operators::energy_e;
    let grid = Grid::square(-8.0, 8.0, 513).unwrap();
    let pair = spinor_bubble(grid, 1.0, Vector2::ZERO, spin()).unwrap();
    let e0 = energy_e(&pair);
    assert!(e0.is_finite() && e0.abs() > 1e-2, "reference energy degenerate: {e0}");

    // Pull back by the dilation onto its preimage grid: truncation domains
    // correspond exactly under the map.
    let dilated = conformal_transform(&pair, &ConformalMap::Dilation { scale: 2.0 }).unwrap();
    let e_dil = energy_e(&dilated);
    let rel_dil = ((e0 - e_dil) / e0).abs();
    assert!(rel_dil <= 1e-3, "dilation energy mismatch {rel_dil:.3e} > 1e-3");

    let shifted = conformal_transform(
        &pair,
        &ConformalMap::Translation { shift: Vector2::new(0.3, -0.7) },
    )
    .unwrap();
    let e_tra = energy_e(&shifted);
    let rel_tra = ((e0 - e_tra) / e0).abs();
    assert!(rel_tra <= 1e-3, "translation energy mismatch {rel_tra:.3e} > 1e-3");

    println!(
        "criterion 03 (conformal invariance): PASS — E {e0:.9}, dilation rel diff {rel_dil:.2e}, translation rel diff {rel_tra:.2e}"
    );
}

// ---------------------------------------------------------------------------
// 4. The holomorphic quantity T(z)
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_holomorphic_quantity() {
    let ns = [129usize, 257, 513];
    let mut summary = Vec::new();

    for (name, build) in [
        (
            "scalar bubble",
            Box::new(|g: Grid| scalar_bubble(g, 1.0, Vector2::ZERO)) as Box<dyn Fn(Grid) -> SolutionPair>,
        ),
        (
            "spinor bubble",
            Box::new(|g: Grid| spinor_bubble(g, 1.0, Vector2::ZERO, spin()).unwrap()),
        ),
    ] {
        let mut tmax = Vec::new();
        let mut hol = Vec::new();
        for &n in &ns {
            let pair = build(Grid::square(-1.0, 1.0, n).unwrap());
            let t = compute_t(&pair).unwrap();
            tmax.push(t.inf_norm_inset(INTERIOR_RING));
            hol.push(holomorphy_residual(&pair, 1e-2).unwrap());
        }
        for k in 0..2 {
            let rt = tmax[k] / tmax[k + 1];
            let rh = hol[k] / hol[k + 1];
            assert!(rt >= 3.2, "{name}: T_max refinement ratio {rt:.2} below order 2");
            assert!(rh >= 3.2, "{name}: holomorphy ratio {rh:.2} below order 2");
        }
        assert!(tmax[2] < 1e-4, "{name}: T_max at 513^2 is {:.3e}", tmax[2]);
        assert!(hol[2] < 1e-4, "{name}: holomorphy residual at 513^2 is {:.3e}", hol[2]);
        summary.push(format!("{name}: T_max {:.2e}, dzbar T {:.2e}", tmax[2], hol[2]));
    }

    // Negative control: a generic smooth pair is far from holomorphic.
    let rnd = random_smooth_pair(Grid::square(-1.0, 1.0, 129).unwrap(), 42);
    let t_neg = compute_t(&rnd).unwrap().inf_norm_inset(INTERIOR_RING);
    let hol_neg = holomorphy_residual(&rnd, f64::INFINITY).unwrap();
    assert!(t_neg > 1e-1, "negative control T_max too small: {t_neg:.3e}");
    assert!(hol_neg > 1e-1, "negative control holomorphy too small: {hol_neg:.3e}");

    // Tensor form: trace-free storage, conservation law, and agreement of
    // the complex scalar with the tensor components.
    let mut div = Vec::new();
    let mut tdiff = Vec::new();
    let mut h_fine = 0.0;
    for &n in &ns {
        let g = Grid::square(-1.0, 1.0, n).unwrap();
        h_fine = g.h;
        let pair = spinor_bubble(g, 1.0, Vector2::ZERO, spin()).unwrap();
        let st = stress_tensor(&pair).unwrap();
        let trace_alg = st
            .t11
            .values
            .iter()
            .zip(&st.t22.values)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max);
        assert!(trace_alg < 1e-10, "stored trace |T11+T22| = {trace_alg:.3e}");
        div.push(divergence_residual(&st));

        let t = compute_t(&pair).unwrap();
        let ring = 2 * INTERIOR_RING;
        let mut m = 0.0f64;
        for j in ring..g.ny - ring {
            for i in ring..g.nx - ring {
                let idx = g.idx(i, j);
                let quarter = Complex64::new(0.25 * st.t11.values[idx], -0.25 * st.t12.values[idx]);
                m = m.max((quarter - t.values[idx]).norm());
            }
        }
        tdiff.push(m);
    }
    for k in 0..2 {
        let rd = div[k] / div[k + 1];
        assert!(rd >= 2.8, "divergence residual ratio {rd:.2} below second order");
        // The complex scalar and the tensor components are evaluated by the
        // same arithmetic, so their difference normally sits at the rounding
        // floor; the order check only applies if it ever leaves it.
        if tdiff[k] >= 1e-13 || tdiff[k + 1] >= 1e-13 {
            let rq = tdiff[k] / tdiff[k + 1];
            assert!(rq >= 2.8, "tensor-vs-T difference ratio {rq:.2} below second order");
        }
    }
    assert!(
        tdiff[2] < 5.0 * h_fine * h_fine,
        "tensor-vs-T difference {:.3e} not O(h^2)",
        tdiff[2]
    );

    println!(
        "criterion 04 (holomorphic quantity): PASS — {}; negative control T_max {t_neg:.2} / dzbar {hol_neg:.2}; divergence 513^2 {:.2e}, tensor-vs-T 513^2 {:.2e}",
        summary.join("; "),
        div[2],
        tdiff[2]
    );
}

// ---------------------------------------------------------------------------
// 5. Far-field asymptotics
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_asymptotics() {
    let grid = Grid::square(-100.0, 100.0, 1025).unwrap();
    let pair = spinor_bubble(grid, 1.0, Vector2::ZERO, spin()).unwrap();

    let fit = asymptotic_fit_u(&pair, (20.0, 80.0)).unwrap();
    let slope_err = (fit.slope + 2.0).abs() / 2.0;
    assert!(
        slope_err <= 0.02,
        "fitted log-slope {:.5} misses -2 by {:.2}%",
        fit.slope,
        100.0 * slope_err
    );

    let near = spinor_asymptotic_check(&pair, (20.0, 40.0)).unwrap();
    let far = spinor_asymptotic_check(&pair, (40.0, 80.0)).unwrap();
    let ratio = far / near;
    assert!(
        (0.35..=0.65).contains(&ratio),
        "decay check ratio {ratio:.3} not 0.5 ± 30% (near {near:.3e}, far {far:.3e})"
    );

    let xi0 = spinor_charge_xi0(&pair);
    let target = 2.0 * 2.0f64.sqrt() * PI;
    let xi_err = (xi0.norm() - target).abs() / target;
    assert!(
        xi_err <= 0.02,
        "|xi0| = {:.6} vs 2√2π = {target:.6}: off by {:.2}%",
        xi0.norm(),
        100.0 * xi_err
    );

    println!(
        "criterion 05 (asymptotics): PASS — slope {:.5} (err {:.2e}), decay-check ratio {ratio:.3}, |xi0| {:.6} (err {xi_err:.2e})",
        fit.slope,
        slope_err,
        xi0.norm()
    );
}

// ---------------------------------------------------------------------------
// 6. Green-function reconstruction of the spinor
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_green_function() {
    let t0 = Instant::now();
    let mut inner_sup = Vec::new();
    let mut psi_sup = 0.0f64;
    for &n in &[129usize, 257] {
        let grid = Grid::square(-16.0, 16.0, n).unwrap();
        let pair = spinor_bubble(grid, 1.0, Vector2::ZERO, spin()).unwrap();
        let (xi, _dirac_residual, _match_all) = green_convolve(&pair);
        let mut sup = 0.0f64;
        let mut ps = 0.0f64;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let p = grid.node(i, j);
                if p.x1.abs() <= 8.0 && p.x2.abs() <= 8.0 {
                    let idx = grid.idx(i, j);
                    let a = xi.values[idx];
                    let b = pair.psi.values[idx];
                    let d = ((a.f - b.f).norm_sqr() + (a.g - b.g).norm_sqr()).sqrt();
                    sup = sup.max(d);
                    ps = ps.max(b.norm());
                }
            }
        }
        inner_sup.push(sup);
        psi_sup = ps;
    }
    let rel = inner_sup[1] / psi_sup;
    assert!(
        rel < 0.05,
        "inner-half-domain reconstruction error {:.3e} is {:.1}% of sup|psi| {psi_sup:.3}",
        inner_sup[1],
        100.0 * rel
    );
    assert!(
        inner_sup[1] < inner_sup[0],
        "no improvement under refinement: 129^2 {:.3e} vs 257^2 {:.3e}",
        inner_sup[0],
        inner_sup[1]
    );
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 300.0, "Green convolution took {secs:.0} s, budget 300 s");
    println!(
        "criterion 06 (Green function): PASS — inner-half matches {:.3e} → {:.3e} under refinement ({:.2}% of sup|psi|); {secs:.1} s",
        inner_sup[0],
        inner_sup[1],
        100.0 * rel
    );
}

// ---------------------------------------------------------------------------
// 7. Newton solver: superlinear recovery and a correct linearization
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_newton_solver() {
    // (a) Recover the spinor bubble from 1% multiplicative noise on u.
    let grid = Grid::square(-4.0, 4.0, 65).unwrap();
    let base = spinor_bubble(grid, 1.0, Vector2::ZERO, spin()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noisy_u = ScalarField {
        grid,
        values: base
            .u
            .values
            .iter()
            .map(|&v| v * (1.0 + 0.01 * rng.gen_range(-1.0..=1.0)))
            .collect(),
    };
    let noisy = SolutionPair::new(grid, Metric::Flat, noisy_u, base.psi.clone());
    let report = newton_solve(&noisy, &SolverConfig::default()).unwrap();
    assert!(report.converged, "solver did not converge");
    assert!(report.iterations <= 10, "took {} iterations", report.iterations);
    let last = *report.residual_history.last().unwrap();
    assert!(last < 1e-10, "final residual {last:.3e} not < 1e-10");
    let best_ratio = report
        .residual_history
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(f64::INFINITY, f64::min);
    assert!(
        best_ratio < 0.1,
        "no superlinear step: best residual ratio {best_ratio:.3}"
    );

    // (b) The linearization agrees with finite differences of the residual
    // to first order in ε, over 10 random directions.
    let g = Grid::square(-4.0, 4.0, 33).unwrap();
    let bubble = spinor_bubble(g, 1.0, Vector2::ZERO, spin()).unwrap();
    let mut u_point = bubble.u.clone();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = g.node(i, j);
            *u_point.at_mut(i, j) += 0.2 * (1.3 * p.x1 + 0.4).sin() * (0.7 * p.x2).cos();
        }
    }
    let point = SolutionPair::new(
        g,
        Metric::Flat,
        u_point,
        SpinorField {
            grid: g,
            values: bubble.psi.values.iter().map(|s| s.scale_re(1.05)).collect(),
        },
    );
    let lin = linearize(&point);
    let (r0u, r0p) = residual(&point);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_rel = 0.0f64;
    for dir in 0..10 {
        let du = ScalarField {
            grid: g,
            values: (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let dpsi = SpinorField {
            grid: g,
            values: (0..g.len())
                .map(|_| {
                    Spinor::new(
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect(),
        };
        let (ju, jp) = lin.apply_fields(&du, &dpsi);
        let jnorm = ju
            .values
            .iter()
            .map(|v| v.abs())
            .chain(jp.values.iter().map(|s| s.norm()))
            .fold(0.0, f64::max)
            .max(1.0);

        let fd_err = |eps: f64| -> f64 {
            let up = ScalarField {
                grid: g,
                values: point
                    .u
                    .values
                    .iter()
                    .zip(&du.values)
                    .map(|(&a, &d)| a + eps * d)
                    .collect(),
            };
            let pp = SpinorField {
                grid: g,
                values: point
                    .psi
                    .values
                    .iter()
                    .zip(&dpsi.values)
                    .map(|(&s, &d)| Spinor::new(s.f + eps * d.f, s.g + eps * d.g))
                    .collect(),
            };
            let pert = SolutionPair::new(g, Metric::Flat, up, pp);
            let (ru, rp) = residual(&pert);
            let mut e = 0.0f64;
            for idx in 0..g.len() {
                e = e.max(((ru.values[idx] - r0u.values[idx]) / eps - ju.values[idx]).abs());
                let df = (rp.values[idx].f - r0p.values[idx].f) / eps - jp.values[idx].f;
                let dg = (rp.values[idx].g - r0p.values[idx].g) / eps - jp.values[idx].g;
                e = e.max((df.norm_sqr() + dg.norm_sqr()).sqrt());
            }
            e
        };

        let e1 = fd_err(1e-3);
        let e2 = fd_err(5e-4);
        assert!(
            e2 < 0.75 * e1 + 1e-11,
            "direction {dir}: FD mismatch does not shrink linearly in ε ({e1:.3e} → {e2:.3e})"
        );
        let rel = e1 / jnorm;
        assert!(
            rel < 1e-2,
            "direction {dir}: FD mismatch {e1:.3e} is {rel:.3e} of |Jδ| = {jnorm:.3e}"
        );
        worst_rel = worst_rel.max(rel);
    }

    println!(
        "criterion 07 (Newton solver): PASS — {} iterations, final residual {last:.2e}, best step ratio {best_ratio:.2e}; linearization FD mismatch ≤ {worst_rel:.2e} relative over 10 directions",
        report.iterations
    );
}

// ---------------------------------------------------------------------------
// 8. Blow-up detection on a dilating family
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_blowup_harness() {
    let grid = Grid::square(-1.0, 1.0, 513).unwrap();
    let spec = SequenceSpec {
        family: Family::ScalarBubble,
        scales: ScaleRule::Geometric { base: 2.0 },
        count: 7,
        center: Vector2::ZERO,
        spin: spin(),
        grid,
    };
    let pairs = generate_sequence(&spec).unwrap();
    let config = BlowupConfig { floor: -2.0, ..BlowupConfig::default() };
    let report = detect_concentration_with(&pairs, &config).unwrap();

    assert_eq!(report.sigma1.len(), 1, "expected exactly one concentration point");
    let p = report.sigma1[0];
    assert!(
        p.norm() <= grid.h + 1e-12,
        "Σ1 point ({}, {}) farther than one cell from the center",
        p.x1,
        p.x2
    );
    assert!(
        report.masses.iter().all(|&m| m >= PI),
        "some concentration mass below π: {:?}",
        report.masses
    );
    assert!(
        matches!(report.classification, Classification::BlowupMinusInfinityOutside),
        "classification {:?}",
        report.classification
    );
    for q in &report.sigma2 {
        assert!(
            report.sigma1.iter().any(|s| (*q - *s).norm() <= grid.h + 1e-12),
            "Σ2 point not inside Σ1"
        );
    }
    let mass = local_mass(&pairs[6], Vector2::ZERO, 0.5).unwrap();
    let mass_err = (mass / (2.0 * PI) - 1.0).abs();
    assert!(mass_err <= 0.05, "B_0.5 mass {mass:.6} vs 2π: off by {:.2}%", 100.0 * mass_err);

    // Spinor family: the spinor set is nonempty and still inside Σ1.
    let g257 = Grid::square(-1.0, 1.0, 257).unwrap();
    let spinor_spec = SequenceSpec { family: Family::SpinorBubble, grid: g257, ..spec };
    let spinor_pairs = generate_sequence(&spinor_spec).unwrap();
    let spinor_report = detect_concentration_with(
        &spinor_pairs,
        &BlowupConfig { floor: -1.5, ..BlowupConfig::default() },
    )
    .unwrap();
    assert!(!spinor_report.sigma2.is_empty(), "spinor family should populate Σ2");
    for q in &spinor_report.sigma2 {
        assert!(
            spinor_report.sigma1.iter().any(|s| (*q - *s).norm() <= g257.h + 1e-12),
            "spinor Σ2 point not inside Σ1"
        );
    }

    // Constant family: no concentration, bounded classification.
    let constant_spec = SequenceSpec {
        family: Family::ScalarBubble,
        scales: ScaleRule::Constant { lambda: 1.0 },
        count: 4,
        center: Vector2::ZERO,
        spin: spin(),
        grid: Grid::square(-1.0, 1.0, 129).unwrap(),
    };
    let constant_report = detect_concentration_with(
        &generate_sequence(&constant_spec).unwrap(),
        &BlowupConfig::default(),
    )
    .unwrap();
    assert!(constant_report.sigma1.is_empty(), "constant family flagged Σ1 points");
    assert!(
        matches!(constant_report.classification, Classification::Bounded),
        "constant family classified {:?}",
        constant_report.classification
    );

    println!(
        "criterion 08 (blow-up harness): PASS — one Σ1 point at ({:.2e}, {:.2e}), B_0.5 mass {mass:.6} (err {:.2e}), masses ≥ π, {:?}; spinor Σ2 ⊆ Σ1; constant family bounded and empty",
        p.x1, p.x2, mass_err, report.classification
    );
}

// ---------------------------------------------------------------------------
// 9. Kelvin transform: mass conservation, involution, removability
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_kelvin_transform() {
    let grid = Grid::square(-6.0, 6.0, 513).unwrap();
    let pair = spinor_bubble(grid, 1.0, Vector2::ZERO, spin()).unwrap();

    // (a) Annulus masses of e^{2u} and |ψ|^4 are conserved: the image of the
    // annulus r ∈ (1/3, 1) under inversion is r ∈ (1, 3).
    let (a, b) = (1.0, 3.0);
    let masses_transformed = |x: Vector2| {
        let (v, phi) = kelvin_point(&pair, x, 0.0, false).unwrap();
        (exp_2u(v), phi.norm_sqr() * phi.norm_sqr())
    };
    let masses_source = |y: Vector2| {
        let z = y.invert();
        let (vz, phiz) = kelvin_point(&pair, z, 0.0, false).unwrap();
        let u = vz + 2.0 * z.norm().ln();
        let psi_norm_sqr = phiz.norm_sqr() * z.norm_sqr();
        (exp_2u(u), psi_norm_sqr * psi_norm_sqr)
    };
    let m_t_e = annulus_mass_polar(a, b, 400, 512, |x| masses_transformed(x).0);
    let m_t_p = annulus_mass_polar(a, b, 400, 512, |x| masses_transformed(x).1);
    let m_s_e = annulus_mass_polar(1.0 / b, 1.0 / a, 400, 512, |y| masses_source(y).0);
    let m_s_p = annulus_mass_polar(1.0 / b, 1.0 / a, 400, 512, |y| masses_source(y).1);
    let rel_e = (m_t_e / m_s_e - 1.0).abs();
    let rel_p = (m_t_p / m_s_p - 1.0).abs();
    assert!(rel_e <= 0.01, "e^2u annulus mass mismatch {rel_e:.3e} > 1%");
    assert!(rel_p <= 0.01, "|psi|^4 annulus mass mismatch {rel_p:.3e} > 1%");

    // (b) Double application returns the original fields.
    let first = kelvin_transform(&pair, Grid::square(0.25, 2.25, 257).unwrap(), 0.0).unwrap();
    let second_grid = Grid::square(0.4, 0.8, 65).unwrap();
    let second = kelvin_transform(&first, second_grid, 0.0).unwrap();
    let reference = spinor_bubble(second_grid, 1.0, Vector2::ZERO, spin()).unwrap();
    let du = second
        .u
        .values
        .iter()
        .zip(&reference.u.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let dpsi = spinor_sup_diff(&second.psi, &reference.psi);
    assert!(du <= 1e-4, "double Kelvin: u differs from original by {du:.3e}");
    assert!(dpsi <= 1e-4, "double Kelvin: psi differs from original by {dpsi:.3e}");

    // (c) The transform of the spinor bubble is bounded near the origin
    // (the image of the far field), matching the removable-singularity
    // values v → ln 2 and |φ| → √2.
    let big = Grid::square(-100.0, 100.0, 1025).unwrap();
    let far_pair = spinor_bubble(big, 1.0, Vector2::ZERO, spin()).unwrap();
    let mut v_dev = 0.0f64;
    let mut phi_dev = 0.0f64;
    for &r in &[0.02, 0.05, 0.1] {
        for m in 0..64 {
            let th = 2.0 * PI * m as f64 / 64.0;
            let x = Vector2::new(r * th.cos(), r * th.sin());
            let (v, phi) = kelvin_point(&far_pair, x, 0.0, false).unwrap();
            v_dev = v_dev.max((v - 2.0f64.ln()).abs());
            phi_dev = phi_dev.max((phi.norm() - 2.0f64.sqrt()).abs());
        }
    }
    assert!(v_dev <= 0.05, "transformed u deviates from ln 2 near 0 by {v_dev:.3e}");
    assert!(phi_dev <= 0.05, "|transformed psi| deviates from √2 near 0 by {phi_dev:.3e}");

    println!(
        "criterion 09 (Kelvin transform): PASS — annulus masses e^2u {rel_e:.2e} / |psi|^4 {rel_p:.2e}; double application du {du:.2e}, dpsi {dpsi:.2e}; near-0 deviations v {v_dev:.2e}, |phi| {phi_dev:.2e}"
    );
}

// ---------------------------------------------------------------------------
// 10. Determinism of the verification pipeline
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_determinism() {
    let bin = env!("CARGO_BIN_EXE_superliouville");
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("verify.json");
    std::fs::write(
        &config_path,
        r#"{
  "grid": { "min": -8.0, "max": 8.0, "n": 129 },
  "solution": { "family": "spinor_bubble", "lambda": 1.0 },
  "perturbation": { "u_noise": 0.005, "seed": 11 }
}
"#,
    )
    .unwrap();

    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("out{run}"));
        let status = Command::new(bin)
            .args(["verify", "--serial", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "run {run} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        let json = std::fs::read(out.join("diagnostics.json")).unwrap();
        let u_csv = std::fs::read(out.join("u.csv")).unwrap();
        let psi_csv = std::fs::read(out.join("psi_norm2.csv")).unwrap();
        outputs.push((json, u_csv, psi_csv));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "diagnostics.json differs between runs");
    assert_eq!(outputs[0].1, outputs[1].1, "u.csv differs between runs");
    assert_eq!(outputs[0].2, outputs[1].2, "psi_norm2.csv differs between runs");

    println!(
        "criterion 10 (determinism): PASS — two serial verify runs byte-identical ({} bytes of JSON, {} bytes of CSV)",
        outputs[0].0.len(),
        outputs[0].1.len() + outputs[0].2.len()
    );
}
