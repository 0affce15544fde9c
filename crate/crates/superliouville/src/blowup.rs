//! Bubbling sequences and concentration detection.
//!
//! A sequence of solutions with uniformly bounded volume masses ∫ e^{2uₙ}
//! and ∫ |ψₙ|⁴ obeys a compactness dichotomy: either the uₙ stay locally
//! bounded (possibly drifting to −∞ uniformly), or the volume concentrates
//! at a finite set Σ₁ of points, each absorbing at least π of e^{2u}-mass,
//! while uₙ stays controlled away from Σ₁.  The spinors can concentrate
//! only on a subset Σ₂ ⊆ Σ₁.
//!
//! This module generates explicit bubbling families (dilated bubbles) and
//! detects their concentration behavior numerically:
//!
//! * [`generate_sequence`] builds the family described by a
//!   [`SequenceSpec`] and verifies the uniform mass bounds,
//! * [`local_mass`] integrates e^{2u} over a metric ball,
//! * [`detect_concentration`] scans ball masses on the last few members,
//!   clusters the flagged nodes into concentration points, and classifies
//!   the sequence into one of the four [`Classification`] alternatives.
//!
//! All scans run in a fixed order (parallel only over independent rows or
//! members, with serial reductions), so reports are reproducible bit for
//! bit across runs and thread counts.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford2d::{Spinor, Vector2};
use crate::error::{Error, Result};
use crate::geometry::{Grid, SolutionPair};
use crate::operators::{exp_2u, trapezoid_weight};
use crate::solutions::{scalar_bubble, spinor_bubble};

/// Uniform cap on the volume masses ∫ e^{2uₙ} and ∫ |ψₙ|⁴ of generated
/// sequences.  The built-in families stay below 4π in the continuum (2π
/// for the scalar bubble, 4π for the spinor bubble); the factor-two slack
/// absorbs coarse-grid quadrature overshoot for very concentrated members.
pub const UNIFORM_MASS_BOUND: f64 = 8.0 * PI;

/// Solution family a sequence draws its members from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Scalar bubbles u = log(√2λ/(1+λ²|x−x₀|²)), ψ ≡ 0.
    ScalarBubble,
    /// Coupled spinor bubbles with |ψ|² = e^u.
    SpinorBubble,
}

/// Rule assigning the scale λₙ to the member of index n = 0, 1, ….
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum ScaleRule {
    /// λₙ = base^n — the canonical dilating (bubbling) family.
    Geometric { base: f64 },
    /// λₙ ≡ lambda — a constant (compact) family.
    Constant { lambda: f64 },
}

impl ScaleRule {
    /// Scale of the n-th member.
    pub fn lambda(self, n: usize) -> f64 {
        match self {
            ScaleRule::Geometric { base } => base.powi(n as i32),
            ScaleRule::Constant { lambda } => lambda,
        }
    }
}

fn default_center() -> Vector2 {
    Vector2::new(0.0, 0.0)
}

fn default_spin() -> Spinor {
    Spinor::from_reals(1.0, 0.0)
}

/// Description of a solution sequence: family, scales, center, and the
/// common grid all members are sampled on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub family: Family,
    pub scales: ScaleRule,
    /// Number of members (≥ 2): scales λ₀ … λ_{count−1}.
    pub count: usize,
    /// Common concentration center x₀ of every member.
    #[serde(default = "default_center")]
    pub center: Vector2,
    /// Spin direction for the spinor family (must be a unit spinor);
    /// ignored by the scalar family.
    #[serde(default = "default_spin")]
    pub spin: Spinor,
    pub grid: Grid,
}

/// Knobs of the concentration detector.  [`detect_concentration`] uses the
/// defaults for everything but `epsilon0` and `delta`; pass a full config
/// to [`detect_concentration_with`] to override the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupConfig {
    /// Concentration threshold: a point is flagged when some late member
    /// carries at least this much e^{2u}-mass in the δ-ball around it.
    /// Must lie strictly between 0 and π (the mass quantum of a blow-up
    /// point), otherwise the detector rejects it.
    pub epsilon0: f64,
    /// Radius of the detection balls.
    pub delta: f64,
    /// A node joins Σ₂ when some late member has |ψₙ| ≥ this gate there.
    pub psi_gate: f64,
    /// Certification level for "uₙ → −∞": the last member's maximum of u
    /// on the test compact must fall below this floor (on top of a
    /// strictly decreasing trend across the inspected members).
    pub floor: f64,
    /// Radius of the neighborhoods removed around detected concentration
    /// points when classifying behavior on the complement (typically 2δ).
    pub margin: f64,
    /// Number of trailing members the limsup and the trend are measured
    /// on (clamped to the sequence length; a trend needs at least two).
    pub last_k: usize,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        BlowupConfig {
            epsilon0: PI / 2.0,
            delta: 0.25,
            psi_gate: 10.0,
            floor: -10.0,
            margin: 0.5,
            last_k: 3,
        }
    }
}

/// The four alternatives of the compactness dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// No concentration points and uₙ locally bounded.
    Bounded,
    /// No concentration points but uₙ → −∞ uniformly on the domain.
    UniformMinusInfinity,
    /// Concentration at Σ₁ with uₙ bounded away from Σ₁.
    BlowupBoundedOutside,
    /// Concentration at Σ₁ with uₙ → −∞ locally uniformly away from Σ₁.
    BlowupMinusInfinityOutside,
}

/// Outcome of a concentration scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupReport {
    /// Volume concentration points (one representative per flagged
    /// cluster, at the node of maximal ball mass).
    pub sigma1: Vec<Vector2>,
    /// Spinor concentration points (|ψₙ| exceeding the gate).
    pub sigma2: Vec<Vector2>,
    /// e^{2u}-mass of the last member in the δ-ball around each Σ₁ point
    /// (the local masses αᵢ, ≥ π at genuine blow-up points).
    pub masses: Vec<f64>,
    pub classification: Classification,
    /// Threshold the scan ran with.
    pub epsilon0: f64,
}

/// Build the members of a sequence and verify the uniform mass bounds.
///
/// Members are generated in parallel but returned in index order, so the
/// result is deterministic.  Errors from the underlying constructors (for
/// example a non-unit spin direction) are propagated.
///
/// Panics if `count < 2` or a scale rule produces a non-positive scale —
/// both are configuration errors the CLI validates before reaching here.
pub fn generate_sequence(spec: &SequenceSpec) -> Result<Vec<SolutionPair>> {
    assert!(
        spec.count >= 2,
        "a sequence needs at least two members, got {}",
        spec.count
    );
    let pairs = (0..spec.count)
        .into_par_iter()
        .map(|n| {
            let lambda = spec.scales.lambda(n);
            match spec.family {
                Family::ScalarBubble => Ok(scalar_bubble(spec.grid, lambda, spec.center)),
                Family::SpinorBubble => spinor_bubble(spec.grid, lambda, spec.center, spec.spin),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    for (n, pair) in pairs.iter().enumerate() {
        let (volume, spinor) = volume_masses(pair);
        assert!(
            volume.is_finite() && spinor.is_finite() && volume <= UNIFORM_MASS_BOUND && spinor <= UNIFORM_MASS_BOUND,
            "member {n} violates the uniform mass bound: ∫e^{{2u}} = {volume}, ∫|ψ|⁴ = {spinor}"
        );
    }
    Ok(pairs)
}

/// The volume masses (∫ e^{2u}, ∫ |ψ|⁴) of one pair (plain trapezoid
/// quadrature over the whole grid) — the quantities whose uniform
/// boundedness along a sequence the concentration analysis rests on.
pub fn volume_masses(pair: &SolutionPair) -> (f64, f64) {
    let grid = pair.grid;
    let mut volume = 0.0;
    let mut spinor = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let idx = grid.idx(i, j);
            let w = trapezoid_weight(grid, i, j);
            volume += w * exp_2u(pair.u.values[idx]);
            let p = pair.psi.values[idx].norm_sqr();
            spinor += w * p * p;
        }
    }
    (volume, spinor)
}

/// e^{2u}-mass of `pair` over the closed ball B_radius(center).
///
/// The ball must be contained in the grid hull; otherwise the quadrature
/// would silently truncate the ball and the result would not be the local
/// mass it claims to be ([`Error::BallOutsideGrid`]).
pub fn local_mass(pair: &SolutionPair, center: Vector2, radius: f64) -> Result<f64> {
    assert!(
        radius > 0.0 && radius.is_finite(),
        "ball radius must be positive and finite, got {radius}"
    );
    let grid = pair.grid;
    let max_x = grid.origin.x1 + (grid.nx - 1) as f64 * grid.h;
    let max_y = grid.origin.x2 + (grid.ny - 1) as f64 * grid.h;
    let slack = 1e-9 * (1.0 + radius);
    if center.x1 - radius < grid.origin.x1 - slack
        || center.x1 + radius > max_x + slack
        || center.x2 - radius < grid.origin.x2 - slack
        || center.x2 + radius > max_y + slack
    {
        return Err(Error::BallOutsideGrid { center, radius });
    }
    Ok(MassMap::new(pair).ball_mass(center, radius))
}

/// Per-row prefix sums of the trapezoid-weighted integrand w·e^{2u},
/// making the mass over any disk segment of a row an O(1) lookup.
struct MassMap {
    grid: Grid,
    /// prefix[j·(nx+1) + i] = Σ_{i' < i} w(i',j)·e^{2u(i',j)}.
    prefix: Vec<f64>,
}

impl MassMap {
    fn new(pair: &SolutionPair) -> MassMap {
        let grid = pair.grid;
        let stride = grid.nx + 1;
        let mut prefix = vec![0.0; stride * grid.ny];
        for j in 0..grid.ny {
            let mut acc = 0.0;
            for i in 0..grid.nx {
                acc += trapezoid_weight(grid, i, j) * exp_2u(pair.u.values[grid.idx(i, j)]);
                prefix[j * stride + i + 1] = acc;
            }
        }
        MassMap { grid, prefix }
    }

    /// Mass over the part of the closed ball B_radius(center) covered by
    /// the grid (rows and columns outside the grid are simply absent).
    fn ball_mass(&self, center: Vector2, radius: f64) -> f64 {
        let g = self.grid;
        let stride = g.nx + 1;
        let j_lo = ((center.x2 - radius - g.origin.x2) / g.h).ceil().max(0.0) as usize;
        let j_hi = ((center.x2 + radius - g.origin.x2) / g.h).floor().min((g.ny - 1) as f64);
        if j_hi < 0.0 {
            return 0.0;
        }
        let mut mass = 0.0;
        for j in j_lo..=(j_hi as usize) {
            let dy = g.origin.x2 + j as f64 * g.h - center.x2;
            let rem = radius * radius - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let half = rem.sqrt();
            let i_lo = ((center.x1 - half - g.origin.x1) / g.h).ceil().max(0.0) as usize;
            let i_hi = ((center.x1 + half - g.origin.x1) / g.h).floor().min((g.nx - 1) as f64);
            if i_hi < 0.0 {
                continue;
            }
            let i_hi = i_hi as usize;
            if i_lo > i_hi {
                continue;
            }
            mass += self.prefix[j * stride + i_hi + 1] - self.prefix[j * stride + i_lo];
        }
        mass
    }
}

/// Scan a sequence for concentration with the default detector knobs.
///
/// `epsilon0` is the concentration threshold (must lie in (0, π)) and
/// `delta` the detection-ball radius; see [`BlowupConfig`] for the rest.
pub fn detect_concentration(
    pairs: &[SolutionPair],
    epsilon0: f64,
    delta: f64,
) -> Result<BlowupReport> {
    let config = BlowupConfig {
        epsilon0,
        delta,
        ..BlowupConfig::default()
    };
    detect_concentration_with(pairs, &config)
}

/// [`detect_concentration`] with every knob explicit.
pub fn detect_concentration_with(
    pairs: &[SolutionPair],
    config: &BlowupConfig,
) -> Result<BlowupReport> {
    if !(config.epsilon0 > 0.0 && config.epsilon0 < PI) {
        return Err(Error::InvalidThreshold {
            epsilon0: config.epsilon0,
        });
    }
    assert!(
        pairs.len() >= 2,
        "concentration detection needs at least two sequence members"
    );
    assert!(
        config.delta > 0.0 && config.delta.is_finite(),
        "detection radius must be positive and finite, got {}",
        config.delta
    );
    assert!(config.last_k >= 1, "at least one member must be inspected");
    let grid = pairs[0].grid;
    assert!(
        pairs.iter().all(|p| p.grid == grid),
        "sequence members must share one grid"
    );

    let k = config.last_k.min(pairs.len());
    let tail = &pairs[pairs.len() - k..];

    // Σ₁: per-node limsup proxy — the max over the inspected members of
    // the e^{2u}-mass in the δ-ball around the node.
    let maps: Vec<MassMap> = tail.par_iter().map(MassMap::new).collect();
    let mut ball = vec![0.0; grid.nx * grid.ny];
    ball.par_chunks_mut(grid.nx)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, out) in row.iter_mut().enumerate() {
                let x = grid.node(i, j);
                *out = maps
                    .iter()
                    .map(|m| m.ball_mass(x, config.delta))
                    .fold(0.0, f64::max);
            }
        });
    let flagged1: Vec<bool> = ball.iter().map(|&m| m >= config.epsilon0).collect();
    let sigma1_nodes = cluster_representatives(grid, &flagged1, |idx| ball[idx]);
    let sigma1: Vec<Vector2> = sigma1_nodes.iter().map(|&(i, j)| grid.node(i, j)).collect();
    let last_map = maps.last().expect("tail is nonempty");
    let masses: Vec<f64> = sigma1
        .iter()
        .map(|&p| last_map.ball_mass(p, config.delta))
        .collect();

    // Σ₂: nodes where some inspected member's |ψ| exceeds the gate.
    let mut psi_sup = vec![0.0; grid.nx * grid.ny];
    for pair in tail {
        for (s, v) in psi_sup.iter_mut().zip(&pair.psi.values) {
            *s = f64::max(*s, v.norm_sqr().sqrt());
        }
    }
    let flagged2: Vec<bool> = psi_sup.iter().map(|&m| m >= config.psi_gate).collect();
    let sigma2 = cluster_representatives(grid, &flagged2, |idx| psi_sup[idx])
        .into_iter()
        .map(|(i, j)| grid.node(i, j))
        .collect();

    let classification = classify(tail, &sigma1, config);

    Ok(BlowupReport {
        sigma1,
        sigma2,
        masses,
        classification,
        epsilon0: config.epsilon0,
    })
}

/// One representative node per 8-connected component of the flagged set:
/// the component's node of strictly maximal score (first in row-major
/// breadth-first order on ties), so the choice is deterministic.
fn cluster_representatives(
    grid: Grid,
    flagged: &[bool],
    score: impl Fn(usize) -> f64,
) -> Vec<(usize, usize)> {
    let mut seen = vec![false; flagged.len()];
    let mut reps = Vec::new();
    let mut queue = VecDeque::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let start = grid.idx(i, j);
            if !flagged[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back((i, j));
            let mut best = (i, j);
            let mut best_score = score(start);
            while let Some((ci, cj)) = queue.pop_front() {
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let (ni, nj) = (ci as i64 + di, cj as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= grid.nx as i64 || nj >= grid.ny as i64 {
                            continue;
                        }
                        let (ni, nj) = (ni as usize, nj as usize);
                        let idx = grid.idx(ni, nj);
                        if !flagged[idx] || seen[idx] {
                            continue;
                        }
                        seen[idx] = true;
                        queue.push_back((ni, nj));
                        if score(idx) > best_score {
                            best_score = score(idx);
                            best = (ni, nj);
                        }
                    }
                }
            }
            reps.push(best);
        }
    }
    reps
}

/// Decide the dichotomy alternative from the behavior of uₙ on the
/// complement of the detected concentration balls.
///
/// "uₙ → −∞" is certified when the maxima of uₙ over the test compact
/// decrease strictly across the inspected members and the last one falls
/// below the configured floor; anything weaker stays "bounded", which is
/// the conservative alternative.
fn classify(tail: &[SolutionPair], sigma1: &[Vector2], config: &BlowupConfig) -> Classification {
    let grid = tail[0].grid;
    let margin_sq = config.margin * config.margin;
    let mut maxima = Vec::with_capacity(tail.len());
    for pair in tail {
        let mut m = f64::NEG_INFINITY;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let x = grid.node(i, j);
                if sigma1.iter().any(|&p| (x - p).norm_sqr() <= margin_sq) {
                    continue;
                }
                m = m.max(pair.u.values[grid.idx(i, j)]);
            }
        }
        maxima.push(m);
    }
    // An empty complement (margin balls covering the grid) certifies
    // nothing; the NEG_INFINITY maxima would fake a collapse otherwise.
    let collapsed = maxima.len() >= 2
        && maxima.iter().all(|m| m.is_finite())
        && maxima.windows(2).all(|w| w[1] < w[0])
        && *maxima.last().expect("tail is nonempty") < config.floor;
    match (sigma1.is_empty(), collapsed) {
        (true, true) => Classification::UniformMinusInfinity,
        (true, false) => Classification::Bounded,
        (false, true) => Classification::BlowupMinusInfinityOutside,
        (false, false) => Classification::BlowupBoundedOutside,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Metric;
    use crate::operators::{ScalarField, SpinorField};

    fn unit_square_spec(family: Family, base: f64, count: usize, n: usize) -> SequenceSpec {
        SequenceSpec {
            family,
            scales: ScaleRule::Geometric { base },
            count,
            center: Vector2::new(0.0, 0.0),
            spin: Spinor::from_reals(1.0, 0.0),
            grid: Grid::square(-1.0, 1.0, n).unwrap(),
        }
    }

    #[test]
    fn local_mass_of_unit_bubble_over_unit_ball_is_pi() {
        // ∫_{B_1} e^{2u} = 2π(1 − 1/(1+r²))|_{r=1} = π for the λ = 1
        // scalar bubble — the closed-form oracle for the ball quadrature.
        let grid = Grid::square(-4.0, 4.0, 513).unwrap();
        let pair = scalar_bubble(grid, 1.0, Vector2::new(0.0, 0.0));
        let mass = local_mass(&pair, Vector2::new(0.0, 0.0), 1.0).unwrap();
        assert!(
            (mass - PI).abs() < 0.01 * PI,
            "ball mass {mass} should be π = {PI}"
        );

        // Off-center ball, still inside the grid: strictly smaller mass.
        let off = local_mass(&pair, Vector2::new(2.0, 0.0), 1.0).unwrap();
        assert!(off > 0.0 && off < mass);
    }

    #[test]
    fn local_mass_rejects_balls_leaving_the_grid() {
        let grid = Grid::square(-4.0, 4.0, 65).unwrap();
        let pair = scalar_bubble(grid, 1.0, Vector2::new(0.0, 0.0));
        let err = local_mass(&pair, Vector2::new(3.9, 0.0), 0.5).unwrap_err();
        assert!(matches!(err, Error::BallOutsideGrid { radius, .. } if radius == 0.5));
        // A ball exactly inscribed in the hull is accepted.
        assert!(local_mass(&pair, Vector2::new(0.0, 0.0), 4.0).is_ok());
    }

    #[test]
    fn invalid_thresholds_are_rejected() {
        let spec = unit_square_spec(Family::ScalarBubble, 2.0, 3, 33);
        let pairs = generate_sequence(&spec).unwrap();
        for bad in [0.0, -1.0, PI, 4.0, f64::NAN] {
            let err = detect_concentration(&pairs, bad, 0.25).unwrap_err();
            assert!(matches!(err, Error::InvalidThreshold { .. }));
        }
        assert!(detect_concentration(&pairs, PI / 2.0, 0.25).is_ok());
    }

    #[test]
    fn volume_masses_are_dilation_invariant() {
        // ∫ e^{2uₙ} is a conformal invariant of the bubble families: 2π
        // for the scalar bubble, 4π for the spinor bubble (where it also
        // equals ∫ |ψₙ|⁴).  The quadrature reproduces the invariance
        // uniformly in λ once the grid resolves the tightest member.
        let grid = Grid::square(-8.0, 8.0, 513).unwrap();
        for n in 0..4 {
            let lambda = 2.0f64.powi(n);
            let scalar = scalar_bubble(grid, lambda, Vector2::new(0.0, 0.0));
            let (vol, psi4) = volume_masses(&scalar);
            assert!(
                (vol - 2.0 * PI).abs() < 0.025 * 2.0 * PI,
                "scalar λ={lambda}: ∫e^(2u) = {vol}"
            );
            assert_eq!(psi4, 0.0);

            let spinor = spinor_bubble(
                grid,
                lambda,
                Vector2::new(0.0, 0.0),
                Spinor::from_reals(1.0, 0.0),
            )
            .unwrap();
            let (vol, psi4) = volume_masses(&spinor);
            assert!(
                (vol - 4.0 * PI).abs() < 0.025 * 4.0 * PI,
                "spinor λ={lambda}: ∫e^(2u) = {vol}"
            );
            assert!(
                (psi4 - vol).abs() < 1e-10 * vol,
                "|ψ|⁴ mass {psi4} must equal the e^(2u) mass {vol} exactly"
            );
        }
    }

    #[test]
    fn dilating_scalar_family_concentrates_at_the_center() {
        let spec = unit_square_spec(Family::ScalarBubble, 2.0, 7, 257);
        let pairs = generate_sequence(&spec).unwrap();
        let config = BlowupConfig {
            floor: -2.0,
            ..BlowupConfig::default()
        };
        let report = detect_concentration_with(&pairs, &config).unwrap();

        assert_eq!(report.sigma1.len(), 1, "exactly one concentration point");
        let p = report.sigma1[0];
        assert!(
            p.norm_sqr().sqrt() <= pairs[0].grid.h,
            "detected point ({}, {}) should sit within one cell of the center",
            p.x1,
            p.x2
        );
        assert!(report.sigma2.is_empty(), "the scalar family has ψ ≡ 0");
        assert!(report.masses.len() == 1 && report.masses[0] >= PI);
        assert_eq!(
            report.classification,
            Classification::BlowupMinusInfinityOutside
        );

        // The full blow-up mass accumulates in B_{1/2}: → 2π.
        let mass = local_mass(pairs.last().unwrap(), Vector2::new(0.0, 0.0), 0.5).unwrap();
        assert!(
            (mass - 2.0 * PI).abs() < 0.1 * 2.0 * PI,
            "late-member mass {mass} should approach 2π"
        );

        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"classification\":\"blowup_minus_infinity_outside\""));
        let back: BlowupReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.classification, report.classification);
        assert_eq!(back.sigma1[0], report.sigma1[0]);
    }

    #[test]
    fn dilating_spinor_family_flags_the_spinor_set() {
        let spec = unit_square_spec(Family::SpinorBubble, 2.0, 7, 257);
        let pairs = generate_sequence(&spec).unwrap();
        let config = BlowupConfig {
            floor: -1.5,
            ..BlowupConfig::default()
        };
        let report = detect_concentration_with(&pairs, &config).unwrap();

        // |ψₙ(x₀)| = √(2λₙ) = √128 ≈ 11.3 clears the default gate at the
        // last member, so the spinors concentrate exactly where the
        // volume does: Σ₂ = Σ₁ = {x₀} up to a grid cell.
        assert_eq!(report.sigma1.len(), 1);
        assert_eq!(report.sigma2.len(), 1);
        let h = pairs[0].grid.h;
        let d = report.sigma1[0] - report.sigma2[0];
        assert!(
            d.norm_sqr().sqrt() <= h,
            "sigma2 must sit within one cell of sigma1"
        );
        assert!(report.masses[0] >= PI);
        assert_eq!(
            report.classification,
            Classification::BlowupMinusInfinityOutside
        );
    }

    #[test]
    fn constant_family_stays_bounded() {
        let spec = SequenceSpec {
            scales: ScaleRule::Constant { lambda: 1.0 },
            ..unit_square_spec(Family::ScalarBubble, 2.0, 4, 129)
        };
        let pairs = generate_sequence(&spec).unwrap();
        let report = detect_concentration(&pairs, PI / 2.0, 0.25).unwrap();
        assert!(report.sigma1.is_empty());
        assert!(report.sigma2.is_empty());
        assert!(report.masses.is_empty());
        assert_eq!(report.classification, Classification::Bounded);
    }

    #[test]
    fn sinking_family_classifies_uniform_minus_infinity() {
        // Hand-built family uₙ ≡ −5n: no concentration, uniformly → −∞.
        let grid = Grid::square(-1.0, 1.0, 33).unwrap();
        let pairs: Vec<SolutionPair> = (0..4)
            .map(|n| {
                let u = ScalarField::from_fn(grid, |_| -5.0 * n as f64);
                SolutionPair::new(grid, Metric::Flat, u, SpinorField::zeros(grid))
            })
            .collect();
        let report = detect_concentration(&pairs, PI / 2.0, 0.25).unwrap();
        assert!(report.sigma1.is_empty());
        assert_eq!(report.classification, Classification::UniformMinusInfinity);
    }

    #[test]
    #[should_panic(expected = "share one grid")]
    fn mixed_grids_are_rejected() {
        let a = scalar_bubble(Grid::square(-1.0, 1.0, 33).unwrap(), 1.0, Vector2::new(0.0, 0.0));
        let b = scalar_bubble(Grid::square(-1.0, 1.0, 65).unwrap(), 2.0, Vector2::new(0.0, 0.0));
        let _ = detect_concentration(&[a, b], PI / 2.0, 0.25);
    }

    #[test]
    fn sequence_spec_round_trips_through_json() {
        let text = r#"{
            "family": "spinor_bubble",
            "scales": { "rule": "geometric", "base": 2.0 },
            "count": 3,
            "grid": { "origin": [-1.0, -1.0], "h": 0.0625, "nx": 33, "ny": 33 }
        }"#;
        let spec: SequenceSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.family, Family::SpinorBubble);
        assert_eq!(spec.scales, ScaleRule::Geometric { base: 2.0 });
        assert_eq!(spec.center, Vector2::new(0.0, 0.0));
        assert_eq!(spec.spin, Spinor::from_reals(1.0, 0.0));
        let pairs = generate_sequence(&spec).unwrap();
        assert_eq!(pairs.len(), 3);

        let json = serde_json::to_string(&spec).unwrap();
        let back: SequenceSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.grid, spec.grid);
        assert_eq!(back.scales, spec.scales);

        // Unknown keys in a spec are configuration mistakes, not data.
        assert!(serde_json::from_str::<SequenceSpec>(
            r#"{"family":"scalar_bubble","scales":{"rule":"constant","lambda":1.0},
                "count":2,"grid":{"origin":[0.0,0.0],"h":0.1,"nx":5,"ny":5},"typo":1}"#
        )
        .is_err());
    }

    #[test]
    fn non_unit_spin_directions_propagate_the_constructor_error() {
        let mut spec = unit_square_spec(Family::SpinorBubble, 2.0, 2, 17);
        spec.spin = Spinor::from_reals(2.0, 0.0);
        assert!(matches!(
            generate_sequence(&spec).unwrap_err(),
            Error::InvalidSpinDirection { .. }
        ));
    }
}
