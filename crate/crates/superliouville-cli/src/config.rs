//! JSON run configurations: strict schemas (unknown keys rejected) plus
//! builders that turn a config into library objects.

use serde::Deserialize;

use superliouville::blowup::{BlowupConfig, Family, ScaleRule, SequenceSpec};
use superliouville::clifford2d::{Spinor, Vector2};
use superliouville::geometry::{Grid, SolutionPair};
use superliouville::operators::ScalarField;
use superliouville::solutions::{scalar_bubble, sphere_killing_solution, spinor_bubble};
use superliouville::solver::SolverConfig;

use crate::Failure;

/// Square grid [min, max]² with n nodes per axis.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid, Failure> {
        Grid::square(self.min, self.max, self.n).map_err(Failure::from)
    }
}

fn default_lambda() -> f64 {
    1.0
}

fn default_spin() -> Spinor {
    Spinor::from_reals(1.0, 0.0)
}

/// Explicit solution family serving as exact state (verify/export) or
/// initial guess (solve).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "family")]
pub enum SolutionConfig {
    ScalarBubble {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    SpinorBubble {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "default_spin")]
        spin: Spinor,
    },
    SphereKilling {
        #[serde(default = "default_spin")]
        spin: Spinor,
    },
}

impl SolutionConfig {
    pub fn build(&self, grid: Grid) -> Result<SolutionPair, Failure> {
        let pair = match *self {
            SolutionConfig::ScalarBubble { lambda, center } => {
                scalar_bubble(grid, lambda, Vector2::new(center[0], center[1]))
            }
            SolutionConfig::SpinorBubble {
                lambda,
                center,
                spin,
            } => spinor_bubble(grid, lambda, Vector2::new(center[0], center[1]), spin)?,
            SolutionConfig::SphereKilling { spin } => sphere_killing_solution(grid, spin)?,
        };
        Ok(pair)
    }
}

/// Deterministic modification of a built pair: exact-data spoilers for
/// negative controls and noisy initial guesses for solver runs.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Perturbation {
    /// Constant added to u.
    pub u_add: f64,
    /// Relative multiplicative noise on u: u ← u·(1 + a·ξ) with ξ drawn
    /// uniformly from [−1, 1] per node.
    pub u_noise: f64,
    /// Scale applied to the positive half-spinor component f.  −1 flips
    /// its sign, which keeps |ψ|² but breaks the Dirac equation — the
    /// canonical negative control.
    pub psi_f_scale: f64,
    /// Seed of the noise stream (a fixed-sequence generator, so equal
    /// seeds give bit-equal perturbations on every platform).
    pub seed: u64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation {
            u_add: 0.0,
            u_noise: 0.0,
            psi_f_scale: 1.0,
            seed: 0,
        }
    }
}

impl Perturbation {
    pub fn is_identity(&self) -> bool {
        self.u_add == 0.0 && self.u_noise == 0.0 && self.psi_f_scale == 1.0
    }

    pub fn apply(&self, pair: &SolutionPair) -> SolutionPair {
        use rand::{Rng, SeedableRng};
        if self.is_identity() {
            return pair.clone();
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let mut u = ScalarField::zeros(pair.grid);
        for (out, &v) in u.values.iter_mut().zip(&pair.u.values) {
            let noise = if self.u_noise != 0.0 {
                self.u_noise * rng.gen_range(-1.0..=1.0)
            } else {
                0.0
            };
            *out = v * (1.0 + noise) + self.u_add;
        }
        let mut psi = pair.psi.clone();
        if self.psi_f_scale != 1.0 {
            for s in &mut psi.values {
                s.f *= self.psi_f_scale;
            }
        }
        SolutionPair::new(pair.grid, pair.metric.clone(), u, psi)
    }
}

/// Quantitative gates evaluated against a diagnostics report.  Only the
/// gates present in the config are checked.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gates {
    /// Upper bound on ‖r_u‖∞.
    pub residual_u_max: Option<f64>,
    /// Upper bound on ‖r_ψ‖∞.
    pub residual_psi_max: Option<f64>,
    /// Upper bound on max |T(z)|.
    pub t_max: Option<f64>,
    /// Upper bound on max |∂̄T|.
    pub holomorphy_max: Option<f64>,
    /// Target for the charge α, with relative tolerance `alpha_rel_tol`
    /// (default 1%).
    pub alpha_target: Option<f64>,
    pub alpha_rel_tol: Option<f64>,
    /// Target for the fitted log-slope of u, with absolute tolerance
    /// `slope_tol` (default 0.05).
    pub slope_target: Option<f64>,
    pub slope_tol: Option<f64>,
}

impl Gates {
    pub fn any_asymptotic(&self) -> bool {
        self.alpha_target.is_some() || self.slope_target.is_some()
    }
}

/// `verify`: evaluate an exact family (optionally spoiled) and gate its
/// diagnostics.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub grid: GridConfig,
    pub solution: SolutionConfig,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub gates: Gates,
}

/// `solve`: Newton-iterate from a (typically perturbed) initial guess,
/// then run and gate diagnostics on the solution found.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub grid: GridConfig,
    pub solution: SolutionConfig,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub gates: Gates,
}

/// `blowup`: generate a bubbling sequence and run concentration detection.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupCliConfig {
    pub grid: GridConfig,
    pub family: Family,
    pub scales: ScaleRule,
    pub count: usize,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default = "default_spin")]
    pub spin: Spinor,
    #[serde(default)]
    pub detector: BlowupConfig,
}

impl BlowupCliConfig {
    pub fn sequence_spec(&self) -> Result<SequenceSpec, Failure> {
        if self.count < 2 {
            return Err(Failure::Config(format!(
                "a sequence needs at least two members, got {}",
                self.count
            )));
        }
        let lambda0 = self.scales.lambda(0);
        let lambda_last = self.scales.lambda(self.count - 1);
        if !(lambda0 > 0.0 && lambda0.is_finite() && lambda_last > 0.0 && lambda_last.is_finite())
        {
            return Err(Failure::Config(
                "scale rule must produce positive finite scales".into(),
            ));
        }
        Ok(SequenceSpec {
            family: self.family,
            scales: self.scales,
            count: self.count,
            center: Vector2::new(self.center[0], self.center[1]),
            spin: self.spin,
            grid: self.grid.build()?,
        })
    }
}

/// `export`: dump node-sampled fields of an exact family as CSV.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    pub grid: GridConfig,
    pub solution: SolutionConfig,
    #[serde(default)]
    pub perturbation: Perturbation,
    /// Field names: u | psi_norm2 | e2u | t_re | t_im.
    pub fields: Vec<String>,
}

/// `kelvin`: Kelvin-transform an exact family onto a target grid away
/// from the origin and re-verify the local diagnostics there.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KelvinConfig {
    pub grid: GridConfig,
    pub solution: SolutionConfig,
    /// Grid the transformed pair is sampled on.  Every node must be
    /// farther than `r_min` from the origin and its inversion must land
    /// inside the source grid.
    pub target: GridConfig,
    #[serde(default)]
    pub r_min: f64,
    /// Use the spinor inversion variant with the unit-vector Clifford
    /// rotation instead of the plain 1/|x| scaling.
    #[serde(default)]
    pub clifford_factor: bool,
    #[serde(default)]
    pub gates: Gates,
}
