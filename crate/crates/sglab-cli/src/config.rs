//! Run configuration, loaded from TOML or JSON and overridden by flags.

use serde::{Deserialize, Serialize};
use sglab::densities::TestDensity;
use sglab::mc::QuadratureSpec;
use sglab::quasiequiv::IntervalModel;
use sglab::smatrix::{CausalTriple, InteractionSpec, Probes};
use sglab::states::SchubertState;
use sglab::vertex::VertexMonomial;
use sglab::{Point, Result, SgError};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Environment variable overriding the output directory of the config file.
pub const OUTPUT_DIR_ENV: &str = "SGLAB_OUTPUT_DIR";

/// Normalized unit-mass bump centred at `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub t: f64,
    pub x: f64,
    pub half_width_t: f64,
    pub half_width_x: f64,
}

impl DensitySpec {
    pub const fn at(t: f64, x: f64, half_width: f64) -> Self {
        DensitySpec { t, x, half_width_t: half_width, half_width_x: half_width }
    }

    pub fn build(&self) -> Result<TestDensity> {
        if !(self.half_width_t > 0.0 && self.half_width_x > 0.0) {
            return Err(SgError::ConfigInvalid(format!("density half-widths must be positive: {self:?}")));
        }
        Ok(TestDensity::normalized_bump(Point::new(self.t, self.x), self.half_width_t, self.half_width_x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub a: f64,
    pub hbar: f64,
    pub lambda: f64,
    pub r: f64,
    pub p_exponent: f64,
    /// Reference density of the state.
    pub psi: DensitySpec,
    /// Coupling density of the interaction.
    pub g: DensitySpec,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            a: PI.sqrt(),
            hbar: 1.0,
            lambda: 1.0,
            r: 1.0,
            p_exponent: 2.0,
            psi: DensitySpec::at(0.0, 0.0, 0.3),
            g: DensitySpec::at(0.0, 0.0, 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { samples: 100_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    PauliJordan,
    Hadamard,
    Wightman,
    Feynman,
    DualPauliJordan,
    DualHadamard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorConfig {
    pub kernel: KernelKind,
    pub dt: f64,
    pub dx: f64,
    pub mu: f64,
    /// Random pairs for the identity sweep.
    pub pairs: usize,
    pub tolerance: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig { kernel: KernelKind::Feynman, dt: 2.0, dx: 1.0, mu: 1.0, pairs: 10_000, tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    /// Random density pairs for the dominance sweep.
    pub pairs: usize,
    pub lambdas: Vec<f64>,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig { pairs: 50, lambdas: vec![0.2, 0.1, 0.05] }
    }
}

/// Single vertex `:e^{iaΦ(t,x)}:` used as a probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub charge: f64,
    pub t: f64,
    pub x: f64,
}

impl ProbeSpec {
    fn monomial(&self) -> VertexMonomial {
        VertexMonomial::new(vec![self.charge], vec![Point::new(self.t, self.x)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Vertex,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmatrixConfig {
    pub k: usize,
    pub n_max: usize,
    pub left_probe: Option<ProbeSpec>,
    pub right_probe: Option<ProbeSpec>,
    pub perturbation: PerturbationKind,
    pub perturbation_density: DensitySpec,
    /// Random pairs for the vertex series sweep.
    pub series_pairs: usize,
    pub series_terms: usize,
}

impl Default for SmatrixConfig {
    fn default() -> Self {
        SmatrixConfig {
            k: 2,
            n_max: 3,
            left_probe: Some(ProbeSpec { charge: 0.5, t: 0.0, x: 2.0 }),
            right_probe: Some(ProbeSpec { charge: -0.5, t: 0.3, x: -2.0 }),
            perturbation: PerturbationKind::Vertex,
            perturbation_density: DensitySpec::at(1.0, 0.0, 0.4),
            series_pairs: 100,
            series_terms: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BogoliubovConfig {
    pub k: usize,
    /// `f` must lie outside the causal past of `h`.
    pub f: DensitySpec,
    pub g: Option<DensitySpec>,
    pub h: DensitySpec,
    /// Swap `f` and `h` and skip the causal precondition.
    pub control: bool,
}

impl Default for BogoliubovConfig {
    fn default() -> Self {
        BogoliubovConfig {
            k: 2,
            f: DensitySpec::at(3.0, 0.0, 0.4),
            g: Some(DensitySpec::at(1.5, 0.0, 0.4)),
            h: DensitySpec::at(0.0, 0.0, 0.4),
            control: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiequivConfig {
    pub length: f64,
    pub mass: f64,
    pub r: f64,
    pub basis_sizes: Vec<usize>,
    pub max_drift: f64,
    pub cutoffs: Vec<f64>,
    pub max_ratio: f64,
    pub airy_lengths: Vec<f64>,
    pub airy_trials: usize,
}

impl Default for QuasiequivConfig {
    fn default() -> Self {
        QuasiequivConfig {
            length: 2.0,
            mass: 1.0,
            r: 1.0,
            basis_sizes: vec![8, 16, 32],
            max_drift: 0.2,
            cutoffs: vec![8.0, 16.0, 32.0, 64.0],
            max_ratio: 0.6,
            airy_lengths: vec![1.0, 2.0, 4.0],
            airy_trials: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThirringConfig {
    pub alphas: Vec<f64>,
    /// Random spacelike pairs for the exact identities.
    pub pairs: usize,
    pub tolerance: f64,
    pub ope_tolerance: f64,
}

impl Default for ThirringConfig {
    fn default() -> Self {
        ThirringConfig { alphas: vec![1.0, PI.sqrt()], pairs: 1000, tolerance: 1e-12, ope_tolerance: 0.03 }
    }
}

/// Full configuration of one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub quadrature: QuadratureConfig,
    pub propagator: PropagatorConfig,
    pub state: StateConfig,
    pub smatrix: SmatrixConfig,
    pub bogoliubov: BogoliubovConfig,
    pub quasiequiv: QuasiequivConfig,
    pub thirring: ThirringConfig,
    /// Where records are written; not part of the config hash.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a `.toml` or `.json` file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SgError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| SgError::ConfigInvalid(format!("{}: {e}", path.display()))),
            Some("toml") => toml::from_str(&text).map_err(|e| SgError::ConfigInvalid(format!("{}: {e}", path.display()))),
            _ => Err(SgError::ConfigInvalid(format!("{}: expected a .toml or .json file", path.display()))),
        }
    }

    /// Output directory: environment variable, then config, then `sglab-out`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone().unwrap_or_else(|| PathBuf::from("sglab-out")),
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec::new(self.quadrature.samples, self.quadrature.seed)
    }

    pub fn state(&self) -> Result<SchubertState> {
        SchubertState::new(self.model.psi.build()?, self.model.r, self.model.hbar)
    }

    pub fn interaction(&self) -> Result<InteractionSpec> {
        let spec = InteractionSpec {
            a: self.model.a,
            hbar: self.model.hbar,
            coupling: self.model.lambda,
            g: self.model.g.build()?,
            p_exponent: self.model.p_exponent,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn probes(&self) -> Probes {
        Probes {
            left: self.smatrix.left_probe.map(|p| p.monomial()),
            right: self.smatrix.right_probe.map(|p| p.monomial()),
        }
    }

    pub fn causal_triple(&self) -> Result<CausalTriple> {
        let b = &self.bogoliubov;
        let g = b.g.map(|g| g.build()).transpose()?;
        let (f, h) = if b.control { (b.h, b.f) } else { (b.f, b.h) };
        Ok(CausalTriple { f: f.build()?, g, h: h.build()? })
    }

    pub fn interval_model(&self) -> Result<IntervalModel> {
        let q = &self.quasiequiv;
        IntervalModel::new(q.length, q.mass, q.r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml_and_json() {
        let c = RunConfig::default();
        let t: RunConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        let j: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(t, c);
        assert_eq!(j, c);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let c: RunConfig = toml::from_str("[quadrature]\nseed = 9\n[model]\nlambda = 0.5\n").unwrap();
        assert_eq!(c.quadrature.seed, 9);
        assert_eq!(c.quadrature.samples, QuadratureConfig::default().samples);
        assert_eq!(c.model.lambda, 0.5);
        assert!(toml::from_str::<RunConfig>("[model]\nalpha = 1.0\n").is_err());
    }

    #[test]
    fn default_interaction_is_in_the_finite_regime() {
        let c = RunConfig::default();
        let spec = c.interaction().unwrap();
        assert!((spec.rho() - 0.25).abs() < 1e-15);
        spec.validate_with(&c.state().unwrap()).unwrap();
        let mut bad = RunConfig::default();
        bad.model.a = 4.0;
        assert!(matches!(bad.interaction(), Err(SgError::RegimeViolation { .. })));
    }

    #[test]
    fn control_swaps_the_triple() {
        let mut c = RunConfig::default();
        let causal = c.causal_triple().unwrap();
        c.bogoliubov.control = true;
        let swapped = c.causal_triple().unwrap();
        assert_eq!(causal.f, swapped.h);
        assert_eq!(causal.h, swapped.f);
    }
}
