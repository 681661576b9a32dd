//! Run configuration read from TOML. Every section and key is optional;
//! missing values take the defaults of the model system and unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use attoscatter_core::classical::TrajectoryConfig;
use attoscatter_core::{
    Grid, NirParams, PotentialParams, PropagationConfig, QuadratureConfig, ScatteringConfig,
    SplitConfig, XuvTargets,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn default_f0_sweep() -> Vec<f64> {
    vec![0.0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    /// Smaller grid with the same spacing on which the bound states and
    /// scattering states are computed.
    pub aux_q_min: f64,
    pub aux_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            q_min: -2048.0,
            q_max: 2048.0,
            n_points: 65536,
            aux_q_min: -64.0,
            aux_points: 2048,
        }
    }
}

impl GridConfig {
    pub fn production(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.q_min, self.q_max, self.n_points)?)
    }

    pub fn auxiliary(&self) -> Result<Grid, CliError> {
        let prod = self.production()?;
        Ok(Grid::with_spacing(self.aux_q_min, prod.dq(), self.aux_points)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub f0: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { f0: default_f0_sweep() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DipoleConfig {
    /// Every `stride`-th momentum of the production lattice is tabulated.
    pub stride: usize,
    /// Largest |p| needed by the analysis before padding by max|A|.
    pub p_max: f64,
    /// Extra margin beyond max|A|.
    pub margin: f64,
    /// Largest eigen-residual accepted for a tabulated state.
    pub max_residual: f64,
}

impl Default for DipoleConfig {
    fn default() -> Self {
        Self {
            stride: 3,
            p_max: 4.0,
            margin: 0.1,
            max_residual: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub fringe_window: [f64; 2],
    /// Momentum range written to spectrum files.
    pub spectrum_range: [f64; 2],
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            fringe_window: [1.8, 3.0],
            spectrum_range: [-4.5, 4.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from("cache"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialParams,
    pub grid: GridConfig,
    pub xuv: XuvTargets,
    pub nir: NirParams,
    pub sweep: SweepConfig,
    pub propagation: PropagationConfig,
    pub scattering: ScatteringConfig,
    pub dipole: DipoleConfig,
    pub quadrature: QuadratureConfig,
    pub trajectory: TrajectoryConfig,
    pub analysis: AnalysisConfig,
    pub split: SplitConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.potential.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.propagation.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.scattering.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let prod = self.grid.production().map_err(|e| CliError::Config(e.to_string()))?;
        let aux = self.grid.auxiliary().map_err(|e| CliError::Config(e.to_string()))?;
        if prod.embedding_offset(&aux).is_none() {
            return bad("the auxiliary grid must be a sub-lattice of the production grid".into());
        }
        if self.sweep.f0.is_empty() {
            return bad("sweep.f0 must list at least one field strength".into());
        }
        if self.sweep.f0.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return bad("sweep.f0 values must be finite and nonnegative".into());
        }
        if self.dipole.stride == 0 || !(self.dipole.p_max > self.scattering.p_min) {
            return bad("dipole.stride must be positive and p_max above p_min".into());
        }
        let [lo, hi] = self.analysis.fringe_window;
        if !(lo < hi && lo > 0.0) {
            return bad(format!("fringe_window [{lo}, {hi}] must be increasing and positive"));
        }
        let [lo, hi] = self.analysis.spectrum_range;
        if !(lo < hi) {
            return bad(format!("spectrum_range [{lo}, {hi}] must be increasing"));
        }
        if !(self.split.search_lo < self.split.search_hi && self.split.smoothing > 0.0) {
            return bad("split window must be increasing with positive smoothing".into());
        }
        Ok(())
    }

    /// The config with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// F0 list with 0 prepended when missing; sorted ascending.
    pub fn f0_values(&self) -> Vec<f64> {
        let mut f = self.sweep.f0.clone();
        if !f.contains(&0.0) {
            f.push(0.0);
        }
        f.sort_by(f64::total_cmp);
        f.dedup();
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_toml("[potential]\nz3 = 1.0\n").unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
        assert!(RunConfig::from_toml("[nirr]\n").is_err());
    }

    #[test]
    fn round_trip_and_overrides() {
        let c = RunConfig::from_toml(
            "[sweep]\nf0 = [0.01]\n[nir]\npolarity = \"negative-peak\"\n[xuv]\npeak_convention = \"mean\"\n",
        )
        .unwrap();
        assert_eq!(c.f0_values(), vec![0.0, 0.01]);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn default_sweep_contains_zero_and_stays_perturbative() {
        let s = default_f0_sweep();
        assert!(s.contains(&0.0));
        let omega = attoscatter_core::constants::omega_from_wavelength_nm(800.0);
        let a_max = s.iter().cloned().fold(0.0, f64::max) / omega;
        assert!((a_max - 0.527).abs() < 1e-3, "{a_max}");
        assert!(a_max < 0.22 * 2.42);
    }

    #[test]
    fn misaligned_aux_grid_is_rejected() {
        assert!(RunConfig::from_toml("[grid]\naux_q_min = -64.01\n").is_err());
    }
}
