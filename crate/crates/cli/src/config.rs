//! TOML run configuration: one section per parameter group.

use std::path::Path;

use casimir_lab::{
    AnalysisOptions, CampaignConfig, CavityParams, FilmParams, NoiseModel, ThermalEnvironment,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Campaign layout: which fields, how many sweeps, how long each lasts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignSection {
    pub fields_mt: Vec<f64>,
    pub sweep_duration_s: f64,
    pub points_per_sweep: usize,
    pub replications: usize,
    pub settle_time_s: f64,
    /// Relative excess field at the cavity position.
    pub homogeneity: f64,
    pub film_sample_id: String,
    pub cavity_sample_id: String,
}

impl Default for CampaignSection {
    fn default() -> Self {
        let c = CampaignConfig::default();
        Self {
            fields_mt: c.fields_mt,
            sweep_duration_s: c.sweep_duration_s,
            points_per_sweep: c.points_per_sweep,
            replications: c.replications,
            settle_time_s: c.settle_time_s,
            homogeneity: c.homogeneity,
            film_sample_id: c.film_sample_id,
            cavity_sample_id: c.cavity_sample_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub film: FilmParams,
    /// `[cavity.film]` falls back to `[film]` when absent.
    #[serde(default)]
    pub cavity: CavityParams,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub campaign: CampaignSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalEnvironment>,
    #[serde(default)]
    pub analysis: AnalysisOptions,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let has_cavity_film = table
            .get("cavity")
            .and_then(|c| c.as_table())
            .is_some_and(|c| c.contains_key("film"));
        if !has_cavity_film {
            cfg.cavity.film = cfg.film;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        fn section(name: &str, e: impl std::fmt::Display) -> CliError {
            CliError::Config(format!("[{name}] {e}"))
        }
        self.film.validate().map_err(|e| section("film", e))?;
        self.cavity.validate().map_err(|e| section("cavity", e))?;
        if let Some(env) = &self.thermal {
            env.validate().map_err(|e| section("thermal", e))?;
        }
        self.campaign_config()
            .validate()
            .map_err(|e| section("campaign", e))?;
        self.analysis.validate().map_err(|e| section("analysis", e))?;
        Ok(())
    }

    pub fn campaign_config(&self) -> CampaignConfig {
        let c = &self.campaign;
        CampaignConfig {
            film: self.film,
            cavity: self.cavity,
            noise: self.noise,
            fields_mt: c.fields_mt.clone(),
            sweep_duration_s: c.sweep_duration_s,
            points_per_sweep: c.points_per_sweep,
            replications: c.replications,
            settle_time_s: c.settle_time_s,
            thermal: self.thermal,
            homogeneity: c.homogeneity,
            film_sample_id: c.film_sample_id.clone(),
            cavity_sample_id: c.cavity_sample_id.clone(),
        }
    }
}

/// Commented TOML holding every default value.
pub fn example_config() -> String {
    let mut table = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
    if let Some(toml::Value::Table(cavity)) = table.get_mut("cavity") {
        cavity.remove("film");
    }
    let body = toml::to_string(&table).expect("defaults serialize");
    let env = ThermalEnvironment::default();
    format!(
        "# casimir-lab run configuration. Units follow the key suffixes:\n\
         # nm, mT, K, mK, uK, ohm, rad, s. Missing keys take the values shown.\n\
         # [cavity.film] may override any [film] key for the cavity sample;\n\
         # by default the cavity film equals [film].\n\
         # [analysis] fit_threshold_mt = <mT> fixes the high-field cut.\n\n\
         {body}\n\
         # Thermal-photon scenario (uncomment to enable):\n\
         # [thermal]\n\
         # t_env_k = {:?}\n\
         # x_eff = {:?}\n",
        env.t_env_k, env.x_eff
    )
}
