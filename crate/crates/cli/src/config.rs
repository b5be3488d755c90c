//! TOML run configuration.
//!
//! The `[simulate]` block mirrors the simulation config field for field
//! (`beta`, `delta`, `u_min`, `box`, `horizon`, `attributes`, `kernel`,
//! `seed`) plus the panel layout (sites, extras, grid size). A master `seed`
//! at the top level is mandatory — there is no wall-clock fallback — and
//! every stage derives its own streams from it unless a stage seed is given
//! explicitly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use tailwait_core::{
    attr::{Attribute, AttributeDistribution},
    exceedance::MarginTarget,
    linalg::SymMat,
    mixture::MixturePriors,
    sim::{KernelKind, MsvConfig, SpaceBox, WindowPolicy},
    tail_dep::Metric,
};

use crate::CliError;

/// The five reference observation sites of the default simulation design.
pub const FIXED_SITES: [[f64; 2]; 5] =
    [[5.0, 5.0], [5.0, 5.5], [1.0, 1.0], [8.0, 8.0], [3.0, 5.0]];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; pins every derived stream.
    pub seed: u64,
    /// Output directory (CLI `--out` overrides).
    pub out_dir: Option<PathBuf>,
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub waits: WaitsConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub gamma: GammaConfig,
    #[serde(default)]
    pub simstudy: SimstudyConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub beta: f64,
    pub delta: f64,
    pub u_min: f64,
    #[serde(rename = "box")]
    pub space_box: BoxConfig,
    pub horizon: f64,
    pub attributes: AttributesConfig,
    #[serde(default)]
    pub kernel: KernelName,
    /// Stage seed; derived from the master seed when absent.
    pub seed: Option<u64>,
    #[serde(default)]
    pub window: WindowConfig,
    /// Observation sites; defaults to the five reference locations.
    pub sites: Option<Vec<Vec<f64>>>,
    /// Additional sites sampled uniformly on the box.
    #[serde(default = "default_extra_sites")]
    pub extra_sites: usize,
    /// Number of evenly spaced recording times on (0, horizon].
    #[serde(default = "default_n_times")]
    pub n_times: usize,
}

fn default_extra_sites() -> usize {
    20
}

fn default_n_times() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowConfig {
    Named(String),
    Fixed {
        time_pad: f64,
        space_pad: f64,
    },
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig::Named("auto".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttributesConfig {
    PointMass {
        velocity: Vec<f64>,
        shape: Vec<Vec<f64>>,
    },
    Factored {
        wishart_df: f64,
        wishart_scale: Vec<Vec<f64>>,
        speed_mean: f64,
        speed_shape: f64,
        angle_rate: f64,
    },
    Empirical {
        items: Vec<EmpiricalItem>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalItem {
    pub velocity: Vec<f64>,
    pub shape: Vec<Vec<f64>>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaitsConfig {
    /// Panel CSV to ingest; defaults to `<out_dir>/panel.csv`.
    pub panel: Option<PathBuf>,
    #[serde(default)]
    pub preprocess: PreprocessName,
    #[serde(default)]
    pub tail: TailName,
    #[serde(default)]
    pub margins: MarginName,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
}

impl Default for WaitsConfig {
    fn default() -> Self {
        Self {
            panel: None,
            preprocess: PreprocessName::default(),
            tail: TailName::default(),
            margins: MarginName::default(),
            quantiles: default_quantiles(),
            min_count: default_min_count(),
        }
    }
}

fn default_quantiles() -> Vec<f64> {
    vec![0.999, 0.99]
}

fn default_min_count() -> usize {
    100
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessName {
    #[default]
    Identity,
    NegLogReturn,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailName {
    #[default]
    Upper,
    Lower,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginName {
    None,
    #[default]
    Frechet,
    Exponential,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "default_components")]
    pub components: usize,
    /// Defaults to 1/components.
    pub dirichlet_alpha: Option<f64>,
    #[serde(default = "default_gamma_hyper")]
    pub gamma_shape: f64,
    #[serde(default = "default_gamma_hyper")]
    pub gamma_rate: f64,
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            components: default_components(),
            dirichlet_alpha: None,
            gamma_shape: default_gamma_hyper(),
            gamma_rate: default_gamma_hyper(),
            n_iter: default_n_iter(),
            burn_in: default_burn_in(),
            thin: default_thin(),
        }
    }
}

fn default_components() -> usize {
    11
}

fn default_gamma_hyper() -> f64 {
    1.0
}

fn default_n_iter() -> usize {
    10_000
}

fn default_burn_in() -> usize {
    2_000
}

fn default_thin() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    #[serde(default)]
    pub metric: MetricName,
    #[serde(default = "default_predictive_size")]
    pub predictive_size: usize,
    #[serde(default = "default_mmd_scale")]
    pub mmd_scale: f64,
    /// Also write the full posterior samples CSV.
    #[serde(default)]
    pub export_samples: bool,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            metric: MetricName::default(),
            predictive_size: default_predictive_size(),
            mmd_scale: default_mmd_scale(),
            export_samples: false,
        }
    }
}

fn default_predictive_size() -> usize {
    500
}

fn default_mmd_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    #[default]
    Rkhs,
    Ks,
    Both,
}

impl MetricName {
    pub fn metrics(self) -> Vec<Metric> {
        match self {
            MetricName::Rkhs => vec![Metric::Rkhs],
            MetricName::Ks => vec![Metric::Ks],
            MetricName::Both => vec![Metric::Rkhs, Metric::Ks],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimstudyConfig {
    /// Multiplies the horizon and the time-grid size, preserving rates.
    #[serde(default = "default_scale")]
    pub scale: f64,
}

impl Default for SimstudyConfig {
    fn default() -> Self {
        Self { scale: default_scale() }
    }
}

fn default_scale() -> f64 {
    1.0
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// FNV-1a over the canonical JSON encoding; stamped into every metadata
    /// record so outputs can be traced back to their exact configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in json.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.out_dir
            .as_deref()
            .ok_or_else(|| CliError::Config("no output directory (set out_dir or --out)".into()))
    }

    pub fn margin_target(&self) -> Option<MarginTarget> {
        match self.waits.margins {
            MarginName::None => None,
            MarginName::Frechet => Some(MarginTarget::Frechet),
            MarginName::Exponential => Some(MarginTarget::Exponential),
        }
    }

    pub fn mixture_priors(&self) -> Result<MixturePriors, CliError> {
        let f = &self.fit;
        let priors = MixturePriors {
            components: f.components,
            dirichlet_alpha: f.dirichlet_alpha.unwrap_or(1.0 / f.components as f64),
            gamma_shape: f.gamma_shape,
            gamma_rate: f.gamma_rate,
        };
        priors.validate().map_err(CliError::from)
    }
}

fn sym_mat(rows: &[Vec<f64>]) -> Result<SymMat, CliError> {
    let d = rows.len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.len() != d * d {
        return Err(CliError::Config("shape matrix rows must be square".into()));
    }
    SymMat::from_rows(d, flat).map_err(CliError::from)
}

impl AttributesConfig {
    pub fn build(&self) -> Result<AttributeDistribution, CliError> {
        match self {
            AttributesConfig::PointMass { velocity, shape } => Ok(
                AttributeDistribution::PointMass(Attribute::new(velocity.clone(), sym_mat(shape)?)?),
            ),
            AttributesConfig::Factored {
                wishart_df,
                wishart_scale,
                speed_mean,
                speed_shape,
                angle_rate,
            } => AttributeDistribution::factored(
                *wishart_df,
                sym_mat(wishart_scale)?,
                *speed_mean,
                *speed_shape,
                *angle_rate,
            )
            .map_err(CliError::from),
            AttributesConfig::Empirical { items } => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push((
                        Attribute::new(item.velocity.clone(), sym_mat(&item.shape)?)?,
                        item.weight,
                    ));
                }
                AttributeDistribution::empirical(out).map_err(CliError::from)
            }
        }
    }
}

impl SimulateConfig {
    /// Concrete simulation config; `master` fills a missing stage seed.
    pub fn build(&self, master: tailwait_core::Seed) -> Result<MsvConfig, CliError> {
        let window = match &self.window {
            WindowConfig::Named(name) => match name.as_str() {
                "auto" => WindowPolicy::Auto,
                "none" => WindowPolicy::None,
                other => {
                    return Err(CliError::Config(format!(
                        "window must be \"auto\", \"none\", or {{ time_pad, space_pad }}; got {other:?}"
                    )))
                }
            },
            WindowConfig::Fixed { time_pad, space_pad } => {
                WindowPolicy::Fixed { time_pad: *time_pad, space_pad: *space_pad }
            }
        };
        let config = MsvConfig {
            beta: self.beta,
            delta: self.delta,
            u_min: self.u_min,
            region: SpaceBox::new(self.space_box.lower.clone(), self.space_box.upper.clone())?,
            horizon: self.horizon,
            attributes: self.attributes.build()?,
            kernel: match self.kernel {
                KernelName::Gaussian => KernelKind::Gaussian,
            },
            seed: self.seed.unwrap_or_else(|| master.derive(crate::commands::TAG_SIM).0),
            window,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 42
out_dir = "run"

[simulate]
beta = 0.0016666666666666668
delta = 0.008333333333333333
u_min = 1.0
horizon = 438000.0
box = { lower = [0.0, 0.0], upper = [10.0, 10.0] }
n_times = 1000

[simulate.attributes]
kind = "factored"
wishart_df = 7.0
wishart_scale = [[1.0, 0.0], [0.0, 1.0]]
speed_mean = 0.1
speed_shape = 0.5
angle_rate = 0.5

[waits]
quantiles = [0.99]

[gamma]
metric = "both"
"#;

    #[test]
    fn parses_and_builds() {
        let cfg: RunConfig = toml::from_str(SAMPLE).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.fit.components, 11);
        assert_eq!(cfg.waits.quantiles, vec![0.99]);
        assert_eq!(cfg.gamma.metric, MetricName::Both);
        let sim = cfg.simulate.as_ref().unwrap().build(tailwait_core::Seed(42)).unwrap();
        assert!((sim.beta - 1.0 / 600.0).abs() < 1e-12);
        assert!(matches!(sim.window, WindowPolicy::Auto));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a: RunConfig = toml::from_str(SAMPLE).unwrap();
        let b: RunConfig = toml::from_str(SAMPLE).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c: RunConfig = toml::from_str(SAMPLE).unwrap();
        c.seed = 43;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_unknown_keys_and_missing_seed() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
        assert!(toml::from_str::<RunConfig>("").is_err());
        let bad = format!("{SAMPLE}\n[simulate.nonsense]\nx = 1\n");
        assert!(toml::from_str::<RunConfig>(&bad).is_err());
    }

    #[test]
    fn window_variants_parse() {
        let named: RunConfig =
            toml::from_str(&SAMPLE.replace("n_times = 1000", "n_times = 10\nwindow = \"none\""))
                .unwrap();
        let sim = named.simulate.unwrap().build(tailwait_core::Seed(1)).unwrap();
        assert!(matches!(sim.window, WindowPolicy::None));
        let fixed: RunConfig = toml::from_str(&SAMPLE.replace(
            "n_times = 1000",
            "n_times = 10\nwindow = { time_pad = 5.0, space_pad = 2.0 }",
        ))
        .unwrap();
        let sim = fixed.simulate.unwrap().build(tailwait_core::Seed(1)).unwrap();
        assert!(matches!(sim.window, WindowPolicy::Fixed { .. }));
    }
}
