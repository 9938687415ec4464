use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use impedance_sca::crypto::Scenario;
use impedance_sca::io::parse_touchstone;
use impedance_sca::pdn::{RlcLadder, DEFAULT_Z0_OHMS};
use impedance_sca::sim::{
    build_device_model, AveragingMode, BaselineSource, CampaignSettings, DeviceModel, DriftSpec,
    InputSchedule, KeySpec, NoisePreset, NormalizeMode, Placement, SignaturePolicy,
};
use impedance_sca::trace::Channel;
use impedance_sca::FrequencyGrid;
use serde::Deserialize;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Campaign description read by `simulate`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Campaign seed: inputs, shares and measurement noise.
    pub seed: u64,
    pub grid: Option<FrequencyGrid>,
    #[serde(default)]
    pub device: DeviceConfig,
    pub scenario: Scenario,
    pub schedule: InputSchedule,
    #[serde(default = "random_key")]
    pub key: KeySpec,
    #[serde(default)]
    pub campaign: CampaignConfig,
}

fn random_key() -> KeySpec {
    KeySpec::Random
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    /// Signature seed. Profiling and attack configs must agree on it.
    #[serde(default)]
    pub seed: u64,
    /// Load a saved device model instead of building one.
    pub file: Option<PathBuf>,
    pub noise: Option<NoisePreset>,
    pub noise_sigma: Option<f64>,
    #[serde(default = "die_branches")]
    pub die_branches: usize,
    #[serde(default = "z0")]
    pub z0_ohms: f64,
    #[serde(default = "reference_plane")]
    pub reference_plane_deg: f64,
    /// Measured baseline sweep; its grid replaces `[grid]`.
    pub baseline_touchstone: Option<PathBuf>,
    #[serde(default)]
    pub placement: Placement,
    /// Overrides the grid-derived signature policy.
    pub policy: Option<SignaturePolicy>,
    /// Give plaintext-share registers no signature (default) or signatures
    /// of their own.
    #[serde(default = "yes")]
    pub passive_inputs: bool,
}

fn die_branches() -> usize {
    4
}
fn z0() -> f64 {
    DEFAULT_Z0_OHMS
}
fn reference_plane() -> f64 {
    -90.0
}
fn yes() -> bool {
    true
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            file: None,
            noise: None,
            noise_sigma: None,
            die_branches: die_branches(),
            z0_ohms: z0(),
            reference_plane_deg: reference_plane(),
            baseline_touchstone: None,
            placement: Placement::default(),
            policy: None,
            passive_inputs: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default = "one")]
    pub averaging: u32,
    #[serde(default)]
    pub averaging_mode: AveragingMode,
    pub normalize: Option<NormalizeMode>,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub channel: Channel,
}

fn one() -> u32 {
    1
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            averaging: 1,
            averaging_mode: AveragingMode::default(),
            normalize: None,
            drift: DriftSpec::default(),
            channel: Channel::default(),
        }
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut raw: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        match raw.get("schema_version").and_then(|v| v.as_integer()) {
            Some(v) if v == CONFIG_SCHEMA_VERSION as i64 => {}
            Some(v) => bail!("config schema_version {v} is not supported (expected {CONFIG_SCHEMA_VERSION})"),
            None => bail!("config has no integer schema_version"),
        }
        raw.remove("schema_version");
        let mut cfg: SimConfig = toml::Value::Table(raw)
            .try_into()
            .with_context(|| format!("parsing {}", path.display()))?;
        // Relative paths are taken from the config's directory.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.device.file, &mut cfg.device.baseline_touchstone].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.scenario.validate().map_err(anyhow::Error::msg)?;
        Ok(cfg)
    }

    pub fn settings(&self) -> CampaignSettings {
        let c = &self.campaign;
        CampaignSettings {
            averaging: c.averaging,
            seed: self.seed,
            averaging_mode: c.averaging_mode,
            normalize: c.normalize,
            drift: c.drift,
            channel: c.channel,
        }
    }

    /// Build (or load) the device model the campaign runs on.
    pub fn device_model(&self) -> Result<DeviceModel> {
        let d = &self.device;
        if let Some(file) = &d.file {
            let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
            let model = DeviceModel::from_json(&text).with_context(|| format!("loading {}", file.display()))?;
            return self.apply_noise(model);
        }
        let (grid, baseline) = match &d.baseline_touchstone {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let trace = parse_touchstone(&text).with_context(|| format!("parsing {}", path.display()))?;
                (*trace.grid(), BaselineSource::Trace(trace))
            }
            None => {
                let grid = self.grid.context("config needs [grid] unless a baseline sweep is given")?;
                let ladder = BaselineSource::Ladder {
                    ladder: RlcLadder::reference_pdn(d.die_branches),
                    z0_ohms: d.z0_ohms,
                    reference_plane_deg: d.reference_plane_deg,
                };
                (grid, ladder)
            }
        };
        let policy = d
            .policy
            .clone()
            .unwrap_or_else(|| SignaturePolicy::for_grid(&grid, d.placement));
        let mut bits = self.scenario.secret_bits();
        if !d.passive_inputs {
            bits.extend(self.scenario.input_bits());
        }
        let mut model = build_device_model(&grid, &baseline, &bits, &policy, d.seed)?;
        if d.passive_inputs {
            model = model.with_passive(self.scenario.input_bits())?;
        }
        self.apply_noise(model)
    }

    fn apply_noise(&self, model: DeviceModel) -> Result<DeviceModel> {
        let d = &self.device;
        let sigma = match (d.noise, d.noise_sigma) {
            (Some(_), Some(_)) => bail!("set either device.noise or device.noise_sigma, not both"),
            (Some(p), None) => p.sigma(),
            (None, Some(s)) => s,
            (None, None) if d.file.is_some() => return Ok(model),
            (None, None) => NoisePreset::Nominal.sigma(),
        };
        Ok(model.with_noise(sigma)?)
    }
}
