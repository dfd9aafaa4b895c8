//! Scenario configuration: a sectioned key = value file covering every
//! simulation parameter, with dB-suffixed keys converted to linear scale
//! when the derived model objects are built.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocation::Objective;
use crate::channel::{FrequencyGrid, LinkBudget};
use crate::codebook::{design_codebook, Codebook};
use crate::geometry::{PolarPosition, RadiusLaw, RisGeometry};
use crate::metrics::{FrameSpec, Scheme};
use crate::robust_rate::{LemmaForm, OutageSpec};
use crate::{db_to_linear, dbm_to_watts, Error, Result, PROPAGATION_VELOCITY};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    /// Inner service-ring radius in meters.
    pub r_inn: f64,
    /// Outer service-ring radius in meters.
    pub r_out: f64,
    /// Base-station Cartesian position in meters.
    pub bs_position: [f64; 3],
    /// RIS element counts per axis.
    pub n_x: usize,
    pub n_z: usize,
    /// Element spacing as a fraction of the RB-0 wavelength.
    pub spacing_wavelength_fraction: f64,
    pub radius_law: RadiusLaw,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            r_inn: 9.0,
            r_out: 30.0,
            bs_position: [10.0, 100.0, 0.0],
            n_x: 10,
            n_z: 10,
            spacing_wavelength_fraction: 0.5,
            radius_law: RadiusLaw::AreaUniform,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioSection {
    /// Central frequency of RB 0 in Hz.
    pub f0_hz: f64,
    /// RB bandwidth in Hz.
    pub delta_f_hz: f64,
    /// Number of resource blocks.
    pub n_rb: usize,
    /// OFDM symbols per slot, split into data and localization symbols.
    pub tau_ofdm: usize,
    pub tau_d: usize,
    pub tau_l: usize,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self {
            f0_hz: 1.8e9,
            delta_f_hz: 180e3,
            n_rb: 50,
            tau_ofdm: 14,
            tau_d: 7,
            tau_l: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    /// Per-user transmit power in dBm.
    pub tx_power_dbm: f64,
    /// Receiver noise power in dBm.
    pub noise_power_dbm: f64,
    /// Rician factor in dB.
    pub rician_k_db: f64,
    /// Reference path gain at 1 m in dB.
    pub beta0_db: f64,
    pub pl_exponent: f64,
    /// Product of BS and UE antenna gains in dB.
    pub antenna_gain_db: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            tx_power_dbm: 20.0,
            noise_power_dbm: -112.45,
            rician_k_db: -9.0,
            beta0_db: -31.53,
            pl_exponent: 2.7,
            antenna_gain_db: 12.85,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerSection {
    /// Decode-success probability target.
    pub epsilon: f64,
    pub objective: Objective,
    pub schemes: Vec<Scheme>,
    pub k_users: usize,
    pub trials: usize,
    pub seed: u64,
    /// Codebook overlap gain threshold in dB.
    pub tau_db: f64,
    /// Reproduce the published noncentrality/scale expressions verbatim.
    pub lemma_literal: bool,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        Self {
            epsilon: 0.95,
            objective: Objective::MaxRate,
            schemes: vec![Scheme::Jnt, Scheme::Seq, Scheme::Csi],
            k_users: 55,
            trials: 500,
            seed: 1,
            tau_db: -3.0103,
            lemma_literal: false,
        }
    }
}

/// Full simulation configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub geometry: GeometrySection,
    pub radio: RadioSection,
    pub link: LinkSection,
    pub scheduler: SchedulerSection,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse failure: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Cross-field checks beyond what the section types express.
    pub fn validate(&self) -> Result<()> {
        self.ris()?;
        self.grid()?;
        self.link_budget()?;
        self.outage()?;
        self.bs()?;
        if self.scheduler.k_users == 0 {
            return Err(Error::Config("k_users must be >= 1".into()));
        }
        if self.scheduler.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.radio.tau_d + self.radio.tau_l != self.radio.tau_ofdm {
            return Err(Error::Config(
                "tau_d + tau_l must equal tau_ofdm".into(),
            ));
        }
        Ok(())
    }

    /// Applies a `key=value` override. Bare keys are searched across all
    /// sections; dotted keys address a section directly.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
        let key = key.trim();
        let value = value.trim();
        let mut tree = toml::Value::try_from(self.clone())
            .map_err(|e| Error::Config(format!("serialize failure: {e}")))?;

        let (section, field) = match key.split_once('.') {
            Some((s, f)) => (Some(s.to_string()), f.to_string()),
            None => {
                let root = tree.as_table().expect("config serializes to a table");
                let mut hits: Vec<String> = Vec::new();
                for (name, sec) in root {
                    if sec.as_table().is_some_and(|t| t.contains_key(key)) {
                        hits.push(name.clone());
                    }
                }
                match hits.len() {
                    0 => return Err(Error::Config(format!("unknown override key '{key}'"))),
                    1 => (Some(hits.remove(0)), key.to_string()),
                    _ => {
                        return Err(Error::Config(format!(
                            "override key '{key}' is ambiguous across sections {hits:?}"
                        )))
                    }
                }
            }
        };

        let section = section.expect("resolved section");
        let table = tree
            .get_mut(&section)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| Error::Config(format!("unknown section '{section}'")))?;
        if !table.contains_key(&field) {
            return Err(Error::Config(format!(
                "unknown override key '{section}.{field}'"
            )));
        }
        let parsed: toml::Value = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(field, parsed);

        *self = tree
            .try_into()
            .map_err(|e| Error::Config(format!("override rejected: {e}")))?;
        self.validate()
    }

    // -- derived model objects --------------------------------------------

    pub fn ris(&self) -> Result<RisGeometry> {
        let lambda0 = PROPAGATION_VELOCITY / self.radio.f0_hz;
        let d = self.geometry.spacing_wavelength_fraction * lambda0;
        RisGeometry::new(self.geometry.n_x, self.geometry.n_z, d, d)
    }

    pub fn bs(&self) -> Result<PolarPosition> {
        PolarPosition::from_cartesian(self.geometry.bs_position)
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.radio.f0_hz, self.radio.delta_f_hz, self.radio.n_rb)
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        LinkBudget::new(
            dbm_to_watts(self.link.tx_power_dbm),
            dbm_to_watts(self.link.noise_power_dbm),
            db_to_linear(self.link.rician_k_db),
            db_to_linear(self.link.beta0_db),
            self.link.pl_exponent,
            db_to_linear(self.link.antenna_gain_db),
        )
    }

    pub fn outage(&self) -> Result<OutageSpec> {
        OutageSpec::new(self.scheduler.epsilon)
    }

    pub fn lemma_form(&self) -> LemmaForm {
        if self.scheduler.lemma_literal {
            LemmaForm::Literal
        } else {
            LemmaForm::Derived
        }
    }

    pub fn codebook(&self) -> Result<Codebook> {
        design_codebook(
            &self.ris()?,
            self.bs()?.azimuth,
            self.radio.f0_hz,
            db_to_linear(self.scheduler.tau_db),
        )
    }

    /// Frame layout; the slot count tracks the codebook size.
    pub fn frame(&self, n_slots: usize) -> Result<FrameSpec> {
        FrameSpec::new(
            n_slots,
            self.radio.tau_ofdm,
            self.radio.tau_d,
            self.radio.tau_l,
        )
    }

    pub fn ring(&self) -> (f64, f64) {
        (self.geometry.r_inn, self.geometry.r_out)
    }
}
