//! System-level metrics and the perfect-CSI benchmark.
//!
//! Throughput weights the aggregated spectral efficiency by a per-scheme
//! efficiency factor: the localization schemes pay the data/localization
//! symbol split and the decode-success target, while the CSI baseline
//! pays a pilot overhead that grows linearly with the user count.

use rand::Rng;

use crate::allocation::UserRates;
use crate::channel::{reflected_channel, sample_direct, snr, FrequencyGrid, LinkBudget};
use crate::codebook::Codebook;
use crate::geometry::Scenario;
use crate::robust_rate::RateTensor;
use crate::{Error, Result};

/// Time-slot frame layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    /// Number of time slots; equals the codebook size in shipped
    /// scenarios.
    pub n_slots: usize,
    /// OFDM symbols per slot.
    pub tau_ofdm: usize,
    /// Data symbols per slot.
    pub tau_d: usize,
    /// Localization symbols per slot.
    pub tau_l: usize,
}

impl FrameSpec {
    pub fn new(n_slots: usize, tau_ofdm: usize, tau_d: usize, tau_l: usize) -> Result<Self> {
        if tau_d + tau_l != tau_ofdm {
            return Err(Error::InvalidArgument(format!(
                "tau_d + tau_l = {} must equal tau_ofdm = {tau_ofdm}",
                tau_d + tau_l
            )));
        }
        if n_slots == 0 || tau_ofdm == 0 {
            return Err(Error::InvalidArgument(
                "frame needs positive slot and symbol counts".into(),
            ));
        }
        Ok(Self {
            n_slots,
            tau_ofdm,
            tau_d,
            tau_l,
        })
    }
}

/// Communication scheme label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Localization-based, joint allocation over the full grid.
    Jnt,
    /// Localization-based, nearest-beam slot partition first.
    Seq,
    /// Perfect-CSI benchmark with pilot overhead.
    Csi,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Jnt => "jnt",
            Scheme::Seq => "seq",
            Scheme::Csi => "csi",
        })
    }
}

/// Pilot length needed for channel estimation with `k` users and `n_x`
/// RIS columns.
pub fn csi_pilot_length(k: usize, n_x: usize) -> usize {
    k * (n_x + 1)
}

/// Fraction of the frame usable for data under scheme `scheme`.
pub fn efficiency(scheme: Scheme, frame: &FrameSpec, epsilon: f64, k: usize, n_x: usize) -> f64 {
    match scheme {
        Scheme::Jnt | Scheme::Seq => {
            epsilon * frame.tau_d as f64 / (frame.tau_d + frame.tau_l) as f64
        }
        Scheme::Csi => {
            let frame_symbols = (frame.n_slots * frame.tau_ofdm) as f64;
            frame_symbols / (frame_symbols + csi_pilot_length(k, n_x) as f64)
        }
    }
}

/// System throughput in bit/s.
pub fn throughput(user_rates: &UserRates, frame: &FrameSpec, delta_f: f64, eta: f64) -> f64 {
    eta * delta_f / frame.n_slots as f64 * user_rates.iter().sum::<f64>()
}

/// Jain fairness index, normalized to [1/K, 1].
pub fn jain_index(user_rates: &UserRates) -> Result<f64> {
    let sum: f64 = user_rates.iter().sum();
    let sum_sq: f64 = user_rates.iter().map(|r| r * r).sum();
    if sum_sq == 0.0 {
        return Err(Error::InvalidArgument(
            "Jain index undefined for all-zero rates".into(),
        ));
    }
    Ok(sum * sum / (user_rates.len() as f64 * sum_sq))
}

/// Per-realization capacity tensor for the perfect-CSI benchmark.
///
/// Unlike the robust tensor this draws the direct-channel fading, so two
/// calls with different generator states differ.
pub fn csi_rate_tensor<R: Rng>(
    scenario: &Scenario,
    codebook: &Codebook,
    grid: &FrequencyGrid,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<RateTensor> {
    let mut tensor = RateTensor::zeros(scenario.n_users(), grid.n_rb, codebook.len());
    for (k, &ue) in scenario.users.iter().enumerate() {
        let h = sample_direct(ue, scenario.bs, grid, budget, rng)?;
        for (c, cfg) in codebook.configs.iter().enumerate() {
            let g = reflected_channel(ue, scenario.bs, cfg, &scenario.ris, grid, budget)?;
            for f in 0..grid.n_rb {
                let gamma = snr(h[f], g[f], budget);
                tensor.set(k, f, c, (1.0 + gamma).log2());
            }
        }
    }
    Ok(tensor)
}

/// Aggregated result of one scheme at one operating point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricsReport {
    pub scheme: Scheme,
    pub mean_throughput_bps: f64,
    pub stderr_bps: f64,
    pub jain_mean: f64,
    pub jain_stderr: f64,
    pub per_user_throughput_bps: f64,
    pub efficiency: f64,
    pub trials: usize,
}
