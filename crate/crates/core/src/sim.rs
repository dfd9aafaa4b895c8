//! Monte-Carlo driver: trial execution, sweep presets, and result export.
//!
//! Randomness is split into named substreams keyed by (seed, trial) so a
//! sweep produces identical output regardless of the thread count.

use std::io::Write;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{
    allocate, assign_configs, sequential_allocate, user_rates, Objective,
};
use crate::config::ScenarioConfig;
use crate::geometry::{sample_ring, Scenario};
use crate::metrics::{csi_rate_tensor, efficiency, jain_index, throughput, Scheme};
use crate::robust_rate::build_rate_tensor;
use crate::{Error, Result};

/// Substream labels. Deployment and fading use independent generators so
/// that adding a scheme never perturbs the user drop.
const STREAM_DEPLOY: u64 = 0;
const STREAM_FADING: u64 = 1;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic per-(seed, trial, purpose) generator.
pub fn substream(seed: u64, trial: u64, purpose: u64) -> ChaCha8Rng {
    let mut state = seed
        ^ trial.wrapping_mul(0xd6e8_feb8_6659_fd93)
        ^ purpose.wrapping_mul(0xa076_1d64_78bd_642f);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// One scheme's outcome in a single trial.
#[derive(Debug, Clone, Copy)]
pub struct TrialMetrics {
    pub scheme: Scheme,
    pub throughput_bps: f64,
    pub jain: f64,
}

/// Runs a single Monte-Carlo trial and scores every requested scheme.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64) -> Result<Vec<TrialMetrics>> {
    let ris = cfg.ris()?;
    let bs = cfg.bs()?;
    let grid = cfg.grid()?;
    let budget = cfg.link_budget()?;
    let codebook = cfg.codebook()?;
    let frame = cfg.frame(codebook.len())?;
    let spec = cfg.outage()?;
    let k = cfg.scheduler.k_users;

    let mut deploy_rng = substream(cfg.scheduler.seed, trial, STREAM_DEPLOY);
    let users = sample_ring(k, cfg.ring(), cfg.geometry.radius_law, &mut deploy_rng)?;
    let scenario = Scenario::new(bs, users, ris, cfg.ring())?;

    let schemes = &cfg.scheduler.schemes;
    let needs_robust = schemes.iter().any(|s| matches!(s, Scheme::Jnt | Scheme::Seq));
    let robust = if needs_robust {
        Some(build_rate_tensor(
            &scenario,
            &codebook,
            &grid,
            &budget,
            spec,
            cfg.lemma_form(),
        )?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let rates = match scheme {
            Scheme::Jnt => {
                let t = robust.as_ref().expect("robust tensor built");
                user_rates(t, &allocate(t, cfg.scheduler.objective)?)?
            }
            Scheme::Seq => {
                let t = robust.as_ref().expect("robust tensor built");
                let partition = assign_configs(&scenario.users, &codebook)?;
                user_rates(t, &sequential_allocate(t, &partition, cfg.scheduler.objective)?)?
            }
            Scheme::Csi => {
                let mut fading_rng = substream(cfg.scheduler.seed, trial, STREAM_FADING);
                let t = csi_rate_tensor(&scenario, &codebook, &grid, &budget, &mut fading_rng)?;
                user_rates(&t, &allocate(&t, cfg.scheduler.objective)?)?
            }
        };
        let eta = efficiency(scheme, &frame, spec.epsilon, k, ris.n_x);
        out.push(TrialMetrics {
            scheme,
            throughput_bps: throughput(&rates, &frame, grid.delta_f, eta),
            jain: jain_index(&rates).unwrap_or(1.0 / k as f64),
        });
    }
    Ok(out)
}

/// One output row of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub objective: Objective,
    pub mean_throughput_bps: f64,
    pub stderr_bps: f64,
    pub jain_mean: f64,
    pub jain_stderr: f64,
    pub per_user_throughput_bps: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<SweepRow>,
}

impl ExperimentResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "sweep_var,sweep_value,scheme,objective,mean_throughput_bps,\
             stderr_bps,jain_mean,jain_stderr,per_user_throughput_bps,trials,seed"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{:.6},{:.6},{:.8},{:.8},{:.6},{},{}",
                r.sweep_var,
                r.sweep_value,
                r.scheme,
                r.objective,
                r.mean_throughput_bps,
                r.stderr_bps,
                r.jain_mean,
                r.jain_stderr,
                r.per_user_throughput_bps,
                r.trials,
                r.seed
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("serialization failure: {e}")))
    }
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs all trials at one operating point; parallel over trials with a
/// trial-index-ordered reduction.
pub fn run_point(cfg: &ScenarioConfig, sweep_var: &str, sweep_value: f64) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let trials = cfg.scheduler.trials;
    let per_trial: Vec<Vec<TrialMetrics>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, &scheme) in cfg.scheduler.schemes.iter().enumerate() {
        let tp: Vec<f64> = per_trial.iter().map(|t| t[i].throughput_bps).collect();
        let jain: Vec<f64> = per_trial.iter().map(|t| t[i].jain).collect();
        let (tp_mean, tp_se) = mean_and_stderr(&tp);
        let (j_mean, j_se) = mean_and_stderr(&jain);
        rows.push(SweepRow {
            sweep_var: sweep_var.to_string(),
            sweep_value,
            scheme,
            objective: cfg.scheduler.objective,
            mean_throughput_bps: tp_mean,
            stderr_bps: tp_se,
            jain_mean: j_mean,
            jain_stderr: j_se,
            per_user_throughput_bps: tp_mean / cfg.scheduler.k_users as f64,
            trials,
            seed: cfg.scheduler.seed,
        });
    }
    Ok(rows)
}

/// Variable a sweep ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    KUsers,
    RicianKDb,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::KUsers => "k_users",
            SweepVar::RicianKDb => "rician_k_db",
        }
    }

    fn apply(&self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            SweepVar::KUsers => cfg.scheduler.k_users = value as usize,
            SweepVar::RicianKDb => cfg.link.rician_k_db = value,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

/// Named experiment presets matching the shipped evaluation campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
    Custom,
}

impl Preset {
    /// Pins the preset's fixed parameters on `cfg` and returns its sweep.
    /// `Custom` leaves the configuration untouched and yields a
    /// single-point sweep at the configured user count.
    pub fn configure(&self, cfg: &mut ScenarioConfig) -> Sweep {
        let kappa_sweep: Vec<f64> = (-4..=4).map(|i| 3.0 * i as f64).collect();
        match self {
            Preset::Fig4a => {
                cfg.scheduler.objective = Objective::MaxRate;
                cfg.link.rician_k_db = -9.0;
                Sweep {
                    var: SweepVar::KUsers,
                    values: vec![55.0, 110.0, 275.0, 550.0, 1100.0, 2750.0, 5500.0],
                }
            }
            Preset::Fig4b => {
                cfg.scheduler.objective = Objective::MaxRate;
                cfg.scheduler.k_users = 55;
                Sweep {
                    var: SweepVar::RicianKDb,
                    values: kappa_sweep,
                }
            }
            Preset::Fig5a => {
                cfg.scheduler.objective = Objective::MaxMin;
                cfg.link.rician_k_db = -9.0;
                Sweep {
                    var: SweepVar::KUsers,
                    values: vec![50.0, 150.0, 250.0, 350.0, 450.0, 550.0],
                }
            }
            Preset::Fig5b => {
                cfg.scheduler.objective = Objective::MaxMin;
                cfg.scheduler.k_users = 550;
                Sweep {
                    var: SweepVar::RicianKDb,
                    values: kappa_sweep,
                }
            }
            Preset::Custom => Sweep {
                var: SweepVar::KUsers,
                values: vec![cfg.scheduler.k_users as f64],
            },
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4a" => Ok(Preset::Fig4a),
            "fig4b" => Ok(Preset::Fig4b),
            "fig5a" => Ok(Preset::Fig5a),
            "fig5b" => Ok(Preset::Fig5b),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::InvalidArgument(format!("unknown preset '{other}'"))),
        }
    }
}

/// Runs every point of a sweep in order.
pub fn run_sweep(cfg: &ScenarioConfig, sweep: &Sweep) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    for &value in &sweep.values {
        let mut point = cfg.clone();
        sweep.var.apply(&mut point, value);
        rows.extend(run_point(&point, sweep.var.name(), value)?);
    }
    Ok(ExperimentResult { rows })
}
