//! RIS configuration codebook: per-element phase profiles whose beams
//! tile the azimuth half-plane with overlapping half-power edges.
//!
//! Beam centers are equally spaced in the cosine domain; consecutive
//! beams share a half-power direction so the worst-case gain inside the
//! covered band stays near the overlap threshold.

use std::io::Write;

use crate::geometry::RisGeometry;
use crate::{Error, Result, PROPAGATION_VELOCITY};

/// One RIS phase-shift profile steering a beam toward `center_azimuth`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    /// 1-based configuration index.
    pub index: usize,
    /// Beam center azimuth in radians.
    pub center_azimuth: f64,
    /// Lower half-power azimuth (closer to 0).
    pub hp_minus: f64,
    /// Upper half-power azimuth (closer to pi).
    pub hp_plus: f64,
    /// Per-column phase shifts in radians, length `n_x`; identical across
    /// z rows.
    pub phases: Vec<f64>,
}

/// Ordered set of configurations covering the service area.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub configs: Vec<Configuration>,
    /// Overlap gain threshold, linear.
    pub tau: f64,
    /// Argument with sinc^2(x_tau) = tau.
    pub x_tau: f64,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Beam center azimuths in config order.
    pub fn centers(&self) -> Vec<f64> {
        self.configs.iter().map(|c| c.center_azimuth).collect()
    }

    /// Writes one row per configuration: index, center/hp angles in
    /// degrees, then the column phases in radians.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n_x = self.configs.first().map_or(0, |c| c.phases.len());
        write!(w, "config,center_deg,hp_minus_deg,hp_plus_deg")?;
        for n in 1..=n_x {
            write!(w, ",phase_{n}_rad")?;
        }
        writeln!(w)?;
        for c in &self.configs {
            write!(
                w,
                "{},{:.6},{:.6},{:.6}",
                c.index,
                c.center_azimuth.to_degrees(),
                c.hp_minus.to_degrees(),
                c.hp_plus.to_degrees()
            )?;
            for p in &c.phases {
                write!(w, ",{p:.9}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Smallest positive root of sinc^2(x) = tau, bisected on (0, pi).
pub fn solve_x_tau(tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gain threshold must lie in (0, 1], got {tau}"
        )));
    }
    if tau == 1.0 {
        return Ok(0.0);
    }
    let target = tau.sqrt();
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    let mut lo = 0.0f64;
    let mut hi = std::f64::consts::PI;
    // sinc decreases from 1 to 0 on (0, pi)
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if sinc(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Cosine-domain half-beamwidth unit `nu x_tau / (pi d_x N_x f0)`.
fn beamwidth_unit(ris: &RisGeometry, f0: f64, x_tau: f64) -> f64 {
    PROPAGATION_VELOCITY * x_tau / (std::f64::consts::PI * ris.d_x * ris.n_x as f64 * f0)
}

/// Number of configurations whose beam center is a physical direction,
/// i.e. `cos(center) >= -1`.
pub fn num_configs(ris: &RisGeometry, f0: f64, x_tau: f64) -> usize {
    let u = beamwidth_unit(ris, f0, x_tau);
    // cos(center_c) = 1 - (2c - 1) u >= -1  <=>  c <= (2/u + 1)/2
    ((2.0 / u + 1.0) / 2.0).floor() as usize
}

/// Raw ceiling count that closes the cosine span regardless of whether
/// the last beam center itself is physical. Diagnostic companion to
/// [`num_configs`].
pub fn raw_num_configs(ris: &RisGeometry, f0: f64, x_tau: f64) -> usize {
    (std::f64::consts::PI * ris.d_x * ris.n_x as f64 * f0 / (x_tau * PROPAGATION_VELOCITY)).ceil()
        as usize
}

/// Builds the codebook for overlap threshold `tau` at RB 0.
pub fn design_codebook(
    ris: &RisGeometry,
    bs_azimuth: f64,
    f0: f64,
    tau: f64,
) -> Result<Codebook> {
    let x_tau = solve_x_tau(tau)?;
    if x_tau == 0.0 {
        return Err(Error::InvalidArgument(
            "tau = 1 yields zero-width beams; choose tau < 1".into(),
        ));
    }
    let u = beamwidth_unit(ris, f0, x_tau);
    let count = num_configs(ris, f0, x_tau);
    let cos_b = bs_azimuth.cos();
    let wavenumber0 = 2.0 * std::f64::consts::PI / PROPAGATION_VELOCITY * f0;
    let mut configs = Vec::with_capacity(count);
    for c in 1..=count {
        let cos_c = 1.0 - (2 * c - 1) as f64 * u;
        let cos_hp_minus = (1.0 - (2 * c - 2) as f64 * u).clamp(-1.0, 1.0);
        let cos_hp_plus = (1.0 - (2 * c) as f64 * u).clamp(-1.0, 1.0);
        let steer = cos_b + cos_c;
        let residual = steer * (ris.n_x as f64 + 1.0) / 2.0 * ris.d_x;
        let phases = (1..=ris.n_x)
            .map(|n| {
                (wavenumber0 * (residual - n as f64 * ris.d_x * steer))
                    .rem_euclid(2.0 * std::f64::consts::PI)
            })
            .collect();
        configs.push(Configuration {
            index: c,
            center_azimuth: cos_c.acos(),
            hp_minus: cos_hp_minus.acos(),
            hp_plus: cos_hp_plus.acos(),
            phases,
        });
    }
    Ok(Codebook {
        configs,
        tau,
        x_tau,
    })
}
