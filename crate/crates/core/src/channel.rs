//! Deterministic LOS terms, the RIS array factor, Rician direct-channel
//! sampling and per-resource SNR.
//!
//! Internally everything is linear-scale and SI units; dB conversions
//! happen at the configuration boundary.

use num_complex::Complex64;
use rand::Rng;

use crate::codebook::Configuration;
use crate::geometry::{bs_ue_distance, PolarPosition, RisGeometry};
use crate::{Error, Result, PROPAGATION_VELOCITY};

/// OFDM frequency axis: first-RB carrier, RB bandwidth and RB count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    /// Central frequency of RB 0 in Hz.
    pub f0: f64,
    /// RB bandwidth in Hz.
    pub delta_f: f64,
    /// Number of resource blocks.
    pub n_rb: usize,
}

/// RB count above which the array-factor gain variation across the band
/// is no longer negligible.
pub const MAX_RB: usize = 350;

impl FrequencyGrid {
    pub fn new(f0: f64, delta_f: f64, n_rb: usize) -> Result<Self> {
        if !(f0 > 0.0) || !(delta_f > 0.0) || n_rb == 0 {
            return Err(Error::InvalidArgument(
                "frequency grid requires positive f0, delta_f and RB count".into(),
            ));
        }
        if n_rb > MAX_RB {
            return Err(Error::InvalidArgument(format!(
                "RB count {n_rb} exceeds the flat-gain limit {MAX_RB}"
            )));
        }
        Ok(Self { f0, delta_f, n_rb })
    }

    /// Carrier frequency of RB `f` in Hz.
    pub fn frequency(&self, f: usize) -> f64 {
        self.f0 + f as f64 * self.delta_f
    }

    /// Wavelength of RB `f` in meters.
    pub fn wavelength(&self, f: usize) -> f64 {
        PROPAGATION_VELOCITY / self.frequency(f)
    }
}

/// Link-budget terms shared by every user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Per-user transmit power in watts.
    pub tx_power: f64,
    /// Noise power at the receiver in watts.
    pub noise_power: f64,
    /// Rician factor, linear.
    pub rician_k: f64,
    /// Reference path gain at 1 m, linear.
    pub beta0: f64,
    /// Path-loss exponent.
    pub pl_exponent: f64,
    /// Product of BS and UE antenna gains, linear.
    pub antenna_gain_product: f64,
}

impl LinkBudget {
    pub fn new(
        tx_power: f64,
        noise_power: f64,
        rician_k: f64,
        beta0: f64,
        pl_exponent: f64,
        antenna_gain_product: f64,
    ) -> Result<Self> {
        if !(tx_power > 0.0 && noise_power > 0.0 && beta0 > 0.0 && antenna_gain_product > 0.0) {
            return Err(Error::InvalidArgument(
                "link budget terms must be strictly positive".into(),
            ));
        }
        if rician_k < 0.0 {
            return Err(Error::InvalidArgument("rician factor must be >= 0".into()));
        }
        Ok(Self {
            tx_power,
            noise_power,
            rician_k,
            beta0,
            pl_exponent,
            antenna_gain_product,
        })
    }
}

/// Path gain at effective distance `r`.
pub fn pathloss(r: f64, budget: &LinkBudget) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "path-loss distance must be positive, got {r}"
        )));
    }
    Ok(budget.beta0 * budget.antenna_gain_product / r.powf(budget.pl_exponent))
}

/// Unit-modulus phasor carrying the propagation delay over `r` on RB `f`.
pub fn los_phasor(r: f64, grid: &FrequencyGrid, f: usize) -> Complex64 {
    let phase = -2.0 * std::f64::consts::PI / PROPAGATION_VELOCITY * grid.frequency(f) * r;
    Complex64::from_polar(1.0, phase)
}

/// Delay phasors for every RB.
pub fn los_vector(r: f64, grid: &FrequencyGrid) -> Vec<Complex64> {
    (0..grid.n_rb).map(|f| los_phasor(r, grid, f)).collect()
}

/// Argument of the array-factor sine ratio for a (user, config, RB) triple.
fn af_argument(
    ue_azimuth: f64,
    bs_azimuth: f64,
    config_azimuth: f64,
    f: usize,
    grid: &FrequencyGrid,
) -> f64 {
    grid.f0 * (ue_azimuth.cos() - config_azimuth.cos())
        + f as f64 * grid.delta_f * (ue_azimuth.cos() + bs_azimuth.cos())
}

/// Normalized array factor of the designed phase profile, closed form.
///
/// Real-valued in [-1, 1]; the removable singularities of the sine ratio
/// are evaluated by their limit.
pub fn array_factor(
    ue_azimuth: f64,
    bs_azimuth: f64,
    config_azimuth: f64,
    f: usize,
    ris: &RisGeometry,
    grid: &FrequencyGrid,
) -> f64 {
    let psi = af_argument(ue_azimuth, bs_azimuth, config_azimuth, f, grid);
    let u = std::f64::consts::PI * ris.d_x / PROPAGATION_VELOCITY * psi;
    sine_ratio(u, ris.n_x)
}

/// sin(N u) / (N sin u) with the u = m*pi singularities handled by limit.
fn sine_ratio(u: f64, n: usize) -> f64 {
    let n_f = n as f64;
    let rem = u.rem_euclid(std::f64::consts::PI);
    if rem < 1e-9 || std::f64::consts::PI - rem < 1e-9 {
        // limit cos(N m pi)/cos(m pi) = (-1)^{m (N-1)}
        let m = (u / std::f64::consts::PI).round() as i64;
        return if (m * (n as i64 - 1)) % 2 == 0 { 1.0 } else { -1.0 };
    }
    (n_f * u).sin() / (n_f * u.sin())
}

/// Deterministic reflected channel through the RIS for one configuration.
///
/// Magnitude scales with the product-distance path gain and the element
/// count; the delay term carries the sum distance.
pub fn reflected_channel(
    ue: PolarPosition,
    bs: PolarPosition,
    config: &Configuration,
    ris: &RisGeometry,
    grid: &FrequencyGrid,
    budget: &LinkBudget,
) -> Result<Vec<Complex64>> {
    let amp = pathloss(ue.range * bs.range, budget)?.sqrt() * ris.n_elements() as f64;
    let delay = los_vector(bs.range + ue.range, grid);
    Ok((0..grid.n_rb)
        .map(|f| {
            let af = array_factor(
                ue.azimuth,
                bs.azimuth,
                config.center_azimuth,
                f,
                ris,
                grid,
            );
            amp * af * delay[f]
        })
        .collect())
}

/// Draws one Rician realization of the direct BS-UE channel over all RBs.
pub fn sample_direct<R: Rng>(
    ue: PolarPosition,
    bs: PolarPosition,
    grid: &FrequencyGrid,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let r = bs_ue_distance(bs, ue);
    let amp = pathloss(r, budget)?.sqrt();
    let k = budget.rician_k;
    let los_w = (k / (k + 1.0)).sqrt();
    let nlos_w = (1.0 / (k + 1.0)).sqrt();
    let los = los_vector(r, grid);
    Ok((0..grid.n_rb)
        .map(|f| {
            let n = standard_complex_gaussian(rng);
            amp * (los_w * los[f] + nlos_w * n)
        })
        .collect())
}

/// Standard complex Gaussian: unit total variance, independent components.
pub fn standard_complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let d = rand::distributions::Standard;
    // Box-Muller from two uniforms; each component has variance 1/2.
    let u1: f64 = rng.sample(d);
    let u2: f64 = rng.sample(d);
    let mag = (-(1.0 - u1).ln()).sqrt();
    let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
    Complex64::new(mag * c, mag * s)
}

/// Instantaneous SNR of one resource.
pub fn snr(h: Complex64, g: Complex64, budget: &LinkBudget) -> f64 {
    budget.tx_power / budget.noise_power * (h + g).norm_sqr()
}
