//! Node placement and the RIS element grid.
//!
//! The RIS center sits at the origin with its elements on the x-z plane;
//! the service area lies in the x-y half-plane with y > 0. All angles are
//! stored in radians; azimuth is measured from the positive x axis within
//! the x-y plane and elevation from the positive z axis.

use rand::Rng;

use crate::{Error, Result};

/// Open-interval margin keeping sampled azimuths away from the grazing
/// directions 0 and pi.
const AZIMUTH_MARGIN: f64 = 1e-6;

/// Position of a node in polar coordinates relative to the RIS center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPosition {
    /// Distance from the RIS center in meters.
    pub range: f64,
    /// Azimuth in radians, within (0, pi).
    pub azimuth: f64,
    /// Elevation in radians; pi/2 keeps the node on the x-y plane.
    pub elevation: f64,
}

impl PolarPosition {
    /// Creates a position, validating the range and azimuth invariants.
    pub fn new(range: f64, azimuth: f64, elevation: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "range must be positive, got {range}"
            )));
        }
        if !(azimuth > 0.0 && azimuth < std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!(
                "azimuth must lie in (0, pi), got {azimuth}"
            )));
        }
        Ok(Self {
            range,
            azimuth,
            elevation,
        })
    }

    /// Creates a position on the x-y plane (elevation pi/2).
    pub fn coplanar(range: f64, azimuth: f64) -> Result<Self> {
        Self::new(range, azimuth, std::f64::consts::FRAC_PI_2)
    }

    /// Converts to Cartesian coordinates `[x, y, z]`.
    pub fn to_cartesian(self) -> [f64; 3] {
        let (st, ct) = self.elevation.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        [self.range * st * cp, self.range * st * sp, self.range * ct]
    }

    /// Inverse of [`PolarPosition::to_cartesian`].
    pub fn from_cartesian(p: [f64; 3]) -> Result<Self> {
        let range = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let azimuth = p[1].atan2(p[0]);
        let elevation = if range > 0.0 {
            (p[2] / range).acos()
        } else {
            0.0
        };
        Self::new(range, azimuth, elevation)
    }
}

/// Euclidean distance between two nodes.
pub fn bs_ue_distance(bs: PolarPosition, ue: PolarPosition) -> f64 {
    let a = bs.to_cartesian();
    let b = ue.to_cartesian();
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Planar RIS element grid centered at the origin, lying on the x-z plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisGeometry {
    /// Element count along the x axis.
    pub n_x: usize,
    /// Element count along the z axis.
    pub n_z: usize,
    /// Element spacing along x in meters.
    pub d_x: f64,
    /// Element spacing along z in meters.
    pub d_z: f64,
}

impl RisGeometry {
    pub fn new(n_x: usize, n_z: usize, d_x: f64, d_z: f64) -> Result<Self> {
        if n_x == 0 || n_z == 0 || !(d_x > 0.0) || !(d_z > 0.0) {
            return Err(Error::InvalidArgument(
                "RIS grid requires positive element counts and spacings".into(),
            ));
        }
        Ok(Self { n_x, n_z, d_x, d_z })
    }

    /// Total number of elements.
    pub fn n_elements(&self) -> usize {
        self.n_x * self.n_z
    }

    /// Center position of element `(n, n')`, 1-based along each axis.
    pub fn element_center(&self, n: usize, np: usize) -> Result<[f64; 3]> {
        if n < 1 || n > self.n_x || np < 1 || np > self.n_z {
            return Err(Error::InvalidArgument(format!(
                "element index ({n}, {np}) out of range for {}x{} grid",
                self.n_x, self.n_z
            )));
        }
        let x = self.d_x * (n as f64 - (self.n_x as f64 + 1.0) / 2.0);
        let z = self.d_z * (np as f64 - (self.n_z as f64 + 1.0) / 2.0);
        Ok([x, 0.0, z])
    }

    /// All element centers, x-major then z.
    pub fn element_centers(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.n_elements());
        for np in 1..=self.n_z {
            for n in 1..=self.n_x {
                out.push(self.element_center(n, np).expect("index in range"));
            }
        }
        out
    }
}

/// How user ranges are drawn inside the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusLaw {
    /// Uniform over the ring area: CDF proportional to r^2.
    AreaUniform,
    /// Uniform in the radial coordinate.
    RangeUniform,
}

/// Annular service area `(inner, outer)` in meters.
pub type Ring = (f64, f64);

/// Draws `k` user positions uniformly over the ring, azimuth over (0, pi).
///
/// Deterministic given the generator state.
pub fn sample_ring<R: Rng>(
    k: usize,
    ring: Ring,
    law: RadiusLaw,
    rng: &mut R,
) -> Result<Vec<PolarPosition>> {
    let (r_inn, r_out) = ring;
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one user".into()));
    }
    if !(r_inn > 0.0 && r_out > r_inn) {
        return Err(Error::InvalidArgument(format!(
            "ring radii must satisfy 0 < inner < outer, got ({r_inn}, {r_out})"
        )));
    }
    let lo = AZIMUTH_MARGIN;
    let hi = std::f64::consts::PI - AZIMUTH_MARGIN;
    (0..k)
        .map(|_| {
            let u: f64 = rng.gen();
            let range = match law {
                RadiusLaw::AreaUniform => {
                    (r_inn * r_inn + u * (r_out * r_out - r_inn * r_inn)).sqrt()
                }
                RadiusLaw::RangeUniform => r_inn + u * (r_out - r_inn),
            };
            let azimuth = rng.gen_range(lo..hi);
            PolarPosition::coplanar(range, azimuth)
        })
        .collect()
}

/// Full deployment: base station, users, RIS grid and service ring.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub bs: PolarPosition,
    pub users: Vec<PolarPosition>,
    pub ris: RisGeometry,
    pub ring: Ring,
}

impl Scenario {
    pub fn new(
        bs: PolarPosition,
        users: Vec<PolarPosition>,
        ris: RisGeometry,
        ring: Ring,
    ) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::InvalidArgument("scenario needs K >= 1 users".into()));
        }
        for (i, u) in users.iter().enumerate() {
            if u.range < ring.0 || u.range > ring.1 {
                return Err(Error::InvalidArgument(format!(
                    "user {i} range {} outside ring {:?}",
                    u.range, ring
                )));
            }
        }
        Ok(Self {
            bs,
            users,
            ris,
            ring,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }
}
