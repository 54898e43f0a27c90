//! Lambertian line-of-sight link between a ground LED and the UAV photodiode.
//!
//! Geometry is always the vertically aligned case: the GU's LED faces
//! straight up and the UAV's receiver straight down, so the irradiance and
//! incidence angles coincide and `cos φ = cos ψ = h / d`.
//!
//! All quantities are SI (metres, square metres, watts). Use
//! [`noise_std_from_dbm`] and [`CM2`] when starting from datasheet units.

use std::f64::consts::{E, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One square centimetre in square metres.
pub const CM2: f64 = 1e-4;

/// Converts a noise *power* given in dBm into the noise standard deviation
/// in watts, `sqrt(10^((dBm - 30) / 10))`.
pub fn noise_std_from_dbm(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0).sqrt()
}

/// Photometric and radio constants of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VlcParams {
    /// LED semi-angle at half power, radians.
    pub semi_angle_half_power: f64,
    /// Receiver field-of-view half angle, radians.
    pub fov_half_angle: f64,
    /// Photodiode detector area, m².
    pub detector_area: f64,
    pub refractive_index: f64,
    pub illumination_response: f64,
    /// GU transmit power, W.
    pub tx_power: f64,
    /// Noise standard deviation, W.
    pub noise_std: f64,
    /// Minimum capacity for a successful link, bit/s/Hz.
    pub capacity_threshold: f64,
}

impl VlcParams {
    /// The reference parameter set: 60° half-power semi-angle and FOV,
    /// 1 cm² detector, n_r = 1.5, ξ = 0.9, P = 10 W, σ_w² = −128.82 dBm,
    /// C_th = 10.
    pub fn reference() -> Self {
        Self {
            semi_angle_half_power: 60f64.to_radians(),
            fov_half_angle: 60f64.to_radians(),
            detector_area: CM2,
            refractive_index: 1.5,
            illumination_response: 0.9,
            tx_power: 10.0,
            noise_std: noise_std_from_dbm(-128.82),
            capacity_threshold: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let half_pi = PI / 2.0;
        let checks: [(bool, &str); 8] = [
            (
                self.semi_angle_half_power > 0.0 && self.semi_angle_half_power < half_pi,
                "semi-angle at half power must lie in (0, π/2)",
            ),
            (
                self.fov_half_angle > 0.0 && self.fov_half_angle < half_pi,
                "field-of-view half angle must lie in (0, π/2)",
            ),
            (self.detector_area > 0.0, "detector area must be positive"),
            (self.refractive_index >= 1.0, "refractive index must be ≥ 1"),
            (
                self.illumination_response > 0.0 && self.illumination_response <= 1.0,
                "illumination response must lie in (0, 1]",
            ),
            (self.tx_power > 0.0, "transmit power must be positive"),
            (self.noise_std > 0.0, "noise standard deviation must be positive"),
            (self.capacity_threshold > 0.0, "capacity threshold must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParameter(msg.into()));
            }
        }
        let m = self.lambertian_order()?;
        // ln 2 / ln 2 is exact at 60°, leave a hair of slack for user-entered degrees.
        if m < 1.0 - 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Lambertian order {m} is below 1 (semi-angle above 60°)"
            )));
        }
        Ok(())
    }

    /// `m = −ln 2 / ln(cos Φ½)`.
    pub fn lambertian_order(&self) -> Result<f64> {
        let c = self.semi_angle_half_power.cos();
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cos of semi-angle at half power must lie in (0, 1), got {c}"
            )));
        }
        Ok(-LN_2 / c.ln())
    }

    /// Optical concentrator gain `g(ψ)`: `n_r² / sin²Ψc` inside the FOV, zero outside.
    pub fn concentrator_gain(&self, incidence: f64) -> f64 {
        if (0.0..=self.fov_half_angle).contains(&incidence) {
            let s = self.fov_half_angle.sin();
            self.refractive_index * self.refractive_index / (s * s)
        } else {
            0.0
        }
    }

    /// DC channel gain for a vertically aligned link.
    pub fn channel_gain(&self, geom: LinkGeometry) -> Result<f64> {
        let LinkGeometry {
            altitude: h,
            horizontal_distance: dxy,
        } = geom;
        if !(h >= 0.0 && dxy >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "link geometry must be non-negative, got h = {h}, d_xy = {dxy}"
            )));
        }
        if h == 0.0 && dxy == 0.0 {
            return Err(Error::UndefinedGeometry);
        }
        let incidence = dxy.atan2(h);
        let g = self.concentrator_gain(incidence);
        if g == 0.0 {
            return Ok(0.0);
        }
        let m = self.lambertian_order()?;
        // h^{m+1} / s^{m+3} written as cos^{m+1}ψ / s² so that large orders
        // do not overflow.
        let slant_sq = h * h + dxy * dxy;
        let cos = h / slant_sq.sqrt();
        Ok((m + 1.0) * self.detector_area * g / (2.0 * PI) * cos.powf(m + 1.0) / slant_sq)
    }

    /// Link capacity `½ log₂(1 + e/(2π) · (ξ P H / σ_w)²)`.
    pub fn capacity(&self, gain: f64) -> f64 {
        let snr = self.illumination_response * self.tx_power * gain / self.noise_std;
        0.5 * (1.0 + E / (2.0 * PI) * snr * snr).log2()
    }

    /// Channel gain at which [`capacity`](Self::capacity) equals the threshold.
    pub fn gain_threshold(&self) -> f64 {
        // exp_m1 keeps precision when C_th is tiny.
        let growth = (2.0 * self.capacity_threshold * LN_2).exp_m1();
        self.noise_std / (self.illumination_response * self.tx_power)
            * (2.0 * PI / E * growth).sqrt()
    }

    /// Coefficient λ of the squared-radius curve `f(h) = λ h^{2(m+1)/(m+3)} − h²`.
    pub fn lambda_coeff(&self) -> Result<f64> {
        let m = self.lambertian_order()?;
        let g = self.concentrator_gain(0.0);
        Ok(((m + 1.0) * self.detector_area * g / (2.0 * PI * self.gain_threshold()))
            .powf(2.0 / (m + 3.0)))
    }

    /// Horizontal radius inside which the link gain meets the threshold.
    ///
    /// Returns 0 when no horizontal offset (not even zero) satisfies it.
    pub fn comm_radius(&self, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("altitude must be positive, got {h}")));
        }
        let m = self.lambertian_order()?;
        let lambda = self.lambda_coeff()?;
        let f = lambda * h.powf(2.0 * (m + 1.0) / (m + 3.0)) - h * h;
        Ok(f.max(0.0).sqrt().min(self.reception_radius(h)))
    }

    /// Horizontal radius at which light is still received at all: `h · tan Ψc`.
    pub fn reception_radius(&self, h: f64) -> f64 {
        h * self.fov_half_angle.tan()
    }
}

/// Horizontal and vertical separation between the UAV and one GU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub altitude: f64,
    pub horizontal_distance: f64,
}

impl LinkGeometry {
    pub fn new(altitude: f64, horizontal_distance: f64) -> Self {
        Self {
            altitude,
            horizontal_distance,
        }
    }

    pub fn slant_distance(&self) -> f64 {
        self.altitude.hypot(self.horizontal_distance)
    }
}
