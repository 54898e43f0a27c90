//! Optimal flight altitude.
//!
//! Setting the aligned-link gain equal to the threshold gives the squared
//! communication radius as a function of altitude,
//! `f(h) = λ h^{2(m+1)/(m+3)} − h²`. The altitude that maximises `f` gives
//! the widest serving disk and therefore the shortest tour. `f′` vanishes at
//! `h0` and `f″` at `h00 ≤ h0`; `f` falls below `h00`, rises on `[h00, h0]`
//! and falls again past `h0`, so the constrained optimum is either `h_min`
//! or `h0`.

use serde::{Deserialize, Serialize};

use crate::channel::VlcParams;
use crate::{Error, Result};

/// Default upper bound of the brute-force search.
pub const ORACLE_H_MAX: f64 = 200.0;
/// Default brute-force grid spacing.
pub const ORACLE_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltitudeProblem {
    pub lambda_coeff: f64,
    pub lambertian_order: f64,
    pub h_min: f64,
    /// Upper end of the oracle's search interval; the closed form ignores it.
    pub h_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoints {
    /// Zero of `f′`.
    pub h0: f64,
    /// Zero of `f″`; absent for `m = 1`, where `f″ ≡ −2`.
    pub h00: Option<f64>,
}

impl AltitudeProblem {
    pub fn new(lambda_coeff: f64, lambertian_order: f64, h_min: f64, h_max: f64) -> Result<Self> {
        let p = Self {
            lambda_coeff,
            lambertian_order,
            h_min,
            h_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_vlc(params: &VlcParams, h_min: f64, h_max: f64) -> Result<Self> {
        Self::new(params.lambda_coeff()?, params.lambertian_order()?, h_min, h_max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_coeff > 0.0 && self.lambda_coeff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "λ must be positive, got {}",
                self.lambda_coeff
            )));
        }
        if !(self.lambertian_order >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Lambertian order must be ≥ 1, got {}",
                self.lambertian_order
            )));
        }
        if !(self.h_min > 0.0 && self.h_min < self.h_max) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < h_min < h_max, got h_min = {}, h_max = {}",
                self.h_min, self.h_max
            )));
        }
        Ok(())
    }

    fn exponent(&self) -> f64 {
        let m = self.lambertian_order;
        2.0 * (m + 1.0) / (m + 3.0)
    }

    /// Squared communication radius at altitude `h` (may be negative).
    pub fn f_of_h(&self, h: f64) -> f64 {
        self.lambda_coeff * h.powf(self.exponent()) - h * h
    }

    /// Closed-form first derivative of [`f_of_h`](Self::f_of_h).
    pub fn f_prime(&self, h: f64) -> f64 {
        let m = self.lambertian_order;
        self.exponent() * self.lambda_coeff * h.powf((m - 1.0) / (m + 3.0)) - 2.0 * h
    }

    /// Closed-form second derivative of [`f_of_h`](Self::f_of_h).
    pub fn f_second(&self, h: f64) -> f64 {
        let m = self.lambertian_order;
        2.0 * (m * m - 1.0) / ((m + 3.0) * (m + 3.0))
            * self.lambda_coeff
            * h.powf(-4.0 / (m + 3.0))
            - 2.0
    }

    pub fn stationary_points(&self) -> Result<StationaryPoints> {
        let m = self.lambertian_order;
        if !(m >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Lambertian order must be ≥ 1, got {m}"
            )));
        }
        let power = -(m + 3.0) / 4.0;
        let h0 = ((m + 3.0) / (self.lambda_coeff * (m + 1.0))).powf(power);
        let h00 = (m > 1.0)
            .then(|| ((m + 3.0).powi(2) / (self.lambda_coeff * (m * m - 1.0))).powf(power));
        Ok(StationaryPoints { h0, h00 })
    }

    /// Optimal altitude: `h_min` if `h_min ≥ h0` or `f(h_min) ≥ f(h0)`, else `h0`.
    pub fn optimal_altitude(&self) -> Result<f64> {
        let h0 = self.stationary_points()?.h0;
        Ok(self.pick(h0))
    }

    /// The same decision rule restricted to `[h_min, h_max]`.
    ///
    /// `f` has no interior maximum below `h0`, so on a box that ends before
    /// `h0` the candidates are `h_min` and `h_max`.
    pub fn optimal_altitude_in_range(&self) -> Result<f64> {
        let h0 = self.stationary_points()?.h0;
        Ok(self.pick(h0.min(self.h_max)))
    }

    fn pick(&self, h0: f64) -> f64 {
        if self.h_min >= h0 || self.f_of_h(self.h_min) >= self.f_of_h(h0) {
            self.h_min
        } else {
            h0
        }
    }

    /// Exhaustive scan of `f` over `{h_min + kΔ} ∩ [h_min, h_max]`; ties go
    /// to the smaller altitude.
    pub fn oracle_grid_argmax(&self, step: f64) -> Result<f64> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("grid step must be positive, got {step}")));
        }
        let n = ((self.h_max - self.h_min) / step).floor() as usize;
        let mut best_h = self.h_min;
        let mut best_f = self.f_of_h(self.h_min);
        for k in 1..=n {
            let h = self.h_min + k as f64 * step;
            let f = self.f_of_h(h);
            if f > best_f {
                best_f = f;
                best_h = h;
            }
        }
        Ok(best_h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_order_reduces_to_quadratic() {
        let p = AltitudeProblem::new(26.0, 1.0, 10.0, 200.0).unwrap();
        for h in [1.0, 5.5, 13.0, 40.0] {
            assert!((p.f_of_h(h) - (26.0 * h - h * h)).abs() < 1e-9);
        }
        let sp = p.stationary_points().unwrap();
        assert!((sp.h0 - 13.0).abs() < 1e-12);
        assert!(sp.h00.is_none());
        assert_eq!(p.f_second(7.0), -2.0);
    }

    #[test]
    fn f_root_at_lambda_power() {
        for m in [1.0, 2.0, 3.7, 6.0] {
            let lambda = 9.0;
            let p = AltitudeProblem::new(lambda, m, 1.0, 1e6).unwrap();
            let root = lambda.powf((m + 3.0) / 4.0);
            assert!(p.f_of_h(root).abs() < 1e-9 * root * root);
            assert!(p.f_of_h(10.0 * root) < 0.0);
        }
    }

    #[test]
    fn h0_is_stationary_for_m2() {
        let p = AltitudeProblem::new(10.0, 2.0, 1.0, 1e4).unwrap();
        let sp = p.stationary_points().unwrap();
        let h0 = sp.h0;
        let e = 1e-5 * h0;
        let fd = (p.f_of_h(h0 + e) - p.f_of_h(h0 - e)) / (2.0 * e);
        assert!(fd.abs() < 1e-6 * h0.max(1.0));
        assert!(p.f_prime(h0).abs() < 1e-9 * h0);
        let h00 = sp.h00.unwrap();
        assert!(h0 >= h00);
        let ratio = ((2.0 - 1.0) / (2.0 + 3.0f64)).powf(-(2.0 + 3.0) / 4.0);
        assert!((h0 / h00 - ratio).abs() < 1e-10 * ratio);
    }

    #[test]
    fn optimal_altitude_branches() {
        let p = AltitudeProblem::new(26.0, 1.0, 20.0, 200.0).unwrap();
        assert_eq!(p.optimal_altitude().unwrap(), 20.0);
        let p = AltitudeProblem::new(26.0, 1.0, 10.0, 200.0).unwrap();
        assert!((p.optimal_altitude().unwrap() - 13.0).abs() < 1e-12);
        assert_eq!(p.f_of_h(10.0), 160.0);
        assert_eq!(p.f_of_h(13.0), 169.0);
    }

    #[test]
    fn tie_goes_to_h_min() {
        // m = 1: f(h_min) = f(h0) only at h_min = h0; force it.
        let p = AltitudeProblem::new(26.0, 1.0, 13.0, 200.0).unwrap();
        assert_eq!(p.optimal_altitude().unwrap(), 13.0);
    }

    #[test]
    fn oracle_finds_thirteen() {
        let p = AltitudeProblem::new(26.0, 1.0, 10.0, 200.0).unwrap();
        let h = p.oracle_grid_argmax(0.01).unwrap();
        assert!((h - 13.0).abs() <= 0.01);
        let coarse = p.oracle_grid_argmax(0.02).unwrap();
        assert!((coarse - h).abs() <= 0.02);
    }

    #[test]
    fn in_range_variant_clamps_to_box() {
        let p = AltitudeProblem::new(1000.0, 1.0, 10.0, 200.0).unwrap();
        assert_eq!(p.optimal_altitude().unwrap(), 500.0);
        assert_eq!(p.optimal_altitude_in_range().unwrap(), 200.0);
    }

    #[test]
    fn invalid_problems_rejected() {
        assert!(AltitudeProblem::new(0.0, 1.0, 1.0, 2.0).is_err());
        assert!(AltitudeProblem::new(1.0, 0.5, 1.0, 2.0).is_err());
        assert!(AltitudeProblem::new(1.0, 1.0, 3.0, 2.0).is_err());
        let p = AltitudeProblem {
            lambda_coeff: 1.0,
            lambertian_order: 0.5,
            h_min: 1.0,
            h_max: 2.0,
        };
        assert!(p.stationary_points().is_err());
    }

    #[test]
    fn from_reference_vlc_clamps_to_h_min() {
        let p = AltitudeProblem::from_vlc(&VlcParams::reference(), 10.0, 200.0).unwrap();
        let h0 = p.stationary_points().unwrap().h0;
        assert!((h0 - 3.471_008_911_454_294).abs() < 1e-9);
        assert_eq!(p.optimal_altitude().unwrap(), 10.0);
    }
}
