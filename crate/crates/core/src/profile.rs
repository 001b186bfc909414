//! Smooth compactly supported profiles with analytic sup and Lipschitz constants.

use crate::error::Result;
use crate::grid::{sample, DiscreteFunction, Grid};

/// Quintic smoothstep `S(u) = 6u⁵ − 15u⁴ + 10u³` clamped to `[0, 1]`.
///
/// `S` is C² with `S'(u) = 30u²(1−u)²`, whose maximum is 15/8 at `u = 1/2`.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (u * (6.0 * u - 15.0) + 10.0)
    }
}

pub const SMOOTHSTEP_MAX_SLOPE: f64 = 15.0 / 8.0;

/// `S(1 − |x − c| / r)`: equals 1 at the center, 0 for `|x − c| ≥ r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticBump {
    pub center: f64,
    pub radius: f64,
    pub height: f64,
}

impl QuinticBump {
    pub fn new(center: f64, radius: f64) -> Self {
        Self {
            center,
            radius,
            height: 1.0,
        }
    }

    pub fn with_height(mut self, height: f64) -> Self {
        self.height = height;
        self
    }

    pub fn value(&self, x: f64) -> f64 {
        self.height * smoothstep(1.0 - (x - self.center).abs() / self.radius)
    }

    pub fn sup_norm(&self) -> f64 {
        self.height.abs()
    }

    pub fn lipschitz(&self) -> f64 {
        self.height.abs() * SMOOTHSTEP_MAX_SLOPE / self.radius
    }

    pub fn sample(&self, grid: &Grid, enforce_exterior_zero: bool) -> Result<DiscreteFunction> {
        sample(|x| self.value(x), grid, enforce_exterior_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_slope() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
        let h = 1e-6;
        let slope = (smoothstep(0.5 + h) - smoothstep(0.5 - h)) / (2.0 * h);
        assert!((slope - SMOOTHSTEP_MAX_SLOPE).abs() < 1e-8);
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            let d = 30.0 * u * u * (1.0 - u) * (1.0 - u);
            assert!(d <= SMOOTHSTEP_MAX_SLOPE);
        }
    }

    #[test]
    fn bump_support() {
        let b = QuinticBump::new(0.25, 0.5);
        assert_eq!(b.value(0.25), 1.0);
        assert_eq!(b.value(0.75), 0.0);
        assert_eq!(b.value(-0.3), 0.0);
        assert_eq!(b.lipschitz(), 3.75);
    }
}
