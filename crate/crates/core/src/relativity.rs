//! Lorentz-factor algebra relating the spatial four-velocity `u`, the
//! coordinate velocity `v = u/γ` and `γ`.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};

/// Speed of light and the admissible fraction of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub c: f64,
    pub c_frac_max: f64,
}

impl PhysicalConstants {
    pub const DEFAULT_C_FRAC_MAX: f64 = 0.99;

    pub fn new(c: f64, c_frac_max: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidConstants(format!(
                "c must be positive, got {c}"
            )));
        }
        if !(c_frac_max > 0.0 && c_frac_max < 1.0) {
            return Err(Error::InvalidConstants(format!(
                "c_frac_max must lie in (0, 1), got {c_frac_max}"
            )));
        }
        Ok(Self { c, c_frac_max })
    }

    pub fn with_c(c: f64) -> Result<Self> {
        Self::new(c, Self::DEFAULT_C_FRAC_MAX)
    }

    /// Errors when `|v|/c` exceeds the admissible fraction.
    pub fn check_speed(&self, speed: f64) -> Result<()> {
        let ratio = speed / self.c;
        if ratio > self.c_frac_max || !ratio.is_finite() {
            return Err(Error::SuperluminalVelocity {
                ratio,
                max: self.c_frac_max,
            });
        }
        Ok(())
    }
}

fn norm2(a: [f64; 3]) -> f64 {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

/// `γ = √(1 + |u|²/c²)`
pub fn gamma_from_u(u: [f64; 3], c: f64) -> f64 {
    (1.0 + norm2(u) / (c * c)).sqrt()
}

/// `γ = 1/√(1 − |v|²/c²)`
pub fn gamma_from_v(v: [f64; 3], consts: &PhysicalConstants) -> Result<f64> {
    consts.check_speed(norm2(v).sqrt())?;
    let c = consts.c;
    Ok(1.0 / (1.0 - norm2(v) / (c * c)).sqrt())
}

pub fn u_to_v(u: [f64; 3], c: f64) -> [f64; 3] {
    let g = gamma_from_u(u, c);
    [u[0] / g, u[1] / g, u[2] / g]
}

pub fn v_to_u(v: [f64; 3], consts: &PhysicalConstants) -> Result<[f64; 3]> {
    let g = gamma_from_v(v, consts)?;
    Ok([g * v[0], g * v[1], g * v[2]])
}

/// Pointwise `γ(u)` of a four-velocity field.
pub fn gamma_field(u: &VectorField, c: f64) -> ScalarField {
    let u2 = u.dot(u);
    u2.map(|w| (1.0 + w / (c * c)).sqrt())
}

/// Coordinate velocity `v = u/γ(u)`.
pub fn velocity_field(u: &VectorField, c: f64) -> VectorField {
    let inv_gamma = gamma_field(u, c).map(|g| 1.0 / g);
    u.mul_scalar(&inv_gamma)
}

/// Four-velocity `u = γ(v) v`; errors if any point exceeds `c_frac_max`.
pub fn four_velocity_field(v: &VectorField, consts: &PhysicalConstants) -> Result<VectorField> {
    consts.check_speed(v.max_magnitude())?;
    let c = consts.c;
    let gamma = v.dot(v).map(|w| 1.0 / (1.0 - w / (c * c)).sqrt());
    Ok(v.mul_scalar(&gamma))
}

/// `max |v|/c` for a four-velocity field.
pub fn max_v_over_c(u: &VectorField, c: f64) -> f64 {
    velocity_field(u, c).max_magnitude() / c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_values() {
        let k = PhysicalConstants::with_c(2.0).unwrap();
        assert_eq!(gamma_from_u([0.0; 3], 2.0), 1.0);
        assert!((gamma_from_u([2.0, 0.0, 0.0], 2.0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_from_v([0.0; 3], &k).unwrap(), 1.0);
        assert!((gamma_from_v([0.0, 1.2, 0.0], &k).unwrap() - 1.25).abs() < 1e-15);
        assert!(matches!(
            gamma_from_v([2.0, 0.0, 0.0], &k),
            Err(Error::SuperluminalVelocity { .. })
        ));
        let v = u_to_v([0.0, 0.0, 2.0], 2.0);
        assert!((v[2] - 2.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(v_to_u([0.0; 3], &k).unwrap(), [0.0; 3]);
    }

    #[test]
    fn constants_are_validated() {
        assert!(PhysicalConstants::new(0.0, 0.9).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 0.0).is_err());
        assert!(PhysicalConstants::new(f64::NAN, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn round_trips(vx in -0.55f64..0.55, vy in -0.55f64..0.55, vz in -0.55f64..0.55, c in 0.5f64..20.0) {
            let k = PhysicalConstants::with_c(c).unwrap();
            let v = [vx * c, vy * c, vz * c];
            let u = v_to_u(v, &k).unwrap();
            let back = u_to_v(u, c);
            for a in 0..3 {
                prop_assert!((back[a] - v[a]).abs() <= 1e-12 * c);
            }
            let g1 = gamma_from_u(u, c);
            let g2 = gamma_from_v(back, &k).unwrap();
            prop_assert!((g1 - g2).abs() <= 1e-12 * g1);
            // γ² − γ²|v|²/c² = 1
            let id = g1 * g1 - g1 * g1 * norm2(v) / (c * c);
            prop_assert!((id - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn gamma_is_monotone_and_at_least_one(a in 0.0f64..1e3, b in 0.0f64..1e3, c in 0.1f64..1e2) {
            let ga = gamma_from_u([a, 0.0, 0.0], c);
            let gb = gamma_from_u([0.0, b, 0.0], c);
            prop_assert!(ga >= 1.0 && gb >= 1.0);
            if a < b {
                prop_assert!(ga <= gb);
            }
            if a == 0.0 {
                prop_assert_eq!(ga, 1.0);
            }
        }
    }
}
