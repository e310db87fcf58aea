//! γ-barotropic closures `P = P(s)` with `s = γϱ₀`, and the potential `ζ`
//! satisfying `ζ″(s) = P′(s)/s`.

use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EosKind {
    /// `P = a s`
    GammaIdeal,
    /// `P = a s^exponent`, exponent > 0 and ≠ 1
    PowerLaw { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eos {
    kind: EosKind,
    a: f64,
}

impl Eos {
    pub fn gamma_ideal(a: f64) -> Result<Self> {
        Self::new(EosKind::GammaIdeal, a)
    }

    pub fn power_law(a: f64, exponent: f64) -> Result<Self> {
        Self::new(EosKind::PowerLaw { exponent }, a)
    }

    pub fn new(kind: EosKind, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidEos(format!(
                "pressure scale a must be positive, got {a}"
            )));
        }
        if let EosKind::PowerLaw { exponent } = kind {
            if !(exponent.is_finite() && exponent > 0.0) {
                return Err(Error::InvalidEos(format!(
                    "power-law exponent must be positive, got {exponent}"
                )));
            }
            if exponent == 1.0 {
                return Err(Error::InvalidEos(
                    "power-law exponent 1 is the gamma-ideal closure; select that kind instead"
                        .into(),
                ));
            }
        }
        Ok(Self { kind, a })
    }

    pub fn kind(&self) -> EosKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.a
    }

    fn check(s: f64) -> Result<()> {
        if s > 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveDensity { value: s })
        }
    }

    pub fn pressure(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(match self.kind {
            EosKind::GammaIdeal => self.a * s,
            EosKind::PowerLaw { exponent } => self.a * s.powf(exponent),
        })
    }

    /// `dP/ds`
    pub fn pressure_derivative(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(match self.kind {
            EosKind::GammaIdeal => self.a,
            EosKind::PowerLaw { exponent } => self.a * exponent * s.powf(exponent - 1.0),
        })
    }

    /// `(ζ, ζ′, ζ″)` at `s`.
    pub fn zeta(&self, s: f64) -> Result<(f64, f64, f64)> {
        Self::check(s)?;
        let a = self.a;
        Ok(match self.kind {
            EosKind::GammaIdeal => {
                let ln = s.ln();
                (a * (s * ln - s), a * ln, a / s)
            }
            EosKind::PowerLaw { exponent: g } => (
                a * s.powf(g) / (g - 1.0),
                a * g * s.powf(g - 1.0) / (g - 1.0),
                a * g * s.powf(g - 2.0),
            ),
        })
    }

    fn field(&self, s: &ScalarField, f: impl Fn(f64) -> f64 + Sync + Send) -> Result<ScalarField> {
        let min = s.min();
        Self::check(min)?;
        Ok(s.map(f))
    }

    pub fn pressure_field(&self, s: &ScalarField) -> Result<ScalarField> {
        self.field(s, |v| self.pressure(v).expect("checked positive"))
    }

    pub fn zeta_field(&self, s: &ScalarField) -> Result<ScalarField> {
        self.field(s, |v| self.zeta(v).expect("checked positive").0)
    }

    pub fn zeta_prime_field(&self, s: &ScalarField) -> Result<ScalarField> {
        self.field(s, |v| self.zeta(v).expect("checked positive").1)
    }
}
