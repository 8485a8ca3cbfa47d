//! Light quantities and the photosynthetic light-response curve.
//!
//! Sunlight arrives as irradiance (W m⁻²), is converted to photon flux
//! (PPFD, µmol m⁻² s⁻¹), and plants respond to photon flux through a
//! saturating electron transport rate (ETR, µmol m⁻² s⁻¹):
//!
//! ```text
//! ETR = a (1 - exp(-k PPFD))
//! ```
//!
//! The three quantities get distinct types so that a PPFD can never be
//! passed where an ETR is expected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default W m⁻² → µmol m⁻² s⁻¹ factor for broadband sunlight.
pub const DEFAULT_WATTS_TO_PPFD: f64 = 2.02;

/// Constants of the light-response curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotosynthesisParams {
    /// ETR asymptote (µmol m⁻² s⁻¹).
    pub a: f64,
    /// Initial slope divided by `a` (per µmol m⁻² s⁻¹ of PPFD).
    pub k: f64,
}

impl Default for PhotosynthesisParams {
    /// 'Green Towers' lettuce.
    fn default() -> Self {
        Self { a: 121.0, k: 0.00277 }
    }
}

impl PhotosynthesisParams {
    pub fn new(a: f64, k: f64) -> Result<Self> {
        let params = Self { a, k };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::Validation(format!("ETR asymptote a must be > 0, got {}", self.a)));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::Validation(format!("curve slope k must be > 0, got {}", self.k)));
        }
        Ok(())
    }

    /// Raw-float version of [`etr_from_ppfd`], for inner loops.
    #[inline]
    pub fn etr(&self, ppfd: f64) -> f64 {
        // -expm1(-x) keeps precision for small PPFD
        -self.a * (-self.k * ppfd).exp_m1()
    }

    /// Raw-float version of [`ppfd_from_etr`]; caller guarantees `0 <= etr < a`.
    #[inline]
    pub fn ppfd(&self, etr: f64) -> f64 {
        -(-etr / self.a).ln_1p() / self.k
    }
}

macro_rules! nonneg_quantity {
    ($(#[$meta:meta])* $name:ident, $unit:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(f64);

        impl $name {
            pub const ZERO: Self = Self(0.0);

            pub fn new(value: f64) -> Result<Self> {
                if value.is_finite() && value >= 0.0 {
                    Ok(Self(value))
                } else {
                    Err(Error::Domain(format!(
                        concat!(stringify!($name), " must be finite and >= 0 ", $unit, ", got {}"),
                        value
                    )))
                }
            }

            #[inline]
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{} {}", self.0, $unit)
            }
        }
    };
}

nonneg_quantity!(
    /// Photosynthetic photon flux density.
    Ppfd,
    "µmol m⁻² s⁻¹"
);
nonneg_quantity!(
    /// Electron transport rate through photosystem II.
    Etr,
    "µmol m⁻² s⁻¹"
);
nonneg_quantity!(
    /// Solar power on a horizontal surface.
    Irradiance,
    "W m⁻²"
);

/// Converts solar power to photon flux with the given factor (2.02 for sunlight).
pub fn watts_to_ppfd(irr: Irradiance, factor: f64) -> Result<Ppfd> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::Validation(format!("conversion factor must be > 0, got {factor}")));
    }
    Ppfd::new(irr.value() * factor)
}

pub fn etr_from_ppfd(p: Ppfd, params: &PhotosynthesisParams) -> Etr {
    Etr(params.etr(p.value()))
}

/// Inverse of [`etr_from_ppfd`]. Fails for `e >= a`, which the curve never reaches.
pub fn ppfd_from_etr(e: Etr, params: &PhotosynthesisParams) -> Result<Ppfd> {
    if e.value() >= params.a {
        return Err(Error::Domain(format!(
            "ETR {} is at or above the asymptote a = {}",
            e.value(),
            params.a
        )));
    }
    Ok(Ppfd(params.ppfd(e.value())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: PhotosynthesisParams = PhotosynthesisParams { a: 121.0, k: 0.00277 };

    #[test]
    fn watts_conversion() {
        let f = DEFAULT_WATTS_TO_PPFD;
        assert_eq!(watts_to_ppfd(Irradiance::ZERO, f).unwrap().value(), 0.0);
        assert!((watts_to_ppfd(Irradiance::new(100.0).unwrap(), f).unwrap().value() - 202.0).abs() < 1e-12);
        assert!((watts_to_ppfd(Irradiance::new(500.0).unwrap(), f).unwrap().value() - 1010.0).abs() < 1e-12);
        assert!(Irradiance::new(-1.0).is_err());
    }

    #[test]
    fn etr_curve_anchor_points() {
        assert_eq!(etr_from_ppfd(Ppfd::ZERO, &P).value(), 0.0);
        let led_max = etr_from_ppfd(Ppfd::new(200.0).unwrap(), &P).value();
        assert!((led_max - 51.47).abs() < 0.01, "{led_max}");
        let saturated = etr_from_ppfd(Ppfd::new(1e6).unwrap(), &P).value();
        assert!((saturated - 121.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_curve() {
        assert_eq!(ppfd_from_etr(Etr::ZERO, &P).unwrap().value(), 0.0);
        let p = ppfd_from_etr(Etr::new(51.47).unwrap(), &P).unwrap().value();
        assert!((p - 200.0).abs() < 0.05, "{p}");
        assert!(matches!(ppfd_from_etr(Etr::new(121.0).unwrap(), &P), Err(Error::Domain(_))));
    }

    #[test]
    fn params_validation() {
        assert!(PhotosynthesisParams::new(0.0, 0.1).is_err());
        assert!(PhotosynthesisParams::new(10.0, -0.1).is_err());
        assert!(PhotosynthesisParams::new(10.0, 0.1).is_ok());
    }

    proptest! {
        #[test]
        fn round_trip(p in 0.0f64..3000.0) {
            let back = ppfd_from_etr(etr_from_ppfd(Ppfd::new(p).unwrap(), &P), &P).unwrap().value();
            prop_assert!((back - p).abs() <= 1e-9 * p.max(1e-300) || back == p);
        }

        #[test]
        fn monotone_and_bounded(p1 in 0.0f64..3000.0, dp in 1e-3f64..3000.0) {
            let e1 = P.etr(p1);
            let e2 = P.etr(p1 + dp);
            prop_assert!(e1 < e2);
            prop_assert!(e2 < P.a);
        }
    }
}
