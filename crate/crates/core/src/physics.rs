//! Seawater electromagnetic channel model.
//!
//! Conductivity follows the linear temperature/salinity fit
//! `σ = 0.19·S·(1 + 0.02·(T − 25))`, attenuation is the good-conductor skin
//! loss `α = 8.686·√(π·f·μ₀·σ)` in dB/m, and phase velocity is
//! `v_p = √(4π·f / (μ₀·σ))`. Packet delivery over a hop is a logistic
//! function of the hop's total attenuation.
//!
//! All quantities are SI: meters, seconds, dB, S/m, Hz.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permeability, H/m.
pub const MU_0: f64 = 4.0 * PI * 1e-7;

/// Neper to decibel conversion used by the attenuation fit.
pub const DB_PER_NEPER: f64 = 8.686;

/// Effective-distance factor applied when an AUV transmits.
pub const AUV_DISTANCE_SCALE: f64 = 0.79;

pub const DEFAULT_FREQUENCY_HZ: f64 = 1.0e5;

pub const MIN_TEMPERATURE_C: f64 = -2.0;
pub const MAX_TEMPERATURE_C: f64 = 40.0;

/// Reference seawater used for calibrating the delivery model.
pub const REFERENCE_TEMPERATURE_C: f64 = 25.0;
pub const REFERENCE_SALINITY_PSU: f64 = 35.0;
/// Hop length (unscaled transmitter) at which the default delivery model hits 50%.
pub const REFERENCE_DISTANCE_M: f64 = 30.0;
pub const DEFAULT_SLOPE_PER_DB: f64 = 0.05;

fn default_frequency() -> f64 {
    DEFAULT_FREQUENCY_HZ
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub temperature_c: f64,
    pub salinity_psu: f64,
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    /// Pins conductivity (S/m) instead of deriving it from T and S.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conductivity_override: Option<f64>,
}

impl Default for Environment {
    fn default() -> Self {
        Self::reference()
    }
}

impl Environment {
    pub fn new(temperature_c: f64, salinity_psu: f64) -> Result<Self> {
        let env = Self {
            temperature_c,
            salinity_psu,
            frequency_hz: DEFAULT_FREQUENCY_HZ,
            conductivity_override: None,
        };
        env.validate()?;
        Ok(env)
    }

    /// T = 25 °C, S = 35 PSU, f = 100 kHz.
    pub const fn reference() -> Self {
        Self {
            temperature_c: REFERENCE_TEMPERATURE_C,
            salinity_psu: REFERENCE_SALINITY_PSU,
            frequency_hz: DEFAULT_FREQUENCY_HZ,
            conductivity_override: None,
        }
    }

    pub fn with_frequency(mut self, frequency_hz: f64) -> Self {
        self.frequency_hz = frequency_hz;
        self
    }

    pub fn with_conductivity(mut self, sigma: f64) -> Self {
        self.conductivity_override = Some(sigma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.temperature_c;
        if !t.is_finite() || !(MIN_TEMPERATURE_C..=MAX_TEMPERATURE_C).contains(&t) {
            return Err(Error::InvalidEnvironment {
                field: "temperature_c",
                value: t,
                reason: "must be within [-2, 40] degrees Celsius",
            });
        }
        if !self.salinity_psu.is_finite() || self.salinity_psu < 0.0 {
            return Err(Error::InvalidEnvironment {
                field: "salinity_psu",
                value: self.salinity_psu,
                reason: "must be >= 0",
            });
        }
        if !self.frequency_hz.is_finite() || self.frequency_hz <= 0.0 {
            return Err(Error::InvalidEnvironment {
                field: "frequency_hz",
                value: self.frequency_hz,
                reason: "must be > 0",
            });
        }
        if let Some(sigma) = self.conductivity_override {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(Error::InvalidEnvironment {
                    field: "conductivity_override",
                    value: sigma,
                    reason: "must be >= 0",
                });
            }
        }
        Ok(())
    }
}

/// Conductivity estimate with a flag for when the linear fit went negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conductivity {
    pub siemens_per_meter: f64,
    pub clamped: bool,
}

/// Raw temperature/salinity conductivity fit, clamped at zero.
pub fn conductivity_estimate(env: &Environment) -> Result<Conductivity> {
    env.validate()?;
    let raw = 0.19 * env.salinity_psu * (1.0 + 0.02 * (env.temperature_c - 25.0));
    Ok(Conductivity {
        siemens_per_meter: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

/// Seawater conductivity in S/m from temperature and salinity.
pub fn conductivity(env: &Environment) -> Result<f64> {
    Ok(conductivity_estimate(env)?.siemens_per_meter)
}

/// Conductivity the channel actually uses: the override when set, else the fit.
pub fn channel_conductivity(env: &Environment) -> Result<f64> {
    env.validate()?;
    match env.conductivity_override {
        Some(sigma) => Ok(sigma),
        None => conductivity(env),
    }
}

fn positive_conductivity(env: &Environment) -> Result<f64> {
    let sigma = channel_conductivity(env)?;
    if sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(Error::InvalidChannel {
            conductivity: sigma,
        })
    }
}

/// Attenuation coefficient in dB/m.
pub fn attenuation_coefficient(env: &Environment) -> Result<f64> {
    let sigma = positive_conductivity(env)?;
    Ok(DB_PER_NEPER * (env.frequency_hz * MU_0 * sigma * PI).sqrt())
}

/// Distance after applying the AUV transmitter scaling.
pub fn effective_distance(distance_m: f64, transmitter_is_auv: bool) -> f64 {
    if transmitter_is_auv {
        AUV_DISTANCE_SCALE * distance_m
    } else {
        distance_m
    }
}

/// Total attenuation in dB over `distance_m`.
pub fn total_attenuation(env: &Environment, distance_m: f64, transmitter_is_auv: bool) -> Result<f64> {
    check_distance(distance_m)?;
    Ok(attenuation_coefficient(env)? * effective_distance(distance_m, transmitter_is_auv))
}

/// Phase velocity in m/s.
pub fn phase_velocity(env: &Environment) -> Result<f64> {
    let sigma = positive_conductivity(env)?;
    Ok((4.0 * PI * env.frequency_hz / (MU_0 * sigma)).sqrt())
}

/// One-way propagation delay in seconds.
pub fn propagation_delay(env: &Environment, distance_m: f64) -> Result<f64> {
    check_distance(distance_m)?;
    Ok(distance_m / phase_velocity(env)?)
}

fn check_distance(distance_m: f64) -> Result<()> {
    if distance_m.is_finite() && distance_m >= 0.0 {
        Ok(())
    } else {
        Err(Error::config("distance_m", format!("must be finite and >= 0, got {distance_m}")))
    }
}

/// Logistic map from hop attenuation to delivery probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeliveryModel {
    /// Per-dB slope `s`.
    pub slope_s: f64,
    /// Attenuation at which delivery is 50%, dB.
    pub threshold_theta_db: f64,
}

impl Default for DeliveryModel {
    /// Calibrated so that a 30 m sensor hop in reference seawater sits at 50%.
    fn default() -> Self {
        let alpha = attenuation_coefficient(&Environment::reference())
            .expect("reference environment has positive conductivity");
        Self {
            slope_s: DEFAULT_SLOPE_PER_DB,
            threshold_theta_db: alpha * REFERENCE_DISTANCE_M,
        }
    }
}

impl DeliveryModel {
    pub fn new(slope_s: f64, threshold_theta_db: f64) -> Result<Self> {
        let model = Self {
            slope_s,
            threshold_theta_db,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope_s.is_finite() && self.slope_s > 0.0) {
            return Err(Error::InvalidDeliveryModel(format!(
                "slope_s must be > 0, got {}",
                self.slope_s
            )));
        }
        if self.threshold_theta_db.is_nan() {
            return Err(Error::InvalidDeliveryModel("threshold_theta_db is NaN".into()));
        }
        Ok(())
    }

    pub fn probability(&self, attenuation_db: f64) -> f64 {
        delivery_probability(self, attenuation_db)
    }
}

/// `1 / (1 + e^{s·(L − θ)})`, evaluated without overflow.
pub fn delivery_probability(model: &DeliveryModel, attenuation_db: f64) -> f64 {
    let z = model.slope_s * (attenuation_db - model.threshold_theta_db);
    if z.is_nan() {
        return 0.0;
    }
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Per-hop link figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub effective_distance_m: f64,
    pub attenuation_db: f64,
    pub delay_s: f64,
    pub delivery_prob: f64,
}

/// Precomputed channel constants for one environment.
///
/// Evaluating many links (optimizer inner loops, route selection) goes
/// through this instead of re-deriving α and v_p each time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub environment: Environment,
    pub conductivity: f64,
    pub alpha_db_per_m: f64,
    pub phase_velocity: f64,
}

impl Channel {
    pub fn new(env: &Environment) -> Result<Self> {
        Ok(Self {
            environment: *env,
            conductivity: positive_conductivity(env)?,
            alpha_db_per_m: attenuation_coefficient(env)?,
            phase_velocity: phase_velocity(env)?,
        })
    }

    pub fn attenuation(&self, distance_m: f64, transmitter_is_auv: bool) -> f64 {
        self.alpha_db_per_m * effective_distance(distance_m, transmitter_is_auv)
    }

    pub fn delay(&self, distance_m: f64) -> f64 {
        distance_m / self.phase_velocity
    }

    pub fn link(&self, distance_m: f64, transmitter_is_auv: bool, model: &DeliveryModel) -> LinkBudget {
        let effective_distance_m = effective_distance(distance_m, transmitter_is_auv);
        let attenuation_db = self.alpha_db_per_m * effective_distance_m;
        LinkBudget {
            distance_m,
            effective_distance_m,
            attenuation_db,
            delay_s: self.delay(distance_m),
            delivery_prob: model.probability(attenuation_db),
        }
    }
}
