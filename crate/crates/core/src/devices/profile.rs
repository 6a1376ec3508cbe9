use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::Encoder;
use crate::digest::hash_bytes;
use crate::ids::{NodeId, Ticks};

use super::reading::{to_milli, Milli, VitalKind};

/// Static description of one simulated sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    pub device_id: NodeId,
    pub patient_id: String,
    pub vital_kind: VitalKind,
    pub baseline: Milli,
    pub diurnal_amplitude: Milli,
    pub noise_sigma: Milli,
    pub sample_period: Ticks,
    pub seed: u64,
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<(), String> {
        if self.sample_period == 0 {
            return Err(format!("{}: sample_period must be positive", self.device_id));
        }
        if self.noise_sigma < 0 || self.diurnal_amplitude < 0 {
            return Err(format!(
                "{}: noise_sigma and diurnal_amplitude must be non-negative",
                self.device_id
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaultKind {
    /// Output pinned to a constant.
    StuckAt { value: Milli },
    /// Adds `rate × samples since onset`.
    Drift { rate: Milli },
    /// Multiplies the noise standard deviation.
    NoiseBurst { sigma_multiplier: f64 },
    /// Each sample is lost with this probability.
    Dropout { probability: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub onset: Ticks,
}

impl FaultSpec {
    pub fn new(kind: FaultKind, onset: Ticks) -> Self {
        FaultSpec { kind, onset }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.kind {
            FaultKind::Dropout { probability } if !(0.0..=1.0).contains(&probability) => {
                Err(format!("dropout probability {probability} outside [0, 1]"))
            }
            FaultKind::NoiseBurst { sigma_multiplier }
                if !(sigma_multiplier.is_finite() && sigma_multiplier >= 0.0) =>
            {
                Err(format!("noise-burst multiplier {sigma_multiplier} must be >= 0"))
            }
            _ => Ok(()),
        }
    }
}

impl FaultKind {
    /// Parses the command-line form: `stuck-at:<value>`, `drift:<per-sample>`,
    /// `noise-burst:<multiplier>` or `dropout:<probability>`. Values are in
    /// physical units.
    pub fn parse(s: &str) -> Result<FaultKind, String> {
        let (name, arg) = s
            .split_once(':')
            .ok_or_else(|| format!("fault `{s}` must look like <kind>:<value>"))?;
        let v: f64 = arg
            .parse()
            .map_err(|_| format!("fault value `{arg}` is not a number"))?;
        if !v.is_finite() {
            return Err(format!("fault value `{arg}` is not finite"));
        }
        let kind = match name {
            "stuck-at" => FaultKind::StuckAt { value: to_milli(v) },
            "drift" => FaultKind::Drift { rate: to_milli(v) },
            "noise-burst" => FaultKind::NoiseBurst {
                sigma_multiplier: v,
            },
            "dropout" => FaultKind::Dropout { probability: v },
            other => return Err(format!("unknown fault kind `{other}`")),
        };
        FaultSpec::new(kind, 0).validate()?;
        Ok(kind)
    }
}

impl FromStr for FaultKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaultKind::parse(s)
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use super::reading::from_milli;
        match *self {
            FaultKind::StuckAt { value } => write!(f, "stuck-at:{}", from_milli(value)),
            FaultKind::Drift { rate } => write!(f, "drift:{}", from_milli(rate)),
            FaultKind::NoiseBurst { sigma_multiplier } => write!(f, "noise-burst:{sigma_multiplier}"),
            FaultKind::Dropout { probability } => write!(f, "dropout:{probability}"),
        }
    }
}

/// Per-device seed: first 8 bytes of `H(seed || index)`, both big-endian u64.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut e = Encoder::new();
    e.u64(seed).u64(index);
    let d = hash_bytes(&e.into_bytes());
    u64::from_be_bytes(d.as_bytes()[..8].try_into().unwrap())
}

struct FleetDefault {
    kind: VitalKind,
    baseline: f64,
    amplitude: f64,
    sigma: f64,
}

const FLEET_DEFAULTS: [FleetDefault; 4] = [
    FleetDefault {
        kind: VitalKind::HeartRate,
        baseline: 72.0,
        amplitude: 4.0,
        sigma: 2.0,
    },
    FleetDefault {
        kind: VitalKind::SpO2,
        baseline: 97.0,
        amplitude: 0.2,
        sigma: 0.25,
    },
    FleetDefault {
        kind: VitalKind::Temperature,
        baseline: 36.8,
        amplitude: 0.3,
        sigma: 0.05,
    },
    FleetDefault {
        kind: VitalKind::SystolicBp,
        baseline: 118.0,
        amplitude: 6.0,
        sigma: 3.0,
    },
];

pub const DEFAULT_SAMPLE_PERIOD: Ticks = 1_000;

/// `n` single-vital devices, `device-1..n`, each watching `patient-i`, with
/// vitals rotating heart rate, SpO2, temperature, systolic pressure.
pub fn default_fleet(n: usize, seed: u64) -> Vec<DeviceProfile> {
    (0..n)
        .map(|i| {
            let d = &FLEET_DEFAULTS[i % FLEET_DEFAULTS.len()];
            DeviceProfile {
                device_id: NodeId::new(format!("device-{}", i + 1)),
                patient_id: format!("patient-{}", i + 1),
                vital_kind: d.kind,
                baseline: to_milli(d.baseline),
                diurnal_amplitude: to_milli(d.amplitude),
                noise_sigma: to_milli(d.sigma),
                sample_period: DEFAULT_SAMPLE_PERIOD,
                seed: derive_seed(seed, i as u64),
            }
        })
        .collect()
}
