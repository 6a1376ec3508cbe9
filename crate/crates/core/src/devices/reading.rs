use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::ids::{NodeId, Ticks};

/// Fixed-point physical quantity: value × 1000.
pub type Milli = i64;

pub const MILLI: Milli = 1_000;

/// Converts a physical value to milliunits, rounding half away from zero.
pub fn to_milli(v: f64) -> Milli {
    (v * MILLI as f64).round() as Milli
}

pub fn from_milli(v: Milli) -> f64 {
    v as f64 / MILLI as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalKind {
    /// beats per minute
    HeartRate,
    /// percent saturation
    #[serde(rename = "spo2")]
    SpO2,
    /// degrees Celsius
    Temperature,
    /// mmHg
    SystolicBp,
    /// mmHg
    DiastolicBp,
    /// mg/dL
    Glucose,
}

impl VitalKind {
    pub const ALL: [VitalKind; 6] = [
        VitalKind::HeartRate,
        VitalKind::SpO2,
        VitalKind::Temperature,
        VitalKind::SystolicBp,
        VitalKind::DiastolicBp,
        VitalKind::Glucose,
    ];

    pub fn tag(self) -> u8 {
        match self {
            VitalKind::HeartRate => 0,
            VitalKind::SpO2 => 1,
            VitalKind::Temperature => 2,
            VitalKind::SystolicBp => 3,
            VitalKind::DiastolicBp => 4,
            VitalKind::Glucose => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        VitalKind::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            VitalKind::HeartRate => "heart_rate",
            VitalKind::SpO2 => "spo2",
            VitalKind::Temperature => "temperature",
            VitalKind::SystolicBp => "systolic_bp",
            VitalKind::DiastolicBp => "diastolic_bp",
            VitalKind::Glucose => "glucose",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            VitalKind::HeartRate => "bpm",
            VitalKind::SpO2 => "%",
            VitalKind::Temperature => "°C",
            VitalKind::SystolicBp | VitalKind::DiastolicBp => "mmHg",
            VitalKind::Glucose => "mg/dL",
        }
    }
}

impl fmt::Display for VitalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VitalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VitalKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown vital kind `{s}`"))
    }
}

impl Encode for VitalKind {
    fn encode(&self, enc: &mut Encoder) {
        enc.tag(self.tag());
    }
}

impl Decode for VitalKind {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let t = dec.tag()?;
        VitalKind::from_tag(t).ok_or(CodecError::InvalidTag {
            tag: t,
            type_name: "VitalKind",
        })
    }
}

/// One sensed sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TelemetryReading {
    pub device_id: NodeId,
    pub patient_id: String,
    pub vital_kind: VitalKind,
    pub value: Milli,
    pub timestamp: Ticks,
}

impl Encode for TelemetryReading {
    fn encode(&self, enc: &mut Encoder) {
        enc.value(&self.device_id)
            .str(&self.patient_id)
            .value(&self.vital_kind)
            .i64(self.value)
            .u64(self.timestamp);
    }
}

impl Decode for TelemetryReading {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(TelemetryReading {
            device_id: NodeId::decode(dec)?,
            patient_id: dec.string()?,
            vital_kind: VitalKind::decode(dec)?,
            value: dec.i64()?,
            timestamp: dec.u64()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn milli_rounding_is_half_away_from_zero() {
        assert_eq!(to_milli(72.0), 72_000);
        assert_eq!(to_milli(0.0005), 1);
        assert_eq!(to_milli(-0.0005), -1);
        assert_eq!(from_milli(36_800), 36.8);
    }

    #[test]
    fn vital_names_parse_back() {
        for k in VitalKind::ALL {
            assert_eq!(k.name().parse::<VitalKind>().unwrap(), k);
            assert_eq!(VitalKind::from_tag(k.tag()), Some(k));
        }
        assert!("pulse".parse::<VitalKind>().is_err());
        assert_eq!(VitalKind::from_tag(6), None);
    }
}
