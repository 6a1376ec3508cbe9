//! Plausibility bounds for telemetry.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices::{to_milli, Milli, TelemetryReading, VitalKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no plausibility bounds configured for {0}")]
pub struct UnsupportedVitalKind(pub VitalKind);

/// Inclusive `[lo, hi]` envelope per vital kind, in milliunits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlausibilityBounds {
    bounds: BTreeMap<VitalKind, (Milli, Milli)>,
}

impl Default for PlausibilityBounds {
    fn default() -> Self {
        let table = [
            (VitalKind::HeartRate, 25.0, 250.0),
            (VitalKind::SpO2, 50.0, 100.0),
            (VitalKind::Temperature, 30.0, 45.0),
            (VitalKind::SystolicBp, 60.0, 250.0),
            (VitalKind::DiastolicBp, 30.0, 150.0),
            (VitalKind::Glucose, 20.0, 600.0),
        ];
        PlausibilityBounds {
            bounds: table
                .into_iter()
                .map(|(k, lo, hi)| (k, (to_milli(lo), to_milli(hi))))
                .collect(),
        }
    }
}

impl PlausibilityBounds {
    pub fn empty() -> Self {
        PlausibilityBounds {
            bounds: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, kind: VitalKind, lo: Milli, hi: Milli) {
        self.bounds.insert(kind, (lo, hi));
    }

    pub fn get(&self, kind: VitalKind) -> Option<(Milli, Milli)> {
        self.bounds.get(&kind).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VitalKind, Milli, Milli)> + '_ {
        self.bounds.iter().map(|(&k, &(lo, hi))| (k, lo, hi))
    }

    pub fn validate(&self, reading: &TelemetryReading) -> Result<bool, UnsupportedVitalKind> {
        let (lo, hi) = self
            .get(reading.vital_kind)
            .ok_or(UnsupportedVitalKind(reading.vital_kind))?;
        Ok((lo..=hi).contains(&reading.value))
    }
}

/// `validate_vitals` against the default bounds table.
pub fn validate_vitals(reading: &TelemetryReading) -> Result<bool, UnsupportedVitalKind> {
    PlausibilityBounds::default().validate(reading)
}
