//! CSV traces: `timestamp,device_id,vital_kind,value_milli`.

use serde::{Deserialize, Serialize};

use crate::ids::{NodeId, Ticks};

use super::reading::{Milli, TelemetryReading, VitalKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub timestamp: Ticks,
    pub device_id: NodeId,
    pub vital_kind: VitalKind,
    pub value_milli: Milli,
}

impl From<&TelemetryReading> for TraceRow {
    fn from(r: &TelemetryReading) -> Self {
        TraceRow {
            timestamp: r.timestamp,
            device_id: r.device_id.clone(),
            vital_kind: r.vital_kind,
            value_milli: r.value,
        }
    }
}

pub fn write_trace_csv<'a>(readings: impl IntoIterator<Item = &'a TelemetryReading>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in readings {
        w.serialize(TraceRow::from(r)).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is UTF-8")
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}
