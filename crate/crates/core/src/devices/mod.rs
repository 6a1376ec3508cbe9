//! Simulated bedside sensors with deterministic vital-sign generation and
//! fault injection.

mod profile;
mod reading;
mod sim;
mod trace;

pub use profile::{
    default_fleet, derive_seed, DeviceProfile, FaultKind, FaultSpec, DEFAULT_SAMPLE_PERIOD,
};
pub use reading::{from_milli, to_milli, Milli, TelemetryReading, VitalKind, MILLI};
pub use sim::{run_device, run_readings, DeviceSim, DIURNAL_PERIOD};
pub use trace::{parse_trace_csv, write_trace_csv, TraceRow};
