use serde::Serialize;

use super::checks::Table;

/// Batch sizes of the reference measurements.
pub const REFERENCE_BATCH_SIZES: [u64; 4] = [50, 100, 150, 200];

/// Transaction processing time in seconds on the original four-device
/// testbed, by batch size (rows) and device (columns).
pub const REFERENCE_PROCESSING_TIME_S: [[f64; 4]; 4] = [
    [20.0, 22.0, 18.0, 23.0],
    [31.0, 41.0, 37.0, 45.0],
    [55.0, 62.0, 58.0, 67.0],
    [82.0, 84.0, 73.0, 91.0],
];

/// Average per-transaction delay in seconds on the same testbed.
pub const REFERENCE_AVERAGE_DELAY_S: [[f64; 4]; 4] = [
    [0.8, 0.9, 0.7, 0.8],
    [2.1, 2.0, 1.9, 1.7],
    [2.4, 1.8, 2.6, 2.1],
    [3.6, 3.2, 3.3, 3.0],
];

fn table(values: &[[f64; 4]; 4]) -> Table {
    Table::new(
        REFERENCE_BATCH_SIZES.to_vec(),
        (1..=4).map(|d| format!("device_{d}")).collect(),
        values.iter().map(|r| r.to_vec()).collect(),
    )
}

pub fn reference_processing_table() -> Table {
    table(&REFERENCE_PROCESSING_TIME_S)
}

pub fn reference_delay_table() -> Table {
    table(&REFERENCE_AVERAGE_DELAY_S)
}

/// Reference measurements as embedded in `report.json`. They come from an
/// Ethereum test network and are listed for comparison only; the simulator
/// does not try to reproduce their absolute values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceValues {
    pub note: &'static str,
    pub processing_time_s: Table,
    pub average_delay_s: Table,
}

impl ReferenceValues {
    pub fn new() -> Self {
        ReferenceValues {
            note: "measured on a four-device Ethereum test network; comparison only, not a target",
            processing_time_s: reference_processing_table(),
            average_delay_s: reference_delay_table(),
        }
    }
}

impl Default for ReferenceValues {
    fn default() -> Self {
        ReferenceValues::new()
    }
}
