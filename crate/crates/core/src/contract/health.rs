//! Streaming per-device health model used to localize malfunctioning sensors.
//!
//! Each (device, vital kind) pair keeps two estimators, all in fixed point:
//!
//! * a fast EWMA of the signal (`ewma_mean`, `ewma_var`), updated with every
//!   sample, including implausible ones;
//! * an in-control reference (`ref_mean_micro`, `ref_var`) learned with
//!   weight `max(1/n, reference_alpha)` and only from samples that were not
//!   violations, so a fault cannot teach the reference its own values.
//!
//! The reference mean is kept in micro-units. At a weight of 0.0025 a
//! milliunit mean would only move for deviations above 200 milliunits, so it
//! would stall on low-noise vitals and let slow physiological trends look
//! like faults.
//!
//! A sample is a violation when it fails the plausibility bounds, or when,
//! past warmup, the fast mean leaves the EWMA control band around the
//! reference:
//!
//! ```text
//! |ewma_mean - ref_mean| > k * sqrt(ref_var * alpha / (2 - alpha))
//! ```
//!
//! A stuck sensor has no mean shift when it freezes near its current level,
//! so the fast variance collapsing below `variance_floor * ref_var` is also
//! a violation, again only past warmup.
//!
//! `C` consecutive violations flag the pair. Flags are never cleared.
//!
//! Rates are parts-per-million and `k` is in thousandths, so every
//! comparison is exact integer arithmetic; divisions round half away from
//! zero.

use serde::{Deserialize, Serialize};

use crate::devices::Milli;

pub const PPM: i128 = 1_000_000;
/// Micro-units per milliunit. Equal to the scale of `k_milli`, which lets
/// the band test cancel the two factors.
const MICRO: i128 = 1_000;
/// Inputs are clamped to this magnitude so every product fits in i128.
const MAX_ABS_INPUT: Milli = 1_000_000_000_000;

/// Integer division rounding half away from zero.
pub fn div_round(num: i128, den: i128) -> i128 {
    assert!(den > 0);
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den {
        q + num.signum()
    } else {
        q
    }
}

fn to_i64(v: i128) -> i64 {
    i64::try_from(v).unwrap_or(if v < 0 { i64::MIN } else { i64::MAX })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Fast EWMA weight, ppm.
    pub alpha_ppm: i64,
    /// Control band width in thousandths of a standard deviation.
    pub k_milli: i64,
    /// Consecutive violations that flag a device.
    pub consecutive: u32,
    /// Samples before the control-band test is armed.
    pub warmup: u64,
    /// Floor of the reference learning weight, ppm.
    pub reference_alpha_ppm: i64,
    /// Fraction of the reference variance below which the fast variance
    /// counts as collapsed, ppm. Zero disables the test.
    pub variance_floor_ppm: i64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            alpha_ppm: 100_000,
            k_milli: 4_000,
            consecutive: 5,
            warmup: 100,
            reference_alpha_ppm: 5_000,
            variance_floor_ppm: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealthStatus {
    Healthy,
    Suspect,
    Flagged,
}

/// Health model for one (device, vital kind) stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VitalModel {
    pub ewma_mean: Milli,
    /// Milliunits squared.
    pub ewma_var: i64,
    /// Reference mean in micro-units (milliunits × 1000).
    pub ref_mean_micro: i64,
    pub ref_var: i64,
    pub ref_samples: u64,
    pub consecutive_violations: u32,
    pub status: HealthStatus,
    pub samples_seen: u64,
    /// Zero-based sample index at which the stream was flagged.
    pub flagged_at: Option<u64>,
}

impl Default for VitalModel {
    fn default() -> Self {
        VitalModel {
            ewma_mean: 0,
            ewma_var: 0,
            ref_mean_micro: 0,
            ref_var: 0,
            ref_samples: 0,
            consecutive_violations: 0,
            status: HealthStatus::Healthy,
            samples_seen: 0,
            flagged_at: None,
        }
    }
}

/// Outcome of feeding one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOutcome {
    pub violation: bool,
    pub newly_flagged: bool,
}

impl VitalModel {
    /// Returns the model after observing `x`; `plausible` is the bounds check
    /// result for the same sample.
    pub fn observe(&self, x: Milli, plausible: bool, p: &DetectorParams) -> (VitalModel, SampleOutcome) {
        let x = x.clamp(-MAX_ABS_INPUT, MAX_ABS_INPUT);
        let mut next = self.clone();
        let a = p.alpha_ppm as i128;
        let shift = if self.samples_seen == 0 {
            next.ewma_mean = x;
            next.ewma_var = 0;
            false
        } else {
            let m_prev = self.ewma_mean as i128;
            let d = x as i128 - m_prev;
            next.ewma_mean = to_i64(div_round((PPM - a) * m_prev + a * x as i128, PPM));
            next.ewma_var = to_i64(div_round((PPM - a) * self.ewma_var as i128 + a * d * d, PPM));
            self.samples_seen > p.warmup
                && (self.outside_band(next.ewma_mean, p) || self.collapsed(next.ewma_var, p))
        };

        let violation = !plausible || shift;
        if violation {
            next.consecutive_violations = self.consecutive_violations.saturating_add(1);
        } else {
            next.consecutive_violations = 0;
            next.learn_reference(x, p);
        }
        next.samples_seen += 1;

        let mut newly_flagged = false;
        if next.consecutive_violations >= p.consecutive {
            if next.status != HealthStatus::Flagged {
                newly_flagged = true;
                next.flagged_at = Some(self.samples_seen);
            }
            next.status = HealthStatus::Flagged;
        } else if next.status != HealthStatus::Flagged {
            next.status = if next.consecutive_violations > 0 {
                HealthStatus::Suspect
            } else {
                HealthStatus::Healthy
            };
        }
        (
            next,
            SampleOutcome {
                violation,
                newly_flagged,
            },
        )
    }

    /// `(m - ref)^2 * (2 - alpha) > k^2 * alpha * ref_var`, scaled to integers.
    fn outside_band(&self, m: Milli, p: &DetectorParams) -> bool {
        if self.ref_samples == 0 {
            return false;
        }
        let a = p.alpha_ppm as i128;
        let k = p.k_milli as i128;
        // (dev_milli * k_scale)^2 == dev_micro^2 since k_scale == MICRO.
        let dev = m as i128 * MICRO - self.ref_mean_micro as i128;
        let lhs = dev * dev * (2 * PPM - a);
        let rhs = k * k * a * self.ref_var as i128;
        lhs > rhs
    }

    /// `v < floor * ref_var`.
    fn collapsed(&self, v: i64, p: &DetectorParams) -> bool {
        self.ref_samples > 0
            && (v as i128) * PPM < p.variance_floor_ppm as i128 * self.ref_var as i128
    }

    fn learn_reference(&mut self, x: Milli, p: &DetectorParams) {
        let n = self.ref_samples as i128 + 1;
        let old_mean = self.ref_mean_micro as i128;
        let x = x as i128 * MICRO;
        let d = x - old_mean;
        let var = self.ref_var as i128 * MICRO * MICRO;
        if n == 1 {
            self.ref_mean_micro = to_i64(x);
            self.ref_var = 0;
        } else if n * p.reference_alpha_ppm as i128 <= PPM {
            // Weight 1/n while it exceeds the floor: a plain running average.
            self.ref_mean_micro = to_i64(div_round((n - 1) * old_mean + x, n));
            self.ref_var = to_i64(div_round((n - 1) * var + d * d, n * MICRO * MICRO));
        } else {
            let w = p.reference_alpha_ppm as i128;
            self.ref_mean_micro = to_i64(div_round((PPM - w) * old_mean + w * x, PPM));
            self.ref_var = to_i64(div_round((PPM - w) * var + w * d * d, PPM * MICRO * MICRO));
        }
        self.ref_samples += 1;
    }
}
