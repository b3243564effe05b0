//! IEEE 802.15.4 timing and retry constants.
//!
//! All durations are integer multiples of the symbol time.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Symbols per second at 16 µs per symbol (2.4 GHz O-QPSK PHY).
pub const SYMBOLS_PER_SECOND: f64 = 62_500.0;

/// Duration of one symbol in seconds.
pub const SYMBOL_TIME_S: f64 = 16e-6;

/// Converts a rate in events per second to events per symbol time.
#[inline]
pub fn per_second_to_per_symbol(rate: f64) -> f64 {
    rate / SYMBOLS_PER_SECOND
}

/// Converts a rate in events per symbol time to events per second.
#[inline]
pub fn per_symbol_to_per_second(rate: f64) -> f64 {
    rate * SYMBOLS_PER_SECOND
}

#[inline]
pub fn symbols_to_seconds(symbols: f64) -> f64 {
    symbols / SYMBOLS_PER_SECOND
}

#[inline]
pub fn seconds_to_symbols(seconds: f64) -> f64 {
    seconds * SYMBOLS_PER_SECOND
}

/// PHY synchronisation header + PHY header + minimal MAC header with short
/// addresses and PAN-ID compression + FCS, in bytes.
pub const FRAME_OVERHEAD_BYTES: u32 = 6 + 9 + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolParams {
    /// Backoff slot (aUnitBackoffPeriod).
    pub slot: u32,
    pub cca_duration: u32,
    /// Rx-to-Tx turnaround.
    pub turnaround: u32,
    pub ack_duration: u32,
    /// macAckWaitDuration; equals `turnaround + ack_duration` in this model.
    pub ack_wait: u32,
    pub mac_min_be: u32,
    pub mac_max_be: u32,
    pub mac_max_csma_backoffs: u32,
    pub max_frame_retries: u32,
    /// DATA frame duration at the PHY, `T_x`.
    pub data_symbols: u32,
    pub acks_enabled: bool,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            slot: 20,
            cca_duration: 8,
            turnaround: 12,
            ack_duration: 22,
            ack_wait: 34,
            mac_min_be: 3,
            mac_max_be: 5,
            mac_max_csma_backoffs: 4,
            max_frame_retries: 3,
            data_symbols: 260,
            acks_enabled: true,
        }
    }
}

impl ProtocolParams {
    /// Default constants with `T_x` derived from a MAC payload size
    /// (two symbols per byte, plus [`FRAME_OVERHEAD_BYTES`]).
    pub fn with_payload_bytes(payload: u32) -> Self {
        Self {
            data_symbols: 2 * (payload + FRAME_OVERHEAD_BYTES),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.mac_min_be > self.mac_max_be {
            problems.push(format!(
                "macMinBE {} exceeds macMaxBE {}",
                self.mac_min_be, self.mac_max_be
            ));
        }
        if self.mac_max_be > 16 {
            problems.push(format!("macMaxBE {} is unreasonably large", self.mac_max_be));
        }
        for (name, v) in [
            ("slot", self.slot),
            ("cca_duration", self.cca_duration),
            ("turnaround", self.turnaround),
            ("ack_duration", self.ack_duration),
            ("ack_wait", self.ack_wait),
            ("data_symbols", self.data_symbols),
        ] {
            if v == 0 {
                problems.push(format!("{name} must be a positive number of symbols"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    /// Channel activity period of one transmission, `T_tx`.
    pub fn t_tx(&self) -> u32 {
        if self.acks_enabled {
            self.data_symbols + self.turnaround + self.ack_duration
        } else {
            self.data_symbols
        }
    }

    /// CCA attempts allowed per transmission (macMaxCSMABackoffs + 1).
    pub fn cca_attempts(&self) -> u32 {
        self.mac_max_csma_backoffs + 1
    }

    /// Transmissions allowed per packet (aMaxFrameRetries + 1). Without
    /// ACKs the sender cannot detect a failure, so it transmits once.
    pub fn max_transmissions(&self) -> u32 {
        if self.acks_enabled {
            self.max_frame_retries + 1
        } else {
            1
        }
    }

    /// Backoff exponent used before CCA attempt `stage` (0-based).
    pub fn backoff_exponent(&self, stage: u32) -> u32 {
        (self.mac_min_be + stage).min(self.mac_max_be)
    }

    /// Mean backoff before CCA attempt `stage`, in symbols:
    /// `slot * (2^BE - 1) / 2`.
    pub fn mean_backoff(&self, stage: u32) -> f64 {
        let window = (1u64 << self.backoff_exponent(stage)) - 1;
        self.slot as f64 * window as f64 / 2.0
    }

    /// Mean duration of one backoff stage including its CCA.
    pub fn mean_stage(&self, stage: u32) -> f64 {
        self.mean_backoff(stage) + self.cca_duration as f64
    }

    /// Lone-packet per-attempt time: mean first backoff, CCA, turnaround and
    /// the activity period.
    pub fn idle_hop_time(&self) -> f64 {
        self.mean_backoff(0) + (self.cca_duration + self.turnaround + self.t_tx()) as f64
    }
}
