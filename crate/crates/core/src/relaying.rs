//! Data-rate capacity of the four relaying schemes.
//!
//! Every scheme splits a time slot into two mini-slots: the BS transmits
//! in the first, the relay in the second, hence the W/2 factor in all
//! capacities. Rates are pure functions of a [`LinkBudget`] and the relay
//! transmit power.

use crate::channel::LinkBudget;
use serde::{Deserialize, Serialize};

/// Relaying scheme employed by the BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum Scheme {
    /// Relay forwards; the destination ignores the first mini-slot.
    Normal,
    /// Relay amplifies the received signal, noise included.
    AmplifyForward,
    /// Relay decodes and re-encodes; rate capped by the BS->relay link.
    DecodeForward,
    /// Decode-and-forward gated on the BS->relay SINR: below the threshold
    /// `zeta` the BS retransmits itself and the relay must not be assigned.
    SelectionRelaying { zeta: f64 },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Normal => "normal",
            Scheme::AmplifyForward => "amplify_forward",
            Scheme::DecodeForward => "decode_forward",
            Scheme::SelectionRelaying { .. } => "selection",
        }
    }
}

/// Achieved rate plus whether the relay may be assigned at all.
///
/// `eligible` is false only for selection relaying below its SINR
/// threshold; the reported rate is then the direct-retransmission value,
/// which the BS obtains without the relay transmitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOutcome {
    pub rate_bps: f64,
    pub eligible: bool,
}

fn half_slot_capacity(bandwidth_hz: f64, sinr: f64) -> f64 {
    0.5 * bandwidth_hz * (1.0 + sinr).log2()
}

/// Rate at destination `j` when relay `i` transmits at `power_w`.
pub fn rate(scheme: Scheme, lb: &LinkBudget, power_w: f64) -> RateOutcome {
    let w = lb.bandwidth_hz;
    let sinr_ij = power_w * lb.gamma_ij;
    match scheme {
        Scheme::Normal => RateOutcome {
            rate_bps: half_slot_capacity(w, sinr_ij),
            eligible: true,
        },
        Scheme::AmplifyForward => {
            let relayed = lb.sinr_si * sinr_ij / (1.0 + lb.sinr_si + sinr_ij);
            RateOutcome {
                rate_bps: half_slot_capacity(w, lb.sinr_sj + relayed),
                eligible: true,
            }
        }
        Scheme::DecodeForward => {
            let decode = half_slot_capacity(w, lb.sinr_si);
            let combine = half_slot_capacity(w, lb.sinr_sj + sinr_ij);
            RateOutcome { rate_bps: decode.min(combine), eligible: true }
        }
        Scheme::SelectionRelaying { zeta } => {
            if lb.sinr_si < zeta {
                RateOutcome {
                    rate_bps: half_slot_capacity(w, 2.0 * lb.sinr_sj),
                    eligible: false,
                }
            } else {
                RateOutcome {
                    rate_bps: half_slot_capacity(w, lb.sinr_sj + sinr_ij),
                    eligible: true,
                }
            }
        }
    }
}
