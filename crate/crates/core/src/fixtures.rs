//! Hand-built scenarios for tests, the CLI `example` subcommand and the
//! acceptance suite.
//!
//! The two reference cases pit the proposed auctions against the VCG
//! baselines on a three-relay, one-destination cell engineered to given
//! rates, powers and interference costs:
//!
//! - [`example1`] (constant power): valuations 1 / 1.1 / 2, rates 1 / 5 / 5
//!   Mbps at P = 0.25 W, interference costs 1 / 0.5 / 3 with threshold 2.5.
//! - [`example2`] (constant rate, 3 Mbps): required powers 0.5 / 0.7 / 1.0 W,
//!   valuations 1 / 1.1 / 2.5, interference costs 3 / 1 / 1.

use crate::channel::{CellConfig, CostModel, Scenario};
use crate::mechanisms::{CoeffSpec, CostSpec, MechanismKind, MechanismSpec};
use crate::relaying::Scheme;

/// Default bandwidth for synthetic cells: 10 MHz.
pub const FIXTURE_BANDWIDTH_HZ: f64 = 10e6;

/// One-destination cell with unit noise, no uplink interference, a very
/// strong BS->relay link and directly prescribed per-watt slopes
/// `gamma_ij` and valuations.
pub fn synthetic_scenario(gammas: &[f64], alphas: &[f64], processing_coeff: f64) -> Scenario {
    synthetic_multi(gammas.iter().map(|&g| vec![g]).collect(), alphas, processing_coeff)
}

/// As [`synthetic_scenario`] but with `gamma[relay][dest]` matrices.
pub fn synthetic_multi(
    gammas: Vec<Vec<f64>>,
    alphas: &[f64],
    processing_coeff: f64,
) -> Scenario {
    let r = gammas.len();
    let d = gammas[0].len();
    let w = FIXTURE_BANDWIDTH_HZ;
    let config = CellConfig {
        num_relays: r,
        num_destinations: d,
        bandwidth_hz: w,
        // Unit total noise power.
        noise_psd_w_per_hz: 1.0 / w,
        bs_power_w: 4.0,
        uplink_power_w: 0.0,
        processing_coeff,
        rayleigh_fading: false,
        shadow_sigma_db: 0.0,
        ..CellConfig::default()
    };
    Scenario {
        config,
        bs_pos: [0.0, 0.0],
        relay_pos: vec![[1.0, 0.0]; r],
        dest_pos: vec![[2.0, 0.0]; d],
        uplink_pos: vec![[3.0, 0.0]; d],
        // BS->relay SINR of 1e6: never the binding link.
        g_bs_relay: vec![2.5e5; r],
        // Negligible direct BS->destination link.
        g_bs_dest: vec![1e-12; d],
        g_relay_dest: gammas,
        g_relay_bs: vec![1e-12; r],
        g_uplink_bs: vec![1e-12; d],
        g_uplink_dest: vec![1e-12; d],
        g_uplink_relay: vec![vec![1e-12; d]; r],
        battery: alphas.iter().map(|a| 1.0 / a).collect(),
        alpha: alphas.to_vec(),
    }
}

pub fn const_power_spec(fixed_power_w: f64, cost: CostSpec) -> MechanismSpec {
    MechanismSpec {
        kind: MechanismKind::ProposedConstPower,
        scheme: Scheme::Normal,
        fixed_power_w,
        target_rates_bps: vec![],
        c_t: 2.5,
        p_max_w: fixed_power_w,
        revenue_per_mbps: 2.0,
        cost,
    }
}

pub fn const_rate_spec(target_rates_bps: &[f64], cost: CostSpec) -> MechanismSpec {
    MechanismSpec {
        kind: MechanismKind::ProposedConstRate,
        scheme: Scheme::Normal,
        fixed_power_w: 0.25,
        target_rates_bps: target_rates_bps.to_vec(),
        c_t: 2.5,
        p_max_w: 10f64.powf(2.4) * 1e-3, // 24 dBm
        revenue_per_mbps: 2.0,
        cost,
    }
}

pub fn bs_util_spec(cost: CostSpec) -> MechanismSpec {
    MechanismSpec {
        kind: MechanismKind::ProposedBsUtilMax,
        scheme: Scheme::Normal,
        fixed_power_w: 0.25,
        target_rates_bps: vec![],
        c_t: 2.5,
        p_max_w: 0.25,
        revenue_per_mbps: 2.0,
        cost,
    }
}

/// All six mechanisms over `s` with reference-setup parameters: P = 0.25 W,
/// P_m = 24 dBm, C_T = 2.5, a = 0.25/Mbps, c_i = 0.5a, rate-delta cost,
/// 2 Mbps requested per destination.
pub fn all_mechanism_specs(s: &Scenario) -> Vec<MechanismSpec> {
    let d = s.num_destinations();
    MechanismKind::ALL
        .into_iter()
        .map(|kind| MechanismSpec {
            kind,
            scheme: Scheme::Normal,
            fixed_power_w: 0.25,
            target_rates_bps: vec![2e6; d],
            c_t: 2.5,
            p_max_w: 10f64.powf(2.4) * 1e-3,
            revenue_per_mbps: 0.25,
            cost: CostSpec {
                model: CostModel::RateDelta,
                coeff: CoeffSpec::Uniform(0.5 * 0.25 / 1e6),
            },
        })
        .collect()
}

/// A reference case plus the mechanism specs to replay it.
pub struct ExampleFixture {
    pub scenario: Scenario,
    pub proposed: MechanismSpec,
    pub vcg: MechanismSpec,
}

/// Constant-power reference case (three relays, one destination).
///
/// Per-watt slopes are chosen so a 0.25 W transmission yields 1, 5 and 5
/// Mbps under normal relaying, and linear interference coefficients so the
/// costs at 0.25 W are 1, 0.5 and 3 units.
pub fn example1() -> ExampleFixture {
    let p = 0.25;
    let w = FIXTURE_BANDWIDTH_HZ;
    let gamma_for_rate =
        |rate_bps: f64| (2f64.powf(2.0 * rate_bps / w) - 1.0) / p;
    let scenario = synthetic_scenario(
        &[gamma_for_rate(1e6), gamma_for_rate(5e6), gamma_for_rate(5e6)],
        &[1.0, 1.1, 2.0],
        0.0,
    );
    let cost = CostSpec {
        model: CostModel::Linear,
        coeff: CoeffSpec::PerRelay(vec![1.0 / p, 0.5 / p, 3.0 / p]),
    };
    let proposed = const_power_spec(p, cost);
    let vcg = MechanismSpec { kind: MechanismKind::VcgConstPower, ..proposed.clone() };
    ExampleFixture { scenario, proposed, vcg }
}

/// Constant-rate reference case (three relays, one destination, 3 Mbps).
///
/// Per-watt slopes are chosen so the requested rate needs 0.5, 0.7 and
/// 1.0 W, and linear coefficients so the interference costs at those
/// powers are 3, 1 and 1 units.
pub fn example2() -> ExampleFixture {
    let target = 3e6;
    let w = FIXTURE_BANDWIDTH_HZ;
    let required_sinr = 4f64.powf(target / w) - 1.0;
    let powers = [0.5, 0.7, 1.0];
    let costs = [3.0, 1.0, 1.0];
    let gammas: Vec<f64> = powers.iter().map(|p| required_sinr / p).collect();
    let coeff: Vec<f64> = powers.iter().zip(costs).map(|(p, c)| c / p).collect();
    let scenario = synthetic_scenario(&gammas, &[1.0, 1.1, 2.5], 0.0);
    let cost = CostSpec { model: CostModel::Linear, coeff: CoeffSpec::PerRelay(coeff) };
    let mut proposed = const_rate_spec(&[target], cost);
    proposed.p_max_w = 2.0;
    let vcg = MechanismSpec { kind: MechanismKind::VcgConstRate, ..proposed.clone() };
    ExampleFixture { scenario, proposed, vcg }
}
