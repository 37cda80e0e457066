//! Cell geometry, channel sampling, link budgets and interference costs.
//!
//! One [`Scenario`] is a single sampled hexagonal cell: node positions,
//! linear channel power gains (distance-dependent path loss, lognormal
//! shadowing, Rayleigh fading), relay battery states and the private
//! per-watt valuations derived from them. Sampling is a pure function of
//! `(seed, trial_index)` so trials can be replayed and shared across
//! mechanisms.
//!
//! Relays reuse uplink channels: destination `j`'s channel is also used by
//! uplink user `n_j`, which interferes at destination `j` and at any relay
//! receiving on that channel, while a transmitting relay interferes with
//! `n_j`'s uplink at the BS. That last effect is what the BS prices via
//! [`interference_cost`].

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nodes closer than this are treated as 1 m apart so gains stay finite.
const MIN_DISTANCE_M: f64 = 1.0;

/// Static cell parameters. Defaults follow the reference simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellConfig {
    /// Hexagon circumradius in meters.
    pub cell_radius_m: f64,
    pub path_loss_exponent: f64,
    /// Lognormal shadowing standard deviation in dB (0 disables shadowing).
    pub shadow_sigma_db: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_psd_w_per_hz: f64,
    /// Channel bandwidth W in Hz.
    pub bandwidth_hz: f64,
    /// BS transmit power P_s in watts.
    pub bs_power_w: f64,
    /// Uplink user transmit power P_u in watts.
    pub uplink_power_w: f64,
    pub num_destinations: usize,
    pub num_relays: usize,
    /// Processing-power coefficient k in W per (bit/s); P_c,i = k * rate
    /// received from the BS. 0 disables processing cost.
    pub processing_coeff: f64,
    /// Multiply gains by a unit-mean exponential factor (Rayleigh power
    /// fading). Disable for deterministic path-loss-only channels.
    pub rayleigh_fading: bool,
    /// Charge relay interference on the uplink for the full slot rather
    /// than only the relay's transmit mini-slot.
    pub interference_full_slot: bool,
    pub seed: u64,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            cell_radius_m: 300.0,
            path_loss_exponent: 3.3,
            shadow_sigma_db: 8.0,
            // -174 dBm/Hz
            noise_psd_w_per_hz: 10f64.powf(-17.4) * 1e-3,
            bandwidth_hz: 10e6,
            bs_power_w: 4.0,
            uplink_power_w: 0.25,
            num_destinations: 10,
            num_relays: 20,
            processing_coeff: 0.0,
            rayleigh_fading: true,
            interference_full_slot: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

impl CellConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError(msg.to_string()));
        if !(self.cell_radius_m > 0.0) {
            return fail("cell radius must be positive");
        }
        if !(self.bandwidth_hz > 0.0) {
            return fail("bandwidth must be positive");
        }
        if !(self.path_loss_exponent > 0.0) {
            return fail("path loss exponent must be positive");
        }
        if !(self.noise_psd_w_per_hz > 0.0) {
            return fail("noise PSD must be positive");
        }
        if self.shadow_sigma_db < 0.0 {
            return fail("shadowing sigma must be non-negative");
        }
        if self.bs_power_w < 0.0 || self.uplink_power_w < 0.0 || self.processing_coeff < 0.0 {
            return fail("powers must be non-negative");
        }
        if self.num_relays < self.num_destinations + 1 {
            return fail("need num_relays >= num_destinations + 1 for payment rules");
        }
        Ok(())
    }

    /// Thermal noise power over the channel bandwidth, in watts.
    pub fn noise_w(&self) -> f64 {
        self.noise_psd_w_per_hz * self.bandwidth_hz
    }
}

/// One sampled cell. Immutable after construction; safe to share across
/// parallel trial workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: CellConfig,
    /// BS sits at the hexagon centroid.
    pub bs_pos: [f64; 2],
    pub relay_pos: Vec<[f64; 2]>,
    pub dest_pos: Vec<[f64; 2]>,
    /// Uplink user n_j sharing destination j's channel.
    pub uplink_pos: Vec<[f64; 2]>,
    /// G_{s,i}: BS -> relay i.
    pub g_bs_relay: Vec<f64>,
    /// G_{s,j}: BS -> destination j.
    pub g_bs_dest: Vec<f64>,
    /// G_{i,j}: relay i -> destination j, indexed `[relay][dest]`.
    pub g_relay_dest: Vec<Vec<f64>>,
    /// G_{i,bs}: relay i -> BS (uplink interference path).
    pub g_relay_bs: Vec<f64>,
    /// G_{n_j,bs}: uplink user j -> BS.
    pub g_uplink_bs: Vec<f64>,
    /// G_{n_j,j}: uplink user j -> destination j.
    pub g_uplink_dest: Vec<f64>,
    /// G_{n_j,i}: uplink user j -> relay i, indexed `[relay][dest]`.
    pub g_uplink_relay: Vec<Vec<f64>>,
    /// Battery state b_i, uniform on {0.1, 0.2, ..., 1.0}.
    pub battery: Vec<f64>,
    /// True valuation alpha_i = 1 / b_i (cost per watt).
    pub alpha: Vec<f64>,
}

impl Scenario {
    pub fn num_relays(&self) -> usize {
        self.g_bs_relay.len()
    }

    pub fn num_destinations(&self) -> usize {
        self.g_bs_dest.len()
    }

    /// Processing power P_c,i = k * (W/2) log2(1 + P_s G_{s,i} / N).
    ///
    /// Uses the interference-free BS->relay rate so the value depends only
    /// on the relay, as the per-relay cost model requires.
    pub fn processing_power(&self, relay: usize) -> f64 {
        let k = self.config.processing_coeff;
        if k == 0.0 {
            return 0.0;
        }
        let snr = self.config.bs_power_w * self.g_bs_relay[relay] / self.config.noise_w();
        k * 0.5 * self.config.bandwidth_hz * (1.0 + snr).log2()
    }
}

/// Per-pair SINR context for relay `i` serving destination `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// SINR of the BS -> relay link at BS power P_s.
    pub sinr_si: f64,
    /// SINR of the BS -> destination link at BS power P_s.
    pub sinr_sj: f64,
    /// Per-watt SINR slope gamma_{i,j} = G_{i,j} / (N + I) at the destination.
    pub gamma_ij: f64,
    /// Per-watt SINR slope gamma_{s,j} = G_{s,j} / (N + I) at the destination.
    pub gamma_sj: f64,
    /// Noise plus co-channel uplink interference at the destination, watts.
    pub noise_and_interference_dest_w: f64,
    /// Noise plus co-channel uplink interference at the relay, watts.
    pub noise_and_interference_relay_w: f64,
    pub bandwidth_hz: f64,
}

/// Interference-cost model charged to the BS per assigned pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// C = c * P: linear in the relay transmit power.
    Linear,
    /// C = c * (uplink rate without relay - uplink rate with relay).
    RateDelta,
}

/// Mean (shadowing- and fading-free) path gain at `distance_m`.
pub fn mean_path_gain(path_loss_exponent: f64, distance_m: f64) -> f64 {
    distance_m.max(MIN_DISTANCE_M).powf(-path_loss_exponent)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn in_hexagon(p: [f64; 2], radius: f64) -> bool {
    let (x, y) = (p[0], p[1]);
    let s3 = 3f64.sqrt();
    y.abs() <= s3 / 2.0 * radius
        && (s3 * x + y).abs() <= s3 * radius
        && (s3 * x - y).abs() <= s3 * radius
}

fn sample_position(rng: &mut ChaCha12Rng, radius: f64) -> [f64; 2] {
    let s3 = 3f64.sqrt();
    loop {
        let p = [
            rng.gen_range(-radius..=radius),
            rng.gen_range(-s3 / 2.0 * radius..=s3 / 2.0 * radius),
        ];
        if in_hexagon(p, radius) {
            return p;
        }
    }
}

/// 10^(S/10) with S ~ Normal(0, sigma_db^2).
fn shadow_linear(rng: &mut ChaCha12Rng, sigma_db: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    10f64.powf(sigma_db * z / 10.0)
}

fn sample_gain(rng: &mut ChaCha12Rng, cfg: &CellConfig, a: [f64; 2], b: [f64; 2]) -> f64 {
    let path = mean_path_gain(cfg.path_loss_exponent, dist(a, b));
    let shadow = shadow_linear(rng, cfg.shadow_sigma_db);
    let fade: f64 = if cfg.rayleigh_fading { rng.sample(Exp1) } else { 1.0 };
    path * shadow * fade
}

/// Sample one cell. Deterministic function of `(config.seed, trial_index)`.
pub fn sample_scenario(config: &CellConfig, trial_index: u64) -> Result<Scenario, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(trial_index);

    let r = config.num_relays;
    let d = config.num_destinations;
    let radius = config.cell_radius_m;
    let bs_pos = [0.0, 0.0];
    let relay_pos: Vec<_> = (0..r).map(|_| sample_position(&mut rng, radius)).collect();
    let dest_pos: Vec<_> = (0..d).map(|_| sample_position(&mut rng, radius)).collect();
    let uplink_pos: Vec<_> = (0..d).map(|_| sample_position(&mut rng, radius)).collect();

    let g_bs_relay: Vec<_> =
        relay_pos.iter().map(|&p| sample_gain(&mut rng, config, bs_pos, p)).collect();
    let g_bs_dest: Vec<_> =
        dest_pos.iter().map(|&p| sample_gain(&mut rng, config, bs_pos, p)).collect();
    let g_relay_dest: Vec<Vec<_>> = relay_pos
        .iter()
        .map(|&rp| dest_pos.iter().map(|&dp| sample_gain(&mut rng, config, rp, dp)).collect())
        .collect();
    let g_relay_bs: Vec<_> =
        relay_pos.iter().map(|&p| sample_gain(&mut rng, config, p, bs_pos)).collect();
    let g_uplink_bs: Vec<_> =
        uplink_pos.iter().map(|&p| sample_gain(&mut rng, config, p, bs_pos)).collect();
    let g_uplink_dest: Vec<_> = uplink_pos
        .iter()
        .zip(&dest_pos)
        .map(|(&up, &dp)| sample_gain(&mut rng, config, up, dp))
        .collect();
    let g_uplink_relay: Vec<Vec<_>> = relay_pos
        .iter()
        .map(|&rp| uplink_pos.iter().map(|&up| sample_gain(&mut rng, config, up, rp)).collect())
        .collect();

    let battery: Vec<_> = (0..r).map(|_| rng.gen_range(1..=10) as f64 / 10.0).collect();
    let alpha: Vec<_> = battery.iter().map(|b| 1.0 / b).collect();

    Ok(Scenario {
        config: config.clone(),
        bs_pos,
        relay_pos,
        dest_pos,
        uplink_pos,
        g_bs_relay,
        g_bs_dest,
        g_relay_dest,
        g_relay_bs,
        g_uplink_bs,
        g_uplink_dest,
        g_uplink_relay,
        battery,
        alpha,
    })
}

/// SINR context for relay `i` serving destination `j` on `j`'s channel.
pub fn link_budget(s: &Scenario, relay: usize, dest: usize) -> LinkBudget {
    let cfg = &s.config;
    let noise = cfg.noise_w();
    let ni_dest = noise + cfg.uplink_power_w * s.g_uplink_dest[dest];
    let ni_relay = noise + cfg.uplink_power_w * s.g_uplink_relay[relay][dest];
    let gamma_ij = s.g_relay_dest[relay][dest] / ni_dest;
    let gamma_sj = s.g_bs_dest[dest] / ni_dest;
    LinkBudget {
        sinr_si: cfg.bs_power_w * s.g_bs_relay[relay] / ni_relay,
        sinr_sj: cfg.bs_power_w * gamma_sj,
        gamma_ij,
        gamma_sj,
        noise_and_interference_dest_w: ni_dest,
        noise_and_interference_relay_w: ni_relay,
        bandwidth_hz: cfg.bandwidth_hz,
    }
}

/// Cost to the BS of relay `i` transmitting at `power_w` on destination
/// `j`'s channel.
///
/// `coeff` is in cost per watt for [`CostModel::Linear`] and cost per
/// (bit/s) of lost uplink rate for [`CostModel::RateDelta`]. Zero at zero
/// power and nondecreasing in power under both models.
pub fn interference_cost(
    s: &Scenario,
    relay: usize,
    dest: usize,
    power_w: f64,
    model: CostModel,
    coeff: f64,
) -> f64 {
    match model {
        CostModel::Linear => coeff * power_w,
        CostModel::RateDelta => {
            let cfg = &s.config;
            let slot = if cfg.interference_full_slot { 1.0 } else { 0.5 };
            let noise = cfg.noise_w();
            let rx = cfg.uplink_power_w * s.g_uplink_bs[dest];
            let clean = (1.0 + rx / noise).log2();
            let jammed = (1.0 + rx / (noise + power_w * s.g_relay_bs[relay])).log2();
            (coeff * slot * cfg.bandwidth_hz * (clean - jammed)).max(0.0)
        }
    }
}
