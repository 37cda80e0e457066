//! Truthful reverse auctions for relay selection in underlay D2D cellular networks.
//!
//! A base station (BS) buys relaying service from cellular users: each
//! destination node must be assigned one relay, relays bid their private
//! cost per watt, and the BS pays winners so that truthful bidding is a
//! dominant strategy. The crate provides:
//!
//! - [`channel`]: cell geometry and channel sampling (path loss, lognormal
//!   shadowing, Rayleigh fading), SINR link budgets, and the two
//!   interference-cost models charged to the BS.
//! - [`relaying`]: capacity formulas for the four relaying schemes
//!   (normal, amplify-and-forward, decode-and-forward, selection).
//! - [`power`]: closed-form transmit-power solvers for the constant-rate
//!   and BS-utility-maximization scenarios, plus a grid/golden-section
//!   numeric solver for general interference-cost functions.
//! - [`matching`]: min/max-weight full-coverage bipartite matching with
//!   excluded edges, deterministic tie-breaking, and a brute-force oracle.
//! - [`mechanisms`]: the three proposed auctions, the two VCG baselines,
//!   and the full-information baseline, with exact payment rules.
//! - [`verification`]: executable incentive-compatibility and individual-
//!   rationality checks over bid-deviation grids.
//! - [`experiment`]: seeded Monte-Carlo experiment runner with CSV and
//!   plot-script output.

pub mod channel;
pub mod experiment;
pub mod fixtures;
pub mod matching;
pub mod mechanisms;
pub mod power;
pub mod relaying;
pub mod verification;
