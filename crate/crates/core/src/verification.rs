//! Brute-force incentive checks.
//!
//! Instead of trusting the truthfulness and individual-rationality proofs,
//! this module replays each auction while one relay at a time misreports
//! its valuation over a multiplier grid and compares the deviating relay's
//! utility (measured against its *true* valuation) with its truthful
//! utility. A [`DeviationReport`] is emitted only when lying strictly
//! helps beyond a tolerance, so for a truthful mechanism the expected
//! output is an empty list.
//!
//! [`first_price_control`] is a deliberately broken pay-your-bid variant
//! used as a negative control: the checker must flag it.

use crate::channel::Scenario;
use crate::mechanisms::{
    relay_utility, run_auction, AuctionOutcome, BidProfile, MechanismError, MechanismSpec,
};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// One detected profitable misreport.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    /// Mechanism label (`MechanismKind::name` or a control's name).
    pub mechanism: String,
    pub relay: usize,
    pub true_alpha: f64,
    pub deviation_alpha: f64,
    pub truthful_utility: f64,
    pub deviating_utility: f64,
    /// `deviating_utility - truthful_utility`; positive beyond tolerance.
    pub violation_margin: f64,
}

/// Outcome of a deviation sweep over one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthfulnessOutcome {
    pub reports: Vec<DeviationReport>,
    /// (relay, multiplier) pairs actually compared.
    pub evaluated: usize,
    /// Deviating runs skipped because the mechanism returned an error.
    pub skipped: usize,
}

impl TruthfulnessOutcome {
    pub fn passed(&self) -> bool {
        self.reports.is_empty()
    }
}

/// The fixed multipliers of the default deviation grid.
pub const FIXED_MULTIPLIERS: [f64; 8] = [0.25, 0.5, 0.8, 0.95, 1.05, 1.25, 2.0, 4.0];

/// Default grid: the fixed multipliers plus 20 seeded uniform draws from
/// `[0.1, 5]`.
pub fn default_deviation_grid(seed: u64) -> Vec<f64> {
    let mut grid = FIXED_MULTIPLIERS.to_vec();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    grid.extend((0..20).map(|_| rng.gen_range(0.1..5.0)));
    grid
}

/// Sweep every relay over every multiplier under `spec`, reporting strict
/// utility improvements beyond `tol`.
///
/// An error from the truthful run propagates (the caller counts the whole
/// scenario as skipped); errors from deviating runs are counted in
/// `skipped`.
pub fn check_truthfulness(
    spec: &MechanismSpec,
    s: &Scenario,
    grid: &[f64],
    tol: f64,
) -> Result<TruthfulnessOutcome, MechanismError> {
    check_truthfulness_of(spec.kind.name(), |bids| run_auction(s, bids, spec), s, grid, tol)
}

/// Grid sweep for any auction function (used for negative controls).
pub fn check_truthfulness_of(
    label: &str,
    run: impl Fn(&BidProfile) -> Result<AuctionOutcome, MechanismError>,
    s: &Scenario,
    grid: &[f64],
    tol: f64,
) -> Result<TruthfulnessOutcome, MechanismError> {
    let truthful_bids = BidProfile::truthful(s);
    let truthful = run(&truthful_bids)?;
    let mut out = TruthfulnessOutcome { reports: Vec::new(), evaluated: 0, skipped: 0 };

    for relay in 0..s.num_relays() {
        let truthful_utility = relay_utility(s, &truthful, relay, s.alpha[relay]);
        for &mult in grid {
            let deviated = truthful_bids.with_deviation(relay, mult);
            let outcome = match run(&deviated) {
                Ok(o) => o,
                Err(_) => {
                    out.skipped += 1;
                    continue;
                }
            };
            out.evaluated += 1;
            let deviating_utility = relay_utility(s, &outcome, relay, s.alpha[relay]);
            if deviating_utility > truthful_utility + tol {
                out.reports.push(DeviationReport {
                    mechanism: label.to_string(),
                    relay,
                    true_alpha: s.alpha[relay],
                    deviation_alpha: deviated.declared_alpha[relay],
                    truthful_utility,
                    deviating_utility,
                    violation_margin: deviating_utility - truthful_utility,
                });
            }
        }
    }
    Ok(out)
}

/// A relay whose truthful utility came out negative (winner) or nonzero
/// (loser).
#[derive(Debug, Clone, PartialEq)]
pub struct IrViolation {
    pub relay: usize,
    pub utility: f64,
    pub is_winner: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrOutcome {
    pub witnesses: Vec<IrViolation>,
}

impl IrOutcome {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }
}

/// Under truthful bids: every winner's utility must be `>= -tol` and every
/// loser's exactly zero.
pub fn check_individual_rationality(
    spec: &MechanismSpec,
    s: &Scenario,
    tol: f64,
) -> Result<IrOutcome, MechanismError> {
    let outcome = run_auction(s, &BidProfile::truthful(s), spec)?;
    let mut witnesses = Vec::new();
    for relay in 0..s.num_relays() {
        let utility = relay_utility(s, &outcome, relay, s.alpha[relay]);
        let is_winner = outcome.destination_of(relay).is_some();
        let violated = if is_winner { utility < -tol } else { utility != 0.0 };
        if violated {
            witnesses.push(IrViolation { relay, utility, is_winner });
        }
    }
    Ok(IrOutcome { witnesses })
}

/// Negative control: the constant-power allocation of the proposed
/// auction, but each winner is paid its own declared cost. Overbidding
/// strictly profits whenever the winner keeps winning, so the
/// truthfulness checker must reject this mechanism.
pub fn first_price_control(
    s: &Scenario,
    bids: &BidProfile,
    spec: &MechanismSpec,
) -> Result<AuctionOutcome, MechanismError> {
    let mut out = crate::mechanisms::proposed_const_power(s, bids, spec)?;
    let mut bs_utility = 0.0;
    for (j, assigned) in out.assignment.iter().enumerate() {
        if let Some(i) = *assigned {
            out.payment[i] =
                bids.declared_alpha[i] * (out.power_w[j] + s.processing_power(i));
            bs_utility += spec.revenue_per_mbps * out.achieved_rate_bps[j] / 1e6
                - out.payment[i]
                - out.interference_cost[j];
        }
    }
    out.bs_utility = bs_utility;
    Ok(out)
}

/// Name used in [`DeviationReport::mechanism`] for the negative control.
pub const FIRST_PRICE_CONTROL: &str = "first_price_control";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_scenario, CellConfig};
    use crate::fixtures;
    use crate::mechanisms::MechanismKind;

    const TOL: f64 = 1e-9;

    fn scenario(seed: u64, trial: u64) -> Scenario {
        let cfg = CellConfig { num_relays: 5, num_destinations: 3, seed, ..CellConfig::default() };
        sample_scenario(&cfg, trial).unwrap()
    }

    #[test]
    fn all_mechanisms_survive_a_deviation_sweep() {
        let grid = default_deviation_grid(99);
        let mut checked = 0;
        for seed in 0..8 {
            let s = scenario(seed, 0);
            for spec in fixtures::all_mechanism_specs(&s) {
                if spec.kind == MechanismKind::FullInfoBaseline {
                    continue;
                }
                match check_truthfulness(&spec, &s, &grid, TOL) {
                    Ok(out) => {
                        assert!(
                            out.passed(),
                            "{} violated on seed {seed}: {:?}",
                            spec.kind.name(),
                            out.reports
                        );
                        checked += 1;
                    }
                    Err(_) => continue,
                }
            }
        }
        assert!(checked >= 20, "too few scenarios survived: {checked}");
    }

    #[test]
    fn first_price_control_is_flagged() {
        let grid = default_deviation_grid(99);
        let mut total_reports = 0;
        for seed in 0..10 {
            let s = scenario(seed, 1);
            let spec = &fixtures::all_mechanism_specs(&s)[0];
            if let Ok(out) = check_truthfulness_of(
                FIRST_PRICE_CONTROL,
                |bids| first_price_control(&s, bids, spec),
                &s,
                &grid,
                TOL,
            ) {
                total_reports += out.reports.len();
                for r in &out.reports {
                    assert!(r.violation_margin > TOL);
                    assert_eq!(r.mechanism, FIRST_PRICE_CONTROL);
                }
            }
        }
        assert!(total_reports > 0, "negative control was not detected");
    }

    #[test]
    fn unit_multiplier_grid_is_trivially_truthful() {
        let s = scenario(3, 0);
        for spec in fixtures::all_mechanism_specs(&s) {
            if let Ok(out) = check_truthfulness(&spec, &s, &[1.0], TOL) {
                assert!(out.passed());
                assert_eq!(out.reports.len(), 0);
            }
        }
    }

    #[test]
    fn individual_rationality_holds_with_exact_zero_losers() {
        for seed in 0..10 {
            let s = scenario(seed, 2);
            for spec in fixtures::all_mechanism_specs(&s) {
                let out = match check_individual_rationality(&spec, &s, TOL) {
                    Ok(o) => o,
                    Err(_) => continue,
                };
                assert!(out.passed(), "{}: {:?}", spec.kind.name(), out.witnesses);
            }
        }
    }

    #[test]
    fn full_info_winners_have_exactly_zero_utility() {
        for seed in 0..10 {
            let s = scenario(seed, 3);
            let spec = fixtures::all_mechanism_specs(&s)
                .into_iter()
                .find(|m| m.kind == MechanismKind::FullInfoBaseline)
                .unwrap();
            let outcome = match run_auction(&s, &BidProfile::truthful(&s), &spec) {
                Ok(o) => o,
                Err(_) => continue,
            };
            for relay in 0..s.num_relays() {
                let u = relay_utility(&s, &outcome, relay, s.alpha[relay]);
                if outcome.destination_of(relay).is_some() {
                    assert!(u.abs() <= 1e-12, "winner utility {u}");
                } else {
                    assert_eq!(u, 0.0);
                }
            }
        }
    }

    #[test]
    fn sweep_results_are_reproducible() {
        let s = scenario(5, 4);
        let grid = default_deviation_grid(7);
        let spec = &fixtures::all_mechanism_specs(&s)[0];
        let a = check_truthfulness(spec, &s, &grid, TOL).unwrap();
        let b = check_truthfulness(spec, &s, &grid, TOL).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.evaluated + a.skipped, s.num_relays() * grid.len());
    }
}
