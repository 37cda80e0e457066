//! The reverse auctions: three proposed mechanisms, two VCG baselines and
//! the full-information baseline.
//!
//! All six take an immutable [`Scenario`] plus a [`BidProfile`] of declared
//! per-watt valuations and produce an [`AuctionOutcome`]: an assignment of
//! relays to destinations, per-pair transmit powers, per-relay payments
//! (losers are paid exactly 0), achieved rates, interference costs and the
//! resulting BS utility.
//!
//! The three proposed auctions run a weight-optimal full-coverage matching
//! on a gated bipartite graph and pay winners critical-value prices
//! computed by graph deletion: for winner `i`, re-solve the matching with
//! `i` removed (and, for the minimum-weight auctions, with each
//! destination `k` removed in turn) and combine the weights. These
//! payments make truthful bidding dominant; the executable check lives in
//! [`crate::verification`].

use crate::channel::{interference_cost, link_budget, CostModel, Scenario};
use crate::matching::{
    matching_without, optimal_maximal_matching, Matching, MatchingError, Objective,
    WeightedBipartite,
};
use crate::power::{numeric_argmax_utility, power_for_rate, power_max_bs_utility, PowerError};
use crate::relaying::{rate, Scheme};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Declared per-watt valuations, one per relay. Equals the true `alpha`
/// vector under truthful play.
#[derive(Debug, Clone, PartialEq)]
pub struct BidProfile {
    pub declared_alpha: Vec<f64>,
}

impl BidProfile {
    pub fn truthful(s: &Scenario) -> Self {
        Self { declared_alpha: s.alpha.clone() }
    }

    /// Copy of `self` with relay `i`'s declaration scaled by `factor`.
    pub fn with_deviation(&self, relay: usize, factor: f64) -> Self {
        let mut declared_alpha = self.declared_alpha.clone();
        declared_alpha[relay] *= factor;
        Self { declared_alpha }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    ProposedConstPower,
    ProposedConstRate,
    ProposedBsUtilMax,
    VcgConstPower,
    VcgConstRate,
    FullInfoBaseline,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 6] = [
        MechanismKind::ProposedConstPower,
        MechanismKind::ProposedConstRate,
        MechanismKind::ProposedBsUtilMax,
        MechanismKind::VcgConstPower,
        MechanismKind::VcgConstRate,
        MechanismKind::FullInfoBaseline,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MechanismKind::ProposedConstPower => "proposed_const_power",
            MechanismKind::ProposedConstRate => "proposed_const_rate",
            MechanismKind::ProposedBsUtilMax => "proposed_bs_util_max",
            MechanismKind::VcgConstPower => "vcg_const_power",
            MechanismKind::VcgConstRate => "vcg_const_rate",
            MechanismKind::FullInfoBaseline => "full_info_baseline",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Interference-cost coefficient, either shared or per relay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    Uniform(f64),
    PerRelay(Vec<f64>),
}

/// Interference-cost model plus its coefficient(s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub model: CostModel,
    pub coeff: CoeffSpec,
}

impl CostSpec {
    pub fn linear_uniform(c: f64) -> Self {
        Self { model: CostModel::Linear, coeff: CoeffSpec::Uniform(c) }
    }

    pub fn coeff_for(&self, relay: usize) -> f64 {
        match &self.coeff {
            CoeffSpec::Uniform(c) => *c,
            CoeffSpec::PerRelay(v) => v[relay],
        }
    }
}

/// Everything a mechanism needs besides the scenario and the bids.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub scheme: Scheme,
    /// Fixed relay transmit power P for the constant-power mechanisms.
    pub fixed_power_w: f64,
    /// Requested rate per destination for the constant-rate mechanisms.
    pub target_rates_bps: Vec<f64>,
    /// Interference threshold C_T gating edges in the proposed auctions.
    pub c_t: f64,
    /// Maximum relay transmit power P_m.
    pub p_max_w: f64,
    /// BS revenue per Mbps delivered to a destination.
    pub revenue_per_mbps: f64,
    pub cost: CostSpec,
}

impl MechanismSpec {
    fn validate(&self, s: &Scenario, bids: &BidProfile) -> Result<(), MechanismError> {
        let r = s.num_relays();
        let d = s.num_destinations();
        if bids.declared_alpha.len() != r {
            return Err(MechanismError::InvalidInput(format!(
                "{} bids for {r} relays",
                bids.declared_alpha.len()
            )));
        }
        if bids.declared_alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(MechanismError::InvalidInput("bids must be non-negative".into()));
        }
        if !(self.c_t > 0.0) || !(self.p_max_w > 0.0) {
            return Err(MechanismError::InvalidInput("c_t and p_max must be positive".into()));
        }
        if r < d + 1 {
            // Payments need at least one losing relay to price against.
            return Err(MechanismError::InsufficientCompetition { relay: usize::MAX });
        }
        let needs_targets = matches!(
            self.kind,
            MechanismKind::ProposedConstRate | MechanismKind::VcgConstRate
        );
        if needs_targets && self.target_rates_bps.len() != d {
            return Err(MechanismError::InvalidInput(format!(
                "{} rate targets for {d} destinations",
                self.target_rates_bps.len()
            )));
        }
        Ok(())
    }

    /// Revenue per bit/s, as the power solvers expect.
    fn revenue_per_bps(&self) -> f64 {
        self.revenue_per_mbps / 1e6
    }
}

/// Result of one auction run.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    /// Relay serving each destination.
    pub assignment: Vec<Option<usize>>,
    /// Transmit power of the relay serving each destination, watts.
    pub power_w: Vec<f64>,
    /// Payment per relay; exactly 0 for losers.
    pub payment: Vec<f64>,
    /// Rate achieved at each destination, bit/s.
    pub achieved_rate_bps: Vec<f64>,
    /// Interference cost charged for each destination's pair.
    pub interference_cost: Vec<f64>,
    /// Sum over pairs of `a * rate[Mbps] - payment - interference cost`,
    /// accumulated in ascending destination order.
    pub bs_utility: f64,
}

impl AuctionOutcome {
    /// Destination served by `relay`, if it won.
    pub fn destination_of(&self, relay: usize) -> Option<usize> {
        self.assignment.iter().position(|a| *a == Some(relay))
    }

    pub fn total_payment(&self) -> f64 {
        self.payment.iter().sum()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MechanismError {
    /// Not enough losing relays to price some winner (or R <= D upfront,
    /// reported with `relay == usize::MAX`).
    #[error("no matching excludes relay {relay}; payment undefined")]
    InsufficientCompetition { relay: usize },
    #[error("destinations {destinations:?} have no feasible relay")]
    Uncoverable { destinations: Vec<usize> },
    #[error("matching failed: {0}")]
    Matching(MatchingError),
    #[error("{0}")]
    InvalidInput(String),
}

impl From<MatchingError> for MechanismError {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::Uncoverable { destinations } => {
                MechanismError::Uncoverable { destinations }
            }
            other => MechanismError::Matching(other),
        }
    }
}

/// Run the auction selected by `spec.kind`.
pub fn run_auction(
    s: &Scenario,
    bids: &BidProfile,
    spec: &MechanismSpec,
) -> Result<AuctionOutcome, MechanismError> {
    match spec.kind {
        MechanismKind::ProposedConstPower => proposed_const_power(s, bids, spec),
        MechanismKind::ProposedConstRate => proposed_const_rate(s, bids, spec),
        MechanismKind::ProposedBsUtilMax => proposed_bs_util_max(s, bids, spec),
        MechanismKind::VcgConstPower => vcg_const_power(s, bids, spec),
        MechanismKind::VcgConstRate => vcg_const_rate(s, bids, spec),
        MechanismKind::FullInfoBaseline => full_info_baseline(s, spec),
    }
}

/// Utility of `relay` under `outcome` against its true valuation: payment
/// minus true energy cost if it won, otherwise its (zero) payment.
pub fn relay_utility(
    s: &Scenario,
    outcome: &AuctionOutcome,
    relay: usize,
    true_alpha: f64,
) -> f64 {
    match outcome.destination_of(relay) {
        Some(dest) => {
            outcome.payment[relay]
                - true_alpha * (outcome.power_w[dest] + s.processing_power(relay))
        }
        None => outcome.payment[relay],
    }
}

/// Per-pair data the auctions carry between gating, matching and payment.
#[derive(Debug, Clone, Copy)]
struct Edge {
    weight: f64,
    power_w: f64,
    rate_bps: f64,
    icost: f64,
}

type EdgeTable = Vec<Vec<Option<Edge>>>;

fn build_graph(
    s: &Scenario,
    edges: &EdgeTable,
    objective: Objective,
) -> Result<WeightedBipartite, MechanismError> {
    WeightedBipartite::from_fn(s.num_relays(), s.num_destinations(), objective, |i, j| {
        edges[i][j].map(|e| e.weight)
    })
    .map_err(MechanismError::from)
}

/// Shared outcome assembly: winners from `matching`, payments provided.
fn assemble(
    s: &Scenario,
    spec: &MechanismSpec,
    edges: &EdgeTable,
    matching: &Matching,
    payment: Vec<f64>,
) -> AuctionOutcome {
    let d = s.num_destinations();
    let mut assignment = vec![None; d];
    let mut power_w = vec![0.0; d];
    let mut achieved_rate_bps = vec![0.0; d];
    let mut icost = vec![0.0; d];
    for &(i, j) in &matching.pairs {
        let e = edges[i][j].expect("matched edge exists");
        assignment[j] = Some(i);
        power_w[j] = e.power_w;
        achieved_rate_bps[j] = e.rate_bps;
        icost[j] = e.icost;
    }
    let mut bs_utility = 0.0;
    for j in 0..d {
        if let Some(i) = assignment[j] {
            bs_utility += spec.revenue_per_mbps * achieved_rate_bps[j] / 1e6
                - payment[i]
                - icost[j];
        }
    }
    AuctionOutcome { assignment, power_w, payment, achieved_rate_bps, interference_cost: icost, bs_utility }
}

/// Critical-value payment for the minimum-weight proposed auctions.
///
/// For winner `i`: let `w_wo_i` be the optimal weight with `i` deleted.
/// For each destination `k` reachable by `i`, the cheapest full matching
/// containing edge `(i,k)` is the optimum of the graph without `i` and `k`
/// plus the edge weight; it competes only if it does not exceed `w_wo_i`.
/// The payment is the maximum over `k` of
/// `w_wo_i * G_k + bid_cost_i - G_k * w_min_ik`, where `G_k` is the rate
/// the edge weight was normalized by.
fn min_weight_payment(
    g: &WeightedBipartite,
    edges: &EdgeTable,
    winner: usize,
    bid_cost: f64,
    payment_rate: impl Fn(usize, &Edge) -> f64,
) -> Result<f64, MechanismError> {
    let w_wo_i = match matching_without(g, &[winner], &[]) {
        Ok(m) => m.weight,
        Err(MatchingError::Uncoverable { .. }) => {
            return Err(MechanismError::InsufficientCompetition { relay: winner })
        }
        Err(e) => return Err(e.into()),
    };

    let mut best: Option<f64> = None;
    for k in 0..g.num_destinations() {
        let edge = match edges[winner][k] {
            Some(e) => e,
            None => continue,
        };
        let w_rest = match matching_without(g, &[winner], &[k]) {
            Ok(m) => m.weight,
            Err(MatchingError::Uncoverable { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let w_with_ik = w_rest + edge.weight;
        if w_with_ik <= w_wo_i {
            let gamma_k = payment_rate(k, &edge);
            let p_ik = w_wo_i * gamma_k + bid_cost - gamma_k * w_with_ik;
            best = Some(best.map_or(p_ik, |b: f64| b.max(p_ik)));
        }
    }
    // The winning matching itself always competes, so a winner always has
    // at least one admissible destination.
    Ok(best.expect("winner's own matching is admissible"))
}

/// Constant-power proposed auction: edge weight
/// `bid_i (P + P_c,i) / rate_ij`, gated on `C_ij(P) <= C_T`; minimum-weight
/// matching; critical-value payments.
pub fn proposed_const_power(
    s: &Scenario,
    bids: &BidProfile,
    spec: &MechanismSpec,
) -> Result<AuctionOutcome, MechanismError> {
    spec.validate(s, bids)?;
    let p = spec.fixed_power_w;
    let edges = edge_table(s, |i, j| {
        let lb = link_budget(s, i, j);
        let ro = rate(spec.scheme, &lb, p);
        if !ro.eligible || ro.rate_bps <= 0.0 {
            return None;
        }
        let icost = interference_cost(s, i, j, p, spec.cost.model, spec.cost.coeff_for(i));
        if icost > spec.c_t {
            return None;
        }
        let bid_cost = bids.declared_alpha[i] * (p + s.processing_power(i));
        Some(Edge { weight: bid_cost / ro.rate_bps, power_w: p, rate_bps: ro.rate_bps, icost })
    });

    let g = build_graph(s, &edges, Objective::Minimize)?;
    let m = optimal_maximal_matching(&g).map_err(MechanismError::from)?;

    let mut payment = vec![0.0; s.num_relays()];
    for &(i, _) in &m.pairs {
        let bid_cost = bids.declared_alpha[i] * (p + s.processing_power(i));
        payment[i] = min_weight_payment(&g, &edges, i, bid_cost, |_, e| e.rate_bps)?;
    }
    Ok(assemble(s, spec, &edges, &m, payment))
}

/// Constant-rate proposed auction: power solved per pair to hit the
/// destination's requested rate, edge weight `bid_i (P_ij + P_c,i) / G_j`,
/// gated on feasibility, the power budget and `C_T`.
pub fn proposed_const_rate(
    s: &Scenario,
    bids: &BidProfile,
    spec: &MechanismSpec,
) -> Result<AuctionOutcome, MechanismError> {
    spec.validate(s, bids)?;
    let edges = edge_table(s, |i, j| {
        let lb = link_budget(s, i, j);
        let pr = power_for_rate(spec.scheme, &lb, spec.target_rates_bps[j], spec.p_max_w).ok()?;
        if !pr.feasible {
            return None;
        }
        let icost =
            interference_cost(s, i, j, pr.power_w, spec.cost.model, spec.cost.coeff_for(i));
        if icost > spec.c_t {
            return None;
        }
        let bid_cost = bids.declared_alpha[i] * (pr.power_w + s.processing_power(i));
        Some(Edge {
            weight: bid_cost / spec.target_rates_bps[j],
            power_w: pr.power_w,
            rate_bps: pr.achieved_rate_bps,
            icost,
        })
    });

    let g = build_graph(s, &edges, Objective::Minimize)?;
    let m = optimal_maximal_matching(&g).map_err(MechanismError::from)?;

    let mut payment = vec![0.0; s.num_relays()];
    for &(i, j) in &m.pairs {
        let e = edges[i][j].expect("matched edge");
        let bid_cost = bids.declared_alpha[i] * (e.power_w + s.processing_power(i));
        // The normalizer is the destination's requested rate, and the bid
        // cost term follows the power for the destination under evaluation.
        payment[i] = min_weight_payment(&g, &edges, i, bid_cost, |k, ek| {
            debug_assert!(ek.power_w >= 0.0);
            let _ = ek;
            spec.target_rates_bps[k]
        })?;
    }
    Ok(assemble(s, spec, &edges, &m, payment))
}

/// BS-utility-maximizing proposed auction: per-pair power from the
/// utility maximizer, edge weight `U*_ij`, maximum-weight matching,
/// payment `w_max - w_max_without_i + bid_i (P*_ij + P_c,i)`.
pub fn proposed_bs_util_max(
    s: &Scenario,
    bids: &BidProfile,
    spec: &MechanismSpec,
) -> Result<AuctionOutcome, MechanismError> {
    spec.validate(s, bids)?;
    let a_bps = spec.revenue_per_bps();
    let edges = edge_table(s, |i, j| {
        let lb = link_budget(s, i, j);
        let coeff = spec.cost.coeff_for(i);
        let pc = s.processing_power(i);
        let solved = match spec.cost.model {
            CostModel::Linear => {
                power_max_bs_utility(spec.scheme, &lb, a_bps, bids.declared_alpha[i], coeff, spec.p_max_w)
            }
            CostModel::RateDelta => numeric_argmax_utility(
                spec.scheme,
                &lb,
                a_bps,
                bids.declared_alpha[i],
                pc,
                |pw| interference_cost(s, i, j, pw, CostModel::RateDelta, coeff),
                spec.p_max_w,
            ),
        };
        let pr = match solved {
            Ok(pr) => pr,
            Err(PowerError::RelayIneligible) => return None,
            Err(_) => return None,
        };
        let icost = interference_cost(s, i, j, pr.power_w, spec.cost.model, coeff);
        if icost > spec.c_t {
            return None;
        }
        let utility = a_bps * pr.achieved_rate_bps
            - bids.declared_alpha[i] * (pr.power_w + pc)
            - icost;
        Some(Edge { weight: utility, power_w: pr.power_w, rate_bps: pr.achieved_rate_bps, icost })
    });

    let g = build_graph(s, &edges, Objective::Maximize)?;
    let m = optimal_maximal_matching(&g).map_err(MechanismError::from)?;

    let mut payment = vec![0.0; s.num_relays()];
    for &(i, j) in &m.pairs {
        let w_wo_i = match matching_without(&g, &[i], &[]) {
            Ok(mm) => mm.weight,
            Err(MatchingError::Uncoverable { .. }) => {
                return Err(MechanismError::InsufficientCompetition { relay: i })
            }
            Err(e) => return Err(e.into()),
        };
        let e = edges[i][j].expect("matched edge");
        payment[i] =
            m.weight - w_wo_i + bids.declared_alpha[i] * (e.power_w + s.processing_power(i));
    }
    Ok(assemble(s, spec, &edges, &m, payment))
}

/// VCG baseline for constant power: the D cheapest declared costs win,
/// all winners are paid the (D+1)-st smallest declared cost, and winners
/// are mapped to destinations in rank order (any mapping minimizes the
/// declared social cost; this one is fixed for determinism).
pub fn vcg_const_power(
    s: &Scenario,
    bids: &BidProfile,
    spec: &MechanismSpec,
) -> Result<AuctionOutcome, MechanismError> {
    spec.validate(s, bids)?;
    let p = spec.fixed_power_w;
    let d = s.num_destinations();

    let mut order: Vec<(f64, usize)> = (0..s.num_relays())
        .map(|i| (bids.declared_alpha[i] * (p + s.processing_power(i)), i))
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).expect("finite declared costs"));

    let price = order[d].0;
    let mut payment = vec![0.0; s.num_relays()];
    let mut edges = edge_table(s, |_, _| None);
    let mut pairs = Vec::with_capacity(d);
    for (rank, &(_, i)) in order.iter().take(d).enumerate() {
        let lb = link_budget(s, i, rank);
        let ro = rate(spec.scheme, &lb, p);
        let icost = interference_cost(s, i, rank, p, spec.cost.model, spec.cost.coeff_for(i));
        edges[i][rank] = Some(Edge { weight: 0.0, power_w: p, rate_bps: ro.rate_bps, icost });
        pairs.push((i, rank));
        payment[i] = price;
    }
    let m = Matching { pairs, weight: 0.0 };
    Ok(assemble(s, spec, &edges, &m, payment))
}

/// VCG baseline for constant rate: minimum declared total cost assignment
/// with per-pair powers hitting the targets (power budget enforced, no
/// interference gate), and externality payments.
pub fn vcg_const_rate(
    s: &Scenario,
    bids: &BidProfile,
    spec: &MechanismSpec,
) -> Result<AuctionOutcome, MechanismError> {
    spec.validate(s, bids)?;
    let edges = edge_table(s, |i, j| {
        let lb = link_budget(s, i, j);
        let pr = power_for_rate(spec.scheme, &lb, spec.target_rates_bps[j], spec.p_max_w).ok()?;
        if !pr.feasible {
            return None;
        }
        let icost =
            interference_cost(s, i, j, pr.power_w, spec.cost.model, spec.cost.coeff_for(i));
        let bid_cost = bids.declared_alpha[i] * (pr.power_w + s.processing_power(i));
        Some(Edge { weight: bid_cost, power_w: pr.power_w, rate_bps: pr.achieved_rate_bps, icost })
    });

    let g = build_graph(s, &edges, Objective::Minimize)?;
    let m = optimal_maximal_matching(&g).map_err(MechanismError::from)?;

    let mut payment = vec![0.0; s.num_relays()];
    for &(i, j) in &m.pairs {
        let w_wo_i = match matching_without(&g, &[i], &[]) {
            Ok(mm) => mm.weight,
            Err(MatchingError::Uncoverable { .. }) => {
                return Err(MechanismError::InsufficientCompetition { relay: i })
            }
            Err(e) => return Err(e.into()),
        };
        let own_cost = edges[i][j].expect("matched edge").weight;
        // Externality price: others' optimal cost without i, minus
        // others' cost in the chosen assignment.
        payment[i] = w_wo_i - (m.weight - own_cost);
    }
    Ok(assemble(s, spec, &edges, &m, payment))
}

/// Hypothetical full-information benchmark: same allocation and powers as
/// the BS-utility-maximizing auction under true valuations, but each
/// winner is paid exactly its incurred cost.
pub fn full_info_baseline(
    s: &Scenario,
    spec: &MechanismSpec,
) -> Result<AuctionOutcome, MechanismError> {
    let truthful = BidProfile::truthful(s);
    let mut out = proposed_bs_util_max(s, &truthful, spec)?;
    let mut payment = vec![0.0; s.num_relays()];
    for (j, assigned) in out.assignment.iter().enumerate() {
        if let Some(i) = *assigned {
            payment[i] = s.alpha[i] * (out.power_w[j] + s.processing_power(i));
        }
    }
    out.bs_utility = 0.0;
    for (j, assigned) in out.assignment.iter().enumerate() {
        if let Some(i) = *assigned {
            out.bs_utility += spec.revenue_per_mbps * out.achieved_rate_bps[j] / 1e6
                - payment[i]
                - out.interference_cost[j];
        }
    }
    out.payment = payment;
    Ok(out)
}

fn edge_table(s: &Scenario, mut f: impl FnMut(usize, usize) -> Option<Edge>) -> EdgeTable {
    (0..s.num_relays())
        .map(|i| (0..s.num_destinations()).map(|j| f(i, j)).collect())
        .collect()
}
