//! Relay transmit-power solvers.
//!
//! Two production entry points plus one numeric solver:
//!
//! - [`power_for_rate`]: minimal power achieving a requested data rate
//!   (constant-data-rate auctions), closed form per scheme.
//! - [`power_max_bs_utility`]: power maximizing the BS's per-pair utility
//!   `a*rate - alpha*(p + P_c) - C(p)` under the linear interference-cost
//!   model, closed form per scheme.
//! - [`numeric_argmax_utility`]: grid plus golden-section maximization for
//!   arbitrary interference-cost functions. It is both the production
//!   solver for the uplink rate-delta cost model and the independent
//!   oracle that the closed forms are tested against.
//!
//! Revenue coefficients here are per bit/s; callers holding a per-Mbps
//! tariff divide by 1e6 first.

use crate::channel::LinkBudget;
use crate::relaying::{rate, Scheme};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PowerError {
    /// No finite power achieves the requested rate on this link.
    #[error("target rate {target_bps} bit/s is unattainable on this link")]
    InfeasibleTarget { target_bps: f64 },
    /// Selection relaying with the BS->relay SINR below the threshold.
    #[error("relay ineligible under selection relaying")]
    RelayIneligible,
    /// Closed forms only cover the linear interference-cost model.
    #[error("closed-form solver requires the linear cost model")]
    UnsupportedCostModel,
}

/// A solved operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    pub power_w: f64,
    /// For rate targets: required power does not exceed the power budget.
    pub feasible: bool,
    /// The unclamped optimizer fell outside `[0, p_max]`.
    pub clamped: bool,
    /// Rate at `power_w` under the same scheme and link.
    pub achieved_rate_bps: f64,
}

fn result(scheme: Scheme, lb: &LinkBudget, power_w: f64, feasible: bool, clamped: bool) -> PowerResult {
    PowerResult {
        power_w,
        feasible,
        clamped,
        achieved_rate_bps: rate(scheme, lb, power_w).rate_bps,
    }
}

/// Required SINR for a half-slot rate `target` over bandwidth `w`:
/// inverse of `(W/2) log2(1 + s)`, i.e. `4^(target/W) - 1`.
fn required_sinr(target_bps: f64, w: f64) -> f64 {
    4f64.powf(target_bps / w) - 1.0
}

/// Minimal power with `rate(scheme, lb, p) >= target_bps`.
///
/// `feasible` is false when the required power exceeds `p_max` (the pair
/// is then not assignable); an `Err` means no finite power would do.
pub fn power_for_rate(
    scheme: Scheme,
    lb: &LinkBudget,
    target_bps: f64,
    p_max: f64,
) -> Result<PowerResult, PowerError> {
    let w = lb.bandwidth_hz;
    let infeasible = || PowerError::InfeasibleTarget { target_bps };
    if target_bps <= 0.0 {
        return Ok(result(scheme, lb, 0.0, true, false));
    }

    let sinr_needed = match scheme {
        Scheme::Normal => required_sinr(target_bps, w),
        Scheme::AmplifyForward => {
            let t = required_sinr(target_bps, w);
            if t <= lb.sinr_sj {
                0.0
            } else {
                // Relayed term saturates at SINR_si; past that the target
                // is out of reach for any power.
                let den = 1.0 + lb.sinr_si + lb.sinr_sj - 4f64.powf(target_bps / w);
                if den <= 0.0 {
                    return Err(infeasible());
                }
                (t - lb.sinr_sj) * (1.0 + lb.sinr_si) / den
            }
        }
        Scheme::DecodeForward => {
            let decode_cap = 0.5 * w * (1.0 + lb.sinr_si).log2();
            if target_bps > decode_cap {
                return Err(infeasible());
            }
            (required_sinr(target_bps, w) - lb.sinr_sj).max(0.0)
        }
        Scheme::SelectionRelaying { zeta } => {
            if lb.sinr_si < zeta {
                return Err(PowerError::RelayIneligible);
            }
            (required_sinr(target_bps, w) - lb.sinr_sj).max(0.0)
        }
    };

    let power = if sinr_needed == 0.0 {
        0.0
    } else if lb.gamma_ij > 0.0 {
        sinr_needed / lb.gamma_ij
    } else {
        return Err(infeasible());
    };
    Ok(result(scheme, lb, power, power <= p_max, false))
}

/// Power maximizing `a*rate(p) - alpha*p - c*p` on `[0, p_max]`, closed
/// form per scheme, valid for the linear cost model `C(p) = c*p` only.
///
/// `a_per_bps` is revenue per bit/s; `alpha` and `c` are costs per watt.
pub fn power_max_bs_utility(
    scheme: Scheme,
    lb: &LinkBudget,
    a_per_bps: f64,
    alpha: f64,
    c: f64,
    p_max: f64,
) -> Result<PowerResult, PowerError> {
    let w = lb.bandwidth_hz;
    let unit_cost = alpha + c;

    let clamp = |interior: f64, hi: f64| -> PowerResult {
        let p = interior.clamp(0.0, hi);
        result(scheme, lb, p, true, interior < 0.0 || interior > hi)
    };

    match scheme {
        Scheme::Normal => {
            // d/dp [a (W/2) log2(1 + p g)] = a W g / (2 ln2 (1 + p g))
            let interior = if unit_cost > 0.0 && lb.gamma_ij > 0.0 {
                a_per_bps * w / (2.0 * 2f64.ln() * unit_cost) - 1.0 / lb.gamma_ij
            } else if lb.gamma_ij <= 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
            Ok(clamp(interior, p_max))
        }
        Scheme::AmplifyForward => {
            let g = lb.gamma_ij;
            let s_si = lb.sinr_si;
            let s_sj = lb.sinr_sj;
            if g <= 0.0 || s_si <= 0.0 || unit_cost <= 0.0 {
                // Rate constant (or revenue dominates forever): boundary.
                let p = if unit_cost <= 0.0 && g > 0.0 && s_si > 0.0 { p_max } else { 0.0 };
                return Ok(result(scheme, lb, p, true, true));
            }
            // Stationarity in x = p*g:
            //   (1+S_si+S_sj) x^2 + (1+S_si)(2+2S_sj+S_si) x
            //     + (1+S_sj)(1+S_si)^2 = a W S_si (1+S_si) g / (ln4 c)
            let qa = 1.0 + s_si + s_sj;
            let qb = (1.0 + s_si) * (2.0 + 2.0 * s_sj + s_si);
            let qc = (1.0 + s_sj) * (1.0 + s_si).powi(2);
            let k = a_per_bps * w * s_si * (1.0 + s_si) * g / (4f64.ln() * unit_cost);
            let interior = if k > qc {
                // Larger root, written to avoid cancellation.
                let disc = qb * qb - 4.0 * qa * (qc - k);
                2.0 * (k - qc) / (qb + disc.sqrt()) / g
            } else {
                // Utility is nonincreasing from p = 0 on.
                f64::NEG_INFINITY
            };
            Ok(clamp(interior, p_max))
        }
        Scheme::DecodeForward => {
            let g = lb.gamma_ij;
            if g <= 0.0 || lb.sinr_si <= lb.sinr_sj {
                // Rate already saturated at the decode cap for all powers.
                return Ok(result(scheme, lb, 0.0, true, false));
            }
            let crossover = (lb.sinr_si - lb.sinr_sj) / g;
            let interior = if unit_cost > 0.0 {
                a_per_bps * w / (4f64.ln() * unit_cost) - (1.0 + lb.sinr_sj) / g
            } else {
                f64::INFINITY
            };
            if crossover >= p_max {
                return Ok(clamp(interior, p_max));
            }
            // Piecewise: rising branch on [0, P_o], saturated beyond. Take
            // the better of the branch optimum and the crossover itself.
            let p1 = interior.clamp(0.0, crossover);
            let u = |p: f64| a_per_bps * rate(scheme, lb, p).rate_bps - unit_cost * p;
            let p = if u(p1) > u(crossover) { p1 } else { crossover };
            Ok(result(scheme, lb, p, true, interior < 0.0))
        }
        Scheme::SelectionRelaying { zeta } => {
            if lb.sinr_si < zeta {
                return Err(PowerError::RelayIneligible);
            }
            let g = lb.gamma_ij;
            let interior = if g <= 0.0 {
                f64::NEG_INFINITY
            } else if unit_cost > 0.0 {
                a_per_bps * w / (4f64.ln() * unit_cost) - (1.0 + lb.sinr_sj) / g
            } else {
                f64::INFINITY
            };
            Ok(clamp(interior, p_max))
        }
    }
}

/// Grid points used by [`numeric_argmax_utility`].
const GRID_POINTS: usize = 1024;

/// Numeric maximizer of `a*rate(p) - alpha*(p + p_c) - cost(p)` on
/// `[0, p_max]`: coarse 1024-point grid argmax refined by golden-section
/// search to within `1e-6 * p_max` of the local maximizer.
pub fn numeric_argmax_utility(
    scheme: Scheme,
    lb: &LinkBudget,
    a_per_bps: f64,
    alpha: f64,
    p_c: f64,
    cost: impl Fn(f64) -> f64,
    p_max: f64,
) -> Result<PowerResult, PowerError> {
    if let Scheme::SelectionRelaying { zeta } = scheme {
        if lb.sinr_si < zeta {
            return Err(PowerError::RelayIneligible);
        }
    }
    let utility =
        |p: f64| a_per_bps * rate(scheme, lb, p).rate_bps - alpha * (p + p_c) - cost(p);

    let step = p_max / GRID_POINTS as f64;
    let mut best_idx = 0;
    let mut best_val = utility(0.0);
    for i in 1..=GRID_POINTS {
        let v = utility(i as f64 * step);
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
    }

    let mut lo = (best_idx.saturating_sub(1)) as f64 * step;
    let mut hi = ((best_idx + 1).min(GRID_POINTS)) as f64 * step;
    // Golden-section on the bracketing interval around the grid winner.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = utility(x1);
    let mut f2 = utility(x2);
    while hi - lo > 1e-7 * p_max {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = utility(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = utility(x2);
        }
    }
    let (mut p_star, mut u_star) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if best_val > u_star {
        p_star = best_idx as f64 * step;
        u_star = best_val;
    }
    let _ = u_star;

    let h = 1e-6 * p_max;
    let clamped = (p_star <= h && utility(h) < utility(0.0))
        || (p_star >= p_max - h && utility(p_max) > utility(p_max - h));
    Ok(result(scheme, lb, p_star, true, clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    const W: f64 = 10e6;
    /// Table-scale revenue: 0.25 units per Mbps expressed per bit/s.
    const A: f64 = 0.25e-6;

    fn lb(sinr_si: f64, sinr_sj: f64, gamma_ij: f64) -> LinkBudget {
        LinkBudget {
            sinr_si,
            sinr_sj,
            gamma_ij,
            gamma_sj: sinr_sj / 4.0,
            noise_and_interference_dest_w: 1.0,
            noise_and_interference_relay_w: 1.0,
            bandwidth_hz: W,
        }
    }

    fn random_lb(rng: &mut ChaCha12Rng) -> LinkBudget {
        lb(
            rng.gen_range(0.1..40.0),
            rng.gen_range(0.0..8.0),
            rng.gen_range(0.5..80.0),
        )
    }

    fn all_schemes() -> [Scheme; 4] {
        [
            Scheme::Normal,
            Scheme::AmplifyForward,
            Scheme::DecodeForward,
            Scheme::SelectionRelaying { zeta: 1.0 },
        ]
    }

    #[test]
    fn normal_power_inverts_the_log() {
        // 10 Mbps over 10 MHz needs SINR 3, so p = 3 / gamma.
        let l = lb(5.0, 1.0, 12.0);
        let r = power_for_rate(Scheme::Normal, &l, 10e6, 1.0).unwrap();
        assert_relative_eq!(r.power_w * l.gamma_ij, 3.0, max_relative = 1e-12);
        assert!(r.feasible && !r.clamped);
        assert_relative_eq!(r.achieved_rate_bps, 10e6, max_relative = 1e-12);
    }

    #[test]
    fn round_trip_rate_meets_target_on_random_links() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let mut checked = 0;
        while checked < 1000 {
            let l = random_lb(&mut rng);
            for scheme in all_schemes() {
                // Pick a target known to be achievable within the budget.
                let p_true = rng.gen_range(1e-4..1.0f64);
                let reachable = rate(scheme, &l, p_true);
                if !reachable.eligible || reachable.rate_bps <= 0.0 {
                    continue;
                }
                let target = reachable.rate_bps * rng.gen_range(0.2..1.0);
                let r = power_for_rate(scheme, &l, target, 1.0).unwrap();
                assert!(r.feasible, "solved power {} within budget", r.power_w);
                assert!(
                    r.achieved_rate_bps >= target * (1.0 - 1e-9),
                    "{scheme:?}: achieved {} < target {target}",
                    r.achieved_rate_bps
                );
                // Minimality: 1% less power misses the target (unless the
                // target is already met at zero power).
                if r.power_w > 0.0 {
                    let under = rate(scheme, &l, r.power_w * 0.99).rate_bps;
                    assert!(under < target * (1.0 + 1e-9));
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn af_target_beyond_asymptote_is_infeasible() {
        let l = lb(3.0, 1.0, 10.0);
        // AF SINR saturates at S_sj + S_si = 4 -> just under (W/2)log2(5).
        let cap = 0.5 * W * 5f64.log2();
        assert!(matches!(
            power_for_rate(Scheme::AmplifyForward, &l, cap * 1.01, 10.0),
            Err(PowerError::InfeasibleTarget { .. })
        ));
        let ok = power_for_rate(Scheme::AmplifyForward, &l, cap * 0.9, 1e9).unwrap();
        assert!(ok.achieved_rate_bps >= cap * 0.9 * (1.0 - 1e-9));
    }

    #[test]
    fn df_target_above_decode_cap_is_infeasible() {
        let l = lb(3.0, 1.0, 10.0);
        let cap = 0.5 * W * 4f64.log2();
        assert!(power_for_rate(Scheme::DecodeForward, &l, cap, 1e9).is_ok());
        assert!(matches!(
            power_for_rate(Scheme::DecodeForward, &l, cap * 1.001, 1e9),
            Err(PowerError::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn df_saturated_link_meets_low_targets_at_zero_power() {
        // S_si <= S_sj: the decode cap binds for every power.
        let l = lb(1.0, 2.0, 10.0);
        let cap = 0.5 * W * 2f64.log2();
        let r = power_for_rate(Scheme::DecodeForward, &l, cap * 0.5, 1.0).unwrap();
        assert_eq!(r.power_w, 0.0);
        assert!(r.feasible);
    }

    #[test]
    fn selection_below_threshold_is_ineligible() {
        let l = lb(0.5, 1.0, 10.0);
        assert_eq!(
            power_for_rate(Scheme::SelectionRelaying { zeta: 1.0 }, &l, 1e6, 1.0),
            Err(PowerError::RelayIneligible)
        );
        assert_eq!(
            power_max_bs_utility(Scheme::SelectionRelaying { zeta: 1.0 }, &l, A, 1.0, 0.1, 1.0),
            Err(PowerError::RelayIneligible)
        );
    }

    #[test]
    fn over_budget_power_is_reported_infeasible_unclamped() {
        let l = lb(50.0, 0.0, 1.0);
        let r = power_for_rate(Scheme::Normal, &l, 10e6, 0.25).unwrap();
        assert!(!r.feasible && !r.clamped);
        assert_relative_eq!(r.power_w, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn normal_utility_maximizer_clamps_to_zero_when_marginal_cost_dominates() {
        // a W / (2 ln2 (alpha+c)) <= 1/gamma  =>  p* = 0.
        let l = lb(5.0, 1.0, 0.1);
        let r = power_max_bs_utility(Scheme::Normal, &l, A, 10.0, 5.0, 1.0).unwrap();
        assert_eq!(r.power_w, 0.0);
        assert!(r.clamped);
    }

    #[test]
    fn closed_forms_match_numeric_oracle_on_random_links() {
        let mut rng = ChaCha12Rng::seed_from_u64(4242);
        let p_max = 0.25;
        for trial in 0..400 {
            let l = random_lb(&mut rng);
            let alpha = rng.gen_range(1.0..10.0);
            let c = rng.gen_range(0.0..2.0);
            for scheme in all_schemes() {
                let closed = match power_max_bs_utility(scheme, &l, A, alpha, c, p_max) {
                    Ok(r) => r,
                    Err(PowerError::RelayIneligible) => continue,
                    Err(e) => panic!("{e}"),
                };
                let numeric =
                    numeric_argmax_utility(scheme, &l, A, alpha, 0.0, |p| c * p, p_max).unwrap();
                assert!(
                    (closed.power_w - numeric.power_w).abs() < 1e-5,
                    "trial {trial} {scheme:?}: closed {} vs numeric {} (link {l:?})",
                    closed.power_w,
                    numeric.power_w
                );
            }
        }
    }

    #[test]
    fn af_interior_optimum_is_stationary() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let p_max = 0.25;
        let mut interior_seen = 0;
        for _ in 0..500 {
            let l = random_lb(&mut rng);
            let alpha = rng.gen_range(1.0..6.0);
            let c = rng.gen_range(0.0..1.0);
            let r = power_max_bs_utility(Scheme::AmplifyForward, &l, A, alpha, c, p_max).unwrap();
            if r.clamped || r.power_w <= 0.0 || r.power_w >= p_max {
                continue;
            }
            interior_seen += 1;
            let u = |p: f64| A * rate(Scheme::AmplifyForward, &l, p).rate_bps - (alpha + c) * p;
            let h = 1e-6;
            let deriv = (u(r.power_w + h) - u(r.power_w - h)) / (2.0 * h);
            // Tolerance scaled to the per-Mbps revenue magnitude.
            assert!(deriv.abs() < 1e-6 * (A * 1e6), "dU/dp = {deriv} at p = {}", r.power_w);
        }
        assert!(interior_seen > 50, "expected interior AF optima, saw {interior_seen}");
    }

    #[test]
    fn every_utility_maximizer_is_stationary_or_at_a_boundary() {
        let mut rng = ChaCha12Rng::seed_from_u64(7001);
        let p_max = 0.25;
        for _ in 0..300 {
            let l = random_lb(&mut rng);
            let alpha = rng.gen_range(0.5..8.0);
            let c = rng.gen_range(0.0..1.0);
            for scheme in all_schemes() {
                let r = match power_max_bs_utility(scheme, &l, A, alpha, c, p_max) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                assert!((0.0..=p_max).contains(&r.power_w));
                let crossover = if lb(l.sinr_si, l.sinr_sj, l.gamma_ij).gamma_ij > 0.0 {
                    (l.sinr_si - l.sinr_sj) / l.gamma_ij
                } else {
                    f64::NAN
                };
                let at_boundary = r.power_w == 0.0
                    || r.power_w == p_max
                    || (crossover.is_finite() && (r.power_w - crossover).abs() < 1e-12);
                if !at_boundary {
                    let u = |p: f64| A * rate(scheme, &l, p).rate_bps - (alpha + c) * p;
                    let h = 1e-6;
                    let deriv = (u(r.power_w + h) - u(r.power_w - h)) / (2.0 * h);
                    assert!(deriv.abs() < 1e-5 * (A * 1e6), "{scheme:?}: dU/dp = {deriv}");
                }
            }
        }
    }

    #[test]
    fn df_utility_is_continuous_across_the_crossover() {
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        for _ in 0..200 {
            let l = random_lb(&mut rng);
            if l.sinr_si <= l.sinr_sj {
                continue;
            }
            let crossover = (l.sinr_si - l.sinr_sj) / l.gamma_ij;
            let u = |p: f64| A * rate(Scheme::DecodeForward, &l, p).rate_bps - 2.0 * p;
            let below = u(crossover * (1.0 - 1e-12));
            let above = u(crossover * (1.0 + 1e-12));
            assert!(
                (below - above).abs() <= 1e-9 * below.abs().max(above.abs()).max(1.0),
                "utility jump at crossover: {below} vs {above}"
            );
        }
    }

    #[test]
    fn numeric_oracle_degenerate_cases() {
        let l = lb(5.0, 1.0, 10.0);
        // No revenue: utility strictly decreasing, so p* = 0.
        let r = numeric_argmax_utility(Scheme::Normal, &l, 0.0, 1.0, 0.0, |p| 0.5 * p, 0.25)
            .unwrap();
        assert!(r.power_w <= 1e-6 * 0.25);

        // DF saturated for all powers with c > 0: cost-only, left endpoint.
        let sat = lb(1.0, 2.0, 10.0);
        let r = numeric_argmax_utility(Scheme::DecodeForward, &sat, A, 1.0, 0.0, |p| 0.5 * p, 0.25)
            .unwrap();
        assert!(r.power_w <= 1e-6 * 0.25);
    }

    #[test]
    fn numeric_oracle_flags_budget_clamping() {
        // Huge revenue: optimum sits at p_max and is reported clamped.
        let l = lb(1000.0, 1.0, 10.0);
        let r = numeric_argmax_utility(Scheme::Normal, &l, 1.0, 0.1, 0.0, |_| 0.0, 0.25).unwrap();
        assert_relative_eq!(r.power_w, 0.25, max_relative = 1e-5);
        assert!(r.clamped);
    }
}
