//! Weighted bipartite matching between relays and destinations.
//!
//! The auctions need, many times per run, an optimal "maximal" matching:
//! one that serves every destination that can be served, with minimum (or
//! maximum) total edge weight among such matchings. Edges excluded by an
//! interference or feasibility gate are represented as absent rather than
//! as large finite sentinels, so weight arithmetic stays exact.
//!
//! Payments depend on *which* optimal matching is returned, so ties are
//! broken by a documented rule that is part of the contract: among optimal
//! matchings, return the one whose pair list, sorted by destination id, is
//! lexicographically smallest (destinations left unserved sort before any
//! relay id). The Hungarian solver enforces this exactly by running on a
//! lexicographic cost group `(unserved count, weight, tie code)` in which
//! the first and last components are integers.

use thiserror::Error;

/// Whether total edge weight is minimized or maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Minimize,
    Maximize,
}

/// Relay-by-destination bipartite graph with optional (excludable) edges.
#[derive(Debug, Clone)]
pub struct WeightedBipartite {
    num_relays: usize,
    num_destinations: usize,
    /// Row-major `[relay * num_destinations + dest]`; `None` = excluded.
    weights: Vec<Option<f64>>,
    objective: Objective,
}

/// A matching together with its total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `(relay, destination)` pairs, sorted by destination id.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of member edge weights, accumulated in destination order.
    pub weight: f64,
}

impl Matching {
    /// Relay assigned to `dest`, if any.
    pub fn relay_for(&self, dest: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(_, d)| d == dest).map(|&(r, _)| r)
    }

    /// Whether `relay` is matched.
    pub fn contains_relay(&self, relay: usize) -> bool {
        self.pairs.iter().any(|&(r, _)| r == relay)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MatchingError {
    /// Some destinations cannot all be served by the non-excluded edges.
    #[error("destinations {destinations:?} cannot be covered")]
    Uncoverable { destinations: Vec<usize> },
    /// Brute-force enumeration refused (too many relays).
    #[error("brute force limited to 8 relays, got {num_relays}")]
    SizeLimit { num_relays: usize },
    /// The deterministic tie-break encoding would overflow.
    #[error("graph too large for exact tie-break encoding")]
    TooLarge,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

impl WeightedBipartite {
    /// Empty graph (all edges excluded). Requires `num_relays >= num_destinations`.
    pub fn new(
        num_relays: usize,
        num_destinations: usize,
        objective: Objective,
    ) -> Result<Self, MatchingError> {
        if num_relays < num_destinations {
            return Err(MatchingError::InvalidGraph(format!(
                "need at least as many relays as destinations ({num_relays} < {num_destinations})"
            )));
        }
        Ok(Self {
            num_relays,
            num_destinations,
            weights: vec![None; num_relays * num_destinations],
            objective,
        })
    }

    /// Build from a closure returning `Some(weight)` for included edges.
    pub fn from_fn(
        num_relays: usize,
        num_destinations: usize,
        objective: Objective,
        mut f: impl FnMut(usize, usize) -> Option<f64>,
    ) -> Result<Self, MatchingError> {
        let mut g = Self::new(num_relays, num_destinations, objective)?;
        for relay in 0..num_relays {
            for dest in 0..num_destinations {
                if let Some(w) = f(relay, dest) {
                    g.set_weight(relay, dest, w)?;
                }
            }
        }
        Ok(g)
    }

    /// Include edge `(relay, dest)` with the given finite weight.
    pub fn set_weight(&mut self, relay: usize, dest: usize, weight: f64) -> Result<(), MatchingError> {
        if !weight.is_finite() {
            return Err(MatchingError::InvalidGraph(format!(
                "edge ({relay},{dest}) weight {weight} is not finite; exclude it instead"
            )));
        }
        let idx = self.index(relay, dest);
        self.weights[idx] = Some(weight);
        Ok(())
    }

    /// Exclude edge `(relay, dest)`.
    pub fn exclude(&mut self, relay: usize, dest: usize) {
        let idx = self.index(relay, dest);
        self.weights[idx] = None;
    }

    pub fn weight(&self, relay: usize, dest: usize) -> Option<f64> {
        self.weights[self.index(relay, dest)]
    }

    pub fn num_relays(&self) -> usize {
        self.num_relays
    }

    pub fn num_destinations(&self) -> usize {
        self.num_destinations
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    fn index(&self, relay: usize, dest: usize) -> usize {
        assert!(relay < self.num_relays && dest < self.num_destinations);
        relay * self.num_destinations + dest
    }

    /// Signed weight for the internal minimization.
    fn solver_weight(&self, relay: usize, dest: usize) -> Option<f64> {
        self.weight(relay, dest).map(|w| match self.objective {
            Objective::Minimize => w,
            Objective::Maximize => -w,
        })
    }

    /// Tie-break digit weight of one edge: `(relay+1) * (R+1)^(D-1-dest)`.
    ///
    /// Summed over a matching this encodes, in base `R+1`, the relay id
    /// assigned to each destination (0 = unserved), so integer comparison
    /// of codes is lexicographic comparison of pair lists.
    fn tie_code(&self, relay: usize, dest: usize) -> i128 {
        let base = (self.num_relays + 1) as i128;
        let exp = (self.num_destinations - 1 - dest) as u32;
        (relay as i128 + 1) * base.pow(exp)
    }

    /// Whether the tie-break encoding (plus dual-update headroom) fits i128.
    fn tie_encoding_fits(&self) -> bool {
        let base = (self.num_relays + 1) as i128;
        let slack = ((self.num_relays + self.num_destinations + 2)
            * (self.num_destinations + 2)
            * 4) as i128;
        match base.checked_pow(self.num_destinations as u32) {
            Some(max_code) => max_code.checked_mul(slack).is_some(),
            None => false,
        }
    }
}

/// Cost element of the lexicographically ordered group used by the solver:
/// unserved-destination count first, then weight, then tie code.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LexCost {
    unserved: i64,
    main: f64,
    tie: i128,
}

impl LexCost {
    const ZERO: LexCost = LexCost { unserved: 0, main: 0.0, tie: 0 };
    /// Top element; larger than any reachable cost. Never selected as a
    /// step size because every destination can reach its own slack column.
    const TOP: LexCost = LexCost { unserved: i64::MAX, main: f64::INFINITY, tie: i128::MAX };

    fn add(self, rhs: LexCost) -> LexCost {
        LexCost {
            unserved: self.unserved.saturating_add(rhs.unserved),
            main: self.main + rhs.main,
            tie: self.tie.saturating_add(rhs.tie),
        }
    }

    fn sub(self, rhs: LexCost) -> LexCost {
        LexCost {
            unserved: self.unserved.saturating_sub(rhs.unserved),
            main: self.main - rhs.main,
            tie: self.tie.saturating_sub(rhs.tie),
        }
    }

    fn lt(self, rhs: LexCost) -> bool {
        if self.unserved != rhs.unserved {
            return self.unserved < rhs.unserved;
        }
        if self.main != rhs.main {
            return self.main < rhs.main;
        }
        self.tie < rhs.tie
    }
}

/// Optimal full-coverage matching of `g` under its objective.
///
/// Serves every destination that the non-excluded edges allow; if any
/// destination must be left unserved, returns [`MatchingError::Uncoverable`]
/// with the unserved set and no matching. Ties are broken by the
/// lexicographically smallest pair list (see module docs).
pub fn optimal_maximal_matching(g: &WeightedBipartite) -> Result<Matching, MatchingError> {
    hungarian(g)
}

/// Hungarian (shortest-augmenting-path) assignment over the lex cost group.
///
/// Rows are destinations; columns are the relays plus one private "unserved"
/// slack column per destination with cost `(1, 0, 0)`. The slack columns make
/// every augmentation finite without finite sentinels, and the lex order
/// makes the result a maximum-coverage, then optimal-weight, then
/// lexicographically smallest matching in a single pass.
fn hungarian(g: &WeightedBipartite) -> Result<Matching, MatchingError> {
    let rows = g.num_destinations;
    let relays = g.num_relays;
    if rows == 0 {
        return Ok(Matching { pairs: Vec::new(), weight: 0.0 });
    }
    if !g.tie_encoding_fits() {
        return Err(MatchingError::TooLarge);
    }
    for idx in 0..g.weights.len() {
        if let Some(w) = g.weights[idx] {
            if !w.is_finite() {
                return Err(MatchingError::InvalidGraph("non-finite edge weight".into()));
            }
        }
    }

    let cols = relays + rows; // real columns then one slack column per row
    let cost = |row: usize, col: usize| -> Option<LexCost> {
        if col < relays {
            g.solver_weight(col, row).map(|w| LexCost {
                unserved: 0,
                main: w,
                tie: g.tie_code(col, row),
            })
        } else if col == relays + row {
            Some(LexCost { unserved: 1, main: 0.0, tie: 0 })
        } else {
            None
        }
    };

    // job[c] = row currently assigned to column c; index `cols` is the
    // sentinel column that hosts the row being inserted.
    let mut job: Vec<Option<usize>> = vec![None; cols + 1];
    let mut row_pot = vec![LexCost::ZERO; rows];
    let mut col_pot = vec![LexCost::ZERO; cols + 1];

    for row in 0..rows {
        let mut c_curr = cols;
        job[cols] = Some(row);
        let mut min_to = vec![LexCost::TOP; cols + 1];
        let mut prv: Vec<Option<usize>> = vec![None; cols + 1];
        let mut in_tree = vec![false; cols + 1];

        while let Some(j) = job[c_curr] {
            in_tree[c_curr] = true;
            let mut delta = LexCost::TOP;
            let mut c_next = 0;

            for c in 0..cols {
                if in_tree[c] {
                    continue;
                }
                if let Some(edge) = cost(j, c) {
                    let reduced = edge.sub(row_pot[j]).sub(col_pot[c]);
                    if reduced.lt(min_to[c]) {
                        min_to[c] = reduced;
                        prv[c] = Some(c_curr);
                    }
                }
                if min_to[c].lt(delta) {
                    delta = min_to[c];
                    c_next = c;
                }
            }
            debug_assert!(delta.lt(LexCost::TOP), "slack column keeps delta finite");

            for c in 0..=cols {
                if in_tree[c] {
                    if let Some(r) = job[c] {
                        row_pot[r] = row_pot[r].add(delta);
                    }
                    col_pot[c] = col_pot[c].sub(delta);
                } else {
                    min_to[c] = min_to[c].sub(delta);
                }
            }
            c_curr = c_next;
        }

        while c_curr != cols {
            let c_prev = prv[c_curr].expect("augmenting path is connected");
            job[c_curr] = job[c_prev];
            c_curr = c_prev;
        }
    }

    let mut assigned: Vec<Option<usize>> = vec![None; rows];
    for (c, row) in job.iter().take(relays).enumerate() {
        if let Some(r) = row {
            assigned[*r] = Some(c);
        }
    }
    let unserved: Vec<usize> =
        (0..rows).filter(|&d| assigned[d].is_none()).collect();
    if !unserved.is_empty() {
        return Err(MatchingError::Uncoverable { destinations: unserved });
    }

    let mut pairs = Vec::with_capacity(rows);
    let mut weight = 0.0;
    for (dest, relay) in assigned.iter().enumerate() {
        let relay = relay.expect("all destinations covered");
        pairs.push((relay, dest));
        weight += g.weight(relay, dest).expect("matched edge exists");
    }
    Ok(Matching { pairs, weight })
}

/// Exhaustive enumeration with the same contract as
/// [`optimal_maximal_matching`]. Test oracle; refuses more than 8 relays.
pub fn brute_force_matching(g: &WeightedBipartite) -> Result<Matching, MatchingError> {
    if g.num_relays > 8 {
        return Err(MatchingError::SizeLimit { num_relays: g.num_relays });
    }
    if !g.tie_encoding_fits() {
        return Err(MatchingError::TooLarge);
    }

    struct Best {
        covered: usize,
        main: f64,
        tie: i128,
        assigned: Vec<Option<usize>>,
    }
    let mut best: Option<Best> = None;

    let rows = g.num_destinations;
    let mut assigned: Vec<Option<usize>> = vec![None; rows];
    let mut used = vec![false; g.num_relays];

    fn recurse(
        g: &WeightedBipartite,
        dest: usize,
        assigned: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Option<Best>,
    ) {
        if dest == g.num_destinations {
            let mut covered = 0usize;
            let mut main = 0.0;
            let mut tie = 0i128;
            for (d, r) in assigned.iter().enumerate() {
                if let Some(r) = r {
                    covered += 1;
                    main += match g.objective {
                        Objective::Minimize => g.weight(*r, d).unwrap(),
                        Objective::Maximize => -g.weight(*r, d).unwrap(),
                    };
                    tie += g.tie_code(*r, d);
                }
            }
            let better = match best {
                None => true,
                Some(b) => {
                    (covered, main, tie) != (b.covered, b.main, b.tie)
                        && (covered > b.covered
                            || (covered == b.covered
                                && (main < b.main || (main == b.main && tie < b.tie))))
                }
            };
            if better {
                *best = Some(Best { covered, main, tie, assigned: assigned.clone() });
            }
            return;
        }
        // Leave `dest` unserved.
        recurse(g, dest + 1, assigned, used, best);
        for relay in 0..g.num_relays {
            if !used[relay] && g.weight(relay, dest).is_some() {
                used[relay] = true;
                assigned[dest] = Some(relay);
                recurse(g, dest + 1, assigned, used, best);
                assigned[dest] = None;
                used[relay] = false;
            }
        }
    }

    recurse(g, 0, &mut assigned, &mut used, &mut best);
    let best = best.expect("enumeration always visits the empty matching");

    if best.covered < rows {
        let destinations = (0..rows).filter(|&d| best.assigned[d].is_none()).collect();
        return Err(MatchingError::Uncoverable { destinations });
    }
    let mut pairs = Vec::with_capacity(rows);
    let mut weight = 0.0;
    for (dest, relay) in best.assigned.iter().enumerate() {
        let relay = relay.expect("full coverage");
        pairs.push((relay, dest));
        weight += g.weight(relay, dest).unwrap();
    }
    Ok(Matching { pairs, weight })
}

/// Optimal matching of the subgraph induced by dropping `excluded_relays`
/// and `excluded_destinations`. Pair ids refer to the original graph.
pub fn matching_without(
    g: &WeightedBipartite,
    excluded_relays: &[usize],
    excluded_destinations: &[usize],
) -> Result<Matching, MatchingError> {
    let keep_relay: Vec<usize> =
        (0..g.num_relays).filter(|r| !excluded_relays.contains(r)).collect();
    let keep_dest: Vec<usize> =
        (0..g.num_destinations).filter(|d| !excluded_destinations.contains(d)).collect();

    let mut sub = WeightedBipartite {
        num_relays: keep_relay.len(),
        num_destinations: keep_dest.len(),
        weights: vec![None; keep_relay.len() * keep_dest.len()],
        objective: g.objective,
    };
    for (ri, &r) in keep_relay.iter().enumerate() {
        for (di, &d) in keep_dest.iter().enumerate() {
            if let Some(w) = g.weight(r, d) {
                sub.set_weight(ri, di, w)?;
            }
        }
    }

    let remap = |m: Matching| Matching {
        pairs: m.pairs.iter().map(|&(r, d)| (keep_relay[r], keep_dest[d])).collect(),
        weight: m.weight,
    };
    match optimal_maximal_matching(&sub) {
        Ok(m) => Ok(remap(m)),
        Err(MatchingError::Uncoverable { destinations }) => Err(MatchingError::Uncoverable {
            destinations: destinations.into_iter().map(|d| keep_dest[d]).collect(),
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_graph(rng: &mut ChaCha12Rng, nr: usize, nd: usize, objective: Objective) -> WeightedBipartite {
        WeightedBipartite::from_fn(nr, nd, objective, |_, _| {
            if rng.gen_bool(0.85) {
                Some(rng.gen_range(0.0..10.0))
            } else {
                None
            }
        })
        .unwrap()
    }

    #[test]
    fn single_edge_graph_returns_it() {
        let mut g = WeightedBipartite::new(1, 1, Objective::Minimize).unwrap();
        g.set_weight(0, 0, 0.7).unwrap();
        let m = optimal_maximal_matching(&g).unwrap();
        assert_eq!(m.pairs, vec![(0, 0)]);
        assert_eq!(m.weight, 0.7);
    }

    /// Three relays, one destination, weights 0.25 / 0.055 / excluded:
    /// relay 1 (0-based) wins at weight 0.055.
    #[test]
    fn three_relay_one_destination_example() {
        let mut g = WeightedBipartite::new(3, 1, Objective::Minimize).unwrap();
        g.set_weight(0, 0, 0.25).unwrap();
        g.set_weight(1, 0, 0.055).unwrap();
        // relay 2 excluded by the interference gate
        let m = optimal_maximal_matching(&g).unwrap();
        assert_eq!(m.pairs, vec![(1, 0)]);
        assert_eq!(m.weight, 0.055);

        // With relay 1 removed, relay 0 is matched at 0.25.
        let m2 = matching_without(&g, &[1], &[]).unwrap();
        assert_eq!(m2.pairs, vec![(0, 0)]);
        assert_eq!(m2.weight, 0.25);
    }

    #[test]
    fn removing_relay_outside_optimum_keeps_weight() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = random_graph(&mut rng, 6, 3, Objective::Minimize);
            let m = match optimal_maximal_matching(&g) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let outside = (0..6).find(|r| !m.contains_relay(*r)).unwrap();
            let m2 = matching_without(&g, &[outside], &[]).unwrap();
            assert_eq!(m2.weight, m.weight);
        }
    }

    #[test]
    fn empty_destination_set_gives_empty_matching() {
        let g = WeightedBipartite::new(3, 0, Objective::Minimize).unwrap();
        for res in [optimal_maximal_matching(&g), brute_force_matching(&g)] {
            let m = res.unwrap();
            assert!(m.pairs.is_empty());
            assert_eq!(m.weight, 0.0);
        }
    }

    #[test]
    fn all_edges_excluded_is_uncoverable() {
        let g = WeightedBipartite::new(3, 2, Objective::Minimize).unwrap();
        for res in [optimal_maximal_matching(&g), brute_force_matching(&g)] {
            match res {
                Err(MatchingError::Uncoverable { destinations }) => {
                    assert_eq!(destinations, vec![0, 1]);
                }
                other => panic!("expected Uncoverable, got {other:?}"),
            }
        }
    }

    #[test]
    fn brute_force_refuses_large_graphs() {
        let g = WeightedBipartite::new(9, 2, Objective::Minimize).unwrap();
        assert!(matches!(
            brute_force_matching(&g),
            Err(MatchingError::SizeLimit { num_relays: 9 })
        ));
    }

    #[test]
    fn more_destinations_than_relays_rejected() {
        assert!(WeightedBipartite::new(2, 3, Objective::Minimize).is_err());
    }

    /// Coverage beats weight: serving both destinations is preferred even
    /// when a single cheap edge would be a lighter "maximal" matching.
    #[test]
    fn full_coverage_preferred_over_cheap_partial() {
        let mut g = WeightedBipartite::new(2, 2, Objective::Minimize).unwrap();
        g.set_weight(0, 0, 1.0).unwrap();
        g.set_weight(0, 1, 1.0).unwrap();
        g.set_weight(1, 0, 100.0).unwrap();
        let m = optimal_maximal_matching(&g).unwrap();
        assert_eq!(m.pairs, vec![(1, 0), (0, 1)]);
        assert_eq!(m.weight, 101.0);
        assert_eq!(brute_force_matching(&g).unwrap(), m);
    }

    /// Hall-style deficiency: both destinations only reach relay 0.
    #[test]
    fn structural_deficiency_reports_unserved_destination() {
        let mut g = WeightedBipartite::new(2, 2, Objective::Minimize).unwrap();
        g.set_weight(0, 0, 1.0).unwrap();
        g.set_weight(0, 1, 2.0).unwrap();
        let hung = optimal_maximal_matching(&g);
        let brute = brute_force_matching(&g);
        assert_eq!(hung, brute);
        assert!(matches!(hung, Err(MatchingError::Uncoverable { .. })));
    }

    /// Tie-break contract: with dyadic weights (exact sums) the returned
    /// pair list is the lexicographically smallest optimal one, for both
    /// objectives, and matches brute force exactly.
    #[test]
    fn ties_break_to_lexicographically_smallest_pairs() {
        // All single-destination weights equal: pick relay 0.
        let mut g = WeightedBipartite::new(3, 1, Objective::Minimize).unwrap();
        for r in 0..3 {
            g.set_weight(r, 0, 0.5).unwrap();
        }
        assert_eq!(optimal_maximal_matching(&g).unwrap().pairs, vec![(0, 0)]);

        // Two optimal matchings of weight 1.0: {(0,0),(1,1)} and {(1,0),(0,1)}.
        let mut g = WeightedBipartite::new(2, 2, Objective::Minimize).unwrap();
        g.set_weight(0, 0, 0.25).unwrap();
        g.set_weight(1, 1, 0.75).unwrap();
        g.set_weight(1, 0, 0.5).unwrap();
        g.set_weight(0, 1, 0.5).unwrap();
        let m = optimal_maximal_matching(&g).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(brute_force_matching(&g).unwrap(), m);

        let mut gmax = g.clone();
        gmax.objective = Objective::Maximize;
        let m = optimal_maximal_matching(&gmax).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(brute_force_matching(&gmax).unwrap(), m);
    }

    #[test]
    fn hungarian_matches_brute_force_on_random_graphs() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for trial in 0..300 {
            let nr = rng.gen_range(1..=8);
            let nd = rng.gen_range(0..=nr.min(5));
            let objective = if rng.gen_bool(0.5) { Objective::Minimize } else { Objective::Maximize };
            let g = random_graph(&mut rng, nr, nd, objective);
            let hung = optimal_maximal_matching(&g);
            let brute = brute_force_matching(&g);
            match (hung, brute) {
                (Ok(a), Ok(b)) => {
                    assert!(
                        (a.weight - b.weight).abs() < 1e-9,
                        "trial {trial}: hungarian {} vs brute {}",
                        a.weight,
                        b.weight
                    );
                }
                (Err(a), Err(b)) => assert_eq!(a, b, "trial {trial}"),
                (a, b) => panic!("trial {trial}: disagreement {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn matching_without_agrees_with_brute_force_on_subgraph() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let g = random_graph(&mut rng, 6, 4, Objective::Minimize);
            let drop_relay = rng.gen_range(0..6);
            let drop_dest = rng.gen_range(0..4);
            let via_without = matching_without(&g, &[drop_relay], &[drop_dest]);

            let mut direct = WeightedBipartite::new(5, 3, Objective::Minimize).unwrap();
            let relays: Vec<usize> = (0..6).filter(|&r| r != drop_relay).collect();
            let dests: Vec<usize> = (0..4).filter(|&d| d != drop_dest).collect();
            for (ri, &r) in relays.iter().enumerate() {
                for (di, &d) in dests.iter().enumerate() {
                    if let Some(w) = g.weight(r, d) {
                        direct.set_weight(ri, di, w).unwrap();
                    }
                }
            }
            match (via_without, brute_force_matching(&direct)) {
                (Ok(a), Ok(b)) => assert!((a.weight - b.weight).abs() < 1e-9),
                (Err(_), Err(_)) => {}
                (a, b) => panic!("disagreement {a:?} vs {b:?}"),
            }
        }
    }
}
