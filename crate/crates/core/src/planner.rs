//! The per-tier negotiator: builds backward plans from fixed due dates tier
//! by tier (most downstream first), selects one candidate per node and cost
//! weighting, reconciles shared-component due dates, falls back to forward
//! planning when backward plans reach into the past, spreads delays fairly
//! over customers, and iterates until the chain is satisfied or the
//! iteration bound is hit. A rolling-horizon step shifts forecasts and
//! carries stocks between planning rounds.

use std::collections::BTreeMap;

use crate::ids::{ProductId, VenId};
use crate::model::{CapacityProfile, DueDelivery, LedgerEntry, Plan, Topology};
use crate::num::{Money, Period, Quantity, Tier};
use crate::scenario::{PenaltyParams, PlanningConfig, Scenario};
use crate::ven::{plan_backward, plan_forward_detailed};

pub type DemandVector = BTreeMap<Period, Quantity>;

/// The planning inputs: network, capacities, cost-weight grid, demand
/// pricing and the satisfaction tolerance.
#[derive(Debug, Clone)]
pub struct PlanningProblem {
    pub topology: Topology,
    pub catalog: crate::model::ProductCatalog,
    /// One profile per node; for consortium nodes the principal's.
    pub profiles: BTreeMap<VenId, CapacityProfile>,
    pub products: BTreeMap<VenId, ProductId>,
    pub param_sets: Vec<Vec<PenaltyParams>>,
    /// Maximum acceptable customer-facing delay, in periods.
    pub tolerance: Period,
    pub unit_prices: BTreeMap<VenId, Money>,
    pub max_iterations: Option<u64>,
}

impl PlanningProblem {
    pub fn from_scenario(scenario: &Scenario) -> Option<(Self, PlanningState)> {
        let planning: &PlanningConfig = scenario.planning.as_ref()?;
        let mut profiles = BTreeMap::new();
        let mut products = BTreeMap::new();
        for (ven_id, cfg) in &scenario.vens {
            if let Some(profile) = cfg.members.get(&cfg.principal) {
                profiles.insert(ven_id.clone(), profile.clone());
            }
            if let Some(product) = &cfg.product {
                products.insert(ven_id.clone(), product.clone());
            }
        }
        let problem = PlanningProblem {
            topology: scenario.topology.clone(),
            catalog: scenario.catalog.clone(),
            profiles,
            products,
            param_sets: planning.param_sets.clone(),
            tolerance: planning.tolerance,
            max_iterations: planning.max_iterations,
            unit_prices: planning.unit_prices.clone(),
        };
        let state = PlanningState {
            forecasts: planning.forecasts.clone(),
            opening_stocks: planning.opening_stocks.clone(),
            delay_history: BTreeMap::new(),
            previous_component_dues: None,
        };
        Some((problem, state))
    }

    /// Iteration bound: number of nodes times number of periods, unless
    /// overridden.
    pub fn iteration_bound(&self) -> u64 {
        if let Some(m) = self.max_iterations {
            return m.max(1);
        }
        let vens = self.topology.vens.len() as u64;
        let periods = self
            .profiles
            .values()
            .map(|p| p.horizon.max(1) as u64)
            .max()
            .unwrap_or(1);
        (vens * periods).max(1)
    }

    /// External due deliveries per terminal node, derived from forecasts.
    pub fn external_dues(&self, state: &PlanningState) -> BTreeMap<VenId, Vec<DueDelivery>> {
        let mut dues = BTreeMap::new();
        for (ven, forecast) in &state.forecasts {
            let list: Vec<DueDelivery> = forecast
                .iter()
                .enumerate()
                .filter(|(_, q)| **q > 0)
                .map(|(i, q)| DueDelivery::new("ext", (i + 1) as Period, *q))
                .collect();
            dues.insert(ven.clone(), list);
        }
        dues
    }
}

/// Mutable planning state carried across iterations and horizon rolls.
#[derive(Debug, Clone, Default)]
pub struct PlanningState {
    pub forecasts: BTreeMap<VenId, Vec<Quantity>>,
    pub opening_stocks: BTreeMap<VenId, Quantity>,
    /// Cumulative unit-period disadvantage per customer label.
    pub delay_history: BTreeMap<String, i64>,
    /// Due deliveries emitted to each supplier in the previous round; the
    /// warm-start baseline for shared-component reconciliation.
    pub previous_component_dues: Option<BTreeMap<VenId, Vec<DueDelivery>>>,
}

/// One candidate plan: the cost weighting it was built under and the plan.
#[derive(Debug, Clone)]
pub struct CandidatePlan {
    pub params: PenaltyParams,
    pub plan: Plan,
}

/// All plans of one tier: per node, the candidate list (one per cost
/// weighting) and the selected one.
#[derive(Debug, Clone)]
pub struct TierPlanSet {
    pub tier: Tier,
    pub candidates: BTreeMap<VenId, Vec<CandidatePlan>>,
    pub chosen: BTreeMap<VenId, usize>,
}

impl TierPlanSet {
    pub fn chosen_plan(&self, ven: &VenId) -> Option<&CandidatePlan> {
        let idx = *self.chosen.get(ven)?;
        self.candidates.get(ven)?.get(idx)
    }
}

/// Selects, per node, the candidate minimizing holding + production +
/// delay-penalty cost; ties break on lower weight-set id, then node id
/// (candidate lists are per node, so the latter never actually fires).
pub fn nat_select(candidates: &BTreeMap<VenId, Vec<CandidatePlan>>) -> BTreeMap<VenId, usize> {
    let mut chosen = BTreeMap::new();
    for (ven, list) in candidates {
        debug_assert!(!list.is_empty());
        let mut best = 0usize;
        for (i, candidate) in list.iter().enumerate() {
            let better = candidate.plan.total_cost() < list[best].plan.total_cost()
                || (candidate.plan.total_cost() == list[best].plan.total_cost()
                    && candidate.params.weight_set_id < list[best].params.weight_set_id);
            if better {
                best = i;
            }
        }
        chosen.insert(ven.clone(), best);
    }
    chosen
}

// ── Shared-component reconciliation ──────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconcileOutcome {
    /// Anticipations offset delays: no change propagates upstream.
    Absorbed,
    /// The aggregate changed for the worse somewhere: emit the new vector.
    Emit,
}

#[derive(Debug, Clone)]
pub struct ComponentReconciliation {
    pub supplier: VenId,
    pub outcome: ReconcileOutcome,
    /// The due deliveries the supplier should plan against.
    pub dues: Vec<DueDelivery>,
}

fn aggregate(dues: &[DueDelivery]) -> DemandVector {
    let mut v = DemandVector::new();
    for d in dues {
        *v.entry(d.period).or_insert(0) += d.quantity;
    }
    v
}

/// Compares this round's aggregate component demand per supplier with the
/// previous round's. The change is absorbed when no period demands more
/// than before (net per-period change <= 0 everywhere); the supplier then
/// keeps its previous due dates. Otherwise the new vector is emitted.
pub fn reconcile_shared_components(
    new_dues: &BTreeMap<VenId, Vec<DueDelivery>>,
    previous: Option<&BTreeMap<VenId, Vec<DueDelivery>>>,
) -> Vec<ComponentReconciliation> {
    let mut out = Vec::new();
    for (supplier, dues) in new_dues {
        let previous_dues = previous.and_then(|p| p.get(supplier));
        let verdict = match previous_dues {
            None => ReconcileOutcome::Emit,
            Some(prev) => {
                let new_agg = aggregate(dues);
                let old_agg = aggregate(prev);
                let absorbed = new_agg
                    .keys()
                    .chain(old_agg.keys())
                    .all(|t| {
                        new_agg.get(t).copied().unwrap_or(0)
                            <= old_agg.get(t).copied().unwrap_or(0)
                    });
                if absorbed {
                    ReconcileOutcome::Absorbed
                } else {
                    ReconcileOutcome::Emit
                }
            }
        };
        let dues = match verdict {
            ReconcileOutcome::Absorbed => previous_dues.unwrap().clone(),
            ReconcileOutcome::Emit => dues.clone(),
        };
        out.push(ComponentReconciliation {
            supplier: supplier.clone(),
            outcome: verdict,
            dues,
        });
    }
    out
}

// ── Backward sweep ───────────────────────────────────────────────────────

/// Everything one backward pass produces.
#[derive(Debug, Clone)]
pub struct BackwardResult {
    /// Tier plan sets in sweep order (most downstream tier first).
    pub tiers: Vec<TierPlanSet>,
    /// The (netted) due deliveries each node planned against.
    pub dues: BTreeMap<VenId, Vec<DueDelivery>>,
    /// Units served straight from opening stock, per node: (customer
    /// label, period, units).
    pub stock_served: BTreeMap<VenId, Vec<(String, Period, Quantity)>>,
    /// Original demand totals per node, before stock netting.
    pub demand_totals: BTreeMap<VenId, Quantity>,
    /// Component dues emitted to each supplier (after reconciliation).
    pub component_dues: BTreeMap<VenId, Vec<DueDelivery>>,
    pub reconciliations: Vec<ComponentReconciliation>,
    pub any_negative: bool,
}

/// Nets opening stock against dues earliest-first. Returns the remaining
/// dues and the stock-served schedule.
fn net_opening_stock(
    dues: &[DueDelivery],
    opening: Quantity,
) -> (Vec<DueDelivery>, Vec<(String, Period, Quantity)>) {
    let mut sorted: Vec<DueDelivery> = dues.to_vec();
    sorted.sort_by(|a, b| (a.period, &a.label).cmp(&(b.period, &b.label)));
    let mut remaining = opening.max(0);
    let mut netted = Vec::new();
    let mut served = Vec::new();
    for due in sorted {
        let from_stock = remaining.min(due.quantity);
        remaining -= from_stock;
        if from_stock > 0 {
            served.push((due.label.clone(), due.period, from_stock));
        }
        if due.quantity > from_stock {
            netted.push(DueDelivery::new(
                due.label.clone(),
                due.period,
                due.quantity - from_stock,
            ));
        }
    }
    (netted, served)
}

/// Runs the backward pass: tiers from most downstream to most upstream,
/// each node building one backward plan per cost weighting against its
/// fixed due dates; the chosen plans' component needs become due dates for
/// the adjacent upstream tier, subject to shared-component reconciliation
/// against the previous round.
pub fn backward_sweep(
    problem: &PlanningProblem,
    external_dues: &BTreeMap<VenId, Vec<DueDelivery>>,
    params: &[PenaltyParams],
    state: &PlanningState,
) -> BackwardResult {
    let mut result = BackwardResult {
        tiers: Vec::new(),
        dues: BTreeMap::new(),
        stock_served: BTreeMap::new(),
        demand_totals: BTreeMap::new(),
        component_dues: BTreeMap::new(),
        reconciliations: Vec::new(),
        any_negative: false,
    };
    // Dues flowing down to upstream tiers, keyed by supplier.
    let mut pending: BTreeMap<VenId, Vec<DueDelivery>> = BTreeMap::new();

    for tier in (1..=problem.topology.num_tiers).rev() {
        let mut set = TierPlanSet {
            tier,
            candidates: BTreeMap::new(),
            chosen: BTreeMap::new(),
        };
        let mut tier_component_dues: BTreeMap<VenId, Vec<DueDelivery>> = BTreeMap::new();
        for ven in problem.topology.vens_in_tier(tier) {
            let raw_dues: Vec<DueDelivery> = external_dues
                .get(ven)
                .cloned()
                .unwrap_or_default()
                .into_iter()
                .chain(pending.get(ven).cloned().unwrap_or_default())
                .collect();
            if raw_dues.is_empty() {
                continue;
            }
            let Some(profile) = problem.profiles.get(ven) else {
                continue;
            };
            let opening = state.opening_stocks.get(ven).copied().unwrap_or(0);
            let total: Quantity = raw_dues.iter().map(|d| d.quantity).sum();
            let (netted, served) = net_opening_stock(&raw_dues, opening);
            result.demand_totals.insert(ven.clone(), total);
            result.stock_served.insert(ven.clone(), served);
            result.dues.insert(ven.clone(), netted.clone());

            let candidates: Vec<CandidatePlan> = params
                .iter()
                .map(|p| CandidatePlan {
                    params: *p,
                    plan: plan_backward(profile, &netted, p),
                })
                .collect();
            set.candidates.insert(ven.clone(), candidates);
        }
        set.chosen = nat_select(&set.candidates);

        // Chosen plans' component needs, keyed by supplier.
        for (ven, _) in &set.chosen {
            let candidate = set.chosen_plan(ven).unwrap();
            if candidate.plan.infeasible_negative {
                result.any_negative = true;
            }
            let Some(product) = problem.products.get(ven) else {
                continue;
            };
            for (child, units) in problem.catalog.children_of(product) {
                let Some(supplier) = problem.topology.supplier_of(ven, child) else {
                    continue; // purchased outside the chain
                };
                for (t, q) in &candidate.plan.production {
                    tier_component_dues
                        .entry(supplier.clone())
                        .or_default()
                        .push(DueDelivery::new(ven.as_str(), *t, q * units));
                }
            }
        }
        // Merge same (customer, period) entries for stable aggregates.
        for dues in tier_component_dues.values_mut() {
            let mut merged: BTreeMap<(Period, String), Quantity> = BTreeMap::new();
            for d in dues.iter() {
                *merged.entry((d.period, d.label.clone())).or_insert(0) += d.quantity;
            }
            *dues = merged
                .into_iter()
                .map(|((p, label), q)| DueDelivery::new(label, p, q))
                .collect();
        }

        let reconciliations = reconcile_shared_components(
            &tier_component_dues,
            state.previous_component_dues.as_ref(),
        );
        for r in &reconciliations {
            pending.insert(r.supplier.clone(), r.dues.clone());
            result
                .component_dues
                .insert(r.supplier.clone(), r.dues.clone());
        }
        result.reconciliations.extend(reconciliations);
        result.tiers.push(set);
    }
    result
}

// ── Fair delay distribution ──────────────────────────────────────────────

/// Picks, from an ordered candidate list of per-customer delay vectors,
/// the first one minimizing the maximum of history + new delay, breaking
/// ties by smaller total new delay, then by candidate order.
fn choose_allocation(
    candidates: &[BTreeMap<String, i64>],
    history: &BTreeMap<String, i64>,
) -> usize {
    debug_assert!(!candidates.is_empty());
    let score = |alloc: &BTreeMap<String, i64>| -> (i64, i64) {
        let max = alloc
            .iter()
            .map(|(c, d)| history.get(c).copied().unwrap_or(0) + d)
            .max()
            .unwrap_or(0);
        let total: i64 = alloc.values().sum();
        (max, total)
    };
    let mut best = 0usize;
    let mut best_score = score(&candidates[0]);
    for (i, alloc) in candidates.iter().enumerate().skip(1) {
        let s = score(alloc);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Assigns each delay quantum to exactly one customer so that the maximum
/// cumulative disadvantage (history + newly assigned delay) is minimal;
/// ties prefer the assignment reached first when customers are tried in
/// id order per quantum. History is updated in place.
pub fn distribute_delays(
    quanta: &[i64],
    customers: &[VenId],
    history: &mut BTreeMap<String, i64>,
) -> BTreeMap<VenId, i64> {
    assert!(!customers.is_empty());
    let mut sorted: Vec<&VenId> = customers.iter().collect();
    sorted.sort();
    // Enumerate every assignment, the first quantum's customer varying
    // slowest, so candidate order is lexicographic in (quantum, customer)
    // space. Exhaustive search is fine at the scales involved.
    let n = sorted.len();
    let total = n.pow(quanta.len() as u32);
    let mut candidates: Vec<BTreeMap<String, i64>> = Vec::with_capacity(total);
    for code in 0..total {
        let mut digits = vec![0usize; quanta.len()];
        let mut c = code;
        for d in digits.iter_mut().rev() {
            *d = c % n;
            c /= n;
        }
        let mut alloc: BTreeMap<String, i64> = BTreeMap::new();
        for (q, d) in quanta.iter().zip(&digits) {
            *alloc.entry(sorted[*d].as_str().to_string()).or_insert(0) += q;
        }
        candidates.push(alloc);
    }
    let chosen = choose_allocation(&candidates, history);
    let alloc = candidates[chosen].clone();
    let mut out = BTreeMap::new();
    for ven in customers {
        let d = alloc.get(ven.as_str()).copied().unwrap_or(0);
        if d != 0 {
            *history.entry(ven.as_str().to_string()).or_insert(0) += d;
        }
        out.insert(ven.clone(), d);
    }
    out
}

// ── Forward sweep ────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct ForwardResult {
    /// Tier plan sets in sweep order (most upstream tier first).
    pub tiers: Vec<TierPlanSet>,
    /// Shipments per (supplier, customer label): period -> units.
    pub shipments: BTreeMap<(VenId, String), DemandVector>,
    /// Completion lateness per terminal node and due: the customer-facing
    /// view of the delays.
    pub terminal_delays: Vec<(VenId, String, Period)>,
    /// Total customer-facing lateness in unit-periods (every late unit
    /// charged once per period it waits).
    pub terminal_unit_period_delay: i64,
}

/// Runs the forward pass after a backward pass reached into the past:
/// release dates clamped to period 1 at the most upstream tier, plans
/// built earliest-possible tier by tier downstream, arrival-limited;
/// lateness inside equal-due groups is allocated to customers by the
/// fairness rule and recorded in the shared history.
pub fn forward_sweep(
    problem: &PlanningProblem,
    backward: &BackwardResult,
    params: &[PenaltyParams],
    history: &mut BTreeMap<String, i64>,
) -> ForwardResult {
    let mut result = ForwardResult {
        tiers: Vec::new(),
        shipments: BTreeMap::new(),
        terminal_delays: Vec::new(),
        terminal_unit_period_delay: 0,
    };

    for tier in 1..=problem.topology.num_tiers {
        let mut set = TierPlanSet {
            tier,
            candidates: BTreeMap::new(),
            chosen: BTreeMap::new(),
        };
        for ven in problem.topology.vens_in_tier(tier) {
            let Some(dues) = backward.dues.get(ven) else {
                continue;
            };
            let Some(profile) = problem.profiles.get(ven) else {
                continue;
            };
            let backward_plan = backward
                .tiers
                .iter()
                .find(|s| s.tier == tier)
                .and_then(|s| s.chosen_plan(ven));

            let releases: Vec<(Period, Quantity)> = if tier == 1 {
                // Raw purchases arrive when backward planning wanted to
                // start; negative times are replaced by the first period.
                match backward_plan {
                    Some(c) => c
                        .plan
                        .production
                        .iter()
                        .map(|(t, q)| ((*t).max(1), *q))
                        .collect(),
                    None => Vec::new(),
                }
            } else {
                buildable_releases(problem, ven, &result.shipments)
            };

            // Fairness: permute equal-due groups with several customers so
            // lateness lands on the least-disadvantaged ones.
            let ordered = allocate_equal_due_groups(profile, &releases, dues, history);

            let candidates: Vec<CandidatePlan> = params
                .iter()
                .map(|p| CandidatePlan {
                    params: *p,
                    plan: plan_forward_detailed(profile, &releases, &ordered, p).0,
                })
                .collect();
            set.candidates.insert(ven.clone(), candidates);
            set.chosen = nat_select(&set.candidates);

            // Shipments to each customer label: forward service plus
            // opening-stock service (on time at the due period).
            let chosen = set.chosen_plan(ven).unwrap();
            let (_, per_due) = plan_forward_detailed(profile, &releases, &ordered, &chosen.params);
            let terminal = problem.topology.customers_of(ven).is_empty();
            for (due, schedule) in ordered.iter().zip(&per_due) {
                let entry = result
                    .shipments
                    .entry((ven.clone(), due.label.clone()))
                    .or_default();
                for (t, q) in schedule {
                    *entry.entry(*t).or_insert(0) += q;
                    if terminal {
                        result.terminal_unit_period_delay +=
                            ((*t - due.period).max(0) as i64) * q;
                    }
                }
            }
            if let Some(served) = backward.stock_served.get(ven) {
                for (label, period, q) in served {
                    *result
                        .shipments
                        .entry((ven.clone(), label.clone()))
                        .or_default()
                        .entry(*period)
                        .or_insert(0) += q;
                }
            }
            if terminal {
                for (label, delay) in &chosen.plan.delays {
                    result
                        .terminal_delays
                        .push((ven.clone(), label.clone(), *delay));
                }
            }
        }
        result.tiers.push(set);
    }
    result
}

/// Parent units buildable by each period from the component shipments
/// received so far: the minimum over components of cumulative arrivals
/// divided by units-per-parent, returned as per-period increments.
fn buildable_releases(
    problem: &PlanningProblem,
    ven: &VenId,
    shipments: &BTreeMap<(VenId, String), DemandVector>,
) -> Vec<(Period, Quantity)> {
    let Some(product) = problem.products.get(ven) else {
        return Vec::new();
    };
    let children = problem.catalog.children_of(product);
    if children.is_empty() {
        // No in-chain components: release everything up front.
        return vec![(1, Quantity::MAX / 4)];
    }
    let mut arrival_periods: Vec<Period> = Vec::new();
    let mut arrivals: Vec<(&ProductId, Quantity, &DemandVector)> = Vec::new();
    static EMPTY: std::sync::OnceLock<DemandVector> = std::sync::OnceLock::new();
    let empty = EMPTY.get_or_init(DemandVector::new);
    for (child, units) in children {
        let supplier = problem.topology.supplier_of(ven, child);
        let schedule = supplier
            .and_then(|s| shipments.get(&(s.clone(), ven.as_str().to_string())))
            .unwrap_or(empty);
        arrival_periods.extend(schedule.keys().copied());
        arrivals.push((child, *units, schedule));
    }
    arrival_periods.sort_unstable();
    arrival_periods.dedup();
    let mut out = Vec::new();
    let mut released: Quantity = 0;
    for t in arrival_periods {
        let buildable = arrivals
            .iter()
            .map(|(_, units, schedule)| {
                let cum: Quantity = schedule
                    .iter()
                    .filter(|(p, _)| **p <= t)
                    .map(|(_, q)| *q)
                    .sum();
                cum / *units
            })
            .min()
            .unwrap_or(0);
        if buildable > released {
            out.push((t.max(1), buildable - released));
            released = buildable;
        }
    }
    out
}

/// Groups dues by period; inside groups with several customers, tries the
/// customer orderings and keeps the one the fairness rule selects, charging
/// the chosen unit-period delays to the history.
fn allocate_equal_due_groups(
    profile: &CapacityProfile,
    releases: &[(Period, Quantity)],
    dues: &[DueDelivery],
    history: &mut BTreeMap<String, i64>,
) -> Vec<DueDelivery> {
    // Canonical order: by period, then label.
    let mut ordered: Vec<DueDelivery> = dues.to_vec();
    ordered.sort_by(|a, b| (a.period, &a.label).cmp(&(b.period, &b.label)));

    let probe_params = PenaltyParams {
        weight_set_id: 0,
        holding_rate: 0,
        production_rate: 0,
        delay_rate: 1,
    };
    let unit_period_delays = |dues: &[DueDelivery]| -> Vec<i64> {
        let (plan, per_due) = plan_forward_detailed(profile, releases, dues, &probe_params);
        let _ = plan;
        per_due
            .iter()
            .zip(dues)
            .map(|(schedule, due)| {
                schedule
                    .iter()
                    .map(|(t, q)| ((t - due.period).max(0) as i64) * q)
                    .sum()
            })
            .collect()
    };

    let periods: Vec<Period> = {
        let mut p: Vec<Period> = ordered.iter().map(|d| d.period).collect();
        p.dedup();
        p
    };
    for period in periods {
        let idx: Vec<usize> = ordered
            .iter()
            .enumerate()
            .filter(|(_, d)| d.period == period)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < 2 {
            continue;
        }
        let baseline = unit_period_delays(&ordered);
        if idx.iter().all(|i| baseline[*i] == 0) {
            continue;
        }
        // Enumerate permutations of the group in lexicographic label order.
        let group: Vec<DueDelivery> = idx.iter().map(|i| ordered[*i].clone()).collect();
        let mut perms: Vec<Vec<DueDelivery>> = Vec::new();
        permutations(&group, &mut Vec::new(), &mut vec![false; group.len()], &mut perms);
        let mut candidates: Vec<BTreeMap<String, i64>> = Vec::new();
        for perm in &perms {
            let mut trial = ordered.clone();
            for (slot, due) in idx.iter().zip(perm) {
                trial[*slot] = due.clone();
            }
            let delays = unit_period_delays(&trial);
            let mut alloc = BTreeMap::new();
            for i in &idx {
                *alloc.entry(trial[*i].label.clone()).or_insert(0) += delays[*i];
            }
            candidates.push(alloc);
        }
        let chosen = choose_allocation(&candidates, history);
        for (slot, due) in idx.iter().zip(&perms[chosen]) {
            ordered[*slot] = due.clone();
        }
        for (label, delay) in &candidates[chosen] {
            if *delay > 0 {
                *history.entry(label.clone()).or_insert(0) += delay;
            }
        }
    }
    ordered
}

fn permutations(
    items: &[DueDelivery],
    current: &mut Vec<DueDelivery>,
    used: &mut Vec<bool>,
    out: &mut Vec<Vec<DueDelivery>>,
) {
    if current.len() == items.len() {
        out.push(current.clone());
        return;
    }
    for i in 0..items.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        current.push(items[i].clone());
        permutations(items, current, used, out);
        current.pop();
        used[i] = false;
    }
}

// ── Convergence ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Satisfied { iteration: u64 },
    BestEffort,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Satisfied { iteration } => write!(f, "satisfied, iteration {iteration}"),
            Verdict::BestEffort => write!(f, "best-effort"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub iteration: u64,
    pub param_set_index: usize,
    pub backward: BackwardResult,
    pub forward: Option<ForwardResult>,
    pub total_cost: Money,
    pub total_delay_unit_periods: i64,
    pub max_terminal_delay: Period,
    pub margin: Money,
    pub satisfied: bool,
}

impl IterationReport {
    /// The plan sets that count for this iteration: forward plans when the
    /// fallback ran, otherwise the backward plans.
    pub fn effective_tiers(&self) -> &[TierPlanSet] {
        match &self.forward {
            Some(f) => &f.tiers,
            None => &self.backward.tiers,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanningOutcome {
    pub verdict: Verdict,
    pub iterations: Vec<IterationReport>,
    pub best_iteration: usize,
    pub closing_stocks: BTreeMap<VenId, Quantity>,
}

impl PlanningOutcome {
    pub fn best(&self) -> &IterationReport {
        &self.iterations[self.best_iteration]
    }
}

/// The outer loop: backward pass, forward fallback when backward plans
/// reach into the past, then the satisfaction check (customer delays
/// within tolerance and chain benefit non-negative). Dissatisfaction walks
/// to the next cost-weight set; the loop is bounded by nodes x periods and
/// keeps the cheapest plan set seen.
pub fn converge(problem: &PlanningProblem, state: &mut PlanningState) -> PlanningOutcome {
    let bound = problem.iteration_bound();
    let external = problem.external_dues(state);
    let mut iterations: Vec<IterationReport> = Vec::new();
    let mut verdict = Verdict::BestEffort;

    for iteration in 1..=bound {
        let set_index = ((iteration - 1) as usize).min(problem.param_sets.len() - 1);
        let params = &problem.param_sets[set_index];
        let backward = backward_sweep(problem, &external, params, state);
        let forward = if backward.any_negative {
            Some(forward_sweep(
                problem,
                &backward,
                params,
                &mut state.delay_history,
            ))
        } else {
            None
        };

        let tiers: &[TierPlanSet] = match &forward {
            Some(f) => &f.tiers,
            None => &backward.tiers,
        };
        let total_cost: Money = tiers
            .iter()
            .flat_map(|set| {
                set.chosen
                    .keys()
                    .map(|ven| set.chosen_plan(ven).unwrap().plan.total_cost())
            })
            .sum();
        let (max_terminal_delay, total_delay_unit_periods) = match &forward {
            None => (0, 0),
            Some(f) => {
                let max = f
                    .terminal_delays
                    .iter()
                    .map(|(_, _, d)| *d)
                    .max()
                    .unwrap_or(0);
                (max, f.terminal_unit_period_delay)
            }
        };

        // Chain benefit: deliveries priced per node against plan costs.
        let ledger: Vec<LedgerEntry> = problem
            .topology
            .vens
            .keys()
            .map(|ven| {
                let selling = backward.demand_totals.get(ven).copied().unwrap_or(0)
                    * problem.unit_prices.get(ven).copied().unwrap_or(0);
                let costs = tiers
                    .iter()
                    .filter_map(|set| set.chosen_plan(ven))
                    .map(|c| c.plan.total_cost())
                    .sum();
                LedgerEntry {
                    ven: ven.clone(),
                    selling,
                    costs,
                }
            })
            .collect();
        let (benefit_ok, margin) = crate::mediator::check_global_benefit(&ledger);
        let satisfied = max_terminal_delay <= problem.tolerance && benefit_ok;

        // Next round's reconciliation baseline.
        state.previous_component_dues = Some(backward.component_dues.clone());

        iterations.push(IterationReport {
            iteration,
            param_set_index: set_index,
            backward,
            forward,
            total_cost,
            total_delay_unit_periods,
            max_terminal_delay,
            margin,
            satisfied,
        });
        if satisfied {
            verdict = Verdict::Satisfied { iteration };
            break;
        }
    }

    let best_iteration = iterations
        .iter()
        .enumerate()
        .min_by_key(|(_, r)| r.total_cost)
        .map(|(i, _)| i)
        .unwrap_or(0);

    let closing_stocks: BTreeMap<VenId, Quantity> = problem
        .topology
        .vens
        .keys()
        .map(|ven| {
            let opening = state.opening_stocks.get(ven).copied().unwrap_or(0);
            let demand = iterations[best_iteration]
                .backward
                .demand_totals
                .get(ven)
                .copied()
                .unwrap_or(0);
            (ven.clone(), (opening - demand).max(0))
        })
        .collect();

    PlanningOutcome {
        verdict,
        iterations,
        best_iteration,
        closing_stocks,
    }
}

// ── Rolling horizon ──────────────────────────────────────────────────────

/// Shifts the planning window by one period: forecasts move left by one
/// with the supplied corrections, a fresh forecast enters at the horizon,
/// and opening stocks take the observed values. The previous component
/// dues stay as the warm-start baseline for reconciliation.
pub fn roll_horizon(
    state: &mut PlanningState,
    new_tail: &BTreeMap<VenId, Quantity>,
    corrections: &BTreeMap<VenId, BTreeMap<Period, i64>>,
    stock_observations: &BTreeMap<VenId, Quantity>,
) {
    for (ven, forecast) in state.forecasts.iter_mut() {
        let horizon = forecast.len();
        if horizon == 0 {
            continue;
        }
        let empty = BTreeMap::new();
        let deltas = corrections.get(ven).unwrap_or(&empty);
        let mut next = Vec::with_capacity(horizon);
        for t in 1..horizon {
            let shifted = forecast[t];
            let corrected = shifted as i64 + deltas.get(&(t as Period)).copied().unwrap_or(0);
            next.push(corrected.max(0));
        }
        next.push(new_tail.get(ven).copied().unwrap_or(0).max(0));
        *forecast = next;
    }
    for (ven, stock) in stock_observations {
        state.opening_stocks.insert(ven.clone(), (*stock).max(0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Ratio;

    fn params(id: u32, holding: Money, production: Money, delay: Money) -> PenaltyParams {
        PenaltyParams {
            weight_set_id: id,
            holding_rate: holding,
            production_rate: production,
            delay_rate: delay,
        }
    }

    fn uniform_profile(horizon: Period, capacity: Quantity) -> CapacityProfile {
        CapacityProfile::uniform(horizon, capacity, Ratio::from_int(1).unwrap())
    }

    /// Two tiers, one node each: mill (tier 1) supplies boards to shop
    /// (tier 2).
    fn two_tier_problem(mill_capacity: Quantity) -> PlanningProblem {
        let mut vens = BTreeMap::new();
        vens.insert(VenId::from("mill"), 1);
        vens.insert(VenId::from("shop"), 2);
        let supply_edges = [crate::model::SupplyEdge {
            supplier: VenId::from("mill"),
            customer: VenId::from("shop"),
            product: ProductId::from("board"),
        }]
        .into_iter()
        .collect();
        let topology = Topology {
            num_tiers: 2,
            vens,
            supply_edges,
        };
        let mut products_catalog = crate::model::ProductCatalog::default();
        products_catalog.products.insert(
            ProductId::from("board"),
            crate::model::ProductSpec {
                children: BTreeMap::new(),
            },
        );
        let mut chair_children = BTreeMap::new();
        chair_children.insert(ProductId::from("board"), 2);
        products_catalog.products.insert(
            ProductId::from("chair"),
            crate::model::ProductSpec {
                children: chair_children,
            },
        );
        let mut profiles = BTreeMap::new();
        profiles.insert(VenId::from("mill"), uniform_profile(8, mill_capacity));
        profiles.insert(VenId::from("shop"), uniform_profile(8, 10));
        let mut products = BTreeMap::new();
        products.insert(VenId::from("mill"), ProductId::from("board"));
        products.insert(VenId::from("shop"), ProductId::from("chair"));
        let mut unit_prices = BTreeMap::new();
        unit_prices.insert(VenId::from("shop"), 100);
        PlanningProblem {
            topology,
            catalog: products_catalog,
            profiles,
            products,
            param_sets: vec![vec![params(1, 1, 2, 5)]],
            tolerance: 0,
            unit_prices,
            max_iterations: None,
        }
    }

    fn state_with_forecast(ven: &str, forecast: Vec<Quantity>) -> PlanningState {
        let mut forecasts = BTreeMap::new();
        forecasts.insert(VenId::from(ven), forecast);
        PlanningState {
            forecasts,
            ..Default::default()
        }
    }

    #[test]
    fn backward_sweep_propagates_component_dues() {
        let problem = two_tier_problem(50);
        let state = state_with_forecast("shop", vec![0, 0, 0, 0, 6, 0, 0, 0]);
        let external = problem.external_dues(&state);
        let result = backward_sweep(&problem, &external, &problem.param_sets[0], &state);
        assert!(!result.any_negative);
        // Shop plans 6 chairs at period 5; the mill owes 12 boards at 5.
        let mill_dues = result.dues.get(&VenId::from("mill")).unwrap();
        assert_eq!(mill_dues.len(), 1);
        assert_eq!(mill_dues[0].period, 5);
        assert_eq!(mill_dues[0].quantity, 12);
        assert_eq!(mill_dues[0].label, "shop");
        // Coherence: inter-tier delivery dates match downstream production.
        let shop_plan = &result.tiers[0]
            .chosen_plan(&VenId::from("shop"))
            .unwrap()
            .plan;
        assert_eq!(shop_plan.production.get(&5), Some(&6));
    }

    #[test]
    fn backward_sweep_flags_tight_upstream() {
        let problem = two_tier_problem(2);
        let state = state_with_forecast("shop", vec![0, 0, 6, 0, 0, 0, 0, 0]);
        let external = problem.external_dues(&state);
        let result = backward_sweep(&problem, &external, &problem.param_sets[0], &state);
        // 12 boards due at period 3 with capacity 2/period: production
        // starts at period -2.
        assert!(result.any_negative);
        let mill_plan = &result.tiers[1]
            .chosen_plan(&VenId::from("mill"))
            .unwrap()
            .plan;
        assert!(mill_plan.infeasible_negative);
        assert!(mill_plan.production.keys().any(|t| *t <= 0));
    }

    #[test]
    fn nat_select_takes_minimum_cost() {
        let cheap = CandidatePlan {
            params: params(2, 0, 1, 0),
            plan: plan_backward(
                &uniform_profile(5, 10),
                &[DueDelivery::new("d", 3, 5)],
                &params(2, 0, 1, 0),
            ),
        };
        let pricey = CandidatePlan {
            params: params(1, 0, 20, 0),
            plan: plan_backward(
                &uniform_profile(5, 10),
                &[DueDelivery::new("d", 3, 5)],
                &params(1, 0, 20, 0),
            ),
        };
        let mut candidates = BTreeMap::new();
        candidates.insert(VenId::from("v"), vec![pricey, cheap]);
        let chosen = nat_select(&candidates);
        assert_eq!(chosen.get(&VenId::from("v")), Some(&1));
    }

    #[test]
    fn nat_select_breaks_ties_by_weight_set_id() {
        let a = CandidatePlan {
            params: params(2, 0, 1, 0),
            plan: plan_backward(
                &uniform_profile(5, 10),
                &[DueDelivery::new("d", 3, 5)],
                &params(2, 0, 1, 0),
            ),
        };
        let b = CandidatePlan {
            params: params(1, 0, 1, 0),
            plan: plan_backward(
                &uniform_profile(5, 10),
                &[DueDelivery::new("d", 3, 5)],
                &params(1, 0, 1, 0),
            ),
        };
        let mut candidates = BTreeMap::new();
        candidates.insert(VenId::from("v"), vec![a, b]);
        let chosen = nat_select(&candidates);
        // Equal cost: the lower weight_set_id (1) wins, at index 1.
        assert_eq!(chosen.get(&VenId::from("v")), Some(&1));
    }

    #[test]
    fn nat_select_matches_bruteforce_minimum() {
        let profile = uniform_profile(6, 8);
        let dues = vec![DueDelivery::new("d", 4, 10), DueDelivery::new("e", 6, 6)];
        let combos = vec![params(1, 3, 2, 1), params(2, 1, 4, 2), params(3, 2, 2, 2)];
        let candidates_list: Vec<CandidatePlan> = combos
            .iter()
            .map(|p| CandidatePlan {
                params: *p,
                plan: plan_backward(&profile, &dues, p),
            })
            .collect();
        let oracle = candidates_list
            .iter()
            .map(|c| c.plan.total_cost())
            .min()
            .unwrap();
        let mut candidates = BTreeMap::new();
        candidates.insert(VenId::from("v"), candidates_list);
        let chosen = nat_select(&candidates);
        let idx = chosen[&VenId::from("v")];
        assert_eq!(candidates[&VenId::from("v")][idx].plan.total_cost(), oracle);
    }

    #[test]
    fn reconcile_absorbs_exact_offsets() {
        // Previous round: A at period 5, B at period 4. New round: A moved
        // to 4, B to 5. Aggregates match period by period.
        let mut new_dues = BTreeMap::new();
        new_dues.insert(
            VenId::from("sup"),
            vec![
                DueDelivery::new("A", 4, 10),
                DueDelivery::new("B", 5, 10),
            ],
        );
        let mut previous = BTreeMap::new();
        previous.insert(
            VenId::from("sup"),
            vec![
                DueDelivery::new("A", 5, 10),
                DueDelivery::new("B", 4, 10),
            ],
        );
        let verdicts = reconcile_shared_components(&new_dues, Some(&previous));
        assert_eq!(verdicts.len(), 1);
        assert_eq!(verdicts[0].outcome, ReconcileOutcome::Absorbed);
        // Absorbed: the supplier keeps the previous dues.
        assert_eq!(verdicts[0].dues, previous[&VenId::from("sup")]);
    }

    #[test]
    fn reconcile_emits_when_both_advance() {
        let mut new_dues = BTreeMap::new();
        new_dues.insert(
            VenId::from("sup"),
            vec![DueDelivery::new("A", 4, 10), DueDelivery::new("B", 4, 10)],
        );
        let mut previous = BTreeMap::new();
        previous.insert(
            VenId::from("sup"),
            vec![DueDelivery::new("A", 5, 10), DueDelivery::new("B", 5, 10)],
        );
        let verdicts = reconcile_shared_components(&new_dues, Some(&previous));
        assert_eq!(verdicts[0].outcome, ReconcileOutcome::Emit);
        assert_eq!(verdicts[0].dues, new_dues[&VenId::from("sup")]);
    }

    #[test]
    fn reconcile_matches_per_period_summation_oracle() {
        // Randomized-ish shift grid checked against independent summation.
        let shifts: Vec<(Period, Period, Quantity)> = vec![
            (3, 4, 5),
            (4, 3, 5),
            (2, 2, 7),
            (5, 2, 3),
            (2, 5, 3),
        ];
        for (a_new, b_new, q) in shifts {
            let mut new_dues = BTreeMap::new();
            new_dues.insert(
                VenId::from("sup"),
                vec![
                    DueDelivery::new("A", a_new, q),
                    DueDelivery::new("B", b_new, q),
                ],
            );
            let mut previous = BTreeMap::new();
            previous.insert(
                VenId::from("sup"),
                vec![DueDelivery::new("A", 3, q), DueDelivery::new("B", 4, q)],
            );
            let verdicts = reconcile_shared_components(&new_dues, Some(&previous));
            // Oracle: sum per period independently and compare.
            let mut net: BTreeMap<Period, i64> = BTreeMap::new();
            for d in &new_dues[&VenId::from("sup")] {
                *net.entry(d.period).or_insert(0) += d.quantity as i64;
            }
            for d in &previous[&VenId::from("sup")] {
                *net.entry(d.period).or_insert(0) -= d.quantity as i64;
            }
            let absorbed = net.values().all(|v| *v <= 0);
            let expected = if absorbed {
                ReconcileOutcome::Absorbed
            } else {
                ReconcileOutcome::Emit
            };
            assert_eq!(verdicts[0].outcome, expected, "case {a_new}/{b_new}/{q}");
        }
    }

    #[test]
    fn forward_sweep_recovers_negative_case_with_delay() {
        let problem = two_tier_problem(2);
        let mut state = state_with_forecast("shop", vec![0, 0, 6, 0, 0, 0, 0, 0]);
        let external = problem.external_dues(&state);
        let backward = backward_sweep(&problem, &external, &problem.param_sets[0], &state);
        assert!(backward.any_negative);
        let forward = forward_sweep(
            &problem,
            &backward,
            &problem.param_sets[0],
            &mut state.delay_history,
        );
        // Mill: 12 boards, releases clamped to period 1, capacity 2: last
        // board ready at period 6, so the shop finishes 6 chairs at 6,
        // three periods after the due date 3.
        let max_delay = forward
            .terminal_delays
            .iter()
            .map(|(_, _, d)| *d)
            .max()
            .unwrap();
        assert_eq!(max_delay, 3);
    }

    #[test]
    fn clamping_shifts_completion_by_the_clamped_amount() {
        // Uniform capacity: releasing at 1 instead of -2 pushes completion
        // out by exactly 3 periods.
        let profile = uniform_profile(10, 2);
        let dues = vec![DueDelivery::new("d", 3, 12)];
        let p = params(1, 0, 0, 1);
        let plan = plan_backward(&profile, &dues, &p);
        assert!(plan.infeasible_negative);
        let earliest = *plan.production.keys().next().unwrap();
        assert_eq!(earliest, -2);
        let releases: Vec<(Period, Quantity)> = plan
            .production
            .iter()
            .map(|(t, q)| ((*t).max(1), *q))
            .collect();
        let (forward, _) = plan_forward_detailed(&profile, &releases, &dues, &p);
        assert_eq!(forward.delays[0].1, 3);
    }

    #[test]
    fn distribute_delays_alternates_between_symmetric_customers() {
        let customers = vec![VenId::from("A"), VenId::from("B")];
        let mut history = BTreeMap::new();
        let first = distribute_delays(&[2], &customers, &mut history);
        assert_eq!(first.get(&VenId::from("A")), Some(&2));
        assert_eq!(first.get(&VenId::from("B")), Some(&0));
        let second = distribute_delays(&[2], &customers, &mut history);
        assert_eq!(second.get(&VenId::from("A")), Some(&0));
        assert_eq!(second.get(&VenId::from("B")), Some(&2));
        assert_eq!(history.get("A"), Some(&2));
        assert_eq!(history.get("B"), Some(&2));
    }

    #[test]
    fn distribute_delays_prefers_low_history() {
        let customers = vec![VenId::from("A"), VenId::from("B")];
        let mut history = BTreeMap::new();
        history.insert("A".to_string(), 5);
        let out = distribute_delays(&[1], &customers, &mut history);
        assert_eq!(out.get(&VenId::from("B")), Some(&1));
    }

    #[test]
    fn distribute_delays_matches_bruteforce_minmax() {
        let customers = vec![VenId::from("A"), VenId::from("B"), VenId::from("C")];
        let cases: Vec<(Vec<i64>, Vec<i64>)> = vec![
            (vec![3, 2, 2], vec![0, 0, 0]),
            (vec![4, 1], vec![2, 0, 1]),
            (vec![1, 1, 1, 1], vec![0, 3, 1]),
            (vec![5], vec![4, 4, 0]),
        ];
        for (quanta, hist) in cases {
            let mut history: BTreeMap<String, i64> = BTreeMap::new();
            for (v, h) in customers.iter().zip(&hist) {
                history.insert(v.as_str().to_string(), *h);
            }
            let mut working = history.clone();
            let out = distribute_delays(&quanta, &customers, &mut working);
            let achieved = customers
                .iter()
                .map(|v| history[v.as_str()] + out[v])
                .max()
                .unwrap();
            // Brute force every assignment.
            let n = customers.len();
            let mut best = i64::MAX;
            for code in 0..n.pow(quanta.len() as u32) {
                let mut totals: Vec<i64> =
                    customers.iter().map(|v| history[v.as_str()]).collect();
                let mut c = code;
                for q in &quanta {
                    totals[c % n] += q;
                    c /= n;
                }
                best = best.min(*totals.iter().max().unwrap());
            }
            assert_eq!(achieved, best, "quanta {quanta:?} hist {hist:?}");
        }
    }

    #[test]
    fn converge_satisfies_feasible_chain_first_iteration() {
        let problem = two_tier_problem(50);
        let mut state = state_with_forecast("shop", vec![0, 0, 0, 0, 6, 0, 0, 0]);
        let outcome = converge(&problem, &mut state);
        assert_eq!(outcome.verdict, Verdict::Satisfied { iteration: 1 });
        assert_eq!(outcome.iterations.len(), 1);
        assert!(outcome.best().margin >= 0);
    }

    #[test]
    fn converge_hits_the_bound_on_impossible_demand() {
        let mut problem = two_tier_problem(0);
        problem.profiles.insert(
            VenId::from("shop"),
            uniform_profile(8, 0),
        );
        problem.max_iterations = None;
        let mut state = state_with_forecast("shop", vec![0, 0, 6, 0, 0, 0, 0, 0]);
        let outcome = converge(&problem, &mut state);
        assert_eq!(outcome.verdict, Verdict::BestEffort);
        assert_eq!(outcome.iterations.len() as u64, problem.iteration_bound());
    }

    #[test]
    fn converge_reweights_to_satisfaction_on_second_set() {
        // First weight set prices production above the selling price; the
        // second set is affordable. The grid walk lands on "satisfied" at
        // iteration 2, matching the exhaustive minimum over the grid.
        let mut problem = two_tier_problem(50);
        problem.param_sets = vec![vec![params(1, 0, 1000, 1)], vec![params(2, 0, 1, 1)]];
        let mut state = state_with_forecast("shop", vec![0, 0, 0, 0, 6, 0, 0, 0]);
        let outcome = converge(&problem, &mut state);
        assert_eq!(outcome.verdict, Verdict::Satisfied { iteration: 2 });
        let grid_best: Money = outcome
            .iterations
            .iter()
            .map(|r| r.total_cost)
            .min()
            .unwrap();
        assert_eq!(outcome.best().total_cost, grid_best);
    }

    #[test]
    fn roll_horizon_shifts_and_corrects() {
        let mut state = state_with_forecast("shop", vec![1, 2, 3, 4, 5]);
        let mut tail = BTreeMap::new();
        tail.insert(VenId::from("shop"), 9);
        let mut corrections = BTreeMap::new();
        let mut deltas = BTreeMap::new();
        deltas.insert(3 as Period, 10i64);
        corrections.insert(VenId::from("shop"), deltas);
        roll_horizon(&mut state, &tail, &corrections, &BTreeMap::new());
        assert_eq!(
            state.forecasts[&VenId::from("shop")],
            vec![2, 3, 14, 5, 9]
        );
    }

    #[test]
    fn roll_horizon_twice_equals_double_shift_without_corrections() {
        let mut rolled = state_with_forecast("shop", vec![1, 2, 3, 4, 5]);
        let mut tail1 = BTreeMap::new();
        tail1.insert(VenId::from("shop"), 6);
        let mut tail2 = BTreeMap::new();
        tail2.insert(VenId::from("shop"), 7);
        roll_horizon(&mut rolled, &tail1, &BTreeMap::new(), &BTreeMap::new());
        roll_horizon(&mut rolled, &tail2, &BTreeMap::new(), &BTreeMap::new());
        assert_eq!(
            rolled.forecasts[&VenId::from("shop")],
            vec![3, 4, 5, 6, 7]
        );
    }

    #[test]
    fn roll_horizon_updates_opening_stocks() {
        let mut state = state_with_forecast("shop", vec![1, 2, 3]);
        let mut obs = BTreeMap::new();
        obs.insert(VenId::from("shop"), 4);
        obs.insert(VenId::from("mill"), 2);
        roll_horizon(&mut state, &BTreeMap::new(), &BTreeMap::new(), &obs);
        assert_eq!(state.opening_stocks.get(&VenId::from("shop")), Some(&4));
        assert_eq!(state.opening_stocks.get(&VenId::from("mill")), Some(&2));
    }
}
