//! Behavior of a single enterprise: demand estimation against the
//! bottleneck load, quoting, backward/forward local planning, and the
//! negotiation reply taxonomy.
//!
//! Every function here is pure: booked-capacity changes come back as a new
//! profile value and the caller decides what to keep.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{CapacityProfile, DueDelivery, JobRequest, Order, Plan, Proposal};
use crate::num::{Money, Period, Quantity};
use crate::scenario::PenaltyParams;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VenError {
    /// In-house production alone would already blow the order budget;
    /// the order must be rejected outright.
    #[error("in-house cost {cost} exceeds the order budget {max_cost}")]
    InfeasibleBudget { cost: Money, max_cost: Money },
}

/// Outcome of the in-house demand estimation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InHouseKind {
    AcceptFull,
    AcceptPartial,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InHouseDecision {
    pub kind: InHouseKind,
    pub in_house_quantity: Quantity,
    pub in_house_cost: Money,
    /// Demand left for the consortium: absent for a full acceptance, the
    /// whole order for a rejection with partners available.
    pub residual: Option<JobRequest>,
}

/// Result of estimating a demand: the decision plus the profile with the
/// in-house share booked into idle capacity.
#[derive(Debug, Clone)]
pub struct EstimateOutcome {
    pub decision: InHouseDecision,
    pub booked_profile: CapacityProfile,
}

/// Compares the load induced by a new order with the idle capacity of the
/// bottleneck activity, period by period, up to the due date.
///
/// The in-house share is the largest quantity producible by the due date;
/// its load is booked filling periods latest-first, which keeps holding
/// minimal and mirrors the backward-planning rule. The leftover becomes a
/// job request for the broker: quantity is the uncovered remainder, the
/// minimum is reduced by the in-house share (scenario override allowed),
/// and the budget is the order budget minus the in-house cost.
pub fn estimate_demand(
    profile: &CapacityProfile,
    order: &Order,
) -> Result<EstimateOutcome, VenError> {
    debug_assert!(order.due_date <= profile.horizon);
    let producible = profile.idle_units_through(order.due_date);
    let in_house_quantity = producible.min(order.quantity);
    let in_house_cost = profile.unit_cost.cost_for(in_house_quantity);
    if in_house_cost > order.max_cost {
        return Err(VenError::InfeasibleBudget {
            cost: in_house_cost,
            max_cost: order.max_cost,
        });
    }

    let mut booked_profile = profile.clone();
    let mut remaining = in_house_quantity;
    let mut t = order.due_date.min(profile.horizon);
    while remaining > 0 && t >= 1 {
        let units = booked_profile.idle_units_at(t).min(remaining);
        if units > 0 {
            booked_profile = booked_profile
                .book(t, units * booked_profile.unit_load)
                .expect("booking within computed idle capacity");
            remaining -= units;
        }
        t -= 1;
    }
    debug_assert_eq!(remaining, 0);

    let decision = if in_house_quantity >= order.quantity {
        InHouseDecision {
            kind: InHouseKind::AcceptFull,
            in_house_quantity: order.quantity,
            in_house_cost,
            residual: None,
        }
    } else {
        let residual_quantity = order.quantity - in_house_quantity;
        let residual_min = order
            .residual_min
            .unwrap_or((order.min_quantity - in_house_quantity).max(0))
            .min(residual_quantity);
        let residual = JobRequest {
            quantity: residual_quantity,
            min_quantity: residual_min,
            due_date: order.due_date,
            latest_date: order.latest_date,
            max_cost: order.max_cost - in_house_cost,
            overtime: false,
        };
        let kind = if in_house_quantity == 0 {
            // The broker may still place the whole order with partners;
            // the caller rejects outright only when there are none.
            InHouseKind::Reject
        } else {
            InHouseKind::AcceptPartial
        };
        InHouseDecision {
            kind,
            in_house_quantity,
            in_house_cost,
            residual: Some(residual),
        }
    };
    Ok(EstimateOutcome {
        decision,
        booked_profile,
    })
}

/// A partner's quote for a job request, computed from its capacity when no
/// scripted quote applies: regular idle capacity up to the due date, plus
/// overtime capacity when the request allows it. A partner that can take
/// nothing answers a null quote.
pub fn quote(profile: &CapacityProfile, request: &JobRequest) -> Proposal {
    let partner = crate::ids::VenId::from("");
    quote_as(profile, request, partner)
}

pub fn quote_as(
    profile: &CapacityProfile,
    request: &JobRequest,
    partner: crate::ids::VenId,
) -> Proposal {
    if request.quantity <= 0 {
        return Proposal::null(partner);
    }
    let regular = profile
        .idle_units_through(request.due_date)
        .min(request.quantity);
    let overtime = if request.overtime {
        profile
            .overtime_units_through(request.due_date)
            .min(request.quantity - regular)
    } else {
        0
    };
    let quantity = regular + overtime;
    if quantity == 0 {
        return Proposal::null(partner);
    }
    let cost = profile.unit_cost.cost_for(regular) + profile.overtime_unit_cost.cost_for(overtime);
    Proposal {
        partner,
        quantity,
        cost,
        date: None,
    }
}

fn due_sorted(dues: &[DueDelivery]) -> Vec<&DueDelivery> {
    let mut sorted: Vec<&DueDelivery> = dues.iter().collect();
    sorted.sort_by_key(|d| d.period);
    sorted
}

/// Latest-possible production schedule covering the given deliveries.
///
/// Production for a delivery may land at periods <= 0 when capacity before
/// the due date is insufficient; such plans are flagged, not rejected —
/// the forward-planning fallback consumes the flag. Periods outside the
/// horizon reuse the boundary period's capacity pattern.
pub fn plan_backward(
    profile: &CapacityProfile,
    dues: &[DueDelivery],
    params: &PenaltyParams,
) -> Plan {
    let sorted = due_sorted(dues);
    let mut extra_booked: BTreeMap<Period, Quantity> = BTreeMap::new();
    let mut production: BTreeMap<Period, Quantity> = BTreeMap::new();
    let mut unplaced: Quantity = 0;

    let idle_units =
        |profile: &CapacityProfile, extra: &BTreeMap<Period, Quantity>, t: Period| -> Quantity {
            let idle = profile.idle_at(t) - extra.get(&t).copied().unwrap_or(0);
            idle / profile.unit_load
        };

    for due in sorted.iter().rev() {
        let mut remaining = due.quantity;
        let mut t = due.period;
        while remaining > 0 {
            let units = idle_units(profile, &extra_booked, t).min(remaining);
            if units > 0 {
                *production.entry(t).or_insert(0) += units;
                *extra_booked.entry(t).or_insert(0) += units * profile.unit_load;
                remaining -= units;
            }
            t -= 1;
            // Below period 1 capacity repeats the first period's pattern;
            // if that pattern yields nothing the demand can never be
            // placed, however far back we go.
            if t < 1 && profile.capacity_at(t) / profile.unit_load == 0 {
                unplaced += remaining;
                break;
            }
        }
    }

    let deliveries: Vec<(Period, Quantity)> =
        sorted.iter().map(|d| (d.period, d.quantity)).collect();
    let infeasible_negative = unplaced > 0 || production.keys().any(|t| *t <= 0);
    let delays = sorted.iter().map(|d| (d.label.clone(), 0)).collect();
    finish_plan(
        production,
        deliveries,
        delays,
        0,
        params,
        infeasible_negative,
    )
}

/// Earliest-possible production schedule given component releases.
///
/// Production in a period is bounded by idle capacity and by cumulative
/// releases; deliveries are served in due order (the slice order breaks
/// ties inside an equal-due group). Lateness is recorded per delivery as
/// the completion delay of its last unit; the penalty charges every unit
/// for every period it is late.
pub fn plan_forward(
    profile: &CapacityProfile,
    releases: &[(Period, Quantity)],
    dues: &[DueDelivery],
    params: &PenaltyParams,
) -> Plan {
    plan_forward_detailed(profile, releases, dues, params).0
}

/// As [`plan_forward`], additionally returning the service schedule per
/// due delivery (in the input slice order): the (period, units) pairs that
/// delivery actually ships in.
pub fn plan_forward_detailed(
    profile: &CapacityProfile,
    releases: &[(Period, Quantity)],
    dues: &[DueDelivery],
    params: &PenaltyParams,
) -> (Plan, Vec<Vec<(Period, Quantity)>>) {
    debug_assert!(releases.iter().all(|(p, _)| *p >= 1));
    let mut sorted: Vec<(usize, &DueDelivery)> = dues.iter().enumerate().collect();
    sorted.sort_by_key(|(i, d)| (d.period, *i));

    let total_demand: Quantity = dues.iter().map(|d| d.quantity).sum();
    let mut release_cum: BTreeMap<Period, Quantity> = BTreeMap::new();
    for (p, q) in releases {
        *release_cum.entry((*p).max(1)).or_insert(0) += q;
    }

    let mut production: BTreeMap<Period, Quantity> = BTreeMap::new();
    let mut ready_units: Vec<Period> = Vec::new(); // completion period of every produced unit
    let mut produced: Quantity = 0;
    let mut released: Quantity = 0;
    let mut t: Period = 1;
    // Beyond the horizon the last period's pattern repeats; a zero pattern
    // cannot make further progress, so stop there and leave the remainder
    // unserved (saturation, surfaced through the infeasibility flag).
    let give_up_after = profile.horizon + (total_demand.max(1) as Period) + 8;
    let mut unserved_flag = false;
    while produced < total_demand {
        released += release_cum.get(&t).copied().unwrap_or(0);
        let available = released - produced;
        let units = profile.idle_units_at(t).min(available);
        if units > 0 {
            production.insert(t, units);
            for _ in 0..units {
                ready_units.push(t);
            }
            produced += units;
        }
        t += 1;
        if t > give_up_after {
            unserved_flag = true;
            break;
        }
    }

    // Serve dues in due order from the production stream; a unit ships at
    // its due date or its completion period, whichever is later.
    let mut deliveries: BTreeMap<Period, Quantity> = BTreeMap::new();
    let mut delays: Vec<(String, Period)> = vec![(String::new(), 0); dues.len()];
    let mut schedules: Vec<Vec<(Period, Quantity)>> = vec![Vec::new(); dues.len()];
    let mut delay_penalty: Money = 0;
    let mut next_unit = 0usize;
    for (orig_idx, due) in &sorted {
        let mut completion_delay: Period = 0;
        let mut schedule: BTreeMap<Period, Quantity> = BTreeMap::new();
        for _ in 0..due.quantity {
            if next_unit >= ready_units.len() {
                // Unserved units saturate at the scan bound.
                completion_delay = completion_delay.max(give_up_after - due.period);
                delay_penalty += (give_up_after - due.period) as Money * params.delay_rate;
                continue;
            }
            let ready = ready_units[next_unit];
            next_unit += 1;
            let ship = ready.max(due.period);
            *deliveries.entry(ship).or_insert(0) += 1;
            *schedule.entry(ship).or_insert(0) += 1;
            let late = ship - due.period;
            completion_delay = completion_delay.max(late);
            delay_penalty += late as Money * params.delay_rate;
        }
        delays[*orig_idx] = (due.label.clone(), completion_delay);
        schedules[*orig_idx] = schedule.into_iter().collect();
    }
    let deliveries: Vec<(Period, Quantity)> = deliveries.into_iter().collect();
    let mut plan = finish_plan(production, deliveries, delays, delay_penalty, params, false);
    plan.infeasible_negative = unserved_flag;
    (plan, schedules)
}

fn finish_plan(
    production: BTreeMap<Period, Quantity>,
    deliveries: Vec<(Period, Quantity)>,
    delays: Vec<(String, Period)>,
    delay_penalty: Money,
    params: &PenaltyParams,
    infeasible_negative: bool,
) -> Plan {
    let mut delivered: BTreeMap<Period, Quantity> = BTreeMap::new();
    for (p, q) in &deliveries {
        *delivered.entry(*p).or_insert(0) += q;
    }
    let mut stock: BTreeMap<Period, Quantity> = BTreeMap::new();
    let mut holding_cost: Money = 0;
    let span: Vec<Period> = production
        .keys()
        .copied()
        .chain(delivered.keys().copied())
        .collect();
    if let (Some(&lo), Some(&hi)) = (span.iter().min(), span.iter().max()) {
        let mut level: Quantity = 0;
        for t in lo..=hi {
            level += production.get(&t).copied().unwrap_or(0);
            level -= delivered.get(&t).copied().unwrap_or(0);
            let level = level.max(0);
            stock.insert(t, level);
            holding_cost += level * params.holding_rate;
        }
    }
    let production_cost: Money = production.values().sum::<Quantity>() * params.production_rate;
    Plan {
        production,
        deliveries,
        stock,
        production_cost,
        holding_cost,
        delay_penalty,
        delays,
        infeasible_negative,
    }
}

// ── Negotiation replies ──────────────────────────────────────────────────

/// The four answers a contracted node can give to a requested change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplyKind {
    DeliverOk,
    DeliverWithEffort,
    DeliverWithCompensation,
    ProposeShift,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegotiationReply {
    pub kind: ReplyKind,
    /// Extra cost above regular rates; positive only for effort or
    /// compensation replies.
    pub over_cost: Money,
    /// Periods the delivery must move back; non-zero only for shifts.
    pub shift: Period,
}

/// A requested change: extra quantity needed by a period, and whether the
/// contract bands still cover it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRequest {
    pub quantity: Quantity,
    pub period: Period,
    pub within_contract: bool,
}

/// Picks the first applicable reply: idle capacity alone covers the change;
/// overtime covers it (with the overtime premium as over-cost, demanded as
/// compensation when the change exceeds contract quantities); otherwise the
/// smallest date shift that makes it fit.
pub fn negotiation_reply(profile: &CapacityProfile, delta: &ChangeRequest) -> NegotiationReply {
    let fits_by = |until: Period| -> (bool, Quantity) {
        let idle = profile.idle_units_through(until);
        if idle >= delta.quantity {
            return (true, 0);
        }
        let overtime = profile.overtime_units_through(until);
        (idle + overtime >= delta.quantity, delta.quantity - idle)
    };

    if profile.idle_units_through(delta.period) >= delta.quantity {
        return NegotiationReply {
            kind: ReplyKind::DeliverOk,
            over_cost: 0,
            shift: 0,
        };
    }
    let (fits, overtime_units) = fits_by(delta.period);
    if fits {
        let premium = profile.overtime_unit_cost.cost_for(overtime_units)
            - profile.unit_cost.cost_for(overtime_units);
        let kind = if delta.within_contract {
            ReplyKind::DeliverWithEffort
        } else {
            ReplyKind::DeliverWithCompensation
        };
        return NegotiationReply {
            kind,
            over_cost: premium.max(0),
            shift: 0,
        };
    }
    // Smallest shift that fits, scanning past the horizon where the
    // boundary capacity pattern repeats. With a zero pattern the scan
    // saturates at the bound.
    let bound = (profile.horizon - delta.period).max(0) + (delta.quantity.max(1) as Period) + 8;
    let mut idle = profile.idle_units_through(delta.period);
    let mut overtime = profile.overtime_units_through(delta.period);
    for shift in 1..=bound {
        let t = delta.period + shift;
        if t >= 1 {
            idle += profile.idle_units_at(t);
            overtime += profile.overtime_units_at(t);
        }
        if idle + overtime >= delta.quantity {
            return NegotiationReply {
                kind: ReplyKind::ProposeShift,
                over_cost: 0,
                shift,
            };
        }
    }
    NegotiationReply {
        kind: ReplyKind::ProposeShift,
        over_cost: 0,
        shift: bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{OrderId, ProductId, VenId};
    use crate::num::Ratio;

    fn params() -> PenaltyParams {
        PenaltyParams {
            weight_set_id: 1,
            holding_rate: 0,
            production_rate: 0,
            delay_rate: 1,
        }
    }

    fn order(quantity: Quantity, min_quantity: Quantity, max_cost: Money) -> Order {
        Order {
            id: OrderId::from("o"),
            client: VenId::from("client"),
            principal_supplier: VenId::from("PS"),
            product: ProductId::from("p"),
            quality: "std".into(),
            max_cost,
            quantity,
            min_quantity,
            due_date: 50,
            latest_date: 55,
            residual_min: None,
        }
    }

    #[test]
    fn golden_partial_acceptance() {
        // 500 producible units by the due date at 45 total; a 1000-unit
        // order leaves a 500-unit residual with budget 55 and minimum 250.
        let profile = CapacityProfile::uniform(55, 10, Ratio::new(45, 500).unwrap());
        let outcome = estimate_demand(&profile, &order(1000, 750, 100)).unwrap();
        let d = outcome.decision;
        assert_eq!(d.kind, InHouseKind::AcceptPartial);
        assert_eq!(d.in_house_quantity, 500);
        assert_eq!(d.in_house_cost, 45);
        let residual = d.residual.unwrap();
        assert_eq!(residual.quantity, 500);
        assert_eq!(residual.min_quantity, 250);
        assert_eq!(residual.due_date, 50);
        assert_eq!(residual.latest_date, 55);
        assert_eq!(residual.max_cost, 55);
        assert!(!residual.overtime);
        // Every period through the due date is fully booked.
        assert_eq!(outcome.booked_profile.idle_units_through(50), 0);
        assert_eq!(outcome.booked_profile.idle_units_through(55), 50);
    }

    #[test]
    fn full_acceptance_books_latest_first() {
        let profile = CapacityProfile::uniform(10, 4, Ratio::from_int(1).unwrap());
        let mut o = order(6, 6, 100);
        o.due_date = 5;
        o.latest_date = 6;
        let outcome = estimate_demand(&profile, &o).unwrap();
        assert_eq!(outcome.decision.kind, InHouseKind::AcceptFull);
        assert_eq!(outcome.decision.in_house_quantity, 6);
        assert!(outcome.decision.residual.is_none());
        // Latest-first: period 5 takes 4 units, period 4 the remaining 2.
        assert_eq!(outcome.booked_profile.booked_at(5), 4);
        assert_eq!(outcome.booked_profile.booked_at(4), 2);
        assert_eq!(outcome.booked_profile.booked_at(3), 0);
    }

    #[test]
    fn zero_capacity_yields_reject_with_full_residual() {
        let profile = CapacityProfile::uniform(55, 0, Ratio::from_int(1).unwrap());
        let outcome = estimate_demand(&profile, &order(100, 50, 40)).unwrap();
        assert_eq!(outcome.decision.kind, InHouseKind::Reject);
        assert_eq!(outcome.decision.in_house_quantity, 0);
        let residual = outcome.decision.residual.unwrap();
        assert_eq!(residual.quantity, 100);
        assert_eq!(residual.min_quantity, 50);
        assert_eq!(residual.max_cost, 40);
    }

    #[test]
    fn budget_blowout_is_an_error() {
        let profile = CapacityProfile::uniform(55, 10, Ratio::from_int(3).unwrap());
        let err = estimate_demand(&profile, &order(100, 50, 200)).unwrap_err();
        assert_eq!(
            err,
            VenError::InfeasibleBudget {
                cost: 300,
                max_cost: 200
            }
        );
    }

    #[test]
    fn residual_budget_and_cost_partition_the_order_budget() {
        let profile = CapacityProfile::uniform(20, 3, Ratio::new(7, 5).unwrap());
        let mut o = order(100, 80, 500);
        o.due_date = 10;
        o.latest_date = 12;
        let outcome = estimate_demand(&profile, &o).unwrap();
        let d = outcome.decision;
        let residual = d.residual.unwrap();
        assert_eq!(d.in_house_cost + residual.max_cost, 500);
    }

    /// Exhaustively enumerates bookings on a small profile and confirms the
    /// estimator produces the maximum in-house quantity.
    #[test]
    fn booking_matches_exhaustive_oracle() {
        let mut profile = CapacityProfile::uniform(5, 3, Ratio::from_int(1).unwrap());
        profile.capacity = vec![2, 3, 0, 4, 1];
        profile.booked = vec![1, 0, 0, 2, 0];
        let mut o = order(9, 1, 1000);
        o.due_date = 4;
        o.latest_date = 5;
        // Oracle: the best achievable in-house quantity by the due date is
        // the total idle through it, found by trying every booking order.
        let idle: Vec<Quantity> = (1..=4).map(|t| profile.idle_units_at(t)).collect();
        let oracle_max: Quantity = idle.iter().sum::<Quantity>().min(o.quantity);
        let outcome = estimate_demand(&profile, &o).unwrap();
        assert_eq!(outcome.decision.in_house_quantity, oracle_max);
        let booked_total: Quantity = (1..=4)
            .map(|t| outcome.booked_profile.booked_at(t) - profile.booked_at(t))
            .sum();
        assert_eq!(booked_total, oracle_max * profile.unit_load);
    }

    #[test]
    fn quote_scales_with_capacity_and_overtime() {
        let mut profile = CapacityProfile::uniform(10, 2, Ratio::from_int(2).unwrap());
        profile.overtime_capacity = vec![1; 10];
        profile.overtime_unit_cost = Ratio::from_int(5).unwrap();
        let request = JobRequest {
            quantity: 30,
            min_quantity: 0,
            due_date: 5,
            latest_date: 8,
            max_cost: 1000,
            overtime: false,
        };
        let p = quote_as(&profile, &request, VenId::from("x"));
        assert_eq!((p.quantity, p.cost), (10, 20));
        let mut with_ot = request.clone();
        with_ot.overtime = true;
        let p = quote_as(&profile, &with_ot, VenId::from("x"));
        assert_eq!((p.quantity, p.cost), (15, 45));
    }

    #[test]
    fn zero_request_yields_null_quote() {
        let profile = CapacityProfile::uniform(10, 2, Ratio::from_int(2).unwrap());
        let request = JobRequest {
            quantity: 0,
            min_quantity: 0,
            due_date: 5,
            latest_date: 8,
            max_cost: 0,
            overtime: false,
        };
        let p = quote_as(&profile, &request, VenId::from("x"));
        assert!(p.is_null());
        assert_eq!(p.cost, 0);
    }

    #[test]
    fn backward_plan_fills_latest_periods() {
        let profile = CapacityProfile::uniform(6, 10, Ratio::from_int(1).unwrap());
        let plan = plan_backward(&profile, &[DueDelivery::new("d", 5, 30)], &params());
        let expected: BTreeMap<Period, Quantity> = [(3, 10), (4, 10), (5, 10)].into();
        assert_eq!(plan.production, expected);
        assert!(!plan.infeasible_negative);
        assert!(plan.check_stock_balance().is_empty());
    }

    #[test]
    fn backward_plan_flags_negative_periods() {
        let profile = CapacityProfile::uniform(6, 10, Ratio::from_int(1).unwrap());
        let plan = plan_backward(&profile, &[DueDelivery::new("d", 2, 50)], &params());
        assert!(plan.infeasible_negative);
        let periods: Vec<Period> = plan.production.keys().copied().collect();
        assert_eq!(periods, vec![-2, -1, 0, 1, 2]);
        assert!(plan.production.values().all(|q| *q == 10));
    }

    #[test]
    fn backward_plan_with_zero_capacity_still_flags() {
        let profile = CapacityProfile::uniform(4, 0, Ratio::from_int(1).unwrap());
        let plan = plan_backward(&profile, &[DueDelivery::new("d", 3, 5)], &params());
        assert!(plan.infeasible_negative);
    }

    /// Latest-possible oracle: per period (descending) the schedule takes
    /// everything eligible, so cumulative production from the end must be
    /// maximal. Checked by brute force on small instances.
    #[test]
    fn backward_plan_matches_exhaustive_oracle() {
        let capacities = [vec![2, 1, 3, 2, 1, 2], vec![1, 1, 1, 1, 1, 1], vec![3, 0, 2, 0, 3, 1]];
        let due_sets: Vec<Vec<DueDelivery>> = vec![
            vec![DueDelivery::new("a", 4, 3), DueDelivery::new("b", 6, 2)],
            vec![DueDelivery::new("a", 2, 2), DueDelivery::new("b", 5, 4)],
            vec![DueDelivery::new("a", 3, 1)],
        ];
        for capacity in &capacities {
            for dues in &due_sets {
                let mut profile =
                    CapacityProfile::uniform(6, 0, Ratio::from_int(1).unwrap());
                profile.capacity = capacity.clone();
                let plan = plan_backward(&profile, dues, &params());
                // Oracle: walk periods from latest to earliest, producing as
                // much eligible demand (due >= t) as capacity allows.
                let mut remaining: Vec<(Period, Quantity)> =
                    dues.iter().map(|d| (d.period, d.quantity)).collect();
                let mut expected: BTreeMap<Period, Quantity> = BTreeMap::new();
                let max_due = dues.iter().map(|d| d.period).max().unwrap();
                let mut t = max_due;
                while remaining.iter().any(|(_, q)| *q > 0) {
                    let mut cap = profile.idle_units_at(t);
                    // Eligible demand: dues at or after t, latest first.
                    remaining.sort_by_key(|(p, _)| std::cmp::Reverse(*p));
                    for (p, q) in remaining.iter_mut() {
                        if *p >= t && *q > 0 && cap > 0 {
                            let take = cap.min(*q);
                            *q -= take;
                            cap -= take;
                            *expected.entry(t).or_insert(0) += take;
                        }
                    }
                    t -= 1;
                    if t < -20 {
                        break;
                    }
                }
                assert_eq!(plan.production, expected, "capacity {capacity:?} dues {dues:?}");
                assert_eq!(
                    plan.total_production(),
                    dues.iter().map(|d| d.quantity).sum::<Quantity>()
                );
            }
        }
    }

    #[test]
    fn forward_plan_without_pressure_has_no_delays() {
        let profile = CapacityProfile::uniform(6, 100, Ratio::from_int(1).unwrap());
        let plan = plan_forward(
            &profile,
            &[(1, 50)],
            &[DueDelivery::new("d", 3, 20), DueDelivery::new("e", 5, 30)],
            &params(),
        );
        assert_eq!(plan.delays, vec![("d".to_string(), 0), ("e".to_string(), 0)]);
        assert_eq!(plan.delay_penalty, 0);
        assert!(plan.check_stock_balance().is_empty());
    }

    #[test]
    fn forward_plan_recovers_negative_backward_case() {
        // 50 units due at period 2 with capacity 10/period: released at 1,
        // production completes at period 5, three periods late.
        let profile = CapacityProfile::uniform(6, 10, Ratio::from_int(1).unwrap());
        let plan = plan_forward(
            &profile,
            &[(1, 50)],
            &[DueDelivery::new("d", 2, 50)],
            &params(),
        );
        assert_eq!(plan.delays, vec![("d".to_string(), 3)]);
        let produced: Quantity = plan.production.values().sum();
        assert_eq!(produced, 50);
        assert_eq!(plan.production.keys().copied().max(), Some(5));
    }

    /// Forward plans must minimize total weighted delay among feasible
    /// schedules; brute-forced on small instances.
    #[test]
    fn forward_plan_matches_exhaustive_oracle() {
        let cases: Vec<(Vec<Quantity>, Vec<(Period, Quantity)>, Vec<DueDelivery>)> = vec![
            (
                vec![2, 2, 2, 2, 2, 2],
                vec![(1, 4), (3, 4)],
                vec![DueDelivery::new("a", 2, 4), DueDelivery::new("b", 4, 4)],
            ),
            (
                vec![1, 2, 1, 2, 1, 2],
                vec![(2, 5)],
                vec![DueDelivery::new("a", 3, 2), DueDelivery::new("b", 3, 3)],
            ),
            (
                vec![3, 3, 3, 3, 3, 3],
                vec![(1, 2), (4, 4)],
                vec![DueDelivery::new("a", 1, 3), DueDelivery::new("b", 5, 3)],
            ),
        ];
        for (capacity, releases, dues) in cases {
            let mut profile = CapacityProfile::uniform(6, 0, Ratio::from_int(1).unwrap());
            profile.capacity = capacity.clone();
            let plan = plan_forward(&profile, &releases, &dues, &params());

            // Oracle: enumerate all feasible production schedules over
            // periods 1..=8 and all assignments of produced units to dues,
            // minimizing total unit-lateness.
            let total: Quantity = dues.iter().map(|d| d.quantity).sum();
            let horizon = 8;
            let mut best: Money = Money::MAX;
            let mut stack: Vec<(Period, Quantity, Vec<(Period, Quantity)>)> =
                vec![(1, 0, Vec::new())];
            while let Some((t, produced, schedule)) = stack.pop() {
                if produced == total {
                    // Units ready in completion order serve dues sorted by
                    // due date — optimal for uniform unit weights.
                    let mut units: Vec<Period> = Vec::new();
                    for (p, q) in &schedule {
                        for _ in 0..*q {
                            units.push(*p);
                        }
                    }
                    let mut sorted_dues: Vec<&DueDelivery> = dues.iter().collect();
                    sorted_dues.sort_by_key(|d| d.period);
                    let mut cost: Money = 0;
                    let mut i = 0;
                    for d in sorted_dues {
                        for _ in 0..d.quantity {
                            cost += ((units[i] - d.period).max(0)) as Money;
                            i += 1;
                        }
                    }
                    best = best.min(cost);
                    continue;
                }
                if t > horizon {
                    continue;
                }
                let released: Quantity = releases
                    .iter()
                    .filter(|(p, _)| *p <= t)
                    .map(|(_, q)| q)
                    .sum();
                let cap = profile.idle_units_at(t).min(released - produced);
                for take in 0..=cap {
                    let mut next = schedule.clone();
                    if take > 0 {
                        next.push((t, take));
                    }
                    stack.push((t + 1, produced + take, next));
                }
            }
            assert_eq!(
                plan.delay_penalty, best,
                "capacity {capacity:?} releases {releases:?}"
            );
        }
    }

    #[test]
    fn reply_ok_within_idle() {
        let profile = CapacityProfile::uniform(10, 5, Ratio::from_int(1).unwrap());
        let reply = negotiation_reply(
            &profile,
            &ChangeRequest {
                quantity: 10,
                period: 4,
                within_contract: true,
            },
        );
        assert_eq!(reply.kind, ReplyKind::DeliverOk);
        assert_eq!((reply.over_cost, reply.shift), (0, 0));
    }

    #[test]
    fn reply_effort_charges_overtime_premium() {
        let mut profile = CapacityProfile::uniform(10, 1, Ratio::from_int(1).unwrap());
        profile.overtime_capacity = vec![1; 10];
        profile.overtime_unit_cost = Ratio::from_int(6).unwrap();
        // 3 units by period 2: idle covers 2, one unit runs in overtime at
        // a premium of 6 - 1 = 5.
        let reply = negotiation_reply(
            &profile,
            &ChangeRequest {
                quantity: 3,
                period: 2,
                within_contract: true,
            },
        );
        assert_eq!(reply.kind, ReplyKind::DeliverWithEffort);
        assert_eq!(reply.over_cost, 5);
    }

    #[test]
    fn reply_compensation_outside_contract() {
        let mut profile = CapacityProfile::uniform(10, 1, Ratio::from_int(1).unwrap());
        profile.overtime_capacity = vec![1; 10];
        profile.overtime_unit_cost = Ratio::from_int(6).unwrap();
        let reply = negotiation_reply(
            &profile,
            &ChangeRequest {
                quantity: 3,
                period: 2,
                within_contract: false,
            },
        );
        assert_eq!(reply.kind, ReplyKind::DeliverWithCompensation);
        assert_eq!(reply.over_cost, 5);
    }

    #[test]
    fn reply_shift_is_minimal() {
        let profile = CapacityProfile::uniform(10, 2, Ratio::from_int(1).unwrap());
        // 7 units by period 3: 6 fit; one more period covers it.
        let reply = negotiation_reply(
            &profile,
            &ChangeRequest {
                quantity: 7,
                period: 3,
                within_contract: true,
            },
        );
        assert_eq!(reply.kind, ReplyKind::ProposeShift);
        assert_eq!(reply.shift, 1);
    }
}
