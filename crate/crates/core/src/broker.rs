//! The consortium broker: solicits partner quotes, ranks them by
//! performance (cost-to-quantity ratio), decides between full acceptance,
//! overtime retry, split delivery and refusal, and runs the split-delivery
//! search with its residual bookkeeping.
//!
//! The protocol is a deterministic state machine (`BrokerMachine`) so the
//! same logic drives both the synchronous `run_protocol` entry point and
//! the message-passing engine.

use std::cmp::Ordering;

use thiserror::Error;

use crate::ids::VenId;
use crate::model::{JobRequest, Order, Proposal, RetainedSet};
use crate::num::{cmp_fractions, Money, Quantity};
use crate::ven::{InHouseDecision, InHouseKind};

// ── Ranking and retention ────────────────────────────────────────────────

/// Orders proposals by ascending performance ratio cost/quantity, compared
/// as exact fractions; ties break on partner id. Null quotes are excluded
/// before ranking. Returns the proposals paired with ranks 1..=n.
pub fn rank_by_performance(proposals: &[Proposal]) -> Vec<(Proposal, u32)> {
    let mut ranked: Vec<Proposal> = proposals.iter().filter(|p| !p.is_null()).cloned().collect();
    ranked.sort_by(|a, b| {
        cmp_fractions(a.cost, a.quantity, b.cost, b.quantity)
            .then_with(|| a.partner.cmp(&b.partner))
    });
    ranked
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p, (i + 1) as u32))
        .collect()
}

/// Greedy prefix of the ranking: keep whole quotes, in rank order, until
/// the cumulative quantity reaches the target. Quotes are never trimmed,
/// so the retained total may overshoot the target. Exhausting the list
/// below the target returns the whole ranking with the shortfall flag set.
pub fn select_retained(ranked: &[(Proposal, u32)], target: Quantity) -> RetainedSet {
    debug_assert!(target >= 0);
    let mut entries = Vec::new();
    let mut cumulative: Quantity = 0;
    for (proposal, rank) in ranked {
        if cumulative >= target {
            break;
        }
        cumulative += proposal.quantity;
        entries.push((proposal.clone(), *rank));
    }
    let shortfall = cumulative < target;
    RetainedSet::from_entries(entries, shortfall)
}

// ── Decision ─────────────────────────────────────────────────────────────

/// The broker's four options after a solicitation round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BrokerDecision {
    /// The whole requested quantity fits within budget: deliver at the due
    /// date.
    AcceptFull { first_delivery: RetainedSet },
    /// At least the minimum fits within budget: deliver it at the due date
    /// and the remainder by the latest date.
    SplitDelivery {
        first_delivery: RetainedSet,
        residual: JobRequest,
    },
    /// Not even the minimum is covered and overtime was not yet allowed:
    /// solicit again with overtime.
    RetryOvertime,
    /// Constraints are too restrictive for the consortium.
    Refuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualCase {
    /// Some proposals were dropped: subtract the retained total.
    PartialRetention,
    /// Every proposal was retained: the subtracted total equals the sum of
    /// all quoted quantities.
    FullRetention,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResidualError {
    #[error("retained cost {spent} exceeds the remaining budget {budget}")]
    NegativeBudget { spent: Money, budget: Money },
}

/// Rebuilds the job request after a first-delivery retention: quantity
/// drops by the retained total, the budget by the retained cost; the new
/// due date is the latest date and the whole residual must be delivered by
/// then, without overtime (a fresh escalation decides that separately).
pub fn update_residual(
    request: &JobRequest,
    retained: &RetainedSet,
    _case: ResidualCase,
) -> Result<JobRequest, ResidualError> {
    debug_assert!(!retained.entries.is_empty());
    let spent = retained.total_cost;
    if spent > request.max_cost {
        return Err(ResidualError::NegativeBudget {
            spent,
            budget: request.max_cost,
        });
    }
    let quantity = (request.quantity - retained.total_quantity).max(0);
    Ok(JobRequest {
        quantity,
        min_quantity: quantity,
        due_date: request.latest_date,
        latest_date: request.latest_date,
        max_cost: request.max_cost - spent,
        overtime: false,
    })
}

/// The decision rule over a round's proposals. With `S` the sum of quoted
/// quantities:
/// (a) `S` covers the full quantity and the retained-to-quantity cost fits
///     the budget: accept fully;
/// (b) `S` covers the minimum and the retained-to-minimum cost fits: split
///     the delivery;
/// (c) overtime not yet allowed: retry with overtime;
/// (d) otherwise refuse.
/// Budget checks are inclusive.
pub fn decide(request: &JobRequest, proposals: &[Proposal]) -> BrokerDecision {
    let ranked = rank_by_performance(proposals);
    let total: Quantity = ranked.iter().map(|(p, _)| p.quantity).sum();

    if total >= request.quantity {
        let retained = select_retained(&ranked, request.quantity);
        if retained.total_cost <= request.max_cost {
            return BrokerDecision::AcceptFull {
                first_delivery: retained,
            };
        }
    }
    if total >= request.min_quantity {
        let retained = select_retained(&ranked, request.min_quantity);
        if retained.total_cost <= request.max_cost {
            let case = if retained.entries.len() == ranked.len() {
                ResidualCase::FullRetention
            } else {
                ResidualCase::PartialRetention
            };
            match update_residual(request, &retained, case) {
                Ok(residual) => {
                    return BrokerDecision::SplitDelivery {
                        first_delivery: retained,
                        residual,
                    }
                }
                Err(_) => return BrokerDecision::Refuse,
            }
        }
    }
    if !request.overtime {
        BrokerDecision::RetryOvertime
    } else {
        BrokerDecision::Refuse
    }
}

// ── Split-delivery search ────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefusalStage {
    Estimate,
    InitialRound,
    OvertimeRetry,
    SplitSearch,
}

impl std::fmt::Display for RefusalStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RefusalStage::Estimate => "estimate",
            RefusalStage::InitialRound => "initial_round",
            RefusalStage::OvertimeRetry => "overtime_retry",
            RefusalStage::SplitSearch => "split_search",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("refused at {stage}: {reason}")]
pub struct Refusal {
    pub stage: RefusalStage,
    pub reason: String,
}

/// Searches for a split-delivery completion: solicit quotes for the
/// residual at the latest date without overtime; if they cover it within
/// budget, retain; otherwise, as long as the budget is not exhausted,
/// escalate once to overtime and retry; else refuse.
pub fn split_delivery_search(
    residual: &JobRequest,
    mut solicit: impl FnMut(&JobRequest) -> Vec<Proposal>,
) -> Result<RetainedSet, Refusal> {
    debug_assert!(!residual.overtime);
    let proposals = solicit(residual);
    if let Some(retained) = try_cover(residual, &proposals) {
        return Ok(retained);
    }
    if residual.max_cost > 0 {
        let overtime_request = JobRequest {
            overtime: true,
            ..residual.clone()
        };
        let proposals = solicit(&overtime_request);
        if let Some(retained) = try_cover(&overtime_request, &proposals) {
            return Ok(retained);
        }
    }
    Err(Refusal {
        stage: RefusalStage::SplitSearch,
        reason: format!(
            "residual of {} units not coverable within budget {}",
            residual.quantity, residual.max_cost
        ),
    })
}

fn try_cover(request: &JobRequest, proposals: &[Proposal]) -> Option<RetainedSet> {
    let ranked = rank_by_performance(proposals);
    let total: Quantity = ranked.iter().map(|(p, _)| p.quantity).sum();
    if total < request.quantity {
        return None;
    }
    let retained = select_retained(&ranked, request.quantity);
    (retained.total_cost <= request.max_cost).then_some(retained)
}

// ── Work distribution ────────────────────────────────────────────────────

/// One partner's share of the two deliveries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionRow {
    pub partner: VenId,
    pub first_quantity: Quantity,
    pub first_cost: Money,
    pub last_quantity: Quantity,
    pub last_cost: Money,
}

/// The final allocation table: principal's in-house share plus every
/// retained partner quote, split into first and last delivery columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkDistribution {
    pub order: crate::ids::OrderId,
    pub first_due: crate::num::Period,
    pub last_due: crate::num::Period,
    pub rows: Vec<DistributionRow>,
    pub first_total_quantity: Quantity,
    pub first_total_cost: Money,
    pub last_total_quantity: Quantity,
    pub last_total_cost: Money,
}

impl WorkDistribution {
    pub fn grand_quantity(&self) -> Quantity {
        self.first_total_quantity + self.last_total_quantity
    }

    pub fn grand_cost(&self) -> Money {
        self.first_total_cost + self.last_total_cost
    }

    fn assemble(
        order: &Order,
        principal: &VenId,
        in_house: (Quantity, Money),
        first: Option<&RetainedSet>,
        last: Option<&RetainedSet>,
    ) -> Self {
        // Rows: principal first, then partners in id order; partners with
        // nothing retained in either delivery are omitted.
        let mut partners: std::collections::BTreeMap<VenId, DistributionRow> =
            std::collections::BTreeMap::new();
        let mut principal_row = DistributionRow {
            partner: principal.clone(),
            first_quantity: in_house.0,
            first_cost: in_house.1,
            last_quantity: 0,
            last_cost: 0,
        };
        let mut add = |set: &RetainedSet, is_first: bool, principal_row: &mut DistributionRow| {
            for (proposal, _) in &set.entries {
                if proposal.partner == *principal {
                    if is_first {
                        principal_row.first_quantity += proposal.quantity;
                        principal_row.first_cost += proposal.cost;
                    } else {
                        principal_row.last_quantity += proposal.quantity;
                        principal_row.last_cost += proposal.cost;
                    }
                    continue;
                }
                let row = partners
                    .entry(proposal.partner.clone())
                    .or_insert_with(|| DistributionRow {
                        partner: proposal.partner.clone(),
                        first_quantity: 0,
                        first_cost: 0,
                        last_quantity: 0,
                        last_cost: 0,
                    });
                if is_first {
                    row.first_quantity += proposal.quantity;
                    row.first_cost += proposal.cost;
                } else {
                    row.last_quantity += proposal.quantity;
                    row.last_cost += proposal.cost;
                }
            }
        };
        if let Some(set) = first {
            add(set, true, &mut principal_row);
        }
        if let Some(set) = last {
            add(set, false, &mut principal_row);
        }
        let mut rows = vec![principal_row];
        rows.extend(partners.into_values());
        let first_total_quantity = rows.iter().map(|r| r.first_quantity).sum();
        let first_total_cost = rows.iter().map(|r| r.first_cost).sum();
        let last_total_quantity = rows.iter().map(|r| r.last_quantity).sum();
        let last_total_cost = rows.iter().map(|r| r.last_cost).sum();
        WorkDistribution {
            order: order.id.clone(),
            first_due: order.due_date,
            last_due: order.latest_date,
            rows,
            first_total_quantity,
            first_total_cost,
            last_total_quantity,
            last_total_cost,
        }
    }
}

// ── Protocol state machine ───────────────────────────────────────────────

/// What kind of solicitation a round is; decides who is asked and which
/// due date applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundKind {
    /// At the order due date. The principal is not solicited: its due-date
    /// contribution is already fixed by the in-house estimate.
    DueDate,
    /// At the latest date; the whole consortium, principal included, may
    /// quote.
    LatestDate,
}

/// Protocol events surfaced to the driver, in occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BrokerEvent {
    Solicit {
        round: u32,
        kind: RoundKind,
        request: JobRequest,
    },
    /// A verdict worth a trace line.
    Note(DecisionNote),
    Finished(Result<WorkDistribution, Refusal>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionNote {
    AcceptFull {
        quantity: Quantity,
        cost: Money,
    },
    SplitDelivery {
        first_quantity: Quantity,
        first_cost: Money,
        residual_quantity: Quantity,
        residual_budget: Money,
    },
    RetryOvertime,
    EscalateOvertime {
        answered: Quantity,
        needed: Quantity,
    },
    Retained {
        quantity: Quantity,
        cost: Money,
    },
    Refused {
        stage: RefusalStage,
    },
}

#[derive(Debug, Clone)]
enum Phase {
    AwaitInitial { request: JobRequest },
    AwaitOvertimeRetry { request: JobRequest },
    AwaitSplitFirst { residual: JobRequest },
    AwaitSplitOvertime { residual: JobRequest },
    Done,
}

/// Drives one order through the broker protocol. Feed it the full set of
/// proposals for the round it last solicited; it answers with the next
/// events. Deterministic: identical inputs yield identical event streams.
#[derive(Debug, Clone)]
pub struct BrokerMachine {
    order: Order,
    principal: VenId,
    in_house: (Quantity, Money),
    first_delivery: Option<RetainedSet>,
    round: u32,
    phase: Phase,
}

impl BrokerMachine {
    /// Starts the protocol from the principal's in-house decision. When the
    /// principal covered the order alone the machine finishes immediately.
    pub fn start(
        order: Order,
        principal: VenId,
        decision: &InHouseDecision,
    ) -> (Self, Vec<BrokerEvent>) {
        let in_house = (decision.in_house_quantity, decision.in_house_cost);
        let mut machine = BrokerMachine {
            order,
            principal,
            in_house,
            first_delivery: None,
            round: 0,
            phase: Phase::Done,
        };
        match (&decision.kind, &decision.residual) {
            (InHouseKind::AcceptFull, _) | (_, None) => {
                let distribution = WorkDistribution::assemble(
                    &machine.order,
                    &machine.principal,
                    machine.in_house,
                    None,
                    None,
                );
                let events = vec![
                    BrokerEvent::Note(DecisionNote::AcceptFull {
                        quantity: distribution.grand_quantity(),
                        cost: distribution.grand_cost(),
                    }),
                    BrokerEvent::Finished(Ok(distribution)),
                ];
                (machine, events)
            }
            (_, Some(residual)) => {
                let request = residual.clone();
                machine.phase = Phase::AwaitInitial {
                    request: request.clone(),
                };
                let events = vec![machine.solicit(RoundKind::DueDate, request)];
                (machine, events)
            }
        }
    }

    fn solicit(&mut self, kind: RoundKind, request: JobRequest) -> BrokerEvent {
        self.round += 1;
        BrokerEvent::Solicit {
            round: self.round,
            kind,
            request,
        }
    }

    pub fn current_round(&self) -> u32 {
        self.round
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Done)
    }

    /// Consumes all proposals of the round last solicited.
    pub fn on_quotes(&mut self, proposals: &[Proposal]) -> Vec<BrokerEvent> {
        let phase = std::mem::replace(&mut self.phase, Phase::Done);
        match phase {
            Phase::AwaitInitial { request } => self.after_due_date_round(request, proposals, false),
            Phase::AwaitOvertimeRetry { request } => {
                self.after_due_date_round(request, proposals, true)
            }
            Phase::AwaitSplitFirst { residual } => {
                let ranked = rank_by_performance(proposals);
                let answered: Quantity = ranked.iter().map(|(p, _)| p.quantity).sum();
                if let Some(retained) = try_cover(&residual, proposals) {
                    return self.finish_split(retained);
                }
                if residual.max_cost > 0 {
                    let mut events = vec![BrokerEvent::Note(DecisionNote::EscalateOvertime {
                        answered,
                        needed: residual.quantity,
                    })];
                    let overtime_request = JobRequest {
                        overtime: true,
                        ..residual.clone()
                    };
                    self.phase = Phase::AwaitSplitOvertime {
                        residual: overtime_request.clone(),
                    };
                    events.push(self.solicit(RoundKind::LatestDate, overtime_request));
                    events
                } else {
                    self.refuse(RefusalStage::SplitSearch, "budget exhausted before coverage")
                }
            }
            Phase::AwaitSplitOvertime { residual } => {
                if let Some(retained) = try_cover(&residual, proposals) {
                    return self.finish_split(retained);
                }
                self.refuse(
                    RefusalStage::SplitSearch,
                    "overtime round left the residual uncovered",
                )
            }
            Phase::Done => Vec::new(),
        }
    }

    fn after_due_date_round(
        &mut self,
        request: JobRequest,
        proposals: &[Proposal],
        was_overtime_retry: bool,
    ) -> Vec<BrokerEvent> {
        match decide(&request, proposals) {
            BrokerDecision::AcceptFull { first_delivery } => {
                let distribution = WorkDistribution::assemble(
                    &self.order,
                    &self.principal,
                    self.in_house,
                    Some(&first_delivery),
                    None,
                );
                self.phase = Phase::Done;
                vec![
                    BrokerEvent::Note(DecisionNote::AcceptFull {
                        quantity: distribution.grand_quantity(),
                        cost: distribution.grand_cost(),
                    }),
                    BrokerEvent::Finished(self.verify(distribution)),
                ]
            }
            BrokerDecision::SplitDelivery {
                first_delivery,
                residual,
            } => {
                let mut events = vec![BrokerEvent::Note(DecisionNote::SplitDelivery {
                    first_quantity: first_delivery.total_quantity,
                    first_cost: first_delivery.total_cost,
                    residual_quantity: residual.quantity,
                    residual_budget: residual.max_cost,
                })];
                self.first_delivery = Some(first_delivery);
                if residual.quantity == 0 {
                    // Retention already covers everything: no further round.
                    let distribution = WorkDistribution::assemble(
                        &self.order,
                        &self.principal,
                        self.in_house,
                        self.first_delivery.as_ref(),
                        None,
                    );
                    self.phase = Phase::Done;
                    events.push(BrokerEvent::Finished(self.verify(distribution)));
                    return events;
                }
                self.phase = Phase::AwaitSplitFirst {
                    residual: residual.clone(),
                };
                events.push(self.solicit(RoundKind::LatestDate, residual));
                events
            }
            BrokerDecision::RetryOvertime if !was_overtime_retry => {
                let overtime_request = JobRequest {
                    overtime: true,
                    ..request
                };
                self.phase = Phase::AwaitOvertimeRetry {
                    request: overtime_request.clone(),
                };
                vec![
                    BrokerEvent::Note(DecisionNote::RetryOvertime),
                    self.solicit(RoundKind::DueDate, overtime_request),
                ]
            }
            BrokerDecision::RetryOvertime | BrokerDecision::Refuse => {
                let stage = if was_overtime_retry {
                    RefusalStage::OvertimeRetry
                } else {
                    RefusalStage::InitialRound
                };
                self.refuse(stage, "constraints too restrictive for the consortium")
            }
        }
    }

    fn finish_split(&mut self, retained: RetainedSet) -> Vec<BrokerEvent> {
        let mut events = vec![BrokerEvent::Note(DecisionNote::Retained {
            quantity: retained.total_quantity,
            cost: retained.total_cost,
        })];
        let distribution = WorkDistribution::assemble(
            &self.order,
            &self.principal,
            self.in_house,
            self.first_delivery.as_ref(),
            Some(&retained),
        );
        self.phase = Phase::Done;
        events.push(BrokerEvent::Finished(self.verify(distribution)));
        events
    }

    fn refuse(&mut self, stage: RefusalStage, reason: &str) -> Vec<BrokerEvent> {
        self.phase = Phase::Done;
        vec![
            BrokerEvent::Note(DecisionNote::Refused { stage }),
            BrokerEvent::Finished(Err(Refusal {
                stage,
                reason: reason.to_string(),
            })),
        ]
    }

    /// Grand totals must satisfy the order: full quantity reached and the
    /// overall spend within the order budget.
    fn verify(&self, distribution: WorkDistribution) -> Result<WorkDistribution, Refusal> {
        if distribution.grand_quantity() < self.order.quantity {
            return Err(Refusal {
                stage: RefusalStage::SplitSearch,
                reason: format!(
                    "distribution covers {} of {} units",
                    distribution.grand_quantity(),
                    self.order.quantity
                ),
            });
        }
        if distribution.grand_cost() > self.order.max_cost {
            return Err(Refusal {
                stage: RefusalStage::SplitSearch,
                reason: format!(
                    "distribution cost {} exceeds budget {}",
                    distribution.grand_cost(),
                    self.order.max_cost
                ),
            });
        }
        Ok(distribution)
    }
}

/// Runs the whole protocol synchronously. `solicit` receives the round
/// number, the round kind and the request, and returns the proposals of
/// every solicited member.
pub fn run_protocol(
    order: &Order,
    principal: &VenId,
    decision: &InHouseDecision,
    mut solicit: impl FnMut(u32, RoundKind, &JobRequest) -> Vec<Proposal>,
) -> (Result<WorkDistribution, Refusal>, Vec<DecisionNote>) {
    let (mut machine, mut pending) =
        BrokerMachine::start(order.clone(), principal.clone(), decision);
    let mut notes = Vec::new();
    loop {
        let mut next_quotes: Option<Vec<Proposal>> = None;
        for event in pending {
            match event {
                BrokerEvent::Solicit {
                    round,
                    kind,
                    request,
                } => {
                    next_quotes = Some(solicit(round, kind, &request));
                }
                BrokerEvent::Note(note) => notes.push(note),
                BrokerEvent::Finished(result) => return (result, notes),
            }
        }
        match next_quotes {
            Some(quotes) => pending = machine.on_quotes(&quotes),
            None => unreachable!("machine neither finished nor solicited"),
        }
    }
}

/// Exact-fraction comparison of two proposals' performance, exposed for
/// oracles and renderers.
pub fn performance_order(a: &Proposal, b: &Proposal) -> Ordering {
    cmp_fractions(a.cost, a.quantity, b.cost, b.quantity)
}
