//! Domain types and invariant checks shared by every agent.
//!
//! All values are immutable after construction; mutation happens only by
//! constructing new values (booking capacity returns a fresh profile).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{OrderId, ProductId, VenId};
use crate::num::{Money, Period, Quantity, Ratio, Tier};

/// A named invariant violation. Violations are data, not failures: checks
/// collect every broken rule together with the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: String,
    pub entity: String,
    pub detail: String,
}

impl Violation {
    pub fn new(rule: &str, entity: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            rule: rule.to_string(),
            entity: entity.into(),
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.rule, self.entity, self.detail)
    }
}

// ── Product breakdown structure ──────────────────────────────────────────

/// Component requirements of one product: child product and units needed
/// per parent unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductSpec {
    #[serde(default)]
    pub children: BTreeMap<ProductId, Quantity>,
}

/// The product breakdown structure: every product with its components.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductCatalog {
    pub products: BTreeMap<ProductId, ProductSpec>,
}

impl ProductCatalog {
    pub fn children_of(&self, product: &ProductId) -> &BTreeMap<ProductId, Quantity> {
        static EMPTY: std::sync::OnceLock<BTreeMap<ProductId, Quantity>> = std::sync::OnceLock::new();
        self.products
            .get(product)
            .map(|spec| &spec.children)
            .unwrap_or_else(|| EMPTY.get_or_init(BTreeMap::new))
    }

    /// Checks acyclicity, positive units-per-parent, and child references.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (id, spec) in &self.products {
            for (child, units) in &spec.children {
                if *units < 1 {
                    violations.push(Violation::new(
                        "units-per-parent",
                        id.as_str(),
                        format!("component {child} requires {units} units per parent; minimum is 1"),
                    ));
                }
                if !self.products.contains_key(child) {
                    violations.push(Violation::new(
                        "unknown-component",
                        id.as_str(),
                        format!("component {child} is not in the catalog"),
                    ));
                }
            }
        }
        // Cycle detection over the child graph.
        let mut state: BTreeMap<&ProductId, u8> = BTreeMap::new(); // 1 = visiting, 2 = done
        for start in self.products.keys() {
            if state.get(start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack = vec![(start, false)];
            while let Some((node, children_done)) = stack.pop() {
                if children_done {
                    state.insert(node, 2);
                    continue;
                }
                match state.get(node).copied().unwrap_or(0) {
                    1 => {
                        violations.push(Violation::new(
                            "bom-cycle",
                            node.as_str(),
                            "product is part of a component cycle".to_string(),
                        ));
                        state.insert(node, 2);
                        continue;
                    }
                    2 => continue,
                    _ => {}
                }
                state.insert(node, 1);
                stack.push((node, true));
                if let Some(spec) = self.products.get(node) {
                    for child in spec.children.keys() {
                        if self.products.contains_key(child) {
                            stack.push((child, false));
                        }
                    }
                }
            }
        }
        violations
    }
}

// ── Orders and requests ──────────────────────────────────────────────────

/// A client demand: quantity window, date window, budget cap, quality tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub client: VenId,
    pub principal_supplier: VenId,
    pub product: ProductId,
    pub quality: String,
    pub max_cost: Money,
    pub quantity: Quantity,
    pub min_quantity: Quantity,
    pub due_date: Period,
    pub latest_date: Period,
    /// Optional override for the residual minimum handed to the broker;
    /// defaults to `min_quantity - in_house_quantity` clamped at zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_min: Option<Quantity>,
}

impl Order {
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.quantity <= 0 {
            violations.push(Violation::new(
                "order-quantity",
                self.id.as_str(),
                format!("quantity must be positive, got {}", self.quantity),
            ));
        }
        if self.min_quantity <= 0 {
            violations.push(Violation::new(
                "order-min-quantity",
                self.id.as_str(),
                format!("min_quantity must be positive, got {}", self.min_quantity),
            ));
        }
        if self.min_quantity > self.quantity {
            violations.push(Violation::new(
                "order-quantity-window",
                self.id.as_str(),
                format!(
                    "min_quantity {} exceeds quantity {}",
                    self.min_quantity, self.quantity
                ),
            ));
        }
        if self.due_date > self.latest_date {
            violations.push(Violation::new(
                "order-date-window",
                self.id.as_str(),
                format!(
                    "due_date {} is after latest_date {}",
                    self.due_date, self.latest_date
                ),
            ));
        }
        if self.max_cost < 0 {
            violations.push(Violation::new(
                "order-budget",
                self.id.as_str(),
                format!("max_cost must be non-negative, got {}", self.max_cost),
            ));
        }
        violations
    }
}

/// The broker-side residual demand forwarded to consortium partners.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRequest {
    pub quantity: Quantity,
    pub min_quantity: Quantity,
    pub due_date: Period,
    pub latest_date: Period,
    pub max_cost: Money,
    /// Overtime permission flag: `false` forbids overtime production.
    pub overtime: bool,
}

impl JobRequest {
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.min_quantity > self.quantity {
            violations.push(Violation::new(
                "request-quantity-window",
                "job-request",
                format!(
                    "min_quantity {} exceeds quantity {}",
                    self.min_quantity, self.quantity
                ),
            ));
        }
        if self.due_date > self.latest_date {
            violations.push(Violation::new(
                "request-date-window",
                "job-request",
                format!(
                    "due_date {} is after latest_date {}",
                    self.due_date, self.latest_date
                ),
            ));
        }
        if self.max_cost < 0 {
            violations.push(Violation::new(
                "request-budget",
                "job-request",
                format!("max_cost must be non-negative, got {}", self.max_cost),
            ));
        }
        violations
    }
}

/// A partner quote: quantity it can take on and the total cost asked for it.
/// Quoted costs are totals for the quoted quantity, not per-unit rates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub partner: VenId,
    pub quantity: Quantity,
    pub cost: Money,
    /// Optional delivery date offered by the partner; carried, not acted on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<Period>,
}

impl Proposal {
    pub fn null(partner: VenId) -> Self {
        Self {
            partner,
            quantity: 0,
            cost: 0,
            date: None,
        }
    }

    pub fn is_null(&self) -> bool {
        self.quantity == 0
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.quantity < 0 || self.cost < 0 {
            violations.push(Violation::new(
                "proposal-negative",
                self.partner.as_str(),
                format!("quantity {} / cost {} must be non-negative", self.quantity, self.cost),
            ));
        }
        if self.quantity == 0 && self.cost != 0 {
            violations.push(Violation::new(
                "null-quote-cost",
                self.partner.as_str(),
                format!("a zero-quantity quote must cost 0, got {}", self.cost),
            ));
        }
        violations
    }
}

/// The proposals kept for one delivery, with their performance ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetainedSet {
    /// Retained proposals paired with their rank (1-based, ascending
    /// performance ratio).
    pub entries: Vec<(Proposal, u32)>,
    pub total_quantity: Quantity,
    pub total_cost: Money,
    /// Set when the whole ranking was exhausted below the target.
    pub shortfall: bool,
}

impl RetainedSet {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
            total_quantity: 0,
            total_cost: 0,
            shortfall: false,
        }
    }

    pub fn from_entries(entries: Vec<(Proposal, u32)>, shortfall: bool) -> Self {
        let total_quantity = entries.iter().map(|(p, _)| p.quantity).sum();
        let total_cost = entries.iter().map(|(p, _)| p.cost).sum();
        Self {
            entries,
            total_quantity,
            total_cost,
            shortfall,
        }
    }

    pub fn partners(&self) -> Vec<&VenId> {
        self.entries.iter().map(|(p, _)| &p.partner).collect()
    }
}

// ── Topology ─────────────────────────────────────────────────────────────

/// A directed supply relation: `supplier` provides `product` to `customer`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupplyEdge {
    pub supplier: VenId,
    pub customer: VenId,
    pub product: ProductId,
}

/// The tiered network: tier count, node membership, supply edges.
///
/// Tier 1 is the most upstream tier (raw-material end); tier `num_tiers`
/// is the most downstream (customer-facing end). Material flows from
/// lower tiers to higher ones, so every supply edge must climb exactly
/// one tier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub num_tiers: Tier,
    pub vens: BTreeMap<VenId, Tier>,
    pub supply_edges: BTreeSet<SupplyEdge>,
}

impl Topology {
    pub fn tier_of(&self, ven: &VenId) -> Option<Tier> {
        self.vens.get(ven).copied()
    }

    pub fn vens_in_tier(&self, tier: Tier) -> Vec<&VenId> {
        self.vens
            .iter()
            .filter(|(_, t)| **t == tier)
            .map(|(v, _)| v)
            .collect()
    }

    /// The unique supplier of `product` to `customer`, if any.
    pub fn supplier_of(&self, customer: &VenId, product: &ProductId) -> Option<&VenId> {
        self.supply_edges
            .iter()
            .find(|e| &e.customer == customer && &e.product == product)
            .map(|e| &e.supplier)
    }

    pub fn customers_of(&self, supplier: &VenId) -> Vec<&SupplyEdge> {
        self.supply_edges
            .iter()
            .filter(|e| &e.supplier == supplier)
            .collect()
    }
}

/// Checks every topology invariant; returns one violation per broken rule.
///
/// The checks are order-independent over entity listing and idempotent.
pub fn validate_topology(topology: &Topology) -> Vec<Violation> {
    let mut violations = Vec::new();
    if topology.num_tiers < 1 {
        violations.push(Violation::new(
            "tier-count",
            "topology",
            format!("num_tiers must be at least 1, got {}", topology.num_tiers),
        ));
    }
    for (ven, tier) in &topology.vens {
        if *tier < 1 || *tier > topology.num_tiers {
            violations.push(Violation::new(
                "tier-membership",
                ven.as_str(),
                format!(
                    "tier {} outside the valid range 1..={}",
                    tier, topology.num_tiers
                ),
            ));
        }
    }
    let mut seen: BTreeSet<(&VenId, &ProductId)> = BTreeSet::new();
    for edge in &topology.supply_edges {
        let entity = format!("{}->{} [{}]", edge.supplier, edge.customer, edge.product);
        let sup = topology.tier_of(&edge.supplier);
        let cus = topology.tier_of(&edge.customer);
        if sup.is_none() {
            violations.push(Violation::new(
                "unknown-ven",
                entity.clone(),
                format!("supplier {} is not a declared node", edge.supplier),
            ));
        }
        if cus.is_none() {
            violations.push(Violation::new(
                "unknown-ven",
                entity.clone(),
                format!("customer {} is not a declared node", edge.customer),
            ));
        }
        if let (Some(s), Some(c)) = (sup, cus) {
            // Supply always climbs exactly one tier; this both enforces
            // adjacency and makes loops structurally impossible.
            if c != s + 1 {
                violations.push(Violation::new(
                    "non-adjacent-edge",
                    entity.clone(),
                    format!("supplier tier {s} must be exactly one below customer tier {c}"),
                ));
            }
        }
        if !seen.insert((&edge.customer, &edge.product)) {
            violations.push(Violation::new(
                "duplicate-supplier",
                entity,
                format!(
                    "{} already has a supplier for {}",
                    edge.customer, edge.product
                ),
            ));
        }
    }
    violations
}

// ── Capacity ─────────────────────────────────────────────────────────────

/// Per-period load state of a node's bottleneck activity.
///
/// `capacity`, `booked` and `overtime_capacity` are load units per period
/// over `1..=horizon`. `unit_load` converts product units to load units.
/// Idle capacity is `capacity[t] - booked[t]` and never goes negative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityProfile {
    pub horizon: Period,
    pub capacity: Vec<Quantity>,
    pub booked: Vec<Quantity>,
    pub unit_load: Quantity,
    pub unit_cost: Ratio,
    pub overtime_capacity: Vec<Quantity>,
    pub overtime_unit_cost: Ratio,
}

impl CapacityProfile {
    /// A profile with uniform regular capacity and no overtime.
    pub fn uniform(horizon: Period, capacity: Quantity, unit_cost: Ratio) -> Self {
        Self {
            horizon,
            capacity: vec![capacity; horizon.max(0) as usize],
            booked: vec![0; horizon.max(0) as usize],
            unit_load: 1,
            unit_cost,
            overtime_capacity: vec![0; horizon.max(0) as usize],
            overtime_unit_cost: Ratio::ZERO,
        }
    }

    pub fn validate(&self, entity: &str) -> Vec<Violation> {
        let mut violations = Vec::new();
        let len = self.horizon.max(0) as usize;
        for (name, vec) in [
            ("capacity", &self.capacity),
            ("booked", &self.booked),
            ("overtime_capacity", &self.overtime_capacity),
        ] {
            if vec.len() != len {
                violations.push(Violation::new(
                    "profile-length",
                    entity,
                    format!("{name} has {} entries for a horizon of {len}", vec.len()),
                ));
            }
            if vec.iter().any(|v| *v < 0) {
                violations.push(Violation::new(
                    "profile-negative",
                    entity,
                    format!("{name} contains a negative entry"),
                ));
            }
        }
        if self.horizon < 1 {
            violations.push(Violation::new(
                "profile-horizon",
                entity,
                format!("horizon must be at least 1, got {}", self.horizon),
            ));
        }
        if self.unit_load < 1 {
            violations.push(Violation::new(
                "profile-unit-load",
                entity,
                format!("unit_load must be at least 1, got {}", self.unit_load),
            ));
        }
        if self.capacity.len() == self.booked.len() {
            for (t, (cap, booked)) in self.capacity.iter().zip(&self.booked).enumerate() {
                if booked > cap {
                    violations.push(Violation::new(
                        "overbooked",
                        entity,
                        format!(
                            "period {}: booked {} exceeds capacity {}",
                            t + 1,
                            booked,
                            cap
                        ),
                    ));
                }
            }
        }
        violations
    }

    fn index(&self, period: Period) -> Option<usize> {
        if period >= 1 && period <= self.horizon {
            Some((period - 1) as usize)
        } else {
            None
        }
    }

    /// Regular capacity in load units, extending the boundary pattern
    /// outside the horizon (first period's value below, last period's
    /// value above). Booked load exists only inside the horizon.
    pub fn capacity_at(&self, period: Period) -> Quantity {
        if self.capacity.is_empty() {
            return 0;
        }
        match self.index(period) {
            Some(i) => self.capacity[i],
            None if period < 1 => self.capacity[0],
            None => *self.capacity.last().unwrap(),
        }
    }

    pub fn booked_at(&self, period: Period) -> Quantity {
        self.index(period).map_or(0, |i| self.booked[i])
    }

    pub fn idle_at(&self, period: Period) -> Quantity {
        self.capacity_at(period) - self.booked_at(period)
    }

    pub fn overtime_at(&self, period: Period) -> Quantity {
        if self.overtime_capacity.is_empty() {
            return 0;
        }
        match self.index(period) {
            Some(i) => self.overtime_capacity[i],
            None if period < 1 => self.overtime_capacity[0],
            None => *self.overtime_capacity.last().unwrap(),
        }
    }

    /// Whole product units producible in `period` from idle capacity.
    pub fn idle_units_at(&self, period: Period) -> Quantity {
        self.idle_at(period) / self.unit_load
    }

    pub fn overtime_units_at(&self, period: Period) -> Quantity {
        self.overtime_at(period) / self.unit_load
    }

    /// Whole product units producible from idle capacity in periods
    /// `1..=until` (clamped to the horizon).
    pub fn idle_units_through(&self, until: Period) -> Quantity {
        (1..=until.min(self.horizon)).map(|t| self.idle_units_at(t)).sum()
    }

    pub fn overtime_units_through(&self, until: Period) -> Quantity {
        (1..=until.min(self.horizon)).map(|t| self.overtime_units_at(t)).sum()
    }

    /// Books `load` additional load units in `period`, returning the new
    /// profile. Fails if the booking would make idle capacity negative.
    pub fn book(&self, period: Period, load: Quantity) -> Result<Self, Violation> {
        let idx = self.index(period).ok_or_else(|| {
            Violation::new(
                "booking-out-of-horizon",
                "profile",
                format!("period {period} outside horizon 1..={}", self.horizon),
            )
        })?;
        if load < 0 || self.booked[idx] + load > self.capacity[idx] {
            return Err(Violation::new(
                "booking-exceeds-idle",
                "profile",
                format!(
                    "period {period}: booking {load} onto {} with capacity {}",
                    self.booked[idx], self.capacity[idx]
                ),
            ));
        }
        let mut next = self.clone();
        next.booked[idx] += load;
        Ok(next)
    }
}

// ── Plans ────────────────────────────────────────────────────────────────

/// One delivery requirement a plan must cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DueDelivery {
    /// Identifies the order or the customer the delivery belongs to.
    pub label: String,
    pub period: Period,
    pub quantity: Quantity,
}

impl DueDelivery {
    pub fn new(label: impl Into<String>, period: Period, quantity: Quantity) -> Self {
        Self {
            label: label.into(),
            period,
            quantity,
        }
    }
}

/// A per-period production/delivery/stock schedule with cost accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    /// Production per period; keys may be <= 0 in backward planning.
    pub production: BTreeMap<Period, Quantity>,
    /// Actual delivery schedule (period, units).
    pub deliveries: Vec<(Period, Quantity)>,
    /// End-of-period stock over the plan's span.
    pub stock: BTreeMap<Period, Quantity>,
    pub production_cost: Money,
    pub holding_cost: Money,
    pub delay_penalty: Money,
    /// Completion lateness per due delivery (label, periods late >= 0).
    pub delays: Vec<(String, Period)>,
    /// Set when any production lands at period <= 0 (or cannot be placed
    /// at all); consumed by the forward-planning fallback.
    pub infeasible_negative: bool,
}

impl Plan {
    pub fn total_cost(&self) -> Money {
        self.production_cost + self.holding_cost + self.delay_penalty
    }

    pub fn total_production(&self) -> Quantity {
        self.production.values().sum()
    }

    pub fn max_delay(&self) -> Period {
        self.delays.iter().map(|(_, d)| *d).max().unwrap_or(0)
    }

    /// Checks the stock balance: stock never negative, conservation holds.
    pub fn check_stock_balance(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut delivered: BTreeMap<Period, Quantity> = BTreeMap::new();
        for (p, q) in &self.deliveries {
            *delivered.entry(*p).or_insert(0) += q;
        }
        let span: Vec<Period> = self
            .production
            .keys()
            .copied()
            .chain(delivered.keys().copied())
            .collect();
        if span.is_empty() {
            return violations;
        }
        let lo = *span.iter().min().unwrap();
        let hi = *span.iter().max().unwrap();
        let mut stock: Quantity = 0;
        for t in lo..=hi {
            stock += self.production.get(&t).copied().unwrap_or(0);
            stock -= delivered.get(&t).copied().unwrap_or(0);
            if stock < 0 {
                violations.push(Violation::new(
                    "negative-stock",
                    "plan",
                    format!("stock {stock} at period {t}"),
                ));
            }
            let recorded = self.stock.get(&t).copied().unwrap_or(0);
            if recorded != stock.max(0) {
                violations.push(Violation::new(
                    "stock-mismatch",
                    "plan",
                    format!("period {t}: recorded {recorded}, derived {stock}"),
                ));
            }
        }
        violations
    }
}

// ── Accounting ───────────────────────────────────────────────────────────

/// One node's revenue/cost line for the chain-level benefit check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub ven: VenId,
    pub selling: Money,
    pub costs: Money,
}
