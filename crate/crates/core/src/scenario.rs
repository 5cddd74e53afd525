//! Scenario files: the structured-text (JSON) input that drives a run.
//!
//! Top-level keys: `topology`, `products`, `vens` (capacity profiles per
//! consortium member), `orders`, `quotes` (scripted proposal tables keyed
//! by order, solicitation round and member), `prices` (selling totals per
//! order), plus optional `planning`, `bands` and `perturbations` sections.
//! `scenarios/scenario.schema.json` carries the machine-readable schema and
//! `scenarios/bronze_tap.scn` the documented sample.
//!
//! Parsing is deterministic: the same bytes always produce the same
//! scenario, and serializing a parsed scenario yields a canonical form
//! that re-parses to the same value (normalization is idempotent).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{OrderId, ProductId, VenId};
use crate::model::{
    validate_topology, CapacityProfile, Order, ProductCatalog, Proposal, SupplyEdge, Topology,
    Violation,
};
use crate::num::{Money, Period, Quantity, Ratio, Tier};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("scenario violates {} invariant(s):\n{}", .0.len(), format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

// ── Serialized form ──────────────────────────────────────────────────────

/// A per-period series that may be written as a scalar (uniform value).
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum Series {
    Uniform(Quantity),
    PerPeriod(Vec<Quantity>),
}

impl Series {
    fn expand(&self, horizon: Period) -> Vec<Quantity> {
        match self {
            Series::Uniform(v) => vec![*v; horizon.max(0) as usize],
            Series::PerPeriod(v) => v.clone(),
        }
    }
}

impl Default for Series {
    fn default() -> Self {
        Series::Uniform(0)
    }
}

fn default_unit_load() -> Quantity {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    horizon: Period,
    capacity: Series,
    #[serde(default)]
    booked: Series,
    #[serde(default = "default_unit_load")]
    unit_load: Quantity,
    unit_cost: Ratio,
    #[serde(default)]
    overtime_capacity: Series,
    #[serde(default)]
    overtime_unit_cost: Option<Ratio>,
}

impl ProfileDoc {
    fn build(&self) -> CapacityProfile {
        CapacityProfile {
            horizon: self.horizon,
            capacity: self.capacity.expand(self.horizon),
            booked: self.booked.expand(self.horizon),
            unit_load: self.unit_load,
            unit_cost: self.unit_cost,
            overtime_capacity: self.overtime_capacity.expand(self.horizon),
            overtime_unit_cost: self.overtime_unit_cost.unwrap_or(Ratio::ZERO),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberDoc {
    capacity: ProfileDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct VenDoc {
    #[serde(default)]
    principal: Option<VenId>,
    /// Product this node manufactures; absent for pure consumers.
    #[serde(default)]
    product: Option<ProductId>,
    members: BTreeMap<VenId, MemberDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    tiers: Tier,
    vens: BTreeMap<VenId, Tier>,
    #[serde(default)]
    edges: Vec<SupplyEdge>,
}

/// A scripted quote: `[quantity, cost]` or `[quantity, cost, date]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum QuoteDoc {
    Plain(Quantity, Money),
    Dated(Quantity, Money, Period),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PenaltyParamsDoc {
    weight_set_id: u32,
    #[serde(default)]
    holding_rate: Money,
    #[serde(default)]
    production_rate: Money,
    #[serde(default)]
    delay_rate: Money,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanningDoc {
    forecasts: BTreeMap<VenId, Vec<Quantity>>,
    param_sets: Vec<Vec<PenaltyParamsDoc>>,
    #[serde(default)]
    tolerance: Period,
    #[serde(default)]
    max_iterations: Option<u64>,
    #[serde(default)]
    unit_prices: BTreeMap<VenId, Money>,
    #[serde(default)]
    opening_stocks: BTreeMap<VenId, Quantity>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationDoc {
    origin: VenId,
    kind: String,
    magnitude: Quantity,
    period: Period,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    topology: TopologyDoc,
    #[serde(default)]
    products: BTreeMap<ProductId, crate::model::ProductSpec>,
    vens: BTreeMap<VenId, VenDoc>,
    #[serde(default)]
    orders: Vec<Order>,
    #[serde(default)]
    quotes: BTreeMap<OrderId, BTreeMap<String, BTreeMap<VenId, QuoteDoc>>>,
    #[serde(default)]
    prices: BTreeMap<OrderId, Money>,
    #[serde(default)]
    planning: Option<PlanningDoc>,
    #[serde(default)]
    bands: BTreeMap<String, Quantity>,
    #[serde(default)]
    perturbations: Vec<PerturbationDoc>,
}

// ── Domain form ──────────────────────────────────────────────────────────

/// One consortium: its members' capacity profiles and the member that is
/// visible to the network (the principal supplier).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VenConfig {
    pub principal: VenId,
    pub product: Option<ProductId>,
    pub members: BTreeMap<VenId, CapacityProfile>,
}

/// Cost-weight combination used when building candidate plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub weight_set_id: u32,
    pub holding_rate: Money,
    pub production_rate: Money,
    pub delay_rate: Money,
}

impl PenaltyParams {
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.holding_rate < 0 || self.production_rate < 0 || self.delay_rate < 0 {
            violations.push(Violation::new(
                "penalty-rates",
                format!("param-set-{}", self.weight_set_id),
                "all rates must be non-negative".to_string(),
            ));
        }
        violations
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanningConfig {
    pub forecasts: BTreeMap<VenId, Vec<Quantity>>,
    pub param_sets: Vec<Vec<PenaltyParams>>,
    pub tolerance: Period,
    pub max_iterations: Option<u64>,
    pub unit_prices: BTreeMap<VenId, Money>,
    pub opening_stocks: BTreeMap<VenId, Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    CapacityLoss,
    ForecastChange,
    OrderChange,
}

impl std::fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PerturbationKind::CapacityLoss => "capacity_loss",
            PerturbationKind::ForecastChange => "forecast_change",
            PerturbationKind::OrderChange => "order_change",
        };
        f.write_str(s)
    }
}

/// An unforeseen event hitting one node after convergence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perturbation {
    pub origin: VenId,
    pub kind: PerturbationKind,
    pub magnitude: Quantity,
    pub period: Period,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub topology: Topology,
    pub catalog: ProductCatalog,
    pub vens: BTreeMap<VenId, VenConfig>,
    pub orders: Vec<Order>,
    /// Scripted quotes: (order, solicitation round, member) -> proposal.
    /// Rounds count the broker's solicitations for that order in protocol
    /// order, starting at 1.
    pub quotes: BTreeMap<(OrderId, u32, VenId), Proposal>,
    pub prices: BTreeMap<OrderId, Money>,
    pub planning: Option<PlanningConfig>,
    /// Contract bands per supply edge, keyed "supplier/customer/product".
    pub bands: BTreeMap<String, Quantity>,
    pub perturbations: Vec<Perturbation>,
}

impl Scenario {
    /// The consortium a member belongs to, if any.
    pub fn ven_of_member(&self, member: &VenId) -> Option<(&VenId, &VenConfig)> {
        self.vens
            .iter()
            .find(|(_, cfg)| cfg.members.contains_key(member))
    }

    pub fn member_profile(&self, member: &VenId) -> Option<&CapacityProfile> {
        self.ven_of_member(member)
            .and_then(|(_, cfg)| cfg.members.get(member))
    }

    pub fn scripted_quote(&self, order: &OrderId, round: u32, member: &VenId) -> Option<&Proposal> {
        self.quotes.get(&(order.clone(), round, member.clone()))
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build(doc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    load_scenario_str(&text)
}

fn build(doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
    let topology = Topology {
        num_tiers: doc.topology.tiers,
        vens: doc.topology.vens,
        supply_edges: doc.topology.edges.into_iter().collect(),
    };
    let catalog = ProductCatalog {
        products: doc.products,
    };

    let mut violations = Vec::new();
    violations.extend(validate_topology(&topology));
    violations.extend(catalog.validate());

    let mut vens: BTreeMap<VenId, VenConfig> = BTreeMap::new();
    for (ven_id, ven_doc) in &doc.vens {
        if !topology.vens.contains_key(ven_id) {
            violations.push(Violation::new(
                "unknown-ven",
                ven_id.as_str(),
                "configured node is not in the topology".to_string(),
            ));
        }
        if ven_doc.members.is_empty() {
            violations.push(Violation::new(
                "empty-consortium",
                ven_id.as_str(),
                "a node needs at least one member".to_string(),
            ));
            continue;
        }
        let principal = match &ven_doc.principal {
            Some(p) => {
                if !ven_doc.members.contains_key(p) {
                    violations.push(Violation::new(
                        "unknown-principal",
                        ven_id.as_str(),
                        format!("principal {p} is not a member"),
                    ));
                }
                p.clone()
            }
            None => {
                if ven_doc.members.len() > 1 {
                    violations.push(Violation::new(
                        "missing-principal",
                        ven_id.as_str(),
                        "multi-member nodes must name a principal".to_string(),
                    ));
                }
                ven_doc.members.keys().next().unwrap().clone()
            }
        };
        if let Some(product) = &ven_doc.product {
            if !catalog.products.contains_key(product) {
                violations.push(Violation::new(
                    "unknown-product",
                    ven_id.as_str(),
                    format!("manufactured product {product} is not in the catalog"),
                ));
            }
        }
        let mut members = BTreeMap::new();
        for (member_id, member_doc) in &ven_doc.members {
            let profile = member_doc.capacity.build();
            for v in profile.validate(&format!("{ven_id}/{member_id}")) {
                violations.push(v);
            }
            members.insert(member_id.clone(), profile);
        }
        vens.insert(
            ven_id.clone(),
            VenConfig {
                principal,
                product: ven_doc.product.clone(),
                members,
            },
        );
    }
    for ven_id in topology.vens.keys() {
        if !vens.contains_key(ven_id) {
            violations.push(Violation::new(
                "missing-ven-config",
                ven_id.as_str(),
                "topology node has no capacity configuration".to_string(),
            ));
        }
    }
    // Outgoing edges must carry the supplier's declared product.
    for edge in &topology.supply_edges {
        if let Some(cfg) = vens.get(&edge.supplier) {
            match &cfg.product {
                Some(p) if *p == edge.product => {}
                Some(p) => violations.push(Violation::new(
                    "edge-product-mismatch",
                    edge.supplier.as_str(),
                    format!("edge carries {} but the node manufactures {p}", edge.product),
                )),
                None => violations.push(Violation::new(
                    "edge-product-mismatch",
                    edge.supplier.as_str(),
                    format!(
                        "node supplies {} but declares no manufactured product",
                        edge.product
                    ),
                )),
            }
        }
    }

    let member_exists = |member: &VenId| vens.values().any(|cfg| cfg.members.contains_key(member));

    let mut order_ids = std::collections::BTreeSet::new();
    for order in &doc.orders {
        violations.extend(order.validate());
        if !order_ids.insert(order.id.clone()) {
            violations.push(Violation::new(
                "duplicate-order",
                order.id.as_str(),
                "order id reused".to_string(),
            ));
        }
        if !catalog.products.contains_key(&order.product) {
            violations.push(Violation::new(
                "unknown-product",
                order.id.as_str(),
                format!("ordered product {} is not in the catalog", order.product),
            ));
        }
        if !topology.vens.contains_key(&order.client) {
            violations.push(Violation::new(
                "unknown-ven",
                order.id.as_str(),
                format!("client {} is not in the topology", order.client),
            ));
        }
        match vens
            .iter()
            .find(|(_, cfg)| cfg.members.contains_key(&order.principal_supplier))
        {
            None => violations.push(Violation::new(
                "unknown-principal-supplier",
                order.id.as_str(),
                format!(
                    "principal supplier {} is not a configured member",
                    order.principal_supplier
                ),
            )),
            Some((ven_id, cfg)) => {
                if cfg.principal != order.principal_supplier {
                    violations.push(Violation::new(
                        "not-a-principal",
                        order.id.as_str(),
                        format!(
                            "{} is a member of {ven_id} but not its principal",
                            order.principal_supplier
                        ),
                    ));
                }
                let supplies_client = topology.supply_edges.iter().any(|e| {
                    e.supplier == *ven_id && e.customer == order.client && e.product == order.product
                });
                if !supplies_client {
                    violations.push(Violation::new(
                        "no-supply-edge",
                        order.id.as_str(),
                        format!(
                            "no edge supplies {} from {ven_id} to {}",
                            order.product, order.client
                        ),
                    ));
                }
                if let Some(profile) = cfg.members.get(&order.principal_supplier) {
                    if order.due_date > profile.horizon {
                        violations.push(Violation::new(
                            "due-beyond-horizon",
                            order.id.as_str(),
                            format!(
                                "due date {} beyond the principal's horizon {}",
                                order.due_date, profile.horizon
                            ),
                        ));
                    }
                }
            }
        }
    }

    let mut quotes = BTreeMap::new();
    for (order_id, rounds) in &doc.quotes {
        if !order_ids.contains(order_id) {
            violations.push(Violation::new(
                "unknown-order",
                order_id.as_str(),
                "quote table references an undeclared order".to_string(),
            ));
        }
        for (round_key, members) in rounds {
            let round: u32 = match round_key.parse() {
                Ok(r) if r >= 1 => r,
                _ => {
                    violations.push(Violation::new(
                        "bad-round",
                        format!("{order_id}/{round_key}"),
                        "round keys are integers starting at 1".to_string(),
                    ));
                    continue;
                }
            };
            for (member, quote) in members {
                if !member_exists(member) {
                    violations.push(Violation::new(
                        "unknown-member",
                        format!("{order_id}/{round_key}/{member}"),
                        "quote references an unknown member".to_string(),
                    ));
                }
                let proposal = match *quote {
                    QuoteDoc::Plain(quantity, cost) => Proposal {
                        partner: member.clone(),
                        quantity,
                        cost,
                        date: None,
                    },
                    QuoteDoc::Dated(quantity, cost, date) => Proposal {
                        partner: member.clone(),
                        quantity,
                        cost,
                        date: Some(date),
                    },
                };
                violations.extend(proposal.validate());
                quotes.insert((order_id.clone(), round, member.clone()), proposal);
            }
        }
    }

    for order_id in doc.prices.keys() {
        if !order_ids.contains(order_id) {
            violations.push(Violation::new(
                "unknown-order",
                order_id.as_str(),
                "price references an undeclared order".to_string(),
            ));
        }
    }

    let planning = match &doc.planning {
        None => None,
        Some(p) => {
            for (ven_id, forecast) in &p.forecasts {
                match vens.get(ven_id) {
                    None => violations.push(Violation::new(
                        "unknown-ven",
                        ven_id.as_str(),
                        "forecast references an unconfigured node".to_string(),
                    )),
                    Some(cfg) => {
                        if cfg.product.is_none() {
                            violations.push(Violation::new(
                                "forecast-without-product",
                                ven_id.as_str(),
                                "forecasted node manufactures nothing".to_string(),
                            ));
                        }
                        if !topology.customers_of(ven_id).is_empty() {
                            violations.push(Violation::new(
                                "forecast-not-terminal",
                                ven_id.as_str(),
                                "external demand only applies to nodes without in-chain customers"
                                    .to_string(),
                            ));
                        }
                        if let Some(profile) = cfg.members.get(&cfg.principal) {
                            if forecast.len() != profile.horizon.max(0) as usize {
                                violations.push(Violation::new(
                                    "forecast-length",
                                    ven_id.as_str(),
                                    format!(
                                        "forecast has {} periods for a horizon of {}",
                                        forecast.len(),
                                        profile.horizon
                                    ),
                                ));
                            }
                        }
                    }
                }
                if forecast.iter().any(|q| *q < 0) {
                    violations.push(Violation::new(
                        "forecast-negative",
                        ven_id.as_str(),
                        "forecast quantities must be non-negative".to_string(),
                    ));
                }
            }
            if p.param_sets.is_empty() || p.param_sets.iter().any(|set| set.is_empty()) {
                violations.push(Violation::new(
                    "empty-param-grid",
                    "planning",
                    "param_sets needs at least one non-empty combination set".to_string(),
                ));
            }
            let param_sets: Vec<Vec<PenaltyParams>> = p
                .param_sets
                .iter()
                .map(|set| {
                    set.iter()
                        .map(|d| PenaltyParams {
                            weight_set_id: d.weight_set_id,
                            holding_rate: d.holding_rate,
                            production_rate: d.production_rate,
                            delay_rate: d.delay_rate,
                        })
                        .collect()
                })
                .collect();
            for set in &param_sets {
                for params in set {
                    violations.extend(params.validate());
                }
            }
            Some(PlanningConfig {
                forecasts: p.forecasts.clone(),
                param_sets,
                tolerance: p.tolerance,
                max_iterations: p.max_iterations,
                unit_prices: p.unit_prices.clone(),
                opening_stocks: p.opening_stocks.clone(),
            })
        }
    };

    for key in doc.bands.keys() {
        let parts: Vec<&str> = key.split('/').collect();
        let known = parts.len() == 3
            && topology.supply_edges.iter().any(|e| {
                e.supplier.as_str() == parts[0]
                    && e.customer.as_str() == parts[1]
                    && e.product.as_str() == parts[2]
            });
        if !known {
            violations.push(Violation::new(
                "unknown-band-edge",
                key.clone(),
                "bands are keyed supplier/customer/product over declared edges".to_string(),
            ));
        }
    }

    let mut perturbations = Vec::new();
    for p in &doc.perturbations {
        let kind = match p.kind.as_str() {
            "capacity_loss" => PerturbationKind::CapacityLoss,
            "forecast_change" => PerturbationKind::ForecastChange,
            "order_change" => PerturbationKind::OrderChange,
            other => {
                violations.push(Violation::new(
                    "unknown-perturbation-kind",
                    p.origin.as_str(),
                    format!("kind {other} is not one of capacity_loss/forecast_change/order_change"),
                ));
                continue;
            }
        };
        if p.magnitude <= 0 {
            violations.push(Violation::new(
                "perturbation-magnitude",
                p.origin.as_str(),
                format!("magnitude must be positive, got {}", p.magnitude),
            ));
        }
        if !topology.vens.contains_key(&p.origin) {
            violations.push(Violation::new(
                "unknown-ven",
                p.origin.as_str(),
                "perturbation origin is not in the topology".to_string(),
            ));
        }
        perturbations.push(Perturbation {
            origin: p.origin.clone(),
            kind,
            magnitude: p.magnitude,
            period: p.period,
        });
    }

    if !violations.is_empty() {
        return Err(ScenarioError::Invalid(violations));
    }

    Ok(Scenario {
        topology,
        catalog,
        vens,
        orders: doc.orders,
        quotes,
        prices: doc.prices,
        planning,
        bands: doc.bands,
        perturbations,
    })
}

// ── Canonical serialization ──────────────────────────────────────────────

impl Scenario {
    /// Canonical JSON rendering: per-period series written in full, ratios
    /// as `[num, den]` pairs unless integral, maps in key order. Parsing
    /// the output reproduces the scenario exactly.
    pub fn to_canonical_json(&self) -> String {
        let mut root = serde_json::Map::new();

        let mut topology = serde_json::Map::new();
        topology.insert("tiers".into(), self.topology.num_tiers.into());
        topology.insert("vens".into(), serde_json::to_value(&self.topology.vens).unwrap());
        let edges: Vec<&SupplyEdge> = self.topology.supply_edges.iter().collect();
        topology.insert("edges".into(), serde_json::to_value(edges).unwrap());
        root.insert("topology".into(), topology.into());

        root.insert(
            "products".into(),
            serde_json::to_value(&self.catalog.products).unwrap(),
        );

        let mut vens = serde_json::Map::new();
        for (ven_id, cfg) in &self.vens {
            let mut ven = serde_json::Map::new();
            ven.insert("principal".into(), serde_json::to_value(&cfg.principal).unwrap());
            if let Some(product) = &cfg.product {
                ven.insert("product".into(), serde_json::to_value(product).unwrap());
            }
            let mut members = serde_json::Map::new();
            for (member_id, profile) in &cfg.members {
                let mut m = serde_json::Map::new();
                m.insert("capacity".into(), serde_json::to_value(profile).unwrap());
                members.insert(member_id.0.clone(), m.into());
            }
            ven.insert("members".into(), members.into());
            vens.insert(ven_id.0.clone(), ven.into());
        }
        root.insert("vens".into(), vens.into());

        root.insert("orders".into(), serde_json::to_value(&self.orders).unwrap());

        let mut quotes: BTreeMap<&OrderId, BTreeMap<String, BTreeMap<&VenId, serde_json::Value>>> =
            BTreeMap::new();
        for ((order, round, member), proposal) in &self.quotes {
            let quote = match proposal.date {
                None => serde_json::json!([proposal.quantity, proposal.cost]),
                Some(d) => serde_json::json!([proposal.quantity, proposal.cost, d]),
            };
            quotes
                .entry(order)
                .or_default()
                .entry(round.to_string())
                .or_default()
                .insert(member, quote);
        }
        root.insert("quotes".into(), serde_json::to_value(quotes).unwrap());
        root.insert("prices".into(), serde_json::to_value(&self.prices).unwrap());

        if let Some(p) = &self.planning {
            let mut planning = serde_json::Map::new();
            planning.insert("forecasts".into(), serde_json::to_value(&p.forecasts).unwrap());
            planning.insert("param_sets".into(), serde_json::to_value(&p.param_sets).unwrap());
            planning.insert("tolerance".into(), serde_json::to_value(p.tolerance).unwrap());
            if let Some(m) = p.max_iterations {
                planning.insert("max_iterations".into(), m.into());
            }
            planning.insert(
                "unit_prices".into(),
                serde_json::to_value(&p.unit_prices).unwrap(),
            );
            planning.insert(
                "opening_stocks".into(),
                serde_json::to_value(&p.opening_stocks).unwrap(),
            );
            root.insert("planning".into(), planning.into());
        }

        if !self.bands.is_empty() {
            root.insert("bands".into(), serde_json::to_value(&self.bands).unwrap());
        }
        if !self.perturbations.is_empty() {
            let ps: Vec<serde_json::Value> = self
                .perturbations
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "origin": p.origin,
                        "kind": p.kind.to_string(),
                        "magnitude": p.magnitude,
                        "period": p.period,
                    })
                })
                .collect();
            root.insert("perturbations".into(), ps.into());
        }

        let mut out = serde_json::to_string_pretty(&serde_json::Value::Object(root)).unwrap();
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal_scenario_json() -> String {
        serde_json::json!({
            "topology": {
                "tiers": 2,
                "vens": {"mill": 1, "shop": 2},
                "edges": [{"supplier": "mill", "customer": "shop", "product": "board"}]
            },
            "products": {"board": {}, "chair": {"children": {"board": 4}}},
            "vens": {
                "mill": {"product": "board", "members": {"mill": {"capacity": {
                    "horizon": 6, "capacity": 10, "unit_cost": 1
                }}}},
                "shop": {"product": "chair", "members": {"shop": {"capacity": {
                    "horizon": 6, "capacity": 10, "unit_cost": 2
                }}}}
            },
            "orders": [{
                "id": "o1", "client": "shop", "principal_supplier": "mill",
                "product": "board", "quality": "std", "max_cost": 100,
                "quantity": 10, "min_quantity": 5, "due_date": 4, "latest_date": 6
            }],
            "prices": {"o1": 100}
        })
        .to_string()
    }

    #[test]
    fn minimal_scenario_parses() {
        let scenario = load_scenario_str(&minimal_scenario_json()).unwrap();
        assert_eq!(scenario.orders.len(), 1);
        assert_eq!(scenario.vens.len(), 2);
        assert_eq!(
            scenario.ven_of_member(&VenId::from("mill")).unwrap().0,
            &VenId::from("mill")
        );
    }

    #[test]
    fn empty_orders_is_valid() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&minimal_scenario_json()).unwrap();
        doc["orders"] = serde_json::json!([]);
        doc["prices"] = serde_json::json!({});
        let scenario = load_scenario_str(&doc.to_string()).unwrap();
        assert!(scenario.orders.is_empty());
    }

    #[test]
    fn min_quantity_above_quantity_is_rejected() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&minimal_scenario_json()).unwrap();
        doc["orders"][0]["min_quantity"] = serde_json::json!(50);
        match load_scenario_str(&doc.to_string()) {
            Err(ScenarioError::Invalid(violations)) => {
                assert!(violations.iter().any(|v| v.rule == "order-quantity-window"));
            }
            other => panic!("expected invariant failure, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_location() {
        match load_scenario_str("{ not json") {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_member_in_quotes_is_rejected() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&minimal_scenario_json()).unwrap();
        doc["quotes"] = serde_json::json!({"o1": {"1": {"ghost": [5, 5]}}});
        match load_scenario_str(&doc.to_string()) {
            Err(ScenarioError::Invalid(violations)) => {
                assert!(violations.iter().any(|v| v.rule == "unknown-member"));
            }
            other => panic!("expected invariant failure, got {other:?}"),
        }
    }

    #[test]
    fn normalization_is_idempotent() {
        let scenario = load_scenario_str(&minimal_scenario_json()).unwrap();
        let once = scenario.to_canonical_json();
        let reparsed = load_scenario_str(&once).unwrap();
        assert_eq!(reparsed, scenario);
        let twice = reparsed.to_canonical_json();
        assert_eq!(once, twice);
    }
}
