//! Immutable problem instances covering TSP, CVRP, GVRP, MDVRPTW, PCVRPTW,
//! VRPB and VRPTW, plus parsing, generation and validation.

mod generate;
mod matrix;
mod vrplib;

pub use generate::{generate_instance, GenerateError, GeneratorSpec, Variant};
pub use matrix::Matrix;

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Late bound used for "no time window" and "no limit" situations.
pub const TIME_HORIZON: i64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: i64,
    pub y: i64,
    pub is_depot: bool,
}

/// Per-node service requirements. There is one entry per node, depots
/// included, and `clients[i].node == i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Client {
    pub node: usize,
    /// Positive for deliveries (linehaul), negative for pickups (backhaul).
    pub demand: i64,
    pub tw_early: i64,
    pub tw_late: i64,
    pub service: i64,
    pub prize: i64,
    /// False only for prize-collecting clients that may be skipped.
    pub required: bool,
    pub cluster: Option<usize>,
}

impl Client {
    pub fn depot(node: usize, tw: [i64; 2]) -> Self {
        Client {
            node,
            demand: 0,
            tw_early: tw[0],
            tw_late: tw[1],
            service: 0,
            prize: 0,
            required: false,
            cluster: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleType {
    pub capacity: i64,
    pub count: usize,
    pub depot: usize,
    pub max_duration: Option<i64>,
    pub max_distance: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackhaulMode {
    #[default]
    None,
    /// All linehauls of a route must precede its backhauls.
    Strict,
    /// Pickups and deliveries may be interleaved; only the running load is
    /// constrained.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemData {
    pub nodes: Vec<Node>,
    pub clients: Vec<Client>,
    pub vehicle_types: Vec<VehicleType>,
    pub dist: Matrix,
    pub travel_time: Matrix,
    pub depot_tw: [i64; 2],
    pub open_routes: bool,
    pub backhaul_mode: BackhaulMode,
    pub prize_budget: Option<i64>,
    pub depots: Vec<usize>,
}

impl ProblemData {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_depot(&self, node: usize) -> bool {
        self.nodes.get(node).is_some_and(|n| n.is_depot)
    }

    /// Ids of all non-depot nodes, ascending.
    pub fn client_ids(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| !n.is_depot)
            .map(|n| n.id)
            .collect()
    }

    pub fn num_clients(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_depot).count()
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicle_types.iter().map(|v| v.count).sum()
    }

    pub fn has_clusters(&self) -> bool {
        self.clients.iter().any(|c| c.cluster.is_some())
    }

    /// Cluster members grouped by cluster id (index = cluster id).
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let count = self
            .clients
            .iter()
            .filter_map(|c| c.cluster)
            .max()
            .map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); count];
        for c in &self.clients {
            if let (Some(k), false) = (c.cluster, self.is_depot(c.node)) {
                groups[k].push(c.node);
            }
        }
        groups
    }

    /// Whether schedules can ever wait or run late. When false, every route
    /// has zero time warp and duration is irrelevant.
    pub fn time_constrained(&self) -> bool {
        if self.vehicle_types.iter().any(|v| v.max_duration.is_some()) {
            return true;
        }
        let start = self.depot_tw[0];
        let n = self.num_nodes();
        let max_tt = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.travel_time.get(i, j))
            .max()
            .unwrap_or(0);
        let services: i64 = self.clients.iter().map(|c| c.service.max(0)).sum();
        let latest_possible = start
            .saturating_add(services)
            .saturating_add(max_tt.saturating_mul(n as i64 + 1));
        let any_wait = self
            .clients
            .iter()
            .filter(|c| !self.is_depot(c.node))
            .any(|c| c.tw_early > start);
        let tightest = self
            .clients
            .iter()
            .filter(|c| !self.is_depot(c.node))
            .map(|c| c.tw_late)
            .chain(std::iter::once(self.depot_tw[1]))
            .min()
            .unwrap_or(TIME_HORIZON);
        any_wait || latest_possible > tightest
    }

    /// Best-effort label used by reports when no variant hint is given.
    pub fn variant_label(&self) -> &'static str {
        if self.has_clusters() {
            "GVRP"
        } else if self.clients.iter().any(|c| !c.required && !self.is_depot(c.node)) {
            "PCVRPTW"
        } else if self.depots.len() > 1 {
            "MDVRPTW"
        } else if self.backhaul_mode != BackhaulMode::None {
            "VRPB"
        } else if self.time_constrained() {
            "VRPTW"
        } else if self.num_vehicles() == 1 {
            "TSP"
        } else {
            "CVRP"
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("problem data always serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    Vrplib,
    NativeJson,
}

impl InstanceFormat {
    /// Guesses the format from the first non-blank character.
    pub fn sniff(text: &str) -> InstanceFormat {
        match text.trim_start().chars().next() {
            Some('{') => InstanceFormat::NativeJson,
            _ => InstanceFormat::Vrplib,
        }
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("line {line}: missing section {section}")]
    MissingSection { line: usize, section: String },
    #[error("line {line}: inconsistent dimension: {message}")]
    InconsistentDimension { line: usize, message: String },
    #[error("line {line}: malformed entry: {message}")]
    MalformedEntry { line: usize, message: String },
    #[error("inconsistent time window: {0}")]
    InconsistentTimeWindow(String),
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("line {line}: json: {message}")]
    Json { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads an instance. `format = None` sniffs the header. Distances from
/// coordinates are scaled by `scale` before rounding.
pub fn parse_instance_with(
    mut source: impl Read,
    format: Option<InstanceFormat>,
    scale: i64,
) -> Result<ProblemData, ParseError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let format = format.unwrap_or_else(|| InstanceFormat::sniff(&text));
    let data = match format {
        InstanceFormat::Vrplib => vrplib::parse(&text, scale)?,
        InstanceFormat::NativeJson => parse_json(&text)?,
    };
    let violations = validate(&data);
    if let Some(tw) = violations
        .iter()
        .find(|v| matches!(v.kind, ViolationKind::TimeWindow))
    {
        return Err(ParseError::InconsistentTimeWindow(tw.to_string()));
    }
    if !violations.is_empty() {
        return Err(ParseError::Invalid(violations));
    }
    Ok(data)
}

pub fn parse_instance(
    source: impl Read,
    format: Option<InstanceFormat>,
) -> Result<ProblemData, ParseError> {
    parse_instance_with(source, format, 1)
}

fn parse_json(text: &str) -> Result<ProblemData, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Json {
        line: e.line(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Structure,
    Matrix,
    TimeWindow,
    Negative,
    Depot,
    Cluster,
    Fleet,
    Backhaul,
}

/// One broken invariant, naming the field and index involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(kind: ViolationKind, field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            kind,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

/// Checks every instance invariant. Empty iff the instance is well formed.
pub fn validate(data: &ProblemData) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();
    let n = data.nodes.len();

    for (i, node) in data.nodes.iter().enumerate() {
        if node.id != i {
            out.push(Violation::new(
                Structure,
                format!("node[{i}].id"),
                format!("is {} (ids must be contiguous from 0)", node.id),
            ));
        }
    }
    if !data.nodes.iter().any(|n| n.is_depot) {
        out.push(Violation::new(Depot, "nodes", "contain no depot"));
    }
    let mut flagged: Vec<usize> = data.nodes.iter().filter(|n| n.is_depot).map(|n| n.id).collect();
    let mut listed = data.depots.clone();
    flagged.sort_unstable();
    listed.sort_unstable();
    if flagged != listed {
        out.push(Violation::new(
            Depot,
            "depots",
            format!("{listed:?} disagree with depot-flagged nodes {flagged:?}"),
        ));
    }

    if data.clients.len() != n {
        out.push(Violation::new(
            Structure,
            "clients",
            format!("has {} entries for {n} nodes", data.clients.len()),
        ));
    }
    let clustered = data.has_clusters();
    for (i, c) in data.clients.iter().enumerate() {
        if c.node != i {
            out.push(Violation::new(
                Structure,
                format!("client[{i}].node"),
                format!("is {}", c.node),
            ));
        }
        if c.tw_early > c.tw_late {
            out.push(Violation::new(
                TimeWindow,
                format!("client[{i}].time_window"),
                format!("inconsistent: early {} > late {}", c.tw_early, c.tw_late),
            ));
        }
        if c.service < 0 {
            out.push(Violation::new(Negative, format!("client[{i}].service"), "negative"));
        }
        if c.prize < 0 {
            out.push(Violation::new(Negative, format!("client[{i}].prize"), "negative"));
        }
        if data.is_depot(i) {
            if c.demand != 0 || c.service != 0 || c.prize != 0 {
                out.push(Violation::new(
                    Depot,
                    format!("client[{i}]"),
                    "is a depot with nonzero demand, service or prize",
                ));
            }
        } else {
            if clustered && c.cluster.is_none() {
                out.push(Violation::new(Cluster, format!("client {i}"), "missing cluster"));
            }
            if data.backhaul_mode == BackhaulMode::None && c.demand < 0 {
                out.push(Violation::new(
                    Backhaul,
                    format!("client[{i}].demand"),
                    "negative without a backhaul mode",
                ));
            }
        }
    }
    if clustered {
        for (k, members) in data.clusters().iter().enumerate() {
            if members.is_empty() {
                out.push(Violation::new(Cluster, format!("cluster {k}"), "has no members"));
            }
        }
    }

    if data.depot_tw[0] > data.depot_tw[1] {
        out.push(Violation::new(
            TimeWindow,
            "depot_tw",
            format!("inconsistent: {} > {}", data.depot_tw[0], data.depot_tw[1]),
        ));
    }

    for (name, m) in [("dist", &data.dist), ("travel_time", &data.travel_time)] {
        if m.size() != n {
            out.push(Violation::new(
                Matrix,
                name,
                format!("is {0}x{0} for {n} nodes", m.size()),
            ));
            continue;
        }
        for i in 0..n {
            if m.get(i, i) != 0 {
                out.push(Violation::new(Matrix, format!("{name}[{i}][{i}]"), "nonzero diagonal"));
            }
            for j in 0..n {
                if m.get(i, j) < 0 {
                    out.push(Violation::new(Matrix, format!("{name}[{i}][{j}]"), "negative"));
                }
            }
        }
    }

    for (k, v) in data.vehicle_types.iter().enumerate() {
        if v.capacity < 0 {
            out.push(Violation::new(Fleet, format!("vehicle_type[{k}].capacity"), "negative"));
        }
        if !data.is_depot(v.depot) || !data.depots.contains(&v.depot) {
            out.push(Violation::new(
                Fleet,
                format!("vehicle_type[{k}].depot"),
                format!("{} is not a depot", v.depot),
            ));
        }
        if v.max_duration.is_some_and(|d| d < 0) {
            out.push(Violation::new(Fleet, format!("vehicle_type[{k}].max_duration"), "negative"));
        }
        if v.max_distance.is_some_and(|d| d < 0) {
            out.push(Violation::new(Fleet, format!("vehicle_type[{k}].max_distance"), "negative"));
        }
    }

    if data.backhaul_mode == BackhaulMode::Strict
        && !data
            .clients
            .iter()
            .any(|c| c.demand > 0 && !data.is_depot(c.node))
    {
        out.push(Violation::new(
            Backhaul,
            "backhaul_mode",
            "strict backhaul needs at least one linehaul client",
        ));
    }
    if data.prize_budget.is_some_and(|b| b < 0) {
        out.push(Violation::new(Negative, "prize_budget", "negative"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_cvrp() -> ProblemData {
        generate_instance(&GeneratorSpec::new(Variant::Cvrp, 6, 11)).unwrap()
    }

    #[test]
    fn well_formed_cvrp_validates() {
        assert!(validate(&small_cvrp()).is_empty());
    }

    #[test]
    fn negative_capacity_is_reported() {
        let mut data = small_cvrp();
        data.vehicle_types[0].capacity = -1;
        let v = validate(&data);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "vehicle_type[0].capacity negative");
    }

    #[test]
    fn unclustered_client_in_gvrp_is_reported() {
        let mut data = generate_instance(&GeneratorSpec::new(Variant::Gvrp, 9, 2)).unwrap();
        data.clients[4].cluster = None;
        let v = validate(&data);
        assert!(v.iter().any(|v| v.to_string() == "client 4 missing cluster"), "{v:?}");
    }

    #[test]
    fn json_round_trip_is_identity() {
        for variant in Variant::ALL {
            let data = generate_instance(&GeneratorSpec::new(variant, 8, 5)).unwrap();
            let back = parse_instance(data.to_json().as_bytes(), None).unwrap();
            assert_eq!(back, data, "{variant:?}");
        }
    }

    #[test]
    fn json_with_inverted_window_is_rejected() {
        let mut data = small_cvrp();
        data.clients[2].tw_early = 50;
        data.clients[2].tw_late = 10;
        let err = parse_instance(data.to_json().as_bytes(), Some(InstanceFormat::NativeJson))
            .unwrap_err();
        assert!(matches!(err, ParseError::InconsistentTimeWindow(_)), "{err}");
    }

    #[test]
    fn strict_backhaul_without_linehaul_is_reported() {
        let mut data = generate_instance(&GeneratorSpec::new(Variant::Vrpb, 6, 3)).unwrap();
        for c in data.clients.iter_mut().skip(1) {
            c.demand = -c.demand.abs().max(1);
        }
        assert!(validate(&data).iter().any(|v| v.kind == ViolationKind::Backhaul));
    }
}
