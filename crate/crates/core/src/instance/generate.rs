//! Seeded random instances for each supported variant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BackhaulMode, Client, Matrix, Node, ProblemData, VehicleType, TIME_HORIZON};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Variant {
    Tsp,
    Cvrp,
    Gvrp,
    Mdvrptw,
    Pcvrptw,
    Vrpb,
    Vrptw,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Tsp,
        Variant::Cvrp,
        Variant::Gvrp,
        Variant::Mdvrptw,
        Variant::Pcvrptw,
        Variant::Vrpb,
        Variant::Vrptw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Tsp => "TSP",
            Variant::Cvrp => "CVRP",
            Variant::Gvrp => "GVRP",
            Variant::Mdvrptw => "MDVRPTW",
            Variant::Pcvrptw => "PCVRPTW",
            Variant::Vrpb => "VRPB",
            Variant::Vrptw => "VRPTW",
        }
    }

    fn has_time_windows(self) -> bool {
        matches!(self, Variant::Mdvrptw | Variant::Pcvrptw | Variant::Vrptw)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("unsupported variant {0:?}")]
    UnsupportedVariant(String),
    #[error("need at least 2 clients, got {0}")]
    TooFewClients(usize),
    #[error("invalid generator range: {0}")]
    BadRange(&'static str),
}

impl FromStr for Variant {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GenerateError::UnsupportedVariant(s.to_string()))
    }
}

/// Parameters of a generated instance. `n` counts clients, depots excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub variant: Variant,
    pub n: usize,
    pub seed: u64,
    pub coord_range: i64,
    pub demand_range: (i64, i64),
    pub tw_width: i64,
}

impl GeneratorSpec {
    pub fn new(variant: Variant, n: usize, seed: u64) -> Self {
        GeneratorSpec {
            variant,
            n,
            seed,
            coord_range: 1000,
            demand_range: (1, 10),
            tw_width: 200,
        }
    }
}

fn uniform(rng: &mut Rng, lo: i64, hi: i64) -> i64 {
    lo + rng.randint((hi - lo + 1) as usize) as i64
}

/// Builds a deterministic instance for `(spec, seed)`.
pub fn generate_instance(spec: &GeneratorSpec) -> Result<ProblemData, GenerateError> {
    if spec.n < 2 {
        return Err(GenerateError::TooFewClients(spec.n));
    }
    if spec.coord_range < 1 {
        return Err(GenerateError::BadRange("coord_range must be positive"));
    }
    let (dlo, dhi) = spec.demand_range;
    if dlo < 1 || dhi < dlo {
        return Err(GenerateError::BadRange("demand_range must satisfy 1 <= lo <= hi"));
    }
    if spec.tw_width < 1 {
        return Err(GenerateError::BadRange("tw_width must be positive"));
    }

    let mut rng = Rng::new(spec.seed);
    let variant = spec.variant;
    let num_depots = if variant == Variant::Mdvrptw { 3 } else { 1 };
    let total = num_depots + spec.n;
    let range = spec.coord_range;

    // Coordinates: depots first, then clients.
    let mut xy: Vec<(i64, i64)> = Vec::with_capacity(total);
    if num_depots == 1 {
        xy.push((range / 2, range / 2));
    } else {
        for _ in 0..num_depots {
            xy.push((uniform(&mut rng, 0, range), uniform(&mut rng, 0, range)));
        }
    }
    let mut cluster_of = vec![None; total];
    if variant == Variant::Gvrp {
        let k = spec.n.div_ceil(3).max(2).min(spec.n);
        let centres: Vec<(i64, i64)> = (0..k)
            .map(|_| (uniform(&mut rng, 0, range), uniform(&mut rng, 0, range)))
            .collect();
        let spread = (range / 20).max(1);
        for i in 0..spec.n {
            // Every cluster gets a member before any gets a second one.
            let c = if i < k { i } else { rng.randint(k) };
            let (cx, cy) = centres[c];
            let x = (cx + uniform(&mut rng, -spread, spread)).clamp(0, range);
            let y = (cy + uniform(&mut rng, -spread, spread)).clamp(0, range);
            xy.push((x, y));
            cluster_of[num_depots + i] = Some(c);
        }
    } else {
        for _ in 0..spec.n {
            xy.push((uniform(&mut rng, 0, range), uniform(&mut rng, 0, range)));
        }
    }

    let dist = Matrix::from_fn(total, |i, j| {
        let dx = (xy[i].0 - xy[j].0) as f64;
        let dy = (xy[i].1 - xy[j].1) as f64;
        (dx * dx + dy * dy).sqrt().round() as i64
    });

    let mut demands = vec![0i64; total];
    if variant != Variant::Tsp {
        for d in demands.iter_mut().skip(num_depots) {
            *d = uniform(&mut rng, dlo, dhi);
        }
    }
    let mut backhaul_mode = BackhaulMode::None;
    if variant == Variant::Vrpb {
        backhaul_mode = BackhaulMode::Strict;
        for d in demands.iter_mut().skip(num_depots) {
            if rng.rand() < 0.5 {
                *d = -*d;
            }
        }
        // Force at least one of each kind.
        demands[num_depots] = demands[num_depots].abs();
        demands[num_depots + 1] = -demands[num_depots + 1].abs();
    }

    let service = if variant.has_time_windows() { 10 } else { 0 };
    let horizon = if variant.has_time_windows() {
        4 * range + 10 * service * spec.n as i64 / 4
    } else {
        TIME_HORIZON
    };
    let depot_tw = [0, horizon];

    let mut clients = Vec::with_capacity(total);
    for d in 0..num_depots {
        clients.push(Client::depot(d, depot_tw));
    }
    for i in num_depots..total {
        let (early, late) = if variant.has_time_windows() {
            // Window relative to the nearest depot so a direct visit fits.
            let depot = (0..num_depots).min_by_key(|&d| dist.get(d, i)).unwrap();
            let first = depot_tw[0] + dist.get(depot, i);
            let last = depot_tw[1] - service - dist.get(i, depot);
            let centre = uniform(&mut rng, first, last.max(first));
            let half = spec.tw_width / 2;
            let early = (centre - half).max(first);
            let late = (centre + half).min(last).max(early);
            (early, late)
        } else {
            (0, TIME_HORIZON)
        };
        let prize = if variant == Variant::Pcvrptw {
            uniform(&mut rng, range / 20, range / 4)
        } else {
            0
        };
        clients.push(Client {
            node: i,
            demand: demands[i],
            tw_early: early,
            tw_late: late,
            service,
            prize,
            required: variant != Variant::Pcvrptw,
            cluster: cluster_of[i],
        });
    }

    let linehaul: i64 = demands.iter().filter(|d| **d > 0).sum();
    let backhaul: i64 = -demands.iter().filter(|d| **d < 0).sum::<i64>();
    let (capacity, count) = match variant {
        Variant::Tsp => (0, 1),
        _ => {
            let per_route = 8;
            let avg = (dlo + dhi) as f64 / 2.0;
            let capacity = ((avg * per_route as f64).round() as i64).max(dhi);
            let need = linehaul.max(backhaul) as f64 / capacity as f64;
            let count = ((need * 1.5).ceil() as usize + 1).max(2);
            (capacity, count)
        }
    };
    let per_depot = if num_depots > 1 {
        count.div_ceil(num_depots) + 1
    } else {
        count
    };
    let vehicle_types = (0..num_depots)
        .map(|d| VehicleType {
            capacity,
            count: per_depot,
            depot: d,
            max_duration: None,
            max_distance: None,
        })
        .collect();

    let nodes = (0..total)
        .map(|i| Node {
            id: i,
            x: xy[i].0,
            y: xy[i].1,
            is_depot: i < num_depots,
        })
        .collect();

    Ok(ProblemData {
        nodes,
        clients,
        vehicle_types,
        travel_time: dist.clone(),
        dist,
        depot_tw,
        open_routes: false,
        backhaul_mode,
        prize_budget: None,
        depots: (0..num_depots).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate;

    #[test]
    fn deterministic_per_seed() {
        let spec = GeneratorSpec::new(Variant::Tsp, 5, 7);
        let a = generate_instance(&spec).unwrap().to_json();
        let b = generate_instance(&spec).unwrap().to_json();
        assert_eq!(a, b);
        let other = generate_instance(&GeneratorSpec::new(Variant::Tsp, 5, 8)).unwrap();
        assert_ne!(a, other.to_json());
    }

    #[test]
    fn all_variants_validate() {
        for v in Variant::ALL {
            for seed in 0..5 {
                for n in [2, 3, 10, 30] {
                    let data = generate_instance(&GeneratorSpec::new(v, n, seed)).unwrap();
                    let issues = validate(&data);
                    assert!(issues.is_empty(), "{v} n={n} seed={seed}: {issues:?}");
                }
            }
        }
    }

    #[test]
    fn vrptw_windows_are_reachable_by_simulation() {
        let data = generate_instance(&GeneratorSpec::new(Variant::Vrptw, 20, 1)).unwrap();
        let [a0, b0] = data.depot_tw;
        for c in data.clients.iter().skip(1) {
            assert!(c.tw_early >= a0);
            // Simulate depot -> c -> depot starting at a0.
            let arrive = a0 + data.travel_time.get(0, c.node);
            let start = arrive.max(c.tw_early);
            assert!(start <= c.tw_late, "client {} unreachable", c.node);
            assert!(c.tw_late + c.service + data.travel_time.get(c.node, 0) <= b0);
        }
    }

    #[test]
    fn vrpb_has_both_kinds() {
        let data = generate_instance(&GeneratorSpec::new(Variant::Vrpb, 10, 3)).unwrap();
        assert!(data.clients.iter().any(|c| c.demand > 0));
        assert!(data.clients.iter().any(|c| c.demand < 0));
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!(matches!(
            "OVRP".parse::<Variant>(),
            Err(GenerateError::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn labels_match_generated_variant() {
        for v in Variant::ALL {
            let data = generate_instance(&GeneratorSpec::new(v, 12, 4)).unwrap();
            assert_eq!(data.variant_label(), v.name());
        }
    }
}
