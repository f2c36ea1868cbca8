//! TSPLIB/VRPLIB-style text instances.
//!
//! Supported sections: NODE_COORD_SECTION, DEMAND_SECTION, BACKHAUL_SECTION
//! (signed demands), TIME_WINDOW_SECTION, SERVICE_TIME_SECTION,
//! DEPOT_SECTION, CLUSTER_SECTION, PRIZE_SECTION and EDGE_WEIGHT_SECTION
//! (FULL_MATRIX). Header keys: DIMENSION, CAPACITY, VEHICLES,
//! EDGE_WEIGHT_TYPE, EDGE_WEIGHT_FORMAT, SERVICE_TIME, DISTANCE, DURATION,
//! OPEN_ROUTES, BACKHAUL_MODE, PRIZE_BUDGET. Node ids in the file are 1-based.

use std::collections::HashMap;

use super::{
    BackhaulMode, Client, Matrix, Node, ParseError, ProblemData, VehicleType, TIME_HORIZON,
};

const SECTIONS: &[&str] = &[
    "NODE_COORD_SECTION",
    "DEMAND_SECTION",
    "BACKHAUL_SECTION",
    "TIME_WINDOW_SECTION",
    "SERVICE_TIME_SECTION",
    "DEPOT_SECTION",
    "CLUSTER_SECTION",
    "PRIZE_SECTION",
    "EDGE_WEIGHT_SECTION",
];

struct Section {
    line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

fn nint(x: f64) -> i64 {
    x.round() as i64
}

pub(super) fn parse(text: &str, scale: i64) -> Result<ProblemData, ParseError> {
    let scale_f = scale as f64;
    let mut header: HashMap<String, (usize, String)> = HashMap::new();
    let mut sections: HashMap<&'static str, Section> = HashMap::new();
    let mut current: Option<&'static str> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        let first = line.split_whitespace().next().unwrap_or("");
        let keyword = first.trim_end_matches(':');
        if let Some(name) = SECTIONS.iter().find(|s| **s == keyword) {
            current = Some(name);
            sections.insert(
                name,
                Section {
                    line: line_no,
                    rows: Vec::new(),
                },
            );
            continue;
        }
        let numeric = first.parse::<f64>().is_ok();
        if numeric {
            let Some(name) = current else {
                return Err(ParseError::MalformedHeader {
                    line: line_no,
                    message: format!("data line outside any section: {line:?}"),
                });
            };
            let values = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ParseError::MalformedEntry {
                    line: line_no,
                    message: format!("{line:?}: {e}"),
                })?;
            sections.get_mut(name).unwrap().rows.push((line_no, values));
            continue;
        }
        current = None;
        let Some((key, value)) = line.split_once(':') else {
            return Err(ParseError::MalformedHeader {
                line: line_no,
                message: format!("expected KEY : VALUE, got {line:?}"),
            });
        };
        let key = key.trim().to_ascii_uppercase();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ParseError::MalformedHeader {
                line: line_no,
                message: format!("bad key in {line:?}"),
            });
        }
        header.insert(key, (line_no, value.trim().to_string()));
    }

    let int_key = |key: &str| -> Result<Option<(usize, i64)>, ParseError> {
        match header.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<f64>()
                .map(|x| Some((*line, nint(x))))
                .map_err(|_| ParseError::MalformedHeader {
                    line: *line,
                    message: format!("{key} must be numeric, got {v:?}"),
                }),
        }
    };

    let (_, dimension) = int_key("DIMENSION")?.ok_or(ParseError::MissingSection {
        line: last_line,
        section: "DIMENSION".into(),
    })?;
    if dimension < 2 {
        return Err(ParseError::InconsistentDimension {
            line: header["DIMENSION"].0,
            message: format!("DIMENSION {dimension} must be at least 2"),
        });
    }
    let n = dimension as usize;

    let node_index = |line: usize, id: f64| -> Result<usize, ParseError> {
        let id = id as i64;
        if id < 1 || id as usize > n {
            return Err(ParseError::InconsistentDimension {
                line,
                message: format!("node id {id} outside 1..={n}"),
            });
        }
        Ok(id as usize - 1)
    };

    // Per-node columns from a `id v1 v2 ...` section.
    let columns = |name: &str, width: usize| -> Result<Option<Vec<Option<Vec<f64>>>>, ParseError> {
        let Some(section) = sections.get(name) else {
            return Ok(None);
        };
        let mut out = vec![None; n];
        for (line, row) in &section.rows {
            if row.len() != width + 1 {
                return Err(ParseError::MalformedEntry {
                    line: *line,
                    message: format!("{name} rows need {} values, got {}", width + 1, row.len()),
                });
            }
            let i = node_index(*line, row[0])?;
            out[i] = Some(row[1..].to_vec());
        }
        Ok(Some(out))
    };

    let weight_type = header
        .get("EDGE_WEIGHT_TYPE")
        .map(|(l, v)| (*l, v.to_ascii_uppercase()))
        .unwrap_or((0, "EUC_2D".into()));

    let coords = columns("NODE_COORD_SECTION", 2)?;
    if let (Some(c), Some(s)) = (&coords, sections.get("NODE_COORD_SECTION")) {
        if s.rows.len() != n || c.iter().any(|x| x.is_none()) {
            return Err(ParseError::InconsistentDimension {
                line: s.line,
                message: format!(
                    "NODE_COORD_SECTION has {} entries for DIMENSION {n}",
                    s.rows.len()
                ),
            });
        }
    }
    let xy: Vec<(f64, f64)> = match &coords {
        Some(c) => c
            .iter()
            .map(|r| {
                let r = r.as_ref().unwrap();
                (r[0] * scale_f, r[1] * scale_f)
            })
            .collect(),
        None => vec![(0.0, 0.0); n],
    };

    let dist = match weight_type.1.as_str() {
        "EUC_2D" => {
            if coords.is_none() {
                return Err(ParseError::MissingSection {
                    line: last_line,
                    section: "NODE_COORD_SECTION".into(),
                });
            }
            Matrix::from_fn(n, |i, j| {
                let dx = xy[i].0 - xy[j].0;
                let dy = xy[i].1 - xy[j].1;
                nint((dx * dx + dy * dy).sqrt())
            })
        }
        "EXPLICIT" => {
            if let Some((line, fmt)) = header.get("EDGE_WEIGHT_FORMAT") {
                if !fmt.eq_ignore_ascii_case("FULL_MATRIX") {
                    return Err(ParseError::MalformedHeader {
                        line: *line,
                        message: format!("unsupported EDGE_WEIGHT_FORMAT {fmt}"),
                    });
                }
            }
            let section = sections.get("EDGE_WEIGHT_SECTION").ok_or(ParseError::MissingSection {
                line: last_line,
                section: "EDGE_WEIGHT_SECTION".into(),
            })?;
            let values: Vec<f64> = section.rows.iter().flat_map(|(_, r)| r.iter().copied()).collect();
            if values.len() != n * n {
                return Err(ParseError::InconsistentDimension {
                    line: section.line,
                    message: format!("EDGE_WEIGHT_SECTION has {} values, expected {}", values.len(), n * n),
                });
            }
            Matrix::from_fn(n, |i, j| nint(values[i * n + j] * scale_f))
        }
        other => {
            return Err(ParseError::MalformedHeader {
                line: weight_type.0,
                message: format!("unsupported EDGE_WEIGHT_TYPE {other}"),
            })
        }
    };

    let depots: Vec<usize> = match sections.get("DEPOT_SECTION") {
        Some(s) => {
            let mut ids = Vec::new();
            for (line, row) in &s.rows {
                for &v in row {
                    if v < 0.0 {
                        break;
                    }
                    ids.push(node_index(*line, v)?);
                }
            }
            if ids.is_empty() {
                return Err(ParseError::MissingSection {
                    line: s.line,
                    section: "DEPOT_SECTION entries".into(),
                });
            }
            ids
        }
        None => vec![0],
    };
    let is_depot: Vec<bool> = (0..n).map(|i| depots.contains(&i)).collect();

    let demand = columns("DEMAND_SECTION", 1)?;
    let backhaul = columns("BACKHAUL_SECTION", 1)?;
    let tws = columns("TIME_WINDOW_SECTION", 2)?;
    let services = columns("SERVICE_TIME_SECTION", 1)?;
    let clusters = columns("CLUSTER_SECTION", 1)?;
    let prizes = columns("PRIZE_SECTION", 1)?;
    let default_service = header
        .get("SERVICE_TIME")
        .and_then(|(_, v)| v.parse::<f64>().ok())
        .unwrap_or(0.0);

    let pick = |col: &Option<Vec<Option<Vec<f64>>>>, i: usize, k: usize| -> Option<f64> {
        col.as_ref().and_then(|c| c[i].as_ref()).map(|r| r[k])
    };

    let first_depot = depots[0];
    let depot_tw = match pick(&tws, first_depot, 0) {
        Some(a) => [nint(a * scale_f), nint(pick(&tws, first_depot, 1).unwrap() * scale_f)],
        None => [0, TIME_HORIZON],
    };

    let mut clients = Vec::with_capacity(n);
    for i in 0..n {
        if is_depot[i] {
            let tw = match pick(&tws, i, 0) {
                Some(a) => [nint(a * scale_f), nint(pick(&tws, i, 1).unwrap() * scale_f)],
                None => depot_tw,
            };
            clients.push(Client::depot(i, tw));
            continue;
        }
        let q = pick(&backhaul, i, 0).or(pick(&demand, i, 0)).unwrap_or(0.0);
        let (a, b) = match pick(&tws, i, 0) {
            Some(a) => (nint(a * scale_f), nint(pick(&tws, i, 1).unwrap() * scale_f)),
            None => (depot_tw[0], depot_tw[1]),
        };
        clients.push(Client {
            node: i,
            demand: nint(q),
            tw_early: a,
            tw_late: b,
            service: nint(pick(&services, i, 0).unwrap_or(default_service) * scale_f),
            prize: nint(pick(&prizes, i, 0).unwrap_or(0.0) * scale_f),
            required: prizes.is_none(),
            cluster: pick(&clusters, i, 0).map(|c| c as usize),
        });
    }

    let has_negative = clients.iter().any(|c| c.demand < 0);
    let backhaul_mode = match header.get("BACKHAUL_MODE") {
        Some((line, v)) => match v.to_ascii_uppercase().as_str() {
            "STRICT" => BackhaulMode::Strict,
            "MIXED" => BackhaulMode::Mixed,
            "NONE" => BackhaulMode::None,
            other => {
                return Err(ParseError::MalformedHeader {
                    line: *line,
                    message: format!("unknown BACKHAUL_MODE {other}"),
                })
            }
        },
        None if backhaul.is_some() || has_negative => BackhaulMode::Strict,
        None => BackhaulMode::None,
    };

    let is_tsp = header
        .get("TYPE")
        .is_some_and(|(_, v)| v.eq_ignore_ascii_case("TSP"));
    let total_demand: i64 = clients.iter().map(|c| c.demand.max(0)).sum();
    let capacity = match int_key("CAPACITY")? {
        Some((_, c)) => c,
        None => total_demand.max(clients.iter().map(|c| -c.demand.min(0)).sum()),
    };
    let num_clients = n - depots.len();
    let count = match int_key("VEHICLES")? {
        Some((line, v)) if v < 0 => {
            return Err(ParseError::MalformedHeader {
                line,
                message: "VEHICLES must be non-negative".into(),
            })
        }
        Some((_, v)) => v as usize,
        None if is_tsp => 1,
        None => num_clients.max(1),
    };
    let max_distance = int_key("DISTANCE")?.map(|(_, d)| d * scale);
    let max_duration = int_key("DURATION")?.map(|(_, d)| d * scale);
    let vehicle_types = depots
        .iter()
        .map(|&d| VehicleType {
            capacity,
            count,
            depot: d,
            max_duration,
            max_distance,
        })
        .collect();

    let open_routes = header.get("OPEN_ROUTES").is_some_and(|(_, v)| {
        matches!(v.to_ascii_uppercase().as_str(), "TRUE" | "YES" | "1")
    });

    let nodes = (0..n)
        .map(|i| Node {
            id: i,
            x: nint(xy[i].0),
            y: nint(xy[i].1),
            is_depot: is_depot[i],
        })
        .collect();

    Ok(ProblemData {
        nodes,
        clients,
        vehicle_types,
        travel_time: dist.clone(),
        dist,
        depot_tw,
        open_routes,
        backhaul_mode,
        prize_budget: int_key("PRIZE_BUDGET")?.map(|(_, b)| b * scale),
        depots,
    })
}

#[cfg(test)]
mod tests {
    use crate::instance::{parse_instance, InstanceFormat, ParseError};

    fn parse(text: &str) -> Result<crate::instance::ProblemData, ParseError> {
        parse_instance(text.as_bytes(), Some(InstanceFormat::Vrplib))
    }

    #[test]
    fn three_four_five_triangle() {
        let text = "NAME : tri\nTYPE : CVRP\nDIMENSION : 3\nCAPACITY : 10\nEDGE_WEIGHT_TYPE : EUC_2D\n\
                    NODE_COORD_SECTION\n1 0 0\n2 3 4\n3 0 0\nDEMAND_SECTION\n1 1\n2 1\n3 0\n\
                    DEPOT_SECTION\n3\n-1\nEOF\n";
        let data = parse(text).unwrap();
        assert_eq!(data.depots, vec![2]);
        assert_eq!(data.dist.get(2, 1), 5);
        assert_eq!(data.dist.get(1, 2), 5);
        assert!(data.dist.is_symmetric());
    }

    // A CVRPLIB-layout instance whose distances are recomputed independently.
    const SMALL: &str = "NAME : small-n6\nCOMMENT : hand made\nTYPE : CVRP\nDIMENSION : 6\n\
        EDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 30\nNODE_COORD_SECTION\n 1 50 50\n 2 12 81\n\
        3 77 3\n 4 61.5 90.2\n 5 5 5\n 6 99 40\nDEMAND_SECTION\n1 0\n2 10\n3 12\n4 7\n5 9\n6 14\n\
        DEPOT_SECTION\n 1\n -1\nEOF\n";

    #[test]
    fn cvrplib_distances_match_hand_rounding() {
        let data = parse(SMALL).unwrap();
        // sqrt(38^2 + 31^2) = 49.04 -> 49 ; sqrt(27^2 + 47^2) = 54.20 -> 54
        // (61.5-12)^2 + (90.2-81)^2 -> sqrt(2450.25 + 84.64) = 50.35 -> 50
        // (99-5)^2 + (40-5)^2 -> sqrt(8836 + 1225) = 100.30 -> 100
        // (77-61.5)^2 + (3-90.2)^2 -> sqrt(240.25 + 7603.84) = 88.57 -> 89
        let expected = [((0, 1), 49), ((0, 2), 54), ((3, 1), 50), ((4, 5), 100), ((2, 3), 89)];
        for ((i, j), d) in expected {
            assert_eq!(data.dist.get(i, j), d, "({i},{j})");
        }
        assert_eq!(data.vehicle_types[0].capacity, 30);
        assert_eq!(data.clients[5].demand, 14);
    }

    #[test]
    fn errors_name_the_line() {
        let bad_header = "NAME : x\nDIMENSION 3\n";
        match parse(bad_header).unwrap_err() {
            ParseError::MalformedHeader { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        let missing = "NAME : x\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nEOF\n";
        assert!(matches!(parse(missing).unwrap_err(), ParseError::MissingSection { .. }));
        let out_of_range = "DIMENSION : 2\nNODE_COORD_SECTION\n1 0 0\n3 1 1\n";
        match parse(out_of_range).unwrap_err() {
            ParseError::InconsistentDimension { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
        let short = "DIMENSION : 3\nNODE_COORD_SECTION\n1 0 0\n2 1 1\nEOF\n";
        match parse(short).unwrap_err() {
            ParseError::InconsistentDimension { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn extension_sections() {
        let text = "DIMENSION : 4\nCAPACITY : 20\nVEHICLES : 2\nNODE_COORD_SECTION\n1 0 0\n2 0 10\n\
                    3 10 0\n4 10 10\nBACKHAUL_SECTION\n2 5\n3 -4\n4 6\nTIME_WINDOW_SECTION\n1 0 500\n\
                    2 10 40\n3 0 500\n4 0 500\nSERVICE_TIME_SECTION\n2 3\n3 3\n4 3\nEOF\n";
        let data = parse(text).unwrap();
        assert_eq!(data.backhaul_mode, crate::instance::BackhaulMode::Strict);
        assert_eq!(data.clients[2].demand, -4);
        assert_eq!(data.depot_tw, [0, 500]);
        assert_eq!((data.clients[1].tw_early, data.clients[1].tw_late), (10, 40));
        assert_eq!(data.clients[3].service, 3);
        assert_eq!(data.vehicle_types[0].count, 2);

        let explicit = "DIMENSION : 3\nEDGE_WEIGHT_TYPE : EXPLICIT\nEDGE_WEIGHT_FORMAT : FULL_MATRIX\n\
                        EDGE_WEIGHT_SECTION\n0 4 7\n4 0 2\n7 2 0\nPRIZE_SECTION\n2 9\n3 1\nEOF\n";
        let data = parse(explicit).unwrap();
        assert_eq!(data.dist.get(0, 2), 7);
        assert!(!data.clients[1].required);
        assert_eq!(data.clients[1].prize, 9);
    }
}
