//! Parser for R2R-style scan connectivity files: a JSON array of node
//! records with a row-major 4×4 pose, an inclusion flag, and a boolean
//! adjacency row per node.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::{NavigationGraph, Viewpoint};

#[derive(Deserialize)]
struct NodeRecord {
    image_id: String,
    pose: Vec<f64>,
    included: bool,
    unobstructed: Vec<bool>,
    #[serde(default)]
    #[allow(dead_code)]
    height: Option<f64>,
}

/// Load a connectivity file, keeping only included nodes and edges whose
/// adjacency bits are set symmetrically. Loaded scans carry no semantic
/// labels; observations over them have zero visual features.
pub fn load_connectivity(path: &Path) -> Result<NavigationGraph> {
    let text = std::fs::read_to_string(path)?;
    let records: Vec<NodeRecord> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: format!("{} line {}", path.display(), e.line()),
        message: e.to_string(),
    })?;

    let n = records.len();
    for rec in &records {
        if rec.pose.len() != 16 {
            return Err(Error::Parse {
                context: format!("node `{}`", rec.image_id),
                message: format!("pose has {} entries, expected 16", rec.pose.len()),
            });
        }
        if rec.unobstructed.len() != n {
            return Err(Error::Parse {
                context: format!("node `{}`", rec.image_id),
                message: format!(
                    "unobstructed has {} entries, expected {n}",
                    rec.unobstructed.len()
                ),
            });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if records[i].unobstructed[j] != records[j].unobstructed[i] {
                return Err(Error::Validation(format!(
                    "asymmetric adjacency between `{}` and `{}`",
                    records[i].image_id, records[j].image_id
                )));
            }
        }
    }

    let mut viewpoints = Vec::new();
    let mut kept = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        if !rec.included {
            continue;
        }
        kept.push(i);
        // Row-major 4×4: translation sits in the last column.
        viewpoints.push(Viewpoint {
            id: rec.image_id.clone(),
            position: [rec.pose[3], rec.pose[7], rec.pose[11]],
            room_label: None,
            object_labels: vec![],
        });
    }
    let mut edges = Vec::new();
    for (a, &i) in kept.iter().enumerate() {
        for &j in kept.iter().skip(a + 1) {
            if records[i].unobstructed[j] {
                edges.push((records[i].image_id.clone(), records[j].image_id.clone()));
            }
        }
    }
    NavigationGraph::from_parts(viewpoints, &edges, BTreeMap::new(), 0, 8, 0.0, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn pose(x: f64, y: f64, z: f64) -> Vec<f64> {
        vec![1.0, 0.0, 0.0, x, 0.0, 1.0, 0.0, y, 0.0, 0.0, 1.0, z, 0.0, 0.0, 0.0, 1.0]
    }

    fn write_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn record(id: &str, p: Vec<f64>, included: bool, adj: &[bool]) -> serde_json::Value {
        serde_json::json!({
            "image_id": id,
            "pose": p,
            "included": included,
            "unobstructed": adj,
            "height": 1.5,
        })
    }

    #[test]
    fn two_mutually_adjacent_nodes() {
        let content = serde_json::to_string(&vec![
            record("n0", pose(0.0, 0.0, 0.0), true, &[false, true]),
            record("n1", pose(3.0, 4.0, 0.0), true, &[true, false]),
        ])
        .unwrap();
        let g = load_connectivity(write_file(&content).path()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edge_count(), 1);
        assert!((g.geodesic_distance("n0", "n1").unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn excluded_nodes_and_their_edges_are_dropped() {
        let content = serde_json::to_string(&vec![
            record("n0", pose(0.0, 0.0, 0.0), true, &[false, true, true]),
            record("n1", pose(1.0, 0.0, 0.0), false, &[true, false, true]),
            record("n2", pose(2.0, 0.0, 0.0), true, &[true, true, false]),
        ])
        .unwrap();
        let g = load_connectivity(write_file(&content).path()).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.index_of("n1").is_err());
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn asymmetric_adjacency_names_both_nodes() {
        let content = serde_json::to_string(&vec![
            record("left", pose(0.0, 0.0, 0.0), true, &[false, true]),
            record("right", pose(1.0, 0.0, 0.0), true, &[false, false]),
        ])
        .unwrap();
        let err = load_connectivity(write_file(&content).path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("left") && msg.contains("right"), "{msg}");
    }

    #[test]
    fn malformed_json_reports_line_context() {
        let err = load_connectivity(write_file("[{\"image_id\": }]").path()).unwrap_err();
        match err {
            Error::Parse { context, .. } => assert!(context.contains("line")),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn counts_match_independent_value_walk() {
        // A synthetic scan in the real file layout, parsed two ways.
        let n = 12;
        let mut rng = crate::rng::rng(99);
        use rand::Rng;
        let mut adj = vec![vec![false; n]; n];
        // Random symmetric adjacency over a spanning chain.
        for i in 1..n {
            adj[i - 1][i] = true;
            adj[i][i - 1] = true;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.2) {
                    adj[i][j] = true;
                    adj[j][i] = true;
                }
            }
        }
        let included: Vec<bool> = (0..n).map(|i| i % 5 != 4).collect();
        // Keep the included subgraph connected: the chain covers it as long
        // as consecutive included nodes stay linked across gaps.
        let kept: Vec<usize> = (0..n).filter(|&i| included[i]).collect();
        for w in kept.windows(2) {
            adj[w[0]][w[1]] = true;
            adj[w[1]][w[0]] = true;
        }
        let records: Vec<serde_json::Value> = (0..n)
            .map(|i| {
                record(
                    &format!("node{i:02}"),
                    pose(i as f64, (i * i % 7) as f64, 0.0),
                    included[i],
                    &adj[i],
                )
            })
            .collect();
        let content = serde_json::to_string(&records).unwrap();
        let file = write_file(&content);
        let g = load_connectivity(file.path()).unwrap();

        // Independent oracle: walk the raw JSON values.
        let raw: Vec<serde_json::Value> =
            serde_json::from_str(&std::fs::read_to_string(file.path()).unwrap()).unwrap();
        let inc: Vec<bool> =
            raw.iter().map(|r| r["included"].as_bool().unwrap()).collect();
        let node_count = inc.iter().filter(|&&b| b).count();
        let mut edge_count = 0;
        for i in 0..raw.len() {
            for j in (i + 1)..raw.len() {
                if inc[i]
                    && inc[j]
                    && raw[i]["unobstructed"][j].as_bool().unwrap()
                {
                    edge_count += 1;
                }
            }
        }
        assert_eq!(g.len(), node_count);
        assert_eq!(g.edge_count(), edge_count);
    }
}
