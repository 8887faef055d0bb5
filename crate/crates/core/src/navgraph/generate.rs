//! Seeded synthetic worlds: a two-floor random geometric graph over a
//! 30m×30m footprint, augmented to connectivity, with room labels assigned
//! by spatial cell and 1–3 object labels per viewpoint.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::instructions::Vocabulary;
use crate::rng::rng_for;

use super::{euclidean, NavigationGraph, Viewpoint, WorldSpec, MAX_CANDIDATES};

const BOX_SIDE: f64 = 30.0;
const FLOOR_HEIGHT: f64 = 3.0;
/// Spatial room cells per floor along each axis.
const CELLS: usize = 3;

pub fn generate_world(spec: &WorldSpec) -> Result<NavigationGraph> {
    spec.validate()?;
    let vocab = Vocabulary::standard();
    let (room_labels, object_labels) = vocab.label_partition(spec.vocab_size);

    // Positions: two floors, uniform in the footprint.
    let mut pos_rng = rng_for(spec.seed, "world-positions", 0);
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(spec.n_viewpoints);
    for _ in 0..spec.n_viewpoints {
        let floor = if pos_rng.gen_bool(0.5) { FLOOR_HEIGHT } else { 0.0 };
        positions.push([
            pos_rng.gen_range(0.0..BOX_SIDE),
            pos_rng.gen_range(0.0..BOX_SIDE),
            floor,
        ]);
    }

    // Random geometric graph per floor, radius chosen to hit mean_degree.
    let mut degree = vec![0usize; spec.n_viewpoints];
    let cap = MAX_CANDIDATES - 1;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut have_edge = vec![false; spec.n_viewpoints * spec.n_viewpoints];
    let mut candidate_edges: Vec<(f64, usize, usize)> = Vec::new();
    for floor in [0.0, FLOOR_HEIGHT] {
        let members: Vec<usize> =
            (0..spec.n_viewpoints).filter(|&i| positions[i][2] == floor).collect();
        if members.len() < 2 {
            continue;
        }
        let density = members.len() as f64 / (BOX_SIDE * BOX_SIDE);
        let radius = (spec.mean_degree / (density * std::f64::consts::PI)).sqrt();
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                let d = euclidean(&positions[i], &positions[j]);
                if d <= radius {
                    candidate_edges.push((d, i.min(j), i.max(j)));
                }
            }
        }
    }
    candidate_edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let push_edge = |edges: &mut Vec<(usize, usize)>,
                         degree: &mut Vec<usize>,
                         have_edge: &mut Vec<bool>,
                         i: usize,
                         j: usize|
     -> bool {
        if degree[i] >= cap || degree[j] >= cap || have_edge[i * spec.n_viewpoints + j] {
            return false;
        }
        have_edge[i * spec.n_viewpoints + j] = true;
        have_edge[j * spec.n_viewpoints + i] = true;
        degree[i] += 1;
        degree[j] += 1;
        edges.push((i, j));
        true
    };
    for (_, i, j) in &candidate_edges {
        push_edge(&mut edges, &mut degree, &mut have_edge, *i, *j);
    }

    // Stair edges: the two closest (x, y) pairs across floors.
    let lower: Vec<usize> = (0..spec.n_viewpoints).filter(|&i| positions[i][2] == 0.0).collect();
    let upper: Vec<usize> =
        (0..spec.n_viewpoints).filter(|&i| positions[i][2] == FLOOR_HEIGHT).collect();
    if !lower.is_empty() && !upper.is_empty() {
        let mut cross: Vec<(f64, usize, usize)> = Vec::new();
        for &i in &lower {
            for &j in &upper {
                cross.push((euclidean(&positions[i], &positions[j]), i, j));
            }
        }
        cross.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut added = 0;
        for (_, i, j) in cross {
            if push_edge(&mut edges, &mut degree, &mut have_edge, i, j) {
                added += 1;
                if added == 2 {
                    break;
                }
            }
        }
    }

    // Augment to a single component: repeatedly join the closest pair that
    // spans two components.
    let mut comp: Vec<usize> = (0..spec.n_viewpoints).collect();
    fn find(comp: &mut Vec<usize>, mut x: usize) -> usize {
        while comp[x] != x {
            comp[x] = comp[comp[x]];
            x = comp[x];
        }
        x
    }
    for &(i, j) in &edges {
        let (a, b) = (find(&mut comp, i), find(&mut comp, j));
        if a != b {
            comp[a] = b;
        }
    }
    loop {
        let roots: Vec<usize> =
            (0..spec.n_viewpoints).filter(|&i| find(&mut comp, i) == i).collect();
        if roots.len() <= 1 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..spec.n_viewpoints {
            for j in i + 1..spec.n_viewpoints {
                if find(&mut comp, i) == find(&mut comp, j) {
                    continue;
                }
                if degree[i] >= cap || degree[j] >= cap {
                    continue;
                }
                let d = euclidean(&positions[i], &positions[j]);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.ok_or_else(|| {
            crate::error::Error::Validation("degree cap blocked connectivity augmentation".into())
        })?;
        push_edge(&mut edges, &mut degree, &mut have_edge, i, j);
        let (a, b) = (find(&mut comp, i), find(&mut comp, j));
        comp[a] = b;
    }

    // Room labels by spatial cell; cells draw from the world's room vocab.
    let mut label_rng = rng_for(spec.seed, "world-labels", 0);
    let cell_count = CELLS * CELLS * 2;
    let mut cell_rooms = Vec::with_capacity(cell_count);
    for i in 0..cell_count {
        if i < room_labels.len() {
            cell_rooms.push(room_labels[i]);
        } else {
            cell_rooms.push(room_labels[label_rng.gen_range(0..room_labels.len())]);
        }
    }
    cell_rooms.shuffle(&mut label_rng);

    let cell_of = |p: &[f64; 3]| -> usize {
        let cx = ((p[0] / (BOX_SIDE / CELLS as f64)) as usize).min(CELLS - 1);
        let cy = ((p[1] / (BOX_SIDE / CELLS as f64)) as usize).min(CELLS - 1);
        let cf = usize::from(p[2] > 0.0);
        cf * CELLS * CELLS + cy * CELLS + cx
    };

    let mut viewpoints = Vec::with_capacity(spec.n_viewpoints);
    for (i, p) in positions.iter().enumerate() {
        let n_objects = label_rng.gen_range(1..=3usize);
        let mut objs: Vec<u32> = Vec::with_capacity(n_objects);
        while objs.len() < n_objects {
            let pick = object_labels[label_rng.gen_range(0..object_labels.len())];
            if !objs.contains(&pick) {
                objs.push(pick);
            }
        }
        viewpoints.push(Viewpoint {
            id: format!("vp{i:03}"),
            position: *p,
            room_label: Some(cell_rooms[cell_of(p)]),
            object_labels: objs,
        });
    }

    // Codebook over every label word this world can use.
    let mut code_rng = rng_for(spec.seed, "world-codebook", 0);
    let sigma = 1.0 / (spec.feature_dim as f64).sqrt();
    let mut codebook = BTreeMap::new();
    for &label in room_labels.iter().chain(object_labels.iter()) {
        let vec: Vec<f64> = (0..spec.feature_dim)
            .map(|_| {
                let u1: f64 = code_rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = code_rng.gen_range(0.0..1.0);
                sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        codebook.insert(label, vec);
    }

    let named_edges: Vec<(String, String)> = edges
        .iter()
        .map(|&(i, j)| (viewpoints[i].id.clone(), viewpoints[j].id.clone()))
        .collect();
    NavigationGraph::from_parts(
        viewpoints,
        &named_edges,
        codebook,
        spec.feature_dim,
        spec.angle_dim,
        spec.noise_sigma,
        spec.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_world_is_connected_with_requested_size() {
        let spec = WorldSpec { n_viewpoints: 4, seed: 3, ..WorldSpec::default() };
        let g = generate_world(&spec).unwrap();
        assert_eq!(g.len(), 4);
        // from_parts would have rejected a disconnected graph.
        for i in 0..4 {
            assert!(g.distances_from(0)[i].is_finite());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = WorldSpec { n_viewpoints: 20, seed: 9, ..WorldSpec::default() };
        let a = generate_world(&spec).unwrap().to_json().unwrap();
        let b = generate_world(&spec).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_spec_is_config_error() {
        let spec = WorldSpec { n_viewpoints: 2, ..WorldSpec::default() };
        assert!(matches!(generate_world(&spec), Err(crate::error::Error::Config(_))));
    }

    #[test]
    fn edge_lengths_equal_euclidean_distance() {
        let spec = WorldSpec { n_viewpoints: 25, seed: 5, ..WorldSpec::default() };
        let g = generate_world(&spec).unwrap();
        for u in 0..g.len() {
            for &(v, len) in g.neighbors(u) {
                let d = euclidean(&g.viewpoint(u).position, &g.viewpoint(v).position);
                assert!((d - len).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn labels_are_in_world_vocabulary() {
        let spec = WorldSpec { n_viewpoints: 15, seed: 2, ..WorldSpec::default() };
        let g = generate_world(&spec).unwrap();
        for vp in g.viewpoints() {
            assert!(g.codebook().contains_key(&vp.room_label.unwrap()));
            assert!(!vp.object_labels.is_empty() && vp.object_labels.len() <= 3);
            for l in &vp.object_labels {
                assert!(g.codebook().contains_key(l));
            }
        }
    }

    #[test]
    fn two_floors_exist_with_stair_edges() {
        let spec = WorldSpec { n_viewpoints: 30, seed: 7, ..WorldSpec::default() };
        let g = generate_world(&spec).unwrap();
        let floors: Vec<f64> = g.viewpoints().iter().map(|v| v.position[2]).collect();
        assert!(floors.iter().any(|&z| z == 0.0));
        assert!(floors.iter().any(|&z| z > 0.0));
        let mut stairs = 0;
        for u in 0..g.len() {
            for &(v, _) in g.neighbors(u) {
                if u < v && g.viewpoint(u).position[2] != g.viewpoint(v).position[2] {
                    stairs += 1;
                }
            }
        }
        assert!(stairs >= 1);
    }
}
