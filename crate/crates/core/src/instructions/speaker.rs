//! Deterministic multi-level speaker over navigation-graph paths.
//!
//! One seeded clause plan drives all four levels so the family stays
//! aligned: L1 is L0 with the redundancy clause dropped and direction words
//! filtered out, L2 removes one or two non-final clauses from L1, and L3 is
//! a single goal reference.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::navgraph::{normalize_angle, NavigationGraph};
use crate::rng::rng_for;

use super::{tokenize, Instruction, Level, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq)]
enum ClauseKind {
    Step,
    Redundancy,
    Stop,
}

#[derive(Debug, Clone)]
struct Clause {
    kind: ClauseKind,
    text: String,
}

/// The seeded clause plan behind one instruction family. Exposed so tests
/// and dataset generation can ask how many steps the speaker templated.
#[derive(Debug, Clone)]
pub struct SpeakerPlan {
    clauses: Vec<Clause>,
    goal_object: String,
    goal_room: String,
    landmark: Option<String>,
    /// Start heading the direction words are phrased against; episode
    /// construction draws the same value from the same seed.
    pub start_heading: f64,
}

impl SpeakerPlan {
    /// Templated step clauses, the redundancy clause included.
    pub fn step_count(&self) -> usize {
        self.clauses.iter().filter(|c| c.kind != ClauseKind::Stop).count()
    }
}

/// Start heading for an episode seeded with `seed`; the speaker phrases its
/// first direction word against the same value.
pub fn episode_heading(seed: u64) -> f64 {
    rng_for(seed, "heading", 0).gen_range(0.0..2.0 * std::f64::consts::PI)
}

fn direction_word(rel: f64) -> &'static str {
    use std::f64::consts::PI;
    let r = normalize_angle(rel);
    if r < PI / 4.0 || r >= 7.0 * PI / 4.0 {
        "straight"
    } else if r < 3.0 * PI / 4.0 {
        "left"
    } else if r < 5.0 * PI / 4.0 {
        "around"
    } else {
        "right"
    }
}

fn build_plan(graph: &NavigationGraph, path: &[usize], seed: u64) -> SpeakerPlan {
    let mut stream: ChaCha8Rng = rng_for(seed, "speaker", 0);
    let vocab = Vocabulary::standard();
    let word = |id: u32| vocab.word(id).to_string();

    let goal = *path.last().expect("non-empty path");
    let goal_vp = graph.viewpoint(goal);
    let goal_object = word(goal_vp.object_labels[0]);
    let goal_room = goal_vp.room_label.map(word).unwrap_or_else(|| "hallway".into());

    let start_heading = episode_heading(seed);
    let mut clauses = Vec::new();
    let mut heading = start_heading;
    for w in path.windows(2) {
        let (u, v) = (w[0], w[1]);
        let bearing = graph.bearing(u, v);
        let rel = bearing - heading;
        heading = bearing;
        let (zu, zv) = (graph.viewpoint(u).position[2], graph.viewpoint(v).position[2]);
        let vp = graph.viewpoint(v);
        let room = vp.room_label.map(&word).unwrap_or_else(|| "hallway".into());
        let object = word(vp.object_labels[stream.gen_range(0..vp.object_labels.len())]);
        let same_room = graph.viewpoint(u).room_label == vp.room_label;
        let text = if zv > zu {
            format!("take the stairs up to the {room} .")
        } else if zv < zu {
            format!("take the stairs down to the {room} .")
        } else {
            let dir = direction_word(rel);
            if same_room {
                let verb = if stream.gen_bool(0.5) { "walk" } else { "go" };
                format!("{verb} {dir} past the {object} .")
            } else {
                let verb = if stream.gen_bool(0.5) { "go" } else { "walk" };
                format!("{verb} {dir} to the {room} .")
            }
        };
        clauses.push(Clause { kind: ClauseKind::Step, text });
    }

    // One redundancy clause, inserted at a seeded position among the steps.
    if !clauses.is_empty() {
        let text = if stream.gen_bool(0.5) {
            "turn around .".to_string()
        } else {
            "turn left , turn right .".to_string()
        };
        let at = stream.gen_range(0..=clauses.len());
        clauses.insert(at, Clause { kind: ClauseKind::Redundancy, text });
    }

    let stop_text = if stream.gen_bool(0.5) {
        format!("stop when you reach the {goal_object} in the {goal_room} .")
    } else {
        format!("wait when you reach the {goal_object} in the {goal_room} .")
    };
    clauses.push(Clause { kind: ClauseKind::Stop, text: stop_text });

    // A landmark disambiguates the goal when another viewpoint shares its
    // room and named object.
    let ambiguous = graph.viewpoints().iter().enumerate().any(|(i, vp)| {
        i != goal
            && vp.room_label == goal_vp.room_label
            && vp.object_labels.contains(&goal_vp.object_labels[0])
    });
    let landmark = if ambiguous && path.len() > 2 {
        let mid = graph.viewpoint(path[path.len() / 2]);
        let pick = mid
            .object_labels
            .iter()
            .map(|&l| word(l))
            .find(|w| *w != goal_object);
        pick
    } else {
        None
    };

    SpeakerPlan { clauses, goal_object, goal_room, landmark, start_heading }
}

fn filter_directions(text: &str, vocab: &Vocabulary) -> String {
    text.split_whitespace()
        .filter(|w| vocab.id(w).map_or(true, |id| !vocab.is_direction(id)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Generate the instruction for one level of the seeded family.
pub fn synth_speaker(
    graph: &NavigationGraph,
    path_ids: &[String],
    level: Level,
    seed: u64,
) -> Result<Instruction> {
    let (instr, _) = synth_speaker_with_plan(graph, path_ids, level, seed)?;
    Ok(instr)
}

pub fn synth_speaker_with_plan(
    graph: &NavigationGraph,
    path_ids: &[String],
    level: Level,
    seed: u64,
) -> Result<(Instruction, SpeakerPlan)> {
    if path_ids.is_empty() {
        return Err(Error::Validation("speaker path is empty".into()));
    }
    let mut path = Vec::with_capacity(path_ids.len());
    for id in path_ids {
        path.push(graph.index_of(id)?);
    }
    for w in path.windows(2) {
        if !graph.neighbors(w[0]).iter().any(|&(v, _)| v == w[1]) {
            return Err(Error::Validation(format!(
                "path is not a walk: `{}` and `{}` are not adjacent",
                graph.viewpoint(w[0]).id,
                graph.viewpoint(w[1]).id
            )));
        }
    }
    let vocab = Vocabulary::standard();
    let plan = build_plan(graph, &path, seed);

    let text = match level {
        Level::L0 => plan
            .clauses
            .iter()
            .map(|c| c.text.clone())
            .collect::<Vec<_>>()
            .join(" "),
        Level::L1 => l1_text(&plan, &vocab),
        Level::L2 => {
            let l1: Vec<String> = l1_clauses(&plan, &vocab);
            let mut keep: Vec<bool> = vec![true; l1.len()];
            if l1.len() > 1 {
                let mut stream = rng_for(seed, "speaker-l2", 0);
                let removable = l1.len() - 1;
                let n_remove = (1 + usize::from(stream.gen_bool(0.5))).min(removable);
                let mut removed = 0;
                while removed < n_remove {
                    let pick = stream.gen_range(0..removable);
                    if keep[pick] {
                        keep[pick] = false;
                        removed += 1;
                    }
                }
            }
            l1.iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(c, _)| c.clone())
                .collect::<Vec<_>>()
                .join(" ")
        }
        Level::L3 => match &plan.landmark {
            Some(landmark) => format!(
                "go to the {} in the {} near the {landmark} .",
                plan.goal_object, plan.goal_room
            ),
            None => format!("go to the {} in the {} .", plan.goal_object, plan.goal_room),
        },
        Level::Unknown => {
            return Err(Error::Validation("speaker cannot generate level UNKNOWN".into()))
        }
    };
    let tokens = tokenize(&text, &vocab)?;
    let path_id = format!("synthetic-{seed}");
    Ok((Instruction { text, tokens, level, path_id }, plan))
}

fn l1_clauses(plan: &SpeakerPlan, vocab: &Vocabulary) -> Vec<String> {
    plan.clauses
        .iter()
        .filter(|c| c.kind != ClauseKind::Redundancy)
        .map(|c| filter_directions(&c.text, vocab))
        .collect()
}

fn l1_text(plan: &SpeakerPlan, vocab: &Vocabulary) -> String {
    l1_clauses(plan, vocab).join(" ")
}
