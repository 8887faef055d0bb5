//! Instructions: tokenization, sub-instruction chunking, underspecification
//! transforms, the synthetic multi-level speaker, and R2R-format loading.

mod r2r;
mod speaker;
pub mod vocab;

pub use r2r::{load_r2r, R2rRecord};
pub use speaker::{synth_speaker, SpeakerPlan};
pub use vocab::Vocabulary;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng;

/// Underspecification level: L0 full route description through L3 goal-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    L0,
    L1,
    L2,
    L3,
    Unknown,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::L0 => "L0",
            Level::L1 => "L1",
            Level::L2 => "L2",
            Level::L3 => "L3",
            Level::Unknown => "UNKNOWN",
        }
    }

    pub fn parse(s: &str) -> Result<Level> {
        match s {
            "L0" => Ok(Level::L0),
            "L1" => Ok(Level::L1),
            "L2" => Ok(Level::L2),
            "L3" => Ok(Level::L3),
            "UNKNOWN" => Ok(Level::Unknown),
            other => Err(Error::Validation(format!("unknown level `{other}`"))),
        }
    }

    pub fn all_concrete() -> [Level; 4] {
        [Level::L0, Level::L1, Level::L2, Level::L3]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    pub tokens: Vec<u32>,
    pub level: Level,
    pub path_id: String,
}

impl Instruction {
    pub fn from_tokens(tokens: Vec<u32>, level: Level, path_id: &str, vocab: &Vocabulary) -> Self {
        let text = detokenize(&tokens, vocab);
        Instruction { text, tokens, level, path_id: path_id.to_string() }
    }
}

/// Half-open token range of one sub-instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubInstructionSpan {
    pub start: usize,
    pub end: usize,
}

/// Lowercase, split punctuation into separate tokens, map out-of-vocabulary
/// words to UNK.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Result<Vec<u32>> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<u32>| {
        if !word.is_empty() {
            tokens.push(vocab.id(word).unwrap_or(vocab::UNK));
            word.clear();
        }
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' {
            word.extend(ch.to_lowercase());
        } else if ch.is_whitespace() {
            flush(&mut word, &mut tokens);
        } else {
            flush(&mut word, &mut tokens);
            let p = ch.to_string();
            tokens.push(vocab.id(&p).unwrap_or(vocab::UNK));
        }
    }
    flush(&mut word, &mut tokens);
    if tokens.is_empty() {
        return Err(Error::Validation("empty instruction text".into()));
    }
    Ok(tokens)
}

pub fn detokenize(tokens: &[u32], vocab: &Vocabulary) -> String {
    tokens.iter().map(|&t| vocab.word(t)).collect::<Vec<_>>().join(" ")
}

/// Split into sub-instructions at sentence punctuation and at coordinating
/// tokens flanked by motion verbs. Spans partition the token sequence; a
/// clause with no boundary falls back to a single span.
pub fn chunk(instr: &Instruction, vocab: &Vocabulary) -> Vec<SubInstructionSpan> {
    let tokens = &instr.tokens;
    let mut spans = Vec::new();
    let mut sentence_start = 0;
    let mut i = 0;
    while i < tokens.len() {
        if vocab.is_sentence_punct(tokens[i]) || i == tokens.len() - 1 {
            let sentence_end = i + 1;
            // Conjunction splits within the sentence.
            let mut cut = sentence_start;
            for p in sentence_start..sentence_end {
                if !vocab.is_conjunction(tokens[p]) {
                    continue;
                }
                let left_has = tokens[cut..p].iter().any(|&t| vocab.is_motion_verb(t));
                let right_has =
                    tokens[p + 1..sentence_end].iter().any(|&t| vocab.is_motion_verb(t));
                if left_has && right_has {
                    spans.push(SubInstructionSpan { start: cut, end: p });
                    cut = p;
                }
            }
            spans.push(SubInstructionSpan { start: cut, end: sentence_end });
            sentence_start = sentence_end;
        }
        i += 1;
    }
    if spans.is_empty() {
        spans.push(SubInstructionSpan { start: 0, end: tokens.len() });
    }
    spans
}

/// Drop each non-final sub-instruction independently with probability
/// `drop_rate`; the final (goal) span always survives. Deterministic per
/// seed; the result carries level UNKNOWN.
pub fn drop_subinstructions(
    instr: &Instruction,
    drop_rate: f64,
    seed: u64,
    vocab: &Vocabulary,
) -> Result<Instruction> {
    if !(0.0..1.0).contains(&drop_rate) {
        return Err(Error::Validation(format!("drop_rate {drop_rate} outside [0, 1)")));
    }
    let spans = chunk(instr, vocab);
    let mut stream = rng(seed);
    let mut tokens = Vec::new();
    for (i, span) in spans.iter().enumerate() {
        let is_final = i + 1 == spans.len();
        let dropped = !is_final && stream.gen_bool(drop_rate);
        if !dropped {
            tokens.extend_from_slice(&instr.tokens[span.start..span.end]);
        }
    }
    Ok(Instruction::from_tokens(tokens, Level::Unknown, &instr.path_id, vocab))
}

/// Final sentence-punctuation-delimited segment; labelled L3 because it
/// serves as the high-level training sample.
pub fn last_sentence(instr: &Instruction, vocab: &Vocabulary) -> Instruction {
    let tokens = &instr.tokens;
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for (i, &t) in tokens.iter().enumerate() {
        if vocab.is_sentence_punct(t) {
            segments.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < tokens.len() {
        segments.push((start, tokens.len()));
    }
    let (s, e) = segments.last().copied().unwrap_or((0, tokens.len()));
    Instruction::from_tokens(tokens[s..e].to_vec(), Level::L3, &instr.path_id, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v() -> Vocabulary {
        Vocabulary::standard()
    }

    fn instr(text: &str) -> Instruction {
        let vocab = v();
        let tokens = tokenize(text, &vocab).unwrap();
        Instruction::from_tokens(tokens, Level::Unknown, "p0", &vocab)
    }

    #[test]
    fn tokenize_minimal_sentence() {
        let vocab = v();
        let tokens = tokenize("Stop.", &vocab).unwrap();
        assert_eq!(tokens, vec![vocab.id("stop").unwrap(), vocab.id(".").unwrap()]);
    }

    #[test]
    fn tokenize_maps_oov_to_unk() {
        let vocab = v();
        let tokens = tokenize("Go to the TV.", &vocab).unwrap();
        assert_eq!(tokens[3], vocab::UNK);
        assert_eq!(tokens.len(), 5);
    }

    #[test]
    fn tokenize_rejects_empty() {
        assert!(matches!(tokenize("   ", &v()), Err(Error::Validation(_))));
    }

    #[test]
    fn detokenize_round_trips_in_vocab_sentences() {
        let vocab = v();
        let mut stream = crate::rng::rng(5);
        // Random in-vocabulary word soup; round trip must preserve tokens.
        let ids: Vec<u32> = (3..vocab.len() as u32).collect();
        for _ in 0..100 {
            let n = stream.gen_range(1..12);
            let tokens: Vec<u32> =
                (0..n).map(|_| ids[stream.gen_range(0..ids.len())]).collect();
            let text = detokenize(&tokens, &vocab);
            assert_eq!(tokenize(&text, &vocab).unwrap(), tokens);
        }
    }

    #[test]
    fn chunk_splits_sentences() {
        let i = instr("Exit the room. Wait near the lockers.");
        let spans = chunk(&i, &v());
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0], SubInstructionSpan { start: 0, end: 4 });
        assert_eq!(spans[1].end, i.tokens.len());
    }

    #[test]
    fn chunk_single_clause_falls_back_to_one_span() {
        let i = instr("go up");
        let spans = chunk(&i, &v());
        assert_eq!(spans, vec![SubInstructionSpan { start: 0, end: 2 }]);
    }

    #[test]
    fn chunk_splits_verb_flanked_conjunctions_only() {
        let vocab = v();
        let split = instr("turn left and walk to the kitchen .");
        assert_eq!(chunk(&split, &vocab).len(), 2);
        // "the kitchen and the lounge" has no verb on the right side.
        let keep = instr("walk to the kitchen and the lounge .");
        assert_eq!(chunk(&keep, &vocab).len(), 1);
    }

    #[test]
    fn chunk_spans_partition_tokens() {
        let vocab = v();
        for text in [
            "go left . turn around and walk . stop at the sofa .",
            "walk",
            "go to the kitchen then take the stairs up . wait .",
        ] {
            let i = instr(text);
            let spans = chunk(&i, &vocab);
            let mut expected = 0;
            for s in &spans {
                assert_eq!(s.start, expected);
                assert!(s.end > s.start);
                expected = s.end;
            }
            assert_eq!(expected, i.tokens.len());
        }
    }

    #[test]
    fn drop_zero_rate_is_identity() {
        let i = instr("go left . walk past the sofa . stop at the lamp .");
        let out = drop_subinstructions(&i, 0.0, 7, &v()).unwrap();
        assert_eq!(out.tokens, i.tokens);
        assert_eq!(out.level, Level::Unknown);
    }

    #[test]
    fn drop_never_removes_final_span() {
        let i = instr("go left . walk past the sofa . stop at the lamp .");
        let vocab = v();
        let spans = chunk(&i, &vocab);
        let final_tokens = &i.tokens[spans.last().unwrap().start..];
        // At a drop rate near 1 every non-final span goes.
        for seed in 0..20 {
            let out = drop_subinstructions(&i, 0.999, seed, &vocab).unwrap();
            assert_eq!(out.tokens, final_tokens);
        }
    }

    #[test]
    fn drop_frequency_matches_rate() {
        let i = instr(
            "go left . walk past the sofa . take the stairs up . turn around . stop at the lamp .",
        );
        let vocab = v();
        let spans = chunk(&i, &vocab);
        assert_eq!(spans.len(), 5);
        let mut dropped = vec![0usize; spans.len() - 1];
        let trials = 1000;
        for seed in 0..trials {
            let out = drop_subinstructions(&i, 0.5, seed, &vocab).unwrap();
            for (k, span) in spans[..spans.len() - 1].iter().enumerate() {
                let clause = &i.tokens[span.start..span.end];
                let present = out
                    .tokens
                    .windows(clause.len())
                    .any(|w| w == clause);
                if !present {
                    dropped[k] += 1;
                }
            }
        }
        for d in dropped {
            let freq = d as f64 / trials as f64;
            assert!((freq - 0.5).abs() < 0.05, "drop frequency {freq}");
        }
    }

    #[test]
    fn last_sentence_takes_final_segment() {
        let vocab = v();
        let i = instr("go left . walk past the sofa . stop at the lamp .");
        let out = last_sentence(&i, &vocab);
        assert_eq!(out.text, "stop at the lamp .");
        assert_eq!(out.level, Level::L3);
        let single = instr("stop at the lamp .");
        assert_eq!(last_sentence(&single, &vocab).tokens, single.tokens);
    }
}
