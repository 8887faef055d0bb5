//! Fixed vocabulary: reserved tokens, direction words, template words, and
//! the room/object label words worlds draw on.

use std::collections::HashMap;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
/// Sentinel prepended by the text encoder.
pub const SENT: u32 = 2;

/// Direction words form a closed class so redundancy removal is a pure
/// token filter.
pub const DIRECTION_WORDS: [&str; 7] =
    ["left", "right", "straight", "around", "up", "down", "degrees"];

const FUNCTION_WORDS: [&str; 24] = [
    "go", "walk", "turn", "take", "stop", "wait", "head", "enter", "exit", "climb", "continue",
    "at", "to", "the", "in", "near", "past", "and", "then", "when", "you", "reach", "stairs",
    "again",
];

const PUNCT: [&str; 5] = [".", ",", "!", ";", "?"];

pub const ROOM_WORDS: [&str; 20] = [
    "kitchen", "hallway", "bathroom", "bedroom", "office", "lounge", "library", "pantry",
    "garage", "studio", "closet", "foyer", "balcony", "attic", "basement", "nursery", "gym",
    "den", "laundry", "sunroom",
];

pub const OBJECT_WORDS: [&str; 40] = [
    "sofa", "table", "lamp", "mirror", "painting", "plant", "shelf", "rug", "chair", "desk",
    "piano", "vase", "clock", "cabinet", "stool", "bench", "curtain", "fireplace", "bookcase",
    "dresser", "wardrobe", "fridge", "oven", "sink", "bathtub", "toilet", "towel", "ladder",
    "doorway", "window", "couch", "ottoman", "radiator", "statue", "aquarium", "easel",
    "treadmill", "locker", "crate", "banner",
];

/// Words a clause may split on when both sides contain a motion verb.
pub const CONJUNCTIONS: [&str; 2] = ["and", "then"];

pub const MOTION_VERBS: [&str; 11] =
    ["go", "walk", "turn", "take", "stop", "wait", "head", "enter", "exit", "climb", "continue"];

pub const SENTENCE_PUNCT: [&str; 3] = [".", "!", ";"];

#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
    direction_ids: Vec<u32>,
    room_start: u32,
    object_start: u32,
}

impl Vocabulary {
    /// The fixed vocabulary used everywhere; reserved indices are stable.
    pub fn standard() -> Self {
        let mut words: Vec<String> = vec!["<pad>".into(), "<unk>".into(), "<s>".into()];
        words.extend(DIRECTION_WORDS.iter().map(|s| s.to_string()));
        words.extend(FUNCTION_WORDS.iter().map(|s| s.to_string()));
        words.extend(PUNCT.iter().map(|s| s.to_string()));
        let room_start = words.len() as u32;
        words.extend(ROOM_WORDS.iter().map(|s| s.to_string()));
        let object_start = words.len() as u32;
        words.extend(OBJECT_WORDS.iter().map(|s| s.to_string()));
        let index: HashMap<String, u32> =
            words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let direction_ids = DIRECTION_WORDS.iter().map(|w| index[*w]).collect();
        Vocabulary { words, index, direction_ids, room_start, object_start }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn is_direction(&self, id: u32) -> bool {
        self.direction_ids.contains(&id)
    }

    pub fn direction_ids(&self) -> &[u32] {
        &self.direction_ids
    }

    pub fn is_sentence_punct(&self, id: u32) -> bool {
        SENTENCE_PUNCT.iter().any(|p| self.index[*p] == id)
    }

    pub fn is_conjunction(&self, id: u32) -> bool {
        CONJUNCTIONS.iter().any(|c| self.index[*c] == id)
    }

    pub fn is_motion_verb(&self, id: u32) -> bool {
        MOTION_VERBS.iter().any(|v| self.index[*v] == id)
    }

    pub fn is_object_label(&self, id: u32) -> bool {
        id >= self.object_start && (id as usize) < self.words.len()
    }

    pub fn is_room_label(&self, id: u32) -> bool {
        id >= self.room_start && id < self.object_start
    }

    /// Room and object label ids available to a world with `vocab_size`
    /// label words: a quarter rooms (at least two), the rest objects.
    pub fn label_partition(&self, vocab_size: usize) -> (Vec<u32>, Vec<u32>) {
        let n_rooms = (vocab_size / 4).clamp(2, ROOM_WORDS.len());
        let n_objects = (vocab_size - n_rooms).min(OBJECT_WORDS.len());
        let rooms = (0..n_rooms as u32).map(|i| self.room_start + i).collect();
        let objects = (0..n_objects as u32).map(|i| self.object_start + i).collect();
        (rooms, objects)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_indices_are_stable() {
        let v = Vocabulary::standard();
        assert_eq!(v.word(PAD), "<pad>");
        assert_eq!(v.word(UNK), "<unk>");
        assert_eq!(v.word(SENT), "<s>");
        assert_eq!(v.id("left"), Some(3));
        let again = Vocabulary::standard();
        assert_eq!(v.len(), again.len());
        for i in 0..v.len() as u32 {
            assert_eq!(v.word(i), again.word(i));
        }
    }

    #[test]
    fn mapping_is_bijective() {
        let v = Vocabulary::standard();
        for i in 0..v.len() as u32 {
            assert_eq!(v.id(v.word(i)), Some(i));
        }
    }

    #[test]
    fn label_partition_respects_vocab_size() {
        let v = Vocabulary::standard();
        let (rooms, objects) = v.label_partition(48);
        assert_eq!(rooms.len(), 12);
        assert_eq!(objects.len(), 36);
        for r in &rooms {
            assert!(v.is_room_label(*r));
        }
        for o in &objects {
            assert!(v.is_object_label(*o));
        }
    }
}
