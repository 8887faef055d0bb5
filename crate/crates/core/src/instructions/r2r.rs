//! Loader for R2R-format instruction datasets: a JSON array of records with
//! `path_id`, `scan`, `heading`, `path`, and `instructions`. Files written
//! by this artifact add `levels` and `version` fields, which the loader
//! accepts and plain R2R files simply omit.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

use super::{tokenize, Instruction, Level, Vocabulary};

/// One (path × instruction) pairing.
#[derive(Debug, Clone)]
pub struct R2rRecord {
    pub instruction: Instruction,
    pub path: Vec<String>,
    pub scan: String,
    pub heading: f64,
}

fn field<'a>(record: &'a Value, name: &str, index: usize) -> Result<&'a Value> {
    record.get(name).ok_or_else(|| Error::Parse {
        context: format!("record {index}"),
        message: format!("missing field `{name}`"),
    })
}

/// Load and fan out: one output record per (path × instruction string).
/// Levels come from a `levels` array when present, else UNKNOWN.
pub fn load_r2r(path: &Path, vocab: &Vocabulary) -> Result<Vec<R2rRecord>> {
    let text = std::fs::read_to_string(path)?;
    let raw: Vec<Value> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: format!("{} line {}", path.display(), e.line()),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (index, record) in raw.iter().enumerate() {
        let path_id = match field(record, "path_id", index)? {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => {
                return Err(Error::Parse {
                    context: format!("record {index}"),
                    message: format!("path_id must be a string or number, got {other}"),
                })
            }
        };
        let scan = field(record, "scan", index)?
            .as_str()
            .ok_or_else(|| Error::Parse {
                context: format!("record {index}"),
                message: "scan must be a string".into(),
            })?
            .to_string();
        let heading = field(record, "heading", index)?.as_f64().ok_or_else(|| Error::Parse {
            context: format!("record {index}"),
            message: "heading must be a number".into(),
        })?;
        let path_ids: Vec<String> = field(record, "path", index)?
            .as_array()
            .ok_or_else(|| Error::Parse {
                context: format!("record {index}"),
                message: "path must be an array".into(),
            })?
            .iter()
            .map(|v| {
                v.as_str().map(str::to_string).ok_or_else(|| Error::Parse {
                    context: format!("record {index}"),
                    message: "path entries must be strings".into(),
                })
            })
            .collect::<Result<_>>()?;
        let instructions = field(record, "instructions", index)?
            .as_array()
            .ok_or_else(|| Error::Parse {
                context: format!("record {index}"),
                message: "instructions must be an array".into(),
            })?;
        let levels: Option<Vec<Level>> = match record.get("levels") {
            Some(Value::Array(arr)) => Some(
                arr.iter()
                    .map(|v| {
                        v.as_str()
                            .ok_or_else(|| Error::Parse {
                                context: format!("record {index}"),
                                message: "levels entries must be strings".into(),
                            })
                            .and_then(Level::parse)
                    })
                    .collect::<Result<_>>()?,
            ),
            _ => None,
        };
        for (k, instr_text) in instructions.iter().enumerate() {
            let text = instr_text.as_str().ok_or_else(|| Error::Parse {
                context: format!("record {index}"),
                message: "instructions entries must be strings".into(),
            })?;
            let tokens = tokenize(text, vocab)?;
            let level = levels
                .as_ref()
                .and_then(|l| l.get(k).copied())
                .unwrap_or(Level::Unknown);
            out.push(R2rRecord {
                instruction: Instruction {
                    text: text.to_string(),
                    tokens,
                    level,
                    path_id: path_id.clone(),
                },
                path: path_ids.clone(),
                scan: scan.clone(),
                heading,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_array_loads_empty() {
        let v = Vocabulary::standard();
        let records = load_r2r(write_file("[]").path(), &v).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn three_instructions_fan_out_sharing_path_id() {
        let v = Vocabulary::standard();
        let content = serde_json::json!([{
            "path_id": 4242,
            "scan": "scan0",
            "heading": 1.5,
            "path": ["a", "b"],
            "instructions": ["go left .", "walk straight .", "stop ."],
        }])
        .to_string();
        let records = load_r2r(write_file(&content).path(), &v).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert_eq!(r.instruction.path_id, "4242");
            assert_eq!(r.instruction.level, Level::Unknown);
            assert_eq!(r.path, vec!["a", "b"]);
        }
    }

    #[test]
    fn missing_field_names_field_and_record() {
        let v = Vocabulary::standard();
        let content = serde_json::json!([
            {"path_id": 1, "scan": "s", "heading": 0.0, "path": ["a"], "instructions": ["go ."]},
            {"path_id": 2, "scan": "s", "heading": 0.0, "instructions": ["go ."]},
        ])
        .to_string();
        let err = load_r2r(write_file(&content).path(), &v).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("record 1") && msg.contains("`path`"), "{msg}");
    }

    #[test]
    fn record_count_matches_independent_walk() {
        let v = Vocabulary::standard();
        let mut records = Vec::new();
        for i in 0..7 {
            let n_instr = 1 + (i % 3);
            let instrs: Vec<String> = (0..n_instr).map(|_| "go to the kitchen .".into()).collect();
            records.push(serde_json::json!({
                "path_id": i,
                "scan": "s",
                "heading": 0.0,
                "path": ["a", "b"],
                "instructions": instrs,
            }));
        }
        let content = serde_json::to_string(&records).unwrap();
        let file = write_file(&content);
        let loaded = load_r2r(file.path(), &v).unwrap();

        // Independent count over the raw JSON.
        let raw: Vec<Value> =
            serde_json::from_str(&std::fs::read_to_string(file.path()).unwrap()).unwrap();
        let expected: usize =
            raw.iter().map(|r| r["instructions"].as_array().unwrap().len()).sum();
        assert_eq!(loaded.len(), expected);
    }
}
