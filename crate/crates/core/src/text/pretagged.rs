//! Reader and writer for `pretagged.jsonl`, which bypasses the bundled tagger.
//!
//! One record per line:
//! `{"comment_id": "...", "tokens": [{"text","lemma","pos","ent"}, ...]}`.
//! Sentences are delimited by `.`, `!` and `?` tokens.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EntityKind, Pos, TaggedDocument, TaggedToken};
use crate::error::Result;

#[derive(Debug, Serialize, Deserialize)]
struct RawToken {
    text: String,
    #[serde(default)]
    lemma: Option<String>,
    pos: String,
    #[serde(default)]
    ent: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    comment_id: String,
    tokens: Vec<RawToken>,
}

/// Parsed pre-tagged documents keyed by document id, plus the number of
/// malformed lines that were skipped.
#[derive(Debug, Default)]
pub struct Pretagged {
    pub docs: BTreeMap<String, TaggedDocument>,
    pub skipped: usize,
}

pub fn read_pretagged<R: BufRead>(reader: R) -> Result<Pretagged> {
    let mut out = Pretagged::default();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping malformed pretagged line: {e}");
                out.skipped += 1;
                continue;
            }
        };
        let mut sentences = Vec::new();
        let mut current = Vec::new();
        for raw in rec.tokens {
            let pos = Pos::from_ud(&raw.pos);
            let ent = raw.ent.as_deref().and_then(EntityKind::from_label);
            let lemma = raw
                .lemma
                .filter(|l| !l.is_empty())
                .unwrap_or_else(|| raw.text.clone())
                .to_lowercase();
            let terminal = pos == Pos::Punct && matches!(raw.text.as_str(), "." | "!" | "?");
            current.push(TaggedToken {
                text: raw.text,
                lemma,
                pos,
                ent,
            });
            if terminal {
                sentences.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            sentences.push(current);
        }
        out.docs
            .entry(rec.comment_id.clone())
            .or_insert(TaggedDocument {
                id: rec.comment_id,
                sentences,
            });
    }
    Ok(out)
}

pub fn write_pretagged<'a, W: Write>(
    mut writer: W,
    docs: impl IntoIterator<Item = &'a TaggedDocument>,
) -> Result<()> {
    for doc in docs {
        let rec = RawRecord {
            comment_id: doc.id.clone(),
            tokens: doc
                .sentences
                .iter()
                .flatten()
                .map(|t| RawToken {
                    text: t.text.clone(),
                    lemma: Some(t.lemma.clone()),
                    pos: t.pos.as_ud().to_string(),
                    ent: t.ent.map(|e| e.label().to_string()),
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &rec)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::RuleTagger;

    #[test]
    fn round_trip_through_jsonl() {
        let tagger = RuleTagger::new();
        let doc = TaggedDocument::from_text("c1", "John arrived. He spoke!", &tagger);
        let mut buf = Vec::new();
        write_pretagged(&mut buf, [&doc]).unwrap();
        let back = read_pretagged(buf.as_slice()).unwrap();
        assert_eq!(back.docs["c1"], doc);
    }

    #[test]
    fn malformed_lines_are_counted() {
        let input = "{\"comment_id\":\"a\",\"tokens\":[]}\nnot json\n";
        let p = read_pretagged(input.as_bytes()).unwrap();
        assert_eq!(p.docs.len(), 1);
        assert_eq!(p.skipped, 1);
    }

    #[test]
    fn spacy_labels_are_mapped() {
        let input = r#"{"comment_id":"x","tokens":[{"text":"Obama","lemma":"Obama","pos":"PROPN","ent":"PERSON"},{"text":"talks","lemma":"talk","pos":"VERB","ent":""}]}"#;
        let p = read_pretagged(input.as_bytes()).unwrap();
        let toks = &p.docs["x"].sentences[0];
        assert_eq!(toks[0].ent, Some(EntityKind::Person));
        assert_eq!(toks[0].lemma, "obama");
        assert_eq!(toks[1].ent, None);
    }
}
