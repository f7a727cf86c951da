use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use crate::error::{Error, Result};

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(n, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((n + 1, t.to_string())))
        }
    })
}

/// Lowercased word list, one token per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordList(HashSet<String>);

impl WordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        WordList(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut words = HashSet::new();
        for line in content_lines(reader) {
            words.insert(line?.1.to_lowercase());
        }
        Ok(WordList(words))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `token<TAB>weight` with weights in `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubjectivityLexicon(HashMap<String, f64>);

impl SubjectivityLexicon {
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut map = HashMap::new();
        for line in content_lines(reader) {
            let (n, line) = line?;
            let malformed = |detail: String| Error::Malformed {
                what: "subjectivity lexicon",
                detail: format!("line {n}: {detail}"),
            };
            let (tok, w) = line
                .split_once('\t')
                .ok_or_else(|| malformed("missing tab".into()))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| malformed(format!("bad weight `{}`", w.trim())))?;
            if !(0.0..=1.0).contains(&w) {
                return Err(malformed(format!("weight {w} outside [0, 1]")));
            }
            map.insert(tok.trim().to_lowercase(), w);
        }
        Ok(SubjectivityLexicon(map))
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.0.get(token).copied()
    }
}

/// Word vectors in the text format `word v1 ... vd`, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl Embeddings {
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for line in content_lines(reader) {
            let (n, line) = line?;
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap_or_default().to_lowercase();
            let values: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Malformed {
                    what: "embeddings",
                    detail: format!("line {n}: {e}"),
                })?;
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected || expected == 0 {
                return Err(Error::DimensionMismatch {
                    context: "embeddings",
                    detail: format!("line {n} has {} values, expected {expected}", values.len()),
                });
            }
            vectors.insert(word, values);
        }
        let dim = dim.ok_or(Error::EmptyInput("embeddings"))?;
        Ok(Embeddings { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_dimension_mismatch_is_fatal() {
        let err = Embeddings::read("a 1 2\nb 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        assert!(Embeddings::read("".as_bytes()).is_err());
        assert!(Embeddings::read("a x y\n".as_bytes()).is_err());
    }

    #[test]
    fn word_list_ignores_comments_and_case() {
        let w = WordList::read("# header\nRiot\n\nwar\n".as_bytes()).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.contains("riot"));
    }

    #[test]
    fn subjectivity_weights_are_bounded() {
        assert!(SubjectivityLexicon::read("x\t1.5\n".as_bytes()).is_err());
        assert!(SubjectivityLexicon::read("x 0.5\n".as_bytes()).is_err());
    }
}
