use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../assets/stopwords_en.txt");
const DEFAULT_MWE: &str = include_str!("../../assets/mwe.txt");
const DEFAULT_SUBSTITUTIONS: &str = include_str!("../../assets/substitutions.txt");

/// Words counted by [`super::stopword_share`] unless the caller supplies others.
pub const DEFAULT_PROBE_WORDS: [&str; 5] = ["and", "be", "of", "the", "to"];

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub stopwords: HashSet<String>,
    /// Multiword expressions as token sequences, longest first.
    pub multiword: Vec<Vec<String>>,
    /// Whole-word OCR corrections, keyed by the wrong spelling.
    pub substitutions: HashMap<String, String>,
    /// Terms seen fewer times than this across the corpus are dropped from the vocabulary.
    pub min_term_count: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: parse_word_list(DEFAULT_STOPWORDS),
            multiword: parse_multiword(DEFAULT_MWE),
            substitutions: parse_substitutions(DEFAULT_SUBSTITUTIONS, "default substitutions")
                .expect("bundled substitutions are valid"),
            min_term_count: 5,
        }
    }
}

impl PreprocessConfig {
    /// Bundled defaults with any of the three lists replaced from files.
    pub fn load(
        stopwords_path: Option<&Path>,
        mwe_path: Option<&Path>,
        substitutions_path: Option<&Path>,
        min_term_count: Option<u64>,
    ) -> Result<Self> {
        let mut cfg = PreprocessConfig::default();
        if let Some(p) = stopwords_path {
            cfg.stopwords = parse_word_list(&read(p)?);
        }
        if let Some(p) = mwe_path {
            cfg.multiword = parse_multiword(&read(p)?);
        }
        if let Some(p) = substitutions_path {
            cfg.substitutions = parse_substitutions(&read(p)?, &p.display().to_string())?;
        }
        if let Some(m) = min_term_count {
            cfg.min_term_count = m;
        }
        Ok(cfg)
    }

    pub fn with_min_term_count(mut self, m: u64) -> Self {
        self.min_term_count = m;
        self
    }
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| Error::io(p, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_word_list(text: &str) -> HashSet<String> {
    content_lines(text).map(|l| l.to_lowercase()).collect()
}

fn parse_multiword(text: &str) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = content_lines(text)
        .map(|l| {
            clean(&l.to_lowercase())
                .split_whitespace()
                .map(String::from)
                .collect::<Vec<_>>()
        })
        .filter(|w: &Vec<String>| w.len() >= 2)
        .collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out.dedup();
    out
}

fn parse_substitutions(text: &str, name: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(from), Some(to), None) => {
                map.insert(from.to_lowercase(), to.to_lowercase());
            }
            _ => {
                return Err(Error::Parse {
                    source_name: name.to_string(),
                    line: i + 1,
                    message: "expected `<wrong> <right>`".into(),
                })
            }
        }
    }
    if let Some(to) = map.values().find(|to| map.contains_key(*to)) {
        return Err(Error::invalid(format!(
            "{name}: `{to}` is both a correction and a word to correct"
        )));
    }
    Ok(map)
}

/// Drops digits and punctuation, keeping letters, underscores and whitespace.
/// Punctuation is deleted rather than replaced, so `attorney-general` becomes
/// `attorneygeneral`.
fn clean(text: &str) -> String {
    text.chars()
        .filter_map(|c| {
            if c.is_alphabetic() || c == '_' {
                Some(c)
            } else if c.is_whitespace() {
                Some(' ')
            } else {
                None
            }
        })
        .collect()
}

/// Lowercased, cleaned and OCR-corrected words, before multiword joining and
/// stopword removal.
pub fn raw_tokens(text: &str, config: &PreprocessConfig) -> Vec<String> {
    clean(&text.to_lowercase())
        .split_whitespace()
        .map(|w| config.substitutions.get(w).cloned().unwrap_or_else(|| w.to_string()))
        .collect()
}

fn join_multiword(words: Vec<String>, multiword: &[Vec<String>]) -> Vec<String> {
    if multiword.is_empty() {
        return words;
    }
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    'outer: while i < words.len() {
        for mwe in multiword {
            let n = mwe.len();
            if i + n <= words.len() && words[i..i + n] == mwe[..] {
                out.push(mwe.join("_"));
                i += n;
                continue 'outer;
            }
        }
        out.push(words[i].clone());
        i += 1;
    }
    out
}

/// Turns free text into analysis tokens: lowercase, no digits or punctuation,
/// multiword expressions joined by underscores, stopwords removed. Words are not stemmed.
///
/// Expressions are joined again after stopword removal, so that feeding the
/// output back in returns it unchanged.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let words = raw_tokens(text, config);
    let kept = join_multiword(words, &config.multiword)
        .into_iter()
        .filter(|w| !config.stopwords.contains(w))
        .collect();
    join_multiword(kept, &config.multiword)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiword_joined() {
        let cfg = PreprocessConfig::default();
        assert_eq!(preprocess("new south wales", &cfg), ["new_south_wales"]);
        assert_eq!(
            preprocess("New South Wales, and Victoria", &cfg),
            ["new_south_wales", "victoria"]
        );
    }

    #[test]
    fn stopwords_case_insensitive() {
        let cfg = PreprocessConfig::default();
        assert!(preprocess("The THE the", &cfg).is_empty());
    }

    #[test]
    fn numbers_and_symbols_removed() {
        let cfg = PreprocessConfig::default();
        assert!(cfg.stopwords.contains("m"));
        assert_eq!(preprocess("Budget 2018: $4.5m!", &cfg), ["budget"]);
    }

    #[test]
    fn hand_tokenised_fixture() {
        // 23 words; expected tokens written out by hand.
        let text = "Mr SPEAKER, the Attorney-General's 1998 report on the High Court was tabled \
                    today; thc Senate will debate it in Western Australia next week.";
        let cfg = PreprocessConfig::default();
        assert_eq!(
            preprocess(text, &cfg),
            [
                "mr",
                "speaker",
                "attorneygenerals",
                "report",
                "high_court",
                "tabled",
                "today",
                "senate",
                "debate",
                "western_australia",
                "next",
                "week"
            ]
        );
    }

    #[test]
    fn ocr_substitution_applies_before_stopwords() {
        let cfg = PreprocessConfig::default();
        assert_eq!(raw_tokens("thc bill", &cfg), ["the", "bill"]);
        assert_eq!(preprocess("thc bill", &cfg), ["bill"]);
    }

    #[test]
    fn no_stemming() {
        let cfg = PreprocessConfig::default();
        assert_eq!(
            preprocess("workers worker working", &cfg),
            ["workers", "worker", "working"]
        );
    }

    #[test]
    fn bad_substitution_line_rejected() {
        assert!(parse_substitutions("thc the extra\n", "x").is_err());
    }

    #[test]
    fn longest_multiword_wins() {
        let cfg = PreprocessConfig::default();
        assert_eq!(preprocess("deputy prime minister", &cfg), ["deputy_prime_minister"]);
    }
}
