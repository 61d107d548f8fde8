use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ScoringError;
use crate::metrics::collision_rate;
use crate::program::BlockProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticSource {
    Stub,
    External,
}

/// The two judged scores, keyed as the judge returns them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticScores {
    pub semantic_alignment: f64,
    pub global_plausibility: f64,
}

impl SemanticScores {
    pub(crate) fn checked(self) -> Result<Self, ScoringError> {
        let ok = |v: f64| v.is_finite() && (0.0..=10.0).contains(&v);
        if ok(self.semantic_alignment) && ok(self.global_plausibility) {
            Ok(self)
        } else {
            Err(ScoringError::InvalidScore(format!(
                "semantic_alignment={}, global_plausibility={}",
                self.semantic_alignment, self.global_plausibility
            )))
        }
    }
}

/// Everything a semantic judge may look at. `raster_png` is the output of
/// [`super::render_topdown`] for `program`.
#[derive(Debug, Clone, Copy)]
pub struct SemanticRequest<'a> {
    pub prompt: &'a str,
    pub program: &'a BlockProgram,
    pub raster_png: &'a [u8],
}

pub trait SemanticScorer: Send + Sync {
    fn score(&self, request: &SemanticRequest<'_>) -> Result<SemanticScores, ScoringError>;
    fn source(&self) -> SemanticSource;
}

/// Deterministic stand-in for a vision-language judge.
///
/// Alignment compares the element types named in the prompt with the types in
/// the program; plausibility penalizes true footprint overlap.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubScorer;

impl SemanticScorer for StubScorer {
    fn score(&self, request: &SemanticRequest<'_>) -> Result<SemanticScores, ScoringError> {
        let declared = declared_types(request.prompt);
        let actual = program_types(request.program);
        let semantic_alignment = 10.0 * (1.0 - normalized_multiset_distance(&declared, &actual));
        let collision = collision_rate(request.program).map_err(|_| ScoringError::EmptyRegion)?;
        let global_plausibility = (10.0 * (1.0 - collision)).clamp(0.0, 10.0);
        SemanticScores { semantic_alignment, global_plausibility }.checked()
    }

    fn source(&self) -> SemanticSource {
        SemanticSource::Stub
    }
}

pub type TypeMultiset = BTreeMap<String, usize>;

const SYNONYMS: &[(&str, &str)] = &[
    ("residential", "residential"),
    ("residence", "residential"),
    ("residences", "residential"),
    ("housing", "residential"),
    ("house", "residential"),
    ("houses", "residential"),
    ("home", "residential"),
    ("homes", "residential"),
    ("apartment", "residential"),
    ("apartments", "residential"),
    ("commercial", "commercial"),
    ("shop", "commercial"),
    ("shops", "commercial"),
    ("store", "commercial"),
    ("stores", "commercial"),
    ("retail", "commercial"),
    ("mall", "commercial"),
    ("office", "office"),
    ("offices", "office"),
    ("school", "school"),
    ("schools", "school"),
    ("library", "library"),
    ("libraries", "library"),
    ("mixed-use", "mixed-use building"),
    ("greenspace", "greenspace"),
    ("greenspaces", "greenspace"),
    ("park", "greenspace"),
    ("parks", "greenspace"),
    ("garden", "greenspace"),
    ("gardens", "greenspace"),
];

const COUNTS: &[(&str, usize)] = &[
    ("a", 1),
    ("an", 1),
    ("one", 1),
    ("single", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
];

fn words(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let raw: Vec<&str> = lower
        .split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .map(|w| w.trim_matches('-'))
        .filter(|w| !w.is_empty())
        .collect();
    // Join the two-word spellings so they look up like their hyphenated forms.
    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let pair = raw.get(i + 1).map(|next| (raw[i], *next));
        match pair {
            Some(("mixed", "use")) => {
                out.push("mixed-use".to_string());
                i += 2;
            }
            Some(("green", "space" | "spaces")) => {
                out.push("greenspace".to_string());
                i += 2;
            }
            _ => {
                out.push(raw[i].to_string());
                i += 1;
            }
        }
    }
    out
}

fn canonical_type(word: &str) -> Option<&'static str> {
    SYNONYMS.iter().find(|(w, _)| *w == word).map(|(_, t)| *t)
}

fn count_word(word: &str) -> Option<usize> {
    COUNTS
        .iter()
        .find(|(w, _)| *w == word)
        .map(|(_, n)| *n)
        .or_else(|| word.parse().ok().filter(|n| (1..=1000).contains(n)))
}

/// Element types the prompt asks for, with counts taken from a number word
/// or numeral directly before the type word (one otherwise).
pub fn declared_types(prompt: &str) -> TypeMultiset {
    let words = words(prompt);
    let mut out = TypeMultiset::new();
    for (i, w) in words.iter().enumerate() {
        let Some(ty) = canonical_type(w) else { continue };
        // "mixed-use building": the trailing noun is part of the type.
        let mut n = 1;
        for back in 1..=2 {
            let Some(prev) = i.checked_sub(back).map(|j| words[j].as_str()) else { break };
            if let Some(c) = count_word(prev) {
                n = c;
                break;
            }
            // Allow one adjective between the count and the type ("two small parks").
            if canonical_type(prev).is_some() {
                break;
            }
        }
        *out.entry(ty.to_string()).or_default() += n;
    }
    out
}

/// The program's element types, mapped onto the same vocabulary.
pub fn program_types(program: &BlockProgram) -> TypeMultiset {
    let mut out = TypeMultiset::new();
    for e in &program.elements {
        let lower = e.element_type.trim().to_lowercase();
        let ty = words(&lower)
            .first()
            .and_then(|w| canonical_type(w))
            .map(str::to_string)
            .unwrap_or(lower);
        *out.entry(ty).or_default() += 1;
    }
    out
}

fn size(m: &TypeMultiset) -> usize {
    m.values().sum()
}

/// `(max(|A|, |B|) - |A ∩ B|) / max(|A|, |B|)`; zero when the prompt names no
/// types, since there is then nothing to disagree with.
pub fn normalized_multiset_distance(declared: &TypeMultiset, actual: &TypeMultiset) -> f64 {
    if declared.is_empty() {
        return 0.0;
    }
    let common: usize = declared.iter().map(|(t, n)| (*n).min(actual.get(t).copied().unwrap_or(0))).sum();
    let longest = size(declared).max(size(actual));
    (longest - common) as f64 / longest as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(items: &[(&str, usize)]) -> TypeMultiset {
        items.iter().map(|(t, n)| (t.to_string(), *n)).collect()
    }

    #[test]
    fn prompt_types() {
        assert_eq!(
            declared_types("A block with two offices, a school and 3 parks."),
            ms(&[("greenspace", 3), ("office", 2), ("school", 1)])
        );
        assert_eq!(declared_types("two mixed use buildings"), ms(&[("mixed-use building", 2)]));
        assert_eq!(declared_types("two small green spaces"), ms(&[("greenspace", 2)]));
        assert!(declared_types("a quiet block").is_empty());
    }

    #[test]
    fn distance() {
        let a = ms(&[("office", 2), ("school", 1)]);
        assert_eq!(normalized_multiset_distance(&a, &a), 0.0);
        assert_eq!(normalized_multiset_distance(&a, &ms(&[("office", 1)])), 2.0 / 3.0);
        assert_eq!(normalized_multiset_distance(&a, &ms(&[])), 1.0);
        assert_eq!(normalized_multiset_distance(&ms(&[]), &a), 0.0);
        assert_eq!(normalized_multiset_distance(&ms(&[("office", 1)]), &a), 2.0 / 3.0);
    }
}
