//! Article ingestion, phrase canonicalization and topic prevalence.
//!
//! Text is normalized into *terms*. Tokenization yields one term per word;
//! canonicalization then merges every recognized variant (and every canonical
//! phrase) into a single term, so `"somatosensory cortex"` can become one unit
//! that a bare `"cortex"` topic no longer matches.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::{MonthRange, YearMonth};
use crate::par;

/// Lowercases, splits on whitespace and strips leading/trailing punctuation.
/// Internal punctuation such as hyphens is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| {
            raw.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

fn normalize_phrase(phrase: &str) -> String {
    tokenize(phrase).join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleRecord {
    pub id: String,
    pub date: YearMonth,
    pub abstract_terms: Vec<String>,
    /// Each keyword phrase as its own term sequence.
    pub keywords: Vec<Vec<String>>,
}

impl ArticleRecord {
    /// Builds a record from raw text, applying the standard tokenization.
    pub fn from_text(
        id: impl Into<String>,
        date: YearMonth,
        abstract_text: &str,
        keywords: &[impl AsRef<str>],
    ) -> Self {
        Self {
            id: id.into(),
            date,
            abstract_terms: tokenize(abstract_text),
            keywords: keywords
                .iter()
                .map(|k| tokenize(k.as_ref()))
                .filter(|k| !k.is_empty())
                .collect(),
        }
    }

    pub fn abstract_text(&self) -> String {
        self.abstract_terms.join(" ")
    }

    pub fn keyword_phrases(&self) -> impl Iterator<Item = String> + '_ {
        self.keywords.iter().map(|k| k.join(" "))
    }

    fn term_sequences(&self) -> impl Iterator<Item = &[String]> {
        std::iter::once(self.abstract_terms.as_slice()).chain(self.keywords.iter().map(Vec::as_slice))
    }
}

/// On-disk shape of one corpus line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub date: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub range: MonthRange,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: Vec<ArticleRecord>,
    pub rejected_out_of_range: usize,
    pub rejected_empty_abstract: usize,
}

impl IngestReport {
    pub fn rejected(&self) -> usize {
        self.rejected_out_of_range + self.rejected_empty_abstract
    }
}

/// Reads one JSON record per line. Blank lines are skipped; a malformed line
/// aborts with its 1-based line number.
pub fn ingest<R: BufRead>(source: R, config: &CorpusConfig) -> Result<IngestReport> {
    let mut lines = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }

    let parsed = par::map_slice(&lines, |(line_no, line)| -> Result<ArticleRecord> {
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: *line_no,
            message: e.to_string(),
        })?;
        let date: YearMonth = raw.date.parse().map_err(|e: Error| Error::Parse {
            line: *line_no,
            message: e.to_string(),
        })?;
        Ok(ArticleRecord::from_text(
            raw.id,
            date,
            &raw.abstract_text,
            &raw.keywords,
        ))
    });

    let mut report = IngestReport::default();
    for record in parsed {
        let record = record?;
        if !config.range.contains(record.date) {
            report.rejected_out_of_range += 1;
        } else if record.abstract_terms.is_empty() {
            report.rejected_empty_abstract += 1;
        } else {
            report.records.push(record);
        }
    }
    if report.rejected() > 0 {
        warn!(
            "ingest: rejected {} records outside {} and {} with empty abstracts",
            report.rejected_out_of_range, config.range, report.rejected_empty_abstract
        );
    }
    Ok(report)
}

/// Serializes records back into the line format read by [`ingest`].
pub fn write_corpus<W: std::io::Write>(mut out: W, records: &[RawRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Variant phrase to canonical topic phrase. Canonical phrases always map to
/// themselves.
#[derive(Debug, Clone, Default)]
pub struct CanonicalizationMap {
    entries: HashMap<String, String>,
    max_words: usize,
}

impl CanonicalizationMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut variants: BTreeMap<String, String> = BTreeMap::new();
        for (variant, canonical) in pairs {
            let variant = normalize_phrase(variant.as_ref());
            let canonical = normalize_phrase(canonical.as_ref());
            if variant.is_empty() || canonical.is_empty() {
                return Err(Error::InvalidInput("empty phrase in canonicalization map".into()));
            }
            if let Some(prev) = variants.get(&variant) {
                if *prev != canonical {
                    return Err(Error::InvalidInput(format!(
                        "variant `{variant}` maps to both `{prev}` and `{canonical}`"
                    )));
                }
            }
            variants.insert(variant, canonical);
        }
        for (variant, canonical) in &variants {
            if let Some(next) = variants.get(canonical) {
                if next != canonical {
                    return Err(Error::InvalidInput(format!(
                        "chained mapping `{variant}` -> `{canonical}` -> `{next}`"
                    )));
                }
            }
        }

        let mut entries: HashMap<String, String> = HashMap::new();
        for (variant, canonical) in variants {
            entries.insert(canonical.clone(), canonical.clone());
            entries.insert(variant, canonical);
        }
        let max_words = entries
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0);
        Ok(Self { entries, max_words })
    }

    /// Two-column text: `variant<TAB>canonical` (a comma is accepted when the
    /// line has no tab). `#` starts a comment.
    pub fn parse<R: BufRead>(source: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let split = content
                .split_once('\t')
                .or_else(|| content.split_once(','))
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: "expected two columns".into(),
                })?;
            pairs.push((split.0.trim().to_string(), split.1.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical form of a phrase, or `None` if it is not in the map.
    pub fn lookup(&self, phrase: &str) -> Option<&str> {
        self.entries.get(&normalize_phrase(phrase)).map(String::as_str)
    }

    /// One left-to-right pass of longest-match, non-overlapping replacement.
    fn replace_pass(&self, terms: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(terms.len());
        let mut i = 0;
        while i < terms.len() {
            let longest = self.max_words.min(terms.len() - i);
            let hit = (1..=longest).rev().find_map(|len| {
                let joined = terms[i..i + len].join(" ");
                self.entries.get(&joined).map(|c| (len, c))
            });
            match hit {
                Some((len, canonical)) => {
                    out.push(canonical.clone());
                    i += len;
                }
                None => {
                    out.push(terms[i].clone());
                    i += 1;
                }
            }
        }
        out
    }

    /// Replaces variants until the term sequence stops changing, which makes
    /// the operation idempotent even when a replacement creates a new match.
    pub fn canonicalize_terms(&self, terms: &[String]) -> Vec<String> {
        if self.entries.is_empty() {
            return terms.to_vec();
        }
        let mut current = self.replace_pass(terms);
        loop {
            let next = self.replace_pass(&current);
            if next == current {
                return current;
            }
            current = next;
        }
    }
}

pub fn canonicalize(records: &[ArticleRecord], map: &CanonicalizationMap) -> Vec<ArticleRecord> {
    par::map_slice(records, |r| ArticleRecord {
        id: r.id.clone(),
        date: r.date,
        abstract_terms: map.canonicalize_terms(&r.abstract_terms),
        keywords: r
            .keywords
            .iter()
            .map(|k| map.canonicalize_terms(k))
            .collect(),
    })
}

/// Finds whole-term occurrences of a fixed set of phrases.
#[derive(Debug, Clone)]
pub struct PhraseMatcher {
    index: HashMap<String, usize>,
    max_words: usize,
}

impl PhraseMatcher {
    pub fn new<S: AsRef<str>>(phrases: &[S]) -> Self {
        let index: HashMap<String, usize> = phrases
            .iter()
            .enumerate()
            .map(|(i, p)| (normalize_phrase(p.as_ref()), i))
            .collect();
        let max_words = index
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0);
        Self { index, max_words }
    }

    /// Sorted, deduplicated indices of the phrases present in the record's
    /// abstract or keywords. A phrase matches a contiguous run of terms whose
    /// space-joined text equals it exactly.
    pub fn matches(&self, record: &ArticleRecord) -> Vec<usize> {
        let mut found = Vec::new();
        for seq in record.term_sequences() {
            for start in 0..seq.len() {
                let longest = self.max_words.min(seq.len() - start);
                let mut joined = String::new();
                for len in 1..=longest {
                    if len > 1 {
                        joined.push(' ');
                    }
                    joined.push_str(&seq[start + len - 1]);
                    if let Some(&idx) = self.index.get(&joined) {
                        found.push(idx);
                    }
                }
            }
        }
        found.sort_unstable();
        found.dedup();
        found
    }
}

pub fn records_in_window<'a>(
    records: &'a [ArticleRecord],
    window: &MonthRange,
) -> Vec<&'a ArticleRecord> {
    records.iter().filter(|r| window.contains(r.date)).collect()
}

/// Fraction of in-window articles whose abstract or keywords contain `topic`.
pub fn topic_prevalence(records: &[ArticleRecord], topic: &str, window: &MonthRange) -> Result<f64> {
    let in_window = records_in_window(records, window);
    if in_window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let matcher = PhraseMatcher::new(&[topic]);
    let hits = in_window
        .iter()
        .filter(|r| !matcher.matches(r).is_empty())
        .count();
    Ok(hits as f64 / in_window.len() as f64)
}

/// Canonical topics selected for network construction, in descending order of
/// prevalence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicVocabulary {
    pub topics: Vec<String>,
    pub prevalence: Vec<f64>,
}

impl TopicVocabulary {
    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn index_of(&self, topic: &str) -> Option<usize> {
        self.topics.iter().position(|t| t == topic)
    }
}

/// All distinct keyword phrases in the corpus, sorted.
pub fn candidate_topics(records: &[ArticleRecord]) -> Vec<String> {
    let set: HashSet<String> = records.iter().flat_map(|r| r.keyword_phrases()).collect();
    let mut out: Vec<String> = set.into_iter().collect();
    out.sort();
    out
}

/// Picks the `k` most prevalent keyword phrases over `window`; ties go to the
/// lexicographically smaller phrase.
pub fn select_top_k(
    records: &[ArticleRecord],
    k: usize,
    window: &MonthRange,
) -> Result<TopicVocabulary> {
    let candidates = candidate_topics(records);
    if candidates.len() < k {
        return Err(Error::NotEnoughCandidates {
            requested: k,
            found: candidates.len(),
        });
    }
    let in_window = records_in_window(records, window);
    if in_window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let matcher = PhraseMatcher::new(&candidates);
    let per_record = par::map_slice(&in_window, |r| matcher.matches(r));
    let mut counts = vec![0usize; candidates.len()];
    for hits in per_record {
        for idx in hits {
            counts[idx] += 1;
        }
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    // Integer counts share one denominator, so sorting by count is exact.
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then_with(|| candidates[a].cmp(&candidates[b])));
    order.truncate(k);

    let n = in_window.len() as f64;
    Ok(TopicVocabulary {
        topics: order.iter().map(|&i| candidates[i].clone()).collect(),
        prevalence: order.iter().map(|&i| counts[i] as f64 / n).collect(),
    })
}

/// Per-topic occurrence bitsets over the articles of one window.
#[derive(Debug, Clone)]
pub struct OccurrenceMatrix {
    pub n_articles: usize,
    words: usize,
    bits: Vec<Vec<u64>>,
}

impl OccurrenceMatrix {
    pub fn build<S: AsRef<str>>(records: &[&ArticleRecord], topics: &[S]) -> Self {
        let matcher = PhraseMatcher::new(topics);
        let n_articles = records.len();
        let words = n_articles.div_ceil(64);
        let per_record = par::map_slice(records, |r| matcher.matches(r));
        let mut bits = vec![vec![0u64; words]; topics.len()];
        for (article, hits) in per_record.iter().enumerate() {
            for &t in hits {
                bits[t][article / 64] |= 1u64 << (article % 64);
            }
        }
        Self {
            n_articles,
            words,
            bits,
        }
    }

    pub fn n_topics(&self) -> usize {
        self.bits.len()
    }

    pub fn count(&self, topic: usize) -> usize {
        self.bits[topic].iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn joint_count(&self, a: usize, b: usize) -> usize {
        (0..self.words)
            .map(|w| (self.bits[a][w] & self.bits[b][w]).count_ones() as usize)
            .sum()
    }

    pub fn indicator(&self, topic: usize) -> Vec<bool> {
        (0..self.n_articles)
            .map(|i| self.bits[topic][i / 64] >> (i % 64) & 1 == 1)
            .collect()
    }
}
