//! Synthetic corpora with planted topic communities and trends.
//!
//! Each article picks a home block uniformly, then mentions every topic
//! independently: home-block topics with `p_within`, others with
//! `p_between`. A topic's trend shifts the log-odds of that probability
//! linearly in time, centred on the middle of the month span.

use std::io::Read;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleRecord, RawRecord};
use crate::error::{Error, Result};
use crate::month::MonthRange;
use crate::par;
use crate::seed::{derive_seed, rng_from_seed};

const FIRST_WORDS: [&str; 26] = [
    "amygdalar", "basal", "cortical", "dorsal", "entorhinal", "frontal", "glial", "hippocampal",
    "insular", "jugular", "limbic", "motor", "neural", "occipital", "parietal", "quantal",
    "retinal", "striatal", "thalamic", "uncinate", "ventral", "white", "axonal", "synaptic",
    "spinal", "cerebellar",
];

const SECOND_WORDS: [&str; 26] = [
    "activity", "binding", "circuit", "dynamics", "encoding", "field", "gating", "habituation",
    "imaging", "junction", "kinetics", "learning", "memory", "network", "oscillation",
    "plasticity", "quiescence", "receptor", "signaling", "tract", "uptake", "volume", "wave",
    "excitability", "yield", "zone",
];

const FILLER_WORDS: [&str; 24] = [
    "we", "report", "here", "that", "the", "results", "show", "using", "data", "from", "this",
    "study", "and", "with", "in", "of", "was", "were", "observed", "across", "subjects",
    "findings", "suggest", "further",
];

/// Maximum number of distinct generated topic names.
pub const MAX_TOPICS: usize = FIRST_WORDS.len() * SECOND_WORDS.len();

/// The phrase used for synthetic topic `index`.
pub fn topic_name(index: usize) -> String {
    let a = FIRST_WORDS[index % FIRST_WORDS.len()];
    let b = SECOND_WORDS[(index / FIRST_WORDS.len()) % SECOND_WORDS.len()];
    format!("{a} {b}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub topic: usize,
    /// Change in mention log-odds per month.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_topics: usize,
    pub n_articles: usize,
    pub range: MonthRange,
    /// Block sizes; blocks take consecutive topic indices.
    pub blocks: Vec<usize>,
    pub p_within: f64,
    pub p_between: f64,
    #[serde(default)]
    pub trends: Vec<Trend>,
    pub seed: u64,
}

impl SynthSpec {
    /// `n_blocks` equal blocks covering `n_blocks * block_size` topics.
    pub fn equal_blocks(
        n_blocks: usize,
        block_size: usize,
        n_articles: usize,
        range: MonthRange,
        p_within: f64,
        p_between: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_topics: n_blocks * block_size,
            n_articles,
            range,
            blocks: vec![block_size; n_blocks],
            p_within,
            p_between,
            trends: Vec::new(),
            seed,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read_toml<R: Read>(mut source: R) -> Result<Self> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_topics == 0 || self.n_topics > MAX_TOPICS {
            return bad(format!("n_topics must be in 1..={MAX_TOPICS}"));
        }
        if self.blocks.is_empty() {
            return bad("at least one block is required".into());
        }
        if let Some(b) = self.blocks.iter().position(|&s| s == 0) {
            return bad(format!("block {b} is empty"));
        }
        let total: usize = self.blocks.iter().sum();
        if total != self.n_topics {
            return bad(format!("blocks cover {total} topics but n_topics is {}", self.n_topics));
        }
        for (name, p) in [("p_within", self.p_within), ("p_between", self.p_between)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        for t in &self.trends {
            if t.topic >= self.n_topics {
                return bad(format!("trend on topic {} but n_topics is {}", t.topic, self.n_topics));
            }
            if !t.drift.is_finite() {
                return bad(format!("trend on topic {} has non-finite drift", t.topic));
            }
        }
        Ok(())
    }

    pub fn topic_names(&self) -> Vec<String> {
        (0..self.n_topics).map(topic_name).collect()
    }

    /// Planted block of every topic.
    pub fn block_of_topics(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
            .collect()
    }

    /// Summed drift per topic.
    pub fn drifts(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_topics];
        for t in &self.trends {
            d[t.topic] += t.drift;
        }
        d
    }

    /// Month offset around which trends pivot.
    pub fn pivot(&self) -> f64 {
        (self.range.len_months() as f64 - 1.0) / 2.0
    }

    /// Probability that an article from `home` block written `month_offset`
    /// months after the range start mentions `topic`.
    pub fn mention_probability(&self, topic: usize, home: usize, month_offset: f64) -> f64 {
        let block = self.block_of_topics()[topic];
        let drift = self.drifts()[topic];
        mention_probability(
            if block == home { self.p_within } else { self.p_between },
            drift,
            month_offset - self.pivot(),
        )
    }

    /// Expected prevalence of `topic` among articles of a given month.
    pub fn expected_prevalence(&self, topic: usize, month_offset: f64) -> f64 {
        let n_blocks = self.blocks.len();
        (0..n_blocks)
            .map(|b| self.mention_probability(topic, b, month_offset))
            .sum::<f64>()
            / n_blocks as f64
    }
}

fn mention_probability(base: f64, drift: f64, t: f64) -> f64 {
    if base <= 0.0 || base >= 1.0 {
        return base;
    }
    let logit = (base / (1.0 - base)).ln() + drift * t;
    1.0 / (1.0 + (-logit).exp())
}

/// Generates the corpus in its on-disk form. Article `i` uses seed
/// `derive_seed(spec.seed, i)`, so output is independent of thread count.
pub fn generate_raw(spec: &SynthSpec) -> Result<Vec<RawRecord>> {
    spec.validate()?;
    let names = spec.topic_names();
    let blocks = spec.block_of_topics();
    let drifts = spec.drifts();
    let span = spec.range.len_months();
    let pivot = spec.pivot();
    let n_blocks = spec.blocks.len();
    let digits = spec.n_articles.max(1).to_string().len();

    Ok(par::map_indices(spec.n_articles, |i| {
        let mut rng = rng_from_seed(derive_seed(spec.seed, i as u64));
        let offset = rng.random_range(0..span);
        let home = rng.random_range(0..n_blocks);
        let t = offset as f64 - pivot;
        let mentioned: Vec<&str> = (0..spec.n_topics)
            .filter(|&j| {
                let base = if blocks[j] == home { spec.p_within } else { spec.p_between };
                rng.random_bool(mention_probability(base, drifts[j], t))
            })
            .map(|j| names[j].as_str())
            .collect();

        let mut order: Vec<&str> = mentioned.clone();
        order.shuffle(&mut rng);
        let mut words: Vec<&str> = Vec::new();
        for phrase in order {
            let n_filler = rng.random_range(1..=3);
            words.extend((0..n_filler).map(|_| *FILLER_WORDS.choose(&mut rng).expect("non-empty")));
            words.push(phrase);
        }
        let n_filler = rng.random_range(2..=5);
        words.extend((0..n_filler).map(|_| *FILLER_WORDS.choose(&mut rng).expect("non-empty")));

        RawRecord {
            id: format!("synth-{i:0digits$}"),
            date: spec.range.start.plus_months(offset as i64).to_string(),
            abstract_text: words.join(" "),
            keywords: mentioned.iter().map(|s| s.to_string()).collect(),
        }
    }))
}

/// Generates the corpus as parsed records.
pub fn generate(spec: &SynthSpec) -> Result<Vec<ArticleRecord>> {
    let range = spec.range;
    generate_raw(spec)?
        .into_iter()
        .map(|raw| {
            let date = raw.date.parse()?;
            debug_assert!(range.contains(date));
            Ok(ArticleRecord::from_text(raw.id, date, &raw.abstract_text, &raw.keywords))
        })
        .collect()
}
