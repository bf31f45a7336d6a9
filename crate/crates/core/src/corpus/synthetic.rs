use rand::distributions::{Distribution as _, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{Error, Result};
use crate::translator::{ToyLexicon, MAX_FERTILITY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrammarConfig {
    /// Non-terminator source words.
    pub vocabulary: usize,
    pub terminators: usize,
    /// Relative weights of fertility 0, 1 and 2.
    pub fertility: [f64; MAX_FERTILITY + 1],
    /// Content words per sentence, before the terminator.
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            vocabulary: 40,
            terminators: 3,
            fertility: [0.0, 0.5, 0.5],
            min_words: 3,
            max_words: 8,
        }
    }
}

impl GrammarConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Configuration(m.to_string()));
        if self.vocabulary == 0 || self.terminators == 0 {
            return bad("vocabulary and terminator counts must be positive");
        }
        if self.min_words > self.max_words {
            return bad("min_words exceeds max_words");
        }
        if self.fertility.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("fertility weights must be finite and non-negative");
        }
        if self.fertility[1..].iter().sum::<f64>() <= 0.0 {
            return bad("terminators need a positive weight on fertility 1 or 2");
        }
        Ok(())
    }
}

/// A random monotone language: lexicon plus sentence shape.
#[derive(Debug, Clone)]
pub struct SyntheticLanguage {
    config: GrammarConfig,
    lexicon: ToyLexicon,
    content: Vec<String>,
    terminators: Vec<String>,
}

fn target_words(index: usize, fertility: usize) -> Vec<String> {
    (0..fertility).map(|j| format!("T{index:03}{}", ['a', 'b'][j])).collect()
}

impl SyntheticLanguage {
    /// Draws the lexicon. The same seed and config always give the same language.
    pub fn new(seed: u64, config: GrammarConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all = WeightedIndex::new(config.fertility)
            .map_err(|e| Error::Configuration(e.to_string()))?;
        let positive = WeightedIndex::new(&config.fertility[1..])
            .map_err(|e| Error::Configuration(e.to_string()))?;
        let mut lexicon = ToyLexicon::new();
        let mut content = Vec::new();
        let mut terminators = Vec::new();
        for i in 0..config.vocabulary + config.terminators {
            let terminal = i >= config.vocabulary;
            let fertility = if terminal {
                1 + positive.sample(&mut rng)
            } else {
                all.sample(&mut rng)
            };
            let word = if terminal {
                format!("e{:02}", i - config.vocabulary)
            } else {
                format!("w{i:03}")
            };
            lexicon.insert(word.clone(), target_words(i, fertility))?;
            if terminal {
                lexicon.mark_terminator(&word)?;
                terminators.push(word);
            } else {
                content.push(word);
            }
        }
        Ok(SyntheticLanguage {
            config,
            lexicon,
            content,
            terminators,
        })
    }

    pub fn lexicon(&self) -> &ToyLexicon {
        &self.lexicon
    }

    pub fn config(&self) -> &GrammarConfig {
        &self.config
    }

    fn sentence<R: Rng>(&self, rng: &mut R) -> Result<(Vec<String>, Vec<String>)> {
        let n = rng.gen_range(self.config.min_words..=self.config.max_words);
        let mut source: Vec<String> = (0..n)
            .map(|_| self.content[rng.gen_range(0..self.content.len())].clone())
            .collect();
        source.push(self.terminators[rng.gen_range(0..self.terminators.len())].clone());
        let target = self.lexicon.translate(&source)?;
        Ok((source, target))
    }

    /// Documents named `{prefix}{index:03}`.
    pub fn documents(
        &self,
        seed: u64,
        prefix: &str,
        n_docs: usize,
        sentences_per_doc: usize,
    ) -> Result<Vec<Document>> {
        if n_docs == 0 || sentences_per_doc == 0 {
            return Err(Error::Configuration(
                "document and sentence counts must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_docs)
            .map(|d| {
                let pairs = (0..sentences_per_doc)
                    .map(|_| self.sentence(&mut rng))
                    .collect::<Result<Vec<_>>>()?;
                Document::new(format!("{prefix}{d:03}"), pairs)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub lexicon: ToyLexicon,
    /// Gold sentence ends per document, as exclusive stream positions.
    pub boundaries: Vec<Vec<usize>>,
}

pub fn generate_synthetic_corpus(
    seed: u64,
    n_docs: usize,
    sentences_per_doc: usize,
    config: &GrammarConfig,
) -> Result<SyntheticCorpus> {
    let language = SyntheticLanguage::new(seed, config.clone())?;
    let documents = language.documents(seed.wrapping_add(1), "doc", n_docs, sentences_per_doc)?;
    let boundaries = documents.iter().map(Document::sentence_ends).collect();
    Ok(SyntheticCorpus {
        documents,
        lexicon: language.lexicon,
        boundaries,
    })
}
