use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::stream::is_sep;

/// Word-for-word translation table of the synthetic language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ToyLexicon {
    entries: HashMap<String, Vec<String>>,
    terminators: BTreeSet<String>,
}

pub const MAX_FERTILITY: usize = 2;

impl ToyLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source: impl Into<String>, targets: Vec<String>) -> Result<()> {
        let source = source.into();
        if source.is_empty() || is_sep(&source) || source.contains(char::is_whitespace) {
            return Err(Error::Configuration(format!("invalid lexicon source {source:?}")));
        }
        if targets.len() > MAX_FERTILITY {
            return Err(Error::Configuration(format!(
                "{source}: fertility {} exceeds {MAX_FERTILITY}",
                targets.len()
            )));
        }
        if let Some(t) = targets.iter().find(|t| t.is_empty() || is_sep(t)) {
            return Err(Error::Configuration(format!("{source}: invalid target {t:?}")));
        }
        if self.terminators.contains(&source) && targets.is_empty() {
            return Err(Error::Configuration(format!(
                "terminator {source} must produce at least one target word"
            )));
        }
        self.entries.insert(source, targets);
        Ok(())
    }

    pub fn mark_terminator(&mut self, source: &str) -> Result<()> {
        match self.entries.get(source) {
            None => Err(Error::Configuration(format!(
                "terminator {source} has no lexicon entry"
            ))),
            Some(t) if t.is_empty() => Err(Error::Configuration(format!(
                "terminator {source} must produce at least one target word"
            ))),
            Some(_) => {
                self.terminators.insert(source.to_string());
                Ok(())
            }
        }
    }

    pub fn translate_word(&self, source: &str) -> Option<&[String]> {
        self.entries.get(source).map(Vec::as_slice)
    }

    pub fn is_terminator(&self, source: &str) -> bool {
        self.terminators.contains(source)
    }

    pub fn terminators(&self) -> impl Iterator<Item = &str> {
        self.terminators.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted target vocabulary (excluding the separator).
    pub fn target_vocabulary(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.values().flatten().collect();
        set.into_iter().cloned().collect()
    }

    /// Monotone word-by-word translation. Fails on words missing from the table.
    pub fn translate(&self, source: &[String]) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for w in source {
            let t = self
                .translate_word(w)
                .ok_or_else(|| Error::DecoderState(format!("source word {w:?} not in lexicon")))?;
            out.extend(t.iter().cloned());
        }
        Ok(out)
    }

    /// Reads the tab-separated lexicon format:
    /// `source<TAB>target words[<TAB>terminator]`, one entry per line.
    /// An empty target field means fertility zero; `#` starts a comment line.
    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lex = ToyLexicon::new();
        let mut terminators = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let ctx = || format!("lexicon line {}", n + 1);
            match fields.as_slice() {
                [src, tgt] | [src, tgt, _] => {
                    let targets = tgt.split_whitespace().map(String::from).collect();
                    lex.insert(*src, targets)
                        .map_err(|e| Error::parse(ctx(), e.to_string()))?;
                    if let [_, _, flag] = fields.as_slice() {
                        match *flag {
                            "terminator" => terminators.push(src.to_string()),
                            "" => {}
                            other => {
                                return Err(Error::parse(ctx(), format!("unknown flag {other:?}")))
                            }
                        }
                    }
                }
                _ => return Err(Error::parse(ctx(), "expected 2 or 3 tab-separated fields")),
            }
        }
        for t in terminators {
            lex.mark_terminator(&t)?;
        }
        Ok(lex)
    }

    /// Writes entries sorted by source word.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        for k in keys {
            let targets = self.entries[k].join(" ");
            if self.is_terminator(k) {
                writeln!(out, "{k}\t{targets}\tterminator")?;
            } else {
                writeln!(out, "{k}\t{targets}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_format_round_trip() {
        let text = "# toy\naa\tAA\nbb\tBB BB\nzz\t\nstop\tSTOP\tterminator\n";
        let lex = ToyLexicon::read(text.as_bytes()).unwrap();
        assert_eq!(lex.len(), 4);
        assert!(lex.is_terminator("stop"));
        assert_eq!(lex.translate_word("zz").unwrap().len(), 0);
        let mut out = Vec::new();
        lex.write(&mut out).unwrap();
        assert_eq!(ToyLexicon::read(out.as_slice()).unwrap(), lex);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(ToyLexicon::read("aa\n".as_bytes()).is_err());
        assert!(ToyLexicon::read("aa\tA B C\n".as_bytes()).is_err());
        assert!(ToyLexicon::read("aa\t\tterminator\n".as_bytes()).is_err());
        assert!(ToyLexicon::read("aa\tA\tmaybe\n".as_bytes()).is_err());
        let mut lex = ToyLexicon::new();
        assert!(lex.mark_terminator("missing").is_err());
    }
}
