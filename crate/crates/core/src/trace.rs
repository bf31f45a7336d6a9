//! Session traces: ordered READ/WRITE/SEP/COMMIT/TRUNCATE records.
//!
//! Traces serialize as line-delimited JSON, one record per event:
//!
//! ```text
//! {"type":"READ","payload":{"index":0,"token":"ka"}}
//! {"type":"WRITE","payload":{"token":"KO","delay":1}}
//! {"type":"SEP","payload":{"delay":4}}
//! {"type":"COMMIT","payload":{"source_start":0,"source_end":3,"target_words":3}}
//! {"type":"TRUNCATE","payload":{"removed_pairs":0,"source_words":3,"target_words":3}}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "UPPERCASE")]
pub enum TraceEvent {
    Read {
        index: usize,
        token: String,
    },
    /// A committed content token; `delay` is the number of source tokens read so far.
    Write {
        token: String,
        delay: usize,
    },
    Sep {
        delay: usize,
    },
    /// A span moved to the history. `source_end` is exclusive.
    Commit {
        source_start: usize,
        source_end: usize,
        target_words: usize,
    },
    /// History state after truncation.
    Truncate {
        removed_pairs: usize,
        source_words: usize,
        target_words: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionTrace {
    pub events: Vec<TraceEvent>,
}

impl SessionTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    /// Delays g(i), one per written content token.
    pub fn delays(&self) -> Vec<usize> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Write { delay, .. } => Some(*delay),
                _ => None,
            })
            .collect()
    }

    /// Emitted content tokens in order (separators excluded).
    pub fn hypothesis(&self) -> Vec<String> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Write { token, .. } => Some(token.clone()),
                _ => None,
            })
            .collect()
    }

    /// Number of source tokens read.
    pub fn source_read(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Read { .. }))
            .count()
    }

    /// Exclusive end indices of every committed source span.
    pub fn commit_ends(&self) -> Vec<usize> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Commit { source_end, .. } => Some(*source_end),
                _ => None,
            })
            .collect()
    }

    /// Largest post-truncation history size observed, as (source, target) words.
    pub fn max_history_words(&self) -> (usize, usize) {
        self.events.iter().fold((0, 0), |(s, t), e| match e {
            TraceEvent::Truncate {
                source_words,
                target_words,
                ..
            } => (s.max(*source_words), t.max(*target_words)),
            _ => (s, t),
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for event in &self.events {
            serde_json::to_writer(&mut out, event)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut trace = SessionTrace::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event = serde_json::from_str(&line)
                .map_err(|e| Error::parse(format!("trace line {}", lineno + 1), e.to_string()))?;
            trace.push(event);
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format_is_tagged() {
        let line = serde_json::to_string(&TraceEvent::Read {
            index: 0,
            token: "ka".into(),
        })
        .unwrap();
        assert_eq!(line, r#"{"type":"READ","payload":{"index":0,"token":"ka"}}"#);
        let line = serde_json::to_string(&TraceEvent::Sep { delay: 4 }).unwrap();
        assert_eq!(line, r#"{"type":"SEP","payload":{"delay":4}}"#);
    }

    #[test]
    fn jsonl_round_trip_and_accessors() {
        let mut t = SessionTrace::new();
        t.push(TraceEvent::Read {
            index: 0,
            token: "a".into(),
        });
        t.push(TraceEvent::Write {
            token: "A".into(),
            delay: 1,
        });
        t.push(TraceEvent::Sep { delay: 1 });
        t.push(TraceEvent::Commit {
            source_start: 0,
            source_end: 1,
            target_words: 1,
        });
        t.push(TraceEvent::Truncate {
            removed_pairs: 0,
            source_words: 1,
            target_words: 1,
        });
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let back = SessionTrace::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.delays(), vec![1]);
        assert_eq!(back.hypothesis(), vec!["A".to_string()]);
        assert_eq!(back.commit_ends(), vec![1]);
        assert_eq!(back.max_history_words(), (1, 1));
        assert_eq!(back.source_read(), 1);
    }

    #[test]
    fn malformed_line_reports_position() {
        let err = SessionTrace::read_jsonl("{\"type\":\"READ\"}\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
