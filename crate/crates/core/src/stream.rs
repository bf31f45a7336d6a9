//! Stream, active-chunk and streaming-history data model.
//!
//! The source stream is tiled into three consecutive regions: spans already
//! moved to the [`StreamingHistory`], the [`ActiveChunk`] still being
//! translated, and the unread suffix. Committing moves a prefix of the active
//! chunk (plus the target segment closed by a separator) into the history;
//! truncation drops whole pairs from the front once either side exceeds the
//! word cap.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// End-of-segment control symbol.
pub const SEP: &str = "[SEP]";

/// Default word cap on each side of the streaming history.
pub const DEFAULT_HISTORY_WORDS: usize = 50;

pub fn is_sep(surface: &str) -> bool {
    surface == SEP
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub stream_index: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, stream_index: usize) -> Self {
        Token {
            surface: surface.into(),
            stream_index,
        }
    }

    pub fn is_sep(&self) -> bool {
        is_sep(&self.surface)
    }
}

/// Append-only token stream. Indices are contiguous from zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    tokens: Vec<Token>,
    closed: bool,
}

impl TokenStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a closed stream from surfaces.
    pub fn closed_from<I, S>(surfaces: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut stream = TokenStream::new();
        for s in surfaces {
            stream.push(s)?;
        }
        stream.close();
        Ok(stream)
    }

    pub fn push(&mut self, surface: impl Into<String>) -> Result<&Token> {
        let surface = surface.into();
        if self.closed {
            return Err(Error::Configuration("push on a closed stream".into()));
        }
        if surface.is_empty() {
            return Err(Error::Domain("empty token surface".into()));
        }
        let index = self.tokens.len();
        self.tokens.push(Token::new(surface, index));
        Ok(&self.tokens[index])
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn get(&self, index: usize) -> Option<&Token> {
        self.tokens.get(index)
    }
}

/// Untranslated source span plus its partial translation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActiveChunk {
    /// Stream index of the first source token of the chunk.
    pub source_start: usize,
    pub source_span: Vec<Token>,
    /// Target stream index the partial translation starts at.
    pub target_start: usize,
    pub target_partial: Vec<Token>,
}

impl ActiveChunk {
    pub fn new(source_start: usize, target_start: usize) -> Self {
        ActiveChunk {
            source_start,
            source_span: Vec::new(),
            target_start,
            target_partial: Vec::new(),
        }
    }

    /// Stream index one past the last source token of the chunk.
    pub fn source_end(&self) -> usize {
        self.source_start + self.source_span.len()
    }

    pub fn push_source(&mut self, token: Token) -> Result<()> {
        if token.stream_index != self.source_end() {
            return Err(Error::Domain(format!(
                "source token {} is not contiguous with chunk ending at {}",
                token.stream_index,
                self.source_end()
            )));
        }
        self.source_span.push(token);
        Ok(())
    }

    /// Appends a content token to the partial translation.
    pub fn push_target(&mut self, surface: impl Into<String>) -> Result<&Token> {
        let surface = surface.into();
        if is_sep(&surface) {
            return Err(Error::Domain(
                "separator cannot enter the partial translation".into(),
            ));
        }
        let index = self.target_start + self.target_partial.len();
        self.target_partial.push(Token::new(surface, index));
        Ok(self.target_partial.last().expect("just pushed"))
    }
}

/// One committed (source span, target segment) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPair {
    pub source_span: Vec<Token>,
    /// Ends with exactly one separator.
    pub target_segment: Vec<Token>,
}

impl SegmentPair {
    pub fn source_words(&self) -> usize {
        self.source_span.len()
    }

    pub fn target_words(&self) -> usize {
        self.target_segment.iter().filter(|t| !t.is_sep()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamingHistory {
    pairs: VecDeque<SegmentPair>,
    max_words: usize,
}

impl Default for StreamingHistory {
    fn default() -> Self {
        StreamingHistory::new(DEFAULT_HISTORY_WORDS)
    }
}

impl StreamingHistory {
    pub fn new(max_words: usize) -> Self {
        assert!(max_words > 0, "history cap must be positive");
        StreamingHistory {
            pairs: VecDeque::new(),
            max_words,
        }
    }

    pub fn max_words(&self) -> usize {
        self.max_words
    }

    pub fn pairs(&self) -> impl ExactSizeIterator<Item = &SegmentPair> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_words(&self) -> usize {
        self.pairs.iter().map(SegmentPair::source_words).sum()
    }

    pub fn target_words(&self) -> usize {
        self.pairs.iter().map(SegmentPair::target_words).sum()
    }

    pub fn push(&mut self, pair: SegmentPair) {
        self.pairs.push_back(pair);
    }

    /// Stream index one past the newest committed source token, if any pair is held.
    pub fn source_end(&self) -> Option<usize> {
        self.pairs
            .iter()
            .rev()
            .find_map(|p| p.source_span.last())
            .map(|t| t.stream_index + 1)
    }

    fn over_cap(&self) -> bool {
        self.source_words() > self.max_words || self.target_words() > self.max_words
    }
}

/// Moves the first `a_hat` source tokens of the chunk and its partial
/// translation (closed with a separator) into the history.
///
/// `a_hat` is relative to the chunk start. Zero commits an empty source span,
/// which happens when the decoder closes a segment before the boundary moves.
pub fn commit_to_history(
    mut history: StreamingHistory,
    chunk: ActiveChunk,
    a_hat: usize,
) -> Result<(StreamingHistory, ActiveChunk)> {
    let len = chunk.source_span.len();
    if a_hat > len {
        return Err(Error::BoundaryDomain {
            position: a_hat,
            min: 0,
            max: len,
        });
    }
    let ActiveChunk {
        source_start,
        mut source_span,
        target_start,
        mut target_partial,
    } = chunk;
    let rest = source_span.split_off(a_hat);
    let sep_index = target_start + target_partial.len();
    target_partial.push(Token::new(SEP, sep_index));
    history.push(SegmentPair {
        source_span,
        target_segment: target_partial,
    });
    let next = ActiveChunk {
        source_start: source_start + a_hat,
        source_span: rest,
        target_start: sep_index + 1,
        target_partial: Vec::new(),
    };
    Ok((history, next))
}

/// Drops the oldest pairs, whole pairs only, until neither side exceeds the cap.
pub fn truncate_history(mut history: StreamingHistory) -> StreamingHistory {
    while history.over_cap() {
        history.pairs.pop_front();
    }
    history
}

/// Token context handed to a decoder.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecoderContext {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

/// History followed by the active chunk, on both sides. History target
/// segments keep their separators; the source side carries none.
pub fn session_snapshot(history: &StreamingHistory, chunk: &ActiveChunk) -> DecoderContext {
    snapshot(history, chunk, false)
}

/// Like [`session_snapshot`], but closes every history source span with a
/// separator, as a segmented pipeline feeds it to the translator.
pub fn session_snapshot_marked(history: &StreamingHistory, chunk: &ActiveChunk) -> DecoderContext {
    snapshot(history, chunk, true)
}

fn snapshot(history: &StreamingHistory, chunk: &ActiveChunk, mark_source: bool) -> DecoderContext {
    let mut ctx = DecoderContext::default();
    for pair in history.pairs() {
        ctx.source
            .extend(pair.source_span.iter().map(|t| t.surface.clone()));
        if mark_source {
            ctx.source.push(SEP.to_string());
        }
        ctx.target
            .extend(pair.target_segment.iter().map(|t| t.surface.clone()));
    }
    ctx.source
        .extend(chunk.source_span.iter().map(|t| t.surface.clone()));
    ctx.target
        .extend(chunk.target_partial.iter().map(|t| t.surface.clone()));
    ctx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk_from(start: usize, words: &str, target_start: usize, target: &str) -> ActiveChunk {
        let mut chunk = ActiveChunk::new(start, target_start);
        for (i, w) in words.split_whitespace().enumerate() {
            chunk.push_source(Token::new(w, start + i)).unwrap();
        }
        for w in target.split_whitespace() {
            chunk.push_target(w).unwrap();
        }
        chunk
    }

    fn surfaces(tokens: &[Token]) -> String {
        tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn pair(src: &str, tgt: &str) -> SegmentPair {
        let chunk = chunk_from(0, src, 0, tgt);
        let n = chunk.source_span.len();
        let (h, _) = commit_to_history(StreamingHistory::new(1000), chunk, n).unwrap();
        let p = h.pairs().next().unwrap().clone();
        p
    }

    #[test]
    fn commit_memory_mechanism_example() {
        let history = StreamingHistory::default();
        let chunk = chunk_from(
            3,
            "there is no doubt about that the question is how to do",
            4,
            "no me cabe ninguna duda",
        );
        let (history, next) = commit_to_history(history, chunk, 6).unwrap();
        let committed = history.pairs().last().unwrap();
        assert_eq!(surfaces(&committed.source_span), "there is no doubt about that");
        assert_eq!(
            surfaces(&committed.target_segment),
            "no me cabe ninguna duda [SEP]"
        );
        assert_eq!(next.source_span[0].surface, "the");
        assert_eq!(next.source_start, 9);
        assert!(next.target_partial.is_empty());
        assert_eq!(next.target_start, 10);
    }

    #[test]
    fn commit_full_consumption_leaves_empty_chunk() {
        let chunk = chunk_from(0, "a b c", 0, "A B C");
        let (history, next) = commit_to_history(StreamingHistory::default(), chunk, 3).unwrap();
        assert!(next.source_span.is_empty());
        assert_eq!(next.source_start, 3);
        assert_eq!(history.source_words(), 3);
        assert_eq!(history.target_words(), 3);
    }

    #[test]
    fn commit_minimal_one_word_empty_target() {
        let chunk = chunk_from(0, "a", 0, "");
        let (history, next) = commit_to_history(StreamingHistory::default(), chunk, 1).unwrap();
        let p = history.pairs().next().unwrap();
        assert_eq!(p.source_words(), 1);
        assert_eq!(surfaces(&p.target_segment), "[SEP]");
        assert!(next.source_span.is_empty());
    }

    #[test]
    fn commit_out_of_range_is_boundary_error() {
        let chunk = chunk_from(0, "a b", 0, "A");
        let err = commit_to_history(StreamingHistory::default(), chunk, 3).unwrap_err();
        assert!(matches!(err, Error::BoundaryDomain { position: 3, .. }));
    }

    #[test]
    fn commit_zero_is_an_empty_span() {
        let chunk = chunk_from(5, "a b", 0, "A");
        let (history, next) = commit_to_history(StreamingHistory::default(), chunk, 0).unwrap();
        assert_eq!(history.source_words(), 0);
        assert_eq!(next.source_span.len(), 2);
        assert_eq!(next.source_start, 5);
    }

    #[test]
    fn truncate_under_cap_is_identity() {
        let mut h = StreamingHistory::new(50);
        h.push(pair(&"w ".repeat(48), &"T ".repeat(47)));
        let before = h.clone();
        assert_eq!(truncate_history(h), before);
    }

    #[test]
    fn truncate_removes_oldest_pair() {
        let mut h = StreamingHistory::new(50);
        h.push(pair(&"a ".repeat(30), "A"));
        h.push(pair(&"b ".repeat(25), "B"));
        let h = truncate_history(h);
        assert_eq!(h.len(), 1);
        assert_eq!(h.source_words(), 25);
        assert_eq!(h.pairs().next().unwrap().source_span[0].surface, "b");
    }

    #[test]
    fn truncate_single_oversized_pair_empties_history() {
        let mut h = StreamingHistory::new(50);
        h.push(pair(&"a ".repeat(60), "A"));
        let h = truncate_history(h);
        assert!(h.is_empty());
        assert!(truncate_history(h.clone()).is_empty());
    }

    #[test]
    fn truncate_checks_target_side_too() {
        let mut h = StreamingHistory::new(5);
        h.push(pair("a", "A A A"));
        h.push(pair("b", "B B B"));
        let h = truncate_history(h);
        assert_eq!(h.len(), 1);
        assert_eq!(h.target_words(), 3);
    }

    #[test]
    fn snapshot_empty_history() {
        let chunk = chunk_from(0, "a b", 0, "");
        let ctx = session_snapshot(&StreamingHistory::default(), &chunk);
        assert_eq!(ctx.source.join(" "), "a b");
        assert!(ctx.target.is_empty());
    }

    #[test]
    fn snapshot_memory_mechanism_layout() {
        let chunk = chunk_from(0, "reduce harmful emissions", 0, "reducir emisiones nocivas");
        let (history, _) = commit_to_history(StreamingHistory::default(), chunk, 3).unwrap();
        let active = chunk_from(
            3,
            "there is no doubt about that the question is how to do",
            4,
            "no me cabe ninguna duda",
        );
        let ctx = session_snapshot(&history, &active);
        assert_eq!(
            ctx.source.join(" "),
            "reduce harmful emissions there is no doubt about that the question is how to do"
        );
        assert_eq!(
            ctx.target.join(" "),
            "reducir emisiones nocivas [SEP] no me cabe ninguna duda"
        );
        let marked = session_snapshot_marked(&history, &active);
        assert_eq!(marked.source[3], SEP);
    }

    #[test]
    fn snapshot_history_in_stream_order() {
        let mut h = StreamingHistory::default();
        h.push(pair("a", "A"));
        h.push(pair("b", "B"));
        let ctx = session_snapshot(&h, &ActiveChunk::new(2, 4));
        assert_eq!(ctx.source.join(" "), "a b");
        assert_eq!(ctx.target.join(" "), "A [SEP] B [SEP]");
    }

    #[test]
    fn closed_stream_rejects_push() {
        let mut s = TokenStream::closed_from(["a"]).unwrap();
        assert!(s.push("b").is_err());
        assert_eq!(s.get(0).unwrap().stream_index, 0);
    }
}
