use std::collections::VecDeque;

use super::mechanism::{BoundaryQuery, BoundarySelector, WaitKPolicy};
use super::segmenter::Segmenter;
use crate::error::{Error, Result};
use crate::stream::{
    commit_to_history, is_sep, session_snapshot, session_snapshot_marked, truncate_history,
    ActiveChunk, DecoderContext, StreamingHistory, TokenStream, DEFAULT_HISTORY_WORDS, SEP,
};
use crate::trace::{SessionTrace, TraceEvent};
use crate::translator::{speculative_beam_search, IncrementalDecoder};

/// Segment write budget per closed source word once no more input can help.
const FLUSH_FACTOR: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    pub policy: WaitKPolicy,
    pub history_cap: usize,
    pub beam: usize,
    /// Speculation depth; `None` means 2k.
    pub max_new: Option<usize>,
}

impl SessionConfig {
    pub fn new(k: usize) -> Result<Self> {
        Ok(SessionConfig {
            policy: WaitKPolicy::new(k)?,
            history_cap: DEFAULT_HISTORY_WORDS,
            beam: 4,
            max_new: None,
        })
    }

    pub fn max_new(&self) -> usize {
        self.max_new.unwrap_or(2 * self.policy.k())
    }

    fn validate(&self) -> Result<()> {
        if self.history_cap == 0 || self.beam == 0 || self.max_new == Some(0) {
            return Err(Error::Configuration(
                "history cap, beam and max_new must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A session that failed part-way, with everything it did before the failure.
#[derive(Debug, thiserror::Error)]
#[error("session aborted after {} events: {error}", trace.events.len())]
pub struct SessionAbort {
    pub trace: SessionTrace,
    #[source]
    pub error: Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Progress,
    /// Waiting for the next source token.
    Blocked,
    Finished,
}

enum Boundaries<'a> {
    Mechanism(Box<dyn BoundarySelector + 'a>),
    Segmenter {
        segmenter: Box<dyn Segmenter + 'a>,
        /// Known chunk ends not yet committed, as stream positions.
        pending: VecDeque<usize>,
    },
}

/// Incremental translation session over a growing source stream.
///
/// Each [`step`](Session::step) performs one READ or one WRITE round (one
/// beam search whose continuation is committed as far as the policy allows).
pub struct Session<'a> {
    decoder: &'a dyn IncrementalDecoder,
    config: SessionConfig,
    boundaries: Boundaries<'a>,
    history: StreamingHistory,
    chunk: ActiveChunk,
    read: Vec<String>,
    committed_target: usize,
    declined: bool,
    finished: bool,
    trace: SessionTrace,
}

impl<'a> Session<'a> {
    /// Segmentation-free session: segments are closed by the decoder and the
    /// selector decides how much source they consumed.
    pub fn segfree(
        decoder: &'a dyn IncrementalDecoder,
        config: SessionConfig,
        selector: Box<dyn BoundarySelector + 'a>,
    ) -> Result<Self> {
        Self::with(decoder, config, Boundaries::Mechanism(selector))
    }

    /// Segmented session: the segmenter decides chunk ends, which reach the
    /// decoder as source separators.
    pub fn segmented(
        decoder: &'a dyn IncrementalDecoder,
        config: SessionConfig,
        segmenter: Box<dyn Segmenter + 'a>,
    ) -> Result<Self> {
        Self::with(
            decoder,
            config,
            Boundaries::Segmenter {
                segmenter,
                pending: VecDeque::new(),
            },
        )
    }

    fn with(
        decoder: &'a dyn IncrementalDecoder,
        config: SessionConfig,
        boundaries: Boundaries<'a>,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Session {
            decoder,
            config,
            boundaries,
            history: StreamingHistory::new(config.history_cap),
            chunk: ActiveChunk::new(0, 0),
            read: Vec::new(),
            committed_target: 0,
            declined: false,
            finished: false,
            trace: SessionTrace::new(),
        })
    }

    pub fn trace(&self) -> &SessionTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SessionTrace {
        self.trace
    }

    pub fn history(&self) -> &StreamingHistory {
        &self.history
    }

    pub fn chunk(&self) -> &ActiveChunk {
        &self.chunk
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Words of the segment currently being translated and whether its source
    /// side is complete.
    fn segment_view(&self, exhausted: bool) -> (usize, bool) {
        match &self.boundaries {
            Boundaries::Mechanism(_) => (self.chunk.source_span.len(), exhausted),
            Boundaries::Segmenter { pending, .. } => match pending.front() {
                Some(b) => (b - self.chunk.source_start, true),
                None => (self.chunk.source_span.len(), false),
            },
        }
    }

    pub fn step(&mut self, stream: &TokenStream) -> Result<Step> {
        if self.finished {
            return Ok(Step::Finished);
        }
        let available = self.read.len() < stream.len();
        let exhausted = stream.is_closed() && !available;

        if let Boundaries::Segmenter { segmenter, pending } = &mut self.boundaries {
            while let Some(b) = segmenter.next_boundary(&self.read, exhausted) {
                let floor = pending.back().copied().unwrap_or(self.chunk.source_start);
                if b <= floor || b > self.read.len() {
                    return Err(Error::Domain(format!("segmenter returned boundary {b}")));
                }
                pending.push_back(b);
            }
            if exhausted && pending.is_empty() && self.chunk.source_span.is_empty() {
                self.finished = true;
                return Ok(Step::Finished);
            }
        }

        let (seg_words, seg_closed) = self.segment_view(exhausted);
        let written = self.chunk.target_partial.len();
        let write = !self.declined && self.config.policy.should_write(seg_words, written, seg_closed);
        if !write {
            if available {
                self.read_next(stream)?;
                return Ok(Step::Progress);
            }
            if !stream.is_closed() {
                return Ok(Step::Blocked);
            }
            if self.declined {
                self.finished = true;
                return Ok(Step::Finished);
            }
        }
        self.write_round(exhausted)?;
        Ok(if self.finished {
            Step::Finished
        } else {
            Step::Progress
        })
    }

    fn read_next(&mut self, stream: &TokenStream) -> Result<()> {
        let token = stream
            .get(self.read.len())
            .expect("caller checked availability")
            .clone();
        self.trace.push(TraceEvent::Read {
            index: token.stream_index,
            token: token.surface.clone(),
        });
        self.read.push(token.surface.clone());
        self.chunk.push_source(token)?;
        self.declined = false;
        Ok(())
    }

    fn context(&self) -> DecoderContext {
        match &self.boundaries {
            Boundaries::Mechanism(_) => session_snapshot(&self.history, &self.chunk),
            Boundaries::Segmenter { pending, .. } => {
                let mut ctx = session_snapshot_marked(&self.history, &self.chunk);
                ctx.source.truncate(ctx.source.len() - self.chunk.source_span.len());
                let mut marks = pending.iter().peekable();
                for t in &self.chunk.source_span {
                    ctx.source.push(t.surface.clone());
                    if marks.next_if(|&&b| b == t.stream_index + 1).is_some() {
                        ctx.source.push(SEP.to_string());
                    }
                }
                ctx
            }
        }
    }

    fn write_round(&mut self, exhausted: bool) -> Result<()> {
        let ctx = self.context();
        let hyp = speculative_beam_search(
            self.decoder,
            &ctx.source,
            &ctx.target,
            self.config.beam,
            self.config.max_new(),
        )?;
        let continuation = hyp.continuation(ctx.target.len());
        for (i, token) in continuation.iter().enumerate() {
            let (seg_words, seg_closed) = self.segment_view(exhausted);
            if is_sep(token) {
                return self.close_segment(exhausted, false);
            }
            self.chunk.push_target(token.clone())?;
            self.trace.push(TraceEvent::Write {
                token: token.clone(),
                delay: self.read.len(),
            });
            let written = self.chunk.target_partial.len();
            if seg_closed && written >= FLUSH_FACTOR * seg_words.max(1) {
                return self.close_segment(exhausted, true);
            }
            if !self.config.policy.should_write(seg_words, written, seg_closed) {
                // the separator is not a word, so the budget does not hold it back
                if continuation.get(i + 1).is_some_and(|t| is_sep(t)) {
                    return self.close_segment(exhausted, false);
                }
                break;
            }
        }
        Ok(())
    }

    fn close_segment(&mut self, exhausted: bool, forced: bool) -> Result<()> {
        let chunk_len = self.chunk.source_span.len();
        let a_hat = match &mut self.boundaries {
            Boundaries::Segmenter { pending, .. } => match pending.pop_front() {
                Some(b) => b - self.chunk.source_start,
                None => {
                    // a segment cannot end before its source does
                    self.declined = true;
                    return Ok(());
                }
            },
            Boundaries::Mechanism(selector) => {
                if self.chunk.target_partial.is_empty() {
                    self.declined = true;
                    return Ok(());
                }
                if forced && exhausted {
                    chunk_len
                } else {
                    let source: Vec<String> = self
                        .chunk
                        .source_span
                        .iter()
                        .map(|t| t.surface.clone())
                        .collect();
                    let segment: Vec<String> = self
                        .chunk
                        .target_partial
                        .iter()
                        .map(|t| t.surface.clone())
                        .collect();
                    selector.select(&BoundaryQuery {
                        chunk_source: &source,
                        segment: &segment,
                        chunk_start: self.chunk.source_start,
                        committed_target: self.committed_target,
                    })?
                }
            }
        };
        self.commit(a_hat)?;
        let segmenter_done = match &self.boundaries {
            Boundaries::Segmenter { pending, .. } => pending.is_empty(),
            Boundaries::Mechanism(_) => true,
        };
        if exhausted && self.chunk.source_span.is_empty() && segmenter_done {
            self.finished = true;
        }
        Ok(())
    }

    fn commit(&mut self, a_hat: usize) -> Result<()> {
        self.trace.push(TraceEvent::Sep {
            delay: self.read.len(),
        });
        let target_words = self.chunk.target_partial.len();
        let source_start = self.chunk.source_start;
        let chunk = std::mem::take(&mut self.chunk);
        let history = std::mem::replace(&mut self.history, StreamingHistory::new(1));
        let (history, chunk) = commit_to_history(history, chunk, a_hat)?;
        self.trace.push(TraceEvent::Commit {
            source_start,
            source_end: source_start + a_hat,
            target_words,
        });
        let before = history.len();
        self.history = truncate_history(history);
        self.chunk = chunk;
        self.committed_target += target_words;
        self.trace.push(TraceEvent::Truncate {
            removed_pairs: before - self.history.len(),
            source_words: self.history.source_words(),
            target_words: self.history.target_words(),
        });
        Ok(())
    }

    /// Steps until the session finishes or needs more input.
    pub fn run(&mut self, stream: &TokenStream) -> Result<Step> {
        loop {
            match self.step(stream)? {
                Step::Progress => continue,
                done => return Ok(done),
            }
        }
    }
}

fn run_closed(mut session: Session<'_>, source: &TokenStream) -> Result<SessionTrace, SessionAbort> {
    if !source.is_closed() || source.is_empty() {
        let error = Error::Configuration("simulation needs a closed, non-empty source".into());
        return Err(SessionAbort {
            trace: session.into_trace(),
            error,
        });
    }
    match session.run(source) {
        Ok(_) => Ok(session.into_trace()),
        Err(error) => Err(SessionAbort {
            trace: session.into_trace(),
            error,
        }),
    }
}

/// Translates a complete source stream without segmentation.
pub fn run_segfree_session<'a>(
    source: &TokenStream,
    decoder: &'a dyn IncrementalDecoder,
    config: SessionConfig,
    selector: Box<dyn BoundarySelector + 'a>,
) -> Result<SessionTrace, SessionAbort> {
    let session = Session::segfree(decoder, config, selector).map_err(|error| SessionAbort {
        trace: SessionTrace::new(),
        error,
    })?;
    run_closed(session, source)
}

/// Translates a complete source stream chunk by chunk as the segmenter cuts it.
pub fn run_segmented_session<'a>(
    source: &TokenStream,
    segmenter: Box<dyn Segmenter + 'a>,
    decoder: &'a dyn IncrementalDecoder,
    config: SessionConfig,
) -> Result<SessionTrace, SessionAbort> {
    let session = Session::segmented(decoder, config, segmenter).map_err(|error| SessionAbort {
        trace: SessionTrace::new(),
        error,
    })?;
    run_closed(session, source)
}
