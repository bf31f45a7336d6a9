use crate::error::{Error, Result};

/// Decides chunk ends on the source stream for the segmented pipeline.
pub trait Segmenter: Send {
    /// The next boundary (exclusive stream position, larger than every
    /// boundary returned before) if it can be decided from the `read` words
    /// seen so far. With `closed` set, no further words will arrive.
    fn next_boundary(&mut self, read: &[String], closed: bool) -> Option<usize>;
}

/// Replays reference sentence boundaries.
#[derive(Debug, Clone)]
pub struct OracleSegmenter {
    boundaries: Vec<usize>,
    next: usize,
    last: usize,
}

/// Validates `boundaries` (exclusive ends, 1..=stream_len, increasing).
pub fn oracle_segmenter(stream_len: usize, boundaries: &[usize]) -> Result<OracleSegmenter> {
    if let Some(b) = boundaries.iter().find(|&&b| b == 0 || b > stream_len) {
        return Err(Error::Configuration(format!(
            "boundary {b} outside a stream of {stream_len} tokens"
        )));
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Configuration("boundaries must be strictly increasing".into()));
    }
    Ok(OracleSegmenter {
        boundaries: boundaries.to_vec(),
        next: 0,
        last: 0,
    })
}

impl Segmenter for OracleSegmenter {
    fn next_boundary(&mut self, read: &[String], closed: bool) -> Option<usize> {
        if let Some(&b) = self.boundaries.get(self.next) {
            if b <= read.len() {
                self.next += 1;
                self.last = b;
                return Some(b);
            }
            return None;
        }
        close_tail(&mut self.last, read.len(), closed)
    }
}

/// Cuts the stream every `length` words.
#[derive(Debug, Clone)]
pub struct FixedLengthSegmenter {
    length: usize,
    last: usize,
}

impl FixedLengthSegmenter {
    pub fn new(length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::Configuration("segment length must be positive".into()));
        }
        Ok(FixedLengthSegmenter { length, last: 0 })
    }
}

impl Segmenter for FixedLengthSegmenter {
    fn next_boundary(&mut self, read: &[String], closed: bool) -> Option<usize> {
        if self.last + self.length <= read.len() {
            self.last += self.length;
            return Some(self.last);
        }
        close_tail(&mut self.last, read.len(), closed)
    }
}

fn close_tail(last: &mut usize, read: usize, closed: bool) -> Option<usize> {
    if closed && *last < read {
        *last = read;
        Some(read)
    } else {
        None
    }
}
