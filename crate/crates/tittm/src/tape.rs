//! Symbolic binary tapes with finite descriptions.
//!
//! A tape is a function ℕ → {0,1} written as a run-length decomposition plus
//! an eventually-constant tail bit. The normal form is unique (adjacent runs
//! differ, the last run differs from the tail), so structural equality is
//! extensional equality, which is what cycle detection leans on. The tail is
//! a free bit rather than fixed 0 because limit extrapolation of a
//! right-sweeping writer really does produce a tape of all ones.

use std::fmt;

use crate::ordinal::OrdinalError;

/// Run-length encoded tape: `runs` then infinitely many `tail` cells.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TapeRep {
    runs: Vec<(bool, u64)>,
    tail: bool,
}

impl Default for TapeRep {
    fn default() -> Self {
        TapeRep::empty()
    }
}

impl TapeRep {
    /// The all-zero tape.
    pub fn empty() -> Self {
        TapeRep { runs: Vec::new(), tail: false }
    }

    /// Normalize an arbitrary run list into the unique representation.
    pub fn new(runs: Vec<(bool, u64)>, tail: bool) -> Self {
        let mut norm: Vec<(bool, u64)> = Vec::with_capacity(runs.len());
        for (b, len) in runs {
            if len == 0 {
                continue;
            }
            match norm.last_mut() {
                Some((pb, plen)) if *pb == b => *plen += len,
                _ => norm.push((b, len)),
            }
        }
        while let Some(&(b, _)) = norm.last() {
            if b == tail {
                norm.pop();
            } else {
                break;
            }
        }
        TapeRep { runs: norm, tail }
    }

    /// Finite prefix loaded at cells 0.., tail 0.
    pub fn from_bits(bits: &[bool]) -> Self {
        let runs = bits.iter().map(|&b| (b, 1)).collect();
        TapeRep::new(runs, false)
    }

    /// Parse a word of `0`/`1` characters into a tape (tail 0).
    pub fn from_word(word: &str) -> Option<Self> {
        let mut bits = Vec::with_capacity(word.len());
        for ch in word.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return None,
            }
        }
        Some(TapeRep::from_bits(&bits))
    }

    pub fn runs(&self) -> &[(bool, u64)] {
        &self.runs
    }

    pub fn tail(&self) -> bool {
        self.tail
    }

    /// First index from which every cell equals the tail bit.
    pub fn support_end(&self) -> u64 {
        self.runs.iter().map(|(_, len)| len).sum()
    }

    pub fn read(&self, i: u64) -> bool {
        let mut at = 0u64;
        for &(b, len) in &self.runs {
            if i < at + len {
                return b;
            }
            at += len;
        }
        self.tail
    }

    pub fn write(&self, i: u64, v: bool) -> TapeRep {
        if self.read(i) == v {
            return self.clone();
        }
        let mut runs: Vec<(bool, u64)> = Vec::with_capacity(self.runs.len() + 2);
        let mut at = 0u64;
        let mut placed = false;
        for &(b, len) in &self.runs {
            if !placed && i < at + len {
                let before = i - at;
                runs.push((b, before));
                runs.push((v, 1));
                runs.push((b, len - before - 1));
                placed = true;
            } else {
                runs.push((b, len));
            }
            at += len;
        }
        if !placed {
            runs.push((self.tail, i - at));
            runs.push((v, 1));
        }
        TapeRep::new(runs, self.tail)
    }

    /// The tape as seen from cell `i` onward, re-based at 0.
    pub fn suffix_from(&self, i: u64) -> TapeRep {
        let mut runs: Vec<(bool, u64)> = Vec::new();
        let mut at = 0u64;
        for &(b, len) in &self.runs {
            if at + len > i {
                let skip = i.saturating_sub(at);
                runs.push((b, len - skip));
            }
            at += len;
        }
        TapeRep::new(runs, self.tail)
    }

    /// Cells [i-len, i) as a word, in one walk over the runs.
    fn window_before(&self, i: u64, len: u64) -> Vec<bool> {
        let lo = i - len;
        let mut out = Vec::with_capacity(len as usize);
        let mut at = 0u64;
        for &(b, rlen) in &self.runs {
            let end = at + rlen;
            if end > lo && at < i {
                let take = end.min(i) - at.max(lo);
                out.extend(std::iter::repeat(b).take(take as usize));
            }
            at = end;
            if at >= i {
                break;
            }
        }
        while (out.len() as u64) < len {
            out.push(self.tail);
        }
        out
    }

    /// Cell-wise OR, the lim-sup merge of two tapes.
    pub fn or(&self, other: &TapeRep) -> TapeRep {
        let mut runs = Vec::new();
        let mut a = self.runs.iter().copied().peekable();
        let mut b = other.runs.iter().copied().peekable();
        let mut a_cur: Option<(bool, u64)> = a.next();
        let mut b_cur: Option<(bool, u64)> = b.next();
        loop {
            match (a_cur, b_cur) {
                (None, None) => break,
                (Some((ab, alen)), None) => {
                    runs.push((ab || other.tail, alen));
                    a_cur = a.next();
                }
                (None, Some((bb, blen))) => {
                    runs.push((bb || self.tail, blen));
                    b_cur = b.next();
                }
                (Some((ab, alen)), Some((bb, blen))) => {
                    let take = alen.min(blen);
                    runs.push((ab || bb, take));
                    a_cur = if alen == take { a.next() } else { Some((ab, alen - take)) };
                    b_cur = if blen == take { b.next() } else { Some((bb, blen - take)) };
                }
            }
        }
        TapeRep::new(runs, self.tail || other.tail)
    }

    /// Overwrite cells [0, n) with the given prefix, keeping the rest.
    pub fn with_prefix(&self, prefix: &[bool]) -> TapeRep {
        let mut runs: Vec<(bool, u64)> = prefix.iter().map(|&b| (b, 1)).collect();
        let suffix = self.suffix_from(prefix.len() as u64);
        runs.extend_from_slice(&suffix.runs);
        TapeRep::new(runs, suffix.tail)
    }
}

/// Result of aligning two tape/head pairs: `Some(k)` means head₂ = head₁ + k,
/// the suffixes from the heads agree cell for cell, and the min(h₁,h₂) cells
/// before each head agree as words. `None` otherwise.
pub fn tape_shift_equal(t1: &TapeRep, h1: u64, t2: &TapeRep, h2: u64) -> Option<i64> {
    let k = (h2 as i128) - (h1 as i128);
    let k = i64::try_from(k).ok()?;
    if t1.suffix_from(h1) != t2.suffix_from(h2) {
        return None;
    }
    let pre = h1.min(h2);
    if t1.window_before(h1, pre) != t2.window_before(h2, pre) {
        return None;
    }
    Some(k)
}

impl fmt::Display for TapeRep {
    /// Trace serialization: `0^5 1^1 | tail 0` (just `| tail b` when blank).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (b, len) in &self.runs {
            write!(f, "{}^{} ", if *b { 1 } else { 0 }, len)?;
        }
        write!(f, "| tail {}", if self.tail { 1 } else { 0 })
    }
}

pub fn parse_tape(s: &str) -> Result<TapeRep, OrdinalError> {
    let bad = |msg: &str| OrdinalError::BadLiteral(format!("tape literal: {msg}"));
    let (runs_part, tail_part) = s
        .split_once('|')
        .ok_or_else(|| bad("missing `| tail b`"))?;
    let tail = match tail_part.trim().strip_prefix("tail").map(str::trim) {
        Some("0") => false,
        Some("1") => true,
        _ => return Err(bad("tail must be `tail 0` or `tail 1`")),
    };
    let mut runs = Vec::new();
    for chunk in runs_part.split_whitespace() {
        let (b, len) = chunk.split_once('^').ok_or_else(|| bad("run must be b^len"))?;
        let b = match b {
            "0" => false,
            "1" => true,
            _ => return Err(bad("run bit must be 0 or 1")),
        };
        let len: u64 = len.parse().map_err(|_| bad("bad run length"))?;
        runs.push((b, len));
    }
    Ok(TapeRep::new(runs, tail))
}
