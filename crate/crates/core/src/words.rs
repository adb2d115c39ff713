//! Finite and eventually periodic words over `{0, 1}`.
//!
//! Eventually periodic words are kept in canonical form: the period is
//! primitive and the preperiod is as short as possible, so structural
//! equality coincides with equality of the infinite words.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite word; every letter is 0 or 1.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FiniteWord(Vec<u8>);

impl FiniteWord {
    pub fn new(letters: Vec<u8>) -> Self {
        assert!(letters.iter().all(|&b| b <= 1), "letters must be 0 or 1");
        FiniteWord(letters)
    }

    pub fn empty() -> Self {
        FiniteWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn push(&mut self, b: u8) {
        assert!(b <= 1);
        self.0.push(b);
    }

    pub fn prefix(&self, n: usize) -> FiniteWord {
        FiniteWord(self.0[..n].to_vec())
    }

    pub fn complement(&self) -> FiniteWord {
        FiniteWord(self.0.iter().map(|b| 1 - b).collect())
    }

    pub fn concat(&self, other: &FiniteWord) -> FiniteWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FiniteWord(v)
    }

    /// `true` when `other` occurs as a contiguous block of `self`.
    pub fn contains_factor(&self, other: &FiniteWord) -> bool {
        other.is_empty() || self.0.windows(other.len()).any(|w| w == other.letters())
    }
}

impl From<&[u8]> for FiniteWord {
    fn from(v: &[u8]) -> Self {
        FiniteWord::new(v.to_vec())
    }
}

impl FromStr for FiniteWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse { text: s.into(), reason: "empty word" });
        }
        parse_bits(s).map(FiniteWord).ok_or(Error::Parse { text: s.into(), reason: "letters must be 0 or 1" })
    }
}

fn parse_bits(s: &str) -> Option<Vec<u8>> {
    s.bytes()
        .map(|c| match c {
            b'0' => Some(0),
            b'1' => Some(1),
            _ => None,
        })
        .collect()
}

impl TryFrom<String> for FiniteWord {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FiniteWord> for String {
    fn from(w: FiniteWord) -> String {
        w.to_string()
    }
}

impl fmt::Display for FiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for FiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

/// An infinite word `u v v v ...` with preperiod `u` and nonempty period `v`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EventuallyPeriodicWord {
    preperiod: Vec<u8>,
    period: Vec<u8>,
}

impl EventuallyPeriodicWord {
    /// Builds the canonical representative of `preperiod (period)^inf`.
    pub fn new(preperiod: FiniteWord, period: FiniteWord) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Parse { text: format!("{preperiod}()"), reason: "empty period" });
        }
        Ok(Self::canonical(preperiod.0, period.0))
    }

    pub fn periodic(period: FiniteWord) -> Result<Self> {
        Self::new(FiniteWord::empty(), period)
    }

    fn canonical(mut pre: Vec<u8>, period: Vec<u8>) -> Self {
        let mut period = primitive_root(period);
        while let (Some(&a), Some(&b)) = (pre.last(), period.last()) {
            if a != b {
                break;
            }
            pre.pop();
            period.rotate_right(1);
        }
        EventuallyPeriodicWord { preperiod: pre, period }
    }

    pub fn preperiod(&self) -> FiniteWord {
        FiniteWord(self.preperiod.clone())
    }

    pub fn period(&self) -> FiniteWord {
        FiniteWord(self.period.clone())
    }

    pub fn preperiod_len(&self) -> usize {
        self.preperiod.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn is_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }

    /// Letter at 0-based position `i`.
    #[inline]
    pub fn letter(&self, i: usize) -> u8 {
        let a = self.preperiod.len();
        if i < a {
            self.preperiod[i]
        } else {
            self.period[(i - a) % self.period.len()]
        }
    }

    /// The first `n` letters.
    pub fn prefix(&self, n: usize) -> FiniteWord {
        FiniteWord((0..n).map(|i| self.letter(i)).collect())
    }

    /// Number of distinct shifts `σ^n(w)`, `n >= 0`.
    pub fn orbit_len(&self) -> usize {
        self.preperiod.len() + self.period.len()
    }

    /// `σ^n(w)`.
    pub fn shift(&self, n: usize) -> Self {
        let a = self.preperiod.len();
        if n <= a {
            Self::canonical(self.preperiod[n..].to_vec(), self.period.clone())
        } else {
            let mut p = self.period.clone();
            let len = p.len();
            p.rotate_left((n - a) % len);
            EventuallyPeriodicWord { preperiod: Vec::new(), period: p }
        }
    }

    /// The distinct words `σ^n(w)` for `0 <= n < orbit_len()`.
    pub fn shifts(&self) -> impl Iterator<Item = EventuallyPeriodicWord> + '_ {
        (0..self.orbit_len()).map(move |n| self.shift(n))
    }

    pub fn complement(&self) -> Self {
        EventuallyPeriodicWord {
            preperiod: self.preperiod.iter().map(|b| 1 - b).collect(),
            period: self.period.iter().map(|b| 1 - b).collect(),
        }
    }

    /// `prefix` followed by this word.
    pub fn prepend(&self, prefix: &FiniteWord) -> Self {
        let mut pre = prefix.0.clone();
        pre.extend_from_slice(&self.preperiod);
        Self::canonical(pre, self.period.clone())
    }

    /// Length of the common prefix of `σ^i(self)` and `σ^j(other)`, or `None`
    /// if the two infinite words are equal.
    pub fn common_prefix_shifted(&self, i: usize, other: &Self, j: usize) -> Option<usize> {
        let bound = self.preperiod.len().saturating_sub(i).max(other.preperiod.len().saturating_sub(j))
            + self.period.len().lcm(&other.period.len());
        (0..bound).find(|&t| self.letter(i + t) != other.letter(j + t))
    }

    /// Lexicographic comparison of `σ^i(self)` with `σ^j(other)`.
    pub fn cmp_shifted(&self, i: usize, other: &Self, j: usize) -> Ordering {
        match self.common_prefix_shifted(i, other, j) {
            None => Ordering::Equal,
            Some(t) => self.letter(i + t).cmp(&other.letter(j + t)),
        }
    }
}

fn primitive_root(v: Vec<u8>) -> Vec<u8> {
    let n = v.len();
    for d in 1..n {
        if n.is_multiple_of(d) && (d..n).all(|i| v[i] == v[i - d]) {
            return v[..d].to_vec();
        }
    }
    v
}

/// Parses `bits? '(' bits ')'` into canonical form.
pub fn parse_word(text: &str) -> Result<EventuallyPeriodicWord> {
    text.parse()
}

impl FromStr for EventuallyPeriodicWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let err = |reason| Error::Parse { text: s.to_string(), reason };
        let open = s.find('(').ok_or_else(|| err("expected a parenthesised period, e.g. 1(10)"))?;
        let body = s[open + 1..].strip_suffix(')').ok_or_else(|| err("missing closing parenthesis"))?;
        if body.is_empty() {
            return Err(err("empty period"));
        }
        let pre = parse_bits(&s[..open]).ok_or_else(|| err("letters must be 0 or 1"))?;
        let per = parse_bits(body).ok_or_else(|| err("letters must be 0 or 1"))?;
        Ok(Self::canonical(pre, per))
    }
}

impl TryFrom<String> for EventuallyPeriodicWord {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EventuallyPeriodicWord> for String {
    fn from(w: EventuallyPeriodicWord) -> String {
        w.to_string()
    }
}

impl fmt::Display for EventuallyPeriodicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", FiniteWord(self.preperiod.clone()), FiniteWord(self.period.clone()))
    }
}

impl fmt::Debug for EventuallyPeriodicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl PartialOrd for EventuallyPeriodicWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic order on the infinite words.
impl Ord for EventuallyPeriodicWord {
    fn cmp(&self, other: &Self) -> Ordering {
        lex_compare(self, other)
    }
}

pub fn shift_word(w: &EventuallyPeriodicWord, n: usize) -> EventuallyPeriodicWord {
    w.shift(n)
}

/// Exact lexicographic comparison; terminates within
/// `max(preperiods) + lcm(periods)` letters.
pub fn lex_compare(x: &EventuallyPeriodicWord, y: &EventuallyPeriodicWord) -> Ordering {
    x.cmp_shifted(0, y, 0)
}

/// `D(x, y) = 2^(1 - m)` where `m` is the first (1-based) index of disagreement.
pub fn word_metric(x: &EventuallyPeriodicWord, y: &EventuallyPeriodicWord) -> f64 {
    match x.common_prefix_shifted(0, y, 0) {
        None => 0.0,
        Some(t) => 2f64.powi(-(t as i32)),
    }
}

pub fn complement(w: &EventuallyPeriodicWord) -> EventuallyPeriodicWord {
    w.complement()
}
