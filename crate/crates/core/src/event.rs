//! Events as subsets of terminal partitions, and a small expression language
//! for building them: `a~b`, `a≁b` (or `a!~b`), `a~b~c`, combined with
//! `AND`/`&&`, `OR`/`||`, `NOT`/`!` and parentheses.

use std::ops::{BitAnd, BitOr, Not};

use crate::error::{Error, Result};
use crate::partition::PartitionSet;

/// A set of partition indices. Capacity covers Bell(6) = 203.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventSet {
    len: usize,
    words: [u64; 4],
}

impl EventSet {
    pub fn empty(len: usize) -> Self {
        assert!(len <= 256);
        Self { len, words: [0; 4] }
    }

    pub fn full(len: usize) -> Self {
        !Self::empty(len)
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut e = Self::empty(len);
        for i in idx {
            e.insert(i);
        }
        e
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> bool) -> Self {
        Self::from_indices(len, (0..len).filter(|&i| f(i)))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.contains(i))
    }

    fn mask_tail(mut self) -> Self {
        for (w, word) in self.words.iter_mut().enumerate() {
            let lo = w * 64;
            if self.len <= lo {
                *word = 0;
            } else if self.len < lo + 64 {
                *word &= (1u64 << (self.len - lo)) - 1;
            }
        }
        self
    }
}

impl BitOr for EventSet {
    type Output = Self;
    fn bitor(mut self, rhs: Self) -> Self {
        assert_eq!(self.len, rhs.len);
        for i in 0..4 {
            self.words[i] |= rhs.words[i];
        }
        self
    }
}

impl BitAnd for EventSet {
    type Output = Self;
    fn bitand(mut self, rhs: Self) -> Self {
        assert_eq!(self.len, rhs.len);
        for i in 0..4 {
            self.words[i] &= rhs.words[i];
        }
        self
    }
}

impl Not for EventSet {
    type Output = Self;
    fn not(mut self) -> Self {
        for w in &mut self.words {
            *w = !*w;
        }
        self.mask_tail()
    }
}

/// All partitions in which the listed terminals share one block.
pub fn together(ps: &PartitionSet, terms: &[usize]) -> EventSet {
    EventSet::from_fn(ps.len(), |i| terms.windows(2).all(|w| ps.together(i, w[0], w[1])))
}

/// All partitions in which `x` and `y` are in different blocks.
pub fn separate(ps: &PartitionSet, x: usize, y: usize) -> EventSet {
    !together(ps, &[x, y])
}

/// Parses an event expression over the named terminals.
pub fn event(ps: &PartitionSet, names: &[String], expr: &str) -> Result<EventSet> {
    let tokens = lex(expr)?;
    let mut p = Parser { ps, names, tokens, pos: 0 };
    let e = p.or()?;
    if let Some((off, t)) = p.tokens.get(p.pos) {
        return Err(Error::EventSyntax { offset: *off, msg: format!("unexpected {t:?}") });
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Together,
    Apart,
    And,
    Or,
    Not,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut it = s.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '~' => {
                it.next();
                out.push((i, Tok::Together));
            }
            '≁' => {
                it.next();
                out.push((i, Tok::Apart));
            }
            '(' => {
                it.next();
                out.push((i, Tok::LParen));
            }
            ')' => {
                it.next();
                out.push((i, Tok::RParen));
            }
            '!' => {
                it.next();
                if matches!(it.peek(), Some((_, '~'))) {
                    it.next();
                    out.push((i, Tok::Apart));
                } else {
                    out.push((i, Tok::Not));
                }
            }
            '&' | '|' => {
                it.next();
                if matches!(it.peek(), Some((_, d)) if *d == c) {
                    it.next();
                }
                out.push((i, if c == '&' { Tok::And } else { Tok::Or }));
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut w = String::new();
                while let Some(&(_, d)) = it.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        w.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                let tok = match w.as_str() {
                    "AND" | "and" => Tok::And,
                    "OR" | "or" => Tok::Or,
                    "NOT" | "not" => Tok::Not,
                    _ => Tok::Name(w),
                };
                out.push((i, tok));
            }
            other => {
                return Err(Error::EventSyntax { offset: i, msg: format!("unexpected character {other:?}") });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    ps: &'a PartitionSet,
    names: &'a [String],
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(usize::MAX, |(o, _)| *o)
    }

    fn or(&mut self) -> Result<EventSet> {
        let mut e = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            e = e | self.and()?;
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<EventSet> {
        let mut e = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            e = e & self.unary()?;
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<EventSet> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(!self.unary()?)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(Error::EventSyntax { offset: self.offset(), msg: "expected ')'".into() });
                }
                self.pos += 1;
                Ok(e)
            }
            _ => self.atom(),
        }
    }

    fn name(&mut self) -> Result<usize> {
        let off = self.offset();
        match self.peek().cloned() {
            Some(Tok::Name(n)) => {
                self.pos += 1;
                self.names.iter().position(|m| *m == n).ok_or(Error::UnknownTerminal(n))
            }
            _ => Err(Error::EventSyntax { offset: off, msg: "expected a terminal name".into() }),
        }
    }

    fn atom(&mut self) -> Result<EventSet> {
        let first = self.name()?;
        match self.peek() {
            Some(Tok::Together) => {
                let mut chain = vec![first];
                while self.peek() == Some(&Tok::Together) {
                    self.pos += 1;
                    chain.push(self.name()?);
                }
                Ok(together(self.ps, &chain))
            }
            Some(Tok::Apart) => {
                self.pos += 1;
                let second = self.name()?;
                Ok(separate(self.ps, first, second))
            }
            _ => Err(Error::EventSyntax { offset: self.offset(), msg: "expected '~' or '≁'".into() }),
        }
    }
}
