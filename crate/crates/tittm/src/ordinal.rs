//! Cantor-normal-form ordinal arithmetic below ε₀.
//!
//! Ordinals serve as the simulator's transfinite clock and as the values
//! carried on the third (ordinal) oracle tape. The representation is the
//! usual normal form Σ ω^e·c with strictly decreasing exponents, capped at
//! nesting depth 16 and coefficients 2^32 so that every overflow is a
//! reportable `CapExceeded` instead of silent wraparound.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Exponent nesting permitted before `CapExceeded` (ω is depth 1, ω^ω depth 2, ...).
pub const MAX_EXPONENT_DEPTH: u32 = 16;
/// Largest coefficient permitted in a normal-form term.
pub const MAX_COEFFICIENT: u64 = 1 << 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("ordinal exceeds the representation cap: {0}")]
    CapExceeded(String),
    #[error("not a strict linear order: {0}")]
    NotALinearOrder(String),
    #[error("malformed ordinal literal: {0}")]
    BadLiteral(String),
}

/// An ordinal below ε₀ in Cantor normal form.
///
/// `terms` lists (exponent, coefficient) pairs with strictly decreasing
/// exponents and coefficients ≥ 1; the empty list is 0. Normal form is
/// unique, so derived structural equality coincides with ordinal equality,
/// and the derived lexicographic `Ord` coincides with the ordinal order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ordinal {
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Ordinal::from_nat(1).unwrap()
    }

    pub fn omega() -> Self {
        Ordinal {
            terms: vec![(Ordinal::one(), 1)],
        }
    }

    pub fn from_nat(n: u64) -> Result<Self, OrdinalError> {
        if n > MAX_COEFFICIENT {
            return Err(OrdinalError::CapExceeded(format!(
                "coefficient {n} > 2^32"
            )));
        }
        if n == 0 {
            Ok(Ordinal::zero())
        } else {
            Ok(Ordinal {
                terms: vec![(Ordinal::zero(), n)],
            })
        }
    }

    /// ω^e · c, checked against both caps.
    pub fn omega_pow(exponent: Ordinal, coefficient: u64) -> Result<Self, OrdinalError> {
        if coefficient == 0 {
            return Ok(Ordinal::zero());
        }
        if coefficient > MAX_COEFFICIENT {
            return Err(OrdinalError::CapExceeded(format!(
                "coefficient {coefficient} > 2^32"
            )));
        }
        let o = Ordinal {
            terms: vec![(exponent, coefficient)],
        };
        if o.depth() > MAX_EXPONENT_DEPTH {
            return Err(OrdinalError::CapExceeded(format!(
                "exponent nesting deeper than {MAX_EXPONENT_DEPTH}"
            )));
        }
        Ok(o)
    }

    /// Construct from a term list, validating the normal-form invariants.
    pub fn from_terms(terms: Vec<(Ordinal, u64)>) -> Result<Self, OrdinalError> {
        for window in terms.windows(2) {
            if window[0].0 <= window[1].0 {
                return Err(OrdinalError::BadLiteral(
                    "exponents not strictly decreasing".into(),
                ));
            }
        }
        for (_, c) in &terms {
            if *c == 0 {
                return Err(OrdinalError::BadLiteral("zero coefficient".into()));
            }
            if *c > MAX_COEFFICIENT {
                return Err(OrdinalError::CapExceeded(format!("coefficient {c} > 2^32")));
            }
        }
        let o = Ordinal { terms };
        if o.depth() > MAX_EXPONENT_DEPTH {
            return Err(OrdinalError::CapExceeded(format!(
                "exponent nesting deeper than {MAX_EXPONENT_DEPTH}"
            )));
        }
        Ok(o)
    }

    pub fn terms(&self) -> &[(Ordinal, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Some(n) iff the ordinal is the finite ordinal n.
    pub fn as_nat(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(e, c)] if e.is_zero() => Some(*c),
            _ => None,
        }
    }

    fn depth(&self) -> u32 {
        self.terms
            .iter()
            .map(|(e, _)| 1 + e.depth())
            .max()
            .unwrap_or(0)
    }
}

/// Ordinal addition in normal form. Low terms of `a` below the leading
/// exponent of `b` are absorbed; equal leading exponents merge coefficients.
pub fn ord_add(a: &Ordinal, b: &Ordinal) -> Result<Ordinal, OrdinalError> {
    if b.is_zero() {
        return Ok(a.clone());
    }
    let lead = &b.terms[0].0;
    let mut terms: Vec<(Ordinal, u64)> = a
        .terms
        .iter()
        .take_while(|(e, _)| e >= lead)
        .cloned()
        .collect();
    let mut rest = b.terms.iter();
    if let Some(last) = terms.last_mut() {
        if last.0 == *lead {
            let (_, c) = rest.next().unwrap();
            let sum = last
                .1
                .checked_add(*c)
                .filter(|s| *s <= MAX_COEFFICIENT)
                .ok_or_else(|| {
                    OrdinalError::CapExceeded(format!("coefficient {} + {c} > 2^32", last.1))
                })?;
            last.1 = sum;
        }
    }
    terms.extend(rest.cloned());
    Ok(Ordinal { terms })
}

/// Total comparison of normal forms (re-exported surface over `Ord`).
pub fn ord_cmp(a: &Ordinal, b: &Ordinal) -> Ordering {
    a.cmp(b)
}

// --- textual literals -------------------------------------------------------
//
// Grammar (strict: only normal forms are accepted):
//   ordinal := '0' | term ('+' term)*
//   term    := 'w' | 'w' '*' NAT | 'w' '^' factor | 'w' '^' factor '*' NAT | NAT
//   factor  := 'w' | 'w' '^' factor | NAT | '(' ordinal ')'
// '^' is right-associative: w^w^2 = w^(w^2). Exponents along a sum must be
// strictly decreasing, coefficients ≥ 1, and a bare NAT may only close a sum.

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, "+")?;
            }
            first = false;
            if e.is_zero() {
                write!(f, "{c}")?;
            } else {
                write!(f, "w")?;
                if *e != Ordinal::one() {
                    let bare = e.as_nat().is_some() || (e.terms.len() == 1 && e.terms[0].1 == 1);
                    if bare {
                        write!(f, "^{e}")?;
                    } else {
                        write!(f, "^({e})")?;
                    }
                }
                if *c != 1 {
                    write!(f, "*{c}")?;
                }
            }
        }
        Ok(())
    }
}

pub fn parse_ordinal(input: &str) -> Result<Ordinal, OrdinalError> {
    let mut p = LitParser {
        src: input.as_bytes(),
        pos: 0,
    };
    let o = p.ordinal()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(OrdinalError::BadLiteral(format!(
            "trailing input at byte {} of {input:?}",
            p.pos
        )));
    }
    Ok(o)
}

struct LitParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> LitParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nat(&mut self) -> Result<u64, OrdinalError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(OrdinalError::BadLiteral("expected a number".into()));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse::<u64>()
            .map_err(|_| OrdinalError::BadLiteral("number out of range".into()))
    }

    fn ordinal(&mut self) -> Result<Ordinal, OrdinalError> {
        let mut terms: Vec<(Ordinal, u64)> = Vec::new();
        loop {
            let (e, c) = self.term()?;
            if e.is_zero() && c == 0 {
                // a lone literal `0`
                if !terms.is_empty() {
                    return Err(OrdinalError::BadLiteral("`+0` is not normal form".into()));
                }
                return Ok(Ordinal::zero());
            }
            if let Some((prev, _)) = terms.last() {
                if *prev <= e {
                    return Err(OrdinalError::BadLiteral(
                        "exponents must strictly decrease".into(),
                    ));
                }
            }
            terms.push((e, c));
            if !self.eat(b'+') {
                break;
            }
        }
        Ordinal::from_terms(terms)
    }

    /// Returns (exponent, coefficient); the literal `0` comes back as (0, 0).
    fn term(&mut self) -> Result<(Ordinal, u64), OrdinalError> {
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                let e = if self.eat(b'^') {
                    self.factor()?
                } else {
                    Ordinal::one()
                };
                let c = if self.eat(b'*') {
                    let c = self.nat()?;
                    if c < 2 {
                        return Err(OrdinalError::BadLiteral(
                            "coefficient written explicitly must be ≥ 2".into(),
                        ));
                    }
                    c
                } else {
                    1
                };
                if e.is_zero() {
                    return Err(OrdinalError::BadLiteral(
                        "w^0 is not normal form; write the number itself".into(),
                    ));
                }
                Ok((e, c))
            }
            Some(d) if d.is_ascii_digit() => {
                let n = self.nat()?;
                Ok((Ordinal::zero(), n))
            }
            _ => Err(OrdinalError::BadLiteral("expected `w`, digit, or `0`".into())),
        }
    }

    fn factor(&mut self) -> Result<Ordinal, OrdinalError> {
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                if self.eat(b'^') {
                    let e = self.factor()?;
                    if e.is_zero() {
                        return Err(OrdinalError::BadLiteral("w^0 is not normal form".into()));
                    }
                    Ordinal::omega_pow(e, 1)
                } else {
                    Ok(Ordinal::omega())
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let o = self.ordinal()?;
                if !self.eat(b')') {
                    return Err(OrdinalError::BadLiteral("unclosed parenthesis".into()));
                }
                Ok(o)
            }
            Some(d) if d.is_ascii_digit() => {
                let n = self.nat()?;
                Ordinal::from_nat(n)
            }
            _ => Err(OrdinalError::BadLiteral("expected exponent".into())),
        }
    }
}

// --- bit-level CNF encoding --------------------------------------------------
//
// Prefix-free encoding of the term list, used for the oracle-ordinal tape:
// each term is `1`, the exponent's encoding, `1^c 0` (unary coefficient),
// and the list closes with `0`. Decoding is lenient about zero coefficients
// (the term is skipped) so that machines can compute successors by erasing
// unary marks; it stays strict about exponent order.

pub fn cnf_bits(o: &Ordinal) -> Vec<bool> {
    let mut out = Vec::new();
    push_cnf_bits(o, &mut out);
    out
}

fn push_cnf_bits(o: &Ordinal, out: &mut Vec<bool>) {
    for (e, c) in &o.terms {
        out.push(true);
        push_cnf_bits(e, out);
        for _ in 0..*c {
            out.push(true);
        }
        out.push(false);
    }
    out.push(false);
}

/// Decode a CNF bit stream. Consumes one complete encoding from the iterator;
/// `None` from the iterator mid-encoding is malformed.
pub fn cnf_from_bits(bits: &mut impl Iterator<Item = bool>) -> Result<Ordinal, OrdinalError> {
    cnf_from_bits_depth(bits, 0)
}

fn cnf_from_bits_depth(
    bits: &mut impl Iterator<Item = bool>,
    depth: u32,
) -> Result<Ordinal, OrdinalError> {
    if depth > MAX_EXPONENT_DEPTH {
        return Err(OrdinalError::CapExceeded(
            "exponent nesting too deep in bit encoding".into(),
        ));
    }
    let mut terms: Vec<(Ordinal, u64)> = Vec::new();
    loop {
        match bits.next() {
            Some(false) => break,
            Some(true) => {
                let e = cnf_from_bits_depth(bits, depth + 1)?;
                let mut c: u64 = 0;
                loop {
                    match bits.next() {
                        Some(true) => {
                            c += 1;
                            if c > MAX_COEFFICIENT {
                                return Err(OrdinalError::CapExceeded(
                                    "unary coefficient overflows 2^32".into(),
                                ));
                            }
                        }
                        Some(false) => break,
                        None => {
                            return Err(OrdinalError::BadLiteral(
                                "bit stream ended inside a coefficient".into(),
                            ))
                        }
                    }
                }
                if c == 0 {
                    continue; // erased term
                }
                if let Some((prev, _)) = terms.last() {
                    if *prev <= e {
                        return Err(OrdinalError::BadLiteral(
                            "bit encoding has non-decreasing exponents".into(),
                        ));
                    }
                }
                terms.push((e, c));
            }
            None => {
                return Err(OrdinalError::BadLiteral(
                    "bit stream ended inside a term list".into(),
                ))
            }
        }
    }
    Ordinal::from_terms(terms)
}

// --- codings of ordinals as finite orders ------------------------------------

/// A finite strict linear order on a finite set of natural-number labels.
///
/// `pairs` holds (m, n) meaning m precedes n; the relation must be the full
/// transitive order. Labels carry block denotations: an even label denotes a
/// single point, an odd label `2·pair(g,_)+1` denotes a copy of ω^(ordinal
/// with Gödel number g). The decoded ordinal is the order type of the
/// concatenation of blocks along the order, which lets a finite code denote
/// an infinite ordinal (an ω-block stands for a stream of points continuing
/// unboundedly past the materialized part).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalCode {
    pub domain: BTreeSet<u64>,
    pub pairs: BTreeSet<(u64, u64)>,
}

impl OrdinalCode {
    pub fn empty() -> Self {
        OrdinalCode {
            domain: BTreeSet::new(),
            pairs: BTreeSet::new(),
        }
    }

    /// Build from labels listed in order; stores the full transitive relation.
    pub fn from_sequence(labels: &[u64]) -> Self {
        let mut domain = BTreeSet::new();
        let mut pairs = BTreeSet::new();
        for (i, &m) in labels.iter().enumerate() {
            domain.insert(m);
            for &n in &labels[i + 1..] {
                pairs.insert((m, n));
            }
        }
        OrdinalCode { domain, pairs }
    }

    /// The natural order on 0..n.
    pub fn natural(n: u64) -> Self {
        let labels: Vec<u64> = (0..n).collect();
        OrdinalCode::from_sequence(&labels)
    }

    fn validate(&self) -> Result<Vec<u64>, OrdinalError> {
        for &(m, n) in &self.pairs {
            if m == n {
                return Err(OrdinalError::NotALinearOrder(format!("reflexive pair ({m},{m})")));
            }
            if !self.domain.contains(&m) || !self.domain.contains(&n) {
                return Err(OrdinalError::NotALinearOrder(format!(
                    "pair ({m},{n}) mentions labels outside the domain"
                )));
            }
        }
        let elems: Vec<u64> = self.domain.iter().copied().collect();
        for &m in &elems {
            for &n in &elems {
                if m == n {
                    continue;
                }
                let fwd = self.pairs.contains(&(m, n));
                let bwd = self.pairs.contains(&(n, m));
                if fwd == bwd {
                    return Err(OrdinalError::NotALinearOrder(format!(
                        "labels {m} and {n} are not comparable exactly once"
                    )));
                }
            }
        }
        for &(a, b) in &self.pairs {
            for &c in &elems {
                if self.pairs.contains(&(b, c)) && !self.pairs.contains(&(a, c)) {
                    return Err(OrdinalError::NotALinearOrder(format!(
                        "({a},{b}) and ({b},{c}) present without ({a},{c})"
                    )));
                }
            }
        }
        // sort by predecessor count, which the checks above make a bijection
        let mut ranked: Vec<(usize, u64)> = elems
            .iter()
            .map(|&m| {
                let rank = self.pairs.iter().filter(|&&(_, n)| n == m).count();
                (rank, m)
            })
            .collect();
        ranked.sort();
        Ok(ranked.into_iter().map(|(_, m)| m).collect())
    }
}

fn cantor_pair(a: u64, b: u64) -> Option<u64> {
    let s = (a as u128) + (b as u128);
    let v = s * (s + 1) / 2 + (b as u128);
    u64::try_from(v).ok()
}

/// Gödel number of an ordinal: binary digits `1` followed by the CNF bits.
fn goedel_of(o: &Ordinal) -> Option<u64> {
    let bits = cnf_bits(o);
    if bits.len() >= 63 {
        return None;
    }
    let mut n: u64 = 1;
    for b in bits {
        n = (n << 1) | (b as u64);
    }
    Some(n)
}

fn ordinal_of_goedel(g: u64) -> Ordinal {
    if g == 0 {
        return Ordinal::zero();
    }
    let width = 64 - g.leading_zeros();
    let mut bits = (0..width - 1)
        .rev()
        .map(move |i| (g >> i) & 1 == 1)
        .peekable();
    match cnf_from_bits(&mut bits) {
        Ok(o) if bits.peek().is_none() => o,
        _ => Ordinal::zero(), // malformed labels denote a single point
    }
}

/// The exponent a label denotes: even labels (and malformed odd labels)
/// denote 0, odd labels `2·pair(g, copy)+1` denote the ordinal with Gödel
/// number g.
pub fn label_exponent(label: u64) -> Ordinal {
    if label.is_multiple_of(2) {
        return Ordinal::zero();
    }
    let packed = (label - 1) / 2;
    // invert the Cantor pairing to recover the Gödel component
    let mut s: u64 = 0;
    while (s + 1) * (s + 2) / 2 <= packed {
        s += 1;
    }
    let b = packed - s * (s + 1) / 2;
    let g = s - b;
    ordinal_of_goedel(g)
}

/// The block an element label denotes: ω^(denoted exponent), so even labels
/// denote ω^0 = a single point.
pub fn label_block(label: u64) -> Ordinal {
    Ordinal::omega_pow(label_exponent(label), 1).unwrap_or_else(|_| Ordinal::one())
}

/// Label for one copy of the block ω^exp (odd labels carry the exponent).
pub fn block_label(exp: &Ordinal, copy: u64) -> Result<u64, OrdinalError> {
    let g = goedel_of(exp)
        .ok_or_else(|| OrdinalError::CapExceeded("exponent too large to label".into()))?;
    let packed = cantor_pair(g, copy)
        .ok_or_else(|| OrdinalError::CapExceeded("label overflows u64".into()))?;
    packed
        .checked_mul(2)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(|| OrdinalError::CapExceeded("label overflows u64".into()))
}

/// Encode an ordinal as a finite order with at most `cap` elements: one
/// element per unit coefficient, listed with exponents descending.
pub fn encode_ordinal(a: &Ordinal, cap: u64) -> Result<OrdinalCode, OrdinalError> {
    let size: u64 = a.terms.iter().map(|(_, c)| *c).sum();
    if size > cap {
        return Err(OrdinalError::CapExceeded(format!(
            "canonical code needs {size} elements, cap is {cap}"
        )));
    }
    let mut labels = Vec::with_capacity(size as usize);
    for (e, c) in &a.terms {
        for copy in 0..*c {
            labels.push(block_label(e, copy)?);
        }
    }
    Ok(OrdinalCode::from_sequence(&labels))
}

/// Order type of the coded order: the sum of the labels' blocks taken along
/// the coded precedence.
pub fn decode_ordinal(c: &OrdinalCode) -> Result<Ordinal, OrdinalError> {
    let sorted = c.validate()?;
    let mut acc = Ordinal::zero();
    for label in sorted {
        acc = ord_add(&acc, &label_block(label))?;
    }
    Ok(acc)
}

/// Decoded order types of all downward-closed prefixes, used when checking
/// monotonicity of sub-orders.
pub fn decode_prefixes(c: &OrdinalCode) -> Result<Vec<Ordinal>, OrdinalError> {
    let sorted = c.validate()?;
    let mut acc = Ordinal::zero();
    let mut out = vec![acc.clone()];
    for label in sorted {
        acc = ord_add(&acc, &label_block(label))?;
        out.push(acc.clone());
    }
    Ok(out)
}


/// Test-support: an independent ordinal-sum oracle kept free of the
/// `ord_add` code path so the two can cross-check each other.
#[doc(hidden)]
pub mod naive {
    use super::Ordinal;

    /// Sum Σ ω^(e_i) given the exponent sequence, by the absorption rule:
    /// ω^e survives iff no later exponent in the sequence is strictly larger.
    pub fn sum_of_powers(exponents: &[Ordinal]) -> Ordinal {
        let mut kept: Vec<Ordinal> = Vec::new();
        let mut max_later: Option<Ordinal> = None;
        for e in exponents.iter().rev() {
            if max_later.as_ref().is_none_or(|m| e >= m) {
                kept.push(e.clone());
            }
            if max_later.as_ref().is_none_or(|m| e > m) {
                max_later = Some(e.clone());
            }
        }
        kept.reverse();
        let mut terms: Vec<(Ordinal, u64)> = Vec::new();
        for e in kept {
            match terms.last_mut() {
                Some((pe, c)) if *pe == e => *c += 1,
                _ => terms.push((e, 1)),
            }
        }
        Ordinal::from_terms(terms).expect("naive sum stays within caps in tests")
    }
}
