//! Assembly format for machine programs.
//!
//! One transition per line:
//!
//! ```text
//! # comment
//! @total-default
//! @id 3
//! STATE READTUPLE -> WRITETUPLE MOVE NEXT
//! ```
//!
//! Tuples are seven bits, one per tape in the order input, scratch, output,
//! index, param, ordinal, blank. MOVE is L, R, or S. The state names
//! `start`, `limit`, `halt`, `query`, `yes`, `no` are reserved: `halt` and
//! `query` own no transitions, and a call's answer returns control in `yes`
//! or `no`. Without the `@total-default` pragma every owned or referenced
//! state must cover all 128 read tuples.

use std::fmt::Write as _;

use thiserror::Error;

use crate::machine::{
    Move, Program, Transition, RESERVED_STATES, ST_HALT, ST_LIMIT, ST_QUERY, ST_START, TAPE_COUNT,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: bad tuple `{text}` (need {TAPE_COUNT} bits)")]
    BadTuple { line: usize, text: String },
    #[error("line {line}: malformed transition `{text}`")]
    BadSyntax { line: usize, text: String },
    #[error("line {line}: bad move `{text}` (need L, R, or S)")]
    BadMove { line: usize, text: String },
    #[error("line {line}: duplicate transition for ({state}, {tuple:07b}), first at line {first_line}")]
    DuplicateTransition {
        line: usize,
        first_line: usize,
        state: String,
        tuple: u8,
    },
    #[error("line {line}: state `{state}` cannot own transitions")]
    ReservedStateRow { line: usize, state: String },
    #[error("line {line}: unknown state `{state}` (never declared by a transition)")]
    UnknownState { line: usize, state: String },
    #[error("state `{state}` is not total: no transition for tuple {tuple:07b} (add rows or `@total-default`)")]
    NonTotal { state: String, tuple: u8 },
    #[error("line {line}: bad pragma `{text}`")]
    BadPragma { line: usize, text: String },
    #[error("line {line}: bad state name `{text}`")]
    BadStateName { line: usize, text: String },
}

fn parse_tuple(s: &str, line: usize) -> Result<u8, ParseError> {
    if s.len() != TAPE_COUNT || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(ParseError::BadTuple {
            line,
            text: s.to_string(),
        });
    }
    let mut v = 0u8;
    for (i, b) in s.bytes().enumerate() {
        if b == b'1' {
            v |= 1 << i;
        }
    }
    Ok(v)
}

fn tuple_text(t: u8) -> String {
    (0..TAPE_COUNT)
        .map(|i| if t & (1 << i) != 0 { '1' } else { '0' })
        .collect()
}

fn valid_state_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars().next().unwrap().is_ascii_alphabetic()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '(' || c == ')')
}

pub fn parse_program(src: &str, name: &str) -> Result<Program, ParseError> {
    let mut p = Program::new_shell(name);
    let mut row_lines: Vec<Vec<Option<usize>>> = p.rows.iter().map(|_| vec![None; 128]).collect();
    let mut referenced: Vec<(String, usize)> = Vec::new();

    for (idx, raw) in src.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if let Some(pragma) = text.strip_prefix('@') {
            if pragma == "total-default" {
                p.total_default = true;
            } else if let Some(id) = pragma.strip_prefix("id ") {
                let id: u64 = id.trim().parse().map_err(|_| ParseError::BadPragma {
                    line,
                    text: text.to_string(),
                })?;
                p.requested_id = Some(id);
            } else {
                return Err(ParseError::BadPragma {
                    line,
                    text: text.to_string(),
                });
            }
            continue;
        }
        let (lhs, rhs) = text.split_once("->").ok_or_else(|| ParseError::BadSyntax {
            line,
            text: text.to_string(),
        })?;
        let lhs: Vec<&str> = lhs.split_whitespace().collect();
        let rhs: Vec<&str> = rhs.split_whitespace().collect();
        let ([state_name, read], [write, mv, next_name]) = (lhs.as_slice(), rhs.as_slice()) else {
            return Err(ParseError::BadSyntax {
                line,
                text: text.to_string(),
            });
        };
        if !valid_state_name(state_name) {
            return Err(ParseError::BadStateName {
                line,
                text: state_name.to_string(),
            });
        }
        if !valid_state_name(next_name) {
            return Err(ParseError::BadStateName {
                line,
                text: next_name.to_string(),
            });
        }
        let state = p.intern_state(state_name);
        if state == ST_HALT || state == ST_QUERY {
            return Err(ParseError::ReservedStateRow {
                line,
                state: state_name.to_string(),
            });
        }
        let read = parse_tuple(read, line)?;
        let write = parse_tuple(write, line)?;
        let mv = match *mv {
            "L" => Move::L,
            "R" => Move::R,
            "S" => Move::S,
            other => {
                return Err(ParseError::BadMove {
                    line,
                    text: other.to_string(),
                })
            }
        };
        let next = p.intern_state(next_name);
        referenced.push((next_name.to_string(), line));
        while row_lines.len() < p.rows.len() {
            row_lines.push(vec![None; 128]);
        }
        if let Some(first_line) = row_lines[state][read as usize] {
            return Err(ParseError::DuplicateTransition {
                line,
                first_line,
                state: state_name.to_string(),
                tuple: read,
            });
        }
        row_lines[state][read as usize] = Some(line);
        p.set_row(state, read, Transition { write, mv, next });
    }

    // a referenced state must own rows, unless it is reserved or the
    // pragma's default loop covers it
    if !p.total_default {
        for (name, line) in &referenced {
            let idx = p.state_index(name).unwrap();
            let owns = p.rows[idx].iter().any(|r| r.is_some());
            let reserved = RESERVED_STATES.contains(&name.as_str());
            if !owns && !reserved {
                return Err(ParseError::UnknownState {
                    line: *line,
                    state: name.clone(),
                });
            }
        }
        // totality over every state that can hold control
        let answer_states_used = p
            .rows
            .iter()
            .flatten()
            .flatten()
            .any(|t| t.next == ST_QUERY);
        for state in 0..p.states.len() {
            if state == ST_HALT || state == ST_QUERY {
                continue;
            }
            let owns = p.rows[state].iter().any(|r| r.is_some());
            let required = owns
                || state == ST_START
                || state == ST_LIMIT
                || (answer_states_used
                    && (state == crate::machine::ST_YES || state == crate::machine::ST_NO));
            if !required {
                continue;
            }
            if let Some(tuple) = p.rows[state].iter().position(|r| r.is_none()) {
                return Err(ParseError::NonTotal {
                    state: p.states[state].clone(),
                    tuple: tuple as u8,
                });
            }
        }
    }
    Ok(p)
}

/// Canonical source for a program; `parse_program` of the result yields a
/// structurally equal program.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    if let Some(id) = p.requested_id {
        let _ = writeln!(out, "@id {id}");
    }
    if p.total_default {
        let _ = writeln!(out, "@total-default");
    }
    for (state, rows) in p.rows.iter().enumerate() {
        for (tuple, row) in rows.iter().enumerate() {
            if let Some(t) = row {
                let _ = writeln!(
                    out,
                    "{} {} -> {} {} {}",
                    p.states[state],
                    tuple_text(tuple as u8),
                    tuple_text(t.write),
                    t.mv,
                    p.states[t.next],
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALTER: &str = "\
@total-default
start 0000000 -> 0010000 R s1
s1 0000000 -> 0010000 R s2
s2 0000000 -> 0010000 S halt
";

    #[test]
    fn parses_a_halting_program() {
        let p = parse_program(HALTER, "halter").unwrap();
        assert!(p.total_default);
        assert_eq!(p.states.iter().filter(|s| s.starts_with('s')).count(), 3);
    }

    #[test]
    fn duplicate_rows_report_both_lines() {
        let src = "@total-default\nstart 0000000 -> 0000000 S halt\nstart 0000000 -> 0000000 S halt\n";
        match parse_program(src, "dup") {
            Err(ParseError::DuplicateTransition {
                line, first_line, ..
            }) => {
                assert_eq!((first_line, line), (2, 3));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_state_is_rejected() {
        let src = "start 0000000 -> 0000000 S nowhere\n";
        assert!(matches!(
            parse_program(src, "bad"),
            Err(ParseError::UnknownState { .. }) | Err(ParseError::NonTotal { .. })
        ));
    }

    #[test]
    fn non_total_without_pragma_is_rejected() {
        let src = "start 0000000 -> 0000000 S halt\n";
        assert!(matches!(
            parse_program(src, "partial"),
            Err(ParseError::NonTotal { .. })
        ));
    }

    #[test]
    fn reserved_states_own_no_rows() {
        for bad in ["halt", "query"] {
            let src = format!("@total-default\n{bad} 0000000 -> 0000000 S halt\n");
            assert!(matches!(
                parse_program(&src, "bad"),
                Err(ParseError::ReservedStateRow { .. })
            ));
        }
    }

    #[test]
    fn print_parse_round_trip() {
        let p = parse_program(HALTER, "halter").unwrap();
        let printed = print_program(&p);
        let q = parse_program(&printed, "halter").unwrap();
        assert_eq!(p, q);
    }
}
