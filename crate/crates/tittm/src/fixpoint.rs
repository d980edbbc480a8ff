//! The inductive semantics: a disjoint pair (↓, ↑) of computation calls
//! induces verdicts by running each machine with the pair as its oracle.
//! Calls outside the pair give the caller no answer, so that computation
//! contributes nothing this pass, which is what keeps the operator monotone.
//! Iterating from (∅, ∅) reaches the least fixed point, the conservative
//! feedback semantics.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::feedback::{eval_feedback_call, NodeLabel, Verdict};
use crate::frontend::store::ProgramStore;
use crate::machine::{run_with_tapes, OracleAnswer, OracleCall, StartTapes};
use crate::variants::Budgets;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixpointError {
    #[error("iteration budget exceeded after {0} applications without a fixed point")]
    IterationBudgetExceeded(u64),
}

/// Disjoint sets of calls deemed convergent (`down`) and divergent (`up`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OraclePair {
    pub down: BTreeSet<OracleCall>,
    pub up: BTreeSet<OracleCall>,
}

impl OraclePair {
    pub fn empty() -> Self {
        OraclePair::default()
    }

    pub fn is_disjoint(&self) -> bool {
        self.down.is_disjoint(&self.up)
    }

    pub fn contains(&self, call: &OracleCall) -> bool {
        self.down.contains(call) || self.up.contains(call)
    }

    pub fn subset_of(&self, other: &OraclePair) -> bool {
        self.down.is_subset(&other.down) && self.up.is_subset(&other.up)
    }

    pub fn len(&self) -> usize {
        self.down.len() + self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.down.is_empty() && self.up.is_empty()
    }
}

/// Evaluate one call with the pair as the oracle. Undecided calls abort the
/// pass for this computation (it is frozen relative to the pair).
pub fn eval_against_pair(
    store: &ProgramStore,
    call: &OracleCall,
    pair: &OraclePair,
    budgets: &Budgets,
) -> Verdict {
    let program = match store.get(call.index) {
        Some(p) => p,
        None => {
            return Verdict::Unknown {
                reason: crate::machine::UnknownReason::Fault(
                    crate::machine::FaultKind::UndecodableOracleTape,
                ),
                detail: Some(format!("no program with index {}", call.index)),
            }
        }
    };
    let extra = StartTapes {
        param: None,
        ordinal: call.ordinal.clone(),
        blank: Some(call.blank.clone()),
    };
    let mut answer = |c: &OracleCall| {
        if pair.down.contains(c) {
            OracleAnswer::Converges
        } else if pair.up.contains(c) {
            OracleAnswer::Diverges
        } else {
            OracleAnswer::Unknown
        }
    };
    run_with_tapes(program, &call.param, &extra, budgets, &mut answer).0
}

/// One application of the operator over a finite universe of calls. The
/// output is taken jointly with the input, so iteration is inflationary.
pub fn apply_operator(
    store: &ProgramStore,
    pair: &OraclePair,
    universe: &BTreeSet<OracleCall>,
    budgets: &Budgets,
) -> OraclePair {
    debug_assert!(pair.is_disjoint());
    let mut next = pair.clone();
    for call in universe {
        if pair.contains(call) {
            continue;
        }
        match eval_against_pair(store, call, pair, budgets) {
            Verdict::Converges(_) => {
                next.down.insert(call.clone());
            }
            Verdict::Diverges => {
                next.up.insert(call.clone());
            }
            _ => {}
        }
    }
    debug_assert!(next.is_disjoint());
    next
}

/// Least fixed point of the operator over the universe, with the number of
/// applications performed. Stabilizes within |universe| + 1 applications
/// because every non-fixed application adds at least one call.
pub fn lfp(
    store: &ProgramStore,
    universe: &BTreeSet<OracleCall>,
    budgets: &Budgets,
) -> Result<(OraclePair, u64), FixpointError> {
    let mut pair = OraclePair::empty();
    for iter in 1..=budgets.max_lfp_iters {
        let next = apply_operator(store, &pair, universe, budgets);
        if next == pair {
            return Ok((pair, iter));
        }
        pair = next;
    }
    Err(FixpointError::IterationBudgetExceeded(budgets.max_lfp_iters))
}

/// Where a call landed in a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallFate {
    Down,
    Up,
    Undecided,
}

impl CallFate {
    pub fn name(self) -> &'static str {
        match self {
            CallFate::Down => "down",
            CallFate::Up => "up",
            CallFate::Undecided => "undecided",
        }
    }
}

pub fn fate_of(pair: &OraclePair, call: &OracleCall) -> CallFate {
    if pair.down.contains(call) {
        CallFate::Down
    } else if pair.up.contains(call) {
        CallFate::Up
    } else {
        CallFate::Undecided
    }
}

/// Close a seed set of calls under the calls their feedback evaluations
/// actually make (dynamic discovery), capped. Static inspection cannot
/// enumerate call targets because indices are data written at run time, so
/// the closure is grown from materialized subcomputation trees.
pub fn call_closure(
    store: &ProgramStore,
    seeds: &BTreeSet<OracleCall>,
    budgets: &Budgets,
    cap: usize,
) -> BTreeSet<OracleCall> {
    let mut universe: BTreeSet<OracleCall> = seeds.clone();
    let mut frontier: Vec<OracleCall> = seeds.iter().cloned().collect();
    while let Some(call) = frontier.pop() {
        if universe.len() >= cap {
            break;
        }
        let (_, tree) = eval_feedback_call(store, &call, budgets, &[]);
        for node in &tree.nodes {
            if let NodeLabel::Call(c) = &node.label {
                if !universe.contains(c) && universe.len() < cap {
                    universe.insert(c.clone());
                    frontier.push(c.clone());
                }
            }
        }
    }
    universe
}
