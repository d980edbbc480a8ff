//! Oracle-discipline variants: the strong jump (depth 1), ordinal-bounded
//! and iterated machines, parallel oracle calls, and the converge/diverge
//! interchange gadget.

use crate::feedback::{
    eval_feedback_call, Evaluator, NodeLabel, Policy, SubTree, Verdict,
};
use crate::frontend::store::{ProgramStore, StoreError};
use crate::machine::{
    encode_natural_tape, FaultKind, Move, OracleCall, Program, Transition, UnknownReason,
    ST_HALT, ST_NO, ST_QUERY, ST_START, ST_YES,
};
use crate::machine::TapeRole::{Input, OracleBlank, OracleIndex, OracleParam};
use crate::ordinal::{parse_ordinal, Ordinal};
use crate::tape::TapeRep;

/// Explicit budgets that turn the non-computable semantics into an honest
/// approximation: exhausting any of them yields Unknown, never a guess.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budgets {
    pub max_steps_per_block: u64,
    pub max_limit_stages: u64,
    pub max_depth: u64,
    pub clock_cap: Ordinal,
    pub max_parallel: u64,
    pub max_lfp_iters: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_steps_per_block: 4096,
            max_limit_stages: 64,
            max_depth: 16,
            clock_cap: parse_ordinal("w^3").unwrap(),
            max_parallel: 16,
            max_lfp_iters: 64,
        }
    }
}

impl Budgets {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_steps_per_block == 0
            || self.max_limit_stages == 0
            || self.max_depth == 0
            || self.max_parallel == 0
            || self.max_lfp_iters == 0
            || self.clock_cap.is_zero()
        {
            return Err("all budgets must be positive".into());
        }
        Ok(())
    }

    /// Shrunken budgets for dovetailed deepening, tier 0 the smallest;
    /// `tier == tiers-1` returns the full budgets.
    pub fn tier(&self, tier: u32, tiers: u32) -> Budgets {
        assert!(tier < tiers);
        let shrink = 1u64 << (2 * (tiers - 1 - tier).min(31));
        Budgets {
            max_steps_per_block: (self.max_steps_per_block / shrink).max(64),
            max_limit_stages: (self.max_limit_stages / shrink).max(2),
            max_depth: self.max_depth,
            clock_cap: self.clock_cap.clone(),
            max_parallel: self.max_parallel,
            max_lfp_iters: self.max_lfp_iters,
        }
    }
}

// --- strong jump -----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpResult {
    In,
    Out,
    Unknown,
}

impl JumpResult {
    pub fn name(self) -> &'static str {
        match self {
            JumpResult::In => "in",
            JumpResult::Out => "out",
            JumpResult::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StrongJump {
    pub result: JumpResult,
    pub verdict: Verdict,
    pub tree: SubTree,
    /// Set when a depth-1 child attempted an oracle call.
    pub depth_violation: Option<String>,
}

/// Membership of (e, x) in the strong jump: the pair is in iff the depth-1
/// evaluation converges, out iff it diverges. The jump query computation may
/// itself call the oracle, but those children run as plain machines — a
/// child entering the query state is ill-formed at this depth.
pub fn strong_jump(store: &ProgramStore, e: u64, x: &TapeRep, budgets: &Budgets) -> StrongJump {
    let call = OracleCall::plain(e, x.clone());
    let root = NodeLabel::Root {
        program: e,
        input: x.clone(),
    };
    let mut ev = Evaluator::new(store, budgets, root);
    let mut chain = vec![call.clone()];
    let verdict = ev.eval_node(0, &call, &mut chain, &Policy::DepthOne { at_child: false });
    let (result, depth_violation) = match &verdict {
        Verdict::Converges(_) => (JumpResult::In, None),
        Verdict::Diverges => (JumpResult::Out, None),
        Verdict::Unknown {
            reason: UnknownReason::Fault(FaultKind::DepthViolation),
            detail,
        } => (JumpResult::Unknown, detail.clone()),
        _ => (JumpResult::Unknown, None),
    };
    StrongJump {
        result,
        verdict,
        tree: ev.tree,
        depth_violation,
    }
}

// --- ordinal oracle machines --------------------------------------------------------

/// Run under the ordinal discipline: the machine carries α on its third
/// tape, and every oracle call must write some β < α, which becomes the
/// child's ordinal. Well-foundedness makes freezing unreachable.
pub fn ordinal_oracle_run(
    store: &ProgramStore,
    e: u64,
    alpha: &Ordinal,
    x: &TapeRep,
    y: &TapeRep,
    budgets: &Budgets,
) -> (Verdict, SubTree) {
    let call = OracleCall::plain(e, x.clone());
    let root = NodeLabel::Root {
        program: e,
        input: x.clone(),
    };
    let mut ev = Evaluator::new(store, budgets, root);
    let mut chain = vec![call.clone()];
    let verdict = ev.eval_node_with_param(
        0,
        &call,
        Some(y),
        &mut chain,
        &Policy::Ordinal {
            alpha: Some(alpha.clone()),
        },
    );
    debug_assert!(
        !matches!(verdict, Verdict::Freezes(_)),
        "ordinal discipline produced a freeze"
    );
    (verdict, ev.tree)
}

/// Iterated machine: the root may launch ordinal oracle children with any
/// ordinal it manages to write; below the root the β < α discipline applies.
pub fn iitm_run(
    store: &ProgramStore,
    e: u64,
    x: &TapeRep,
    budgets: &Budgets,
) -> (Verdict, SubTree) {
    let call = OracleCall::plain(e, x.clone());
    let root = NodeLabel::Root {
        program: e,
        input: x.clone(),
    };
    let mut ev = Evaluator::new(store, budgets, root);
    let mut chain = vec![call.clone()];
    let verdict = ev.eval_node(0, &call, &mut chain, &Policy::Ordinal { alpha: None });
    (verdict, ev.tree)
}

// --- parallel oracle calls ------------------------------------------------------------

/// Outcome of a parallel call: `yes` carries the least witness under the
/// dovetail order; `no` is always budget-relative because only finitely many
/// strings were examined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParallelVerdict {
    Yes { witness: u64 },
    No { budget_relative: bool },
    Freezes { witness: u64 },
    Unknown,
}

impl ParallelVerdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            ParallelVerdict::Yes { .. } => 0,
            ParallelVerdict::No { .. } => 1,
            ParallelVerdict::Freezes { .. } => 2,
            ParallelVerdict::Unknown => 3,
        }
    }
}

const PARALLEL_TIERS: u32 = 3;

/// Substitute every integer n < max_parallel on the blank tape and dovetail
/// instance evaluations across budget tiers, so a convergent instance is
/// found even when lower-numbered instances freeze or diverge slowly.
/// Convergence wins; freezing is reported only when every non-frozen
/// instance is certified divergent.
pub fn parallel_call(
    store: &ProgramStore,
    e: u64,
    param: &TapeRep,
    budgets: &Budgets,
) -> ParallelVerdict {
    let n_instances = budgets.max_parallel;
    let mut decided: Vec<Option<Verdict>> = vec![None; n_instances as usize];
    for tier in 0..PARALLEL_TIERS {
        let tier_budgets = budgets.tier(tier, PARALLEL_TIERS);
        for n in 0..n_instances {
            if decided[n as usize].is_some() {
                continue;
            }
            let mut call = OracleCall::plain(e, param.clone());
            call.blank = encode_natural_tape(n);
            let (verdict, _tree) = eval_feedback_call(store, &call, &tier_budgets, &[]);
            match verdict {
                Verdict::Converges(_) => return ParallelVerdict::Yes { witness: n },
                v @ (Verdict::Diverges | Verdict::Freezes(_)) => {
                    decided[n as usize] = Some(v);
                }
                Verdict::Unknown { .. } => {}
            }
        }
    }
    let mut frozen: Option<u64> = None;
    let mut all_resolved = true;
    for (n, d) in decided.iter().enumerate() {
        match d {
            Some(Verdict::Freezes(_)) => {
                if frozen.is_none() {
                    frozen = Some(n as u64);
                }
            }
            Some(Verdict::Diverges) => {}
            _ => all_resolved = false,
        }
    }
    match (frozen, all_resolved) {
        (_, false) => ParallelVerdict::Unknown,
        (Some(w), true) => ParallelVerdict::Freezes { witness: w },
        (None, true) => ParallelVerdict::No {
            budget_relative: true,
        },
    }
}

// --- the converge/diverge interchange gadget ----------------------------------------------

const T_INPUT: u8 = 1 << (Input as usize);
const T_PARAM: u8 = 1 << (OracleParam as usize);
const T_INDEX: u8 = 1 << (OracleIndex as usize);
const T_BLANK: u8 = 1 << (OracleBlank as usize);

/// Synthesize the interchange gadget for program `e`: query (e, own input) once, then
/// diverge on the answer "convergent" and halt on "divergent". If e freezes,
/// so does the gadget, by propagation.
///
/// The input is forwarded to the parameter tape by a copy loop that stops at
/// the first 0 cell, so inputs are taken in unary; the shipped corpus only
/// flips programs on the empty input.
pub fn build_flip_program(store: &mut ProgramStore, e: u64) -> Result<u64, StoreError> {
    let target = store.get(e).ok_or(StoreError::UnknownProgram(e))?;
    let name = format!("flip({})", target.name);
    let mut p = Program::new_shell(&name);
    p.total_default = true; // unlisted situations idle, which certifies divergence

    let digits: Vec<bool> = {
        let mut v = Vec::new();
        if e > 0 {
            let width = 64 - e.leading_zeros();
            for i in (0..width).rev() {
                v.push(true);
                v.push((e >> i) & 1 == 1);
            }
        }
        v
    };

    let copy = p.intern_state("copy");
    let back = p.intern_state("back");
    let writers: Vec<usize> = (0..digits.len())
        .map(|i| p.intern_state(&format!("w{i}")))
        .collect();
    let first_write = *writers.first().unwrap_or(&ST_QUERY);

    // start: plant the cell-0 sentinel on the blank track and copy cell 0
    for b in [false, true] {
        let read = if b { T_INPUT } else { 0 };
        let write = read | T_BLANK | if b { T_PARAM } else { 0 };
        let (mv, next) = if b { (Move::R, copy) } else { (Move::S, first_write) };
        p.set_row(ST_START, read, Transition { write, mv, next });
    }
    // copy: forward input cells to the parameter tape until the first 0
    for b in [false, true] {
        let read = if b { T_INPUT } else { 0 };
        if b {
            p.set_row(copy, read, Transition { write: read | T_PARAM, mv: Move::R, next: copy });
        } else {
            p.set_row(copy, read, Transition { write: read, mv: Move::L, next: back });
        }
    }
    // back: return to the sentinel cell
    for tuple in 0u8..128 {
        if tuple & T_BLANK == 0 {
            p.set_row(back, tuple, Transition { write: tuple, mv: Move::L, next: back });
        } else {
            p.set_row(back, tuple, Transition { write: tuple, mv: Move::S, next: first_write });
        }
    }
    // w_i: spell the index digits of e, echoing everything else
    for (i, &w) in writers.iter().enumerate() {
        let bit = digits[i];
        let last = i + 1 == writers.len();
        let (mv, next) = if last {
            (Move::S, ST_QUERY)
        } else {
            (Move::R, writers[i + 1])
        };
        for tuple in 0u8..128 {
            let write = if bit { tuple | T_INDEX } else { tuple & !T_INDEX };
            p.set_row(w, tuple, Transition { write, mv, next });
        }
    }
    // answers: "convergent" never gets a row, so the default idles into a
    // certified loop; "divergent" halts
    for tuple in 0u8..128 {
        p.set_row(ST_NO, tuple, Transition { write: tuple, mv: Move::S, next: ST_HALT });
    }
    let _ = ST_YES;

    store.add_program(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::eval_feedback;
    use crate::ordinal::parse_ordinal;

    const HALTER: &str = "@id 0\n@total-default\n\
        start 0000000 -> 0010000 R a\n\
        start 0000010 -> 0010010 R a\n\
        a 0000000 -> 0010000 R b\n\
        a 0000010 -> 0010010 R b\n\
        b 0000000 -> 0010000 S halt\n\
        b 0000010 -> 0010010 S halt\n";
    const IDLER: &str = "@id 1\n@total-default\nstart 0000000 -> 0000000 S spin\n";
    // writes its own index (digit pairs 11 10) and queries itself
    const SELF_CALLER: &str = "@id 2\n@total-default\n\
        start 0000000 -> 0001000 R s1\n\
        s1 0000000 -> 0001000 R s2\n\
        s2 0000000 -> 0001000 S query\n";
    // queries program 0 (blank index tape) and halts on "convergent"
    const ASKER: &str = "@id 3\n@total-default\n\
        start 0000000 -> 0000000 S query\n\
        yes 0000000 -> 0000000 S halt\n";
    // halts exactly when the blank tape spells 2 (pairs 11 10)
    const FAMILY: &str = "@id 4\n@total-default\n\
        start 0000001 -> 0000001 R p1\n\
        p1 0000001 -> 0000001 R p2\n\
        p2 0000001 -> 0000001 R p3\n\
        p3 0000000 -> 0000000 S halt\n";

    fn store() -> ProgramStore {
        let mut s = ProgramStore::new();
        for (src, name) in [
            (HALTER, "halter"),
            (IDLER, "idler"),
            (SELF_CALLER, "self_caller"),
            (ASKER, "asker"),
            (FAMILY, "family"),
        ] {
            s.add_source(src, name).unwrap();
        }
        s
    }

    #[test]
    fn strong_jump_in_and_out() {
        let s = store();
        let b = Budgets::default();
        assert_eq!(strong_jump(&s, 0, &TapeRep::empty(), &b).result, JumpResult::In);
        assert_eq!(strong_jump(&s, 1, &TapeRep::empty(), &b).result, JumpResult::Out);
        // the root may call; its children may not
        assert_eq!(strong_jump(&s, 3, &TapeRep::empty(), &b).result, JumpResult::In);
        let j = strong_jump(&s, 2, &TapeRep::empty(), &b);
        assert_eq!(j.result, JumpResult::Unknown);
        assert!(j.depth_violation.is_some());
    }

    #[test]
    fn ordinal_alpha_one_matches_strong_jump_on_plain_pairs() {
        let s = store();
        let b = Budgets::default();
        let one = Ordinal::one();
        for id in [0u64, 1, 3] {
            let jump = strong_jump(&s, id, &TapeRep::empty(), &b).result;
            let (v, _) =
                ordinal_oracle_run(&s, id, &one, &TapeRep::empty(), &TapeRep::empty(), &b);
            let as_jump = match v {
                Verdict::Converges(_) => JumpResult::In,
                Verdict::Diverges => JumpResult::Out,
                _ => JumpResult::Unknown,
            };
            assert_eq!(jump, as_jump, "pair ({id}, empty)");
        }
    }

    #[test]
    fn ordinal_discipline_never_freezes() {
        let s = store();
        let b = Budgets::default();
        for id in 0..5u64 {
            let (v, _) = ordinal_oracle_run(
                &s,
                id,
                &parse_ordinal("w").unwrap(),
                &TapeRep::empty(),
                &TapeRep::empty(),
                &b,
            );
            assert!(!matches!(v, Verdict::Freezes(_)), "program {id} froze");
        }
        // the depth-0 self-call is an ordinal violation, not a freeze
        let (v, _) = ordinal_oracle_run(
            &s,
            2,
            &Ordinal::zero(),
            &TapeRep::empty(),
            &TapeRep::empty(),
            &b,
        );
        assert!(matches!(
            v,
            Verdict::Unknown {
                reason: UnknownReason::Fault(FaultKind::OrdinalViolation),
                ..
            }
        ));
    }

    #[test]
    fn iitm_without_calls_matches_plain_run() {
        let s = store();
        let b = Budgets::default();
        for id in [0u64, 1] {
            let (plain, _) = (eval_feedback(&s, id, &TapeRep::empty(), &b), ());
            let (iitm, _) = iitm_run(&s, id, &TapeRep::empty(), &b);
            assert_eq!(plain.0, iitm);
        }
    }

    #[test]
    fn parallel_family_finds_the_witness() {
        let s = store();
        let b = Budgets::default();
        match parallel_call(&s, 4, &TapeRep::empty(), &b) {
            ParallelVerdict::Yes { witness } => assert_eq!(witness, 2),
            other => panic!("expected yes(2), got {other:?}"),
        }
    }

    #[test]
    fn parallel_all_divergent_is_budget_relative_no() {
        let s = store();
        let b = Budgets::default();
        assert_eq!(
            parallel_call(&s, 1, &TapeRep::empty(), &b),
            ParallelVerdict::No {
                budget_relative: true
            }
        );
    }

    #[test]
    fn flip_triple() {
        let mut s = store();
        let b = Budgets::default();
        let flip_h = build_flip_program(&mut s, 0).unwrap();
        let flip_d = build_flip_program(&mut s, 1).unwrap();
        let flip_s = build_flip_program(&mut s, 2).unwrap();
        assert_eq!(eval_feedback(&s, flip_h, &TapeRep::empty(), &b).0, Verdict::Diverges);
        assert!(matches!(
            eval_feedback(&s, flip_d, &TapeRep::empty(), &b).0,
            Verdict::Converges(_)
        ));
        assert!(matches!(
            eval_feedback(&s, flip_s, &TapeRep::empty(), &b).0,
            Verdict::Freezes(_)
        ));
    }

    #[test]
    fn flip_forwards_its_input_as_the_parameter() {
        use crate::feedback::NodeLabel;
        let mut s = store();
        let b = Budgets::default();
        let f = build_flip_program(&mut s, 0).unwrap();
        let input = TapeRep::from_bits(&[true, true, true]);
        let (v, tree) = eval_feedback(&s, f, &input, &b);
        // the halter only covers blank-tape tuples, so on this input it
        // idles and diverges, and the gadget therefore halts
        assert!(matches!(v, Verdict::Converges(_)));
        let NodeLabel::Call(call) = &tree.nodes[1].label else {
            panic!("expected a child call");
        };
        assert_eq!(call.index, 0);
        assert_eq!(call.param, input, "the copy loop forwards the unary input");
        assert_eq!(tree.nodes[1].status, crate::feedback::NodeStatus::Diverged);
    }

    #[test]
    fn double_flip_preserves_the_verdict_class() {
        let mut s = store();
        let b = Budgets::default();
        for id in 0..2u64 {
            let (base, _) = eval_feedback(&s, id, &TapeRep::empty(), &b);
            let f = build_flip_program(&mut s, id).unwrap();
            let ff = build_flip_program(&mut s, f).unwrap();
            let (twice, _) = eval_feedback(&s, ff, &TapeRep::empty(), &b);
            assert_eq!(base.class_name(), twice.class_name(), "program {id}");
        }
    }

    #[test]
    fn budget_tiers_shrink_and_recover() {
        let b = Budgets::default();
        let t0 = b.tier(0, 3);
        assert!(t0.max_steps_per_block < b.max_steps_per_block);
        assert_eq!(b.tier(2, 3), b);
    }
}
