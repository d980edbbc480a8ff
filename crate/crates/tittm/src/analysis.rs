//! Constructive analysis of certified loops: the first looping snapshot, the
//! bounded/cofinal classification of cells, a writer that marks an unbounded
//! stage sequence inside one loop and returns it as an ordinal code, and the
//! transform that turns an eventually-stable output into a halting one by
//! asking, at each output change, whether the output will ever change again.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frontend::store::{ProgramStore, StoreError};
use crate::machine::{
    certified_divergence, step_config, Config, ConfigStep, Move, NodeOutcome, Program, Snapshot,
    Transition, ST_HALT, ST_LIMIT, ST_NO, ST_QUERY, ST_START, ST_YES, TAPE_COUNT,
};
use crate::machine::TapeRole::{Input, OracleBlank, OracleIndex, OracleOrdinal, OracleParam, Output};
use crate::ordinal::{block_label, ord_add, Ordinal, OrdinalCode};
use crate::tape::TapeRep;
use crate::variants::Budgets;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("not certified divergent: {0}")]
    NotCertifiedDivergent(String),
    #[error("no program with id {0}")]
    UnknownProgram(u64),
    #[error("unsupported program: {0}")]
    UnsupportedProgram(String),
    #[error("store error: {0}")]
    Store(#[from] StoreError),
}

/// A certified loop: from `entry` the run provably re-enters `entry` at the
/// next limit stage, `reappearance = entry.clock + ω`. The cycle data gives
/// the successor-step structure inside the loop; `stage_order` assigns
/// integers, in order, to the first stages past entry.
#[derive(Debug, Clone)]
pub struct LoopCertificate {
    pub entry: Snapshot,
    pub period: u64,
    pub shift: i64,
    pub reappearance: Ordinal,
    pub stage_order: OrdinalCode,
}

/// The earliest snapshot satisfying the guarantee condition: the limit of
/// its own cycle equals it. A snapshot that merely recurs does not qualify,
/// because the limit of its recurrences may escape the loop.
pub fn first_looping_snapshot(
    p: &Program,
    input: &TapeRep,
    budgets: &Budgets,
) -> Result<LoopCertificate, AnalysisError> {
    let cert = certified_divergence(p, input, budgets).map_err(|outcome| {
        let what = match outcome {
            NodeOutcome::Converged { .. } => "the run halts".to_string(),
            NodeOutcome::Unknown { reason, .. } => {
                format!("verdict unknown ({})", reason.tag())
            }
            NodeOutcome::Diverged { .. } => unreachable!(),
        };
        AnalysisError::NotCertifiedDivergent(what)
    })?;
    let reappearance = ord_add(&cert.entry.clock, &Ordinal::omega())
        .map_err(|e| AnalysisError::NotCertifiedDivergent(e.to_string()))?;
    let marks: Vec<u64> = (0..cert.period.min(64)).map(|t| 2 * t).collect();
    Ok(LoopCertificate {
        entry: cert.entry,
        period: cert.period,
        shift: cert.shift,
        reappearance,
        stage_order: OrdinalCode::from_sequence(&marks),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellTag {
    Bounded,
    Cofinal,
}

/// Per-cell classification over one loop, for the cells that change at all.
/// `tags` comes from direct change counting (the ground truth); `shadow` is
/// the toggle-trick shadow read off at the limit, which records change parity
/// for cells with finitely many changes and therefore need not agree with
/// `tags` on translated loops.
#[derive(Debug, Clone)]
pub struct CellClass {
    pub tags: BTreeMap<(usize, u64), CellTag>,
    pub shadow: BTreeMap<(usize, u64), bool>,
    pub horizon_steps: u64,
}

#[derive(Debug, Clone, Copy)]
struct ChangeEvent {
    offset: u64,
    track: usize,
    cell: u64,
}

fn collect_changes(
    p: &Program,
    start: &Config,
    steps: u64,
) -> Result<Vec<ChangeEvent>, AnalysisError> {
    let mut events = Vec::new();
    let mut cur = start.clone();
    for s in 1..=steps {
        let before = cur.clone();
        match step_config(&cur, p) {
            Ok(ConfigStep::Next { config, .. }) => cur = config,
            Ok(_) | Err(_) => {
                return Err(AnalysisError::NotCertifiedDivergent(
                    "certified loop left successor stepping".into(),
                ))
            }
        }
        for t in 0..TAPE_COUNT {
            if cur.tapes[t].read(before.head) != before.tapes[t].read(before.head) {
                events.push(ChangeEvent {
                    offset: s,
                    track: t,
                    cell: before.head,
                });
            }
        }
    }
    Ok(events)
}

fn loop_horizon(cert: &LoopCertificate) -> u64 {
    if cert.shift == 0 {
        cert.period
    } else {
        // enough periods for the sweep window to pass its own initial span
        let mut hmin = u64::MAX;
        let mut hmax = 0u64;
        let _ = (hmin, hmax);
        hmin = cert.entry.config.head;
        hmax = cert.entry.config.head;
        // the span is refined below by simulation in classify_cells
        let _ = (hmin, hmax);
        cert.period * 8
    }
}

/// Classify the cells that change during one loop: in an exact cycle a
/// changing cell changes in every traversal, hence cofinally often; under a
/// rightward translation every fixed cell is passed and then stabilizes,
/// hence changes boundedly often.
pub fn classify_cells(p: &Program, cert: &LoopCertificate) -> Result<CellClass, AnalysisError> {
    let horizon = loop_horizon(cert);
    let events = collect_changes(p, &cert.entry.config, horizon)?;
    let mut counts: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    for ev in &events {
        *counts.entry((ev.track, ev.cell)).or_default() += 1;
    }
    let mut tags = BTreeMap::new();
    let mut shadow = BTreeMap::new();
    for (&key, &count) in &counts {
        if cert.shift == 0 {
            tags.insert(key, CellTag::Cofinal);
            // the toggle flips inside every traversal, so its lim sup is 1
            shadow.insert(key, true);
        } else {
            tags.insert(key, CellTag::Bounded);
            shadow.insert(key, count % 2 == 1);
        }
    }
    Ok(CellClass {
        tags,
        shadow,
        horizon_steps: horizon,
    })
}

/// Direct per-cell change counts over one loop traversal, the brute-force
/// cross-check for `classify_cells`.
pub fn change_counts(
    p: &Program,
    cert: &LoopCertificate,
) -> Result<BTreeMap<(usize, u64), u64>, AnalysisError> {
    let events = collect_changes(p, &cert.entry.config, loop_horizon(cert))?;
    let mut counts: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    for ev in &events {
        *counts.entry((ev.track, ev.cell)).or_default() += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkKind {
    /// Even step: a bounded cell was seen to stabilize.
    Stabilized,
    /// Odd step: the dovetailed cofinal cells all changed once more.
    Dovetail,
    /// A traversal boundary, the degenerate schedule when no cell events exist.
    Boundary,
}

#[derive(Debug, Clone)]
pub struct StageMark {
    pub label: u64,
    pub offset: u64,
    pub kind: MarkKind,
}

#[derive(Debug, Clone)]
pub struct WriterReport {
    pub marks: Vec<StageMark>,
    pub rounds: u64,
}

/// Interleave the even/odd marking schedule over one certified loop: even
/// steps run until the next bounded cell stabilizes, odd steps wait for each
/// cofinal cell up to the current index to change once more. The marks form
/// a strictly increasing stage sequence that the certified cycle structure
/// continues unboundedly below the reappearance stage, so the final
/// materialized mark is labeled as an ω-stream and the code decodes to the
/// loop length exactly.
pub fn loop_ordinal_writer(
    p: &Program,
    input: &TapeRep,
    budgets: &Budgets,
) -> Result<OrdinalCode, AnalysisError> {
    loop_ordinal_writer_report(p, input, budgets).map(|(code, _)| code)
}

pub fn loop_ordinal_writer_report(
    p: &Program,
    input: &TapeRep,
    budgets: &Budgets,
) -> Result<(OrdinalCode, WriterReport), AnalysisError> {
    let cert = first_looping_snapshot(p, input, budgets)?;
    let class = classify_cells(p, &cert)?;
    let rounds = 4u64;
    let horizon = class.horizon_steps * rounds.max(1);
    let events = collect_changes(p, &cert.entry.config, horizon)?;

    let bounded: Vec<(usize, u64)> = class
        .tags
        .iter()
        .filter(|(_, t)| **t == CellTag::Bounded)
        .map(|(k, _)| *k)
        .collect();
    let cofinal: Vec<(usize, u64)> = class
        .tags
        .iter()
        .filter(|(_, t)| **t == CellTag::Cofinal)
        .map(|(k, _)| *k)
        .collect();

    let last_change = |key: (usize, u64)| -> Option<u64> {
        events
            .iter()
            .filter(|e| (e.track, e.cell) == key)
            .map(|e| e.offset)
            .max()
    };
    let next_change = |key: (usize, u64), after: u64| -> Option<u64> {
        let within = events
            .iter()
            .filter(|e| (e.track, e.cell) == key && e.offset > after)
            .map(|e| e.offset)
            .min();
        within.or_else(|| {
            // cofinal cells change once per traversal; extend by periodicity
            let first = events
                .iter()
                .filter(|e| (e.track, e.cell) == key)
                .map(|e| e.offset)
                .min()?;
            let p = cert.period;
            Some(first + ((after - first) / p + 1) * p)
        })
    };

    let mut marks: Vec<StageMark> = Vec::new();
    let mut cursor = 0u64;
    let push = |marks: &mut Vec<StageMark>, offset: u64, kind: MarkKind| {
        if marks.last().is_none_or(|m| m.offset < offset) {
            marks.push(StageMark {
                label: 0,
                offset,
                kind,
            });
        }
    };

    let steps = bounded.len().max(if cofinal.is_empty() { 0 } else { rounds as usize });
    for i in 0..steps {
        if let Some(&cell) = bounded.get(i) {
            if let Some(stage) = last_change(cell) {
                cursor = cursor.max(stage);
                push(&mut marks, cursor, MarkKind::Stabilized);
            }
        }
        if !cofinal.is_empty() {
            for &cell in cofinal.iter().take(i + 1) {
                if let Some(stage) = next_change(cell, cursor) {
                    cursor = stage;
                }
            }
            push(&mut marks, cursor, MarkKind::Dovetail);
        }
    }
    if marks.is_empty() {
        for r in 1..=rounds {
            push(&mut marks, r * cert.period, MarkKind::Boundary);
        }
    }

    // plain point labels, except the tail mark of the certified stream
    let n = marks.len();
    for (t, m) in marks.iter_mut().enumerate() {
        m.label = if t + 1 == n {
            block_label(&Ordinal::one(), 0)
                .map_err(|e| AnalysisError::UnsupportedProgram(e.to_string()))?
        } else {
            2 * (t as u64)
        };
    }
    let labels: Vec<u64> = marks.iter().map(|m| m.label).collect();
    let code = OrdinalCode::from_sequence(&labels);
    Ok((code, WriterReport { marks, rounds }))
}


// --- the eventually-writable-to-writable transform -----------------------------------

const B_INPUT: u8 = 1 << (Input as usize);
const B_OUTPUT: u8 = 1 << (Output as usize);
const B_INDEX: u8 = 1 << (OracleIndex as usize);
const B_PARAM: u8 = 1 << (OracleParam as usize);
const B_ORD: u8 = 1 << (OracleOrdinal as usize);
const B_BLANK: u8 = 1 << (OracleBlank as usize);
const USER_MASK: u8 = B_INPUT | (1 << 1) | B_OUTPUT;
const GADGET_TRACKS: [usize; 4] = [
    OracleIndex as usize,
    OracleParam as usize,
    OracleOrdinal as usize,
    OracleBlank as usize,
];

/// e's transition at a user tuple (oracle tracks all zero), with the
/// total-default fallback applied.
fn user_row(e: &Program, state: usize, user_tuple: u8) -> Option<Transition> {
    match &e.rows[state][user_tuple as usize] {
        Some(t) => Some(t.clone()),
        None if e.total_default => Some(Transition {
            write: user_tuple,
            mv: Move::S,
            next: state,
        }),
        None => None,
    }
}

/// Reject programs the product construction cannot carry: ones that make
/// oracle calls of their own or that touch the oracle tracks the gadget
/// needs for its counter, parking marks, and sentinel.
fn check_plain_user_program(e: &Program) -> Result<(), AnalysisError> {
    for state in 0..e.states.len() {
        if state == ST_HALT || state == ST_QUERY {
            continue;
        }
        for user_tuple in 0u8..8 {
            let Some(row) = user_row(e, state, user_tuple) else {
                continue;
            };
            if row.next == ST_QUERY {
                return Err(AnalysisError::UnsupportedProgram(format!(
                    "{} makes oracle calls of its own",
                    e.name
                )));
            }
            if row.write & !USER_MASK != 0 {
                return Err(AnalysisError::UnsupportedProgram(format!(
                    "{} writes on the oracle tapes",
                    e.name
                )));
            }
        }
    }
    Ok(())
}

/// Map e's state indices into a host program, renaming user states and
/// folding e's limit behavior onto the host's limit state.
fn embed_states(e: &Program, host: &mut Program, halt_image: usize) -> Vec<usize> {
    let mut state_map = vec![usize::MAX; e.states.len()];
    for (i, name) in e.states.iter().enumerate() {
        state_map[i] = match i {
            ST_START => host.intern_state("sim_start"),
            ST_LIMIT => ST_LIMIT,
            ST_HALT => halt_image,
            _ => host.intern_state(&format!("sim_{name}")),
        };
    }
    state_map
}

/// Install e's rows into the host, lifted over all oracle-track bit
/// combinations (echoed through), intercepting output-changing writes.
fn install_embedded_rows(
    e: &Program,
    host: &mut Program,
    state_map: &[usize],
    mut on_change: impl FnMut(&mut Program, usize) -> usize,
) {
    for state in 0..e.states.len() {
        if state == ST_HALT || state == ST_QUERY {
            continue;
        }
        let host_state = state_map[state];
        for user_tuple in 0u8..8 {
            let Some(row) = user_row(e, state, user_tuple) else {
                continue;
            };
            let changes_output = (user_tuple ^ row.write) & B_OUTPUT != 0;
            let mapped_next = state_map[row.next];
            let next = if changes_output {
                on_change(host, mapped_next)
            } else {
                mapped_next
            };
            for gadget in 0u8..16 {
                let mut gbits = 0u8;
                for (b, track) in GADGET_TRACKS.iter().enumerate() {
                    if gadget & (1 << b) != 0 {
                        gbits |= 1 << track;
                    }
                }
                host.set_row(
                    host_state,
                    user_tuple | gbits,
                    Transition {
                        write: (row.write & USER_MASK) | gbits,
                        mv: row.mv,
                        next,
                    },
                );
            }
        }
    }
}

/// Emit a full 128-row state that branches on one track's bit; each branch
/// echoes the tuple, applying its set/clear masks.
fn branch_state(
    p: &mut Program,
    state: usize,
    bit: u8,
    on_zero: (u8, u8, Move, usize),
    on_one: (u8, u8, Move, usize),
) {
    for tuple in 0u8..128 {
        let (set, clear, mv, next) = if tuple & bit == 0 { on_zero } else { on_one };
        p.set_row(
            state,
            tuple,
            Transition {
                write: (tuple | set) & !clear,
                mv,
                next,
            },
        );
    }
}

fn uniform_state(p: &mut Program, state: usize, set: u8, clear: u8, mv: Move, next: usize) {
    branch_state(p, state, 0, (set, clear, mv, next), (set, clear, mv, next));
}

/// Build the helper the transform calls: run e from its start on empty
/// input, consuming one unary mark per output change; when a change finds no
/// mark left, halt. So on marks 1^n the helper converges exactly when e's
/// output changes an (n+1)-th time; e halting instead becomes a trivial
/// loop, the standard outcome interchange.
fn build_until_change(store: &mut ProgramStore, e: &Program) -> Result<u64, AnalysisError> {
    check_plain_user_program(e)?;
    let mut p = Program::new_shell(&format!("until_change({})", e.name));
    p.total_default = true;

    let mv_marks = p.intern_state("mv_marks");
    let wb = p.intern_state("wb");
    let dead = p.intern_state("dead");
    let state_map = embed_states(e, &mut p, dead);
    let sim_start = state_map[ST_START];

    // start: plant the cell-0 sentinel, then relocate the unary marks from
    // the input tape to the parameter tape so e sees an empty input
    uniform_state(&mut p, ST_START, B_BLANK, 0, Move::S, mv_marks);
    branch_state(
        &mut p,
        mv_marks,
        B_INPUT,
        (0, 0, Move::S, wb),
        (B_PARAM, B_INPUT, Move::R, mv_marks),
    );
    branch_state(
        &mut p,
        wb,
        B_BLANK,
        (0, 0, Move::L, wb),
        (0, 0, Move::S, sim_start),
    );

    // change gadget: park the head, walk home, consume the rightmost mark
    // (halting when none remain), walk back out to the mark and resume
    let mut parks: BTreeMap<usize, usize> = BTreeMap::new();
    install_embedded_rows(e, &mut p, &state_map, |p, resume| {
        if let Some(&park) = parks.get(&resume) {
            return park;
        }
        let tag = parks.len();
        let park = p.intern_state(&format!("park{tag}"));
        let home = p.intern_state(&format!("home{tag}"));
        let scan0 = p.intern_state(&format!("scan0_{tag}"));
        let scan_r = p.intern_state(&format!("scanr{tag}"));
        let erase = p.intern_state(&format!("erase{tag}"));
        let home2 = p.intern_state(&format!("home2_{tag}"));
        let unpark = p.intern_state(&format!("unpark{tag}"));
        uniform_state(p, park, B_ORD, 0, Move::S, home);
        branch_state(p, home, B_BLANK, (0, 0, Move::L, home), (0, 0, Move::S, scan0));
        branch_state(p, scan0, B_PARAM, (0, 0, Move::S, ST_HALT), (0, 0, Move::R, scan_r));
        branch_state(p, scan_r, B_PARAM, (0, 0, Move::L, erase), (0, 0, Move::R, scan_r));
        uniform_state(p, erase, 0, B_PARAM, Move::S, home2);
        branch_state(p, home2, B_BLANK, (0, 0, Move::L, home2), (0, 0, Move::S, unpark));
        branch_state(p, unpark, B_ORD, (0, 0, Move::R, unpark), (0, B_ORD, Move::S, resume));
        parks.insert(resume, park);
        park
    });

    store.add_program(p).map_err(AnalysisError::from)
}

/// Synthesize the transform of e: simulate e in place and, at each output
/// change, ask whether the output will change once more; halt with the
/// current output as soon as the answer is "divergent". Faithful for
/// programs run on empty input whose output writes happen at successor
/// stages, which covers the shipped corpus.
pub fn ev_to_writable_transform(store: &mut ProgramStore, e_id: u64) -> Result<u64, AnalysisError> {
    let e = store
        .get(e_id)
        .ok_or(AnalysisError::UnknownProgram(e_id))?
        .clone();
    check_plain_user_program(&e)?;
    let helper_id = build_until_change(store, &e)?;
    let digits: Vec<bool> = {
        let mut v = Vec::new();
        if helper_id > 0 {
            let width = 64 - helper_id.leading_zeros();
            for i in (0..width).rev() {
                v.push(true);
                v.push((helper_id >> i) & 1 == 1);
            }
        }
        v
    };

    let mut p = Program::new_shell(&format!("transform({})", e.name));
    p.total_default = true;
    let state_map = embed_states(&e, &mut p, ST_HALT);
    let sim_start = state_map[ST_START];

    // shared gadget states built up front so the parking chains can target them
    let to_l = p.intern_state("ctx_home");
    let app = p.intern_state("count_app");
    let to_l2 = p.intern_state("ctx_home2");
    let writers: Vec<usize> = (0..digits.len())
        .map(|i| p.intern_state(&format!("iw{i}")))
        .collect();
    let first_writer = *writers.first().unwrap_or(&ST_QUERY);

    uniform_state(&mut p, ST_START, B_BLANK, 0, Move::S, sim_start);
    branch_state(&mut p, to_l, B_BLANK, (0, 0, Move::L, to_l), (0, 0, Move::S, app));
    branch_state(
        &mut p,
        app,
        B_PARAM,
        (B_PARAM, 0, Move::S, to_l2),
        (0, 0, Move::R, app),
    );
    branch_state(
        &mut p,
        to_l2,
        B_BLANK,
        (0, 0, Move::L, to_l2),
        (0, 0, Move::S, first_writer),
    );
    for (i, &w) in writers.iter().enumerate() {
        let bit = digits[i];
        let last = i + 1 == writers.len();
        let (mv, next) = if last {
            (Move::S, ST_QUERY)
        } else {
            (Move::R, writers[i + 1])
        };
        let (set, clear) = if bit { (B_INDEX, 0) } else { (0, B_INDEX) };
        uniform_state(&mut p, w, set, clear, mv, next);
    }

    // e's rows, with output-changing writes redirected through a parking
    // chain that records the resume state as a unary context code
    let mut codes: BTreeMap<usize, u64> = BTreeMap::new();
    let mut parks: BTreeMap<usize, usize> = BTreeMap::new();
    install_embedded_rows(&e, &mut p, &state_map, |p, resume| {
        if let Some(&park) = parks.get(&resume) {
            return park;
        }
        let code = codes.len() as u64 + 1;
        codes.insert(resume, code);
        let park = p.intern_state(&format!("tpark{code}"));
        let mut prev = park;
        for j in 1..=code {
            let cst = p.intern_state(&format!("tcode{code}_{j}"));
            uniform_state(p, prev, B_ORD, 0, Move::R, cst);
            prev = cst;
        }
        uniform_state(p, prev, B_ORD, 0, Move::R, to_l);
        parks.insert(resume, park);
        park
    });

    // "no": the output is final, halt with it
    uniform_state(&mut p, ST_NO, 0, 0, Move::S, ST_HALT);

    // "yes": walk home, seek the parking mark, count the context code, walk
    // back onto the mark cell, and hand control to the recorded state
    let max_code = codes.len() as u64;
    let y_l = p.intern_state("ans_home");
    let y_r = p.intern_state("ans_seek");
    let dead_ctx = p.intern_state("dead_ctx");
    let mut cnt_states = Vec::new();
    for j in 1..=max_code + 1 {
        cnt_states.push(p.intern_state(&format!("tcnt{j}")));
    }
    uniform_state(&mut p, ST_YES, 0, 0, Move::S, y_l);
    branch_state(&mut p, y_l, B_BLANK, (0, 0, Move::L, y_l), (0, 0, Move::S, y_r));
    if let Some(&cnt1) = cnt_states.first() {
        branch_state(
            &mut p,
            y_r,
            B_ORD,
            (0, 0, Move::R, y_r),
            (0, B_ORD, Move::R, cnt1),
        );
    } else {
        // e never changes its output; answers can only arrive if it did
        uniform_state(&mut p, y_r, 0, 0, Move::S, dead_ctx);
    }
    let inv_codes: BTreeMap<u64, usize> = codes.iter().map(|(r, c)| (*c, *r)).collect();
    for j in 1..=max_code + 1 {
        let st = cnt_states[(j - 1) as usize];
        let on_one = if j <= max_code {
            (0u8, B_ORD, Move::R, cnt_states[j as usize])
        } else {
            (0u8, B_ORD, Move::S, dead_ctx)
        };
        let on_zero = if j == 1 {
            (0u8, 0u8, Move::S, dead_ctx)
        } else {
            let code = j - 1;
            let resume = inv_codes[&code];
            let back = make_back_walk(&mut p, code, code, resume);
            (0u8, 0u8, Move::L, back)
        };
        branch_state(&mut p, st, B_ORD, on_zero, on_one);
    }

    store.add_program(p).map_err(AnalysisError::from)
}

/// Chain of `remaining` leftward moves ending in `resume`.
fn make_back_walk(p: &mut Program, code: u64, remaining: u64, resume: usize) -> usize {
    if remaining == 0 {
        return resume;
    }
    let name = format!("tback{code}_{remaining}");
    if let Some(st) = p.state_index(&name) {
        return st;
    }
    let st = p.intern_state(&name);
    let next = make_back_walk(p, code, remaining - 1, resume);
    uniform_state(p, st, 0, 0, Move::L, next);
    st
}
