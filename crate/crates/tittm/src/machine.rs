//! The single-machine stepper and transfinite runner.
//!
//! A machine runs over seven parallel binary tapes with one shared head.
//! Successor steps are classical; at limit stages the head returns to cell 0,
//! a dedicated limit state is entered, and every cell takes the lim sup of
//! its history. Limits are reached symbolically: a block of successor steps
//! is run until the configuration repeats exactly or repeats up to a uniform
//! rightward translation, and the limit snapshot is extrapolated from the
//! certified cycle. Divergence is declared only when a limit snapshot equals
//! its own cycle base, the configuration-level reading of the repeating-
//! snapshot convention: from that point the same cycle and the same limit
//! recur forever. A configuration that merely recurs is not trusted — the
//! limit may escape the loop, and the run continues from it.
//!
//! An oracle call is a single transition into the query state, so a limit
//! stage can never land in the middle of one: blocks end cleanly at calls,
//! halts, cycles, or the step budget.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::ordinal::{cnf_bits, cnf_from_bits, ord_add, ord_cmp, Ordinal, OrdinalError};
use crate::tape::{tape_shift_equal, TapeRep};
use crate::variants::Budgets;

pub const TAPE_COUNT: usize = 7;

/// Roles of the seven tapes, in tuple order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapeRole {
    Input = 0,
    Scratch = 1,
    Output = 2,
    OracleIndex = 3,
    OracleParam = 4,
    OracleOrdinal = 5,
    OracleBlank = 6,
}

pub const TAPE_ROLES: [TapeRole; TAPE_COUNT] = [
    TapeRole::Input,
    TapeRole::Scratch,
    TapeRole::Output,
    TapeRole::OracleIndex,
    TapeRole::OracleParam,
    TapeRole::OracleOrdinal,
    TapeRole::OracleBlank,
];

impl TapeRole {
    pub fn short_name(self) -> &'static str {
        match self {
            TapeRole::Input => "input",
            TapeRole::Scratch => "scratch",
            TapeRole::Output => "output",
            TapeRole::OracleIndex => "index",
            TapeRole::OracleParam => "param",
            TapeRole::OracleOrdinal => "ordinal",
            TapeRole::OracleBlank => "blank",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    L,
    R,
    S,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::L => "L",
            Move::R => "R",
            Move::S => "S",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub write: u8,
    pub mv: Move,
    pub next: usize,
}

// Reserved state indices, present in every program. `halt` and `query` are
// events and own no rows; `yes`/`no` are where control resumes after an
// oracle call, carrying the answer in the state itself so no tape cell is
// clobbered by the delivery.
pub const ST_START: usize = 0;
pub const ST_LIMIT: usize = 1;
pub const ST_HALT: usize = 2;
pub const ST_QUERY: usize = 3;
pub const ST_YES: usize = 4;
pub const ST_NO: usize = 5;
pub const RESERVED_STATES: [&str; 6] = ["start", "limit", "halt", "query", "yes", "no"];

/// A transition table over the seven tapes.
///
/// `rows[state][tuple]` is the transition taken in `state` when the seven
/// bits under the head spell `tuple` (input tape = bit 0). With
/// `total_default` set, a missing row self-loops with Stay, which at the
/// next limit turns into honest divergence rather than a fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub states: Vec<String>,
    pub rows: Vec<Vec<Option<Transition>>>,
    pub total_default: bool,
    pub requested_id: Option<u64>,
}

impl Program {
    pub fn new_shell(name: &str) -> Program {
        let states: Vec<String> = RESERVED_STATES.iter().map(|s| s.to_string()).collect();
        let rows = states.iter().map(|_| vec![None; 128]).collect();
        Program {
            name: name.to_string(),
            states,
            rows,
            total_default: false,
            requested_id: None,
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Index of `name`, interning it (with an empty row set) if new.
    pub fn intern_state(&mut self, name: &str) -> usize {
        if let Some(i) = self.state_index(name) {
            return i;
        }
        self.states.push(name.to_string());
        self.rows.push(vec![None; 128]);
        self.states.len() - 1
    }

    pub fn set_row(&mut self, state: usize, tuple: u8, t: Transition) -> Option<Transition> {
        self.rows[state][tuple as usize].replace(t)
    }

    fn lookup(&self, state: usize, tuple: u8) -> Result<Transition, MachineFault> {
        if let Some(t) = &self.rows[state][tuple as usize] {
            return Ok(t.clone());
        }
        if self.total_default {
            return Ok(Transition {
                write: tuple,
                mv: Move::S,
                next: state,
            });
        }
        Err(MachineFault::MissingTransition {
            program: self.name.clone(),
            state: self.states[state].clone(),
            tuple,
        })
    }

    /// True if any row can enter the query state.
    pub fn makes_calls(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .flatten()
            .any(|t| t.next == ST_QUERY)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineFault {
    #[error("undecodable oracle tape in {program}: {detail}")]
    UndecodableOracleTape { program: String, detail: String },
    #[error("missing transition in {program}: state {state}, tuple {tuple:07b}")]
    MissingTransition {
        program: String,
        state: String,
        tuple: u8,
    },
    #[error("clock exceeded the ordinal representation cap: {0}")]
    ClockCap(String),
    #[error("internal fault: {0}")]
    Internal(String),
}

impl From<OrdinalError> for MachineFault {
    fn from(e: OrdinalError) -> Self {
        MachineFault::ClockCap(e.to_string())
    }
}

/// The clock-free part of a snapshot; equality of these drives cycle detection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Config {
    pub state: usize,
    pub head: u64,
    pub tapes: [TapeRep; TAPE_COUNT],
}

impl Config {
    fn read_tuple(&self) -> u8 {
        let mut tuple = 0u8;
        for (i, t) in self.tapes.iter().enumerate() {
            if t.read(self.head) {
                tuple |= 1 << i;
            }
        }
        tuple
    }

    fn suffix_key(&self) -> (usize, [TapeRep; TAPE_COUNT]) {
        let sufs: [TapeRep; TAPE_COUNT] =
            std::array::from_fn(|i| self.tapes[i].suffix_from(self.head));
        (self.state, sufs)
    }
}

/// A full machine configuration together with the stage ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub config: Config,
    pub clock: Ordinal,
}

impl Snapshot {
    pub fn output(&self) -> &TapeRep {
        &self.config.tapes[TapeRole::Output as usize]
    }
}

/// Starting tapes beyond the input, for variant drivers.
#[derive(Debug, Clone, Default)]
pub struct StartTapes {
    pub param: Option<TapeRep>,
    pub ordinal: Option<Ordinal>,
    pub blank: Option<TapeRep>,
}

pub fn initial_snapshot(input: &TapeRep, extra: &StartTapes) -> Snapshot {
    let mut tapes: [TapeRep; TAPE_COUNT] = std::array::from_fn(|_| TapeRep::empty());
    tapes[TapeRole::Input as usize] = input.clone();
    if let Some(p) = &extra.param {
        tapes[TapeRole::OracleParam as usize] = p.clone();
    }
    if let Some(o) = &extra.ordinal {
        tapes[TapeRole::OracleOrdinal as usize] = encode_ordinal_tape(o);
    }
    if let Some(b) = &extra.blank {
        tapes[TapeRole::OracleBlank as usize] = b.clone();
    }
    Snapshot {
        config: Config {
            state: ST_START,
            head: 0,
            tapes,
        },
        clock: Ordinal::zero(),
    }
}

/// A request for a subcomputation, decoded at the moment the query state is
/// entered. Identity is structural over all four fields: the `blank` tape is
/// empty for ordinary calls and carries the substituted string for parallel
/// instances, so an instance and a plain call differ unless the instance is
/// the zero one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OracleCall {
    pub index: u64,
    pub param: TapeRep,
    pub ordinal: Option<Ordinal>,
    pub blank: TapeRep,
}

impl OracleCall {
    pub fn plain(index: u64, param: TapeRep) -> Self {
        OracleCall {
            index,
            param,
            ordinal: None,
            blank: TapeRep::empty(),
        }
    }

    /// Short deterministic description used in traces.
    pub fn digest(&self) -> String {
        let mut s = format!("p{}({})", self.index, self.param);
        if let Some(o) = &self.ordinal {
            s.push_str(&format!(" a={o}"));
        }
        if self.blank != TapeRep::empty() {
            s.push_str(&format!(" b={}", self.blank));
        }
        s
    }
}

// --- oracle tape codings ------------------------------------------------------
//
// Index tape: each binary digit b of the natural (most significant first) is
// written as the cell pair `1b`; the pair `00` terminates. Every natural is
// encodable and the code is prefix-free, so stale cells past the terminator
// are ignored.

pub fn encode_natural_tape(n: u64) -> TapeRep {
    let mut bits = Vec::new();
    if n > 0 {
        let width = 64 - n.leading_zeros();
        for i in (0..width).rev() {
            bits.push(true);
            bits.push((n >> i) & 1 == 1);
        }
    }
    TapeRep::from_bits(&bits)
}

pub fn decode_natural_tape(t: &TapeRep) -> Result<u64, String> {
    let mut value: u64 = 0;
    let mut digits = 0u32;
    let mut i = 0u64;
    loop {
        if i >= t.support_end() && t.tail() {
            return Err("index tape has tail 1, no terminator".into());
        }
        let marker = t.read(i);
        let bit = t.read(i + 1);
        if !marker {
            if bit {
                return Err(format!("stray digit pair 01 at cell {i}"));
            }
            return Ok(value);
        }
        digits += 1;
        if digits > 63 {
            return Err("index wider than 63 digits".into());
        }
        value = (value << 1) | (bit as u64);
        i += 2;
    }
}

/// Ordinal tape: all-zero means no ordinal was written; otherwise cell 0 is
/// a presence marker and the CNF bit encoding follows from cell 1.
pub fn encode_ordinal_tape(o: &Ordinal) -> TapeRep {
    let mut bits = vec![true];
    bits.extend(cnf_bits(o));
    TapeRep::from_bits(&bits)
}

pub fn decode_ordinal_tape(t: &TapeRep) -> Result<Option<Ordinal>, String> {
    if !t.read(0) {
        if t.suffix_from(0) == TapeRep::empty() {
            return Ok(None);
        }
        // junk after a 0 presence cell still means "nothing written"
        return Ok(None);
    }
    if t.tail() {
        return Err("ordinal tape has tail 1".into());
    }
    let horizon = (t.support_end() + 64) as usize;
    let mut bits = (1..).map(|i| t.read(i)).take(horizon);
    let o = cnf_from_bits(&mut bits).map_err(|e| e.to_string())?;
    Ok(Some(o))
}

// --- successor steps ----------------------------------------------------------

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum ConfigStep {
    Next { config: Config, clamped: bool },
    Halt { config: Config },
    Call { config: Config, call: OracleCall },
}

pub fn step_config(c: &Config, p: &Program) -> Result<ConfigStep, MachineFault> {
    debug_assert!(c.state != ST_HALT, "stepping a halted machine");
    let t = p.lookup(c.state, c.read_tuple())?;
    let mut tapes = c.tapes.clone();
    for (i, tape) in tapes.iter_mut().enumerate() {
        let v = (t.write >> i) & 1 == 1;
        if tape.read(c.head) != v {
            *tape = tape.write(c.head, v);
        }
    }
    let (head, clamped) = match t.mv {
        Move::L if c.head == 0 => (0, true),
        Move::L => (c.head - 1, false),
        Move::R => (c.head + 1, false),
        Move::S => (c.head, false),
    };
    let config = Config {
        state: t.next,
        head,
        tapes,
    };
    if t.next == ST_HALT {
        return Ok(ConfigStep::Halt { config });
    }
    if t.next == ST_QUERY {
        let index = decode_natural_tape(&config.tapes[TapeRole::OracleIndex as usize]).map_err(
            |detail| MachineFault::UndecodableOracleTape {
                program: p.name.clone(),
                detail: format!("index: {detail}"),
            },
        )?;
        let ordinal = decode_ordinal_tape(&config.tapes[TapeRole::OracleOrdinal as usize])
            .map_err(|detail| MachineFault::UndecodableOracleTape {
                program: p.name.clone(),
                detail: format!("ordinal: {detail}"),
            })?;
        let call = OracleCall {
            index,
            param: config.tapes[TapeRole::OracleParam as usize].clone(),
            ordinal,
            blank: TapeRep::empty(),
        };
        return Ok(ConfigStep::Call { config, call });
    }
    Ok(ConfigStep::Next { config, clamped })
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum StepOutcome {
    Next(Snapshot),
    Halt { at: Snapshot, output: TapeRep },
    Call { at: Snapshot, call: OracleCall },
}

/// One successor step. Entering `halt` or `query` is surfaced as an event
/// carrying the post-step snapshot.
pub fn step(s: &Snapshot, p: &Program) -> Result<StepOutcome, MachineFault> {
    let clock = ord_add(&s.clock, &Ordinal::one())?;
    match step_config(&s.config, p)? {
        ConfigStep::Next { config, .. } => Ok(StepOutcome::Next(Snapshot { config, clock })),
        ConfigStep::Halt { config } => {
            let output = config.tapes[TapeRole::Output as usize].clone();
            Ok(StepOutcome::Halt {
                at: Snapshot { config, clock },
                output,
            })
        }
        ConfigStep::Call { config, call } => Ok(StepOutcome::Call {
            at: Snapshot { config, clock },
            call,
        }),
    }
}

// --- blocks and cycle detection -------------------------------------------------

#[derive(Debug, Clone)]
pub struct CycleDescriptor {
    pub base: Snapshot,
    pub period: u64,
    pub shift: i64,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum BlockOutcome {
    Halted { output: TapeRep, last: Snapshot },
    OracleCall { call: OracleCall, at: Snapshot },
    Cycle(CycleDescriptor),
    BudgetExhausted { last: Snapshot },
}

/// Side information a block reports for the macro-step machinery.
#[derive(Debug, Clone)]
pub struct BlockStats {
    pub or_tapes: [TapeRep; TAPE_COUNT],
    pub clamped: bool,
    pub min_head: u64,
    pub max_head: u64,
    pub steps: u64,
}

fn or_into(acc: &mut [TapeRep; TAPE_COUNT], tapes: &[TapeRep; TAPE_COUNT]) {
    for (a, t) in acc.iter_mut().zip(tapes.iter()) {
        *a = a.or(t);
    }
}

/// Same-suffix candidates tried per stage before giving up on a lasso.
const MAX_LASSO_CANDIDATES: usize = 8;

pub fn run_block(
    start: &Snapshot,
    p: &Program,
    max_steps: u64,
) -> Result<BlockOutcome, MachineFault> {
    run_block_full(start, p, max_steps).map(|(o, _)| o)
}

pub fn run_block_full(
    start: &Snapshot,
    p: &Program,
    max_steps: u64,
) -> Result<(BlockOutcome, BlockStats), MachineFault> {
    let mut configs: Vec<Config> = Vec::new();
    let mut clamps: Vec<bool> = Vec::new();
    let mut exact: HashMap<Config, usize> = HashMap::new();
    let mut translated: HashMap<(usize, [TapeRep; TAPE_COUNT]), Vec<usize>> = HashMap::new();

    let mut stats = BlockStats {
        or_tapes: start.config.tapes.clone(),
        clamped: false,
        min_head: start.config.head,
        max_head: start.config.head,
        steps: 0,
    };
    let clock_at = |n: u64| -> Result<Ordinal, MachineFault> {
        Ok(ord_add(&start.clock, &Ordinal::from_nat(n)?)?)
    };

    let mut cur = start.config.clone();
    for s in 0u64.. {
        or_into(&mut stats.or_tapes, &cur.tapes);
        stats.min_head = stats.min_head.min(cur.head);
        stats.max_head = stats.max_head.max(cur.head);
        stats.steps = s;

        // exact repeat: always a sound loop by determinism
        if let Some(&i) = exact.get(&cur) {
            let base = Snapshot {
                config: configs[i].clone(),
                clock: clock_at(i as u64)?,
            };
            return Ok((
                BlockOutcome::Cycle(CycleDescriptor {
                    base,
                    period: s - i as u64,
                    shift: 0,
                }),
                stats,
            ));
        }

        // translation repeat: sound when the period never clamped at cell 0
        // (the translated copy would unclamp) and the swept debris settles to
        // a constant bit per tape (otherwise the limit tape has no finite
        // normal form and we honestly keep searching). Only the earliest few
        // same-suffix candidates are tried, and a cheap look at the slot-0
        // debris — the cells between the window floor and one shift up are
        // already final at the repeat — weeds out striped sweeps before any
        // resimulation.
        let key = cur.suffix_key();
        if let Some(bucket) = translated.get(&key) {
            for &i in bucket.iter().take(MAX_LASSO_CANDIDATES) {
                let base_cfg = &configs[i];
                let k = cur.head as i64 - base_cfg.head as i64;
                if k <= 0 {
                    // leftward lassos always reach the wall and break pattern
                    continue;
                }
                if clamps[i..].iter().any(|&c| c) {
                    continue;
                }
                let aligned = (0..TAPE_COUNT).all(|t| {
                    tape_shift_equal(&base_cfg.tapes[t], base_cfg.head, &cur.tapes[t], cur.head)
                        == Some(k)
                });
                if !aligned {
                    continue;
                }
                let hmin = configs[i..]
                    .iter()
                    .map(|c| c.head)
                    .min()
                    .unwrap_or(base_cfg.head)
                    .min(base_cfg.head);
                let slot0_constant = (0..TAPE_COUNT).all(|t| {
                    let first = cur.tapes[t].read(hmin);
                    (hmin..hmin + k as u64).all(|c| cur.tapes[t].read(c) == first)
                });
                if !slot0_constant {
                    continue;
                }
                let period = s - i as u64;
                if translated_limit_tapes(p, base_cfg, period, k as u64).is_some() {
                    let base = Snapshot {
                        config: base_cfg.clone(),
                        clock: clock_at(i as u64)?,
                    };
                    return Ok((
                        BlockOutcome::Cycle(CycleDescriptor {
                            base,
                            period,
                            shift: k,
                        }),
                        stats,
                    ));
                }
            }
        }

        if s == max_steps {
            let last = Snapshot {
                config: cur,
                clock: clock_at(s)?,
            };
            return Ok((BlockOutcome::BudgetExhausted { last }, stats));
        }

        exact.insert(cur.clone(), s as usize);
        translated.entry(key).or_default().push(s as usize);
        configs.push(cur.clone());

        match step_config(&cur, p)? {
            ConfigStep::Next { config, clamped } => {
                clamps.push(clamped);
                cur = config;
            }
            ConfigStep::Halt { config } => {
                or_into(&mut stats.or_tapes, &config.tapes);
                let output = config.tapes[TapeRole::Output as usize].clone();
                let last = Snapshot {
                    config,
                    clock: clock_at(s + 1)?,
                };
                return Ok((BlockOutcome::Halted { output, last }, stats));
            }
            ConfigStep::Call { config, call } => {
                or_into(&mut stats.or_tapes, &config.tapes);
                stats.min_head = stats.min_head.min(config.head);
                stats.max_head = stats.max_head.max(config.head);
                let at = Snapshot {
                    config,
                    clock: clock_at(s + 1)?,
                };
                return Ok((BlockOutcome::OracleCall { call, at }, stats));
            }
        }
    }
    unreachable!()
}

/// Limit tapes for a rightward translation lasso, or None when the debris
/// the sweep leaves behind is not eventually constant per tape.
///
/// During one period the head stays within a window; each period the whole
/// pattern shifts right by `k`, so any fixed cell is touched during finitely
/// many periods and then keeps its value. Simulating until the window has
/// passed its own initial span exposes those final values; by translation
/// equivariance they repeat with spatial period `k` forever.
fn translated_limit_tapes(
    p: &Program,
    base: &Config,
    period: u64,
    k: u64,
) -> Option<[TapeRep; TAPE_COUNT]> {
    let mut cur = base.clone();
    let mut hmin = base.head;
    let mut hmax = base.head;
    let mut first_period: Vec<Config> = Vec::with_capacity(period as usize);
    for _ in 0..period {
        first_period.push(cur.clone());
        hmin = hmin.min(cur.head);
        hmax = hmax.max(cur.head);
        match step_config(&cur, p) {
            Ok(ConfigStep::Next { config, clamped }) => {
                if clamped {
                    return None;
                }
                cur = config;
            }
            _ => return None,
        }
    }
    let span_periods = (hmax - hmin) / k + 3;
    for m in 1..=span_periods {
        // verify the pattern keeps translating
        let ok = cur.state == base.state
            && (0..TAPE_COUNT).all(|t| {
                tape_shift_equal(&base.tapes[t], base.head, &cur.tapes[t], cur.head)
                    == Some((m * k) as i64)
            });
        if !ok {
            return None;
        }
        if m == span_periods {
            break;
        }
        for _ in 0..period {
            match step_config(&cur, p) {
                Ok(ConfigStep::Next { config, clamped }) => {
                    if clamped {
                        return None;
                    }
                    cur = config;
                }
                _ => return None,
            }
        }
    }
    // cells below hmin + (span_periods-1)*k are final; require the settled
    // region [hmin, ...) to be a single bit per tape
    let settled_end = hmin + (span_periods - 1) * k;
    let mut out: [TapeRep; TAPE_COUNT] = std::array::from_fn(|_| TapeRep::empty());
    #[allow(clippy::needless_range_loop)]
    for t in 0..TAPE_COUNT {
        let tape = &cur.tapes[t];
        let debris = tape.read(hmin);
        for c in hmin..settled_end {
            if tape.read(c) != debris {
                return None;
            }
        }
        let prefix: Vec<bool> = (0..hmin).map(|c| tape.read(c)).collect();
        out[t] = TapeRep::new(prefix.into_iter().map(|b| (b, 1)).collect(), debris);
    }
    Some(out)
}

/// The limit snapshot of a certified cycle: head 0, the limit state, each
/// cell the lim sup of its values over the cycle repeated ω times, and the
/// clock rounded up to the next limit ordinal.
pub fn extrapolate_limit(p: &Program, cycle: &CycleDescriptor) -> Result<Snapshot, MachineFault> {
    let tapes = if cycle.shift == 0 {
        let mut acc = cycle.base.config.tapes.clone();
        let mut cur = cycle.base.config.clone();
        for _ in 0..cycle.period {
            match step_config(&cur, p)? {
                ConfigStep::Next { config, .. } => {
                    or_into(&mut acc, &config.tapes);
                    cur = config;
                }
                _ => {
                    return Err(MachineFault::Internal(
                        "cycle period left the block".into(),
                    ))
                }
            }
        }
        acc
    } else {
        translated_limit_tapes(p, &cycle.base.config, cycle.period, cycle.shift as u64)
            .ok_or_else(|| MachineFault::Internal("unextrapolatable cycle accepted".into()))?
    };
    Ok(Snapshot {
        config: Config {
            state: ST_LIMIT,
            head: 0,
            tapes,
        },
        clock: ord_add(&cycle.base.clock, &Ordinal::omega())?,
    })
}

// --- the per-node engine ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownReason {
    StepBudget,
    DepthBudget,
    ClockCap,
    LimitBudget,
    Fault(FaultKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    UndecodableOracleTape,
    MissingTransition,
    OrdinalViolation,
    DepthViolation,
    UndecidedCall,
    Internal,
}

impl UnknownReason {
    pub fn tag(&self) -> &'static str {
        match self {
            UnknownReason::StepBudget => "step_budget",
            UnknownReason::DepthBudget => "depth_budget",
            UnknownReason::ClockCap => "clock_cap",
            UnknownReason::LimitBudget => "limit_budget",
            UnknownReason::Fault(FaultKind::UndecodableOracleTape) => "undecodable_oracle_tape",
            UnknownReason::Fault(FaultKind::MissingTransition) => "missing_transition",
            UnknownReason::Fault(FaultKind::OrdinalViolation) => "ordinal_violation",
            UnknownReason::Fault(FaultKind::DepthViolation) => "depth_violation",
            UnknownReason::Fault(FaultKind::UndecidedCall) => "undecided_call",
            UnknownReason::Fault(FaultKind::Internal) => "internal_fault",
        }
    }
}

pub fn fault_reason(f: &MachineFault) -> UnknownReason {
    match f {
        MachineFault::UndecodableOracleTape { .. } => {
            UnknownReason::Fault(FaultKind::UndecodableOracleTape)
        }
        MachineFault::MissingTransition { .. } => UnknownReason::Fault(FaultKind::MissingTransition),
        MachineFault::ClockCap(_) => UnknownReason::ClockCap,
        MachineFault::Internal(_) => UnknownReason::Fault(FaultKind::Internal),
    }
}

/// How one node's run ended, before any tree semantics is applied.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum NodeOutcome {
    Converged {
        output: TapeRep,
        last: Snapshot,
    },
    Diverged {
        last: Snapshot,
        cert: DivergenceCertificate,
    },
    Unknown {
        reason: UnknownReason,
        detail: Option<String>,
        last: Snapshot,
    },
}

/// Why divergence was certified: the entry snapshot provably re-enters
/// itself after the cycle, at block level or at macro (between-calls) level.
#[derive(Debug, Clone)]
pub struct DivergenceCertificate {
    pub entry: Snapshot,
    pub period: u64,
    pub shift: i64,
    pub macro_level: bool,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum EngineEvent {
    NeedAnswer(OracleCall),
    Done(NodeOutcome),
}

#[derive(Debug, Clone)]
struct MacroStep {
    resume: Config,
    clock: Ordinal,
    or_tapes: [TapeRep; TAPE_COUNT],
    clamped: bool,
    min_head: u64,
    max_head: u64,
}

#[derive(Debug, Clone)]
struct PendingLasso {
    base_idx: usize,
    period: usize,
    k: u64,
    hmin: u64,
    needed_periods: u64,
}

/// Runs one node of the subcomputation tree: alternates oracle-free blocks
/// with limit extrapolation, and applies the same cycle detection to the
/// sequence of "resume after an answered call" macro-steps, realizing the
/// limit rule for a node that was active cofinally often.
pub struct NodeEngine<'p> {
    program: &'p Program,
    budgets: Budgets,
    snapshot: Snapshot,
    limits_used: u64,
    macro_steps: Vec<MacroStep>,
    pending_lasso: Option<PendingLasso>,
    or_pending: [TapeRep; TAPE_COUNT],
    clamp_pending: bool,
    min_head_pending: u64,
    max_head_pending: u64,
    awaiting: Option<Snapshot>,
    finished: Option<NodeOutcome>,
}

impl<'p> NodeEngine<'p> {
    pub fn new(program: &'p Program, input: &TapeRep, extra: &StartTapes, budgets: &Budgets) -> Self {
        let snapshot = initial_snapshot(input, extra);
        NodeEngine {
            program,
            budgets: budgets.clone(),
            or_pending: snapshot.config.tapes.clone(),
            min_head_pending: 0,
            max_head_pending: 0,
            snapshot,
            limits_used: 0,
            macro_steps: Vec::new(),
            pending_lasso: None,
            clamp_pending: false,
            awaiting: None,
            finished: None,
        }
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    fn unknown(&self, reason: UnknownReason, detail: Option<String>) -> NodeOutcome {
        NodeOutcome::Unknown {
            reason,
            detail,
            last: self.snapshot.clone(),
        }
    }

    /// Advance to the next oracle call or final outcome. After a
    /// `NeedAnswer` event the caller must invoke `deliver_answer` before
    /// calling this again.
    pub fn next_event(&mut self) -> EngineEvent {
        if let Some(done) = self.finished.take() {
            return EngineEvent::Done(done);
        }
        assert!(self.awaiting.is_none(), "answer not yet delivered");
        loop {
            let res = run_block_full(&self.snapshot, self.program, self.budgets.max_steps_per_block);
            let (outcome, stats) = match res {
                Ok(v) => v,
                Err(f) => {
                    return EngineEvent::Done(self.unknown(fault_reason(&f), Some(f.to_string())))
                }
            };
            or_into(&mut self.or_pending, &stats.or_tapes);
            self.clamp_pending |= stats.clamped;
            self.min_head_pending = self.min_head_pending.min(stats.min_head);
            self.max_head_pending = self.max_head_pending.max(stats.max_head);
            match outcome {
                BlockOutcome::Halted { output, last } => {
                    self.snapshot = last.clone();
                    return EngineEvent::Done(NodeOutcome::Converged { output, last });
                }
                BlockOutcome::BudgetExhausted { last } => {
                    self.snapshot = last;
                    return EngineEvent::Done(self.unknown(UnknownReason::StepBudget, None));
                }
                BlockOutcome::OracleCall { call, at } => {
                    self.snapshot = at.clone();
                    self.awaiting = Some(at);
                    return EngineEvent::NeedAnswer(call);
                }
                BlockOutcome::Cycle(cycle) => {
                    let limit = match extrapolate_limit(self.program, &cycle) {
                        Ok(s) => s,
                        Err(f) => {
                            return EngineEvent::Done(
                                self.unknown(fault_reason(&f), Some(f.to_string())),
                            )
                        }
                    };
                    if limit.config == cycle.base.config {
                        self.snapshot = limit.clone();
                        return EngineEvent::Done(NodeOutcome::Diverged {
                            last: limit,
                            cert: DivergenceCertificate {
                                entry: cycle.base,
                                period: cycle.period,
                                shift: cycle.shift,
                                macro_level: false,
                            },
                        });
                    }
                    if let Some(done) = self.enter_limit(limit) {
                        return EngineEvent::Done(done);
                    }
                }
            }
        }
    }

    /// Bookkeeping shared by block-level and macro-level limits. A limit
    /// ends the current macro era: cofinally many calls cannot straddle it.
    fn enter_limit(&mut self, limit: Snapshot) -> Option<NodeOutcome> {
        self.limits_used += 1;
        if self.limits_used > self.budgets.max_limit_stages {
            self.snapshot = limit;
            return Some(self.unknown(UnknownReason::LimitBudget, None));
        }
        if ord_cmp(&limit.clock, &self.budgets.clock_cap) != std::cmp::Ordering::Less {
            self.snapshot = limit;
            return Some(self.unknown(UnknownReason::ClockCap, None));
        }
        self.macro_steps.clear();
        self.pending_lasso = None;
        self.or_pending = limit.config.tapes.clone();
        self.clamp_pending = false;
        self.min_head_pending = 0;
        self.max_head_pending = 0;
        self.snapshot = limit;
        None
    }

    /// Feed the oracle's answer for the pending call back into the node:
    /// control resumes in the `yes` or `no` state with tapes and head as the
    /// call left them.
    pub fn deliver_answer(&mut self, convergent: bool) {
        let at = self.awaiting.take().expect("no pending oracle call");
        let mut config = at.config.clone();
        config.state = if convergent { ST_YES } else { ST_NO };
        let clock = match ord_add(&at.clock, &Ordinal::one()) {
            Ok(c) => c,
            Err(e) => {
                self.finished =
                    Some(self.unknown(UnknownReason::ClockCap, Some(e.to_string())));
                return;
            }
        };
        let mut or_tapes = std::mem::replace(
            &mut self.or_pending,
            std::array::from_fn(|_| TapeRep::empty()),
        );
        or_into(&mut or_tapes, &config.tapes);
        let step = MacroStep {
            min_head: self.min_head_pending.min(config.head),
            max_head: self.max_head_pending.max(config.head),
            resume: config.clone(),
            clock: clock.clone(),
            or_tapes,
            clamped: std::mem::take(&mut self.clamp_pending),
        };
        self.snapshot = Snapshot { config, clock };
        self.or_pending = self.snapshot.config.tapes.clone();
        self.min_head_pending = self.snapshot.config.head;
        self.max_head_pending = self.snapshot.config.head;
        self.macro_steps.push(step);
        if self.macro_steps.len() as u64 > self.budgets.max_steps_per_block {
            self.finished = Some(self.unknown(UnknownReason::StepBudget, None));
            return;
        }
        self.check_macro_cycles();
    }

    fn check_macro_cycles(&mut self) {
        let j = self.macro_steps.len() - 1;
        let new = &self.macro_steps[j];

        // exact macro repeat
        for i in 0..j {
            if self.macro_steps[i].resume == new.resume {
                let mut tapes = self.macro_steps[i].resume.tapes.clone();
                for st in &self.macro_steps[i + 1..=j] {
                    or_into(&mut tapes, &st.or_tapes);
                }
                let clock = match ord_add(&self.macro_steps[i].clock, &Ordinal::omega()) {
                    Ok(c) => c,
                    Err(e) => {
                        self.finished =
                            Some(self.unknown(UnknownReason::ClockCap, Some(e.to_string())));
                        return;
                    }
                };
                let limit = Snapshot {
                    config: Config {
                        state: ST_LIMIT,
                        head: 0,
                        tapes,
                    },
                    clock,
                };
                let base = &self.macro_steps[i];
                if limit.config == base.resume {
                    let entry = Snapshot {
                        config: base.resume.clone(),
                        clock: base.clock.clone(),
                    };
                    self.snapshot = limit.clone();
                    self.finished = Some(NodeOutcome::Diverged {
                        last: limit,
                        cert: DivergenceCertificate {
                            entry,
                            period: (j - i) as u64,
                            shift: 0,
                            macro_level: true,
                        },
                    });
                } else if let Some(done) = self.enter_limit(limit) {
                    self.finished = Some(done);
                }
                return;
            }
        }

        // translated macro lasso: confirm over enough periods that the swept
        // region has settled, then extrapolate from the observed debris
        if let Some(lasso) = &self.pending_lasso {
            let li = lasso.base_idx;
            let lp = lasso.period;
            if (j - li).is_multiple_of(lp) {
                let m = ((j - li) / lp) as u64;
                let base = &self.macro_steps[li].resume;
                let aligned = new.resume.state == base.state
                    && (0..TAPE_COUNT).all(|t| {
                        tape_shift_equal(&base.tapes[t], base.head, &new.resume.tapes[t], new.resume.head)
                            == Some((m * lasso.k) as i64)
                    })
                    && !self.macro_steps[li + 1..=j].iter().any(|s| s.clamped);
                if !aligned {
                    self.pending_lasso = None;
                } else if m >= lasso.needed_periods {
                    let lasso = self.pending_lasso.take().unwrap();
                    self.finish_macro_lasso(lasso, j);
                    return;
                }
            }
            if self.pending_lasso.is_some() {
                return;
            }
        }

        for i in 0..j {
            let base = &self.macro_steps[i].resume;
            let k = new.resume.head as i64 - base.head as i64;
            if k <= 0 || new.resume.state != base.state {
                continue;
            }
            if self.macro_steps[i + 1..=j].iter().any(|s| s.clamped) {
                continue;
            }
            let aligned = (0..TAPE_COUNT).all(|t| {
                tape_shift_equal(&base.tapes[t], base.head, &new.resume.tapes[t], new.resume.head)
                    == Some(k)
            });
            if !aligned {
                continue;
            }
            let hmin = self.macro_steps[i + 1..=j]
                .iter()
                .map(|s| s.min_head)
                .min()
                .unwrap()
                .min(base.head);
            let hmax = self.macro_steps[i + 1..=j]
                .iter()
                .map(|s| s.max_head)
                .max()
                .unwrap()
                .max(base.head);
            self.pending_lasso = Some(PendingLasso {
                base_idx: i,
                period: j - i,
                k: k as u64,
                hmin,
                needed_periods: (hmax - hmin) / (k as u64) + 3,
            });
            return;
        }
    }

    fn finish_macro_lasso(&mut self, lasso: PendingLasso, j: usize) {
        let base = &self.macro_steps[lasso.base_idx];
        let latest = &self.macro_steps[j].resume;
        let settled_end = lasso.hmin + (lasso.needed_periods - 1) * lasso.k;
        let mut tapes: [TapeRep; TAPE_COUNT] = std::array::from_fn(|_| TapeRep::empty());
        #[allow(clippy::needless_range_loop)]
        for t in 0..TAPE_COUNT {
            let tape = &latest.tapes[t];
            let debris = tape.read(lasso.hmin);
            for c in lasso.hmin..settled_end {
                if tape.read(c) != debris {
                    // no finite-normal-form limit; abandon this lasso
                    return;
                }
            }
            let prefix: Vec<bool> = (0..lasso.hmin).map(|c| tape.read(c)).collect();
            tapes[t] = TapeRep::new(prefix.into_iter().map(|b| (b, 1)).collect(), debris);
        }
        let clock = match ord_add(&base.clock, &Ordinal::omega()) {
            Ok(c) => c,
            Err(e) => {
                self.finished = Some(self.unknown(UnknownReason::ClockCap, Some(e.to_string())));
                return;
            }
        };
        let limit = Snapshot {
            config: Config {
                state: ST_LIMIT,
                head: 0,
                tapes,
            },
            clock,
        };
        if limit.config == base.resume {
            let entry = Snapshot {
                config: base.resume.clone(),
                clock: base.clock.clone(),
            };
            self.snapshot = limit.clone();
            self.finished = Some(NodeOutcome::Diverged {
                last: limit,
                cert: DivergenceCertificate {
                    entry,
                    period: lasso.period as u64,
                    shift: lasso.k as i64,
                    macro_level: true,
                },
            });
        } else if let Some(done) = self.enter_limit(limit) {
            self.finished = Some(done);
        }
    }
}

/// Answers the transfinite runner consults at oracle-call events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleAnswer {
    Converges,
    Diverges,
    Freezes,
    Unknown,
}

/// Run a program under a given oracle. The oracle function must be pure
/// within one run; freezing or undecided answers end the run immediately.
pub fn run(
    p: &Program,
    input: &TapeRep,
    budgets: &Budgets,
    mut oracle: impl FnMut(&OracleCall) -> OracleAnswer,
) -> crate::feedback::Verdict {
    run_with_tapes(p, input, &StartTapes::default(), budgets, &mut oracle).0
}

pub fn run_with_tapes(
    p: &Program,
    input: &TapeRep,
    extra: &StartTapes,
    budgets: &Budgets,
    oracle: &mut dyn FnMut(&OracleCall) -> OracleAnswer,
) -> (crate::feedback::Verdict, Snapshot) {
    use crate::feedback::Verdict;
    let mut engine = NodeEngine::new(p, input, extra, budgets);
    loop {
        match engine.next_event() {
            EngineEvent::NeedAnswer(call) => match oracle(&call) {
                OracleAnswer::Converges => engine.deliver_answer(true),
                OracleAnswer::Diverges => engine.deliver_answer(false),
                OracleAnswer::Freezes => {
                    let snap = engine.snapshot().clone();
                    return (Verdict::Freezes(vec![call]), snap);
                }
                OracleAnswer::Unknown => {
                    let snap = engine.snapshot().clone();
                    return (
                        Verdict::Unknown {
                            reason: UnknownReason::Fault(FaultKind::UndecidedCall),
                            detail: Some(format!("oracle gave no verdict for {}", call.digest())),
                        },
                        snap,
                    );
                }
            },
            EngineEvent::Done(outcome) => {
                let snap = engine.snapshot().clone();
                let v = match outcome {
                    NodeOutcome::Converged { output, .. } => Verdict::Converges(output),
                    NodeOutcome::Diverged { .. } => Verdict::Diverges,
                    NodeOutcome::Unknown { reason, detail, .. } => Verdict::Unknown { reason, detail },
                };
                return (v, snap);
            }
        }
    }
}

/// The first limit snapshot of an oracle-free run together with the cycle it
/// was extrapolated from, or None when the first block ends in halt, a call,
/// or budget exhaustion.
pub fn first_limit(
    p: &Program,
    input: &TapeRep,
    max_steps: u64,
) -> Result<Option<(CycleDescriptor, Snapshot)>, MachineFault> {
    let start = initial_snapshot(input, &StartTapes::default());
    match run_block(&start, p, max_steps)? {
        BlockOutcome::Cycle(cycle) => {
            let limit = extrapolate_limit(p, &cycle)?;
            Ok(Some((cycle, limit)))
        }
        _ => Ok(None),
    }
}

/// Certified divergence data for a plain (oracle-free) run, for the analysis
/// pipeline. Fails with the node outcome when the run is not divergent.
#[allow(clippy::result_large_err)]
pub fn certified_divergence(
    p: &Program,
    input: &TapeRep,
    budgets: &Budgets,
) -> Result<DivergenceCertificate, NodeOutcome> {
    let mut engine = NodeEngine::new(p, input, &StartTapes::default(), budgets);
    match engine.next_event() {
        EngineEvent::Done(NodeOutcome::Diverged { cert, .. }) => Ok(cert),
        EngineEvent::Done(other) => Err(other),
        EngineEvent::NeedAnswer(call) => Err(NodeOutcome::Unknown {
            reason: UnknownReason::Fault(FaultKind::UndecidedCall),
            detail: Some(format!("program makes oracle call {}", call.digest())),
            last: engine.snapshot().clone(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse::parse_program;
    use crate::ordinal::parse_ordinal;

    fn prog(src: &str) -> Program {
        parse_program(src, "test").unwrap()
    }

    fn budgets() -> Budgets {
        Budgets::default()
    }

    #[test]
    fn step_applies_transitions() {
        // write 1 on scratch, move right, change state
        let p = prog("@total-default\nstart 0000000 -> 0100000 R s1\n");
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        match step(&s, &p).unwrap() {
            StepOutcome::Next(next) => {
                assert_eq!(next.config.head, 1);
                assert!(next.config.tapes[TapeRole::Scratch as usize].read(0));
                assert_eq!(p.states[next.config.state], "s1");
                assert_eq!(next.clock, Ordinal::one());
            }
            other => panic!("expected a plain step, got {other:?}"),
        }
    }

    #[test]
    fn step_into_halt_carries_output() {
        let p = prog("@total-default\nstart 0000000 -> 0010000 S halt\n");
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        match step(&s, &p).unwrap() {
            StepOutcome::Halt { output, .. } => {
                assert_eq!(output, TapeRep::from_bits(&[true]));
            }
            other => panic!("expected halt, got {other:?}"),
        }
    }

    #[test]
    fn step_into_query_decodes_the_call() {
        // index tape digits for 7 = 111 are the pairs 11 11 11
        let p = prog(
            "@total-default\n\
             start 0000000 -> 0001000 R a\n\
             a 0000000 -> 0001000 R b\n\
             b 0000000 -> 0001000 R c\n\
             c 0000000 -> 0001000 R d\n\
             d 0000000 -> 0001000 R e\n\
             e 0000000 -> 0001000 S query\n",
        );
        let mut s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        let call = loop {
            match step(&s, &p).unwrap() {
                StepOutcome::Next(n) => s = n,
                StepOutcome::Call { call, .. } => break call,
                other => panic!("unexpected {other:?}"),
            }
        };
        assert_eq!(call.index, 7);
        assert_eq!(call.param, TapeRep::empty());
        assert_eq!(call.ordinal, None);
    }

    #[test]
    fn undecodable_index_tape_faults() {
        // a lone 01 pair is a stray digit
        let p = prog("@total-default\nstart 0000000 -> 0000000 R a\na 0000000 -> 0001000 S query\n");
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        let mut s = match step(&s, &p).unwrap() {
            StepOutcome::Next(n) => n,
            other => panic!("unexpected {other:?}"),
        };
        s.config.head = 1;
        assert!(matches!(
            step(&s, &p),
            Err(MachineFault::UndecodableOracleTape { .. })
        ));
    }

    #[test]
    fn natural_tape_round_trip() {
        for n in [0u64, 1, 2, 3, 7, 8, 13, 40, 255, 1000] {
            assert_eq!(decode_natural_tape(&encode_natural_tape(n)).unwrap(), n);
        }
        let all_ones = TapeRep::new(vec![], true);
        assert!(decode_natural_tape(&all_ones).is_err());
    }

    #[test]
    fn ordinal_tape_round_trip() {
        for s in ["0", "1", "w", "w*2+1", "w^2+3"] {
            let o = parse_ordinal(s).unwrap();
            assert_eq!(
                decode_ordinal_tape(&encode_ordinal_tape(&o)).unwrap(),
                Some(o)
            );
        }
        assert_eq!(decode_ordinal_tape(&TapeRep::empty()).unwrap(), None);
        let all_ones = TapeRep::new(vec![], true);
        assert!(decode_ordinal_tape(&all_ones).is_err());
    }

    #[test]
    fn run_block_detects_the_idle_cycle() {
        let p = prog("@total-default\nstart 0000000 -> 0000000 S spin\n");
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        match run_block(&s, &p, 100).unwrap() {
            BlockOutcome::Cycle(c) => {
                assert_eq!((c.period, c.shift), (1, 0));
                assert_eq!(p.states[c.base.config.state], "spin");
            }
            other => panic!("expected a cycle, got {other:?}"),
        }
    }

    #[test]
    fn run_block_cycles_at_once_from_an_idle_limit_state() {
        let p = prog("@total-default\nstart 0000000 -> 0000000 S spin\n");
        let mut s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        s.config.state = ST_LIMIT;
        match run_block(&s, &p, 10).unwrap() {
            BlockOutcome::Cycle(c) => {
                assert_eq!((c.period, c.shift), (1, 0));
                assert_eq!(c.base.config.state, ST_LIMIT);
            }
            other => panic!("expected an immediate cycle, got {other:?}"),
        }
    }

    #[test]
    fn run_block_returns_halt() {
        let p = prog(
            "@total-default\nstart 0000000 -> 0010000 R a\na 0000000 -> 0010000 R b\nb 0000000 -> 0010000 S halt\n",
        );
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        match run_block(&s, &p, 100).unwrap() {
            BlockOutcome::Halted { output, last } => {
                assert_eq!(output, TapeRep::new(vec![(true, 3)], false));
                assert_eq!(last.clock, Ordinal::from_nat(3).unwrap());
            }
            other => panic!("expected halt, got {other:?}"),
        }
    }

    #[test]
    fn run_block_detects_the_sweeper_lasso() {
        let p = prog("@total-default\nstart 0000000 -> 0100000 R start\n");
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        match run_block(&s, &p, 100).unwrap() {
            BlockOutcome::Cycle(c) => {
                assert_eq!((c.period, c.shift), (1, 1));
            }
            other => panic!("expected a translation lasso, got {other:?}"),
        }
    }

    #[test]
    fn run_block_budget_exhausts() {
        // a strict counter the detector cannot fold: head bounces on a
        // growing block of ones with a moving hole, defeating both tiers
        let p = prog(
            "@total-default\n\
             start 0000000 -> 0100000 R a\n\
             a 0000000 -> 0100000 L b\n\
             a 0100000 -> 0100000 R a\n\
             b 0100000 -> 0000000 R c\n\
             b 0000000 -> 0000000 L b\n\
             c 0100000 -> 0100000 R c\n\
             c 0000000 -> 0100000 L b\n",
        );
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        // whatever this contraption does, a tiny budget must stop it honestly
        match run_block(&s, &p, 7).unwrap() {
            BlockOutcome::BudgetExhausted { last } => {
                assert_eq!(last.clock, Ordinal::from_nat(7).unwrap());
            }
            BlockOutcome::Cycle(_) | BlockOutcome::Halted { .. } | BlockOutcome::OracleCall { .. } => {}
        }
    }

    #[test]
    fn extrapolate_flip_cycle_takes_lim_sup() {
        let p = prog(
            "@total-default\nstart 0000000 -> 0100000 S start\nstart 0100000 -> 0000000 S start\n",
        );
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        let cycle = match run_block(&s, &p, 100).unwrap() {
            BlockOutcome::Cycle(c) => c,
            other => panic!("expected a cycle, got {other:?}"),
        };
        assert_eq!(cycle.period, 2);
        let limit = extrapolate_limit(&p, &cycle).unwrap();
        // lim sup of the alternating cell is 1; the cycle is escaped
        assert!(limit.config.tapes[TapeRole::Scratch as usize].read(0));
        assert_eq!(limit.config.state, ST_LIMIT);
        assert_eq!(limit.config.head, 0);
        assert_eq!(limit.clock, Ordinal::omega());
        assert_ne!(limit.config, cycle.base.config);
    }

    #[test]
    fn extrapolate_sweeper_gives_all_ones() {
        let p = prog("@total-default\nstart 0000000 -> 0100000 R start\n");
        let (cycle, limit) = first_limit(&p, &TapeRep::empty(), 100).unwrap().unwrap();
        assert_eq!(cycle.shift, 1);
        assert_eq!(
            limit.config.tapes[TapeRole::Scratch as usize],
            TapeRep::new(vec![], true)
        );
        assert_eq!(limit.config.head, 0);
        assert_eq!(limit.clock, Ordinal::omega());
        // untouched tapes stay constantly zero at the limit
        assert_eq!(limit.config.tapes[TapeRole::Output as usize], TapeRep::empty());
    }

    #[test]
    fn striped_sweeper_is_not_extrapolated() {
        use crate::feedback::Verdict;
        // writes the spatial pattern 10 rightward forever: the limit tape
        // has no eventually-constant form, so no cycle may be accepted
        let p = prog(
            "@total-default\nstart 0000000 -> 0100000 R b\nb 0000000 -> 0000000 R start\n",
        );
        let s = initial_snapshot(&TapeRep::empty(), &StartTapes::default());
        match run_block(&s, &p, 500).unwrap() {
            BlockOutcome::BudgetExhausted { .. } => {}
            other => panic!("striped sweep must stay undecided, got {other:?}"),
        }
        let mut b = budgets();
        b.max_steps_per_block = 1024;
        let v = run(&p, &TapeRep::empty(), &b, |_| OracleAnswer::Unknown);
        assert_eq!(
            v,
            Verdict::Unknown {
                reason: UnknownReason::StepBudget,
                detail: None
            }
        );
    }

    #[test]
    fn run_certifies_idle_divergence() {
        use crate::feedback::Verdict;
        let p = prog("@total-default\nstart 0000000 -> 0000000 S spin\n");
        let v = run(&p, &TapeRep::empty(), &budgets(), |_| OracleAnswer::Unknown);
        assert_eq!(v, Verdict::Diverges);
    }

    #[test]
    fn run_respects_step_budget() {
        use crate::feedback::Verdict;
        // halts in 20 steps, budget allows 10 per block
        let mut src = String::from("@total-default\n");
        for i in 0..20 {
            let st = if i == 0 { "start".into() } else { format!("s{i}") };
            let next = if i == 19 { "halt".into() } else { format!("s{}", i + 1) };
            src.push_str(&format!("{st} 0000000 -> 0010000 R {next}\n"));
        }
        let p = prog(&src);
        let mut b = budgets();
        b.max_steps_per_block = 10;
        let v = run(&p, &TapeRep::empty(), &b, |_| OracleAnswer::Unknown);
        assert_eq!(
            v,
            Verdict::Unknown {
                reason: UnknownReason::StepBudget,
                detail: None
            }
        );
        let v = run(&p, &TapeRep::empty(), &budgets(), |_| OracleAnswer::Unknown);
        assert!(matches!(v, Verdict::Converges(_)));
    }

    #[test]
    fn clock_cap_reports_unknown() {
        use crate::feedback::Verdict;
        let p = prog("@total-default\nstart 0000000 -> 0000000 S spin\n");
        let mut b = budgets();
        b.clock_cap = parse_ordinal("w").unwrap();
        let v = run(&p, &TapeRep::empty(), &b, |_| OracleAnswer::Unknown);
        assert_eq!(
            v,
            Verdict::Unknown {
                reason: UnknownReason::ClockCap,
                detail: None
            }
        );
    }
}
