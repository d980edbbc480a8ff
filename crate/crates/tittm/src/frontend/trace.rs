//! Trace export: a JSON record of one run (stable key order for golden
//! files) and a DOT rendering of the subcomputation tree with siblings in
//! creation order, so the rightmost branch is the rightmost path drawn.

use std::fmt::Write as _;

use serde::Serialize;

use crate::feedback::{export_tree, SubTree, Verdict};
use crate::frontend::store::ProgramStore;
use crate::variants::Budgets;

#[derive(Debug, Serialize)]
pub struct Trace {
    pub verdict: String,
    pub clock: String,
    pub budgets: TraceBudgets,
    pub tree: Vec<TraceNode>,
    pub tapes: TraceTapes,
}

#[derive(Debug, Serialize)]
pub struct TraceBudgets {
    pub max_steps: u64,
    pub max_limits: u64,
    pub max_depth: u64,
    pub clock_cap: String,
    pub max_parallel: u64,
    pub max_lfp_iters: u64,
}

#[derive(Debug, Serialize)]
pub struct TraceNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub label: String,
    pub status: String,
    pub clock: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct TraceTapes {
    pub output: String,
}

pub fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Converges(_) => "converges".into(),
        Verdict::Diverges => "diverges".into(),
        Verdict::Freezes(_) => "freezes".into(),
        Verdict::Unknown { reason, detail } => match detail {
            Some(d) => format!("unknown:{} ({d})", reason.tag()),
            None => format!("unknown:{}", reason.tag()),
        },
    }
}

pub fn build_trace(
    verdict: &Verdict,
    tree: &SubTree,
    store: &ProgramStore,
    budgets: &Budgets,
) -> Trace {
    let root_clock = tree.nodes[0]
        .final_snapshot
        .as_ref()
        .map(|s| s.clock.to_string())
        .unwrap_or_else(|| "0".into());
    let output = match verdict {
        Verdict::Converges(t) => t.to_string(),
        _ => tree.nodes[0]
            .final_snapshot
            .as_ref()
            .map(|s| s.output().to_string())
            .unwrap_or_else(|| "| tail 0".into()),
    };
    Trace {
        verdict: verdict_text(verdict),
        clock: root_clock,
        budgets: TraceBudgets {
            max_steps: budgets.max_steps_per_block,
            max_limits: budgets.max_limit_stages,
            max_depth: budgets.max_depth,
            clock_cap: budgets.clock_cap.to_string(),
            max_parallel: budgets.max_parallel,
            max_lfp_iters: budgets.max_lfp_iters,
        },
        tree: export_tree(tree, store)
            .into_iter()
            .map(|r| TraceNode {
                id: r.id,
                parent: r.parent,
                label: r.label,
                status: r.status.to_string(),
                clock: r.clock.map(|c| c.to_string()),
            })
            .collect(),
        tapes: TraceTapes { output },
    }
}

pub fn trace_json(trace: &Trace) -> String {
    let mut s = serde_json::to_string_pretty(trace).expect("trace serialization cannot fail");
    s.push('\n');
    s
}

/// DOT rendering: nodes labeled `id:status`, edges in creation order so a
/// renderer keeps siblings left-to-right.
pub fn tree_dot(tree: &SubTree, store: &ProgramStore) -> String {
    let mut out = String::from("digraph subcomputations {\n  rankdir=TB;\n  node [shape=box];\n");
    for rec in export_tree(tree, store) {
        let _ = writeln!(
            out,
            "  n{} [label=\"{}:{}\\n{}\"];",
            rec.id,
            rec.id,
            rec.status,
            rec.label.replace('"', "'"),
        );
    }
    for node in &tree.nodes {
        for &child in &node.children {
            let _ = writeln!(out, "  n{} -> n{};", node.id, child);
        }
    }
    out.push_str("}\n");
    out
}
