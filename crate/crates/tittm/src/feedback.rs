//! The tree-of-subcomputations semantics.
//!
//! Every oracle call spawns a child node to the right of its siblings and
//! control passes down; a child's converged/diverged verdict is fed back and
//! control returns to the parent. A call structurally identical to one of
//! its ancestors certifies freezing: determinism forces the rightmost branch
//! to descend forever, so the chain plus the repeated call is a checkable
//! witness. Plain budget exhaustion is never reported as freezing — only an
//! exact certificate is.

use crate::machine::{
    EngineEvent, FaultKind, NodeEngine, NodeOutcome, OracleCall, Snapshot, StartTapes,
    UnknownReason,
};
use crate::ordinal::{ord_cmp, Ordinal};
use crate::tape::TapeRep;
use crate::variants::Budgets;
use crate::frontend::store::ProgramStore;

/// Four-valued outcome of a feedback evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Converges(TapeRep),
    Diverges,
    Freezes(Vec<OracleCall>),
    Unknown {
        reason: UnknownReason,
        detail: Option<String>,
    },
}

impl Verdict {
    pub fn unknown(reason: UnknownReason) -> Self {
        Verdict::Unknown {
            reason,
            detail: None,
        }
    }

    pub fn class_name(&self) -> &'static str {
        match self {
            Verdict::Converges(_) => "converges",
            Verdict::Diverges => "diverges",
            Verdict::Freezes(_) => "freezes",
            Verdict::Unknown { .. } => "unknown",
        }
    }

    pub fn is_decided(&self) -> bool {
        matches!(self, Verdict::Converges(_) | Verdict::Diverges | Verdict::Freezes(_))
    }

    /// CLI contract: 0 converges, 1 diverges, 2 freezes, 3 unknown.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Converges(_) => 0,
            Verdict::Diverges => 1,
            Verdict::Freezes(_) => 2,
            Verdict::Unknown { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Active,
    Converged,
    Diverged,
    Frozen,
    Unknown,
}

impl NodeStatus {
    pub fn name(self) -> &'static str {
        match self {
            NodeStatus::Active => "active",
            NodeStatus::Converged => "converged",
            NodeStatus::Diverged => "diverged",
            NodeStatus::Frozen => "frozen",
            NodeStatus::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone)]
pub enum NodeLabel {
    Root { program: u64, input: TapeRep },
    Call(OracleCall),
}

impl NodeLabel {
    pub fn as_call(&self) -> OracleCall {
        match self {
            NodeLabel::Root { program, input } => OracleCall::plain(*program, input.clone()),
            NodeLabel::Call(c) => c.clone(),
        }
    }

    pub fn digest(&self, store: &ProgramStore) -> String {
        let call = self.as_call();
        match store.get(call.index) {
            Some(p) => format!("{} {}", p.name, call.digest()),
            None => call.digest(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: usize,
    pub label: NodeLabel,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub status: NodeStatus,
    pub final_snapshot: Option<Snapshot>,
}

/// The materialized tree of subcomputations: nodes in creation order,
/// children ordered left-to-right by creation time.
#[derive(Debug, Clone)]
pub struct SubTree {
    pub nodes: Vec<TreeNode>,
    pub control: usize,
}

impl SubTree {
    fn new_root(label: NodeLabel) -> SubTree {
        SubTree {
            nodes: vec![TreeNode {
                id: 0,
                label,
                parent: None,
                children: Vec::new(),
                status: NodeStatus::Active,
                final_snapshot: None,
            }],
            control: 0,
        }
    }

    fn add_child(&mut self, parent: usize, label: NodeLabel) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            label,
            parent: Some(parent),
            children: Vec::new(),
            status: NodeStatus::Active,
            final_snapshot: None,
        });
        self.nodes[parent].children.push(id);
        self.control = id;
        id
    }

    fn settle(&mut self, id: usize, status: NodeStatus, snapshot: Option<Snapshot>) {
        self.nodes[id].status = status;
        if snapshot.is_some() {
            self.nodes[id].final_snapshot = snapshot;
        }
    }

    /// Calls along the path from the root to `id`, inclusive.
    pub fn chain_to(&self, id: usize) -> Vec<OracleCall> {
        let mut rev = Vec::new();
        let mut cur = Some(id);
        while let Some(i) = cur {
            rev.push(self.nodes[i].label.as_call());
            cur = self.nodes[i].parent;
        }
        rev.reverse();
        rev
    }
}

/// One record per node, in creation order — the deterministic serialization
/// consumed by the trace writer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub label: String,
    pub status: &'static str,
    pub clock: Option<Ordinal>,
}

pub fn export_tree(tree: &SubTree, store: &ProgramStore) -> Vec<TreeRecord> {
    tree.nodes
        .iter()
        .map(|n| TreeRecord {
            id: n.id,
            parent: n.parent,
            label: n.label.digest(store),
            status: n.status.name(),
            clock: n.final_snapshot.as_ref().map(|s| s.clock.clone()),
        })
        .collect()
}

/// Oracle disciplines the one tree evaluator can run under.
#[derive(Debug, Clone)]
pub(crate) enum Policy {
    /// Full feedback semantics: recursion with freezing detection.
    Feedback,
    /// Strong-jump discipline: this node's calls run as plain machines; a
    /// grandchild call is a DepthViolation.
    DepthOne { at_child: bool },
    /// Ordinal discipline: a call must write some β < α; `alpha: None` is
    /// the iterated-machine root, which may launch any ordinal at all.
    Ordinal { alpha: Option<Ordinal> },
}

pub(crate) struct Evaluator<'s> {
    pub store: &'s ProgramStore,
    pub budgets: Budgets,
    pub tree: SubTree,
}

impl<'s> Evaluator<'s> {
    pub(crate) fn new(store: &'s ProgramStore, budgets: &Budgets, root: NodeLabel) -> Self {
        Evaluator {
            store,
            budgets: budgets.clone(),
            tree: SubTree::new_root(root),
        }
    }

    pub(crate) fn eval_node(
        &mut self,
        node: usize,
        call: &OracleCall,
        chain: &mut Vec<OracleCall>,
        policy: &Policy,
    ) -> Verdict {
        self.eval_node_with_param(node, call, None, chain, policy)
    }

    pub(crate) fn eval_node_with_param(
        &mut self,
        node: usize,
        call: &OracleCall,
        param_tape: Option<&TapeRep>,
        chain: &mut Vec<OracleCall>,
        policy: &Policy,
    ) -> Verdict {
        let program = match self.store.get(call.index) {
            Some(p) => p,
            None => {
                let v = Verdict::Unknown {
                    reason: UnknownReason::Fault(FaultKind::UndecodableOracleTape),
                    detail: Some(format!("no program with index {}", call.index)),
                };
                self.tree.settle(node, NodeStatus::Unknown, None);
                return v;
            }
        };
        // the call's third-tape content (the β the caller wrote) is passed
        // to the child like a parameter; the root of a run starts blank
        let extra = StartTapes {
            param: param_tape.cloned(),
            ordinal: call.ordinal.clone(),
            blank: Some(call.blank.clone()),
        };
        let mut engine = NodeEngine::new(program, &call.param, &extra, &self.budgets);
        loop {
            match engine.next_event() {
                EngineEvent::Done(outcome) => {
                    let snap = engine.snapshot().clone();
                    let (status, verdict) = match outcome {
                        NodeOutcome::Converged { output, .. } => {
                            (NodeStatus::Converged, Verdict::Converges(output))
                        }
                        NodeOutcome::Diverged { .. } => (NodeStatus::Diverged, Verdict::Diverges),
                        NodeOutcome::Unknown { reason, detail, .. } => (
                            NodeStatus::Unknown,
                            Verdict::Unknown { reason, detail },
                        ),
                    };
                    self.tree.settle(node, status, Some(snap));
                    self.tree.control = node;
                    return verdict;
                }
                EngineEvent::NeedAnswer(child_call) => {
                    match self.answer_call(node, child_call, chain, policy) {
                        Ok(answer) => {
                            engine.deliver_answer(answer);
                            self.tree.control = node;
                        }
                        Err(verdict) => {
                            let status = match &verdict {
                                Verdict::Freezes(_) => NodeStatus::Frozen,
                                _ => NodeStatus::Unknown,
                            };
                            self.tree
                                .settle(node, status, Some(engine.snapshot().clone()));
                            return verdict;
                        }
                    }
                }
            }
        }
    }

    /// Evaluate one child call to a yes/no answer, or an error verdict the
    /// parent must propagate (freezing, budget exhaustion, violations).
    fn answer_call(
        &mut self,
        parent: usize,
        mut call: OracleCall,
        chain: &mut Vec<OracleCall>,
        policy: &Policy,
    ) -> Result<bool, Verdict> {
        let child_policy = match policy {
            Policy::Feedback => Policy::Feedback,
            Policy::DepthOne { at_child: false } => Policy::DepthOne { at_child: true },
            Policy::DepthOne { at_child: true } => {
                let child = self.tree.add_child(parent, NodeLabel::Call(call.clone()));
                self.tree.settle(child, NodeStatus::Unknown, None);
                return Err(Verdict::Unknown {
                    reason: UnknownReason::Fault(FaultKind::DepthViolation),
                    detail: Some(format!(
                        "depth-1 child attempted oracle call {}",
                        call.digest()
                    )),
                });
            }
            Policy::Ordinal { alpha } => {
                // a blank third tape is the empty term list, the coding of 0
                let beta = call.ordinal.clone().unwrap_or_else(Ordinal::zero);
                if let Some(a) = alpha {
                    if ord_cmp(&beta, a) != std::cmp::Ordering::Less {
                        let child = self.tree.add_child(parent, NodeLabel::Call(call.clone()));
                        self.tree.settle(child, NodeStatus::Unknown, None);
                        return Err(Verdict::Unknown {
                            reason: UnknownReason::Fault(FaultKind::OrdinalViolation),
                            detail: Some(format!("call wrote β = {beta} but α = {a} requires β < α")),
                        });
                    }
                }
                Policy::Ordinal { alpha: Some(beta) }
            }
        };

        // ordinary machine-made calls never set the child's blank tape
        call.blank = TapeRep::empty();

        if matches!(policy, Policy::Feedback) {
            if let Some(pos) = chain.iter().position(|c| c == &call) {
                let child = self.tree.add_child(parent, NodeLabel::Call(call.clone()));
                self.tree.settle(child, NodeStatus::Frozen, None);
                let mut witness = chain[pos..].to_vec();
                witness.push(call);
                return Err(Verdict::Freezes(witness));
            }
        }

        if chain.len() as u64 >= self.budgets.max_depth {
            let child = self.tree.add_child(parent, NodeLabel::Call(call.clone()));
            self.tree.settle(child, NodeStatus::Unknown, None);
            return Err(Verdict::unknown(UnknownReason::DepthBudget));
        }

        let child = self.tree.add_child(parent, NodeLabel::Call(call.clone()));
        chain.push(call.clone());
        let verdict = self.eval_node(child, &call, chain, &child_policy);
        chain.pop();
        match verdict {
            Verdict::Converges(_) => Ok(true),
            Verdict::Diverges => Ok(false),
            other => Err(other),
        }
    }
}

/// Evaluate a program under the feedback semantics.
pub fn eval_feedback(
    store: &ProgramStore,
    program: u64,
    input: &TapeRep,
    budgets: &Budgets,
) -> (Verdict, SubTree) {
    eval_feedback_call(store, &OracleCall::plain(program, input.clone()), budgets, &[])
}

/// Evaluate a call with an explicit ancestor chain, as when the call sits
/// below already-running computations (the chain is part of freezing
/// detection: a call identical to an ancestor freezes immediately).
pub fn eval_feedback_call(
    store: &ProgramStore,
    call: &OracleCall,
    budgets: &Budgets,
    ancestors: &[OracleCall],
) -> (Verdict, SubTree) {
    let root = NodeLabel::Root {
        program: call.index,
        input: call.param.clone(),
    };
    let mut ev = Evaluator::new(store, budgets, root);
    let mut chain: Vec<OracleCall> = ancestors.to_vec();
    if let Some(pos) = chain.iter().position(|c| c == call) {
        let mut witness = chain[pos..].to_vec();
        witness.push(call.clone());
        ev.tree.settle(0, NodeStatus::Frozen, None);
        return (Verdict::Freezes(witness), ev.tree);
    }
    chain.push(call.clone());
    let verdict = ev.eval_node(0, call, &mut chain, &Policy::Feedback);
    (verdict, ev.tree)
}
