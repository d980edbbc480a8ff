//! Simulator for infinite-time Turing machines with feedback oracles.
//!
//! Machines run over a symbolic transfinite clock: oracle-free blocks of
//! successor steps are closed off by cycle detection, limits are taken by
//! lim-sup extrapolation, and divergence is certified only when a limit
//! snapshot provably re-enters itself. Oracle calls spawn a tree of
//! subcomputations whose ill-foundedness (freezing) is detected through
//! repeated-call witnesses. The ordinal-bounded and parallel disciplines,
//! the strong jump, the least-fixed-point semantics, and the loop-analysis
//! toolbox are built on the same runner, all under explicit budgets with
//! honest "unknown" verdicts when a budget runs out.

pub mod analysis;
pub mod feedback;
pub mod fixpoint;
pub mod frontend;
pub mod machine;
pub mod ordinal;
pub mod tape;
pub mod variants;
