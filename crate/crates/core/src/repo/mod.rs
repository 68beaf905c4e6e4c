//! Randomized-ensemble policy optimization (REPO) for linear and tabular MDPs.

mod engine;
mod known;
mod params;
mod softmax;

pub use engine::{epoch_bound, po_backward_pass, run, run_inspected, PoInputs, PoMember, RepoEngine, RepoRun, RepoStep, RepoTrace};
pub use known::{KnownSets, UniformWarmup, WarmupOutcome, WarmupRoutine};
pub use params::{RepoMode, RepoParams};
pub use softmax::{hedge_update, omd_update, softmax_in_place, Hedge, SoftmaxPolicy};
