//! Baselines, sweeps and the word-diversity index.

mod diversity;
mod heuristic;
mod sweep;

pub use diversity::{diversity_games, diversity_index, jaccard, DiversityReport};
pub use heuristic::{
    heuristic_baseline, ForcedWord, HeuristicBaseline, HeuristicConfig, WordScore,
};
pub use sweep::{
    guest_sweep, summarize, word_sweep, SweepKind, SweepPolicies, SweepResult, SweepRow,
    SweepSummary,
};
