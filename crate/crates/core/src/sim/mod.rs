//! Seeded Monte Carlo simulation of virtual learners.
//!
//! Player `i` of a cohort owns a ChaCha8 stream seeded with
//! [`child_seed`]`(seed, i)`. It first draws its initial knowledge level (only
//! for a `uniform` distribution), then plays the scenario. Players run in
//! parallel and are aggregated in player order, so reports do not depend on
//! the number of worker threads.

mod cohort;
mod player;
mod profile;
mod summary;

pub use cohort::{
    child_seed, parse_cohort, simulate_cohort, simulate_cohort_with_threads, splitmix64, Attainment, Cohort,
    CohortError, CohortGroup, GainStats, SimulationReport,
};
pub use player::{award, simulate_player, PlayTrace, SimError, SimParams, Step, ValidatedScenario};
pub use profile::{BehaviorProfile, KnowledgeDist, KnowledgeState, ProfileError, PRESETS};
pub use summary::{gain_summary_json_lines, gain_summary_records, gain_summary_text};
