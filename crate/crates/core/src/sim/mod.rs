//! Scenario assembly, closed-loop episodes under a solved policy, Monte
//! Carlo aggregation and parameter sweeps.

mod episode;
mod monte_carlo;
mod scenario;
mod sweep;
mod topology;

pub use episode::{run_episode, EpisodeOptions, Trace, TraceRow, TRACE_CSV_HEADER};
pub use monte_carlo::{episode_seed, half_width, monte_carlo, LinkSummary, MonteCarloSummary};
pub use scenario::{RunSpec, Scenario, SolvedScenario};
pub use sweep::{sweep, SweepAxis, SweepOutcome, SweepPoint};
pub use topology::{build_topology, reference_link, TopologySpec};
