//! Batch evaluation, leaderboards, topology reports and phantom fixtures:
//! everything the command line drives.

mod cases;
mod config;
mod fixture;
mod rank;
mod report;
mod topo;

pub use cases::{case_id_of, load_pair, paired_case_ids, run_cases, CaseSource, DirSource, MemorySource};
pub use config::Config;
pub use fixture::{write_phantom_fixture, FixtureFiles};
pub use rank::{
    default_columns, format_leaderboard, rank_teams, rank_values, Column, Direction, Leaderboard, LeaderboardEntry, RankMode,
    TeamResult,
};
pub use report::{
    aggregate_columns, evaluate_batch, parse_report, report_json, report_table, to_json_string, Aggregate, CaseRecord,
    ParsedReport, SCHEMA_VERSION,
};
pub use topo::{analyze_batch, analyze_case, CaseTopology, TopologyReport};
