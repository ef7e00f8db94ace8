//! Rank-then-average leaderboards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::report::{aggregate_columns, Aggregate, CaseRecord, ParsedReport};
use crate::error::{Error, Result};
use crate::metrics::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Larger values rank first.
    Max,
    /// Smaller values rank first.
    Min,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub direction: Direction,
}

impl Column {
    /// Error-like columns (Betti, distances) rank ascending, others descending.
    pub fn infer(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        let direction = if ["error", "betti", "hd", "distance"].iter().any(|k| lower.contains(k)) {
            Direction::Min
        } else {
            Direction::Max
        };
        Column {
            name: name.to_string(),
            direction,
        }
    }
}

impl FromStr for Column {
    type Err = Error;

    /// `name`, `name:max` or `name:min`.
    fn from_str(s: &str) -> Result<Self> {
        match s.rsplit_once(':') {
            Some((name, "max")) if !name.is_empty() => Ok(Column {
                name: name.into(),
                direction: Direction::Max,
            }),
            Some((name, "min")) if !name.is_empty() => Ok(Column {
                name: name.into(),
                direction: Direction::Min,
            }),
            Some(_) => Err(Error::Ranking(format!("bad column {s:?}; expected name[:max|min]"))),
            None if !s.is_empty() => Ok(Column::infer(s)),
            None => Err(Error::Ranking("empty column name".into())),
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.direction {
            Direction::Max => "max",
            Direction::Min => "min",
        };
        write!(f, "{}:{d}", self.name)
    }
}

/// Dice, clDice and Betti-0 error of the task's suite, equally weighted.
pub fn default_columns(task: Task) -> Vec<Column> {
    let names: [&str; 3] = match task {
        Task::Binary => ["binary_dice", "binary_cldice", "binary_betti0_error"],
        Task::Multiclass => ["class_avg_dice", "binary_cldice", "class_avg_betti0_error"],
    };
    names.iter().map(|n| Column::infer(n)).collect()
}

/// One team's per-case records and their column aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamResult {
    pub team: String,
    pub cases: Vec<Map<String, Value>>,
    pub aggregates: BTreeMap<String, Aggregate>,
}

impl TeamResult {
    pub fn from_records(team: impl Into<String>, records: &[CaseRecord]) -> Self {
        Self::from_flat(team, records.iter().map(CaseRecord::flat).collect())
    }

    /// Aggregates are recomputed from the per-case records.
    pub fn from_report(team: impl Into<String>, report: ParsedReport) -> Self {
        Self::from_flat(team, report.cases)
    }

    fn from_flat(team: impl Into<String>, cases: Vec<Map<String, Value>>) -> Self {
        TeamResult {
            team: team.into(),
            aggregates: aggregate_columns(&cases),
            cases,
        }
    }

    /// Value of `column` for each successful case that has one.
    pub fn case_values(&self, column: &str) -> BTreeMap<String, f64> {
        self.cases
            .iter()
            .filter(|c| c.get("status").and_then(Value::as_str) == Some("ok"))
            .filter_map(|c| {
                let id = c.get("case_id")?.as_str()?.to_string();
                Some((id, c.get(column)?.as_f64()?))
            })
            .collect()
    }
}

/// Ranks `values` (1 = best); tied values share the mean of their positions.
pub fn rank_values(values: &[f64], direction: Direction) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let c = values[a].total_cmp(&values[b]);
        if direction == Direction::Max {
            c.reverse()
        } else {
            c
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMode {
    /// Rank the per-team column means.
    #[default]
    Aggregate,
    /// Rank teams within every case, then average those ranks per column.
    PerCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub position: usize,
    pub team: String,
    pub average_rank: f64,
    /// Column mean per column name.
    pub values: BTreeMap<String, f64>,
    pub ranks: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub mode: RankMode,
    pub columns: Vec<Column>,
    /// Sorted by ascending average rank, then team name.
    pub entries: Vec<LeaderboardEntry>,
}

impl Leaderboard {
    pub fn order(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.team.as_str()).collect()
    }

    pub fn entry(&self, team: &str) -> Option<&LeaderboardEntry> {
        self.entries.iter().find(|e| e.team == team)
    }
}

pub fn rank_teams(teams: &[TeamResult], columns: &[Column], mode: RankMode) -> Result<Leaderboard> {
    if teams.len() < 2 {
        return Err(Error::Ranking(format!("need at least two teams, got {}", teams.len())));
    }
    if columns.is_empty() {
        return Err(Error::Ranking("no metric columns".into()));
    }
    let names: BTreeSet<&str> = teams.iter().map(|t| t.team.as_str()).collect();
    if names.len() != teams.len() {
        return Err(Error::Ranking("team names must be unique".into()));
    }

    let n = teams.len();
    let mut values = vec![BTreeMap::new(); n];
    let mut ranks = vec![BTreeMap::new(); n];
    for col in columns {
        let means: Vec<f64> = teams
            .iter()
            .map(|t| {
                t.aggregates
                    .get(&col.name)
                    .map(|a| a.mean)
                    .ok_or_else(|| Error::Ranking(format!("team {} has no column {}", t.team, col.name)))
            })
            .collect::<Result<_>>()?;
        let col_ranks = match mode {
            RankMode::Aggregate => rank_values(&means, col.direction),
            RankMode::PerCase => per_case_ranks(teams, col)?,
        };
        for i in 0..n {
            values[i].insert(col.name.clone(), means[i]);
            ranks[i].insert(col.name.clone(), col_ranks[i]);
        }
    }

    let mut entries: Vec<LeaderboardEntry> = teams
        .iter()
        .enumerate()
        .map(|(i, t)| LeaderboardEntry {
            position: 0,
            team: t.team.clone(),
            average_rank: ranks[i].values().sum::<f64>() / columns.len() as f64,
            values: std::mem::take(&mut values[i]),
            ranks: std::mem::take(&mut ranks[i]),
        })
        .collect();
    entries.sort_by(|a, b| a.average_rank.total_cmp(&b.average_rank).then_with(|| a.team.cmp(&b.team)));
    for (i, e) in entries.iter_mut().enumerate() {
        e.position = i + 1;
    }
    Ok(Leaderboard {
        mode,
        columns: columns.to_vec(),
        entries,
    })
}

fn per_case_ranks(teams: &[TeamResult], col: &Column) -> Result<Vec<f64>> {
    let per_team: Vec<BTreeMap<String, f64>> = teams.iter().map(|t| t.case_values(&col.name)).collect();
    let common: Vec<&String> = per_team[0]
        .keys()
        .filter(|id| per_team.iter().all(|m| m.contains_key(*id)))
        .collect();
    if common.is_empty() {
        return Err(Error::Ranking(format!("no case has column {} for every team", col.name)));
    }
    let mut sums = vec![0.0; teams.len()];
    for id in &common {
        let vals: Vec<f64> = per_team.iter().map(|m| m[*id]).collect();
        for (s, r) in sums.iter_mut().zip(rank_values(&vals, col.direction)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / common.len() as f64).collect())
}

/// Tab-separated leaderboard.
pub fn format_leaderboard(lb: &Leaderboard) -> String {
    let mut header = vec!["position".to_string(), "team".into(), "average_rank".into()];
    for c in &lb.columns {
        header.push(c.name.clone());
        header.push(format!("rank.{}", c.name));
    }
    let mut out = header.join("\t");
    out.push('\n');
    for e in &lb.entries {
        let mut row = vec![e.position.to_string(), e.team.clone(), format!("{:.4}", e.average_rank)];
        for c in &lb.columns {
            row.push(format!("{:.6}", e.values[&c.name]));
            row.push(format!("{}", e.ranks[&c.name]));
        }
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
