use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cowtopo::harness::{
    analyze_batch, default_columns, evaluate_batch, format_leaderboard, parse_report, rank_teams, report_json, report_table,
    to_json_string, write_phantom_fixture, Column, Config, DirSource, RankMode, TeamResult, TopologyReport,
};
use cowtopo::metrics::{Connectivity, Task};
use cowtopo::phantom::{AcomState, Corruption, PhantomSpec, SegmentState};
use cowtopo::volume::{load_label_map, read_roi_file, LabelMap, RoiBox};

#[derive(Parser)]
#[command(name = "cowtopo", version, about = "Topology-aware evaluation of Circle of Willis segmentations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Voxel connectivity for components and skeleton checks (6, 18 or 26).
    #[arg(long, global = true)]
    connectivity: Option<Connectivity>,
    /// TOML file with a [labels] table mapping vessel names to label ids.
    #[arg(long, global = true)]
    label_map: Option<PathBuf>,
    /// JSON-lines ROI file with one {"case", "min", "size"} record per case.
    #[arg(long, global = true)]
    roi: Option<PathBuf>,
    /// Metric suite: binary or multiclass.
    #[arg(long, global = true)]
    task: Option<Task>,
    /// Number of cases evaluated in parallel.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Score every case of a prediction directory against the references.
    Evaluate(PairArgs),
    /// Build a rank-then-average leaderboard from evaluation reports.
    Rank(RankArgs),
    /// Detection counts, variant matching and group Dice for a batch.
    TopoReport(TopoArgs),
    /// Write a synthetic phantom fixture, optionally with a corrupted prediction.
    Phantom(PhantomArgs),
}

#[derive(Args)]
struct PairArgs {
    /// Directory of reference <case>.nii[.gz] volumes.
    #[arg(long)]
    gt: PathBuf,
    /// Directory of predicted volumes with the same file names.
    #[arg(long)]
    pred: PathBuf,
    /// JSON report path; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write a tab-separated table.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct TopoArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// JSON report path.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Plain-text summary path; standard output when omitted.
    #[arg(long)]
    text: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    /// Evaluation reports as TEAM=PATH, or PATH to name the team after the file.
    #[arg(required = true)]
    reports: Vec<String>,
    /// Comma-separated columns, each NAME[:max|min]; the task's suite by default.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<Column>,
    /// Rank within each case and average, instead of ranking column means.
    #[arg(long)]
    per_case: bool,
    /// Table path; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the leaderboard as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PhantomArgs {
    /// Existing output directory.
    #[arg(long, short)]
    out: PathBuf,
    /// Case id used for file names.
    #[arg(long, default_value = "phantom")]
    id: String,
    /// Phantom spec TOML; the flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    acom: Option<AcomState>,
    #[arg(long)]
    third_a2: bool,
    #[arg(long)]
    no_r_pcom: bool,
    #[arg(long)]
    no_l_pcom: bool,
    #[arg(long)]
    r_a1: Option<SegmentState>,
    #[arg(long)]
    l_a1: Option<SegmentState>,
    #[arg(long)]
    r_p1: Option<SegmentState>,
    #[arg(long)]
    l_p1: Option<SegmentState>,
    #[arg(long)]
    r_fetal: bool,
    #[arg(long)]
    l_fetal: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid size as X,Y,Z voxels.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    dims: Option<Vec<usize>>,
    /// Voxel spacing as X,Y,Z millimetres.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    spacing: Option<Vec<f64>>,
    /// Corruption applied to the prediction, e.g. break:Acom:1.5, drop:L-Pcom,
    /// blob:BA:1:0,8,-12, swap:R-ACA:L-ACA:x,y,z:sx,sy,sz, morph:BA:+1.
    /// Repeatable; applied in order.
    #[arg(long = "corrupt")]
    corruptions: Vec<Corruption>,
}

/// Failure that ends the run, with its exit code.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

const EXIT_PARTIAL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

struct Settings {
    config: Config,
    map: LabelMap,
    rois: Option<BTreeMap<String, RoiBox>>,
    jobs: usize,
}

fn settings(g: &Global) -> Result<Settings, Fatal> {
    let mut config = Config::load(g.config.as_deref())?;
    if let Some(c) = g.connectivity {
        config.connectivity = c;
    }
    if let Some(t) = g.task {
        config.task = t;
    }
    let map = match &g.label_map {
        Some(p) => load_label_map(Some(p))?,
        None => config.label_map()?,
    };
    let rois = g.roi.as_deref().map(read_roi_file).transpose()?;
    let jobs = match g.jobs {
        Some(0) => return Err(Fatal("--jobs must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(Settings { config, map, rois, jobs })
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Fatal> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Fatal(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Fatal> {
    let s = settings(&cli.global)?;
    match cli.command {
        Command::Evaluate(a) => evaluate(&s, a),
        Command::Rank(a) => rank(&s, a),
        Command::TopoReport(a) => topo_report(&s, a),
        Command::Phantom(a) => phantom(&s, a),
    }
}

fn evaluate(s: &Settings, a: PairArgs) -> Result<u8, Fatal> {
    let gt = DirSource::open(&a.gt)?;
    let pred = DirSource::open(&a.pred)?;
    let opts = s.config.eval_options();
    let records = evaluate_batch(&gt, &pred, s.rois.as_ref(), &s.map, &opts, s.jobs)?;
    write_or_print(a.out.as_deref(), &to_json_string(&report_json(&records, &opts)))?;
    if let Some(t) = &a.table {
        write_or_print(Some(t), &report_table(&records))?;
    }
    let failed: Vec<_> = records.iter().filter(|r| !r.is_ok()).collect();
    for r in &failed {
        if let Err(e) = &r.result {
            eprintln!("case {}: {e}", r.case_id);
        }
    }
    Ok(if failed.is_empty() { 0 } else { EXIT_PARTIAL })
}

fn rank(s: &Settings, a: RankArgs) -> Result<u8, Fatal> {
    let mut teams = Vec::new();
    for arg in &a.reports {
        let (name, path) = match arg.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(arg);
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or(arg).to_string();
                (stem, p)
            }
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
        let report = parse_report(&text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
        teams.push(TeamResult::from_report(name, report));
    }
    let columns = if a.columns.is_empty() { default_columns(s.config.task) } else { a.columns };
    let mode = if a.per_case { RankMode::PerCase } else { RankMode::Aggregate };
    let lb = rank_teams(&teams, &columns, mode)?;
    write_or_print(a.out.as_deref(), &format_leaderboard(&lb))?;
    if let Some(p) = &a.json {
        let text = serde_json::to_string_pretty(&lb)? + "\n";
        write_or_print(Some(p), &text)?;
    }
    Ok(0)
}

fn topo_report(s: &Settings, a: TopoArgs) -> Result<u8, Fatal> {
    let gt = DirSource::open(&a.gt)?;
    let pred = DirSource::open(&a.pred)?;
    let outcomes = analyze_batch(&gt, &pred, s.rois.as_ref(), &s.map, &s.config, s.jobs)?;
    let report = TopologyReport::build(outcomes, &s.config)?;
    if let Some(p) = &a.out {
        write_or_print(Some(p), &to_json_string(&report.to_json()))?;
    }
    write_or_print(a.text.as_deref(), &report.to_text())?;
    for (id, e) in &report.failed {
        eprintln!("case {id}: {e}");
    }
    Ok(if report.has_failures() { EXIT_PARTIAL } else { 0 })
}

fn phantom(s: &Settings, a: PhantomArgs) -> Result<u8, Fatal> {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Fatal(format!("{}: {e}", p.display())))?;
            PhantomSpec::from_toml_str(&text)?
        }
        None => PhantomSpec::default(),
    };
    if let Some(v) = a.acom {
        spec.acom = v;
    }
    spec.third_a2 |= a.third_a2;
    spec.r_pcom &= !a.no_r_pcom;
    spec.l_pcom &= !a.no_l_pcom;
    spec.r_fetal |= a.r_fetal;
    spec.l_fetal |= a.l_fetal;
    for (flag, field) in [(a.r_a1, &mut spec.r_a1), (a.l_a1, &mut spec.l_a1), (a.r_p1, &mut spec.r_p1), (a.l_p1, &mut spec.l_p1)] {
        if let Some(v) = flag {
            *field = v;
        }
    }
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(d) = a.dims {
        spec.dims = [d[0], d[1], d[2]];
    }
    if let Some(sp) = a.spacing {
        spec.spacing = [sp[0], sp[1], sp[2]];
    }
    let files = write_phantom_fixture(&a.out, &a.id, &spec, &a.corruptions, &s.map)?;
    for f in files.all() {
        println!("{}", f.display());
    }
    Ok(0)
}
