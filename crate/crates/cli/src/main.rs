use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use skill_luck::game::{validate_game, Game, GameError};
use skill_luck::games::{self, CatalogError, Params};
use skill_luck::report::{
    self, analyze, depth_sweep, design_experiment, export_features, table, AnalysisConfig, DesignError, GameReport,
    Mode, RowOutcome,
};
use skill_luck::rng::DEFAULT_SEED;
use skill_luck::solvers::{ConstantHeuristic, SolveError};
use skill_luck::transform::{DesignKind, TransformError};
use skill_luck::tree_io::{as_game, emit_tree, parse_tree, ExplicitTree};

const THREADS_ENV: &str = "SKILL_LUCK_THREADS";

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  internal error
  2  usage error (bad flags or flag combination)
  3  unknown game
  4  tree file unreadable or unparsable
  5  validation found errors
  6  solve refused (node budget exceeded or truncated game in exact mode)
  7  invalid game parameter
  8  design change not applicable (includes hidden-information, which is
     out of scope: there are no information sets)

Errors are one line on stderr: error[<kind>]: <message>

Environment:
  SKILL_LUCK_THREADS  worker threads (results do not depend on it)";

#[derive(Parser)]
#[command(name = "skill-luck", version, about = "Skill and luck leverage of finite two-player games with chance", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in games and their parameters.
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check a game for structural errors and truncation.
    Validate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: Output,
    },
    /// Compute K, L, S and integrated volatility for one game.
    Analyze {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Analyse several games and sort them by S.
    Table {
        /// Every catalog game at default parameters.
        #[arg(long)]
        all: bool,
        /// Catalog games to include (repeatable).
        #[arg(long = "game", conflicts_with = "all")]
        games: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Depth-limited root value and K at several depths, plus the exact row.
    DepthSweep {
        #[command(flatten)]
        input: Input,
        /// Comma-separated nondecreasing depths.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        depths: Vec<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Apply a design change to a tree and compare exact metrics.
    Design {
        /// Base tree file.
        #[arg(long)]
        base: PathBuf,
        /// add-early-chance, add-decision-depth, amplify-terminal-variance,
        /// cluster-late-chance (hidden-information is out of scope).
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Print a tree-defined catalog game in the tree file format.
    EmitTree {
        #[arg(long)]
        game: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-game K, L, S, Sigma as CSV for external plotting.
    ExportFeatures {
        #[arg(long)]
        all: bool,
        #[arg(long = "game", conflicts_with = "all")]
        games: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    /// Catalog game name.
    #[arg(long, conflicts_with = "tree", required_unless_present = "tree")]
    game: Option<String>,
    /// Game parameter as key=value (repeatable).
    #[arg(long = "param", requires = "game")]
    params: Vec<String>,
    /// Tree file in the skill-luck-tree format.
    #[arg(long)]
    tree: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "auto")]
    mode: Mode,
    /// Rollouts (and trajectories) for sampled modes.
    #[arg(long, default_value_t = report::DEFAULT_SIMS)]
    n: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Lookahead depth for sampled modes.
    #[arg(long)]
    depth: Option<u32>,
    /// Include wall-clock time (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Self {
        Failure { code, kind, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure::new(2, "usage", message)
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Budget { .. } | SolveError::Truncated { .. } => Failure::new(6, "solve-refused", e.to_string()),
            SolveError::Game(GameError::InvalidParameter { .. }) => Failure::new(7, "invalid-parameter", e.to_string()),
            _ => Failure::new(1, "internal", e.to_string()),
        }
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::UnknownGame(_) => Failure::new(3, "unknown-game", e.to_string()),
            CatalogError::InvalidParameter(_) => Failure::new(7, "invalid-parameter", e.to_string()),
        }
    }
}

impl From<DesignError> for Failure {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Transform(t @ TransformError::Unsupported) => Failure::new(8, "unsupported", t.to_string()),
            DesignError::Transform(t) => Failure::new(8, "inapplicable", t.to_string()),
            DesignError::Solve(s) => s.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads().and_then(|_| run(cli.command)) {
        eprintln!("error[{}]: {}", f.kind, f.message.replace('\n', " "));
        return ExitCode::from(f.code);
    }
    ExitCode::SUCCESS
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(1, "internal", e.to_string()))
}

fn run(command: Command) -> Result<(), Failure> {
    let h = ConstantHeuristic::default();
    match command {
        Command::List { format } => emit(&list_output(format)?, None),
        Command::Validate { input, out } => {
            let (game, _) = load(&input)?;
            let rep = validate_game(game.as_ref());
            let text = match out.format {
                Format::Json => json(&rep)?,
                Format::Text => {
                    let mut s = format!(
                        "game {}: {} states ({} decision, {} chance, {} terminal), {} truncations, {} errors\n",
                        rep.game,
                        rep.states,
                        rep.decision_nodes,
                        rep.chance_nodes,
                        rep.terminal_nodes,
                        rep.truncations,
                        rep.errors()
                    );
                    for f in &rep.findings {
                        s.push_str(&format!("  {}\n", serde_json::to_string(f).expect("finding serialises")));
                    }
                    s.push_str(if rep.is_valid() { "valid\n" } else { "invalid\n" });
                    s
                }
                Format::Csv => return Err(Failure::usage("validate supports text and json output")),
            };
            emit(&text, out.output.as_deref())?;
            if rep.is_valid() {
                Ok(())
            } else {
                Err(Failure::new(5, "invalid-game", format!("{} validation errors", rep.errors())))
            }
        }
        Command::Analyze { input, run, out } => {
            let (game, params) = load(&input)?;
            let report = timed(&run, || analyze(game.as_ref(), &params, &config(&run), &h))?;
            let text = match out.format {
                Format::Json => json(&report)?,
                Format::Csv => report::table_csv(&[report::TableRow {
                    game: report.game.clone(),
                    outcome: RowOutcome::Report(Box::new(report.clone())),
                }]),
                Format::Text => analysis_text(&report),
            };
            emit(&text, out.output.as_deref())
        }
        Command::Table { all, games, run, out } => {
            let selected = select(all, games)?;
            let started = Instant::now();
            let rows = table(&selected, &config(&run), &h);
            let mut text = match out.format {
                Format::Json => json(&rows)?,
                Format::Csv => report::table_csv(&rows),
                Format::Text => report::table_text(&rows),
            };
            if run.timings && out.format == Format::Text {
                text.push_str(&format!("elapsed {:.3}s\n", started.elapsed().as_secs_f64()));
            }
            emit(&text, out.output.as_deref())
        }
        Command::DepthSweep { input, depths, out } => {
            let (game, _) = load(&input)?;
            let rows = depth_sweep(game.as_ref(), &depths, &h)?;
            let text = match out.format {
                Format::Json => json(&rows)?,
                _ => {
                    let sep = if out.format == Format::Csv { "," } else { " " };
                    let mut s = ["depth", "v_star", "K"].join(sep) + "\n";
                    for r in &rows {
                        let d = r.depth.map_or("full".to_string(), |d| d.to_string());
                        s.push_str(&[d, report::fmt3(r.v_star), report::fmt3(r.k)].join(sep));
                        s.push('\n');
                    }
                    s
                }
            };
            emit(&text, out.output.as_deref())
        }
        Command::Design { base, kind, seed, out } => {
            let kind: DesignKind = kind.parse().map_err(Failure::usage)?;
            let tree = read_tree(&base)?;
            let exp = design_experiment(&tree, &stem(&base), kind, seed, &h)?;
            let text = match out.format {
                Format::Json => json(&exp)?,
                _ => {
                    let yes = |b: bool| if b { "holds" } else { "violated" };
                    format!(
                        "{} {}\nS     {} -> {}  predicted {:?}: {}\nSigma {} -> {}  predicted {:?}: {}\n",
                        exp.base,
                        exp.kind,
                        report::fmt3(exp.s.before),
                        report::fmt3(exp.s.after),
                        exp.s.predicted,
                        yes(exp.s.holds),
                        report::fmt3(exp.sigma.before),
                        report::fmt3(exp.sigma.after),
                        exp.sigma.predicted,
                        yes(exp.sigma.holds)
                    )
                }
            };
            emit(&text, out.output.as_deref())
        }
        Command::EmitTree { game, output } => {
            if games::find(&game).is_none() {
                return Err(CatalogError::UnknownGame(game).into());
            }
            let tree = games::explicit_tree(&game)
                .ok_or_else(|| Failure::usage(format!("game '{game}' is defined by rules, not by an explicit tree")))?;
            emit(&emit_tree(&tree), output.as_deref())
        }
        Command::ExportFeatures { all, games, run, output } => {
            let selected = select(all, games)?;
            let reports: Vec<GameReport> = table(&selected, &config(&run), &h)
                .into_iter()
                .filter_map(|r| match r.outcome {
                    RowOutcome::Report(rep) => Some(*rep),
                    RowOutcome::Error(_) => None,
                })
                .collect();
            emit(&export_features(&reports), output.as_deref())
        }
    }
}

fn config(run: &RunArgs) -> AnalysisConfig {
    AnalysisConfig { mode: run.mode, n: run.n, seed: run.seed, depth: run.depth, ..AnalysisConfig::default() }
}

fn timed(run: &RunArgs, f: impl FnOnce() -> Result<GameReport, SolveError>) -> Result<GameReport, Failure> {
    let started = Instant::now();
    let mut report = f()?;
    if run.timings {
        report.elapsed = Some(started.elapsed());
    }
    Ok(report)
}

fn select(all: bool, names: Vec<String>) -> Result<Vec<(String, Params, Box<dyn Game>)>, Failure> {
    let names: Vec<String> = if all { games::list_games().iter().map(|g| g.name.to_string()).collect() } else { names };
    names
        .into_iter()
        .map(|n| {
            let g = games::instantiate(&n, &Params::new())?;
            Ok((n, Params::new(), g))
        })
        .collect()
}

fn load(input: &Input) -> Result<(Box<dyn Game>, Params), Failure> {
    if let Some(path) = &input.tree {
        let tree = read_tree(path)?;
        return Ok((Box::new(as_game(tree, stem(path))), Params::new()));
    }
    let name = input.game.as_deref().ok_or_else(|| Failure::usage("one of --game or --tree is required"))?;
    let params = games::parse_params(input.params.iter().map(String::as_str)).map_err(Failure::usage)?;
    let game = games::instantiate(name, &params)?;
    Ok((game, params))
}

fn read_tree(path: &Path) -> Result<ExplicitTree, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(4, "tree-io", format!("{}: {e}", path.display())))?;
    parse_tree(&text).map_err(|e| Failure::new(4, "tree-parse", format!("{}:{e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "tree".into(), |s| s.to_string_lossy().into_owned())
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Failure::new(1, "internal", e.to_string()))
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(1, "io", format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::new(1, "io", e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct ListEntry {
    name: &'static str,
    summary: &'static str,
    params: &'static [games::ParamSpec],
    expected: games::ExpectedMetrics,
}

fn list_output(format: Format) -> Result<String, Failure> {
    let specs = games::list_games();
    match format {
        Format::Json => json(
            &specs
                .iter()
                .map(|g| ListEntry { name: g.name, summary: g.summary, params: g.params, expected: g.expected })
                .collect::<Vec<_>>(),
        ),
        Format::Csv => Err(Failure::usage("list supports text and json output")),
        Format::Text => {
            let mut s = String::new();
            for g in &specs {
                let params: Vec<String> = g.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
                s.push_str(&format!("{:<16} {}", g.name, g.summary));
                if !params.is_empty() {
                    s.push_str(&format!(" [{}]", params.join(" ")));
                }
                s.push('\n');
            }
            Ok(s)
        }
    }
}

fn analysis_text(r: &GameReport) -> String {
    let mut s = format!("game    {}\n", r.game);
    for (k, v) in &r.params {
        s.push_str(&format!("param   {k}={v}\n"));
    }
    s.push_str(&format!("method  {}\n", r.method));
    if let Some(d) = r.depth {
        s.push_str(&format!("depth   {d}\n"));
    }
    if let Some(seed) = r.seed {
        s.push_str(&format!("seed    {seed}\n"));
    }
    let est = |name: &str, e: &skill_luck::leverage::LeverageEstimate| {
        let mut line = format!("{name:<7} {:.6}", e.point);
        if e.standard_error > 0.0 {
            line.push_str(&format!("  se {:.6}", e.standard_error));
        }
        if let Some((lo, hi)) = e.ci95 {
            line.push_str(&format!("  95% ci [{lo:.6}, {hi:.6}]"));
        }
        line + "\n"
    };
    s.push_str(&est("K", &r.k));
    s.push_str(&est("L", &r.l));
    s.push_str(&format!("S       {:.6}{}\n", r.s, if r.degenerate { "  (degenerate: K = L = 0)" } else { "" }));
    s.push_str(&format!("Sigma   {:.6}", r.sigma.sigma));
    if r.sigma.standard_error > 0.0 {
        s.push_str(&format!("  se {:.6}", r.sigma.standard_error));
    }
    s.push('\n');
    if let Some(v) = r.v_star {
        s.push_str(&format!("V*      {v:.6}\n"));
    }
    if let (Some(b), Some(u)) = (r.v_best_vs_random, r.v_random_vs_random) {
        s.push_str(&format!("V(BR,U) {b:.6}\nV(U,U)  {u:.6}\n"));
    }
    if let Some(n) = r.states {
        s.push_str(&format!("states  {n}\n"));
    }
    if let Some(t) = r.elapsed {
        s.push_str(&format!("elapsed {:.3}s\n", t.as_secs_f64()));
    }
    for w in &r.warnings {
        s.push_str(&format!("warning {w}\n"));
    }
    s
}
