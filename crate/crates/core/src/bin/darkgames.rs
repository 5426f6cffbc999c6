use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use darkgames::dh3::{self, OrderedActionStrategy, Prune, SearchOptions};
use darkgames::games::{count_game, GameSpec, Player, Ruleset};
use darkgames::gradient::Game;
use darkgames::policy_file::{self, PolicySet};
use darkgames::solvers::{self, Algorithm, Averaging, Magnet, SolverConfig, UpdateScheme};
use darkgames::treeplex::{tabular_to_sequence_form, SequenceFormStrategy, TabularPolicy};
use darkgames::{Error, Result};

#[derive(Parser)]
#[command(name = "darkgames", version, about = "Exact solving and evaluation of Dark Hex and Phantom Tic-Tac-Toe")]
struct Cli {
    /// Worker threads for gradient passes and the search (overrides DARKGAMES_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Not supported: every command is deterministic.
    #[arg(long, global = true, hide = true)]
    seed: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Histories and information states of one or more games.
    Count { games: Vec<GameSpec> },
    /// Runs a solver and writes the average strategies and a CSV log.
    Solve(SolveArgs),
    /// Exploitability, Nash gap and value of a profile.
    Expl {
        game: GameSpec,
        /// Policy file for player one (or both seats), or `uniform`.
        p1: String,
        /// Policy file for player two, or `uniform`. Omit when the first file covers both seats.
        p2: Option<String>,
    },
    /// Seat-symmetrised head-to-head value of agent A against agent B.
    H2h {
        game: GameSpec,
        /// Policy file covering both seats, or `uniform`.
        a: String,
        b: String,
    },
    /// Deterministic winning strategies on classical Dark Hex.
    Dh3 {
        #[command(subcommand)]
        command: Dh3Command,
    },
    /// Times full gradient passes against uniform play.
    Bench {
        game: GameSpec,
        #[arg(long, default_value_t = 1)]
        passes: u32,
    },
}

#[derive(Args)]
struct SolveArgs {
    game: GameSpec,
    algo: Algorithm,
    iters: u64,
    /// Average-strategy policy file (`.bin` selects the binary layout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV log; defaults to the policy file name with a `.csv` extension.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    report_every: u64,
    #[arg(long, value_enum, default_value_t = Scheme::Alternating)]
    scheme: Scheme,
    /// Discount exponent for positive regrets (dcfr, pdcfr).
    #[arg(long)]
    dcfr_alpha: Option<f64>,
    /// Discount exponent for negative regrets (dcfr, pdcfr).
    #[arg(long)]
    dcfr_beta: Option<f64>,
    /// Exponent of the t^gamma averaging weights (dcfr, pdcfr).
    #[arg(long)]
    dcfr_gamma: Option<f64>,
    /// Averaging weights: uniform, linear, or a number p for weights t^p.
    #[arg(long)]
    averaging: Option<String>,
    #[arg(long)]
    mmd_alpha: Option<f64>,
    #[arg(long)]
    mmd_eta: Option<f64>,
    /// Magnet policy file covering both seats (mmd); uniform by default.
    #[arg(long)]
    mmd_magnet: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Alternating,
    Simultaneous,
}

#[derive(Clone, Copy, ValueEnum)]
enum PruneArg {
    Compatible,
    Perfect,
}

#[derive(Subcommand)]
enum Dh3Command {
    /// Searches for a winning player-one strategy and verifies it.
    Search {
        #[arg(long, default_value_t = 3)]
        side: u8,
        #[arg(long, value_enum, default_value_t = PruneArg::Compatible)]
        prune: PruneArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Allows the 4x4 board.
        #[arg(long)]
        allow_large: bool,
        /// File recording refuted first moves, for resuming long runs.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Checks a strategy file against every player-two policy.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        side: u8,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.seed.is_some() {
        eprintln!("error: --seed is not accepted; every command is deterministic");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownGame(_) | Error::UnsupportedBoard(_) | Error::Unsupported(_) => 2,
        Error::LimitExceeded { .. } => 4,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or_else(darkgames::gradient::default_threads).max(1);
    let load = |spec: &GameSpec| -> Result<Game> { Ok(Game::new(spec)?.with_threads(threads)) };
    match cli.command {
        Command::Count { games } => {
            if games.is_empty() {
                return Err(Error::Unsupported("name at least one game".into()));
            }
            for spec in games {
                count(&spec)?;
            }
        }
        Command::Solve(args) => {
            let game = load(&args.game)?;
            solve(&game, args)?;
        }
        Command::Expl { game, p1, p2 } => {
            let g = load(&game)?;
            let (t1, t2) = profile(&g, &p1, p2.as_deref())?;
            let x = tabular_to_sequence_form(g.treeplex(Player::One), &t1);
            let y = tabular_to_sequence_form(g.treeplex(Player::Two), &t2);
            let e = g.evaluate(&x, &y)?;
            println!("exploitability {:.9}", e.exploitability());
            println!("nash_gap {:.9}", e.nash_gap);
            println!("value {:.9}", e.value);
        }
        Command::H2h { game, a, b } => {
            let g = load(&game)?;
            let (a1, a2) = profile(&g, &a, None)?;
            let (b1, b2) = profile(&g, &b, None)?;
            let bind = |p: Player, t: &TabularPolicy| -> SequenceFormStrategy {
                tabular_to_sequence_form(g.treeplex(p), t)
            };
            let first = g.expected_value(&bind(Player::One, &a1), &bind(Player::Two, &b2))?;
            let second = g.expected_value(&bind(Player::One, &b1), &bind(Player::Two, &a2))?;
            println!("a_first {:.9}", first + 0.0);
            println!("b_first {:.9}", second + 0.0);
            println!("symmetrized {:.9}", (first - second) / 2.0 + 0.0);
        }
        Command::Dh3 { command } => dh3_command(command, threads)?,
        Command::Bench { game, passes } => {
            let t = Instant::now();
            let g = load(&game)?;
            println!("setup {:.2}s", t.elapsed().as_secs_f64());
            let x = darkgames::treeplex::uniform_sequence_form(g.treeplex(Player::One));
            let y = darkgames::treeplex::uniform_sequence_form(g.treeplex(Player::Two));
            for i in 0..passes {
                let t = Instant::now();
                let e = g.evaluate(&x, &y)?;
                println!(
                    "pass {} {:.2}s threads={} value={:.9}",
                    i + 1,
                    t.elapsed().as_secs_f64(),
                    g.threads(),
                    e.value
                );
            }
            if let Some(kb) = peak_rss_kb() {
                println!("peak_memory {:.2} GiB", kb as f64 / (1u64 << 20) as f64);
            }
        }
    }
    Ok(())
}

/// Peak resident set size in KiB, where the platform reports it.
fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status.lines().find(|l| l.starts_with("VmHWM:"))?.split_whitespace().nth(1)?.parse().ok()
}

/// `n` to three significant figures with a K/M/B suffix.
fn sig3(n: u64) -> String {
    let (scale, suffix) = match n {
        0..=999 => return n.to_string(),
        1_000..=999_999 => (1e3, "K"),
        1_000_000..=999_999_999 => (1e6, "M"),
        _ => (1e9, "B"),
    };
    let v = n as f64 / scale;
    let decimals = 2 - (v.log10().floor() as i32).clamp(0, 2);
    format!("{v:.*}{suffix}", decimals as usize)
}

fn count(spec: &GameSpec) -> Result<()> {
    let c = count_game(spec)?;
    println!("game {spec}");
    println!("histories {} ({})", c.histories(), sig3(c.histories()));
    println!("terminal {}", c.terminal_nodes);
    for p in [Player::One, Player::Two] {
        let n = c.infostates[p.index()];
        println!("infosets_p{} {} ({})", p.number(), n, sig3(n));
    }
    println!("infosets_total {} ({})", c.total_infostates(), sig3(c.total_infostates()));
    Ok(())
}

fn parse_averaging(s: &str) -> Result<Averaging> {
    match s {
        "uniform" => Ok(Averaging::Uniform),
        "linear" => Ok(Averaging::Linear),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|g| g.is_finite() && *g >= 0.0)
            .map(Averaging::Power)
            .ok_or_else(|| Error::Unsupported(format!("averaging `{s}`: use uniform, linear or an exponent"))),
    }
}

fn solve(game: &Game, args: SolveArgs) -> Result<()> {
    let mut config = SolverConfig::new(args.algo);
    config.scheme = match args.scheme {
        Scheme::Alternating => UpdateScheme::Alternating,
        Scheme::Simultaneous => UpdateScheme::Simultaneous,
    };
    if let Some(a) = args.dcfr_alpha {
        config.dcfr.alpha = a;
    }
    if let Some(b) = args.dcfr_beta {
        config.dcfr.beta = b;
    }
    if let Some(g) = args.dcfr_gamma {
        config.dcfr.gamma = g;
    }
    config.averaging = args.averaging.as_deref().map(parse_averaging).transpose()?;
    if let Some(a) = args.mmd_alpha {
        config.mmd.alpha = a;
    }
    if let Some(e) = args.mmd_eta {
        config.mmd.eta = e;
    }
    if let Some(path) = &args.mmd_magnet {
        let (t1, t2) = profile(game, &path.to_string_lossy(), None)?;
        config.mmd.magnet = Magnet::Tabular(Box::new([t1, t2]));
    }
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}-{}.txt", game.spec(), args.algo.name().replace('+', "plus"))));
    let log_path = args.log.unwrap_or_else(|| out.with_extension("csv"));

    let mut solver = config.build(game)?;
    let mut log = BufWriter::new(File::create(&log_path)?);
    policy_file::write_log_header(&mut log)?;
    let mut log_err = None;
    println!("{}", policy_file::LOG_HEADER);
    let result = solvers::run_with(game, solver.as_mut(), args.iters, args.report_every, |row| {
        println!(
            "{},{},{},{},{:.3}",
            row.iteration, row.value, row.nash_gap, row.exploitability, row.wall_seconds
        );
        if let Err(e) = policy_file::write_log_row(&mut log, row).and_then(|_| Ok(log.flush()?)) {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(e);
    }
    write_profile(game, &out, &result.average)?;
    println!("wrote {} and {}", out.display(), log_path.display());
    if args.algo == Algorithm::Mmd {
        let stem = out.file_stem().unwrap_or_default().to_string_lossy();
        let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "txt".into());
        let last = out.with_file_name(format!("{stem}-last.{ext}"));
        write_profile(game, &last, &result.last)?;
        println!("wrote {}", last.display());
    }
    Ok(())
}

fn write_profile(game: &Game, path: &Path, profile: &[SequenceFormStrategy; 2]) -> Result<()> {
    let tp1 = game.treeplex(Player::One);
    let tp2 = game.treeplex(Player::Two);
    let t1 = profile[0].to_tabular(tp1);
    let t2 = profile[1].to_tabular(tp2);
    policy_file::write_policy(path, game.spec(), &[(tp1, &t1), (tp2, &t2)])
}

fn read_set(game: &Game, path: &str) -> Result<PolicySet> {
    policy_file::read_policy(
        Path::new(path),
        game.spec(),
        [game.treeplex(Player::One), game.treeplex(Player::Two)],
    )
}

/// Tables for both seats from one or two sources (`uniform` or a file).
fn profile(game: &Game, first: &str, second: Option<&str>) -> Result<(TabularPolicy, TabularPolicy)> {
    let uniform = |p: Player| TabularPolicy::uniform(game.treeplex(p));
    let seat = |src: &str, p: Player| -> Result<TabularPolicy> {
        if src == "uniform" {
            return Ok(uniform(p));
        }
        read_set(game, src)?
            .tables[p.index()]
            .take()
            .ok_or_else(|| Error::Format(format!("{src} has no policy for player {p}")))
    };
    let t1 = seat(first, Player::One)?;
    let t2 = seat(second.unwrap_or(first), Player::Two)?;
    Ok((t1, t2))
}

fn dh3_command(command: Dh3Command, threads: usize) -> Result<()> {
    match command {
        Dh3Command::Search { side, prune, out, allow_large, checkpoint } => {
            let spec = if side > 3 {
                GameSpec::dark_hex_extended(side, Ruleset::Classical)?
            } else {
                GameSpec::dark_hex(side, Ruleset::Classical)?
            };
            let opts = SearchOptions {
                prune: match prune {
                    PruneArg::Compatible => Prune::CompatibleStates,
                    PruneArg::Perfect => Prune::PerfectInformation,
                },
                first_moves: None,
                threads,
                allow_large,
                checkpoint,
            };
            let t = Instant::now();
            let report = dh3::search_with(&spec, &opts)?;
            println!("searched {} information states in {:.2}s", report.states, t.elapsed().as_secs_f64());
            let Some(strategy) = report.strategy else {
                println!("no deterministic winning strategy for player one");
                return Ok(());
            };
            println!("found strategy with {} lists", strategy.len());
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{spec}-winning.txt")));
            let mut w = BufWriter::new(File::create(&out)?);
            strategy.write_text(&mut w)?;
            w.flush()?;
            println!("wrote {}", out.display());
            if side <= 3 {
                let game = Game::new(&spec)?.with_threads(threads);
                report_verification(&game, &strategy)?;
            }
        }
        Dh3Command::Verify { file, side } => {
            let spec = GameSpec::dark_hex(side, Ruleset::Classical)?;
            let strategy = OrderedActionStrategy::read_text(BufReader::new(File::open(&file)?))?;
            let game = Game::new(&spec)?.with_threads(threads);
            report_verification(&game, &strategy)?;
        }
    }
    Ok(())
}

fn report_verification(game: &Game, strategy: &OrderedActionStrategy) -> Result<()> {
    let v = dh3::verify_winning(game, strategy)?;
    println!("{}", if v.proven() { "proven" } else { "refuted" });
    println!("min_value {:.9}", v.min_value);
    println!("value_vs_uniform {:.9}", v.value_vs_uniform);
    Ok(())
}
