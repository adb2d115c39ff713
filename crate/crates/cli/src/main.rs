use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use betashift::admissibility;
use betashift::density::{self, ApproxConfig};
use betashift::dynamics::{self, ExactParams, Fiber, ParamSource, Point, Precision, Side};
use betashift::expr::Number;
use betashift::scan::{self, Execution, Grid, ScanConfig};
use betashift::subshift::{self, Classification};
use betashift::words::parse_word;
use betashift::{Error, Result};

mod config;

#[derive(Parser, Debug)]
#[command(name = "betashift", version, about = "Symbolic dynamics of intermediate beta-transformations")]
struct Cli {
    /// Starting working precision in bits.
    #[arg(long, global = true, default_value_t = dynamics::DEFAULT_BITS)]
    bits: u32,
    /// Longest orbit searched for a period.
    #[arg(long, global = true, default_value_t = dynamics::DEFAULT_MAX_LEN)]
    max_len: usize,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Slope, in (1, 2). Accepts decimals, p/q, phi and sqrt(..).
    #[arg(long, allow_hyphen_values = true)]
    beta: String,
    /// Offset, in [0, 2 - beta].
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
}

impl ParamArgs {
    fn exact(&self) -> Result<ExactParams> {
        ExactParams::parse(&self.beta, &self.alpha)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// First digits of the expansion of a point.
    Expand {
        #[command(flatten)]
        params: ParamArgs,
        /// Point in [0, 1], or `p` for the critical point.
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 32)]
        n: usize,
        /// `plus` (digit 0 iff x < p) or `minus` (digit 0 iff x <= p).
        #[arg(long, default_value = "plus")]
        side: String,
    },
    /// Kneading invariants: computed prefixes and detected periods.
    Kneading {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Admissibility report for a word pair, as JSON.
    Check {
        /// Lower word, e.g. `(011)`.
        lower: String,
        /// Upper word, e.g. `(100)`.
        upper: String,
    },
    /// Finite type, sofic or undetermined.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Nearby parameters of finite type, as JSON.
    Approx {
        #[command(flatten)]
        params: ParamArgs,
        /// Tolerance in both coordinates.
        #[arg(long, default_value = "1/100")]
        eps: String,
        #[arg(long, default_value_t = density::DEFAULT_MAX_CUT)]
        max_cut: usize,
    },
    /// Approximate or classify every cell of a parameter grid.
    Scan {
        #[arg(long, default_value_t = 10)]
        beta_steps: usize,
        #[arg(long, default_value_t = 10)]
        alpha_steps: usize,
        #[arg(long, default_value = "1")]
        beta_min: String,
        #[arg(long, default_value = "2")]
        beta_max: String,
        /// Include the boundary lines alpha = 0 and alpha = 2 - beta.
        #[arg(long)]
        closed: bool,
        /// Extra point `beta,alpha`; may be repeated.
        #[arg(long = "point", value_name = "BETA,ALPHA")]
        points: Vec<String>,
        #[arg(long, default_value = "1/100")]
        eps: String,
        #[arg(long, default_value_t = density::DEFAULT_MAX_CUT)]
        max_cut: usize,
        /// CSV destination; standard output when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Optional SVG scatter destination.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Run the cells one after another.
        #[arg(long)]
        sequential: bool,
    },
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let mut stdout = io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn parse_args() -> std::result::Result<Cli, ExitCode> {
    let args: Vec<String> = std::env::args().collect();
    let cmd = Cli::command();
    // A lenient first pass finds the config file before required flags are enforced.
    let loose = cmd.clone().ignore_errors(true).try_get_matches_from(&args).map_err(clap_exit)?;
    let path = loose.get_one::<PathBuf>("config").cloned();
    let full = match path {
        Some(path) if loose.subcommand().is_some() => {
            let fail = |msg: String| {
                eprintln!("error: config {msg}");
                ExitCode::from(1)
            };
            let entries = config::load(&path).map_err(fail)?;
            let mut built = cmd.clone();
            built.build();
            let (global, local) = config::missing_args(&built, &loose, &entries).map_err(fail)?;
            let mut full = args;
            full.extend(global);
            full.extend(local);
            full
        }
        _ => args,
    };
    let matches = cmd.try_get_matches_from(&full).map_err(clap_exit)?;
    Cli::from_arg_matches(&matches).map_err(clap_exit)
}

fn clap_exit(e: clap::Error) -> ExitCode {
    let _ = e.print();
    if e.use_stderr() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn emit<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_error)
}

fn io_error(e: io::Error) -> Error {
    Error::Io(e.to_string())
}

fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<()> {
    let precision = Precision::new(cli.bits);
    match &cli.command {
        Command::Expand { params, x, n, side } => {
            let source = params.exact()?;
            let side: Side = side.parse()?;
            let x = if x.trim() == "p" { None } else { Some(x.parse::<Number>()?) };
            let digits = dynamics::with_precision(&source, precision, |p| {
                let point = match &x {
                    None => Point::Critical,
                    Some(x) => {
                        let v = x.eval(p.prec())?;
                        if v.is_negative() || v.gt(&betashift::real::Real::one(p.prec())) {
                            return Err(Error::Domain(format!("x = {x} is outside [0, 1]")));
                        }
                        Point::Value(v)
                    }
                };
                dynamics::expand(p, &point, *n, side)
            })?;
            if cli.json {
                emit(out, &json!({ "digits": digits.to_string() }))
            } else {
                writeln!(out, "{digits}").map_err(io_error)
            }
        }
        Command::Kneading { params, n } => {
            let source = params.exact()?;
            let pair = dynamics::with_precision(&source, precision, |p| dynamics::kneading(p, *n))?;
            let (lower, upper) = dynamics::with_precision(&source, precision, |p| {
                Ok((
                    dynamics::detect_itinerary(p, Side::Minus, cli.max_len)?,
                    dynamics::detect_itinerary(p, Side::Plus, cli.max_len)?,
                ))
            })?;
            if cli.json {
                return emit(
                    out,
                    &json!({
                        "lower_prefix": pair.lower,
                        "upper_prefix": pair.upper,
                        "lower": lower,
                        "upper": upper,
                    }),
                );
            }
            let show = |it: &dynamics::Itinerary| match it.word() {
                Some(w) => w.to_string(),
                None => format!("no period within {} digits", cli.max_len),
            };
            writeln!(out, "lower prefix: {}", pair.lower).map_err(io_error)?;
            writeln!(out, "upper prefix: {}", pair.upper).map_err(io_error)?;
            writeln!(out, "lower: {}", show(&lower)).map_err(io_error)?;
            writeln!(out, "upper: {}", show(&upper)).map_err(io_error)
        }
        Command::Check { lower, upper } => {
            let (l, u) = (parse_word(lower)?, parse_word(upper)?);
            emit(out, &admissibility::is_admissible(&l, &u))
        }
        Command::Classify { params } => {
            let source = params.exact()?;
            let class = subshift::classify(&source, precision, cli.max_len)?;
            print_classification(cli, out, &class)
        }
        Command::Approx { params, eps, max_cut } => {
            let source = params.exact()?;
            let config = ApproxConfig { precision, max_len: cli.max_len, max_cut: *max_cut };
            let fiber = source.params(cli.bits)?.fiber();
            if fiber != Fiber::Interior {
                let line = if fiber == Fiber::Greedy { "alpha = 0" } else { "alpha = 2 - beta" };
                eprintln!("note: {line} is a boundary point; reporting its classification instead");
                let class = subshift::classify(&source, precision, cli.max_len)?;
                return print_classification(cli, out, &class);
            }
            let eps = eps.parse::<Number>()?.eval(cli.bits)?;
            let ap = density::approximate_sft(&source, &eps, &config)?;
            emit(out, &ap)
        }
        Command::Scan {
            beta_steps,
            alpha_steps,
            beta_min,
            beta_max,
            closed,
            points,
            eps,
            max_cut,
            out: path,
            svg,
            sequential,
        } => {
            let mut grid = Grid::new(*beta_steps, *alpha_steps);
            grid.beta_min = beta_min.parse()?;
            grid.beta_max = beta_max.parse()?;
            grid.closed = *closed;
            for p in points {
                let (b, a) = p
                    .split_once(',')
                    .ok_or_else(|| Error::Domain(format!("point {p:?} is not of the form beta,alpha")))?;
                grid.extra.push(ExactParams::parse(b.trim(), a.trim())?);
            }
            let config = ScanConfig {
                approx: ApproxConfig { precision, max_len: cli.max_len, max_cut: *max_cut },
                eps: eps.parse()?,
                execution: if *sequential { Execution::Sequential } else { Execution::Parallel },
            };
            let records = scan::run(&grid, &config)?;
            match path {
                Some(path) => {
                    let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    scan::write_csv(&records, io::BufWriter::new(file))?;
                }
                None => scan::write_csv(&records, &mut *out)?,
            }
            if let Some(svg) = svg {
                fs::write(svg, scan::render_svg(&records)).map_err(|e| Error::Io(format!("{}: {e}", svg.display())))?;
            }
            Ok(())
        }
    }
}

fn print_classification<W: Write>(cli: &Cli, out: &mut W, class: &Classification) -> Result<()> {
    if cli.json {
        return emit(out, class);
    }
    match class {
        Classification::FiniteType { certificate } => {
            writeln!(out, "finite_type").map_err(io_error)?;
            writeln!(out, "kneading: {} {}", certificate.pair.0, certificate.pair.1).map_err(io_error)?;
            let words: Vec<String> = certificate.forbidden.iter().map(|w| w.to_string()).collect();
            writeln!(out, "forbidden: {}", words.join(" ")).map_err(io_error)?;
            writeln!(out, "memory: {}", certificate.memory).map_err(io_error)?;
            writeln!(out, "entropy: {}", certificate.entropy.to_decimal(20)).map_err(io_error)
        }
        Classification::Sofic { lower, upper } => {
            writeln!(out, "sofic").map_err(io_error)?;
            writeln!(out, "kneading: {lower} {upper}").map_err(io_error)
        }
        Classification::Undetermined { prefix_len } => {
            writeln!(out, "undetermined").map_err(io_error)?;
            writeln!(out, "no period within {prefix_len} digits").map_err(io_error)
        }
    }
}
