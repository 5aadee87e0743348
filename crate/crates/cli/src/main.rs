//! `zqwalk`: eigenvalue tables, χ² series, simulation and torus densities
//! for walks described by a JSON walk spec.

mod spec;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use zqwalk::circulant::eigenvalues_1d;
use zqwalk::error::ErrorKind;
use zqwalk::grouped::{cutoff_lower_bound, cutoff_upper_bound, subset_toggle_chi_squared_m0};
use zqwalk::mc_oracle::{compare, expected_table, simulate_paths, ComparisonReport, EmpiricalDist, Observable};
use zqwalk::product::{IncrementDist, ProductSpectrum, StatePoint, MATRIX_LIMIT, STATE_SPACE_LIMIT};
use zqwalk::torus::{density_grid, TorusLaw};
use zqwalk::zq_core::{enumerate_count_vectors, CountVector};
use zqwalk::Error;

use spec::{grouped_chain, Model, Walk, WalkSpec};

const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "zqwalk", version, about = "Spectral analysis of random walks on Z_q^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue table: η_r for d = 1, κ_l for exchangeable walks, ρ_r otherwise.
    Eigs {
        #[command(flatten)]
        io: IoArgs,
        /// Force a particular table.
        #[arg(long, value_enum)]
        table: Option<Table>,
    },
    /// χ² distance from a start count vector over a range of times.
    Chisq {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        times: Times,
        /// Start at the origin count vector (d, 0, ..., 0). This is the default.
        #[arg(long, conflicts_with = "start")]
        m0: bool,
        /// Start count vector, comma separated.
        #[arg(long, value_delimiter = ',')]
        start: Option<Vec<usize>>,
    },
    /// Simulate paths and compare with the spectral prediction.
    Simulate {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "state")]
        observable: ObservableArg,
        /// Start state, comma separated (default: the zero vector).
        #[arg(long, value_delimiter = ',')]
        start: Option<Vec<usize>>,
    },
    /// Transition density f_t(b | a) of a circle walk on an n-point grid.
    Torus {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 1)]
        t: u32,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10)]
        eps: f64,
    },
}

#[derive(Args)]
struct IoArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct Times {
    #[arg(long, conflicts_with = "t_range")]
    t: Option<u32>,
    /// Inclusive range A:B.
    #[arg(long)]
    t_range: Option<String>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Eta,
    Rho,
    Kappa,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservableArg {
    State,
    Counts,
    Hamming,
}

impl From<ObservableArg> for Observable {
    fn from(o: ObservableArg) -> Self {
        match o {
            ObservableArg::State => Observable::State,
            ObservableArg::Counts => Observable::Counts,
            ObservableArg::Hamming => Observable::Hamming,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Lib(Error),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Size => 3,
                ErrorKind::Numerical => 4,
            },
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load(path: &PathBuf) -> CliResult<(WalkSpec, Walk)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(WalkSpec::parse(&text)?.resolve()?)
}

/// Writes rows as CSV under a `# spec:` line, or as a JSON object carrying
/// the spec next to the rows.
fn emit<R: Serialize>(io_args: &IoArgs, spec: &WalkSpec, default: Format, header: &[&str], rows: &[R], extra: serde_json::Value) -> CliResult<()> {
    let mut buf: Vec<u8> = Vec::new();
    let spec_json = serde_json::to_value(spec).expect("spec serializes");
    match io_args.format.unwrap_or(default) {
        Format::Csv => {
            writeln!(buf, "# spec: {spec_json}")?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut obj = json!({ "spec": spec_json, "rows": rows });
            if let (Some(o), serde_json::Value::Object(e)) = (obj.as_object_mut(), extra) {
                o.extend(e);
            }
            serde_json::to_writer_pretty(&mut buf, &obj).map_err(io::Error::from)?;
            buf.push(b'\n');
        }
    }
    match &io_args.out {
        Some(p) => fs::write(p, buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize)]
struct EigRow {
    index: String,
    re: f64,
    im: f64,
    modulus: f64,
}

fn eig_row(index: String, z: num_complex::Complex64) -> EigRow {
    EigRow {
        index,
        re: z.re,
        im: z.im,
        modulus: z.norm(),
    }
}

fn cmd_eigs(io_args: &IoArgs, table: Option<Table>) -> CliResult<()> {
    let (resolved, walk) = load(&io_args.spec)?;
    let Walk::Discrete { q, d, incr, model } = walk else {
        return Err(Error::Unsupported("eigs needs a walk on Z_q^d".into()).into());
    };
    let exchangeable = matches!(model, Some(Model::SubsetToggle { .. }) | Some(Model::Hamming { .. })) || incr.is_exchangeable();
    let table = table.unwrap_or(if d == 1 {
        Table::Eta
    } else if exchangeable {
        Table::Kappa
    } else {
        Table::Rho
    });
    let rows: Vec<EigRow> = match table {
        Table::Eta => {
            let IncrementDist::IidProduct { marginals } = &incr else {
                return Err(Error::Precondition("η table needs a one-coordinate product law".into()).into());
            };
            if d != 1 {
                return Err(Error::Precondition("η table needs d = 1".into()).into());
            }
            let eta = eigenvalues_1d(&marginals[0]);
            (0..q).map(|r| eig_row(r.to_string(), eta.get(r))).collect()
        }
        Table::Rho => {
            let n = (q as u128).pow(d as u32);
            if n > STATE_SPACE_LIMIT {
                return Err(Error::Size {
                    what: "ρ table".into(),
                    size: n,
                    limit: STATE_SPACE_LIMIT,
                }
                .into());
            }
            let spec = ProductSpectrum::from_increment(&incr)?;
            (0..n as usize)
                .map(|i| {
                    let r = StatePoint::from_index(i, d, q).expect("index in range");
                    eig_row(join(r.entries()), spec.get(r.entries()))
                })
                .collect()
        }
        Table::Kappa => {
            let chain = grouped_chain(q, d, &incr, model.as_ref())?;
            chain
                .indices()
                .indices()
                .iter()
                .zip(chain.kappa_values())
                .map(|(l, &k)| eig_row(join(l.entries()), k))
                .collect()
        }
    };
    emit(io_args, &resolved, Format::Csv, &["index", "re", "im", "modulus"], &rows, json!({}))
}

fn parse_times(times: &Times) -> CliResult<Vec<u32>> {
    if let Some(t) = times.t {
        return Ok(vec![t]);
    }
    let range = times.t_range.as_deref().unwrap_or("0:30");
    let bad = || Error::Parameter(format!("--t-range {range:?} is not of the form A:B"));
    let (a, b) = range.split_once(':').ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad().into());
    }
    Ok((a..=b).collect())
}

#[derive(Serialize)]
struct ChisqRow {
    t: u32,
    chisq: f64,
    upper: Option<f64>,
    lower: Option<f64>,
}

fn cmd_chisq(io_args: &IoArgs, times: &Times, start: Option<&[usize]>) -> CliResult<()> {
    let (resolved, walk) = load(&io_args.spec)?;
    let Walk::Discrete { q, d, incr, model } = walk else {
        return Err(Error::Unsupported("chisq needs a walk on Z_q^d".into()).into());
    };
    let ts = parse_times(times)?;
    let m = match start {
        Some(c) => CountVector::new(c.to_vec(), d)?,
        None => CountVector::origin(d, q)?,
    };
    if m.q() != q {
        return Err(Error::Shape(format!("start has {} entries, q = {q}", m.q())).into());
    }
    let at_origin = m.counts()[0] == d;
    let rows: Vec<ChisqRow> = match model {
        // The cutoff bounds bracket the level sum over L ≤ A at the origin.
        Some(Model::SubsetToggle { a }) if at_origin => {
            let frac = a as f64 / d as f64;
            let bounded = frac > 0.0 && frac <= 0.5;
            ts.iter()
                .map(|&t| {
                    Ok(ChisqRow {
                        t,
                        chisq: subset_toggle_chi_squared_m0(q, d, a, t)?,
                        upper: bounded.then(|| cutoff_upper_bound(d, q, frac, t as f64)),
                        lower: bounded.then(|| cutoff_lower_bound(d, q, frac, t as f64)),
                    })
                })
                .collect::<Result<_, Error>>()?
        }
        _ => {
            let chain = grouped_chain(q, d, &incr, model.as_ref())?;
            chain
                .chi_squared_series(&m, &ts)?
                .into_iter()
                .zip(&ts)
                .map(|(chisq, &t)| ChisqRow {
                    t,
                    chisq,
                    upper: None,
                    lower: None,
                })
                .collect()
        }
    };
    let extra = json!({ "start": m.counts() });
    emit(io_args, &resolved, Format::Csv, &["t", "chisq", "upper", "lower"], &rows, extra)
}

#[derive(Serialize)]
struct SimRow {
    outcome: String,
    count: u64,
    frequency: f64,
    expected: Option<f64>,
}

/// Exact outcome law after t steps, when it can be computed.
fn prediction(incr: &IncrementDist<f64>, chain: Option<&zqwalk::grouped::GroupedChain<f64>>, x0: &StatePoint, t: usize, what: Observable) -> CliResult<Option<BTreeMap<Vec<usize>, f64>>> {
    let (q, d) = (x0.q(), x0.d());
    if let (Some(chain), Observable::Counts | Observable::Hamming) = (chain, what) {
        // X_t - x0 is the walk from the origin, so its counts follow the grouped chain.
        let chain = chain.powi(t as u32);
        let origin = CountVector::origin(d, q)?;
        let mut out = BTreeMap::new();
        for n in enumerate_count_vectors(d, q)? {
            let p = chain.transition(&origin, &n)?;
            if p <= ROUNDING_FLOOR {
                continue;
            }
            let key = match what {
                Observable::Counts => n.counts().to_vec(),
                _ => vec![d - n.counts()[0]],
            };
            *out.entry(key).or_insert(0.0) += p;
        }
        return Ok(Some(out));
    }
    if (q as u128).pow(d as u32) <= MATRIX_LIMIT {
        let pt = ProductSpectrum::from_increment(incr)?.powi(t as u32).transition_matrix()?;
        let mut table = expected_table(&pt, x0, what);
        // Cells that are zero up to rounding come back as ±1e-16.
        table.retain(|_, p| *p > ROUNDING_FLOOR);
        return Ok(Some(table));
    }
    Ok(None)
}

fn cmd_simulate(io_args: &IoArgs, t: usize, paths: usize, seed: u64, what: Observable, start: Option<&[usize]>) -> CliResult<()> {
    let (resolved, walk) = load(&io_args.spec)?;
    let Walk::Discrete { q, d, incr, .. } = walk else {
        return Err(Error::Unsupported("simulate needs a walk on Z_q^d".into()).into());
    };
    let x0 = match start {
        Some(x) => StatePoint::new(x.to_vec(), q)?,
        None => StatePoint::zero(d, q)?,
    };
    if x0.d() != d {
        return Err(Error::Shape(format!("start has {} entries, d = {d}", x0.d())).into());
    }
    let empirical: EmpiricalDist = simulate_paths(&incr, &x0, t, paths, seed, what)?;
    // Simulation runs on the increment law itself, so predictions use its own eigenvalues.
    let chain = if incr.is_exchangeable() {
        Some(zqwalk::grouped::GroupedChain::from_increment(&incr)?)
    } else {
        None
    };
    let expected = prediction(&incr, chain.as_ref(), &x0, t, what)?;
    let report: Option<ComparisonReport> = expected.as_ref().map(|e| compare(e, &empirical)).transpose()?;

    let mut keys: Vec<&Vec<usize>> = empirical.counts.keys().collect();
    if let Some(e) = &expected {
        keys.extend(e.keys());
        keys.sort();
        keys.dedup();
    }
    let rows: Vec<SimRow> = keys
        .into_iter()
        .map(|k| {
            let count = empirical.counts.get(k).copied().unwrap_or(0);
            SimRow {
                outcome: join(k),
                count,
                frequency: count as f64 / empirical.total as f64,
                expected: expected.as_ref().map(|e| e.get(k).copied().unwrap_or(0.0)),
            }
        })
        .collect();
    let extra = json!({
        "t": t,
        "paths": paths,
        "seed": seed,
        "observable": what,
        "start": x0.entries(),
        "comparison": report,
        "passes": report.map(|r| r.passes()),
    });
    emit(io_args, &resolved, Format::Json, &["outcome", "count", "frequency", "expected"], &rows, extra)
}

#[derive(Serialize)]
struct DensityRow {
    b: f64,
    density: f64,
}

fn cmd_torus(io_args: &IoArgs, t: u32, a: f64, grid: usize, eps: f64) -> CliResult<()> {
    let (resolved, walk) = load(&io_args.spec)?;
    let Walk::Torus { k } = walk else {
        return Err(Error::Unsupported("torus needs a circle law such as von-mises".into()).into());
    };
    let law = TorusLaw::von_mises(k)?;
    let rows: Vec<DensityRow> = density_grid(&law, t, a, grid, eps)?
        .into_iter()
        .map(|(b, density)| DensityRow { b, density })
        .collect();
    let extra = json!({ "t": t, "a": a, "eps": eps });
    emit(io_args, &resolved, Format::Csv, &["b", "density"], &rows, extra)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Eigs { io, table } => cmd_eigs(&io, table),
        Command::Chisq { io, times, start, .. } => cmd_chisq(&io, &times, start.as_deref()),
        Command::Simulate {
            io,
            t,
            paths,
            seed,
            observable,
            start,
        } => cmd_simulate(&io, t, paths, seed, observable.into(), start.as_deref()),
        Command::Torus { io, t, a, grid, eps } => cmd_torus(&io, t, a, grid, eps),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
