use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcx::harness::{run_hadamard, run_oracle, run_verify, RunConfig, VerifyCase, VerifyReport};
use qcx::{Axis, Integrand};

/// Seeded verification of laminate constructions and envelope estimates.
#[derive(Parser, Debug)]
#[command(name = "qcx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a constructor or certificate case family on sampled matrices.
    Verify {
        /// One of 2x2, 2x3, 2x2N, adjugate-NxN, triple-3x3, block-sum,
        /// segment-lemma, quadratic-endpoints.
        case: String,
        #[command(flatten)]
        common: Common,
        /// Number of 2x2 blocks for 2x2N and block-sum.
        #[arg(long)]
        blocks: Option<usize>,
        /// Matrix size for adjugate-NxN.
        #[arg(long)]
        dim: Option<usize>,
        /// One-based line index for adjugate-NxN (default: last).
        #[arg(long)]
        j: Option<usize>,
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        /// Reject samples whose determinant magnitude is at most this.
        #[arg(long)]
        min_det: Option<f64>,
    },
    /// Compare oracle estimates with the claimed envelope.
    Oracle {
        phi: String,
        phi0: String,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        dirs: Option<usize>,
        /// Half-width of each line search.
        #[arg(long = "L")]
        line_halfwidth: Option<f64>,
        /// Grid points per line search.
        #[arg(long)]
        samples: Option<usize>,
        /// Seed each search with the constructor's split direction.
        #[arg(long)]
        informed: bool,
    },
    /// Random check that phi >= phi0.
    Hadamard {
        phi: String,
        phi0: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Number of sampled cases.
    #[arg(long)]
    n: Option<usize>,
    /// Falls back to QCX_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// File of `key = value` lines using the long flag names; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    tol_coincidence: Option<f64>,
    #[arg(long)]
    tol_barycenter: Option<f64>,
    #[arg(long)]
    tol_split: Option<f64>,
    #[arg(long)]
    tol_value: Option<f64>,
    #[arg(long)]
    tol_certificate: Option<f64>,
    #[arg(long)]
    tol_identity: Option<f64>,
    #[arg(long)]
    tol_representation: Option<f64>,
    #[arg(long)]
    tol_oracle_gap: Option<f64>,
    #[arg(long)]
    tol_hadamard: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    Row,
    Column,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Axis {
        match a {
            AxisArg::Row => Axis::Row,
            AxisArg::Column => Axis::Column,
        }
    }
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Res<T> = std::result::Result<T, Failure>;

/// Parsed `key = value` config file. Values are consumed as they are read so
/// that leftovers can be reported as unknown keys.
struct ConfigFile(BTreeMap<String, String>);

impl ConfigFile {
    fn load(path: Option<&Path>) -> Res<Self> {
        let mut map = BTreeMap::new();
        let Some(path) = path else { return Ok(ConfigFile(map)) };
        let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure(format!("{}:{}: expected key = value", path.display(), no + 1)))?;
            map.insert(k.trim().trim_start_matches("--").replace('_', "-"), v.trim().to_string());
        }
        Ok(ConfigFile(map))
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Res<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| Failure(format!("config key `{key}`: {e}"))),
        }
    }

    fn pick<T: std::str::FromStr>(&mut self, key: &str, flag: Option<T>) -> Res<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let from_file = self.take(key)?;
        Ok(flag.or(from_file))
    }

    fn finish(self) -> Res<()> {
        match self.0.keys().next() {
            None => Ok(()),
            Some(k) => Err(Failure(format!("unknown config key `{k}`"))),
        }
    }
}

fn parse_axis(s: &str) -> Res<Axis> {
    match s.to_ascii_lowercase().as_str() {
        "row" => Ok(Axis::Row),
        "column" | "col" => Ok(Axis::Column),
        _ => Err(Failure(format!("axis must be row or column, got `{s}`"))),
    }
}

struct Output {
    out: Option<PathBuf>,
    format: Format,
}

fn apply_common(c: &Common, file: &mut ConfigFile, cfg: &mut RunConfig) -> Res<Output> {
    if let Some(n) = file.pick("n", c.n)? {
        cfg.n = n;
    }
    let env_seed = match std::env::var("QCX_SEED") {
        Ok(s) => Some(s.trim().parse::<u64>().map_err(|e| Failure(format!("QCX_SEED: {e}")))?),
        Err(_) => None,
    };
    cfg.seed = file.pick("seed", c.seed)?.or(env_seed).unwrap_or(0);
    let t = &mut cfg.tol;
    for (key, flag, slot) in [
        ("tol-coincidence", c.tol_coincidence, &mut t.coincidence),
        ("tol-barycenter", c.tol_barycenter, &mut t.barycenter),
        ("tol-split", c.tol_split, &mut t.split),
        ("tol-value", c.tol_value, &mut t.value),
        ("tol-certificate", c.tol_certificate, &mut t.certificate),
        ("tol-identity", c.tol_identity, &mut t.identity),
        ("tol-representation", c.tol_representation, &mut t.representation),
        ("tol-oracle-gap", c.tol_oracle_gap, &mut t.oracle_gap),
        ("tol-hadamard", c.tol_hadamard, &mut t.hadamard),
    ] {
        if let Some(v) = file.pick(key, flag)? {
            *slot = v;
        }
    }
    let out = file.pick::<PathBuf>("out", c.out.clone())?;
    let format = match file.take::<String>("format")? {
        _ if c.format.is_some() => c.format.unwrap(),
        Some(s) => Format::from_str(&s, true).map_err(Failure)?,
        None => Format::Json,
    };
    Ok(Output { out, format })
}

fn run(cli: Cli) -> Res<VerifyReport> {
    let mut cfg = RunConfig::default();
    let (report, output) = match cli.command {
        Command::Verify { case, common, blocks, dim, j, axis, min_det } => {
            let mut file = ConfigFile::load(common.config.as_deref())?;
            let output = apply_common(&common, &mut file, &mut cfg)?;
            let case: VerifyCase = case.parse()?;
            if let Some(b) = file.pick("blocks", blocks)? {
                cfg.blocks = b;
            }
            if let Some(d) = file.pick("dim", dim)? {
                cfg.dim = d;
            }
            cfg.j = file.pick("j", j)?;
            let file_axis = file.take::<String>("axis")?;
            if let Some(a) = axis {
                cfg.axis = a.into();
            } else if let Some(s) = file_axis {
                cfg.axis = parse_axis(&s)?;
            }
            if let Some(m) = file.pick("min-det", min_det)? {
                cfg.min_det = m;
            }
            file.finish()?;
            (run_verify(case, &cfg)?, output)
        }
        Command::Oracle { phi, phi0, common, depth, dirs, line_halfwidth, samples, informed } => {
            let mut file = ConfigFile::load(common.config.as_deref())?;
            let output = apply_common(&common, &mut file, &mut cfg)?;
            let o = &mut cfg.oracle;
            if let Some(d) = file.pick("depth", depth)? {
                o.depth = d;
            }
            if let Some(d) = file.pick("dirs", dirs)? {
                o.directions = d;
            }
            if let Some(l) = file.pick("L", line_halfwidth)? {
                o.line_halfwidth = l;
            }
            if let Some(s) = file.pick("samples", samples)? {
                o.line_samples = s;
            }
            o.informed = informed || file.take::<bool>("informed")?.unwrap_or(false);
            file.finish()?;
            let (phi, phi0): (Integrand, Integrand) = (phi.parse()?, phi0.parse()?);
            (run_oracle(&phi, &phi0, &cfg)?, output)
        }
        Command::Hadamard { phi, phi0, common } => {
            let mut file = ConfigFile::load(common.config.as_deref())?;
            let output = apply_common(&common, &mut file, &mut cfg)?;
            file.finish()?;
            let (phi, phi0): (Integrand, Integrand) = (phi.parse()?, phi0.parse()?);
            (run_hadamard(&phi, &phi0, &cfg)?, output)
        }
    };
    let body = match output.format {
        Format::Json => report.to_json_string(),
        Format::Csv => report.to_csv(),
    };
    match &output.out {
        Some(path) => fs::write(path, body).map_err(|e| Failure(format!("{}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            let s = &report.summary;
            eprintln!("{} {}: {} cases, {} pass, {} fail", report.metadata.command, report.metadata.target, s.cases, s.pass, s.fail);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure(msg)) => {
            eprintln!("qcx: {msg}");
            ExitCode::from(2)
        }
    }
}
