//! `renyi-gof`: sampling, entropy estimation, goodness-of-fit tests and
//! Monte Carlo studies from the command line.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 data error.

mod error;
mod input;
mod study;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use renyi_gof::distributions::TestFamily;
use renyi_gof::gof::{GofStatistic, PreparedSample};
use renyi_gof::knn::entropy_estimate;
use renyi_gof::sampler::sample;
use renyi_gof::{DistributionSpec, RngStream, ShapeParam, SpdMatrix};
use serde_json::json;

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "renyi-gof", version, about = "Nearest-neighbour Rényi entropy and maximum-entropy goodness-of-fit tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample and write it as CSV.
    Sample(SampleArgs),
    /// Estimate the Rényi (or Shannon, q = 1) entropy of a CSV sample.
    Entropy(EntropyArgs),
    /// Compute the W (Student) or W* (Pearson II) statistic of a CSV sample.
    Test(TestArgs),
    /// Run a Monte Carlo study described by a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleFamily {
    Gaussian,
    Student,
    Pearson2,
}

#[derive(Clone, Copy, ValueEnum)]
enum GofFamily {
    Student,
    Pearson2,
}

impl From<GofFamily> for TestFamily {
    fn from(f: GofFamily) -> Self {
        match f {
            GofFamily::Student => TestFamily::Student,
            GofFamily::Pearson2 => TestFamily::PearsonII,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    family: SampleFamily,
    /// Degrees of freedom (student), `inf` for Gaussian.
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<ShapeParam>,
    /// Shape parameter (pearson2), `inf` for Gaussian.
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<ShapeParam>,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Stream identifier within the seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Location vector, comma separated (default: zero).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    location: Option<Vec<f64>>,
    /// Scale matrix entries, row-major and comma separated (default: identity).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    scale: Option<Vec<f64>>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Entropy order; 1 selects the Shannon estimator.
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct TestArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    family: GofFamily,
    /// Null degrees of freedom for the student test (`inf` allowed).
    #[arg(long, allow_negative_numbers = true)]
    nu0: Option<ShapeParam>,
    /// Null shape for the pearson2 test (`inf` allowed).
    #[arg(long, allow_negative_numbers = true)]
    eta0: Option<ShapeParam>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// summary.csv from `experiment`, used for accept/reject decisions.
    #[arg(long)]
    critical_table: Option<PathBuf>,
    /// Significance levels to decide at (requires --critical-table).
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    out_dir: PathBuf,
    /// Worker threads (default: available parallelism). Results do not
    /// depend on this value.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Entropy(a) => cmd_entropy(a),
        Command::Test(a) => cmd_test(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn stdout_line(text: &str) -> CliResult<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::io("writing to stdout", e))
}

fn cmd_sample(a: SampleArgs) -> CliResult<()> {
    if a.dim == 0 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let param = match a.family {
        SampleFamily::Gaussian => {
            if a.nu.is_some() || a.eta.is_some() {
                return Err(CliError::Usage("--nu/--eta do not apply to the gaussian family".into()));
            }
            ShapeParam::Infinite
        }
        SampleFamily::Student => {
            let nu = a.nu.ok_or_else(|| CliError::Usage("--family student requires --nu".into()))?;
            if let ShapeParam::Finite(v) = nu {
                if !(v > 2.0) {
                    return Err(CliError::Usage(format!("--nu must satisfy nu > 2, got {v}")));
                }
            }
            nu
        }
        SampleFamily::Pearson2 => {
            let eta = a.eta.ok_or_else(|| CliError::Usage("--family pearson2 requires --eta".into()))?;
            if let ShapeParam::Finite(v) = eta {
                if !(v > 0.0) {
                    return Err(CliError::Usage(format!("--eta must satisfy eta > 0, got {v}")));
                }
            }
            eta
        }
    };
    let location = a.location.clone().unwrap_or_else(|| vec![0.0; a.dim]);
    let scale = match &a.scale {
        Some(entries) => SpdMatrix::new(a.dim, entries.clone())
            .map_err(|e| CliError::Usage(format!("--scale: {e}")))?,
        None => SpdMatrix::identity(a.dim),
    };
    let spec = match a.family {
        SampleFamily::Pearson2 => DistributionSpec::pearson_ii(param, location.clone(), scale),
        _ => DistributionSpec::student(param, location.clone(), scale),
    }?;
    let points = sample(&spec, a.n, &mut RngStream::new(a.seed, a.stream))?;

    let family = match a.family {
        SampleFamily::Gaussian => "gaussian",
        SampleFamily::Student => "student",
        SampleFamily::Pearson2 => "pearson2",
    };
    let config = json!({
        "family": family,
        "param": param,
        "dim": a.dim,
        "n": a.n,
        "seed": a.seed,
        "stream": a.stream,
        "location": location,
        "scale": spec.scale().entries(),
    });
    let comments = vec![
        format!("tool: renyi-gof {}", env!("CARGO_PKG_VERSION")),
        format!("seed: {} stream: {}", a.seed, a.stream),
        format!("config: {config}"),
    ];
    let file = File::create(&a.output).map_err(|e| CliError::io(format!("cannot write {}", a.output.display()), e))?;
    let mut w = BufWriter::new(file);
    points
        .write_csv(&mut w, &comments)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(format!("writing {}", a.output.display()), e))
}

fn cmd_entropy(a: EntropyArgs) -> CliResult<()> {
    if !(a.q > 0.0) || !a.q.is_finite() {
        return Err(CliError::Usage(format!("--q must be positive and finite, got {}", a.q)));
    }
    if a.k == 0 || !((a.k as f64) > a.q - 1.0) {
        return Err(CliError::Usage(format!("--k must satisfy k >= 1 and k > q - 1, got k = {}, q = {}", a.k, a.q)));
    }
    let x = input::read_sample(&a.input)?;
    if a.k >= x.len() {
        return Err(CliError::Usage(format!("--k = {} must be below the sample size {}", a.k, x.len())));
    }
    let est = entropy_estimate(&x, a.k, a.q)?;
    match a.format {
        Format::Json => stdout_line(&serde_json::to_string(&est).expect("estimate serializes")),
        Format::Csv => stdout_line(&format!(
            "value,q,k,n,dim\n{:?},{:?},{},{},{}",
            est.value, est.q, est.k, est.n, est.dim
        )),
    }
}

fn statistic_record(s: &GofStatistic) -> serde_json::Value {
    let mut v = json!({
        "W": s.value,
        "family": s.family,
        "null_param": s.null_param,
        "q": s.q,
        "k": s.k,
        "n": s.n,
        "m": s.dim,
    });
    if let Some(w) = &s.warning {
        v["warning"] = json!(w);
    }
    v
}

fn cmd_test(a: TestArgs) -> CliResult<()> {
    let family = TestFamily::from(a.family);
    let null_param = match (family, a.nu0, a.eta0) {
        (TestFamily::Student, Some(p), None) => p,
        (TestFamily::PearsonII, None, Some(p)) => p,
        (TestFamily::Student, _, _) => return Err(CliError::Usage("--family student takes --nu0 (and not --eta0)".into())),
        (TestFamily::PearsonII, _, _) => {
            return Err(CliError::Usage("--family pearson2 takes --eta0 (and not --nu0)".into()))
        }
    };
    match (family, null_param) {
        (TestFamily::Student, ShapeParam::Finite(v)) if !(v > 2.0) => {
            return Err(CliError::Usage(format!("--nu0 must satisfy nu0 > 2, got {v}")))
        }
        (TestFamily::PearsonII, ShapeParam::Finite(v)) if !(v > 0.0) => {
            return Err(CliError::Usage(format!("--eta0 must satisfy eta0 > 0, got {v}")))
        }
        _ => {}
    }
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if a.alpha.is_some() && a.critical_table.is_none() {
        return Err(CliError::Usage(
            "--alpha needs --critical-table; generate one with `renyi-gof experiment <config> <out_dir>` and pass its summary.csv".into(),
        ));
    }
    let table = a.critical_table.as_deref().map(input::read_critical_table).transpose()?;

    let x = input::read_sample(&a.input)?;
    if a.k >= x.len() {
        return Err(CliError::Usage(format!("--k = {} must be below the sample size {}", a.k, x.len())));
    }
    let stat = PreparedSample::new(&x, a.k)?.statistic(family, null_param, a.k)?;

    let mut decisions = Vec::new();
    if let Some((table_family, rows)) = table {
        if let Some(f) = table_family {
            // The Gaussian null is shared by both families.
            if f != family && null_param != ShapeParam::Infinite {
                return Err(CliError::Usage(format!("critical table is for the {f} family, not {family}")));
            }
        }
        let row = rows
            .iter()
            .find(|r| r.dim == stat.dim && r.n == stat.n && r.k == stat.k && r.null_param == null_param)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "critical table has no null row for m = {}, N = {}, k = {}, null = {null_param}",
                    stat.dim, stat.n, stat.k
                ))
            })?;
        let alphas = a.alpha.clone().unwrap_or_else(|| row.critical.iter().map(|&(al, _)| al).collect());
        for alpha in alphas {
            let (_, critical) = row
                .critical
                .iter()
                .find(|&&(al, _)| (al - alpha).abs() < 1e-12)
                .ok_or_else(|| CliError::Usage(format!("critical table has no column for alpha = {alpha}")))?;
            decisions.push((alpha, *critical, stat.value > *critical));
        }
    }

    match a.format {
        Format::Json => {
            stdout_line(&statistic_record(&stat).to_string())?;
            for (alpha, critical, reject) in decisions {
                stdout_line(&json!({"alpha": alpha, "critical": critical, "reject": reject}).to_string())?;
            }
            Ok(())
        }
        Format::Csv => {
            stdout_line("W,family,null_param,q,k,n,m")?;
            stdout_line(&format!(
                "{:?},{},{},{:?},{},{},{}",
                stat.value,
                serde_json::to_value(stat.family).expect("family serializes").as_str().unwrap_or(""),
                stat.null_param,
                stat.q,
                stat.k,
                stat.n,
                stat.dim
            ))?;
            if !decisions.is_empty() {
                stdout_line("alpha,critical,reject")?;
                for (alpha, critical, reject) in decisions {
                    stdout_line(&format!("{alpha:?},{critical:?},{reject}"))?;
                }
            }
            Ok(())
        }
    }
}

fn cmd_experiment(a: ExperimentArgs) -> CliResult<()> {
    let config = study::load(&a.config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = a.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let results = pool.install(|| study::run(&config))?;
    let written = study::write_outputs(&config, &results, &a.out_dir)?;
    for name in written {
        eprintln!("wrote {}", a.out_dir.join(name).display());
    }
    Ok(())
}
