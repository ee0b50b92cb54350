//! Argument definitions and command dispatch.
//!
//! Exit codes: 0 analyzed/verified, 1 not a Riesz basis or suite violations,
//! 2 input errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use krein_core::generate::{Defect, GenSpec, SignaturePolicy};
use krein_core::Tolerances;

use crate::analysis::{analyze, analyze_timed, certify, duals_only, summary, Certified};
use crate::error::CliError;
use crate::format::{Instance, InstanceFile, Report};
use crate::gen::generate;
use crate::verify::{render_log, run_trials, summarize, Mutation, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "krein",
    version,
    about = "Riesz bases and duals in finite-dimensional Krein spaces"
)]
pub struct Cli {
    /// Relative threshold for rank, membership and invertibility decisions.
    #[arg(long, global = true)]
    pub rank_tol: Option<f64>,
    /// Relative reconstruction residual allowed by the verify suite.
    #[arg(long, global = true)]
    pub recon_tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Instance file (JSON, version "krein/1").
    pub path: PathBuf,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Attach wall-clock timings to the report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split the family, compute Gram data and both Riesz verdicts.
    Analyze(ReportArgs),
    /// Factor a Riesz family and emit its duals and residuals.
    Certify {
        #[command(flatten)]
        report: ReportArgs,
        /// Emit only the duals and the biorthogonality residual.
        #[arg(long)]
        duals_only: bool,
    },
    /// Same as `certify --duals-only`.
    Duals(ReportArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Run the invariant suite on generated instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ambient dimension; the signature is drawn at random unless given.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Fixed inertia as `p,q`.
    #[arg(long, value_parser = parse_signature)]
    pub signature: Option<(usize, usize)>,
    /// Largest condition number of the generated operators.
    #[arg(long, default_value_t = 1e4)]
    pub cond_cap: f64,
    /// none, drop_vector, duplicate_vector, neutral_inject or mix_halves.
    #[arg(long, default_value = "none")]
    pub defect: Defect,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub max_dim: usize,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
    /// Print one line per trial before the summary.
    #[arg(long)]
    pub log: bool,
    /// Inject a known bug to check the suite catches it (flip_gram_minus).
    #[arg(long, hide = true)]
    pub inject: Option<String>,
}

fn parse_signature(s: &str) -> Result<(usize, usize), String> {
    let (p, q) = s
        .split_once(',')
        .ok_or_else(|| format!("expected p,q, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((parse(p)?, parse(q)?))
}

impl Cli {
    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let d = Tolerances::default();
        Tolerances::new(
            self.rank_tol.unwrap_or(d.rank_tol),
            d.sym_tol,
            self.recon_tol.unwrap_or(d.recon_tol),
        )
        .map_err(|e| CliError::BadFlags(e.to_string()))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance(path: &Path, tol: Tolerances) -> Result<Instance, CliError> {
    InstanceFile::parse(&read(path)?)?.build(tol)
}

fn core_err(e: krein_core::KreinError) -> CliError {
    CliError::Schema(e.to_string())
}

fn emit_report(args: &ReportArgs, report: &Report, out: &mut dyn Write) -> Result<(), CliError> {
    let json = report.to_json();
    if let Some(path) = &args.out {
        write_file(path, &json)?;
    }
    let text = if args.json { json } else { summary(report) };
    let _ = out.write_all(text.as_bytes());
    Ok(())
}

fn cmd_analyze(args: &ReportArgs, tol: Tolerances, out: &mut dyn Write) -> Result<i32, CliError> {
    let inst = load_instance(&args.path, tol)?;
    let report = if args.timings {
        analyze_timed(&inst, &tol)
    } else {
        analyze(&inst, &tol)
    }
    .map_err(core_err)?;
    emit_report(args, &report, out)?;
    Ok(EXIT_OK)
}

fn cmd_certify(
    args: &ReportArgs,
    duals: bool,
    tol: Tolerances,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let inst = load_instance(&args.path, tol)?;
    match certify(&inst, &tol, args.timings).map_err(core_err)? {
        Certified::NotRiesz(report) => {
            let _ = writeln!(
                err,
                "not a Riesz basis: {}",
                report.verdicts.gram.failure_reason
            );
            emit_report(args, &report, out)?;
            Ok(EXIT_FAILURE)
        }
        Certified::Riesz(report) if duals => {
            let d = duals_only(&report).expect("certified reports carry duals");
            let mut json = serde_json::to_string_pretty(&d).expect("duals serialize");
            json.push('\n');
            if let Some(path) = &args.out {
                write_file(path, &json)?;
            }
            let text = if args.json {
                json
            } else {
                let mut s = format!(
                    "{} duals, biorthogonality residual {:e}\n",
                    d.duals.len(),
                    d.biorthogonality_residual
                );
                for (n, g) in d.duals.iter().enumerate() {
                    s += &format!("g[{n}] = {g:?}\n");
                }
                s
            };
            let _ = out.write_all(text.as_bytes());
            Ok(EXIT_OK)
        }
        Certified::Riesz(report) => {
            emit_report(args, &report, out)?;
            Ok(EXIT_OK)
        }
    }
}

pub fn gen_spec(args: &GenArgs) -> Result<GenSpec, CliError> {
    let mut spec = GenSpec {
        seed: args.seed,
        cond_cap: args.cond_cap,
        defect: args.defect,
        ..GenSpec::default()
    };
    match (args.dim, args.signature) {
        (Some(0), _) => return Err(CliError::BadFlags("--dim must be at least 1".into())),
        (Some(d), Some((p, q))) if d != p + q => {
            return Err(CliError::BadFlags(format!(
                "--dim {d} disagrees with --signature {p},{q}"
            )))
        }
        (_, Some((p, q))) => spec.signature = SignaturePolicy::Fixed(p, q),
        (Some(d), None) => spec.dim_range = (d, d),
        (None, None) => {}
    }
    spec.validate()
        .map_err(|e| CliError::BadFlags(e.to_string()))?;
    Ok(spec)
}

fn cmd_gen(args: &GenArgs, tol: Tolerances, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = generate(&gen_spec(args)?, tol)?;
    let json = file.to_json();
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => {
            let _ = out.write_all(json.as_bytes());
        }
    }
    Ok(EXIT_OK)
}

pub fn suite_config(args: &VerifyArgs, tol: Tolerances) -> Result<SuiteConfig, CliError> {
    if args.max_dim < 1 || args.max_dim > krein_core::generate::MAX_DIM {
        return Err(CliError::BadFlags(format!(
            "--max-dim must lie in 1..={}",
            krein_core::generate::MAX_DIM
        )));
    }
    let mutation = match args.inject.as_deref() {
        None => Mutation::None,
        Some("flip_gram_minus") => Mutation::FlipGramMinus,
        Some(other) => return Err(CliError::BadFlags(format!("unknown injection {other:?}"))),
    };
    Ok(SuiteConfig {
        trials: args.trials,
        seed: args.seed,
        max_dim: args.max_dim,
        tol,
        mutation,
        ..SuiteConfig::default()
    })
}

fn cmd_verify(args: &VerifyArgs, tol: Tolerances, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = suite_config(args, tol)?;
    let records = run_trials(&cfg);
    let s = summarize(&cfg, &records);
    let mut text = String::new();
    if args.log {
        text += &render_log(&records);
    }
    if args.json {
        text += &serde_json::to_string_pretty(&s).expect("summary serializes");
        text.push('\n');
    } else {
        text += &s.render();
    }
    let _ = out.write_all(text.as_bytes());
    Ok(if s.violations == 0 {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

/// Executes a parsed command line, writing to the given streams; returns
/// the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = cli.tolerances().and_then(|tol| match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, tol, out),
        Command::Certify { report, duals_only } => cmd_certify(report, *duals_only, tol, out, err),
        Command::Duals(a) => cmd_certify(a, true, tol, out, err),
        Command::Gen(a) => cmd_gen(a, tol, out),
        Command::Verify(a) => cmd_verify(a, tol, out),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
