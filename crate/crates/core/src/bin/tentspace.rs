//! Command-line front end: quasi-norm evaluation, factor construction,
//! verification runs, and report rendering.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 for
//! configuration or usage errors (including unreadable inputs).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use tentspace::config::{parse_suite_list, read_config_file, RunConfig};
use tentspace::exponent::{Avg, Exp};
use tentspace::factorization::{
    factorize_f1, factorize_f2, factorize_f3, factorize_general, NamedConstant,
};
use tentspace::functionals::{tent_norm, NormSpec};
use tentspace::geometry::WhitneyParams;
use tentspace::grid::{read_grid_file, write_grid_file, GridFunction};
use tentspace::report::{format_number, VerificationReport};
use tentspace::suites::run_suite;

#[derive(Parser)]
#[command(
    name = "tentspace",
    version,
    about = "Weighted tent-space quasi-norms, explicit factorizations, and a verification harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a quasi-norm of a grid function read from a file.
    Norm {
        /// Grid file (`n,Ny,t_levels,t_min,t_max` header, one value per line).
        grid_file: PathBuf,
        /// Boundary exponent: a positive rational such as `2` or `4/3`, or `inf`.
        #[arg(long)]
        p: Exp,
        /// Aperture exponent: a positive rational or `inf`.
        #[arg(long)]
        q: Exp,
        /// Box-averaging exponent: a positive rational, `inf`, or `none` for
        /// classical (unaveraged) functionals.
        #[arg(long)]
        r: Avg,
        /// Height weight power; the function is weighted by t^beta.
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        /// Cone/tent aperture.
        #[arg(long, default_value_t = 1.0)]
        aperture: f64,
        /// Whitney box spatial half-width factor (0 < alpha1 < 1/alpha2).
        #[arg(long, default_value_t = 0.25)]
        alpha1: f64,
        /// Whitney box height ratio (alpha2 > 1).
        #[arg(long, default_value_t = 2.0)]
        alpha2: f64,
    },
    /// Factor a grid function and write the factors as grid files.
    Factorize {
        /// Grid file holding the function to factor.
        grid_file: PathBuf,
        /// Which construction to run.
        #[arg(long, value_enum)]
        which: Which,
        /// Source spec `p:q:r:beta[:aperture]` the input is measured in.
        #[arg(long, default_value = "2:2:2:0", allow_hyphen_values = true)]
        s0: NormSpec,
        /// Intermediate boundary exponent for F2 (default: the built-in rule).
        #[arg(long)]
        ptilde: Option<Exp>,
        /// First target spec (required for `general`).
        #[arg(long, allow_hyphen_values = true)]
        s1: Option<NormSpec>,
        /// Second target spec (required for `general`).
        #[arg(long, allow_hyphen_values = true)]
        s2: Option<NormSpec>,
        /// Directory for the factor files (default: alongside the input).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run verification suites and write CSV + JSON reports.
    Verify {
        /// Config file of `key = value` lines; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override: comma-separated suite list, or `all`.
        #[arg(long)]
        suites: Option<String>,
        /// Override: trial count for randomized checks.
        #[arg(long)]
        trials: Option<u64>,
        /// Override: master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override: report path prefix (writes `<output>.csv`, `<output>.json`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a saved CSV report as a human-readable table.
    Report {
        /// CSV report produced by `verify`.
        report_file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    /// Split off the box-wise supremum; the cofactor carries the size.
    #[value(name = "F1", alias = "f1")]
    F1,
    /// Split off a non-tangential density; the cofactor is a Carleson part.
    #[value(name = "F2", alias = "f2")]
    F2,
    /// Three factors: supremum part, density part, averaging part.
    #[value(name = "F3", alias = "f3")]
    F3,
    /// Two factors along a Hölder split s0 = s1 + s2 of all exponents.
    #[value(name = "general")]
    General,
}

impl Which {
    fn tag(self) -> &'static str {
        match self {
            Which::F1 => "f1",
            Which::F2 => "f2",
            Which::F3 => "f3",
            Which::General => "general",
        }
    }
}


/// Best-effort stdout line: a closed pipe (e.g. piping into `head`) must
/// not panic or change exit codes.
macro_rules! emit {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Norm {
            grid_file,
            p,
            q,
            r,
            beta,
            aperture,
            alpha1,
            alpha2,
        } => {
            let f = read_grid_file(&grid_file)
                .with_context(|| format!("reading {}", grid_file.display()))?;
            let whitney = WhitneyParams::new(alpha1, alpha2)?;
            let s = NormSpec::with_geometry(p, q, r, beta, aperture, whitney)?;
            let value = tent_norm(&f, &s)?;
            emit!("{}", format_number(value));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Factorize {
            grid_file,
            which,
            s0,
            ptilde,
            s1,
            s2,
            out_dir,
        } => {
            let u = read_grid_file(&grid_file)
                .with_context(|| format!("reading {}", grid_file.display()))?;
            factorize_cmd(&grid_file, &u, which, &s0, ptilde, s1, s2, out_dir)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify {
            config,
            suites,
            trials,
            seed,
            output,
        } => verify_cmd(config, suites, trials, seed, output),
        Cmd::Report { report_file } => {
            let text = fs::read_to_string(&report_file)
                .with_context(|| format!("reading {}", report_file.display()))?;
            let report = VerificationReport::from_csv(&text)?;
            emit!("{}", report.human_table());
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn factorize_cmd(
    grid_file: &Path,
    u: &GridFunction,
    which: Which,
    s0: &NormSpec,
    ptilde: Option<Exp>,
    s1: Option<NormSpec>,
    s2: Option<NormSpec>,
    out_dir: Option<PathBuf>,
) -> anyhow::Result<()> {
    struct Output {
        factors: Vec<GridFunction>,
        specs: Vec<NormSpec>,
        norms: Vec<f64>,
        source_norm: f64,
        reconstruction_error: f64,
        constants: Vec<NamedConstant>,
    }

    let out = match which {
        Which::F1 => {
            let p = factorize_f1(u, s0)?;
            Output {
                factors: p.factors.to_vec(),
                specs: p.target_specs.to_vec(),
                norms: p.factor_norms.to_vec(),
                source_norm: p.source_norm,
                reconstruction_error: p.reconstruction_error,
                constants: p.constants,
            }
        }
        Which::F2 => {
            let p = factorize_f2(u, s0, ptilde)?;
            Output {
                factors: p.factors.to_vec(),
                specs: p.target_specs.to_vec(),
                norms: p.factor_norms.to_vec(),
                source_norm: p.source_norm,
                reconstruction_error: p.reconstruction_error,
                constants: p.constants,
            }
        }
        Which::F3 => {
            let p = factorize_f3(u, s0)?;
            Output {
                factors: p.factors.to_vec(),
                specs: p.target_specs.to_vec(),
                norms: p.factor_norms.to_vec(),
                source_norm: p.source_norm,
                reconstruction_error: p.reconstruction_error,
                constants: p.constants,
            }
        }
        Which::General => {
            let (Some(s1), Some(s2)) = (s1, s2) else {
                bail!("--which general requires --s1 and --s2");
            };
            let p = factorize_general(u, s0, &s1, &s2)?;
            Output {
                factors: p.factors.to_vec(),
                specs: p.target_specs.to_vec(),
                norms: p.factor_norms.to_vec(),
                source_norm: p.source_norm,
                reconstruction_error: p.reconstruction_error,
                constants: p.constants,
            }
        }
    };

    let dir = match out_dir {
        Some(d) => d,
        None => grid_file.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = grid_file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "grid".to_string());

    emit!("source norm ({s0}) = {}", format_number(out.source_norm));
    for (i, ((factor, spec), norm)) in out
        .factors
        .iter()
        .zip(&out.specs)
        .zip(&out.norms)
        .enumerate()
    {
        let path = dir.join(format!("{stem}.{}.factor{}.grid", which.tag(), i + 1));
        write_grid_file(factor, &path).with_context(|| format!("writing {}", path.display()))?;
        emit!(
            "factor {} -> {} : norm = {}, file = {}",
            i + 1,
            spec,
            format_number(*norm),
            path.display()
        );
    }
    emit!(
        "reconstruction error = {}",
        format_number(out.reconstruction_error)
    );
    let product: f64 = out.norms.iter().product();
    let ratio = if out.source_norm > 0.0 {
        product / out.source_norm
    } else {
        0.0
    };
    emit!("norm product / source norm = {}", format_number(ratio));
    for k in &out.constants {
        emit!("constant {} = {}", k.name, format_number(k.value));
    }
    Ok(())
}

fn verify_cmd(
    config: Option<PathBuf>,
    suites: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let mut cfg = match &config {
        Some(path) => {
            read_config_file(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => RunConfig::default_config(),
    };
    if let Some(raw) = suites {
        cfg.suites = parse_suite_list(&raw)?;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = output {
        cfg.output = o;
    }
    cfg.validate()?;

    let started = Instant::now();
    let report = run_suite(&cfg)?;
    for rec in &report.records {
        eprintln!("timing {}/{}: {:.3}s", rec.suite, rec.check, rec.seconds);
    }
    eprintln!("timing total: {:.3}s", started.elapsed().as_secs_f64());

    let (csv_path, json_path) = report
        .write_files(&cfg.output)
        .with_context(|| format!("writing report files at {}", cfg.output.display()))?;

    emit!("{}", report.human_table());
    emit!("report: {} and {}", csv_path.display(), json_path.display());
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
