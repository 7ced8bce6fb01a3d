//! `lyapcert` command-line front end.
//!
//! Exit codes: 0 certified-stable, 1 violated, 2 inconclusive (or too few
//! surfaces for `levels`), 3 for every error.

mod plot;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use lyapcert::certify::{CertifyError, Verdict};
use lyapcert::config::{ConfigError, SystemConfig};
use lyapcert::geometry::write_mesh;
use lyapcert::pipeline::{extract_levels, run_certify, PipelineError, RunOptions};

const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "lyapcert", version, about = "Certify Lyapunov stability from nested level sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a certificate.
    Certify {
        config: PathBuf,
        /// Certificate path; defaults to `<config stem>.cert.json` beside the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the trajectory falsifier.
        #[arg(long)]
        falsify: bool,
        /// Falsifier seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for one `t,x1..xn` CSV per falsifier trajectory.
        #[arg(long, value_name = "DIR")]
        trajectories: Option<PathBuf>,
    },
    /// Extract the nested family and write one mesh file per surface.
    Levels {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a 2-D certificate as SVG.
    Plot {
        certificate: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory of trajectory CSVs to overlay.
        #[arg(long, value_name = "DIR")]
        trajectories: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
}

pub fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_error(dir))?;
    tmp.write_all(contents.as_bytes()).map_err(io_error(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

fn configure_threads() {
    if let Ok(v) = std::env::var("LYAPCERT_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring LYAPCERT_THREADS={v:?}"),
        }
    }
}

fn load(path: &Path) -> Result<lyapcert::config::System, CliError> {
    let cfg = SystemConfig::load(path).map_err(|e| match e {
        ConfigError::Toml(msg) => ConfigError::Toml(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(cfg.validate()?)
}

fn cmd_certify(
    config: &Path,
    out: Option<PathBuf>,
    falsify: bool,
    seed: Option<u64>,
    traj_dir: Option<PathBuf>,
) -> Result<u8, CliError> {
    let mut sys = load(config)?;
    if let Some(s) = seed {
        sys.falsify.seed = s;
    }
    let opts = RunOptions {
        falsify,
        keep_trajectories: traj_dir.is_some(),
    };
    let mut outcome = run_certify(&sys, &opts)?;
    let out = out.unwrap_or_else(|| {
        let stem = config.file_stem().unwrap_or_default().to_string_lossy();
        config.with_file_name(format!("{stem}.cert.json"))
    });
    let stem = out
        .file_name()
        .unwrap_or_default()
        .to_string_lossy()
        .trim_end_matches(".json")
        .to_string();
    if let Some(family) = &outcome.family {
        for (rec, s) in outcome.certificate.surfaces.iter_mut().zip(&family.surfaces) {
            let name = format!("{stem}.surface-{}.mesh", rec.index);
            write_atomic(&out.with_file_name(&name), &write_mesh(&s.surface))?;
            rec.mesh = Some(name);
        }
    }
    if let Some(dir) = traj_dir {
        fs::create_dir_all(&dir).map_err(io_error(&dir))?;
        for (i, tr) in outcome.trajectories.iter().enumerate() {
            write_atomic(&dir.join(format!("trajectory-{i:04}.csv")), &tr.to_csv())?;
        }
    }
    let cert = &outcome.certificate;
    write_atomic(&out, &cert.to_json())?;

    println!("verdict: {}", cert.verdict);
    for r in &cert.reasons {
        println!("reason: {r}");
    }
    if let Some(w) = &cert.witness {
        println!("witness: surface {} at {:?}, S = {:e}", w.surface, w.point, w.s);
    }
    if let Some(e) = &cert.empirical {
        println!("falsifier: {} of {} trajectories escaped", e.escapes, e.trials);
    }
    println!("certificate: {}", out.display());
    Ok(cert.verdict.exit_code() as u8)
}

fn cmd_levels(config: &Path, out: &Path) -> Result<u8, CliError> {
    let sys = load(config)?;
    match extract_levels(&sys) {
        Ok(family) => {
            fs::create_dir_all(out).map_err(io_error(out))?;
            for (i, s) in family.surfaces.iter().enumerate() {
                let path = out.join(format!("surface-{i}.mesh"));
                write_atomic(&path, &write_mesh(&s.surface))?;
                println!(
                    "surface {i}: level {:e} (offset {:e}), {} vertices, d(x0) = {:e} -> {}",
                    s.surface.level,
                    s.offset,
                    s.surface.vertex_count(),
                    s.d_to_x0,
                    path.display()
                );
            }
            Ok(0)
        }
        Err(PipelineError::Certify(CertifyError::InsufficientSurfaces {
            found,
            needed,
            rejections,
        })) => {
            println!("accepted {found} of {needed} surfaces");
            for r in &rejections {
                println!("rejected offset {:e}: {}", r.level, r.reason);
            }
            Ok(Verdict::Inconclusive.exit_code() as u8)
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::Certify {
            config,
            out,
            falsify,
            seed,
            trajectories,
        } => cmd_certify(&config, out, falsify, seed, trajectories),
        Command::Levels { config, out } => cmd_levels(&config, &out),
        Command::Plot {
            certificate,
            out,
            trajectories,
        } => plot::cmd_plot(&certificate, &out, trajectories.as_deref()).map(|()| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
