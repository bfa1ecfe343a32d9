//! Command-line driver: problem registry, configuration and output files.

pub mod config;
pub mod emit;
pub mod problems;

pub use config::{parse_config, parse_config_text, Invocation, MeshExport, RunConfig};
pub use emit::emit;
pub use problems::{problem, PROBLEMS};

use crate::afem::{check_hypotheses, consecutive_pairs, run, AfemRun, HypothesisDiagnostics};
use crate::error::{Error, Result};
use std::path::PathBuf;

/// A finished invocation.
#[derive(Debug)]
pub struct Outcome {
    pub run: AfemRun,
    pub diagnostics: Option<HypothesisDiagnostics>,
    pub written: Vec<PathBuf>,
}

/// Runs one configuration and writes its outputs. A run that hits the level
/// cap still writes `config.txt` and `run.csv` for the completed levels.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    let problem = problem(&config.problem)?;
    let afem_run = match run(&problem, &config.afem) {
        Ok(r) => r,
        Err(Error::Run { levels, records }) => {
            std::fs::create_dir_all(&config.out)?;
            std::fs::write(config.out.join("config.txt"), config.to_config_text())?;
            let b = config.afem.bisections.resolve(&problem.mesh);
            std::fs::write(config.out.join("run.csv"), emit::run_csv(&records, config.afem.theta, b))?;
            return Err(Error::Run { levels, records });
        }
        Err(e) => return Err(e),
    };
    let diagnostics = if config.hypotheses {
        Some(check_hypotheses(&afem_run, &problem, &consecutive_pairs(afem_run.levels.len()))?)
    } else {
        None
    };
    let written = emit(&afem_run, &problem, diagnostics.as_ref(), config)?;
    Ok(Outcome {
        run: afem_run,
        diagnostics,
        written,
    })
}

/// Entry point of the `afem` binary: exit code 0 on success, 2 on usage
/// errors, 1 otherwise.
pub fn main_with<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_config(argv) {
        Ok(Invocation::Info(text)) => {
            println!("{text}");
            return 0;
        }
        Ok(Invocation::Run(c)) => c,
        Err(e @ (Error::Usage(_) | Error::Parse { .. })) => {
            eprintln!("{e}");
            return 2;
        }
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    print!("{}", config.to_config_text());
    match execute(&config) {
        Ok(out) => {
            let last = out.run.records.last();
            println!(
                "levels = {}\nfinal_dofs = {}\nfinal_estimator = {:e}",
                out.run.records.len(),
                last.map_or(0, |r| r.n_dofs),
                last.map_or(0.0, |r| r.estimator)
            );
            if let Some(s) = out.run.slope {
                println!("slope = {s:.4}");
            }
            println!("output = {}", config.out.display());
            0
        }
        Err(e) => {
            eprintln!("{e}");
            1
        }
    }
}
