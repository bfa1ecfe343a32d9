//! The command-line layer without a subprocess: parse flags, echo the config
//! file form, run and list the written files.

use hypercircle::harness::{execute, parse_config, Invocation};
use hypercircle::Result;

fn main() -> Result<()> {
    let out = std::env::temp_dir().join("hypercircle_cli_example");
    let argv = [
        "afem", "--problem", "square_xy", "--degree", "2", "--estimator", "star", "--max-dofs", "3000",
        "--hypotheses", "on", "--export-mesh", "vtk", "--out", out.to_str().expect("utf-8 temp dir"),
    ];
    let Invocation::Run(config) = parse_config(argv)? else {
        unreachable!("no --help given")
    };
    print!("{}", config.to_config_text());
    let outcome = execute(&config)?;
    println!("{} levels, files:", outcome.run.records.len());
    for path in &outcome.written {
        println!("  {}", path.display());
    }
    Ok(())
}
