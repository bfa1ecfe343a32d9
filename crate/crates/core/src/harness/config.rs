use super::problems::{problem, PROBLEMS};
use crate::afem::{AfemConfig, Bisections, EstimatorKind, StoppingRule};
use crate::error::{Error, Result};
use clap::Parser;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// Command-line flags; every flag except `--config` may also be given as a
/// `key = value` line of the config file, and flags override the file.
#[derive(Debug, Parser)]
#[command(name = "afem", about = "Adaptive P^k finite elements for -Δu = f with equilibrated-flux error estimators")]
struct Cli {
    /// Plain `key = value` file; keys are the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of square_sine, square_poly, lshape_one, square_xy.
    #[arg(long)]
    problem: Option<String>,
    /// Polynomial degree k in 1..=4.
    #[arg(long)]
    degree: Option<String>,
    /// delta, star or residual.
    #[arg(long)]
    estimator: Option<String>,
    /// Dörfler parameter in (0, 1].
    #[arg(long)]
    theta: Option<String>,
    /// Bisections per marked triangle, or auto for j★ of the initial mesh.
    #[arg(long)]
    bisections: Option<String>,
    /// Stop after the first level with at least this many dofs.
    #[arg(long)]
    max_dofs: Option<String>,
    /// Number of levels (without --max-dofs) or the level cap (with it).
    #[arg(long)]
    max_levels: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// none, tri, vtk or both.
    #[arg(long)]
    export_mesh: Option<String>,
    /// on or off: per-level RT coefficient files of the equilibrated flux.
    #[arg(long)]
    export_flux: Option<String>,
    /// on or off: H1 to H5 diagnostics on consecutive levels.
    #[arg(long)]
    hypotheses: Option<String>,
    /// on or off: record wall time per level (makes run.csv non-reproducible).
    #[arg(long)]
    wall_time: Option<String>,
}

const KEYS: [&str; 12] = [
    "problem",
    "degree",
    "estimator",
    "theta",
    "bisections",
    "max_dofs",
    "max_levels",
    "out",
    "export_mesh",
    "export_flux",
    "hypotheses",
    "wall_time",
];

pub const DEFAULT_LEVELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshExport {
    None,
    Tri,
    Vtk,
    Both,
}

impl MeshExport {
    pub fn tri(self) -> bool {
        matches!(self, MeshExport::Tri | MeshExport::Both)
    }

    pub fn vtk(self) -> bool {
        matches!(self, MeshExport::Vtk | MeshExport::Both)
    }
}

impl fmt::Display for MeshExport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeshExport::None => "none",
            MeshExport::Tri => "tri",
            MeshExport::Vtk => "vtk",
            MeshExport::Both => "both",
        })
    }
}

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub afem: AfemConfig,
    pub out: PathBuf,
    pub export_mesh: MeshExport,
    pub export_flux: bool,
    pub hypotheses: bool,
}

impl RunConfig {
    /// The configuration as a config file; reading it back gives `self`.
    pub fn to_config_text(&self) -> String {
        let on = |b: bool| if b { "on" } else { "off" };
        let a = &self.afem;
        let mut lines = vec![
            format!("problem = {}", self.problem),
            format!("degree = {}", a.degree),
            format!("estimator = {}", a.estimator),
            format!("theta = {}", a.theta),
            format!("bisections = {}", a.bisections),
        ];
        match a.stop {
            StoppingRule::MaxDofs(n) => {
                lines.push(format!("max_dofs = {n}"));
                lines.push(format!("max_levels = {}", a.level_cap));
            }
            StoppingRule::MaxLevels(l) => lines.push(format!("max_levels = {l}")),
        }
        lines.extend([
            format!("out = {}", self.out.display()),
            format!("export_mesh = {}", self.export_mesh),
            format!("export_flux = {}", on(self.export_flux)),
            format!("hypotheses = {}", on(self.hypotheses)),
            format!("wall_time = {}", on(a.record_wall_time)),
        ]);
        lines.join("\n") + "\n"
    }
}

/// Result of reading the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Run(RunConfig),
    /// `--help` or `--version` text.
    Info(String),
}

/// Reads `key = value` lines; `#` starts a comment, hyphens in keys are
/// read as underscores.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            context: format!("config line {}", n + 1),
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected `key = value`, found {line:?}")))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(parse_err(format!("unknown key {key:?}")));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn usage<T>(message: String) -> Result<T> {
    Err(Error::Usage(message))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .or_else(|_| usage(format!("--{} expects a number, got {value:?}", key.replace('_', "-"))))
}

fn switch(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => usage(format!("--{} expects on or off, got {value:?}", key.replace('_', "-"))),
    }
}

/// Builds a run configuration from merged `key = value` settings.
pub fn config_from_map(map: &BTreeMap<String, String>) -> Result<RunConfig> {
    let get = |k: &str| map.get(k).map(String::as_str);
    let Some(id) = get("problem") else {
        return usage(format!("--problem is required; registered problems: {}", PROBLEMS.join(", ")));
    };
    problem(id)?;
    let degree: usize = get("degree").map_or(Ok(1), |v| number("degree", v))?;
    if !(1..=4).contains(&degree) {
        return usage(format!("--degree must be in 1..=4, got {degree}"));
    }
    let estimator = match get("estimator") {
        None => EstimatorKind::Delta,
        Some(v) => v
            .parse()
            .or_else(|_| usage(format!("--estimator expects delta, star or residual, got {v:?}")))?,
    };
    let theta: f64 = get("theta").map_or(Ok(0.5), |v| number("theta", v))?;
    if !(theta > 0.0 && theta <= 1.0) {
        return usage(format!("--theta must be in (0, 1], got {theta}"));
    }
    let bisections = match get("bisections") {
        None | Some("auto") => Bisections::Auto,
        Some(v) => match number::<usize>("bisections", v)? {
            0 => return usage("--bisections must be at least 1 or auto".into()),
            b => Bisections::Fixed(b),
        },
    };
    let max_levels: Option<usize> = get("max_levels").map(|v| number("max_levels", v)).transpose()?;
    let defaults = AfemConfig::default();
    let (stop, level_cap) = match get("max_dofs") {
        Some(v) => (
            StoppingRule::MaxDofs(number("max_dofs", v)?),
            max_levels.unwrap_or(defaults.level_cap),
        ),
        None => {
            let l = max_levels.unwrap_or(DEFAULT_LEVELS);
            (StoppingRule::MaxLevels(l), defaults.level_cap.max(l))
        }
    };
    let export_mesh = match get("export_mesh") {
        None | Some("none") => MeshExport::None,
        Some("tri") => MeshExport::Tri,
        Some("vtk") => MeshExport::Vtk,
        Some("both") => MeshExport::Both,
        Some(v) => return usage(format!("--export-mesh expects none, tri, vtk or both, got {v:?}")),
    };
    let afem = AfemConfig {
        degree,
        estimator,
        theta,
        bisections,
        stop,
        level_cap,
        record_wall_time: get("wall_time").map_or(Ok(false), |v| switch("wall_time", v))?,
        ..defaults
    };
    afem.validate().map_err(|e| Error::Usage(e.to_string()))?;
    Ok(RunConfig {
        problem: id.to_string(),
        afem,
        out: PathBuf::from(get("out").unwrap_or("afem_out")),
        export_mesh,
        export_flux: get("export_flux").map_or(Ok(false), |v| switch("export_flux", v))?,
        hypotheses: get("hypotheses").map_or(Ok(false), |v| switch("hypotheses", v))?,
    })
}

/// Parses the command line (program name first), merging an optional
/// config file underneath the flags.
pub fn parse_config<I, S>(argv: I) -> Result<Invocation>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Invocation::Info(e.to_string())),
                _ => usage(e.to_string().trim_end().to_string()),
            };
        }
    };
    let mut map = match &cli.config {
        Some(path) => parse_config_text(&std::fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    let flags = [
        ("problem", &cli.problem),
        ("degree", &cli.degree),
        ("estimator", &cli.estimator),
        ("theta", &cli.theta),
        ("bisections", &cli.bisections),
        ("max_dofs", &cli.max_dofs),
        ("max_levels", &cli.max_levels),
        ("out", &cli.out),
        ("export_mesh", &cli.export_mesh),
        ("export_flux", &cli.export_flux),
        ("hypotheses", &cli.hypotheses),
        ("wall_time", &cli.wall_time),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    config_from_map(&map).map(Invocation::Run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<RunConfig> {
        match parse_config(std::iter::once("afem").chain(args.iter().copied()))? {
            Invocation::Run(c) => Ok(c),
            Invocation::Info(_) => panic!("unexpected info"),
        }
    }

    #[test]
    fn flags_are_read() {
        let c = run(&["--problem", "square_poly", "--degree", "2", "--theta", "0.5"]).unwrap();
        assert_eq!(c.problem, "square_poly");
        assert_eq!(c.afem.degree, 2);
        assert_eq!(c.afem.theta, 0.5);
        assert_eq!(c.afem.bisections, Bisections::Auto);
        assert_eq!(c.afem.stop, StoppingRule::MaxLevels(DEFAULT_LEVELS));
        assert!(c.to_config_text().contains("degree = 2"));
    }

    #[test]
    fn usage_errors() {
        for args in [
            &["--problem", "square_poly", "--theta", "0"][..],
            &["--problem", "square_poly", "--degree", "5"],
            &["--problem", "square_poly", "--estimator", "eta"],
            &["--problem", "square_poly", "--bisections", "0"],
            &["--problem", "square_poly", "--hypotheses", "yes"],
            &["--problem", "square_poly", "--frobnicate"],
            &["--problem", "disk"],
        ] {
            assert!(matches!(run(args), Err(Error::Usage(_))), "{args:?}");
        }
        let Err(Error::Usage(msg)) = run(&[]) else { panic!() };
        assert!(PROBLEMS.iter().all(|p| msg.contains(p)));
    }

    #[test]
    fn help_is_info() {
        assert!(matches!(parse_config(["afem", "--help"]), Ok(Invocation::Info(_))));
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# sweep\nproblem = lshape_one\ntheta = 0.3\nmax-dofs = 5000 # cap\nexport_mesh = vtk\n").unwrap();
        let c = run(&["--config", path.to_str().unwrap(), "--theta", "0.7"]).unwrap();
        assert_eq!(c.problem, "lshape_one");
        assert_eq!(c.afem.theta, 0.7);
        assert_eq!(c.afem.stop, StoppingRule::MaxDofs(5000));
        assert_eq!(c.export_mesh, MeshExport::Vtk);
    }

    #[test]
    fn config_text_round_trips() {
        let c = run(&["--problem", "square_xy", "--estimator", "star", "--bisections", "2", "--max-dofs", "900", "--hypotheses", "on"]).unwrap();
        let back = config_from_map(&parse_config_text(&c.to_config_text()).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn malformed_file_lines() {
        assert!(matches!(parse_config_text("theta 0.5"), Err(Error::Parse { .. })));
        assert!(matches!(parse_config_text("colour = red"), Err(Error::Parse { .. })));
    }
}
