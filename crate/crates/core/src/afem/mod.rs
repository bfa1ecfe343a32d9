//! The SOLVE, ESTIMATE, MARK, REFINE loop with Dörfler marking and `b`
//! bisections per marked triangle.

mod hypotheses;
mod marking;

pub use hypotheses::{check_hypotheses, consecutive_pairs, prolongate, HypothesisDiagnostics, HypothesisRow};
pub use marking::doerfler_mark;

use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorReport, EstimatorTotals};
use crate::galerkin::{energy_norm, solve_poisson_with, FeSpace, ScalarField, SolverOptions};
use crate::mesh::{Mesh, Point};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

/// Closed-form solution of a manufactured problem.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    pub u: fn(Point) -> f64,
    pub grad: fn(Point) -> [f64; 2],
}

/// Source, initial mesh and (when known) exact solution of `−Δu = f`, `u = 0` on `∂Ω`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub id: String,
    pub mesh: Mesh,
    pub f: fn(Point) -> f64,
    pub exact: Option<ExactSolution>,
}

impl Problem {
    pub fn grad_exact(&self) -> Option<&dyn Fn(Point) -> [f64; 2]> {
        self.exact.as_ref().map(|e| &e.grad as &dyn Fn(Point) -> [f64; 2])
    }
}

/// Estimator driving the marking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Delta,
    Star,
    Residual,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Delta, EstimatorKind::Star, EstimatorKind::Residual];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Delta => "delta",
            EstimatorKind::Star => "star",
            EstimatorKind::Residual => "residual",
        }
    }

    /// Elementwise indicators whose squares sum to the square of [`Self::total`].
    /// For `star` each triangle carries `Σ_{ν ∈ V_T} (η^⋆_ν)²`.
    pub fn element_indicators(self, report: &EstimatorReport, mesh: &Mesh) -> Vec<f64> {
        match self {
            EstimatorKind::Delta => report.eta_delta.clone(),
            EstimatorKind::Star => report.eta_star_elementwise(mesh),
            EstimatorKind::Residual => report.eta_res.clone(),
        }
    }

    pub fn total(self, totals: &EstimatorTotals) -> f64 {
        match self {
            EstimatorKind::Delta => totals.eta_delta,
            EstimatorKind::Star => totals.eta_star,
            EstimatorKind::Residual => totals.eta_res,
        }
    }

    /// The oscillation paired with the estimator: `osc^⋆` for the patch estimator.
    pub fn oscillation(self, totals: &EstimatorTotals) -> f64 {
        match self {
            EstimatorKind::Star => totals.osc_star,
            _ => totals.osc,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown estimator {s:?} (expected delta, star or residual)")))
    }
}

/// Bisections per marked triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bisections {
    /// `j★` of the initial mesh.
    Auto,
    Fixed(usize),
}

impl Bisections {
    pub fn resolve(self, initial: &Mesh) -> usize {
        match self {
            Bisections::Auto => initial.interior_node_depth(),
            Bisections::Fixed(b) => b,
        }
    }
}

impl fmt::Display for Bisections {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bisections::Auto => f.write_str("auto"),
            Bisections::Fixed(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingRule {
    /// Stop after the first level with at least this many dofs.
    MaxDofs(usize),
    /// Stop after this many levels.
    MaxLevels(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfemConfig {
    pub degree: usize,
    pub estimator: EstimatorKind,
    pub theta: f64,
    pub bisections: Bisections,
    pub stop: StoppingRule,
    /// A `MaxDofs` run not finished after this many levels fails.
    pub level_cap: usize,
    pub solver: SolverOptions,
    /// Measure wall time per level; off keeps records reproducible.
    pub record_wall_time: bool,
}

impl Default for AfemConfig {
    fn default() -> Self {
        AfemConfig {
            degree: 1,
            estimator: EstimatorKind::Delta,
            theta: 0.5,
            bisections: Bisections::Auto,
            stop: StoppingRule::MaxLevels(8),
            level_cap: 60,
            solver: SolverOptions::default(),
            record_wall_time: false,
        }
    }
}

impl AfemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.degree) {
            return Err(Error::Argument(format!("degree {} outside 1..=4", self.degree)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Argument(format!("theta {} outside (0, 1]", self.theta)));
        }
        if self.bisections == Bisections::Fixed(0) {
            return Err(Error::Argument("bisections must be at least 1".into()));
        }
        match self.stop {
            StoppingRule::MaxLevels(0) => Err(Error::Argument("at least one level is required".into())),
            StoppingRule::MaxLevels(l) if l > self.level_cap => Err(Error::Argument(format!(
                "{l} levels exceed the level cap {}",
                self.level_cap
            ))),
            StoppingRule::MaxDofs(0) => Err(Error::Argument("max dofs must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub totals: EstimatorTotals,
    /// `(|||u − u_h|||² + osc²)^{1/2}` when the exact solution is known.
    pub total_error: Option<f64>,
    /// Total of the estimator driving the marking.
    pub estimator: f64,
    pub n_marked: usize,
    pub wall_ms: f64,
}

impl ConvergenceRecord {
    pub fn energy_error(&self) -> Option<f64> {
        self.totals.energy_error
    }
}

/// Solution and indicators of one level.
#[derive(Debug, Clone)]
pub struct Level {
    pub u_h: ScalarField,
    pub report: EstimatorReport,
    pub marked: Vec<usize>,
}

impl Level {
    pub fn mesh(&self) -> &Arc<Mesh> {
        self.u_h.space().mesh()
    }
}

#[derive(Debug, Clone)]
pub struct Step {
    pub level: Level,
    pub record: ConvergenceRecord,
    /// `None` when nothing was marked.
    pub refined: Option<Mesh>,
}

/// Estimator totals below this fraction of `|||u_h|||` are rounding noise;
/// such levels mark nothing and end the run.
pub const NEGLIGIBLE: f64 = 1e-11;

/// Solves on `mesh`, estimates, marks on the selected elementwise indicators
/// and bisects every marked triangle `b` times.
pub fn adapt_step(mesh: Arc<Mesh>, problem: &Problem, config: &AfemConfig, b: usize, index: usize) -> Result<Step> {
    let start = Instant::now();
    let space = FeSpace::new(mesh.clone(), config.degree)?;
    let (u_h, _) = solve_poisson_with(&space, &problem.f, &config.solver)?;
    let (report, _) = estimate(&u_h, &problem.f, problem.grad_exact())?;
    let indicators = config.estimator.element_indicators(&report, &mesh);
    let marked = if config.estimator.total(&report.totals) <= NEGLIGIBLE * energy_norm(&u_h) {
        Vec::new()
    } else {
        doerfler_mark(&indicators, config.theta)?
    };
    let refined = if marked.is_empty() { None } else { Some(mesh.bisect(&marked, b)?) };
    let totals = report.totals;
    let record = ConvergenceRecord {
        level: index,
        n_elements: mesh.n_triangles(),
        n_dofs: space.n_dofs(),
        totals,
        total_error: totals.energy_error.map(|e| e.hypot(totals.osc)),
        estimator: config.estimator.total(&totals),
        n_marked: marked.len(),
        wall_ms: if config.record_wall_time { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 },
    };
    Ok(Step {
        level: Level { u_h, report, marked },
        record,
        refined,
    })
}

/// A completed adaptive run.
#[derive(Debug, Clone)]
pub struct AfemRun {
    pub config: AfemConfig,
    /// Bisections per marked triangle.
    pub b: usize,
    /// `j★` of the initial mesh.
    pub j_star: usize,
    pub records: Vec<ConvergenceRecord>,
    pub levels: Vec<Level>,
    /// Least-squares slope of `log(total error)` (or `log η` without an exact
    /// solution) against `log(dofs)` over the last half of the levels.
    pub slope: Option<f64>,
}

/// Runs [`adapt_step`] until the stopping rule holds or nothing is marked.
pub fn run(problem: &Problem, config: &AfemConfig) -> Result<AfemRun> {
    config.validate()?;
    let b = config.bisections.resolve(&problem.mesh);
    let j_star = problem.mesh.interior_node_depth();
    let mut mesh = Arc::new(problem.mesh.clone());
    let mut records = Vec::new();
    let mut levels = Vec::new();
    for index in 0.. {
        let step = adapt_step(mesh, problem, config, b, index)?;
        let done = match config.stop {
            StoppingRule::MaxDofs(n) => step.record.n_dofs >= n,
            StoppingRule::MaxLevels(l) => index + 1 >= l,
        };
        records.push(step.record);
        levels.push(step.level);
        let Some(next) = step.refined.filter(|_| !done) else {
            break;
        };
        if index + 1 >= config.level_cap {
            return Err(Error::Run {
                levels: records.len(),
                records,
            });
        }
        mesh = Arc::new(next);
    }
    let slope = decay_slope(&records);
    Ok(AfemRun {
        config: config.clone(),
        b,
        j_star,
        records,
        levels,
        slope,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Decay slope over the last half of the levels.
pub fn decay_slope(records: &[ConvergenceRecord]) -> Option<f64> {
    let tail = &records[records.len() / 2..];
    let points: Vec<(f64, f64)> = tail
        .iter()
        .map(|r| (r.n_dofs as f64, r.total_error.unwrap_or(r.estimator)))
        .collect();
    if points.iter().any(|&(_, y)| !(y > 0.0)) {
        return None;
    }
    loglog_slope(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine() -> Problem {
        Problem {
            id: "sine".into(),
            mesh: Mesh::criss_cross_square(),
            f: |p| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin(),
            exact: Some(ExactSolution {
                u: |p| (PI * p[0]).sin() * (PI * p[1]).sin(),
                grad: |p| [PI * (PI * p[0]).cos() * (PI * p[1]).sin(), PI * (PI * p[0]).sin() * (PI * p[1]).cos()],
            }),
        }
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (10f64.powi(i), 3.0 * 10f64.powf(-0.5 * i as f64))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }

    #[test]
    fn config_validation() {
        let ok = AfemConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            AfemConfig { theta: 0.0, ..ok.clone() },
            AfemConfig { degree: 5, ..ok.clone() },
            AfemConfig { bisections: Bisections::Fixed(0), ..ok.clone() },
            AfemConfig { stop: StoppingRule::MaxLevels(61), ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Argument(_))));
        }
    }

    #[test]
    fn estimator_names_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
        }
        assert!("eta".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn levels_grow_and_stop_on_level_count() {
        let config = AfemConfig { stop: StoppingRule::MaxLevels(4), ..AfemConfig::default() };
        let run = run(&sine(), &config).unwrap();
        assert_eq!(run.records.len(), 4);
        assert_eq!(run.b, 3);
        assert!(run.records.windows(2).all(|w| w[1].n_elements > w[0].n_elements));
        assert!(run.records.iter().all(|r| r.wall_ms == 0.0 && r.total_error.is_some()));
        assert!(run.slope.unwrap() < 0.0);
    }

    #[test]
    fn exact_problem_terminates_without_marking() {
        let problem = Problem {
            id: "poly".into(),
            mesh: Mesh::criss_cross_square(),
            f: |p| 2.0 * (p[0] * (1.0 - p[0]) + p[1] * (1.0 - p[1])),
            exact: None,
        };
        let config = AfemConfig { degree: 4, stop: StoppingRule::MaxDofs(10_000), ..AfemConfig::default() };
        let run = run(&problem, &config).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.records[0].n_marked, 0);
        assert!(run.records[0].estimator < 1e-10);
    }

    #[test]
    fn level_cap_returns_partial_records() {
        let config = AfemConfig {
            stop: StoppingRule::MaxDofs(usize::MAX),
            level_cap: 2,
            ..AfemConfig::default()
        };
        match run(&sine(), &config) {
            Err(Error::Run { levels, records }) => {
                assert_eq!(levels, 2);
                assert_eq!(records.len(), 2);
            }
            other => panic!("expected a run error, got {other:?}"),
        }
    }
}
