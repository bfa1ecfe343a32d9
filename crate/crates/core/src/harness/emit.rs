//! CSV, plot-data and mesh files of a run. Floats are written in the
//! shortest round-trip exponent form; missing values are empty cells.

use super::config::RunConfig;
use crate::afem::{AfemRun, ConvergenceRecord, HypothesisDiagnostics, Problem};
use crate::equilibration::{reconstruct, EquilibratedFlux};
use crate::error::Result;
use crate::estimators::EstimatorReport;
use crate::mesh::io::{to_tri_string, to_vtk_string};
use crate::mesh::Mesh;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub const RUN_COLUMNS: [&str; 15] = [
    "level",
    "n_elements",
    "n_dofs",
    "energy_error",
    "eta_delta",
    "eta_star",
    "eta_star_singlecount",
    "eta_res",
    "eta_res_patch",
    "osc",
    "osc_star",
    "n_marked",
    "theta",
    "b",
    "wall_ms",
];

/// One row per level.
pub fn run_csv(records: &[ConvergenceRecord], theta: f64, b: usize) -> String {
    let mut s = RUN_COLUMNS.join(",") + "\n";
    for r in records {
        let t = &r.totals;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.n_elements,
            r.n_dofs,
            opt(t.energy_error),
            num(t.eta_delta),
            num(t.eta_star),
            num(t.eta_star_single),
            num(t.eta_res),
            num(t.eta_res_patch),
            num(t.osc),
            num(t.osc_star),
            r.n_marked,
            theta,
            b,
            r.wall_ms
        );
    }
    s
}

pub const HYPOTHESIS_COLUMNS: [&str; 22] = [
    "coarse",
    "fine",
    "j_star",
    "n_r1",
    "n_rj",
    "error_coarse",
    "error_fine",
    "difference",
    "eta",
    "osc",
    "eta_r1",
    "eta_rj",
    "osc_rj",
    "osc_elem_r1",
    "osc_star_rj",
    "h1",
    "h2",
    "h3",
    "h4",
    "lambda_elem",
    "lambda_patch",
    "pythagoras_defect",
];

/// One row per level pair.
pub fn hypotheses_csv(d: &HypothesisDiagnostics) -> String {
    let mut s = HYPOTHESIS_COLUMNS.join(",") + "\n";
    for r in &d.rows {
        let cells = [
            r.coarse.to_string(),
            r.fine.to_string(),
            r.j_star.to_string(),
            r.n_r1.to_string(),
            r.n_rj.to_string(),
            opt(r.error_coarse),
            opt(r.error_fine),
            num(r.difference),
            num(r.eta),
            num(r.osc),
            num(r.eta_r1),
            num(r.eta_rj),
            num(r.osc_rj),
            num(r.osc_elem_r1),
            num(r.osc_star_rj),
            opt(r.h1),
            opt(r.h2),
            num(r.h3),
            num(r.h4),
            opt(r.lambda_elem),
            opt(r.lambda_patch),
            opt(r.pythagoras_defect),
        ];
        s += &cells.join(",");
        s.push('\n');
    }
    s
}

pub const ESTIMATOR_COLUMNS: [&str; 9] = [
    "kind",
    "id",
    "eta_delta",
    "eta_res",
    "osc",
    "eta_star",
    "eta_res_patch",
    "osc_patch",
    "patch_size",
];

/// Element rows, then vertex rows, then one totals row.
pub fn estimator_csv(report: &EstimatorReport) -> String {
    let mut s = ESTIMATOR_COLUMNS.join(",") + "\n";
    for t in 0..report.eta_delta.len() {
        let _ = writeln!(
            s,
            "element,{t},{},{},{},,,,",
            num(report.eta_delta[t]),
            num(report.eta_res[t]),
            num(report.osc[t])
        );
    }
    for v in 0..report.eta_star.len() {
        let _ = writeln!(
            s,
            "vertex,{v},,,,{},{},{},{}",
            num(report.eta_star[v]),
            num(report.eta_res_patch[v]),
            num(report.osc_patch[v]),
            report.patch_sizes[v]
        );
    }
    let t = &report.totals;
    let _ = writeln!(
        s,
        "total,,{},{},{},{},{},{},",
        num(t.eta_delta),
        num(t.eta_res),
        num(t.osc),
        num(t.eta_star),
        num(t.eta_res_patch),
        num(t.osc_star)
    );
    s
}

/// `element, c_0, …, c_{(k+1)(k+3)−1}`: coefficients of `q = ∇u_h + q^Δ`.
pub fn flux_csv(flux: &EquilibratedFlux) -> String {
    let q = &flux.q;
    let dim = q.basis().dim();
    let mut s = String::from("element");
    for i in 0..dim {
        let _ = write!(s, ",c{i}");
    }
    s.push('\n');
    for t in 0..q.mesh().n_triangles() {
        s += &t.to_string();
        for &c in q.element_coeffs(t) {
            s.push(',');
            s += &num(c);
        }
        s.push('\n');
    }
    s
}

/// `level log10(dofs) log10(total error) log10(η)`; the error column is
/// `nan` without an exact solution.
pub fn decay_dat(records: &[ConvergenceRecord]) -> String {
    let mut s = String::from("# level log10_dofs log10_error log10_eta\n");
    for r in records {
        let err = r.total_error.map_or(f64::NAN, f64::log10);
        let _ = writeln!(
            s,
            "{} {:.12e} {:.12e} {:.12e}",
            r.level,
            (r.n_dofs as f64).log10(),
            err,
            r.estimator.log10()
        );
    }
    s
}

pub const SCHEMA: &str = "\
Files
  config.txt                 the run configuration as a config file (--config accepts it)
  run.csv                    one row per level
  hypotheses.csv             one row per pair of consecutive levels (with --hypotheses on)
  level_LLL_estimators.csv   indicators of level LLL
  level_LLL_flux.csv         equilibrated flux of level LLL (with --export-flux on)
  level_LLL.tri, .vtk        mesh of level LLL (with --export-mesh)
  decay.dat                  whitespace-separated plot data

Numbers use '.' as decimal separator; empty cells mark values that are not
available (no exact solution, or a vanishing denominator).

run.csv
  level                 refinement level, 0 for the initial mesh
  n_elements            number of triangles
  n_dofs                number of P^k nodes, boundary nodes included
  energy_error          |||u - u_h||| (exact solution known)
  eta_delta             (sum_T eta_delta(T)^2)^(1/2), eta_delta(T) = ||q_delta||_T
  eta_star              (sum_T sum_{v in T} eta_star(v)^2)^(1/2): every patch once per triangle
  eta_star_singlecount  (sum_v eta_star(v)^2)^(1/2), eta_star(v) = ||q_delta_v||_{patch of v}
  eta_res               (sum_T eta_res(T)^2)^(1/2), eta_res(T)^2 = h_T^2 ||f + lap u_h||_T^2 + h_T ||[[grad u_h . n]]||_{interior edges of T}^2
  eta_res_patch         (sum_T sum_{v in T} eta_res_patch(v)^2)^(1/2), hat-function weighted patch residuals
  osc                   (sum_T h_T^2 ||f - P^{k-1} f||_T^2)^(1/2)
  osc_star              (sum_v osc(v)^2)^(1/2), osc(v)^2 = sum of osc(T)^2 over the patch of v
  n_marked              triangles marked on this level
  theta                 Doerfler parameter
  b                     bisections per marked triangle
  wall_ms               wall time of the level in milliseconds, 0 unless --wall-time on

hypotheses.csv (level pair coarse < fine; R1 and Rj are the coarse triangles
refined at least once and at least j_star times; eta is the marking estimator
and osc its oscillation, osc_star for the star estimator)
  coarse, fine          level indices
  j_star                interior-node depth of the initial mesh
  n_r1, n_rj            sizes of R1 and Rj
  error_coarse          |||u - u_coarse|||
  error_fine            |||u - u_fine|||
  difference            |||u_fine - u_coarse|||
  eta, osc              totals on the coarse level
  eta_r1, eta_rj        estimator restricted to R1 and Rj
  osc_rj                estimator-matched oscillation restricted to Rj
  osc_elem_r1           elementwise oscillation restricted to R1
  osc_star_rj           patch oscillation over the vertices of Rj
  h1                    error_coarse^2 / (eta^2 + osc^2)
  h2                    eta^2 / (error_coarse^2 + osc^2)
  h3                    difference^2 / (eta_r1^2 + osc_rj^2)
  h4                    eta_rj^2 / (difference^2 + osc_rj^2)
  lambda_elem           (osc_coarse^2 - osc_fine^2) / osc_elem_r1^2
  lambda_patch          (osc_star_coarse^2 - osc_star_fine^2) / osc_star_rj^2
  pythagoras_defect     (error_coarse^2 - error_fine^2 - difference^2) / error_coarse^2

level_LLL_estimators.csv
  kind                  element, vertex or total
  id                    triangle or vertex id (empty for the totals row)
  eta_delta, eta_res, osc              element rows and totals
  eta_star, eta_res_patch, osc_patch   vertex rows; the totals row holds the
                                       run.csv eta_star, eta_res_patch, osc_star
  patch_size            number of triangles in the patch of the vertex

level_LLL_flux.csv
  element               triangle id
  c0 ...                (k+1)(k+3) RT^k coefficients of q = grad u_h + q_delta in
                        the local basis (m,0) for all monomials m, then (0,m), then
                        (x m, y m) for the monomials m of degree exactly k; monomials
                        in centroid-centred coordinates scaled by the diameter

decay.dat
  level, log10(n_dofs), log10(total error or nan), log10(marking estimator)
";

/// `level_LLL<suffix>` inside `dir`.
fn level_path(dir: &Path, level: usize, suffix: &str) -> PathBuf {
    dir.join(format!("level_{level:03}{suffix}"))
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, contents)?;
    written.push(path);
    Ok(())
}

/// Writes every output of a finished run; returns the written paths.
pub fn emit(
    run: &AfemRun,
    problem: &Problem,
    diagnostics: Option<&HypothesisDiagnostics>,
    config: &RunConfig,
) -> Result<Vec<PathBuf>> {
    let dir = &config.out;
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    write(dir.join("config.txt"), &config.to_config_text(), &mut written)?;
    write(dir.join("schema.txt"), SCHEMA, &mut written)?;
    write(dir.join("run.csv"), &run_csv(&run.records, run.config.theta, run.b), &mut written)?;
    write(dir.join("decay.dat"), &decay_dat(&run.records), &mut written)?;
    if let Some(d) = diagnostics {
        write(dir.join("hypotheses.csv"), &hypotheses_csv(d), &mut written)?;
    }
    for (l, level) in run.levels.iter().enumerate() {
        write(level_path(dir, l, "_estimators.csv"), &estimator_csv(&level.report), &mut written)?;
        if config.export_flux {
            let flux = reconstruct(&level.u_h, &problem.f)?;
            write(level_path(dir, l, "_flux.csv"), &flux_csv(&flux), &mut written)?;
        }
        let mesh: &Mesh = level.mesh();
        if config.export_mesh.tri() {
            write(level_path(dir, l, ".tri"), &to_tri_string(mesh), &mut written)?;
        }
        if config.export_mesh.vtk() {
            let indicators = run.config.estimator.element_indicators(&level.report, mesh);
            let mut marked = vec![0.0; mesh.n_triangles()];
            for &t in &level.marked {
                marked[t] = 1.0;
            }
            let vtk = to_vtk_string(mesh, &[("indicator", &indicators), ("marked", &marked)])?;
            write(level_path(dir, l, ".vtk"), &vtk, &mut written)?;
        }
    }
    Ok(written)
}
