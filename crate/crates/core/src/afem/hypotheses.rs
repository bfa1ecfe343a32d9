use super::{AfemRun, EstimatorKind, Level, Problem};
use crate::error::{Error, Result};
use crate::galerkin::{energy_distance, FeSpace, ScalarField};
use crate::mesh::{ancestors, refined_set, Mesh};
use std::sync::Arc;

/// Both sides of H1 to H5 for one nested pair `(ℓ, m)`.
///
/// `R¹` and `R^{j★}` are the coarse triangles refined at least once and at
/// least `j★` times. The oscillation terms of H1 to H4 follow the
/// estimator: `osc^⋆` for the patch estimator, `osc` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisRow {
    pub coarse: usize,
    pub fine: usize,
    pub j_star: usize,
    pub n_r1: usize,
    pub n_rj: usize,
    /// `|||u − u_ℓ|||` and `|||u − u_m|||` when the exact solution is known.
    pub error_coarse: Option<f64>,
    pub error_fine: Option<f64>,
    /// `|||u_m − u_ℓ|||`
    pub difference: f64,
    pub eta: f64,
    pub osc: f64,
    /// `η(u_ℓ, R¹)`, `η(u_ℓ, R^{j★})`
    pub eta_r1: f64,
    pub eta_rj: f64,
    /// Estimator-matched oscillation on `R^{j★}`.
    pub osc_rj: f64,
    /// Elementwise `osc_ℓ(R¹)` and patchwise `osc^⋆_ℓ(R^{j★})`.
    pub osc_elem_r1: f64,
    pub osc_star_rj: f64,
    /// `|||u − u_ℓ|||² / (η² + osc²)`
    pub h1: Option<f64>,
    /// `η² / (|||u − u_ℓ|||² + osc²)`
    pub h2: Option<f64>,
    /// `|||u_m − u_ℓ|||² / (η(R¹)² + osc(R^{j★})²)`
    pub h3: f64,
    /// `η(R^{j★})² / (|||u_m − u_ℓ|||² + osc(R^{j★})²)`
    pub h4: f64,
    /// Largest `λ` with `osc_m² ≤ osc_ℓ² − λ osc_ℓ(R¹)²`; `None` when `osc_ℓ(R¹) = 0`.
    pub lambda_elem: Option<f64>,
    /// Largest `λ` with `osc^⋆_m² ≤ osc^⋆_ℓ² − λ osc^⋆_ℓ(R^{j★})²`.
    pub lambda_patch: Option<f64>,
    /// `(|||u − u_ℓ|||² − |||u − u_m|||² − |||u_m − u_ℓ|||²) / |||u − u_ℓ|||²`
    pub pythagoras_defect: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct HypothesisDiagnostics {
    pub estimator: EstimatorKind,
    pub rows: Vec<HypothesisRow>,
}

/// `(ℓ, ℓ + 1)` for every level of a run.
pub fn consecutive_pairs(levels: usize) -> Vec<(usize, usize)> {
    (1..levels).map(|m| (m - 1, m)).collect()
}

/// `num / den`, with `0/0 = 0` (both sides vanish) and `x/0 = ∞`.
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `u` on a refinement of its mesh: the spaces are nested, so nodal values
/// at the fine dof points reproduce `u` exactly.
pub fn prolongate(u: &ScalarField, fine: &Arc<FeSpace>) -> Result<ScalarField> {
    let coarse_mesh = u.space().mesh();
    if fine.degree() != u.space().degree() {
        return Err(Error::Argument("prolongation between different degrees".into()));
    }
    let fine_mesh = fine.mesh();
    let owner = ancestors(coarse_mesh, fine_mesh)?;
    let el = fine.element();
    let mut coeffs = vec![0.0; fine.n_dofs()];
    for t in 0..fine_mesh.n_triangles() {
        for (n, &d) in fine.element_dofs(t).iter().enumerate() {
            let p = fine_mesh.point_at(t, el.node_lambda(n));
            coeffs[d] = u.value(owner[t], coarse_mesh.barycentric(owner[t], p));
        }
    }
    ScalarField::new(fine.clone(), coeffs)
}

fn restricted(indicators: &[f64], elements: &[usize]) -> f64 {
    elements.iter().map(|&t| indicators[t].powi(2)).sum::<f64>().sqrt()
}

/// `osc^⋆` over the vertices of the given triangles.
fn star_on(level: &Level, mesh: &Mesh, elements: &[usize]) -> f64 {
    let mut seen = vec![false; mesh.n_vertices()];
    for &t in elements {
        for &v in &mesh.triangle(t).v {
            seen[v] = true;
        }
    }
    seen.iter()
        .zip(&level.report.osc_patch)
        .filter(|(s, _)| **s)
        .map(|(_, o)| o * o)
        .sum::<f64>()
        .sqrt()
}

fn pair(run: &AfemRun, problem: &Problem, l: usize, m: usize) -> Result<HypothesisRow> {
    let n = run.levels.len();
    if l >= n || m >= n {
        return Err(Error::Argument(format!("level pair ({l}, {m}) outside a run of {n} levels")));
    }
    let kind = run.config.estimator;
    let (coarse, fine) = (&run.levels[l], &run.levels[m]);
    let (cm, fm) = (coarse.mesh(), fine.mesh());
    let r1 = refined_set(cm, fm, 1)?.elements;
    let rj = refined_set(cm, fm, run.j_star)?.elements;
    let difference = energy_distance(&fine.u_h, &prolongate(&coarse.u_h, fine.u_h.space())?)?;
    let indicators = kind.element_indicators(&coarse.report, cm);
    let (tc, tf) = (&coarse.report.totals, &fine.report.totals);
    let eta = kind.total(tc);
    let osc = kind.oscillation(tc);
    let eta_r1 = restricted(&indicators, &r1);
    let eta_rj = restricted(&indicators, &rj);
    let osc_elem_r1 = restricted(&coarse.report.osc, &r1);
    let osc_elem_rj = restricted(&coarse.report.osc, &rj);
    let osc_star_rj = star_on(coarse, cm, &rj);
    let osc_rj = if kind == EstimatorKind::Star { osc_star_rj } else { osc_elem_rj };
    let lambda = |lo: f64, hi: f64, part: f64| (part > 0.0).then(|| (lo * lo - hi * hi) / (part * part));
    let (error_coarse, error_fine) = match problem.exact {
        Some(_) => (tc.energy_error, tf.energy_error),
        None => (None, None),
    };
    let d2 = difference * difference;
    Ok(HypothesisRow {
        coarse: l,
        fine: m,
        j_star: run.j_star,
        n_r1: r1.len(),
        n_rj: rj.len(),
        error_coarse,
        error_fine,
        difference,
        eta,
        osc,
        eta_r1,
        eta_rj,
        osc_rj,
        osc_elem_r1,
        osc_star_rj,
        h1: error_coarse.map(|e| ratio(e * e, eta * eta + osc * osc)),
        h2: error_coarse.map(|e| ratio(eta * eta, e * e + osc * osc)),
        h3: ratio(d2, eta_r1 * eta_r1 + osc_rj * osc_rj),
        h4: ratio(eta_rj * eta_rj, d2 + osc_rj * osc_rj),
        lambda_elem: lambda(tc.osc, tf.osc, osc_elem_r1),
        lambda_patch: lambda(tc.osc_star, tf.osc_star, osc_star_rj),
        pythagoras_defect: error_coarse
            .zip(error_fine)
            .filter(|(ec, _)| *ec > 0.0)
            .map(|(ec, ef)| (ec * ec - ef * ef - d2) / (ec * ec)),
    })
}

/// Evaluates H1 to H5 on the given level pairs of a run.
pub fn check_hypotheses(run: &AfemRun, problem: &Problem, pairs: &[(usize, usize)]) -> Result<HypothesisDiagnostics> {
    let rows = pairs
        .iter()
        .map(|&(l, m)| pair(run, problem, l, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(HypothesisDiagnostics {
        estimator: run.config.estimator,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{run, AfemConfig, ExactSolution, StoppingRule};
    use super::*;

    fn poly(k: usize) -> (Problem, AfemConfig) {
        let problem = Problem {
            id: "poly".into(),
            mesh: Mesh::criss_cross_square(),
            f: |p| 2.0 * (p[0] * (1.0 - p[0]) + p[1] * (1.0 - p[1])),
            exact: Some(ExactSolution {
                u: |p| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]),
                grad: |p| [(1.0 - 2.0 * p[0]) * p[1] * (1.0 - p[1]), p[0] * (1.0 - p[0]) * (1.0 - 2.0 * p[1])],
            }),
        };
        let config = AfemConfig { degree: k, stop: StoppingRule::MaxLevels(4), ..AfemConfig::default() };
        (problem, config)
    }

    #[test]
    fn prolongation_is_exact_on_nested_spaces() {
        let mesh = Mesh::l_shape();
        let fine_mesh = mesh.bisect(&[0, 4, 7], 3).unwrap();
        let coarse = FeSpace::new(Arc::new(mesh), 2).unwrap();
        let u = ScalarField::interpolate(coarse.clone(), &|p| p[0] * p[1] - p[1] * p[1] + 0.5);
        let fine = FeSpace::new(Arc::new(fine_mesh), 2).unwrap();
        let pu = prolongate(&u, &fine).unwrap();
        let want = ScalarField::interpolate(fine, &|p| p[0] * p[1] - p[1] * p[1] + 0.5);
        assert!(pu.coeffs().iter().zip(want.coeffs()).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn non_nested_pair_is_rejected() {
        let coarse = FeSpace::new(Arc::new(Mesh::l_shape()), 1).unwrap();
        let other = FeSpace::new(Arc::new(Mesh::criss_cross_square().refine_uniform().unwrap()), 1).unwrap();
        let u = ScalarField::zeros(coarse);
        assert!(matches!(prolongate(&u, &other), Err(Error::Lineage(_))));
    }

    #[test]
    fn constant_one_reliability_and_galerkin_pythagoras() {
        let (problem, config) = poly(3);
        let run = run(&problem, &config).unwrap();
        let d = check_hypotheses(&run, &problem, &consecutive_pairs(run.levels.len())).unwrap();
        assert_eq!(d.rows.len(), 3);
        for row in &d.rows {
            assert!(row.osc < 1e-14);
            assert!(row.h1.unwrap() <= 1.0 + 1e-10, "{row:?}");
            assert!(row.pythagoras_defect.unwrap().abs() < 1e-8, "{row:?}");
            assert!(row.n_rj <= row.n_r1);
            assert!(row.h3.is_finite() && row.h4.is_finite());
            assert!(row.osc_elem_r1 < 1e-14 && row.osc_star_rj < 1e-14);
        }
    }

    #[test]
    fn reversed_pair_is_a_lineage_error() {
        let (problem, config) = poly(1);
        let run = run(&problem, &config).unwrap();
        assert!(matches!(check_hypotheses(&run, &problem, &[(2, 1)]), Err(Error::Lineage(_))));
    }
}
