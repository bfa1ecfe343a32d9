//! Diagnostics H1 to H5 along an adaptive run on consecutive level pairs.

use hypercircle::afem::{check_hypotheses, consecutive_pairs, run, AfemConfig, EstimatorKind, StoppingRule};
use hypercircle::harness::problem;
use hypercircle::Result;

fn show(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.3}"))
}

fn main() -> Result<()> {
    let p = problem("square_sine")?;
    for estimator in [EstimatorKind::Delta, EstimatorKind::Star] {
        let config = AfemConfig { estimator, stop: StoppingRule::MaxLevels(6), ..AfemConfig::default() };
        let r = run(&p, &config)?;
        let d = check_hypotheses(&r, &p, &consecutive_pairs(r.levels.len()))?;
        println!("{estimator} estimator, j* = {}", r.j_star);
        println!("  pair    H1     H2     H3     H4     lambda_elem  lambda_patch  |R1|  |Rj|");
        for row in &d.rows {
            println!(
                "  {}-{}  {:>6} {:>6} {:>6.3} {:>6.3}  {:>11} {:>13} {:>5} {:>5}",
                row.coarse,
                row.fine,
                show(row.h1),
                show(row.h2),
                row.h3,
                row.h4,
                show(row.lambda_elem),
                show(row.lambda_patch),
                row.n_r1,
                row.n_rj
            );
        }
    }
    Ok(())
}
