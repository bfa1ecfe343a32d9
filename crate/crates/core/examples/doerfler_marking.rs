//! Dörfler marking: the smallest set carrying a θ² share of the squared total.

use hypercircle::afem::doerfler_mark;
use hypercircle::Result;

fn main() -> Result<()> {
    let indicators = [0.1, 0.9, 0.3, 0.3, 0.05, 0.6, 0.0];
    let total: f64 = indicators.iter().map(|x| x * x).sum();
    for theta in [0.3, 0.5, 0.7, 0.9, 1.0] {
        let marked = doerfler_mark(&indicators, theta)?;
        let share: f64 = marked.iter().map(|&i| indicators[i] * indicators[i]).sum::<f64>() / total;
        println!("theta = {theta:.1}: marked {marked:?}, share {share:.3} >= {:.3}", theta * theta);
    }
    Ok(())
}
