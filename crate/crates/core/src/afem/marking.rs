use crate::error::{Error, Result};

/// Dörfler marking: the shortest prefix of the indicators sorted descending
/// (ties by ascending id) with `Σ_M η_T² ≥ θ² Σ_T η_T²`. Elements with a
/// zero indicator are never marked, so the set is empty iff the total is zero.
/// Returns ascending ids.
pub fn doerfler_mark(indicators: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Argument(format!("Dörfler parameter {theta} outside (0, 1]")));
    }
    if let Some(t) = indicators.iter().position(|&x| !(x >= 0.0)) {
        return Err(Error::Argument(format!(
            "indicator of element {t} is {} (must be non-negative)",
            indicators[t]
        )));
    }
    let mut order: Vec<usize> = (0..indicators.len()).filter(|&t| indicators[t] > 0.0).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&t| indicators[t].powi(2)).sum();
    // θ² carries rounding from squaring a user-given θ
    let target = theta * theta * total * (1.0 - 4.0 * f64::EPSILON);
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for t in order {
        if acc >= target {
            break;
        }
        acc += indicators[t].powi(2);
        marked.push(t);
    }
    if theta == 1.0 {
        // rounding in the running sum must not drop positive indicators
        marked = (0..indicators.len()).filter(|&t| indicators[t] > 0.0).collect();
    }
    marked.sort_unstable();
    Ok(marked)
}
